//! Lossless decoding of log bytes that are not valid UTF-8.
//!
//! Archive logs carry raw percent-encoded junk and the occasional binary
//! byte. Each byte of an invalid sequence is mapped to a private-use code
//! point `U+10FF00 + byte` (bytes are always `>= 0x80` there), so the text can
//! be handled as `str` and converted back to the exact original bytes.
//! Input that already contains one of those 128 code points is not
//! representable; no real log has been seen to contain them.

use alloc::borrow::Cow;
use alloc::string::String;
use alloc::vec::Vec;

const ESCAPE_BASE: u32 = 0x10_FF00;

/// Decodes `bytes`, mapping every byte of an invalid UTF-8 sequence to its
/// private-use stand-in. Borrowed when the input is valid UTF-8.
pub fn decode_lossless(bytes: &[u8]) -> Cow<'_, str> {
    match core::str::from_utf8(bytes) {
        Ok(s) => Cow::Borrowed(s),
        Err(_) => Cow::Owned(decode_slow(bytes)),
    }
}

fn decode_slow(mut bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() + 8);
    loop {
        match core::str::from_utf8(bytes) {
            Ok(s) => {
                out.push_str(s);
                return out;
            }
            Err(e) => {
                let (valid, rest) = bytes.split_at(e.valid_up_to());
                // valid_up_to guarantees this prefix decodes
                out.push_str(core::str::from_utf8(valid).unwrap_or_default());
                let bad = e.error_len().unwrap_or(rest.len());
                for &b in &rest[..bad] {
                    out.push(escape_byte(b));
                }
                bytes = &rest[bad..];
            }
        }
    }
}

fn escape_byte(b: u8) -> char {
    char::from_u32(ESCAPE_BASE + u32::from(b)).unwrap_or(char::REPLACEMENT_CHARACTER)
}

/// Inverse of [`decode_lossless`].
pub fn encode_lossless(text: &str) -> Vec<u8> {
    let mut out = Vec::with_capacity(text.len());
    for c in text.chars() {
        let v = c as u32;
        if (ESCAPE_BASE + 0x80..=ESCAPE_BASE + 0xFF).contains(&v) {
            out.push((v - ESCAPE_BASE) as u8);
        } else {
            let mut buf = [0u8; 4];
            out.extend_from_slice(c.encode_utf8(&mut buf).as_bytes());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn valid_utf8_is_borrowed() {
        assert!(matches!(decode_lossless(b"GET /web/ HTTP/1.1"), Cow::Borrowed(_)));
    }

    #[test]
    fn latin1_bytes_survive() {
        let raw = b"/web/2019/http://ex.org/caf\xe9.html";
        let text = decode_lossless(raw);
        assert!(text.starts_with("/web/2019/http://ex.org/caf"));
        assert_eq!(encode_lossless(&text), raw.to_vec());
    }

    proptest! {
        #[test]
        fn any_bytes_round_trip(raw in proptest::collection::vec(any::<u8>(), 0..200)) {
            let text = decode_lossless(&raw);
            prop_assert_eq!(encode_lossless(&text), raw);
        }
    }
}
