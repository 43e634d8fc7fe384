//! File access with transparent gzip.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use sha2::{Digest, Sha256};

const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];
const BUF: usize = 1 << 20;

/// Opens a file for reading, decompressing it if it starts with the gzip
/// magic bytes.
pub fn open_input(path: &Path) -> io::Result<Box<dyn BufRead + Send>> {
    let file = File::open(path)?;
    wrap_reader(file)
}

fn wrap_reader<R: Read + Send + 'static>(inner: R) -> io::Result<Box<dyn BufRead + Send>> {
    let mut reader = BufReader::with_capacity(BUF, inner);
    let head = reader.fill_buf()?;
    if head.starts_with(&GZIP_MAGIC) {
        Ok(Box::new(BufReader::with_capacity(BUF, MultiGzDecoder::new(reader))))
    } else {
        Ok(Box::new(reader))
    }
}

/// Like [`open_input`], but also hashes the raw file bytes as they are read.
/// The digest is available from the returned handle once reading is done.
pub fn open_hashed(path: &Path) -> io::Result<(Box<dyn BufRead + Send>, DigestHandle)> {
    let file = File::open(path)?;
    let handle = DigestHandle::default();
    let reader = HashingReader { inner: file, handle: handle.clone() };
    Ok((wrap_reader(reader)?, handle))
}

#[derive(Clone, Default)]
pub struct DigestHandle(std::sync::Arc<std::sync::Mutex<Sha256>>);

impl DigestHandle {
    pub fn hex(&self) -> String {
        let h = self.0.lock().map(|h| h.clone()).unwrap_or_default();
        hex(&h.finalize())
    }
}

struct HashingReader<R> {
    inner: R,
    handle: DigestHandle,
}

impl<R: Read> Read for HashingReader<R> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let n = self.inner.read(buf)?;
        if let Ok(mut h) = self.handle.0.lock() {
            h.update(&buf[..n]);
        }
        Ok(n)
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> io::Result<String> {
    let mut f = File::open(path)?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 64 << 10];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            return Ok(hex(&h.finalize()));
        }
        h.update(&buf[..n]);
    }
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

pub fn is_gzip_path(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}

/// A buffered output file, gzip-compressed when the name ends in `.gz`.
/// Data only reaches its final name on [`Output::finish`].
pub struct Output {
    writer: Option<Box<dyn Write + Send>>,
    tmp: PathBuf,
    path: PathBuf,
}

impl Output {
    pub fn create(path: &Path) -> io::Result<Output> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(".partial");
        let tmp = path.with_file_name(name);
        let file = BufWriter::with_capacity(BUF, File::create(&tmp)?);
        let writer: Box<dyn Write + Send> = if is_gzip_path(path) {
            Box::new(GzEncoder::new(file, Compression::fast()))
        } else {
            Box::new(file)
        };
        Ok(Output { writer: Some(writer), tmp, path: path.to_path_buf() })
    }

    pub fn finish(mut self) -> io::Result<()> {
        if let Some(mut w) = self.writer.take() {
            w.flush()?;
            drop(w);
        }
        std::fs::rename(&self.tmp, &self.path)
    }
}

impl Write for Output {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        match self.writer.as_mut() {
            Some(w) => w.write(buf),
            None => Err(io::Error::other("output already finished")),
        }
    }

    fn flush(&mut self) -> io::Result<()> {
        self.writer.as_mut().map_or(Ok(()), |w| w.flush())
    }
}

impl Drop for Output {
    fn drop(&mut self) {
        if self.writer.take().is_some() {
            let _ = std::fs::remove_file(&self.tmp);
        }
    }
}

/// Writes a whole file atomically.
pub fn write_file(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut out = Output::create(path)?;
    out.write_all(bytes)?;
    out.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gzip_is_transparent() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["a.txt", "a.txt.gz"] {
            let p = dir.path().join(name);
            write_file(&p, b"one\ntwo\n").unwrap();
            let mut s = String::new();
            open_input(&p).unwrap().read_to_string(&mut s).unwrap();
            assert_eq!(s, "one\ntwo\n");
        }
        let raw = std::fs::read(dir.path().join("a.txt.gz")).unwrap();
        assert!(raw.starts_with(&GZIP_MAGIC));
    }

    #[test]
    fn hashed_reader_digests_raw_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.gz");
        write_file(&p, b"hello\n").unwrap();
        let (mut r, h) = open_hashed(&p).unwrap();
        let mut s = String::new();
        r.read_to_string(&mut s).unwrap();
        assert_eq!(s, "hello\n");
        assert_eq!(h.hex(), sha256_file(&p).unwrap());
    }

    #[test]
    fn unfinished_output_leaves_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("o.txt");
        {
            let mut o = Output::create(&p).unwrap();
            o.write_all(b"x").unwrap();
        }
        assert!(!p.exists());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }
}
