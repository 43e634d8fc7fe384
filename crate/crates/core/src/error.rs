use core::fmt;

/// Why a log line or token could not be parsed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[non_exhaustive]
pub enum Reason {
    MissingFields,
    UnbalancedQuote,
    UnbalancedBracket,
    BadTimestamp,
    UnknownMonth,
    InvalidDate,
    BadOffset,
    BadRequest,
    BadStatus,
    BadBytes,
    TrailingFields,
    UnexpectedField,
    BadStamp,
}

impl Reason {
    pub fn as_str(&self) -> &'static str {
        match self {
            Reason::MissingFields => "missing fields",
            Reason::UnbalancedQuote => "unbalanced quotes",
            Reason::UnbalancedBracket => "unbalanced brackets",
            Reason::BadTimestamp => "malformed timestamp",
            Reason::UnknownMonth => "unknown month abbreviation",
            Reason::InvalidDate => "invalid calendar date or time",
            Reason::BadOffset => "malformed UTC offset",
            Reason::BadRequest => "malformed request field",
            Reason::BadStatus => "status is not a three-digit code in 100-599",
            Reason::BadBytes => "malformed response size",
            Reason::TrailingFields => "unexpected trailing fields",
            Reason::UnexpectedField => "unexpected field before timestamp",
            Reason::BadStamp => "malformed Memento-Datetime stamp",
        }
    }
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A parse failure, located by byte offset into the input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParseError {
    pub offset: usize,
    pub reason: Reason,
}

impl ParseError {
    pub const fn new(offset: usize, reason: Reason) -> Self {
        ParseError { offset, reason }
    }

    pub(crate) const fn shifted(self, by: usize) -> Self {
        ParseError { offset: self.offset + by, reason: self.reason }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at byte {}", self.reason, self.offset)
    }
}

impl core::error::Error for ParseError {}
