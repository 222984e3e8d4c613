//! Error taxonomy shared by every module in the crate.
//!
//! The variants map one-to-one onto the process exit codes documented in the
//! CLI: config, data, numeric, and so on. Each constructor takes a formatted
//! message so call sites can name the offending field, file, or value.

use std::fmt;

#[derive(Debug)]
pub enum Error {
    /// Wrong arity or tensor shape (e.g. a 146-point frame where 147 is required).
    Structural(String),
    /// A value outside its documented range (emotion id, gaze zone, weight < 1).
    Domain(String),
    /// Degenerate geometry: zero-width face, coincident points.
    Geometry(String),
    /// Non-finite values where finite math is required.
    Numeric(String),
    /// Malformed file content; the message names the file and location.
    Data(String),
    /// Invalid or inconsistent run configuration.
    Config(String),
    /// API misuse: missing checkpoint, missing cue feature, wrong call order.
    Usage(String),
    /// A stored artifact whose content hash does not match its header.
    Checksum(String),
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Structural(m) => write!(f, "structural error: {m}"),
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::Geometry(m) => write!(f, "geometry error: {m}"),
            Error::Numeric(m) => write!(f, "numeric error: {m}"),
            Error::Data(m) => write!(f, "data error: {m}"),
            Error::Config(m) => write!(f, "config error: {m}"),
            Error::Usage(m) => write!(f, "usage error: {m}"),
            Error::Checksum(m) => write!(f, "checksum error: {m}"),
            Error::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! error_ctor {
    ($fn_name:ident, $variant:ident) => {
        pub fn $fn_name(msg: impl Into<String>) -> Error {
            Error::$variant(msg.into())
        }
    };
}

impl Error {
    error_ctor!(structural, Structural);
    error_ctor!(domain, Domain);
    error_ctor!(geometry, Geometry);
    error_ctor!(numeric, Numeric);
    error_ctor!(data, Data);
    error_ctor!(config, Config);
    error_ctor!(usage, Usage);
    error_ctor!(checksum, Checksum);
}
