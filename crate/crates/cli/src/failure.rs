use std::fmt;

/// Process exit codes. Usage errors from argument parsing also exit with 2.
pub mod code {
    pub const CONFIG: i32 = 2;
    pub const IO: i32 = 3;
    pub const DOMAIN: i32 = 4;
    pub const CHECK: i32 = 5;
    pub const NO_CERTIFICATE: i32 = 6;
}

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Io(String),
    Domain(ordvar::Error),
    Check(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => code::CONFIG,
            Failure::Io(_) => code::IO,
            Failure::Domain(ordvar::Error::NoCertificate(_)) => code::NO_CERTIFICATE,
            Failure::Domain(ordvar::Error::Assertion(_)) => code::CHECK,
            Failure::Domain(_) => code::DOMAIN,
            Failure::Check(_) => code::CHECK,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::Io(m) => write!(f, "io error: {m}"),
            Failure::Domain(e) => write!(f, "{e}"),
            Failure::Check(m) => write!(f, "check failed: {m}"),
        }
    }
}

impl From<ordvar::Error> for Failure {
    fn from(e: ordvar::Error) -> Self {
        Failure::Domain(e)
    }
}
