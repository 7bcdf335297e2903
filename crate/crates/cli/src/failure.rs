use std::fmt;

/// Exit code 1 for bad input, 2 for I/O and network trouble.
#[derive(Debug)]
pub enum Failure {
    Invalid(String),
    Io(String),
    /// Already reported; exit with the given code without another message.
    Reported(u8),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Io(_) => 2,
            Failure::Reported(code) => *code,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Invalid(msg) | Failure::Io(msg) => f.write_str(msg),
            Failure::Reported(_) => Ok(()),
        }
    }
}

impl From<labforge_core::Error> for Failure {
    fn from(e: labforge_core::Error) -> Self {
        if e.is_validation() {
            Failure::Invalid(e.to_string())
        } else {
            Failure::Io(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}
