use std::process::ExitCode;

use bnftrace::classical::ClassicalError;
use bnftrace::hypcalc::HypError;
use bnftrace::qbnf::QbnfError;
use bnftrace::recover::RecoverError;
use bnftrace::schema::FormatError;

/// A failed command: bad input (exit 2) or failed mathematics (exit 3).
#[derive(Debug)]
pub enum Failure {
    Schema(String),
    Math(String),
}

impl Failure {
    pub fn report(&self) -> ExitCode {
        match self {
            Failure::Schema(m) => {
                eprintln!("error: {m}");
                ExitCode::from(2)
            }
            Failure::Math(m) => {
                eprintln!("error: {m}");
                ExitCode::from(3)
            }
        }
    }

    fn classify(math: bool, msg: String) -> Self {
        if math {
            Failure::Math(msg)
        } else {
            Failure::Schema(msg)
        }
    }
}

impl From<FormatError> for Failure {
    fn from(e: FormatError) -> Self {
        Failure::Schema(e.to_string())
    }
}

impl From<QbnfError> for Failure {
    fn from(e: QbnfError) -> Self {
        Self::classify(e.is_math(), e.to_string())
    }
}

impl From<RecoverError> for Failure {
    fn from(e: RecoverError) -> Self {
        Self::classify(e.is_math(), e.to_string())
    }
}

impl From<ClassicalError> for Failure {
    fn from(e: ClassicalError) -> Self {
        Self::classify(e.is_math(), e.to_string())
    }
}

impl From<HypError> for Failure {
    fn from(e: HypError) -> Self {
        let math = matches!(e, HypError::Pole { .. } | HypError::Nonconvergent { .. });
        Self::classify(math, e.to_string())
    }
}

pub type CmdResult = Result<(), Failure>;
