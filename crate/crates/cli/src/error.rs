use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or output path: exit status 2.
    Validation(String),
    /// The computation itself failed: exit status 1.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Validation(_) => ExitCode::from(2),
            CliError::Numerical(_) => ExitCode::from(1),
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Numerical(m) => m,
        }
    }
}

impl From<rendezvous_core::Error> for CliError {
    fn from(e: rendezvous_core::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

pub fn io_error(what: &str, e: std::io::Error) -> CliError {
    CliError::Validation(format!("{what}: {e}"))
}
