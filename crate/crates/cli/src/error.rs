use std::fmt;

/// A failure reported as `error[CODE]: message` on one line.
#[derive(Debug)]
pub struct CliError {
    pub code: &'static str,
    pub exit: i32,
    pub message: String,
}

pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError { code: "E_CONFIG", exit: EXIT_CONFIG, message: message.into() }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        CliError { code: "E_USAGE", exit: EXIT_CONFIG, message: message.into() }
    }

    pub fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        let code = if err.kind() == std::io::ErrorKind::NotFound { "E_NOT_FOUND" } else { "E_IO" };
        CliError { code, exit: EXIT_RUNTIME, message: format!("{}: {err}", path.display()) }
    }

    pub fn runtime(code: &'static str, message: impl Into<String>) -> Self {
        CliError { code, exit: EXIT_RUNTIME, message: message.into() }
    }

    pub fn context(mut self, what: impl fmt::Display) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

impl From<ued::Error> for CliError {
    fn from(e: ued::Error) -> Self {
        use ued::Error as E;
        let (code, exit) = match &e {
            E::Config(_) => ("E_CONFIG", EXIT_CONFIG),
            E::Parse { .. } => ("E_PARSE", EXIT_CONFIG),
            E::Validation(_) => ("E_VALIDATION", EXIT_CONFIG),
            E::WrongKind { .. } => ("E_KIND", EXIT_CONFIG),
            E::ShapeMismatch { .. } => ("E_SHAPE", EXIT_CONFIG),
            E::UnknownLevel(_) => ("E_UNKNOWN_ID", EXIT_RUNTIME),
            E::Checkpoint(_) => ("E_CHECKPOINT", EXIT_RUNTIME),
            E::NonFinite(_) => ("E_NONFINITE", EXIT_RUNTIME),
            E::Io(io) if io.kind() == std::io::ErrorKind::NotFound => ("E_NOT_FOUND", EXIT_RUNTIME),
            E::Io(_) => ("E_IO", EXIT_RUNTIME),
            _ => ("E_RUNTIME", EXIT_RUNTIME),
        };
        CliError { code, exit, message: e.to_string() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let flat: Vec<&str> = self.message.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        write!(f, "error[{}]: {}", self.code, flat.join("; "))
    }
}

pub type CliResult<T> = Result<T, CliError>;
