use std::fmt;
use std::process::ExitCode;

/// Failure of a CLI invocation, mapped onto a process exit code.
#[derive(Debug)]
pub enum CliError {
    /// The scenario is malformed or inconsistent; `pointer` is a JSON
    /// pointer to the offending field (empty for the document root).
    Schema { pointer: String, message: String },
    /// The numerics failed while running a valid scenario.
    Numerical(String),
    /// Reading the scenario or writing outputs failed.
    Io(String),
    /// A verification run completed with failing checks.
    ChecksFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn schema(pointer: impl Into<String>, message: impl fmt::Display) -> Self {
        Self::Schema {
            pointer: pointer.into(),
            message: message.to_string(),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code())
    }

    pub fn code(&self) -> u8 {
        match self {
            CliError::Schema { .. } => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) | CliError::ChecksFailed { .. } => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Schema { pointer, message } => {
                let at = if pointer.is_empty() { "/" } else { pointer };
                write!(f, "scenario error at {at}: {message}")
            }
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::ChecksFailed { failed, total } => write!(f, "{failed} of {total} checks failed"),
        }
    }
}

impl std::error::Error for CliError {}

/// Attach a field pointer to a core error raised while building objects
/// from the scenario.
pub trait SchemaContext<T> {
    fn at(self, pointer: &str) -> Result<T, CliError>;
}

impl<T> SchemaContext<T> for geomech::Result<T> {
    fn at(self, pointer: &str) -> Result<T, CliError> {
        self.map_err(|e| CliError::schema(pointer, e))
    }
}

/// Core errors raised while integrating or solving are numerical failures.
pub trait NumericalContext<T> {
    fn numerics(self, what: &str) -> Result<T, CliError>;
}

impl<T> NumericalContext<T> for geomech::Result<T> {
    fn numerics(self, what: &str) -> Result<T, CliError> {
        self.map_err(|e| CliError::Numerical(format!("{what}: {e}")))
    }
}
