use std::fmt;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// A command failure, tagged with the stage that produced it.
#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration or input files; exit code 2.
    Config(String),
    /// Failure while doing the work; exit code 1.
    Runtime { stage: &'static str, message: String },
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn runtime(stage: &'static str, message: impl fmt::Display) -> Self {
        CliError::Runtime {
            stage,
            message: message.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime { .. } => EXIT_RUNTIME,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Runtime { stage, message } => write!(f, "{stage} failed: {message}"),
        }
    }
}

impl std::error::Error for CliError {}

/// Attaches a stage to library errors; configuration errors keep exit code 2.
pub trait Stage<T> {
    fn stage(self, stage: &'static str) -> CliResult<T>;
}

impl<T> Stage<T> for augforge_core::Result<T> {
    fn stage(self, stage: &'static str) -> CliResult<T> {
        self.map_err(|e| match e {
            augforge_core::Error::Config(m) => CliError::Config(format!("{stage}: {m}")),
            other => CliError::runtime(stage, other),
        })
    }
}

impl<T> Stage<T> for std::io::Result<T> {
    fn stage(self, stage: &'static str) -> CliResult<T> {
        self.map_err(|e| CliError::runtime(stage, e))
    }
}
