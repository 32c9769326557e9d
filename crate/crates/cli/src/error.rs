use std::fmt;
use std::path::{Path, PathBuf};

/// Process exit codes.
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_PIPELINE: i32 = 5;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    /// bad configuration or incompatible artifact
    Config(String),
    Io(String),
    Pipeline(leafwet::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_IO,
            CliError::Pipeline(_) => EXIT_PIPELINE,
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Pipeline(e) => write!(f, "pipeline error: {e}"),
        }
    }
}

impl From<leafwet::Error> for CliError {
    fn from(e: leafwet::Error) -> Self {
        match e {
            leafwet::Error::Io { path, source } => CliError::io(&path, source),
            leafwet::Error::Schema(m) => CliError::Config(format!("incompatible artifact: {m}")),
            leafwet::Error::Manifest(m) => CliError::Config(format!("malformed dataset: {m}")),
            leafwet::Error::Json(e) => CliError::Config(format!("malformed JSON artifact: {e}")),
            e => CliError::Pipeline(e),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn write_file(path: PathBuf, contents: impl AsRef<[u8]>) -> CliResult<()> {
    std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))
}

pub fn create_dir(path: &Path) -> CliResult<()> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}
