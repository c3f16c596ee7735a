use std::path::Path;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Numerical(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_IO,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<coverest::Error> for CliError {
    fn from(e: coverest::Error) -> Self {
        use coverest::Error as E;
        let msg = e.to_string();
        match e {
            E::Config(_) | E::Usage(_) | E::Shape { .. } | E::Empty(_) => CliError::Config(msg),
            E::Io { .. } | E::Format { .. } | E::Length { .. } | E::Json { .. } | E::Csv { .. } | E::Geometry(_) => {
                CliError::Io(msg)
            }
            E::Diverged { .. } | E::InvalidValue(_) => CliError::Numerical(msg),
        }
    }
}
