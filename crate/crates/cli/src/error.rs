use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{}: no observations", .0.display())]
    NoObservations(PathBuf),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] locmix_core::Error),
}

impl CliError {
    pub fn in_file(self, path: &std::path::Path) -> CliError {
        match self {
            CliError::Parse { line, message } => CliError::Parse {
                line,
                message: format!("{}: {message}", path.display()),
            },
            other => other,
        }
    }
}

pub fn read_file(path: &std::path::Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_file(path: &std::path::Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}
