//! CLI error taxonomy mapped to exit codes: 2 parse, 3 validation, 4 runtime.

#[derive(Debug)]
pub enum CliError {
    Parse {
        line: usize,
        col: usize,
        msg: String,
    },
    Validation {
        field: String,
        msg: String,
    },
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } => 2,
            CliError::Validation { .. } => 3,
            CliError::Runtime(_) => 4,
        }
    }

    pub fn validation(field: impl Into<String>, msg: impl Into<String>) -> Self {
        CliError::Validation {
            field: field.into(),
            msg: msg.into(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Parse { line, col, msg } => {
                write!(f, "parse error at line {line}, column {col}: {msg}")
            }
            CliError::Validation { field, msg } => {
                write!(f, "validation error: field '{field}': {msg}")
            }
            CliError::Runtime(msg) => write!(f, "runtime error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}
