// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fmt;

/// Process exit status for a successful run.
pub const EXIT_OK: i32 = 0;
/// Bad input: unreadable or invalid files, bad flags, unknown names.
pub const EXIT_INPUT: i32 = 2;
/// Anything else.
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Input(anyhow::Error),
    Internal(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }

    pub fn input(msg: impl fmt::Display) -> Self {
        CliError::Input(anyhow::anyhow!("{msg}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(e) => write!(f, "invalid input: {e:#}"),
            CliError::Internal(e) => write!(f, "internal error: {e:#}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<segeval_core::Error> for CliError {
    fn from(e: segeval_core::Error) -> Self {
        if e.is_validation() {
            CliError::Input(e.into())
        } else {
            CliError::Internal(e.into())
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Tags an error with the exit status it should produce.
pub trait Classify<T> {
    /// Failure caused by what the user supplied.
    fn input(self, context: impl fmt::Display) -> CliResult<T>;
    /// Failure of the tool itself or its environment.
    fn internal(self, context: impl fmt::Display) -> CliResult<T>;
}

impl<T, E> Classify<T> for Result<T, E>
where
    E: Into<anyhow::Error>,
{
    fn input(self, context: impl fmt::Display) -> CliResult<T> {
        self.map_err(|e| CliError::Input(e.into().context(context.to_string())))
    }

    fn internal(self, context: impl fmt::Display) -> CliResult<T> {
        self.map_err(|e| CliError::Internal(e.into().context(context.to_string())))
    }
}
