//! Errors and their process exit codes.
//!
//! | code | meaning |
//! |------|---------|
//! | 0    | success (for `verify` and `attack`: the expected result was observed) |
//! | 1    | `verify` did not authenticate, or `attack` did not observe the expected result |
//! | 2    | bad input: arguments, config, hex, taxonomy |
//! | 3    | log or state file unreadable or inconsistent |
//! | 4    | tamper signal: a topic does not match its plain field, or a commitment/type mismatch |
//! | 10   | caller is not a whitelisted operator |
//! | 11   | zero token commitment on a content path |
//! | 12   | duplicate artifact id |
//! | 13   | artifact id was never reserved |
//! | 14   | unknown parent, target, account anchor or root |
//! | 15   | tree id mismatch |
//! | 16   | any other rejected registration |

use anchor_registry::eventlog::EventLogError;
use anchor_registry::reconstruction::ReconstructError;
use anchor_registry::registry::RegistryError;
use anchor_registry::verification::VerifyError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Unreadable(String),
    #[error("tamper signal: {0}")]
    Tamper(String),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    /// The command ran but the result was negative. The JSON result has
    /// already been printed.
    #[error("{0}")]
    Negative(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Negative(_) => 1,
            CliError::Input(_) => 2,
            CliError::Unreadable(_) => 3,
            CliError::Tamper(_) => 4,
            CliError::Registry(e) => match e {
                RegistryError::NotOperator(_) => 10,
                RegistryError::MissingTokenCommitment => 11,
                RegistryError::DuplicateArtifact(_) => 12,
                RegistryError::UnreservedId(_) => 13,
                RegistryError::UnknownParent(_) | RegistryError::UnknownTarget(_) | RegistryError::NoAccountAnchor(_) => 14,
                RegistryError::TreeIdMismatch | RegistryError::AccountTreeMismatch => 15,
                RegistryError::NoOperators | RegistryError::BadOperator(_) | RegistryError::BadTaxonomy(_) => 2,
                RegistryError::CorruptLog(_) => 3,
                _ => 16,
            },
            CliError::Verify(e) => match e {
                VerifyError::UnknownRoot(_) => 14,
                VerifyError::SeparationViolation(_) => 4,
                VerifyError::GovernanceAnchor => 16,
            },
        }
    }
}

impl From<EventLogError> for CliError {
    fn from(e: EventLogError) -> Self {
        match e {
            EventLogError::TopicMismatch { .. } => CliError::Tamper(e.to_string()),
            _ => CliError::Unreadable(format!("event log: {e}")),
        }
    }
}

impl From<ReconstructError> for CliError {
    fn from(e: ReconstructError) -> Self {
        CliError::Unreadable(format!("event log cannot be reconstructed: {e}"))
    }
}

pub fn input<E: std::fmt::Display>(what: &str) -> impl FnOnce(E) -> CliError + '_ {
    move |e| CliError::Input(format!("{what}: {e}"))
}
