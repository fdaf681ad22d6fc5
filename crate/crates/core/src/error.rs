use std::path::PathBuf;

use crate::model::PartyId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid party id {0:?}: party ids must be non-empty")]
    InvalidParty(String),

    #[error("validation failed: {invariant}")]
    Validation { invariant: String },

    #[error("district {district} is tied between the two leading parties")]
    TiedDistrict { district: String },

    #[error("mix ratio {0} is outside [0, 1]")]
    InvalidMixRatio(f64),

    #[error("vote share {0} is outside (0.5, 1]")]
    InvalidVoteShare(f64),

    #[error("no bound is defined for {0}")]
    NoBound(&'static str),

    #[error("infeasible construction: {0}")]
    InfeasibleConstruction(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("correction pools sum to zero")]
    EmptyPools,

    #[error("no party passes the threshold")]
    AllPartiesExcluded,

    #[error("supplied constituency winners disagree with district data for {party}: supplied {supplied}, computed {computed}")]
    WinnerMismatch {
        party: PartyId,
        supplied: u32,
        computed: u32,
    },

    #[error("allocations are over different party sets")]
    PartyMismatch,

    #[error("unknown district {0:?}")]
    UnknownDistrict(String),

    #[error("unknown party {0}")]
    UnknownParty(PartyId),

    #[error("{party} does not win district {district}")]
    NotAWinner { district: String, party: PartyId },

    #[error("margin delta {delta} exceeds the winning margin {max}")]
    DeltaTooLarge { delta: u64, max: u64 },

    #[error("{party} cannot concede district {district}: the runner-up has no votes")]
    CannotConcede { district: String, party: PartyId },

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("pools for {party} are not monotone (dvt <= pvt <= nvt required)")]
    MonotonicityViolation { party: PartyId },

    #[error("{party} has zero candidate votes")]
    ZeroCandidateVotes { party: PartyId },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn validation(invariant: impl Into<String>) -> Self {
        Error::Validation {
            invariant: invariant.into(),
        }
    }

    /// Stable machine-readable name of the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParty(_) => "InvalidParty",
            Error::Validation { .. } => "ValidationError",
            Error::TiedDistrict { .. } => "TiedDistrict",
            Error::InvalidMixRatio(_) => "InvalidMixRatio",
            Error::InvalidVoteShare(_) => "InvalidVoteShare",
            Error::NoBound(_) => "NoBound",
            Error::InfeasibleConstruction(_) => "InfeasibleConstruction",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::EmptyPools => "EmptyPools",
            Error::AllPartiesExcluded => "AllPartiesExcluded",
            Error::WinnerMismatch { .. } => "WinnerMismatch",
            Error::PartyMismatch => "PartyMismatch",
            Error::UnknownDistrict(_) => "UnknownDistrict",
            Error::UnknownParty(_) => "UnknownParty",
            Error::NotAWinner { .. } => "NotAWinner",
            Error::DeltaTooLarge { .. } => "DeltaTooLarge",
            Error::CannotConcede { .. } => "CannotConcede",
            Error::Parse { .. } => "ParseError",
            Error::MonotonicityViolation { .. } => "MonotonicityViolation",
            Error::ZeroCandidateVotes { .. } => "ZeroCandidateVotes",
            Error::Io { .. } => "IoError",
            Error::Json(_) => "JsonError",
        }
    }
}
