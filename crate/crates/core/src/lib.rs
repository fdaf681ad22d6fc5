//! Mixed-member electoral systems with vote transfer between tiers.
//!
//! The constituency tier elects one winner per district by plurality. The
//! list tier is fed by a transfer formula that decides which constituency
//! votes count again: direct list votes only, votes for losing candidates,
//! or those plus the winner's surplus over the runner-up.

pub mod analytic;
pub mod apportionment;
pub mod dataio;
pub mod error;
pub mod manipulation;
pub mod model;
pub mod simulation;

pub use error::{Error, Result};
pub use model::{
    continuous_allocation, correction_pools, ContinuousAllocation, CorrectionPools, DistrictResult, ElectionInput,
    MixRatio, PartyId, TieRule, TransferFormula,
};
