//! Election data and the continuous two-tier allocation.
//!
//! An election is a list of single-member districts with integer vote counts
//! per party. Seats are split between the district tier (share `alpha`) and a
//! list tier whose per-party pools are formed from the district votes under
//! one of three transfer formulas:
//!
//! - DVT: the pool is the party's direct votes only;
//! - PVT: votes cast for losing candidates are added;
//! - NVT: additionally the winner's surplus over the runner-up is added.
//!
//! Pools are exact integers. Shares are the only floating-point quantities.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifier of a party (or party list) within one election.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PartyId(String);

impl PartyId {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.trim().is_empty() {
            return Err(Error::InvalidParty(id));
        }
        Ok(PartyId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for PartyId {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        PartyId::new(value)
    }
}

impl From<PartyId> for String {
    fn from(value: PartyId) -> Self {
        value.0
    }
}

impl FromStr for PartyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PartyId::new(s)
    }
}

/// Rule used to turn district votes into list-tier pools.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TransferFormula {
    /// Direct vote transfer: no correction votes.
    #[serde(rename = "DVT")]
    Dvt,
    /// Positive vote transfer: losing candidates' votes are added.
    #[serde(rename = "PVT")]
    Pvt,
    /// Negative vote transfer: losing votes plus the winner's surplus.
    #[serde(rename = "NVT")]
    Nvt,
}

impl TransferFormula {
    pub const ALL: [TransferFormula; 3] = [TransferFormula::Dvt, TransferFormula::Pvt, TransferFormula::Nvt];

    pub fn name(self) -> &'static str {
        match self {
            TransferFormula::Dvt => "DVT",
            TransferFormula::Pvt => "PVT",
            TransferFormula::Nvt => "NVT",
        }
    }

    /// Position in [`TransferFormula::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    fn counts_losing(self) -> bool {
        self != TransferFormula::Dvt
    }

    fn counts_surplus(self) -> bool {
        self == TransferFormula::Nvt
    }
}

impl fmt::Display for TransferFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TransferFormula {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "DVT" => Ok(TransferFormula::Dvt),
            "PVT" => Ok(TransferFormula::Pvt),
            "NVT" => Ok(TransferFormula::Nvt),
            _ => Err(Error::validation(format!("unknown transfer formula {s:?}"))),
        }
    }
}

/// Share of seats filled in single-member districts, in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct MixRatio(f64);

impl MixRatio {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidMixRatio(alpha));
        }
        Ok(MixRatio(alpha))
    }

    /// Ratio of `constituency_seats` to `total_seats`, e.g. 106 of 199.
    pub fn from_seats(constituency_seats: u32, total_seats: u32) -> Result<Self> {
        if total_seats == 0 {
            return Err(Error::InvalidMixRatio(f64::NAN));
        }
        MixRatio::new(f64::from(constituency_seats) / f64::from(total_seats))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for MixRatio {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        MixRatio::new(value)
    }
}

impl From<MixRatio> for f64 {
    fn from(value: MixRatio) -> Self {
        value.0
    }
}

/// Vote counts of one district as supplied by a caller.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistrictResult {
    pub district_id: String,
    pub votes: Vec<(PartyId, u64)>,
}

impl DistrictResult {
    pub fn new(district_id: impl Into<String>, votes: impl IntoIterator<Item = (PartyId, u64)>) -> Self {
        DistrictResult {
            district_id: district_id.into(),
            votes: votes.into_iter().collect(),
        }
    }
}

/// How a tie for first place in a district is handled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum TieRule {
    /// The tied party listed first in the election's party order wins; the
    /// district is flagged as tied.
    #[default]
    PartyOrder,
    /// Any tie is an error.
    Strict,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct District {
    pub(crate) id: String,
    /// Indexed by party position; `None` where the party fielded no candidate.
    pub(crate) votes: Vec<Option<u64>>,
}

impl District {
    pub(crate) fn count(&self, party: usize) -> u64 {
        self.votes[party].unwrap_or(0)
    }

    pub(crate) fn total(&self) -> u64 {
        self.votes.iter().flatten().sum()
    }
}

/// First and second place in a district.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DistrictOutcome {
    pub winner: usize,
    pub winner_votes: u64,
    pub runner_up_votes: u64,
    pub tied: bool,
}

impl DistrictOutcome {
    /// Winner votes not needed to carry the district.
    pub fn surplus(&self) -> u64 {
        self.winner_votes - self.runner_up_votes
    }
}

/// Winner of a district, by party id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Winner {
    pub party: PartyId,
    pub tied: bool,
}

/// A validated election: parties, per-district votes and optional separate
/// national list votes.
#[derive(Clone, Debug, PartialEq)]
pub struct ElectionInput {
    parties: Vec<PartyId>,
    districts: Vec<District>,
    list_votes: Option<Vec<u64>>,
    equal_size: bool,
    tie_rule: TieRule,
}

impl ElectionInput {
    pub fn new(
        parties: Vec<PartyId>,
        districts: Vec<DistrictResult>,
        list_votes: Option<Vec<(PartyId, u64)>>,
    ) -> Result<Self> {
        if parties.is_empty() {
            return Err(Error::validation("election must have at least one party"));
        }
        let mut seen = HashSet::new();
        for p in &parties {
            if !seen.insert(p) {
                return Err(Error::validation(format!("party ids must be unique ({p} repeated)")));
            }
        }
        let index_of = |p: &PartyId| parties.iter().position(|q| q == p);

        if districts.is_empty() {
            return Err(Error::validation("election must have at least one district"));
        }
        let mut district_ids = HashSet::new();
        let mut dense = Vec::with_capacity(districts.len());
        for d in districts {
            if !district_ids.insert(d.district_id.clone()) {
                return Err(Error::validation(format!(
                    "district ids must be unique ({} repeated)",
                    d.district_id
                )));
            }
            let mut votes = vec![None; parties.len()];
            for (party, count) in &d.votes {
                let i = index_of(party).ok_or_else(|| {
                    Error::validation(format!(
                        "district {} names party {party} not in the party list",
                        d.district_id
                    ))
                })?;
                if votes[i].replace(*count).is_some() {
                    return Err(Error::validation(format!(
                        "district {} lists party {party} more than once",
                        d.district_id
                    )));
                }
            }
            if d.votes.len() < 2 {
                return Err(Error::validation(format!(
                    "district {} must have entries for at least two parties",
                    d.district_id
                )));
            }
            if d.votes.iter().all(|(_, c)| *c == 0) {
                return Err(Error::validation(format!("district {} has no votes", d.district_id)));
            }
            dense.push(District {
                id: d.district_id,
                votes,
            });
        }

        let list_votes = match list_votes {
            None => None,
            Some(entries) => {
                let mut lv = vec![0; parties.len()];
                let mut given = vec![false; parties.len()];
                for (party, count) in entries {
                    let i = index_of(&party).ok_or_else(|| {
                        Error::validation(format!("list votes name party {party} not in the party list"))
                    })?;
                    if std::mem::replace(&mut given[i], true) {
                        return Err(Error::validation(format!(
                            "list votes name party {party} more than once"
                        )));
                    }
                    lv[i] = count;
                }
                Some(lv)
            }
        };

        let first_total = dense[0].total();
        let equal_size = dense.iter().all(|d| d.total() == first_total);
        Ok(ElectionInput {
            parties,
            districts: dense,
            list_votes,
            equal_size,
            tie_rule: TieRule::default(),
        })
    }

    /// Overrides the equal-electorate flag, which defaults to "all districts
    /// cast the same number of votes".
    pub fn with_equal_size(mut self, equal_size: bool) -> Self {
        self.equal_size = equal_size;
        self
    }

    pub fn with_tie_rule(mut self, tie_rule: TieRule) -> Self {
        self.tie_rule = tie_rule;
        self
    }

    pub fn parties(&self) -> &[PartyId] {
        &self.parties
    }

    pub fn party_index(&self, party: &PartyId) -> Option<usize> {
        self.parties.iter().position(|p| p == party)
    }

    pub fn num_districts(&self) -> usize {
        self.districts.len()
    }

    pub fn district_ids(&self) -> impl Iterator<Item = &str> {
        self.districts.iter().map(|d| d.id.as_str())
    }

    pub fn district_index(&self, district_id: &str) -> Option<usize> {
        self.districts.iter().position(|d| d.id == district_id)
    }

    /// Votes for `party` in district number `district`; absent entries are 0.
    pub fn votes(&self, district: usize, party: usize) -> u64 {
        self.districts[district].count(party)
    }

    /// Whether `party` has an explicit entry in `district`.
    pub fn has_entry(&self, district: usize, party: usize) -> bool {
        self.districts[district].votes[party].is_some()
    }

    pub fn district_total(&self, district: usize) -> u64 {
        self.districts[district].total()
    }

    pub fn list_votes(&self) -> Option<&[u64]> {
        self.list_votes.as_deref()
    }

    pub fn is_equal_size(&self) -> bool {
        self.equal_size
    }

    pub fn tie_rule(&self) -> TieRule {
        self.tie_rule
    }

    pub(crate) fn districts(&self) -> &[District] {
        &self.districts
    }

    pub(crate) fn from_parts(
        parties: Vec<PartyId>,
        districts: Vec<District>,
        list_votes: Option<Vec<u64>>,
        equal_size: bool,
        tie_rule: TieRule,
    ) -> Self {
        ElectionInput {
            parties,
            districts,
            list_votes,
            equal_size,
            tie_rule,
        }
    }

    /// First and second place in district number `district`.
    pub fn district_outcome(&self, district: usize) -> DistrictOutcome {
        outcome(&self.districts[district])
    }

    pub fn district_winner(&self, district: usize) -> Winner {
        let o = self.district_outcome(district);
        Winner {
            party: self.parties[o.winner].clone(),
            tied: o.tied,
        }
    }

    /// Number of districts won by each party.
    pub fn districts_won(&self) -> Result<Vec<u32>> {
        let mut won = vec![0u32; self.parties.len()];
        for d in &self.districts {
            let o = self.checked_outcome(d)?;
            won[o.winner] += 1;
        }
        Ok(won)
    }

    fn checked_outcome(&self, d: &District) -> Result<DistrictOutcome> {
        let o = outcome(d);
        if o.tied && self.tie_rule == TieRule::Strict {
            return Err(Error::TiedDistrict { district: d.id.clone() });
        }
        Ok(o)
    }
}

fn outcome(d: &District) -> DistrictOutcome {
    // Strictly greater keeps the earliest party on ties.
    let mut winner = 0;
    for i in 1..d.votes.len() {
        if d.count(i) > d.count(winner) {
            winner = i;
        }
    }
    let runner_up_votes = (0..d.votes.len())
        .filter(|&i| i != winner)
        .map(|i| d.count(i))
        .max()
        .unwrap_or(0);
    let winner_votes = d.count(winner);
    DistrictOutcome {
        winner,
        winner_votes,
        runner_up_votes,
        tied: winner_votes == runner_up_votes,
    }
}

/// Pool components of one party.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartyPool {
    /// Candidate votes, or list votes in the two-vote case.
    pub direct: u64,
    /// Votes cast for the party's losing candidates.
    pub losing: u64,
    /// Winner votes above the runner-up, summed over districts won.
    pub winning_surplus: u64,
    /// Pool under the formula the pools were computed for.
    pub total: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CorrectionPools {
    pub formula: TransferFormula,
    pub parties: Vec<PartyId>,
    pub pools: Vec<PartyPool>,
}

impl CorrectionPools {
    pub fn totals(&self) -> Vec<u64> {
        self.pools.iter().map(|p| p.total).collect()
    }

    pub fn get(&self, party: &PartyId) -> Option<&PartyPool> {
        self.parties.iter().position(|p| p == party).map(|i| &self.pools[i])
    }
}

/// Per-party list pools under formula `f`.
///
/// Corrections always come from candidate votes; when separate list votes are
/// present they replace the candidate votes as the direct component.
pub fn correction_pools(e: &ElectionInput, f: TransferFormula) -> Result<CorrectionPools> {
    let n = e.parties.len();
    let mut pools = vec![PartyPool::default(); n];
    for d in &e.districts {
        let o = e.checked_outcome(d)?;
        for (i, pool) in pools.iter_mut().enumerate() {
            let v = d.count(i);
            pool.direct += v;
            if i == o.winner {
                pool.winning_surplus += o.surplus();
            } else {
                pool.losing += v;
            }
        }
    }
    if let Some(lv) = &e.list_votes {
        for (pool, &v) in pools.iter_mut().zip(lv) {
            pool.direct = v;
        }
    }
    for pool in &mut pools {
        pool.total = pool.direct;
        if f.counts_losing() {
            pool.total += pool.losing;
        }
        if f.counts_surplus() {
            pool.total += pool.winning_surplus;
        }
    }
    Ok(CorrectionPools {
        formula: f,
        parties: e.parties.clone(),
        pools,
    })
}

/// Real-valued seat shares of the continuous model.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContinuousAllocation {
    pub formula: TransferFormula,
    pub alpha: MixRatio,
    pub parties: Vec<PartyId>,
    pub constituency_share: Vec<f64>,
    pub list_share: Vec<f64>,
    pub seat_share: Vec<f64>,
}

impl ContinuousAllocation {
    pub fn seat_share_of(&self, party: &PartyId) -> Option<f64> {
        self.parties.iter().position(|p| p == party).map(|i| self.seat_share[i])
    }
}

/// Normalizes integer pools to shares.
pub fn normalize(pools: &[u64]) -> Result<Vec<f64>> {
    let sum: u64 = pools.iter().sum();
    if sum == 0 {
        return Err(Error::EmptyPools);
    }
    let sum = sum as f64;
    Ok(pools.iter().map(|&p| p as f64 / sum).collect())
}

/// Mixes district-tier and list-tier shares: `alpha * c + (1 - alpha) * l`.
pub fn mix(alpha: MixRatio, constituency_share: f64, list_share: f64) -> f64 {
    let a = alpha.value();
    a * constituency_share + (1.0 - a) * list_share
}

pub fn continuous_allocation(e: &ElectionInput, f: TransferFormula, m: MixRatio) -> Result<ContinuousAllocation> {
    let pools = correction_pools(e, f)?;
    let won = e.districts_won()?;
    let n = e.num_districts() as f64;
    let constituency_share: Vec<f64> = won.iter().map(|&w| f64::from(w) / n).collect();
    let list_share = normalize(&pools.totals())?;
    let seat_share = constituency_share
        .iter()
        .zip(&list_share)
        .map(|(&c, &l)| mix(m, c, l))
        .collect();
    Ok(ContinuousAllocation {
        formula: f,
        alpha: m,
        parties: e.parties.clone(),
        constituency_share,
        list_share,
        seat_share,
    })
}
