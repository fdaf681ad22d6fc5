//! Discrete seat allocation: district winners plus a d'Hondt list tier.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{correction_pools, ElectionInput, PartyId, TransferFormula};

/// Entry threshold as a fraction of the list-vote basis, in `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize)]
pub struct Threshold(f64);

impl Threshold {
    pub const NONE: Threshold = Threshold(0.0);

    pub fn new(fraction: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&fraction) {
            return Err(Error::validation(format!("threshold {fraction} must be in [0, 1)")));
        }
        Ok(Threshold(fraction))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    fn excludes(self, pool: u64, basis: u64) -> bool {
        (pool as f64) < self.0 * basis as f64
    }
}

impl Default for Threshold {
    /// 5%.
    fn default() -> Self {
        Threshold(0.05)
    }
}

/// Exact seat fraction such as two thirds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeatFraction {
    num: u64,
    den: u64,
}

impl SeatFraction {
    pub const TWO_THIRDS: SeatFraction = SeatFraction { num: 2, den: 3 };

    /// `num / den`, which must lie in `(0, 1]`.
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if num == 0 || den == 0 || num > den {
            return Err(Error::validation(format!(
                "seat fraction {num}/{den} must be in (0, 1]"
            )));
        }
        let (mut a, mut b) = (num, den);
        while b != 0 {
            (a, b) = (b, a % b);
        }
        Ok(SeatFraction {
            num: num / a,
            den: den / a,
        })
    }

    /// Whether `seats / total` is at least this fraction.
    pub fn reached(self, seats: u32, total: u32) -> bool {
        u128::from(seats) * u128::from(self.den) >= u128::from(self.num) * u128::from(total)
    }
}

impl fmt::Display for SeatFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for SeatFraction {
    type Err = Error;

    /// Accepts `a/b` or a decimal such as `0.5`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::validation(format!("cannot parse seat fraction {s:?}"));
        if let Some((n, d)) = s.split_once('/') {
            return SeatFraction::new(
                n.trim().parse().map_err(|_| bad())?,
                d.trim().parse().map_err(|_| bad())?,
            );
        }
        let s = s.trim();
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if frac.len() > 18 || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let den = 10u64.pow(frac.len() as u32);
        let int: u64 = if int.is_empty() {
            0
        } else {
            int.parse().map_err(|_| bad())?
        };
        let frac: u64 = if frac.is_empty() {
            0
        } else {
            frac.parse().map_err(|_| bad())?
        };
        SeatFraction::new(int * den + frac, den)
    }
}

/// d'Hondt apportionment of `seats` list seats.
///
/// Parties whose pool is strictly below `threshold * basis` get nothing. Each
/// seat goes to the party with the largest `pool / (seats_so_far + 1)`,
/// compared by cross-multiplication; equal quotients go to the larger pool,
/// then to the earlier party.
pub fn dhondt(pools: &[u64], seats: u32, threshold: Threshold, basis: u64) -> Result<Vec<u32>> {
    let mut won = vec![0u32; pools.len()];
    if seats == 0 {
        return Ok(won);
    }
    let eligible: Vec<usize> = (0..pools.len())
        .filter(|&i| !threshold.excludes(pools[i], basis))
        .collect();
    if eligible.is_empty() {
        return Err(Error::AllPartiesExcluded);
    }
    if eligible.iter().all(|&i| pools[i] == 0) {
        return Err(Error::EmptyPools);
    }
    for _ in 0..seats {
        let mut best = eligible[0];
        for &i in &eligible[1..] {
            // pools[i] / (won[i] + 1) against pools[best] / (won[best] + 1)
            let lhs = u128::from(pools[i]) * u128::from(won[best] + 1);
            let rhs = u128::from(pools[best]) * u128::from(won[i] + 1);
            if lhs > rhs || (lhs == rhs && pools[i] > pools[best]) {
                best = i;
            }
        }
        won[best] += 1;
    }
    Ok(won)
}

/// Parties, district seats and list pools for one formula.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ListTier {
    pub formula: TransferFormula,
    pub parties: Vec<PartyId>,
    pub constituency_seats: Vec<u32>,
    pub pools: Vec<u64>,
}

impl ListTier {
    pub fn from_election(e: &ElectionInput, f: TransferFormula) -> Result<Self> {
        Ok(ListTier {
            formula: f,
            parties: e.parties().to_vec(),
            constituency_seats: e.districts_won()?,
            pools: correction_pools(e, f)?.totals(),
        })
    }

    /// Seats won in districts.
    pub fn district_seats(&self) -> u32 {
        self.constituency_seats.iter().sum()
    }
}

/// Aggregate pools per formula with district winners, as shipped in the
/// pool fixture files.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PoolTable {
    pub parties: Vec<PartyId>,
    pub constituency_seats: Vec<u32>,
    /// Indexed by [`TransferFormula::index`], then by party.
    pub pools: [Vec<u64>; 3],
}

impl PoolTable {
    pub fn tier(&self, f: TransferFormula) -> ListTier {
        ListTier {
            formula: f,
            parties: self.parties.clone(),
            constituency_seats: self.constituency_seats.clone(),
            pools: self.pools[f.index()].clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiscreteAllocation {
    pub formula: TransferFormula,
    pub parties: Vec<PartyId>,
    pub constituency_seats: Vec<u32>,
    pub list_seats: Vec<u32>,
    pub total_seats: Vec<u32>,
}

impl DiscreteAllocation {
    pub fn house_size(&self) -> u32 {
        self.total_seats.iter().sum()
    }

    pub fn list_seat_count(&self) -> u32 {
        self.list_seats.iter().sum()
    }

    pub fn seat_share(&self, party: usize) -> f64 {
        f64::from(self.total_seats[party]) / f64::from(self.house_size())
    }

    pub fn seat_shares(&self) -> Vec<f64> {
        (0..self.parties.len()).map(|i| self.seat_share(i)).collect()
    }

    pub fn index_of(&self, party: &PartyId) -> Option<usize> {
        self.parties.iter().position(|p| p == party)
    }

    /// Party with the most seats; the earlier party on ties.
    pub fn leader(&self) -> usize {
        let mut best = 0;
        for i in 1..self.total_seats.len() {
            if self.total_seats[i] > self.total_seats[best] {
                best = i;
            }
        }
        best
    }
}

#[derive(Serialize)]
struct AllocationRow<'a> {
    party: &'a PartyId,
    constituency_seats: u32,
    list_seats: u32,
    total_seats: u32,
    seat_share: f64,
}

#[derive(Serialize)]
struct AllocationJson<'a> {
    formula: TransferFormula,
    list_seats: u32,
    house_size: u32,
    parties: Vec<AllocationRow<'a>>,
}

impl Serialize for DiscreteAllocation {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        AllocationJson {
            formula: self.formula,
            list_seats: self.list_seat_count(),
            house_size: self.house_size(),
            parties: (0..self.parties.len())
                .map(|i| AllocationRow {
                    party: &self.parties[i],
                    constituency_seats: self.constituency_seats[i],
                    list_seats: self.list_seats[i],
                    total_seats: self.total_seats[i],
                    seat_share: self.seat_share(i),
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

/// Allocates `list_seats` by d'Hondt on top of the tier's district seats.
/// The threshold basis is the sum of the tier's pools.
pub fn allocate_tier(tier: &ListTier, list_seats: u32, threshold: Threshold) -> Result<DiscreteAllocation> {
    let basis = tier.pools.iter().sum();
    let won = dhondt(&tier.pools, list_seats, threshold, basis)?;
    let total_seats: Vec<u32> = tier.constituency_seats.iter().zip(&won).map(|(c, l)| c + l).collect();
    if total_seats.iter().all(|&s| s == 0) {
        return Err(Error::validation("allocation has no seats"));
    }
    Ok(DiscreteAllocation {
        formula: tier.formula,
        parties: tier.parties.clone(),
        constituency_seats: tier.constituency_seats.clone(),
        list_seats: won,
        total_seats,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApportionmentConfig {
    pub list_seats: u32,
    pub threshold: Threshold,
    /// District winners known in advance; checked against the district data.
    pub constituency_winners: Option<Vec<(PartyId, u32)>>,
}

impl ApportionmentConfig {
    pub fn new(list_seats: u32) -> Self {
        ApportionmentConfig {
            list_seats,
            threshold: Threshold::default(),
            constituency_winners: None,
        }
    }
}

pub fn allocate_discrete(
    e: &ElectionInput,
    f: TransferFormula,
    cfg: &ApportionmentConfig,
) -> Result<DiscreteAllocation> {
    let tier = ListTier::from_election(e, f)?;
    if let Some(supplied) = &cfg.constituency_winners {
        for (party, seats) in supplied {
            let i = e.party_index(party).ok_or_else(|| Error::UnknownParty(party.clone()))?;
            if tier.constituency_seats[i] != *seats {
                return Err(Error::WinnerMismatch {
                    party: party.clone(),
                    supplied: *seats,
                    computed: tier.constituency_seats[i],
                });
            }
        }
        for (i, party) in e.parties().iter().enumerate() {
            if tier.constituency_seats[i] > 0 && !supplied.iter().any(|(p, _)| p == party) {
                return Err(Error::WinnerMismatch {
                    party: party.clone(),
                    supplied: 0,
                    computed: tier.constituency_seats[i],
                });
            }
        }
    }
    allocate_tier(&tier, cfg.list_seats, cfg.threshold)
}

/// `sum_i (m_i - p_i)^2` over seat shares.
pub fn seat_diff(m: &DiscreteAllocation, p: &DiscreteAllocation) -> Result<f64> {
    if m.parties != p.parties {
        return Err(Error::PartyMismatch);
    }
    // Exact over the common denominator (M * P)^2.
    let mm = i128::from(m.house_size());
    let pp = i128::from(p.house_size());
    let num: i128 = m
        .total_seats
        .iter()
        .zip(&p.total_seats)
        .map(|(&a, &b)| {
            let d = i128::from(a) * pp - i128::from(b) * mm;
            d * d
        })
        .sum();
    let den = (mm * pp) * (mm * pp);
    Ok(num as f64 / den as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioRow {
    pub list_seats: u32,
    pub allocation: DiscreteAllocation,
    pub diff: f64,
    /// Whether each party holds at least two thirds of the seats.
    pub two_thirds: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub formula: TransferFormula,
    pub rows: Vec<ScenarioRow>,
    /// List-seat count with the smallest diff; the smallest such count on ties.
    pub min_diff_at: u32,
    pub min_diff: f64,
}

impl Sweep {
    pub fn row(&self, list_seats: u32) -> Option<&ScenarioRow> {
        self.rows.iter().find(|r| r.list_seats == list_seats)
    }

    pub fn best(&self) -> &ScenarioRow {
        self.row(self.min_diff_at).expect("min_diff_at is one of the rows")
    }
}

pub fn sweep_list_seats(
    tier: &ListTier,
    range: RangeInclusive<u32>,
    reference: &DiscreteAllocation,
    threshold: Threshold,
) -> Result<Sweep> {
    if range.is_empty() {
        return Err(Error::validation("list-seat range is empty"));
    }
    let rows: Vec<ScenarioRow> = range
        .into_par_iter()
        .map(|list_seats| {
            let allocation = allocate_tier(tier, list_seats, threshold)?;
            let diff = seat_diff(&allocation, reference)?;
            let house = allocation.house_size();
            let two_thirds = allocation
                .total_seats
                .iter()
                .map(|&s| SeatFraction::TWO_THIRDS.reached(s, house))
                .collect();
            Ok(ScenarioRow {
                list_seats,
                allocation,
                diff,
                two_thirds,
            })
        })
        .collect::<Result<_>>()?;
    let best = rows
        .iter()
        .min_by(|a, b| a.diff.total_cmp(&b.diff).then(a.list_seats.cmp(&b.list_seats)))
        .expect("range is non-empty");
    Ok(Sweep {
        formula: tier.formula,
        min_diff_at: best.list_seats,
        min_diff: best.diff,
        rows,
    })
}

/// Largest list-seat count `L` such that, for every count from the start of
/// `range` up to `L`, the leading party holds at least `fraction` of the
/// seats. `None` if it fails already at the start.
///
/// Seat shares are not monotone in `L` (the fraction can be regained after
/// being lost), so this is the first crossing, not the last `L` at which the
/// fraction holds.
pub fn supermajority_boundary(
    tier: &ListTier,
    fraction: SeatFraction,
    range: RangeInclusive<u32>,
    threshold: Threshold,
) -> Result<Option<u32>> {
    let mut last = None;
    for list_seats in range {
        let a = allocate_tier(tier, list_seats, threshold)?;
        if !fraction.reached(a.total_seats[a.leader()], a.house_size()) {
            break;
        }
        last = Some(list_seats);
    }
    Ok(last)
}
