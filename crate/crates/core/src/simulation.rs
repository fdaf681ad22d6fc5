//! Monte Carlo harness for the two-party model.
//!
//! Each run draws A's vote share in every district independently from
//! `U[k - h, k + h]` (districts have equal size), evaluates the continuous
//! allocation under all three formulas and records which formulas give A a
//! strict seat majority.
//!
//! Run `i` draws from ChaCha8 stream `i` of the configured seed, so results
//! do not depend on how runs are scheduled across threads.

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::{MixRatio, TransferFormula};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    /// Expected district vote share of A.
    pub k: f64,
    /// Half-width of the uniform share distribution.
    pub h: f64,
    #[serde(default = "default_districts")]
    pub n_districts: u32,
    #[serde(default = "default_runs")]
    pub runs: u32,
    pub alpha: MixRatio,
    pub seed: u64,
}

fn default_districts() -> u32 {
    100
}

fn default_runs() -> u32 {
    10_000
}

impl SimulationConfig {
    /// 100 districts and 10 000 runs.
    pub fn new(k: f64, h: f64, alpha: MixRatio, seed: u64) -> Self {
        SimulationConfig {
            k,
            h,
            n_districts: default_districts(),
            runs: default_runs(),
            alpha,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.k.is_finite() || !self.h.is_finite() || self.h < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "k = {} and h = {} must be finite with h >= 0",
                self.k, self.h
            )));
        }
        if self.k - self.h < 0.0 || self.k + self.h > 1.0 {
            return Err(Error::InvalidConfig(format!(
                "share support [{}, {}] leaves [0, 1]",
                self.k - self.h,
                self.k + self.h
            )));
        }
        if self.n_districts == 0 {
            return Err(Error::InvalidConfig("n_districts must be at least 1".into()));
        }
        if self.runs == 0 {
            return Err(Error::InvalidConfig("runs must be at least 1".into()));
        }
        Ok(())
    }
}

/// Subset of the three formulas, as a bit mask indexed by
/// [`TransferFormula::index`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FormulaSet(u8);

impl FormulaSet {
    /// All eight subsets, largest first.
    pub const TABLE_ORDER: [FormulaSet; 8] = [
        FormulaSet(0b111),
        FormulaSet(0b011),
        FormulaSet(0b101),
        FormulaSet(0b110),
        FormulaSet(0b001),
        FormulaSet(0b010),
        FormulaSet(0b100),
        FormulaSet(0b000),
    ];

    pub fn empty() -> Self {
        FormulaSet(0)
    }

    pub fn with(self, f: TransferFormula) -> Self {
        FormulaSet(self.0 | 1 << f.index())
    }

    pub fn contains(self, f: TransferFormula) -> bool {
        self.0 & (1 << f.index()) != 0
    }

    /// `"DVT+PVT+NVT"`, ..., `"none"`.
    pub fn label(self) -> String {
        let names: Vec<&str> = TransferFormula::ALL
            .iter()
            .filter(|&&f| self.contains(f))
            .map(|f| f.name())
            .collect();
        if names.is_empty() {
            "none".to_string()
        } else {
            names.join("+")
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MajorityCell {
    pub subset: FormulaSet,
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationSummary {
    pub runs: u64,
    /// One cell per formula subset, in [`FormulaSet::TABLE_ORDER`].
    pub cells: Vec<MajorityCell>,
    /// Mean seat share of A, indexed by [`TransferFormula::index`].
    pub mean_seat_share: [f64; 3],
    /// Standard error of each mean.
    pub std_error: [f64; 3],
    /// Runs where DVT gives A a majority and NVT does not.
    pub dvt_only_majority: u64,
    /// Runs where NVT gives A a majority and DVT does not.
    pub nvt_only_majority: u64,
}

impl SimulationSummary {
    pub fn count(&self, subset: FormulaSet) -> u64 {
        self.cells.iter().find(|c| c.subset == subset).map_or(0, |c| c.count)
    }

    pub fn all_three(&self) -> u64 {
        self.count(FormulaSet::TABLE_ORDER[0])
    }

    pub fn mean(&self, f: TransferFormula) -> f64 {
        self.mean_seat_share[f.index()]
    }
}

struct LabelledCells<'a>(&'a [MajorityCell]);

impl Serialize for LabelledCells<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for cell in self.0 {
            map.serialize_entry(&cell.subset.label(), &cell.count)?;
        }
        map.end()
    }
}

struct PerFormula<'a>(&'a [f64; 3]);

impl Serialize for PerFormula<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(3))?;
        for f in TransferFormula::ALL {
            map.serialize_entry(f.name(), &self.0[f.index()])?;
        }
        map.end()
    }
}

impl Serialize for SimulationSummary {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("SimulationSummary", 6)?;
        s.serialize_field("runs", &self.runs)?;
        s.serialize_field("cells", &LabelledCells(&self.cells))?;
        s.serialize_field("mean_seat_share", &PerFormula(&self.mean_seat_share))?;
        s.serialize_field("std_error", &PerFormula(&self.std_error))?;
        s.serialize_field("dvt_only_majority", &self.dvt_only_majority)?;
        s.serialize_field("nvt_only_majority", &self.nvt_only_majority)?;
        s.end()
    }
}

/// A's shares in one two-party election with equal-size districts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoPartyShares {
    pub constituency_share: f64,
    /// List share under each formula.
    pub list_share: [f64; 3],
}

/// Continuous allocation for A given its vote share in each district.
/// A share of exactly one half goes to A, the first party.
pub fn two_party_shares(district_shares: &[f64]) -> TwoPartyShares {
    let n = district_shares.len() as f64;
    let mut direct = 0.0;
    let mut won = 0u32;
    let (mut losing_a, mut losing_b) = (0.0, 0.0);
    let (mut surplus_a, mut surplus_b) = (0.0, 0.0);
    for &s in district_shares {
        direct += s;
        if s >= 0.5 {
            won += 1;
            losing_b += 1.0 - s;
            surplus_a += 2.0 * s - 1.0;
        } else {
            losing_a += s;
            surplus_b += 1.0 - 2.0 * s;
        }
    }
    let pvt_total = n + losing_a + losing_b;
    let nvt_total = pvt_total + surplus_a + surplus_b;
    TwoPartyShares {
        constituency_share: f64::from(won) / n,
        list_share: [
            direct / n,
            (direct + losing_a) / pvt_total,
            (direct + losing_a + surplus_a) / nvt_total,
        ],
    }
}

impl TwoPartyShares {
    pub fn seat_share(&self, alpha: MixRatio, f: TransferFormula) -> f64 {
        crate::model::mix(alpha, self.constituency_share, self.list_share[f.index()])
    }
}

/// Seat shares of A in run number `run`.
pub fn simulate_run(c: &SimulationConfig, run: u64) -> Result<[f64; 3]> {
    let dist = Uniform::new_inclusive(c.k - c.h, c.k + c.h).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    rng.set_stream(run);
    let shares: Vec<f64> = (0..c.n_districts).map(|_| dist.sample(&mut rng)).collect();
    let two = two_party_shares(&shares);
    Ok(TransferFormula::ALL.map(|f| two.seat_share(c.alpha, f)))
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if f64::abs(sum) >= f64::abs(v) {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn run_simulation(c: &SimulationConfig) -> Result<SimulationSummary> {
    c.validate()?;
    let per_run: Vec<[f64; 3]> = (0..u64::from(c.runs))
        .into_par_iter()
        .map(|run| simulate_run(c, run))
        .collect::<Result<_>>()?;

    let mut counts = [0u64; 8];
    for shares in &per_run {
        let set = TransferFormula::ALL
            .iter()
            .filter(|f| shares[f.index()] > 0.5)
            .fold(FormulaSet::empty(), |s, &f| s.with(f));
        counts[usize::from(set.0)] += 1;
    }
    let runs = per_run.len() as f64;
    let mut mean = [0.0; 3];
    let mut std_error = [0.0; 3];
    for f in TransferFormula::ALL {
        let i = f.index();
        let m = compensated_sum(per_run.iter().map(|s| s[i])) / runs;
        let var = if per_run.len() > 1 {
            compensated_sum(per_run.iter().map(|s| (s[i] - m).powi(2))) / (runs - 1.0)
        } else {
            0.0
        };
        mean[i] = m;
        std_error[i] = (var / runs).sqrt();
    }
    let cells: Vec<MajorityCell> = FormulaSet::TABLE_ORDER
        .iter()
        .map(|&subset| MajorityCell {
            subset,
            count: counts[usize::from(subset.0)],
        })
        .collect();
    // DVT without NVT: {DVT, PVT} and {DVT}; NVT without DVT: {PVT, NVT} and {NVT}.
    let dvt_only_majority = counts[0b011] + counts[0b001];
    let nvt_only_majority = counts[0b110] + counts[0b100];
    Ok(SimulationSummary {
        runs: per_run.len() as u64,
        cells,
        mean_seat_share: mean,
        std_error,
        dvt_only_majority,
        nvt_only_majority,
    })
}

/// Exact expectation of A's DVT seat share:
/// `alpha * P(win district) + (1 - alpha) * k`, with
/// `P(win) = (k + h - 0.5) / 2h` clamped to `[0, 1]`.
pub fn expected_dvt_seat_share(c: &SimulationConfig) -> Result<f64> {
    c.validate()?;
    let win = if c.h == 0.0 {
        if c.k >= 0.5 {
            1.0
        } else {
            0.0
        }
    } else {
        ((c.k + c.h - 0.5) / (2.0 * c.h)).clamp(0.0, 1.0)
    };
    let a = c.alpha.value();
    Ok(a * win + (1.0 - a) * c.k)
}

/// One row of a sweep over the expected share `k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KSweepRow {
    pub k: f64,
    pub summary: SimulationSummary,
    pub expected_dvt: f64,
}

/// Runs `base` once per value of `k`, keeping all other settings.
pub fn sweep_k(base: &SimulationConfig, ks: &[f64]) -> Result<Vec<KSweepRow>> {
    ks.iter()
        .map(|&k| {
            let c = SimulationConfig { k, ..base.clone() };
            Ok(KSweepRow {
                k,
                summary: run_simulation(&c)?,
                expected_dvt: expected_dvt_seat_share(&c)?,
            })
        })
        .collect()
}
