//! Closed-form two-party results for the extreme districting cases.
//!
//! Party A holds national vote share `x` in `(0.5, 1]`. Either A draws the
//! district map (it then wins every district) or B does (B then wins a
//! `2(1 - x)` fraction of districts by a negligible margin and A sweeps the
//! rest).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DistrictResult, ElectionInput, MixRatio, PartyId, TransferFormula};

/// Tolerance for the boundary cases of [`beats_proportional`].
///
/// On rational inputs with small denominators the decision polynomials are
/// either exactly zero or far larger than this.
const BOUNDARY_TOLERANCE: f64 = 1e-12;

/// Which party draws the district boundaries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    #[serde(rename = "Dominant")]
    DominantGerrymanders,
    #[serde(rename = "Inferior")]
    InferiorGerrymanders,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::DominantGerrymanders, Side::InferiorGerrymanders];

    pub fn name(self) -> &'static str {
        match self {
            Side::DominantGerrymanders => "Dominant",
            Side::InferiorGerrymanders => "Inferior",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dominant" => Ok(Side::DominantGerrymanders),
            "inferior" => Ok(Side::InferiorGerrymanders),
            _ => Err(Error::validation(format!("unknown side {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoPartyPoint {
    x: f64,
    alpha: MixRatio,
    side: Side,
}

impl TwoPartyPoint {
    pub fn new(x: f64, alpha: MixRatio, side: Side) -> Result<Self> {
        if !(x > 0.5 && x <= 1.0) {
            return Err(Error::InvalidVoteShare(x));
        }
        Ok(TwoPartyPoint { x, alpha, side })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn alpha(&self) -> MixRatio {
        self.alpha
    }

    pub fn side(&self) -> Side {
        self.side
    }
}

fn list_share_at(x: f64, side: Side, f: TransferFormula) -> f64 {
    use TransferFormula::*;
    match (side, f) {
        (_, Dvt) => x,
        (Side::DominantGerrymanders, Pvt) => x / (2.0 - x),
        (Side::DominantGerrymanders, Nvt) => (3.0 * x - 1.0) / (1.0 + x),
        (Side::InferiorGerrymanders, Pvt) => 1.0 / (2.0 - x),
        (Side::InferiorGerrymanders, Nvt) => 2.0 * x / (1.0 + x),
    }
}

fn constituency_share_at(x: f64, side: Side) -> f64 {
    match side {
        Side::DominantGerrymanders => 1.0,
        Side::InferiorGerrymanders => 2.0 * x - 1.0,
    }
}

/// Seat share of A; also defined at the closed end `x = 0.5`.
fn seat_share_at(x: f64, alpha: MixRatio, side: Side, f: TransferFormula) -> f64 {
    let a = alpha.value();
    a * constituency_share_at(x, side) + (1.0 - a) * list_share_at(x, side, f)
}

/// A's normalized list share.
pub fn list_share_closed_form(p: &TwoPartyPoint, f: TransferFormula) -> f64 {
    list_share_at(p.x, p.side, f)
}

/// A's seat share, `alpha * constituency share + (1 - alpha) * list share`.
pub fn seat_share_closed_form(p: &TwoPartyPoint, f: TransferFormula) -> f64 {
    seat_share_at(p.x, p.alpha, p.side, f)
}

/// Whether A's seat share is at least its vote share.
///
/// Decided from the roots of the quadratic conditions rather than by
/// comparing the two shares, so it is an independent route to the same
/// answer. For `x < 1`:
///
/// | side     | DVT       | PVT                                | NVT                          |
/// |----------|-----------|------------------------------------|------------------------------|
/// | dominant | always    | `x <= 2a`                          | `x >= 1 - 2a`                |
/// | inferior | `a = 0`   | `a < 1/2`, `x <= (1-3a)/(1-2a)`    | `a < 1/2`, `x >= a/(1-2a)`   |
///
/// At `x = 1` every formula gives exactly 1.
pub fn beats_proportional(p: &TwoPartyPoint, f: TransferFormula) -> bool {
    use TransferFormula::*;
    let x = p.x;
    let a = p.alpha.value();
    let tol = BOUNDARY_TOLERANCE;
    if x >= 1.0 - tol {
        return true;
    }
    match (p.side, f) {
        (Side::DominantGerrymanders, Dvt) => true,
        // (x - 1)(x - 2a) >= 0
        (Side::DominantGerrymanders, Pvt) => x <= 2.0 * a + tol,
        // (x - 1)(x - (1 - 2a)) <= 0
        (Side::DominantGerrymanders, Nvt) => x >= 1.0 - 2.0 * a - tol,
        // a (x - 1) >= 0
        (Side::InferiorGerrymanders, Dvt) => a <= tol,
        // (1-2a) x^2 - (2-5a) x + (1-3a) >= 0
        (Side::InferiorGerrymanders, Pvt) => a < 0.5 && x <= (1.0 - 3.0 * a) / (1.0 - 2.0 * a) + tol,
        // (1-2a) x^2 - (1-a) x + a <= 0
        (Side::InferiorGerrymanders, Nvt) => a < 0.5 && x >= a / (1.0 - 2.0 * a) - tol,
    }
}

/// Formulas grouped into tiers of equal seat share for A, best first.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PreferenceOrder {
    pub tiers: Vec<Vec<TransferFormula>>,
}

impl PreferenceOrder {
    pub fn has_ties(&self) -> bool {
        self.tiers.iter().any(|t| t.len() > 1)
    }

    /// Formulas in preference order, ties in formula order.
    pub fn flatten(&self) -> Vec<TransferFormula> {
        self.tiers.iter().flatten().copied().collect()
    }
}

pub fn preference_order(p: &TwoPartyPoint) -> PreferenceOrder {
    let mut scored: Vec<(TransferFormula, f64)> = TransferFormula::ALL
        .iter()
        .map(|&f| (f, seat_share_closed_form(p, f)))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut tiers: Vec<(f64, Vec<TransferFormula>)> = Vec::new();
    for (f, share) in scored {
        match tiers.last_mut() {
            Some((s, tier)) if (*s - share).abs() <= BOUNDARY_TOLERANCE => tier.push(f),
            _ => tiers.push((share, vec![f])),
        }
    }
    PreferenceOrder {
        tiers: tiers
            .into_iter()
            .map(|(_, mut t)| {
                t.sort();
                t
            })
            .collect(),
    }
}

/// Largest mix ratio at which A, facing a hostile map, can still beat the
/// proportional outcome: `(1-x)/(3-2x)` for PVT, `x/(1+2x)` for NVT.
pub fn alpha_bound(x: f64, f: TransferFormula) -> Result<f64> {
    if !(0.5..=1.0).contains(&x) {
        return Err(Error::InvalidVoteShare(x));
    }
    match f {
        TransferFormula::Dvt => Err(Error::NoBound("DVT")),
        TransferFormula::Pvt => Ok((1.0 - x) / (3.0 - 2.0 * x)),
        TransferFormula::Nvt => Ok(x / (1.0 + 2.0 * x)),
    }
}

/// One of the seven seat-vote curves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Curve {
    Proportional,
    Formula { formula: TransferFormula, side: Side },
}

impl Curve {
    pub fn all() -> impl Iterator<Item = Curve> {
        std::iter::once(Curve::Proportional).chain(Side::BOTH.into_iter().flat_map(|side| {
            TransferFormula::ALL
                .into_iter()
                .map(move |formula| Curve::Formula { formula, side })
        }))
    }

    pub fn side_label(&self) -> &'static str {
        match self {
            Curve::Proportional => "Proportional",
            Curve::Formula { side, .. } => side.name(),
        }
    }

    pub fn formula_label(&self) -> &'static str {
        match self {
            Curve::Proportional => "none",
            Curve::Formula { formula, .. } => formula.name(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveSample {
    pub x: f64,
    pub seat_share: f64,
    pub curve: Curve,
}

/// Samples the proportional diagonal and the six formula/side curves on
/// `grid`. Grid points may include the closed end `x = 0.5`.
pub fn extreme_case_curves(alpha: MixRatio, grid: &[f64]) -> Result<Vec<CurveSample>> {
    if let Some(&bad) = grid.iter().find(|x| !(0.5..=1.0).contains(*x)) {
        return Err(Error::InvalidVoteShare(bad));
    }
    let mut out = Vec::with_capacity(grid.len() * 7);
    for curve in Curve::all() {
        for &x in grid {
            let seat_share = match curve {
                Curve::Proportional => x,
                Curve::Formula { formula, side } => seat_share_at(x, alpha, side, formula),
            };
            out.push(CurveSample { x, seat_share, curve });
        }
    }
    Ok(out)
}

/// Evenly spaced grid from 0.5 to 1 inclusive.
pub fn share_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 0.5) {
        return Err(Error::validation(format!("grid step {step} must be in (0, 0.5]")));
    }
    let n = (0.5 / step).round() as usize;
    if ((n as f64) * step - 0.5).abs() > 1e-9 {
        return Err(Error::validation(format!("grid step {step} does not divide 0.5")));
    }
    // Rounded to 12 decimals so grid points print as their decimal values.
    Ok((0..=n)
        .map(|i| ((0.5 + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

/// Default margin, as a fraction of district size.
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Synthetic election realizing one of the extreme maps.
///
/// Every district casts `S = 2 * round(1 / epsilon)` votes. On the dominant
/// side A takes `round(x * S)` votes everywhere. On the inferior side B wins
/// `2(1 - x) * n_districts` districts with `S/2 + 1` votes against `S/2 - 1`
/// (a margin of `epsilon * S`) and A takes every vote elsewhere; that
/// district count must be an integer.
pub fn build_gerrymander_instance(x: f64, n_districts: usize, epsilon: f64, side: Side) -> Result<ElectionInput> {
    if !(x > 0.5 && x <= 1.0) {
        return Err(Error::InvalidVoteShare(x));
    }
    if n_districts == 0 {
        return Err(Error::InfeasibleConstruction(
            "at least one district is required".into(),
        ));
    }
    if !(epsilon > 0.0 && epsilon <= 0.25) {
        return Err(Error::InfeasibleConstruction(format!(
            "epsilon {epsilon} must be in (0, 0.25]"
        )));
    }
    let half = (1.0 / epsilon).round() as u64;
    let size = 2 * half;
    let a = PartyId::new("A")?;
    let b = PartyId::new("B")?;
    let district =
        |i: usize, va: u64, vb: u64| DistrictResult::new(format!("G{}", i + 1), [(a.clone(), va), (b.clone(), vb)]);

    let districts: Vec<DistrictResult> = match side {
        Side::DominantGerrymanders => {
            let va = (x * size as f64).round() as u64;
            let vb = size - va;
            if va <= vb {
                return Err(Error::InfeasibleConstruction(format!(
                    "vote share {x} rounds to a tie at district size {size}"
                )));
            }
            (0..n_districts).map(|i| district(i, va, vb)).collect()
        }
        Side::InferiorGerrymanders => {
            let target = 2.0 * (1.0 - x) * n_districts as f64;
            let lost = target.round();
            if (target - lost).abs() > 1e-9 {
                return Err(Error::InfeasibleConstruction(format!(
                    "2(1 - x) * n_districts = {target} is not an integer"
                )));
            }
            let lost = lost as usize;
            (0..n_districts)
                .map(|i| {
                    if i < lost {
                        district(i, half - 1, half + 1)
                    } else {
                        district(i, size, 0)
                    }
                })
                .collect()
        }
    };
    ElectionInput::new(vec![a, b], districts, None)
}
