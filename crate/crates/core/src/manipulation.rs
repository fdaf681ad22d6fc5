//! Counterfactuals for two party strategies.
//!
//! - Stronghold splitting: in a district it wins comfortably, a party fields a
//!   second candidate on an allied clone list, so part of its winning margin
//!   becomes votes for a losing candidate.
//! - Deliberate loss: a party gives up a district it would win, hoping its
//!   votes count for more in the list tier.
//!
//! Splitting a party into two national lists is not modelled: with a single
//! vote per elector there is nothing to split.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{continuous_allocation, ElectionInput, MixRatio, PartyId, TransferFormula};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub district_id: String,
    pub party: PartyId,
    /// Votes the main candidate keeps above the runner-up.
    pub clone_margin_delta: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualReport {
    pub formula: TransferFormula,
    pub baseline_share: f64,
    pub manipulated_share: f64,
    pub delta: f64,
    pub profitable: bool,
}

impl CounterfactualReport {
    fn new(formula: TransferFormula, baseline_share: f64, manipulated_share: f64) -> Self {
        let delta = manipulated_share - baseline_share;
        CounterfactualReport {
            formula,
            baseline_share,
            manipulated_share,
            delta,
            profitable: delta > 0.0,
        }
    }
}

/// Combined seat share of `members`, pooling their list votes and district
/// wins before dividing so that equal integer inputs give equal shares.
fn coalition_share(e: &ElectionInput, members: &[usize], f: TransferFormula, m: MixRatio) -> Result<f64> {
    let pools = crate::model::correction_pools(e, f)?.totals();
    let won = e.districts_won()?;
    let pool: u64 = members.iter().map(|&i| pools[i]).sum();
    let seats: u32 = members.iter().map(|&i| won[i]).sum();
    let total: u64 = pools.iter().sum();
    if total == 0 {
        return Err(Error::EmptyPools);
    }
    let constituency = f64::from(seats) / e.num_districts() as f64;
    Ok(crate::model::mix(m, constituency, pool as f64 / total as f64))
}

fn locate(e: &ElectionInput, district_id: &str, party: &PartyId) -> Result<(usize, usize)> {
    let d = e
        .district_index(district_id)
        .ok_or_else(|| Error::UnknownDistrict(district_id.to_string()))?;
    let p = e.party_index(party).ok_or_else(|| Error::UnknownParty(party.clone()))?;
    let o = e.district_outcome(d);
    if o.winner != p {
        return Err(Error::NotAWinner {
            district: district_id.to_string(),
            party: party.clone(),
        });
    }
    Ok((d, p))
}

fn clone_id(e: &ElectionInput, party: &PartyId) -> Result<PartyId> {
    let mut id = format!("{party}~clone");
    while e.parties().iter().any(|p| p.as_str() == id) {
        id.push('\'');
    }
    PartyId::new(id)
}

/// The election after the split: the main candidate keeps
/// `runner-up + delta` votes and a clone candidate, appended as a new party
/// allied with `plan.party`, receives the rest. Total votes are unchanged.
///
/// For a small delta the clone outpolls the main candidate and wins the
/// district itself. The seat stays with the alliance either way, and the
/// main candidate's votes become the transferable losing votes.
pub fn stronghold_split_election(e: &ElectionInput, plan: &SplitPlan) -> Result<(ElectionInput, usize, usize)> {
    let (d, p) = locate(e, &plan.district_id, &plan.party)?;
    let o = e.district_outcome(d);
    let max = o.surplus();
    if plan.clone_margin_delta == 0 || plan.clone_margin_delta > max {
        return Err(Error::DeltaTooLarge {
            delta: plan.clone_margin_delta,
            max,
        });
    }
    let main = o.runner_up_votes + plan.clone_margin_delta;
    let clone = o.winner_votes - main;

    let mut parties = e.parties().to_vec();
    parties.push(clone_id(e, &plan.party)?);
    let clone_index = parties.len() - 1;
    let districts = e
        .districts()
        .iter()
        .enumerate()
        .map(|(i, dist)| {
            let mut dist = dist.clone();
            if i == d {
                dist.votes[p] = Some(main);
                dist.votes.push(Some(clone));
            } else {
                dist.votes.push(None);
            }
            dist
        })
        .collect();
    let list_votes = e.list_votes().map(|lv| {
        let mut lv = lv.to_vec();
        lv.push(0);
        lv
    });
    let split = ElectionInput::from_parts(parties, districts, list_votes, e.is_equal_size(), e.tie_rule());
    Ok((split, p, clone_index))
}

/// Combined seat share of the party and its clone against the party's
/// share without the split.
pub fn evaluate_stronghold_split(
    e: &ElectionInput,
    plan: &SplitPlan,
    f: TransferFormula,
    m: MixRatio,
) -> Result<CounterfactualReport> {
    let (split, p, clone) = stronghold_split_election(e, plan)?;
    let baseline = coalition_share(e, &[p], f, m)?;
    let manipulated = coalition_share(&split, &[p, clone], f, m)?;
    Ok(CounterfactualReport::new(f, baseline, manipulated))
}

/// The election after `party` concedes the district: its candidate drops to
/// one vote below the runner-up and the removed votes abstain.
pub fn deliberate_loss_election(
    e: &ElectionInput,
    district_id: &str,
    party: &PartyId,
) -> Result<(ElectionInput, usize)> {
    let (d, p) = locate(e, district_id, party)?;
    let o = e.district_outcome(d);
    if o.runner_up_votes == 0 {
        return Err(Error::CannotConcede {
            district: district_id.to_string(),
            party: party.clone(),
        });
    }
    let districts = e
        .districts()
        .iter()
        .enumerate()
        .map(|(i, dist)| {
            let mut dist = dist.clone();
            if i == d {
                dist.votes[p] = Some(o.runner_up_votes - 1);
            }
            dist
        })
        .collect();
    let conceded = ElectionInput::from_parts(
        e.parties().to_vec(),
        districts,
        e.list_votes().map(<[u64]>::to_vec),
        e.is_equal_size(),
        e.tie_rule(),
    );
    Ok((conceded, p))
}

pub fn evaluate_deliberate_loss(
    e: &ElectionInput,
    district_id: &str,
    party: &PartyId,
    f: TransferFormula,
    m: MixRatio,
) -> Result<CounterfactualReport> {
    let (conceded, p) = deliberate_loss_election(e, district_id, party)?;
    let baseline = coalition_share(e, &[p], f, m)?;
    let manipulated = coalition_share(&conceded, &[p], f, m)?;
    Ok(CounterfactualReport::new(f, baseline, manipulated))
}

/// Plain seat share of one party, for callers comparing against
/// [`continuous_allocation`].
pub fn party_share(e: &ElectionInput, party: &PartyId, f: TransferFormula, m: MixRatio) -> Result<f64> {
    let alloc = continuous_allocation(e, f, m)?;
    alloc
        .seat_share_of(party)
        .ok_or_else(|| Error::UnknownParty(party.clone()))
}

/// A manipulation request as read from a JSON plan file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum Strategy {
    StrongholdSplit(SplitPlan),
    DeliberateLoss { district_id: String, party: PartyId },
}

pub fn evaluate(
    e: &ElectionInput,
    strategy: &Strategy,
    f: TransferFormula,
    m: MixRatio,
) -> Result<CounterfactualReport> {
    match strategy {
        Strategy::StrongholdSplit(plan) => evaluate_stronghold_split(e, plan, f, m),
        Strategy::DeliberateLoss { district_id, party } => evaluate_deliberate_loss(e, district_id, party, f, m),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::{election, pid};

    fn stronghold() -> ElectionInput {
        election(&["A", "B"], &[&[8000, 2000], &[3000, 7000]])
    }

    fn plan(delta: u64) -> SplitPlan {
        SplitPlan {
            district_id: "D1".into(),
            party: pid("A"),
            clone_margin_delta: delta,
        }
    }

    fn alpha(a: f64) -> MixRatio {
        MixRatio::new(a).unwrap()
    }

    #[test]
    fn stronghold_split_by_formula() {
        let e = stronghold();
        let pvt = evaluate_stronghold_split(&e, &plan(1), TransferFormula::Pvt, alpha(0.5)).unwrap();
        assert!(pvt.profitable);
        // the clone outpolls the main candidate (5999 to 2001) and takes the
        // seat; the coalition pool is 11000 direct + 2001 + 3000 losing
        let expected = 0.5 * 0.5 + 0.5 * (16001.0 / 27001.0);
        assert_eq!(pvt.baseline_share, 0.5 * 0.5 + 0.5 * (14000.0 / 25000.0));
        assert!((pvt.manipulated_share - expected).abs() < 1e-15);
        let dvt = evaluate_stronghold_split(&e, &plan(1), TransferFormula::Dvt, alpha(0.5)).unwrap();
        assert_eq!(dvt.delta, 0.0);
        assert!(!dvt.profitable);
        let nvt = evaluate_stronghold_split(&e, &plan(1), TransferFormula::Nvt, alpha(0.5)).unwrap();
        assert!(nvt.delta <= 0.0);
    }

    #[test]
    fn split_preserves_votes() {
        let e = stronghold();
        let (split, _, clone) = stronghold_split_election(&e, &plan(500)).unwrap();
        assert_eq!(split.district_total(0), e.district_total(0));
        assert_eq!(split.votes(0, 0), 2500);
        assert_eq!(split.votes(0, clone), 5500);
        assert!(!split.has_entry(1, clone));
        assert_eq!(split.parties()[clone].as_str(), "A~clone");
    }

    #[test]
    fn split_plan_errors() {
        let e = stronghold();
        assert!(matches!(
            evaluate_stronghold_split(&e, &plan(6001), TransferFormula::Pvt, alpha(0.5)),
            Err(Error::DeltaTooLarge { max: 6000, .. })
        ));
        assert!(matches!(
            evaluate_stronghold_split(&e, &plan(0), TransferFormula::Pvt, alpha(0.5)),
            Err(Error::DeltaTooLarge { .. })
        ));
        let wrong = SplitPlan {
            party: pid("B"),
            ..plan(1)
        };
        assert!(matches!(
            evaluate_stronghold_split(&e, &wrong, TransferFormula::Pvt, alpha(0.5)),
            Err(Error::NotAWinner { .. })
        ));
        let missing = SplitPlan {
            district_id: "nowhere".into(),
            ..plan(1)
        };
        assert!(matches!(
            evaluate_stronghold_split(&e, &missing, TransferFormula::Pvt, alpha(0.5)),
            Err(Error::UnknownDistrict(_))
        ));
    }

    #[test]
    fn deliberate_loss_under_dvt_never_pays() {
        let e = election(&["A", "B"], &[&[51, 49], &[30, 70], &[40, 60]]);
        for a in [0.0, 0.1, 0.5, 0.9] {
            let r = evaluate_deliberate_loss(&e, "D1", &pid("A"), TransferFormula::Dvt, alpha(a)).unwrap();
            assert!(r.delta <= 0.0);
        }
        assert!(matches!(
            evaluate_deliberate_loss(&e, "D2", &pid("A"), TransferFormula::Dvt, alpha(0.1)),
            Err(Error::NotAWinner { .. })
        ));
        let lone = election(&["A", "B"], &[&[10, 0], &[3, 4]]);
        assert!(matches!(
            evaluate_deliberate_loss(&lone, "D1", &pid("A"), TransferFormula::Pvt, alpha(0.1)),
            Err(Error::CannotConcede { .. })
        ));
    }

    #[test]
    fn conceded_district_flips() {
        let e = election(&["A", "B"], &[&[51, 49], &[30, 70]]);
        let (c, p) = deliberate_loss_election(&e, "D1", &pid("A")).unwrap();
        assert_eq!(c.votes(0, p), 48);
        assert_eq!(c.district_winner(0).party, pid("B"));
    }

    #[test]
    fn strategy_json() {
        let s: Strategy = serde_json::from_str(
            r#"{"strategy":"stronghold_split","district_id":"D1","party":"A","clone_margin_delta":1}"#,
        )
        .unwrap();
        assert_eq!(s, Strategy::StrongholdSplit(plan(1)));
        let s: Strategy =
            serde_json::from_str(r#"{"strategy":"deliberate_loss","district_id":"D1","party":"A"}"#).unwrap();
        let r = evaluate(&stronghold(), &s, TransferFormula::Dvt, alpha(0.5)).unwrap();
        assert!(!r.profitable);
        assert!(
            (party_share(&stronghold(), &pid("A"), TransferFormula::Dvt, alpha(0.5)).unwrap() - r.baseline_share).abs()
                < 1e-15
        );
    }
}
