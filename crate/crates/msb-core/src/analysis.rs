//! Coalition stability and membership diagnostics: subset deviations at fixed
//! efforts, the value-to-share ratio, and the myopic removal dynamics.
//!
//! As in the search module, the GenAI profile is fixed to all-ones.

use crate::equilibrium::{dominant_equilibrium, EquilibriumError, EquilibriumResult, SolveConfig};
use crate::game::{Coalition, EffortProfile, GenAiProfile, MsbGame};
use serde::Serialize;
use thiserror::Error;

/// Slack on the weak stability inequality, so exact-zero boundaries
/// (e.g. a terminal coalition worth 0 against the empty set's 0) stay stable.
pub const STABILITY_SLACK: f64 = 1e-12;
/// Cap on `|C|` for the `2^|C|` subset enumerations.
pub const SUBSET_ENUM_CAP: usize = 20;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("{what} supports coalitions of at most {cap} players, got {size}")]
    CapExceeded {
        what: &'static str,
        size: usize,
        cap: usize,
    },
    #[error("player {player} has a zero share; the value-to-share ratio is undefined")]
    ZeroShare { player: usize },
    #[error("player {player} is not in coalition {coalition}")]
    PlayerNotInCoalition { player: usize, coalition: Coalition },
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
}

/// Verdict of the fixed-effort subset check, with the first improving subset
/// as a witness when the coalition is unstable.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub stable: bool,
    pub witness: Option<Coalition>,
    pub checked_subsets: usize,
}

/// One step of the myopic removal dynamics.
#[derive(Debug, Clone, Serialize)]
pub struct DynamicsStep {
    pub coalition: Coalition,
    pub equilibrium: EquilibriumResult,
    pub principal_utility: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DynamicsTrace {
    pub steps: Vec<DynamicsStep>,
    pub terminal_stable: bool,
}

/// Principal utilities over subsets of `c` at frozen efforts: members dropped
/// from the coalition revert to their GenAI stand-in contribution.
struct FixedEffortScan<'a> {
    game: &'a MsbGame,
    in_contrib: Vec<f64>,
    out_contrib: Vec<f64>,
    buf: Vec<f64>,
}

impl<'a> FixedEffortScan<'a> {
    fn new(game: &'a MsbGame, c: Coalition, efforts: &EffortProfile) -> Self {
        assert_eq!(efforts.len(), game.n(), "effort profile length");
        let g = GenAiProfile::all(game.n());
        let in_contrib = game.contribution_vector(efforts, &g, c);
        let out_contrib = (0..game.n()).map(|i| game.genai_contribution(i)).collect();
        FixedEffortScan {
            game,
            in_contrib,
            out_contrib,
            buf: vec![0.0; game.n()],
        }
    }

    fn principal_utility(&mut self, c_prime: Coalition) -> f64 {
        for i in 0..self.game.n() {
            self.buf[i] = if c_prime.contains(i) {
                self.in_contrib[i]
            } else {
                self.out_contrib[i]
            };
        }
        (1.0 - self.game.coalition_share_sum(c_prime)) * self.game.benefit().eval(&self.buf)
    }
}

fn check_cap(what: &'static str, c: Coalition) -> Result<(), AnalysisError> {
    if c.len() > SUBSET_ENUM_CAP {
        Err(AnalysisError::CapExceeded {
            what,
            size: c.len(),
            cap: SUBSET_ENUM_CAP,
        })
    } else {
        Ok(())
    }
}

/// A coalition is stable at the given efforts when no strict subset gives the
/// principal strictly more, the effort profile held fixed. Early-exits on the
/// first violating subset (ascending mask order).
pub fn is_stable(
    game: &MsbGame,
    c: Coalition,
    efforts: &EffortProfile,
) -> Result<StabilityReport, AnalysisError> {
    check_cap("stability check", c)?;
    let mut scan = FixedEffortScan::new(game, c, efforts);
    let w_c = scan.principal_utility(c);
    let mut checked = 0;
    for sub in c.subsets() {
        if sub == c {
            continue;
        }
        checked += 1;
        if scan.principal_utility(sub) > w_c + STABILITY_SLACK {
            return Ok(StabilityReport {
                stable: false,
                witness: Some(sub),
                checked_subsets: checked,
            });
        }
    }
    Ok(StabilityReport {
        stable: true,
        witness: None,
        checked_subsets: checked,
    })
}

/// The subset of `c` maximizing the principal's fixed-effort utility; `c`
/// itself when already optimal. Ties prefer larger subsets, then the smaller
/// bitmask.
pub fn best_deviation(
    game: &MsbGame,
    c: Coalition,
    efforts: &EffortProfile,
) -> Result<Coalition, AnalysisError> {
    check_cap("deviation search", c)?;
    let mut scan = FixedEffortScan::new(game, c, efforts);
    let mut best = c;
    let mut best_w = scan.principal_utility(c);
    for sub in c.subsets() {
        if sub == c {
            continue;
        }
        let w = scan.principal_utility(sub);
        if w > best_w
            || (w == best_w
                && (sub.len() > best.len() || (sub.len() == best.len() && sub.mask() < best.mask())))
        {
            best = sub;
            best_w = w;
        }
    }
    Ok(best)
}

/// Value-to-share ratio of member `i`: the drop in shared benefit from
/// replacing `i` with GenAI at the coalition's dominant equilibrium, divided
/// by `i`'s portion.
pub fn vsr(game: &MsbGame, i: usize, c: Coalition, cfg: &SolveConfig) -> Result<f64, AnalysisError> {
    if !c.contains(i) {
        return Err(AnalysisError::PlayerNotInCoalition { player: i, coalition: c });
    }
    if game.share(i) == 0.0 {
        return Err(AnalysisError::ZeroShare { player: i });
    }
    let g = GenAiProfile::all(game.n());
    let eq = dominant_equilibrium(game, c, &g, cfg)?;
    let f_with = eq.shared_benefit;
    let f_without = game.shared_benefit(&eq.efforts, &g, c.without(i));
    Ok((f_with - f_without) / game.share(i))
}

/// Alternate the principal's best fixed-effort subset deviation with player
/// re-equilibration until a stable coalition is reached. Coalitions strictly
/// shrink, so the trace has at most `n + 1` steps; non-convergence of any
/// equilibrium solve is carried in that step's diagnostics.
pub fn myopic_removal_dynamics(
    game: &MsbGame,
    start: Coalition,
    cfg: &SolveConfig,
) -> Result<DynamicsTrace, AnalysisError> {
    check_cap("myopic removal dynamics", start)?;
    let g = GenAiProfile::all(game.n());
    let mut c = start;
    let mut steps = Vec::new();
    loop {
        let eq = dominant_equilibrium(game, c, &g, cfg)?;
        let verdict = is_stable(game, c, &eq.efforts)?;
        let w = eq.principal_utility;
        let efforts = eq.efforts.clone();
        steps.push(DynamicsStep {
            coalition: c,
            equilibrium: eq,
            principal_utility: w,
        });
        if verdict.stable {
            return Ok(DynamicsTrace {
                steps,
                terminal_stable: true,
            });
        }
        let next = best_deviation(game, c, &efforts)?;
        assert!(
            next.is_strict_subset_of(c),
            "an unstable coalition must have an improving strict subset"
        );
        c = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{BenefitTerm, ContributionSpec, CostSpec, MultilinearBenefit};

    fn unstable_optimum_game() -> MsbGame {
        let benefit = MultilinearBenefit::new(
            2,
            vec![BenefitTerm {
                players: Coalition::from_players([0, 1]),
                coeff: 2.5,
            }],
        )
        .unwrap();
        MsbGame::new(
            vec![0.4, 0.4],
            vec![
                ContributionSpec::Affine {
                    slope: 2.0,
                    genai_gain: 0.0,
                    offset: 0.0,
                },
                ContributionSpec::Power {
                    alpha: 1.0,
                    beta: 0.2,
                    exponent: 0.5,
                },
            ],
            vec![CostSpec::Sqrt { scale: 1.0 }, CostSpec::Linear { delta: 1.8 }],
            benefit,
        )
        .unwrap()
    }

    fn retention_game(eps: f64) -> MsbGame {
        let benefit = MultilinearBenefit::new(
            2,
            vec![BenefitTerm {
                players: Coalition::from_players([0, 1]),
                coeff: 4.0,
            }],
        )
        .unwrap();
        MsbGame::new(
            vec![0.25, 0.25],
            vec![
                ContributionSpec::Affine {
                    slope: 1.0,
                    genai_gain: 0.0,
                    offset: 0.0,
                },
                ContributionSpec::Affine {
                    slope: 1.0,
                    genai_gain: 1.0 - eps / 2.0,
                    offset: 0.0,
                },
            ],
            vec![CostSpec::Linear { delta: 1.0 }, CostSpec::Quadratic { half_inv_scale: eps }],
            benefit,
        )
        .unwrap()
    }

    fn linear_three_player() -> MsbGame {
        let terms = vec![
            BenefitTerm {
                players: Coalition::from_players([0]),
                coeff: 2.0,
            },
            BenefitTerm {
                players: Coalition::from_players([1]),
                coeff: 1.0,
            },
            BenefitTerm {
                players: Coalition::from_players([2]),
                coeff: 0.5,
            },
        ];
        MsbGame::new(
            vec![0.2, 0.15, 0.1],
            vec![
                ContributionSpec::Affine {
                    slope: 1.0,
                    genai_gain: 0.2,
                    offset: 0.0,
                };
                3
            ],
            vec![
                CostSpec::Linear { delta: 0.1 },
                CostSpec::Linear { delta: 0.05 },
                CostSpec::Linear { delta: 0.01 },
            ],
            MultilinearBenefit::new(3, terms).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn unstable_optimum_is_flagged_with_witness() {
        let game = unstable_optimum_game();
        let cfg = SolveConfig::default();
        let eq = dominant_equilibrium(&game, Coalition::full(2), &GenAiProfile::all(2), &cfg).unwrap();
        let report = is_stable(&game, Coalition::full(2), &eq.efforts).unwrap();
        assert!(!report.stable);
        assert_eq!(report.witness, Some(Coalition::from_players([0])));
        assert_eq!(report.checked_subsets, 2); // {} then {1}
    }

    #[test]
    fn empty_coalition_is_stable() {
        let game = unstable_optimum_game();
        let report = is_stable(&game, Coalition::EMPTY, &EffortProfile::zeros(2)).unwrap();
        assert!(report.stable);
        assert_eq!(report.checked_subsets, 0);
    }

    #[test]
    fn retention_optimum_is_stable_by_hand_enumeration() {
        let eps = 0.5;
        let game = retention_game(eps);
        let efforts = EffortProfile::new(vec![1.0, eps]).unwrap();
        let full = Coalition::full(2);
        // Hand-computed subset utilities at these efforts.
        let g = GenAiProfile::all(2);
        let w_full = game.principal_utility(&efforts, &g, full);
        let w_1 = game.principal_utility(&efforts, &g, Coalition::from_players([0]));
        let w_2 = game.principal_utility(&efforts, &g, Coalition::from_players([1]));
        let w_0 = game.principal_utility(&efforts, &g, Coalition::EMPTY);
        assert!((w_full - 2.5).abs() < 1e-12);
        assert!(w_1 <= w_full && w_2 <= w_full && w_0 <= w_full);

        let report = is_stable(&game, full, &efforts).unwrap();
        assert!(report.stable);
        assert_eq!(report.checked_subsets, 3);
    }

    #[test]
    fn best_deviation_cases() {
        let game = unstable_optimum_game();
        let cfg = SolveConfig::default();
        let full = Coalition::full(2);
        let eq = dominant_equilibrium(&game, full, &GenAiProfile::all(2), &cfg).unwrap();
        assert_eq!(best_deviation(&game, full, &eq.efforts).unwrap(), Coalition::from_players([0]));

        // Stable coalition maps to itself; so does the empty one.
        let game = retention_game(0.5);
        let efforts = EffortProfile::new(vec![1.0, 0.5]).unwrap();
        assert_eq!(best_deviation(&game, full, &efforts).unwrap(), full);
        assert_eq!(
            best_deviation(&game, Coalition::EMPTY, &EffortProfile::zeros(2)).unwrap(),
            Coalition::EMPTY
        );
    }

    #[test]
    fn vsr_on_retention_fixture() {
        let cfg = SolveConfig::default();
        for eps in [0.5, 0.1, 0.01] {
            let game = retention_game(eps);
            let v = vsr(&game, 1, Coalition::full(2), &cfg).unwrap();
            assert!((v - 16.0 * eps).abs() < 1e-6, "eps = {eps}: vsr = {v}");
        }
    }

    #[test]
    fn vsr_zero_numerator_and_errors() {
        let cfg = SolveConfig::default();
        // Effort-collapse game: at the all-GenAI equilibrium player 2 sits at
        // zero effort, so replacing them changes nothing.
        let benefit = MultilinearBenefit::new(
            2,
            vec![BenefitTerm {
                players: Coalition::from_players([0, 1]),
                coeff: 4.0,
            }],
        )
        .unwrap();
        let game = MsbGame::new(
            vec![0.25, 0.25],
            vec![
                ContributionSpec::Affine {
                    slope: 1.0,
                    genai_gain: 0.0,
                    offset: 0.0,
                },
                ContributionSpec::Power {
                    alpha: 1.0,
                    beta: 0.04,
                    exponent: 0.5,
                },
            ],
            vec![CostSpec::Zero, CostSpec::Sqrt { scale: 1.0 }],
            benefit,
        )
        .unwrap();
        let v = vsr(&game, 1, Coalition::full(2), &cfg).unwrap();
        assert!(v.abs() < 1e-12);

        assert!(matches!(
            vsr(&game, 1, Coalition::from_players([0]), &cfg),
            Err(AnalysisError::PlayerNotInCoalition { .. })
        ));

        let zero_share = MsbGame::new(
            vec![0.25, 0.0],
            vec![ContributionSpec::Indicator; 2],
            vec![CostSpec::Zero; 2],
            MultilinearBenefit::new(2, vec![]).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            vsr(&zero_share, 1, Coalition::full(2), &cfg),
            Err(AnalysisError::ZeroShare { player: 1 })
        ));
    }

    #[test]
    fn vsr_is_coalition_independent_for_linear_benefits() {
        let game = linear_three_player();
        let cfg = SolveConfig::default();
        let a = vsr(&game, 0, Coalition::from_players([0, 1, 2]), &cfg).unwrap();
        let b = vsr(&game, 0, Coalition::from_players([0, 2]), &cfg).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn myopic_dynamics_on_unstable_fixture() {
        let game = unstable_optimum_game();
        let cfg = SolveConfig::default();
        let trace = myopic_removal_dynamics(&game, Coalition::full(2), &cfg).unwrap();
        assert!(trace.terminal_stable);
        assert_eq!(trace.steps.len(), 2);
        assert_eq!(trace.steps[0].coalition, Coalition::full(2));
        assert!((trace.steps[0].principal_utility - 0.555).abs() < 1e-3);
        assert_eq!(trace.steps[1].coalition, Coalition::from_players([0]));
        assert_eq!(trace.steps[1].equilibrium.efforts.as_slice(), &[0.0, 0.0]);
        assert_eq!(trace.steps[1].principal_utility, 0.0);
    }

    #[test]
    fn myopic_dynamics_trivial_starts() {
        let cfg = SolveConfig::default();
        let game = unstable_optimum_game();
        let trace = myopic_removal_dynamics(&game, Coalition::EMPTY, &cfg).unwrap();
        assert!(trace.terminal_stable);
        assert_eq!(trace.steps.len(), 1);

        // A start that is already stable stops immediately.
        let game = retention_game(0.5);
        let trace = myopic_removal_dynamics(&game, Coalition::full(2), &cfg).unwrap();
        assert_eq!(trace.steps.len(), 1);
        assert!(trace.terminal_stable);
    }

    #[test]
    fn subset_caps() {
        let n = 21;
        let game = MsbGame::new(
            vec![0.0; n],
            vec![ContributionSpec::Indicator; n],
            vec![CostSpec::Zero; n],
            MultilinearBenefit::new(n, vec![]).unwrap(),
        )
        .unwrap();
        let c = Coalition::full(n);
        let e = EffortProfile::zeros(n);
        assert!(matches!(is_stable(&game, c, &e), Err(AnalysisError::CapExceeded { .. })));
        assert!(matches!(
            best_deviation(&game, c, &e),
            Err(AnalysisError::CapExceeded { .. })
        ));
        assert!(matches!(
            myopic_removal_dynamics(&game, c, &SolveConfig::default()),
            Err(AnalysisError::CapExceeded { .. })
        ));
    }
}
