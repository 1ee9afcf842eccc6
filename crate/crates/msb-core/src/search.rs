//! The principal's coalition problem: exhaustive search over all coalitions,
//! the knapsack-based solver for linear benefits, its almost-linear hybrid,
//! and the clique-reduction instance builder used as a hardness oracle.
//!
//! Everything in this module fixes the GenAI profile to all-ones: using the
//! tool is weakly dominant for players, so the principal plans against it.

use crate::equilibrium::{
    best_effort, build_result, dominant_equilibrium, EquilibriumError, EquilibriumResult,
    SolveConfig, TieBreak,
};
use crate::game::{
    BenefitTerm, Coalition, ContributionSpec, CostSpec, GenAiProfile, MsbGame, MultilinearBenefit,
};
use serde::Serialize;
use thiserror::Error;

/// Hard cap on exhaustive coalition enumeration.
pub const BRUTE_FORCE_CAP: usize = 24;
/// Above this the exhaustive search logs a warning; it still runs.
pub const BRUTE_FORCE_WARN: usize = 16;
/// Cap on the exhaustively-searched coupled part of almost-linear instances.
pub const ALMOST_LINEAR_CAP: usize = 16;
/// Tolerance for deciding that the reduction instance attains its clique value.
pub const CLIQUE_DECISION_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("{what} supports at most {cap} players, got {n}")]
    CapExceeded {
        what: &'static str,
        n: usize,
        cap: usize,
    },
    #[error("shared benefit is not linear: {0}")]
    NotLinear(String),
    #[error("shared benefit does not decompose over N' = {nprime}: {reason}")]
    NotDecomposable { nprime: Coalition, reason: String },
    #[error("share of player {player} ({share}) is not a multiple of epsilon = {epsilon}")]
    InvalidShares {
        player: usize,
        share: f64,
        epsilon: f64,
    },
    #[error("invalid epsilon {0}: must be in (0, 1] with at most 10^7 budget units")]
    InvalidEpsilon(f64),
    #[error("malformed graph: {0}")]
    MalformedGraph(String),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    BruteForce,
    Fcop,
    AlmostLinear,
}

/// An optimal coalition together with the equilibrium that certifies its value.
#[derive(Debug, Clone, Serialize)]
pub struct CoalitionSolution {
    pub coalition: Coalition,
    pub equilibrium: EquilibriumResult,
    pub principal_utility: f64,
    pub method: SolveMethod,
}

/// Ties between equally-good coalitions resolve to fewer players, then the
/// smaller bitmask, so every solver is deterministic.
fn improves(w: f64, c: Coalition, best_w: f64, best_c: Coalition) -> bool {
    w > best_w
        || (w == best_w && (c.len() < best_c.len() || (c.len() == best_c.len() && c.mask() < best_c.mask())))
}

// ---------------------------------------------------------------------------
// Exhaustive search
// ---------------------------------------------------------------------------

/// Solve the coalition problem by evaluating the dominant equilibrium of all
/// `2^n` coalitions under the all-GenAI profile.
pub fn brute_force_optimal(
    game: &MsbGame,
    cfg: &SolveConfig,
) -> Result<CoalitionSolution, SearchError> {
    let n = game.n();
    if n > BRUTE_FORCE_CAP {
        return Err(SearchError::CapExceeded {
            what: "brute-force search",
            n,
            cap: BRUTE_FORCE_CAP,
        });
    }
    if n > BRUTE_FORCE_WARN {
        log::warn!("brute-force search over {n} players solves {} subgames", 1u64 << n);
    }
    let g = GenAiProfile::all(n);
    let mut best: Option<(f64, Coalition, EquilibriumResult)> = None;
    for mask in 0..(1u64 << n) {
        let c = Coalition::from_mask(mask);
        let eq = dominant_equilibrium(game, c, &g, cfg)?;
        let w = eq.principal_utility;
        let replace = match &best {
            None => true,
            Some((bw, bc, _)) => improves(w, c, *bw, *bc),
        };
        if replace {
            best = Some((w, c, eq));
        }
    }
    let (w, c, eq) = best.expect("at least the empty coalition was evaluated");
    Ok(CoalitionSolution {
        coalition: c,
        equilibrium: eq,
        principal_utility: w,
        method: SolveMethod::BruteForce,
    })
}

// ---------------------------------------------------------------------------
// Linear instances: standalone responses, knapsack, outer budget loop
// ---------------------------------------------------------------------------

fn linear_gammas(game: &MsbGame) -> Result<Vec<f64>, SearchError> {
    game.benefit()
        .linear_coefficients()
        .ok_or_else(|| SearchError::NotLinear("a term couples several players or is constant".into()))
}

fn standalone_inner(game: &MsbGame, i: usize, gamma: f64, cfg: &SolveConfig) -> (f64, f64) {
    let a = game.share(i) * gamma;
    let e_star = best_effort(a, game.contribution(i), true, game.cost(i), cfg, TieBreak::Greatest);
    (game.contribution(i).value(e_star, true), e_star)
}

/// Greatest maximizer of a player's standalone objective
/// `theta_i * gamma_i * s_i(e, 1) - c_i(e)` on a linear instance.
/// Returns `(s_star, e_star)`.
pub fn standalone_best_contribution(
    game: &MsbGame,
    i: usize,
    cfg: &SolveConfig,
) -> Result<(f64, f64), SearchError> {
    let gammas = linear_gammas(game)?;
    Ok(standalone_inner(game, i, gammas[i], cfg))
}

/// Budget discretization for instances whose shares are integer multiples of
/// a common unit `epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FcopConfig {
    pub epsilon: f64,
    /// `k_i = theta_i / epsilon`, validated against `unit_tol`.
    pub share_units: Vec<u64>,
    pub unit_tol: f64,
}

impl FcopConfig {
    pub const DEFAULT_UNIT_TOL: f64 = 1e-9;

    pub fn new(game: &MsbGame, epsilon: f64) -> Result<Self, SearchError> {
        Self::with_unit_tol(game, epsilon, Self::DEFAULT_UNIT_TOL)
    }

    pub fn with_unit_tol(game: &MsbGame, epsilon: f64, unit_tol: f64) -> Result<Self, SearchError> {
        // The DP budget axis has ceil(1/epsilon)+1 cells; keep it allocatable.
        if !(epsilon.is_finite() && epsilon > 0.0 && epsilon <= 1.0) || 1.0 / epsilon > 1e7 {
            return Err(SearchError::InvalidEpsilon(epsilon));
        }
        let mut share_units = Vec::with_capacity(game.n());
        for (i, &theta) in game.shares().iter().enumerate() {
            let k = (theta / epsilon).round();
            if (theta - k * epsilon).abs() > unit_tol {
                return Err(SearchError::InvalidShares {
                    player: i,
                    share: theta,
                    epsilon,
                });
            }
            share_units.push(k as u64);
        }
        Ok(FcopConfig {
            epsilon,
            share_units,
            unit_tol,
        })
    }

    /// Largest budget the outer loop must visit: `ceil(1 / epsilon)`.
    pub fn budget_ceiling(&self) -> u64 {
        (1.0 / self.epsilon).ceil() as u64
    }
}

#[derive(Clone, Copy)]
struct KnapCell {
    value: f64,
    items: u32,
    mask: u64,
}

fn knap_better(a: &KnapCell, b: &KnapCell) -> bool {
    a.value > b.value
        || (a.value == b.value && (a.items < b.items || (a.items == b.items && a.mask < b.mask)))
}

/// 0/1 knapsack over integer budget units by dynamic programming. Returns the
/// selected subset (bit `i` = item `i`); ties resolve to fewer items, then the
/// smaller bitmask. Values are assumed nonnegative.
pub fn knapsack_select(weights: &[u64], values: &[f64], budget: u64) -> Coalition {
    assert_eq!(weights.len(), values.len(), "weights/values length");
    let mut free_mask = 0u64;
    let mut dp = vec![
        KnapCell {
            value: 0.0,
            items: 0,
            mask: 0
        };
        budget as usize + 1
    ];
    for (i, (&w, &v)) in weights.iter().zip(values).enumerate() {
        if v <= 0.0 {
            continue; // never helps; fewer items preferred on ties
        }
        if w == 0 {
            free_mask |= 1 << i; // strictly better in every solution
            continue;
        }
        if w > budget {
            continue;
        }
        for cap in (w..=budget).rev() {
            let prev = dp[(cap - w) as usize];
            let cand = KnapCell {
                value: prev.value + v,
                items: prev.items + 1,
                mask: prev.mask | (1 << i),
            };
            if knap_better(&cand, &dp[cap as usize]) {
                dp[cap as usize] = cand;
            }
        }
    }
    Coalition::from_mask(dp[budget as usize].mask | free_mask)
}

fn assemble_solution(
    game: &MsbGame,
    coalition: Coalition,
    efforts: Vec<f64>,
    method: SolveMethod,
    sweeps_used: usize,
    converged: bool,
    cfg: &SolveConfig,
) -> CoalitionSolution {
    let eq = build_result(
        game,
        efforts,
        GenAiProfile::all(game.n()),
        coalition,
        sweeps_used,
        converged,
        cfg,
    );
    let w = eq.principal_utility;
    CoalitionSolution {
        coalition,
        equilibrium: eq,
        principal_utility: w,
        method,
    }
}

/// Outer budget loop over `k = 0..=ceil(1/eps)`, one knapsack per budget.
/// Requires a linear benefit; the reported equilibrium is the players'
/// standalone efforts, which are mutually best responses under linearity.
pub fn fcop_optimal(
    game: &MsbGame,
    fcfg: &FcopConfig,
    cfg: &SolveConfig,
) -> Result<CoalitionSolution, SearchError> {
    let gammas = linear_gammas(game)?;
    let n = game.n();
    let mut base = 0.0;
    let mut e_stars = Vec::with_capacity(n);
    let mut s_hat = Vec::with_capacity(n);
    for i in 0..n {
        let s0 = game.genai_contribution(i);
        let (s_star, e_star) = standalone_inner(game, i, gammas[i], cfg);
        base += gammas[i] * s0;
        e_stars.push(e_star);
        s_hat.push((gammas[i] * (s_star - s0)).max(0.0));
    }

    let kmax = fcfg.budget_ceiling();
    let mut best: Option<(f64, Coalition)> = None;
    for k in 0..=kmax {
        let c_k = knapsack_select(&fcfg.share_units, &s_hat, k);
        let value: f64 = c_k.members().map(|i| s_hat[i]).sum();
        let w_k = (1.0 - k as f64 * fcfg.epsilon) * (base + value);
        let replace = match &best {
            None => true,
            Some((bw, bc)) => improves(w_k, c_k, *bw, *bc),
        };
        if replace {
            best = Some((w_k, c_k));
        }
    }
    let (_, coalition) = best.expect("budget loop is nonempty");
    let efforts: Vec<f64> = (0..n)
        .map(|i| if coalition.contains(i) { e_stars[i] } else { 0.0 })
        .collect();
    Ok(assemble_solution(game, coalition, efforts, SolveMethod::Fcop, 0, true, cfg))
}

// ---------------------------------------------------------------------------
// Almost-linear instances
// ---------------------------------------------------------------------------

/// Exhaustive search over the coupled players `nprime` combined with the
/// knapsack over the remaining linear players. Requires every benefit term to
/// lie entirely within `nprime` or be a singleton outside it.
pub fn almost_linear_optimal(
    game: &MsbGame,
    nprime: Coalition,
    fcfg: &FcopConfig,
    cfg: &SolveConfig,
) -> Result<CoalitionSolution, SearchError> {
    let n = game.n();
    if !nprime.is_subset_of(Coalition::full(n)) {
        return Err(SearchError::NotDecomposable {
            nprime,
            reason: format!("N' is not within 1..={n}"),
        });
    }
    if nprime.len() > ALMOST_LINEAR_CAP {
        return Err(SearchError::CapExceeded {
            what: "almost-linear coupled part",
            n: nprime.len(),
            cap: ALMOST_LINEAR_CAP,
        });
    }

    // Validate the decomposition and collect the linear coefficients.
    let mut gammas = vec![0.0; n];
    for (k, term) in game.benefit().terms().iter().enumerate() {
        if term.players.is_subset_of(nprime) {
            continue;
        }
        if term.players.len() == 1 {
            let i = term.players.members().next().unwrap();
            gammas[i] += term.coeff;
        } else {
            return Err(SearchError::NotDecomposable {
                nprime,
                reason: format!("term {k} ({}) couples players outside N'", term.players),
            });
        }
    }

    let lin_players: Vec<usize> = (0..n).filter(|&i| !nprime.contains(i)).collect();
    let mut base_lin = 0.0;
    let mut lin_units = Vec::with_capacity(lin_players.len());
    let mut lin_values = Vec::with_capacity(lin_players.len());
    let mut lin_efforts = Vec::with_capacity(lin_players.len());
    for &j in &lin_players {
        let s0 = game.genai_contribution(j);
        let a = game.share(j) * gammas[j];
        let e_star = best_effort(a, game.contribution(j), true, game.cost(j), cfg, TieBreak::Greatest);
        let s_star = game.contribution(j).value(e_star, true);
        base_lin += gammas[j] * s0;
        lin_units.push(fcfg.share_units[j]);
        lin_values.push((gammas[j] * (s_star - s0)).max(0.0));
        lin_efforts.push(e_star);
    }

    // One knapsack per residual budget, shared across all coupled subsets.
    let kmax = fcfg.budget_ceiling();
    let knap: Vec<(Coalition, f64)> = (0..=kmax)
        .map(|b| {
            let sel = knapsack_select(&lin_units, &lin_values, b);
            let val: f64 = sel.members().map(|p| lin_values[p]).sum();
            (sel, val)
        })
        .collect();

    let g = GenAiProfile::all(n);
    let mut best: Option<(f64, Coalition, EquilibriumResult, Coalition)> = None;
    for s_sub in nprime.subsets() {
        let eq = dominant_equilibrium(game, s_sub, &g, cfg)?;
        let s_tilde = game.contribution_vector(&eq.efforts, &g, s_sub);
        let f_coupled: f64 = game
            .benefit()
            .terms()
            .iter()
            .filter(|t| t.players.is_subset_of(nprime))
            .map(|t| t.coeff * t.players.members().map(|j| s_tilde[j]).product::<f64>())
            .sum();
        let k_s: u64 = s_sub.members().map(|i| fcfg.share_units[i]).sum();
        for k in k_s..=kmax.max(k_s) {
            let (sel, val) = &knap[(k - k_s).min(kmax) as usize];
            let coalition = s_sub
                .members()
                .chain(sel.members().map(|p| lin_players[p]))
                .fold(Coalition::EMPTY, |c, i| c.with(i));
            let w = (1.0 - k as f64 * fcfg.epsilon) * (f_coupled + base_lin + val);
            let replace = match &best {
                None => true,
                Some((bw, bc, _, _)) => improves(w, coalition, *bw, *bc),
            };
            if replace {
                best = Some((w, coalition, eq.clone(), *sel));
            }
        }
    }

    let (_, coalition, eq_s, sel) = best.expect("subset loop covers the empty set");
    let mut efforts = vec![0.0; n];
    for i in eq_s.coalition.members() {
        efforts[i] = eq_s.efforts.get(i);
    }
    for p in sel.members() {
        efforts[lin_players[p]] = lin_efforts[p];
    }
    Ok(assemble_solution(
        game,
        coalition,
        efforts,
        SolveMethod::AlmostLinear,
        eq_s.sweeps_used,
        eq_s.converged,
        cfg,
    ))
}

// ---------------------------------------------------------------------------
// Clique reduction
// ---------------------------------------------------------------------------

/// A simple undirected graph; vertices are 0-based internally, 1-based in files.
#[derive(Debug, Clone)]
pub struct Graph {
    num_vertices: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(num_vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self, SearchError> {
        let mut normalized = Vec::with_capacity(edges.len());
        for &(u, v) in &edges {
            if u == v {
                return Err(SearchError::MalformedGraph(format!("self-loop at vertex {}", u + 1)));
            }
            if u >= num_vertices || v >= num_vertices {
                return Err(SearchError::MalformedGraph(format!(
                    "edge ({}, {}) outside 1..={num_vertices}",
                    u + 1,
                    v + 1
                )));
            }
            normalized.push((u.min(v), u.max(v)));
        }
        normalized.sort_unstable();
        if normalized.windows(2).any(|w| w[0] == w[1]) {
            return Err(SearchError::MalformedGraph("duplicate edge".into()));
        }
        Ok(Graph {
            num_vertices,
            edges: normalized,
        })
    }

    /// Parse a whitespace-separated edge list, one `u v` pair (1-based) per
    /// line. Blank lines and `#` comments are skipped; the vertex count is the
    /// largest id seen.
    pub fn parse(text: &str) -> Result<Self, SearchError> {
        let mut edges = Vec::new();
        let mut max_vertex = 0usize;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let parse_id = |tok: Option<&str>| -> Result<usize, SearchError> {
                let tok = tok.ok_or_else(|| {
                    SearchError::MalformedGraph(format!("line {}: expected `u v`", lineno + 1))
                })?;
                let id: usize = tok.parse().map_err(|_| {
                    SearchError::MalformedGraph(format!("line {}: bad vertex id {tok:?}", lineno + 1))
                })?;
                if id == 0 {
                    return Err(SearchError::MalformedGraph(format!(
                        "line {}: vertex ids are 1-based",
                        lineno + 1
                    )));
                }
                Ok(id)
            };
            let u = parse_id(it.next())?;
            let v = parse_id(it.next())?;
            if it.next().is_some() {
                return Err(SearchError::MalformedGraph(format!(
                    "line {}: expected exactly two ids",
                    lineno + 1
                )));
            }
            max_vertex = max_vertex.max(u).max(v);
            edges.push((u - 1, v - 1));
        }
        Graph::new(max_vertex, edges)
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
}

/// The reduction's optimal value when a `k`-clique exists: `k(k-1)^2 / (6k-4)`.
pub fn clique_reduction_wmax(k: usize) -> f64 {
    let kf = k as f64;
    kf * (kf - 1.0) * (kf - 1.0) / (6.0 * kf - 4.0)
}

/// Principal utility of a size-`ktilde` clique coalition in the reduction
/// instance built for target `k`.
pub fn clique_reduction_r(k: usize, ktilde: usize) -> f64 {
    let kf = k as f64;
    let t = ktilde as f64;
    (1.0 - t * (2.0 * kf - 1.0) / (kf * (3.0 * kf - 2.0))) * t * (t - 1.0) / 2.0
}

/// Encode a clique query as a game: uniform shares `(2k-1)/(k(3k-2))`,
/// indicator contributions, zero costs, and one pairwise benefit term per edge.
pub fn build_clique_instance(graph: &Graph, k: usize) -> Result<MsbGame, SearchError> {
    let v = graph.num_vertices();
    if k < 2 || k > v {
        return Err(SearchError::MalformedGraph(format!(
            "clique size {k} must be in 2..=|V| = {v}"
        )));
    }
    let kf = k as f64;
    let theta = (2.0 * kf - 1.0) / (kf * (3.0 * kf - 2.0));
    let terms = graph
        .edges()
        .iter()
        .map(|&(u, w)| BenefitTerm {
            players: Coalition::from_players([u, w]),
            coeff: 1.0,
        })
        .collect();
    let benefit = MultilinearBenefit::new(v, terms).expect("edge terms are valid");
    Ok(MsbGame::new(
        vec![theta; v],
        vec![ContributionSpec::Indicator; v],
        vec![CostSpec::Zero; v],
        benefit,
    )
    .expect("reduction instance is valid"))
}

#[derive(Debug, Clone, Serialize)]
pub struct CliqueDecision {
    pub has_clique: bool,
    pub w_star: f64,
    pub w_max: f64,
    pub coalition: Coalition,
}

/// Decide whether the graph has a `k`-clique by solving the reduction
/// instance and comparing the optimal principal utility to its clique value.
pub fn clique_decision(graph: &Graph, k: usize, cfg: &SolveConfig) -> Result<CliqueDecision, SearchError> {
    let v = graph.num_vertices();
    if v > BRUTE_FORCE_CAP {
        return Err(SearchError::CapExceeded {
            what: "clique decision",
            n: v,
            cap: BRUTE_FORCE_CAP,
        });
    }
    let game = build_clique_instance(graph, k)?;
    let sol = brute_force_optimal(&game, cfg)?;
    let w_max = clique_reduction_wmax(k);
    Ok(CliqueDecision {
        has_clique: (sol.principal_utility - w_max).abs() <= CLIQUE_DECISION_TOL,
        w_star: sol.principal_utility,
        w_max,
        coalition: sol.coalition,
    })
}
