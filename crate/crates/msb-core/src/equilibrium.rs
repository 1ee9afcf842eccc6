//! Dominant-equilibrium computation for effort subgames.
//!
//! With the coalition and GenAI profile fixed, each player maximizes
//! `theta_i * (A * s_i(e) + B) - c_i(e)` where `(A, B)` comes from linearizing
//! the shared benefit in that player's contribution. The games are
//! supermodular, so round-robin best responses started from the top of the
//! effort lattice descend monotonically to the greatest equilibrium; started
//! from the bottom with least-maximizer tie-breaking they ascend to the least.

use crate::game::{Coalition, ContributionSpec, CostSpec, EffortProfile, GenAiProfile, MsbGame};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

/// Numerical slack allowed before a non-monotone sweep aborts the solve.
const MONOTONE_SLACK: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum EquilibriumError {
    #[error("invalid solver config: {0}")]
    InvalidConfig(String),
    #[error(
        "best-response sweep {sweep} moved player {player} from {prev} to {next} against the monotone direction"
    )]
    MonotonicityViolation {
        player: usize,
        sweep: usize,
        prev: f64,
        next: f64,
    },
}

/// Solver knobs shared by every equilibrium computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    /// Stop when the sup-norm effort change of a full sweep drops below this.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Candidates within this utility gap of the best tie; the tie-break picks
    /// the largest (or smallest) effort among them.
    pub tie_tol: f64,
    /// Resolution of the fallback search grid and of the residual certificate.
    pub grid_points: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            tol: 1e-8,
            max_sweeps: 10_000,
            tie_tol: 1e-10,
            grid_points: 1025,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<(), EquilibriumError> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(EquilibriumError::InvalidConfig(format!("tol = {}", self.tol)));
        }
        if self.max_sweeps < 1 {
            return Err(EquilibriumError::InvalidConfig("max_sweeps = 0".into()));
        }
        if !(self.tie_tol.is_finite() && self.tie_tol > 0.0) {
            return Err(EquilibriumError::InvalidConfig(format!("tie_tol = {}", self.tie_tol)));
        }
        if self.grid_points < 3 {
            return Err(EquilibriumError::InvalidConfig(format!(
                "grid_points = {} (need >= 3)",
                self.grid_points
            )));
        }
        Ok(())
    }
}

/// A converged (or diagnosed) fixed point of the best-response dynamics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumResult {
    pub efforts: EffortProfile,
    pub genai: GenAiProfile,
    pub coalition: Coalition,
    pub shared_benefit: f64,
    pub player_utilities: Vec<f64>,
    pub principal_utility: f64,
    pub sweeps_used: usize,
    pub converged: bool,
    /// Largest single-player utility improvement available at termination,
    /// measured over the config grid.
    pub max_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum TieBreak {
    Greatest,
    Least,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    FromTop,
    FromBottom,
}

// ---------------------------------------------------------------------------
// One-dimensional effort maximization
// ---------------------------------------------------------------------------

struct Roots {
    buf: [f64; 3],
    len: usize,
}

impl Roots {
    fn empty() -> Self {
        Roots { buf: [0.0; 3], len: 0 }
    }

    fn push(&mut self, x: f64) {
        self.buf[self.len] = x;
        self.len += 1;
    }

    fn as_slice(&self) -> &[f64] {
        &self.buf[..self.len]
    }
}

/// Stationary points of `phi(e) = a*s(e,g) - c(e)` in closed form, or `None`
/// when the pair has no radical solution and the grid fallback must run.
/// Spurious roots are fine (everything gets evaluated); missing ones are not.
fn stationary_roots(a: f64, spec: &ContributionSpec, g: bool, cost: &CostSpec) -> Option<Roots> {
    match *spec {
        // Discontinuous at 1; constant elsewhere. Candidates are exactly {0, 1}.
        ContributionSpec::Indicator => Some(Roots::empty()),
        ContributionSpec::Affine { slope, .. } => Some(slope_roots(a * slope, cost)),
        ContributionSpec::Power {
            alpha,
            beta,
            exponent,
        } => {
            if exponent == 1.0 {
                return Some(slope_roots(a * alpha, cost));
            }
            power_roots(a, alpha, if g { beta } else { 0.0 }, exponent, cost)
        }
    }
}

/// Roots of `am - c'(e) = 0` for a contribution with constant derivative `am`.
fn slope_roots(am: f64, cost: &CostSpec) -> Roots {
    let mut roots = Roots::empty();
    match *cost {
        CostSpec::Zero | CostSpec::Linear { .. } => {}
        CostSpec::Log { scale } => {
            if am > 0.0 && scale > 0.0 {
                roots.push(scale / am - 1.0);
            }
        }
        CostSpec::Sqrt { scale } => {
            // Interior stationary point is a minimum here, but evaluating it is harmless.
            if am > 0.0 && scale > 0.0 {
                let r = scale / (2.0 * am);
                roots.push(r * r);
            }
        }
        CostSpec::Quadratic { half_inv_scale } => {
            roots.push(am * half_inv_scale);
        }
    }
    roots
}

/// Roots of `c1 * u^(p-1) - c'(e) = 0` with `u = alpha*e + bg`, `p` in `(0,1)`.
fn power_roots(a: f64, alpha: f64, bg: f64, p: f64, cost: &CostSpec) -> Option<Roots> {
    let c1 = a * p * alpha;
    let mut roots = Roots::empty();
    match *cost {
        CostSpec::Zero => Some(roots),
        CostSpec::Linear { delta } => {
            if c1 > 0.0 && delta > 0.0 && alpha > 0.0 {
                let u = (c1 / delta).powf(1.0 / (1.0 - p));
                roots.push((u - bg) / alpha);
            }
            Some(roots)
        }
        CostSpec::Log { scale } => {
            if p != 0.5 {
                return None;
            }
            // c1*(1+e) = scale*sqrt(u); squaring gives a quadratic in e.
            if c1 > 0.0 && scale > 0.0 {
                let c1sq = c1 * c1;
                let s2 = scale * scale;
                for r in quadratic_roots(c1sq, 2.0 * c1sq - s2 * alpha, c1sq - s2 * bg) {
                    roots.push(r);
                }
            }
            Some(roots)
        }
        CostSpec::Sqrt { scale } => {
            if p != 0.5 {
                return None;
            }
            // a*alpha*sqrt(e) = scale*sqrt(u)  =>  e*(a^2 alpha^2 - scale^2 alpha) = scale^2 * bg.
            if c1 > 0.0 && scale > 0.0 && alpha > 0.0 {
                let denom = 4.0 * c1 * c1 - scale * scale * alpha;
                if denom != 0.0 {
                    roots.push(scale * scale * bg / denom);
                }
            }
            Some(roots)
        }
        // Stationarity is a cubic; refine on the grid instead.
        CostSpec::Quadratic { .. } => None,
    }
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> impl Iterator<Item = f64> {
    let mut out = [f64::NAN; 2];
    let disc = b * b - 4.0 * a * c;
    if a != 0.0 && disc >= 0.0 {
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        if q != 0.0 {
            out[0] = q / a;
            out[1] = c / q;
        } else {
            out[0] = 0.0;
        }
    }
    out.into_iter().filter(|x| x.is_finite())
}

fn golden_max(phi: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_895;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = phi(x1);
    let mut f2 = phi(x2);
    for _ in 0..200 {
        if hi - lo <= 1e-13 {
            break;
        }
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = phi(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = phi(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Coarse scan plus golden-section refinement of every bracketing triple.
fn grid_candidates(phi: &impl Fn(f64) -> f64, cfg: &SolveConfig, out: &mut Vec<f64>) {
    let m = cfg.grid_points.max(3);
    let step = 1.0 / (m - 1) as f64;
    let vals: Vec<f64> = (0..m).map(|k| phi(k as f64 * step)).collect();
    for i in 0..m {
        let v = vals[i];
        let left_ok = i == 0 || vals[i - 1] <= v;
        let right_ok = i == m - 1 || vals[i + 1] <= v;
        if !(left_ok && right_ok) {
            continue;
        }
        // Skip interior points of a flat plateau; its edges are refined.
        if i > 0 && i + 1 < m && vals[i - 1] == v && vals[i + 1] == v {
            continue;
        }
        let lo = if i == 0 { 0.0 } else { (i - 1) as f64 * step };
        let hi = if i == m - 1 { 1.0 } else { (i + 1) as f64 * step };
        out.push(golden_max(phi, lo, hi));
    }
}

fn pick(cands: &[f64], phi: &impl Fn(f64) -> f64, tie_tol: f64, tie: TieBreak) -> f64 {
    let mut vmax = f64::NEG_INFINITY;
    for &e in cands {
        let v = phi(e);
        if v > vmax {
            vmax = v;
        }
    }
    let mut best = match tie {
        TieBreak::Greatest => f64::NEG_INFINITY,
        TieBreak::Least => f64::INFINITY,
    };
    for &e in cands {
        if phi(e) >= vmax - tie_tol {
            best = match tie {
                TieBreak::Greatest => best.max(e),
                TieBreak::Least => best.min(e),
            };
        }
    }
    best
}

/// Maximizer of `a*s(e,g) - c(e)` over `[0,1]` under the given tie-break.
/// The candidate set is the endpoints, any closed-form stationary points, and
/// (when no closed form exists) refined local maxima from the search grid.
pub(crate) fn best_effort(
    a: f64,
    spec: &ContributionSpec,
    g: bool,
    cost: &CostSpec,
    cfg: &SolveConfig,
    tie: TieBreak,
) -> f64 {
    let phi = |e: f64| a * spec.value(e, g) - cost.value(e);
    match stationary_roots(a, spec, g, cost) {
        Some(roots) => {
            let mut cands = [0.0f64, 1.0, 0.0, 0.0, 0.0];
            let mut nc = 2;
            for &r in roots.as_slice() {
                if r.is_finite() && r > 0.0 && r < 1.0 {
                    cands[nc] = r;
                    nc += 1;
                }
            }
            pick(&cands[..nc], &phi, cfg.tie_tol, tie)
        }
        None => {
            let mut cands = vec![0.0, 1.0];
            grid_candidates(&phi, cfg, &mut cands);
            pick(&cands, &phi, cfg.tie_tol, tie)
        }
    }
}

/// Greatest best response of member `i` to the contribution vector `s_tilde`
/// (entry `i` is ignored; the rest must reflect the coalition `c`).
pub fn best_response(
    game: &MsbGame,
    i: usize,
    c: Coalition,
    g: &GenAiProfile,
    s_tilde: &[f64],
    cfg: &SolveConfig,
) -> f64 {
    debug_assert!(c.contains(i), "best_response is for coalition members");
    let (a_lin, _) = game.benefit().linearize(i, s_tilde);
    best_effort(
        game.share(i) * a_lin,
        game.contribution(i),
        g.get(i),
        game.cost(i),
        cfg,
        TieBreak::Greatest,
    )
}

// ---------------------------------------------------------------------------
// Best-response dynamics
// ---------------------------------------------------------------------------

/// Greatest pure equilibrium of the effort subgame, via monotone sweeps from
/// the top of the lattice. Non-convergence is reported in the result, not an
/// error; a sweep that moves against the monotone direction aborts.
pub fn dominant_equilibrium(
    game: &MsbGame,
    c: Coalition,
    g: &GenAiProfile,
    cfg: &SolveConfig,
) -> Result<EquilibriumResult, EquilibriumError> {
    solve(game, c, g, cfg, Direction::FromTop)
}

/// Least pure equilibrium: sweeps from the bottom with least-maximizer
/// tie-breaking. Used to test the equilibrium ordering.
pub fn least_equilibrium(
    game: &MsbGame,
    c: Coalition,
    g: &GenAiProfile,
    cfg: &SolveConfig,
) -> Result<EquilibriumResult, EquilibriumError> {
    solve(game, c, g, cfg, Direction::FromBottom)
}

fn solve(
    game: &MsbGame,
    c: Coalition,
    g: &GenAiProfile,
    cfg: &SolveConfig,
    dir: Direction,
) -> Result<EquilibriumResult, EquilibriumError> {
    cfg.validate()?;
    let n = game.n();
    assert_eq!(g.len(), n, "genai profile length");
    let tie = match dir {
        Direction::FromTop => TieBreak::Greatest,
        Direction::FromBottom => TieBreak::Least,
    };

    let mut efforts = vec![0.0; n];
    if dir == Direction::FromTop {
        for i in c.members() {
            efforts[i] = 1.0;
        }
    }
    let mut s = Vec::with_capacity(n);
    game.fill_contributions(&efforts, g, c, &mut s);

    let members: Vec<usize> = c.members().collect();
    let mut sweeps_used = 0;
    let mut converged = members.is_empty();
    if !converged {
        for sweep in 1..=cfg.max_sweeps {
            let mut delta: f64 = 0.0;
            for &i in &members {
                let (a_lin, _) = game.benefit().linearize(i, &s);
                let a = game.share(i) * a_lin;
                let mut e_new = best_effort(a, game.contribution(i), g.get(i), game.cost(i), cfg, tie);
                let e_old = efforts[i];
                match dir {
                    Direction::FromTop => {
                        if e_new > e_old + MONOTONE_SLACK {
                            return Err(EquilibriumError::MonotonicityViolation {
                                player: i,
                                sweep,
                                prev: e_old,
                                next: e_new,
                            });
                        }
                        e_new = e_new.min(e_old);
                    }
                    Direction::FromBottom => {
                        if e_new < e_old - MONOTONE_SLACK {
                            return Err(EquilibriumError::MonotonicityViolation {
                                player: i,
                                sweep,
                                prev: e_old,
                                next: e_new,
                            });
                        }
                        e_new = e_new.max(e_old);
                    }
                }
                delta = delta.max((e_new - e_old).abs());
                efforts[i] = e_new;
                s[i] = game.contribution(i).value(e_new, g.get(i));
            }
            sweeps_used = sweep;
            if delta <= cfg.tol {
                converged = true;
                break;
            }
        }
    }

    Ok(build_result(game, efforts, g.clone(), c, sweeps_used, converged, cfg))
}

/// Assemble a result (utilities, principal utility, grid residual) for a
/// given effort profile. Shared with the coalition solvers, which certify
/// closed-form equilibria without running the dynamics.
pub(crate) fn build_result(
    game: &MsbGame,
    efforts: Vec<f64>,
    genai: GenAiProfile,
    c: Coalition,
    sweeps_used: usize,
    converged: bool,
    cfg: &SolveConfig,
) -> EquilibriumResult {
    let n = game.n();
    let mut s = Vec::with_capacity(n);
    game.fill_contributions(&efforts, &genai, c, &mut s);
    let f = game.benefit().eval(&s);
    let player_utilities: Vec<f64> = (0..n)
        .map(|i| game.utility_from_benefit(i, f, efforts[i], c))
        .collect();
    let principal_utility = (1.0 - game.coalition_share_sum(c)) * f;
    let max_residual = grid_residual(game, c, &genai, &efforts, &s, cfg);
    EquilibriumResult {
        efforts: EffortProfile::new(efforts).expect("solver efforts stay in [0,1]"),
        genai,
        coalition: c,
        shared_benefit: f,
        player_utilities,
        principal_utility,
        sweeps_used,
        converged,
        max_residual,
    }
}

/// Best utility improvement any member could find on the config grid, holding
/// everyone else fixed. A cheap certificate that the profile is (close to) an
/// equilibrium.
fn grid_residual(
    game: &MsbGame,
    c: Coalition,
    g: &GenAiProfile,
    efforts: &[f64],
    s: &[f64],
    cfg: &SolveConfig,
) -> f64 {
    let m = cfg.grid_points.max(3);
    let step = 1.0 / (m - 1) as f64;
    let mut worst: f64 = 0.0;
    for i in c.members() {
        let (a_lin, _) = game.benefit().linearize(i, s);
        let a = game.share(i) * a_lin;
        let spec = game.contribution(i);
        let cost = game.cost(i);
        let g_i = g.get(i);
        let current = a * spec.value(efforts[i], g_i) - cost.value(efforts[i]);
        let mut best = current;
        for k in 0..m {
            let e = k as f64 * step;
            let v = a * spec.value(e, g_i) - cost.value(e);
            if v > best {
                best = v;
            }
        }
        worst = worst.max(best - current);
    }
    worst
}

// ---------------------------------------------------------------------------
// Price of generativity
// ---------------------------------------------------------------------------

/// Ratio of the shared benefit at the no-GenAI dominant equilibrium to the
/// all-GenAI one. `Infinite` when the all-GenAI benefit collapses to zero
/// while the restricted one does not; `1` when both are zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriceOfGenerativity {
    Finite(f64),
    Infinite,
}

impl PriceOfGenerativity {
    pub fn value(self) -> Option<f64> {
        match self {
            PriceOfGenerativity::Finite(x) => Some(x),
            PriceOfGenerativity::Infinite => None,
        }
    }
}

impl std::fmt::Display for PriceOfGenerativity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PriceOfGenerativity::Finite(x) => write!(f, "{x}"),
            PriceOfGenerativity::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for PriceOfGenerativity {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            PriceOfGenerativity::Finite(x) => serializer.serialize_f64(*x),
            PriceOfGenerativity::Infinite => serializer.serialize_str("inf"),
        }
    }
}

pub fn price_of_generativity(
    game: &MsbGame,
    c: Coalition,
    cfg: &SolveConfig,
) -> Result<PriceOfGenerativity, EquilibriumError> {
    let n = game.n();
    let no_genai = solve(game, c, &GenAiProfile::none(n), cfg, Direction::FromTop)?;
    let all_genai = solve(game, c, &GenAiProfile::all(n), cfg, Direction::FromTop)?;
    let num = no_genai.shared_benefit;
    let den = all_genai.shared_benefit;
    Ok(if den == 0.0 {
        if num > 0.0 {
            PriceOfGenerativity::Infinite
        } else {
            PriceOfGenerativity::Finite(1.0)
        }
    } else {
        PriceOfGenerativity::Finite(num / den)
    })
}
