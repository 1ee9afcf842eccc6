//! Game definitions: player contributions, effort costs, the multilinear shared
//! benefit, coalitions, and the utility functions built from them.
//!
//! Everything here is immutable after construction and cheap to clone, so
//! solvers and batch runners can share games across threads freely.

use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};
use std::fmt;
use thiserror::Error;

/// Coalitions are bitmasks in a `u64`; one bit is reserved headroom.
pub const MAX_PLAYERS: usize = 63;

#[derive(Debug, Error)]
pub enum GameError {
    #[error("instance parse error: {0}")]
    Parse(String),
    #[error("invalid instance: {field}: {message}")]
    Invalid { field: String, message: String },
    #[error("effort {value} is outside [0, 1]")]
    EffortOutOfRange { value: f64 },
    #[error("player index {index} out of range for {n} players")]
    PlayerIndex { index: usize, n: usize },
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> GameError {
    GameError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

// ---------------------------------------------------------------------------
// Coalition
// ---------------------------------------------------------------------------

/// A subset of players, stored as a bitmask. Bit `i` is player `i` (0-based
/// internally; all user-facing text and JSON use 1-based player ids).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Coalition(u64);

impl Coalition {
    pub const EMPTY: Coalition = Coalition(0);

    pub fn from_mask(mask: u64) -> Self {
        Coalition(mask)
    }

    /// The full coalition over `n` players.
    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_PLAYERS, "at most {MAX_PLAYERS} players");
        if n == 0 {
            Coalition(0)
        } else {
            Coalition(u64::MAX >> (64 - n))
        }
    }

    pub fn from_players<I: IntoIterator<Item = usize>>(players: I) -> Self {
        let mut mask = 0u64;
        for p in players {
            assert!(p < MAX_PLAYERS, "player index {p} out of range");
            mask |= 1 << p;
        }
        Coalition(mask)
    }

    pub fn mask(self) -> u64 {
        self.0
    }

    pub fn contains(self, player: usize) -> bool {
        player < 64 && self.0 & (1 << player) != 0
    }

    pub fn with(self, player: usize) -> Self {
        Coalition(self.0 | (1 << player))
    }

    pub fn without(self, player: usize) -> Self {
        Coalition(self.0 & !(1 << player))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset_of(self, other: Coalition) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_strict_subset_of(self, other: Coalition) -> bool {
        self != other && self.is_subset_of(other)
    }

    /// Member indices in ascending order.
    pub fn members(self) -> impl Iterator<Item = usize> {
        let mut m = self.0;
        std::iter::from_fn(move || {
            if m == 0 {
                None
            } else {
                let i = m.trailing_zeros() as usize;
                m &= m - 1;
                Some(i)
            }
        })
    }

    /// All submasks of `self` (including the empty set and `self` itself),
    /// in ascending numerical order.
    pub fn subsets(self) -> Subsets {
        Subsets {
            mask: self.0,
            next: Some(0),
        }
    }
}

pub struct Subsets {
    mask: u64,
    next: Option<u64>,
}

impl Iterator for Subsets {
    type Item = Coalition;

    fn next(&mut self) -> Option<Coalition> {
        let cur = self.next?;
        self.next = if cur == self.mask {
            None
        } else {
            Some(cur.wrapping_sub(self.mask) & self.mask)
        };
        Some(Coalition(cur))
    }
}

impl fmt::Display for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.members().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, "}}")
    }
}

impl Serialize for Coalition {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("Coalition", 2)?;
        st.serialize_field("mask", &self.0)?;
        st.serialize_field("players", &self.members().map(|i| i + 1).collect::<Vec<_>>())?;
        st.end()
    }
}

// ---------------------------------------------------------------------------
// Contribution and cost families
// ---------------------------------------------------------------------------

/// Parametric contribution function `s(e, g)` of effort `e` in `[0,1]` and the
/// player's tool-usage flag `g`. A closed set of variants keeps instances
/// serializable and lets the solvers use closed-form best responses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ContributionSpec {
    /// `s(e, g) = (alpha * e + beta * g) ^ exponent`, exponent in `(0, 1]`.
    Power { alpha: f64, beta: f64, exponent: f64 },
    /// `s(e, g) = slope * e + genai_gain * g + offset`.
    Affine {
        slope: f64,
        genai_gain: f64,
        offset: f64,
    },
    /// `s(e, g) = 1` if `e = 1`, else `0`.
    Indicator,
}

impl ContributionSpec {
    /// Unchecked evaluation; callers guarantee `e` in `[0,1]`.
    pub(crate) fn value(&self, e: f64, g: bool) -> f64 {
        match *self {
            ContributionSpec::Power {
                alpha,
                beta,
                exponent,
            } => {
                let base = alpha * e + if g { beta } else { 0.0 };
                if exponent == 1.0 {
                    base
                } else if exponent == 0.5 {
                    base.sqrt()
                } else {
                    base.powf(exponent)
                }
            }
            ContributionSpec::Affine {
                slope,
                genai_gain,
                offset,
            } => slope * e + if g { genai_gain } else { 0.0 } + offset,
            ContributionSpec::Indicator => {
                if e == 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    fn validate(&self, field: &str) -> Result<(), GameError> {
        let nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(invalid(format!("{field}.{name}"), format!("{v} must be finite and >= 0")))
            }
        };
        match *self {
            ContributionSpec::Power {
                alpha,
                beta,
                exponent,
            } => {
                nonneg("alpha", alpha)?;
                nonneg("beta", beta)?;
                if !(exponent.is_finite() && exponent > 0.0 && exponent <= 1.0) {
                    return Err(invalid(
                        format!("{field}.exponent"),
                        format!("{exponent} must be in (0, 1]"),
                    ));
                }
                Ok(())
            }
            ContributionSpec::Affine {
                slope,
                genai_gain,
                offset,
            } => {
                nonneg("slope", slope)?;
                nonneg("genai_gain", genai_gain)?;
                nonneg("offset", offset)
            }
            ContributionSpec::Indicator => Ok(()),
        }
    }
}

/// Parametric effort-cost function `c(e)` with `c(0) = 0`, nondecreasing on `[0,1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CostSpec {
    Zero,
    /// `c(e) = delta * e`.
    Linear { delta: f64 },
    /// `c(e) = scale * ln(1 + e)`.
    Log { scale: f64 },
    /// `c(e) = scale * sqrt(e)`.
    Sqrt { scale: f64 },
    /// `c(e) = e^2 / (2 * half_inv_scale)`.
    Quadratic { half_inv_scale: f64 },
}

impl CostSpec {
    /// Unchecked evaluation; callers guarantee `e` in `[0,1]`.
    pub(crate) fn value(&self, e: f64) -> f64 {
        match *self {
            CostSpec::Zero => 0.0,
            CostSpec::Linear { delta } => delta * e,
            CostSpec::Log { scale } => scale * e.ln_1p(),
            CostSpec::Sqrt { scale } => scale * e.sqrt(),
            CostSpec::Quadratic { half_inv_scale } => e * e / (2.0 * half_inv_scale),
        }
    }

    fn validate(&self, field: &str) -> Result<(), GameError> {
        match *self {
            CostSpec::Zero => Ok(()),
            CostSpec::Linear { delta } if delta.is_finite() && delta >= 0.0 => Ok(()),
            CostSpec::Linear { delta } => Err(invalid(
                format!("{field}.delta"),
                format!("{delta} must be finite and >= 0"),
            )),
            CostSpec::Log { scale } | CostSpec::Sqrt { scale }
                if scale.is_finite() && scale >= 0.0 =>
            {
                Ok(())
            }
            CostSpec::Log { scale } | CostSpec::Sqrt { scale } => Err(invalid(
                format!("{field}.scale"),
                format!("{scale} must be finite and >= 0"),
            )),
            CostSpec::Quadratic { half_inv_scale }
                if half_inv_scale.is_finite() && half_inv_scale > 0.0 =>
            {
                Ok(())
            }
            CostSpec::Quadratic { half_inv_scale } => Err(invalid(
                format!("{field}.half_inv_scale"),
                format!("{half_inv_scale} must be finite and > 0"),
            )),
        }
    }
}

/// Checked evaluation of a contribution spec; rejects efforts outside `[0,1]`.
pub fn eval_contribution(spec: &ContributionSpec, e: f64, g: bool) -> Result<f64, GameError> {
    if !(0.0..=1.0).contains(&e) {
        return Err(GameError::EffortOutOfRange { value: e });
    }
    Ok(spec.value(e, g))
}

/// Checked evaluation of a cost spec; rejects efforts outside `[0,1]`.
pub fn eval_cost(spec: &CostSpec, e: f64) -> Result<f64, GameError> {
    if !(0.0..=1.0).contains(&e) {
        return Err(GameError::EffortOutOfRange { value: e });
    }
    Ok(spec.value(e))
}

// ---------------------------------------------------------------------------
// Multilinear shared benefit
// ---------------------------------------------------------------------------

/// One monomial of the shared benefit: `coeff * prod_{i in players} s_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenefitTerm {
    pub players: Coalition,
    pub coeff: f64,
}

/// Multilinear polynomial over the player contributions, with nonnegative
/// coefficients and at most one term per player subset.
#[derive(Debug, Clone, PartialEq)]
pub struct MultilinearBenefit {
    terms: Vec<BenefitTerm>,
    num_players: usize,
}

impl MultilinearBenefit {
    pub fn new(num_players: usize, terms: Vec<BenefitTerm>) -> Result<Self, GameError> {
        if num_players > MAX_PLAYERS {
            return Err(invalid("benefit.num_players", format!("{num_players} exceeds {MAX_PLAYERS}")));
        }
        let full = Coalition::full(num_players);
        let mut seen: Vec<u64> = Vec::with_capacity(terms.len());
        for (k, term) in terms.iter().enumerate() {
            if !(term.coeff.is_finite() && term.coeff >= 0.0) {
                return Err(invalid(
                    format!("benefit.terms[{k}].coeff"),
                    format!("{} must be finite and >= 0", term.coeff),
                ));
            }
            if !term.players.is_subset_of(full) {
                return Err(invalid(
                    format!("benefit.terms[{k}].players"),
                    format!("{} is not within 1..={num_players}", term.players),
                ));
            }
            seen.push(term.players.mask());
        }
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("benefit.terms", "duplicate player subsets"));
        }
        Ok(MultilinearBenefit { terms, num_players })
    }

    pub fn num_players(&self) -> usize {
        self.num_players
    }

    pub fn terms(&self) -> &[BenefitTerm] {
        &self.terms
    }

    /// Evaluate the polynomial at a contribution vector.
    pub fn eval(&self, s: &[f64]) -> f64 {
        debug_assert_eq!(s.len(), self.num_players);
        self.terms
            .iter()
            .map(|t| t.coeff * t.players.members().map(|j| s[j]).product::<f64>())
            .sum()
    }

    /// Split `F` as `A * s_i + B` for fixed contributions of the other players.
    /// Exact by multilinearity: no term contains `s_i` twice.
    pub fn linearize(&self, i: usize, s: &[f64]) -> (f64, f64) {
        debug_assert!(i < self.num_players);
        let mut a = 0.0;
        let mut b = 0.0;
        for t in &self.terms {
            if t.players.contains(i) {
                a += t.coeff
                    * t.players
                        .members()
                        .filter(|&j| j != i)
                        .map(|j| s[j])
                        .product::<f64>();
            } else {
                b += t.coeff * t.players.members().map(|j| s[j]).product::<f64>();
            }
        }
        (a, b)
    }

    /// Per-player coefficients if every term is a singleton, else `None`.
    pub fn linear_coefficients(&self) -> Option<Vec<f64>> {
        let mut gammas = vec![0.0; self.num_players];
        for t in &self.terms {
            if t.players.len() != 1 {
                return None;
            }
            let i = t.players.members().next().unwrap();
            gammas[i] += t.coeff;
        }
        Some(gammas)
    }
}

// ---------------------------------------------------------------------------
// Profiles
// ---------------------------------------------------------------------------

/// Per-player effort levels, each in `[0,1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct EffortProfile(Vec<f64>);

impl EffortProfile {
    pub fn new(efforts: Vec<f64>) -> Result<Self, GameError> {
        for &e in &efforts {
            if !(e.is_finite() && (0.0..=1.0).contains(&e)) {
                return Err(GameError::EffortOutOfRange { value: e });
            }
        }
        Ok(EffortProfile(efforts))
    }

    pub fn zeros(n: usize) -> Self {
        EffortProfile(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Per-player GenAI usage flags.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct GenAiProfile(Vec<bool>);

impl GenAiProfile {
    pub fn new(usage: Vec<bool>) -> Self {
        GenAiProfile(usage)
    }

    pub fn all(n: usize) -> Self {
        GenAiProfile(vec![true; n])
    }

    pub fn none(n: usize) -> Self {
        GenAiProfile(vec![false; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }
}

// ---------------------------------------------------------------------------
// The game
// ---------------------------------------------------------------------------

/// A managed shared-benefit game: `n` players with fixed benefit portions,
/// contribution and cost functions, and a multilinear shared benefit.
///
/// Portion sums above 1 are allowed; the principal's utility simply goes
/// negative for coalitions whose members claim more than the whole benefit.
#[derive(Debug, Clone, PartialEq)]
pub struct MsbGame {
    shares: Vec<f64>,
    contributions: Vec<ContributionSpec>,
    costs: Vec<CostSpec>,
    benefit: MultilinearBenefit,
}

impl MsbGame {
    pub fn new(
        shares: Vec<f64>,
        contributions: Vec<ContributionSpec>,
        costs: Vec<CostSpec>,
        benefit: MultilinearBenefit,
    ) -> Result<Self, GameError> {
        let n = shares.len();
        if n == 0 || n > MAX_PLAYERS {
            return Err(invalid("n", format!("{n} players; must be in 1..={MAX_PLAYERS}")));
        }
        if contributions.len() != n {
            return Err(invalid(
                "contributions",
                format!("{} entries for {n} players", contributions.len()),
            ));
        }
        if costs.len() != n {
            return Err(invalid("costs", format!("{} entries for {n} players", costs.len())));
        }
        if benefit.num_players() != n {
            return Err(invalid(
                "benefit",
                format!("declared for {} players, game has {n}", benefit.num_players()),
            ));
        }
        for (i, &theta) in shares.iter().enumerate() {
            if !(theta.is_finite() && (0.0..=1.0).contains(&theta)) {
                return Err(invalid(format!("shares[{i}]"), format!("{theta} is outside [0, 1]")));
            }
        }
        for (i, spec) in contributions.iter().enumerate() {
            spec.validate(&format!("contributions[{i}]"))?;
        }
        for (i, spec) in costs.iter().enumerate() {
            spec.validate(&format!("costs[{i}]"))?;
        }
        Ok(MsbGame {
            shares,
            contributions,
            costs,
            benefit,
        })
    }

    pub fn n(&self) -> usize {
        self.shares.len()
    }

    pub fn shares(&self) -> &[f64] {
        &self.shares
    }

    pub fn share(&self, i: usize) -> f64 {
        self.shares[i]
    }

    pub fn contribution(&self, i: usize) -> &ContributionSpec {
        &self.contributions[i]
    }

    pub fn cost(&self, i: usize) -> &CostSpec {
        &self.costs[i]
    }

    pub fn benefit(&self) -> &MultilinearBenefit {
        &self.benefit
    }

    /// The stand-in contribution `s_i(0, 1)` of a player replaced by GenAI.
    pub fn genai_contribution(&self, i: usize) -> f64 {
        self.contributions[i].value(0.0, true)
    }

    /// Coalition-dependent contribution: a member contributes `s_i(e_i, g_i)`,
    /// a replaced player contributes `s_i(0, 1)`.
    pub fn coalition_contribution(
        &self,
        i: usize,
        e_i: f64,
        g_i: bool,
        c: Coalition,
    ) -> Result<f64, GameError> {
        if i >= self.n() {
            return Err(GameError::PlayerIndex { index: i, n: self.n() });
        }
        if !(0.0..=1.0).contains(&e_i) {
            return Err(GameError::EffortOutOfRange { value: e_i });
        }
        Ok(if c.contains(i) {
            self.contributions[i].value(e_i, g_i)
        } else {
            self.genai_contribution(i)
        })
    }

    pub(crate) fn fill_contributions(
        &self,
        efforts: &[f64],
        g: &GenAiProfile,
        c: Coalition,
        out: &mut Vec<f64>,
    ) {
        let n = self.n();
        debug_assert_eq!(efforts.len(), n);
        debug_assert_eq!(g.len(), n);
        out.clear();
        for i in 0..n {
            out.push(if c.contains(i) {
                self.contributions[i].value(efforts[i], g.get(i))
            } else {
                self.genai_contribution(i)
            });
        }
    }

    /// The coalition-dependent contribution vector at a strategy profile.
    pub fn contribution_vector(&self, e: &EffortProfile, g: &GenAiProfile, c: Coalition) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n());
        self.fill_contributions(e.as_slice(), g, c, &mut out);
        out
    }

    /// Shared benefit `f(e, g, C)`: `F` applied to coalition-dependent contributions.
    pub fn shared_benefit(&self, e: &EffortProfile, g: &GenAiProfile, c: Coalition) -> f64 {
        assert_eq!(e.len(), self.n(), "effort profile length");
        assert_eq!(g.len(), self.n(), "genai profile length");
        self.benefit.eval(&self.contribution_vector(e, g, c))
    }

    /// `U_i = 1{i in C} * theta_i * f - c_i(e_i)`.
    pub fn player_utility(
        &self,
        i: usize,
        e: &EffortProfile,
        g: &GenAiProfile,
        c: Coalition,
    ) -> Result<f64, GameError> {
        if i >= self.n() {
            return Err(GameError::PlayerIndex { index: i, n: self.n() });
        }
        let f = self.shared_benefit(e, g, c);
        Ok(self.utility_from_benefit(i, f, e.get(i), c))
    }

    pub(crate) fn utility_from_benefit(&self, i: usize, f: f64, e_i: f64, c: Coalition) -> f64 {
        let gain = if c.contains(i) { self.shares[i] * f } else { 0.0 };
        gain - self.costs[i].value(e_i)
    }

    /// `W = (1 - sum_{i in C} theta_i) * f`; negative when members claim more
    /// than the whole benefit.
    pub fn principal_utility(&self, e: &EffortProfile, g: &GenAiProfile, c: Coalition) -> f64 {
        (1.0 - self.coalition_share_sum(c)) * self.shared_benefit(e, g, c)
    }

    pub fn coalition_share_sum(&self, c: Coalition) -> f64 {
        c.members().map(|i| self.shares[i]).sum()
    }

    // -- instance JSON ------------------------------------------------------

    /// Parse an instance document, then validate every type invariant.
    /// Syntax errors carry serde's line/column; semantic errors carry the
    /// offending field path.
    pub fn from_json(text: &str) -> Result<Self, GameError> {
        let doc: InstanceDoc =
            serde_json::from_str(text).map_err(|e| GameError::Parse(e.to_string()))?;
        doc.into_game()
    }

    pub fn to_json(&self) -> String {
        let doc = InstanceDoc::from_game(self);
        serde_json::to_string_pretty(&doc).expect("instance serialization")
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceDoc {
    n: usize,
    shares: Vec<f64>,
    contributions: Vec<ContributionSpec>,
    costs: Vec<CostSpec>,
    benefit: BenefitDoc,
}

#[derive(Serialize, Deserialize)]
struct BenefitDoc {
    terms: Vec<TermDoc>,
}

#[derive(Serialize, Deserialize)]
struct TermDoc {
    /// 1-based player indices.
    players: Vec<usize>,
    coeff: f64,
}

impl InstanceDoc {
    fn into_game(self) -> Result<MsbGame, GameError> {
        if self.shares.len() != self.n {
            return Err(invalid(
                "shares",
                format!("{} entries for n = {}", self.shares.len(), self.n),
            ));
        }
        let mut terms = Vec::with_capacity(self.benefit.terms.len());
        for (k, term) in self.benefit.terms.iter().enumerate() {
            let mut members = Coalition::EMPTY;
            for &p in &term.players {
                if p == 0 || p > self.n {
                    return Err(invalid(
                        format!("benefit.terms[{k}].players"),
                        format!("player {p} out of range 1..={}", self.n),
                    ));
                }
                if members.contains(p - 1) {
                    return Err(invalid(
                        format!("benefit.terms[{k}].players"),
                        format!("player {p} listed twice"),
                    ));
                }
                members = members.with(p - 1);
            }
            terms.push(BenefitTerm {
                players: members,
                coeff: term.coeff,
            });
        }
        let benefit = MultilinearBenefit::new(self.n, terms)?;
        MsbGame::new(self.shares, self.contributions, self.costs, benefit)
    }

    fn from_game(game: &MsbGame) -> Self {
        InstanceDoc {
            n: game.n(),
            shares: game.shares.clone(),
            contributions: game.contributions.clone(),
            costs: game.costs.clone(),
            benefit: BenefitDoc {
                terms: game
                    .benefit
                    .terms()
                    .iter()
                    .map(|t| TermDoc {
                        players: t.players.members().map(|i| i + 1).collect(),
                        coeff: t.coeff,
                    })
                    .collect(),
            },
        }
    }
}
