//! Shared fixtures, random-instance builders, and independent oracles for the
//! integration and acceptance suites. Oracles here are deliberately naive
//! (dense scans, subset enumeration) so they never share code with the
//! solver paths they check.

#![allow(dead_code)]

use msb_core::{
    BenefitTerm, Coalition, ContributionSpec, CostSpec, EffortProfile, GenAiProfile, Graph,
    MsbGame, MultilinearBenefit,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub fn load_fixture(name: &str) -> MsbGame {
    let text = std::fs::read_to_string(fixture_path(name))
        .unwrap_or_else(|e| panic!("reading fixture {name}: {e}"));
    MsbGame::from_json(&text).unwrap_or_else(|e| panic!("parsing fixture {name}: {e}"))
}

// ---------------------------------------------------------------------------
// Random instance builders
// ---------------------------------------------------------------------------

pub fn random_contribution(rng: &mut ChaCha8Rng) -> ContributionSpec {
    match rng.random_range(0..4u8) {
        0 => ContributionSpec::Affine {
            slope: rng.random_range(0.0..2.0),
            genai_gain: rng.random_range(0.0..1.0),
            offset: rng.random_range(0.0..0.3),
        },
        1 => ContributionSpec::Power {
            alpha: rng.random_range(0.05..1.5),
            beta: rng.random_range(0.0..1.0),
            exponent: 0.5,
        },
        2 => ContributionSpec::Power {
            alpha: rng.random_range(0.05..1.5),
            beta: rng.random_range(0.0..1.0),
            exponent: 1.0,
        },
        _ => ContributionSpec::Indicator,
    }
}

pub fn random_cost(rng: &mut ChaCha8Rng) -> CostSpec {
    match rng.random_range(0..5u8) {
        0 => CostSpec::Zero,
        1 => CostSpec::Linear {
            delta: rng.random_range(0.0..1.5),
        },
        2 => CostSpec::Log {
            scale: rng.random_range(0.0..1.5),
        },
        3 => CostSpec::Sqrt {
            scale: rng.random_range(0.0..1.5),
        },
        _ => CostSpec::Quadratic {
            half_inv_scale: rng.random_range(0.1..2.0),
        },
    }
}

/// Linear benefit, shares that are integer multiples of `epsilon`.
pub fn random_linear_game(rng: &mut ChaCha8Rng, epsilon: f64) -> MsbGame {
    let n = rng.random_range(3..=10usize);
    let mut shares = Vec::with_capacity(n);
    let mut specs = Vec::with_capacity(n);
    let mut costs = Vec::with_capacity(n);
    let mut terms = Vec::new();
    for i in 0..n {
        shares.push(rng.random_range(0..=4u64) as f64 * epsilon);
        specs.push(random_contribution(rng));
        costs.push(random_cost(rng));
        let gamma: f64 = rng.random_range(0.0..2.0);
        if gamma > 0.0 {
            terms.push(BenefitTerm {
                players: Coalition::from_players([i]),
                coeff: gamma,
            });
        }
    }
    let benefit = MultilinearBenefit::new(n, terms).unwrap();
    MsbGame::new(shares, specs, costs, benefit).unwrap()
}

/// Benefit that splits into a coupled part over a small `N'` and singleton
/// terms elsewhere. Returns the game and `N'`.
pub fn random_decomposable_game(rng: &mut ChaCha8Rng, epsilon: f64) -> (MsbGame, Coalition) {
    let n = rng.random_range(4..=10usize);
    let nprime_size = rng.random_range(0..=3usize);
    let mut members = Vec::new();
    while members.len() < nprime_size {
        let i = rng.random_range(0..n);
        if !members.contains(&i) {
            members.push(i);
        }
    }
    let nprime = Coalition::from_players(members.iter().copied());

    let mut shares = Vec::with_capacity(n);
    let mut specs = Vec::with_capacity(n);
    let mut costs = Vec::with_capacity(n);
    let mut terms = Vec::new();
    for i in 0..n {
        shares.push(rng.random_range(0..=4u64) as f64 * epsilon);
        specs.push(random_contribution(rng));
        costs.push(random_cost(rng));
        if !nprime.contains(i) {
            let gamma: f64 = rng.random_range(0.0..2.0);
            if gamma > 0.0 {
                terms.push(BenefitTerm {
                    players: Coalition::from_players([i]),
                    coeff: gamma,
                });
            }
        }
    }
    // Coupled part: every nonempty subset of N' gets a coefficient with
    // probability 1/2 (the full product term always does).
    let subsets: Vec<Coalition> = nprime.subsets().filter(|s| !s.is_empty()).collect();
    for s in subsets {
        if s == nprime || rng.random_bool(0.5) {
            terms.push(BenefitTerm {
                players: s,
                coeff: rng.random_range(0.1..2.0),
            });
        }
    }
    let benefit = MultilinearBenefit::new(n, terms).unwrap();
    (MsbGame::new(shares, specs, costs, benefit).unwrap(), nprime)
}

// ---------------------------------------------------------------------------
// Graph builders and the exhaustive clique oracle
// ---------------------------------------------------------------------------

pub fn gnp_graph(rng: &mut ChaCha8Rng, v: usize, p: f64) -> Graph {
    let mut edges = Vec::new();
    for a in 0..v {
        for b in a + 1..v {
            if rng.random_bool(p) {
                edges.push((a, b));
            }
        }
    }
    Graph::new(v, edges).unwrap()
}

/// Sparse background noise plus a planted clique on a random vertex subset.
pub fn planted_clique_graph(rng: &mut ChaCha8Rng, v: usize, clique_size: usize) -> Graph {
    let mut picked = Vec::new();
    while picked.len() < clique_size {
        let i = rng.random_range(0..v);
        if !picked.contains(&i) {
            picked.push(i);
        }
    }
    let mut edges = Vec::new();
    for a in 0..v {
        for b in a + 1..v {
            let in_clique = picked.contains(&a) && picked.contains(&b);
            if in_clique || rng.random_bool(0.15) {
                edges.push((a, b));
            }
        }
    }
    Graph::new(v, edges).unwrap()
}

/// Largest clique by checking every vertex subset. Independent of the
/// reduction-based decision procedure.
pub fn max_clique_size(g: &Graph) -> usize {
    let v = g.num_vertices();
    let mut adj = vec![0u64; v];
    for &(a, b) in g.edges() {
        adj[a] |= 1 << b;
        adj[b] |= 1 << a;
    }
    let mut best = 0usize;
    for mask in 0u64..(1 << v) {
        let size = mask.count_ones() as usize;
        if size <= best {
            continue;
        }
        let mut ok = true;
        let mut rest = mask;
        while rest != 0 {
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let others = mask & !(1 << i);
            if others & adj[i] != others {
                ok = false;
                break;
            }
        }
        if ok {
            best = size;
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Dense-scan oracles
// ---------------------------------------------------------------------------

/// Best value over all item subsets; the reference for the knapsack DP.
pub fn knapsack_brute_value(weights: &[u64], values: &[f64], budget: u64) -> f64 {
    let n = weights.len();
    let mut best = 0.0f64;
    for mask in 0u64..(1 << n) {
        let mut w = 0u64;
        let mut v = 0.0;
        for i in 0..n {
            if mask & (1 << i) != 0 {
                w += weights[i];
                v += values[i];
            }
        }
        if w <= budget && v > best {
            best = v;
        }
    }
    best
}

/// All grid profiles of a 2-player subgame where each member's effort is a
/// best response over the same grid (within `tol`), and their component-wise
/// minimum and maximum.
pub fn grid_equilibria_2p(
    game: &MsbGame,
    c: Coalition,
    g: &GenAiProfile,
    points: usize,
    tol: f64,
) -> (Vec<(f64, f64)>, (f64, f64), (f64, f64)) {
    assert_eq!(game.n(), 2);
    let grid: Vec<f64> = (0..points).map(|k| k as f64 / (points - 1) as f64).collect();
    let utility = |i: usize, e1: f64, e2: f64| {
        let e = EffortProfile::new(vec![e1, e2]).unwrap();
        game.player_utility(i, &e, g, c).unwrap()
    };
    let mut equilibria = Vec::new();
    for &e1 in &grid {
        for &e2 in &grid {
            let mut is_eq = true;
            if c.contains(0) {
                let u = utility(0, e1, e2);
                if grid.iter().any(|&x| utility(0, x, e2) > u + tol) {
                    is_eq = false;
                }
            } else if e1 != 0.0 {
                is_eq = false;
            }
            if is_eq && c.contains(1) {
                let u = utility(1, e1, e2);
                if grid.iter().any(|&x| utility(1, e1, x) > u + tol) {
                    is_eq = false;
                }
            } else if is_eq && !c.contains(1) && e2 != 0.0 {
                is_eq = false;
            }
            if is_eq {
                equilibria.push((e1, e2));
            }
        }
    }
    assert!(!equilibria.is_empty(), "grid found no equilibrium");
    let least = equilibria.iter().fold((1.0f64, 1.0f64), |acc, &(a, b)| {
        (acc.0.min(a), acc.1.min(b))
    });
    let greatest = equilibria.iter().fold((0.0f64, 0.0f64), |acc, &(a, b)| {
        (acc.0.max(a), acc.1.max(b))
    });
    (equilibria, least, greatest)
}
