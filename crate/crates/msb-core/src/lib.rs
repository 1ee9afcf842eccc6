//! Solver library for managed shared-benefit games.
//!
//! A principal selects a coalition of players to work on a shared task;
//! excluded players are replaced by a freely available GenAI stand-in. Each
//! player picks an effort level (and whether to use GenAI) to maximize a
//! fixed portion of the shared benefit minus a private effort cost. The
//! library computes the dominant equilibrium of the resulting effort
//! subgames, optimizes the principal's coalition choice (exhaustively, and
//! via a knapsack method for linear and almost-linear benefits), analyzes
//! coalition stability and marginal member value, and runs randomized batch
//! experiments over product-form instances.

pub mod analysis;
pub mod equilibrium;
pub mod experiment;
pub mod game;
pub mod search;

pub use analysis::{
    best_deviation, is_stable, myopic_removal_dynamics, vsr, AnalysisError, DynamicsStep,
    DynamicsTrace, StabilityReport,
};
pub use equilibrium::{
    best_response, dominant_equilibrium, least_equilibrium, price_of_generativity,
    EquilibriumError, EquilibriumResult, PriceOfGenerativity, SolveConfig,
};
pub use experiment::{
    draw_instance, emit_report, generate_instance, heatmap_bins, run_experiment, DrawnInstance,
    ExperimentError, ExperimentReport, GenConfig, InstanceRow,
};
pub use game::{
    eval_contribution, eval_cost, BenefitTerm, Coalition, ContributionSpec, CostSpec,
    EffortProfile, GameError, GenAiProfile, MsbGame, MultilinearBenefit,
};
pub use search::{
    almost_linear_optimal, brute_force_optimal, build_clique_instance, clique_decision,
    clique_reduction_r, clique_reduction_wmax, fcop_optimal, knapsack_select,
    standalone_best_contribution, CliqueDecision, CoalitionSolution, FcopConfig, Graph,
    SearchError, SolveMethod,
};
