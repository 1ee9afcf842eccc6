//! `msb`: solve, analyze, and batch-run managed shared-benefit games.
//!
//! Exit codes: 0 success, 1 I/O error, 2 instance/argument validation error,
//! 3 solver cap or convergence error, 64 usage error.

use clap::{Args, Parser, Subcommand, ValueEnum};
use msb_core::{
    almost_linear_optimal, brute_force_optimal, clique_decision, dominant_equilibrium, emit_report,
    is_stable, myopic_removal_dynamics, price_of_generativity, run_experiment, vsr,
    AnalysisError, Coalition, CoalitionSolution, EffortProfile, EquilibriumResult, FcopConfig,
    GameError, GenAiProfile, GenConfig, Graph, MsbGame, PriceOfGenerativity, SearchError,
    SolveConfig,
};
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "msb",
    version,
    about = "Managed shared-benefit games: effort equilibria, optimal coalitions, stability analysis, batch experiments"
)]
struct Cli {
    /// Convergence tolerance for best-response sweeps.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,
    /// Sweep budget before a solve reports non-convergence.
    #[arg(long, global = true, default_value_t = 10_000)]
    max_sweeps: usize,
    /// Suppress progress and warning output on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    /// Emit machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Dump randomly generated product-benefit instances as JSON files.
    Gen {
        #[arg(long, default_value_t = 12)]
        n: usize,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Dominant equilibrium of the effort subgame for one coalition.
    Eq {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        coalition: CoalitionArg,
        /// all | none | bitstring, leftmost character is player 1.
        #[arg(long, default_value = "all")]
        genai: String,
    },
    /// Ratio of shared benefit without GenAI to shared benefit with it.
    Pog {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        coalition: CoalitionArg,
    },
    /// Principal-optimal coalition.
    Opt {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum)]
        method: MethodArg,
        /// Share unit for the budget methods (fcop, almost-linear).
        #[arg(long)]
        epsilon: Option<f64>,
        /// Bitmask of the coupled players for almost-linear.
        #[arg(long)]
        nprime: Option<u64>,
    },
    /// Fixed-effort subset stability of a coalition at its equilibrium.
    Stability {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        coalition: CoalitionArg,
    },
    /// Value-to-share ratio of one member.
    Vsr {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        coalition: CoalitionArg,
        /// 1-based player index.
        #[arg(long)]
        player: usize,
    },
    /// Myopic removal dynamics from a coalition (default: the optimum).
    Dynamics {
        #[arg(long)]
        instance: PathBuf,
        /// "opt" or a decimal coalition bitmask.
        #[arg(long, default_value = "opt")]
        start: String,
    },
    /// Batch pipeline: optimum, stability, removal dynamics, report files.
    Experiment {
        #[arg(long, default_value_t = 12)]
        n: usize,
        /// Instances to run; defaults to 1000 (10000 with --full).
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        workers: usize,
        #[arg(long)]
        out: PathBuf,
        /// Full-scale run (10000 instances) unless --count is given.
        #[arg(long)]
        full: bool,
    },
    /// Decide k-clique existence through the reduction instance.
    Clique {
        /// Whitespace-separated edge list, one 1-based "u v" pair per line.
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        k: usize,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct CoalitionArg {
    /// Decimal bitmask; player 1 is the least-significant bit.
    #[arg(long)]
    coalition: Option<u64>,
    /// Comma-separated 1-based player list, e.g. 1,2,5.
    #[arg(long)]
    players: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Brute,
    Fcop,
    AlmostLinear,
}

enum CliError {
    Io(String),
    Validation(String),
    Solver(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Solver(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Io(m) | CliError::Validation(m) | CliError::Solver(m) => m,
        }
    }
}

impl From<GameError> for CliError {
    fn from(e: GameError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<SearchError> for CliError {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::CapExceeded { .. } | SearchError::Equilibrium(_) => {
                CliError::Solver(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::CapExceeded { .. } | AnalysisError::Equilibrium(_) => {
                CliError::Solver(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<msb_core::EquilibriumError> for CliError {
    fn from(e: msb_core::EquilibriumError) -> Self {
        CliError::Solver(e.to_string())
    }
}

impl From<msb_core::ExperimentError> for CliError {
    fn from(e: msb_core::ExperimentError) -> Self {
        match e {
            msb_core::ExperimentError::InvalidConfig(_) => CliError::Validation(e.to_string()),
            msb_core::ExperimentError::ThreadPool(_) => CliError::Solver(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let ok = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if ok { ExitCode::SUCCESS } else { ExitCode::from(64) };
        }
    };
    if !cli.quiet {
        env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    }
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode, CliError> {
    let cfg = SolveConfig {
        tol: cli.tol,
        max_sweeps: cli.max_sweeps,
        ..SolveConfig::default()
    };
    match &cli.cmd {
        Cmd::Gen { n, count, seed, out } => cmd_gen(cli, *n, *count, *seed, out),
        Cmd::Eq {
            instance,
            coalition,
            genai,
        } => cmd_eq(cli, &cfg, instance, coalition, genai),
        Cmd::Pog { instance, coalition } => cmd_pog(cli, &cfg, instance, coalition),
        Cmd::Opt {
            instance,
            method,
            epsilon,
            nprime,
        } => cmd_opt(cli, &cfg, instance, *method, *epsilon, *nprime),
        Cmd::Stability { instance, coalition } => cmd_stability(cli, &cfg, instance, coalition),
        Cmd::Vsr {
            instance,
            coalition,
            player,
        } => cmd_vsr(cli, &cfg, instance, coalition, *player),
        Cmd::Dynamics { instance, start } => cmd_dynamics(cli, &cfg, instance, start),
        Cmd::Experiment {
            n,
            count,
            seed,
            workers,
            out,
            full,
        } => cmd_experiment(cli, &cfg, *n, *count, *seed, *workers, out, *full),
        Cmd::Clique { graph, k } => cmd_clique(cli, &cfg, graph, *k),
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))
}

fn load_instance(path: &Path) -> Result<MsbGame, CliError> {
    let text = read_file(path)?;
    MsbGame::from_json(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn resolve_coalition(arg: &CoalitionArg, n: usize) -> Result<Coalition, CliError> {
    let c = if let Some(mask) = arg.coalition {
        Coalition::from_mask(mask)
    } else {
        let list = arg.players.as_deref().unwrap_or_default();
        let mut c = Coalition::EMPTY;
        for tok in list.split(',').filter(|t| !t.trim().is_empty()) {
            let p: usize = tok
                .trim()
                .parse()
                .map_err(|_| CliError::Validation(format!("bad player id {tok:?}")))?;
            if p == 0 {
                return Err(CliError::Validation("player ids are 1-based".into()));
            }
            c = c.with(p - 1);
        }
        c
    };
    if !c.is_subset_of(Coalition::full(n)) {
        return Err(CliError::Validation(format!(
            "coalition {c} is not within 1..={n}"
        )));
    }
    Ok(c)
}

fn parse_genai(text: &str, n: usize) -> Result<GenAiProfile, CliError> {
    match text {
        "all" => Ok(GenAiProfile::all(n)),
        "none" => Ok(GenAiProfile::none(n)),
        bits => {
            if bits.len() != n || bits.chars().any(|c| c != '0' && c != '1') {
                return Err(CliError::Validation(format!(
                    "--genai must be all, none, or a {n}-character 0/1 string (player 1 first)"
                )));
            }
            Ok(GenAiProfile::new(bits.chars().map(|c| c == '1').collect()))
        }
    }
}

fn print_json<T: Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("report serialization")
    );
}

fn fmt_efforts(e: &EffortProfile) -> String {
    let parts: Vec<String> = e.as_slice().iter().map(|x| format!("{x:.6}")).collect();
    format!("[{}]", parts.join(", "))
}

fn print_equilibrium_human(eq: &EquilibriumResult) {
    println!("coalition        {}", eq.coalition);
    println!("efforts          {}", fmt_efforts(&eq.efforts));
    println!("shared benefit   {:.9}", eq.shared_benefit);
    let utils: Vec<String> = eq.player_utilities.iter().map(|u| format!("{u:.6}")).collect();
    println!("utilities        [{}]", utils.join(", "));
    println!("principal W      {:.9}", eq.principal_utility);
    println!(
        "converged        {} ({} sweeps, residual {:.2e})",
        eq.converged, eq.sweeps_used, eq.max_residual
    );
}

fn exit_for(converged: bool) -> ExitCode {
    if converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    }
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn cmd_gen(cli: &Cli, n: usize, count: usize, seed: u64, out: &Path) -> Result<ExitCode, CliError> {
    let gen = GenConfig { n, seed, count };
    gen.validate()?;
    fs::create_dir_all(out).map_err(|e| CliError::Io(format!("creating {}: {e}", out.display())))?;
    let mut files = Vec::with_capacity(count);
    for index in 0..count {
        let game = msb_core::generate_instance(&gen, index);
        let path = out.join(format!("instance_{index:05}.json"));
        fs::write(&path, game.to_json() + "\n")
            .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
        files.push(path);
    }
    #[derive(Serialize)]
    struct GenOut {
        n: usize,
        seed: u64,
        count: usize,
        files: Vec<PathBuf>,
    }
    let outdoc = GenOut { n, seed, count, files };
    if cli.json {
        print_json(&outdoc);
    } else if !cli.quiet {
        println!("wrote {count} instances to {}", out.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_eq(
    cli: &Cli,
    cfg: &SolveConfig,
    instance: &Path,
    coalition: &CoalitionArg,
    genai: &str,
) -> Result<ExitCode, CliError> {
    let game = load_instance(instance)?;
    let c = resolve_coalition(coalition, game.n())?;
    let g = parse_genai(genai, game.n())?;
    let eq = dominant_equilibrium(&game, c, &g, cfg)?;
    if cli.json {
        print_json(&eq);
    } else {
        print_equilibrium_human(&eq);
    }
    Ok(exit_for(eq.converged))
}

fn cmd_pog(
    cli: &Cli,
    cfg: &SolveConfig,
    instance: &Path,
    coalition: &CoalitionArg,
) -> Result<ExitCode, CliError> {
    let game = load_instance(instance)?;
    let n = game.n();
    let c = resolve_coalition(coalition, n)?;
    let no_genai = dominant_equilibrium(&game, c, &GenAiProfile::none(n), cfg)?;
    let with_genai = dominant_equilibrium(&game, c, &GenAiProfile::all(n), cfg)?;
    let pog = price_of_generativity(&game, c, cfg)?;
    #[derive(Serialize)]
    struct PogOut {
        coalition: Coalition,
        no_genai_benefit: f64,
        genai_benefit: f64,
        pog: PriceOfGenerativity,
    }
    let out = PogOut {
        coalition: c,
        no_genai_benefit: no_genai.shared_benefit,
        genai_benefit: with_genai.shared_benefit,
        pog,
    };
    if cli.json {
        print_json(&out);
    } else {
        println!("{pog}");
    }
    Ok(exit_for(no_genai.converged && with_genai.converged))
}

fn cmd_opt(
    cli: &Cli,
    cfg: &SolveConfig,
    instance: &Path,
    method: MethodArg,
    epsilon: Option<f64>,
    nprime: Option<u64>,
) -> Result<ExitCode, CliError> {
    let game = load_instance(instance)?;
    let need_epsilon = || {
        epsilon.ok_or_else(|| CliError::Validation("--epsilon is required for this method".into()))
    };
    let sol: CoalitionSolution = match method {
        MethodArg::Brute => brute_force_optimal(&game, cfg)?,
        MethodArg::Fcop => {
            let fcfg = FcopConfig::new(&game, need_epsilon()?)?;
            msb_core::fcop_optimal(&game, &fcfg, cfg)?
        }
        MethodArg::AlmostLinear => {
            let fcfg = FcopConfig::new(&game, need_epsilon()?)?;
            let np = Coalition::from_mask(nprime.unwrap_or(0));
            almost_linear_optimal(&game, np, &fcfg, cfg)?
        }
    };
    if cli.json {
        print_json(&sol);
    } else {
        println!("method           {:?}", sol.method);
        print_equilibrium_human(&sol.equilibrium);
    }
    Ok(exit_for(sol.equilibrium.converged))
}

fn cmd_stability(
    cli: &Cli,
    cfg: &SolveConfig,
    instance: &Path,
    coalition: &CoalitionArg,
) -> Result<ExitCode, CliError> {
    let game = load_instance(instance)?;
    let c = resolve_coalition(coalition, game.n())?;
    let eq = dominant_equilibrium(&game, c, &GenAiProfile::all(game.n()), cfg)?;
    let report = is_stable(&game, c, &eq.efforts)?;
    #[derive(Serialize)]
    struct StabilityOut {
        coalition: Coalition,
        efforts: EffortProfile,
        principal_utility: f64,
        stable: bool,
        witness: Option<Coalition>,
        checked_subsets: usize,
    }
    let out = StabilityOut {
        coalition: c,
        efforts: eq.efforts.clone(),
        principal_utility: eq.principal_utility,
        stable: report.stable,
        witness: report.witness,
        checked_subsets: report.checked_subsets,
    };
    if cli.json {
        print_json(&out);
    } else {
        match report.witness {
            Some(w) => println!("unstable: deviation to {w} pays more at fixed efforts"),
            None => println!("stable ({} subsets checked)", report.checked_subsets),
        }
    }
    Ok(exit_for(eq.converged))
}

fn cmd_vsr(
    cli: &Cli,
    cfg: &SolveConfig,
    instance: &Path,
    coalition: &CoalitionArg,
    player: usize,
) -> Result<ExitCode, CliError> {
    let game = load_instance(instance)?;
    let c = resolve_coalition(coalition, game.n())?;
    if player == 0 || player > game.n() {
        return Err(CliError::Validation(format!(
            "player {player} out of range 1..={}",
            game.n()
        )));
    }
    let value = vsr(&game, player - 1, c, cfg)?;
    #[derive(Serialize)]
    struct VsrOut {
        player: usize,
        coalition: Coalition,
        vsr: f64,
    }
    let out = VsrOut {
        player,
        coalition: c,
        vsr: value,
    };
    if cli.json {
        print_json(&out);
    } else {
        println!("{value}");
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_dynamics(
    cli: &Cli,
    cfg: &SolveConfig,
    instance: &Path,
    start: &str,
) -> Result<ExitCode, CliError> {
    let game = load_instance(instance)?;
    let start_coalition = if start == "opt" {
        brute_force_optimal(&game, cfg)?.coalition
    } else {
        let mask: u64 = start
            .parse()
            .map_err(|_| CliError::Validation(format!("--start must be \"opt\" or a decimal mask, got {start:?}")))?;
        let c = Coalition::from_mask(mask);
        if !c.is_subset_of(Coalition::full(game.n())) {
            return Err(CliError::Validation(format!(
                "coalition {c} is not within 1..={}",
                game.n()
            )));
        }
        c
    };
    let trace = myopic_removal_dynamics(&game, start_coalition, cfg)?;
    if cli.json {
        print_json(&trace);
    } else {
        for (k, step) in trace.steps.iter().enumerate() {
            println!(
                "step {k}: coalition {} efforts {} W {:.9}",
                step.coalition,
                fmt_efforts(&step.equilibrium.efforts),
                step.principal_utility
            );
        }
        println!("terminal stable: {}", trace.terminal_stable);
    }
    Ok(exit_for(trace.steps.iter().all(|s| s.equilibrium.converged)))
}

#[allow(clippy::too_many_arguments)]
fn cmd_experiment(
    cli: &Cli,
    cfg: &SolveConfig,
    n: usize,
    count: Option<usize>,
    seed: u64,
    workers: usize,
    out: &Path,
    full: bool,
) -> Result<ExitCode, CliError> {
    let count = count.unwrap_or(if full { 10_000 } else { 1_000 });
    let gen = GenConfig { n, seed, count };
    if !cli.quiet {
        eprintln!("running {count} instances (n = {n}, seed = {seed}) on {workers} workers");
    }
    let report = run_experiment(&gen, cfg, workers)?;
    let files =
        emit_report(&report, out).map_err(|e| CliError::Io(format!("emitting report: {e}")))?;
    #[derive(Serialize)]
    struct ExperimentOut {
        completed: usize,
        excluded: usize,
        files: Vec<PathBuf>,
    }
    let outdoc = ExperimentOut {
        completed: report.completed(),
        excluded: report.failures.len(),
        files,
    };
    if cli.json {
        print_json(&outdoc);
    } else if !cli.quiet {
        println!(
            "completed {} of {count}; report in {}",
            report.completed(),
            out.display()
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_clique(cli: &Cli, cfg: &SolveConfig, graph: &Path, k: usize) -> Result<ExitCode, CliError> {
    let text = read_file(graph)?;
    let graph = Graph::parse(&text)?;
    let decision = clique_decision(&graph, k, cfg)?;
    if cli.json {
        print_json(&decision);
    } else {
        println!("{}", decision.has_clique);
        println!("W_star = {}", decision.w_star);
        println!("W_max = {}", decision.w_max);
    }
    Ok(ExitCode::SUCCESS)
}
