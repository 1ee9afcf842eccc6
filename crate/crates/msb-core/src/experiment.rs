//! Batch experiments over randomly generated product-benefit instances:
//! optimal coalition, stability of the optimum, and the myopic removal
//! dynamics, aggregated into histograms, a share-binned heatmap, and report
//! files (CSV, JSON, SVG).

use crate::analysis::{is_stable, myopic_removal_dynamics};
use crate::equilibrium::SolveConfig;
use crate::game::{BenefitTerm, Coalition, ContributionSpec, CostSpec, MsbGame, MultilinearBenefit};
use crate::search::brute_force_optimal;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Number of bins the heatmap uses for the total player share.
pub const SHARE_BINS: usize = 10;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
    #[error("worker pool: {0}")]
    ThreadPool(String),
}

/// Instance generator settings. Coefficient ranges are fixed: contribution
/// and cost parameters, the share total, and the share weights are all drawn
/// uniformly from [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GenConfig {
    pub n: usize,
    pub seed: u64,
    pub count: usize,
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.count < 1 {
            return Err(ExperimentError::InvalidConfig("count must be >= 1".into()));
        }
        if self.n < 1 || self.n > crate::game::MAX_PLAYERS {
            return Err(ExperimentError::InvalidConfig(format!(
                "n = {} must be in 1..={}",
                self.n,
                crate::game::MAX_PLAYERS
            )));
        }
        Ok(())
    }
}

/// A generated game plus the drawn share total `P` (recorded for binning).
#[derive(Debug, Clone)]
pub struct DrawnInstance {
    pub game: MsbGame,
    pub total_share: f64,
}

fn shares_from_draw(p: f64, weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    weights.iter().map(|t| p * t / total).collect()
}

/// Deterministically draw instance `index` of a batch. Each instance gets its
/// own counter-based stream keyed by `(seed, index)`, so results do not depend
/// on scheduling. Draw order: alpha vector, beta vector, delta vector, the
/// share total, then the share weights.
pub fn draw_instance(cfg: &GenConfig, index: usize) -> DrawnInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let n = cfg.n;
    let alphas: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    let betas: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    let deltas: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    let p: f64 = rng.random();
    let weights: Vec<f64> = (0..n).map(|_| rng.random()).collect();

    let contributions = alphas
        .iter()
        .zip(&betas)
        .map(|(&alpha, &beta)| ContributionSpec::Power {
            alpha,
            beta,
            exponent: 0.5,
        })
        .collect();
    let costs = deltas.iter().map(|&delta| CostSpec::Linear { delta }).collect();
    let benefit = MultilinearBenefit::new(
        n,
        vec![BenefitTerm {
            players: Coalition::full(n),
            coeff: 1.0,
        }],
    )
    .expect("product benefit is valid");
    let game = MsbGame::new(shares_from_draw(p, &weights), contributions, costs, benefit)
        .expect("generated instance is valid");
    DrawnInstance {
        game,
        total_share: p,
    }
}

pub fn generate_instance(cfg: &GenConfig, index: usize) -> MsbGame {
    draw_instance(cfg, index).game
}

/// Per-instance outcome row; one line of `instances.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceRow {
    pub index: usize,
    pub total_share: f64,
    pub optimal_size: usize,
    pub optimal_mask: u64,
    pub principal_utility: f64,
    pub stable: bool,
    pub myopic_terminal_size: usize,
    pub trace_len: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct InstanceFailure {
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub gen: GenConfig,
    pub solve: SolveConfig,
    pub workers: usize,
    pub rows: Vec<InstanceRow>,
    pub failures: Vec<InstanceFailure>,
    /// Optimal-coalition sizes, indices `0..=n`.
    pub optimal_size_hist: Vec<u64>,
    /// Sizes of optima that are stable at their own equilibrium.
    pub stable_size_hist: Vec<u64>,
    /// Terminal coalition sizes of the myopic removal dynamics.
    pub myopic_terminal_hist: Vec<u64>,
    /// `SHARE_BINS x (n+1)` counts of optimal sizes per share-total bin.
    pub heatmap_counts: Vec<Vec<u64>>,
}

pub fn share_bin(p: f64) -> usize {
    // Bins [0, 0.1), ..., [0.9, 1.0]; the final bin is closed.
    ((p * SHARE_BINS as f64) as usize).min(SHARE_BINS - 1)
}

impl ExperimentReport {
    pub fn from_rows(
        gen: GenConfig,
        solve: SolveConfig,
        workers: usize,
        rows: Vec<InstanceRow>,
        failures: Vec<InstanceFailure>,
    ) -> Self {
        let n = gen.n;
        let mut optimal_size_hist = vec![0u64; n + 1];
        let mut stable_size_hist = vec![0u64; n + 1];
        let mut myopic_terminal_hist = vec![0u64; n + 1];
        let mut heatmap_counts = vec![vec![0u64; n + 1]; SHARE_BINS];
        for row in &rows {
            optimal_size_hist[row.optimal_size] += 1;
            if row.stable {
                stable_size_hist[row.optimal_size] += 1;
            }
            myopic_terminal_hist[row.myopic_terminal_size] += 1;
            heatmap_counts[share_bin(row.total_share)][row.optimal_size] += 1;
        }
        ExperimentReport {
            gen,
            solve,
            workers,
            rows,
            failures,
            optimal_size_hist,
            stable_size_hist,
            myopic_terminal_hist,
            heatmap_counts,
        }
    }

    pub fn completed(&self) -> usize {
        self.rows.len()
    }
}

/// Empirical size distribution per share bin, rows normalized to 1 (zero rows
/// for empty bins).
pub fn heatmap_bins(rows: &[InstanceRow], n: usize) -> Vec<Vec<f64>> {
    let mut counts = vec![vec![0u64; n + 1]; SHARE_BINS];
    for row in rows {
        counts[share_bin(row.total_share)][row.optimal_size] += 1;
    }
    counts
        .iter()
        .map(|row| {
            let total: u64 = row.iter().sum();
            if total == 0 {
                vec![0.0; n + 1]
            } else {
                row.iter().map(|&c| c as f64 / total as f64).collect()
            }
        })
        .collect()
}

fn run_one(drawn: &DrawnInstance, index: usize, solve_cfg: &SolveConfig) -> Result<InstanceRow, String> {
    let game = &drawn.game;
    let sol = brute_force_optimal(game, solve_cfg).map_err(|e| e.to_string())?;
    if !sol.equilibrium.converged {
        return Err(format!(
            "dominant equilibrium of the optimal coalition did not converge within {} sweeps",
            solve_cfg.max_sweeps
        ));
    }
    let stab = is_stable(game, sol.coalition, &sol.equilibrium.efforts).map_err(|e| e.to_string())?;
    let trace = myopic_removal_dynamics(game, sol.coalition, solve_cfg).map_err(|e| e.to_string())?;
    if trace.steps.iter().any(|s| !s.equilibrium.converged) {
        return Err("a myopic dynamics step did not converge".into());
    }
    let terminal = trace.steps.last().expect("trace has at least one step");
    Ok(InstanceRow {
        index,
        total_share: drawn.total_share,
        optimal_size: sol.coalition.len(),
        optimal_mask: sol.coalition.mask(),
        principal_utility: sol.principal_utility,
        stable: stab.stable,
        myopic_terminal_size: terminal.coalition.len(),
        trace_len: trace.steps.len(),
    })
}

/// Run the full pipeline (optimal coalition, stability, myopic dynamics) over
/// `cfg.count` generated instances on a private worker pool. Per-instance
/// failures are recorded, not fatal; the aggregate is a deterministic fold in
/// index order, so the worker count never changes the report.
pub fn run_experiment(
    cfg: &GenConfig,
    solve_cfg: &SolveConfig,
    workers: usize,
) -> Result<ExperimentReport, ExperimentError> {
    cfg.validate()?;
    solve_cfg
        .validate()
        .map_err(|e| ExperimentError::InvalidConfig(e.to_string()))?;
    if workers < 1 {
        return Err(ExperimentError::InvalidConfig("workers must be >= 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| ExperimentError::ThreadPool(e.to_string()))?;
    let results: Vec<Result<InstanceRow, String>> = pool.install(|| {
        (0..cfg.count)
            .into_par_iter()
            .map(|index| {
                let drawn = draw_instance(cfg, index);
                run_one(&drawn, index, solve_cfg)
            })
            .collect()
    });

    let mut rows = Vec::with_capacity(cfg.count);
    let mut failures = Vec::new();
    for (index, res) in results.into_iter().enumerate() {
        match res {
            Ok(row) => rows.push(row),
            Err(reason) => {
                log::warn!("instance {index} excluded: {reason}");
                failures.push(InstanceFailure { index, reason });
            }
        }
    }
    Ok(ExperimentReport::from_rows(*cfg, *solve_cfg, workers, rows, failures))
}

// ---------------------------------------------------------------------------
// Report emission
// ---------------------------------------------------------------------------

/// 17 significant digits: enough to reproduce any f64 exactly.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Serialize)]
struct SummaryDoc<'a> {
    n: usize,
    seed: u64,
    count: usize,
    workers: usize,
    solve: &'a SolveConfig,
    completed: usize,
    excluded: usize,
    failures: &'a [InstanceFailure],
    optimal_size_hist: &'a [u64],
    stable_size_hist: &'a [u64],
    myopic_terminal_hist: &'a [u64],
    columns: ColumnDocs,
}

#[derive(Serialize)]
struct ColumnDocs {
    #[serde(rename = "instances.csv")]
    instances: Vec<&'static str>,
    #[serde(rename = "histogram.csv")]
    histogram: Vec<&'static str>,
    #[serde(rename = "heatmap.csv")]
    heatmap: Vec<&'static str>,
    #[serde(rename = "myopic.csv")]
    myopic: Vec<&'static str>,
}

/// Write `instances.csv`, `histogram.csv`, `heatmap.csv`, `myopic.csv`,
/// `summary.json`, and the SVG renderings into `out_dir`. Returns the paths.
pub fn emit_report(report: &ExperimentReport, out_dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let n = report.gen.n;
    let mut written = Vec::new();

    let mut instances = String::new();
    instances.push_str(
        "index,total_share,optimal_size,optimal_mask,principal_utility,stable,myopic_terminal_size,trace_len\n",
    );
    for r in &report.rows {
        writeln!(
            instances,
            "{},{},{},{},{},{},{},{}",
            r.index,
            fmt_f64(r.total_share),
            r.optimal_size,
            r.optimal_mask,
            fmt_f64(r.principal_utility),
            r.stable,
            r.myopic_terminal_size,
            r.trace_len
        )
        .unwrap();
    }
    written.push(write_file(out_dir, "instances.csv", &instances)?);

    let mut histogram = String::from("size,optimal_count,stable_count\n");
    for size in 0..=n {
        writeln!(
            histogram,
            "{},{},{}",
            size, report.optimal_size_hist[size], report.stable_size_hist[size]
        )
        .unwrap();
    }
    written.push(write_file(out_dir, "histogram.csv", &histogram)?);

    let freqs = heatmap_bins(&report.rows, n);
    let mut heatmap = String::from("bin_lo,bin_hi,count");
    for size in 0..=n {
        write!(heatmap, ",freq_size_{size}").unwrap();
    }
    heatmap.push('\n');
    for bin in 0..SHARE_BINS {
        let count: u64 = report.heatmap_counts[bin].iter().sum();
        write!(heatmap, "{},{},{}", fmt_f64(bin as f64 * 0.1), fmt_f64((bin + 1) as f64 * 0.1), count).unwrap();
        for size in 0..=n {
            write!(heatmap, ",{}", fmt_f64(freqs[bin][size])).unwrap();
        }
        heatmap.push('\n');
    }
    written.push(write_file(out_dir, "heatmap.csv", &heatmap)?);

    let mut myopic = String::from("size,terminal_count\n");
    for size in 0..=n {
        writeln!(myopic, "{},{}", size, report.myopic_terminal_hist[size]).unwrap();
    }
    written.push(write_file(out_dir, "myopic.csv", &myopic)?);

    let summary = SummaryDoc {
        n,
        seed: report.gen.seed,
        count: report.gen.count,
        workers: report.workers,
        solve: &report.solve,
        completed: report.completed(),
        excluded: report.failures.len(),
        failures: &report.failures,
        optimal_size_hist: &report.optimal_size_hist,
        stable_size_hist: &report.stable_size_hist,
        myopic_terminal_hist: &report.myopic_terminal_hist,
        columns: ColumnDocs {
            instances: vec![
                "index",
                "total_share",
                "optimal_size",
                "optimal_mask",
                "principal_utility",
                "stable",
                "myopic_terminal_size",
                "trace_len",
            ],
            histogram: vec!["size", "optimal_count", "stable_count"],
            heatmap: vec!["bin_lo", "bin_hi", "count", "freq_size_0..freq_size_n"],
            myopic: vec!["size", "terminal_count"],
        },
    };
    let mut summary_text = serde_json::to_string_pretty(&summary).expect("summary serialization");
    summary_text.push('\n');
    written.push(write_file(out_dir, "summary.json", &summary_text)?);

    written.push(write_file(out_dir, "histogram.svg", &histogram_svg(report))?);
    written.push(write_file(out_dir, "heatmap.svg", &heatmap_svg(report, &freqs))?);
    Ok(written)
}

fn write_file(dir: &Path, name: &str, content: &str) -> io::Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, content).map_err(|e| {
        io::Error::new(e.kind(), format!("writing {}: {e}", path.display()))
    })?;
    Ok(path)
}

fn histogram_svg(report: &ExperimentReport) -> String {
    let n = report.gen.n;
    let (w, h, ml, mb) = (640.0, 400.0, 50.0, 40.0);
    let plot_w = w - ml - 20.0;
    let plot_h = h - mb - 20.0;
    let max_count = report.optimal_size_hist.iter().copied().max().unwrap_or(0).max(1) as f64;
    let band = plot_w / (n + 1) as f64;
    let mut svg = String::new();
    write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    )
    .unwrap();
    for size in 0..=n {
        let x = ml + size as f64 * band;
        let opt = report.optimal_size_hist[size] as f64 / max_count * plot_h;
        let stable = report.stable_size_hist[size] as f64 / max_count * plot_h;
        writeln!(
            svg,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"#4878cf\" fill-opacity=\"0.55\" stroke=\"#2b4b8c\"/>",
            x + band * 0.1,
            20.0 + plot_h - opt,
            band * 0.8,
            opt
        )
        .unwrap();
        writeln!(
            svg,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"#e8793a\"/>",
            x + band * 0.3,
            20.0 + plot_h - stable,
            band * 0.4,
            stable
        )
        .unwrap();
        writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
            x + band * 0.5,
            h - mb + 14.0,
            size
        )
        .unwrap();
    }
    write!(
        svg,
        "<line x1=\"{ml}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n\
         <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\">optimal coalition size (outline: all, solid: stable)</text>\n\
         <text x=\"12\" y=\"16\" font-size=\"12\">count (max {})</text>\n</svg>\n",
        20.0 + plot_h,
        ml + plot_w,
        20.0 + plot_h,
        ml + plot_w / 2.0,
        h - 8.0,
        max_count as u64
    )
    .unwrap();
    svg
}

fn heatmap_svg(report: &ExperimentReport, freqs: &[Vec<f64>]) -> String {
    let n = report.gen.n;
    let (cell, ml, mt) = (36.0, 70.0, 30.0);
    let w = ml + cell * (n + 1) as f64 + 20.0;
    let h = mt + cell * SHARE_BINS as f64 + 50.0;
    let mut svg = String::new();
    write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    )
    .unwrap();
    for bin in 0..SHARE_BINS {
        // Highest share band on top, matching the bin order top-down.
        let y = mt + (SHARE_BINS - 1 - bin) as f64 * cell;
        for size in 0..=n {
            let v = freqs[bin][size];
            let shade = (255.0 * (1.0 - v)).round() as u8;
            writeln!(
                svg,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{cell}\" height=\"{cell}\" fill=\"rgb({},{},255)\" stroke=\"#ccc\"/>",
                ml + size as f64 * cell,
                y,
                shade,
                shade
            )
            .unwrap();
        }
        writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" text-anchor=\"end\">[{:.1},{:.1}{}</text>",
            ml - 6.0,
            y + cell * 0.6,
            bin as f64 * 0.1,
            (bin + 1) as f64 * 0.1,
            if bin + 1 == SHARE_BINS { "]" } else { ")" }
        )
        .unwrap();
    }
    for size in 0..=n {
        writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" text-anchor=\"middle\">{}</text>",
            ml + size as f64 * cell + cell / 2.0,
            mt + SHARE_BINS as f64 * cell + 16.0,
            size
        )
        .unwrap();
    }
    writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"18\" font-size=\"12\">optimal size distribution per share-total bin (dark = 0, blue = 1)</text>\n</svg>",
        ml
    )
    .unwrap();
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let cfg = GenConfig {
            n: 6,
            seed: 7,
            count: 4,
        };
        let a = draw_instance(&cfg, 2);
        let b = draw_instance(&cfg, 2);
        assert_eq!(a.game, b.game);
        assert_eq!(a.total_share, b.total_share);
        let c = draw_instance(&cfg, 3);
        assert_ne!(a.game, c.game);
    }

    #[test]
    fn shares_sum_to_drawn_total() {
        let cfg = GenConfig {
            n: 12,
            seed: 99,
            count: 20,
        };
        for index in 0..cfg.count {
            let drawn = draw_instance(&cfg, index);
            let sum: f64 = drawn.game.shares().iter().sum();
            assert!((sum - drawn.total_share).abs() <= 1e-12);
            assert!(drawn.game.shares().iter().all(|&t| t >= 0.0));
        }
    }

    #[test]
    fn equal_weights_split_evenly() {
        let shares = shares_from_draw(0.6, &[0.25; 4]);
        for s in shares {
            assert!((s - 0.15).abs() < 1e-15);
        }
    }

    #[test]
    fn share_bin_edges() {
        assert_eq!(share_bin(0.0), 0);
        assert_eq!(share_bin(0.0999), 0);
        assert_eq!(share_bin(0.1), 1);
        assert_eq!(share_bin(0.95), 9);
        assert_eq!(share_bin(1.0), 9);
    }

    fn synthetic_row(index: usize, p: f64, size: usize, stable: bool, terminal: usize) -> InstanceRow {
        InstanceRow {
            index,
            total_share: p,
            optimal_size: size,
            optimal_mask: (1u64 << size) - 1,
            principal_utility: 1.0,
            stable,
            myopic_terminal_size: terminal,
            trace_len: 1 + size - terminal,
        }
    }

    #[test]
    fn report_from_single_known_row() {
        let gen = GenConfig {
            n: 4,
            seed: 0,
            count: 1,
        };
        let report = ExperimentReport::from_rows(
            gen,
            SolveConfig::default(),
            1,
            vec![synthetic_row(0, 0.25, 3, true, 3)],
            vec![],
        );
        assert_eq!(report.optimal_size_hist, vec![0, 0, 0, 1, 0]);
        assert_eq!(report.stable_size_hist, vec![0, 0, 0, 1, 0]);
        assert_eq!(report.myopic_terminal_hist, vec![0, 0, 0, 1, 0]);
        let row_sums: Vec<u64> = report.heatmap_counts.iter().map(|r| r.iter().sum()).collect();
        assert_eq!(row_sums.iter().sum::<u64>(), 1);
        assert_eq!(row_sums[share_bin(0.25)], 1);
    }

    #[test]
    fn heatmap_rows_normalize() {
        let rows: Vec<InstanceRow> = (0..10)
            .map(|i| synthetic_row(i, 0.35, if i % 2 == 0 { 4 } else { 0 }, false, 0))
            .collect();
        let freqs = heatmap_bins(&rows, 4);
        for (bin, row) in freqs.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if bin == share_bin(0.35) {
                assert!((sum - 1.0).abs() < 1e-12);
            } else {
                assert_eq!(sum, 0.0);
            }
        }
    }

    #[test]
    fn small_batch_runs_and_aggregates() {
        let gen = GenConfig {
            n: 4,
            seed: 11,
            count: 8,
        };
        let report = run_experiment(&gen, &SolveConfig::default(), 2).unwrap();
        assert!(report.failures.is_empty(), "{:?}", report.failures);
        assert_eq!(report.completed(), 8);
        assert_eq!(report.optimal_size_hist.iter().sum::<u64>(), 8);
        for size in 0..=4 {
            assert!(report.stable_size_hist[size] <= report.optimal_size_hist[size]);
        }
        for row in &report.rows {
            // The myopic dynamics only removes players.
            assert!(row.myopic_terminal_size <= row.optimal_size);
            assert!(row.trace_len <= gen.n + 1);
        }
    }

    #[test]
    fn emit_writes_all_files_and_round_trips() {
        let gen = GenConfig {
            n: 3,
            seed: 5,
            count: 6,
        };
        let report = run_experiment(&gen, &SolveConfig::default(), 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(&report, dir.path()).unwrap();
        assert_eq!(files.len(), 7);
        for f in &files {
            assert!(f.exists(), "{f:?}");
        }

        // histogram.csv parses back to the in-memory histogram exactly.
        let text = fs::read_to_string(dir.path().join("histogram.csv")).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "size,optimal_count,stable_count");
        for (size, line) in lines.enumerate() {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!(cols[0].parse::<usize>().unwrap(), size);
            assert_eq!(cols[1].parse::<u64>().unwrap(), report.optimal_size_hist[size]);
            assert_eq!(cols[2].parse::<u64>().unwrap(), report.stable_size_hist[size]);
        }

        let summary = fs::read_to_string(dir.path().join("summary.json")).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&summary).unwrap();
        assert_eq!(doc["seed"], 5);
        assert_eq!(doc["n"], 3);
        assert_eq!(doc["count"], 6);
        assert!((doc["solve"]["tol"].as_f64().unwrap() - 1e-8).abs() < 1e-20);

        let svg = fs::read_to_string(dir.path().join("histogram.svg")).unwrap();
        assert!(svg.starts_with("<svg"));
    }

    #[test]
    fn emit_handles_empty_report() {
        let gen = GenConfig {
            n: 3,
            seed: 5,
            count: 1,
        };
        let report = ExperimentReport::from_rows(gen, SolveConfig::default(), 1, vec![], vec![]);
        let dir = tempfile::tempdir().unwrap();
        emit_report(&report, dir.path()).unwrap();
        let text = fs::read_to_string(dir.path().join("instances.csv")).unwrap();
        assert_eq!(text.lines().count(), 1); // header only
        let svg = fs::read_to_string(dir.path().join("heatmap.svg")).unwrap();
        assert!(svg.starts_with("<svg"));
    }

    #[test]
    fn float_format_has_17_significant_digits() {
        let x = 0.12345678901234567;
        let s = fmt_f64(x);
        assert_eq!(s.parse::<f64>().unwrap(), x);
        assert!(s.contains('e'));
    }
}
