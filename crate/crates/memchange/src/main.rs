// SPDX-License-Identifier: MIT OR Apache-2.0

//! Command-line interface: simulate / estimate-d / detect / montecarlo.

#![forbid(unsafe_code)]

use clap::{Args, Parser, Subcommand};
use memchange::error::{McError, McResult};
use memchange::montecarlo::{self, ExperimentConfig, Mode};
use memchange::segment::{
    build_candidate_grid, build_cost_table, default_fixed_penalty, default_k_max, default_min_seg,
    default_slope_fit_range, default_step, dp_segment, SegmentationResult, Selection,
    SelectionRule,
};
use memchange::series_io;
use memchange::spectral::{default_bandwidth, SegmentWindow, SpectralPrefix};
use memchange::synthesis::{
    synthesize_truncated, Family, Innovation, ProcessSpec, DEFAULT_TRUNCATION_FACTOR,
};
use memchange::whittle::estimate_d;
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

const HELP_M: &str = "Bandwidth m [default: floor(n^0.65)]";
const HELP_KMAX: &str = "Largest searched change count [default: 2*(floor(ln n) - 1)]";
const HELP_ZN: &str = "Fixed penalty per break [default: 2/sqrt(n)]";
const HELP_STEP: &str = "Candidate grid spacing [default: max(1, n/1000)]";
const HELP_MIN_SEG: &str = "Minimum segment length [default: max(2, 2*step)]";
const HELP_SLOPE_FIT: &str = "Slope-heuristic fit range a:b [default: 2:kmax]";
const HELP_TRUNCATION: &str = "MA truncation order for simulation [default: 10*n]";

#[derive(Parser)]
#[command(
    name = "memchange",
    version,
    about = "Detect multiple changes in the long-memory parameter of a time series",
    long_about = "Detect multiple changes in the long-memory parameter of a univariate time \
                  series by minimizing a penalized local Whittle contrast over segmentations.\n\
                  Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure."
)]
struct Cli {
    /// Worker threads (env MEMCHANGE_THREADS) [default: all cores]
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a piecewise long-range dependent series
    Simulate(SimulateArgs),
    /// Local Whittle estimate of the memory parameter on one window
    #[command(name = "estimate-d")]
    EstimateD(EstimateArgs),
    /// Detect change points and select the number of changes
    Detect(DetectArgs),
    /// Replicated experiments: RMSE and recognition-frequency tables
    Montecarlo(MonteCarloArgs),
    /// Verify that documented defaults match the runtime constants
    #[command(name = "self-test")]
    SelfTest,
}

#[derive(Args)]
struct SimulateArgs {
    /// Process family applied to every regime
    #[arg(long, value_parser = ["farima00", "farima11", "classl"], default_value = "farima00")]
    family: String,
    /// Memory parameter per regime (repeat for several regimes)
    #[arg(long = "d", required_unless_present = "spec", num_args = 1)]
    ds: Vec<f64>,
    /// Relative change times, comma separated (one fewer than --d)
    #[arg(long, value_delimiter = ',')]
    taus: Vec<f64>,
    /// AR coefficient (farima11 only)
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    psi: f64,
    /// MA coefficient (farima11 only)
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    theta: f64,
    /// Series length
    #[arg(long, required_unless_present = "spec")]
    n: Option<usize>,
    /// Innovation law
    #[arg(long, value_parser = ["normal", "uniform"], default_value = "normal")]
    innovation: String,
    #[arg(long, help = HELP_TRUNCATION)]
    truncation: Option<usize>,
    /// RNG seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Full process specification as a JSON file (overrides the flags above)
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Output CSV path (one value per line)
    #[arg(long)]
    out: PathBuf,
    /// Also write the trajectory with its spec as JSON
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    /// Input CSV series (one value per line, optional header)
    #[arg(long)]
    input: PathBuf,
    #[arg(long, help = HELP_M)]
    m: Option<usize>,
    /// Window a:b meaning the segment {a+1, ..., b} [default: full series]
    #[arg(long)]
    window: Option<String>,
    /// Write the JSON result here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DetectArgs {
    /// Input CSV series (one value per line, optional header)
    #[arg(long)]
    input: PathBuf,
    #[arg(long, help = HELP_M)]
    m: Option<usize>,
    #[arg(long, help = HELP_KMAX)]
    kmax: Option<usize>,
    /// Selection rule for the number of changes
    #[arg(long, value_parser = ["fixed", "bic", "slope"], default_value = "slope")]
    rule: String,
    #[arg(long, help = HELP_ZN)]
    zn: Option<f64>,
    #[arg(long, help = HELP_STEP)]
    step: Option<usize>,
    #[arg(long = "min-seg", help = HELP_MIN_SEG)]
    min_seg: Option<usize>,
    #[arg(long = "slope-fit", help = HELP_SLOPE_FIT)]
    slope_fit: Option<String>,
    /// Skip selection and report the optimum for this known change count
    #[arg(long = "known-k")]
    known_k: Option<usize>,
    /// Write (K, 2*C(K), 2*C(K)+2*s*K) rows as CSV for plotting
    #[arg(long = "emit-curve")]
    emit_curve: Option<PathBuf>,
    /// Write the full-series periodogram rows (j, lambda_j, I) as CSV
    #[arg(long = "dump-periodogram")]
    dump_periodogram: Option<PathBuf>,
    /// Write the JSON result here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MonteCarloArgs {
    /// Experiment description (TOML or JSON)
    #[arg(long)]
    config: PathBuf,
    /// Override the replication count from the config
    #[arg(long)]
    reps: Option<usize>,
    /// Override the base seed from the config
    #[arg(long)]
    seed0: Option<u64>,
    /// Write table.md, table.csv and reps.csv into this directory
    #[arg(long = "out-dir")]
    out_dir: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads.or_else(|| {
        std::env::var("MEMCHANGE_THREADS").ok().and_then(|v| v.parse().ok())
    }) {
        // Errors only if a global pool already exists; harmless here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::EstimateD(args) => cmd_estimate(args),
        Command::Detect(args) => cmd_detect(args),
        Command::Montecarlo(args) => cmd_montecarlo(args),
        Command::SelfTest => cmd_self_test(),
    };
    if let Err(err) = result {
        let record = serde_json::json!({ "error": err.kind(), "message": err.to_string() });
        eprintln!("{record}");
        std::process::exit(err.exit_code());
    }
}

fn cmd_simulate(args: SimulateArgs) -> McResult<()> {
    let spec = match &args.spec {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| McError::data(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<ProcessSpec>(&text)
                .map_err(|e| McError::data(format!("malformed spec JSON: {e}")))?
        }
        None => {
            let n = args.n.expect("clap enforces n unless --spec is given");
            let regimes: Vec<Family> = args
                .ds
                .iter()
                .map(|&d| match args.family.as_str() {
                    "farima00" => Family::Farima00 { d },
                    "farima11" => Family::Farima11 { d, psi: args.psi, theta: args.theta },
                    "classl" => Family::ClassL { d },
                    _ => unreachable!("clap validates the family"),
                })
                .collect();
            let innovation = match args.innovation.as_str() {
                "uniform" => Innovation::Uniform,
                _ => Innovation::Normal,
            };
            ProcessSpec { regimes, taus: args.taus.clone(), innovation, n }
        }
    };
    spec.validate()?;
    let truncation = args.truncation.unwrap_or(DEFAULT_TRUNCATION_FACTOR * spec.n);
    let traj = synthesize_truncated(&spec, args.seed, truncation)?;
    series_io::write_series_csv(&args.out, &traj.values)?;
    if let Some(json_path) = &args.json {
        series_io::write_trajectory_json(json_path, &traj)?;
    }
    eprintln!(
        "wrote {} values (K* = {}) to {}",
        traj.len(),
        spec.change_count(),
        args.out.display()
    );
    Ok(())
}

fn parse_pair(text: &str, what: &str) -> McResult<(usize, usize)> {
    let (a, b) = text
        .split_once(':')
        .ok_or_else(|| McError::invalid_input(format!("{what} must look like a:b; got {text:?}")))?;
    match (a.trim().parse::<usize>(), b.trim().parse::<usize>()) {
        (Ok(a), Ok(b)) => Ok((a, b)),
        _ => Err(McError::invalid_input(format!("{what} must look like a:b; got {text:?}"))),
    }
}

fn cmd_estimate(args: EstimateArgs) -> McResult<()> {
    let values = series_io::read_series_csv(&args.input)?;
    let n = values.len();
    let m = args.m.unwrap_or_else(|| default_bandwidth(n));
    let (a, b) = match &args.window {
        Some(text) => parse_pair(text, "--window")?,
        None => (0, n),
    };
    let window = SegmentWindow::new(a, b)?;
    let prefix = SpectralPrefix::from_values(&values, m)?;
    let fit = estimate_d(&prefix, window)?;
    emit_json(&fit, args.out.as_deref())
}

#[derive(Serialize)]
struct DetectOutput {
    n: usize,
    m: usize,
    k_max: usize,
    step: usize,
    min_seg: usize,
    candidates: usize,
    /// `C(K)` for `K = 0..=k_max`.
    contrasts: Vec<f64>,
    k_hat: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    selection: Option<Selection>,
    breakpoints: Vec<usize>,
    taus: Vec<f64>,
    dhats: Vec<f64>,
    degenerate_cells: usize,
}

fn cmd_detect(args: DetectArgs) -> McResult<()> {
    let values = series_io::read_series_csv(&args.input)?;
    let n = values.len();
    let m = args.m.unwrap_or_else(|| default_bandwidth(n));
    let step = args.step.unwrap_or_else(|| default_step(n));
    let min_seg = args.min_seg.unwrap_or_else(|| default_min_seg(step));
    let k_max = args.kmax.unwrap_or_else(|| default_k_max(n));
    let k_max = match args.known_k {
        Some(k) if k > k_max => k,
        _ => k_max,
    };

    let prefix = SpectralPrefix::from_values(&values, m)?;
    if let Some(path) = &args.dump_periodogram {
        dump_periodogram(&prefix, path)?;
    }
    let grid = build_candidate_grid(n, step, min_seg)?;
    let table = build_cost_table(&prefix, &grid)?;
    let result = dp_segment(&table, k_max)?;

    let slope_fit = match &args.slope_fit {
        Some(text) => parse_pair(text, "--slope-fit")?,
        None => default_slope_fit_range(k_max),
    };
    let selection = match args.known_k {
        Some(_) => None,
        None => Some(match args.rule.as_str() {
            "fixed" => {
                result.select_fixed_penalty(args.zn.unwrap_or_else(|| default_fixed_penalty(n)))
            }
            "bic" => result.select_bic(),
            _ => result.slope_heuristic(slope_fit)?,
        }),
    };
    let k_hat = args.known_k.unwrap_or_else(|| selection.as_ref().unwrap().k_hat);

    if let Some(path) = &args.emit_curve {
        // Figure-style doubled curves; the penalty slope is always the
        // fitted one, whatever rule selected K.
        let s_hat = match &selection {
            Some(sel) if sel.rule == SelectionRule::Slope => sel.s_hat.unwrap_or(0.0),
            _ => result
                .slope_heuristic(slope_fit)
                .ok()
                .and_then(|s| s.s_hat)
                .unwrap_or(0.0),
        };
        emit_curve(&result, s_hat, path)?;
    }

    let row = result.row(k_hat);
    let output = DetectOutput {
        n,
        m,
        k_max,
        step,
        min_seg,
        candidates: grid.candidates().len(),
        contrasts: result.contrasts(),
        k_hat,
        selection,
        breakpoints: row.breakpoints.clone(),
        taus: row.taus(n),
        dhats: row.dhats.clone(),
        degenerate_cells: table.degenerate_cells(),
    };
    emit_json(&output, args.out.as_deref())
}

fn dump_periodogram(prefix: &SpectralPrefix, path: &Path) -> McResult<()> {
    let window = SegmentWindow::new(0, prefix.n())?;
    let periodograms = prefix.segment_periodograms(window)?;
    let mut out = String::from("j,lambda,periodogram\n");
    for (idx, i_val) in periodograms.iter().enumerate() {
        let j = idx + 1;
        out.push_str(&format!("{j},{},{i_val}\n", prefix.grid().lambda(j)));
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn emit_curve(result: &SegmentationResult, s_hat: f64, path: &Path) -> McResult<()> {
    let mut out = String::from("k,contrast2,penalized2\n");
    for row in &result.rows {
        let doubled = 2.0 * row.contrast;
        let penalized = doubled + 2.0 * s_hat * row.k as f64;
        out.push_str(&format!("{},{doubled},{penalized}\n", row.k));
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> McResult<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| McError::data(format!("cannot encode result: {e}")))?;
    match out {
        Some(path) => std::fs::write(path, text.as_bytes())?,
        None => println!("{text}"),
    }
    Ok(())
}

fn cmd_montecarlo(args: MonteCarloArgs) -> McResult<()> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| McError::data(format!("cannot read {}: {e}", args.config.display())))?;
    let is_json = args
        .config
        .extension()
        .map(|e| e.eq_ignore_ascii_case("json"))
        .unwrap_or(false);
    let mut config: ExperimentConfig = if is_json {
        serde_json::from_str(&text)
            .map_err(|e| McError::data(format!("malformed JSON config: {e}")))?
    } else {
        toml::from_str(&text).map_err(|e| McError::data(format!("malformed TOML config: {e}")))?
    };
    if let Some(reps) = args.reps {
        config.reps = reps;
    }
    if let Some(seed0) = args.seed0 {
        config.seed0 = seed0;
    }

    let (markdown, table_csv, reps_csv) = match config.mode {
        Mode::KnownK => {
            let report = montecarlo::run_known_k(&config)?;
            render_known_k(&config, &report)
        }
        Mode::UnknownK => {
            let report = montecarlo::run_unknown_k(&config)?;
            render_unknown_k(&config, &report)
        }
    };
    print!("{markdown}");
    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("table.md"), &markdown)?;
        std::fs::write(dir.join("table.csv"), &table_csv)?;
        std::fs::write(dir.join("reps.csv"), &reps_csv)?;
        eprintln!("wrote table.md, table.csv, reps.csv to {}", dir.display());
    }
    Ok(())
}

fn render_known_k(
    config: &ExperimentConfig,
    report: &montecarlo::KnownKReport,
) -> (String, String, String) {
    let mut md = String::new();
    let mut csv = String::from("parameter,truth,rmse\n");
    md.push_str(&format!(
        "# Known-K RMSE (K* = {}, n = {}, reps = {}, excluded = {})\n\n",
        report.k_star, config.process.n, report.reps_used, report.excluded
    ));
    md.push_str("| parameter | truth | RMSE |\n|---|---|---|\n");
    for (i, r) in report.rmse_taus.iter().enumerate() {
        let truth = config.process.taus[i];
        md.push_str(&format!("| tau_{} | {truth} | {r:.4} |\n", i + 1));
        csv.push_str(&format!("tau_{},{truth},{r}\n", i + 1));
    }
    for (i, r) in report.rmse_ds.iter().enumerate() {
        let truth = config.process.regimes[i].d();
        md.push_str(&format!("| d_{} | {truth} | {r:.4} |\n", i + 1));
        csv.push_str(&format!("d_{},{truth},{r}\n", i + 1));
    }

    let mut reps_csv = String::from("rep,seed");
    for i in 1..=report.k_star {
        reps_csv.push_str(&format!(",tau_{i}"));
    }
    for i in 1..=report.k_star + 1 {
        reps_csv.push_str(&format!(",d_{i}"));
    }
    reps_csv.push('\n');
    for rep in &report.replications {
        reps_csv.push_str(&format!("{},{}", rep.rep, rep.seed));
        for tau in &rep.taus {
            reps_csv.push_str(&format!(",{tau}"));
        }
        for d in &rep.dhats {
            reps_csv.push_str(&format!(",{d}"));
        }
        reps_csv.push('\n');
    }
    (md, csv, reps_csv)
}

fn render_unknown_k(
    config: &ExperimentConfig,
    report: &montecarlo::FrequencyReport,
) -> (String, String, String) {
    let mut md = String::new();
    md.push_str(&format!(
        "# Recognition frequencies (K* = {}, n = {}, reps = {}, excluded = {})\n\n",
        report.k_star, config.process.n, report.reps_used, report.excluded
    ));
    md.push_str("| rule | frequency of K_hat = K* |\n|---|---|\n");
    md.push_str(&format!("| fixed (z_n) | {:.3} |\n", report.freq_fixed));
    md.push_str(&format!("| BIC | {:.3} |\n", report.freq_bic));
    md.push_str(&format!("| slope heuristic | {:.3} |\n", report.freq_slope));
    let csv = format!(
        "rule,frequency\nfixed,{}\nbic,{}\nslope,{}\n",
        report.freq_fixed, report.freq_bic, report.freq_slope
    );
    let mut reps_csv = String::from("rep,seed,k_fixed,k_bic,k_slope,s_hat\n");
    for rep in &report.replications {
        reps_csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            rep.rep, rep.seed, rep.k_fixed, rep.k_bic, rep.k_slope, rep.s_hat
        ));
    }
    (md, csv, reps_csv)
}

fn cmd_self_test() -> McResult<()> {
    let mut failures = Vec::new();
    let mut out = std::io::stdout().lock();
    let mut check = |name: &str, ok: bool, detail: String| {
        let _ = writeln!(out, "{}: {name} ({detail})", if ok { "ok" } else { "MISMATCH" });
        if !ok {
            failures.push(name.to_string());
        }
    };

    for n in [500usize, 2000, 5000] {
        let m = default_bandwidth(n);
        check(
            "bandwidth matches floor(n^0.65)",
            m == (n as f64).powf(0.65).floor() as usize,
            format!("n = {n}, m = {m}"),
        );
        let k = default_k_max(n);
        check(
            "kmax matches 2*(floor(ln n) - 1)",
            k == 2 * ((n as f64).ln().floor() as usize - 1),
            format!("n = {n}, kmax = {k}"),
        );
        let z = default_fixed_penalty(n);
        check(
            "zn matches 2/sqrt(n)",
            (z - 2.0 / (n as f64).sqrt()).abs() < 1e-15,
            format!("n = {n}, zn = {z}"),
        );
        let s = default_step(n);
        check(
            "step matches max(1, n/1000)",
            s == (n / 1000).max(1),
            format!("n = {n}, step = {s}"),
        );
        check(
            "min_seg matches max(2, 2*step)",
            default_min_seg(s) == (2 * s).max(2),
            format!("n = {n}, min_seg = {}", default_min_seg(s)),
        );
    }
    check(
        "slope fit range matches 2:kmax",
        default_slope_fit_range(14) == (2, 14) && default_slope_fit_range(1) == (1, 1),
        "kmax = 14 and kmax = 1".to_string(),
    );

    // The help text must carry the same formulas the checks above used.
    use clap::CommandFactory;
    let mut all_help = format!("{}", Cli::command().render_long_help());
    for sub in Cli::command().get_subcommands_mut() {
        all_help.push_str(&format!("{}", sub.render_long_help()));
    }
    for needle in [
        "floor(n^0.65)",
        "2*(floor(ln n) - 1)",
        "2/sqrt(n)",
        "max(1, n/1000)",
        "max(2, 2*step)",
        "2:kmax",
        "10*n",
    ] {
        check(
            "help text documents the default",
            all_help.contains(needle),
            format!("looking for {needle:?}"),
        );
    }

    if failures.is_empty() {
        println!("self-test passed");
        Ok(())
    } else {
        Err(McError::invalid_input(format!(
            "self-test found {} mismatches: {}",
            failures.len(),
            failures.join("; ")
        )))
    }
}
