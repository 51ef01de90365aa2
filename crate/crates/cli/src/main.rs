use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use dampwave::multipliers::{
    check_feasibility, condition_grid, default_params, find_t0, Multipliers, PhiSpec,
    ScanResolution,
};
use dampwave::profiles::{derive_constants, validate_assumption_a};
use dampwave::rates::fit_decay_rate;
use dampwave::scenario::{
    convergence_study, run_scenario, sweep, write_sweep_csv, Scenario, ScenarioError,
    PROFILE_RESOLUTION,
};
use dampwave::EnergyTrace;

// ── Exit codes ───────────────────────────────────────────────────────────────

const EXIT_RUNTIME: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_CHECK_FAILED: u8 = 3;

// ── CLI ──────────────────────────────────────────────────────────────────────

#[derive(Parser)]
#[command(
    name = "dampwave",
    version,
    about = "Damped wave equation experiments: runs, sweeps, refinement studies and multiplier checks"
)]
struct Cli {
    /// Suppress progress output on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario; writes the trace CSV and the summary JSON.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run a scenario once per parameter value; writes an aggregated CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// One of v0, l2, dead_zone_end, r, dx.
        #[arg(long)]
        param: String,
        /// Comma-separated values; may be empty.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<f64>,
        /// Worker threads (defaults to the number of cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Refinement study against a reference two levels finer.
    Converge {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
    /// Feasibility margins and activation-time scan for the scenario profile.
    CheckMultipliers {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Also write the (t, x, iii, iv) condition grid as CSV.
        #[arg(long)]
        dump_conditions: bool,
        /// Time step of the condition dump.
        #[arg(long, default_value_t = 25.0)]
        dump_t_step: f64,
    },
    /// Fit a decay exponent to a trace CSV and print it as JSON.
    Fit {
        trace: PathBuf,
        /// Fit window `LO,HI`.
        #[arg(long, value_delimiter = ',', required = true)]
        window: Vec<f64>,
    },
    /// Validate the scenario profile and print its constants.
    ValidateProfile {
        #[arg(long)]
        config: PathBuf,
    },
}

// ── Output helpers ───────────────────────────────────────────────────────────

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = std::io::BufWriter::new(tmp.as_file_mut());
        body(&mut w)?;
        w.flush()?;
    }
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(std::fs::Permissions::from_mode(0o644))?;
    }
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)?;
        Ok(())
    })
}

fn output_path(out: &Path, configured: Option<&str>, fallback: String) -> PathBuf {
    out.join(configured.map(str::to_owned).unwrap_or(fallback))
}

struct Reporter {
    quiet: bool,
}

impl Reporter {
    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn load(config: &Path) -> Result<Scenario, ScenarioError> {
    Scenario::from_path(config)
}

// ── Subcommands ──────────────────────────────────────────────────────────────

fn cmd_run(rep: &Reporter, config: &Path, out: &Path) -> Result<u8> {
    let scenario = load(config)?;
    rep.note(format!("running {} ({} steps)", scenario.name, scenario.solver_config().step_count()));
    let result = run_scenario(&scenario)?;
    let trace_path = output_path(out, scenario.trace_path.as_deref(), format!("{}.trace.csv", scenario.name));
    let summary_path = output_path(
        out,
        scenario.summary_path.as_deref(),
        format!("{}.summary.json", scenario.name),
    );
    write_atomic(&trace_path, |w| Ok(result.trace.write_csv(w)?))?;
    write_json(&summary_path, &result.summary)?;
    let s = &result.summary;
    if let Some(f) = &s.rate_fit {
        rep.note(format!("alpha = {:.4} over [{}, {}]", f.alpha, f.window[0], f.window[1]));
    }
    if let Some(w) = &s.threshold_warning {
        rep.note(format!("warning: {w}"));
    }
    for c in &s.checks {
        rep.note(format!("{} {}: {}", if c.pass { "ok  " } else { "FAIL" }, c.name, c.detail));
    }
    rep.note(format!("wrote {} and {}", trace_path.display(), summary_path.display()));
    Ok(if s.all_checks_pass { 0 } else { EXIT_CHECK_FAILED })
}

fn cmd_sweep(
    rep: &Reporter,
    config: &Path,
    out: &Path,
    param: &str,
    values: &[f64],
    threads: Option<usize>,
) -> Result<u8> {
    let scenario = load(config)?;
    if !values.is_empty() {
        scenario.with_parameter(param, values[0])?;
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build()?;
    rep.note(format!("sweeping {param} over {} values", values.len()));
    let points = pool.install(|| sweep(&scenario, param, values));
    let path = out.join(format!("{}.sweep-{param}.csv", scenario.name));
    write_atomic(&path, |w| Ok(write_sweep_csv(&points, w)?))?;
    for p in &points {
        let row = p.row();
        match (&row.alpha, row.error.is_empty()) {
            (Some(a), _) => rep.note(format!("{param} = {}: alpha = {a:.4}", p.value)),
            (None, false) => rep.note(format!("{param} = {}: error: {}", p.value, row.error)),
            (None, true) => rep.note(format!("{param} = {}: no fit window", p.value)),
        }
    }
    rep.note(format!("wrote {}", path.display()));
    Ok(0)
}

fn cmd_converge(rep: &Reporter, config: &Path, out: &Path, levels: usize) -> Result<u8> {
    let scenario = load(config)?;
    let table = convergence_study(&scenario, levels)?;
    for r in &table.rows {
        rep.note(format!(
            "dx = {:<10} L2 error = {:.4e}  max error = {:.4e}  order = {}",
            r.dx,
            r.error_l2,
            r.error_max,
            r.order.map_or("-".into(), |o| format!("{o:.3}"))
        ));
    }
    let path = out.join(format!("{}.convergence.json", scenario.name));
    write_json(&path, &table)?;
    rep.note(format!("wrote {}", path.display()));
    Ok(0)
}

fn cmd_check_multipliers(
    rep: &Reporter,
    config: &Path,
    out: &Path,
    dump: bool,
    dump_t_step: f64,
) -> Result<u8> {
    let scenario = load(config)?;
    let profile = scenario.damping_profile()?;
    let constants = derive_constants(&profile, PROFILE_RESOLUTION)?;
    let params = default_params(constants.v0, constants.v_star)?;
    let m = Multipliers::new(params, PhiSpec::from_constants(&constants)?);
    let feasibility = check_feasibility(&params, &constants);
    let res = ScanResolution::default();
    let t0 = find_t0(&m, &profile, scenario.support_radius, scenario.t0_scan_max, &res);
    let report = serde_json::json!({
        "constants": constants,
        "params": params,
        "feasibility": feasibility,
        "t0": t0,
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    if dump {
        let coarse = ScanResolution {
            t_step: dump_t_step,
            x_step: 0.1,
            tail_ratio: 0.05,
        };
        let rows = condition_grid(&m, &profile, scenario.support_radius, scenario.t0_scan_max, &coarse);
        let path = out.join(format!("{}.conditions.csv", scenario.name));
        write_atomic(&path, |w| {
            let mut csv = csv::Writer::from_writer(w);
            csv.write_record(["t", "x", "iii", "iv"])?;
            for (t, x, a, b) in rows {
                csv.serialize((t, x, a, b))?;
            }
            csv.flush()?;
            Ok(())
        })?;
        rep.note(format!("wrote {}", path.display()));
    }
    Ok(if feasibility.pass && t0.t0.is_some() { 0 } else { EXIT_CHECK_FAILED })
}

fn cmd_fit(trace: &Path, window: &[f64]) -> Result<u8> {
    let file = std::fs::File::open(trace).with_context(|| format!("opening {}", trace.display()))?;
    let trace = EnergyTrace::read_csv(file)?;
    let [lo, hi] = window else {
        bail!("--window takes exactly two values");
    };
    let fit = fit_decay_rate(&trace, [*lo, *hi])?;
    println!("{}", serde_json::to_string_pretty(&fit)?);
    Ok(0)
}

fn cmd_validate_profile(config: &Path) -> Result<u8> {
    let scenario = load(config)?;
    let profile = scenario.damping_profile()?;
    let tail = profile.declared_tail();
    let report = validate_assumption_a(&profile, PROFILE_RESOLUTION, tail.l2 + 10.0 * (1.0 + tail.l2))?;
    let constants = derive_constants(&profile, PROFILE_RESOLUTION);
    let out = serde_json::json!({
        "report": report,
        "structural_pass": report.structural_pass(),
        "fast_decay_hypothesis": report.fast_decay_hypothesis(),
        "constants": constants.as_ref().ok(),
        "constants_error": constants.as_ref().err().map(|e| e.to_string()),
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(if report.structural_pass() { 0 } else { EXIT_CHECK_FAILED })
}

// ── Main ─────────────────────────────────────────────────────────────────────

fn classify(err: &anyhow::Error) -> u8 {
    if let Some(e) = err.downcast_ref::<ScenarioError>() {
        return if e.is_config_error() { EXIT_CONFIG } else { EXIT_RUNTIME };
    }
    if err.downcast_ref::<dampwave::profiles::ProfileError>().is_some()
        || err.downcast_ref::<dampwave::multipliers::MultiplierError>().is_some()
    {
        return EXIT_CONFIG;
    }
    EXIT_RUNTIME
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let rep = Reporter { quiet: cli.quiet };
    let outcome = match &cli.command {
        Command::Run { config, out } => cmd_run(&rep, config, out),
        Command::Sweep {
            config,
            out,
            param,
            values,
            threads,
        } => cmd_sweep(&rep, config, out, param, values, *threads),
        Command::Converge { config, out, levels } => cmd_converge(&rep, config, out, *levels),
        Command::CheckMultipliers {
            config,
            out,
            dump_conditions,
            dump_t_step,
        } => cmd_check_multipliers(&rep, config, out, *dump_conditions, *dump_t_step),
        Command::Fit { trace, window } => cmd_fit(trace, window),
        Command::ValidateProfile { config } => cmd_validate_profile(config),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(classify(&e))
        }
    }
}
