//! The subcommands behind the `nudge-lab` binary. Each writes its artifacts
//! into an output directory and returns the lines to print.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::checkpoint::Checkpoint;
use super::config::{ExperimentConfig, MuPolicy};
use super::streamfile::{read_stream, write_stream, GridSpec};
use crate::analysis::{
    cumulative_trapezoid, energy_residuals, fit_decay, DecayAssessment, DecayFit, ErrorSeries,
};
use crate::assimilation::{
    check_condition, decay_rate, energy_channels, resolve_mu, run_stream_assimilation,
    run_sync_experiment, ConditionExtras, ConditionReport, ObservationStream, Recorder, Stepper,
    REFERENCE_INTEGRANDS,
};
use crate::error::{Error, Result};
use crate::spectral::{h1_norm, l2_norm, lp_norm};

/// What a command wants printed, and whether it should exit nonzero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommandOutput {
    pub lines: Vec<String>,
    pub warnings: Vec<String>,
    pub failed: bool,
}

/// Process exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => 2,
        Error::Divergence { .. } | Error::Stability { .. } => 3,
        Error::ObservationMismatch { .. } | Error::GridMismatch => 4,
        Error::Csv(_) => 5,
        _ => 1,
    }
}

/// Environment variable capping the data-parallel width.
pub const THREADS_ENV: &str = "NUDGE_LAB_THREADS";

/// Sizes the global worker pool from `NUDGE_LAB_THREADS` when it is set.
/// Returns the requested width.
pub fn configure_threads() -> Result<Option<usize>> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Error::Config(format!(
            "{THREADS_ENV} must be a positive integer, got {raw:?}"
        ))
    })?;
    // A pool that is already running keeps its size; that only happens when
    // the library is embedded and the host configured rayon itself.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(Some(n))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn write_series(path: &Path, series: &ErrorSeries) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    series.write_csv(&mut w)?;
    std::io::Write::flush(&mut w)?;
    Ok(())
}

fn steps_for(cfg: &ExperimentConfig) -> usize {
    (cfg.t_end / cfg.dt).round() as usize
}

#[derive(Debug, Serialize)]
struct SimulateSummary {
    grid: GridSpec,
    t_start: f64,
    t_end: f64,
    steps: u64,
    u_l2: f64,
    theta_l2: f64,
}

/// Integrates the reference system, writing `series.csv`,
/// `checkpoint.ndgl`, `observations.bin` (+ `.json`), `config.txt` and
/// `summary.json`.
pub fn cmd_simulate(cfg: &ExperimentConfig, out: &Path) -> Result<CommandOutput> {
    fs::create_dir_all(out)?;
    let grid = cfg.grid()?;
    let params = cfg.params(&grid)?;
    let nudging = cfg.nudging(&grid)?;
    let ip = nudging.interpolant.clone();
    let (mut state, history, steps0) = match &cfg.restart {
        Some(path) => {
            let ck = Checkpoint::load(path)?;
            if **ck.state.grid() != *grid {
                return Err(Error::GridMismatch);
            }
            if ck.model != cfg.model || ck.dt != cfg.dt {
                return Err(Error::Config(
                    "restart checkpoint has a different model or time step".into(),
                ));
            }
            (ck.state, ck.history, ck.steps)
        }
        None => (cfg.initial_state(&grid), None, 0),
    };
    let mut stepper = Stepper::reference(&grid, cfg.model, &params, cfg.dt)?;
    stepper.set_history(history);
    let mut rec = Recorder::new(
        &["u_l2sq", "u_h1", "theta_l2sq", "theta_l4"],
        &REFERENCE_INTEGRANDS,
    );
    let mut stream = ObservationStream::new(ip.clone(), cfg.c_interp);
    let t_start = state.t;
    let steps = steps_for(cfg);
    for n in 0..=steps {
        if n % cfg.record_every == 0 || n == steps {
            let ch = energy_channels(&state, &params, cfg.model)?;
            rec.record(
                state.t,
                &[
                    l2_norm(&state.u).powi(2),
                    h1_norm(&state.u),
                    l2_norm(&state.theta).powi(2),
                    lp_norm(&state.theta, 4.0)?,
                ],
                &ch,
            )?;
        }
        if n % cfg.observe_every == 0 {
            let mut obs = ip.observe_at(&state.u, state.t)?;
            if let Some(p) = &nudging.perturbation {
                p.apply(&ip, &mut obs)?;
            }
            stream.push(obs)?;
        }
        if n < steps {
            state = stepper.step(&state)?;
        }
    }
    let series = rec.finish();
    write_series(&out.join("series.csv"), &series)?;
    Checkpoint {
        model: cfg.model,
        dt: cfg.dt,
        steps: steps0 + steps as u64,
        state: state.clone(),
        history: stepper.history().cloned(),
    }
    .save(&out.join("checkpoint.ndgl"))?;
    write_stream(&stream, &out.join("observations.bin"))?;
    fs::write(out.join("config.txt"), cfg.to_text())?;
    let summary = SimulateSummary {
        grid: GridSpec::of(&grid),
        t_start,
        t_end: state.t,
        steps: steps0 + steps as u64,
        u_l2: l2_norm(&state.u),
        theta_l2: l2_norm(&state.theta),
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(CommandOutput {
        lines: vec![format!(
            "simulated t = {t_start} .. {}; |u| = {:e}, |theta| = {:e}; wrote {}",
            state.t,
            summary.u_l2,
            summary.theta_l2,
            out.display()
        )],
        ..CommandOutput::default()
    })
}

#[derive(Debug, Serialize)]
struct AssimilateSummary<'a> {
    mu: f64,
    m0: Option<f64>,
    sup_w_h1: Option<f64>,
    velocity_bound_holds: Option<bool>,
    decay: Option<&'a DecayAssessment>,
}

/// Runs the twin experiment, or assimilates `cfg.stream` when set. Writes
/// `series.csv`, `condition.json`, `decay.json` (twin only) and
/// `config.txt`.
pub fn cmd_assimilate(
    cfg: &ExperimentConfig,
    out: &Path,
    override_mu: Option<f64>,
) -> Result<CommandOutput> {
    let mut cfg = cfg.clone();
    if let Some(m) = override_mu {
        cfg.mu = MuPolicy::Fixed(m);
        cfg.override_condition = true;
        cfg.validate()?;
    }
    fs::create_dir_all(out)?;
    fs::write(out.join("config.txt"), cfg.to_text())?;
    let grid = cfg.grid()?;
    let params = cfg.params(&grid)?;
    let nudging = cfg.nudging(&grid)?;
    let mut o = CommandOutput::default();

    let (report, mu, summary_decay, m0, sup_w, holds) = match &cfg.stream {
        Some(path) => {
            let stream = read_stream(path)?;
            check_matches(&stream, &cfg, &grid)?;
            let (mu, report) = resolve_mu(&stream, &nudging, &params, &grid, None)?;
            let (series, _) = run_stream_assimilation(
                &stream,
                &params,
                cfg.model,
                cfg.dt,
                mu,
                cfg.t_end,
                cfg.record_every,
            )?;
            write_series(&out.join("series.csv"), &series)?;
            (report, mu, None, None, None, None)
        }
        None => {
            let ref0 = cfg.initial_state(&grid);
            let r = run_sync_experiment(&ref0, &nudging, &params, cfg.t_end)?;
            write_series(&out.join("series.csv"), &r.series)?;
            let alpha = decay_rate(r.mu, &params, grid.lambda1(), cfg.model);
            let satisfied = r.report.condition_dai_satisfied;
            let ratio = if satisfied { 1e-8 } else { 1e-6 };
            let d = DecayAssessment::of(&r.series, alpha, satisfied, ratio)?;
            o.lines.push(format!(
                "decay: {} (alpha = {alpha:e}, terminal/initial = {:e}{})",
                if d.pass { "PASS" } else { "FAIL" },
                d.terminal_ratio,
                d.fit
                    .map(|f| format!(", fitted rate = {:e}", f.rate))
                    .unwrap_or_default()
            ));
            write_json(&out.join("decay.json"), &d)?;
            (
                r.report,
                r.mu,
                Some(d),
                Some(r.m0),
                Some(r.sup_w_h1),
                r.velocity_bound_holds,
            )
        }
    };
    if !report.mu_range.contains(mu) {
        o.warnings.push(format!(
            "warning: mu = {mu:e} is outside the admissible interval ({}); proceeding",
            report
                .mu_range
                .interval()
                .map(|[a, b]| format!("[{a:e}, {b:e}]"))
                .unwrap_or_else(|| "empty".into())
        ));
    }
    if !report.condition_dai_satisfied {
        o.warnings.push(format!(
            "warning: condition not satisfied; {}",
            report.verdict_line()
        ));
    }
    if report.mu != Some(mu) {
        o.lines.insert(0, format!("running with mu = {mu:.6e}"));
    }
    o.lines.insert(0, report.verdict_line());
    write_json(&out.join("condition.json"), &report)?;
    write_json(
        &out.join("summary.json"),
        &AssimilateSummary {
            mu,
            m0,
            sup_w_h1: sup_w,
            velocity_bound_holds: holds,
            decay: summary_decay.as_ref(),
        },
    )?;
    Ok(o)
}

fn check_matches(
    stream: &ObservationStream,
    cfg: &ExperimentConfig,
    grid: &std::sync::Arc<crate::spectral::Grid>,
) -> Result<()> {
    if **stream.interpolant().grid() != **grid {
        return Err(Error::GridMismatch);
    }
    let expected = cfg.interpolant(grid)?.spec(cfg.c_interp);
    if *stream.spec() != expected {
        return Err(Error::ObservationMismatch {
            expected: serde_json::to_string(&expected)?,
            found: serde_json::to_string(stream.spec())?,
        });
    }
    Ok(())
}

/// Evaluates the admissibility condition on a stored stream; prints the
/// verdict and the full report as JSON.
pub fn cmd_check_condition(
    cfg: &ExperimentConfig,
    stream_path: Option<&Path>,
    out: Option<&Path>,
) -> Result<(CommandOutput, ConditionReport)> {
    let path = stream_path
        .map(Path::to_path_buf)
        .or_else(|| cfg.stream.clone())
        .ok_or_else(|| Error::Config("check-condition needs a stream".into()))?;
    let grid = cfg.grid()?;
    let params = cfg.params(&grid)?;
    let stream = read_stream(&path)?;
    check_matches(&stream, cfg, &grid)?;
    let extras = ConditionExtras {
        model: cfg.model,
        ..ConditionExtras::default()
    };
    let report = check_condition(
        &stream,
        stream.interpolant().h(),
        &params,
        &grid,
        cfg.variant,
        &extras,
    )?;
    let json = serde_json::to_string_pretty(&report)?;
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("condition.json"), format!("{json}\n"))?;
    }
    Ok((
        CommandOutput {
            lines: vec![report.verdict_line(), json],
            ..CommandOutput::default()
        },
        report,
    ))
}

/// Relative tolerance of the energy budgets in `analyze`.
pub const ENERGY_TOLERANCE: f64 = 5e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelFit {
    pub channel: String,
    pub fit: Option<DecayFit>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccumulatorCheck {
    pub channel: String,
    /// max |recomputed − recorded| / max(1, max |recorded|).
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub file: PathBuf,
    pub rows: usize,
    pub channels: Vec<String>,
    pub fits: Vec<ChannelFit>,
    pub accumulators: Vec<AccumulatorCheck>,
    pub energy_max_relative: Vec<(String, f64)>,
    pub energy_flagged: Vec<String>,
}

/// Recomputes fits, accumulators and energy residuals of stored series.
pub fn analyze_series(path: &Path, series: &ErrorSeries) -> AnalysisReport {
    let targets: Vec<&String> = if series.has_channel("err_energy") {
        series
            .names()
            .iter()
            .filter(|n| *n == "err_energy")
            .collect()
    } else {
        series
            .names()
            .iter()
            .filter(|n| !n.starts_with("int_"))
            .collect()
    };
    let fits = targets
        .into_iter()
        .map(|name| match fit_decay(series, name, 10.0) {
            Ok(f) => ChannelFit {
                channel: name.clone(),
                fit: Some(f),
                error: None,
            },
            Err(e) => ChannelFit {
                channel: name.clone(),
                fit: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let mut accumulators = Vec::new();
    for name in series.names() {
        let Some(base) = name.strip_prefix("int_") else {
            continue;
        };
        let (Ok(acc), Ok(y)) = (series.channel(name), series.channel(base)) else {
            continue;
        };
        let again = cumulative_trapezoid(series.time(), y);
        let scale = acc.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let dev = acc
            .iter()
            .zip(&again)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        accumulators.push(AccumulatorCheck {
            channel: name.clone(),
            deviation: dev / scale,
        });
    }
    let (energy_max_relative, energy_flagged) = match energy_residuals(series, ENERGY_TOLERANCE) {
        Ok(r) => (r.max_relative, r.flagged),
        Err(_) => (Vec::new(), Vec::new()),
    };
    AnalysisReport {
        file: path.to_path_buf(),
        rows: series.len(),
        channels: series.names().to_vec(),
        fits,
        accumulators,
        energy_max_relative,
        energy_flagged,
    }
}

/// Analyzes stored CSV series without re-running anything. Writes
/// `<stem>.analysis.json` per input when `out` is given.
pub fn cmd_analyze(
    paths: &[PathBuf],
    out: Option<&Path>,
) -> Result<(CommandOutput, Vec<AnalysisReport>)> {
    if paths.is_empty() {
        return Err(Error::Config(
            "analyze needs at least one series file".into(),
        ));
    }
    let mut o = CommandOutput::default();
    let mut reports = Vec::new();
    for path in paths {
        let file = fs::File::open(path)?;
        let series = ErrorSeries::read_csv(std::io::BufReader::new(file))
            .map_err(|e| Error::Csv(format!("{}: {e}", path.display())))?;
        let report = analyze_series(path, &series);
        for f in &report.fits {
            o.lines.push(match (&f.fit, &f.error) {
                (Some(fit), _) => format!(
                    "{}: {} decays at rate {:e} over [{}, {}]",
                    path.display(),
                    f.channel,
                    fit.rate,
                    fit.window.0,
                    fit.window.1
                ),
                (None, Some(e)) => format!("{}: {} not fitted ({e})", path.display(), f.channel),
                (None, None) => unreachable!("fit or error is always set"),
            });
        }
        for b in &report.energy_flagged {
            let rel = report
                .energy_max_relative
                .iter()
                .find(|(n, _)| n == b)
                .map_or(f64::NAN, |(_, r)| *r);
            o.warnings.push(format!(
                "warning: {}: energy budget {b} off by {rel:.3e} relative (limit {ENERGY_TOLERANCE:e}; \
                 time-integration error: grows with the recording interval and, for nudged budgets, with mu*dt)",
                path.display()
            ));
        }
        if let Some(dir) = out {
            fs::create_dir_all(dir)?;
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("series");
            write_json(&dir.join(format!("{stem}.analysis.json")), &report)?;
        }
        reports.push(report);
    }
    Ok((o, reports))
}

/// Runs the twin experiment once per swept value, in parallel, into
/// `out/run_<i>` and tabulates the outcomes in `out/sweep.csv`.
pub fn cmd_sweep(cfg: &ExperimentConfig, out: &Path) -> Result<CommandOutput> {
    let sweep = cfg
        .sweep
        .clone()
        .ok_or_else(|| Error::Config("sweep needs sweep_param and sweep_values".into()))?;
    fs::create_dir_all(out)?;
    let results: Vec<(f64, Result<CommandOutput>)> = sweep
        .values
        .par_iter()
        .enumerate()
        .map(|(i, &v)| {
            let run = cfg
                .with_sweep_value(sweep.param, v)
                .and_then(|c| cmd_assimilate(&c, &out.join(format!("run_{i}")), None));
            (v, run)
        })
        .collect();
    let mut o = CommandOutput::default();
    let mut table = format!("{},status,verdict\n", sweep.param.name());
    for (v, r) in &results {
        match r {
            Ok(run) => {
                let decay = run
                    .lines
                    .iter()
                    .find(|l| l.starts_with("decay:"))
                    .map(|l| if l.contains("PASS") { "pass" } else { "fail" })
                    .unwrap_or("n/a");
                table.push_str(&format!("{v:?},ok,{decay}\n"));
                o.warnings.extend(run.warnings.iter().cloned());
            }
            Err(e) => {
                table.push_str(&format!("{v:?},error,n/a\n"));
                o.warnings
                    .push(format!("warning: {}={v}: {e}", sweep.param.name()));
                o.failed = true;
            }
        }
    }
    fs::write(out.join("sweep.csv"), &table)?;
    o.lines.push(table.trim_end().to_string());
    Ok(o)
}
