//! The three subcommands: simulate, verify, reproduce.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use tdfs::dfs::verify_tdfs;
use tdfs::lindblad::{default_time_step, integrate, population, IntegratorConfig};
use tdfs::models::{control_field_gap, dark_states, five_level_dark_pair};
use tdfs::{DfsReport, LindbladModel, SubspaceTrajectory, Trajectory};

use crate::config::{ExperimentConfig, ModeKind, ModelKind, TimeSpan, TimeUnits};

/// Failures mapped to process exit codes by `main`.
#[derive(Debug)]
pub enum CliError {
    /// Bad usage or configuration (exit 2).
    Usage(String),
    /// Numerical failure during a run (exit 3).
    Numerical(String),
}

impl From<tdfs::Error> for CliError {
    fn from(e: tdfs::Error) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(format!("i/o error: {e}"))
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let config: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("cannot parse {}: {e}", path.display())))?;
    config.validate().map_err(CliError::Usage)?;
    Ok(config)
}

#[derive(Debug, Serialize)]
pub struct DfsSummary {
    pub tolerance: f64,
    pub verdict: bool,
    pub max_eigencondition_residual: f64,
    pub max_eigenvalue_spread: f64,
    pub max_invariance_residual: f64,
}

impl From<&DfsReport> for DfsSummary {
    fn from(r: &DfsReport) -> Self {
        Self {
            tolerance: r.tolerance,
            verdict: r.verdict,
            max_eigencondition_residual: r.max_eigencondition_residual,
            max_eigenvalue_spread: r.max_eigenvalue_spread,
            max_invariance_residual: r.max_invariance_residual,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub csv_path: PathBuf,
    pub rows: usize,
    pub dt: f64,
    pub dfs: DfsSummary,
    pub min_purity: f64,
    pub max_purity: f64,
    pub final_trace_deviation: f64,
    pub min_eigenvalue: f64,
    /// Largest gap ‖H_paper − H_synthesized‖ over the verification grid;
    /// reported when the published schedules are in use.
    pub control_field_gap: Option<f64>,
    pub wall_clock_seconds: f64,
}

fn resolved_dt(config: &ExperimentConfig, model: &LindbladModel, t0: f64, t1: f64) -> f64 {
    config
        .dt
        .unwrap_or_else(|| default_time_step(model, t0, t1, &[config.omega0]))
}

fn resolved_stride(config: &ExperimentConfig, t0: f64, t1: f64, dt: f64) -> usize {
    config.record_stride.unwrap_or_else(|| {
        let steps = ((t1 - t0) / dt).ceil() as usize;
        (steps / 4000).max(1)
    })
}

/// Verification grid: `points` per constant-dimension segment, kept away
/// from the segment edges where the gauge operator is one-sided.
fn verification_grid(sub: &SubspaceTrajectory, t0: f64, t1: f64, points: usize) -> Vec<f64> {
    let mut edges = vec![t0];
    for &b in &sub.breakpoints() {
        if b > t0 && b < t1 {
            edges.push(b);
        }
    }
    edges.push(t1);
    let mut grid = Vec::new();
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        for k in 0..points {
            grid.push(a + (b - a) * (k as f64 + 0.5) / points as f64);
        }
    }
    grid
}

pub fn run_simulation(config: &ExperimentConfig) -> Result<(Trajectory, RunReport), CliError> {
    let started = Instant::now();
    let (model, sub) = config.build();
    let (t0, t1) = config.span();
    model.validate_at(t0).map_err(CliError::from)?;

    let dt = resolved_dt(config, &model, t0, t1);
    let stride = resolved_stride(config, t0, t1, dt);
    let cfg = IntegratorConfig::with_dt(dt).record_stride(stride);

    let rho0 = {
        let dark = sub
            .basis(t0)
            .map_err(CliError::from)?
            .into_iter()
            .next()
            .ok_or_else(|| CliError::Numerical("empty subspace basis".into()))?;
        tdfs::DensityMatrix::pure(&dark)
    };
    let trajectory = integrate(&model, &rho0, t0, t1, &cfg).map_err(CliError::from)?;

    let grid = verification_grid(&sub, t0, t1, config.grid_points);
    let report = verify_tdfs(&model, &sub, &grid, config.tolerance).map_err(CliError::from)?;

    let control_field_gap = if config.mode == ModeKind::Paper {
        let (synthesized, _) = config.with_mode(ModeKind::Synthesized).build();
        Some(control_field_gap(&model, &synthesized, &grid))
    } else {
        None
    };

    let rows = write_csv(&config.output.csv, config, &model, &sub, &trajectory)?;

    let run_report = RunReport {
        config: config.clone(),
        csv_path: config.output.csv.clone(),
        rows,
        dt,
        dfs: DfsSummary::from(&report),
        min_purity: trajectory.min_purity(),
        max_purity: trajectory.max_purity(),
        final_trace_deviation: *trajectory.trace_deviation.last().unwrap(),
        min_eigenvalue: trajectory
            .min_eigenvalue
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min),
        control_field_gap,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    Ok((trajectory, run_report))
}

pub fn cmd_simulate(config_path: &Path) -> Result<(), CliError> {
    let config = load_config(config_path)?;
    let (_, report) = run_simulation(&config)?;
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Numerical(format!("report serialization: {e}")))?;
    if let Some(path) = &config.output.report {
        fs::write(path, &json)?;
    }
    println!("{json}");
    Ok(())
}

/// Exit meaning for verify: Ok(true) → 0, Ok(false) → 1.
pub fn cmd_verify(config_path: &Path, tol: Option<f64>) -> Result<bool, CliError> {
    let mut config = load_config(config_path)?;
    if let Some(t) = tol {
        if t.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(CliError::Usage(format!(
                "tolerance must be positive, got {t}"
            )));
        }
        config.tolerance = t;
    }
    let (model, sub) = config.build();
    let (t0, t1) = config.span();
    let grid = verification_grid(&sub, t0, t1, config.grid_points);
    let report = verify_tdfs(&model, &sub, &grid, config.tolerance).map_err(CliError::from)?;
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Numerical(format!("report serialization: {e}")))?;
    if let Some(path) = &config.output.report {
        fs::write(path, &json)?;
    } else {
        println!("{json}");
    }
    eprintln!(
        "verdict: {} (eigencondition {:.3e}, spread {:.3e}, invariance {:.3e}, tolerance {:.1e})",
        report.verdict,
        report.max_eigencondition_residual,
        report.max_eigenvalue_spread,
        report.max_invariance_residual,
        report.tolerance,
    );
    Ok(report.verdict)
}

fn format_value(x: f64) -> String {
    // 12 significant digits, '.' decimal separator.
    format!("{x:.11e}")
}

/// One CSV row per recorded grid point. Columns: t, omega0_t_over_pi,
/// purity, trace_dev, min_eig, pop_DF1, [pop_DF2 (five-level)],
/// pop_DFS_total.
fn write_csv(
    path: &Path,
    config: &ExperimentConfig,
    model: &LindbladModel,
    sub: &SubspaceTrajectory,
    trajectory: &Trajectory,
) -> Result<usize, CliError> {
    let channels = model.channels().to_vec();
    let mut out = String::new();
    let five = config.model == ModelKind::FiveLevel;
    if five {
        out.push_str("t,omega0_t_over_pi,purity,trace_dev,min_eig,pop_DF1,pop_DF2,pop_DFS_total\n");
    } else {
        out.push_str("t,omega0_t_over_pi,purity,trace_dev,min_eig,pop_DF1,pop_DFS_total\n");
    }

    for (i, &t) in trajectory.times.iter().enumerate() {
        let state = &trajectory.states[i];
        let phase = config.omega0 * t / std::f64::consts::PI;
        let total: f64 = sub
            .basis(t)
            .map_err(CliError::from)?
            .iter()
            .map(|v| population(state, v).unwrap_or(0.0))
            .sum();
        let row = if five {
            let (d1, d2) = five_level_dark_pair(&channels, t).map_err(CliError::from)?;
            format!(
                "{},{},{},{},{},{},{},{}\n",
                format_value(t),
                format_value(phase),
                format_value(trajectory.purity[i]),
                format_value(trajectory.trace_deviation[i]),
                format_value(trajectory.min_eigenvalue[i]),
                format_value(population(state, &d1).map_err(CliError::from)?),
                format_value(population(state, &d2).map_err(CliError::from)?),
                format_value(total),
            )
        } else {
            let dark = dark_states(&channels, t).map_err(CliError::from)?.remove(0);
            format!(
                "{},{},{},{},{},{},{}\n",
                format_value(t),
                format_value(phase),
                format_value(trajectory.purity[i]),
                format_value(trajectory.trace_deviation[i]),
                format_value(trajectory.min_eigenvalue[i]),
                format_value(population(state, &dark).map_err(CliError::from)?),
                format_value(total),
            )
        };
        out.push_str(&row);
    }
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, &out)?;
    Ok(trajectory.times.len())
}

/// Canned figure reproductions. Each writes its CSV inputs plus a gnuplot
/// script; plotting tools are never invoked.
pub fn cmd_reproduce(figure: &str, outdir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(outdir)?;
    match figure {
        "fig2a" => reproduce_fig2(outdir, "fig2a", 0.1),
        "fig2b" => reproduce_fig2(outdir, "fig2b", 10.0),
        "fig4a" => reproduce_fig4a(outdir),
        "fig4b" => reproduce_fig4b(outdir),
        other => Err(CliError::Usage(format!(
            "unknown figure '{other}' (expected fig2a, fig2b, fig4a, fig4b)"
        ))),
    }
}

fn base_config(
    model: ModelKind,
    mode: ModeKind,
    omega0: f64,
    end_over_pi: f64,
    csv: PathBuf,
) -> ExperimentConfig {
    ExperimentConfig {
        model,
        r: 1.0,
        r1: 1.0,
        r2: 1.0,
        omega0,
        gamma: 1.0,
        gamma1: 1.0,
        gamma2: 1.0,
        omega: 1.0,
        mode,
        transition: crate::config::TransitionKind::Step,
        ramp: crate::config::RampKind::AsPrinted,
        time: TimeSpan {
            start: 0.0,
            end: end_over_pi * std::f64::consts::PI,
            units: TimeUnits::Omega0T,
        },
        dt: None,
        record_stride: None,
        grid_points: 200,
        tolerance: 1e-9,
        output: crate::config::OutputPaths { csv, report: None },
    }
}

/// Purity of the three-level model with and without the synthesized fields.
fn reproduce_fig2(outdir: &Path, name: &str, omega0: f64) -> Result<(), CliError> {
    let controlled_csv = outdir.join(format!("{name}_controlled.csv"));
    let uncontrolled_csv = outdir.join(format!("{name}_uncontrolled.csv"));

    let controlled = base_config(
        ModelKind::Xi,
        ModeKind::Synthesized,
        omega0,
        4.0,
        controlled_csv.clone(),
    );
    run_simulation(&controlled)?;
    let uncontrolled = base_config(
        ModelKind::Xi,
        ModeKind::None,
        omega0,
        4.0,
        uncontrolled_csv.clone(),
    );
    run_simulation(&uncontrolled)?;

    let mut gp = String::new();
    let _ = writeln!(gp, "set datafile separator \",\"");
    let _ = writeln!(gp, "set terminal pngcairo size 800,500");
    let _ = writeln!(gp, "set output \"{name}.png\"");
    let _ = writeln!(gp, "set xlabel \"omega0 t / pi\"");
    let _ = writeln!(gp, "set ylabel \"purity P(t)\"");
    let _ = writeln!(gp, "set yrange [0.3:1.05]");
    let _ = writeln!(gp, "set key bottom left");
    let _ = writeln!(
        gp,
        "plot \"{}\" using 2:3 with lines lw 2 title \"time-dependent control\", \\",
        file_name(&controlled_csv)
    );
    let _ = writeln!(
        gp,
        "     \"{}\" using 2:3 with lines lw 2 dashtype 2 title \"no control\"",
        file_name(&uncontrolled_csv)
    );
    fs::write(outdir.join(format!("{name}.gp")), gp)?;
    eprintln!("wrote {name} data and plot script to {}", outdir.display());
    Ok(())
}

/// Populations of the two protected states across the dimension change.
fn reproduce_fig4a(outdir: &Path) -> Result<(), CliError> {
    let csv = outdir.join("fig4a.csv");
    let config = base_config(
        ModelKind::FiveLevel,
        ModeKind::Synthesized,
        1.0,
        2.0,
        csv.clone(),
    );
    run_simulation(&config)?;

    let mut gp = String::new();
    let _ = writeln!(gp, "set datafile separator \",\"");
    let _ = writeln!(gp, "set terminal pngcairo size 800,500");
    let _ = writeln!(gp, "set output \"fig4a.png\"");
    let _ = writeln!(gp, "set xlabel \"omega0 t / pi\"");
    let _ = writeln!(gp, "set ylabel \"population\"");
    let _ = writeln!(gp, "set yrange [-0.05:1.1]");
    let _ = writeln!(gp, "set key center right");
    let _ = writeln!(
        gp,
        "plot \"{0}\" using 2:6 with lines lw 2 title \"P1\", \\",
        file_name(&csv)
    );
    let _ = writeln!(
        gp,
        "     \"{}\" using 2:7 with lines lw 2 dashtype 2 title \"P2\", \\",
        file_name(&csv)
    );
    let _ = writeln!(
        gp,
        "     \"{}\" using 2:($6+$7) with lines lw 1 dashtype 3 title \"P1+P2\"",
        file_name(&csv)
    );
    fs::write(outdir.join("fig4a.gp"), gp)?;
    eprintln!("wrote fig4a data and plot script to {}", outdir.display());
    Ok(())
}

/// Purity with the step transition against the always-on transition.
fn reproduce_fig4b(outdir: &Path) -> Result<(), CliError> {
    let step_csv = outdir.join("fig4b_step.csv");
    let step = base_config(
        ModelKind::FiveLevel,
        ModeKind::Synthesized,
        1.0,
        2.0,
        step_csv.clone(),
    );
    run_simulation(&step)?;

    let always_csv = outdir.join("fig4b_always.csv");
    let mut always = base_config(
        ModelKind::FiveLevel,
        ModeKind::Synthesized,
        1.0,
        2.0,
        always_csv.clone(),
    );
    always.transition = crate::config::TransitionKind::Always;
    run_simulation(&always)?;

    let mut gp = String::new();
    let _ = writeln!(gp, "set datafile separator \",\"");
    let _ = writeln!(gp, "set terminal pngcairo size 800,500");
    let _ = writeln!(gp, "set output \"fig4b.png\"");
    let _ = writeln!(gp, "set xlabel \"omega0 t / pi\"");
    let _ = writeln!(gp, "set ylabel \"purity P(t)\"");
    let _ = writeln!(gp, "set yrange [0.3:1.05]");
    let _ = writeln!(gp, "set key bottom left");
    let _ = writeln!(
        gp,
        "plot \"{}\" using 2:3 with lines lw 2 title \"T = step\", \\",
        file_name(&step_csv)
    );
    let _ = writeln!(
        gp,
        "     \"{}\" using 2:3 with lines lw 2 dashtype 2 title \"T = 1\"",
        file_name(&always_csv)
    );
    fs::write(outdir.join("fig4b.gp"), gp)?;
    eprintln!("wrote fig4b data and plot script to {}", outdir.display());
    Ok(())
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_default()
}
