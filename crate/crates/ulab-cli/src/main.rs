use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ulab::format::fmt_g6;
use ulab::harness::csv::{read_sweep_csv, write_curve_csv, write_file, write_sweep_csv};
use ulab::harness::{
    compare_amp_vamp, curve_points, mse_curve, render_heatmap, solve_instance, sweep, EnsembleKind, FileConfig,
    Instance, ModeKind, Overrides, Preset, SolverKind,
};
use ulab::lines::{phase_line, read_lines_csv, LineMethod, PhaseLine, SeSettings, LINES_HEADER};
use ulab::rng::{derive, stream};
use ulab::Error;

/// Exit status for configuration and I/O problems; solver failures inside an
/// experiment are recorded in its output instead.
const CONFIG_ERROR: u8 = 2;

#[derive(Parser)]
#[command(name = "ulab", version, about = "Message-passing phase diagrams and MSE curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML experiment file.
    #[arg(long, short = 'c')]
    config: Option<PathBuf>,
    /// Grid and run-count defaults: desk or full.
    #[arg(long)]
    preset: Option<Preset>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// amp, amp-trick or vamp.
    #[arg(long)]
    solver: Option<SolverKind>,
    /// l1 or bayes.
    #[arg(long)]
    mode: Option<ModeKind>,
    #[arg(long)]
    ensemble: Option<EnsembleKind>,
    /// Output file.
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> ulab::Result<FileConfig> {
        let file = match &self.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        Ok(file.apply(&Overrides {
            n: self.n,
            seed: self.seed,
            solver: self.solver,
            mode: self.mode,
            ensemble: self.ensemble,
            out: self.out.clone(),
            preset: self.preset,
        }))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Phase diagram over an (alpha, rho) grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Also render an SVG heatmap with the theoretical line of the mode.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Mean MSE against alpha at fixed rho for several ensembles.
    MseCurve {
        #[command(flatten)]
        common: Common,
    },
    /// Theoretical transition lines from state evolution.
    Lines {
        #[command(flatten)]
        common: Common,
        /// dt, bayes, or both.
        #[arg(long, default_value = "both")]
        method: String,
    },
    /// AMP with Gaussianization against VAMP on identical instances.
    Compare {
        #[command(flatten)]
        common: Common,
    },
    /// One instance; prints the outcome and optionally writes the trajectory.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.6)]
        alpha: f64,
        #[arg(long, default_value_t = 0.2)]
        rho: f64,
    },
    /// SVG heatmap of a sweep CSV.
    Render {
        /// CSV written by `sweep`.
        #[arg(long)]
        grid: PathBuf,
        /// CSV written by `lines`, overlaid as a polyline.
        #[arg(long)]
        lines: Option<PathBuf>,
        /// Which line of the lines file to draw; defaults to the first.
        #[arg(long)]
        method: Option<LineMethod>,
        #[arg(long, short = 'o', default_value = "heatmap.svg")]
        out: PathBuf,
    },
}

fn out_or(file: &FileConfig, default: &str) -> PathBuf {
    file.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn line_method(mode: ModeKind) -> LineMethod {
    match mode {
        ModeKind::L1 => LineMethod::DonohoTanner,
        ModeKind::Bayes => LineMethod::BayesHard,
    }
}

fn run_sweep(common: &Common, svg: Option<&Path>) -> ulab::Result<()> {
    let file = common.load()?;
    let cfg = file.sweep_config()?;
    let out = out_or(&file, "sweep.csv");
    let grid = sweep(&cfg)?;
    write_file(&out, |w| write_sweep_csv(&grid, w))?;
    println!(
        "{} {} on {}: {} cells x {} runs -> {}",
        cfg.solver.solver,
        cfg.solver.mode,
        cfg.ensemble.kind,
        grid.cells.len(),
        cfg.runs_per_cell,
        out.display()
    );
    for (rho, alpha) in grid.empirical_boundary() {
        let a = alpha.map(fmt_g6).unwrap_or_else(|| "none".into());
        println!("boundary rho={} alpha={a}", fmt_g6(rho));
    }
    if let Some(svg) = svg {
        let rhos: Vec<f64> = cfg.rho_grid.iter().copied().filter(|&r| r > 0.02 && r < 0.98).collect();
        let line = phase_line(line_method(cfg.solver.mode), &rhos, &SeSettings::default()).ok();
        render_heatmap(&grid, line.as_ref(), svg)?;
        println!("heatmap -> {}", svg.display());
    }
    Ok(())
}

fn run_curve(common: &Common) -> ulab::Result<()> {
    let file = common.load()?;
    let cfg = file.curve_config()?;
    let out = out_or(&file, "mse_curve.csv");
    let records = mse_curve(&cfg)?;
    write_file(&out, |w| write_curve_csv(&records, w))?;
    println!(
        "{} {}: {} records -> {}",
        cfg.solver.solver,
        cfg.solver.mode,
        records.len(),
        out.display()
    );
    for p in curve_points(&records) {
        println!(
            "{} rho={} alpha={} mean_mse={}",
            p.ensemble,
            fmt_g6(p.rho),
            fmt_g6(p.alpha),
            fmt_g6(p.mean_mse)
        );
    }
    Ok(())
}

fn run_lines(common: &Common, method: &str) -> ulab::Result<()> {
    let file = common.load()?;
    let methods = match method {
        "both" => vec![LineMethod::DonohoTanner, LineMethod::BayesHard],
        m => vec![m.parse().map_err(|e: Error| Error::Config(e.to_string()))?],
    };
    let rhos = file.line_rhos()?;
    let out = out_or(&file, "lines.csv");
    let settings = SeSettings::default();
    let lines = methods
        .into_iter()
        .map(|m| phase_line(m, &rhos, &settings))
        .collect::<ulab::Result<Vec<PhaseLine>>>()?;
    write_file(&out, |w| {
        writeln!(w, "{LINES_HEADER}")?;
        for l in &lines {
            for row in l.csv_rows() {
                writeln!(w, "{row}")?;
            }
        }
        Ok(())
    })?;
    println!(
        "{} points -> {}",
        lines.iter().map(|l| l.points.len()).sum::<usize>(),
        out.display()
    );
    Ok(())
}

fn run_compare(common: &Common) -> ulab::Result<()> {
    let file = common.load()?;
    let cfg = file.compare_config()?;
    let out = out_or(&file, "compare.csv");
    let report = compare_amp_vamp(&cfg)?;
    write_file(&out, |w| {
        writeln!(w, "alpha,rho,run,amp_mse,vamp_mse,amp_status,vamp_status,excluded")?;
        for p in &report.pairs {
            let cell = |r: &ulab::harness::RunResult| {
                (
                    fmt_g6(r.mse().unwrap_or(f64::NAN)),
                    r.status().map(|s| s.as_str()).unwrap_or("error"),
                )
            };
            let ((am, ast), (vm, vst)) = (cell(&p.amp), cell(&p.vamp));
            writeln!(
                w,
                "{},{},{},{am},{vm},{ast},{vst},{}",
                fmt_g6(p.alpha),
                fmt_g6(p.rho),
                p.run,
                p.excluded as u8
            )?;
        }
        Ok(())
    })?;
    println!(
        "agreement={} correlation={} considered={} excluded={} -> {}",
        fmt_g6(report.agreement_rate),
        fmt_g6(report.mse_correlation),
        report.considered,
        report.excluded,
        out.display()
    );
    Ok(())
}

fn run_solve(common: &Common, alpha: f64, rho: f64) -> ulab::Result<()> {
    let file = common.load()?;
    let cfg = file.sweep_config()?;
    if !(alpha > 0.0 && alpha <= 1.0) || !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::Config(format!(
            "need alpha in (0, 1] and rho in (0, 1], got {alpha}, {rho}"
        )));
    }
    let seed = cfg.base_seed;
    let mut inst = Instance::sample(
        &cfg.ensemble,
        cfg.n,
        alpha,
        rho,
        derive(seed, stream::MATRIX),
        derive(seed, stream::SIGNAL),
    )
    .map_err(|e| Error::Config(e.to_string()))?;
    let kappa = cfg.solver.kappa_for(alpha, rho);
    // a solver error on a valid instance is an outcome, not a config problem
    match solve_instance(&cfg.solver, &mut inst, kappa, seed) {
        Ok(t) => {
            println!(
                "{} {} on {} (m={}, n={}): status={} iterations={} mse={}",
                cfg.solver.solver,
                cfg.solver.mode,
                cfg.ensemble.kind,
                inst.op.m(),
                inst.op.n(),
                t.status.as_str(),
                t.iterations(),
                fmt_g6(t.final_mse().unwrap_or(f64::NAN))
            );
            if let Some(out) = &file.out {
                write_file(out, |w| {
                    writeln!(w, "iter,mse,residual_norm,tau2")?;
                    for r in &t.records {
                        writeln!(
                            w,
                            "{},{},{},{}",
                            r.iter,
                            fmt_g6(r.mse.unwrap_or(f64::NAN)),
                            fmt_g6(r.residual_norm),
                            fmt_g6(r.tau2)
                        )?;
                    }
                    Ok(())
                })?;
            }
        }
        Err(e) => println!("solve failed: {e}"),
    }
    Ok(())
}

fn run_render(grid: &Path, lines: Option<&Path>, method: Option<LineMethod>, out: &Path) -> ulab::Result<()> {
    let grid = read_sweep_csv(grid)?;
    let line = match lines {
        Some(p) => {
            let all = read_lines_csv(p)?;
            let chosen = match method {
                Some(m) => all.into_iter().find(|l| l.method == m),
                None => all.into_iter().next(),
            };
            Some(chosen.ok_or_else(|| Error::Config(format!("{}: requested line not present", p.display())))?)
        }
        None => None,
    };
    render_heatmap(&grid, line.as_ref(), out)?;
    println!("heatmap -> {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Sweep { common, svg } => run_sweep(common, svg.as_deref()),
        Command::MseCurve { common } => run_curve(common),
        Command::Lines { common, method } => run_lines(common, method),
        Command::Compare { common } => run_compare(common),
        Command::Solve { common, alpha, rho } => run_solve(common, *alpha, *rho),
        Command::Render {
            grid,
            lines,
            method,
            out,
        } => run_render(grid, lines.as_deref(), *method, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(CONFIG_ERROR)
        }
    }
}
