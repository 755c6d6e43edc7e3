//! Command-line front end for the steady-state phonon-statistics solver:
//! single-point evaluation, one- and two-axis parameter sweeps, built-in
//! figure recipes, and a cross-check against the dense reference solution.
//!
//! Exit codes: 0 success, 1 usage error, 2 solver/runtime failure,
//! 3 cross-check mismatch.

mod config;
mod csvio;
mod recipes;
mod runner;
mod svg;

use clap::{Args, Parser, Subcommand, ValueEnum};
use phonon_stats::hierarchy::{
    assemble_generator, selftest_corrupt, solve_steady_state_with, statistics, SolveMethod,
    DEFAULT_TRUNCATION_CAP,
};
use phonon_stats::model::{dress, thermal_occupation, Mode};
use phonon_stats::oracle::{build_liouvillian, project_to_hierarchy, steady_state_density};
use recipes::FigureId;
use runner::{run_points, Outcome, PointSpec, SolveOptions};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "phonon-stats",
    version,
    about = "Steady-state phonon statistics of a driven quantum dot coupled to an acoustic mode",
    max_term_width = 100
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one parameter point and print mean phonon number and g2(0)
    Steady(SteadyArgs),
    /// Sweep one or two parameter axes and emit a CSV table
    Sweep(SweepArgs),
    /// Run a built-in sweep recipe (figure reproduction)
    Figure(FigureArgs),
    /// Cross-check the hierarchy solver against the dense reference
    OracleCheck(OracleArgs),
}

#[derive(Args, Clone, Default)]
struct ParamFlags {
    /// Drive strength 2*Omega in units of gamma [default: 25]
    #[arg(long = "two-omega", value_name = "X")]
    two_omega: Option<f64>,
    /// Laser detuning divided by 2*Omega [default: -0.7]
    #[arg(long = "detuning-ratio", value_name = "X", allow_negative_numbers = true)]
    detuning_ratio: Option<f64>,
    /// Mode damping rate kappa/gamma [default: 5e-3]
    #[arg(long, value_name = "X")]
    kappa: Option<f64>,
    /// Bath occupation of the mode [default: 0.04]
    #[arg(long, value_name = "X")]
    nbar: Option<f64>,
    /// Bath temperature in kelvin; alternative to --nbar, needs --gamma-scale
    #[arg(long, value_name = "K")]
    temperature: Option<f64>,
    /// gamma in rad/s, fixes absolute units for --temperature
    #[arg(long = "gamma-scale", value_name = "RAD_PER_S")]
    gamma_scale: Option<f64>,
    /// Emitter-mode coupling g/gamma [default: 15]
    #[arg(long, value_name = "X")]
    g: Option<f64>,
    /// Mode frequency omega_ph/gamma [default: 35]
    #[arg(long = "omega-ph", value_name = "X")]
    omega_ph: Option<f64>,
    /// Dressed-frame cross-damping gamma_c/gamma [default: 0.1]
    #[arg(long = "gamma-c", value_name = "X")]
    gamma_c: Option<f64>,
    /// Treatment of the fast dressed-frame terms [default: both]
    #[arg(long, value_enum, value_name = "WHICH")]
    mode: Option<ModeArg>,
    /// Relative convergence tolerance of the automatic truncation [default: 1e-8]
    #[arg(long, value_name = "X")]
    tol: Option<f64>,
    /// Initial phonon-level count for the truncation ladder [default: 8]
    #[arg(long = "n-start", value_name = "N")]
    n_start: Option<usize>,
    /// Hard ceiling on phonon levels before giving up [default: 4096]
    #[arg(long = "n-cap", value_name = "N")]
    n_cap: Option<usize>,
    /// Defaults file of `key = value` lines mirroring these flags
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Use the preconditioned iterative solver instead of direct elimination
    #[arg(long)]
    iterative: bool,
}

#[derive(Args, Clone, Default)]
struct OutputFlags {
    /// Write the CSV here instead of stdout
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Also write an SVG plot next to the CSV (requires --out)
    #[arg(long, requires = "out")]
    svg: bool,
    /// Worker threads for grid points [default: all cores]
    #[arg(long, value_name = "N", env = "PHONON_STATS_JOBS")]
    jobs: Option<usize>,
}

#[derive(Args)]
struct SteadyArgs {
    #[command(flatten)]
    params: ParamFlags,
    /// Also write the result as a CSV table
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    params: ParamFlags,
    #[command(flatten)]
    output: OutputFlags,
    /// Primary axis as name:scale:start:stop:count, e.g.
    /// kappa_over_gamma:log10:1e-3:10:61
    #[arg(long, value_name = "SPEC")]
    axis: String,
    /// Optional second axis (same format); emitted row-major, primary outer
    #[arg(long, value_name = "SPEC")]
    axis2: Option<String>,
}

#[derive(Args)]
struct FigureArgs {
    /// Which recipe to run
    #[arg(value_enum)]
    which: FigureId,
    #[command(flatten)]
    params: ParamFlags,
    #[command(flatten)]
    output: OutputFlags,
    /// Point count of the primary axis [defaults: fig1a 301, fig1b/fig2 61, fig1c 41]
    #[arg(long, value_name = "N")]
    points: Option<usize>,
    /// Lower bound of the primary axis [defaults: fig1a -1.5, fig1b/fig2 1e-3, fig1c 1e-2]
    #[arg(long, value_name = "X", allow_negative_numbers = true)]
    from: Option<f64>,
    /// Upper bound of the primary axis [defaults: fig1a 1.5, others 10]
    #[arg(long, value_name = "X", allow_negative_numbers = true)]
    to: Option<f64>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    params: ParamFlags,
    /// Phonon levels used for the comparison (dense reference allows up to 31)
    #[arg(long, value_name = "N", default_value_t = 10)]
    levels: usize,
    /// Flip one generator coefficient to prove the cross-check can fail
    #[arg(long, hide = true)]
    corrupt_generator: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Secular,
    Beyond,
    Both,
}

#[derive(Debug)]
enum CliErr {
    Usage(String),
    Runtime(String),
}

fn usage<T>(msg: impl Into<String>) -> Result<T, CliErr> {
    Err(CliErr::Usage(msg.into()))
}

fn main() {
    // die quietly like cat(1) when a pipe consumer hangs up
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Steady(a) => cmd_steady(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Figure(a) => cmd_figure(a),
        Command::OracleCheck(a) => cmd_oracle_check(a),
    };
    match result {
        Ok(code) => code,
        Err(CliErr::Usage(m)) => {
            eprintln!("error: {m}");
            1
        }
        Err(CliErr::Runtime(m)) => {
            eprintln!("error: {m}");
            2
        }
    }
}

/// Flag/config/default resolution for everything but the swept axes.
struct Resolved {
    base: PointSpec,
    modes: Vec<Mode>,
    modes_explicit: bool,
    opts: SolveOptions,
}

fn resolve(flags: &ParamFlags) -> Result<Resolved, CliErr> {
    let cfg = match &flags.config {
        Some(path) => config::load(path).map_err(CliErr::Usage)?,
        None => config::FileConfig::default(),
    };
    let omega_ph = flags.omega_ph.or(cfg.omega_ph).unwrap_or(35.0);
    let temperature = flags.temperature.or(cfg.temperature);
    let gamma_scale = flags.gamma_scale.or(cfg.gamma_scale);
    let nbar = match (flags.nbar.or(cfg.nbar), temperature) {
        (Some(n), Some(_)) => {
            eprintln!("warning: both an occupation and a temperature given; using the occupation");
            n
        }
        (Some(n), None) => n,
        (None, Some(t)) => {
            let scale = match gamma_scale {
                Some(s) if s > 0.0 => s,
                Some(_) => return usage("--gamma-scale must be positive"),
                None => {
                    return usage(
                        "--temperature needs --gamma-scale <RAD_PER_S> to fix absolute units",
                    )
                }
            };
            thermal_occupation(omega_ph, t, scale)
        }
        (None, None) => 0.04,
    };
    let mode_arg = match (flags.mode, cfg.mode.as_deref()) {
        (Some(m), _) => Some(m),
        (None, Some("secular")) => Some(ModeArg::Secular),
        (None, Some("beyond")) => Some(ModeArg::Beyond),
        (None, Some("both")) => Some(ModeArg::Both),
        (None, Some(other)) => return usage(format!("config: unknown mode `{other}`")),
        (None, None) => None,
    };
    let modes = match mode_arg.unwrap_or(ModeArg::Both) {
        ModeArg::Secular => vec![Mode::Secular],
        ModeArg::Beyond => vec![Mode::BeyondSecular],
        ModeArg::Both => vec![Mode::Secular, Mode::BeyondSecular],
    };
    let tol = flags.tol.or(cfg.tol).unwrap_or(1e-8);
    if !(tol > 0.0 && tol.is_finite()) {
        return usage("--tol must be a positive finite number");
    }
    let n_start = flags.n_start.or(cfg.n_start).unwrap_or(8);
    let n_cap = flags.n_cap.or(cfg.n_cap).unwrap_or(DEFAULT_TRUNCATION_CAP);
    if n_start == 0 || n_cap < n_start {
        return usage("need 1 <= --n-start <= --n-cap");
    }
    Ok(Resolved {
        base: PointSpec {
            mode: Mode::Secular, // placeholder; every caller sets it per point
            two_omega: flags.two_omega.or(cfg.two_omega).unwrap_or(25.0),
            detuning_ratio: flags.detuning_ratio.or(cfg.detuning_ratio).unwrap_or(-0.7),
            kappa: flags.kappa.or(cfg.kappa).unwrap_or(5e-3),
            nbar,
            g: flags.g.or(cfg.g).unwrap_or(15.0),
            omega_ph,
            gamma_c: flags.gamma_c.or(cfg.gamma_c).unwrap_or(0.1),
        },
        modes,
        modes_explicit: mode_arg.is_some(),
        opts: SolveOptions {
            tol,
            n_start,
            n_cap,
            method: if flags.iterative {
                SolveMethod::Iterative
            } else {
                SolveMethod::Direct
            },
        },
    })
}

fn check_jobs(jobs: Option<usize>) -> Result<Option<usize>, CliErr> {
    if jobs == Some(0) {
        return usage("--jobs must be at least 1");
    }
    Ok(jobs)
}

fn cmd_steady(a: SteadyArgs) -> Result<i32, CliErr> {
    let res = resolve(&a.params)?;
    res.base.params().map_err(|e| CliErr::Usage(e.to_string()))?;
    let specs: Vec<PointSpec> = res
        .modes
        .iter()
        .map(|&mode| PointSpec { mode, ..res.base })
        .collect();
    let outs = run_points(&specs, &res.opts, Some(1));
    let mut failed = false;
    for (s, o) in specs.iter().zip(&outs) {
        match &o.obs {
            Some(obs) => println!(
                "{:<8} n_mean = {:.12e}  g2 = {:.12e}  levels = {}  residual = {:.3e}  ({:.1} ms)",
                s.mode.label(),
                obs.n_mean,
                obs.g2,
                obs.n_max_used,
                obs.residual,
                o.wall_ms
            ),
            None => {
                failed = true;
                eprintln!(
                    "error: mode={} status={} detail={}",
                    s.mode.label(),
                    o.status,
                    o.message
                );
            }
        }
    }
    if let Some(path) = &a.out {
        std::fs::write(path, csvio::render(&specs, &outs))
            .map_err(|e| CliErr::Runtime(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(if failed { 2 } else { 0 })
}

// --- sweep axes -------------------------------------------------------------

const AXIS_NAMES: [(&str, &str); 7] = [
    ("delta_over_2omega", "detuning_ratio"),
    ("two_omega_over_gamma", "two_omega"),
    ("kappa_over_gamma", "kappa"),
    ("nbar", "nbar"),
    ("g_over_gamma", "g"),
    ("omega_ph_over_gamma", "omega_ph"),
    ("gamma_c_over_gamma", "gamma_c"),
];

struct SweepAxis {
    /// CSV column the axis writes to.
    param: &'static str,
    log: bool,
    start: f64,
    stop: f64,
    count: usize,
}

impl SweepAxis {
    fn values(&self) -> Vec<f64> {
        if self.log {
            recipes::log_grid(self.start, self.stop, self.count)
        } else {
            recipes::lin_grid(self.start, self.stop, self.count)
        }
    }
}

fn set_param(spec: &mut PointSpec, param: &str, v: f64) {
    match param {
        "detuning_ratio" => spec.detuning_ratio = v,
        "two_omega" => spec.two_omega = v,
        "kappa" => spec.kappa = v,
        "nbar" => spec.nbar = v,
        "g" => spec.g = v,
        "omega_ph" => spec.omega_ph = v,
        "gamma_c" => spec.gamma_c = v,
        _ => unreachable!("unknown param column {param}"),
    }
}

fn get_param(spec: &PointSpec, param: &str) -> f64 {
    match param {
        "detuning_ratio" => spec.detuning_ratio,
        "two_omega" => spec.two_omega,
        "kappa" => spec.kappa,
        "nbar" => spec.nbar,
        "g" => spec.g,
        "omega_ph" => spec.omega_ph,
        "gamma_c" => spec.gamma_c,
        _ => unreachable!("unknown param column {param}"),
    }
}

fn parse_axis(text: &str) -> Result<SweepAxis, CliErr> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 5 {
        return usage(format!(
            "axis `{text}`: expected name:scale:start:stop:count"
        ));
    }
    let param = AXIS_NAMES
        .iter()
        .find(|(n, _)| *n == parts[0])
        .map(|(_, p)| *p);
    let Some(param) = param else {
        let names: Vec<&str> = AXIS_NAMES.iter().map(|(n, _)| *n).collect();
        return usage(format!(
            "axis `{}`: unknown parameter; expected one of {}",
            parts[0],
            names.join(", ")
        ));
    };
    let log = match parts[1] {
        "linear" => false,
        "log10" => true,
        other => return usage(format!("axis scale `{other}`: expected linear or log10")),
    };
    let num = |s: &str, what: &str| -> Result<f64, CliErr> {
        s.parse::<f64>()
            .map_err(|e| CliErr::Usage(format!("axis {what} `{s}`: {e}")))
    };
    let start = num(parts[2], "start")?;
    let stop = num(parts[3], "stop")?;
    let count: usize = parts[4]
        .parse()
        .map_err(|e| CliErr::Usage(format!("axis count `{}`: {e}", parts[4])))?;
    if count < 2 {
        return usage("axis count must be at least 2");
    }
    if log && (start <= 0.0 || stop <= 0.0) {
        return usage("log10 axes need positive endpoints");
    }
    Ok(SweepAxis {
        param,
        log,
        start,
        stop,
        count,
    })
}

fn cmd_sweep(a: SweepArgs) -> Result<i32, CliErr> {
    let res = resolve(&a.params)?;
    let ax1 = parse_axis(&a.axis)?;
    let ax2 = a.axis2.as_deref().map(parse_axis).transpose()?;
    if let Some(ax2) = &ax2 {
        if ax2.param == ax1.param {
            return usage("the two axes name the same parameter");
        }
    }
    let xs = ax1.values();
    let ys: Vec<f64> = ax2.as_ref().map(|x| x.values()).unwrap_or_default();
    let mut specs = Vec::new();
    for &x in &xs {
        let mut with_x = res.base;
        set_param(&mut with_x, ax1.param, x);
        let inner: &[f64] = if ys.is_empty() { &[f64::NAN] } else { &ys };
        for &y in inner {
            let mut point = with_x;
            if let Some(ax2) = &ax2 {
                set_param(&mut point, ax2.param, y);
            }
            for &mode in &res.modes {
                specs.push(PointSpec { mode, ..point });
            }
        }
    }
    let outs = run_points(&specs, &res.opts, check_jobs(a.output.jobs)?);
    let plot = match &ax2 {
        Some(ax2) if ax2.count > 6 => Plot::Heat {
            xs: &xs,
            ys: &ys,
            y_param: ax2.param,
        },
        _ => Plot::Lines,
    };
    emit(
        &a.output,
        &format!("sweep {}", a.axis),
        ax1.param,
        ax1.log,
        &res.modes,
        &specs,
        &outs,
        plot,
    )?;
    Ok(0)
}

fn cmd_figure(a: FigureArgs) -> Result<i32, CliErr> {
    let res = resolve(&a.params)?;
    if a.points.is_some_and(|p| p < 2) {
        return usage("--points must be at least 2");
    }
    let modes = if res.modes_explicit {
        res.modes.clone()
    } else {
        a.which.default_modes()
    };
    let plan = recipes::plan(a.which, res.base, &modes, a.points, a.from, a.to)
        .map_err(CliErr::Usage)?;
    let label = format!("{:?}", a.which).to_lowercase();
    eprintln!("{label}: {}", plan.provenance);
    let outs = run_points(&plan.points, &res.opts, check_jobs(a.output.jobs)?);
    let plot = match &plan.heat {
        Some(h) => Plot::Heat {
            xs: &h.xs,
            ys: &h.ys,
            y_param: h.y_param,
        },
        None => Plot::Lines,
    };
    emit(
        &a.output,
        &format!("{label} — {}", plan.provenance),
        plan.x_param,
        plan.x_log,
        &modes,
        &plan.points,
        &outs,
        plot,
    )?;
    Ok(0)
}

enum Plot<'a> {
    Lines,
    Heat {
        xs: &'a [f64],
        ys: &'a [f64],
        y_param: &'static str,
    },
}

/// CSV to `--out` (or stdout) plus the optional SVG rendering.
#[allow(clippy::too_many_arguments)]
fn emit(
    output: &OutputFlags,
    title: &str,
    x_param: &'static str,
    x_log: bool,
    modes: &[Mode],
    specs: &[PointSpec],
    outs: &[Outcome],
    plot: Plot,
) -> Result<(), CliErr> {
    let csv = csvio::render(specs, outs);
    let failed = outs.iter().filter(|o| !o.is_ok()).count();
    match &output.out {
        Some(path) => {
            std::fs::write(path, csv)
                .map_err(|e| CliErr::Runtime(format!("cannot write {}: {e}", path.display())))?;
            eprintln!(
                "wrote {} rows to {}{}",
                specs.len(),
                path.display(),
                if failed > 0 {
                    format!(" ({failed} failed in-band)")
                } else {
                    String::new()
                }
            );
        }
        None => print!("{csv}"),
    }
    if output.svg {
        let path = output
            .out
            .as_ref()
            .expect("clap enforces --svg requires --out")
            .with_extension("svg");
        let text = match plot {
            Plot::Lines => {
                let rows = line_rows(specs, outs, x_param);
                svg::line_plot(title, x_param, x_log, &rows)
            }
            Plot::Heat { xs, ys, y_param } => {
                let panels = heat_panels(specs, outs, modes, xs.len(), ys.len());
                svg::heat_map(title, x_param, x_log, xs, y_param, ys, &panels)
            }
        };
        std::fs::write(&path, text)
            .map_err(|e| CliErr::Runtime(format!("cannot write {}: {e}", path.display())))?;
        eprintln!("wrote plot to {}", path.display());
    }
    Ok(())
}

/// One plot series per distinct (mode × varying-parameter) combination.
fn line_rows(specs: &[PointSpec], outs: &[Outcome], x_param: &str) -> Vec<svg::LineRow> {
    let columns: [&'static str; 7] = [
        "two_omega",
        "detuning_ratio",
        "kappa",
        "nbar",
        "g",
        "omega_ph",
        "gamma_c",
    ];
    let varying: Vec<&str> = columns
        .into_iter()
        .filter(|c| *c != x_param)
        .filter(|c| {
            specs
                .iter()
                .any(|s| get_param(s, c) != get_param(&specs[0], c))
        })
        .collect();
    specs
        .iter()
        .zip(outs)
        .map(|(s, o)| {
            let mut series = s.mode.label().to_string();
            for c in &varying {
                series.push_str(&format!(" {c}={}", get_param(s, c)));
            }
            svg::LineRow {
                x: get_param(s, x_param),
                series,
                n_mean: o.obs.as_ref().map(|ob| ob.n_mean),
                g2: o.obs.as_ref().map(|ob| ob.g2),
            }
        })
        .collect()
}

/// Row-major g2 grid per mode; specs are ordered x-outer, y-inner, mode-innermost.
fn heat_panels(
    specs: &[PointSpec],
    outs: &[Outcome],
    modes: &[Mode],
    nx: usize,
    ny: usize,
) -> Vec<(String, Vec<Option<f64>>)> {
    let nm = modes.len();
    debug_assert_eq!(specs.len(), nx * ny * nm);
    modes
        .iter()
        .enumerate()
        .map(|(im, mode)| {
            let mut vals = vec![None; nx * ny];
            for ix in 0..nx {
                for iy in 0..ny {
                    let flat = (ix * ny + iy) * nm + im;
                    vals[iy * nx + ix] = outs[flat].obs.as_ref().map(|o| o.g2);
                }
            }
            (format!("g2(0), {}", mode.label()), vals)
        })
        .collect()
}

fn cmd_oracle_check(a: OracleArgs) -> Result<i32, CliErr> {
    let res = resolve(&a.params)?;
    if a.levels < 1 || 2 * (a.levels + 1) > phonon_stats::oracle::DIM_CAP {
        return usage(format!(
            "--levels must be in 1..={}",
            phonon_stats::oracle::DIM_CAP / 2 - 1
        ));
    }
    let params = res.base.params().map_err(|e| CliErr::Usage(e.to_string()))?;
    let tol = res.opts.tol;
    println!("levels = {}  tolerance = {:.1e}", a.levels, tol);
    let mut worst = 0.0f64;
    for &mode in &res.modes {
        let frame = dress(&params, mode);
        let mut gen = assemble_generator(&frame, &params, a.levels);
        if a.corrupt_generator {
            selftest_corrupt(&mut gen);
        }
        let ours = solve_steady_state_with(&gen, res.opts.method)
            .map_err(|e| CliErr::Runtime(format!("{} solve: {e}", mode.label())))?;
        let liou = build_liouvillian(&frame, &params, a.levels)
            .map_err(|e| CliErr::Runtime(format!("reference build: {e}")))?;
        let rho = steady_state_density(&liou)
            .map_err(|e| CliErr::Runtime(format!("reference solve: {e}")))?;
        let theirs = project_to_hierarchy(&rho);
        let gap = ours
            .p
            .iter()
            .zip(&theirs.p)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        let defect = gen.residual_inf(&theirs.p);
        let deltas = match (statistics(&ours), statistics(&theirs)) {
            (Ok((n1, g1)), Ok((n2, g2))) => {
                format!("|dn| = {:.3e}  |dg2| = {:.3e}", (n1 - n2).abs(), (g1 - g2).abs())
            }
            _ => "observables undefined (zero mean)".to_string(),
        };
        println!(
            "{:<8} component gap = {:.3e}  projected defect = {:.3e}  {}",
            mode.label(),
            gap,
            defect,
            deltas
        );
        worst = worst.max(gap).max(defect);
    }
    if worst < tol {
        println!("oracle-check: ok (worst deviation {worst:.3e} below {tol:.1e})");
        Ok(0)
    } else {
        println!("oracle-check: mismatch (worst deviation {worst:.3e} exceeds {tol:.1e})");
        Ok(3)
    }
}
