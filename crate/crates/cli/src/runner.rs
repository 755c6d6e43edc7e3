//! Grid-point execution: one fully resolved parameter set per work item,
//! solved independently and re-emitted in submission order.

use phonon_stats::hierarchy::{auto_truncate_with, HierarchyError, Observables, SolveMethod};
use phonon_stats::model::{dress, Mode, SystemParams};
use std::time::Instant;

/// Everything a single steady-state solve needs, in CSV column order.
#[derive(Clone, Copy, Debug)]
pub struct PointSpec {
    pub mode: Mode,
    pub two_omega: f64,
    pub detuning_ratio: f64,
    pub kappa: f64,
    pub nbar: f64,
    pub g: f64,
    pub omega_ph: f64,
    pub gamma_c: f64,
}

impl PointSpec {
    pub fn params(&self) -> Result<SystemParams, phonon_stats::model::ModelError> {
        SystemParams::new(
            0.5 * self.two_omega,
            self.detuning_ratio * self.two_omega,
            self.omega_ph,
            self.g,
            1.0,
            self.gamma_c,
            self.kappa,
            self.nbar,
        )
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub tol: f64,
    pub n_start: usize,
    pub n_cap: usize,
    pub method: SolveMethod,
}

/// Result of one grid point; failures stay in-band so sweeps can record them
/// per-row instead of aborting.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub obs: Option<Observables>,
    pub status: &'static str,
    pub message: String,
    pub wall_ms: f64,
}

impl Outcome {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

fn status_of(err: &HierarchyError) -> &'static str {
    match err {
        HierarchyError::SingularSystem { .. } => "singular-system",
        HierarchyError::TruncationDiverged { .. } => "truncation-diverged",
        HierarchyError::ZeroMeanPhonon { .. } => "zero-mean-phonon",
        HierarchyError::IterativeStalled { .. } => "iterative-stalled",
    }
}

pub fn solve_point(spec: &PointSpec, opts: &SolveOptions) -> Outcome {
    let start = Instant::now();
    let done = |obs: Option<Observables>, status: &'static str, message: String| Outcome {
        obs,
        status,
        message,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    let params = match spec.params() {
        Ok(p) => p,
        Err(e) => return done(None, "invalid-params", e.to_string()),
    };
    let frame = dress(&params, spec.mode);
    match auto_truncate_with(
        &frame,
        &params,
        opts.tol,
        opts.n_start,
        opts.n_cap,
        opts.method,
    ) {
        Ok((_, obs)) => done(Some(obs), "ok", String::new()),
        Err(e) => done(None, status_of(&e), e.to_string()),
    }
}

/// Solves every spec, preserving input order in the output. `jobs = Some(1)`
/// stays on the calling thread; anything else uses a bounded worker pool.
pub fn run_points(specs: &[PointSpec], opts: &SolveOptions, jobs: Option<usize>) -> Vec<Outcome> {
    if jobs == Some(1) || specs.len() < 2 {
        return specs.iter().map(|s| solve_point(s, opts)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .expect("worker pool");
    pool.install(|| {
        use rayon::prelude::*;
        specs.par_iter().map(|s| solve_point(s, opts)).collect()
    })
}
