//! Six-family Fock-diagonal equation hierarchy: assembly of the sparse
//! generator, steady-state solve, observables, and automatic truncation.
//!
//! State layout: variable `P_n^(i)` (family `i` ∈ 1…6, Fock level `n` ∈
//! 0…N) lives at index `6n + (i − 1)`. Family 1 holds the phonon populations
//! summed over the emitter state, family 2 the inversion-weighted
//! populations, families 3–6 the four emitter–cavity coherence projections
//! that close the system. Couplings are nearest-neighbor in `n`, so the
//! generator is banded with 8 sub- and 6 super-diagonals.

use crate::linalg::{bicgstab, Banded, Csr, LinalgError};
use crate::model::{DressedFrame, SystemParams};
use num_complex::Complex64;
use thiserror::Error;

/// Lower/upper bandwidths of the generator in the interleaved layout.
const KL: usize = 8;
const KU: usize = 6;

#[derive(Debug, Error)]
pub enum HierarchyError {
    #[error("steady-state system numerically singular (condition estimate {condition:.3e})")]
    SingularSystem { condition: f64 },
    #[error("observables not converged at the truncation cap n_max = {n_cap}")]
    TruncationDiverged { n_cap: usize },
    #[error("mean phonon number {n_mean:.3e} is below 1e-12, g2 undefined")]
    ZeroMeanPhonon { n_mean: f64 },
    #[error("iterative solve stalled after {iterations} iterations (residual {residual:.3e})")]
    IterativeStalled { iterations: usize, residual: f64 },
}

/// Complex state vector of the hierarchy, `p[6n + (i−1)] = P_n^(i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyState {
    pub n_max: usize,
    pub p: Vec<Complex64>,
}

impl HierarchyState {
    /// Flat index of `P_n^(family)`; `family` ∈ 1…6.
    #[inline]
    pub fn index(family: usize, n: usize) -> usize {
        debug_assert!((1..=6).contains(&family));
        6 * n + (family - 1)
    }

    #[inline]
    pub fn get(&self, family: usize, n: usize) -> Complex64 {
        self.p[Self::index(family, n)]
    }

    /// Phonon population at level `n` (real part of the family-1 variable).
    #[inline]
    pub fn population(&self, n: usize) -> f64 {
        self.p[6 * n].re
    }
}

/// Sparse generator G of the linear system Ṗ = G·P, as a triplet list.
///
/// Rows at the truncation edge n = N use the closure of the ladder truncated
/// at N (the raising operator out of the top level is dropped, i.e. the
/// number-raising product acts as diag(1,…,N,0)), so the finite system is
/// itself the exact projection of a dimension-2(N+1) Lindblad model and its
/// kernel stays one-dimensional with nonnegative populations.
#[derive(Debug, Clone)]
pub struct SparseGenerator {
    pub n_max: usize,
    pub dim: usize,
    triplets: Vec<(u32, u32, Complex64)>,
}

impl SparseGenerator {
    pub fn entries(&self) -> &[(u32, u32, Complex64)] {
        &self.triplets
    }

    /// out = G·p
    pub fn apply(&self, p: &[Complex64], out: &mut [Complex64]) {
        assert_eq!(p.len(), self.dim);
        assert_eq!(out.len(), self.dim);
        out.fill(Complex64::ZERO);
        for &(i, j, v) in &self.triplets {
            out[i as usize] += v * p[j as usize];
        }
    }

    /// ‖G·p‖∞ — steady-state defect of a candidate solution.
    pub fn residual_inf(&self, p: &[Complex64]) -> f64 {
        let mut out = vec![Complex64::ZERO; self.dim];
        self.apply(p, &mut out);
        out.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Max absolute row sum — the natural scale for residual thresholds.
    fn norm_inf(&self) -> f64 {
        let mut rows = vec![0.0f64; self.dim];
        for &(i, _, v) in &self.triplets {
            rows[i as usize] += v.norm();
        }
        rows.into_iter().fold(0.0, f64::max)
    }
}

/// Flips the sign of one off-diagonal coefficient. Validation-harness hook:
/// a generator mangled this way must fail the cross-check against the full
/// Lindblad solution.
///
/// Prefers a real-valued (thermal-chain) coefficient: the imaginary ones at
/// the lowest level multiply variables that vanish identically, which would
/// leave the steady state untouched.
#[doc(hidden)]
pub fn selftest_corrupt(gen: &mut SparseGenerator) {
    let pick = gen
        .triplets
        .iter()
        .position(|t| t.0 != t.1 && t.2.im == 0.0)
        .or_else(|| gen.triplets.iter().position(|t| t.0 != t.1));
    if let Some(k) = pick {
        gen.triplets[k].2 = -gen.triplets[k].2;
    }
}

/// Assembles the generator at truncation `n_max` (≥ 1).
///
/// Coefficient families per row: the emitter–cavity coupling enters through
/// λ = g·sin(2θ)/2; the coherence families carry the detunings
/// ±(β(2n±1) − δ) and the common decay Γ = γ₊ + γ₋ + 4γ₀; the thermal
/// ladder enters with downward rate 2κ(1+n̄) and upward rate 2κn̄.
pub fn assemble_generator(
    frame: &DressedFrame,
    params: &SystemParams,
    n_max: usize,
) -> SparseGenerator {
    assert!(n_max >= 1, "need at least two Fock levels");
    let nf = n_max + 1;
    let dim = 6 * nf;
    let lam = 0.5 * params.g * frame.sin_2theta();
    let il = Complex64::new(0.0, lam);
    let beta = frame.beta;
    let delta = frame.delta_eff;
    let gp = frame.gamma_plus;
    let gm = frame.gamma_minus;
    let big_gamma = frame.total_rate();
    let ka_g = params.kappa * (1.0 + params.nbar); // downward, per quantum
    let ka_l = params.kappa * params.nbar; // upward, per quantum
    let a2 = 2.0 * ka_g;
    let b2 = 2.0 * ka_l;

    let mut t: Vec<(u32, u32, Complex64)> = Vec::with_capacity(dim * 8);
    let mut push = |r: usize, c: usize, v: Complex64| {
        if v != Complex64::ZERO {
            t.push((r as u32, c as u32, v));
        }
    };
    let re = Complex64::from;

    for n in 0..nf {
        let nf64 = n as f64;
        let top = n == n_max;
        let (i1, i2, i3, i4, i5, i6) = (6 * n, 6 * n + 1, 6 * n + 2, 6 * n + 3, 6 * n + 4, 6 * n + 5);

        // raising into levels above n_max is closed off
        let loss_up = if top { 0.0 } else { nf64 + 1.0 };

        // family 1: populations — thermal ladder driven by the coherences
        push(i1, i3, il);
        push(i1, i5, -il);
        push(i1, i1, re(-a2 * nf64 - b2 * loss_up));
        if !top {
            push(i1, i1 + 6, re(a2 * (nf64 + 1.0)));
        }
        if n > 0 {
            push(i1, i1 - 6, re(b2 * nf64));
        }

        // family 2: inversion-weighted populations
        push(i2, i3, -il);
        push(i2, i5, -il);
        push(i2, i1, re(-2.0 * (gp - gm)));
        push(i2, i2, re(-2.0 * (gp + gm) - a2 * nf64 - b2 * loss_up));
        if !top {
            push(i2, i2 + 6, re(a2 * (nf64 + 1.0)));
        }
        if n > 0 {
            push(i2, i2 - 6, re(b2 * nf64));
        }

        // families 3/4: lower coherence pair, detuning β(2n−1) − δ
        let det_lo = Complex64::new(0.0, -(beta * (2.0 * nf64 - 1.0) - delta));
        let diag_lo = re(-big_gamma
            - ka_g * (2.0 * nf64 - 1.0)
            - ka_l * if top { nf64 } else { 2.0 * nf64 + 1.0 });

        push(i3, i1, il * nf64);
        push(i3, i2, -il * nf64);
        if n > 0 {
            push(i3, i1 - 6, -il * nf64);
            push(i3, i2 - 6, -il * nf64);
        }
        push(i3, i4, det_lo);
        push(i3, i3, diag_lo);
        if !top {
            push(i3, i3 + 6, re(2.0 * ka_g * (nf64 + 1.0)));
        }
        push(i3, i5, re(-2.0 * ka_g));
        if n > 0 {
            push(i3, i3 - 6, re(2.0 * ka_l * nf64));
        }

        push(i4, i3, det_lo);
        push(i4, i4, diag_lo);
        if !top {
            push(i4, i4 + 6, re(2.0 * ka_g * (nf64 + 1.0)));
        }
        push(i4, i6, re(-2.0 * ka_g));
        if n > 0 {
            push(i4, i4 - 6, re(2.0 * ka_l * nf64));
        }

        // families 5/6: upper coherence pair, detuning β(2n+1) − δ.
        // The top-level pair has no content inside the truncated ladder;
        // pure decay pins it to zero and keeps the kernel one-dimensional.
        if top {
            push(i5, i5, re(-big_gamma));
            push(i6, i6, re(-big_gamma));
            continue;
        }
        let det_hi = Complex64::new(0.0, -(beta * (2.0 * nf64 + 1.0) - delta));
        let diag_hi = re(-big_gamma
            - ka_g * (2.0 * nf64 + 1.0)
            - ka_l * if n + 1 == n_max { nf64 + 1.0 } else { 2.0 * nf64 + 3.0 });

        push(i5, i1, -il * (nf64 + 1.0));
        push(i5, i2, -il * (nf64 + 1.0));
        push(i5, i1 + 6, il * (nf64 + 1.0));
        push(i5, i2 + 6, -il * (nf64 + 1.0));
        push(i5, i6, det_hi);
        push(i5, i5, diag_hi);
        push(i5, i5 + 6, re(2.0 * ka_g * (nf64 + 1.0)));
        if n > 0 {
            push(i5, i5 - 6, re(2.0 * ka_l * nf64));
        }
        push(i5, i3, re(2.0 * ka_l));

        push(i6, i5, det_hi);
        push(i6, i6, diag_hi);
        push(i6, i6 + 6, re(2.0 * ka_g * (nf64 + 1.0)));
        if n > 0 {
            push(i6, i6 - 6, re(2.0 * ka_l * nf64));
        }
        push(i6, i4, re(2.0 * ka_l));
    }

    SparseGenerator {
        n_max,
        dim,
        triplets: t,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolveMethod {
    /// Banded LU factorization (always available, deterministic).
    #[default]
    Direct,
    /// Jacobi-scaled BiCGSTAB; falls back with an error when it stalls.
    Iterative,
}

/// Steady state of the generator: G·P = 0 with Σ_n P_n^(1) = 1.
///
/// The singular system is closed by replacing the redundant family-1 row at
/// n = N with the trace row; the replaced system is factored in bordered
/// form (banded core + trace border) so the band structure is preserved.
pub fn solve_steady_state(gen: &SparseGenerator) -> Result<HierarchyState, HierarchyError> {
    solve_steady_state_with(gen, SolveMethod::Direct)
}

pub fn solve_steady_state_with(
    gen: &SparseGenerator,
    method: SolveMethod,
) -> Result<HierarchyState, HierarchyError> {
    match method {
        SolveMethod::Direct => solve_direct(gen),
        SolveMethod::Iterative => solve_iterative(gen),
    }
}

fn normalize_by_trace(
    gen: &SparseGenerator,
    mut p: Vec<Complex64>,
) -> Result<HierarchyState, HierarchyError> {
    let tr: Complex64 = (0..=gen.n_max).map(|n| p[6 * n]).sum();
    let pmax = p.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if !tr.is_finite() || tr.norm() < 1e-10 * pmax {
        return Err(HierarchyError::SingularSystem {
            condition: tr.norm(),
        });
    }
    for v in p.iter_mut() {
        *v /= tr;
    }
    Ok(HierarchyState {
        n_max: gen.n_max,
        p,
    })
}

fn solve_direct(gen: &SparseGenerator) -> Result<HierarchyState, HierarchyError> {
    let scale = gen.norm_inf().max(f64::MIN_POSITIVE);
    match solve_bordered(gen) {
        Ok(state) => {
            if gen.residual_inf(&state.p) <= 1e-8 * scale {
                return Ok(state);
            }
            // A large defect on the replaced row means the generator has no
            // kernel near this vector — an ill-conditioned border, or a
            // generator that is not trace-preserving in the first place.
            // Prefer a true kernel vector when one exists; otherwise hand
            // back the row-replaced solution with its honest residual.
            Ok(solve_kernel(gen, scale).unwrap_or(state))
        }
        // Structurally singular reduced blocks (e.g. an unreferenced corner
        // variable at g = 0, n̄ = 0) land here; kernel extraction on the
        // full generator handles them.
        Err(_) => solve_kernel(gen, scale),
    }
}

/// Bordered factorization of the row-replaced system: unknown P_N^(1) and the
/// trace row form the border, everything else stays inside the band.
fn solve_bordered(gen: &SparseGenerator) -> Result<HierarchyState, HierarchyError> {
    let dim = gen.dim;
    let r = 6 * gen.n_max; // replaced row and border column
    let m = dim - 1;
    let map = |k: usize| if k < r { k } else { k - 1 };

    let mut a = Banded::new(m, KL, KU);
    let mut border = vec![Complex64::ZERO; m];
    for &(i, j, v) in gen.entries() {
        let (i, j) = (i as usize, j as usize);
        if i == r {
            continue;
        }
        if j == r {
            border[map(i)] += v;
        } else {
            a.add(map(i), map(j), v);
        }
    }
    let lu = a.factor().map_err(|e| match e {
        LinalgError::Singular { condition, .. } => HierarchyError::SingularSystem { condition },
        _ => unreachable!("banded factor returns only Singular"),
    })?;
    let mut z = border;
    lu.solve_in_place(&mut z);

    // Schur complement of the trace row: s = 1 − Σ_{n<N} z[6n]
    let mut s = Complex64::new(1.0, 0.0);
    for n in 0..gen.n_max {
        s -= z[6 * n];
    }
    if s.norm() < 1e-13 {
        return Err(HierarchyError::SingularSystem { condition: s.norm() });
    }
    let x2 = Complex64::new(1.0, 0.0) / s;
    let mut p = vec![Complex64::ZERO; dim];
    p[r] = x2;
    for k in 0..dim {
        if k != r {
            p[k] = -z[map(k)] * x2;
        }
    }
    normalize_by_trace(gen, p)
}

/// Inverse iteration on the full banded generator with pivot flooring —
/// the rescue path when the bordered reduction is itself singular.
fn solve_kernel(gen: &SparseGenerator, scale: f64) -> Result<HierarchyState, HierarchyError> {
    let dim = gen.dim;
    let mut a = Banded::new(dim, KL, KU);
    for &(i, j, v) in gen.entries() {
        a.add(i as usize, j as usize, v);
    }
    let lu = a
        .factor_floored(1e-14 * scale)
        .map_err(|e| match e {
            LinalgError::Singular { condition, .. } => HierarchyError::SingularSystem { condition },
            _ => unreachable!(),
        })?;
    let mut x: Vec<Complex64> = (0..dim)
        .map(|k| Complex64::new(1.0 / (k + 1) as f64, 0.0))
        .collect();
    let mut best = f64::INFINITY;
    for _ in 0..6 {
        lu.solve_in_place(&mut x);
        let nrm = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if !nrm.is_finite() || nrm == 0.0 {
            return Err(HierarchyError::SingularSystem { condition: lu.pivot_ratio });
        }
        for v in x.iter_mut() {
            *v /= nrm;
        }
        let resid = gen.residual_inf(&x);
        if resid >= best {
            break; // converged to rounding level
        }
        best = resid;
        if resid < 1e-13 * scale {
            break;
        }
    }
    if best > 1e-8 * scale {
        return Err(HierarchyError::SingularSystem {
            condition: lu.pivot_ratio,
        });
    }
    normalize_by_trace(gen, x)
}

/// Right-preconditioned BiCGSTAB on the row-replaced system. The
/// preconditioner is the system's own band — the trace row truncated to its
/// two in-band entries — so the Krylov iteration only has to absorb the
/// out-of-band remainder of one row.
fn solve_iterative(gen: &SparseGenerator) -> Result<HierarchyState, HierarchyError> {
    let dim = gen.dim;
    let r = 6 * gen.n_max;
    let one = Complex64::new(1.0, 0.0);
    let mut trips: Vec<(u32, u32, Complex64)> = gen
        .entries()
        .iter()
        .filter(|&&(i, _, _)| i as usize != r)
        .copied()
        .collect();
    for n in 0..=gen.n_max {
        trips.push((r as u32, (6 * n) as u32, one));
    }
    let a = Csr::from_triplets(dim, &trips);

    let scale = gen.norm_inf().max(f64::MIN_POSITIVE);
    let mut band = Banded::new(dim, KL, KU);
    for &(i, j, v) in gen.entries() {
        if i as usize != r {
            band.add(i as usize, j as usize, v);
        }
    }
    band.add(r, r, one);
    band.add(r, r - 6, one);
    let mlu = band
        .factor_floored(1e-14 * scale)
        .expect("floored factorization cannot fail");

    let op = |x: &[Complex64], out: &mut [Complex64]| {
        let mut w = x.to_vec();
        mlu.solve_in_place(&mut w);
        a.matvec(&w, out);
    };
    let mut rhs = vec![Complex64::ZERO; dim];
    rhs[r] = one;
    let (y, _) = bicgstab(op, &rhs, 1e-12, 400).map_err(|e| match e {
        LinalgError::Stalled {
            iterations,
            residual,
        } => HierarchyError::IterativeStalled {
            iterations,
            residual,
        },
        _ => unreachable!("bicgstab returns only Stalled"),
    })?;
    let mut x = y;
    mlu.solve_in_place(&mut x);
    normalize_by_trace(gen, x)
}

/// Steady-state observables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observables {
    pub n_mean: f64,
    pub g2: f64,
    pub n_max_used: usize,
    pub residual: f64,
}

/// Mean phonon number and g²(0) of a normalized state:
/// ⟨n⟩ = Σ n·P_n^(1), g²(0) = Σ n(n−1)·P_n^(1) / ⟨n⟩².
pub fn statistics(state: &HierarchyState) -> Result<(f64, f64), HierarchyError> {
    let mut n_mean = 0.0;
    let mut fac = 0.0;
    for n in 0..=state.n_max {
        let p = state.population(n);
        let nf = n as f64;
        n_mean += nf * p;
        fac += nf * (nf - 1.0) * p;
    }
    if n_mean < 1e-12 {
        return Err(HierarchyError::ZeroMeanPhonon { n_mean });
    }
    Ok((n_mean, fac / (n_mean * n_mean)))
}

/// Full observable record for a solved state, with the steady-state defect
/// ‖G·P‖∞ recomputed against `gen`.
pub fn observables(
    state: &HierarchyState,
    gen: &SparseGenerator,
) -> Result<Observables, HierarchyError> {
    let (n_mean, g2) = statistics(state)?;
    Ok(Observables {
        n_mean,
        g2,
        n_max_used: state.n_max,
        residual: gen.residual_inf(&state.p),
    })
}

pub const DEFAULT_TRUNCATION_CAP: usize = 4096;

/// Doubles the truncation from `n_start` until ⟨n⟩ and g²(0) are stable to
/// relative `tol` between consecutive sizes and the upper half of the
/// population distribution carries less than `tol` of the total weight.
pub fn auto_truncate(
    frame: &DressedFrame,
    params: &SystemParams,
    tol: f64,
    n_start: usize,
) -> Result<(HierarchyState, Observables), HierarchyError> {
    auto_truncate_with(
        frame,
        params,
        tol,
        n_start,
        DEFAULT_TRUNCATION_CAP,
        SolveMethod::Direct,
    )
}

pub fn auto_truncate_with(
    frame: &DressedFrame,
    params: &SystemParams,
    tol: f64,
    n_start: usize,
    n_cap: usize,
    method: SolveMethod,
) -> Result<(HierarchyState, Observables), HierarchyError> {
    assert!(tol > 0.0, "tolerance must be positive");
    let mut n = n_start.max(1);
    let mut prev: Option<(f64, f64)> = None;
    loop {
        if n > n_cap {
            return Err(HierarchyError::TruncationDiverged { n_cap });
        }
        let gen = assemble_generator(frame, params, n);
        let state = solve_steady_state_with(&gen, method)?;
        let (n_mean, g2) = statistics(&state)?;
        let tail: f64 = (n / 2 + 1..=n).map(|k| state.population(k)).sum();
        if let Some((pn, pg)) = prev {
            let dn = (n_mean - pn).abs() / n_mean;
            let dg = (g2 - pg).abs() / g2.abs().max(1e-12);
            if dn < tol && dg < tol && tail < tol {
                let obs = Observables {
                    n_mean,
                    g2,
                    n_max_used: n,
                    residual: gen.residual_inf(&state.p),
                };
                return Ok((state, obs));
            }
        }
        prev = Some((n_mean, g2));
        n *= 2;
    }
}
