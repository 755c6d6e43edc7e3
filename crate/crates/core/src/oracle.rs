//! Independent cross-check solver: the full master equation of the dressed
//! emitter ⊗ truncated phonon mode, built as a dense superoperator and solved
//! without any of the structure the six-family hierarchy exploits. Agreement
//! between the two paths validates both.
//!
//! Basis and conventions: joint kets are indexed `q·(N+1) + n` with `q = 0`
//! the upper dressed emitter state; density matrices are vectorized
//! column-stacked, `vec(ρ)[j·D + i] = ρ_ij`, which is exactly the column-major
//! layout the dense matrix type stores.

use crate::hierarchy::HierarchyState;
use crate::linalg::{rk45, DenseLu, LinalgError};
use crate::model::{DressedFrame, SystemParams};
use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

/// Largest joint Hilbert dimension the dense path accepts (the superoperator
/// is D² × D²; beyond this the build is a mistake, not a computation).
pub const DIM_CAP: usize = 64;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("joint dimension {dim} exceeds the dense-solver cap {cap}")]
    DimensionOverflow { dim: usize, cap: usize },
    #[error("steady state is not unique (relative spectral gap {gap:.3e})")]
    DegenerateKernel { gap: f64 },
    #[error("time integration step underflowed at t = {t:.6e}")]
    IntegratorFailure { t: f64 },
    #[error("kernel extraction stalled at residual {residual:.3e}")]
    KernelNotConverged { residual: f64 },
}

/// Operators on the joint space, tagged by what they are.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    RPlus,
    RMinus,
    RPp,
    RMm,
    RZ,
    B,
    BDagger,
    Hamiltonian,
}

#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub label: Label,
    pub m: DMatrix<Complex64>,
}

/// Builds the emitter/mode algebra on the joint space at truncation `n_max`.
/// The Hamiltonian depends on frame and parameters; use [`hamiltonian`].
pub fn operator(label: Label, n_max: usize) -> OperatorMatrix {
    let nf = n_max + 1;
    let d = 2 * nf;
    let one = Complex64::new(1.0, 0.0);
    let mut m = DMatrix::<Complex64>::zeros(d, d);
    match label {
        Label::RPlus => {
            for n in 0..nf {
                m[(n, nf + n)] = one;
            }
        }
        Label::RMinus => {
            for n in 0..nf {
                m[(nf + n, n)] = one;
            }
        }
        Label::RPp => {
            for n in 0..nf {
                m[(n, n)] = one;
            }
        }
        Label::RMm => {
            for n in 0..nf {
                m[(nf + n, nf + n)] = one;
            }
        }
        Label::RZ => {
            for n in 0..nf {
                m[(n, n)] = one;
                m[(nf + n, nf + n)] = -one;
            }
        }
        Label::B => {
            for q in 0..2 {
                for n in 1..nf {
                    m[(q * nf + n - 1, q * nf + n)] = Complex64::new((n as f64).sqrt(), 0.0);
                }
            }
        }
        Label::BDagger => {
            for q in 0..2 {
                for n in 1..nf {
                    m[(q * nf + n, q * nf + n - 1)] = Complex64::new((n as f64).sqrt(), 0.0);
                }
            }
        }
        Label::Hamiltonian => panic!("the Hamiltonian needs frame and parameters; call hamiltonian()"),
    }
    OperatorMatrix { label, m }
}

/// Dressed-frame Hamiltonian: mode detuning (ω_ph − 2Ω̄)·b†b, emitter
/// splitting −Δ̄·R_z, the number-dependent shift β·R_z·b†b, and the
/// co-rotating exchange −λ(B†R⁻ + R⁺B) with λ = g·sin(2θ)/2.
pub fn hamiltonian(frame: &DressedFrame, params: &SystemParams, n_max: usize) -> OperatorMatrix {
    let nf = n_max + 1;
    let d = 2 * nf;
    let det = params.omega_ph - 2.0 * frame.omega_bar;
    let lam = 0.5 * params.g * frame.sin_2theta();
    let mut m = DMatrix::<Complex64>::zeros(d, d);
    for (q, sign) in [(0usize, 1.0f64), (1, -1.0)] {
        for n in 0..nf {
            let e = det * n as f64 + sign * (-frame.delta_bar + frame.beta * n as f64);
            m[(q * nf + n, q * nf + n)] = Complex64::new(e, 0.0);
        }
    }
    for n in 0..nf - 1 {
        let c = Complex64::new(-lam * ((n + 1) as f64).sqrt(), 0.0);
        m[(nf + n + 1, n)] = c;
        m[(n, nf + n + 1)] = c;
    }
    OperatorMatrix {
        label: Label::Hamiltonian,
        m,
    }
}

/// Dense generator of ρ̇ = L(ρ) acting on column-stacked density matrices.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    pub n_max: usize,
    /// Joint Hilbert dimension D = 2(n_max + 1); `m` is D² × D².
    pub dim: usize,
    pub m: DMatrix<Complex64>,
}

pub fn build_liouvillian(
    frame: &DressedFrame,
    params: &SystemParams,
    n_max: usize,
) -> Result<Liouvillian, OracleError> {
    build_liouvillian_capped(frame, params, n_max, DIM_CAP)
}

pub fn build_liouvillian_capped(
    frame: &DressedFrame,
    params: &SystemParams,
    n_max: usize,
    cap: usize,
) -> Result<Liouvillian, OracleError> {
    let d = 2 * (n_max + 1);
    if d > cap {
        return Err(OracleError::DimensionOverflow { dim: d, cap });
    }
    let eye = DMatrix::<Complex64>::identity(d, d);
    let lmul = |a: &DMatrix<Complex64>| eye.kronecker(a); // ρ ↦ Aρ
    let rmul = |a: &DMatrix<Complex64>| a.transpose().kronecker(&eye); // ρ ↦ ρA

    let h = hamiltonian(frame, params, n_max).m;
    let mut m = (lmul(&h) - rmul(&h)) * Complex64::new(0.0, -1.0);

    let channels = [
        (2.0 * frame.gamma_plus, Label::RMinus),
        (2.0 * frame.gamma_minus, Label::RPlus),
        (2.0 * frame.gamma_zero, Label::RZ),
        (2.0 * params.kappa * (1.0 + params.nbar), Label::B),
        (2.0 * params.kappa * params.nbar, Label::BDagger),
    ];
    for (rate, lab) in channels {
        if rate == 0.0 {
            continue;
        }
        let c = operator(lab, n_max).m;
        let cdc = c.adjoint() * &c;
        let term = c.conjugate().kronecker(&c) - (lmul(&cdc) + rmul(&cdc)) * Complex64::new(0.5, 0.0);
        m += term * Complex64::new(rate, 0.0);
    }
    Ok(Liouvillian { n_max, dim: d, m })
}

/// Density matrix on the joint space.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub n_max: usize,
    pub rho: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    /// max |ρ_ij − conj(ρ_ji)|
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.rho.nrows();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                worst = worst.max((self.rho[(i, j)] - self.rho[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitized matrix; ≥ −1e−8 for any state
    /// the solvers hand out.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.rho + self.rho.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigenvalues().min()
    }

    /// ⟨b†b⟩
    pub fn phonon_number(&self) -> f64 {
        let nf = self.n_max + 1;
        (0..nf)
            .map(|n| n as f64 * (self.rho[(n, n)] + self.rho[(nf + n, nf + n)]).re)
            .sum()
    }
}

/// Product state: emitter populations (pop_upper, 1 − pop_upper) ⊗ truncated
/// thermal mode at occupation `nbar`.
pub fn thermal_state(n_max: usize, nbar: f64, pop_upper: f64) -> DensityMatrix {
    let nf = n_max + 1;
    let d = 2 * nf;
    let mut w = vec![0.0f64; nf];
    if nbar <= 0.0 {
        w[0] = 1.0;
    } else {
        let q = nbar / (1.0 + nbar);
        for (n, wn) in w.iter_mut().enumerate() {
            *wn = q.powi(n as i32);
        }
    }
    let z: f64 = w.iter().sum();
    let mut rho = DMatrix::<Complex64>::zeros(d, d);
    for n in 0..nf {
        rho[(n, n)] = Complex64::new(pop_upper * w[n] / z, 0.0);
        rho[(nf + n, nf + n)] = Complex64::new((1.0 - pop_upper) * w[n] / z, 0.0);
    }
    DensityMatrix { n_max, rho }
}

fn apply(m: &DMatrix<Complex64>, x: &[Complex64], out: &mut [Complex64]) {
    let n = m.nrows();
    out.fill(Complex64::ZERO);
    let a = m.as_slice();
    for (j, &c) in x.iter().enumerate() {
        if c != Complex64::ZERO {
            let col = &a[j * n..(j + 1) * n];
            for (o, &v) in out.iter_mut().zip(col) {
                *o += v * c;
            }
        }
    }
}

fn norm_inf(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let a = m.as_slice();
    let mut rows = vec![0.0f64; n];
    for j in 0..n {
        for (r, v) in rows.iter_mut().zip(&a[j * n..(j + 1) * n]) {
            *r += v.norm();
        }
    }
    rows.into_iter().fold(0.0, f64::max)
}

fn l2(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Steady state of the generator by floored-LU inverse iteration, with a
/// deflated second iteration probing kernel uniqueness.
pub fn steady_state_density(l: &Liouvillian) -> Result<DensityMatrix, OracleError> {
    let d = l.dim;
    let d2 = d * d;
    let scale = norm_inf(&l.m).max(f64::MIN_POSITIVE);
    let lu = DenseLu::factor(l.m.as_slice().to_vec(), d2, Some(1e-14 * scale))
        .expect("floored factorization cannot fail");

    let mut x: Vec<Complex64> = (0..d2)
        .map(|k| Complex64::new(1.0 / (k as f64 + 1.0), 0.0))
        .collect();
    let mut tmp = vec![Complex64::ZERO; d2];
    let mut resid = f64::INFINITY;
    for _ in 0..8 {
        lu.solve_in_place(&mut x);
        let nrm = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for v in x.iter_mut() {
            *v /= nrm;
        }
        apply(&l.m, &x, &mut tmp);
        let r = tmp.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let done = r >= resid || r < 1e-13 * scale;
        resid = resid.min(r);
        if done {
            break;
        }
    }
    if !(resid < 1e-10 || resid < 1e-12 * scale) {
        return Err(OracleError::KernelNotConverged { residual: resid });
    }

    // second singular direction: inverse-iterate deflated against the kernel
    let xn = l2(&x);
    let xh: Vec<Complex64> = x.iter().map(|z| z / xn).collect();
    let mut y: Vec<Complex64> = (0..d2)
        .map(|k| {
            Complex64::new(
                ((k * 29 + 13) % 97) as f64 / 97.0 - 0.5,
                ((k * 17 + 5) % 89) as f64 / 89.0 - 0.5,
            )
        })
        .collect();
    let deflate = |y: &mut Vec<Complex64>| {
        let ip: Complex64 = xh.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum();
        for (yi, xi) in y.iter_mut().zip(&xh) {
            *yi -= ip * xi;
        }
    };
    let mut growth = f64::MIN_POSITIVE;
    deflate(&mut y);
    let n0 = l2(&y);
    for v in y.iter_mut() {
        *v /= n0;
    }
    for _ in 0..5 {
        lu.solve_in_place(&mut y);
        deflate(&mut y);
        growth = l2(&y).max(f64::MIN_POSITIVE);
        for v in y.iter_mut() {
            *v /= growth;
        }
    }
    let sigma2 = 1.0 / growth;
    if sigma2 < 1e-6 * scale {
        return Err(OracleError::DegenerateKernel { gap: sigma2 / scale });
    }

    let raw = DMatrix::from_column_slice(d, d, &x);
    let tr = raw.trace();
    if tr.norm() < 1e-6 * raw.norm() {
        // a 1-D kernel always carries unit-trace states; a traceless kernel
        // direction means uniqueness actually failed
        return Err(OracleError::DegenerateKernel { gap: tr.norm() });
    }
    let mut rho = raw * (Complex64::new(1.0, 0.0) / tr);
    rho = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    let tr2 = rho.trace().re;
    rho *= Complex64::new(1.0 / tr2, 0.0);
    Ok(DensityMatrix { n_max: l.n_max, rho })
}

/// Integrates ρ̇ = L(ρ) from `rho0` over `t_final` (initial step `dt`).
pub fn evolve(
    l: &Liouvillian,
    rho0: &DensityMatrix,
    t_final: f64,
    dt: f64,
) -> Result<DensityMatrix, OracleError> {
    assert_eq!(rho0.n_max, l.n_max, "state and generator truncation differ");
    let mut y = rho0.rho.as_slice().to_vec();
    if t_final > 0.0 {
        rk45(
            |y, dy| apply(&l.m, y, dy),
            &mut y,
            0.0,
            t_final,
            dt,
            1e-10,
            1e-12,
        )
        .map_err(|e| match e {
            LinalgError::StepUnderflow { t } => OracleError::IntegratorFailure { t },
            _ => unreachable!("integrator returns only StepUnderflow"),
        })?;
    }
    Ok(DensityMatrix {
        n_max: l.n_max,
        rho: DMatrix::from_column_slice(l.dim, l.dim, &y),
    })
}

/// Projects a joint density matrix onto the six closed families:
/// populations, inversion-weighted populations, and the four phonon-sideband
/// coherence combinations, per Fock level.
pub fn project_to_hierarchy(rho: &DensityMatrix) -> HierarchyState {
    let nf = rho.n_max + 1;
    let r = &rho.rho;
    let mut p = vec![Complex64::ZERO; 6 * nf];
    for n in 0..nf {
        let s = |k: usize| Complex64::new((k as f64).sqrt(), 0.0);
        let pp = r[(n, n)];
        let mm = r[(nf + n, nf + n)];
        p[6 * n] = pp + mm;
        p[6 * n + 1] = pp - mm;
        if n > 0 {
            let up = r[(n - 1, nf + n)]; // ⟨n−1|ρ_{+−}|n⟩
            let dn = r[(nf + n, n - 1)]; // ⟨n|ρ_{−+}|n−1⟩
            p[6 * n + 2] = s(n) * (up - dn);
            p[6 * n + 3] = s(n) * (up + dn);
        }
        if n + 1 < nf {
            let up = r[(n, nf + n + 1)];
            let dn = r[(nf + n + 1, n)];
            p[6 * n + 4] = s(n + 1) * (up - dn);
            p[6 * n + 5] = s(n + 1) * (up + dn);
        }
    }
    HierarchyState {
        n_max: rho.n_max,
        p,
    }
}
