//! Numerical kernels: banded and dense complex LU with partial pivoting, a
//! Jacobi-scaled BiCGSTAB, and an adaptive Dormand–Prince integrator.
//!
//! Nothing here knows about the physics; dimensions are small enough
//! (≤ a few 10⁴ for the banded path, ≤ 4096 dense) that straightforward
//! unblocked factorizations are adequate.

use num_complex::Complex64 as C64;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LinalgError {
    /// Zero (or sub-threshold) pivot at `col`; `condition` is the
    /// min/max pivot-magnitude ratio seen up to that point.
    Singular { col: usize, condition: f64 },
    /// Iterative solve did not reach the target residual.
    Stalled { iterations: usize, residual: f64 },
    /// Adaptive step size underflowed at time `t`.
    StepUnderflow { t: f64 },
}

// ---------------------------------------------------------------------------
// banded LU
// ---------------------------------------------------------------------------

/// General banded matrix with `kl` sub- and `ku` super-diagonals, stored
/// column-major with `kl` extra rows of fill space so rows can be pivoted in
/// place (band storage: entry (i, j) lives at `[kl + ku + i − j, j]`).
pub(crate) struct Banded {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<C64>,
}

impl Banded {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        Banded {
            n,
            kl,
            ku,
            ldab,
            ab: vec![C64::ZERO; ldab * n],
        }
    }

    #[inline]
    fn at(&mut self, i: usize, j: usize) -> &mut C64 {
        debug_assert!(j <= i + self.ku && i <= j + self.kl, "outside declared band");
        &mut self.ab[j * self.ldab + (self.kl + self.ku + i - j)]
    }

    /// Accumulates `v` into entry (i, j). The entry must lie within the
    /// declared band.
    pub fn add(&mut self, i: usize, j: usize, v: C64) {
        *self.at(i, j) += v;
    }

    /// In-place LU with row partial pivoting. Fill widens the upper band to
    /// `kl + ku`, which the storage already accommodates.
    pub fn factor(self) -> Result<BandedLu, LinalgError> {
        self.factor_impl(None)
    }

    /// LU with sub-threshold pivots replaced by `floor` (phase kept) instead
    /// of failing — turns the factorization into an inverse-iteration engine
    /// for (near-)singular banded matrices.
    pub fn factor_floored(self, floor: f64) -> Result<BandedLu, LinalgError> {
        self.factor_impl(Some(floor))
    }

    fn factor_impl(mut self, floor: Option<f64>) -> Result<BandedLu, LinalgError> {
        let (n, kl, ku, ldab) = (self.n, self.kl, self.ku, self.ldab);
        let kv = kl + ku; // upper bandwidth after fill
        let mut ipiv = vec![0usize; n];
        let mut min_piv = f64::INFINITY;
        let mut max_piv = 0.0f64;
        for j in 0..n {
            let row_end = (j + kl).min(n - 1);
            let mut p = j;
            let mut best = self.ab[j * ldab + kl + ku].norm_sqr();
            for i in (j + 1)..=row_end {
                let m = self.ab[j * ldab + kl + ku + i - j].norm_sqr();
                if m > best {
                    best = m;
                    p = i;
                }
            }
            ipiv[j] = p;
            let col_end = (j + kv).min(n - 1);
            if p != j {
                for k in j..=col_end {
                    let a = k * ldab + kl + ku + j - k;
                    let b = k * ldab + kl + ku + p - k;
                    self.ab.swap(a, b);
                }
            }
            let mut d = self.ab[j * ldab + kl + ku];
            let dm = d.norm();
            min_piv = min_piv.min(dm);
            max_piv = max_piv.max(dm);
            if let Some(f) = floor {
                if dm < f {
                    d = if dm == 0.0 { C64::new(f, 0.0) } else { d * (f / dm) };
                    self.ab[j * ldab + kl + ku] = d;
                }
            } else if dm == 0.0 {
                return Err(LinalgError::Singular {
                    col: j,
                    condition: 0.0,
                });
            }
            for i in (j + 1)..=row_end {
                let li = j * ldab + kl + ku + i - j;
                let m = self.ab[li] / d;
                self.ab[li] = m;
                if m != C64::ZERO {
                    for k in (j + 1)..=col_end {
                        let pivot_row = self.ab[k * ldab + kl + ku + j - k];
                        if pivot_row != C64::ZERO {
                            self.ab[k * ldab + kl + ku + i - k] -= m * pivot_row;
                        }
                    }
                }
            }
        }
        Ok(BandedLu {
            n,
            kl,
            ku,
            ldab,
            ab: self.ab,
            ipiv,
            pivot_ratio: if max_piv > 0.0 { min_piv / max_piv } else { 0.0 },
        })
    }
}

pub(crate) struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<C64>,
    ipiv: Vec<usize>,
    /// min/max pivot magnitude — a cheap reciprocal-conditioning indicator.
    pub pivot_ratio: f64,
}

impl BandedLu {
    pub fn solve_in_place(&self, b: &mut [C64]) {
        assert_eq!(b.len(), self.n);
        let (n, kl, ldab) = (self.n, self.kl, self.ldab);
        let kv = self.kl + self.ku;
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let bj = b[j];
            if bj != C64::ZERO {
                let row_end = (j + kl).min(n - 1);
                for i in (j + 1)..=row_end {
                    b[i] -= self.ab[j * ldab + kl + self.ku + i - j] * bj;
                }
            }
        }
        for j in (0..n).rev() {
            b[j] /= self.ab[j * ldab + kl + self.ku];
            let bj = b[j];
            if bj != C64::ZERO {
                let i0 = j.saturating_sub(kv);
                for i in i0..j {
                    b[i] -= self.ab[j * ldab + kl + self.ku + i - j] * bj;
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// dense LU
// ---------------------------------------------------------------------------

/// Dense column-major LU with partial pivoting.
///
/// With `floor = Some(f)`, pivots of magnitude below `f` are replaced by `f`
/// (phase kept) instead of failing — the standard device that turns LU into
/// an inverse-iteration engine for singular matrices; `floored` counts the
/// replacements.
pub(crate) struct DenseLu {
    n: usize,
    a: Vec<C64>,
    piv: Vec<usize>,
    #[cfg_attr(not(test), allow(dead_code))]
    pub floored: usize,
}

impl DenseLu {
    pub fn factor(mut a: Vec<C64>, n: usize, floor: Option<f64>) -> Result<Self, LinalgError> {
        assert_eq!(a.len(), n * n);
        let mut piv = vec![0usize; n];
        let mut floored = 0usize;
        for j in 0..n {
            let col = j * n;
            let mut p = j;
            let mut best = a[col + j].norm_sqr();
            for i in (j + 1)..n {
                let m = a[col + i].norm_sqr();
                if m > best {
                    best = m;
                    p = i;
                }
            }
            piv[j] = p;
            if p != j {
                for k in 0..n {
                    a.swap(k * n + j, k * n + p);
                }
            }
            let mut d = a[col + j];
            let dm = d.norm();
            if let Some(f) = floor {
                if dm < f {
                    d = if dm == 0.0 { C64::new(f, 0.0) } else { d * (f / dm) };
                    a[col + j] = d;
                    floored += 1;
                }
            } else if dm == 0.0 {
                return Err(LinalgError::Singular {
                    col: j,
                    condition: 0.0,
                });
            }
            let inv = C64::new(1.0, 0.0) / d;
            for i in (j + 1)..n {
                a[col + i] *= inv;
            }
            for k in (j + 1)..n {
                let c = a[k * n + j];
                if c != C64::ZERO {
                    let (lo, hi) = a.split_at_mut(k * n);
                    let lcol = &lo[col + j + 1..col + n];
                    let rcol = &mut hi[j + 1..n];
                    for (r, l) in rcol.iter_mut().zip(lcol) {
                        *r -= c * *l;
                    }
                }
            }
        }
        Ok(DenseLu { n, a, piv, floored })
    }

    pub fn solve_in_place(&self, b: &mut [C64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        for j in 0..n {
            let p = self.piv[j];
            if p != j {
                b.swap(j, p);
            }
        }
        for j in 0..n {
            let bj = b[j];
            if bj != C64::ZERO {
                let col = &self.a[j * n..(j + 1) * n];
                for i in (j + 1)..n {
                    b[i] -= col[i] * bj;
                }
            }
        }
        for j in (0..n).rev() {
            let col = &self.a[j * n..(j + 1) * n];
            b[j] /= col[j];
            let bj = b[j];
            if bj != C64::ZERO {
                for i in 0..j {
                    b[i] -= col[i] * bj;
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// sparse matvec + BiCGSTAB
// ---------------------------------------------------------------------------

pub(crate) struct Csr {
    indptr: Vec<usize>,
    indices: Vec<u32>,
    data: Vec<C64>,
}

impl Csr {
    /// Builds from unordered triplets; duplicate (row, col) entries are summed.
    pub fn from_triplets(n: usize, triplets: &[(u32, u32, C64)]) -> Self {
        let mut sorted: Vec<(u32, u32, C64)> = triplets.to_vec();
        sorted.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(u32, u32, C64)> = Vec::with_capacity(sorted.len());
        for &(r, c, v) in &sorted {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        let mut indptr = vec![0usize; n + 1];
        for &(r, _, _) in &merged {
            indptr[r as usize + 1] += 1;
        }
        for i in 0..n {
            indptr[i + 1] += indptr[i];
        }
        Csr {
            indptr,
            indices: merged.iter().map(|t| t.1).collect(),
            data: merged.iter().map(|t| t.2).collect(),
        }
    }

    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = C64::ZERO;
            for k in self.indptr[i]..self.indptr[i + 1] {
                acc += self.data[k] * x[self.indices[k] as usize];
            }
            *yi = acc;
        }
    }
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm2(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// BiCGSTAB on a caller-supplied operator; fold any preconditioner into
/// `apply` (right preconditioning keeps the residual meaningful). Returns
/// the solution of apply(x) = b and the true final residual ∞-norm.
pub(crate) fn bicgstab<F>(
    apply: F,
    b: &[C64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<C64>, f64), LinalgError>
where
    F: Fn(&[C64], &mut [C64]),
{
    let n = b.len();
    let bnorm = norm2(b).max(f64::MIN_POSITIVE);
    let mut x = vec![C64::ZERO; n];
    let mut r = b.to_vec();
    let r0 = r.clone();
    let (mut rho, mut alpha, mut omega) = (C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0));
    let mut v = vec![C64::ZERO; n];
    let mut p = vec![C64::ZERO; n];
    let mut s = vec![C64::ZERO; n];
    let mut t = vec![C64::ZERO; n];
    let mut iterations = 0usize;
    for it in 0..max_iter {
        iterations = it + 1;
        let rho_new = dot(&r0, &r);
        if rho_new.norm() < 1e-300 {
            break; // breakdown; fall through to the residual check
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        apply(&p, &mut v);
        let den = dot(&r0, &v);
        if den.norm() < 1e-300 {
            break;
        }
        alpha = rho / den;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm2(&s) / bnorm < tol {
            for i in 0..n {
                x[i] += alpha * p[i];
            }
            break;
        }
        apply(&s, &mut t);
        let tt = dot(&t, &t);
        omega = if tt.norm() > 0.0 { dot(&t, &s) / tt } else { C64::ZERO };
        for i in 0..n {
            x[i] += alpha * p[i] + omega * s[i];
            r[i] = s[i] - omega * t[i];
        }
        if norm2(&r) / bnorm < tol {
            break;
        }
    }
    let mut ax = vec![C64::ZERO; n];
    apply(&x, &mut ax);
    let resid = ax
        .iter()
        .zip(b)
        .map(|(ax, bi)| (ax - bi).norm())
        .fold(0.0f64, f64::max);
    let bmax = b.iter().map(|z| z.norm()).fold(0.0f64, f64::max).max(1e-300);
    if resid / bmax > tol * 100.0 {
        return Err(LinalgError::Stalled {
            iterations,
            residual: resid,
        });
    }
    Ok((x, resid))
}

// ---------------------------------------------------------------------------
// Dormand–Prince 5(4)
// ---------------------------------------------------------------------------

/// Integrates ẏ = f(y) (autonomous) from `t0` to `t1` with the adaptive
/// Dormand–Prince 5(4) pair. `y` is advanced in place. Returns the number of
/// accepted steps.
pub(crate) fn rk45<F>(
    f: F,
    y: &mut Vec<C64>,
    t0: f64,
    t1: f64,
    h0: f64,
    rtol: f64,
    atol: f64,
) -> Result<usize, LinalgError>
where
    F: Fn(&[C64], &mut [C64]),
{
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    // 5th-order weights equal A[5]; error weights are b5 − b4.
    const E: [f64; 7] = [
        35.0 / 384.0 - 5179.0 / 57600.0,
        0.0,
        500.0 / 1113.0 - 7571.0 / 16695.0,
        125.0 / 192.0 - 393.0 / 640.0,
        -2187.0 / 6784.0 + 92097.0 / 339200.0,
        11.0 / 84.0 - 187.0 / 2100.0,
        -1.0 / 40.0,
    ];

    let n = y.len();
    let span = t1 - t0;
    assert!(span > 0.0 && h0 > 0.0);
    let h_min = span * 1e-14;
    let mut h = h0.min(span);
    let mut t = t0;
    let mut k: Vec<Vec<C64>> = (0..7).map(|_| vec![C64::ZERO; n]).collect();
    let mut ytmp = vec![C64::ZERO; n];
    let mut accepted = 0usize;
    f(y, &mut k[0]);
    while t < t1 {
        if h < h_min {
            return Err(LinalgError::StepUnderflow { t });
        }
        let last = h >= t1 - t;
        h = h.min(t1 - t);
        for s in 0..6 {
            for i in 0..n {
                let mut acc = C64::ZERO;
                for (j, kj) in k.iter().enumerate().take(s + 1) {
                    let a = A[s][j];
                    if a != 0.0 {
                        acc += kj[i] * a;
                    }
                }
                ytmp[i] = y[i] + acc * h;
            }
            let (_, tail) = k.split_at_mut(s + 1);
            f(&ytmp, &mut tail[0]);
        }
        // stage 7 evaluation point IS the 5th-order solution (FSAL)
        let mut err = 0.0f64;
        for i in 0..n {
            let mut e = C64::ZERO;
            for (j, kj) in k.iter().enumerate() {
                if E[j] != 0.0 {
                    e += kj[i] * E[j];
                }
            }
            let scale = atol + rtol * ytmp[i].norm().max(y[i].norm());
            err = err.max((e.norm() * h) / scale);
        }
        if err <= 1.0 {
            // guard against the final step landing one ulp short of t1
            t = if last { t1 } else { t + h };
            y.copy_from_slice(&ytmp);
            k.swap(0, 6); // FSAL: last stage becomes first of the next step
            accepted += 1;
        }
        let factor = if err > 0.0 {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h *= factor;
    }
    Ok(accepted)
}
