//! Dense complex matrix helpers shared by the solvers.

use nalgebra::{Cholesky, Complex, DMatrix, DVector, Dyn};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Relative singular-value cutoff used by every pseudo-inverse.
pub const PINV_RCOND: f64 = 1e-12;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// Unit-modulus complex number with the given phase.
#[inline]
pub fn cis(theta: f64) -> C64 {
    Complex::from_polar(1.0, theta)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Hermitian part `(m + m^H) / 2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

pub fn frob_sq(m: &CMat) -> f64 {
    m.norm_squared()
}

/// Largest entrywise modulus.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn trace(m: &CMat) -> C64 {
    m.diagonal().sum()
}

/// `Re Tr(a^H b)` without forming the product.
pub fn re_inner(a: &CMat, b: &CMat) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Moore-Penrose pseudo-inverse; singular values below `PINV_RCOND * s_max` are dropped.
pub fn pinv(m: &CMat) -> CMat {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return CMat::zeros(cols, rows);
    }
    let svd = m.clone().svd(true, true);
    let s_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if s_max == 0.0 || !s_max.is_finite() {
        return CMat::zeros(cols, rows);
    }
    let cutoff = PINV_RCOND * s_max;
    let u = svd.u.as_ref().expect("svd computed with u");
    let v_t = svd.v_t.as_ref().expect("svd computed with v_t");
    let mut out = CMat::zeros(cols, rows);
    for (idx, &s) in svd.singular_values.iter().enumerate() {
        if s <= cutoff {
            continue;
        }
        let inv = 1.0 / s;
        // v_i * inv * u_i^H
        for r in 0..cols {
            let vr = v_t[(idx, r)].conj() * inv;
            for c in 0..rows {
                out[(r, c)] += vr * u[(c, idx)].conj();
            }
        }
    }
    out
}

/// Cholesky factor of the Hermitian part of `m`, `None` unless it is positive definite.
///
/// nalgebra takes complex square roots of negative pivots instead of failing,
/// so every pivot is checked to be real and positive.
pub fn cholesky_hpd(m: &CMat) -> Option<Cholesky<C64, Dyn>> {
    let chol = hermitian_part(m).cholesky()?;
    let l = chol.l_dirty();
    for i in 0..m.nrows() {
        let d = l[(i, i)];
        if !(d.re > 0.0 && d.re.is_finite()) || d.im.abs() > 1e-12 * d.re {
            return None;
        }
    }
    Some(chol)
}

/// Natural-log determinant of a Hermitian positive-definite matrix, `None` when
/// it is not positive definite.
pub fn logdet_hpd(m: &CMat) -> Option<f64> {
    let chol = cholesky_hpd(m)?;
    let l = chol.l_dirty();
    Some(2.0 * (0..m.nrows()).map(|i| l[(i, i)].re.ln()).sum::<f64>())
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

pub fn hermitian_eigen(m: &CMat) -> HermitianEigen {
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    HermitianEigen { values, vectors }
}

/// 2-norm condition number from the singular values.
pub fn condition_number(m: &CMat) -> f64 {
    let s = m.clone().singular_values();
    let max = s.iter().cloned().fold(0.0, f64::max);
    let min = s.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// True when `m` is Hermitian and PSD up to `tol` (scaled by the diagonal magnitude).
pub fn is_hermitian_psd(m: &CMat, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = 1.0 + m.diagonal().iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));
    if max_abs(&(m - m.adjoint())) > tol * scale {
        return false;
    }
    let shifted = hermitian_part(m) + CMat::identity(m.nrows(), m.ncols()).scale(tol * scale);
    cholesky_hpd(&shifted).is_some()
}

/// Relative Frobenius distance `||a - b|| / max(||b||, tiny)`.
pub fn rel_frob_diff(a: &CMat, b: &CMat) -> f64 {
    let denom = b.norm().max(1e-300);
    (a - b).norm() / denom
}

/// Eigen-structure of `shift * I + L G L^H` where `L` is tall (`n x r`, `r` small)
/// and `G` is Hermitian. Holds `r' = min(n, r)` explicit eigenpairs; every
/// direction orthogonal to `basis` has eigenvalue `shift`.
#[derive(Clone, Debug)]
pub struct LowRankShift {
    pub shift: f64,
    /// Orthonormal `n x r'` basis of the low-rank range.
    pub basis: CMat,
    /// Eigenvalues of the full matrix along each `basis` column.
    pub values: Vec<f64>,
}

impl LowRankShift {
    /// Builds the decomposition from `factors[j]` (each `n x d_j`) and Hermitian
    /// middles `middles[j]` (each `d_j x d_j`): `shift I + sum_j F_j M_j F_j^H`.
    pub fn new(n: usize, shift: f64, factors: &[CMat], middles: &[CMat]) -> Self {
        assert_eq!(factors.len(), middles.len());
        let r: usize = factors.iter().map(|f| f.ncols()).sum();
        if r == 0 || n == 0 {
            return Self { shift, basis: CMat::zeros(n, 0), values: Vec::new() };
        }
        let mut stacked = CMat::zeros(n, r);
        let mut middle = CMat::zeros(r, r);
        let mut off = 0;
        for (f, g) in factors.iter().zip(middles) {
            let d = f.ncols();
            stacked.view_mut((0, off), (n, d)).copy_from(f);
            middle.view_mut((off, off), (d, d)).copy_from(g);
            off += d;
        }
        let qr = stacked.qr();
        let q = qr.q();
        let rr = qr.r();
        let core = &rr * &middle * rr.adjoint();
        let eig = hermitian_eigen(&core);
        let basis = &q * &eig.vectors;
        let values = eig.values.iter().map(|v| v + shift).collect();
        Self { shift, basis, values }
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Dense reconstruction, for tests and diagnostics.
    pub fn to_dense(&self) -> CMat {
        let n = self.dim();
        let mut out = CMat::identity(n, n).scale(self.shift);
        for (i, &v) in self.values.iter().enumerate() {
            let col = self.basis.column(i);
            out += (&col * col.adjoint()).scale(v - self.shift);
        }
        out
    }
}
