//! Dense complex linear algebra for the small matrices the beamforming schemes
//! work with (dimensions up to a few tens).
//!
//! Vectors are plain `[Complex64]` slices; [`CMatrix`] is a row-major dense
//! matrix. Everything here is a pure function over immutable inputs.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Elementwise tolerance used when checking that an input is Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Reciprocal condition number below which a Gram matrix is treated as singular.
pub const RCOND_FLOOR: f64 = 1e-12;
/// Relative norm below which a power iterate is considered to have vanished.
pub const DEGENERATE_NORM: f64 = 1e-14;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "CMatrix::from_row_major",
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix whose `j`-th column is `columns[j]`.
    pub fn from_columns<V: AsRef<[Complex64]>>(columns: &[V]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, |c| c.as_ref().len());
        let mut m = Self::zeros(rows, cols);
        for (j, column) in columns.iter().enumerate() {
            let column = column.as_ref();
            if column.len() != rows {
                return Err(Error::DimensionMismatch {
                    context: "CMatrix::from_columns",
                    expected: rows,
                    actual: column.len(),
                });
            }
            for (i, &value) in column.iter().enumerate() {
                m[(i, j)] = value;
            }
        }
        Ok(m)
    }

    /// Rank-one matrix `scale * u v^H`.
    pub fn outer(u: &[Complex64], v: &[Complex64], scale: Complex64) -> Self {
        let mut m = Self::zeros(u.len(), v.len());
        for (i, &ui) in u.iter().enumerate() {
            let row = scale * ui;
            for (j, &vj) in v.iter().enumerate() {
                m[(i, j)] = row * vj.conj();
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn matmul(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                context: "CMatrix::matmul",
                expected: self.cols,
                actual: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// `self * x`.
    pub fn mul_vec(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                context: "CMatrix::mul_vec",
                expected: self.cols,
                actual: x.len(),
            });
        }
        Ok(self
            .data
            .chunks_exact(self.cols.max(1))
            .take(self.rows)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `self^H * x`.
    pub fn adjoint_mul_vec(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.rows {
            return Err(Error::DimensionMismatch {
                context: "CMatrix::adjoint_mul_vec",
                expected: self.rows,
                actual: x.len(),
            });
        }
        let mut out = vec![ZERO; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            for (j, o) in out.iter_mut().enumerate() {
                *o += self[(i, j)].conj() * xi;
            }
        }
        Ok(out)
    }

    /// Gram matrix `self^H * self`.
    pub fn gram(&self) -> CMatrix {
        let mut g = Self::zeros(self.cols, self.cols);
        for a in 0..self.cols {
            for b in a..self.cols {
                let v: Complex64 = (0..self.rows)
                    .map(|i| self[(i, a)].conj() * self[(i, b)])
                    .sum();
                g[(a, b)] = v;
                g[(b, a)] = v.conj();
            }
        }
        g
    }

    /// In-place `self += scale * v v^H`.
    pub fn add_outer_hermitian(&mut self, v: &[Complex64], scale: f64) {
        for (i, &vi) in v.iter().enumerate() {
            for (j, &vj) in v.iter().enumerate() {
                self[(i, j)] += vi * vj.conj() * scale;
            }
        }
    }

    pub fn scale(&self, s: Complex64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                context: "CMatrix::add",
                expected: self.rows * self.cols,
                actual: other.rows * other.cols,
            });
        }
        Ok(CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| {
                (i..self.cols).all(|j| (self[(i, j)] - self[(j, i)].conj()).norm() <= tol)
            })
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

// ── vector helpers ──────────────────────────────────────────────────────────

/// Inner product `a^H b`.
pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Returns `v / ||v||`, or `None` when `v` is zero or not finite.
pub fn normalized(v: &[Complex64]) -> Option<Vec<Complex64>> {
    let n = norm(v);
    if n > 0.0 && n.is_finite() {
        Some(v.iter().map(|z| z / n).collect())
    } else {
        None
    }
}

pub fn is_finite(v: &[Complex64]) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Rotates `v` so that its largest-magnitude entry (first one, on near-ties) is
/// real and positive.
pub fn canonicalize_phase(v: &mut [Complex64]) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|z| z.norm() >= max * (1.0 - 1e-9))
        .expect("non-empty vector has a maximal entry");
    let rotation = v[pivot].conj() / v[pivot].norm();
    for z in v.iter_mut() {
        *z *= rotation;
    }
    v[pivot].im = 0.0;
}

/// Phase-insensitive distance `sqrt(1 - |a^H b|^2 / (|a|^2 |b|^2))`.
pub fn angular_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        return 1.0;
    }
    let c = dot(a, b).norm() / (na * nb);
    (1.0 - c * c).max(0.0).sqrt()
}

/// Unit vector drawn uniformly from the complex sphere.
pub fn random_unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        if let Some(u) = normalized(&v) {
            return u;
        }
    }
}

pub fn basis_vector(n: usize, i: usize) -> Vec<Complex64> {
    let mut e = vec![ZERO; n];
    e[i] = ONE;
    e
}

// ── power method ────────────────────────────────────────────────────────────

/// Result of [`principal_eigvec_power`].
#[derive(Debug, Clone, PartialEq)]
pub struct PowerIterate {
    /// Unit-norm, phase-canonicalized estimate of the dominant eigenvector.
    pub vector: Vec<Complex64>,
    /// Set when the iterate vanished and the first basis vector was returned.
    pub degenerate: bool,
}

fn check_hermitian_psd(m: &CMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            context: "square matrix",
            expected: m.rows(),
            actual: m.cols(),
        });
    }
    if !m.is_finite() {
        return Err(Error::NonFinite("matrix"));
    }
    let scale = m.frobenius_norm().max(1.0);
    if !m.is_hermitian(HERMITIAN_TOL * scale) {
        return Err(Error::NotHermitianPsd);
    }
    if (0..m.rows()).any(|i| m[(i, i)].re < -1e-12 * scale) {
        return Err(Error::NotHermitianPsd);
    }
    Ok(())
}

/// Normalizes `m^power * seed`, the power-method estimate of the principal
/// eigenvector of a Hermitian PSD matrix.
///
/// The iterate is rescaled after every multiplication. If it collapses below
/// [`DEGENERATE_NORM`] (relative to `||m||_F^k`), the seed had no component in
/// the range of `m`; the first basis vector is returned with `degenerate` set.
pub fn principal_eigvec_power(m: &CMatrix, seed: &[Complex64], power: usize) -> Result<PowerIterate> {
    check_hermitian_psd(m)?;
    if seed.len() != m.rows() {
        return Err(Error::DimensionMismatch {
            context: "power iteration seed",
            expected: m.rows(),
            actual: seed.len(),
        });
    }
    if !is_finite(seed) {
        return Err(Error::NonFinite("power iteration seed"));
    }
    if power == 0 {
        return Err(Error::InvalidArgument("power must be at least 1".into()));
    }
    let scale = m.frobenius_norm();
    let fallback = || PowerIterate {
        vector: basis_vector(m.rows(), 0),
        degenerate: true,
    };
    let Some(mut x) = normalized(seed) else {
        return Ok(fallback());
    };
    for _ in 0..power {
        let y = m.mul_vec(&x)?;
        let n = norm(&y);
        if scale == 0.0 || n < DEGENERATE_NORM * scale {
            return Ok(fallback());
        }
        x = y.into_iter().map(|z| z / n).collect();
    }
    canonicalize_phase(&mut x);
    Ok(PowerIterate {
        vector: x,
        degenerate: false,
    })
}

/// Rayleigh quotient `x^H m x / x^H x`.
pub fn rayleigh_quotient(m: &CMatrix, x: &[Complex64]) -> Result<f64> {
    let mx = m.mul_vec(x)?;
    Ok(dot(x, &mx).re / dot(x, x).re)
}

// ── Hermitian eigendecomposition ────────────────────────────────────────────

/// Eigenpairs of a Hermitian matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Column `k` is the unit eigenvector for `values[k]`.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    /// Phase-canonicalized eigenvector of the largest eigenvalue.
    pub fn principal_vector(&self) -> Vec<Complex64> {
        let mut v = self.vectors.column(0);
        canonicalize_phase(&mut v);
        v
    }
}

/// Cyclic complex Jacobi eigendecomposition of a Hermitian matrix.
pub fn hermitian_eigen(m: &CMatrix) -> Result<HermitianEigen> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            context: "hermitian_eigen",
            expected: m.rows(),
            actual: m.cols(),
        });
    }
    if !m.is_finite() {
        return Err(Error::NonFinite("hermitian_eigen input"));
    }
    let n = m.rows();
    let fro = m.frobenius_norm();
    if !m.is_hermitian(HERMITIAN_TOL * fro.max(1.0)) {
        return Err(Error::NotHermitianPsd);
    }
    // symmetrize away rounding asymmetry
    let mut a = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
        }
        a[(i, i)].im = 0.0;
    }
    let mut v = CMatrix::identity(n);
    let target = (f64::EPSILON * fro).powi(2);

    for _sweep in 0..64 {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[(p, q)].norm_sqr())
            .sum();
        if off <= target {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                let phase = apq / mag;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // J = diag(1, conj(phase)) * [[c, s], [-s, c]] restricted to (p, q)
                let j_pp = Complex64::new(c, 0.0);
                let j_pq = Complex64::new(s, 0.0);
                let j_qp = -phase.conj() * s;
                let j_qq = phase.conj() * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * j_pp + akq * j_qp;
                    a[(k, q)] = akp * j_pq + akq * j_qq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = j_pp.conj() * apk + j_qp.conj() * aqk;
                    a[(q, k)] = j_pq.conj() * apk + j_qq.conj() * aqk;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)].im = 0.0;
                a[(q, q)].im = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * j_pp + vkq * j_qp;
                    v[(k, q)] = vkp * j_pq + vkq * j_qq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(y, y)].re.total_cmp(&a[(x, x)].re));
    let values = order.iter().map(|&k| a[(k, k)].re).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, dst)] = v[(i, src)];
        }
    }
    Ok(HermitianEigen { values, vectors })
}

/// Exact principal eigenvector of a Hermitian PSD matrix via Jacobi.
pub fn principal_eigvec_exact(m: &CMatrix) -> Result<Vec<Complex64>> {
    check_hermitian_psd(m)?;
    Ok(hermitian_eigen(m)?.principal_vector())
}

// ── linear solves ───────────────────────────────────────────────────────────

/// LU factors with partial pivoting, `P m = L U`.
#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: CMatrix,
    perm: Vec<usize>,
}

impl LuFactors {
    pub fn factor(m: &CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                context: "LU factorization",
                expected: m.rows(),
                actual: m.cols(),
            });
        }
        if !m.is_finite() {
            return Err(Error::NonFinite("LU input"));
        }
        let n = m.rows();
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (pivot_row, pivot_mag) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot_mag == 0.0 {
                return Err(Error::RankDeficient { rcond: 0.0 });
            }
            if pivot_row != k {
                perm.swap(k, pivot_row);
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(pivot_row, j)];
                    lu[(pivot_row, j)] = tmp;
                }
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                for j in (k + 1)..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= factor * u;
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.lu.rows();
        if rhs.len() != n {
            return Err(Error::DimensionMismatch {
                context: "LU solve",
                expected: n,
                actual: rhs.len(),
            });
        }
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| rhs[p]).collect();
        for i in 0..n {
            for k in 0..i {
                let l = self.lu[(i, k)];
                let xk = x[k];
                x[i] -= l * xk;
            }
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let u = self.lu[(i, k)];
                let xk = x[k];
                x[i] -= u * xk;
            }
            x[i] /= self.lu[(i, i)];
        }
        Ok(x)
    }

    pub fn inverse(&self) -> CMatrix {
        let n = self.lu.rows();
        let mut inv = CMatrix::zeros(n, n);
        for j in 0..n {
            let col = self
                .solve(&basis_vector(n, j))
                .expect("basis vector has matching length");
            for (i, z) in col.into_iter().enumerate() {
                inv[(i, j)] = z;
            }
        }
        inv
    }
}

/// Computes `A (A^H A)^{-1} rhs`, the minimum-norm `x` with `A^H x = rhs`.
///
/// Works from a thin QR factorization `A = QR` (Gram-Schmidt with one
/// reorthogonalization pass), so `x = Q R^{-H} rhs` and the normal equations
/// are never formed. Fails with [`Error::RankDeficient`] when `A` has more
/// columns than rows or when the 1-norm reciprocal condition of `R` (equal to
/// that of `A` up to the norm used) is below [`RCOND_FLOOR`].
pub fn gram_right_pseudo_apply(a: &CMatrix, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
    if rhs.len() != a.cols() {
        return Err(Error::DimensionMismatch {
            context: "right pseudo-inverse rhs",
            expected: a.cols(),
            actual: rhs.len(),
        });
    }
    if !a.is_finite() || !is_finite(rhs) {
        return Err(Error::NonFinite("right pseudo-inverse input"));
    }
    if a.cols() > a.rows() {
        return Err(Error::RankDeficient { rcond: 0.0 });
    }
    let m = a.cols();
    let (q, r) = thin_qr(a);
    let rcond = triangular_rcond(&r);
    if !(rcond >= RCOND_FLOOR) {
        return Err(Error::RankDeficient {
            rcond: if rcond.is_finite() { rcond } else { 0.0 },
        });
    }
    // R^H y = rhs, forward substitution on the lower-triangular R^H.
    let mut y = vec![Complex64::new(0.0, 0.0); m];
    for i in 0..m {
        let mut acc = rhs[i];
        for k in 0..i {
            acc -= r[(k, i)].conj() * y[k];
        }
        y[i] = acc / r[(i, i)].conj();
    }
    let mut x = vec![Complex64::new(0.0, 0.0); a.rows()];
    for (k, qk) in q.iter().enumerate() {
        for (xi, qi) in x.iter_mut().zip(qk) {
            *xi += qi * y[k];
        }
    }
    Ok(x)
}

fn thin_qr(a: &CMatrix) -> (Vec<Vec<Complex64>>, CMatrix) {
    let m = a.cols();
    let mut q: Vec<Vec<Complex64>> = Vec::with_capacity(m);
    let mut r = CMatrix::zeros(m, m);
    for j in 0..m {
        let mut v = a.column(j);
        for _ in 0..2 {
            for (k, qk) in q.iter().enumerate() {
                let c = dot(qk, &v);
                r.data[k * m + j] += c;
                for (vi, qi) in v.iter_mut().zip(qk) {
                    *vi -= qi * c;
                }
            }
        }
        let nv = norm(&v);
        r.data[j * m + j] = Complex64::new(nv, 0.0);
        if nv > 0.0 {
            v.iter_mut().for_each(|z| *z /= nv);
        }
        q.push(v);
    }
    (q, r)
}

/// `1 / (||R||_1 ||R^{-1}||_1)` for upper-triangular `R`, zero when singular.
fn triangular_rcond(r: &CMatrix) -> f64 {
    let m = r.rows();
    if (0..m).any(|i| r[(i, i)].norm() == 0.0) {
        return 0.0;
    }
    let mut inv = CMatrix::zeros(m, m);
    for j in 0..m {
        inv.data[j * m + j] = r[(j, j)].inv();
        for i in (0..j).rev() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in (i + 1)..=j {
                acc += r[(i, k)] * inv[(k, j)];
            }
            inv.data[i * m + j] = -acc / r[(i, i)];
        }
    }
    1.0 / (r.norm_one() * inv.norm_one())
}

/// Ratio of largest to smallest singular value of `columns`, from the
/// eigenvalues of its Gram matrix. Returns `f64::INFINITY` when the matrix is
/// rank deficient (more columns than rows, or an eigenvalue ratio below
/// [`RCOND_FLOOR`]).
pub fn condition_ratio(columns: &CMatrix) -> f64 {
    if columns.cols() == 0 || columns.cols() > columns.rows() || !columns.is_finite() {
        return f64::INFINITY;
    }
    let Ok(eig) = hermitian_eigen(&columns.gram()) else {
        return f64::INFINITY;
    };
    let max = eig.values[0];
    let min = *eig.values.last().expect("non-empty spectrum");
    if max <= 0.0 || min <= RCOND_FLOOR * max {
        return f64::INFINITY;
    }
    (max / min).sqrt()
}

/// Solves `m x = rhs` for Hermitian positive definite `m` by Cholesky.
pub fn cholesky_solve(m: &CMatrix, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
    cholesky_solve_banded(m, m.rows().saturating_sub(1), rhs)
}

/// Cholesky solve for Hermitian positive definite `m` whose entries vanish
/// more than `bandwidth` places off the diagonal. Entries outside the band
/// are never read.
pub fn cholesky_solve_banded(m: &CMatrix, bandwidth: usize, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = m.rows();
    if !m.is_square() || rhs.len() != n {
        return Err(Error::DimensionMismatch {
            context: "Cholesky solve",
            expected: n,
            actual: rhs.len(),
        });
    }
    let lo = |i: usize| i.saturating_sub(bandwidth);
    // lower factor, row-major
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)].re;
        for k in lo(j)..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) {
            return Err(Error::NotHermitianPsd);
        }
        let d = d.sqrt();
        l[(j, j)] = Complex64::new(d, 0.0);
        for i in (j + 1)..n.min(j + bandwidth + 1) {
            let mut s = m[(i, j)];
            for k in lo(i)..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / d;
        }
    }
    let mut y = rhs.to_vec();
    for i in 0..n {
        for k in lo(i)..i {
            let lik = l[(i, k)];
            let yk = y[k];
            y[i] -= lik * yk;
        }
        y[i] /= l[(i, i)].re;
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n.min(i + bandwidth + 1) {
            let lki = l[(k, i)].conj();
            let yk = y[k];
            y[i] -= lki * yk;
        }
        y[i] /= l[(i, i)].re;
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        let data = (0..rows * cols)
            .map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        CMatrix::from_row_major(rows, cols, data).unwrap()
    }

    #[test]
    fn power_on_diagonal_matrix_finds_first_axis() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = c(4.0, 0.0);
        m[(1, 1)] = c(1.0, 0.0);
        let seed = normalized(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let out = principal_eigvec_power(&m, &seed, 8).unwrap();
        assert!(!out.degenerate);
        assert!(angular_distance(&out.vector, &[c(1.0, 0.0), c(0.0, 0.0)]) < 1e-3);
    }

    #[test]
    fn power_on_rank_one_projector_is_exact_after_one_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v = random_unit_vector(6, &mut rng);
        let m = CMatrix::outer(&v, &v, ONE);
        let seed = random_unit_vector(6, &mut rng);
        let out = principal_eigvec_power(&m, &seed, 1).unwrap();
        assert!(angular_distance(&out.vector, &v) < 1e-7);
        assert!((dot(&out.vector, &v).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn power_flags_seed_orthogonal_to_range() {
        let e1 = basis_vector(3, 1);
        let m = CMatrix::outer(&e1, &e1, ONE);
        let out = principal_eigvec_power(&m, &basis_vector(3, 0), 2).unwrap();
        assert!(out.degenerate);
        assert_eq!(out.vector, basis_vector(3, 0));
    }

    #[test]
    fn power_rejects_contract_violations() {
        let m = CMatrix::identity(3);
        assert!(matches!(
            principal_eigvec_power(&m, &basis_vector(2, 0), 1),
            Err(Error::DimensionMismatch { .. })
        ));
        let mut bad = CMatrix::identity(2);
        bad[(0, 1)] = c(f64::NAN, 0.0);
        assert!(matches!(
            principal_eigvec_power(&bad, &basis_vector(2, 0), 1),
            Err(Error::NonFinite(_))
        ));
        let mut skew = CMatrix::identity(2);
        skew[(0, 1)] = c(1.0, 0.0);
        assert_eq!(
            principal_eigvec_power(&skew, &basis_vector(2, 0), 1),
            Err(Error::NotHermitianPsd)
        );
        assert!(principal_eigvec_power(&m, &basis_vector(3, 0), 0).is_err());
    }

    #[test]
    fn right_pseudo_apply_with_orthonormal_columns_sums_them() {
        let e0 = basis_vector(4, 0);
        let mut q1 = vec![ZERO; 4];
        q1[1] = c(0.0, 1.0 / 2f64.sqrt());
        q1[3] = c(1.0 / 2f64.sqrt(), 0.0);
        let a = CMatrix::from_columns(&[e0.clone(), q1.clone()]).unwrap();
        let x = gram_right_pseudo_apply(&a, &[ONE, ONE]).unwrap();
        for i in 0..4 {
            assert!((x[i] - (e0[i] + q1[i])).norm() < 1e-14);
        }
    }

    #[test]
    fn right_pseudo_apply_satisfies_defining_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_matrix(8, 3, &mut rng);
        let rhs = vec![ONE; 3];
        let x = gram_right_pseudo_apply(&a, &rhs).unwrap();
        let back = a.adjoint_mul_vec(&x).unwrap();
        let resid: f64 = back.iter().zip(&rhs).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>();
        assert!(resid.sqrt() / norm(&rhs) < 1e-8);
    }

    #[test]
    fn right_pseudo_apply_rejects_duplicate_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v = random_unit_vector(5, &mut rng);
        let a = CMatrix::from_columns(&[v.clone(), v]).unwrap();
        assert!(matches!(
            gram_right_pseudo_apply(&a, &[ONE, c(2.0, 0.0)]),
            Err(Error::RankDeficient { .. })
        ));
        let wide = random_matrix(2, 3, &mut rng);
        assert!(matches!(
            gram_right_pseudo_apply(&wide, &[ONE; 3]),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn condition_ratio_edge_cases() {
        let q = CMatrix::identity(4);
        assert!((condition_ratio(&q) - 1.0).abs() < 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let v = random_unit_vector(4, &mut rng);
        let dup = CMatrix::from_columns(&[v.clone(), v]).unwrap();
        assert!(condition_ratio(&dup).is_infinite());
    }

    #[test]
    fn jacobi_reconstructs_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let b = random_matrix(7, 7, &mut rng);
        let m = b.adjoint().matmul(&b).unwrap();
        let eig = hermitian_eigen(&m).unwrap();
        for k in 0..7 {
            let v = eig.vectors.column(k);
            let mv = m.mul_vec(&v).unwrap();
            for i in 0..7 {
                assert!((mv[i] - v[i] * eig.values[k]).norm() < 1e-9 * eig.values[0]);
            }
        }
        assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn cholesky_matches_lu() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let b = random_matrix(6, 5, &mut rng);
        let m = b.gram().add(&CMatrix::identity(5)).unwrap();
        let rhs = random_unit_vector(5, &mut rng);
        let x1 = cholesky_solve(&m, &rhs).unwrap();
        let x2 = LuFactors::factor(&m).unwrap().solve(&rhs).unwrap();
        for (a, b) in x1.iter().zip(&x2) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn canonical_phase_makes_peak_real_positive() {
        let mut v = vec![c(0.1, 0.2), c(0.0, -3.0), c(1.0, 1.0)];
        canonicalize_phase(&mut v);
        assert!(v[1].re > 0.0 && v[1].im == 0.0);
        assert!((v[1].re - 3.0).abs() < 1e-15);
    }
}
