//! Dense complex linear algebra for the small matrices used throughout the crate.
//!
//! Everything here works on [`ComplexMatrix`], a row-major square matrix of
//! `Complex64`. Two-qubit matrices use the basis order `|00>, |01>, |10>, |11>`
//! with the first factor as the most significant index.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default tolerance for the physicality predicates.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Eigenvalues in `(-CLAMP_TOL, 0)` are treated as roundoff and clamped to zero.
pub const CLAMP_TOL: f64 = 1e-10;

/// Jacobi stops once the off-diagonal norm drops below this fraction of its initial value.
pub const JACOBI_REL_TOL: f64 = 1e-13;

/// Hard cap on cyclic Jacobi sweeps.
pub const JACOBI_MAX_SWEEPS: usize = 100;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Which factor of a bipartite space an operation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

/// Dense square complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Builds a matrix from row-major entries. Fails unless `data.len()` is a perfect square.
    pub fn from_vec(data: Vec<Complex64>) -> Result<Self> {
        let dim = (data.len() as f64).sqrt().round() as usize;
        if dim == 0 || dim * dim != data.len() {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                actual: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    /// Builds a matrix from real row-major entries.
    pub fn from_real(rows: &[&[f64]]) -> Self {
        let dim = rows.len();
        let mut m = Self::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), dim, "row {i} has wrong length");
            for (j, &x) in row.iter().enumerate() {
                m[(i, j)] = Complex64::new(x, 0.0);
            }
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    /// Projector `|v><v|`.
    pub fn outer(v: &[Complex64]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, k: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * k).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Frobenius norm of the strictly off-diagonal part.
    pub fn off_diagonal_norm(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j {
                    acc += self[(i, j)].norm_sqr();
                }
            }
        }
        acc.sqrt()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest `|a_ij - conj(a_ji)|`.
    pub fn hermitian_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..self.dim {
            for j in i..self.dim {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    pub fn trace_is_one(&self, tol: f64) -> bool {
        (self.trace() - ONE).norm() <= tol
    }

    /// Hermitian and no eigenvalue below `-tol`.
    pub fn is_psd(&self, tol: f64) -> bool {
        if !self.is_hermitian(tol) {
            return false;
        }
        match hermitian_eigenvalues(self) {
            Ok(values) => values.first().is_none_or(|&v| v >= -tol),
            Err(_) => false,
        }
    }

    /// Checks Hermiticity, unit trace and positivity, reporting the first failure.
    pub fn check_density(&self, tol: f64) -> Result<()> {
        let deviation = self.hermitian_deviation();
        if deviation > tol {
            return Err(Error::NotHermitian { deviation });
        }
        let trace = self.trace();
        if (trace - ONE).norm() > tol {
            return Err(Error::TraceNotOne { trace: trace.re });
        }
        let values = hermitian_eigenvalues(self)?;
        if let Some(&min) = values.first() {
            if min < -tol {
                return Err(Error::NotPsd { eigenvalue: min });
            }
        }
        Ok(())
    }

    /// Conjugation by a basis permutation: basis state `k` becomes basis state `perm[k]`.
    pub fn permute(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.dim);
        let mut out = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[(perm[i], perm[j])] = self[(i, j)];
            }
        }
        out
    }

    fn check_bipartite(&self, dims: (usize, usize)) -> Result<()> {
        if dims.0 * dims.1 != self.dim {
            return Err(Error::DimensionMismatch {
                expected: dims.0 * dims.1,
                actual: self.dim,
            });
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix product dimension mismatch");
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim);
        ComplexMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim);
        ComplexMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{:+.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_real(&[&[0.0, 1.0], &[1.0, 0.0]])
}

pub fn pauli_y() -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(2);
    m[(0, 1)] = Complex64::new(0.0, -1.0);
    m[(1, 0)] = Complex64::new(0.0, 1.0);
    m
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::diag(&[1.0, -1.0])
}

/// Kronecker product; the first factor indexes the most significant digit.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (da, db) = (a.dim, b.dim);
    ComplexMatrix::from_fn(da * db, |i, j| a[(i / db, j / db)] * b[(i % db, j % db)])
}

/// Traces out `traced` from a matrix on a `dims.0 x dims.1` space.
pub fn partial_trace(
    rho: &ComplexMatrix,
    traced: Subsystem,
    dims: (usize, usize),
) -> Result<ComplexMatrix> {
    rho.check_bipartite(dims)?;
    let (d1, d2) = dims;
    let out = match traced {
        Subsystem::Second => ComplexMatrix::from_fn(d1, |i, j| {
            (0..d2).map(|k| rho[(i * d2 + k, j * d2 + k)]).sum()
        }),
        Subsystem::First => ComplexMatrix::from_fn(d2, |i, j| {
            (0..d1).map(|k| rho[(k * d2 + i, k * d2 + j)]).sum()
        }),
    };
    Ok(out)
}

/// Transposes the indices of one factor of a bipartite matrix.
pub fn partial_transpose(
    rho: &ComplexMatrix,
    transposed: Subsystem,
    dims: (usize, usize),
) -> Result<ComplexMatrix> {
    rho.check_bipartite(dims)?;
    let d2 = dims.1;
    Ok(ComplexMatrix::from_fn(rho.dim, |row, col| {
        let (i1, i2) = (row / d2, row % d2);
        let (j1, j2) = (col / d2, col % d2);
        match transposed {
            Subsystem::First => rho[(j1 * d2 + i2, i1 * d2 + j2)],
            Subsystem::Second => rho[(i1 * d2 + j2, j1 * d2 + i2)],
        }
    }))
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector of `values[k]`.
    pub vectors: ComplexMatrix,
    pub sweeps: usize,
}

/// Cyclic complex Jacobi diagonalization.
///
/// Each rotation first removes the phase of the pivot `a_pq` and then applies
/// the real symmetric Jacobi rotation, so the combined transform on the
/// `(p, q)` plane is unitary. Pivots that no longer perturb the diagonal in
/// floating point are set to zero directly. Exactly-zero pivots are skipped,
/// so structurally zero rows and columns stay exactly zero.
pub fn hermitian_eigen(m: &ComplexMatrix) -> Result<HermitianEigen> {
    let deviation = m.hermitian_deviation();
    let scale = m.data.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if deviation > DEFAULT_TOL * scale {
        return Err(Error::NotHermitian { deviation });
    }
    let n = m.dim;
    // exact Hermitian part
    let mut a = ComplexMatrix::from_fn(n, |i, j| {
        if i == j {
            Complex64::new(m[(i, i)].re, 0.0)
        } else {
            (m[(i, j)] + m[(j, i)].conj()) * 0.5
        }
    });
    let mut v = ComplexMatrix::identity(n);

    let target = JACOBI_REL_TOL * a.off_diagonal_norm();
    let mut sweeps = 0;
    while a.off_diagonal_norm() > target {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(x, x)].re.total_cmp(&a[(y, y)].re));
    let values = order.iter().map(|&k| a[(k, k)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, |i, j| v[(i, order[j])]);
    Ok(HermitianEigen {
        values,
        vectors,
        sweeps,
    })
}

fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let n = a.dim;
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let g = 100.0 * r;
    if app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
        a[(p, q)] = ZERO;
        a[(q, p)] = ZERO;
        return;
    }

    let theta = (aqq - app) / (2.0 * r);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let phase = (apq / r).conj();

    // U = diag(1, phase) * [[c, s], [-s, c]] restricted to (p, q)
    let u_pp = Complex64::new(c, 0.0);
    let u_pq = Complex64::new(s, 0.0);
    let u_qp = phase * -s;
    let u_qq = phase * c;

    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * u_pp + akq * u_qp;
        a[(k, q)] = akp * u_pq + akq * u_qq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = u_pp.conj() * apk + u_qp.conj() * aqk;
        a[(q, k)] = u_pq.conj() * apk + u_qq.conj() * aqk;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = Complex64::new(app - t * r, 0.0);
    a[(q, q)] = Complex64::new(aqq + t * r, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * u_pp + vkq * u_qp;
        v[(k, q)] = vkp * u_pq + vkq * u_qq;
    }
}

/// Ascending real eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    hermitian_eigen(m).map(|e| e.values)
}

/// Clamps a spectrum that should be non-negative.
///
/// Values below `-tol` are an error. Negative values above it, and positive
/// values within the solver's absolute accuracy (`8 n eps max|lambda|`), become 0.
pub(crate) fn clamp_spectrum(values: &[f64], tol: f64) -> Result<Vec<f64>> {
    let max = values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let floor = 8.0 * values.len() as f64 * f64::EPSILON * max;
    values
        .iter()
        .map(|&v| {
            if v < -tol {
                Err(Error::NotPsd { eigenvalue: v })
            } else if v <= floor {
                Ok(0.0)
            } else {
                Ok(v)
            }
        })
        .collect()
}

/// Principal square root of a positive semidefinite matrix.
pub fn sqrt_psd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    sqrt_psd_tol(m, CLAMP_TOL)
}

pub fn sqrt_psd_tol(m: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    let eig = hermitian_eigen(m)?;
    let roots: Vec<f64> = clamp_spectrum(&eig.values, tol)?
        .into_iter()
        .map(f64::sqrt)
        .collect();
    let n = m.dim;
    let vecs = &eig.vectors;
    Ok(ComplexMatrix::from_fn(n, |i, j| {
        let mut acc = ZERO;
        for (k, &r) in roots.iter().enumerate() {
            if r != 0.0 {
                acc += vecs[(i, k)] * vecs[(j, k)].conj() * r;
            }
        }
        acc
    }))
}
