//! Dense complex matrices.
//!
//! Indices are 0-based: entry `(i, j)` here is entry `(i+1, j+1)` in the
//! usual 1-based notation for matrix units `A_{i,j}` and projections `D_k`.

mod linalg;
mod projection;

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{abs2, cis, Real};

pub use linalg::{determinant, hermitian_eigen, null_space, svd, HermitianEigen, Svd};
pub use projection::DiagProjection;

/// Row-major dense complex matrix. Mostly square; the span matrix and
/// linear systems in the pair finders are rectangular.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

/// Output of [`numerical_rank`].
#[derive(Debug, Clone, PartialEq)]
pub struct RankInfo<T> {
    pub rank: usize,
    /// `σ_rank / σ_{rank+1}`; infinite when every singular value counts or
    /// the matrix is identically zero.
    pub gap: T,
    /// Singular values, descending.
    pub singular_values: Vec<T>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Build from row-major data; fails when the length does not match.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Parse(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_diagonal(diag: &[Complex<T>]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    /// Matrix unit `A_{i,j}` of order `n`.
    pub fn matrix_unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m[(i, j)] = Complex::one();
        m
    }

    /// `(1/√n)·e^{iθ_ij}` from row-major phases.
    pub fn from_phases(n: usize, phases: &[T]) -> Result<Self> {
        if phases.len() != n * n {
            return Err(Error::Parse(format!("expected {} phases, got {}", n * n, phases.len())));
        }
        let scale = T::one() / T::from_usize_lossy(n).sqrt();
        Ok(Self { rows: n, cols: n, data: phases.iter().map(|&t| cis(t) * scale).collect() })
    }

    /// Row-major entry arguments.
    pub fn phases(&self) -> Vec<T> {
        self.data.iter().map(|z| z.arg()).collect()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Order of a square matrix.
    pub fn order(&self) -> usize {
        debug_assert!(self.is_square());
        self.rows
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn require_square(&self) -> Result<usize> {
        if self.rows == 0 {
            return Err(Error::EmptyOrder);
        }
        if !self.is_square() {
            return Err(Error::NotSquare { rows: self.rows, cols: self.cols });
        }
        Ok(self.rows)
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn map(&self, f: impl Fn(Complex<T>) -> Complex<T>) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| f(z)).collect() }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::OrderMismatch { left: self.cols, right: other.rows });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d = *d + a * b;
                }
            }
        }
        Ok(out)
    }

    /// `diag(d)·self`.
    pub fn scale_rows(&self, d: &[Complex<T>]) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| d[i] * self[(i, j)])
    }

    /// `self·diag(d)`.
    pub fn scale_cols(&self, d: &[Complex<T>]) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)] * d[j])
    }

    /// Reorder rows and columns: `out[(i, j)] = self[(row_perm[i], col_perm[j])]`.
    pub fn permute(&self, row_perm: &[usize], col_perm: &[usize]) -> Self {
        Self::from_fn(row_perm.len(), col_perm.len(), |i, j| self[(row_perm[i], col_perm[j])])
    }

    /// `ab − ba`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.require_same_shape(other)?;
        Ok(&self.matmul(other)? - &other.matmul(self)?)
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).fold(Complex::zero(), |a, b| a + b)
    }

    /// `(1/n)·Tr`.
    pub fn normalized_trace(&self) -> Complex<T> {
        self.trace() / T::from_usize_lossy(self.rows)
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&z| abs2(z)).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().map(|z| z.norm()).fold(T::zero(), T::max)
    }

    /// Conditional expectation onto the diagonal subalgebra: keeps the
    /// diagonal and zeroes everything else.
    pub fn conditional_expect_diag(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| if i == j { self[(i, j)] } else { Complex::zero() })
    }

    /// `‖self − self†‖_F`.
    pub fn hermitian_residual(&self) -> T {
        if !self.is_square() {
            return T::infinity();
        }
        let mut acc = T::zero();
        for i in 0..self.rows {
            for j in 0..self.cols {
                acc = acc + abs2(self[(i, j)] - self[(j, i)].conj());
            }
        }
        acc.sqrt()
    }

    /// `‖self·self† − I‖_F`.
    pub fn unitarity_residual(&self) -> T {
        let n = self.rows;
        let mut acc = T::zero();
        for i in 0..n {
            for j in 0..n {
                let mut s = Complex::zero();
                for (a, b) in self.row(i).iter().zip(self.row(j)) {
                    s = s + a * b.conj();
                }
                if i == j {
                    s = s - Complex::one();
                }
                acc = acc + abs2(s);
            }
        }
        acc.sqrt()
    }

    /// `exp(i·t·self)` for Hermitian `self`, via its eigendecomposition.
    pub fn expi_hermitian(&self, t: T, tol: T) -> Result<Self> {
        let n = self.require_square()?;
        let residual = self.hermitian_residual();
        if !(residual <= tol) {
            return Err(Error::NotHermitian { residual: residual.to_f64().unwrap_or(f64::NAN) });
        }
        if t.is_zero() {
            return Ok(Self::identity(n));
        }
        let eig = hermitian_eigen(self)?;
        let phases: Vec<Complex<T>> = eig.values.iter().map(|&l| cis(t * l)).collect();
        let v = &eig.vectors;
        Ok(Self::from_fn(n, n, |i, j| {
            let mut s = Complex::zero();
            for k in 0..n {
                s = s + v[(i, k)] * phases[k] * v[(j, k)].conj();
            }
            s
        }))
    }

    fn require_same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::OrderMismatch { left: self.rows, right: other.rows });
        }
        Ok(())
    }
}

/// Numerical rank from the full singular spectrum: counts `σ_k > cut·σ_max`.
pub fn numerical_rank<T: Real>(a: &CMatrix<T>, rank_rel_cut: T) -> RankInfo<T> {
    let singular_values = svd(a, false).singular_values;
    rank_from_spectrum(singular_values, rank_rel_cut)
}

pub(crate) fn rank_from_spectrum<T: Real>(singular_values: Vec<T>, rank_rel_cut: T) -> RankInfo<T> {
    let smax = singular_values.first().copied().unwrap_or_else(T::zero);
    let cut = rank_rel_cut * smax;
    let rank = if smax > T::zero() { singular_values.iter().filter(|&&s| s > cut).count() } else { 0 };
    let gap = if rank == 0 || rank == singular_values.len() {
        T::infinity()
    } else {
        let below = singular_values[rank];
        if below > T::zero() {
            singular_values[rank - 1] / below
        } else {
            T::infinity()
        }
    };
    RankInfo { rank, gap, singular_values }
}

impl<T> Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;

    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for CMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Real> Add for &CMatrix<T> {
    type Output = CMatrix<T>;

    fn add(self, rhs: Self) -> CMatrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<T: Real> Sub for &CMatrix<T> {
    type Output = CMatrix<T>;

    fn sub(self, rhs: Self) -> CMatrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl<T: Real> Mul for &CMatrix<T> {
    type Output = CMatrix<T>;

    /// Panics on a shape mismatch; use [`CMatrix::matmul`] for the fallible form.
    fn mul(self, rhs: Self) -> CMatrix<T> {
        self.matmul(rhs).expect("shape mismatch")
    }
}
