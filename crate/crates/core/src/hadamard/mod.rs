//! Biunitary (complex Hadamard) matrices: the spin-model commuting-square
//! data `D ⊂ M_n ⊃ U*DU`.

mod equivalence;

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::cmatrix::CMatrix;
use crate::error::{Error, Result};
use crate::policy::NumericPolicy;
use crate::scalar::{cis, Real};

pub use equivalence::{equivalent, haagerup_fingerprint, DEFAULT_EQUIVALENCE_LIMIT};

/// Outcome of [`verify_biunitary`]; both residuals are always reported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiunitaryVerdict<T> {
    pub is_biunitary: bool,
    /// `max_ij | |u_ij|·√n − 1 |`.
    pub max_modulus_deviation: T,
    /// `‖UU† − I‖_F`.
    pub max_unitarity_residual: T,
}

/// First row of a circulant, `S_ij = s_{(j−i) mod n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CirculantRow<T> {
    pub row: Vec<Complex<T>>,
}

impl<T: Real> CirculantRow<T> {
    pub fn new(row: Vec<Complex<T>>) -> Result<Self> {
        if row.is_empty() {
            return Err(Error::EmptyOrder);
        }
        Ok(Self { row })
    }

    pub fn order(&self) -> usize {
        self.row.len()
    }

    pub fn to_matrix(&self) -> CMatrix<T> {
        circulant(&self.row)
    }

    /// Row 0 of `m`.
    pub fn first_row_of(m: &CMatrix<T>) -> Self {
        Self { row: m.row(0).to_vec() }
    }
}

/// Value of the off-residue entry for [`qr_circulant`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OffResidue<T> {
    Given(Complex<T>),
    /// Find a unimodular value numerically.
    Solve,
}

/// Standard biunitary `(1/√n)·ε^{ij}` with `ε = e^{2πi/n}` (0-based `i, j`).
pub fn fourier<T: Real>(n: usize) -> Result<CMatrix<T>> {
    if n == 0 {
        return Err(Error::EmptyOrder);
    }
    let scale = T::one() / T::from_usize_lossy(n).sqrt();
    let step = T::TAU() / T::from_usize_lossy(n);
    // reduce ij mod n before taking the angle so large orders stay accurate
    Ok(CMatrix::from_fn(n, n, |i, j| cis(step * T::from_usize_lossy(i * j % n)) * scale))
}

pub fn verify_biunitary<T: Real>(u: &CMatrix<T>, policy: &NumericPolicy<T>) -> Result<BiunitaryVerdict<T>> {
    let n = u.require_square()?;
    let sqrt_n = T::from_usize_lossy(n).sqrt();
    let max_modulus_deviation = u
        .as_slice()
        .iter()
        .map(|z| (z.norm() * sqrt_n - T::one()).abs())
        .fold(T::zero(), |a, b| if b.is_nan() || a.is_nan() { T::nan() } else { a.max(b) });
    let max_unitarity_residual = u.unitarity_residual();
    let is_biunitary = max_modulus_deviation <= policy.tol_entry && max_unitarity_residual <= policy.tol_unitary;
    Ok(BiunitaryVerdict { is_biunitary, max_modulus_deviation, max_unitarity_residual })
}

pub(crate) fn require_biunitary<T: Real>(u: &CMatrix<T>, policy: &NumericPolicy<T>) -> Result<usize> {
    let v = verify_biunitary(u, policy)?;
    if !v.is_biunitary {
        return Err(Error::NotBiunitary {
            modulus: v.max_modulus_deviation.to_f64().unwrap_or(f64::NAN),
            unitarity: v.max_unitarity_residual.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(u.order())
}

/// `S_ij = s_{(j−i) mod n}`; no normalization.
pub fn circulant<T: Real>(row: &[Complex<T>]) -> CMatrix<T> {
    let n = row.len();
    CMatrix::from_fn(n, n, |i, j| row[(j + n - i) % n])
}

pub fn is_prime(n: usize) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

/// `{0} ∪` the quadratic residues mod `n`.
pub fn residue_pattern(n: usize) -> Vec<bool> {
    let mut mask = vec![false; n];
    for x in 0..n {
        mask[x * x % n] = true;
    }
    mask
}

/// Circulant with `s_i = 1/√n` on `{0} ∪ QR(n)` and `s_i = a/√n` elsewhere.
pub fn qr_circulant<T: Real>(n: usize, a: OffResidue<T>, policy: &NumericPolicy<T>) -> Result<CMatrix<T>> {
    if !is_prime(n) {
        return Err(Error::NotPrime(n));
    }
    let a = match a {
        OffResidue::Given(a) => a,
        OffResidue::Solve => solve_off_residue(n, policy)?,
    };
    let u = qr_circulant_raw(n, a);
    require_biunitary(&u, policy)?;
    Ok(u)
}

fn qr_circulant_raw<T: Real>(n: usize, a: Complex<T>) -> CMatrix<T> {
    let scale = T::one() / T::from_usize_lossy(n).sqrt();
    let row: Vec<Complex<T>> =
        residue_pattern(n).into_iter().map(|r| if r { Complex::one() } else { a } * scale).collect();
    circulant(&row)
}

/// `⟨row_0, row_1⟩` of the unnormalized pattern circulant at `a = e^{iφ}`.
/// Residue pairs and non-residue pairs contribute integers and mixed pairs
/// contribute `m·(a + ā)`, so only the real part carries a root.
fn lag_one_correlation<T: Real>(pattern: &[bool], phi: T) -> Complex<T> {
    let n = pattern.len();
    let a = cis(phi);
    let s = |k: usize| if pattern[k] { Complex::one() } else { a };
    (0..n).fold(Complex::zero(), |acc, j| acc + s(j) * s((j + n - 1) % n).conj())
}

/// Phase root of the off-residue value; scans `[0, 2π)` for sign changes
/// of the lag-one correlation and bisects each bracket.
pub fn solve_off_residue<T: Real>(n: usize, policy: &NumericPolicy<T>) -> Result<Complex<T>> {
    if !is_prime(n) {
        return Err(Error::NotPrime(n));
    }
    let pattern = residue_pattern(n);
    let f = |phi: T| lag_one_correlation(&pattern, phi).re;
    const GRID: usize = 720;
    let step = T::TAU() / T::from_usize_lossy(GRID);
    let mut best = T::infinity();
    for k in 0..GRID {
        let (mut lo, mut hi) = (step * T::from_usize_lossy(k), step * T::from_usize_lossy(k + 1));
        let (mut flo, fhi) = (f(lo), f(hi));
        if flo.is_zero() {
            hi = lo;
        } else if (flo < T::zero()) == (fhi < T::zero()) {
            best = best.min(flo.abs());
            continue;
        }
        for _ in 0..200 {
            if hi - lo <= T::epsilon() * hi.abs().max(T::one()) {
                break;
            }
            let mid = (lo + hi) / T::lit(2.0);
            let fm = f(mid);
            if (fm < T::zero()) == (flo < T::zero()) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        let phi = (lo + hi) / T::lit(2.0);
        let a = cis(phi);
        let v = verify_biunitary(&qr_circulant_raw(n, a), policy)?;
        if v.is_biunitary {
            return Ok(a);
        }
        best = best.min(v.max_unitarity_residual);
    }
    Err(Error::NoSolution { residual: best.to_f64().unwrap_or(f64::NAN) })
}

/// Order-7 circulant with `a = −3/4 + i√7/4` off the residue pattern.
pub fn bjorck7<T: Real>() -> CMatrix<T> {
    qr_circulant_raw(7, bjorck7_value())
}

pub fn bjorck7_value<T: Real>() -> Complex<T> {
    Complex::new(T::lit(-0.75), T::lit(7.0).sqrt() / T::lit(4.0))
}

/// Exponents of `w = e^{2πi/6}` in Petrescu's order-7 matrix; the top-left
/// 2×2 block carries `λ`, the next diagonal 2×2 block carries `λ̄`.
const PETRESCU_EXPONENTS: [[u8; 7]; 7] = [
    [1, 4, 5, 3, 3, 1, 0],
    [4, 1, 3, 5, 3, 1, 0],
    [5, 3, 1, 4, 1, 3, 0],
    [3, 5, 4, 1, 1, 3, 0],
    [3, 3, 1, 1, 4, 5, 0],
    [1, 1, 3, 3, 5, 4, 0],
    [0, 0, 0, 0, 0, 0, 0],
];

/// Petrescu's one-parameter family of order-7 biunitaries.
pub fn petrescu<T: Real>(lambda: Complex<T>) -> Result<CMatrix<T>> {
    let dev = (lambda.norm() - T::one()).abs();
    if !(dev <= NumericPolicy::<T>::default().tol_entry) {
        return Err(Error::NotUnimodular(lambda.norm().to_f64().unwrap_or(f64::NAN)));
    }
    let scale = T::one() / T::lit(7.0).sqrt();
    let w_step = T::TAU() / T::lit(6.0);
    Ok(CMatrix::from_fn(7, 7, |i, j| {
        let e = PETRESCU_EXPONENTS[i][j];
        let w = if e == 0 { Complex::one() } else { cis(w_step * T::from_u8(e).unwrap()) };
        let factor = match (i, j) {
            (0..=1, 0..=1) => lambda,
            (2..=3, 2..=3) => lambda.conj(),
            _ => Complex::one(),
        };
        factor * w * scale
    }))
}

/// [`petrescu`] at `λ = e^{iθ}`.
pub fn petrescu_angle<T: Real>(theta: T) -> CMatrix<T> {
    petrescu(cis(theta)).expect("cis is unimodular")
}

/// `D₁·u·D₂` with unimodular diagonals chosen so row 0 and column 0 are
/// real positive. Moduli are untouched; the map is idempotent.
pub fn dephase<T: Real>(u: &CMatrix<T>, policy: &NumericPolicy<T>) -> Result<CMatrix<T>> {
    require_biunitary(u, policy)?;
    Ok(dephase_unchecked(u))
}

pub(crate) fn dephase_unchecked<T: Real>(u: &CMatrix<T>) -> CMatrix<T> {
    let n = u.order();
    let col_fix: Vec<Complex<T>> = u.row(0).iter().map(|z| unit_conj(*z)).collect();
    let v = u.scale_cols(&col_fix);
    let row_fix: Vec<Complex<T>> = (0..n).map(|i| unit_conj(v[(i, 0)])).collect();
    let mut out = v.scale_rows(&row_fix);
    // the phase products leave ~1 ulp of imaginary part behind
    for j in 0..n {
        out[(0, j)] = Complex::new(u[(0, j)].norm(), T::zero());
        out[(j, 0)] = Complex::new(u[(j, 0)].norm(), T::zero());
    }
    out
}

fn unit_conj<T: Real>(z: Complex<T>) -> Complex<T> {
    let r = z.norm();
    if r.is_zero() {
        Complex::one()
    } else {
        z.conj() / r
    }
}
