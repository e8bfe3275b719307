//! Span-condition isolation certificates.
//!
//! For a biunitary `U` the commutator span `[D, U*DU]` is spanned by the
//! matrices `[D_i, U*D_jU]`, whose `(k, l)` entries are
//! `(δ_ik − δ_il)·ū_jk·u_jl`. Stacking them as rows gives the `n² × n²`
//! span matrix `A`, rows indexed by `(i, j)` and columns by `(k, l)`, both
//! lexicographic. The span always has dimension at most `(n − 1)²`; when it
//! is exactly `(n − 1)²` the matrix is isolated among biunitaries up to
//! equivalence.

use serde::{Serialize, Serializer};

use crate::cmatrix::{determinant, numerical_rank, CMatrix};
use crate::error::{Error, Result};
use crate::hadamard::{bjorck7, require_biunitary};
use crate::policy::NumericPolicy;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    /// Span condition holds with a clean spectral gap: isolated.
    Isolated,
    /// Span rank is below `(n−1)²` with a clean gap. The span condition
    /// fails; isolation is undetermined.
    SpanFails,
    /// No decisive gap in the spectrum, or a rank above the theoretical bound.
    Inconclusive,
}

/// Canonical JSON key order: n, rank, expected, verdict, gap,
/// singular_values, policy. An infinite gap is written as `null`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real + Serialize"))]
pub struct SpanCertificate<T> {
    pub n: usize,
    pub rank: usize,
    pub expected: usize,
    pub verdict: Verdict,
    #[serde(serialize_with = "finite_or_null")]
    pub gap: T,
    pub singular_values: Vec<T>,
    pub policy: NumericPolicy<T>,
}

pub(crate) fn finite_or_null<T: Real + Serialize, S: Serializer>(x: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        x.serialize(s)
    } else {
        s.serialize_none()
    }
}

/// `(n − 1)²`, the span dimension required for isolation.
pub fn expected_rank(n: usize) -> usize {
    (n - 1) * (n - 1)
}

pub fn span_matrix<T: Real>(u: &CMatrix<T>) -> Result<CMatrix<T>> {
    let n = u.require_square()?;
    let mut a = CMatrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            let row = i * n + j;
            // only columns with k = i or l = i are nonzero
            for l in 0..n {
                if l != i {
                    a[(row, i * n + l)] = u[(j, i)].conj() * u[(j, l)];
                }
            }
            for k in 0..n {
                if k != i {
                    a[(row, k * n + i)] = -(u[(j, k)].conj() * u[(j, i)]);
                }
            }
        }
    }
    Ok(a)
}

/// Drops rows `(i, 0)`, `(0, j)` and columns `(k, k)`, `(0, l)` from a span
/// matrix, leaving the `(n−1)² × (n−1)²` minor whose determinant decides
/// the span condition.
pub fn reduced_minor<T: Real>(a: &CMatrix<T>) -> Result<CMatrix<T>> {
    let nn = a.require_square()?;
    let n = (nn as f64).sqrt().round() as usize;
    if n * n != nn {
        return Err(Error::NotSquare { rows: nn, cols: n });
    }
    let rows: Vec<usize> = (1..n).flat_map(|i| (1..n).map(move |j| i * n + j)).collect();
    let cols: Vec<usize> = (1..n).flat_map(|k| (0..n).filter(move |&l| l != k).map(move |l| k * n + l)).collect();
    Ok(a.permute(&rows, &cols))
}

pub fn certify_isolation<T: Real>(u: &CMatrix<T>, policy: &NumericPolicy<T>) -> Result<SpanCertificate<T>> {
    policy.validate()?;
    let n = require_biunitary(u, policy)?;
    let info = numerical_rank(&span_matrix(u)?, policy.rank_rel_cut);
    let expected = expected_rank(n);
    let decisive = info.gap >= policy.cert_gap_min;
    let verdict = match info.rank {
        r if r == expected && decisive => Verdict::Isolated,
        r if r < expected && decisive => Verdict::SpanFails,
        _ => Verdict::Inconclusive,
    };
    Ok(SpanCertificate {
        n,
        rank: info.rank,
        expected,
        verdict,
        gap: info.gap,
        singular_values: info.singular_values,
        policy: *policy,
    })
}

/// Dimension of the kernel of `(c_kl) ↦ Σ c_kl [D_k, U*D_lU]`.
pub fn kernel_dimension<T: Real>(u: &CMatrix<T>, policy: &NumericPolicy<T>) -> Result<usize> {
    let cert = certify_isolation(u, policy)?;
    Ok(cert.n * cert.n - cert.rank)
}

/// End-to-end rank and minor-determinant computation for the order-7
/// quadratic-residue circulant.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real + Serialize"))]
pub struct MinorReport<T> {
    pub n: usize,
    pub rank: usize,
    pub expected: usize,
    #[serde(serialize_with = "finite_or_null")]
    pub gap: T,
    pub minor_order: usize,
    pub minor_rank: usize,
    pub det_abs: T,
    pub det_re: T,
    pub det_im: T,
    pub det_nonzero: bool,
    pub pass: bool,
}

pub fn minor_report<T: Real>(u: &CMatrix<T>, policy: &NumericPolicy<T>) -> Result<MinorReport<T>> {
    policy.validate()?;
    let n = u.require_square()?;
    let a = span_matrix(u)?;
    let info = numerical_rank(&a, policy.rank_rel_cut);
    let m = reduced_minor(&a)?;
    let det = determinant(&m)?;
    let minor_rank = numerical_rank(&m, policy.rank_rel_cut).rank;
    let expected = expected_rank(n);
    let det_nonzero = minor_rank == m.rows() && det.norm() > T::zero();
    let pass = info.rank == expected && info.gap >= policy.cert_gap_min && det_nonzero;
    Ok(MinorReport {
        n,
        rank: info.rank,
        expected,
        gap: info.gap,
        minor_order: m.rows(),
        minor_rank,
        det_abs: det.norm(),
        det_re: det.re,
        det_im: det.im,
        det_nonzero,
        pass,
    })
}

pub fn reproduce_bjorck7<T: Real>(policy: &NumericPolicy<T>) -> Result<MinorReport<T>> {
    minor_report(&bjorck7(), policy)
}
