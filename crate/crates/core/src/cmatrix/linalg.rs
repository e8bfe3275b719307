//! Jacobi-type decompositions and LU determinant.

use num_complex::Complex;
use num_traits::{One, Zero};

use super::CMatrix;
use crate::error::{Error, Result};
use crate::scalar::{abs2, Real};

const MAX_SWEEPS: usize = 80;

#[derive(Debug, Clone)]
pub struct Svd<T> {
    /// Descending.
    pub singular_values: Vec<T>,
    /// Right singular vectors as columns, in the order of `singular_values`.
    pub v: Option<CMatrix<T>>,
}

/// One-sided (Hestenes) Jacobi SVD. Every column pair is rotated until all
/// pairs are orthogonal to working precision; the singular values are then
/// the column norms.
pub fn svd<T: Real>(a: &CMatrix<T>, want_v: bool) -> Svd<T> {
    let (m, n) = (a.rows(), a.cols());
    let mut cols: Vec<Vec<Complex<T>>> = (0..n).map(|j| (0..m).map(|i| a[(i, j)]).collect()).collect();
    let mut v: Option<Vec<Vec<Complex<T>>>> = want_v.then(|| {
        (0..n)
            .map(|j| (0..n).map(|i| if i == j { Complex::<T>::one() } else { Complex::<T>::zero() }).collect())
            .collect()
    });
    let mut norms: Vec<T> = cols.iter().map(|c| c.iter().map(|&z| abs2(z)).sum()).collect();
    let tol = T::epsilon() * T::from_usize_lossy(m.max(1)).sqrt();
    // columns this small are numerically zero; rotating them only churns rounding noise
    let total: T = norms.iter().copied().sum();
    let negligible = total * T::epsilon() * T::epsilon();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = norms[p];
                let beta = norms[q];
                if alpha <= negligible || beta <= negligible {
                    continue;
                }
                let gamma = cols[p].iter().zip(&cols[q]).fold(Complex::<T>::zero(), |acc, (x, y)| acc + x.conj() * y);
                let g = gamma.norm();
                if !(g > tol * (alpha * beta).sqrt()) {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (g + g);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, p, q, c, s, phase);
                if let Some(v) = v.as_mut() {
                    rotate(v, p, q, c, s, phase);
                }
                norms[p] = cols[p].iter().map(|&z| abs2(z)).sum();
                norms[q] = cols[q].iter().map(|&z| abs2(z)).sum();
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let sv: Vec<T> = norms.iter().map(|x| x.sqrt()).collect();
    order.sort_by(|&i, &j| sv[j].partial_cmp(&sv[i]).unwrap_or(std::cmp::Ordering::Equal));
    let singular_values = order.iter().map(|&i| sv[i]).collect();
    let v = v.map(|v| CMatrix::from_fn(n, n, |i, j| v[order[j]][i]));
    Svd { singular_values, v }
}

/// `a_p ← c·a_p − s·ē·a_q`, `a_q ← s·e·a_p + c·a_q` where `e` is the phase
/// of `a_p†a_q`.
fn rotate<T: Real>(cols: &mut [Vec<Complex<T>>], p: usize, q: usize, c: T, s: T, phase: Complex<T>) {
    let (lo, hi) = cols.split_at_mut(q);
    let (cp, cq) = (&mut lo[p], &mut hi[0]);
    let pc = phase.conj();
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let xp = *x;
        let yq = *y;
        *x = xp * c - pc * yq * s;
        *y = phase * xp * s + yq * c;
    }
}

/// Orthonormal basis (as columns) of the numerical null space: right
/// singular vectors with `σ ≤ rel_cut·σ_max`.
pub fn null_space<T: Real>(a: &CMatrix<T>, rel_cut: T) -> CMatrix<T> {
    let n = a.cols();
    let Svd { singular_values, v } = svd(a, true);
    let v = v.expect("requested");
    let smax = singular_values.first().copied().unwrap_or_else(T::zero);
    let keep: Vec<usize> = (0..n).filter(|&k| !(singular_values[k] > rel_cut * smax) || smax.is_zero()).collect();
    CMatrix::from_fn(n, keep.len(), |i, j| v[(i, keep[j])])
}

#[derive(Debug, Clone)]
pub struct HermitianEigen<T> {
    /// Ascending.
    pub values: Vec<T>,
    /// Orthonormal eigenvectors as columns.
    pub vectors: CMatrix<T>,
}

/// Cyclic complex Jacobi eigensolver for Hermitian matrices.
pub fn hermitian_eigen<T: Real>(h: &CMatrix<T>) -> Result<HermitianEigen<T>> {
    let n = h.require_square()?;
    let mut a = h.clone();
    let mut v = CMatrix::identity(n);
    let eps = T::epsilon();

    for _ in 0..MAX_SWEEPS {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| abs2(a[(i, j)]))
            .sum();
        let diag: T = (0..n).map(|i| abs2(a[(i, i)])).sum();
        if off <= eps * eps * diag || off.is_zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let g = a[(p, q)];
                let gn = g.norm();
                if gn.is_zero() {
                    continue;
                }
                let e = g / gn;
                let theta = (a[(q, q)].re - a[(p, p)].re) / (gn + gn);
                let t = if theta.is_zero() {
                    T::one()
                } else {
                    theta.signum() / (theta.abs() + (T::one() + theta * theta).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                // J = [[c, s], [−s·ē, c·ē]] on (p, q); A ← J†AJ, V ← VJ.
                let ec = e.conj();
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c - akq * ec * s;
                    a[(k, q)] = akp * s + akq * ec * c;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c - aqk * e * s;
                    a[(q, k)] = apk * s + aqk * e * c;
                }
                a[(p, q)] = Complex::zero();
                a[(q, p)] = Complex::zero();
                a[(p, p)] = Complex::new(a[(p, p)].re, T::zero());
                a[(q, q)] = Complex::new(a[(q, q)].re, T::zero());
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c - vkq * ec * s;
                    v[(k, q)] = vkp * s + vkq * ec * c;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(HermitianEigen { values, vectors })
}

/// LU determinant with partial pivoting.
pub fn determinant<T: Real>(a: &CMatrix<T>) -> Result<Complex<T>> {
    let n = a.require_square()?;
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let mut m = a.clone();
    let mut det = Complex::one();
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| abs2(m[(i, k)]).partial_cmp(&abs2(m[(j, k)])).unwrap_or(std::cmp::Ordering::Equal))
            .expect("non-empty range");
        if m[(piv, k)].is_zero() {
            return Ok(Complex::zero());
        }
        if piv != k {
            for j in 0..n {
                let tmp = m[(k, j)];
                m[(k, j)] = m[(piv, j)];
                m[(piv, j)] = tmp;
            }
            det = -det;
        }
        let pivot = m[(k, k)];
        det = det * pivot;
        for i in (k + 1)..n {
            let f = m[(i, k)] / pivot;
            if f.is_zero() {
                continue;
            }
            for j in (k + 1)..n {
                let mkj = m[(k, j)];
                m[(i, j)] = m[(i, j)] - f * mkj;
            }
        }
    }
    Ok(det)
}
