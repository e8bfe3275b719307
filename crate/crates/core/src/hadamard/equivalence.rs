//! Equivalence of biunitaries up to row/column permutations and unimodular
//! diagonal factors: `v = Δ₁P₁uP₂Δ₂`.

use std::cmp::Ordering;

use num_complex::Complex;

use super::{dephase_unchecked, require_biunitary};
use crate::cmatrix::CMatrix;
use crate::error::{Error, Result};
use crate::policy::NumericPolicy;
use crate::scalar::Real;

pub const DEFAULT_EQUIVALENCE_LIMIT: usize = 8;

/// Sorted real and imaginary parts of the Haagerup set
/// `{ n²·u_ij ū_kj u_kl ū_il }`, which is invariant under all equivalence
/// moves.
pub fn haagerup_fingerprint<T: Real>(u: &CMatrix<T>) -> (Vec<T>, Vec<T>) {
    let n = u.order();
    let n2 = T::from_usize_lossy(n * n);
    let mut re = Vec::with_capacity(n.pow(4));
    let mut im = Vec::with_capacity(n.pow(4));
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                let a = u[(i, j)] * u[(k, j)].conj();
                for l in 0..n {
                    let z = a * u[(k, l)] * u[(i, l)].conj() * n2;
                    re.push(z.re);
                    im.push(z.im);
                }
            }
        }
    }
    let cmp = |a: &T, b: &T| a.partial_cmp(b).unwrap_or(Ordering::Equal);
    re.sort_by(cmp);
    im.sort_by(cmp);
    (re, im)
}

/// Decides `v = Δ₁P₁uP₂Δ₂` exactly (up to `tol_entry`) by trying every
/// row/column of `u` as the dephasing pivot and backtracking over column
/// matchings; rows are then matched by bipartite matching. Refuses orders
/// above `n_limit`.
pub fn equivalent<T: Real>(u: &CMatrix<T>, v: &CMatrix<T>, n_limit: usize, policy: &NumericPolicy<T>) -> Result<bool> {
    let n = u.require_square()?;
    let m = v.require_square()?;
    if n != m {
        return Err(Error::OrderMismatch { left: n, right: m });
    }
    if n > n_limit {
        return Err(Error::TooLarge { n, limit: n_limit });
    }
    require_biunitary(u, policy)?;
    require_biunitary(v, policy)?;

    // entries of unit-modulus matrices are compared after scaling by √n
    let sqrt_n = T::from_usize_lossy(n).sqrt();
    let tol = policy.tol_entry.max(T::epsilon() * T::lit(64.0));

    let (ur, ui) = haagerup_fingerprint(u);
    let (vr, vi) = haagerup_fingerprint(v);
    let fp_tol = tol * T::lit(8.0);
    let close = |a: &[T], b: &[T]| a.iter().zip(b).all(|(x, y)| (*x - *y).abs() <= fp_tol);
    if !close(&ur, &vr) || !close(&ui, &vi) {
        return Ok(false);
    }

    let target = dephase_unchecked(v);
    for r in 0..n {
        for c in 0..n {
            let mut rows: Vec<usize> = (0..n).collect();
            rows.swap(0, r);
            let mut cols: Vec<usize> = (0..n).collect();
            cols.swap(0, c);
            let cand = dephase_unchecked(&u.permute(&rows, &cols));
            let matcher = Matcher { cand: &cand, target: &target, n, tol, sqrt_n };
            if matcher.search() {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

struct Matcher<'a, T> {
    cand: &'a CMatrix<T>,
    target: &'a CMatrix<T>,
    n: usize,
    tol: T,
    sqrt_n: T,
}

impl<T: Real> Matcher<'_, T> {
    fn same(&self, a: Complex<T>, b: Complex<T>) -> bool {
        (a - b).norm() * self.sqrt_n <= self.tol
    }

    fn search(&self) -> bool {
        let n = self.n;
        // compat[i] = candidate rows r (of cand) that may land on target row i
        let compat: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|r| (i == 0) == (r == 0)).collect()).collect();
        let mut used = vec![false; n];
        used[0] = true;
        let mut sigma = vec![0usize; n];
        self.extend(1, &mut sigma, &mut used, compat)
    }

    /// Assign `sigma[j]` (target column j ← cand column sigma[j]).
    fn extend(&self, j: usize, sigma: &mut [usize], used: &mut [bool], compat: Vec<Vec<bool>>) -> bool {
        let n = self.n;
        if j == n {
            return has_perfect_matching(&compat);
        }
        for c in 0..n {
            if used[c] {
                continue;
            }
            let mut next = compat.clone();
            let mut dead = false;
            for i in 0..n {
                for r in 0..n {
                    if next[i][r] && !self.same(self.cand[(r, c)], self.target[(i, j)]) {
                        next[i][r] = false;
                    }
                }
                if !next[i].iter().any(|&b| b) {
                    dead = true;
                    break;
                }
            }
            if dead {
                continue;
            }
            used[c] = true;
            sigma[j] = c;
            if self.extend(j + 1, sigma, used, next) {
                return true;
            }
            used[c] = false;
        }
        false
    }
}

fn has_perfect_matching(compat: &[Vec<bool>]) -> bool {
    let n = compat.len();
    let mut owner: Vec<Option<usize>> = vec![None; n];
    fn augment(i: usize, compat: &[Vec<bool>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for r in 0..compat.len() {
            if compat[i][r] && !seen[r] {
                seen[r] = true;
                if owner[r].is_none_or(|o| augment(o, compat, seen, owner)) {
                    owner[r] = Some(i);
                    return true;
                }
            }
        }
        false
    }
    (0..n).all(|i| {
        let mut seen = vec![false; n];
        augment(i, compat, &mut seen, &mut owner)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hadamard::{bjorck7, fourier, petrescu_angle};
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type M = CMatrix<f64>;
    type C = Complex<f64>;

    fn random_moves(u: &M, rng: &mut ChaCha8Rng) -> M {
        let n = u.order();
        let mut rp: Vec<usize> = (0..n).collect();
        let mut cp: Vec<usize> = (0..n).collect();
        rp.shuffle(rng);
        cp.shuffle(rng);
        let d1: Vec<C> = (0..n).map(|_| C::from_polar(1.0, rng.gen_range(0.0..6.3))).collect();
        let d2: Vec<C> = (0..n).map(|_| C::from_polar(1.0, rng.gen_range(0.0..6.3))).collect();
        u.permute(&rp, &cp).scale_rows(&d1).scale_cols(&d2)
    }

    fn pol() -> NumericPolicy<f64> {
        NumericPolicy::default()
    }

    #[test]
    fn reflexive_and_recovers_moves() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for u in [fourier::<f64>(7).unwrap(), petrescu_angle(0.9), bjorck7(), fourier(4).unwrap()] {
            assert!(equivalent(&u, &u, 8, &pol()).unwrap());
            for _ in 0..3 {
                let v = random_moves(&u, &mut rng);
                assert!(equivalent(&u, &v, 8, &pol()).unwrap());
                assert!(equivalent(&v, &u, 8, &pol()).unwrap());
            }
        }
    }

    #[test]
    fn distinguishes_inequivalent() {
        let f7 = fourier::<f64>(7).unwrap();
        let p1 = petrescu_angle(0.0);
        assert!(!equivalent(&f7, &p1, 8, &pol()).unwrap());
        assert!(!equivalent(&p1, &f7, 8, &pol()).unwrap());
        assert!(!equivalent(&f7, &bjorck7(), 8, &pol()).unwrap());
    }

    #[test]
    fn haagerup_sets_differ_for_f7_and_petrescu() {
        // Independent certificate: every Haagerup invariant of F7 is a 7th
        // root of unity, Petrescu's matrix has one that is not.
        let f = fourier::<f64>(7).unwrap();
        let (re, im) = haagerup_fingerprint(&f);
        assert_eq!(re.len(), 7usize.pow(4));
        assert_eq!(im.len(), re.len());
        let p = petrescu_angle(0.0);
        let n = 7;
        let mut found_non_root = false;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let z = p[(i, j)] * p[(k, j)].conj() * p[(k, l)] * p[(i, l)].conj() * 49.0;
                        if (z.powu(7) - C::new(1.0, 0.0)).norm() > 1e-6 {
                            found_non_root = true;
                        }
                        let zf = f[(i, j)] * f[(k, j)].conj() * f[(k, l)] * f[(i, l)].conj() * 49.0;
                        assert!((zf.powu(7) - C::new(1.0, 0.0)).norm() < 1e-10);
                    }
                }
            }
        }
        assert!(found_non_root);
    }

    #[test]
    fn order_limit() {
        let f = fourier::<f64>(9).unwrap();
        assert_eq!(equivalent(&f, &f, 8, &pol()), Err(Error::TooLarge { n: 9, limit: 8 }));
        let f2 = fourier::<f64>(2).unwrap();
        assert!(equivalent(&f2, &fourier(3).unwrap(), 8, &pol()).is_err());
    }

    #[test]
    fn family_members_separated() {
        // 1 and e^{0.8i} members of the Petrescu family are not equivalent.
        assert!(!equivalent(&petrescu_angle(0.0), &petrescu_angle(0.8), 8, &pol()).unwrap());
    }
}
