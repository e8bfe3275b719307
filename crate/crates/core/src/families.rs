//! Witnesses that break the span condition, and the one-parameter families
//! of biunitaries they generate.
//!
//! Projections in `D` are 0/1 masks `p`. Projections in the conjugated
//! diagonal algebra are written `q = U·diag(d)·U†` for a mask `d`; this is
//! the conjugation under which `(I + (λ−1)p₁q₁ + (λ̄−1)p₂q₂)·U` reproduces
//! Petrescu's order-7 family.
//!
//! * Commuting pair `(p, q)`, `[p, q] = 0`: `V(t)·U` with `V(t) = exp(i·t·pq)`.
//! * Block quadruple `(p₁, p₂, q₁, q₂)`, `p₁p₂ = q₁q₂ = 0`,
//!   `[p₁, q₁] = [p₂, q₂]`: `(I + (λ−1)p₁q₁ + (λ̄−1)p₂q₂)·U`, which multiplies
//!   the `p₁ × d₁` block of `U` by `λ` and the `p₂ × d₂` block by `λ̄`.

use std::collections::BTreeSet;

use num_complex::Complex;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cmatrix::{null_space, CMatrix, DiagProjection};
use crate::error::{Error, Result};
use crate::hadamard::require_biunitary;
use crate::policy::NumericPolicy;
use crate::scalar::Real;

pub const COMMUTING_SEARCH_LIMIT: usize = 14;
pub const BLOCK_SEARCH_LIMIT: usize = 10;
/// Refuse to enumerate more than `2^MAX_FREE_BITS` 0/1 points of a null space.
const MAX_FREE_BITS: usize = 22;

#[derive(Debug, Clone, PartialEq)]
pub struct CommutingPairSpec<T> {
    pub base: CMatrix<T>,
    pub p_mask: DiagProjection,
    pub d_mask: DiagProjection,
    /// `‖[p, U·diag(d)·U†]‖_F`.
    pub residual: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockPairSpec<T> {
    pub base: CMatrix<T>,
    pub p1_mask: DiagProjection,
    pub p2_mask: DiagProjection,
    pub d1_mask: DiagProjection,
    pub d2_mask: DiagProjection,
    /// `‖[p₁, q₁] − [p₂, q₂]‖_F`.
    pub residual: T,
}

pub fn commuting_residual<T: Real>(u: &CMatrix<T>, p: &DiagProjection, d: &DiagProjection) -> T {
    let q = d.conjugate_by(u);
    masked_commutator(p, &q).frobenius_norm()
}

pub fn block_residual<T: Real>(
    u: &CMatrix<T>,
    p1: &DiagProjection,
    p2: &DiagProjection,
    d1: &DiagProjection,
    d2: &DiagProjection,
) -> T {
    let c1 = masked_commutator(p1, &d1.conjugate_by(u));
    let c2 = masked_commutator(p2, &d2.conjugate_by(u));
    (&c1 - &c2).frobenius_norm()
}

/// `[p, q]_{ab} = (p_a − p_b)·q_ab` for a diagonal projection `p`.
fn masked_commutator<T: Real>(p: &DiagProjection, q: &CMatrix<T>) -> CMatrix<T> {
    let n = q.rows();
    CMatrix::from_fn(n, n, |a, b| match (p.contains(a), p.contains(b)) {
        (true, false) => q[(a, b)],
        (false, true) => -q[(a, b)],
        _ => Complex::zero(),
    })
}

fn check_masks(n: usize, masks: &[&DiagProjection]) -> Result<()> {
    for m in masks {
        if m.order() != n {
            return Err(Error::InvalidMask(format!("mask of order {} for a matrix of order {n}", m.order())));
        }
        if !m.is_nontrivial() {
            return Err(Error::InvalidMask(format!("{:?} is trivial", m.indices())));
        }
    }
    Ok(())
}

impl<T: Real> CommutingPairSpec<T> {
    /// Builds the spec and records its residual; certification is separate.
    pub fn new(base: CMatrix<T>, p_mask: DiagProjection, d_mask: DiagProjection) -> Result<Self> {
        let n = base.require_square()?;
        check_masks(n, &[&p_mask, &d_mask])?;
        let residual = commuting_residual(&base, &p_mask, &d_mask);
        Ok(Self { base, p_mask, d_mask, residual })
    }

    pub fn p(&self) -> CMatrix<T> {
        self.p_mask.to_matrix()
    }

    pub fn q(&self) -> CMatrix<T> {
        self.d_mask.conjugate_by(&self.base)
    }

    fn require_certified(&self, policy: &NumericPolicy<T>) -> Result<()> {
        let residual = commuting_residual(&self.base, &self.p_mask, &self.d_mask);
        if !(residual <= policy.tol_unitary) {
            return Err(uncertified(residual, policy.tol_unitary));
        }
        Ok(())
    }
}

impl<T: Real> BlockPairSpec<T> {
    pub fn new(
        base: CMatrix<T>,
        p1_mask: DiagProjection,
        p2_mask: DiagProjection,
        d1_mask: DiagProjection,
        d2_mask: DiagProjection,
    ) -> Result<Self> {
        let n = base.require_square()?;
        check_masks(n, &[&p1_mask, &p2_mask, &d1_mask, &d2_mask])?;
        if !p1_mask.is_disjoint(&p2_mask) || !d1_mask.is_disjoint(&d2_mask) {
            return Err(Error::InvalidMask("p1·p2 and d1·d2 must vanish".into()));
        }
        let residual = block_residual(&base, &p1_mask, &p2_mask, &d1_mask, &d2_mask);
        Ok(Self { base, p1_mask, p2_mask, d1_mask, d2_mask, residual })
    }

    pub fn q1(&self) -> CMatrix<T> {
        self.d1_mask.conjugate_by(&self.base)
    }

    pub fn q2(&self) -> CMatrix<T> {
        self.d2_mask.conjugate_by(&self.base)
    }

    fn require_certified(&self, policy: &NumericPolicy<T>) -> Result<()> {
        let residual = block_residual(&self.base, &self.p1_mask, &self.p2_mask, &self.d1_mask, &self.d2_mask);
        if !(residual <= policy.tol_unitary) {
            return Err(uncertified(residual, policy.tol_unitary));
        }
        Ok(())
    }
}

fn uncertified<T: Real>(residual: T, tol: T) -> Error {
    Error::Uncertified { residual: residual.to_f64().unwrap_or(f64::NAN), tol: tol.to_f64().unwrap_or(f64::NAN) }
}

/// All commuting pairs `(p, q = U·diag(d)·U†)` of non-trivial 0/1 masks.
///
/// For each `p` the real solutions `x` of `[p, U·diag(x)·U†] = 0` form a
/// subspace; its 0/1 points are enumerated through the pivot coordinates of
/// a reduced basis. Both masks are reported with index 0 excluded (the
/// complement gives the same pair up to sign).
pub fn find_commuting_pairs<T: Real>(u: &CMatrix<T>, policy: &NumericPolicy<T>) -> Result<Vec<CommutingPairSpec<T>>> {
    policy.validate()?;
    let n = u.require_square()?;
    if n > COMMUTING_SEARCH_LIMIT {
        return Err(Error::TooLarge { n, limit: COMMUTING_SEARCH_LIMIT });
    }
    require_biunitary(u, policy)?;
    if n < 2 {
        return Ok(Vec::new());
    }
    let outer: Vec<u64> = (1..(1u64 << n)).filter(|b| b & 1 == 0).collect();
    let found: Vec<Vec<(DiagProjection, DiagProjection)>> = outer
        .par_iter()
        .map(|&bits| -> Result<Vec<(DiagProjection, DiagProjection)>> {
            let p = DiagProjection::from_bits(n, bits);
            let system = commuting_system(u, &p);
            let basis = null_space(&system, policy.rank_rel_cut);
            let mut out = Vec::new();
            for x in binary_points(&basis)? {
                let mut d = DiagProjection::from_mask(x);
                if !d.is_nontrivial() {
                    continue;
                }
                if d.contains(0) {
                    d = d.complement();
                }
                if commuting_residual(u, &p, &d) <= policy.tol_unitary {
                    out.push((p.clone(), d));
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let unique: BTreeSet<(Vec<usize>, Vec<usize>)> =
        found.into_iter().flatten().map(|(p, d)| (p.indices(), d.indices())).collect();
    unique
        .into_iter()
        .map(|(p, d)| {
            CommutingPairSpec::new(
                u.clone(),
                DiagProjection::from_indices(n, &p)?,
                DiagProjection::from_indices(n, &d)?,
            )
        })
        .collect()
}

/// Real-linear map `x ↦ [p, U·diag(x)·U†]` restricted to its nonzero
/// entries `(a ∈ p, b ∉ p)`, split into real and imaginary rows.
fn commuting_system<T: Real>(u: &CMatrix<T>, p: &DiagProjection) -> CMatrix<T> {
    let n = u.order();
    let mut rows: Vec<Vec<T>> = Vec::new();
    for a in (0..n).filter(|&a| p.contains(a)) {
        for b in (0..n).filter(|&b| !p.contains(b)) {
            let coeffs: Vec<Complex<T>> = (0..n).map(|k| u[(a, k)] * u[(b, k)].conj()).collect();
            rows.push(coeffs.iter().map(|z| z.re).collect());
            rows.push(coeffs.iter().map(|z| z.im).collect());
        }
    }
    real_matrix(rows, n)
}

/// All block quadruples with `p₁p₂ = 0`, `d₁d₂ = 0`, every mask non-trivial
/// and `[p₁, q₁] = [p₂, q₂]`. The swap `(1 ↔ 2)` is factored out by
/// requiring `min p₁ < min p₂`.
///
/// Quadruples with `p₂ = 1 − p₁` and `q₂ = 1 − q₁` satisfy the relation for
/// every `U`, and their family is a diagonal rephasing of `U`; they are
/// skipped.
pub fn find_block_pairs<T: Real>(u: &CMatrix<T>, policy: &NumericPolicy<T>) -> Result<Vec<BlockPairSpec<T>>> {
    policy.validate()?;
    let n = u.require_square()?;
    if n > BLOCK_SEARCH_LIMIT {
        return Err(Error::TooLarge { n, limit: BLOCK_SEARCH_LIMIT });
    }
    require_biunitary(u, policy)?;
    let total = 3usize.pow(n as u32);
    let outer: Vec<(DiagProjection, DiagProjection)> = (0..total)
        .filter_map(|code| {
            let (mut m1, mut m2) = (vec![false; n], vec![false; n]);
            let mut c = code;
            for k in 0..n {
                match c % 3 {
                    1 => m1[k] = true,
                    2 => m2[k] = true,
                    _ => {}
                }
                c /= 3;
            }
            let (p1, p2) = (DiagProjection::from_mask(m1), DiagProjection::from_mask(m2));
            let first = |p: &DiagProjection| p.mask().iter().position(|&b| b);
            match (first(&p1), first(&p2)) {
                (Some(a), Some(b)) if a < b => Some((p1, p2)),
                _ => None,
            }
        })
        .collect();

    type Quad = (DiagProjection, DiagProjection, DiagProjection, DiagProjection);
    let found: Vec<Vec<Quad>> = outer
        .par_iter()
        .map(|(p1, p2)| -> Result<Vec<Quad>> {
            let p_split = p1.rank() + p2.rank() == n;
            let system = block_system(u, p1, p2);
            let basis = null_space(&system, policy.rank_rel_cut);
            let mut out = Vec::new();
            for x in binary_points(&basis)? {
                let d1 = DiagProjection::from_mask(x[..n].to_vec());
                let d2 = DiagProjection::from_mask(x[n..].to_vec());
                if !d1.is_nontrivial() || !d2.is_nontrivial() || !d1.is_disjoint(&d2) {
                    continue;
                }
                if p_split && d1.rank() + d2.rank() == n {
                    continue;
                }
                if block_residual(u, p1, p2, &d1, &d2) <= policy.tol_unitary {
                    out.push((p1.clone(), p2.clone(), d1, d2));
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let unique: BTreeSet<[Vec<usize>; 4]> =
        found.into_iter().flatten().map(|(a, b, c, d)| [a.indices(), b.indices(), c.indices(), d.indices()]).collect();
    unique
        .into_iter()
        .map(|[a, b, c, d]| {
            BlockPairSpec::new(
                u.clone(),
                DiagProjection::from_indices(n, &a)?,
                DiagProjection::from_indices(n, &b)?,
                DiagProjection::from_indices(n, &c)?,
                DiagProjection::from_indices(n, &d)?,
            )
        })
        .collect()
}

/// Real-linear map `(x, y) ↦ [p₁, U·diag(x)·U†] − [p₂, U·diag(y)·U†]` on the
/// upper triangle (the lower one is its negated conjugate).
fn block_system<T: Real>(u: &CMatrix<T>, p1: &DiagProjection, p2: &DiagProjection) -> CMatrix<T> {
    let n = u.order();
    let ind = |p: &DiagProjection, k: usize| if p.contains(k) { T::one() } else { T::zero() };
    let mut rows: Vec<Vec<T>> = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            let c1 = ind(p1, a) - ind(p1, b);
            let c2 = ind(p2, a) - ind(p2, b);
            if c1.is_zero() && c2.is_zero() {
                continue;
            }
            let g: Vec<Complex<T>> = (0..n).map(|k| u[(a, k)] * u[(b, k)].conj()).collect();
            let mut re = Vec::with_capacity(2 * n);
            let mut im = Vec::with_capacity(2 * n);
            for z in &g {
                re.push(z.re * c1);
                im.push(z.im * c1);
            }
            for z in &g {
                re.push(-z.re * c2);
                im.push(-z.im * c2);
            }
            rows.push(re);
            rows.push(im);
        }
    }
    real_matrix(rows, 2 * n)
}

fn real_matrix<T: Real>(rows: Vec<Vec<T>>, cols: usize) -> CMatrix<T> {
    let r = rows.len();
    CMatrix::from_fn(r, cols, |i, j| Complex::new(rows[i][j], T::zero()))
}

/// 0/1 vectors inside the column span of a real basis.
///
/// Row-reduces the basis so that every span element is fixed by its values
/// on the pivot coordinates, then tries every 0/1 assignment of those.
fn binary_points<T: Real>(basis: &CMatrix<T>) -> Result<Vec<Vec<bool>>> {
    let (n, r) = (basis.rows(), basis.cols());
    if r == 0 {
        return Ok(vec![vec![false; n]]);
    }
    let mut m: Vec<Vec<T>> = (0..r).map(|j| (0..n).map(|i| basis[(i, j)].re).collect()).collect();
    let tol = T::lit(1e-8);
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..n {
        if row == r {
            break;
        }
        let (best, val) =
            (row..r).map(|i| (i, m[i][col].abs())).fold((row, T::zero()), |acc, x| if x.1 > acc.1 { x } else { acc });
        if val <= tol {
            continue;
        }
        m.swap(row, best);
        let pv = m[row][col];
        for x in m[row].iter_mut() {
            *x = *x / pv;
        }
        for i in 0..r {
            if i != row {
                let f = m[i][col];
                if !f.is_zero() {
                    for j in 0..n {
                        let v = m[row][j];
                        m[i][j] = m[i][j] - f * v;
                    }
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    let k = pivots.len();
    if k > MAX_FREE_BITS {
        return Err(Error::TooLarge { n: k, limit: MAX_FREE_BITS });
    }
    let snap = T::lit(1e-6);
    let mut out = Vec::new();
    'outer: for bits in 0u64..(1u64 << k) {
        let mut x = vec![false; n];
        for (j, slot) in x.iter_mut().enumerate() {
            let v = (0..k).filter(|&i| bits >> i & 1 == 1).fold(T::zero(), |acc, i| acc + m[i][j]);
            if (v - T::one()).abs() <= snap {
                *slot = true;
            } else if v.abs() > snap {
                continue 'outer;
            }
        }
        out.push(x);
    }
    Ok(out)
}

/// `exp(i·t·p₀q₀)·U`. `t = 0` returns the base unchanged.
pub fn constr1_family<T: Real>(spec: &CommutingPairSpec<T>, t: T, policy: &NumericPolicy<T>) -> Result<CMatrix<T>> {
    spec.require_certified(policy)?;
    if t.is_zero() {
        return Ok(spec.base.clone());
    }
    let pq = spec.p().matmul(&spec.q())?;
    // pq is Hermitian up to the certified residual; drop the skew part
    let h = (&pq + &pq.adjoint()).scale(Complex::new(T::lit(0.5), T::zero()));
    let v = h.expi_hermitian(t, policy.tol_unitary)?;
    let out = v.matmul(&spec.base)?;
    require_biunitary(&out, policy)?;
    Ok(out)
}

/// `U(λ) = I + (λ−1)p₁q₁ + (λ̄−1)p₂q₂`, the unitary that drives the block family.
pub fn constr2_unitary<T: Real>(spec: &BlockPairSpec<T>, lambda: Complex<T>) -> Result<CMatrix<T>> {
    let n = spec.base.order();
    let one = Complex::<T>::one();
    let t1 = spec.p1_mask.to_matrix().matmul(&spec.q1())?.scale(lambda - one);
    let t2 = spec.p2_mask.to_matrix().matmul(&spec.q2())?.scale(lambda.conj() - one);
    Ok(&(&CMatrix::identity(n) + &t1) + &t2)
}

/// `U(λ)·U`, computed as the equivalent block phase multiplication:
/// entries in rows `p₁` × columns `d₁` pick up `λ`, rows `p₂` × columns `d₂`
/// pick up `λ̄`.
pub fn constr2_family<T: Real>(
    spec: &BlockPairSpec<T>,
    lambda: Complex<T>,
    policy: &NumericPolicy<T>,
) -> Result<CMatrix<T>> {
    let dev = (lambda.norm() - T::one()).abs();
    if !(dev <= policy.tol_entry) {
        return Err(Error::NotUnimodular(lambda.norm().to_f64().unwrap_or(f64::NAN)));
    }
    spec.require_certified(policy)?;
    if lambda == Complex::one() {
        return Ok(spec.base.clone());
    }
    let b = &spec.base;
    let n = b.order();
    let out = CMatrix::from_fn(n, n, |i, j| {
        if spec.p1_mask.contains(i) && spec.d1_mask.contains(j) {
            b[(i, j)] * lambda
        } else if spec.p2_mask.contains(i) && spec.d2_mask.contains(j) {
            b[(i, j)] * lambda.conj()
        } else {
            b[(i, j)]
        }
    });
    require_biunitary(&out, policy)?;
    Ok(out)
}

/// `‖p₁q₁p₁ + p₂q₂p₂ − q₁p₁ − p₂q₂‖_F`, which vanishes whenever
/// `[p₁, q₁] = [p₂, q₂]`; it is the identity behind the unitarity of `U(λ)`.
pub fn verify_unitarity_identity<T: Real>(spec: &BlockPairSpec<T>) -> T {
    let p1 = spec.p1_mask.to_matrix::<T>();
    let p2 = spec.p2_mask.to_matrix::<T>();
    let q1 = spec.q1();
    let q2 = spec.q2();
    let lhs = &(&(&p1 * &q1) * &p1) + &(&(&p2 * &q2) * &p2);
    let rhs = &(&q1 * &p1) + &(&p2 * &q2);
    (&lhs - &rhs).frobenius_norm()
}

/// JSON form of a family witness. Masks are sorted 0-based index lists,
/// `base` names the matrix the witness was found on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpecRecord {
    /// `"constr1"` (commuting pair) or `"constr2"` (block quadruple).
    pub theorem: String,
    pub n: usize,
    pub base: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p1: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p2: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d1: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d2: Option<Vec<usize>>,
    pub residual: f64,
}

/// A parsed witness bound to its base matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilySpec<T> {
    Constr1(CommutingPairSpec<T>),
    Constr2(BlockPairSpec<T>),
}

impl<T: Real> FamilySpec<T> {
    pub fn base(&self) -> &CMatrix<T> {
        match self {
            Self::Constr1(s) => &s.base,
            Self::Constr2(s) => &s.base,
        }
    }

    pub fn to_record(&self, base: &str) -> FamilySpecRecord {
        let mut r = FamilySpecRecord {
            theorem: String::new(),
            n: self.base().order(),
            base: base.to_owned(),
            p: None,
            d: None,
            p1: None,
            p2: None,
            d1: None,
            d2: None,
            residual: 0.0,
        };
        match self {
            Self::Constr1(s) => {
                r.theorem = "constr1".into();
                r.p = Some(s.p_mask.indices());
                r.d = Some(s.d_mask.indices());
                r.residual = s.residual.to_f64().unwrap_or(f64::NAN);
            }
            Self::Constr2(s) => {
                r.theorem = "constr2".into();
                r.p1 = Some(s.p1_mask.indices());
                r.p2 = Some(s.p2_mask.indices());
                r.d1 = Some(s.d1_mask.indices());
                r.d2 = Some(s.d2_mask.indices());
                r.residual = s.residual.to_f64().unwrap_or(f64::NAN);
            }
        }
        r
    }

    /// Rebinds a record to `base`; the residual is recomputed, not trusted.
    pub fn from_record(record: &FamilySpecRecord, base: CMatrix<T>) -> Result<Self> {
        let n = base.require_square()?;
        if n != record.n {
            return Err(Error::OrderMismatch { left: record.n, right: n });
        }
        let mask = |m: &Option<Vec<usize>>, name: &str| -> Result<DiagProjection> {
            let idx = m.as_ref().ok_or_else(|| Error::Parse(format!("missing mask `{name}`")))?;
            DiagProjection::from_indices(n, idx)
        };
        match record.theorem.as_str() {
            "constr1" => Ok(Self::Constr1(CommutingPairSpec::new(base, mask(&record.p, "p")?, mask(&record.d, "d")?)?)),
            "constr2" => Ok(Self::Constr2(BlockPairSpec::new(
                base,
                mask(&record.p1, "p1")?,
                mask(&record.p2, "p2")?,
                mask(&record.d1, "d1")?,
                mask(&record.d2, "d2")?,
            )?)),
            other => Err(Error::Parse(format!("unknown theorem tag `{other}`"))),
        }
    }

    /// Family member at parameter `param`: `t` for constr1, the angle of `λ`
    /// for constr2.
    pub fn member(&self, param: T, policy: &NumericPolicy<T>) -> Result<CMatrix<T>> {
        match self {
            Self::Constr1(s) => constr1_family(s, param, policy),
            Self::Constr2(s) => constr2_family(s, crate::scalar::cis(param), policy),
        }
    }

    pub fn residual(&self) -> T {
        match self {
            Self::Constr1(s) => s.residual,
            Self::Constr2(s) => s.residual,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hadamard::{fourier, petrescu, petrescu_angle, verify_biunitary};
    use crate::spancert::{certify_isolation, Verdict};

    type M = CMatrix<f64>;
    type C = Complex<f64>;

    fn pol() -> NumericPolicy<f64> {
        NumericPolicy::default()
    }

    fn mask(n: usize, idx: &[usize]) -> DiagProjection {
        DiagProjection::from_indices(n, idx).unwrap()
    }

    fn petrescu_spec() -> BlockPairSpec<f64> {
        BlockPairSpec::new(petrescu_angle(0.0), mask(7, &[0, 1]), mask(7, &[2, 3]), mask(7, &[0, 1]), mask(7, &[2, 3]))
            .unwrap()
    }

    /// Exhaustive oracle: every (p, d) pair of masks, residual checked directly.
    fn brute_force_commuting(u: &M) -> BTreeSet<(Vec<usize>, Vec<usize>)> {
        let n = u.order();
        let mut out = BTreeSet::new();
        for pb in 1..(1u64 << n) - 1 {
            for db in 1..(1u64 << n) - 1 {
                let p = DiagProjection::from_bits(n, pb);
                let d = DiagProjection::from_bits(n, db);
                if p.contains(0) || d.contains(0) {
                    continue;
                }
                if commuting_residual(u, &p, &d) < 1e-9 {
                    out.insert((p.indices(), d.indices()));
                }
            }
        }
        out
    }

    #[test]
    fn commuting_pairs_match_brute_force() {
        for n in [4, 5, 6] {
            let u = fourier::<f64>(n).unwrap();
            let got: BTreeSet<_> = find_commuting_pairs(&u, &pol())
                .unwrap()
                .into_iter()
                .map(|s| (s.p_mask.indices(), s.d_mask.indices()))
                .collect();
            assert_eq!(got, brute_force_commuting(&u), "n = {n}");
        }
    }

    #[test]
    fn fourier4_has_the_subgroup_pair() {
        let pairs = find_commuting_pairs(&fourier::<f64>(4).unwrap(), &pol()).unwrap();
        let hit = pairs.iter().find(|s| s.p_mask.indices() == vec![1, 3]).expect("p = {1,3}");
        assert!(hit.residual < 1e-12);
        assert!(find_commuting_pairs(&fourier::<f64>(5).unwrap(), &pol()).unwrap().is_empty());
    }

    #[test]
    fn trivial_masks_rejected() {
        let u = fourier::<f64>(4).unwrap();
        assert!(CommutingPairSpec::new(u.clone(), DiagProjection::full(4), mask(4, &[1])).is_err());
        assert!(BlockPairSpec::new(u.clone(), mask(4, &[1]), mask(4, &[1]), mask(4, &[0]), mask(4, &[2])).is_err());
        assert!(matches!(
            find_commuting_pairs(&fourier::<f64>(15).unwrap(), &pol()),
            Err(Error::TooLarge { n: 15, limit: 14 })
        ));
        assert!(find_commuting_pairs(&M::identity(3), &pol()).is_err());
    }

    #[test]
    fn constr1_cases() {
        let u = fourier::<f64>(4).unwrap();
        let spec = find_commuting_pairs(&u, &pol()).unwrap().remove(0);
        assert_eq!(constr1_family(&spec, 0.0, &pol()).unwrap(), u);
        for t in [0.3, 1.0, 2.7] {
            let v = constr1_family(&spec, t, &pol()).unwrap();
            assert!(verify_biunitary(&v, &pol()).unwrap().is_biunitary);
        }
        // pq is a projection, so the family is 2π-periodic
        let a = constr1_family(&spec, 0.4, &pol()).unwrap();
        let b = constr1_family(&spec, 0.4 + std::f64::consts::TAU, &pol()).unwrap();
        assert!((&a - &b).frobenius_norm() < 1e-12);
        assert_ne!(certify_isolation(&u, &pol()).unwrap().verdict, Verdict::Isolated);
    }

    #[test]
    fn constr1_rejects_uncertified() {
        let u = fourier::<f64>(5).unwrap();
        let spec = CommutingPairSpec::new(u, mask(5, &[1]), mask(5, &[2])).unwrap();
        assert!(matches!(constr1_family(&spec, 0.5, &pol()), Err(Error::Uncertified { .. })));
    }

    #[test]
    fn petrescu_quadruple_found() {
        let spec = petrescu_spec();
        assert!(spec.residual < 1e-12);
        let found = find_block_pairs(&petrescu_angle(0.0), &pol()).unwrap();
        assert!(found.iter().any(|s| s.p1_mask == spec.p1_mask
            && s.p2_mask == spec.p2_mask
            && s.d1_mask == spec.d1_mask
            && s.d2_mask == spec.d2_mask));
        for s in &found {
            assert!(verify_unitarity_identity(s) < 1e-12);
        }
    }

    fn brute_force_blocks(u: &M) -> BTreeSet<[Vec<usize>; 4]> {
        let n = u.order();
        let all: Vec<DiagProjection> = (1..(1u64 << n) - 1).map(|b| DiagProjection::from_bits(n, b)).collect();
        let mut out = BTreeSet::new();
        for p1 in &all {
            for p2 in all.iter().filter(|p2| p1.is_disjoint(p2) && p1.indices()[0] < p2.indices()[0]) {
                for d1 in &all {
                    for d2 in all.iter().filter(|d2| d1.is_disjoint(d2)) {
                        let split = p1.rank() + p2.rank() == n && d1.rank() + d2.rank() == n;
                        if !split && block_residual(u, p1, p2, d1, d2) < 1e-9 {
                            out.insert([p1.indices(), p2.indices(), d1.indices(), d2.indices()]);
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn block_pairs_match_brute_force() {
        for u in [fourier::<f64>(4).unwrap(), fourier(5).unwrap(), fourier(6).unwrap()] {
            let got: BTreeSet<_> = find_block_pairs(&u, &pol())
                .unwrap()
                .into_iter()
                .map(|s| [s.p1_mask.indices(), s.p2_mask.indices(), s.d1_mask.indices(), s.d2_mask.indices()])
                .collect();
            assert_eq!(got, brute_force_blocks(&u), "n = {}", u.order());
        }
    }

    #[test]
    fn complementary_quadruple_is_a_rephasing() {
        let u = fourier::<f64>(5).unwrap();
        let spec =
            BlockPairSpec::new(u.clone(), mask(5, &[0, 2]), mask(5, &[1, 3, 4]), mask(5, &[1]), mask(5, &[0, 2, 3, 4]))
                .unwrap();
        assert!(spec.residual < 1e-12);
        let v = constr2_family(&spec, C::from_polar(1.0, 0.7), &pol()).unwrap();
        assert!(crate::hadamard::equivalent(&u, &v, 8, &pol()).unwrap());
    }

    #[test]
    fn fourier7_has_no_quadruples() {
        assert!(find_block_pairs(&fourier::<f64>(7).unwrap(), &pol()).unwrap().is_empty());
    }

    #[test]
    fn constr2_reproduces_petrescu() {
        let spec = petrescu_spec();
        assert_eq!(constr2_family(&spec, C::new(1.0, 0.0), &pol()).unwrap(), spec.base);
        for k in 0..8 {
            let theta = -3.0 + 0.77 * k as f64;
            let lam = C::from_polar(1.0, theta);
            let v = constr2_family(&spec, lam, &pol()).unwrap();
            assert!((&v - &petrescu(lam).unwrap()).frobenius_norm() < 1e-12);
            // matrix formula route
            let ul = constr2_unitary(&spec, lam).unwrap();
            assert!(ul.unitarity_residual() < 1e-12);
            assert!((&ul.matmul(&spec.base).unwrap() - &v).frobenius_norm() < 1e-12);
            for (a, b) in v.as_slice().iter().zip(spec.base.as_slice()) {
                assert!((a.norm() - b.norm()).abs() < 1e-15);
            }
        }
        assert!(matches!(constr2_family(&spec, C::new(0.5, 0.0), &pol()), Err(Error::NotUnimodular(_))));
    }

    #[test]
    fn unitarity_identity_cases() {
        assert!(verify_unitarity_identity(&petrescu_spec()) < 1e-12);
        // uncertified masks on the same base
        let bad = BlockPairSpec::new(
            petrescu_angle(0.0),
            mask(7, &[0, 4]),
            mask(7, &[2, 5]),
            mask(7, &[1, 3]),
            mask(7, &[0, 6]),
        )
        .unwrap();
        assert!(bad.residual > 0.1);
        assert!(verify_unitarity_identity(&bad) > 0.1);
        assert!(matches!(constr2_family(&bad, C::new(0.0, 1.0), &pol()), Err(Error::Uncertified { .. })));
    }

    #[test]
    fn unitarity_identity_zero_projections() {
        // p₁ = q₁ = p₂ = q₂ = 0 through empty masks (bypassing the constructor check).
        let spec = BlockPairSpec {
            base: fourier::<f64>(3).unwrap(),
            p1_mask: DiagProjection::empty(3),
            p2_mask: DiagProjection::empty(3),
            d1_mask: DiagProjection::empty(3),
            d2_mask: DiagProjection::empty(3),
            residual: 0.0,
        };
        assert_eq!(verify_unitarity_identity(&spec), 0.0);
    }

    #[test]
    fn record_round_trip() {
        let spec = FamilySpec::Constr2(petrescu_spec());
        let rec = spec.to_record("petrescu.txt");
        let json = serde_json::to_string(&rec).unwrap();
        assert!(json.starts_with("{\"theorem\":\"constr2\",\"n\":7,\"base\":\"petrescu.txt\",\"p1\":[0,1]"));
        let back: FamilySpecRecord = serde_json::from_str(&json).unwrap();
        let again = FamilySpec::from_record(&back, petrescu_angle(0.0)).unwrap();
        assert_eq!(again, spec);
        assert!(FamilySpec::<f64>::from_record(&back, fourier(5).unwrap()).is_err());
    }
}
