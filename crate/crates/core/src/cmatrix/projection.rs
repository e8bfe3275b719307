use std::fmt;

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::CMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Diagonal projection `Σ_{k ∈ mask} A_{k,k}`, stored as a 0/1 mask.
///
/// Serializes as the sorted list of its 0-based indices; the order `n` is
/// carried by the surrounding record.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DiagProjection {
    mask: Vec<bool>,
}

impl DiagProjection {
    pub fn empty(n: usize) -> Self {
        Self { mask: vec![false; n] }
    }

    pub fn full(n: usize) -> Self {
        Self { mask: vec![true; n] }
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        Self { mask }
    }

    pub fn from_indices(n: usize, indices: &[usize]) -> Result<Self> {
        let mut mask = vec![false; n];
        for &i in indices {
            if i >= n {
                return Err(Error::InvalidMask(format!("index {i} out of range for order {n}")));
            }
            if mask[i] {
                return Err(Error::InvalidMask(format!("index {i} repeated")));
            }
            mask[i] = true;
        }
        Ok(Self { mask })
    }

    /// Bit `k` of `bits` selects index `k`.
    pub fn from_bits(n: usize, bits: u64) -> Self {
        Self { mask: (0..n).map(|k| bits >> k & 1 == 1).collect() }
    }

    pub fn order(&self) -> usize {
        self.mask.len()
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn contains(&self, k: usize) -> bool {
        self.mask[k]
    }

    pub fn indices(&self) -> Vec<usize> {
        self.mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
    }

    pub fn rank(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    /// Neither 0 nor the identity.
    pub fn is_nontrivial(&self) -> bool {
        let r = self.rank();
        r > 0 && r < self.mask.len()
    }

    pub fn complement(&self) -> Self {
        Self { mask: self.mask.iter().map(|b| !b).collect() }
    }

    /// `p·q = 0`.
    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.mask.iter().zip(&other.mask).all(|(a, b)| !(a & b))
    }

    pub fn diagonal<T: Real>(&self) -> Vec<Complex<T>> {
        self.mask.iter().map(|&b| if b { Complex::one() } else { Complex::zero() }).collect()
    }

    pub fn to_matrix<T: Real>(&self) -> CMatrix<T> {
        CMatrix::from_diagonal(&self.diagonal())
    }

    /// `U·diag(mask)·U†`, a projection in `U D U†`.
    pub fn conjugate_by<T: Real>(&self, u: &CMatrix<T>) -> CMatrix<T> {
        let n = u.rows();
        let idx = self.indices();
        CMatrix::from_fn(n, n, |i, j| idx.iter().fold(Complex::zero(), |acc, &k| acc + u[(i, k)] * u[(j, k)].conj()))
    }
}

impl fmt::Debug for DiagProjection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DiagProjection(n={}, {:?})", self.order(), self.indices())
    }
}

impl Serialize for DiagProjection {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.indices().serialize(s)
    }
}

/// Index lists deserialize into a mask just long enough to hold them;
/// callers resize with [`DiagProjection::with_order`].
impl<'de> Deserialize<'de> for DiagProjection {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let idx = Vec::<usize>::deserialize(d)?;
        let n = idx.iter().max().map_or(0, |m| m + 1);
        Self::from_indices(n, &idx).map_err(serde::de::Error::custom)
    }
}

impl DiagProjection {
    /// Same indices, order `n`. Fails if an index does not fit.
    pub fn with_order(&self, n: usize) -> Result<Self> {
        Self::from_indices(n, &self.indices())
    }
}
