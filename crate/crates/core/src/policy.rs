use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Tolerances used by verification, rank decisions and certification.
///
/// Field order is the canonical JSON key order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericPolicy<T> {
    /// Allowed deviation of `|u_ij|·√n` from 1.
    pub tol_entry: T,
    /// Allowed `‖UU† − I‖_F`.
    pub tol_unitary: T,
    /// Singular values below `rank_rel_cut · σ_max` count as zero.
    pub rank_rel_cut: T,
    /// Minimum `σ_rank / σ_{rank+1}` for a decisive certificate.
    pub cert_gap_min: T,
}

impl<T: Real> Default for NumericPolicy<T> {
    fn default() -> Self {
        Self {
            tol_entry: T::lit(1e-9),
            tol_unitary: T::lit(1e-9),
            rank_rel_cut: T::lit(1e-8),
            cert_gap_min: T::lit(1e4),
        }
    }
}

impl<T: Real> NumericPolicy<T> {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("tol_entry", self.tol_entry),
            ("tol_unitary", self.tol_unitary),
            ("rank_rel_cut", self.rank_rel_cut),
            ("cert_gap_min", self.cert_gap_min),
        ];
        for (name, v) in fields {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidPolicy(format!("{name} must be strictly positive and finite")));
            }
        }
        if self.rank_rel_cut >= T::one() {
            return Err(Error::InvalidPolicy("rank_rel_cut must be < 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        NumericPolicy::<f64>::default().validate().unwrap();
        NumericPolicy::<f32>::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_fields() {
        let d = NumericPolicy::<f64>::default();
        assert!(NumericPolicy { rank_rel_cut: 1.0, ..d }.validate().is_err());
        assert!(NumericPolicy { tol_entry: 0.0, ..d }.validate().is_err());
        assert!(NumericPolicy { cert_gap_min: f64::NAN, ..d }.validate().is_err());
    }
}
