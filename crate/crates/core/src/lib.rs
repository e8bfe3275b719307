//! Complex Hadamard (biunitary) matrices treated as spin-model commuting
//! squares `D ⊂ M_n(ℂ) ⊃ U*DU`.
//!
//! * [`cmatrix`]: dense complex matrix kernel (products, commutators,
//!   Hermitian exponential, SVD-based numerical rank).
//! * [`hadamard`]: constructors, biunitarity checks, dephasing, equivalence.
//! * [`spancert`]: span-condition rank test and isolation certificates.
//! * [`families`]: commuting-pair and block-quadruple witnesses and the
//!   one-parameter families they generate.
//! * [`search`]: phase-parametrized local search for new family seeds.
//! * [`io`] and [`cli`]: matrix files and the `commsq` command line.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`, which is what the CLI uses.
//!
//! Indexing is 0-based throughout. Matrix unit `A_{i,j}`, projection `D_k`
//! and entry `u_{ij}` in 1-based notation are index `(i−1, j−1)` / `k−1` here.

// `!(x <= tol)` is used on purpose so that NaN fails tolerance checks.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod cmatrix;
pub mod error;
pub mod families;
pub mod hadamard;
pub mod io;
pub mod policy;
pub mod scalar;
pub mod search;
pub mod spancert;

pub use cmatrix::{numerical_rank, CMatrix, DiagProjection, RankInfo};
pub use error::{Error, Result};
pub use policy::NumericPolicy;
pub use scalar::Real;

pub type C64 = num_complex::Complex<f64>;
pub type ComplexMatrix = CMatrix<f64>;
pub type Policy = NumericPolicy<f64>;
pub type Certificate = spancert::SpanCertificate<f64>;
pub type Verdict = hadamard::BiunitaryVerdict<f64>;
pub type CommutingPair = families::CommutingPairSpec<f64>;
pub type BlockPair = families::BlockPairSpec<f64>;
pub type SearchConfig = search::SearchConfig<f64>;
pub type SearchResult = search::SearchResult<f64>;
