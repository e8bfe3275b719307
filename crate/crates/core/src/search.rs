//! Local search over phase matrices for bases of block-quadruple families.
//!
//! With `U = (1/√n)·e^{iθ}` entrywise and fixed masks `p₁..p₄`, the search
//! drives
//!
//! ```text
//! ‖UU† − I‖_F + ‖[p₁, U p₃ U†] − [p₂, U p₄ U†]‖_F
//! ```
//!
//! to zero. A zero means `(p₁, p₂ | p₃, p₄)` is a block quadruple of `U`, so
//! `promote` hands it to [`crate::families`]. Descent runs on the squared
//! form, which has the same zeros and is smooth.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cmatrix::{CMatrix, DiagProjection};
use crate::error::{Error, Result};
use crate::families::BlockPairSpec;
use crate::hadamard::require_biunitary;
use crate::policy::NumericPolicy;
use crate::scalar::Real;

/// Armijo sufficient-decrease constant.
const ARMIJO: f64 = 1e-4;
/// Line search gives up once the step falls below this.
const MIN_STEP: f64 = 1e-20;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig<T> {
    pub n: usize,
    pub p1: DiagProjection,
    pub p2: DiagProjection,
    pub p3: DiagProjection,
    pub p4: DiagProjection,
    /// Row-major start phases; `None` draws them uniformly from `[0, 2π)`.
    pub seed_phases: Option<Vec<T>>,
    /// Uniform perturbation of amplitude `noise` added to the start phases.
    pub noise: T,
    pub max_iters: usize,
    pub step0: T,
    pub tol_obj: T,
    pub rng_seed: u64,
}

impl<T: Real> SearchConfig<T> {
    pub fn new(p1: DiagProjection, p2: DiagProjection, p3: DiagProjection, p4: DiagProjection) -> Self {
        Self {
            n: p1.order(),
            p1,
            p2,
            p3,
            p4,
            seed_phases: None,
            noise: T::zero(),
            max_iters: 10_000,
            step0: T::lit(0.1),
            tol_obj: T::lit(1e-10),
            rng_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if n == 0 {
            return Err(Error::EmptyOrder);
        }
        for p in [&self.p1, &self.p2, &self.p3, &self.p4] {
            if p.order() != n {
                return Err(Error::InvalidMask(format!("mask of order {} in a search of order {n}", p.order())));
            }
        }
        if !self.p1.is_disjoint(&self.p2) || !self.p3.is_disjoint(&self.p4) {
            return Err(Error::InvalidMask("p1·p2 and p3·p4 must vanish".into()));
        }
        if let Some(s) = &self.seed_phases {
            if s.len() != n * n {
                return Err(Error::Parse(format!("expected {} seed phases, got {}", n * n, s.len())));
            }
            if s.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        let bad = |x: T| !(x.is_finite() && x > T::zero());
        if bad(self.step0) || bad(self.tol_obj) || !(self.noise.is_finite() && self.noise >= T::zero()) {
            return Err(Error::InvalidPolicy("step0 and tol_obj must be positive, noise non-negative".into()));
        }
        Ok(())
    }

    /// Start phases: the seed (or a uniform draw) plus noise, from `rng_seed`.
    pub fn initial_phases(&self) -> Vec<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        let tau = std::f64::consts::TAU;
        let mut theta: Vec<T> = match &self.seed_phases {
            Some(s) => s.clone(),
            None => (0..self.n * self.n).map(|_| T::lit(rng.gen_range(0.0..tau))).collect(),
        };
        if self.noise > T::zero() {
            let a = self.noise.to_f64().unwrap_or(0.0);
            for t in theta.iter_mut() {
                *t = *t + T::lit(rng.gen_range(-a..=a));
            }
        }
        theta
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult<T> {
    pub n: usize,
    /// Row-major `θ`.
    pub phases: Vec<T>,
    pub objective: T,
    pub iterations: usize,
    pub converged: bool,
    /// Smoothed objective at the start and after every accepted step.
    pub trace: Vec<T>,
}

struct Parts<T> {
    u: CMatrix<T>,
    /// `UU† − I`.
    e: CMatrix<T>,
    /// `[p₁, U p₃ U†] − [p₂, U p₄ U†]`.
    c: CMatrix<T>,
}

fn parts<T: Real>(theta: &[T], cfg: &SearchConfig<T>) -> Result<Parts<T>> {
    let u = CMatrix::from_phases(cfg.n, theta)?;
    let e = &u.matmul(&u.adjoint())? - &CMatrix::identity(cfg.n);
    let c1 = cfg.p1.to_matrix().commutator(&cfg.p3.conjugate_by(&u))?;
    let c2 = cfg.p2.to_matrix().commutator(&cfg.p4.conjugate_by(&u))?;
    Ok(Parts { u, e, c: &c1 - &c2 })
}

/// Un-squared objective `‖UU† − I‖_F + ‖[p₁, U p₃ U†] − [p₂, U p₄ U†]‖_F`.
pub fn objective<T: Real>(theta: &[T], cfg: &SearchConfig<T>) -> Result<T> {
    let p = parts(theta, cfg)?;
    Ok(p.e.frobenius_norm() + p.c.frobenius_norm())
}

/// `‖UU† − I‖_F² + ‖[p₁, U p₃ U†] − [p₂, U p₄ U†]‖_F²`.
pub fn smoothed_objective<T: Real>(theta: &[T], cfg: &SearchConfig<T>) -> Result<T> {
    let p = parts(theta, cfg)?;
    Ok(sq(&p.e) + sq(&p.c))
}

fn sq<T: Real>(m: &CMatrix<T>) -> T {
    m.as_slice().iter().map(|z| z.norm_sqr()).sum()
}

/// Gradient of [`smoothed_objective`] in `θ`, row-major.
///
/// With `G = ∂f/∂Ū` (Wirtinger) and `∂u/∂θ = i·u`, `∂f/∂θ = −2·Im(Ḡ ⊙ U)`.
/// `G = 2·E·U + Σ_t s_t (K_t + K_t†)·U·p'_t` with `K_t = s_t·[C†, p_t]`,
/// `s = +1` for `(p₁, p₃)` and `−1` for `(p₂, p₄)`.
pub fn gradient<T: Real>(theta: &[T], cfg: &SearchConfig<T>) -> Result<Vec<T>> {
    let Parts { u, e, c } = parts(theta, cfg)?;
    let two = Complex::new(T::lit(2.0), T::zero());
    let mut g = e.matmul(&u)?.scale(two);
    let ch = c.adjoint();
    for (s, p, pp) in [(T::one(), &cfg.p1, &cfg.p3), (-T::one(), &cfg.p2, &cfg.p4)] {
        let k = ch.commutator(&p.to_matrix())?.scale(Complex::new(s, T::zero()));
        let sym = &k + &k.adjoint();
        let term = sym.matmul(&u)?.scale_cols(&pp.diagonal());
        g = &g + &term;
    }
    let m = T::lit(-2.0);
    Ok(g.as_slice().iter().zip(u.as_slice()).map(|(gi, ui)| m * (gi.conj() * ui).im).collect())
}

/// Gradient descent with Armijo backtracking; the step doubles after every
/// accepted move. Deterministic in `cfg`.
pub fn local_search<T: Real>(cfg: &SearchConfig<T>) -> Result<SearchResult<T>> {
    cfg.validate()?;
    let mut theta = cfg.initial_phases();
    let mut f = smoothed_objective(&theta, cfg)?;
    let mut obj = objective(&theta, cfg)?;
    let mut trace = vec![f];
    let mut iterations = 0;
    let mut step = cfg.step0;
    let (armijo, min_step) = (T::lit(ARMIJO), T::lit(MIN_STEP));

    while obj > cfg.tol_obj && iterations < cfg.max_iters {
        let g = gradient(&theta, cfg)?;
        let gg: T = g.iter().map(|x| *x * *x).sum();
        if gg.is_zero() || !gg.is_finite() {
            break;
        }
        let accepted = loop {
            let cand: Vec<T> = theta.iter().zip(&g).map(|(t, d)| *t - step * *d).collect();
            let fc = smoothed_objective(&cand, cfg)?;
            if fc <= f - armijo * step * gg {
                break Some((cand, fc));
            }
            step = step * T::lit(0.5);
            if step < min_step {
                break None;
            }
        };
        let Some((cand, fc)) = accepted else { break };
        theta = cand;
        f = fc;
        trace.push(f);
        iterations += 1;
        step = step * T::lit(2.0);
        obj = objective(&theta, cfg)?;
    }
    Ok(SearchResult { n: cfg.n, phases: theta, objective: obj, iterations, converged: obj <= cfg.tol_obj, trace })
}

/// Turns a converged search into a certified block quadruple
/// `(p₁, p₂ | d₁ = p₃, d₂ = p₄)` on `U(θ)`.
pub fn promote<T: Real>(
    result: &SearchResult<T>,
    cfg: &SearchConfig<T>,
    policy: &NumericPolicy<T>,
) -> Result<BlockPairSpec<T>> {
    if !result.converged {
        return Err(Error::NotConverged { objective: result.objective.to_f64().unwrap_or(f64::NAN) });
    }
    let u = CMatrix::from_phases(cfg.n, &result.phases)?;
    require_biunitary(&u, policy)?;
    let spec = BlockPairSpec::new(u, cfg.p1.clone(), cfg.p2.clone(), cfg.p3.clone(), cfg.p4.clone())?;
    if !(spec.residual <= policy.tol_unitary) {
        return Err(Error::Uncertified {
            residual: spec.residual.to_f64().unwrap_or(f64::NAN),
            tol: policy.tol_unitary.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(spec)
}
