//! Joint precoder / phase-shift optimization by ADMM with one accelerated
//! projected-gradient step on the phases per outer iteration.
//!
//! The spectral efficiency `log2 det(I + C H G G^H H^H)` with
//! `H = H1 diag(theta) Hm + H2` is maximized over a precoder with
//! `||G||_F^2 = Ms` and unit-modulus phases. Introducing
//! `Y = I + C H G G^H H^H` splits the problem into closed-form blocks:
//! [`update_precoder`] (truncated SVD + water-filling),
//! [`update_auxiliary`] (eigendecomposition + scalar quadratics),
//! [`apg_step`] on the phases and the scaled dual ascent [`update_dual`].

mod admm;
mod auxiliary;
mod phase;
mod precoder;

use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::linalg::{frobenius_sq, gram, identity, ln_det_hpd, CMat, CVec};

pub use admm::{
    baseline_no_irs, baseline_random_phase, effective_tau, solve, InvariantStats, IterationRecord, SolveResult,
    SolverState,
};
pub use auxiliary::{auxiliary_target, solve_auxiliary, update_auxiliary};
pub use phase::{apg_step, gradient_theta, phase_objective, project_unit_modulus, ApgStep, Momentum};
pub use precoder::{update_precoder, water_filling, PrecoderUpdate};

/// Tolerance on `|theta_n| = 1`.
pub const UNIT_MODULUS_TOL: f64 = 1e-12;
/// Tolerance on `||G||_F^2 = Ms`.
pub const PRECODER_POWER_TOL: f64 = 1e-9;

/// Reflection coefficients of the surface, one unit-modulus entry per element.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector(CVec);

impl PhaseVector {
    pub fn new(theta: CVec) -> Result<Self> {
        for (index, z) in theta.iter().enumerate() {
            let modulus = z.norm();
            if !((modulus - 1.0).abs() <= UNIT_MODULUS_TOL) {
                return Err(Error::NotUnitModulus { index, modulus });
            }
        }
        Ok(Self(theta))
    }

    pub fn from_phases(phases: &[f64]) -> Self {
        Self(CVec::from_iterator(phases.len(), phases.iter().map(|&p| Complex64::from_polar(1.0, p))))
    }

    /// All-ones (zero phase) configuration.
    pub fn ones(n: usize) -> Self {
        Self(CVec::from_element(n, Complex64::new(1.0, 0.0)))
    }

    /// Independent phases uniform on `[0, 2pi)`.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let phases: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * core::f64::consts::TAU).collect();
        Self::from_phases(&phases)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_vector(&self) -> &CVec {
        &self.0
    }

    pub fn into_vector(self) -> CVec {
        self.0
    }

    /// Phases in `(-pi, pi]`.
    pub fn phases(&self) -> Vec<f64> {
        self.0.iter().map(|z| z.arg()).collect()
    }

    pub fn max_modulus_error(&self) -> f64 {
        self.0.iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max)
    }

    pub(crate) fn from_vector_unchecked(theta: CVec) -> Self {
        Self(theta)
    }
}

/// Transmit precoder `G` (`Mt x Ms`) with `||G||_F^2 = Ms`.
#[derive(Debug, Clone, PartialEq)]
pub struct Precoder(CMat);

impl Precoder {
    pub fn new(g: CMat) -> Result<Self> {
        let power = frobenius_sq(&g);
        let ms = g.ncols() as f64;
        if !((power - ms).abs() <= PRECODER_POWER_TOL) {
            return Err(Error::InvalidConfig(alloc::format!("precoder power {power} differs from stream count {ms}")));
        }
        Ok(Self(g))
    }

    /// First `ms` columns of the identity (unit power per stream).
    pub fn isotropic(mt: usize, ms: usize) -> Self {
        Self(CMat::identity(mt, ms))
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn streams(&self) -> usize {
        self.0.ncols()
    }

    pub fn power(&self) -> f64 {
        frobenius_sq(&self.0)
    }

    pub(crate) fn from_matrix_unchecked(g: CMat) -> Self {
        Self(g)
    }
}

/// `H = H1 diag(theta) Hm + H2`.
pub fn effective_channel(theta: &PhaseVector, ch: &ChannelSet) -> Result<CMat> {
    if theta.len() != ch.mi() {
        return Err(Error::DimensionMismatch {
            what: "phase vector length vs. surface size",
            expected: (ch.mi(), 1),
            found: (theta.len(), 1),
        });
    }
    let mut scaled = ch.h1.clone();
    for (mut col, t) in scaled.column_iter_mut().zip(theta.as_vector().iter()) {
        col *= *t;
    }
    Ok(scaled * &ch.hm + &ch.h2)
}

/// `log2 det(I + c H G G^H H^H)` in bits/s/Hz.
pub fn spectral_efficiency(h: &CMat, g: &Precoder, c: f64) -> f64 {
    let hg = h * g.matrix();
    let a = identity(h.nrows()) + gram(&hg) * Complex64::from(c);
    let nats = ln_det_hpd(&a).unwrap_or_else(|| {
        let (vals, _) = crate::linalg::hermitian_eigen(&a);
        vals.iter().map(|v| libm::log(v.max(f64::MIN_POSITIVE))).sum()
    });
    (nats / core::f64::consts::LN_2).max(0.0)
}
