use num_complex::Complex64;

use super::{effective_channel, PhaseVector, Precoder};
use crate::channel::ChannelSet;
use crate::config::SystemConfig;
use crate::error::Result;
use crate::linalg::{frobenius_sq, gram, hermitian_part, identity, CMat, CVec};

/// `E = Y - I - C H G G^H H^H + Z`.
pub(crate) fn residual_matrix(h: &CMat, g: &Precoder, y: &CMat, z: &CMat, c: f64) -> CMat {
    let signal = gram(&(h * g.matrix())) * Complex64::from(c);
    hermitian_part(&(y - identity(h.nrows()) - signal + z))
}

/// Phase-block objective `g(theta) = ||E||_F^2`.
pub fn phase_objective(
    theta: &PhaseVector,
    ch: &ChannelSet,
    g: &Precoder,
    y: &CMat,
    z: &CMat,
    cfg: &SystemConfig,
) -> Result<f64> {
    let h = effective_channel(theta, ch)?;
    Ok(frobenius_sq(&residual_matrix(&h, g, y, z, cfg.snr_scale())))
}

/// Gradient given an already formed effective channel.
pub(crate) fn gradient_from_channel(h: &CMat, ch: &ChannelSet, g: &Precoder, y: &CMat, z: &CMat, c: f64) -> CVec {
    let e = residual_matrix(h, g, y, z, c);
    let left = ch.h1.adjoint() * e * (h * g.matrix()); // Mi x Ms
    let right = g.matrix().adjoint() * ch.hm.adjoint(); // Ms x Mi
    CVec::from_fn(ch.mi(), |n, _| {
        let diag: Complex64 = left.row(n).iter().zip(right.column(n).iter()).map(|(a, b)| a * b).sum();
        diag * Complex64::from(-2.0 * c)
    })
}

/// Wirtinger gradient of `||E||_F^2` with respect to `conj(theta)`:
/// `-2C vec_d[H1^H E H G G^H Hm^H]`.
///
/// Valid for Hermitian `Y` and `Z`; a first-order change `d theta` moves the
/// objective by `2 Re <grad, d theta>`.
pub fn gradient_theta(
    theta: &PhaseVector,
    ch: &ChannelSet,
    g: &Precoder,
    y: &CMat,
    z: &CMat,
    cfg: &SystemConfig,
) -> Result<CVec> {
    let h = effective_channel(theta, ch)?;
    Ok(gradient_from_channel(&h, ch, g, y, z, cfg.snr_scale()))
}

/// Element-wise projection onto the unit circle; zero entries map to 1.
pub fn project_unit_modulus(xi: &CVec) -> PhaseVector {
    PhaseVector::from_vector_unchecked(xi.map(|z| {
        let r = z.norm();
        if r > 0.0 {
            z / r
        } else {
            Complex64::new(1.0, 0.0)
        }
    }))
}

/// Nesterov momentum counter `d_k = (1 + sqrt(1 + 4 d_{k-1}^2)) / 2`, `d_0 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Momentum {
    pub d: f64,
}

impl Momentum {
    /// Next counter and the extrapolation weight `t_k = (d_k - 1) / d_k`.
    pub fn advance(self) -> (Momentum, f64) {
        let d = 0.5 * (1.0 + libm::sqrt(1.0 + 4.0 * self.d * self.d));
        (Momentum { d }, (d - 1.0) / d)
    }
}

#[derive(Debug, Clone)]
pub struct ApgStep {
    pub theta: PhaseVector,
    pub momentum: Momentum,
    /// Weight `t_k` used for the extrapolation.
    pub extrapolation: f64,
}

/// One accelerated projected-gradient step:
/// `theta+ = Proj(omega - grad / tau)` with
/// `omega = theta + t_k (theta - theta_prev)`.
pub fn apg_step(theta: &PhaseVector, theta_prev: &PhaseVector, momentum: Momentum, grad: &CVec, tau: f64) -> ApgStep {
    let (momentum, t) = momentum.advance();
    let cur = theta.as_vector();
    let omega = cur + (cur - theta_prev.as_vector()) * Complex64::from(t);
    let xi = omega - grad * Complex64::from(1.0 / tau);
    ApgStep { theta: project_unit_modulus(&xi), momentum, extrapolation: t }
}
