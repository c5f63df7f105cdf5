//! Scalar system and algorithm parameters.
//!
//! Defaults reproduce the reference simulation setup: a 16-antenna
//! transmitter, 4-antenna receiver, 4 streams and a 100-element surface,
//! with the three nodes on an equilateral triangle of side 30 m.

use alloc::format;

use crate::error::{Error, Result};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Converts a decibel value to a linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    libm::pow(10.0, db / 10.0)
}

/// How the large-scale path loss enters the generated channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "snake_case"))]
pub enum PathLoss {
    /// Every link is scaled by `sqrt(C(d))`.
    Applied,
    /// Path loss is folded into the noise reference, so `power_db` is the
    /// per-link receive SNR and channels carry unit large-scale gain.
    #[default]
    Normalized,
}

/// Amplitude convention for the line-of-sight term `a_r a_t^H`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "snake_case"))]
pub enum LosScaling {
    /// Unit-norm steering vectors; the LoS matrix has unit Frobenius norm.
    UnitNorm,
    /// LoS matrix scaled by `sqrt(rows * cols)` so every entry has unit
    /// modulus, matching the per-entry power of the scattered part.
    #[default]
    UnitEntry,
}

/// How `delta` in the CSI-error model maps to per-entry error variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(rename_all = "snake_case"))]
pub enum CsiErrorVariance {
    /// `delta * ||H||^2 / sqrt(rows * cols)` is the expected total error
    /// energy, split evenly across entries.
    #[default]
    TotalEnergy,
    /// `delta * ||H||^2 / sqrt(rows * cols)` is the variance of every entry.
    PerEntry,
}

/// Azimuth angles of departure and arrival (radians) of one link.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(deny_unknown_fields))]
pub struct AnglePair {
    pub aod: f64,
    pub aoa: f64,
}

/// Fixed angles for all three links, overriding the per-realization draw.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(deny_unknown_fields))]
pub struct LinkAngles {
    /// Surface to receiver (`H1`).
    pub irs_rx: AnglePair,
    /// Transmitter to receiver (`H2`).
    pub direct: AnglePair,
    /// Transmitter to surface (`Hm`).
    pub tx_irs: AnglePair,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default, deny_unknown_fields))]
pub struct ChannelModel {
    pub rician_factor_db: f64,
    pub pathloss_ref_db: f64,
    pub pathloss_exponent: f64,
    /// Reference distance `d0` in metres.
    pub ref_distance: f64,
    /// Side length of the node triangle in metres.
    pub distance: f64,
    /// Element spacing in carrier wavelengths.
    pub antenna_spacing: f64,
    /// Carrier wavelength in metres.
    pub wavelength: f64,
    pub pathloss: PathLoss,
    pub los_scaling: LosScaling,
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub angles: Option<LinkAngles>,
    /// Channel estimation error level `delta`; zero means perfect CSI.
    pub csi_error_delta: f64,
    pub csi_error_variance: CsiErrorVariance,
}

impl Default for ChannelModel {
    fn default() -> Self {
        Self {
            rician_factor_db: 10.0,
            pathloss_ref_db: -30.0,
            pathloss_exponent: 2.0,
            ref_distance: 1.0,
            distance: 30.0,
            antenna_spacing: 0.5,
            wavelength: 0.1,
            pathloss: PathLoss::default(),
            los_scaling: LosScaling::default(),
            angles: None,
            csi_error_delta: 0.0,
            csi_error_variance: CsiErrorVariance::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default, deny_unknown_fields))]
pub struct SystemConfig {
    /// Transmit antennas.
    pub mt: usize,
    /// Receive antennas.
    pub mr: usize,
    /// Reflecting elements. Zero describes a link without a surface.
    pub mi: usize,
    /// Data streams.
    pub ms: usize,
    /// Transmit power in dB relative to the noise unit.
    pub power_db: f64,
    pub noise_power: f64,
    /// ADMM penalty.
    pub rho: f64,
    /// Inverse step length of the projected gradient update.
    pub tau: f64,
    /// Largest displacement of any phase entry before projection. The
    /// effective inverse step is `max(tau, max_n |grad_n| / limit)`. Zero
    /// disables the bound and uses `tau` as is.
    pub phase_step_limit: f64,
    /// Step length of the dual update, `Z += dual_step * residual`.
    pub dual_step: f64,
    /// Outer iterations.
    pub k_max: usize,
    pub seed: u64,
    /// Rate change (bits/s/Hz) below which an iteration counts as converged.
    pub convergence_tol: f64,
    /// Stop at the first converged iteration instead of running to `k_max`.
    pub early_stop: bool,
    /// Check solver invariants after every iteration.
    pub check_invariants: bool,
    pub channel: ChannelModel,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            mt: 16,
            mr: 4,
            mi: 100,
            ms: 4,
            power_db: 10.0,
            noise_power: 1.0,
            rho: 1.0,
            tau: 0.001,
            phase_step_limit: 0.5,
            dual_step: 0.01,
            k_max: 100,
            seed: 0,
            convergence_tol: 0.01,
            early_stop: false,
            check_invariants: false,
            channel: ChannelModel::default(),
        }
    }
}

impl SystemConfig {
    pub fn power_linear(&self) -> f64 {
        db_to_linear(self.power_db)
    }

    /// `C = P / (sigma_n^2 * Ms)`.
    pub fn snr_scale(&self) -> f64 {
        self.power_linear() / (self.noise_power * self.ms as f64)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: alloc::string::String| Err(Error::InvalidConfig(msg));
        if self.mt == 0 || self.mr == 0 || self.ms == 0 {
            return fail(format!(
                "antenna and stream counts must be positive (mt={}, mr={}, ms={})",
                self.mt, self.mr, self.ms
            ));
        }
        if self.ms > self.mt.min(self.mr) {
            return fail(format!("ms={} exceeds min(mt, mr)={}", self.ms, self.mt.min(self.mr)));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return fail(format!("rho must be positive, got {}", self.rho));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return fail(format!("tau must be positive, got {}", self.tau));
        }
        if !(self.phase_step_limit >= 0.0 && self.phase_step_limit.is_finite()) {
            return fail(format!("phase_step_limit must be non-negative, got {}", self.phase_step_limit));
        }
        if !(self.dual_step >= 0.0 && self.dual_step <= 1.0) {
            return fail(format!("dual_step must lie in [0, 1], got {}", self.dual_step));
        }
        if self.k_max == 0 {
            return fail("k_max must be at least 1".into());
        }
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return fail(format!("noise_power must be positive, got {}", self.noise_power));
        }
        if !self.power_db.is_finite() {
            return fail(format!("power_db must be finite, got {}", self.power_db));
        }
        if !(self.convergence_tol >= 0.0) {
            return fail("convergence_tol must be nonnegative".into());
        }
        let ch = &self.channel;
        if !(ch.distance > 0.0) || !(ch.ref_distance > 0.0) {
            return fail(format!(
                "distances must be positive (distance={}, ref_distance={})",
                ch.distance, ch.ref_distance
            ));
        }
        if !(ch.pathloss_exponent > 0.0) {
            return fail("pathloss_exponent must be positive".into());
        }
        if !(ch.antenna_spacing > 0.0) || !(ch.wavelength > 0.0) {
            return fail("antenna_spacing and wavelength must be positive".into());
        }
        if !(ch.csi_error_delta >= 0.0) {
            return fail(format!("csi_error_delta must be nonnegative, got {}", ch.csi_error_delta));
        }
        Ok(())
    }
}
