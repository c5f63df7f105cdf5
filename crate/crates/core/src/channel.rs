//! Rician channel generation with ULA steering vectors, plus the
//! imperfect-CSI perturbation model.

use core::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;

use crate::config::{db_to_linear, CsiErrorVariance, LosScaling, PathLoss, SystemConfig};
use crate::error::{Error, Result};
use crate::linalg::{complex_gaussian_matrix, frobenius_sq, CMat, CVec};

/// Uniform linear array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UlaGeometry {
    n_elements: usize,
    spacing: f64,
    wavelength: f64,
}

impl UlaGeometry {
    /// `spacing` is in carrier wavelengths, `wavelength` in metres.
    pub fn new(n_elements: usize, spacing: f64, wavelength: f64) -> Result<Self> {
        if n_elements == 0 || !(spacing > 0.0) || !(wavelength > 0.0) {
            return Err(Error::InvalidConfig(alloc::format!(
                "ULA needs n >= 1 and positive spacing/wavelength (n={n_elements}, spacing={spacing}, wavelength={wavelength})"
            )));
        }
        Ok(Self { n_elements, spacing, wavelength })
    }

    /// Half-wavelength array.
    pub fn half_wavelength(n_elements: usize) -> Result<Self> {
        Self::new(n_elements, 0.5, 1.0)
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    fn wavenumber_spacing(&self) -> f64 {
        let m = 2.0 * PI / self.wavelength;
        m * self.spacing * self.wavelength
    }
}

/// Array response `a(angle)`; entry `k` is `exp(j * m * d_as * k * sin(angle)) / sqrt(N)`.
pub fn steering_vector(geom: &UlaGeometry, angle: f64) -> CVec {
    let n = geom.n_elements;
    let norm = 1.0 / libm::sqrt(n as f64);
    let step = geom.wavenumber_spacing() * libm::sin(angle);
    CVec::from_fn(n, |k, _| Complex64::from_polar(norm, step * k as f64))
}

/// Parameters of one Rician link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RicianParams {
    /// Rician factor in dB; `-inf` gives pure Rayleigh fading.
    pub rician_factor_db: f64,
    pub pathloss_ref_db: f64,
    pub pathloss_exponent: f64,
    pub ref_distance: f64,
    pub link_distance: f64,
    /// Angle of departure (radians).
    pub aod: f64,
    /// Angle of arrival (radians).
    pub aoa: f64,
    pub los_scaling: LosScaling,
}

impl RicianParams {
    pub fn rician_factor(&self) -> f64 {
        db_to_linear(self.rician_factor_db)
    }
}

/// `C(d) = C0 * (d / d0)^(-beta)` as a linear power gain.
pub fn path_loss(params: &RicianParams) -> Result<f64> {
    if !(params.link_distance > 0.0) {
        return Err(Error::NonPositiveDistance(params.link_distance));
    }
    if !(params.ref_distance > 0.0) {
        return Err(Error::NonPositiveDistance(params.ref_distance));
    }
    Ok(db_to_linear(params.pathloss_ref_db)
        * libm::pow(params.link_distance / params.ref_distance, -params.pathloss_exponent))
}

/// Small-scale part of a Rician link, without the path-loss factor.
fn rician_fading<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    params: &RicianParams,
    tx: &UlaGeometry,
    rx: &UlaGeometry,
    rng: &mut R,
) -> Result<CMat> {
    if rx.n_elements != rows || tx.n_elements != cols {
        return Err(Error::DimensionMismatch {
            what: "rician channel vs. array sizes",
            expected: (rows, cols),
            found: (rx.n_elements, tx.n_elements),
        });
    }
    let gamma = params.rician_factor();
    let (los_w, nlos_w) = if gamma.is_infinite() {
        (1.0, 0.0)
    } else {
        (libm::sqrt(gamma / (1.0 + gamma)), libm::sqrt(1.0 / (1.0 + gamma)))
    };
    let los_w = match params.los_scaling {
        LosScaling::UnitNorm => los_w,
        LosScaling::UnitEntry => los_w * libm::sqrt((rows * cols) as f64),
    };
    let a_r = steering_vector(rx, params.aoa);
    let a_t = steering_vector(tx, params.aod);
    let nlos = complex_gaussian_matrix(rows, cols, rng);
    Ok(a_r * a_t.adjoint() * Complex64::from(los_w) + nlos * Complex64::from(nlos_w))
}

/// One `rows x cols` Rician channel realization including path loss.
pub fn rician_channel<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    params: &RicianParams,
    tx_geom: &UlaGeometry,
    rx_geom: &UlaGeometry,
    rng: &mut R,
) -> Result<CMat> {
    let gain = libm::sqrt(path_loss(params)?);
    Ok(rician_fading(rows, cols, params, tx_geom, rx_geom, rng)? * Complex64::from(gain))
}

/// The three links of the surface-aided system.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// Surface to receiver, `Mr x Mi`.
    pub h1: CMat,
    /// Direct link, `Mr x Mt`.
    pub h2: CMat,
    /// Transmitter to surface, `Mi x Mt`.
    pub hm: CMat,
}

impl ChannelSet {
    pub fn new(h1: CMat, h2: CMat, hm: CMat) -> Result<Self> {
        let (mr, mt) = h2.shape();
        if h1.nrows() != mr {
            return Err(Error::DimensionMismatch {
                what: "H1 rows vs. H2 rows",
                expected: (mr, h1.ncols()),
                found: h1.shape(),
            });
        }
        let mi = h1.ncols();
        if hm.shape() != (mi, mt) {
            return Err(Error::DimensionMismatch { what: "Hm shape", expected: (mi, mt), found: hm.shape() });
        }
        if [&h1, &h2, &hm].iter().any(|m| m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())) {
            return Err(Error::InvalidConfig("channel entries must be finite".into()));
        }
        Ok(Self { h1, h2, hm })
    }

    pub fn mt(&self) -> usize {
        self.h2.ncols()
    }

    pub fn mr(&self) -> usize {
        self.h2.nrows()
    }

    pub fn mi(&self) -> usize {
        self.h1.ncols()
    }

    /// Errors unless the dimensions match `(cfg.mt, cfg.mr, cfg.mi)`.
    pub fn check_dims(&self, cfg: &SystemConfig) -> Result<()> {
        if (self.mt(), self.mr(), self.mi()) != (cfg.mt, cfg.mr, cfg.mi) {
            return Err(Error::DimensionMismatch {
                what: "channel set (mr, mt) vs. config",
                expected: (cfg.mr, cfg.mt),
                found: (self.mr(), self.mt()),
            });
        }
        if self.mi() != cfg.mi {
            return Err(Error::DimensionMismatch {
                what: "channel set mi vs. config",
                expected: (cfg.mi, 0),
                found: (self.mi(), 0),
            });
        }
        Ok(())
    }

    /// Estimated channels: each link gets its own independent error drawn
    /// against its own norm and shape.
    pub fn perturbed<R: Rng + ?Sized>(&self, delta: f64, mode: CsiErrorVariance, rng: &mut R) -> Self {
        let p = |h: &CMat, rng: &mut R| perturb_channel(h, delta, h.ncols(), h.nrows(), mode, rng);
        let h1 = p(&self.h1, rng);
        let h2 = p(&self.h2, rng);
        let hm = p(&self.hm, rng);
        Self { h1, h2, hm }
    }
}

/// Draws the three links for one realization.
///
/// All links share the triangle side length, the path-loss law and the
/// Rician factor. Angles come from `cfg.channel.angles` when set, otherwise
/// each link's AoD/AoA is drawn uniformly on `[0, 2pi)`.
pub fn generate_channel_set<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Result<ChannelSet> {
    let model = &cfg.channel;
    let mut angles = [0.0f64; 6];
    match model.angles {
        Some(fixed) => {
            angles = [
                fixed.irs_rx.aod,
                fixed.irs_rx.aoa,
                fixed.direct.aod,
                fixed.direct.aoa,
                fixed.tx_irs.aod,
                fixed.tx_irs.aoa,
            ]
        }
        None => angles.iter_mut().for_each(|a| *a = rng.random::<f64>() * TAU),
    }
    let link = |aod: f64, aoa: f64| RicianParams {
        rician_factor_db: model.rician_factor_db,
        pathloss_ref_db: model.pathloss_ref_db,
        pathloss_exponent: model.pathloss_exponent,
        ref_distance: model.ref_distance,
        link_distance: model.distance,
        aod,
        aoa,
        los_scaling: model.los_scaling,
    };
    let ula = |n| UlaGeometry::new(n, model.antenna_spacing, model.wavelength);
    let tx = ula(cfg.mt)?;
    let rx = ula(cfg.mr)?;

    let h2_params = link(angles[2], angles[3]);
    let gain = match model.pathloss {
        PathLoss::Applied => libm::sqrt(path_loss(&h2_params)?),
        PathLoss::Normalized => 1.0,
    };

    let (h1, hm) = if cfg.mi == 0 {
        (CMat::zeros(cfg.mr, 0), CMat::zeros(0, cfg.mt))
    } else {
        let irs = ula(cfg.mi)?;
        let h1 = rician_fading(cfg.mr, cfg.mi, &link(angles[0], angles[1]), &irs, &rx, rng)?;
        let hm = rician_fading(cfg.mi, cfg.mt, &link(angles[4], angles[5]), &tx, &irs, rng)?;
        (h1, hm)
    };
    let h2 = rician_fading(cfg.mr, cfg.mt, &h2_params, &tx, &rx, rng)?;
    let g = Complex64::from(gain);
    ChannelSet::new(h1 * g, h2 * g, hm * g)
}

/// Adds a CN(0, v I) estimation error to `h`, where
/// `gamma^2 = delta * ||h||_F^2 / sqrt(mt * mr)` and `v` follows `mode`.
/// `delta == 0` returns `h` unchanged without consuming randomness.
pub fn perturb_channel<R: Rng + ?Sized>(
    h: &CMat,
    delta: f64,
    mt: usize,
    mr: usize,
    mode: CsiErrorVariance,
    rng: &mut R,
) -> CMat {
    if delta == 0.0 || h.is_empty() {
        return h.clone();
    }
    let gamma_sq = delta * frobenius_sq(h) / libm::sqrt((mt * mr) as f64);
    let variance = match mode {
        CsiErrorVariance::TotalEnergy => gamma_sq / h.len() as f64,
        CsiErrorVariance::PerEntry => gamma_sq,
    };
    let err = complex_gaussian_matrix(h.nrows(), h.ncols(), rng);
    h + err * Complex64::from(libm::sqrt(variance))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn approx_eq(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    fn link(rician_factor_db: f64, los_scaling: LosScaling) -> RicianParams {
        RicianParams {
            rician_factor_db,
            pathloss_ref_db: -30.0,
            pathloss_exponent: 2.0,
            ref_distance: 1.0,
            link_distance: 30.0,
            aod: 0.7,
            aoa: 2.1,
            los_scaling,
        }
    }

    #[test]
    fn steering_single_element() {
        let g = UlaGeometry::half_wavelength(1).unwrap();
        let a = steering_vector(&g, 1.234);
        assert_eq!(a.len(), 1);
        assert!(approx_eq(a[0], Complex64::new(1.0, 0.0), 1e-15));
    }

    #[test]
    fn steering_broadside() {
        let g = UlaGeometry::half_wavelength(4).unwrap();
        let a = steering_vector(&g, 0.0);
        for z in a.iter() {
            assert!(approx_eq(*z, Complex64::new(0.5, 0.0), 1e-15));
        }
    }

    #[test]
    fn steering_endfire_half_wavelength() {
        let g = UlaGeometry::new(2, 0.5, 0.125).unwrap();
        let a = steering_vector(&g, PI / 2.0);
        let s = core::f64::consts::FRAC_1_SQRT_2;
        assert!(approx_eq(a[0], Complex64::new(s, 0.0), 1e-15));
        assert!(approx_eq(a[1], Complex64::new(-s, 0.0), 1e-15));
    }

    #[test]
    fn geometry_rejects_bad_values() {
        assert!(UlaGeometry::new(0, 0.5, 1.0).is_err());
        assert!(UlaGeometry::new(3, 0.0, 1.0).is_err());
        assert!(UlaGeometry::new(3, 0.5, -1.0).is_err());
    }

    #[test]
    fn path_loss_values() {
        let mut p = link(10.0, LosScaling::UnitNorm);
        p.pathloss_ref_db = 0.0;
        p.link_distance = 1.0;
        p.pathloss_exponent = 3.3;
        assert!((path_loss(&p).unwrap() - 1.0).abs() < 1e-15);

        let p = link(10.0, LosScaling::UnitNorm);
        let expected = 1e-3 / 900.0;
        assert!((path_loss(&p).unwrap() - expected).abs() < 1e-12 * expected);
        assert!((path_loss(&p).unwrap() - 1.1111e-6).abs() < 1e-10);

        let mut p = link(10.0, LosScaling::UnitNorm);
        p.link_distance = 1.0;
        p.pathloss_exponent = 4.0;
        assert!((path_loss(&p).unwrap() - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn path_loss_rejects_nonpositive_distance() {
        let mut p = link(10.0, LosScaling::UnitNorm);
        p.link_distance = 0.0;
        assert_eq!(path_loss(&p), Err(Error::NonPositiveDistance(0.0)));
        p.link_distance = -3.0;
        assert!(path_loss(&p).is_err());
    }

    #[test]
    fn pure_los_is_rank_one() {
        let p = link(300.0, LosScaling::UnitNorm);
        let tx = UlaGeometry::half_wavelength(6).unwrap();
        let rx = UlaGeometry::half_wavelength(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = rician_channel(4, 6, &p, &tx, &rx, &mut rng).unwrap();
        let c = path_loss(&p).unwrap();
        let los = steering_vector(&rx, p.aoa) * steering_vector(&tx, p.aod).adjoint();
        let scaled = &h / Complex64::from(c.sqrt());
        assert!((&scaled - &los).norm() < 1e-12);
        let sv = scaled.singular_values();
        let mut s: alloc::vec::Vec<f64> = sv.iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        assert!(s[1] < 1e-9 * s[0]);
    }

    #[test]
    fn rayleigh_entries_have_unit_power() {
        let p = link(f64::NEG_INFINITY, LosScaling::UnitNorm);
        let tx = UlaGeometry::half_wavelength(100).unwrap();
        let rx = UlaGeometry::half_wavelength(100).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let h = rician_channel(100, 100, &p, &tx, &rx, &mut rng).unwrap();
        let c = path_loss(&p).unwrap();
        let mean = frobenius_sq(&h) / (1e4 * c);
        assert!((mean - 1.0).abs() < 0.05, "mean {mean}");
    }

    #[test]
    fn rician_is_deterministic() {
        let p = link(10.0, LosScaling::UnitNorm);
        let tx = UlaGeometry::half_wavelength(3).unwrap();
        let rx = UlaGeometry::half_wavelength(2).unwrap();
        let a = rician_channel(2, 3, &p, &tx, &rx, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = rician_channel(2, 3, &p, &tx, &rx, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rician_rejects_mismatched_geometry() {
        let p = link(10.0, LosScaling::UnitNorm);
        let tx = UlaGeometry::half_wavelength(3).unwrap();
        let rx = UlaGeometry::half_wavelength(2).unwrap();
        let r = rician_channel(3, 3, &p, &tx, &rx, &mut ChaCha8Rng::seed_from_u64(9));
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn channel_set_shapes_and_determinism() {
        let cfg = SystemConfig::default();
        let a = generate_channel_set(&cfg, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        assert_eq!(a.h1.shape(), (4, 100));
        assert_eq!(a.h2.shape(), (4, 16));
        assert_eq!(a.hm.shape(), (100, 16));
        let b = generate_channel_set(&cfg, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        assert_eq!(a, b);
        a.check_dims(&cfg).unwrap();
    }

    /// Averages per-entry power of each link over enough realizations to
    /// collect at least 1e4 entries per link.
    fn per_entry_power(cfg: &SystemConfig, realizations: usize) -> [f64; 3] {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut acc = [0.0; 3];
        for _ in 0..realizations {
            let ch = generate_channel_set(cfg, &mut rng).unwrap();
            for (slot, m) in acc.iter_mut().zip([&ch.h1, &ch.h2, &ch.hm]) {
                *slot += frobenius_sq(m) / m.len() as f64;
            }
        }
        acc.map(|s| s / realizations as f64)
    }

    #[test]
    fn unit_entry_los_gives_pathloss_power() {
        let cfg = SystemConfig {
            channel: crate::config::ChannelModel {
                pathloss: PathLoss::Applied,
                los_scaling: LosScaling::UnitEntry,
                ..Default::default()
            },
            ..SystemConfig::default()
        };
        let c = 1e-3 / 900.0;
        // H2 has only 64 entries per draw, so 200 draws give 12800 samples
        for (i, p) in per_entry_power(&cfg, 200).iter().enumerate() {
            assert!((p / c - 1.0).abs() < 0.05, "link {i}: {}", p / c);
        }
    }

    #[test]
    fn unit_norm_los_power_follows_array_size() {
        let cfg = SystemConfig {
            channel: crate::config::ChannelModel {
                pathloss: PathLoss::Applied,
                los_scaling: LosScaling::UnitNorm,
                ..Default::default()
            },
            ..SystemConfig::default()
        };
        let c = 1e-3 / 900.0;
        let gamma = 10.0;
        let sizes = [(4.0, 100.0), (4.0, 16.0), (100.0, 16.0)];
        for (p, (r, k)) in per_entry_power(&cfg, 200).iter().zip(sizes) {
            let expected = c * (gamma / (1.0 + gamma) / (r * k) + 1.0 / (1.0 + gamma));
            assert!((p / expected - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn normalized_pathloss_drops_the_gain() {
        let cfg = SystemConfig::default();
        let p = per_entry_power(&cfg, 200);
        for v in p {
            assert!((v - 1.0).abs() < 0.05, "{v}");
        }
    }

    #[test]
    fn surfaceless_set_has_empty_links() {
        let cfg = SystemConfig { mi: 0, ..SystemConfig::default() };
        let ch = generate_channel_set(&cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(ch.h1.shape(), (4, 0));
        assert_eq!(ch.hm.shape(), (0, 16));
    }

    #[test]
    fn channel_set_rejects_inconsistent_shapes() {
        let r = ChannelSet::new(CMat::zeros(2, 3), CMat::zeros(2, 4), CMat::zeros(3, 5));
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
        let r = ChannelSet::new(CMat::zeros(3, 3), CMat::zeros(2, 4), CMat::zeros(3, 4));
        assert!(r.is_err());
    }

    #[test]
    fn zero_delta_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = complex_gaussian_matrix(4, 16, &mut rng);
        let out = perturb_channel(&h, 0.0, 16, 4, CsiErrorVariance::TotalEnergy, &mut rng);
        assert_eq!(out, h);
    }

    #[test]
    fn perturbation_energy_ratio() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let trials = 1000;
        let mut ratio = 0.0;
        for _ in 0..trials {
            let h = complex_gaussian_matrix(4, 16, &mut rng);
            let hp = perturb_channel(&h, 0.4, 16, 4, CsiErrorVariance::TotalEnergy, &mut rng);
            ratio += frobenius_sq(&(hp - &h)) / frobenius_sq(&h);
        }
        ratio /= trials as f64;
        assert!((ratio / 0.05 - 1.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn per_entry_variance_mode_scales_by_entry_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let trials = 1000;
        let mut ratio = 0.0;
        for _ in 0..trials {
            let h = complex_gaussian_matrix(4, 16, &mut rng);
            let hp = perturb_channel(&h, 0.4, 16, 4, CsiErrorVariance::PerEntry, &mut rng);
            ratio += frobenius_sq(&(hp - &h)) / frobenius_sq(&h);
        }
        ratio /= trials as f64;
        assert!((ratio / (0.05 * 64.0) - 1.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn perturbation_is_deterministic() {
        let h = complex_gaussian_matrix(4, 16, &mut ChaCha8Rng::seed_from_u64(1));
        let a = perturb_channel(&h, 0.9, 16, 4, CsiErrorVariance::TotalEnergy, &mut ChaCha8Rng::seed_from_u64(2));
        let b = perturb_channel(&h, 0.9, 16, 4, CsiErrorVariance::TotalEnergy, &mut ChaCha8Rng::seed_from_u64(2));
        assert_eq!(a, b);
        assert_ne!(a, h);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn steering_has_unit_norm(n in 1usize..64, spacing in 0.05f64..2.0, angle in -10.0f64..10.0) {
                let g = UlaGeometry::new(n, spacing, 0.3).unwrap();
                let a = steering_vector(&g, angle);
                prop_assert!((a.norm() - 1.0).abs() < 1e-12);
            }
        }
    }
}
