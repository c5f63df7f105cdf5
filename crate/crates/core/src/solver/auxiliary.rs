use num_complex::Complex64;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, hermitian_part, identity, CMat};

/// `Q = I + C U diag(lambda^2 p) U^H - Z`.
///
/// Since `H G = U Lambda diag(sqrt(p))`, the middle term equals
/// `C H G G^H H^H` for the precoder just computed.
pub fn auxiliary_target(u: &CMat, lambda: &[f64], powers: &[f64], z: &CMat, c: f64) -> Result<CMat> {
    let (mr, ms) = u.shape();
    if lambda.len() != ms || powers.len() != ms {
        return Err(Error::DimensionMismatch {
            what: "singular values / powers vs. U columns",
            expected: (ms, ms),
            found: (lambda.len(), powers.len()),
        });
    }
    if z.shape() != (mr, mr) {
        return Err(Error::DimensionMismatch { what: "dual matrix", expected: (mr, mr), found: z.shape() });
    }
    let mut weighted = u.clone();
    for (j, mut col) in weighted.column_iter_mut().enumerate() {
        col *= Complex64::from(c * lambda[j] * lambda[j] * powers[j]);
    }
    let q = identity(mr) + weighted * u.adjoint() - z;
    Ok(hermitian_part(&q))
}

/// Positive root of `y^2 - lambda y - 1/rho = 0`, evaluated without
/// cancellation for negative `lambda`.
fn positive_root(lambda: f64, rho: f64) -> f64 {
    let disc = libm::sqrt(lambda * lambda + 4.0 / rho);
    if lambda >= 0.0 {
        0.5 * (lambda + disc)
    } else {
        (2.0 / rho) / (disc - lambda)
    }
}

/// Unique Hermitian positive definite solution of `Y - Y^{-1} / rho = Q`,
/// the stationarity condition of `-ln det Y + rho/2 ||Y - Q||_F^2`.
///
/// With `Q = U1 diag(lambda) U1^H`, the solution shares the eigenvectors
/// and maps each eigenvalue to the positive root of its scalar quadratic.
pub fn solve_auxiliary(q: &CMat, rho: f64) -> CMat {
    let (values, vectors) = hermitian_eigen(q);
    let mut scaled = vectors.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= Complex64::from(positive_root(values[j], rho));
    }
    hermitian_part(&(scaled * vectors.adjoint()))
}

/// Auxiliary-matrix block of the ADMM iteration.
pub fn update_auxiliary(u: &CMat, lambda: &[f64], powers: &[f64], z: &CMat, cfg: &SystemConfig) -> Result<CMat> {
    let q = auxiliary_target(u, lambda, powers, z, cfg.snr_scale())?;
    Ok(solve_auxiliary(&q, cfg.rho))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::complex_gaussian_matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// `||-Y^{-1} + rho (Y - Q)||_F` with an explicit inverse.
    fn stationarity_residual(y: &CMat, q: &CMat, rho: f64) -> f64 {
        let inv = y.clone().cholesky().expect("Y positive definite").inverse();
        (-inv + (y - q) * Complex64::from(rho)).norm()
    }

    #[test]
    fn golden_ratio_at_identity() {
        let u = CMat::identity(3, 2);
        let q = auxiliary_target(&u, &[1.0, 2.0], &[1.0, 1.0], &CMat::zeros(3, 3), 0.0).unwrap();
        assert_eq!(q, CMat::identity(3, 3));
        let y = solve_auxiliary(&q, 1.0);
        let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
        assert!((y - CMat::identity(3, 3) * Complex64::from(phi)).norm() < 1e-12);
    }

    #[test]
    fn zero_target_gives_unit() {
        let y = solve_auxiliary(&CMat::zeros(1, 1), 1.0);
        assert!((y[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn random_targets_satisfy_stationarity() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for rho in [0.1, 1.0, 10.0] {
            for _ in 0..50 {
                let a = complex_gaussian_matrix(4, 4, &mut rng) * Complex64::from(5.0);
                let q = hermitian_part(&a);
                let y = solve_auxiliary(&q, rho);
                let res = stationarity_residual(&y, &q, rho);
                assert!(res < 1e-8 * (1.0 + q.norm()), "rho {rho}: {res}");
                let (vals, _) = hermitian_eigen(&y);
                assert!(vals[0] > 0.0);
                if rho == 1.0 {
                    let inv = y.clone().cholesky().unwrap().inverse();
                    assert!((&y - inv - &q).norm() < 1e-8 * (1.0 + q.norm()));
                }
            }
        }
    }

    #[test]
    fn strongly_negative_eigenvalues_stay_positive() {
        let q = CMat::identity(2, 2) * Complex64::from(-1e8);
        let y = solve_auxiliary(&q, 1.0);
        let (vals, _) = hermitian_eigen(&y);
        assert!(vals[0] > 0.0);
        // root of y^2 + 1e8 y - 1 = 0 is about 1e-8
        assert!((vals[0] - 1e-8).abs() < 1e-20);
    }

    #[test]
    fn target_includes_minus_dual() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let z = hermitian_part(&complex_gaussian_matrix(2, 2, &mut rng));
        let u = CMat::identity(2, 1);
        let q = auxiliary_target(&u, &[2.0], &[1.0], &z, 0.5).unwrap();
        let mut expected = CMat::identity(2, 2) - &z;
        expected[(0, 0)] += Complex64::from(0.5 * 4.0);
        assert!((q - expected).norm() < 1e-14);
    }

    #[test]
    fn target_rejects_mismatched_lengths() {
        let u = CMat::identity(3, 2);
        assert!(auxiliary_target(&u, &[1.0], &[1.0, 1.0], &CMat::zeros(3, 3), 1.0).is_err());
        assert!(auxiliary_target(&u, &[1.0, 1.0], &[1.0, 1.0], &CMat::zeros(2, 2), 1.0).is_err());
    }
}
