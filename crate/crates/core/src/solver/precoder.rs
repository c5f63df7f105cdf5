use alloc::vec::Vec;

use num_complex::Complex64;

use super::Precoder;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::CMat;

/// Power allocation maximizing `sum_j ln(1 + c * sigma_j^2 * p_j)` with
/// `sum_j p_j = budget`, `p_j >= 0`.
///
/// The water level is found exactly: thresholds `1 / (c sigma_j^2)` are
/// sorted and the budget equation is solved in closed form for the largest
/// consistent active set. Streams with `sigma_j = 0` get no power.
pub fn water_filling(sigma: &[f64], c: f64, budget: f64) -> Result<Vec<f64>> {
    if !(c > 0.0) || !(budget > 0.0) {
        return Err(Error::InvalidConfig(alloc::format!(
            "water-filling needs positive scale and budget (c={c}, budget={budget})"
        )));
    }
    let mut usable: Vec<(usize, f64)> = sigma
        .iter()
        .enumerate()
        .filter_map(|(j, &s)| {
            let gain = c * s * s;
            (gain > 0.0 && gain.is_finite()).then(|| (j, 1.0 / gain))
        })
        .collect();
    if usable.is_empty() {
        return Err(Error::NoUsableStream);
    }
    usable.sort_by(|a, b| a.1.total_cmp(&b.1));

    let mut level = budget + usable[0].1;
    let mut prefix = 0.0;
    for (k, &(_, threshold)) in usable.iter().enumerate() {
        prefix += threshold;
        let candidate = (budget + prefix) / (k + 1) as f64;
        if candidate > threshold {
            level = candidate;
        } else {
            break;
        }
    }

    let mut powers = alloc::vec![0.0; sigma.len()];
    for &(j, threshold) in &usable {
        powers[j] = (level - threshold).max(0.0);
    }
    Ok(powers)
}

/// Result of the precoder block: `G = V diag(sqrt(p))` together with the
/// pieces of the truncated SVD `H = U Lambda V^H` reused by the auxiliary
/// update.
#[derive(Debug, Clone)]
pub struct PrecoderUpdate {
    pub precoder: Precoder,
    /// Left singular vectors, `Mr x Ms`.
    pub u: CMat,
    /// The `Ms` largest singular values, descending.
    pub singular_values: Vec<f64>,
    /// Water-filling powers, one per stream.
    pub powers: Vec<f64>,
}

pub fn update_precoder(h: &CMat, cfg: &SystemConfig) -> Result<PrecoderUpdate> {
    let ms = cfg.ms;
    let rank_cap = h.nrows().min(h.ncols());
    if ms > rank_cap {
        return Err(Error::DimensionMismatch {
            what: "stream count vs. channel rank bound",
            expected: (ms, ms),
            found: h.shape(),
        });
    }
    let svd = h.clone().svd(true, true);
    let u_full = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");

    // stable sort keeps the decomposition's column order among ties
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    order.truncate(ms);

    let singular_values: Vec<f64> = order.iter().map(|&k| svd.singular_values[k]).collect();
    let powers = water_filling(&singular_values, cfg.snr_scale(), ms as f64)?;

    let u = CMat::from_fn(h.nrows(), ms, |i, j| u_full[(i, order[j])]);
    let g = CMat::from_fn(h.ncols(), ms, |i, j| v_t[(order[j], i)].conj() * Complex64::from(libm::sqrt(powers[j])));
    Ok(PrecoderUpdate { precoder: Precoder::from_matrix_unchecked(g), u, singular_values, powers })
}
