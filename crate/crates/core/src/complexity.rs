//! Complex-multiplication cost models.
//!
//! Every formula is evaluated as an exact polynomial count. Terms with a
//! factor of one half are accumulated in doubled integers and the total is
//! rounded to the nearest integer only at the end.

use core::fmt;

use crate::error::{Error, Result};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Realization count of the alternating-optimization baseline when none is given.
pub const DEFAULT_AO_REALIZATIONS: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Method {
    AdmmApg,
    Ladmm,
    Ao,
    Pgm,
    Spgm,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::AdmmApg, Method::Ladmm, Method::Ao, Method::Pgm, Method::Spgm];

    pub fn name(self) -> &'static str {
        match self {
            Method::AdmmApg => "ADMM-APG",
            Method::Ladmm => "LADMM",
            Method::Ao => "AO",
            Method::Pgm => "PGM",
            Method::Spgm => "SPGM",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Dimensions and iteration counts for a cost evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CostQuery {
    pub mt: u64,
    pub mr: u64,
    pub mi: u64,
    pub ms: u64,
    /// Outer iterations of ADMM-APG and PGM.
    pub iterations: u64,
    /// Inner iterations `I_L` of LADMM.
    pub ladmm_iterations: Option<u64>,
    /// Inner iterations `I_s` of SPGM.
    pub spgm_iterations: Option<u64>,
    /// Iterations `I_AO` of AO.
    pub ao_iterations: Option<u64>,
    /// Independent phase realizations `L_AO` of AO.
    pub ao_realizations: Option<u64>,
}

impl CostQuery {
    /// Query without method-specific extras.
    pub fn new(mt: u64, mr: u64, mi: u64, ms: u64, iterations: u64) -> Self {
        Self {
            mt,
            mr,
            mi,
            ms,
            iterations,
            ladmm_iterations: None,
            spgm_iterations: None,
            ao_iterations: None,
            ao_realizations: None,
        }
    }

    pub fn with_ladmm_iterations(mut self, n: u64) -> Self {
        self.ladmm_iterations = Some(n);
        self
    }

    pub fn with_spgm_iterations(mut self, n: u64) -> Self {
        self.spgm_iterations = Some(n);
        self
    }

    pub fn with_ao(mut self, iterations: u64, realizations: u64) -> Self {
        self.ao_iterations = Some(iterations);
        self.ao_realizations = Some(realizations);
        self
    }

    /// `r = min(Mt, Mr)`.
    pub fn r(&self) -> u64 {
        self.mt.min(self.mr)
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("mt", Some(self.mt)),
            ("mr", Some(self.mr)),
            ("mi", Some(self.mi)),
            ("ms", Some(self.ms)),
            ("iterations", Some(self.iterations)),
            ("ladmm_iterations", self.ladmm_iterations),
            ("spgm_iterations", self.spgm_iterations),
            ("ao_iterations", self.ao_iterations),
            ("ao_realizations", self.ao_realizations),
        ];
        for (name, value) in counts {
            if value == Some(0) {
                return Err(Error::InvalidConfig(alloc::format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

/// A cost split into a one-time part and a repeated part.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Cost {
    pub method: Method,
    /// Twice the one-time count.
    one_time_x2: u128,
    /// Twice the count of one repetition.
    per_repetition_x2: u128,
    pub repetitions: u64,
}

impl Cost {
    pub fn one_time(&self) -> f64 {
        self.one_time_x2 as f64 / 2.0
    }

    /// Count of a single repetition (outer or inner iteration, depending on the method).
    pub fn per_iteration(&self) -> f64 {
        self.per_repetition_x2 as f64 / 2.0
    }

    /// `one_time + repetitions * per_iteration`, rounded to the nearest integer.
    pub fn total(&self) -> u64 {
        let x2 = self.one_time_x2 + self.per_repetition_x2 * self.repetitions as u128;
        let rounded = x2.div_ceil(2);
        u64::try_from(rounded).unwrap_or(u64::MAX)
    }
}

fn require(value: Option<u64>, method: Method, parameter: &'static str) -> Result<u64> {
    value.ok_or(Error::MissingParameter { method: method.name(), parameter })
}

fn dims(q: &CostQuery) -> Result<(u128, u128, u128, u128, u128)> {
    q.validate()?;
    Ok((q.mt as u128, q.mr as u128, q.mi as u128, q.ms as u128, q.r() as u128))
}

/// ADMM-APG: per-iteration count times `iterations`.
pub fn cc_admm_apg(q: &CostQuery) -> Result<Cost> {
    let (mt, mr, mi, ms, r) = dims(q)?;
    let per_x2 = 2
        * (2 * mt * mr * mi + mt * mr * r + mr * mr * mi + mt * mi * ms + mr * mi * ms + ms * mi + mt * mr * ms)
        + 3 * mr * mr * ms
        + mr * mr * mr;
    Ok(Cost { method: Method::AdmmApg, one_time_x2: 0, per_repetition_x2: per_x2, repetitions: q.iterations })
}

/// LADMM: setup terms plus `I_L` times `Mi^2`.
pub fn cc_ladmm(q: &CostQuery) -> Result<Cost> {
    let (mt, mr, mi, _, r) = dims(q)?;
    let inner = require(q.ladmm_iterations, Method::Ladmm, "ladmm_iterations")?;
    Ok(Cost {
        method: Method::Ladmm,
        one_time_x2: 2 * (mt * mr * r + mi * mi * mt + mt * mr * mi),
        per_repetition_x2: 2 * mi * mi,
        repetitions: inner,
    })
}

/// SPGM: setup terms plus `I_s` times `Mi^3`.
pub fn cc_spgm(q: &CostQuery) -> Result<Cost> {
    let (mt, mr, mi, _, r) = dims(q)?;
    let inner = require(q.spgm_iterations, Method::Spgm, "spgm_iterations")?;
    Ok(Cost {
        method: Method::Spgm,
        one_time_x2: 2 * (mt * mr * r + mi * mi * mt + mt * mr * mi),
        per_repetition_x2: 2 * mi * mi * mi,
        repetitions: inner,
    })
}

/// PGM: per-iteration count times `iterations`.
pub fn cc_pgm(q: &CostQuery) -> Result<Cost> {
    let (mt, mr, mi, _, _) = dims(q)?;
    let per_x2 = 2 * (2 * mt * mr * mi + 2 * mt * mt * mr + mr * mi + mt * mi + 3 * mi + mr * mr * mr)
        + 3 * mt * mt * mt
        + 3 * mr * mr * mt;
    Ok(Cost { method: Method::Pgm, one_time_x2: 0, per_repetition_x2: per_x2, repetitions: q.iterations })
}

/// AO: `L_AO` random initializations followed by `I_AO` alternating sweeps.
pub fn cc_ao(q: &CostQuery) -> Result<Cost> {
    let (mt, mr, mi, _, r) = dims(q)?;
    let iterations = require(q.ao_iterations, Method::Ao, "ao_iterations")?;
    let l = require(q.ao_realizations, Method::Ao, "ao_realizations")? as u128;
    let svd_x2 = 2 * r * r * r + mt * mt * r;
    let one_time_x2 = 2 * (l + 1) * mt * mr * mi + l * svd_x2;
    let per_x2 =
        2 * (mt * mt * mt + mt * mt * mi + 2 * mt * mr * mi + (2 * mt * mr * mr + 2 * mr * mr * mr) * mi) + svd_x2;
    Ok(Cost { method: Method::Ao, one_time_x2, per_repetition_x2: per_x2, repetitions: iterations })
}

pub fn cost(method: Method, q: &CostQuery) -> Result<Cost> {
    match method {
        Method::AdmmApg => cc_admm_apg(q),
        Method::Ladmm => cc_ladmm(q),
        Method::Ao => cc_ao(q),
        Method::Pgm => cc_pgm(q),
        Method::Spgm => cc_spgm(q),
    }
}
