//! Parameter estimators: the Fourier least-squares fit, the iterative
//! moment-based estimator with optimal weights, and the double-homodyne
//! covariance-eigensystem estimator.
//!
//! Estimators never clamp. When noise pushes an intermediate quantity out of
//! the physical domain the value is still reported and `physical` is false.

mod dhd;
mod fit;
mod mom;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bounds::invert_information;
use crate::matrix::SymMatrix3;
use crate::model::StateParams;
use crate::scalar::Real;

pub use dhd::{dhd_estimate, dhd_moments};
pub use fit::{fit_estimate, fit_from_components, fourier_components, FourierComponents};
pub use mom::{mom_estimate, mom_step, mom_weights, next_prior, MomOptions, MomSolver};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Fit,
    Mom,
    Dhd,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Fit, Method::Mom, Method::Dhd];

    pub fn name(self) -> &'static str {
        match self {
            Method::Fit => "fit",
            Method::Mom => "mom",
            Method::Dhd => "dhd",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fit" => Ok(Method::Fit),
            "mom" => Ok(Method::Mom),
            "dhd" => Ok(Method::Dhd),
            other => Err(format!("unknown method `{other}` (expected fit, mom or dhd)")),
        }
    }
}

/// Conditions raised while estimating. None of them abort the estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct EstimateFlags {
    /// The angle is undefined (`C₂ = 0`, or equal DHD eigenvalues); reported as 0.
    pub degenerate: bool,
    /// An absolute-value guard or square root saw a value of the wrong sign.
    pub nonphysical: bool,
    /// The prior had `s = 1`, where the moment weights carry no angle information.
    pub singular_prior: bool,
    pub no_convergence: bool,
    /// Seeding from the fit failed and the fixed default prior was used.
    pub seed_fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct EstimateResult<T> {
    pub params: StateParams<T>,
    /// Model-based covariance of the estimate, evaluated at the estimate.
    pub predicted_cov: SymMatrix3<T>,
    pub method: Method,
    pub physical: bool,
    pub flags: EstimateFlags,
    pub iterations: usize,
    pub prior_used: Option<StateParams<T>>,
    pub n_samples: usize,
}

impl<T: Real> EstimateResult<T> {
    /// Predicted standard errors `√diag(cov)`.
    pub fn std_errors(&self) -> [T; 3] {
        self.predicted_cov.diag().map(|v| v.abs().sqrt())
    }

    pub fn squeezing_db(&self) -> T {
        self.params.squeezing_db()
    }

    /// First-order standard error of the squeezing level in dB.
    pub fn squeezing_db_std(&self) -> T {
        let (s, k) = (self.params.s, self.params.kappa);
        let c = &self.predicted_cov;
        let var_ks = k * k * c.get(0, 0) + s * s * c.get(1, 1) + T::lit(2.0) * k * s * c.get(0, 1);
        T::lit(10.0) / T::LN_10() * var_ks.abs().sqrt() / (k * s).abs()
    }
}

/// Inverse of an information matrix, or `+∞` on the diagonal when it cannot
/// be inverted.
pub(crate) fn covariance_or_infinite<T: Real>(info: &SymMatrix3<T>) -> SymMatrix3<T> {
    invert_information(info).unwrap_or_else(|_| SymMatrix3::diagonal([T::infinity(); 3]))
}
