use super::{covariance_or_infinite, EstimateFlags, EstimateResult, Method};
use crate::bounds::fisher_dhd;
use crate::data::DhdBatch;
use crate::error::{Error, Result};
use crate::matrix::SymMatrix2;
use crate::model::StateParams;
use crate::scalar::Real;

/// Sample second moments `⟨q₁²⟩`, `⟨q₁p₂⟩`, `⟨p₂²⟩` (zero mean is known).
pub fn dhd_moments<T: Real>(batch: &DhdBatch<T>) -> SymMatrix2<T> {
    let (xx, xp, pp) = batch
        .iter()
        .fold((T::zero(), T::zero(), T::zero()), |(xx, xp, pp), (q, p)| {
            (xx + q * q, xp + q * p, pp + p * p)
        });
    let mu = T::lit(batch.mu() as f64);
    SymMatrix2::new(xx / mu, xp / mu, pp / mu)
}

/// Estimates `(s, κ, φ_s)` from the eigensystem of `Γ − I`.
pub fn dhd_estimate<T: Real>(batch: &DhdBatch<T>) -> Result<EstimateResult<T>> {
    if batch.mu() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: batch.mu() });
    }
    let state_cov = dhd_moments(batch).sub(&SymMatrix2::identity());
    let eig = state_cov.eigen();
    let (lo, hi) = (eig.lambda_min, eig.lambda_max);

    let mut flags = EstimateFlags {
        nonphysical: !(lo > T::zero()),
        ..EstimateFlags::default()
    };
    let spread = lo.abs() + hi.abs();
    let phi = if hi - lo <= T::conditioning_eps() * spread {
        flags.degenerate = true;
        T::zero()
    } else {
        eig.angle_min
    };
    let params = StateParams::unchecked((lo / hi).abs().sqrt(), (lo * hi).abs().sqrt(), phi);
    let physical = !flags.nonphysical && params.is_physical();
    let predicted_cov = if params.s.is_finite() && params.kappa.is_finite() && params.s > T::zero() {
        covariance_or_infinite(&fisher_dhd(&params).scale(T::lit(batch.mu() as f64)))
    } else {
        covariance_or_infinite(&crate::matrix::SymMatrix3::zeros())
    };
    Ok(EstimateResult {
        params,
        predicted_cov,
        method: Method::Dhd,
        physical,
        flags,
        iterations: 1,
        prior_used: None,
        n_samples: batch.mu(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// A batch whose sample covariance equals `cov` exactly: four points
    /// `±a, ±b` built from the Cholesky factor, each repeated.
    fn batch_with_covariance(cov: &SymMatrix2<f64>) -> DhdBatch<f64> {
        let l11 = cov.xx.sqrt();
        let l21 = cov.xp / l11;
        let l22 = (cov.pp - l21 * l21).sqrt();
        let r = 2f64.sqrt();
        let pts = [(r * l11, r * l21), (-r * l11, -r * l21), (0.0, r * l22), (0.0, -r * l22)];
        let (q1, p2) = pts.iter().cycle().take(400).copied().unzip();
        DhdBatch::new(q1, p2).unwrap()
    }

    #[test]
    fn moments_reproduce_constructed_covariance() {
        let cov = SymMatrix2::new(2.5, 0.7, 4.0);
        let m = dhd_moments(&batch_with_covariance(&cov));
        assert_relative_eq!(m.xx, 2.5, epsilon = 1e-12);
        assert_relative_eq!(m.xp, 0.7, epsilon = 1e-12);
        assert_relative_eq!(m.pp, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn noiseless_round_trip() {
        let st = StateParams::new(0.5, 2.0, 0.3).unwrap();
        let gamma = st.covariance().add(&SymMatrix2::identity());
        let est = dhd_estimate(&batch_with_covariance(&gamma)).unwrap();
        assert_relative_eq!(est.params.s, 0.5, epsilon = 1e-12);
        assert_relative_eq!(est.params.kappa, 2.0, epsilon = 1e-12);
        assert_relative_eq!(est.params.phi_s, 0.3, epsilon = 1e-12);
        assert!(est.physical);
        let crb = crate::bounds::crb_dhd(&st, 400);
        assert_relative_eq!(est.predicted_cov.get(0, 0), crb.var_s, epsilon = 1e-12);
    }

    #[test]
    fn negative_eigenvalue_is_flagged() {
        // Γ − I = diag(−0.01, 0.2)
        let est = dhd_estimate(&batch_with_covariance(&SymMatrix2::new(0.99, 0.0, 1.2))).unwrap();
        assert!(est.flags.nonphysical);
        assert!(!est.physical);
        assert_relative_eq!(est.params.s, (0.01f64 / 0.2).sqrt(), epsilon = 1e-12);
        assert_relative_eq!(est.params.kappa, (0.01f64 * 0.2).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn isotropic_covariance_is_degenerate() {
        let est = dhd_estimate(&batch_with_covariance(&SymMatrix2::new(3.0, 0.0, 3.0))).unwrap();
        assert!(est.flags.degenerate);
        assert_eq!(est.params.phi_s, 0.0);
        assert_relative_eq!(est.params.s, 1.0, epsilon = 1e-12);
        assert_relative_eq!(est.params.kappa, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn too_few_repetitions() {
        let b = DhdBatch::new(vec![1.0, 2.0], vec![0.0, 1.0]).unwrap();
        assert!(dhd_estimate(&b).is_err());
    }
}
