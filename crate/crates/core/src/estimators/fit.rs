use num_complex::Complex;

use super::{EstimateFlags, EstimateResult, Method};
use crate::bounds::fit_variance_prediction;
use crate::data::HomodyneScan;
use crate::error::{Error, Result};
use crate::matrix::SymMatrix3;
use crate::model::StateParams;
use crate::scalar::Real;

/// Zeroth and second Fourier components of the squared quadratures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierComponents<T> {
    pub c0: T,
    pub c2: Complex<T>,
}

/// `c0 = ⟨q²⟩`, `c2 = ⟨q² e^{-2iψ}⟩` over the scan.
pub fn fourier_components<T: Real>(scan: &HomodyneScan<T>) -> FourierComponents<T> {
    let two = T::lit(2.0);
    let (c0, c2) = scan.iter().fold(
        (T::zero(), Complex::new(T::zero(), T::zero())),
        |(c0, c2), (psi, q)| {
            let q2 = q * q;
            let (sin, cos) = (two * psi).sin_cos();
            (c0 + q2, c2 + Complex::new(q2 * cos, -q2 * sin))
        },
    );
    let n = T::lit(scan.len() as f64);
    FourierComponents { c0: c0 / n, c2: c2 / n }
}

/// Least-squares fit of the variance curve, solved through its Fourier
/// components.
///
/// With `lo = c0 − 2|c2|` (the squeezed variance `κs`) and `hi = c0 + 2|c2|`
/// (the antisqueezed variance `κ/s`): `s = √(lo/hi)`, `κ = √(lo·hi)`, and the
/// squeezed axis is `φ_s = −½ arg(−c2)`. A negative `lo` is reported through
/// absolute values and flagged.
pub fn fit_estimate<T: Real>(scan: &HomodyneScan<T>) -> Result<EstimateResult<T>> {
    if scan.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: scan.len() });
    }
    Ok(fit_from_components(&fourier_components(scan), scan.len()))
}

pub fn fit_from_components<T: Real>(fc: &FourierComponents<T>, n_samples: usize) -> EstimateResult<T> {
    let two = T::lit(2.0);
    let amplitude = fc.c2.norm();
    let lo = fc.c0 - two * amplitude;
    let hi = fc.c0 + two * amplitude;

    let mut flags = EstimateFlags::default();
    let phi = if amplitude == T::zero() {
        flags.degenerate = true;
        T::zero()
    } else {
        -(-fc.c2).arg() / two
    };
    flags.nonphysical = !(lo > T::zero());

    let params = StateParams::unchecked((lo / hi).abs().sqrt(), (lo * hi).abs().sqrt(), phi);
    let physical = !flags.nonphysical && params.is_physical();
    let pred = fit_variance_prediction(&params, n_samples).as_array();
    EstimateResult {
        params,
        predicted_cov: SymMatrix3::diagonal(pred.map(T::lit)),
        method: Method::Fit,
        physical,
        flags,
        iterations: 1,
        prior_used: None,
        n_samples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::uniform_phases;
    use crate::scalar::circular_distance;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn expected_scan(s: f64, k: f64, phi: f64) -> HomodyneScan<f64> {
        let st = StateParams::new(s, k, phi).unwrap();
        HomodyneScan::expected_moments(&st, uniform_phases(900, 2)).unwrap()
    }

    #[test]
    fn components_of_expected_moments() {
        let (s, k, phi) = (0.4, 1.7, 0.3);
        let fc = fourier_components(&expected_scan(s, k, phi));
        assert_relative_eq!(fc.c0, k * (1.0 + s * s) / (2.0 * s), epsilon = 1e-12);
        assert_relative_eq!(fc.c2.re, -k * (1.0 - s * s) * (2.0 * phi).cos() / (4.0 * s), epsilon = 1e-12);
        assert_relative_eq!(fc.c2.im, k * (1.0 - s * s) * (2.0 * phi).sin() / (4.0 * s), epsilon = 1e-12);
    }

    #[test]
    fn vacuum_components() {
        let fc = fourier_components(&expected_scan(1.0, 1.0, 0.0));
        assert_relative_eq!(fc.c0, 1.0, epsilon = 1e-14);
        assert!(fc.c2.norm() < 1e-14);
    }

    #[test]
    fn single_sample_components() {
        let scan = HomodyneScan::new(vec![0.0], vec![2.0]).unwrap();
        let fc = fourier_components(&scan);
        assert_eq!(fc.c0, 4.0);
        assert_eq!(fc.c2, Complex::new(4.0, 0.0));
        assert!(matches!(fit_estimate(&scan), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn exact_recovery_on_expected_moments() {
        let est = fit_estimate(&expected_scan(0.5, 2.0, 0.3)).unwrap();
        assert_relative_eq!(est.params.s, 0.5, epsilon = 1e-12);
        assert_relative_eq!(est.params.kappa, 2.0, epsilon = 1e-12);
        assert_relative_eq!(est.params.phi_s, 0.3, epsilon = 1e-12);
        assert!(est.physical);
        assert_eq!(est.method, Method::Fit);
    }

    #[test]
    fn exact_vacuum_is_degenerate() {
        let scan = HomodyneScan::new(vec![0.0, 1.0, 2.0], vec![1.0, 1.0, 1.0]).unwrap();
        let fc = FourierComponents { c0: 1.3, c2: Complex::new(0.0, 0.0) };
        let est = fit_from_components(&fc, scan.len());
        assert_eq!(est.params.s, 1.0);
        assert_relative_eq!(est.params.kappa, 1.3, epsilon = 1e-15);
        assert!(est.flags.degenerate);
        assert_eq!(est.params.phi_s, 0.0);
    }

    #[test]
    fn negative_squeezed_variance_is_flagged_not_clamped() {
        let fc = FourierComponents { c0: 1.0, c2: Complex::new(-0.6, 0.0) };
        let est = fit_from_components(&fc, 900);
        assert!(est.flags.nonphysical);
        assert!(!est.physical);
        assert_relative_eq!(est.params.kappa, (0.2f64 * 2.2).sqrt(), epsilon = 1e-14);
        assert_relative_eq!(est.params.s, (0.2f64 / 2.2).sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn exact_on_grid() {
        for i in 0..10 {
            for j in 0..10 {
                for l in 0..4 {
                    let s = 0.1 + 0.089 * i as f64;
                    let k = 1.0 + 0.5 * j as f64;
                    let phi = 0.1 + 0.75 * l as f64;
                    let est = fit_estimate(&expected_scan(s, k, phi)).unwrap();
                    assert!((est.params.s - s).abs() < 1e-10);
                    assert!((est.params.kappa - k).abs() < 1e-10);
                    assert!(circular_distance(est.params.phi_s, phi, PI) < 1e-10);
                }
            }
        }
    }

    #[test]
    fn rotation_and_scaling_behaviour() {
        let base = expected_scan(0.3, 1.8, 0.4);
        let noisy: Vec<f64> = base.samples().iter().enumerate().map(|(j, q)| q * (1.0 + 0.3 * ((j * 37 % 11) as f64 / 11.0 - 0.5))).collect();
        let scan = HomodyneScan::new(base.phases().to_vec(), noisy.clone()).unwrap();
        let est = fit_estimate(&scan).unwrap();

        let delta = 0.77;
        let rotated = HomodyneScan::new(base.phases().iter().map(|p| p + delta).collect(), noisy.clone()).unwrap();
        let est_r = fit_estimate(&rotated).unwrap();
        assert_relative_eq!(est_r.params.s, est.params.s, epsilon = 1e-12);
        assert_relative_eq!(est_r.params.kappa, est.params.kappa, epsilon = 1e-12);
        assert!(circular_distance(est_r.params.phi_s, est.params.phi_s + delta, PI) < 1e-12);

        let g = 1.7;
        let scaled = HomodyneScan::new(base.phases().to_vec(), noisy.iter().map(|q| g * q).collect()).unwrap();
        let est_g = fit_estimate(&scaled).unwrap();
        assert_relative_eq!(est_g.params.s, est.params.s, epsilon = 1e-12);
        assert_relative_eq!(est_g.params.kappa, g * g * est.params.kappa, epsilon = 1e-12);
    }

    #[test]
    fn single_precision_recovery() {
        let st = StateParams::<f32>::new(0.5, 2.0, 0.3).unwrap();
        let scan = HomodyneScan::expected_moments(&st, uniform_phases(900, 2)).unwrap();
        let est = fit_estimate(&scan).unwrap();
        assert!((est.params.s - 0.5).abs() < 1e-4);
        assert!((est.params.kappa - 2.0).abs() < 1e-4);
        assert!((est.params.phi_s - 0.3).abs() < 1e-4);
    }
}
