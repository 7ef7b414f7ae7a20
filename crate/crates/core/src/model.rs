//! Zero-mean single-mode Gaussian states and their quadrature variance.
//!
//! Units: quadrature variances are in shot-noise units, where the vacuum
//! variance is exactly 1 (not 1/2).

use serde::ser::{Serialize, SerializeStruct, Serializer};

use crate::error::{Error, Result};
use crate::matrix::SymMatrix2;
use crate::numfmt::Report;
use crate::scalar::{wrap_to_period, Real};

/// The parameter triple `(s, κ, φ_s)`.
///
/// `s` is the squeezed/antisqueezed variance ratio, `κ` the thermal factor
/// (purity `1/κ`) and `φ_s` the angle of the squeezed quadrature, kept in
/// `[0, π)`.
///
/// [`StateParams::new`] enforces `0 < s ≤ 1` and `κ ≥ 1`. Estimates use
/// [`StateParams::unchecked`] because statistical noise can push them out of
/// the physical domain; check [`StateParams::is_physical`] for those.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateParams<T> {
    pub s: T,
    pub kappa: T,
    pub phi_s: T,
}

impl<T: Real> StateParams<T> {
    pub fn new(s: T, kappa: T, phi_s: T) -> Result<Self> {
        if !(s > T::zero() && s <= T::one()) {
            return Err(Error::InvalidParams(format!("s must be in (0, 1], got {s}")));
        }
        if !(kappa >= T::one()) || !kappa.is_finite() {
            return Err(Error::InvalidParams(format!("kappa must be >= 1, got {kappa}")));
        }
        if !phi_s.is_finite() {
            return Err(Error::InvalidParams(format!("phi_s must be finite, got {phi_s}")));
        }
        Ok(Self::unchecked(s, kappa, phi_s))
    }

    /// Builds parameters without domain checks; only the angle is
    /// canonicalized.
    pub fn unchecked(s: T, kappa: T, phi_s: T) -> Self {
        let phi_s = if phi_s.is_finite() {
            wrap_to_period(phi_s, T::PI())
        } else {
            phi_s
        };
        Self { s, kappa, phi_s }
    }

    /// The vacuum state, `s = κ = 1`.
    pub fn vacuum() -> Self {
        Self::unchecked(T::one(), T::one(), T::zero())
    }

    pub fn is_physical(&self) -> bool {
        self.s > T::zero() && self.s <= T::one() && self.kappa >= T::one() && self.phi_s.is_finite()
    }

    pub fn as_array(&self) -> [T; 3] {
        [self.s, self.kappa, self.phi_s]
    }

    /// The same variance curve written with `s ≤ 1`: a value `s > 1` means the
    /// axes are swapped, and `(s, κ, φ)` equals `(1/s, κ, φ + π/2)`.
    pub fn canonical(&self) -> Self {
        if self.s > T::one() && self.s.is_finite() {
            Self::unchecked(T::one() / self.s, self.kappa, self.phi_s + T::FRAC_PI_2())
        } else {
            *self
        }
    }

    /// Projects into the valid domain with `s ∈ [s_min, 1]`, `κ ∈ [1, κ_max]`.
    pub fn clamped(&self, s_min: T, kappa_max: T) -> Self {
        let s = if self.s.is_finite() { self.s.abs().max(s_min).min(T::one()) } else { T::one() };
        let kappa = if self.kappa.is_finite() {
            self.kappa.abs().max(T::one()).min(kappa_max)
        } else {
            T::one()
        };
        let phi = if self.phi_s.is_finite() { self.phi_s } else { T::zero() };
        Self::unchecked(s, kappa, phi)
    }

    pub fn purity(&self) -> T {
        T::one() / self.kappa
    }

    /// Quadrature variance at local-oscillator phase `psi`.
    pub fn variance(&self, psi: T) -> T {
        let (sin, cos) = (psi - self.phi_s).sin_cos();
        self.kappa * self.s * cos * cos + self.kappa / self.s * sin * sin
    }

    /// Analytic gradient of [`variance`](Self::variance) with respect to
    /// `(s, κ, φ_s)`.
    pub fn variance_gradient(&self, psi: T) -> [T; 3] {
        let x = psi - self.phi_s;
        let (sin, cos) = x.sin_cos();
        let (c2, s2) = (cos * cos, sin * sin);
        let s = self.s;
        let k = self.kappa;
        [
            k * c2 - k / (s * s) * s2,
            s * c2 + s2 / s,
            k * (s - T::one() / s) * (T::lit(2.0) * x).sin(),
        ]
    }

    /// The quadrature covariance matrix `Γ_θ`, with eigenvalues `κs` and `κ/s`
    /// and the small-eigenvalue axis at angle `φ_s`.
    pub fn covariance(&self) -> SymMatrix2<T> {
        let lo = self.kappa * self.s;
        let hi = self.kappa / self.s;
        let (sin, cos) = self.phi_s.sin_cos();
        SymMatrix2::new(
            lo * cos * cos + hi * sin * sin,
            (lo - hi) * cos * sin,
            lo * sin * sin + hi * cos * cos,
        )
    }

    /// Squeezing level `10 log₁₀(κs)` in dB; negative below shot noise.
    pub fn squeezing_db(&self) -> T {
        T::lit(10.0) * (self.kappa * self.s).log10()
    }

    pub fn cast<U: Real>(&self) -> StateParams<U> {
        StateParams {
            s: U::lit(self.s.as_f64()),
            kappa: U::lit(self.kappa.as_f64()),
            phi_s: U::lit(self.phi_s.as_f64()),
        }
    }
}

impl<T: Real> Serialize for StateParams<T> {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = ser.serialize_struct("StateParams", 3)?;
        st.serialize_field("s", &Report(self.s.as_f64()))?;
        st.serialize_field("kappa", &Report(self.kappa.as_f64()))?;
        st.serialize_field("phi_s", &Report(self.phi_s.as_f64()))?;
        st.end()
    }
}

/// Quadrature variance `κ s cos²(ψ−φ_s) + (κ/s) sin²(ψ−φ_s)`.
pub fn eval_variance<T: Real>(params: &StateParams<T>, psi: T) -> T {
    params.variance(psi)
}

pub fn state_covariance<T: Real>(params: &StateParams<T>) -> SymMatrix2<T> {
    params.covariance()
}

pub fn squeezing_db<T: Real>(params: &StateParams<T>) -> T {
    params.squeezing_db()
}

/// Member of the `κ = 1/√s` family observed when the detected temporal mode
/// is varied.
pub fn empirical_family<T: Real>(s: T, phi_s: T) -> Result<StateParams<T>> {
    if !(s > T::zero() && s <= T::one()) {
        return Err(Error::InvalidParams(format!("s must be in (0, 1], got {s}")));
    }
    StateParams::new(s, T::one() / s.sqrt(), phi_s)
}

/// Recovers `(s, κ, φ_s)` from a quadrature covariance matrix by its
/// eigensystem. The values are returned unchecked.
pub fn params_from_covariance<T: Real>(cov: &SymMatrix2<T>) -> StateParams<T> {
    let e = cov.eigen();
    StateParams::unchecked(
        (e.lambda_min / e.lambda_max).abs().sqrt(),
        (e.lambda_min * e.lambda_max).abs().sqrt(),
        e.angle_min,
    )
}

#[cfg(test)]
#[allow(clippy::approx_constant)] // 1.41421 is a rounded input, not √2
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn p(s: f64, k: f64, phi: f64) -> StateParams<f64> {
        StateParams::new(s, k, phi).unwrap()
    }

    #[test]
    fn canonical_keeps_the_variance_curve() {
        let swapped = StateParams::unchecked(4.0, 2.0, 0.1);
        let c = swapped.canonical();
        assert_relative_eq!(c.s, 0.25);
        for psi in [0.0, 0.4, 1.3, 2.9] {
            assert_relative_eq!(eval_variance(&swapped, psi), eval_variance(&c, psi), epsilon = 1e-12);
        }
        assert_eq!(p(0.3, 2.0, 0.5).canonical(), p(0.3, 2.0, 0.5));
    }

    #[test]
    fn vacuum_is_phase_invariant() {
        assert_eq!(eval_variance(&p(1.0, 1.0, 0.0), 0.7), 1.0);
    }

    #[test]
    fn squeezed_quadrature_has_kappa_s() {
        let st = p(0.3, 1.7, 1.1);
        assert_relative_eq!(st.variance(1.1), 0.3 * 1.7, epsilon = 1e-15);
    }

    #[test]
    fn variance_at_quarter_turn() {
        // 1.41421 * (0.5 * 0.5 + 2 * 0.5)
        let v = eval_variance(&p(0.5, 1.41421, 0.0), PI / 4.0);
        assert_relative_eq!(v, 1.7677625, epsilon = 1e-12);
        assert!((v - 1.76777).abs() < 1e-5);
    }

    #[test]
    fn variance_matches_independent_form_at_random_phases() {
        // cos²/sin² expanded through the double angle: V = κ[(s + 1/s) + (s - 1/s) cos 2x] / 2
        let st = p(0.5, 1.41421, 0.0);
        let mut x = 0.123_f64;
        for _ in 0..10 {
            x = (x * 7.77 + 0.31) % (2.0 * PI);
            let alt = st.kappa * ((st.s + 1.0 / st.s) + (st.s - 1.0 / st.s) * (2.0 * x).cos()) / 2.0;
            assert_relative_eq!(st.variance(x), alt, epsilon = 1e-13);
        }
    }

    #[test]
    fn invalid_domain_rejected() {
        assert!(StateParams::new(0.0, 1.0, 0.0).is_err());
        assert!(StateParams::new(1.2, 1.0, 0.0).is_err());
        assert!(StateParams::new(0.5, 0.9, 0.0).is_err());
        assert!(StateParams::new(0.5, f64::NAN, 0.0).is_err());
        assert!(empirical_family(-0.1, 0.0).is_err());
    }

    #[test]
    fn angle_canonicalized() {
        let st = p(0.5, 2.0, -0.25);
        assert_relative_eq!(st.phi_s, PI - 0.25, epsilon = 1e-15);
        let st = p(0.5, 2.0, PI + 0.25);
        assert_relative_eq!(st.phi_s, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn covariance_examples() {
        let c = p(1.0, 1.0, 0.4).covariance();
        assert_relative_eq!(c.xx, 1.0, epsilon = 1e-15);
        assert!(c.xp.abs() < 1e-15);
        assert_relative_eq!(c.pp, 1.0, epsilon = 1e-15);
        let c = p(0.5, 2.0, 0.0).covariance();
        assert_eq!((c.xx, c.xp, c.pp), (1.0, 0.0, 4.0));
    }

    #[test]
    fn squeezing_levels() {
        assert_eq!(p(1.0, 1.0, 0.0).squeezing_db(), 0.0);
        let top = empirical_family(0.20893, 0.0).unwrap();
        assert_relative_eq!(top.kappa, 2.18776, epsilon = 1e-5);
        assert_relative_eq!(top.squeezing_db(), -3.4, epsilon = 1e-3);
        assert_relative_eq!(top.purity(), 0.457, epsilon = 1e-3);
        let low = empirical_family(0.49205, 0.0).unwrap();
        assert_relative_eq!(low.squeezing_db(), -1.54, epsilon = 1e-3);
        assert_eq!(empirical_family(1.0, 0.0).unwrap().kappa, 1.0);
    }

    #[test]
    fn mean_over_half_period_by_quadrature() {
        let st = p(0.37, 1.9, 0.8);
        let n = 20_000;
        // periodic trapezoid is spectrally accurate for the trigonometric integrand
        let mean: f64 = (0..n).map(|j| st.variance(PI * j as f64 / n as f64)).sum::<f64>() / n as f64;
        let expected = st.kappa * (1.0 + st.s * st.s) / (2.0 * st.s);
        assert!((mean - expected).abs() < 1e-10);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let st = p(0.42, 1.6, 0.9);
        let h = 1e-6;
        for &psi in &[0.0, 0.4, 1.3, 2.9] {
            let g = st.variance_gradient(psi);
            let fd = [
                (p(0.42 + h, 1.6, 0.9).variance(psi) - p(0.42 - h, 1.6, 0.9).variance(psi)) / (2.0 * h),
                (p(0.42, 1.6 + h, 0.9).variance(psi) - p(0.42, 1.6 - h, 0.9).variance(psi)) / (2.0 * h),
                (p(0.42, 1.6, 0.9 + h).variance(psi) - p(0.42, 1.6, 0.9 - h).variance(psi)) / (2.0 * h),
            ];
            for k in 0..3 {
                assert!((g[k] - fd[k]).abs() <= 1e-6 * fd[k].abs().max(1e-3), "k={k} {g:?} {fd:?}");
            }
        }
    }

    #[test]
    fn works_in_single_precision() {
        let st = StateParams::<f32>::new(0.5, 2.0, 0.3).unwrap();
        assert!((st.variance(0.3) - 1.0).abs() < 1e-6);
        let back = params_from_covariance(&st.covariance());
        assert!((back.s - 0.5).abs() < 1e-5 && (back.kappa - 2.0).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn variance_is_pi_periodic(s in 0.01f64..=1.0, k in 1.0f64..10.0, phi in 0.0f64..PI, psi in -10.0f64..10.0) {
            let st = p(s, k, phi);
            let a = st.variance(psi);
            let b = st.variance(psi + PI);
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
            prop_assert!(a >= k * s * (1.0 - 1e-12) && a <= k / s * (1.0 + 1e-12));
        }

        #[test]
        fn extremes_at_squeezed_and_antisqueezed_axes(s in 0.01f64..=1.0, k in 1.0f64..10.0, phi in 0.0f64..PI) {
            let st = p(s, k, phi);
            prop_assert!((st.variance(phi) - k * s).abs() <= 1e-12 * k / s);
            prop_assert!((st.variance(phi + PI / 2.0) - k / s).abs() <= 1e-12 * k / s);
        }

        #[test]
        fn covariance_round_trips_through_eigensystem(s in 0.02f64..0.999, k in 1.0f64..10.0, phi in 0.0f64..PI) {
            let st = p(s, k, phi);
            let cov = st.covariance();
            prop_assert!((cov.det() - k * k).abs() <= 1e-12 * k * k / s);
            prop_assert!((cov.xx - st.variance(0.0)).abs() <= 1e-12 * k / s);
            let back = params_from_covariance(&cov);
            prop_assert!((back.s - s).abs() <= 1e-12 / s.min(1.0 - s).max(1e-3));
            prop_assert!((back.kappa - k).abs() <= 1e-12 * k / s);
            let dphi = crate::scalar::circular_distance(back.phi_s, phi, PI);
            prop_assert!(dphi <= 1e-12 / (1.0 - s).powi(2).max(1e-6), "dphi {}", dphi);
        }
    }
}
