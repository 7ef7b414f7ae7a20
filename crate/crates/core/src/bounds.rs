//! Fisher information, Cramér–Rao bounds and the fit-variance prediction for
//! homodyne and double-homodyne detection.
//!
//! Infinite bounds (no information about an angle at `s = 1`, or the QFI pole
//! at `κ = 1`) are reported as `+∞` rather than as overflowed arithmetic.

use serde::Serialize;

use crate::error::Result;
use crate::matrix::{SymMatrix2, SymMatrix3};
use crate::model::StateParams;
use crate::numfmt;
use crate::scalar::Real;

/// Per-parameter variance lower bounds normalized to `n_samples`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundVector {
    #[serde(serialize_with = "numfmt::serialize_f64")]
    pub var_s: f64,
    #[serde(serialize_with = "numfmt::serialize_f64")]
    pub var_kappa: f64,
    #[serde(serialize_with = "numfmt::serialize_f64")]
    pub var_phi: f64,
    pub n_samples: usize,
}

impl BoundVector {
    fn from_per_sample<T: Real>(per_sample: [T; 3], n_samples: usize) -> Self {
        let n = n_samples as f64;
        Self {
            var_s: per_sample[0].as_f64() / n,
            var_kappa: per_sample[1].as_f64() / n,
            var_phi: per_sample[2].as_f64() / n,
            n_samples,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.var_s, self.var_kappa, self.var_phi]
    }
}

/// `n_samples` equispaced phases over `[0, range_multiplier · π)`.
pub fn uniform_phases<T: Real>(n_samples: usize, range_multiplier: u32) -> Vec<T> {
    let span = T::PI() * T::lit(range_multiplier as f64);
    let n = T::lit(n_samples as f64);
    (0..n_samples)
        .map(|j| span * T::lit(j as f64) / n)
        .collect()
}

/// Homodyne Fisher information summed over the given phases:
/// `F_αβ = Σ_j (1 / 2V_j²) ∂_αV_j ∂_βV_j`.
///
/// At `s = 1` the φ_s row and column are exactly zero and the matrix is
/// singular; [`SymMatrix3::inverse`] reports that.
pub fn fisher_homodyne_discrete<T: Real>(params: &StateParams<T>, phases: &[T]) -> SymMatrix3<T> {
    let half = T::lit(0.5);
    phases.iter().fold(SymMatrix3::zeros(), |acc, &psi| {
        let v = params.variance(psi);
        acc.add(&SymMatrix3::outer(params.variance_gradient(psi), half / (v * v)))
    })
}

/// Per-sample homodyne Fisher information averaged over a uniform phase.
///
/// The integrand is a smooth π-periodic function, so the periodic trapezoid
/// rule on 4096 nodes is accurate to rounding for `s ≳ 0.01`.
pub fn fisher_homodyne_mean<T: Real>(params: &StateParams<T>) -> SymMatrix3<T> {
    const NODES: usize = 4096;
    let phases = uniform_phases::<T>(NODES, 1);
    fisher_homodyne_discrete(params, &phases).scale(T::one() / T::lit(NODES as f64))
}

/// Inverts an information matrix, falling back to the `(s, κ)` block when the
/// φ_s row is identically zero.
pub fn invert_information<T: Real>(info: &SymMatrix3<T>) -> Result<SymMatrix3<T>> {
    let angle_row_zero = (0..3).all(|k| info.get(2, k) == T::zero());
    if angle_row_zero {
        info.inverse_without_angle()
    } else {
        info.inverse()
    }
}

/// Cramér–Rao bound from the discrete Fisher sum over `phases`.
pub fn crb_homodyne_discrete<T: Real>(params: &StateParams<T>, phases: &[T]) -> Result<BoundVector> {
    let inv = invert_information(&fisher_homodyne_discrete(params, phases))?;
    Ok(BoundVector::from_per_sample(inv.diag(), 1).with_n(phases.len()))
}

impl BoundVector {
    fn with_n(mut self, n: usize) -> Self {
        self.n_samples = n;
        self
    }
}

fn angle_bound<T: Real>(s: T, numerator: T, denominator: T) -> T {
    if s >= T::one() || denominator == T::zero() {
        T::infinity()
    } else {
        numerator / denominator
    }
}

/// Homodyne Cramér–Rao bound in the uniform-phase continuum limit:
/// `(s(1+s)², κ²(1+s²)/s, s/(1−s)²) / N`.
pub fn crb_homodyne<T: Real>(params: &StateParams<T>, n_samples: usize) -> BoundVector {
    let (s, k) = (params.s, params.kappa);
    let one = T::one();
    let per = [
        s * (one + s) * (one + s),
        k * k * (one + s * s) / s,
        angle_bound(s, s, (one - s) * (one - s)),
    ];
    BoundVector::from_per_sample(per, n_samples)
}

/// Error-propagation variance of the least-squares fit estimator.
pub fn fit_variance_prediction<T: Real>(params: &StateParams<T>, n_samples: usize) -> BoundVector {
    let (s, k) = (params.s, params.kappa);
    let c = T::lit;
    let s2 = s * s;
    let s4 = s2 * s2;
    let s6 = s4 * s2;
    let s8 = s4 * s4;
    let one = T::one();
    let per = [
        (one + c(6.0) * s2 + c(18.0) * s4 + c(6.0) * s6 + s8) / (c(8.0) * s2),
        k * k * (one - c(2.0) * s2 + c(18.0) * s4 - c(2.0) * s6 + s8) / (c(8.0) * s4),
        angle_bound(s, c(5.0) + c(6.0) * s2 + c(5.0) * s4, c(4.0) * (one - s2) * (one - s2)),
    ];
    BoundVector::from_per_sample(per, n_samples)
}

/// Derivatives of `Γ = Γ_θ + I` with respect to `(s, κ, φ_s)`.
fn dhd_covariance_derivatives<T: Real>(params: &StateParams<T>) -> [SymMatrix2<T>; 3] {
    let (s, k) = (params.s, params.kappa);
    let (sin, cos) = params.phi_s.sin_cos();
    let rotate = |lo: T, hi: T| {
        SymMatrix2::new(
            lo * cos * cos + hi * sin * sin,
            (lo - hi) * cos * sin,
            lo * sin * sin + hi * cos * cos,
        )
    };
    let (sin2, cos2) = (T::lit(2.0) * params.phi_s).sin_cos();
    let gap = k * s - k / s;
    [
        rotate(k, -k / (s * s)),
        rotate(s, T::one() / s),
        SymMatrix2::new(-gap * sin2, gap * cos2, gap * sin2),
    ]
}

/// Double-homodyne Fisher information per repetition:
/// `F_αβ = ½ Tr[Γ⁻¹ ∂_αΓ Γ⁻¹ ∂_βΓ]` with `Γ = Γ_θ + I`.
pub fn fisher_dhd<T: Real>(params: &StateParams<T>) -> SymMatrix3<T> {
    let gamma = params.covariance().add(&SymMatrix2::identity());
    let inv = gamma
        .inverse()
        .expect("Γ_θ + I has determinant ≥ 4 for physical parameters");
    let products = dhd_covariance_derivatives(params).map(|d| inv.mul_full(&d));
    let half = T::lit(0.5);
    let mut f = SymMatrix3::zeros();
    for a in 0..3 {
        for b in a..3 {
            let (pa, pb) = (&products[a], &products[b]);
            let tr = pa[0][0] * pb[0][0] + pa[0][1] * pb[1][0] + pa[1][0] * pb[0][1] + pa[1][1] * pb[1][1];
            f.set(a, b, half * tr);
        }
    }
    f
}

/// Double-homodyne Cramér–Rao bound for `mu` repetitions.
pub fn crb_dhd<T: Real>(params: &StateParams<T>, mu: usize) -> BoundVector {
    let (s, k) = (params.s, params.kappa);
    let c = T::lit;
    let one = T::one();
    let (s2, k2) = (s * s, k * k);
    let per = [
        (s2 * s2 + c(2.0) * k * s2 * s + c(2.0) * k2 * s2 + c(2.0) * k * s + one) / (c(2.0) * k2),
        k2 + s2 / c(2.0) + one / (c(2.0) * s2) + k * s + k / s,
        angle_bound(s, s * (k + s) * (one + k * s), k2 * (one - s2) * (one - s2)),
    ];
    BoundVector::from_per_sample(per, mu)
}

/// Quantum Fisher information matrix (diagonal) of the Gaussian state.
///
/// The `κκ` entry is `+∞` at `κ = 1`.
pub fn qfi_matrix<T: Real>(params: &StateParams<T>) -> SymMatrix3<T> {
    let (s, k) = (params.s, params.kappa);
    let one = T::one();
    let k2 = k * k;
    let ratio = k2 / (k2 + one);
    let kk = if k2 <= one { T::infinity() } else { one / (k2 - one) };
    let angle = (one - s * s) * (one - s * s) / (s * s) * ratio;
    SymMatrix3::diagonal([ratio / (s * s), kk, angle])
}

/// Quantum Cramér–Rao bound: the inverse QFI diagonal over `n_samples`.
pub fn qcrb<T: Real>(params: &StateParams<T>, n_samples: usize) -> BoundVector {
    let q = qfi_matrix(params).diag();
    let per = q.map(|v| if v == T::zero() { T::infinity() } else { T::one() / v });
    BoundVector::from_per_sample(per, n_samples)
}
