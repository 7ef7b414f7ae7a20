use serde::{Deserialize, Serialize};

use super::{covariance_or_infinite, fit_estimate, EstimateFlags, EstimateResult, Method};
use crate::bounds::fisher_homodyne_discrete;
use crate::data::HomodyneScan;
use crate::error::{Error, Result};
use crate::matrix::solve3;
use crate::model::StateParams;
use crate::scalar::{circular_distance, Real};

/// How the moment equations are solved in one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomSolver {
    /// Analytic solution derived in the uniform-phase limit; the angle is
    /// updated to first order around the prior.
    #[default]
    ClosedForm,
    /// Exact solution of the weighted moment equations for the actual
    /// phases, via the 3×3 linear system in the Fourier coefficients of V.
    LinearSystem,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MomOptions {
    pub max_iter: usize,
    /// Stop when the largest relative parameter change falls below this.
    pub tol: f64,
    pub solver: MomSolver,
}

impl Default for MomOptions {
    fn default() -> Self {
        Self {
            max_iter: 20,
            tol: 1e-6,
            solver: MomSolver::ClosedForm,
        }
    }
}

const SEED_S_MIN: f64 = 0.01;
const SEED_KAPPA_MAX: f64 = 100.0;

/// Turns an estimate into a usable prior: swapped-axis estimates (`s > 1`)
/// are rewritten with `s ≤ 1`, then the result is clamped to
/// `s ∈ [0.01, 1]`, `κ ∈ [1, 100]`.
pub fn next_prior<T: Real>(estimate: &StateParams<T>) -> StateParams<T> {
    estimate.canonical().clamped(T::lit(SEED_S_MIN), T::lit(SEED_KAPPA_MAX))
}

/// Optimal moment weights `c_α = (1/2V²) ∂V/∂θ_α` at the prior.
pub fn mom_weights<T: Real>(prior: &StateParams<T>, psi: T) -> [T; 3] {
    let v = prior.variance(psi);
    let w = T::lit(0.5) / (v * v);
    prior.variance_gradient(psi).map(|g| g * w)
}

fn check_prior<T: Real>(prior: &StateParams<T>) -> Result<()> {
    if prior.is_physical() && prior.s.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!(
            "moment prior must satisfy 0 < s <= 1, kappa >= 1; got s={}, kappa={}",
            prior.s, prior.kappa
        )))
    }
}

/// One moment-estimator step around `prior`.
pub fn mom_step<T: Real>(
    scan: &HomodyneScan<T>,
    prior: &StateParams<T>,
    solver: MomSolver,
) -> Result<EstimateResult<T>> {
    if scan.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: scan.len() });
    }
    check_prior(prior)?;
    // the angle weight scales as 1 − s²; treat rounding-level gaps as vacuum
    let singular = prior.s >= T::one() - T::conditioning_eps();
    let (params, mut flags) = match solver {
        MomSolver::LinearSystem if !singular => match solve_linear_system(scan, prior) {
            Some(r) => r,
            None => closed_form(scan, prior),
        },
        _ => closed_form(scan, prior),
    };
    flags.singular_prior = singular;
    let physical = !flags.nonphysical && params.is_physical();
    let info = fisher_homodyne_discrete(&params, scan.phases());
    Ok(EstimateResult {
        params,
        predicted_cov: covariance_or_infinite(&info),
        method: Method::Mom,
        physical,
        flags,
        iterations: 1,
        prior_used: Some(*prior),
        n_samples: scan.len(),
    })
}

fn weighted_moments<T: Real>(scan: &HomodyneScan<T>, prior: &StateParams<T>) -> [T; 3] {
    let n = T::lit(scan.len() as f64);
    let sums = scan.iter().fold([T::zero(); 3], |mut acc, (psi, q)| {
        let c = mom_weights(prior, psi);
        let q2 = q * q;
        for (a, ca) in acc.iter_mut().zip(c) {
            *a = *a + ca * q2;
        }
        acc
    });
    sums.map(|v| v / n)
}

/// Closed-form estimator in terms of the weighted moments `y_α`.
///
/// At the solution `num > 0` and `den < 0`; the absolute values turn the
/// ratio positive. A sign different from that is flagged as non-physical.
fn closed_form<T: Real>(scan: &HomodyneScan<T>, prior: &StateParams<T>) -> (StateParams<T>, EstimateFlags) {
    let [y1, y2, y3] = weighted_moments(scan, prior);
    let (s0, k0, phi0) = (prior.s, prior.kappa, prior.phi_s);
    let one = T::one();
    let two = T::lit(2.0);

    let num = y1 * s0 * (one + s0) + y2 * k0;
    let den = y1 * (one + s0) - y2 * k0;
    let mut flags = EstimateFlags {
        nonphysical: !(num > T::zero() && den < T::zero()),
        ..EstimateFlags::default()
    };

    let s = (num / den).abs().sqrt();
    let kappa = two * k0 * (num * den).abs().sqrt();
    let angle_den = two * y1 * (one - s0 * s0);
    let phi = if s0 >= one - T::conditioning_eps() {
        phi0
    } else if angle_den == T::zero() || !angle_den.is_finite() {
        flags.degenerate = true;
        phi0
    } else {
        phi0 - y3 / angle_den
    };
    (StateParams::unchecked(s, kappa, phi), flags)
}

/// Solves `Σ_j c_α(ψ_j) q_j² = Σ_j c_α(ψ_j) V(ψ_j)` exactly, with
/// `V(ψ) = A + B cos 2ψ + C sin 2ψ` linear in `(A, B, C)`.
fn solve_linear_system<T: Real>(
    scan: &HomodyneScan<T>,
    prior: &StateParams<T>,
) -> Option<(StateParams<T>, EstimateFlags)> {
    let two = T::lit(2.0);
    let mut a = [[T::zero(); 3]; 3];
    let mut b = [T::zero(); 3];
    for (psi, q) in scan.iter() {
        let c = mom_weights(prior, psi);
        let (sin, cos) = (two * psi).sin_cos();
        let basis = [T::one(), cos, sin];
        for alpha in 0..3 {
            b[alpha] = b[alpha] + c[alpha] * q * q;
            for (k, bk) in basis.iter().enumerate() {
                a[alpha][k] = a[alpha][k] + c[alpha] * *bk;
            }
        }
    }
    let [mean, cos_coef, sin_coef] = solve3(a, b)?;
    // V = mean − D cos 2(ψ − φ_s)  ⇒  cos_coef = −D cos 2φ_s, sin_coef = −D sin 2φ_s
    let amplitude = cos_coef.hypot(sin_coef);
    let lo = mean - amplitude;
    let hi = mean + amplitude;
    let mut flags = EstimateFlags {
        nonphysical: !(lo > T::zero()),
        ..EstimateFlags::default()
    };
    let phi = if amplitude == T::zero() {
        flags.degenerate = true;
        T::zero()
    } else {
        (-sin_coef).atan2(-cos_coef) / two
    };
    Some((StateParams::unchecked((lo / hi).abs().sqrt(), (lo * hi).abs().sqrt(), phi), flags))
}

/// Relative change used as the iteration stopping rule; the angle term is
/// scaled by `(1 − s)/s`, matching how its bound scales.
fn relative_change<T: Real>(prev: &StateParams<T>, next: &StateParams<T>) -> T {
    let ds = (next.s - prev.s).abs() / next.s.abs();
    let dk = (next.kappa - prev.kappa).abs() / next.kappa.abs();
    let s = next.s.abs().min(T::one());
    let dphi = circular_distance(next.phi_s, prev.phi_s, T::PI()) * (T::one() - s) / s;
    ds.max(dk).max(dphi)
}

/// Iterated moment estimator: each estimate becomes the next prior.
///
/// Without a prior the fit estimate, projected into `s ∈ [0.01, 1]`,
/// `κ ∈ [1, 100]`, seeds the iteration; if that fails the fixed prior
/// `(0.5, 2, 0)` is used and `seed_fallback` is set.
pub fn mom_estimate<T: Real>(
    scan: &HomodyneScan<T>,
    prior: Option<&StateParams<T>>,
    opts: &MomOptions,
) -> Result<EstimateResult<T>> {
    if scan.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: scan.len() });
    }
    let mut seed_fallback = false;
    let start = match prior {
        Some(p) => {
            check_prior(p)?;
            *p
        }
        None => match fit_estimate(scan) {
            Ok(fit) if fit.params.s.is_finite() && fit.params.kappa.is_finite() => {
                next_prior(&fit.params)
            }
            _ => {
                seed_fallback = true;
                StateParams::unchecked(T::lit(0.5), T::lit(2.0), T::zero())
            }
        },
    };

    let tol = T::lit(opts.tol);
    let max_iter = opts.max_iter.max(1);
    let mut current = start;
    let mut result = mom_step(scan, &current, opts.solver)?;
    let mut iterations = 1;
    let mut converged = relative_change(&current, &result.params) < tol;
    while !converged && iterations < max_iter {
        current = next_prior(&result.params);
        let next = mom_step(scan, &current, opts.solver)?;
        iterations += 1;
        converged = relative_change(&result.params, &next.params) < tol;
        result = next;
    }
    result.iterations = iterations;
    result.flags.no_convergence = !converged;
    result.flags.seed_fallback = seed_fallback;
    result.prior_used = Some(start);
    Ok(result)
}
