//! Synthetic data in the experimental regime: homodyne phase scans,
//! double-homodyne batches, squeezing-angle drift, and raw digitizer traces
//! with temporal-mode extraction.
//!
//! All generators are deterministic functions of their [`StreamKey`].

mod drift;
mod trace;

use rand::Rng;
use rand_distr::StandardNormal;

pub use crate::data::{DhdBatch, HomodyneScan, PhaseSampling, ScanConfig};
pub use drift::{simulate_phase_drift, DriftKind, DriftModel, DriftTrajectory};
pub use trace::{
    apply_temporal_mode, synthesize_trace, RawTrace, TemporalMode, TraceGeometry, WindowSpec,
};

use crate::bounds::uniform_phases;
use crate::error::Result;
use crate::model::StateParams;
use crate::rng::StreamKey;

/// LO phases for one scan under `config`.
pub fn scan_phases<R: Rng + ?Sized>(config: &ScanConfig, rng: &mut R) -> Vec<f64> {
    match config.sampling {
        PhaseSampling::Equispaced => uniform_phases(config.n_samples, config.range_multiplier),
        PhaseSampling::Uniform => {
            let span = std::f64::consts::PI * config.range_multiplier as f64;
            (0..config.n_samples).map(|_| rng.random::<f64>() * span).collect()
        }
    }
}

/// Draws one scan: `q_j ~ N(0, V(ψ_j, θ))`, independent.
pub fn sample_homodyne_scan(
    params: &StateParams<f64>,
    config: &ScanConfig,
    key: &StreamKey,
) -> Result<HomodyneScan<f64>> {
    config.validate()?;
    let mut rng = key.rng();
    let phases = scan_phases(config, &mut rng);
    let samples = phases
        .iter()
        .map(|&psi| {
            let z: f64 = rng.sample(StandardNormal);
            z * params.variance(psi).sqrt()
        })
        .collect();
    Ok(HomodyneScan::new(phases, samples)?.with_meta(*config))
}

/// Quadrature samples at a fixed set of phases.
pub fn sample_at_phases(params: &StateParams<f64>, phases: Vec<f64>, key: &StreamKey) -> Result<HomodyneScan<f64>> {
    let mut rng = key.rng();
    let samples = phases
        .iter()
        .map(|&psi| rng.sample::<f64, _>(StandardNormal) * params.variance(psi).sqrt())
        .collect();
    HomodyneScan::new(phases, samples)
}

/// Draws `mu` double-homodyne samples with covariance `Γ_θ + I`.
pub fn sample_dhd(params: &StateParams<f64>, mu: usize, key: &StreamKey) -> Result<DhdBatch<f64>> {
    let cov = params.covariance();
    let (xx, xp, pp) = (cov.xx + 1.0, cov.xp, cov.pp + 1.0);
    let l11 = xx.sqrt();
    let l21 = xp / l11;
    let l22 = (pp - l21 * l21).sqrt();
    let mut rng = key.rng();
    let mut q1 = Vec::with_capacity(mu);
    let mut p2 = Vec::with_capacity(mu);
    for _ in 0..mu {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        q1.push(l11 * a);
        p2.push(l21 * a + l22 * b);
    }
    DhdBatch::new(q1, p2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: f64, k: f64, phi: f64) -> StateParams<f64> {
        StateParams::new(s, k, phi).unwrap()
    }

    fn mean_sq(xs: &[f64]) -> f64 {
        xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64
    }

    #[test]
    fn vacuum_scan_has_unit_variance() {
        let cfg = ScanConfig { n_samples: 1_000_000, ..ScanConfig::default() };
        let scan = sample_homodyne_scan(&p(1.0, 1.0, 0.0), &cfg, &StreamKey::new(11)).unwrap();
        // standard error of a χ² mean: √(2/N) ≈ 1.4e-3
        assert!((mean_sq(scan.samples()) - 1.0).abs() < 0.005);
    }

    #[test]
    fn squeezed_axis_variance() {
        let st = p(0.5, 2.0, 0.0);
        let scan = sample_at_phases(&st, vec![0.0; 1_000_000], &StreamKey::new(3)).unwrap();
        let v = mean_sq(scan.samples());
        assert!((v - 1.0).abs() < 5.0 * (2.0f64 / 1e6).sqrt(), "{v}");
    }

    #[test]
    fn sample_variance_within_five_standard_errors() {
        for (i, &(s, k, phi, psi)) in [(0.3, 1.5, 0.2, 1.0), (0.8, 3.0, 2.0, 0.1), (0.1, 1.0, 1.0, 1.0)].iter().enumerate() {
            let st = p(s, k, phi);
            let scan = sample_at_phases(&st, vec![psi; 1_000_000], &StreamKey::new(100 + i as u64)).unwrap();
            let v = st.variance(psi);
            let se = v * (2.0f64 / 1e6).sqrt();
            assert!((mean_sq(scan.samples()) - v).abs() < 5.0 * se);
        }
    }

    #[test]
    fn scans_are_deterministic() {
        let cfg = ScanConfig { sampling: PhaseSampling::Uniform, ..ScanConfig::default() };
        let a = sample_homodyne_scan(&p(0.4, 1.3, 0.5), &cfg, &StreamKey::new(9).child(4)).unwrap();
        let b = sample_homodyne_scan(&p(0.4, 1.3, 0.5), &cfg, &StreamKey::new(9).child(4)).unwrap();
        assert_eq!(a, b);
        assert!(a.phases().iter().all(|&x| (0.0..2.0 * std::f64::consts::PI).contains(&x)));
    }

    #[test]
    fn dhd_vacuum_and_squeezed_moments() {
        let b = sample_dhd(&p(1.0, 1.0, 0.0), 1_000_000, &StreamKey::new(5)).unwrap();
        let m = crate::estimators::dhd_moments(&b);
        assert!((m.xx - 2.0).abs() < 0.015 && (m.pp - 2.0).abs() < 0.015 && m.xp.abs() < 0.01);

        let b = sample_dhd(&p(0.5, 2.0, 0.0), 1_000_000, &StreamKey::new(6)).unwrap();
        let m = crate::estimators::dhd_moments(&b);
        assert!((m.xx - 2.0).abs() < 0.015, "{m:?}");
        assert!((m.pp - 5.0).abs() < 0.04, "{m:?}");
        assert!(m.xp.abs() < 0.02, "{m:?}");
    }

    #[test]
    fn dhd_rotated_state_has_off_diagonal() {
        let st = p(0.5, 2.0, std::f64::consts::FRAC_PI_4);
        // rotate diag(κs, κ/s) = diag(1, 4) by π/4: off-diagonal (1 − 4)/2
        let b = sample_dhd(&st, 1_000_000, &StreamKey::new(8)).unwrap();
        let m = crate::estimators::dhd_moments(&b);
        assert!((m.xp + 1.5).abs() < 0.03, "{m:?}");
        assert!((m.xx - 3.5).abs() < 0.03 && (m.pp - 3.5).abs() < 0.03);
    }
}
