use squeezelab::bounds::{crb_homodyne, uniform_phases};
use squeezelab::estimators::{dhd_estimate, fit_estimate, mom_estimate, MomOptions};
use squeezelab::io::{read_data, read_dhd, read_scan, write_dhd, write_scan, write_trace, read_trace, DataFile};
use squeezelab::model::empirical_family;
use squeezelab::simulator::{apply_temporal_mode, sample_dhd, sample_homodyne_scan, synthesize_trace, TemporalMode, TraceGeometry};
use squeezelab::{HomodyneScan, ScanConfig, StateParams, StreamKey};

fn extract(truth: &StateParams<f64>, geometry: &TraceGeometry, extract_fwhm: f64, key: &StreamKey) -> HomodyneScan<f64> {
    let n = 900;
    let phases: Vec<f64> = uniform_phases(n, 2);
    let synth_mode = geometry.mode(n).unwrap();
    let trace = synthesize_trace(&vec![*truth; n], &phases, &synth_mode, geometry.trace_len(), key).unwrap();
    let mode = TemporalMode { fwhm_hz: extract_fwhm, ..synth_mode };
    let q = apply_temporal_mode(&trace, &mode, &geometry.windows(n)).unwrap();
    HomodyneScan::new(phases, q).unwrap()
}

#[test]
fn trace_pipeline_recovers_the_state_within_the_bound() {
    let truth = empirical_family(0.3, 0.3).unwrap();
    let geometry = TraceGeometry::default();
    let crb = crb_homodyne(&truth, 900).as_array();
    let trials = 300;
    let estimates: Vec<[f64; 3]> = (0..trials)
        .map(|t| {
            let scan = extract(&truth, &geometry, geometry.mode_fwhm_hz, &StreamKey::new(3).child(t));
            mom_estimate(&scan, None, &MomOptions::default()).unwrap().params.as_array()
        })
        .collect();
    for k in 0..3 {
        let xs: Vec<f64> = estimates.iter().map(|e| e[k]).collect();
        let mean = xs.iter().sum::<f64>() / trials as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        let se = (crb[k] / trials as f64).sqrt();
        assert!((mean - truth.as_array()[k]).abs() < 4.0 * se, "param {k}: mean {mean}");
        // 300 trials give about ±8 % on a variance; f32 storage adds nothing visible
        assert!((0.75..1.3).contains(&(var / crb[k])), "param {k}: var/CRB {}", var / crb[k]);
    }
}

#[test]
fn mode_mismatch_washes_out_squeezing() {
    let truth = empirical_family(0.2089, 0.3).unwrap();
    let geometry = TraceGeometry::default();
    let mut levels = Vec::new();
    for fwhm in [6e6, 3e6, 1.5e6, 0.75e6] {
        let mut sum = 0.0;
        for t in 0..40 {
            let scan = extract(&truth, &geometry, fwhm, &StreamKey::new(4).child(t));
            sum += mom_estimate(&scan, None, &MomOptions::default()).unwrap().params.squeezing_db();
        }
        levels.push(sum / 40.0);
    }
    assert!((levels[0] - truth.squeezing_db()).abs() < 0.3, "{levels:?}");
    assert!(levels.windows(2).all(|w| w[1] > w[0]), "{levels:?}");
}

#[test]
fn vacuum_dhd_with_few_repetitions_is_often_nonphysical() {
    let flagged = (0..200)
        .filter(|&t| {
            let batch = sample_dhd(&StateParams::vacuum(), 10, &StreamKey::new(5).child(t)).unwrap();
            let est = dhd_estimate(&batch).unwrap();
            !est.physical
        })
        .count();
    // Γ − I for vacuum is zero, so the sample estimate has a negative eigenvalue about half the time or more
    assert!(flagged > 100, "{flagged}");
}

#[test]
fn files_round_trip_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let truth = empirical_family(0.4, 0.7).unwrap();
    let key = StreamKey::new(6);

    let scan = sample_homodyne_scan(&truth, &ScanConfig::default(), &key).unwrap();
    let path = dir.path().join("scan.csv");
    write_scan(&path, &scan, Some("seed 6")).unwrap();
    let back = read_scan(&path).unwrap();
    assert_eq!(back.phases(), scan.phases());
    assert_eq!(back.samples(), scan.samples());
    let opts = MomOptions::default();
    assert_eq!(
        mom_estimate(&back, None, &opts).unwrap().params,
        mom_estimate(&scan, None, &opts).unwrap().params
    );
    assert_eq!(fit_estimate(&back).unwrap().params, fit_estimate(&scan).unwrap().params);

    let batch = sample_dhd(&truth, 900, &key).unwrap();
    let path = dir.path().join("dhd.csv");
    write_dhd(&path, &batch, None).unwrap();
    assert_eq!(read_dhd(&path).unwrap().q1(), batch.q1());
    assert!(matches!(read_data(&path).unwrap(), DataFile::Dhd(_)));

    let geometry = TraceGeometry::default();
    let mode = geometry.mode(900).unwrap();
    let trace = synthesize_trace(&vec![truth; 900], &uniform_phases::<f64>(900, 2), &mode, geometry.trace_len(), &key).unwrap();
    let path = dir.path().join("trace.bin");
    write_trace(&path, &trace).unwrap();
    assert_eq!(read_trace(&path).unwrap(), trace);
    assert!(matches!(read_data(&path).unwrap(), DataFile::Trace(_)));
}
