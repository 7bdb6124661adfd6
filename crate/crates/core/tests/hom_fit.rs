use num_complex::Complex64;

use valleon_core::fit::*;
use valleon_core::hom::*;
use valleon_core::optics::*;
use valleon_core::C_MM_PER_PS;

fn balanced_pair_network() -> ModeUnitary {
    let bs = bs_unitary(0.5, BsConvention::RealRotation).unwrap();
    network_unitary(&["a", "b"], &[Placement::new(bs, ("a", "b"), ("a", "b"))]).unwrap()
}

fn symmetric_delays(half_width_ps: f64, n_side: usize) -> Vec<f64> {
    (-(n_side as i32)..=n_side as i32)
        .map(|i| i as f64 * half_width_ps / n_side as f64)
        .collect()
}

#[test]
fn source_model_contract() {
    assert!(SourceModel { sigma_inv_ps: 0.0, v0: 0.9 }.validate().is_err());
    assert!(SourceModel { sigma_inv_ps: 1.0, v0: 1.2 }.validate().is_err());
    let src = SourceModel { sigma_inv_ps: 0.4, v0: 0.81 };
    src.validate().unwrap();
    assert!((src.chi(0.0).re - 0.9).abs() < 1e-15);
    assert!(src.chi(5.0).norm() < src.chi(1.0).norm());
    // Gaussian overlap: chi(tau) = sqrt(V0) * exp(-sigma^2 tau^2 / 2).
    let tau = 1.7_f64;
    let expect = 0.9 * (-0.5 * (0.4 * tau) * (0.4 * tau)).exp();
    assert!((src.chi(tau).re - expect).abs() < 1e-15);
}

#[test]
fn scan_matches_closed_form_dip() {
    let net = balanced_pair_network();
    let src = SourceModel { sigma_inv_ps: 0.25, v0: 0.93 };
    let delays = symmetric_delays(12.0, 20);
    let scan = hom_scan(&net, (0, 1), (0, 1), &src, &delays).unwrap();
    for (i, &tau) in delays.iter().enumerate() {
        let chi2 = src.v0 * (-(src.sigma_inv_ps * tau).powi(2)).exp();
        let expect = 0.5 * (1.0 - chi2);
        assert!((scan.rates[i] - expect).abs() < 1e-12);
        assert!((scan.delays_mm[i] - tau * C_MM_PER_PS).abs() < 1e-12);
    }
    assert!(scan.counts.is_none());
    assert!(matches!(
        hom_scan(&net, (0, 1), (0, 1), &src, &[f64::NAN]),
        Err(HomError::NonFiniteDelay)
    ));
}

#[test]
fn scan_matches_frequency_grid_oracle() {
    // Independent oracle: the overlap as the Fourier transform of a
    // normalized Gaussian spectral density on an explicit omega grid.
    let net = balanced_pair_network();
    let src = SourceModel { sigma_inv_ps: 0.31, v0: 0.88 };
    let delays = symmetric_delays(10.0, 10); // 21 delays
    let scan = hom_scan(&net, (0, 1), (0, 1), &src, &delays).unwrap();
    let sigma = src.sigma_inv_ps;
    let n_grid = 4001;
    let w_max = 8.0 * sigma;
    let dw = 2.0 * w_max / (n_grid - 1) as f64;
    for (i, &tau) in delays.iter().enumerate() {
        let mut chi_num = Complex64::new(0.0, 0.0);
        for g in 0..n_grid {
            let w = -w_max + g as f64 * dw;
            let density = (-(w * w) / (2.0 * sigma * sigma)).exp()
                / (sigma * (2.0 * core::f64::consts::PI).sqrt());
            let weight = if g == 0 || g == n_grid - 1 { 0.5 } else { 1.0 };
            chi_num += Complex64::new(0.0, w * tau).exp() * (density * dw * weight);
        }
        let chi = Complex64::new(src.v0.sqrt(), 0.0) * chi_num;
        let rate = coincidence_rate(&net, (0, 1), (0, 1), chi).unwrap();
        assert!(
            (rate - scan.rates[i]).abs() < 1e-6,
            "delay {tau}: grid {rate} vs analytic {}",
            scan.rates[i]
        );
    }
}

#[test]
fn count_sampling_is_seeded_and_unbiased() {
    let net = balanced_pair_network();
    let src = SourceModel { sigma_inv_ps: 0.25, v0: 0.9 };
    let delays = symmetric_delays(12.0, 15);
    let scan = hom_scan(&net, (0, 1), (0, 1), &src, &delays).unwrap();
    assert!(matches!(
        sample_counts(&scan, 0.0, 1.0, 1),
        Err(HomError::InvalidRate(_))
    ));
    let flux = 200.0; // pairs/s
    let tint = 30.0; // s
    let s1 = sample_counts(&scan, flux, tint, 42).unwrap();
    let s2 = sample_counts(&scan, flux, tint, 42).unwrap();
    let s3 = sample_counts(&scan, flux, tint, 43).unwrap();
    assert_eq!(s1.counts, s2.counts, "same seed must reproduce counts exactly");
    assert_ne!(s1.counts, s3.counts);
    let counts = s1.counts.as_ref().unwrap();
    let errors = s1.errors.as_ref().unwrap();
    for (c, e) in counts.iter().zip(errors) {
        assert!((e - (*c as f64).sqrt()).abs() < 1e-12);
    }
    // Law of large numbers at the baseline: mean within 5 sigma.
    let mean_expected = 0.5 * flux * tint;
    let baseline: Vec<f64> = delays
        .iter()
        .zip(counts)
        .filter(|(t, _)| t.abs() > 9.0)
        .map(|(_, &c)| c as f64)
        .collect();
    let mean = baseline.iter().sum::<f64>() / baseline.len() as f64;
    let tol = 5.0 * (mean_expected / baseline.len() as f64).sqrt();
    assert!((mean - mean_expected).abs() < tol, "mean {mean} vs {mean_expected}");
}

#[test]
fn noiseless_dip_round_trips() {
    let net = balanced_pair_network();
    for (v, l_mm) in [(0.965, 1.23), (0.956, 1.29)] {
        let tau_c = l_mm / C_MM_PER_PS;
        let src = SourceModel { sigma_inv_ps: 1.0 / tau_c, v0: v };
        let delays = symmetric_delays(4.0 * tau_c, 40);
        let scan = hom_scan(&net, (0, 1), (0, 1), &src, &delays).unwrap();
        let fit = fit_scan(&scan, DipShape::Dip).unwrap();
        assert!(!fit.flagged);
        assert!((fit.visibility - v).abs() < 1e-6, "V = {}", fit.visibility);
        assert!((fit.length_c_mm - l_mm).abs() < 1e-6, "L = {}", fit.length_c_mm);
        assert!((fit.baseline - 0.5).abs() < 1e-6);
        assert!(fit.center_ps.abs() < 1e-6);
    }
}

#[test]
fn noiseless_peak_round_trip() {
    // The cascade's (f, g) coincidence peaks: 1/8 baseline, visibility V0.
    let bs = bs_unitary(0.5, BsConvention::RealRotation).unwrap();
    let net = hsbs_cascade(&bs, &bs, 0.0).unwrap();
    let (f, g) = (net.mode("f").unwrap(), net.mode("g").unwrap());
    let src = SourceModel { sigma_inv_ps: 0.3, v0: 0.92 };
    let delays = symmetric_delays(14.0, 35);
    let scan = hom_scan(&net, (0, 1), (f, g), &src, &delays).unwrap();
    let fit = fit_scan(&scan, DipShape::Peak).unwrap();
    assert!(!fit.flagged);
    assert!((fit.visibility - 0.92).abs() < 1e-6);
    assert!((fit.baseline - 0.125).abs() < 1e-6);
    assert!((fit.tau_c_ps - 1.0 / 0.3).abs() < 1e-5);
}

#[test]
fn poisson_fit_recovers_visibility_within_errors() {
    let net = balanced_pair_network();
    let v = 0.965;
    let tau_c = 1.23 / C_MM_PER_PS;
    let src = SourceModel { sigma_inv_ps: 1.0 / tau_c, v0: v };
    let delays = symmetric_delays(4.0 * tau_c, 40);
    let scan = hom_scan(&net, (0, 1), (0, 1), &src, &delays).unwrap();
    // ~1e5 total coincidences across the scan.
    let noisy = sample_counts(&scan, 120.0, 30.0, 2026).unwrap();
    let fit = fit_scan(&noisy, DipShape::Dip).unwrap();
    assert!(!fit.flagged);
    let sigma_v = fit.std_errors[1];
    assert!(
        (fit.visibility - v).abs() < 3.0 * sigma_v,
        "V = {} +- {sigma_v}",
        fit.visibility
    );
    // Reported uncertainty at the few-per-mille scale for these statistics.
    assert!((5e-4..0.05).contains(&sigma_v), "sigma_V = {sigma_v}");
}

#[test]
fn fit_validation_and_flat_scan() {
    let short = HomScan {
        delays_ps: vec![0.0; 5],
        delays_mm: vec![0.0; 5],
        rates: vec![0.5; 5],
        counts: None,
        errors: None,
    };
    assert!(matches!(fit_scan(&short, DipShape::Dip), Err(FitError::TooFewPoints(5))));
    let delays = symmetric_delays(10.0, 15);
    let flat = HomScan {
        delays_mm: delays.iter().map(|t| t * C_MM_PER_PS).collect(),
        delays_ps: delays,
        rates: vec![0.31; 31],
        counts: None,
        errors: None,
    };
    match fit_scan(&flat, DipShape::Dip) {
        Ok(fit) => assert!(fit.flagged, "a featureless scan must be flagged"),
        Err(FitError::NonConvergence { .. }) => {}
        Err(e) => panic!("unexpected fit error: {e}"),
    }
}
