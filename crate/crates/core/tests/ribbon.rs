use approx::assert_abs_diff_eq;
use nalgebra::DVector;

use valleon_core::lattice::{LatticeSpec, Valley};
use valleon_core::ribbon::*;

fn ribbon(interface: Interface, width: usize) -> Ribbon {
    build_ribbon(&LatticeSpec::preset(1.0), interface, width).unwrap()
}

#[test]
fn construction_and_site_bookkeeping() {
    assert!(matches!(
        build_ribbon(&LatticeSpec::preset(1.0), Interface::I12, 7),
        Err(RibbonError::TooNarrow(7))
    ));
    let r = ribbon(Interface::I12, 20);
    assert_eq!(r.n_sites(), 80);
    assert_eq!(r.wall_cell(), 20);
    // Every onsite mass has magnitude |delta|; I21 is the global sign flip.
    let flipped = ribbon(Interface::I21, 20);
    for s in 0..r.n_sites() {
        assert_abs_diff_eq!(r.site_mass(s).abs(), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(r.site_mass(s), -flipped.site_mass(s), epsilon = 1e-15);
    }
    // A and B of the deep bulk alternate in sign within one domain.
    assert_abs_diff_eq!(r.site_mass(0), -r.site_mass(1), epsilon = 1e-15);
}

#[test]
fn hamiltonian_is_real_symmetric_and_k_even() {
    let r = ribbon(Interface::I12, 12);
    for k in [-1.7e-3, 0.0, 2.9e-3] {
        let h = r.hamiltonian(k);
        assert!((h.clone() - h.transpose()).norm() < 1e-14);
        assert!((h - r.hamiltonian(-k)).norm() < 1e-14, "H(k) depends on cos(ka/2)");
    }
}

#[test]
fn interface_flip_negates_spectrum() {
    // Flipping every onsite mass (I12 → I21) composed with the sublattice
    // sign flip negates H, so the sorted spectra satisfy
    // E_I21[i] = −E_I12[n−1−i] exactly.
    let r12 = ribbon(Interface::I12, 14);
    let r21 = ribbon(Interface::I21, 14);
    let n = r12.n_sites();
    for k in [-2.0e-3, 1.0e-3] {
        let sorted = |r: &Ribbon| {
            let mut e: Vec<f64> = r.hamiltonian(k).symmetric_eigen().eigenvalues.iter().copied().collect();
            e.sort_by(|a, b| a.partial_cmp(b).unwrap());
            e
        };
        let e12 = sorted(&r12);
        let e21 = sorted(&r21);
        for i in 0..n {
            assert_abs_diff_eq!(e21[i], -e12[n - 1 - i], epsilon = 1e-10);
        }
    }
}

#[test]
fn bands_grid_and_validation() {
    let r = ribbon(Interface::I12, 10);
    assert!(matches!(ribbon_bands(&r, 63), Err(RibbonError::TooFewSamples(63))));
    let bands = ribbon_bands(&r, 64).unwrap();
    assert_eq!(bands.k_values.len(), 64);
    for es in &bands.energies {
        assert!(es.windows(2).all(|w| w[0] <= w[1]), "eigenvalues sorted ascending");
    }
    assert!(matches!(
        extract_edge_states(&bands, 1.0, 6),
        Err(RibbonError::InvalidParameter { name: "localization_threshold", .. })
    ));
}

#[test]
fn mid_gap_state_exists_at_128_samples() {
    let r = ribbon(Interface::I12, 20);
    let bands = ribbon_bands(&r, 128).unwrap();
    let min_abs = bands
        .energies
        .iter()
        .flatten()
        .fold(f64::INFINITY, |m, &e| m.min(e.abs()));
    assert!(min_abs < 0.02, "min |E| = {min_abs}");
}

#[test]
fn edge_branches_are_in_gap_localized_and_continuous() {
    let r = ribbon(Interface::I12, 20);
    let bands = ribbon_bands(&r, 132).unwrap();
    let branches = extract_edge_states(&bands, 0.5, 6).unwrap();
    assert!(!branches.is_empty());
    let dk = 2.0 * std::f64::consts::PI / (r.lattice.a * 132.0);
    let mut covers_zero = false;
    for b in &branches {
        for (i, &e) in b.energies.iter().enumerate() {
            assert!(e.abs() < 0.1);
            assert!(b.localization[i] > 0.5);
            assert_eq!(b.valley_labels[i], nearest_valley(&r.lattice, b.k_values[i]));
            if i > 0 {
                assert_abs_diff_eq!(b.k_values[i] - b.k_values[i - 1], dk, epsilon = 1e-9);
            }
        }
        if b.energies.iter().any(|e| *e < 0.0) && b.energies.iter().any(|e| *e > 0.0) {
            covers_zero = true;
        }
    }
    assert!(covers_zero, "the kink branch must traverse zero energy");
    // An impossible localization threshold leaves nothing.
    assert!(extract_edge_states(&bands, 0.999, 2).unwrap().is_empty());
}

#[test]
fn group_velocity_sign_table() {
    // v(I12, K) < 0, and each single flip (interface or valley) flips the
    // sign; magnitude ~0.8·a·t near the Dirac velocity.
    let spec = LatticeSpec::preset(1.0);
    let scale = spec.a * spec.t;
    let mut v = |interface: Interface, valley: Valley| -> f64 {
        let bands = ribbon_bands(&ribbon(interface, 20), 132).unwrap();
        let branches = extract_edge_states(&bands, 0.5, 6).unwrap();
        branches
            .iter()
            .find_map(|b| group_velocity(&spec, b, valley).ok())
            .expect("a branch must cover the projected valley")
    };
    let v12k = v(Interface::I12, Valley::K);
    let v12kp = v(Interface::I12, Valley::KPrime);
    let v21k = v(Interface::I21, Valley::K);
    let v21kp = v(Interface::I21, Valley::KPrime);
    for w in [v12k, v12kp, v21k, v21kp] {
        let ratio = w.abs() / scale;
        assert!((0.6..1.0).contains(&ratio), "|v|/(a t) = {ratio}");
    }
    assert!(v12k < 0.0 && v21k > 0.0, "interface flip reverses velocity");
    assert!(v12kp > 0.0 && v21kp < 0.0, "valley flip reverses velocity");
}

#[test]
fn projected_valleys_and_nearest_valley() {
    let spec = LatticeSpec::preset(1.0);
    let kk = projected_valley_k(&spec, Valley::K);
    let kkp = projected_valley_k(&spec, Valley::KPrime);
    assert_abs_diff_eq!(kk, -2.0 * std::f64::consts::PI / (3.0 * spec.a), epsilon = 1e-15);
    assert_abs_diff_eq!(kk, -kkp, epsilon = 1e-15);
    assert_eq!(nearest_valley(&spec, kk * 0.9), Valley::K);
    assert_eq!(nearest_valley(&spec, kkp * 1.1), Valley::KPrime);
}

#[test]
fn branch_energy_insensitive_to_width() {
    // Widening the supercell leaves the wall-bound mode's energy unchanged
    // up to the exponential transverse tail.
    let spec = valleon_core::lattice::build_lattice_spec(470.0, 1.0, 0.2).unwrap();
    let k0 = projected_valley_k(&spec, Valley::K) * 1.05;
    let narrow =
        interface_mode_exact(&build_ribbon(&spec, Interface::I12, 32).unwrap(), k0).unwrap();
    let wide =
        interface_mode_exact(&build_ribbon(&spec, Interface::I12, 40).unwrap(), k0).unwrap();
    assert_abs_diff_eq!(narrow.energy, wide.energy, epsilon = 1e-6);
}

#[test]
fn carrier_mode_contract() {
    let spec = LatticeSpec::preset(1.0);
    let r = ribbon(Interface::I12, 20);
    let k0 = projected_valley_k(&spec, Valley::K);
    let mode = interface_mode_exact(&r, k0).unwrap();
    assert!(mode.localization >= 0.5);
    assert!(mode.energy.abs() < spec.delta.abs());
    assert_eq!(mode.valley, Valley::K);
    assert_abs_diff_eq!(mode.profile.norm(), 1.0, epsilon = 1e-10);
    // Localization weight grows with the window.
    let psi = DVector::from_column_slice(mode.profile.as_slice());
    let l2 = r.localization(&psi, 2);
    let l4 = r.localization(&psi, 4);
    let l8 = r.localization(&psi, 8);
    assert!(l2 < l4 && l4 < l8 && l8 <= 1.0 + 1e-12);
    // Far from the gap center there is no wall carrier.
    assert!(matches!(
        interface_mode_exact(&r, 0.6 * k0),
        Err(RibbonError::NoCarrier { .. })
    ));
    // Grid-snapped lookup agrees with the exact mode.
    let bands = ribbon_bands(&r, 132).unwrap();
    let snapped = interface_mode(&bands, k0).unwrap();
    assert!((snapped.k0 - k0).abs() < 2.0 * std::f64::consts::PI / (spec.a * 132.0));
    assert!(snapped.localization >= 0.5);
}
