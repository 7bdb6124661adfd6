use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use valleon_core::device::*;
use valleon_core::lattice::{LatticeSpec, Valley};
use valleon_core::ribbon::Interface;
use valleon_core::transport::*;

fn spec() -> LatticeSpec {
    // Stronger mass than the topology default: the wall mode must decay
    // well inside the finite box.
    valleon_core::lattice::build_lattice_spec(470.0, 1.0, 0.2).unwrap()
}

#[test]
fn build_device_validation() {
    let s = spec();
    assert!(matches!(
        build_device(&s, Geometry::Straight, 23, 10),
        Err(DeviceError::ExtentTooSmall(23))
    ));
    assert!(matches!(
        build_device(&s, Geometry::Straight, 40, 9),
        Err(DeviceError::LeadTooShort(9))
    ));
    assert!(matches!(
        build_device(&s, Geometry::Straight, 24, 12),
        Err(DeviceError::InvalidGeometry { .. })
    ));
}

#[test]
fn device_shape_and_ports() {
    let s = spec();
    let straight = build_device(&s, Geometry::Straight, 30, 12).unwrap();
    assert!(straight.n_sites() > 1000);
    assert!(straight.is_connected());
    let names: Vec<&str> = straight.ports.iter().map(|p| p.name).collect();
    assert_eq!(names, ["a", "b"]);
    let hsbs = build_device(&s, Geometry::Hsbs, 30, 12).unwrap();
    let names: Vec<&str> = hsbs.ports.iter().map(|p| p.name).collect();
    assert_eq!(names, ["a", "b", "c", "d"]);
    assert!(hsbs.port_index("c").is_some());
    assert!(hsbs.port_index("e").is_none());
    // Every site carries the full mass magnitude; bonds are symmetric.
    for m in &straight.mass {
        assert!((m.abs() - s.delta.abs()).abs() < 1e-12);
    }
    for (i, j) in straight.bonds() {
        assert!(i < j, "bonds listed once");
        let back = &straight.targets
            [straight.offsets[j as usize] as usize..straight.offsets[j as usize + 1] as usize];
        assert!(back.contains(&i), "adjacency must be symmetric");
    }
    // Absorbers only inside the leads; interior gamma identically zero.
    let gw = ABSORBER_CELLS * s.a;
    for (site, (g, p)) in straight.sites.iter().zip(straight.gamma_profile.iter().zip(&straight.port_of)) {
        if site.x.abs() < straight.x_half - gw - 1e-9 {
            assert_eq!(*g, 0.0);
        }
        assert_eq!(*g > 0.0, *p >= 0, "port attribution exactly on the absorber support");
        assert!((0.0..=1.0).contains(g));
    }
}

#[test]
fn mirror_permutation_commutes_with_hamiltonian() {
    let s = spec();
    let dev = build_device(&s, Geometry::Hsbs, 26, 10).unwrap();
    let perm = dev.mirror_perm.as_ref().expect("hsbs is mirror symmetric");
    assert_eq!(perm.len(), dev.n_sites());
    // Involution.
    for (i, &j) in perm.iter().enumerate() {
        assert_eq!(perm[j as usize] as usize, i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let psi: Vec<Complex64> = (0..dev.n_sites())
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let mut hpsi = vec![Complex64::new(0.0, 0.0); dev.n_sites()];
    dev.apply_hamiltonian(&psi, &mut hpsi);
    let mhpsi = dev.apply_mirror(&hpsi).unwrap();
    let mpsi = dev.apply_mirror(&psi).unwrap();
    let mut hmpsi = vec![Complex64::new(0.0, 0.0); dev.n_sites()];
    dev.apply_hamiltonian(&mpsi, &mut hmpsi);
    let err: f64 = mhpsi.iter().zip(&hmpsi).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt();
    assert!(err < 1e-12, "mirror must commute with H exactly, err = {err}");
    // Z geometry has no mirror.
    let z = build_device(&s, Geometry::Z, 26, 10).unwrap();
    assert!(z.mirror_perm.is_none());
}

#[test]
fn wavepacket_contract() {
    let s = spec();
    let dev = build_device(&s, Geometry::Straight, 26, 10).unwrap();
    let mode = device_carrier(&dev, Interface::I21, Valley::K).unwrap();
    assert!(mode.localization > 0.5);
    assert!(matches!(
        make_edge_wavepacket(&dev, &mode, 3.0, Edge::Left),
        Err(TransportError::EnvelopeTooNarrow(_))
    ));
    assert!(matches!(
        make_edge_wavepacket(&dev, &mode, 9.0, Edge::Top),
        Err(TransportError::EmptyPacket)
    ));
    let psi = make_edge_wavepacket(&dev, &mode, 9.0, Edge::Left).unwrap();
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    assert!((norm - 1.0).abs() < 1e-12);
    // Launch sits in the left half.
    let left: f64 = dev
        .sites
        .iter()
        .zip(&psi)
        .filter(|(site, _)| site.x < 0.0)
        .map(|(_, z)| z.norm_sqr())
        .sum();
    assert!(left > 0.9, "left-half weight {left}");
}

#[test]
fn propagation_validation_and_norm_behaviour() {
    let s = spec();
    let dev = build_device(&s, Geometry::Straight, 26, 10).unwrap();
    let mode = device_carrier(&dev, Interface::I21, Valley::K).unwrap();
    let psi = make_edge_wavepacket(&dev, &mode, 9.0, Edge::Left).unwrap();
    assert!(matches!(
        propagate(&dev, &psi, 0.05, 10, 0.0, mode.energy),
        Err(TransportError::InvalidGamma(_))
    ));
    assert!(matches!(
        propagate(&dev, &psi, 1.0, 10, 0.5, mode.energy),
        Err(TransportError::StepTooLarge(_))
    ));
    // With a negligible absorber rate the Cayley step conserves the norm.
    let run = propagate(&dev, &psi, 0.05, 2000, 1e-300, mode.energy).unwrap();
    assert!((run.final_residual() - 1.0).abs() < 1e-8, "residual {}", run.final_residual());
    // And an unconverged run refuses to report fluxes.
    assert!(matches!(port_flux(&run), Err(TransportError::ResidualTooLarge { .. })));
}

#[test]
fn straight_run_transmits_and_conserves_probability() {
    let s = spec();
    let dev = build_device(&s, Geometry::Straight, 36, 12).unwrap();
    let settings = RunSettings { n_steps: 8000, ..RunSettings::default() };
    let run = run_transport(&dev, Interface::I21, Valley::K, Edge::Left, &settings).unwrap();
    let flux = port_flux(&run).unwrap();
    let forward = flux.iter().find(|(n, _)| n == "b").unwrap().1;
    assert!(forward > 0.95, "forward transmission {forward}");
    // Exact bookkeeping: absorbed + residual = initial norm.
    let total: f64 = run.final_absorbed().iter().sum::<f64>() + run.final_residual();
    assert!((total - 1.0).abs() < 1e-6, "total probability {total}");
    // Cumulative absorption is monotone per port.
    for step in 1..run.port_absorbed.len() {
        for p in 0..flux.len() {
            assert!(run.port_absorbed[step][p] >= run.port_absorbed[step - 1][p] - 1e-12);
        }
    }
    // The carrier rides mid-gap.
    assert!(run.carrier_energy.abs() < 0.5 * s.delta.abs());
}

#[test]
fn splitting_matrix_requires_a_mirror_geometry() {
    let s = spec();
    let z = build_device(&s, Geometry::Z, 26, 10).unwrap();
    assert!(matches!(
        splitting_matrix(&z, &RunSettings::default()),
        Err(TransportError::NoMirror)
    ));
}
