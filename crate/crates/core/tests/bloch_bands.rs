mod common;

use bloch_lab::operator::hermitian_eigen;
use bloch_lab::*;
use num_complex::Complex64;

use common::*;

#[test]
fn reference_bands_satisfy_structural_checks() {
    let bands = reference_bands();
    let checks = bands.checks();
    assert!(checks.orthonormality_residual <= 1e-10, "{checks:?}");
    assert!(checks.translation_residual <= 1e-10, "{checks:?}");
    assert!(checks.cell_periodicity_residual <= 1e-10, "{checks:?}");
    assert!(checks.norm_residual <= 1e-10, "{checks:?}");
    assert!(checks.energies_ordered);
    for state in bands.states() {
        assert!(matches!(state.gauge, Gauge::Fixed { .. }));
    }
}

#[test]
fn sector_solver_agrees_with_full_grid_classification() {
    let g = reference_grid();
    let v = reference_potential();
    let bands = reference_bands();
    let h = build_hamiltonian(g, &v, MASS).unwrap();
    let t = build_translation(g);
    let oracle = classify_by_translation(&h, &t, 4).unwrap();
    for band in 0..4 {
        for l in 0..g.n_cells() {
            let a = bands.state(band, l).unwrap();
            let b = oracle.state(band, l).unwrap();
            assert!(
                (a.energy - b.energy).abs() <= 1e-8 * (1.0 + a.energy.abs()),
                "band {band} l {l}: {} vs {}",
                a.energy,
                b.energy
            );
            let overlap = inner_product(&a.wavefunction, &b.wavefunction).unwrap().norm();
            assert!((overlap - 1.0).abs() <= 1e-8, "band {band} l {l}: overlap {overlap}");
        }
    }
}

#[test]
fn free_particle_sectors_pair_up() {
    let g = reference_grid();
    let bands = solve_bands(g, &PotentialSpec::free(), MASS, 3).unwrap();
    let n = g.n_cells();
    for band in 0..3 {
        for l in 1..n {
            let e1 = bands.state(band, l).unwrap().energy;
            let e2 = bands.state(band, n - l).unwrap().energy;
            assert!((e1 - e2).abs() <= 1e-10 * (1.0 + e1.abs()));
        }
    }
    // lowest band is the plane wave with the smallest |k| in the sector
    for l in 0..n {
        let q = g.symmetric_sector(l);
        let expected = g.ring_wavenumber(q).powi(2) / (2.0 * MASS);
        assert!((bands.state(0, l).unwrap().energy - expected).abs() <= 1e-10);
    }
}

#[test]
fn full_band_set_is_complete() {
    let g = small_grid();
    let p = g.points_per_cell();
    let bands = solve_bands(g, &PotentialSpec::cosine(1.5), MASS, p).unwrap();
    let mut sum = OperatorMatrix::zeros(g);
    for state in bands.states() {
        sum = sum.add(&OperatorMatrix::outer(&state.wavefunction)).unwrap();
    }
    assert!(sum.max_distance(&OperatorMatrix::identity(g)).unwrap() <= 1e-8);
}

#[test]
fn band_energies_match_full_grid_spectrum() {
    let g = small_grid();
    let v = PotentialSpec::cosine(0.7);
    let p = g.points_per_cell();
    let bands = solve_bands(g, &v, MASS, p).unwrap();
    let mut ours: Vec<f64> = bands.states().iter().map(|s| s.energy).collect();
    ours.sort_by(f64::total_cmp);
    let h = build_hamiltonian(g, &v, MASS).unwrap();
    let (full, _) = hermitian_eigen(h.entries()).unwrap();
    for (a, b) in ours.iter().zip(&full) {
        assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
    }
}

#[test]
fn odd_sample_counts_match_full_grid() {
    for (n, p) in [(4usize, 9usize), (3, 9), (5, 11)] {
        let g = RingGrid::new(n, 1.3, p).unwrap();
        let v = PotentialSpec::cosine(1.1);
        let bands = solve_bands(g, &v, MASS, p).unwrap();
        let mut ours: Vec<f64> = bands.states().iter().map(|s| s.energy).collect();
        ours.sort_by(f64::total_cmp);
        let h = build_hamiltonian(g, &v, MASS).unwrap();
        let (full, _) = hermitian_eigen(h.entries()).unwrap();
        for (a, b) in ours.iter().zip(&full) {
            assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()), "N={n} P={p}: {a} vs {b}");
        }
        assert!(bands.checks().orthonormality_residual <= 1e-10);
    }
}

#[test]
fn gauge_fixing_removes_arbitrary_phases() {
    let bands = reference_bands();
    let scrambled = bands.regauged(|band, l| 0.3 + 1.7 * band as f64 + 0.91 * l as f64);
    assert!(scrambled.states().iter().all(|s| s.gauge == Gauge::Arbitrary));
    let fixed = scrambled.gauge_fixed().unwrap();
    for (a, b) in fixed.states().iter().zip(bands.states()) {
        assert!(a.wavefunction.max_distance(&b.wavefunction).unwrap() <= 1e-10);
        assert_eq!(a.gauge, b.gauge);
    }
}

#[test]
fn fix_gauge_rejects_vanishing_state() {
    let g = small_grid();
    let zero = WaveFunction::from_samples(g, vec![Complex64::new(0.0, 0.0); g.total_points()]).unwrap();
    let state = BlochState::from_wavefunction(0, 0, 0.0, zero);
    assert!(matches!(fix_gauge(&state), Err(Error::DegenerateState(_))));
}

#[test]
fn invalid_inputs_are_rejected() {
    let g = small_grid();
    let v = PotentialSpec::cosine(1.0);
    assert!(matches!(solve_sector(g, &v, MASS, 4, 1), Err(Error::SectorOutOfRange { .. })));
    assert!(matches!(solve_sector(g, &v, MASS, 0, 9), Err(Error::BandCount { .. })));
    assert!(matches!(solve_sector(g, &v, -1.0, 0, 1), Err(Error::InvalidMass(_))));
    let h = build_hamiltonian(g, &v, MASS).unwrap();
    let skewed = build_hamiltonian(g, &PotentialSpec::cosine(1.0), MASS)
        .unwrap()
        .compose(&OperatorMatrix::diagonal(g, |x| Complex64::new(x, 0.0)))
        .unwrap()
        .hermitian_part();
    let t = build_translation(g);
    assert!(classify_by_translation(&h, &t, 2).is_ok());
    assert!(matches!(classify_by_translation(&skewed, &t, 2), Err(Error::NonCommuting(_))));
}
