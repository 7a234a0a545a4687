use proptest::prelude::*;
use rabisim::hilbert::{cat_state, coherent_state, QuantumState, SpaceSpec, Support};
use rabisim::measure::{mean_photon, wigner_point};
use rabisim::tomo::{
    build_measurement_ops, double_gaussian_fit, mle_reconstruct, square_grid, synthesize_dataset,
    systematic_phase_correction, MleOptions, PhaseSpaceGrid,
};
use rabisim::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sp(n: usize) -> SpaceSpec {
    SpaceSpec::new(n).unwrap()
}

fn reconstruct(truth: &QuantumState<f64>, extent: f64, n: usize, trunc: usize) -> QuantumState<f64> {
    let ds = synthesize_dataset(truth, &square_grid(extent, n), sp(60), sp(trunc)).unwrap();
    let ops = build_measurement_ops(&ds).unwrap();
    let rec = mle_reconstruct(&ds, &ops, &MleOptions::default()).unwrap();
    let d = &rec.diagnostics;
    assert!(d.history.windows(2).all(|w| w[1] >= w[0]));
    rec.state
}

fn trace_distance(a: &QuantumState<f64>, b: &QuantumState<f64>) -> f64 {
    let diff = a.density_matrix() - b.density_matrix();
    let h = (&diff + diff.adjoint()) * Complex64::new(0.5, 0.0);
    nalgebra::linalg::SymmetricEigen::new(h).eigenvalues.iter().map(|x| x.abs()).sum::<f64>() / 2.0
}

fn embed(state: &QuantumState<f64>, trunc: usize) -> QuantumState<f64> {
    // crop a resonator state onto the reconstruction space and renormalize
    let d = trunc + 1;
    let rho = state.density_matrix().view((0, 0), (d, d)).into_owned();
    let tr = rho.trace().re;
    QuantumState::mixed(Support::Resonator(sp(trunc)), rho / Complex64::new(tr, 0.0)).unwrap()
}

#[test]
fn reconstructs_reference_states() {
    let big = sp(30);
    let cases = [
        ("vacuum", QuantumState::vacuum(big)),
        ("fock1", QuantumState::fock(1, big).unwrap()),
        ("odd cat", cat_state(Complex64::new(1.5, 0.0), -1.0, big).unwrap()),
    ];
    for (name, truth) in &cases {
        let rec = reconstruct(truth, 2.5, 13, 8);
        let fid = rec.fidelity(&embed(truth, 8)).unwrap();
        assert!(fid > 0.99, "{name}: {fid}");
        if *name == "odd cat" {
            let w0 = wigner_point(&rec, Complex64::new(0.0, 0.0)).unwrap();
            assert!(w0 < -0.55, "{w0}");
        }
    }
}

#[test]
fn reconstructs_mixed_two_level_state() {
    let mut rho = nalgebra::DMatrix::zeros(9, 9);
    rho[(0, 0)] = Complex64::new(0.5, 0.0);
    rho[(1, 1)] = Complex64::new(0.5, 0.0);
    let truth = QuantumState::mixed(Support::Resonator(sp(8)), rho).unwrap();
    let rec = reconstruct(&truth, 2.0, 11, 8);
    assert!(trace_distance(&rec, &truth) < 0.01);
    assert!((mean_photon(&rec).unwrap() - 0.5).abs() < 0.01);
}

#[test]
fn fidelity_improves_with_grid_and_shots() {
    let truth = coherent_state(Complex64::new(0.8, 0.4), sp(30)).unwrap();
    let target = embed(&truth, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut fids = Vec::new();
    for (n, shots) in [(7, 200), (11, 2000), (17, 20000)] {
        let ds = synthesize_dataset(&truth, &square_grid(2.5, n), sp(60), sp(6))
            .unwrap()
            .with_shot_noise(shots, &mut rng)
            .unwrap();
        let ops = build_measurement_ops(&ds).unwrap();
        let rec = mle_reconstruct(&ds, &ops, &MleOptions::default()).unwrap();
        fids.push(rec.state.fidelity(&target).unwrap());
    }
    assert!(fids[0] <= fids[1] + 0.005 && fids[1] <= fids[2] + 0.002, "{fids:?}");
    assert!(fids[2] > 0.99, "{fids:?}");
}

#[test]
fn phase_correction_moves_fitted_centroid() {
    let s = sp(30);
    let truth = coherent_state(Complex64::new(1.5, 0.0), s).unwrap();
    let th = std::f64::consts::FRAC_PI_3;
    let rot = systematic_phase_correction(&truth.density_matrix(), th);
    let rot = QuantumState::mixed(Support::Resonator(s), rot).unwrap();
    let axis: Vec<f64> = (0..57).map(|k| -3.5 + k as f64 * 0.125).collect();
    let fit = double_gaussian_fit(&PhaseSpaceGrid::from_state(&rot, axis.clone(), axis).unwrap()).unwrap();
    let c = fit.peaks[0].center;
    assert!((c.re - 1.5 * th.cos()).abs() < 0.01 && (c.im - 1.5 * th.sin()).abs() < 0.01);
    assert!((mean_photon(&rot).unwrap() - mean_photon(&truth).unwrap()).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn reconstruction_is_a_density_matrix(re in -1.5f64..1.5, im in -1.5f64..1.5, shots in 50u64..500, seed in any::<u64>()) {
        let truth = coherent_state(Complex64::new(re, im), sp(30)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ds = synthesize_dataset(&truth, &square_grid(2.0, 7), sp(40), sp(5))
            .unwrap()
            .with_shot_noise(shots, &mut rng)
            .unwrap();
        let ops = build_measurement_ops(&ds).unwrap();
        let opts = MleOptions { max_iter: 400, ..MleOptions::default() };
        let rec = mle_reconstruct(&ds, &ops, &opts).unwrap();
        let rho = rec.state.density_matrix();
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-9);
        let h = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
        let min = nalgebra::linalg::SymmetricEigen::new(h).eigenvalues.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        prop_assert!(min > -1e-9);
        prop_assert!(rec.diagnostics.history.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn phase_correction_keeps_populations(theta in -6.3f64..6.3, re in -1.5f64..1.5) {
        let truth = coherent_state(Complex64::new(re, 0.3), sp(20)).unwrap().density_matrix();
        let rot = systematic_phase_correction(&truth, theta);
        for i in 0..truth.nrows() {
            prop_assert!((rot[(i, i)] - truth[(i, i)]).norm() < 1e-15);
        }
    }
}
