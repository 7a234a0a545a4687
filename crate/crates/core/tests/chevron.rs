use proptest::prelude::*;
use rabisim::chevron::{find_compensation_phase, run_chevron, ChevronObservable, ChevronSpec};
use std::f64::consts::TAU;

const G: f64 = 1.95;
const PULSE: f64 = 0.02;

fn detunings() -> Vec<f64> {
    (0..81).map(|k| -100.0 + 2.5 * k as f64).collect()
}

fn durations() -> Vec<f64> {
    (1..=101).map(|k| k as f64 * 0.015).collect()
}

fn resonances(spec: &ChevronSpec<f64>) -> Vec<f64> {
    run_chevron(spec, ChevronObservable::QubitExcitation).unwrap().resonances(0.05)
}

#[test]
fn uncompensated_satellites_are_spaced_by_inverse_pulse() {
    let spec = ChevronSpec::digital(G, detunings(), durations(), PULSE, 1.0).unwrap();
    let mut peaks = resonances(&spec);
    assert!(peaks.len() >= 2, "{peaks:?}");
    let main = peaks[0];
    // main resonance shifted by −off_phase/(2π·pulse_len)
    assert!((main + 1.0 / (TAU * PULSE)).abs() <= 2.5, "{main}");
    peaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let gaps: Vec<f64> = peaks.windows(2).map(|w| w[1] - w[0]).collect();
    for gap in &gaps {
        assert!((gap - 1.0 / PULSE).abs() <= 2.5, "{peaks:?}");
    }
}

#[test]
fn compensation_realigns_with_analog() {
    let spec = ChevronSpec::digital(G, detunings(), durations(), PULSE, 1.0).unwrap();
    let c = find_compensation_phase(&spec, 720).unwrap();
    let fixed = spec.with_off_phase(spec.off_phase + c);
    let digital = resonances(&fixed)[0];
    let analog = resonances(&ChevronSpec::analog(G, detunings(), durations()).unwrap())[0];
    assert!((digital - analog).abs() <= 2.5, "{digital} vs {analog}");
    assert!(analog.abs() <= 2.5);

    let on_res = |s: &ChevronSpec<f64>| {
        let probe = ChevronSpec { detunings: vec![0.0], ..s.clone() };
        run_chevron(&probe, ChevronObservable::QubitExcitation).unwrap().swap_contrast()[0]
    };
    assert!(on_res(&fixed) >= on_res(&spec));
}

#[test]
fn single_pulse_digital_is_analog() {
    let dur: Vec<f64> = (0..40).map(|k| k as f64 * 0.01).collect();
    let analog = run_chevron(&ChevronSpec::analog(G, detunings(), dur.clone()).unwrap(), ChevronObservable::MeanPhoton)
        .unwrap();
    let digital = run_chevron(
        &ChevronSpec::digital(G, detunings(), dur, 1.0, 2.2).unwrap(),
        ChevronObservable::MeanPhoton,
    )
    .unwrap();
    assert!((analog.values - digital.values).abs().max() < 1e-12);
}

#[test]
fn observables_are_consistent() {
    let spec = ChevronSpec::digital(G, detunings(), durations(), PULSE, 0.7).unwrap();
    let pe = run_chevron(&spec, ChevronObservable::QubitExcitation).unwrap();
    let n = run_chevron(&spec, ChevronObservable::MeanPhoton).unwrap();
    let parity = run_chevron(&spec, ChevronObservable::PhotonParity).unwrap();
    // one excitation shared between qubit and resonator
    assert!((&pe.values + &n.values).map(|x| (x - 1.0).abs()).max() < 1e-12);
    assert!((&parity.values - &pe.values).abs().max() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn resonance_follows_satellite_condition(phi in 0.3f64..5.9) {
        // main resonance at the integer k closest to Δ·pulse_len + φ/2π = k
        let spec = ChevronSpec::digital(G, detunings(), durations(), PULSE, phi).unwrap();
        let main = resonances(&spec)[0];
        let frac = main * PULSE + phi / TAU;
        prop_assert!((frac - frac.round()).abs() * (1.0 / PULSE) <= 2.5 + 1e-9, "{main} {phi}");
    }

    #[test]
    fn compensation_recovers_synthetic_phase(theta in 0.0f64..TAU) {
        let spec = ChevronSpec::digital(G, vec![0.0], durations(), PULSE, theta).unwrap();
        let c = find_compensation_phase(&spec, 360).unwrap();
        let total = (theta + c).rem_euclid(TAU);
        prop_assert!(total.min(TAU - total) <= TAU / 360.0 + 1e-9);
    }
}
