use qalab_core::dynamics::{evolve_closed, EvolutionConfig};
use qalab_core::model::{ModelParams, RqaSchedule};
use qalab_core::operators::{SpinConfiguration, StateVector};

fn final_state(dt: f64) -> StateVector {
    let params = ModelParams::fully_connected();
    let sched = RqaSchedule::new(1.0, 0.5, 1.0, 0.4).unwrap();
    let psi0 = StateVector::basis(&SpinConfiguration::all_up(4).unwrap());
    let cfg = EvolutionConfig {
        dt: Some(dt),
        hold_fast_path: false,
        record_stride: usize::MAX,
        ..EvolutionConfig::default()
    };
    evolve_closed(&psi0, &sched, &params, &cfg).unwrap().into_final().unwrap()
}

#[test]
fn halving_the_step_cuts_error_sixteenfold() {
    let reference = final_state(0.025 / 16.0);
    let err = |dt: f64| (final_state(dt).amplitudes() - reference.amplitudes()).norm();
    let coarse = err(0.025);
    let fine = err(0.0125);
    let ratio = coarse / fine;
    assert!(coarse > 1e-9, "reference run too easy: {coarse}");
    assert!(ratio >= 12.0 && ratio <= 20.0, "ratio {ratio}");
}
