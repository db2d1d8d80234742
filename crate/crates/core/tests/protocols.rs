use num_complex::Complex64 as C64;
use rebsim::cavity::CoupledSystem;
use rebsim::channels::{DetectorKind, EmissionChannelParams, ReflectionCoefficients, Response};
use rebsim::protocols::{
    ideal_projector_coefficients, protocol_a, protocol_a_with, protocol_b, protocol_b_with,
    protocol_c, protocol_c_with, Hardware, InputSource, Losses,
};
use rebsim::Error;

fn lossless() -> Hardware {
    Hardware::lossless(DetectorKind::Click)
}

fn with_link(loss: f64) -> Hardware {
    Hardware {
        losses: Losses {
            link_loss: loss,
            ..Losses::none()
        },
        ..lossless()
    }
}

#[test]
fn ideal_protocol_b_is_a_perfect_bell_pair() {
    let c = ideal_projector_coefficients();
    let out = protocol_b_with(c, c, &lossless()).unwrap().run().unwrap();
    assert!(out.infidelity.abs() < 1e-9, "infidelity {}", out.infidelity);
    // the photon survives each node's projector with probability 1/2
    assert!((out.success_probability - 0.25).abs() < 1e-12);
}

#[test]
fn ideal_protocol_c_hits_the_linear_optics_ceiling() {
    let c = ideal_projector_coefficients();
    let out = protocol_c_with(c, c, InputSource::SinglePhoton, &lossless())
        .unwrap()
        .run()
        .unwrap();
    assert!(out.infidelity.abs() < 1e-9);
    let survival: f64 = 0.5;
    assert!((out.success_probability - 0.5 * survival.powi(2)).abs() < 1e-9);
}

#[test]
fn ideal_protocol_a_with_number_resolving_detectors() {
    let hw = Hardware::lossless(DetectorKind::SinglePhoton);
    let out = protocol_a_with(EmissionChannelParams::ideal(), 0.5, &hw)
        .unwrap()
        .run()
        .unwrap();
    assert!(out.infidelity.abs() < 1e-9, "infidelity {}", out.infidelity);
}

#[test]
fn protocol_a_click_detectors_see_double_excitations() {
    // both spins bright emit two photons which bunch onto one detector and
    // still click: amplitude oracle over the four spin configurations
    let alpha: f64 = 0.5;
    let out = protocol_a_with(EmissionChannelParams::ideal(), alpha, &lossless())
        .unwrap()
        .run()
        .unwrap();
    let single = 2.0 * alpha * (1.0 - alpha);
    let double = alpha * alpha;
    assert!((out.success_probability - (single + double)).abs() < 1e-12);
    assert!((out.fidelity - single / (single + double)).abs() < 1e-12);
}

#[test]
fn protocol_a_alpha_zero_never_heralds() {
    let spec = protocol_a_with(EmissionChannelParams::ideal(), 0.0, &lossless()).unwrap();
    assert!(matches!(spec.run(), Err(Error::ZeroHeraldProbability)));
}

#[test]
fn protocol_c_success_scales_with_arm_survival() {
    let c = ideal_projector_coefficients();
    let base = protocol_c_with(c, c, InputSource::SinglePhoton, &lossless())
        .unwrap()
        .run()
        .unwrap();
    let l = 0.37;
    let lossy = protocol_c_with(c, c, InputSource::SinglePhoton, &with_link(l))
        .unwrap()
        .run()
        .unwrap();
    let ratio = lossy.success_probability / base.success_probability;
    assert!((ratio - (1.0 - l) * (1.0 - l)).abs() < 1e-10);
    assert!((lossy.fidelity - base.fidelity).abs() < 1e-10);
}

#[test]
fn protocol_c_full_loss_never_heralds() {
    let c = ideal_projector_coefficients();
    let res = protocol_c_with(c, c, InputSource::SinglePhoton, &with_link(1.0))
        .unwrap()
        .run();
    match res {
        Err(Error::ZeroHeraldProbability) => {}
        Ok(o) => assert!(o.success_probability < 1e-12),
        Err(e) => panic!("unexpected error {e}"),
    }
}

#[test]
fn no_contrast_gives_separable_spins() {
    let m = ReflectionCoefficients::new([Response::mirror(), Response::mirror()]).unwrap();
    let out = protocol_b_with(m, m, &lossless()).unwrap().run().unwrap();
    // spins stay in a product of |±⟩ states: overlap with any Bell state ≤ 1/2
    assert!(out.fidelity <= 0.5 + 1e-12);
}

#[test]
fn far_detuned_projector_loses_contrast() {
    let sys = CoupledSystem::projector_default();
    let out = protocol_b(&sys, -5e4, 0.0, &lossless())
        .unwrap()
        .run()
        .unwrap();
    assert!(out.fidelity < 0.5 + 1e-3, "fidelity {}", out.fidelity);
}

#[test]
fn herald_patterns_sum_to_pre_measurement_trace() {
    let sys = CoupledSystem::projector_default();
    let spec = protocol_c(
        &sys,
        -6.0,
        40.0,
        InputSource::SinglePhoton,
        &Hardware::default(),
    )
    .unwrap();
    let total: f64 = spec
        .run_detailed()
        .unwrap()
        .iter()
        .map(|p| p.probability)
        .sum();
    let trace = spec.pre_measurement_state().unwrap().trace();
    assert!((total - trace).abs() < 1e-9);

    let hw = Hardware::lossless(DetectorKind::SinglePhoton);
    let spec = protocol_a_with(EmissionChannelParams::ideal(), 0.3, &hw).unwrap();
    let patterns = spec.run_detailed().unwrap();
    let total: f64 = patterns.iter().map(|p| p.probability).sum();
    assert!((total - 1.0).abs() < 1e-9);
    assert!(patterns.iter().any(|p| p.pattern.contains('x')));
}

#[test]
fn outcome_is_invariant_under_mode_relabeling() {
    let sys = CoupledSystem::projector_default();
    let spec = protocol_c(
        &sys,
        -6.0,
        40.0,
        InputSource::SinglePhoton,
        &Hardware::default(),
    )
    .unwrap();
    let renamed = spec.map_names(&|n| format!("node/{n}"));
    let a = spec.run().unwrap();
    let b = renamed.run().unwrap();
    assert!((a.success_probability - b.success_probability).abs() < 1e-14);
    assert!((a.fidelity - b.fidelity).abs() < 1e-12);
}

#[test]
fn loss_amplitude_phase_is_unobservable() {
    let sys = CoupledSystem::projector_default();
    let c = rebsim::protocols::coefficients_at(&sys, -1.0, 35.0).unwrap();
    let rotate = |r: Response, phi: f64| Response {
        l: r.l * C64::from_polar(1.0, phi),
        ..r
    };
    let c2 = ReflectionCoefficients::new([rotate(c.get(0), 1.1), rotate(c.get(1), -0.4)]).unwrap();
    let hw = Hardware::default();
    let a = protocol_b_with(c, c, &hw).unwrap().run().unwrap();
    let b = protocol_b_with(c2, c2, &hw).unwrap().run().unwrap();
    assert!((a.success_probability - b.success_probability).abs() < 1e-14);
    assert!((a.fidelity - b.fidelity).abs() < 1e-12);
}

#[test]
fn protocol_a_low_alpha_reaches_incoherent_floor() {
    let sys = CoupledSystem::emission_default();
    let hw = Hardware::default();
    let lo = protocol_a(&sys, 1e-6, &hw).unwrap().run().unwrap();
    let lower = protocol_a(&sys, 1e-7, &hw).unwrap().run().unwrap();
    assert!(lower.success_probability < lo.success_probability);
    assert!(lo.infidelity > 1e-3, "floor {}", lo.infidelity);
    assert!((lo.infidelity - lower.infidelity).abs() < 1e-4);
}

#[test]
fn wcs_is_worse_than_single_photon_at_same_settings() {
    let sys = CoupledSystem::projector_default();
    let hw = Hardware {
        fock_dim: 4,
        ..Hardware::default()
    };
    let single = protocol_c(&sys, -1.0, 35.0, InputSource::SinglePhoton, &hw)
        .unwrap()
        .run()
        .unwrap();
    let wcs = protocol_c(&sys, -1.0, 35.0, InputSource::Wcs { alpha: 0.3 }, &hw)
        .unwrap()
        .run()
        .unwrap();
    assert!(wcs.infidelity > single.infidelity);
    assert!(wcs.success_probability < single.success_probability);
}
