use num_complex::Complex64 as C64;
use rebsim::channels::{
    self, DetectorKind, EmissionChannelParams, ReflectionCoefficients, ReflectionVariant, Response,
    ScatterChannelParams, TransmitHandling,
};
use rebsim::ops::CMatrix;
use rebsim::{BellState, ModeLabel, NamedObject, NamedState};
use std::f64::consts::FRAC_1_SQRT_2 as H;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn photon(name: &str, dim: usize) -> ModeLabel {
    ModeLabel::photon(name, dim).unwrap()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

fn spin_plus() -> NamedState {
    NamedState::from_ket(&[c(H), c(H)], vec![ModeLabel::spin("s")]).unwrap()
}

#[test]
fn single_photon_loss_populations() {
    let st = NamedState::basis(vec![photon("p", 2)], &[1]).unwrap();
    let out = channels::photonic_loss("p", 0.3)
        .unwrap()
        .apply(&st)
        .unwrap();
    let pops = out.level_populations("p").unwrap();
    assert!((pops[0] - 0.3).abs() < 1e-12);
    assert!((pops[1] - 0.7).abs() < 1e-12);
    // the loss channel leaves no coherence between photon numbers
    assert!(out.matrix()[(0, 1)].norm() < 1e-15);
}

#[test]
fn loss_on_fock_state_is_binomial() {
    let (n, loss) = (4, 0.35);
    let st = NamedState::basis(vec![photon("p", 6)], &[n]).unwrap();
    let out = channels::photonic_loss("p", loss)
        .unwrap()
        .apply(&st)
        .unwrap();
    let pops = out.level_populations("p").unwrap();
    for (k, p) in pops.iter().enumerate().take(n + 1) {
        let oracle = binomial(n, k) * (1.0 - loss).powi(k as i32) * loss.powi((n - k) as i32);
        assert!((p - oracle).abs() < 1e-12, "k={k}: {p} vs {oracle}");
    }
}

#[test]
fn loss_then_single_photon_projector() {
    let st = NamedState::basis(vec![photon("p", 2)], &[1]).unwrap();
    let out = channels::photonic_loss("p", 0.3)
        .unwrap()
        .then(channels::detect("p", DetectorKind::SinglePhoton))
        .apply(&st)
        .unwrap();
    assert!((out.trace() - 0.7).abs() < 1e-12);
}

#[test]
fn balanced_mix_splits_single_photon() {
    let st = NamedState::basis(vec![photon("a", 2), photon("b", 2)], &[1, 0]).unwrap();
    let out = channels::mode_mix_balanced("a", "b").apply(&st).unwrap();
    assert!((out.excited_population("a").unwrap() - 0.5).abs() < 1e-12);
    assert!((out.excited_population("b").unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn hong_ou_mandel_has_no_coincidences() {
    let st = NamedState::basis(vec![photon("a", 3), photon("b", 3)], &[1, 1]).unwrap();
    let out = channels::mode_mix_balanced("a", "b").apply(&st).unwrap();
    // index = n_a * 3 + n_b
    let rho = out.matrix();
    assert!(rho[(4, 4)].re.abs() < 1e-12, "coincidence {}", rho[(4, 4)]);
    assert!((rho[(6, 6)].re - 0.5).abs() < 1e-12);
    assert!((rho[(2, 2)].re - 0.5).abs() < 1e-12);
}

#[test]
fn vacuum_never_clicks_and_single_photon_always_does() {
    let vac = NamedState::vacuum(vec![photon("p", 2)]).unwrap();
    let one = NamedState::basis(vec![photon("p", 2)], &[1]).unwrap();
    let click = channels::detect("p", DetectorKind::Click);
    assert_eq!(click.apply(&vac).unwrap().trace(), 0.0);
    assert!((click.apply(&one).unwrap().trace() - 1.0).abs() < 1e-15);
}

#[test]
fn weak_coherent_state_single_photon_probability() {
    let dim = 10;
    let alpha: f64 = 0.1f64.sqrt();
    let ket: Vec<C64> = (0..dim)
        .map(|n| c((-alpha * alpha / 2.0).exp() * alpha.powi(n as i32) / factorial(n).sqrt()))
        .collect();
    let st = NamedState::from_ket(&ket, vec![photon("p", dim)]).unwrap();
    let out = channels::detect("p", DetectorKind::SinglePhoton)
        .apply(&st)
        .unwrap();
    let oracle = 0.1 * (-0.1f64).exp();
    assert!((out.trace() - oracle).abs() < 1e-12);
    assert!((out.trace() - 0.0905).abs() < 1e-4);
}

#[test]
fn single_depolarization_fixed_point() {
    let st =
        NamedState::from_ket(&[c(0.6), C64::new(0.0, 0.8)], vec![ModeLabel::spin("s")]).unwrap();
    let out = channels::depolarize_one("s", 0.25)
        .unwrap()
        .apply(&st)
        .unwrap();
    let target = CMatrix::identity(2, 2) * c(0.5);
    assert!((out.matrix() - target).norm() < 1e-12);
}

#[test]
fn two_qubit_depolarization_fixed_point() {
    let ket = [c(0.5), C64::new(0.1, 0.3), c(-0.7), C64::new(0.0, 0.0)];
    let norm = ket.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let ket: Vec<C64> = ket.iter().map(|x| x / norm).collect();
    let st = NamedState::from_ket(&ket, vec![ModeLabel::spin("a"), ModeLabel::spin("b")]).unwrap();
    let out = channels::depolarize_two(("a", "b"), 1.0 / 16.0)
        .unwrap()
        .apply(&st)
        .unwrap();
    let target = CMatrix::identity(4, 4) * c(0.25);
    assert!((out.matrix() - target).norm() < 1e-12);
}

#[test]
fn depolarized_bell_pair_is_werner() {
    // of the 15 non-identity Pauli pairs, XX, YY and ZZ leave Φ+ invariant
    let f = 0.8;
    let st = NamedState::from_ket(
        &BellState::PhiPlus.ket(),
        vec![ModeLabel::spin("a"), ModeLabel::spin("b")],
    )
    .unwrap();
    let out = channels::depolarize_two(("a", "b"), f)
        .unwrap()
        .apply(&st)
        .unwrap();
    let fid = out
        .bell_fidelity(("a", "b"))
        .unwrap()
        .get(BellState::PhiPlus);
    assert!((fid - (f + 3.0 * (1.0 - f) / 15.0)).abs() < 1e-12);
}

#[test]
fn prepare_state_partial_fidelity() {
    let st = channels::prepare_state("s", [c(1.0), c(0.0)], 0.9)
        .unwrap()
        .apply(&NamedState::empty())
        .unwrap();
    assert!((st.matrix()[(0, 0)].re - 0.9).abs() < 1e-12);
}

#[test]
fn spdc_first_order_and_postselected_pair() {
    let zeta = C64::new(0.01, 0.0);
    let names = ["aH", "aV", "bH", "bV"];
    let st = channels::spdc_pair(zeta, names, 3)
        .unwrap()
        .apply(&NamedState::empty())
        .unwrap();
    let rho = st.matrix();
    let idx = |n: [usize; 4]| ((n[0] * 3 + n[1]) * 3 + n[2]) * 3 + n[3];
    let vac = idx([0, 0, 0, 0]);
    let hv = idx([1, 0, 0, 1]);
    let vh = idx([0, 1, 1, 0]);
    // the ket is real here, so amplitude ratio = ρ(pair, vac) / ρ(vac, vac)
    let ratio = rho[(hv, vac)] / rho[(vac, vac)];
    assert!((ratio - zeta).norm() < zeta.norm().powi(3));

    let block = [
        [rho[(hv, hv)], rho[(hv, vh)]],
        [rho[(vh, hv)], rho[(vh, vh)]],
    ];
    let p = block[0][0].re + block[1][1].re;
    for row in block {
        for v in row {
            assert!((v / p - c(0.5)).norm() < 1e-12);
        }
    }
}

#[test]
fn emission_from_superposed_spin_with_unit_coherence() {
    let out = channels::emit_spontaneous(
        "s",
        photon("p", 2),
        photon("i", 2),
        EmissionChannelParams::ideal(),
    )
    .apply(&spin_plus())
    .unwrap()
    .partial_trace(&["i"])
    .unwrap();
    let target = NamedState::from_ket(
        &[c(H), c(0.0), c(0.0), c(H)],
        vec![ModeLabel::spin("s"), photon("p", 2)],
    )
    .unwrap();
    assert!((out.matrix() - target.matrix()).norm() < 1e-12);
}

#[test]
fn emission_with_half_loss_scales_coherence() {
    let params = EmissionChannelParams::new(0.5, 0.0, 0.0, 0.5).unwrap();
    let ch = channels::emit_spontaneous("s", photon("p", 2), photon("i", 2), params);
    let bright = NamedState::basis(vec![ModeLabel::spin("s")], &[1]).unwrap();
    let out = ch.apply(&bright).unwrap();
    assert!((out.excited_population("p").unwrap() - 0.5).abs() < 1e-12);

    // explicit two-term oracle: K_coh = |0⟩⟨0|⊗I + √½|1⟩⟨1|⊗a†, K_loss = √½|1⟩⟨1|⊗I
    let rho = ch
        .apply(&spin_plus())
        .unwrap()
        .partial_trace(&["i"])
        .unwrap()
        .into_matrix();
    // index = spin * 2 + photon
    assert!((rho[(0, 3)] - c(0.5 * 0.5f64.sqrt())).norm() < 1e-12);
    assert!((rho[(0, 2)]).norm() < 1e-12);
    assert!((rho[(2, 2)] - c(0.25)).norm() < 1e-12);
}

#[test]
fn emission_channel_is_trace_preserving() {
    let params = EmissionChannelParams::new(0.4, 0.25, 0.05, 0.3).unwrap();
    let ch = channels::emit_spontaneous("s", photon("p", 3), photon("i", 2), params);
    let out = ch.apply(&spin_plus()).unwrap();
    assert!((out.trace() - 1.0).abs() < 1e-9);
}

#[test]
fn bright_scattering_produces_coherent_state() {
    let params = ScatterChannelParams::new(c(0.3), c(0.0), 0.0).unwrap();
    let bright = NamedState::basis(vec![ModeLabel::spin("s")], &[1]).unwrap();
    let out = channels::scatter_coherent("s", photon("p", 8), photon("i", 2), params)
        .apply(&bright)
        .unwrap();
    let pops = out.level_populations("p").unwrap();
    let mean: f64 = pops.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
    assert!((mean - 0.09).abs() < 1e-9);
}

#[test]
fn incoherent_scattering_is_poissonian() {
    let mu = 0.2;
    let params = ScatterChannelParams::new(c(0.0), c(0.0), mu).unwrap();
    let bright = NamedState::basis(vec![ModeLabel::spin("s")], &[1]).unwrap();
    let out = channels::scatter_coherent("s", photon("p", 2), photon("i", 6), params)
        .apply(&bright)
        .unwrap();
    let pops = out.level_populations("i").unwrap();
    for (k, p) in pops.iter().enumerate() {
        let oracle = (-mu).exp() * mu.powi(k as i32) / factorial(k);
        assert!((p - oracle).abs() < 1e-6, "k={k}");
    }
}

#[test]
fn dark_spin_scatters_nothing() {
    let params = ScatterChannelParams::new(c(0.5), c(0.4), 0.3).unwrap();
    let dark = NamedState::basis(vec![ModeLabel::spin("s")], &[0]).unwrap();
    let out = channels::scatter_coherent("s", photon("p", 6), photon("i", 6), params)
        .apply(&dark)
        .unwrap();
    assert!(out.excited_population("p").unwrap() < 1e-15);
    assert!(out.excited_population("i").unwrap() < 1e-15);
    assert!((out.trace() - 1.0).abs() < 1e-12);
}

#[test]
fn scattering_loss_removes_coherence_between_branches() {
    // ⟨α_L|0⟩ suppresses spin coherence by exp(−|α_L|²/2)
    let al = 0.6;
    let params = ScatterChannelParams::new(c(0.0), c(al), 0.0).unwrap();
    let out = channels::scatter_coherent("s", photon("p", 2), photon("i", 2), params)
        .apply(&spin_plus())
        .unwrap()
        .reduced(&["s"])
        .unwrap();
    assert!((out.matrix()[(0, 1)].re - 0.5 * (-al * al / 2.0).exp()).abs() < 1e-12);
}

fn timebin_spin_state() -> NamedState {
    let labels = vec![ModeLabel::spin("s"), photon("e", 2), photon("l", 2)];
    // spin |+⟩ ⊗ (|1_e 0_l⟩ + |0_e 1_l⟩)/√2, index = s*4 + e*2 + l
    let mut ket = vec![c(0.0); 8];
    for s in 0..2 {
        ket[s * 4 + 2] = c(0.5);
        ket[s * 4 + 1] = c(0.5);
    }
    NamedState::from_ket(&ket, labels).unwrap()
}

#[test]
fn controlled_phase_reflection_makes_bell_pair() {
    let flip = Response {
        r: c(-1.0),
        ..Response::mirror()
    };
    let coeffs = ReflectionCoefficients::new([Response::mirror(), flip]).unwrap();
    let out = channels::reflect_conditional("s", "e", coeffs, ReflectionVariant::Phase)
        .apply(&timebin_spin_state())
        .unwrap();
    // oracle: (|0⟩(|E⟩+|L⟩) + |1⟩(−|E⟩+|L⟩))/2
    let mut ket = vec![c(0.0); 8];
    ket[2] = c(0.5);
    ket[1] = c(0.5);
    ket[6] = c(-0.5);
    ket[5] = c(0.5);
    let target = NamedState::from_ket(&ket, out.labels().to_vec()).unwrap();
    assert!((out.matrix() - target.matrix()).norm() < 1e-12);
    // maximally entangled: spin marginal is I/2 while the joint state is pure
    let spin = out.reduced(&["s"]).unwrap();
    assert!((spin.matrix() - CMatrix::identity(2, 2) * c(0.5)).norm() < 1e-12);
}

#[test]
fn absorbing_bright_state_heralds_dark_spin() {
    let coeffs = ReflectionCoefficients::new([Response::mirror(), Response::absorber()]).unwrap();
    let st = rebsim::tensor_product(
        &spin_plus(),
        &NamedState::basis(vec![photon("p", 2)], &[1]).unwrap(),
    )
    .unwrap();
    let out = channels::reflect_conditional(
        "s",
        "p",
        coeffs,
        ReflectionVariant::Amplitude(TransmitHandling::Trace),
    )
    .then(channels::detect("p", DetectorKind::Click))
    .apply(&st)
    .unwrap();
    assert!((out.trace() - 0.5).abs() < 1e-12);
    assert!((out.matrix()[(0, 0)].re - 0.5).abs() < 1e-12);
}

#[test]
fn dilation_and_kraus_routes_agree() {
    let resp = |r: f64, t: f64, phase: f64| {
        let l = (1.0 - r * r - t * t).sqrt();
        Response {
            r: C64::from_polar(r, phase),
            t: C64::from_polar(t, -0.7),
            l: C64::from_polar(l, 1.3),
        }
    };
    let coeffs = ReflectionCoefficients::new([resp(0.8, 0.3, 0.4), resp(0.2, 0.5, -2.0)]).unwrap();
    let base = tensor_product3(
        &spin_plus(),
        &NamedState::from_ket(&[c(0.6), c(0.0), c(0.8)], vec![photon("p", 3)]).unwrap(),
        &NamedState::vacuum(vec![photon("t", 3)]).unwrap(),
    );
    let traced = channels::reflect_conditional(
        "s",
        "p",
        coeffs,
        ReflectionVariant::Amplitude(TransmitHandling::Trace),
    )
    .then(channels::trace_out(&["t"]))
    .apply(&base)
    .unwrap();
    let retained = channels::reflect_conditional(
        "s",
        "p",
        coeffs,
        ReflectionVariant::Amplitude(TransmitHandling::Retain("t".into())),
    )
    .then(channels::trace_out(&["t"]))
    .apply(&base)
    .unwrap();
    assert!((traced.matrix() - retained.matrix()).norm() < 1e-10);
    assert!((retained.trace() - 1.0).abs() < 1e-9);
}

#[test]
fn retained_transmission_carries_the_photon() {
    let coeffs = ReflectionCoefficients::new(
        [Response {
            r: c(0.0),
            t: c(1.0),
            l: c(0.0),
        }; 2],
    )
    .unwrap();
    let base = tensor_product3(
        &NamedState::basis(vec![ModeLabel::spin("s")], &[0]).unwrap(),
        &NamedState::basis(vec![photon("p", 2)], &[1]).unwrap(),
        &NamedState::vacuum(vec![photon("t", 2)]).unwrap(),
    );
    let out = channels::reflect_conditional(
        "s",
        "p",
        coeffs,
        ReflectionVariant::Amplitude(TransmitHandling::Retain("t".into())),
    )
    .apply(&base)
    .unwrap();
    assert!((out.excited_population("t").unwrap() - 1.0).abs() < 1e-12);
    assert!(out.excited_population("p").unwrap() < 1e-12);
}

fn tensor_product3(a: &NamedState, b: &NamedState, c: &NamedState) -> NamedState {
    rebsim::tensor_product(&rebsim::tensor_product(a, b).unwrap(), c).unwrap()
}
