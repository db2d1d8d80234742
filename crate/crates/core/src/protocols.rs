//! Remote-entanglement protocols composed from channels.
//!
//! A [`ProtocolSpec`] is a pipeline of channel steps followed by a herald
//! rule. Steps inside a [`Step::Branch`] act on a fresh local system that is
//! tensored onto the main state afterwards, which keeps node-local work in a
//! small Hilbert space.
//!
//! Three protocols are provided:
//! * A: spontaneous emission at both nodes, single-click detection at a midpoint;
//! * B: one time-bin photon reflected at node A then node B, measured at B;
//! * C: each node reflects its own time-bin photon, two-photon Bell
//!   measurement at a midpoint.

use std::cmp::Ordering;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::cavity::{
    emission_channel_probabilities, reflection_coefficients, CoupledSystem, OperatingPoint,
};
use crate::channels::{
    self, Channel, DetectorKind, EmissionChannelParams, ReflectionCoefficients, ReflectionVariant,
    Response, TransmitHandling, LEAKAGE_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::ops::{self, CMatrix, ZERO};
use crate::tensor::{tensor_product, BellState, ModeKind, ModeLabel, NamedObject, NamedState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    DetectionInMidpoint,
    SenderReceiver,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    Fock,
    TimeBin,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputSource {
    SinglePhoton,
    /// Weak coherent state of total amplitude `alpha`, split evenly over the
    /// two time bins.
    Wcs {
        alpha: f64,
    },
}

/// How loss figures are read: as the fraction lost or the fraction transmitted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossConvention {
    #[default]
    LostFraction,
    Transmission,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Losses {
    pub link_loss: f64,
    pub insertion_loss: f64,
    #[serde(default)]
    pub convention: LossConvention,
}

impl Losses {
    pub fn none() -> Self {
        Losses {
            link_loss: 0.0,
            insertion_loss: 0.0,
            convention: LossConvention::LostFraction,
        }
    }

    /// Link loss 0.9 and device insertion loss 0.5, read as lost fractions.
    pub fn table_defaults() -> Self {
        Losses {
            link_loss: 0.9,
            insertion_loss: 0.5,
            convention: LossConvention::LostFraction,
        }
    }

    fn as_loss(&self, v: f64) -> f64 {
        match self.convention {
            LossConvention::LostFraction => v,
            LossConvention::Transmission => 1.0 - v,
        }
    }

    /// Lost fraction of one link traversal.
    pub fn link(&self) -> f64 {
        self.as_loss(self.link_loss)
    }

    /// Lost fraction of one device pass.
    pub fn insertion(&self) -> f64 {
        self.as_loss(self.insertion_loss)
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("link_loss", self.link_loss),
            ("insertion_loss", self.insertion_loss),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::OutOfRange {
                    name,
                    value: v,
                    range: "[0, 1]",
                });
            }
        }
        Ok(())
    }
}

/// Settings shared by all protocol builders.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hardware {
    pub losses: Losses,
    pub detector: DetectorKind,
    /// Fock dimension of coherent photon modes (`n_max + 1`).
    pub fock_dim: usize,
}

impl Default for Hardware {
    fn default() -> Self {
        Hardware {
            losses: Losses::table_defaults(),
            detector: DetectorKind::Click,
            fock_dim: 3,
        }
    }
}

impl Hardware {
    pub fn lossless(detector: DetectorKind) -> Self {
        Hardware {
            losses: Losses::none(),
            detector,
            fock_dim: 3,
        }
    }
}

#[derive(Clone, Debug)]
pub enum Step {
    Channel(Channel),
    /// Independent sub-pipeline started from the empty state and tensored in.
    Branch(Vec<Step>),
}

impl Step {
    fn map_names(&self, f: &dyn Fn(&str) -> String) -> Step {
        match self {
            Step::Channel(c) => Step::Channel(c.map_names(f)),
            Step::Branch(steps) => Step::Branch(steps.iter().map(|s| s.map_names(f)).collect()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detector {
    pub name: String,
    /// Modes arriving on this detector; their photon numbers add up.
    pub modes: Vec<String>,
    pub kind: DetectorKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeraldRule {
    pub detectors: Vec<Detector>,
    /// Accepted click patterns (one flag per detector) and the Bell state
    /// each one heralds.
    pub accept: Vec<(Vec<bool>, BellState)>,
}

impl HeraldRule {
    pub fn pattern_label(pattern: &[bool]) -> String {
        pattern.iter().map(|&c| if c { '1' } else { '0' }).collect()
    }
}

#[derive(Clone, Debug)]
pub struct ProtocolSpec {
    pub name: String,
    pub topology: Topology,
    pub encoding: Encoding,
    pub input_source: InputSource,
    pub steps: Vec<Step>,
    pub herald: HeraldRule,
    pub spins: (String, String),
    /// Bell state of the first accepted pattern; other patterns are mapped
    /// onto it by local Pauli corrections.
    pub target: BellState,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolOutcome {
    pub success_probability: f64,
    pub fidelity: f64,
    pub infidelity: f64,
    /// Accepted click patterns joined by `+`, one character per detector.
    pub herald_pattern: String,
    pub swept_values: Vec<(String, f64)>,
}

impl ProtocolOutcome {
    pub fn with_swept_values(mut self, values: Vec<(String, f64)>) -> Self {
        self.swept_values = values;
        self
    }
}

/// Probability of one detector outcome pattern.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternProbability {
    /// One character per detector: `0` no photon, `1` detection event,
    /// `x` photons present without a detection event (number-resolving only).
    pub pattern: String,
    pub probability: f64,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum DetectorOutcome {
    Silent,
    Fired,
    Other,
}

impl DetectorOutcome {
    fn classify(kind: DetectorKind, n: usize) -> Self {
        if n == 0 {
            DetectorOutcome::Silent
        } else if kind.fires(n) {
            DetectorOutcome::Fired
        } else {
            DetectorOutcome::Other
        }
    }

    fn symbol(self) -> char {
        match self {
            DetectorOutcome::Silent => '0',
            DetectorOutcome::Fired => '1',
            DetectorOutcome::Other => 'x',
        }
    }
}

fn run_steps(steps: &[Step], start: NamedState) -> Result<NamedState> {
    let mut state = start;
    for step in steps {
        state = match step {
            Step::Channel(c) => c.apply(&state)?,
            Step::Branch(inner) => {
                let local = run_steps(inner, NamedState::empty())?;
                tensor_product(&state, &local)?
            }
        };
    }
    Ok(state)
}

impl ProtocolSpec {
    /// Executes the pipeline up to (not including) the herald measurement.
    pub fn pre_measurement_state(&self) -> Result<NamedState> {
        let state = run_steps(&self.steps, NamedState::empty())?;
        if log::log_enabled!(log::Level::Warn) {
            state.truncation_warnings(LEAKAGE_THRESHOLD);
        }
        Ok(state)
    }

    fn detector_modes(&self) -> Vec<&str> {
        self.herald
            .detectors
            .iter()
            .flat_map(|d| d.modes.iter().map(String::as_str))
            .collect()
    }

    /// Per-detector photon totals for a level assignment of the detector modes.
    fn outcome_of(&self, levels: &[usize]) -> Vec<DetectorOutcome> {
        let mut i = 0;
        self.herald
            .detectors
            .iter()
            .map(|d| {
                let n: usize = levels[i..i + d.modes.len()].iter().sum();
                i += d.modes.len();
                DetectorOutcome::classify(d.kind, n)
            })
            .collect()
    }

    fn conditional_state(&self, state: &NamedState, pattern: &[bool]) -> Result<NamedState> {
        let modes = self.detector_modes();
        state.project_and_trace(&modes, |levels| {
            self.outcome_of(levels)
                .iter()
                .zip(pattern)
                .all(|(o, &want)| {
                    if want {
                        *o == DetectorOutcome::Fired
                    } else {
                        *o == DetectorOutcome::Silent
                    }
                })
        })
    }

    fn validate(&self) -> Result<()> {
        if self.herald.accept.is_empty() {
            return Err(Error::InvalidProtocol(
                "herald rule accepts no pattern".into(),
            ));
        }
        for (pattern, _) in &self.herald.accept {
            if pattern.len() != self.herald.detectors.len() {
                return Err(Error::InvalidProtocol(format!(
                    "pattern {} does not match {} detectors",
                    HeraldRule::pattern_label(pattern),
                    self.herald.detectors.len()
                )));
            }
        }
        Ok(())
    }

    /// Runs the protocol and aggregates all accepted herald patterns.
    pub fn run(&self) -> Result<ProtocolOutcome> {
        self.validate()?;
        let state = self.pre_measurement_state()?;
        let mut success = 0.0;
        let mut weighted = 0.0;
        for (pattern, target) in &self.herald.accept {
            let cond = self.conditional_state(&state, pattern)?;
            let p = cond.trace();
            if p > 0.0 {
                let f = cond
                    .bell_fidelity((&self.spins.0, &self.spins.1))?
                    .get(*target);
                success += p;
                weighted += p * f;
            }
        }
        if !(success > 0.0) {
            return Err(Error::ZeroHeraldProbability);
        }
        let fidelity = weighted / success;
        Ok(ProtocolOutcome {
            success_probability: success,
            fidelity,
            infidelity: 1.0 - fidelity,
            herald_pattern: self
                .herald
                .accept
                .iter()
                .map(|(p, _)| HeraldRule::pattern_label(p))
                .collect::<Vec<_>>()
                .join("+"),
            swept_values: Vec::new(),
        })
    }

    /// Probability of every detector outcome pattern, accepted or not.
    pub fn run_detailed(&self) -> Result<Vec<PatternProbability>> {
        let state = self.pre_measurement_state()?;
        let modes = self.detector_modes();
        let mut totals: Vec<(String, f64)> = Vec::new();
        let reduced = state.reduced(&modes)?;
        let dims: Vec<usize> = reduced.labels().iter().map(ModeLabel::dim).collect();
        let count: usize = dims.iter().product();
        let mut levels = vec![0usize; dims.len()];
        for idx in 0..count {
            let mut rem = idx;
            for k in (0..dims.len()).rev() {
                levels[k] = rem % dims[k];
                rem /= dims[k];
            }
            let label: String = self
                .outcome_of(&levels)
                .into_iter()
                .map(DetectorOutcome::symbol)
                .collect();
            let p = reduced.matrix()[(idx, idx)].re;
            match totals.iter_mut().find(|(l, _)| *l == label) {
                Some(entry) => entry.1 += p,
                None => totals.push((label, p)),
            }
        }
        totals.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(totals
            .into_iter()
            .map(|(pattern, probability)| PatternProbability {
                pattern,
                probability,
            })
            .collect())
    }

    /// Same protocol with every mode name (spins included) passed through `f`.
    pub fn map_names(&self, f: &dyn Fn(&str) -> String) -> ProtocolSpec {
        ProtocolSpec {
            steps: self.steps.iter().map(|s| s.map_names(f)).collect(),
            herald: HeraldRule {
                detectors: self
                    .herald
                    .detectors
                    .iter()
                    .map(|d| Detector {
                        modes: d.modes.iter().map(|m| f(m)).collect(),
                        ..d.clone()
                    })
                    .collect(),
                accept: self.herald.accept.clone(),
            },
            spins: (f(&self.spins.0), f(&self.spins.1)),
            ..self.clone()
        }
    }
}

pub fn run(spec: &ProtocolSpec) -> Result<ProtocolOutcome> {
    spec.run()
}

fn ch(c: Channel) -> Step {
    Step::Channel(c)
}

fn photon(name: &str, dim: usize) -> Result<ModeLabel> {
    ModeLabel::photon(name, dim)
}

fn plus() -> [C64; 2] {
    [C64::new(FRAC_1_SQRT_2, 0.0), C64::new(FRAC_1_SQRT_2, 0.0)]
}

fn loss_steps(modes: &[&str], loss: f64) -> Result<Vec<Step>> {
    if loss == 0.0 {
        return Ok(Vec::new());
    }
    modes
        .iter()
        .map(|m| Ok(ch(channels::photonic_loss(m, loss)?)))
        .collect()
}

/// Time-bin qubit `(|E⟩ + |L⟩)/√2` carried by a single photon or a weak
/// coherent state, as a state on the modes `(early, late)`.
pub fn time_bin_input(early: &str, late: &str, source: InputSource, dim: usize) -> Result<Channel> {
    let labels = vec![photon(early, dim)?, photon(late, dim)?];
    let ket = match source {
        InputSource::SinglePhoton => {
            let mut k = vec![ZERO; dim * dim];
            k[dim] = C64::new(FRAC_1_SQRT_2, 0.0); // |1, 0⟩
            k[1] = C64::new(FRAC_1_SQRT_2, 0.0); // |0, 1⟩
            k
        }
        InputSource::Wcs { alpha } => {
            if dim < 4 {
                return Err(Error::InvalidProtocol(format!(
                    "weak coherent input needs Fock dimension of at least 4, got {dim}"
                )));
            }
            let bin = C64::new(alpha * FRAC_1_SQRT_2, 0.0);
            let (amps, leak) = ops::coherent_amplitudes(dim, bin);
            let total_leak = 1.0 - (1.0 - leak).powi(2);
            if total_leak > LEAKAGE_THRESHOLD {
                return Err(Error::TruncationLeakage {
                    mode: early.to_string(),
                    leakage: total_leak,
                    threshold: LEAKAGE_THRESHOLD,
                });
            }
            let norm = 1.0 - leak;
            let mut k = vec![ZERO; dim * dim];
            for e in 0..dim {
                for l in 0..dim {
                    k[e * dim + l] = amps[e] * amps[l] / norm;
                }
            }
            k
        }
    };
    let rho = CMatrix::from_fn(dim * dim, dim * dim, |i, j| ket[i] * ket[j].conj());
    channels::prepare_modes(labels, rho)
}

/// Coefficients of a perfect amplitude projector: the dark state absorbs,
/// the bright state reflects.
pub fn ideal_projector_coefficients() -> ReflectionCoefficients {
    ReflectionCoefficients::new([Response::absorber(), Response::mirror()])
        .expect("unit amplitudes")
}

/// Coefficients from the cavity model at laser detuning `Δ_la` and
/// cavity-emitter detuning `Δ_ac`.
pub fn coefficients_at(
    sys: &CoupledSystem,
    delta_la: f64,
    delta_ac: f64,
) -> Result<ReflectionCoefficients> {
    sys.validate()?;
    let sys = sys.with_cavity_detuning(delta_ac);
    let op = OperatingPoint::from_laser_detuning(&sys, delta_la);
    reflection_coefficients(&sys, &op)
}

/// Emission-based single-click protocol with explicit emission probabilities.
///
/// `alpha` is the bright-state population of the initial spin state
/// `√(1−α)|0⟩ + √α|1⟩` at both nodes.
pub fn protocol_a_with(
    params: EmissionChannelParams,
    alpha: f64,
    hw: &Hardware,
) -> Result<ProtocolSpec> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::OutOfRange {
            name: "alpha",
            value: alpha,
            range: "[0, 1]",
        });
    }
    hw.losses.validate()?;
    let dim = hw.fock_dim;
    let psi = [
        C64::new((1.0 - alpha).sqrt(), 0.0),
        C64::new(alpha.sqrt(), 0.0),
    ];
    let node = |x: &str| -> Result<Step> {
        let spin = format!("spin_{x}");
        let coh = format!("coh_{x}");
        let inc1 = format!("incoh_{x}_1");
        let inc2 = format!("incoh_{x}_2");
        let inc_label =
            |n: &str| Ok::<_, Error>(photon(n, 2)?.with_kind(ModeKind::IncoherentPhoton));
        let mut steps = vec![
            ch(channels::prepare_state(&spin, psi, 1.0)?),
            ch(channels::emit_spontaneous(
                &spin,
                photon(&coh, dim)?,
                inc_label(&inc1)?,
                params,
            )),
            // the incoherent photon reaches either detector with equal probability
            ch(channels::prepare_modes(
                vec![inc_label(&inc2)?],
                ops::projector(2, 0),
            )?),
            ch(channels::mode_mix_balanced(&inc1, &inc2)),
        ];
        let arm = [coh.as_str(), inc1.as_str(), inc2.as_str()];
        steps.extend(loss_steps(&arm, hw.losses.insertion())?);
        steps.extend(loss_steps(&arm, hw.losses.link())?);
        Ok(Step::Branch(steps))
    };
    let steps = vec![
        node("A")?,
        node("B")?,
        ch(channels::mode_mix_balanced("coh_A", "coh_B")),
    ];
    let detectors = vec![
        Detector {
            name: "d1".into(),
            modes: vec!["coh_A".into(), "incoh_A_1".into(), "incoh_B_1".into()],
            kind: hw.detector,
        },
        Detector {
            name: "d2".into(),
            modes: vec!["coh_B".into(), "incoh_A_2".into(), "incoh_B_2".into()],
            kind: hw.detector,
        },
    ];
    Ok(ProtocolSpec {
        name: "A".into(),
        topology: Topology::DetectionInMidpoint,
        encoding: Encoding::Fock,
        input_source: InputSource::SinglePhoton,
        steps,
        herald: HeraldRule {
            detectors,
            accept: vec![
                (vec![true, false], BellState::PsiMinus),
                (vec![false, true], BellState::PsiPlus),
            ],
        },
        spins: ("spin_A".into(), "spin_B".into()),
        target: BellState::PsiMinus,
    })
}

/// Protocol A with emission probabilities derived from the emission device.
pub fn protocol_a(emission: &CoupledSystem, alpha: f64, hw: &Hardware) -> Result<ProtocolSpec> {
    emission.validate()?;
    protocol_a_with(emission_channel_probabilities(emission)?, alpha, hw)
}

/// Early reflection, spin flip, late reflection on one node.
fn node_reflection(
    spin: &str,
    early: &str,
    late: &str,
    coeffs: ReflectionCoefficients,
) -> Vec<Step> {
    let variant = ReflectionVariant::Amplitude(TransmitHandling::Trace);
    vec![
        ch(channels::reflect_conditional(
            spin,
            early,
            coeffs,
            variant.clone(),
        )),
        ch(channels::pauli_x(spin)),
        ch(channels::reflect_conditional(spin, late, coeffs, variant)),
    ]
}

/// Sender-receiver protocol with explicit per-node coefficients.
pub fn protocol_b_with(
    coeffs_a: ReflectionCoefficients,
    coeffs_b: ReflectionCoefficients,
    hw: &Hardware,
) -> Result<ProtocolSpec> {
    hw.losses.validate()?;
    let bins = ["E", "L"];
    let mut steps = vec![
        ch(channels::prepare_state("spin_A", plus(), 1.0)?),
        ch(channels::prepare_state("spin_B", plus(), 1.0)?),
        ch(time_bin_input(
            "E",
            "L",
            InputSource::SinglePhoton,
            hw.fock_dim,
        )?),
    ];
    steps.extend(node_reflection("spin_A", "E", "L", coeffs_a));
    steps.extend(loss_steps(&bins, hw.losses.insertion())?);
    steps.extend(loss_steps(&bins, hw.losses.link())?);
    steps.extend(node_reflection("spin_B", "E", "L", coeffs_b));
    steps.extend(loss_steps(&bins, hw.losses.insertion())?);
    // X-basis time-bin measurement
    steps.push(ch(channels::mode_mix_balanced("E", "L")));
    let detectors = bins
        .iter()
        .map(|b| Detector {
            name: format!("d{b}"),
            modes: vec![b.to_string()],
            kind: hw.detector,
        })
        .collect();
    Ok(ProtocolSpec {
        name: "B".into(),
        topology: Topology::SenderReceiver,
        encoding: Encoding::TimeBin,
        input_source: InputSource::SinglePhoton,
        steps,
        herald: HeraldRule {
            detectors,
            accept: vec![
                (vec![true, false], BellState::PhiMinus),
                (vec![false, true], BellState::PhiPlus),
            ],
        },
        spins: ("spin_A".into(), "spin_B".into()),
        target: BellState::PhiMinus,
    })
}

/// Protocol B on the projector device at the given detunings.
pub fn protocol_b(
    projector: &CoupledSystem,
    delta_la: f64,
    delta_ac: f64,
    hw: &Hardware,
) -> Result<ProtocolSpec> {
    let coeffs = coefficients_at(projector, delta_la, delta_ac)?;
    protocol_b_with(coeffs, coeffs, hw)
}

/// Midpoint two-photon protocol with explicit per-node coefficients.
pub fn protocol_c_with(
    coeffs_a: ReflectionCoefficients,
    coeffs_b: ReflectionCoefficients,
    input: InputSource,
    hw: &Hardware,
) -> Result<ProtocolSpec> {
    hw.losses.validate()?;
    let node = |x: &str, coeffs: ReflectionCoefficients| -> Result<Step> {
        let spin = format!("spin_{x}");
        let (e, l) = (format!("E_{x}"), format!("L_{x}"));
        let mut steps = vec![
            ch(channels::prepare_state(&spin, plus(), 1.0)?),
            ch(time_bin_input(&e, &l, input, hw.fock_dim)?),
        ];
        steps.extend(node_reflection(&spin, &e, &l, coeffs));
        steps.extend(loss_steps(&[&e, &l], hw.losses.insertion())?);
        steps.extend(loss_steps(&[&e, &l], hw.losses.link())?);
        Ok(Step::Branch(steps))
    };
    let steps = vec![
        node("A", coeffs_a)?,
        node("B", coeffs_b)?,
        ch(channels::mode_mix("E_A", "E_B", FRAC_PI_4)),
        ch(channels::mode_mix("L_A", "L_B", FRAC_PI_4)),
    ];
    let modes = ["E_A", "E_B", "L_A", "L_B"];
    let detectors = modes
        .iter()
        .map(|m| Detector {
            name: format!("d{m}"),
            modes: vec![m.to_string()],
            kind: hw.detector,
        })
        .collect();
    // one early and one late detection: same output port heralds Ψ+,
    // different ports Ψ−
    let accept = vec![
        (vec![true, false, true, false], BellState::PsiPlus),
        (vec![true, false, false, true], BellState::PsiMinus),
        (vec![false, true, true, false], BellState::PsiMinus),
        (vec![false, true, false, true], BellState::PsiPlus),
    ];
    Ok(ProtocolSpec {
        name: "C".into(),
        topology: Topology::DetectionInMidpoint,
        encoding: Encoding::TimeBin,
        input_source: input,
        steps,
        herald: HeraldRule { detectors, accept },
        spins: ("spin_A".into(), "spin_B".into()),
        target: BellState::PsiPlus,
    })
}

/// Protocol C on the projector device at the given detunings.
pub fn protocol_c(
    projector: &CoupledSystem,
    delta_la: f64,
    delta_ac: f64,
    input: InputSource,
    hw: &Hardware,
) -> Result<ProtocolSpec> {
    let coeffs = coefficients_at(projector, delta_la, delta_ac)?;
    protocol_c_with(coeffs, coeffs, input, hw)
}

fn cmp_swept(a: &[(String, f64)], b: &[(String, f64)]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.0.cmp(&y.0).then(x.1.total_cmp(&y.1));
        if o != Ordering::Equal {
            return o;
        }
    }
    a.len().cmp(&b.len())
}

/// Tie-break order used by [`pareto`]: success descending, then infidelity
/// ascending, then swept values lexicographically.
pub fn frontier_order(a: &ProtocolOutcome, b: &ProtocolOutcome) -> Ordering {
    b.success_probability
        .total_cmp(&a.success_probability)
        .then(a.infidelity.total_cmp(&b.infidelity))
        .then_with(|| cmp_swept(&a.swept_values, &b.swept_values))
}

/// Non-dominated outcomes (maximal success, minimal infidelity), sorted by
/// increasing success probability. Of exactly coincident points only the
/// first in tie-break order is kept; non-finite rows are ignored.
pub fn pareto(outcomes: &[ProtocolOutcome]) -> Vec<ProtocolOutcome> {
    let mut sorted: Vec<&ProtocolOutcome> = outcomes
        .iter()
        .filter(|o| o.success_probability.is_finite() && o.infidelity.is_finite())
        .collect();
    sorted.sort_by(|a, b| frontier_order(a, b));
    let mut best = f64::INFINITY;
    let mut front = Vec::new();
    for o in sorted {
        if o.infidelity < best {
            best = o.infidelity;
            front.push(o.clone());
        }
    }
    front.reverse();
    front
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(s: f64, i: f64) -> ProtocolOutcome {
        ProtocolOutcome {
            success_probability: s,
            fidelity: 1.0 - i,
            infidelity: i,
            herald_pattern: String::new(),
            swept_values: vec![("x".into(), s)],
        }
    }

    #[test]
    fn pareto_of_single_and_dominated_points() {
        let one = vec![outcome(0.3, 0.1)];
        assert_eq!(pareto(&one), one);
        let two = vec![outcome(0.3, 0.1), outcome(0.2, 0.2)];
        assert_eq!(pareto(&two), vec![outcome(0.3, 0.1)]);
    }

    #[test]
    fn pareto_sorted_by_success() {
        let pts = vec![outcome(0.5, 0.3), outcome(0.1, 0.01), outcome(0.3, 0.1)];
        let f = pareto(&pts);
        let s: Vec<f64> = f.iter().map(|o| o.success_probability).collect();
        assert_eq!(s, vec![0.1, 0.3, 0.5]);
    }

    #[test]
    fn transmission_convention_flips_losses() {
        let l = Losses {
            link_loss: 0.9,
            insertion_loss: 0.5,
            convention: LossConvention::Transmission,
        };
        assert!((l.link() - 0.1).abs() < 1e-15);
        assert!((l.insertion() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn wcs_requires_four_levels() {
        let hw = Hardware {
            fock_dim: 3,
            ..Hardware::lossless(DetectorKind::Click)
        };
        let res = protocol_c_with(
            ideal_projector_coefficients(),
            ideal_projector_coefficients(),
            InputSource::Wcs { alpha: 0.1 },
            &hw,
        );
        assert!(matches!(res, Err(Error::InvalidProtocol(_))));
    }

    #[test]
    fn alpha_range_is_checked() {
        let hw = Hardware::default();
        assert!(protocol_a_with(EmissionChannelParams::ideal(), 1.5, &hw).is_err());
    }
}
