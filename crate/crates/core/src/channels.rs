//! Physical building blocks as quantum channels on named modes.
//!
//! A [`Channel`] names the modes it touches; dimensions are taken from the
//! state it is applied to, so one description serves every truncation.
//! Channels that populate a loss mode trace it out immediately; incoherent
//! photon modes and other outputs are kept until measured.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::cavity::{synthesize_three_port, synthesize_two_port, AMPLITUDE_TOLERANCE};
use crate::error::{Error, Result};
use crate::linear_optics::{dilation_kraus, splitter_kraus};
use crate::ops::{self, CMatrix, ONE, ZERO};
use crate::tensor::{tensor_product, ModeKind, ModeLabel, NamedObject, NamedState};

/// Largest truncated probability mass tolerated when a channel expands a
/// coherent, thermal-like or squeezed state in a finite Fock basis.
pub const LEAKAGE_THRESHOLD: f64 = 1e-3;

/// Dimension of the internal loss ancilla used by coherent scattering.
const MAX_LOSS_ANCILLA_DIM: usize = 64;

fn unit_interval(name: &'static str, v: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(Error::OutOfRange {
            name,
            value: v,
            range: "[0, 1]",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinChannelParams {
    pub f_state: f64,
    pub f1: f64,
    pub f2: f64,
}

impl SpinChannelParams {
    pub fn new(f_state: f64, f1: f64, f2: f64) -> Result<Self> {
        Ok(SpinChannelParams {
            f_state: unit_interval("f_state", f_state)?,
            f1: unit_interval("f1", f1)?,
            f2: unit_interval("f2", f2)?,
        })
    }
}

/// Bright-branch outcome probabilities of the optical π-pulse emission.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmissionChannelParams {
    pub p_coh: f64,
    pub p_incoh: f64,
    pub p_2ph: f64,
    pub p_loss: f64,
}

impl EmissionChannelParams {
    pub fn new(p_coh: f64, p_incoh: f64, p_2ph: f64, p_loss: f64) -> Result<Self> {
        for (name, v) in [
            ("p_coh", p_coh),
            ("p_incoh", p_incoh),
            ("p_2ph", p_2ph),
            ("p_loss", p_loss),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::OutOfRange {
                    name,
                    value: v,
                    range: "[0, 1]",
                });
            }
        }
        let sum = p_coh + p_incoh + p_2ph + p_loss;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::ParameterInconsistency(format!(
                "emission probabilities sum to {sum}"
            )));
        }
        Ok(EmissionChannelParams {
            p_coh,
            p_incoh,
            p_2ph,
            p_loss,
        })
    }

    /// Perfect emitter: every bright-state excitation yields one coherent photon.
    pub fn ideal() -> Self {
        EmissionChannelParams {
            p_coh: 1.0,
            p_incoh: 0.0,
            p_2ph: 0.0,
            p_loss: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatterChannelParams {
    /// Collected coherent amplitude.
    pub alpha: C64,
    /// Amplitude scattered into the loss mode.
    pub alpha_l: C64,
    /// Mean incoherent photon number `|β|²`.
    pub beta_sq: f64,
}

impl ScatterChannelParams {
    pub fn new(alpha: C64, alpha_l: C64, beta_sq: f64) -> Result<Self> {
        if !(beta_sq.is_finite() && beta_sq >= 0.0) {
            return Err(Error::OutOfRange {
                name: "beta_sq",
                value: beta_sq,
                range: "[0, inf)",
            });
        }
        Ok(ScatterChannelParams {
            alpha,
            alpha_l,
            beta_sq,
        })
    }
}

/// Reflection, transmission and loss amplitudes for one spin state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub r: C64,
    pub t: C64,
    pub l: C64,
}

impl Response {
    pub fn norm_sqr(&self) -> f64 {
        self.r.norm_sqr() + self.t.norm_sqr() + self.l.norm_sqr()
    }

    /// Perfect reflection with unit amplitude.
    pub fn mirror() -> Self {
        Response {
            r: ONE,
            t: ZERO,
            l: ZERO,
        }
    }

    /// Everything routed to the loss port.
    pub fn absorber() -> Self {
        Response {
            r: ZERO,
            t: ZERO,
            l: ONE,
        }
    }
}

/// Per-spin-state responses, indexed by spin level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReflectionCoefficients([Response; 2]);

impl ReflectionCoefficients {
    pub fn new(per_spin: [Response; 2]) -> Result<Self> {
        for (k, resp) in per_spin.iter().enumerate() {
            let n = resp.norm_sqr();
            if (n - 1.0).abs() > AMPLITUDE_TOLERANCE {
                return Err(Error::CoefficientInvariant(format!(
                    "|r|² + |t|² + |l|² = {n} for spin state {k}"
                )));
            }
        }
        Ok(ReflectionCoefficients(per_spin))
    }

    pub fn get(&self, spin: usize) -> Response {
        self.0[spin]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    /// Threshold detector, projector `I − |0⟩⟨0|`.
    Click,
    /// Number-resolving detector accepting exactly one photon, `|1⟩⟨1|`.
    SinglePhoton,
}

impl DetectorKind {
    /// Whether a total photon count `n` registers as a detection event.
    pub fn fires(self, n: usize) -> bool {
        match self {
            DetectorKind::Click => n > 0,
            DetectorKind::SinglePhoton => n == 1,
        }
    }
}

/// What happens to the transmitted output of an amplitude reflection.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransmitHandling {
    /// Transmitted light is discarded together with the loss port.
    Trace,
    /// Transmitted light is routed into an existing named mode.
    Retain(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReflectionVariant {
    /// Phase reflection: transmission is lumped into the loss amplitude.
    Phase,
    /// Reflect/transmit/loss routing through the three-port network.
    Amplitude(TransmitHandling),
}

/// A completely positive, trace-non-increasing map on named modes.
#[derive(Clone, Debug)]
pub enum Channel {
    /// Replaces (or adds) a qubit mode with `F|ψ⟩⟨ψ| + (1−F)|ψ⊥⟩⟨ψ⊥|`.
    PrepareState {
        spin: String,
        psi: [C64; 2],
        fidelity: f64,
    },
    /// Adds fresh modes in the given joint state (which must be a valid density matrix).
    PrepareModes {
        labels: Vec<ModeLabel>,
        rho: CMatrix,
    },
    Depolarize1 {
        spin: String,
        fidelity: f64,
    },
    Depolarize2 {
        spins: (String, String),
        fidelity: f64,
    },
    /// Unitary (or any single Kraus operator) on named modes.
    Operator {
        modes: Vec<String>,
        matrix: CMatrix,
    },
    PhotonicLoss {
        mode: String,
        loss: f64,
    },
    ModeMix {
        a: String,
        b: String,
        theta: f64,
    },
    /// Projects the named modes on the detector outcome and traces them out.
    /// Photon counts of all named modes are summed, as for one detector
    /// collecting several modes.
    Detect {
        modes: Vec<String>,
        kind: DetectorKind,
        fired: bool,
    },
    SpdcPair {
        zeta: C64,
        modes: [ModeLabel; 4],
    },
    EmitSpontaneous {
        spin: String,
        photon: ModeLabel,
        incoh: ModeLabel,
        params: EmissionChannelParams,
    },
    ScatterCoherent {
        spin: String,
        photon: ModeLabel,
        incoh: ModeLabel,
        params: ScatterChannelParams,
    },
    ReflectConditional {
        spin: String,
        photon: String,
        coeffs: ReflectionCoefficients,
        variant: ReflectionVariant,
    },
    Trace(Vec<String>),
    Sequence(Vec<Channel>),
}

pub fn prepare_state(spin: &str, psi: [C64; 2], fidelity: f64) -> Result<Channel> {
    unit_interval("f_state", fidelity)?;
    let norm = psi[0].norm_sqr() + psi[1].norm_sqr();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidState(format!("qubit state has norm² {norm}")));
    }
    Ok(Channel::PrepareState {
        spin: spin.to_string(),
        psi,
        fidelity,
    })
}

pub fn prepare_modes(labels: Vec<ModeLabel>, rho: CMatrix) -> Result<Channel> {
    NamedState::new(rho.clone(), labels.clone())?;
    Ok(Channel::PrepareModes { labels, rho })
}

pub fn depolarize_one(spin: &str, fidelity: f64) -> Result<Channel> {
    unit_interval("f1", fidelity)?;
    Ok(Channel::Depolarize1 {
        spin: spin.to_string(),
        fidelity,
    })
}

pub fn depolarize_two(spins: (&str, &str), fidelity: f64) -> Result<Channel> {
    unit_interval("f2", fidelity)?;
    Ok(Channel::Depolarize2 {
        spins: (spins.0.to_string(), spins.1.to_string()),
        fidelity,
    })
}

pub fn unitary(modes: &[&str], matrix: CMatrix) -> Channel {
    Channel::Operator {
        modes: modes.iter().map(|m| m.to_string()).collect(),
        matrix,
    }
}

pub fn pauli_x(spin: &str) -> Channel {
    unitary(&[spin], ops::pauli_x())
}

pub fn photonic_loss(mode: &str, loss: f64) -> Result<Channel> {
    unit_interval("loss", loss)?;
    Ok(Channel::PhotonicLoss {
        mode: mode.to_string(),
        loss,
    })
}

pub fn mode_mix(a: &str, b: &str, theta: f64) -> Channel {
    Channel::ModeMix {
        a: a.to_string(),
        b: b.to_string(),
        theta,
    }
}

/// Balanced mode mixing at `θ = π/4`.
pub fn mode_mix_balanced(a: &str, b: &str) -> Channel {
    mode_mix(a, b, std::f64::consts::FRAC_PI_4)
}

/// Detection event on one mode.
pub fn detect(mode: &str, kind: DetectorKind) -> Channel {
    Channel::Detect {
        modes: vec![mode.to_string()],
        kind,
        fired: true,
    }
}

/// Detector outcome on a group of modes that land on the same detector.
pub fn detect_modes(modes: &[&str], kind: DetectorKind, fired: bool) -> Channel {
    Channel::Detect {
        modes: modes.iter().map(|m| m.to_string()).collect(),
        kind,
        fired,
    }
}

/// Pair source on modes `(a_H, a_V, b_H, b_V)` with photon dimension `dim`.
pub fn spdc_pair(zeta: C64, names: [&str; 4], dim: usize) -> Result<Channel> {
    let mk = |n: &str| ModeLabel::photon(n, dim);
    Ok(Channel::SpdcPair {
        zeta,
        modes: [mk(names[0])?, mk(names[1])?, mk(names[2])?, mk(names[3])?],
    })
}

pub fn emit_spontaneous(
    spin: &str,
    photon: ModeLabel,
    incoh: ModeLabel,
    params: EmissionChannelParams,
) -> Channel {
    Channel::EmitSpontaneous {
        spin: spin.to_string(),
        photon,
        incoh: incoh.with_kind(ModeKind::IncoherentPhoton),
        params,
    }
}

pub fn scatter_coherent(
    spin: &str,
    photon: ModeLabel,
    incoh: ModeLabel,
    params: ScatterChannelParams,
) -> Channel {
    Channel::ScatterCoherent {
        spin: spin.to_string(),
        photon,
        incoh: incoh.with_kind(ModeKind::IncoherentPhoton),
        params,
    }
}

pub fn reflect_conditional(
    spin: &str,
    photon: &str,
    coeffs: ReflectionCoefficients,
    variant: ReflectionVariant,
) -> Channel {
    Channel::ReflectConditional {
        spin: spin.to_string(),
        photon: photon.to_string(),
        coeffs,
        variant,
    }
}

pub fn trace_out(modes: &[&str]) -> Channel {
    Channel::Trace(modes.iter().map(|m| m.to_string()).collect())
}

fn label_of<'a>(state: &'a NamedState, name: &str) -> Result<&'a ModeLabel> {
    state
        .label(name)
        .ok_or_else(|| Error::UnknownMode(name.to_string()))
}

fn qubit_label(state: &NamedState, name: &str) -> Result<ModeLabel> {
    let l = label_of(state, name)?;
    if l.dim() != 2 {
        return Err(Error::DimensionMismatch {
            name: name.to_string(),
            expected: 2,
            found: l.dim(),
        });
    }
    Ok(l.clone())
}

/// Attaches `label` in vacuum, or checks an existing mode is empty.
fn ensure_vacuum(state: NamedState, label: &ModeLabel) -> Result<NamedState> {
    match state.label(label.name()) {
        None => tensor_product(&state, &NamedState::vacuum(vec![label.clone()])?),
        Some(existing) => {
            if existing.dim() != label.dim() {
                return Err(Error::DimensionMismatch {
                    name: label.name().to_string(),
                    expected: existing.dim(),
                    found: label.dim(),
                });
            }
            let tr = state.trace();
            if tr > 0.0 && state.excited_population(label.name())? > 1e-12 * tr.max(1.0) {
                return Err(Error::NonVacuumMode(label.name().to_string()));
            }
            Ok(state)
        }
    }
}

/// Spin-conditioned operator `Σ_k |k⟩⟨k| ⊗ A_k`.
fn controlled(per_spin: [&CMatrix; 2]) -> CMatrix {
    ops::projector(2, 0).kronecker(per_spin[0]) + ops::projector(2, 1).kronecker(per_spin[1])
}

fn orthogonal(psi: [C64; 2]) -> [C64; 2] {
    [-psi[1].conj(), psi[0].conj()]
}

fn pure(psi: [C64; 2]) -> CMatrix {
    CMatrix::from_fn(2, 2, |i, j| psi[i] * psi[j].conj())
}

fn truncation_guard(mode: &str, leakage: f64) -> Result<()> {
    if leakage > LEAKAGE_THRESHOLD {
        return Err(Error::TruncationLeakage {
            mode: mode.to_string(),
            leakage,
            threshold: LEAKAGE_THRESHOLD,
        });
    }
    Ok(())
}

impl Channel {
    /// Whether the channel preserves trace (everything except detection).
    pub fn is_trace_preserving(&self) -> bool {
        match self {
            Channel::Detect { .. } => false,
            Channel::Operator { matrix, .. } => ops::unitarity_error(matrix) < 1e-10,
            Channel::Sequence(parts) => parts.iter().all(Channel::is_trace_preserving),
            _ => true,
        }
    }

    /// Same channel with every mode name passed through `f`.
    pub fn map_names(&self, f: &dyn Fn(&str) -> String) -> Channel {
        let relabel = |l: &ModeLabel| l.renamed(f(l.name()));
        let all = |v: &[String]| v.iter().map(|m| f(m)).collect::<Vec<_>>();
        match self {
            Channel::PrepareState {
                spin,
                psi,
                fidelity,
            } => Channel::PrepareState {
                spin: f(spin),
                psi: *psi,
                fidelity: *fidelity,
            },
            Channel::PrepareModes { labels, rho } => Channel::PrepareModes {
                labels: labels.iter().map(relabel).collect(),
                rho: rho.clone(),
            },
            Channel::Depolarize1 { spin, fidelity } => Channel::Depolarize1 {
                spin: f(spin),
                fidelity: *fidelity,
            },
            Channel::Depolarize2 { spins, fidelity } => Channel::Depolarize2 {
                spins: (f(&spins.0), f(&spins.1)),
                fidelity: *fidelity,
            },
            Channel::Operator { modes, matrix } => Channel::Operator {
                modes: all(modes),
                matrix: matrix.clone(),
            },
            Channel::PhotonicLoss { mode, loss } => Channel::PhotonicLoss {
                mode: f(mode),
                loss: *loss,
            },
            Channel::ModeMix { a, b, theta } => Channel::ModeMix {
                a: f(a),
                b: f(b),
                theta: *theta,
            },
            Channel::Detect { modes, kind, fired } => Channel::Detect {
                modes: all(modes),
                kind: *kind,
                fired: *fired,
            },
            Channel::SpdcPair { zeta, modes } => Channel::SpdcPair {
                zeta: *zeta,
                modes: [
                    relabel(&modes[0]),
                    relabel(&modes[1]),
                    relabel(&modes[2]),
                    relabel(&modes[3]),
                ],
            },
            Channel::EmitSpontaneous {
                spin,
                photon,
                incoh,
                params,
            } => Channel::EmitSpontaneous {
                spin: f(spin),
                photon: relabel(photon),
                incoh: relabel(incoh),
                params: *params,
            },
            Channel::ScatterCoherent {
                spin,
                photon,
                incoh,
                params,
            } => Channel::ScatterCoherent {
                spin: f(spin),
                photon: relabel(photon),
                incoh: relabel(incoh),
                params: *params,
            },
            Channel::ReflectConditional {
                spin,
                photon,
                coeffs,
                variant,
            } => Channel::ReflectConditional {
                spin: f(spin),
                photon: f(photon),
                coeffs: *coeffs,
                variant: match variant {
                    ReflectionVariant::Amplitude(TransmitHandling::Retain(t)) => {
                        ReflectionVariant::Amplitude(TransmitHandling::Retain(f(t)))
                    }
                    other => other.clone(),
                },
            },
            Channel::Trace(modes) => Channel::Trace(all(modes)),
            Channel::Sequence(parts) => {
                Channel::Sequence(parts.iter().map(|p| p.map_names(f)).collect())
            }
        }
    }

    pub fn then(self, next: Channel) -> Channel {
        match self {
            Channel::Sequence(mut parts) => {
                parts.push(next);
                Channel::Sequence(parts)
            }
            first => Channel::Sequence(vec![first, next]),
        }
    }

    pub fn apply(&self, state: &NamedState) -> Result<NamedState> {
        match self {
            Channel::PrepareState {
                spin,
                psi,
                fidelity,
            } => {
                let rho = pure(*psi) * C64::new(*fidelity, 0.0)
                    + pure(orthogonal(*psi)) * C64::new(1.0 - fidelity, 0.0);
                let base = match state.label(spin) {
                    Some(_) => {
                        qubit_label(state, spin)?;
                        state.partial_trace(&[spin.as_str()])?
                    }
                    None => state.clone(),
                };
                tensor_product(
                    &base,
                    &NamedState::new(rho, vec![ModeLabel::spin(spin.as_str())])?,
                )
            }
            Channel::PrepareModes { labels, rho } => {
                tensor_product(state, &NamedState::new(rho.clone(), labels.clone())?)
            }
            Channel::Depolarize1 { spin, fidelity } => {
                let label = qubit_label(state, spin)?;
                let w = ((1.0 - fidelity) / 3.0).sqrt();
                let kraus = vec![
                    ops::identity(2) * C64::new(fidelity.sqrt(), 0.0),
                    ops::pauli_x() * C64::new(w, 0.0),
                    ops::pauli_y() * C64::new(w, 0.0),
                    ops::pauli_z() * C64::new(w, 0.0),
                ];
                state.apply_kraus(&[label], &kraus)
            }
            Channel::Depolarize2 { spins, fidelity } => {
                let la = qubit_label(state, &spins.0)?;
                let lb = qubit_label(state, &spins.1)?;
                let paulis = [
                    ops::identity(2),
                    ops::pauli_x(),
                    ops::pauli_y(),
                    ops::pauli_z(),
                ];
                let w = ((1.0 - fidelity) / 15.0).sqrt();
                let mut kraus = Vec::with_capacity(16);
                for (i, p) in paulis.iter().enumerate() {
                    for (j, q) in paulis.iter().enumerate() {
                        let weight = if i == 0 && j == 0 { fidelity.sqrt() } else { w };
                        kraus.push(p.kronecker(q) * C64::new(weight, 0.0));
                    }
                }
                state.apply_kraus(&[la, lb], &kraus)
            }
            Channel::Operator { modes, matrix } => {
                let labels: Vec<ModeLabel> = modes
                    .iter()
                    .map(|m| label_of(state, m).cloned())
                    .collect::<Result<_>>()?;
                state.apply_kraus(&labels, std::slice::from_ref(matrix))
            }
            Channel::PhotonicLoss { mode, loss } => {
                let label = label_of(state, mode)?.clone();
                let keep = C64::new((1.0 - loss).sqrt(), 0.0);
                let lost = C64::new(loss.sqrt(), 0.0);
                let kraus = splitter_kraus(label.dim(), keep, &[lost]);
                state.apply_kraus(&[label], &kraus)
            }
            Channel::ModeMix { a, b, theta } => {
                let la = label_of(state, a)?.clone();
                let lb = label_of(state, b)?.clone();
                if la.dim() != lb.dim() {
                    return Err(Error::DimensionMismatch {
                        name: b.clone(),
                        expected: la.dim(),
                        found: lb.dim(),
                    });
                }
                let u = ops::beamsplitter(la.dim(), lb.dim(), *theta);
                state.apply_kraus(&[la, lb], &[u])
            }
            Channel::Detect { modes, kind, fired } => {
                let names: Vec<&str> = modes.iter().map(String::as_str).collect();
                let kind = *kind;
                let fired = *fired;
                state.project_and_trace(&names, |levels| {
                    let n: usize = levels.iter().sum();
                    if fired {
                        kind.fires(n)
                    } else {
                        n == 0
                    }
                })
            }
            Channel::SpdcPair { zeta, modes } => {
                let dim = modes[0].dim();
                if modes.iter().any(|m| m.dim() != dim) {
                    return Err(Error::InvalidState(
                        "pair-source modes need equal truncation".into(),
                    ));
                }
                let r = zeta.norm();
                let lambda = C64::from_polar(r.tanh(), zeta.arg());
                let c: Vec<C64> = (0..dim).map(|n| lambda.powu(n as u32) / r.cosh()).collect();
                let kept: f64 = c.iter().map(|x| x.norm_sqr()).sum::<f64>().powi(2);
                truncation_guard(modes[0].name(), 1.0 - kept)?;
                // product of two two-mode squeezed vacua on (a_H, b_V) and (a_V, b_H)
                let d4 = dim.pow(4);
                let mut ket = vec![ZERO; d4];
                for n in 0..dim {
                    for m in 0..dim {
                        let idx = ((n * dim + m) * dim + m) * dim + n;
                        ket[idx] = c[n] * c[m];
                    }
                }
                let norm = kept.sqrt();
                for v in ket.iter_mut() {
                    *v /= norm;
                }
                let pair = NamedState::from_ket(&ket, modes.to_vec())?;
                tensor_product(state, &pair)
            }
            Channel::EmitSpontaneous {
                spin,
                photon,
                incoh,
                params,
            } => {
                let sl = qubit_label(state, spin)?;
                if params.p_2ph > 0.0 && photon.dim() < 3 {
                    return Err(Error::InvalidDimension {
                        name: photon.name().to_string(),
                        dim: photon.dim(),
                    });
                }
                let st = ensure_vacuum(state.clone(), photon)?;
                let st = ensure_vacuum(st, incoh)?;
                let (dp, di) = (photon.dim(), incoh.dim());
                let id_p = ops::identity(dp);
                let id_i = ops::identity(di);
                let p0 = ops::projector(2, 0);
                let p1 = ops::projector(2, 1);
                let sq = |p: f64| C64::new(p.sqrt(), 0.0);
                let mut kraus = vec![
                    ops::kron_all([&p0, &id_p, &id_i])
                        + ops::kron_all([&p1, &ops::create(dp), &id_i]) * sq(params.p_coh),
                ];
                if params.p_loss > 0.0 {
                    kraus.push(ops::kron_all([&p1, &id_p, &id_i]) * sq(params.p_loss));
                }
                if params.p_incoh > 0.0 {
                    kraus.push(ops::kron_all([&p1, &id_p, &ops::create(di)]) * sq(params.p_incoh));
                }
                if params.p_2ph > 0.0 {
                    let two = ops::create(dp)
                        * ops::create(dp)
                        * C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                    kraus.push(ops::kron_all([&p1, &two, &id_i]) * sq(params.p_2ph));
                }
                st.apply_kraus(&[sl, photon.clone(), incoh.clone()], &kraus)
            }
            Channel::ScatterCoherent {
                spin,
                photon,
                incoh,
                params,
            } => {
                let sl = qubit_label(state, spin)?;
                let st = ensure_vacuum(state.clone(), photon)?;
                let st = ensure_vacuum(st, incoh)?;
                let (dp, di) = (photon.dim(), incoh.dim());
                let (_, photon_leak) = ops::coherent_amplitudes(dp, params.alpha);
                truncation_guard(photon.name(), photon_leak)?;
                let (mut poisson, incoh_leak) = ops::poisson_weights(di, params.beta_sq);
                truncation_guard(incoh.name(), incoh_leak)?;
                // renormalize the truncated distribution so the channel stays trace preserving
                let kept: f64 = poisson.iter().sum();
                poisson.iter_mut().for_each(|p| *p /= kept);
                let mut loss_dim = 2;
                let loss_amps = loop {
                    let (amps, leak) = ops::coherent_amplitudes(loss_dim, params.alpha_l);
                    if leak < 1e-14 || loss_dim >= MAX_LOSS_ANCILLA_DIM {
                        truncation_guard("loss ancilla", leak)?;
                        break amps;
                    }
                    loss_dim *= 2;
                };
                let disp = ops::displacement(dp, params.alpha);
                let p0 = ops::projector(2, 0);
                let p1 = ops::projector(2, 1);
                let id_p = ops::identity(dp);
                let id_i = ops::identity(di);
                let mut kraus = Vec::new();
                let mut incoh_pow = ops::identity(di);
                for (k, pk) in poisson.iter().enumerate() {
                    if k > 0 {
                        incoh_pow =
                            ops::create(di) * incoh_pow * C64::new(1.0 / (k as f64).sqrt(), 0.0);
                    }
                    let w = C64::new(pk.sqrt(), 0.0);
                    let bright = ops::kron_all([&p1, &disp, &incoh_pow]);
                    for (j, aj) in loss_amps.iter().enumerate() {
                        let mut op = &bright * (*aj * w);
                        if j == 0 {
                            op += ops::kron_all([&p0, &id_p, &id_i]) * w;
                        }
                        kraus.push(op);
                    }
                }
                st.apply_kraus(&[sl, photon.clone(), incoh.clone()], &kraus)
            }
            Channel::ReflectConditional {
                spin,
                photon,
                coeffs,
                variant,
            } => {
                let sl = qubit_label(state, spin)?;
                let pl = label_of(state, photon)?.clone();
                let d = pl.dim();
                match variant {
                    ReflectionVariant::Phase => {
                        let mut per_spin = Vec::with_capacity(2);
                        for k in 0..2 {
                            let c = coeffs.get(k);
                            let lumped =
                                C64::from_polar((1.0 - c.r.norm_sqr()).max(0.0).sqrt(), c.l.arg());
                            let (r, l) = synthesize_two_port(c.r, lumped)?.amplitudes();
                            per_spin.push(splitter_kraus(d, r, &[l]));
                        }
                        let kraus = combine_controlled(&per_spin[0], &per_spin[1]);
                        state.apply_kraus(&[sl, pl], &kraus)
                    }
                    ReflectionVariant::Amplitude(TransmitHandling::Trace) => {
                        let mut per_spin = Vec::with_capacity(2);
                        for k in 0..2 {
                            let c = coeffs.get(k);
                            let (r, t, l) = synthesize_three_port(c.r, c.t, c.l)?.amplitudes();
                            per_spin.push(splitter_kraus(d, r, &[t, l]));
                        }
                        let kraus = combine_controlled(&per_spin[0], &per_spin[1]);
                        state.apply_kraus(&[sl, pl], &kraus)
                    }
                    ReflectionVariant::Amplitude(TransmitHandling::Retain(tname)) => {
                        let tl = label_of(state, tname)?.clone();
                        let anc = d + tl.dim() - 1;
                        let mut per_spin = Vec::with_capacity(2);
                        for k in 0..2 {
                            let c = coeffs.get(k);
                            let u = synthesize_three_port(c.r, c.t, c.l)?.fock_unitary([
                                d,
                                tl.dim(),
                                anc,
                            ]);
                            per_spin.push(dilation_kraus(&u, d * tl.dim(), anc));
                        }
                        let kraus = combine_controlled(&per_spin[0], &per_spin[1]);
                        state.apply_kraus(&[sl, pl, tl], &kraus)
                    }
                }
            }
            Channel::Trace(modes) => {
                let names: Vec<&str> = modes.iter().map(String::as_str).collect();
                state.partial_trace(&names)
            }
            Channel::Sequence(parts) => {
                let mut st = state.clone();
                for p in parts {
                    st = p.apply(&st)?;
                }
                Ok(st)
            }
        }
    }
}

/// Pairs up Kraus lists of the two spin branches term by term.
fn combine_controlled(dark: &[CMatrix], bright: &[CMatrix]) -> Vec<CMatrix> {
    dark.iter()
        .zip(bright)
        .filter(|(a, b)| a.iter().chain(b.iter()).any(|v| *v != ZERO))
        .map(|(a, b)| controlled([a, b]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::NamedObject;
    use std::f64::consts::FRAC_1_SQRT_2 as H;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn spin_state(psi: [C64; 2]) -> NamedState {
        NamedState::from_ket(&psi, vec![ModeLabel::spin("s")]).unwrap()
    }

    #[test]
    fn prepare_with_unit_fidelity_is_exact() {
        let ch = prepare_state("s", [c(H), c(H)], 1.0).unwrap();
        let out = ch.apply(&NamedState::empty()).unwrap();
        assert!((out.matrix() - pure([c(H), c(H)])).norm() < 1e-15);
    }

    #[test]
    fn prepare_half_fidelity_is_maximally_mixed() {
        let psi = [C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let out = prepare_state("s", psi, 0.5)
            .unwrap()
            .apply(&NamedState::empty())
            .unwrap();
        assert!((out.matrix() - CMatrix::identity(2, 2) * c(0.5)).norm() < 1e-15);
    }

    #[test]
    fn prepare_rejects_bad_input() {
        assert!(prepare_state("s", [c(1.0), c(0.0)], 1.1).is_err());
        assert!(prepare_state("s", [c(1.0), c(1.0)], 1.0).is_err());
    }

    #[test]
    fn prepare_replaces_existing_spin() {
        let st = NamedState::basis(vec![ModeLabel::spin("s")], &[1]).unwrap();
        let out = prepare_state("s", [c(1.0), c(0.0)], 0.9)
            .unwrap()
            .apply(&st)
            .unwrap();
        assert_eq!(out.names(), vec!["s"]);
        assert!((out.matrix()[(0, 0)].re - 0.9).abs() < 1e-15);
    }

    #[test]
    fn loss_extremes() {
        let label = ModeLabel::photon("p", 3).unwrap();
        let one = NamedState::basis(vec![label], &[1]).unwrap();
        let same = photonic_loss("p", 0.0).unwrap().apply(&one).unwrap();
        assert!((same.matrix() - one.matrix()).norm() < 1e-15);
        let gone = photonic_loss("p", 1.0).unwrap().apply(&one).unwrap();
        assert!((gone.matrix()[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!(photonic_loss("p", 1.5).is_err());
    }

    #[test]
    fn emission_leaves_dark_spin_untouched() {
        let st = NamedState::basis(vec![ModeLabel::spin("s")], &[0]).unwrap();
        let params = EmissionChannelParams::new(0.3, 0.2, 0.0, 0.5).unwrap();
        let ch = emit_spontaneous(
            "s",
            ModeLabel::photon("p", 3).unwrap(),
            ModeLabel::photon("i", 2).unwrap(),
            params,
        );
        let out = ch.apply(&st).unwrap();
        let expect = NamedState::basis(out.labels().to_vec(), &[0, 0, 0]).unwrap();
        assert!((out.matrix() - expect.matrix()).norm() < 1e-15);
    }

    #[test]
    fn emission_requires_vacuum_target() {
        let p = ModeLabel::photon("p", 3).unwrap();
        let st = NamedState::basis(vec![ModeLabel::spin("s"), p.clone()], &[1, 1]).unwrap();
        let ch = emit_spontaneous(
            "s",
            p,
            ModeLabel::photon("i", 2).unwrap(),
            EmissionChannelParams::ideal(),
        );
        assert!(matches!(ch.apply(&st), Err(Error::NonVacuumMode(_))));
    }

    #[test]
    fn emission_params_must_be_normalized() {
        assert!(EmissionChannelParams::new(0.5, 0.1, 0.0, 0.1).is_err());
        assert!(EmissionChannelParams::new(1.1, -0.1, 0.0, 0.0).is_err());
    }

    #[test]
    fn two_photon_emission_needs_three_levels() {
        let st = spin_state([c(0.0), c(1.0)]);
        let params = EmissionChannelParams::new(0.5, 0.0, 0.5, 0.0).unwrap();
        let ch = emit_spontaneous(
            "s",
            ModeLabel::photon("p", 2).unwrap(),
            ModeLabel::photon("i", 2).unwrap(),
            params,
        );
        assert!(matches!(ch.apply(&st), Err(Error::InvalidDimension { .. })));
    }

    #[test]
    fn scatter_leakage_guard_trips() {
        let st = spin_state([c(0.0), c(1.0)]);
        let params = ScatterChannelParams::new(c(2.0), c(0.0), 0.0).unwrap();
        let ch = scatter_coherent(
            "s",
            ModeLabel::photon("p", 3).unwrap(),
            ModeLabel::photon("i", 2).unwrap(),
            params,
        );
        assert!(matches!(
            ch.apply(&st),
            Err(Error::TruncationLeakage { .. })
        ));
    }

    #[test]
    fn spdc_zero_squeezing_is_vacuum() {
        let ch = spdc_pair(c(0.0), ["aH", "aV", "bH", "bV"], 3).unwrap();
        let out = ch.apply(&NamedState::empty()).unwrap();
        assert!((out.matrix()[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!((out.trace() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mirror_reflection_is_identity() {
        let coeffs = ReflectionCoefficients::new([Response::mirror(), Response::mirror()]).unwrap();
        let st = tensor_product(
            &spin_state([c(H), c(H)]),
            &NamedState::basis(vec![ModeLabel::photon("p", 3).unwrap()], &[1]).unwrap(),
        )
        .unwrap();
        for variant in [
            ReflectionVariant::Phase,
            ReflectionVariant::Amplitude(TransmitHandling::Trace),
        ] {
            let out = reflect_conditional("s", "p", coeffs, variant)
                .apply(&st)
                .unwrap();
            assert!((out.matrix() - st.matrix()).norm() < 1e-12);
        }
    }

    #[test]
    fn coefficient_invariant_is_checked() {
        let bad = Response {
            r: c(0.9),
            t: c(0.9),
            l: c(0.0),
        };
        assert!(ReflectionCoefficients::new([bad, Response::mirror()]).is_err());
    }

    #[test]
    fn retained_transmission_requires_declared_mode() {
        let coeffs =
            ReflectionCoefficients::new([Response::mirror(), Response::absorber()]).unwrap();
        let st = tensor_product(
            &spin_state([c(H), c(H)]),
            &NamedState::basis(vec![ModeLabel::photon("p", 2).unwrap()], &[1]).unwrap(),
        )
        .unwrap();
        let ch = reflect_conditional(
            "s",
            "p",
            coeffs,
            ReflectionVariant::Amplitude(TransmitHandling::Retain("t".into())),
        );
        assert!(matches!(ch.apply(&st), Err(Error::UnknownMode(_))));
    }
}
