//! Cavity-QED modeling: figures of merit, spin-conditioned scattering
//! amplitudes, beamsplitter synthesis of those amplitudes and the derived
//! parameters of the emission and scattering channels.
//!
//! All rates and frequencies share one unit (GHz, no factor 2π).

mod synthesis;

pub use synthesis::{
    synthesize_three_port, synthesize_two_port, ThreePortSynthesis, TwoPortSynthesis,
};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::channels::{
    EmissionChannelParams, ReflectionCoefficients, Response, ScatterChannelParams,
};
use crate::error::{Error, Result};

/// Slack allowed on the magnitude invariants of scattering amplitudes.
pub const AMPLITUDE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmitterParams {
    pub omega_a: f64,
    /// Radiative decay rate into the zero-phonon line.
    pub gamma_r: f64,
    /// Total decay rate.
    pub gamma: f64,
    pub gamma_star: f64,
    /// Spectral diffusion width; stored but treated as zero in the channel models.
    pub sigma_omega: f64,
    pub debye_waller: f64,
    pub quantum_efficiency: f64,
    /// Splitting between the bright and dark optical transitions.
    pub delta_01: f64,
}

impl EmitterParams {
    /// Total homogeneous linewidth `Γ = γ + γ*`.
    pub fn total_linewidth(&self) -> f64 {
        self.gamma + self.gamma_star
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("omega_a", self.omega_a),
            ("gamma_r", self.gamma_r),
            ("gamma", self.gamma),
            ("gamma_star", self.gamma_star),
            ("sigma_omega", self.sigma_omega),
            ("delta_01", self.delta_01),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::OutOfRange {
                    name,
                    value: v,
                    range: "[0, inf)",
                });
            }
        }
        if self.gamma < self.gamma_r {
            return Err(Error::ParameterInconsistency(format!(
                "total decay rate {} below radiative rate {}",
                self.gamma, self.gamma_r
            )));
        }
        for (name, v) in [
            ("debye_waller", self.debye_waller),
            ("quantum_efficiency", self.quantum_efficiency),
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

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    pub omega_c: f64,
    pub kappa_r: f64,
    pub kappa_t: f64,
    pub kappa_l: f64,
}

impl CavityParams {
    pub fn kappa(&self) -> f64 {
        self.kappa_r + self.kappa_t + self.kappa_l
    }

    pub fn quality_factor(&self) -> f64 {
        self.omega_c / self.kappa()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("omega_c", self.omega_c),
            ("kappa_r", self.kappa_r),
            ("kappa_t", self.kappa_t),
            ("kappa_l", self.kappa_l),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::OutOfRange {
                    name,
                    value: v,
                    range: "[0, inf)",
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoupledSystem {
    pub emitter: EmitterParams,
    pub cavity: CavityParams,
    pub g: f64,
}

/// Probe frequency `ν`; the three detunings follow from the system.
///
/// Detunings are signed as `Δ_lc = ν − ω_c`, `Δ_la = ν − ω_a` and the
/// cavity-emitter detuning `Δ_ac = ω_c − ω_a`, so `Δ_lc = Δ_la − Δ_ac`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub nu: f64,
}

impl OperatingPoint {
    /// Probe at `ν = ω_a + Δ_la`.
    pub fn from_laser_detuning(sys: &CoupledSystem, delta_la: f64) -> Self {
        OperatingPoint {
            nu: sys.emitter.omega_a + delta_la,
        }
    }

    pub fn delta_lc(&self, sys: &CoupledSystem) -> f64 {
        self.nu - sys.cavity.omega_c
    }

    pub fn delta_la(&self, sys: &CoupledSystem) -> f64 {
        self.nu - sys.emitter.omega_a
    }

    pub fn delta_ac(&self, sys: &CoupledSystem) -> f64 {
        sys.cavity.omega_c - sys.emitter.omega_a
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinewidthMode {
    /// Uses the total decay rate `γ`.
    Bare,
    /// Uses `γ + γ*`.
    Dephased,
}

/// Spin levels: `0` is dark (transition detuned by `δ₀₁`), `1` is bright.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpinState {
    Dark = 0,
    Bright = 1,
}

impl CoupledSystem {
    /// Reference spin-photon projector device (critically coupled; `κ` split
    /// evenly between the reflection port and the two other ports).
    pub fn projector_default() -> Self {
        let kappa = 21.8;
        CoupledSystem {
            emitter: EmitterParams {
                omega_a: 406_706.0,
                gamma_r: 0.0131,
                gamma: 0.0925,
                gamma_star: 0.0305,
                sigma_omega: 0.0,
                debye_waller: 0.7,
                quantum_efficiency: 0.2,
                delta_01: 1.0,
            },
            cavity: CavityParams {
                omega_c: 406_706.0,
                kappa_r: kappa / 2.0,
                kappa_t: kappa / 4.0,
                kappa_l: kappa / 4.0,
            },
            g: 8.38,
        }
    }

    /// Reference spin-photon emission device (overcoupled, `κ_r = 240 GHz`,
    /// the 89 GHz of other decay assigned to the loss port).
    pub fn emission_default() -> Self {
        CoupledSystem {
            emitter: EmitterParams {
                gamma: 0.1,
                ..Self::projector_default().emitter
            },
            cavity: CavityParams {
                omega_c: 406_706.0,
                kappa_r: 240.0,
                kappa_t: 0.0,
                kappa_l: 89.0,
            },
            g: 6.81,
        }
    }

    /// Copy with the cavity placed at `ω_c = ω_a + Δ_ac`.
    pub fn with_cavity_detuning(&self, delta_ac: f64) -> Self {
        let mut out = *self;
        out.cavity.omega_c = self.emitter.omega_a + delta_ac;
        out
    }

    /// Copy with all three cavity decay rates scaled by `factor`.
    pub fn with_kappa_scale(&self, factor: f64) -> Self {
        let mut out = *self;
        out.cavity.kappa_r *= factor;
        out.cavity.kappa_t *= factor;
        out.cavity.kappa_l *= factor;
        out
    }

    pub fn validate(&self) -> Result<()> {
        self.emitter.validate()?;
        self.cavity.validate()?;
        if !(self.g.is_finite() && self.g >= 0.0) {
            return Err(Error::OutOfRange {
                name: "g",
                value: self.g,
                range: "[0, inf)",
            });
        }
        Ok(())
    }

    pub fn kappa(&self) -> f64 {
        self.cavity.kappa()
    }
}

fn nonzero(name: &'static str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::OutOfRange {
            name,
            value: v,
            range: "(0, inf)",
        })
    }
}

/// `C = 4g²/(κγ)` or `4g²/(κ(γ+γ*))`.
pub fn cooperativity(sys: &CoupledSystem, mode: LinewidthMode) -> Result<f64> {
    let kappa = nonzero("kappa", sys.kappa())?;
    let width = match mode {
        LinewidthMode::Bare => sys.emitter.gamma,
        LinewidthMode::Dephased => sys.emitter.total_linewidth(),
    };
    let width = nonzero("gamma", width)?;
    Ok(4.0 * sys.g * sys.g / (kappa * width))
}

/// `F_p = 4g²/(κγ_r)`.
pub fn purcell_factor(sys: &CoupledSystem) -> Result<f64> {
    let kappa = nonzero("kappa", sys.kappa())?;
    let gamma_r = nonzero("gamma_r", sys.emitter.gamma_r)?;
    Ok(4.0 * sys.g * sys.g / (kappa * gamma_r))
}

/// `F_p = (3/4π²)(Q/V)(λ/n)³` with the mode volume `V` in units of `λ³`.
pub fn purcell_from_qv(q: f64, volume: f64, refractive_index: f64) -> Result<f64> {
    let v = nonzero("volume", volume)?;
    let n = nonzero("refractive_index", refractive_index)?;
    Ok(3.0 / (4.0 * PI * PI) * (q / v) / n.powi(3))
}

/// `(κ_r/κ)·(κ/(κ+γ))`, the strong-coupling outcoupling efficiency.
pub fn outcoupling_efficiency_strong(sys: &CoupledSystem) -> Result<f64> {
    let kappa = nonzero("kappa", sys.kappa())?;
    Ok(sys.cavity.kappa_r / kappa * (kappa / (kappa + sys.emitter.gamma)))
}

/// Empty-cavity-plus-emitter denominator `D(ν)` for the given spin state.
fn response_denominator(sys: &CoupledSystem, op: &OperatingPoint, spin: SpinState) -> C64 {
    let em = &sys.emitter;
    let omega_tr = match spin {
        SpinState::Bright => em.omega_a,
        SpinState::Dark => em.omega_a + em.delta_01,
    };
    let cavity = C64::new(sys.kappa() / 2.0, sys.cavity.omega_c - op.nu);
    let emitter = C64::new(em.gamma / 2.0 + em.gamma_star, omega_tr - op.nu);
    cavity + sys.g * sys.g / emitter
}

/// Steady-state reflection, transmission and loss amplitudes for one spin state.
pub fn response_coefficients(
    sys: &CoupledSystem,
    op: &OperatingPoint,
    spin: SpinState,
) -> Result<Response> {
    nonzero("kappa", sys.kappa())?;
    let d = response_denominator(sys, op, spin);
    let (kr, kt) = (sys.cavity.kappa_r, sys.cavity.kappa_t);
    let r = 1.0 - kr / d;
    let t = C64::new((kr * kt).sqrt(), 0.0) / d;
    let rest = 1.0 - r.norm_sqr() - t.norm_sqr();
    if rest < -AMPLITUDE_TOLERANCE {
        return Err(Error::CoefficientInvariant(format!(
            "|r|² + |t|² = {} exceeds 1",
            1.0 - rest
        )));
    }
    let l = C64::from_polar(rest.max(0.0).sqrt(), -d.arg());
    Ok(Response { r, t, l })
}

/// Responses for both spin states at one operating point.
pub fn reflection_coefficients(
    sys: &CoupledSystem,
    op: &OperatingPoint,
) -> Result<ReflectionCoefficients> {
    ReflectionCoefficients::new([
        response_coefficients(sys, op, SpinState::Dark)?,
        response_coefficients(sys, op, SpinState::Bright)?,
    ])
}

/// Cavity-modified quantities entering the scattering channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModifiedRates {
    pub purcell: f64,
    /// `Γ′ = Γ + F_p γ_r`.
    pub total_linewidth: f64,
    pub debye_waller: f64,
    pub quantum_efficiency: f64,
}

pub fn modified_rates(sys: &CoupledSystem) -> Result<ModifiedRates> {
    let fp = purcell_factor(sys)?;
    let em = &sys.emitter;
    let dw = em.debye_waller;
    let qe = em.quantum_efficiency;
    Ok(ModifiedRates {
        purcell: fp,
        total_linewidth: em.total_linewidth() + fp * em.gamma_r,
        debye_waller: (fp + 1.0) * dw / (fp * dw + 1.0),
        quantum_efficiency: qe * (fp * dw + 1.0) / (1.0 + fp * qe * dw),
    })
}

/// Per-branch probabilities of the optical π-pulse emission channel.
///
/// The weights refer to the bright branch; the dark branch never emits, so the
/// spin populations enter through the channel's Kraus structure.
pub fn emission_channel_probabilities(sys: &CoupledSystem) -> Result<EmissionChannelParams> {
    let c = cooperativity(sys, LinewidthMode::Dephased)?;
    let fp = purcell_factor(sys)?;
    let em = &sys.emitter;
    let collected = sys.cavity.kappa_r / sys.kappa() * c / (c + 1.0);
    let broadened = em.total_linewidth() + fp * em.gamma_r;
    let p_coh = collected * fp * em.gamma_r / broadened;
    // spectral diffusion is not averaged, so σ_ω does not enter here
    let p_incoh = collected * em.gamma_star / broadened;
    let p_loss = 1.0 - p_coh - p_incoh;
    if p_loss < -AMPLITUDE_TOLERANCE {
        return Err(Error::ParameterInconsistency(format!(
            "emission probabilities exceed one (p_coh = {p_coh}, p_incoh = {p_incoh})"
        )));
    }
    EmissionChannelParams::new(p_coh, p_incoh, 0.0, p_loss.max(0.0))
}

/// Coherent-scattering channel amplitudes for total scattered amplitude `alpha_tot`.
pub fn scattering_channel_amplitudes(
    sys: &CoupledSystem,
    alpha_tot: C64,
) -> Result<ScatterChannelParams> {
    let m = modified_rates(sys)?;
    let eta = sys.cavity.kappa_r / sys.kappa() * m.purcell / (m.purcell + 1.0);
    if eta <= 0.0 && alpha_tot != C64::new(0.0, 0.0) {
        return Err(Error::ParameterInconsistency(
            "zero collection efficiency with nonzero scattering amplitude".into(),
        ));
    }
    let gs = sys.emitter.gamma_star;
    let qd = m.quantum_efficiency * m.debye_waller;
    if qd <= 0.0 {
        return Err(Error::ParameterInconsistency(
            "cavity-modified quantum efficiency times Debye-Waller factor is zero".into(),
        ));
    }
    let beta_sq = (gs / (m.total_linewidth - gs) + (1.0 - qd) / qd) * alpha_tot.norm_sqr();
    ScatterChannelParams::new(alpha_tot * eta, alpha_tot * (1.0 - eta), beta_sq)
}

/// Every derived quantity reported by the `params` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedQuantities {
    pub cooperativity_bare: f64,
    pub cooperativity_dephased: f64,
    pub purcell: f64,
    pub outcoupling_efficiency: f64,
    pub quality_factor: f64,
    pub total_linewidth: f64,
    pub modified_total_linewidth: f64,
    pub modified_debye_waller: f64,
    pub modified_quantum_efficiency: f64,
    pub emission: EmissionChannelParams,
    pub dark: Response,
    pub bright: Response,
}

pub fn derived_quantities(sys: &CoupledSystem, op: &OperatingPoint) -> Result<DerivedQuantities> {
    sys.validate()?;
    let m = modified_rates(sys)?;
    let coeffs = reflection_coefficients(sys, op)?;
    Ok(DerivedQuantities {
        cooperativity_bare: cooperativity(sys, LinewidthMode::Bare)?,
        cooperativity_dephased: cooperativity(sys, LinewidthMode::Dephased)?,
        purcell: m.purcell,
        outcoupling_efficiency: outcoupling_efficiency_strong(sys)?,
        quality_factor: sys.cavity.quality_factor(),
        total_linewidth: sys.emitter.total_linewidth(),
        modified_total_linewidth: m.total_linewidth,
        modified_debye_waller: m.debye_waller,
        modified_quantum_efficiency: m.quantum_efficiency,
        emission: emission_channel_probabilities(sys)?,
        dark: coeffs.get(0),
        bright: coeffs.get(1),
    })
}
