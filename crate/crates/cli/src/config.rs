//! Run configuration: a single JSON document, validated before any work.
//!
//! Rates carry their unit in the field name (`_ghz` or `_mhz`) and are
//! normalized to GHz at parse time.

use std::collections::BTreeMap;
use std::path::Path;

use rebsim::cavity::CoupledSystem;
use rebsim::channels::DetectorKind;
use rebsim::protocols::{self, Hardware, InputSource, LossConvention, Losses, ProtocolSpec};
use rebsim::sweep::{Axis, Scale, SweepGrid};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Names accepted as sweep axes.
pub const AXIS_NAMES: [&str; 6] = [
    "alpha",
    "delta_la_ghz",
    "delta_ac_ghz",
    "wcs_alpha",
    "g_ghz",
    "kappa_scale",
];

const RATE_FIELDS: [&str; 11] = [
    "omega_a",
    "gamma_r",
    "gamma",
    "gamma_star",
    "sigma_omega",
    "delta_01",
    "omega_c",
    "kappa_r",
    "kappa_t",
    "kappa_l",
    "g",
];

const PLAIN_FIELDS: [&str; 2] = ["debye_waller", "quantum_efficiency"];

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub system: SystemConfig,
    pub protocol: ProtocolConfig,
    #[serde(default)]
    pub hardware: HardwareConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Overrides on top of the two shipped device profiles.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default)]
    pub projector: BTreeMap<String, f64>,
    #[serde(default)]
    pub emission: BTreeMap<String, f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolName {
    #[default]
    A,
    B,
    C,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    #[default]
    SinglePhoton,
    Wcs,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub name: ProtocolName,
    /// Bright-state population of the spins (protocol A).
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub delta_la_ghz: Option<f64>,
    #[serde(default)]
    pub delta_ac_ghz: Option<f64>,
    #[serde(default)]
    pub input: InputKind,
    #[serde(default)]
    pub wcs_alpha: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HardwareConfig {
    pub link_loss: f64,
    pub insertion_loss: f64,
    pub loss_convention: LossConvention,
    pub detector: DetectorKind,
    /// Fock truncation of coherent photon modes.
    pub fock_dim: usize,
}

impl Default for HardwareConfig {
    fn default() -> Self {
        let hw = Hardware::default();
        HardwareConfig {
            link_loss: hw.losses.link_loss,
            insertion_loss: hw.losses.insertion_loss,
            loss_convention: hw.losses.convention,
            detector: hw.detector,
            fock_dim: hw.fock_dim,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub axes: Vec<AxisConfig>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default)]
    pub scale: Scale,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub path: Option<String>,
    #[serde(default)]
    pub format: Option<Format>,
    /// Feasibility bound for picking a best point from the frontier.
    #[serde(default)]
    pub max_infidelity: Option<f64>,
}

/// Parsed configuration with everything needed to build protocol instances.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub config: Config,
    pub projector: CoupledSystem,
    pub emission: CoupledSystem,
    pub hardware: Hardware,
    pub grid: SweepGrid,
    pub hash: String,
}

pub fn load(path: &Path) -> Result<Resolved, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<Resolved, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: Config = serde_path_to_error::deserialize(de)
        .map_err(|e| CliError::Config(format!("{}: {}", e.path(), e.inner())))?;
    resolve(config)
}

pub fn resolve(config: Config) -> Result<Resolved, CliError> {
    let projector = apply_overrides(
        CoupledSystem::projector_default(),
        &config.system.projector,
        "system.projector",
    )?;
    let emission = apply_overrides(
        CoupledSystem::emission_default(),
        &config.system.emission,
        "system.emission",
    )?;
    let h = &config.hardware;
    let hardware = Hardware {
        losses: Losses {
            link_loss: h.link_loss,
            insertion_loss: h.insertion_loss,
            convention: h.loss_convention,
        },
        detector: h.detector,
        fock_dim: h.fock_dim,
    };
    for (name, v) in [
        ("hardware.link_loss", h.link_loss),
        ("hardware.insertion_loss", h.insertion_loss),
    ] {
        if !(0.0..=1.0).contains(&v) {
            return Err(CliError::Config(format!("{name}: {v} is outside [0, 1]")));
        }
    }
    if h.fock_dim < 2 {
        return Err(CliError::Config(format!(
            "hardware.fock_dim: {} is below 2",
            h.fock_dim
        )));
    }
    validate_protocol(&config.protocol)?;
    let grid = build_grid(&config)?;
    require_parameters(&config.protocol, &grid)?;
    let canonical = serde_json::to_value(&config).map_err(|e| CliError::Config(e.to_string()))?;
    let hash = hex::encode(Sha256::digest(canonical.to_string().as_bytes()));
    Ok(Resolved {
        config,
        projector,
        emission,
        hardware,
        grid,
        hash,
    })
}

fn apply_overrides(
    mut sys: CoupledSystem,
    values: &BTreeMap<String, f64>,
    path: &str,
) -> Result<CoupledSystem, CliError> {
    for (key, &value) in values {
        let (field, scale) = if let Some(f) = key.strip_suffix("_ghz") {
            (f, 1.0)
        } else if let Some(f) = key.strip_suffix("_mhz") {
            (f, 1e-3)
        } else {
            (key.as_str(), f64::NAN)
        };
        let known_rate = RATE_FIELDS.contains(&field);
        let known_plain = PLAIN_FIELDS.contains(&key.as_str());
        if !(known_rate && scale.is_finite()) && !known_plain {
            let hint = if known_rate {
                " (rates need a _ghz or _mhz suffix)"
            } else {
                ""
            };
            return Err(CliError::Config(format!(
                "{path}.{key}: unknown field{hint}"
            )));
        }
        let v = if known_plain { value } else { value * scale };
        let slot = match if known_plain { key.as_str() } else { field } {
            "omega_a" => &mut sys.emitter.omega_a,
            "gamma_r" => &mut sys.emitter.gamma_r,
            "gamma" => &mut sys.emitter.gamma,
            "gamma_star" => &mut sys.emitter.gamma_star,
            "sigma_omega" => &mut sys.emitter.sigma_omega,
            "delta_01" => &mut sys.emitter.delta_01,
            "omega_c" => &mut sys.cavity.omega_c,
            "kappa_r" => &mut sys.cavity.kappa_r,
            "kappa_t" => &mut sys.cavity.kappa_t,
            "kappa_l" => &mut sys.cavity.kappa_l,
            "g" => &mut sys.g,
            "debye_waller" => &mut sys.emitter.debye_waller,
            _ => &mut sys.emitter.quantum_efficiency,
        };
        *slot = v;
    }
    sys.validate()
        .map_err(|e| CliError::Config(format!("{path}: {e}")))?;
    Ok(sys)
}

fn validate_protocol(p: &ProtocolConfig) -> Result<(), CliError> {
    let bad = |msg: String| Err(CliError::Config(format!("protocol.{msg}")));
    match p.name {
        ProtocolName::A => {
            if p.delta_la_ghz.is_some() || p.delta_ac_ghz.is_some() || p.wcs_alpha.is_some() {
                return bad("name: protocol a takes only `alpha`".into());
            }
            if p.input != InputKind::SinglePhoton {
                return bad("input: protocol a has no photon input".into());
            }
        }
        ProtocolName::B | ProtocolName::C => {
            if p.alpha.is_some() {
                return bad("alpha: only protocol a takes a spin population".into());
            }
            if p.name == ProtocolName::B && p.input != InputKind::SinglePhoton {
                return bad("input: protocol b supports single-photon input only".into());
            }
            if p.input == InputKind::SinglePhoton && p.wcs_alpha.is_some() {
                return bad("wcs_alpha: set input to \"wcs\" to use a coherent input".into());
            }
        }
    }
    if let Some(a) = p.alpha {
        if !(0.0..=1.0).contains(&a) {
            return bad(format!("alpha: {a} is outside [0, 1]"));
        }
    }
    Ok(())
}

/// Every protocol parameter must be fixed in the config or swept.
fn require_parameters(p: &ProtocolConfig, grid: &SweepGrid) -> Result<(), CliError> {
    let swept = |name: &str| grid.axes.iter().any(|a| a.name == name);
    let mut needed: Vec<(&str, Option<f64>)> = match p.name {
        ProtocolName::A => vec![("alpha", p.alpha)],
        _ => vec![
            ("delta_la_ghz", p.delta_la_ghz),
            ("delta_ac_ghz", p.delta_ac_ghz),
        ],
    };
    if p.input == InputKind::Wcs {
        needed.push(("wcs_alpha", p.wcs_alpha));
    }
    for (name, value) in needed {
        if value.is_none() && !swept(name) {
            return Err(CliError::Config(format!(
                "protocol.{name}: required unless swept"
            )));
        }
    }
    Ok(())
}

fn axis_allowed(name: &str, p: &ProtocolConfig) -> bool {
    match name {
        "alpha" => p.name == ProtocolName::A,
        "delta_la_ghz" | "delta_ac_ghz" => p.name != ProtocolName::A,
        "wcs_alpha" => p.input == InputKind::Wcs,
        _ => true,
    }
}

fn build_grid(config: &Config) -> Result<SweepGrid, CliError> {
    let mut axes = Vec::new();
    for (i, a) in config.sweep.axes.iter().enumerate() {
        if !AXIS_NAMES.contains(&a.name.as_str()) {
            return Err(CliError::Config(format!(
                "sweep.axes[{i}].name: unknown axis `{}` (expected one of {})",
                a.name,
                AXIS_NAMES.join(", ")
            )));
        }
        if !axis_allowed(&a.name, &config.protocol) {
            return Err(CliError::Config(format!(
                "sweep.axes[{i}].name: axis `{}` does not apply to this protocol",
                a.name
            )));
        }
        let axis = Axis::new(a.name.clone(), a.min, a.max, a.count, a.scale)
            .map_err(|e| CliError::Config(format!("sweep.axes[{i}]: {e}")))?;
        axes.push(axis);
    }
    SweepGrid::new(axes).map_err(|e| CliError::Config(format!("sweep.axes: {e}")))
}

impl Resolved {
    /// Protocol instance with the fixed parameters overridden by `point`.
    pub fn build(&self, point: &[(String, f64)]) -> rebsim::Result<ProtocolSpec> {
        let p = &self.config.protocol;
        let get = |name: &str, fallback: Option<f64>| {
            point
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, v)| *v)
                .or(fallback)
        };
        let adjust = |mut sys: CoupledSystem| {
            if let Some(g) = get("g_ghz", None) {
                sys.g = g;
            }
            sys.with_kappa_scale(get("kappa_scale", Some(1.0)).unwrap())
        };
        match p.name {
            ProtocolName::A => {
                let alpha = get("alpha", p.alpha).unwrap_or_default();
                protocols::protocol_a(&adjust(self.emission), alpha, &self.hardware)
            }
            ProtocolName::B | ProtocolName::C => {
                let dla = get("delta_la_ghz", p.delta_la_ghz).unwrap_or_default();
                let dac = get("delta_ac_ghz", p.delta_ac_ghz).unwrap_or_default();
                let sys = adjust(self.projector);
                if p.name == ProtocolName::B {
                    return protocols::protocol_b(&sys, dla, dac, &self.hardware);
                }
                let input = match p.input {
                    InputKind::SinglePhoton => InputSource::SinglePhoton,
                    InputKind::Wcs => InputSource::Wcs {
                        alpha: get("wcs_alpha", p.wcs_alpha).unwrap_or_default(),
                    },
                };
                protocols::protocol_c(&sys, dla, dac, input, &self.hardware)
            }
        }
    }
}
