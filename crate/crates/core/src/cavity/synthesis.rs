//! Beamsplitter networks reproducing given scattering amplitudes.
//!
//! Beamsplitters follow `exp[θ(a†b − a b†)]`, which sends a photon in port
//! `a` to `cos θ` on `a` and `−sin θ` on `b`. Port order is
//! (reflect, loss) for two ports and (reflect, transmit, loss) for three.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::AMPLITUDE_TOLERANCE;
use crate::error::{Error, Result};
use crate::linear_optics::{beamsplitter_single_photon, lift_passive, phase_single_photon};
use crate::ops::CMatrix;
use std::f64::consts::PI;

/// One beamsplitter followed by output phases on the reflect and loss ports.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoPortSynthesis {
    pub theta: f64,
    pub phase_reflect: f64,
    pub phase_loss: f64,
}

impl TwoPortSynthesis {
    /// 2x2 single-photon transfer matrix.
    pub fn single_photon_matrix(&self) -> CMatrix {
        phase_single_photon(2, 0, self.phase_reflect)
            * phase_single_photon(2, 1, self.phase_loss)
            * beamsplitter_single_photon(2, 0, 1, self.theta)
    }

    /// Amplitudes `(r, l)` for a photon entering the reflect port.
    pub fn amplitudes(&self) -> (C64, C64) {
        let m = self.single_photon_matrix();
        (m[(0, 0)], m[(1, 0)])
    }

    /// Operator on the truncated Fock space of (reflect, loss).
    pub fn fock_unitary(&self, dim_reflect: usize, dim_loss: usize) -> CMatrix {
        lift_passive(&self.single_photon_matrix(), &[dim_reflect, dim_loss])
    }
}

/// Two-port network for reflection `r` and loss amplitude `l` (`L = |l|²`).
pub fn synthesize_two_port(r: C64, l: C64) -> Result<TwoPortSynthesis> {
    let loss = l.norm_sqr();
    let total = r.norm_sqr() + loss;
    if (total - 1.0).abs() > AMPLITUDE_TOLERANCE {
        return Err(Error::CoefficientInvariant(format!(
            "|r|² + L = {total}, expected 1"
        )));
    }
    let loss = loss.min(1.0);
    let theta = (loss.sqrt() / (1.0 - loss).sqrt()).atan();
    Ok(TwoPortSynthesis {
        theta,
        phase_reflect: r.arg(),
        // the beamsplitter contributes −sin θ; an empty port keeps zero phase
        phase_loss: if loss > 0.0 { l.arg() + PI } else { 0.0 },
    })
}

/// Two cascaded beamsplitters with five phase shifters: two between the
/// splitters (transmit and loss arms) and one on each output port.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThreePortSynthesis {
    /// Splits the loss port off the input.
    pub theta1: f64,
    /// Splits the remainder into reflect and transmit.
    pub theta2: f64,
    pub internal_phases: [f64; 2],
    pub output_phases: [f64; 3],
}

impl ThreePortSynthesis {
    /// 3x3 single-photon transfer matrix.
    pub fn single_photon_matrix(&self) -> CMatrix {
        let bs1 = beamsplitter_single_photon(3, 0, 2, self.theta1);
        let internal = phase_single_photon(3, 1, self.internal_phases[0])
            * phase_single_photon(3, 2, self.internal_phases[1]);
        let bs2 = beamsplitter_single_photon(3, 0, 1, self.theta2);
        let out = phase_single_photon(3, 0, self.output_phases[0])
            * phase_single_photon(3, 1, self.output_phases[1])
            * phase_single_photon(3, 2, self.output_phases[2]);
        out * bs2 * internal * bs1
    }

    /// Amplitudes `(r, t, l)` for a photon entering the reflect port.
    pub fn amplitudes(&self) -> (C64, C64, C64) {
        let m = self.single_photon_matrix();
        (m[(0, 0)], m[(1, 0)], m[(2, 0)])
    }

    /// Operator on the truncated Fock space of (reflect, transmit, loss).
    pub fn fock_unitary(&self, dims: [usize; 3]) -> CMatrix {
        lift_passive(&self.single_photon_matrix(), &dims)
    }
}

/// Three-port network reproducing `(r, t, l)` on (reflect, transmit, loss).
pub fn synthesize_three_port(r: C64, t: C64, l: C64) -> Result<ThreePortSynthesis> {
    let loss = l.norm_sqr();
    let kept = r.norm_sqr() + t.norm_sqr();
    if (kept + loss - 1.0).abs() > AMPLITUDE_TOLERANCE {
        return Err(Error::CoefficientInvariant(format!(
            "|r|² + |t|² + |l|² = {}, expected 1",
            kept + loss
        )));
    }
    let loss = loss.min(1.0);
    let theta1 = (loss.sqrt() / (1.0 - loss).sqrt()).atan();
    let theta2 = if kept > 0.0 {
        let norm = kept.sqrt();
        (t.norm() / norm).atan2(r.norm() / norm)
    } else {
        0.0
    };
    let internal_phases = [0.0, 0.0];
    // BS2 contributes −sin θ₂ to transmit, BS1 −sin θ₁ to loss; ports that
    // receive no amplitude keep zero phase
    let phase_t = if t.norm_sqr() > 0.0 {
        t.arg() + PI
    } else {
        0.0
    };
    let phase_l = if loss > 0.0 {
        l.arg() + PI - internal_phases[1]
    } else {
        0.0
    };
    Ok(ThreePortSynthesis {
        theta1,
        theta2,
        internal_phases,
        output_phases: [r.arg(), phase_t, phase_l],
    })
}
