//! Cost model for Clifford+T synthesis of arbitrary-angle rotations, and the
//! qualification analysis comparing extractor and transversal execution.

use serde::{Deserialize, Serialize};

use crate::circuit::{LogicalCircuit, RotationKind, RotationOp};
use crate::error::{input, Result};
use crate::extractor::{expand_rotation, ExtractorParams, ModuleMap};

/// Guard against ceil() overshooting on values such as 100·1.4 = 140.00000000000003.
const CEIL_SLACK: f64 = 1e-9;

fn ceil_tol(x: f64) -> u64 {
    (x - CEIL_SLACK).ceil().max(0.0) as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthesisParams {
    /// T gates per bit of precision: τ = ⌈c · log₂(1/ε)⌉.
    pub t_coefficient: f64,
    /// Clifford gates per T gate in a synthesized sequence.
    pub clifford_per_t: f64,
    /// Fraction of Clifford depth a transversal backend removes by parallelizing.
    pub clifford_depth_reduction: f64,
}

impl Default for SynthesisParams {
    fn default() -> Self {
        SynthesisParams {
            t_coefficient: 3.0,
            clifford_per_t: 1.0,
            clifford_depth_reduction: 0.6,
        }
    }
}

impl SynthesisParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_coefficient > 0.0) {
            return input("t_coefficient must be positive");
        }
        if !(self.clifford_per_t >= 0.0) {
            return input("clifford_per_t must be nonnegative");
        }
        if !(0.0..=1.0).contains(&self.clifford_depth_reduction) {
            return input("clifford_depth_reduction must lie in [0, 1]");
        }
        Ok(())
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        input(format!("precision {eps} outside (0, 1)"))
    }
}

/// T count τ of one synthesized arbitrary rotation.
pub fn synthesis_length(eps: f64, params: &SynthesisParams) -> Result<u64> {
    check_eps(eps)?;
    Ok(ceil_tol(params.t_coefficient * (1.0 / eps).log2()))
}

/// T count of a rotation according to its kind.
pub fn rotation_t_count(r: &RotationOp, params: &SynthesisParams) -> Result<u64> {
    match r.kind {
        RotationKind::T => Ok(1),
        RotationKind::Clifford => Ok(0),
        RotationKind::Arbitrary => synthesis_length(r.precision, params),
    }
}

pub fn circuit_t_count(c: &LogicalCircuit, params: &SynthesisParams) -> Result<u64> {
    c.rotations().map(|r| rotation_t_count(r, params)).sum()
}

/// Depth of a synthesized rotation when Cliffords are compressed transversally:
/// τ T layers plus the Clifford layers left after the configured reduction.
pub fn transversal_rotation_depth(eps: f64, params: &SynthesisParams) -> Result<u64> {
    let tau = synthesis_length(eps, params)?;
    Ok(depth_for_tau(tau, params))
}

pub(crate) fn depth_for_tau(tau: u64, params: &SynthesisParams) -> u64 {
    ceil_tol(tau as f64 * (1.0 + params.clifford_per_t * (1.0 - params.clifford_depth_reduction)))
}

/// Transversal depth of a rotation by kind: one layer for T or Clifford.
pub fn transversal_depth_of(r: &RotationOp, params: &SynthesisParams) -> Result<u64> {
    match r.kind {
        RotationKind::T | RotationKind::Clifford => Ok(1),
        RotationKind::Arbitrary => transversal_rotation_depth(r.precision, params),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualificationReport {
    pub rotations: usize,
    pub synthesis_timesteps: u64,
    pub extractor_overhead_timesteps: u64,
    /// Share of extractor time spent on synthesis injections.
    pub synthesis_fraction: f64,
    pub synthesis_majority: bool,
    /// Clifford depth a transversal backend still pays per synthesized rotation.
    pub transversal_residual_clifford_depth: f64,
    /// Non-synthesis extractor timesteps per rotation.
    pub extractor_overhead_per_rotation: f64,
    /// True when the extractor's fixed per-rotation overhead does not exceed
    /// the Clifford depth the transversal backend cannot parallelize away.
    pub clifford_bound_met: bool,
}

/// Decides whether the circuit favours an extractor backend: synthesis must
/// dominate, and the transversal Clifford saving must not beat the extractor's
/// per-rotation overhead.
pub fn qualify_extractor(
    circuit: &LogicalCircuit,
    map: &ModuleMap,
    xp: &ExtractorParams,
) -> Result<QualificationReport> {
    let sp = &xp.synthesis;
    let mut synth = 0u64;
    let mut overhead = 0u64;
    let mut residual = 0u64;
    let mut synthesized = 0u64;
    for (i, r) in circuit.rotations().enumerate() {
        let expansion = expand_rotation(r, map, xp, i as u64)?;
        synth += expansion.injections;
        overhead += expansion.serial_overhead();
        if r.kind == RotationKind::Arbitrary {
            let tau = expansion.injections;
            residual += depth_for_tau(tau, sp) - tau;
            synthesized += 1;
        }
    }
    let rotations = circuit.rotation_count();
    let total = synth + overhead;
    let fraction = if total == 0 { 0.0 } else { synth as f64 / total as f64 };
    let per_rot = if rotations == 0 {
        0.0
    } else {
        overhead as f64 / rotations as f64
    };
    let resid = if synthesized == 0 {
        0.0
    } else {
        residual as f64 / synthesized as f64
    };
    Ok(QualificationReport {
        rotations,
        synthesis_timesteps: synth,
        extractor_overhead_timesteps: overhead,
        synthesis_fraction: fraction,
        synthesis_majority: fraction > 0.5,
        transversal_residual_clifford_depth: resid,
        extractor_overhead_per_rotation: per_rot,
        clifford_bound_met: synthesized > 0 && per_rot <= resid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_values() {
        let p = SynthesisParams::default();
        assert_eq!(synthesis_length(1e-10, &p).unwrap(), 100);
        assert_eq!(synthesis_length(0.5, &p).unwrap(), 3);
        assert_eq!(synthesis_length(0.25, &p).unwrap(), 6);
        assert_eq!(synthesis_length(1e-15, &p).unwrap(), 150);
        assert!(synthesis_length(1.0, &p).is_err());
        assert!(synthesis_length(0.0, &p).is_err());
    }

    #[test]
    fn transversal_depths() {
        let p = SynthesisParams::default();
        assert_eq!(transversal_rotation_depth(1e-10, &p).unwrap(), 140);
        let full = SynthesisParams {
            clifford_depth_reduction: 1.0,
            ..p
        };
        assert_eq!(transversal_rotation_depth(1e-10, &full).unwrap(), 100);
        let none = SynthesisParams {
            clifford_per_t: 0.0,
            ..p
        };
        assert_eq!(transversal_rotation_depth(1e-10, &none).unwrap(), 100);
    }

    #[test]
    fn kinds() {
        let p = SynthesisParams::default();
        let t = RotationOp::new("Z".parse().unwrap(), 0.3, 0.0, RotationKind::T).unwrap();
        let c = RotationOp::new("Z".parse().unwrap(), 0.3, 0.0, RotationKind::Clifford).unwrap();
        assert_eq!(rotation_t_count(&t, &p).unwrap(), 1);
        assert_eq!(rotation_t_count(&c, &p).unwrap(), 0);
    }
}
