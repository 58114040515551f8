//! Transversal surface-code backend: one patch per logical qubit, each
//! rotation executed as its synthesized depth.

use crate::circuit::LogicalCircuit;
use crate::error::Result;
use crate::synthesis::{rotation_t_count, transversal_depth_of, SynthesisParams};
use crate::trace::{InstructionTrace, Opcode, TraceBuilder};

/// List-schedules each layer onto per-qubit patches: a rotation starts once
/// every patch it touches is free, and takes `transversal_depth_of` timesteps
/// with its T states spread evenly across them.
///
/// Magic states are routed from a shared pool rather than dedicated lanes, so
/// the trace reports no injection lanes and only the simulator's factory
/// supply limits T throughput.
pub fn transversal_schedule(circuit: &LogicalCircuit, params: &SynthesisParams) -> Result<InstructionTrace> {
    params.validate()?;
    let n = circuit.num_qubits;
    let mut b = TraceBuilder::new("transversal", n as u32);
    let mut free_at = vec![0u64; n];
    let mut t = 0u64;
    let mut chain = 0u64;
    for (li, layer) in circuit.layers.iter().enumerate() {
        b.begin_layer(li as u32);
        free_at.iter_mut().for_each(|f| *f = t);
        for r in layer {
            let patches: Vec<u32> = r.pauli.support().map(|q| q as u32).collect();
            let start = patches.iter().map(|&q| free_at[q as usize]).max().unwrap_or(t);
            let depth = transversal_depth_of(r, params)?;
            let tc = rotation_t_count(r, params)?;
            b.push(
                chain,
                start,
                depth as u32,
                Opcode::TransversalLayer,
                patches.clone(),
                0,
                tc as u32,
                0,
                false,
                &[],
            );
            chain += 1;
            for &q in &patches {
                free_at[q as usize] = start + depth;
            }
        }
        t = free_at.iter().copied().max().unwrap_or(t);
    }
    Ok(b.finish(circuit.rotation_count() as u64, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{RotationKind, RotationOp};

    #[test]
    fn single_rotation_depth() {
        let r = RotationOp::arbitrary("XZ".parse().unwrap(), 0.3, 1e-10).unwrap();
        let c = LogicalCircuit::from_rotations(2, vec![r]).unwrap();
        let t = transversal_schedule(&c, &SynthesisParams::default()).unwrap();
        assert_eq!(t.timesteps(), 140);
        assert_eq!(t.t_states(), 100);
        assert_eq!(t.count(Opcode::InterModuleMeas), 0);
    }

    #[test]
    fn commuting_t_layer_is_one_timestep() {
        let rots = (0..4)
            .map(|q| {
                let mut p = crate::pauli::PauliString::identity(4).unwrap();
                p.set(q, crate::pauli::Pauli::Z);
                RotationOp::new(p, std::f64::consts::FRAC_PI_8, 1e-3, RotationKind::T).unwrap()
            })
            .collect();
        let c = LogicalCircuit::from_rotations(4, rots).unwrap();
        let t = transversal_schedule(&c, &SynthesisParams::default()).unwrap();
        assert_eq!(c.layers.len(), 1);
        assert_eq!(t.timesteps(), 1);
    }
}
