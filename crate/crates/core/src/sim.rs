//! Discrete-event replay of an instruction trace against nondeterministic
//! factories, producing wall time, error and space figures.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::factory::{FactoryConfig, FactoryPool};
use crate::resources::{spacetime, success_probability, CostModel, ErrorLedger};
use crate::trace::{utilization, InstructionTrace, Opcode, TraceRecord};

const US_PER_DAY: f64 = 86_400e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub cost: CostModel,
    pub factory: FactoryConfig,
    pub factories: u32,
    pub seed: u64,
    /// Multiplier from the simulated circuit to the full workload.
    pub scale_factor: f64,
    pub physical_qubits: u64,
    /// Synthesis precision and the number of synthesized rotations it applies
    /// to (before scaling).
    pub synthesis_eps: f64,
    pub synthesized_rotations: u64,
}

impl SimParams {
    pub fn new(cost: CostModel, factory: FactoryConfig, factories: u32, seed: u64) -> Self {
        SimParams {
            cost,
            factory,
            factories,
            seed,
            scale_factor: 1.0,
            physical_qubits: 0,
            synthesis_eps: 0.0,
            synthesized_rotations: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub architecture: String,
    pub seed: u64,
    pub factories: u32,
    pub wall_time_ms: f64,
    pub days: f64,
    /// Wall time in reporting timesteps.
    pub timesteps: f64,
    pub physical_qubits: u64,
    pub success_probability: f64,
    pub stall_timesteps: f64,
    pub gate_shuttle_overhead_fraction: f64,
    pub module_utilization: f64,
    /// Qubit-seconds.
    pub spacetime: f64,
    pub t_states: f64,
    pub opcode_counts: BTreeMap<String, u64>,
    pub ledger: ErrorLedger,
}

struct Active {
    unit_us: u64,
    units: u32,
    done: u32,
    t_count: u32,
    t_taken: u32,
}

impl Active {
    /// T states are spread evenly: unit `j` consumes one when the running
    /// share `⌊(j+1)·t/units⌋` steps up.
    fn unit_needs_t(&self, j: u32) -> bool {
        let (t, u) = (self.t_count as u64, self.units as u64);
        (j as u64 + 1) * t / u > j as u64 * t / u
    }
}

/// Replays `trace` in layers. Within a layer a record starts once its
/// dependencies finish; a unit needing a T state waits for the shared pool.
pub fn run(trace: &InstructionTrace, p: &SimParams) -> Result<SimReport> {
    trace.validate()?;
    p.cost.validate()?;
    if !(p.scale_factor > 0.0) {
        return input("scale_factor must be positive");
    }
    if !p.factory.unlimited && trace.injection_lanes > p.factories {
        return Err(Error::Runtime(format!(
            "trace uses {} concurrent injection sites but only {} factories are configured",
            trace.injection_lanes, p.factories
        )));
    }
    let mut pool = FactoryPool::new(p.factories, &p.factory, p.cost.cultivation_attempt_us(), p.seed)?;
    let recs = &trace.records;
    let n = recs.len();

    let mut dependents: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut pending: Vec<u32> = vec![0; n];
    for (i, r) in recs.iter().enumerate() {
        for &d in &r.deps {
            if recs[d as usize].layer == r.layer {
                dependents[d as usize].push(i as u32);
                pending[i] += 1;
            }
        }
    }

    let mut ledger = ErrorLedger::default();
    let mut ready_at = vec![0u64; n];
    let mut stall_us = 0u64;
    let mut overhead_us = 0u128;
    let mut busy_us = 0u128;
    let mut clock = 0u64;
    let mut lo = 0;
    let idle_us = p.cost.unit_time_us(Opcode::Idle, 0).max(1);

    while lo < n {
        let layer = recs[lo].layer;
        let mut hi = lo;
        while hi < n && recs[hi].layer == layer {
            hi += 1;
        }
        let layer_start = clock;
        let mut heap: BinaryHeap<Reverse<(u64, u32)>> = BinaryHeap::new();
        let mut active: BTreeMap<u32, Active> = BTreeMap::new();
        for (i, _) in pending.iter().enumerate().take(hi).skip(lo).filter(|(_, &p)| p == 0) {
            heap.push(Reverse((layer_start, i as u32)));
        }
        let mut layer_end = layer_start;
        while let Some(Reverse((t, i))) = heap.pop() {
            let r = &recs[i as usize];
            let a = active.entry(i).or_insert_with(|| {
                let unit_us = p.cost.unit_time_us(r.opcode, r.distance);
                overhead_us += p.cost.unit_overhead_us(r.opcode, r.distance) as u128 * r.duration as u128;
                busy_us += unit_us as u128 * r.duration as u128;
                Active {
                    unit_us,
                    units: r.duration,
                    done: 0,
                    t_count: r.t_count,
                    t_taken: 0,
                }
            });
            let mut now = t;
            if a.t_count == 0 {
                now += a.unit_us * a.units as u64;
                a.done = a.units;
            } else {
                // Run units back to back until one stalls or another event is due.
                let horizon = heap.peek().map(|Reverse((h, _))| *h).unwrap_or(u64::MAX);
                while a.done < a.units {
                    if a.unit_needs_t(a.done) {
                        if !pool.take_from(now, r.lane, r.lanes) {
                            let next = pool.next_available_from(now, r.lane, r.lanes);
                            if next == u64::MAX {
                                return Err(Error::Runtime(format!(
                                    "record {i}: injection site {} of {} has no factory",
                                    r.lane, r.lanes
                                )));
                            }
                            let waited = next - now;
                            stall_us += waited;
                            ledger.add(
                                "IDLE(stall)",
                                p.cost.idle.error,
                                (waited / idle_us) as f64 * r.modules.len() as f64,
                            );
                            heap.push(Reverse((next, i)));
                            break;
                        }
                        a.t_taken += 1;
                    }
                    now += a.unit_us;
                    a.done += 1;
                    if a.done < a.units && now > horizon {
                        heap.push(Reverse((now, i)));
                        break;
                    }
                }
                if a.done < a.units {
                    continue;
                }
            }
            let a = active.remove(&i).expect("record is active");
            finish(r, &p.cost, a.t_taken, &mut ledger);
            layer_end = layer_end.max(now);
            for &d in &dependents[i as usize] {
                let slot = &mut ready_at[d as usize];
                *slot = (*slot).max(now);
                pending[d as usize] -= 1;
                if pending[d as usize] == 0 {
                    heap.push(Reverse((ready_at[d as usize].max(layer_start), d)));
                }
            }
        }
        if let Some((&i, _)) = active.iter().next() {
            return Err(Error::Runtime(format!("record {i} never completed")));
        }
        if let Some(i) = (lo..hi).find(|&i| pending[i] > 0) {
            return Err(Error::Runtime(format!("record {i} has unsatisfied dependencies")));
        }
        clock = layer_end;
        lo = hi;
    }

    let s = p.scale_factor;
    ledger.scale(s);
    let wall_us = clock as f64 * s;
    let mut counts = BTreeMap::new();
    for r in recs {
        *counts.entry(r.opcode.name().to_string()).or_insert(0) += 1;
    }
    let wall_s = wall_us / 1e6;
    Ok(SimReport {
        architecture: trace.architecture.clone(),
        seed: p.seed,
        factories: p.factories,
        wall_time_ms: wall_us / 1e3,
        days: wall_us / US_PER_DAY,
        timesteps: wall_us / p.cost.timestep_us() as f64,
        physical_qubits: p.physical_qubits,
        success_probability: success_probability(&ledger, p.synthesis_eps, p.synthesized_rotations as f64 * s),
        stall_timesteps: stall_us as f64 * s / p.cost.timestep_us() as f64,
        gate_shuttle_overhead_fraction: if busy_us == 0 {
            0.0
        } else {
            overhead_us as f64 / busy_us as f64
        },
        module_utilization: utilization(trace),
        spacetime: spacetime(p.physical_qubits, wall_s),
        t_states: trace.t_states() as f64 * s,
        opcode_counts: counts,
        ledger,
    })
}

fn finish(r: &TraceRecord, cost: &CostModel, t_taken: u32, ledger: &mut ErrorLedger) {
    let class = cost.class(r.opcode);
    ledger.add(r.opcode.name(), class.error, r.error_ops() as f64);
    if t_taken > 0 {
        ledger.add("T_STATE", cost.t_cultivation.error, t_taken as f64);
    }
}

/// Mean and sample standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    (m, v.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::TraceBuilder;

    fn params(f: u32) -> SimParams {
        SimParams::new(CostModel::default(), FactoryConfig::default(), f, 1)
    }

    #[test]
    fn empty_trace() {
        let t = InstructionTrace::new("x", 1);
        let r = run(&t, &params(1)).unwrap();
        assert_eq!(r.wall_time_ms, 0.0);
        assert_eq!(r.success_probability, 1.0);
    }

    #[test]
    fn even_t_spread() {
        let a = Active {
            unit_us: 1,
            units: 140,
            done: 0,
            t_count: 100,
            t_taken: 0,
        };
        assert_eq!((0..140).filter(|&j| a.unit_needs_t(j)).count(), 100);
        let b = Active {
            units: 5,
            t_count: 5,
            ..a
        };
        assert!((0..5).all(|j| b.unit_needs_t(j)));
    }

    #[test]
    fn unlimited_injection_is_t_free() {
        let mut b = TraceBuilder::new("x", 1);
        b.begin_layer(0);
        b.push(0, 0, 10, Opcode::TInject, vec![0], 0, 10, 0, false, &[]);
        let t = b.finish(1, 1);
        let mut p = params(1);
        p.factory.unlimited = true;
        let r = run(&t, &p).unwrap();
        assert_eq!(r.wall_time_ms, 1830.0);
        assert_eq!(r.stall_timesteps, 0.0);
    }

    #[test]
    fn lane_overcommit_is_runtime_error() {
        let mut b = TraceBuilder::new("x", 2);
        b.begin_layer(0);
        b.push(0, 0, 1, Opcode::TInject, vec![0], 0, 1, 0, false, &[]);
        let t = b.finish(1, 3);
        assert!(matches!(run(&t, &params(2)), Err(Error::Runtime(_))));
    }
}
