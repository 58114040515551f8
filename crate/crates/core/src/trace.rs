//! Architecture-level instruction traces shared by all compilers and the simulator.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Opcode {
    Idle,
    ShiftAutomorphism,
    InModuleMeas,
    InterModuleMeas,
    TInject,
    GhzPrep,
    GhzTeardown,
    ZReset,
    EntangleXMeas,
    /// Transversal surface-code layer block; consumes `t_count` states.
    TransversalLayer,
    /// qLDPC-to-patch transfer (hybrid backends).
    Load,
    /// Patch-to-qLDPC transfer (hybrid backends).
    Store,
    /// Single-qubit Clifford executed inside a memory module.
    InMemoryClifford,
    /// T injection executed inside a memory module.
    InMemoryT,
}

impl Opcode {
    pub const ALL: [Opcode; 14] = [
        Opcode::Idle,
        Opcode::ShiftAutomorphism,
        Opcode::InModuleMeas,
        Opcode::InterModuleMeas,
        Opcode::TInject,
        Opcode::GhzPrep,
        Opcode::GhzTeardown,
        Opcode::ZReset,
        Opcode::EntangleXMeas,
        Opcode::TransversalLayer,
        Opcode::Load,
        Opcode::Store,
        Opcode::InMemoryClifford,
        Opcode::InMemoryT,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Opcode::Idle => "IDLE",
            Opcode::ShiftAutomorphism => "SHIFT_AUTOMORPHISM",
            Opcode::InModuleMeas => "IN_MODULE_MEAS",
            Opcode::InterModuleMeas => "INTER_MODULE_MEAS",
            Opcode::TInject => "T_INJECT",
            Opcode::GhzPrep => "GHZ_PREP",
            Opcode::GhzTeardown => "GHZ_TEARDOWN",
            Opcode::ZReset => "Z_RESET",
            Opcode::EntangleXMeas => "ENTANGLE_X_MEAS",
            Opcode::TransversalLayer => "TRANSVERSAL_LAYER",
            Opcode::Load => "LOAD",
            Opcode::Store => "STORE",
            Opcode::InMemoryClifford => "IN_MEMORY_CLIFFORD",
            Opcode::InMemoryT => "IN_MEMORY_T",
        }
    }

    pub fn index(self) -> usize {
        Opcode::ALL.iter().position(|&o| o == self).expect("listed")
    }
}

/// One instruction occupying `modules` for `duration` timesteps from `start`.
///
/// `deps` lists earlier records that must finish first; the simulator replays
/// these dependencies and lets factory stalls push the schedule back.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub start: u64,
    pub duration: u32,
    pub opcode: Opcode,
    pub modules: Vec<u32>,
    /// Inter-module distance in module widths (zero when local).
    #[serde(default)]
    pub distance: u32,
    /// Magic states consumed, spread evenly over the unit steps.
    #[serde(default)]
    pub t_count: u32,
    /// Elementary operations charged to the error ledger (defaults to duration).
    #[serde(default)]
    pub ops: u32,
    pub layer: u32,
    #[serde(default)]
    pub deps: Vec<u32>,
    /// Injection site `lane` of `lanes` sharing one gadget. The site draws
    /// only from factories whose index is congruent to `lane` mod `lanes`.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub lane: u32,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub lanes: u32,
}

fn is_zero(x: &u32) -> bool {
    *x == 0
}

fn is_one(x: &u32) -> bool {
    *x == 1
}

fn one() -> u32 {
    1
}

impl TraceRecord {
    pub fn end(&self) -> u64 {
        self.start + self.duration as u64
    }

    pub fn error_ops(&self) -> u64 {
        if self.ops == 0 {
            self.duration as u64
        } else {
            self.ops as u64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstructionTrace {
    pub architecture: String,
    /// Modules (extractor) or patches (transversal/hybrid) addressed by records.
    pub num_modules: u32,
    pub rotations: u64,
    /// Highest number of concurrent T injection sites, checked against the
    /// configured factory count at simulation time.
    pub injection_lanes: u32,
    pub records: Vec<TraceRecord>,
}

impl InstructionTrace {
    pub fn new(architecture: &str, num_modules: u32) -> Self {
        InstructionTrace {
            architecture: architecture.into(),
            num_modules,
            rotations: 0,
            injection_lanes: 0,
            records: Vec::new(),
        }
    }

    /// Compile-time makespan in timesteps.
    pub fn timesteps(&self) -> u64 {
        self.records.iter().map(TraceRecord::end).max().unwrap_or(0)
    }

    pub fn count(&self, op: Opcode) -> usize {
        self.records.iter().filter(|r| r.opcode == op).count()
    }

    pub fn t_states(&self) -> u64 {
        self.records.iter().map(|r| r.t_count as u64).sum()
    }

    pub fn num_layers(&self) -> u32 {
        self.records.iter().map(|r| r.layer + 1).max().unwrap_or(0)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Runtime(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let t: InstructionTrace = serde_json::from_str(text).map_err(|e| Error::Parse(format!("trace file: {e}")))?;
        t.validate()?;
        Ok(t)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        serde_json::to_writer(&mut w, self).map_err(|e| Error::Runtime(e.to_string()))?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, r) in self.records.iter().enumerate() {
            if r.duration == 0 {
                return Err(Error::Validation(format!("record {i}: zero duration")));
            }
            if r.t_count > r.duration {
                return Err(Error::Validation(format!("record {i}: more T states than unit steps")));
            }
            if let Some(&m) = r.modules.iter().find(|&&m| m >= self.num_modules) {
                return Err(Error::Validation(format!("record {i}: module {m} out of range")));
            }
            if r.lanes == 0 || r.lane >= r.lanes {
                return Err(Error::Validation(format!("record {i}: lane {} of {}", r.lane, r.lanes)));
            }
            if let Some(&d) = r.deps.iter().find(|&&d| d as usize >= i) {
                return Err(Error::Validation(format!("record {i}: dependency {d} is not earlier")));
            }
        }
        Ok(())
    }

    /// Human-readable listing, one record per line.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# {} modules={} rotations={} lanes={} records={} timesteps={}",
            self.architecture,
            self.num_modules,
            self.rotations,
            self.injection_lanes,
            self.records.len(),
            self.timesteps()
        );
        let _ = writeln!(s, "# start duration opcode modules distance layer");
        for r in &self.records {
            let mods: Vec<String> = r.modules.iter().map(u32::to_string).collect();
            let _ = writeln!(
                s,
                "{} {} {} [{}] {} {}",
                r.start,
                r.duration,
                r.opcode.name(),
                mods.join(","),
                r.distance,
                r.layer
            );
        }
        s
    }
}

/// Mean fraction of modules busy per timestep over the trace makespan.
pub fn utilization(trace: &InstructionTrace) -> f64 {
    let span = trace.timesteps();
    if span == 0 || trace.num_modules == 0 {
        return 0.0;
    }
    // Sweep over interval endpoints; a module counts once even if several
    // records overlap on it.
    let mut events: Vec<(u64, i32, u32)> = Vec::new();
    for r in &trace.records {
        for &m in &r.modules {
            events.push((r.start, 1, m));
            events.push((r.end(), -1, m));
        }
    }
    events.sort_unstable();
    let mut depth = vec![0i32; trace.num_modules as usize];
    let mut busy = 0u64;
    let mut busy_area = 0u128;
    let mut last = 0u64;
    for (t, d, m) in events {
        busy_area += busy as u128 * (t - last) as u128;
        last = t;
        let slot = &mut depth[m as usize];
        let was = *slot > 0;
        *slot += d;
        let is = *slot > 0;
        if !was && is {
            busy += 1;
        } else if was && !is {
            busy -= 1;
        }
    }
    busy_area as f64 / (span as f64 * trace.num_modules as f64)
}

/// Incrementally builds a trace, deriving dependencies from per-chain order
/// and per-module FIFO order. Records must be pushed in nondecreasing start
/// order per module.
pub struct TraceBuilder {
    trace: InstructionTrace,
    module_last: Vec<Option<u32>>,
    chain_last: std::collections::HashMap<u64, ChainState>,
    layer: u32,
    layer_floor: usize,
}

#[derive(Default, Clone)]
struct ChainState {
    solid: Option<u32>,
    overlaps: Vec<u32>,
    joined: Vec<u32>,
}

impl TraceBuilder {
    pub fn new(architecture: &str, num_modules: u32) -> Self {
        TraceBuilder {
            trace: InstructionTrace::new(architecture, num_modules),
            module_last: vec![None; num_modules as usize],
            chain_last: Default::default(),
            layer: 0,
            layer_floor: 0,
        }
    }

    /// Starts a new layer. Dependencies never cross layers; the simulator
    /// synchronizes layer boundaries itself.
    pub fn begin_layer(&mut self, layer: u32) {
        self.layer = layer;
        self.layer_floor = self.trace.records.len();
        self.module_last.iter_mut().for_each(|m| *m = None);
        self.chain_last.clear();
    }

    /// Makes the next solid record on `chain` wait for every overlapped
    /// record pushed on it so far.
    pub fn join_overlaps(&mut self, chain: u64) {
        let cs = self.chain_last.entry(chain).or_default();
        let pending = std::mem::take(&mut cs.overlaps);
        cs.joined.extend(pending);
    }

    /// Appends a record. `overlap` records run alongside their chain instead
    /// of blocking it; they share the chain's first module and queue on the
    /// rest, and only a record pushed after [`join_overlaps`](Self::join_overlaps)
    /// waits for them.
    #[allow(clippy::too_many_arguments)]
    pub fn push(
        &mut self,
        chain: u64,
        start: u64,
        duration: u32,
        opcode: Opcode,
        modules: Vec<u32>,
        distance: u32,
        t_count: u32,
        ops: u32,
        overlap: bool,
        extra_deps: &[u32],
    ) -> u32 {
        let idx = self.trace.records.len() as u32;
        let mut deps: BTreeSet<u32> = extra_deps
            .iter()
            .copied()
            .filter(|&d| d as usize >= self.layer_floor)
            .collect();
        let cs = self.chain_last.entry(chain).or_default();
        if let Some(s) = cs.solid {
            deps.insert(s);
        }
        // An overlapped record runs beside its chain on the chain's first
        // module, so it only claims the remaining modules.
        let claimed = if overlap {
            cs.overlaps.push(idx);
            modules.get(1..).unwrap_or(&[])
        } else {
            deps.extend(cs.joined.drain(..));
            cs.solid = Some(idx);
            &modules[..]
        };
        for &m in claimed {
            if let Some(prev) = self.module_last[m as usize].replace(idx) {
                deps.insert(prev);
            }
        }
        self.trace.records.push(TraceRecord {
            start,
            duration,
            opcode,
            modules,
            distance,
            t_count,
            ops,
            layer: self.layer,
            deps: deps.into_iter().collect(),
            lane: 0,
            lanes: 1,
        });
        idx
    }

    pub fn record_mut(&mut self, idx: u32) -> &mut TraceRecord {
        &mut self.trace.records[idx as usize]
    }

    pub fn last_on_chain(&self, chain: u64) -> Option<u32> {
        self.chain_last.get(&chain).and_then(|c| c.solid)
    }

    pub fn finish(mut self, rotations: u64, injection_lanes: u32) -> InstructionTrace {
        self.trace.rotations = rotations;
        self.trace.injection_lanes = injection_lanes;
        self.trace
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn utilization_examples() {
        let mut b = TraceBuilder::new("t", 9);
        b.begin_layer(0);
        b.push(0, 0, 10, Opcode::TInject, vec![0], 0, 10, 0, false, &[]);
        b.push(0, 10, 10, Opcode::TInject, vec![0], 0, 10, 0, false, &[]);
        let t = b.finish(1, 1);
        assert!((utilization(&t) - 1.0 / 9.0).abs() < 1e-12);

        let mut b = TraceBuilder::new("t", 3);
        b.begin_layer(0);
        b.push(0, 0, 5, Opcode::InModuleMeas, vec![0, 1, 2], 0, 0, 0, false, &[]);
        assert!((utilization(&b.finish(1, 0)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn builder_dependencies() {
        let mut b = TraceBuilder::new("t", 3);
        b.begin_layer(0);
        let a = b.push(1, 0, 1, Opcode::EntangleXMeas, vec![0, 1], 0, 0, 0, false, &[]);
        let inter = b.push(1, 1, 1, Opcode::InterModuleMeas, vec![0, 1], 1, 0, 0, true, &[]);
        let inj = b.push(1, 1, 5, Opcode::TInject, vec![0], 0, 5, 0, false, &[]);
        let other = b.push(2, 2, 1, Opcode::InModuleMeas, vec![1], 0, 0, 0, false, &[]);
        b.join_overlaps(1);
        let reset = b.push(1, 6, 1, Opcode::ZReset, vec![0], 0, 0, 0, false, &[]);
        let t = b.finish(1, 1);
        assert_eq!(t.records[inter as usize].deps, vec![a]);
        assert_eq!(t.records[inj as usize].deps, vec![a]);
        assert_eq!(t.records[other as usize].deps, vec![inter]);
        assert_eq!(t.records[reset as usize].deps, vec![inter, inj]);
        t.validate().unwrap();
    }
}
