//! Compilation to the qLDPC extractor instruction set: the base scheduler and
//! the teleportation-based parallel-injection scheduler.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{LogicalCircuit, RotationKind, RotationOp};
use crate::error::{input, Error, Result};
use crate::resources::CodeParams;
use crate::synthesis::{rotation_t_count, SynthesisParams};
use crate::trace::{InstructionTrace, Opcode, TraceBuilder};

/// Block assignment of logical qubits to code modules.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModuleMap {
    pub num_qubits: u32,
    /// Data qubits per module.
    pub capacity: u32,
    pub num_modules: u32,
    /// Whether one logical slot per module is kept free as the pivot ancilla.
    pub reserve_pivot: bool,
}

/// Maps qubits to modules in contiguous blocks. With `reserve_pivot`, each
/// module keeps one of its `k` logical slots for the pivot ancilla.
pub fn map_qubits(num_qubits: u32, code: &CodeParams, reserve_pivot: bool) -> Result<ModuleMap> {
    if num_qubits == 0 {
        return input("cannot map zero qubits");
    }
    code.validate()?;
    let capacity = if reserve_pivot { code.k - 1 } else { code.k };
    if capacity == 0 {
        return input(format!(
            "code {} has no data slot once the pivot is reserved",
            code.label
        ));
    }
    Ok(ModuleMap {
        num_qubits,
        capacity,
        num_modules: num_qubits.div_ceil(capacity),
        reserve_pivot,
    })
}

impl ModuleMap {
    pub fn module_of(&self, q: usize) -> Result<u32> {
        if q >= self.num_qubits as usize {
            return Err(Error::Compile(format!(
                "qubit {q} is not mapped ({} qubits)",
                self.num_qubits
            )));
        }
        Ok(q as u32 / self.capacity)
    }

    /// Sorted, deduplicated modules touched by `r`.
    pub fn modules_of(&self, r: &RotationOp) -> Result<Vec<u32>> {
        let mut ms = Vec::new();
        for q in r.pauli.support() {
            let m = self.module_of(q)?;
            if ms.last() != Some(&m) {
                ms.push(m);
            }
        }
        Ok(ms)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum InModuleCost {
    /// Fixed cost; fractional values round up to whole timesteps.
    Fixed { timesteps: f64 },
    /// Uniform integer cost per rotation, reproducible from `seed`.
    Uniform { lo: u32, hi: u32, seed: u64 },
}

impl Default for InModuleCost {
    fn default() -> Self {
        InModuleCost::Fixed { timesteps: 18.5 }
    }
}

impl InModuleCost {
    pub fn sample(&self, rotation_index: u64) -> u32 {
        match *self {
            InModuleCost::Fixed { timesteps } => timesteps.ceil().max(1.0) as u32,
            InModuleCost::Uniform { lo, hi, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ rotation_index.wrapping_mul(0x2545_f491_4f6c_dd1d));
                rng.gen_range(lo..=hi)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            InModuleCost::Fixed { timesteps } if timesteps > 0.0 => Ok(()),
            InModuleCost::Uniform { lo, hi, .. } if lo >= 1 && lo <= hi => Ok(()),
            _ => input("in-module cost must be positive (uniform needs 1 <= lo <= hi)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtractorParams {
    pub synthesis: SynthesisParams,
    pub in_module: InModuleCost,
    pub entangle_timesteps: u32,
    pub reset_timesteps: u32,
    pub ghz_prep_timesteps: u32,
    pub ghz_teardown_timesteps: u32,
    /// Unutilized pivots required before the teleportation gadget is used.
    pub ghz_min_unutilized: u32,
    /// Factory lanes available to the compiler; 0 means unlimited.
    pub factories: u32,
    /// Run commuting rotations of a layer concurrently on disjoint modules
    /// under the base policy.
    pub base_concurrent: bool,
    /// Same, under the parallel-injection policy.
    pub parallel_concurrent: bool,
    pub reserve_pivot: bool,
}

impl Default for ExtractorParams {
    fn default() -> Self {
        ExtractorParams {
            synthesis: SynthesisParams::default(),
            in_module: InModuleCost::default(),
            entangle_timesteps: 1,
            reset_timesteps: 1,
            ghz_prep_timesteps: 1,
            ghz_teardown_timesteps: 2,
            ghz_min_unutilized: 8,
            factories: 0,
            base_concurrent: false,
            parallel_concurrent: false,
            reserve_pivot: true,
        }
    }
}

impl ExtractorParams {
    pub fn validate(&self) -> Result<()> {
        self.synthesis.validate()?;
        self.in_module.validate()?;
        if self.entangle_timesteps == 0 || self.reset_timesteps == 0 {
            return input("entangle and reset must take at least one timestep");
        }
        if self.ghz_prep_timesteps == 0 || self.ghz_teardown_timesteps == 0 {
            return input("GHZ preparation and teardown must take at least one timestep");
        }
        Ok(())
    }

    fn lanes(&self) -> Option<u32> {
        (self.factories > 0).then_some(self.factories)
    }
}

/// Instruction budget of one rotation on the extractor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RotationExpansion {
    pub modules: Vec<u32>,
    pub pivot: u32,
    /// Furthest module from the pivot, in module widths.
    pub distance: u32,
    pub entangle: u32,
    /// Binary-tree entanglement distribution depth, ⌈log₂ m⌉.
    pub inter_steps: u32,
    pub in_module: u32,
    pub injections: u64,
    pub reset: u32,
    /// Clifford rotations are a bare Pauli measurement.
    pub measurement_only: bool,
}

impl RotationExpansion {
    /// Timesteps outside synthesis that cannot hide behind injections.
    pub fn serial_overhead(&self) -> u64 {
        if self.measurement_only {
            (self.inter_steps + self.in_module) as u64
        } else {
            (self.entangle + self.in_module + self.reset) as u64
        }
    }

    /// Serial makespan of the rotation on its own.
    pub fn serial_span(&self) -> u64 {
        if self.measurement_only {
            self.serial_overhead()
        } else {
            self.serial_overhead() + self.injections.max(self.inter_steps as u64)
        }
    }

    /// Instruction list (opcode, timesteps) in execution order.
    pub fn instructions(&self) -> Vec<(Opcode, u64)> {
        let mut v = Vec::new();
        if self.measurement_only {
            if self.inter_steps > 0 {
                v.push((Opcode::InterModuleMeas, self.inter_steps as u64));
            }
            v.push((Opcode::InModuleMeas, self.in_module as u64));
            return v;
        }
        v.push((Opcode::EntangleXMeas, self.entangle as u64));
        v.push((Opcode::InModuleMeas, self.in_module as u64));
        if self.inter_steps > 0 {
            v.push((Opcode::InterModuleMeas, self.inter_steps as u64));
        }
        v.push((Opcode::TInject, self.injections));
        v.push((Opcode::ZReset, self.reset as u64));
        v
    }
}

fn ceil_log2(m: usize) -> u32 {
    if m <= 1 {
        0
    } else {
        usize::BITS - (m - 1).leading_zeros()
    }
}

pub fn expand_rotation(
    r: &RotationOp,
    map: &ModuleMap,
    params: &ExtractorParams,
    rotation_index: u64,
) -> Result<RotationExpansion> {
    if r.pauli.len() != map.num_qubits as usize {
        return Err(Error::Compile(format!(
            "rotation on {} qubits but map covers {}",
            r.pauli.len(),
            map.num_qubits
        )));
    }
    let modules = map.modules_of(r)?;
    let pivot = modules[0];
    let distance = modules.last().map(|&m| m - pivot).unwrap_or(0);
    Ok(RotationExpansion {
        inter_steps: ceil_log2(modules.len()),
        pivot,
        distance,
        modules,
        entangle: params.entangle_timesteps,
        in_module: params.in_module.sample(rotation_index),
        injections: rotation_t_count(r, &params.synthesis)?,
        reset: params.reset_timesteps,
        measurement_only: r.kind == RotationKind::Clifford,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractorPolicy {
    Base,
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Pending,
    Setup,
    Ready,
    Injecting,
    Gadget,
    Reset,
    Done,
}

struct Rot {
    exp: RotationExpansion,
    phase: Phase,
    phase_end: u64,
    remaining: u64,
    inject_rec: Option<u32>,
    inject_start: u64,
    holds_lane: bool,
    /// End of the overlapped entanglement distribution.
    inter_end: u64,
}

const BUSY: u64 = u64::MAX;

/// Event-driven scheduler state for one layer.
struct LayerSched<'a> {
    params: &'a ExtractorParams,
    policy: ExtractorPolicy,
    b: &'a mut TraceBuilder,
    free_at: Vec<u64>,
    rots: Vec<Rot>,
    events: BinaryHeap<Reverse<u64>>,
    lanes_used: u32,
    max_lanes: u32,
    gadget_active: bool,
    gadget_end: u64,
    gadget_lanes: u32,
    chain_base: u64,
    lane_chain: u64,
    /// Last record of the previous rotation when rotations run one at a time.
    serial_tail: Option<u32>,
    /// Rotations whose entanglement distribution outlasted their injection.
    overlap_overruns: u64,
}

impl LayerSched<'_> {
    fn chain(&self, i: usize) -> u64 {
        self.chain_base + i as u64
    }

    fn at(&mut self, t: u64) {
        self.events.push(Reverse(t));
    }

    fn lane_available(&self) -> bool {
        self.params.lanes().is_none_or(|l| self.lanes_used < l)
    }

    fn free_lanes(&self) -> u32 {
        match self.params.lanes() {
            Some(l) => l.saturating_sub(self.lanes_used),
            None => u32::MAX,
        }
    }

    fn start_setup(&mut self, i: usize, t: u64) {
        let chain = self.chain(i);
        let extra: Vec<u32> = self.serial_tail.into_iter().collect();
        let e = self.rots[i].exp.clone();
        let mut end = t;
        if e.measurement_only {
            if e.inter_steps > 0 {
                self.b.push(
                    chain,
                    end,
                    e.inter_steps,
                    Opcode::InterModuleMeas,
                    e.modules.clone(),
                    e.distance,
                    0,
                    0,
                    false,
                    &extra,
                );
                end += e.inter_steps as u64;
            }
            self.b.push(
                chain,
                end,
                e.in_module,
                Opcode::InModuleMeas,
                e.modules.clone(),
                0,
                0,
                0,
                false,
                &extra,
            );
            end += e.in_module as u64;
        } else {
            self.b.push(
                chain,
                end,
                e.entangle,
                Opcode::EntangleXMeas,
                e.modules.clone(),
                0,
                0,
                0,
                false,
                &extra,
            );
            end += e.entangle as u64;
            self.b.push(
                chain,
                end,
                e.in_module,
                Opcode::InModuleMeas,
                e.modules.clone(),
                0,
                0,
                0,
                false,
                &[],
            );
            end += e.in_module as u64;
        }
        for &m in &e.modules {
            self.free_at[m as usize] = end;
        }
        let r = &mut self.rots[i];
        r.phase = Phase::Setup;
        r.phase_end = end;
        self.at(end);
    }

    /// Setup finished: launch the overlapped entanglement distribution and
    /// hold the pivot for injection.
    fn finish_setup(&mut self, i: usize, t: u64) {
        let chain = self.chain(i);
        let e = self.rots[i].exp.clone();
        if e.measurement_only || e.injections == 0 {
            self.finish_rotation_body(i, t);
            return;
        }
        if e.inter_steps > 0 {
            self.b.push(
                chain,
                t,
                e.inter_steps,
                Opcode::InterModuleMeas,
                e.modules.clone(),
                e.distance,
                0,
                0,
                true,
                &[],
            );
            let until = t + e.inter_steps as u64;
            for &m in &e.modules[1..] {
                self.free_at[m as usize] = until;
            }
            self.rots[i].inter_end = until;
            self.at(until);
        }
        self.free_at[e.pivot as usize] = BUSY;
        self.rots[i].phase = Phase::Ready;
    }

    fn start_serial_injection(&mut self, i: usize, t: u64) {
        let chain = self.chain(i);
        let (pivot, rem) = (self.rots[i].exp.pivot, self.rots[i].remaining);
        let rec = self.b.push(
            chain,
            t,
            rem as u32,
            Opcode::TInject,
            vec![pivot],
            0,
            rem as u32,
            0,
            false,
            &[],
        );
        if !self.rots[i].holds_lane {
            self.rots[i].holds_lane = true;
            self.lanes_used += 1;
            self.max_lanes = self.max_lanes.max(self.lanes_used);
        }
        let r = &mut self.rots[i];
        r.phase = Phase::Injecting;
        r.inject_rec = Some(rec);
        r.inject_start = t;
        r.phase_end = t + rem;
        self.at(t + rem);
    }

    fn finish_rotation_body(&mut self, i: usize, t: u64) {
        let e = &self.rots[i].exp;
        if e.measurement_only || e.injections == 0 {
            self.rots[i].phase = Phase::Done;
            self.serial_tail = self.b.last_on_chain(self.chain(i));
            // Overlapped distribution (if any) may still run past t.
            return;
        }
        let (pivot, reset) = (e.pivot, e.reset);
        let chain = self.chain(i);
        if self.rots[i].inter_end > t {
            self.overlap_overruns += 1;
        }
        let start = t.max(self.rots[i].inter_end);
        self.b.join_overlaps(chain);
        self.b
            .push(chain, start, reset, Opcode::ZReset, vec![pivot], 0, 0, 0, false, &[]);
        if self.rots[i].holds_lane {
            self.rots[i].holds_lane = false;
            self.lanes_used -= 1;
        }
        let r = &mut self.rots[i];
        r.phase = Phase::Reset;
        r.phase_end = start + reset as u64;
        self.free_at[pivot as usize] = r.phase_end;
        let end = r.phase_end;
        self.at(end);
    }

    fn try_gadget(&mut self, t: u64) {
        if self.policy != ExtractorPolicy::Parallel || self.gadget_active {
            return;
        }
        let Some(i) = (0..self.rots.len())
            .filter(|&i| matches!(self.rots[i].phase, Phase::Ready | Phase::Injecting))
            .max_by_key(|&i| (self.rots[i].remaining_at(t), Reverse(i)))
        else {
            return;
        };
        let rem = self.rots[i].remaining_at(t);
        let pivot = self.rots[i].exp.pivot;
        let free: Vec<u32> = (0..self.free_at.len() as u32)
            .filter(|&m| m != pivot && self.free_at[m as usize] <= t)
            .collect();
        let u = free.len() as u32;
        if u < self.params.ghz_min_unutilized {
            return;
        }
        let own = self.rots[i].holds_lane as u32;
        let sites = own.saturating_add(self.free_lanes());
        let w = (u / 2 + 1).min(sites) as u64;
        let overhead = (self.params.ghz_prep_timesteps + self.params.ghz_teardown_timesteps) as u64;
        if w < 2 || overhead + rem.div_ceil(w) >= rem {
            return;
        }
        let chain = self.chain(i);
        if self.rots[i].phase == Phase::Injecting {
            let done = t - self.rots[i].inject_start;
            let rec = self.rots[i].inject_rec.expect("injecting rotation has a record");
            let r = self.b.record_mut(rec);
            r.duration = done as u32;
            r.t_count = done as u32;
        }
        let lanes: Vec<u32> = free[..2 * (w as usize - 1)].to_vec();
        let mut all = vec![pivot];
        all.extend(&lanes);
        let dist = lanes.iter().map(|&m| m.abs_diff(pivot)).max().unwrap_or(0);
        let pairs = 2 * (w as u32 - 1);
        let prep = self.params.ghz_prep_timesteps;
        let tear = self.params.ghz_teardown_timesteps;
        self.b
            .push(chain, t, prep, Opcode::GhzPrep, all.clone(), dist, 0, pairs, false, &[]);
        let exec = rem.div_ceil(w);
        let x0 = t + prep as u64;
        let (q, extra) = (rem / w, rem % w);
        for k in 0..w {
            let n = q + (k < extra) as u64;
            if n == 0 {
                continue;
            }
            let rec = if k == 0 {
                self.b.push(
                    chain,
                    x0,
                    n as u32,
                    Opcode::TInject,
                    vec![pivot],
                    0,
                    n as u32,
                    0,
                    false,
                    &[],
                )
            } else {
                let pair = vec![lanes[2 * k as usize - 2], lanes[2 * k as usize - 1]];
                self.lane_chain += 1;
                let lc = self.lane_chain;
                self.b.push(
                    lc,
                    x0,
                    n as u32,
                    Opcode::TInject,
                    pair,
                    0,
                    n as u32,
                    n as u32,
                    false,
                    &[],
                )
            };
            let r = self.b.record_mut(rec);
            r.lane = k as u32;
            r.lanes = w as u32;
        }
        let td = x0 + exec;
        self.b.push(
            chain,
            td,
            tear,
            Opcode::GhzTeardown,
            all,
            dist,
            0,
            2 * pairs,
            false,
            &[],
        );
        let end = td + tear as u64;
        for &m in &lanes {
            self.free_at[m as usize] = end;
        }
        // The pivot site stays with the rotation until its reset; the other
        // w - 1 sites return when the gadget is torn down.
        self.lanes_used += w as u32 - own;
        self.max_lanes = self.max_lanes.max(self.lanes_used);
        self.gadget_lanes = w as u32 - 1;
        self.gadget_active = true;
        self.gadget_end = end;
        let r = &mut self.rots[i];
        r.holds_lane = true;
        r.phase = Phase::Gadget;
        r.remaining = 0;
        r.phase_end = end;
        r.inject_rec = None;
        self.at(end);
    }

    fn run(&mut self, t0: u64) -> u64 {
        self.at(t0);
        let serial = match self.policy {
            ExtractorPolicy::Base => !self.params.base_concurrent,
            ExtractorPolicy::Parallel => !self.params.parallel_concurrent,
        };
        // Pending rotations bucketed by module set, each bucket in layer order;
        // first-fit picks the lowest index among buckets whose modules are free.
        let mut buckets: BTreeMap<Vec<u32>, VecDeque<usize>> = BTreeMap::new();
        for (i, r) in self.rots.iter().enumerate() {
            buckets.entry(r.exp.modules.clone()).or_default().push_back(i);
        }
        let mut next_serial = 0usize;
        let mut active: Vec<usize> = Vec::new();
        let mut done = 0usize;
        let mut last = t0;
        while let Some(Reverse(t)) = self.events.pop() {
            while self.events.peek() == Some(&Reverse(t)) {
                self.events.pop();
            }
            last = last.max(t);
            if self.gadget_active && self.gadget_end <= t {
                self.gadget_active = false;
                self.lanes_used -= self.gadget_lanes;
                self.gadget_lanes = 0;
            }
            for &i in &active {
                if self.rots[i].phase_end > t {
                    continue;
                }
                match self.rots[i].phase {
                    Phase::Setup => self.finish_setup(i, t),
                    Phase::Injecting | Phase::Gadget => {
                        self.rots[i].remaining = 0;
                        self.finish_rotation_body(i, t);
                    }
                    Phase::Reset => {
                        self.rots[i].phase = Phase::Done;
                        self.serial_tail = self.b.last_on_chain(self.chain(i));
                    }
                    _ => {}
                }
            }
            let before = active.len();
            active.retain(|&i| self.rots[i].phase != Phase::Done);
            done += before - active.len();
            self.try_gadget(t);
            for &i in &active {
                if self.rots[i].phase == Phase::Ready && self.lane_available() {
                    self.start_serial_injection(i, t);
                }
            }
            if serial {
                if active.is_empty() && next_serial < self.rots.len() {
                    let i = next_serial;
                    next_serial += 1;
                    self.start_setup(i, t);
                    active.push(i);
                }
            } else {
                loop {
                    if self.params.lanes().is_some_and(|l| active.len() as u32 >= l) {
                        break;
                    }
                    let pick = buckets
                        .iter()
                        .filter(|(ms, _)| ms.iter().all(|&m| self.free_at[m as usize] <= t))
                        .filter_map(|(ms, q)| q.front().map(|&i| (i, ms.clone())))
                        .min();
                    let Some((i, ms)) = pick else { break };
                    let q = buckets.get_mut(&ms).expect("bucket exists");
                    q.pop_front();
                    if q.is_empty() {
                        buckets.remove(&ms);
                    }
                    self.start_setup(i, t);
                    active.push(i);
                }
            }
            // Rotations that finish inside start_setup (none today) or were
            // never started keep the loop alive through their events.
            active.retain(|&i| self.rots[i].phase != Phase::Done);
            if done == self.rots.len() {
                break;
            }
        }
        debug_assert_eq!(done, self.rots.len(), "layer did not drain");
        last.max(self.rots.iter().map(|r| r.inter_end).max().unwrap_or(0))
    }
}

impl Rot {
    fn remaining_at(&self, t: u64) -> u64 {
        match self.phase {
            Phase::Injecting => self.remaining - (t - self.inject_start).min(self.remaining),
            _ => self.remaining,
        }
    }
}

/// Compiles `circuit` layer by layer under `policy`.
pub fn schedule(
    circuit: &LogicalCircuit,
    map: &ModuleMap,
    params: &ExtractorParams,
    policy: ExtractorPolicy,
) -> Result<InstructionTrace> {
    params.validate()?;
    if circuit.num_qubits != map.num_qubits as usize {
        return Err(Error::Compile(format!(
            "circuit has {} qubits but the module map covers {}",
            circuit.num_qubits, map.num_qubits
        )));
    }
    let name = match policy {
        ExtractorPolicy::Base => "extractor-base",
        ExtractorPolicy::Parallel => "extractor-parallel",
    };
    let mut b = TraceBuilder::new(name, map.num_modules);
    let mut t = 0u64;
    let mut index = 0u64;
    let mut max_lanes = 0;
    let mut overruns = 0;
    for (li, layer) in circuit.layers.iter().enumerate() {
        b.begin_layer(li as u32);
        let mut rots = Vec::with_capacity(layer.len());
        for r in layer {
            let exp = expand_rotation(r, map, params, index)?;
            index += 1;
            rots.push(Rot {
                remaining: exp.injections,
                exp,
                phase: Phase::Pending,
                phase_end: 0,
                inject_rec: None,
                inject_start: 0,
                holds_lane: false,
                inter_end: 0,
            });
        }
        let mut s = LayerSched {
            params,
            policy,
            b: &mut b,
            free_at: vec![t; map.num_modules as usize],
            rots,
            events: BinaryHeap::new(),
            lanes_used: 0,
            max_lanes: 0,
            gadget_active: false,
            gadget_end: 0,
            gadget_lanes: 0,
            chain_base: index - layer.len() as u64,
            lane_chain: 1 << 48,
            serial_tail: None,
            overlap_overruns: 0,
        };
        t = s.run(t);
        max_lanes = max_lanes.max(s.max_lanes);
        overruns += s.overlap_overruns;
    }
    if overruns > 0 {
        log::warn!("{name}: entanglement distribution outlasted T injection on {overruns} rotations");
    }
    Ok(b.finish(index, max_lanes))
}

pub fn schedule_base(circuit: &LogicalCircuit, map: &ModuleMap, params: &ExtractorParams) -> Result<InstructionTrace> {
    schedule(circuit, map, params, ExtractorPolicy::Base)
}

pub fn schedule_parallel_injection(
    circuit: &LogicalCircuit,
    map: &ModuleMap,
    params: &ExtractorParams,
) -> Result<InstructionTrace> {
    schedule(circuit, map, params, ExtractorPolicy::Parallel)
}
