//! Code parameters, instruction costs, error accounting and qubit counts.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::trace::Opcode;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeParams {
    pub n: u32,
    pub k: u32,
    pub d: u32,
    pub label: String,
}

impl CodeParams {
    pub fn new(n: u32, k: u32, d: u32, label: &str) -> Result<Self> {
        let c = CodeParams {
            n,
            k,
            d,
            label: label.into(),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.n < self.k || self.d == 0 {
            return input(format!("invalid code [[{}, {}, {}]]", self.n, self.k, self.d));
        }
        Ok(())
    }

    pub fn gross() -> Self {
        Self::new(144, 12, 12, "gross").unwrap()
    }

    pub fn two_gross() -> Self {
        Self::new(288, 12, 18, "two-gross").unwrap()
    }

    pub fn surface17() -> Self {
        Self::new(289, 1, 17, "surface-17").unwrap()
    }

    pub fn color17() -> Self {
        Self::new(217, 1, 17, "color-17").unwrap()
    }

    pub fn hgp_simplex() -> Self {
        Self::new(1922, 50, 16, "hgp-simplex").unwrap()
    }

    pub fn lifted_product() -> Self {
        Self::new(1020, 136, 20, "lifted-product").unwrap()
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "gross" => Ok(Self::gross()),
            "two-gross" => Ok(Self::two_gross()),
            "surface-17" | "surface" => Ok(Self::surface17()),
            "color-17" | "color" => Ok(Self::color17()),
            "hgp-simplex" | "hgps" => Ok(Self::hgp_simplex()),
            "lifted-product" | "lp" => Ok(Self::lifted_product()),
            other => input(format!("unknown code preset {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstrCost {
    pub time_ms: f64,
    pub error: f64,
}

impl InstrCost {
    const fn new(time_ms: f64, error: f64) -> Self {
        InstrCost { time_ms, error }
    }
}

/// Per-instruction durations and failure probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostModel {
    pub idle: InstrCost,
    pub shift_automorphism: InstrCost,
    pub in_module: InstrCost,
    pub inter_module: InstrCost,
    /// Adapter shuttling per module width travelled.
    pub shuttle_ms_per_module: f64,
    /// One cultivation attempt, and the error of an accepted state.
    pub t_cultivation: InstrCost,
    /// One transversal surface-code layer.
    pub transversal_layer: InstrCost,
    /// One timestep of load/store surgery.
    pub surgery: InstrCost,
    /// Syndrome rounds per timestep and the time of one round; the remainder
    /// of an instruction's time is gate and shuttle overhead.
    pub rounds_per_timestep: u32,
    pub measurement_ms: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            idle: InstrCost::new(182.0, 1e-20),
            shift_automorphism: InstrCost::new(182.0, 1e-15),
            in_module: InstrCost::new(183.0, 1e-11),
            inter_module: InstrCost::new(183.0, 1e-9),
            shuttle_ms_per_module: 0.14,
            t_cultivation: InstrCost::new(143.0, 1e-8),
            transversal_layer: InstrCost::new(183.0, 1e-11),
            surgery: InstrCost::new(183.0, 1e-9),
            rounds_per_timestep: 18,
            measurement_ms: 10.0,
        }
    }
}

/// Gates executed per syndrome round, used to derive instruction times from
/// hardware parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GateBudget {
    pub idle: u32,
    pub in_module: u32,
}

impl Default for GateBudget {
    fn default() -> Self {
        GateBudget {
            idle: 111,
            in_module: 167,
        }
    }
}

fn ms_to_us(ms: f64) -> u64 {
    (ms * 1000.0).round() as u64
}

impl CostModel {
    /// Instruction times rebuilt as `d` rounds of measurement plus serial gates.
    pub fn derived(hw: &HardwareParams, code: &CodeParams, gates: GateBudget) -> Self {
        let d = code.d as f64;
        let t = |g: u32| d * hw.measurement_time_ms + d * g as f64 * hw.gate_time_us / 1000.0;
        let base = CostModel::default();
        CostModel {
            idle: InstrCost::new(t(gates.idle), base.idle.error),
            shift_automorphism: InstrCost::new(t(gates.idle), base.shift_automorphism.error),
            in_module: InstrCost::new(t(gates.in_module), base.in_module.error),
            inter_module: InstrCost::new(t(gates.in_module), base.inter_module.error),
            transversal_layer: InstrCost::new(t(gates.in_module), base.transversal_layer.error),
            surgery: InstrCost::new(t(gates.in_module), base.surgery.error),
            rounds_per_timestep: code.d,
            measurement_ms: hw.measurement_time_ms,
            ..base
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            ("idle", self.idle),
            ("shift_automorphism", self.shift_automorphism),
            ("in_module", self.in_module),
            ("inter_module", self.inter_module),
            ("t_cultivation", self.t_cultivation),
            ("transversal_layer", self.transversal_layer),
            ("surgery", self.surgery),
        ];
        for (name, c) in all {
            if !(c.time_ms > 0.0) {
                return input(format!("costs.{name}.time_ms must be positive"));
            }
            if !(0.0..=1.0).contains(&c.error) {
                return input(format!("costs.{name}.error must lie in [0, 1]"));
            }
        }
        if !(self.shuttle_ms_per_module >= 0.0) {
            return input("costs.shuttle_ms_per_module must be nonnegative");
        }
        Ok(())
    }

    /// Cost class of an opcode, before distance-dependent shuttling.
    pub fn class(&self, op: Opcode) -> InstrCost {
        match op {
            Opcode::Idle => self.idle,
            Opcode::ShiftAutomorphism => self.shift_automorphism,
            Opcode::InModuleMeas
            | Opcode::EntangleXMeas
            | Opcode::ZReset
            | Opcode::TInject
            | Opcode::InMemoryClifford
            | Opcode::InMemoryT => self.in_module,
            Opcode::InterModuleMeas | Opcode::GhzPrep | Opcode::GhzTeardown => self.inter_module,
            Opcode::TransversalLayer => self.transversal_layer,
            Opcode::Load | Opcode::Store => self.surgery,
        }
    }

    pub fn shuttle_us(&self, distance: u32) -> u64 {
        ms_to_us(self.shuttle_ms_per_module * distance as f64)
    }

    /// Duration of one unit step of `op` in microseconds.
    pub fn unit_time_us(&self, op: Opcode, distance: u32) -> u64 {
        let base = ms_to_us(self.class(op).time_ms);
        match op {
            Opcode::InterModuleMeas | Opcode::GhzPrep | Opcode::GhzTeardown => base + self.shuttle_us(distance),
            _ => base,
        }
    }

    /// Gate and shuttle share of one unit step, in microseconds.
    pub fn unit_overhead_us(&self, op: Opcode, distance: u32) -> u64 {
        let meas = ms_to_us(self.rounds_per_timestep as f64 * self.measurement_ms);
        self.unit_time_us(op, distance).saturating_sub(meas)
    }

    pub fn cultivation_attempt_us(&self) -> u64 {
        ms_to_us(self.t_cultivation.time_ms)
    }

    /// Reporting timestep (one in-module measurement) in microseconds.
    pub fn timestep_us(&self) -> u64 {
        ms_to_us(self.in_module.time_ms)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HardwareParams {
    pub gate_time_us: f64,
    pub shuttle_speed_um_per_us: f64,
    pub atom_spacing_um: f64,
    pub measurement_time_ms: f64,
    pub physical_error: f64,
    pub max_interaction_distance: f64,
    pub coherence_time_s: f64,
    /// Width of one module in atom sites.
    pub module_width_atoms: u32,
}

impl Default for HardwareParams {
    fn default() -> Self {
        HardwareParams {
            gate_time_us: 1.0,
            shuttle_speed_um_per_us: 0.5,
            atom_spacing_um: 1.5,
            measurement_time_ms: 10.0,
            physical_error: 1e-3,
            max_interaction_distance: 15.0,
            coherence_time_s: 100.0,
            module_width_atoms: 24,
        }
    }
}

impl HardwareParams {
    pub fn validate(&self) -> Result<()> {
        let vals = [
            self.gate_time_us,
            self.shuttle_speed_um_per_us,
            self.atom_spacing_um,
            self.measurement_time_ms,
            self.physical_error,
            self.max_interaction_distance,
            self.coherence_time_s,
            self.module_width_atoms as f64,
        ];
        if vals.iter().all(|v| *v > 0.0) {
            Ok(())
        } else {
            input("hardware parameters must all be positive")
        }
    }

    /// Constant-velocity time to move one module width, in ms.
    pub fn kinematic_shuttle_ms_per_module(&self) -> f64 {
        self.module_width_atoms as f64 * self.atom_spacing_um / self.shuttle_speed_um_per_us / 1000.0
    }
}

/// Physical-qubit constants beyond the code blocks themselves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QubitLayout {
    /// LPU, pivot and adapter atoms attached to each module.
    pub lpu_atoms_per_module: u64,
    /// Adapter atoms shared by the whole machine.
    pub adapter_row_atoms: u64,
    /// Atoms per cultivation factory.
    pub factory_atoms: u64,
}

impl Default for QubitLayout {
    fn default() -> Self {
        QubitLayout {
            lpu_atoms_per_module: 180,
            adapter_row_atoms: 0,
            factory_atoms: 787,
        }
    }
}

impl QubitLayout {
    /// Atoms in one module: data plus check qubits of the block, plus its LPU share.
    pub fn module_atoms(&self, code: &CodeParams) -> u64 {
        2 * code.n as u64 + self.lpu_atoms_per_module
    }

    pub fn extractor_qubits(&self, modules: u32, code: &CodeParams, factories: u32) -> u64 {
        modules as u64 * self.module_atoms(code) + self.adapter_row_atoms + factories as u64 * self.factory_atoms
    }

    /// One surface-code patch (data and measure qubits) per logical qubit.
    pub fn transversal_qubits(&self, logical: u32, patch: &CodeParams, factories: u32) -> u64 {
        logical as u64 * 2 * patch.n as u64 + factories as u64 * self.factory_atoms
    }

    pub fn hybrid_qubits(
        &self,
        modules: u32,
        memory: &CodeParams,
        compute_patches: u32,
        patch: &CodeParams,
        factories: u32,
    ) -> u64 {
        self.extractor_qubits(modules, memory, factories) + compute_patches as u64 * 2 * patch.n as u64
    }
}

/// Counts of executed operations with their failure probabilities.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorLedger {
    entries: BTreeMap<String, LedgerEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub count: f64,
    pub probability: f64,
}

impl ErrorLedger {
    pub fn add(&mut self, label: &str, probability: f64, count: f64) {
        let e = self
            .entries
            .entry(format!("{label}@{probability:e}"))
            .or_insert(LedgerEntry {
                count: 0.0,
                probability,
            });
        e.count += count;
    }

    pub fn scale(&mut self, factor: f64) {
        for e in self.entries.values_mut() {
            e.count *= factor;
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &LedgerEntry)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Sum of `count · ln(1 - p)`.
    pub fn log_success(&self) -> f64 {
        self.entries
            .values()
            .map(|e| {
                if e.probability >= 1.0 {
                    if e.count > 0.0 {
                        f64::NEG_INFINITY
                    } else {
                        0.0
                    }
                } else {
                    e.count * (-e.probability).ln_1p()
                }
            })
            .sum()
    }

    /// Expected number of failures, `Σ count · p`.
    pub fn expected_failures(&self) -> f64 {
        self.entries.values().map(|e| e.count * e.probability).sum()
    }
}

/// `∏(1 - p_i) · (1 - ε)^R`, accumulated in log space.
pub fn success_probability(ledger: &ErrorLedger, eps: f64, rotations: f64) -> f64 {
    let synth = if eps > 0.0 { rotations * (-eps).ln_1p() } else { 0.0 };
    (ledger.log_success() + synth).exp()
}

/// Qubit-seconds of a run.
pub fn spacetime(qubits: u64, wall_seconds: f64) -> f64 {
    qubits as f64 * wall_seconds
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn success_examples() {
        let mut l = ErrorLedger::default();
        assert_eq!(success_probability(&l, 1e-10, 0.0), 1.0);
        l.add("T", 1e-8, 3e5);
        let p = success_probability(&l, 0.0, 0.0);
        assert!((p - 0.997).abs() < 1e-4, "{p}");
        let mut half = ErrorLedger::default();
        half.add("x", 0.5, 1.0);
        assert!((success_probability(&half, 0.0, 0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn qubit_counts() {
        let l = QubitLayout::default();
        let c = CodeParams::two_gross();
        assert_eq!(l.extractor_qubits(10, &c, 5), 11495);
        assert_eq!(l.extractor_qubits(10, &c, 6) - l.extractor_qubits(10, &c, 5), 787);
        assert_eq!(l.extractor_qubits(5, &c, 0), 5 * 756);
        assert_eq!(l.transversal_qubits(50, &CodeParams::surface17(), 1), 29687);
    }

    #[test]
    fn derived_times_match_table() {
        let d = CostModel::derived(
            &HardwareParams::default(),
            &CodeParams::two_gross(),
            GateBudget::default(),
        );
        let t = CostModel::default();
        for op in [Opcode::Idle, Opcode::InModuleMeas, Opcode::InterModuleMeas] {
            let diff = (d.class(op).time_ms - t.class(op).time_ms).abs();
            assert!(diff <= 2.0, "{op:?} differs by {diff} ms");
        }
    }

    #[test]
    fn inter_module_time_includes_shuttle() {
        let c = CostModel::default();
        assert_eq!(c.unit_time_us(Opcode::InterModuleMeas, 0), 183_000);
        assert_eq!(c.unit_time_us(Opcode::InterModuleMeas, 10), 184_400);
        assert_eq!(c.unit_overhead_us(Opcode::InModuleMeas, 0), 3_000);
    }
}
