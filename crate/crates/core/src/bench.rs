//! Trotter–Suzuki circuits for the four dynamics benchmarks.

use serde::{Deserialize, Serialize};

use crate::circuit::{LogicalCircuit, RotationKind, RotationOp};
use crate::error::{input, Result};
use crate::hamiltonian::{build_heisenberg, build_tfim, jordan_wigner_hubbard, HamiltonianTerm, IsingRange};
use crate::synthesis::{circuit_t_count, rotation_t_count, SynthesisParams};

/// First-fit partition of terms into mutually commuting groups, preserving order.
pub fn commuting_groups(terms: &[HamiltonianTerm]) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, t) in terms.iter().enumerate() {
        let slot = groups
            .iter()
            .position(|g| g.iter().all(|&j| terms[j].pauli.commutes_fast(&t.pauli)));
        match slot {
            Some(g) => groups[g].push(i),
            None => groups.push(vec![i]),
        }
    }
    groups
}

/// Suzuki weights: `S_{2k}(dt) = S_{2k-2}(p dt)² S_{2k-2}((1-4p) dt) S_{2k-2}(p dt)²`.
pub fn suzuki_p(k: u32) -> f64 {
    let e = 1.0 / (2.0 * k as f64 - 1.0);
    1.0 / (4.0 - 4f64.powf(e))
}

/// Time multipliers of the second-order stages making up one step of `order`.
pub fn suzuki_stage_weights(order: u32) -> Result<Vec<f64>> {
    if !matches!(order, 2 | 4 | 6) {
        return input(format!("unsupported Trotter order {order}; use 2, 4 or 6"));
    }
    let mut w = vec![1.0];
    let mut k = 2;
    while 2 * k <= order {
        let p = suzuki_p(k);
        let mut next = Vec::with_capacity(w.len() * 5);
        for f in [p, p, 1.0 - 4.0 * p, p, p] {
            next.extend(w.iter().map(|x| x * f));
        }
        w = next;
        k += 1;
    }
    Ok(w)
}

/// Symmetric second-order sequence over groups: (group, time fraction).
pub fn second_order_sequence(n_groups: usize) -> Vec<(usize, f64)> {
    match n_groups {
        0 => Vec::new(),
        1 => vec![(0, 1.0)],
        k => {
            let mut s: Vec<(usize, f64)> = (0..k - 1).map(|g| (g, 0.5)).collect();
            s.push((k - 1, 1.0));
            s.extend((0..k - 1).rev().map(|g| (g, 0.5)));
            s
        }
    }
}

/// One ordered list of (term index, time) exponentials per Trotter step.
pub fn trotter_step_schedule(terms: &[HamiltonianTerm], order: u32, dt: f64) -> Result<Vec<(usize, f64)>> {
    let groups = commuting_groups(terms);
    let s2 = second_order_sequence(groups.len());
    let mut out = Vec::new();
    for w in suzuki_stage_weights(order)? {
        for &(g, frac) in &s2 {
            for &t in &groups[g] {
                out.push((t, w * frac * dt));
            }
        }
    }
    Ok(out)
}

/// Product-formula circuit for `exp(-i H time)` with `steps` Trotter steps.
pub fn trotterize(terms: &[HamiltonianTerm], order: u32, steps: u32, time: f64, eps: f64) -> Result<LogicalCircuit> {
    if steps == 0 {
        return input("at least one Trotter step is required");
    }
    if !(time > 0.0) {
        return input("evolution time must be positive");
    }
    let Some(first) = terms.first() else {
        return input("empty Hamiltonian");
    };
    let n = first.pauli.len();
    let schedule = trotter_step_schedule(terms, order, time / steps as f64)?;
    let mut rots = Vec::with_capacity(schedule.len() * steps as usize);
    for _ in 0..steps {
        for &(t, tau) in &schedule {
            let angle = terms[t].coefficient * tau;
            rots.push(RotationOp::new(
                terms[t].pauli.clone(),
                angle,
                eps,
                RotationKind::classify(angle),
            )?);
        }
    }
    LogicalCircuit::from_rotations(n, rots)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Heisenberg2d,
    TfimNn2d,
    TfimLr2d,
    FermiHubbard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSpec {
    pub name: String,
    pub model: Model,
    pub rows: usize,
    pub cols: usize,
    pub trotter_order: u32,
    pub trotter_steps: u32,
    pub evolution_time: f64,
    pub precision: f64,
    #[serde(default = "one")]
    pub jx: f64,
    #[serde(default = "one")]
    pub jy: f64,
    #[serde(default = "one")]
    pub jz: f64,
    #[serde(default = "one")]
    pub j: f64,
    #[serde(default = "one")]
    pub field: f64,
    #[serde(default = "two")]
    pub alpha: f64,
    #[serde(default = "one")]
    pub hopping: f64,
    #[serde(default = "one")]
    pub onsite: f64,
    /// Build one Trotter step and scale results by the step count.
    #[serde(default)]
    pub single_step: bool,
    /// Pin the total T count; results are scaled from the built circuit to it.
    #[serde(default)]
    pub t_count_target: Option<f64>,
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

/// Names accepted by [`BenchmarkSpec::preset`].
pub const PRESETS: [&str; 4] = ["heisenberg", "tfim-lr", "tfim-nn", "fermi-hubbard"];

impl BenchmarkSpec {
    fn base(name: &str, model: Model, rows: usize, cols: usize) -> Self {
        BenchmarkSpec {
            name: name.into(),
            model,
            rows,
            cols,
            trotter_order: 4,
            trotter_steps: 1,
            evolution_time: 10.0,
            precision: 1e-10,
            jx: 1.0,
            jy: 1.0,
            jz: 1.0,
            j: 1.0,
            field: 1.0,
            alpha: 2.0,
            hopping: 1.0,
            onsite: 1.0,
            single_step: false,
            t_count_target: None,
        }
    }

    /// The four quantum-advantage instances, with T counts pinned to their
    /// reference totals.
    pub fn preset(name: &str) -> Result<Self> {
        let s = match name {
            "heisenberg" => BenchmarkSpec {
                trotter_order: 6,
                trotter_steps: 300,
                evolution_time: 50.0,
                single_step: true,
                t_count_target: Some(1.5e7),
                ..Self::base(name, Model::Heisenberg2d, 5, 10)
            },
            "tfim-lr" => BenchmarkSpec {
                t_count_target: Some(5e6),
                ..Self::base(name, Model::TfimLr2d, 10, 10)
            },
            "tfim-nn" => BenchmarkSpec {
                t_count_target: Some(3e5),
                ..Self::base(name, Model::TfimNn2d, 10, 10)
            },
            "fermi-hubbard" => BenchmarkSpec {
                evolution_time: 1.0,
                t_count_target: Some(1.1e6),
                ..Self::base(name, Model::FermiHubbard, 10, 10)
            },
            other => return input(format!("unknown benchmark preset {other:?}; known: {PRESETS:?}")),
        };
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !matches!(self.trotter_order, 2 | 4 | 6) {
            return input(format!("unsupported Trotter order {}", self.trotter_order));
        }
        if self.trotter_steps == 0 {
            return input("trotter_steps must be at least 1");
        }
        if !(self.evolution_time > 0.0) {
            return input("evolution_time must be positive");
        }
        if !(self.precision > 0.0 && self.precision < 1.0) {
            return input("precision must lie in (0, 1)");
        }
        if let Some(t) = self.t_count_target {
            if !(t > 0.0) {
                return input("t_count_target must be positive");
            }
        }
        Ok(())
    }

    pub fn num_qubits(&self) -> usize {
        match self.model {
            Model::FermiHubbard => 2 * self.rows * self.cols,
            _ => self.rows * self.cols,
        }
    }

    pub fn terms(&self) -> Result<Vec<HamiltonianTerm>> {
        match self.model {
            Model::Heisenberg2d => build_heisenberg(self.rows, self.cols, self.jx, self.jy, self.jz),
            Model::TfimNn2d => build_tfim(self.rows, self.cols, self.j, self.field, IsingRange::Nearest),
            Model::TfimLr2d => build_tfim(
                self.rows,
                self.cols,
                self.j,
                self.field,
                IsingRange::PowerLaw { alpha: self.alpha },
            ),
            Model::FermiHubbard => jordan_wigner_hubbard(self.rows, self.cols, self.hopping, self.onsite),
        }
    }

    /// Builds the circuit (one step when `single_step`) and the factor that
    /// converts its simulated time and error into the full workload.
    pub fn generate(&self, synthesis: &SynthesisParams) -> Result<GeneratedBenchmark> {
        self.generate_at(self.precision, synthesis)
    }

    /// Like [`generate`](Self::generate) but synthesizing to `precision`. A
    /// pinned T count keeps its meaning at the benchmark's own precision, so the
    /// scale factor fixes the rotation count and the T count follows ε.
    pub fn generate_at(&self, precision: f64, synthesis: &SynthesisParams) -> Result<GeneratedBenchmark> {
        self.validate()?;
        let terms = self.terms()?;
        let dt = self.evolution_time / self.trotter_steps as f64;
        let built_steps = if self.single_step { 1 } else { self.trotter_steps };
        let circuit = trotterize(
            &terms,
            self.trotter_order,
            built_steps,
            dt * built_steps as f64,
            precision,
        )?;
        let circuit_t = circuit_t_count(&circuit, synthesis)?;
        let step_scale = self.trotter_steps as f64 / built_steps as f64;
        let mut reference_t = 0u64;
        for r in circuit.rotations() {
            let at_spec = RotationOp {
                precision: self.precision,
                ..r.clone()
            };
            reference_t += rotation_t_count(&at_spec, synthesis)?;
        }
        let scale_factor = match self.t_count_target {
            Some(target) if reference_t > 0 => target / reference_t as f64,
            _ => step_scale,
        };
        Ok(GeneratedBenchmark {
            circuit,
            built_steps,
            step_scale,
            circuit_t_count: circuit_t,
            estimated_t_count: circuit_t as f64 * step_scale,
            scale_factor,
        })
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedBenchmark {
    pub circuit: LogicalCircuit,
    pub built_steps: u32,
    /// Full step count over built step count.
    pub step_scale: f64,
    pub circuit_t_count: u64,
    /// T count of the full, unpinned workload.
    pub estimated_t_count: f64,
    /// Multiplier applied to simulated time and error accounting.
    pub scale_factor: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_counts() {
        assert_eq!(suzuki_stage_weights(2).unwrap().len(), 1);
        assert_eq!(suzuki_stage_weights(4).unwrap().len(), 5);
        assert_eq!(suzuki_stage_weights(6).unwrap().len(), 25);
        assert!(suzuki_stage_weights(3).is_err());
        for order in [2, 4, 6] {
            let total: f64 = suzuki_stage_weights(order).unwrap().iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_term_leaves() {
        let terms = vec![HamiltonianTerm::new("XZ".parse().unwrap(), 0.7).unwrap()];
        assert_eq!(trotterize(&terms, 2, 1, 1.0, 1e-3).unwrap().rotation_count(), 1);
        assert_eq!(trotterize(&terms, 4, 1, 1.0, 1e-3).unwrap().rotation_count(), 5);
        assert_eq!(trotterize(&terms, 6, 2, 1.0, 1e-3).unwrap().rotation_count(), 50);
    }

    #[test]
    fn symmetric_sequence() {
        assert_eq!(
            second_order_sequence(3),
            vec![(0, 0.5), (1, 0.5), (2, 1.0), (1, 0.5), (0, 0.5)]
        );
    }

    #[test]
    fn presets_exist() {
        for p in PRESETS {
            BenchmarkSpec::preset(p).unwrap().validate().unwrap();
        }
        assert!(BenchmarkSpec::preset("nope").is_err());
    }
}
