//! Architecture selection, compilation and qubit accounting glued to the
//! simulator.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::circuit::{LogicalCircuit, RotationKind};
use crate::error::{Error, Result};
use crate::extractor::{map_qubits, schedule, ExtractorParams, ExtractorPolicy};
use crate::factory::FactoryConfig;
use crate::hybrid::{hybrid_schedule, HybridConfig};
use crate::resources::{CodeParams, CostModel, QubitLayout};
use crate::sim::{run, SimParams, SimReport};
use crate::synthesis::SynthesisParams;
use crate::trace::InstructionTrace;
use crate::transversal::transversal_schedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Architecture {
    ExtractorBase,
    ExtractorParallel,
    Transversal,
    Hybrid,
}

impl Architecture {
    pub const ALL: [Architecture; 4] = [
        Architecture::ExtractorBase,
        Architecture::ExtractorParallel,
        Architecture::Transversal,
        Architecture::Hybrid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Architecture::ExtractorBase => "extractor-base",
            Architecture::ExtractorParallel => "extractor-parallel",
            Architecture::Transversal => "transversal",
            Architecture::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Architecture::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| {
            Error::Config(format!(
                "unknown architecture {s:?}; expected one of extractor-base, extractor-parallel, transversal, hybrid"
            ))
        })
    }
}

/// Everything about the machine except the factory count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Machine {
    /// qLDPC memory code for extractor and hybrid backends.
    pub code: CodeParams,
    /// Surface-code patch for transversal and hybrid compute.
    pub patch: CodeParams,
    pub layout: QubitLayout,
    pub synthesis: SynthesisParams,
    pub extractor: ExtractorParams,
    pub hybrid: HybridConfig,
    pub cost: CostModel,
    pub factory: FactoryConfig,
}

impl Default for Machine {
    fn default() -> Self {
        Machine {
            code: CodeParams::two_gross(),
            patch: CodeParams::surface17(),
            layout: QubitLayout::default(),
            synthesis: SynthesisParams::default(),
            extractor: ExtractorParams::default(),
            hybrid: HybridConfig::default(),
            cost: CostModel::default(),
            factory: FactoryConfig::default(),
        }
    }
}

impl Machine {
    pub fn validate(&self) -> Result<()> {
        self.code.validate()?;
        self.patch.validate()?;
        self.synthesis.validate()?;
        self.extractor.validate()?;
        self.hybrid.validate()?;
        self.cost.validate()?;
        self.factory.validate()
    }
}

/// A circuit plus the factor scaling it to the full workload.
#[derive(Debug, Clone)]
pub struct Workload {
    pub name: String,
    pub circuit: LogicalCircuit,
    pub scale_factor: f64,
}

impl Workload {
    /// Synthesized rotations and their (mean) precision.
    fn synthesis_budget(&self) -> (u64, f64) {
        let (mut n, mut sum) = (0u64, 0.0);
        for r in self.circuit.rotations().filter(|r| r.kind == RotationKind::Arbitrary) {
            n += 1;
            sum += r.precision;
        }
        (n, if n == 0 { 0.0 } else { sum / n as f64 })
    }
}

#[derive(Debug, Clone)]
pub struct Compiled {
    pub architecture: Architecture,
    pub factories: u32,
    pub trace: InstructionTrace,
    pub physical_qubits: u64,
}

pub fn physical_qubits(arch: Architecture, n: usize, m: &Machine, factories: u32) -> Result<u64> {
    let l = &m.layout;
    Ok(match arch {
        Architecture::ExtractorBase | Architecture::ExtractorParallel => {
            let map = map_qubits(n as u32, &m.code, m.extractor.reserve_pivot)?;
            l.extractor_qubits(map.num_modules, &m.code, factories)
        }
        Architecture::Transversal => l.transversal_qubits(n as u32, &m.patch, factories),
        Architecture::Hybrid => {
            let map = map_qubits(n as u32, &m.code, m.extractor.reserve_pivot)?;
            l.hybrid_qubits(map.num_modules, &m.code, m.hybrid.k, &m.patch, factories)
        }
    })
}

/// Compiles `w` for `arch` with `factories` cultivation factories (which
/// also caps the extractor's concurrent injection sites unless factories
/// are unlimited).
pub fn compile(w: &Workload, arch: Architecture, m: &Machine, factories: u32) -> Result<Compiled> {
    m.validate()?;
    let n = w.circuit.num_qubits;
    let mut xp = m.extractor.clone();
    xp.synthesis = m.synthesis;
    xp.factories = if m.factory.unlimited { 0 } else { factories };
    let trace = match arch {
        Architecture::ExtractorBase | Architecture::ExtractorParallel => {
            let map = map_qubits(n as u32, &m.code, xp.reserve_pivot)?;
            let policy = if arch == Architecture::ExtractorBase {
                ExtractorPolicy::Base
            } else {
                ExtractorPolicy::Parallel
            };
            schedule(&w.circuit, &map, &xp, policy)?
        }
        Architecture::Transversal => transversal_schedule(&w.circuit, &m.synthesis)?,
        Architecture::Hybrid => {
            let map = map_qubits(n as u32, &m.code, xp.reserve_pivot)?;
            hybrid_schedule(&w.circuit, &map, &m.hybrid, &m.synthesis)?.0
        }
    };
    Ok(Compiled {
        architecture: arch,
        factories,
        physical_qubits: physical_qubits(arch, n, m, factories)?,
        trace,
    })
}

pub fn simulate(c: &Compiled, w: &Workload, m: &Machine, seed: u64) -> Result<SimReport> {
    let (rotations, eps) = w.synthesis_budget();
    let p = SimParams {
        cost: m.cost.clone(),
        factory: m.factory.clone(),
        factories: c.factories,
        seed,
        scale_factor: w.scale_factor,
        physical_qubits: c.physical_qubits,
        synthesis_eps: eps,
        synthesized_rotations: rotations,
    };
    let mut r = run(&c.trace, &p)?;
    r.architecture = c.architecture.name().to_string();
    Ok(r)
}
