//! Run configuration: sweep axes plus every machine parameter, read from
//! TOML with unknown keys rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bench::{BenchmarkSpec, PRESETS};
use crate::error::{Error, Result};
use crate::extractor::ExtractorParams;
use crate::factory::FactoryConfig;
use crate::hybrid::{HybridConfig, HybridPolicy};
use crate::layout::AnnealSchedule;
use crate::pipeline::{Architecture, Machine};
use crate::resources::{CodeParams, CostModel, HardwareParams, QubitLayout};
use crate::synthesis::SynthesisParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Base seed; replicate `i` of a cell runs with `seed + i`.
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_seeds")]
    pub seeds: u32,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub sweep: SweepAxes,
    /// Custom benchmarks, referenced from `sweep.benchmarks` by name.
    #[serde(default)]
    pub benchmark: Vec<BenchmarkSpec>,
    #[serde(default)]
    pub codes: CodePair,
    #[serde(default)]
    pub synthesis: SynthesisParams,
    #[serde(default)]
    pub costs: CostModel,
    #[serde(default)]
    pub factory: FactoryConfig,
    #[serde(default)]
    pub extractor: ExtractorParams,
    #[serde(default)]
    pub hybrid: HybridConfig,
    #[serde(default)]
    pub qubits: QubitLayout,
    #[serde(default)]
    pub hardware: HardwareParams,
    #[serde(default)]
    pub layout: LayoutSection,
}

fn default_seed() -> u64 {
    1
}

fn default_seeds() -> u32 {
    10
}

fn default_out() -> PathBuf {
    PathBuf::from("results")
}

/// Axes of the sweep. Empty optional axes fall back to the single value in
/// the corresponding machine section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepAxes {
    pub benchmarks: Vec<String>,
    pub architectures: Vec<Architecture>,
    pub factories: Vec<u32>,
    /// Synthesis precision overrides; empty keeps each benchmark's own.
    pub precisions: Vec<f64>,
    /// Memory and compute code pairs written `memory+patch`, e.g.
    /// `"hgps+surface"`.
    pub codes: Vec<String>,
    pub hybrid_k: Vec<u32>,
    pub hybrid_policies: Vec<HybridPolicy>,
    /// Run cells on the rayon pool. Output order never depends on it.
    pub parallel: bool,
}

impl Default for SweepAxes {
    fn default() -> Self {
        SweepAxes {
            benchmarks: vec!["tfim-nn".into()],
            architectures: vec![
                Architecture::ExtractorBase,
                Architecture::ExtractorParallel,
                Architecture::Transversal,
            ],
            factories: vec![1, 2, 3, 5, 10, 15, 25, 50],
            precisions: Vec::new(),
            codes: Vec::new(),
            hybrid_k: Vec::new(),
            hybrid_policies: Vec::new(),
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CodePair {
    pub memory: String,
    pub patch: String,
}

impl Default for CodePair {
    fn default() -> Self {
        CodePair {
            memory: "two-gross".into(),
            patch: "surface-17".into(),
        }
    }
}

impl CodePair {
    pub fn parse(s: &str) -> Result<Self> {
        let (memory, patch) = s
            .split_once('+')
            .ok_or_else(|| Error::Config(format!("code pair {s:?} must be written memory+patch")))?;
        Ok(CodePair {
            memory: memory.trim().into(),
            patch: patch.trim().into(),
        })
    }

    pub fn label(&self) -> String {
        format!("{}+{}", self.memory, self.patch)
    }

    pub fn resolve(&self) -> Result<(CodeParams, CodeParams)> {
        let c = |s: &str| CodeParams::preset(s).map_err(|e| Error::Config(e.to_string()));
        Ok((c(&self.memory)?, c(&self.patch)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LayoutSection {
    pub rows: u32,
    pub cols: u32,
    pub anneal: AnnealSchedule,
}

impl Default for LayoutSection {
    fn default() -> Self {
        LayoutSection {
            rows: 26,
            cols: 26,
            anneal: AnnealSchedule::default(),
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: default_seed(),
            seeds: default_seeds(),
            out: default_out(),
            sweep: SweepAxes::default(),
            benchmark: Vec::new(),
            codes: CodePair::default(),
            synthesis: SynthesisParams::default(),
            costs: CostModel::default(),
            factory: FactoryConfig::default(),
            extractor: ExtractorParams::default(),
            hybrid: HybridConfig::default(),
            qubits: QubitLayout::default(),
            hardware: HardwareParams::default(),
            layout: LayoutSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks every axis value and section before anything runs. All
    /// failures are reported as configuration errors.
    pub fn validate(&self) -> Result<()> {
        let cfg = |e: Error| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        };
        if self.seeds == 0 {
            return Err(Error::Config("seeds must be at least 1".into()));
        }
        let s = &self.sweep;
        if s.benchmarks.is_empty() || s.architectures.is_empty() || s.factories.is_empty() {
            return Err(Error::Config(
                "sweep needs at least one benchmark, architecture and factory count".into(),
            ));
        }
        for b in &self.benchmark {
            b.validate().map_err(cfg)?;
            if PRESETS.contains(&b.name.as_str()) {
                return Err(Error::Config(format!("custom benchmark {:?} shadows a preset", b.name)));
            }
        }
        for name in &s.benchmarks {
            self.benchmark_spec(name)?;
        }
        if !self.factory.unlimited && s.factories.contains(&0) {
            return Err(Error::Config(
                "factory counts must be at least 1 unless factories are unlimited".into(),
            ));
        }
        for &eps in &s.precisions {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(Error::Config(format!("precision {eps} must lie in (0, 1)")));
            }
        }
        for &k in &s.hybrid_k {
            if k < 2 {
                return Err(Error::Config(format!("hybrid K = {k} is below the minimum of 2")));
            }
        }
        for pair in self.code_pairs()? {
            pair.resolve()?;
        }
        if self.layout.rows == 0 || self.layout.cols == 0 {
            return Err(Error::Config("layout grid must be nonempty".into()));
        }
        self.hardware.validate().map_err(cfg)?;
        self.machine(&self.codes)?.validate().map_err(cfg)
    }

    /// Resolves a benchmark name to a custom entry or a preset.
    pub fn benchmark_spec(&self, name: &str) -> Result<BenchmarkSpec> {
        if let Some(b) = self.benchmark.iter().find(|b| b.name == name) {
            return Ok(b.clone());
        }
        BenchmarkSpec::preset(name).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn code_pairs(&self) -> Result<Vec<CodePair>> {
        if self.sweep.codes.is_empty() {
            Ok(vec![self.codes.clone()])
        } else {
            self.sweep.codes.iter().map(|s| CodePair::parse(s)).collect()
        }
    }

    pub fn machine(&self, codes: &CodePair) -> Result<Machine> {
        let (code, patch) = codes.resolve()?;
        Ok(Machine {
            code,
            patch,
            layout: self.qubits,
            synthesis: self.synthesis,
            extractor: self.extractor.clone(),
            hybrid: self.hybrid.clone(),
            cost: self.costs.clone(),
            factory: self.factory.clone(),
        })
    }
}
