//! Pauli-product rotation circuits and greedy commuting-layer scheduling.

use std::f64::consts::FRAC_PI_8;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::pauli::PauliString;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RotationKind {
    Arbitrary,
    Clifford,
    T,
}

impl RotationKind {
    /// Classifies `exp(-i φ P)`: multiples of π/4 are Clifford, odd multiples
    /// of π/8 are T-type, everything else needs synthesis.
    pub fn classify(angle: f64) -> RotationKind {
        let eighths = angle / FRAC_PI_8;
        let nearest = eighths.round();
        if (eighths - nearest).abs() > 1e-12 {
            RotationKind::Arbitrary
        } else if nearest as i64 % 2 == 0 {
            RotationKind::Clifford
        } else {
            RotationKind::T
        }
    }
}

/// `exp(-i · angle · P)` synthesized to precision `precision`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotationOp {
    pub pauli: PauliString,
    pub angle: f64,
    pub precision: f64,
    pub kind: RotationKind,
}

impl RotationOp {
    pub fn new(pauli: PauliString, angle: f64, precision: f64, kind: RotationKind) -> Result<Self> {
        let r = RotationOp {
            pauli,
            angle,
            precision,
            kind,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn arbitrary(pauli: PauliString, angle: f64, precision: f64) -> Result<Self> {
        Self::new(pauli, angle, precision, RotationKind::Arbitrary)
    }

    pub fn validate(&self) -> Result<()> {
        if self.pauli.is_identity() {
            return input("rotation about the identity");
        }
        if !self.angle.is_finite() {
            return input("rotation angle must be finite");
        }
        if self.kind == RotationKind::Arbitrary && !(self.precision > 0.0 && self.precision < 1.0) {
            return input(format!(
                "precision {} outside (0, 1) for an arbitrary rotation",
                self.precision
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogicalCircuit {
    pub num_qubits: usize,
    pub layers: Vec<Vec<RotationOp>>,
    #[serde(default)]
    pub measurements: Vec<PauliString>,
}

impl LogicalCircuit {
    /// Layers `rotations` greedily and wraps them in a circuit.
    pub fn from_rotations(num_qubits: usize, rotations: Vec<RotationOp>) -> Result<Self> {
        let layers = greedy_layering(rotations)?;
        let c = LogicalCircuit {
            num_qubits,
            layers,
            measurements: Vec::new(),
        };
        c.check_lengths()?;
        Ok(c)
    }

    pub fn rotation_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    pub fn rotations(&self) -> impl Iterator<Item = &RotationOp> {
        self.layers.iter().flatten()
    }

    fn check_lengths(&self) -> Result<()> {
        if self.num_qubits == 0 {
            return Err(Error::Validation("num_qubits must be positive".into()));
        }
        for (li, layer) in self.layers.iter().enumerate() {
            for (ri, r) in layer.iter().enumerate() {
                if r.pauli.len() != self.num_qubits {
                    return Err(Error::Validation(format!(
                        "layer {li} rotation {ri}: Pauli length {} != num_qubits {}",
                        r.pauli.len(),
                        self.num_qubits
                    )));
                }
                r.validate()
                    .map_err(|e| Error::Validation(format!("layer {li} rotation {ri}: {e}")))?;
            }
        }
        for (mi, m) in self.measurements.iter().enumerate() {
            if m.len() != self.num_qubits {
                return Err(Error::Validation(format!(
                    "measurement {mi}: length {} != num_qubits {}",
                    m.len(),
                    self.num_qubits
                )));
            }
        }
        Ok(())
    }

    /// Full structural validation, including pairwise commutation within layers.
    pub fn validate(&self) -> Result<()> {
        self.check_lengths()?;
        for (li, layer) in self.layers.iter().enumerate() {
            if let Some((a, b)) = first_anticommuting_pair(layer) {
                return Err(Error::Validation(format!(
                    "layer {li}: rotations {a} and {b} anticommute"
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Runtime(e.to_string()))
    }

    /// Parses and validates a circuit. Empty layers are dropped with a warning.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut c: LogicalCircuit =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("circuit file: {e}")))?;
        let before = c.layers.len();
        let mut kept = Vec::with_capacity(before);
        for (i, layer) in c.layers.into_iter().enumerate() {
            if layer.is_empty() {
                log::warn!("circuit layer {i} is empty; dropped");
            } else {
                kept.push(layer);
            }
        }
        c.layers = kept;
        c.validate()?;
        Ok(c)
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
}

fn first_anticommuting_pair(layer: &[RotationOp]) -> Option<(usize, usize)> {
    let mask = LayerMask::of(layer.iter());
    if mask.all_commute() {
        return None;
    }
    for i in 0..layer.len() {
        for j in i + 1..layer.len() {
            if !layer[i].pauli.commutes_fast(&layer[j].pauli) {
                return Some((i, j));
            }
        }
    }
    None
}

/// Union of X and Z parts over a set of Pauli strings. If a string avoids the
/// union X part on its Z support and vice versa, it commutes with every member.
#[derive(Clone)]
struct LayerMask {
    x: Vec<u64>,
    z: Vec<u64>,
}

impl LayerMask {
    fn empty(words: usize) -> Self {
        LayerMask {
            x: vec![0; words],
            z: vec![0; words],
        }
    }

    fn of<'a>(ops: impl Iterator<Item = &'a RotationOp>) -> Self {
        let mut m = LayerMask::empty(0);
        for r in ops {
            if m.x.is_empty() {
                m = LayerMask::empty(r.pauli.x_words().len());
            }
            m.add(&r.pauli);
        }
        m
    }

    fn add(&mut self, p: &PauliString) {
        for (a, b) in self.x.iter_mut().zip(p.x_words()) {
            *a |= b;
        }
        for (a, b) in self.z.iter_mut().zip(p.z_words()) {
            *a |= b;
        }
    }

    fn surely_commutes(&self, p: &PauliString) -> bool {
        p.x_words()
            .iter()
            .zip(&self.z)
            .chain(p.z_words().iter().zip(&self.x))
            .all(|(a, b)| a & b == 0)
    }

    fn all_commute(&self) -> bool {
        self.x.iter().all(|&w| w == 0) || self.z.iter().all(|&w| w == 0)
    }
}

/// ASAP first-fit layering: each rotation lands in the layer just after the
/// last layer holding a rotation it anticommutes with.
pub fn greedy_layering(rotations: Vec<RotationOp>) -> Result<Vec<Vec<RotationOp>>> {
    let Some(first) = rotations.first() else {
        return Ok(Vec::new());
    };
    let n = first.pauli.len();
    let words = first.pauli.x_words().len();
    if let Some(bad) = rotations.iter().find(|r| r.pauli.len() != n) {
        return input(format!(
            "rotation length {} differs from first rotation length {n}",
            bad.pauli.len()
        ));
    }

    let mut layers: Vec<Vec<RotationOp>> = Vec::new();
    let mut masks: Vec<LayerMask> = Vec::new();
    for r in rotations {
        let mut target = 0;
        for li in (0..layers.len()).rev() {
            if masks[li].surely_commutes(&r.pauli) {
                continue;
            }
            if layers[li].iter().any(|o| !o.pauli.commutes_fast(&r.pauli)) {
                target = li + 1;
                break;
            }
        }
        if target == layers.len() {
            layers.push(Vec::new());
            masks.push(LayerMask::empty(words));
        }
        masks[target].add(&r.pauli);
        layers[target].push(r);
    }
    Ok(layers)
}
