//! Dense symplectic Pauli strings.
//!
//! Each qubit is encoded by an (x, z) bit pair: I=(0,0), X=(1,0), Z=(0,1),
//! Y=(1,1). Phases are not tracked.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{input, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' | '_' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    len: usize,
    x: Vec<u64>,
    z: Vec<u64>,
}

fn words(len: usize) -> usize {
    len.div_ceil(64)
}

impl PauliString {
    /// All-identity string on `len` qubits.
    pub fn identity(len: usize) -> Result<Self> {
        if len == 0 {
            return input("Pauli string length must be positive");
        }
        Ok(PauliString {
            len,
            x: vec![0; words(len)],
            z: vec![0; words(len)],
        })
    }

    /// String with the given letters at the given qubits and identity elsewhere.
    pub fn from_sparse(len: usize, letters: &[(usize, Pauli)]) -> Result<Self> {
        let mut p = Self::identity(len)?;
        for &(q, l) in letters {
            if q >= len {
                return input(format!("qubit {q} out of range for length {len}"));
            }
            p.set(q, l);
        }
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, q: usize) -> Pauli {
        assert!(q < self.len, "qubit index out of range");
        let (w, b) = (q / 64, q % 64);
        Pauli::from_bits(self.x[w] >> b & 1 == 1, self.z[w] >> b & 1 == 1)
    }

    pub fn set(&mut self, q: usize, p: Pauli) {
        assert!(q < self.len, "qubit index out of range");
        let (w, b) = (q / 64, q % 64);
        let (xb, zb) = p.bits();
        self.x[w] = (self.x[w] & !(1 << b)) | ((xb as u64) << b);
        self.z[w] = (self.z[w] & !(1 << b)) | ((zb as u64) << b);
    }

    pub fn weight(&self) -> usize {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(x, z)| (x | z).count_ones() as usize)
            .sum()
    }

    pub fn is_identity(&self) -> bool {
        self.x.iter().chain(&self.z).all(|&w| w == 0)
    }

    /// Qubits carrying a non-identity letter, ascending.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.x.iter().zip(&self.z).enumerate().flat_map(|(w, (x, z))| {
            let mut bits = x | z;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(w * 64 + b)
            })
        })
    }

    pub(crate) fn x_words(&self) -> &[u64] {
        &self.x
    }

    pub(crate) fn z_words(&self) -> &[u64] {
        &self.z
    }

    /// Number of positions where the two strings anticommute locally.
    fn anticommuting_positions(&self, other: &PauliString) -> u32 {
        let mut n = 0;
        for i in 0..self.x.len() {
            n += ((self.x[i] & other.z[i]) ^ (self.z[i] & other.x[i])).count_ones();
        }
        n
    }

    /// Checked commutation test.
    pub fn commutes_with(&self, other: &PauliString) -> Result<bool> {
        if self.len != other.len {
            return input(format!("Pauli length mismatch: {} vs {}", self.len, other.len));
        }
        Ok(self.anticommuting_positions(other).is_multiple_of(2))
    }

    /// Unchecked variant for hot loops where lengths are known to agree.
    pub(crate) fn commutes_fast(&self, other: &PauliString) -> bool {
        debug_assert_eq!(self.len, other.len);
        self.anticommuting_positions(other).is_multiple_of(2)
    }
}

/// True iff `p` and `q` commute.
pub fn commutes(p: &PauliString, q: &PauliString) -> Result<bool> {
    p.commutes_with(q)
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = (0..self.len).map(|q| self.get(q).as_char()).collect();
        f.write_str(&s)
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let chars: Vec<char> = s.trim().chars().collect();
        let mut p = PauliString::identity(chars.len())?;
        for (q, c) in chars.into_iter().enumerate() {
            match Pauli::from_char(c) {
                Some(l) => p.set(q, l),
                None => return input(format!("invalid Pauli letter {c:?} at position {q}")),
            }
        }
        Ok(p)
    }
}

impl Serialize for PauliString {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
