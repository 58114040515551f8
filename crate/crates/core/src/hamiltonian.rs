//! Lattice Hamiltonians as weighted Pauli strings.

use crate::error::{input, Result};
use crate::pauli::{Pauli, PauliString};

#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianTerm {
    pub pauli: PauliString,
    pub coefficient: f64,
}

impl HamiltonianTerm {
    pub fn new(pauli: PauliString, coefficient: f64) -> Result<Self> {
        if !coefficient.is_finite() || coefficient == 0.0 {
            return input(format!(
                "term coefficient must be finite and nonzero, got {coefficient}"
            ));
        }
        Ok(HamiltonianTerm { pauli, coefficient })
    }
}

/// Open-boundary rectangular lattice with row-major site numbering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lattice {
    pub rows: usize,
    pub cols: usize,
}

impl Lattice {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 || rows * cols < 2 {
            return input(format!("lattice {rows}x{cols} has fewer than two sites"));
        }
        Ok(Lattice { rows, cols })
    }

    pub fn sites(&self) -> usize {
        self.rows * self.cols
    }

    pub fn site(&self, r: usize, c: usize) -> usize {
        r * self.cols + c
    }

    pub fn coords(&self, s: usize) -> (usize, usize) {
        (s / self.cols, s % self.cols)
    }

    /// Nearest-neighbour bonds, each site contributing its right then down bond.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for r in 0..self.rows {
            for c in 0..self.cols {
                if c + 1 < self.cols {
                    out.push((self.site(r, c), self.site(r, c + 1)));
                }
                if r + 1 < self.rows {
                    out.push((self.site(r, c), self.site(r + 1, c)));
                }
            }
        }
        out
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let (ra, ca) = self.coords(a);
        let (rb, cb) = self.coords(b);
        let dr = ra as f64 - rb as f64;
        let dc = ca as f64 - cb as f64;
        (dr * dr + dc * dc).sqrt()
    }

    /// Boustrophedon position of a site: even rows left to right, odd rows
    /// right to left, so consecutive positions are always lattice neighbours.
    pub fn snake_index(&self, s: usize) -> usize {
        let (r, c) = self.coords(s);
        if r % 2 == 0 {
            r * self.cols + c
        } else {
            r * self.cols + (self.cols - 1 - c)
        }
    }
}

fn two_body(n: usize, a: usize, b: usize, p: Pauli) -> PauliString {
    PauliString::from_sparse(n, &[(a, p), (b, p)]).expect("sites in range")
}

fn push_nonzero(out: &mut Vec<HamiltonianTerm>, pauli: PauliString, c: f64) {
    if c != 0.0 {
        out.push(HamiltonianTerm { pauli, coefficient: c });
    }
}

/// XX, YY and ZZ couplings on every bond. Terms are emitted type-major
/// (all XX, then YY, then ZZ) so that first-fit grouping yields three groups.
pub fn build_heisenberg(rows: usize, cols: usize, jx: f64, jy: f64, jz: f64) -> Result<Vec<HamiltonianTerm>> {
    let lat = Lattice::new(rows, cols)?;
    let n = lat.sites();
    let edges = lat.edges();
    let mut out = Vec::with_capacity(3 * edges.len());
    for (p, j) in [(Pauli::X, jx), (Pauli::Y, jy), (Pauli::Z, jz)] {
        for &(a, b) in &edges {
            push_nonzero(&mut out, two_body(n, a, b, p), j);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IsingRange {
    Nearest,
    PowerLaw { alpha: f64 },
}

/// Transverse-field Ising model: ZZ couplings then one X field term per site.
pub fn build_tfim(rows: usize, cols: usize, j: f64, b: f64, range: IsingRange) -> Result<Vec<HamiltonianTerm>> {
    let lat = Lattice::new(rows, cols)?;
    let n = lat.sites();
    let mut out = Vec::new();
    match range {
        IsingRange::Nearest => {
            for (a, c) in lat.edges() {
                push_nonzero(&mut out, two_body(n, a, c, Pauli::Z), j);
            }
        }
        IsingRange::PowerLaw { alpha } => {
            if !(alpha > 0.0) {
                return input(format!("power-law exponent must be positive, got {alpha}"));
            }
            for a in 0..n {
                for c in a + 1..n {
                    let coeff = j / lat.distance(a, c).powf(alpha);
                    push_nonzero(&mut out, two_body(n, a, c, Pauli::Z), coeff);
                }
            }
        }
    }
    for s in 0..n {
        push_nonzero(
            &mut out,
            PauliString::from_sparse(n, &[(s, Pauli::X)]).expect("site in range"),
            b,
        );
    }
    Ok(out)
}

/// Jordan–Wigner image of `a†_p a_q + a†_q a_p` on `n` modes:
/// `½ X_p Z…Z X_q + ½ Y_p Z…Z Y_q`.
pub fn jw_hopping(n: usize, p: usize, q: usize) -> Result<[(PauliString, f64); 2]> {
    if p == q || p >= n || q >= n {
        return input(format!("invalid hopping modes ({p}, {q}) on {n} modes"));
    }
    let (lo, hi) = (p.min(q), p.max(q));
    let mut xs = PauliString::identity(n)?;
    let mut ys = PauliString::identity(n)?;
    for m in lo + 1..hi {
        xs.set(m, Pauli::Z);
        ys.set(m, Pauli::Z);
    }
    xs.set(lo, Pauli::X);
    xs.set(hi, Pauli::X);
    ys.set(lo, Pauli::Y);
    ys.set(hi, Pauli::Y);
    Ok([(xs, 0.5), (ys, 0.5)])
}

/// Mode index of (site, spin) under the snake ordering, spin-up block first.
pub fn hubbard_mode(lat: &Lattice, site: usize, spin: usize) -> usize {
    spin * lat.sites() + lat.snake_index(site)
}

/// Fermi–Hubbard model `-t Σ (a†a + h.c.) + U Σ n↑ n↓` mapped with
/// Jordan–Wigner. The constant from the number-operator expansion is dropped.
pub fn jordan_wigner_hubbard(rows: usize, cols: usize, t: f64, u: f64) -> Result<Vec<HamiltonianTerm>> {
    let lat = Lattice::new(rows, cols)?;
    let n = 2 * lat.sites();
    let mut out = Vec::new();
    if t != 0.0 {
        for spin in 0..2 {
            for (a, b) in lat.edges() {
                let p = hubbard_mode(&lat, a, spin);
                let q = hubbard_mode(&lat, b, spin);
                for (s, c) in jw_hopping(n, p, q)? {
                    out.push(HamiltonianTerm {
                        pauli: s,
                        coefficient: -t * c,
                    });
                }
            }
        }
    }
    if u != 0.0 {
        let pairs: Vec<(usize, usize)> = (0..lat.sites())
            .map(|s| (hubbard_mode(&lat, s, 0), hubbard_mode(&lat, s, 1)))
            .collect();
        for &(up, dn) in &pairs {
            out.push(HamiltonianTerm {
                pauli: two_body(n, up, dn, Pauli::Z),
                coefficient: u / 4.0,
            });
        }
        for &(up, dn) in &pairs {
            for m in [up, dn] {
                out.push(HamiltonianTerm {
                    pauli: PauliString::from_sparse(n, &[(m, Pauli::Z)])?,
                    coefficient: -u / 4.0,
                });
            }
        }
    }
    Ok(out)
}
