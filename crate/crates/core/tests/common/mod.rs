//! Dense reference linear algebra shared by the oracle and acceptance
//! suites.
#![allow(dead_code)]

use atomarch_core::circuit::LogicalCircuit;
use atomarch_core::hamiltonian::HamiltonianTerm;
use atomarch_core::pauli::{Pauli, PauliString};
use nalgebra::DMatrix;
use num_complex::Complex64;

pub type M = DMatrix<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn single(p: Pauli) -> M {
    let (o, i) = (c(0.0, 0.0), c(1.0, 0.0));
    match p {
        Pauli::I => M::from_row_slice(2, 2, &[i, o, o, i]),
        Pauli::X => M::from_row_slice(2, 2, &[o, i, i, o]),
        Pauli::Y => M::from_row_slice(2, 2, &[o, c(0.0, -1.0), c(0.0, 1.0), o]),
        Pauli::Z => M::from_row_slice(2, 2, &[i, o, o, -i]),
    }
}

/// Dense matrix with qubit 0 as the most significant tensor factor.
pub fn dense(p: &PauliString) -> M {
    (0..p.len()).fold(M::identity(1, 1), |acc, q| acc.kronecker(&single(p.get(q))))
}

pub fn kron_all(ms: &[M]) -> M {
    ms.iter().fold(M::identity(1, 1), |acc, m| acc.kronecker(m))
}

/// Annihilation operator on mode `j` of `n`: Z on lower modes, |0⟩⟨1| on j.
pub fn annihilate(n: usize, j: usize) -> M {
    let lower = M::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    let parts: Vec<M> = (0..n)
        .map(|m| match m.cmp(&j) {
            std::cmp::Ordering::Less => single(Pauli::Z),
            std::cmp::Ordering::Equal => lower.clone(),
            std::cmp::Ordering::Greater => single(Pauli::I),
        })
        .collect();
    kron_all(&parts)
}

pub fn hamiltonian(terms: &[HamiltonianTerm]) -> M {
    let dim = 1 << terms[0].pauli.len();
    terms.iter().fold(M::zeros(dim, dim), |acc, t| {
        acc + dense(&t.pauli) * c(t.coefficient, 0.0)
    })
}

pub fn close(a: &M, b: &M, tol: f64) -> bool {
    (a - b).norm() < tol
}

pub fn circuit_unitary(circ: &LogicalCircuit) -> M {
    let dim = 1 << circ.num_qubits;
    let mut u = M::identity(dim, dim);
    for r in circ.rotations() {
        // exp(-iθP) = cos θ − i sin θ P, applied after what came before.
        let g = M::identity(dim, dim) * c(r.angle.cos(), 0.0) - dense(&r.pauli) * c(0.0, r.angle.sin());
        u = g * u;
    }
    u
}

pub fn exact_evolution(h: &M, time: f64) -> M {
    let eig = h.clone().symmetric_eigen();
    let phases = M::from_diagonal(&eig.eigenvalues.map(|e| Complex64::from_polar(1.0, -e * time)));
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

pub fn spectral_norm(m: &M) -> f64 {
    m.clone().singular_values().max()
}
