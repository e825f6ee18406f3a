#![allow(dead_code)]

use chernq_core::circuit::{Circuit, Gate};
use chernq_core::numerics::{c, nearest_unitary, CMatrix, CVector};
use chernq_core::seed::rng;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Fixed seed matrix for the property suites.
pub const SEEDS: [u64; 10] = [1, 2, 3, 5, 8, 13, 21, 34, 55, 89];

pub fn seeded(seed: u64) -> ChaCha8Rng {
    rng(seed)
}

pub fn random_matrix(r: &mut impl Rng, d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |_, _| c(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
}

pub fn random_hermitian(r: &mut impl Rng, d: usize) -> CMatrix {
    let a = random_matrix(r, d);
    (&a + a.adjoint()) * c(0.5, 0.0)
}

pub fn random_unitary(r: &mut impl Rng, d: usize) -> CMatrix {
    nearest_unitary(&random_matrix(r, d))
}

pub fn random_state(r: &mut impl Rng, d: usize) -> CVector {
    let v = CVector::from_fn(d, |_, _| c(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)));
    let n = v.norm();
    v / c(n, 0.0)
}

/// Random circuit of 1q, controlled and two-qubit gates on arbitrary lines.
pub fn random_circuit(r: &mut impl Rng, width: usize, gates: usize) -> Circuit {
    let mut circ = Circuit::new(width);
    for _ in 0..gates {
        let a = r.random_range(0..width);
        let mut b = r.random_range(0..width);
        while width > 1 && b == a {
            b = r.random_range(0..width);
        }
        let g = match r.random_range(0..5) {
            0 => Gate::h(a),
            1 => Gate::phase(a, r.random_range(-3.0..3.0)),
            2 if width > 1 => Gate::controlled(a, &[b], random_unitary(r, 2)).unwrap(),
            3 if width > 1 => Gate::unitary2(a, b, random_unitary(r, 4)).unwrap(),
            _ => Gate::unitary1(a, random_unitary(r, 2)).unwrap(),
        };
        circ.push(g).unwrap();
    }
    circ
}
