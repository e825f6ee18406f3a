//! Oracle-level checks: lattice Chern numbers, symmetries, the dense
//! eigensolver against an independent Jacobi solver, and twist phases.

mod common;

use chernq_core::models::{gapped_spectrum, BlochModel, Haldane, Qwz, TwistedHeisenbergChain};
use chernq_core::numerics::{eig_hermitian_dense, CMatrix, CVector};
use chernq_core::oracle::{chern_fukui, heisenberg_twist_berry_phase, hybrid_wannier_trace, plaquette_flux, wrap_angle};
use chernq_core::{Error, ErrorClass};
use common::*;
use std::f64::consts::PI;

/// Cyclic Jacobi on a real symmetric matrix; returns ascending eigenvalues.
fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let (cs, sn) = (1.0 / (t * t + 1.0).sqrt(), t / (t * t + 1.0).sqrt());
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = cs * akp - sn * akq;
                    row[q] = sn * akp + cs * akq;
                }
                let (rp, rq) = (a[p].clone(), a[q].clone());
                for k in 0..n {
                    a[p][k] = cs * rp[k] - sn * rq[k];
                    a[q][k] = sn * rp[k] + cs * rq[k];
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// `[[Re H, -Im H], [Im H, Re H]]`; each eigenvalue of `H` appears twice.
fn real_embedding(h: &CMatrix) -> Vec<Vec<f64>> {
    let d = h.nrows();
    let mut out = vec![vec![0.0; 2 * d]; 2 * d];
    for i in 0..d {
        for j in 0..d {
            let z = h[(i, j)];
            out[i][j] = z.re;
            out[i + d][j + d] = z.re;
            out[i][j + d] = -z.im;
            out[i + d][j] = z.im;
        }
    }
    out
}

#[test]
fn dense_eigensolver_matches_jacobi() {
    for seed in SEEDS {
        let mut r = seeded(seed);
        let h = random_hermitian(&mut r, 8);
        let spec = eig_hermitian_dense(&h).unwrap();
        let doubled = jacobi_eigenvalues(real_embedding(&h));
        for (i, p) in spec.pairs.iter().enumerate() {
            assert!((p.value - doubled[2 * i]).abs() < 1e-10, "seed {seed} level {i}");
            assert!((p.value - doubled[2 * i + 1]).abs() < 1e-10, "seed {seed} level {i}");
            let residual: CVector = &h * &p.vector - &p.vector * chernq_core::numerics::c(p.value, 0.0);
            assert!(residual.norm() < 1e-10, "seed {seed} level {i}");
        }
    }
}

#[test]
fn qwz_chern_numbers_are_stable_across_grids() {
    for n in [9, 15, 25] {
        let got: Vec<i64> = [-3.0, -1.0, 1.0, 3.0].iter().map(|&u| chern_fukui(&Qwz { u }, n).unwrap().1).collect();
        assert_eq!(got, vec![0, -1, 1, 0], "grid {n}");
    }
}

#[test]
fn qwz_sweep_is_a_step_function() {
    for i in 0..13 {
        let u = -3.0 + 0.5 * i as f64;
        let phase = |u: f64| if u.abs() > 2.0 { 0 } else if u > 0.0 { 1 } else { -1 };
        let result = chern_fukui(&Qwz { u }, 15);
        if ![-2.0, 0.0, 2.0].contains(&u) {
            assert_eq!(result.unwrap().1, phase(u), "u = {u}");
            continue;
        }
        // at a closing the lattice either hits the Dirac point or lands on
        // one of the neighbouring phases
        match result {
            Ok((_, c)) => assert!(c == phase(u - 0.1) || c == phase(u + 0.1), "u = {u}: {c}"),
            Err(e) => assert_eq!(e.class(), ErrorClass::Physics),
        }
    }
}

#[test]
fn qwz_fluxes_are_mirror_symmetric() {
    let n = 15;
    let (grid, _) = chern_fukui(&Qwz { u: 1.0 }, n).unwrap();
    for iy in 0..n {
        for ix in 0..n {
            let f = grid.fluxes[iy][ix];
            assert!((f - grid.fluxes[iy][n - 1 - ix]).abs() < 1e-12);
            assert!((f - grid.fluxes[n - 1 - iy][ix]).abs() < 1e-12);
        }
    }
}

#[derive(Debug)]
struct Conjugated(Qwz);

impl BlochModel for Conjugated {
    fn label(&self) -> String {
        format!("conj {}", self.0.label())
    }
    fn hamiltonian(&self, k: [f64; 2]) -> CMatrix {
        self.0.hamiltonian(k).conjugate()
    }
}

#[test]
fn conjugated_model_negates_flux() {
    for seed in SEEDS {
        let mut r = seeded(seed);
        use rand::Rng;
        let m = Qwz { u: r.random_range(0.2..1.8) };
        let k = [r.random_range(-PI..PI), r.random_range(-PI..PI)];
        let dk = r.random_range(0.05..0.4);
        let a = plaquette_flux(&m, k, dk).unwrap();
        let b = plaquette_flux(&Conjugated(m), k, dk).unwrap();
        assert!((a + b).abs() < 1e-12, "seed {seed}");
    }
    assert_eq!(chern_fukui(&Conjugated(Qwz { u: 1.0 }), 15).unwrap().1, -1);
}

#[test]
fn haldane_phase_diagram_matches_analytic() {
    let mut checked = 0;
    let step_m = 12.0 / 20.0;
    let step_phi = 2.0 * PI / 20.0;
    for i in 0..21 {
        for j in 0..21 {
            let m = -6.0 + step_m * i as f64;
            let phi = -PI + step_phi * j as f64;
            let boundary = 3.0 * 3f64.sqrt() * phi.sin().abs();
            if (m.abs() - boundary).abs() <= step_m || phi.sin().abs() < 1e-12 {
                continue;
            }
            let (_, c) = chern_fukui(&Haldane::new(m, phi), 15).unwrap();
            assert_eq!(c, Haldane::expected_chern(m, phi), "m {m} phi {phi}");
            checked += 1;
        }
    }
    assert!(checked > 200);
}

#[test]
fn haldane_gap_closure_is_detected() {
    // at phi = 0 and m = 0 the cones sit on the Brillouin-zone corners
    let h = Haldane::new(0.0, 0.0);
    let k_point = [1.0 / 3.0, 2.0 / 3.0].map(|x: f64| 2.0 * PI * x);
    let mut found = false;
    for kappa in [k_point, [k_point[1], k_point[0]], [-k_point[0], -k_point[1]]] {
        if let Err(e) = gapped_spectrum(&h, kappa) {
            assert!(matches!(e, Error::GapClosure { .. }));
            found = true;
        }
    }
    assert!(found, "no gap closure found at the corners");
}

#[test]
fn wannier_winding_matches_chern() {
    for (u, c) in [(-3.0, 0), (-1.0, -1), (1.0, 1), (3.0, 0)] {
        let t = hybrid_wannier_trace(&Qwz { u }, 100, 24).unwrap();
        assert_eq!(t.winding, c, "u {u}");
    }
}

#[test]
fn twist_phases_are_quantized() {
    for n in [2, 4, 6] {
        let chain = TwistedHeisenbergChain::uniform(n, 1.0, false, n / 2 - 1).unwrap();
        let a = heisenberg_twist_berry_phase(&chain, 100).unwrap();
        let b = heisenberg_twist_berry_phase(&chain, 200).unwrap();
        assert!(a.residual < 1e-6, "n {n}: {a:?}");
        assert!(wrap_angle(a.gamma - b.gamma).abs() < 1e-8, "n {n}: {a:?} {b:?}");
    }
}
