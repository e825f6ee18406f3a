//! Two-band Bloch Hamiltonians (QWZ, Haldane) and the twisted Heisenberg chain.
//!
//! Every [`BlochModel`] is evaluated at reduced coordinates `kappa` with
//! period `2 pi` in both components, so the Brillouin zone is `[-pi, pi)^2`
//! for all models.

use crate::error::{Error, Result};
use crate::numerics::{bloch_matrix, c, eig_hermitian_2x2, CMatrix, CVector, Spectrum, DEGENERACY_TOL, ZERO};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

pub const MAX_CHAIN_SITES: usize = 12;

pub trait BlochModel: Send + Sync + fmt::Debug {
    /// Name with parameters, for records and error messages.
    fn label(&self) -> String;

    /// Hamiltonian at reduced coordinates.
    fn hamiltonian(&self, kappa: [f64; 2]) -> CMatrix;

    fn bands(&self) -> usize {
        2
    }

    fn spectrum(&self, kappa: [f64; 2]) -> Result<Spectrum> {
        eig_hermitian_2x2(&self.hamiltonian(kappa))
    }
}

/// `sin kx X + sin ky Y + (u + cos kx + cos ky) Z`
pub fn qwz_h(k: [f64; 2], u: f64) -> CMatrix {
    bloch_matrix(0.0, [k[0].sin(), k[1].sin(), u + k[0].cos() + k[1].cos()])
}

pub const HALDANE_A1: [f64; 2] = [0.866_025_403_784_438_6, 0.5];
pub const HALDANE_A2: [f64; 2] = [0.866_025_403_784_438_6, -0.5];

/// `d` vector of the Haldane model at Cartesian momentum `k`.
pub fn haldane_d(k: [f64; 2], m: f64, phi: f64, t1: f64, t2: f64) -> [f64; 3] {
    let dot = |a: [f64; 2]| k[0] * a[0] + k[1] * a[1];
    let (k1, k2) = (dot(HALDANE_A1), dot(HALDANE_A2));
    let k12 = dot([HALDANE_A1[0] - HALDANE_A2[0], HALDANE_A1[1] - HALDANE_A2[1]]);
    [
        t1 * (k1.cos() + k2.cos() + 1.0),
        t1 * (k1.sin() + k2.sin()),
        m + 2.0 * t2 * phi.sin() * (k1.sin() - k2.sin() - k12.sin()),
    ]
}

pub fn haldane_h(k: [f64; 2], m: f64, phi: f64, t1: f64, t2: f64) -> CMatrix {
    bloch_matrix(0.0, haldane_d(k, m, phi, t1, t2))
}

/// Reciprocal vectors `(g1, g2)` of the Haldane lattice, ordered so that the
/// basis is right-handed.
pub fn haldane_reciprocal() -> [[f64; 2]; 2] {
    let s = 2.0 * PI / 3f64.sqrt();
    [[s, -2.0 * PI], [s, 2.0 * PI]]
}

/// Cartesian momentum of reduced coordinates `kappa` (`k = sum kappa_i g_i / 2 pi`).
pub fn haldane_cartesian(kappa: [f64; 2]) -> [f64; 2] {
    let [g1, g2] = haldane_reciprocal();
    [
        (kappa[0] * g1[0] + kappa[1] * g2[0]) / (2.0 * PI),
        (kappa[0] * g1[1] + kappa[1] * g2[1]) / (2.0 * PI),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Qwz {
    pub u: f64,
}

impl BlochModel for Qwz {
    fn label(&self) -> String {
        format!("qwz(u={})", self.u)
    }

    fn hamiltonian(&self, kappa: [f64; 2]) -> CMatrix {
        qwz_h(kappa, self.u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Haldane {
    pub t1: f64,
    pub t2: f64,
    pub m: f64,
    pub phi: f64,
}

impl Haldane {
    pub fn new(m: f64, phi: f64) -> Haldane {
        Haldane { t1: 1.0, t2: 1.0, m, phi }
    }

    /// Chern number of the lower band away from the transition lines, for `t1 = t2 = 1`.
    pub fn expected_chern(m: f64, phi: f64) -> i64 {
        if m.abs() < 3.0 * 3f64.sqrt() * phi.sin().abs() {
            if phi.sin() > 0.0 {
                1
            } else {
                -1
            }
        } else {
            0
        }
    }
}

impl BlochModel for Haldane {
    fn label(&self) -> String {
        format!("haldane(t1={}, t2={}, m={}, phi={})", self.t1, self.t2, self.m, self.phi)
    }

    fn hamiltonian(&self, kappa: [f64; 2]) -> CMatrix {
        haldane_h(haldane_cartesian(kappa), self.m, self.phi, self.t1, self.t2)
    }
}

/// Serializable model choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum ModelSpec {
    Qwz { u: f64 },
    Haldane { t1: f64, t2: f64, m: f64, phi: f64 },
}

impl ModelSpec {
    /// Copy with one named parameter replaced.
    pub fn with_parameter(&self, name: &str, value: f64) -> Result<ModelSpec> {
        let mut out = *self;
        let slot = match (&mut out, name) {
            (ModelSpec::Qwz { u }, "u") => u,
            (ModelSpec::Haldane { t1, .. }, "t1") => t1,
            (ModelSpec::Haldane { t2, .. }, "t2") => t2,
            (ModelSpec::Haldane { m, .. }, "m") => m,
            (ModelSpec::Haldane { phi, .. }, "phi") => phi,
            _ => {
                return Err(Error::InvalidParameter(format!("model {} has no parameter {name:?}", self.label())))
            }
        };
        *slot = value;
        Ok(out)
    }

    pub fn is_qwz(&self) -> bool {
        matches!(self, ModelSpec::Qwz { .. })
    }
}

impl BlochModel for ModelSpec {
    fn label(&self) -> String {
        match *self {
            ModelSpec::Qwz { u } => Qwz { u }.label(),
            ModelSpec::Haldane { t1, t2, m, phi } => Haldane { t1, t2, m, phi }.label(),
        }
    }

    fn hamiltonian(&self, kappa: [f64; 2]) -> CMatrix {
        match *self {
            ModelSpec::Qwz { u } => Qwz { u }.hamiltonian(kappa),
            ModelSpec::Haldane { t1, t2, m, phi } => Haldane { t1, t2, m, phi }.hamiltonian(kappa),
        }
    }
}

/// Gapped spectrum at `kappa`, or a gap-closure error.
pub fn gapped_spectrum(model: &dyn BlochModel, kappa: [f64; 2]) -> Result<Spectrum> {
    let spec = model.spectrum(kappa)?;
    if spec.gap() <= DEGENERACY_TOL {
        return Err(Error::GapClosure { k: kappa, gap: spec.gap() });
    }
    Ok(spec)
}

pub fn ground_state(model: &dyn BlochModel, kappa: [f64; 2]) -> Result<CVector> {
    Ok(gapped_spectrum(model, kappa)?.pairs[0].vector.clone())
}

/// Unitary whose columns are the gauge-fixed eigenvectors, so `U|0>` is the ground state.
pub fn ground_prep_unitary(model: &dyn BlochModel, kappa: [f64; 2]) -> Result<CMatrix> {
    Ok(gapped_spectrum(model, kappa)?.vectors())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bond {
    pub i: usize,
    pub j: usize,
    pub coupling: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwistedHeisenbergChain {
    pub n_sites: usize,
    pub bonds: Vec<Bond>,
    /// Index into `bonds`.
    pub twisted_bond: usize,
    pub theta: f64,
}

impl TwistedHeisenbergChain {
    /// Nearest-neighbour chain with uniform coupling; `periodic` adds the
    /// closing bond `(n-1, 0)`.
    pub fn uniform(n_sites: usize, coupling: f64, periodic: bool, twisted_bond: usize) -> Result<Self> {
        if !(2..=MAX_CHAIN_SITES).contains(&n_sites) {
            return Err(Error::InvalidParameter(format!("chain needs 2..={MAX_CHAIN_SITES} sites, got {n_sites}")));
        }
        let mut bonds: Vec<Bond> = (0..n_sites - 1).map(|i| Bond { i, j: i + 1, coupling }).collect();
        if periodic && n_sites > 2 {
            bonds.push(Bond { i: n_sites - 1, j: 0, coupling });
        }
        let chain = TwistedHeisenbergChain { n_sites, bonds, twisted_bond, theta: 0.0 };
        chain.validate()?;
        Ok(chain)
    }

    pub fn with_theta(&self, theta: f64) -> Self {
        TwistedHeisenbergChain { theta, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites == 0 || self.n_sites > MAX_CHAIN_SITES {
            return Err(Error::TooLarge { dim: self.n_sites, cap: MAX_CHAIN_SITES });
        }
        if self.twisted_bond >= self.bonds.len() {
            return Err(Error::InvalidParameter(format!(
                "twisted bond {} out of range for {} bonds",
                self.twisted_bond,
                self.bonds.len()
            )));
        }
        for b in &self.bonds {
            if b.i == b.j || b.i >= self.n_sites || b.j >= self.n_sites {
                return Err(Error::InvalidParameter(format!("bad bond {b:?}")));
            }
        }
        Ok(())
    }
}

/// Spin-1/2 chain with `S = sigma/2` and `|0> = up`. Untwisted bonds carry
/// `J S_i.S_j`; the twisted bond carries
/// `J ((x* S_i+ S_j- + x S_i- S_j+)/2 + S_iz S_jz)` with `x = e^{i theta}`.
pub fn heisenberg_twisted_h(chain: &TwistedHeisenbergChain) -> Result<CMatrix> {
    chain.validate()?;
    let n = chain.n_sites;
    let dim = 1usize << n;
    let mut h = CMatrix::from_element(dim, dim, ZERO);
    for (idx, bond) in chain.bonds.iter().enumerate() {
        let x = if idx == chain.twisted_bond { c(chain.theta.cos(), chain.theta.sin()) } else { c(1.0, 0.0) };
        let mi = 1usize << (n - 1 - bond.i);
        let mj = 1usize << (n - 1 - bond.j);
        let jz = bond.coupling;
        for state in 0..dim {
            let down_i = state & mi != 0;
            let down_j = state & mj != 0;
            h[(state, state)] += c(if down_i == down_j { jz / 4.0 } else { -jz / 4.0 }, 0.0);
            if down_i && !down_j {
                // S_i+ S_j-: i down -> up, j up -> down
                h[(state ^ mi ^ mj, state)] += x.conj() * (jz / 2.0);
            } else if !down_i && down_j {
                h[(state ^ mi ^ mj, state)] += x * (jz / 2.0);
            }
        }
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{hermitian_defect, max_abs, pauli_x, pauli_z, ONE};

    #[test]
    fn qwz_examples() {
        assert_eq!(qwz_h([0.0, 0.0], 1.0), pauli_z() * c(3.0, 0.0));
        assert_eq!(qwz_h([0.0, 0.0], -2.0), CMatrix::zeros(2, 2));
        let h = qwz_h([PI / 2.0, 0.0], 0.0);
        assert!(max_abs(&(h - pauli_x() - pauli_z())) < 1e-15);
    }

    #[test]
    fn haldane_examples() {
        let d = haldane_d([0.0, 0.0], 0.7, 1.1, 1.3, 0.4);
        assert_eq!(d, [3.0 * 1.3, 0.0, 0.7]);
        let d = haldane_d([0.3, -1.2], 0.7, 0.0, 1.0, 1.0);
        assert_eq!(d[2], 0.7);
    }

    #[test]
    fn haldane_reduced_is_periodic_and_right_handed() {
        let [g1, g2] = haldane_reciprocal();
        assert!(g1[0] * g2[1] - g1[1] * g2[0] > 0.0);
        // g1 . a2 = g2 . a1 = 2 pi, cross terms vanish
        let dot = |a: [f64; 2], b: [f64; 2]| a[0] * b[0] + a[1] * b[1];
        assert!((dot(g1, HALDANE_A2) - 2.0 * PI).abs() < 1e-12);
        assert!(dot(g1, HALDANE_A1).abs() < 1e-12);
        let model = Haldane::new(0.4, 1.0);
        let k = [0.37, -2.1];
        let h0 = model.hamiltonian(k);
        for shift in [[2.0 * PI, 0.0], [0.0, 2.0 * PI], [-2.0 * PI, 2.0 * PI]] {
            let h1 = model.hamiltonian([k[0] + shift[0], k[1] + shift[1]]);
            assert!(max_abs(&(h1 - &h0)) < 1e-10);
        }
    }

    #[test]
    fn ground_prep_examples() {
        let u = ground_prep_unitary(&Qwz { u: 1.0 }, [0.0, 0.0]).unwrap();
        assert_eq!(u, pauli_x());
        let model = Haldane::new(0.3, -0.8);
        let k = [1.1, 0.4];
        let u = ground_prep_unitary(&model, k).unwrap();
        let d = u.adjoint() * model.hamiltonian(k) * &u;
        assert!(d[(0, 1)].norm() < 1e-10 && d[(1, 0)].norm() < 1e-10);
        assert!(d[(0, 0)].re < d[(1, 1)].re);
        assert!(matches!(
            ground_prep_unitary(&Qwz { u: -2.0 }, [0.0, 0.0]),
            Err(Error::GapClosure { gap, .. }) if gap == 0.0
        ));
    }

    #[test]
    fn heisenberg_examples() {
        let chain = TwistedHeisenbergChain::uniform(4, 1.0, true, 1).unwrap();
        let plain = heisenberg_twisted_h(&chain).unwrap();
        let mut untwisted = chain.clone();
        untwisted.twisted_bond = 0;
        assert_eq!(plain, heisenberg_twisted_h(&untwisted).unwrap());
        let full = heisenberg_twisted_h(&chain.with_theta(2.0 * PI)).unwrap();
        assert!(max_abs(&(full - &plain)) < 1e-12);
        let h = heisenberg_twisted_h(&chain.with_theta(0.9)).unwrap();
        assert!(hermitian_defect(&h) < 1e-15);

        let two = TwistedHeisenbergChain::uniform(2, 1.0, false, 0).unwrap().with_theta(PI);
        let h = heisenberg_twisted_h(&two).unwrap();
        let q = c(0.25, 0.0);
        let f = c(-0.5, 0.0);
        let expect = CMatrix::from_row_slice(
            4,
            4,
            &[q, ZERO, ZERO, ZERO, ZERO, -q, f, ZERO, ZERO, f, -q, ZERO, ZERO, ZERO, ZERO, q],
        );
        assert!(max_abs(&(h - expect)) < 1e-15);
        assert!(TwistedHeisenbergChain::uniform(3, 1.0, false, 2).is_err());
        let _ = ONE;
    }

    #[test]
    fn spec_parameters() {
        let m = ModelSpec::Haldane { t1: 1.0, t2: 1.0, m: 0.0, phi: 0.0 };
        assert_eq!(m.with_parameter("phi", 1.0).unwrap(), ModelSpec::Haldane { t1: 1.0, t2: 1.0, m: 0.0, phi: 1.0 });
        assert!(m.with_parameter("u", 1.0).is_err());
        let q = ModelSpec::Qwz { u: 1.0 };
        assert_eq!(q.hamiltonian([0.2, 0.3]), Qwz { u: 1.0 }.hamiltonian([0.2, 0.3]));
    }

    #[test]
    fn expected_haldane_chern() {
        assert_eq!(Haldane::expected_chern(0.0, PI / 2.0), 1);
        assert_eq!(Haldane::expected_chern(0.0, -PI / 2.0), -1);
        assert_eq!(Haldane::expected_chern(6.0, PI / 2.0), 0);
    }
}
