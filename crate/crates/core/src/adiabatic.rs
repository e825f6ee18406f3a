//! Momentum-space paths and Trotterized forward/backward evolution.

use crate::error::{Error, Result};
use crate::models::BlochModel;
use crate::numerics::{expm_i_hermitian, nearest_unitary, unitary_defect, CMatrix, CVector, Sign, UNITARY_TOL};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Closure {
    Open,
    /// Last point is bitwise the first point.
    Loop,
    /// Last point is the first shifted by a reciprocal lattice vector.
    Periodic,
}

/// Where in each increment the Hamiltonian is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    #[default]
    Left,
    Midpoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentumPath {
    points: Vec<[f64; 2]>,
    closure: Closure,
    steps_per_segment: usize,
}

impl MomentumPath {
    pub fn new(points: Vec<[f64; 2]>, closure: Closure, steps_per_segment: usize) -> Result<MomentumPath> {
        if points.is_empty() {
            return Err(Error::Empty("path without points".into()));
        }
        if closure == Closure::Loop && points.first() != points.last() {
            return Err(Error::InvalidParameter("closed loop must end on its first point".into()));
        }
        Ok(MomentumPath { points, closure, steps_per_segment: steps_per_segment.max(1) })
    }

    /// A path of one point: one increment at fixed momentum.
    pub fn single(k: [f64; 2]) -> MomentumPath {
        MomentumPath { points: vec![k], closure: Closure::Open, steps_per_segment: 1 }
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn closure(&self) -> Closure {
        self.closure
    }

    pub fn is_closed(&self) -> bool {
        self.closure != Closure::Open
    }

    pub fn steps_per_segment(&self) -> usize {
        self.steps_per_segment
    }

    pub fn increments(&self) -> usize {
        (self.points.len() - 1).max(1)
    }

    /// Momentum at which increment `j` is evaluated.
    pub fn sample_point(&self, j: usize, sampling: Sampling) -> [f64; 2] {
        if self.points.len() == 1 {
            return self.points[0];
        }
        let a = self.points[j];
        match sampling {
            Sampling::Left => a,
            Sampling::Midpoint => {
                let b = self.points[j + 1];
                [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
            }
        }
    }
}

/// Counter-clockwise loop around the square with lower-left corner `corner`
/// and side `dk`, each side cut into `steps_per_link` equal increments.
pub fn plaquette_path(corner: [f64; 2], dk: f64, steps_per_link: usize) -> Result<MomentumPath> {
    if steps_per_link == 0 {
        return Err(Error::InvalidParameter("steps_per_link must be at least 1".into()));
    }
    let [x, y] = corner;
    let corners = [[x, y], [x + dk, y], [x + dk, y + dk], [x, y + dk], [x, y]];
    let mut points = Vec::with_capacity(4 * steps_per_link + 1);
    for w in corners.windows(2) {
        let (a, b) = (w[0], w[1]);
        for s in 0..steps_per_link {
            let f = s as f64 / steps_per_link as f64;
            points.push([a[0] + (b[0] - a[0]) * f, a[1] + (b[1] - a[1]) * f]);
        }
    }
    points.push(corner);
    MomentumPath::new(points, Closure::Loop, steps_per_link)
}

/// `kx` from `-pi` to `pi` at fixed `ky` in two halves of `n_half`
/// increments, each of size `pi / n_half`. Closed by Brillouin-zone periodicity.
pub fn line_path(ky: f64, n_half: usize) -> Result<MomentumPath> {
    if n_half < 1 {
        return Err(Error::InvalidParameter("need at least one increment per half".into()));
    }
    let n = 2 * n_half;
    let points = (0..=n).map(|j| [-PI + 2.0 * PI * j as f64 / n as f64, ky]).collect();
    MomentumPath::new(points, Closure::Periodic, n_half)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub k: [f64; 2],
    pub hamiltonian: CMatrix,
    pub dt: f64,
    pub sign: Sign,
    pub unitary: Arc<CMatrix>,
}

impl Factor {
    fn new(k: [f64; 2], hamiltonian: CMatrix, dt: f64, sign: Sign) -> Result<Factor> {
        let unitary = Arc::new(expm_i_hermitian(&hamiltonian, dt, sign)?);
        Ok(Factor { k, hamiltonian, dt, sign, unitary })
    }
}

/// Ordered product of exponentials (first factor acts first).
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionPlan {
    pub factors: Vec<Factor>,
    pub path: MomentumPath,
    pub sampling: Sampling,
    /// Multiple of the Berry phase the plan accumulates on a ground state
    /// (2 for the double loop, 1 for the mirror plan).
    pub multiplicity: u32,
}

impl EvolutionPlan {
    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn total_time(&self) -> f64 {
        self.factors.iter().map(|f| f.dt).sum()
    }

    pub fn dim(&self) -> usize {
        self.factors.first().map_or(0, |f| f.hamiltonian.nrows())
    }

    /// Product of all factors, later factors on the left.
    pub fn unitary(&self) -> CMatrix {
        let d = self.dim().max(1);
        let mut u = CMatrix::identity(d, d);
        for f in &self.factors {
            u = &*f.unitary * u;
        }
        if unitary_defect(&u) > UNITARY_TOL {
            u = nearest_unitary(&u);
        }
        u
    }

    pub fn apply(&self, state: &CVector) -> CVector {
        let mut s = state.clone();
        for f in &self.factors {
            s = &*f.unitary * s;
        }
        s
    }

    /// Exact inverse: reversed order, opposite signs.
    pub fn reversed(&self) -> Result<EvolutionPlan> {
        let factors = self
            .factors
            .iter()
            .rev()
            .map(|f| Factor::new(f.k, f.hamiltonian.clone(), f.dt, f.sign.flipped()))
            .collect::<Result<Vec<_>>>()?;
        Ok(EvolutionPlan { factors, ..self.clone() })
    }

    /// `(arg <psi|U|psi>, |<psi|U|psi>|^2)` for a normalized `psi`.
    pub fn phase_and_fidelity(&self, psi: &CVector) -> (f64, f64) {
        let overlap = psi.dotc(&self.apply(psi));
        (overlap.arg(), overlap.norm_sqr())
    }

    /// `U^power` by repeated squaring, cleaned back onto the unitary group.
    pub fn unitary_power(&self, power: u64) -> CMatrix {
        let base = self.unitary();
        let d = base.nrows();
        let mut result = CMatrix::identity(d, d);
        let mut sq = base;
        let mut p = power;
        while p > 0 {
            if p & 1 == 1 {
                result = &sq * result;
            }
            p >>= 1;
            if p > 0 {
                sq = &sq * &sq;
            }
        }
        if unitary_defect(&result) > UNITARY_TOL {
            result = nearest_unitary(&result);
        }
        result
    }
}

pub fn trotterize(model: &dyn BlochModel, path: &MomentumPath, total_time: f64, sign: Sign) -> Result<EvolutionPlan> {
    trotterize_with(model, path, total_time, sign, Sampling::Left)
}

/// One factor `exp(-i sign H(k_j) dt)` per increment, `dt = T / N`.
pub fn trotterize_with(
    model: &dyn BlochModel,
    path: &MomentumPath,
    total_time: f64,
    sign: Sign,
    sampling: Sampling,
) -> Result<EvolutionPlan> {
    if !(total_time > 0.0 && total_time.is_finite()) {
        return Err(Error::InvalidParameter(format!("total time must be positive, got {total_time}")));
    }
    let n = path.increments();
    let dt = total_time / n as f64;
    let factors = (0..n)
        .map(|j| {
            let k = path.sample_point(j, sampling);
            Factor::new(k, model.hamiltonian(k), dt, sign)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvolutionPlan { factors, path: path.clone(), sampling, multiplicity: 1 })
}

pub fn double_loop_plan(model: &dyn BlochModel, path: &MomentumPath, total_time: f64) -> Result<EvolutionPlan> {
    double_loop_plan_with(model, path, total_time, Sampling::Left)
}

/// Forward traversal with sign +1 followed by the same traversal with sign -1.
/// On a ground state the dynamical phases cancel and twice the Berry phase remains.
pub fn double_loop_plan_with(
    model: &dyn BlochModel,
    path: &MomentumPath,
    total_time: f64,
    sampling: Sampling,
) -> Result<EvolutionPlan> {
    if !path.is_closed() {
        return Err(Error::InvalidParameter("double loop needs a closed path".into()));
    }
    let forward = trotterize_with(model, path, total_time, Sign::Plus, sampling)?;
    let backward = trotterize_with(model, path, total_time, Sign::Minus, sampling)?;
    let mut factors = forward.factors;
    factors.extend(backward.factors);
    Ok(EvolutionPlan { factors, path: path.clone(), sampling, multiplicity: 2 })
}

/// Single traversal of the `kx` line at `ky` with sign +1 for `kx < 0` and
/// -1 for `kx > 0`. Each half takes `n_half` steps of `dt = T / n_half`;
/// the Hamiltonian is sampled at increment midpoints so that step `j` and
/// step `2 n_half - 1 - j` sit at mirror images `kx` and `-kx`.
pub fn mirror_symmetric_plan(model: &dyn BlochModel, ky: f64, n_half: usize, total_time: f64) -> Result<EvolutionPlan> {
    if !(total_time > 0.0 && total_time.is_finite()) {
        return Err(Error::InvalidParameter(format!("total time must be positive, got {total_time}")));
    }
    let path = line_path(ky, n_half)?;
    let dt = total_time / n_half as f64;
    let sampling = Sampling::Midpoint;
    for j in 0..n_half {
        let k = path.sample_point(j, sampling);
        let mirror = path.sample_point(2 * n_half - 1 - j, sampling);
        let e = model.spectrum(k)?.ground().value;
        let em = model.spectrum(mirror)?.ground().value;
        if (e - em).abs() > 1e-9 {
            return Err(Error::SymmetryViolation { kx: k[0], mismatch: (e - em).abs() });
        }
    }
    let factors = (0..2 * n_half)
        .map(|j| {
            let k = path.sample_point(j, sampling);
            let sign = if j < n_half { Sign::Plus } else { Sign::Minus };
            Factor::new(k, model.hamiltonian(k), dt, sign)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvolutionPlan { factors, path, sampling, multiplicity: 1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ground_state, Haldane, Qwz};
    use crate::numerics::{bloch_matrix, max_abs};

    #[derive(Debug)]
    struct Constant;
    impl BlochModel for Constant {
        fn label(&self) -> String {
            "constant".into()
        }
        fn hamiltonian(&self, _k: [f64; 2]) -> CMatrix {
            bloch_matrix(0.3, [0.2, -0.5, 0.9])
        }
    }

    #[test]
    fn plaquette_path_shape() {
        let p = plaquette_path([0.1, 0.2], 0.5, 1).unwrap();
        assert_eq!(p.increments(), 4);
        let dk = 2.0 * PI / 15.0;
        let p = plaquette_path([-PI, -PI], dk, 2).unwrap();
        assert_eq!(p.increments(), 8);
        for w in p.points().windows(2) {
            let step = (w[1][0] - w[0][0]).abs() + (w[1][1] - w[0][1]).abs();
            assert!((step - 2.0 * PI / 30.0).abs() < 1e-14);
        }
        assert_eq!(p.points().first().unwrap(), p.points().last().unwrap());
        assert!(plaquette_path([0.0, 0.0], 0.1, 0).is_err());
    }

    #[test]
    fn line_path_shape() {
        let p = line_path(0.4, 100).unwrap();
        assert_eq!(p.increments(), 200);
        assert_eq!(p.points()[0][0], -PI);
        assert!((p.points()[1][0] - p.points()[0][0] - PI / 100.0).abs() < 1e-14);
        let m = Qwz { u: 1.0 };
        let (a, b) = (m.hamiltonian(p.points()[0]), m.hamiltonian(*p.points().last().unwrap()));
        assert!(max_abs(&(a - b)) < 1e-12);
    }

    #[test]
    fn trotterize_examples() {
        let m = Qwz { u: 1.0 };
        let k = [0.3, -0.2];
        let plan = trotterize(&m, &MomentumPath::single(k), 0.7, Sign::Plus).unwrap();
        assert_eq!(plan.len(), 1);
        let direct = expm_i_hermitian(&m.hamiltonian(k), 0.7, Sign::Plus).unwrap();
        assert_eq!(*plan.factors[0].unitary, direct);

        let path = line_path(0.0, 50).unwrap();
        let plan = trotterize(&m, &path, 10.0, Sign::Plus).unwrap();
        assert!((plan.factors[0].dt - 0.1).abs() < 1e-15);
        assert!((plan.total_time() - 10.0).abs() < 1e-12);
        assert!(trotterize(&m, &path, 0.0, Sign::Plus).is_err());

        let psi = ground_state(&m, path.points()[0]).unwrap();
        let back = plan.reversed().unwrap();
        let out = back.apply(&plan.apply(&psi));
        assert!(psi.dotc(&out).norm_sqr() > 1.0 - 1e-8);
    }

    #[test]
    fn constant_double_loop_has_no_phase() {
        let path = plaquette_path([0.0, 0.0], 0.3, 2).unwrap();
        let plan = double_loop_plan(&Constant, &path, 3.0).unwrap();
        assert_eq!(plan.len(), 16);
        let psi = ground_state(&Constant, [0.0, 0.0]).unwrap();
        let (phase, fid) = plan.phase_and_fidelity(&psi);
        assert!(phase.abs() < 1e-8 && (fid - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mirror_plan_rejects_haldane() {
        let err = mirror_symmetric_plan(&Haldane::new(0.3, 1.0), 0.5, 20, 10.0).unwrap_err();
        assert!(matches!(err, Error::SymmetryViolation { .. }));
        let plan = mirror_symmetric_plan(&Qwz { u: 1.0 }, 0.5, 20, 10.0).unwrap();
        assert_eq!(plan.len(), 40);
        assert_eq!(plan.factors[19].sign, Sign::Plus);
        assert_eq!(plan.factors[20].sign, Sign::Minus);
    }

    #[test]
    fn power_matches_repeat() {
        let path = plaquette_path([0.2, 0.1], 0.4, 2).unwrap();
        let plan = double_loop_plan(&Qwz { u: 1.0 }, &path, 5.0).unwrap();
        let u = plan.unitary();
        let u5 = &u * &u * &u * &u * &u;
        assert!(max_abs(&(plan.unitary_power(5) - u5)) < 1e-12);
    }
}
