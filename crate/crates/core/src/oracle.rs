//! Exact classical references: Wilson loops, plaquette fluxes, lattice Chern
//! numbers, hybrid Wannier centres and the twist Berry phase of spin chains.

use crate::adiabatic::{Closure, MomentumPath};
use crate::error::{Error, Result};
use crate::models::{heisenberg_twisted_h, BlochModel, TwistedHeisenbergChain};
use crate::numerics::{eig_hermitian_dense, CVector, DEGENERACY_TOL, ONE};
use crate::readout::winding_number;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Overlaps below this modulus mean the discretisation is too coarse.
pub const MIN_OVERLAP: f64 = 1e-6;
pub const QUANTIZATION_TOL: f64 = 1e-9;

/// Map an angle to `[-pi, pi)`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y >= PI {
        -PI
    } else {
        y
    }
}

/// `arg prod_i <s_i|s_{i+1}>` over the cyclic list (the last state connects
/// back to the first; do not repeat it). Result in `(-pi, pi]`.
pub fn wilson_loop(states: &[CVector]) -> Result<f64> {
    if states.len() < 2 {
        return Err(Error::InvalidParameter("wilson loop needs at least two states".into()));
    }
    let n = states.len();
    let mut prod = ONE;
    for i in 0..n {
        let m = states[i].dotc(&states[(i + 1) % n]);
        let modulus = m.norm();
        if modulus < MIN_OVERLAP {
            return Err(Error::RefinementNeeded { index: i, modulus });
        }
        // keep the running product at unit scale
        prod *= m / modulus;
    }
    Ok(prod.arg())
}

fn band_state(model: &dyn BlochModel, k: [f64; 2], band: usize) -> Result<CVector> {
    let spec = model.spectrum(k)?;
    if band >= spec.pairs.len() {
        return Err(Error::InvalidParameter(format!("band {band} out of range")));
    }
    let lo = if band > 0 { spec.pairs[band].value - spec.pairs[band - 1].value } else { f64::INFINITY };
    let hi = spec.pairs.get(band + 1).map_or(f64::INFINITY, |p| p.value - spec.pairs[band].value);
    let gap = lo.min(hi);
    if gap <= DEGENERACY_TOL {
        return Err(Error::GapClosure { k, gap });
    }
    Ok(spec.pairs[band].vector.clone())
}

/// Wilson loop over the four corners of the square at `corner` with side `dk`,
/// visited counter-clockwise.
pub fn plaquette_flux(model: &dyn BlochModel, corner: [f64; 2], dk: f64) -> Result<f64> {
    plaquette_flux_band(model, corner, dk, 0)
}

pub fn plaquette_flux_band(model: &dyn BlochModel, corner: [f64; 2], dk: f64, band: usize) -> Result<f64> {
    let [x, y] = corner;
    let states = [[x, y], [x + dk, y], [x + dk, y + dk], [x, y + dk]]
        .iter()
        .map(|&k| band_state(model, k, band))
        .collect::<Result<Vec<_>>>()?;
    wilson_loop(&states)
}

/// Wilson loop over the points of a closed path (the closing point is dropped).
pub fn path_berry_phase(model: &dyn BlochModel, path: &MomentumPath, band: usize) -> Result<f64> {
    if path.closure() == Closure::Open {
        return Err(Error::InvalidParameter("berry phase needs a closed path".into()));
    }
    let pts = path.points();
    let states = pts[..pts.len() - 1]
        .iter()
        .map(|&k| band_state(model, k, band))
        .collect::<Result<Vec<_>>>()?;
    wilson_loop(&states)
}

/// Per-plaquette Berry fluxes. `fluxes[iy][ix]` belongs to the plaquette with
/// lower-left corner `origin + (ix, iy) * delta_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxGrid {
    pub n: usize,
    pub origin: [f64; 2],
    pub delta_k: f64,
    pub fluxes: Vec<Vec<f64>>,
    pub model: String,
    pub chern: f64,
}

impl FluxGrid {
    pub fn new(origin: [f64; 2], delta_k: f64, fluxes: Vec<Vec<f64>>, model: String) -> FluxGrid {
        let n = fluxes.len();
        let mut g = FluxGrid { n, origin, delta_k, fluxes, model, chern: 0.0 };
        g.chern = g.total() / (2.0 * PI);
        g
    }

    /// Row-major, fixed-order sum of all fluxes.
    pub fn total(&self) -> f64 {
        self.fluxes.iter().flatten().sum()
    }

    pub fn quantization_residual(&self) -> f64 {
        (self.chern - self.chern.round()).abs()
    }

    pub fn corner(&self, ix: usize, iy: usize) -> [f64; 2] {
        [self.origin[0] + ix as f64 * self.delta_k, self.origin[1] + iy as f64 * self.delta_k]
    }

    pub fn max_abs_difference(&self, other: &FluxGrid) -> f64 {
        self.fluxes
            .iter()
            .flatten()
            .zip(other.fluxes.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Periodic tiling to `factor * n` plaquettes per side, shifted so the
    /// original zone sits near the middle (exactly centred for even `n`).
    pub fn tile(&self, factor: usize) -> FluxGrid {
        let n = self.n;
        let big = factor * n;
        let shift = n * factor.saturating_sub(1) / 2;
        let fluxes = (0..big)
            .map(|iy| (0..big).map(|ix| self.fluxes[(iy + big * n - shift) % n][(ix + big * n - shift) % n]).collect())
            .collect();
        let origin = [self.origin[0] - shift as f64 * self.delta_k, self.origin[1] - shift as f64 * self.delta_k];
        let mut g = FluxGrid::new(origin, self.delta_k, fluxes, self.model.clone());
        g.chern = self.chern;
        g
    }
}

pub fn chern_fukui(model: &dyn BlochModel, n: usize) -> Result<(FluxGrid, i64)> {
    chern_fukui_band(model, n, 0)
}

/// Fukui-Hatsugai-Suzuki lattice Chern number of `band` on an `n x n` grid
/// over `[-pi, pi)^2`. Grid states are computed once and indexed modulo `n`,
/// which makes the total an exact multiple of `2 pi`.
pub fn chern_fukui_band(model: &dyn BlochModel, n: usize, band: usize) -> Result<(FluxGrid, i64)> {
    if n < 2 {
        return Err(Error::InvalidParameter("grid needs at least 2 points per side".into()));
    }
    let dk = 2.0 * PI / n as f64;
    let k = |i: usize| -PI + i as f64 * dk;
    let states: Vec<Vec<CVector>> = (0..n)
        .map(|iy| (0..n).map(|ix| band_state(model, [k(ix), k(iy)], band)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let mut fluxes = vec![vec![0.0; n]; n];
    for iy in 0..n {
        for ix in 0..n {
            let (x1, y1) = ((ix + 1) % n, (iy + 1) % n);
            let loop4 = [
                states[iy][ix].clone(),
                states[iy][x1].clone(),
                states[y1][x1].clone(),
                states[y1][ix].clone(),
            ];
            fluxes[iy][ix] = wilson_loop(&loop4)?;
        }
    }
    let grid = FluxGrid::new([-PI, -PI], dk, fluxes, model.label());
    let c = grid.chern.round();
    if grid.quantization_residual() > QUANTIZATION_TOL {
        return Err(Error::Backend(format!("lattice Chern sum {} is not quantized", grid.chern)));
    }
    Ok((grid, c as i64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WannierTrace {
    pub ky: Vec<f64>,
    /// Hybrid Wannier centres in `[-pi, pi)`.
    pub centers: Vec<f64>,
    pub winding: i64,
}

/// Centres `X_W(ky) = i/(2 pi) * int <n|d_kx n>` (in units where the cell is
/// `2 pi` long), i.e. minus the argument of the kx-line Wilson product.
pub fn hybrid_wannier_trace(model: &dyn BlochModel, n_kx: usize, n_ky: usize) -> Result<WannierTrace> {
    if n_kx < 2 {
        return Err(Error::InvalidParameter("need at least 2 kx points".into()));
    }
    let ky: Vec<f64> = (0..n_ky).map(|j| -PI + 2.0 * PI * j as f64 / n_ky as f64).collect();
    let centers = ky
        .iter()
        .map(|&y| {
            let states = (0..n_kx)
                .map(|i| band_state(model, [-PI + 2.0 * PI * i as f64 / n_kx as f64, y], 0))
                .collect::<Result<Vec<_>>>()?;
            Ok(wrap_angle(-wilson_loop(&states)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let winding = winding_number(&centers, 0.0)?;
    Ok(WannierTrace { ky, centers, winding })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwistPhase {
    /// Berry phase in `(-pi, pi]`.
    pub gamma: f64,
    /// The nearer of 0 and pi.
    pub nearest: f64,
    /// `|gamma - nearest|` modulo `2 pi`.
    pub residual: f64,
}

/// Berry phase of the chain's ground state as the twist angle runs over
/// `theta_j = 2 pi j / n_theta`.
pub fn heisenberg_twist_berry_phase(chain: &TwistedHeisenbergChain, n_theta: usize) -> Result<TwistPhase> {
    if n_theta < 3 {
        return Err(Error::InvalidParameter("need at least 3 twist angles".into()));
    }
    let states = (0..n_theta)
        .map(|j| {
            let theta = 2.0 * PI * j as f64 / n_theta as f64;
            let spec = eig_hermitian_dense(&heisenberg_twisted_h(&chain.with_theta(theta))?)?;
            if spec.is_degenerate() {
                return Err(Error::Degenerate { parameter: "theta".into(), value: theta, gap: spec.gap() });
            }
            Ok(spec.pairs[0].vector.clone())
        })
        .collect::<Result<Vec<_>>>()?;
    let gamma = wilson_loop(&states)?;
    let to_zero = gamma.abs();
    let to_pi = PI - gamma.abs();
    let (nearest, residual) = if to_zero <= to_pi { (0.0, to_zero) } else { (PI, to_pi) };
    Ok(TwistPhase { gamma, nearest, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Haldane, Qwz};
    use crate::numerics::{c, CMatrix};

    #[test]
    fn identical_states_give_zero() {
        let s = CVector::from_row_slice(&[c(0.6, 0.0), c(0.0, 0.8)]);
        assert_eq!(wilson_loop(&[s.clone(), s.clone(), s]).unwrap(), 0.0);
    }

    #[test]
    fn three_state_loop_by_hand() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let a = CVector::from_row_slice(&[c(1.0, 0.0), c(0.0, 0.0)]);
        let b = CVector::from_row_slice(&[c(r, 0.0), c(0.0, r)]);
        let d = CVector::from_row_slice(&[c(0.5, 0.5), c(r, 0.0)]);
        let ab = a.dotc(&b);
        let bd = b.dotc(&d);
        let da = d.dotc(&a);
        let expect = (ab * bd * da).arg();
        assert!((wilson_loop(&[a.clone(), b.clone(), d]).unwrap() - expect).abs() < 1e-15);
        // (1,0) -> (1,i)/sqrt2 -> (0,1) closes through an orthogonal pair
        let e = CVector::from_row_slice(&[c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(wilson_loop(&[a, b, e]), Err(Error::RefinementNeeded { index: 2, .. })));
    }

    #[test]
    fn qwz_chern_numbers() {
        for (u, expect) in [(-3.0, 0), (-1.0, -1), (1.0, 1), (3.0, 0)] {
            let (grid, chern) = chern_fukui(&Qwz { u }, 15).unwrap();
            assert_eq!(chern, expect, "u={u}");
            assert!(grid.quantization_residual() < 1e-9);
            assert!(grid.fluxes.iter().flatten().all(|f| f.abs() <= PI));
        }
    }

    #[test]
    fn haldane_chern_numbers() {
        assert_eq!(chern_fukui(&Haldane::new(0.0, -PI / 2.0), 15).unwrap().1, -1);
        assert_eq!(chern_fukui(&Haldane::new(0.0, PI / 2.0), 15).unwrap().1, 1);
        assert_eq!(chern_fukui(&Haldane::new(6.0, 1.0), 15).unwrap().1, 0);
    }

    #[test]
    fn haldane_gapless_point_detected() {
        let err = chern_fukui(&Haldane::new(0.0, 0.0), 12).unwrap_err();
        assert!(matches!(err, Error::GapClosure { .. }));
    }

    #[test]
    fn refinement_convergence() {
        use crate::adiabatic::plaquette_path;
        let m = Qwz { u: 1.0 };
        let coarse = path_berry_phase(&m, &plaquette_path([0.2, -0.4], 0.5, 3).unwrap(), 0).unwrap();
        let fine = path_berry_phase(&m, &plaquette_path([0.2, -0.4], 0.5, 25).unwrap(), 0).unwrap();
        assert!((coarse - fine).abs() < 1e-3, "{coarse} {fine}");
    }

    #[test]
    fn wannier_traces() {
        assert_eq!(hybrid_wannier_trace(&Qwz { u: 1.0 }, 60, 30).unwrap().winding, 1);
        assert_eq!(hybrid_wannier_trace(&Qwz { u: -1.0 }, 60, 30).unwrap().winding, -1);
        let t = hybrid_wannier_trace(&Qwz { u: 3.0 }, 60, 30).unwrap();
        assert_eq!(t.winding, 0);
        assert!(t.centers.iter().all(|x| (-PI..PI).contains(x)));
    }

    #[test]
    fn tiling_is_periodic() {
        let (grid, _) = chern_fukui(&Qwz { u: 1.0 }, 4).unwrap();
        let big = grid.tile(2);
        assert_eq!(big.n, 8);
        assert_eq!(big.origin[0], -PI - 2.0 * grid.delta_k);
        assert_eq!(big.fluxes[2][2], grid.fluxes[0][0]);
        assert_eq!(big.fluxes[7][0], grid.fluxes[1][2]);
        assert_eq!(big.chern, grid.chern);
    }

    #[test]
    fn heisenberg_pair_is_pi() {
        let chain = TwistedHeisenbergChain::uniform(2, 1.0, false, 0).unwrap();
        let t = heisenberg_twist_berry_phase(&chain, 50).unwrap();
        assert!((t.nearest - PI).abs() < 1e-15 && t.residual < 1e-10, "{t:?}");
        let _ = CMatrix::zeros(1, 1);
    }
}
