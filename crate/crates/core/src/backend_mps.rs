//! Matrix-product-state execution with a hard bond-dimension cap.
//!
//! Site tensors are stored as `A[a, s, b]` (left bond, physical, right bond),
//! row-major. One orthogonality centre is tracked: sites left of it are
//! left-canonical, sites right of it right-canonical. Two-qubit gates act on
//! adjacent lines only; [`route_adjacent`] rewrites a circuit with SWAP chains.

use crate::backend_sv::{bitstring, StateVector};
use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::numerics::{c, svd_truncated, CMatrix, ONE, ZERO};
use crate::seed::rng;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use std::collections::BTreeMap;

pub const MAX_CONTRACT_WIDTH: usize = 14;
pub const DEFAULT_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
struct Site {
    l: usize,
    r: usize,
    data: Vec<Complex64>,
}

impl Site {
    fn at(&self, a: usize, s: usize, b: usize) -> Complex64 {
        self.data[(a * 2 + s) * self.r + b]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpsState {
    width: usize,
    sites: Vec<Site>,
    chi_max: usize,
    cutoff: f64,
    discarded_total: f64,
    center: usize,
}

/// Product state from a bitstring over lines `0..width` (first character is line 0).
pub fn mps_from_basis(width: usize, bits: &str, chi_max: usize, cutoff: f64) -> Result<MpsState> {
    if bits.len() != width || width == 0 {
        return Err(Error::InvalidParameter(format!("bitstring {bits:?} does not match width {width}")));
    }
    if chi_max == 0 {
        return Err(Error::InvalidParameter("chi_max must be at least 1".into()));
    }
    let sites = bits
        .chars()
        .map(|ch| {
            let data = match ch {
                '0' => Ok(vec![ONE, ZERO]),
                '1' => Ok(vec![ZERO, ONE]),
                other => Err(Error::InvalidParameter(format!("bad bit {other:?}"))),
            }?;
            Ok(Site { l: 1, r: 1, data })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MpsState { width, sites, chi_max, cutoff, discarded_total: 0.0, center: 0 })
}

fn mat_from(rows: usize, cols: usize, data: &[Complex64]) -> CMatrix {
    CMatrix::from_row_slice(rows, cols, data)
}

fn row_major(m: &CMatrix) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

impl MpsState {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn chi_max(&self) -> usize {
        self.chi_max
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn discarded_total(&self) -> f64 {
        self.discarded_total
    }

    /// Internal bond dimensions, `width - 1` entries.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.width - 1].iter().map(|s| s.r).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Shift the centre one site right via QR.
    fn shift_right(&mut self) {
        let i = self.center;
        let Site { l, r, .. } = self.sites[i];
        let m = mat_from(2 * l, r, &self.sites[i].data);
        let qr = m.qr();
        let (q, rr) = (qr.q(), qr.r());
        let k = q.ncols();
        self.sites[i] = Site { l, r: k, data: row_major(&q) };
        let next = &self.sites[i + 1];
        let nm = mat_from(next.l, 2 * next.r, &next.data);
        let merged = rr * nm;
        let nr = next.r;
        self.sites[i + 1] = Site { l: k, r: nr, data: row_major(&merged) };
        self.center = i + 1;
    }

    /// Shift the centre one site left via an LQ factorisation.
    fn shift_left(&mut self) {
        let i = self.center;
        let Site { l, r, .. } = self.sites[i];
        let m = mat_from(l, 2 * r, &self.sites[i].data);
        let qr = m.adjoint().qr();
        let q = qr.q().adjoint();
        let lower = qr.r().adjoint();
        let k = q.nrows();
        self.sites[i] = Site { l: k, r, data: row_major(&q) };
        let prev = &self.sites[i - 1];
        let pm = mat_from(2 * prev.l, prev.r, &prev.data);
        let merged = pm * lower;
        let pl = prev.l;
        self.sites[i - 1] = Site { l: pl, r: k, data: row_major(&merged) };
        self.center = i - 1;
    }

    fn move_center(&mut self, target: usize) {
        while self.center < target {
            self.shift_right();
        }
        while self.center > target {
            self.shift_left();
        }
    }

    fn apply_1q(&mut self, line: usize, m: [Complex64; 4]) {
        let site = &mut self.sites[line];
        let (l, r) = (site.l, site.r);
        for a in 0..l {
            for b in 0..r {
                let i0 = (a * 2) * r + b;
                let i1 = (a * 2 + 1) * r + b;
                let (x0, x1) = (site.data[i0], site.data[i1]);
                site.data[i0] = m[0] * x0 + m[1] * x1;
                site.data[i1] = m[2] * x0 + m[3] * x1;
            }
        }
    }

    /// `g` acts on `|s_i s_{i+1}>`, row-major 4x4.
    fn apply_2q(&mut self, i: usize, g: &[Complex64; 16]) -> Result<()> {
        if self.center < i {
            self.move_center(i);
        } else if self.center > i + 1 {
            self.move_center(i + 1);
        }
        let (left, right) = (&self.sites[i], &self.sites[i + 1]);
        let (l, k, r) = (left.l, left.r, right.r);
        // theta[a, s, t, b]
        let mut theta = vec![ZERO; l * 4 * r];
        for a in 0..l {
            for s in 0..2 {
                for m in 0..k {
                    let x = left.at(a, s, m);
                    if x == ZERO {
                        continue;
                    }
                    for t in 0..2 {
                        let row = &right.data[(m * 2 + t) * r..(m * 2 + t + 1) * r];
                        let dst = &mut theta[((a * 2 + s) * 2 + t) * r..((a * 2 + s) * 2 + t + 1) * r];
                        for (d, y) in dst.iter_mut().zip(row) {
                            *d += x * y;
                        }
                    }
                }
            }
        }
        // (a s') x (t' b) matrix after the gate
        let mut mat = CMatrix::zeros(2 * l, 2 * r);
        for a in 0..l {
            for b in 0..r {
                let mut v = [ZERO; 4];
                for (st, slot) in v.iter_mut().enumerate() {
                    *slot = theta[((a * 2 + st / 2) * 2 + st % 2) * r + b];
                }
                for out in 0..4 {
                    let row = &g[out * 4..out * 4 + 4];
                    let acc = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
                    mat[(a * 2 + out / 2, (out % 2) * r + b)] = acc;
                }
            }
        }
        let svd = svd_truncated(&mat, self.chi_max, self.cutoff)?;
        let kept = svd.singular_values.len();
        if kept > self.chi_max {
            return Err(Error::Backend(format!("bond {kept} exceeds chi_max {}", self.chi_max)));
        }
        let norm: f64 = svd.singular_values.iter().map(|s| s * s).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Backend("state collapsed to zero norm after truncation".into()));
        }
        self.discarded_total += svd.discarded_weight;
        let mut right_m = svd.v_dagger;
        for (j, mut row) in right_m.row_iter_mut().enumerate() {
            row *= c(svd.singular_values[j] / norm, 0.0);
        }
        self.sites[i] = Site { l, r: kept, data: row_major(&svd.u) };
        self.sites[i + 1] = Site { l: kept, r, data: row_major(&right_m) };
        self.center = i + 1;
        Ok(())
    }

    pub fn apply_gate(&mut self, g: &Gate) -> Result<()> {
        let lines = g.lines();
        for &l in lines {
            if l >= self.width {
                return Err(Error::LineOutOfRange { line: l, width: self.width });
            }
        }
        match lines.len() {
            1 => {
                self.apply_1q(lines[0], g.small_matrix());
                Ok(())
            }
            2 => {
                let (p, q) = (lines[0], lines[1]);
                if p.abs_diff(q) != 1 {
                    return Err(Error::NonAdjacent(p, q));
                }
                let m = g.matrix();
                let mut flat = [ZERO; 16];
                for row in 0..4 {
                    for col in 0..4 {
                        // reorder to (lower line, higher line) when the gate lists them reversed
                        let (rr, cc) = if p < q { (row, col) } else { (swap_bits(row), swap_bits(col)) };
                        flat[row * 4 + col] = m[(rr, cc)];
                    }
                }
                self.apply_2q(p.min(q), &flat)
            }
            n => Err(Error::Backend(format!("{n}-line gates are not supported by the MPS backend"))),
        }
    }

    /// Route `circ` onto adjacent lines and apply every gate.
    pub fn run_circuit(&mut self, circ: &Circuit) -> Result<()> {
        if circ.width() != self.width {
            return Err(Error::Shape(format!("circuit width {} vs state width {}", circ.width(), self.width)));
        }
        for g in route_adjacent(circ)?.gates() {
            self.apply_gate(g)?;
        }
        Ok(())
    }

    /// Squared norm by left-to-right transfer matrices.
    pub fn norm_sqr(&self) -> f64 {
        let mut env = vec![ONE];
        let mut dim = 1;
        for site in &self.sites {
            env = transfer(&env, dim, site, None);
            dim = site.r;
        }
        env[0].re
    }

    /// Marginal probabilities over `lines` (first listed line most
    /// significant), by exhaustive descent of the outcome tree.
    pub fn marginal(&self, lines: &[usize]) -> Result<Vec<f64>> {
        let plan = MeasurePlan::new(lines, self.width)?;
        let mut mps = self.clone();
        mps.move_center(0);
        let mut out = vec![0.0; 1usize << lines.len()];
        mps.descend_exact(0, vec![ONE], 1, &plan, 0, &mut out);
        let total: f64 = out.iter().sum();
        for p in &mut out {
            *p /= total;
        }
        Ok(out)
    }

    fn descend_exact(&self, site: usize, env: Vec<Complex64>, dim: usize, plan: &MeasurePlan, key: usize, out: &mut [f64]) {
        if site > plan.last {
            out[plan.permute(key)] += trace(&env, dim);
            return;
        }
        let s = &self.sites[site];
        if plan.measured[site] {
            for bit in 0..2 {
                let next = transfer(&env, dim, s, Some(bit));
                if trace(&next, s.r) > 0.0 {
                    self.descend_exact(site + 1, next, s.r, plan, key << 1 | bit, out);
                }
            }
        } else {
            let next = transfer(&env, dim, s, None);
            self.descend_exact(site + 1, next, s.r, plan, key, out);
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn descend_sample(
        &self,
        site: usize,
        env: Vec<Complex64>,
        dim: usize,
        plan: &MeasurePlan,
        key: usize,
        count: u64,
        rng: &mut impl Rng,
        out: &mut [u64],
    ) {
        if count == 0 {
            return;
        }
        if site > plan.last {
            out[plan.permute(key)] += count;
            return;
        }
        let s = &self.sites[site];
        if plan.measured[site] {
            let e0 = transfer(&env, dim, s, Some(0));
            let e1 = transfer(&env, dim, s, Some(1));
            let (p0, p1) = (trace(&e0, s.r).max(0.0), trace(&e1, s.r).max(0.0));
            let q = if p0 + p1 > 0.0 { p0 / (p0 + p1) } else { 0.5 };
            let n0 = if q >= 1.0 {
                count
            } else if q <= 0.0 {
                0
            } else {
                Binomial::new(count, q).expect("valid binomial").sample(rng)
            };
            self.descend_sample(site + 1, e0, s.r, plan, key << 1, n0, rng, out);
            self.descend_sample(site + 1, e1, s.r, plan, key << 1 | 1, count - n0, rng, out);
        } else {
            let next = transfer(&env, dim, s, None);
            self.descend_sample(site + 1, next, s.r, plan, key, count, rng, out);
        }
    }
}

fn swap_bits(x: usize) -> usize {
    ((x & 1) << 1) | (x >> 1)
}

/// `env'[b, b'] = sum A[a, s, b] env[a, a'] conj(A[a', s, b'])`, summed over
/// `s` unless a physical value is fixed.
fn transfer(env: &[Complex64], dim: usize, site: &Site, fixed: Option<usize>) -> Vec<Complex64> {
    let r = site.r;
    let mut out = vec![ZERO; r * r];
    let phys: &[usize] = match fixed {
        Some(0) => &[0],
        Some(_) => &[1],
        None => &[0, 1],
    };
    for &s in phys {
        // tmp[a', b] = sum_a env[a, a'] A[a, s, b]
        let mut tmp = vec![ZERO; dim * r];
        for a in 0..dim {
            for ap in 0..dim {
                let e = env[a * dim + ap];
                if e == ZERO {
                    continue;
                }
                for b in 0..r {
                    tmp[ap * r + b] += e * site.at(a, s, b);
                }
            }
        }
        for ap in 0..dim {
            for bp in 0..r {
                let y = site.at(ap, s, bp).conj();
                if y == ZERO {
                    continue;
                }
                for b in 0..r {
                    out[b * r + bp] += tmp[ap * r + b] * y;
                }
            }
        }
    }
    out
}

fn trace(env: &[Complex64], dim: usize) -> f64 {
    (0..dim).map(|i| env[i * dim + i].re).sum()
}

struct MeasurePlan {
    measured: Vec<bool>,
    last: usize,
    /// position of each measured line in the caller's ordering, by site order
    order: Vec<usize>,
}

impl MeasurePlan {
    fn new(lines: &[usize], width: usize) -> Result<MeasurePlan> {
        let mut measured = vec![false; width];
        for &l in lines {
            if l >= width {
                return Err(Error::LineOutOfRange { line: l, width });
            }
            if measured[l] {
                return Err(Error::DuplicateLine(l));
            }
            measured[l] = true;
        }
        let mut sorted = lines.to_vec();
        sorted.sort_unstable();
        let order = sorted.iter().map(|l| lines.iter().position(|x| x == l).expect("present")).collect();
        Ok(MeasurePlan { measured, last: sorted.last().copied().unwrap_or(0), order })
    }

    /// Convert a key built in site order into the caller's line order.
    fn permute(&self, key: usize) -> usize {
        let k = self.order.len();
        let mut out = 0;
        for (rank, &pos) in self.order.iter().enumerate() {
            let bit = key >> (k - 1 - rank) & 1;
            out |= bit << (k - 1 - pos);
        }
        out
    }
}

/// Rewrite `circ` so every two-qubit gate acts on neighbouring lines. Gates
/// are relabelled through a lazily updated permutation; SWAPs restore the
/// identity layout at the end so measured lines keep their meaning.
pub fn route_adjacent(circ: &Circuit) -> Result<Circuit> {
    let w = circ.width();
    let mut pos: Vec<usize> = (0..w).collect();
    let mut at: Vec<usize> = (0..w).collect();
    let mut out = Circuit::new(w);
    let swap = |out: &mut Circuit, pos: &mut Vec<usize>, at: &mut Vec<usize>, p: usize| -> Result<()> {
        out.push(Gate::swap(p, p + 1))?;
        let (x, y) = (at[p], at[p + 1]);
        at.swap(p, p + 1);
        pos[x] = p + 1;
        pos[y] = p;
        Ok(())
    };
    for g in circ.gates() {
        match g.lines() {
            [_] => out.push(g.remapped(|l| pos[l]))?,
            &[a, b] => {
                while pos[a].abs_diff(pos[b]) > 1 {
                    let pb = pos[b];
                    if pb > pos[a] {
                        swap(&mut out, &mut pos, &mut at, pb - 1)?;
                    } else {
                        swap(&mut out, &mut pos, &mut at, pb)?;
                    }
                }
                out.push(g.remapped(|l| pos[l]))?;
            }
            lines => {
                return Err(Error::Backend(format!("cannot route a {}-line gate", lines.len())));
            }
        }
    }
    // bubble back to the identity layout
    for target in 0..w {
        while pos[target] > target {
            let p = pos[target];
            swap(&mut out, &mut pos, &mut at, p - 1)?;
        }
    }
    out.measure(circ.measured_lines())?;
    Ok(out)
}

pub fn run(circ: &Circuit, initial: &MpsState) -> Result<MpsState> {
    let mut m = initial.clone();
    m.run_circuit(circ)?;
    Ok(m)
}

pub fn contract_to_statevector(m: &MpsState) -> Result<StateVector> {
    if m.width > MAX_CONTRACT_WIDTH {
        return Err(Error::TooLarge { dim: m.width, cap: MAX_CONTRACT_WIDTH });
    }
    // vec[prefix, bond]
    let mut cur = vec![ONE];
    let mut bond = 1;
    for site in &m.sites {
        let prefixes = cur.len() / bond;
        let mut next = vec![ZERO; prefixes * 2 * site.r];
        for p in 0..prefixes {
            for a in 0..bond {
                let x = cur[p * bond + a];
                if x == ZERO {
                    continue;
                }
                for s in 0..2 {
                    for b in 0..site.r {
                        next[(p * 2 + s) * site.r + b] += x * site.at(a, s, b);
                    }
                }
            }
        }
        cur = next;
        bond = site.r;
    }
    let norm = cur.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    StateVector::from_amplitudes(cur.into_iter().map(|z| z / norm).collect())
}

/// Exact marginal keyed by bitstring, zero entries omitted.
pub fn mps_probabilities(m: &MpsState, lines: &[usize]) -> Result<BTreeMap<String, f64>> {
    let table = m.marginal(lines)?;
    Ok(table
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(k, &p)| (bitstring(k, lines.len()), p))
        .collect())
}

/// Sequential conditional sampling, left to right. All shots descend the
/// outcome tree together, split binomially at each measured site.
pub fn mps_sample(m: &MpsState, lines: &[usize], shots: u64, seed: u64) -> Result<BTreeMap<String, u64>> {
    if shots == 0 {
        return Err(Error::InvalidParameter("shots must be at least 1".into()));
    }
    let plan = MeasurePlan::new(lines, m.width)?;
    let mut mps = m.clone();
    mps.move_center(0);
    let mut out = vec![0u64; 1usize << lines.len()];
    let mut r = rng(seed);
    mps.descend_sample(0, vec![ONE], 1, &plan, 0, shots, &mut r, &mut out);
    Ok(out
        .iter()
        .enumerate()
        .filter(|(_, &n)| n > 0)
        .map(|(k, &n)| (bitstring(k, lines.len()), n))
        .collect())
}
