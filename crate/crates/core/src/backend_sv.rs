//! Exact statevector execution, outcome probabilities, shot sampling and a
//! stochastic Pauli noise channel.

use crate::circuit::{Circuit, Gate, GateKind};
use crate::error::{Error, Result};
use crate::numerics::{c, ZERO};
use crate::seed::{rng, stable_hash};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const NORM_TOL: f64 = 1e-10;
pub const MAX_WIDTH: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    width: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>`
    pub fn zero(width: usize) -> StateVector {
        Self::basis(width, 0).expect("index 0 exists")
    }

    pub fn basis(width: usize, index: usize) -> Result<StateVector> {
        if width > MAX_WIDTH {
            return Err(Error::TooLarge { dim: width, cap: MAX_WIDTH });
        }
        let n = 1usize << width;
        if index >= n {
            return Err(Error::InvalidParameter(format!("basis index {index} >= {n}")));
        }
        let mut amps = vec![ZERO; n];
        amps[index] = c(1.0, 0.0);
        Ok(StateVector { width, amps })
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<StateVector> {
        let n = amps.len();
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::Shape(format!("{n} amplitudes is not a power of two")));
        }
        let s = StateVector { width: n.trailing_zeros() as usize, amps };
        let norm = s.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidParameter(format!("state norm {norm} is not 1")));
        }
        Ok(s)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    fn mask(&self, line: usize) -> usize {
        1usize << (self.width - 1 - line)
    }

    pub fn apply_gate(&mut self, g: &Gate) -> Result<()> {
        for &l in g.lines() {
            if l >= self.width {
                return Err(Error::LineOutOfRange { line: l, width: self.width });
            }
        }
        let lines = g.lines();
        match g.kind() {
            GateKind::Controlled(m) if m.nrows() == 2 => {
                self.apply_controlled_1q(lines[0], lines[1], g.small_matrix())
            }
            GateKind::Unitary2(_) | GateKind::Controlled(_) => {
                self.apply_local(lines, &g.matrix())
            }
            _ => self.apply_1q(lines[0], g.small_matrix()),
        }
        Ok(())
    }

    fn apply_1q(&mut self, line: usize, m: [Complex64; 4]) {
        let mask = self.mask(line);
        let n = self.amps.len();
        for hi in (0..n).step_by(2 * mask) {
            for i in hi..hi + mask {
                let (a0, a1) = (self.amps[i], self.amps[i | mask]);
                self.amps[i] = m[0] * a0 + m[1] * a1;
                self.amps[i | mask] = m[2] * a0 + m[3] * a1;
            }
        }
    }

    fn apply_controlled_1q(&mut self, control: usize, target: usize, m: [Complex64; 4]) {
        let cm = self.mask(control);
        let tm = self.mask(target);
        for i in 0..self.amps.len() {
            if i & cm == 0 || i & tm != 0 {
                continue;
            }
            let (a0, a1) = (self.amps[i], self.amps[i | tm]);
            self.amps[i] = m[0] * a0 + m[1] * a1;
            self.amps[i | tm] = m[2] * a0 + m[3] * a1;
        }
    }

    fn apply_local(&mut self, lines: &[usize], g: &crate::numerics::CMatrix) {
        let k = lines.len();
        let dim = 1usize << k;
        let masks: Vec<usize> = lines.iter().map(|&l| self.mask(l)).collect();
        let all: usize = masks.iter().sum();
        let offsets: Vec<usize> = (0..dim)
            .map(|a| (0..k).filter(|&b| a >> (k - 1 - b) & 1 == 1).map(|b| masks[b]).sum())
            .collect();
        let mut buf = vec![ZERO; dim];
        for base in 0..self.amps.len() {
            if base & all != 0 {
                continue;
            }
            for (a, off) in offsets.iter().enumerate() {
                buf[a] = self.amps[base + off];
            }
            for (a, off) in offsets.iter().enumerate() {
                self.amps[base + off] = (0..dim).map(|b| g[(a, b)] * buf[b]).sum();
            }
        }
    }

    fn apply_pauli(&mut self, line: usize, which: u8) {
        let i = c(0.0, 1.0);
        let one = c(1.0, 0.0);
        let m = match which {
            1 => [ZERO, one, one, ZERO],
            2 => [ZERO, -i, i, ZERO],
            3 => [one, ZERO, ZERO, -one],
            _ => return,
        };
        self.apply_1q(line, m);
    }

    /// Outcome probabilities over `lines` as a dense table indexed by the
    /// outcome bits (first listed line most significant).
    pub fn marginal(&self, lines: &[usize]) -> Result<Vec<f64>> {
        check_lines(lines, self.width)?;
        let mut out = vec![0.0; 1usize << lines.len()];
        let masks: Vec<usize> = lines.iter().map(|&l| self.mask(l)).collect();
        for (idx, a) in self.amps.iter().enumerate() {
            let key = masks.iter().fold(0usize, |acc, m| (acc << 1) | usize::from(idx & m != 0));
            out[key] += a.norm_sqr();
        }
        Ok(out)
    }
}

fn check_lines(lines: &[usize], width: usize) -> Result<()> {
    for (i, &l) in lines.iter().enumerate() {
        if l >= width {
            return Err(Error::LineOutOfRange { line: l, width });
        }
        if lines[..i].contains(&l) {
            return Err(Error::DuplicateLine(l));
        }
    }
    Ok(())
}

pub fn bitstring(value: usize, bits: usize) -> String {
    (0..bits).map(|b| if value >> (bits - 1 - b) & 1 == 1 { '1' } else { '0' }).collect()
}

/// Draw `shots` outcomes from a discrete distribution by sequential binomial
/// splitting. Returns one count per table entry.
pub fn multinomial(probs: &[f64], shots: u64, rng: &mut impl Rng) -> Vec<u64> {
    let mut counts = vec![0u64; probs.len()];
    let mut left = shots;
    let mut mass: f64 = probs.iter().map(|p| p.max(0.0)).sum();
    for (i, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        let p = p.max(0.0);
        let q = if mass > 0.0 { (p / mass).min(1.0) } else { 0.0 };
        let n = if i + 1 == probs.len() || q >= 1.0 {
            left
        } else if q <= 0.0 {
            0
        } else {
            Binomial::new(left, q).expect("valid binomial").sample(rng)
        };
        counts[i] = n;
        left -= n;
        mass -= p;
    }
    counts
}

pub fn run(circ: &Circuit, initial: &StateVector) -> Result<StateVector> {
    if circ.width() != initial.width {
        return Err(Error::Shape(format!("circuit width {} vs state width {}", circ.width(), initial.width)));
    }
    let mut s = initial.clone();
    for g in circ.gates() {
        s.apply_gate(g)?;
    }
    Ok(s)
}

/// Marginal probabilities keyed by bitstring; zero-probability outcomes omitted.
pub fn probabilities(s: &StateVector, lines: &[usize]) -> Result<BTreeMap<String, f64>> {
    let table = s.marginal(lines)?;
    Ok(table
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(k, &p)| (bitstring(k, lines.len()), p))
        .collect())
}

pub fn sample(s: &StateVector, lines: &[usize], shots: u64, seed: u64) -> Result<BTreeMap<String, u64>> {
    if shots == 0 {
        return Err(Error::InvalidParameter("shots must be at least 1".into()));
    }
    let table = s.marginal(lines)?;
    let counts = multinomial(&table, shots, &mut rng(seed));
    Ok(counts
        .iter()
        .enumerate()
        .filter(|(_, &n)| n > 0)
        .map(|(k, &n)| (bitstring(k, lines.len()), n))
        .collect())
}

/// Stochastic Pauli noise: after each gate, with probability `p` a Pauli drawn
/// uniformly from {I, X, Y, Z} hits every line the gate touches. At `p = 1`
/// this is the fully depolarizing channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub depolarizing_p: f64,
    /// Override for gates on two or more lines; `None` uses `depolarizing_p`.
    #[serde(default)]
    pub depolarizing_p_2q: Option<f64>,
    pub readout_flip_p: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn off(seed: u64) -> NoiseSpec {
        NoiseSpec { depolarizing_p: 0.0, depolarizing_p_2q: None, readout_flip_p: 0.0, seed }
    }

    /// Error rates from average gate fidelities of 99.6 % (one qubit) and
    /// 96.1 % (two qubits); readout is left ideal.
    pub fn hardware_like(seed: u64) -> NoiseSpec {
        NoiseSpec { depolarizing_p: 0.004, depolarizing_p_2q: Some(0.039), readout_flip_p: 0.0, seed }
    }

    pub fn validate(&self) -> Result<()> {
        let ps = [self.depolarizing_p, self.depolarizing_p_2q.unwrap_or(0.0), self.readout_flip_p];
        if ps.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidParameter(format!("noise probabilities out of [0, 1]: {ps:?}")));
        }
        Ok(())
    }

    fn gate_p(&self, arity: usize) -> f64 {
        if arity >= 2 {
            self.depolarizing_p_2q.unwrap_or(self.depolarizing_p)
        } else {
            self.depolarizing_p
        }
    }
}

pub fn run_noisy_with(
    circ: &Circuit,
    initial: &StateVector,
    noise: &NoiseSpec,
    rng: &mut impl Rng,
) -> Result<StateVector> {
    noise.validate()?;
    if circ.width() != initial.width {
        return Err(Error::Shape(format!("circuit width {} vs state width {}", circ.width(), initial.width)));
    }
    let mut s = initial.clone();
    for g in circ.gates() {
        s.apply_gate(g)?;
        let p = noise.gate_p(g.arity());
        if p > 0.0 && rng.random::<f64>() < p {
            for &l in g.lines() {
                let which: u8 = rng.random_range(0..4);
                s.apply_pauli(l, which);
            }
        }
    }
    Ok(s)
}

/// One noisy trajectory seeded by `noise.seed`.
pub fn run_noisy(circ: &Circuit, initial: &StateVector, noise: &NoiseSpec) -> Result<StateVector> {
    run_noisy_with(circ, initial, noise, &mut rng(noise.seed))
}

/// One trajectory per shot (seed `stable_hash(noise.seed, shot)`), one
/// outcome each, with independent readout flips on every measured bit.
pub fn sample_noisy(
    circ: &Circuit,
    initial: &StateVector,
    noise: &NoiseSpec,
    lines: &[usize],
    shots: u64,
) -> Result<BTreeMap<String, u64>> {
    if shots == 0 {
        return Err(Error::InvalidParameter("shots must be at least 1".into()));
    }
    check_lines(lines, circ.width())?;
    let mut table = vec![0u64; 1usize << lines.len()];
    let k = lines.len();
    for shot in 0..shots {
        let mut r = rng(stable_hash(noise.seed, shot));
        let s = run_noisy_with(circ, initial, noise, &mut r)?;
        let probs = s.marginal(lines)?;
        let mut u: f64 = r.random::<f64>() * probs.iter().sum::<f64>();
        let mut outcome = probs.len() - 1;
        for (i, p) in probs.iter().enumerate() {
            if u < *p {
                outcome = i;
                break;
            }
            u -= p;
        }
        for b in 0..k {
            if noise.readout_flip_p > 0.0 && r.random::<f64>() < noise.readout_flip_p {
                outcome ^= 1 << (k - 1 - b);
            }
        }
        table[outcome] += 1;
    }
    Ok(table
        .iter()
        .enumerate()
        .filter(|(_, &n)| n > 0)
        .map(|(k, &n)| (bitstring(k, lines.len()), n))
        .collect())
}
