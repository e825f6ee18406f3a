//! Gate-level circuit representation.
//!
//! Bit order: line 0 is the most significant bit of a basis index, so on a
//! width-`w` register the state `|b_0 b_1 ... b_{w-1}>` has index
//! `sum_l b_l 2^(w-1-l)`. In phase estimation line 0 carries the most
//! significant phase bit. A gate's local matrix uses the same convention over
//! its own `lines` list (first listed line most significant).

use crate::error::{Error, Result};
use crate::numerics::{c, check_unitary, CMatrix, ONE, ZERO};
use num_complex::Complex64;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::sync::Arc;

pub const MAX_COMPOSE_WIDTH: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub enum GateKind {
    Hadamard,
    S,
    SDagger,
    Phase(f64),
    Unitary1(Arc<CMatrix>),
    Unitary2(Arc<CMatrix>),
    /// `lines[0]` is the control; the matrix acts on `lines[1..]`.
    Controlled(Arc<CMatrix>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    kind: GateKind,
    lines: Vec<usize>,
}

fn check_distinct(lines: &[usize]) -> Result<()> {
    for (i, a) in lines.iter().enumerate() {
        if lines[..i].contains(a) {
            return Err(Error::DuplicateLine(*a));
        }
    }
    Ok(())
}

fn check_square(m: &CMatrix, dim: usize) -> Result<()> {
    if m.shape() != (dim, dim) {
        return Err(Error::Shape(format!("expected {dim}x{dim} gate matrix, got {:?}", m.shape())));
    }
    Ok(())
}

impl Gate {
    pub fn h(line: usize) -> Gate {
        Gate { kind: GateKind::Hadamard, lines: vec![line] }
    }

    pub fn s(line: usize) -> Gate {
        Gate { kind: GateKind::S, lines: vec![line] }
    }

    pub fn sdg(line: usize) -> Gate {
        Gate { kind: GateKind::SDagger, lines: vec![line] }
    }

    /// `diag(1, e^{i angle})`
    pub fn phase(line: usize, angle: f64) -> Gate {
        Gate { kind: GateKind::Phase(angle), lines: vec![line] }
    }

    pub fn unitary1(line: usize, m: CMatrix) -> Result<Gate> {
        Self::unitary1_shared(line, Arc::new(m))
    }

    pub fn unitary1_shared(line: usize, m: Arc<CMatrix>) -> Result<Gate> {
        check_square(&m, 2)?;
        check_unitary(&m)?;
        Ok(Gate { kind: GateKind::Unitary1(m), lines: vec![line] })
    }

    /// `m` acts on `|a b>` with `a` the more significant bit.
    pub fn unitary2(a: usize, b: usize, m: CMatrix) -> Result<Gate> {
        check_square(&m, 4)?;
        check_unitary(&m)?;
        check_distinct(&[a, b])?;
        Ok(Gate { kind: GateKind::Unitary2(Arc::new(m)), lines: vec![a, b] })
    }

    pub fn controlled(control: usize, targets: &[usize], m: CMatrix) -> Result<Gate> {
        Self::controlled_shared(control, targets, Arc::new(m))
    }

    pub fn controlled_shared(control: usize, targets: &[usize], m: Arc<CMatrix>) -> Result<Gate> {
        if targets.is_empty() {
            return Err(Error::InvalidParameter("controlled gate needs a target".into()));
        }
        check_square(&m, 1 << targets.len())?;
        check_unitary(&m)?;
        let mut lines = vec![control];
        lines.extend_from_slice(targets);
        check_distinct(&lines)?;
        Ok(Gate { kind: GateKind::Controlled(m), lines })
    }

    pub fn cnot(control: usize, target: usize) -> Gate {
        Gate::controlled(control, &[target], crate::numerics::pauli_x()).expect("valid CNOT")
    }

    pub fn swap(a: usize, b: usize) -> Gate {
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = ONE;
        m[(1, 2)] = ONE;
        m[(2, 1)] = ONE;
        m[(3, 3)] = ONE;
        Gate::unitary2(a, b, m).expect("valid SWAP")
    }

    pub fn kind(&self) -> &GateKind {
        &self.kind
    }

    pub fn lines(&self) -> &[usize] {
        &self.lines
    }

    pub fn arity(&self) -> usize {
        self.lines.len()
    }

    pub fn is_swap(&self) -> bool {
        matches!(&self.kind, GateKind::Unitary2(m) if **m == Gate::swap_matrix())
    }

    fn swap_matrix() -> CMatrix {
        CMatrix::from_row_slice(
            4,
            4,
            &[ONE, ZERO, ZERO, ZERO, ZERO, ZERO, ONE, ZERO, ZERO, ONE, ZERO, ZERO, ZERO, ZERO, ZERO, ONE],
        )
    }

    /// The 2x2 matrix of a single-qubit gate, or the target block of a
    /// singly-controlled gate.
    pub fn small_matrix(&self) -> [Complex64; 4] {
        let h = c(FRAC_1_SQRT_2, 0.0);
        match &self.kind {
            GateKind::Hadamard => [h, h, h, -h],
            GateKind::S => [ONE, ZERO, ZERO, c(0.0, 1.0)],
            GateKind::SDagger => [ONE, ZERO, ZERO, c(0.0, -1.0)],
            GateKind::Phase(a) => [ONE, ZERO, ZERO, c(a.cos(), a.sin())],
            GateKind::Unitary1(m) | GateKind::Unitary2(m) | GateKind::Controlled(m) => {
                [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]
            }
        }
    }

    /// Local matrix over `lines()`, first line most significant.
    pub fn matrix(&self) -> CMatrix {
        match &self.kind {
            GateKind::Unitary1(m) | GateKind::Unitary2(m) => (**m).clone(),
            GateKind::Controlled(m) => {
                let d = m.nrows();
                let mut full = CMatrix::identity(2 * d, 2 * d);
                full.view_mut((d, d), (d, d)).copy_from(m);
                full
            }
            _ => CMatrix::from_row_slice(2, 2, &self.small_matrix()),
        }
    }

    pub fn adjoint(&self) -> Gate {
        let kind = match &self.kind {
            GateKind::Hadamard => GateKind::Hadamard,
            GateKind::S => GateKind::SDagger,
            GateKind::SDagger => GateKind::S,
            GateKind::Phase(a) => GateKind::Phase(-a),
            GateKind::Unitary1(m) => GateKind::Unitary1(Arc::new(m.adjoint())),
            GateKind::Unitary2(m) => GateKind::Unitary2(Arc::new(m.adjoint())),
            GateKind::Controlled(m) => GateKind::Controlled(Arc::new(m.adjoint())),
        };
        Gate { kind, lines: self.lines.clone() }
    }

    /// Same gate on relabelled lines.
    pub fn remapped(&self, map: impl Fn(usize) -> usize) -> Gate {
        Gate { kind: self.kind.clone(), lines: self.lines.iter().map(|&l| map(l)).collect() }
    }

    fn label(&self) -> &'static str {
        match self.kind {
            GateKind::Hadamard => "H",
            GateKind::S => "S",
            GateKind::SDagger => "SDG",
            GateKind::Phase(_) => "P",
            GateKind::Unitary1(_) => "U1",
            GateKind::Unitary2(_) => "U2",
            GateKind::Controlled(_) => "CU",
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())?;
        for l in &self.lines {
            write!(f, " {l}")?;
        }
        match &self.kind {
            GateKind::Phase(a) => write!(f, " {a}"),
            GateKind::Unitary1(m) | GateKind::Unitary2(m) | GateKind::Controlled(m) => {
                for z in m.transpose().iter() {
                    write!(f, " {}{:+}i", z.re, z.im)?;
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Circuit {
    width: usize,
    gates: Vec<Gate>,
    measured: Vec<usize>,
}

impl Circuit {
    pub fn new(width: usize) -> Circuit {
        Circuit { width, gates: Vec::new(), measured: Vec::new() }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn measured_lines(&self) -> &[usize] {
        &self.measured
    }

    fn check_lines(&self, lines: &[usize]) -> Result<()> {
        for &l in lines {
            if l >= self.width {
                return Err(Error::LineOutOfRange { line: l, width: self.width });
            }
        }
        check_distinct(lines)
    }

    pub fn push(&mut self, g: Gate) -> Result<()> {
        self.check_lines(&g.lines)?;
        self.gates.push(g);
        Ok(())
    }

    /// Copy of `self` with `g` appended.
    pub fn append(&self, g: Gate) -> Result<Circuit> {
        let mut out = self.clone();
        out.push(g)?;
        Ok(out)
    }

    pub fn measure(&mut self, lines: &[usize]) -> Result<()> {
        self.check_lines(lines)?;
        self.measured = lines.to_vec();
        Ok(())
    }

    /// Append the gates of `fragment`, shifting its lines by `offset`.
    pub fn extend_shifted(&mut self, fragment: &Circuit, offset: usize) -> Result<()> {
        for g in &fragment.gates {
            self.push(g.remapped(|l| l + offset))?;
        }
        Ok(())
    }

    /// `self` followed by `next` (same width). Measurements come from `next`.
    pub fn then(&self, next: &Circuit) -> Result<Circuit> {
        if next.width != self.width {
            return Err(Error::Shape(format!("width {} vs {}", self.width, next.width)));
        }
        let mut out = self.clone();
        out.gates.extend(next.gates.iter().cloned());
        out.measured = next.measured.clone();
        Ok(out)
    }

    /// Reversed sequence of adjoint gates; measurements dropped.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            width: self.width,
            gates: self.gates.iter().rev().map(Gate::adjoint).collect(),
            measured: Vec::new(),
        }
    }
}

impl fmt::Display for Circuit {
    /// One gate per line after a `width` header, then the measured lines.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "width {}", self.width)?;
        for g in &self.gates {
            writeln!(f, "{g}")?;
        }
        write!(f, "measure")?;
        for l in &self.measured {
            write!(f, " {l}")?;
        }
        writeln!(f)
    }
}

/// Forward QFT on `m` lines: `|x> -> 2^{-m/2} sum_y e^{2 pi i x y / 2^m} |y>`
/// with the module bit order.
pub fn qft(m: usize) -> Circuit {
    let mut out = Circuit::new(m);
    for j in 0..m {
        out.push(Gate::h(j)).expect("in range");
        for k in j + 1..m {
            let angle = 2.0 * PI / (1u64 << (k - j + 1)) as f64;
            let cp = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, c(angle.cos(), angle.sin())]);
            out.push(Gate::controlled(k, &[j], cp).expect("unitary")).expect("in range");
        }
    }
    for j in 0..m / 2 {
        out.push(Gate::swap(j, m - 1 - j)).expect("in range");
    }
    out
}

pub fn inverse_qft(m: usize) -> Circuit {
    qft(m).inverse()
}

/// Apply a local matrix on `lines` to every column of `state` (rows indexed
/// by basis states of a width-`width` register).
fn apply_local(state: &mut CMatrix, width: usize, lines: &[usize], g: &CMatrix) {
    let k = lines.len();
    let dim = 1usize << k;
    let masks: Vec<usize> = lines.iter().map(|&l| 1usize << (width - 1 - l)).collect();
    let all: usize = masks.iter().sum();
    let offsets: Vec<usize> = (0..dim)
        .map(|a| (0..k).filter(|&b| a >> (k - 1 - b) & 1 == 1).map(|b| masks[b]).sum())
        .collect();
    let mut buf = vec![ZERO; dim];
    for col in 0..state.ncols() {
        for base in 0..1usize << width {
            if base & all != 0 {
                continue;
            }
            for a in 0..dim {
                buf[a] = state[(base + offsets[a], col)];
            }
            for a in 0..dim {
                let mut acc = ZERO;
                for b in 0..dim {
                    acc += g[(a, b)] * buf[b];
                }
                state[(base + offsets[a], col)] = acc;
            }
        }
    }
}

/// Full `2^width` matrix of a single gate.
pub fn embed(g: &Gate, width: usize) -> Result<CMatrix> {
    let mut c = Circuit::new(width);
    c.push(g.clone())?;
    composed_unitary(&c)
}

/// Ordered product of all gate embeddings (later gates on the left).
pub fn composed_unitary(circ: &Circuit) -> Result<CMatrix> {
    if circ.width > MAX_COMPOSE_WIDTH {
        return Err(Error::TooLarge { dim: circ.width, cap: MAX_COMPOSE_WIDTH });
    }
    let n = 1usize << circ.width;
    let mut u = CMatrix::identity(n, n);
    for g in &circ.gates {
        apply_local(&mut u, circ.width, &g.lines, &g.matrix());
    }
    Ok(u)
}
