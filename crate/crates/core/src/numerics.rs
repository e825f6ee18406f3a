//! Dense complex linear algebra for band Hamiltonians and small state spaces.
//!
//! Large-matrix eigen-solves and QR delegate to nalgebra, SVD to faer (the
//! nalgebra complex SVD mis-factors some rank-deficient inputs). The 2x2
//! paths are closed forms because they sit in every inner loop.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const UNITARY_TOL: f64 = 1e-12;
/// Absolute gap (model energy units) below which two levels count as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;
pub const MAX_DENSE_DIM: usize = 4096;

const GAUGE_TIE_TOL: f64 = 1e-12;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// `d0*I + dx*X + dy*Y + dz*Z`.
pub fn bloch_matrix(d0: f64, d: [f64; 3]) -> CMatrix {
    CMatrix::from_row_slice(
        2,
        2,
        &[c(d0 + d[2], 0.0), c(d[0], -d[1]), c(d[0], d[1]), c(d0 - d[2], 0.0)],
    )
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// max |M - M^dag|
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// max |M^dag M - I|
pub fn unitary_defect(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let p = m.adjoint() * m;
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((p[(i, j)] - target).norm());
        }
    }
    worst
}

pub fn check_hermitian(m: &CMatrix) -> Result<()> {
    let asymmetry = hermitian_defect(m);
    if asymmetry > HERMITIAN_TOL * max_abs(m).max(1.0) {
        return Err(Error::NotHermitian { asymmetry });
    }
    Ok(())
}

pub fn check_unitary(m: &CMatrix) -> Result<()> {
    let defect = unitary_defect(m);
    if defect > UNITARY_TOL {
        return Err(Error::NotUnitary { defect });
    }
    Ok(())
}

/// Closest unitary in Frobenius norm (polar factor). Used to clean up
/// accumulated rounding in long products of unitaries.
pub fn nearest_unitary(m: &CMatrix) -> CMatrix {
    let (u, _, v_dagger) = thin_svd(m).expect("svd of a finite square matrix");
    u * v_dagger
}

/// Thin SVD `m = u diag(s) v_dagger`, singular values non-increasing.
fn thin_svd(m: &CMatrix) -> Result<(CMatrix, Vec<f64>, CMatrix)> {
    let (r, c) = m.shape();
    let f = faer::Mat::<Complex64>::from_fn(r, c, |i, j| m[(i, j)]);
    let svd = f.thin_svd().map_err(|e| Error::Backend(format!("svd did not converge: {e:?}")))?;
    let (u, s, v) = (svd.U(), svd.S(), svd.V());
    let k = s.dim();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s[b].re.total_cmp(&s[a].re));
    let uu = CMatrix::from_fn(r, k, |i, j| u[(i, order[j])]);
    let vd = CMatrix::from_fn(k, c, |i, j| v[(j, order[i])].conj());
    Ok((uu, order.iter().map(|&j| s[j].re).collect(), vd))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flipped(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: CVector,
}

/// Full spectrum in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub pairs: Vec<EigenPair>,
}

impl Spectrum {
    pub fn ground(&self) -> &EigenPair {
        &self.pairs[0]
    }

    /// `E1 - E0`; infinite for a one-dimensional space.
    pub fn gap(&self) -> f64 {
        if self.pairs.len() < 2 {
            f64::INFINITY
        } else {
            self.pairs[1].value - self.pairs[0].value
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.gap() < DEGENERACY_TOL
    }

    pub fn values(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.value).collect()
    }

    /// Eigenvectors as columns.
    pub fn vectors(&self) -> CMatrix {
        let n = self.pairs.first().map_or(0, |p| p.vector.len());
        CMatrix::from_fn(n, self.pairs.len(), |i, j| self.pairs[j].vector[i])
    }
}

/// Rotate `v` so its dominant component is real and positive. Ties within
/// 1e-12 of the maximum modulus go to the lowest index.
pub fn gauge_fix(v: &mut CVector) {
    let top = v.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    if top == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|z| z.norm() >= top - GAUGE_TIE_TOL * top)
        .unwrap_or(0);
    let phase = v[pivot] / v[pivot].norm();
    let rot = phase.conj();
    for z in v.iter_mut() {
        *z *= rot;
    }
    v[pivot] = c(v[pivot].re, 0.0);
}

fn unit(v: [Complex64; 2]) -> CVector {
    let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    let mut out = CVector::from_row_slice(&[v[0] / n, v[1] / n]);
    gauge_fix(&mut out);
    out
}

/// Eigenpairs of a 2x2 Hermitian matrix in closed form, ascending.
pub fn eig_hermitian_2x2(h: &CMatrix) -> Result<Spectrum> {
    if h.shape() != (2, 2) {
        return Err(Error::Shape(format!("expected 2x2, got {:?}", h.shape())));
    }
    check_hermitian(h)?;
    let c0 = 0.5 * (h[(0, 0)].re + h[(1, 1)].re);
    let dz = 0.5 * (h[(0, 0)].re - h[(1, 1)].re);
    // b = dx - i dy
    let b = 0.5 * (h[(0, 1)] + h[(1, 0)].conj());
    let r = (b.norm_sqr() + dz * dz).sqrt();
    let (lower, upper) = if r == 0.0 {
        (
            CVector::from_row_slice(&[ONE, ZERO]),
            CVector::from_row_slice(&[ZERO, ONE]),
        )
    } else {
        let g1 = [b, c(-dz - r, 0.0)];
        let g2 = [c(dz - r, 0.0), b.conj()];
        let e1 = [b, c(r - dz, 0.0)];
        let e2 = [c(dz + r, 0.0), b.conj()];
        let sq = |v: &[Complex64; 2]| v[0].norm_sqr() + v[1].norm_sqr();
        let g = if sq(&g1) >= sq(&g2) { g1 } else { g2 };
        let e = if sq(&e1) >= sq(&e2) { e1 } else { e2 };
        (unit(g), unit(e))
    };
    Ok(Spectrum {
        pairs: vec![
            EigenPair { value: c0 - r, vector: lower },
            EigenPair { value: c0 + r, vector: upper },
        ],
    })
}

/// Full spectrum of a dense Hermitian matrix, ascending, gauge-fixed vectors.
pub fn eig_hermitian_dense(h: &CMatrix) -> Result<Spectrum> {
    if !h.is_square() {
        return Err(Error::Shape(format!("expected square, got {:?}", h.shape())));
    }
    let n = h.nrows();
    if n > MAX_DENSE_DIM {
        return Err(Error::TooLarge { dim: n, cap: MAX_DENSE_DIM });
    }
    if n == 0 {
        return Err(Error::Empty("zero-dimensional matrix".into()));
    }
    check_hermitian(h)?;
    if n == 2 {
        return eig_hermitian_2x2(h);
    }
    let sym = (h + h.adjoint()) * c(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let pairs = order
        .into_iter()
        .map(|j| {
            let mut v: CVector = eig.eigenvectors.column(j).into_owned();
            let norm = v.norm();
            v /= c(norm, 0.0);
            gauge_fix(&mut v);
            EigenPair { value: eig.eigenvalues[j], vector: v }
        })
        .collect();
    Ok(Spectrum { pairs })
}

/// `exp(-i * sign * h * t)`.
pub fn expm_i_hermitian(h: &CMatrix, t: f64, sign: Sign) -> Result<CMatrix> {
    if !h.is_square() {
        return Err(Error::Shape(format!("expected square, got {:?}", h.shape())));
    }
    check_hermitian(h)?;
    let s = sign.value();
    if h.nrows() == 2 {
        let c0 = 0.5 * (h[(0, 0)].re + h[(1, 1)].re);
        let dz = 0.5 * (h[(0, 0)].re - h[(1, 1)].re);
        let b = 0.5 * (h[(0, 1)] + h[(1, 0)].conj());
        let r = (b.norm_sqr() + dz * dz).sqrt();
        let x = c0 * t;
        let global = c(x.cos(), -s * x.sin());
        let rt = r * t;
        let cosr = rt.cos();
        let sinc = if r == 0.0 { t } else { rt.sin() / r };
        // cos(rt) I - i s sin(rt)/r (d.sigma), d.sigma = [[dz, b], [b*, -dz]]
        let k = c(0.0, -s * sinc);
        let m = [
            c(cosr, 0.0) + k * dz,
            k * b,
            k * b.conj(),
            c(cosr, 0.0) - k * dz,
        ];
        return Ok(CMatrix::from_row_slice(2, 2, &m.map(|z| global * z)));
    }
    let spec = eig_hermitian_dense(h)?;
    let v = spec.vectors();
    let phases = CVector::from_iterator(
        spec.pairs.len(),
        spec.pairs.iter().map(|p| {
            let x = p.value * t;
            c(x.cos(), -s * x.sin())
        }),
    );
    let mut scaled = v.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= phases[j];
    }
    Ok(scaled * v.adjoint())
}

#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    pub u: CMatrix,
    pub singular_values: Vec<f64>,
    pub v_dagger: CMatrix,
    /// Sum of squared dropped singular values.
    pub discarded_weight: f64,
}

impl TruncatedSvd {
    pub fn reconstruct(&self) -> CMatrix {
        let mut us = self.u.clone();
        for (j, mut col) in us.column_iter_mut().enumerate() {
            col *= c(self.singular_values[j], 0.0);
        }
        us * &self.v_dagger
    }
}

/// SVD keeping the largest `min(rank, chi_max)` singular values above `cutoff`.
/// At least one value is always kept.
pub fn svd_truncated(m: &CMatrix, chi_max: usize, cutoff: f64) -> Result<TruncatedSvd> {
    if chi_max == 0 {
        return Err(Error::InvalidParameter("chi_max must be at least 1".into()));
    }
    let (u, s, vt) = thin_svd(m)?;
    let keep = s.iter().take(chi_max).take_while(|&&x| x > cutoff).count().max(1);
    let discarded_weight = s[keep..].iter().map(|x| x * x).sum();
    Ok(TruncatedSvd {
        u: u.columns(0, keep).into_owned(),
        singular_values: s[..keep].to_vec(),
        v_dagger: vt.rows(0, keep).into_owned(),
        discarded_weight,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        a.shape() == b.shape() && max_abs(&(a - b)) < tol
    }

    #[test]
    fn sigma_z_spectrum() {
        let s = eig_hermitian_2x2(&pauli_z()).unwrap();
        assert_eq!(s.values(), vec![-1.0, 1.0]);
        assert_eq!(s.pairs[0].vector.as_slice(), &[ZERO, ONE]);
        assert_eq!(s.pairs[1].vector.as_slice(), &[ONE, ZERO]);
    }

    #[test]
    fn zero_matrix_is_degenerate() {
        let s = eig_hermitian_2x2(&CMatrix::zeros(2, 2)).unwrap();
        assert_eq!(s.values(), vec![0.0, 0.0]);
        assert!(s.is_degenerate());
    }

    #[test]
    fn three_sigma_z() {
        let s = eig_hermitian_2x2(&(pauli_z() * c(3.0, 0.0))).unwrap();
        assert_eq!(s.values(), vec![-3.0, 3.0]);
        assert!(!s.is_degenerate());
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(2, 2, &[ONE, ONE, ZERO, ONE]);
        match eig_hermitian_2x2(&m) {
            Err(Error::NotHermitian { asymmetry }) => assert!((asymmetry - 1.0).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dense_identity_and_cap() {
        let s = eig_hermitian_dense(&CMatrix::identity(4, 4)).unwrap();
        assert!(s.values().iter().all(|&e| (e - 1.0).abs() < 1e-14));
        assert!(matches!(
            eig_hermitian_dense(&CMatrix::zeros(4097, 4097)),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn dense_two_spin_heisenberg() {
        // S1.S2 with S = sigma/2: diag(1/4, -1/4, -1/4, 1/4) plus 1/2 flip terms
        let q = c(0.25, 0.0);
        let h = CMatrix::from_row_slice(
            4,
            4,
            &[
                q, ZERO, ZERO, ZERO,
                ZERO, -q, c(0.5, 0.0), ZERO,
                ZERO, c(0.5, 0.0), -q, ZERO,
                ZERO, ZERO, ZERO, q,
            ],
        );
        let s = eig_hermitian_dense(&h).unwrap();
        let expect = [-0.75, 0.25, 0.25, 0.25];
        for (e, x) in s.values().iter().zip(expect) {
            assert!((e - x).abs() < 1e-12);
        }
        assert!((s.gap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn expm_examples() {
        let u = expm_i_hermitian(&CMatrix::zeros(2, 2), 3.7, Sign::Plus).unwrap();
        assert!(close(&u, &CMatrix::identity(2, 2), 1e-15));
        let u = expm_i_hermitian(&pauli_z(), PI, Sign::Plus).unwrap();
        assert!(close(&u, &(-CMatrix::identity(2, 2)), 1e-15));
        let u = expm_i_hermitian(&pauli_x(), PI / 2.0, Sign::Plus).unwrap();
        assert!(close(&u, &(pauli_x() * c(0.0, -1.0)), 1e-15));
    }

    #[test]
    fn expm_matches_taylor_series() {
        let h = bloch_matrix(0.3, [0.7, -0.2, 0.5]);
        let t = 0.9;
        let a = &h * c(0.0, -t);
        let mut term = CMatrix::identity(2, 2);
        let mut sum = term.clone();
        for k in 1..40 {
            term = &term * &a * c(1.0 / k as f64, 0.0);
            sum += &term;
        }
        let u = expm_i_hermitian(&h, t, Sign::Plus).unwrap();
        assert!(close(&u, &sum, 1e-13));
    }

    #[test]
    fn expm_minus_is_adjoint_bitwise() {
        let h = bloch_matrix(-0.4, [0.1, 1.3, -0.6]);
        let p = expm_i_hermitian(&h, 0.37, Sign::Plus).unwrap();
        let m = expm_i_hermitian(&h, 0.37, Sign::Minus).unwrap();
        assert_eq!(p.adjoint(), m);
    }

    #[test]
    fn expm_dense_agrees_with_closed_form() {
        // block-diagonal 4x4 built from a 2x2 block and its copy
        let h2 = bloch_matrix(0.2, [0.4, -0.9, 0.3]);
        let mut h4 = CMatrix::zeros(4, 4);
        h4.view_mut((0, 0), (2, 2)).copy_from(&h2);
        h4.view_mut((2, 2), (2, 2)).copy_from(&h2);
        let u4 = expm_i_hermitian(&h4, 1.3, Sign::Minus).unwrap();
        let u2 = expm_i_hermitian(&h2, 1.3, Sign::Minus).unwrap();
        assert!(close(&u4.view((0, 0), (2, 2)).into_owned(), &u2, 1e-12));
        assert!(unitary_defect(&u4) < 1e-12);
    }

    #[test]
    fn svd_identity_and_rank_one() {
        let s = svd_truncated(&CMatrix::identity(2, 2), 2, 0.0).unwrap();
        assert_eq!(s.singular_values, vec![1.0, 1.0]);
        assert_eq!(s.discarded_weight, 0.0);
        let a = CVector::from_row_slice(&[c(1.0, 0.5), c(-0.3, 0.2)]);
        let b = CVector::from_row_slice(&[c(0.1, 0.0), c(0.0, 2.0), c(1.0, 1.0)]);
        let m = &a * b.adjoint();
        let s = svd_truncated(&m, 1, 1e-12).unwrap();
        assert!(close(&s.reconstruct(), &m, 1e-12));
        assert!(s.discarded_weight < 1e-24);
    }

    #[test]
    fn gauge_is_deterministic() {
        let h = bloch_matrix(0.0, [0.3, 0.4, -0.1]);
        let a = eig_hermitian_2x2(&h).unwrap();
        let b = eig_hermitian_2x2(&h).unwrap();
        assert_eq!(a, b);
        for p in &a.pairs {
            let top = p.vector.iter().fold(0.0f64, |m, z| m.max(z.norm()));
            let pivot = p.vector.iter().position(|z| z.norm() >= top - 1e-12).unwrap();
            assert!(p.vector[pivot].im == 0.0 && p.vector[pivot].re > 0.0);
        }
    }
}
