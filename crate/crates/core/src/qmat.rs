// Copyright 2026 The trilevel Authors
// SPDX-License-Identifier: Apache-2.0

//! Real 3×3 operators for the three-level system.
//!
//! Symmetric and antisymmetric matrices are stored in compressed triangular
//! form, so the symmetry class of every operator is carried by its type.
//! Products go through a dense `[[f64; 3]; 3]` and are folded back into the
//! class the algebra guarantees (e.g. `[skew, sym]` is symmetric).
//!
//! Level indices in the public constructors are 1-based, matching the usual
//! `|1⟩, |2⟩, |3⟩` labelling; `get` and the dense arrays are 0-based.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Dense row-major 3×3 matrix.
pub type Mat3 = [[f64; 3]; 3];

pub const IDENTITY3: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Gap between the two largest eigenvalues below which a state has no
/// well-defined dominant direction.
pub const TOL_DEGENERATE: f64 = 1e-6;

const PURE_TRACE_TOL: f64 = 1e-9;
const PURE_IDEMPOTENT_TOL: f64 = 1e-8;
const PURE_PSD_TOL: f64 = 1e-9;

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

pub fn transpose(a: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[j][i];
        }
    }
    out
}

/// 3×3 real symmetric matrix, stored as `[m11, m22, m33, m12, m13, m23]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RealSym3 {
    e: [f64; 6],
}

// (row, col) -> slot in the compressed storage.
const fn sym_slot(i: usize, j: usize) -> usize {
    match (i, j) {
        (0, 0) => 0,
        (1, 1) => 1,
        (2, 2) => 2,
        (0, 1) | (1, 0) => 3,
        (0, 2) | (2, 0) => 4,
        _ => 5,
    }
}

impl RealSym3 {
    pub const ZERO: Self = Self { e: [0.0; 6] };
    pub const IDENTITY: Self = Self {
        e: [1.0, 1.0, 1.0, 0.0, 0.0, 0.0],
    };

    /// Builds from `[m11, m22, m33, m12, m13, m23]`.
    pub const fn from_entries(e: [f64; 6]) -> Self {
        Self { e }
    }

    pub const fn diag(d: [f64; 3]) -> Self {
        Self {
            e: [d[0], d[1], d[2], 0.0, 0.0, 0.0],
        }
    }

    /// Symmetric part of a dense matrix.
    pub fn from_dense(m: &Mat3) -> Self {
        Self {
            e: [
                m[0][0],
                m[1][1],
                m[2][2],
                0.5 * (m[0][1] + m[1][0]),
                0.5 * (m[0][2] + m[2][0]),
                0.5 * (m[1][2] + m[2][1]),
            ],
        }
    }

    /// Rank-one `v vᵀ`.
    pub fn outer(v: [f64; 3]) -> Self {
        Self {
            e: [
                v[0] * v[0],
                v[1] * v[1],
                v[2] * v[2],
                v[0] * v[1],
                v[0] * v[2],
                v[1] * v[2],
            ],
        }
    }

    pub const fn entries(&self) -> [f64; 6] {
        self.e
    }

    /// Entry at 0-based `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.e[sym_slot(i, j)]
    }

    pub fn to_dense(&self) -> Mat3 {
        let e = &self.e;
        [[e[0], e[3], e[4]], [e[3], e[1], e[5]], [e[4], e[5], e[2]]]
    }

    pub fn trace(&self) -> f64 {
        self.e[0] + self.e[1] + self.e[2]
    }

    pub fn frobenius_norm(&self) -> f64 {
        let e = &self.e;
        (e[0] * e[0] + e[1] * e[1] + e[2] * e[2] + 2.0 * (e[3] * e[3] + e[4] * e[4] + e[5] * e[5])).sqrt()
    }

    /// `A B + B A`, which is symmetric.
    pub fn anticommutator(&self, other: &RealSym3) -> RealSym3 {
        let p = mat_mul(&self.to_dense(), &other.to_dense());
        RealSym3::from_dense(&p).scaled(2.0)
    }

    pub fn square(&self) -> RealSym3 {
        let d = self.to_dense();
        RealSym3::from_dense(&mat_mul(&d, &d))
    }

    /// `‖M² − M‖_F`.
    pub fn idempotency_defect(&self) -> f64 {
        (self.square() - *self).frobenius_norm()
    }

    pub fn scaled(&self, k: f64) -> RealSym3 {
        let mut e = self.e;
        e.iter_mut().for_each(|x| *x *= k);
        RealSym3 { e }
    }

    pub fn is_finite(&self) -> bool {
        self.e.iter().all(|x| x.is_finite())
    }

    pub fn max_abs_diff(&self, other: &RealSym3) -> f64 {
        self.e
            .iter()
            .zip(other.e.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Add for RealSym3 {
    type Output = RealSym3;
    fn add(self, rhs: RealSym3) -> RealSym3 {
        let mut e = self.e;
        e.iter_mut().zip(rhs.e).for_each(|(a, b)| *a += b);
        RealSym3 { e }
    }
}

impl AddAssign for RealSym3 {
    fn add_assign(&mut self, rhs: RealSym3) {
        self.e.iter_mut().zip(rhs.e).for_each(|(a, b)| *a += b);
    }
}

impl Sub for RealSym3 {
    type Output = RealSym3;
    fn sub(self, rhs: RealSym3) -> RealSym3 {
        let mut e = self.e;
        e.iter_mut().zip(rhs.e).for_each(|(a, b)| *a -= b);
        RealSym3 { e }
    }
}

impl Neg for RealSym3 {
    type Output = RealSym3;
    fn neg(self) -> RealSym3 {
        self.scaled(-1.0)
    }
}

impl Mul<RealSym3> for f64 {
    type Output = RealSym3;
    fn mul(self, rhs: RealSym3) -> RealSym3 {
        rhs.scaled(self)
    }
}

/// 3×3 real antisymmetric matrix, stored as the strict upper triangle
/// `[m12, m13, m23]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RealSkew3 {
    e: [f64; 3],
}

impl RealSkew3 {
    pub const ZERO: Self = Self { e: [0.0; 3] };

    /// Builds from the upper-triangle entries `[m12, m13, m23]`.
    pub const fn from_entries(e: [f64; 3]) -> Self {
        Self { e }
    }

    /// Antisymmetric part of a dense matrix.
    pub fn from_dense(m: &Mat3) -> Self {
        Self {
            e: [
                0.5 * (m[0][1] - m[1][0]),
                0.5 * (m[0][2] - m[2][0]),
                0.5 * (m[1][2] - m[2][1]),
            ],
        }
    }

    pub const fn entries(&self) -> [f64; 3] {
        self.e
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match (i, j) {
            (0, 1) => self.e[0],
            (0, 2) => self.e[1],
            (1, 2) => self.e[2],
            (1, 0) => -self.e[0],
            (2, 0) => -self.e[1],
            (2, 1) => -self.e[2],
            _ => 0.0,
        }
    }

    pub fn to_dense(&self) -> Mat3 {
        let [a, b, c] = self.e;
        [[0.0, a, b], [-a, 0.0, c], [-b, -c, 0.0]]
    }

    pub fn scaled(&self, k: f64) -> RealSkew3 {
        RealSkew3 {
            e: [self.e[0] * k, self.e[1] * k, self.e[2] * k],
        }
    }

    pub fn max_abs_diff(&self, other: &RealSkew3) -> f64 {
        self.e
            .iter()
            .zip(other.e.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Add for RealSkew3 {
    type Output = RealSkew3;
    fn add(self, rhs: RealSkew3) -> RealSkew3 {
        RealSkew3 {
            e: [self.e[0] + rhs.e[0], self.e[1] + rhs.e[1], self.e[2] + rhs.e[2]],
        }
    }
}

impl Sub for RealSkew3 {
    type Output = RealSkew3;
    fn sub(self, rhs: RealSkew3) -> RealSkew3 {
        RealSkew3 {
            e: [self.e[0] - rhs.e[0], self.e[1] - rhs.e[1], self.e[2] - rhs.e[2]],
        }
    }
}

/// `[A, B] = AB − BA`, typed by the symmetry classes of the operands.
pub trait Commutator<Rhs = Self> {
    type Output;
    fn commutator(&self, rhs: &Rhs) -> Self::Output;
}

impl Commutator<RealSym3> for RealSkew3 {
    type Output = RealSym3;
    fn commutator(&self, rhs: &RealSym3) -> RealSym3 {
        // KS − SK = KS + (KS)ᵀ
        let p = mat_mul(&self.to_dense(), &rhs.to_dense());
        RealSym3::from_dense(&p).scaled(2.0)
    }
}

impl Commutator<RealSkew3> for RealSym3 {
    type Output = RealSym3;
    fn commutator(&self, rhs: &RealSkew3) -> RealSym3 {
        -rhs.commutator(self)
    }
}

impl Commutator for RealSym3 {
    type Output = RealSkew3;
    fn commutator(&self, rhs: &RealSym3) -> RealSkew3 {
        // AB − BA = AB − (AB)ᵀ
        let p = mat_mul(&self.to_dense(), &rhs.to_dense());
        RealSkew3::from_dense(&p).scaled(2.0)
    }
}

impl Commutator for RealSkew3 {
    type Output = RealSkew3;
    fn commutator(&self, rhs: &RealSkew3) -> RealSkew3 {
        let p = mat_mul(&self.to_dense(), &rhs.to_dense());
        RealSkew3::from_dense(&p).scaled(2.0)
    }
}

pub fn commutator<A: Commutator<B>, B>(a: &A, b: &B) -> A::Output {
    a.commutator(b)
}

/// `Tr(A B)` for symmetric operands.
pub fn trace_prod(a: &RealSym3, b: &RealSym3) -> f64 {
    let (x, y) = (&a.e, &b.e);
    x[0] * y[0] + x[1] * y[1] + x[2] * y[2] + 2.0 * (x[3] * y[3] + x[4] * y[4] + x[5] * y[5])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperatorKind {
    /// `σ^{lk} = |l⟩⟨k| − |k⟩⟨l|`
    Sigma,
    /// `σx^{lk} = |l⟩⟨k| + |k⟩⟨l|`
    SigmaX,
    /// `σz^{lk} = |l⟩⟨l| − |k⟩⟨k|`
    SigmaZ,
    /// `P_l = |l⟩⟨l|`
    Proj,
}

/// An operator returned by [`build_operator`], tagged by symmetry class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Operator {
    Sym(RealSym3),
    Skew(RealSkew3),
}

impl Operator {
    pub fn to_dense(&self) -> Mat3 {
        match self {
            Operator::Sym(s) => s.to_dense(),
            Operator::Skew(k) => k.to_dense(),
        }
    }
}

fn check_level(l: usize) -> Result<usize> {
    if (1..=3).contains(&l) {
        Ok(l - 1)
    } else {
        Err(Error::IndexOutOfRange { index: l })
    }
}

fn check_pair(l: usize, k: usize) -> Result<(usize, usize)> {
    let (i, j) = (check_level(l)?, check_level(k)?);
    if i == j {
        return Err(Error::InvalidPair { level: l });
    }
    Ok((i, j))
}

/// `σ^{lk}`.
pub fn sigma(l: usize, k: usize) -> Result<RealSkew3> {
    let (i, j) = check_pair(l, k)?;
    let mut m = [[0.0; 3]; 3];
    m[i][j] = 1.0;
    m[j][i] = -1.0;
    Ok(RealSkew3::from_dense(&m))
}

/// `σx^{lk}`.
pub fn sigma_x(l: usize, k: usize) -> Result<RealSym3> {
    let (i, j) = check_pair(l, k)?;
    let mut m = [[0.0; 3]; 3];
    m[i][j] = 1.0;
    m[j][i] = 1.0;
    Ok(RealSym3::from_dense(&m))
}

/// `σz^{lk}`.
pub fn sigma_z(l: usize, k: usize) -> Result<RealSym3> {
    let (i, j) = check_pair(l, k)?;
    let mut d = [0.0; 3];
    d[i] = 1.0;
    d[j] = -1.0;
    Ok(RealSym3::diag(d))
}

/// `P_l`.
pub fn proj(l: usize) -> Result<RealSym3> {
    let i = check_level(l)?;
    let mut d = [0.0; 3];
    d[i] = 1.0;
    Ok(RealSym3::diag(d))
}

/// Exact integer-entry operator of the given kind. `k` is ignored for
/// [`OperatorKind::Proj`].
pub fn build_operator(kind: OperatorKind, l: usize, k: usize) -> Result<Operator> {
    Ok(match kind {
        OperatorKind::Sigma => Operator::Skew(sigma(l, k)?),
        OperatorKind::SigmaX => Operator::Sym(sigma_x(l, k)?),
        OperatorKind::SigmaZ => Operator::Sym(sigma_z(l, k)?),
        OperatorKind::Proj => Operator::Sym(proj(l)?),
    })
}

/// Fixed operators used in the hot loops.
pub mod ops {
    use super::{RealSkew3, RealSym3};

    pub const SIGMA12: RealSkew3 = RealSkew3::from_entries([1.0, 0.0, 0.0]);
    pub const SIGMA13: RealSkew3 = RealSkew3::from_entries([0.0, 1.0, 0.0]);
    pub const SIGMA23: RealSkew3 = RealSkew3::from_entries([0.0, 0.0, 1.0]);
    pub const SIGMA_X12: RealSym3 = RealSym3::from_entries([0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    pub const SIGMA_X23: RealSym3 = RealSym3::from_entries([0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
    pub const SIGMA_Z12: RealSym3 = RealSym3::diag([1.0, -1.0, 0.0]);
    pub const SIGMA_Z23: RealSym3 = RealSym3::diag([0.0, 1.0, -1.0]);
    pub const P1: RealSym3 = RealSym3::diag([1.0, 0.0, 0.0]);
    pub const P2: RealSym3 = RealSym3::diag([0.0, 1.0, 0.0]);
    pub const P3: RealSym3 = RealSym3::diag([0.0, 0.0, 1.0]);
}

/// `U = exp(θ σ^{12}) = P3 + cos θ (P1 + P2) + sin θ σ^{12}`, evaluated in
/// closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation12 {
    theta: f64,
    cos: f64,
    sin: f64,
}

pub fn rot12(theta: f64) -> Rotation12 {
    Rotation12 {
        theta,
        cos: theta.cos(),
        sin: theta.sin(),
    }
}

impl Rotation12 {
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn matrix(&self) -> Mat3 {
        let (c, s) = (self.cos, self.sin);
        [[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]]
    }

    pub fn inverse(&self) -> Rotation12 {
        Rotation12 {
            theta: -self.theta,
            cos: self.cos,
            sin: -self.sin,
        }
    }

    /// `U M Uᵀ` on a dense matrix.
    pub fn conjugate_dense(&self, m: &Mat3) -> Mat3 {
        let u = self.matrix();
        mat_mul(&mat_mul(&u, m), &transpose(&u))
    }

    /// `U M Uᵀ`.
    pub fn conjugate_sym(&self, m: &RealSym3) -> RealSym3 {
        RealSym3::from_dense(&self.conjugate_dense(&m.to_dense()))
    }

    /// `U K Uᵀ`.
    pub fn conjugate_skew(&self, k: &RealSkew3) -> RealSkew3 {
        RealSkew3::from_dense(&self.conjugate_dense(&k.to_dense()))
    }

    /// `Uᵀ M U`, the change to the rotating frame.
    pub fn unconjugate_sym(&self, m: &RealSym3) -> RealSym3 {
        self.inverse().conjugate_sym(m)
    }
}

/// Eigen-decomposition of a symmetric 3×3 matrix by cyclic Jacobi rotations.
///
/// Eigenvalues are sorted in decreasing order; column `j` of the returned
/// matrix is the unit eigenvector for eigenvalue `j`.
pub fn symmetric_eigen(m: &RealSym3) -> ([f64; 3], Mat3) {
    let mut a = m.to_dense();
    let mut v = IDENTITY3;
    let scale = m.frobenius_norm().max(f64::MIN_POSITIVE);

    for _ in 0..64 {
        let off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
        if off.sqrt() <= 1e-17 * scale {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            if a[p][q] == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            for row in a.iter_mut() {
                let (akp, akq) = (row[p], row[q]);
                row[p] = c * akp - s * akq;
                row[q] = s * akp + c * akq;
            }
            let (rp, rq) = (a[p], a[q]);
            for k in 0..3 {
                a[p][k] = c * rp[k] - s * rq[k];
                a[q][k] = s * rp[k] + c * rq[k];
            }
            for row in v.iter_mut() {
                let (vkp, vkq) = (row[p], row[q]);
                row[p] = c * vkp - s * vkq;
                row[q] = s * vkp + c * vkq;
            }
        }
    }

    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let values = [a[order[0]][order[0]], a[order[1]][order[1]], a[order[2]][order[2]]];
    let mut vectors = [[0.0; 3]; 3];
    for (col, &src) in order.iter().enumerate() {
        for row in 0..3 {
            vectors[row][col] = v[row][src];
        }
    }
    (values, vectors)
}

/// A rank-one real projector: a point of RP².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureState {
    m: RealSym3,
}

impl PureState {
    /// Validates trace, idempotency and positivity.
    pub fn new(m: RealSym3) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::NotPure {
                reason: "non-finite entries".into(),
            });
        }
        let tr = m.trace();
        if (tr - 1.0).abs() > PURE_TRACE_TOL {
            return Err(Error::NotPure {
                reason: format!("trace {tr} != 1"),
            });
        }
        let defect = m.idempotency_defect();
        if defect > PURE_IDEMPOTENT_TOL {
            return Err(Error::NotPure {
                reason: format!("idempotency defect {defect:e}"),
            });
        }
        let (values, _) = symmetric_eigen(&m);
        if values[2] < -PURE_PSD_TOL {
            return Err(Error::NotPure {
                reason: format!("negative eigenvalue {}", values[2]),
            });
        }
        Ok(Self { m })
    }

    /// `|v⟩⟨v| / ⟨v|v⟩`.
    pub fn from_amplitudes(v: [f64; 3]) -> Result<Self> {
        let n2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        if !(n2.is_finite() && n2 > 0.0) {
            return Err(Error::NotPure {
                reason: "zero or non-finite amplitude vector".into(),
            });
        }
        let n = n2.sqrt();
        Ok(Self {
            m: RealSym3::outer([v[0] / n, v[1] / n, v[2] / n]),
        })
    }

    /// `P_l`.
    pub fn basis(l: usize) -> Result<Self> {
        Ok(Self { m: proj(l)? })
    }

    // Integration code keeps its own invariants and re-projects periodically.
    pub(crate) fn from_sym_unchecked(m: RealSym3) -> Self {
        Self { m }
    }

    pub fn matrix(&self) -> &RealSym3 {
        &self.m
    }

    /// `Tr(ρ σ)`, the overlap of two pure states.
    pub fn fidelity(&self, other: &PureState) -> f64 {
        trace_prod(&self.m, &other.m)
    }

    /// Population `Tr(P_l ρ)` for 1-based `l`.
    pub fn population(&self, l: usize) -> Result<f64> {
        Ok(self.m.get(check_level(l)?, check_level(l)?))
    }
}

/// Closest rank-one projector `v vᵀ`, with `v` the dominant unit eigenvector.
pub fn nearest_projector(m: &RealSym3) -> Result<PureState> {
    let (values, vectors) = symmetric_eigen(m);
    let gap = values[0] - values[1];
    if gap.is_nan() || gap <= TOL_DEGENERATE {
        return Err(Error::DegenerateState { gap });
    }
    let v = [vectors[0][0], vectors[1][0], vectors[2][0]];
    PureState::from_amplitudes(v)
}

#[cfg(test)]
mod tests {
    use super::ops::*;
    use super::*;
    use proptest::prelude::*;

    fn dense_close(a: &Mat3, b: &Mat3, tol: f64) -> bool {
        (0..3).all(|i| (0..3).all(|j| (a[i][j] - b[i][j]).abs() <= tol))
    }

    fn dense_sub(a: &Mat3, b: &Mat3) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = a[i][j] - b[i][j];
            }
        }
        out
    }

    fn dense_trace(a: &Mat3) -> f64 {
        a[0][0] + a[1][1] + a[2][2]
    }

    #[test]
    fn operator_definitions() {
        assert_eq!(
            build_operator(OperatorKind::Proj, 1, 1).unwrap().to_dense(),
            [[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]
        );
        assert_eq!(
            build_operator(OperatorKind::Sigma, 1, 2).unwrap().to_dense(),
            [[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]
        );
        assert_eq!(
            build_operator(OperatorKind::SigmaZ, 1, 2).unwrap().to_dense(),
            [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 0.0]]
        );
        assert_eq!(
            build_operator(OperatorKind::SigmaX, 2, 3).unwrap().to_dense(),
            [[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]]
        );
        assert_eq!(sigma(1, 2).unwrap(), SIGMA12);
        assert_eq!(sigma(2, 1).unwrap(), SIGMA12.scaled(-1.0));
        assert_eq!(sigma(1, 3).unwrap(), SIGMA13);
        assert_eq!(sigma_z(2, 3).unwrap(), SIGMA_Z23);
    }

    #[test]
    fn operator_errors() {
        assert_eq!(
            build_operator(OperatorKind::Sigma, 0, 2),
            Err(Error::IndexOutOfRange { index: 0 })
        );
        assert_eq!(
            build_operator(OperatorKind::SigmaX, 1, 4),
            Err(Error::IndexOutOfRange { index: 4 })
        );
        assert_eq!(
            build_operator(OperatorKind::SigmaZ, 2, 2),
            Err(Error::InvalidPair { level: 2 })
        );
        // proj ignores k
        assert!(build_operator(OperatorKind::Proj, 3, 3).is_ok());
        assert!(build_operator(OperatorKind::Proj, 4, 1).is_err());
    }

    #[test]
    fn operator_symmetry_classes_and_resolution() {
        for (l, k) in [(1, 2), (1, 3), (2, 3), (3, 1)] {
            let s = sigma(l, k).unwrap().to_dense();
            assert!(dense_close(&transpose(&s), &s.map(|r| r.map(|x| -x)), 0.0));
            let x = sigma_x(l, k).unwrap().to_dense();
            assert!(dense_close(&transpose(&x), &x, 0.0));
        }
        let total = proj(1).unwrap() + proj(2).unwrap() + proj(3).unwrap();
        assert_eq!(total, RealSym3::IDENTITY);
    }

    #[test]
    fn commutator_examples() {
        let a = RealSym3::from_entries([0.3, -0.1, 0.7, 0.2, -0.4, 0.9]);
        assert_eq!(commutator(&a, &a), RealSkew3::ZERO);
        // [σz12, σ12] = 2 σx12
        let c = commutator(&SIGMA_Z12, &SIGMA12);
        assert!(c.max_abs_diff(&SIGMA_X12.scaled(2.0)) < 1e-15);
        // explicit dense oracle for [σ12, P1]
        let s = SIGMA12.to_dense();
        let p = P1.to_dense();
        let oracle = dense_sub(&mat_mul(&s, &p), &mat_mul(&p, &s));
        let c = commutator(&SIGMA12, &P1);
        assert!(dense_close(&c.to_dense(), &oracle, 0.0));
        assert_eq!(c, SIGMA_X12.scaled(-1.0));
    }

    #[test]
    fn trace_prod_examples() {
        assert_eq!(trace_prod(&P1, &P1), 1.0);
        assert_eq!(trace_prod(&SIGMA_Z12, &SIGMA_X12), 0.0);
        let x = SIGMA_X12.to_dense();
        assert_eq!(dense_trace(&mat_mul(&x, &x)), 2.0);
        assert_eq!(trace_prod(&SIGMA_X12, &SIGMA_X12), 2.0);
    }

    #[test]
    fn rotation_examples() {
        assert!(dense_close(&rot12(0.0).matrix(), &IDENTITY3, 0.0));
        // P3 + σ12 at θ = π/2
        let expected = (P3.to_dense(), SIGMA12.to_dense());
        let mut sum = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                sum[i][j] = expected.0[i][j] + expected.1[i][j];
            }
        }
        assert!(dense_close(&rot12(std::f64::consts::FRAC_PI_2).matrix(), &sum, 1e-16));
        let theta: f64 = 0.3;
        let c = rot12(theta).conjugate_sym(&P1);
        assert!((c.get(0, 0) - theta.cos().powi(2)).abs() < 1e-15);
    }

    #[test]
    fn rotation_matches_series_exponential() {
        // Independent check of the closed form: truncated Taylor series of exp(θσ12).
        let theta = 0.9;
        let s = SIGMA12.to_dense();
        let mut term = IDENTITY3;
        let mut sum = IDENTITY3;
        for n in 1..40 {
            term = mat_mul(&term, &s).map(|r| r.map(|x| x * theta / n as f64));
            for i in 0..3 {
                for j in 0..3 {
                    sum[i][j] += term[i][j];
                }
            }
        }
        assert!(dense_close(&rot12(theta).matrix(), &sum, 1e-14));
    }

    #[test]
    fn eigen_reconstructs() {
        let m = RealSym3::from_entries([0.3, -0.1, 0.7, 0.2, -0.4, 0.9]);
        let (vals, vecs) = symmetric_eigen(&m);
        assert!(vals[0] >= vals[1] && vals[1] >= vals[2]);
        let d = m.to_dense();
        for j in 0..3 {
            let v = [vecs[0][j], vecs[1][j], vecs[2][j]];
            for i in 0..3 {
                let mv = d[i][0] * v[0] + d[i][1] * v[1] + d[i][2] * v[2];
                assert!((mv - vals[j] * v[i]).abs() < 1e-13);
            }
        }
    }

    // Power iteration, used as an independent oracle for the dominant direction.
    fn power_iteration(m: &RealSym3) -> [f64; 3] {
        let d = m.to_dense();
        let mut v = [0.6, 0.5, 0.4];
        for _ in 0..500 {
            let w: Vec<f64> = (0..3)
                .map(|i| d[i][0] * v[0] + d[i][1] * v[1] + d[i][2] * v[2])
                .collect();
            let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            v = [w[0] / n, w[1] / n, w[2] / n];
        }
        v
    }

    #[test]
    fn nearest_projector_examples() {
        assert!(nearest_projector(&P1).unwrap().matrix().max_abs_diff(&P1) < 1e-15);

        let m = 0.98 * P1 + 0.02 * P2;
        let oracle = RealSym3::outer(power_iteration(&m));
        let got = nearest_projector(&m).unwrap();
        assert!(got.matrix().max_abs_diff(&oracle) < 1e-12);
        assert!(got.matrix().max_abs_diff(&P1) < 1e-12);

        let third = RealSym3::IDENTITY.scaled(1.0 / 3.0);
        assert!(matches!(nearest_projector(&third), Err(Error::DegenerateState { .. })));
    }

    #[test]
    fn nearest_projector_output_is_pure() {
        let v = [0.3, -0.8, 0.52];
        let noisy = PureState::from_amplitudes(v).unwrap().matrix().scaled(0.999)
            + RealSym3::from_entries([1e-4, -2e-4, 3e-4, 1e-4, 0.0, -1e-4]);
        let p = nearest_projector(&noisy).unwrap();
        assert!((p.matrix().trace() - 1.0).abs() < 1e-12);
        assert!(p.matrix().idempotency_defect() < 1e-12);
    }

    #[test]
    fn pure_state_validation() {
        assert!(PureState::new(P2).is_ok());
        assert!(PureState::new(0.5 * P1 + 0.5 * P2).is_err());
        assert!(PureState::new(P1 + P2).is_err());
        assert!(PureState::from_amplitudes([0.0; 3]).is_err());
        let s = PureState::from_amplitudes([1.0, 1.0, 0.0]).unwrap();
        let expected = (P1 + P2 + SIGMA_X12).scaled(0.5);
        assert!(s.matrix().max_abs_diff(&expected) < 1e-15);
        assert!((s.population(2).unwrap() - 0.5).abs() < 1e-15);
    }

    fn sym_strategy() -> impl Strategy<Value = RealSym3> {
        prop::array::uniform6(-2.0f64..2.0).prop_map(RealSym3::from_entries)
    }

    fn skew_strategy() -> impl Strategy<Value = RealSkew3> {
        prop::array::uniform3(-2.0f64..2.0).prop_map(RealSkew3::from_entries)
    }

    proptest! {
        #[test]
        fn rotation_inverse_is_identity(theta in -20.0f64..20.0) {
            let prod = mat_mul(&rot12(theta).matrix(), &rot12(-theta).matrix());
            prop_assert!(dense_close(&prod, &IDENTITY3, 1e-12));
            let u = rot12(theta).matrix();
            prop_assert!(dense_close(&mat_mul(&u, &transpose(&u)), &IDENTITY3, 1e-12));
        }

        #[test]
        fn conjugation_preserves_invariants(theta in -10.0f64..10.0, m in sym_strategy(),
                                            v in prop::array::uniform3(-1.0f64..1.0)) {
            let r = rot12(theta);
            let c = r.conjugate_sym(&m);
            prop_assert!((c.trace() - m.trace()).abs() < 1e-12);
            prop_assert!((trace_prod(&c, &c) - trace_prod(&m, &m)).abs() < 1e-12);
            prop_assume!(v.iter().map(|x| x * x).sum::<f64>() > 1e-3);
            let p = *PureState::from_amplitudes(v).unwrap().matrix();
            let pc = r.conjugate_sym(&p);
            prop_assert!((pc.idempotency_defect() - p.idempotency_defect()).abs() < 1e-12);
            prop_assert!(r.unconjugate_sym(&pc).max_abs_diff(&p) < 1e-12);
        }

        #[test]
        fn commutator_cyclicity(x in skew_strategy(), a in sym_strategy(), b in sym_strategy()) {
            // Tr([X, A] B) = Tr(X [A, B])
            let lhs = trace_prod(&commutator(&x, &a), &b);
            let ab = commutator(&a, &b).to_dense();
            let rhs = dense_trace(&mat_mul(&x.to_dense(), &ab));
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn typed_commutators_match_dense(x in skew_strategy(), a in sym_strategy(), b in sym_strategy()) {
            let dense = |p: &Mat3, q: &Mat3| dense_sub(&mat_mul(p, q), &mat_mul(q, p));
            prop_assert!(dense_close(&commutator(&x, &a).to_dense(), &dense(&x.to_dense(), &a.to_dense()), 1e-12));
            prop_assert!(dense_close(&commutator(&a, &x).to_dense(), &dense(&a.to_dense(), &x.to_dense()), 1e-12));
            prop_assert!(dense_close(&commutator(&a, &b).to_dense(), &dense(&a.to_dense(), &b.to_dense()), 1e-12));
        }
    }
}
