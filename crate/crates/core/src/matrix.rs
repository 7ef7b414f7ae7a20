//! Small symmetric matrices stored as explicit value records.
//!
//! Parameter order for 3×3 matrices is `(s, κ, φ_s)`.

use serde::ser::{Serialize, SerializeSeq, Serializer};

use crate::error::Error;
use crate::numfmt::Report;
use crate::scalar::Real;

/// Symmetric 2×2 real matrix in shot-noise units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMatrix2<T> {
    pub xx: T,
    pub xp: T,
    pub pp: T,
}

/// Eigen-decomposition of a [`SymMatrix2`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigen2<T> {
    pub lambda_min: T,
    pub lambda_max: T,
    /// Angle in `[0, π)` of the eigenvector belonging to `lambda_min`.
    pub angle_min: T,
}

impl<T: Real> SymMatrix2<T> {
    pub fn new(xx: T, xp: T, pp: T) -> Self {
        Self { xx, xp, pp }
    }

    pub fn identity() -> Self {
        Self::new(T::one(), T::zero(), T::one())
    }

    pub fn det(&self) -> T {
        self.xx * self.pp - self.xp * self.xp
    }

    pub fn trace(&self) -> T {
        self.xx + self.pp
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(self.xx + other.xx, self.xp + other.xp, self.pp + other.pp)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::new(self.xx - other.xx, self.xp - other.xp, self.pp - other.pp)
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        let scale = self.xx.abs().max(self.pp.abs()).max(self.xp.abs());
        if d.abs() <= T::conditioning_eps() * scale * scale || !d.is_finite() {
            return None;
        }
        Some(Self::new(self.pp / d, -self.xp / d, self.xx / d))
    }

    /// Closed-form eigen-decomposition.
    ///
    /// The small-eigenvalue axis angle follows from the double-angle
    /// relations `xx - pp = (λmin - λmax) cos 2φ`, `2 xp = (λmin - λmax) sin 2φ`.
    pub fn eigen(&self) -> Eigen2<T> {
        let two = T::lit(2.0);
        let mean = (self.xx + self.pp) / two;
        let half_diff = (self.xx - self.pp) / two;
        let radius = half_diff.hypot(self.xp);
        let angle = if radius > T::zero() {
            let doubled = (-self.xp).atan2(-half_diff);
            crate::scalar::wrap_to_period(doubled / two, T::PI())
        } else {
            T::zero()
        };
        Eigen2 {
            lambda_min: mean - radius,
            lambda_max: mean + radius,
            angle_min: angle,
        }
    }

    /// Full-matrix product `self * other` (result is generally not symmetric).
    pub(crate) fn mul_full(&self, other: &Self) -> [[T; 2]; 2] {
        let a = self.to_array();
        let b = other.to_array();
        let mut out = [[T::zero(); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        out
    }

    pub fn to_array(&self) -> [[T; 2]; 2] {
        [[self.xx, self.xp], [self.xp, self.pp]]
    }
}

/// Symmetric 3×3 real matrix indexed by parameter order `(s, κ, φ_s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMatrix3<T> {
    // upper triangle, row-major: 00 01 02 11 12 22
    e: [T; 6],
}

#[inline]
fn slot(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    match (i, j) {
        (0, 0) => 0,
        (0, 1) => 1,
        (0, 2) => 2,
        (1, 1) => 3,
        (1, 2) => 4,
        (2, 2) => 5,
        _ => panic!("index ({i}, {j}) out of range for a 3x3 matrix"),
    }
}

impl<T: Real> Default for SymMatrix3<T> {
    fn default() -> Self {
        Self::zeros()
    }
}

impl<T: Real> SymMatrix3<T> {
    pub fn zeros() -> Self {
        Self { e: [T::zero(); 6] }
    }

    pub fn diagonal(d: [T; 3]) -> Self {
        let mut m = Self::zeros();
        for (i, v) in d.into_iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Builds a symmetric matrix from the upper triangle of `a`.
    pub fn from_upper(a: [[T; 3]; 3]) -> Self {
        let mut m = Self::zeros();
        for i in 0..3 {
            for j in i..3 {
                m.set(i, j, a[i][j]);
            }
        }
        m
    }

    /// Outer product `v vᵀ` scaled by `w`.
    pub fn outer(v: [T; 3], w: T) -> Self {
        let mut m = Self::zeros();
        for i in 0..3 {
            for j in i..3 {
                m.set(i, j, w * v[i] * v[j]);
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.e[slot(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.e[slot(i, j)] = v;
    }

    pub fn diag(&self) -> [T; 3] {
        [self.get(0, 0), self.get(1, 1), self.get(2, 2)]
    }

    pub fn to_array(&self) -> [[T; 3]; 3] {
        let mut a = [[T::zero(); 3]; 3];
        for (i, row) in a.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.get(i, j);
            }
        }
        a
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut e = self.e;
        for (a, b) in e.iter_mut().zip(other.e) {
            *a = *a + b;
        }
        Self { e }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-T::one()))
    }

    pub fn scale(&self, k: T) -> Self {
        Self { e: self.e.map(|v| v * k) }
    }

    pub fn max_abs(&self) -> T {
        self.e.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn det(&self) -> T {
        let [a, b, c, d, e, f] = self.e;
        a * (d * f - e * e) - b * (b * f - e * c) + c * (b * e - d * c)
    }

    /// Inverse via the adjugate.
    ///
    /// Fails with [`Error::SingularInformation`] when the determinant is below
    /// `eps · scale³`, where `scale` is the largest absolute entry.
    pub fn inverse(&self) -> Result<Self, Error> {
        let [a, b, c, d, e, f] = self.e;
        let det = self.det();
        let scale = self.max_abs();
        if !det.is_finite() || scale == T::zero() || det.abs() < T::conditioning_eps() * scale.powi(3)
        {
            return Err(Error::SingularInformation);
        }
        let adj = [
            d * f - e * e,
            c * e - b * f,
            b * e - c * d,
            a * f - c * c,
            b * c - a * e,
            a * d - b * b,
        ];
        Ok(Self { e: adj.map(|v| v / det) })
    }

    /// Inverse of the leading 2×2 block, with the φ_s row and column of the
    /// result set to `+∞` on the diagonal and zero elsewhere.
    ///
    /// Used when the φ_s information vanishes identically (s = 1).
    pub fn inverse_without_angle(&self) -> Result<Self, Error> {
        let block = SymMatrix2::new(self.get(0, 0), self.get(0, 1), self.get(1, 1));
        let inv = block.inverse().ok_or(Error::SingularInformation)?;
        let mut m = Self::zeros();
        m.set(0, 0, inv.xx);
        m.set(0, 1, inv.xp);
        m.set(1, 1, inv.pp);
        m.set(2, 2, T::infinity());
        Ok(m)
    }

    /// Positive semidefiniteness via all principal minors, with a relative
    /// tolerance `tol` on the entry scale.
    pub fn is_psd(&self, tol: T) -> bool {
        let scale = self.max_abs().max(T::min_positive_value());
        let g = |i, j| self.get(i, j);
        let firsts = [g(0, 0), g(1, 1), g(2, 2)];
        let seconds = [
            g(0, 0) * g(1, 1) - g(0, 1) * g(0, 1),
            g(0, 0) * g(2, 2) - g(0, 2) * g(0, 2),
            g(1, 1) * g(2, 2) - g(1, 2) * g(1, 2),
        ];
        firsts.iter().all(|&m| m >= -tol * scale)
            && seconds.iter().all(|&m| m >= -tol * scale * scale)
            && self.det() >= -tol * scale.powi(3)
    }

    pub fn cast<U: Real>(&self) -> SymMatrix3<U> {
        SymMatrix3 { e: self.e.map(|v| U::lit(v.as_f64())) }
    }
}

impl<T: Real> Serialize for SymMatrix3<T> {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        let mut rows = ser.serialize_seq(Some(3))?;
        for row in self.to_array() {
            rows.serialize_element(&row.map(|v| Report(v.as_f64())))?;
        }
        rows.end()
    }
}

/// Solves the general 3×3 system `a x = b` by Cramer's rule.
///
/// Returns `None` when the system is numerically singular relative to the
/// entry scale.
pub fn solve3<T: Real>(a: [[T; 3]; 3], b: [T; 3]) -> Option<[T; 3]> {
    let det3 = |m: &[[T; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let det = det3(&a);
    let scale = a
        .iter()
        .flatten()
        .fold(T::zero(), |m, v| m.max(v.abs()));
    if !det.is_finite() || scale == T::zero() || det.abs() < T::conditioning_eps() * scale.powi(3) {
        return None;
    }
    let mut x = [T::zero(); 3];
    for (k, xk) in x.iter_mut().enumerate() {
        let mut m = a;
        for (row, bi) in m.iter_mut().zip(b) {
            row[k] = bi;
        }
        *xk = det3(&m) / det;
    }
    Some(x)
}
