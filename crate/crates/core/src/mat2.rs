//! Small dense 2x2 complex matrices.
//!
//! Jump matrices and boundary values in this crate are 2x2; a dedicated
//! value type keeps the hot inner loops allocation-free and makes the
//! algebra (products, inverses, Frobenius norms) explicit.

use num_complex::Complex64 as C64;
use std::ops::{Add, Mul, Neg, Sub};

/// A 2x2 complex matrix stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub a: [[C64; 2]; 2],
}

/// Complex zero shorthand.
pub const ZERO: C64 = C64::new(0.0, 0.0);
/// Complex one shorthand.
pub const ONE: C64 = C64::new(1.0, 0.0);

impl Mat2 {
    /// Build from four entries in reading order.
    pub fn new(a11: C64, a12: C64, a21: C64, a22: C64) -> Self {
        Mat2 { a: [[a11, a12], [a21, a22]] }
    }

    /// The identity matrix.
    pub fn identity() -> Self {
        Mat2::new(ONE, ZERO, ZERO, ONE)
    }

    /// The zero matrix.
    pub fn zero() -> Self {
        Mat2::new(ZERO, ZERO, ZERO, ZERO)
    }

    /// Diagonal matrix diag(d, d^{-1}); the sigma-3 conjugator shape.
    pub fn diag_sigma3(d: C64) -> Self {
        Mat2::new(d, ZERO, ZERO, 1.0 / d)
    }

    /// General diagonal matrix.
    pub fn diag(d1: C64, d2: C64) -> Self {
        Mat2::new(d1, ZERO, ZERO, d2)
    }

    /// Determinant.
    pub fn det(&self) -> C64 {
        self.a[0][0] * self.a[1][1] - self.a[0][1] * self.a[1][0]
    }

    /// Trace.
    pub fn trace(&self) -> C64 {
        self.a[0][0] + self.a[1][1]
    }

    /// Matrix inverse. Panics on exactly singular input (callers work
    /// with jump matrices whose determinants are bounded away from 0).
    pub fn inverse(&self) -> Mat2 {
        let d = self.det();
        Mat2::new(
            self.a[1][1] / d,
            -self.a[0][1] / d,
            -self.a[1][0] / d,
            self.a[0][0] / d,
        )
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Mat2 {
        Mat2::new(
            self.a[0][0].conj(),
            self.a[1][0].conj(),
            self.a[0][1].conj(),
            self.a[1][1].conj(),
        )
    }

    /// Transpose (no conjugation).
    pub fn transpose(&self) -> Mat2 {
        Mat2::new(self.a[0][0], self.a[1][0], self.a[0][1], self.a[1][1])
    }

    /// Frobenius norm.
    pub fn frob(&self) -> f64 {
        (self.a[0][0].norm_sqr()
            + self.a[0][1].norm_sqr()
            + self.a[1][0].norm_sqr()
            + self.a[1][1].norm_sqr())
        .sqrt()
    }

    /// Scale by a complex number.
    pub fn scale(&self, c: C64) -> Mat2 {
        Mat2::new(
            self.a[0][0] * c,
            self.a[0][1] * c,
            self.a[1][0] * c,
            self.a[1][1] * c,
        )
    }

    /// Entry accessor with 0-based indices.
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.a[i][j]
    }

    /// Flatten row-major into a length-4 slice order (11, 12, 21, 22).
    pub fn flatten(&self) -> [C64; 4] {
        [self.a[0][0], self.a[0][1], self.a[1][0], self.a[1][1]]
    }

    /// Rebuild from the row-major flattening.
    pub fn from_flat(v: [C64; 4]) -> Mat2 {
        Mat2::new(v[0], v[1], v[2], v[3])
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.a[0][0] + o.a[0][0],
            self.a[0][1] + o.a[0][1],
            self.a[1][0] + o.a[1][0],
            self.a[1][1] + o.a[1][1],
        )
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.a[0][0] - o.a[0][0],
            self.a[0][1] - o.a[0][1],
            self.a[1][0] - o.a[1][0],
            self.a[1][1] - o.a[1][1],
        )
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.a[0][0] * o.a[0][0] + self.a[0][1] * o.a[1][0],
            self.a[0][0] * o.a[0][1] + self.a[0][1] * o.a[1][1],
            self.a[1][0] * o.a[0][0] + self.a[1][1] * o.a[1][0],
            self.a[1][0] * o.a[0][1] + self.a[1][1] * o.a[1][1],
        )
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale(C64::new(-1.0, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn inverse_roundtrip() {
        let m = Mat2::new(c(1.0, 2.0), c(0.5, -1.0), c(-0.3, 0.2), c(2.0, 0.0));
        let p = m * m.inverse();
        assert!((p - Mat2::identity()).frob() < 1e-14);
    }

    #[test]
    fn adjoint_of_product() {
        let a = Mat2::new(c(1.0, 1.0), c(0.0, 2.0), c(3.0, 0.0), c(1.0, -1.0));
        let b = Mat2::new(c(0.5, 0.0), c(1.0, 1.0), c(-1.0, 0.5), c(0.0, 2.0));
        let lhs = (a * b).adjoint();
        let rhs = b.adjoint() * a.adjoint();
        assert!((lhs - rhs).frob() < 1e-14);
    }

    #[test]
    fn sigma3_diag_inverse() {
        let d = c(0.7, 0.4);
        let m = Mat2::diag_sigma3(d);
        assert!((m.det() - ONE).norm() < 1e-15);
    }
}
