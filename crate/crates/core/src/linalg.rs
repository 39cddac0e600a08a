//! Tiny 2x2 helpers.
//!
//! Every matrix in this problem is block-scalar: a 2d x 2d operator built
//! from d identical 2x2 blocks acting on one (x_i, xi_i) pair each. Storing
//! the single block is both faster and clearer than a general matrix type.

/// Symmetric 2x2 matrix [[xx, xy], [xy, vv]] in the (x, xi) ordering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sym2 {
    pub xx: f64,
    pub xy: f64,
    pub vv: f64,
}

impl Sym2 {
    pub fn new(xx: f64, xy: f64, vv: f64) -> Self {
        Sym2 { xx, xy, vv }
    }

    pub fn identity() -> Self {
        Sym2::new(1.0, 0.0, 1.0)
    }

    pub fn det(&self) -> f64 {
        self.xx * self.vv - self.xy * self.xy
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.vv
    }

    /// Eigenvalues as (min, max); exact closed form for the symmetric 2x2.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let half_tr = 0.5 * (self.xx + self.vv);
        let disc = (0.5 * (self.xx - self.vv)).hypot(self.xy);
        (half_tr - disc, half_tr + disc)
    }

    /// v^T S v for v = (a, b).
    pub fn quad_form(&self, a: f64, b: f64) -> f64 {
        self.xx * a * a + 2.0 * self.xy * a * b + self.vv * b * b
    }

    /// S v for v = (a, b).
    pub fn apply(&self, a: f64, b: f64) -> (f64, f64) {
        (self.xx * a + self.xy * b, self.xy * a + self.vv * b)
    }

    pub fn inverse(&self) -> Option<Sym2> {
        let det = self.det();
        if det == 0.0 {
            return None;
        }
        Some(Sym2::new(self.vv / det, -self.xy / det, self.xx / det))
    }

    /// Principal square root via eigen-decomposition; requires the matrix to
    /// be positive semidefinite.
    pub fn sqrt(&self) -> Option<Sym2> {
        let (lo, hi) = self.eigenvalues();
        if lo < 0.0 {
            return None;
        }
        // Eigenvector for `hi`: (xy, hi - xx) unless xy == 0.
        if self.xy == 0.0 {
            return Some(Sym2::new(self.xx.sqrt(), 0.0, self.vv.sqrt()));
        }
        let (c, s) = {
            let vx = self.xy;
            let vy = hi - self.xx;
            let norm = vx.hypot(vy);
            (vx / norm, vy / norm)
        };
        let (rl, rh) = (lo.sqrt(), hi.sqrt());
        // R diag(rh, rl) R^T with R = [[c, -s], [s, c]].
        Some(Sym2::new(
            rh * c * c + rl * s * s,
            (rh - rl) * c * s,
            rh * s * s + rl * c * c,
        ))
    }

    /// A S A^T for a general 2x2 A.
    pub fn congruence(&self, a: &Mat2) -> Sym2 {
        let (r1x, r1v) = (a.a11, a.a12);
        let (r2x, r2v) = (a.a21, a.a22);
        let (s1x, s1v) = self.apply(r1x, r1v);
        let (s2x, s2v) = self.apply(r2x, r2v);
        Sym2::new(
            r1x * s1x + r1v * s1v,
            r2x * s1x + r2v * s1v,
            r2x * s2x + r2v * s2v,
        )
    }
}

/// General 2x2 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Mat2 {
    pub fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Mat2 { a11, a12, a21, a22 }
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn apply(&self, x: f64, v: f64) -> (f64, f64) {
        (self.a11 * x + self.a12 * v, self.a21 * x + self.a22 * v)
    }

    pub fn mul(&self, other: &Mat2) -> Mat2 {
        Mat2::new(
            self.a11 * other.a11 + self.a12 * other.a21,
            self.a11 * other.a12 + self.a12 * other.a22,
            self.a21 * other.a11 + self.a22 * other.a21,
            self.a21 * other.a12 + self.a22 * other.a22,
        )
    }

    pub fn mul_sym(&self, s: &Sym2) -> Mat2 {
        Mat2::new(
            self.a11 * s.xx + self.a12 * s.xy,
            self.a11 * s.xy + self.a12 * s.vv,
            self.a21 * s.xx + self.a22 * s.xy,
            self.a21 * s.xy + self.a22 * s.vv,
        )
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let det = self.det();
        if det == 0.0 {
            return None;
        }
        Some(Mat2::new(
            self.a22 / det,
            -self.a12 / det,
            -self.a21 / det,
            self.a11 / det,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_of_known_matrix() {
        // [[2, 1], [1, 2]] has eigenvalues 1 and 3.
        let s = Sym2::new(2.0, 1.0, 2.0);
        let (lo, hi) = s.eigenvalues();
        assert!((lo - 1.0).abs() < 1e-14);
        assert!((hi - 3.0).abs() < 1e-14);
    }

    #[test]
    fn sqrt_squares_back() {
        let s = Sym2::new(2.0, 0.7, 1.3);
        let r = s.sqrt().unwrap();
        // r * r as symmetric product
        let rr = Sym2::new(
            r.xx * r.xx + r.xy * r.xy,
            r.xx * r.xy + r.xy * r.vv,
            r.xy * r.xy + r.vv * r.vv,
        );
        assert!((rr.xx - s.xx).abs() < 1e-12);
        assert!((rr.xy - s.xy).abs() < 1e-12);
        assert!((rr.vv - s.vv).abs() < 1e-12);
    }

    #[test]
    fn congruence_matches_direct_product() {
        let s = Sym2::new(1.5, -0.3, 0.8);
        let a = Mat2::new(0.2, 1.1, -0.7, 0.4);
        let c = s.congruence(&a);
        // Verify v^T (A S A^T) v = (A^T v)^T S (A^T v) on a sample vector.
        let (vx, vv) = (0.9, -1.7);
        let atv = (a.a11 * vx + a.a21 * vv, a.a12 * vx + a.a22 * vv);
        let direct = s.quad_form(atv.0, atv.1);
        assert!((c.quad_form(vx, vv) - direct).abs() < 1e-12);
    }

    #[test]
    fn inverse_roundtrip() {
        let m = Mat2::new(1.0, 2.0, 3.0, 4.0);
        let inv = m.inverse().unwrap();
        let id = m.mul(&inv);
        assert!((id.a11 - 1.0).abs() < 1e-14);
        assert!(id.a12.abs() < 1e-14);
        assert!((id.a22 - 1.0).abs() < 1e-14);
    }
}
