//! Complex 2×2 matrices and 2-vectors.

use std::ops::{Add, AddAssign, Mul, Sub};

use num_complex::Complex64;

use super::NumericsError;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Below this eigenvalue gap (of `m·dt`) the exponential switches from the
/// closed-form eigen solution to a scaled Taylor series.
pub const DEGENERATE_GAP: f64 = 1e-6;

/// A complex 2-vector.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CVec2(pub [Complex64; 2]);

impl CVec2 {
    pub const ZERO: CVec2 = CVec2([ZERO, ZERO]);

    pub fn new(x0: Complex64, x1: Complex64) -> Self {
        Self([x0, x1])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.is_finite())
    }

    pub fn scale(self, k: Complex64) -> Self {
        Self([self.0[0] * k, self.0[1] * k])
    }

    pub fn scale_re(self, k: f64) -> Self {
        Self([self.0[0] * k, self.0[1] * k])
    }

    /// Largest component modulus.
    pub fn norm_inf(&self) -> f64 {
        self.0[0].norm().max(self.0[1].norm())
    }
}

impl Add for CVec2 {
    type Output = CVec2;
    fn add(self, rhs: CVec2) -> CVec2 {
        CVec2([self.0[0] + rhs.0[0], self.0[1] + rhs.0[1]])
    }
}

impl Sub for CVec2 {
    type Output = CVec2;
    fn sub(self, rhs: CVec2) -> CVec2 {
        CVec2([self.0[0] - rhs.0[0], self.0[1] - rhs.0[1]])
    }
}

impl AddAssign for CVec2 {
    fn add_assign(&mut self, rhs: CVec2) {
        self.0[0] += rhs.0[0];
        self.0[1] += rhs.0[1];
    }
}

/// Row-major complex 2×2 matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Complex2x2 {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl Complex2x2 {
    pub const ZERO: Complex2x2 = Complex2x2 {
        a: ZERO,
        b: ZERO,
        c: ZERO,
        d: ZERO,
    };
    pub const IDENTITY: Complex2x2 = Complex2x2 {
        a: ONE,
        b: ZERO,
        c: ZERO,
        d: ONE,
    };

    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Self { a, b, c, d }
    }

    pub fn diag(a: Complex64, d: Complex64) -> Self {
        Self { a, b: ZERO, c: ZERO, d }
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite() && self.d.is_finite()
    }

    pub fn trace(&self) -> Complex64 {
        self.a + self.d
    }

    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    pub fn scale(self, k: Complex64) -> Self {
        Self {
            a: self.a * k,
            b: self.b * k,
            c: self.c * k,
            d: self.d * k,
        }
    }

    pub fn scale_re(self, k: f64) -> Self {
        Self {
            a: self.a * k,
            b: self.b * k,
            c: self.c * k,
            d: self.d * k,
        }
    }

    pub fn apply(&self, x: CVec2) -> CVec2 {
        CVec2([self.a * x.0[0] + self.b * x.0[1], self.c * x.0[0] + self.d * x.0[1]])
    }

    /// Solves `self · x = rhs` by Cramer's rule.
    pub fn solve(&self, rhs: CVec2) -> Result<CVec2, NumericsError> {
        let det = self.det();
        if det == ZERO || !det.is_finite() {
            return Err(NumericsError::Singular);
        }
        let [r0, r1] = rhs.0;
        Ok(CVec2([
            (self.d * r0 - self.b * r1) / det,
            (self.a * r1 - self.c * r0) / det,
        ]))
    }

    /// Max-abs entry norm.
    pub fn norm_max(&self) -> f64 {
        self.a.norm().max(self.b.norm()).max(self.c.norm()).max(self.d.norm())
    }
}

impl Add for Complex2x2 {
    type Output = Complex2x2;
    fn add(self, r: Complex2x2) -> Complex2x2 {
        Complex2x2 {
            a: self.a + r.a,
            b: self.b + r.b,
            c: self.c + r.c,
            d: self.d + r.d,
        }
    }
}

impl Sub for Complex2x2 {
    type Output = Complex2x2;
    fn sub(self, r: Complex2x2) -> Complex2x2 {
        Complex2x2 {
            a: self.a - r.a,
            b: self.b - r.b,
            c: self.c - r.c,
            d: self.d - r.d,
        }
    }
}

impl Mul for Complex2x2 {
    type Output = Complex2x2;
    fn mul(self, r: Complex2x2) -> Complex2x2 {
        Complex2x2 {
            a: self.a * r.a + self.b * r.c,
            b: self.a * r.b + self.b * r.d,
            c: self.c * r.a + self.d * r.c,
            d: self.c * r.b + self.d * r.d,
        }
    }
}

impl Mul<CVec2> for Complex2x2 {
    type Output = CVec2;
    fn mul(self, x: CVec2) -> CVec2 {
        self.apply(x)
    }
}

/// `exp(m·dt)`.
///
/// Writing `A = m·dt = μI + N` with `μ = tr(A)/2`, the traceless part obeys
/// `N² = q²I` where `±q` are the eigenvalues of `N`, so
/// `exp(A) = e^μ [cosh(q) I + sinh(q)/q · N]`. This is the eigen-decomposition
/// written without eigenvectors. When the eigenvalue gap `2|q|` drops below
/// [`DEGENERATE_GAP`] the two functions are summed as Taylor series, which
/// stays exact through the Jordan-block limit `q → 0`.
pub fn expm2(m: Complex2x2, dt: f64) -> Result<Complex2x2, NumericsError> {
    if !m.is_finite() || !dt.is_finite() {
        return Err(NumericsError::NonFinite);
    }
    let a = m.scale_re(dt);
    let mu = a.trace() * 0.5;
    let n = a - Complex2x2::IDENTITY.scale(mu);
    let q2 = n.a * n.a + n.b * n.c;
    let q = q2.sqrt();

    let (cosh_q, sinhc_q) = if 2.0 * q.norm() < DEGENERATE_GAP {
        // cosh q = Σ q^{2k}/(2k)!, sinh q / q = Σ q^{2k}/(2k+1)!
        let mut c = ONE;
        let mut s = ONE;
        let mut term_c = ONE;
        let mut term_s = ONE;
        for k in 1..8 {
            let k = k as f64;
            term_c = term_c * q2 / ((2.0 * k - 1.0) * (2.0 * k));
            term_s = term_s * q2 / ((2.0 * k) * (2.0 * k + 1.0));
            c += term_c;
            s += term_s;
        }
        (c, s)
    } else {
        (q.cosh(), q.sinh() / q)
    };

    let scale = mu.exp();
    let out = (Complex2x2::IDENTITY.scale(cosh_q) + n.scale(sinhc_q)).scale(scale);
    if out.is_finite() {
        Ok(out)
    } else {
        Err(NumericsError::Overflow)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rel_err(x: Complex2x2, y: Complex2x2) -> f64 {
        (x - y).norm_max() / y.norm_max()
    }

    /// Scaling-and-squaring with a long Taylor sum; independent of the closed form.
    fn taylor_expm(m: Complex2x2, dt: f64) -> Complex2x2 {
        let a = m.scale_re(dt);
        let mut s = 0u32;
        while a.norm_max() / 2f64.powi(s as i32) > 0.1 {
            s += 1;
        }
        let a = a.scale_re(0.5f64.powi(s as i32));
        let mut sum = Complex2x2::IDENTITY;
        let mut term = Complex2x2::IDENTITY;
        for k in 1..200 {
            term = (term * a).scale_re(1.0 / k as f64);
            sum = sum + term;
        }
        for _ in 0..s {
            sum = sum * sum;
        }
        sum
    }

    #[test]
    fn zero_matrix_gives_identity() {
        let e = expm2(Complex2x2::ZERO, 3.7).unwrap();
        assert_eq!(e, Complex2x2::IDENTITY);
    }

    #[test]
    fn diagonal_case() {
        let m = Complex2x2::diag(c(-1.0, 0.0), c(-2.0, 0.0));
        let e = expm2(m, 1.0).unwrap();
        assert!((e.a - c((-1f64).exp(), 0.0)).norm() < 1e-15);
        assert!((e.d - c((-2f64).exp(), 0.0)).norm() < 1e-15);
        assert!(e.b.norm() == 0.0 && e.c.norm() == 0.0);
    }

    #[test]
    fn jordan_block_matches_taylor_oracle() {
        let m = Complex2x2::new(c(-1.0, 0.5), c(1.0, 0.0), c(0.0, 0.0), c(-1.0, 0.5));
        let e = expm2(m, 0.1).unwrap();
        assert!(rel_err(e, taylor_expm(m, 0.1)) < 1e-10);
        // nearly degenerate, just under the switch
        let m2 = Complex2x2::new(c(-1.0, 0.5), c(1.0, 0.0), c(1e-14, 0.0), c(-1.0, 0.5));
        assert!(rel_err(expm2(m2, 0.1).unwrap(), taylor_expm(m2, 0.1)) < 1e-10);
    }

    #[test]
    fn generic_matrix_matches_taylor_oracle() {
        let m = Complex2x2::new(c(-0.5, -2.0), c(0.0, -1.0), c(0.0, -1.0), c(-5e-7, 0.3));
        for dt in [0.01, 0.3, 2.0, 10.0] {
            assert!(rel_err(expm2(m, dt).unwrap(), taylor_expm(m, dt)) < 1e-12, "dt={dt}");
        }
    }

    #[test]
    fn non_finite_rejected() {
        let m = Complex2x2::diag(c(f64::NAN, 0.0), c(0.0, 0.0));
        assert_eq!(expm2(m, 1.0), Err(NumericsError::NonFinite));
        assert_eq!(expm2(Complex2x2::ZERO, f64::INFINITY), Err(NumericsError::NonFinite));
    }

    #[test]
    fn solve_inverts_apply() {
        let m = Complex2x2::new(c(1.0, 2.0), c(0.5, 0.0), c(-0.3, 1.0), c(2.0, -1.0));
        let x = CVec2::new(c(0.2, -0.1), c(1.0, 3.0));
        let y = m.apply(x);
        let back = m.solve(y).unwrap();
        assert!((back - x).norm_inf() < 1e-14);
        assert_eq!(Complex2x2::ZERO.solve(x), Err(NumericsError::Singular));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn entry() -> impl Strategy<Value = Complex64> {
            (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(r, i)| Complex64::new(r, i))
        }

        proptest! {
            #[test]
            fn semigroup_property(a in entry(), b in entry(), cc in entry(), d in entry(),
                                  t1 in 0.0..1.0f64, t2 in 0.0..1.0f64) {
                let m = Complex2x2::new(a, b, cc, d);
                let lhs = expm2(m, t1).unwrap() * expm2(m, t2).unwrap();
                let rhs = expm2(m, t1 + t2).unwrap();
                prop_assert!((lhs - rhs).norm_max() <= 1e-10 * rhs.norm_max().max(1e-300));
            }
        }
    }
}
