//! Adaptive Gauss–Kronrod quadrature and fixed Gauss–Legendre rules.

use std::collections::BinaryHeap;

use num_complex::Complex64;

use super::NumericsError;

// 15-point Kronrod abscissae (non-negative half) and weights, with the
// embedded 7-point Gauss weights on the odd-indexed abscissae.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances and budget for [`quad1d_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl QuadOptions {
    pub fn absolute(tol: f64) -> Self {
        Self {
            abs_tol: tol,
            rel_tol: 0.0,
            max_intervals: 4000,
        }
    }

    pub fn relative(tol: f64) -> Self {
        Self {
            abs_tol: 0.0,
            rel_tol: tol,
            max_intervals: 4000,
        }
    }
}

/// A converged integral with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: Complex64,
    pub error: f64,
    pub evaluations: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kron += pair * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    let value = kron * half;
    let error = ((kron - gauss) * half).norm();
    (value, error)
}

/// Adaptive estimate of `∫_a^b f` with absolute error ≤ `tol`.
pub fn quad1d<F>(f: F, a: f64, b: f64, tol: f64) -> Result<Integral, NumericsError>
where
    F: Fn(f64) -> Complex64,
{
    quad1d_with(f, a, b, QuadOptions::absolute(tol))
}

/// Real-valued convenience wrapper.
pub fn quad1d_real<F>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<f64, NumericsError>
where
    F: Fn(f64) -> f64,
{
    quad1d_with(|x| Complex64::new(f(x), 0.0), a, b, opts).map(|i| i.value.re)
}

/// Globally adaptive bisection on the segment with the largest error.
pub fn quad1d_with<F>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<Integral, NumericsError>
where
    F: Fn(f64) -> Complex64,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(NumericsError::NonFinite);
    }
    if a >= b {
        return Err(NumericsError::InvalidInterval);
    }
    let (v, e) = kronrod(&f, a, b);
    let mut evaluations = 15;
    let mut heap = BinaryHeap::new();
    heap.push(Segment {
        a,
        b,
        value: v,
        error: e,
    });
    let mut total = v;
    let mut total_err = e;

    loop {
        if !total.is_finite() {
            return Err(NumericsError::NonFinite);
        }
        let target = opts.abs_tol.max(opts.rel_tol * total.norm());
        if total_err <= target {
            return Ok(Integral {
                value: total,
                error: total_err,
                evaluations,
            });
        }
        if heap.len() >= opts.max_intervals {
            return Err(NumericsError::NotConverged {
                estimate: total,
                error: total_err,
            });
        }
        let worst = heap.pop().expect("heap never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval can no longer be bisected in floating point
            return Err(NumericsError::NotConverged {
                estimate: total,
                error: total_err,
            });
        }
        let (v1, e1) = kronrod(&f, worst.a, mid);
        let (v2, e2) = kronrod(&f, mid, worst.b);
        evaluations += 30;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
        // the running sum drifts; refresh it when the budget is mostly spent
        if heap.len() % 256 == 0 {
            total = heap.iter().map(|s| s.value).sum();
            total_err = heap.iter().map(|s| s.error).sum();
        }
    }
}

/// Integrates over consecutive sub-intervals given by sorted breakpoints.
pub fn quad1d_breaks<F>(f: F, breaks: &[f64], opts: QuadOptions) -> Result<Integral, NumericsError>
where
    F: Fn(f64) -> Complex64,
{
    let mut out = Integral {
        value: Complex64::new(0.0, 0.0),
        error: 0.0,
        evaluations: 0,
    };
    let pieces = breaks.windows(2).filter(|w| w[1] > w[0]).count().max(1) as f64;
    let per_piece = QuadOptions {
        abs_tol: opts.abs_tol / pieces,
        ..opts
    };
    for w in breaks.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let part = quad1d_with(&f, w[0], w[1], per_piece)?;
        out.value += part.value;
        out.error += part.error;
        out.evaluations += part.evaluations;
    }
    Ok(out)
}

/// `n`-point Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "need at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and its derivative
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn kronrod_weights_integrate_polynomials() {
        let sum: f64 = WGK[..7].iter().sum::<f64>() * 2.0 + WGK[7];
        assert!((sum - 2.0).abs() < 1e-15);
        let gsum: f64 = WG[..3].iter().sum::<f64>() * 2.0 + WG[3];
        assert!((gsum - 2.0).abs() < 1e-15);
        // degree 20 polynomial on a single panel is exact for K15
        let (v, _) = kronrod(&|x: f64| re(x.powi(20)), -1.0, 1.0);
        assert!((v.re - 2.0 / 21.0).abs() < 1e-15);
    }

    #[test]
    fn constant_integrand() {
        let i = quad1d(|_| re(1.0), 0.0, 1.0, 1e-12).unwrap();
        assert!((i.value.re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gaussian_density_normalises() {
        let sigma = 11.1e-6;
        let density = |z: f64| re((-(z * z) / (sigma * sigma)).exp() / (PI.sqrt() * sigma));
        let i = quad1d(density, -8.0 * sigma, 8.0 * sigma, 1e-11).unwrap();
        assert!((i.value.re - 1.0).abs() < 1e-9);
    }

    #[test]
    fn inverse_cube_lorentzian_closed_form() {
        let a = 1.7;
        let f = |x: f64| re(1.0 / (x * x + a * a).powi(3));
        let i = quad1d_with(f, -100.0 * a, 100.0 * a, QuadOptions::relative(1e-10)).unwrap();
        let exact = 3.0 * PI / (8.0 * a.powi(5));
        assert!(((i.value.re - exact) / exact).abs() < 1e-6);
    }

    #[test]
    fn oscillatory_complex_integrand() {
        // ∫_0^{2π} e^{i 3x} e^{-x} dx = (1 - e^{-2π}) / (1 - 3i)
        let f = |x: f64| Complex64::new(0.0, 3.0 * x).exp() * (-x).exp();
        let i = quad1d(f, 0.0, 2.0 * PI, 1e-12).unwrap();
        let exact = Complex64::new(1.0 - (-2.0 * PI).exp(), 0.0) / Complex64::new(1.0, -3.0);
        assert!((i.value - exact).norm() < 1e-12);
    }

    #[test]
    fn budget_exhaustion_reports_best_estimate() {
        let opts = QuadOptions {
            abs_tol: 1e-300,
            rel_tol: 0.0,
            max_intervals: 8,
        };
        match quad1d_with(|x: f64| re(x.abs().sqrt()), -1.0, 1.0, opts) {
            Err(NumericsError::NotConverged { estimate, .. }) => {
                assert!((estimate.re - 4.0 / 3.0).abs() < 1e-3)
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }

    #[test]
    fn bad_interval_rejected() {
        assert_eq!(quad1d(|_| re(1.0), 1.0, 0.0, 1e-9), Err(NumericsError::InvalidInterval));
    }

    #[test]
    fn gauss_legendre_nine_points() {
        let (x, w) = gauss_legendre(9);
        assert_eq!(x[4], 0.0);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        assert!((x[8] - 0.968_160_239_507_626_1).abs() < 1e-14);
        // exact for degree 17
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(16)).sum();
        assert!((s - 2.0 / 17.0).abs() < 1e-14);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn split_point_does_not_matter(split in 0.05..0.95f64, k in 0.5..6.0f64) {
                let tol = 1e-10;
                let f = |x: f64| Complex64::new((k * x).sin(), (x * x).cos()) / (1.0 + x * x);
                let whole = quad1d(f, -3.0, 4.0, tol).unwrap().value;
                let s = -3.0 + 7.0 * split;
                let parts = quad1d(f, -3.0, s, tol / 2.0).unwrap().value
                    + quad1d(f, s, 4.0, tol / 2.0).unwrap().value;
                prop_assert!((whole - parts).norm() <= 2.0 * tol);
            }
        }
    }
}
