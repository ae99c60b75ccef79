//! Driven linear ODE `ẋ = M(t)·x + s` with a classical fourth-order scheme.

use super::linalg::{CVec2, Complex2x2};
use super::NumericsError;

/// Uniform, strictly increasing sample times.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    t1: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn uniform(t0: f64, t1: f64, n_steps: usize) -> Result<Self, NumericsError> {
        if !(t0.is_finite() && t1.is_finite()) {
            return Err(NumericsError::NonFinite);
        }
        if n_steps == 0 || t1 <= t0 {
            return Err(NumericsError::InvalidGrid);
        }
        Ok(Self { t0, t1, n_steps })
    }

    pub fn start(&self) -> f64 {
        self.t0
    }

    pub fn end(&self) -> f64 {
        self.t1
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn step(&self) -> f64 {
        (self.t1 - self.t0) / self.n_steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.n_steps {
            self.t1
        } else {
            self.t0 + k as f64 * self.step()
        }
    }

    /// All `n_steps + 1` sample times.
    pub fn samples(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|k| self.time(k)).collect()
    }
}

/// One RK4 step of `ẋ = M x + s` given `M` at the start, midpoint and end.
#[inline]
pub fn rk4_step(
    m_start: &Complex2x2,
    m_mid: &Complex2x2,
    m_end: &Complex2x2,
    source: CVec2,
    x: CVec2,
    h: f64,
) -> CVec2 {
    let k1 = m_start.apply(x) + source;
    let k2 = m_mid.apply(x + k1.scale_re(0.5 * h)) + source;
    let k3 = m_mid.apply(x + k2.scale_re(0.5 * h)) + source;
    let k4 = m_end.apply(x + k3.scale_re(h)) + source;
    x + (k1 + k2.scale_re(2.0) + k3.scale_re(2.0) + k4).scale_re(h / 6.0)
}

/// Solves `ẋ = M(t)x + s`, `x(t0) = 0`, returning `x` at every grid sample.
pub fn solve_driven_ode<F>(m_of_t: F, source: CVec2, grid: &TimeGrid) -> Result<Vec<CVec2>, NumericsError>
where
    F: Fn(f64) -> Complex2x2,
{
    solve_driven_ode_from(m_of_t, source, grid, CVec2::ZERO)
}

/// As [`solve_driven_ode`] but from an arbitrary initial state.
pub fn solve_driven_ode_from<F>(
    m_of_t: F,
    source: CVec2,
    grid: &TimeGrid,
    initial: CVec2,
) -> Result<Vec<CVec2>, NumericsError>
where
    F: Fn(f64) -> Complex2x2,
{
    if !source.is_finite() || !initial.is_finite() {
        return Err(NumericsError::NonFinite);
    }
    let mut out = Vec::with_capacity(grid.n_steps() + 1);
    let mut x = initial;
    out.push(x);
    let mut m_start = m_of_t(grid.time(0));
    for k in 0..grid.n_steps() {
        let t = grid.time(k);
        let t_next = grid.time(k + 1);
        let h = t_next - t;
        let m_mid = m_of_t(t + 0.5 * h);
        let m_end = m_of_t(t_next);
        if !(m_start.is_finite() && m_mid.is_finite() && m_end.is_finite()) {
            return Err(NumericsError::NonFinite);
        }
        x = rk4_step(&m_start, &m_mid, &m_end, source, x, h);
        out.push(x);
        m_start = m_end;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::expm2;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_source_stays_zero() {
        let grid = TimeGrid::uniform(0.0, 5.0, 100).unwrap();
        let m = |_t: f64| Complex2x2::new(c(-1.0, 2.0), c(0.0, -1.0), c(0.0, -1.0), c(0.0, 0.3));
        let xs = solve_driven_ode(m, CVec2::ZERO, &grid).unwrap();
        assert!(xs.iter().all(|x| *x == CVec2::ZERO));
    }

    #[test]
    fn scalar_relaxation_closed_form() {
        let gamma = 3.0;
        let m = |_t: f64| Complex2x2::diag(c(-gamma / 2.0, 0.0), c(-gamma / 2.0, 0.0));
        let grid = TimeGrid::uniform(0.0, 4.0, 400).unwrap();
        let xs = solve_driven_ode(m, CVec2::new(c(1.0, 0.0), c(0.0, 0.0)), &grid).unwrap();
        for (k, x) in xs.iter().enumerate() {
            let t = grid.time(k);
            let exact = (2.0 / gamma) * (1.0 - (-gamma * t / 2.0).exp());
            assert!((x.0[0].re - exact).abs() < 1e-9, "t={t}");
            assert_eq!(x.0[1], c(0.0, 0.0));
        }
    }

    fn ramp(t: f64) -> Complex2x2 {
        Complex2x2::new(c(-0.5, -2.0), c(0.0, -1.0), c(0.0, -1.0), c(-5e-4, 0.1 * t))
    }

    /// Double-integral form `x(t) = ∫ U(t,τ) s dτ`, with `U` a product of
    /// short-step exponentials and the τ-integral done per fine step exactly
    /// for a frozen generator.
    fn double_integral(t_end: f64, n_fine: usize, s: CVec2) -> CVec2 {
        let h = t_end / n_fine as f64;
        let mut x = CVec2::ZERO;
        let mut u = Complex2x2::IDENTITY; // U(t_end, τ_{j+1})
        for j in (0..n_fine).rev() {
            let m = ramp((j as f64 + 0.5) * h);
            let e = expm2(m, h).unwrap();
            // ∫_0^h e^{M u} du s  =  M^{-1}(e^{Mh} - I) s
            let phi = m.solve((e - Complex2x2::IDENTITY).apply(s)).unwrap();
            x += u.apply(phi);
            u = u * e;
        }
        x
    }

    #[test]
    fn time_varying_generator_matches_double_integral() {
        let s = CVec2::new(c(0.0, -0.5), c(0.0, 0.0));
        let grid = TimeGrid::uniform(0.0, 20.0, 1000).unwrap();
        let xs = solve_driven_ode(ramp, s, &grid).unwrap();
        let oracle = double_integral(20.0, 10_000, s);
        let got = *xs.last().unwrap();
        let rel = (got - oracle).norm_inf() / oracle.norm_inf();
        assert!(rel < 1e-6, "rel={rel}");
    }

    #[test]
    fn fourth_order_convergence() {
        let s = CVec2::new(c(0.0, -0.5), c(0.0, 0.0));
        let reference = *solve_driven_ode(ramp, s, &TimeGrid::uniform(0.0, 10.0, 8000).unwrap())
            .unwrap()
            .last()
            .unwrap();
        let err = |n: usize| {
            let xs = solve_driven_ode(ramp, s, &TimeGrid::uniform(0.0, 10.0, n).unwrap()).unwrap();
            (*xs.last().unwrap() - reference).norm_inf()
        };
        let (e1, e2) = (err(50), err(100));
        assert!(e1 / e2 >= 8.0, "ratio {}", e1 / e2);
    }

    #[test]
    fn grid_validation() {
        assert_eq!(TimeGrid::uniform(1.0, 1.0, 10), Err(NumericsError::InvalidGrid));
        assert_eq!(TimeGrid::uniform(0.0, 1.0, 0), Err(NumericsError::InvalidGrid));
        let g = TimeGrid::uniform(0.0, 1.0, 4).unwrap();
        assert_eq!(g.samples(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }
}
