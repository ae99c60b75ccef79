//! Van der Waals interaction between two Rydberg polaritons on parallel
//! tracks, and the mean-field level shift one pulse imprints on the other.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atomic::MixingAngles;
use crate::numerics::{quad1d_breaks, NumericsError, QuadOptions};
use crate::units::{C6Convention, MICRON};

/// |C6| of the Rydberg pair used for the propagation figures, GHz·μm⁶.
pub const REFERENCE_C6_GHZ_UM6: f64 = 8500.0;

/// Initial pulse length used for the propagation figures, m.
pub const REFERENCE_SIGMA: f64 = 11.1 * MICRON;

/// Gaussian tails beyond this many σ are dropped from convolutions.
pub const PROFILE_HALF_WIDTH: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PotentialError {
    #[error("interaction diverges: zero transverse offset at zero separation")]
    Singular,
    #[error("invalid interaction parameters: {0}")]
    InvalidParams(String),
    #[error("mean-field quadrature failed: {0}")]
    Quadrature(#[from] NumericsError),
}

/// `Δ(x) = −C6/|x|⁶` between tracks a distance `a` apart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractionParams {
    /// |C6| in rad/s·m⁶.
    pub c6: f64,
    /// Transverse track separation, m.
    pub a: f64,
}

impl InteractionParams {
    pub fn new(c6: f64, a: f64) -> Result<Self, PotentialError> {
        let ip = Self { c6, a };
        ip.validate()?;
        Ok(ip)
    }

    pub fn from_ghz_um6(c6: f64, a: f64, convention: C6Convention) -> Result<Self, PotentialError> {
        Self::new(convention.ghz_um6_to_si(c6), a)
    }

    pub fn validate(&self) -> Result<(), PotentialError> {
        if !(self.c6.is_finite() && self.c6 >= 0.0) {
            return Err(PotentialError::InvalidParams(format!(
                "c6 = {} must be finite and ≥ 0",
                self.c6
            )));
        }
        if !(self.a.is_finite() && self.a >= 0.0) {
            return Err(PotentialError::InvalidParams(format!(
                "a = {} must be finite and ≥ 0",
                self.a
            )));
        }
        Ok(())
    }

    pub fn with_c6_scaled(self, k: f64) -> Self {
        Self {
            c6: self.c6 * k,
            ..self
        }
    }
}

/// Gaussian line density `|f(z)|² = norm/(√π σ) e^{−(z−center)²/σ²}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseProfile {
    pub sigma: f64,
    pub center: f64,
    /// Remaining photon weight, ≤ 1 once absorption has acted.
    pub norm: f64,
}

impl PulseProfile {
    pub fn gaussian(sigma: f64) -> Self {
        Self {
            sigma,
            center: 0.0,
            norm: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), PotentialError> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(PotentialError::InvalidParams(format!(
                "sigma = {} must be positive",
                self.sigma
            )));
        }
        if !(self.center.is_finite() && self.norm.is_finite() && self.norm >= 0.0) {
            return Err(PotentialError::InvalidParams("profile center/norm invalid".into()));
        }
        Ok(())
    }

    pub fn density(&self, z: f64) -> f64 {
        let u = (z - self.center) / self.sigma;
        self.norm * (-u * u).exp() / (PI.sqrt() * self.sigma)
    }

    /// The amplitude `f(z)` itself (unit norm, centred at zero).
    pub fn amplitude(sigma: f64, z: f64) -> f64 {
        let u = z / sigma;
        (-0.5 * u * u).exp() / (PI.sqrt() * sigma).sqrt()
    }
}

/// `−c6/(dz² + a²)³`.
pub fn effective_potential(dz: f64, ip: &InteractionParams) -> Result<f64, PotentialError> {
    let r2 = dz * dz + ip.a * ip.a;
    if r2 == 0.0 {
        if ip.c6 == 0.0 {
            return Ok(0.0);
        }
        return Err(PotentialError::Singular);
    }
    Ok(-ip.c6 / (r2 * r2 * r2))
}

/// Unchecked form for inner loops where `a > 0` has been verified.
#[inline]
pub(crate) fn potential_unchecked(dz: f64, ip: &InteractionParams) -> f64 {
    let r2 = dz * dz + ip.a * ip.a;
    -ip.c6 / (r2 * r2 * r2)
}

/// Mean-field shift felt at `sep + probe_offset` from the other pulse:
/// `sin²θ · T · ∫ Δ(sep + probe_offset − z′) |f_other(z′)|² dz′`.
pub fn delta_r(
    sep: f64,
    probe_offset: f64,
    other: &PulseProfile,
    ip: &InteractionParams,
    angles: &MixingAngles,
    transmission: f64,
) -> Result<f64, PotentialError> {
    other.validate()?;
    ip.validate()?;
    if !(0.0..=1.0).contains(&transmission) {
        return Err(PotentialError::InvalidParams(format!(
            "transmission {transmission} outside [0, 1]"
        )));
    }
    if ip.c6 == 0.0 || transmission == 0.0 || other.norm == 0.0 {
        return Ok(0.0);
    }
    let x = sep + probe_offset;
    let lo = other.center - PROFILE_HALF_WIDTH * other.sigma;
    let hi = other.center + PROFILE_HALF_WIDTH * other.sigma;
    if ip.a == 0.0 && x > lo && x < hi {
        return Err(PotentialError::Singular);
    }
    let mut breaks = vec![lo, hi, other.center];
    for b in [x - ip.a, x, x + ip.a] {
        if b > lo && b < hi {
            breaks.push(b);
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let integrand = |z: f64| Complex64::new(potential_unchecked(x - z, ip) * other.density(z), 0.0);
    let conv = quad1d_breaks(integrand, &breaks, QuadOptions::relative(1e-11))?;
    Ok(angles.sin2_theta() * transmission * conv.value.re)
}

/// Phase `c3⁴ c6 (3π/8) / (a⁵ v_rel)` accumulated over one complete pass at
/// constant relative speed (`∫ dt /(v²t² + a²)³ = 3π/(8 a⁵ v)`), returned as
/// a positive magnitude.
pub fn uniform_pass_phase(ip: &InteractionParams, angles: &MixingAngles, v_rel: f64) -> Result<f64, PotentialError> {
    if ip.a == 0.0 {
        return Err(PotentialError::Singular);
    }
    if !(v_rel > 0.0 && v_rel.is_finite()) {
        return Err(PotentialError::InvalidParams(format!(
            "v_rel = {v_rel} must be positive"
        )));
    }
    Ok(angles.c3_pow4() * ip.c6 * 3.0 * PI / (8.0 * ip.a.powi(5) * v_rel))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atomic::{mixing_angles, SystemParams};
    use crate::numerics::quad1d_real;

    fn angles() -> MixingAngles {
        mixing_angles(&SystemParams::rb87_reference())
    }

    fn fig3(a_over_sigma: f64) -> InteractionParams {
        InteractionParams::from_ghz_um6(
            REFERENCE_C6_GHZ_UM6,
            a_over_sigma * REFERENCE_SIGMA,
            C6Convention::Angular,
        )
        .unwrap()
    }

    fn gamma() -> f64 {
        SystemParams::rb87_reference().gamma
    }

    #[test]
    fn potential_closed_forms() {
        let ip = fig3(1.5);
        assert_eq!(
            effective_potential(3e-6, &InteractionParams { c6: 0.0, ..ip }).unwrap(),
            0.0
        );
        let at0 = effective_potential(0.0, &ip).unwrap();
        assert!((at0 / (-ip.c6 / ip.a.powi(6)) - 1.0).abs() < 1e-15);
        // brute-force 3-D separation vector
        for dz in [0.0, 5e-6, -2.2e-5] {
            let r = [dz, ip.a, 0.0].iter().map(|x| x * x).sum::<f64>().sqrt();
            let want = -ip.c6 / r.powi(6);
            let got = effective_potential(dz, &ip).unwrap();
            assert!(((got - want) / want).abs() < 1e-14);
        }
        let cyc = InteractionParams::from_ghz_um6(8500.0, 16.65e-6, C6Convention::Cyclic).unwrap();
        let want = -2.0 * PI * 8500e9 / 16.65f64.powi(6);
        assert!(((effective_potential(0.0, &cyc).unwrap() - want) / want).abs() < 1e-12);
    }

    #[test]
    fn contact_is_singular() {
        let ip = InteractionParams { c6: 1.0, a: 0.0 };
        assert_eq!(effective_potential(0.0, &ip), Err(PotentialError::Singular));
        let prof = PulseProfile::gaussian(REFERENCE_SIGMA);
        assert_eq!(
            delta_r(0.0, 0.0, &prof, &ip, &angles(), 1.0),
            Err(PotentialError::Singular)
        );
        assert_eq!(uniform_pass_phase(&ip, &angles(), 20.0), Err(PotentialError::Singular));
    }

    #[test]
    fn no_interaction_no_shift() {
        let prof = PulseProfile::gaussian(REFERENCE_SIGMA);
        let off = InteractionParams { c6: 0.0, ..fig3(1.5) };
        assert_eq!(delta_r(0.0, 0.0, &prof, &off, &angles(), 1.0).unwrap(), 0.0);
        let far = fig3(1e3);
        let v = delta_r(0.0, 0.0, &prof, &far, &angles(), 1.0).unwrap();
        assert!(v.abs() < 1e-12 * gamma());
    }

    #[test]
    fn point_source_limit() {
        let ip = fig3(1.0);
        let prof = PulseProfile::gaussian(1e-4 * ip.a);
        let ang = angles();
        for (sep, t) in [(0.0, 1.0), (7e-6, 0.6)] {
            let got = delta_r(sep, 0.0, &prof, &ip, &ang, t).unwrap();
            let want = ang.sin2_theta() * t * effective_potential(sep, &ip).unwrap();
            assert!(((got - want) / want).abs() < 1e-3);
        }
    }

    #[test]
    fn center_shift_matches_fine_trapezoid() {
        let ip = fig3(1.5);
        let prof = PulseProfile::gaussian(REFERENCE_SIGMA);
        let ang = angles();
        let got = delta_r(0.0, 0.0, &prof, &ip, &ang, 1.0).unwrap();
        let n = 1_000_000;
        let (lo, hi) = (-8.0 * prof.sigma, 8.0 * prof.sigma);
        let h = (hi - lo) / n as f64;
        let f = |z: f64| -ip.c6 / (z * z + ip.a * ip.a).powi(3) * prof.density(z);
        let mut sum = 0.5 * (f(lo) + f(hi));
        for k in 1..n {
            sum += f(lo + h * k as f64);
        }
        let oracle = ang.sin2_theta() * sum * h;
        assert!(((got - oracle) / oracle).abs() < 1e-8, "{got} vs {oracle}");
        let in_gamma = got.abs() / gamma();
        assert!(in_gamma > 1e-3 && in_gamma < 1e-1, "{in_gamma}");
    }

    #[test]
    fn uniform_pass_matches_time_integral() {
        let ip = fig3(1.5);
        let ang = angles();
        let v = 20.0;
        let closed = uniform_pass_phase(&ip, &ang, v).unwrap();
        let t_max = 1e3 * ip.a / v;
        let breaks = [-t_max, -ip.a / v, 0.0, ip.a / v, t_max];
        let integral = quad1d_breaks(
            |t| Complex64::new(effective_potential(v * t, &ip).unwrap(), 0.0),
            &breaks,
            QuadOptions::relative(1e-12),
        )
        .unwrap()
        .value
        .re;
        let numeric = -ang.c3_pow4() * integral;
        assert!(((numeric - closed) / closed).abs() < 1e-6);
    }

    #[test]
    fn reference_pass_phase_and_ninefold_lift() {
        let ip = fig3(1.5);
        let phi = uniform_pass_phase(&ip, &angles(), 20.0).unwrap();
        assert!((0.3..=0.4).contains(&phi), "{phi}");
        let lifted = uniform_pass_phase(&ip.with_c6_scaled(9.0), &angles(), 20.0).unwrap();
        assert!(((lifted - PI) / PI).abs() < 0.15, "{lifted}");
        assert_eq!(
            uniform_pass_phase(&InteractionParams { c6: 0.0, ..ip }, &angles(), 20.0).unwrap(),
            0.0
        );
    }

    #[test]
    fn shift_ordering_in_a() {
        let prof = PulseProfile::gaussian(REFERENCE_SIGMA);
        let mags: Vec<f64> = [0.58, 1.0, 1.5, 3.0]
            .iter()
            .map(|&k| delta_r(0.0, 0.0, &prof, &fig3(k), &angles(), 1.0).unwrap().abs())
            .collect();
        assert!(mags.windows(2).all(|w| w[1] < w[0]), "{mags:?}");
    }

    #[test]
    fn density_normalised() {
        let prof = PulseProfile {
            sigma: 2.0,
            center: 1.0,
            norm: 0.7,
        };
        let total = quad1d_real(|z| prof.density(z), -30.0, 30.0, QuadOptions::absolute(1e-14)).unwrap();
        assert!((total - 0.7).abs() < 1e-12);
        let amp2 = quad1d_real(
            |z| PulseProfile::amplitude(2.0, z).powi(2),
            -30.0,
            30.0,
            QuadOptions::absolute(1e-14),
        )
        .unwrap();
        assert!((amp2 - 1.0).abs() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn even_in_separation(sep in 0.0..5.0f64, a in 0.3..3.0f64) {
                let prof = PulseProfile::gaussian(REFERENCE_SIGMA);
                let ip = fig3(a);
                let s = sep * REFERENCE_SIGMA;
                let l = delta_r(-s, 0.0, &prof, &ip, &angles(), 1.0).unwrap();
                let r = delta_r(s, 0.0, &prof, &ip, &angles(), 1.0).unwrap();
                prop_assert!((l - r).abs() <= 1e-9 * l.abs().max(1e-300));
            }

            #[test]
            fn decreasing_in_a(sep in -4.0..4.0f64, a in 0.3..3.0f64, da in 0.01..1.0f64) {
                let prof = PulseProfile::gaussian(REFERENCE_SIGMA);
                let s = sep * REFERENCE_SIGMA;
                let near = delta_r(s, 0.0, &prof, &fig3(a), &angles(), 1.0).unwrap().abs();
                let far = delta_r(s, 0.0, &prof, &fig3(a + da), &angles(), 1.0).unwrap().abs();
                prop_assert!(far < near);
            }

            #[test]
            fn linear_in_t_and_c6(t in 0.01..1.0f64, k in 0.1..10.0f64, sep in -3.0..3.0f64) {
                let prof = PulseProfile::gaussian(REFERENCE_SIGMA);
                let ip = fig3(1.0);
                let s = sep * REFERENCE_SIGMA;
                let base = delta_r(s, 0.0, &prof, &ip, &angles(), 1.0).unwrap();
                let scaled_t = delta_r(s, 0.0, &prof, &ip, &angles(), t).unwrap();
                let scaled_c = delta_r(s, 0.0, &prof, &ip.with_c6_scaled(k), &angles(), 1.0).unwrap();
                prop_assert!((scaled_t - t * base).abs() <= 1e-12 * base.abs());
                prop_assert!((scaled_c - k * base).abs() <= 1e-9 * (k * base).abs());
            }

            #[test]
            fn pass_phase_scaling(v in 0.1..100.0f64, a in 0.3..3.0f64, kv in 0.1..10.0f64, ka in 0.5..2.0f64) {
                let ang = angles();
                let ip = fig3(a);
                let base = uniform_pass_phase(&ip, &ang, v).unwrap();
                let fv = uniform_pass_phase(&ip, &ang, kv * v).unwrap();
                let fa = uniform_pass_phase(&InteractionParams { a: ka * ip.a, ..ip }, &ang, v).unwrap();
                prop_assert!((fv * kv / base - 1.0).abs() < 1e-13);
                prop_assert!((fa * ka.powi(5) / base - 1.0).abs() < 1e-13);
            }
        }
    }
}
