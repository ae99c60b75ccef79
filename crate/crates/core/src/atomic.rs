//! Linear optical response of the three-level ladder under EIT.
//!
//! The probe is weak, so ρ_gg ≈ 1 and ρ_ee, ρ_re vanish; the two coherences
//! `(ρ_eg, ρ_rg)` then obey a driven 2×2 linear system. The probe amplitude
//! and dipole element are scaled out, which makes the susceptibility
//! drive-independent: `χ = −2·chi_amp·ρ̃_eg`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{self, central_diff, rk4_step, CVec2, Complex2x2, NumericsError, TimeGrid};
use crate::units::{mhz_to_rad_per_s, RB87_D1_WAVELENGTH, SPEED_OF_LIGHT};

/// Largest integration step, in units of 1/γ, considered accurate.
pub const MAX_STEP_GAMMA: f64 = 0.02;

/// Finite-difference step for ∂n/∂ω_p, in units of γ.
pub const FD_STEP_GAMMA: f64 = 1e-4;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResponseError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("steady-state susceptibility has a pole at these parameters")]
    Pole,
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Atomic and optical constants, all in SI (rad/s, m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Decay rate of |e⟩ (γ = γ_eg).
    pub gamma: f64,
    /// Ground–Rydberg dephasing.
    pub gamma_rg: f64,
    /// Pump Rabi frequency Ω_c.
    pub omega_c: f64,
    /// Probe detuning Δ1 = ω_eg − ω_p.
    pub delta1: f64,
    /// Pump detuning Δ2 = ω_re − ω_c.
    pub delta2: f64,
    /// Collective coupling squared g²N, rad²/s².
    pub g2n: f64,
    /// Susceptibility amplitude N μ²/(ε0 ħ), rad/s.
    pub chi_amp: f64,
    /// Probe wavelength, m.
    pub lambda_p: f64,
}

impl SystemParams {
    /// The ⁸⁷Rb ladder used for the propagation figures: γ = 2π·5.75 MHz,
    /// Ω_c = 2γ, Δ1 = −Δ2 = 2γ, Ng²/Ω_c² = 0.75·10⁷. `chi_amp` is a rough
    /// starting value; run [`calibrate`] before use.
    pub fn rb87_reference() -> Self {
        let gamma = mhz_to_rad_per_s(5.75);
        let omega_c = 2.0 * gamma;
        Self {
            gamma,
            gamma_rg: 1e-6 * gamma,
            omega_c,
            delta1: 2.0 * gamma,
            delta2: -2.0 * gamma,
            g2n: 0.75e7 * omega_c * omega_c,
            chi_amp: gamma,
            lambda_p: RB87_D1_WAVELENGTH,
        }
    }

    pub fn k_p(&self) -> f64 {
        2.0 * PI / self.lambda_p
    }

    pub fn omega_p(&self) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / self.lambda_p
    }

    /// Two-photon detuning including the interaction shift.
    pub fn two_photon_detuning(&self, delta1: f64, delta_r: f64) -> f64 {
        delta1 + self.delta2 + delta_r
    }

    pub fn is_eit_configured(&self) -> bool {
        (self.delta1 + self.delta2).abs() <= 1e-12 * self.gamma
    }

    pub fn validate(&self) -> Result<(), ResponseError> {
        let all = [
            self.gamma,
            self.gamma_rg,
            self.omega_c,
            self.delta1,
            self.delta2,
            self.g2n,
            self.chi_amp,
            self.lambda_p,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(ResponseError::InvalidParams("non-finite field".into()));
        }
        let checks = [
            (self.gamma > 0.0, "gamma must be positive"),
            (self.gamma_rg >= 0.0, "gamma_rg must be non-negative"),
            (self.omega_c >= 0.0, "omega_c must be non-negative"),
            (self.g2n >= 0.0, "g2n must be non-negative"),
            (self.chi_amp >= 0.0, "chi_amp must be non-negative"),
            (self.lambda_p > 0.0, "lambda_p must be positive"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(ResponseError::InvalidParams(msg.into()));
            }
        }
        Ok(())
    }
}

/// Polariton mixing angles and bright-state spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixingAngles {
    pub theta: f64,
    pub phi_mix: f64,
    pub omega_plus: f64,
    pub omega_minus: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl MixingAngles {
    /// sin²θ, the spin-wave weight of the dark polariton.
    pub fn sin2_theta(&self) -> f64 {
        self.c3 * self.c3
    }

    /// `c3⁴` as it multiplies the two-body phase.
    pub fn c3_pow4(&self) -> f64 {
        self.sin2_theta() * self.sin2_theta()
    }
}

pub fn mixing_angles(p: &SystemParams) -> MixingAngles {
    let g = p.g2n.sqrt();
    let theta = g.atan2(p.omega_c);
    let root = (p.g2n + p.omega_c * p.omega_c).sqrt();
    // atan2 keeps 2φ in (0, π) so φ lands in (0, π/2)
    let phi_mix = 0.5 * root.atan2(p.delta1);
    let big = (p.delta1 * p.delta1 + p.g2n + p.omega_c * p.omega_c).sqrt();
    let (s_t, c_t) = theta.sin_cos();
    let (s_p, c_p) = phi_mix.sin_cos();
    MixingAngles {
        theta,
        phi_mix,
        omega_plus: 0.5 * (p.delta1 + big),
        omega_minus: 0.5 * (p.delta1 - big),
        c1: c_t * s_p,
        c2: c_t * c_p,
        c3: s_t,
    }
}

/// Scaled coherences `(ρ_eg, ρ_rg) / (μ_eg E)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AtomicCoherence(pub CVec2);

impl AtomicCoherence {
    pub fn rho_eg(&self) -> Complex64 {
        self.0 .0[0]
    }

    pub fn rho_rg(&self) -> Complex64 {
        self.0 .0[1]
    }

    pub fn chi(&self, p: &SystemParams) -> Complex64 {
        self.rho_eg() * (-2.0 * p.chi_amp)
    }

    /// The fixed point `M x + s = 0`.
    pub fn steady(p: &SystemParams, delta1: f64, delta_r: f64) -> Result<Self, ResponseError> {
        drift_matrix(p, delta1, delta_r)
            .solve(probe_source().scale_re(-1.0))
            .map(AtomicCoherence)
            .map_err(|_| ResponseError::Pole)
    }
}

/// The generator `M(t)` of the coherence equations.
pub fn drift_matrix(p: &SystemParams, delta1: f64, delta_r: f64) -> Complex2x2 {
    let half_rabi = -I * (0.5 * p.omega_c);
    Complex2x2::new(
        -(Complex64::new(0.5 * p.gamma, delta1)),
        half_rabi,
        half_rabi,
        -(Complex64::new(0.5 * p.gamma_rg, p.two_photon_detuning(delta1, delta_r))),
    )
}

/// Probe drive `(−i/2, 0)` in scaled units.
pub fn probe_source() -> CVec2 {
    CVec2::new(-0.5 * I, Complex64::new(0.0, 0.0))
}

/// Weak-drive steady susceptibility at the configured Δ1.
pub fn chi_steady(p: &SystemParams, delta_r: f64) -> Result<Complex64, ResponseError> {
    chi_steady_at(p, p.delta1, delta_r)
}

/// Steady susceptibility with the probe detuning given explicitly
/// (Δ2 held fixed).
///
/// Written as `i A L / (E L + Ω²/4)` with `E = γ/2 + iΔ1` and
/// `L = γ_rg/2 + iδ`, which is exactly zero on two-photon resonance
/// instead of an ∞/∞ form.
pub fn chi_steady_at(p: &SystemParams, delta1: f64, delta_r: f64) -> Result<Complex64, ResponseError> {
    let e = Complex64::new(0.5 * p.gamma, delta1);
    let l = Complex64::new(0.5 * p.gamma_rg, p.two_photon_detuning(delta1, delta_r));
    let den = e * l + 0.25 * p.omega_c * p.omega_c;
    if den.norm() == 0.0 || !den.is_finite() {
        return Err(ResponseError::Pole);
    }
    Ok(I * p.chi_amp * l / den)
}

/// Two-level (pump off) susceptibility `i A / (γ/2 + iΔ1)`.
pub fn chi_two_level(p: &SystemParams, delta1: f64) -> Complex64 {
    I * p.chi_amp / Complex64::new(0.5 * p.gamma, delta1)
}

fn substeps(dt: f64, gamma: f64) -> usize {
    ((dt * gamma / MAX_STEP_GAMMA) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

/// Integrates one coherence history forward in time.
///
/// `Δ_R` is taken piecewise linear between successive `advance` calls and
/// the RK4 step is kept at or below [`MAX_STEP_GAMMA`]/γ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceTracker {
    pub delta1: f64,
    pub time: f64,
    pub delta_r: f64,
    pub state: AtomicCoherence,
}

impl CoherenceTracker {
    /// Coherences start at zero: the pulse has just entered.
    pub fn fresh(delta1: f64, time: f64, delta_r: f64) -> Self {
        Self {
            delta1,
            time,
            delta_r,
            state: AtomicCoherence::default(),
        }
    }

    /// Coherences start adiabatically relaxed to the initial `Δ_R`.
    pub fn relaxed(p: &SystemParams, delta1: f64, time: f64, delta_r: f64) -> Result<Self, ResponseError> {
        Ok(Self {
            delta1,
            time,
            delta_r,
            state: AtomicCoherence::steady(p, delta1, delta_r)?,
        })
    }

    pub fn advance(&mut self, p: &SystemParams, t_new: f64, delta_r_new: f64) {
        let dt = t_new - self.time;
        if dt <= 0.0 {
            self.delta_r = delta_r_new;
            return;
        }
        let n_sub = substeps(dt, p.gamma);
        let h = dt / n_sub as f64;
        let source = probe_source();
        let (r0, r1) = (self.delta_r, delta_r_new);
        let at = |frac: f64| drift_matrix(p, self.delta1, r0 + (r1 - r0) * frac);
        let mut x = self.state.0;
        let mut m_start = at(0.0);
        for k in 0..n_sub {
            let f0 = k as f64 / n_sub as f64;
            let f1 = (k + 1) as f64 / n_sub as f64;
            let m_mid = at(0.5 * (f0 + f1));
            let m_end = at(f1);
            x = rk4_step(&m_start, &m_mid, &m_end, source, x, h);
            m_start = m_end;
        }
        self.state = AtomicCoherence(x);
        self.time = t_new;
        self.delta_r = delta_r_new;
    }

    pub fn chi(&self, p: &SystemParams) -> Complex64 {
        self.state.chi(p)
    }
}

/// Susceptibility samples along a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiSeries {
    pub times: Vec<f64>,
    pub chi: Vec<Complex64>,
    /// Set when the caller's grid step exceeded [`MAX_STEP_GAMMA`]/γ; the
    /// values were still computed on internal sub-steps.
    pub accuracy_warning: bool,
}

/// Time-dependent susceptibility for a Δ_R history, coherences zero at the
/// first grid point.
pub fn chi_time_dependent<H>(p: &SystemParams, delta_r_history: H, grid: &TimeGrid) -> Result<ChiSeries, ResponseError>
where
    H: Fn(f64) -> f64,
{
    chi_time_dependent_at(p, p.delta1, delta_r_history, grid)
}

/// As [`chi_time_dependent`] with an explicit probe detuning.
pub fn chi_time_dependent_at<H>(
    p: &SystemParams,
    delta1: f64,
    delta_r_history: H,
    grid: &TimeGrid,
) -> Result<ChiSeries, ResponseError>
where
    H: Fn(f64) -> f64,
{
    p.validate()?;
    let accuracy_warning = grid.step() * p.gamma > MAX_STEP_GAMMA * (1.0 + 1e-12);
    if accuracy_warning {
        log::warn!(
            "time grid step {:.3}/γ is coarser than {MAX_STEP_GAMMA}/γ; sub-stepping",
            grid.step() * p.gamma
        );
    }
    let n_sub = substeps(grid.step(), p.gamma);
    let fine = TimeGrid::uniform(grid.start(), grid.end(), grid.n_steps() * n_sub)?;
    let xs = numerics::solve_driven_ode(|t| drift_matrix(p, delta1, delta_r_history(t)), probe_source(), &fine)?;
    let chi = xs.iter().step_by(n_sub).map(|x| AtomicCoherence(*x).chi(p)).collect();
    Ok(ChiSeries {
        times: grid.samples(),
        chi,
        accuracy_warning,
    })
}

/// Refractive index, group velocity and absorption derived from χ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OpticalResponse {
    pub chi: Complex64Ser,
    pub n_minus_1: f64,
    pub im_chi: f64,
    pub n_g: f64,
    pub v_g: f64,
    /// Intensity absorption per unit length, k_p·Im χ.
    pub alpha: f64,
    /// `n_g ≤ 1`: anomalous dispersion.
    pub superluminal: bool,
}

/// Serializable mirror of a complex number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Complex64Ser {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for Complex64Ser {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl OpticalResponse {
    /// From χ sampled at Δ1 − h, Δ1, Δ1 + h. Since Δ1 = ω_eg − ω_p,
    /// `∂/∂ω_p = −∂/∂Δ1`.
    pub fn from_samples(p: &SystemParams, chi_minus: Complex64, chi: Complex64, chi_plus: Complex64, h: f64) -> Self {
        let n_minus_1 = 0.5 * chi.re;
        let dn_ddelta1 = 0.5 * (chi_plus.re - chi_minus.re) / (2.0 * h);
        let n_g = 1.0 + n_minus_1 - p.omega_p() * dn_ddelta1;
        Self {
            chi: chi.into(),
            n_minus_1,
            im_chi: chi.im,
            n_g,
            v_g: SPEED_OF_LIGHT / n_g,
            alpha: p.k_p() * chi.im,
            superluminal: n_g <= 1.0,
        }
    }

    pub fn chi(&self) -> Complex64 {
        Complex64::new(self.chi.re, self.chi.im)
    }
}

/// Response from a susceptibility that can be evaluated at any probe detuning.
pub fn response_from_chi<F>(p: &SystemParams, chi_at: F) -> OpticalResponse
where
    F: Fn(f64) -> Complex64,
{
    let h = FD_STEP_GAMMA * p.gamma;
    let chi = chi_at(p.delta1);
    let dn = 0.5 * central_diff(|d1| chi_at(d1).re, p.delta1, h);
    let n_minus_1 = 0.5 * chi.re;
    let n_g = 1.0 + n_minus_1 - p.omega_p() * dn;
    OpticalResponse {
        chi: chi.into(),
        n_minus_1,
        im_chi: chi.im,
        n_g,
        v_g: SPEED_OF_LIGHT / n_g,
        alpha: p.k_p() * chi.im,
        superluminal: n_g <= 1.0,
    }
}

/// Steady-state response at the configured detunings.
pub fn steady_response(p: &SystemParams, delta_r: f64) -> Result<OpticalResponse, ResponseError> {
    let h = FD_STEP_GAMMA * p.gamma;
    // surface poles before the closure swallows them
    for d in [p.delta1 - h, p.delta1, p.delta1 + h] {
        chi_steady_at(p, d, delta_r)?;
    }
    Ok(response_from_chi(p, |d1| {
        chi_steady_at(p, d1, delta_r).expect("checked above")
    }))
}

/// Adjusts `chi_amp` so that the EIT-point group velocity equals `target_vg`.
///
/// `n_g − 1` is linear in `chi_amp`, so the root of
/// `v_g(chi_amp) − target` is found from one unit-amplitude evaluation and
/// then checked.
pub fn calibrate(p: &SystemParams, target_vg: f64) -> Result<SystemParams, ResponseError> {
    p.validate()?;
    if !p.is_eit_configured() {
        return Err(ResponseError::Calibration(
            "calibration needs Δ1 + Δ2 = 0 (EIT configuration)".into(),
        ));
    }
    if !(target_vg > 0.0 && target_vg <= SPEED_OF_LIGHT) {
        return Err(ResponseError::Calibration(format!(
            "target group velocity {target_vg} m/s outside (0, c]"
        )));
    }
    let unit = SystemParams { chi_amp: 1.0, ..*p };
    let slope = steady_response(&unit, 0.0)?.n_g - 1.0;
    if slope.is_nan() || slope <= 0.0 {
        return Err(ResponseError::Calibration(
            "EIT point has no normal dispersion to scale".into(),
        ));
    }
    let chi_amp = (SPEED_OF_LIGHT / target_vg - 1.0) / slope;
    let out = SystemParams { chi_amp, ..*p };
    let got = steady_response(&out, 0.0)?.v_g;
    if ((got - target_vg) / target_vg).abs() > 1e-3 {
        return Err(ResponseError::Calibration(format!(
            "calibrated v_g {got} m/s misses target {target_vg} m/s"
        )));
    }
    Ok(out)
}
