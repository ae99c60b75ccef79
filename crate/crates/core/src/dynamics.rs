//! Self-consistent propagation of two interacting polariton pulses.
//!
//! The relative coordinate (counter-propagation) or the travelled distance
//! (co-propagation) is cut into uniform steps. At each step the mean-field
//! shift is computed from the previous step's pulse size and transmission,
//! the coherence histories are advanced, and transmission, group velocity
//! and pulse size are updated.
//!
//! The susceptibility is evaluated at nine Gauss–Legendre points spanning
//! ±3σ of the probe pulse plus one point at +σ. With [`ChiModel::History`]
//! each point carries coherence histories at Δ1 − h, Δ1, Δ1 + h so that the
//! dispersion slope comes from the time-dependent χ.

use serde::Serialize;
use thiserror::Error;

use crate::atomic::{
    mixing_angles, steady_response, CoherenceTracker, OpticalResponse, ResponseError, SystemParams, FD_STEP_GAMMA,
};
use crate::numerics::gauss_legendre;
use crate::potential::{delta_r, InteractionParams, PotentialError, PulseProfile};

/// Transmission below which the pulses are considered destroyed.
pub const EXTINCTION_THRESHOLD: f64 = 1e-6;

/// Default plateau threshold on `|dv_g/dΔ_R|·γ/v_g`.
pub const PLATEAU_THRESHOLD: f64 = 0.5;

const PROFILE_NODES: usize = 9;
const PROFILE_SPAN: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    Counter,
    Co,
}

/// How the mean-field shift enters the optical response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Feedback {
    SelfConsistent,
    /// Δ_R is still computed and recorded but the medium never sees it.
    Disabled,
    /// The medium sees this fixed shift (rad/s) at every point.
    Constant(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PropagationOptions {
    /// Step size as a fraction of the initial σ.
    pub step_frac: f64,
    /// Counter: Z runs over [−L, L]. Co: distance travelled, 0 → L.
    pub length: f64,
    pub feedback: Feedback,
    /// When false Im χ is ignored and T stays 1.
    pub absorption: bool,
    pub chi_model: ChiModel,
}

/// Which susceptibility the medium responds with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ChiModel {
    /// Steady-state χ at the instantaneous Δ_R.
    #[default]
    Adiabatic,
    /// χ from the integrated coherence histories.
    History,
}

impl PropagationOptions {
    pub fn new(sigma0: f64) -> Self {
        Self {
            step_frac: 0.005,
            length: 8.0 * sigma0,
            feedback: Feedback::SelfConsistent,
            absorption: true,
            chi_model: ChiModel::Adiabatic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PulsePairState {
    /// Separation of the pulse centres (counter) or distance travelled (co).
    pub z: f64,
    pub t: f64,
    pub sigma: f64,
    pub transmission: f64,
    pub delta_r_center: f64,
    pub delta_r_offset: f64,
    pub vg_center: f64,
    pub vg_offset: f64,
    /// Profile-averaged group velocity.
    pub vg_mean: f64,
    pub alpha_center: f64,
    pub delta_v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub geometry: Geometry,
    pub sigma0: f64,
    pub step_frac: f64,
    pub length: f64,
    pub n_steps: usize,
    pub states: Vec<PulsePairState>,
}

impl Trajectory {
    pub fn last(&self) -> &PulsePairState {
        self.states.last().expect("trajectory has an initial state")
    }

    pub fn is_complete(&self) -> bool {
        self.states.len() == self.n_steps + 1
    }

    pub fn total_time(&self) -> f64 {
        self.last().t - self.states[0].t
    }

    pub fn peak_delta_r(&self) -> f64 {
        self.states.iter().map(|s| s.delta_r_center.abs()).fold(0.0, f64::max)
    }

    /// Rescales time so that every group velocity is multiplied by `k`.
    pub fn with_speed_scaled(&self, k: f64) -> Trajectory {
        let mut out = self.clone();
        for s in &mut out.states {
            s.t /= k;
            s.vg_center *= k;
            s.vg_offset *= k;
            s.vg_mean *= k;
        }
        out
    }

    /// Linear interpolation of a state field at position `z`.
    pub fn interpolate(&self, z: f64, field: impl Fn(&PulsePairState) -> f64) -> Option<f64> {
        let s = &self.states;
        let k = s.windows(2).position(|w| (w[0].z - z) * (w[1].z - z) <= 0.0)?;
        let (a, b) = (&s[k], &s[k + 1]);
        if a.z == b.z {
            return Some(field(a));
        }
        let f = (z - a.z) / (b.z - a.z);
        Some(field(a) + f * (field(b) - field(a)))
    }

    /// Finds a velocity platform: a stretch at least `min_width` long over
    /// which the centre group velocity stays within `flat_tol` (relative) of
    /// its maximum, where that maximum exceeds the entry velocity by at least
    /// `min_rise` (relative). Returns the `z` limits of the widest stretch.
    pub fn velocity_plateau(&self, min_rise: f64, flat_tol: f64, min_width: f64) -> Option<(f64, f64)> {
        let v0 = self.states[0].vg_center;
        let peak = self.states.iter().map(|s| s.vg_center).fold(f64::MIN, f64::max);
        if peak < v0 * (1.0 + min_rise) {
            return None;
        }
        let floor = peak * (1.0 - flat_tol);
        let mut best: Option<(f64, f64)> = None;
        let mut run_start: Option<f64> = None;
        for (k, s) in self.states.iter().enumerate() {
            let inside = s.vg_center >= floor;
            if inside && run_start.is_none() {
                run_start = Some(s.z);
            }
            let closes = !inside || k + 1 == self.states.len();
            if let (true, Some(z0)) = (closes, run_start) {
                let z1 = if inside { s.z } else { self.states[k - 1].z };
                if best.is_none_or(|(a, b)| (z1 - z0).abs() > (b - a).abs()) {
                    best = Some((z0, z1));
                }
                run_start = None;
            }
        }
        best.filter(|(a, b)| (b - a).abs() >= min_width)
    }
}

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("anomalous dispersion (n_g ≤ 1) at step {step}, z = {z:e} m; propagation aborted")]
    Superluminal {
        step: usize,
        z: f64,
        partial: Box<Trajectory>,
    },
    #[error("transmission fell below {EXTINCTION_THRESHOLD:e} at step {step}, z = {z:e} m")]
    Extinction {
        step: usize,
        z: f64,
        partial: Box<Trajectory>,
    },
    #[error("invalid propagation input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Response(#[from] ResponseError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
}

impl DynamicsError {
    pub fn partial(&self) -> Option<&Trajectory> {
        match self {
            DynamicsError::Superluminal { partial, .. } | DynamicsError::Extinction { partial, .. } => Some(partial),
            _ => None,
        }
    }

    pub fn is_physics_abort(&self) -> bool {
        self.partial().is_some()
    }
}

/// `|vg_offset − vg_center| / vg_center`.
pub fn dispersion_ratio(state: &PulsePairState) -> f64 {
    ((state.vg_offset - state.vg_center) / state.vg_center).abs()
}

/// Probe points within the pulse, as multiples of σ, and their Gauss weights
/// (normalised to sum to one over the interval).
fn profile_nodes() -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(PROFILE_NODES);
    let nodes = x.iter().map(|xi| PROFILE_SPAN * xi).collect();
    let weights = w.iter().map(|wi| 0.5 * wi).collect();
    (nodes, weights)
}

struct Medium<'a> {
    p: &'a SystemParams,
    ip: &'a InteractionParams,
    opts: &'a PropagationOptions,
    sin2: crate::atomic::MixingAngles,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// `[node][minus, centre, plus]`; the last node is the +σ probe point.
    trackers: Vec<[CoherenceTracker; 3]>,
    h: f64,
}

struct Snapshot {
    delta_r: Vec<f64>,
    responses: Vec<OpticalResponse>,
}

impl<'a> Medium<'a> {
    fn new(p: &'a SystemParams, ip: &'a InteractionParams, opts: &'a PropagationOptions) -> Self {
        let (nodes, weights) = profile_nodes();
        Self {
            p,
            ip,
            opts,
            sin2: mixing_angles(p),
            nodes,
            weights,
            trackers: Vec::new(),
            h: FD_STEP_GAMMA * p.gamma,
        }
    }

    /// Offsets (m) of every probe point for a pulse of size `sigma`.
    fn offsets(&self, sigma: f64) -> Vec<f64> {
        self.nodes
            .iter()
            .map(|x| x * sigma)
            .chain(std::iter::once(sigma))
            .collect()
    }

    fn shifts(&self, sep: f64, sigma: f64, transmission: f64) -> Result<Vec<f64>, DynamicsError> {
        let other = PulseProfile::gaussian(sigma);
        self.offsets(sigma)
            .into_iter()
            .map(|off| Ok(delta_r(sep, off, &other, self.ip, &self.sin2, transmission)?))
            .collect()
    }

    fn seen(&self, dr: f64) -> f64 {
        match self.opts.feedback {
            Feedback::SelfConsistent => dr,
            Feedback::Disabled => 0.0,
            Feedback::Constant(x) => x,
        }
    }

    fn start(&mut self, t: f64, shifts: &[f64]) -> Result<Vec<OpticalResponse>, DynamicsError> {
        let p = self.p;
        let d1 = p.delta1;
        self.trackers = shifts
            .iter()
            .map(|&dr| {
                let dr = self.seen(dr);
                Ok([
                    CoherenceTracker::relaxed(p, d1 - self.h, t, dr)?,
                    CoherenceTracker::relaxed(p, d1, t, dr)?,
                    CoherenceTracker::relaxed(p, d1 + self.h, t, dr)?,
                ])
            })
            .collect::<Result<_, ResponseError>>()?;
        self.responses(shifts)
    }

    fn advance(&mut self, t: f64, shifts: &[f64]) -> Result<Vec<OpticalResponse>, DynamicsError> {
        if self.opts.chi_model == ChiModel::History {
            let p = self.p;
            let seen: Vec<f64> = shifts.iter().map(|&dr| self.seen(dr)).collect();
            for (trio, dr) in self.trackers.iter_mut().zip(seen) {
                for tr in trio.iter_mut() {
                    tr.advance(p, t, dr);
                }
            }
        }
        self.responses(shifts)
    }

    fn responses(&self, shifts: &[f64]) -> Result<Vec<OpticalResponse>, DynamicsError> {
        let p = self.p;
        let out = if self.opts.chi_model == ChiModel::Adiabatic {
            shifts
                .iter()
                .map(|&dr| steady_response(p, self.seen(dr)))
                .collect::<Result<Vec<_>, _>>()?
        } else {
            self.trackers
                .iter()
                .map(|[m, c, pl]| OpticalResponse::from_samples(p, m.chi(p), c.chi(p), pl.chi(p), self.h))
                .collect()
        };
        Ok(out)
    }

    fn snapshot(&self, shifts: Vec<f64>, responses: Vec<OpticalResponse>) -> Snapshot {
        Snapshot {
            delta_r: shifts,
            responses,
        }
    }

    /// `∫ v_g |f|² / ∫ |f|²` over the Gauss points.
    fn mean_vg(&self, responses: &[OpticalResponse]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for ((x, w), r) in self.nodes.iter().zip(&self.weights).zip(responses) {
            let dens = (-x * x).exp();
            num += w * dens * r.v_g;
            den += w * dens;
        }
        num / den
    }

    /// Transient gain (Im χ < 0 while the coherences lag a changing Δ_R)
    /// is not credited back to the pulse.
    fn alpha(&self, r: &OpticalResponse) -> f64 {
        if self.opts.absorption {
            r.alpha.max(0.0)
        } else {
            0.0
        }
    }
}

fn validate(
    p: &SystemParams,
    ip: &InteractionParams,
    sigma0: f64,
    opts: &PropagationOptions,
) -> Result<(), DynamicsError> {
    p.validate()?;
    ip.validate()?;
    if !(sigma0.is_finite() && sigma0 > 0.0) {
        return Err(DynamicsError::InvalidInput(format!(
            "sigma0 = {sigma0} must be positive"
        )));
    }
    if !(opts.step_frac.is_finite() && opts.step_frac > 0.0 && opts.step_frac <= 1.0) {
        return Err(DynamicsError::InvalidInput(format!(
            "step_frac = {} outside (0, 1]",
            opts.step_frac
        )));
    }
    if !(opts.length.is_finite() && opts.length > 0.0) {
        return Err(DynamicsError::InvalidInput(format!(
            "length = {} must be positive",
            opts.length
        )));
    }
    if let Feedback::Constant(x) = opts.feedback {
        if !x.is_finite() {
            return Err(DynamicsError::InvalidInput(
                "constant feedback shift must be finite".into(),
            ));
        }
    }
    Ok(())
}

fn state_from(medium: &Medium, snap: &Snapshot, z: f64, t: f64, sigma: f64, transmission: f64) -> PulsePairState {
    let centre = &snap.responses[PROFILE_NODES / 2];
    let offset = &snap.responses[PROFILE_NODES];
    let mut s = PulsePairState {
        z,
        t,
        sigma,
        transmission,
        delta_r_center: snap.delta_r[PROFILE_NODES / 2],
        delta_r_offset: snap.delta_r[PROFILE_NODES],
        vg_center: centre.v_g,
        vg_offset: offset.v_g,
        vg_mean: medium.mean_vg(&snap.responses[..PROFILE_NODES]),
        alpha_center: medium.alpha(centre),
        delta_v: 0.0,
    };
    s.delta_v = dispersion_ratio(&s);
    s
}

fn check(snap: &Snapshot, step: usize, z: f64, traj: &Trajectory) -> Result<(), DynamicsError> {
    if snap.responses.iter().any(|r| r.superluminal || !r.n_g.is_finite()) {
        return Err(DynamicsError::Superluminal {
            step,
            z,
            partial: Box::new(traj.clone()),
        });
    }
    Ok(())
}

fn run(
    geometry: Geometry,
    p: &SystemParams,
    ip: &InteractionParams,
    sigma0: f64,
    opts: &PropagationOptions,
) -> Result<Trajectory, DynamicsError> {
    validate(p, ip, sigma0, opts)?;
    let span = match geometry {
        Geometry::Counter => 2.0 * opts.length,
        Geometry::Co => opts.length,
    };
    let n_steps = (span / (opts.step_frac * sigma0) - 1e-9).ceil().max(1.0) as usize;
    let dz = span / n_steps as f64;
    let z_at = |i: usize| match geometry {
        Geometry::Counter => -opts.length + dz * i as f64,
        Geometry::Co => dz * i as f64,
    };
    // separation of the pulse centres as seen by the potential
    let sep_at = |i: usize| match geometry {
        Geometry::Counter => z_at(i),
        Geometry::Co => 0.0,
    };
    // distance each pulse covers per step, and the closing speed factor
    let (path, closing) = match geometry {
        Geometry::Counter => (0.5 * dz, 2.0),
        Geometry::Co => (dz, 1.0),
    };

    let mut medium = Medium::new(p, ip, opts);
    let mut traj = Trajectory {
        geometry,
        sigma0,
        step_frac: opts.step_frac,
        length: opts.length,
        n_steps,
        states: Vec::with_capacity(n_steps + 1),
    };

    let shifts = medium.shifts(sep_at(0), sigma0, 1.0)?;
    let responses = medium.start(0.0, &shifts)?;
    let snap = medium.snapshot(shifts, responses);
    check(&snap, 0, z_at(0), &traj)?;
    let first = state_from(&medium, &snap, z_at(0), 0.0, sigma0, 1.0);
    let vg_ref = first.vg_mean;
    traj.states.push(first);

    for i in 1..=n_steps {
        let prev = *traj.last();
        let t = prev.t + dz / (closing * prev.vg_center);
        let shifts = medium.shifts(sep_at(i), prev.sigma, prev.transmission)?;
        let responses = medium.advance(t, &shifts)?;
        let snap = medium.snapshot(shifts, responses);
        check(&snap, i, z_at(i), &traj)?;
        let alpha = medium.alpha(&snap.responses[PROFILE_NODES / 2]);
        let transmission = prev.transmission * (-0.5 * (prev.alpha_center + alpha) * path).exp();
        let mean = medium.mean_vg(&snap.responses[..PROFILE_NODES]);
        let sigma = sigma0 * mean / vg_ref;
        let state = state_from(&medium, &snap, z_at(i), t, sigma, transmission);
        traj.states.push(state);
        if transmission < EXTINCTION_THRESHOLD {
            return Err(DynamicsError::Extinction {
                step: i,
                z: z_at(i),
                partial: Box::new(traj),
            });
        }
    }
    Ok(traj)
}

/// Counter-propagation through relative separation Z ∈ [−L, L].
pub fn simulate_counter(
    p: &SystemParams,
    ip: &InteractionParams,
    sigma0: f64,
    opts: &PropagationOptions,
) -> Result<Trajectory, DynamicsError> {
    run(Geometry::Counter, p, ip, sigma0, opts)
}

/// Co-propagation side by side over a medium of length L.
pub fn simulate_co(
    p: &SystemParams,
    ip: &InteractionParams,
    sigma0: f64,
    opts: &PropagationOptions,
) -> Result<Trajectory, DynamicsError> {
    run(Geometry::Co, p, ip, sigma0, opts)
}

/// `|dv_g/dΔ_R| · γ / v_g` from the steady response; small values mean the
/// medium no longer responds to further shifts.
pub fn blockade_sensitivity(p: &SystemParams, delta_r: f64) -> Option<f64> {
    let h = 1e-3 * p.gamma;
    let lo = steady_response(p, delta_r - h).ok()?;
    let mid = steady_response(p, delta_r).ok()?;
    let hi = steady_response(p, delta_r + h).ok()?;
    Some(((hi.v_g - lo.v_g) / (2.0 * h)).abs() * p.gamma / mid.v_g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockadeSample {
    pub delta_r: f64,
    pub v_g: f64,
    pub n_g: f64,
    pub sensitivity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockadeReport {
    pub samples: Vec<BlockadeSample>,
    pub v_g_two_level: f64,
    /// First shift (in sweep order) from which the sensitivity stays below
    /// the threshold for the rest of the sweep.
    pub plateau_onset: Option<f64>,
    /// Whether `n_g` reaches 1 (v_g passes through c) somewhere in the sweep.
    pub reaches_light_speed: bool,
    pub threshold: f64,
}

impl BlockadeReport {
    pub fn final_sample(&self) -> &BlockadeSample {
        self.samples.last().expect("sweep is non-empty")
    }
}

/// Steady-state group velocity along a sweep of Δ_R.
pub fn detect_blockade(
    p: &SystemParams,
    delta_r_range: &[f64],
    threshold: f64,
) -> Result<BlockadeReport, DynamicsError> {
    p.validate()?;
    if delta_r_range.is_empty() {
        return Err(DynamicsError::InvalidInput("empty Δ_R sweep".into()));
    }
    let two = SystemParams { omega_c: 0.0, ..*p };
    let v_g_two_level = steady_response(&two, 0.0)?.v_g;
    let mut samples = Vec::with_capacity(delta_r_range.len());
    for &dr in delta_r_range {
        let r = steady_response(p, dr)?;
        let sensitivity = blockade_sensitivity(p, dr).unwrap_or(f64::INFINITY);
        samples.push(BlockadeSample {
            delta_r: dr,
            v_g: r.v_g,
            n_g: r.n_g,
            sensitivity,
        });
    }
    let mut plateau_onset = None;
    for s in samples.iter().rev() {
        if s.sensitivity < threshold {
            plateau_onset = Some(s.delta_r);
        } else {
            break;
        }
    }
    let reaches_light_speed =
        samples.iter().any(|s| s.n_g <= 1.0) || samples.windows(2).any(|w| (w[0].n_g - 1.0) * (w[1].n_g - 1.0) <= 0.0);
    Ok(BlockadeReport {
        samples,
        v_g_two_level,
        plateau_onset,
        reaches_light_speed,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atomic::calibrate;
    use crate::potential::{REFERENCE_C6_GHZ_UM6, REFERENCE_SIGMA};
    use crate::units::C6Convention;

    fn params() -> SystemParams {
        calibrate(&SystemParams::rb87_reference(), 10.0).unwrap()
    }

    fn ip(a_over_sigma: f64) -> InteractionParams {
        InteractionParams::from_ghz_um6(
            REFERENCE_C6_GHZ_UM6,
            a_over_sigma * REFERENCE_SIGMA,
            C6Convention::Angular,
        )
        .unwrap()
    }

    fn opts(step_frac: f64) -> PropagationOptions {
        PropagationOptions {
            step_frac,
            ..PropagationOptions::new(REFERENCE_SIGMA)
        }
    }

    #[test]
    fn dispersion_ratio_arithmetic() {
        let mut s = PulsePairState {
            z: 0.0,
            t: 0.0,
            sigma: 1.0,
            transmission: 1.0,
            delta_r_center: 0.0,
            delta_r_offset: 0.0,
            vg_center: 10.0,
            vg_offset: 10.0,
            vg_mean: 10.0,
            alpha_center: 0.0,
            delta_v: 0.0,
        };
        assert_eq!(dispersion_ratio(&s), 0.0);
        s.vg_offset = 11.0;
        assert!((dispersion_ratio(&s) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn gauss_nodes_cover_centre() {
        let (x, w) = profile_nodes();
        assert_eq!(x[PROFILE_NODES / 2], 0.0);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn non_interacting_counter_pass() {
        let p = params();
        let free = InteractionParams { c6: 0.0, ..ip(1.5) };
        let traj = simulate_counter(&p, &free, REFERENCE_SIGMA, &opts(0.02)).unwrap();
        assert!(traj.is_complete());
        for s in &traj.states {
            assert_eq!(s.delta_r_center, 0.0);
            assert!((s.vg_center - 10.0).abs() < 0.01);
            assert!(s.delta_v < 1e-9);
            assert!((s.sigma / REFERENCE_SIGMA - 1.0).abs() < 1e-9);
        }
        assert!(1.0 - traj.last().transmission < 1e-3);
        // time is distance over closing speed
        let expect = 2.0 * traj.length / (2.0 * traj.states[0].vg_center);
        assert!((traj.total_time() - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn transmission_never_increases_and_sigma_tracks_mean_vg() {
        let p = params();
        let traj = simulate_counter(&p, &ip(1.0), REFERENCE_SIGMA, &opts(0.02)).unwrap();
        assert!(traj.states.windows(2).all(|w| w[1].transmission <= w[0].transmission));
        assert!(traj.states.windows(2).all(|w| w[1].t > w[0].t && w[1].z > w[0].z));
        let v0 = traj.states[0].vg_mean;
        for s in &traj.states {
            assert_eq!(s.sigma, REFERENCE_SIGMA * s.vg_mean / v0);
        }
    }

    #[test]
    fn constant_shift_gives_beer_lambert() {
        let mut p = params();
        p.gamma_rg = 1e-3 * p.gamma;
        let dr = -0.2 * p.gamma;
        let o = PropagationOptions {
            feedback: Feedback::Constant(dr),
            length: 3.0 * REFERENCE_SIGMA,
            ..opts(0.01)
        };
        let traj = simulate_co(&p, &ip(1.5), REFERENCE_SIGMA, &o).unwrap();
        let alpha = steady_response(&p, dr).unwrap().alpha;
        let want = (-alpha * o.length).exp();
        let got = traj.last().transmission;
        assert!(((got - want) / want).abs() < 1e-6, "{got} vs {want}");
    }

    #[test]
    fn superluminal_region_aborts_with_partial_trajectory() {
        let p = params();
        let o = PropagationOptions {
            feedback: Feedback::Constant(0.5 * p.gamma),
            ..opts(0.05)
        };
        let err = simulate_counter(&p, &ip(1.5), REFERENCE_SIGMA, &o).unwrap_err();
        assert!(matches!(err, DynamicsError::Superluminal { step: 0, .. }), "{err}");
        assert!(err.is_physics_abort());
    }

    #[test]
    fn strong_absorption_goes_extinct() {
        let mut p = params();
        p.gamma_rg = 0.5 * p.gamma;
        let err = simulate_co(&p, &ip(1.5), REFERENCE_SIGMA, &opts(0.05)).unwrap_err();
        match err {
            DynamicsError::Extinction { partial, .. } => {
                assert!(partial.last().transmission < EXTINCTION_THRESHOLD)
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn mirrored_pass_is_symmetric_without_absorption() {
        let mut p = params();
        p.gamma_rg = 0.0;
        let o = PropagationOptions {
            absorption: false,
            chi_model: ChiModel::Adiabatic,
            ..opts(0.02)
        };
        let traj = simulate_counter(&p, &ip(1.0), REFERENCE_SIGMA, &o).unwrap();
        let n = traj.states.len();
        let peak = traj.peak_delta_r();
        let mut worst: f64 = 0.0;
        for k in 0..n / 2 {
            let (a, b) = (&traj.states[k], &traj.states[n - 1 - k]);
            assert!((a.z + b.z).abs() < 1e-9 * REFERENCE_SIGMA);
            worst = worst.max((a.delta_r_center - b.delta_r_center).abs() / peak);
        }
        // Δ_R at step i sees σ from step i−1: a one-step lag
        assert!(worst < traj.step_frac, "{worst}");
    }

    #[test]
    fn blockade_sweep_limits() {
        let p = params();
        let sweep: Vec<f64> = (0..=50).map(|k| -(k as f64) * p.gamma).collect();
        let off = SystemParams { omega_c: 0.0, ..p };
        let flat = detect_blockade(&off, &sweep, PLATEAU_THRESHOLD).unwrap();
        assert_eq!(flat.plateau_onset, Some(0.0));
        assert!(flat
            .samples
            .iter()
            .all(|s| (s.v_g - flat.v_g_two_level).abs() < 1e-9 * s.v_g));

        let r = detect_blockade(&p, &sweep, PLATEAU_THRESHOLD).unwrap();
        let end = r.final_sample().v_g;
        assert!(((end - r.v_g_two_level) / r.v_g_two_level).abs() < 0.1);
        assert!(r.plateau_onset.is_some_and(|x| x < 0.0));
        assert!(!r.reaches_light_speed);

        let near = SystemParams {
            delta1: 0.3 * p.gamma,
            delta2: -0.3 * p.gamma,
            ..p
        };
        let near = calibrate(&near, 10.0).unwrap();
        assert!(
            detect_blockade(&near, &sweep, PLATEAU_THRESHOLD)
                .unwrap()
                .reaches_light_speed
        );
    }

    #[test]
    fn history_and_adiabatic_agree_for_weak_interaction() {
        let p = params();
        let run = |m| {
            let o = PropagationOptions {
                chi_model: m,
                ..opts(0.02)
            };
            simulate_counter(&p, &ip(1.5), REFERENCE_SIGMA, &o).unwrap()
        };
        let (h, a) = (run(ChiModel::History), run(ChiModel::Adiabatic));
        let peak = |t: &Trajectory| t.states.iter().map(|s| s.vg_center).fold(0.0, f64::max);
        assert!((peak(&h) / peak(&a) - 1.0).abs() < 5e-3);
        assert!((h.peak_delta_r() / a.peak_delta_r() - 1.0).abs() < 5e-3);
    }

    #[test]
    fn plateau_finder_on_synthetic_trace() {
        let p = params();
        let free = InteractionParams { c6: 0.0, ..ip(1.5) };
        let mut traj = simulate_counter(&p, &free, REFERENCE_SIGMA, &opts(0.05)).unwrap();
        assert_eq!(traj.velocity_plateau(0.5, 0.1, REFERENCE_SIGMA), None);
        for s in &mut traj.states {
            let u = s.z / REFERENCE_SIGMA;
            // flat-topped bump, 2σ wide at the top
            s.vg_center = 10.0 + 12.0 * (-(u / 1.2).powi(8)).exp();
        }
        let (z0, z1) = traj.velocity_plateau(0.5, 0.1, REFERENCE_SIGMA).unwrap();
        assert!(z0 < -0.8 * REFERENCE_SIGMA && z1 > 0.8 * REFERENCE_SIGMA);
        assert_eq!(traj.velocity_plateau(0.5, 0.1, 4.0 * REFERENCE_SIGMA), None);
        assert_eq!(traj.velocity_plateau(2.0, 0.1, REFERENCE_SIGMA), None);
    }

    #[test]
    fn bad_inputs_rejected() {
        let p = params();
        let bad = PropagationOptions {
            step_frac: 0.0,
            ..opts(0.01)
        };
        assert!(matches!(
            simulate_counter(&p, &ip(1.0), REFERENCE_SIGMA, &bad),
            Err(DynamicsError::InvalidInput(_))
        ));
        assert!(simulate_co(&p, &ip(1.0), -1.0, &opts(0.01)).is_err());
    }
}
