//! Two-photon cross phase and fidelity from the accumulated pair phase.
//!
//! Each photon pair `(z1, z2)` in the co-moving frames picks up
//! `Φ(z1, z2) = c3⁴ ∫ Δ(s(τ)) dτ`. The output state is compared with the
//! interaction-free reference through
//! `√F e^{iφ} = ∬ |f(z1)|² |f(z2)|² e^{−iΦ(z1, z2)}`.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::atomic::{calibrate, MixingAngles, SystemParams};
use crate::dynamics::{simulate_counter, DynamicsError, Geometry, PropagationOptions, Trajectory};
use crate::exec::Exec;
use crate::numerics::{quad1d_breaks, NumericsError, QuadOptions};
use crate::potential::{effective_potential, potential_unchecked, InteractionParams, PotentialError, PulseProfile};

/// Half-width of the overlap domain in units of σ.
pub const OVERLAP_HALF_WIDTH: f64 = 5.0;
/// Smallest grid accepted by [`overlap`].
pub const MIN_GRID: usize = 41;
/// Grid refinement stops here.
pub const MAX_GRID: usize = 4096;
/// Successive grids must agree to this in F and in φ (rad).
pub const GRID_TOL: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum XpmError {
    #[error("trajectory is incomplete (propagation aborted); no output state to compare")]
    IncompleteTrajectory,
    #[error("overlap not converged at grid cap {MAX_GRID}: best F = {:.6}, φ = {:.6}", best.fidelity, best.cross_phase)]
    NotConverged { best: XpmResult },
    #[error("invalid overlap input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct XpmResult {
    pub fidelity: f64,
    /// Principal value in (−π, π].
    pub cross_phase: f64,
    pub converged: bool,
    pub grid_sizes: Vec<usize>,
}

impl XpmResult {
    pub fn from_overlap(z: Complex64, converged: bool, grid_sizes: Vec<usize>) -> Self {
        Self {
            fidelity: z.norm_sqr(),
            cross_phase: principal(z.arg()),
            converged,
            grid_sizes,
        }
    }
}

/// Maps an angle to (−π, π].
pub fn principal(phi: f64) -> f64 {
    use std::f64::consts::PI;
    let mut x = phi.rem_euclid(2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    }
    x
}

/// Which pulse size the output amplitudes use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileSize {
    /// σ at entry: the amplitudes are advected snapshots.
    #[default]
    Initial,
    /// σ at the end of the trajectory.
    Final,
}

/// Pair phase `Φ(z1, z2)` along a completed trajectory.
pub fn accumulate_phase(
    traj: &Trajectory,
    ip: &InteractionParams,
    angles: &MixingAngles,
    z1: f64,
    z2: f64,
) -> Result<f64, XpmError> {
    if !traj.is_complete() {
        return Err(XpmError::IncompleteTrajectory);
    }
    ip.validate()?;
    let d = z1 - z2;
    let c34 = angles.c3_pow4();
    match traj.geometry {
        Geometry::Co => Ok(c34 * effective_potential(d, ip)? * traj.total_time()),
        Geometry::Counter => {
            if ip.a == 0.0 {
                // any pass through contact diverges
                return Err(PotentialError::Singular.into());
            }
            Ok(c34 * counter_integral(traj, ip, d))
        }
    }
}

fn counter_integral(traj: &Trajectory, ip: &InteractionParams, d: f64) -> f64 {
    let s = &traj.states;
    let mut acc = 0.0;
    let mut prev = potential_unchecked(d + s[0].z, ip);
    for w in s.windows(2) {
        let next = potential_unchecked(d + w[1].z, ip);
        acc += 0.5 * (prev + next) * (w[1].t - w[0].t);
        prev = next;
    }
    acc
}

#[derive(Debug, Clone, PartialEq)]
enum Phases {
    /// Row-major `n × n`.
    Full(Vec<f64>),
    /// Indexed by `i − j + n − 1`.
    Difference(Vec<f64>),
}

/// Pair phases on a uniform tensor grid with trapezoid weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMap {
    pub z: Vec<f64>,
    /// `|f(z)|²` at each node.
    pub density: Vec<f64>,
    /// Trapezoid weight × density, normalised to sum to one.
    pub weights: Vec<f64>,
    phases: Phases,
}

/// Nodes, densities and normalised weights.
type Marginal = (Vec<f64>, Vec<f64>, Vec<f64>);

fn marginal(sigma: f64, n: usize) -> Result<Marginal, XpmError> {
    if n < 2 {
        return Err(XpmError::InvalidInput(format!("grid needs at least 2 points, got {n}")));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(XpmError::InvalidInput(format!("sigma = {sigma} must be positive")));
    }
    let half = OVERLAP_HALF_WIDTH * sigma;
    let h = 2.0 * half / (n - 1) as f64;
    let prof = PulseProfile::gaussian(sigma);
    let z: Vec<f64> = (0..n).map(|i| -half + h * i as f64).collect();
    let density: Vec<f64> = z.iter().map(|&x| prof.density(x)).collect();
    let mut weights: Vec<f64> = density
        .iter()
        .enumerate()
        .map(|(i, d)| if i == 0 || i == n - 1 { 0.5 * h * d } else { h * d })
        .collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok((z, density, weights))
}

impl PhaseMap {
    /// General `Φ(z1, z2)`, evaluated on every grid pair.
    pub fn from_fn<F>(sigma: f64, n: usize, exec: Exec, phase: F) -> Result<Self, XpmError>
    where
        F: Fn(f64, f64) -> f64 + Sync + Send,
    {
        let (z, density, weights) = marginal(sigma, n)?;
        let rows = exec.map_indices(n, |i| z.iter().map(|&z2| phase(z[i], z2)).collect::<Vec<f64>>());
        let full: Vec<f64> = rows.into_iter().flatten().collect();
        if full.iter().any(|x| !x.is_finite()) {
            return Err(XpmError::InvalidInput("non-finite phase".into()));
        }
        Ok(Self {
            z,
            density,
            weights,
            phases: Phases::Full(full),
        })
    }

    /// `Φ(z1, z2) = g(z1 − z2)`: only the `2n − 1` distinct differences are
    /// evaluated.
    pub fn from_difference_fn<G>(sigma: f64, n: usize, exec: Exec, g: G) -> Result<Self, XpmError>
    where
        G: Fn(f64) -> f64 + Sync + Send,
    {
        let (z, density, weights) = marginal(sigma, n)?;
        let h = z[1] - z[0];
        let diffs = exec.map_indices(2 * n - 1, |k| g((k as f64 - (n - 1) as f64) * h));
        if diffs.iter().any(|x| !x.is_finite()) {
            return Err(XpmError::InvalidInput("non-finite phase".into()));
        }
        Ok(Self {
            z,
            density,
            weights,
            phases: Phases::Difference(diffs),
        })
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn phase(&self, i: usize, j: usize) -> f64 {
        let n = self.len();
        match &self.phases {
            Phases::Full(v) => v[i * n + j],
            Phases::Difference(v) => v[i + n - 1 - j],
        }
    }

    /// `Σ_ij w_i w_j e^{−iΦ_ij}`; rows may run concurrently but are summed
    /// in index order.
    pub fn overlap(&self, exec: Exec) -> Complex64 {
        let n = self.len();
        let rows = exec.map_indices(n, |i| {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..n {
                acc += Complex64::from_polar(self.weights[j], -self.phase(i, j));
            }
            acc * self.weights[i]
        });
        rows.into_iter().sum()
    }

    /// Dense `(z1, z2, Φ)` rows for export.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let n = self.len();
        (0..n).flat_map(move |i| (0..n).map(move |j| (self.z[i], self.z[j], self.phase(i, j))))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverlapOptions {
    pub grid_n: usize,
    pub profile: ProfileSize,
    pub exec: Exec,
}

impl Default for OverlapOptions {
    fn default() -> Self {
        Self {
            grid_n: MIN_GRID,
            profile: ProfileSize::Initial,
            exec: Exec::Parallel,
        }
    }
}

/// Sequence of grid sizes tried from `start`: n → 2n − 1, capped.
pub fn grid_sequence(start: usize) -> Vec<usize> {
    let mut out = vec![start];
    while let Some(&n) = out.last() {
        let next = 2 * n - 1;
        if n >= MAX_GRID {
            break;
        }
        out.push(next.min(MAX_GRID));
    }
    out
}

/// Refines a difference-phase overlap until successive grids agree.
pub fn overlap_converged<G>(sigma: f64, opts: &OverlapOptions, g: G) -> Result<XpmResult, XpmError>
where
    G: Fn(f64) -> f64 + Sync + Send,
{
    if opts.grid_n < MIN_GRID || opts.grid_n.is_multiple_of(2) {
        return Err(XpmError::InvalidInput(format!(
            "grid_n = {} must be odd and ≥ {MIN_GRID}",
            opts.grid_n
        )));
    }
    let exec = opts.exec;
    let mut used = Vec::new();
    let mut prev: Option<XpmResult> = None;
    for n in grid_sequence(opts.grid_n) {
        let map = PhaseMap::from_difference_fn(sigma, n, exec, &g)?;
        used.push(n);
        let cur = XpmResult::from_overlap(map.overlap(exec), false, used.clone());
        if let Some(p) = &prev {
            let dphi = principal(cur.cross_phase - p.cross_phase).abs();
            if (cur.fidelity - p.fidelity).abs() < GRID_TOL && dphi < GRID_TOL {
                return Ok(XpmResult { converged: true, ..cur });
            }
        }
        prev = Some(cur);
    }
    Err(XpmError::NotConverged {
        best: prev.expect("at least one grid"),
    })
}

/// F and φ for a completed trajectory.
pub fn overlap(
    traj: &Trajectory,
    ip: &InteractionParams,
    angles: &MixingAngles,
    opts: &OverlapOptions,
) -> Result<XpmResult, XpmError> {
    if !traj.is_complete() {
        return Err(XpmError::IncompleteTrajectory);
    }
    ip.validate()?;
    let sigma = match opts.profile {
        ProfileSize::Initial => traj.sigma0,
        ProfileSize::Final => traj.last().sigma,
    };
    if ip.c6 == 0.0 {
        return overlap_converged(sigma, opts, |_| 0.0);
    }
    if ip.a == 0.0 {
        return Err(PotentialError::Singular.into());
    }
    let c34 = angles.c3_pow4();
    match traj.geometry {
        Geometry::Counter => overlap_converged(sigma, opts, |d| c34 * counter_integral(traj, ip, d)),
        Geometry::Co => {
            let t = traj.total_time();
            overlap_converged(sigma, opts, |d| c34 * potential_unchecked(d, ip) * t)
        }
    }
}

/// Pair-phase grid of a completed trajectory at `n` points per axis.
pub fn phase_map(
    traj: &Trajectory,
    ip: &InteractionParams,
    angles: &MixingAngles,
    profile: ProfileSize,
    n: usize,
    exec: Exec,
) -> Result<PhaseMap, XpmError> {
    if !traj.is_complete() {
        return Err(XpmError::IncompleteTrajectory);
    }
    ip.validate()?;
    let sigma = match profile {
        ProfileSize::Initial => traj.sigma0,
        ProfileSize::Final => traj.last().sigma,
    };
    if ip.c6 == 0.0 {
        return PhaseMap::from_difference_fn(sigma, n, exec, |_| 0.0);
    }
    if ip.a == 0.0 {
        return Err(PotentialError::Singular.into());
    }
    let c34 = angles.c3_pow4();
    match traj.geometry {
        Geometry::Counter => PhaseMap::from_difference_fn(sigma, n, exec, |d| c34 * counter_integral(traj, ip, d)),
        Geometry::Co => {
            let t = traj.total_time();
            PhaseMap::from_difference_fn(sigma, n, exec, |d| c34 * potential_unchecked(d, ip) * t)
        }
    }
}

/// `∬ |f|²|f|² e^{−iΦ}` by nested adaptive quadrature over ±5σ.
pub fn overlap_adaptive<F>(sigma: f64, tol: f64, phase: F) -> Result<Complex64, XpmError>
where
    F: Fn(f64, f64) -> f64,
{
    let prof = PulseProfile::gaussian(sigma);
    let half = OVERLAP_HALF_WIDTH * sigma;
    let breaks = [-half, -sigma, 0.0, sigma, half];
    let opts = QuadOptions {
        abs_tol: tol,
        rel_tol: 0.0,
        max_intervals: 4000,
    };
    let inner = |z1: f64| -> Result<Complex64, NumericsError> {
        let r = quad1d_breaks(
            |z2| Complex64::from_polar(prof.density(z2), -phase(z1, z2)),
            &breaks,
            opts,
        )?;
        Ok(r.value * prof.density(z1))
    };
    // the inner failure is carried out of the closure by hand
    let failure = std::cell::Cell::new(None);
    let outer = quad1d_breaks(
        |z1| match inner(z1) {
            Ok(v) => v,
            Err(e) => {
                failure.set(Some(e));
                Complex64::new(0.0, 0.0)
            }
        },
        &breaks,
        opts,
    )?;
    if let Some(e) = failure.take() {
        return Err(e.into());
    }
    // normalise by the truncated marginal, as the grid version does
    let norm = quad1d_breaks(
        |z| Complex64::new(prof.density(z), 0.0),
        &breaks,
        QuadOptions::absolute(1e-15),
    )?;
    Ok(outer.value / (norm.value.re * norm.value.re))
}

/// How the slow pass is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SlowPassMode {
    /// Recalibrate the medium to the scaled velocity and propagate again.
    #[default]
    Resimulate,
    /// Replay the nominal trajectory with every velocity scaled.
    Replay,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlowPass {
    pub vg_scale: f64,
    pub fast: XpmResult,
    pub slow: XpmResult,
}

/// Nominal counter pass against one with the entry group velocity scaled by
/// `vg_scale`.
#[allow(clippy::too_many_arguments)]
pub fn slow_pass_comparison(
    p: &SystemParams,
    ip: &InteractionParams,
    angles: &MixingAngles,
    sigma0: f64,
    prop: &PropagationOptions,
    overlap_opts: &OverlapOptions,
    vg_scale: f64,
    mode: SlowPassMode,
) -> Result<SlowPass, XpmError> {
    if !(vg_scale > 0.0 && vg_scale <= 1.0) {
        return Err(XpmError::InvalidInput(format!("vg_scale = {vg_scale} outside (0, 1]")));
    }
    let fast_traj = simulate_counter(p, ip, sigma0, prop)?;
    let fast = overlap(&fast_traj, ip, angles, overlap_opts)?;
    if vg_scale == 1.0 {
        return Ok(SlowPass {
            vg_scale,
            slow: fast.clone(),
            fast,
        });
    }
    let slow_traj = match mode {
        SlowPassMode::Replay => fast_traj.with_speed_scaled(vg_scale),
        SlowPassMode::Resimulate => {
            let v0 = fast_traj.states[0].vg_center;
            let slow_p = calibrate(p, v0 * vg_scale).map_err(DynamicsError::from)?;
            simulate_counter(&slow_p, ip, sigma0, prop)?
        }
    };
    let slow = match overlap(&slow_traj, ip, angles, overlap_opts) {
        Ok(r) => r,
        Err(XpmError::NotConverged { best }) => best,
        Err(e) => return Err(e),
    };
    Ok(SlowPass { vg_scale, fast, slow })
}

/// Co-propagation time at which the cross phase reaches `target` (rad),
/// found by bisection on `[0, t_max]`; returns the time and the overlap.
pub fn co_time_for_phase(
    ip: &InteractionParams,
    angles: &MixingAngles,
    sigma: f64,
    target: f64,
    t_max: f64,
    opts: &OverlapOptions,
) -> Result<(f64, XpmResult), XpmError> {
    if ip.a == 0.0 {
        return Err(PotentialError::Singular.into());
    }
    let c34 = angles.c3_pow4();
    let at = |t: f64| overlap_converged(sigma, opts, |d| c34 * potential_unchecked(d, ip) * t);
    let top = at(t_max)?;
    if top.cross_phase.abs() < target.abs() {
        return Err(XpmError::InvalidInput(format!(
            "phase {:.4} at t_max is below the target {target:.4}",
            top.cross_phase
        )));
    }
    let (mut lo, mut hi) = (0.0, t_max);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if at(mid)?.cross_phase.abs() < target.abs() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    Ok((t, at(t)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atomic::mixing_angles;
    use crate::dynamics::{simulate_co, Feedback};
    use crate::potential::{uniform_pass_phase, REFERENCE_C6_GHZ_UM6, REFERENCE_SIGMA};
    use crate::units::C6Convention;
    use std::f64::consts::PI;

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

    fn prop(feedback: Feedback, step_frac: f64) -> PropagationOptions {
        PropagationOptions {
            feedback,
            step_frac,
            ..PropagationOptions::new(REFERENCE_SIGMA)
        }
    }

    #[test]
    fn principal_value_range() {
        assert_eq!(principal(PI), PI);
        assert!((principal(-PI) - PI).abs() < 1e-15);
        assert!((principal(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!((principal(0.3 + 4.0 * PI) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn grid_sequence_doubles_to_cap() {
        assert_eq!(grid_sequence(41), vec![41, 81, 161, 321, 641, 1281, 2561, 4096]);
    }

    #[test]
    fn zero_and_uniform_phase() {
        let zero = PhaseMap::from_fn(1.0, 41, Exec::Sequential, |_, _| 0.0).unwrap();
        let z = zero.overlap(Exec::Sequential);
        assert!((z.norm_sqr() - 1.0).abs() < 1e-12 && z.arg().abs() < 1e-12);
        let flat = PhaseMap::from_difference_fn(1.0, 81, Exec::Parallel, |_| 0.7).unwrap();
        let r = XpmResult::from_overlap(flat.overlap(Exec::Parallel), true, vec![81]);
        assert!((r.fidelity - 1.0).abs() < 1e-12);
        assert!((r.cross_phase + 0.7).abs() < 1e-12); // e^{−iΦ}
    }

    #[test]
    fn modes_give_identical_overlap() {
        let g = |d: f64| (d * 1.3).sin() + 0.1 * d * d;
        let a = PhaseMap::from_difference_fn(1.0, 201, Exec::Sequential, g).unwrap();
        let b = PhaseMap::from_difference_fn(1.0, 201, Exec::Parallel, g).unwrap();
        assert_eq!(a.overlap(Exec::Sequential), b.overlap(Exec::Parallel));
        let full = PhaseMap::from_fn(1.0, 201, Exec::Parallel, |x, y| g(x - y)).unwrap();
        let (u, v) = (full.overlap(Exec::Parallel), a.overlap(Exec::Parallel));
        assert!((u - v).norm() < 1e-13);
    }

    #[test]
    fn marginal_weights_sum_to_one() {
        let m = PhaseMap::from_fn(2.5, 41, Exec::Sequential, |_, _| 0.0).unwrap();
        assert!((m.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!((m.z[0] + m.z[40]).abs() < 1e-12);
    }

    #[test]
    fn grid_matches_adaptive_for_smooth_phase() {
        let g = |d: f64| 0.8 / (1.0 + d * d);
        let adaptive = overlap_adaptive(1.0, 1e-10, |a, b| g(a - b)).unwrap();
        let grid = PhaseMap::from_difference_fn(1.0, 2001, Exec::Parallel, g)
            .unwrap()
            .overlap(Exec::Parallel);
        assert!((adaptive.norm_sqr() - grid.norm_sqr()).abs() < 1e-8);
        assert!((adaptive.arg() - grid.arg()).abs() < 1e-8);
    }

    #[test]
    fn counter_phase_matches_uniform_pass() {
        let p = params();
        let ang = mixing_angles(&p);
        let traj = simulate_counter(&p, &ip(1.5), REFERENCE_SIGMA, &prop(Feedback::Disabled, 0.01)).unwrap();
        let v = traj.states[0].vg_center;
        let closed = uniform_pass_phase(&ip(1.5), &ang, 2.0 * v).unwrap();
        let phi = accumulate_phase(&traj, &ip(1.5), &ang, 0.3e-6, 0.3e-6).unwrap();
        assert!(phi < 0.0);
        assert!(((-phi - closed) / closed).abs() < 1e-4, "{phi} vs {closed}");
    }

    #[test]
    fn co_phase_is_static_closed_form() {
        let p = params();
        let ang = mixing_angles(&p);
        let o = PropagationOptions {
            length: 2.0 * REFERENCE_SIGMA,
            ..prop(Feedback::Disabled, 0.02)
        };
        let traj = simulate_co(&p, &ip(1.5), REFERENCE_SIGMA, &o).unwrap();
        let (z1, z2) = (4e-6, -3e-6);
        let want = ang.c3_pow4() * effective_potential(z1 - z2, &ip(1.5)).unwrap() * traj.total_time();
        let got = accumulate_phase(&traj, &ip(1.5), &ang, z1, z2).unwrap();
        assert!(((got - want) / want).abs() < 1e-14);
    }

    #[test]
    fn non_interacting_overlap_is_trivial() {
        let p = params();
        let ang = mixing_angles(&p);
        let free = InteractionParams { c6: 0.0, ..ip(1.5) };
        let traj = simulate_counter(&p, &free, REFERENCE_SIGMA, &prop(Feedback::SelfConsistent, 0.05)).unwrap();
        assert_eq!(accumulate_phase(&traj, &free, &ang, 0.0, 1e-6).unwrap(), 0.0);
        let r = overlap(&traj, &free, &ang, &OverlapOptions::default()).unwrap();
        assert!(r.converged);
        assert!((r.fidelity - 1.0).abs() < 1e-12 && r.cross_phase.abs() < 1e-12);
    }

    #[test]
    fn aborted_trajectory_rejected() {
        let p = params();
        let ang = mixing_angles(&p);
        let o = prop(Feedback::Constant(0.5 * p.gamma), 0.05);
        let err = simulate_counter(&p, &ip(1.5), REFERENCE_SIGMA, &o).unwrap_err();
        let partial = err.partial().unwrap();
        assert!(matches!(
            accumulate_phase(partial, &ip(1.5), &ang, 0.0, 0.0),
            Err(XpmError::IncompleteTrajectory)
        ));
    }

    #[test]
    fn replayed_slow_pass_scales_phase() {
        let p = params();
        let ang = mixing_angles(&p);
        let o = prop(Feedback::Disabled, 0.02);
        let opts = OverlapOptions::default();
        let same = slow_pass_comparison(
            &p,
            &ip(1.5),
            &ang,
            REFERENCE_SIGMA,
            &o,
            &opts,
            1.0,
            SlowPassMode::Replay,
        )
        .unwrap();
        assert_eq!(same.fast, same.slow);
        let half = slow_pass_comparison(
            &p,
            &ip(1.5),
            &ang,
            REFERENCE_SIGMA,
            &o,
            &opts,
            0.5,
            SlowPassMode::Replay,
        )
        .unwrap();
        let ratio = half.slow.cross_phase / half.fast.cross_phase;
        assert!((ratio - 2.0).abs() < 0.02, "{ratio}");
        assert!(half.slow.fidelity <= half.fast.fidelity);
    }

    #[test]
    fn resimulated_slow_pass_without_feedback_scales_phase() {
        let p = params();
        let ang = mixing_angles(&p);
        let o = prop(Feedback::Disabled, 0.02);
        let opts = OverlapOptions::default();
        let r = slow_pass_comparison(
            &p,
            &ip(1.5),
            &ang,
            REFERENCE_SIGMA,
            &o,
            &opts,
            0.5,
            SlowPassMode::Resimulate,
        )
        .unwrap();
        let ratio = r.slow.cross_phase / r.fast.cross_phase;
        assert!((ratio - 2.0).abs() < 0.02, "{ratio}");
    }

    #[test]
    fn grid_too_small_rejected() {
        let o = OverlapOptions {
            grid_n: 40,
            ..Default::default()
        };
        assert!(matches!(
            overlap_converged(1.0, &o, |_| 0.0),
            Err(XpmError::InvalidInput(_))
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn fidelity_bounded(c in prop::collection::vec(-5.0..5.0f64, 4)) {
                let m = PhaseMap::from_fn(1.0, 41, Exec::Sequential, |x, y| {
                    c[0] * x + c[1] * y * y + c[2] * (x * y).sin() + c[3]
                }).unwrap();
                let f = m.overlap(Exec::Sequential).norm_sqr();
                prop_assert!((0.0..=1.0 + 1e-12).contains(&f));
            }

            #[test]
            fn phase_invariant_under_2pi_shift(k in -5i32..5, c in -2.0..2.0f64) {
                let g = |d: f64| c * d * d;
                let a = PhaseMap::from_difference_fn(1.0, 41, Exec::Sequential, g).unwrap().overlap(Exec::Sequential);
                let b = PhaseMap::from_difference_fn(1.0, 41, Exec::Sequential, |d| g(d) + 2.0 * PI * k as f64)
                    .unwrap()
                    .overlap(Exec::Sequential);
                prop_assert!((a - b).norm() < 1e-12);
            }
        }
    }
}
