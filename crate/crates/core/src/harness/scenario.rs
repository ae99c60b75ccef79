//! Scenario runners: config in, tables out.

use crate::atomic::{calibrate, mixing_angles, steady_response, ResponseError, SystemParams};
use crate::dynamics::{
    detect_blockade, simulate_co, simulate_counter, DynamicsError, Geometry, PropagationOptions, Trajectory,
};
use crate::exec::{with_thread_cap, Exec};
use crate::potential::{InteractionParams, PotentialError};
use crate::xpm::{overlap, phase_map, slow_pass_comparison, OverlapOptions, XpmError, XpmResult};

use super::config::{ScenarioConfig, ScenarioKind, SweepAxis};
use super::output::{Check, Column, RunOutput, Status, Table};

fn response_status(e: &ResponseError) -> Status {
    match e {
        ResponseError::Calibration(_) => Status::AccuracyFailure(e.to_string()),
        _ => Status::PhysicsAbort(e.to_string()),
    }
}

fn dynamics_status(e: &DynamicsError) -> Status {
    match e {
        DynamicsError::Response(r) => response_status(r),
        _ => Status::PhysicsAbort(e.to_string()),
    }
}

fn xpm_status(e: &XpmError) -> Status {
    match e {
        XpmError::NotConverged { .. } => Status::AccuracyFailure(e.to_string()),
        XpmError::Dynamics(d) => dynamics_status(d),
        _ => Status::PhysicsAbort(e.to_string()),
    }
}

/// Medium parameters, calibrated to the target group velocity unless an
/// explicit `chi_amp` is configured.
pub fn system_params(cfg: &ScenarioConfig) -> Result<SystemParams, ResponseError> {
    let s = &cfg.system;
    let p = SystemParams {
        gamma: s.gamma,
        gamma_rg: s.gamma_rg,
        omega_c: s.omega_c,
        delta1: s.delta1,
        delta2: s.delta2,
        g2n: s.g2n_ratio * s.omega_c * s.omega_c,
        chi_amp: s.chi_amp.unwrap_or(0.0),
        lambda_p: s.lambda_p,
    };
    match s.chi_amp {
        Some(_) => {
            p.validate()?;
            Ok(p)
        }
        None => calibrate(&p, s.target_vg),
    }
}

pub fn interaction_params(cfg: &ScenarioConfig) -> Result<InteractionParams, PotentialError> {
    InteractionParams::new(cfg.interaction.c6, cfg.interaction.a)
}

pub fn propagation_options(cfg: &ScenarioConfig) -> PropagationOptions {
    let p = &cfg.propagation;
    PropagationOptions {
        step_frac: p.step_frac,
        length: p.length,
        feedback: p.feedback,
        absorption: p.absorption,
        chi_model: p.chi_model,
    }
}

/// Runs one (non-sweep) scenario.
pub fn run_scenario(cfg: &ScenarioConfig, exec: Exec) -> RunOutput {
    let mut out = RunOutput::new();
    match cfg.scenario {
        ScenarioKind::SusceptibilitySweep => susceptibility(cfg, &mut out),
        ScenarioKind::BlockadeSweep => blockade(cfg, &mut out),
        ScenarioKind::PropagateCounter => propagate(cfg, Geometry::Counter, &mut out),
        ScenarioKind::PropagateCo => propagate(cfg, Geometry::Co, &mut out),
        ScenarioKind::Xpm => xpm(cfg, exec, &mut out),
        ScenarioKind::SlowPass => slow_pass(cfg, exec, &mut out),
        ScenarioKind::CustomSweep => return run_sweep(cfg, exec, None),
    }
    out
}

macro_rules! try_or_fail {
    ($out:expr, $e:expr, $status:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => {
                $out.fail($status(&e));
                return;
            }
        }
    };
}

fn params_or_fail(cfg: &ScenarioConfig, out: &mut RunOutput) -> Option<SystemParams> {
    match system_params(cfg) {
        Ok(p) => Some(p),
        Err(e) => {
            out.fail(response_status(&e));
            None
        }
    }
}

fn susceptibility(cfg: &ScenarioConfig, out: &mut RunOutput) {
    let Some(p) = params_or_fail(cfg, out) else { return };
    let g = p.gamma;
    let sp = &cfg.spectrum;
    let mut t = Table::new(
        "susceptibility",
        vec![
            Column::new("delta1_over_gamma", "1", "probe detuning Δ1/γ"),
            Column::new("delta_r_over_gamma", "1", "interaction shift Δ_R/γ"),
            Column::new("re_chi", "1", "Re χ"),
            Column::new("im_chi", "1", "Im χ"),
            Column::new("n_minus_1", "1", "refractive index minus one, Re χ/2"),
            Column::new("n_g", "1", "group index"),
            Column::new("v_g", "m/s", "group velocity c/n_g"),
        ],
    );
    t.meta("chi_amp_rad_per_s", format!("{:.11e}", p.chi_amp));
    let n = sp.delta1_points;
    for &dr in &sp.delta_r_values {
        for k in 0..n {
            let d1 = sp.delta1_min + (sp.delta1_max - sp.delta1_min) * k as f64 / (n - 1) as f64;
            let q = SystemParams { delta1: d1, ..p };
            let r = try_or_fail!(out, steady_response(&q, dr), response_status);
            t.push(vec![d1 / g, dr / g, r.chi.re, r.im_chi, r.n_minus_1, r.n_g, r.v_g]);
        }
    }
    out.tables.push(t);
}

fn blockade(cfg: &ScenarioConfig, out: &mut RunOutput) {
    let Some(p) = params_or_fail(cfg, out) else { return };
    let g = p.gamma;
    let b = &cfg.blockade;
    let range: Vec<f64> = if b.points == 1 {
        vec![b.delta_r_start]
    } else {
        (0..b.points)
            .map(|k| b.delta_r_start + (b.delta_r_end - b.delta_r_start) * k as f64 / (b.points - 1) as f64)
            .collect()
    };
    let report = try_or_fail!(out, detect_blockade(&p, &range, b.plateau_threshold), dynamics_status);
    let mut t = Table::new(
        "blockade",
        vec![
            Column::new("delta_r_over_gamma", "1", "interaction shift Δ_R/γ"),
            Column::new("v_g", "m/s", "steady-state group velocity"),
            Column::new("n_g", "1", "group index"),
            Column::new("sensitivity", "1", "|dv_g/dΔ_R|·γ/v_g"),
            Column::new("v_g_two_level", "m/s", "group velocity with the pump off"),
        ],
    );
    t.meta("v_g_two_level_m_per_s", format!("{:.11e}", report.v_g_two_level));
    t.meta(
        "plateau_onset_over_gamma",
        report
            .plateau_onset
            .map_or("none".to_string(), |x| format!("{:.11e}", x / g)),
    );
    t.meta("reaches_light_speed", report.reaches_light_speed);
    t.meta("threshold", report.threshold);
    for s in &report.samples {
        t.push(vec![s.delta_r / g, s.v_g, s.n_g, s.sensitivity, report.v_g_two_level]);
    }
    out.tables.push(t);
}

fn trajectory_table(traj: &Trajectory, gamma: f64) -> Table {
    let s0 = traj.sigma0;
    let mut t = Table::new(
        "propagate",
        vec![
            Column::new(
                "z_over_sigma0",
                "1",
                "separation Z (counter) or distance travelled (co), over σ0",
            ),
            Column::new("t", "s", "elapsed time"),
            Column::new("sigma_over_sigma0", "1", "pulse width σ/σ0"),
            Column::new("transmission", "1", "pulse transmission T"),
            Column::new("delta_r_center_over_gamma", "1", "shift at the pulse centre Δ_R/γ"),
            Column::new("delta_r_offset_over_gamma", "1", "shift at +σ"),
            Column::new("v_g_center", "m/s", "group velocity at the centre"),
            Column::new("v_g_offset", "m/s", "group velocity at +σ"),
            Column::new("v_g_mean", "m/s", "profile-weighted group velocity"),
            Column::new("alpha_center", "1/m", "absorption coefficient at the centre"),
            Column::new("delta_v", "1", "dispersion ratio |v(+σ) − v(0)|/v(0)"),
        ],
    );
    for s in &traj.states {
        t.push(vec![
            s.z / s0,
            s.t,
            s.sigma / s0,
            s.transmission,
            s.delta_r_center / gamma,
            s.delta_r_offset / gamma,
            s.vg_center,
            s.vg_offset,
            s.vg_mean,
            s.alpha_center,
            s.delta_v,
        ]);
    }
    t.meta("geometry", format!("{:?}", traj.geometry).to_lowercase());
    t.meta("sigma0_m", format!("{:.11e}", s0));
    t.meta("complete", traj.is_complete());
    t.meta(
        "peak_delta_r_over_gamma",
        format!("{:.11e}", traj.peak_delta_r() / gamma),
    );
    t.meta("final_transmission", format!("{:.11e}", traj.last().transmission));
    match traj.velocity_plateau(0.5, 0.1, s0) {
        Some((a, b)) => t.meta(
            "velocity_plateau_over_sigma0",
            format!("{:.6e}..{:.6e}", a / s0, b / s0),
        ),
        None => t.meta("velocity_plateau_over_sigma0", "none"),
    }
    t
}

fn simulate(
    geometry: Geometry,
    p: &SystemParams,
    ip: &InteractionParams,
    sigma0: f64,
    opts: &PropagationOptions,
) -> Result<Trajectory, DynamicsError> {
    match geometry {
        Geometry::Counter => simulate_counter(p, ip, sigma0, opts),
        Geometry::Co => simulate_co(p, ip, sigma0, opts),
    }
}

fn propagate(cfg: &ScenarioConfig, geometry: Geometry, out: &mut RunOutput) {
    let Some(p) = params_or_fail(cfg, out) else { return };
    let ip = try_or_fail!(out, interaction_params(cfg), |e: &PotentialError| Status::PhysicsAbort(
        e.to_string()
    ));
    let opts = propagation_options(cfg);
    match simulate(geometry, &p, &ip, cfg.interaction.sigma, &opts) {
        Ok(traj) => out.tables.push(trajectory_table(&traj, p.gamma)),
        Err(e) => {
            if let Some(partial) = e.partial() {
                let mut t = trajectory_table(partial, p.gamma);
                t.meta("aborted", &e);
                out.tables.push(t);
            }
            out.fail(dynamics_status(&e));
        }
    }
}

fn overlap_options(cfg: &ScenarioConfig, exec: Exec) -> OverlapOptions {
    OverlapOptions {
        grid_n: cfg.xpm.grid_n,
        profile: cfg.xpm.profile,
        exec,
    }
}

fn xpm(cfg: &ScenarioConfig, exec: Exec, out: &mut RunOutput) {
    let Some(p) = params_or_fail(cfg, out) else { return };
    let ip = try_or_fail!(out, interaction_params(cfg), |e: &PotentialError| Status::PhysicsAbort(
        e.to_string()
    ));
    let angles = mixing_angles(&p);
    let sigma0 = cfg.interaction.sigma;
    let geometry = cfg.xpm.geometry;
    let ov = overlap_options(cfg, exec);
    let runs = exec.map_slice(&cfg.xpm.lengths, |&len| {
        let opts = PropagationOptions {
            length: len,
            ..propagation_options(cfg)
        };
        let traj = simulate(geometry, &p, &ip, sigma0, &opts)?;
        let r = match overlap(&traj, &ip, &angles, &ov) {
            Ok(r) => Ok(r),
            Err(XpmError::NotConverged { best }) => Err(best),
            Err(e) => return Err(e),
        };
        Ok((traj, r))
    });
    let mut t = Table::new(
        "xpm",
        vec![
            Column::new("length_over_sigma0", "1", "medium parameter L/σ0"),
            Column::new("fidelity", "1", "overlap fidelity F"),
            Column::new("cross_phase", "rad", "cross phase φ in (−π, π]"),
            Column::new("converged", "1", "1 when the overlap grid converged"),
            Column::new("grid_n", "1", "final overlap grid size"),
            Column::new("transmission", "1", "final pulse transmission"),
        ],
    );
    t.meta("geometry", format!("{geometry:?}").to_lowercase());
    let mut last_traj = None;
    for (len, run) in cfg.xpm.lengths.iter().zip(runs) {
        let label = format!("xpm L={:.6}σ0", len / sigma0);
        match run {
            Ok((traj, r)) => {
                let (res, ok): (XpmResult, bool) = match r {
                    Ok(r) => (r, true),
                    Err(best) => (best, false),
                };
                if !ok {
                    out.fail(Status::AccuracyFailure(format!(
                        "{label}: overlap grid did not converge"
                    )));
                }
                out.checks.push(Check {
                    label: label.clone(),
                    converged: ok,
                    detail: format!("grids {:?}", res.grid_sizes),
                });
                let n = *res.grid_sizes.last().unwrap_or(&cfg.xpm.grid_n) as f64;
                t.push(vec![
                    len / sigma0,
                    res.fidelity,
                    res.cross_phase,
                    f64::from(u8::from(ok)),
                    n,
                    traj.last().transmission,
                ]);
                last_traj = Some(traj);
            }
            Err(e) => out.fail(xpm_status(&e)),
        }
    }
    out.tables.push(t);
    if let Some(traj) = last_traj {
        match phase_map(&traj, &ip, &angles, cfg.xpm.profile, cfg.xpm.grid_n, exec) {
            Ok(map) => {
                let mut m = Table::new(
                    "phase_map",
                    vec![
                        Column::new("z1_over_sigma", "1", "first photon coordinate"),
                        Column::new("z2_over_sigma", "1", "second photon coordinate"),
                        Column::new("phase", "rad", "pair phase Φ(z1, z2)"),
                    ],
                );
                let s = map.z[map.len() - 1] / crate::xpm::OVERLAP_HALF_WIDTH;
                m.meta("length_over_sigma0", format!("{:.6e}", traj.length / sigma0));
                for (z1, z2, ph) in map.rows() {
                    m.push(vec![z1 / s, z2 / s, ph]);
                }
                out.tables.push(m);
            }
            Err(e) => out.fail(xpm_status(&e)),
        }
    }
}

fn slow_pass(cfg: &ScenarioConfig, exec: Exec, out: &mut RunOutput) {
    let Some(p) = params_or_fail(cfg, out) else { return };
    let ip = try_or_fail!(out, interaction_params(cfg), |e: &PotentialError| Status::PhysicsAbort(
        e.to_string()
    ));
    let angles = mixing_angles(&p);
    let res = try_or_fail!(
        out,
        slow_pass_comparison(
            &p,
            &ip,
            &angles,
            cfg.interaction.sigma,
            &propagation_options(cfg),
            &overlap_options(cfg, exec),
            cfg.xpm.vg_scale,
            cfg.xpm.slow_mode,
        ),
        xpm_status
    );
    let mut t = Table::new(
        "slow_pass",
        vec![
            Column::new("vg_scale", "1", "entry group velocity relative to nominal"),
            Column::new("fidelity", "1", "overlap fidelity F"),
            Column::new("cross_phase", "rad", "cross phase φ"),
            Column::new("converged", "1", "1 when the overlap grid converged"),
        ],
    );
    t.meta("mode", format!("{:?}", cfg.xpm.slow_mode).to_lowercase());
    for (scale, r) in [(1.0, &res.fast), (res.vg_scale, &res.slow)] {
        out.checks.push(Check {
            label: format!("slow-pass vg_scale={scale:e}"),
            converged: r.converged,
            detail: format!("grids {:?}", r.grid_sizes),
        });
        t.push(vec![scale, r.fidelity, r.cross_phase, f64::from(u8::from(r.converged))]);
    }
    out.tables.push(t);
}

/// Copy of `cfg` with the sweep axis set to `value` (SI).
pub fn apply_axis(cfg: &ScenarioConfig, axis: SweepAxis, value: f64) -> ScenarioConfig {
    let mut c = cfg.clone();
    c.sweep = None;
    match axis {
        SweepAxis::A => c.interaction.a = value,
        SweepAxis::Sigma => c.interaction.sigma = value,
        SweepAxis::C6Scale => c.interaction.c6 *= value,
        SweepAxis::DeltaR => {
            c.blockade.delta_r_start = value;
            c.blockade.delta_r_end = value;
            c.blockade.points = 1;
            c.spectrum.delta_r_values = vec![value];
        }
        SweepAxis::Delta1 => c.system.delta1 = value,
        SweepAxis::EitDetuning => {
            c.system.delta1 = value;
            c.system.delta2 = -value;
        }
        SweepAxis::OmegaC => {
            // keep g²N fixed
            let g2n = c.system.g2n_ratio * c.system.omega_c * c.system.omega_c;
            c.system.omega_c = value;
            c.system.g2n_ratio = if value > 0.0 {
                g2n / (value * value)
            } else {
                c.system.g2n_ratio
            };
        }
        SweepAxis::GammaRg => c.system.gamma_rg = value,
        SweepAxis::TargetVg => c.system.target_vg = value,
        SweepAxis::Length => {
            c.propagation.length = value;
            c.xpm.lengths = vec![value];
        }
        SweepAxis::StepFrac => c.propagation.step_frac = value,
        SweepAxis::VgScale => c.xpm.vg_scale = value,
    }
    c
}

/// Axis value in the unit used for file names and the combined column.
fn display_value(cfg: &ScenarioConfig, axis: SweepAxis, v: f64) -> (f64, &'static str) {
    match axis {
        SweepAxis::A | SweepAxis::Length => (v / cfg.interaction.sigma, "over_sigma0"),
        SweepAxis::Sigma => (v * 1e6, "um"),
        SweepAxis::DeltaR | SweepAxis::Delta1 | SweepAxis::EitDetuning | SweepAxis::OmegaC | SweepAxis::GammaRg => {
            (v / cfg.system.gamma, "over_gamma")
        }
        SweepAxis::TargetVg => (v, "m_per_s"),
        SweepAxis::C6Scale | SweepAxis::StepFrac | SweepAxis::VgScale => (v, ""),
    }
}

/// Runs the base scenario once per sweep value, concurrently, capped at
/// `threads` workers. A failing value does not stop its siblings.
pub fn run_sweep(cfg: &ScenarioConfig, exec: Exec, threads: Option<usize>) -> RunOutput {
    let mut out = RunOutput::new();
    let Some(sw) = &cfg.sweep else {
        out.fail(Status::PhysicsAbort("no [sweep] section: nothing to sweep".into()));
        return out;
    };
    let mut base_cfg = cfg.clone();
    base_cfg.scenario = sw.base;
    // the medium stays fixed while laser or geometry parameters move
    if sw.axis != SweepAxis::TargetVg && base_cfg.system.chi_amp.is_none() {
        if let Ok(p) = system_params(&base_cfg) {
            base_cfg.system.chi_amp = Some(p.chi_amp);
        }
    }
    let runs = with_thread_cap(threads, || {
        exec.map_slice(&sw.values, |&v| run_scenario(&apply_axis(&base_cfg, sw.axis, v), exec))
    });
    let axis = sw.axis.name();
    let mut combined: Vec<Table> = Vec::new();
    for (k, (v, run)) in sw.values.iter().zip(runs).enumerate() {
        let (dv, unit) = display_value(cfg, sw.axis, *v);
        let col_name = if unit.is_empty() {
            axis.to_string()
        } else {
            format!("{axis}_{unit}")
        };
        for m in &run.messages {
            out.messages.push(format!("{axis}={dv:e}: {m}"));
        }
        if run.status != Status::Clean {
            let msg = |m: &str| format!("{axis}={dv:e}: {m}");
            out.status = std::mem::replace(&mut out.status, Status::Clean).worst(match &run.status {
                Status::Clean => Status::Clean,
                Status::AccuracyFailure(m) => Status::AccuracyFailure(msg(m)),
                Status::PhysicsAbort(m) => Status::PhysicsAbort(msg(m)),
            });
        }
        for c in run.checks {
            out.checks.push(Check {
                label: format!("{axis}={dv:e} {}", c.label),
                ..c
            });
        }
        for t in run.tables {
            let mut all = match combined.iter().position(|c| c.stem == format!("{}_{axis}_all", t.stem)) {
                Some(i) => combined.remove(i),
                None => {
                    let mut cols = vec![Column::new(&col_name, "1", &format!("sweep axis {axis}"))];
                    cols.extend(t.columns.iter().cloned());
                    let mut c = Table::new(&format!("{}_{axis}_all", t.stem), cols);
                    c.meta("sweep_axis", axis);
                    c
                }
            };
            for r in &t.rows {
                let mut row = vec![dv];
                row.extend_from_slice(r);
                all.push(row);
            }
            combined.push(all);
            let mut single = t.clone();
            single.stem = format!("{}_{axis}_{k:03}", t.stem);
            single.meta.insert(0, (format!("sweep_{axis}"), format!("{dv:.11e}")));
            out.tables.push(single);
        }
    }
    combined.sort_by(|a, b| a.stem.cmp(&b.stem));
    out.tables.extend(combined);
    out
}
