//! One function per subcommand. Each writes its artifacts into `out` and
//! returns the paths written.

use crate::config::*;
use crate::output::{csv_text, OutDir, TrajectoryFile};
use crate::plot::{emit_plot_script, PlotStyle};
use crate::RunError;
use binormal_core::curve::{integrate, shift_origin, CurveTrajectory, DEFAULT_S_MAX, DEFAULT_TOL};
use binormal_core::families::{
    brute_force_intersections, build_singular_solution, check_g3_ode, demonstrate_nonuniqueness,
    detect_self_intersection, find_plane_spiral, mixed_family, odd_family,
};
use binormal_core::geom3::apply_plus_a;
use binormal_core::nls::{
    extract_f_limits, f_scatter_inverse, integrate_f, profile_from_curve, verify_f_asymptotics,
    w1_consistency, NlsProfile,
};
use binormal_core::scattering::{reconstruct_g_from_t, solve_inverse, ScatterRequest};
use binormal_core::selfsimilar::{convergence_check, extract_trace, verify_asymptotics, End};
use binormal_core::Vec3;
use num_complex::Complex64;
use serde_json::json;
use std::path::PathBuf;

pub type Artifacts = Vec<PathBuf>;

/// Data off the slice `(I+A)G(0).T(0) = 0` by more than this is rejected
/// unless `--shift-origin` is given.
const SLICE_TOL: f64 = 1e-9;
/// Zoom radius of the second plot panel.
pub const ZOOM: f64 = 3.0;

pub fn curve_trajectory(c: &CurveArgs) -> Result<CurveTrajectory, RunError> {
    let (mut g0, mut t0) = (Vec3::from_array(c.g0), Vec3::from_array(c.t0));
    let s0 = apply_plus_a(c.a, g0).dot(t0);
    if s0.abs() > SLICE_TOL {
        if !c.shift_origin {
            return Err(RunError::Validation(format!(
                "(I+A)G0.T0 = {s0} is not 0; pass --shift-origin to follow the flow onto the slice"
            )));
        }
        let (g, t, _) = shift_origin(g0, t0, c.a, c.tol)?;
        g0 = g;
        t0 = t;
    }
    Ok(integrate(g0, t0, c.a, c.smax, c.tol)?)
}

/// Trajectory CSV plus its plot script.
pub fn write_trajectory(
    out: &OutDir,
    stem: &str,
    traj: &CurveTrajectory,
    ds: f64,
    title: &str,
    zoom: Option<f64>,
) -> Result<(TrajectoryFile, Artifacts), RunError> {
    let trace = extract_trace(traj).map_err(|e| e.to_string());
    let file = TrajectoryFile::build(traj, ds, trace);
    let csv = out.text(&format!("{stem}.csv"), &file.to_text())?;
    let style = PlotStyle {
        title: title.to_string(),
        output: format!("{stem}.png"),
        zoom,
    };
    let script = emit_plot_script(&csv, &style)?;
    let gp = out.text(&format!("{stem}.gp"), &script)?;
    Ok((file, vec![csv, gp]))
}

pub fn integrate_cmd(x: &IntegrateArgs, out: &OutDir) -> Result<Artifacts, RunError> {
    let traj = curve_trajectory(&x.curve)?;
    let title = format!("a = {}", x.curve.a);
    let (file, mut arts) = write_trajectory(out, "trajectory", &traj, x.ds, &title, None)?;
    arts.push(out.json("summary.json", &file.header)?);
    Ok(arts)
}

pub fn trace_cmd(c: &CurveArgs, out: &OutDir) -> Result<Artifacts, RunError> {
    let traj = curve_trajectory(c)?;
    let trace = extract_trace(&traj)?;
    let (ap, am) = (trace.a_plus(), trace.a_minus());
    let block = json!({
        "params": traj.params,
        "trace": trace,
        "axis_norm_defect": [(ap.norm() - 1.0).abs(), (am.norm() - 1.0).abs()],
        "tangent_norm_defect": [trace.plus.b_norm_defect(), trace.minus.b_norm_defect()],
    });
    Ok(vec![out.json("trace.json", &block)?])
}

pub fn verify_asymptotics_cmd(c: &CurveArgs, out: &OutDir) -> Result<Artifacts, RunError> {
    let traj = curve_trajectory(c)?;
    let trace = extract_trace(&traj)?;
    let curve = verify_asymptotics(&traj, &trace);
    let profile = profile_from_curve(&traj)?;
    let limits = extract_f_limits(&profile)?;
    let prof = verify_f_asymptotics(&profile, &limits);
    let all_pass = curve.iter().all(|r| r.pass) && prof.iter().all(|r| r.pass);
    let block = json!({
        "params": traj.params,
        "curve": curve,
        "profile": prof,
        "all_pass": all_pass,
    });
    Ok(vec![out.json("asymptotics.json", &block)?])
}

pub fn convergence_cmd(x: &ConvergenceArgs, out: &OutDir) -> Result<Artifacts, RunError> {
    let traj = curve_trajectory(&x.curve)?;
    let trace = extract_trace(&traj)?;
    let rows = convergence_check(&traj, &trace, &x.times)?;
    let block = json!({
        "params": traj.params,
        "rows": rows,
        "all_hold": rows.iter().all(|r| r.holds()),
    });
    Ok(vec![out.json("convergence.json", &block)?])
}

fn profile_rows(p: &NlsProfile, ds: f64) -> Vec<Vec<f64>> {
    let s_max = p.s_max();
    p.uniform_samples(-s_max, s_max, ds)
        .iter()
        .map(|q| {
            let (m, y, h) = q.yh();
            vec![q.s, q.f.re, q.f.im, q.fp.re, q.fp.im, m, y, h]
        })
        .collect()
}

const PROFILE_COLUMNS: [&str; 8] = ["s", "re_f", "im_f", "re_fp", "im_fp", "mod_f_sq", "y", "h"];

pub fn nls_cmd(x: &NlsArgs, out: &OutDir) -> Result<Artifacts, RunError> {
    let f0 = Complex64::new(x.f0[0], x.f0[1]);
    let fp0 = Complex64::new(x.fp0[0], x.fp0[1]);
    let p = integrate_f(f0, fp0, x.alpha, x.smax, x.tol)?;
    let limits = extract_f_limits(&p)?;
    let reports = verify_f_asymptotics(&p, &limits);
    let w1 = |end| w1_consistency(&p, &limits, end, None).ok();
    let csv = out.text(
        "profile.csv",
        &csv_text(&PROFILE_COLUMNS, &profile_rows(&p, x.ds), &[]),
    )?;
    let block = json!({
        "alpha": p.alpha,
        "e0": p.e0,
        "energy_drift": p.energy_drift,
        "steps": p.n_steps(),
        "limits": limits,
        "asymptotics": reports,
        "w1_consistency": { "plus": w1(End::Plus), "minus": w1(End::Minus) },
    });
    Ok(vec![csv, out.json("nls.json", &block)?])
}

pub fn nls_scatter_cmd(x: &NlsScatterArgs, out: &OutDir) -> Result<Artifacts, RunError> {
    let r = f_scatter_inverse(
        x.mod_f,
        x.theta1,
        x.mod_fp,
        x.theta2,
        x.alpha,
        &x.schedule,
        x.tol,
    )?;
    let p = integrate_f(r.f0, r.fp0, x.alpha, DEFAULT_S_MAX, DEFAULT_TOL)?;
    let lim = extract_f_limits(&p)?.plus;
    let phase = |got: Option<f64>, want: f64| {
        got.map(|g| binormal_core::fit::phase_distance(g, want))
    };
    let block = json!({
        "request": x,
        "result": r,
        "forward": lim,
        "errors": {
            "mod_f": (lim.mod_f_inf - x.mod_f).abs(),
            "mod_fp": (lim.mod_fp_inf - x.mod_fp).abs(),
            "theta1": phase(lim.c_phase, x.theta1),
            "theta2": phase(lim.d_phase, x.theta2),
        },
    });
    Ok(vec![out.json("nls_scatter.json", &block)?])
}

pub fn scatter_cmd(x: &ScatterArgs, out: &OutDir) -> Result<Artifacts, RunError> {
    let req = ScatterRequest {
        a: x.a,
        b_vec: Vec3::from_array(x.b_vec),
        a_phase: x.a_phase,
        b_amp: x.b_amp,
        end: match x.end {
            EndArg::Plus => End::Plus,
            EndArg::Minus => End::Minus,
        },
    };
    let r = solve_inverse(&req, &x.schedule, x.tol)?;
    let traj = reconstruct_g_from_t(r.t0, r.tp0, x.a, DEFAULT_S_MAX, DEFAULT_TOL)?;
    let title = format!("reconstructed, a = {}", x.a);
    let (_, mut arts) = write_trajectory(out, "trajectory", &traj, 0.01, &title, None)?;
    arts.push(out.json("inverse.json", &json!({ "request": req, "result": r }))?);
    Ok(arts)
}

pub fn odd_cmd(x: &OddArgs, out: &OutDir) -> Result<Artifacts, RunError> {
    let (traj, pt) = odd_family(x.a, x.delta, x.smax)?;
    let title = format!("odd, a = {}, delta = {}", x.a, x.delta);
    let (_, mut arts) = write_trajectory(out, "trajectory", &traj, 0.01, &title, Some(ZOOM))?;
    arts.push(out.json("odd.json", &pt)?);
    Ok(arts)
}

pub fn plane_spiral_cmd(x: &PlaneSpiralArgs, out: &OutDir) -> Result<Artifacts, RunError> {
    let r = find_plane_spiral(x.a, x.tol_delta)?;
    Ok(vec![out.json("plane_spiral.json", &r)?])
}

pub fn mixed_cmd(x: &MixedArgs, out: &OutDir) -> Result<Artifacts, RunError> {
    let (traj, pt) = mixed_family(x.a, x.c0, x.sign, x.smax)?;
    let title = format!("mixed, a = {}, c0 = {}, T3(0) = {}", x.a, x.c0, x.sign);
    let (_, mut arts) = write_trajectory(out, "trajectory", &traj, 0.01, &title, Some(ZOOM))?;
    let block = json!({
        "point": pt,
        "self_intersections": detect_self_intersection(&traj),
        "g3_ode": check_g3_ode(&traj),
    });
    arts.push(out.json("mixed.json", &block)?);
    Ok(arts)
}

pub fn self_intersect_cmd(x: &SelfIntersectArgs, out: &OutDir) -> Result<Artifacts, RunError> {
    let m = &x.mixed;
    let (traj, pt) = mixed_family(m.a, m.c0, m.sign, m.smax)?;
    let found = detect_self_intersection(&traj);
    let brute = x
        .brute
        .then(|| brute_force_intersections(&traj, x.brute_lim.min(traj.s_max()), 0.02, 1e-4));
    let block = json!({
        "point": pt,
        "detected": found,
        "brute_force": brute,
    });
    Ok(vec![out.json("intersections.json", &block)?])
}

pub fn singular_cmd(x: &SingularArgs, out: &OutDir) -> Result<Artifacts, RunError> {
    let sol = build_singular_solution(x.c0, x.smax)?;
    let s_max = sol.base.s_max();
    let n = (2.0 * s_max / 0.01).round() as usize;
    let rows: Vec<Vec<f64>> = (0..=n)
        .map(|i| {
            let s = -s_max + 2.0 * s_max * i as f64 / n as f64;
            let (g, t) = (sol.g(s), sol.t(s));
            vec![s, g.x, g.y, g.z, t.x, t.y, t.z]
        })
        .collect();
    let cols = ["s", "G1", "G2", "G3", "T1", "T2", "T3"];
    let csv = out.text("singular.csv", &csv_text(&cols, &rows, &[]))?;
    let block = json!({
        "c0": sol.c0,
        "a_plus": sol.a_plus,
        "a_minus": sol.a_minus,
        "tangent_at_corner": sol.tangent_at_corner(),
        "checks": sol.checks(),
    });
    Ok(vec![csv, out.json("singular.json", &block)?])
}

pub fn nonuniqueness_cmd(x: &NonUniquenessArgs, out: &OutDir) -> Result<Artifacts, RunError> {
    let r = demonstrate_nonuniqueness(x.c0)?;
    Ok(vec![out.json("nonuniqueness.json", &r)?])
}
