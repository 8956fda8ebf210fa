//! Initial data `(T(0), T'(0))` from prescribed data at infinity
//! `(a, B, a_phase, b)`: seed far out, integrate back, repeat along a schedule.
//!
//! The seed uses the frame identity
//! `T' = beta1 (AT x T) + beta2 AT` with
//! `beta1 + i beta2 = 2 conj(y/2 + i h) / |AT|^2`,
//! and `y/2 + i h ~ (b/2) e^{-i a} e^{-i phi1}` at leading order, so
//! `omega = b e^{i (a + phi1(s0))} / |AB|^2`.

use crate::curve::{
    integrate, samples_beyond, CurveState, CurveTrajectory, DEFAULT_S_MAX, DEFAULT_TOL,
};
use crate::error::{Error, Result};
use crate::fit::{phase_distance, wrap_phase};
use crate::geom3::{apply_a, apply_inv_plus_a, apply_plus_a, rotate_z, Vec3};
use crate::nls::fbarfp_model;
use crate::selfsimilar::{extract_trace, g_of, End};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// `|B3|` at or above `1 - DEGENERATE_MARGIN` leaves `AT = 0`.
pub const DEGENERATE_MARGIN: f64 = 1e-9;
const REFINE_PASSES: usize = 4;
const MAX_EXTENSIONS: usize = 4;
// long backward runs from s0 >= 320 lose the Cauchy trend at the default tolerance
const BACKWARD_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatterRequest {
    pub a: f64,
    pub b_vec: Vec3,
    pub a_phase: f64,
    pub b_amp: f64,
    pub end: End,
}

impl ScatterRequest {
    /// `alpha = -a B3 - b^2 / (a^2 (1 - B3^2))`.
    pub fn alpha(&self) -> f64 {
        let b3 = self.b_vec.z;
        -self.a * b3 - self.b_amp * self.b_amp / (self.a * self.a * (1.0 - b3 * b3))
    }

    /// `c_inf^2 = -a B3 - alpha`.
    pub fn c_inf_sq(&self) -> f64 {
        -self.a * self.b_vec.z - self.alpha()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.a != 0.0) {
            return Err(Error::InvalidInput("a must be finite and nonzero".into()));
        }
        if !self.b_vec.is_finite() || (self.b_vec.norm() - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidInput(format!(
                "|B| - 1 = {:e}",
                self.b_vec.norm() - 1.0
            )));
        }
        if self.b_vec.z.abs() >= 1.0 - DEGENERATE_MARGIN {
            return Err(Error::DegenerateAxis { b3: self.b_vec.z });
        }
        if !(self.b_amp >= 0.0 && self.b_amp.is_finite() && self.a_phase.is_finite()) {
            return Err(Error::InvalidInput("b must be finite and >= 0".into()));
        }
        Ok(())
    }

    /// The `+inf` request for the reflected curve `G~(s) = -G(-s)`, with `B`
    /// renormalized.
    fn oriented(&self) -> ScatterRequest {
        let b_vec = self.b_vec.normalized();
        match self.end {
            End::Plus => ScatterRequest { b_vec, ..*self },
            End::Minus => ScatterRequest {
                b_vec,
                a_phase: wrap_phase(self.a_phase - PI),
                end: End::Plus,
                ..*self
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedState {
    pub s0: f64,
    pub t: Vec3,
    pub tp: Vec3,
    pub omega: Complex64,
}

impl SeedState {
    /// `G(s0)` from `(I+A) G = s T + 2 T x T'`.
    pub fn g(&self, a: f64) -> Vec3 {
        apply_inv_plus_a(a, self.s0 * self.t + 2.0 * self.t.cross(self.tp))
    }
}

fn frame_tp(a: f64, t: Vec3, omega: Complex64) -> Vec3 {
    let at = apply_a(a, t);
    omega.re * at.cross(t) + omega.im * at
}

/// Leading-order seed at `s0` for the `+inf` problem: `T = e^{A log s0} B`,
/// `T' = Re(omega) (AT x T) + Im(omega) AT` with
/// `omega = b e^{i (a_phase + phi(s0))} / |AB|^2`, `phi = s^2/4 - (3 a T3 + alpha) log s`.
pub fn seed_at(req: &ScatterRequest, s0: f64) -> Result<SeedState> {
    req.validate()?;
    if !(s0 >= 1.0) {
        return Err(Error::InvalidInput(format!("s0 = {s0} < 1")));
    }
    let req = req.oriented();
    let (a, b) = (req.a, req.b_vec);
    let t = rotate_z(a, s0.ln(), b);
    let phi = s0 * s0 / 4.0 - (3.0 * a * t.z + req.alpha()) * s0.ln();
    let omega = Complex64::from_polar(req.b_amp / apply_a(a, b).norm_sq(), req.a_phase + phi);
    Ok(SeedState {
        s0,
        t,
        tp: frame_tp(a, t, omega),
        omega,
    })
}

/// Seed corrected through the `1/s` terms of the position expansion and
/// the `s^-2` terms of `y/2 + i h`; `T'` is then rescaled onto the shell
/// `|T'|^2 = -a T3 - alpha`. Falls back to [`seed_at`] when the corrected
/// `T3` leaves that shell empty.
pub fn seed_refined(req: &ScatterRequest, s0: f64) -> Result<SeedState> {
    let lead = seed_at(req, s0)?;
    let req = req.oriented();
    let (a, b) = (req.a, req.b_vec);
    let alpha = req.alpha();
    let c2 = req.c_inf_sq();
    let gamma = 3.0 * a * b.z + alpha;
    let gamma_tilde = g_of(c2, alpha, 0.25 * a * a);
    let ls = s0.ln();
    let axis = apply_inv_plus_a(a, b);
    let g_lead =
        s0 * rotate_z(a, ls, axis) + rotate_z(a, ls, 2.0 * c2 * b - apply_a(a, b).cross(b)) / s0;
    let y = fbarfp_model(req.b_amp, req.a_phase, gamma, gamma_tilde, s0);
    let mut t = lead.t;
    for _ in 0..REFINE_PASSES {
        let omega = 2.0 * y.conj() / apply_a(a, t).norm_sq();
        let tp = frame_tp(a, t, omega);
        let g = g_lead - 4.0 * tp / (s0 * s0);
        t = ((apply_plus_a(a, g) - 2.0 * t.cross(tp)) / s0).normalized();
    }
    let mut omega = 2.0 * y.conj() / apply_a(a, t).norm_sq();
    let mut tp = frame_tp(a, t, omega);
    let shell = -a * t.z - alpha;
    if shell < 0.0 {
        // s0 too small for the corrections to make sense
        return Ok(lead);
    }
    let want = shell.sqrt();
    let n = tp.norm();
    if n > 0.0 {
        tp = tp * (want / n);
        omega *= want / n;
    }
    Ok(SeedState { s0, t, tp, omega })
}

/// Admissible curve from tangent data at `s = 0`: `(I+A) G(0) = 2 T0 x T'0`.
pub fn reconstruct_g_from_t(
    t0: Vec3,
    tp0: Vec3,
    a: f64,
    s_max: f64,
    tol: f64,
) -> Result<CurveTrajectory> {
    let t0 = t0.normalized();
    let tp0 = tp0 - tp0.dot(t0) * t0;
    let g0 = apply_inv_plus_a(a, 2.0 * t0.cross(tp0));
    integrate(g0, t0, a, s_max, tol)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InverseRun {
    pub s0: f64,
    pub t0: Vec3,
    pub tp0: Vec3,
}

/// Forward check of the recovered data against the request.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Validation {
    /// Componentwise `max |B_k - B_k(request)|`.
    pub b_vec_err: f64,
    pub b_amp_rel_err: f64,
    /// `None` when either phase is undefined.
    pub a_phase_err: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InverseResult {
    pub t0: Vec3,
    pub tp0: Vec3,
    pub alpha: f64,
    pub runs: Vec<InverseRun>,
    /// Distance between consecutive `(T(0), T'(0))` along the schedule.
    pub cauchy: Vec<f64>,
    /// How many times the schedule was doubled past its last entry.
    pub extensions: usize,
    pub validation: Validation,
}

fn run_distance(x: &InverseRun, y: &InverseRun) -> f64 {
    ((x.t0 - y.t0).norm_sq() + (x.tp0 - y.tp0).norm_sq()).sqrt()
}

fn inverse_run(req: &ScatterRequest, s0: f64) -> Result<InverseRun> {
    let seed = seed_refined(req, s0)?;
    let a = req.a;
    let start = CurveState {
        s: s0,
        g: seed.g(a),
        t: seed.t,
    };
    let at0 = samples_beyond(start, a, &[0.0], BACKWARD_TOL)?[0];
    // undo the reflection: T(s) = T~(-s), T'(s) = -T~'(-s)
    let tp0 = match req.end {
        End::Plus => at0.tp,
        End::Minus => -at0.tp,
    };
    Ok(InverseRun { s0, t0: at0.t, tp0 })
}

fn validate_forward(req: &ScatterRequest, t0: Vec3, tp0: Vec3, tol: f64) -> Result<Validation> {
    let traj = reconstruct_g_from_t(t0, tp0, req.a, DEFAULT_S_MAX, DEFAULT_TOL)?;
    let trace = extract_trace(&traj)?;
    let e = trace.end(req.end);
    let d = e.tangent_limit - req.b_vec;
    let b_vec_err = d.x.abs().max(d.y.abs()).max(d.z.abs());
    let b_amp_rel_err = if req.b_amp > 0.0 {
        (e.b - req.b_amp).abs() / req.b_amp
    } else {
        e.b
    };
    let a_phase_err = e
        .a_phase
        .filter(|_| req.b_amp > 0.0)
        .map(|x| phase_distance(x, req.a_phase));
    let pass = b_vec_err <= 10.0 * tol
        && (if req.b_amp > 0.0 {
            b_amp_rel_err <= 0.01
        } else {
            b_amp_rel_err <= 10.0 * tol
        })
        && a_phase_err.map_or(true, |x| x <= 0.1);
    Ok(Validation {
        b_vec_err,
        b_amp_rel_err,
        a_phase_err,
        pass,
    })
}

/// Seed at each entry of the schedule (in parallel) and integrate back to
/// `s = 0`. The schedule is doubled (up to four times) until the Cauchy
/// differences decrease with the last one below `tol`; the result is then
/// re-integrated forward and its trace compared with the request.
pub fn solve_inverse(req: &ScatterRequest, s_schedule: &[f64], tol: f64) -> Result<InverseResult> {
    req.validate()?;
    if s_schedule.len() < 2 || s_schedule.windows(2).any(|w| w[1] <= w[0]) || s_schedule[0] < 1.0 {
        return Err(Error::InvalidInput(
            "schedule must be increasing, start at >= 1 and have >= 2 entries".into(),
        ));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tol = {tol}")));
    }
    let mut runs: Vec<InverseRun> = s_schedule
        .par_iter()
        .map(|&s0| inverse_run(req, s0))
        .collect::<Result<_>>()?;
    let mut extensions = 0;
    loop {
        let cauchy: Vec<f64> = runs
            .windows(2)
            .map(|w| run_distance(&w[0], &w[1]))
            .collect();
        let last = *cauchy.last().unwrap();
        let decreasing = cauchy.windows(2).all(|w| w[1] < w[0] || w[0] <= 1e-12);
        if decreasing && last < tol {
            let fin = *runs.last().unwrap();
            let validation = validate_forward(req, fin.t0, fin.tp0, tol)?;
            return Ok(InverseResult {
                t0: fin.t0,
                tp0: fin.tp0,
                alpha: req.alpha(),
                runs,
                cauchy,
                extensions,
                validation,
            });
        }
        if extensions == MAX_EXTENSIONS {
            return Err(Error::NotConverging(format!(
                "Cauchy differences {cauchy:?}"
            )));
        }
        extensions += 1;
        let next = 2.0 * runs.last().unwrap().s0;
        runs.push(inverse_run(req, next)?);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request(b_amp: f64) -> ScatterRequest {
        ScatterRequest {
            a: 10.0,
            b_vec: Vec3::new(0.75f64.sqrt(), 0.0, 0.5),
            a_phase: 1.0,
            b_amp,
            end: End::Plus,
        }
    }

    #[test]
    fn seed_on_shell() {
        // alpha = -6: c_inf^2 = -10 * 0.5 + 6 = 1, b^2 = 100 * 1 * 0.75
        let req = request(75f64.sqrt());
        assert!((req.alpha() + 6.0).abs() < 1e-12);
        for s0 in [5.0, 20.0, 40.0] {
            let sd = seed_at(&req, s0).unwrap();
            assert!((sd.t.norm() - 1.0).abs() < 1e-12);
            assert!(sd.t.dot(sd.tp).abs() < 1e-12);
            assert!((sd.tp.norm_sq() - 1.0).abs() < 1e-12, "{}", sd.tp.norm_sq());
            let ab = apply_a(10.0, req.b_vec).norm_sq();
            assert!((sd.omega.norm_sqr() - 75.0 / (ab * ab)).abs() < 1e-12);
            let r = seed_refined(&req, s0).unwrap();
            assert!((r.tp.norm_sq() + 10.0 * r.t.z - 6.0).abs() < 1e-12);
            assert!(apply_plus_a(10.0, r.g(10.0)).dot(r.t) - s0 < 1e-12);
        }
    }

    #[test]
    fn zero_amplitude_seed() {
        let req = request(0.0);
        let sd = seed_at(&req, 20.0).unwrap();
        assert_eq!(sd.omega, Complex64::new(0.0, 0.0));
        assert_eq!(sd.tp, Vec3::ZERO);
        assert!((req.alpha() + 5.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_axis() {
        let mut req = request(1.0);
        req.b_vec = Vec3::E3;
        assert!(matches!(
            seed_at(&req, 10.0),
            Err(Error::DegenerateAxis { .. })
        ));
    }

    #[test]
    fn reconstruct_examples() {
        let tr = reconstruct_g_from_t(Vec3::E1, Vec3::ZERO, 3.0, 5.0, 1e-10).unwrap();
        assert_eq!(tr.g(0.0), Vec3::ZERO);
        let tr = reconstruct_g_from_t(Vec3::E1, Vec3::E2, 0.0, 5.0, 1e-10).unwrap();
        assert!((tr.g(0.0) - Vec3::new(0.0, 0.0, 2.0)).norm() < 1e-15);
    }
}
