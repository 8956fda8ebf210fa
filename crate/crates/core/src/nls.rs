//! The profile equation `f'' + i (s/2) f' + f (|f|^2 + alpha)/2 = 0`, its real
//! reduction `(y, h)`, the limits at infinity and the `w1` fixed point.
//!
//! As on the curve side, `s -> -inf` is handled on the reflection
//! `f~(s) = f(-s)`, which solves the same equation.

use crate::curve::{check_tol, curve_options, yh_at, CurveTrajectory};
use crate::error::{Error, Result};
use crate::fit::{decay_slope, log_nodes, lstsq, wrap_phase};
use crate::ode::{integrate_branch, integrate_two_sided, sample_streaming, DenseSolution};
use crate::selfsimilar::{
    asymptotic_start, fit_oscillation, g_of, lambda_phase, w1_bracket, w1_tail, End, B_PHASE_FLOOR,
    FIT_BINS, FIT_NODES, ORDER_MARGIN, RESIDUAL_FLOOR, S_CAP,
};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Below this `|f|_inf` the phase `c` at infinity is not defined.
pub const F_PHASE_FLOOR: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NlsState {
    pub s: f64,
    pub f: Complex64,
    pub fp: Complex64,
}

impl NlsState {
    /// `|f'|^2 + (|f|^2 + alpha)^2 / 4`.
    pub fn energy(&self, alpha: f64) -> f64 {
        self.fp.norm_sqr() + 0.25 * (self.f.norm_sqr() + alpha).powi(2)
    }

    /// `(|f|^2, y, h)` with `y/2 + i h = conj(f) f'`.
    pub fn yh(&self) -> (f64, f64, f64) {
        let p = self.f.conj() * self.fp;
        (self.f.norm_sqr(), 2.0 * p.re, p.im)
    }

    fn reflected(&self) -> NlsState {
        NlsState {
            s: -self.s,
            f: self.f,
            fp: -self.fp,
        }
    }
}

pub(crate) fn rhs4(alpha: f64) -> impl Fn(f64, &[f64; 4]) -> [f64; 4] + Sync {
    move |s, x| {
        let m = 0.5 * (x[0] * x[0] + x[1] * x[1] + alpha);
        [
            x[2],
            x[3],
            0.5 * s * x[3] - m * x[0],
            -0.5 * s * x[2] - m * x[1],
        ]
    }
}

fn pack(f: Complex64, fp: Complex64) -> [f64; 4] {
    [f.re, f.im, fp.re, fp.im]
}

fn unpack(s: f64, x: &[f64; 4]) -> NlsState {
    NlsState {
        s,
        f: Complex64::new(x[0], x[1]),
        fp: Complex64::new(x[2], x[3]),
    }
}

#[derive(Clone, Debug)]
pub struct NlsProfile {
    pub alpha: f64,
    pub e0: f64,
    pub tol: f64,
    /// `max |E(s) - E(0)|` over the accepted steps.
    pub energy_drift: f64,
    sol: DenseSolution<4>,
}

impl NlsProfile {
    pub fn lo(&self) -> f64 {
        self.sol.lo()
    }

    pub fn hi(&self) -> f64 {
        self.sol.hi()
    }

    /// Largest `S` with `[-S, S]` covered.
    pub fn s_max(&self) -> f64 {
        self.hi().min(-self.lo())
    }

    pub fn contains(&self, s: f64) -> bool {
        self.sol.contains(s)
    }

    pub fn n_steps(&self) -> usize {
        self.sol.n_steps()
    }

    pub fn state(&self, s: f64) -> NlsState {
        unpack(s, &self.sol.eval(s))
    }

    pub fn f(&self, s: f64) -> Complex64 {
        self.state(s).f
    }

    /// State of `f~(s) = f(-s)` at `s` when `end` is `Minus`.
    pub fn oriented(&self, end: End, s: f64) -> NlsState {
        match end {
            End::Plus => self.state(s),
            End::Minus => {
                let mut st = self.state(-s).reflected();
                st.s = s;
                st
            }
        }
    }

    pub fn samples(&self) -> Vec<NlsState> {
        (0..self.sol.knots().len())
            .map(|i| unpack(self.sol.knots()[i], &self.sol.knot_state(i)))
            .collect()
    }

    pub fn uniform_samples(&self, lo: f64, hi: f64, ds: f64) -> Vec<NlsState> {
        let n = ((hi - lo) / ds).round().max(1.0) as usize;
        (0..=n)
            .map(|i| self.state(lo + (hi - lo) * i as f64 / n as f64))
            .collect()
    }
}

/// Integrate from an arbitrary state over `[lo, hi]`.
pub fn integrate_f_range(
    start: NlsState,
    alpha: f64,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<NlsProfile> {
    check_tol(tol)?;
    if !start.f.is_finite() || !start.fp.is_finite() || !alpha.is_finite() {
        return Err(Error::InvalidInput("non-finite profile data".into()));
    }
    let sol = integrate_two_sided(
        &rhs4(alpha),
        start.s,
        pack(start.f, start.fp),
        lo,
        hi,
        &curve_options(tol),
    )?;
    let e0 = start.energy(alpha);
    let energy_drift = (0..sol.knots().len())
        .map(|i| (unpack(0.0, &sol.knot_state(i)).energy(alpha) - e0).abs())
        .fold(0.0, f64::max);
    Ok(NlsProfile {
        alpha,
        e0,
        tol,
        energy_drift,
        sol,
    })
}

/// Integrate `(f(0), f'(0))` over `[-s_max, s_max]`.
pub fn integrate_f(
    f0: Complex64,
    fp0: Complex64,
    alpha: f64,
    s_max: f64,
    tol: f64,
) -> Result<NlsProfile> {
    if !(s_max > 0.0) {
        return Err(Error::InvalidInput(format!(
            "s_max = {s_max} must be positive"
        )));
    }
    integrate_f_range(
        NlsState {
            s: 0.0,
            f: f0,
            fp: fp0,
        },
        alpha,
        -s_max,
        s_max,
        tol,
    )
}

/// The profile of a curve: `|f| = c` and `conj(f) f' = y/2 + i h`, with the
/// gauge fixed by `f(0) >= 0`.
///
/// Rather than unwrapping the torsion integral, the profile equation is
/// integrated from data built at `s = 0`, so `f` stays defined through
/// zeros of the curvature.
pub fn profile_from_curve(traj: &CurveTrajectory) -> Result<NlsProfile> {
    if !traj.contains(0.0) {
        return Err(Error::InvalidInput(
            "the trajectory must contain s = 0".into(),
        ));
    }
    let a = traj.a();
    let alpha = traj.params.alpha;
    let e0 = 0.25 * a * a;
    let p = traj.sample(0.0);
    let c0 = p.tp.norm();
    let yh = yh_at(a, &p);
    let q = Complex64::new(0.5 * yh.y, yh.h);
    let fp0 = if c0 >= 1e-3 {
        q / c0
    } else {
        let m = (e0 - 0.25 * (c0 * c0 + alpha).powi(2)).max(0.0).sqrt();
        let ph = if q.norm() > 0.0 { q.arg() } else { 0.0 };
        Complex64::from_polar(m, ph)
    };
    let mut prof = integrate_f_range(
        NlsState {
            s: 0.0,
            f: Complex64::new(c0, 0.0),
            fp: fp0,
        },
        alpha,
        traj.lo(),
        traj.hi(),
        traj.tol,
    )?;
    prof.e0 = e0;
    Ok(prof)
}

/// `(y, s h + g(|f|^2), -s y / 4)`.
pub fn yh_rhs(s: f64, v: [f64; 3], alpha: f64, e0: f64) -> [f64; 3] {
    let [f2, y, h] = v;
    [y, s * h + g_of(f2, alpha, e0), -0.25 * s * y]
}

/// `t^{-1/2} e^{i s^2/(4t)} f(s/sqrt t)`.
pub fn psi(profile: &NlsProfile, s: f64, t: f64) -> Result<Complex64> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("t = {t} must be positive")));
    }
    let x = s / t.sqrt();
    if !profile.contains(x) {
        return Err(Error::RangeExceeded {
            scaled: x.abs(),
            s_max: profile.s_max(),
        });
    }
    Ok(Complex64::from_polar(t.powf(-0.5), s * s / (4.0 * t)) * profile.f(x))
}

/// Limits at one end.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FEndLimits {
    pub end: End,
    pub mod_f_inf: f64,
    pub mod_fp_inf: f64,
    /// `None` when `|f|_inf` is below `F_PHASE_FLOOR`.
    pub c_phase: Option<f64>,
    /// `c - a`; needs both phases.
    pub d_phase: Option<f64>,
    /// `None` when `b` is below `B_PHASE_FLOOR`.
    pub a_phase: Option<f64>,
    pub gamma: f64,
    pub gamma_tilde: f64,
    /// Fitted amplitude of `conj(f) f'` (times two).
    pub b: f64,
    /// `2 |f|_inf |f'|_inf`.
    pub b_closed: f64,
    /// `sqrt(4 |f|^2 (E0 - (|f|^2 + alpha)^2/4))`.
    pub b_energy: f64,
    pub window: (f64, f64),
}

impl FEndLimits {
    /// `(a, c, d)` as seen on the oriented profile.
    fn oriented_phases(&self) -> (f64, f64, f64) {
        let shift = match self.end {
            End::Plus => 0.0,
            End::Minus => PI,
        };
        (
            self.a_phase.map_or(0.0, |x| x - shift),
            self.c_phase.unwrap_or(0.0),
            self.d_phase.map_or(0.0, |x| x - shift),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FLimits {
    pub alpha: f64,
    pub e0: f64,
    pub plus: FEndLimits,
    pub minus: FEndLimits,
}

impl FLimits {
    pub fn end(&self, end: End) -> &FEndLimits {
        match end {
            End::Plus => &self.plus,
            End::Minus => &self.minus,
        }
    }
}

fn window_states(profile: &NlsProfile, end: End, nodes: &[f64]) -> Result<Vec<NlsState>> {
    let s_hi = profile.s_max();
    let split = nodes.partition_point(|&s| s <= s_hi);
    let mut out: Vec<NlsState> = nodes[..split]
        .iter()
        .map(|&s| profile.oriented(end, s))
        .collect();
    if split < nodes.len() {
        let st = profile.oriented(end, s_hi);
        let mut opts = curve_options(profile.tol);
        opts.max_steps = usize::MAX;
        let xs = sample_streaming(
            &rhs4(profile.alpha),
            s_hi,
            pack(st.f, st.fp),
            &nodes[split..],
            &opts,
        )?;
        out.extend(nodes[split..].iter().zip(xs).map(|(&s, x)| unpack(s, &x)));
    }
    Ok(out)
}

/// `|f|^2 + 4h/s = L - 2 gamma~/s^2 + ...`; returns `L`.
fn fit_mod_sq(smp: &[NlsState]) -> f64 {
    let rows: Vec<Vec<f64>> = smp
        .iter()
        .map(|p| vec![1.0, p.s.powi(-2), p.s.powi(-4)])
        .collect();
    let ys: Vec<f64> = smp
        .iter()
        .map(|p| {
            let (f2, _, h) = p.yh();
            f2 + 4.0 * h / p.s
        })
        .collect();
    lstsq(&rows, &ys)[0].max(0.0)
}

fn extract_f_end(profile: &NlsProfile, end: End) -> Result<FEndLimits> {
    let alpha = profile.alpha;
    let e0 = profile.e0;
    let s_max = profile.s_max();
    if s_max < 20.0 {
        return Err(Error::WindowTooShort {
            lo: s_max / 3.0,
            hi: s_max,
            detail: "the profile must reach |s| = 20".into(),
        });
    }
    let mut s_lo = s_max / 3.0;
    let mut nodes = log_nodes(s_lo, s_max, FIT_NODES);
    let mut smp = window_states(profile, end, &nodes)?;
    let mut l = fit_mod_sq(&smp);
    for _ in 0..3 {
        let want =
            asymptotic_start(-3.0 * l - 2.0 * alpha, g_of(l, alpha, e0), e0).min(S_CAP / 3.0);
        if want <= s_lo * 1.05 {
            break;
        }
        s_lo = want;
        nodes = log_nodes(s_lo, 3.0 * s_lo, FIT_NODES);
        smp = window_states(profile, end, &nodes)?;
        l = fit_mod_sq(&smp);
    }
    let gamma = -3.0 * l - 2.0 * alpha;
    let gamma_tilde = g_of(l, alpha, e0);
    let disc = e0 - 0.25 * (l + alpha).powi(2);
    if disc < -1e-8 * (1.0 + e0) {
        return Err(Error::NegativeDiscriminant { value: disc });
    }
    let mod_fp = disc.max(0.0).sqrt();
    let mod_f = l.sqrt();

    let yh: Vec<(f64, f64, f64, f64)> = smp
        .iter()
        .map(|p| {
            let (f2, y, h) = p.yh();
            (p.s, f2, y, h)
        })
        .collect();
    let (b, a_or) = match fit_oscillation(&yh, alpha, e0, gamma, gamma_tilde) {
        Some((b, ph)) if b >= B_PHASE_FLOOR => (b, Some(ph)),
        Some((b, _)) => (b, None),
        None => (0.0, None),
    };

    // (f - 2i f'/s) e^{-i phi2} / (1 + k/s^2) -> |f| e^{ic}, k from the f expansion
    let c_or = if mod_f >= F_PHASE_FLOOR {
        let k = Complex64::new(l + alpha, alpha * (l + alpha) - 2.0 * gamma_tilde);
        let mut acc = Complex64::new(0.0, 0.0);
        for p in &smp {
            let s = p.s;
            let rot = Complex64::from_polar(1.0, -(l + alpha) * s.ln());
            acc += (p.f - 2.0 * I * p.fp / s) * rot / (1.0 + k / (s * s));
        }
        Some(wrap_phase(acc.arg()))
    } else {
        None
    };
    let shift = match end {
        End::Plus => 0.0,
        End::Minus => PI,
    };
    let a_phase = a_or.map(|x| wrap_phase(x + shift));
    let d_phase = match (c_or, a_or) {
        (Some(c), Some(a)) => Some(wrap_phase(c - a + shift)),
        _ => None,
    };
    Ok(FEndLimits {
        end,
        mod_f_inf: mod_f,
        mod_fp_inf: mod_fp,
        c_phase: c_or,
        d_phase,
        a_phase,
        gamma,
        gamma_tilde,
        b,
        b_closed: 2.0 * mod_f * mod_fp,
        b_energy: (4.0 * l * disc).max(0.0).sqrt(),
        window: (s_lo, *nodes.last().unwrap()),
    })
}

/// `|f|_inf`, `|f'|_inf`, the phases and `gamma, gamma~, b` at both ends.
pub fn extract_f_limits(profile: &NlsProfile) -> Result<FLimits> {
    let (plus, minus) = rayon::join(
        || extract_f_end(profile, End::Plus),
        || extract_f_end(profile, End::Minus),
    );
    Ok(FLimits {
        alpha: profile.alpha,
        e0: profile.e0,
        plus: plus?,
        minus: minus?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FPart {
    /// `|f|^2 = L - 4h/s - 2 gamma~/s^2 + O(s^-3)`
    ModSq,
    /// `conj(f) f'` through second order
    FbarFp,
    /// `f` through second order, needs `|f|_inf > 0`
    F,
    /// `f'` through second order, needs `|f|_inf > 0`
    Fp,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FOrderReport {
    pub end: End,
    pub part: FPart,
    pub claimed: f64,
    pub slope: Option<f64>,
    pub max_residual: f64,
    pub pass: bool,
}

fn f_residual(lim: &FEndLimits, alpha: f64, part: FPart, p: &NlsState) -> f64 {
    let s = p.s;
    let l = lim.mod_f_inf * lim.mod_f_inf;
    let (g, gt) = (lim.gamma, lim.gamma_tilde);
    let (a, c, _) = lim.oriented_phases();
    match part {
        FPart::ModSq => {
            let (f2, _, h) = p.yh();
            (f2 - (l - 4.0 * h / s - 2.0 * gt / (s * s))).abs()
        }
        FPart::FbarFp => (p.f.conj() * p.fp - fbarfp_model(lim.b, a, g, gt, s)).norm(),
        FPart::F => (p.f - f_model(lim.mod_f_inf, lim.mod_fp_inf, c, a, alpha, g, gt, s).0).norm(),
        FPart::Fp => {
            (p.fp - f_model(lim.mod_f_inf, lim.mod_fp_inf, c, a, alpha, g, gt, s).1).norm()
        }
    }
}

/// `conj(f) f' = y/2 + i h` through `s^-2`.
pub(crate) fn fbarfp_model(b: f64, a: f64, g: f64, gt: f64, s: f64) -> Complex64 {
    let phi1 = s * s / 4.0 - g * s.ln();
    let osc = Complex64::from_polar(1.0, -a - phi1);
    0.5 * b * osc - I * gt / s + 0.5 * b * Complex64::new(g, 3.0 * gt - 0.5 * g * g) * osc / (s * s)
        - 0.5 * b * g * osc.conj() / (s * s)
}

/// `(f, f')` through `s^-2` on the oriented profile.
#[allow(clippy::too_many_arguments)]
fn f_model(
    mf: f64,
    mfp: f64,
    c: f64,
    a: f64,
    alpha: f64,
    g: f64,
    gt: f64,
    s: f64,
) -> (Complex64, Complex64) {
    let l = mf * mf;
    let ls = s.ln();
    let phi1 = s * s / 4.0 - g * ls;
    let phi2 = (l + alpha) * ls;
    let phi3 = phi2 - phi1;
    let d = c - a;
    let e = |x: f64| Complex64::from_polar(1.0, x);
    let s2 = s * s;
    let f = mf
        * e(c + phi2)
        * (1.0 + Complex64::new(-(l + alpha), alpha * (l + alpha) - 2.0 * gt) / s2)
        + 2.0 * I * mfp * e(d + phi3) / s;
    let fp = mfp
        * e(d + phi3)
        * (1.0 + Complex64::new(-(2.0 * l + alpha), gt - 0.5 * g * g + alpha * (l + alpha)) / s2)
        + I * mf * (l + alpha) * e(c + phi2) / s
        + mfp * l * e(c + a + phi2 + phi1) / s2;
    (f, fp)
}

/// Decay orders of the expansions over `[S/3, S]` at both ends. `F` and
/// `Fp` are skipped where `|f|_inf` vanishes; `FbarFp` where `b` does.
pub fn verify_f_asymptotics(profile: &NlsProfile, limits: &FLimits) -> Vec<FOrderReport> {
    let hi = profile.s_max();
    let nodes = log_nodes(hi / 3.0, hi, FIT_NODES);
    let mut out = Vec::new();
    for end in [End::Plus, End::Minus] {
        let lim = limits.end(end);
        let states: Vec<NlsState> = nodes.iter().map(|&s| profile.oriented(end, s)).collect();
        for part in [FPart::ModSq, FPart::FbarFp, FPart::F, FPart::Fp] {
            let skip = match part {
                FPart::F | FPart::Fp => {
                    lim.c_phase.is_none() || (lim.b > B_PHASE_FLOOR && lim.a_phase.is_none())
                }
                FPart::FbarFp => lim.b > B_PHASE_FLOOR && lim.a_phase.is_none(),
                FPart::ModSq => false,
            };
            if skip {
                continue;
            }
            let r: Vec<f64> = states
                .iter()
                .map(|p| f_residual(lim, limits.alpha, part, p))
                .collect();
            let max_residual = r.iter().cloned().fold(0.0, f64::max);
            let slope = decay_slope(&nodes, &r, FIT_BINS, RESIDUAL_FLOOR);
            let claimed = -3.0;
            out.push(FOrderReport {
                end,
                part,
                claimed,
                slope,
                max_residual,
                pass: slope.map_or(true, |p| p <= claimed + ORDER_MARGIN),
            });
        }
    }
    out
}

/// `max(50, 10|gamma|, 10|gamma~|)`.
pub fn default_t0(gamma: f64, gamma_tilde: f64) -> f64 {
    50f64.max(10.0 * gamma.abs()).max(10.0 * gamma_tilde.abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct W1State {
    pub t: f64,
    pub w1: Complex64,
    pub z_plus: Complex64,
    pub lambda: f64,
}

/// Result of the `w1` iteration on a uniform `t` grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct W1Run {
    pub z_plus: Complex64,
    pub gamma: f64,
    pub gamma_tilde: f64,
    pub t0: f64,
    pub t: Vec<f64>,
    pub w1: Vec<Complex64>,
    /// Sup distance between consecutive iterates.
    pub distances: Vec<f64>,
    /// `|w1| <= 2|z+|` held on the whole grid for every iterate.
    pub in_ball: bool,
}

/// Distances below this are roundoff and left out of contraction factors.
const W1_DIST_FLOOR: f64 = 1e-12;
const W1_DT: f64 = 0.02;
const W1_SPAN: f64 = 8.0;

impl W1Run {
    pub fn states(&self) -> impl Iterator<Item = W1State> + '_ {
        self.t.iter().zip(&self.w1).map(move |(&t, &w1)| W1State {
            t,
            w1,
            z_plus: self.z_plus,
            lambda: (1.0 - self.gamma / t).sqrt(),
        })
    }

    /// Largest ratio of consecutive distances above the roundoff floor.
    pub fn contraction_factor(&self) -> Option<f64> {
        self.distances
            .windows(2)
            .filter(|w| w[0] > W1_DIST_FLOOR && w[1] > W1_DIST_FLOOR)
            .map(|w| w[1] / w[0])
            .fold(None, |m, r| Some(m.map_or(r, |m: f64| m.max(r))))
    }

    /// `|lim e^{-i theta(t)} w1(t) - z+|`, extrapolated from `[2 t0, 4 t0]`
    /// after removing the leading tail terms, with a fit in `1, 1/t^2`.
    pub fn limit_defect(&self) -> f64 {
        let (mut rows, mut re, mut im) = (Vec::new(), Vec::new(), Vec::new());
        for (&t, &w) in self.t.iter().zip(&self.w1) {
            if t >= 2.0 * self.t0 && t <= 4.0 * self.t0 {
                let v = w * Complex64::from_polar(1.0, -lambda_phase(t, self.gamma))
                    + 0.5 * I * w1_tail(t, self.z_plus, self.gamma, self.gamma_tilde);
                rows.push(vec![1.0, 1.0 / (t * t)]);
                re.push(v.re);
                im.push(v.im);
            }
        }
        let z = Complex64::new(lstsq(&rows, &re)[0], lstsq(&rows, &im)[0]);
        (z - self.z_plus).norm()
    }
}

/// Right-cumulative integrals `int_{t_k}^{t_end} j` on a uniform grid.
fn cumulative_from_right(j: &[Complex64], dt: f64) -> Vec<Complex64> {
    let n = j.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for k in (0..n - 1).rev() {
        let piece = if k + 2 < n {
            (5.0 * j[k] + 8.0 * j[k + 1] - j[k + 2]) * (dt / 12.0)
        } else {
            (-j[k - 1] + 8.0 * j[k] + 5.0 * j[k + 1]) * (dt / 12.0)
        };
        out[k] = out[k + 1] + piece;
    }
    out
}

/// Left-cumulative integrals `int_{t_0}^{t_k} j` on a uniform grid.
fn cumulative_from_left(j: &[Complex64], dt: f64) -> Vec<Complex64> {
    let n = j.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for k in 1..n {
        let piece = if k + 1 < n {
            (5.0 * j[k - 1] + 8.0 * j[k] - j[k + 1]) * (dt / 12.0)
        } else {
            (-j[k - 2] + 8.0 * j[k - 1] + 5.0 * j[k]) * (dt / 12.0)
        };
        out[k] = out[k - 1] + piece;
    }
    out
}

/// Iterate `w1(t) = e^{i theta(t)} [z+ - (i/2) int_t^inf e^{-i theta}/lambda {..} dt']`
/// on `[t0, 8 t0]`, starting from `z+ e^{i theta}`.
pub fn w1_fixed_point(
    z_plus: Complex64,
    gamma: f64,
    gamma_tilde: f64,
    t0: f64,
    n_iter: usize,
) -> Result<W1Run> {
    if !(t0 > 0.0) || !(gamma / t0 < 0.5) || !z_plus.is_finite() || !gamma_tilde.is_finite() {
        return Err(Error::InvalidInput(format!(
            "need t0 > 0 and gamma/t0 < 1/2 (t0 = {t0}, gamma = {gamma})"
        )));
    }
    let t_end = W1_SPAN * t0;
    let n = ((t_end - t0) / W1_DT).round() as usize + 1;
    let dt = (t_end - t0) / (n - 1) as f64;
    let ts: Vec<f64> = (0..n).map(|k| t0 + dt * k as f64).collect();
    let rot: Vec<Complex64> = ts
        .iter()
        .map(|&t| Complex64::from_polar(1.0, lambda_phase(t, gamma)))
        .collect();
    let lam: Vec<f64> = ts.iter().map(|&t| (1.0 - gamma / t).sqrt()).collect();
    let mut w: Vec<Complex64> = rot.iter().map(|&r| z_plus * r).collect();
    let tail = w1_tail(t_end, z_plus, gamma, gamma_tilde);
    let ball = 2.0 * z_plus.norm();
    let mut in_ball = true;
    let mut distances = Vec::new();
    let mut worse = 0usize;
    for _ in 0..n_iter {
        let j: Vec<Complex64> = (0..n)
            .map(|k| rot[k].conj() / lam[k] * w1_bracket(ts[k], w[k], gamma, gamma_tilde))
            .collect();
        let cum = cumulative_from_right(&j, dt);
        let next: Vec<Complex64> = (0..n)
            .map(|k| rot[k] * (z_plus - 0.5 * I * (cum[k] + tail)))
            .collect();
        let d = next
            .iter()
            .zip(&w)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        in_ball &= next.iter().all(|x| x.norm() <= ball + 1e-12);
        w = next;
        if let Some(&prev) = distances.last() {
            if d >= prev && prev > W1_DIST_FLOOR {
                worse += 1;
                if worse >= 3 {
                    return Err(Error::NotContractive {
                        iteration: distances.len(),
                    });
                }
            } else {
                worse = 0;
            }
        }
        distances.push(d);
        if d <= W1_DIST_FLOOR * (1.0 + z_plus.norm()) {
            break;
        }
    }
    Ok(W1Run {
        z_plus,
        gamma,
        gamma_tilde,
        t0,
        t: ts,
        w1: w,
        distances,
        in_ball,
    })
}

/// Substitution check of the `w1` equation along a profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct W1Consistency {
    pub t0: f64,
    /// Max over `[t0, 2 t0]` of the defect of the exact integrated equation.
    pub exact_residual: f64,
    /// Same with only the leading bracket kept; its size is the dropped
    /// `O(t^{-3/2})` remainder.
    pub truncated_residual: f64,
}

/// Build `w1 = (u - i u'/lambda)/2` from a profile (with `u(t) = y(2 sqrt t)`)
/// and check `e^{-i theta} w1 |_{t0}^{t} = int_{t0}^t e^{-i theta} I` on
/// `[t0, 2 t0]`.
pub fn w1_consistency(
    profile: &NlsProfile,
    limits: &FLimits,
    end: End,
    t0: Option<f64>,
) -> Result<W1Consistency> {
    let lim = limits.end(end);
    let (alpha, e0) = (limits.alpha, limits.e0);
    let (g, gt) = (lim.gamma, lim.gamma_tilde);
    let t0 = t0.unwrap_or_else(|| default_t0(g, gt));
    if !(g / t0 < 0.5) {
        return Err(Error::InvalidInput(format!(
            "gamma/t0 = {} must stay below 1/2",
            g / t0
        )));
    }
    let dt = 0.01;
    let n = (t0 / dt).round() as usize + 1;
    let ts: Vec<f64> = (0..n)
        .map(|k| t0 + t0 * k as f64 / (n - 1) as f64)
        .collect();
    let dt = t0 / (n - 1) as f64;
    let nodes: Vec<f64> = ts.iter().map(|&t| 2.0 * t.sqrt()).collect();
    let states = window_states(profile, end, &nodes)?;
    let l = lim.mod_f_inf * lim.mod_f_inf;
    let _ = l;
    let mut lhs = Vec::with_capacity(n);
    let mut j_exact = Vec::with_capacity(n);
    let mut j_trunc = Vec::with_capacity(n);
    for (k, p) in states.iter().enumerate() {
        let t = ts[k];
        let s = p.s;
        let (f2, y, h) = p.yh();
        let lam = (1.0 - g / t).sqrt();
        let u = y;
        let up = 2.0 * (s * h + g_of(f2, alpha, e0)) / s;
        let w = Complex64::new(0.5 * u, -0.5 * up / lam);
        let r = Complex64::from_polar(1.0, -lambda_phase(t, g));
        let t32 = t.powf(1.5);
        let gp = -3.0 * f2 - 2.0 * alpha;
        let f2t = -gt / (2.0 * t32) + (gp - g) * u / t - (g_of(f2, alpha, e0) - gt) / (2.0 * t32);
        let ie = -I * f2t / (2.0 * lam) + g / (4.0 * t * t * lam * lam) * (w.conj() - w);
        lhs.push(r * w);
        j_exact.push(r * ie);
        j_trunc.push(r * (-0.5 * I / lam) * w1_bracket(t, w, g, gt));
    }
    let ce = cumulative_from_left(&j_exact, dt);
    let ct = cumulative_from_left(&j_trunc, dt);
    let (mut exact, mut trunc) = (0.0f64, 0.0f64);
    for k in 0..n {
        let d = lhs[k] - lhs[0];
        exact = exact.max((d - ce[k]).norm());
        trunc = trunc.max((d - ct[k]).norm());
    }
    Ok(W1Consistency {
        t0,
        exact_residual: exact,
        truncated_residual: trunc,
    })
}

/// Seed `(f(s0), f'(s0))` from the expansions at `+inf` through `s^-2`,
/// with `|f'|` then set so the energy equals its limit value exactly.
pub fn f_seed(
    mod_f: f64,
    theta1: f64,
    mod_fp: f64,
    theta2: f64,
    alpha: f64,
    s0: f64,
) -> (Complex64, Complex64) {
    let l = mod_f * mod_f;
    let e0 = mod_fp * mod_fp + 0.25 * (l + alpha).powi(2);
    let g = -3.0 * l - 2.0 * alpha;
    let gt = g_of(l, alpha, e0);
    let (c, d) = (theta1, theta2);
    let (f, fp) = f_model(mod_f, mod_fp, c, c - d, alpha, g, gt, s0);
    let want = (e0 - 0.25 * (f.norm_sqr() + alpha).powi(2)).max(0.0).sqrt();
    let fp = if fp.norm() > 0.0 {
        fp * (want / fp.norm())
    } else {
        fp
    };
    (f, fp)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FSeedRun {
    pub s0: f64,
    pub f0: Complex64,
    pub fp0: Complex64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FScatterResult {
    pub f0: Complex64,
    pub fp0: Complex64,
    pub runs: Vec<FSeedRun>,
    /// `|(f0, fp0)_k - (f0, fp0)_{k-1}|` along the schedule.
    pub cauchy: Vec<f64>,
    /// How many times the schedule was doubled past its last entry.
    pub extensions: usize,
}

fn pair_distance(a: &FSeedRun, b: &FSeedRun) -> f64 {
    ((a.f0 - b.f0).norm_sqr() + (a.fp0 - b.fp0).norm_sqr()).sqrt()
}

fn decreasing(c: &[f64]) -> bool {
    c.windows(2).all(|w| w[1] < w[0] || w[0] <= 1e-12)
}

/// Profile data at `s = 0` with prescribed limits at `+inf`: seed at each
/// `s0` of the schedule and integrate back. When the Cauchy differences stop
/// decreasing the schedule is doubled (up to three times) before giving up.
pub fn f_scatter_inverse(
    mod_f_inf: f64,
    theta1: f64,
    mod_fp_inf: f64,
    theta2: f64,
    alpha: f64,
    s_schedule: &[f64],
    tol: f64,
) -> Result<FScatterResult> {
    check_tol(tol)?;
    if s_schedule.len() < 3 || s_schedule.windows(2).any(|w| w[1] <= w[0]) || s_schedule[0] < 1.0 {
        return Err(Error::InvalidInput(
            "schedule must be increasing, start at >= 1 and have >= 3 entries".into(),
        ));
    }
    if !(mod_f_inf >= 0.0 && mod_fp_inf >= 0.0) {
        return Err(Error::InvalidInput("moduli must be nonnegative".into()));
    }
    let f = rhs4(alpha);
    let mut opts = curve_options(tol);
    opts.max_steps = usize::MAX;
    let run = |s0: f64| -> Result<FSeedRun> {
        let (fs, fps) = f_seed(mod_f_inf, theta1, mod_fp_inf, theta2, alpha, s0);
        let (segs, _) = integrate_branch(&f, s0, pack(fs, fps), 0.0, &opts)?;
        let x = segs.last().map(|seg| seg.end()).unwrap_or(pack(fs, fps));
        let st = unpack(0.0, &x);
        Ok(FSeedRun {
            s0,
            f0: st.f,
            fp0: st.fp,
        })
    };
    let mut runs: Vec<FSeedRun> = s_schedule
        .par_iter()
        .map(|&s0| run(s0))
        .collect::<Result<_>>()?;
    let mut extensions = 0;
    loop {
        let cauchy: Vec<f64> = runs
            .windows(2)
            .map(|w| pair_distance(&w[0], &w[1]))
            .collect();
        if decreasing(&cauchy) {
            let last = *runs.last().unwrap();
            return Ok(FScatterResult {
                f0: last.f0,
                fp0: last.fp0,
                runs,
                cauchy,
                extensions,
            });
        }
        if extensions == 3 {
            return Err(Error::NotConverging(format!(
                "Cauchy differences {cauchy:?}"
            )));
        }
        extensions += 1;
        runs.push(run(2.0 * runs.last().unwrap().s0)?);
    }
}
