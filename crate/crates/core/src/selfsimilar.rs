//! The self-similar family `X(s,t) = e^{(A/2) log t} sqrt(t) G(s/sqrt(t))`,
//! its limit as `t -> 0` and the data at `s -> +-inf` of the profile curve.
//!
//! Everything at `s -> -inf` is computed on the reflected curve
//! `G~(s) = -G(-s)`, which solves the same equation and sends `-inf` to `+inf`.
//! Under this map `A-`, `B-`, `c-`, `b-` carry over unchanged and the phase
//! picks up `pi`.

use crate::curve::{samples_beyond, yh_at, CurveSample, CurveState, CurveTrajectory};
use crate::error::{Error, Result};
use crate::fit::{decay_slope, gauss_legendre, log_nodes, lstsq, wrap_phase};
use crate::geom3::{apply_a, apply_plus_a, rotate_z, Vec3};
use num_complex::Complex64;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Nodes used by every window fit.
pub const FIT_NODES: usize = 2000;
/// Sub-windows used for the envelope in decay-order fits.
pub const FIT_BINS: usize = 12;
/// Slack allowed on a fitted decay order.
pub const ORDER_MARGIN: f64 = 0.35;
/// Below this amplitude the phase at infinity is not defined.
pub const B_PHASE_FLOOR: f64 = 1e-8;
/// Fit windows start where `s^2/4` exceeds this many times `|gamma|`, `|gamma~|`.
pub const WINDOW_REACH: f64 = 10.0;
/// ... and at least this value of `s^2/4`.
pub const WINDOW_T_MIN: f64 = 400.0;
/// Farthest point the flow is continued to for a fit window.
pub const S_CAP: f64 = 1500.0;
const WINDOW_PASSES: usize = 3;
/// Residuals below this are integration noise and carry no order.
pub const RESIDUAL_FLOOR: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum End {
    Plus,
    Minus,
}

impl End {
    pub fn sign(self) -> f64 {
        match self {
            End::Plus => 1.0,
            End::Minus => -1.0,
        }
    }
}

/// Sample of the curve seen from `end`: for `End::Minus` this is the
/// reflected curve `-G(-s)` at `s > 0`.
pub fn oriented_sample(traj: &CurveTrajectory, end: End, s: f64) -> CurveSample {
    match end {
        End::Plus => traj.sample(s),
        End::Minus => {
            let m = traj.sample(-s);
            CurveSample {
                s,
                g: -m.g,
                t: m.t,
                tp: -m.tp,
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseKind {
    Phi,
    Phi1,
    Phi2,
    Phi3,
}

/// `quad * s^2 + log_weight * log|s|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseFn {
    pub kind: PhaseKind,
    pub quad: f64,
    pub log_weight: f64,
}

impl PhaseFn {
    /// Curve phase `s^2/4 - gamma log|s|`.
    pub fn phi(gamma: f64) -> Self {
        PhaseFn {
            kind: PhaseKind::Phi,
            quad: 0.25,
            log_weight: -gamma,
        }
    }

    pub fn phi1(gamma: f64) -> Self {
        PhaseFn {
            kind: PhaseKind::Phi1,
            quad: 0.25,
            log_weight: -gamma,
        }
    }

    /// `(|f|^2_inf + alpha) log|s|`.
    pub fn phi2(f_inf_sq: f64, alpha: f64) -> Self {
        PhaseFn {
            kind: PhaseKind::Phi2,
            quad: 0.0,
            log_weight: f_inf_sq + alpha,
        }
    }

    /// `-s^2/4 - (2|f|^2_inf + alpha) log|s|`.
    pub fn phi3(f_inf_sq: f64, alpha: f64) -> Self {
        PhaseFn {
            kind: PhaseKind::Phi3,
            quad: -0.25,
            log_weight: -(2.0 * f_inf_sq + alpha),
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.quad * s * s + self.log_weight * s.abs().ln()
    }
}

/// Antiderivative of `lambda(t) = sqrt(1 - gamma/t)`, normalized so that
/// `theta(t) - (t - gamma/2 log t) -> 0`. Needs `t > max(gamma, 0)`.
pub fn lambda_phase(t: f64, gamma: f64) -> f64 {
    let r = (t * t - gamma * t).sqrt();
    r - 0.5 * gamma * (2.0 * t - gamma + 2.0 * r).ln() + 0.5 * gamma + 0.5 * gamma * 4f64.ln()
}

/// `g(x) = 2 E0 - (3x + alpha)(x + alpha)/2`.
pub fn g_of(x: f64, alpha: f64, e0: f64) -> f64 {
    2.0 * e0 - 0.5 * (3.0 * x + alpha) * (x + alpha)
}

/// `2 E0 - (3 c^2 + alpha)(c^2 + alpha)/2` at the limit value of `c^2`.
pub fn gamma_tilde_of(c_inf_sq: f64, alpha: f64, e0: f64) -> f64 {
    g_of(c_inf_sq, alpha, e0)
}

/// Bracket of the truncated integral equation,
/// `gamma~/(2t^{3/2}) - 3 u u'/t^{3/2} + (3/2) gamma~ u/t^2`.
pub fn w1_bracket(t: f64, w: Complex64, gamma: f64, gamma_tilde: f64) -> f64 {
    let lam = (1.0 - gamma / t).sqrt();
    let u = 2.0 * w.re;
    let up = -2.0 * lam * w.im;
    let t32 = t.powf(1.5);
    gamma_tilde / (2.0 * t32) - 3.0 * u * up / t32 + 1.5 * gamma_tilde * u / (t * t)
}

/// `int_T^inf` of the integrand with `w1 = z e^{i theta}` beyond `T`, to the
/// first integration by parts for the oscillating pieces.
pub fn w1_tail(t_end: f64, z: Complex64, gamma: f64, gamma_tilde: f64) -> Complex64 {
    let th = lambda_phase(t_end, gamma);
    let lam = (1.0 - gamma / t_end).sqrt();
    let t32 = t_end.powf(1.5);
    let e = |k: f64| Complex64::from_polar(1.0, k * th);
    // int_T^inf e^{ik theta} p(t) dt ~ -e^{ik theta(T)} p(T) / (i k lambda)
    let osc = |k: f64, amp: Complex64| -e(k) * amp / (I * k * lam);
    // e^{-i theta} u u' = i lambda (z^2 e^{i theta} - conj(z)^2 e^{-3 i theta})
    let uu = |k: f64, c: Complex64| osc(k, -3.0 * I * lam * c / t32);
    let mut acc = osc(-1.0, Complex64::new(gamma_tilde / (2.0 * t32), 0.0));
    acc += uu(1.0, z * z) + uu(-3.0, -z.conj() * z.conj());
    // non-oscillating part with e^{-i theta} w1 = z (1 - 3i gamma~/(4t)) and 1/lambda = 1 + gamma/(2t)
    let beta = -0.75 * I * gamma_tilde * z;
    acc += 1.5 * gamma_tilde * (z / t_end + (beta + 0.5 * gamma * z) / (2.0 * t_end * t_end)) * lam;
    acc += osc(
        -2.0,
        Complex64::new(1.5 * gamma_tilde / (t_end * t_end), 0.0) * z.conj(),
    );
    acc / lam
}

/// Amplitude and phase of the oscillation in `y/2 + i h`, i.e. the `(b, a)`
/// with `y/2 + i h ~ (b/2) e^{-i a} e^{-i phi1(s)}`.
///
/// Works in the variable `t = s^2/4` where `y = u(t)` and
/// `w1 = (u - i u_t / lambda)/2` rotates like `e^{i theta(t)}` up to a
/// `1 - 3 i gamma~ / (4t)` correction; the window mean of the
/// de-rotated `w1` gives the limit.
pub fn fit_oscillation(
    nodes: &[(f64, f64, f64, f64)],
    alpha: f64,
    e0: f64,
    gamma: f64,
    gamma_tilde: f64,
) -> Option<(f64, f64)> {
    // nodes: (s, |f|^2, y, h), s > 0
    let mut pts = Vec::with_capacity(nodes.len());
    for &(s, f2, y, h) in nodes {
        let t = 0.25 * s * s;
        if t <= 2.0 * gamma.abs() + 1.0 {
            continue;
        }
        let lam = (1.0 - gamma / t).sqrt();
        let ut = 2.0 * (s * h + g_of(f2, alpha, e0)) / s;
        let w1 = Complex64::new(0.5 * y, -0.5 * ut / lam);
        pts.push((t, Complex64::from_polar(1.0, -lambda_phase(t, gamma)) * w1));
    }
    if pts.len() < 50 {
        return None;
    }
    // first pass: divide out the 1/t correction
    let mut z = pts
        .iter()
        .map(|&(t, v)| v / Complex64::new(1.0, -0.75 * gamma_tilde / t))
        .sum::<Complex64>()
        / pts.len() as f64;
    // then e^{-i theta} w1 + (i/2) tail(t; z) = z + k/t^2 + ...
    let rows: Vec<Vec<f64>> = pts.iter().map(|&(t, _)| vec![1.0, 1.0 / (t * t)]).collect();
    for _ in 0..3 {
        let v: Vec<Complex64> = pts
            .iter()
            .map(|&(t, v)| v + 0.5 * I * w1_tail(t, z, gamma, gamma_tilde))
            .collect();
        let re: Vec<f64> = v.iter().map(|x| x.re).collect();
        let im: Vec<f64> = v.iter().map(|x| x.im).collect();
        z = Complex64::new(lstsq(&rows, &re)[0], lstsq(&rows, &im)[0]);
    }
    let b = 2.0 * z.norm();
    let a = wrap_phase(z.arg() + gamma * 2f64.ln());
    Some((b, a))
}

/// Data at one end of the curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndTrace {
    pub end: End,
    /// `A` (limit of `e^{-A log|s|} G(s)/s`).
    pub axis: Vec3,
    /// `B = (I+A) A`.
    pub tangent_limit: Vec3,
    /// `A` from the truncated integral up to the window end.
    pub axis_truncated: Vec3,
    /// `2 sup|c| / S` bound on the truncated integral's tail.
    pub tail_bound: f64,
    pub c_inf: f64,
    pub gamma: f64,
    pub gamma_tilde: f64,
    /// Fitted oscillation amplitude of `y/2 + i h` (times two).
    pub b: f64,
    /// `sqrt(a^2 (-a B3 - alpha)(1 - B3^2))`.
    pub b_closed: f64,
    /// `None` when `b` is below `B_PHASE_FLOOR`.
    pub a_phase: Option<f64>,
    pub window: (f64, f64),
}

impl EndTrace {
    pub fn b_norm_defect(&self) -> f64 {
        (self.tangent_limit.norm() - 1.0).abs()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceAtInfinity {
    pub a: f64,
    pub alpha: f64,
    pub e0: f64,
    pub plus: EndTrace,
    pub minus: EndTrace,
}

impl TraceAtInfinity {
    pub fn end(&self, end: End) -> &EndTrace {
        match end {
            End::Plus => &self.plus,
            End::Minus => &self.minus,
        }
    }

    pub fn a_plus(&self) -> Vec3 {
        self.plus.axis
    }

    pub fn a_minus(&self) -> Vec3 {
        self.minus.axis
    }

    pub fn b_plus(&self) -> Vec3 {
        self.plus.tangent_limit
    }

    pub fn b_minus(&self) -> Vec3 {
        self.minus.tangent_limit
    }
}

/// `X(s, t)` evaluated through the trajectory.
pub fn evaluate_x(traj: &CurveTrajectory, s: f64, t: f64) -> Result<Vec3> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("t = {t} must be positive")));
    }
    let rt = t.sqrt();
    let scaled = s / rt;
    if scaled < traj.lo() || scaled > traj.hi() {
        return Err(Error::RangeExceeded {
            scaled: scaled.abs(),
            s_max: traj.s_max(),
        });
    }
    Ok(rotate_z(traj.a(), 0.5 * t.ln(), rt * traj.g(scaled)))
}

/// The `t -> 0` limit `s e^{A log|s|} A^{sign s}`.
pub fn corner_x0(a: f64, trace: &TraceAtInfinity, s: f64) -> Vec3 {
    if s == 0.0 {
        return Vec3::ZERO;
    }
    let axis = if s > 0.0 {
        trace.plus.axis
    } else {
        trace.minus.axis
    };
    s * rotate_z(a, s.abs().ln(), axis)
}

/// `G~(1) - 2 int_1^upper e^{-A log s} (T~ x T~')/s^2 ds` on the oriented curve.
pub fn truncated_axis(traj: &CurveTrajectory, end: End, upper: f64) -> Vec3 {
    let a = traj.a();
    let mut breaks: Vec<f64> = traj
        .samples()
        .iter()
        .map(|p| end.sign() * p.s)
        .filter(|&s| s > 1.0 && s < upper)
        .collect();
    breaks.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let integral = gauss_legendre(
        |s| {
            let p = oriented_sample(traj, end, s);
            rotate_z(a, -s.ln(), p.t.cross(p.tp) / (s * s)).to_array()
        },
        1.0,
        upper,
        &breaks,
    );
    oriented_sample(traj, end, 1.0).g - 2.0 * Vec3::from_array(integral)
}

fn sup_curvature(traj: &CurveTrajectory) -> f64 {
    traj.samples()
        .iter()
        .map(|p| p.tp.norm())
        .fold(0.0, f64::max)
}

/// Oriented samples at increasing `nodes`; nodes past the stored range are
/// reached by continuing the flow from its end.
fn window_samples(traj: &CurveTrajectory, end: End, nodes: &[f64]) -> Result<Vec<CurveSample>> {
    let s_hi = traj.s_max();
    let split = nodes.partition_point(|&s| s <= s_hi);
    let mut out: Vec<CurveSample> = nodes[..split]
        .iter()
        .map(|&s| oriented_sample(traj, end, s))
        .collect();
    if split < nodes.len() {
        let p = oriented_sample(traj, end, s_hi);
        let start = CurveState {
            s: s_hi,
            g: p.g,
            t: p.t,
        };
        out.extend(samples_beyond(start, traj.a(), &nodes[split..], traj.tol)?);
    }
    Ok(out)
}

struct WindowFit {
    axis: Vec3,
    c_inf_sq: f64,
    yh: Vec<(f64, f64, f64, f64)>,
}

fn fit_window(a: f64, nodes: &[f64], smp: &[CurveSample]) -> WindowFit {
    // e^{-A log s}(G/s + 4T'/s^3) = A + K/s^2 + O(s^-4); even powers up to s^-6
    let rows: Vec<Vec<f64>> = nodes
        .iter()
        .map(|&s| vec![1.0, s.powi(-2), s.powi(-4), s.powi(-6)])
        .collect();
    let q: Vec<Vec3> = smp
        .iter()
        .map(|p| rotate_z(a, -p.s.ln(), p.g / p.s + 4.0 * p.tp / p.s.powi(3)))
        .collect();
    let mut axis = [0.0; 3];
    for (k, ax) in axis.iter_mut().enumerate() {
        let ys: Vec<f64> = q.iter().map(|v| v[k]).collect();
        *ax = lstsq(&rows, &ys)[0];
    }
    // c^2 + 4h/s = c_inf^2 - 2 gamma~/s^2 + O(s^-3); the s^-4 column soaks up most of the bias
    let yh: Vec<(f64, f64, f64, f64)> = smp
        .iter()
        .map(|p| {
            let v = yh_at(a, p);
            (p.s, p.tp.norm_sq(), v.y, v.h)
        })
        .collect();
    let rows2: Vec<Vec<f64>> = nodes
        .iter()
        .map(|&s| vec![1.0, s.powi(-2), s.powi(-4)])
        .collect();
    let ms: Vec<f64> = yh.iter().map(|&(s, c2, _, h)| c2 + 4.0 * h / s).collect();
    let c_inf_sq = lstsq(&rows2, &ms)[0].max(0.0);
    WindowFit {
        axis: Vec3::from_array(axis),
        c_inf_sq,
        yh,
    }
}

/// Lower end of a window where `s^2/4` dominates `gamma`, `gamma~` and `a^2 = 4 E0`.
pub(crate) fn asymptotic_start(gamma: f64, gamma_tilde: f64, e0: f64) -> f64 {
    let t0 = (WINDOW_T_MIN)
        .max(WINDOW_REACH * gamma.abs())
        .max(WINDOW_REACH * gamma_tilde.abs())
        .max(4.0 * WINDOW_REACH * e0);
    2.0 * t0.sqrt()
}

fn extract_end(traj: &CurveTrajectory, end: End) -> Result<EndTrace> {
    let a = traj.a();
    let alpha = traj.params.alpha;
    let e0 = traj.params.e0;
    let s_max = traj.s_max();
    if s_max < 20.0 {
        return Err(Error::WindowTooShort {
            lo: s_max / 3.0,
            hi: s_max,
            detail: "the trajectory must reach |s| = 20".into(),
        });
    }
    let mut s_lo = s_max / 3.0;
    let mut nodes = log_nodes(s_lo, s_max, FIT_NODES);
    let mut smp = window_samples(traj, end, &nodes)?;
    let mut fit = fit_window(a, &nodes, &smp);
    for _ in 0..WINDOW_PASSES {
        let b3 = apply_plus_a(a, fit.axis).z;
        let want = asymptotic_start(
            3.0 * a * b3 + alpha,
            gamma_tilde_of(fit.c_inf_sq, alpha, e0),
            e0,
        )
        .min(S_CAP / 3.0);
        if want <= s_lo * 1.05 {
            break;
        }
        s_lo = want;
        nodes = log_nodes(s_lo, 3.0 * s_lo, FIT_NODES);
        smp = window_samples(traj, end, &nodes)?;
        fit = fit_window(a, &nodes, &smp);
    }
    let s_hi = *nodes.last().unwrap();
    let axis = fit.axis;
    let tangent_limit = apply_plus_a(a, axis);
    let c_inf_sq = fit.c_inf_sq;

    let b3 = tangent_limit.z;
    let gamma = 3.0 * a * b3 + alpha;
    let gamma_tilde = gamma_tilde_of(c_inf_sq, alpha, e0);
    let b_closed = (a * a * (-a * b3 - alpha) * (1.0 - b3 * b3))
        .max(0.0)
        .sqrt();
    let (b, a_phase) = match fit_oscillation(&fit.yh, alpha, e0, gamma, gamma_tilde) {
        Some((b, ph)) if b >= B_PHASE_FLOOR => {
            let ph = match end {
                End::Plus => ph,
                End::Minus => wrap_phase(ph + PI),
            };
            (b, Some(ph))
        }
        Some((b, _)) => (b, None),
        None => {
            if b_closed < B_PHASE_FLOOR {
                (0.0, None)
            } else {
                return Err(Error::WindowTooShort {
                    lo: s_lo,
                    hi: s_hi,
                    detail: format!("gamma = {gamma} leaves too few nodes with s^2/4 > 2|gamma|"),
                });
            }
        }
    };

    Ok(EndTrace {
        end,
        axis,
        tangent_limit,
        axis_truncated: truncated_axis(traj, end, s_max),
        tail_bound: 2.0 * sup_curvature(traj) / s_max,
        c_inf: c_inf_sq.sqrt(),
        gamma,
        gamma_tilde,
        b,
        b_closed,
        a_phase,
        window: (s_lo, s_hi),
    })
}

/// Extract `(A, B, c_inf, gamma, gamma~, b, a)` at both ends.
pub fn extract_trace(traj: &CurveTrajectory) -> Result<TraceAtInfinity> {
    let (plus, minus) = rayon::join(
        || extract_end(traj, End::Plus),
        || extract_end(traj, End::Minus),
    );
    Ok(TraceAtInfinity {
        a: traj.a(),
        alpha: traj.params.alpha,
        e0: traj.params.e0,
        plus: plus?,
        minus: minus?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub t: f64,
    pub sup: f64,
    pub bound: f64,
}

impl ConvergenceRow {
    pub fn holds(&self) -> bool {
        self.sup <= self.bound
    }
}

/// `sup_s |X(s,t) - X0(s)|` against `2 sqrt(t) sup|c|` for each `t`, over
/// the part of the s-axis the trajectory covers at that `t`.
pub fn convergence_check(
    traj: &CurveTrajectory,
    trace: &TraceAtInfinity,
    t_list: &[f64],
) -> Result<Vec<ConvergenceRow>> {
    let c_sup = sup_curvature(traj);
    let a = traj.a();
    let mut out = Vec::new();
    for &t in t_list {
        if !(t > 0.0) {
            return Err(Error::InvalidInput(format!("t = {t} must be positive")));
        }
        let reach = traj.s_max() * t.sqrt();
        let n = 4000;
        let mut sup: f64 = 0.0;
        for i in 0..=n {
            let s = -reach + 2.0 * reach * i as f64 / n as f64;
            let x = evaluate_x(traj, s, t)?;
            sup = sup.max((x - corner_x0(a, trace, s)).norm());
        }
        out.push(ConvergenceRow {
            t,
            sup,
            bound: 2.0 * t.sqrt() * c_sup,
        });
    }
    Ok(out)
}

/// `|B3| = 1` within `1e-6`.
pub fn check_degenerate_axis(_a: f64, b3: f64) -> bool {
    (b3.abs() - 1.0).abs() <= 1e-6
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AsymPart {
    /// position, remainder `O(s^-3)`
    Position,
    /// tangent, remainder `O(s^-2)`
    Tangent,
    /// `c (n - i b)`, remainder `O(1/s)`
    Frame,
    /// `c^2`, remainder `O(s^-3)`
    CurvatureSq,
}

impl AsymPart {
    pub fn claimed_order(self) -> f64 {
        match self {
            AsymPart::Position => -3.0,
            AsymPart::Tangent => -2.0,
            AsymPart::Frame => -1.0,
            AsymPart::CurvatureSq => -3.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderReport {
    pub end: End,
    pub part: AsymPart,
    pub claimed: f64,
    /// `None` when the residual is identically negligible.
    pub slope: Option<f64>,
    pub max_residual: f64,
    pub pass: bool,
}

/// Residual of one expansion at the oriented point `p`.
fn residual(a: f64, tr: &EndTrace, alpha: f64, part: AsymPart, p: &CurveSample) -> f64 {
    let s = p.s;
    let ls = s.ln();
    let bvec = tr.tangent_limit;
    let ab = apply_a(a, bvec);
    match part {
        AsymPart::Position => {
            let c2 = tr.c_inf * tr.c_inf;
            let model = s * rotate_z(a, ls, tr.axis)
                + rotate_z(a, ls, 2.0 * c2 * bvec - ab.cross(bvec)) / s
                - 4.0 * p.tp / (s * s);
            (p.g - model).norm()
        }
        AsymPart::Tangent => (p.t - rotate_z(a, ls, bvec) + 2.0 * p.t.cross(p.tp) / s).norm(),
        AsymPart::Frame => {
            let phase = match (tr.end, tr.a_phase) {
                (End::Plus, Some(x)) => x,
                (End::Minus, Some(x)) => x - PI,
                (_, None) => 0.0,
            };
            let amp =
                Complex64::from_polar(tr.b / ab.norm_sq(), phase + PhaseFn::phi(tr.gamma).eval(s));
            let re = rotate_z(a, ls, ab.cross(bvec));
            let im = -rotate_z(a, ls, ab);
            let mut acc = 0.0;
            let lhs_re = p.tp;
            let lhs_im = -p.t.cross(p.tp);
            for k in 0..3 {
                let model = amp * Complex64::new(re[k], im[k]);
                acc += (Complex64::new(lhs_re[k], lhs_im[k]) - model).norm_sqr();
            }
            acc.sqrt()
        }
        AsymPart::CurvatureSq => {
            let h = yh_at(a, p).h;
            let model = tr.c_inf * tr.c_inf - 4.0 * h / s - 2.0 * tr.gamma_tilde / (s * s);
            let _ = alpha;
            (p.tp.norm_sq() - model).abs()
        }
    }
}

/// Fitted decay order of one expansion at one end.
pub fn verify_part(
    traj: &CurveTrajectory,
    trace: &TraceAtInfinity,
    end: End,
    part: AsymPart,
) -> Result<OrderReport> {
    let tr = trace.end(end);
    let a = traj.a();
    if part == AsymPart::Frame {
        if a == 0.0
            || check_degenerate_axis(a, tr.tangent_limit.z)
            || tr.c_inf == 0.0
            || tr.a_phase.is_none()
        {
            return Err(Error::HypothesisViolated(
                "the frame expansion needs a != 0, |B3| < 1 and c_inf > 0".into(),
            ));
        }
    }
    let hi = traj.s_max();
    let nodes = log_nodes(hi / 3.0, hi, FIT_NODES);
    let r: Vec<f64> = nodes
        .iter()
        .map(|&s| residual(a, tr, trace.alpha, part, &oriented_sample(traj, end, s)))
        .collect();
    let max_residual = r.iter().cloned().fold(0.0, f64::max);
    let slope = decay_slope(&nodes, &r, FIT_BINS, RESIDUAL_FLOOR);
    let claimed = part.claimed_order();
    let pass = slope.map_or(true, |p| p <= claimed + ORDER_MARGIN);
    Ok(OrderReport {
        end,
        part,
        claimed,
        slope,
        max_residual,
        pass,
    })
}

/// All applicable expansions at both ends; the frame expansion is skipped
/// where its hypotheses fail.
pub fn verify_asymptotics(traj: &CurveTrajectory, trace: &TraceAtInfinity) -> Vec<OrderReport> {
    let mut out = Vec::new();
    for end in [End::Plus, End::Minus] {
        for part in [
            AsymPart::Position,
            AsymPart::Tangent,
            AsymPart::Frame,
            AsymPart::CurvatureSq,
        ] {
            if let Ok(r) = verify_part(traj, trace, end, part) {
                out.push(r);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_phase_derivative_and_limit() {
        for &g in &[-7.0, 0.0, 3.0] {
            let t = 80.0;
            let h = 1e-4;
            let d = (lambda_phase(t + h, g) - lambda_phase(t - h, g)) / (2.0 * h);
            assert!((d - (1.0 - g / t).sqrt()).abs() < 1e-8);
            let big = 1e8;
            assert!((lambda_phase(big, g) - (big - 0.5 * g * big.ln())).abs() < 1e-6);
        }
    }

    #[test]
    fn phase_fns() {
        assert_eq!(PhaseFn::phi(2.0).eval(1.0), 0.25);
        assert!((PhaseFn::phi3(1.0, 0.5).eval(-2.0) - (-1.0 - 2.5 * 2f64.ln())).abs() < 1e-15);
    }

    #[test]
    fn degenerate_axis() {
        assert!(check_degenerate_axis(1.0, 1.0));
        assert!(check_degenerate_axis(1.0, -1.0 + 1e-7));
        assert!(!check_degenerate_axis(1.0, 0.956));
    }
}
