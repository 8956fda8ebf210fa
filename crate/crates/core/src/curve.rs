//! The profile-curve ODE `G'' = 1/2 (I+A) G x G'`, its invariants and a
//! dense trajectory type built on the Dormand–Prince stepper.

use crate::error::{Error, Result};
use crate::geom3::{apply_a, apply_plus_a, Vec3};
use crate::ode::{integrate_two_sided, DenseSolution, OdeOptions};
use serde::{Deserialize, Serialize};

/// Curvature below which the torsion is reported as undefined.
pub const C_FLOOR: f64 = 1e-9;
pub const DEFAULT_S_MAX: f64 = 40.0;
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveState {
    pub s: f64,
    pub g: Vec3,
    pub t: Vec3,
}

/// Constants attached to one solution: `a`, the conserved `alpha`, the
/// curvature at the origin and `E0 = a^2/4`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpiralParams {
    pub a: f64,
    pub alpha: f64,
    pub c0: f64,
    pub e0: f64,
}

impl SpiralParams {
    /// Constants of the admissible data `(G(0), T(0))`.
    pub fn from_initial(g0: Vec3, t0: Vec3, a: f64) -> Self {
        let c0sq = 0.25 * apply_plus_a(a, g0).norm_sq();
        SpiralParams {
            a,
            alpha: -a * t0.z - c0sq,
            c0: c0sq.sqrt(),
            e0: 0.25 * a * a,
        }
    }
}

/// `(G', T')` at a state.
pub fn ode_rhs(state: &CurveState, a: f64) -> (Vec3, Vec3) {
    (state.t, tangent_derivative(a, state.g, state.t))
}

/// `T' = 1/2 (I+A) G x T`.
pub fn tangent_derivative(a: f64, g: Vec3, t: Vec3) -> Vec3 {
    0.5 * apply_plus_a(a, g).cross(t)
}

/// `T''` obtained by differentiating the right-hand side along the flow.
pub fn tangent_second_derivative(a: f64, g: Vec3, t: Vec3, tp: Vec3) -> Vec3 {
    0.5 * (apply_a(a, t).cross(t) + apply_plus_a(a, g).cross(tp))
}

pub(crate) fn rhs6(a: f64) -> impl Fn(f64, &[f64; 6]) -> [f64; 6] + Sync {
    move |_s, y| {
        let g = Vec3::new(y[0], y[1], y[2]);
        let t = Vec3::new(y[3], y[4], y[5]);
        let tp = tangent_derivative(a, g, t);
        [t.x, t.y, t.z, tp.x, tp.y, tp.z]
    }
}

fn pack(g: Vec3, t: Vec3) -> [f64; 6] {
    [g.x, g.y, g.z, t.x, t.y, t.z]
}

fn unpack(y: &[f64; 6]) -> (Vec3, Vec3) {
    (Vec3::new(y[0], y[1], y[2]), Vec3::new(y[3], y[4], y[5]))
}

/// Integrator settings used for a requested accuracy `tol`.
///
/// The controller runs three decades below `tol` so that the invariant bounds
/// stated in units of `tol` hold after accumulation over `|s| <= 40`.
pub fn curve_options(tol: f64) -> OdeOptions {
    let mut o = OdeOptions::with_tol(tol * 1e-3);
    o.h_max = 0.1;
    o
}

pub(crate) fn check_tol(tol: f64) -> Result<()> {
    if !(1e-13..=1e-6).contains(&tol) {
        return Err(Error::InvalidInput(format!(
            "tol {tol:e} outside [1e-13, 1e-6]"
        )));
    }
    Ok(())
}

/// Move arbitrary data onto the admissible slice `(I+A)G(0).T(0) = 0` by
/// following the flow to `s0 = (I+A)G.T`. Returns the new data and `s0`.
pub fn shift_origin(g0: Vec3, t0: Vec3, a: f64, tol: f64) -> Result<(Vec3, Vec3, f64)> {
    check_tol(tol)?;
    if (t0.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!(
            "|T0| = {} is not 1",
            t0.norm()
        )));
    }
    let s0 = apply_plus_a(a, g0).dot(t0);
    if s0 == 0.0 {
        return Ok((g0, t0, 0.0));
    }
    // (I+A)G.T - s is a first integral, so the admissible origin sits at
    // parameter value s0 of the given state; move back by s0.
    let f = rhs6(a);
    let (segs, _) = crate::ode::integrate_branch(&f, s0, pack(g0, t0), 0.0, &curve_options(tol))?;
    let end = segs.last().map(|seg| seg.end()).unwrap_or(pack(g0, t0));
    let (g, t) = unpack(&end);
    Ok((g, t, s0))
}

/// Maximum invariant defects over the accepted steps of a trajectory.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InvariantDrift {
    /// max ||T| - 1|
    pub unit_tangent: f64,
    /// max |(I+A)G.T - s|
    pub first_integral: f64,
    /// max |(I+A)G.T - s| / (1 + |s|)
    pub first_integral_rel: f64,
    /// max ||T'|^2 + a T3 + alpha|
    pub curvature_law: f64,
    /// max |1/4 |AT x T|^2 + 1/4 (c^2 + alpha)^2 - a^2/4|
    pub energy: f64,
}

impl InvariantDrift {
    pub fn absorb(&mut self, a: f64, alpha: f64, s: f64, g: Vec3, t: Vec3) {
        let tp = tangent_derivative(a, g, t);
        let c2 = tp.norm_sq();
        let fi = (apply_plus_a(a, g).dot(t) - s).abs();
        let at = apply_a(a, t);
        let e = 0.25 * at.cross(t).norm_sq() + 0.25 * (c2 + alpha).powi(2);
        self.unit_tangent = self.unit_tangent.max((t.norm() - 1.0).abs());
        self.first_integral = self.first_integral.max(fi);
        self.first_integral_rel = self.first_integral_rel.max(fi / (1.0 + s.abs()));
        self.curvature_law = self.curvature_law.max((c2 + a * t.z + alpha).abs());
        self.energy = self.energy.max((e - 0.25 * a * a).abs());
    }
}

/// Solution of the curve ODE on `[lo, hi]` with dense output.
#[derive(Clone, Debug)]
pub struct CurveTrajectory {
    pub params: SpiralParams,
    pub tol: f64,
    pub drift: InvariantDrift,
    sol: DenseSolution<6>,
}

/// One stored point `(s, G, T, T')`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub s: f64,
    pub g: Vec3,
    pub t: Vec3,
    pub tp: Vec3,
}

impl CurveTrajectory {
    pub fn a(&self) -> f64 {
        self.params.a
    }

    pub fn lo(&self) -> f64 {
        self.sol.lo()
    }

    pub fn hi(&self) -> f64 {
        self.sol.hi()
    }

    /// Symmetric half-width `min(-lo, hi)`.
    pub fn s_max(&self) -> f64 {
        (-self.lo()).min(self.hi())
    }

    pub fn contains(&self, s: f64) -> bool {
        self.sol.contains(s)
    }

    pub fn n_steps(&self) -> usize {
        self.sol.n_steps()
    }

    pub fn state(&self, s: f64) -> CurveState {
        let (g, t) = unpack(&self.sol.eval(s));
        CurveState { s, g, t }
    }

    pub fn g(&self, s: f64) -> Vec3 {
        self.state(s).g
    }

    pub fn t(&self, s: f64) -> Vec3 {
        self.state(s).t
    }

    pub fn sample(&self, s: f64) -> CurveSample {
        let st = self.state(s);
        CurveSample {
            s,
            g: st.g,
            t: st.t,
            tp: tangent_derivative(self.a(), st.g, st.t),
        }
    }

    /// `T'(s)`.
    pub fn tp(&self, s: f64) -> Vec3 {
        self.sample(s).tp
    }

    /// The accepted-step knots with their states.
    pub fn samples(&self) -> Vec<CurveSample> {
        let a = self.a();
        (0..self.sol.knots().len())
            .map(|i| {
                let (g, t) = unpack(&self.sol.knot_state(i));
                CurveSample {
                    s: self.sol.knots()[i],
                    g,
                    t,
                    tp: tangent_derivative(a, g, t),
                }
            })
            .collect()
    }

    /// Samples on a uniform grid of spacing close to `ds` covering `[lo, hi]`.
    pub fn uniform_samples(&self, lo: f64, hi: f64, ds: f64) -> Vec<CurveSample> {
        let n = ((hi - lo) / ds).round().max(1.0) as usize;
        (0..=n)
            .map(|i| self.sample(lo + (hi - lo) * i as f64 / n as f64))
            .collect()
    }
}

/// Integrate from an arbitrary state `start` over `[lo, hi]`.
pub fn integrate_range(
    start: CurveState,
    a: f64,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<CurveTrajectory> {
    check_tol(tol)?;
    let f = rhs6(a);
    let sol = integrate_two_sided(
        &f,
        start.s,
        pack(start.g, start.t),
        lo,
        hi,
        &curve_options(tol),
    )?;
    let tp0 = tangent_derivative(a, start.g, start.t);
    let alpha = -a * start.t.z - tp0.norm_sq();
    let mut drift = InvariantDrift::default();
    for i in 0..sol.knots().len() {
        let (g, t) = unpack(&sol.knot_state(i));
        drift.absorb(a, alpha, sol.knots()[i], g, t);
    }
    let mut traj = CurveTrajectory {
        params: SpiralParams {
            a,
            alpha,
            c0: 0.0,
            e0: 0.25 * a * a,
        },
        tol,
        drift,
        sol,
    };
    if traj.contains(0.0) {
        traj.params.c0 = traj.tp(0.0).norm();
    }
    Ok(traj)
}

/// Integrate admissible data `(G(0), T(0))` over `[-s_max, s_max]`.
pub fn integrate(g0: Vec3, t0: Vec3, a: f64, s_max: f64, tol: f64) -> Result<CurveTrajectory> {
    if !(s_max > 0.0) || !g0.is_finite() || !t0.is_finite() || !a.is_finite() {
        return Err(Error::InvalidInput("non-finite data or s_max <= 0".into()));
    }
    if (t0.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!(
            "|T0| - 1 = {:e}",
            t0.norm() - 1.0
        )));
    }
    let prod = apply_plus_a(a, g0).dot(t0);
    if prod.abs() > 1e-10 {
        return Err(Error::InvalidInput(format!(
            "(I+A)G0.T0 = {prod:e}; shift the origin first"
        )));
    }
    let mut traj = integrate_range(
        CurveState {
            s: 0.0,
            g: g0,
            t: t0,
        },
        a,
        -s_max,
        s_max,
        tol,
    )?;
    traj.params = SpiralParams::from_initial(g0, t0, a);
    Ok(traj)
}

/// Continue the flow from `start` and sample it at `nodes` (sorted, all on
/// the same side of `start.s`) without keeping the dense output.
pub fn samples_beyond(
    start: CurveState,
    a: f64,
    nodes: &[f64],
    tol: f64,
) -> Result<Vec<CurveSample>> {
    check_tol(tol)?;
    let mut opts = curve_options(tol);
    opts.max_steps = usize::MAX;
    let states =
        crate::ode::sample_streaming(&rhs6(a), start.s, pack(start.g, start.t), nodes, &opts)?;
    Ok(nodes
        .iter()
        .zip(states)
        .map(|(&s, y)| {
            let (g, t) = unpack(&y);
            CurveSample {
                s,
                g,
                t,
                tp: tangent_derivative(a, g, t),
            }
        })
        .collect())
}

/// Curvature `c = |T'|` and `tau - s/2 = h / c^2` (None when `c <= C_FLOOR`).
pub fn curvature_torsion(traj: &CurveTrajectory, s: f64) -> (f64, Option<f64>) {
    let smp = traj.sample(s);
    let c = smp.tp.norm();
    if c <= C_FLOOR {
        return (c, None);
    }
    let h = -0.5 * apply_a(traj.a(), smp.t).dot(smp.tp);
    (c, Some(h / (c * c)))
}

/// The frame-free pair `(y, h)` with both expressions for `h`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct YhPair {
    /// `d|T'|^2/ds`
    pub y: f64,
    /// `-1/2 (A T).T'`
    pub h: f64,
    /// `-a (G3 - s T3) / 4`
    pub h_alt: f64,
}

pub fn yh_at(a: f64, smp: &CurveSample) -> YhPair {
    let tpp = tangent_second_derivative(a, smp.g, smp.t, smp.tp);
    YhPair {
        y: 2.0 * smp.tp.dot(tpp),
        h: -0.5 * apply_a(a, smp.t).dot(smp.tp),
        h_alt: -0.25 * a * (smp.g.z - smp.s * smp.t.z),
    }
}

pub fn compute_yh(traj: &CurveTrajectory, s: f64) -> YhPair {
    yh_at(traj.a(), &traj.sample(s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rhs_examples() {
        let st = CurveState {
            s: 0.0,
            g: Vec3::new(0.0, 0.0, 5.0),
            t: Vec3::E3,
        };
        assert_eq!(ode_rhs(&st, 3.0).1, Vec3::ZERO);
        let st = CurveState {
            s: 0.0,
            g: Vec3::new(0.0, 0.0, 2.0),
            t: Vec3::E1,
        };
        assert_eq!(ode_rhs(&st, 0.0).1, Vec3::E2);
        assert_eq!(ode_rhs(&st, 10.0).1, Vec3::E2);
    }

    #[test]
    fn params_from_initial() {
        let p = SpiralParams::from_initial(Vec3::new(0.0, 0.0, 2.0), Vec3::E1, 10.0);
        assert_eq!(p.alpha, -1.0);
        assert_eq!(p.c0, 1.0);
        assert_eq!(p.e0, 25.0);
    }

    #[test]
    fn shift_origin_cases() {
        let (g, t, s0) = shift_origin(Vec3::ZERO, Vec3::E3, 0.0, 1e-10).unwrap();
        assert_eq!((g, t, s0), (Vec3::ZERO, Vec3::E3, 0.0));
        // (I+A)G0.T0 = 2 with a = 3
        let t0 = Vec3::new(0.6, 0.0, 0.8);
        let g0 = Vec3::new(0.0, 0.0, 2.5);
        let (g, t, s0) = shift_origin(g0, t0, 3.0, 1e-10).unwrap();
        assert!((s0 - 2.0).abs() < 1e-15);
        assert!(apply_plus_a(3.0, g).dot(t).abs() <= 1e-10);
    }

    #[test]
    fn straight_line_is_exact() {
        let tr = integrate(Vec3::ZERO, Vec3::E3, 4.0, 10.0, 1e-10).unwrap();
        for s in [-10.0, -3.3, 0.0, 7.1, 10.0] {
            let st = tr.state(s);
            assert!((st.g - Vec3::new(0.0, 0.0, s)).norm() < 1e-12);
            assert_eq!(curvature_torsion(&tr, s).1, None);
            let yh = compute_yh(&tr, s);
            assert!(yh.y.abs() < 1e-12 && yh.h.abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_inadmissible() {
        let r = integrate(Vec3::new(0.0, 0.0, 1.0), Vec3::E3, 1.0, 10.0, 1e-10);
        assert!(matches!(r, Err(Error::InvalidInput(_))));
        let r = integrate(Vec3::ZERO, Vec3::E3, 1.0, 10.0, 1e-3);
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }
}
