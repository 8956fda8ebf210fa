//! Symmetric families of profiles, the plane-spiral search, self-intersections
//! and the reflected `a = 0` solution with a corner at the origin.

use crate::curve::{
    integrate, tangent_second_derivative, CurveSample, CurveTrajectory, DEFAULT_TOL,
};
use crate::error::{Error, Result};
use crate::geom3::{align_pairs, angle_between, rho, Rotation3, Vec3};
use crate::selfsimilar::extract_trace;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Grid spacing for symmetry and sign-change scans.
const SCAN_DS: f64 = 0.005;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OddFamilyPoint {
    pub a: f64,
    pub delta: f64,
    pub a3_plus: f64,
    /// `max |G(s) + G(-s)|` on the scan grid.
    pub oddness_defect: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedFamilyPoint {
    pub a: f64,
    pub c0: f64,
    pub sign: f64,
    /// `-sign a - c0^2`.
    pub alpha: f64,
    /// `max |G_{1,2}(s) - G_{1,2}(-s)|` and `max |G3(s) + G3(-s)|`.
    pub symmetry_defect: f64,
    pub a_plus: Vec3,
    pub a_minus: Vec3,
    /// Max deviation from `A1+ = -A1-`, `A2+ = -A2-`, `A3+ = A3-`.
    pub sign_relation_defect: f64,
}

fn scan_grid(s_max: f64) -> Vec<f64> {
    let n = (s_max / SCAN_DS).round() as usize;
    (0..=n).map(|i| s_max * i as f64 / n as f64).collect()
}

/// `G(0) = 0`, `G'(0) = (0, sqrt(1 - delta^2), delta)`; the solution is odd.
pub fn odd_family(a: f64, delta: f64, s_max: f64) -> Result<(CurveTrajectory, OddFamilyPoint)> {
    if !(-1.0..=1.0).contains(&delta) {
        return Err(Error::InvalidInput(format!(
            "delta = {delta} outside [-1, 1]"
        )));
    }
    let t0 = Vec3::new(0.0, (1.0 - delta * delta).max(0.0).sqrt(), delta);
    let traj = integrate(Vec3::ZERO, t0, a, s_max, DEFAULT_TOL)?;
    let oddness_defect = scan_grid(s_max)
        .iter()
        .map(|&s| (traj.g(s) + traj.g(-s)).norm())
        .fold(0.0, f64::max);
    let trace = extract_trace(&traj)?;
    let pt = OddFamilyPoint {
        a,
        delta,
        a3_plus: trace.plus.axis.z,
        oddness_defect,
    };
    Ok((traj, pt))
}

/// `A3+` over a grid of `delta`, one integration per point.
pub fn a3_sweep(a: f64, deltas: &[f64], s_max: f64) -> Result<Vec<(f64, f64)>> {
    deltas
        .par_iter()
        .map(|&d| odd_family(a, d, s_max).map(|(_, p)| (d, p.a3_plus)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneSpiral {
    pub a: f64,
    pub delta0: f64,
    pub a3_plus: f64,
    /// Width of the final bracket.
    pub width: f64,
    pub evaluations: usize,
}

/// Bisection for `A3+(delta0) = 0` starting from `A3+(-1) = -1`, `A3+(1) = 1`.
/// Stops once the bracket is narrower than `tol_delta` and `|A3+| <= 1e-5`.
pub fn find_plane_spiral(a: f64, tol_delta: f64) -> Result<PlaneSpiral> {
    if a == 0.0 || !a.is_finite() {
        return Err(Error::InvalidInput("a must be finite and nonzero".into()));
    }
    if !(tol_delta >= 1e-8) {
        return Err(Error::InvalidInput(format!(
            "tol_delta = {tol_delta} < 1e-8"
        )));
    }
    let eval = |d: f64| odd_family(a, d, crate::curve::DEFAULT_S_MAX).map(|(_, p)| p.a3_plus);
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    let (mut f_lo, f_hi) = (eval(lo)?, eval(hi)?);
    let mut evaluations = 2;
    if f_lo * f_hi > 0.0 {
        return Err(Error::NoSignChange);
    }
    let mut best = (0.0, f64::INFINITY);
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        let fm = eval(mid)?;
        evaluations += 1;
        if fm.abs() < best.1.abs() || best.1.is_infinite() {
            best = (mid, fm);
        }
        if fm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if (fm < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
        if hi - lo <= tol_delta && best.1.abs() <= 1e-5 {
            break;
        }
    }
    Ok(PlaneSpiral {
        a,
        delta0: best.0,
        a3_plus: best.1,
        width: hi - lo,
        evaluations,
    })
}

/// `G(0) = (2 c0 / sqrt(1 + a^2), 0, 0)`, `G'(0) = (0, 0, sign)`.
pub fn mixed_family(
    a: f64,
    c0: f64,
    sign: f64,
    s_max: f64,
) -> Result<(CurveTrajectory, MixedFamilyPoint)> {
    if !(c0 > 0.0) {
        return Err(Error::InvalidInput(format!("c0 = {c0} must be > 0")));
    }
    if sign != 1.0 && sign != -1.0 {
        return Err(Error::InvalidInput(format!("sign = {sign} must be +-1")));
    }
    let g0 = Vec3::new(2.0 * c0 / (1.0 + a * a).sqrt(), 0.0, 0.0);
    let traj = integrate(g0, Vec3::new(0.0, 0.0, sign), a, s_max, DEFAULT_TOL)?;
    let symmetry_defect = mixed_symmetry_defect(&traj, s_max);
    let trace = extract_trace(&traj)?;
    let (ap, am) = (trace.plus.axis, trace.minus.axis);
    let sign_relation_defect = (ap.x + am.x)
        .abs()
        .max((ap.y + am.y).abs())
        .max((ap.z - am.z).abs());
    let pt = MixedFamilyPoint {
        a,
        c0,
        sign,
        alpha: -sign * a - c0 * c0,
        symmetry_defect,
        a_plus: ap,
        a_minus: am,
        sign_relation_defect,
    };
    Ok((traj, pt))
}

fn mixed_symmetry_defect(traj: &CurveTrajectory, s_max: f64) -> f64 {
    scan_grid(s_max)
        .iter()
        .map(|&s| {
            let (p, m) = (traj.g(s), traj.g(-s));
            (p.x - m.x)
                .abs()
                .max((p.y - m.y).abs())
                .max((p.z + m.z).abs())
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntersectionMethod {
    /// Zeros of `G3` on `(0, S]`, valid under the mixed symmetry.
    G3Zero,
    /// Pairwise minimum-distance scan with local refinement.
    BruteForce,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub s1: f64,
    pub s2: f64,
    /// `|G(s1) - G(s2)|`.
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfIntersections {
    pub method: IntersectionMethod,
    pub crossings: Vec<Crossing>,
    /// Whether `G3` is strictly monotone on the range (mixed symmetry only).
    pub g3_monotone: Option<bool>,
}

fn bisect_g3(traj: &CurveTrajectory, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = traj.g(lo).z;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = traj.g(mid).z;
        if (fm < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Points with `G(s1) = G(s2)`, `s1 < s2`.
///
/// On trajectories with the mixed symmetry (defect below `1e-8`) these are
/// the pairs `(-s*, s*)` with `G3(s*) = 0`; otherwise the brute-force scan
/// over `|s| <= min(10, S)` is used.
pub fn detect_self_intersection(traj: &CurveTrajectory) -> SelfIntersections {
    let s_max = traj.s_max();
    if mixed_symmetry_defect(traj, s_max.min(10.0)) > 1e-8 {
        return SelfIntersections {
            method: IntersectionMethod::BruteForce,
            crossings: brute_force_intersections(traj, s_max.min(10.0), 0.02, 1e-4),
            g3_monotone: None,
        };
    }
    let grid = scan_grid(s_max);
    let sign0 = traj.t(0.0).z.signum();
    let monotone = grid.iter().all(|&s| traj.t(s).z * sign0 > 0.0);
    let mut crossings = Vec::new();
    // G3(0) = 0 is the trivial zero; start after the first grid step
    let mut prev = (grid[1], traj.g(grid[1]).z);
    for &s in &grid[2..] {
        let v = traj.g(s).z;
        if v == 0.0 || (v < 0.0) != (prev.1 < 0.0) {
            let r = if v == 0.0 {
                s
            } else {
                bisect_g3(traj, prev.0, s)
            };
            crossings.push(Crossing {
                s1: -r,
                s2: r,
                distance: (traj.g(r) - traj.g(-r)).norm(),
            });
        }
        prev = (s, v);
    }
    SelfIntersections {
        method: IntersectionMethod::G3Zero,
        crossings,
        g3_monotone: Some(monotone),
    }
}

/// Gauss-Newton on `|G(u) - G(v)|^2` from a grid candidate.
fn refine_pair(traj: &CurveTrajectory, mut u: f64, mut v: f64, lim: f64) -> (f64, f64, f64) {
    for _ in 0..50 {
        let (pu, pv) = (traj.sample(u), traj.sample(v));
        let r = pu.g - pv.g;
        // J = [T(u), -T(v)]
        let (j1, j2) = (pu.t, -pv.t);
        let (a11, a12, a22) = (j1.dot(j1), j1.dot(j2), j2.dot(j2));
        let (b1, b2) = (j1.dot(r), j2.dot(r));
        let det = a11 * a22 - a12 * a12;
        if det.abs() < 1e-14 {
            break;
        }
        let du = (a22 * b1 - a12 * b2) / det;
        let dv = (a11 * b2 - a12 * b1) / det;
        u = (u - du).clamp(-lim, lim);
        v = (v - dv).clamp(-lim, lim);
        if du.abs() + dv.abs() < 1e-14 {
            break;
        }
    }
    (u, v, (traj.g(u) - traj.g(v)).norm())
}

/// O(n^2) scan of grid pairs `(s_i, s_j)` on `[-lim, lim]` with spacing `ds`.
/// Interior local minima of the pair distance are refined, and refined
/// pairs closer than `dist_tol` with `s2 - s1` above ten grid steps are returned.
pub fn brute_force_intersections(
    traj: &CurveTrajectory,
    lim: f64,
    ds: f64,
    dist_tol: f64,
) -> Vec<Crossing> {
    let n = (2.0 * lim / ds).round() as usize;
    let s: Vec<f64> = (0..=n)
        .map(|i| -lim + 2.0 * lim * i as f64 / n as f64)
        .collect();
    let g: Vec<Vec3> = s.iter().map(|&x| traj.g(x)).collect();
    let gap = 10;
    let dist = |i: usize, j: usize| (g[i] - g[j]).norm();
    let mut cands: Vec<(usize, usize)> = (1..=n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let dist = &dist;
            ((i + gap + 1)..n).filter_map(move |j| {
                let d = dist(i, j);
                // grid pairs of a unit-speed curve that meet are within ~ds
                if d > 4.0 * ds {
                    return None;
                }
                let nb = [
                    (i - 1, j),
                    (i + 1, j),
                    (i, j - 1),
                    (i, j + 1),
                    (i - 1, j - 1),
                    (i + 1, j + 1),
                    (i - 1, j + 1),
                    (i + 1, j - 1),
                ];
                if nb.iter().all(|&(p, q)| q > p + gap && dist(p, q) >= d) {
                    Some((i, j))
                } else {
                    None
                }
            })
        })
        .collect();
    cands.sort_unstable();
    let mut out: Vec<Crossing> = Vec::new();
    for (i, j) in cands {
        let (u, v, d) = refine_pair(traj, s[i], s[j], lim);
        if d < dist_tol
            && v - u > gap as f64 * ds
            && !out
                .iter()
                .any(|c| (c.s1 - u).abs() < ds && (c.s2 - v).abs() < ds)
        {
            out.push(Crossing {
                s1: u,
                s2: v,
                distance: d,
            });
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct G3Report {
    pub max_residual: f64,
    pub at: f64,
    pub points: usize,
}

/// Residual of `G3''' + (c^2 + s^2/4) G3' - (s/4) G3 + (a/2)(1 - G3'^2)` on the
/// scan grid over `[-S, S]`.
pub fn check_g3_ode(traj: &CurveTrajectory) -> G3Report {
    let a = traj.a();
    let s_max = traj.s_max();
    let grid = scan_grid(s_max);
    let mut best = (0.0f64, 0.0);
    let mut points = 0;
    for &s0 in &grid {
        for s in [s0, -s0] {
            let p: CurveSample = traj.sample(s);
            let tpp = tangent_second_derivative(a, p.g, p.t, p.tp);
            let r = tpp.z + (p.tp.norm_sq() + s * s / 4.0) * p.t.z - s / 4.0 * p.g.z
                + 0.5 * a * (1.0 - p.t.z * p.t.z);
            points += 1;
            if r.abs() > best.0 {
                best = (r.abs(), s);
            }
        }
    }
    G3Report {
        max_residual: best.0,
        at: best.1,
        points,
    }
}

/// `1/2 G - (s/2) G' - G' x G''` for `a = 0` profiles.
pub fn selfsimilar_residual(g: Vec3, t: Vec3, tp: Vec3, s: f64) -> f64 {
    (0.5 * g - 0.5 * s * t - t.cross(tp)).norm()
}

/// The `a = 0` solution with `G~(0) = (0, 0, 2 c0)`, `T~(0) = e1`, and its
/// half-turn `rho` applied on `s < 0`.
#[derive(Clone, Debug)]
pub struct SingularSolution {
    pub c0: f64,
    pub base: CurveTrajectory,
    /// `A+` of the base solution.
    pub a_plus: Vec3,
    /// `rho A-` of the base solution.
    pub a_minus: Vec3,
}

/// Outcome of the checks on a [`SingularSolution`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularChecks {
    pub continuity_defect: f64,
    /// `|G'(0+) - e1| + |G'(0-) + e1|`.
    pub jump_defect: f64,
    /// Max of the self-similar residual over `1e-3 <= |s| <= S`.
    pub max_residual: f64,
}

impl SingularSolution {
    pub fn g(&self, s: f64) -> Vec3 {
        let v = self.base.g(s);
        if s < 0.0 {
            rho(v)
        } else {
            v
        }
    }

    /// `T` away from the corner.
    pub fn t(&self, s: f64) -> Vec3 {
        let v = self.base.t(s);
        if s < 0.0 {
            rho(v)
        } else {
            v
        }
    }

    /// `(T(0-), T(0+))`.
    pub fn tangent_at_corner(&self) -> (Vec3, Vec3) {
        (rho(self.base.t(0.0)), self.base.t(0.0))
    }

    /// Corner data `X0(s) = s (A+ chi_{s>0} + rho A- chi_{s<0})`.
    pub fn corner(&self, s: f64) -> Vec3 {
        if s >= 0.0 {
            s * self.a_plus
        } else {
            s * self.a_minus
        }
    }

    pub fn checks(&self) -> SingularChecks {
        let s_max = self.base.s_max();
        let (tm, tp) = self.tangent_at_corner();
        let mut max_residual: f64 = 0.0;
        for &s0 in &scan_grid(s_max) {
            if s0 < 1e-3 {
                continue;
            }
            for s in [s0, -s0] {
                let p = self.base.sample(s);
                let (g, t, tpr) = if s < 0.0 {
                    (rho(p.g), rho(p.t), rho(p.tp))
                } else {
                    (p.g, p.t, p.tp)
                };
                max_residual = max_residual.max(selfsimilar_residual(g, t, tpr, s));
            }
        }
        SingularChecks {
            continuity_defect: (rho(self.base.g(0.0)) - self.base.g(0.0)).norm(),
            jump_defect: (tp - Vec3::E1).norm() + (tm + Vec3::E1).norm(),
            max_residual,
        }
    }
}

fn regular_a0(c0: f64, s_max: f64) -> Result<(CurveTrajectory, Vec3, Vec3)> {
    let traj = integrate(
        Vec3::new(0.0, 0.0, 2.0 * c0),
        Vec3::E1,
        0.0,
        s_max,
        DEFAULT_TOL,
    )?;
    let tr = extract_trace(&traj)?;
    Ok((traj, tr.plus.axis, tr.minus.axis))
}

pub fn build_singular_solution(c0: f64, s_max: f64) -> Result<SingularSolution> {
    if !(c0 > 0.0) {
        return Err(Error::InvalidInput(format!("c0 = {c0} must be > 0")));
    }
    let (base, ap, am) = regular_a0(c0, s_max)?;
    Ok(SingularSolution {
        c0,
        base,
        a_plus: ap,
        a_minus: rho(am),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NonUniqueness {
    pub c0: f64,
    /// `c0'` of the regular solution with the same corner angle.
    pub c0_regular: f64,
    pub corner_angle: f64,
    /// Rotation applied to the regular solution (row major).
    pub rotation: [[f64; 3]; 3],
    /// `|Q A+_reg - A+| + |Q A-_reg - rho A-|`.
    pub corner_defect: f64,
    pub singular: SingularChecks,
    pub regular_residual: f64,
    /// `sup_{|s| <= 5} |Q G_reg(s) - G_sing(s)|`.
    pub sup_difference: f64,
    /// `(c0', angle)` on the scan grid.
    pub scan: Vec<(f64, f64)>,
}

const NU_SCAN: (f64, f64, usize) = (0.05, 3.0, 60);
const NU_WINDOW: f64 = 5.0;

/// Two solutions with the same corner data at `t = 0`: the reflected one
/// and a rotated regular `a = 0` solution with matched corner angle.
pub fn demonstrate_nonuniqueness(c0: f64) -> Result<NonUniqueness> {
    let s_max = crate::curve::DEFAULT_S_MAX;
    let sing = build_singular_solution(c0, s_max)?;
    let target = angle_between(sing.a_plus, sing.a_minus);
    let angle = |c: f64| regular_a0(c, s_max).map(|(_, p, m)| angle_between(p, m));
    let (lo, hi, n) = NU_SCAN;
    let grid: Vec<f64> = (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect();
    let scan: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&c| angle(c).map(|th| (c, th)))
        .collect::<Result<_>>()?;
    let k = scan
        .windows(2)
        .position(|w| (w[0].1 - target) * (w[1].1 - target) <= 0.0)
        .ok_or_else(|| {
            Error::RootNotBracketed(format!("corner angle {target} outside the scanned range"))
        })?;
    let (mut a, mut b) = (scan[k].0, scan[k + 1].0);
    let mut fa = scan[k].1 - target;
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        let fm = angle(m)? - target;
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
        if b - a < 1e-12 {
            break;
        }
    }
    let c_reg = 0.5 * (a + b);
    let (reg, rp, rm) = regular_a0(c_reg, s_max)?;
    let q: Rotation3 = align_pairs(rp, rm, sing.a_plus, sing.a_minus);
    let corner_defect = (q.apply(rp) - sing.a_plus).norm() + (q.apply(rm) - sing.a_minus).norm();
    let mut regular_residual: f64 = 0.0;
    let mut sup_difference: f64 = 0.0;
    for &s0 in &scan_grid(NU_WINDOW) {
        for s in [s0, -s0] {
            let p = reg.sample(s);
            if s.abs() >= 1e-3 {
                regular_residual = regular_residual.max(selfsimilar_residual(
                    q.apply(p.g),
                    q.apply(p.t),
                    q.apply(p.tp),
                    s,
                ));
            }
            sup_difference = sup_difference.max((q.apply(p.g) - sing.g(s)).norm());
        }
    }
    Ok(NonUniqueness {
        c0,
        c0_regular: c_reg,
        corner_angle: target,
        rotation: q.m,
        corner_defect,
        singular: sing.checks(),
        regular_residual,
        sup_difference,
        scan,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn odd_endpoints_are_lines() {
        let (tr, p) = odd_family(2.0, 1.0, 20.0).unwrap();
        assert!((tr.g(7.0) - Vec3::new(0.0, 0.0, 7.0)).norm() < 1e-12);
        assert!((p.a3_plus - 1.0).abs() < 1e-9, "{}", p.a3_plus);
        let (_, p) = odd_family(2.0, -1.0, 20.0).unwrap();
        assert!((p.a3_plus + 1.0).abs() < 1e-9);
    }

    #[test]
    fn mixed_alpha() {
        for (a, c0, sign, want) in [
            (3.0, 1.8, 1.0, -6.24),
            (3.0, 0.4, 1.0, -3.16),
            (10.0, 4.0, -1.0, -6.0),
        ] {
            let (tr, p) = mixed_family(a, c0, sign, 20.0).unwrap();
            assert!((p.alpha - want).abs() < 1e-12);
            assert!((tr.params.alpha - want).abs() < 1e-10);
        }
    }

    #[test]
    fn line_has_no_crossings() {
        let (tr, _) = odd_family(1.0, 1.0, 20.0).unwrap();
        assert!(detect_self_intersection(&tr).crossings.is_empty());
        assert!(check_g3_ode(&tr).max_residual < 1e-12);
    }

    #[test]
    fn corner_fixed_by_rho() {
        let s = build_singular_solution(0.8, 20.0).unwrap();
        assert_eq!(rho(Vec3::new(0.0, 0.0, 1.6)), Vec3::new(0.0, 0.0, 1.6));
        let c = s.checks();
        assert!(c.continuity_defect == 0.0 && c.jump_defect < 1e-15);
    }
}
