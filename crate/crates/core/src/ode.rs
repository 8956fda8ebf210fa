//! Dormand–Prince 5(4) with the classical 4th-order continuous extension.
//!
//! Solutions are stored as a list of step segments, each carrying its own
//! interpolation polynomial, so any point in the covered interval can be
//! evaluated without re-integrating.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Largest allowed |h|.
    pub h_max: f64,
    pub max_steps: usize,
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        OdeOptions {
            rtol: tol,
            atol: tol,
            h_max: 0.25,
            max_steps: 5_000_000,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// One accepted step with its interpolation data.
#[derive(Clone, Debug)]
pub struct Segment<const N: usize> {
    pub s0: f64,
    pub h: f64,
    s1: f64,
    r: [[f64; N]; 5],
}

impl<const N: usize> Segment<N> {
    pub fn s1(&self) -> f64 {
        self.s1
    }

    pub fn lo(&self) -> f64 {
        self.s0.min(self.s1())
    }

    pub fn hi(&self) -> f64 {
        self.s0.max(self.s1())
    }

    pub fn eval(&self, s: f64) -> [f64; N] {
        let th = (s - self.s0) / self.h;
        let th1 = 1.0 - th;
        let r = &self.r;
        let mut out = [0.0; N];
        for i in 0..N {
            out[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        }
        out
    }

    pub fn start(&self) -> [f64; N] {
        self.r[0]
    }

    pub fn end(&self) -> [f64; N] {
        let mut out = self.r[0];
        for (o, d) in out.iter_mut().zip(self.r[1].iter()) {
            *o += d;
        }
        out
    }
}

/// Piecewise dense solution over `[lo, hi]`, segments sorted by position.
#[derive(Clone, Debug)]
pub struct DenseSolution<const N: usize> {
    segs: Vec<Segment<N>>,
    /// `knots[i]..knots[i+1]` is covered by `segs[i]`.
    knots: Vec<f64>,
    pub rejected: usize,
}

impl<const N: usize> DenseSolution<N> {
    pub fn lo(&self) -> f64 {
        self.knots[0]
    }

    pub fn hi(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn segments(&self) -> &[Segment<N>] {
        &self.segs
    }

    pub fn n_steps(&self) -> usize {
        self.segs.len()
    }

    /// State at a knot, taken from the step endpoint rather than the interpolant.
    pub fn knot_state(&self, i: usize) -> [f64; N] {
        if i < self.segs.len() {
            let seg = &self.segs[i];
            if seg.h > 0.0 {
                seg.start()
            } else {
                seg.end()
            }
        } else {
            let seg = self.segs.last().unwrap();
            if seg.h > 0.0 {
                seg.end()
            } else {
                seg.start()
            }
        }
    }

    pub fn contains(&self, s: f64) -> bool {
        s >= self.lo() && s <= self.hi()
    }

    /// Interpolated state; `s` is clamped to the covered interval.
    pub fn eval(&self, s: f64) -> [f64; N] {
        let s = s.clamp(self.lo(), self.hi());
        let i = match self.knots.binary_search_by(|k| k.partial_cmp(&s).unwrap()) {
            Ok(i) => return self.knot_state(i),
            Err(i) => i.saturating_sub(1).min(self.segs.len() - 1),
        };
        self.segs[i].eval(s)
    }

    /// Assemble from a backward branch (in integration order, `h < 0`) and a
    /// forward branch (`h > 0`) that share their starting point.
    pub fn from_branches(
        backward: Vec<Segment<N>>,
        forward: Vec<Segment<N>>,
        rejected: usize,
    ) -> Self {
        let mut segs: Vec<Segment<N>> = backward.into_iter().rev().collect();
        segs.extend(forward);
        let mut knots = Vec::with_capacity(segs.len() + 1);
        for seg in &segs {
            knots.push(seg.lo());
        }
        if let Some(last) = segs.last() {
            knots.push(last.hi());
        }
        DenseSolution {
            segs,
            knots,
            rejected,
        }
    }
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

fn err_norm<const N: usize>(y0: &[f64; N], y1: &[f64; N], e: &[f64; N], opts: &OdeOptions) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        let sk = opts.atol + opts.rtol * y0[i].abs().max(y1[i].abs());
        acc += (e[i] / sk).powi(2);
    }
    (acc / N as f64).sqrt()
}

/// One Dormand–Prince step: new state, last stage, error vector and the
/// interpolation segment.
fn dopri_step<const N: usize, F>(
    f: &F,
    s: f64,
    y: &[f64; N],
    k1: &[f64; N],
    h: f64,
) -> ([f64; N], [f64; N], [f64; N], Segment<N>)
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let k2 = f(s + C2 * h, &axpy(y, h, &[(A21, k1)]));
    let k3 = f(s + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]));
    let k4 = f(
        s + C4 * h,
        &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]),
    );
    let k5 = f(
        s + C5 * h,
        &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    );
    let k6 = f(
        s + h,
        &axpy(
            y,
            h,
            &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        ),
    );
    let y1 = axpy(
        y,
        h,
        &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
    );
    let k7 = f(s + h, &y1);
    let mut e = [0.0; N];
    let mut r = [[0.0; N]; 5];
    for i in 0..N {
        e[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let dy = y1[i] - y[i];
        let bspl = h * k1[i] - dy;
        r[0][i] = y[i];
        r[1][i] = dy;
        r[2][i] = bspl;
        r[3][i] = dy - h * k7[i] - bspl;
        r[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
    }
    (
        y1,
        k7,
        e,
        Segment {
            s0: s,
            h,
            s1: s + h,
            r,
        },
    )
}

/// Integrate `y' = f(s, y)` from `(s0, y0)` to `s_end` (either direction).
pub fn integrate_branch<const N: usize, F>(
    f: &F,
    s0: f64,
    y0: [f64; N],
    s_end: f64,
    opts: &OdeOptions,
) -> Result<(Vec<Segment<N>>, usize)>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let mut segs = Vec::new();
    let rejected = integrate_streaming(f, s0, y0, s_end, opts, |seg| segs.push(seg.clone()))?;
    Ok((segs, rejected))
}

/// Like [`integrate_branch`] but hands each accepted segment to `on_segment`
/// instead of storing it. Returns the number of rejected steps.
pub fn integrate_streaming<const N: usize, F, G>(
    f: &F,
    s0: f64,
    y0: [f64; N],
    s_end: f64,
    opts: &OdeOptions,
    mut on_segment: G,
) -> Result<usize>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    G: FnMut(&Segment<N>),
{
    if s_end == s0 {
        return Ok(0);
    }
    let mut accepted = 0usize;
    let dir = (s_end - s0).signum();
    let mut s = s0;
    let mut y = y0;
    let mut k1 = f(s, &y);
    let mut h = dir * initial_step(f, s, &y, &k1, opts).min((s_end - s0).abs());
    let mut facold: f64 = 1e-4;
    let mut rejected = 0usize;
    let mut last_rejected = false;
    loop {
        if accepted >= opts.max_steps {
            return Err(Error::TooManySteps {
                s,
                max_steps: opts.max_steps,
            });
        }
        // land exactly on s_end rather than leave a sliver behind it
        let end_slack = 1e-12 * (1.0 + s_end.abs());
        if (s + h - s_end) * dir > -end_slack {
            h = s_end - s;
        }
        if h.abs() < 1e-14 * (1.0 + s.abs()) {
            return Err(Error::StepSizeUnderflow { s, h });
        }
        let (y1, k7, e, seg) = dopri_step(f, s, &y, &k1, h);
        let err = err_norm(&y, &y1, &e, opts);
        if !err.is_finite() {
            h *= 0.1;
            rejected += 1;
            last_rejected = true;
            continue;
        }
        // PI controller (beta = 0.04)
        let fac11 = err.powf(0.17);
        let mut fac = fac11 / facold.powf(0.04);
        fac = (fac / 0.9).clamp(0.2, 10.0);
        let mut h_new = h / fac;
        if err <= 1.0 {
            facold = err.max(1e-4);
            let mut seg = seg;
            s = seg.s1;
            y = y1;
            k1 = k7;
            accepted += 1;
            if (s - s_end) * dir >= -end_slack {
                // snap the final knot onto the requested end
                seg.s1 = s_end;
                on_segment(&seg);
                break;
            }
            on_segment(&seg);
            if last_rejected {
                h_new = dir * h_new.abs().min(h.abs());
            }
            last_rejected = false;
        } else {
            h_new = h / (fac11 / 0.9).min(5.0);
            rejected += 1;
            last_rejected = true;
        }
        h = dir * h_new.abs().min(opts.h_max);
    }
    Ok(rejected)
}

fn initial_step<const N: usize, F>(
    f: &F,
    s: f64,
    y: &[f64; N],
    k1: &[f64; N],
    opts: &OdeOptions,
) -> f64
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let sk: Vec<f64> = y.iter().map(|v| opts.atol + opts.rtol * v.abs()).collect();
    let dnf: f64 = k1
        .iter()
        .zip(&sk)
        .map(|(k, w)| (k / w).powi(2))
        .sum::<f64>()
        / N as f64;
    let dny: f64 = y.iter().zip(&sk).map(|(v, w)| (v / w).powi(2)).sum::<f64>() / N as f64;
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        (dny / dnf).sqrt() * 0.01
    };
    h = h.min(opts.h_max);
    let y1 = axpy(y, h, &[(1.0, k1)]);
    let k2 = f(s + h, &y1);
    let der2: f64 = (k2
        .iter()
        .zip(k1)
        .zip(&sk)
        .map(|((a, b), w)| ((a - b) / w).powi(2))
        .sum::<f64>()
        / N as f64)
        .sqrt()
        / h;
    let der12 = der2.max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 {
        (h * 1e-3).max(1e-6)
    } else {
        (0.01 / der12).powf(0.2)
    };
    (100.0 * h).min(h1).min(opts.h_max)
}

/// States at `nodes`, which must be ordered in the direction of travel from
/// `s0`. The dense output is consumed step by step and dropped.
pub fn sample_streaming<const N: usize, F>(
    f: &F,
    s0: f64,
    y0: [f64; N],
    nodes: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<[f64; N]>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let Some(&last) = nodes.last() else {
        return Ok(Vec::new());
    };
    if (last - s0).abs() <= 1e-12 * (1.0 + s0.abs()) {
        return Ok(vec![y0; nodes.len()]);
    }
    let mut out = Vec::with_capacity(nodes.len());
    let take = |seg: &Segment<N>| {
        while out.len() < nodes.len()
            && nodes[out.len()] >= seg.lo()
            && nodes[out.len()] <= seg.hi()
        {
            out.push(seg.eval(nodes[out.len()]));
        }
    };
    integrate_streaming(f, s0, y0, last, opts, take)?;
    Ok(out)
}

/// Integrate over `[lo, hi]` starting from an interior point `s0`.
pub fn integrate_two_sided<const N: usize, F>(
    f: &F,
    s0: f64,
    y0: [f64; N],
    lo: f64,
    hi: f64,
    opts: &OdeOptions,
) -> Result<DenseSolution<N>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N] + Sync,
{
    if !(lo <= s0 && s0 <= hi && lo < hi) {
        return Err(Error::InvalidInput(format!(
            "start {s0} must lie in [{lo}, {hi}] with lo < hi"
        )));
    }
    let (bwd, fwd) = rayon::join(
        || integrate_branch(f, s0, y0, lo, opts),
        || integrate_branch(f, s0, y0, hi, opts),
    );
    let (bwd, r1) = bwd?;
    let (fwd, r2) = fwd?;
    Ok(DenseSolution::from_branches(bwd, fwd, r1 + r2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn osc(_s: f64, y: &[f64; 2]) -> [f64; 2] {
        [y[1], -y[0]]
    }

    #[test]
    fn harmonic_oscillator_end_and_dense() {
        let opts = OdeOptions::with_tol(1e-12);
        let sol = integrate_two_sided(&osc, 0.0, [0.0, 1.0], -10.0, 10.0, &opts).unwrap();
        assert_eq!(sol.lo(), -10.0);
        assert_eq!(sol.hi(), 10.0);
        let mut worst: f64 = 0.0;
        for i in 0..=2000 {
            let s = -10.0 + 0.01 * i as f64;
            let y = sol.eval(s);
            worst = worst
                .max((y[0] - s.sin()).abs())
                .max((y[1] - s.cos()).abs());
        }
        assert!(worst < 1e-10, "{worst}");
    }

    #[test]
    fn dense_output_converges_fourth_order() {
        // fixed single-step interpolation error versus step length
        let f = |s: f64, y: &[f64; 1]| [y[0] * s.cos()];
        let exact = |s: f64| s.sin().exp();
        let mut errs = Vec::new();
        for &h in &[0.2, 0.1] {
            let k1 = f(0.0, &[1.0]);
            let (_, _, _, seg) = dopri_step(&f, 0.0, &[1.0], &k1, h);
            errs.push((seg.eval(0.37 * h)[0] - exact(0.37 * h)).abs());
        }
        // local interpolation error is O(h^5)
        assert!(errs[0] / errs[1] > 16.0, "{errs:?}");
    }
}
