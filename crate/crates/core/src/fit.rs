//! Small numerical helpers: log grids, linear least squares, decay-order fits
//! and fixed Gauss–Legendre quadrature.

/// `n` log-spaced nodes in `[lo, hi]`, both ends included.
pub fn log_nodes(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (l0, l1) = (lo.ln(), hi.ln());
    let mut out: Vec<f64> = (0..n)
        .map(|i| (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp())
        .collect();
    out[0] = lo;
    out[n - 1] = hi;
    out
}

/// Least-squares solution of `X beta ~ y` via Householder QR. `rows[i]` is
/// the i-th row of the design matrix.
pub fn lstsq(rows: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let m = rows.len();
    let k = rows[0].len();
    assert!(m >= k && y.len() == m);
    let mut a: Vec<Vec<f64>> = rows.to_vec();
    let mut b = y.to_vec();
    for j in 0..k {
        let norm: f64 = (j..m).map(|i| a[i][j] * a[i][j]).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if a[j][j] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (j..m).map(|i| a[i][j]).collect();
        v[0] -= alpha;
        let vn: f64 = v.iter().map(|x| x * x).sum();
        if vn == 0.0 {
            continue;
        }
        for c in j..k {
            let d: f64 = (j..m).map(|i| v[i - j] * a[i][c]).sum::<f64>() * 2.0 / vn;
            for i in j..m {
                a[i][c] -= d * v[i - j];
            }
        }
        let d: f64 = (j..m).map(|i| v[i - j] * b[i]).sum::<f64>() * 2.0 / vn;
        for i in j..m {
            b[i] -= d * v[i - j];
        }
    }
    let mut x = vec![0.0; k];
    for j in (0..k).rev() {
        let mut acc = b[j];
        for c in j + 1..k {
            acc -= a[j][c] * x[c];
        }
        x[j] = if a[j][j] != 0.0 { acc / a[j][j] } else { 0.0 };
    }
    x
}

/// Slope of `log r` against `log s`, fitted to the maxima of `r` over
/// `bins` log-spaced sub-windows. Taking maxima first keeps oscillating
/// residuals (which pass through zero) from dominating the fit.
/// Returns `None` when the residual is identically below `floor`.
pub fn decay_slope(s: &[f64], r: &[f64], bins: usize, floor: f64) -> Option<f64> {
    assert_eq!(s.len(), r.len());
    let lo = s.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (l0, l1) = (lo.ln(), hi.ln());
    let mut best = vec![(0.0f64, 0.0f64); bins];
    for (&si, &ri) in s.iter().zip(r) {
        let mut b = (((si.ln() - l0) / (l1 - l0)) * bins as f64) as usize;
        if b >= bins {
            b = bins - 1;
        }
        if ri.abs() >= best[b].1 {
            best[b] = (si, ri.abs());
        }
    }
    let pts: Vec<(f64, f64)> = best.into_iter().filter(|p| p.1 > floor).collect();
    if pts.len() < 3 {
        return None;
    }
    let rows: Vec<Vec<f64>> = pts.iter().map(|p| vec![1.0, p.0.ln()]).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    Some(lstsq(&rows, &ys)[1])
}

/// 8-point Gauss–Legendre nodes and weights on `[-1, 1]`.
const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
];

/// Gauss–Legendre integral of `f` over `[lo, hi]` split at `breaks`
/// (each break inside the interval starts a new panel).
pub fn gauss_legendre<F: Fn(f64) -> [f64; 3]>(f: F, lo: f64, hi: f64, breaks: &[f64]) -> [f64; 3] {
    let mut pts = vec![lo];
    pts.extend(breaks.iter().cloned().filter(|&b| b > lo && b < hi));
    pts.push(hi);
    let mut acc = [0.0; 3];
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        for &(x, wt) in GL8.iter() {
            let v = f(mid + half * x);
            for i in 0..3 {
                acc[i] += wt * half * v[i];
            }
        }
    }
    acc
}

/// Distance between two angles modulo `2 pi`, in `[0, pi]`.
pub fn phase_distance(x: f64, y: f64) -> f64 {
    let d = (x - y).rem_euclid(std::f64::consts::TAU);
    d.min(std::f64::consts::TAU - d)
}

/// Angle reduced to `[0, 2 pi)`.
pub fn wrap_phase(x: f64) -> f64 {
    x.rem_euclid(std::f64::consts::TAU)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lstsq_recovers_polynomial() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![1.0, x, x * x]).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| 2.0 - 3.0 * x + 0.5 * x * x).collect();
        let b = lstsq(&rows, &ys);
        assert!(
            (b[0] - 2.0).abs() < 1e-12 && (b[1] + 3.0).abs() < 1e-12 && (b[2] - 0.5).abs() < 1e-12
        );
    }

    #[test]
    fn slope_of_oscillating_power() {
        let s = log_nodes(10.0, 40.0, 2000);
        let r: Vec<f64> = s.iter().map(|&x| (x * x / 4.0).cos() / (x * x)).collect();
        let p = decay_slope(&s, &r, 12, 0.0).unwrap();
        assert!((p + 2.0).abs() < 0.1, "{p}");
    }

    #[test]
    fn gauss_legendre_polynomial_exact() {
        let v = gauss_legendre(|x| [x.powi(15), 1.0, x.exp()], 0.0, 2.0, &[0.5, 1.0]);
        assert!((v[0] - 2f64.powi(16) / 16.0).abs() < 1e-9);
        assert!((v[1] - 2.0).abs() < 1e-14);
        assert!((v[2] - (2f64.exp() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn phase_distance_wraps() {
        assert!((phase_distance(0.1, std::f64::consts::TAU - 0.1) - 0.2).abs() < 1e-14);
        assert_eq!(phase_distance(1.0, 1.0), 0.0);
    }
}
