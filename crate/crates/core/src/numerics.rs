//! Small numerical building blocks shared by the solvers: quadrature rules,
//! least-squares line fits, tridiagonal solves and Hermite interpolation.

/// Composite Simpson weights (including the spacing) for an odd number of
/// uniform samples. Falls back to trapezoid weights for even counts.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    if n < 3 || n % 2 == 0 {
        return trapezoid_weights(n, h);
    }
    let mut w = vec![0.0; n];
    for (i, wi) in w.iter_mut().enumerate() {
        *wi = if i == 0 || i == n - 1 {
            h / 3.0
        } else if i % 2 == 1 {
            4.0 * h / 3.0
        } else {
            2.0 * h / 3.0
        };
    }
    w
}

pub fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    if n > 0 {
        w[0] = 0.5 * h;
        w[n - 1] = 0.5 * h;
    }
    if n == 1 {
        w[0] = 0.0;
    }
    w
}

pub fn simpson(values: &[f64], h: f64) -> f64 {
    let w = simpson_weights(values.len(), h);
    values.iter().zip(&w).map(|(v, w)| v * w).sum()
}

pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    let w = trapezoid_weights(values.len(), h);
    values.iter().zip(&w).map(|(v, w)| v * w).sum()
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * pn - pnm1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Least-squares line `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - slope * a - intercept).powi(2))
        .sum();
    Some(LineFit {
        slope,
        intercept,
        residual: (ss / nf).sqrt(),
    })
}

/// Order of `values ~ C eps^p` by log-log least squares.
pub fn fit_order(eps: &[f64], values: &[f64]) -> Option<LineFit> {
    if values.iter().any(|v| !(*v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ly: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly)
}

/// Solves a tridiagonal system with sub-diagonal `a` (a[0] unused),
/// diagonal `b` and super-diagonal `c` (c[n-1] unused). Returns `None` when a
/// pivot vanishes.
pub fn thomas(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    let mut piv = b[0];
    if piv == 0.0 || !piv.is_finite() {
        return None;
    }
    cp[0] = if n > 1 { c[0] / piv } else { 0.0 };
    dp[0] = d[0] / piv;
    for i in 1..n {
        piv = b[i] - a[i] * cp[i - 1];
        if piv == 0.0 || !piv.is_finite() {
            return None;
        }
        cp[i] = if i + 1 < n { c[i] / piv } else { 0.0 };
        dp[i] = (d[i] - a[i] * dp[i - 1]) / piv;
    }
    let mut x = dp;
    for i in (0..n.saturating_sub(1)).rev() {
        x[i] -= cp[i] * x[i + 1];
    }
    Some(x)
}

/// Quintic Hermite interpolation on one interval of length `h` from value,
/// first and second derivative at both ends. Returns value, first and second
/// derivative at local coordinate `t ∈ [0,1]`.
pub fn quintic_hermite(
    t: f64,
    h: f64,
    left: [f64; 3],
    right: [f64; 3],
) -> [f64; 3] {
    let (t2, t3) = (t * t, t * t * t);
    let (t4, t5) = (t3 * t, t3 * t2);
    // Basis functions and their derivatives in t.
    let h0 = [1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5, -30.0 * t2 + 60.0 * t3 - 30.0 * t4, -60.0 * t + 180.0 * t2 - 120.0 * t3];
    let h1 = [t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5, 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4, -36.0 * t + 96.0 * t2 - 60.0 * t3];
    let h2 = [0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5), 0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4), 0.5 * (2.0 - 18.0 * t + 36.0 * t2 - 20.0 * t3)];
    let h5 = [10.0 * t3 - 15.0 * t4 + 6.0 * t5, 30.0 * t2 - 60.0 * t3 + 30.0 * t4, 60.0 * t - 180.0 * t2 + 120.0 * t3];
    let h4 = [-4.0 * t3 + 7.0 * t4 - 3.0 * t5, -12.0 * t2 + 28.0 * t3 - 15.0 * t4, -24.0 * t + 84.0 * t2 - 60.0 * t3];
    let h3 = [0.5 * (t3 - 2.0 * t4 + t5), 0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4), 0.5 * (6.0 * t - 24.0 * t2 + 20.0 * t3)];
    let mut out = [0.0; 3];
    let scale = [1.0, 1.0 / h, 1.0 / (h * h)];
    for k in 0..3 {
        out[k] = (left[0] * h0[k]
            + left[1] * h * h1[k]
            + left[2] * h * h * h2[k]
            + right[0] * h5[k]
            + right[1] * h * h4[k]
            + right[2] * h * h * h3[k])
            * scale[k];
    }
    out
}

/// Cubic Hermite interpolation returning value and first derivative.
pub fn cubic_hermite(t: f64, h: f64, y0: f64, d0: f64, y1: f64, d1: f64) -> (f64, f64) {
    let (t2, t3) = (t * t, t * t * t);
    let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + t) * h * d0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * h * d1;
    let dv = ((6.0 * t2 - 6.0 * t) * y0
        + (3.0 * t2 - 4.0 * t + 1.0) * h * d0
        + (-6.0 * t2 + 6.0 * t) * y1
        + (3.0 * t2 - 2.0 * t) * h * d1)
        / h;
    (v, dv)
}

/// Deterministic low-discrepancy points (Halton, bases 2, 3, 5, ...).
pub fn halton(index: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let mut i = index;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Quintic smoothstep cutoff: 1 on |x| ≤ 1, 0 on |x| ≥ 2, C² in between.
/// Returns the value and its first and second derivatives.
pub fn cutoff(x: f64) -> [f64; 3] {
    let a = x.abs();
    if a <= 1.0 {
        return [1.0, 0.0, 0.0];
    }
    if a >= 2.0 {
        return [0.0, 0.0, 0.0];
    }
    let t = a - 1.0;
    let s = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
    let ds = 30.0 * t * t * (1.0 - t) * (1.0 - t);
    let dds = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
    let sg = x.signum();
    [1.0 - s, -ds * sg, -dds]
}

/// Central finite-difference weights for the first derivative, fourth order.
pub fn d1_fourth(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_cubics_exactly() {
        let n = 11;
        let h = 0.2;
        let v: Vec<f64> = (0..n).map(|i| (i as f64 * h).powi(3)).collect();
        assert!((simpson(&v, h) - 2.0f64.powi(4) / 4.0).abs() < 1e-13);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn thomas_matches_dense_solution() {
        let a = [0.0, -1.0, -1.0, -1.0];
        let b = [2.0, 2.0, 2.0, 2.0];
        let c = [-1.0, -1.0, -1.0, 0.0];
        let x_true = [1.0, -2.0, 0.5, 3.0];
        let d: Vec<f64> = (0..4)
            .map(|i| {
                let mut s = b[i] * x_true[i];
                if i > 0 {
                    s += a[i] * x_true[i - 1];
                }
                if i < 3 {
                    s += c[i] * x_true[i + 1];
                }
                s
            })
            .collect();
        let x = thomas(&a, &b, &c, &d).unwrap();
        for i in 0..4 {
            assert!((x[i] - x_true[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn quintic_hermite_reproduces_quintics() {
        let p = |x: f64| [x.powi(5) - 2.0 * x * x, 5.0 * x.powi(4) - 4.0 * x, 20.0 * x.powi(3) - 4.0];
        let (x0, h) = (0.3, 0.7);
        let r = quintic_hermite(0.37, h, p(x0), p(x0 + h));
        let e = p(x0 + 0.37 * h);
        for k in 0..3 {
            assert!((r[k] - e[k]).abs() < 1e-12, "{k}: {} vs {}", r[k], e[k]);
        }
    }

    #[test]
    fn cutoff_is_c2() {
        for x in [1.0, 2.0, -1.0, -2.0] {
            let a = cutoff(x - 1e-9);
            let b = cutoff(x + 1e-9);
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() < 1e-6);
            }
        }
        let h = 1e-5;
        let x = 1.37;
        let d = (cutoff(x + h)[0] - cutoff(x - h)[0]) / (2.0 * h);
        assert!((d - cutoff(x)[1]).abs() < 1e-8);
        let dd = (cutoff(x + h)[1] - cutoff(x - h)[1]) / (2.0 * h);
        assert!((dd - cutoff(x)[2]).abs() < 1e-6);
    }

    #[test]
    fn fit_order_recovers_power() {
        let e = [0.1, 0.05, 0.025];
        let v: Vec<f64> = e.iter().map(|x: &f64| 3.0 * x.powf(2.5)).collect();
        assert!((fit_order(&e, &v).unwrap().slope - 2.5).abs() < 1e-12);
    }
}
