//! Type-I discrete cosine transform on vertex grids, computed through an FFT
//! of the even extension. Cosine coefficients `a_k` are normalized so that
//! `u_j = ½a_0 + ½(−1)^j a_N + Σ_{k=1}^{N−1} a_k cos(πjk/N)`.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

#[derive(Clone)]
pub struct Dct1 {
    /// Number of samples (N + 1).
    points: usize,
    fft: Option<Arc<dyn Fft<f64>>>,
}

impl std::fmt::Debug for Dct1 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dct1").field("points", &self.points).finish()
    }
}

impl Dct1 {
    pub fn new(points: usize) -> Self {
        assert!(points >= 2, "cosine transform needs at least two samples");
        let intervals = points - 1;
        let fft = if intervals >= 1 {
            Some(FftPlanner::new().plan_fft_forward(2 * intervals))
        } else {
            None
        };
        Dct1 { points, fft }
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// Raw DCT-I: `X_k = x_0 + (−1)^k x_N + 2 Σ x_j cos(πjk/N)`.
    fn raw(&self, x: &mut [f64], buf: &mut Vec<Complex<f64>>) {
        let n = self.points - 1;
        buf.clear();
        buf.extend(x.iter().map(|v| Complex::new(*v, 0.0)));
        buf.extend((1..n).rev().map(|j| Complex::new(x[j], 0.0)));
        self.fft.as_ref().unwrap().process(buf);
        for (k, v) in x.iter_mut().enumerate() {
            *v = buf[k].re;
        }
    }

    /// Samples to cosine coefficients, in place.
    pub fn forward(&self, x: &mut [f64]) {
        let mut buf = Vec::with_capacity(2 * self.points);
        self.forward_with(x, &mut buf);
    }

    pub fn forward_with(&self, x: &mut [f64], buf: &mut Vec<Complex<f64>>) {
        let n = (self.points - 1) as f64;
        self.raw(x, buf);
        for v in x.iter_mut() {
            *v /= n;
        }
    }

    /// Cosine coefficients to samples, in place.
    pub fn inverse(&self, a: &mut [f64]) {
        let mut buf = Vec::with_capacity(2 * self.points);
        self.inverse_with(a, &mut buf);
    }

    pub fn inverse_with(&self, a: &mut [f64], buf: &mut Vec<Complex<f64>>) {
        self.raw(a, buf);
        for v in a.iter_mut() {
            *v *= 0.5;
        }
    }
}

/// Separable DCT-I on an `nx × ny` vertex grid stored row-major with `x`
/// varying fastest.
#[derive(Debug, Clone)]
pub struct Dct2 {
    pub nx: usize,
    pub ny: usize,
    tx: Dct1,
    ty: Dct1,
}

impl Dct2 {
    pub fn new(nx: usize, ny: usize) -> Self {
        Dct2 {
            nx,
            ny,
            tx: Dct1::new(nx),
            ty: Dct1::new(ny),
        }
    }

    fn apply(&self, data: &mut [f64], forward: bool) {
        let (nx, ny) = (self.nx, self.ny);
        let run = |t: &Dct1, rows: &mut [f64], len: usize| {
            rows.par_chunks_mut(len).for_each_init(
                || Vec::with_capacity(2 * len),
                |buf, row| {
                    if forward {
                        t.forward_with(row, buf);
                    } else {
                        t.inverse_with(row, buf);
                    }
                },
            );
        };
        run(&self.tx, data, nx);
        let mut cols = vec![0.0; nx * ny];
        transpose(data, &mut cols, nx, ny);
        run(&self.ty, &mut cols, ny);
        transpose(&cols, data, ny, nx);
    }

    pub fn forward(&self, data: &mut [f64]) {
        self.apply(data, true);
    }

    pub fn inverse(&self, data: &mut [f64]) {
        self.apply(data, false);
    }
}

/// Writes the `ny × nx` row-major array `src` transposed into `dst`.
fn transpose(src: &[f64], dst: &mut [f64], nx: usize, ny: usize) {
    dst.par_chunks_mut(ny).enumerate().for_each(|(i, col)| {
        for (j, v) in col.iter_mut().enumerate() {
            *v = src[j * nx + i];
        }
    });
}

/// Smooth even cosine series on [0, 1] built from samples at `j/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct CosineSeries {
    /// Weighted coefficients `c_k` with `u(ξ) = Σ c_k cos(kπξ)`.
    pub coeffs: Vec<f64>,
}

impl CosineSeries {
    pub fn from_samples(samples: &[f64]) -> Self {
        let mut a = samples.to_vec();
        Dct1::new(samples.len()).forward(&mut a);
        Self::from_dct_coefficients(&a)
    }

    pub fn from_dct_coefficients(a: &[f64]) -> Self {
        let n = a.len() - 1;
        let coeffs = a
            .iter()
            .enumerate()
            .map(|(k, v)| if k == 0 || k == n { 0.5 * v } else { *v })
            .collect();
        CosineSeries { coeffs }
    }

    /// Value and derivatives up to order four at `xi`.
    pub fn eval(&self, xi: f64) -> [f64; 5] {
        cosine_jet(&self.coeffs, xi)
    }

    pub fn value(&self, xi: f64) -> f64 {
        let pi = std::f64::consts::PI;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * (k as f64 * pi * xi).cos())
            .sum()
    }
}

/// Value and first four derivatives of `Σ c_k cos(kπξ)`. The harmonics are
/// generated by angle addition, so only one `sin_cos` call is made.
pub fn cosine_jet(c: &[f64], xi: f64) -> [f64; 5] {
    let pi = std::f64::consts::PI;
    let (s1, c1) = (pi * xi).sin_cos();
    let (mut s, mut co) = (0.0, 1.0);
    let mut out = [0.0; 5];
    for (k, a) in c.iter().enumerate() {
        if k > 0 {
            let sn = s * c1 + co * s1;
            co = co * c1 - s * s1;
            s = sn;
        }
        let w = k as f64 * pi;
        let aw = a * w;
        let aw2 = aw * w;
        let aw3 = aw2 * w;
        out[0] += a * co;
        out[1] -= aw * s;
        out[2] -= aw2 * co;
        out[3] += aw3 * s;
        out[4] += aw3 * w * co;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_known_coefficients() {
        let n = 17;
        let x: Vec<f64> = (0..n)
            .map(|j| 0.3 + (std::f64::consts::PI * 3.0 * j as f64 / 16.0).cos())
            .collect();
        let mut a = x.clone();
        let t = Dct1::new(n);
        t.forward(&mut a);
        assert!((a[0] - 0.6).abs() < 1e-13);
        assert!((a[3] - 1.0).abs() < 1e-13);
        t.inverse(&mut a);
        for j in 0..n {
            assert!((a[j] - x[j]).abs() < 1e-13);
        }
    }

    #[test]
    fn series_interpolates_and_differentiates() {
        let f = |x: f64| (0.7 * (std::f64::consts::PI * x).cos()).exp();
        let s: Vec<f64> = (0..65).map(|j| f(j as f64 / 64.0)).collect();
        let cs = CosineSeries::from_samples(&s);
        let x = 0.3183;
        let e = cs.eval(x);
        assert!((e[0] - f(x)).abs() < 1e-13);
        let h = 1e-4;
        let d = (f(x + h) - f(x - h)) / (2.0 * h);
        assert!((e[1] - d).abs() < 1e-7);
    }

    #[test]
    fn two_dimensional_round_trip() {
        let (nx, ny) = (9, 5);
        let data: Vec<f64> = (0..nx * ny).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut d = data.clone();
        let t = Dct2::new(nx, ny);
        t.forward(&mut d);
        t.inverse(&mut d);
        for i in 0..nx * ny {
            assert!((d[i] - data[i]).abs() < 1e-13);
        }
    }
}
