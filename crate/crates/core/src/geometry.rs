//! Flat-wall geometry on the unit square: the interface as a graph
//! `y = γ(x, t)` with Neumann ends, its curve-shortening (graph mean
//! curvature) flow, and the signed-distance frame around it.
//!
//! Every curve is handled through the cosine interpolant of its samples,
//! which is the even extension across `x = 0` and `x = 1`. Distances are
//! therefore automatically those to the reflected interface.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::dct::CosineSeries;
use crate::grid::Grid2D;
use crate::numerics::{gauss_legendre, thomas};
use crate::{Result, SilError};

/// Height samples of the interface on a uniform grid of `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterfaceGraph {
    pub x: Vec<f64>,
    pub gamma: Vec<f64>,
    pub t: f64,
}

impl InterfaceGraph {
    pub fn from_fn(points: usize, t: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        if points < 5 {
            return Err(SilError::InvalidInput("interface graph needs at least 5 points".into()));
        }
        let n = (points - 1) as f64;
        let x: Vec<f64> = (0..points).map(|i| i as f64 / n).collect();
        let gamma: Vec<f64> = x.iter().map(|v| f(*v)).collect();
        if gamma.iter().any(|g| !g.is_finite()) {
            return Err(SilError::InvalidInput("non-finite interface height".into()));
        }
        Ok(InterfaceGraph { x, gamma, t })
    }

    pub fn points(&self) -> usize {
        self.x.len()
    }

    pub fn h(&self) -> f64 {
        1.0 / (self.points() - 1) as f64
    }

    /// One-sided fourth-order slope estimates at `x = 0` and `x = 1`.
    pub fn endpoint_slopes(&self) -> (f64, f64) {
        let g = &self.gamma;
        let n = g.len() - 1;
        let h = self.h();
        let one_sided = |v: [f64; 5]| {
            (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) / (12.0 * h)
        };
        let left = one_sided([g[0], g[1], g[2], g[3], g[4]]);
        let right = -one_sided([g[n], g[n - 1], g[n - 2], g[n - 3], g[n - 4]]);
        (left, right)
    }

    /// Checks the Neumann ends and that the graph keeps a margin of `2δ`
    /// from the bottom and top walls.
    pub fn check_admissible(&self, delta: f64, slope_tol: f64) -> Result<()> {
        let (a, b) = self.endpoint_slopes();
        if a.abs() > slope_tol || b.abs() > slope_tol {
            return Err(SilError::InvalidInput(format!(
                "endpoint slopes {a:e}, {b:e} exceed {slope_tol:e}"
            )));
        }
        let lo = self.gamma.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.gamma.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if lo < 2.0 * delta || hi > 1.0 - 2.0 * delta {
            return Err(SilError::InvalidInput(format!(
                "graph range [{lo}, {hi}] leaves less than 2δ = {} to the walls",
                2.0 * delta
            )));
        }
        Ok(())
    }

    pub fn min(&self) -> f64 {
        self.gamma.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.gamma.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Value and first three derivatives of a cosine series at `xi`.
fn cosine_jet(c: &[f64], xi: f64) -> [f64; 4] {
    let th = PI * xi;
    let (s1, c1) = th.sin_cos();
    let (mut s, mut co) = (0.0, 1.0);
    let mut out = [0.0; 4];
    for (k, a) in c.iter().enumerate() {
        if k > 0 {
            let sn = s * c1 + co * s1;
            co = co * c1 - s * s1;
            s = sn;
        }
        let w = k as f64 * PI;
        let (aw, aw2) = (a * w, a * w * w);
        out[0] += a * co;
        out[1] -= aw * s;
        out[2] -= aw2 * co;
        out[3] += aw2 * w * s;
    }
    out
}

/// Cosine coefficients with negligible trailing terms dropped.
fn trimmed(mut c: Vec<f64>) -> Vec<f64> {
    let scale = c.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    while c.len() > 1 && c[c.len() - 1].abs() <= 1e-17 * scale {
        c.pop();
    }
    c
}

/// Interface at one instant: cosine coefficients of `γ(·, t)` and of its
/// time derivative, plus an arclength table on the reflected range
/// `[-1, 2]`.
#[derive(Debug, Clone)]
pub struct Curve {
    pub t: f64,
    coeffs: Vec<f64>,
    rates: Vec<f64>,
    /// Seed polyline on `[-1, 2]`.
    poly_x: Vec<f64>,
    poly_y: Vec<f64>,
    /// Cumulative arclength from `x = 0` at the polyline abscissas.
    arc: Vec<f64>,
}

/// Signed-distance coordinates of one point and their derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FramePoint {
    pub r: f64,
    /// Abscissa of the foot point.
    pub xi: f64,
    /// Arclength of the foot point, measured from `x = 0`.
    pub s: f64,
    pub kappa: f64,
    /// `∇r` (the unit normal at the foot).
    pub grad_r: [f64; 2],
    pub grad_xi: [f64; 2],
    pub lap_r: f64,
    pub lap_xi: f64,
    pub r_t: f64,
    pub xi_t: f64,
}

const POLY_PER_UNIT: usize = 128;
const ARC_GAUSS: usize = 6;

impl Curve {
    pub fn new(coeffs: Vec<f64>, rates: Vec<f64>, t: f64) -> Self {
        let coeffs = trimmed(coeffs);
        let rates = trimmed(rates);
        let n = 3 * POLY_PER_UNIT;
        let poly_x: Vec<f64> = (0..=n).map(|i| -1.0 + i as f64 / POLY_PER_UNIT as f64).collect();
        let poly_y: Vec<f64> = poly_x.iter().map(|x| cosine_jet(&coeffs, *x)[0]).collect();
        let (gx, gw) = gauss_legendre(ARC_GAUSS);
        let mut arc = vec![0.0; n + 1];
        for i in 0..n {
            let (a, b) = (poly_x[i], poly_x[i + 1]);
            let half = 0.5 * (b - a);
            let piece: f64 = gx
                .iter()
                .zip(&gw)
                .map(|(x, w)| {
                    let d = cosine_jet(&coeffs, a + half * (x + 1.0))[1];
                    w * half * (1.0 + d * d).sqrt()
                })
                .sum();
            arc[i + 1] = arc[i] + piece;
        }
        let origin = arc[POLY_PER_UNIT];
        for v in arc.iter_mut() {
            *v -= origin;
        }
        Curve {
            t,
            coeffs,
            rates,
            poly_x,
            poly_y,
            arc,
        }
    }

    /// Cosine interpolant of a graph; the curve is frozen (zero velocity).
    pub fn from_graph(g: &InterfaceGraph) -> Self {
        let c = CosineSeries::from_samples(&g.gamma).coeffs;
        let z = vec![0.0; c.len()];
        Curve::new(c, z, g.t)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `γ, γ′, γ″, γ‴` at `xi`.
    pub fn jet(&self, xi: f64) -> [f64; 4] {
        cosine_jet(&self.coeffs, xi)
    }

    /// `γ_t` and `∂_x γ_t` at `xi`.
    pub fn velocity(&self, xi: f64) -> [f64; 2] {
        let j = cosine_jet(&self.rates, xi);
        [j[0], j[1]]
    }

    /// `γ_t` and its first three abscissa derivatives at `xi`.
    pub fn rate_jet(&self, xi: f64) -> [f64; 4] {
        cosine_jet(&self.rates, xi)
    }

    /// Signed curvature `γ″/(1+γ′²)^{3/2}`; positive where the graph is convex.
    pub fn curvature(&self, xi: f64) -> f64 {
        let j = self.jet(xi);
        j[2] / (1.0 + j[1] * j[1]).powf(1.5)
    }

    /// Largest `|κ|` over a fine sampling of `[0, 1]`.
    pub fn max_curvature(&self) -> f64 {
        (0..=512)
            .map(|i| self.curvature(i as f64 / 512.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_slope(&self) -> f64 {
        (0..=512)
            .map(|i| self.jet(i as f64 / 512.0)[1].abs())
            .fold(0.0, f64::max)
    }

    /// Arclength from `x = 0` to the abscissa `xi ∈ [-1, 2]`.
    pub fn arclength(&self, xi: f64) -> f64 {
        let s = (xi + 1.0) * POLY_PER_UNIT as f64;
        let i = (s.floor().max(0.0) as usize).min(self.arc.len() - 2);
        let a = self.poly_x[i];
        let half = 0.5 * (xi - a);
        let (gx, gw) = gauss_legendre(ARC_GAUSS);
        let piece: f64 = gx
            .iter()
            .zip(&gw)
            .map(|(x, w)| {
                let d = self.jet(a + half * (x + 1.0))[1];
                w * half * (1.0 + d * d).sqrt()
            })
            .sum();
        self.arc[i] + piece
    }

    /// Nearest point on the seed polyline: `(xi, distance²)`. The nearest
    /// point lies within the vertical distance of `x`, which bounds the
    /// segments that need to be searched.
    fn seed(&self, x: f64, y: f64) -> (f64, f64) {
        let mut best = (x, f64::INFINITY);
        let reach = (y - self.jet(x)[0]).abs();
        let unit = POLY_PER_UNIT as f64;
        let last = self.poly_x.len() - 1;
        let lo = (((x - reach + 1.0) * unit).floor() - 2.0).max(0.0) as usize;
        let hi = ((((x + reach + 1.0) * unit).ceil() + 2.0).max(1.0) as usize).min(last);
        for i in lo.min(last - 1)..hi {
            let (ax, ay) = (self.poly_x[i], self.poly_y[i]);
            let (dx, dy) = (self.poly_x[i + 1] - ax, self.poly_y[i + 1] - ay);
            let len2 = dx * dx + dy * dy;
            let t = (((x - ax) * dx + (y - ay) * dy) / len2).clamp(0.0, 1.0);
            let (px, py) = (ax + t * dx - x, ay + t * dy - y);
            let d2 = px * px + py * py;
            if d2 < best.1 {
                best = (ax + t * dx, d2);
            }
        }
        best
    }

    /// Foot abscissa of `(x, y)`: polyline seed refined by Newton's method
    /// on the smooth curve. Returns `(xi, r)` with `r > 0` above the graph.
    pub fn foot(&self, x: f64, y: f64) -> (f64, f64) {
        let (mut xi, _) = self.seed(x, y);
        let step = 1.0 / POLY_PER_UNIT as f64;
        let (lo, hi) = (xi - 2.0 * step, xi + 2.0 * step);
        for _ in 0..30 {
            let j = self.jet(xi);
            let f = (xi - x) + (j[0] - y) * j[1];
            let df = 1.0 + j[1] * j[1] + (j[0] - y) * j[2];
            if df <= 0.0 {
                break;
            }
            let next = (xi - f / df).clamp(lo, hi);
            let done = (next - xi).abs() <= 1e-15 * (1.0 + xi.abs());
            xi = next;
            if done {
                break;
            }
        }
        let j = self.jet(xi);
        let w = (1.0 + j[1] * j[1]).sqrt();
        let r = (-(x - xi) * j[1] + (y - j[0])) / w;
        (xi, r)
    }

    /// Signed distance with its first and second spatial derivatives and the
    /// time derivatives at fixed `(x, y)`, all in closed form from the foot.
    pub fn frame_point(&self, x: f64, y: f64) -> FramePoint {
        let (xi, r) = self.foot(x, y);
        let [_, g1, g2, g3] = self.jet(xi);
        let [gt, gt1] = self.velocity(xi);
        let w2 = 1.0 + g1 * g1;
        let w = w2.sqrt();
        let kappa = g2 / (w2 * w);
        let dkappa = g3 / (w2 * w) - 3.0 * g2 * g2 * g1 / (w2 * w2 * w);
        let dw = g1 * g2 / w;
        let tan = [1.0 / w, g1 / w];
        let nor = [-g1 / w, 1.0 / w];
        let q = 1.0 - r * kappa;
        let a = 1.0 / (w * q);
        let da = -(dw * q - w * r * dkappa) / (w * q * w * q);
        FramePoint {
            r,
            xi,
            s: self.arclength(xi),
            kappa,
            grad_r: nor,
            grad_xi: [a * tan[0], a * tan[1]],
            lap_r: -kappa / q,
            lap_xi: a * da,
            r_t: -gt / w,
            xi_t: (r * gt1 / w2 - gt * g1 / w) / (w * q),
        }
    }

    /// Signed distance only.
    pub fn distance(&self, x: f64, y: f64) -> f64 {
        self.foot(x, y).1
    }
}

/// Time integration scheme for the graph flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum McfScheme {
    /// Implicit second difference with the mobility `1/(1+γ_x²)` lagged:
    /// each step is an M-matrix solve, so the discrete maximum principle holds.
    #[default]
    SemiImplicit,
    /// Cosine pseudo-spectral in space, classical Runge–Kutta in time.
    SpectralRk4,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McfOptions {
    pub dt: f64,
    /// Output times, increasing, all after the initial time.
    pub sample_times: Vec<f64>,
    pub scheme: McfScheme,
    /// Largest admissible `|γ_x|` before the graph description is abandoned.
    pub slope_cap: f64,
}

impl McfOptions {
    pub fn uniform(dt: f64, t_end: f64, samples: usize, scheme: McfScheme) -> Self {
        McfOptions {
            dt,
            sample_times: (1..=samples).map(|k| t_end * k as f64 / samples as f64).collect(),
            scheme,
            slope_cap: 10.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct McfTrajectory {
    /// Initial state followed by one state per sample time.
    pub states: Vec<InterfaceGraph>,
    pub steps: usize,
    /// Largest `|γ_x|` met during the run.
    pub max_slope: f64,
    /// Largest endpoint slope of the cosine interpolant over all steps.
    pub max_endpoint_slope: f64,
    /// Per-step extrema, for the comparison-principle check.
    pub min_history: Vec<f64>,
    pub max_history: Vec<f64>,
}

impl McfTrajectory {
    /// True when `min γ` never decreases and `max γ` never increases by more
    /// than `tol`.
    pub fn extrema_monotone(&self, tol: f64) -> bool {
        self.min_history.windows(2).all(|w| w[1] >= w[0] - tol)
            && self.max_history.windows(2).all(|w| w[1] <= w[0] + tol)
    }
}

/// Spectral differentiation on the vertex grid of `[0, 1]` (first and second
/// derivative of the cosine interpolant, evaluated at the nodes).
struct SpectralDiff {
    d1: Vec<f64>,
    d2: Vec<f64>,
    n: usize,
}

impl SpectralDiff {
    fn new(n: usize) -> Self {
        let mut d1 = vec![0.0; n * n];
        let mut d2 = vec![0.0; n * n];
        let h = 1.0 / (n - 1) as f64;
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            let c = CosineSeries::from_samples(&e).coeffs;
            for j in 0..n {
                let jet = cosine_jet(&c, j as f64 * h);
                d1[j * n + i] = jet[1];
                d2[j * n + i] = jet[2];
            }
        }
        SpectralDiff { d1, d2, n }
    }

    fn apply(&self, m: &[f64], v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|j| m[j * self.n..(j + 1) * self.n].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `γ_xx / (1 + γ_x²)` at the nodes.
    fn rhs(&self, g: &[f64]) -> Vec<f64> {
        let gx = self.apply(&self.d1, g);
        let gxx = self.apply(&self.d2, g);
        gx.iter().zip(&gxx).map(|(a, b)| b / (1.0 + a * a)).collect()
    }
}

/// Right-hand side `γ_xx/(1+γ_x²)` of the graph flow by the cosine
/// interpolant, at the sample nodes.
pub fn mcf_rhs(g: &InterfaceGraph) -> Vec<f64> {
    SpectralDiff::new(g.points()).rhs(&g.gamma)
}

fn semi_implicit_step(g: &[f64], dt: f64, h: f64) -> Option<Vec<f64>> {
    let n = g.len();
    let at = |i: isize| -> f64 {
        let k = if i < 0 {
            (-i) as usize
        } else if i as usize >= n {
            2 * (n - 1) - i as usize
        } else {
            i as usize
        };
        g[k]
    };
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut c = vec![0.0; n];
    for i in 0..n {
        let ii = i as isize;
        let gx = (at(ii + 1) - at(ii - 1)) / (2.0 * h);
        let mob = dt / (h * h * (1.0 + gx * gx));
        b[i] = 1.0 + 2.0 * mob;
        // Ghost nodes mirror the first interior neighbour.
        if i == 0 {
            c[i] = -2.0 * mob;
        } else if i == n - 1 {
            a[i] = -2.0 * mob;
        } else {
            a[i] = -mob;
            c[i] = -mob;
        }
    }
    thomas(&a, &b, &c, g)
}

/// Evolves `γ_t = γ_xx/(1+γ_x²)` with Neumann ends and records the state at
/// each sample time.
pub fn mcf_evolve(g0: &InterfaceGraph, opts: &McfOptions) -> Result<McfTrajectory> {
    if !(opts.dt > 0.0) {
        return Err(SilError::InvalidInput("time step must be positive".into()));
    }
    let n = g0.points();
    let h = g0.h();
    let diff = SpectralDiff::new(n);
    let mut dt_cap = f64::INFINITY;
    if opts.scheme == McfScheme::SpectralRk4 {
        // Stability limit of RK4 for the stiffest cosine mode.
        dt_cap = 2.5 / (PI * (n - 1) as f64).powi(2);
    }
    let mut gamma = g0.gamma.clone();
    let mut t = g0.t;
    let mut traj = McfTrajectory {
        states: vec![g0.clone()],
        steps: 0,
        max_slope: 0.0,
        max_endpoint_slope: 0.0,
        min_history: Vec::new(),
        max_history: Vec::new(),
    };
    let track = |gamma: &[f64], t: f64, traj: &mut McfTrajectory| -> Result<()> {
        let c = CosineSeries::from_samples(gamma).coeffs;
        let slope = (0..=4 * (n - 1))
            .map(|i| cosine_jet(&c, i as f64 / (4 * (n - 1)) as f64)[1].abs())
            .fold(0.0, f64::max);
        let ends = cosine_jet(&c, 0.0)[1].abs().max(cosine_jet(&c, 1.0)[1].abs());
        traj.max_slope = traj.max_slope.max(slope);
        traj.max_endpoint_slope = traj.max_endpoint_slope.max(ends);
        if !slope.is_finite() || slope > opts.slope_cap {
            return Err(SilError::BlowUp {
                slope,
                cap: opts.slope_cap,
                t,
            });
        }
        traj.min_history.push(gamma.iter().cloned().fold(f64::INFINITY, f64::min));
        traj.max_history.push(gamma.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        Ok(())
    };
    track(&gamma, t, &mut traj)?;
    for &target in &opts.sample_times {
        if target <= t {
            return Err(SilError::InvalidInput("sample times must increase past the start".into()));
        }
        let steps = ((target - t) / opts.dt.min(dt_cap)).ceil().max(1.0) as usize;
        let dt = (target - t) / steps as f64;
        for k in 0..steps {
            gamma = match opts.scheme {
                McfScheme::SemiImplicit => semi_implicit_step(&gamma, dt, h)
                    .ok_or(SilError::StepRejected { t })?,
                McfScheme::SpectralRk4 => {
                    let k1 = diff.rhs(&gamma);
                    let stage = |k: &[f64], a: f64| -> Vec<f64> {
                        gamma.iter().zip(k).map(|(g, v)| g + a * dt * v).collect()
                    };
                    let k2 = diff.rhs(&stage(&k1, 0.5));
                    let k3 = diff.rhs(&stage(&k2, 0.5));
                    let k4 = diff.rhs(&stage(&k3, 1.0));
                    (0..n)
                        .map(|i| gamma[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                        .collect()
                }
            };
            t = if k + 1 == steps { target } else { t + dt };
            traj.steps += 1;
            track(&gamma, t, &mut traj)?;
        }
        traj.states.push(InterfaceGraph {
            x: g0.x.clone(),
            gamma: gamma.clone(),
            t,
        });
    }
    Ok(traj)
}

/// Interface trajectory as a function of time: cosine coefficients and
/// their rates at the stored states, joined by cubic Hermite interpolation.
#[derive(Debug, Clone)]
pub struct InterfaceHistory {
    pub times: Vec<f64>,
    coeffs: Vec<Vec<f64>>,
    rates: Vec<Vec<f64>>,
}

impl InterfaceHistory {
    /// Rates are the flow's right-hand side at each stored state.
    pub fn from_states(states: &[InterfaceGraph]) -> Result<Self> {
        if states.is_empty() {
            return Err(SilError::InvalidInput("empty interface trajectory".into()));
        }
        let diff = SpectralDiff::new(states[0].points());
        let mut times = Vec::new();
        let mut coeffs = Vec::new();
        let mut rates = Vec::new();
        for s in states {
            if let Some(last) = times.last() {
                if s.t <= *last {
                    return Err(SilError::InvalidInput("trajectory times must increase".into()));
                }
            }
            times.push(s.t);
            coeffs.push(CosineSeries::from_samples(&s.gamma).coeffs);
            rates.push(CosineSeries::from_samples(&diff.rhs(&s.gamma)).coeffs);
        }
        Ok(InterfaceHistory {
            times,
            coeffs,
            rates,
        })
    }

    /// A single frozen state, valid for all times.
    pub fn frozen(g: &InterfaceGraph) -> Self {
        let c = CosineSeries::from_samples(&g.gamma).coeffs;
        InterfaceHistory {
            times: vec![g.t],
            rates: vec![vec![0.0; c.len()]],
            coeffs: vec![c],
        }
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// Curve at time `t`, clamped to the stored range.
    pub fn at(&self, t: f64) -> Curve {
        if self.times.len() == 1 || t <= self.start() {
            return Curve::new(self.coeffs[0].clone(), self.rates[0].clone(), t);
        }
        let last = self.times.len() - 1;
        if t >= self.end() {
            return Curve::new(self.coeffs[last].clone(), self.rates[last].clone(), t);
        }
        let i = match self.times.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(last - 1),
            Err(i) => i - 1,
        };
        let dt = self.times[i + 1] - self.times[i];
        let s = (t - self.times[i]) / dt;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let d00 = (6.0 * s2 - 6.0 * s) / dt;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = (-6.0 * s2 + 6.0 * s) / dt;
        let d11 = 3.0 * s2 - 2.0 * s;
        let (a0, a1) = (&self.coeffs[i], &self.coeffs[i + 1]);
        let (r0, r1) = (&self.rates[i], &self.rates[i + 1]);
        let c = (0..a0.len())
            .map(|k| h00 * a0[k] + h10 * dt * r0[k] + h01 * a1[k] + h11 * dt * r1[k])
            .collect();
        let r = (0..a0.len())
            .map(|k| d00 * a0[k] + d10 * r0[k] + d01 * a1[k] + d11 * r1[k])
            .collect();
        Curve::new(c, r, t)
    }
}

/// Signed-distance frame on the vertex grid of the unit square.
#[derive(Debug, Clone, Serialize)]
pub struct Frame2D {
    pub grid: Grid2D,
    pub t: f64,
    pub delta: f64,
    pub eps: f64,
    #[serde(skip)]
    pub r: Vec<f64>,
    #[serde(skip)]
    pub s: Vec<f64>,
    #[serde(skip)]
    pub xi: Vec<f64>,
    #[serde(skip)]
    pub rho: Vec<f64>,
    #[serde(skip)]
    pub in_tube: Vec<bool>,
    #[serde(skip)]
    pub curve: Curve,
}

/// Curvature-radius check of the tube: `δ·max|κ| < ½`.
pub fn check_tube(curve: &Curve, delta: f64) -> Result<()> {
    let product = delta * curve.max_curvature();
    if product >= 0.5 {
        return Err(SilError::TubularOverlap { product });
    }
    Ok(())
}

/// Builds the frame of `curve` on `grid`. `height` gives `h_ε` as a function
/// of the foot abscissa; `ρ_ε = r/ε − h_ε`.
pub fn build_frame_from_curve(
    curve: Curve,
    grid: Grid2D,
    delta: f64,
    eps: f64,
    height: Option<&(dyn Fn(f64) -> f64 + Sync)>,
) -> Result<Frame2D> {
    if !(delta > 0.0 && eps > 0.0) {
        return Err(SilError::InvalidInput("delta and eps must be positive".into()));
    }
    check_tube(&curve, delta)?;
    let px = grid.px();
    let rows: Vec<Vec<(f64, f64, f64)>> = (0..grid.py())
        .into_par_iter()
        .map(|j| {
            (0..px)
                .map(|i| {
                    let (xi, r) = curve.foot(grid.x(i), grid.y(j));
                    (r, xi, curve.arclength(xi))
                })
                .collect()
        })
        .collect();
    let len = grid.len();
    let mut frame = Frame2D {
        grid,
        t: curve.t,
        delta,
        eps,
        r: Vec::with_capacity(len),
        s: Vec::with_capacity(len),
        xi: Vec::with_capacity(len),
        rho: Vec::with_capacity(len),
        in_tube: Vec::with_capacity(len),
        curve,
    };
    for (r, xi, s) in rows.into_iter().flatten() {
        let h = height.map_or(0.0, |f| f(xi));
        frame.r.push(r);
        frame.xi.push(xi);
        frame.s.push(s);
        frame.rho.push(r / eps - h);
        frame.in_tube.push(r.abs() < delta);
    }
    Ok(frame)
}

/// [`build_frame_from_curve`] for a sampled graph, with the height function
/// given by samples on a uniform grid of `[0, 1]` (empty for `h_ε = 0`).
pub fn build_frame(
    g: &InterfaceGraph,
    grid: Grid2D,
    delta: f64,
    eps: f64,
    height: &[f64],
) -> Result<Frame2D> {
    let curve = Curve::from_graph(g);
    if height.is_empty() {
        return build_frame_from_curve(curve, grid, delta, eps, None);
    }
    if height.len() < 2 {
        return Err(SilError::InvalidInput("height function needs two samples".into()));
    }
    let hs = CosineSeries::from_samples(height);
    let f = move |xi: f64| hs.value(xi);
    build_frame_from_curve(curve, grid, delta, eps, Some(&f))
}

impl Frame2D {
    fn at(&self, f: &[f64], i: isize, j: isize) -> f64 {
        // Mirror across every wall (even extension).
        let fold = |k: isize, n: usize| -> usize {
            let last = (n - 1) as isize;
            let k = if k < 0 { -k } else { k };
            (if k > last { 2 * last - k } else { k }) as usize
        };
        f[self.grid.index(fold(i, self.grid.px()), fold(j, self.grid.py()))]
    }

    /// Central-difference gradient of `r` at node `(i, j)`.
    pub fn grad_r(&self, i: usize, j: usize) -> [f64; 2] {
        let (i, j) = (i as isize, j as isize);
        [
            (self.at(&self.r, i + 1, j) - self.at(&self.r, i - 1, j)) / (2.0 * self.grid.hx()),
            (self.at(&self.r, i, j + 1) - self.at(&self.r, i, j - 1)) / (2.0 * self.grid.hy()),
        ]
    }

    /// Five-point Laplacian of `r` with mirrored ghost nodes.
    pub fn laplacian_r(&self) -> Vec<f64> {
        let (hx2, hy2) = (self.grid.hx().powi(2), self.grid.hy().powi(2));
        let mut out = Vec::with_capacity(self.grid.len());
        for j in 0..self.grid.py() as isize {
            for i in 0..self.grid.px() as isize {
                let c = self.at(&self.r, i, j);
                out.push(
                    (self.at(&self.r, i + 1, j) - 2.0 * c + self.at(&self.r, i - 1, j)) / hx2
                        + (self.at(&self.r, i, j + 1) - 2.0 * c + self.at(&self.r, i, j - 1))
                            / hy2,
                );
            }
        }
        out
    }

    /// `max ||∇r| − 1|` over the nodes of `Γ(δ)`.
    pub fn eikonal_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.grid.py() {
            for i in 0..self.grid.px() {
                if self.in_tube[self.grid.index(i, j)] {
                    let g = self.grad_r(i, j);
                    worst = worst.max(((g[0] * g[0] + g[1] * g[1]).sqrt() - 1.0).abs());
                }
            }
        }
        worst
    }

    /// Largest `|r(−x, y) − r(x, y)|` and `|r(2 − x, y) − r(x, y)|` over the
    /// grid rows, evaluating the mirrored points directly.
    pub fn reflection_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.grid.py() {
            let y = self.grid.y(j);
            for i in 0..self.grid.px() {
                let x = self.grid.x(i);
                let r = self.r[self.grid.index(i, j)];
                worst = worst
                    .max((self.curve.distance(-x, y) - r).abs())
                    .max((self.curve.distance(2.0 - x, y) - r).abs());
            }
        }
        worst
    }

    /// Largest `|∂_x r|` on the side walls inside `Γ(2δ)`, by central
    /// differences across the wall.
    pub fn wall_normal_gradient(&self) -> f64 {
        let k = 1e-4;
        let mut worst: f64 = 0.0;
        for j in 0..self.grid.py() {
            let y = self.grid.y(j);
            for x in [0.0, 1.0] {
                let r = self.curve.distance(x, y);
                if r.abs() < 2.0 * self.delta {
                    let d = (self.curve.distance(x + k, y) - self.curve.distance(x - k, y)) / (2.0 * k);
                    worst = worst.max(d.abs());
                }
            }
        }
        worst
    }

    /// Largest `||∇ψ|² − |∂_nψ|² − |∇_τψ|²|` over the nodes of `Γ(δ/2)`, with
    /// the normal taken as the discrete `∇r`.
    pub fn split_defect(&self, grad_psi: impl Fn(f64, f64) -> [f64; 2]) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.grid.py() {
            for i in 0..self.grid.px() {
                let k = self.grid.index(i, j);
                if self.r[k].abs() >= 0.5 * self.delta {
                    continue;
                }
                let n = self.grad_r(i, j);
                let g = grad_psi(self.grid.x(i), self.grid.y(j));
                let dn = g[0] * n[0] + g[1] * n[1];
                let tau = [g[0] - dn * n[0], g[1] - dn * n[1]];
                let full = g[0] * g[0] + g[1] * g[1];
                worst = worst.max((full - dn * dn - tau[0] * tau[0] - tau[1] * tau[1]).abs());
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CoordinateReport {
    pub t: f64,
    pub dt: f64,
    pub h: f64,
    pub samples: usize,
    /// `max |V − H|` with `V = −∂_t r` (forward difference) and `H = −Δr`
    /// (five-point stencil of the frame's distance with the grid spacing).
    pub velocity_vs_laplacian: f64,
    pub laplacian_vs_graph: f64,
    pub velocity_vs_graph: f64,
    pub max_curvature: f64,
    pub tolerance: f64,
    /// True when the interface moves by mean curvature within the tolerance.
    pub mcf_consistent: bool,
}

/// Compares normal velocity, `−Δr` and the graph curvature on the interface
/// of `a`, using the frame `b` at the next time for `∂_t r`.
pub fn coordinate_diagnostics(a: &Frame2D, b: &Frame2D) -> Result<CoordinateReport> {
    let dt = b.t - a.t;
    if !(dt > 0.0) {
        return Err(SilError::InvalidInput("frames must be ordered in time".into()));
    }
    let h = a.grid.hx().max(a.grid.hy());
    let samples = a.grid.px();
    let mut rep = CoordinateReport {
        t: a.t,
        dt,
        h,
        samples,
        velocity_vs_laplacian: 0.0,
        laplacian_vs_graph: 0.0,
        velocity_vs_graph: 0.0,
        max_curvature: 0.0,
        tolerance: 5.0 * (h + dt),
        mcf_consistent: false,
    };
    for i in 0..samples {
        let x = i as f64 / (samples - 1) as f64;
        let y = a.curve.jet(x)[0];
        let r0 = a.curve.distance(x, y);
        let v = -(b.curve.distance(x, y) - r0) / dt;
        let lap = (a.curve.distance(x + h, y)
            + a.curve.distance(x - h, y)
            + a.curve.distance(x, y + h)
            + a.curve.distance(x, y - h)
            - 4.0 * r0)
            / (h * h);
        let hm = -lap;
        let k = a.curve.curvature(x);
        rep.velocity_vs_laplacian = rep.velocity_vs_laplacian.max((v - hm).abs());
        rep.laplacian_vs_graph = rep.laplacian_vs_graph.max((hm - k).abs());
        rep.velocity_vs_graph = rep.velocity_vs_graph.max((v - k).abs());
        rep.max_curvature = rep.max_curvature.max(k.abs());
    }
    rep.mcf_consistent = rep.velocity_vs_laplacian <= rep.tolerance;
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cosine(amp: f64) -> InterfaceGraph {
        InterfaceGraph::from_fn(65, 0.0, |x| 0.5 + amp * (PI * x).cos()).unwrap()
    }

    #[test]
    fn flat_graph_is_stationary() {
        let g = InterfaceGraph::from_fn(33, 0.0, |_| 0.5).unwrap();
        for scheme in [McfScheme::SemiImplicit, McfScheme::SpectralRk4] {
            let tr = mcf_evolve(&g, &McfOptions::uniform(1e-3, 0.1, 4, scheme)).unwrap();
            let drift = tr.states.last().unwrap().gamma.iter().map(|v| (v - 0.5).abs()).fold(0.0, f64::max);
            assert!(drift <= 1e-12, "{drift}");
        }
    }

    #[test]
    fn small_amplitude_decays_like_heat_mode() {
        let g = cosine(1e-3);
        for scheme in [McfScheme::SemiImplicit, McfScheme::SpectralRk4] {
            let tr = mcf_evolve(&g, &McfOptions::uniform(1e-5, 0.05, 5, scheme)).unwrap();
            for s in &tr.states[1..] {
                let amp = 0.5 * (s.gamma[0] - s.gamma[64]);
                let exact = 1e-3 * (-PI * PI * s.t).exp();
                assert!((amp / exact - 1.0).abs() < 0.05, "{scheme:?} {} {amp} {exact}", s.t);
            }
            assert!(tr.max_endpoint_slope <= 1e-10);
        }
    }

    #[test]
    fn large_amplitude_flattens_with_monotone_extrema() {
        let g = cosine(0.2);
        let tr = mcf_evolve(&g, &McfOptions::uniform(1e-4, 0.2, 4, McfScheme::SemiImplicit)).unwrap();
        let osc = |s: &InterfaceGraph| s.max() - s.min();
        assert!(osc(tr.states.last().unwrap()) < 0.5 * osc(&g));
        assert!(tr.extrema_monotone(1e-14));
        assert!(tr.max_endpoint_slope <= 1e-10);
    }

    #[test]
    fn blow_up_is_reported() {
        let g = InterfaceGraph::from_fn(33, 0.0, |x| 0.5 + 0.4 * (3.0 * PI * x).cos()).unwrap();
        let mut o = McfOptions::uniform(1e-4, 0.01, 1, McfScheme::SemiImplicit);
        o.slope_cap = 1.0;
        assert!(matches!(mcf_evolve(&g, &o), Err(SilError::BlowUp { .. })));
    }

    #[test]
    fn flat_frame_is_exact() {
        let g = InterfaceGraph::from_fn(17, 0.0, |_| 0.5).unwrap();
        let f = build_frame(&g, Grid2D::square(20), 0.15, 0.1, &[]).unwrap();
        for j in 0..21 {
            for i in 0..21 {
                let k = f.grid.index(i, j);
                assert!((f.r[k] - (f.grid.y(j) - 0.5)).abs() < 1e-14);
                assert!((f.s[k] - f.grid.x(i)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn frame_invariants_on_curved_graph() {
        let g = cosine(0.1);
        let mut eik = Vec::new();
        let mut split = Vec::new();
        let psi = |x: f64, y: f64| [2.0 * (2.0 * x + y).cos(), (2.0 * x + y).cos()];
        for n in [32, 64] {
            let f = build_frame(&g, Grid2D::square(n), 0.15, 0.1, &[]).unwrap();
            let h = 1.0 / n as f64;
            let e = f.eikonal_defect();
            assert!(e <= 3.0 * h, "{e}");
            eik.push(e);
            split.push(f.split_defect(psi));
            assert!(f.reflection_defect() <= 1e-12);
            assert!(f.wall_normal_gradient() <= 1e-8);
        }
        assert!((eik[0] / eik[1]).log2() >= 1.0, "{eik:?}");
        assert!((split[0] / split[1]).log2() >= 1.0, "{split:?}");
    }

    #[test]
    fn closed_form_frame_derivatives_match_differences() {
        let g = cosine(0.1);
        let tr = mcf_evolve(&g, &McfOptions::uniform(1e-5, 0.01, 10, McfScheme::SpectralRk4)).unwrap();
        let hist = InterfaceHistory::from_states(&tr.states).unwrap();
        let (x, y, t) = (0.3, 0.62, 0.005);
        let c = hist.at(t);
        let p = c.frame_point(x, y);
        let k = 1e-4;
        let d = |dx: f64, dy: f64| c.frame_point(x + dx, y + dy);
        let gx = (d(k, 0.0).r - d(-k, 0.0).r) / (2.0 * k);
        let gy = (d(0.0, k).r - d(0.0, -k).r) / (2.0 * k);
        assert!((gx - p.grad_r[0]).abs() < 1e-7 && (gy - p.grad_r[1]).abs() < 1e-7);
        let lap = |f: &dyn Fn(&FramePoint) -> f64| {
            (f(&d(k, 0.0)) + f(&d(-k, 0.0)) + f(&d(0.0, k)) + f(&d(0.0, -k)) - 4.0 * f(&p)) / (k * k)
        };
        assert!((lap(&|q| q.r) - p.lap_r).abs() < 1e-5);
        assert!((lap(&|q| q.xi) - p.lap_xi).abs() < 1e-5);
        let xi_x = (d(k, 0.0).xi - d(-k, 0.0).xi) / (2.0 * k);
        assert!((xi_x - p.grad_xi[0]).abs() < 1e-7);
        let tk = 1e-6;
        let later = hist.at(t + tk).frame_point(x, y);
        let earlier = hist.at(t - tk).frame_point(x, y);
        assert!(((later.r - earlier.r) / (2.0 * tk) - p.r_t).abs() < 1e-6);
        assert!(((later.xi - earlier.xi) / (2.0 * tk) - p.xi_t).abs() < 1e-6);
        // Mean curvature flow: V = H on the interface.
        let on = c.frame_point(x, c.jet(x)[0]);
        assert!((-on.r_t + on.lap_r).abs() < 1e-8, "{} {}", on.r_t, on.lap_r);
    }

    #[test]
    fn coordinate_diagnostics_detect_motion_law() {
        let g = cosine(0.1);
        let grid = Grid2D::square(64);
        let dt = 1e-3;
        let tr = mcf_evolve(&g, &McfOptions::uniform(1e-5, dt, 1, McfScheme::SpectralRk4)).unwrap();
        let a = build_frame(&tr.states[0], grid, 0.15, 0.1, &[]).unwrap();
        let b = build_frame(&tr.states[1], grid, 0.15, 0.1, &[]).unwrap();
        let rep = coordinate_diagnostics(&a, &b).unwrap();
        assert!(rep.mcf_consistent, "{rep:?}");
        let mut frozen = tr.states[0].clone();
        frozen.t = dt;
        let c = build_frame(&frozen, grid, 0.15, 0.1, &[]).unwrap();
        let rep = coordinate_diagnostics(&a, &c).unwrap();
        assert!(!rep.mcf_consistent);
        let flat = InterfaceGraph::from_fn(17, 0.0, |_| 0.5).unwrap();
        let mut later = flat.clone();
        later.t = dt;
        let rep = coordinate_diagnostics(
            &build_frame(&flat, grid, 0.15, 0.1, &[]).unwrap(),
            &build_frame(&later, grid, 0.15, 0.1, &[]).unwrap(),
        )
        .unwrap();
        assert!(rep.velocity_vs_laplacian < 1e-9 && rep.max_curvature < 1e-12);
    }

    #[test]
    fn tube_overlap_is_rejected() {
        let g = InterfaceGraph::from_fn(65, 0.0, |x| 0.5 + 0.1 * (4.0 * PI * x).cos()).unwrap();
        assert!(matches!(
            build_frame(&g, Grid2D::square(16), 0.15, 0.1, &[]),
            Err(SilError::TubularOverlap { .. })
        ));
    }
}
