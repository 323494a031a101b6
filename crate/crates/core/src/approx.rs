//! Approximate solution of the Allen–Cahn system near an evolving graph
//! interface, its remainders, and the difference norms against a computed
//! solution.
//!
//! With `r` the signed distance to the interface and `ξ` the abscissa of the
//! foot point, the inner expansion is
//!
//! ```text
//! G(ρ, ξ, t) = θ₀(ρ) + ε² g₁ φ₂(ρ) + ε³ g₂ φ₄(ρ),   ρ = r/ε − ε h₂(ξ, t),
//! ```
//!
//! where `g₁ = κ²` and `g₂ = 2κ³` are the first two normal derivatives of
//! `∂_t r − Δr` at the interface, `L φ₂ = −ρθ₀′` and
//! `L φ₄ = −½θ₀′(ρ² − d₃/d₁)`. The height `h₂` solves the parabolic
//! equation that makes the `ε³` problem solvable. The order-zero solution
//! keeps only `θ₀(r/ε)`. Both are blended into the wells with
//! `η(r/δ)`:
//!
//! ```text
//! u^A = η(r/δ) G + (1 − η(r/δ)) u_±.
//! ```
//!
//! The odd moment `d₂` has to vanish (even potentials), which removes the
//! first height function and the compatibility defect of the `ε²` problem.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::dct::{cosine_jet, CosineSeries};
use crate::geometry::{check_tube, Curve, InterfaceHistory};
use crate::grid::Grid2D;
use crate::linode::{LinOde1D, VectorAnchor};
use crate::numerics::{cubic_hermite, cutoff, quintic_hermite};
use crate::pdesolver::Field2D;
use crate::profile::{estimate_decay_rate, profile_moments, Moments, Profile1D, ProfilePotential};
use crate::{Result, SilError};

/// Cosine modes of the height function.
pub const HEIGHT_INTERVALS: usize = 64;

/// Tolerance on `max|g₁|·|d₂|`, the projection of the `ε²` source on the
/// kernel.
pub const COMPATIBILITY_LIMIT: f64 = 1e-6;

/// Sampled solution of a linearized profile equation with interpolation
/// data; the second derivative comes from the equation itself.
#[derive(Debug, Clone)]
struct Corrector {
    z0: f64,
    h: f64,
    m: usize,
    values: Vec<f64>,
    deriv: Vec<f64>,
    second: Vec<f64>,
}

impl Corrector {
    /// `phi` solves `−φ″ + Hφ = a` on the profile grid.
    fn new(p: &Profile1D, phi: Vec<f64>, a: &[f64]) -> Self {
        let (n, m, h) = (p.len(), p.dim, p.h);
        let at = |i: isize, c: usize| -> f64 {
            let last = (n - 1) as isize;
            let k = if i < 0 { -i } else if i > last { 2 * last - i } else { i };
            phi[k as usize * m + c]
        };
        let mut deriv = vec![0.0; n * m];
        let mut second = vec![0.0; n * m];
        for i in 0..n {
            let ii = i as isize;
            let hess = p.linearization(i);
            for c in 0..m {
                deriv[i * m + c] =
                    (at(ii - 2, c) - 8.0 * at(ii - 1, c) + 8.0 * at(ii + 1, c) - at(ii + 2, c)) / (12.0 * h);
                let hphi: f64 = (0..m).map(|k| hess[c * m + k] * phi[i * m + k]).sum();
                second[i * m + c] = hphi - a[i * m + c];
            }
        }
        Corrector {
            z0: p.z[0],
            h,
            m,
            values: phi,
            deriv,
            second,
        }
    }

    /// Value and first derivative of each component at `z`; zero outside
    /// the grid.
    fn eval(&self, z: f64, out: &mut [[f64; 2]]) {
        let n = self.values.len() / self.m;
        let s = (z - self.z0) / self.h;
        if !(s > 0.0 && s < (n - 1) as f64) {
            out.iter_mut().for_each(|o| *o = [0.0; 2]);
            return;
        }
        let i = (s.floor() as usize).min(n - 2);
        let t = s - i as f64;
        for (c, o) in out.iter_mut().enumerate().take(self.m) {
            let (a, b) = (i * self.m + c, (i + 1) * self.m + c);
            let j = quintic_hermite(
                t,
                self.h,
                [self.values[a], self.deriv[a], self.second[a]],
                [self.values[b], self.deriv[b], self.second[b]],
            );
            *o = [j[0], j[1]];
        }
    }

    fn value_at_node(&self, i: usize, c: usize) -> f64 {
        self.values[i * self.m + c]
    }
}

/// The one-dimensional inner problem: profile, moments, and the correctors
/// `φ₂`, `φ₄`. Independent of `ε` and of the geometry.
#[derive(Debug, Clone)]
pub struct InnerLayer {
    pub profile: Profile1D,
    pub moments: Moments,
    /// Tail decay rate of the profile.
    pub beta: f64,
    /// Largest `|∫A θ₀′|` over the two corrector sources.
    pub compatibility: f64,
    /// Anchoring functional of `φ₂` and `φ₄` after normalization.
    pub anchor: f64,
    /// Largest residual of the two linearized solves.
    pub residual: f64,
    phi2: Corrector,
    phi4: Corrector,
}

impl InnerLayer {
    pub fn new(profile: Profile1D) -> Result<Self> {
        let moments = profile_moments(&profile);
        let beta = estimate_decay_rate(&profile)?.beta;
        let (n, m) = (profile.len(), profile.dim);
        let q = moments.d3 / moments.d1;
        let mut a2 = vec![0.0; n * m];
        let mut a4 = vec![0.0; n * m];
        for i in 0..n {
            let z = profile.z[i];
            for c in 0..m {
                let d = profile.deriv[i * m + c];
                a2[i * m + c] = -z * d;
                a4[i * m + c] = -0.5 * d * (z * z - q);
            }
        }
        let solver = LinOde1D::new(&profile);
        let solve = |a: &[f64]| -> Result<crate::linode::LinOdeSolution> {
            match &profile.potential {
                ProfilePotential::Scalar(_) => solver.solve_scalar(a, &profile),
                ProfilePotential::Vector(w) => solver.solve_vector(a, &profile, w, VectorAnchor::Midpoint),
            }
        };
        let mut s2 = solve(&a2).map_err(|e| match e {
            SilError::Incompatible { defect } => SilError::CompatibilityDefect { defect },
            other => other,
        })?;
        let mut s4 = solve(&a4)?;
        if m == 1 {
            // The anchor node is z = 0 on the odd-sized grid; pin it exactly.
            let mid = profile.mid();
            s2.u[mid] = 0.0;
            s4.u[mid] = 0.0;
            s2.anchor = 0.0;
            s4.anchor = 0.0;
        }
        Ok(InnerLayer {
            compatibility: s2.compatibility.abs().max(s4.compatibility.abs()),
            anchor: s2.anchor.abs().max(s4.anchor.abs()),
            residual: s2.residual.max(s4.residual),
            phi2: Corrector::new(&profile, s2.u, &a2),
            phi4: Corrector::new(&profile, s4.u, &a4),
            moments,
            beta,
            profile,
        })
    }

    pub fn dim(&self) -> usize {
        self.profile.dim
    }

    /// `φ₂` at the profile node `i`, component `c`.
    pub fn phi2_node(&self, i: usize, c: usize) -> f64 {
        self.phi2.value_at_node(i, c)
    }

    pub fn phi4_node(&self, i: usize, c: usize) -> f64 {
        self.phi4.value_at_node(i, c)
    }

    /// Whether the odd moments vanish to `tol` relative to `d₁`.
    pub fn is_even(&self, tol: f64) -> bool {
        self.moments.d2.abs() <= tol * self.moments.d1 && self.moments.d5.abs() <= tol * self.moments.d1
    }
}

/// Coefficients of `h_t = a h_ξξ − b h_ξ − c h + f` at the height nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightCoefficients {
    pub principal: Vec<f64>,
    pub advection: Vec<f64>,
    pub reaction: Vec<f64>,
    pub source: Vec<f64>,
}

/// Height function `h_k(ξ, t)` on a uniform grid of `[0, 1]`, stored at
/// every integration step.
#[derive(Debug, Clone, Serialize)]
pub struct HeightFunction {
    pub order: usize,
    pub xi: Vec<f64>,
    pub times: Vec<f64>,
    #[serde(skip)]
    pub values: Vec<Vec<f64>>,
    /// `∂_t h` at the stored states, from the equation.
    #[serde(skip)]
    pub rates: Vec<Vec<f64>>,
    /// Largest `|(h_{k+1} − h_k)/Δt − ½(ḣ_k + ḣ_{k+1})|`.
    pub residual: f64,
    /// Largest `|h_ξ|` at the two ends.
    pub end_slope: f64,
    /// Largest `|b|` and `|∂_ξ f|` at the ends; both vanish when the
    /// evolution is compatible with even reflection there.
    pub end_advection: f64,
    pub end_source_slope: f64,
    pub min_principal: f64,
}

/// `h` and `∂_t h` at one time, as cosine series in `ξ`.
#[derive(Debug, Clone)]
pub struct HeightSlice {
    pub h: CosineSeries,
    pub ht: CosineSeries,
}

impl HeightFunction {
    pub fn at(&self, t: f64) -> HeightSlice {
        let k = self.times.len();
        let (vals, rates) = if k == 1 || t <= self.times[0] {
            (self.values[0].clone(), self.rates[0].clone())
        } else if t >= self.times[k - 1] {
            (self.values[k - 1].clone(), self.rates[k - 1].clone())
        } else {
            let i = match self.times.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
                Ok(i) => {
                    return HeightSlice {
                        h: CosineSeries::from_samples(&self.values[i]),
                        ht: CosineSeries::from_samples(&self.rates[i]),
                    }
                }
                Err(i) => i - 1,
            };
            let dt = self.times[i + 1] - self.times[i];
            let s = (t - self.times[i]) / dt;
            let (a, b) = (&self.values[i], &self.values[i + 1]);
            let (ra, rb) = (&self.rates[i], &self.rates[i + 1]);
            (0..a.len())
                .map(|j| cubic_hermite(s, dt, a[j], ra[j], b[j], rb[j]))
                .unzip()
        };
        HeightSlice {
            h: CosineSeries::from_samples(&vals),
            ht: CosineSeries::from_samples(&rates),
        }
    }

    /// Largest `|h|` at the stored time closest to `t`.
    pub fn max_abs(&self, t: f64) -> f64 {
        let k = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().partial_cmp(&(b.1 - t).abs()).unwrap())
            .map(|(k, _)| k)
            .unwrap_or(0);
        self.values[k].iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn height_rhs(h: &[f64], c: &HeightCoefficients, xi: &[f64]) -> Vec<f64> {
    let series = CosineSeries::from_samples(h);
    xi.iter()
        .enumerate()
        .map(|(i, x)| {
            let j = series.eval(*x);
            c.principal[i] * j[2] - c.advection[i] * j[1] - c.reaction[i] * j[0] + c.source[i]
        })
        .collect()
}

/// Integrates `h_t = a h_ξξ − b h_ξ − c h + f` with even reflection at both
/// ends (cosine collocation in `ξ`, classical Runge–Kutta in time) from
/// `h(t0) = h0` through every sample time.
pub fn solve_height(
    order: usize,
    h0: &[f64],
    t0: f64,
    sample_times: &[f64],
    coeffs: &(dyn Fn(f64) -> HeightCoefficients + Sync),
) -> Result<HeightFunction> {
    let n = h0.len();
    if n < 3 {
        return Err(SilError::InvalidInput("height grid needs at least three nodes".into()));
    }
    let xi: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let mut min_principal = f64::INFINITY;
    let mut end_advection: f64 = 0.0;
    let mut end_source_slope: f64 = 0.0;
    let mut get = |t: f64| -> Result<HeightCoefficients> {
        let c = coeffs(t);
        if c.principal.len() != n || c.advection.len() != n || c.reaction.len() != n || c.source.len() != n {
            return Err(SilError::InvalidInput("height coefficients have the wrong length".into()));
        }
        let low = c.principal.iter().cloned().fold(f64::INFINITY, f64::min);
        min_principal = min_principal.min(low);
        if !(low > 0.0) {
            return Err(SilError::NonParabolic { value: low });
        }
        end_advection = end_advection.max(c.advection[0].abs()).max(c.advection[n - 1].abs());
        let fs = CosineSeries::from_samples(&c.source);
        // The cosine interpolant has zero end slope by construction, so the
        // one-sided difference is the meaningful measure here.
        let hx = xi[1];
        end_source_slope = end_source_slope
            .max(((c.source[1] - c.source[0]) / hx - 0.5 * hx * fs.eval(0.0)[2]).abs())
            .max(((c.source[n - 1] - c.source[n - 2]) / hx + 0.5 * hx * fs.eval(1.0)[2]).abs());
        Ok(c)
    };
    let c0 = get(t0)?;
    let modes = std::f64::consts::PI * (n - 1) as f64;
    let stiff = c0.principal.iter().cloned().fold(0.0, f64::max) * modes * modes
        + c0.advection.iter().fold(0.0f64, |m, v| m.max(v.abs())) * modes
        + c0.reaction.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let dt_cap = 2.0 / stiff.max(1e-12);
    let mut h = h0.to_vec();
    let mut t = t0;
    let mut out = HeightFunction {
        order,
        xi: xi.clone(),
        times: vec![t0],
        rates: vec![height_rhs(&h, &c0, &xi)],
        values: vec![h.clone()],
        residual: 0.0,
        end_slope: 0.0,
        end_advection: 0.0,
        end_source_slope: 0.0,
        min_principal: 0.0,
    };
    for &target in sample_times {
        if target <= t {
            return Err(SilError::InvalidInput("height sample times must increase".into()));
        }
        let steps = ((target - t) / dt_cap).ceil().max(1.0) as usize;
        let dt = (target - t) / steps as f64;
        for k in 0..steps {
            let k1 = out.rates.last().unwrap().clone();
            let stage = |k: &[f64], a: f64| -> Vec<f64> { h.iter().zip(k).map(|(v, d)| v + a * dt * d).collect() };
            let cm = get(t + 0.5 * dt)?;
            let k2 = height_rhs(&stage(&k1, 0.5), &cm, &xi);
            let k3 = height_rhs(&stage(&k2, 0.5), &cm, &xi);
            let t1 = if k + 1 == steps { target } else { t + dt };
            let c1 = get(t1)?;
            let k4 = height_rhs(&stage(&k3, 1.0), &c1, &xi);
            let next: Vec<f64> = (0..n)
                .map(|i| h[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                .collect();
            if next.iter().any(|v| !v.is_finite()) {
                return Err(SilError::StepRejected { t });
            }
            let rate = height_rhs(&next, &c1, &xi);
            let defect = (0..n)
                .map(|i| ((next[i] - h[i]) / dt - 0.5 * (k1[i] + rate[i])).abs())
                .fold(0.0, f64::max);
            out.residual = out.residual.max(defect);
            h = next;
            t = t1;
            out.times.push(t);
            out.values.push(h.clone());
            out.rates.push(rate);
        }
    }
    out.end_slope = out
        .values
        .iter()
        .map(|v| {
            let s = CosineSeries::from_samples(v);
            s.eval(0.0)[1].abs().max(s.eval(1.0)[1].abs())
        })
        .fold(0.0, f64::max);
    out.end_advection = end_advection;
    out.end_source_slope = end_source_slope;
    out.min_principal = min_principal;
    Ok(out)
}

/// `κ, κ_ξ, κ_ξξ, κ_t` of the graph at abscissa `xi`.
fn curvature_jet(curve: &Curve, xi: f64) -> [f64; 4] {
    let g = cosine_jet(curve.coeffs(), xi);
    let rt = curve.rate_jet(xi);
    let (g1, g2, g3, g4) = (g[1], g[2], g[3], g[4]);
    let w2 = 1.0 + g1 * g1;
    let w3 = w2 * w2.sqrt();
    let w5 = w3 * w2;
    let w7 = w5 * w2;
    [
        g2 / w3,
        g3 / w3 - 3.0 * g1 * g2 * g2 / w5,
        g4 / w3 - (9.0 * g1 * g2 * g3 + 3.0 * g2 * g2 * g2) / w5 + 15.0 * g1 * g1 * g2 * g2 * g2 / w7,
        rt[2] / w3 - 3.0 * g1 * g2 * rt[1] / w5,
    ]
}

/// Coefficients of the height equation along the interface at time `t`.
fn interface_coefficients(curve: &Curve, xi: &[f64], d3_over_d1: f64) -> HeightCoefficients {
    let mut c = HeightCoefficients {
        principal: Vec::with_capacity(xi.len()),
        advection: Vec::with_capacity(xi.len()),
        reaction: Vec::with_capacity(xi.len()),
        source: Vec::with_capacity(xi.len()),
    };
    for &x in xi {
        let [_, g1, g2, _] = curve.jet(x);
        let [gt, _] = curve.velocity(x);
        let w2 = 1.0 + g1 * g1;
        let kappa = g2 / (w2 * w2.sqrt());
        // On the interface: |∇ξ|² = 1/w², ξ_t = −γ_t γ′/w², Δξ = −γ′γ″/w⁴.
        c.principal.push(1.0 / w2);
        c.advection.push(-gt * g1 / w2 + g1 * g2 / (w2 * w2));
        c.reaction.push(-kappa * kappa);
        c.source.push(kappa * kappa * kappa * d3_over_d1);
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ApproxOptions {
    /// Expansion order `M`, 0 or 2.
    pub order: usize,
    pub height_intervals: usize,
}

impl Default for ApproxOptions {
    fn default() -> Self {
        ApproxOptions {
            order: 2,
            height_intervals: HEIGHT_INTERVALS,
        }
    }
}

/// Checked facts about a construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BuildReport {
    /// `max|g₁|·|d₂|`, the kernel projection of the `ε²` source.
    pub compatibility: f64,
    /// Anchoring of the correctors at `ρ = 0`.
    pub anchor: f64,
    /// Largest gap between `κ²` and a centred difference of `∂_t r − Δr`
    /// across the interface.
    pub g1_defect: f64,
    /// Largest `||∇r|² − 1|` at the same probe points.
    pub eikonal_defect: f64,
    /// Largest `|N·∇r|` on the side walls inside the tube; zero means no
    /// contact-angle correction is needed.
    pub contact_gradient: f64,
    /// Largest `δ·max|κ|` over the stored interface states.
    pub tube_product: f64,
}

/// The approximate solution `u^A_ε` for one `ε`.
#[derive(Debug, Clone)]
pub struct ApproxSolution {
    pub eps: f64,
    pub order: usize,
    pub delta: f64,
    pub inner: Arc<InnerLayer>,
    pub history: InterfaceHistory,
    pub height: Option<HeightFunction>,
    pub report: BuildReport,
    corrections: bool,
}

/// Everything `u^A` needs at one time.
#[derive(Debug, Clone)]
pub struct Slice {
    pub t: f64,
    pub curve: Curve,
    slope_bound: f64,
    height: Option<HeightSlice>,
}

/// `u^A` on a grid together with the distance data used by the norms.
#[derive(Debug, Clone)]
pub struct SampledApprox {
    pub field: Field2D,
    /// Signed distance inside the blend tube; beyond `2δ` only a lower
    /// bound of the same sign.
    pub r: Vec<f64>,
    /// Unit normal `∇r` inside the tube, zero elsewhere.
    pub normal: Vec<[f64; 2]>,
}

/// Remainder at one point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemainderPoint {
    pub x: f64,
    pub y: f64,
    pub r: f64,
    pub rho: f64,
    pub u: Vec<f64>,
    pub value: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Coefficients {
    /// `[v, v_ξ, v_ξξ, v_t]` of `g₁`, `g₂`, `h₂`.
    c2: [f64; 4],
    c4: [f64; 4],
    h: [f64; 4],
}

/// Builds `u^A_ε` of order `opts.order` for the interface `history`.
pub fn build_ua(
    history: &InterfaceHistory,
    eps: f64,
    delta: f64,
    inner: Arc<InnerLayer>,
    opts: &ApproxOptions,
) -> Result<ApproxSolution> {
    if opts.order != 0 && opts.order != 2 {
        return Err(SilError::InvalidInput(format!("order {} not supported, use 0 or 2", opts.order)));
    }
    if !(eps > 0.0 && delta > 0.0) {
        return Err(SilError::InvalidInput("eps and delta must be positive".into()));
    }
    let mut tube_product: f64 = 0.0;
    let mut max_g1: f64 = 0.0;
    for &t in &history.times {
        let c = history.at(t);
        check_tube(&c, delta)?;
        let k = c.max_curvature();
        tube_product = tube_product.max(delta * k);
        max_g1 = max_g1.max(k * k);
    }
    let compatibility = max_g1 * inner.moments.d2.abs();
    if opts.order == 2 && (compatibility > COMPATIBILITY_LIMIT || !inner.is_even(1e-8)) {
        return Err(SilError::CompatibilityDefect {
            defect: compatibility.max(inner.moments.d5.abs()),
        });
    }
    let height = if opts.order == 2 {
        let n = opts.height_intervals + 1;
        let xi: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let q = inner.moments.d3 / inner.moments.d1;
        let coeffs = |t: f64| interface_coefficients(&history.at(t), &xi, q);
        let samples: Vec<f64> = history.times[1..].to_vec();
        Some(solve_height(2, &vec![0.0; n], history.start(), &samples, &coeffs)?)
    } else {
        None
    };
    let mut ua = ApproxSolution {
        eps,
        order: opts.order,
        delta,
        report: BuildReport {
            compatibility,
            anchor: inner.anchor,
            g1_defect: 0.0,
            eikonal_defect: 0.0,
            contact_gradient: 0.0,
            tube_product,
        },
        inner,
        history: history.clone(),
        height,
        corrections: opts.order == 2,
    };
    ua.probe_geometry();
    Ok(ua)
}

impl ApproxSolution {
    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// The same construction with the `ε²` and `ε³` terms and the height
    /// shift switched off.
    pub fn without_corrections(&self) -> Self {
        let mut out = self.clone();
        out.corrections = false;
        out
    }

    pub fn slice(&self, t: f64) -> Slice {
        let curve = self.history.at(t);
        let slope_bound = 1.05 * curve.max_slope() + 1e-3;
        let height = match (&self.height, self.corrections) {
            (Some(h), true) => Some(h.at(t)),
            _ => None,
        };
        Slice {
            t,
            curve,
            slope_bound,
            height,
        }
    }

    fn well(&self, r: f64) -> &[f64] {
        if r >= 0.0 {
            &self.inner.profile.well_plus
        } else {
            &self.inner.profile.well_minus
        }
    }

    fn coefficient_values(&self, slice: &Slice, xi: f64, gamma2: f64, w2: f64) -> (f64, f64, f64) {
        if !self.corrections {
            return (0.0, 0.0, 0.0);
        }
        let k = gamma2 / (w2 * w2.sqrt());
        let h = slice.height.as_ref().map_or(0.0, |s| cosine_jet(&s.h.coeffs, xi)[0]);
        (k * k, 2.0 * k * k * k, h)
    }

    fn coefficient_jets(&self, slice: &Slice, xi: f64) -> Coefficients {
        if !self.corrections {
            return Coefficients::default();
        }
        let [k, kx, kxx, kt] = curvature_jet(&slice.curve, xi);
        let mut c = Coefficients {
            c2: [k * k, 2.0 * k * kx, 2.0 * kx * kx + 2.0 * k * kxx, 2.0 * k * kt],
            c4: [
                2.0 * k * k * k,
                6.0 * k * k * kx,
                12.0 * k * kx * kx + 6.0 * k * k * kxx,
                6.0 * k * k * kt,
            ],
            h: [0.0; 4],
        };
        if let Some(s) = &slice.height {
            let j = cosine_jet(&s.h.coeffs, xi);
            c.h = [j[0], j[1], j[2], cosine_jet(&s.ht.coeffs, xi)[0]];
        }
        c
    }

    /// `u^A` from the foot abscissa and signed distance, inside the tube.
    fn value_local(&self, r: f64, c2: f64, c4: f64, h: f64, out: &mut [f64]) {
        let eps = self.eps;
        let [eta, _, _] = cutoff(r / self.delta);
        let rho = r / eps - eps * h;
        let m = self.dim();
        let theta = self.inner.profile.eval(rho);
        let mut p2 = [[0.0; 2]; 8];
        let mut p4 = [[0.0; 2]; 8];
        if self.corrections {
            self.inner.phi2.eval(rho, &mut p2[..m]);
            self.inner.phi4.eval(rho, &mut p4[..m]);
        }
        let (e2, e3) = (eps * eps, eps * eps * eps);
        let well = self.well(r);
        for c in 0..m {
            let g = theta[c][0] + e2 * c2 * p2[c][0] + e3 * c4 * p4[c][0];
            out[c] = eta * g + (1.0 - eta) * well[c];
        }
    }

    /// `u^A` at a point.
    pub fn value(&self, slice: &Slice, x: f64, y: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.value_into(slice, x, y, &mut out);
        out
    }

    /// Writes `u^A(x, y)` and returns `(r or its bound, normal)`.
    fn value_into(&self, slice: &Slice, x: f64, y: f64, out: &mut [f64]) -> (f64, [f64; 2]) {
        let reach = 2.0 * self.delta;
        let vertical = y - slice.curve.jet(x)[0];
        let lower = vertical.abs() / (1.0 + slice.slope_bound * slice.slope_bound).sqrt();
        if lower >= reach {
            out.copy_from_slice(self.well(vertical));
            return (lower.copysign(vertical), [0.0; 2]);
        }
        let (xi, r) = slice.curve.foot(x, y);
        if r.abs() >= reach {
            out.copy_from_slice(self.well(r));
            return (r, [0.0; 2]);
        }
        let j = slice.curve.jet(xi);
        let w2 = 1.0 + j[1] * j[1];
        let w = w2.sqrt();
        let (c2, c4, h) = self.coefficient_values(slice, xi, j[2], w2);
        self.value_local(r, c2, c4, h, out);
        (r, [-j[1] / w, 1.0 / w])
    }

    /// Samples `u^A(·, t)` on `grid`.
    pub fn sample(&self, grid: Grid2D, t: f64) -> SampledApprox {
        let slice = self.slice(t);
        let m = self.dim();
        let px = grid.px();
        let rows: Vec<(Vec<f64>, Vec<f64>, Vec<[f64; 2]>)> = (0..grid.py())
            .into_par_iter()
            .map(|j| {
                let y = grid.y(j);
                let mut vals = vec![0.0; px * m];
                let mut rs = Vec::with_capacity(px);
                let mut ns = Vec::with_capacity(px);
                for i in 0..px {
                    let (r, n) = self.value_into(&slice, grid.x(i), y, &mut vals[i * m..(i + 1) * m]);
                    rs.push(r);
                    ns.push(n);
                }
                (vals, rs, ns)
            })
            .collect();
        let mut comps = vec![Vec::with_capacity(grid.len()); m];
        let mut r = Vec::with_capacity(grid.len());
        let mut normal = Vec::with_capacity(grid.len());
        for (vals, rs, ns) in rows {
            for i in 0..px {
                for (c, comp) in comps.iter_mut().enumerate() {
                    comp.push(vals[i * m + c]);
                }
            }
            r.extend(rs);
            normal.extend(ns);
        }
        SampledApprox {
            field: Field2D { grid, t, comps },
            r,
            normal,
        }
    }

    pub fn field(&self, grid: Grid2D, t: f64) -> Field2D {
        self.sample(grid, t).field
    }

    /// Local derivatives of `u^A` in the `(r, ξ, t)` coordinates and the
    /// remainder `∂_t u − Δu + ε⁻²∇W(u)` at a point.
    pub fn remainder(&self, slice: &Slice, x: f64, y: f64) -> RemainderPoint {
        let m = self.dim();
        let fp = slice.curve.frame_point(x, y);
        let p = &self.inner.profile;
        let (eps, delta) = (self.eps, self.delta);
        let well = self.well(fp.r).to_vec();
        if fp.r.abs() >= 2.0 * delta {
            let g = p.reaction(&well);
            return RemainderPoint {
                x,
                y,
                r: fp.r,
                rho: fp.r / eps,
                value: g.iter().map(|v| v / (eps * eps)).collect(),
                u: well,
            };
        }
        let [eta, d_eta, dd_eta] = cutoff(fp.r / delta);
        let co = self.coefficient_jets(slice, fp.xi);
        let rho = fp.r / eps - eps * co.h[0];
        let (rho_x, rho_xx, rho_t) = (-eps * co.h[1], -eps * co.h[2], -eps * co.h[3]);
        let jets = p.eval(rho);
        let theta: Vec<f64> = jets.iter().map(|j| j[0]).collect();
        let grad_theta = p.reaction(&theta);
        let hess = p.linearization_at(&theta);
        let mut p2 = [[0.0; 2]; 8];
        let mut p4 = [[0.0; 2]; 8];
        if self.corrections {
            self.inner.phi2.eval(rho, &mut p2[..m]);
            self.inner.phi4.eval(rho, &mut p4[..m]);
        }
        let q = self.inner.moments.d3 / self.inner.moments.d1;
        let (e2, e3) = if self.corrections { (eps * eps, eps * eps * eps) } else { (0.0, 0.0) };
        let grad_xi2 = fp.grad_xi[0].powi(2) + fp.grad_xi[1].powi(2);
        let g_normal = fp.r_t - fp.lap_r;
        let g_tangent = fp.xi_t - fp.lap_xi;
        let mut u = vec![0.0; m];
        let mut partial = vec![0.0; m];
        for c in 0..m {
            let d_theta = jets[c][1];
            let h2: f64 = (0..m).map(|k| hess[c * m + k] * p2[k][0]).sum();
            let h4: f64 = (0..m).map(|k| hess[c * m + k] * p4[k][0]).sum();
            let a2 = -rho * d_theta;
            let a4 = -0.5 * d_theta * (rho * rho - q);
            let g = theta[c] + e2 * co.c2[0] * p2[c][0] + e3 * co.c4[0] * p4[c][0];
            let g_r = d_theta + e2 * co.c2[0] * p2[c][1] + e3 * co.c4[0] * p4[c][1];
            // G_ρρ − ∇W(θ₀) through the corrector equations.
            let g_rr_corr = e2 * co.c2[0] * (h2 - a2) + e3 * co.c4[0] * (h4 - a4);
            let g_rr = grad_theta[c] + g_rr_corr;
            let g_x = e2 * co.c2[1] * p2[c][0] + e3 * co.c4[1] * p4[c][0];
            let g_xx = e2 * co.c2[2] * p2[c][0] + e3 * co.c4[2] * p4[c][0];
            let g_rx = e2 * co.c2[1] * p2[c][1] + e3 * co.c4[1] * p4[c][1];
            let g_t = e2 * co.c2[3] * p2[c][0] + e3 * co.c4[3] * p4[c][0];
            let jump = g - well[c];
            u[c] = eta * g + (1.0 - eta) * well[c];
            let f_r = d_eta / delta * jump + eta * g_r / eps;
            let f_rr_rest = dd_eta / (delta * delta) * jump
                + 2.0 * d_eta / (delta * eps) * g_r
                + eta * g_rr_corr / (eps * eps);
            let f_x = eta * (g_r * rho_x + g_x);
            let f_xx = eta * (g_rr * rho_x * rho_x + 2.0 * g_rx * rho_x + g_r * rho_xx + g_xx);
            let f_t = eta * (g_r * rho_t + g_t);
            partial[c] = f_t + f_r * g_normal + f_x * g_tangent - f_xx * grad_xi2 - f_rr_rest;
        }
        let grad_u = p.reaction(&u);
        let value = (0..m)
            .map(|c| partial[c] + (grad_u[c] - eta * grad_theta[c]) / (eps * eps))
            .collect();
        RemainderPoint {
            x,
            y,
            r: fp.r,
            rho,
            u,
            value,
        }
    }

    /// `∂_x u^A` at a point, from the local coordinates.
    pub fn x_derivative(&self, slice: &Slice, x: f64, y: f64) -> Vec<f64> {
        let m = self.dim();
        let fp = slice.curve.frame_point(x, y);
        let (eps, delta) = (self.eps, self.delta);
        if fp.r.abs() >= 2.0 * delta {
            return vec![0.0; m];
        }
        let [eta, d_eta, _] = cutoff(fp.r / delta);
        let co = self.coefficient_jets(slice, fp.xi);
        let rho = fp.r / eps - eps * co.h[0];
        let jets = self.inner.profile.eval(rho);
        let mut p2 = [[0.0; 2]; 8];
        let mut p4 = [[0.0; 2]; 8];
        if self.corrections {
            self.inner.phi2.eval(rho, &mut p2[..m]);
            self.inner.phi4.eval(rho, &mut p4[..m]);
        }
        let (e2, e3) = if self.corrections { (eps * eps, eps * eps * eps) } else { (0.0, 0.0) };
        let well = self.well(fp.r);
        (0..m)
            .map(|c| {
                let g = jets[c][0] + e2 * co.c2[0] * p2[c][0] + e3 * co.c4[0] * p4[c][0];
                let g_r = jets[c][1] + e2 * co.c2[0] * p2[c][1] + e3 * co.c4[0] * p4[c][1];
                let g_x = e2 * co.c2[1] * p2[c][0] + e3 * co.c4[1] * p4[c][0];
                let f_r = d_eta / delta * (g - well[c]) + eta * g_r / eps;
                let f_x = eta * (-eps * co.h[1] * g_r + g_x);
                f_r * fp.grad_r[0] + f_x * fp.grad_xi[0]
            })
            .collect()
    }

    /// Largest `|∂_x u^A|` on the side walls over `samples + 1` heights.
    pub fn wall_defect(&self, slice: &Slice, samples: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..=samples {
            let y = k as f64 / samples as f64;
            for x in [0.0, 1.0] {
                for v in self.x_derivative(slice, x, y) {
                    worst = worst.max(v.abs());
                }
            }
        }
        worst
    }

    /// Largest distance from the zero level of the first component to the
    /// interface, found along the normals at `samples + 1` abscissas.
    pub fn zero_level_distance(&self, t: f64, samples: usize) -> Result<f64> {
        let slice = self.slice(t);
        let m = self.dim();
        let mut worst: f64 = 0.0;
        let mut out = vec![0.0; m];
        for k in 0..=samples {
            let xi = k as f64 / samples as f64;
            let j = slice.curve.jet(xi);
            let w2 = 1.0 + j[1] * j[1];
            let (c2, c4, h) = self.coefficient_values(&slice, xi, j[2], w2);
            let mut first = |r: f64| -> f64 {
                self.value_local(r, c2, c4, h, &mut out);
                out[0]
            };
            let (mut lo, mut hi) = (-self.delta, self.delta);
            let (flo, fhi) = (first(lo), first(hi));
            if !(flo < 0.0 && fhi > 0.0) {
                return Err(SilError::NoConvergence {
                    iterations: 0,
                    residual: flo.abs().min(fhi.abs()),
                });
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid == lo || mid == hi {
                    break;
                }
                if first(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            worst = worst.max((0.5 * (lo + hi)).abs());
        }
        Ok(worst)
    }

    /// Probes the geometric facts recorded in the build report at the
    /// first stored time.
    fn probe_geometry(&mut self) {
        let curve = self.history.at(self.history.start());
        let step = 1e-4;
        let mut g1_defect: f64 = 0.0;
        let mut eikonal: f64 = 0.0;
        for k in 0..=16 {
            let xi = k as f64 / 16.0;
            let j = curve.jet(xi);
            let w = (1.0 + j[1] * j[1]).sqrt();
            let n = [-j[1] / w, 1.0 / w];
            let mut g = |r: f64| {
                let fp = curve.frame_point(xi + r * n[0], j[0] + r * n[1]);
                eikonal = eikonal.max((fp.grad_r[0].powi(2) + fp.grad_r[1].powi(2) - 1.0).abs());
                fp.r_t - fp.lap_r
            };
            let slope = (g(step) - g(-step)) / (2.0 * step);
            let kappa = curve.curvature(xi);
            g1_defect = g1_defect.max((slope - kappa * kappa).abs());
        }
        let mut contact: f64 = 0.0;
        for k in 0..=64 {
            let y = k as f64 / 64.0;
            for x in [0.0, 1.0] {
                let fp = curve.frame_point(x, y);
                if fp.r.abs() < 2.0 * self.delta {
                    contact = contact.max(fp.grad_r[0].abs());
                }
            }
        }
        self.report.g1_defect = g1_defect;
        self.report.eikonal_defect = eikonal;
        self.report.contact_gradient = contact;
    }
}

/// Envelope fit of the remainder over a set of times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemainderReport {
    pub eps: f64,
    pub order: usize,
    /// Decay constant of the envelope, `β/2`.
    pub c: f64,
    /// Smallest `C` with `|r^A| ≤ C(ε^M e^{−c|ρ|} + ε^{M+1})` at all
    /// sample points.
    pub constant: f64,
    pub max_abs: f64,
    /// Largest `|∂_x u^A|` on the side walls.
    pub wall_defect: f64,
    pub points: usize,
    pub times: Vec<f64>,
}

/// Sample points for the remainder: normals through `xi_samples + 1` foot
/// points, each sampled densely in `ρ` near the interface and uniformly out
/// to `2.2δ`.
fn remainder_points(slice: &Slice, eps: f64, delta: f64, xi_samples: usize) -> Vec<(f64, f64)> {
    let mut pts = Vec::new();
    let mut offsets: Vec<f64> = (-80..=80).map(|k| eps * 0.25 * k as f64).collect();
    offsets.extend((-44..=44).map(|k| 0.05 * delta * k as f64));
    for k in 0..=xi_samples {
        let xi = k as f64 / xi_samples as f64;
        let j = slice.curve.jet(xi);
        let w = (1.0 + j[1] * j[1]).sqrt();
        for r in &offsets {
            let (x, y) = (xi - r * j[1] / w, j[0] + r / w);
            if (0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y) {
                pts.push((x, y));
            }
        }
    }
    pts
}

/// Evaluates the remainder at the sample points of every time in `times`
/// and fits the envelope constant with `c = β/2`.
pub fn remainder_report(ua: &ApproxSolution, times: &[f64], xi_samples: usize) -> RemainderReport {
    let c = 0.5 * ua.inner.beta;
    let eps_m = ua.eps.powi(ua.order as i32);
    let eps_m1 = eps_m * ua.eps;
    let mut constant: f64 = 0.0;
    let mut max_abs: f64 = 0.0;
    let mut wall: f64 = 0.0;
    let mut points = 0;
    for &t in times {
        let slice = ua.slice(t);
        let pts = remainder_points(&slice, ua.eps, ua.delta, xi_samples);
        points += pts.len();
        let (k, a) = pts
            .par_iter()
            .map(|(x, y)| {
                let rp = ua.remainder(&slice, *x, *y);
                let size = rp.value.iter().map(|v| v * v).sum::<f64>().sqrt();
                (size / (eps_m * (-c * rp.rho.abs()).exp() + eps_m1), size)
            })
            .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
        constant = constant.max(k);
        max_abs = max_abs.max(a);
        wall = wall.max(ua.wall_defect(&slice, 256));
    }
    RemainderReport {
        eps: ua.eps,
        order: ua.order,
        c,
        constant,
        max_abs,
        wall_defect: wall,
        points,
        times: times.to_vec(),
    }
}

/// The four quantities of the convergence estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormReport {
    /// `sup_t ‖u − u^A‖_{L²(Ω)}`.
    pub sup_l2: f64,
    /// `‖∇(u − u^A)‖_{L²}` over space-time outside the `δ`-tube.
    pub grad_off: f64,
    /// Tangential gradient inside the tube.
    pub grad_tau: f64,
    /// `ε` times the normal derivative inside the tube.
    pub eps_grad_n: f64,
}

/// Fourth-order centred gradient with even reflection at the walls.
pub fn gradient(grid: Grid2D, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (px, py) = (grid.px(), grid.py());
    let fold = |k: isize, n: usize| -> usize {
        let last = (n - 1) as isize;
        let k = if k < 0 { -k } else { k };
        (if k > last { 2 * last - k } else { k }) as usize
    };
    let (hx, hy) = (grid.hx(), grid.hy());
    let mut gx = vec![0.0; f.len()];
    let mut gy = vec![0.0; f.len()];
    for j in 0..py {
        for i in 0..px {
            let (ii, jj) = (i as isize, j as isize);
            let fx = |d: isize| f[j * px + fold(ii + d, px)];
            let fy = |d: isize| f[fold(jj + d, py) * px + i];
            gx[j * px + i] = (fx(-2) - 8.0 * fx(-1) + 8.0 * fx(1) - fx(2)) / (12.0 * hx);
            gy[j * px + i] = (fy(-2) - 8.0 * fy(-1) + 8.0 * fy(1) - fy(2)) / (12.0 * hy);
        }
    }
    (gx, gy)
}

/// Difference norms between a computed trajectory and `u^A` sampled at the
/// same times; space-time integrals use the trapezoid rule in `t`.
pub fn difference_norms(u: &[Field2D], ua: &[SampledApprox], eps: f64, delta: f64) -> Result<NormReport> {
    if u.is_empty() || u.len() != ua.len() {
        return Err(SilError::InvalidInput("trajectories must be nonempty and of equal length".into()));
    }
    let grid = u[0].grid;
    let w = grid.weights();
    let mut sup_l2: f64 = 0.0;
    let mut rates = Vec::with_capacity(u.len());
    for (a, b) in u.iter().zip(ua) {
        if a.grid != b.field.grid || a.dim() != b.field.dim() || (a.t - b.field.t).abs() > 1e-12 {
            return Err(SilError::InvalidInput(format!(
                "fields at t = {} and t = {} do not match",
                a.t, b.field.t
            )));
        }
        let mut l2 = 0.0;
        let (mut off, mut tau, mut nor) = (0.0, 0.0, 0.0);
        for (ca, cb) in a.comps.iter().zip(&b.field.comps) {
            let e: Vec<f64> = ca.iter().zip(cb).map(|(p, q)| p - q).collect();
            l2 += e.iter().zip(&w).map(|(v, w)| w * v * v).sum::<f64>();
            let (gx, gy) = gradient(grid, &e);
            for k in 0..e.len() {
                if b.r[k].abs() >= delta {
                    off += w[k] * (gx[k] * gx[k] + gy[k] * gy[k]);
                } else {
                    let n = b.normal[k];
                    let dn = gx[k] * n[0] + gy[k] * n[1];
                    let dt = -gx[k] * n[1] + gy[k] * n[0];
                    tau += w[k] * dt * dt;
                    nor += w[k] * dn * dn;
                }
            }
        }
        sup_l2 = sup_l2.max(l2.sqrt());
        rates.push([off, tau, nor]);
    }
    let mut acc = [0.0; 3];
    for k in 1..u.len() {
        let dt = u[k].t - u[k - 1].t;
        for q in 0..3 {
            acc[q] += 0.5 * dt * (rates[k][q] + rates[k - 1][q]);
        }
    }
    Ok(NormReport {
        sup_l2,
        grad_off: acc[0].sqrt(),
        grad_tau: acc[1].sqrt(),
        eps_grad_n: eps * acc[2].sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{mcf_evolve, InterfaceGraph, McfOptions, McfScheme};
    use crate::potentials::{make_quartic, ScalarPotential};
    use crate::profile::solve_scalar_profile;
    use std::f64::consts::PI;
    use std::sync::OnceLock;

    fn quartic_inner() -> Arc<InnerLayer> {
        static INNER: OnceLock<Arc<InnerLayer>> = OnceLock::new();
        INNER
            .get_or_init(|| {
                let p = solve_scalar_profile(&make_quartic(), 16.0, 4097).unwrap();
                Arc::new(InnerLayer::new(p).unwrap())
            })
            .clone()
    }

    fn curved_history(t_end: f64, samples: usize) -> InterfaceHistory {
        let g0 = InterfaceGraph::from_fn(65, 0.0, |x| 0.5 + 0.1 * (PI * x).cos()).unwrap();
        let opts = McfOptions::uniform(1e-4, t_end, samples, McfScheme::SpectralRk4);
        InterfaceHistory::from_states(&mcf_evolve(&g0, &opts).unwrap().states).unwrap()
    }

    #[test]
    fn height_solver_zero_data_and_heat_kernel() {
        let n = 33;
        let zero = |_: f64| HeightCoefficients {
            principal: vec![1.0; n],
            advection: vec![0.0; n],
            reaction: vec![0.0; n],
            source: vec![0.0; n],
        };
        let h = solve_height(2, &vec![0.0; n], 0.0, &[0.01], &zero).unwrap();
        assert!(h.values.last().unwrap().iter().all(|v| *v == 0.0));
        let h0: Vec<f64> = (0..n).map(|i| (PI * i as f64 / (n - 1) as f64).cos()).collect();
        let h = solve_height(2, &h0, 0.0, &[0.01], &zero).unwrap();
        let decay = (-PI * PI * 0.01).exp();
        for (i, v) in h.values.last().unwrap().iter().enumerate() {
            assert!((v - decay * h0[i]).abs() <= 1e-8, "{v} {}", decay * h0[i]);
        }
        let bad = |_: f64| HeightCoefficients {
            principal: vec![-1.0; n],
            advection: vec![0.0; n],
            reaction: vec![0.0; n],
            source: vec![0.0; n],
        };
        assert!(matches!(
            solve_height(2, &h0, 0.0, &[0.01], &bad),
            Err(SilError::NonParabolic { .. })
        ));
    }

    #[test]
    fn correctors_are_anchored_and_compatible() {
        let inner = quartic_inner();
        let mid = inner.profile.mid();
        assert_eq!(inner.phi2_node(mid, 0), 0.0);
        assert_eq!(inner.phi4_node(mid, 0), 0.0);
        assert!(inner.compatibility <= 1e-8, "{}", inner.compatibility);
        assert!(inner.is_even(1e-10));
        assert!((inner.beta - 2.0).abs() < 0.05);
    }

    #[test]
    fn far_field_and_flat_interface() {
        let inner = quartic_inner();
        let flat = InterfaceGraph::from_fn(33, 0.0, |_| 0.5).unwrap();
        let hist = InterfaceHistory::frozen(&flat);
        let ua = build_ua(&hist, 0.02, 0.1, inner, &ApproxOptions { order: 0, ..Default::default() }).unwrap();
        let s = ua.slice(0.0);
        assert_eq!(ua.value(&s, 0.3, 0.75), vec![1.0]);
        assert_eq!(ua.value(&s, 0.3, 0.25), vec![-1.0]);
        assert_eq!(ua.remainder(&s, 0.3, 0.9).value, vec![0.0]);
        let y = 0.5 + 0.03;
        assert!((ua.value(&s, 0.7, y)[0] - (0.03f64 / 0.02).tanh()).abs() < 1e-10);
        // Only the blend annulus contributes.
        let rep = remainder_report(&ua, &[0.0], 8);
        let inside = (0..50)
            .map(|k| ua.remainder(&s, 0.4, 0.5 + 0.002 * k as f64).value[0].abs())
            .fold(0.0, f64::max);
        assert!(inside < 1e-9, "{inside}");
        let bound = 40.0 / (0.1 * 0.02) * (-2.0 * 0.1f64 / 0.02).exp();
        assert!(rep.max_abs <= bound, "{} {bound}", rep.max_abs);
        assert!(rep.wall_defect <= 1e-12);
    }

    #[test]
    fn curved_construction_facts() {
        let inner = quartic_inner();
        let hist = curved_history(0.01, 20);
        let ua = build_ua(&hist, 0.05, 0.2, inner, &ApproxOptions::default()).unwrap();
        assert!(ua.report.compatibility <= COMPATIBILITY_LIMIT);
        assert!(ua.report.g1_defect <= 1e-6, "{:?}", ua.report);
        assert!(ua.report.eikonal_defect <= 1e-12);
        assert!(ua.report.contact_gradient <= 1e-12);
        let h = ua.height.as_ref().unwrap();
        assert!(h.end_slope <= 1e-12 && h.end_advection <= 1e-12, "{h:?}");
        assert!(h.max_abs(0.01) > 0.0);
        // The zero level sits at r = ε²h₂.
        let d = ua.zero_level_distance(0.01, 16).unwrap();
        let slice = ua.slice(0.01);
        let expect = (0..=16)
            .map(|k| cosine_jet(&slice.height.as_ref().unwrap().h.coeffs, k as f64 / 16.0)[0].abs())
            .fold(0.0, f64::max)
            * 0.05
            * 0.05;
        assert!((d - expect).abs() <= 1e-12 + 1e-6 * expect, "{d} {expect}");
        assert!(ua.wall_defect(&slice, 128) <= 1e-10);
    }

    #[test]
    fn zeroed_corrections_reduce_to_order_zero() {
        let inner = quartic_inner();
        let hist = curved_history(0.005, 5);
        let two = build_ua(&hist, 0.05, 0.2, inner.clone(), &ApproxOptions::default()).unwrap();
        let zero = build_ua(&hist, 0.05, 0.2, inner, &ApproxOptions { order: 0, ..Default::default() }).unwrap();
        let grid = Grid2D::square(32);
        let a = two.without_corrections().field(grid, 0.003);
        let b = zero.field(grid, 0.003);
        assert_eq!(a.comps, b.comps);
        let c = two.field(grid, 0.003);
        assert_ne!(a.comps, c.comps);
    }

    #[test]
    fn difference_norm_oracles() {
        let inner = quartic_inner();
        let hist = curved_history(0.002, 2);
        let eps = 0.05;
        let ua = build_ua(&hist, eps, 0.2, inner, &ApproxOptions::default()).unwrap();
        let grid = Grid2D::square(64);
        let samples: Vec<SampledApprox> = hist.times.iter().map(|t| ua.sample(grid, *t)).collect();
        let same: Vec<Field2D> = samples.iter().map(|s| s.field.clone()).collect();
        let n = difference_norms(&same, &samples, eps, 0.2).unwrap();
        assert_eq!((n.sup_l2, n.grad_off, n.grad_tau, n.eps_grad_n), (0.0, 0.0, 0.0, 0.0));
        let shifted: Vec<Field2D> = samples
            .iter()
            .map(|s| {
                let mut f = s.field.clone();
                for k in 0..grid.len() {
                    let (x, y) = (grid.x(k % grid.px()), grid.y(k / grid.px()));
                    f.comps[0][k] += eps.powi(3) * (PI * x).cos() * (PI * y).cos();
                }
                f
            })
            .collect();
        let n = difference_norms(&shifted, &samples, eps, 0.2).unwrap();
        assert!((n.sup_l2 - 0.5 * eps.powi(3)).abs() <= 1e-12, "{}", n.sup_l2);
    }

    #[test]
    fn odd_potential_is_rejected_at_order_two() {
        // (u² − 1)²(1 + u/2)²/2: equal wells, asymmetric curvature.
        let coeffs = [0.5, 0.5, -0.875, -1.0, 0.25, 0.5, 0.125];
        let f = ScalarPotential::from_polynomial("skew", &coeffs).unwrap();
        let p = solve_scalar_profile(&f, 16.0, 2049).unwrap();
        assert!(matches!(InnerLayer::new(p), Err(SilError::CompatibilityDefect { .. })));
    }
}
