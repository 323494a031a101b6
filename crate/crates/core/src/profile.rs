//! Optimal transition profiles connecting the wells: the scalar heteroclinic
//! obtained from the first-order equation `θ′ = √(2(f(θ) − f(−1)))`, and the
//! vector profile obtained by minimizing the one-dimensional energy.

use serde::Serialize;

use crate::error::{Result, SilError};
use crate::linalg::BandMatrix;
use crate::numerics::{linear_fit, quintic_hermite, simpson_weights, thomas};
use crate::potentials::{ScalarPotential, VectorPotential};

/// The potential a profile was computed for.
#[derive(Debug, Clone)]
pub enum ProfilePotential {
    Scalar(ScalarPotential),
    Vector(VectorPotential),
}

/// The six moments `d₁ … d₆` (vector case: the analogues with `|θ′|²` and
/// `θ′·θ″`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
    pub d5: f64,
    pub d6: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub beta: f64,
    /// RMS residual of the log-linear fit, worst of both tails.
    pub residual: f64,
    pub samples: usize,
}

/// Sampled transition profile on a uniform grid over `[-L, L]`.
#[derive(Debug, Clone)]
pub struct Profile1D {
    pub dim: usize,
    pub z: Vec<f64>,
    pub h: f64,
    pub half_length: f64,
    /// Node-major samples, `dim` entries per node.
    pub values: Vec<f64>,
    pub deriv: Vec<f64>,
    /// Second derivative taken from the profile equation, `θ″ = f′(θ)`.
    pub second: Vec<f64>,
    pub well_minus: Vec<f64>,
    pub well_plus: Vec<f64>,
    pub potential: ProfilePotential,
    /// Max-norm of the ODE residual with a fourth-order stencil.
    pub residual: f64,
    /// One-dimensional energy `∫ ½|θ′|² + W(θ) − W(u₊)`.
    pub energy: f64,
}

fn check_grid(half_length: f64, n: usize) -> Result<()> {
    if !(half_length >= 6.0) {
        return Err(SilError::InvalidInput(format!(
            "profile half-length {half_length} below 6"
        )));
    }
    if n < 513 || n % 2 == 0 {
        return Err(SilError::InvalidInput(format!(
            "profile grid size {n} must be odd and at least 513"
        )));
    }
    Ok(())
}

/// `q(w) = 2(f(w) − f(well))/(1 − w²)²` written in terms of the distance
/// `v` to the well being approached (`w = s(1 − v)` with `s = ±1`).
fn q_near(f: &ScalarPotential, s: f64, v: f64) -> f64 {
    let well = s;
    if v < 1e-4 {
        // Taylor expansion of f about the well.
        let f2 = f.d2(well);
        let f3 = f.d3(well);
        (f2 - s * f3 * v / 3.0) / ((2.0 - v) * (2.0 - v))
    } else {
        let w = s * (1.0 - v);
        let one_minus_w2 = v * (2.0 - v);
        2.0 * (f.f(w) - f.f(well)) / (one_minus_w2 * one_minus_w2)
    }
}

/// Rate `dv/d|z|` of the distance to the well.
fn v_rate(f: &ScalarPotential, s: f64, v: f64) -> f64 {
    let q = q_near(f, s, v).max(0.0);
    -v * (2.0 - v) * q.sqrt()
}

/// Solves for the scalar profile with `θ₀(0) = 0`.
pub fn solve_scalar_profile(f: &ScalarPotential, half_length: f64, n: usize) -> Result<Profile1D> {
    check_grid(half_length, n)?;
    // Well-posedness: q must stay positive strictly inside (−1, 1).
    for i in 1..2000 {
        let w = -1.0 + 2.0 * i as f64 / 2000.0;
        let q = 2.0 * (f.f(w) - f.f(-1.0)) / (1.0 - w * w).powi(2);
        if !(q > 0.0) {
            return Err(SilError::NonMonotone { at: w });
        }
    }
    let h = 2.0 * half_length / (n - 1) as f64;
    let mid = (n - 1) / 2;
    let sub = ((256.0 * h).ceil() as usize).max(8);
    let hs = h / sub as f64;
    let mut v_nodes = vec![0.0; n];
    for &s in &[1.0, -1.0] {
        let mut v = 1.0;
        v_nodes[mid] = 1.0;
        for k in 1..=mid {
            for _ in 0..sub {
                let k1 = v_rate(f, s, v);
                let k2 = v_rate(f, s, v + 0.5 * hs * k1);
                let k3 = v_rate(f, s, v + 0.5 * hs * k2);
                let k4 = v_rate(f, s, v + hs * k3);
                v += hs / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
            let idx = if s > 0.0 { mid + k } else { mid - k };
            v_nodes[idx] = v;
        }
    }
    let z: Vec<f64> = (0..n).map(|i| -half_length + i as f64 * h).collect();
    let mut values = vec![0.0; n];
    let mut deriv = vec![0.0; n];
    let mut second = vec![0.0; n];
    for i in 0..n {
        let s = if i >= mid { 1.0 } else { -1.0 };
        let v = v_nodes[i];
        values[i] = if i == mid { 0.0 } else { s * (1.0 - v) };
        deriv[i] = v * (2.0 - v) * q_near(f, s, v).max(0.0).sqrt();
        second[i] = f.d1(values[i]);
    }
    let mut p = Profile1D {
        dim: 1,
        z,
        h,
        half_length,
        values,
        deriv,
        second,
        well_minus: vec![-1.0],
        well_plus: vec![1.0],
        potential: ProfilePotential::Scalar(f.clone()),
        residual: 0.0,
        energy: 0.0,
    };
    p.residual = p.ode_residual();
    p.energy = p.compute_energy();
    Ok(p)
}

/// Options for the vector energy minimization.
#[derive(Debug, Clone, Copy)]
pub struct DescentOptions {
    pub gradient_tol: f64,
    pub max_iterations: usize,
}

impl Default for DescentOptions {
    fn default() -> Self {
        DescentOptions {
            gradient_tol: 1e-10,
            max_iterations: 20_000,
        }
    }
}

/// Cubic smoothstep: odd, ±1 outside [−1, 1].
fn smoothstep(z: f64) -> f64 {
    if z >= 1.0 {
        1.0
    } else if z <= -1.0 {
        -1.0
    } else {
        0.5 * z * (3.0 - z * z)
    }
}

struct VectorEnergy<'a> {
    w: &'a VectorPotential,
    n: usize,
    m: usize,
    h: f64,
    wref: f64,
}

impl VectorEnergy<'_> {
    fn energy(&self, u: &[f64]) -> f64 {
        let (n, m, h) = (self.n, self.m, self.h);
        let mut e = 0.0;
        for i in 0..n - 1 {
            let mut d2 = 0.0;
            for c in 0..m {
                let d = u[(i + 1) * m + c] - u[i * m + c];
                d2 += d * d;
            }
            e += 0.5 * d2 / h;
        }
        for i in 0..n {
            let wt = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            e += wt * h * (self.w.value(&u[i * m..(i + 1) * m]) - self.wref);
        }
        e
    }

    /// Nodal gradient scaled by 1/h (the discrete Euler–Lagrange residual);
    /// zero at the pinned ends.
    fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let (n, m, h) = (self.n, self.m, self.h);
        let mut g = vec![0.0; n * m];
        let mut gw = vec![0.0; m];
        for i in 1..n - 1 {
            (self.w.grad)(&u[i * m..(i + 1) * m], &mut gw);
            for c in 0..m {
                let lap = (u[(i + 1) * m + c] - 2.0 * u[i * m + c] + u[(i - 1) * m + c]) / (h * h);
                g[i * m + c] = -lap + gw[c];
            }
        }
        g
    }
}

/// Minimizes the discrete energy starting from the smoothstep interpolation
/// between the wells and returns the reflection-odd minimizer.
pub fn solve_vector_profile(w: &VectorPotential, half_length: f64, n: usize) -> Result<Profile1D> {
    solve_vector_profile_with(w, half_length, n, DescentOptions::default())
}

pub fn solve_vector_profile_with(
    w: &VectorPotential,
    half_length: f64,
    n: usize,
    opts: DescentOptions,
) -> Result<Profile1D> {
    check_grid(half_length, n)?;
    let m = w.dim;
    let h = 2.0 * half_length / (n - 1) as f64;
    let z: Vec<f64> = (0..n).map(|i| -half_length + i as f64 * h).collect();
    let mut u = vec![0.0; n * m];
    for i in 0..n {
        let xi = smoothstep(z[i]);
        for c in 0..m {
            u[i * m + c] = 0.5 * (w.well_minus[c] + w.well_plus[c])
                + 0.5 * xi * (w.well_plus[c] - w.well_minus[c]);
        }
    }
    let en = VectorEnergy {
        w,
        n,
        m,
        h,
        wref: w.value(&w.well_plus),
    };
    let shift = w.well_hessian_floor().max(1e-3);
    let project_odd = |d: &mut [f64]| {
        let copy = d.to_vec();
        for i in 0..n {
            let j = n - 1 - i;
            let r = w.reflect_linear(&copy[j * m..(j + 1) * m]);
            for c in 0..m {
                d[i * m + c] = 0.5 * (copy[i * m + c] + r[c]);
            }
        }
    };
    // Preconditioner (−Δ_h + shift) with Dirichlet ends, per component.
    let ni = n - 2;
    let sub = vec![-1.0 / (h * h); ni];
    let sup = vec![-1.0 / (h * h); ni];
    let diag = vec![2.0 / (h * h) + shift; ni];
    let mut e_old = en.energy(&u);
    let mut converged = false;
    let mut gnorm = f64::INFINITY;
    for it in 0..opts.max_iterations {
        let g = en.gradient(&u);
        gnorm = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if gnorm < opts.gradient_tol {
            converged = true;
            break;
        }
        let mut d = vec![0.0; n * m];
        for c in 0..m {
            let rhs: Vec<f64> = (1..n - 1).map(|i| -g[i * m + c]).collect();
            let sol = thomas(&sub, &diag, &sup, &rhs)
                .ok_or_else(|| SilError::SingularSolve("preconditioner".into()))?;
            for (k, v) in sol.into_iter().enumerate() {
                d[(k + 1) * m + c] = v;
            }
        }
        project_odd(&mut d);
        let slope: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>() * h;
        if slope >= 0.0 {
            return Err(SilError::NoDescent { iteration: it });
        }
        let mut alpha = 1.0;
        let mut accepted = false;
        let mut trial = u.clone();
        while alpha > 1e-12 {
            for k in 0..n * m {
                trial[k] = u[k] + alpha * d[k];
            }
            let e_new = en.energy(&trial);
            // Energy differences below rounding level cannot rank steps; the
            // preconditioned direction is then accepted as is.
            let noise = 1e-13 * e_old.abs().max(1.0);
            if e_new <= e_old + 1e-4 * alpha * slope || (alpha == 1.0 && e_new <= e_old + noise && -slope < noise) {
                e_old = e_new;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            if gnorm < 1e3 * opts.gradient_tol {
                // Energy differences are at rounding level.
                converged = true;
                break;
            }
            return Err(SilError::NoDescent { iteration: it });
        }
        std::mem::swap(&mut u, &mut trial);
    }
    if !converged {
        return Err(SilError::NoConvergence {
            iterations: opts.max_iterations,
            residual: gnorm,
        });
    }
    // Enforce u(−z) = R u(z) exactly.
    let copy = u.clone();
    for i in 0..n {
        let j = n - 1 - i;
        let r = w.reflect(&copy[j * m..(j + 1) * m]);
        for c in 0..m {
            u[i * m + c] = 0.5 * (copy[i * m + c] + r[c]);
        }
    }
    polish_vector(&mut u, w, n, h)?;
    let deriv = eighth_order_derivative(&u, w, n, h);
    let mut second = vec![0.0; n * m];
    let mut gw = vec![0.0; m];
    for i in 0..n {
        (w.grad)(&u[i * m..(i + 1) * m], &mut gw);
        second[i * m..(i + 1) * m].copy_from_slice(&gw);
    }
    let mut p = Profile1D {
        dim: m,
        z,
        h,
        half_length,
        values: u,
        deriv,
        second,
        well_minus: w.well_minus.clone(),
        well_plus: w.well_plus.clone(),
        potential: ProfilePotential::Vector(w.clone()),
        residual: 0.0,
        energy: 0.0,
    };
    p.residual = p.ode_residual();
    p.energy = p.compute_energy();
    Ok(p)
}

/// Central eighth-order stencils for the first and second derivative,
/// indexed by offset `0..=4`.
const D1_STENCIL: [f64; 5] = [0.0, 4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
const D2_STENCIL: [f64; 5] = [-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0];

/// Node `k` of a profile extended by its end states beyond the grid.
fn extended<'a>(u: &'a [f64], w: &'a VectorPotential, n: usize, k: isize) -> &'a [f64] {
    let m = w.dim;
    if k < 0 {
        &w.well_minus
    } else if k as usize >= n {
        &w.well_plus
    } else {
        &u[k as usize * m..(k as usize + 1) * m]
    }
}

fn eighth_order_derivative(u: &[f64], w: &VectorPotential, n: usize, h: f64) -> Vec<f64> {
    let m = w.dim;
    let mut d = vec![0.0; n * m];
    for i in 0..n {
        for (k, a) in D1_STENCIL.iter().enumerate().skip(1) {
            let (lo, hi) = (
                extended(u, w, n, i as isize - k as isize),
                extended(u, w, n, (i + k) as isize),
            );
            for c in 0..m {
                d[i * m + c] += a * (hi[c] - lo[c]) / h;
            }
        }
    }
    d
}

/// Newton refinement of the descent minimizer on the eighth-order
/// discretization of `θ″ = ∇W(θ)` with the wells held at both ends. Steps
/// are projected onto reflection-symmetric profiles, which removes the
/// translation mode; a tiny shift keeps the factorization definite.
fn polish_vector(u: &mut [f64], w: &VectorPotential, n: usize, h: f64) -> Result<()> {
    const TOL: f64 = 1e-12;
    const MAX_STEPS: usize = 30;
    let m = w.dim;
    let ni = n - 2;
    let residual = |u: &[f64]| -> Vec<f64> {
        let mut r = vec![0.0; ni * m];
        let mut g = vec![0.0; m];
        for i in 1..n - 1 {
            (w.grad)(&u[i * m..(i + 1) * m], &mut g);
            for c in 0..m {
                let mut d2 = D2_STENCIL[0] * u[i * m + c];
                for (k, a) in D2_STENCIL.iter().enumerate().skip(1) {
                    d2 += a
                        * (extended(u, w, n, i as isize - k as isize)[c]
                            + extended(u, w, n, (i + k) as isize)[c]);
                }
                r[(i - 1) * m + c] = -d2 / (h * h) + g[c];
            }
        }
        r
    };
    let sup = |r: &[f64]| r.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let mut r = residual(u);
    let mut best = sup(&r);
    let mut hess = vec![0.0; m * m];
    for _ in 0..MAX_STEPS {
        if best < TOL {
            break;
        }
        let bw = 4 * m;
        let mut jac = BandMatrix::zeros(ni * m, bw);
        for i in 0..ni {
            (w.hess)(&u[(i + 1) * m..(i + 2) * m], &mut hess);
            for c in 0..m {
                let row = i * m + c;
                for c2 in 0..=c {
                    jac.add(row, i * m + c2, hess[c * m + c2]);
                }
                jac.add(row, row, -D2_STENCIL[0] / (h * h));
                for (k, a) in D2_STENCIL.iter().enumerate().skip(1) {
                    if i >= k {
                        jac.add(row, (i - k) * m + c, -a / (h * h));
                    }
                }
            }
        }
        let chol = jac
            .cholesky_shifted(-1e-10)
            .ok_or(SilError::NoDescent { iteration: 0 })?;
        let mut step = chol.solve(&r);
        // Symmetrize: node i pairs with node ni − 1 − i.
        let copy = step.clone();
        for i in 0..ni {
            let j = ni - 1 - i;
            let rf = w.reflect_linear(&copy[j * m..(j + 1) * m]);
            for c in 0..m {
                step[i * m + c] = 0.5 * (copy[i * m + c] + rf[c]);
            }
        }
        let mut trial = u.to_vec();
        for (k, s) in step.iter().enumerate() {
            trial[m + k] -= s;
        }
        let rt = residual(&trial);
        let now = sup(&rt);
        if !(now < best) {
            break;
        }
        u.copy_from_slice(&trial);
        r = rt;
        best = now;
    }
    Ok(())
}

/// Evaluation of a profile-like function: value, first and second derivative.
pub type Jet = [f64; 3];

impl Profile1D {
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn mid(&self) -> usize {
        (self.len() - 1) / 2
    }

    pub fn value(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn derivative(&self, i: usize) -> &[f64] {
        &self.deriv[i * self.dim..(i + 1) * self.dim]
    }

    /// Component `c` of the profile as a sampled vector.
    pub fn component(&self, c: usize) -> Vec<f64> {
        (0..self.len()).map(|i| self.values[i * self.dim + c]).collect()
    }

    pub fn derivative_component(&self, c: usize) -> Vec<f64> {
        (0..self.len()).map(|i| self.deriv[i * self.dim + c]).collect()
    }

    pub fn second_component(&self, c: usize) -> Vec<f64> {
        (0..self.len()).map(|i| self.second[i * self.dim + c]).collect()
    }

    pub fn quadrature_weights(&self) -> Vec<f64> {
        simpson_weights(self.len(), self.h)
    }

    /// Smallest eigenvalue of the well Hessians (`min f″(±1)` for scalars).
    pub fn well_floor(&self) -> f64 {
        match &self.potential {
            ProfilePotential::Scalar(f) => f.min_well_curvature(),
            ProfilePotential::Vector(w) => w.well_hessian_floor(),
        }
    }

    /// Potential term of the linearized operator at node `i`, row-major
    /// `dim × dim`.
    pub fn linearization(&self, i: usize) -> Vec<f64> {
        match &self.potential {
            ProfilePotential::Scalar(f) => vec![f.d2(self.values[i])],
            ProfilePotential::Vector(w) => {
                let mut h = vec![0.0; self.dim * self.dim];
                (w.hess)(self.value(i), &mut h);
                h
            }
        }
    }

    /// Reaction term `f′(u)` or `∇W(u)` at an arbitrary state.
    pub fn reaction(&self, u: &[f64]) -> Vec<f64> {
        match &self.potential {
            ProfilePotential::Scalar(f) => vec![f.d1(u[0])],
            ProfilePotential::Vector(w) => w.gradient(u),
        }
    }

    /// Linearization `f″(u)` or `D²W(u)` at an arbitrary state.
    pub fn linearization_at(&self, u: &[f64]) -> Vec<f64> {
        match &self.potential {
            ProfilePotential::Scalar(f) => vec![f.d2(u[0])],
            ProfilePotential::Vector(w) => {
                let mut h = vec![0.0; self.dim * self.dim];
                (w.hess)(u, &mut h);
                h
            }
        }
    }

    fn ode_residual(&self) -> f64 {
        let (n, m, h) = (self.len(), self.dim, self.h);
        let mut worst: f64 = 0.0;
        for i in 2..n - 2 {
            let r = self.reaction(self.value(i));
            for c in 0..m {
                let at = |k: usize| self.values[k * m + c];
                let d2 = (-at(i - 2) + 16.0 * at(i - 1) - 30.0 * at(i) + 16.0 * at(i + 1)
                    - at(i + 2))
                    / (12.0 * h * h);
                worst = worst.max((-d2 + r[c]).abs());
            }
        }
        worst
    }

    fn compute_energy(&self) -> f64 {
        let w = self.quadrature_weights();
        let wref = self.potential_value(&self.well_plus);
        (0..self.len())
            .map(|i| {
                let d2: f64 = self.derivative(i).iter().map(|v| v * v).sum();
                w[i] * (0.5 * d2 + self.potential_value(self.value(i)) - wref)
            })
            .sum()
    }

    fn potential_value(&self, u: &[f64]) -> f64 {
        match &self.potential {
            ProfilePotential::Scalar(f) => f.f(u[0]),
            ProfilePotential::Vector(w) => w.value(u),
        }
    }

    /// Profile value and first two derivatives at arbitrary `z` by quintic
    /// Hermite interpolation; the well values are used beyond `[-L, L]`.
    pub fn eval(&self, z: f64) -> Vec<Jet> {
        let m = self.dim;
        if z <= self.z[0] {
            return self.well_minus.iter().map(|v| [*v, 0.0, 0.0]).collect();
        }
        if z >= self.z[self.len() - 1] {
            return self.well_plus.iter().map(|v| [*v, 0.0, 0.0]).collect();
        }
        let s = (z - self.z[0]) / self.h;
        let i = (s.floor() as usize).min(self.len() - 2);
        let t = s - i as f64;
        (0..m)
            .map(|c| {
                let left = [self.values[i * m + c], self.deriv[i * m + c], self.second[i * m + c]];
                let right = [
                    self.values[(i + 1) * m + c],
                    self.deriv[(i + 1) * m + c],
                    self.second[(i + 1) * m + c],
                ];
                quintic_hermite(t, self.h, left, right)
            })
            .collect()
    }

    /// Scalar convenience wrapper around [`Profile1D::eval`].
    pub fn eval_scalar(&self, z: f64) -> Jet {
        self.eval(z)[0]
    }
}

/// Quadrature of the six moments with composite Simpson on the profile grid.
pub fn profile_moments(p: &Profile1D) -> Moments {
    let w = p.quadrature_weights();
    let m = p.dim;
    let mut d = [0.0; 6];
    for i in 0..p.len() {
        let z = p.z[i];
        let a: f64 = (0..m).map(|c| p.deriv[i * m + c].powi(2)).sum();
        let b: f64 = (0..m).map(|c| p.deriv[i * m + c] * p.second[i * m + c]).sum();
        d[0] += w[i] * a;
        d[1] += w[i] * a * z;
        d[2] += w[i] * a * z * z;
        d[3] += w[i] * b * z;
        d[4] += w[i] * b * z * z;
        d[5] += w[i] * b * z * z * z;
    }
    Moments {
        d1: d[0],
        d2: d[1],
        d3: d[2],
        d4: d[3],
        d5: d[4],
        d6: d[5],
    }
}

/// Least-squares decay rate of `|θ − well|` over both tails `[L/2, 3L/4]`;
/// the slower tail is reported.
pub fn estimate_decay_rate(p: &Profile1D) -> Result<DecayFit> {
    const MIN_SAMPLES: usize = 16;
    let lo = 0.5 * p.half_length;
    let hi = 0.75 * p.half_length;
    let mut beta = f64::INFINITY;
    let mut residual: f64 = 0.0;
    let mut samples = usize::MAX;
    for side in [1.0, -1.0] {
        let well = if side > 0.0 { &p.well_plus } else { &p.well_minus };
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..p.len() {
            let az = side * p.z[i];
            if az < lo || az > hi {
                continue;
            }
            let dev = p
                .value(i)
                .iter()
                .zip(well)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            if dev > 0.2 {
                return Err(SilError::TailTooShort {
                    found: 0,
                    needed: MIN_SAMPLES,
                });
            }
            if dev > 1e-280 {
                xs.push(az);
                ys.push(dev.ln());
            }
        }
        if xs.len() < MIN_SAMPLES {
            return Err(SilError::TailTooShort {
                found: xs.len(),
                needed: MIN_SAMPLES,
            });
        }
        let fit = linear_fit(&xs, &ys).ok_or(SilError::TailTooShort {
            found: xs.len(),
            needed: MIN_SAMPLES,
        })?;
        beta = beta.min(-fit.slope);
        residual = residual.max(fit.residual);
        samples = samples.min(xs.len());
    }
    Ok(DecayFit {
        beta,
        residual,
        samples,
    })
}

/// Midpoint functional `B̌u = (u₋ − u₊)ᵀ(R − I)u(0)` of a sampled vector
/// function (linear part of the reflection).
pub fn midpoint_functional(p: &Profile1D, w: &VectorPotential, u: &[f64]) -> f64 {
    let m = p.dim;
    let mid = p.mid();
    let u0 = &u[mid * m..(mid + 1) * m];
    let r = w.reflect_linear(u0);
    (0..m)
        .map(|c| (p.well_minus[c] - p.well_plus[c]) * (r[c] - u0[c]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{make_quartic, make_twowell};

    #[test]
    fn quartic_profile_is_tanh() {
        let p = solve_scalar_profile(&make_quartic(), 8.0, 1025).unwrap();
        let err = p
            .z
            .iter()
            .zip(&p.values)
            .map(|(z, v)| (v - z.tanh()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
        assert_eq!(p.values[p.mid()], 0.0);
        assert!(p.deriv.iter().all(|d| *d > 0.0));
    }

    #[test]
    fn quartic_moments() {
        let p = solve_scalar_profile(&make_quartic(), 12.0, 4097).unwrap();
        let m = profile_moments(&p);
        assert!((m.d1 - 4.0 / 3.0).abs() < 1e-9);
        assert!(m.d2.abs() < 1e-10 && m.d5.abs() < 1e-10);
        assert!((m.d4 + 0.5 * m.d1).abs() < 1e-10);
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((m.d3 - (pi2 - 6.0) / 9.0).abs() < 1e-8, "{}", m.d3);
    }

    #[test]
    fn decay_rates() {
        let p = solve_scalar_profile(&make_quartic(), 8.0, 1025).unwrap();
        let b = estimate_decay_rate(&p).unwrap();
        assert!((b.beta - 2.0).abs() < 0.05);
    }

    #[test]
    fn constant_function_has_no_tail() {
        let mut p = solve_scalar_profile(&make_quartic(), 8.0, 1025).unwrap();
        for v in p.values.iter_mut() {
            *v = 1.0;
        }
        assert!(matches!(
            estimate_decay_rate(&p),
            Err(SilError::TailTooShort { .. })
        ));
    }

    #[test]
    fn non_monotone_potential_is_rejected() {
        // f = ½(1−u²)²(u² − 0.25)² + ... vanishes inside (−1,1) at ±0.5.
        let coeffs = [0.03125, 0.0, -0.3125, 0.0, 0.78125, 0.0, -1.0, 0.0, 0.5];
        let f = ScalarPotential::from_polynomial("bad", &coeffs).unwrap();
        assert!(matches!(
            solve_scalar_profile(&f, 8.0, 1025),
            Err(SilError::NonMonotone { .. })
        ));
    }

    #[test]
    fn twowell_profile() {
        let w = make_twowell();
        let p = solve_vector_profile(&w, 12.0, 8193).unwrap();
        let s2 = std::f64::consts::SQRT_2;
        let mut err: f64 = 0.0;
        for i in 0..p.len() {
            err = err.max((p.value(i)[0] - (p.z[i] / s2).tanh()).abs());
            err = err.max(p.value(i)[1].abs());
        }
        assert!(err < 1e-6, "{err}");
        let b = estimate_decay_rate(&p).unwrap();
        assert!((b.beta - s2).abs() < 0.05, "{}", b.beta);
        let m = profile_moments(&p);
        assert!(m.d2.abs() < 1e-10 && m.d5.abs() < 1e-10);
        assert!(midpoint_functional(&p, &w, &p.values).abs() < 1e-14);
    }
}
