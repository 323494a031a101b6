//! Allen–Cahn evolution `∂_t u − Δu + ε⁻² f′(u) = 0` (scalar) and
//! `∂_t u − Δu + ε⁻² ∇W(u) = 0` (vector) on the unit square with homogeneous
//! Neumann conditions.
//!
//! Fields live on the vertex grid. The Neumann closure mirrors the first
//! interior line into the ghost nodes, which makes both Laplacians diagonal
//! in the type-I cosine basis: the five-point one with symbols
//! `−(2 − 2cos(kπ/N))/h²` and the spectral one with `−(kπ)²`.

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use serde::Serialize;

use crate::dct::Dct2;
use crate::grid::Grid2D;
use crate::potentials::{ScalarPotential, VectorPotential};
use crate::{Result, SilError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum Scheme {
    /// Implicit Laplacian, explicit reaction.
    #[default]
    SemiImplicit,
    /// Forward Euler.
    Explicit,
    /// Fourth-order exponential time differencing with the Laplacian as the
    /// linear part.
    Etdrk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum LaplacianKind {
    #[default]
    FiniteDifference,
    Spectral,
}

/// Reaction term and potential for one run.
#[derive(Debug, Clone, Copy)]
pub enum Reaction<'a> {
    Scalar(&'a ScalarPotential),
    Vector(&'a VectorPotential),
}

impl Reaction<'_> {
    pub fn dim(&self) -> usize {
        match self {
            Reaction::Scalar(_) => 1,
            Reaction::Vector(w) => w.dim,
        }
    }

    /// Radius beyond which the reaction points outward (`R₀`).
    pub fn radius(&self) -> f64 {
        match self {
            Reaction::Scalar(f) => f.radial_radius,
            Reaction::Vector(w) => w.radial_radius,
        }
    }

    fn gradient(&self, u: &[f64], out: &mut [f64]) {
        match self {
            Reaction::Scalar(f) => out[0] = f.d1(u[0]),
            Reaction::Vector(w) => (w.grad)(u, out),
        }
    }

    fn potential(&self, u: &[f64]) -> f64 {
        match self {
            Reaction::Scalar(f) => f.f(u[0]),
            Reaction::Vector(w) => w.value(u),
        }
    }

    /// Largest spectral radius of the Hessian on the ball of radius `b`,
    /// sampled.
    pub fn max_curvature(&self, b: f64) -> f64 {
        match self {
            Reaction::Scalar(f) => f.max_abs_d2(b),
            Reaction::Vector(w) => {
                let m = w.dim;
                let mut worst: f64 = 0.0;
                let mut h = vec![0.0; m * m];
                let mut u = vec![0.0; m];
                let count = 4000;
                for k in 0..count {
                    for (c, v) in u.iter_mut().enumerate() {
                        *v = b * (2.0 * crate::numerics::halton(k + 1, [2, 3, 5, 7, 11][c % 5]) - 1.0);
                    }
                    let norm: f64 = u.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if norm > b {
                        continue;
                    }
                    (w.hess)(&u, &mut h);
                    // Gershgorin bound of the symmetric Hessian.
                    for r in 0..m {
                        let row: f64 = (0..m).map(|c| h[r * m + c].abs()).sum();
                        worst = worst.max(row);
                    }
                }
                worst
            }
        }
    }
}

/// Component-major field on the vertex grid of the unit square.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Field2D {
    pub grid: Grid2D,
    pub t: f64,
    #[serde(skip)]
    pub comps: Vec<Vec<f64>>,
}

impl Field2D {
    pub fn sample(grid: Grid2D, t: f64, dim: usize, f: impl Fn(f64, f64) -> Vec<f64> + Sync) -> Self {
        let nodes: Vec<Vec<f64>> = (0..grid.len())
            .into_par_iter()
            .map(|k| f(grid.x(k % grid.px()), grid.y(k / grid.px())))
            .collect();
        let comps = (0..dim).map(|c| nodes.iter().map(|v| v[c]).collect()).collect();
        Field2D { grid, t, comps }
    }

    pub fn scalar(grid: Grid2D, t: f64, values: Vec<f64>) -> Self {
        Field2D {
            grid,
            t,
            comps: vec![values],
        }
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn node(&self, k: usize) -> Vec<f64> {
        self.comps.iter().map(|c| c[k]).collect()
    }

    /// `max_x |u(x)|` with the Euclidean norm for vector fields.
    pub fn supnorm(&self) -> f64 {
        (0..self.grid.len())
            .map(|k| self.comps.iter().map(|c| c[k] * c[k]).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(|c| c.iter().all(|v| v.is_finite()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolveConfig {
    pub eps: f64,
    /// Requested step; reduced to the reaction cap when larger.
    pub dt: f64,
    /// Output times, increasing, after the initial time.
    pub sample_times: Vec<f64>,
    pub scheme: Scheme,
    pub laplacian: LaplacianKind,
    /// Safety factor `c` of the reaction cap `dt ≤ c·ε²/max|f″|`.
    pub reaction_safety: f64,
}

impl EvolveConfig {
    pub fn new(eps: f64, dt: f64, t_end: f64, samples: usize) -> Self {
        EvolveConfig {
            eps,
            dt,
            sample_times: (1..=samples).map(|k| t_end * k as f64 / samples as f64).collect(),
            scheme: Scheme::SemiImplicit,
            laplacian: LaplacianKind::FiniteDifference,
            reaction_safety: 0.2,
        }
    }

    pub fn t_end(&self) -> f64 {
        self.sample_times.last().copied().unwrap_or(0.0)
    }
}

/// Per-step instrumentation record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Instrument {
    pub t: f64,
    pub energy: f64,
    pub supnorm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    /// Initial field followed by one field per sample time.
    pub snapshots: Vec<Field2D>,
    /// Initial record followed by one record per step.
    pub instruments: Vec<Instrument>,
    pub steps: usize,
    /// Largest step actually taken.
    pub dt: f64,
    pub scheme: Scheme,
    pub laplacian: LaplacianKind,
}

impl Trajectory {
    /// Largest energy increase between consecutive steps.
    pub fn max_energy_increase(&self) -> f64 {
        self.instruments
            .windows(2)
            .map(|w| w[1].energy - w[0].energy)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Source term `F(x, y, t)` added to the right-hand side, written into the
/// output slice (one entry per component).
pub type Forcing = dyn Fn(f64, f64, f64, &mut [f64]) + Sync;

/// Symbols of the Laplacian in the cosine basis, row-major like the grid.
fn laplacian_symbols(grid: Grid2D, kind: LaplacianKind) -> Vec<f64> {
    let one = |n: usize, h: f64| -> Vec<f64> {
        (0..=n)
            .map(|k| match kind {
                LaplacianKind::FiniteDifference => {
                    -(2.0 - 2.0 * (std::f64::consts::PI * k as f64 / n as f64).cos()) / (h * h)
                }
                LaplacianKind::Spectral => -(std::f64::consts::PI * k as f64).powi(2),
            })
            .collect()
    };
    let lx = one(grid.nx, grid.hx());
    let ly = one(grid.ny, grid.hy());
    let mut out = Vec::with_capacity(grid.len());
    for j in 0..grid.py() {
        for i in 0..grid.px() {
            out.push(lx[i] + ly[j]);
        }
    }
    out
}

/// Laplacian operator on fields of one grid.
pub struct Laplacian {
    grid: Grid2D,
    kind: LaplacianKind,
    symbols: Vec<f64>,
    dct: Dct2,
}

impl Laplacian {
    pub fn new(grid: Grid2D, kind: LaplacianKind) -> Self {
        Laplacian {
            grid,
            kind,
            symbols: laplacian_symbols(grid, kind),
            dct: Dct2::new(grid.px(), grid.py()),
        }
    }

    /// Largest symbol magnitude.
    pub fn spectral_radius(&self) -> f64 {
        self.symbols.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        match self.kind {
            LaplacianKind::FiniteDifference => five_point(self.grid, u),
            LaplacianKind::Spectral => {
                let mut a = u.to_vec();
                self.dct.forward(&mut a);
                for (v, s) in a.iter_mut().zip(&self.symbols) {
                    *v *= s;
                }
                self.dct.inverse(&mut a);
                a
            }
        }
    }
}

/// Five-point Laplacian with mirrored ghost nodes.
pub fn five_point(grid: Grid2D, u: &[f64]) -> Vec<f64> {
    let (px, py) = (grid.px(), grid.py());
    let (ax, ay) = (1.0 / grid.hx().powi(2), 1.0 / grid.hy().powi(2));
    let mut out = vec![0.0; u.len()];
    out.par_chunks_mut(px).enumerate().for_each(|(j, row)| {
        let jm = if j == 0 { 1 } else { j - 1 };
        let jp = if j + 1 == py { py - 2 } else { j + 1 };
        for i in 0..px {
            let im = if i == 0 { 1 } else { i - 1 };
            let ip = if i + 1 == px { px - 2 } else { i + 1 };
            let c = u[j * px + i];
            row[i] = ax * (u[j * px + ip] - 2.0 * c + u[j * px + im])
                + ay * (u[jp * px + i] - 2.0 * c + u[jm * px + i]);
        }
    });
    out
}

/// Discrete energy `½⟨u, −Δ_h u⟩ + ε⁻² Σ w f(u)` with trapezoid weights.
pub fn energy(u: &Field2D, reaction: Reaction, eps: f64, lap: &Laplacian) -> f64 {
    let w = u.grid.weights();
    let mut e = 0.0;
    for c in &u.comps {
        let l = lap.apply(c);
        e -= 0.5 * c.iter().zip(&l).zip(&w).map(|((a, b), w)| w * a * b).sum::<f64>();
    }
    let m = u.dim();
    let pot: f64 = (0..u.grid.len())
        .into_par_iter()
        .map(|k| {
            let mut v = [0.0; 8];
            for c in 0..m {
                v[c] = u.comps[c][k];
            }
            w[k] * reaction.potential(&v[..m])
        })
        .sum();
    e + pot / (eps * eps)
}

/// Nonlinear part `−ε⁻²∇W(u) + F` at every node.
fn nonlinear(
    u: &[Vec<f64>],
    reaction: Reaction,
    eps: f64,
    grid: Grid2D,
    t: f64,
    forcing: Option<&Forcing>,
) -> Vec<Vec<f64>> {
    let m = u.len();
    let inv = 1.0 / (eps * eps);
    let nodes: Vec<[f64; 8]> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let mut v = [0.0; 8];
            let mut g = [0.0; 8];
            for c in 0..m {
                v[c] = u[c][k];
            }
            reaction.gradient(&v[..m], &mut g[..m]);
            for c in 0..m {
                g[c] *= -inv;
            }
            if let Some(f) = forcing {
                let mut s = [0.0; 8];
                f(grid.x(k % grid.px()), grid.y(k / grid.px()), t, &mut s[..m]);
                for c in 0..m {
                    g[c] += s[c];
                }
            }
            g
        })
        .collect();
    (0..m).map(|c| nodes.iter().map(|g| g[c]).collect()).collect()
}

/// Exponential-integrator coefficients for `L = symbols`, step `dt`, by the
/// contour-integral formulas.
struct EtdCoefficients {
    e: Vec<f64>,
    e2: Vec<f64>,
    q: Vec<f64>,
    f1: Vec<f64>,
    f2: Vec<f64>,
    f3: Vec<f64>,
}

impl EtdCoefficients {
    fn new(symbols: &[f64], dt: f64) -> Self {
        const POINTS: usize = 32;
        let roots: Vec<Complex<f64>> = (0..POINTS)
            .map(|k| {
                let th = std::f64::consts::PI * (k as f64 + 0.5) / POINTS as f64;
                Complex::from_polar(1.0, th)
            })
            .collect();
        let per: Vec<[f64; 6]> = symbols
            .par_iter()
            .map(|l| {
                let z = dt * l;
                let mut acc = [0.0; 4];
                // The upper half circle suffices: the integrands are real on
                // the real axis, so conjugate points contribute conjugates.
                for r in &roots {
                    let lr = Complex::new(z, 0.0) + r;
                    let ex = lr.exp();
                    let ex2 = (lr * 0.5).exp();
                    let l3 = lr * lr * lr;
                    acc[0] += ((ex2 - 1.0) / lr).re;
                    acc[1] += ((-4.0 - lr + ex * (4.0 - 3.0 * lr + lr * lr)) / l3).re;
                    acc[2] += ((2.0 + lr + ex * (lr - 2.0)) / l3).re;
                    acc[3] += ((-4.0 - 3.0 * lr - lr * lr + ex * (4.0 - lr)) / l3).re;
                }
                let n = POINTS as f64;
                [
                    z.exp(),
                    (0.5 * z).exp(),
                    dt * acc[0] / n,
                    dt * acc[1] / n,
                    dt * acc[2] / n,
                    dt * acc[3] / n,
                ]
            })
            .collect();
        let col = |i: usize| per.iter().map(|v| v[i]).collect();
        EtdCoefficients {
            e: col(0),
            e2: col(1),
            q: col(2),
            f1: col(3),
            f2: col(4),
            f3: col(5),
        }
    }
}

/// Step-size limit from the explicit reaction: `c·ε²/max_{|u|≤B}|D²W|`.
pub fn reaction_step_cap(reaction: Reaction, eps: f64, bound: f64, safety: f64) -> f64 {
    safety * eps * eps / reaction.max_curvature(bound).max(1e-300)
}

struct Stepper<'a> {
    reaction: Reaction<'a>,
    eps: f64,
    grid: Grid2D,
    lap: Laplacian,
    forcing: Option<&'a Forcing>,
    scheme: Scheme,
    dt: f64,
    etd: Option<EtdCoefficients>,
}

impl Stepper<'_> {
    fn set_dt(&mut self, dt: f64) {
        if self.scheme == Scheme::Etdrk4 && (self.etd.is_none() || dt != self.dt) {
            self.etd = Some(EtdCoefficients::new(&self.lap.symbols, dt));
        }
        self.dt = dt;
    }

    fn forward(&self, u: &[f64]) -> Vec<f64> {
        let mut a = u.to_vec();
        self.lap.dct.forward(&mut a);
        a
    }

    fn inverse(&self, a: &[f64]) -> Vec<f64> {
        let mut u = a.to_vec();
        self.lap.dct.inverse(&mut u);
        u
    }

    fn n(&self, u: &[Vec<f64>], t: f64) -> Vec<Vec<f64>> {
        nonlinear(u, self.reaction, self.eps, self.grid, t, self.forcing)
    }

    fn step(&self, u: &[Vec<f64>], t: f64) -> Vec<Vec<f64>> {
        let dt = self.dt;
        match self.scheme {
            Scheme::Explicit => {
                let nl = self.n(u, t);
                u.iter()
                    .zip(&nl)
                    .map(|(c, g)| {
                        let l = self.lap.apply(c);
                        (0..c.len()).map(|k| c[k] + dt * (l[k] + g[k])).collect()
                    })
                    .collect()
            }
            Scheme::SemiImplicit => {
                let nl = self.n(u, t);
                u.iter()
                    .zip(&nl)
                    .map(|(c, g)| {
                        let rhs: Vec<f64> = c.iter().zip(g).map(|(a, b)| a + dt * b).collect();
                        let mut a = self.forward(&rhs);
                        for (v, s) in a.iter_mut().zip(&self.lap.symbols) {
                            *v /= 1.0 - dt * s;
                        }
                        self.inverse(&a)
                    })
                    .collect()
            }
            Scheme::Etdrk4 => {
                let co = self.etd.as_ref().expect("coefficients set with the step");
                let hat = |f: &[Vec<f64>]| -> Vec<Vec<f64>> { f.iter().map(|c| self.forward(c)).collect() };
                let phys = |f: &[Vec<f64>]| -> Vec<Vec<f64>> { f.iter().map(|c| self.inverse(c)).collect() };
                let combine = |a: &[Vec<f64>], ea: &[f64], b: &[Vec<f64>], qb: &[f64]| -> Vec<Vec<f64>> {
                    a.iter()
                        .zip(b)
                        .map(|(x, y)| (0..x.len()).map(|k| ea[k] * x[k] + qb[k] * y[k]).collect())
                        .collect()
                };
                let v = hat(u);
                let nv = hat(&self.n(u, t));
                let a = combine(&v, &co.e2, &nv, &co.q);
                let na = hat(&self.n(&phys(&a), t + 0.5 * dt));
                let b = combine(&v, &co.e2, &na, &co.q);
                let nb = hat(&self.n(&phys(&b), t + 0.5 * dt));
                let mix: Vec<Vec<f64>> = nb
                    .iter()
                    .zip(&nv)
                    .map(|(x, y)| x.iter().zip(y).map(|(p, q)| 2.0 * p - q).collect())
                    .collect();
                let c = combine(&a, &co.e2, &mix, &co.q);
                let nc = hat(&self.n(&phys(&c), t + dt));
                let next: Vec<Vec<f64>> = (0..v.len())
                    .map(|m| {
                        (0..v[m].len())
                            .map(|k| {
                                co.e[k] * v[m][k]
                                    + co.f1[k] * nv[m][k]
                                    + 2.0 * co.f2[k] * (na[m][k] + nb[m][k])
                                    + co.f3[k] * nc[m][k]
                            })
                            .collect()
                    })
                    .collect();
                phys(&next)
            }
        }
    }
}

/// Evolves `u0` to every sample time of `cfg`, recording energy and
/// sup-norm after each step.
pub fn evolve(
    u0: &Field2D,
    reaction: Reaction,
    cfg: &EvolveConfig,
    forcing: Option<&Forcing>,
) -> Result<Trajectory> {
    if u0.dim() != reaction.dim() {
        return Err(SilError::InvalidInput(format!(
            "field has {} components, reaction expects {}",
            u0.dim(),
            reaction.dim()
        )));
    }
    if u0.dim() > 8 {
        return Err(SilError::InvalidInput("at most 8 components are supported".into()));
    }
    if !u0.is_finite() {
        return Err(SilError::InvalidInput("initial field is not finite".into()));
    }
    if !(cfg.eps > 0.0 && cfg.dt > 0.0) {
        return Err(SilError::InvalidInput("eps and dt must be positive".into()));
    }
    let grid = u0.grid;
    let lap = Laplacian::new(grid, cfg.laplacian);
    let bound = reaction.radius().max(u0.supnorm());
    let mut cap = reaction_step_cap(reaction, cfg.eps, bound, cfg.reaction_safety);
    if cfg.scheme == Scheme::Explicit {
        let diffusion = 2.0 / lap.spectral_radius();
        if cfg.dt > diffusion {
            return Err(SilError::InvalidInput(format!(
                "explicit step {} exceeds the diffusion limit {diffusion}",
                cfg.dt
            )));
        }
        cap = cap.min(diffusion);
    }
    let mut stepper = Stepper {
        reaction,
        eps: cfg.eps,
        grid,
        lap,
        forcing,
        scheme: cfg.scheme,
        dt: 0.0,
        etd: None,
    };
    let mut u = u0.comps.clone();
    let mut t = u0.t;
    let record = |u: &[Vec<f64>], t: f64, lap: &Laplacian| -> Instrument {
        let f = Field2D {
            grid,
            t,
            comps: u.to_vec(),
        };
        Instrument {
            t,
            energy: energy(&f, reaction, cfg.eps, lap),
            supnorm: f.supnorm(),
        }
    };
    let mut traj = Trajectory {
        snapshots: vec![u0.clone()],
        instruments: vec![record(&u, t, &stepper.lap)],
        steps: 0,
        dt: 0.0,
        scheme: cfg.scheme,
        laplacian: cfg.laplacian,
    };
    for &target in &cfg.sample_times {
        if target <= t {
            return Err(SilError::InvalidInput("sample times must increase past the start".into()));
        }
        let steps = ((target - t) / cfg.dt.min(cap) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        stepper.set_dt((target - t) / steps as f64);
        traj.dt = traj.dt.max(stepper.dt);
        for k in 0..steps {
            let next = stepper.step(&u, t);
            if next.iter().any(|c| c.iter().any(|v| !v.is_finite())) {
                return Err(SilError::StepRejected { t });
            }
            u = next;
            t = if k + 1 == steps { target } else { t + stepper.dt };
            traj.steps += 1;
            traj.instruments.push(record(&u, t, &stepper.lap));
        }
        traj.snapshots.push(Field2D {
            grid,
            t,
            comps: u.clone(),
        });
    }
    Ok(traj)
}

pub fn ac_evolve(u0: &Field2D, f: &ScalarPotential, cfg: &EvolveConfig) -> Result<Trajectory> {
    evolve(u0, Reaction::Scalar(f), cfg, None)
}

pub fn vac_evolve(u0: &Field2D, w: &VectorPotential, cfg: &EvolveConfig) -> Result<Trajectory> {
    evolve(u0, Reaction::Vector(w), cfg, None)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundsReport {
    pub r0: f64,
    pub initial_supnorm: f64,
    /// `max{R₀, ‖u₀‖_∞}`.
    pub bound: f64,
    /// Largest `‖u(t)‖_∞ − bound` over the recorded steps.
    pub worst_excess: f64,
    pub slack: f64,
    pub holds: bool,
}

/// Grid-refinement study against the forced exact solution
/// `cos πx cos πy e^{−2π²t}` of the quartic equation at `ε = ½`.
#[derive(Debug, Clone, Serialize)]
pub struct ManufacturedReport {
    pub h: Vec<f64>,
    pub errors: Vec<f64>,
    pub order: f64,
}

pub fn manufactured_order(scheme: Scheme, laplacian: LaplacianKind) -> Result<ManufacturedReport> {
    use std::f64::consts::PI;
    let f = crate::potentials::make_quartic();
    let eps = 0.5;
    let t_end = 0.05;
    let exact = |x: f64, y: f64, t: f64| (PI * x).cos() * (PI * y).cos() * (-2.0 * PI * PI * t).exp();
    let reaction = f.clone();
    let forcing = move |x: f64, y: f64, t: f64, out: &mut [f64]| {
        out[0] = reaction.d1(exact(x, y, t)) / (eps * eps);
    };
    let mut h = Vec::new();
    let mut errors = Vec::new();
    for n in [8, 16, 32, 64] {
        let grid = Grid2D::square(n);
        let u0 = Field2D::sample(grid, 0.0, 1, |x, y| vec![exact(x, y, 0.0)]);
        // dt ∝ h² so that first-order time stepping cannot mask the
        // spatial order.
        let mut cfg = EvolveConfig::new(eps, 0.25 * grid.hx() * grid.hx(), t_end, 1);
        cfg.scheme = scheme;
        cfg.laplacian = laplacian;
        let tr = evolve(&u0, Reaction::Scalar(&f), &cfg, Some(&forcing))?;
        let u = tr.snapshots.last().expect("final snapshot");
        let err = (0..grid.len())
            .map(|k| (u.comps[0][k] - exact(grid.x(k % grid.px()), grid.y(k / grid.px()), t_end)).abs())
            .fold(0.0, f64::max);
        h.push(grid.hx());
        errors.push(err);
    }
    let order = crate::numerics::fit_order(&h, &errors).map_or(f64::NAN, |l| l.slope);
    Ok(ManufacturedReport { h, errors, order })
}

/// Checks `‖u(t)‖_∞ ≤ max{R₀, ‖u₀‖_∞} + slack` at every recorded step.
pub fn bounds_check(traj: &Trajectory, u0: &Field2D, reaction: Reaction, slack: f64) -> BoundsReport {
    let r0 = reaction.radius();
    let initial = u0.supnorm();
    let bound = r0.max(initial);
    let worst = traj
        .instruments
        .iter()
        .map(|i| i.supnorm - bound)
        .fold(f64::NEG_INFINITY, f64::max);
    BoundsReport {
        r0,
        initial_supnorm: initial,
        bound,
        worst_excess: worst,
        slack,
        holds: worst <= slack,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{make_quartic, make_twowell};
    use std::f64::consts::PI;

    #[test]
    fn wells_are_stationary() {
        let f = make_quartic();
        let grid = Grid2D::square(16);
        let u0 = Field2D::scalar(grid, 0.0, vec![1.0; grid.len()]);
        for scheme in [Scheme::SemiImplicit, Scheme::Explicit, Scheme::Etdrk4] {
            let mut cfg = EvolveConfig::new(0.1, 1e-4, 0.01, 2);
            cfg.scheme = scheme;
            let tr = ac_evolve(&u0, &f, &cfg).unwrap();
            let drift = tr.snapshots.last().unwrap().comps[0].iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
            assert!(drift <= 1e-12, "{scheme:?} {drift}");
        }
        let w = make_twowell();
        let u0 = Field2D::sample(grid, 0.0, 2, |_, _| vec![1.0, 0.0]);
        let tr = vac_evolve(&u0, &w, &EvolveConfig::new(0.1, 1e-4, 0.01, 1)).unwrap();
        assert!(tr.snapshots[1].comps[0].iter().all(|v| (v - 1.0).abs() <= 1e-12));
        assert!(tr.snapshots[1].comps[1].iter().all(|v| v.abs() <= 1e-12));
    }

    #[test]
    fn laplacians_agree_with_cosine_modes() {
        let grid = Grid2D::square(32);
        let u: Vec<f64> = grid.sample(|x, y| (PI * x).cos() * (2.0 * PI * y).cos());
        let spec = Laplacian::new(grid, LaplacianKind::Spectral).apply(&u);
        let fd = Laplacian::new(grid, LaplacianKind::FiniteDifference).apply(&u);
        let fd5 = five_point(grid, &u);
        for k in 0..grid.len() {
            assert!((spec[k] + 5.0 * PI * PI * u[k]).abs() < 1e-9);
            assert!((fd[k] - fd5[k]).abs() < 1e-8);
        }
    }

    #[test]
    fn energy_decreases_and_bounds_hold() {
        let f = make_quartic();
        let grid = Grid2D::square(32);
        let u0 = Field2D::sample(grid, 0.0, 1, |x, y| {
            vec![1.2 * (3.0 * x + 5.0 * y * y).sin()]
        });
        for scheme in [Scheme::SemiImplicit, Scheme::Explicit, Scheme::Etdrk4] {
            let mut cfg = EvolveConfig::new(0.1, 2e-4, 0.02, 4);
            cfg.scheme = scheme;
            let tr = ac_evolve(&u0, &f, &cfg).unwrap();
            let e0 = tr.instruments[0].energy;
            assert!(tr.max_energy_increase() <= 1e-10 * e0, "{scheme:?}");
            let b = bounds_check(&tr, &u0, Reaction::Scalar(&f), 1e-10);
            assert!(b.holds && (b.bound - 1.2).abs() < 1e-3, "{scheme:?} {b:?}");
        }
    }

    #[test]
    fn explicit_step_limit_is_enforced() {
        let f = make_quartic();
        let grid = Grid2D::square(32);
        let u0 = Field2D::scalar(grid, 0.0, vec![0.0; grid.len()]);
        let mut cfg = EvolveConfig::new(0.5, 1e-3, 0.01, 1);
        cfg.scheme = Scheme::Explicit;
        assert!(matches!(ac_evolve(&u0, &f, &cfg), Err(SilError::InvalidInput(_))));
    }

    fn flat_drift(scheme: Scheme, dt: f64) -> f64 {
        let f = make_quartic();
        let eps = 0.1;
        let grid = Grid2D::square(128);
        let u0 = Field2D::sample(grid, 0.0, 1, |_, y| vec![((y - 0.5) / eps).tanh()]);
        let mut cfg = EvolveConfig::new(eps, dt, 0.01, 1);
        cfg.scheme = scheme;
        cfg.laplacian = LaplacianKind::Spectral;
        let tr = ac_evolve(&u0, &f, &cfg).unwrap();
        tr.snapshots[1].comps[0]
            .iter()
            .zip(&u0.comps[0])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn flat_profile_is_nearly_stationary() {
        let d = flat_drift(Scheme::Etdrk4, 1e-4);
        let semi = flat_drift(Scheme::SemiImplicit, 1e-5);
        println!("flat drift etdrk4 {d:e} semi {semi:e}");
        // The walls see the tail deficit 1 − θ₀(0.5/ε) and relax it away.
        let tail = 1.0 - (0.5f64 / 0.1).tanh();
        assert!(d <= 1.1 * tail, "{d:e}");
        assert!(semi <= 1.1 * tail + 1e-5, "{semi:e}");
    }

    #[test]
    fn flat_vector_profile_is_nearly_stationary() {
        let w = make_twowell();
        let eps = 0.1;
        let grid = Grid2D::square(128);
        let u0 = Field2D::sample(grid, 0.0, 2, |_, y| {
            vec![((y - 0.5) / (std::f64::consts::SQRT_2 * eps)).tanh(), 0.0]
        });
        let mut cfg = EvolveConfig::new(eps, 1e-4, 0.01, 1);
        cfg.scheme = Scheme::Etdrk4;
        cfg.laplacian = LaplacianKind::Spectral;
        let tr = vac_evolve(&u0, &w, &cfg).unwrap();
        let d = tr.snapshots[1].comps[0]
            .iter()
            .zip(&u0.comps[0])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let off = tr.snapshots[1].comps[1].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        println!("vector flat drift {d:e} off-axis {off:e}");
        let tail = 1.0 - (0.5 / (std::f64::consts::SQRT_2 * eps)).tanh();
        assert!(d <= 1.1 * tail && off < 1e-12, "{d:e} {tail:e}");
        assert!(tr.max_energy_increase() <= 1e-10 * tr.instruments[0].energy);
    }

    #[test]
    fn manufactured_solution_is_second_order() {
        let m = manufactured_order(Scheme::Etdrk4, LaplacianKind::FiniteDifference).unwrap();
        println!("manufactured errors {:?} order {}", m.errors, m.order);
        assert!(m.order >= 1.8);
    }

    #[test]
    fn schemes_agree_to_first_order_in_dt() {
        let f = make_quartic();
        let grid = Grid2D::square(32);
        let u0 = Field2D::sample(grid, 0.0, 1, |x, y| vec![0.8 * (PI * x).cos() * (2.0 * PI * y).cos()]);
        let run = |scheme: Scheme, dt: f64| {
            let mut cfg = EvolveConfig::new(0.2, dt, 0.01, 1);
            cfg.scheme = scheme;
            ac_evolve(&u0, &f, &cfg).unwrap().snapshots.pop().unwrap().comps.remove(0)
        };
        let dts = [2e-4, 1e-4, 5e-5];
        let gaps: Vec<f64> = dts
            .iter()
            .map(|&dt| {
                let a = run(Scheme::SemiImplicit, dt);
                let b = run(Scheme::Explicit, dt);
                a.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
            })
            .collect();
        let order = crate::numerics::fit_order(&dts, &gaps).unwrap().slope;
        println!("cross-scheme gaps {gaps:?} order {order}");
        assert!(order >= 1.0 - 0.05);
    }

    #[test]
    fn explicit_steps_dissipate_energy() {
        let f = make_quartic();
        let eps = 0.1;
        let grid = Grid2D::square(32);
        let lap = Laplacian::new(grid, LaplacianKind::FiniteDifference);
        let u0 = Field2D::sample(grid, 0.0, 1, |x, y| vec![(4.0 * x - 2.0 + 0.5 * (3.0 * y).sin()).tanh()]);
        let dt = 1e-5;
        let mut cfg = EvolveConfig::new(eps, dt, 20.0 * dt, 20);
        cfg.scheme = Scheme::Explicit;
        let tr = ac_evolve(&u0, &f, &cfg).unwrap();
        let w = grid.weights();
        let mut worst = f64::INFINITY;
        for (a, b) in tr.snapshots.iter().zip(tr.snapshots.iter().skip(1)) {
            let drop = (energy(a, Reaction::Scalar(&f), eps, &lap) - energy(b, Reaction::Scalar(&f), eps, &lap)) / dt;
            let rate: f64 = (0..grid.len())
                .map(|k| w[k] * ((b.comps[0][k] - a.comps[0][k]) / dt).powi(2))
                .sum();
            worst = worst.min(drop / rate);
        }
        println!("dissipation ratio {worst}");
        assert!(worst >= 0.9);
    }

    #[test]
    fn bounds_examples() {
        let f = make_quartic();
        let grid = Grid2D::square(32);
        let u0 = Field2D::sample(grid, 0.0, 1, |x, y| vec![(7.0 * x * y + 3.0 * x).sin()]);
        let tr = ac_evolve(&u0, &f, &EvolveConfig::new(0.05, 1e-4, 0.01, 2)).unwrap();
        let b = bounds_check(&tr, &u0, Reaction::Scalar(&f), 1e-10);
        assert!(b.holds && b.bound == 1.0, "{b:?}");

        let w = make_twowell();
        let u0 = Field2D::sample(grid, 0.0, 2, |x, y| {
            let a = 2.5 * (PI * x).cos() * (PI * y).cos();
            vec![a * (2.0 * y).cos(), a * (2.0 * y).sin()]
        });
        let tr = vac_evolve(&u0, &w, &EvolveConfig::new(0.1, 1e-4, 0.01, 2)).unwrap();
        let b = bounds_check(&tr, &u0, Reaction::Vector(&w), 1e-10);
        assert!(b.holds && (b.bound - 2.5).abs() < 1e-12, "{b:?}");
    }
}
