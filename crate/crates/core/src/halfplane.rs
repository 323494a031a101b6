//! Elliptic model problem on the half plane `{(R, H) : H > 0}`:
//! `−Δu + f″(θ₀(R))u = G` with `−∂_H u = g` at `H = 0`, truncated to
//! `[−L_R, L_R] × [0, L_H]` with homogeneous Dirichlet data on the far edges.
//!
//! The five-point system is solved exactly by separation of variables: the
//! `H` part (ghost-node Neumann at the bottom, Dirichlet at the top) is
//! diagonalized once, and every `H` mode leaves a (block) tridiagonal system
//! in `R`.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Result, SilError};
use crate::linalg::{BlockTridiag, SymTridiag};
use crate::numerics::{gauss_legendre, linear_fit};
use crate::operator1d::Symmetric;
use crate::profile::Profile1D;

/// Right-hand side `G(R, H)`, one value per component.
pub type FieldFn = Arc<dyn Fn(f64, f64) -> Vec<f64> + Send + Sync>;
/// Neumann datum `g(R)`.
pub type EdgeFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// Default cap on the condition number of the discrete operator.
pub const CONDITION_CAP: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalfPlaneGrid {
    pub l_r: f64,
    pub l_h: f64,
    pub h: f64,
}

impl HalfPlaneGrid {
    /// Intervals in `R` (rounded so that `h` divides `2 L_R`).
    pub fn intervals_r(&self) -> usize {
        (2.0 * self.l_r / self.h).round() as usize
    }

    pub fn intervals_h(&self) -> usize {
        (self.l_h / self.h).round() as usize
    }

    pub fn r(&self, i: usize) -> f64 {
        -self.l_r + i as f64 * self.hr()
    }

    pub fn hgt(&self, j: usize) -> f64 {
        j as f64 * self.hh()
    }

    pub fn hr(&self) -> f64 {
        2.0 * self.l_r / self.intervals_r() as f64
    }

    pub fn hh(&self) -> f64 {
        self.l_h / self.intervals_h() as f64
    }

    /// Nodes per `H` row, boundary included.
    pub fn nr(&self) -> usize {
        self.intervals_r() + 1
    }

    pub fn nh(&self) -> usize {
        self.intervals_h() + 1
    }

    fn validate(&self) -> Result<()> {
        let ok = self.l_r > 0.0 && self.l_h > 0.0 && self.h > 0.0;
        if !ok || self.intervals_r() < 4 || self.intervals_h() < 4 {
            return Err(SilError::InvalidInput(format!(
                "half-plane grid needs positive sizes and at least 4 intervals per direction: {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Clone)]
pub struct HalfPlaneProblem {
    pub grid: HalfPlaneGrid,
    pub profile: Profile1D,
    pub rhs: FieldFn,
    pub flux: EdgeFn,
}

impl std::fmt::Debug for HalfPlaneProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HalfPlaneProblem")
            .field("grid", &self.grid)
            .field("dim", &self.profile.dim)
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalfPlaneCompatibility {
    /// `∫∫ G·θ₀′ + ∫ g·θ₀′` with the grid trapezoid rule.
    pub value: f64,
    pub compatible: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Decomposition {
    /// `G̃(H_j) = (G(·, H_j), θ₀′)`.
    pub g_tilde: Vec<f64>,
    /// `(g, θ₀′)`.
    pub g_par: f64,
    /// `d₁ = ‖θ₀′‖²` with the same quadrature.
    pub d1: f64,
    /// Perpendicular parts on the grid, `G` row-major with `R` fastest.
    #[serde(skip)]
    pub rhs_perp: Vec<f64>,
    #[serde(skip)]
    pub flux_perp: Vec<f64>,
    /// Largest `|(G_⊥(·, H), θ₀′)|` over the rows.
    pub orthogonality_defect: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HalfPlaneSolution {
    pub grid: HalfPlaneGrid,
    pub dim: usize,
    /// Node-major values on the full grid, `R` fastest, boundary included.
    #[serde(skip)]
    pub u: Vec<f64>,
    /// Max-norm residual of the discrete equations, with the bottom-row
    /// component along the deflated mode removed.
    pub residual: f64,
    /// Max-norm of `−∂_H u − g` at `H = 0` by a one-sided second-order stencil.
    pub flux_error: f64,
    /// `−⟨Au − b, ψ̂ ⊗ 1⟩` on the grid, where `ψ̂` is the lowest `R`
    /// eigenvector scaled like θ₀′: the part of the data along the kernel
    /// mode that the solution does not absorb.
    pub kernel_projection: f64,
    /// `⟨b, ψ̂ ⊗ 1⟩`: the data projected on the discrete kernel mode.
    pub discrete_compatibility: f64,
    pub condition: f64,
    /// Decay rate in `H` of `max_R |u|` over `[L_H/2, 3L_H/4]`.
    pub decay_rate: f64,
}

impl HalfPlaneSolution {
    pub fn at(&self, i: usize, j: usize) -> &[f64] {
        let k = (j * self.grid.nr() + i) * self.dim;
        &self.u[k..k + self.dim]
    }
}

struct Sampled {
    /// θ₀′ at the `R` nodes, node-major.
    dtheta: Vec<f64>,
    rhs: Vec<f64>,
    flux: Vec<f64>,
    wr: Vec<f64>,
    wh: Vec<f64>,
}

fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    w[0] *= 0.5;
    w[n - 1] *= 0.5;
    w
}

/// Trapezoid weights on the unknown rows only: Dirichlet nodes get weight
/// zero, a Neumann end (`both == false` marks the bottom) gets `h/2`.
fn dirichlet_weights(n: usize, h: f64, both: bool) -> Vec<f64> {
    let mut w = vec![h; n];
    w[n - 1] = 0.0;
    w[0] = if both { 0.0 } else { 0.5 * h };
    w
}

fn sample(prob: &HalfPlaneProblem) -> Sampled {
    let g = &prob.grid;
    let (nr, nh, m) = (g.nr(), g.nh(), prob.profile.dim);
    let mut dtheta = Vec::with_capacity(nr * m);
    for i in 0..nr {
        dtheta.extend(prob.profile.eval(g.r(i)).iter().map(|j| j[1]));
    }
    let mut rhs = Vec::with_capacity(nr * nh * m);
    for j in 0..nh {
        for i in 0..nr {
            rhs.extend((prob.rhs)(g.r(i), g.hgt(j)));
        }
    }
    let mut flux = Vec::with_capacity(nr * m);
    for i in 0..nr {
        flux.extend((prob.flux)(g.r(i)));
    }
    Sampled {
        dtheta,
        rhs,
        flux,
        wr: dirichlet_weights(nr, g.hr(), true),
        wh: dirichlet_weights(nh, g.hh(), false),
    }
}

fn dot_row(s: &Sampled, row: &[f64], m: usize) -> f64 {
    s.wr
        .iter()
        .enumerate()
        .map(|(i, w)| w * (0..m).map(|c| row[i * m + c] * s.dtheta[i * m + c]).sum::<f64>())
        .sum()
}

/// Gauss–Legendre rule on `[−L_R, L_R]` with θ₀′ at the nodes.
struct RQuad {
    nodes: Vec<(f64, f64, Vec<f64>)>,
}

impl RQuad {
    fn new(prob: &HalfPlaneProblem) -> Self {
        let l = prob.grid.l_r;
        let (x, w) = gauss_legendre(16);
        let panels = (4.0 * l).ceil() as usize;
        let p = 2.0 * l / panels as f64;
        let mut nodes = Vec::with_capacity(panels * 16);
        for k in 0..panels {
            let a = -l + k as f64 * p;
            for (xi, wi) in x.iter().zip(&w) {
                let r = a + 0.5 * p * (xi + 1.0);
                let d = prob.profile.eval(r).iter().map(|j| j[1]).collect();
                nodes.push((r, 0.5 * p * wi, d));
            }
        }
        RQuad { nodes }
    }

    fn dot(&self, f: impl Fn(f64) -> Vec<f64>) -> f64 {
        self.nodes
            .iter()
            .map(|(r, w, d)| w * f(*r).iter().zip(d).map(|(a, b)| a * b).sum::<f64>())
            .sum()
    }

    fn d1(&self) -> f64 {
        self.nodes
            .iter()
            .map(|(_, w, d)| w * d.iter().map(|v| v * v).sum::<f64>())
            .sum()
    }
}

/// `∫_{H₀}^{L_H} k(Ĥ) G̃(Ĥ) dĤ` by Gauss–Legendre panels of width ≤ ½.
fn h_integral(h0: f64, top: f64, g_tilde: &dyn Fn(f64) -> f64, kernel: impl Fn(f64) -> f64) -> f64 {
    let (x, w) = gauss_legendre(20);
    let len = top - h0;
    if len <= 0.0 {
        return 0.0;
    }
    let panels = (2.0 * len).ceil().max(1.0) as usize;
    let p = len / panels as f64;
    let mut s = 0.0;
    for k in 0..panels {
        let lo = h0 + k as f64 * p;
        for (xi, wi) in x.iter().zip(&w) {
            let hh = lo + 0.5 * p * (xi + 1.0);
            s += 0.5 * p * wi * kernel(hh) * g_tilde(hh);
        }
    }
    s
}

/// Exponential fit `G̃ ≈ a e^{−κ(H − L_H)}` from the values at `L_H − 1`
/// and `L_H`; `None` when the data do not decay monotonically there.
fn tail_fit(g_tilde: &dyn Fn(f64) -> f64, top: f64) -> Option<(f64, f64)> {
    let (g1, g0) = (g_tilde(top), g_tilde(top - 1.0));
    if g1 == 0.0 || g0 == 0.0 || g1.signum() != g0.signum() || g1.abs() >= g0.abs() {
        return None;
    }
    Some((g1, (g0 / g1).ln()))
}

/// Tests `|∫∫G·θ₀′ + ∫g·θ₀′| ≤ 1e-8 (∫|G̃| + |∫g·θ₀′|) + 1e-12`, with
/// Gauss–Legendre quadrature of the data and an exponential tail in `H`.
pub fn compatibility(prob: &HalfPlaneProblem) -> HalfPlaneCompatibility {
    let q = RQuad::new(prob);
    let g_tilde = |h: f64| q.dot(|r| (prob.rhs)(r, h));
    let top = prob.grid.l_h;
    let mut value = h_integral(0.0, top, &g_tilde, |_| 1.0);
    let mut scale = h_integral(0.0, top, &|h| g_tilde(h).abs(), |_| 1.0);
    if let Some((a, k)) = tail_fit(&g_tilde, top) {
        value += a / k;
        scale += a.abs() / k;
    }
    let g_par = q.dot(|r| (prob.flux)(r));
    value += g_par;
    scale += g_par.abs();
    HalfPlaneCompatibility {
        value,
        compatible: value.abs() <= 1e-8 * scale + 1e-12,
    }
}

/// Splits the data into the part parallel to `θ₀′` and the remainder.
pub fn decompose(prob: &HalfPlaneProblem) -> Decomposition {
    let s = sample(prob);
    let g = &prob.grid;
    let (nr, nh, m) = (g.nr(), g.nh(), prob.profile.dim);
    let d1 = dot_row(&s, &s.dtheta, m);
    let mut rhs_perp = s.rhs.clone();
    let mut g_tilde = Vec::with_capacity(nh);
    let mut defect: f64 = 0.0;
    for j in 0..nh {
        let row = &mut rhs_perp[j * nr * m..(j + 1) * nr * m];
        let t = dot_row(&s, row, m);
        g_tilde.push(t);
        for (v, d) in row.iter_mut().zip(&s.dtheta) {
            *v -= t / d1 * d;
        }
        defect = defect.max(dot_row(&s, row, m).abs());
    }
    let g_par = dot_row(&s, &s.flux, m);
    let flux_perp = s
        .flux
        .iter()
        .zip(&s.dtheta)
        .map(|(v, d)| v - g_par / d1 * d)
        .collect();
    Decomposition {
        g_tilde,
        g_par,
        d1,
        rhs_perp,
        flux_perp,
        orthogonality_defect: defect,
    }
}

/// Closed form for parallel data `G = G̃(H)θ₀′/d₁`:
/// `u = −θ₀′(R)/d₁ ∫_H^∞ (Ĥ − H) G̃(Ĥ) dĤ`, the repeated integral written
/// as a single one. `G̃` is evaluated by Gauss–Legendre in `R`; the
/// `H` integral uses Gauss–Legendre panels up to `L_H` and an exponential
/// tail fitted at the top.
pub fn solve_parallel(prob: &HalfPlaneProblem) -> Result<HalfPlaneSolution> {
    let grid = prob.grid;
    grid.validate()?;
    let c = compatibility(prob);
    if !c.compatible {
        return Err(SilError::Incompatible { defect: c.value });
    }
    let m = prob.profile.dim;
    let q = RQuad::new(prob);
    let d1 = q.d1();
    let g_tilde = |h: f64| q.dot(|r| (prob.rhs)(r, h));
    let top = grid.l_h;
    let tail = tail_fit(&g_tilde, top);
    let nh = grid.nh();
    let amp: Vec<f64> = (0..nh)
        .map(|j| {
            let h0 = grid.hgt(j);
            let mut s = h_integral(h0, top, &g_tilde, |h| h - h0);
            if let Some((a, k)) = tail {
                s += a * ((top - h0) / k + 1.0 / (k * k));
            }
            -s / d1
        })
        .collect();
    let (nr, dim) = (grid.nr(), m);
    let mut u = vec![0.0; nr * nh * dim];
    for j in 0..nh {
        for i in 1..nr - 1 {
            let d = prob.profile.eval(grid.r(i));
            for c in 0..dim {
                u[(j * nr + i) * dim + c] = amp[j] * d[c][1];
            }
        }
    }
    for i in 0..nr * dim {
        u[(nh - 1) * nr * dim + i] = 0.0;
    }
    let s = sample(prob);
    let mut sol = HalfPlaneSolution {
        grid,
        dim,
        u,
        residual: 0.0,
        flux_error: 0.0,
        kernel_projection: 0.0,
        discrete_compatibility: 0.0,
        condition: f64::NAN,
        decay_rate: 0.0,
    };
    finish(&mut sol, prob, &s, None);
    Ok(sol)
}

/// Potential blocks `f″(θ₀)` / `D²W(θ⃗₀)` at the interior `R` nodes.
fn r_operator(prob: &HalfPlaneProblem) -> Symmetric {
    let g = &prob.grid;
    let (nr, m) = (g.nr(), prob.profile.dim);
    let hr2 = 1.0 / (g.hr() * g.hr());
    let inner = nr - 2;
    let pot: Vec<Vec<f64>> = (1..nr - 1)
        .map(|i| {
            let u: Vec<f64> = prob.profile.eval(g.r(i)).iter().map(|j| j[0]).collect();
            prob.profile.linearization_at(&u)
        })
        .collect();
    if m == 1 {
        let d = pot.iter().map(|q| 2.0 * hr2 + q[0]).collect();
        Symmetric::Scalar(SymTridiag::new(d, vec![-hr2; inner - 1]))
    } else {
        let diag = pot
            .iter()
            .map(|q| {
                let q = DMatrix::from_row_slice(m, m, q);
                (&q + q.transpose()) * 0.5 + DMatrix::identity(m, m) * (2.0 * hr2)
            })
            .collect();
        let off = (0..inner - 1).map(|_| DMatrix::identity(m, m) * -hr2).collect();
        Symmetric::Block(BlockTridiag { m, diag, off })
    }
}

/// Symmetrized `H` operator on the rows `0..nh−1` (top row is Dirichlet):
/// eigenvalues and eigenvectors orthonormal in the weighted inner product
/// with weight `½` on row 0.
fn h_modes(grid: &HalfPlaneGrid) -> (Vec<f64>, DMatrix<f64>, Vec<f64>) {
    let n = grid.nh() - 1;
    let hh2 = 1.0 / (grid.hh() * grid.hh());
    let w: Vec<f64> = (0..n).map(|j| if j == 0 { 0.5 } else { 1.0 }).collect();
    let mut a = DMatrix::zeros(n, n);
    for j in 0..n {
        a[(j, j)] = 2.0 * hh2;
    }
    for j in 0..n - 1 {
        // Row 0 of the unsymmetrized matrix is (2, −2)/h².
        let upper = if j == 0 { -2.0 * hh2 } else { -hh2 };
        let v = (w[j] / w[j + 1]).sqrt() * upper;
        a[(j, j + 1)] = v;
        a[(j + 1, j)] = v;
    }
    let eig = SymmetricEigen::new(a);
    (eig.eigenvalues.as_slice().to_vec(), eig.eigenvectors, w)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullSolveOptions {
    pub condition_cap: f64,
    /// Solve the deflated system even when the data are incompatible.
    pub allow_incompatible: bool,
}

impl Default for FullSolveOptions {
    fn default() -> Self {
        FullSolveOptions {
            condition_cap: CONDITION_CAP,
            allow_incompatible: false,
        }
    }
}

/// Five-point solve of the truncated problem. The component along the
/// lowest `R` eigenvector is marched down from the top boundary; the rest is
/// solved mode by mode in `H`. Fails with `IllConditioned` when the
/// condition estimate of the deflated operator exceeds the cap.
pub fn solve_full_with(prob: &HalfPlaneProblem, opts: FullSolveOptions) -> Result<HalfPlaneSolution> {
    let grid = prob.grid;
    grid.validate()?;
    if !opts.allow_incompatible {
        let c = compatibility(prob);
        if !c.compatible {
            return Err(SilError::Incompatible { defect: c.value });
        }
    }
    let cap = opts.condition_cap;
    let s = sample(prob);
    let m = prob.profile.dim;
    let (nr, nh) = (grid.nr(), grid.nh());
    let rop = r_operator(prob);
    let (mu, vecs, w) = h_modes(&grid);
    let nrow = nh - 1;
    let inner = nr - 2;
    let row = inner * m;
    let hh = grid.hh();
    // Near-kernel direction in R: the lowest eigenvector ψ₁ ≈ θ₀′.
    let nu1 = rop.eigenvalue(0);
    let nu2 = rop.eigenvalue(1);
    let psi = rop.eigenvector(nu1);
    let nrm = psi.iter().map(|v| v * v).sum::<f64>().sqrt();
    let psi: Vec<f64> = psi.iter().map(|v| v / nrm).collect();
    let mu_min = mu.iter().cloned().fold(f64::INFINITY, f64::min);
    let mu_max = mu.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lam_min = nu2 + mu_min;
    let lam_max = rop.eigenvalue(row - 1) + mu_max;
    let condition = if lam_min > 0.0 { lam_max / lam_min } else { f64::INFINITY };
    if condition > cap {
        return Err(SilError::IllConditioned {
            estimate: condition,
            cap,
        });
    }
    // Data rows in the original scaling; row 0 carries 2g/h from the ghost
    // node.
    let mut data = vec![0.0; nrow * row];
    for j in 0..nrow {
        for i in 1..nr - 1 {
            for c in 0..m {
                let mut v = s.rhs[(j * nr + i) * m + c];
                if j == 0 {
                    v += 2.0 * s.flux[i * m + c] / hh;
                }
                data[j * row + (i - 1) * m + c] = v;
            }
        }
    }
    let project = |v: &mut [f64]| {
        let c: f64 = v.iter().zip(&psi).map(|(a, b)| a * b).sum();
        for (a, b) in v.iter_mut().zip(&psi) {
            *a -= c * b;
        }
        c
    };
    // Component along ψ₁: the H recursion is marched down from the top
    // with zero value and zero slope there, the conditions a decaying
    // solution satisfies. The bottom row is left out; its residual is the
    // incompatibility of the data.
    let mut b = data.clone();
    let mut tilde = vec![0.0; nrow];
    for j in 0..nrow {
        tilde[j] = project(&mut b[j * row..(j + 1) * row]);
    }
    let mut amp = vec![0.0; nrow + 1];
    for j in (1..nrow).rev() {
        amp[j - 1] = (2.0 + nu1 * hh * hh) * amp[j] - amp[j + 1] - hh * hh * tilde[j];
    }
    // Remaining components: symmetrize with √w, diagonalize in H, solve
    // the deflated R systems.
    for j in 0..nrow {
        let sw = w[j].sqrt();
        for v in b[j * row..(j + 1) * row].iter_mut() {
            *v *= sw;
        }
    }
    let mut x = vec![0.0; b.len()];
    let mut bk = vec![0.0; row];
    for k in 0..nrow {
        bk.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..nrow {
            let phi = vecs[(j, k)];
            for (t, v) in bk.iter_mut().zip(&b[j * row..(j + 1) * row]) {
                *t += phi * v;
            }
        }
        project(&mut bk);
        let mut uk = rop
            .solve_shifted(-mu[k], &bk)
            .ok_or_else(|| SilError::SingularSolve(format!("R system of H mode {k}")))?;
        project(&mut uk);
        for j in 0..nrow {
            let phi = vecs[(j, k)];
            for (t, v) in x[j * row..(j + 1) * row].iter_mut().zip(&uk) {
                *t += phi * v;
            }
        }
    }
    let mut u = vec![0.0; nr * nh * m];
    for j in 0..nrow {
        let sw = w[j].sqrt();
        for i in 1..nr - 1 {
            for c in 0..m {
                let k = (i - 1) * m + c;
                u[(j * nr + i) * m + c] = x[j * row + k] / sw + amp[j] * psi[k];
            }
        }
    }
    let mut sol = HalfPlaneSolution {
        grid,
        dim: m,
        u,
        residual: 0.0,
        flux_error: 0.0,
        kernel_projection: 0.0,
        discrete_compatibility: 0.0,
        condition,
        decay_rate: 0.0,
    };
    finish(&mut sol, prob, &s, Some(&psi));
    Ok(sol)
}

pub fn solve_full(prob: &HalfPlaneProblem) -> Result<HalfPlaneSolution> {
    solve_full_with(prob, FullSolveOptions::default())
}

/// Fills residual, flux error and decay rate.
fn finish(sol: &mut HalfPlaneSolution, prob: &HalfPlaneProblem, s: &Sampled, kernel: Option<&[f64]>) {
    let grid = sol.grid;
    let (nr, nh, m) = (grid.nr(), grid.nh(), sol.dim);
    let (hr2, hh2) = (1.0 / grid.hr().powi(2), 1.0 / grid.hh().powi(2));
    let at = |i: usize, j: usize, c: usize| sol.u[(j * nr + i) * m + c];
    let inner = nr - 2;
    let mut r = vec![0.0; (nh - 1) * inner * m];
    for j in 0..nh - 1 {
        for i in 1..nr - 1 {
            let z: Vec<f64> = prob.profile.eval(grid.r(i)).iter().map(|v| v[0]).collect();
            let q = prob.profile.linearization_at(&z);
            for c in 0..m {
                let below = if j == 0 {
                    at(i, 1, c) + 2.0 * grid.hh() * s.flux[i * m + c]
                } else {
                    at(i, j - 1, c)
                };
                let lap = (at(i - 1, j, c) - 2.0 * at(i, j, c) + at(i + 1, j, c)) * hr2
                    + (below - 2.0 * at(i, j, c) + at(i, j + 1, c)) * hh2;
                let qu: f64 = (0..m).map(|k| q[c * m + k] * at(i, j, k)).sum();
                r[(j * inner + i - 1) * m + c] = -lap + qu - s.rhs[(j * nr + i) * m + c];
            }
        }
    }
    // Kernel mode in R: ψ₁ rescaled to the grid norm and sign of θ₀′, or
    // θ₀′ itself when no eigenvector is supplied.
    let mode: Vec<f64> = match kernel {
        Some(psi) => {
            let t: f64 = (1..nr - 1)
                .flat_map(|i| (0..m).map(move |c| (i, c)))
                .map(|(i, c)| s.dtheta[i * m + c] * psi[(i - 1) * m + c])
                .sum();
            let tn: f64 = (1..nr - 1)
                .flat_map(|i| (0..m).map(move |c| (i, c)))
                .map(|(i, c)| s.dtheta[i * m + c].powi(2))
                .sum();
            psi.iter().map(|v| v * tn.sqrt() * t.signum()).collect()
        }
        None => s.dtheta[m..(nr - 1) * m].to_vec(),
    };
    let (mut kp, mut dc) = (0.0, 0.0);
    for j in 0..nh - 1 {
        for i in 1..nr - 1 {
            for c in 0..m {
                let k = (j * inner + i - 1) * m + c;
                let wgt = s.wh[j] * s.wr[i] * mode[(i - 1) * m + c];
                kp -= wgt * r[k];
                let mut b = s.rhs[(j * nr + i) * m + c];
                if j == 0 {
                    b += 2.0 * s.flux[i * m + c] / grid.hh();
                }
                dc += wgt * b;
            }
        }
    }
    sol.discrete_compatibility = dc;
    if let Some(psi) = kernel {
        let row0 = &mut r[..inner * m];
        let c: f64 = row0.iter().zip(psi).map(|(a, b)| a * b).sum();
        for (a, b) in row0.iter_mut().zip(psi) {
            *a -= c * b;
        }
    }
    let res = r.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    sol.kernel_projection = kp;
    let mut flux: f64 = 0.0;
    for i in 1..nr - 1 {
        for c in 0..m {
            let d = (-3.0 * at(i, 0, c) + 4.0 * at(i, 1, c) - at(i, 2, c)) / (2.0 * grid.hh());
            flux = flux.max((-d - s.flux[i * m + c]).abs());
        }
    }
    let (j0, j1) = (nh / 2, 3 * nh / 4);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for j in j0..=j1 {
        let mx = (0..nr * m)
            .map(|k| sol.u[j * nr * m + k].abs())
            .fold(0.0, f64::max);
        if mx > 0.0 {
            xs.push(grid.hgt(j));
            ys.push(mx.ln());
        }
    }
    sol.decay_rate = if xs.len() >= 2 {
        linear_fit(&xs, &ys).map(|f| -f.slope).unwrap_or(0.0)
    } else {
        f64::INFINITY
    };
    sol.residual = res;
    sol.flux_error = flux;
}

/// Discrete relative L² distance between a solution and a reference
/// function on the grid (trapezoid weights).
pub fn relative_l2_error(sol: &HalfPlaneSolution, exact: impl Fn(f64, f64) -> Vec<f64>) -> f64 {
    let g = sol.grid;
    let (nr, nh, m) = (g.nr(), g.nh(), sol.dim);
    let (wr, wh) = (trapezoid_weights(nr, g.hr()), trapezoid_weights(nh, g.hh()));
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..nh {
        for i in 0..nr {
            let e = exact(g.r(i), g.hgt(j));
            for c in 0..m {
                let d = sol.u[(j * nr + i) * m + c] - e[c];
                num += wr[i] * wh[j] * d * d;
                den += wr[i] * wh[j] * e[c] * e[c];
            }
        }
    }
    (num / den.max(f64::MIN_POSITIVE)).sqrt()
}

/// The manufactured case `u = e^{−H}θ₀′(R)`: `G = −e^{−H}θ₀′`, `g = θ₀′`.
pub fn manufactured_problem(profile: &Profile1D, grid: HalfPlaneGrid) -> HalfPlaneProblem {
    let p1 = profile.clone();
    let p2 = profile.clone();
    HalfPlaneProblem {
        grid,
        profile: profile.clone(),
        rhs: Arc::new(move |r, h| p1.eval(r).iter().map(|j| -(-h).exp() * j[1]).collect()),
        flux: Arc::new(move |r| p2.eval(r).iter().map(|j| j[1]).collect()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{make_quartic, make_twowell};
    use crate::profile::{solve_scalar_profile, solve_vector_profile};

    fn quartic() -> Profile1D {
        solve_scalar_profile(&make_quartic(), 12.0, 4097).unwrap()
    }

    fn grid(h: f64) -> HalfPlaneGrid {
        HalfPlaneGrid { l_r: 10.0, l_h: 20.0, h }
    }

    fn exact(p: &Profile1D) -> impl Fn(f64, f64) -> Vec<f64> + '_ {
        move |r, h| p.eval(r).iter().map(|j| (-h).exp() * j[1]).collect()
    }

    #[test]
    fn compatibility_and_decomposition() {
        let p = quartic();
        let prob = manufactured_problem(&p, grid(0.1));
        let c = compatibility(&prob);
        assert!(c.compatible, "{}", c.value);
        let d = decompose(&prob);
        assert!(d.orthogonality_defect < 1e-12);
        assert!((d.g_tilde[0] + d.d1).abs() < 1e-12);
        assert!(d.rhs_perp.iter().all(|v| v.abs() < 1e-12));
        let mut bad = prob.clone();
        bad.rhs = Arc::new(|_, _| vec![0.0]);
        let c = compatibility(&bad);
        assert!(!c.compatible && (c.value - 4.0 / 3.0).abs() < 1e-3);
        assert!(matches!(solve_full(&bad), Err(SilError::Incompatible { .. })));
    }

    #[test]
    fn manufactured_solution_converges() {
        let p = quartic();
        let mut errs = Vec::new();
        for h in [0.2, 0.1] {
            let sol = solve_full(&manufactured_problem(&p, grid(h))).unwrap();
            assert!(sol.residual < 1e-9, "{}", sol.residual);
            errs.push(relative_l2_error(&sol, exact(&p)));
        }
        let order = (errs[0] / errs[1]).log2();
        assert!((1.7..=2.3).contains(&order), "{errs:?} {order}");
    }

    #[test]
    fn parallel_closed_form() {
        let p = quartic();
        let sol = solve_parallel(&manufactured_problem(&p, grid(0.2))).unwrap();
        let g = sol.grid;
        let mut worst: f64 = 0.0;
        for j in 0..g.nh() - 1 {
            for i in 1..g.nr() - 1 {
                let e = exact(&p)(g.r(i), g.hgt(j))[0];
                worst = worst.max((sol.at(i, j)[0] - e).abs());
            }
        }
        assert!(worst < 1e-8, "{worst}");
    }

    #[test]
    fn vector_decoupled_data() {
        let w = make_twowell();
        let p = solve_vector_profile(&w, 12.0, 2049).unwrap();
        let prob = HalfPlaneProblem {
            grid: grid(0.2),
            profile: p,
            rhs: Arc::new(|r, h| vec![0.0, (-h - r * r).exp()]),
            flux: Arc::new(|_| vec![0.0, 0.0]),
        };
        let sol = solve_full(&prob).unwrap();
        assert!(sol.kernel_projection.abs() < 1e-12);
        assert!(sol.residual < 1e-9);
        let g = sol.grid;
        let first: f64 = (0..g.nr() * g.nh()).map(|k| sol.u[2 * k].abs()).fold(0.0, f64::max);
        assert!(first < 1e-12);
    }

    #[test]
    fn kernel_component_matches_discrete_compatibility() {
        let p = quartic();
        let prob = HalfPlaneProblem {
            grid: grid(0.2),
            profile: p.clone(),
            rhs: Arc::new(|_, _| vec![0.0]),
            flux: Arc::new(|r| vec![1.0 - r.tanh().powi(2)]),
        };
        let opts = FullSolveOptions {
            allow_incompatible: true,
            ..FullSolveOptions::default()
        };
        let sol = solve_full_with(&prob, opts).unwrap();
        assert!(
            (sol.kernel_projection - sol.discrete_compatibility).abs() < 1e-8,
            "{} {}",
            sol.kernel_projection,
            sol.discrete_compatibility
        );
        assert!((sol.kernel_projection - compatibility(&prob).value).abs() < 1e-4);
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let p = quartic();
        let prob = HalfPlaneProblem {
            grid: grid(0.2),
            profile: p,
            rhs: Arc::new(|_, _| vec![0.0]),
            flux: Arc::new(|_| vec![0.0]),
        };
        let sol = solve_full(&prob).unwrap();
        assert!(sol.u.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn full_and_parallel_solvers_agree() {
        let p = quartic();
        let prob = manufactured_problem(&p, grid(0.1));
        let full = solve_full(&prob).unwrap();
        let par = solve_parallel(&prob).unwrap();
        let g = full.grid;
        let mut diff: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for j in 0..g.nh() {
            for i in 0..g.nr() {
                diff = diff.max((full.at(i, j)[0] - par.at(i, j)[0]).abs());
                scale = scale.max(par.at(i, j)[0].abs());
            }
        }
        assert!(diff < 1e-2 * scale, "{diff} {scale}");
        assert!(full.decay_rate > 0.5, "{}", full.decay_rate);
    }

    #[test]
    fn decomposition_splits_flux() {
        let p = quartic();
        // g = θ′ + θ″: the first part is parallel with weight d₁, the second
        // is orthogonal to θ′ by parity.
        let prob = HalfPlaneProblem {
            grid: grid(0.1),
            profile: p,
            rhs: Arc::new(|_, _| vec![0.0]),
            flux: Arc::new(|r| {
                let s = 1.0 - r.tanh().powi(2);
                vec![s - 2.0 * r.tanh() * s]
            }),
        };
        let d = decompose(&prob);
        assert!((d.g_par - d.d1).abs() < 1e-6, "{} {}", d.g_par, d.d1);
        assert!((d.d1 - 4.0 / 3.0).abs() < 1e-6);
        assert!(d.orthogonality_defect < 1e-10);
        assert!(d.g_tilde.iter().all(|v| v.abs() < 1e-12));
    }
}
