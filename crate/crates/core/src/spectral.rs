//! Neumann spectra of the linearized operator on the stretched interval
//! `(−δ̃/ε, δ̃/ε)`, with optional weight and perturbed profile, and the
//! smallest eigenvalue of the two-dimensional linearization.

use serde::Serialize;

use crate::error::{Result, SilError};
use crate::linalg::{BandCholesky, BandMatrix, SymTridiag};
use crate::grid::{edge_weights, Grid2D};
use crate::linode::kernel_dimension;
use crate::numerics::simpson_weights;
use crate::operator1d::Operator1D;
use crate::potentials::{Check, ScalarFn};
use crate::profile::{Profile1D, ProfilePotential};

pub const MIN_POINTS_PER_UNIT: usize = 20;

/// Resolution of the interval eigensolves. Eigenvalues and the eigenvector
/// defect are Richardson-extrapolated over `levels` successive halvings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralGrid {
    pub points_per_unit: usize,
    pub levels: usize,
}

impl Default for SpectralGrid {
    fn default() -> Self {
        SpectralGrid {
            points_per_unit: 64,
            levels: 2,
        }
    }
}

/// Weight `J(r)` of the perturbed operator `−J⁻¹(J w′)′ + q`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum WeightSpec {
    #[default]
    Unit,
    /// `J(r) = 1 + slope·r`.
    Affine { slope: f64 },
}

impl WeightSpec {
    pub fn at(&self, r: f64) -> f64 {
        match self {
            WeightSpec::Unit => 1.0,
            WeightSpec::Affine { slope } => 1.0 + slope * r,
        }
    }
}

/// Perturbed profile `θ₀(z) + ε p θ₁(z) + ε² q`.
#[derive(Clone, Default)]
pub struct Perturbation {
    pub p: f64,
    pub theta1: Option<ScalarFn>,
    pub q: f64,
}

impl std::fmt::Debug for Perturbation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Perturbation")
            .field("p", &self.p)
            .field("theta1", &self.theta1.is_some())
            .field("q", &self.q)
            .finish()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub eps: f64,
    pub delta: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub residual1: f64,
    pub residual2: f64,
    /// `‖θ₀′‖⁻¹` on the interval.
    pub beta_eps: f64,
    /// Weighted norm of `Ψ¹ − J(0)^{-1/2} β_ε θ₀′`.
    pub psi_defect: f64,
    /// Weighted norm of the derivative of the same difference.
    pub psi_grad_defect: f64,
    pub min_psi: f64,
    /// Sign applied to the computed eigenvector so that it correlates
    /// positively with `θ₀′`.
    pub sign_selector: f64,
    /// Intervals of the finest grid.
    pub intervals: usize,
    pub checks: Vec<Check>,
    #[serde(skip)]
    pub z: Vec<f64>,
    #[serde(skip)]
    pub psi: Vec<f64>,
}

impl SpectrumReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// `ν₂ = min{ν₁/2, min f″(±1)/4}`.
pub fn nu2(nu1: f64, min_well_curvature: f64) -> f64 {
    (0.5 * nu1).min(0.25 * min_well_curvature)
}

/// Neville-style Richardson table for a quantity with an `h²` expansion,
/// `values[k]` computed at `h/2^k`.
pub fn richardson(values: &[f64]) -> f64 {
    let mut t = values.to_vec();
    for k in 1..t.len() {
        let f = 4f64.powi(k as i32);
        for i in (k..t.len()).rev() {
            t[i] += (t[i] - t[i - 1]) / (f - 1.0);
        }
    }
    *t.last().unwrap()
}

fn richardson_vectors(vectors: &[Vec<f64>]) -> Vec<f64> {
    (0..vectors[0].len())
        .map(|i| richardson(&vectors.iter().map(|v| v[i]).collect::<Vec<_>>()))
        .collect()
}

/// Two smallest Neumann eigenpairs of `−d²/dz² + f″(θ₀)` on `(−δ̃/ε, δ̃/ε)`.
pub fn eig_unperturbed(
    p: &Profile1D,
    eps: f64,
    delta: f64,
    grid: SpectralGrid,
) -> Result<SpectrumReport> {
    eig_perturbed(p, eps, delta, WeightSpec::Unit, &Perturbation::default(), grid)
}

/// Eigenpairs of the weighted operator `−J⁻¹(J w′)′ + f″(φ_ε)` with
/// `J = J(εz)` and `φ_ε = θ₀ + εpθ₁ + ε²q`.
pub fn eig_perturbed(
    p: &Profile1D,
    eps: f64,
    delta: f64,
    weight: WeightSpec,
    pert: &Perturbation,
    grid: SpectralGrid,
) -> Result<SpectrumReport> {
    let f = match &p.potential {
        ProfilePotential::Scalar(f) => f.clone(),
        ProfilePotential::Vector(_) => {
            return Err(SilError::InvalidInput(
                "scalar eigensolve on a vector profile".into(),
            ))
        }
    };
    if let Some(t1) = &pert.theta1 {
        let defect = theta1_defect(p, t1);
        if defect > 1e-6 {
            return Err(SilError::PerturbationOutOfClass { defect });
        }
    }
    let t1 = pert.theta1.clone();
    let (pp, q) = (pert.p, pert.q);
    let potential = move |z: f64| -> Vec<f64> {
        let mut u = p.eval_scalar(z)[0];
        if let Some(t1) = &t1 {
            u += eps * pp * t1(z);
        }
        u += eps * eps * q;
        vec![f.d2(u)]
    };
    interval_spectrum(p, eps, delta, weight, grid, &potential)
}

/// Block eigensolve for the vector linearization `−d²/dz² + D²W(θ⃗₀)`.
pub fn eig_vector(
    p: &Profile1D,
    eps: f64,
    delta: f64,
    weight: WeightSpec,
    grid: SpectralGrid,
) -> Result<SpectrumReport> {
    let w = match &p.potential {
        ProfilePotential::Vector(w) => w.clone(),
        ProfilePotential::Scalar(_) => {
            return Err(SilError::InvalidInput(
                "vector eigensolve on a scalar profile".into(),
            ))
        }
    };
    let k = kernel_dimension(p, None);
    if k.dimension != 1 {
        return Err(SilError::KernelNotSimple { dim: k.dimension });
    }
    let m = p.dim;
    let potential = move |z: f64| -> Vec<f64> {
        let u: Vec<f64> = p.eval(z).iter().map(|j| j[0]).collect();
        let mut h = vec![0.0; m * m];
        (w.hess)(&u, &mut h);
        h
    };
    interval_spectrum(p, eps, delta, weight, grid, &potential)
}

/// Relative size of `∫ f‴(θ₀) θ₁ (θ₀′)²` on the profile grid.
pub fn theta1_defect(p: &Profile1D, theta1: &ScalarFn) -> f64 {
    let f = match &p.potential {
        ProfilePotential::Scalar(f) => f,
        ProfilePotential::Vector(_) => return f64::INFINITY,
    };
    let w = simpson_weights(p.len(), p.h);
    let (mut s, mut na, mut nb) = (0.0, 0.0, 0.0);
    for i in 0..p.len() {
        let a = f.d3(p.values[i]) * p.deriv[i] * p.deriv[i];
        let b = theta1(p.z[i]);
        s += w[i] * a * b;
        na += w[i] * a * a;
        nb += w[i] * b * b;
    }
    let scale = (na * nb).sqrt();
    if scale == 0.0 {
        0.0
    } else {
        s.abs() / scale
    }
}

fn interval_spectrum(
    p: &Profile1D,
    eps: f64,
    delta: f64,
    weight: WeightSpec,
    grid: SpectralGrid,
    potential: &dyn Fn(f64) -> Vec<f64>,
) -> Result<SpectrumReport> {
    if !(eps > 0.0 && eps.is_finite()) || !(delta > 0.0 && delta.is_finite()) {
        return Err(SilError::InvalidInput(format!(
            "need eps > 0 and delta > 0, got {eps}, {delta}"
        )));
    }
    if grid.points_per_unit < MIN_POINTS_PER_UNIT {
        return Err(SilError::GridTooCoarse {
            per_unit: grid.points_per_unit as f64,
            min: MIN_POINTS_PER_UNIT as f64,
        });
    }
    let m = p.dim;
    let ell = delta / eps;
    let coarse = ((2.0 * ell * grid.points_per_unit as f64).ceil() as usize).max(4);
    let levels = grid.levels.max(1);
    let mut lam1 = Vec::with_capacity(levels);
    let mut lam2 = Vec::with_capacity(levels);
    let mut defects = Vec::with_capacity(levels);
    let mut finest = None;
    let mut coarse_op = None;
    for level in 0..levels {
        let stride = 1usize << level;
        let intervals = coarse * stride;
        let h = 2.0 * ell / intervals as f64;
        let z: Vec<f64> = (0..=intervals).map(|i| -ell + i as f64 * h).collect();
        let mut pot = Vec::with_capacity(z.len() * m * m);
        let mut dtheta = Vec::with_capacity(z.len() * m);
        for &zi in &z {
            pot.extend(potential(zi));
            dtheta.extend(p.eval(zi).iter().map(|j| j[1]));
        }
        let wn: Vec<f64> = z.iter().map(|zi| weight.at(eps * zi)).collect();
        let wh: Vec<f64> = z[..intervals]
            .iter()
            .map(|zi| weight.at(eps * (zi + 0.5 * h)))
            .collect();
        if wn.iter().chain(&wh).any(|v| !(*v > 0.0)) {
            return Err(SilError::InvalidInput(
                "weight must stay positive on the interval".into(),
            ));
        }
        let op = Operator1D::weighted(z, m, pot, wn, wh);
        let mut pairs = op.eigenpairs(2);
        let sign = if op.inner(&pairs[0].vector, &dtheta) < 0.0 {
            -1.0
        } else {
            1.0
        };
        for v in pairs[0].vector.iter_mut() {
            *v *= sign;
        }
        // Unweighted trapezoid norm of θ₀′.
        let tn: f64 = (0..op.n)
            .map(|i| {
                let s: f64 = (0..m).map(|c| dtheta[i * m + c].powi(2)).sum();
                let w = if i == 0 || i == op.n - 1 { 0.5 } else { 1.0 };
                w * h * s
            })
            .sum();
        let beta = 1.0 / tn.sqrt();
        let scale = beta / weight.at(0.0).sqrt();
        let diff: Vec<f64> = pairs[0]
            .vector
            .iter()
            .zip(&dtheta)
            .map(|(psi, t)| psi - scale * t)
            .collect();
        // Restrict to the coarse nodes for extrapolation.
        let restricted: Vec<f64> = (0..=coarse)
            .flat_map(|i| diff[i * stride * m..(i * stride + 1) * m].to_vec())
            .collect();
        lam1.push(pairs[0].value);
        lam2.push(pairs[1].value);
        defects.push(restricted);
        if level == 0 {
            coarse_op = Some(op);
        }
        finest = Some((pairs, beta, sign));
    }
    let coarse_op = coarse_op.unwrap();
    let (pairs, beta, sign) = finest.unwrap();
    let d = richardson_vectors(&defects);
    let psi_defect = coarse_op.norm(&d);
    let hc = coarse_op.h;
    let mut g = 0.0;
    for i in 0..coarse {
        for c in 0..m {
            let dd = (d[(i + 1) * m + c] - d[i * m + c]) / hc;
            g += hc * coarse_op.weight_half[i] * dd * dd;
        }
    }
    let lambda1 = richardson(&lam1);
    let lambda2 = richardson(&lam2);
    let psi = pairs[0].vector.clone();
    let min_psi = psi.iter().cloned().fold(f64::INFINITY, f64::min);
    let intervals = coarse << (levels - 1);
    let hf = 2.0 * ell / intervals as f64;
    let z = (0..=intervals).map(|i| -ell + i as f64 * hf).collect();
    let mut checks = vec![Check {
        name: "ordered".into(),
        pass: lambda1 <= lambda2,
        slack: lambda2 - lambda1,
    }];
    if m == 1 {
        checks.push(Check {
            name: "ground_state_signed".into(),
            pass: min_psi > 0.0,
            slack: min_psi,
        });
    }
    Ok(SpectrumReport {
        eps,
        delta,
        lambda1,
        lambda2,
        residual1: pairs[0].residual,
        residual2: pairs[1].residual,
        beta_eps: beta,
        psi_defect,
        psi_grad_defect: g.sqrt(),
        min_psi,
        sign_selector: sign,
        intervals,
        checks,
        z,
        psi,
    })
}

/// Options of the two-dimensional eigenprobe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloorOptions {
    pub max_iterations: usize,
    /// Target for `‖(L − λ)v‖ / ‖v‖`.
    pub tol: f64,
    pub lanczos_steps: usize,
}

impl Default for FloorOptions {
    fn default() -> Self {
        FloorOptions {
            max_iterations: 400,
            tol: 1e-8,
            lanczos_steps: 60,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FloorReport {
    pub lambda_min: f64,
    pub residual: f64,
    pub iterations: usize,
    pub factorizations: usize,
    pub shift: f64,
    /// Eigenvector at the grid nodes (component-interleaved), normalized
    /// in the trapezoid inner product.
    #[serde(skip)]
    pub vector: Vec<f64>,
}

/// Coefficients of `−h² u″` at node `i` of a vertex grid with `points`
/// nodes, fourth-order stencil, even reflection across both ends.
fn stencil_row(i: usize, points: usize) -> Vec<(usize, f64)> {
    const C: [f64; 5] = [1.0 / 12.0, -16.0 / 12.0, 30.0 / 12.0, -16.0 / 12.0, 1.0 / 12.0];
    let last = (points - 1) as i64;
    let mut row: Vec<(usize, f64)> = Vec::with_capacity(5);
    for (k, c) in C.iter().enumerate() {
        let mut j = i as i64 + k as i64 - 2;
        if j < 0 {
            j = -j;
        }
        if j > last {
            j = 2 * last - j;
        }
        let j = j as usize;
        match row.iter_mut().find(|e| e.0 == j) {
            Some(e) => e.1 += c,
            None => row.push((j, *c)),
        }
    }
    row
}

/// The symmetrized operator `W^{1/2}(−Δ_h + Q)W^{-1/2}` in band storage;
/// `W` holds the trapezoid weights. `potential` is node-major with an
/// `m × m` block per node.
pub fn floor_operator(grid: &Grid2D, m: usize, potential: &[f64]) -> Result<BandMatrix> {
    let (px, py) = (grid.px(), grid.py());
    if px < 3 || py < 3 {
        return Err(SilError::InvalidInput("eigenprobe needs at least 3×3 nodes".into()));
    }
    if potential.len() != grid.len() * m * m {
        return Err(SilError::InvalidInput(format!(
            "potential has {} entries, expected {}",
            potential.len(),
            grid.len() * m * m
        )));
    }
    let (wx, wy) = (edge_weights(px), edge_weights(py));
    let (ix2, iy2) = (1.0 / (grid.hx() * grid.hx()), 1.0 / (grid.hy() * grid.hy()));
    let rows_x: Vec<_> = (0..px).map(|i| stencil_row(i, px)).collect();
    let rows_y: Vec<_> = (0..py).map(|j| stencil_row(j, py)).collect();
    let bw = (2 * px + 1) * m;
    let mut a = BandMatrix::zeros(grid.len() * m, bw);
    for j in 0..py {
        for i in 0..px {
            let node = grid.index(i, j);
            for (i2, c) in &rows_x[i] {
                let other = grid.index(*i2, j);
                if other <= node {
                    let v = c * ix2 * (wx[i] / wx[*i2]).sqrt();
                    for comp in 0..m {
                        a.add(node * m + comp, other * m + comp, v);
                    }
                }
            }
            for (j2, c) in &rows_y[j] {
                let other = grid.index(i, *j2);
                if other <= node {
                    let v = c * iy2 * (wy[j] / wy[*j2]).sqrt();
                    for comp in 0..m {
                        a.add(node * m + comp, other * m + comp, v);
                    }
                }
            }
            let q = &potential[node * m * m..(node + 1) * m * m];
            for r in 0..m {
                for c in 0..=r {
                    a.add(node * m + r, node * m + c, 0.5 * (q[r * m + c] + q[c * m + r]));
                }
            }
        }
    }
    Ok(a)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    for x in v.iter_mut() {
        *x /= n;
    }
    n
}

/// Lowest Ritz pair from a fully reorthogonalized Lanczos run with a
/// deterministic start vector; returns `(θ, x, residual bound)`.
fn lanczos_lowest(a: &BandMatrix, steps: usize) -> (f64, Vec<f64>, f64) {
    let n = a.n;
    let steps = steps.min(n).max(1);
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.25 * (0.7 * i as f64).cos()).collect();
    normalize(&mut v);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(steps);
    let mut alpha = Vec::with_capacity(steps);
    let mut beta: Vec<f64> = Vec::with_capacity(steps);
    let mut last_beta = 0.0;
    for k in 0..steps {
        let mut w = a.apply(&v);
        let al = dot(&w, &v);
        alpha.push(al);
        basis.push(v.clone());
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                for (x, y) in w.iter_mut().zip(b) {
                    *x -= c * y;
                }
            }
        }
        let bn = dot(&w, &w).sqrt();
        last_beta = bn;
        if k + 1 == steps || bn < 1e-12 * al.abs().max(1.0) {
            break;
        }
        beta.push(bn);
        for x in w.iter_mut() {
            *x /= bn;
        }
        v = w;
    }
    let t = SymTridiag::new(alpha, beta);
    let theta = t.eigenvalue(0);
    let y = t.eigenvector(theta);
    let mut x = vec![0.0; n];
    for (yk, b) in y.iter().zip(&basis) {
        for (xi, bi) in x.iter_mut().zip(b) {
            *xi += yk * bi;
        }
    }
    normalize(&mut x);
    let bound = (last_beta * y.last().copied().unwrap_or(0.0)).abs();
    (theta, x, bound)
}

fn rayleigh_residual(a: &BandMatrix, x: &[f64]) -> (f64, f64) {
    let ax = a.apply(x);
    let lam = dot(&ax, x) / dot(x, x);
    let r: f64 = ax.iter().zip(x).map(|(p, q)| (p - lam * q).powi(2)).sum();
    (lam, (r / dot(x, x)).sqrt())
}

/// Smallest eigenvalue of `−Δ_h + Q` with Neumann closure on the unit
/// square, by shifted inverse iteration. The shift starts below a Lanczos
/// estimate and is raised towards the Rayleigh quotient whenever the shifted
/// matrix is still positive definite.
pub fn rayleigh_floor_2d(
    grid: &Grid2D,
    m: usize,
    potential: &[f64],
    opts: &FloorOptions,
) -> Result<FloorReport> {
    let a = floor_operator(grid, m, potential)?;
    let (theta, mut x, bound) = lanczos_lowest(&a, opts.lanczos_steps);
    let mut gap = bound.max(1e-6 * theta.abs().max(1.0));
    let mut shift = theta - gap;
    let mut factorizations = 0;
    let mut chol: BandCholesky = loop {
        factorizations += 1;
        if let Some(c) = a.cholesky_shifted(shift) {
            break c;
        }
        gap *= 4.0;
        shift = theta - gap;
        if factorizations > 80 {
            return Err(SilError::NoConvergence {
                iterations: factorizations,
                residual: f64::INFINITY,
            });
        }
    };
    let (mut lam, mut res) = rayleigh_residual(&a, &x);
    let mut iterations = 0;
    while res > opts.tol && iterations < opts.max_iterations {
        x = chol.solve(&x);
        normalize(&mut x);
        iterations += 1;
        let (l, r) = rayleigh_residual(&a, &x);
        lam = l;
        res = r;
        // Move the shift closer when the gap to it is large compared with
        // the residual; a failed factorization keeps the old shift.
        if iterations % 8 == 0 && res > opts.tol && lam - shift > 4.0 * res {
            let candidate = lam - 2.0 * res;
            if candidate > shift {
                factorizations += 1;
                if let Some(c) = a.cholesky_shifted(candidate) {
                    chol = c;
                    shift = candidate;
                }
            }
        }
    }
    if res > opts.tol {
        return Err(SilError::NoConvergence {
            iterations,
            residual: res,
        });
    }
    // Back to nodal values, normalized in the trapezoid inner product.
    let wts = grid.weights();
    let mut vector = x;
    for (k, v) in vector.iter_mut().enumerate() {
        *v /= wts[k / m].sqrt();
    }
    let s: f64 = vector.iter().enumerate().map(|(k, v)| wts[k / m] * v * v).sum();
    for v in vector.iter_mut() {
        *v /= s.sqrt();
    }
    if vector.iter().sum::<f64>() < 0.0 {
        for v in vector.iter_mut() {
            *v = -*v;
        }
    }
    Ok(FloorReport {
        lambda_min: lam,
        residual: res,
        iterations,
        factorizations,
        shift,
        vector,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{make_quartic, make_twowell};
    use crate::profile::{solve_scalar_profile, solve_vector_profile};

    #[test]
    fn richardson_removes_quadratic_term() {
        let v: Vec<f64> = (0..3).map(|k| {
            let h = 0.1 / 2f64.powi(k);
            2.0 + 3.0 * h * h + 5.0 * h.powi(4)
        }).collect();
        assert!((richardson(&v) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn quartic_gap_and_ground_state() {
        let p = solve_scalar_profile(&make_quartic(), 12.0, 4097).unwrap();
        let r = eig_unperturbed(&p, 0.05, 1.0, SpectralGrid::default()).unwrap();
        assert!(r.lambda1.abs() <= 1e-6, "{}", r.lambda1);
        assert!((r.lambda2 - 3.0).abs() <= 0.05, "{}", r.lambda2);
        assert!(r.psi_defect <= 1e-4, "{}", r.psi_defect);
        assert!(r.min_psi > 0.0);
        assert!(r.pass());
        assert!(matches!(
            eig_unperturbed(&p, 0.05, 1.0, SpectralGrid { points_per_unit: 10, levels: 1 }),
            Err(SilError::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn zero_perturbation_is_bitwise_unperturbed() {
        let p = solve_scalar_profile(&make_quartic(), 12.0, 2049).unwrap();
        let g = SpectralGrid { points_per_unit: 32, levels: 1 };
        let a = eig_unperturbed(&p, 0.1, 1.0, g).unwrap();
        let pert = Perturbation { p: 0.0, theta1: None, q: 0.0 };
        let b = eig_perturbed(&p, 0.1, 1.0, WeightSpec::Affine { slope: 0.0 }, &pert, g).unwrap();
        assert_eq!(a.lambda1.to_bits(), b.lambda1.to_bits());
        assert_eq!(a.lambda2.to_bits(), b.lambda2.to_bits());
    }

    #[test]
    fn theta1_orthogonality_is_enforced() {
        let p = solve_scalar_profile(&make_quartic(), 12.0, 2049).unwrap();
        let g = SpectralGrid { points_per_unit: 32, levels: 1 };
        // f‴(θ₀)θ₀′² is odd for the quartic, so an even θ₁ is admissible.
        let even: ScalarFn = std::sync::Arc::new(|z: f64| 1.0 / z.cosh());
        let pert = Perturbation { p: 1.0, theta1: Some(even), q: 0.0 };
        assert!(eig_perturbed(&p, 0.1, 1.0, WeightSpec::Unit, &pert, g).is_ok());
        let odd: ScalarFn = std::sync::Arc::new(|z: f64| z.tanh());
        let pert = Perturbation { p: 1.0, theta1: Some(odd), q: 0.0 };
        assert!(matches!(
            eig_perturbed(&p, 0.1, 1.0, WeightSpec::Unit, &pert, g),
            Err(SilError::PerturbationOutOfClass { .. })
        ));
    }

    #[test]
    fn twowell_block_spectrum() {
        let p = solve_vector_profile(&make_twowell(), 12.0, 8193).unwrap();
        let r = eig_vector(&p, 0.05, 1.0, WeightSpec::Unit, SpectralGrid::default()).unwrap();
        assert!(r.lambda1.abs() <= 1e-6, "{}", r.lambda1);
        assert!((r.lambda2 - 1.5).abs() <= 0.05, "{}", r.lambda2);
        assert!(r.psi_defect <= 1e-4, "{}", r.psi_defect);
    }

    #[test]
    fn floor_constant_and_zero_potential() {
        let g = Grid2D::square(16);
        let eps: f64 = 0.1;
        let q = vec![4.0 / (eps * eps); g.len()];
        let r = rayleigh_floor_2d(&g, 1, &q, &FloorOptions::default()).unwrap();
        assert!((r.lambda_min - 400.0).abs() < 1e-8, "{}", r.lambda_min);
        let r = rayleigh_floor_2d(&g, 1, &vec![0.0; g.len()], &FloorOptions::default()).unwrap();
        assert!(r.lambda_min.abs() < 1e-8);
        assert!(r.residual <= 1e-8);
        let c = r.vector[0];
        assert!(r.vector.iter().all(|v| (v - c).abs() < 1e-6));
    }

    #[test]
    fn floor_operator_matches_separable_cosine_mode() {
        // cos(πx) is an approximate eigenfunction with eigenvalue π².
        let g = Grid2D::square(64);
        let r = rayleigh_floor_2d(&g, 1, &vec![0.0; g.len()], &FloorOptions::default()).unwrap();
        assert!(r.lambda_min.abs() < 1e-8);
        let a = floor_operator(&g, 1, &vec![0.0; g.len()]).unwrap();
        let w = g.weights();
        let u: Vec<f64> = g
            .sample(|x, _| (std::f64::consts::PI * x).cos())
            .iter()
            .zip(&w)
            .map(|(v, wi)| v * wi.sqrt())
            .collect();
        let (lam, _) = rayleigh_residual(&a, &u);
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((lam - pi2).abs() < 1e-5 * pi2, "{lam}");
    }
}
