//! Discrete Neumann operator `−J⁻¹(J u′)′ + Q(z) u` on a uniform vertex grid.
//!
//! The finite-volume discretization uses half weights at the two end nodes,
//! which makes the matrix self-adjoint in the inner product
//! `⟨u, v⟩ = Σ h ω_i J_i u_i·v_i` (ω = ½ at the ends, 1 inside).

use nalgebra::DMatrix;

use crate::linalg::{BlockTridiag, SymTridiag};

#[derive(Debug, Clone)]
pub enum Symmetric {
    Scalar(SymTridiag),
    Block(BlockTridiag),
}

impl Symmetric {
    pub fn count_below(&self, x: f64) -> usize {
        match self {
            Symmetric::Scalar(t) => t.count_below(x),
            Symmetric::Block(b) => b.count_below(x),
        }
    }
    pub fn eigenvalue(&self, k: usize) -> f64 {
        match self {
            Symmetric::Scalar(t) => t.eigenvalue(k),
            Symmetric::Block(b) => b.eigenvalue(k),
        }
    }
    pub fn eigenvector(&self, lambda: f64) -> Vec<f64> {
        match self {
            Symmetric::Scalar(t) => t.eigenvector(lambda),
            Symmetric::Block(b) => b.eigenvector(lambda),
        }
    }
    pub fn solve_shifted(&self, shift: f64, b: &[f64]) -> Option<Vec<f64>> {
        match self {
            Symmetric::Scalar(t) => t.solve_shifted(shift, b),
            Symmetric::Block(m) => m.solve_shifted(shift, b),
        }
    }
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Symmetric::Scalar(t) => t.apply(x),
            Symmetric::Block(b) => b.apply(x),
        }
    }
}

/// Eigenpair with the eigenvector normalized in the weighted inner product.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
    /// `‖(L − λ)v‖` in the weighted norm.
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct Operator1D {
    /// Components per node.
    pub m: usize,
    pub n: usize,
    pub h: f64,
    pub z: Vec<f64>,
    /// Weight at the nodes.
    pub weight: Vec<f64>,
    /// Weight at the midpoints `i + ½`.
    pub weight_half: Vec<f64>,
    /// Potential blocks, row-major `m × m` per node.
    pub potential: Vec<f64>,
}

impl Operator1D {
    /// Operator with unit weight.
    pub fn new(z: Vec<f64>, m: usize, potential: Vec<f64>) -> Self {
        let n = z.len();
        Self::weighted(z, m, potential, vec![1.0; n], vec![1.0; n - 1])
    }

    pub fn weighted(
        z: Vec<f64>,
        m: usize,
        potential: Vec<f64>,
        weight: Vec<f64>,
        weight_half: Vec<f64>,
    ) -> Self {
        let n = z.len();
        assert!(n >= 3);
        assert_eq!(potential.len(), n * m * m);
        assert_eq!(weight.len(), n);
        assert_eq!(weight_half.len(), n - 1);
        let h = z[1] - z[0];
        Operator1D {
            m,
            n,
            h,
            z,
            weight,
            weight_half,
            potential,
        }
    }

    fn omega(&self, i: usize) -> f64 {
        if i == 0 || i == self.n - 1 {
            0.5
        } else {
            1.0
        }
    }

    /// Diagonal of the inner product, `h ω_i J_i`.
    pub fn mass(&self, i: usize) -> f64 {
        self.h * self.omega(i) * self.weight[i]
    }

    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let m = self.m;
        (0..self.n)
            .map(|i| {
                let s: f64 = (0..m).map(|c| u[i * m + c] * v[i * m + c]).sum();
                self.mass(i) * s
            })
            .sum()
    }

    pub fn norm(&self, u: &[f64]) -> f64 {
        self.inner(u, u).sqrt()
    }

    /// Applies the (non-symmetrized) operator.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let (n, m, h) = (self.n, self.m, self.h);
        let mut out = vec![0.0; n * m];
        for i in 0..n {
            let scale = 1.0 / (self.omega(i) * self.weight[i] * h * h);
            for c in 0..m {
                let mut flux = 0.0;
                if i + 1 < n {
                    flux += self.weight_half[i] * (u[(i + 1) * m + c] - u[i * m + c]);
                }
                if i > 0 {
                    flux -= self.weight_half[i - 1] * (u[i * m + c] - u[(i - 1) * m + c]);
                }
                let mut q = 0.0;
                for k in 0..m {
                    q += self.potential[i * m * m + c * m + k] * u[i * m + k];
                }
                out[i * m + c] = -scale * flux + q;
            }
        }
        out
    }

    /// Symmetric matrix `M^{1/2} L M^{-1/2}`.
    pub fn symmetric(&self) -> Symmetric {
        let (n, m, h) = (self.n, self.m, self.h);
        let mw: Vec<f64> = (0..n).map(|i| self.omega(i) * self.weight[i]).collect();
        let mut dg = vec![0.0; n];
        for i in 0..n {
            let mut s = 0.0;
            if i + 1 < n {
                s += self.weight_half[i];
            }
            if i > 0 {
                s += self.weight_half[i - 1];
            }
            dg[i] = s / (mw[i] * h * h);
        }
        let off: Vec<f64> = (0..n - 1)
            .map(|i| -self.weight_half[i] / (h * h * (mw[i] * mw[i + 1]).sqrt()))
            .collect();
        if m == 1 {
            let d = (0..n).map(|i| dg[i] + self.potential[i]).collect();
            Symmetric::Scalar(SymTridiag::new(d, off))
        } else {
            let diag = (0..n)
                .map(|i| {
                    let q = DMatrix::from_row_slice(m, m, &self.potential[i * m * m..(i + 1) * m * m]);
                    let q = (&q + q.transpose()) * 0.5;
                    q + DMatrix::identity(m, m) * dg[i]
                })
                .collect();
            let offb = off.iter().map(|v| DMatrix::identity(m, m) * *v).collect();
            Symmetric::Block(BlockTridiag { m, diag, off: offb })
        }
    }

    fn to_symmetric_vec(&self, u: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut y = u.to_vec();
        for i in 0..self.n {
            let s = (self.omega(i) * self.weight[i]).sqrt();
            for c in 0..m {
                y[i * m + c] *= s;
            }
        }
        y
    }

    fn from_symmetric_vec(&self, y: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut u = y.to_vec();
        for i in 0..self.n {
            let s = (self.omega(i) * self.weight[i]).sqrt();
            for c in 0..m {
                u[i * m + c] /= s;
            }
        }
        u
    }

    /// Rayleigh quotient in energy form, free of the `1/h²` cancellation.
    pub fn rayleigh(&self, u: &[f64]) -> f64 {
        let (n, m, h) = (self.n, self.m, self.h);
        let mut num = 0.0;
        for i in 0..n - 1 {
            let mut d2 = 0.0;
            for c in 0..m {
                let d = u[(i + 1) * m + c] - u[i * m + c];
                d2 += d * d;
            }
            num += self.weight_half[i] * d2 / h;
        }
        for i in 0..n {
            let mut q = 0.0;
            for c in 0..m {
                for k in 0..m {
                    q += u[i * m + c] * self.potential[i * m * m + c * m + k] * u[i * m + k];
                }
            }
            num += self.mass(i) * q;
        }
        num / self.inner(u, u)
    }

    /// The `count` smallest eigenpairs.
    pub fn eigenpairs(&self, count: usize) -> Vec<EigenPair> {
        let sym = self.symmetric();
        let mut pairs: Vec<EigenPair> = Vec::with_capacity(count);
        for k in 0..count {
            let lam = sym.eigenvalue(k);
            let y = sym.eigenvector(lam);
            let mut v = self.from_symmetric_vec(&y);
            // Orthogonalize against earlier pairs (matters for clusters).
            for p in &pairs {
                let c = self.inner(&v, &p.vector);
                for (a, b) in v.iter_mut().zip(&p.vector) {
                    *a -= c * b;
                }
            }
            let nrm = self.norm(&v);
            for a in v.iter_mut() {
                *a /= nrm;
            }
            let value = self.rayleigh(&v);
            let lv = self.apply(&v);
            let r: Vec<f64> = lv.iter().zip(&v).map(|(a, b)| a - value * b).collect();
            let residual = self.norm(&r);
            pairs.push(EigenPair {
                value,
                vector: v,
                residual,
            });
        }
        pairs
    }

    pub fn count_below(&self, x: f64) -> usize {
        self.symmetric().count_below(x)
    }

    /// Solves `L u = b` on the orthogonal complement of the lowest
    /// eigenvector `kernel` (weighted-normalized). The right-hand side is
    /// projected first; the kernel component of the result is removed.
    pub fn solve_deflated(&self, b: &[f64], kernel: &[f64]) -> Option<Vec<f64>> {
        let c = self.inner(b, kernel);
        let bp: Vec<f64> = b.iter().zip(kernel).map(|(x, k)| x - c * k).collect();
        let sym = self.symmetric();
        // The symmetrized system is M^{1/2} L M^{-1/2} y = M^{1/2} b.
        let rhs = self.to_symmetric_vec(&bp);
        let y = sym.solve_shifted(0.0, &rhs)?;
        let mut u = self.from_symmetric_vec(&y);
        if u.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let c = self.inner(&u, kernel);
        for (a, k) in u.iter_mut().zip(kernel) {
            *a -= c * k;
        }
        Some(u)
    }

    /// Plain solve `L u = b` (no deflation).
    pub fn solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        let sym = self.symmetric();
        let y = sym.solve_shifted(0.0, &self.to_symmetric_vec(b))?;
        Some(self.from_symmetric_vec(&y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_operator(m: usize) -> Operator1D {
        let n = 41;
        let z: Vec<f64> = (0..n).map(|i| -2.0 + 0.1 * i as f64).collect();
        let mut pot = vec![0.0; n * m * m];
        for i in 0..n {
            for c in 0..m {
                pot[i * m * m + c * m + c] = 1.0 + (z[i] + c as f64).sin();
            }
            if m == 2 {
                pot[i * 4 + 1] = 0.3 * z[i].cos();
                pot[i * 4 + 2] = 0.3 * z[i].cos();
            }
        }
        let weight = z.iter().map(|z| 1.0 + 0.2 * z).collect();
        let weight_half = (0..n - 1).map(|i| 1.0 + 0.2 * (z[i] + 0.05)).collect();
        Operator1D::weighted(z, m, pot, weight, weight_half)
    }

    #[test]
    fn self_adjoint_in_weighted_inner_product() {
        for m in [1, 2] {
            let op = sample_operator(m);
            let u: Vec<f64> = (0..op.n * m).map(|i| (0.37 * i as f64).sin()).collect();
            let v: Vec<f64> = (0..op.n * m).map(|i| (0.11 * i as f64 + 1.0).cos()).collect();
            let a = op.inner(&op.apply(&u), &v);
            let b = op.inner(&u, &op.apply(&v));
            assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
            let rq = op.inner(&op.apply(&u), &u) / op.inner(&u, &u);
            assert!((rq - op.rayleigh(&u)).abs() < 1e-10 * rq.abs().max(1.0));
        }
    }

    #[test]
    fn eigenpairs_are_orthonormal() {
        for m in [1, 2] {
            let op = sample_operator(m);
            let p = op.eigenpairs(2);
            assert!(p[0].value <= p[1].value);
            assert!((op.inner(&p[0].vector, &p[0].vector) - 1.0).abs() < 1e-10);
            assert!(op.inner(&p[0].vector, &p[1].vector).abs() < 1e-10);
            assert!(p[0].residual < 1e-8 && p[1].residual < 1e-8);
        }
    }
}
