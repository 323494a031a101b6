//! Structured symmetric linear algebra: tridiagonal and block-tridiagonal
//! eigenvalue counting and solves, and a banded Cholesky factorization.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Symmetric tridiagonal matrix with diagonal `d` and off-diagonal `e`.
#[derive(Debug, Clone)]
pub struct SymTridiag {
    pub d: Vec<f64>,
    pub e: Vec<f64>,
}

impl SymTridiag {
    pub fn new(d: Vec<f64>, e: Vec<f64>) -> Self {
        assert_eq!(e.len() + 1, d.len().max(1));
        SymTridiag { d, e }
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = self.d[i] * x[i];
            if i > 0 {
                s += self.e[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.e[i] * x[i + 1];
            }
            y[i] = s;
        }
        y
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence).
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = self.d[0] - x;
        let tiny = f64::MIN_POSITIVE.sqrt();
        for i in 0..self.len() {
            if i > 0 {
                let denom = if q == 0.0 { tiny } else { q };
                q = self.d[i] - x - self.e[i - 1] * self.e[i - 1] / denom;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.e[i - 1].abs();
            }
            if i + 1 < n {
                r += self.e[i].abs();
            }
            lo = lo.min(self.d[i] - r);
            hi = hi.max(self.d[i] + r);
        }
        (lo, hi)
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        let span = hi - lo;
        lo -= 1e-12 * span.max(1.0);
        hi += 1e-12 * span.max(1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Solves `(T - shift I) x = b`.
    pub fn solve_shifted(&self, shift: f64, b: &[f64]) -> Option<Vec<f64>> {
        let n = self.len();
        let mut sub = vec![0.0; n];
        let mut sup = vec![0.0; n];
        sub[1..n].copy_from_slice(&self.e[..(n - 1)]);
        sup[..(n - 1)].copy_from_slice(&self.e[..(n - 1)]);
        let diag: Vec<f64> = self.d.iter().map(|v| v - shift).collect();
        crate::numerics::thomas(&sub, &diag, &sup, b)
    }

    /// Eigenvector for an (accurate) eigenvalue estimate by inverse iteration,
    /// normalized in the Euclidean norm.
    pub fn eigenvector(&self, lambda: f64) -> Vec<f64> {
        let n = self.len();
        let scale = self.gershgorin().1.abs().max(self.gershgorin().0.abs()).max(1.0);
        let shift = lambda - 1e-13 * scale;
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * ((i * 7919) % 13) as f64).collect();
        for _ in 0..4 {
            let y = match self.solve_shifted(shift, &x) {
                Some(y) => y,
                None => self.solve_shifted(shift - 1e-10 * scale, &x).unwrap_or(x.clone()),
            };
            let nrm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            x = y.into_iter().map(|v| v / nrm).collect();
        }
        x
    }
}

/// Symmetric block-tridiagonal matrix with `m × m` blocks. The sub-diagonal
/// blocks are the transposes of the super-diagonal blocks `off[i]` that couple
/// node `i` to node `i + 1`.
#[derive(Debug, Clone)]
pub struct BlockTridiag {
    pub m: usize,
    pub diag: Vec<DMatrix<f64>>,
    pub off: Vec<DMatrix<f64>>,
}

impl BlockTridiag {
    pub fn nodes(&self) -> usize {
        self.diag.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let m = self.m;
        let n = self.nodes();
        let mut y = vec![0.0; n * m];
        for i in 0..n {
            let xi = DVector::from_column_slice(&x[i * m..(i + 1) * m]);
            let mut s = &self.diag[i] * &xi;
            if i > 0 {
                let xp = DVector::from_column_slice(&x[(i - 1) * m..i * m]);
                s += self.off[i - 1].transpose() * xp;
            }
            if i + 1 < n {
                let xn = DVector::from_column_slice(&x[(i + 1) * m..(i + 2) * m]);
                s += &self.off[i] * xn;
            }
            y[i * m..(i + 1) * m].copy_from_slice(s.as_slice());
        }
        y
    }

    /// Number of eigenvalues below `x` via the inertia of a block LDLᵀ
    /// factorization of `A - x I`.
    pub fn count_below(&self, x: f64) -> usize {
        let m = self.m;
        let id = DMatrix::<f64>::identity(m, m);
        let mut count = 0;
        let mut prev: Option<DMatrix<f64>> = None;
        for i in 0..self.nodes() {
            let mut di = &self.diag[i] - &id * x;
            if let Some(p) = prev.as_ref() {
                let b = &self.off[i - 1];
                let pinv = invert_symmetric(p);
                di -= b.transpose() * pinv * b;
            }
            let di = symmetrize(&di);
            let eig = SymmetricEigen::new(di.clone());
            count += eig.eigenvalues.iter().filter(|v| **v < 0.0).count();
            prev = Some(di);
        }
        count
    }

    pub fn gershgorin(&self) -> (f64, f64) {
        let m = self.m;
        let n = self.nodes();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            for r in 0..m {
                let mut rad = 0.0;
                for c in 0..m {
                    if c != r {
                        rad += self.diag[i][(r, c)].abs();
                    }
                }
                if i > 0 {
                    for c in 0..m {
                        rad += self.off[i - 1][(c, r)].abs();
                    }
                }
                if i + 1 < n {
                    for c in 0..m {
                        rad += self.off[i][(r, c)].abs();
                    }
                }
                lo = lo.min(self.diag[i][(r, r)] - rad);
                hi = hi.max(self.diag[i][(r, r)] + rad);
            }
        }
        (lo, hi)
    }

    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        let span = (hi - lo).max(1.0);
        lo -= 1e-12 * span;
        hi += 1e-12 * span;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Solves `(A - shift I) x = b` by block Thomas elimination.
    pub fn solve_shifted(&self, shift: f64, b: &[f64]) -> Option<Vec<f64>> {
        let m = self.m;
        let n = self.nodes();
        let id = DMatrix::<f64>::identity(m, m);
        let mut cmat: Vec<DMatrix<f64>> = Vec::with_capacity(n);
        let mut dvec: Vec<DVector<f64>> = Vec::with_capacity(n);
        for i in 0..n {
            let mut piv = &self.diag[i] - &id * shift;
            let mut rhs = DVector::from_column_slice(&b[i * m..(i + 1) * m]);
            if i > 0 {
                let lo = self.off[i - 1].transpose();
                piv -= &lo * &cmat[i - 1];
                rhs -= &lo * &dvec[i - 1];
            }
            let lu = piv.lu();
            let ci = if i + 1 < n {
                lu.solve(&self.off[i])?
            } else {
                DMatrix::zeros(m, m)
            };
            let di = lu.solve(&rhs)?;
            if di.iter().any(|v| !v.is_finite()) {
                return None;
            }
            cmat.push(ci);
            dvec.push(di);
        }
        let mut x = vec![0.0; n * m];
        let mut next = dvec[n - 1].clone();
        x[(n - 1) * m..].copy_from_slice(next.as_slice());
        for i in (0..n - 1).rev() {
            let xi = &dvec[i] - &cmat[i] * &next;
            x[i * m..(i + 1) * m].copy_from_slice(xi.as_slice());
            next = xi;
        }
        Some(x)
    }

    pub fn eigenvector(&self, lambda: f64) -> Vec<f64> {
        let len = self.nodes() * self.m;
        let (lo, hi) = self.gershgorin();
        let scale = lo.abs().max(hi.abs()).max(1.0);
        let shift = lambda - 1e-13 * scale;
        let mut x: Vec<f64> = (0..len).map(|i| 1.0 + 0.01 * ((i * 7919) % 13) as f64).collect();
        for _ in 0..4 {
            let y = self
                .solve_shifted(shift, &x)
                .or_else(|| self.solve_shifted(shift - 1e-10 * scale, &x))
                .unwrap_or_else(|| x.clone());
            let nrm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            x = y.into_iter().map(|v| v / nrm).collect();
        }
        x
    }
}

fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

fn invert_symmetric(a: &DMatrix<f64>) -> DMatrix<f64> {
    a.clone().try_inverse().unwrap_or_else(|| {
        let eig = SymmetricEigen::new(a.clone());
        let tiny = f64::MIN_POSITIVE.sqrt();
        let inv: Vec<f64> = eig
            .eigenvalues
            .iter()
            .map(|v| if v.abs() < tiny { 1.0 / tiny } else { 1.0 / v })
            .collect();
        &eig.eigenvectors * DMatrix::from_diagonal(&DVector::from_vec(inv)) * eig.eigenvectors.transpose()
    })
}

/// Banded symmetric positive definite matrix in lower band storage:
/// `band[i * (bw + 1) + k]` holds entry `(i, i - k)`.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    pub n: usize,
    pub bw: usize,
    pub band: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        BandMatrix {
            n,
            bw,
            band: vec![0.0; n * (bw + 1)],
        }
    }

    /// Adds `v` to entry `(i, j)` with `i >= j`, `i - j <= bw`.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i >= j && i - j <= self.bw);
        self.band[i * (self.bw + 1) + (i - j)] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.band[i * (self.bw + 1) + (i - j)]
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        let w = self.bw + 1;
        for i in 0..self.n {
            let row = &self.band[i * w..(i + 1) * w];
            y[i] += row[0] * x[i];
            for k in 1..w.min(i + 1) {
                let j = i - k;
                y[i] += row[k] * x[j];
                y[j] += row[k] * x[i];
            }
        }
        y
    }

    /// Cholesky factorization of `A - shift I`; `None` if not positive definite.
    pub fn cholesky_shifted(&self, shift: f64) -> Option<BandCholesky> {
        let n = self.n;
        let bw = self.bw;
        let w = bw + 1;
        let mut l = self.band.clone();
        for i in 0..n {
            l[i * w] -= shift;
        }
        for i in 0..n {
            let jmin = i.saturating_sub(bw);
            for j in jmin..=i {
                // L(i,j) = (A(i,j) - sum_k L(i,k) L(j,k)) / L(j,j)
                let kmin = jmin.max(j.saturating_sub(bw));
                let mut s = l[i * w + (i - j)];
                for k in kmin..j {
                    s -= l[i * w + (i - k)] * l[j * w + (j - k)];
                }
                if i == j {
                    if !(s > 0.0) {
                        return None;
                    }
                    l[i * w] = s.sqrt();
                } else {
                    l[i * w + (i - j)] = s / l[j * w];
                }
            }
        }
        Some(BandCholesky { n, bw, l })
    }
}

#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 1..w.min(i + 1) {
                s -= self.l[i * w + k] * y[i - k];
            }
            y[i] = s / self.l[i * w];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in 1..w.min(n - i) {
                s -= self.l[(i + k) * w + k] * y[i + k];
            }
            y[i] = s / self.l[i * w];
        }
        y
    }
}
