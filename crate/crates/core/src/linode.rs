//! Linearized profile equations `L₀w = A` (scalar, anchored by `w(0) = 0`)
//! and `Ľ₀u = A` (vector, anchored by the midpoint functional), solved on the
//! truncated Neumann grid with deflation of the discrete kernel vector.

use serde::Serialize;

use crate::error::{Result, SilError};
use crate::operator1d::{EigenPair, Operator1D};
use crate::profile::{midpoint_functional, Profile1D};
use crate::potentials::VectorPotential;

/// Default relative tolerance of the solvability test.
pub const COMPATIBILITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Compatibility {
    /// `∫ A·θ₀′` by composite Simpson.
    pub value: f64,
    pub compatible: bool,
}

/// Tests `|∫A·θ₀′| ≤ tol ‖A‖ ‖θ₀′‖`.
pub fn check_compatibility(a: &[f64], p: &Profile1D, tol: f64) -> Compatibility {
    let w = p.quadrature_weights();
    let m = p.dim;
    let mut value = 0.0;
    let mut na = 0.0;
    let mut nt = 0.0;
    for i in 0..p.len() {
        for c in 0..m {
            let (ai, ti) = (a[i * m + c], p.deriv[i * m + c]);
            value += w[i] * ai * ti;
            na += w[i] * ai * ai;
            nt += w[i] * ti * ti;
        }
    }
    Compatibility {
        value,
        compatible: value.abs() <= tol * (na.sqrt() * nt.sqrt()),
    }
}

/// The Neumann operator `−d²/dz² + f″(θ₀)` (or `+ D²W(θ⃗₀)`) on the profile
/// grid.
pub fn linearized_operator(p: &Profile1D) -> Operator1D {
    let m = p.dim;
    let mut pot = Vec::with_capacity(p.len() * m * m);
    for i in 0..p.len() {
        pot.extend(p.linearization(i));
    }
    Operator1D::new(p.z.clone(), m, pot)
}

/// Prepared solver: the operator together with its deflated kernel vector.
#[derive(Debug, Clone)]
pub struct LinOde1D {
    pub op: Operator1D,
    /// Lowest eigenpair, sign chosen so that it correlates positively with θ₀′.
    pub kernel: EigenPair,
}

#[derive(Debug, Clone, Serialize)]
pub struct LinOdeSolution {
    #[serde(skip)]
    pub u: Vec<f64>,
    /// Max-norm of the residual of the deflated system.
    pub residual: f64,
    /// `∫ (L w − A)·θ₀′`, the discrete Fredholm consistency defect.
    pub fredholm_defect: f64,
    /// Value of the anchoring functional after normalization.
    pub anchor: f64,
    /// Eigenvalue removed by the deflation.
    pub kernel_eigenvalue: f64,
    pub compatibility: f64,
}

/// Anchoring condition for the vector problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VectorAnchor {
    /// `(u₋ − u₊)ᵀ(R − I) u(0) = 0`.
    #[default]
    Midpoint,
    /// `(u, θ⃗₀′)_{L²} = 0`.
    L2,
}

impl LinOde1D {
    pub fn new(p: &Profile1D) -> Self {
        let op = linearized_operator(p);
        let mut kernel = op.eigenpairs(1).remove(0);
        if op.inner(&kernel.vector, &p.deriv) < 0.0 {
            for v in kernel.vector.iter_mut() {
                *v = -*v;
            }
        }
        LinOde1D { op, kernel }
    }

    /// Solves the deflated system; the result is orthogonal to the kernel
    /// vector and not yet anchored.
    fn solve_raw(&self, a: &[f64]) -> Result<Vec<f64>> {
        let u = self
            .op
            .solve_deflated(a, &self.kernel.vector)
            .ok_or_else(|| SilError::SingularSolve("tridiagonal pivot vanished".into()))?;
        let scale = a.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1.0);
        if u.iter().any(|v| v.abs() > 1e12 * scale) {
            return Err(SilError::SingularSolve(
                "solution blew up after deflation".into(),
            ));
        }
        Ok(u)
    }

    /// Residual of the deflated operator `L − μ e eᵀM`, which has the
    /// kernel vector as an exact null vector.
    fn finish(&self, p: &Profile1D, a: &[f64], u: Vec<f64>, anchor: f64, compat: f64) -> LinOdeSolution {
        let mut r = self.op.apply(&u);
        let e = &self.kernel.vector;
        let c = self.op.inner(e, &u) * self.kernel.value;
        for k in 0..r.len() {
            r[k] -= c * e[k] + a[k];
        }
        let w = p.quadrature_weights();
        let m = p.dim;
        let mut fredholm = 0.0;
        for i in 0..p.len() {
            for k in 0..m {
                fredholm += w[i] * r[i * m + k] * p.deriv[i * m + k];
            }
        }
        // The projected right-hand side differs from A by its kernel part.
        let ca = self.op.inner(a, e);
        let residual = r
            .iter()
            .zip(e)
            .map(|(ri, ei)| (ri + ca * ei).abs())
            .fold(0.0, f64::max);
        LinOdeSolution {
            u,
            residual,
            fredholm_defect: fredholm,
            anchor,
            kernel_eigenvalue: self.kernel.value,
            compatibility: compat,
        }
    }

    pub fn solve_scalar(&self, a: &[f64], p: &Profile1D) -> Result<LinOdeSolution> {
        let compat = check_compatibility(a, p, COMPATIBILITY_TOL);
        if !compat.compatible {
            return Err(SilError::Incompatible {
                defect: compat.value,
            });
        }
        let mut u = self.solve_raw(a)?;
        let mid = p.mid();
        let e = &self.kernel.vector;
        let c = u[mid] / e[mid];
        for (ui, ei) in u.iter_mut().zip(e) {
            *ui -= c * ei;
        }
        let anchor = u[mid];
        Ok(self.finish(p, a, u, anchor, compat.value))
    }

    pub fn solve_vector(
        &self,
        a: &[f64],
        p: &Profile1D,
        w: &VectorPotential,
        anchor: VectorAnchor,
    ) -> Result<LinOdeSolution> {
        let compat = check_compatibility(a, p, COMPATIBILITY_TOL);
        if !compat.compatible {
            return Err(SilError::Incompatible {
                defect: compat.value,
            });
        }
        let mut u = self.solve_raw(a)?;
        let e = &self.kernel.vector;
        let functional = |v: &[f64]| -> f64 {
            match anchor {
                VectorAnchor::Midpoint => midpoint_functional(p, w, v),
                VectorAnchor::L2 => self.op.inner(v, &p.deriv),
            }
        };
        let c = functional(&u) / functional(e);
        for (ui, ei) in u.iter_mut().zip(e) {
            *ui -= c * ei;
        }
        let value = functional(&u);
        Ok(self.finish(p, a, u, value, compat.value))
    }
}

/// Solves `−w″ + f″(θ₀)w = A` with `w(0) = 0`.
pub fn solve_scalar_linode(a: &[f64], p: &Profile1D) -> Result<LinOdeSolution> {
    if p.dim != 1 {
        return Err(SilError::InvalidInput("scalar solve on a vector profile".into()));
    }
    LinOde1D::new(p).solve_scalar(a, p)
}

/// Solves `−u″ + D²W(θ⃗₀)u = A` with the chosen anchoring.
pub fn solve_vector_linode(
    a: &[f64],
    p: &Profile1D,
    w: &VectorPotential,
    anchor: VectorAnchor,
) -> Result<LinOdeSolution> {
    let k = kernel_dimension(p, None);
    if k.dimension != 1 {
        return Err(SilError::KernelNotSimple { dim: k.dimension });
    }
    LinOde1D::new(p).solve_vector(a, p, w, anchor)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelReport {
    pub dimension: usize,
    pub threshold: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

/// Number of eigenvalues of the truncated Neumann operator below
/// `threshold` (default `0.05 λ`, λ the well Hessian floor).
pub fn kernel_dimension(p: &Profile1D, threshold: Option<f64>) -> KernelReport {
    let t = threshold.unwrap_or(0.05 * p.well_floor());
    kernel_dimension_of(&linearized_operator(p), t)
}

pub fn kernel_dimension_of(op: &Operator1D, threshold: f64) -> KernelReport {
    let sym = op.symmetric();
    KernelReport {
        dimension: sym.count_below(threshold),
        threshold,
        lambda1: sym.eigenvalue(0),
        lambda2: sym.eigenvalue(1),
    }
}

/// Sampled right-hand side read from CSV: rows `z, a_1[, a_2, …]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledInput {
    pub dim: usize,
    pub z: Vec<f64>,
    /// Node-major values.
    pub values: Vec<f64>,
}

/// Parses a CSV file of `z, a…` rows. A non-numeric first row is treated as
/// a header; `z` must be strictly increasing and every value finite.
pub fn parse_samples_csv(text: &str) -> Result<SampledInput> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut dim = 0;
    let mut z = Vec::new();
    let mut values = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| SilError::Config {
            line: line + 1,
            message: e.to_string(),
        })?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            rec.iter().map(|f| f.parse::<f64>()).collect();
        let row = match parsed {
            Ok(r) => r,
            Err(_) if z.is_empty() && dim == 0 => {
                dim = usize::MAX;
                continue;
            }
            Err(e) => {
                return Err(SilError::Config {
                    line: line + 1,
                    message: format!("not a number: {e}"),
                })
            }
        };
        if row.len() < 2 {
            return Err(SilError::Config {
                line: line + 1,
                message: "expected z followed by at least one value".into(),
            });
        }
        if dim == 0 || dim == usize::MAX {
            dim = row.len() - 1;
        } else if row.len() - 1 != dim {
            return Err(SilError::Config {
                line: line + 1,
                message: format!("expected {} columns, found {}", dim + 1, row.len()),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(SilError::Config {
                line: line + 1,
                message: "non-finite value".into(),
            });
        }
        if let Some(last) = z.last() {
            if row[0] <= *last {
                return Err(SilError::Config {
                    line: line + 1,
                    message: "z must be strictly increasing".into(),
                });
            }
        }
        z.push(row[0]);
        values.extend_from_slice(&row[1..]);
    }
    if z.len() < 2 {
        return Err(SilError::InvalidInput("need at least two samples".into()));
    }
    Ok(SampledInput { dim, z, values })
}

impl SampledInput {
    /// Linear interpolation onto the profile grid; the samples must cover it.
    pub fn resample(&self, p: &Profile1D) -> Result<Vec<f64>> {
        if self.dim != p.dim {
            return Err(SilError::InvalidInput(format!(
                "input has {} components, profile has {}",
                self.dim, p.dim
            )));
        }
        let (lo, hi) = (self.z[0], *self.z.last().unwrap());
        let tol = 1e-9 * p.half_length;
        if lo > p.z[0] + tol || hi < p.z[p.len() - 1] - tol {
            return Err(SilError::InvalidInput(format!(
                "samples cover [{lo}, {hi}], profile needs [{}, {}]",
                p.z[0],
                p.z[p.len() - 1]
            )));
        }
        let m = self.dim;
        let mut out = Vec::with_capacity(p.len() * m);
        let mut k = 0;
        for &x in &p.z {
            let x = x.clamp(lo, hi);
            while k + 2 < self.z.len() && self.z[k + 1] < x {
                k += 1;
            }
            let t = (x - self.z[k]) / (self.z[k + 1] - self.z[k]);
            for c in 0..m {
                out.push((1.0 - t) * self.values[k * m + c] + t * self.values[(k + 1) * m + c]);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{make_quartic, make_twowell};
    use crate::profile::{solve_scalar_profile, solve_vector_profile};

    #[test]
    fn compatibility_examples() {
        let p = solve_scalar_profile(&make_quartic(), 10.0, 2049).unwrap();
        let c = check_compatibility(&p.second, &p, 1e-8);
        assert!(c.compatible && c.value.abs() < 1e-12);
        let c = check_compatibility(&p.deriv, &p, 1e-8);
        assert!(!c.compatible && (c.value - 4.0 / 3.0).abs() < 1e-6);
        let zero = vec![0.0; p.len()];
        assert_eq!(check_compatibility(&zero, &p, 1e-8).value, 0.0);
    }

    #[test]
    fn scalar_oracle_and_anchor() {
        let p = solve_scalar_profile(&make_quartic(), 10.0, 4097).unwrap();
        let s = solve_scalar_linode(&p.second, &p).unwrap();
        assert!(s.anchor.abs() <= 1e-12);
        assert!(s.fredholm_defect.abs() < 1e-8, "{}", s.fredholm_defect);
        let err = (0..p.len())
            .map(|i| (s.u[i] + 0.5 * p.z[i] * p.deriv[i]).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-4, "{err}");
        let zero = solve_scalar_linode(&vec![0.0; p.len()], &p).unwrap();
        assert!(zero.u.iter().all(|v| v.abs() < 1e-14));
        assert!(matches!(
            solve_scalar_linode(&p.deriv, &p),
            Err(SilError::Incompatible { .. })
        ));
    }

    #[test]
    fn twowell_kernel_and_vector_solve() {
        let w = make_twowell();
        let p = solve_vector_profile(&w, 12.0, 4097).unwrap();
        let k = kernel_dimension(&p, None);
        assert_eq!(k.dimension, 1);
        assert!(k.lambda1.abs() < 1e-3);
        assert_eq!(kernel_dimension(&p, Some(-1.0)).dimension, 0);
        let s = solve_vector_linode(&p.second, &p, &w, VectorAnchor::Midpoint).unwrap();
        assert!(s.anchor.abs() <= 1e-12);
        let mut err: f64 = 0.0;
        for i in 0..p.len() {
            for c in 0..2 {
                err = err.max((s.u[i * 2 + c] + 0.5 * p.z[i] * p.deriv[i * 2 + c]).abs());
            }
        }
        assert!(err < 1e-4, "{err}");
    }
}

#[cfg(test)]
mod csv_tests {
    use super::*;

    #[test]
    fn reads_header_and_rows() {
        let s = parse_samples_csv("z,a\n-1,0.5\n0,1\n1,0.5\n").unwrap();
        assert_eq!(s.dim, 1);
        assert_eq!(s.z, vec![-1.0, 0.0, 1.0]);
        let v = parse_samples_csv("# comment\n0,1,2\n1,3,4\n").unwrap();
        assert_eq!(v.dim, 2);
        assert_eq!(v.values, vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_samples_csv("").is_err());
        assert!(parse_samples_csv("0,1\n0,2\n").is_err());
        assert!(parse_samples_csv("0,1\n1,2,3\n").is_err());
        assert!(parse_samples_csv("0,1\n1,x\n").is_err());
        assert!(parse_samples_csv("0,1\n1,NaN\n").is_err());
    }
}
