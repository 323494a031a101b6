//! Scalar double-well and vector two-well potentials together with a
//! validation routine that checks the structural assumptions numerically.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Result, SilError};
use crate::numerics::halton;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type VectorEvalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
/// Writes the gradient (length m) or row-major Hessian (length m²) into the
/// output slice.
pub type VectorOutFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Double-well potential `f` with wells at ±1.
#[derive(Clone)]
pub struct ScalarPotential {
    pub name: String,
    pub f: ScalarFn,
    pub d1: ScalarFn,
    pub d2: ScalarFn,
    pub d3: ScalarFn,
    pub wells: (f64, f64),
    /// `u f'(u) ≥ 0` for all `|u| ≥ radial_radius`.
    pub radial_radius: f64,
    /// Coefficients when the potential is a polynomial (lowest degree first).
    pub coefficients: Option<Vec<f64>>,
}

impl std::fmt::Debug for ScalarPotential {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("ScalarPotential")
            .field("name", &self.name)
            .field("wells", &self.wells)
            .field("radial_radius", &self.radial_radius)
            .finish()
    }
}

impl ScalarPotential {
    pub fn f(&self, u: f64) -> f64 {
        (self.f)(u)
    }
    pub fn d1(&self, u: f64) -> f64 {
        (self.d1)(u)
    }
    pub fn d2(&self, u: f64) -> f64 {
        (self.d2)(u)
    }
    pub fn d3(&self, u: f64) -> f64 {
        (self.d3)(u)
    }

    /// Smallest second derivative at the wells.
    pub fn min_well_curvature(&self) -> f64 {
        self.d2(self.wells.0).min(self.d2(self.wells.1))
    }

    /// Largest `|f''|` over `[-b, b]`, sampled.
    pub fn max_abs_d2(&self, b: f64) -> f64 {
        (0..=400)
            .map(|i| self.d2(-b + 2.0 * b * i as f64 / 400.0).abs())
            .fold(0.0, f64::max)
    }

    /// Builds a polynomial potential `Σ c_k u^k` with wells at ±1.
    pub fn from_polynomial(name: &str, coeffs: &[f64]) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(SilError::InvalidInput(
                "polynomial needs at least one finite coefficient".into(),
            ));
        }
        let deriv = |c: &[f64]| -> Vec<f64> {
            c.iter()
                .enumerate()
                .skip(1)
                .map(|(k, v)| k as f64 * v)
                .collect()
        };
        let c0 = coeffs.to_vec();
        let c1 = deriv(&c0);
        let c2 = deriv(&c1);
        let c3 = deriv(&c2);
        let horner = |c: Vec<f64>| -> ScalarFn {
            Arc::new(move |u: f64| c.iter().rev().fold(0.0, |acc, v| acc * u + v))
        };
        let d1c = c1.clone();
        let radial_radius = radial_radius_of(&move |u: f64| {
            u * d1c.iter().rev().fold(0.0, |acc, v| acc * u + v)
        });
        Ok(ScalarPotential {
            name: name.to_string(),
            f: horner(c0.clone()),
            d1: horner(c1),
            d2: horner(c2),
            d3: horner(c3),
            wells: (-1.0, 1.0),
            radial_radius,
            coefficients: Some(c0),
        })
    }

    /// Scales the potential by a positive constant.
    pub fn scaled(&self, factor: f64) -> Self {
        let (f, d1, d2, d3) = (self.f.clone(), self.d1.clone(), self.d2.clone(), self.d3.clone());
        ScalarPotential {
            name: format!("{}*{}", factor, self.name),
            f: Arc::new(move |u| factor * f(u)),
            d1: Arc::new(move |u| factor * d1(u)),
            d2: Arc::new(move |u| factor * d2(u)),
            d3: Arc::new(move |u| factor * d3(u)),
            wells: self.wells,
            radial_radius: self.radial_radius,
            coefficients: self
                .coefficients
                .as_ref()
                .map(|c| c.iter().map(|v| v * factor).collect()),
        }
    }
}

/// Smallest `R ≥ 1` (on a 1/64 lattice up to 10) beyond which `u f'(u) ≥ 0`
/// holds on a sampled grid.
fn radial_radius_of(uf: &dyn Fn(f64) -> f64) -> f64 {
    let mut worst: f64 = 1.0;
    for i in 0..=2560 {
        let u = 1.0 + i as f64 / 256.0;
        if uf(u) < 0.0 || uf(-u) < 0.0 {
            worst = u;
        }
    }
    if worst > 1.0 {
        ((worst * 64.0).ceil() + 1.0) / 64.0
    } else {
        1.0
    }
}

/// Parses a comma- or whitespace-separated list of polynomial coefficients,
/// lowest degree first.
pub fn parse_polynomial(text: &str) -> Result<Vec<f64>> {
    let coeffs: std::result::Result<Vec<f64>, _> = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>())
        .collect();
    let coeffs = coeffs.map_err(|e| SilError::InvalidInput(format!("bad coefficient: {e}")))?;
    if coeffs.is_empty() {
        return Err(SilError::InvalidInput("empty coefficient list".into()));
    }
    if coeffs.len() > 32 {
        return Err(SilError::InvalidInput("polynomial degree above 31".into()));
    }
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(SilError::InvalidInput("non-finite coefficient".into()));
    }
    Ok(coeffs)
}

/// `f(u) = ½(1 − u²)²`.
pub fn make_quartic() -> ScalarPotential {
    ScalarPotential {
        name: "quartic".into(),
        f: Arc::new(|u| 0.5 * (1.0 - u * u).powi(2)),
        d1: Arc::new(|u| 2.0 * u * u * u - 2.0 * u),
        d2: Arc::new(|u| 6.0 * u * u - 2.0),
        d3: Arc::new(|u| 12.0 * u),
        wells: (-1.0, 1.0),
        radial_radius: 1.0,
        coefficients: Some(vec![0.5, 0.0, -1.0, 0.0, 0.5]),
    }
}

/// Potential on ℝᵐ with two wells related by a reflection.
#[derive(Clone)]
pub struct VectorPotential {
    pub name: String,
    pub dim: usize,
    pub eval: VectorEvalFn,
    pub grad: VectorOutFn,
    pub hess: VectorOutFn,
    pub well_minus: Vec<f64>,
    pub well_plus: Vec<f64>,
    pub radial_radius: f64,
}

impl std::fmt::Debug for VectorPotential {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("VectorPotential")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("well_minus", &self.well_minus)
            .field("well_plus", &self.well_plus)
            .finish()
    }
}

impl VectorPotential {
    pub fn value(&self, u: &[f64]) -> f64 {
        (self.eval)(u)
    }

    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        (self.grad)(u, &mut g);
        g
    }

    pub fn hessian(&self, u: &[f64]) -> DMatrix<f64> {
        let m = self.dim;
        let mut h = vec![0.0; m * m];
        (self.hess)(u, &mut h);
        DMatrix::from_row_slice(m, m, &h)
    }

    /// Unit vector from `u₋` to `u₊` and the midpoint.
    pub fn axis(&self) -> (Vec<f64>, Vec<f64>) {
        let d: Vec<f64> = self
            .well_plus
            .iter()
            .zip(&self.well_minus)
            .map(|(p, m)| p - m)
            .collect();
        let n = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        let e = d.iter().map(|v| v / n).collect();
        let c = self
            .well_plus
            .iter()
            .zip(&self.well_minus)
            .map(|(p, m)| 0.5 * (p + m))
            .collect();
        (e, c)
    }

    /// Affine reflection swapping the wells: `v ↦ v − 2((v − c)·e)e`.
    pub fn reflect(&self, v: &[f64]) -> Vec<f64> {
        let (e, c) = self.axis();
        let s: f64 = v.iter().zip(&c).zip(&e).map(|((v, c), e)| (v - c) * e).sum();
        v.iter().zip(&e).map(|(v, e)| v - 2.0 * s * e).collect()
    }

    /// Linear part of the reflection applied to a direction.
    pub fn reflect_linear(&self, v: &[f64]) -> Vec<f64> {
        let (e, _) = self.axis();
        let s: f64 = v.iter().zip(&e).map(|(v, e)| v * e).sum();
        v.iter().zip(&e).map(|(v, e)| v - 2.0 * s * e).collect()
    }

    /// Smallest eigenvalue of the well Hessians.
    pub fn well_hessian_floor(&self) -> f64 {
        let a = SymmetricEigen::new(self.hessian(&self.well_minus)).eigenvalues.min();
        let b = SymmetricEigen::new(self.hessian(&self.well_plus)).eigenvalues.min();
        a.min(b)
    }
}

/// `W(u) = ¼(|u|² − 1)² + u₂²` on ℝ² with wells `(±1, 0)`.
pub fn make_twowell() -> VectorPotential {
    VectorPotential {
        name: "twowell".into(),
        dim: 2,
        eval: Arc::new(|u| {
            let s = u[0] * u[0] + u[1] * u[1] - 1.0;
            0.25 * s * s + u[1] * u[1]
        }),
        grad: Arc::new(|u, g| {
            let s = u[0] * u[0] + u[1] * u[1] - 1.0;
            g[0] = s * u[0];
            g[1] = s * u[1] + 2.0 * u[1];
        }),
        hess: Arc::new(|u, h| {
            let s = u[0] * u[0] + u[1] * u[1] - 1.0;
            h[0] = s + 2.0 * u[0] * u[0];
            h[1] = 2.0 * u[0] * u[1];
            h[2] = h[1];
            h[3] = s + 2.0 * u[1] * u[1] + 2.0;
        }),
        well_minus: vec![-1.0, 0.0],
        well_plus: vec![1.0, 0.0],
        radial_radius: 2.0,
    }
}

/// One named invariant check.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    /// Distance to the failure boundary; negative when violated.
    pub slack: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ValidationReport {
    pub potential: String,
    pub checks: Vec<Check>,
    pub pass: bool,
    /// Smallest well Hessian eigenvalue (vector) or well curvature (scalar).
    pub well_floor: f64,
}

impl ValidationReport {
    fn new(potential: &str, checks: Vec<Check>, well_floor: f64) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        ValidationReport {
            potential: potential.to_string(),
            checks,
            pass,
            well_floor,
        }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn upper(name: &str, value: f64, bound: f64) -> Check {
    Check {
        name: name.into(),
        pass: value <= bound,
        slack: bound - value,
    }
}

fn positive(name: &str, value: f64) -> Check {
    Check {
        name: name.into(),
        pass: value > 0.0,
        slack: value,
    }
}

const FD_STEP: f64 = 1e-5;
const FD_REL_TOL: f64 = 1e-5;
const FD_POINTS: usize = 20;

fn fd_relative(fd: f64, exact: f64) -> f64 {
    (fd - exact).abs() / exact.abs().max(1.0)
}

pub fn validate_scalar(p: &ScalarPotential, tol: f64) -> ValidationReport {
    let (a, b) = p.wells;
    let grid: Vec<f64> = (0..257).map(|i| -3.0 + 6.0 * i as f64 / 256.0).collect();
    let mut checks = vec![
        upper("critical_wells", p.d1(a).abs().max(p.d1(b).abs()), tol),
        positive("well_curvature", p.min_well_curvature()),
        upper("equal_depth", (p.f(a) - p.f(b)).abs(), tol),
    ];
    let interior = grid
        .iter()
        .filter(|u| **u > a && **u < b)
        .map(|u| p.f(*u) - p.f(b))
        .fold(f64::INFINITY, f64::min);
    checks.push(positive("interior_above_wells", interior));
    let radial = grid
        .iter()
        .filter(|u| u.abs() >= p.radial_radius)
        .map(|u| u * p.d1(*u))
        .fold(f64::INFINITY, f64::min);
    checks.push(Check {
        name: "radial_growth".into(),
        pass: radial >= -tol,
        slack: radial + tol,
    });
    let mut worst: f64 = 0.0;
    for i in 0..FD_POINTS {
        let u = -3.0 + 6.0 * halton(i + 1, 2);
        let h = FD_STEP;
        worst = worst.max(fd_relative((p.f(u + h) - p.f(u - h)) / (2.0 * h), p.d1(u)));
        worst = worst.max(fd_relative((p.d1(u + h) - p.d1(u - h)) / (2.0 * h), p.d2(u)));
        worst = worst.max(fd_relative((p.d2(u + h) - p.d2(u - h)) / (2.0 * h), p.d3(u)));
    }
    checks.push(upper("derivative_consistency", worst, FD_REL_TOL));
    ValidationReport::new(&p.name, checks, p.min_well_curvature())
}

pub fn validate_vector(p: &VectorPotential, tol: f64) -> ValidationReport {
    let m = p.dim;
    let gnorm = |u: &[f64]| p.gradient(u).iter().map(|v| v * v).sum::<f64>().sqrt();
    let floor = p.well_hessian_floor();
    let mut checks = vec![
        upper(
            "critical_wells",
            gnorm(&p.well_minus).max(gnorm(&p.well_plus)),
            tol,
        ),
        positive("well_hessian_definite", floor),
        upper(
            "equal_depth",
            (p.value(&p.well_minus) - p.value(&p.well_plus)).abs(),
            tol,
        ),
    ];
    let mut samples: Vec<Vec<f64>> = Vec::new();
    for i in 0..33 {
        for j in 0..33 {
            let mut v = vec![0.0; m];
            v[0] = -2.0 + 4.0 * i as f64 / 32.0;
            if m > 1 {
                v[1] = -2.0 + 4.0 * j as f64 / 32.0;
            }
            samples.push(v);
        }
    }
    let primes = [2usize, 3, 5, 7, 11, 13, 17, 19];
    for k in 0..64 {
        let v: Vec<f64> = (0..m)
            .map(|d| -3.0 + 6.0 * halton(k + 1, primes[d % primes.len()]))
            .collect();
        samples.push(v);
    }
    let wmin = p.value(&p.well_plus);
    let sym = samples
        .iter()
        .map(|v| (p.value(&p.reflect(v)) - p.value(v)).abs() / p.value(v).abs().max(1.0))
        .fold(0.0, f64::max);
    checks.push(upper("reflection_symmetry", sym, tol));
    let dist = |a: &[f64], b: &[f64]| {
        a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    };
    let above = samples
        .iter()
        .filter(|v| dist(v, &p.well_minus) > 0.1 && dist(v, &p.well_plus) > 0.1)
        .map(|v| p.value(v) - wmin)
        .fold(f64::INFINITY, f64::min);
    checks.push(positive("two_global_minima", above));
    let radial = samples
        .iter()
        .filter(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt() >= p.radial_radius)
        .map(|v| v.iter().zip(p.gradient(v)).map(|(a, b)| a * b).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    checks.push(Check {
        name: "radial_growth".into(),
        pass: radial >= -tol,
        slack: radial + tol,
    });
    let mut worst: f64 = 0.0;
    for k in 0..FD_POINTS {
        let u: Vec<f64> = (0..m)
            .map(|d| -2.0 + 4.0 * halton(k + 1, primes[d % primes.len()]))
            .collect();
        let hess = p.hessian(&u);
        let g = p.gradient(&u);
        for c in 0..m {
            let mut up = u.clone();
            let mut dn = u.clone();
            up[c] += FD_STEP;
            dn[c] -= FD_STEP;
            let fd = (p.value(&up) - p.value(&dn)) / (2.0 * FD_STEP);
            worst = worst.max(fd_relative(fd, g[c]));
            let gu = p.gradient(&up);
            let gd = p.gradient(&dn);
            for r in 0..m {
                let fd = (gu[r] - gd[r]) / (2.0 * FD_STEP);
                worst = worst.max(fd_relative(fd, hess[(r, c)]));
            }
        }
    }
    checks.push(upper("derivative_consistency", worst, FD_REL_TOL));
    ValidationReport::new(&p.name, checks, floor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartic_values_and_validation() {
        let q = make_quartic();
        assert_eq!(q.f(1.0), 0.0);
        assert_eq!(q.f(-1.0), 0.0);
        assert_eq!(q.d2(1.0), 4.0);
        assert_eq!(2.0 * q.d1(2.0), 24.0);
        let r = validate_scalar(&q, 1e-12);
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn tilted_potential_fails_equal_depth() {
        let t = ScalarPotential::from_polynomial("tilted", &[0.5, 0.1, -1.0, 0.0, 0.5]).unwrap();
        let r = validate_scalar(&t, 1e-10);
        assert!(!r.pass);
        let c = r.check("equal_depth").unwrap();
        assert!(!c.pass);
        assert!((c.slack + 0.2).abs() < 1e-9);
    }

    #[test]
    fn polynomial_quartic_matches_closed_form() {
        let p = ScalarPotential::from_polynomial("q", &[0.5, 0.0, -1.0, 0.0, 0.5]).unwrap();
        let q = make_quartic();
        for u in [-2.0, -0.3, 0.0, 0.7, 1.5] {
            assert!((p.f(u) - q.f(u)).abs() < 1e-14);
            assert!((p.d3(u) - q.d3(u)).abs() < 1e-13);
        }
        assert_eq!(p.radial_radius, 1.0);
        assert!(validate_scalar(&p, 1e-12).pass);
    }

    #[test]
    fn twowell_validation_and_hessian() {
        let w = make_twowell();
        assert_eq!(w.gradient(&[1.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(w.gradient(&[-1.0, 0.0]), vec![0.0, 0.0]);
        let h = w.hessian(&[1.0, 0.0]);
        assert_eq!(h, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]));
        assert_eq!(w.reflect(&[0.3, -0.4]), vec![-0.3, -0.4]);
        let r = validate_vector(&w, 1e-8);
        assert!(r.pass, "{r:?}");
        assert!((r.well_floor - 2.0).abs() < 1e-14);
    }

    #[test]
    fn polynomial_parser_rejects_garbage() {
        assert_eq!(parse_polynomial("0.5, 0 -1,0 ,0.5").unwrap(), vec![0.5, 0.0, -1.0, 0.0, 0.5]);
        assert!(parse_polynomial("").is_err());
        assert!(parse_polynomial("1,x").is_err());
        assert!(parse_polynomial("nan").is_err());
    }
}
