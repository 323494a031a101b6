//! Vertex grid on the unit square `(0,1)²`, nodes stored row-major with `x`
//! varying fastest.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Grid2D {
    /// Cells in `x`; there are `nx + 1` nodes per row.
    pub nx: usize,
    pub ny: usize,
}

impl Grid2D {
    pub fn square(cells: usize) -> Self {
        Grid2D {
            nx: cells,
            ny: cells,
        }
    }

    pub fn hx(&self) -> f64 {
        1.0 / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        1.0 / self.ny as f64
    }

    /// Nodes per row.
    pub fn px(&self) -> usize {
        self.nx + 1
    }

    pub fn py(&self) -> usize {
        self.ny + 1
    }

    pub fn len(&self) -> usize {
        self.px() * self.py()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.px() + i
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.hx()
    }

    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.hy()
    }

    /// Tensor trapezoid weights, including the cell area.
    pub fn weights(&self) -> Vec<f64> {
        let wx = edge_weights(self.px());
        let wy = edge_weights(self.py());
        let area = self.hx() * self.hy();
        let mut w = Vec::with_capacity(self.len());
        for j in 0..self.py() {
            for i in 0..self.px() {
                w.push(area * wx[i] * wy[j]);
            }
        }
        w
    }

    /// Samples `f(x, y)` at every node.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for j in 0..self.py() {
            for i in 0..self.px() {
                out.push(f(self.x(i), self.y(j)));
            }
        }
        out
    }
}

/// `½, 1, …, 1, ½`.
pub fn edge_weights(points: usize) -> Vec<f64> {
    let mut w = vec![1.0; points];
    w[0] = 0.5;
    w[points - 1] = 0.5;
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_integrate_bilinear_exactly() {
        let g = Grid2D { nx: 7, ny: 5 };
        let w = g.weights();
        let f = g.sample(|x, y| 1.0 + x * y);
        let s: f64 = w.iter().zip(&f).map(|(a, b)| a * b).sum();
        assert!((s - 1.25).abs() < 1e-14);
        assert_eq!(g.index(7, 5), g.len() - 1);
    }
}
