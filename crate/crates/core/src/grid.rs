//! One-dimensional grids: strictly increasing node sets with cell helpers.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A 1D grid given by strictly increasing, finite nodes.
///
/// The grid hull is `[nodes[0], nodes[n-1]]`; functions sampled on the grid
/// are extended by zero outside the hull.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    nodes: Vec<f64>,
}

impl Grid1D {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidGrid(format!("got {} nodes", nodes.len())));
        }
        for w in nodes.windows(2) {
            if !w[0].is_finite() || !w[1].is_finite() || w[1] <= w[0] {
                return Err(Error::InvalidGrid(format!(
                    "nodes not strictly increasing near {} -> {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { nodes })
    }

    /// Uniform grid with `n` nodes on [a, b].
    pub fn uniform(a: f64, b: f64, n: usize) -> Result<Self> {
        if n < 2 || !(a < b) {
            return Err(Error::InvalidGrid(format!("uniform({a}, {b}, {n})")));
        }
        let h = (b - a) / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|i| a + h * i as f64).collect();
        nodes[n - 1] = b;
        Self::new(nodes)
    }

    /// Symmetric uniform grid on [-half_width, half_width] with `n` nodes.
    ///
    /// For odd `n` the grid contains 0 exactly; node symmetry is enforced
    /// by mirroring the positive half.
    pub fn symmetric_uniform(half_width: f64, n: usize) -> Result<Self> {
        if n < 3 || !(half_width > 0.0) {
            return Err(Error::InvalidGrid(format!("symmetric_uniform({half_width}, {n})")));
        }
        // build the positive half and mirror it, so symmetry is exact in f64
        let m = n / 2;
        let positive: Vec<f64> = if n % 2 == 1 {
            (1..=m).map(|j| half_width * j as f64 / m as f64).collect()
        } else {
            (1..=m)
                .map(|j| half_width * (2 * j - 1) as f64 / (n - 1) as f64)
                .collect()
        };
        let mut nodes: Vec<f64> = positive.iter().rev().map(|&x| -x).collect();
        if n % 2 == 1 {
            nodes.push(0.0);
        }
        nodes.extend(&positive);
        Self::new(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_cells(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Hull `[a, b]` of the grid.
    pub fn hull(&self) -> (f64, f64) {
        (self.nodes[0], self.nodes[self.nodes.len() - 1])
    }

    /// Endpoints of cell `i`.
    pub fn cell(&self, i: usize) -> (f64, f64) {
        (self.nodes[i], self.nodes[i + 1])
    }

    pub fn cell_width(&self, i: usize) -> f64 {
        self.nodes[i + 1] - self.nodes[i]
    }

    /// Cell index containing `x`, or None outside the hull. The right hull
    /// endpoint maps to the last cell.
    pub fn locate(&self, x: f64) -> Option<usize> {
        let (a, b) = self.hull();
        if x < a || x > b {
            return None;
        }
        match self.nodes.partition_point(|&t| t <= x) {
            0 => Some(0),
            p if p >= self.nodes.len() => Some(self.n_cells() - 1),
            p => Some(p - 1),
        }
    }

    /// Subdivide every cell into `factor` equal parts.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidGrid("refine factor 0".into()));
        }
        let mut nodes = Vec::with_capacity(self.n_cells() * factor + 1);
        for i in 0..self.n_cells() {
            let (a, b) = self.cell(i);
            for k in 0..factor {
                nodes.push(a + (b - a) * k as f64 / factor as f64);
            }
        }
        nodes.push(self.nodes[self.nodes.len() - 1]);
        Self::new(nodes)
    }

    /// Nodes mirror-symmetric about 0 within `tol`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        let n = self.nodes.len();
        (0..n).all(|i| (self.nodes[i] + self.nodes[n - 1 - i]).abs() <= tol)
    }

    /// New grid with extra nodes inserted (duplicates within `merge_tol` of
    /// an existing node are dropped).
    pub fn with_nodes(&self, extra: &[f64], merge_tol: f64) -> Result<Self> {
        let mut nodes = self.nodes.clone();
        nodes.extend_from_slice(extra);
        nodes.sort_by(f64::total_cmp);
        nodes.dedup_by(|a, b| (*a - *b).abs() <= merge_tol);
        Self::new(nodes)
    }
}

/// Uniform symmetric interval grid used throughout: `n` nodes on
/// [-half_width, half_width].
pub fn make_interval_grid(n: usize, half_width: f64) -> Result<Grid1D> {
    Grid1D::symmetric_uniform(half_width, n)
}
