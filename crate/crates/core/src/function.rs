//! Piecewise-linear sampled functions with zero extension outside the hull.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::grid::Grid1D;
use crate::{Error, Result};

/// A function sampled at grid nodes, interpreted as the piecewise-linear
/// interpolant on the hull and zero outside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledFunction {
    grid: Grid1D,
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::LengthMismatch { values: values.len(), nodes: grid.n_nodes() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: i });
        }
        Ok(Self { grid, values })
    }

    /// Sample `f` at the nodes of `grid`.
    pub fn from_fn<F: Fn(f64) -> f64>(grid: Grid1D, f: F) -> Result<Self> {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Piecewise-linear evaluation; zero outside the hull.
    pub fn evaluate(&self, x: f64) -> f64 {
        match self.grid.locate(x) {
            None => 0.0,
            Some(i) => {
                let (a, b) = self.grid.cell(i);
                let t = (x - a) / (b - a);
                self.values[i] * (1.0 - t) + self.values[i + 1] * t
            }
        }
    }

    /// Slope on cell `i`.
    pub fn slope(&self, i: usize) -> f64 {
        (self.values[i + 1] - self.values[i]) / self.grid.cell_width(i)
    }

    /// Exact integral of the interpolant (trapezoid rule is exact here).
    pub fn integral(&self) -> f64 {
        (0..self.grid.n_cells())
            .map(|i| 0.5 * (self.values[i] + self.values[i + 1]) * self.grid.cell_width(i))
            .sum()
    }

    /// Exact L^p norm of the interpolant for p >= 1, cell by cell with a
    /// split at interior sign changes.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::Domain(format!("lp_norm requires finite p >= 1, got {p}")));
        }
        let mut total = 0.0;
        for i in 0..self.grid.n_cells() {
            let h = self.grid.cell_width(i);
            let (a, b) = (self.values[i], self.values[i + 1]);
            if a * b < 0.0 {
                // sign change at tau = h * a / (a - b)
                let tau = h * a / (a - b);
                total += segment_abs_pow_integral(a.abs(), 0.0, tau, p);
                total += segment_abs_pow_integral(0.0, b.abs(), h - tau, p);
            } else {
                total += segment_abs_pow_integral(a.abs(), b.abs(), h, p);
            }
        }
        Ok(total.powf(1.0 / p))
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Smallest closed interval outside which the interpolant vanishes.
    /// Returns None for the zero function.
    pub fn support(&self) -> Option<(f64, f64)> {
        let first = self.values.iter().position(|&v| v != 0.0)?;
        let last = self.values.iter().rposition(|&v| v != 0.0).unwrap();
        let nodes = self.grid.nodes();
        let lo = if first == 0 { nodes[0] } else { nodes[first - 1] };
        let hi = if last == self.values.len() - 1 { nodes[last] } else { nodes[last + 1] };
        Some((lo, hi))
    }

    /// True when the hull endpoint values vanish, so the zero extension is
    /// continuous.
    pub fn vanishes_at_hull(&self) -> bool {
        self.values[0] == 0.0 && self.values[self.values.len() - 1] == 0.0
    }

    /// Resample onto another grid by piecewise-linear evaluation.
    pub fn resample(&self, grid: &Grid1D) -> Result<Self> {
        Self::from_fn(grid.clone(), |x| self.evaluate(x))
    }

    /// Apply `f` to every nodal value.
    pub fn map_values<F: Fn(f64) -> f64>(&self, f: F) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    /// Max over nodes of |u(x) - u(-x)| (grid need not be symmetric).
    pub fn even_defect(&self) -> f64 {
        self.grid
            .nodes()
            .iter()
            .zip(&self.values)
            .map(|(&x, &v)| (v - self.evaluate(-x)).abs())
            .fold(0.0, f64::max)
    }

    /// Serialize as two-column CSV (`x,value`) with 17 significant digits,
    /// enough for a lossless f64 round trip.
    pub fn to_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,value")?;
        for (x, v) in self.grid.nodes().iter().zip(&self.values) {
            writeln!(w, "{x:.16e},{v:.16e}")?;
        }
        Ok(())
    }

    pub fn from_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if lineno == 0 {
                if line.starts_with("x,") {
                    continue;
                }
                return Err(Error::Parse(
                    "line 1: missing 'x,value' header".to_string(),
                ));
            }
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let (xs, vs) = (parts.next(), parts.next());
            match (xs, vs) {
                (Some(xs), Some(vs)) => {
                    let x: f64 = xs
                        .trim()
                        .parse()
                        .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
                    let v: f64 = vs
                        .trim()
                        .parse()
                        .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
                    nodes.push(x);
                    values.push(v);
                }
                _ => return Err(Error::Parse(format!("line {}: expected x,value", lineno + 1))),
            }
        }
        Self::new(Grid1D::new(nodes)?, values)
    }
}

/// `∫_0^h |linear|^p dt` where the linear segment runs from `a` to `b`,
/// both nonnegative.
fn segment_abs_pow_integral(a: f64, b: f64, h: f64, p: f64) -> f64 {
    debug_assert!(a >= 0.0 && b >= 0.0 && h >= 0.0);
    if h == 0.0 {
        return 0.0;
    }
    if (a - b).abs() <= 1e-12 * (a + b) {
        return 0.5 * (a.powf(p) + b.powf(p)) * h;
    }
    h * (b.powf(p + 1.0) - a.powf(p + 1.0)) / ((p + 1.0) * (b - a))
}
