//! Schwarz symmetric-decreasing rearrangement of nonnegative
//! piecewise-linear functions.
//!
//! The distribution function m(t) = |{u > t}| of a piecewise-linear u is
//! piecewise linear in t between consecutive distinct node values, so its
//! inverse - the symmetric-decreasing profile - is again piecewise linear.
//! The rearrangement is therefore computed exactly (same distribution
//! function, no quadrature), on its own natural symmetric grid.

use crate::function::SampledFunction;
use crate::grid::Grid1D;
use crate::{Error, Result};

/// Measure of `{u > t}` (strict = true) or `{u >= t}` (strict = false).
fn level_measure(u: &SampledFunction, t: f64, strict: bool) -> f64 {
    let above = |v: f64| if strict { v > t } else { v >= t };
    let mut total = 0.0;
    for i in 0..u.grid().n_cells() {
        let h = u.grid().cell_width(i);
        let (a, b) = (u.values()[i], u.values()[i + 1]);
        match (above(a), above(b)) {
            (true, true) => total += h,
            (false, false) => {}
            _ => {
                // one crossing; for the boundary value itself the linear
                // sub-level set has the same measure strict or not
                total += h * (a.max(b) - t) / (a - b).abs();
            }
        }
    }
    total
}

/// Symmetric-decreasing rearrangement of a nonnegative sampled function.
///
/// Returns the exact rearrangement on its natural symmetric grid (node
/// positions are half the level-set measures). Negative nodal values are
/// rejected.
pub fn schwarz_rearrange(u: &SampledFunction) -> Result<SampledFunction> {
    if let Some(i) = u.values().iter().position(|&v| v < 0.0) {
        return Err(Error::NegativeValue { index: i });
    }
    if u.values().iter().all(|&v| v == 0.0) {
        return Ok(u.clone());
    }

    // distinct levels, descending, with 0 as the final level
    let mut levels: Vec<f64> = u.values().to_vec();
    levels.push(0.0);
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    levels.reverse();

    // profile points (measure, value); measures nondecreasing as value drops
    let mut points: Vec<(f64, f64)> = Vec::new();
    for &t in &levels {
        let a = level_measure(u, t, true);
        let b = level_measure(u, t, false);
        for m in [b.min(a), a.max(b)] {
            match points.last() {
                Some(&(mp, _)) if m <= mp => {}
                _ => points.push((m, t)),
            }
        }
    }
    if points.is_empty() || points[0].0 > 0.0 {
        points.insert(0, (0.0, levels[0]));
    }

    let mut nodes: Vec<f64> = points.iter().skip(1).rev().map(|&(m, _)| -0.5 * m).collect();
    let mut values: Vec<f64> = points.iter().skip(1).rev().map(|&(_, v)| v).collect();
    nodes.push(0.0);
    values.push(points[0].1);
    nodes.extend(points.iter().skip(1).map(|&(m, _)| 0.5 * m));
    values.extend(points.iter().skip(1).map(|&(_, v)| v));

    SampledFunction::new(Grid1D::new(nodes)?, values)
}
