//! Moving-plane diagnostics: reflections across a sweeping plane, the
//! anti-symmetrized potential `w_lambda`, the comparison constant `c_lambda`,
//! the critical plane `lambda_1`, and the negative-part energy bound.
//!
//! Conventions used throughout:
//! * the half line is `Sigma_lambda = { x < lambda }`;
//! * the reflected point is `x^lambda = 2 lambda - x`;
//! * the difference function is `u_lambda(x) = u(x^lambda) - u(x)`;
//! * the negative part keeps its sign: `v^- = min(v, 0)`.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;
use crate::fractional::StiffnessForm;
use crate::function::SampledFunction;
use crate::grid::Grid1D;
use crate::growth::GrowthModel;
use crate::logkernel::{convolve_log_at, KernelSign};

/// Summary of a plane sweep, emitted by [`reflection_diagnostics`].
///
/// `c_lambda` holds the comparison constant restricted to the detected
/// negative set `Sigma_lambda^-` (the printed definition); `c_lambda_full`
/// integrates the same density over all of `Sigma_lambda`, which stays
/// informative when the negative set is empty (for example, an even radially
/// decreasing input with `lambda < 0`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReflectionDiagnostics {
    pub lambda_grid: Vec<f64>,
    pub min_u_lambda: Vec<f64>,
    pub sigma_minus_measure: Vec<f64>,
    pub c_lambda: Vec<f64>,
    pub c_lambda_full: Vec<f64>,
    pub lambda1_estimate: f64,
    pub symmetry_score: f64,
}

/// The comparison constant in its three evaluated conventions.
///
/// * `midpoint`: mean-value point taken as `xi = (u + u^lambda)/2`, integrated
///   over the detected negative set `Sigma_lambda^-`.
/// * `worst_case`: upper variant with `g(max(u, u^lambda))`, same domain.
/// * `full`: decaying upper envelope `( int_{Sigma_lambda} |lambda - y| g(u(y))^2 dy )^{1/2}`.
///   On the negative set the mean-value point is below `u`, so for nonnegative
///   `u` and nondecreasing `g` this dominates `midpoint` while staying
///   informative (and strictly monotone in the plane position) when the
///   negative set is empty, e.g. for an even radially decreasing input left of
///   its center.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ComparisonConstant {
    pub midpoint: f64,
    pub worst_case: f64,
    pub full: f64,
}

const MERGE_REL_TOL: f64 = 1e-9;

/// Nodes of the half-line grid on `Sigma_lambda`: the original nodes below
/// `lambda`, the reflections of the nodes above `lambda`, and `lambda` itself.
/// Both `u` and `u(2 lambda - .)` are exactly piecewise linear on this grid.
fn sigma_grid(u: &SampledFunction, lambda: f64) -> Result<Grid1D> {
    let nodes = u.grid().nodes();
    let span = u.grid().hull().1 - u.grid().hull().0;
    let tol = MERGE_REL_TOL * span.max(lambda.abs()).max(1.0);
    let mut xs: Vec<f64> = Vec::with_capacity(2 * nodes.len() + 1);
    for &x in nodes {
        if x < lambda - tol {
            xs.push(x);
        }
        let xr = 2.0 * lambda - x;
        if xr < lambda - tol {
            xs.push(xr);
        }
    }
    xs.push(lambda);
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup_by(|a, b| (*a - *b).abs() <= tol);
    if xs.len() < 2 {
        xs = vec![lambda - 1.0, lambda];
    }
    Grid1D::new(xs)
}

/// True when the reflection of `u`'s support across `lambda` sticks out of the
/// grid hull, so the zero extension of `u` is being used for reflected values.
pub fn reflect_truncates(u: &SampledFunction, lambda: f64) -> bool {
    match u.support() {
        Some((s0, s1)) => {
            let (a, b) = u.grid().hull();
            2.0 * lambda - s1 < a || 2.0 * lambda - s0 > b
        }
        None => false,
    }
}

/// The reflected function `u(2 lambda - x)` on the mirrored grid.
pub fn reflect(u: &SampledFunction, lambda: f64) -> Result<SampledFunction> {
    let mut xs: Vec<f64> = u
        .grid()
        .nodes()
        .iter()
        .rev()
        .map(|&x| 2.0 * lambda - x)
        .collect();
    // Guard against round-off making the sequence non-increasing.
    xs.dedup_by(|a, b| (*a - *b).abs() == 0.0);
    let grid = Grid1D::new(xs)?;
    let vals: Vec<f64> = u.values().iter().rev().copied().collect();
    SampledFunction::new(grid, vals)
}

/// The difference function `u_lambda(x) = u(2 lambda - x) - u(x)` sampled on
/// the half-line grid of `Sigma_lambda` (original and mirrored nodes merged,
/// ending at `lambda` where the value is exactly zero). Values outside the
/// hull of `u` are zero-extended; see [`reflect_truncates`].
pub fn reflect_diff(u: &SampledFunction, lambda: f64) -> Result<SampledFunction> {
    let grid = sigma_grid(u, lambda)?;
    let vals: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&x| u.evaluate(2.0 * lambda - x) - u.evaluate(x))
        .collect();
    SampledFunction::new(grid, vals)
}

/// Maximal open intervals where the piecewise-linear `f` is strictly
/// negative, with sub-cell zero crossings located by linear interpolation.
pub fn negative_intervals(f: &SampledFunction) -> Vec<(f64, f64)> {
    let grid = f.grid();
    let v = f.values();
    let mut out: Vec<(f64, f64)> = Vec::new();
    let push = |a: f64, b: f64, out: &mut Vec<(f64, f64)>| {
        if b <= a {
            return;
        }
        if let Some(last) = out.last_mut() {
            if (last.1 - a).abs() <= 1e-14 * (1.0 + a.abs()) {
                last.1 = b;
                return;
            }
        }
        out.push((a, b));
    };
    for i in 0..grid.n_cells() {
        let (x0, x1) = grid.cell(i);
        let (v0, v1) = (v[i], v[i + 1]);
        if v0 < 0.0 && v1 < 0.0 {
            push(x0, x1, &mut out);
        } else if v0 < 0.0 && v1 >= 0.0 {
            let z = x0 + (x1 - x0) * v0 / (v0 - v1);
            push(x0, z, &mut out);
        } else if v0 >= 0.0 && v1 < 0.0 {
            let z = x0 + (x1 - x0) * v0 / (v0 - v1);
            push(z, x1, &mut out);
        }
    }
    out
}

/// Total length of the negative set of `f` under the sign-crossing rule.
pub fn negative_measure(f: &SampledFunction) -> f64 {
    negative_intervals(f).iter().map(|(a, b)| b - a).sum()
}

/// Exact integral of the product of two piecewise-linear functions sharing a
/// grid.
fn pl_inner(u: &SampledFunction, v: &SampledFunction) -> f64 {
    debug_assert_eq!(u.grid().n_nodes(), v.grid().n_nodes());
    let a = u.values();
    let b = v.values();
    let mut acc = 0.0;
    for i in 0..u.grid().n_cells() {
        let h = u.grid().cell_width(i);
        acc += h / 6.0 * (2.0 * a[i] * b[i] + a[i] * b[i + 1] + a[i + 1] * b[i] + 2.0 * a[i + 1] * b[i + 1]);
    }
    acc
}

/// L2 norm of the nodal negative part of `f` (crossings are not refined; the
/// error is third order in the cell width near a crossing).
fn negative_part_l2(f: &SampledFunction) -> Result<f64> {
    let m = f.map_values(|v| v.min(0.0))?;
    Ok(pl_inner(&m, &m).sqrt())
}

fn simpson<F: Fn(f64) -> Result<f64>>(f: &F, a: f64, b: f64, panels: usize) -> Result<f64> {
    let n = 2 * panels.max(1);
    let h = (b - a) / n as f64;
    let mut acc = f(a)? + f(b)?;
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h)?;
    }
    Ok(acc * h / 3.0)
}

fn integrate_intervals<F: Fn(f64) -> Result<f64>>(f: &F, intervals: &[(f64, f64)]) -> Result<f64> {
    let mut acc = 0.0;
    for &(a, b) in intervals {
        acc += simpson(f, a, b, 8)?;
    }
    Ok(acc)
}

/// The anti-symmetrized log potential
/// `w_lambda(x) = int_{Sigma_lambda} log(|x - y^lambda| / |x - y|) K_lambda(y) u_lambda(y) dy`
/// with `K_lambda` the difference quotient of `G` (zero where `u_lambda`
/// vanishes), so the density simplifies to `G(u^lambda) - G(u)`.
///
/// Requires `G(0) = 0`; `G` is expected to be nondecreasing on `[0, inf)`.
/// Returned on the half-line grid of `Sigma_lambda`; `w_lambda(lambda) = 0`
/// exactly by anti-symmetry.
pub fn w_lambda(u: &SampledFunction, model: &GrowthModel, lambda: f64) -> Result<SampledFunction> {
    let g0 = model.value(0.0)?;
    if g0.abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "w_lambda requires G(0) = 0, got G(0) = {g0:e}"
        )));
    }
    let coarse = sigma_grid(u, lambda)?;
    let fine = coarse.refine(4)?;
    // Density q(y) = K_lambda(y) u_lambda(y) = G(u(2 lambda - y)) - G(u(y)).
    let mut qv = Vec::with_capacity(fine.n_nodes());
    for &y in fine.nodes() {
        let a = model.value(u.evaluate(2.0 * lambda - y))?;
        let b = model.value(u.evaluate(y))?;
        qv.push(a - b);
    }
    let q = SampledFunction::new(fine, qv)?;
    // log(|x - y^lambda|/|x - y|) integrated against q(y):
    // int q log|y - x^lambda| dy - int q log|y - x| dy.
    let vals: Vec<f64> = coarse
        .nodes()
        .iter()
        .map(|&x| {
            let at_x = convolve_log_at(&q, x, KernelSign::Full);
            let at_xr = convolve_log_at(&q, 2.0 * lambda - x, KernelSign::Full);
            at_x - at_xr
        })
        .collect();
    SampledFunction::new(coarse, vals)
}

/// All three conventions of the comparison constant
/// `c_lambda = ( int |lambda - y| g(xi_lambda(y))^2 dy )^{1/2}`.
///
/// The mean-value point `xi_lambda` is taken at the midpoint
/// `(u + u^lambda)/2`; the `worst_case` field uses `g(max(u, u^lambda))`
/// instead, and `full` is the envelope with `g(u)` over all of
/// `Sigma_lambda`. Requires a differentiable model with `g(0) = 0`.
pub fn c_lambda_report(
    u: &SampledFunction,
    model: &GrowthModel,
    lambda: f64,
) -> Result<ComparisonConstant> {
    if !model.has_derivative() {
        return Err(Error::Domain(
            "c_lambda needs the derivative g of the growth model".into(),
        ));
    }
    let u_l = reflect_diff(u, lambda)?;
    let neg = negative_intervals(&u_l);
    let mid_density = |y: f64| -> Result<f64> {
        let xi = 0.5 * (u.evaluate(y) + u.evaluate(2.0 * lambda - y));
        let g = model.derivative(xi)?;
        Ok((lambda - y).abs() * g * g)
    };
    let worst_density = |y: f64| -> Result<f64> {
        let xi = u.evaluate(y).max(u.evaluate(2.0 * lambda - y));
        let g = model.derivative(xi)?;
        Ok((lambda - y).abs() * g * g)
    };
    let envelope_density = |y: f64| -> Result<f64> {
        let g = model.derivative(u.evaluate(y))?;
        Ok((lambda - y).abs() * g * g)
    };
    let midpoint = integrate_intervals(&mid_density, &neg)?.max(0.0).sqrt();
    let worst_case = integrate_intervals(&worst_density, &neg)?.max(0.0).sqrt();
    let cells: Vec<(f64, f64)> = (0..u_l.grid().n_cells()).map(|i| u_l.grid().cell(i)).collect();
    let full = integrate_intervals(&envelope_density, &cells)?.max(0.0).sqrt();
    Ok(ComparisonConstant {
        midpoint,
        worst_case,
        full,
    })
}

/// The printed comparison constant: midpoint convention over `Sigma_lambda^-`.
pub fn c_lambda(u: &SampledFunction, model: &GrowthModel, lambda: f64) -> Result<f64> {
    Ok(c_lambda_report(u, model, lambda)?.midpoint)
}

/// Critical plane `lambda_1 = sup { lambda : u_mu >= 0 on Sigma_mu for all
/// mu <= lambda }`, located by bisection of the predicate
/// `min_{Sigma_lambda} u_lambda >= -tol`. The tolerance defaults to
/// `1e-8 * max u`. Nodes whose reflected point falls outside the grid hull
/// are excluded from the minimum: there the zero extension of `u` would
/// manufacture spurious negativity unrelated to the function itself. Errors
/// when the predicate fails already at the lower end of the range.
pub fn lambda1_estimate(
    u: &SampledFunction,
    lambda_range: (f64, f64),
    tol: Option<f64>,
) -> Result<f64> {
    let (mut lo, mut hi) = lambda_range;
    if !(hi > lo) {
        return Err(Error::Domain("lambda range must be increasing".into()));
    }
    let tol = tol.unwrap_or(1e-8 * u.linf_norm());
    let (h0, h1) = u.grid().hull();
    let edge = 1e-12 * (h1 - h0);
    let ok = |lambda: f64| -> Result<bool> {
        let u_l = reflect_diff(u, lambda)?;
        let min = u_l
            .grid()
            .nodes()
            .iter()
            .zip(u_l.values())
            .filter(|&(&x, _)| {
                let xr = 2.0 * lambda - x;
                xr >= h0 - edge && xr <= h1 + edge
            })
            .map(|(_, &v)| v)
            .fold(f64::INFINITY, f64::min);
        Ok(min >= -tol)
    };
    if !ok(lo)? {
        return Err(Error::Solver(format!(
            "lambda1 predicate already fails at the lower range end {lo}"
        )));
    }
    if ok(hi)? {
        return Ok(hi);
    }
    let span = hi - lo;
    while hi - lo > 1e-10 * span.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if ok(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// L2 distance of `u` from its reflection about `center`, over the window
/// where both a point and its reflection lie inside the grid hull (outside
/// it the zero extension would be compared against actual values).
pub fn symmetry_score(u: &SampledFunction, center: f64) -> Result<f64> {
    let nodes = u.grid().nodes();
    let (h0, h1) = u.grid().hull();
    let span = h1 - h0;
    let tol = MERGE_REL_TOL * span.max(1.0);
    let lo = h0.max(2.0 * center - h1);
    let hi = h1.min(2.0 * center - h0);
    if hi - lo <= tol {
        return Err(Error::Domain(
            "reflection window about the center is empty".into(),
        ));
    }
    let mut xs: Vec<f64> = Vec::with_capacity(2 * nodes.len() + 2);
    xs.push(lo);
    xs.push(hi);
    for &x in nodes {
        for z in [x, 2.0 * center - x] {
            if z > lo + tol && z < hi - tol {
                xs.push(z);
            }
        }
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup_by(|a, b| (*a - *b).abs() <= tol);
    let grid = Grid1D::new(xs)?;
    let d = SampledFunction::from_fn(grid, |x| u.evaluate(2.0 * center - x) - u.evaluate(x))?;
    Ok(pl_inner(&d, &d).max(0.0).sqrt())
}

/// Both sides of the negative-part energy bound
/// `[u^-]^2 + |u^-|_2^2  <=  B(u, u^-) + int u u^-`
/// where `B` is the Gagliardo bilinear form (the right side is
/// `2 C^{-1} int (-Delta)^{1/2} u . u^- dx + int u u^- dx` rewritten through
/// `int (-Delta)^{1/2} u . v = (C/2) B(u, v)` with `C = 1/pi`).
///
/// Both sides are evaluated as exact quadratic forms on the zero-crossing
/// refined grid, where `u^- = min(u, 0)` is exactly piecewise linear.
/// A one-signed `u >= 0` yields `(0, 0)`.
pub fn negative_part_energy_bound(u: &SampledFunction) -> Result<(f64, f64)> {
    let crossings: Vec<f64> = negative_intervals(u)
        .iter()
        .flat_map(|&(a, b)| [a, b])
        .collect();
    if crossings.is_empty() && u.values().iter().all(|&v| v >= 0.0) {
        return Ok((0.0, 0.0));
    }
    let span = u.grid().hull().1 - u.grid().hull().0;
    let grid = u.grid().with_nodes(&crossings, MERGE_REL_TOL * span.max(1.0))?;
    let u2 = u.resample(&grid)?;
    let m = u2.map_values(|v| v.min(0.0))?;
    let form = StiffnessForm::assemble(&grid);
    let lhs = form.quad_form(m.values(), m.values()) + pl_inner(&m, &m);
    let rhs = form.quad_form(u2.values(), m.values()) + pl_inner(&u2, &m);
    Ok((lhs, rhs))
}

/// Reflection identity for a function `v` anti-symmetric about `lambda`:
/// returns the pair
/// `( int_R (-Delta)^{1/2} v . vbar + v vbar ,  2 int_{Sigma_lambda} (-Delta)^{1/2} v . v^- + v v^- )`
/// which agree for anti-symmetric `v`. Here `vbar` is the odd extension (about
/// `lambda`) of the negative part restricted to `Sigma_lambda`; the identity
/// holds in this reading and is exact for the discrete quadratic forms on a
/// grid symmetric about `lambda`.
pub fn reflection_identity(v: &SampledFunction, lambda: f64) -> Result<(f64, f64)> {
    let span = v.grid().hull().1 - v.grid().hull().0;
    let tol = MERGE_REL_TOL * span.max(1.0);
    let mut xs: Vec<f64> = Vec::new();
    for &x in v.grid().nodes() {
        xs.push(x);
        xs.push(2.0 * lambda - x);
    }
    for (a, b) in negative_intervals(v) {
        for z in [a, b, 2.0 * lambda - a, 2.0 * lambda - b] {
            xs.push(z);
        }
    }
    xs.push(lambda);
    // Reflected hull endpoints can land a few ulps outside the hull, where
    // the zero extension would replace the boundary value; snap them back.
    let (h0, h1) = v.grid().hull();
    for x in xs.iter_mut() {
        if (*x - h0).abs() <= tol {
            *x = h0;
        } else if (*x - h1).abs() <= tol {
            *x = h1;
        }
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup_by(|a, b| (*a - *b).abs() <= tol);
    let grid = Grid1D::new(xs)?;
    let v2 = SampledFunction::from_fn(grid.clone(), |x| v.evaluate(x))?;
    let n = grid.n_nodes();
    // Negative part restricted to the half line, and its odd extension.
    let mut mc = vec![0.0; n];
    for (i, &x) in grid.nodes().iter().enumerate() {
        if x < lambda - tol {
            mc[i] = v2.values()[i].min(0.0);
        }
    }
    let mut vbar = mc.clone();
    for (i, &x) in grid.nodes().iter().enumerate() {
        if x > lambda + tol {
            let xr = 2.0 * lambda - x;
            let j = grid
                .nodes()
                .binary_search_by(|p| p.partial_cmp(&xr).unwrap())
                .unwrap_or_else(|k| k.min(n - 1));
            let j = [j.saturating_sub(1), j, (j + 1).min(n - 1)]
                .into_iter()
                .min_by(|&a, &b| {
                    (grid.nodes()[a] - xr)
                        .abs()
                        .partial_cmp(&(grid.nodes()[b] - xr).abs())
                        .unwrap()
                })
                .unwrap();
            vbar[i] = -mc[j];
        }
    }
    let form = StiffnessForm::assemble(&grid);
    let half_lap = |c: &[f64]| form.quad_form(v2.values(), c) / (2.0 * std::f64::consts::PI);
    let mass = |c: &[f64]| {
        let f = SampledFunction::new(grid.clone(), c.to_vec()).unwrap();
        pl_inner(&v2, &f)
    };
    let full = half_lap(&vbar) + mass(&vbar);
    let twice_half = 2.0 * (half_lap(&mc) + mass(&mc));
    Ok((full, twice_half))
}

/// Fit the single constant `mu` in the comparison bound
/// `|w_lambda^-|_2 <= mu * c_lambda * |u_lambda^-|_2` across a sweep of
/// planes: `mu` is the largest observed ratio. Planes where the right side is
/// numerically zero are skipped; returns `(mu, number of planes used)`.
pub fn hls_mu_fit(
    u: &SampledFunction,
    model: &GrowthModel,
    lambdas: &[f64],
) -> Result<(f64, usize)> {
    let scale = u.linf_norm().max(1.0);
    let mut mu: f64 = 0.0;
    let mut used = 0;
    for &lambda in lambdas {
        let u_l = reflect_diff(u, lambda)?;
        let un = negative_part_l2(&u_l)?;
        let c = c_lambda(u, model, lambda)?;
        if c * un <= 1e-10 * scale * scale {
            continue;
        }
        let w_l = w_lambda(u, model, lambda)?;
        let wn = negative_part_l2(&w_l)?;
        mu = mu.max(wn / (c * un));
        used += 1;
    }
    if used == 0 {
        return Err(Error::Domain(
            "no plane in the sweep produced a nonzero comparison bound".into(),
        ));
    }
    Ok((mu, used))
}

/// Sweep `n_planes` equally spaced planes over `[lambda_min, lambda_max]`,
/// recording per-plane minima of `u_lambda`, the measure of the negative set,
/// and both comparison-constant conventions, together with the critical plane
/// over the same range and the symmetry score about it.
pub fn reflection_diagnostics(
    u: &SampledFunction,
    model: &GrowthModel,
    lambda_min: f64,
    lambda_max: f64,
    n_planes: usize,
) -> Result<ReflectionDiagnostics> {
    if n_planes < 2 || !(lambda_max > lambda_min) {
        return Err(Error::Domain(
            "need at least two planes and an increasing lambda range".into(),
        ));
    }
    let mut lambda_grid = Vec::with_capacity(n_planes);
    let mut min_u_lambda = Vec::with_capacity(n_planes);
    let mut sigma_minus = Vec::with_capacity(n_planes);
    let mut c_mid = Vec::with_capacity(n_planes);
    let mut c_full = Vec::with_capacity(n_planes);
    for k in 0..n_planes {
        let lambda =
            lambda_min + (lambda_max - lambda_min) * k as f64 / (n_planes - 1) as f64;
        let u_l = reflect_diff(u, lambda)?;
        let report = c_lambda_report(u, model, lambda)?;
        lambda_grid.push(lambda);
        min_u_lambda.push(u_l.values().iter().cloned().fold(f64::INFINITY, f64::min));
        sigma_minus.push(negative_measure(&u_l));
        c_mid.push(report.midpoint);
        c_full.push(report.full);
    }
    let lambda1 = lambda1_estimate(u, (lambda_min, lambda_max), None)?;
    let score = symmetry_score(u, lambda1)?;
    Ok(ReflectionDiagnostics {
        lambda_grid,
        min_u_lambda,
        sigma_minus_measure: sigma_minus,
        c_lambda: c_mid,
        c_lambda_full: c_full,
        lambda1_estimate: lambda1,
        symmetry_score: score,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lorentz(center: f64) -> SampledFunction {
        let grid = Grid1D::symmetric_uniform(12.0, 241).unwrap();
        SampledFunction::from_fn(grid, |x| 1.0 / (1.0 + (x - center) * (x - center))).unwrap()
    }

    #[test]
    fn even_function_at_center_plane() {
        let u = lorentz(0.0);
        let d = reflect_diff(&u, 0.0).unwrap();
        assert!(d.linf_norm() <= 1e-13);
        let model = GrowthModel::Power { p: 2.0 };
        let w = w_lambda(&u, &model, 0.0).unwrap();
        assert!(w.linf_norm() <= 1e-10);
    }

    #[test]
    fn translate_center_detection() {
        let u = lorentz(1.0);
        assert!(reflect_truncates(&u, 1.0));
        let d = reflect_diff(&u, 1.0).unwrap();
        let (h0, h1) = u.grid().hull();
        // Exactly zero wherever the reflection stays inside the hull; bounded
        // by the zero-extended tail value elsewhere.
        for (&x, &v) in d.grid().nodes().iter().zip(d.values()) {
            let xr = 2.0 - x;
            if xr >= h0 && xr <= h1 {
                assert!(v.abs() <= 1e-12, "interior mismatch at x={x}: {v:e}");
            } else {
                assert!(v.abs() <= u.evaluate(x) + 1e-12);
            }
        }
        assert!(d.linf_norm() <= 1e-2);
    }

    #[test]
    fn monotone_input_gives_signed_difference_and_potential() {
        let u = lorentz(0.0);
        let lambda = -2.0;
        let d = reflect_diff(&u, lambda).unwrap();
        assert!(d.values().iter().all(|&v| v >= -1e-13));
        let model = GrowthModel::Power { p: 2.0 };
        let w = w_lambda(&u, &model, lambda).unwrap();
        assert!(w.values().iter().all(|&v| v >= -1e-9));
    }

    #[test]
    fn kernel_positivity_sampled() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let lambda = 0.7;
        for _ in 0..300 {
            let x: f64 = lambda - rng.gen_range(1e-3..10.0);
            let y: f64 = lambda - rng.gen_range(1e-3..10.0);
            if (x - y).abs() < 1e-9 {
                continue;
            }
            let ratio = ((x - (2.0 * lambda - y)) / (x - y)).abs();
            assert!(ratio.ln() > 0.0, "kernel not positive at x={x}, y={y}");
        }
    }

    #[test]
    fn antisymmetry_on_mirrored_pairs() {
        let u = lorentz(0.3);
        let lambda = -0.9;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let x = rng.gen_range(-11.0..11.0);
            let d = u.evaluate(2.0 * lambda - x) - u.evaluate(x);
            let dr = u.evaluate(x) - u.evaluate(2.0 * lambda - x);
            assert!((d + dr).abs() <= 1e-15);
        }
        // Mirrored reflected function agrees with pointwise reflection.
        let r = reflect(&u, lambda).unwrap();
        for &x in u.grid().nodes().iter().step_by(7) {
            let xr = 2.0 * lambda - x;
            assert!((r.evaluate(xr) - u.evaluate(x)).abs() <= 1e-12);
        }
    }

    #[test]
    fn comparison_constant_conventions() {
        let u = lorentz(0.0);
        let model = GrowthModel::Power { p: 2.0 };
        // Even decreasing input, plane left of center: negative set empty.
        let r = c_lambda_report(&u, &model, -2.0).unwrap();
        assert_eq!(r.midpoint, 0.0);
        assert_eq!(r.worst_case, 0.0);
        assert!(r.full > 0.0);
        // Plane slightly right of center: negative set appears.
        let r = c_lambda_report(&u, &model, 0.3).unwrap();
        assert!(r.midpoint > 0.0);
        assert!(r.worst_case >= r.midpoint);
        assert!(r.full >= r.midpoint);
    }

    #[test]
    fn full_constant_decays_along_sweep() {
        let grid = Grid1D::symmetric_uniform(10.0, 201).unwrap();
        let u = SampledFunction::from_fn(grid, |x| 1.0 / (1.0 + x * x)).unwrap();
        let model = GrowthModel::Power { p: 2.0 };
        let mut prev = f64::INFINITY;
        let mut first = 0.0;
        let mut last = 0.0;
        for k in 0..7 {
            let lambda = -2.0 - k as f64;
            let c = c_lambda_report(&u, &model, lambda).unwrap().full;
            assert!(c < prev, "c_lambda_full not decreasing at lambda={lambda}");
            prev = c;
            if k == 0 {
                first = c;
            }
            last = c;
        }
        assert!(last < 0.1 * first);
    }

    #[test]
    fn lambda1_center_and_translation_equivariance() {
        let u = lorentz(0.0);
        let spacing = 0.1;
        let l1 = lambda1_estimate(&u, (-6.0, 6.0), None).unwrap();
        assert!(l1.abs() <= spacing);
        let shifted = lorentz(0.7);
        let l1s = lambda1_estimate(&shifted, (-6.0, 6.0), None).unwrap();
        assert!((l1s - l1 - 0.7).abs() <= spacing);
        assert!(symmetry_score(&u, l1).unwrap() <= 1e-6);
    }

    #[test]
    fn negative_part_bound_and_degenerate_case() {
        let u = lorentz(0.0);
        assert_eq!(negative_part_energy_bound(&u).unwrap(), (0.0, 0.0));
        // Hat minus a smaller shifted hat: genuine sign change.
        let grid = Grid1D::symmetric_uniform(4.0, 161).unwrap();
        let mixed = SampledFunction::from_fn(grid, |x| {
            (1.0 - (x + 1.0).abs()).max(0.0) - 0.8 * (1.0 - (x - 1.0).abs()).max(0.0)
        })
        .unwrap();
        let (lhs, rhs) = negative_part_energy_bound(&mixed).unwrap();
        assert!(lhs > 0.0);
        assert!(lhs <= rhs + 1e-4, "lhs={lhs}, rhs={rhs}");
    }

    #[test]
    fn reflection_identity_antisymmetric() {
        let lambda = 0.5;
        let grid = Grid1D::uniform(lambda - 6.0, lambda + 6.0, 301).unwrap();
        let v = SampledFunction::from_fn(grid, |x| {
            let t = x - lambda;
            t * (-t * t).exp()
        })
        .unwrap();
        let (full, twice_half) = reflection_identity(&v, lambda).unwrap();
        assert!(full.abs() > 1e-3, "test function degenerate");
        assert!(
            (full - twice_half).abs() <= 1e-10 * full.abs().max(1.0),
            "full={full}, twice_half={twice_half}"
        );
    }

    #[test]
    fn hls_mu_fit_stable_under_refinement() {
        let grid = Grid1D::symmetric_uniform(10.0, 321).unwrap();
        let u = SampledFunction::from_fn(grid, |x| {
            (-x * x).exp() + 0.6 * (-4.0 * (x - 1.2) * (x - 1.2)).exp()
        })
        .unwrap();
        let model = GrowthModel::Power { p: 2.0 };
        let lambdas: Vec<f64> = (0..7).map(|k| -0.4 + 0.2 * k as f64).collect();
        let (mu1, used1) = hls_mu_fit(&u, &model, &lambdas).unwrap();
        assert!(used1 >= 3, "only {used1} usable planes");
        assert!(mu1.is_finite() && mu1 > 0.0);
        let fine = u.resample(&u.grid().refine(2).unwrap()).unwrap();
        let (mu2, _) = hls_mu_fit(&fine, &model, &lambdas).unwrap();
        assert!(
            (mu2 - mu1).abs() <= 0.2 * mu1,
            "mu unstable under refinement: {mu1} vs {mu2}"
        );
    }

    #[test]
    fn diagnostics_sweep_shapes_and_symmetry() {
        let u = lorentz(0.0);
        let model = GrowthModel::Power { p: 2.0 };
        let d = reflection_diagnostics(&u, &model, -4.0, 1.0, 6).unwrap();
        assert_eq!(d.lambda_grid.len(), 6);
        assert_eq!(d.min_u_lambda.len(), 6);
        assert_eq!(d.sigma_minus_measure.len(), 6);
        assert_eq!(d.c_lambda.len(), 6);
        assert_eq!(d.c_lambda_full.len(), 6);
        assert!(d.sigma_minus_measure.iter().all(|&m| m >= 0.0));
        assert!(d.c_lambda.iter().all(|&c| c >= 0.0));
        assert!(d.lambda1_estimate.abs() <= 0.1);
        assert!(d.symmetry_score <= 1e-6);
        // Planes left of center see no negative set for an even decreasing u.
        assert!(d.sigma_minus_measure[0] == 0.0);
    }
}
