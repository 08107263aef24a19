//! Logarithmic-kernel quadrature for piecewise-linear functions.
//!
//! Every bilinear form `∬ v(x) w(y) k(x-y) dx dy` with k one of
//! `log(1/|t|)`, `log^+(1/|t|)`, `log^+|t|` is reduced per cell pair to a
//! single integral `∫ g(t) k(t) dt` of the line correlation
//! `g(t) = ∫ v(x) w(x-t) dx`. On each smooth piece g is an exact cubic, so
//! the t-integral is evaluated exactly: cubic interpolation against exact
//! `t^k log t` moments on pieces touching the singularity, dyadic 16-point
//! Gauss elsewhere. Kernel sign changes at |t| = 1 and the singularity at
//! t = 0 are piece boundaries, never interior points.

use serde::{Deserialize, Serialize};

use crate::function::SampledFunction;
use crate::grid::Grid1D;
use crate::quad::{integrate_cubic_log_at_zero, integrate_smooth_log};

/// Which part of the logarithmic kernel to integrate.
///
/// `Full` is `log(1/|t|)`; `Plus` its positive part `log^+(1/|t|)`
/// (supported on |t| <= 1); `Minus` the tail part `log^+|t|` (supported on
/// |t| >= 1). `Full = Plus - Minus` holds exactly, piece by piece.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelSign {
    Full,
    Plus,
    Minus,
}

impl KernelSign {
    /// Coefficient of `log|t|` on a region, by a sample point inside it.
    fn log_weight(self, t_sample: f64) -> f64 {
        let inside = t_sample.abs() <= 1.0;
        match self {
            KernelSign::Full => -1.0,
            KernelSign::Plus => {
                if inside {
                    -1.0
                } else {
                    0.0
                }
            }
            KernelSign::Minus => {
                if inside {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }
}

/// `∫_a^b g(t) log|t| dt` for g smooth on [a, b] with 0 not interior.
fn smooth_against_log<F: Fn(f64) -> f64>(g: &F, a: f64, b: f64) -> f64 {
    debug_assert!(a < b && !(a < 0.0 && b > 0.0));
    if b <= 0.0 {
        // mirror to the positive axis
        return smooth_against_log_positive(&|s: f64| g(-s), -b, -a);
    }
    smooth_against_log_positive(g, a, b)
}

fn smooth_against_log_positive<F: Fn(f64) -> f64>(g: &F, a: f64, b: f64) -> f64 {
    if a <= (1e-13 * b).max(1e-300) {
        // piece touches the singularity: exact cubic-times-log moments
        // (the sliver [0, a] it absorbs is O(a log a), below roundoff)
        integrate_cubic_log_at_zero(g, b)
    } else {
        integrate_smooth_log(g, a, b)
    }
}

/// `∫_a^b g(t) k(t) dt` with splits at t in {-1, 0, 1}.
fn piece_against_kernel<F: Fn(f64) -> f64>(g: &F, a: f64, b: f64, kernel: KernelSign) -> f64 {
    let mut cuts = [a, b, b, b, b];
    let mut n = 1;
    for c in [-1.0, 0.0, 1.0] {
        if a < c && c < b {
            cuts[n] = c;
            n += 1;
        }
    }
    cuts[n] = b;
    let mut total = 0.0;
    for w in cuts[..=n].windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        let weight = kernel.log_weight(0.5 * (lo + hi));
        if weight != 0.0 {
            total += weight * smooth_against_log(g, lo, hi);
        }
    }
    total
}

type Block = [f64; 4];

fn block_axpy(acc: &mut Block, s: f64, b: Block) {
    for k in 0..4 {
        acc[k] += s * b[k];
    }
}

/// Contribution of the cell pair `cx x cy` to the kernel Gram block:
/// entries are `∬ phi_a(x) k(x-y) psi_b(y) dx dy` for the four combinations
/// of left/right shape functions, ordered [LL, LR, RL, RR].
pub fn cell_pair_block(cx: (f64, f64), cy: (f64, f64), kernel: KernelSign) -> Block {
    let (x0, x1) = cx;
    let (y0, y1) = cy;
    let (hx, hy) = (x1 - x0, y1 - y0);

    // line correlation of the four shape products at offset t
    let g = |t: f64, out: &mut Block| {
        *out = [0.0; 4];
        let lo = x0.max(y0 + t);
        let hi = x1.min(y1 + t);
        if hi <= lo {
            return;
        }
        let c = 0.5 * (lo + hi);
        let h = 0.5 * (hi - lo);
        // 2-point Gauss is exact for the quadratic integrand
        const XG: f64 = 0.577_350_269_189_625_8;
        for xq in [c - h * XG, c + h * XG] {
            let (pl, pr) = ((x1 - xq) / hx, (xq - x0) / hx);
            let yq = xq - t;
            let (ql, qr) = ((y1 - yq) / hy, (yq - y0) / hy);
            block_axpy(out, h, [pl * ql, pl * qr, pr * ql, pr * qr]);
        }
    };

    // breakpoints of the piecewise-cubic correlation
    let mut bp = [x0 - y1, x0 - y0, x1 - y1, x1 - y0];
    bp.sort_by(f64::total_cmp);

    let mut out = [0.0; 4];
    for (k, slot) in out.iter_mut().enumerate() {
        let gk = |t: f64| {
            let mut b = [0.0; 4];
            g(t, &mut b);
            b[k]
        };
        for w in bp.windows(2) {
            if w[1] > w[0] {
                *slot += piece_against_kernel(&gk, w[0], w[1], kernel);
            }
        }
    }
    out
}

/// `∬ v(x) w(y) k(x-y) dx dy` for piecewise-linear v, w (zero extended).
pub fn bilinear(v: &SampledFunction, w: &SampledFunction, kernel: KernelSign) -> f64 {
    let same = v == w;
    let (gv, gw) = (v.grid(), w.grid());
    let mut total = 0.0;
    for i in 0..gv.n_cells() {
        let cx = gv.cell(i);
        let (va, vb) = (v.values()[i], v.values()[i + 1]);
        if va == 0.0 && vb == 0.0 {
            continue;
        }
        let j_start = if same { i } else { 0 };
        for j in j_start..gw.n_cells() {
            let (wa, wb) = (w.values()[j], w.values()[j + 1]);
            if wa == 0.0 && wb == 0.0 {
                continue;
            }
            let b = cell_pair_block(cx, gw.cell(j), kernel);
            let mut s = va * (wa * b[0] + wb * b[1]) + vb * (wa * b[2] + wb * b[3]);
            if same && j > i {
                s *= 2.0; // kernel is even, so (i,j) and (j,i) match
            }
            total += s;
        }
    }
    total
}

/// Nodal Gram matrix `K[i][j] = ∬ phi_i(x) k(x-y) phi_j(y) dx dy` on one
/// grid, stored row-major.
pub struct KernelMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl KernelMatrix {
    pub fn assemble(grid: &Grid1D, kernel: KernelSign) -> Self {
        let n = grid.n_nodes();
        let mut data = vec![0.0; n * n];
        for i in 0..grid.n_cells() {
            for j in i..grid.n_cells() {
                let b = cell_pair_block(grid.cell(i), grid.cell(j), kernel);
                let entries = [
                    (i, j, b[0]),
                    (i, j + 1, b[1]),
                    (i + 1, j, b[2]),
                    (i + 1, j + 1, b[3]),
                ];
                for (r, c, v) in entries {
                    data[r * n + c] += v;
                    if j > i {
                        data[c * n + r] += v;
                    }
                }
            }
        }
        Self { n, data }
    }

    /// y = K v
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n);
        let mut out = vec![0.0; self.n];
        for (r, row) in self.data.chunks_exact(self.n).enumerate() {
            out[r] = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
        out
    }

    /// v^T K w
    pub fn quad_form(&self, v: &[f64], w: &[f64]) -> f64 {
        self.matvec(w).iter().zip(v).map(|(a, b)| a * b).sum()
    }
}

/// Pointwise convolution `∫ k(x-y) v(y) dy` at a single point x.
pub fn convolve_log_at(v: &SampledFunction, x: f64, kernel: KernelSign) -> f64 {
    let grid = v.grid();
    let mut total = 0.0;
    for i in 0..grid.n_cells() {
        let (y0, y1) = grid.cell(i);
        let (va, vb) = (v.values()[i], v.values()[i + 1]);
        if va == 0.0 && vb == 0.0 {
            continue;
        }
        // t = x - y runs over [x - y1, x - y0]; v(x - t) is linear there
        let g = |t: f64| {
            let y = x - t;
            va + (vb - va) * (y - y0) / (y1 - y0)
        };
        total += piece_against_kernel(&g, x - y1, x - y0, kernel);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_interval_grid;
    use crate::quad::adaptive;
    use approx::assert_relative_eq;

    fn plateau(a: f64, b: f64) -> SampledFunction {
        let g = Grid1D::new(vec![a, b]).unwrap();
        SampledFunction::new(g, vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn plateau_full_kernel_matches_closed_form() {
        // ∬_{[-1,1]^2} log(1/|x-y|) = 6 - 4 log 2
        let v = plateau(-1.0, 1.0);
        let got = bilinear(&v, &v, KernelSign::Full);
        assert_relative_eq!(got, 6.0 - 4.0 * 2.0f64.ln(), epsilon = 1e-12);

        // ∬_{[0,1]^2} log(1/|x-y|) = 3/2
        let v = plateau(0.0, 1.0);
        assert_relative_eq!(bilinear(&v, &v, KernelSign::Full), 1.5, epsilon = 1e-13);
    }

    #[test]
    fn sign_split_is_exact() {
        let g = Grid1D::new(vec![-2.0, -0.5, 0.3, 1.1, 2.5]).unwrap();
        let v = SampledFunction::new(g.clone(), vec![0.0, 1.0, -0.4, 2.0, 0.0]).unwrap();
        let w = SampledFunction::new(g, vec![0.0, 0.3, 1.5, -0.2, 0.0]).unwrap();
        let full = bilinear(&v, &w, KernelSign::Full);
        let plus = bilinear(&v, &w, KernelSign::Plus);
        let minus = bilinear(&v, &w, KernelSign::Minus);
        assert_relative_eq!(full, plus - minus, epsilon = 1e-12 * plus.abs().max(1.0));
    }

    #[test]
    fn plus_part_matches_adaptive_reference() {
        // wide plateau: Phi_plus = ∬_{|x-y|<=1} -log|x-y| over [-2,2]^2
        // inner integral has the closed form per x; integrate adaptively
        let v = plateau(-2.0, 2.0);
        let got = bilinear(&v, &v, KernelSign::Plus);
        let inner = |x: f64| {
            let lo = (x - 1.0).max(-2.0);
            let hi = (x + 1.0).min(2.0);
            -(crate::quad::log_moment(0, lo - x, hi - x))
        };
        let reference = adaptive(&inner, -2.0, 2.0, 1e-12, 1e-12).unwrap().value;
        assert_relative_eq!(got, reference, epsilon = 1e-10);
    }

    #[test]
    fn matrix_agrees_with_streaming_bilinear() {
        let g = make_interval_grid(17, 1.5).unwrap();
        let v = SampledFunction::from_fn(g.clone(), |x| (1.0 - x * x).max(0.0)).unwrap();
        let w = SampledFunction::from_fn(g.clone(), |x| x.cos()).unwrap();
        for kernel in [KernelSign::Full, KernelSign::Plus, KernelSign::Minus] {
            let k = KernelMatrix::assemble(&g, kernel);
            assert_relative_eq!(
                k.quad_form(v.values(), w.values()),
                bilinear(&v, &w, kernel),
                max_relative = 1e-11
            );
        }
    }

    #[test]
    fn convolution_matches_closed_forms() {
        // plateau on (-1,1): (log(1/|.|) * 1)(0) = 2, and at 0.5 it is
        // -∫_{-1}^{1} log|0.5-y| dy = 1.5 - 1.5 log 1.5 + 0.5 log 2... use
        // the moment primitive directly as reference
        let v = plateau(-1.0, 1.0);
        let w0 = convolve_log_at(&v, 0.0, KernelSign::Full);
        assert_relative_eq!(w0, 2.0, epsilon = 1e-13);
        let w_half = convolve_log_at(&v, 0.5, KernelSign::Full);
        let reference = -crate::quad::log_moment(0, 0.5 - 1.0, 0.5 + 1.0);
        assert_relative_eq!(w_half, reference, epsilon = 1e-13);
        // far outside the support the kernel tail dominates and is negative
        let w_far = convolve_log_at(&v, 10.0, KernelSign::Full);
        assert!(w_far < 0.0);
        assert_relative_eq!(w_far, -crate::quad::log_moment(0, 9.0, 11.0), epsilon = 1e-12);
    }

    #[test]
    fn bilinear_is_symmetric_and_bilinear() {
        let g = Grid1D::new(vec![-1.0, -0.2, 0.4, 1.0]).unwrap();
        let v = SampledFunction::new(g.clone(), vec![0.0, 0.7, -0.3, 0.0]).unwrap();
        let w = SampledFunction::new(g.clone(), vec![0.0, -1.1, 0.6, 0.0]).unwrap();
        let b_vw = bilinear(&v, &w, KernelSign::Full);
        let b_wv = bilinear(&w, &v, KernelSign::Full);
        assert_relative_eq!(b_vw, b_wv, max_relative = 1e-12);
        let v2 = v.map_values(|t| 3.0 * t).unwrap();
        assert_relative_eq!(
            bilinear(&v2, &w, KernelSign::Full),
            3.0 * b_vw,
            max_relative = 1e-12
        );
    }
}
