//! Growth nonlinearities G (with derivative g) and gamma-critical
//! classification.
//!
//! All kinds are even in s. Ratio tests against the critical profile
//! e^{pi s^2} (1+|s|)^{-gamma} are carried out in log space, since the
//! profile itself overflows doubles near s ~ 15.

use std::path::Path;
use std::str::FromStr;

use crate::{Error, Result};

const PI: f64 = std::f64::consts::PI;
/// exp argument beyond which f64 evaluation overflows
const EXP_LIMIT: f64 = 700.0;

/// Minimum point `c_gamma` of `s -> e^{pi s^2} / (1+s)^gamma` on `[0, inf)`.
pub fn c_gamma(gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!(
            "c_gamma requires gamma > 0, got {gamma}"
        )));
    }
    Ok(((1.0 + 2.0 * gamma / PI).sqrt() - 1.0) / 2.0)
}

/// A parameterized even nonlinearity.
#[derive(Debug, Clone, PartialEq)]
pub enum GrowthModel {
    /// `G(s) = |s|^p`
    Power { p: f64 },
    /// `G(s) = c e^{pi s^2} / (1+|s|)^gamma`
    CriticalFamily { gamma: f64, c: f64 },
    /// `G(s) = c (e^{pi s^2} / (1+|s|)^gamma - 1)`; vanishes at 0 so it can
    /// feed the whole-line functional, but is not monotone near 0
    CriticalShifted { gamma: f64, c: f64 },
    /// `e^{pi s^2} - 1` up to `c_gamma`, then the critical profile shifted
    /// to match continuously (kink at `c_gamma`); requires gamma > 1
    PaperPiecewise { gamma: f64 },
    /// Monotone cubic interpolation of `(s, G)` samples on `s >= 0`;
    /// derivative requests are refused
    CustomTable { s: Vec<f64>, g: Vec<f64> },
}

impl GrowthModel {
    pub fn from_table(s: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        if s.len() != g.len() || s.len() < 2 {
            return Err(Error::Domain("growth table needs >= 2 (s, G) pairs".into()));
        }
        if s[0] != 0.0 || s.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain(
                "growth table abscissae must start at 0 and strictly increase".into(),
            ));
        }
        if let Some(i) = g.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::NegativeValue { index: i });
        }
        Ok(GrowthModel::CustomTable { s, g })
    }

    pub fn from_table_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut s = Vec::new();
        let mut g = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(',').map(str::trim);
            let (a, b) = (parts.next().unwrap_or(""), parts.next().unwrap_or(""));
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(x), Ok(y)) => {
                    s.push(x);
                    g.push(y);
                }
                _ if s.is_empty() => {} // header
                _ => return Err(Error::Parse(format!("bad growth table line: {line}"))),
            }
        }
        Self::from_table(s, g)
    }

    /// True for kinds satisfying the standing evenness/monotonicity
    /// assumption. The critical profile itself dips until `c_gamma` when
    /// `gamma > 0` (which is what the piecewise kind repairs), and shifted
    /// kinds go negative near the origin.
    pub fn is_monotone_kind(&self) -> bool {
        match *self {
            GrowthModel::Power { .. } | GrowthModel::PaperPiecewise { .. } => true,
            GrowthModel::CriticalFamily { gamma, .. } => gamma == 0.0,
            GrowthModel::CriticalShifted { .. } => false,
            GrowthModel::CustomTable { ref g, .. } => g.windows(2).all(|w| w[0] <= w[1]),
        }
    }

    pub fn has_derivative(&self) -> bool {
        !matches!(self, GrowthModel::CustomTable { .. })
    }

    /// `G(s)` and, when requested and available, `g(s) = G'(s)`.
    ///
    /// Evenness is structural: all kinds evaluate through `|s|`, and the
    /// derivative is odd.
    pub fn eval(&self, s: f64, want_derivative: bool) -> Result<(f64, Option<f64>)> {
        if !s.is_finite() {
            return Err(Error::Domain(format!("growth model evaluated at {s}")));
        }
        let a = s.abs();
        let sign = if s < 0.0 { -1.0 } else { 1.0 };
        let (v, d) = match *self {
            GrowthModel::Power { p } => {
                let v = a.powf(p);
                let d = if a == 0.0 && p <= 1.0 {
                    if p == 1.0 { 1.0 } else { f64::NAN }
                } else {
                    p * a.powf(p - 1.0)
                };
                (v, Some(d))
            }
            GrowthModel::CriticalFamily { gamma, c } => {
                let (v, d) = critical_profile(a, gamma)?;
                (c * v, Some(c * d))
            }
            GrowthModel::CriticalShifted { gamma, c } => {
                let (v, d) = critical_profile(a, gamma)?;
                (c * (v - 1.0), Some(c * d))
            }
            GrowthModel::PaperPiecewise { gamma } => {
                if gamma <= 1.0 {
                    return Err(Error::Domain("piecewise kind requires gamma > 1".into()));
                }
                let cg = c_gamma(gamma)?;
                if a <= cg {
                    let e = (PI * a * a).exp_m1();
                    (e, Some(2.0 * PI * a * (e + 1.0)))
                } else {
                    let (v, d) = critical_profile(a, gamma)?;
                    let (vc, _) = critical_profile(cg, gamma)?;
                    let shift = (PI * cg * cg).exp_m1() - vc;
                    (v + shift, Some(d))
                }
            }
            GrowthModel::CustomTable { ref s, ref g } => {
                if a > *s.last().unwrap() {
                    return Err(Error::Domain(format!(
                        "growth table evaluated beyond its range at |s| = {a}"
                    )));
                }
                (pchip_eval(s, g, a), None)
            }
        };
        let d = if want_derivative {
            match d {
                Some(d) if d.is_finite() => Some(sign * d),
                Some(_) => {
                    return Err(Error::IllConditionedPoint {
                        x: s,
                        reason: "derivative singular at the origin".into(),
                    })
                }
                None => {
                    return Err(Error::Domain(
                        "growth table kinds have no derivative".into(),
                    ))
                }
            }
        } else {
            None
        };
        Ok((v, d))
    }

    pub fn value(&self, s: f64) -> Result<f64> {
        Ok(self.eval(s, false)?.0)
    }

    pub fn derivative(&self, s: f64) -> Result<f64> {
        Ok(self.eval(s, true)?.1.unwrap())
    }

    /// `log G(|s|)`, overflow-free for the exponential kinds (`-inf` where
    /// G vanishes). Used by the classification routines.
    pub fn log_value(&self, s: f64) -> Result<f64> {
        let a = s.abs();
        match *self {
            GrowthModel::Power { p } => Ok(p * a.ln()),
            GrowthModel::CriticalFamily { gamma, c } => {
                Ok(c.ln() + PI * a * a - gamma * a.ln_1p())
            }
            GrowthModel::CriticalShifted { gamma, c } => {
                let t = PI * a * a - gamma * a.ln_1p();
                // log(c (e^t - 1)); negative t (near 0) means G < 0
                if t <= 0.0 {
                    return Err(Error::Domain(
                        "shifted kind is nonpositive at this s".into(),
                    ));
                }
                Ok(c.ln() + t + (-(-t).exp_m1()).ln())
            }
            GrowthModel::PaperPiecewise { gamma } => {
                let cg = c_gamma(gamma)?;
                if a <= cg {
                    let t = PI * a * a;
                    Ok(t + (-(-t).exp_m1()).ln())
                } else {
                    let t = PI * a * a - gamma * a.ln_1p();
                    let (vc, _) = critical_profile(cg, gamma)?;
                    let shift = (PI * cg * cg).exp_m1() - vc;
                    // G = e^t + shift with |shift| small against e^t far out
                    Ok(t + (shift * (-t).exp()).ln_1p())
                }
            }
            GrowthModel::CustomTable { .. } => Ok(self.value(a)?.ln()),
        }
    }
}

/// `e^{pi a^2} / (1+a)^gamma` and its derivative, `a >= 0`.
fn critical_profile(a: f64, gamma: f64) -> Result<(f64, f64)> {
    let t = PI * a * a - gamma * a.ln_1p();
    if t > EXP_LIMIT {
        return Err(Error::Overflow {
            lo: a,
            hi: a,
            exponent: t,
        });
    }
    let v = t.exp();
    Ok((v, v * (2.0 * PI * a - gamma / (1.0 + a))))
}

/// Monotone (Fritsch-Carlson limited) cubic Hermite interpolation.
fn pchip_eval(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    let k = match xs.binary_search_by(|v| v.total_cmp(&x)) {
        Ok(i) => return ys[i],
        Err(i) => i.clamp(1, n - 1) - 1,
    };
    let secant = |i: usize| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
    let slope = |i: usize| -> f64 {
        if i == 0 {
            secant(0)
        } else if i == n - 1 {
            secant(n - 2)
        } else {
            let (dl, dr) = (secant(i - 1), secant(i));
            if dl * dr <= 0.0 {
                0.0
            } else {
                // harmonic mean keeps the interpolant monotone
                2.0 / (1.0 / dl + 1.0 / dr)
            }
        }
    };
    let h = xs[k + 1] - xs[k];
    let t = (x - xs[k]) / h;
    let (m0, m1) = (slope(k) * h, slope(k + 1) * h);
    let t2 = t * t;
    let t3 = t2 * t;
    ys[k] * (2.0 * t3 - 3.0 * t2 + 1.0)
        + m0 * (t3 - 2.0 * t2 + t)
        + ys[k + 1] * (-2.0 * t3 + 3.0 * t2)
        + m1 * (t3 - t2)
}

impl FromStr for GrowthModel {
    type Err = Error;

    /// `power:2`, `critical:gamma=2[,c=1]`, `shifted:gamma=2[,c=1]`,
    /// `paper:gamma=2`, `table:path.csv`
    fn from_str(spec: &str) -> Result<Self> {
        let (kind, args) = spec
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("growth spec `{spec}` missing `:`")))?;
        let parse_kv = |args: &str| -> Result<Vec<(String, f64)>> {
            args.split(',')
                .filter(|p| !p.is_empty())
                .map(|p| {
                    let (k, v) = p
                        .split_once('=')
                        .ok_or_else(|| Error::Parse(format!("expected key=value in `{p}`")))?;
                    let v: f64 = v
                        .trim()
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad number `{v}`")))?;
                    Ok((k.trim().to_string(), v))
                })
                .collect()
        };
        let lookup = |kv: &[(String, f64)], key: &str, default: Option<f64>| -> Result<f64> {
            kv.iter()
                .find(|(k, _)| k == key)
                .map(|&(_, v)| v)
                .or(default)
                .ok_or_else(|| Error::Parse(format!("growth spec `{spec}` missing `{key}`")))
        };
        match kind {
            "power" => {
                let p: f64 = args
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad power exponent `{args}`")))?;
                if p <= 0.0 {
                    return Err(Error::Parse("power exponent must be positive".into()));
                }
                Ok(GrowthModel::Power { p })
            }
            "critical" | "shifted" => {
                let kv = parse_kv(args)?;
                let gamma = lookup(&kv, "gamma", None)?;
                let c = lookup(&kv, "c", Some(1.0))?;
                if gamma < 0.0 || c <= 0.0 {
                    return Err(Error::Parse("need gamma >= 0 and c > 0".into()));
                }
                Ok(if kind == "critical" {
                    GrowthModel::CriticalFamily { gamma, c }
                } else {
                    GrowthModel::CriticalShifted { gamma, c }
                })
            }
            "paper" => {
                let kv = parse_kv(args)?;
                let gamma = lookup(&kv, "gamma", None)?;
                if gamma <= 1.0 {
                    return Err(Error::Parse("piecewise kind requires gamma > 1".into()));
                }
                Ok(GrowthModel::PaperPiecewise { gamma })
            }
            "table" => Self::from_table_csv(Path::new(args.trim())),
            other => Err(Error::Parse(format!("unknown growth kind `{other}`"))),
        }
    }
}

/// Certificate-bearing result of the gamma-critical growth probes.
#[derive(Debug, Clone, serde::Serialize)]
pub struct GrowthClassification {
    pub gamma: f64,
    /// sup of G(s) (1+|s|)^gamma e^{-pi s^2} stable under doubling s_max
    pub at_most: bool,
    pub at_most_log_sup: f64,
    pub at_most_arg: f64,
    /// inf over |s| >= s0 of G(s) |s|^gamma e^{-pi s^2} stable and finite
    pub at_least: bool,
    pub at_least_log_inf: f64,
    pub s0: f64,
}

impl GrowthClassification {
    /// Constant `c1` with `G(s) >= c1 e^{pi s^2} / |s|^gamma` for `|s| >= s0`.
    pub fn lower_constant(&self) -> f64 {
        self.at_least_log_inf.exp()
    }
}

/// Extremum of `log G(s) - pi s^2 + gamma * weight(s)` over a dense grid
/// on `[lo, hi]`; `maximize` picks sup vs inf.
fn log_ratio_extremum<W: Fn(f64) -> f64>(
    model: &GrowthModel,
    gamma: f64,
    weight: W,
    lo: f64,
    hi: f64,
    maximize: bool,
) -> (f64, f64) {
    const SAMPLES: usize = 4000;
    let mut best = if maximize {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    };
    let mut arg = lo;
    for j in 0..=SAMPLES {
        let s = lo + (hi - lo) * j as f64 / SAMPLES as f64;
        let Ok(lg) = model.log_value(s) else { continue };
        let r = lg - PI * s * s + gamma * weight(s);
        if r.is_nan() {
            continue;
        }
        if (maximize && r > best) || (!maximize && r < best) {
            best = r;
            arg = s;
        }
    }
    (best, arg)
}

/// Probe the two halves of the gamma-critical growth condition.
///
/// "Finite sup" is operationalized as stability: the log-extremum over
/// `[0, s_max]` moves by less than `log(1.01)` when `s_max` doubles.
pub fn gamma_critical_classify(
    model: &GrowthModel,
    gamma: f64,
    s_grid_max: f64,
) -> Result<GrowthClassification> {
    if !(s_grid_max >= 10.0) {
        return Err(Error::Domain("classification needs s_grid_max >= 10".into()));
    }
    let drift_tol = 1.01f64.ln();

    let up = |s: f64| (1.0 + s).ln();
    let (sup1, arg1) = log_ratio_extremum(model, gamma, up, 0.0, s_grid_max, true);
    let (sup2, arg2) = log_ratio_extremum(model, gamma, up, 0.0, 2.0 * s_grid_max, true);
    let at_most = sup2.is_finite() && (sup2 - sup1).abs() < drift_tol;

    let s0 = 1.0;
    let down = |s: f64| s.ln();
    let (inf1, _) = log_ratio_extremum(model, gamma, down, s0, s_grid_max, false);
    let (inf2, _) = log_ratio_extremum(model, gamma, down, s0, 2.0 * s_grid_max, false);
    let at_least = inf2.is_finite() && (inf2 - inf1).abs() < drift_tol;

    Ok(GrowthClassification {
        gamma,
        at_most,
        at_most_log_sup: sup2,
        at_most_arg: if at_most { arg1 } else { arg2 },
        at_least,
        at_least_log_inf: inf2,
        s0,
    })
}
