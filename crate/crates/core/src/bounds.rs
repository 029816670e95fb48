//! Special functions and numeric checks of the inequalities used in the
//! running-time analysis.

use std::f64::consts::E;

use crate::error::{Error, Result};
use crate::quadrature::{adaptive_simpson, QuadratureSpec};

/// Offset logarithmic integral `li(x) = int_2^x dt / ln t`.
pub fn log_integral(x: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !(x >= 2.0) || !x.is_finite() {
        return Err(Error::Domain(format!("li needs x >= 2, got {x}")));
    }
    Ok(li_between(2.0, x, spec))
}

fn li_between(a: f64, b: f64, spec: &QuadratureSpec) -> f64 {
    if b <= a {
        return 0.0;
    }
    // doubling panels keep the error control local for large b
    let mut acc = 0.0;
    let mut lo = a;
    while lo < b {
        let hi = (lo * 2.0).min(b);
        acc += adaptive_simpson(|t| 1.0 / t.ln(), lo, hi, spec.abs_tol, spec.max_depth);
        lo = hi;
    }
    acc
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WBranch {
    /// `W_0`, defined for `x >= -1/e`.
    Principal,
    /// `W_{-1}`, defined for `-1/e <= x < 0`.
    Lower,
}

/// Lambert W by Halley iteration.
pub fn lambert_w(branch: WBranch, x: f64) -> Result<f64> {
    let inv_e = (-1.0f64).exp();
    if x.is_nan() || x < -inv_e - 1e-15 {
        return Err(Error::Domain(format!("W undefined at {x}")));
    }
    if branch == WBranch::Lower && x >= 0.0 {
        return Err(Error::Domain(format!("lower branch needs x < 0, got {x}")));
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let q = (1.0 + E * x).max(0.0);
    if q == 0.0 {
        return Ok(-1.0);
    }
    let w0 = match branch {
        _ if x < -0.25 => {
            let p = (2.0 * q).sqrt();
            let p = if branch == WBranch::Lower { -p } else { p };
            -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
        }
        WBranch::Principal if x < 3.0 => x.ln_1p(),
        WBranch::Principal => {
            let (l1, l2) = (x.ln(), x.ln().ln());
            l1 - l2 + l2 / l1
        }
        WBranch::Lower => {
            let (l1, l2) = ((-x).ln(), (-(-x).ln()).ln());
            l1 - l2 + l2 / l1
        }
    };
    let mut w = w0;
    for _ in 0..100 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            break;
        }
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * w.abs().max(1.0) {
            break;
        }
    }
    Ok(w)
}

/// `W_{-1}(-e^{-u-1}) > -1 - sqrt(2u) - u`, up to `1e-9`.
pub fn verify_chatzigeorgiou(u: f64) -> Result<bool> {
    if !(u > 0.0) {
        return Err(Error::Domain(format!("u must be positive, got {u}")));
    }
    let w = lambert_w(WBranch::Lower, -(-u - 1.0).exp())?;
    Ok(w > -1.0 - (2.0 * u).sqrt() - u - 1e-9)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum GammaForm {
    /// `x + x^(b/(1-b)) = 1`
    Statement,
    /// `x + x^((1-b)/b) = 1`
    #[default]
    Proof,
}

/// Root in `(0,1)` of `x + x^p = 1` for the exponent selected by `form`.
pub fn solve_gamma(b: f64, form: GammaForm) -> Result<f64> {
    if !(b > 0.0 && b < 1.0) {
        return Err(Error::Domain(format!("b {b} not in (0,1)")));
    }
    let p = match form {
        GammaForm::Statement => b / (1.0 - b),
        GammaForm::Proof => (1.0 - b) / b,
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if mid + mid.powf(p) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RecurrenceParams {
    Hard { b: f64, c: f64, gamma: f64 },
    Simple { a: f64, b: f64 },
}

/// A computed sequence `M_1..M_k` next to its reference curve.
#[derive(Clone, Debug, PartialEq)]
pub struct RecurrenceTrace {
    pub params: RecurrenceParams,
    pub values: Vec<f64>,
    /// Lower bound (hard recurrence) or growth-order comparison (simple).
    pub bounds: Vec<f64>,
}

impl RecurrenceTrace {
    /// First 1-based index where `M_k < bound_k` beyond a relative slack.
    pub fn first_violation(&self, rel_slack: f64) -> Option<usize> {
        self.values
            .iter()
            .zip(&self.bounds)
            .position(|(m, b)| *m < b * (1.0 - rel_slack))
            .map(|i| i + 1)
    }

    pub fn max_ratio(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.bounds)
            .map(|(m, b)| m / b)
            .fold(0.0, f64::max)
    }

    pub fn min_ratio(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.bounds)
            .map(|(m, b)| m / b)
            .fold(f64::INFINITY, f64::min)
    }
}

/// `M_k = M_{k-1} + c M_{k-1}^b` from `M_1 = ((1-b) c)^(1/(1-b))`, against
/// `[c(1-b)]^(1/(1-b)) [1 + gamma (k-1)]^(1/(1-b))`.
pub fn hard_recurrence(b: f64, c: f64, k: usize) -> Result<RecurrenceTrace> {
    hard_recurrence_with(b, c, k, GammaForm::Proof)
}

pub fn hard_recurrence_with(b: f64, c: f64, k: usize, form: GammaForm) -> Result<RecurrenceTrace> {
    if !(c > 0.0) || k == 0 {
        return Err(Error::Domain("need c > 0 and k >= 1".into()));
    }
    let gamma = solve_gamma(b, form)?;
    let inv = 1.0 / (1.0 - b);
    let base = ((1.0 - b) * c).powf(inv);
    let values = std::iter::successors(Some(base), |m| Some(m + c * m.powf(b)))
        .take(k)
        .collect();
    let bounds = (0..k)
        .map(|j| base * (1.0 + gamma * j as f64).powf(inv))
        .collect();
    Ok(RecurrenceTrace {
        params: RecurrenceParams::Hard { b, c, gamma },
        values,
        bounds,
    })
}

/// `M_k = M_{k-1} + a ln M_{k-1} + b` from `M_1 = b`, against
/// `b k + a k ln(a k + e)`.
pub fn simple_recurrence(a: f64, b: f64, k: usize) -> Result<RecurrenceTrace> {
    if !(a > 0.0 && b >= a) || k == 0 {
        return Err(Error::Domain(format!("need b >= a > 0 and k >= 1, got a={a} b={b}")));
    }
    let mut values = Vec::with_capacity(k);
    let mut m = b;
    for j in 1..=k {
        if j > 1 {
            m += a * m.ln() + b;
        }
        if !(m > 0.0) {
            return Err(Error::Domain(format!("M_{j} = {m} is not positive")));
        }
        values.push(m);
    }
    let bounds = (1..=k)
        .map(|j| {
            let j = j as f64;
            b * j + a * j * (a * j + E).ln()
        })
        .collect();
    Ok(RecurrenceTrace {
        params: RecurrenceParams::Simple { a, b },
        values,
        bounds,
    })
}

/// `(x^b + a)^(1/b) - x >= (a/b) x^(1-b)`, up to `1e-9`.
pub fn verify_pow_inequality(x: f64, a: f64, b: f64) -> Result<bool> {
    if !(x > 0.0 && a > 0.0 && b > 0.0 && b < 1.0) {
        return Err(Error::Domain(format!("need x, a > 0 and b in (0,1): {x}, {a}, {b}")));
    }
    // x * ((1 + a / x^b)^(1/b) - 1) without cancellation
    let lhs = x * ((a / x.powf(b)).ln_1p() / b).exp_m1();
    let rhs = a / b * x.powf(1.0 - b);
    Ok(lhs >= rhs - 1e-9)
}

/// `ln y - ln ln y - ln 2 > ln(y) / 4`, which holds for every `y >= 3`.
pub fn elementary_step_holds(y: f64) -> bool {
    y.ln() - y.ln().ln() - std::f64::consts::LN_2 > 0.25 * y.ln()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NastySum {
    /// `sum_{m=1}^{T} exp(-a li(m + k))`
    pub partial_sum: f64,
    /// `int_k^inf exp(-a li(x)) dx`
    pub integral_bound: f64,
    pub ratio: f64,
    /// The elementary logarithm inequality held on the whole grid.
    pub elementary_step: bool,
}

/// Compares the partial sum with the integral that bounds it.
///
/// The neglected tail is bounded by the integral of the same decreasing
/// summand from `T`; if that exceeds `1e-12` of the partial sum the result is
/// `TailNotConverged`.
pub fn nasty_sum_check(a: f64, k: u64, truncation: usize) -> Result<NastySum> {
    if !(a > 0.0 && a <= 1.0) || k < 3 {
        return Err(Error::Domain(format!("need 0 < a <= 1 and k >= 3, got a={a} k={k}")));
    }
    if truncation == 0 {
        return Err(Error::TailNotConverged(0));
    }
    let spec = QuadratureSpec::default();
    let kf = k as f64;
    let mut li = li_between(2.0, kf, &spec);
    let mut partial = 0.0;
    for m in 1..=truncation {
        li += li_between(kf + (m - 1) as f64, kf + m as f64, &spec);
        partial += (-a * li).exp();
    }
    let tail = decay_integral(a, kf + truncation as f64, &spec);
    if !(tail < 1e-12 * partial) {
        return Err(Error::TailNotConverged(truncation));
    }
    let integral_bound = decay_integral(a, kf, &spec);
    let elementary_step = (0..=400)
        .map(|i| 3.0 * 10f64.powf(i as f64 / 50.0))
        .chain([(4.0f64 / 3.0).exp()])
        .all(elementary_step_holds);
    Ok(NastySum {
        partial_sum: partial,
        integral_bound,
        ratio: partial / integral_bound,
        elementary_step,
    })
}

/// `int_from^inf exp(-a li(x)) dx`, accumulated over doubling panels.
fn decay_integral(a: f64, from: f64, spec: &QuadratureSpec) -> f64 {
    let mut total = 0.0;
    let mut lo = from;
    let mut li_lo = li_between(2.0, lo, spec);
    loop {
        let hi = 2.0 * lo;
        let f = |x: f64| (-a * (li_lo + li_between(lo, x, spec))).exp();
        let tol = (1e-3 * f(lo) * (hi - lo)).min(spec.abs_tol).max(1e-300);
        let panel = adaptive_simpson(f, lo, hi, tol, spec.max_depth);
        total += panel;
        li_lo += li_between(lo, hi, spec);
        lo = hi;
        if panel <= 1e-17 * total || !lo.is_finite() {
            return total;
        }
    }
}

/// One row of the inequality sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundCheck {
    pub check: &'static str,
    pub params: String,
    pub value: f64,
    pub reference: f64,
    pub pass: bool,
}

/// Growth-order constant: `M_k / (b k + a k ln(a k + e)) < C` for `k <= 10^4`
/// on the sweep grid.
pub const SIMPLE_RECURRENCE_RATIO_BOUND: f64 = 1.25;

pub fn pow_inequality_grid() -> Vec<(f64, f64, f64)> {
    let xs = [0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0];
    let as_ = [0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0];
    let bs = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
    let mut grid = Vec::with_capacity(xs.len() * as_.len() * bs.len());
    for x in xs {
        for a in as_ {
            for b in bs {
                grid.push((x, a, b));
            }
        }
    }
    grid
}

/// Every check behind the `verify-bounds` table.
pub fn bounds_sweep() -> Result<Vec<BoundCheck>> {
    let mut rows = Vec::new();
    for (x, a, b) in pow_inequality_grid() {
        let lhs = (x.powf(b) + a).powf(1.0 / b) - x;
        rows.push(BoundCheck {
            check: "pow_inequality",
            params: format!("x={x} a={a} b={b}"),
            value: lhs,
            reference: a / b * x.powf(1.0 - b),
            pass: verify_pow_inequality(x, a, b)?,
        });
    }
    for u in [0.01f64, 0.1, 1.0, 10.0, 100.0] {
        rows.push(BoundCheck {
            check: "chatzigeorgiou",
            params: format!("u={u}"),
            value: lambert_w(WBranch::Lower, -(-u - 1.0).exp())?,
            reference: -1.0 - (2.0 * u).sqrt() - u,
            pass: verify_chatzigeorgiou(u)?,
        });
    }
    for (form, name) in [
        (GammaForm::Proof, "hard_recurrence"),
        (GammaForm::Statement, "hard_recurrence_statement_gamma"),
    ] {
        for b in [0.2, 0.5, 0.8] {
            for c in [0.5, 1.0, 2.0] {
                let t = hard_recurrence_with(b, c, 1000, form)?;
                rows.push(BoundCheck {
                    check: name,
                    params: format!("b={b} c={c} k=1000"),
                    value: t.min_ratio(),
                    reference: 1.0,
                    pass: t.first_violation(1e-12).is_none(),
                });
            }
        }
    }
    for a in [0.1, 0.5, 1.0] {
        for k in [3, 10, 50] {
            let s = nasty_sum_check(a, k, 20_000)?;
            rows.push(BoundCheck {
                check: "nasty_sum",
                params: format!("a={a} k={k}"),
                value: s.partial_sum,
                reference: s.integral_bound,
                pass: s.partial_sum <= s.integral_bound && s.elementary_step,
            });
        }
    }
    for a in [0.1, 0.5, 1.0, 2.0, 5.0, 10.0] {
        for b in [1.0, 2.0, E, 5.0, 10.0, 20.0] {
            if b < a {
                continue;
            }
            let ratio = simple_recurrence(a, b, 10_000)?.max_ratio();
            rows.push(BoundCheck {
                check: "simple_recurrence",
                params: format!("a={a} b={b} k=10000"),
                value: ratio,
                reference: SIMPLE_RECURRENCE_RATIO_BOUND,
                pass: ratio < SIMPLE_RECURRENCE_RATIO_BOUND,
            });
        }
    }
    for x in [-0.3678, -0.2, 0.5, 1.0, 10.0, 1e6] {
        let w = lambert_w(WBranch::Principal, x)?;
        let r = (w * w.exp() - x).abs();
        rows.push(BoundCheck {
            check: "lambert_w_residual",
            params: format!("branch=0 x={x}"),
            value: r,
            reference: 1e-12,
            pass: r <= 1e-12 * x.abs().max(1.0),
        });
    }
    for x in [-0.3678, -0.2, -1e-3, -1e-40] {
        let w = lambert_w(WBranch::Lower, x)?;
        let r = (w * w.exp() - x).abs();
        rows.push(BoundCheck {
            check: "lambert_w_residual",
            params: format!("branch=-1 x={x}"),
            value: r,
            reference: 1e-12,
            pass: r <= 1e-12,
        });
    }
    Ok(rows)
}
