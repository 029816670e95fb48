//! Pheromone vectors and the time-dependent knobs acting on them.

use crate::error::{Error, Result};
use crate::graph::ArcId;
use crate::quadrature::adaptive_simpson;

/// Per-arc pheromone values plus the index `m` of the cycle about to run.
#[derive(Clone, Debug, PartialEq)]
pub struct PheromoneState {
    tau: Vec<f64>,
    cycle: u64,
}

impl PheromoneState {
    pub fn new(tau: Vec<f64>) -> Self {
        PheromoneState { tau, cycle: 1 }
    }

    pub fn uniform(arc_count: usize, value: f64) -> Self {
        Self::new(vec![value; arc_count])
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    pub fn set_cycle(&mut self, cycle: u64) {
        self.cycle = cycle;
    }

    pub(crate) fn advance(&mut self) {
        self.cycle += 1;
    }

    pub fn values(&self) -> &[f64] {
        &self.tau
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.tau
    }

    pub fn get(&self, arc: ArcId) -> f64 {
        self.tau[arc.0]
    }

    pub fn set(&mut self, arc: ArcId, value: f64) {
        self.tau[arc.0] = value;
    }

    /// Neumaier-compensated sum of all values.
    pub fn total(&self) -> f64 {
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for &t in &self.tau {
            let next = sum + t;
            comp += if sum.abs() >= t.abs() {
                (sum - next) + t
            } else {
                (t - next) + sum
            };
            sum = next;
        }
        sum + comp
    }

    /// True when every value is finite and nonnegative.
    pub fn is_valid(&self) -> bool {
        self.tau.iter().all(|t| t.is_finite() && *t >= 0.0)
    }
}

/// Evaporation rate as a function of the cycle index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EvaporationSchedule {
    Constant(f64),
    /// `rho(m) = alpha / m^beta`
    PowerLaw { alpha: f64, beta: f64 },
}

impl EvaporationSchedule {
    pub fn constant(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::Domain(format!("constant evaporation {rho} not in (0,1)")));
        }
        Ok(EvaporationSchedule::Constant(rho))
    }

    pub fn power_law(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Domain(format!("alpha {alpha} not in (0,1)")));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::Domain(format!("beta {beta} must be >= 0")));
        }
        Ok(EvaporationSchedule::PowerLaw { alpha, beta })
    }

    /// `alpha / m`, the harmonic schedule.
    pub fn harmonic(alpha: f64) -> Result<Self> {
        Self::power_law(alpha, 1.0)
    }

    fn raw(&self, m: f64) -> f64 {
        match *self {
            EvaporationSchedule::Constant(rho) => rho,
            EvaporationSchedule::PowerLaw { alpha, beta } => alpha / m.powf(beta),
        }
    }

    pub fn rate(&self, m: u64) -> Result<f64> {
        if m == 0 {
            return Err(Error::Domain("cycle index starts at 1".into()));
        }
        let rho = self.raw(m as f64);
        if rho > 0.0 && rho < 1.0 {
            Ok(rho)
        } else {
            Err(Error::Domain(format!("rho({m}) = {rho} not in (0,1)")))
        }
    }

    /// `sum_{k=from}^{to-1} ln(1 - rho(k))`, i.e. the log of the fraction of
    /// pheromone that survives the updates of cycles `from..to`.
    ///
    /// The first 2^16 terms are summed directly; beyond that the remainder is
    /// evaluated with Euler-Maclaurin, which is accurate far below double
    /// precision at that distance from the origin.
    pub fn log_survival(&self, from: u64, to: u64) -> f64 {
        const DIRECT: u64 = 1 << 16;
        assert!(from >= 1, "cycle index starts at 1");
        if to <= from {
            return 0.0;
        }
        if let EvaporationSchedule::Constant(rho) = *self {
            return (to - from) as f64 * (-rho).ln_1p();
        }
        let direct_end = to.min(from.saturating_add(DIRECT));
        let mut acc = 0.0;
        for k in from..direct_end {
            acc += (-self.raw(k as f64)).ln_1p();
        }
        if direct_end == to {
            return acc;
        }
        // remaining terms k = a..=b
        let (a, b) = (direct_end as f64, (to - 1) as f64);
        let f = |x: f64| (-self.raw(x)).ln_1p();
        let df = |x: f64| match *self {
            EvaporationSchedule::PowerLaw { alpha, beta } => {
                let r = alpha / x.powf(beta);
                beta * r / x / (1.0 - r)
            }
            EvaporationSchedule::Constant(_) => 0.0,
        };
        acc + self.integral_log_keep(a, b) + 0.5 * (f(a) + f(b)) + (df(b) - df(a)) / 12.0
    }

    /// Smooth interpolant of `log_survival(1, x + 1)` for real `x >= k0`,
    /// anchored at the exact value `s_k0 = log_survival(1, k0 + 1)`.
    pub(crate) fn smooth_log_survival(&self, k0: f64, s_k0: f64, x: f64) -> f64 {
        if x <= k0 {
            return s_k0;
        }
        let f = |y: f64| (-self.raw(y)).ln_1p();
        s_k0 + self.integral_log_keep(k0, x) + 0.5 * (f(x) - f(k0))
    }

    /// `ln(1 - rho(x))` for real `x`.
    pub(crate) fn log_keep(&self, x: f64) -> f64 {
        (-self.raw(x)).ln_1p()
    }

    /// `int_a^b ln(1 - rho(x)) dx`
    fn integral_log_keep(&self, a: f64, b: f64) -> f64 {
        match *self {
            EvaporationSchedule::Constant(rho) => (b - a) * (-rho).ln_1p(),
            EvaporationSchedule::PowerLaw { alpha, beta: 1.0 } => {
                // antiderivative (x - alpha) ln(x - alpha) - x ln x, rearranged
                // to avoid cancelling two huge terms
                let part = |x: f64| (x - alpha) * (-alpha / x).ln_1p();
                -alpha * (b / a).ln() + part(b) - part(a)
            }
            EvaporationSchedule::PowerLaw { .. } => {
                // substitute x = e^u so the integrand is smooth on a log scale
                let g = |u: f64| {
                    let x = u.exp();
                    (-self.raw(x)).ln_1p() * x
                };
                adaptive_simpson(g, a.ln(), b.ln(), 1e-13, 60)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TauMin {
    Constant(f64),
    /// `tau_min(m) = c_n / ln(m + 1)`
    LogDecay { c_n: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PheromoneBounds {
    pub tau_max: f64,
    pub tau_min: TauMin,
}

impl PheromoneBounds {
    pub fn new(tau_max: f64, tau_min: TauMin) -> Result<Self> {
        if !(tau_max >= 1.0 && tau_max.is_finite()) {
            return Err(Error::Domain(format!("tau_max {tau_max} must be >= 1")));
        }
        let floor = match tau_min {
            TauMin::Constant(v) => v,
            TauMin::LogDecay { c_n } => c_n / std::f64::consts::LN_2,
        };
        if !(floor > 0.0) {
            return Err(Error::Domain("lower pheromone bound must be positive".into()));
        }
        if floor >= tau_max {
            return Err(Error::Domain(format!(
                "tau_min {floor} must stay below tau_max {tau_max}"
            )));
        }
        Ok(PheromoneBounds { tau_max, tau_min })
    }

    pub fn log_decay(tau_max: f64, c_n: f64) -> Result<Self> {
        Self::new(tau_max, TauMin::LogDecay { c_n })
    }

    pub fn constant(tau_max: f64, tau_min: f64) -> Result<Self> {
        Self::new(tau_max, TauMin::Constant(tau_min))
    }

    pub fn tau_min_at(&self, m: u64) -> f64 {
        tau_min_at(self, m)
    }
}

pub fn tau_min_at(bounds: &PheromoneBounds, m: u64) -> f64 {
    match bounds.tau_min {
        TauMin::Constant(v) => v,
        TauMin::LogDecay { c_n } => c_n / ((m as f64) + 1.0).ln(),
    }
}

pub fn evaporation_rate(sched: &EvaporationSchedule, m: u64) -> Result<f64> {
    sched.rate(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn harmonic_schedule_values() {
        let s = EvaporationSchedule::harmonic(0.1).unwrap();
        assert_relative_eq!(s.rate(1).unwrap(), 0.1);
        assert_relative_eq!(s.rate(10).unwrap(), 0.01);
        let c = EvaporationSchedule::constant(0.25).unwrap();
        assert_eq!(c.rate(1_000_000).unwrap(), 0.25);
    }

    #[test]
    fn schedule_domain() {
        assert!(EvaporationSchedule::constant(0.0).is_err());
        assert!(EvaporationSchedule::constant(1.0).is_err());
        assert!(EvaporationSchedule::power_law(1.0, 1.0).is_err());
        assert!(EvaporationSchedule::power_law(0.5, -0.1).is_err());
        let s = EvaporationSchedule::power_law(0.5, 400.0).unwrap();
        // underflows to zero far out
        assert!(matches!(s.rate(1 << 20), Err(Error::Domain(_))));
        assert!(s.rate(0).is_err());
    }

    #[test]
    fn log_decay_lower_bound() {
        let b = PheromoneBounds::log_decay(1.0, 0.01).unwrap();
        assert_relative_eq!(b.tau_min_at(1), 0.014426950408889634, max_relative = 1e-12);
        assert_relative_eq!(b.tau_min_at(6), 0.01 / 7f64.ln(), max_relative = 1e-12);
        assert!((b.tau_min_at(6) - 0.005139).abs() < 1e-6);
        let c = PheromoneBounds::constant(1.0, 0.05).unwrap();
        assert_eq!(c.tau_min_at(123), 0.05);
    }

    #[test]
    fn bounds_validation() {
        assert!(PheromoneBounds::log_decay(0.5, 0.01).is_err());
        assert!(PheromoneBounds::log_decay(1.0, 0.0).is_err());
        assert!(PheromoneBounds::constant(1.0, 1.0).is_err());
    }

    fn direct_log_survival(s: &EvaporationSchedule, from: u64, to: u64) -> f64 {
        (from..to).map(|k| (-s.rate(k).unwrap()).ln_1p()).sum()
    }

    #[test]
    fn log_survival_matches_direct_sum() {
        for s in [
            EvaporationSchedule::harmonic(0.1).unwrap(),
            EvaporationSchedule::power_law(0.5, 0.5).unwrap(),
            EvaporationSchedule::power_law(0.3, 2.0).unwrap(),
            EvaporationSchedule::constant(0.01).unwrap(),
        ] {
            for (from, to) in [(1, 2), (1, 100), (7, 70_000), (3, 400_000)] {
                let fast = s.log_survival(from, to);
                let slow = direct_log_survival(&s, from, to);
                assert_relative_eq!(fast, slow, max_relative = 1e-11, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn harmonic_survival_matches_gamma_ratio() {
        // prod_{k=1}^{N} (1 - a/k) = Gamma(N + 1 - a) / (Gamma(1 - a) Gamma(N + 1))
        // ~ N^{-a} / Gamma(1 - a) for large N
        let a = 0.1;
        let s = EvaporationSchedule::harmonic(a).unwrap();
        let n: f64 = 1e10;
        let log_p = s.log_survival(1, n as u64 + 1);
        let gamma_09 = 1.068628702119319_f64; // Gamma(0.9)
        let expected = -a * n.ln() - gamma_09.ln();
        assert!((log_p - expected).abs() < 1e-9, "{log_p} vs {expected}");
    }
}
