//! Porous medium-type nonlinearities.
//!
//! A [`PorousNonlinearity`] is a `C^1` map `P` with `P(0) = 0` together with
//! the structural constants `m > 1` and `c1 >= c0 > 0` entering the two-sided
//! bound `c0 m rho^{m-1} <= P'(rho) <= c1 m rho^{m-1}`. The model case is the
//! pure power `P(rho) = rho^m`.
//!
//! The uniformly elliptic regularization [`RegularizedNonlinearity`] has
//! derivative `P'(rho) + eps` below the cutoff `1/eps` and is frozen to the
//! constant slope `P'(1/eps) + eps` above it, so `eps <= P_eps' <= max P' + eps`
//! everywhere. Both carry the associated potentials
//! `Psi(rho) = int_0^rho P` and `Upsilon(rho) = int_0^rho sqrt(P')`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::numerics::integrate;

#[derive(Debug, Error)]
pub enum NonlinearityError {
    #[error("exponent m must exceed 1, got {0}")]
    InvalidExponent(f64),
    #[error("constants must satisfy c1 >= c0 > 0, got c0 = {0}, c1 = {1}")]
    InvalidConstants(f64, f64),
    #[error("regularization parameter must be positive, got {0}")]
    InvalidEpsilon(f64),
    #[error("density must be nonnegative, got {0}")]
    NegativeDensity(f64),
    #[error("inverse is only defined for nonnegative values, got {0}")]
    InverseDomain(f64),
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Flavor {
    PurePower,
    Custom { p: ScalarFn, dp: ScalarFn },
}

impl fmt::Debug for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Flavor::PurePower => write!(f, "PurePower"),
            Flavor::Custom { .. } => write!(f, "Custom"),
        }
    }
}

/// Quadrature tolerance for the potentials of custom nonlinearities.
const QUAD_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct PorousNonlinearity {
    m: f64,
    c0: f64,
    c1: f64,
    flavor: Flavor,
}

impl PorousNonlinearity {
    /// The pure power `P(rho) = rho^m` (so `c0 = c1 = 1`).
    pub fn pure_power(m: f64) -> Result<Self, NonlinearityError> {
        if !(m > 1.0) || !m.is_finite() {
            return Err(NonlinearityError::InvalidExponent(m));
        }
        Ok(Self {
            m,
            c0: 1.0,
            c1: 1.0,
            flavor: Flavor::PurePower,
        })
    }

    /// A user-supplied nonlinearity. The derivative must be supplied
    /// analytically; numerical differentiation would make the two-sided
    /// bound checks meaningless.
    pub fn custom(
        m: f64,
        c0: f64,
        c1: f64,
        p: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dp: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self, NonlinearityError> {
        if !(m > 1.0) || !m.is_finite() {
            return Err(NonlinearityError::InvalidExponent(m));
        }
        if !(c0 > 0.0 && c1 >= c0) {
            return Err(NonlinearityError::InvalidConstants(c0, c1));
        }
        Ok(Self {
            m,
            c0,
            c1,
            flavor: Flavor::Custom {
                p: Arc::new(p),
                dp: Arc::new(dp),
            },
        })
    }

    #[inline]
    pub fn exponent(&self) -> f64 {
        self.m
    }

    #[inline]
    pub fn c0(&self) -> f64 {
        self.c0
    }

    #[inline]
    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn is_pure_power(&self) -> bool {
        matches!(self.flavor, Flavor::PurePower)
    }

    /// `P(rho)` for `rho >= 0`.
    pub fn value(&self, rho: f64) -> f64 {
        debug_assert!(rho >= 0.0);
        match &self.flavor {
            Flavor::PurePower => rho.powf(self.m),
            Flavor::Custom { p, .. } => p(rho),
        }
    }

    /// `P'(rho)` for `rho >= 0`.
    pub fn deriv(&self, rho: f64) -> f64 {
        debug_assert!(rho >= 0.0);
        match &self.flavor {
            Flavor::PurePower => self.m * rho.powf(self.m - 1.0),
            Flavor::Custom { dp, .. } => dp(rho),
        }
    }

    /// `P^{-1}(v)`: closed form for pure powers, bisection otherwise. The
    /// bracket comes from `(v/c1)^{1/m} <= P^{-1}(v) <= (v/c0)^{1/m}`.
    pub fn inverse(&self, v: f64) -> Result<f64, NonlinearityError> {
        if !(v >= 0.0) {
            return Err(NonlinearityError::InverseDomain(v));
        }
        if v == 0.0 {
            return Ok(0.0);
        }
        match &self.flavor {
            Flavor::PurePower => Ok(v.powf(1.0 / self.m)),
            Flavor::Custom { .. } => {
                let mut lo = (v / self.c1).powf(1.0 / self.m) * (1.0 - 1e-12);
                let mut hi = (v / self.c0).powf(1.0 / self.m) * (1.0 + 1e-12);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.value(mid) < v {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if (hi - lo) <= 1e-15 * hi.max(1.0) {
                        break;
                    }
                }
                Ok(0.5 * (lo + hi))
            }
        }
    }

    /// Displacement-convexity defect `rho P'(rho) - (1 - 1/n) P(rho)` in
    /// dimension `n`; nonnegativity of this quantity for all densities is
    /// the structural condition that makes the curvature machinery work.
    pub fn mccann_defect(&self, rho: f64, n: usize) -> Result<f64, NonlinearityError> {
        if !(rho >= 0.0) {
            return Err(NonlinearityError::NegativeDensity(rho));
        }
        let frac = 1.0 - 1.0 / n as f64;
        Ok(rho * self.deriv(rho) - frac * self.value(rho))
    }

    /// `Psi(rho) = int_0^rho P(r) dr`; `rho^{m+1}/(m+1)` for pure powers,
    /// adaptive quadrature otherwise.
    pub fn potential_psi(&self, rho: f64) -> Result<f64, NonlinearityError> {
        if !(rho >= 0.0) {
            return Err(NonlinearityError::NegativeDensity(rho));
        }
        match &self.flavor {
            Flavor::PurePower => Ok(rho.powf(self.m + 1.0) / (self.m + 1.0)),
            Flavor::Custom { .. } => Ok(integrate(|r| self.value(r), 0.0, rho, QUAD_TOL)),
        }
    }

    /// `Upsilon(rho) = int_0^rho sqrt(P'(r)) dr`; for pure powers
    /// `2 sqrt(m) rho^{(m+1)/2} / (m+1)`.
    pub fn kirchhoff_upsilon(&self, rho: f64) -> Result<f64, NonlinearityError> {
        if !(rho >= 0.0) {
            return Err(NonlinearityError::NegativeDensity(rho));
        }
        match &self.flavor {
            Flavor::PurePower => {
                Ok(2.0 * self.m.sqrt() * rho.powf(0.5 * (self.m + 1.0)) / (self.m + 1.0))
            }
            Flavor::Custom { .. } => {
                Ok(integrate(|r| self.deriv(r).max(0.0).sqrt(), 0.0, rho, QUAD_TOL))
            }
        }
    }

    /// Builds the uniformly elliptic regularization with parameter `eps`.
    pub fn regularize(&self, eps: f64) -> Result<RegularizedNonlinearity, NonlinearityError> {
        RegularizedNonlinearity::new(self.clone(), eps)
    }
}

/// Regularized nonlinearity `P_eps` with cutoff `1/eps`:
/// `P_eps'(rho) = P'(rho) + eps` on `[0, 1/eps]`, frozen above. `P_eps` is
/// recovered by exact integration of the derivative, so no quadrature is
/// involved: `P_eps(rho) = P(rho) + eps rho` below the cutoff and extends
/// linearly above it.
#[derive(Clone, Debug)]
pub struct RegularizedNonlinearity {
    base: PorousNonlinearity,
    eps: f64,
    cutoff: f64,
    slope_above: f64,
    value_at_cutoff: f64,
}

impl RegularizedNonlinearity {
    pub fn new(base: PorousNonlinearity, eps: f64) -> Result<Self, NonlinearityError> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(NonlinearityError::InvalidEpsilon(eps));
        }
        let cutoff = 1.0 / eps;
        let slope_above = base.deriv(cutoff) + eps;
        let value_at_cutoff = base.value(cutoff) + eps * cutoff;
        Ok(Self {
            base,
            eps,
            cutoff,
            slope_above,
            value_at_cutoff,
        })
    }

    #[inline]
    pub fn base(&self) -> &PorousNonlinearity {
        &self.base
    }

    #[inline]
    pub fn eps(&self) -> f64 {
        self.eps
    }

    #[inline]
    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// `P_eps(rho)`. Negative arguments (roundoff from linear solvers) are
    /// continued linearly with the slope at zero, keeping Newton iterations
    /// well defined.
    pub fn value(&self, rho: f64) -> f64 {
        if rho < 0.0 {
            return (self.base.deriv(0.0) + self.eps) * rho;
        }
        if rho <= self.cutoff {
            self.base.value(rho) + self.eps * rho
        } else {
            self.value_at_cutoff + self.slope_above * (rho - self.cutoff)
        }
    }

    /// `P_eps'(rho)`, with the same linear continuation below zero.
    pub fn deriv(&self, rho: f64) -> f64 {
        if rho < 0.0 {
            return self.base.deriv(0.0) + self.eps;
        }
        if rho <= self.cutoff {
            self.base.deriv(rho) + self.eps
        } else {
            self.slope_above
        }
    }

    /// McCann defect of the regularized nonlinearity (preserved from the
    /// base nonlinearity when the latter satisfies it).
    pub fn mccann_defect(&self, rho: f64, n: usize) -> Result<f64, NonlinearityError> {
        if !(rho >= 0.0) {
            return Err(NonlinearityError::NegativeDensity(rho));
        }
        let frac = 1.0 - 1.0 / n as f64;
        Ok(rho * self.deriv(rho) - frac * self.value(rho))
    }

    /// `Psi_eps(rho) = int_0^rho P_eps`, exact piecewise integration.
    pub fn potential_psi(&self, rho: f64) -> Result<f64, NonlinearityError> {
        if !(rho >= 0.0) {
            return Err(NonlinearityError::NegativeDensity(rho));
        }
        let below = |r: f64| -> Result<f64, NonlinearityError> {
            Ok(self.base.potential_psi(r)? + 0.5 * self.eps * r * r)
        };
        if rho <= self.cutoff {
            below(rho)
        } else {
            let tail = rho - self.cutoff;
            Ok(below(self.cutoff)?
                + self.value_at_cutoff * tail
                + 0.5 * self.slope_above * tail * tail)
        }
    }

    /// `Upsilon_eps(rho) = int_0^rho sqrt(P_eps')`, adaptive quadrature below
    /// the cutoff (the integrand has no closed form once `eps` is added).
    pub fn kirchhoff_upsilon(&self, rho: f64) -> Result<f64, NonlinearityError> {
        if !(rho >= 0.0) {
            return Err(NonlinearityError::NegativeDensity(rho));
        }
        let r0 = rho.min(self.cutoff);
        let mut acc = integrate(|r| self.deriv(r).sqrt(), 0.0, r0, QUAD_TOL);
        if rho > self.cutoff {
            acc += self.slope_above.sqrt() * (rho - self.cutoff);
        }
        Ok(acc)
    }
}

/// Outcome of checking one structural hypothesis on a sampled grid.
#[derive(Clone, Copy, Debug)]
pub struct HypothesisCheck {
    pub passed: bool,
    /// Worst-case signed margin; negative values quantify the failure.
    pub margin: f64,
}

/// Report of the sample-based hypothesis validation.
#[derive(Clone, Debug)]
pub struct HypothesisReport {
    /// `P(0) = 0` and strict monotonicity on the grid.
    pub monotone: HypothesisCheck,
    /// Two-sided power bound on `P'` with the declared constants.
    pub power_bounds: HypothesisCheck,
    /// Nonnegativity of the McCann defect.
    pub mccann: HypothesisCheck,
    /// Tightest constants fitted from the samples: `inf P'/(m rho^{m-1})`
    /// and `sup P'/(m rho^{m-1})`.
    pub fitted_c0: f64,
    pub fitted_c1: f64,
}

impl HypothesisReport {
    pub fn all_passed(&self) -> bool {
        self.monotone.passed && self.power_bounds.passed && self.mccann.passed
    }
}

/// Default sample count for [`validate_hypotheses`].
pub const DEFAULT_HYPOTHESIS_SAMPLES: usize = 10_000;

/// Builds the default validation grid: zero plus a log-spaced sweep of
/// `count` points up to `10 * rho_max`.
pub fn default_validation_grid(rho_max: f64, count: usize) -> Vec<f64> {
    let hi = 10.0 * rho_max;
    let lo = hi * 1e-12;
    let mut grid = vec![0.0];
    grid.extend(crate::numerics::log_spaced(lo, hi, count));
    grid
}

/// Sample-based validation of the structural hypotheses on `grid`.
/// A non-monotone `P` is reported as a failed check, not an error;
/// the pointwise conditions for all densities cannot be certified
/// numerically, so everything is a statement about the samples.
pub fn validate_hypotheses(
    p: &PorousNonlinearity,
    n: usize,
    grid: &[f64],
) -> Result<HypothesisReport, NonlinearityError> {
    if let Some(&bad) = grid.iter().find(|&&r| !(r >= 0.0)) {
        return Err(NonlinearityError::NegativeDensity(bad));
    }
    let mut sorted: Vec<f64> = grid.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted.dedup();

    // (H3): P(0) = 0 and strictly increasing along the sorted samples.
    let mut mono_margin = -p.value(0.0).abs();
    for w in sorted.windows(2) {
        let gap = p.value(w[1]) - p.value(w[0]);
        mono_margin = mono_margin.min(gap);
    }
    let monotone = HypothesisCheck {
        passed: mono_margin >= 0.0 && p.value(0.0).abs() <= 1e-12,
        margin: mono_margin,
    };

    // (H4): c0 m rho^{m-1} <= P' <= c1 m rho^{m-1}, plus fitted constants.
    let mut lower_margin = f64::INFINITY;
    let mut upper_margin = f64::INFINITY;
    let mut fitted_c0 = f64::INFINITY;
    let mut fitted_c1 = 0.0f64;
    for &rho in sorted.iter().filter(|&&r| r > 0.0) {
        let envelope = p.exponent() * rho.powf(p.exponent() - 1.0);
        let d = p.deriv(rho);
        lower_margin = lower_margin.min(d - p.c0() * envelope);
        upper_margin = upper_margin.min(p.c1() * envelope - d);
        let ratio = d / envelope;
        fitted_c0 = fitted_c0.min(ratio);
        fitted_c1 = fitted_c1.max(ratio);
    }
    let power_bounds = HypothesisCheck {
        passed: lower_margin >= -1e-12 && upper_margin >= -1e-12,
        margin: lower_margin.min(upper_margin),
    };

    // (H5): McCann defect nonnegative.
    let mut mccann_margin = f64::INFINITY;
    for &rho in &sorted {
        mccann_margin = mccann_margin.min(p.mccann_defect(rho, n)?);
    }
    let mccann = HypothesisCheck {
        passed: mccann_margin >= -1e-12,
        margin: mccann_margin,
    };

    Ok(HypothesisReport {
        monotone,
        power_bounds,
        mccann,
        fitted_c0,
        fitted_c1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn pure_power_values() {
        let p = PorousNonlinearity::pure_power(2.0).unwrap();
        assert_eq!(p.value(0.0), 0.0);
        assert_relative_eq!(p.value(3.0), 9.0);
        assert_relative_eq!(p.deriv(3.0), 6.0);
        assert_relative_eq!(p.potential_psi(1.0).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(p.potential_psi(0.0).unwrap(), 0.0);
        // Upsilon closed form: 2 sqrt(2)/3 at rho = 1.
        assert_relative_eq!(
            p.kirchhoff_upsilon(1.0).unwrap(),
            2.0 * 2.0f64.sqrt() / 3.0,
            epsilon = 1e-14
        );
        assert_eq!(p.kirchhoff_upsilon(0.0).unwrap(), 0.0);
    }

    #[test]
    fn regularize_matches_piecewise_integration() {
        let p = PorousNonlinearity::pure_power(2.0).unwrap();
        let pe = p.regularize(0.1).unwrap();
        assert_relative_eq!(pe.value(1.0), 1.1, epsilon = 1e-14);
        assert_eq!(pe.value(0.0), 0.0);
        // Above the cutoff: P_eps(4) = P_eps(2) + (P'(2) + 0.5) * 2 = 14.
        let pe = p.regularize(0.5).unwrap();
        assert_relative_eq!(pe.value(4.0), 14.0, epsilon = 1e-13);
        // Derivative envelope: eps <= P_eps' <= max P' + eps.
        let sup = pe.deriv(pe.cutoff());
        for rho in [0.0, 0.3, 1.0, 1.9, 2.0, 2.5, 10.0] {
            let d = pe.deriv(rho);
            assert!(d >= 0.5 - 1e-15);
            assert!(d <= sup + 1e-15);
        }
    }

    #[test]
    fn regularized_bounds_against_base() {
        let p = PorousNonlinearity::pure_power(3.0).unwrap();
        let pe = p.regularize(0.05).unwrap();
        for rho in [0.0, 0.1, 1.0, 5.0, 19.9, 20.0, 21.0, 100.0] {
            assert!(pe.value(rho) <= p.value(rho) + pe.eps() * rho + 1e-12);
            if rho <= pe.cutoff() {
                assert!(pe.deriv(rho) >= p.deriv(rho));
            }
        }
    }

    #[test]
    fn mccann_defect_closed_form() {
        // For P = rho^m the defect is rho^m (m - 1 + 1/n) > 0.
        let p = PorousNonlinearity::pure_power(2.0).unwrap();
        for rho in [0.0, 0.5, 2.0] {
            let expected = rho * rho * (1.0 + 1.0 / 3.0);
            assert_relative_eq!(
                p.mccann_defect(rho, 3).unwrap(),
                expected,
                epsilon = 1e-13
            );
        }
        // Preserved under regularization on a grid.
        let pe = p.regularize(0.2).unwrap();
        let mut rho = 0.0;
        while rho <= 10.0 {
            assert!(pe.mccann_defect(rho, 3).unwrap() >= -1e-12);
            rho += 0.05;
        }
    }

    #[test]
    fn custom_quadrature_matches_closed_forms() {
        // Same power expressed as a custom nonlinearity: potentials must
        // agree with the closed forms through the quadrature path.
        let p = PorousNonlinearity::custom(2.0, 1.0, 1.0, |r| r * r, |r| 2.0 * r).unwrap();
        assert_abs_diff_eq!(p.potential_psi(1.7).unwrap(), 1.7f64.powi(3) / 3.0, epsilon = 1e-10);
        assert_abs_diff_eq!(
            p.kirchhoff_upsilon(1.7).unwrap(),
            2.0 * 2.0f64.sqrt() * 1.7f64.powf(1.5) / 3.0,
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(p.inverse(4.0).unwrap(), 2.0, epsilon = 1e-12);
        // Regularized Upsilon integrates sqrt(P' + eps).
        let pe = p.regularize(0.3).unwrap();
        let direct = integrate(|r| (2.0 * r + 0.3).sqrt(), 0.0, 1.0, 1e-13);
        assert_abs_diff_eq!(pe.kirchhoff_upsilon(1.0).unwrap(), direct, epsilon = 1e-10);
    }

    #[test]
    fn psi_upsilon_monotone_nonnegative() {
        let p = PorousNonlinearity::pure_power(1.5).unwrap();
        let pe = p.regularize(0.01).unwrap();
        let mut last_psi = 0.0;
        let mut last_ups = 0.0;
        for i in 0..50 {
            let rho = i as f64 * 0.3;
            let psi = pe.potential_psi(rho).unwrap();
            let ups = pe.kirchhoff_upsilon(rho).unwrap();
            assert!(psi >= last_psi && ups >= last_ups);
            last_psi = psi;
            last_ups = ups;
        }
    }

    #[test]
    fn validate_pure_power_all_pass() {
        let p = PorousNonlinearity::pure_power(2.0).unwrap();
        let grid = default_validation_grid(1.0, 2000);
        let report = validate_hypotheses(&p, 3, &grid).unwrap();
        assert!(report.all_passed());
        assert_relative_eq!(report.fitted_c0, 1.0, epsilon = 1e-10);
        assert_relative_eq!(report.fitted_c1, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn validate_flags_bad_upper_bound() {
        // P = rho^2 + rho^3 declared with m = 2: upper bound fails for large rho.
        let p = PorousNonlinearity::custom(
            2.0,
            1.0,
            1.0,
            |r| r * r + r * r * r,
            |r| 2.0 * r + 3.0 * r * r,
        )
        .unwrap();
        let grid = default_validation_grid(10.0, 2000);
        let report = validate_hypotheses(&p, 3, &grid).unwrap();
        assert!(!report.power_bounds.passed);
        assert!(report.monotone.passed);
    }

    #[test]
    fn validate_flags_decreasing_p() {
        let p = PorousNonlinearity::custom(2.0, 1.0, 1.0, |r| -r, |_| -1.0).unwrap();
        let grid = default_validation_grid(1.0, 500);
        let report = validate_hypotheses(&p, 3, &grid).unwrap();
        assert!(!report.monotone.passed);
    }
}
