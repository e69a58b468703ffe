//! Adaptive Simpson quadrature with a shared subdivision budget.
//!
//! The integrands in this crate are smooth on the closed interval, so the
//! classic Lyness acceptance test (|S_fine - S_coarse| <= 15 eps) with
//! Richardson extrapolation converges quickly; the budget exists to turn a
//! genuinely non-convergent integral into an error that still carries the
//! best estimate seen, instead of looping forever.

use super::GeometryError;

/// Controls for the nested quadrature and the outer infimum grid.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureSpec {
    /// Relative tolerance for the outer integral; the inner integral runs one
    /// order tighter.
    pub rel_tol: f64,
    /// Total number of interval splits allowed per integral.
    pub max_subdivisions: usize,
    /// Number of radii sampled when taking the infimum over (0, D).
    pub r_grid_size: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rel_tol: 1e-9,
            max_subdivisions: 1 << 14,
            r_grid_size: 64,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(GeometryError::InvalidInput(
                "quadrature tolerance must be positive and finite".into(),
            ));
        }
        // Below ~1e-13 the acceptance test competes with f64 roundoff in
        // the nested integrals: runtimes explode while the answer gains
        // nothing. Refuse instead of grinding.
        if self.rel_tol < 1e-13 {
            return Err(GeometryError::InvalidInput(
                "quadrature tolerance below the 1e-13 floating-point floor".into(),
            ));
        }
        if self.r_grid_size < 16 {
            return Err(GeometryError::InvalidInput(
                "infimum grid must have at least 16 points".into(),
            ));
        }
        Ok(())
    }
}

struct Budget {
    left: usize,
    exhausted: bool,
}

fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt(
    f: &impl Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    fm: f64,
    whole: f64,
    eps: f64,
    depth: u32,
    budget: &mut Budget,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, fa, m, fm, flm);
    let right = simpson(m, fm, b, fb, frm);
    let delta = left + right - whole;
    // 15 = 2^4 - 1 from the Richardson error model for Simpson's rule.
    if delta.abs() <= 15.0 * eps || depth >= 52 {
        if depth >= 52 && delta.abs() > 15.0 * eps {
            budget.exhausted = true;
        }
        return left + right + delta / 15.0;
    }
    if budget.left == 0 {
        budget.exhausted = true;
        return left + right + delta / 15.0;
    }
    budget.left -= 1;
    adapt(f, a, fa, m, fm, flm, left, 0.5 * eps, depth + 1, budget)
        + adapt(f, m, fm, b, fb, frm, right, 0.5 * eps, depth + 1, budget)
}

/// Integrate `f` over `[a, b]` to the given relative tolerance.
///
/// Returns the budget-exhaustion error with the best estimate attached when
/// the subdivision budget runs out before the tolerance is met.
pub fn integrate(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    rel_tol: f64,
    max_subdivisions: usize,
) -> Result<f64, GeometryError> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    if !(fa.is_finite() && fb.is_finite() && fm.is_finite()) {
        return Err(GeometryError::InvalidInput(
            "integrand is not finite on the integration interval".into(),
        ));
    }
    let whole = simpson(a, fa, b, fb, fm);
    // Scale the absolute acceptance threshold by a first-pass magnitude
    // estimate so rel_tol acts relatively; the max() guards integrals that
    // are legitimately zero.
    let eps = rel_tol * whole.abs().max(1e-300);
    let mut budget = Budget {
        left: max_subdivisions,
        exhausted: false,
    };
    let value = adapt(&f, a, fa, b, fb, fm, whole, eps, 0, &mut budget);
    if budget.exhausted {
        return Err(GeometryError::QuadratureNoConvergence { estimate: value });
    }
    if !value.is_finite() {
        return Err(GeometryError::InvalidInput(
            "integral evaluated to a non-finite value".into(),
        ));
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exactish() {
        let v = integrate(|x| x * x, 0.0, 1.0, 1e-10, 1 << 12).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn sine_over_half_period() {
        let v = integrate(f64::sin, 0.0, std::f64::consts::PI, 1e-10, 1 << 12).unwrap();
        assert!((v - 2.0).abs() < 1e-10, "got {v}");
    }

    #[test]
    fn smooth_but_sharp_peak_converges() {
        // Narrow Gaussian bump; adaptivity has to concentrate near 0.5.
        let v = integrate(
            |x| (-(x - 0.5) * (x - 0.5) * 1e4).exp(),
            0.0,
            1.0,
            1e-9,
            1 << 14,
        )
        .unwrap();
        let exact = (std::f64::consts::PI / 1e4).sqrt(); // erf(50) == 1 to machine precision
        assert!((v - exact).abs() / exact < 1e-8, "got {v}, want {exact}");
    }

    #[test]
    fn budget_exhaustion_reports_estimate() {
        // A highly oscillatory integrand with a starved budget.
        let r = integrate(|x| (1e4 * x).sin().abs(), 0.0, 1.0, 1e-12, 8);
        match r {
            Err(GeometryError::QuadratureNoConvergence { estimate }) => {
                assert!(estimate.is_finite());
            }
            other => panic!("expected budget exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn zero_length_interval() {
        let v = integrate(|x| x.exp(), 2.0, 2.0, 1e-9, 16).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn sub_floor_tolerance_is_rejected() {
        let spec = QuadratureSpec {
            rel_tol: 1e-15,
            ..QuadratureSpec::default()
        };
        assert!(spec.validate().is_err());
        let spec = QuadratureSpec {
            rel_tol: 1e-13,
            ..QuadratureSpec::default()
        };
        assert!(spec.validate().is_ok());
    }
}
