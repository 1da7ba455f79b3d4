//! Closed-form pricing, policy and growth-rate formulas.
//!
//! Everything here is a pure function of a relative market size
//! `R = q / V`, a margin rate, or a leverage ratio, together with the deep
//! parameters. The `*_at` helpers skip argument validation and are what the
//! path engine calls in its inner loop.

use crate::error::ModelError;
use crate::params::ModelParams;
use alloc::format;

/// Market-clearing margin rate `max(mu - sigma^2 (1 + R), 0)`.
pub fn equilibrium_rate(ratio: f64, p: &ModelParams) -> Result<f64, ModelError> {
    check_ratio("equilibrium_rate", ratio)?;
    Ok(rate_at(ratio, p))
}

/// Kelly leverage at the clearing rate, `min(1 + R, mu / sigma^2)`.
pub fn kelly_leverage(ratio: f64, p: &ModelParams) -> Result<f64, ModelError> {
    check_ratio("kelly_leverage", ratio)?;
    Ok(leverage_at(ratio, p))
}

#[inline(always)]
pub(crate) fn rate_at(ratio: f64, p: &ModelParams) -> f64 {
    let r = p.mu - p.variance() * (1.0 + ratio);
    if r > 0.0 {
        r
    } else {
        0.0
    }
}

#[inline(always)]
pub(crate) fn leverage_at(ratio: f64, p: &ModelParams) -> f64 {
    let b = 1.0 + ratio;
    if b < p.b_cap {
        b
    } else {
        p.b_cap
    }
}

/// Expected log growth rate `r + (mu - r) b - sigma^2 b^2 / 2` of a
/// portfolio levered `b` times at margin rate `r`.
pub fn growth_rate(b: f64, r: f64, p: &ModelParams) -> Result<f64, ModelError> {
    if !(b >= 1.0) {
        return Err(ModelError::domain(
            "growth_rate",
            format!("leverage {b} < 1"),
        ));
    }
    if !(r >= 0.0) {
        return Err(ModelError::domain("growth_rate", format!("rate {r} < 0")));
    }
    Ok(growth_at(b, r, p))
}

#[inline(always)]
pub(crate) fn growth_at(b: f64, r: f64, p: &ModelParams) -> f64 {
    r + (p.mu - r) * b - 0.5 * p.variance() * b * b
}

/// Growth rate under the Kelly bet for margin rate `r`, maximised over `b >= 1`.
///
/// The unconstrained maximiser is `(mu - r) / sigma^2`; when that falls
/// below one (only for `r > r_inf`) the constrained optimum is `b = 1`.
pub fn optimal_growth(r: f64, p: &ModelParams) -> Result<f64, ModelError> {
    if !(r >= 0.0) {
        return Err(ModelError::domain(
            "optimal_growth",
            format!("rate {r} < 0"),
        ));
    }
    let b_star = (p.mu - r) / p.variance();
    if b_star >= 1.0 {
        let x = (p.mu - r) / p.sigma;
        Ok(r + 0.5 * x * x)
    } else {
        Ok(growth_at(1.0, r, p))
    }
}

/// Loan quantity demanded by equity `v` at rate `r`. Negative above the
/// choke price; callers treat that as zero demand.
pub fn demand_quantity(v: f64, r: f64, p: &ModelParams) -> f64 {
    (p.b_cap - 1.0) * v - v / p.variance() * r
}

/// Rate at which equity `v` demands exactly `q`: `mu - sigma^2 (1 + q / v)`.
pub fn inverse_demand(q: f64, v: f64, p: &ModelParams) -> Result<f64, ModelError> {
    if !(v > 0.0) {
        return Err(ModelError::domain(
            "inverse_demand",
            format!("equity {v} <= 0"),
        ));
    }
    if !(q >= 0.0) {
        return Err(ModelError::domain(
            "inverse_demand",
            format!("quantity {q} < 0"),
        ));
    }
    Ok(p.mu - p.variance() * (1.0 + q / v))
}

/// Price elasticity of demand, `(mu / sigma^2 - 1) (v / q) - 1`.
pub fn demand_elasticity(q: f64, v: f64, p: &ModelParams) -> Result<f64, ModelError> {
    if !(q > 0.0) {
        return Err(ModelError::domain(
            "demand_elasticity",
            format!("undefined at quantity {q}"),
        ));
    }
    if !(v > 0.0) {
        return Err(ModelError::domain(
            "demand_elasticity",
            format!("equity {v} <= 0"),
        ));
    }
    Ok((p.b_cap - 1.0) * (v / q) - 1.0)
}

fn check_ratio(op: &'static str, ratio: f64) -> Result<(), ModelError> {
    if ratio >= 0.0 {
        Ok(())
    } else {
        Err(ModelError::domain(
            op,
            format!("relative market size {ratio} < 0"),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derive_params;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn sp() -> ModelParams {
        derive_params(1.0, 1.0, 1.0, 0.09, 0.15, true).unwrap()
    }

    #[test]
    fn rate_examples() {
        let p = sp();
        assert_relative_eq!(equilibrium_rate(1.0, &p).unwrap(), 0.05625, epsilon = 1e-15);
        assert_relative_eq!(equilibrium_rate(0.0, &p).unwrap(), 0.07875, epsilon = 1e-15);
        assert_eq!(equilibrium_rate(p.b_cap - 1.0, &p).unwrap(), 0.0);
        assert_eq!(equilibrium_rate(7.0, &p).unwrap(), 0.0);
        assert!(equilibrium_rate(-0.1, &p).is_err());
    }

    #[test]
    fn leverage_examples() {
        let p = sp();
        assert_eq!(kelly_leverage(0.0, &p).unwrap(), 1.0);
        assert_relative_eq!(kelly_leverage(1.0, &p).unwrap(), 2.0);
        assert_relative_eq!(kelly_leverage(10.0, &p).unwrap(), 4.5, epsilon = 1e-12);
        assert!(kelly_leverage(-1e-9, &p).is_err());
        // at the interior the Kelly fraction (mu - r) / sigma^2 agrees
        let r = equilibrium_rate(1.0, &p).unwrap();
        assert_relative_eq!((p.mu - r) / p.variance(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn growth_examples() {
        let p = sp();
        for r in [0.0, 0.03, 0.07875] {
            assert_relative_eq!(growth_rate(1.0, r, &p).unwrap(), 0.09, epsilon = 1e-15);
        }
        let kelly_max = p.mu * p.mu / (2.0 * p.variance());
        assert_relative_eq!(
            growth_rate(4.5, 0.0, &p).unwrap(),
            kelly_max,
            epsilon = 1e-12
        );
        assert_relative_eq!(kelly_max, 0.227812_5, epsilon = 1e-12);
        assert_relative_eq!(
            growth_rate(2.0, 0.05625, &p).unwrap(),
            0.10125,
            epsilon = 1e-15
        );
        assert!(growth_rate(0.5, 0.0, &p).is_err());
        assert!(growth_rate(1.0, -0.01, &p).is_err());
    }

    #[test]
    fn optimal_growth_examples() {
        let p = sp();
        assert_relative_eq!(optimal_growth(p.r_inf, &p).unwrap(), p.nu, epsilon = 1e-15);
        assert_relative_eq!(
            optimal_growth(0.0, &p).unwrap(),
            p.mu * p.mu / (2.0 * p.variance()),
            epsilon = 1e-15
        );
        assert_relative_eq!(
            optimal_growth(0.05625, &p).unwrap(),
            0.10125,
            epsilon = 1e-15
        );
        // above the choke price the constraint b >= 1 binds
        assert_relative_eq!(optimal_growth(0.09, &p).unwrap(), p.nu, epsilon = 1e-15);
        assert!(optimal_growth(-0.01, &p).is_err());
    }

    #[test]
    fn demand_examples() {
        let p = sp();
        assert!(demand_quantity(1.0, p.r_inf, &p).abs() < 1e-14);
        assert_relative_eq!(demand_quantity(1.0, 0.0, &p), 3.5, epsilon = 1e-12);
        assert_relative_eq!(demand_quantity(2.0, 0.05625, &p), 2.0, epsilon = 1e-12);

        assert_relative_eq!(
            inverse_demand(0.0, 1.0, &p).unwrap(),
            p.r_inf,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            inverse_demand(1.0, 1.0, &p).unwrap(),
            0.05625,
            epsilon = 1e-15
        );
        assert!(inverse_demand(3.5, 1.0, &p).unwrap().abs() < 1e-15);
        assert!(inverse_demand(1.0, 0.0, &p).is_err());
    }

    #[test]
    fn elasticity_examples() {
        let p = sp();
        let midpoint = (p.b_cap - 1.0) / 2.0;
        assert_relative_eq!(
            demand_elasticity(midpoint, 1.0, &p).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            demand_elasticity(1.0, 1.0, &p).unwrap(),
            2.5,
            epsilon = 1e-12
        );
        assert!(demand_elasticity(3.5, 1.0, &p).unwrap().abs() < 1e-12);
        assert!(demand_elasticity(0.0, 1.0, &p).is_err());
    }

    fn strict_params() -> impl Strategy<Value = ModelParams> {
        (0.05f64..0.4, 0.0f64..0.2).prop_map(|(sigma, excess)| {
            let nu = sigma * sigma / 2.0 + excess;
            derive_params(1.0, 1.0, 1.0, nu, sigma, true).unwrap()
        })
    }

    proptest! {
        #[test]
        fn kelly_growth_identity(p in strict_params(), ratio in 0.0f64..20.0) {
            let b = kelly_leverage(ratio, &p).unwrap();
            let r = equilibrium_rate(ratio, &p).unwrap();
            let lhs = growth_rate(b, r, &p).unwrap();
            let rhs = r + p.variance() * b * b / 2.0;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1e-300));
        }

        #[test]
        fn kelly_dominates_any_leverage(p in strict_params(), ratio in 0.0f64..20.0) {
            let b = kelly_leverage(ratio, &p).unwrap();
            let r = equilibrium_rate(ratio, &p).unwrap();
            let best = growth_rate(b, r, &p).unwrap();
            for i in 0..=200 {
                let other = 1.0 + (p.b_cap - 1.0) * i as f64 / 200.0;
                let g = growth_rate(other, r, &p).unwrap();
                prop_assert!(best >= g - 1e-15, "b={} beats kelly {} at R={}", other, b, ratio);
            }
        }

        #[test]
        fn ranges(p in strict_params(), ratio in 0.0f64..50.0) {
            let r = equilibrium_rate(ratio, &p).unwrap();
            let b = kelly_leverage(ratio, &p).unwrap();
            prop_assert!((0.0..=p.r_inf).contains(&r));
            prop_assert!(b >= 1.0 && b <= p.b_cap);
            let g = optimal_growth(r, &p).unwrap();
            let tol = 1e-14;
            prop_assert!(g >= p.nu - tol && g <= p.mu * p.mu / (2.0 * p.variance()) + tol);
        }

        #[test]
        fn monotone_in_ratio(p in strict_params(), a in 0.0f64..10.0, d in 0.0f64..10.0) {
            prop_assert!(equilibrium_rate(a + d, &p).unwrap() <= equilibrium_rate(a, &p).unwrap());
            prop_assert!(kelly_leverage(a + d, &p).unwrap() >= kelly_leverage(a, &p).unwrap());
        }

        #[test]
        fn demand_round_trip(p in strict_params(), v in 0.1f64..10.0, frac in 0.0f64..=1.0) {
            let r = frac * p.r_inf;
            let q = demand_quantity(v, r, &p).max(0.0);
            let back = inverse_demand(q, v, &p).unwrap();
            prop_assert!((back - r).abs() <= 1e-12);
        }
    }

    #[test]
    fn continuity_on_dense_grid() {
        let p = sp();
        let h = 1e-4;
        let mut prev_r = equilibrium_rate(0.0, &p).unwrap();
        let mut prev_b = kelly_leverage(0.0, &p).unwrap();
        for i in 1..=100_000 {
            let x = i as f64 * h;
            let r = equilibrium_rate(x, &p).unwrap();
            let b = kelly_leverage(x, &p).unwrap();
            assert!((r - prev_r).abs() <= p.variance() * h * (1.0 + 1e-9));
            assert!((b - prev_b).abs() <= h * (1.0 + 1e-9));
            prev_r = r;
            prev_b = b;
        }
    }
}
