//! Deep parameters of the economy and the quantities derived from them.

use crate::error::ModelError;

/// Whether a parameter set satisfies `nu >= sigma^2 / 2` (equivalently a
/// maximum leverage of at least one and a non-negative choke price).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// Inside the admissible region; every theorem applies.
    Strict,
    /// Built with `strict = false` and outside the admissible region. The
    /// margin rate is pinned at zero; theorem checks do not apply.
    Permissive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Initial size of the call money pool.
    pub q0: f64,
    /// Initial gambler equity.
    pub v0: f64,
    /// Initial index price.
    pub s0: f64,
    /// Asymptotic log growth rate of the index, per year.
    pub nu: f64,
    /// Annual log volatility.
    pub sigma: f64,
    /// Drift, `nu + sigma^2 / 2`.
    pub mu: f64,
    /// Choke price of margin debt, `mu - sigma^2`.
    pub r_inf: f64,
    /// Maximum (zero-rate) Kelly leverage, `mu / sigma^2`.
    pub b_cap: f64,
    pub domain: Domain,
}

/// Builds a [`ModelParams`] and fills in `mu`, `r_inf` and `b_cap`.
///
/// With `strict` set, `nu < sigma^2 / 2` is rejected; otherwise the set is
/// built and tagged [`Domain::Permissive`].
pub fn derive_params(
    q0: f64,
    v0: f64,
    s0: f64,
    nu: f64,
    sigma: f64,
    strict: bool,
) -> Result<ModelParams, ModelError> {
    positive("sigma", sigma)?;
    positive("q0", q0)?;
    positive("V0", v0)?;
    positive("S0", s0)?;
    if !nu.is_finite() {
        return Err(ModelError::Parameter {
            name: "nu",
            value: nu,
            reason: "must be finite",
        });
    }
    let var = sigma * sigma;
    let mu = nu + var / 2.0;
    let r_inf = mu - var;
    let b_cap = mu / var;
    let domain = if r_inf >= 0.0 {
        Domain::Strict
    } else if strict {
        return Err(ModelError::domain(
            "derive_params",
            alloc::format!(
                "nu = {nu} is below sigma^2/2 = {}; maximum leverage {b_cap} < 1",
                var / 2.0
            ),
        ));
    } else {
        Domain::Permissive
    };
    Ok(ModelParams {
        q0,
        v0,
        s0,
        nu,
        sigma,
        mu,
        r_inf,
        b_cap,
        domain,
    })
}

fn positive(name: &'static str, value: f64) -> Result<(), ModelError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(ModelError::Parameter {
            name,
            value,
            reason: "must be finite and > 0",
        })
    }
}

impl ModelParams {
    /// Initial relative market size `q0 / V0`.
    pub fn initial_ratio(&self) -> f64 {
        self.q0 / self.v0
    }

    pub fn variance(&self) -> f64 {
        self.sigma * self.sigma
    }

    pub fn is_strict(&self) -> bool {
        self.domain == Domain::Strict
    }

    /// Copy with a different initial money-market size.
    pub fn with_q0(&self, q0: f64) -> Result<ModelParams, ModelError> {
        derive_params(q0, self.v0, self.s0, self.nu, self.sigma, self.is_strict())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sp500_stylized_parameters() {
        let p = derive_params(1.0, 1.0, 1.0, 0.09, 0.15, true).unwrap();
        assert_relative_eq!(p.mu, 0.10125, epsilon = 1e-15);
        assert_relative_eq!(p.r_inf, 0.07875, epsilon = 1e-15);
        assert_relative_eq!(p.b_cap, 4.5, epsilon = 1e-12);
        assert_eq!(p.domain, Domain::Strict);
    }

    #[test]
    fn boundary_of_admissible_region() {
        let sigma: f64 = 0.2;
        let p = derive_params(1.0, 1.0, 1.0, sigma * sigma / 2.0, sigma, true).unwrap();
        assert_eq!(p.r_inf, 0.0);
        assert_relative_eq!(p.b_cap, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn lowest_table_row_is_strict() {
        let p = derive_params(1.0, 1.0, 1.0, 0.05, 0.20, true).unwrap();
        assert_relative_eq!(p.r_inf, 0.03, epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            derive_params(1.0, 1.0, 1.0, 0.09, 0.0, true),
            Err(ModelError::Parameter { name: "sigma", .. })
        ));
        assert!(matches!(
            derive_params(0.0, 1.0, 1.0, 0.09, 0.15, true),
            Err(ModelError::Parameter { name: "q0", .. })
        ));
        assert!(matches!(
            derive_params(1.0, -1.0, 1.0, 0.09, 0.15, true),
            Err(ModelError::Parameter { name: "V0", .. })
        ));
        assert!(matches!(
            derive_params(1.0, 1.0, f64::NAN, 0.09, 0.15, true),
            Err(ModelError::Parameter { name: "S0", .. })
        ));
    }

    #[test]
    fn strict_vs_permissive() {
        assert!(matches!(
            derive_params(1.0, 1.0, 1.0, 0.01, 0.2, true),
            Err(ModelError::Domain { .. })
        ));
        let p = derive_params(1.0, 1.0, 1.0, 0.01, 0.2, false).unwrap();
        assert_eq!(p.domain, Domain::Permissive);
        assert!(p.r_inf < 0.0);
    }
}
