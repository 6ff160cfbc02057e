//! Exponential-family descriptors: variance function, link, and dispersion.
//!
//! Three families are supported. Gaussian responses use the identity link,
//! Poisson and quasi-Poisson counts use the log link. The quasi-Poisson
//! family shares the Poisson mean/variance structure but carries a free
//! dispersion parameter estimated by moments, so all of its inference runs
//! through deviance plus that estimate rather than a raw likelihood.

/// Distribution/link pair for a GLM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Normal response, identity link, v(mu) = 1, free dispersion (sigma^2).
    GaussianIdentity,
    /// Poisson counts, log link, v(mu) = mu, dispersion fixed at 1.
    PoissonLog,
    /// Overdispersed counts, log link, v(mu) = mu, free dispersion phi.
    QuasiPoissonLog,
}

impl Family {
    /// Whether the family carries a free dispersion parameter.
    pub fn has_dispersion(self) -> bool {
        !matches!(self, Family::PoissonLog)
    }

    /// Variance function v(mu).
    pub fn variance(self, mu: f64) -> f64 {
        match self {
            Family::GaussianIdentity => 1.0,
            Family::PoissonLog | Family::QuasiPoissonLog => mu,
        }
    }

    /// Link eta = g(mu).
    pub fn link(self, mu: f64) -> f64 {
        match self {
            Family::GaussianIdentity => mu,
            Family::PoissonLog | Family::QuasiPoissonLog => mu.ln(),
        }
    }

    /// Inverse link mu = g^{-1}(eta).
    pub fn inverse_link(self, eta: f64) -> f64 {
        match self {
            Family::GaussianIdentity => eta,
            // eta is capped so that exp() cannot overflow to infinity; the
            // fitted means this produces (up to ~1e300) stay finite.
            Family::PoissonLog | Family::QuasiPoissonLog => eta.min(690.0).exp(),
        }
    }

    /// Derivative d mu / d eta at the given mean.
    pub fn mean_derivative(self, mu: f64) -> f64 {
        match self {
            Family::GaussianIdentity => 1.0,
            Family::PoissonLog | Family::QuasiPoissonLog => mu,
        }
    }

    /// Whether the family uses the log link (and therefore requires mu > 0).
    pub fn log_link(self) -> bool {
        !matches!(self, Family::GaussianIdentity)
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::GaussianIdentity => "gaussian-identity",
            Family::PoissonLog => "poisson-log",
            Family::QuasiPoissonLog => "quasipoisson-log",
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dispersion_flags() {
        assert!(Family::GaussianIdentity.has_dispersion());
        assert!(Family::QuasiPoissonLog.has_dispersion());
        assert!(!Family::PoissonLog.has_dispersion());
    }

    #[test]
    fn variance_functions() {
        assert_eq!(Family::GaussianIdentity.variance(3.7), 1.0);
        assert_eq!(Family::PoissonLog.variance(3.7), 3.7);
        assert_eq!(Family::QuasiPoissonLog.variance(0.2), 0.2);
    }

    proptest! {
        // g^{-1}(g(mu)) = mu to 1e-12 relative on the valid mean domain.
        #[test]
        fn link_roundtrip_gaussian(mu in -1e6f64..1e6) {
            let fam = Family::GaussianIdentity;
            let back = fam.inverse_link(fam.link(mu));
            prop_assert!((back - mu).abs() <= 1e-12 * mu.abs().max(1.0));
        }

        #[test]
        fn link_roundtrip_log(mu in 1e-8f64..1e12) {
            for fam in [Family::PoissonLog, Family::QuasiPoissonLog] {
                let back = fam.inverse_link(fam.link(mu));
                prop_assert!((back - mu).abs() <= 1e-12 * mu.abs());
            }
        }
    }
}
