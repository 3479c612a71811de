//! Closed-form effective reproduction number of the reported/unreported
//! model: `R = alpha beta D + (1 - alpha) mu beta D`.

pub fn effective_r(alpha: f64, beta: f64, mu: f64, d_inf: f64) -> f64 {
    alpha * beta * d_inf + (1.0 - alpha) * mu * beta * d_inf
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    #[test]
    fn full_reporting_reduces_to_beta_d() {
        assert_relative_eq!(effective_r(1.0, 0.4, 0.5, 3.5), 1.4);
    }

    #[test]
    fn no_transmission_gives_zero() {
        assert_eq!(effective_r(0.7, 0.0, 0.5, 3.5), 0.0);
    }

    #[test]
    fn direct_evaluation() {
        assert_relative_eq!(effective_r(0.5, 1.0, 0.5, 3.5), 2.625);
    }

    #[test]
    fn monotone_in_alpha_beta_and_d() {
        let mut rng = epiwave_core::RngSeed::new(8).rng();
        for _ in 0..200 {
            let alpha = rng.random_range(0.05..0.95);
            let beta = rng.random_range(0.05..2.0);
            let mu = rng.random_range(0.05..0.95);
            let d = rng.random_range(1.0..10.0);
            let base = effective_r(alpha, beta, mu, d);
            // Increasing alpha helps when mu < 1; beta and D always help.
            assert!(effective_r(alpha + 0.05, beta, mu, d) > base);
            assert!(effective_r(alpha, beta + 0.05, mu, d) > base);
            assert!(effective_r(alpha, beta, mu, d + 0.5) > base);
        }
    }
}
