//! Error metrics shared by the fitting and validation paths.

use crate::error::CoreError;
use crate::Result;

/// Relative error `sqrt(sum_t (y_t - x_t)^2 / sum_t x_t^2)` between a
/// prediction `pred` and observations `obs`.
pub fn relative_error(pred: &[f64], obs: &[f64]) -> Result<f64> {
    if pred.len() != obs.len() || pred.is_empty() {
        return Err(CoreError::InvalidArgument(format!(
            "relative_error needs equal non-empty lengths, got {} and {}",
            pred.len(),
            obs.len()
        )));
    }
    let num: f64 = pred
        .iter()
        .zip(obs)
        .map(|(y, x)| (y - x) * (y - x))
        .sum();
    let den: f64 = obs.iter().map(|x| x * x).sum();
    if den == 0.0 {
        return Err(CoreError::Domain(
            "relative_error undefined for identically zero observations".into(),
        ));
    }
    Ok((num / den).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identical_series_give_zero() {
        let x = [3.0, 1.0, 4.0, 1.5];
        assert_eq!(relative_error(&x, &x).unwrap(), 0.0);
    }

    #[test]
    fn hand_computed_ratio() {
        // sqrt((9 + 16) / (9 + 16)) = 1
        assert_relative_eq!(relative_error(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 1.0);
    }

    #[test]
    fn zero_observations_are_a_domain_error() {
        assert!(matches!(
            relative_error(&[1.0], &[0.0]).unwrap_err(),
            CoreError::Domain(_)
        ));
    }

    #[test]
    fn length_mismatch_is_an_argument_error() {
        assert!(matches!(
            relative_error(&[1.0], &[1.0, 2.0]).unwrap_err(),
            CoreError::InvalidArgument(_)
        ));
    }

    #[test]
    fn permutation_invariance() {
        let pred = [1.0, 2.0, 3.0, 4.0];
        let obs = [1.5, 2.5, 2.0, 5.0];
        let base = relative_error(&pred, &obs).unwrap();
        let perm = [2usize, 0, 3, 1];
        let p: Vec<f64> = perm.iter().map(|&i| pred[i]).collect();
        let o: Vec<f64> = perm.iter().map(|&i| obs[i]).collect();
        assert_relative_eq!(relative_error(&p, &o).unwrap(), base);
    }
}
