//! Contrast functions scanned within each candidate interval.
//!
//! Both take a 0-based inclusive window `[lo, hi]` and return the candidate
//! split with the largest contrast. Returned positions are 0-based sample
//! indices; the 1-based change-point index is `pos + 1`.

use crate::{ChangePointError, Result};

/// CUSUM contrast for a mean shift.
///
/// Splitting after position `b` weighs the left and right sums so that a
/// constant signal scores zero and a single jump scores `|jump| *
/// sqrt(m(n-m)/n)` at the true split.
pub fn cusum_contrast(x: &[f64], lo: usize, hi: usize) -> Result<(usize, f64)> {
    debug_assert!(lo < hi && hi < x.len());
    let n = (hi - lo + 1) as f64;
    let total: f64 = x[lo..=hi].iter().sum();
    let mut left = 0.0;
    let mut best = (lo, f64::NEG_INFINITY);
    for b in lo..hi {
        left += x[b];
        let m = (b - lo + 1) as f64;
        let value =
            ((n - m) / (n * m)).sqrt() * left - (m / (n * (n - m))).sqrt() * (total - left);
        let value = value.abs();
        if !value.is_finite() {
            return Err(ChangePointError::NonFiniteContrast { lo, hi });
        }
        if value > best.1 {
            best = (b, value);
        }
    }
    Ok(best)
}

/// Contrast for a slope change under a continuous signal.
///
/// For each interior kink position the hinge `max(t - k, 0)` is projected
/// onto the orthogonal complement of the constant and linear trends over the
/// window; the contrast is the absolute inner product of the data with that
/// unit-norm direction.
pub fn kink_contrast(x: &[f64], lo: usize, hi: usize) -> Result<(usize, f64)> {
    debug_assert!(hi < x.len());
    let n = hi - lo + 1;
    if n < 3 {
        return Ok((lo, f64::NEG_INFINITY));
    }
    let nf = n as f64;
    // Orthonormal basis of span{1, t} over the window.
    let u1 = 1.0 / nf.sqrt();
    let t_mean = (n - 1) as f64 / 2.0;
    let t_norm: f64 = (0..n)
        .map(|i| (i as f64 - t_mean) * (i as f64 - t_mean))
        .sum::<f64>()
        .sqrt();

    let mut best = (lo, f64::NEG_INFINITY);
    for k in (lo + 1)..hi {
        let kk = (k - lo) as f64;
        // Inner products of the hinge with the basis, in closed form:
        // over i = kk+1 .. n-1, hinge value is (i - kk).
        let m = (n - 1) as f64 - kk; // number of strictly positive hinge points
        if m < 1.0 {
            continue;
        }
        let hinge_sum = m * (m + 1.0) / 2.0;
        let hinge_dot_t: f64 = (0..n)
            .map(|i| {
                let h = (i as f64 - kk).max(0.0);
                h * (i as f64 - t_mean)
            })
            .sum();
        let hinge_sq: f64 = (0..n)
            .map(|i| {
                let h = (i as f64 - kk).max(0.0);
                h * h
            })
            .sum();
        let c1 = hinge_sum * u1;
        let c2 = hinge_dot_t / t_norm;
        let resid_sq = hinge_sq - c1 * c1 - c2 * c2;
        if resid_sq <= 1e-12 * hinge_sq.max(1.0) {
            continue;
        }
        let resid_norm = resid_sq.sqrt();
        // <x, psi_k> where psi_k is the normalized hinge residual.
        let mut dot = 0.0;
        for i in 0..n {
            let t = i as f64;
            let h = (t - kk).max(0.0);
            let psi = h - c1 * u1 - c2 * (t - t_mean) / t_norm;
            dot += x[lo + i] * psi;
        }
        let value = (dot / resid_norm).abs();
        if !value.is_finite() {
            return Err(ChangePointError::NonFiniteContrast { lo, hi });
        }
        if value > best.1 {
            best = (k, value);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Direct double-loop CUSUM used as the independent oracle.
    fn naive_cusum(x: &[f64], lo: usize, hi: usize) -> (usize, f64) {
        let n = (hi - lo + 1) as f64;
        let mut best = (lo, f64::NEG_INFINITY);
        for b in lo..hi {
            let m = (b - lo + 1) as f64;
            let sl: f64 = x[lo..=b].iter().sum();
            let sr: f64 = x[b + 1..=hi].iter().sum();
            let v = (((n - m) / (n * m)).sqrt() * sl - ((m / (n * (n - m))).sqrt()) * sr).abs();
            if v > best.1 {
                best = (b, v);
            }
        }
        best
    }

    #[test]
    fn cusum_matches_naive_scan_on_fixed_data() {
        let x: Vec<f64> = (0..50)
            .map(|i| if i < 23 { 2.0 } else { 9.0 } + ((i * 7) % 5) as f64 * 0.3)
            .collect();
        for (lo, hi) in [(0, 49), (5, 40), (20, 30), (0, 24)] {
            let (b, v) = cusum_contrast(&x, lo, hi).unwrap();
            let (nb, nv) = naive_cusum(&x, lo, hi);
            assert_eq!(b, nb);
            assert_relative_eq!(v, nv, max_relative = 1e-12);
        }
    }

    #[test]
    fn cusum_peaks_at_a_clean_jump() {
        let x: Vec<f64> = (0..40).map(|i| if i < 18 { 0.0 } else { 5.0 }).collect();
        let (b, v) = cusum_contrast(&x, 0, 39).unwrap();
        assert_eq!(b, 17); // last index of the left regime
        assert!(v > 5.0);
    }

    #[test]
    fn cusum_is_zero_on_constant_data() {
        let x = vec![4.0; 30];
        let (_, v) = cusum_contrast(&x, 0, 29).unwrap();
        assert!(v.abs() < 1e-10);
    }

    #[test]
    fn kink_contrast_zero_on_straight_line() {
        let x: Vec<f64> = (0..30).map(|i| 2.0 + 0.7 * i as f64).collect();
        let (_, v) = kink_contrast(&x, 0, 29).unwrap();
        assert!(v.abs() < 1e-9, "straight line scored {v}");
    }

    #[test]
    fn kink_contrast_peaks_at_slope_change() {
        let kink = 25usize;
        let x: Vec<f64> = (0..60)
            .map(|i| {
                if i <= kink {
                    i as f64
                } else {
                    kink as f64 - 2.0 * (i - kink) as f64
                }
            })
            .collect();
        let (k, v) = kink_contrast(&x, 0, 59).unwrap();
        assert_eq!(k, kink);
        assert!(v > 10.0);
    }
}
