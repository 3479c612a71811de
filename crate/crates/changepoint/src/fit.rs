//! Least-squares refits of the signal given change-point locations.

use crate::{ChangePointError, Result, SegmentFit, SignalModel};

/// Refits the signal per segment.
///
/// Piecewise constant: per-segment sample means. Continuous piecewise
/// linear: one least-squares linear spline with knots at the locations, so
/// neighbouring segments share their boundary value exactly.
pub fn fit_segments(
    x: &[f64],
    locations: &[usize],
    model: SignalModel,
) -> Result<(Vec<f64>, Vec<SegmentFit>)> {
    let n = x.len();
    if n == 0 {
        return Err(ChangePointError::InvalidArgument("empty series".into()));
    }
    validate_locations(locations, n)?;

    match model {
        SignalModel::PiecewiseConstant => {
            let mut fitted = vec![0.0; n];
            let mut segments = Vec::with_capacity(locations.len() + 1);
            let bounds = segment_bounds(locations, n);
            for (start, end) in bounds {
                let len = (end - start + 1) as f64;
                let mean = x[start - 1..end].iter().sum::<f64>() / len;
                for t in start..=end {
                    fitted[t - 1] = mean;
                }
                segments.push(SegmentFit {
                    start,
                    end,
                    intercept: mean,
                    slope: 0.0,
                });
            }
            Ok((fitted, segments))
        }
        SignalModel::ContinuousPiecewiseLinear => {
            let p = locations.len() + 2;
            // Design: 1, t, (t - r_k)_+ . Solved through normal equations;
            // p stays small so this is plenty stable.
            let mut ata = vec![vec![0.0; p]; p];
            let mut aty = vec![0.0; p];
            let mut row = vec![0.0; p];
            for t in 1..=n {
                design_row(t, locations, &mut row);
                for i in 0..p {
                    aty[i] += row[i] * x[t - 1];
                    for j in 0..p {
                        ata[i][j] += row[i] * row[j];
                    }
                }
            }
            let beta = solve(&mut ata, &mut aty)?;

            let mut fitted = vec![0.0; n];
            for t in 1..=n {
                design_row(t, locations, &mut row);
                fitted[t - 1] = row.iter().zip(&beta).map(|(a, b)| a * b).sum();
            }

            let mut segments = Vec::with_capacity(locations.len() + 1);
            let mut intercept = beta[0];
            let mut slope = beta[1];
            for (idx, (start, end)) in segment_bounds(locations, n).into_iter().enumerate() {
                if idx > 0 {
                    let knot = locations[idx - 1] as f64;
                    let c = beta[idx + 1];
                    slope += c;
                    intercept -= c * knot;
                }
                segments.push(SegmentFit {
                    start,
                    end,
                    intercept,
                    slope,
                });
            }
            Ok((fitted, segments))
        }
    }
}

/// Residual variance over the final segment, with the model's degrees of
/// freedom removed.
pub fn final_segment_residual_var(x: &[f64], segments: &[SegmentFit], model: SignalModel) -> f64 {
    let seg = segments.last().expect("at least one segment");
    let dof = match model {
        SignalModel::PiecewiseConstant => 1,
        SignalModel::ContinuousPiecewiseLinear => 2,
    };
    let n = seg.len();
    if n <= dof {
        return 0.0;
    }
    let ss: f64 = (seg.start..=seg.end)
        .map(|t| {
            let r = x[t - 1] - seg.value_at(t);
            r * r
        })
        .sum();
    ss / (n - dof) as f64
}

fn validate_locations(locations: &[usize], n: usize) -> Result<()> {
    for (i, &r) in locations.iter().enumerate() {
        if r < 1 || r >= n {
            return Err(ChangePointError::InvalidLocations(format!(
                "location {r} outside [1, {}]",
                n - 1
            )));
        }
        if i > 0 && locations[i - 1] >= r {
            return Err(ChangePointError::InvalidLocations(format!(
                "locations must be strictly increasing, got {} then {r}",
                locations[i - 1]
            )));
        }
    }
    Ok(())
}

/// Inclusive 1-based `(start, end)` per segment.
fn segment_bounds(locations: &[usize], n: usize) -> Vec<(usize, usize)> {
    let mut bounds = Vec::with_capacity(locations.len() + 1);
    let mut start = 1;
    for &r in locations {
        bounds.push((start, r));
        start = r + 1;
    }
    bounds.push((start, n));
    bounds
}

fn design_row(t: usize, locations: &[usize], row: &mut [f64]) {
    row[0] = 1.0;
    row[1] = t as f64;
    for (k, &r) in locations.iter().enumerate() {
        row[k + 2] = (t as f64 - r as f64).max(0.0);
    }
}

/// Gaussian elimination with partial pivoting on the (small) normal system.
fn solve(a: &mut [Vec<f64>], b: &mut [f64]) -> Result<Vec<f64>> {
    let p = b.len();
    for col in 0..p {
        let pivot = (col..p)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[pivot][col].abs() < 1e-12 {
            return Err(ChangePointError::InvalidLocations(
                "singular design: a segment has too few points".into(),
            ));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..p {
            let f = a[row][col] / a[col][col];
            for k in col..p {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut beta = vec![0.0; p];
    for col in (0..p).rev() {
        let mut acc = b[col];
        for k in (col + 1)..p {
            acc -= a[col][k] * beta[k];
        }
        beta[col] = acc / a[col][col];
    }
    Ok(beta)
}
