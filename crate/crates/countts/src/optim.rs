//! Small dense BFGS with backtracking line search.

/// Minimizes `f` from `x0` given its gradient; returns `(x, f(x), converged,
/// iterations)`.
pub fn bfgs<F>(x0: &[f64], mut f: F, max_iter: usize, grad_tol: f64) -> (Vec<f64>, f64, bool, usize)
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut fx, mut gx) = f(&x);
    // Inverse Hessian approximation, started at the identity.
    let mut h = vec![vec![0.0; n]; n];
    for (i, row) in h.iter_mut().enumerate() {
        row[i] = 1.0;
    }

    for iter in 0..max_iter {
        let gnorm = gx.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if gnorm < grad_tol {
            return (x, fx, true, iter);
        }

        // Search direction p = -H g.
        let mut p = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                p[i] -= h[i][j] * gx[j];
            }
        }
        let mut slope: f64 = p.iter().zip(&gx).map(|(pi, gi)| pi * gi).sum();
        if slope >= 0.0 {
            // Reset a spoiled approximation to steepest descent.
            for (i, row) in h.iter_mut().enumerate() {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = if i == j { 1.0 } else { 0.0 };
                }
            }
            for (pi, gi) in p.iter_mut().zip(&gx) {
                *pi = -gi;
            }
            slope = -gx.iter().map(|g| g * g).sum::<f64>();
        }

        // Backtracking Armijo search.
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xt: Vec<f64> = x.iter().zip(&p).map(|(xi, pi)| xi + step * pi).collect();
            let (ft, gt) = f(&xt);
            if ft.is_finite() && ft <= fx + 1e-4 * step * slope {
                accepted = Some((xt, ft, gt));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            return (x, fx, false, iter);
        };

        // BFGS inverse update.
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&gx).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        if sy > 1e-12 {
            let rho = 1.0 / sy;
            // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
            let mut hy = vec![0.0; n];
            for i in 0..n {
                for j in 0..n {
                    hy[i] += h[i][j] * y[j];
                }
            }
            let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
            for i in 0..n {
                for j in 0..n {
                    h[i][j] += rho * rho * yhy * s[i] * s[j]
                        - rho * (s[i] * hy[j] + hy[i] * s[j])
                        + rho * s[i] * s[j];
                }
            }
        }

        let f_change = (fx - fn_).abs();
        x = xn;
        fx = fn_;
        gx = gn;
        if f_change < 1e-13 * (1.0 + fx.abs()) {
            return (x, fx, true, iter + 1);
        }
    }
    let gnorm = gx.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    (x, fx, gnorm < grad_tol, max_iter)
}

/// Gauss-Jordan inverse of a small symmetric matrix; `None` when singular.
pub fn invert(matrix: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()
        })?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        let div = a[col][col];
        for v in a[col].iter_mut() {
            *v /= div;
        }
        for row in 0..n {
            if row != col {
                let factor = a[row][col];
                if factor != 0.0 {
                    for k in 0..(2 * n) {
                        let sub = factor * a[col][k];
                        a[row][k] -= sub;
                    }
                }
            }
        }
    }
    Some(a.into_iter().map(|row| row[n..].to_vec()).collect())
}
