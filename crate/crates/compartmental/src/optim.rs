//! Bounded derivative-free minimization: Nelder-Mead in a sigmoid-warped
//! box, with Latin-hypercube multi-starts.

use epiwave_core::RngSeed;
use rand::Rng;

/// Inclusive parameter box.
#[derive(Debug, Clone)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Maps unconstrained coordinates into the box.
    pub fn to_box(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&ui, (&lo, &hi))| lo + (hi - lo) * sigmoid(ui))
            .collect()
    }

    /// Inverse map for an interior point (clamped slightly inside).
    pub fn from_box(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&xi, (&lo, &hi))| {
                let f = ((xi - lo) / (hi - lo)).clamp(1e-6, 1.0 - 1e-6);
                (f / (1.0 - f)).ln()
            })
            .collect()
    }
}

fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// Latin-hypercube sample of `count` points inside the box.
pub fn latin_hypercube(bounds: &Bounds, count: usize, seed: RngSeed) -> Vec<Vec<f64>> {
    let dim = bounds.dim();
    let mut rng = seed.rng();
    // One random permutation of strata per dimension.
    let mut strata: Vec<Vec<usize>> = (0..dim)
        .map(|_| {
            let mut order: Vec<usize> = (0..count).collect();
            for i in (1..count).rev() {
                let j = rng.random_range(0..=i);
                order.swap(i, j);
            }
            order
        })
        .collect();
    (0..count)
        .map(|k| {
            (0..dim)
                .map(|d| {
                    let cell = strata[d].pop().unwrap_or(k);
                    let jitter: f64 = rng.random();
                    let fraction = (cell as f64 + jitter) / count as f64;
                    bounds.lower[d] + (bounds.upper[d] - bounds.lower[d]) * fraction
                })
                .collect()
        })
        .collect()
}

/// Result of one Nelder-Mead run.
#[derive(Debug, Clone)]
pub struct NmOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Nelder-Mead in unconstrained coordinates; `f` sees box coordinates.
/// `scale` sets the initial simplex edge in warped space.
pub fn nelder_mead<F>(
    bounds: &Bounds,
    start: &[f64],
    mut f: F,
    max_evals: usize,
    tol: f64,
    scale: f64,
) -> NmOutcome
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = bounds.dim();
    let mut evals = 0usize;
    let mut eval = |u: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = f(&bounds.to_box(u));
        if v.is_finite() {
            v
        } else {
            f64::MAX / 4.0
        }
    };

    let u0 = bounds.from_box(start);
    let mut simplex: Vec<Vec<f64>> = vec![u0.clone()];
    for d in 0..dim {
        let mut v = u0.clone();
        v[d] += scale;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|u| eval(u, &mut evals)).collect();

    while evals < max_evals {
        // Sort ascending by value.
        let mut order: Vec<usize> = (0..simplex.len()).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        let sorted: Vec<Vec<f64>> = order.iter().map(|&i| simplex[i].clone()).collect();
        let sorted_vals: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        simplex = sorted;
        values = sorted_vals;

        let spread = values[dim] - values[0];
        if spread.abs() < tol * (1.0 + values[0].abs()) {
            return NmOutcome {
                x: bounds.to_box(&simplex[0]),
                value: values[0],
                evaluations: evals,
                converged: true,
            };
        }

        // Centroid of all but the worst.
        let mut centroid = vec![0.0; dim];
        for u in &simplex[..dim] {
            for (c, ui) in centroid.iter_mut().zip(u) {
                *c += ui / dim as f64;
            }
        }
        let worst = simplex[dim].clone();
        let reflect: Vec<f64> = centroid
            .iter()
            .zip(&worst)
            .map(|(c, w)| c + (c - w))
            .collect();
        let f_reflect = eval(&reflect, &mut evals);

        if f_reflect < values[0] {
            let expand: Vec<f64> = centroid
                .iter()
                .zip(&worst)
                .map(|(c, w)| c + 2.0 * (c - w))
                .collect();
            let f_expand = eval(&expand, &mut evals);
            if f_expand < f_reflect {
                simplex[dim] = expand;
                values[dim] = f_expand;
            } else {
                simplex[dim] = reflect;
                values[dim] = f_reflect;
            }
        } else if f_reflect < values[dim - 1] {
            simplex[dim] = reflect;
            values[dim] = f_reflect;
        } else {
            let contract: Vec<f64> = centroid
                .iter()
                .zip(&worst)
                .map(|(c, w)| c + 0.5 * (w - c))
                .collect();
            let f_contract = eval(&contract, &mut evals);
            if f_contract < values[dim] {
                simplex[dim] = contract;
                values[dim] = f_contract;
            } else {
                // Shrink towards the best vertex.
                let best = simplex[0].clone();
                for k in 1..=dim {
                    let shrunk: Vec<f64> = best
                        .iter()
                        .zip(&simplex[k])
                        .map(|(b, u)| b + 0.5 * (u - b))
                        .collect();
                    values[k] = eval(&shrunk, &mut evals);
                    simplex[k] = shrunk;
                }
            }
        }
    }

    let best = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0);
    NmOutcome {
        x: bounds.to_box(&simplex[best]),
        value: values[best],
        evaluations: evals,
        converged: false,
    }
}
