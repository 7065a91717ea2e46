//! Nelder–Mead simplex minimization with dimension-adaptive coefficients.

use alloc::vec;
use alloc::vec::Vec;

/// Outcome of one local search.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalMinimum {
    pub x: Vec<f64>,
    pub fx: f64,
    pub evaluations: usize,
    /// Both the simplex diameter and the spread of objective values fell
    /// below tolerance before the evaluation budget ran out.
    pub converged: bool,
}

/// Minimizes `f` from `x0` with an initial axis-aligned simplex of edge
/// `step`. Stops once every vertex lies within `xtol` (max-norm) of the best
/// one and their objective values within `ftol`, or after `max_evals`
/// function evaluations.
pub fn minimize<F>(f: &mut F, x0: &[f64], step: f64, max_evals: usize, xtol: f64, ftol: f64) -> LocalMinimum
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = x0.len();
    let d = dim.max(1) as f64;
    // Coefficients from Gao & Han (2012); they reduce to the classic 1, 2,
    // 1/2, 1/2 in one dimension and keep the simplex from collapsing in
    // high dimensions.
    let reflect = 1.0;
    let expand = 1.0 + 2.0 / d;
    let contract = 0.75 - 1.0 / (2.0 * d);
    let shrink = 1.0 - 1.0 / d;

    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    for i in 0..dim {
        let mut v = x0.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v, &mut evals)).collect();
    let mut order: Vec<usize> = (0..=dim).collect();

    let mut centroid = vec![0.0; dim];
    let mut trial = vec![0.0; dim];
    let mut trial2 = vec![0.0; dim];
    let mut converged = false;

    loop {
        // Stable sort keeps ties in index order, so runs are reproducible.
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let worst = order[dim];
        let second_worst = order[dim.saturating_sub(1)];

        let spread = values[worst] - values[best];
        let diameter = simplex
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[best])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread <= ftol && diameter <= xtol {
            converged = true;
            break;
        }
        if evals >= max_evals || dim == 0 {
            break;
        }

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &i in &order[..dim] {
            for (c, x) in centroid.iter_mut().zip(&simplex[i]) {
                *c += x;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= d);

        for k in 0..dim {
            trial[k] = centroid[k] + reflect * (centroid[k] - simplex[worst][k]);
        }
        let f_reflect = eval(&trial, &mut evals);

        if f_reflect < values[best] {
            for k in 0..dim {
                trial2[k] = centroid[k] + expand * (trial[k] - centroid[k]);
            }
            let f_expand = eval(&trial2, &mut evals);
            if f_expand < f_reflect {
                simplex[worst].copy_from_slice(&trial2);
                values[worst] = f_expand;
            } else {
                simplex[worst].copy_from_slice(&trial);
                values[worst] = f_reflect;
            }
            continue;
        }
        if f_reflect < values[second_worst] {
            simplex[worst].copy_from_slice(&trial);
            values[worst] = f_reflect;
            continue;
        }

        let outside = f_reflect < values[worst];
        for k in 0..dim {
            trial2[k] = if outside {
                centroid[k] + contract * (trial[k] - centroid[k])
            } else {
                centroid[k] - contract * (centroid[k] - simplex[worst][k])
            };
        }
        let f_contract = eval(&trial2, &mut evals);
        let accept = if outside {
            f_contract <= f_reflect
        } else {
            f_contract < values[worst]
        };
        if accept {
            simplex[worst].copy_from_slice(&trial2);
            values[worst] = f_contract;
            continue;
        }

        let anchor = simplex[best].clone();
        for i in 0..=dim {
            if i == best {
                continue;
            }
            for k in 0..dim {
                simplex[i][k] = anchor[k] + shrink * (simplex[i][k] - anchor[k]);
            }
            values[i] = eval(&simplex[i], &mut evals);
        }
    }

    let best = (0..=dim)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)))
        .unwrap_or(0);
    LocalMinimum {
        x: simplex.swap_remove(best),
        fx: values[best],
        evaluations: evals,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let mut f = |x: &[f64]| (x[0] - 1.0).powi(2) + 10.0 * (x[1] + 2.0).powi(2);
        let r = minimize(&mut f, &[0.0, 0.0], 0.5, 10_000, 1e-10, 1e-14);
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-8 && (r.x[1] + 2.0).abs() < 1e-8);
    }

    #[test]
    fn rosenbrock() {
        let mut f = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let r = minimize(&mut f, &[-1.2, 1.0], 0.5, 20_000, 1e-10, 1e-16);
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let mut f = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let r = minimize(&mut f, &[3.0; 10], 1.0, 30, 1e-12, 1e-12);
        assert!(!r.converged);
        assert!(r.evaluations <= 30 + 11);
    }

    #[test]
    fn nan_is_treated_as_worst() {
        let mut f = |x: &[f64]| if x[0] < 0.0 { f64::NAN } else { (x[0] - 0.5).powi(2) };
        let r = minimize(&mut f, &[1.0], 0.3, 1000, 1e-10, 1e-14);
        assert!((r.x[0] - 0.5).abs() < 1e-6);
    }
}
