//! Derivative-free simplex minimization.
//!
//! Uses the dimension-adaptive coefficients of Gao and Han, which keep the
//! method usable at the 32 parameters of the Stinespring chart. After the
//! simplex collapses the search is restarted from the incumbent with a fresh
//! simplex while the iteration budget lasts and progress is made.

#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    pub max_iterations: usize,
    /// Stop when the spread of simplex values falls below this.
    pub tolerance: f64,
    /// Edge length of the initial simplex.
    pub initial_step: f64,
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

struct Coefficients {
    reflect: f64,
    expand: f64,
    contract: f64,
    shrink: f64,
}

impl Coefficients {
    fn adaptive(dim: usize) -> Self {
        let d = dim as f64;
        Self {
            reflect: 1.0,
            expand: 1.0 + 2.0 / d,
            contract: 0.75 - 1.0 / (2.0 * d),
            shrink: 1.0 - 1.0 / d,
        }
    }
}

fn combine(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    // a + t (a - b)
    a.iter().zip(b).map(|(x, y)| x + t * (x - y)).collect()
}

/// Minimizes `f` from `x0`. Non-finite objective values are treated as `+∞`.
pub fn minimize(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    opts: &NelderMeadOptions,
) -> NelderMeadResult {
    let dim = x0.len();
    assert!(dim > 0, "cannot minimize over zero parameters");
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let k = Coefficients::adaptive(dim);

    let mut best_x = x0.to_vec();
    let mut best_v = eval(x0);
    let mut iterations = 0;
    let mut converged = false;
    let mut step = opts.initial_step;

    while iterations < opts.max_iterations {
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
        simplex.push((best_x.clone(), best_v));
        for i in 0..dim {
            let mut x = best_x.clone();
            x[i] += step;
            let v = eval(&x);
            simplex.push((x, v));
        }
        let start_v = best_v;
        let mut collapsed = false;

        while iterations < opts.max_iterations {
            iterations += 1;
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let spread = simplex[dim].1 - simplex[0].1;
            if spread.is_finite() && spread <= opts.tolerance {
                collapsed = true;
                break;
            }
            let mut centroid = vec![0.0; dim];
            for (x, _) in &simplex[..dim] {
                for (c, xi) in centroid.iter_mut().zip(x) {
                    *c += xi / dim as f64;
                }
            }
            let worst = simplex[dim].0.clone();
            let worst_v = simplex[dim].1;
            let reflected = combine(&centroid, &worst, k.reflect);
            let rv = eval(&reflected);
            if rv < simplex[0].1 {
                let expanded = combine(&centroid, &worst, k.reflect * k.expand);
                let ev = eval(&expanded);
                simplex[dim] = if ev < rv {
                    (expanded, ev)
                } else {
                    (reflected, rv)
                };
                continue;
            }
            if rv < simplex[dim - 1].1 {
                simplex[dim] = (reflected, rv);
                continue;
            }
            let (contracted, cv) = if rv < worst_v {
                let x = combine(&centroid, &worst, k.reflect * k.contract);
                let v = eval(&x);
                (x, v)
            } else {
                let x = combine(&centroid, &worst, -k.contract);
                let v = eval(&x);
                (x, v)
            };
            if cv < rv.min(worst_v) {
                simplex[dim] = (contracted, cv);
                continue;
            }
            let anchor = simplex[0].0.clone();
            for entry in simplex.iter_mut().skip(1) {
                let x: Vec<f64> = anchor
                    .iter()
                    .zip(&entry.0)
                    .map(|(a, b)| a + k.shrink * (b - a))
                    .collect();
                let v = eval(&x);
                *entry = (x, v);
            }
        }

        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[0].1 < best_v {
            best_x = simplex[0].0.clone();
            best_v = simplex[0].1;
        }
        if collapsed && start_v - best_v <= opts.tolerance {
            converged = true;
            break;
        }
        step = (step * 0.5).max(1e-4);
    }

    NelderMeadResult {
        x: best_x,
        value: best_v,
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> NelderMeadOptions {
        NelderMeadOptions {
            max_iterations: 5000,
            tolerance: 1e-14,
            initial_step: 0.5,
        }
    }

    #[test]
    fn quadratic_bowl() {
        let r = minimize(
            |x| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 2.0).powi(2),
            &[0.0, 0.0],
            &opts(),
        );
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] + 2.0).abs() < 1e-5);
    }

    #[test]
    fn rosenbrock() {
        let r = minimize(
            |x| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2),
            &[-1.2, 1.0],
            &opts(),
        );
        assert!(r.value < 1e-10, "{r:?}");
    }

    #[test]
    fn higher_dimension_sphere() {
        let r = minimize(
            |x| x.iter().map(|v| (v - 0.5).powi(2)).sum(),
            &[0.0; 16],
            &opts(),
        );
        assert!(r.value < 1e-10, "{r:?}");
    }

    #[test]
    fn infinite_region_is_avoided() {
        let r = minimize(
            |x| {
                if x[0] < 0.0 {
                    f64::NAN
                } else {
                    (x[0] - 0.3).powi(2)
                }
            },
            &[1.0],
            &opts(),
        );
        assert!((r.x[0] - 0.3).abs() < 1e-5);
    }

    #[test]
    fn respects_budget() {
        let r = minimize(
            |x| x[0].powi(2),
            &[10.0],
            &NelderMeadOptions {
                max_iterations: 3,
                ..opts()
            },
        );
        assert!(r.iterations <= 3);
        assert!(!r.converged);
    }
}
