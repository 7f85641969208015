//! Small deterministic numerical helpers: grids, summation and a Nelder–Mead
//! minimizer for the low-dimensional payoff landscapes.

/// `n` evenly spaced points covering `[lo, hi]` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
                .collect()
        }
    }
}

/// Pairwise (cascade) summation. The reduction tree depends only on the
/// length, so results are bitwise reproducible for a given input order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 8;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_pi(angle: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut a = angle.rem_euclid(TAU);
    if a > PI {
        a -= TAU;
    }
    a
}

#[derive(Debug, Clone, Copy)]
pub struct NelderMead {
    /// Stop when the simplex diameter drops below this.
    pub x_tol: f64,
    /// Stop when the spread of function values drops below this.
    pub f_tol: f64,
    pub max_iter: usize,
    /// Edge length of the initial simplex.
    pub initial_step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            x_tol: 1e-10,
            f_tol: 1e-15,
            max_iter: 5000,
            initial_step: 0.05,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl NelderMead {
    /// Minimizes `f` starting from `start`, using the standard
    /// reflection/expansion/contraction/shrink coefficients (1, 2, ½, ½).
    pub fn minimize<F>(&self, f: F, start: &[f64]) -> Minimum
    where
        F: Fn(&[f64]) -> f64,
    {
        let dim = start.len();
        let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
        simplex.push(start.to_vec());
        for i in 0..dim {
            let mut v = start.to_vec();
            v[i] += self.initial_step;
            simplex.push(v);
        }
        let mut values: Vec<f64> = simplex.iter().map(|x| f(x)).collect();

        let mut iterations = 0;
        let mut converged = false;
        while iterations < self.max_iter {
            iterations += 1;

            let mut order: Vec<usize> = (0..=dim).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            values = order.iter().map(|&i| values[i]).collect();

            let best = &simplex[0];
            let diameter = simplex[1..]
                .iter()
                .map(|v| {
                    v.iter()
                        .zip(best)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            if diameter <= self.x_tol && (values[dim] - values[0]).abs() <= self.f_tol {
                converged = true;
                break;
            }

            let centroid: Vec<f64> = (0..dim)
                .map(|j| simplex[..dim].iter().map(|v| v[j]).sum::<f64>() / dim as f64)
                .collect();
            let along = |coef: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&simplex[dim])
                    .map(|(c, w)| c + coef * (w - c))
                    .collect()
            };

            let reflected = along(-1.0);
            let fr = f(&reflected);
            if fr < values[0] {
                let expanded = along(-2.0);
                let fe = f(&expanded);
                if fe < fr {
                    simplex[dim] = expanded;
                    values[dim] = fe;
                } else {
                    simplex[dim] = reflected;
                    values[dim] = fr;
                }
                continue;
            }
            if fr < values[dim - 1] {
                simplex[dim] = reflected;
                values[dim] = fr;
                continue;
            }
            let (contracted, fc) = if fr < values[dim] {
                let c = along(-0.5);
                let fc = f(&c);
                (c, fc)
            } else {
                let c = along(0.5);
                let fc = f(&c);
                (c, fc)
            };
            if fc < values[dim].min(fr) {
                simplex[dim] = contracted;
                values[dim] = fc;
                continue;
            }
            let anchor = simplex[0].clone();
            for k in 1..=dim {
                for (x, a) in simplex[k].iter_mut().zip(&anchor) {
                    *x = a + 0.5 * (*x - a);
                }
                values[k] = f(&simplex[k]);
            }
        }

        let (best, value) = simplex
            .into_iter()
            .zip(values)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("simplex is never empty");
        Minimum {
            x: best,
            value,
            iterations,
            converged,
        }
    }
}
