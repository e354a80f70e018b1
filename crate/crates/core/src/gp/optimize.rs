//! Derivative-free Nelder-Mead minimization.

/// Outcome of one Nelder-Mead run.
#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// Simplex diameter fell below the tolerance.
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct NelderMead {
    /// Offset of the initial simplex vertices along each axis.
    pub initial_step: f64,
    /// Stop when the largest vertex-to-vertex distance is below this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for NelderMead {
    fn default() -> Self {
        NelderMead {
            initial_step: 0.5,
            tolerance: 1e-6,
            max_iterations: 500,
        }
    }
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

fn diameter(simplex: &[(Vec<f64>, f64)]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, (a, _)) in simplex.iter().enumerate() {
        for (b, _) in &simplex[i + 1..] {
            let dist = a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            d = d.max(dist);
        }
    }
    d
}

fn towards(from: &[f64], to: &[f64], coef: f64) -> Vec<f64> {
    from.iter().zip(to).map(|(f, t)| f + coef * (t - f)).collect()
}

impl NelderMead {
    /// Minimizes `f` from `start`. Non-finite objective values are treated
    /// as `+inf`, so infeasible points are simply never accepted.
    pub fn minimize(&self, mut f: impl FnMut(&[f64]) -> f64, start: &[f64]) -> NelderMeadResult {
        let dim = start.len();
        let mut eval = |x: &[f64]| {
            let v = f(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
        simplex.push((start.to_vec(), eval(start)));
        for i in 0..dim {
            let mut x = start.to_vec();
            x[i] += self.initial_step;
            let v = eval(&x);
            simplex.push((x, v));
        }

        let mut iterations = 0;
        let mut converged = false;
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            if diameter(&simplex) < self.tolerance {
                converged = true;
                break;
            }
            if iterations >= self.max_iterations {
                break;
            }
            iterations += 1;

            let worst = simplex[dim].clone();
            let centroid: Vec<f64> = (0..dim)
                .map(|k| simplex[..dim].iter().map(|(x, _)| x[k]).sum::<f64>() / dim as f64)
                .collect();
            let reflected = towards(&centroid, &worst.0, -REFLECT);
            let f_reflected = eval(&reflected);
            let best = simplex[0].1;
            let second_worst = simplex[dim - 1].1;

            if f_reflected < best {
                let expanded = towards(&centroid, &reflected, EXPAND);
                let f_expanded = eval(&expanded);
                simplex[dim] = if f_expanded < f_reflected {
                    (expanded, f_expanded)
                } else {
                    (reflected, f_reflected)
                };
                continue;
            }
            if f_reflected < second_worst {
                simplex[dim] = (reflected, f_reflected);
                continue;
            }
            let (contracted, limit) = if f_reflected < worst.1 {
                (towards(&centroid, &reflected, CONTRACT), f_reflected)
            } else {
                (towards(&centroid, &worst.0, CONTRACT), worst.1)
            };
            let f_contracted = eval(&contracted);
            if f_contracted < limit || (f_contracted == limit && limit.is_finite()) {
                simplex[dim] = (contracted, f_contracted);
                continue;
            }
            let anchor = simplex[0].0.clone();
            for vertex in simplex.iter_mut().skip(1) {
                let x = towards(&anchor, &vertex.0, SHRINK);
                let v = eval(&x);
                *vertex = (x, v);
            }
        }
        let (x, value) = simplex.swap_remove(0);
        NelderMeadResult {
            x,
            value,
            iterations,
            converged,
        }
    }
}
