//! Nelder–Mead simplex search with constraints enforced by projection.

/// Outcome of one minimization run.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// Best objective value after each iteration (nonincreasing).
    pub history: Vec<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMead {
    pub max_iterations: usize,
    /// Stop once the best value drops below this.
    pub target: f64,
    /// Stop once the simplex values span less than `f_tol + f_rel_tol·|best|`.
    pub f_tol: f64,
    pub f_rel_tol: f64,
    /// Initial simplex step per coordinate, relative to max(|x_i|, floor_i).
    pub relative_step: f64,
    /// Number of simplex rebuilds around the incumbent after convergence.
    pub restarts: usize,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            target: 0.0,
            f_tol: 1e-30,
            f_rel_tol: 1e-14,
            relative_step: 0.1,
            restarts: 6,
        }
    }
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

impl NelderMead {
    /// Minimizes `f` from `x0`. Every point handed to `f` has first been passed
    /// through `project`. `scale[i]` is a lower bound for the step size of
    /// coordinate `i`.
    pub fn minimize<F, P>(&self, f: F, x0: &[f64], scale: &[f64], project: P) -> Minimum
    where
        F: Fn(&[f64]) -> f64,
        P: Fn(&mut [f64]),
    {
        let n = x0.len();
        let mut evaluations = 0;
        let eval = |x: &mut Vec<f64>, evaluations: &mut usize| -> f64 {
            project(x);
            *evaluations += 1;
            let v = f(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };

        let mut best_x = x0.to_vec();
        let mut best = eval(&mut best_x, &mut evaluations);
        let mut history = Vec::new();
        let mut iterations = 0;
        if best <= self.target {
            return Minimum {
                x: best_x,
                value: best,
                iterations,
                evaluations,
                history,
                converged: true,
            };
        }

        for round in 0..=self.restarts {
            let step = self.relative_step / (1u32 << round.min(20)) as f64;
            let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
            simplex.push((best_x.clone(), best));
            for i in 0..n {
                let mut x = best_x.clone();
                let h = step * x[i].abs().max(scale[i]);
                x[i] += h;
                project(&mut x);
                if x[i] == best_x[i] {
                    x[i] -= h;
                }
                let v = eval(&mut x, &mut evaluations);
                simplex.push((x, v));
            }

            loop {
                simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
                if simplex[0].1 < best {
                    best = simplex[0].1;
                    best_x = simplex[0].0.clone();
                }
                let spread = simplex[n].1 - simplex[0].1;
                if best <= self.target
                    || spread <= self.f_tol + self.f_rel_tol * best.abs()
                    || iterations >= self.max_iterations
                {
                    break;
                }
                iterations += 1;

                let mut centroid = vec![0.0; n];
                for (x, _) in &simplex[..n] {
                    for (c, xi) in centroid.iter_mut().zip(x) {
                        *c += xi / n as f64;
                    }
                }
                let worst = simplex[n].clone();
                let along = |t: f64| -> Vec<f64> {
                    centroid
                        .iter()
                        .zip(&worst.0)
                        .map(|(c, w)| c + t * (c - w))
                        .collect()
                };

                let mut xr = along(REFLECT);
                let fr = eval(&mut xr, &mut evaluations);
                if fr < simplex[0].1 {
                    let mut xe = along(REFLECT * EXPAND);
                    let fe = eval(&mut xe, &mut evaluations);
                    simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
                } else if fr < simplex[n - 1].1 {
                    simplex[n] = (xr, fr);
                } else {
                    let (mut xc, outside) = if fr < worst.1 {
                        (along(REFLECT * CONTRACT), true)
                    } else {
                        (along(-CONTRACT), false)
                    };
                    let fc = eval(&mut xc, &mut evaluations);
                    if (outside && fc <= fr) || (!outside && fc < worst.1) {
                        simplex[n] = (xc, fc);
                    } else {
                        let x_best = simplex[0].0.clone();
                        for (x, v) in simplex.iter_mut().skip(1) {
                            for (xi, bi) in x.iter_mut().zip(&x_best) {
                                *xi = bi + SHRINK * (*xi - bi);
                            }
                            *v = eval(x, &mut evaluations);
                        }
                    }
                }
                let round_best = simplex.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
                history.push(best.min(round_best));
            }
            if best <= self.target || iterations >= self.max_iterations {
                break;
            }
        }

        Minimum {
            converged: best <= self.target,
            x: best_x,
            value: best,
            iterations,
            evaluations,
            history,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let nm = NelderMead {
            target: 1e-20,
            ..Default::default()
        };
        let r = nm.minimize(f, &[-1.2, 1.0], &[1.0, 1.0], |_| {});
        assert!(r.converged, "{r:?}");
        assert!((r.x[0] - 1.0).abs() < 1e-8 && (r.x[1] - 1.0).abs() < 1e-8);
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn projection_is_respected() {
        // Unconstrained minimum at (−1, 2); box x ≥ 0.
        let f = |x: &[f64]| {
            assert!(x[0] >= 0.0 && x[1] >= 0.0);
            (x[0] + 1.0).powi(2) + (x[1] - 2.0).powi(2)
        };
        let project = |x: &mut [f64]| x.iter_mut().for_each(|v| *v = v.max(0.0));
        let r = NelderMead::default().minimize(f, &[3.0, 3.0], &[1.0, 1.0], project);
        assert!(r.x[0].abs() < 1e-6 && (r.x[1] - 2.0).abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn starting_at_optimum_needs_no_iterations() {
        let f = |x: &[f64]| x[0] * x[0];
        let nm = NelderMead {
            target: 1e-24,
            ..Default::default()
        };
        let r = nm.minimize(f, &[0.0], &[1.0], |_| {});
        assert_eq!(r.iterations, 0);
        assert!(r.converged);
    }
}
