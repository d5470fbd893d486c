//! Levenberg–Marquardt on a residual vector, with a finite-difference
//! Jacobian, geodesic acceleration, and bound constraints enforced by
//! projection.

use nalgebra::{DMatrix, DVector};

use super::simplex::Minimum;

#[derive(Debug, Clone, PartialEq)]
pub struct LevenbergMarquardt {
    pub max_iterations: usize,
    /// Stop once the sum of squares drops below this.
    pub target: f64,
    /// Finite-difference step relative to max(|x_i|, scale_i).
    pub fd_step: f64,
    /// Stop when the last few accepted steps together improved the sum of
    /// squares by less than this fraction.
    pub rel_improvement: f64,
}

impl Default for LevenbergMarquardt {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            target: 0.0,
            fd_step: 1e-3,
            rel_improvement: 1e-3,
        }
    }
}

const LAMBDA_MIN: f64 = 1e-30;
const STALL_WINDOW: usize = 10;
const GEODESIC_PROBE: f64 = 0.1;
const ACCEL_RATIO: f64 = 0.75;
const LAMBDA_MAX: f64 = 1e12;

impl LevenbergMarquardt {
    /// Minimizes ‖r(x)‖² from `x0`. `residual` returns `None` where the model
    /// cannot be evaluated. Every point handed to it has been projected first.
    pub fn minimize<R, P>(&self, residual: R, x0: &[f64], scale: &[f64], project: P) -> Minimum
    where
        R: Fn(&[f64]) -> Option<Vec<f64>>,
        P: Fn(&mut [f64]),
    {
        let n = x0.len();
        let mut evaluations = 0;
        let eval = |x: &mut Vec<f64>, evaluations: &mut usize| -> Option<(Vec<f64>, f64)> {
            project(x);
            *evaluations += 1;
            let r = residual(x)?;
            let f: f64 = r.iter().map(|e| e * e).sum();
            f.is_finite().then_some((r, f))
        };

        let mut x = x0.to_vec();
        let mut history = Vec::new();
        let mut iterations = 0;
        let Some((mut r, mut f)) = eval(&mut x, &mut evaluations) else {
            return Minimum {
                x,
                value: f64::INFINITY,
                iterations,
                evaluations,
                history,
                converged: false,
            };
        };
        let mut lambda = 1e-3;
        let mut stalled = false;

        while f > self.target && iterations < self.max_iterations {
            iterations += 1;
            let m = r.len();
            let mut jac = DMatrix::<f64>::zeros(m, n);
            for j in 0..n {
                let h = self.fd_step * x[j].abs().max(scale[j]);
                let Some(col) = derivative(&x, &r, j, h, &mut evaluations, &eval) else {
                    continue;
                };
                for (i, d) in col.into_iter().enumerate() {
                    jac[(i, j)] = d;
                }
            }
            // With unit-norm columns, diag(JᵀJ) = 1 and the damped step
            // solves min ‖J δ + r‖² + λ‖δ‖². The SVD keeps the nearly flat
            // directions usable, which the normal equations would lose.
            let norms: Vec<f64> = (0..n)
                .map(|j| {
                    let c = jac.column(j).norm();
                    if c > 0.0 {
                        c
                    } else {
                        1.0
                    }
                })
                .collect();
            for (j, c) in norms.iter().enumerate() {
                jac.column_mut(j).scale_mut(1.0 / c);
            }
            let svd = jac.clone().svd(true, true);
            let (u, v_t) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));

            let r_now = DVector::from_column_slice(&r);
            let solve = |rhs: &DVector<f64>, lambda: f64| -> DVector<f64> {
                let coeffs = u.transpose() * rhs;
                let filtered = DVector::from_iterator(
                    coeffs.len(),
                    svd.singular_values.iter().zip(coeffs.iter()).map(|(s, c)| {
                        if *s > 0.0 {
                            -s * c / (s * s + lambda)
                        } else {
                            0.0
                        }
                    }),
                );
                v_t.transpose() * filtered
            };
            let unscale = |step: &DVector<f64>| -> Vec<f64> {
                x.iter()
                    .zip(step.iter().zip(&norms))
                    .map(|(a, (d, c))| a + d / c)
                    .collect()
            };

            let mut accepted = None;
            while lambda <= LAMBDA_MAX {
                let velocity = solve(&r_now, lambda);
                // Geodesic acceleration: second directional derivative of r
                // along the velocity, by one extra evaluation.
                let mut step = velocity.clone();
                let mut probe = unscale(&(&velocity * GEODESIC_PROBE));
                if let Some((rp, _)) = eval(&mut probe, &mut evaluations) {
                    let jv = &jac * &velocity;
                    let rvv = DVector::from_iterator(
                        rp.len(),
                        rp.iter().zip(&r).zip(jv.iter()).map(|((p, r0), d)| {
                            2.0 / GEODESIC_PROBE * ((p - r0) / GEODESIC_PROBE - d)
                        }),
                    );
                    let accel = solve(&rvv, lambda);
                    if 2.0 * accel.norm() <= ACCEL_RATIO * velocity.norm() {
                        step += accel * 0.5;
                    } else {
                        lambda *= 4.0;
                        continue;
                    }
                }
                let mut trial = unscale(&step);
                if let Some((rt, ft)) = eval(&mut trial, &mut evaluations) {
                    if ft < f {
                        accepted = Some((trial, rt, ft));
                        lambda = (lambda / 10.0).max(LAMBDA_MIN);
                        break;
                    }
                }
                lambda *= 4.0;
            }
            match accepted {
                Some((xn, rn, fn_)) => {
                    x = xn;
                    r = rn;
                    f = fn_;
                    history.push(f);
                    if history.len() > STALL_WINDOW {
                        let earlier = history[history.len() - 1 - STALL_WINDOW];
                        if (earlier - f) < self.rel_improvement * earlier {
                            stalled = true;
                            break;
                        }
                    }
                }
                None => {
                    stalled = true;
                    break;
                }
            }
        }

        Minimum {
            converged: f <= self.target || stalled,
            x,
            value: f,
            iterations,
            evaluations,
            history,
        }
    }
}

/// ∂r/∂x_j by the fourth-order five-point stencil, or by a second-order
/// difference when a bound cuts the stencil short.
fn derivative<E>(
    x: &[f64],
    r: &[f64],
    j: usize,
    h: f64,
    evaluations: &mut usize,
    eval: &E,
) -> Option<Vec<f64>>
where
    E: Fn(&mut Vec<f64>, &mut usize) -> Option<(Vec<f64>, f64)>,
{
    let mut at = |offset: f64| -> Option<(f64, Vec<f64>)> {
        let mut y = x.to_vec();
        y[j] += offset;
        let res = eval(&mut y, evaluations)?;
        Some((y[j] - x[j], res.0))
    };
    let p1 = at(h);
    let m1 = at(-h);
    let unclipped = |p: &Option<(f64, Vec<f64>)>, o: f64| matches!(p, Some((d, _)) if *d == o);
    if unclipped(&p1, h) && unclipped(&m1, -h) {
        let p2 = at(2.0 * h);
        let m2 = at(-2.0 * h);
        if unclipped(&p2, 2.0 * h) && unclipped(&m2, -2.0 * h) {
            let (rp1, rm1) = (&p1.as_ref()?.1, &m1.as_ref()?.1);
            let (rp2, rm2) = (&p2.as_ref()?.1, &m2.as_ref()?.1);
            return Some(
                (0..r.len())
                    .map(|i| (-rp2[i] + 8.0 * rp1[i] - 8.0 * rm1[i] + rm2[i]) / (12.0 * h))
                    .collect(),
            );
        }
    }
    let (hi, rhi) = p1.unwrap_or((0.0, r.to_vec()));
    let (lo, rlo) = m1.unwrap_or((0.0, r.to_vec()));
    let width = hi - lo;
    (width != 0.0).then(|| (0..r.len()).map(|i| (rhi[i] - rlo[i]) / width).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_fit_recovers_parameters() {
        // y = 2 e^{-0.7 t} sampled exactly.
        let ts: Vec<f64> = (0..10).map(|i| 0.3 * i as f64).collect();
        let residual = |x: &[f64]| {
            Some(
                ts.iter()
                    .map(|t| x[0] * (-x[1] * t).exp() - 2.0 * (-0.7 * t).exp())
                    .collect(),
            )
        };
        let lm = LevenbergMarquardt {
            target: 1e-28,
            ..Default::default()
        };
        let r = lm.minimize(residual, &[1.0, 0.2], &[1.0, 1.0], |_| {});
        assert!(r.value < 1e-24, "{r:?}");
        assert!((r.x[0] - 2.0).abs() < 1e-10 && (r.x[1] - 0.7).abs() < 1e-10);
        assert!(r.history.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn bounds_hold_at_every_evaluation() {
        // Unconstrained minimum at x = -1; box x >= 0.
        let residual = |x: &[f64]| {
            assert!(x[0] >= 0.0);
            Some(vec![x[0] + 1.0, 0.5 * (x[0] + 1.0)])
        };
        let project = |x: &mut [f64]| x[0] = x[0].max(0.0);
        let r = LevenbergMarquardt::default().minimize(residual, &[3.0], &[1.0], project);
        assert!(r.x[0].abs() < 1e-12, "{r:?}");
        assert!(r.converged);
    }
}
