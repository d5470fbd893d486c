use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};
use rayon::prelude::*;

use super::{McEstimate, PathSet, Scheme, SimConfig};
use crate::affine::{FactorKind, FactorSpec, ModelParams};
use crate::error::{Error, Result};

/// Paths per reduction chunk. Chunk boundaries are fixed, so the reduction
/// order does not depend on the number of worker threads.
const CHUNK: usize = 1024;

/// Factor values and running integrals ∫_0^t Ψⁱ du at a checkpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub psi: [f64; 3],
    pub integral: [f64; 3],
}

impl Snapshot {
    /// ∫_0^t (w·Ψ) du
    pub fn weighted_integral(&self, w: [f64; 3]) -> f64 {
        w[0] * self.integral[0] + w[1] * self.integral[1] + w[2] * self.integral[2]
    }
}

/// Uniform grid with step 1/n_steps_per_year, plus every checkpoint.
pub fn time_grid(horizon: f64, steps_per_year: usize, checkpoints: &[f64]) -> Vec<f64> {
    let dt = 1.0 / steps_per_year as f64;
    let n = (horizon / dt).floor() as usize;
    let mut grid: Vec<f64> = (0..=n)
        .map(|k| k as f64 * dt)
        .filter(|&t| t <= horizon)
        .collect();
    grid.extend(checkpoints.iter().copied());
    grid.push(horizon);
    grid.sort_by(|a, b| a.total_cmp(b));
    // Merge nodes closer than 1e-12, keeping exact checkpoint values.
    let mut out: Vec<f64> = Vec::with_capacity(grid.len());
    for t in grid {
        match out.last_mut() {
            Some(last) if (t - *last).abs() < 1e-12 => {
                if checkpoints.contains(&t) || t == horizon {
                    *last = t;
                }
            }
            _ => out.push(t),
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
enum Transition {
    /// Exact OU: x' = decay·x + shift + sd·Z.
    Ou { decay: f64, shift: f64, sd: f64 },
    /// Exact square-root: x' = scale · χ'²(dof, decay·x/scale).
    Cir { decay: f64, scale: f64 },
    Euler {
        a: f64,
        b: f64,
        sigma: f64,
        h: f64,
        sqrt_h: f64,
        square_root: bool,
    },
}

impl Transition {
    fn new(spec: &FactorSpec, scheme: Scheme, h: f64) -> Self {
        let (a, b, sigma) = (spec.a, spec.b, spec.sigma);
        match (scheme, spec.kind) {
            (Scheme::Exact, FactorKind::Gaussian) => {
                let decay = (-b * h).exp();
                Transition::Ou {
                    decay,
                    shift: a / b * -(-b * h).exp_m1(),
                    sd: sigma * (-(-2.0 * b * h).exp_m1() / (2.0 * b)).sqrt(),
                }
            }
            (Scheme::Exact, FactorKind::SquareRoot) => Transition::Cir {
                decay: (-b * h).exp(),
                scale: sigma * sigma * -(-b * h).exp_m1() / (4.0 * b),
            },
            (Scheme::Euler, kind) => Transition::Euler {
                a,
                b,
                sigma,
                h,
                sqrt_h: h.sqrt(),
                square_root: kind == FactorKind::SquareRoot,
            },
        }
    }
}

/// Noncentral chi-square with `dof` degrees of freedom and noncentrality `lambda`.
#[derive(Debug, Clone)]
pub struct NoncentralChiSquare {
    dof: f64,
    central: Option<Gamma<f64>>,
}

impl NoncentralChiSquare {
    pub fn new(dof: f64) -> Result<Self> {
        if !(dof > 0.0 && dof.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "degrees of freedom {dof} must be > 0"
            )));
        }
        let central = if dof > 1.0 {
            Some(
                Gamma::new(0.5 * (dof - 1.0), 2.0)
                    .map_err(|e| Error::InvalidConfig(e.to_string()))?,
            )
        } else {
            None
        };
        Ok(Self { dof, central })
    }

    pub fn sample<R: Rng + ?Sized>(&self, lambda: f64, rng: &mut R) -> f64 {
        match &self.central {
            // (Z + √λ)² + χ²_{d−1}
            Some(gamma) => {
                let z: f64 = StandardNormal.sample(rng);
                let shifted = z + lambda.sqrt();
                shifted * shifted + gamma.sample(rng)
            }
            // Poisson mixture of central chi-squares.
            None => {
                let n = if lambda > 0.0 {
                    Poisson::new(0.5 * lambda)
                        .map(|p| p.sample(rng))
                        .unwrap_or(0.0)
                } else {
                    0.0
                };
                let shape = 0.5 * (self.dof + 2.0 * n);
                Gamma::new(shape, 2.0).map(|g| g.sample(rng)).unwrap_or(0.0)
            }
        }
    }
}

/// Steps all three factors of one path along a fixed grid.
#[derive(Debug, Clone)]
pub struct PathEngine {
    params: ModelParams,
    config: SimConfig,
    grid: Vec<f64>,
    transitions: Vec<[Transition; 3]>,
    chi2: [Option<NoncentralChiSquare>; 3],
    /// Grid index of each requested checkpoint.
    checkpoint_index: Vec<usize>,
}

impl PathEngine {
    pub fn new(
        params: &ModelParams,
        config: &SimConfig,
        horizon: f64,
        checkpoints: &[f64],
    ) -> Result<Self> {
        config.validate()?;
        let params = params.validate()?;
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "horizon {horizon} must be > 0"
            )));
        }
        if let Some(bad) = checkpoints.iter().find(|&&t| !(0.0..=horizon).contains(&t)) {
            return Err(Error::InvalidConfig(format!(
                "checkpoint {bad} outside [0, {horizon}]"
            )));
        }
        let grid = time_grid(horizon, config.n_steps_per_year, checkpoints);
        let specs = params.factors();
        let transitions = grid
            .windows(2)
            .map(|w| {
                let h = w[1] - w[0];
                [
                    Transition::new(&specs[0], config.scheme, h),
                    Transition::new(&specs[1], config.scheme, h),
                    Transition::new(&specs[2], config.scheme, h),
                ]
            })
            .collect();
        let chi2 = [0, 1, 2].map(|i| {
            let s = &specs[i];
            (config.scheme == Scheme::Exact && s.kind == FactorKind::SquareRoot)
                .then(|| NoncentralChiSquare::new(4.0 * s.a / (s.sigma * s.sigma)))
                .transpose()
        });
        let [c0, c1, c2] = chi2;
        let checkpoint_index = checkpoints
            .iter()
            .map(|t| {
                grid.iter()
                    .position(|g| g == t)
                    .expect("checkpoint on grid")
            })
            .collect();
        Ok(Self {
            params,
            config: *config,
            grid,
            transitions,
            chi2: [c0?, c1?, c2?],
            checkpoint_index,
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    fn rngs(&self, path: u64) -> [ChaCha8Rng; 3] {
        [0u64, 1, 2].map(|f| {
            let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
            rng.set_stream(path.wrapping_mul(3).wrapping_add(f));
            rng
        })
    }

    #[inline]
    fn step(&self, factor: usize, tr: &Transition, x: f64, rng: &mut ChaCha8Rng) -> f64 {
        match *tr {
            Transition::Ou { decay, shift, sd } => {
                let z: f64 = StandardNormal.sample(rng);
                decay * x + shift + sd * z
            }
            Transition::Cir { decay, scale } => {
                let chi2 = self.chi2[factor].as_ref().expect("chi-square sampler");
                scale * chi2.sample(decay * x / scale, rng)
            }
            Transition::Euler {
                a,
                b,
                sigma,
                h,
                sqrt_h,
                square_root,
            } => {
                let z: f64 = StandardNormal.sample(rng);
                if square_root {
                    // Full truncation: negative excursions are clamped in drift and diffusion.
                    let xp = x.max(0.0);
                    x + (a - b * xp) * h + sigma * xp.sqrt() * sqrt_h * z
                } else {
                    x + (a - b * x) * h + sigma * sqrt_h * z
                }
            }
        }
    }

    /// Simulates path `path`, calling `visit(grid_index, Ψ, ∫Ψ)` at every node.
    /// Square-root factors are reported floored at 0.
    pub fn run_path<F: FnMut(usize, [f64; 3], [f64; 3])>(&self, path: u64, mut visit: F) {
        let mut rngs = self.rngs(path);
        let specs = self.params.factors();
        // `state` is the scheme's internal value (may be negative under Euler).
        let mut state = [specs[0].psi0, specs[1].psi0, specs[2].psi0];
        let mut shown = state;
        let mut integral = [0.0; 3];
        visit(0, shown, integral);
        for (k, tr) in self.transitions.iter().enumerate() {
            let h = self.grid[k + 1] - self.grid[k];
            for f in 0..3 {
                let next = self.step(f, &tr[f], state[f], &mut rngs[f]);
                state[f] = next;
                let out = if specs[f].kind == FactorKind::SquareRoot {
                    next.max(0.0)
                } else {
                    next
                };
                integral[f] += 0.5 * h * (shown[f] + out);
                shown[f] = out;
            }
            visit(k + 1, shown, integral);
        }
    }

    /// Runs every path, evaluating `payoff` on the checkpoint snapshots and
    /// averaging each of its `n_outputs` outputs.
    pub fn estimate<F>(&self, n_outputs: usize, payoff: F) -> Vec<McEstimate>
    where
        F: Fn(&[Snapshot], &mut [f64]) + Sync,
    {
        let n_paths = self.config.n_paths;
        let n_chunks = n_paths.div_ceil(CHUNK);
        let chunks: Vec<Vec<Welford>> = (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let mut acc = vec![Welford::default(); n_outputs];
                let mut snaps = vec![
                    Snapshot {
                        t: 0.0,
                        psi: [0.0; 3],
                        integral: [0.0; 3]
                    };
                    self.checkpoint_index.len()
                ];
                let mut out = vec![0.0; n_outputs];
                let end = ((c + 1) * CHUNK).min(n_paths);
                for path in c * CHUNK..end {
                    self.run_path(path as u64, |k, psi, integral| {
                        for (slot, &idx) in self.checkpoint_index.iter().enumerate() {
                            if idx == k {
                                snaps[slot] = Snapshot {
                                    t: self.grid[k],
                                    psi,
                                    integral,
                                };
                            }
                        }
                    });
                    payoff(&snaps, &mut out);
                    for (a, &x) in acc.iter_mut().zip(&out) {
                        a.push(x);
                    }
                }
                acc
            })
            .collect();
        let mut total = vec![Welford::default(); n_outputs];
        for chunk in &chunks {
            for (t, c) in total.iter_mut().zip(chunk) {
                t.merge(c);
            }
        }
        total.iter().map(Welford::estimate).collect()
    }
}

/// Streaming mean/variance with deterministic pairwise merging.
#[derive(Debug, Clone, Copy, Default)]
pub struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Welford) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * self.n as f64 * other.n as f64 / n as f64;
        self.n = n;
    }

    pub fn estimate(&self) -> McEstimate {
        let var = if self.n > 1 {
            self.m2 / (self.n - 1) as f64
        } else {
            0.0
        };
        McEstimate {
            mean: self.mean,
            std_error: (var.max(0.0) / self.n.max(1) as f64).sqrt(),
            n_paths: self.n as usize,
        }
    }
}

/// Simulates the three factors on the grid {k/n_steps_per_year} ∪ checkpoints ∪ {horizon}.
pub fn simulate(
    params: &ModelParams,
    config: &SimConfig,
    horizon: f64,
    checkpoints: &[f64],
) -> Result<PathSet> {
    let engine = PathEngine::new(params, config, horizon, checkpoints)?;
    let n_times = engine.grid().len();
    let paths: Vec<[Vec<f64>; 3]> = (0..config.n_paths as u64)
        .into_par_iter()
        .map(|p| {
            let mut out = [vec![0.0; n_times], vec![0.0; n_times], vec![0.0; n_times]];
            engine.run_path(p, |k, psi, _| {
                for f in 0..3 {
                    out[f][k] = psi[f];
                }
            });
            out
        })
        .collect();
    let mut psi: [Vec<Vec<f64>>; 3] = Default::default();
    for [a, b, c] in paths {
        psi[0].push(a);
        psi[1].push(b);
        psi[2].push(c);
    }
    let [psi1, psi2, psi3] = psi;
    Ok(PathSet {
        times: engine.grid().to_vec(),
        psi1,
        psi2,
        psi3,
        seed: config.seed,
        scheme: config.scheme,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_contains_checkpoints_exactly() {
        let g = time_grid(1.3, 4, &[0.3, 1.0]);
        assert_eq!(g, vec![0.0, 0.25, 0.3, 0.5, 0.75, 1.0, 1.25, 1.3]);
        let g = time_grid(1.0, 64, &[0.5]);
        assert_eq!(g.len(), 65);
        assert_eq!(*g.last().unwrap(), 1.0);
    }

    #[test]
    fn chi_square_moments() {
        // mean d + λ, variance 2(d + 2λ)
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (d, lambda) in [(3.0, 2.0), (0.6, 1.5)] {
            let dist = NoncentralChiSquare::new(d).unwrap();
            let mut w = Welford::default();
            for _ in 0..200_000 {
                w.push(dist.sample(lambda, &mut rng));
            }
            let e = w.estimate();
            assert!((e.mean - (d + lambda)).abs() < 4.0 * e.std_error, "{e:?}");
            let var = e.std_error.powi(2) * e.n_paths as f64;
            assert!(
                (var / (2.0 * (d + 2.0 * lambda)) - 1.0).abs() < 0.03,
                "{var}"
            );
        }
    }

    #[test]
    fn welford_merge_matches_sequential() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
        let mut whole = Welford::default();
        xs.iter().for_each(|&x| whole.push(x));
        let mut left = Welford::default();
        let mut right = Welford::default();
        xs[..300].iter().for_each(|&x| left.push(x));
        xs[300..].iter().for_each(|&x| right.push(x));
        left.merge(&right);
        let (a, b) = (whole.estimate(), left.estimate());
        assert!((a.mean - b.mean).abs() < 1e-12 && (a.std_error - b.std_error).abs() < 1e-12);
    }
}
