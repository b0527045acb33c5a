use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::extended_real;
use crate::par::{map_indexed, split_seed, Parallelism};

use super::density::{permuton_density_gradient, EXACT_MAX_LEN, EXACT_MAX_RESOLUTION};
use super::grid::{permuton_entropy, sinkhorn, GridPermuton};
use super::pattern::StarPattern;

/// Lower bound on cell densities during ascent; keeps `ln g` finite.
pub const DENSITY_FLOOR: f64 = 1e-12;
/// Largest residual still reported as feasible.
pub const PERMUTON_FEAS_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PermutonOptions {
    pub starts: usize,
    pub seed: u64,
    /// Augmented Lagrangian rounds.
    pub rounds: usize,
    /// Mirror ascent steps per round.
    pub inner_steps: usize,
    pub parallelism: Parallelism,
}

impl Default for PermutonOptions {
    fn default() -> Self {
        PermutonOptions {
            starts: 4,
            seed: 0,
            rounds: 40,
            inner_steps: 200,
            parallelism: Parallelism::Parallel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutonResult {
    pub permuton: GridPermuton,
    /// Maximal entropy found; `-inf` when the result is degenerate.
    #[serde(with = "extended_real")]
    pub entropy: f64,
    /// Entropy of the returned grid permuton itself.
    pub grid_entropy: f64,
    pub densities: Vec<f64>,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    /// The targets are only approached by permutons too singular for this
    /// resolution (residual between the feasibility tolerance and `1/k`).
    pub degenerate: bool,
    pub starts: usize,
}

struct Problem<'a> {
    k: usize,
    patterns: &'a [(StarPattern, f64)],
}

struct Eval {
    entropy: f64,
    residuals: Vec<f64>,
    grads: Vec<Vec<f64>>,
}

impl Problem<'_> {
    fn eval(&self, g: &GridPermuton) -> Result<Eval> {
        let mut residuals = Vec::with_capacity(self.patterns.len());
        let mut grads = Vec::with_capacity(self.patterns.len());
        for (tau, target) in self.patterns {
            let (v, d) = permuton_density_gradient(g, tau)?;
            residuals.push(v - target);
            grads.push(d);
        }
        Ok(Eval {
            entropy: permuton_entropy(g),
            residuals,
            grads,
        })
    }

    fn merit(&self, e: &Eval, lambda: &[f64], mu: f64) -> f64 {
        e.entropy
            - e.residuals
                .iter()
                .zip(lambda)
                .map(|(r, l)| l * r + 0.5 * mu * r * r)
                .sum::<f64>()
    }

    /// Mirror step in log space followed by the marginal projection.
    fn step(
        &self,
        g: &GridPermuton,
        e: &Eval,
        lambda: &[f64],
        mu: f64,
        eta: f64,
    ) -> Result<GridPermuton> {
        let k2 = (self.k * self.k) as f64;
        let logs: Vec<f64> = g
            .cells()
            .iter()
            .enumerate()
            .map(|(c, &x)| {
                let x = x.max(DENSITY_FLOOR);
                let force: f64 = e
                    .residuals
                    .iter()
                    .zip(lambda)
                    .zip(&e.grads)
                    .map(|((r, l), d)| (l + mu * r) * d[c] * k2)
                    .sum();
                x.ln() - eta * (x.ln() + force)
            })
            .collect();
        // the projection is scale free, so shift before exponentiating
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut next: Vec<f64> = logs
            .iter()
            .map(|l| (l - top).exp().max(DENSITY_FLOOR))
            .collect();
        sinkhorn(self.k, &mut next)?;
        GridPermuton::new(self.k, next)
    }

    fn solve(&self, start: GridPermuton, opts: &PermutonOptions) -> Result<(GridPermuton, Eval)> {
        let m = self.patterns.len();
        let mut g = start;
        let mut e = self.eval(&g)?;
        let mut lambda = vec![0.0; m];
        let mut mu = 10.0;
        let mut eta: f64 = 0.5;
        let norm = |e: &Eval| e.residuals.iter().fold(0.0f64, |a, r| a.max(r.abs()));
        let mut last = norm(&e);
        for _ in 0..opts.rounds {
            for _ in 0..opts.inner_steps {
                let f0 = self.merit(&e, &lambda, mu);
                let mut accepted = false;
                while eta > 1e-10 {
                    let cand = self.step(&g, &e, &lambda, mu, eta)?;
                    let ce = self.eval(&cand)?;
                    if self.merit(&ce, &lambda, mu) > f0 {
                        let moved = cand
                            .cells()
                            .iter()
                            .zip(g.cells())
                            .map(|(a, b)| (a - b).abs() / b.max(DENSITY_FLOOR))
                            .fold(0.0, f64::max);
                        g = cand;
                        e = ce;
                        eta = (eta * 1.5).min(1.0);
                        accepted = moved > 1e-12;
                        break;
                    }
                    eta *= 0.5;
                }
                if !accepted {
                    eta = eta.max(1e-3);
                    break;
                }
            }
            let r = norm(&e);
            if m == 0 || r < PERMUTON_FEAS_TOL * 1e-2 {
                break;
            }
            for (l, res) in lambda.iter_mut().zip(&e.residuals) {
                *l += mu * res;
            }
            if r > 0.25 * last {
                mu = (mu * 4.0).min(1e9);
            }
            last = r;
        }
        Ok((g, e))
    }
}

fn random_start(k: usize, seed: u64) -> Result<GridPermuton> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 0.7).expect("valid normal");
    let mut g: Vec<f64> = (0..k * k)
        .map(|_| f64::exp(normal.sample(&mut rng)))
        .collect();
    sinkhorn(k, &mut g)?;
    GridPermuton::new(k, g)
}

/// Maximize the permuton entropy over `k × k` grid permutons subject to
/// `ρ_τ(γ) = α` for every `(τ, α)`.
///
/// Each start runs an augmented Lagrangian whose inner problem is solved
/// by mirror ascent in log space (a multiplicative update with backtracking)
/// with uniform marginals restored by Sinkhorn scaling after every step.
/// Start 0 is the uniform permuton; the others are random positive grids.
///
/// Targets outside `[0, 1]` and results whose residual exceeds `1/k` are
/// infeasible. A residual between the feasibility tolerance and `1/k` means
/// the targets are only met in the limit by permutons singular at this
/// resolution (for example `ρ_12 = 1`, met only by the identity permuton);
/// the result is then flagged degenerate and its entropy is `-inf`.
pub fn maximize_permuton_entropy(
    constraints: &[(StarPattern, f64)],
    k: usize,
    opts: &PermutonOptions,
) -> Result<PermutonResult> {
    if k == 0 || k > EXACT_MAX_RESOLUTION {
        return Err(Error::CapExceeded {
            what: "permuton resolution",
            value: k,
            cap: EXACT_MAX_RESOLUTION,
        });
    }
    if opts.starts == 0 {
        return Err(Error::Domain("at least one start is required".into()));
    }
    for (tau, a) in constraints {
        if tau.len() > EXACT_MAX_LEN {
            return Err(Error::CapExceeded {
                what: "constraint pattern length",
                value: tau.len(),
                cap: EXACT_MAX_LEN,
            });
        }
        if !(0.0..=1.0).contains(a) {
            return Err(Error::Infeasible {
                residual: if *a < 0.0 { -a } else { a - 1.0 },
                starts: 0,
            });
        }
    }
    let problem = Problem {
        k,
        patterns: constraints,
    };
    let runs = map_indexed(opts.starts, opts.parallelism, |s| {
        let start = if s == 0 {
            GridPermuton::uniform(k)
        } else {
            random_start(k, split_seed(opts.seed, s as u64))
        };
        start.and_then(|g| problem.solve(g, opts))
    });
    let mut best: Option<(GridPermuton, Eval)> = None;
    for run in runs {
        let (g, e) = run?;
        let r = e.residuals.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let better = match &best {
            None => true,
            Some((_, b)) => {
                let rb = b.residuals.iter().fold(0.0f64, |a, x| a.max(x.abs()));
                match (r <= PERMUTON_FEAS_TOL, rb <= PERMUTON_FEAS_TOL) {
                    (true, true) => e.entropy > b.entropy,
                    (true, false) => true,
                    (false, true) => false,
                    (false, false) => r < rb,
                }
            }
        };
        if better {
            best = Some((g, e));
        }
    }
    let (g, e) = best.expect("at least one start");
    let max_residual = e.residuals.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if max_residual > 1.0 / k as f64 {
        return Err(Error::Infeasible {
            residual: max_residual,
            starts: opts.starts,
        });
    }
    let degenerate = max_residual > PERMUTON_FEAS_TOL;
    Ok(PermutonResult {
        densities: constraints
            .iter()
            .zip(&e.residuals)
            .map(|((_, a), r)| a + r)
            .collect(),
        entropy: if degenerate {
            f64::NEG_INFINITY
        } else {
            e.entropy
        },
        grid_entropy: e.entropy,
        residuals: e.residuals,
        max_residual,
        degenerate,
        starts: opts.starts,
        permuton: g,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(s: &str, a: f64) -> (StarPattern, f64) {
        (s.parse().unwrap(), a)
    }

    fn quick() -> PermutonOptions {
        PermutonOptions {
            starts: 2,
            ..Default::default()
        }
    }

    #[test]
    fn half_ascending_is_uniform() {
        let r = maximize_permuton_entropy(&[c("12", 0.5)], 10, &quick()).unwrap();
        assert!(r.entropy.abs() < 1e-6);
        assert!(!r.degenerate);
    }

    #[test]
    fn unconstrained_is_uniform() {
        let r = maximize_permuton_entropy(&[], 6, &quick()).unwrap();
        assert!(r.entropy.abs() < 1e-9);
    }

    #[test]
    fn out_of_range_target() {
        assert!(maximize_permuton_entropy(&[c("12", 1.2)], 6, &quick()).is_err());
    }

    #[test]
    fn tilted_target_is_met() {
        let r = maximize_permuton_entropy(&[c("12", 0.7)], 10, &quick()).unwrap();
        assert!(r.max_residual < PERMUTON_FEAS_TOL, "{}", r.max_residual);
        assert!(r.entropy < 0.0);
    }
}
