//! Augmented-Lagrangian local solver over m-podal graphons.
//!
//! Maximizes an objective functional subject to equality constraints on
//! densities. Each outer round minimizes the negated augmented Lagrangian
//! with BFGS, then updates multipliers and multiplies the penalty by
//! `penalty_growth`. A final Gauss-Newton projection onto the constraint
//! manifold removes the residual left by the penalty method.

use nalgebra::{DMatrix, DVector};

use super::bfgs::{self, BfgsOptions};
use super::params::Layout;
use crate::graphon::{
    graphon_entropy_grad, subgraph_density_grad, Gradient, StepGraphon, SubgraphPattern,
};

/// A smooth functional of a step graphon.
#[derive(Debug, Clone, PartialEq)]
pub enum Functional {
    Entropy,
    Density(SubgraphPattern),
}

impl Functional {
    pub fn eval_grad(&self, q: &StepGraphon) -> Gradient {
        match self {
            Functional::Entropy => graphon_entropy_grad(q),
            Functional::Density(p) => {
                subgraph_density_grad(q, p).expect("patterns are checked against the cap up front")
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct AlSettings {
    pub outer_rounds: usize,
    pub initial_penalty: f64,
    pub penalty_growth: f64,
    pub inner_max_iter: usize,
    pub feas_tol: f64,
}

pub(crate) struct Problem<'a> {
    pub objective: &'a Functional,
    pub constraints: &'a [(SubgraphPattern, f64)],
    pub layout: Layout,
}

#[derive(Debug, Clone)]
pub(crate) struct LocalSolution {
    pub graphon: StepGraphon,
    pub objective: f64,
    pub max_residual: f64,
}

impl Problem<'_> {
    fn residuals_and_jacobian(&self, x: &[f64]) -> (StepGraphon, Vec<f64>, Vec<Vec<f64>>) {
        let q = self.layout.decode(x);
        let mut r = Vec::with_capacity(self.constraints.len());
        let mut jac = Vec::with_capacity(self.constraints.len());
        for (p, target) in self.constraints {
            let g = subgraph_density_grad(&q, p).expect("checked cap");
            r.push(g.value - target);
            jac.push(self.layout.pull_back(x, &q, &g));
        }
        (q, r, jac)
    }

    /// Negated augmented Lagrangian and its gradient, with residual `j`
    /// scaled by `scale[j]`.
    fn merit(&self, x: &[f64], lambda: &[f64], mu: f64, scale: &[f64]) -> (f64, Vec<f64>) {
        let (q, r, jac) = self.residuals_and_jacobian(x);
        let obj = self.objective.eval_grad(&q);
        let mut grad: Vec<f64> = self
            .layout
            .pull_back(x, &q, &obj)
            .into_iter()
            .map(|v| -v)
            .collect();
        let mut val = -obj.value;
        for (j, rj) in r.iter().enumerate() {
            let rs = scale[j] * rj;
            val += lambda[j] * rs + 0.5 * mu * rs * rs;
            let w = (lambda[j] + mu * rs) * scale[j];
            for (gi, ji) in grad.iter_mut().zip(&jac[j]) {
                *gi += w * ji;
            }
        }
        (val, grad)
    }

    pub fn solve(&self, x0: Vec<f64>, s: &AlSettings) -> LocalSolution {
        let nc = self.constraints.len();
        let mut x = x0;
        let mut lambda = vec![0.0; nc];
        let mut scale = vec![1.0; nc];
        if nc > 0 {
            // Start on the manifold with first-order multipliers, and measure
            // every residual in units of its gradient norm: raw density
            // gradients can be 1e-3 or smaller, which would leave the early
            // penalty rounds too weak to hold the start.
            x = self.project(x);
            let (_, _, jac) = self.residuals_and_jacobian(&x);
            for (sj, row) in scale.iter_mut().zip(&jac) {
                let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                *sj = 1.0 / norm.clamp(1e-4, 1.0);
            }
            lambda = self.multiplier_estimate(&x, &scale);
        }
        let start = x.clone();
        let mut mu = s.initial_penalty;
        let inner = BfgsOptions {
            max_iter: s.inner_max_iter,
            ..BfgsOptions::default()
        };
        for round in 0..s.outer_rounds.max(1) {
            let prev = x.clone();
            x = bfgs::minimize(x, inner, |y| self.merit(y, &lambda, mu, &scale));
            if nc == 0 {
                break;
            }
            let (_, r, _) = self.residuals_and_jacobian(&x);
            let rmax = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let moved = x
                .iter()
                .zip(&prev)
                .fold(0.0f64, |a, (u, v)| a.max((u - v).abs()));
            for j in 0..nc {
                lambda[j] += mu * scale[j] * r[j];
            }
            if round > 0 && rmax < 0.01 * s.feas_tol && moved < 1e-9 {
                break;
            }
            mu *= s.penalty_growth;
        }
        if nc > 0 {
            x = self.project(x);
        }
        let end = self.evaluate(&x);
        if nc == 0 {
            return end;
        }
        // never return something worse than the projected start
        let begin = self.evaluate(&start);
        let feas_tol = s.feas_tol;
        let feasible = |sol: &LocalSolution| sol.max_residual <= feas_tol;
        match (feasible(&begin), feasible(&end)) {
            (true, false) => begin,
            (true, true) if begin.objective > end.objective => begin,
            (false, false) if begin.max_residual < end.max_residual => begin,
            _ => end,
        }
    }

    fn evaluate(&self, x: &[f64]) -> LocalSolution {
        let (q, r, _) = self.residuals_and_jacobian(x);
        let objective = self.objective.eval_grad(&q).value;
        LocalSolution {
            graphon: q,
            objective,
            max_residual: r.iter().fold(0.0f64, |a, v| a.max(v.abs())),
        }
    }

    /// Least-squares multipliers `argmin_λ |∇(-f) + Jᵀλ|` for the scaled
    /// constraints.
    fn multiplier_estimate(&self, x: &[f64], scale: &[f64]) -> Vec<f64> {
        let nc = self.constraints.len();
        let n = x.len();
        let (q, _, jac) = self.residuals_and_jacobian(x);
        let obj = self.objective.eval_grad(&q);
        let g = DVector::from_vec(self.layout.pull_back(x, &q, &obj));
        let j = DMatrix::from_fn(nc, n, |a, b| scale[a] * jac[a][b]);
        let jjt = &j * j.transpose() + DMatrix::identity(nc, nc) * 1e-12;
        match jjt.lu().solve(&(&j * g)) {
            Some(l) if l.iter().all(|v| v.is_finite()) => l.iter().copied().collect(),
            _ => vec![0.0; nc],
        }
    }

    /// Minimum-norm Gauss-Newton steps onto `{t(x) = α}`.
    fn project(&self, mut x: Vec<f64>) -> Vec<f64> {
        let nc = self.constraints.len();
        let n = x.len();
        let (_, mut r, mut jac) = self.residuals_and_jacobian(&x);
        let mut rmax = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for _ in 0..30 {
            if rmax < 1e-14 {
                break;
            }
            let j = DMatrix::from_fn(nc, n, |a, b| jac[a][b]);
            let jjt = &j * j.transpose() + DMatrix::identity(nc, nc) * 1e-14;
            let Some(y) = jjt.lu().solve(&DVector::from_vec(r.clone())) else {
                break;
            };
            let step = j.transpose() * y;
            let mut t = 1.0;
            let mut improved = false;
            for _ in 0..20 {
                let xt: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a - t * b).collect();
                let (_, rt, jt) = self.residuals_and_jacobian(&xt);
                let m = rt.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                if m < rmax {
                    x = xt;
                    r = rt;
                    jac = jt;
                    rmax = m;
                    improved = true;
                    break;
                }
                t *= 0.5;
            }
            if !improved {
                break;
            }
        }
        x
    }
}
