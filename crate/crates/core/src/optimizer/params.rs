//! Unconstrained parameterization of m-podal graphons.
//!
//! `x = [w_0..w_{m-1}, θ_00, θ_01, .., θ_0(m-1), θ_11, ..]`: masses are the
//! softmax of `w`, and each pair value is `lo + (hi - lo) σ(θ)`, which keeps
//! block values inside `[VALUE_LO, VALUE_HI]`.

use crate::graphon::{Gradient, StepGraphon};

pub const VALUE_LO: f64 = 1e-9;
pub const VALUE_HI: f64 = 1.0 - 1e-9;
const SPAN: f64 = VALUE_HI - VALUE_LO;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Layout {
    pub m: usize,
}

impl Layout {
    pub fn new(m: usize) -> Self {
        Layout { m }
    }

    pub fn pairs(&self) -> usize {
        self.m * (self.m + 1) / 2
    }

    pub fn dim(&self) -> usize {
        self.m + self.pairs()
    }

    fn pair_index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        // rows 0..i contribute m, m-1, .., m-i+1 entries
        i * self.m - i * (i.saturating_sub(1)) / 2 + (j - i)
    }

    pub fn masses(&self, x: &[f64]) -> Vec<f64> {
        let w = &x[..self.m];
        let top = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = w.iter().map(|&wi| (wi - top).max(-200.0).exp()).collect();
        let z: f64 = e.iter().sum();
        e.into_iter().map(|v| v / z).collect()
    }

    pub fn decode(&self, x: &[f64]) -> StepGraphon {
        let m = self.m;
        let masses = self.masses(x);
        let mut values = vec![0.0; m * m];
        for i in 0..m {
            for j in i..m {
                let v = VALUE_LO + SPAN * sigmoid(x[m + self.pair_index(i, j)]);
                values[i * m + j] = v;
                values[j * m + i] = v;
            }
        }
        StepGraphon::normalized(masses, values)
    }

    pub fn encode(&self, q: &StepGraphon) -> Vec<f64> {
        assert_eq!(q.podality(), self.m);
        let m = self.m;
        let mut x = vec![0.0; self.dim()];
        for (i, &c) in q.masses().iter().enumerate() {
            x[i] = c.max(1e-80).ln();
        }
        for i in 0..m {
            for j in i..m {
                let u = ((q.value(i, j) - VALUE_LO) / SPAN).clamp(1e-15, 1.0 - 1e-15);
                x[m + self.pair_index(i, j)] = (u / (1.0 - u)).ln();
            }
        }
        x
    }

    /// Chain rule from graphon-space partials to `x`-space.
    pub fn pull_back(&self, x: &[f64], q: &StepGraphon, g: &Gradient) -> Vec<f64> {
        let m = self.m;
        let c = q.masses();
        let mut out = vec![0.0; self.dim()];
        let mean: f64 = (0..m).map(|i| c[i] * g.masses[i]).sum();
        for k in 0..m {
            out[k] = c[k] * (g.masses[k] - mean);
        }
        for i in 0..m {
            for j in i..m {
                let idx = m + self.pair_index(i, j);
                let s = sigmoid(x[idx]);
                out[idx] = g.values[i * m + j] * SPAN * s * (1.0 - s);
            }
        }
        out
    }
}

pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}
