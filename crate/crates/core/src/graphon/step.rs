use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `Σ c_i = 1`.
pub const MASS_SUM_TOL: f64 = 1e-12;

/// A piecewise-constant (m-podal) graphon: `[0,1]` is cut into `m` blocks
/// of the given masses and the graphon takes value `values[i][j]` on block
/// `i × j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawStepGraphon", into = "RawStepGraphon")]
pub struct StepGraphon {
    masses: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStepGraphon {
    masses: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl TryFrom<RawStepGraphon> for StepGraphon {
    type Error = Error;

    fn try_from(raw: RawStepGraphon) -> Result<Self> {
        StepGraphon::new(raw.masses, raw.values)
    }
}

impl From<StepGraphon> for RawStepGraphon {
    fn from(q: StepGraphon) -> Self {
        RawStepGraphon {
            values: q.rows(),
            masses: q.masses,
        }
    }
}

impl StepGraphon {
    pub fn new(masses: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        let m = masses.len();
        if m == 0 {
            return Err(Error::InvalidGraphon("no blocks".into()));
        }
        if values.len() != m || values.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidGraphon(format!(
                "value matrix must be {m}x{m} to match {m} masses"
            )));
        }
        let flat: Vec<f64> = values.into_iter().flatten().collect();
        Self::from_flat(masses, flat)
    }

    /// Build from a row-major `m*m` value array.
    pub fn from_flat(masses: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let m = masses.len();
        if m == 0 || values.len() != m * m {
            return Err(Error::InvalidGraphon(format!(
                "expected {} values for {m} blocks, got {}",
                m * m,
                values.len()
            )));
        }
        for (i, &c) in masses.iter().enumerate() {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::InvalidGraphon(format!(
                    "mass {i} = {c} is not positive"
                )));
            }
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > MASS_SUM_TOL {
            return Err(Error::InvalidGraphon(format!(
                "masses sum to {total}, not 1"
            )));
        }
        for i in 0..m {
            for j in 0..m {
                let p = values[i * m + j];
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidGraphon(format!(
                        "value ({i},{j}) = {p} outside [0,1]"
                    )));
                }
                if p != values[j * m + i] {
                    return Err(Error::InvalidGraphon(format!(
                        "values not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(StepGraphon { masses, values })
    }

    /// Constant graphon with value `p`.
    pub fn constant(p: f64) -> Result<Self> {
        Self::from_flat(vec![1.0], vec![p])
    }

    /// Equal-mass bipodal graphon with diagonal value `a` and off-diagonal `d`.
    pub fn symmetric_bipodal(a: f64, d: f64) -> Result<Self> {
        Self::from_flat(vec![0.5, 0.5], vec![a, d, d, a])
    }

    pub fn podality(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.masses.len() + j]
    }

    /// Row-major value matrix.
    pub fn values_flat(&self) -> &[f64] {
        &self.values
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values
            .chunks(self.podality())
            .map(|r| r.to_vec())
            .collect()
    }

    /// Evaluate the graphon at a point of the unit square.
    pub fn at(&self, x: f64, y: f64) -> f64 {
        self.value(self.block_of(x), self.block_of(y))
    }

    fn block_of(&self, x: f64) -> usize {
        let mut acc = 0.0;
        for (i, &c) in self.masses.iter().enumerate() {
            acc += c;
            if x < acc {
                return i;
            }
        }
        self.masses.len() - 1
    }

    /// Reorder blocks: block `i` of the result is block `order[i]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> StepGraphon {
        let m = self.podality();
        assert_eq!(order.len(), m);
        let masses = order.iter().map(|&i| self.masses[i]).collect();
        let mut values = vec![0.0; m * m];
        for (a, &i) in order.iter().enumerate() {
            for (b, &j) in order.iter().enumerate() {
                values[a * m + b] = self.value(i, j);
            }
        }
        StepGraphon { masses, values }
    }

    /// Split block `i` into two blocks with mass fractions `f` and `1-f` and
    /// identical rows. The result represents the same reduced graphon.
    pub fn split_block(&self, i: usize, f: f64) -> StepGraphon {
        let m = self.podality();
        let src: Vec<usize> = (0..m).chain(std::iter::once(i)).collect();
        let mut masses: Vec<f64> = src.iter().map(|&k| self.masses[k]).collect();
        masses[i] *= f;
        masses[m] = self.masses[i] * (1.0 - f);
        let n = m + 1;
        let mut values = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                values[a * n + b] = self.value(src[a], src[b]);
            }
        }
        StepGraphon { masses, values }
    }

    /// Renormalize masses so they sum to one exactly (up to rounding) and
    /// clamp values to `[0,1]`; used after floating-point merges.
    pub(crate) fn normalized(mut masses: Vec<f64>, mut values: Vec<f64>) -> StepGraphon {
        let total: f64 = masses.iter().sum();
        // rescaling by a sum that is one up to rounding would only add more rounding
        if (total - 1.0).abs() > 4.0 * f64::EPSILON {
            for c in &mut masses {
                *c /= total;
            }
        }
        for v in &mut values {
            *v = v.clamp(0.0, 1.0);
        }
        let m = masses.len();
        for i in 0..m {
            for j in (i + 1)..m {
                values[j * m + i] = values[i * m + j];
            }
        }
        StepGraphon { masses, values }
    }
}
