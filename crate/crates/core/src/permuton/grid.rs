use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::pattern::Permutation;

/// Marginal tolerance: every row and column sum must be within `k · 1e-9`
/// of `k`.
pub const MARGINAL_TOL: f64 = 1e-9;
const MAX_SINKHORN: usize = 100_000;

/// A permuton with density `g[i][j]` on the cell
/// `[i/k, (i+1)/k) × [j/k, (j+1)/k)`. The first index is the horizontal
/// (position) coordinate, the second the vertical (value) coordinate, so a
/// permutation `π` occupies the cells `(i, π_i − 1)`.
///
/// JSON form: `{"k": 2, "g": [[2, 0], [0, 2]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct GridPermuton {
    k: usize,
    g: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    k: usize,
    g: Vec<Vec<f64>>,
}

impl TryFrom<RawGrid> for GridPermuton {
    type Error = Error;
    fn try_from(raw: RawGrid) -> Result<Self> {
        if raw.g.len() != raw.k || raw.g.iter().any(|r| r.len() != raw.k) {
            return Err(Error::InvalidPermuton(format!("g must be {0}×{0}", raw.k)));
        }
        GridPermuton::new(raw.k, raw.g.concat())
    }
}

impl From<GridPermuton> for RawGrid {
    fn from(p: GridPermuton) -> Self {
        RawGrid {
            k: p.k,
            g: p.g.chunks(p.k).map(<[f64]>::to_vec).collect(),
        }
    }
}

impl GridPermuton {
    /// Validate a row-major `k × k` density.
    pub fn new(k: usize, g: Vec<f64>) -> Result<Self> {
        let p = GridPermuton::unvalidated(k, g)?;
        let dev = p.marginal_deviation();
        if dev > MARGINAL_TOL {
            return Err(Error::InvalidPermuton(format!(
                "marginals deviate from uniform by {dev:.3e} (relative)"
            )));
        }
        Ok(p)
    }

    /// Shape and sign checks only; marginals may be off.
    pub fn unvalidated(k: usize, g: Vec<f64>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidPermuton("resolution must be positive".into()));
        }
        if g.len() != k * k {
            return Err(Error::InvalidPermuton(format!(
                "expected {} cells, got {}",
                k * k,
                g.len()
            )));
        }
        if let Some(x) = g.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::InvalidPermuton(format!(
                "cell density {x} is not a nonnegative real"
            )));
        }
        Ok(GridPermuton { k, g })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        GridPermuton::new(k, vec![1.0; k * k])
    }

    pub fn resolution(&self) -> usize {
        self.k
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.g[i * self.k + j]
    }

    pub fn cells(&self) -> &[f64] {
        &self.g
    }

    /// Largest `|row or column sum − k| / k`.
    pub fn marginal_deviation(&self) -> f64 {
        let k = self.k;
        let mut dev: f64 = 0.0;
        for i in 0..k {
            let row: f64 = self.g[i * k..(i + 1) * k].iter().sum();
            let col: f64 = (0..k).map(|r| self.g[r * k + i]).sum();
            dev = dev
                .max((row / k as f64 - 1.0).abs())
                .max((col / k as f64 - 1.0).abs());
        }
        dev
    }

    /// Scale rows and columns alternately (Sinkhorn) until all marginals are
    /// uniform within [`MARGINAL_TOL`]. A permuton that already satisfies
    /// the tolerance is returned unchanged.
    pub fn project(&self) -> Result<GridPermuton> {
        let mut g = self.g.clone();
        sinkhorn(self.k, &mut g)?;
        Ok(GridPermuton { k: self.k, g })
    }
}

pub(crate) fn sinkhorn(k: usize, g: &mut [f64]) -> Result<()> {
    let kf = k as f64;
    let mut row = vec![0.0; k];
    let mut col = vec![0.0; k];
    for _ in 0..MAX_SINKHORN {
        row.iter_mut().for_each(|x| *x = 0.0);
        col.iter_mut().for_each(|x| *x = 0.0);
        for i in 0..k {
            for j in 0..k {
                let x = g[i * k + j];
                row[i] += x;
                col[j] += x;
            }
        }
        let dev = row
            .iter()
            .chain(&col)
            .map(|s| (s / kf - 1.0).abs())
            .fold(0.0, f64::max);
        if dev <= MARGINAL_TOL {
            return Ok(());
        }
        if row.iter().chain(&col).any(|&s| s <= 0.0) {
            return Err(Error::InvalidPermuton(
                "an empty row or column cannot be rescaled".into(),
            ));
        }
        for i in 0..k {
            let s = kf / row[i];
            g[i * k..(i + 1) * k].iter_mut().for_each(|x| *x *= s);
        }
        col.iter_mut().for_each(|x| *x = 0.0);
        for i in 0..k {
            for j in 0..k {
                col[j] += g[i * k + j];
            }
        }
        for i in 0..k {
            for j in 0..k {
                g[i * k + j] *= kf / col[j];
            }
        }
    }
    Err(Error::InvalidPermuton(format!(
        "marginal projection did not converge in {MAX_SINKHORN} sweeps"
    )))
}

/// `(1/k²) Σ −g ln g` with `0 ln 0 = 0`. Zero for the uniform permuton and
/// negative otherwise. The cells are rescaled to total mass exactly `k²`
/// first, so marginal rounding cannot push the value above zero.
pub fn permuton_entropy(p: &GridPermuton) -> f64 {
    let k2 = (p.k * p.k) as f64;
    let scale = k2 / p.g.iter().sum::<f64>();
    let h =
        -p.g.iter()
            .filter(|&&x| x > 0.0)
            .map(|&x| {
                let y = x * scale;
                y * y.ln()
            })
            .sum::<f64>()
            / k2;
    h.min(0.0)
}

/// The grid permuton of `π`: resolution `n`, density `n` on the cells
/// `(i, π_i − 1)` and 0 elsewhere.
pub fn perm_to_permuton(pi: &Permutation) -> GridPermuton {
    let n = pi.len();
    let mut g = vec![0.0; n * n];
    for (i, &v) in pi.values().iter().enumerate() {
        g[i * n + v - 1] = n as f64;
    }
    GridPermuton { k: n, g }
}
