use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::grid::GridPermuton;
use super::pattern::{pattern_code, StarPattern};

/// Longest pattern the exact method evaluates.
pub const EXACT_MAX_LEN: usize = 3;
/// Largest resolution for exact evaluation of length-3 patterns (`O(k⁴)`).
pub const EXACT_MAX_RESOLUTION: usize = 40;
/// Largest resolution for exact evaluation of length-2 patterns (`O(k²)`).
pub const EXACT_MAX_RESOLUTION_PAIRS: usize = 256;
/// Longest pattern the Monte Carlo method samples.
pub const MC_MAX_LEN: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum DensityMethod {
    Exact,
    #[serde(rename = "montecarlo")]
    MonteCarlo {
        samples: u64,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub value: f64,
    /// Zero for the exact method.
    pub std_error: f64,
}

/// Probability that independent uniform points in the cells `cells` (listed
/// in the required order) come out strictly increasing.
fn order_prob(cells: &[usize]) -> f64 {
    let mut p = 1.0;
    let mut run = 1;
    for w in cells.windows(2) {
        if w[1] < w[0] {
            return 0.0;
        }
        if w[1] == w[0] {
            run += 1;
            p /= run as f64;
        } else {
            run = 1;
        }
    }
    p
}

/// Half-open index ranges between and at the breakpoints, with a
/// representative index for each.
fn segments(k: usize, breaks: &mut Vec<usize>) -> Vec<(usize, usize)> {
    breaks.sort_unstable();
    breaks.dedup();
    let mut out = Vec::with_capacity(2 * breaks.len() + 1);
    let mut start = 0;
    for &b in breaks.iter() {
        if start < b {
            out.push((start, b));
        }
        out.push((b, b + 1));
        start = b + 1;
    }
    if start < k {
        out.push((start, k));
    }
    out
}

struct Prefix {
    k: usize,
    s: Vec<f64>,
}

impl Prefix {
    fn new(k: usize, w: &[f64]) -> Self {
        let n = k + 1;
        let mut s = vec![0.0; n * n];
        for i in 0..k {
            for j in 0..k {
                s[(i + 1) * n + j + 1] =
                    w[i * k + j] + s[i * n + j + 1] + s[(i + 1) * n + j] - s[i * n + j];
            }
        }
        Prefix { k, s }
    }

    fn rect(&self, (i0, i1): (usize, usize), (j0, j1): (usize, usize)) -> f64 {
        let n = self.k + 1;
        self.s[i1 * n + j1] - self.s[i0 * n + j1] - self.s[i1 * n + j0] + self.s[i0 * n + j0]
    }
}

/// Exact density of one plain pattern (zero-based values `v`) and its
/// gradient with respect to the cell weights `w = g / k²`.
///
/// The first point is summed out in closed form: for fixed cells of the
/// others, the tie probabilities depend on the first point's cell only
/// through its position relative to their rows and columns, so its sum
/// splits into at most 25 rectangles read from 2D prefix sums. The gradient
/// is the reverse sweep of the same computation; rectangle adjoints are
/// scattered through a 2D difference array.
fn plain_density(k: usize, w: &[f64], v: &[u8], grad: &mut [f64]) -> f64 {
    let t = v.len();
    if t == 1 {
        grad.iter_mut().for_each(|x| *x += 1.0);
        return w.iter().sum();
    }
    let mut by_value = vec![0usize; t];
    for (a, &r) in v.iter().enumerate() {
        by_value[r as usize] = a;
    }
    let prefix = Prefix::new(k, w);
    let n = k + 1;
    let mut diff = vec![0.0; n * n];
    let factorial: f64 = (1..=t).map(|x| x as f64).product();
    let mut total = 0.0;
    let mut is = [0usize; 3];
    let mut js = [0usize; 3];
    let mut ycells = [0usize; 3];
    let outer = (k * k).pow(t as u32 - 1);
    for o in 0..outer {
        let mut rest = o;
        let mut weight = 1.0;
        for a in 1..t {
            let c = rest % (k * k);
            rest /= k * k;
            is[a] = c / k;
            js[a] = c % k;
        }
        // the non-first points alone must be orderable
        if t == 3 {
            if is[1] > is[2] {
                continue;
            }
            let (lo, hi) = if v[1] < v[2] { (1, 2) } else { (2, 1) };
            if js[lo] > js[hi] {
                continue;
            }
        }
        for a in 1..t {
            weight *= w[is[a] * k + js[a]];
        }
        let iseg = segments(k, &mut is[1..t].to_vec());
        let jseg = segments(k, &mut js[1..t].to_vec());
        let mut inner = 0.0;
        for &(i0, i1) in &iseg {
            is[0] = i0;
            let px = order_prob(&is[..t]);
            if px == 0.0 {
                continue;
            }
            for &(j0, j1) in &jseg {
                js[0] = j0;
                for (r, &a) in by_value.iter().enumerate() {
                    ycells[r] = js[a];
                }
                let py = order_prob(&ycells[..t]);
                if py == 0.0 {
                    continue;
                }
                let f = px * py;
                inner += f * prefix.rect((i0, i1), (j0, j1));
                let d = factorial * weight * f;
                diff[i0 * n + j0] += d;
                diff[i0 * n + j1] -= d;
                diff[i1 * n + j0] -= d;
                diff[i1 * n + j1] += d;
            }
        }
        if inner == 0.0 {
            continue;
        }
        total += weight * inner;
        if t == 2 {
            grad[is[1] * k + js[1]] += factorial * inner;
        } else {
            grad[is[1] * k + js[1]] += factorial * w[is[2] * k + js[2]] * inner;
            grad[is[2] * k + js[2]] += factorial * w[is[1] * k + js[1]] * inner;
        }
    }
    // integrate the difference array into per-cell adjoints of the first point
    for i in 0..n {
        for j in 0..n {
            let mut x = diff[i * n + j];
            if i > 0 {
                x += diff[(i - 1) * n + j];
            }
            if j > 0 {
                x += diff[i * n + j - 1];
            }
            if i > 0 && j > 0 {
                x -= diff[(i - 1) * n + j - 1];
            }
            diff[i * n + j] = x;
        }
    }
    for i in 0..k {
        for j in 0..k {
            grad[i * k + j] += diff[i * n + j];
        }
    }
    factorial * total
}

fn check_exact(p: &GridPermuton, tau: &StarPattern) -> Result<()> {
    let t = tau.len();
    if t > EXACT_MAX_LEN {
        return Err(Error::CapExceeded {
            what: "exact pattern length",
            value: t,
            cap: EXACT_MAX_LEN,
        });
    }
    let cap = if t <= 2 {
        EXACT_MAX_RESOLUTION_PAIRS
    } else {
        EXACT_MAX_RESOLUTION
    };
    if p.resolution() > cap {
        return Err(Error::CapExceeded {
            what: "exact resolution",
            value: p.resolution(),
            cap,
        });
    }
    Ok(())
}

/// Exact `ρ_τ(γ)` and its gradient with respect to the cell densities
/// `g_ij`. Points sharing a cell take independent uniform positions inside
/// it, so ties in a row or column are broken with the exact order
/// probabilities. Star patterns sum over their completions.
pub fn permuton_density_gradient(p: &GridPermuton, tau: &StarPattern) -> Result<(f64, Vec<f64>)> {
    check_exact(p, tau)?;
    let k = p.resolution();
    let k2 = (k * k) as f64;
    let w: Vec<f64> = p.cells().iter().map(|g| g / k2).collect();
    let mut grad = vec![0.0; k * k];
    let mut value = 0.0;
    for c in tau.completions() {
        value += plain_density(k, &w, &c, &mut grad);
    }
    grad.iter_mut().for_each(|x| *x /= k2);
    Ok((value, grad))
}

/// Monte Carlo estimate: draw `t` points from `γ`, sort them horizontally
/// and test the vertical order against the completions of `τ`.
fn monte_carlo(
    p: &GridPermuton,
    tau: &StarPattern,
    samples: u64,
    seed: u64,
) -> Result<DensityEstimate> {
    if tau.len() > MC_MAX_LEN {
        return Err(Error::CapExceeded {
            what: "Monte Carlo pattern length",
            value: tau.len(),
            cap: MC_MAX_LEN,
        });
    }
    if samples < 2 {
        return Err(Error::Domain("Monte Carlo needs at least 2 samples".into()));
    }
    let k = p.resolution();
    let t = tau.len();
    let table = tau.code_table();
    let mut cum = Vec::with_capacity(k * k);
    let mut acc = 0.0;
    for &g in p.cells() {
        acc += g;
        cum.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = vec![(0.0f64, 0.0f64); t];
    let mut ys = vec![0.0f64; t];
    let mut hits = 0u64;
    for _ in 0..samples {
        for pt in pts.iter_mut() {
            let u = rng.random::<f64>() * acc;
            let c = cum.partition_point(|&x| x <= u).min(k * k - 1);
            let (i, j) = (c / k, c % k);
            *pt = (
                (i as f64 + rng.random::<f64>()) / k as f64,
                (j as f64 + rng.random::<f64>()) / k as f64,
            );
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (y, pt) in ys.iter_mut().zip(&pts) {
            *y = pt.1;
        }
        if table[pattern_code(&ys)] {
            hits += 1;
        }
    }
    let m = samples as f64;
    let value = hits as f64 / m;
    Ok(DensityEstimate {
        value,
        std_error: (value * (1.0 - value) / (m - 1.0)).sqrt(),
    })
}

/// Density of `τ` in the permuton `γ`: the probability that `t` random
/// points of `γ`, read left to right, have vertical order `τ`.
pub fn permuton_pattern_density(
    p: &GridPermuton,
    tau: &StarPattern,
    method: DensityMethod,
) -> Result<DensityEstimate> {
    match method {
        DensityMethod::Exact => Ok(DensityEstimate {
            value: permuton_density_gradient(p, tau)?.0,
            std_error: 0.0,
        }),
        DensityMethod::MonteCarlo { samples, seed } => monte_carlo(p, tau, samples, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::permuton::grid::perm_to_permuton;
    use crate::permuton::pattern::Permutation;

    fn pat(s: &str) -> StarPattern {
        s.parse().unwrap()
    }

    fn exact(p: &GridPermuton, s: &str) -> f64 {
        permuton_pattern_density(p, &pat(s), DensityMethod::Exact)
            .unwrap()
            .value
    }

    #[test]
    fn tie_probabilities() {
        assert_eq!(order_prob(&[0, 1, 2]), 1.0);
        assert_eq!(order_prob(&[1, 1, 2]), 0.5);
        assert_eq!(order_prob(&[1, 1, 1]), 1.0 / 6.0);
        assert_eq!(order_prob(&[2, 1]), 0.0);
    }

    #[test]
    fn segments_cover_once() {
        for breaks in [vec![3, 3], vec![0, 6], vec![2, 4], vec![6]] {
            let segs = segments(7, &mut breaks.clone());
            let cover: Vec<usize> = segs.iter().flat_map(|&(a, b)| a..b).collect();
            assert_eq!(cover, (0..7).collect::<Vec<_>>());
        }
    }

    #[test]
    fn uniform_values() {
        let u = GridPermuton::uniform(5).unwrap();
        assert!((exact(&u, "12") - 0.5).abs() < 1e-12);
        assert!((exact(&u, "132") - 1.0 / 6.0).abs() < 1e-12);
        assert!((exact(&u, "*2*") - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn identity_grid_ties() {
        let p = perm_to_permuton(&Permutation::identity(8));
        assert!((exact(&p, "12") - 0.9375).abs() < 1e-12);
    }

    #[test]
    fn brute_force_over_cell_triples() {
        let k = 3;
        let p = GridPermuton::unvalidated(k, vec![1.5, 1.0, 0.5, 0.5, 1.5, 1.0, 1.0, 0.5, 1.5])
            .unwrap()
            .project()
            .unwrap();
        let w: Vec<f64> = p.cells().iter().map(|g| g / 9.0).collect();
        for tau in ["123", "132", "213", "231", "312", "321"] {
            let v: Vec<u8> = tau.bytes().map(|b| b - b'1').collect();
            let mut brute = 0.0;
            for c in 0..(k * k).pow(3) {
                let cells = [c % 9, c / 9 % 9, c / 81];
                let is: Vec<usize> = cells.iter().map(|c| c / k).collect();
                let mut ys = [0usize; 3];
                for a in 0..3 {
                    ys[v[a] as usize] = cells[a] % k;
                }
                brute += 6.0
                    * cells.iter().map(|&c| w[c]).product::<f64>()
                    * order_prob(&is)
                    * order_prob(&ys);
            }
            assert!((exact(&p, tau) - brute).abs() < 1e-14, "{tau}");
        }
    }

    #[test]
    fn monte_carlo_agrees() {
        let p = perm_to_permuton(&Permutation::new(vec![2, 1]).unwrap());
        let mc = permuton_pattern_density(
            &p,
            &pat("21"),
            DensityMethod::MonteCarlo {
                samples: 40_000,
                seed: 3,
            },
        )
        .unwrap();
        assert!((mc.value - 0.75).abs() < 4.0 * mc.std_error);
        assert!((exact(&p, "21") - 0.75).abs() < 1e-15);
    }

    #[test]
    fn caps() {
        let big = GridPermuton::uniform(41).unwrap();
        assert!(permuton_pattern_density(&big, &pat("123"), DensityMethod::Exact).is_err());
        assert!(permuton_pattern_density(&big, &pat("12"), DensityMethod::Exact).is_ok());
        let u = GridPermuton::uniform(4).unwrap();
        assert!(permuton_pattern_density(&u, &pat("1234"), DensityMethod::Exact).is_err());
    }
}
