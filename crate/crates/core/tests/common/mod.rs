//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use phases_core::graphon::{
    graphon_entropy_grad, subgraph_density_grad, ConstraintVector, Gradient, StepGraphon,
    SubgraphPattern,
};
use phases_core::sampler::{enumerate_z, sample_constrained_with, ChainConfig};
use phases_core::Parallelism;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random step graphon with values in `[lo, 1 - lo]`.
pub fn random_graphon(rng: &mut impl Rng, m: usize, lo: f64) -> StepGraphon {
    let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut masses: Vec<f64> = raw.iter().map(|x| x / total).collect();
    let head: f64 = masses[..m - 1].iter().sum();
    masses[m - 1] = 1.0 - head;
    let mut values = vec![0.0; m * m];
    for i in 0..m {
        for j in i..m {
            let v = rng.random_range(lo..1.0 - lo);
            values[i * m + j] = v;
            values[j * m + i] = v;
        }
    }
    StepGraphon::from_flat(masses, values).unwrap()
}

/// Step graphon whose masses are multiples of `1/60`, so a midpoint grid
/// of any multiple of 60 points resolves the blocks exactly.
pub fn aligned_graphon(rng: &mut impl Rng, m: usize) -> StepGraphon {
    let mut cuts: Vec<usize> = Vec::new();
    while cuts.len() < m - 1 {
        let c = rng.random_range(1..60);
        if !cuts.contains(&c) {
            cuts.push(c);
        }
    }
    cuts.sort_unstable();
    cuts.insert(0, 0);
    cuts.push(60);
    let masses: Vec<f64> = cuts
        .windows(2)
        .map(|w| (w[1] - w[0]) as f64 / 60.0)
        .collect();
    let fixed = random_graphon(rng, m, 0.02);
    StepGraphon::from_flat(masses, fixed.values_flat().to_vec()).unwrap()
}

/// `Σ_φ Π_v c_φ(v) Π_e (p or 1 − p)` by enumerating every map of pattern
/// vertices to blocks. Masses need not sum to one.
pub fn brute_density(masses: &[f64], values: &[f64], p: &SubgraphPattern) -> f64 {
    let m = masses.len();
    let k = p.vertex_count();
    let mut total = 0.0;
    for code in 0..m.pow(k as u32) {
        let blocks: Vec<usize> = (0..k).map(|v| code / m.pow(v as u32) % m).collect();
        let mut w: f64 = blocks.iter().map(|&b| masses[b]).product();
        for e in p.edges() {
            let x = values[blocks[e.u] * m + blocks[e.v]];
            w *= if e.present { x } else { 1.0 - x };
        }
        total += w;
    }
    total
}

/// `−½ Σ c_i c_j [p ln p + (1−p) ln(1−p)]` written out directly.
pub fn brute_entropy(masses: &[f64], values: &[f64]) -> f64 {
    let m = masses.len();
    let mut s = 0.0;
    for i in 0..m {
        for j in 0..m {
            let p = values[i * m + j];
            let h = if p <= 0.0 || p >= 1.0 {
                0.0
            } else {
                p * p.ln() + (1.0 - p) * (1.0 - p).ln()
            };
            s -= 0.5 * masses[i] * masses[j] * h;
        }
    }
    s
}

/// Midpoint-rule kernel `K_ab = q(x_a, x_b) / n` on `n` points.
pub fn kernel(q: &StepGraphon, n: usize) -> Vec<f64> {
    let xs: Vec<f64> = (0..n).map(|a| (a as f64 + 0.5) / n as f64).collect();
    let mut k = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            k[a * n + b] = q.at(xs[a], xs[b]) / n as f64;
        }
    }
    k
}

pub fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for l in 0..n {
            let x = a[i * n + l];
            if x == 0.0 {
                continue;
            }
            for j in 0..n {
                c[i * n + j] += x * b[l * n + j];
            }
        }
    }
    c
}

/// `trace(A B)` for square `n × n` matrices.
pub fn trace_prod(a: &[f64], b: &[f64], n: usize) -> f64 {
    let mut t = 0.0;
    for i in 0..n {
        for j in 0..n {
            t += a[i * n + j] * b[j * n + i];
        }
    }
    t
}

/// `(f(x + h) − f(x − h)) / 2h`.
pub fn central(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

pub type GradFn = Box<dyn Fn(&StepGraphon) -> Gradient>;

/// Entropy plus the density functionals the optimizers differentiate,
/// each with its degree of homogeneity in the masses.
pub fn functionals() -> Vec<(&'static str, usize, GradFn)> {
    let pat =
        |p: SubgraphPattern| -> GradFn { Box::new(move |q| subgraph_density_grad(q, &p).unwrap()) };
    vec![
        ("entropy", 2, Box::new(graphon_entropy_grad)),
        ("triangle", 3, pat(SubgraphPattern::triangle())),
        ("2-star", 3, pat(SubgraphPattern::star(2).unwrap())),
        ("3-star", 4, pat(SubgraphPattern::star(3).unwrap())),
        ("t1", 3, pat(SubgraphPattern::signed_two_star())),
        ("t2", 4, pat(SubgraphPattern::signed_square())),
    ]
}

/// Moves `dx` onto the pair value `p_ij = p_ji`.
pub fn with_value(q: &StepGraphon, i: usize, j: usize, dx: f64) -> StepGraphon {
    let m = q.podality();
    let mut v = q.values_flat().to_vec();
    v[i * m + j] += dx;
    if i != j {
        v[j * m + i] += dx;
    }
    StepGraphon::from_flat(q.masses().to_vec(), v).unwrap()
}

/// Moves mass `dx` from block `j` to block `i`, keeping the total at one.
pub fn with_mass(q: &StepGraphon, i: usize, j: usize, dx: f64) -> StepGraphon {
    let mut c = q.masses().to_vec();
    c[i] += dx;
    c[j] -= dx;
    StepGraphon::from_flat(c, q.values_flat().to_vec()).unwrap()
}

/// Worst relative error between analytic and central-difference
/// derivatives over `points` random graphons, and where it occurred. Mass
/// directions are `e_i − e_j`, compared with `g_i − g_j`.
pub fn worst_gradient_error(seed: u64, points: usize) -> (f64, String) {
    const H: f64 = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fs = functionals();
    let mut worst = (0.0, String::new());
    let mut record = |e: f64, what: String| {
        if e > worst.0 {
            worst = (e, what);
        }
    };
    for _ in 0..points {
        let m = rng.random_range(1..=4);
        let q = random_graphon(&mut rng, m, 0.05);
        for (name, _, f) in &fs {
            let g = f(&q);
            let scale = g.value.abs().max(1e-3);
            let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(scale);
            for i in 0..m {
                for j in i..m {
                    let fd = central(|dx| f(&with_value(&q, i, j, dx)).value, 0.0, H);
                    record(
                        rel(g.values[i * m + j], fd),
                        format!("{name} value ({i},{j}), m={m}"),
                    );
                }
                for j in 0..m {
                    if j != i {
                        let fd = central(|dx| f(&with_mass(&q, i, j, dx)).value, 0.0, H);
                        record(
                            rel(g.masses[i] - g.masses[j], fd),
                            format!("{name} mass ({i},{j}), m={m}"),
                        );
                    }
                }
            }
        }
    }
    worst
}

/// Exact in-window frequencies of each `(edges, triangles)` bin against
/// batch means of chain visits. Returns the largest `|chain − exact| / SE`
/// and whether the chain stayed inside the enumerated support.
pub fn chain_vs_enumeration(
    n: usize,
    constraints: &ConstraintVector,
    seed: u64,
    batches: usize,
    batch_len: usize,
) -> (f64, bool) {
    let report = enumerate_z(n, constraints, Parallelism::Sequential).unwrap();
    let exact: BTreeMap<(u32, u32), f64> = report
        .histogram
        .iter()
        .filter(|b| b.in_window > 0)
        .map(|b| {
            (
                (b.edges, b.triangles),
                b.in_window as f64 / report.count as f64,
            )
        })
        .collect();
    // visits run from the end of burn-in to the second sample
    let skip = 1000;
    let mut cfg = ChainConfig::new(n, constraints.clone(), seed, 2);
    cfg.burn_in = Some(1000);
    cfg.interval = Some((batches * batch_len + skip) as u64);
    let mut counts: Vec<BTreeMap<(u32, u32), usize>> = vec![BTreeMap::new(); batches];
    let mut seen = 0usize;
    let mut skipped = 0usize;
    sample_constrained_with(&cfg, |g| {
        if skipped < skip {
            skipped += 1;
        } else if seen < batches * batch_len {
            let key = (g.edge_count() as u32, g.triangle_count() as u32);
            *counts[seen / batch_len].entry(key).or_default() += 1;
            seen += 1;
        }
    })
    .unwrap();
    assert_eq!(seen, batches * batch_len);
    let inside = counts
        .iter()
        .all(|b| b.keys().all(|k| exact.contains_key(k)));
    let mut worst = 0.0f64;
    for (key, &p) in &exact {
        let f: Vec<f64> = counts
            .iter()
            .map(|b| *b.get(key).unwrap_or(&0) as f64 / batch_len as f64)
            .collect();
        let mean = f.iter().sum::<f64>() / batches as f64;
        let var = f.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
        let se = (var / batches as f64).sqrt().max(1e-4);
        worst = worst.max((mean - p).abs() / se);
    }
    (worst, inside)
}
