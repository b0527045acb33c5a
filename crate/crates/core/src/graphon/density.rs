//! Exact density and entropy functionals on step graphons, with analytic
//! gradients.
//!
//! Densities are homomorphism densities: the sum over all maps of pattern
//! vertices to blocks, weighted by block masses. Evaluation is exact and
//! costs `O(m^k)` for a `k`-vertex pattern on an `m`-podal graphon.

use super::pattern::{SubgraphPattern, DEFAULT_VERTEX_CAP};
use super::step::StepGraphon;
use crate::error::{Error, Result};

/// Value of a functional together with its partial derivatives.
///
/// `masses[i]` is `∂f/∂c_i` treating the masses as independent variables.
/// `values` is a row-major `m×m` symmetric array where entry `(i,j)` is the
/// derivative with respect to the pair parameter `p_ij = p_ji`; for `i ≠ j`
/// it therefore counts both orientations.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub value: f64,
    pub masses: Vec<f64>,
    pub values: Vec<f64>,
}

fn check_cap(p: &SubgraphPattern, cap: usize) -> Result<()> {
    if p.vertex_count() > cap {
        return Err(Error::CapExceeded {
            what: "pattern vertex count",
            value: p.vertex_count(),
            cap,
        });
    }
    Ok(())
}

/// Homomorphism density `t_P(q)` with the default vertex cap.
pub fn subgraph_density(q: &StepGraphon, p: &SubgraphPattern) -> Result<f64> {
    subgraph_density_capped(q, p, DEFAULT_VERTEX_CAP)
}

pub fn subgraph_density_capped(q: &StepGraphon, p: &SubgraphPattern, cap: usize) -> Result<f64> {
    check_cap(p, cap)?;
    Ok(density_unchecked(q, p))
}

/// For vertex `v`, the edges to earlier vertices.
fn back_edges(p: &SubgraphPattern) -> Vec<Vec<(usize, bool)>> {
    let mut back = vec![Vec::new(); p.vertex_count()];
    for e in p.edges() {
        let (lo, hi) = if e.u < e.v { (e.u, e.v) } else { (e.v, e.u) };
        back[hi].push((lo, e.present));
    }
    back
}

pub(crate) fn density_unchecked(q: &StepGraphon, p: &SubgraphPattern) -> f64 {
    let back = back_edges(p);
    let mut assign = vec![0usize; p.vertex_count()];
    let total = dfs(q, &back, &mut assign, 0, 1.0);
    total.clamp(0.0, 1.0)
}

fn dfs(
    q: &StepGraphon,
    back: &[Vec<(usize, bool)>],
    assign: &mut [usize],
    v: usize,
    acc: f64,
) -> f64 {
    if v == assign.len() {
        return acc;
    }
    let mut sum = 0.0;
    for (b, &c) in q.masses().iter().enumerate() {
        let mut w = acc * c;
        for &(u, present) in &back[v] {
            let x = q.value(assign[u], b);
            w *= if present { x } else { 1.0 - x };
            if w == 0.0 {
                break;
            }
        }
        if w == 0.0 {
            continue;
        }
        assign[v] = b;
        sum += dfs(q, back, assign, v + 1, w);
    }
    sum
}

/// Density and its gradient for a (possibly signed) pattern.
pub fn subgraph_density_grad(q: &StepGraphon, p: &SubgraphPattern) -> Result<Gradient> {
    check_cap(p, DEFAULT_VERTEX_CAP)?;
    let m = q.podality();
    let k = p.vertex_count();
    let edges = p.edges();
    let ne = edges.len();
    let mut entry = vec![0.0; m * m];
    let mut dmass = vec![0.0; m];
    let mut value = 0.0;

    let mut phi = vec![0usize; k];
    let mut cf = vec![0.0; k];
    let mut ef = vec![0.0; ne];
    let mut cpre = vec![1.0; k + 1];
    let mut cpost = vec![1.0; k + 1];
    let mut epre = vec![1.0; ne + 1];
    let mut epost = vec![1.0; ne + 1];
    loop {
        for v in 0..k {
            cf[v] = q.masses()[phi[v]];
        }
        for (i, e) in edges.iter().enumerate() {
            let x = q.value(phi[e.u], phi[e.v]);
            ef[i] = if e.present { x } else { 1.0 - x };
        }
        for v in 0..k {
            cpre[v + 1] = cpre[v] * cf[v];
        }
        for v in (0..k).rev() {
            cpost[v] = cpost[v + 1] * cf[v];
        }
        for i in 0..ne {
            epre[i + 1] = epre[i] * ef[i];
        }
        for i in (0..ne).rev() {
            epost[i] = epost[i + 1] * ef[i];
        }
        let cprod = cpre[k];
        let eprod = epre[ne];
        value += cprod * eprod;
        for v in 0..k {
            dmass[phi[v]] += cpre[v] * cpost[v + 1] * eprod;
        }
        for (i, e) in edges.iter().enumerate() {
            let d = cprod * epre[i] * epost[i + 1];
            let sign = if e.present { 1.0 } else { -1.0 };
            entry[phi[e.u] * m + phi[e.v]] += sign * d;
        }
        // odometer
        let mut v = 0;
        while v < k {
            phi[v] += 1;
            if phi[v] < m {
                break;
            }
            phi[v] = 0;
            v += 1;
        }
        if v == k {
            break;
        }
    }
    Ok(Gradient {
        value,
        masses: dmass,
        values: symmetrize_entries(&entry, m),
    })
}

/// Per-entry derivatives to pair-parameter derivatives.
fn symmetrize_entries(entry: &[f64], m: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * m];
    for i in 0..m {
        out[i * m + i] = entry[i * m + i];
        for j in (i + 1)..m {
            let s = entry[i * m + j] + entry[j * m + i];
            out[i * m + j] = s;
            out[j * m + i] = s;
        }
    }
    out
}

/// Density of the `k`-star: `Σ_i c_i (Σ_j c_j p_ij)^k`.
pub fn kstar_density(q: &StepGraphon, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("k-star needs k >= 1".into()));
    }
    let m = q.podality();
    let c = q.masses();
    let mut total = 0.0;
    for i in 0..m {
        let deg: f64 = (0..m).map(|j| c[j] * q.value(i, j)).sum();
        total += c[i] * deg.powi(k as i32);
    }
    Ok(total)
}

/// `p ln p + (1-p) ln(1-p)` with `0 ln 0 = 0`.
fn neg_binary_entropy(p: f64) -> f64 {
    let xlx = |x: f64| if x <= 0.0 { 0.0 } else { x * x.ln() };
    xlx(p) + xlx(1.0 - p)
}

/// Shannon entropy `S(q) = -½ Σ c_i c_j [p ln p + (1-p) ln(1-p)]`.
pub fn graphon_entropy(q: &StepGraphon) -> f64 {
    let m = q.podality();
    let c = q.masses();
    let mut s = 0.0;
    for i in 0..m {
        for j in 0..m {
            s -= 0.5 * c[i] * c[j] * neg_binary_entropy(q.value(i, j));
        }
    }
    s.max(0.0)
}

/// Entropy with gradient. Requires interior values (the derivative
/// `½ ln(p/(1-p))` diverges at 0 and 1).
pub fn graphon_entropy_grad(q: &StepGraphon) -> Gradient {
    let m = q.podality();
    let c = q.masses();
    let mut dmass = vec![0.0; m];
    let mut dval = vec![0.0; m * m];
    let mut value = 0.0;
    for i in 0..m {
        for j in 0..m {
            let p = q.value(i, j);
            let h = neg_binary_entropy(p);
            value -= 0.5 * c[i] * c[j] * h;
            dmass[i] -= c[j] * h;
            let logit = (p / (1.0 - p)).ln();
            if i == j {
                dval[i * m + i] = -0.5 * c[i] * c[i] * logit;
            } else {
                dval[i * m + j] = -c[i] * c[j] * logit;
            }
        }
    }
    Gradient {
        value,
        masses: dmass,
        values: dval,
    }
}
