//! Distances between step graphons.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::density::density_unchecked;
use super::pattern::SubgraphPattern;
use super::step::StepGraphon;
use crate::error::{Error, Result};

/// Maximum number of blocks in the common refinement for the cut norm.
pub const CUT_BLOCK_CAP: usize = 20;
/// Breakpoints closer than this are treated as equal.
const BREAK_TOL: f64 = 1e-9;
/// Budget (permutations × subsets) for exhaustive block matching.
const EXHAUSTIVE_BUDGET: f64 = 2e7;

/// Upper bound on the cut distance, minimizing over block permutations of
/// `q2` only (the true cut distance also allows arbitrary measure-preserving
/// rearrangements). For each arrangement both graphons are laid out as
/// consecutive intervals, refined to a common partition, and the exact cut
/// norm of the difference is computed over all block subsets.
///
/// Block permutations are enumerated exhaustively when affordable,
/// otherwise improved by pairwise swaps from the identity; either way the
/// result is an upper bound.
pub fn cut_distance_upper(q1: &StepGraphon, q2: &StepGraphon) -> Result<f64> {
    let m1 = q1.podality();
    let m2 = q2.podality();
    if m1.max(m2) > CUT_BLOCK_CAP {
        return Err(Error::CapExceeded {
            what: "graphon podality for cut distance",
            value: m1.max(m2),
            cap: CUT_BLOCK_CAP,
        });
    }
    let identity: Vec<usize> = (0..m2).collect();
    let r_est = (m1 + m2 - 1).min(CUT_BLOCK_CAP);
    let perms = factorial(m2);
    if m2 <= 8 && perms * 2f64.powi(r_est as i32) <= EXHAUSTIVE_BUDGET {
        let mut best = f64::INFINITY;
        let mut order = identity;
        for_each_permutation(&mut order, &mut |ord| {
            if let Ok(d) = arranged_cut_norm(q1, &q2.permuted(ord)) {
                best = best.min(d);
            }
        });
        if best.is_finite() {
            return Ok(best);
        }
        return Err(refinement_cap_error(m1 + m2));
    }
    let mut order = identity;
    let mut best = arranged_cut_norm(q1, &q2.permuted(&order))?;
    loop {
        let mut improved = false;
        for i in 0..m2 {
            for j in (i + 1)..m2 {
                order.swap(i, j);
                match arranged_cut_norm(q1, &q2.permuted(&order)) {
                    Ok(d) if d < best - 1e-15 => {
                        best = d;
                        improved = true;
                    }
                    _ => order.swap(i, j),
                }
            }
        }
        if !improved {
            return Ok(best);
        }
    }
}

fn refinement_cap_error(value: usize) -> Error {
    Error::CapExceeded {
        what: "blocks in common refinement",
        value,
        cap: CUT_BLOCK_CAP,
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn for_each_permutation(a: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    fn heap(k: usize, a: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if k <= 1 {
            f(a);
            return;
        }
        heap(k - 1, a, f);
        for i in 0..k - 1 {
            if k.is_multiple_of(2) {
                a.swap(i, k - 1);
            } else {
                a.swap(0, k - 1);
            }
            heap(k - 1, a, f);
        }
    }
    let k = a.len();
    heap(k, a, f);
}

/// Cut norm of `q1 - q2` with both laid out in their given block order.
fn arranged_cut_norm(q1: &StepGraphon, q2: &StepGraphon) -> Result<f64> {
    let cum = |q: &StepGraphon| {
        let mut acc = 0.0;
        q.masses()
            .iter()
            .map(|c| {
                acc += c;
                acc
            })
            .collect::<Vec<_>>()
    };
    let (b1, b2) = (cum(q1), cum(q2));
    let mut cuts: Vec<f64> = b1.iter().chain(b2.iter()).copied().collect();
    cuts.sort_by(f64::total_cmp);
    let mut merged: Vec<f64> = Vec::new();
    for x in cuts {
        if merged.last().is_none_or(|&l| x - l > BREAK_TOL) {
            merged.push(x);
        }
    }
    *merged.last_mut().unwrap() = 1.0;
    let r = merged.len();
    if r > CUT_BLOCK_CAP {
        return Err(refinement_cap_error(r));
    }
    let mut weights = Vec::with_capacity(r);
    let mut owner1 = Vec::with_capacity(r);
    let mut owner2 = Vec::with_capacity(r);
    let mut prev = 0.0;
    for &x in &merged {
        let mid = 0.5 * (prev + x);
        weights.push(x - prev);
        owner1.push(b1.iter().position(|&b| mid < b).unwrap_or(b1.len() - 1));
        owner2.push(b2.iter().position(|&b| mid < b).unwrap_or(b2.len() - 1));
        prev = x;
    }
    let mut diff = vec![0.0; r * r];
    for i in 0..r {
        for j in 0..r {
            diff[i * r + j] = weights[i]
                * weights[j]
                * (q1.value(owner1[i], owner1[j]) - q2.value(owner2[i], owner2[j]));
        }
    }
    Ok(cut_norm(&diff, r))
}

/// `max_{S,T} |Σ_{i∈S, j∈T} a_ij|` for a weighted `r×r` matrix, by Gray-code
/// enumeration of `T` with the optimal `S` (positive or negative row sums).
pub(crate) fn cut_norm(a: &[f64], r: usize) -> f64 {
    let mut rows = vec![0.0; r];
    let mut in_t = vec![false; r];
    let mut best: f64 = 0.0;
    for t in 1u64..(1u64 << r) {
        let j = t.trailing_zeros() as usize;
        let sign = if in_t[j] { -1.0 } else { 1.0 };
        in_t[j] = !in_t[j];
        for (i, row) in rows.iter_mut().enumerate() {
            *row += sign * a[i * r + j];
        }
        let (mut pos, mut neg) = (0.0, 0.0);
        for &x in &rows {
            if x > 0.0 {
                pos += x;
            } else {
                neg -= x;
            }
        }
        best = best.max(pos).max(neg);
    }
    best
}

/// A connected simple graph in the frozen d-bar enumeration.
#[derive(Debug, Clone)]
pub struct EnumeratedGraph {
    pub vertices: usize,
    pub edges: Vec<(usize, usize)>,
    /// Canonical form: the smallest edge bitmask over all relabelings, with
    /// pair `(u,v)`, `u<v`, at bit position in lexicographic pair order.
    pub canonical_mask: u32,
}

/// Connected simple graphs on 2..=5 vertices ordered by vertex count, then
/// edge count, then canonical mask. There are 1 + 2 + 6 + 21 = 30 of them.
pub fn connected_graphs() -> &'static [EnumeratedGraph] {
    static LIST: OnceLock<Vec<EnumeratedGraph>> = OnceLock::new();
    LIST.get_or_init(|| {
        let mut out = Vec::new();
        for v in 2..=5 {
            let pairs: Vec<(usize, usize)> = (0..v)
                .flat_map(|a| ((a + 1)..v).map(move |b| (a, b)))
                .collect();
            let mut perms = Vec::new();
            let mut base: Vec<usize> = (0..v).collect();
            for_each_permutation(&mut base, &mut |p| perms.push(p.to_vec()));
            let mut seen = std::collections::BTreeSet::new();
            for mask in 0u32..(1 << pairs.len()) {
                if !is_connected(v, &pairs, mask) {
                    continue;
                }
                let canon = perms
                    .iter()
                    .map(|p| relabel(&pairs, mask, p))
                    .min()
                    .unwrap();
                seen.insert((canon.count_ones(), canon));
            }
            for (_, canon) in seen {
                let edges = pairs
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| canon >> i & 1 == 1)
                    .map(|(_, &e)| e)
                    .collect();
                out.push(EnumeratedGraph {
                    vertices: v,
                    edges,
                    canonical_mask: canon,
                });
            }
        }
        out
    })
}

fn is_connected(v: usize, pairs: &[(usize, usize)], mask: u32) -> bool {
    let mut reach = 1u32;
    loop {
        let mut next = reach;
        for (i, &(a, b)) in pairs.iter().enumerate() {
            if mask >> i & 1 == 1 && (reach >> a & 1 == 1 || reach >> b & 1 == 1) {
                next |= (1 << a) | (1 << b);
            }
        }
        if next == reach {
            return reach == (1 << v) - 1;
        }
        reach = next;
    }
}

fn relabel(pairs: &[(usize, usize)], mask: u32, perm: &[usize]) -> u32 {
    let mut out = 0;
    for (i, &(a, b)) in pairs.iter().enumerate() {
        if mask >> i & 1 == 1 {
            let (x, y) = (perm[a].min(perm[b]), perm[a].max(perm[b]));
            let idx = pairs.iter().position(|&p| p == (x, y)).unwrap();
            out |= 1 << idx;
        }
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DbarReport {
    pub value: f64,
    pub max_order: usize,
    /// Number of graphs in the truncated sum.
    pub terms: usize,
    pub ordering: String,
}

/// Truncated `Σ_j |t_{H_j}(q1) − t_{H_j}(q2)| / 2^j` over the frozen
/// enumeration of connected graphs with at most `max_order` vertices.
pub fn dbar_distance(q1: &StepGraphon, q2: &StepGraphon, max_order: usize) -> Result<DbarReport> {
    if max_order > 5 {
        return Err(Error::CapExceeded {
            what: "d-bar max order",
            value: max_order,
            cap: 5,
        });
    }
    let mut value = 0.0;
    let mut terms = 0;
    for (j, h) in connected_graphs()
        .iter()
        .take_while(|h| h.vertices <= max_order)
        .enumerate()
    {
        let p = SubgraphPattern::new(h.vertices, &h.edges).expect("enumerated graphs are simple");
        let d = (density_unchecked(q1, &p) - density_unchecked(q2, &p)).abs();
        value += d / 2f64.powi(j as i32 + 1);
        terms += 1;
    }
    Ok(DbarReport {
        value,
        max_order,
        terms,
        ordering: "connected graphs on 2..=max_order vertices by (vertices, edges, canonical mask)"
            .to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn enumeration_counts() {
        let list = connected_graphs();
        let count = |v| list.iter().filter(|g| g.vertices == v).count();
        assert_eq!((count(2), count(3), count(4), count(5)), (1, 2, 6, 21));
        assert_eq!(list[0].edges, vec![(0, 1)]);
        assert_eq!(list[2].edges.len(), 3); // triangle after the path
    }

    #[test]
    fn cut_distance_examples() {
        let a = StepGraphon::constant(0.2).unwrap();
        let b = StepGraphon::constant(0.7).unwrap();
        assert_abs_diff_eq!(cut_distance_upper(&a, &b).unwrap(), 0.5, epsilon = 1e-15);
        assert_eq!(cut_distance_upper(&a, &a).unwrap(), 0.0);
        let q = StepGraphon::new(vec![0.5, 0.5], vec![vec![0.3, 0.9], vec![0.9, 0.6]]).unwrap();
        assert_abs_diff_eq!(
            cut_distance_upper(&q, &q.permuted(&[1, 0])).unwrap(),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn refined_profiles() {
        // constant 0.5 split unevenly is still the same graphon
        let a = StepGraphon::constant(0.5).unwrap();
        let b = StepGraphon::new(vec![0.3, 0.7], vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert_abs_diff_eq!(cut_distance_upper(&a, &b).unwrap(), 0.0, epsilon = 1e-15);
        let big = StepGraphon::from_flat(vec![1.0 / 21.0; 21], vec![0.5; 441]);
        assert!(big.is_ok());
        assert!(matches!(
            cut_distance_upper(&a, &big.unwrap()),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn dbar_examples() {
        let a = StepGraphon::constant(0.2).unwrap();
        let b = StepGraphon::constant(0.7).unwrap();
        assert_abs_diff_eq!(
            dbar_distance(&a, &b, 2).unwrap().value,
            0.25,
            epsilon = 1e-15
        );
        assert_eq!(dbar_distance(&a, &a, 5).unwrap().value, 0.0);
        let d4 = dbar_distance(&a, &b, 4).unwrap();
        let d5 = dbar_distance(&a, &b, 5).unwrap();
        assert_eq!(d4.terms, 9);
        assert!(d4.value <= d5.value + 2f64.powi(-9));
        assert!(dbar_distance(&a, &b, 6).is_err());
    }
}
