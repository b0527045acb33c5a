//! Recovering a block structure from a single graph.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphon::{FiniteGraph, StepGraphon};
use crate::par::split_seed;

/// Largest number of blocks [`estimate_block_structure`] accepts.
pub const MAX_BLOCKS: usize = 8;
const RESTARTS: u64 = 8;
const MAX_LLOYD: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockEstimate {
    /// Cluster masses and inter-cluster edge frequencies, blocks in the
    /// canonical order (mass, then row sum, descending).
    pub graphon: StepGraphon,
    /// Block of every node, in the graphon's block order.
    pub assignment: Vec<usize>,
    /// Within-cluster sum of squared distances between adjacency rows and
    /// their cluster means.
    pub objective: f64,
}

/// Cluster nodes by adjacency rows with k-means (k-means++ seeding,
/// `RESTARTS` deterministic restarts from `seed`, best objective kept) and
/// read off block masses and edge frequencies. The diagonal value of a
/// singleton cluster has no pairs to average and is set to the graph's edge
/// density.
pub fn estimate_block_structure(g: &FiniteGraph, m: usize, seed: u64) -> Result<BlockEstimate> {
    let n = g.node_count();
    if m == 0 || m > MAX_BLOCKS {
        return Err(Error::CapExceeded {
            what: "block count",
            value: m,
            cap: MAX_BLOCKS,
        });
    }
    if m > n {
        return Err(Error::Domain(format!(
            "{m} blocks requested for a graph on {n} nodes"
        )));
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|u| {
            (0..n)
                .map(|v| if g.has_edge(u, v) { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for r in 0..RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(split_seed(seed, r));
        let (obj, labels) = kmeans(&rows, m, &mut rng);
        if best.as_ref().is_none_or(|(b, _)| obj < *b - 1e-9) {
            best = Some((obj, labels));
        }
    }
    let (objective, labels) = best.expect("at least one restart");
    let (graphon, order) = block_graphon(g, &labels, m);
    let rank: Vec<usize> = {
        let mut r = vec![0; m];
        for (new, &old) in order.iter().enumerate() {
            r[old] = new;
        }
        r
    };
    Ok(BlockEstimate {
        graphon,
        assignment: labels.iter().map(|&l| rank[l]).collect(),
        objective,
    })
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn kmeans(rows: &[Vec<f64>], m: usize, rng: &mut ChaCha8Rng) -> (f64, Vec<usize>) {
    let n = rows.len();
    // k-means++ seeding
    let mut centers: Vec<Vec<f64>> = vec![rows[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = rows.iter().map(|r| dist2(r, &centers[0])).collect();
    while centers.len() < m {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut t = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if t < w {
                    idx = i;
                    break;
                }
                t -= w;
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        centers.push(rows[pick].clone());
        for (i, r) in rows.iter().enumerate() {
            d2[i] = d2[i].min(dist2(r, centers.last().unwrap()));
        }
    }
    let mut labels = vec![usize::MAX; n];
    for _ in 0..MAX_LLOYD {
        let mut changed = false;
        for (i, r) in rows.iter().enumerate() {
            let l = (0..m)
                .min_by(|&a, &b| dist2(r, &centers[a]).total_cmp(&dist2(r, &centers[b])))
                .unwrap();
            if labels[i] != l {
                labels[i] = l;
                changed = true;
            }
        }
        // re-seed empty clusters with the point farthest from its centre
        for c in 0..m {
            if !labels.contains(&c) {
                let far = (0..n)
                    .max_by(|&a, &b| {
                        dist2(&rows[a], &centers[labels[a]])
                            .total_cmp(&dist2(&rows[b], &centers[labels[b]]))
                    })
                    .unwrap();
                labels[far] = c;
                changed = true;
            }
        }
        for (c, center) in centers.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = rows
                .iter()
                .zip(&labels)
                .filter(|(_, &l)| l == c)
                .map(|(r, _)| r)
                .collect();
            for (k, x) in center.iter_mut().enumerate() {
                *x = members.iter().map(|r| r[k]).sum::<f64>() / members.len() as f64;
            }
        }
        if !changed {
            break;
        }
    }
    let obj = rows
        .iter()
        .zip(&labels)
        .map(|(r, &l)| dist2(r, &centers[l]))
        .sum();
    (obj, labels)
}

/// Block graphon of a labelling, and the order of the original labels in
/// the canonical block order.
fn block_graphon(g: &FiniteGraph, labels: &[usize], m: usize) -> (StepGraphon, Vec<usize>) {
    let n = g.node_count();
    let mut size = vec![0usize; m];
    for &l in labels {
        size[l] += 1;
    }
    let mut edges = vec![0usize; m * m];
    for u in 0..n {
        for v in (u + 1)..n {
            if g.has_edge(u, v) {
                let (a, b) = (labels[u], labels[v]);
                edges[a * m + b] += 1;
                if a != b {
                    edges[b * m + a] += 1;
                }
            }
        }
    }
    let density = if n > 1 {
        g.edge_count() as f64 / (n * (n - 1) / 2) as f64
    } else {
        0.0
    };
    let mut values = vec![0.0; m * m];
    for a in 0..m {
        for b in 0..m {
            let pairs = if a == b {
                size[a] * size[a].saturating_sub(1) / 2
            } else {
                size[a] * size[b]
            };
            values[a * m + b] = if pairs == 0 {
                density
            } else {
                edges[a * m + b] as f64 / pairs as f64
            };
        }
    }
    let masses: Vec<f64> = size.iter().map(|&s| s as f64 / n as f64).collect();
    let row_sum = |a: usize| (0..m).map(|b| masses[b] * values[a * m + b]).sum::<f64>();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        masses[b]
            .total_cmp(&masses[a])
            .then(row_sum(b).total_cmp(&row_sum(a)))
    });
    let q = StepGraphon::normalized(masses, values).permuted(&order);
    (q, order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::chain::sample_graph;

    #[test]
    fn complete_graph_blocks_are_full() {
        let g = FiniteGraph::complete(9);
        for m in 1..=3 {
            let est = estimate_block_structure(&g, m, 0).unwrap();
            assert!(est.graphon.values_flat().iter().all(|&v| v == 1.0));
        }
    }

    #[test]
    fn single_block_is_edge_density() {
        let g = FiniteGraph::from_edges(5, &[(0, 1), (1, 2), (3, 4)]).unwrap();
        let est = estimate_block_structure(&g, 1, 0).unwrap();
        assert_eq!(est.graphon.podality(), 1);
        assert!((est.graphon.value(0, 0) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn recovers_planted_bipodal() {
        let q = StepGraphon::symmetric_bipodal(0.1, 0.9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = sample_graph(&q, 200, &mut rng);
        let est = estimate_block_structure(&g, 2, 7).unwrap();
        let mut diag = [est.graphon.value(0, 0), est.graphon.value(1, 1)];
        diag.sort_by(f64::total_cmp);
        assert!((diag[0] - 0.1).abs() < 0.05 && (diag[1] - 0.1).abs() < 0.05);
        assert!((est.graphon.value(0, 1) - 0.9).abs() < 0.05);
    }

    #[test]
    fn caps() {
        let g = FiniteGraph::complete(3);
        assert!(estimate_block_structure(&g, 4, 0).is_err());
        assert!(estimate_block_structure(&FiniteGraph::complete(20), 9, 0).is_err());
    }
}
