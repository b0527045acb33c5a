//! Exact counts of labeled graphs with densities in windows.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphon::{in_window, ConstraintVector, FiniteGraph, SubgraphPattern};
use crate::io::{extended_real, fmt_real};
use crate::par::{map_indexed, Parallelism};

/// Largest `n` for exhaustive enumeration (`2^21` labeled graphs).
pub const MAX_ENUM_N: usize = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub pattern: SubgraphPattern,
    /// Open interval `(lo, hi)`.
    pub lo: f64,
    pub hi: f64,
}

/// Labeled graphs on `n` nodes sharing an edge and triangle count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub edges: u32,
    pub triangles: u32,
    pub count: u64,
    /// How many of them fall inside every window.
    pub in_window: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumerationReport {
    pub n: usize,
    pub windows: Vec<Window>,
    /// `Z_n`: labeled graphs whose injective densities all lie in the windows.
    pub count: u64,
    /// `(1/n²) ln Z_n`; `-inf` when nothing qualifies.
    #[serde(with = "extended_real")]
    pub log_count: f64,
    /// Joint (edge, triangle) histogram over all `2^{n(n-1)/2}` graphs.
    pub histogram: Vec<HistogramBin>,
}

fn falling(d: u32, k: usize) -> u128 {
    if (d as usize) < k {
        return 0;
    }
    (0..k).map(|i| (d as usize - i) as u128).product()
}

enum Kind {
    Star(usize),
    Triangle,
    Other(SubgraphPattern),
}

/// Densities of the graph with pair bitmask `mask`, plus its edge and
/// triangle counts.
struct Evaluator {
    n: usize,
    pairs: Vec<(usize, usize)>,
    kinds: Vec<Kind>,
    denoms: Vec<f64>,
}

impl Evaluator {
    fn new(n: usize, patterns: &[SubgraphPattern]) -> Self {
        let mut pairs = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                pairs.push((u, v));
            }
        }
        let kinds = patterns
            .iter()
            .map(|p| {
                if let Some(k) = p.star_size() {
                    Kind::Star(k)
                } else if p.is_triangle() {
                    Kind::Triangle
                } else {
                    Kind::Other(p.clone())
                }
            })
            .collect();
        let denoms = patterns
            .iter()
            .map(|p| {
                (0..p.vertex_count())
                    .map(|i| n.saturating_sub(i) as f64)
                    .product()
            })
            .collect();
        Evaluator {
            n,
            pairs,
            kinds,
            denoms,
        }
    }

    fn eval(&self, mask: u32, densities: &mut Vec<f64>) -> (u32, u32) {
        let mut rows = [0u8; MAX_ENUM_N];
        for (b, &(u, v)) in self.pairs.iter().enumerate() {
            if mask >> b & 1 == 1 {
                rows[u] |= 1 << v;
                rows[v] |= 1 << u;
            }
        }
        let edges = mask.count_ones();
        let mut tri = 0u32;
        for (b, &(u, v)) in self.pairs.iter().enumerate() {
            if mask >> b & 1 == 1 {
                tri += (rows[u] & rows[v]).count_ones();
            }
        }
        let triangles = tri / 3;
        densities.clear();
        let mut graph: Option<FiniteGraph> = None;
        for (kind, &den) in self.kinds.iter().zip(&self.denoms) {
            let count: u128 = match kind {
                Kind::Star(k) => rows[..self.n]
                    .iter()
                    .map(|r| falling(r.count_ones(), *k))
                    .sum(),
                Kind::Triangle => 6 * triangles as u128,
                Kind::Other(p) => {
                    let g = graph.get_or_insert_with(|| {
                        let edges: Vec<(usize, usize)> = self
                            .pairs
                            .iter()
                            .enumerate()
                            .filter(|(b, _)| mask >> b & 1 == 1)
                            .map(|(_, &e)| e)
                            .collect();
                        FiniteGraph::from_edges(self.n, &edges).expect("pairs are in range")
                    });
                    crate::graphon::injective_count(g, p)
                }
            };
            densities.push(count as f64 / den);
        }
        (edges, triangles)
    }
}

/// Enumerate all labeled graphs on `n ≤ 7` nodes and count those whose
/// injective densities lie in the open windows `(α_j − δ, α_j + δ)`. Work
/// is split over the leading pair bits; partial results are merged in
/// chunk order.
pub fn enumerate_z(
    n: usize,
    constraints: &ConstraintVector,
    mode: Parallelism,
) -> Result<EnumerationReport> {
    constraints.validate()?;
    if n > MAX_ENUM_N {
        return Err(Error::CapExceeded {
            what: "enumeration node count",
            value: n,
            cap: MAX_ENUM_N,
        });
    }
    if n == 0 {
        return Err(Error::Domain("enumeration needs at least one node".into()));
    }
    let patterns: Vec<SubgraphPattern> = constraints
        .constraints
        .iter()
        .map(|c| c.pattern.clone())
        .collect();
    for p in &patterns {
        if !p.is_unsigned() {
            return Err(Error::InvalidPattern(
                "windows take all-present patterns".into(),
            ));
        }
        if p.vertex_count() > n {
            return Err(Error::Domain(format!(
                "pattern with {} vertices on {n} nodes",
                p.vertex_count()
            )));
        }
    }
    let targets = constraints.targets();
    let delta = constraints.delta;
    let eval = Evaluator::new(n, &patterns);
    let bits = eval.pairs.len() as u32;
    let lead = bits.min(6);
    let chunks = 1usize << lead;
    let low = bits - lead;
    let parts = map_indexed(chunks, mode, |c| {
        let mut hist: BTreeMap<(u32, u32), (u64, u64)> = BTreeMap::new();
        let mut count = 0u64;
        let mut d = Vec::with_capacity(patterns.len());
        for lowbits in 0..(1u32 << low) {
            let mask = ((c as u32) << low) | lowbits;
            let key = eval.eval(mask, &mut d);
            let ok = d
                .iter()
                .zip(&targets)
                .all(|(x, a)| in_window(*x, *a, delta));
            let e = hist.entry(key).or_default();
            e.0 += 1;
            if ok {
                e.1 += 1;
                count += 1;
            }
        }
        (count, hist)
    });
    let mut hist: BTreeMap<(u32, u32), (u64, u64)> = BTreeMap::new();
    let mut count = 0;
    for (c, h) in parts {
        count += c;
        for (k, (a, b)) in h {
            let e = hist.entry(k).or_default();
            e.0 += a;
            e.1 += b;
        }
    }
    let log_count = if count == 0 {
        f64::NEG_INFINITY
    } else {
        (count as f64).ln() / (n * n) as f64
    };
    Ok(EnumerationReport {
        n,
        windows: constraints
            .constraints
            .iter()
            .map(|c| Window {
                pattern: c.pattern.clone(),
                lo: c.target - delta,
                hi: c.target + delta,
            })
            .collect(),
        count,
        log_count,
        histogram: hist
            .into_iter()
            .map(|((edges, triangles), (count, in_window))| HistogramBin {
                edges,
                triangles,
                count,
                in_window,
            })
            .collect(),
    })
}

/// Histogram as CSV: `edges,triangles,edge_density,triangle_density,count,in_window`.
pub fn write_histogram_csv<W: Write>(report: &EnumerationReport, w: W) -> Result<()> {
    let n = report.n as f64;
    let pairs = n * (n - 1.0) / 2.0;
    let triples = n * (n - 1.0) * (n - 2.0) / 6.0;
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "edges",
        "triangles",
        "edge_density",
        "triangle_density",
        "count",
        "in_window",
    ])?;
    for b in &report.histogram {
        let ed = if pairs > 0.0 {
            b.edges as f64 / pairs
        } else {
            0.0
        };
        let td = if triples > 0.0 {
            b.triangles as f64 / triples
        } else {
            0.0
        };
        out.write_record([
            b.edges.to_string(),
            b.triangles.to_string(),
            fmt_real(ed),
            fmt_real(td),
            b.count.to_string(),
            b.in_window.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
