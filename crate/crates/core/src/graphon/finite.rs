use std::fmt::Write as _;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::pattern::SubgraphPattern;
use super::step::StepGraphon;
use crate::error::{Error, Result};

/// Upper bound on node counts produced by [`blowup`].
pub const MAX_NODES: usize = 1 << 20;

/// A labeled simple undirected graph stored as bitset adjacency rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteGraph {
    n: usize,
    words: usize,
    adj: Vec<u64>,
}

impl FiniteGraph {
    pub fn empty(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        FiniteGraph {
            n,
            words,
            adj: vec![0; n * words],
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Self::empty(n);
        for u in 0..n {
            for v in (u + 1)..n {
                g.add_edge(u, v);
            }
        }
        g
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(n);
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u},{v}) outside 0..{n}"
                )));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at node {u}")));
            }
            g.add_edge(u, v);
        }
        Ok(g)
    }

    /// Build from a 0/1 adjacency matrix; must be symmetric with zero diagonal.
    pub fn from_adjacency(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.len();
        let mut g = Self::empty(n);
        for (u, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidGraph(format!(
                    "adjacency row {u} has length {}",
                    row.len()
                )));
            }
            for (v, &a) in row.iter().enumerate() {
                if a > 1 {
                    return Err(Error::InvalidGraph(format!("entry ({u},{v}) is not 0/1")));
                }
                if a != rows[v][u] {
                    return Err(Error::InvalidGraph(format!(
                        "adjacency not symmetric at ({u},{v})"
                    )));
                }
                if u == v && a == 1 {
                    return Err(Error::InvalidGraph(format!("self-loop at node {u}")));
                }
                if a == 1 && u < v {
                    g.add_edge(u, v);
                }
            }
        }
        Ok(g)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn row(&self, u: usize) -> &[u64] {
        &self.adj[u * self.words..(u + 1) * self.words]
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u * self.words + v / 64] >> (v % 64) & 1 == 1
    }

    pub fn add_edge(&mut self, u: usize, v: usize) {
        self.adj[u * self.words + v / 64] |= 1 << (v % 64);
        self.adj[v * self.words + u / 64] |= 1 << (u % 64);
    }

    /// Flip the pair `{u,v}`; returns whether the edge is present afterwards.
    pub fn toggle(&mut self, u: usize, v: usize) -> bool {
        debug_assert_ne!(u, v);
        self.adj[u * self.words + v / 64] ^= 1 << (v % 64);
        self.adj[v * self.words + u / 64] ^= 1 << (u % 64);
        self.has_edge(u, v)
    }

    pub fn degree(&self, u: usize) -> usize {
        self.row(u).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn common_neighbors(&self, u: usize, v: usize) -> usize {
        self.row(u)
            .iter()
            .zip(self.row(v))
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn edge_count(&self) -> usize {
        (0..self.n).map(|u| self.degree(u)).sum::<usize>() / 2
    }

    pub fn triangle_count(&self) -> usize {
        let mut t = 0;
        for u in 0..self.n {
            for v in (u + 1)..self.n {
                if self.has_edge(u, v) {
                    t += self.common_neighbors(u, v);
                }
            }
        }
        t / 3
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.n {
            for v in (u + 1)..self.n {
                if self.has_edge(u, v) {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn adjacency(&self) -> Vec<Vec<u8>> {
        (0..self.n)
            .map(|u| (0..self.n).map(|v| self.has_edge(u, v) as u8).collect())
            .collect()
    }

    /// Edge-list text: a `# n=<count>` header followed by one `u v` pair per line.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("# n={}\n", self.n);
        for (u, v) in self.edges() {
            let _ = writeln!(s, "{u} {v}");
        }
        s
    }

    /// Parse edge-list text. Blank lines and `#` comments are skipped; a
    /// `# n=<count>` header fixes the node count, otherwise it is one more
    /// than the largest index seen.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut n_header = None;
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(v) = comment.trim().strip_prefix("n=") {
                    n_header = Some(v.trim().parse::<usize>().map_err(|_| {
                        Error::InvalidGraph(format!("line {}: bad node count {v:?}", lineno + 1))
                    })?);
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let mut next = || -> Result<usize> {
                it.next()
                    .ok_or_else(|| {
                        Error::InvalidGraph(format!("line {}: expected \"u v\"", lineno + 1))
                    })?
                    .parse::<usize>()
                    .map_err(|_| {
                        Error::InvalidGraph(format!(
                            "line {}: node index is not an integer",
                            lineno + 1
                        ))
                    })
            };
            let (u, v) = (next()?, next()?);
            if it.next().is_some() {
                return Err(Error::InvalidGraph(format!(
                    "line {}: trailing tokens",
                    lineno + 1
                )));
            }
            edges.push((u, v));
        }
        let max_idx = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
        let n = n_header.unwrap_or(max_idx).max(max_idx);
        Self::from_edges(n, &edges)
    }
}

/// JSON adjacency form: `{"n": 3, "adjacency": [[0,1,0],[1,0,1],[0,1,0]]}`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AdjacencyJson {
    #[serde(default)]
    n: Option<usize>,
    adjacency: Vec<Vec<u8>>,
}

impl Serialize for FiniteGraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        AdjacencyJson {
            n: Some(self.n),
            adjacency: self.adjacency(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FiniteGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = AdjacencyJson::deserialize(d)?;
        if let Some(n) = raw.n {
            if n != raw.adjacency.len() {
                return Err(serde::de::Error::custom(format!(
                    "n = {n} but adjacency has {} rows",
                    raw.adjacency.len()
                )));
            }
        }
        FiniteGraph::from_adjacency(&raw.adjacency).map_err(serde::de::Error::custom)
    }
}

/// The step graphon `q_G`: `n` blocks of mass `1/n` with values from `A_G`.
pub fn empirical_graphon(g: &FiniteGraph) -> Result<StepGraphon> {
    let n = g.node_count();
    if n == 0 {
        return Err(Error::Domain(
            "empirical graphon needs at least one node".into(),
        ));
    }
    let masses = vec![1.0 / n as f64; n];
    let mut values = vec![0.0; n * n];
    for u in 0..n {
        for v in 0..n {
            if g.has_edge(u, v) {
                values[u * n + v] = 1.0;
            }
        }
    }
    Ok(StepGraphon::normalized(masses, values))
}

/// Injective density of an all-present pattern in a finite graph:
/// the number of injective edge-preserving maps `H → G` divided by the same
/// count in `K_n`. Hence `finite_density(K_n, H) = 1` and for a `k`-clique
/// pattern this is (#cliques)/binomial(n,k).
pub fn finite_density(g: &FiniteGraph, h: &SubgraphPattern) -> Result<Ratio<u128>> {
    let n = g.node_count();
    let k = h.vertex_count();
    if !h.is_unsigned() {
        return Err(Error::Domain(
            "finite densities take all-present patterns".into(),
        ));
    }
    if k > n {
        return Err(Error::Domain(format!(
            "pattern has {k} vertices but graph has {n} nodes"
        )));
    }
    let denom: u128 = (0..k).map(|i| (n - i) as u128).product();
    Ok(Ratio::new(injective_count(g, h), denom))
}

/// Number of injective edge-preserving maps from `h` into `g`.
pub fn injective_count(g: &FiniteGraph, h: &SubgraphPattern) -> u128 {
    let k = h.vertex_count();
    let mut back = vec![Vec::new(); k];
    for e in h.edges() {
        let (lo, hi) = if e.u < e.v { (e.u, e.v) } else { (e.v, e.u) };
        back[hi].push(lo);
    }
    let words = g.row(0).len().max(1);
    let mut used = vec![0u64; words];
    let mut assign = vec![0usize; k];
    let mut scratch = vec![0u64; words];
    count_rec(g, &back, &mut assign, &mut used, &mut scratch, 0)
}

fn count_rec(
    g: &FiniteGraph,
    back: &[Vec<usize>],
    assign: &mut [usize],
    used: &mut [u64],
    scratch: &mut [u64],
    v: usize,
) -> u128 {
    let n = g.node_count();
    let k = assign.len();
    let words = used.len();
    // candidate set: nodes adjacent to all already-mapped neighbours, unused
    for w in 0..words {
        let tail = if w == words - 1 && !n.is_multiple_of(64) {
            (1u64 << (n % 64)) - 1
        } else {
            u64::MAX
        };
        scratch[w] = tail & !used[w];
    }
    for &u in &back[v] {
        let row = g.row(assign[u]);
        for w in 0..words {
            scratch[w] &= row[w];
        }
    }
    if v + 1 == k {
        return scratch.iter().map(|x| x.count_ones() as u128).sum();
    }
    let cands: Vec<usize> = scratch
        .iter()
        .enumerate()
        .flat_map(|(w, &bits)| {
            let mut b = bits;
            std::iter::from_fn(move || {
                if b == 0 {
                    return None;
                }
                let t = b.trailing_zeros() as usize;
                b &= b - 1;
                Some(w * 64 + t)
            })
        })
        .collect();
    let mut total = 0;
    for x in cands {
        assign[v] = x;
        used[x / 64] |= 1 << (x % 64);
        let mut local = vec![0u64; words];
        total += count_rec(g, back, assign, used, &mut local, v + 1);
        used[x / 64] &= !(1 << (x % 64));
    }
    total
}

/// Replace every node by `k` copies; copies of adjacent nodes are adjacent.
pub fn blowup(g: &FiniteGraph, k: usize) -> Result<FiniteGraph> {
    if k == 0 {
        return Err(Error::Domain("blow-up factor must be at least 1".into()));
    }
    let n = g.node_count();
    let nk = n
        .checked_mul(k)
        .filter(|&x| x <= MAX_NODES)
        .ok_or(Error::CapExceeded {
            what: "blow-up node count",
            value: n.saturating_mul(k),
            cap: MAX_NODES,
        })?;
    let mut out = FiniteGraph::empty(nk);
    for (u, v) in g.edges() {
        for a in 0..k {
            for b in 0..k {
                out.add_edge(u * k + a, v * k + b);
            }
        }
    }
    Ok(out)
}
