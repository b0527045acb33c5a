use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest pattern accepted by density evaluation unless a caller raises it.
pub const DEFAULT_VERTEX_CAP: usize = 6;

/// One pattern edge. Present edges contribute a factor `q`, absent edges a
/// factor `1 - q`. Vertices are zero-based internally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PatternEdge {
    pub u: usize,
    pub v: usize,
    pub present: bool,
}

/// A small simple graph with signed edges that defines a density functional.
///
/// The JSON form uses one-based vertices:
/// `{"k":4,"edges":[[1,2],[3,4]],"absent":[[2,3],[4,1]]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPattern", into = "RawPattern")]
pub struct SubgraphPattern {
    k: usize,
    edges: Vec<PatternEdge>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPattern {
    k: usize,
    #[serde(default)]
    edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    absent: Vec<[usize; 2]>,
}

impl TryFrom<RawPattern> for SubgraphPattern {
    type Error = Error;

    fn try_from(raw: RawPattern) -> Result<Self> {
        let one_based = |e: [usize; 2]| -> Result<(usize, usize)> {
            if e[0] == 0 || e[1] == 0 {
                return Err(Error::InvalidPattern("vertices are numbered from 1".into()));
            }
            Ok((e[0] - 1, e[1] - 1))
        };
        let present = raw
            .edges
            .into_iter()
            .map(one_based)
            .collect::<Result<Vec<_>>>()?;
        let absent = raw
            .absent
            .into_iter()
            .map(one_based)
            .collect::<Result<Vec<_>>>()?;
        SubgraphPattern::signed(raw.k, &present, &absent)
    }
}

impl From<SubgraphPattern> for RawPattern {
    fn from(p: SubgraphPattern) -> Self {
        let pick = |present: bool| {
            p.edges
                .iter()
                .filter(|e| e.present == present)
                .map(|e| [e.u + 1, e.v + 1])
                .collect()
        };
        RawPattern {
            k: p.k,
            edges: pick(true),
            absent: pick(false),
        }
    }
}

impl SubgraphPattern {
    /// Pattern whose edges are all present.
    pub fn new(k: usize, edges: &[(usize, usize)]) -> Result<Self> {
        Self::signed(k, edges, &[])
    }

    /// Pattern with present and absent edges (zero-based vertices).
    pub fn signed(k: usize, present: &[(usize, usize)], absent: &[(usize, usize)]) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidPattern(
                "pattern needs at least one vertex".into(),
            ));
        }
        let mut edges = Vec::with_capacity(present.len() + absent.len());
        let mut seen = std::collections::HashSet::new();
        for (&(u, v), sign) in present
            .iter()
            .map(|e| (e, true))
            .chain(absent.iter().map(|e| (e, false)))
        {
            if u >= k || v >= k {
                return Err(Error::InvalidPattern(format!(
                    "edge ({u},{v}) outside 0..{k}"
                )));
            }
            if u == v {
                return Err(Error::InvalidPattern(format!("loop at vertex {u}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::InvalidPattern(format!("duplicate edge ({u},{v})")));
            }
            edges.push(PatternEdge {
                u,
                v,
                present: sign,
            });
        }
        Ok(SubgraphPattern { k, edges })
    }

    pub fn vertex_count(&self) -> usize {
        self.k
    }

    pub fn edges(&self) -> &[PatternEdge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_unsigned(&self) -> bool {
        self.edges.iter().all(|e| e.present)
    }

    pub fn edge() -> Self {
        Self::new(2, &[(0, 1)]).unwrap()
    }

    pub fn triangle() -> Self {
        Self::new(3, &[(0, 1), (1, 2), (2, 0)]).unwrap()
    }

    /// Star with `k` present edges around vertex 0.
    pub fn star(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidPattern(
                "a star needs at least one edge".into(),
            ));
        }
        let edges: Vec<_> = (1..=k).map(|v| (0, v)).collect();
        Self::new(k + 1, &edges)
    }

    pub fn cycle(k: usize) -> Result<Self> {
        if k < 3 {
            return Err(Error::InvalidPattern(
                "a cycle needs at least 3 vertices".into(),
            ));
        }
        let edges: Vec<_> = (0..k).map(|i| (i, (i + 1) % k)).collect();
        Self::new(k, &edges)
    }

    pub fn complete(k: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for u in 0..k {
            for v in (u + 1)..k {
                edges.push((u, v));
            }
        }
        Self::new(k, &edges)
    }

    /// Signed 2-star: `∫ q(x,y) (1 - q(y,z))`.
    pub fn signed_two_star() -> Self {
        Self::signed(3, &[(0, 1)], &[(1, 2)]).unwrap()
    }

    /// Signed square: `∫ q(w,x)(1-q(x,y)) q(y,z)(1-q(z,w))`.
    pub fn signed_square() -> Self {
        Self::signed(4, &[(0, 1), (2, 3)], &[(1, 2), (3, 0)]).unwrap()
    }

    /// Look up a pattern by name: `edge`, `triangle`, `k-star` (e.g.
    /// `2-star`), `C<k>` / `<k>-cycle`, `K<k>`, `signed-2-star`,
    /// `signed-square`.
    pub fn named(name: &str) -> Result<Self> {
        let lower = name.trim().to_ascii_lowercase();
        match lower.as_str() {
            "edge" => return Ok(Self::edge()),
            "triangle" => return Ok(Self::triangle()),
            "signed-2-star" | "t1" => return Ok(Self::signed_two_star()),
            "signed-square" | "t2" => return Ok(Self::signed_square()),
            "square" => return Self::cycle(4),
            _ => {}
        }
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::InvalidPattern(format!("unknown pattern name {name:?}")))
        };
        if let Some(k) = lower.strip_suffix("-star") {
            return Self::star(parse(k)?);
        }
        if let Some(k) = lower.strip_suffix("-cycle") {
            return Self::cycle(parse(k)?);
        }
        if let Some(k) = lower.strip_prefix('c') {
            return Self::cycle(parse(k)?);
        }
        if let Some(k) = lower.strip_prefix('k') {
            return Self::complete(parse(k)?);
        }
        Err(Error::InvalidPattern(format!(
            "unknown pattern name {name:?}"
        )))
    }

    /// If this pattern is an all-present star, its number of edges.
    pub fn star_size(&self) -> Option<usize> {
        if !self.is_unsigned() || self.edges.is_empty() || self.edges.len() + 1 != self.k {
            return None;
        }
        let mut deg = vec![0usize; self.k];
        for e in &self.edges {
            deg[e.u] += 1;
            deg[e.v] += 1;
        }
        deg.contains(&self.edges.len()).then_some(self.edges.len())
    }

    pub fn is_triangle(&self) -> bool {
        self.k == 3 && self.edges.len() == 3 && self.is_unsigned()
    }

    pub fn is_edge(&self) -> bool {
        self.k == 2 && self.edges.len() == 1 && self.is_unsigned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_simple() {
        assert!(SubgraphPattern::new(3, &[(0, 0)]).is_err());
        assert!(SubgraphPattern::new(3, &[(0, 1), (1, 0)]).is_err());
        assert!(SubgraphPattern::signed(3, &[(0, 1)], &[(1, 0)]).is_err());
        assert!(SubgraphPattern::new(2, &[(0, 2)]).is_err());
        assert!(SubgraphPattern::new(0, &[]).is_err());
    }

    #[test]
    fn json_uses_one_based_vertices() {
        let p: SubgraphPattern =
            serde_json::from_str(r#"{"k":4,"edges":[[1,2],[3,4]],"absent":[[2,3],[4,1]]}"#)
                .unwrap();
        assert_eq!(p, SubgraphPattern::signed_square());
        assert!(serde_json::from_str::<SubgraphPattern>(r#"{"k":2,"edges":[[0,1]]}"#).is_err());
        let back: SubgraphPattern =
            serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn names() {
        assert_eq!(
            SubgraphPattern::named("triangle").unwrap(),
            SubgraphPattern::triangle()
        );
        assert_eq!(
            SubgraphPattern::named("3-star").unwrap().star_size(),
            Some(3)
        );
        assert_eq!(SubgraphPattern::named("C4").unwrap().edge_count(), 4);
        assert_eq!(SubgraphPattern::named("K4").unwrap().edge_count(), 6);
        assert!(SubgraphPattern::named("blob").is_err());
        assert_eq!(SubgraphPattern::edge().star_size(), Some(1));
        assert_eq!(SubgraphPattern::triangle().star_size(), None);
    }
}
