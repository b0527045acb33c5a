use super::step::StepGraphon;

/// Default merge tolerance for reporting podality.
pub const DEFAULT_MERGE_TOL: f64 = 1e-4;

/// Merge blocks with near-identical rows and sort the result.
///
/// Two blocks merge when the mass-weighted L1 distance between their value
/// rows is below `merge_tol`; the closest pair is merged first and the
/// merged values are mass-weighted averages, which preserves the edge
/// density exactly. A block lighter than `merge_tol` is merged into its
/// closest neighbour regardless of distance. Output blocks are sorted by
/// mass, then row sum, both descending.
pub fn canonicalize(q: &StepGraphon, merge_tol: f64) -> StepGraphon {
    let mut masses = q.masses().to_vec();
    let mut m = masses.len();
    let mut vals = q.values_flat().to_vec();
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..m {
            for j in (i + 1)..m {
                let d: f64 = (0..m)
                    .map(|k| masses[k] * (vals[i * m + k] - vals[j * m + k]).abs())
                    .sum();
                if d < merge_tol && best.is_none_or(|(bd, _, _)| d < bd) {
                    best = Some((d, i, j));
                }
            }
        }
        if best.is_none() && m > 1 {
            let light = (0..m)
                .filter(|&k| masses[k] < merge_tol)
                .min_by(|&a, &b| masses[a].total_cmp(&masses[b]));
            if let Some(l) = light {
                let dist = |o: usize| -> f64 {
                    (0..m)
                        .map(|k| masses[k] * (vals[l * m + k] - vals[o * m + k]).abs())
                        .sum()
                };
                let o = (0..m)
                    .filter(|&o| o != l)
                    .min_by(|&a, &b| dist(a).total_cmp(&dist(b)))
                    .expect("m > 1");
                best = Some((0.0, l.min(o), l.max(o)));
            }
        }
        let Some((_, i, j)) = best else { break };
        let (ci, cj) = (masses[i], masses[j]);
        let cij = ci + cj;
        // merge j into i: average rows, then columns
        let mut nv = vals.clone();
        for k in 0..m {
            let v = (ci * vals[i * m + k] + cj * vals[j * m + k]) / cij;
            nv[i * m + k] = v;
            nv[k * m + i] = v;
        }
        let diag = (ci * ci * vals[i * m + i]
            + 2.0 * ci * cj * vals[i * m + j]
            + cj * cj * vals[j * m + j])
            / (cij * cij);
        nv[i * m + i] = diag;
        masses[i] = cij;
        masses.remove(j);
        let keep: Vec<usize> = (0..m).filter(|&k| k != j).collect();
        let n = m - 1;
        let mut out = vec![0.0; n * n];
        for (a, &ka) in keep.iter().enumerate() {
            for (b, &kb) in keep.iter().enumerate() {
                out[a * n + b] = nv[ka * m + kb];
            }
        }
        vals = out;
        m = n;
    }
    let merged = StepGraphon::normalized(masses, vals);
    let row_sum = |i: usize| {
        (0..m)
            .map(|k| merged.masses()[k] * merged.value(i, k))
            .sum::<f64>()
    };
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        merged.masses()[b]
            .total_cmp(&merged.masses()[a])
            .then(row_sum(b).total_cmp(&row_sum(a)))
    });
    merged.permuted(&order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphon::density::subgraph_density;
    use crate::graphon::pattern::SubgraphPattern;

    #[test]
    fn identical_rows_collapse() {
        let q = StepGraphon::new(vec![0.4, 0.6], vec![vec![0.3, 0.3], vec![0.3, 0.3]]).unwrap();
        let c = canonicalize(&q, DEFAULT_MERGE_TOL);
        assert_eq!(c.podality(), 1);
        assert!((c.value(0, 0) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn idempotent_on_canonical_input() {
        let q = StepGraphon::new(vec![0.7, 0.3], vec![vec![0.2, 0.9], vec![0.9, 0.4]]).unwrap();
        let c = canonicalize(&q, DEFAULT_MERGE_TOL);
        assert_eq!(c, q);
        assert_eq!(canonicalize(&c, DEFAULT_MERGE_TOL), c);
    }

    #[test]
    fn sorts_by_mass() {
        let q = StepGraphon::new(vec![0.3, 0.7], vec![vec![0.2, 0.9], vec![0.9, 0.4]]).unwrap();
        let c = canonicalize(&q, DEFAULT_MERGE_TOL);
        assert_eq!(c.masses(), &[0.7, 0.3]);
        assert_eq!(c.value(0, 0), 0.4);
    }

    #[test]
    fn negligible_blocks_are_absorbed() {
        let q = StepGraphon::new(
            vec![0.5, 0.5 - 1e-9, 1e-9],
            vec![
                vec![0.1, 0.8, 1.0],
                vec![0.8, 0.1, 0.0],
                vec![1.0, 0.0, 0.5],
            ],
        )
        .unwrap();
        let c = canonicalize(&q, DEFAULT_MERGE_TOL);
        assert_eq!(c.podality(), 2);
        assert!((c.value(0, 1) - 0.8).abs() < 1e-8);
    }

    #[test]
    fn split_then_merge_preserves_densities() {
        let q = StepGraphon::new(vec![0.3, 0.7], vec![vec![0.2, 0.9], vec![0.9, 0.4]]).unwrap();
        let s = q.split_block(1, 0.25);
        let c = canonicalize(&s, DEFAULT_MERGE_TOL);
        assert_eq!(c.podality(), 2);
        for p in [
            SubgraphPattern::triangle(),
            SubgraphPattern::cycle(4).unwrap(),
        ] {
            let d = subgraph_density(&q, &p).unwrap() - subgraph_density(&c, &p).unwrap();
            assert!(d.abs() < 1e-14);
        }
    }
}
