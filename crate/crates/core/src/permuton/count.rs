use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphon::in_window;
use crate::io::extended_real;
use crate::par::{map_indexed, Parallelism};

use super::pattern::{binomial, check_len_cap, occurrences, StarPattern};

/// Largest `n` for exhaustive counting over `S_n`.
pub const MAX_COUNT_N: usize = 9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermWindow {
    pub pattern: StarPattern,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermCountReport {
    pub n: usize,
    pub delta: f64,
    pub windows: Vec<PermWindow>,
    /// `|Λ_n|`: permutations whose pattern densities all lie within `δ`
    /// of the targets (strictly).
    pub count: u64,
    /// `n!`
    pub total: u64,
    /// `(1/n) ln(|Λ_n| / n!)`; `-inf` when nothing qualifies.
    #[serde(with = "extended_real")]
    pub log_normalized: f64,
}

/// Advance to the next permutation in lexicographic order.
fn next_permutation(a: &mut [usize]) -> bool {
    let n = a.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && a[i - 1] >= a[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while a[j] <= a[i - 1] {
        j -= 1;
    }
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

/// Count permutations of `1..=n` (`n ≤ 9`) whose densities of every
/// pattern lie in the open window `(α − δ, α + δ)`. Work is split by first
/// symbol and summed in order.
pub fn count_constrained_perms(
    n: usize,
    constraints: &[(StarPattern, f64)],
    delta: f64,
    mode: Parallelism,
) -> Result<PermCountReport> {
    if n == 0 || n > MAX_COUNT_N {
        return Err(Error::CapExceeded {
            what: "permutation length for counting",
            value: n,
            cap: MAX_COUNT_N,
        });
    }
    if delta.is_nan() || delta <= 0.0 {
        return Err(Error::Domain(format!(
            "window half-width must be positive, got {delta}"
        )));
    }
    for (tau, _) in constraints {
        check_len_cap(tau)?;
        if tau.len() > n {
            return Err(Error::Domain(format!("pattern {tau} longer than n = {n}")));
        }
    }
    let tables: Vec<(usize, Vec<bool>, f64, f64)> = constraints
        .iter()
        .map(|(tau, a)| {
            (
                tau.len(),
                tau.code_table(),
                binomial(n, tau.len()) as f64,
                *a,
            )
        })
        .collect();
    let per_first = map_indexed(n, mode, |first| {
        let mut rest: Vec<usize> = (1..=n).filter(|&v| v != first + 1).collect();
        let mut perm = vec![0; n];
        perm[0] = first + 1;
        let mut count = 0u64;
        loop {
            perm[1..].copy_from_slice(&rest);
            let ok = tables.iter().all(|(t, table, total, a)| {
                let d = occurrences(&perm, *t, table) as f64 / total;
                in_window(d, *a, delta)
            });
            if ok {
                count += 1;
            }
            if !next_permutation(&mut rest) {
                break;
            }
        }
        count
    });
    let count: u64 = per_first.iter().sum();
    let total: u64 = (1..=n as u64).product();
    let log_normalized = if count == 0 {
        f64::NEG_INFINITY
    } else {
        ((count as f64).ln() - (total as f64).ln()) / n as f64
    };
    Ok(PermCountReport {
        n,
        delta,
        windows: constraints
            .iter()
            .map(|(pattern, target)| PermWindow {
                pattern: pattern.clone(),
                target: *target,
            })
            .collect(),
        count,
        total,
        log_normalized,
    })
}
