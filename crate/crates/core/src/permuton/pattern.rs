use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Longest plain pattern counted in a permutation.
pub const MAX_PLAIN_LEN: usize = 6;
/// Longest star pattern counted in a permutation.
pub const MAX_STAR_LEN: usize = 4;

/// A permutation `(π_1, ..., π_n)` of `1..=n`, stored one-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    values: Vec<usize>,
}

impl Permutation {
    pub fn new(values: Vec<usize>) -> Result<Self> {
        let n = values.len();
        let mut seen = vec![false; n];
        for &v in &values {
            if v == 0 || v > n {
                return Err(Error::InvalidPermutation(format!(
                    "value {v} outside 1..={n}"
                )));
            }
            if std::mem::replace(&mut seen[v - 1], true) {
                return Err(Error::InvalidPermutation(format!("value {v} repeated")));
            }
        }
        Ok(Permutation { values })
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            values: (1..=n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    /// Parse a one-line sequence separated by whitespace or commas.
    pub fn parse(text: &str) -> Result<Self> {
        let values = text
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<usize>().map_err(|_| {
                    Error::InvalidPermutation(format!("not a positive integer: {t:?}"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Permutation::new(values)
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Permutation::new(v)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.values
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.values.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join(" "))
    }
}

/// A pattern of length `k ≤ 9` written with the digits `1..=k` and `*`
/// wildcards, e.g. `132` or `*2*`. A wildcard stands for any symbol the
/// fixed digits do not use, so a star pattern is the union of its
/// completions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct StarPattern {
    symbols: Vec<Option<u8>>,
}

impl StarPattern {
    pub fn new(symbols: Vec<Option<u8>>) -> Result<Self> {
        let k = symbols.len();
        if k == 0 || k > 9 {
            return Err(Error::InvalidPattern(format!(
                "pattern length {k} outside 1..=9"
            )));
        }
        let mut seen = [false; 10];
        for s in symbols.iter().flatten() {
            let s = *s as usize;
            if s == 0 || s > k {
                return Err(Error::InvalidPattern(format!("symbol {s} outside 1..={k}")));
            }
            if std::mem::replace(&mut seen[s], true) {
                return Err(Error::InvalidPattern(format!("symbol {s} repeated")));
            }
        }
        Ok(StarPattern { symbols })
    }

    /// The plain pattern `12...k` reordered by `values` (one-based).
    pub fn plain(values: &[usize]) -> Result<Self> {
        let p = Permutation::new(values.to_vec())?;
        StarPattern::new(p.values.iter().map(|&v| Some(v as u8)).collect())
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn is_plain(&self) -> bool {
        self.symbols.iter().all(Option::is_some)
    }

    /// Every plain pattern matching this one, as zero-based value lists in
    /// lexicographic order.
    pub fn completions(&self) -> Vec<Vec<u8>> {
        let k = self.len();
        let used: Vec<bool> = (0..=k as u8)
            .map(|s| self.symbols.contains(&Some(s)))
            .collect();
        let free: Vec<u8> = (1..=k as u8).filter(|&s| !used[s as usize]).collect();
        let mut out = Vec::new();
        for order in permutations_of(&free) {
            let mut it = order.into_iter();
            out.push(
                self.symbols
                    .iter()
                    .map(|s| {
                        s.unwrap_or_else(|| it.next().expect("one free symbol per wildcard")) - 1
                    })
                    .collect(),
            );
        }
        out.sort();
        out
    }

    /// Codes (see [`pattern_code`]) of all completions, as a lookup table.
    pub(crate) fn code_table(&self) -> Vec<bool> {
        let k = self.len();
        let mut table = vec![false; k.pow(k as u32)];
        for c in self.completions() {
            table[pattern_code(&c)] = true;
        }
        table
    }
}

impl FromStr for StarPattern {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let symbols = s
            .trim()
            .chars()
            .map(|c| match c {
                '*' => Ok(None),
                '1'..='9' => Ok(Some(c as u8 - b'0')),
                _ => Err(Error::InvalidPattern(format!(
                    "unexpected character {c:?} in {s:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        StarPattern::new(symbols)
    }
}

impl TryFrom<String> for StarPattern {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<StarPattern> for String {
    fn from(p: StarPattern) -> Self {
        p.to_string()
    }
}

impl fmt::Display for StarPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.symbols {
            match s {
                Some(d) => write!(f, "{d}")?,
                None => f.write_str("*")?,
            }
        }
        Ok(())
    }
}

fn permutations_of(items: &[u8]) -> Vec<Vec<u8>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations_of(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// Base-`t` code of the relative order of `t` distinct values: digit `a` is
/// the rank of `values[a]`.
pub(crate) fn pattern_code<T: PartialOrd>(values: &[T]) -> usize {
    let t = values.len();
    let mut code = 0;
    for a in (0..t).rev() {
        let rank = values.iter().filter(|v| **v < values[a]).count();
        code = code * t + rank;
    }
    code
}

/// All increasing `t`-subsets of `0..n`, visited in lexicographic order.
pub(crate) fn for_each_subset(n: usize, t: usize, mut f: impl FnMut(&[usize])) {
    if t > n {
        return;
    }
    let mut idx: Vec<usize> = (0..t).collect();
    loop {
        f(&idx);
        let mut i = t;
        while i > 0 && idx[i - 1] == n - t + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..t {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

pub(crate) fn check_len_cap(tau: &StarPattern) -> Result<()> {
    let (cap, what) = if tau.is_plain() {
        (MAX_PLAIN_LEN, "plain pattern length")
    } else {
        (MAX_STAR_LEN, "star pattern length")
    };
    if tau.len() > cap {
        return Err(Error::CapExceeded {
            what,
            value: tau.len(),
            cap,
        });
    }
    Ok(())
}

/// Occurrences of `τ` (any completion, for star patterns) among the
/// `k`-subsets of positions of `π`.
pub(crate) fn occurrences(values: &[usize], t: usize, table: &[bool]) -> u128 {
    let mut count = 0u128;
    let mut buf = [0usize; 9];
    for_each_subset(values.len(), t, |idx| {
        for (b, &i) in buf.iter_mut().zip(idx) {
            *b = values[i];
        }
        if table[pattern_code(&buf[..t])] {
            count += 1;
        }
    });
    count
}

/// Fraction of the `C(n, k)` position subsets of `π` whose induced order is
/// `τ` or, for a star pattern, one of its completions.
pub fn perm_pattern_density(pi: &Permutation, tau: &StarPattern) -> Result<Ratio<u128>> {
    check_len_cap(tau)?;
    let (n, t) = (pi.len(), tau.len());
    if t > n {
        return Err(Error::Domain(format!(
            "pattern of length {t} in a permutation of length {n}"
        )));
    }
    let count = occurrences(&pi.values, t, &tau.code_table());
    Ok(Ratio::new(count, binomial(n, t)))
}
