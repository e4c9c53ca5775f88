use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A ranking over a set of items. Rank 1 is the top; tied items share a rank.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankVector<T: Ord> {
    ranks: BTreeMap<T, u64>,
}

impl<T: Ord + Clone> RankVector<T> {
    pub fn new(items: impl IntoIterator<Item = (T, u64)>) -> Result<Self> {
        let mut ranks = BTreeMap::new();
        for (item, r) in items {
            if ranks.insert(item, r).is_some() {
                return Err(Error::InvalidParameter(
                    "ranked items must be unique".into(),
                ));
            }
        }
        let n = ranks.len() as u64;
        if ranks.values().any(|&r| r == 0 || r > n) {
            return Err(Error::InvalidParameter(format!(
                "ranks must lie in [1, {n}]"
            )));
        }
        Ok(Self { ranks })
    }

    /// Ranks items by decreasing score; equal scores share the lowest rank of their
    /// group (competition ranking).
    pub fn from_scores(scores: impl IntoIterator<Item = (T, f64)>) -> Self {
        let mut entries: Vec<(T, f64)> = scores.into_iter().collect();
        entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let mut ranks = BTreeMap::new();
        let mut current = 0;
        let mut last: Option<f64> = None;
        for (k, (item, s)) in entries.into_iter().enumerate() {
            if last != Some(s) {
                current = k as u64 + 1;
                last = Some(s);
            }
            ranks.insert(item, current);
        }
        Self { ranks }
    }

    /// Most frequent item first.
    pub fn from_frequencies(counts: &BTreeMap<T, u64>) -> Self {
        Self::from_scores(counts.iter().map(|(k, &c)| (k.clone(), c as f64)))
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn rank(&self, item: &T) -> Option<u64> {
        self.ranks.get(item).copied()
    }

    pub fn items(&self) -> impl Iterator<Item = &T> {
        self.ranks.keys()
    }

    fn bottom(&self) -> u64 {
        self.ranks.values().copied().max().unwrap_or(0) + 1
    }
}

/// Tie-corrected Kendall rank correlation between two rankings.
///
/// Both rankings are extended to the union of their items; items a ranking does
/// not contain share one tied rank below all of its ranked items. Runs in
/// O(n log n).
pub fn kendall_tau_b<T: Ord + Clone>(x: &RankVector<T>, y: &RankVector<T>) -> Result<f64> {
    let union: BTreeSet<&T> = x.items().chain(y.items()).collect();
    if union.len() < 2 {
        return Err(Error::Undefined(
            "tau-b needs at least two ranked items".into(),
        ));
    }
    let (bx, by) = (x.bottom(), y.bottom());
    let mut pairs: Vec<(u64, u64)> = union
        .iter()
        .map(|item| (x.rank(item).unwrap_or(bx), y.rank(item).unwrap_or(by)))
        .collect();
    tau_b_from_pairs(&mut pairs)
}

/// Knight's algorithm on paired ranks.
pub(crate) fn tau_b_from_pairs(pairs: &mut [(u64, u64)]) -> Result<f64> {
    let n = pairs.len() as i128;
    let n0 = n * (n - 1) / 2;
    pairs.sort_unstable();

    let tie_pairs = |len: i128| len * (len - 1) / 2;
    let (mut tx, mut joint) = (0i128, 0i128);
    let (mut run_x, mut run_xy) = (1i128, 1i128);
    for k in 1..pairs.len() {
        if pairs[k].0 == pairs[k - 1].0 {
            run_x += 1;
            if pairs[k].1 == pairs[k - 1].1 {
                run_xy += 1;
            } else {
                joint += tie_pairs(run_xy);
                run_xy = 1;
            }
        } else {
            tx += tie_pairs(run_x);
            joint += tie_pairs(run_xy);
            run_x = 1;
            run_xy = 1;
        }
    }
    tx += tie_pairs(run_x);
    joint += tie_pairs(run_xy);

    let mut ys: Vec<u64> = pairs.iter().map(|p| p.1).collect();
    let mut buf = vec![0u64; ys.len()];
    let swaps = merge_count(&mut ys, &mut buf) as i128;

    let mut ty = 0i128;
    let mut run = 1i128;
    for k in 1..ys.len() {
        if ys[k] == ys[k - 1] {
            run += 1;
        } else {
            ty += tie_pairs(run);
            run = 1;
        }
    }
    ty += tie_pairs(run);

    let numerator = n0 - tx - ty + joint - 2 * swaps;
    let (dx, dy) = (n0 - tx, n0 - ty);
    if dx == 0 || dy == 0 {
        return Err(Error::Undefined(
            "tau-b is undefined when every pair is tied in one ranking".into(),
        ));
    }
    Ok((numerator as f64 / ((dx as f64) * (dy as f64)).sqrt()).clamp(-1.0, 1.0))
}

/// Stable merge sort returning the number of inversions (strictly greater pairs).
fn merge_count(v: &mut [u64], buf: &mut [u64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = {
        let (l, r) = v.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        merge_count(l, bl) + merge_count(r, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[i] <= v[j] {
            buf[k] = v[i];
            i += 1;
        } else {
            buf[k] = v[j];
            count += (mid - i) as u64;
            j += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rv(ranks: &[(u32, u64)]) -> RankVector<u32> {
        RankVector::new(ranks.iter().copied()).unwrap()
    }

    #[test]
    fn identical_and_reversed() {
        let a = rv(&[(1, 1), (2, 2), (3, 3), (4, 4)]);
        let b = rv(&[(1, 4), (2, 3), (3, 2), (4, 1)]);
        assert_eq!(kendall_tau_b(&a, &a).unwrap(), 1.0);
        assert_eq!(kendall_tau_b(&a, &b).unwrap(), -1.0);
    }

    #[test]
    fn all_tied_is_undefined() {
        let a = rv(&[(1, 1), (2, 1), (3, 1)]);
        let b = rv(&[(1, 1), (2, 2), (3, 3)]);
        assert!(kendall_tau_b(&a, &b).is_err());
        assert!(kendall_tau_b(&rv(&[(1, 1)]), &rv(&[(1, 1)])).is_err());
    }

    #[test]
    fn known_tied_value() {
        // x = (1,2,2,3), y = (1,3,2,3): nc=4, nd=0, tx=1, ty=1 -> 4/5
        let a = rv(&[(1, 1), (2, 2), (3, 2), (4, 4)]);
        let b = rv(&[(1, 1), (2, 3), (3, 2), (4, 3)]);
        assert!((kendall_tau_b(&a, &b).unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn frequencies_rank_most_frequent_first() {
        let counts = BTreeMap::from([("a", 5u64), ("b", 9), ("c", 5)]);
        let r = RankVector::from_frequencies(&counts);
        assert_eq!(r.rank(&"b"), Some(1));
        assert_eq!(r.rank(&"a"), Some(2));
        assert_eq!(r.rank(&"c"), Some(2));
    }

    #[test]
    fn missing_items_tie_at_the_bottom() {
        let a = rv(&[(1, 1), (2, 2)]);
        let b = rv(&[(1, 1), (3, 2)]);
        // union {1,2,3}: x = (1,2,3), y = (1,3,2): nc=2 nd=1
        let t = kendall_tau_b(&a, &b).unwrap();
        assert!((t - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn merge_count_counts_inversions() {
        let mut v = vec![3, 1, 2, 2, 0];
        let mut buf = vec![0; 5];
        assert_eq!(merge_count(&mut v, &mut buf), 7);
        assert_eq!(v, vec![0, 1, 2, 2, 3]);
    }
}
