use std::collections::BTreeMap;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, Trajectory};
use crate::error::{Error, Result};

/// Trajectory-level partition request.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub fractions: Vec<f64>,
    /// Keep every user in the first part: one trajectory of each multi-trajectory
    /// user, and every trajectory of single-trajectory users, are reserved for it.
    #[serde(default)]
    pub cover_users: bool,
}

impl SplitSpec {
    pub fn new(fractions: impl Into<Vec<f64>>) -> Self {
        Self {
            fractions: fractions.into(),
            cover_users: false,
        }
    }

    pub fn covering_users(mut self) -> Self {
        self.cover_users = true;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.fractions.is_empty() {
            return Err(Error::InvalidParameter(
                "split needs at least one part".into(),
            ));
        }
        if self.fractions.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
            return Err(Error::InvalidParameter(
                "split fractions must be positive".into(),
            ));
        }
        let total: f64 = self.fractions.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "split fractions sum to {total}, expected 1"
            )));
        }
        Ok(())
    }

    /// Part sizes by the largest-remainder rule; every part gets at least one
    /// trajectory whenever `n` allows it.
    pub fn part_sizes(&self, n: usize) -> Result<Vec<usize>> {
        self.validate()?;
        let exact: Vec<f64> = self.fractions.iter().map(|f| f * n as f64).collect();
        let mut sizes: Vec<usize> = exact.iter().map(|e| (e + 1e-9).floor() as usize).collect();
        let mut remaining = n.saturating_sub(sizes.iter().sum());
        let mut order: Vec<usize> = (0..sizes.len()).collect();
        order.sort_by(|&a, &b| {
            let ra = exact[a] - sizes[a] as f64;
            let rb = exact[b] - sizes[b] as f64;
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for &i in order.iter().cycle() {
            if remaining == 0 {
                break;
            }
            sizes[i] += 1;
            remaining -= 1;
        }
        if n >= sizes.len() {
            while let Some(empty) = sizes.iter().position(|&s| s == 0) {
                let largest = (0..sizes.len())
                    .max_by_key(|&i| (sizes[i], usize::MAX - i))
                    .unwrap();
                sizes[largest] -= 1;
                sizes[empty] += 1;
            }
        }
        Ok(sizes)
    }
}

/// Randomly partitions the trajectories of `d` according to `spec`.
///
/// Parts keep the source ordering of their trajectories and are named
/// `<name>-part<i>`.
pub fn split_dataset(d: &Dataset, spec: &SplitSpec, seed: u64) -> Result<Vec<Dataset>> {
    let n = d.len();
    let sizes = spec.part_sizes(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut reserved = Vec::new();
    let mut pool: Vec<usize> = Vec::with_capacity(n);
    if spec.cover_users {
        let mut by_user: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, t) in d.trajectories().iter().enumerate() {
            by_user.entry(t.user_id.as_str()).or_default().push(i);
        }
        for idx in by_user.values() {
            if idx.len() == 1 {
                reserved.push(idx[0]);
            } else {
                let keep = idx[rand::Rng::random_range(&mut rng, 0..idx.len())];
                reserved.push(keep);
                pool.extend(idx.iter().copied().filter(|&i| i != keep));
            }
        }
        if reserved.len() > sizes[0] {
            return Err(Error::InfeasibleSplit(format!(
                "user coverage needs {} trajectories in the first part but its size is {}",
                reserved.len(),
                sizes[0]
            )));
        }
    } else {
        pool.extend(0..n);
    }
    pool.shuffle(&mut rng);

    let mut parts: Vec<Vec<usize>> = vec![reserved; 1];
    parts.resize(sizes.len(), Vec::new());
    let mut it = pool.into_iter();
    for (part, &size) in parts.iter_mut().zip(&sizes) {
        while part.len() < size {
            part.push(it.next().expect("sizes sum to n"));
        }
    }

    parts
        .into_iter()
        .enumerate()
        .map(|(p, mut idx)| {
            idx.sort_unstable();
            let trajs = idx
                .into_iter()
                .map(|i| d.trajectories()[i].clone())
                .collect();
            d.derive(format!("{}-part{p}", d.meta().name), trajs)
        })
        .collect()
}

/// Keeps `ceil(keep_fraction * |t|)` visits drawn uniformly without replacement,
/// in their original order.
pub fn mask_trajectory(t: &Trajectory, keep_fraction: f64, seed: u64) -> Result<Trajectory> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "keep fraction {keep_fraction} outside (0, 1]"
        )));
    }
    let n = t.len();
    let k = masked_len(n, keep_fraction);
    if k == n {
        return Ok(t.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = index::sample(&mut rng, n, k).into_vec();
    idx.sort_unstable();
    Ok(Trajectory {
        traj_id: t.traj_id.clone(),
        user_id: t.user_id.clone(),
        points: idx.into_iter().map(|i| t.points[i].clone()).collect(),
    })
}

/// Number of visits kept when masking a trajectory of length `n`.
pub fn masked_len(n: usize, keep_fraction: f64) -> usize {
    ((keep_fraction * n as f64 - 1e-9).ceil() as usize).clamp(1, n.max(1))
}
