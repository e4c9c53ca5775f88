use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::{fresh_id, moved, output_dataset, BlurringModel};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::mobility::{CategoryId, Dataset, TrajPoint, Trajectory};

/// Independent stream per record so output does not depend on scheduling.
pub(crate) fn record_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

/// Worst-case memorisation: an exact copy under fresh record ids.
#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityBlurrer;

impl BlurringModel for IdentityBlurrer {
    fn name(&self) -> &str {
        "identity"
    }

    fn fit(&mut self, _train: &Dataset) -> Result<()> {
        Ok(())
    }

    fn blur(&self, q: &Dataset, _seed: u64) -> Result<Dataset> {
        let trajs = q
            .trajectories()
            .iter()
            .enumerate()
            .map(|(i, t)| Trajectory {
                traj_id: fresh_id(self.name(), i),
                ..t.clone()
            })
            .collect();
        output_dataset(q, self.name(), trajs)
    }
}

/// Isotropic Gaussian displacement of every point plus optional category flips.
/// Timestamps are kept.
#[derive(Clone, Copy, Debug)]
pub struct GaussianJitterBlurrer {
    sigma_m: f64,
    flip_prob: f64,
}

impl GaussianJitterBlurrer {
    pub fn new(sigma_m: f64, flip_prob: f64) -> Result<Self> {
        if !(sigma_m >= 0.0 && sigma_m.is_finite()) || !(0.0..=1.0).contains(&flip_prob) {
            return Err(Error::InvalidParameter(format!(
                "jitter needs sigma_m >= 0 and flip_prob in [0, 1], got {sigma_m}, {flip_prob}"
            )));
        }
        Ok(Self { sigma_m, flip_prob })
    }

    pub fn sigma_m(&self) -> f64 {
        self.sigma_m
    }
}

impl BlurringModel for GaussianJitterBlurrer {
    fn name(&self) -> &str {
        "gaussian-jitter"
    }

    fn fit(&mut self, _train: &Dataset) -> Result<()> {
        Ok(())
    }

    fn blur(&self, q: &Dataset, seed: u64) -> Result<Dataset> {
        let crs = q.meta().crs;
        let n_labels = q.vocabulary().len();
        let noise = Normal::new(0.0, self.sigma_m).expect("validated sigma");
        let trajs = q
            .trajectories()
            .par_iter()
            .enumerate()
            .map(|(i, t)| {
                let mut rng = record_rng(seed, i);
                let points = t
                    .points
                    .iter()
                    .map(|p| {
                        let (dx, dy) = if self.sigma_m > 0.0 {
                            (noise.sample(&mut rng), noise.sample(&mut rng))
                        } else {
                            (0.0, 0.0)
                        };
                        let mut category = p.category;
                        if let Some(c) = p.category {
                            if n_labels > 1
                                && self.flip_prob > 0.0
                                && rng.random_bool(self.flip_prob)
                            {
                                // uniform over the other labels
                                let mut k = rng.random_range(0..n_labels - 1) as u16;
                                if k >= c.0 {
                                    k += 1;
                                }
                                category = Some(CategoryId(k));
                            }
                        }
                        TrajPoint {
                            point: moved(&crs, p.point.x + dx, p.point.y + dy),
                            timestamp: p.timestamp,
                            category,
                        }
                    })
                    .collect();
                Trajectory {
                    traj_id: fresh_id(self.name(), i),
                    user_id: t.user_id.clone(),
                    points,
                }
            })
            .collect();
        output_dataset(q, self.name(), trajs)
    }
}

/// Replaces every point by the centroid of its grid cell.
#[derive(Clone, Copy, Debug)]
pub struct GridSnapBlurrer {
    grid: GridSpec,
}

impl GridSnapBlurrer {
    pub fn new(grid: GridSpec) -> Self {
        Self { grid }
    }
}

impl BlurringModel for GridSnapBlurrer {
    fn name(&self) -> &str {
        "grid-snap"
    }

    fn fit(&mut self, _train: &Dataset) -> Result<()> {
        Ok(())
    }

    fn blur(&self, q: &Dataset, _seed: u64) -> Result<Dataset> {
        let crs = q.meta().crs;
        let trajs = q
            .trajectories()
            .iter()
            .enumerate()
            .map(|(i, t)| Trajectory {
                traj_id: fresh_id(self.name(), i),
                user_id: t.user_id.clone(),
                points: t
                    .points
                    .iter()
                    .map(|p| {
                        let (x, y) = self.grid.centroid(self.grid.cell_of(p.point.x, p.point.y));
                        TrajPoint {
                            point: moved(&crs, x, y),
                            ..p.clone()
                        }
                    })
                    .collect(),
            })
            .collect();
        output_dataset(q, self.name(), trajs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mobility::{CategoryVocabulary, DatasetMeta};

    fn fixture() -> Dataset {
        let vocab = CategoryVocabulary::new(["a", "b", "c"]).unwrap();
        let trajs = (0..20)
            .map(|i| {
                let pts = (0..5)
                    .map(|k| {
                        TrajPoint::new(
                            i as f64 * 37.0 + k as f64 * 11.0,
                            k as f64 * 13.0,
                            k as f64 * 60.0,
                        )
                        .with_category(CategoryId((k % 3) as u16))
                    })
                    .collect();
                Trajectory::new(format!("t{i}"), format!("u{}", i % 4), pts).unwrap()
            })
            .collect();
        Dataset::new(trajs, DatasetMeta::projected("fx").with_vocabulary(vocab)).unwrap()
    }

    #[test]
    fn identity_copies_under_fresh_ids() {
        let q = fixture();
        let s = IdentityBlurrer.blur(&q, 1).unwrap();
        assert_eq!(s.len(), q.len());
        for (a, b) in q.trajectories().iter().zip(s.trajectories()) {
            assert_ne!(a.traj_id, b.traj_id);
            assert_eq!(a.points, b.points);
            assert_eq!(a.user_id, b.user_id);
        }
        assert_eq!(s, IdentityBlurrer.blur(&q, 99).unwrap());
    }

    #[test]
    fn zero_jitter_is_identity_and_seed_reproducible() {
        let q = fixture();
        let zero = GaussianJitterBlurrer::new(0.0, 0.0)
            .unwrap()
            .blur(&q, 3)
            .unwrap();
        for (a, b) in q.trajectories().iter().zip(zero.trajectories()) {
            assert_eq!(a.points, b.points);
        }
        let j = GaussianJitterBlurrer::new(25.0, 0.3).unwrap();
        assert_eq!(j.blur(&q, 5).unwrap(), j.blur(&q, 5).unwrap());
        assert_ne!(j.blur(&q, 5).unwrap(), j.blur(&q, 6).unwrap());
    }

    #[test]
    fn jitter_keeps_timestamps_and_flips_to_other_labels() {
        let q = fixture();
        let s = GaussianJitterBlurrer::new(10.0, 1.0)
            .unwrap()
            .blur(&q, 8)
            .unwrap();
        for (a, b) in q.trajectories().iter().zip(s.trajectories()) {
            for (p, r) in a.points.iter().zip(&b.points) {
                assert_eq!(p.timestamp, r.timestamp);
                assert_ne!(p.category, r.category);
                assert!(r.category.unwrap().0 < 3);
            }
        }
    }

    #[test]
    fn snap_moves_at_most_half_diagonal() {
        let q = fixture();
        let g = GridSpec::new(50.0).unwrap();
        let s = GridSnapBlurrer::new(g).blur(&q, 0).unwrap();
        for (a, b) in q.trajectories().iter().zip(s.trajectories()) {
            for (p, r) in a.points.iter().zip(&b.points) {
                assert!(p.point.distance(&r.point) <= 50.0 * 2f64.sqrt() / 2.0 + 1e-9);
                let (cx, cy) = g.centroid(g.cell_of(r.point.x, r.point.y));
                assert_eq!((cx, cy), (r.point.x, r.point.y));
            }
        }
        // snapping is idempotent
        let again = GridSnapBlurrer::new(g).blur(&s, 0).unwrap();
        for (a, b) in s.trajectories().iter().zip(again.trajectories()) {
            assert_eq!(a.points, b.points);
        }
    }
}
