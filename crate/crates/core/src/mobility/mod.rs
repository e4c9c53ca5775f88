//! Trajectories, datasets and the operations that prepare them for evaluation.

mod io;
mod profile;
mod projection;
mod split;

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{ingest_csv, read_metadata, write_csv, write_metadata, CsvSchema, IngestOptions};
pub(crate) use profile::percentile_sorted;
pub use profile::{profile_dataset, DatasetProfile};
pub use projection::{AzimuthalEquidistant, Crs};
pub use split::{mask_trajectory, masked_len, split_dataset, SplitSpec};

/// Index into a dataset's [`CategoryVocabulary`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CategoryId(pub u16);

/// A position in a projected metric CRS (meters), optionally remembering the
/// geographic coordinates it was projected from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub x: f64,
    pub y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lat_lon: Option<(f64, f64)>,
}

impl GeoPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self {
            x,
            y,
            lat_lon: None,
        }
    }

    pub fn xy(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn distance(&self, other: &GeoPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajPoint {
    pub point: GeoPoint,
    /// Seconds since the Unix epoch.
    pub timestamp: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<CategoryId>,
}

impl TrajPoint {
    pub fn new(x: f64, y: f64, timestamp: f64) -> Self {
        Self {
            point: GeoPoint::new(x, y),
            timestamp,
            category: None,
        }
    }

    pub fn with_category(mut self, category: CategoryId) -> Self {
        self.category = Some(category);
        self
    }
}

/// A chronologically ordered sequence of visits by one user.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub traj_id: String,
    pub user_id: String,
    pub points: Vec<TrajPoint>,
}

impl Trajectory {
    /// Builds a trajectory, checking that it is non-empty, finite and time-ordered.
    pub fn new(
        traj_id: impl Into<String>,
        user_id: impl Into<String>,
        points: Vec<TrajPoint>,
    ) -> Result<Self> {
        let traj = Self {
            traj_id: traj_id.into(),
            user_id: user_id.into(),
            points,
        };
        traj.validate()?;
        Ok(traj)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::InvalidDataset(format!(
                "trajectory `{}` has no points",
                self.traj_id
            )));
        }
        for p in &self.points {
            if !(p.point.x.is_finite() && p.point.y.is_finite() && p.timestamp.is_finite()) {
                return Err(Error::InvalidDataset(format!(
                    "trajectory `{}` has a non-finite coordinate or timestamp",
                    self.traj_id
                )));
            }
        }
        if self
            .points
            .windows(2)
            .any(|w| w[1].timestamp < w[0].timestamp)
        {
            return Err(Error::InvalidDataset(format!(
                "trajectory `{}` has decreasing timestamps",
                self.traj_id
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn xy(&self) -> Vec<[f64; 2]> {
        self.points.iter().map(|p| p.point.xy()).collect()
    }

    /// Sum of consecutive Euclidean distances, in meters.
    pub fn traveled_distance(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| w[0].point.distance(&w[1].point))
            .sum()
    }

    pub fn centroid(&self) -> [f64; 2] {
        let n = self.points.len() as f64;
        let (sx, sy) = self
            .points
            .iter()
            .fold((0.0, 0.0), |(sx, sy), p| (sx + p.point.x, sy + p.point.y));
        [sx / n, sy / n]
    }
}

/// Ordered list of category labels. Labels are unique.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryVocabulary {
    labels: Vec<String>,
}

impl CategoryVocabulary {
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate category label `{l}`"
                )));
            }
        }
        if labels.len() > u16::MAX as usize {
            return Err(Error::InvalidParameter("too many categories".into()));
        }
        Ok(Self { labels })
    }

    /// Nine OpenStreetMap-derived activity categories plus an on-road label for
    /// high-speed segments.
    pub fn osm_activity() -> Self {
        Self::new([
            "administrative",
            "commercial",
            "education",
            "healthcare",
            "leisure",
            "natural",
            "residential",
            "transportation",
            "other",
            "on-road",
        ])
        .expect("static labels are unique")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, id: CategoryId) -> Option<&str> {
        self.labels.get(id.0 as usize).map(String::as_str)
    }

    pub fn id(&self, label: &str) -> Option<CategoryId> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| CategoryId(i as u16))
    }

    pub(crate) fn push(&mut self, label: &str) -> CategoryId {
        if let Some(id) = self.id(label) {
            return id;
        }
        self.labels.push(label.to_string());
        CategoryId((self.labels.len() - 1) as u16)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub name: String,
    pub crs: Crs,
    pub vocabulary: CategoryVocabulary,
}

impl DatasetMeta {
    pub fn projected(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            crs: Crs::Projected,
            vocabulary: CategoryVocabulary::default(),
        }
    }

    pub fn with_vocabulary(mut self, vocabulary: CategoryVocabulary) -> Self {
        self.vocabulary = vocabulary;
        self
    }
}

/// An immutable collection of trajectories together with its user set and metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    trajectories: Vec<Trajectory>,
    users: BTreeSet<String>,
    meta: DatasetMeta,
}

impl Dataset {
    pub fn new(trajectories: Vec<Trajectory>, meta: DatasetMeta) -> Result<Self> {
        let mut ids = HashSet::with_capacity(trajectories.len());
        for t in &trajectories {
            t.validate()?;
            if !ids.insert(t.traj_id.as_str()) {
                return Err(Error::InvalidDataset(format!(
                    "duplicate trajectory id `{}`",
                    t.traj_id
                )));
            }
            for p in &t.points {
                if let Some(c) = p.category {
                    if meta.vocabulary.label(c).is_none() {
                        return Err(Error::InvalidDataset(format!(
                            "trajectory `{}` uses category {} outside the vocabulary",
                            t.traj_id, c.0
                        )));
                    }
                }
            }
        }
        let users = trajectories.iter().map(|t| t.user_id.clone()).collect();
        Ok(Self {
            trajectories,
            users,
            meta,
        })
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn users(&self) -> &BTreeSet<String> {
        &self.users
    }

    pub fn meta(&self) -> &DatasetMeta {
        &self.meta
    }

    pub fn vocabulary(&self) -> &CategoryVocabulary {
        &self.meta.vocabulary
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn n_points(&self) -> usize {
        self.trajectories.iter().map(Trajectory::len).sum()
    }

    /// True when at least one point carries a category.
    pub fn has_categories(&self) -> bool {
        self.trajectories
            .iter()
            .flat_map(|t| &t.points)
            .any(|p| p.category.is_some())
    }

    /// A dataset with the same metadata holding a subset (or transformation) of records.
    pub fn derive(&self, name: impl Into<String>, trajectories: Vec<Trajectory>) -> Result<Self> {
        let mut meta = self.meta.clone();
        meta.name = name.into();
        Dataset::new(trajectories, meta)
    }

    pub fn into_trajectories(self) -> Vec<Trajectory> {
        self.trajectories
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj(id: &str, user: &str, n: usize) -> Trajectory {
        let points = (0..n)
            .map(|i| TrajPoint::new(i as f64, 0.0, i as f64 * 60.0))
            .collect();
        Trajectory::new(id, user, points).unwrap()
    }

    #[test]
    fn users_are_exact_set_of_trajectory_owners() {
        let d = Dataset::new(
            vec![traj("a", "u1", 2), traj("b", "u2", 3), traj("c", "u1", 1)],
            DatasetMeta::projected("t"),
        )
        .unwrap();
        assert_eq!(d.users().len(), 2);
        assert!(d.users().contains("u1") && d.users().contains("u2"));
    }

    #[test]
    fn duplicate_traj_ids_are_rejected() {
        let err = Dataset::new(
            vec![traj("a", "u1", 2), traj("a", "u2", 2)],
            DatasetMeta::projected("t"),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidDataset(_)));
    }

    #[test]
    fn empty_and_unordered_trajectories_are_rejected() {
        assert!(Trajectory::new("a", "u", vec![]).is_err());
        let pts = vec![
            TrajPoint::new(0.0, 0.0, 10.0),
            TrajPoint::new(1.0, 0.0, 5.0),
        ];
        assert!(Trajectory::new("a", "u", pts).is_err());
        // duplicates allowed
        let pts = vec![
            TrajPoint::new(0.0, 0.0, 10.0),
            TrajPoint::new(1.0, 0.0, 10.0),
        ];
        assert!(Trajectory::new("a", "u", pts).is_ok());
    }

    #[test]
    fn vocabulary_rejects_duplicate_labels() {
        assert!(CategoryVocabulary::new(["a", "b", "a"]).is_err());
        let v = CategoryVocabulary::osm_activity();
        assert_eq!(v.len(), 10);
        assert_eq!(v.label(v.id("leisure").unwrap()), Some("leisure"));
    }
}
