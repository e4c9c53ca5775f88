use std::collections::BTreeMap;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::blur::record_rng;
use super::{fresh_id, moved, BlurringModel, SyntheticModel};
use crate::error::{Error, Result};
use crate::grid::{CellId, GridSpec};
use crate::mobility::{CategoryId, Dataset, DatasetMeta, TrajPoint, Trajectory};

type Weighted<T> = Vec<(T, f64)>;

/// Fitted state of the resampler. Plain vectors of (item, weight) pairs so it
/// serialises to JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalModel {
    pub grid: GridSpec,
    pub meta: DatasetMeta,
    pub lengths: Weighted<usize>,
    /// Cell distribution at each sequence position.
    pub step_marginals: Vec<Weighted<CellId>>,
    pub pooled_marginal: Weighted<CellId>,
    pub kernel: Vec<(CellId, Weighted<CellId>)>,
    /// Observed labels per cell; `None` weight covers uncategorised points.
    pub categories: Vec<(CellId, Weighted<Option<CategoryId>>)>,
    pub start_times: Vec<f64>,
    pub gaps_s: Vec<f64>,
}

fn weighted<T: Ord + Copy>(counts: BTreeMap<T, f64>) -> Weighted<T> {
    counts.into_iter().collect()
}

impl MarginalModel {
    pub fn fit(train: &Dataset, grid: GridSpec) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Empty("resampler needs training trajectories".into()));
        }
        let mut lengths = BTreeMap::new();
        let mut steps: Vec<BTreeMap<CellId, f64>> = Vec::new();
        let mut pooled = BTreeMap::new();
        let mut kernel: BTreeMap<CellId, BTreeMap<CellId, f64>> = BTreeMap::new();
        let mut cats: BTreeMap<CellId, BTreeMap<Option<CategoryId>, f64>> = BTreeMap::new();
        let mut start_times = Vec::new();
        let mut gaps_s = Vec::new();
        for t in train.trajectories() {
            *lengths.entry(t.len()).or_insert(0.0) += 1.0;
            start_times.push(t.points[0].timestamp);
            let cells: Vec<CellId> = t
                .points
                .iter()
                .map(|p| grid.cell_of(p.point.x, p.point.y))
                .collect();
            for (n, (&c, p)) in cells.iter().zip(&t.points).enumerate() {
                if steps.len() <= n {
                    steps.push(BTreeMap::new());
                }
                *steps[n].entry(c).or_insert(0.0) += 1.0;
                *pooled.entry(c).or_insert(0.0) += 1.0;
                *cats.entry(c).or_default().entry(p.category).or_insert(0.0) += 1.0;
            }
            for w in cells.windows(2) {
                *kernel.entry(w[0]).or_default().entry(w[1]).or_insert(0.0) += 1.0;
            }
            gaps_s.extend(t.points.windows(2).map(|w| w[1].timestamp - w[0].timestamp));
        }
        Ok(Self {
            grid,
            meta: train.meta().clone(),
            lengths: weighted(lengths),
            step_marginals: steps.into_iter().map(weighted).collect(),
            pooled_marginal: weighted(pooled),
            kernel: kernel.into_iter().map(|(k, v)| (k, weighted(v))).collect(),
            categories: cats.into_iter().map(|(k, v)| (k, weighted(v))).collect(),
            start_times,
            gaps_s,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialises")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }

    /// Cells the model can emit.
    pub fn support(&self) -> impl Iterator<Item = CellId> + '_ {
        self.pooled_marginal.iter().map(|&(c, _)| c)
    }
}

fn draw<T: Copy, R: Rng>(items: &Weighted<T>, rng: &mut R) -> T {
    let idx = WeightedIndex::new(items.iter().map(|&(_, w)| w)).expect("positive weights");
    items[idx.sample(rng)].0
}

/// Ancestral sampler over per-position cell marginals and a pooled first-order
/// kernel. Sinks restart from the marginal of the current position.
#[derive(Clone, Debug)]
pub struct MarginalResampler {
    grid: GridSpec,
    model: Option<MarginalModel>,
}

impl MarginalResampler {
    pub fn new(grid: GridSpec) -> Self {
        Self { grid, model: None }
    }

    pub fn from_model(model: MarginalModel) -> Self {
        Self {
            grid: model.grid,
            model: Some(model),
        }
    }

    pub fn model(&self) -> Option<&MarginalModel> {
        self.model.as_ref()
    }

    fn fitted(&self) -> Result<&MarginalModel> {
        self.model
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("resampler used before fit".into()))
    }

    fn sample_with_users(&self, users: &[String], seed: u64) -> Result<Dataset> {
        let m = self.fitted()?;
        let tables = Tables {
            m,
            kernel: m.kernel.iter().map(|(c, r)| (*c, r)).collect(),
            cats: m.categories.iter().map(|(c, r)| (*c, r)).collect(),
        };
        let trajs = users
            .par_iter()
            .enumerate()
            .map(|(i, u)| {
                let mut rng = record_rng(seed, i);
                tables.sample_one(fresh_id("marginal", i), u.clone(), &mut rng)
            })
            .collect();
        let mut meta = m.meta.clone();
        meta.name = format!("{}-marginal", m.meta.name);
        Dataset::new(trajs, meta)
    }
}

/// Lookup views over a fitted model.
struct Tables<'a> {
    m: &'a MarginalModel,
    kernel: BTreeMap<CellId, &'a Weighted<CellId>>,
    cats: BTreeMap<CellId, &'a Weighted<Option<CategoryId>>>,
}

impl Tables<'_> {
    fn sample_one<R: Rng>(&self, id: String, user: String, rng: &mut R) -> Trajectory {
        let m = self.m;
        let len = draw(&m.lengths, rng);
        let mut t = m.start_times[rng.random_range(0..m.start_times.len())];
        let edge = m.grid.cell_edge_m;
        let mut points = Vec::with_capacity(len);
        let mut cell = draw(&m.step_marginals[0], rng);
        for n in 0..len {
            if n > 0 {
                cell = match self.kernel.get(&cell) {
                    Some(row) => draw(row, rng),
                    None => draw(m.step_marginals.get(n).unwrap_or(&m.pooled_marginal), rng),
                };
                if !m.gaps_s.is_empty() {
                    t += m.gaps_s[rng.random_range(0..m.gaps_s.len())];
                }
            }
            let (cx, cy) = m.grid.centroid(cell);
            let x = cx + (rng.random::<f64>() - 0.5) * edge;
            let y = cy + (rng.random::<f64>() - 0.5) * edge;
            let category = self.cats.get(&cell).and_then(|w| draw(w, rng));
            points.push(TrajPoint {
                point: moved(&m.meta.crs, x, y),
                timestamp: t,
                category,
            });
        }
        Trajectory {
            traj_id: id,
            user_id: user,
            points,
        }
    }
}

impl SyntheticModel for MarginalResampler {
    fn fit(&mut self, train: &Dataset) -> Result<()> {
        self.model = Some(MarginalModel::fit(train, self.grid)?);
        Ok(())
    }

    /// Users are labelled `syn-<i>`: a synthetic model has no user correspondence.
    fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        let users: Vec<String> = (0..n).map(|i| format!("syn-{i}")).collect();
        self.sample_with_users(&users, seed)
    }
}

/// Adapter for attack pipelines expecting a blurrer: only the record count and the
/// user labels of `q` are read, positions never are.
impl BlurringModel for MarginalResampler {
    fn name(&self) -> &str {
        "marginal-resampler"
    }

    fn fit(&mut self, train: &Dataset) -> Result<()> {
        SyntheticModel::fit(self, train)
    }

    fn blur(&self, q: &Dataset, seed: u64) -> Result<Dataset> {
        let users: Vec<String> = q.trajectories().iter().map(|t| t.user_id.clone()).collect();
        self.sample_with_users(&users, seed)
    }
}
