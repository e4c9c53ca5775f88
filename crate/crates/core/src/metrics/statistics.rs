//! Marginal and relational statistics, compared through W1 or Kendall tau-b.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{MetricId, MetricResult};
use crate::error::{Error, Result};
use crate::grid::{CellId, DiscretizedDataset};
use crate::measures::{
    cosine_distance, discrete_frechet, dtw, hausdorff, kendall_tau_b, wasserstein1_scalar,
    EmpiricalDistribution, RankVector,
};
use crate::mobility::{Dataset, Trajectory};

pub(crate) fn w1_samples(a: &[f64], b: &[f64]) -> Result<f64> {
    let mu = EmpiricalDistribution::from_samples(a)?;
    let nu = EmpiricalDistribution::from_samples(b)?;
    wasserstein1_scalar(&mu, &nu)
}

pub(crate) fn same_grid(real: &DiscretizedDataset, syn: &DiscretizedDataset) -> Result<()> {
    if real.grid != syn.grid {
        return Err(Error::InvalidParameter(
            "real and synthetic datasets must be discretised on the same grid".into(),
        ));
    }
    Ok(())
}

/// Per-user scores `(1 - tau_b(frequency ranking, cell-index ranking)) / 2`, with
/// the number of users for whom tau-b is undefined.
pub fn i_rank_scores(dd: &DiscretizedDataset) -> (Vec<f64>, usize) {
    let mut per_user: BTreeMap<&str, BTreeMap<CellId, u64>> = BTreeMap::new();
    for t in &dd.trajectories {
        let counts = per_user.entry(t.user_id.as_str()).or_default();
        for &c in &t.cells {
            *counts.entry(c).or_default() += 1;
        }
    }
    let mut scores = Vec::with_capacity(per_user.len());
    let mut excluded = 0;
    for counts in per_user.values() {
        let by_frequency = RankVector::from_frequencies(counts);
        let by_index = RankVector::new(counts.keys().enumerate().map(|(i, &c)| (c, i as u64 + 1)))
            .expect("ranks are a permutation");
        match kendall_tau_b(&by_frequency, &by_index) {
            Ok(tau) => scores.push((1.0 - tau) / 2.0),
            Err(_) => excluded += 1,
        }
    }
    (scores, excluded)
}

pub fn i_rank_metric(real: &DiscretizedDataset, syn: &DiscretizedDataset) -> Result<MetricResult> {
    same_grid(real, syn)?;
    let (r, r_ex) = i_rank_scores(real);
    let (s, s_ex) = i_rank_scores(syn);
    if r.is_empty() || s.is_empty() {
        return Err(Error::Undefined(
            "no user has a well-defined visitation ranking".into(),
        ));
    }
    Ok(
        MetricResult::value(MetricId::IRank, w1_samples(&r, &s)?).with_note(format!(
            "users excluded (undefined tau-b): real {r_ex}, synthetic {s_ex}"
        )),
    )
}

/// Mean of the step speeds over steps with positive duration, in km/h.
pub fn trajectory_average_speed(t: &Trajectory) -> Option<f64> {
    let speeds: Vec<f64> = t
        .points
        .windows(2)
        .filter(|w| w[1].timestamp > w[0].timestamp)
        .map(|w| w[0].point.distance(&w[1].point) / (w[1].timestamp - w[0].timestamp))
        .collect();
    if speeds.is_empty() {
        return None;
    }
    Some(speeds.iter().sum::<f64>() / speeds.len() as f64 * 3.6)
}

fn speeds(d: &Dataset) -> (Vec<f64>, usize) {
    let all: Vec<Option<f64>> = d
        .trajectories()
        .iter()
        .map(trajectory_average_speed)
        .collect();
    let excluded = all.iter().filter(|s| s.is_none()).count();
    (all.into_iter().flatten().collect(), excluded)
}

pub fn average_speed_metric(real: &Dataset, syn: &Dataset) -> Result<MetricResult> {
    let (r, r_ex) = speeds(real);
    let (s, s_ex) = speeds(syn);
    if r.is_empty() {
        return Err(Error::Undefined(
            "no real trajectory has a step with positive duration".into(),
        ));
    }
    if s.is_empty() {
        return Ok(MetricResult::not_applicable(
            MetricId::AverageSpeed,
            "synthetic trajectories carry no increasing timestamps",
        ));
    }
    Ok(
        MetricResult::value(MetricId::AverageSpeed, w1_samples(&r, &s)?).with_note(format!(
            "trajectories excluded (no positive time step): real {r_ex}, synthetic {s_ex}"
        )),
    )
}

pub fn traveled_distance_metric(real: &Dataset, syn: &Dataset) -> Result<MetricResult> {
    let km = |d: &Dataset| -> Vec<f64> {
        d.trajectories()
            .iter()
            .map(|t| t.traveled_distance() / 1000.0)
            .collect()
    };
    let (r, s) = (km(real), km(syn));
    if r.is_empty() || s.is_empty() {
        return Err(Error::Empty(
            "traveled distance needs non-empty datasets".into(),
        ));
    }
    Ok(MetricResult::value(
        MetricId::TraveledDistance,
        w1_samples(&r, &s)?,
    ))
}

/// Within-dataset trajectory distance used by the relational statistics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairwiseKind {
    Hausdorff,
    Cosine,
    Frechet,
    Dtw,
}

impl PairwiseKind {
    pub fn metric(&self) -> MetricId {
        match self {
            PairwiseKind::Hausdorff => MetricId::PairwiseHausdorff,
            PairwiseKind::Cosine => MetricId::PairwiseCosine,
            PairwiseKind::Frechet => MetricId::PairwiseFrechet,
            PairwiseKind::Dtw => MetricId::PairwiseDtw,
        }
    }
}

fn category_vector(t: &Trajectory, dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    for p in &t.points {
        if let Some(c) = p.category {
            v[c.0 as usize] += 1.0;
        }
    }
    v
}

/// All `n(n-1)/2` distances between trajectories of one dataset (km for the
/// geometric kinds), plus the number of trajectories left out (cosine only:
/// trajectories without any category).
pub fn pairwise_distances(d: &Dataset, kind: PairwiseKind) -> Result<(Vec<f64>, usize)> {
    enum Item {
        Points(Vec<[f64; 2]>),
        Categories(Vec<f64>),
    }
    let mut excluded = 0;
    let items: Vec<Item> = match kind {
        PairwiseKind::Cosine => {
            let dim = d.vocabulary().len();
            d.trajectories()
                .iter()
                .map(|t| category_vector(t, dim))
                .filter(|v| {
                    let keep = v.iter().any(|&x| x > 0.0);
                    if !keep {
                        excluded += 1;
                    }
                    keep
                })
                .map(Item::Categories)
                .collect()
        }
        _ => d
            .trajectories()
            .iter()
            .map(|t| Item::Points(t.xy()))
            .collect(),
    };
    if items.len() < 2 {
        return Err(Error::Undefined(
            "pairwise distances need at least two trajectories".into(),
        ));
    }
    let pair = |a: &Item, b: &Item| -> Result<f64> {
        match (a, b) {
            (Item::Categories(u), Item::Categories(v)) => cosine_distance(u, v),
            (Item::Points(p), Item::Points(q)) => Ok(match kind {
                PairwiseKind::Hausdorff => hausdorff(p, q)?,
                PairwiseKind::Frechet => discrete_frechet(p, q)?,
                _ => dtw(p, q)?,
            } / 1000.0),
            _ => unreachable!("items share one representation"),
        }
    };
    let rows: Vec<Result<Vec<f64>>> = (0..items.len())
        .into_par_iter()
        .map(|i| {
            (i + 1..items.len())
                .map(|j| pair(&items[i], &items[j]))
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(items.len() * (items.len() - 1) / 2);
    for r in rows {
        out.extend(r?);
    }
    Ok((out, excluded))
}

pub fn pairwise_similarity_metric(
    real: &Dataset,
    syn: &Dataset,
    kind: PairwiseKind,
) -> Result<MetricResult> {
    let id = kind.metric();
    if kind == PairwiseKind::Cosine {
        if !real.has_categories() {
            return Err(Error::InvalidParameter(
                "cosine similarity needs categories in the real dataset".into(),
            ));
        }
        if !syn.has_categories() {
            return Ok(MetricResult::not_applicable(
                id,
                "synthetic dataset carries no categories",
            ));
        }
    }
    let (r, r_ex) = pairwise_distances(real, kind)?;
    let (s, s_ex) = pairwise_distances(syn, kind)?;
    let mut result = MetricResult::value(id, w1_samples(&r, &s)?);
    if kind == PairwiseKind::Cosine {
        result = result.with_note(format!(
            "trajectories without categories excluded: real {r_ex}, synthetic {s_ex}"
        ));
    }
    Ok(result)
}

pub fn g_rank_metric(real: &DiscretizedDataset, syn: &DiscretizedDataset) -> Result<MetricResult> {
    same_grid(real, syn)?;
    let counts = |dd: &DiscretizedDataset| {
        let mut m: BTreeMap<CellId, u64> = BTreeMap::new();
        for c in dd.cells() {
            *m.entry(c).or_default() += 1;
        }
        m
    };
    let tau = kendall_tau_b(
        &RankVector::from_frequencies(&counts(real)),
        &RankVector::from_frequencies(&counts(syn)),
    )?;
    Ok(MetricResult::value(MetricId::GRank, tau))
}

fn category_counts(d: &Dataset) -> BTreeMap<String, u64> {
    let mut m = BTreeMap::new();
    for p in d.trajectories().iter().flat_map(|t| &t.points) {
        if let Some(label) = p.category.and_then(|c| d.vocabulary().label(c)) {
            *m.entry(label.to_string()).or_default() += 1;
        }
    }
    m
}

/// Kendall tau-b between the category popularity rankings, matched by label.
pub fn categorical_g_rank(real: &Dataset, syn: &Dataset) -> Result<MetricResult> {
    if !real.has_categories() {
        return Err(Error::InvalidParameter(
            "categorical G-rank needs categories in the real dataset".into(),
        ));
    }
    if !syn.has_categories() {
        return Ok(MetricResult::not_applicable(
            MetricId::CategoricalGRank,
            "synthetic dataset carries no categories",
        ));
    }
    let tau = kendall_tau_b(
        &RankVector::from_frequencies(&category_counts(real)),
        &RankVector::from_frequencies(&category_counts(syn)),
    )?;
    Ok(MetricResult::value(MetricId::CategoricalGRank, tau))
}
