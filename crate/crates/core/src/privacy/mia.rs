//! Threshold membership inference against blurring models.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::distance::{
    DistanceKind, FeatureWeights, LengthFilter, ReleasedIndex, TrajectoryDistance,
};
use crate::error::{Error, Result};
use crate::generators::{BlurringModel, GeneratorSpec};
use crate::mobility::{mask_trajectory, split_dataset, Dataset, SplitSpec, Trajectory};

/// Creates fresh, unfitted blurring models (one for the target, one per shadow).
pub trait ModelFactory: Sync {
    fn create(&self) -> Result<Box<dyn BlurringModel>>;
}

impl ModelFactory for GeneratorSpec {
    fn create(&self) -> Result<Box<dyn BlurringModel>> {
        self.build()
    }
}

impl<F> ModelFactory for F
where
    F: Fn() -> Result<Box<dyn BlurringModel>> + Sync,
{
    fn create(&self) -> Result<Box<dyn BlurringModel>> {
        self()
    }
}

/// Trajectory-level three-way partition of the attacker's data.
#[derive(Clone, Debug, PartialEq)]
pub struct AuxSplit {
    pub d_aux_train: Dataset,
    pub q_aux: Dataset,
    pub q_tau: Dataset,
}

pub const DEFAULT_AUX_FRACTIONS: [f64; 3] = [0.5, 0.25, 0.25];

pub fn split_aux(d_aux: &Dataset, fractions: [f64; 3], seed: u64) -> Result<AuxSplit> {
    let mut parts = split_dataset(d_aux, &SplitSpec::new(fractions), seed)?;
    if parts.iter().any(Dataset::is_empty) {
        return Err(Error::InfeasibleSplit(format!(
            "{} trajectories cannot fill three non-empty auxiliary parts",
            d_aux.len()
        )));
    }
    let q_tau = parts.pop().expect("three parts");
    let q_aux = parts.pop().expect("three parts");
    let d_aux_train = parts.pop().expect("three parts");
    Ok(AuxSplit {
        d_aux_train,
        q_aux,
        q_tau,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Main,
    /// The attacker only sees a fraction of each target's visits.
    Masked,
    /// The attacker has no auxiliary data and calibrates on the released set.
    ReleasedOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdModel {
    pub tau: f64,
    pub kind: DistanceKind,
    /// Mean alpha of records the shadow model was given.
    pub member_mean: f64,
    pub non_member_mean: f64,
    /// False when the two means coincide and `tau` carries no information.
    pub separated: bool,
}

impl ThresholdModel {
    /// `tau` at the midpoint of the two means.
    pub fn from_means(member_mean: f64, non_member_mean: f64, kind: DistanceKind) -> Self {
        let separated = member_mean != non_member_mean;
        if !separated {
            log::warn!("member and non-member scores have equal means ({member_mean}); threshold does not separate");
        }
        Self {
            tau: (member_mean + non_member_mean) / 2.0,
            kind,
            member_mean,
            non_member_mean,
            separated,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    #[serde(rename = "IN")]
    In,
    #[serde(rename = "OUT")]
    Out,
}

/// IN when `alpha <= tau`.
pub fn decide(alpha: f64, tm: &ThresholdModel) -> Decision {
    if alpha <= tm.tau {
        Decision::In
    } else {
        Decision::Out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackConfig {
    pub scenario: Scenario,
    pub distance: DistanceKind,
    pub feature_weights: FeatureWeights,
    /// Required by the masked scenario.
    pub keep_fraction: Option<f64>,
    pub aux_fractions: [f64; 3],
    pub seed: u64,
    pub n_seeds: usize,
    pub length_filter: bool,
    /// Upper bound on members (and on non-members) per seed; `None` uses as many as
    /// the smaller pool allows.
    pub targets_per_class: Option<usize>,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::Main,
            distance: DistanceKind::Frechet,
            feature_weights: FeatureWeights::default(),
            keep_fraction: None,
            aux_fractions: DEFAULT_AUX_FRACTIONS,
            seed: 0,
            n_seeds: 4,
            length_filter: true,
            targets_per_class: None,
        }
    }
}

impl AttackConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.n_seeds == 0 {
            return bad("n_seeds must be at least 1");
        }
        match (self.scenario, self.keep_fraction) {
            (Scenario::Masked, None) => return bad("the masked scenario requires keep_fraction"),
            (Scenario::Masked, Some(f)) if !(f > 0.0 && f <= 1.0) => {
                return bad("keep_fraction must be in (0, 1]")
            }
            _ => {}
        }
        if self.targets_per_class == Some(0) {
            return bad("targets_per_class must be positive");
        }
        Ok(())
    }

    pub fn trajectory_distance(&self) -> TrajectoryDistance {
        TrajectoryDistance {
            kind: self.distance,
            weights: self.feature_weights,
        }
    }

    /// Seeds of the repeated runs.
    pub fn seeds(&self) -> Vec<u64> {
        (0..self.n_seeds as u64).map(|i| self.seed + i).collect()
    }

    fn filter(&self) -> LengthFilter {
        match (self.length_filter, self.scenario, self.keep_fraction) {
            (false, _, _) => LengthFilter::Off,
            (true, Scenario::Masked, Some(f)) => LengthFilter::Masked(f),
            _ => LengthFilter::SameLength,
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s)
            .map_err(|e| Error::InvalidParameter(format!("attack config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// The data owner's side of the experiment.
#[derive(Clone, Copy, Debug)]
pub struct TargetSetup<'a> {
    pub d_train: &'a Dataset,
    pub q_target: &'a Dataset,
    /// Never-used records the non-member targets are drawn from.
    pub holdout: &'a Dataset,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetScore {
    pub target_id: String,
    pub alpha: f64,
    pub relaxation: usize,
    pub decision: Decision,
    pub member: bool,
}

impl TargetScore {
    pub fn correct(&self) -> bool {
        (self.decision == Decision::In) == self.member
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub threshold: ThresholdModel,
    /// Calibration scores behind the threshold.
    pub member_scores: Vec<f64>,
    pub non_member_scores: Vec<f64>,
    pub targets: Vec<TargetScore>,
    pub accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackResult {
    pub scenario: Scenario,
    pub distance: DistanceKind,
    pub runs: Vec<SeedRun>,
    pub accuracies: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation over seeds.
    pub std: f64,
}

impl AttackResult {
    pub fn total_targets(&self) -> usize {
        self.runs.iter().map(|r| r.targets.len()).sum()
    }

    /// Correct decisions over all targets of all seeds.
    pub fn pooled_accuracy(&self) -> f64 {
        let correct = self
            .runs
            .iter()
            .flat_map(|r| &r.targets)
            .filter(|t| t.correct())
            .count();
        correct as f64 / self.total_targets() as f64
    }

    /// `mean ± std` with three decimals.
    pub fn summary(&self) -> String {
        format!("{:.3} ± {:.3}", self.mean, self.std)
    }
}

/// Independent sub-streams of one seed.
fn sub_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// What the attacker gets to see of a record.
fn attacker_view(t: &Trajectory, cfg: &AttackConfig, seed: u64, i: usize) -> Result<Trajectory> {
    match (cfg.scenario, cfg.keep_fraction) {
        (Scenario::Masked, Some(f)) => mask_trajectory(t, f, sub_seed(seed, 1000 + i as u64)),
        _ => Ok(t.clone()),
    }
}

fn score_all(
    records: &[Trajectory],
    index: &ReleasedIndex,
    cfg: &AttackConfig,
    seed: u64,
) -> Result<Vec<super::distance::Alpha>> {
    records
        .par_iter()
        .enumerate()
        .map(|(i, t)| index.alpha(&attacker_view(t, cfg, seed, i)?, cfg.filter()))
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Fits a shadow model on `d_aux_train`, releases `blur(q_aux)` and puts the
/// threshold midway between the mean scores of `q_aux` (members) and `q_tau`.
pub fn learn_threshold(
    split: &AuxSplit,
    factory: &dyn ModelFactory,
    cfg: &AttackConfig,
    seed: u64,
) -> Result<(ThresholdModel, Vec<f64>, Vec<f64>)> {
    let mut shadow = factory.create()?;
    shadow.fit(&split.d_aux_train)?;
    let s_aux = shadow.blur(&split.q_aux, sub_seed(seed, 2))?;
    let index = ReleasedIndex::new(&s_aux, cfg.trajectory_distance());
    let members: Vec<f64> = score_all(split.q_aux.trajectories(), &index, cfg, sub_seed(seed, 3))?
        .into_iter()
        .map(|a| a.alpha)
        .collect();
    let non_members: Vec<f64> =
        score_all(split.q_tau.trajectories(), &index, cfg, sub_seed(seed, 4))?
            .into_iter()
            .map(|a| a.alpha)
            .collect();
    let tm = ThresholdModel::from_means(mean(&members), mean(&non_members), cfg.distance);
    Ok((tm, members, non_members))
}

fn ids(d: &Dataset) -> HashSet<&str> {
    d.trajectories()
        .iter()
        .map(|t| t.traj_id.as_str())
        .collect()
}

fn check_disjoint(a: &Dataset, b: &Dataset, what: &str) -> Result<()> {
    let ia = ids(a);
    if let Some(t) = b
        .trajectories()
        .iter()
        .find(|t| ia.contains(t.traj_id.as_str()))
    {
        return Err(Error::InvalidParameter(format!(
            "{what} share trajectory `{}`",
            t.traj_id
        )));
    }
    Ok(())
}

/// The whole pipeline for every configured seed: train the target model, release
/// `S_target = blur(q_target)`, learn the threshold for the scenario, then score a
/// balanced set of members (from `q_target`) and non-members (from `holdout`).
pub fn run_attack(
    setup: &TargetSetup<'_>,
    d_aux: Option<&Dataset>,
    factory: &dyn ModelFactory,
    cfg: &AttackConfig,
) -> Result<AttackResult> {
    cfg.validate()?;
    match (cfg.scenario, d_aux) {
        (Scenario::ReleasedOnly, Some(_)) => {
            return Err(Error::InvalidParameter(
                "the released-only scenario takes no auxiliary data".into(),
            ))
        }
        (Scenario::Main | Scenario::Masked, None) => {
            return Err(Error::InvalidParameter(
                "this scenario needs an auxiliary dataset".into(),
            ))
        }
        _ => {}
    }
    check_disjoint(setup.d_train, setup.q_target, "d_train and q_target")?;
    check_disjoint(setup.d_train, setup.holdout, "d_train and the holdout")?;
    check_disjoint(setup.q_target, setup.holdout, "q_target and the holdout")?;
    if let Some(aux) = d_aux {
        for (d, what) in [
            (setup.d_train, "d_aux and d_train"),
            (setup.q_target, "d_aux and q_target"),
            (setup.holdout, "d_aux and the holdout"),
        ] {
            check_disjoint(aux, d, what)?;
        }
    }
    let per_class = setup.q_target.len().min(setup.holdout.len());
    let per_class = cfg
        .targets_per_class
        .map_or(per_class, |k| k.min(per_class));
    if per_class == 0 {
        return Err(Error::Empty(
            "need at least one member and one held-out non-member target".into(),
        ));
    }

    let mut runs = Vec::with_capacity(cfg.n_seeds);
    for seed in cfg.seeds() {
        let mut target = factory.create()?;
        target.fit(setup.d_train)?;
        let s_target = target.blur(setup.q_target, sub_seed(seed, 0))?;

        let split = match d_aux {
            Some(aux) => split_aux(aux, cfg.aux_fractions, sub_seed(seed, 5))?,
            None => split_aux(&s_target, cfg.aux_fractions, sub_seed(seed, 5))?,
        };
        let (threshold, member_scores, non_member_scores) =
            learn_threshold(&split, factory, cfg, seed)?;

        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, 6));
        let mut m_idx: Vec<usize> = (0..setup.q_target.len()).collect();
        let mut n_idx: Vec<usize> = (0..setup.holdout.len()).collect();
        m_idx.shuffle(&mut rng);
        n_idx.shuffle(&mut rng);
        let mut records: Vec<(Trajectory, bool)> = m_idx[..per_class]
            .iter()
            .map(|&i| (setup.q_target.trajectories()[i].clone(), true))
            .collect();
        records.extend(
            n_idx[..per_class]
                .iter()
                .map(|&i| (setup.holdout.trajectories()[i].clone(), false)),
        );
        let index = ReleasedIndex::new(&s_target, cfg.trajectory_distance());
        let trajs: Vec<Trajectory> = records.iter().map(|(t, _)| t.clone()).collect();
        let alphas = score_all(&trajs, &index, cfg, sub_seed(seed, 7))?;
        let targets: Vec<TargetScore> = records
            .iter()
            .zip(alphas)
            .map(|((t, member), a)| TargetScore {
                target_id: t.traj_id.clone(),
                alpha: a.alpha,
                relaxation: a.relaxation,
                decision: decide(a.alpha, &threshold),
                member: *member,
            })
            .collect();
        let accuracy = targets.iter().filter(|t| t.correct()).count() as f64 / targets.len() as f64;
        runs.push(SeedRun {
            seed,
            threshold,
            member_scores,
            non_member_scores,
            targets,
            accuracy,
        });
    }
    let accuracies: Vec<f64> = runs.iter().map(|r| r.accuracy).collect();
    let m = mean(&accuracies);
    let std =
        (accuracies.iter().map(|a| (a - m).powi(2)).sum::<f64>() / accuracies.len() as f64).sqrt();
    Ok(AttackResult {
        scenario: cfg.scenario,
        distance: cfg.distance,
        runs,
        accuracies,
        mean: m,
        std,
    })
}

/// `seed,target_id,alpha,relaxation,decision,member,correct`.
pub fn write_targets_csv(r: &AttackResult, out: impl std::io::Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "seed",
        "target_id",
        "alpha",
        "relaxation",
        "decision",
        "member",
        "correct",
    ])?;
    for run in &r.runs {
        for t in &run.targets {
            let decision = match t.decision {
                Decision::In => "IN",
                Decision::Out => "OUT",
            };
            w.write_record([
                run.seed.to_string(),
                t.target_id.clone(),
                t.alpha.to_string(),
                t.relaxation.to_string(),
                decision.to_string(),
                t.member.to_string(),
                t.correct().to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<targets csv>", e))?;
    Ok(())
}

/// Calibration scores per seed, `seed,set,score`, with one `tau` row per seed.
pub fn write_scores_csv(r: &AttackResult, out: impl std::io::Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["seed", "set", "score"])?;
    for run in &r.runs {
        let seed = run.seed.to_string();
        for s in &run.member_scores {
            w.write_record([seed.as_str(), "member", &s.to_string()])?;
        }
        for s in &run.non_member_scores {
            w.write_record([seed.as_str(), "non-member", &s.to_string()])?;
        }
        w.write_record([seed.as_str(), "tau", &run.threshold.tau.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<scores csv>", e))?;
    Ok(())
}
