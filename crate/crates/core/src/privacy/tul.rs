//! Trajectory-user linking: a nearest-trace solver and the two evaluation protocols.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::distance::{Prepared, TrajectoryDistance};
use crate::error::{Error, Result};
use crate::mobility::{Dataset, Trajectory};

pub trait TulSolver: Send + Sync {
    fn fit(&mut self, train: &Dataset) -> Result<()>;

    fn link(&self, t: &Trajectory) -> Result<String>;
}

/// Links a trajectory to the user owning its nearest training trajectory; equal
/// distances go to the lexicographically smallest user id.
#[derive(Default)]
pub struct HeuristicTulSolver {
    distance: TrajectoryDistance,
    train: Vec<(String, Prepared)>,
}

impl HeuristicTulSolver {
    pub fn new(distance: TrajectoryDistance) -> Self {
        Self {
            distance,
            train: Vec::new(),
        }
    }
}

impl TulSolver for HeuristicTulSolver {
    fn fit(&mut self, train: &Dataset) -> Result<()> {
        if train.is_empty() {
            return Err(Error::Empty(
                "TUL solver needs training trajectories".into(),
            ));
        }
        self.train = train
            .trajectories()
            .iter()
            .map(|t| (t.user_id.clone(), Prepared::new(t)))
            .collect();
        Ok(())
    }

    fn link(&self, t: &Trajectory) -> Result<String> {
        let x = Prepared::new(t);
        let mut best: Option<(f64, &str)> = None;
        for (user, p) in &self.train {
            let d = x.distance(p, &self.distance)?;
            let better = match best {
                None => true,
                Some((bd, bu)) => d < bd || (d == bd && user.as_str() < bu),
            };
            if better {
                best = Some((d, user));
            }
        }
        best.map(|(_, u)| u.to_string())
            .ok_or_else(|| Error::InvalidParameter("TUL solver used before fit".into()))
    }
}

/// Share of trajectories linked to their own user.
pub fn linking_accuracy(solver: &dyn TulSolver, test: &Dataset) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::Empty("no trajectories to link".into()));
    }
    let hits = test
        .trajectories()
        .par_iter()
        .map(|t| solver.link(t).map(|u| u == t.user_id))
        .collect::<Result<Vec<bool>>>()?;
    Ok(hits.iter().filter(|&&h| h).count() as f64 / hits.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TulProtocol {
    /// One solver trained on real data, tested on real and synthetic targets.
    Legacy,
    /// A second solver trained on synthetic data for the synthetic targets.
    Fixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TulResult {
    pub protocol: TulProtocol,
    pub accuracy_real: f64,
    pub accuracy_syn: f64,
    /// `(accuracy_real - accuracy_syn) * 100`.
    pub gap_pp: f64,
}

impl TulResult {
    fn new(protocol: TulProtocol, accuracy_real: f64, accuracy_syn: f64) -> Self {
        Self {
            protocol,
            accuracy_real,
            accuracy_syn,
            gap_pp: (accuracy_real - accuracy_syn) * 100.0,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct TulData<'a> {
    pub d_train: &'a Dataset,
    pub q_target: &'a Dataset,
    pub s_train: &'a Dataset,
    pub s_target: &'a Dataset,
}

/// Runs both protocols. `make_solver` supplies a fresh solver per training set.
pub fn tul_protocols(
    data: &TulData<'_>,
    make_solver: &dyn Fn() -> Box<dyn TulSolver>,
) -> Result<[TulResult; 2]> {
    let mut real_solver = make_solver();
    real_solver.fit(data.d_train)?;
    let acc_real = linking_accuracy(real_solver.as_ref(), data.q_target)?;
    let legacy_syn = linking_accuracy(real_solver.as_ref(), data.s_target)?;
    let mut syn_solver = make_solver();
    syn_solver.fit(data.s_train)?;
    let fixed_syn = linking_accuracy(syn_solver.as_ref(), data.s_target)?;
    Ok([
        TulResult::new(TulProtocol::Legacy, acc_real, legacy_syn),
        TulResult::new(TulProtocol::Fixed, acc_real, fixed_syn),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mobility::{DatasetMeta, TrajPoint};

    fn two_users() -> Dataset {
        let trajs = (0..8)
            .map(|i| {
                let base = if i % 2 == 0 { 0.0 } else { 10_000.0 };
                let pts = (0..4)
                    .map(|k| {
                        TrajPoint::new(base + k as f64 * 50.0, (i / 2) as f64 * 20.0, k as f64)
                    })
                    .collect();
                Trajectory::new(format!("t{i}"), if i % 2 == 0 { "a" } else { "b" }, pts).unwrap()
            })
            .collect();
        Dataset::new(trajs, DatasetMeta::projected("two")).unwrap()
    }

    #[test]
    fn own_trajectory_links_to_own_user_and_separable_is_perfect() {
        let d = two_users();
        let mut s = HeuristicTulSolver::default();
        s.fit(&d).unwrap();
        for t in d.trajectories() {
            assert_eq!(s.link(t).unwrap(), t.user_id);
        }
        assert_eq!(linking_accuracy(&s, &d).unwrap(), 1.0);
    }

    #[test]
    fn ties_go_to_the_smallest_user() {
        let p = |x| vec![TrajPoint::new(x, 0.0, 0.0)];
        let train = Dataset::new(
            vec![
                Trajectory::new("1", "zed", p(-1.0)).unwrap(),
                Trajectory::new("2", "amy", p(1.0)).unwrap(),
            ],
            DatasetMeta::projected("t"),
        )
        .unwrap();
        let mut s = HeuristicTulSolver::default();
        s.fit(&train).unwrap();
        assert_eq!(
            s.link(&Trajectory::new("q", "?", p(0.0)).unwrap()).unwrap(),
            "amy"
        );
    }

    struct Constant(String);

    impl TulSolver for Constant {
        fn fit(&mut self, _: &Dataset) -> Result<()> {
            Ok(())
        }

        fn link(&self, _: &Trajectory) -> Result<String> {
            Ok(self.0.clone())
        }
    }

    #[test]
    fn constant_solver_scores_the_user_share() {
        let d = two_users();
        assert_eq!(linking_accuracy(&Constant("a".into()), &d).unwrap(), 0.5);
    }

    #[test]
    fn identity_data_has_zero_gaps() {
        let d = two_users();
        let data = TulData {
            d_train: &d,
            q_target: &d,
            s_train: &d,
            s_target: &d,
        };
        let [legacy, fixed] = tul_protocols(&data, &|| {
            Box::new(HeuristicTulSolver::default()) as Box<dyn TulSolver>
        })
        .unwrap();
        assert_eq!(legacy.gap_pp, 0.0);
        assert_eq!(fixed.gap_pp, 0.0);
        assert_eq!(legacy.protocol, TulProtocol::Legacy);
    }
}
