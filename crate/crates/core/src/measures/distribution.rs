use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finitely supported probability distribution: unique atoms with weights summing to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDistribution<T> {
    support: Vec<T>,
    weights: Vec<f64>,
}

impl<T: Clone + PartialOrd> EmpiricalDistribution<T> {
    /// Normalises `weights` to sum to one. Atoms must be unique and weights
    /// non-negative with a positive total.
    pub fn new(support: Vec<T>, weights: Vec<f64>) -> Result<Self> {
        if support.len() != weights.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} atoms but {} weights",
                support.len(),
                weights.len()
            )));
        }
        if support.is_empty() {
            return Err(Error::Empty("distribution has no atoms".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidParameter(
                "weights must be finite and non-negative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidParameter("weights sum to zero".into()));
        }
        let mut order: Vec<usize> = (0..support.len()).collect();
        let mut incomparable = false;
        order.sort_by(|&a, &b| {
            support[a].partial_cmp(&support[b]).unwrap_or_else(|| {
                incomparable = true;
                Ordering::Equal
            })
        });
        if incomparable {
            return Err(Error::InvalidParameter(
                "support atoms are not comparable".into(),
            ));
        }
        if order.windows(2).any(|w| support[w[0]] == support[w[1]]) {
            return Err(Error::InvalidParameter(
                "support atoms must be unique".into(),
            ));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { support, weights })
    }

    pub fn point_mass(atom: T) -> Self {
        Self {
            support: vec![atom],
            weights: vec![1.0],
        }
    }

    pub fn support(&self) -> &[T] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&T, f64)> {
        self.support.iter().zip(self.weights.iter().copied())
    }
}

impl<T: Clone + Ord> EmpiricalDistribution<T> {
    /// Distribution proportional to the given non-negative masses, support sorted.
    pub fn from_counts(counts: &BTreeMap<T, f64>) -> Result<Self> {
        let (support, weights) = counts.iter().map(|(k, &v)| (k.clone(), v)).unzip();
        Self::new(support, weights)
    }
}

impl EmpiricalDistribution<f64> {
    /// Uniform weights over the observed values, merging repeated values.
    pub fn from_samples(values: &[f64]) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("samples must be finite".into()));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut support: Vec<f64> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for v in sorted {
            match support.last() {
                Some(&last) if last == v => *weights.last_mut().unwrap() += 1.0,
                _ => {
                    support.push(v);
                    weights.push(1.0);
                }
            }
        }
        Self::new(support, weights)
    }
}
