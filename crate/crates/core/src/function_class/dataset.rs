use std::hash::{Hash, Hasher};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

/// A regression input: a state-action pair (model-free) or a state-action
/// pair together with the next-step value function (model-based).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Covariate {
    ModelFree {
        state: usize,
        action: usize,
    },
    ModelBased {
        state: usize,
        action: usize,
        value: Vec<f64>,
    },
}

impl Covariate {
    pub fn model_free(state: usize, action: usize) -> Self {
        Covariate::ModelFree { state, action }
    }

    pub fn model_based(state: usize, action: usize, value: Vec<f64>) -> Self {
        Covariate::ModelBased { state, action, value }
    }

    pub fn state(&self) -> usize {
        match self {
            Covariate::ModelFree { state, .. } | Covariate::ModelBased { state, .. } => *state,
        }
    }

    pub fn action(&self) -> usize {
        match self {
            Covariate::ModelFree { action, .. } | Covariate::ModelBased { action, .. } => *action,
        }
    }
}

// Value vectors compare bitwise so covariates can key a hash map.
impl PartialEq for Covariate {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Covariate::ModelFree { state: s1, action: a1 }, Covariate::ModelFree { state: s2, action: a2 }) => {
                s1 == s2 && a1 == a2
            }
            (
                Covariate::ModelBased {
                    state: s1,
                    action: a1,
                    value: v1,
                },
                Covariate::ModelBased {
                    state: s2,
                    action: a2,
                    value: v2,
                },
            ) => {
                s1 == s2
                    && a1 == a2
                    && v1.len() == v2.len()
                    && v1.iter().zip(v2).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            _ => false,
        }
    }
}

impl Eq for Covariate {}

impl Hash for Covariate {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            Covariate::ModelFree { state: s, action } => {
                0u8.hash(state);
                s.hash(state);
                action.hash(state);
            }
            Covariate::ModelBased {
                state: s,
                action,
                value,
            } => {
                1u8.hash(state);
                s.hash(state);
                action.hash(state);
                for x in value {
                    x.to_bits().hash(state);
                }
            }
        }
    }
}

/// Weighted least-squares data `{(x, y, w)}`; a weight of `w` is the same as
/// `w` duplicated entries.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RegressionDataset {
    entries: Vec<(Covariate, f64, u64)>,
}

impl RegressionDataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: Covariate, y: f64) {
        self.entries.push((x, y, 1));
    }

    pub fn push_weighted(&mut self, x: Covariate, y: f64, weight: u64) {
        if weight > 0 {
            self.entries.push((x, y, weight));
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Covariate, f64, u64)> {
        self.entries.iter().map(|(x, y, w)| (x, *y, *w))
    }

    /// `‖f‖²_D = Σ w (f(x) − y)²`
    pub fn sq_loss(&self, f: impl Fn(&Covariate) -> f64) -> f64 {
        self.iter().map(|(x, y, w)| w as f64 * (f(x) - y).powi(2)).sum()
    }
}

/// Multiplicity-weighted covariate multiset `Ẑ` built by the online sampler.
///
/// Entries keep first-insertion order so iteration (and hence every float
/// reduction over the dataset) is deterministic.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "DatasetRepr", into = "DatasetRepr")]
pub struct SubsampledDataset {
    counts: IndexMap<Covariate, u64>,
    changes: u64,
}

#[derive(Serialize, Deserialize)]
struct DatasetRepr {
    entries: Vec<(Covariate, u64)>,
    changes: u64,
}

impl From<DatasetRepr> for SubsampledDataset {
    fn from(r: DatasetRepr) -> Self {
        let mut counts = IndexMap::new();
        for (z, m) in r.entries {
            *counts.entry(z).or_insert(0) += m;
        }
        Self {
            counts,
            changes: r.changes,
        }
    }
}

impl From<SubsampledDataset> for DatasetRepr {
    fn from(d: SubsampledDataset) -> Self {
        DatasetRepr {
            entries: d.counts.into_iter().collect(),
            changes: d.changes,
        }
    }
}

impl SubsampledDataset {
    pub fn new() -> Self {
        Self::default()
    }

    /// Unit-multiplicity dataset over the given covariates (the unweighted
    /// history `Z`).
    pub fn from_points<I: IntoIterator<Item = Covariate>>(points: I) -> Self {
        let mut d = Self::new();
        for z in points {
            d.insert(z, 1);
        }
        d
    }

    /// Adds `copies` copies of `z`. Zero copies is a no-op and not a change.
    pub fn insert(&mut self, z: Covariate, copies: u64) {
        if copies == 0 {
            return;
        }
        *self.counts.entry(z).or_insert(0) += copies;
        self.changes += 1;
    }

    pub fn multiplicity(&self, z: &Covariate) -> u64 {
        self.counts.get(z).copied().unwrap_or(0)
    }

    /// Number of insert events so far.
    pub fn changes(&self) -> u64 {
        self.changes
    }

    /// Total multiplicity `Σ m_z`.
    pub fn total_mass(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Number of distinct covariates.
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Covariate, u64)> {
        self.counts.iter().map(|(z, m)| (z, *m))
    }

    /// `‖f₁ − f₂‖²_Ẑ = Σ m_z (f₁(z) − f₂(z))²`, with `diff(z) = f₁(z) − f₂(z)`.
    pub fn sq_norm(&self, diff: impl Fn(&Covariate) -> f64) -> f64 {
        self.iter().map(|(z, m)| m as f64 * diff(z).powi(2)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiplicities_accumulate_and_count_changes() {
        let mut d = SubsampledDataset::new();
        let z = Covariate::model_free(1, 0);
        d.insert(z.clone(), 3);
        d.insert(z.clone(), 0);
        d.insert(z.clone(), 2);
        assert_eq!(d.multiplicity(&z), 5);
        assert_eq!(d.changes(), 2);
        assert_eq!(d.total_mass(), 5);
        assert_eq!(d.multiplicity(&Covariate::model_free(0, 0)), 0);
    }

    #[test]
    fn model_based_keys_compare_bitwise() {
        let a = Covariate::model_based(0, 1, vec![0.5, 1.0]);
        let b = Covariate::model_based(0, 1, vec![0.5, 1.0]);
        let c = Covariate::model_based(0, 1, vec![0.5, 1.0 + f64::EPSILON]);
        assert_eq!(a, b);
        assert_ne!(a, c);
        let mut d = SubsampledDataset::new();
        d.insert(a, 1);
        d.insert(b, 1);
        d.insert(c, 1);
        assert_eq!(d.len(), 2);
    }

    #[test]
    fn zero_target_loss_is_sum_of_squares() {
        let mut data = RegressionDataset::new();
        data.push(Covariate::model_free(0, 0), 0.0);
        data.push_weighted(Covariate::model_free(1, 0), 0.0, 2);
        let f = |z: &Covariate| if z.state() == 0 { 1.5 } else { -2.0 };
        assert_eq!(data.sq_loss(f), 1.5 * 1.5 + 2.0 * 4.0);
    }

    #[test]
    fn serde_round_trip() {
        let mut d = SubsampledDataset::new();
        d.insert(Covariate::model_free(0, 1), 4);
        d.insert(Covariate::model_based(2, 0, vec![0.25, 3.0]), 1);
        let text = serde_json::to_string(&d).unwrap();
        let back: SubsampledDataset = serde_json::from_str(&text).unwrap();
        assert_eq!(back, d);
    }
}
