//! Classical comparison methods: user/item neighborhood CF and SGD matrix
//! factorization (biased, non-negative, and regularized non-negative).

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::{DatasetView, RatingTriple};
use crate::error::{Error, Result};
use crate::model::Predictor;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NeighborhoodMode {
    UserBased,
    ItemBased,
}

/// Ratings grouped by one axis, each entity's list sorted by the other axis
/// so co-rated sets come out of a linear merge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct EntityRatings {
    by_entity: Vec<Vec<(u32, f64)>>,
    means: Vec<f64>,
    seen: Vec<bool>,
}

impl EntityRatings {
    fn build(n: usize, entries: impl Iterator<Item = (usize, u32, f64)>) -> Self {
        let mut by_entity: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        for (e, other, r) in entries {
            by_entity[e].push((other, r));
        }
        let mut means = vec![0.0; n];
        let mut seen = vec![false; n];
        for (e, list) in by_entity.iter_mut().enumerate() {
            list.sort_unstable_by_key(|&(other, _)| other);
            if !list.is_empty() {
                seen[e] = true;
                means[e] = list.iter().map(|&(_, r)| r).sum::<f64>() / list.len() as f64;
            }
        }
        EntityRatings {
            by_entity,
            means,
            seen,
        }
    }
}

/// Neighborhood collaborative filtering with Pearson similarity over
/// co-rated entries and a shrinkage-weighted, mean-centered top-K average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodModel {
    pub mode: NeighborhoodMode,
    pub neighbors: usize,
    pub shrinkage: f64,
    pub clamp_predictions: bool,
    pub scale_min: f64,
    pub scale_max: f64,
    pub global_mean: f64,
    /// The axis similarities are computed over (users when user-based).
    primary: EntityRatings,
    /// The other axis, used to enumerate candidate neighbors.
    secondary: EntityRatings,
}

/// Pearson correlation restricted to co-rated entries, with the co-rating
/// count. Fewer than two co-rated entries or zero variance yields 0.
fn pearson_co_rated(a: &[(u32, f64)], b: &[(u32, f64)]) -> (f64, usize) {
    let mut ra = Vec::new();
    let mut rb = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                ra.push(a[i].1);
                rb.push(b[j].1);
                i += 1;
                j += 1;
            }
        }
    }
    let n = ra.len();
    if n < 2 {
        return (0.0, n);
    }
    let ma = ra.iter().sum::<f64>() / n as f64;
    let mb = rb.iter().sum::<f64>() / n as f64;
    let mut num = 0.0;
    let mut da = 0.0;
    let mut db = 0.0;
    for t in 0..n {
        let xa = ra[t] - ma;
        let xb = rb[t] - mb;
        num += xa * xb;
        da += xa * xa;
        db += xb * xb;
    }
    if da == 0.0 || db == 0.0 {
        return (0.0, n);
    }
    ((num / (da * db).sqrt()).clamp(-1.0, 1.0), n)
}

pub fn fit_neighborhood(
    train: &DatasetView,
    mode: NeighborhoodMode,
    neighbors: usize,
    shrinkage: f64,
) -> Result<NeighborhoodModel> {
    if train.is_empty() {
        return Err(Error::EmptyDataset("training view is empty".into()));
    }
    if neighbors == 0 {
        return Err(Error::Config("neighborhood size must be at least 1".into()));
    }
    if !(shrinkage >= 0.0) {
        return Err(Error::Config(format!(
            "shrinkage must be >= 0, got {shrinkage}"
        )));
    }
    let source = train.source();
    let n_users = source.n_users();
    let n_items = source.n_items();

    let users = EntityRatings::build(
        n_users,
        train.iter().map(|t| (t.user as usize, t.item, t.rating)),
    );
    let items = EntityRatings::build(
        n_items,
        train.iter().map(|t| (t.item as usize, t.user, t.rating)),
    );
    let (primary, secondary) = match mode {
        NeighborhoodMode::UserBased => (users, items),
        NeighborhoodMode::ItemBased => (items, users),
    };
    let (scale_min, scale_max) = source.scale();
    Ok(NeighborhoodModel {
        mode,
        neighbors,
        shrinkage,
        clamp_predictions: true,
        scale_min,
        scale_max,
        global_mean: train.mean_rating(),
        primary,
        secondary,
    })
}

impl NeighborhoodModel {
    /// Raw Pearson similarity between two entities on the model's primary
    /// axis (users when user-based, items when item-based).
    pub fn similarity(&self, a: usize, b: usize) -> f64 {
        pearson_co_rated(&self.primary.by_entity[a], &self.primary.by_entity[b]).0
    }

    fn predict_raw(&self, user: usize, item: usize) -> f64 {
        let (target, other) = match self.mode {
            NeighborhoodMode::UserBased => (user, item),
            NeighborhoodMode::ItemBased => (item, user),
        };
        if !self.primary.seen[target] {
            return self.global_mean;
        }
        let target_mean = self.primary.means[target];

        // Candidate neighbors: primary entities that rated `other`, weighted
        // by shrunk Pearson similarity; only positive weights contribute.
        let mut weighted: Vec<(f64, u32, f64)> = Vec::new();
        for &(neighbor, rating) in &self.secondary.by_entity[other] {
            let neighbor = neighbor as usize;
            if neighbor == target {
                continue;
            }
            let (sim, n_co) = pearson_co_rated(
                &self.primary.by_entity[target],
                &self.primary.by_entity[neighbor],
            );
            let weight = sim * n_co as f64 / (n_co as f64 + self.shrinkage);
            if weight > 0.0 {
                weighted.push((weight, neighbor as u32, rating));
            }
        }
        if weighted.is_empty() {
            return target_mean;
        }
        // Highest weight first; ties broken by entity index for determinism.
        weighted.sort_unstable_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        weighted.truncate(self.neighbors);

        let mut num = 0.0;
        let mut den = 0.0;
        for &(w, neighbor, rating) in &weighted {
            num += w * (rating - self.primary.means[neighbor as usize]);
            den += w.abs();
        }
        if den == 0.0 {
            return target_mean;
        }
        target_mean + num / den
    }

    fn n_users(&self) -> usize {
        match self.mode {
            NeighborhoodMode::UserBased => self.primary.by_entity.len(),
            NeighborhoodMode::ItemBased => self.secondary.by_entity.len(),
        }
    }

    fn n_items(&self) -> usize {
        match self.mode {
            NeighborhoodMode::UserBased => self.secondary.by_entity.len(),
            NeighborhoodMode::ItemBased => self.primary.by_entity.len(),
        }
    }
}

impl Predictor for NeighborhoodModel {
    fn predict(&self, user: usize, item: usize) -> Result<f64> {
        if user >= self.n_users() {
            return Err(Error::Index {
                what: "user",
                index: user,
                len: self.n_users(),
            });
        }
        if item >= self.n_items() {
            return Err(Error::Index {
                what: "item",
                index: item,
                len: self.n_items(),
            });
        }
        let raw = self.predict_raw(user, item);
        Ok(if self.clamp_predictions {
            raw.clamp(self.scale_min, self.scale_max)
        } else {
            raw
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MfVariant {
    /// Biased matrix factorization trained on observed entries.
    Svd,
    /// Non-negative factors, no regularization, projection to zero after
    /// each update.
    Nmf,
    /// Non-negative factors with L2 regularization.
    RegularizedNmf,
}

impl MfVariant {
    pub fn non_negative(self) -> bool {
        matches!(self, MfVariant::Nmf | MfVariant::RegularizedNmf)
    }

    pub fn biased(self) -> bool {
        matches!(self, MfVariant::Svd)
    }
}

/// SGD-trained factorization baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfModel {
    pub variant: MfVariant,
    pub k: usize,
    pub mu: f64,
    pub b_user: Vec<f64>,
    pub b_item: Vec<f64>,
    /// n x k user factors.
    pub p: Array2<f64>,
    /// m x k item factors, one row per item.
    pub q_items: Array2<f64>,
    pub lambda: f64,
    pub clamp_predictions: bool,
    pub scale_min: f64,
    pub scale_max: f64,
    pub train_mean: f64,
    pub seen_user: Vec<bool>,
    pub seen_item: Vec<bool>,
}

/// Train an MF baseline on observed entries. The plain `Nmf` variant ignores
/// `lambda`; the non-negative variants truncate each factor at zero after
/// every update. Deterministic in (view, arguments, seed).
pub fn fit_mf(
    train: &DatasetView,
    variant: MfVariant,
    k: usize,
    eta: f64,
    lambda: f64,
    epochs: usize,
    seed: u64,
) -> Result<MfModel> {
    if train.is_empty() {
        return Err(Error::EmptyDataset("training view is empty".into()));
    }
    if k == 0 {
        return Err(Error::Config("factor count must be at least 1".into()));
    }
    if !(eta > 0.0) || !(lambda >= 0.0) || epochs == 0 {
        return Err(Error::Config(format!(
            "invalid mf settings: eta {eta}, lambda {lambda}, epochs {epochs}"
        )));
    }
    let lambda = match variant {
        MfVariant::Nmf => 0.0,
        _ => lambda,
    };
    let source = train.source();
    let n = source.n_users();
    let m = source.n_items();

    let mut seq = SplitMix64::new(seed);
    let mut init_rng = seq.fork();
    let mut p = Array2::zeros((n, k));
    for u in 0..n {
        for f in 0..k {
            p[[u, f]] = init_rng.next_f64_open_closed();
        }
    }
    let mut q_items = Array2::zeros((m, k));
    for i in 0..m {
        for f in 0..k {
            q_items[[i, f]] = init_rng.next_f64_open_closed();
        }
    }

    let train_mean = train.mean_rating();
    let (seen_user, seen_item) = train.coverage();
    let (scale_min, scale_max) = source.scale();
    let mut model = MfModel {
        variant,
        k,
        mu: if variant.biased() { train_mean } else { 0.0 },
        b_user: vec![0.0; n],
        b_item: vec![0.0; m],
        p,
        q_items,
        lambda,
        clamp_predictions: true,
        scale_min,
        scale_max,
        train_mean,
        seen_user,
        seen_item,
    };

    let triples = source.triples();
    let mut order: Vec<u32> = train.triple_indices().to_vec();
    let base_order = order.clone();
    let mut p_row = vec![0.0; k];
    for epoch in 0..epochs {
        let shuffle_seed = seq.next_u64();
        order.copy_from_slice(&base_order);
        SplitMix64::new(shuffle_seed).shuffle(&mut order);
        for (step, &ti) in order.iter().enumerate() {
            let t: RatingTriple = triples[ti as usize];
            let u = t.user as usize;
            let i = t.item as usize;
            let err = t.rating - model.raw_score(u, i);
            if !err.is_finite() {
                return Err(Error::Divergence {
                    param: format!("prediction for user {u}, item {i}"),
                    epoch: epoch + 1,
                    step: step + 1,
                });
            }
            if variant.biased() {
                model.b_user[u] += eta * (err - lambda * model.b_user[u]);
                model.b_item[i] += eta * (err - lambda * model.b_item[i]);
            }
            for (f, dst) in p_row.iter_mut().enumerate() {
                *dst = model.p[[u, f]];
            }
            for f in 0..k {
                let updated =
                    model.p[[u, f]] + eta * (err * model.q_items[[i, f]] - lambda * p_row[f]);
                model.p[[u, f]] = if variant.non_negative() {
                    updated.max(0.0)
                } else {
                    updated
                };
            }
            for f in 0..k {
                let updated = model.q_items[[i, f]]
                    + eta * (err * p_row[f] - lambda * model.q_items[[i, f]]);
                model.q_items[[i, f]] = if variant.non_negative() {
                    updated.max(0.0)
                } else {
                    updated
                };
            }
        }
        if let Some(param) = model.first_non_finite_param() {
            return Err(Error::Divergence {
                param,
                epoch: epoch + 1,
                step: order.len(),
            });
        }
    }
    Ok(model)
}

impl MfModel {
    /// Unclipped interaction score (plus biases for the biased variant).
    pub fn raw_score(&self, user: usize, item: usize) -> f64 {
        let mut dot = 0.0;
        for f in 0..self.k {
            dot += self.p[[user, f]] * self.q_items[[item, f]];
        }
        if self.variant.biased() {
            self.mu + self.b_user[user] + self.b_item[item] + dot
        } else {
            dot
        }
    }

    fn cold_base(&self) -> f64 {
        if self.variant.biased() {
            self.mu
        } else {
            self.train_mean
        }
    }

    /// k x m item factor matrix, for the clustering study.
    pub fn item_representation(&self) -> Array2<f64> {
        let m = self.q_items.nrows();
        let mut rep = Array2::zeros((self.k, m));
        for i in 0..m {
            for f in 0..self.k {
                rep[[f, i]] = self.q_items[[i, f]];
            }
        }
        rep
    }

    pub fn min_factor_entry(&self) -> f64 {
        self.p
            .iter()
            .chain(self.q_items.iter())
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    fn first_non_finite_param(&self) -> Option<String> {
        for (u, v) in self.b_user.iter().enumerate() {
            if !v.is_finite() {
                return Some(format!("b_user[{u}]"));
            }
        }
        for (i, v) in self.b_item.iter().enumerate() {
            if !v.is_finite() {
                return Some(format!("b_item[{i}]"));
            }
        }
        for ((u, f), v) in self.p.indexed_iter() {
            if !v.is_finite() {
                return Some(format!("p[{u},{f}]"));
            }
        }
        for ((i, f), v) in self.q_items.indexed_iter() {
            if !v.is_finite() {
                return Some(format!("q[{f},{i}]"));
            }
        }
        None
    }
}

impl Predictor for MfModel {
    fn predict(&self, user: usize, item: usize) -> Result<f64> {
        if user >= self.b_user.len() {
            return Err(Error::Index {
                what: "user",
                index: user,
                len: self.b_user.len(),
            });
        }
        if item >= self.b_item.len() {
            return Err(Error::Index {
                what: "item",
                index: item,
                len: self.b_item.len(),
            });
        }
        let raw = match (self.seen_user[user], self.seen_item[item]) {
            (true, true) => self.raw_score(user, item),
            (false, true) => self.cold_base() + self.b_item[item],
            (true, false) => self.cold_base() + self.b_user[user],
            (false, false) => self.cold_base(),
        };
        Ok(if self.clamp_predictions {
            raw.clamp(self.scale_min, self.scale_max)
        } else {
            raw
        })
    }
}
