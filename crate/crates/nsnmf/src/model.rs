//! The layered semi-nonnegative factorization model with bias terms,
//! prediction, and the per-rating SGD trainer with AdaGrad step sizes.
//!
//! A rating is scored as
//!
//! ```text
//! r_hat(u, i) = mu + b_user[u] + b_item[i] + p_u . g(S_2 g(S_3 ... g(S_f q_i)))
//! ```
//!
//! where `q_i` (the deepest item vector) is constrained non-negative and
//! everything else is free-signed. The trainer visits observed ratings one at
//! a time; for each visit it computes all gradients from the parameter values
//! at call entry and applies the updates in a fixed order (user bias, item
//! bias, user row, weight layers, item column). Updates to a weight entry are
//! kept only if the affected activated feature for the current item stays
//! positive; updates to an item-column entry are kept only if the candidate
//! value itself is positive, which preserves the non-negativity constraint.

use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::activation::ActivationKind;
use crate::data::{DatasetView, RatingTriple};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Anything that can score a (user, item) pair on dense indices.
pub trait Predictor {
    fn predict(&self, user: usize, item: usize) -> Result<f64>;
}

/// Early-stopping policy: monitor a held-out slice of the training view and
/// stop once it stops improving.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EarlyStop {
    pub holdout_fraction: f64,
    pub patience: usize,
    pub min_delta: f64,
}

impl Default for EarlyStop {
    fn default() -> Self {
        EarlyStop {
            holdout_fraction: 0.05,
            patience: 5,
            min_delta: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Base learning rate.
    pub eta: f64,
    /// L2 regularization strength.
    pub lambda: f64,
    /// Layer widths `[k, l, ...]`: the user matrix is n x k, each weight
    /// layer maps the next width up, and the deepest item matrix has the
    /// last width. At least two entries.
    pub dims: Vec<usize>,
    pub epochs: usize,
    pub seed: u64,
    pub activation: ActivationKind,
    pub adagrad_epsilon: f64,
    /// Clip predictions to the rating scale at evaluation time. Training
    /// residuals always use the unclipped score.
    pub clamp_predictions: bool,
    /// Include the mu + b_u + b_i offset in the score and update the biases.
    pub use_bias: bool,
    /// Per-parameter AdaGrad step sizes; plain SGD when false (diagnostic
    /// mode, leaves the accumulators untouched).
    pub use_adagrad: bool,
    pub early_stop: Option<EarlyStop>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            eta: 0.01,
            lambda: 0.1,
            dims: vec![8, 8],
            epochs: 50,
            seed: 42,
            activation: ActivationKind::Relu,
            adagrad_epsilon: 1e-8,
            clamp_predictions: true,
            use_bias: true,
            use_adagrad: true,
            early_stop: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) {
            return Err(Error::Config(format!("eta must be > 0, got {}", self.eta)));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::Config(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.dims.len() < 2 {
            return Err(Error::Config(format!(
                "dims needs at least two layer widths, got {:?}",
                self.dims
            )));
        }
        if self.dims.iter().any(|&d| d == 0) {
            return Err(Error::Config(format!(
                "layer widths must be >= 1, got {:?}",
                self.dims
            )));
        }
        if !(self.adagrad_epsilon > 0.0) {
            return Err(Error::Config("adagrad_epsilon must be > 0".into()));
        }
        if let Some(es) = &self.early_stop {
            if !(es.holdout_fraction > 0.0 && es.holdout_fraction < 1.0) {
                return Err(Error::Config(
                    "early-stop holdout fraction must be in (0, 1)".into(),
                ));
            }
        }
        Ok(())
    }

    /// Number of weight layers (S matrices).
    pub fn n_weight_layers(&self) -> usize {
        self.dims.len() - 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NsnmfModel {
    /// Global offset; the training-set mean when biases are enabled, 0
    /// otherwise.
    pub mu: f64,
    pub b_user: Vec<f64>,
    pub b_item: Vec<f64>,
    /// n x k user matrix.
    pub p: Array2<f64>,
    /// Weight layers; `s[j]` has shape `dims[j] x dims[j+1]`.
    pub s: Vec<Array2<f64>>,
    /// m x dims.last() item matrix, one row per item (the deepest item
    /// factor, stored transposed for contiguous item access). Non-negative
    /// at all times.
    pub q_items: Array2<f64>,
    pub dims: Vec<usize>,
    pub activation: ActivationKind,
    pub use_bias: bool,
    pub clamp_predictions: bool,
    pub scale_min: f64,
    pub scale_max: f64,
    /// Training-set mean rating, kept for cold-start fallbacks even when the
    /// score itself carries no bias terms.
    pub train_mean: f64,
    pub seen_user: Vec<bool>,
    pub seen_item: Vec<bool>,
}

/// Per-parameter accumulated squared gradients, mirroring every trainable
/// field of the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaGradState {
    pub b_user: Vec<f64>,
    pub b_item: Vec<f64>,
    pub p: Array2<f64>,
    pub s: Vec<Array2<f64>>,
    pub q_items: Array2<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    pub epoch_train_rmse: Vec<f64>,
    /// Holdout RMSE per epoch when early stopping is enabled.
    pub holdout_rmse: Vec<f64>,
    pub epochs_run: usize,
    pub wall_secs: f64,
    pub config: TrainConfig,
    pub seed: u64,
}

/// Outcome of one conditional parameter update, for inspection in tests.
#[derive(Debug, Clone, Copy)]
pub struct UpdateDecision {
    pub layer: usize,
    pub row: usize,
    pub col: usize,
    pub candidate: f64,
    /// For weight entries: the affected activated feature value had the
    /// candidate been applied. For item entries: the candidate itself.
    pub check_value: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, Default)]
pub struct StepTrace {
    pub residual: f64,
    pub s_decisions: Vec<UpdateDecision>,
    pub q_decisions: Vec<UpdateDecision>,
}

/// Reusable per-step buffers for the layered forward/backward pass.
struct Scratch {
    /// xs[0] = top activated features (length k) ... xs[L] = item row.
    xs: Vec<Vec<f64>>,
    /// zs[j] = pre-activation producing xs[j], j in 0..L.
    zs: Vec<Vec<f64>>,
    /// delta[j] = d r_hat / d xs[j].
    delta: Vec<Vec<f64>>,
    p_row: Vec<f64>,
}

impl Scratch {
    fn new(dims: &[usize]) -> Self {
        Scratch {
            xs: dims.iter().map(|&d| vec![0.0; d]).collect(),
            zs: dims[..dims.len() - 1].iter().map(|&d| vec![0.0; d]).collect(),
            delta: dims.iter().map(|&d| vec![0.0; d]).collect(),
            p_row: vec![0.0; dims[0]],
        }
    }
}

/// Initialize a model and its AdaGrad state from a training view. Factor
/// entries are drawn i.i.d. uniform on (0, 1] from `SplitMix64::new(seed)` in
/// a fixed order (user matrix row-major, then each weight layer row-major,
/// then the item matrix item-major); biases start at zero and `mu` at the
/// training-set mean.
pub fn init(config: &TrainConfig, train: &DatasetView) -> Result<(NsnmfModel, AdaGradState)> {
    config.validate()?;
    init_with_rng(config, train, SplitMix64::new(config.seed))
}

fn init_with_rng(
    config: &TrainConfig,
    train: &DatasetView,
    mut rng: SplitMix64,
) -> Result<(NsnmfModel, AdaGradState)> {
    if train.is_empty() {
        return Err(Error::EmptyDataset("training view is empty".into()));
    }
    let source = train.source();
    let n = source.n_users();
    let m = source.n_items();
    let dims = &config.dims;
    let k = dims[0];
    let deepest = *dims.last().expect("validated");

    let mut p = Array2::zeros((n, k));
    for u in 0..n {
        for f in 0..k {
            p[[u, f]] = rng.next_f64_open_closed();
        }
    }
    let mut s = Vec::with_capacity(dims.len() - 1);
    for j in 0..dims.len() - 1 {
        let mut layer = Array2::zeros((dims[j], dims[j + 1]));
        for r in 0..dims[j] {
            for c in 0..dims[j + 1] {
                layer[[r, c]] = rng.next_f64_open_closed();
            }
        }
        s.push(layer);
    }
    let mut q_items = Array2::zeros((m, deepest));
    for i in 0..m {
        for c in 0..deepest {
            q_items[[i, c]] = rng.next_f64_open_closed();
        }
    }

    let train_mean = train.mean_rating();
    let (seen_user, seen_item) = train.coverage();
    let (scale_min, scale_max) = source.scale();
    let model = NsnmfModel {
        mu: if config.use_bias { train_mean } else { 0.0 },
        b_user: vec![0.0; n],
        b_item: vec![0.0; m],
        p,
        s,
        q_items,
        dims: dims.clone(),
        activation: config.activation,
        use_bias: config.use_bias,
        clamp_predictions: config.clamp_predictions,
        scale_min,
        scale_max,
        train_mean,
        seen_user,
        seen_item,
    };
    let ada = AdaGradState {
        b_user: vec![0.0; n],
        b_item: vec![0.0; m],
        p: Array2::zeros((n, k)),
        s: model.s.iter().map(|l| Array2::zeros(l.dim())).collect(),
        q_items: Array2::zeros((m, deepest)),
    };
    Ok((model, ada))
}

impl NsnmfModel {
    pub fn n_users(&self) -> usize {
        self.b_user.len()
    }

    pub fn n_items(&self) -> usize {
        self.b_item.len()
    }

    /// Forward pass for one item: fills `zs`/`xs` and returns nothing; the
    /// top activated feature vector ends up in `xs[0]`.
    fn forward_item(&self, item: usize, scratch: &mut Scratch) {
        let layers = self.s.len();
        let q_row = self.q_items.row(item);
        scratch.xs[layers]
            .iter_mut()
            .zip(q_row.iter())
            .for_each(|(dst, &v)| *dst = v);
        for j in (0..layers).rev() {
            let (head, tail) = scratch.xs.split_at_mut(j + 1);
            let x_in = &tail[0];
            let x_out = &mut head[j];
            let z = &mut scratch.zs[j];
            let s = &self.s[j];
            for r in 0..z.len() {
                let mut acc = 0.0;
                for (c, xv) in x_in.iter().enumerate() {
                    acc += s[[r, c]] * xv;
                }
                z[r] = acc;
                x_out[r] = self.activation.eval(acc);
            }
        }
    }

    /// Unclipped score with no cold-start handling; valid for any in-range
    /// pair regardless of training coverage.
    pub fn raw_score(&self, user: usize, item: usize) -> f64 {
        let mut scratch = Scratch::new(&self.dims);
        self.raw_score_with(user, item, &mut scratch)
    }

    fn raw_score_with(&self, user: usize, item: usize, scratch: &mut Scratch) -> f64 {
        self.forward_item(item, scratch);
        let mut dot = 0.0;
        for (f, x) in scratch.xs[0].iter().enumerate() {
            dot += self.p[[user, f]] * x;
        }
        if self.use_bias {
            self.mu + self.b_user[user] + self.b_item[item] + dot
        } else {
            dot
        }
    }

    /// Global fallback value for pairs with no usable interaction term.
    fn cold_base(&self) -> f64 {
        if self.use_bias {
            self.mu
        } else {
            self.train_mean
        }
    }

    /// Item feature representations for the whole catalog: the deepest
    /// non-negative factor (`dims.last() x m`) and the top activated features
    /// entering the interaction (`k x m`).
    pub fn item_representation(&self) -> ItemRepresentation {
        let m = self.n_items();
        let k = self.dims[0];
        let deepest = *self.dims.last().expect("validated");
        let mut scratch = Scratch::new(&self.dims);
        let mut top = Array2::zeros((k, m));
        let mut deep = Array2::zeros((deepest, m));
        for i in 0..m {
            self.forward_item(i, &mut scratch);
            for r in 0..k {
                top[[r, i]] = scratch.xs[0][r];
            }
            for r in 0..deepest {
                deep[[r, i]] = self.q_items[[i, r]];
            }
        }
        ItemRepresentation {
            activated: top,
            deepest: deep,
        }
    }

    pub fn min_q_entry(&self) -> f64 {
        self.q_items.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn first_non_finite_param(&self) -> Option<String> {
        if !self.mu.is_finite() {
            return Some("mu".into());
        }
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
        for (j, layer) in self.s.iter().enumerate() {
            for ((r, c), v) in layer.indexed_iter() {
                if !v.is_finite() {
                    return Some(format!("s{}[{r},{c}]", j + 2));
                }
            }
        }
        for ((i, c), v) in self.q_items.indexed_iter() {
            if !v.is_finite() {
                return Some(format!("q[{c},{i}]"));
            }
        }
        None
    }
}

impl Predictor for NsnmfModel {
    /// Score with cold-start fallbacks: an unseen user falls back to
    /// mu + b_item, an unseen item to mu + b_user, both to the global mean;
    /// clipped to the rating scale when configured.
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

/// Item representations exposed to the clustering study.
#[derive(Debug, Clone)]
pub struct ItemRepresentation {
    /// k x m top-layer activated features (the vectors entering the
    /// interaction).
    pub activated: Array2<f64>,
    /// dims.last() x m deepest non-negative factor.
    pub deepest: Array2<f64>,
}

/// One stochastic update for a single observed rating, applying the bias,
/// user-row, weight-layer, and item-column updates in that order. All
/// gradients are computed from the parameter values at call entry.
pub fn sgd_step(
    model: &mut NsnmfModel,
    ada: &mut AdaGradState,
    triple: RatingTriple,
    config: &TrainConfig,
) -> Result<()> {
    let mut scratch = Scratch::new(&model.dims);
    sgd_step_impl(model, ada, triple, config, &mut scratch, None).map(|_| ())
}

/// As [`sgd_step`], additionally reporting every conditional-update decision.
pub fn sgd_step_traced(
    model: &mut NsnmfModel,
    ada: &mut AdaGradState,
    triple: RatingTriple,
    config: &TrainConfig,
) -> Result<StepTrace> {
    let mut scratch = Scratch::new(&model.dims);
    let mut trace = StepTrace::default();
    sgd_step_impl(model, ada, triple, config, &mut scratch, Some(&mut trace))?;
    Ok(trace)
}

fn sgd_step_impl(
    model: &mut NsnmfModel,
    ada: &mut AdaGradState,
    triple: RatingTriple,
    config: &TrainConfig,
    scratch: &mut Scratch,
    mut trace: Option<&mut StepTrace>,
) -> Result<f64> {
    let u = triple.user as usize;
    let i = triple.item as usize;
    let r_hat = model.raw_score_with(u, i, scratch);
    let err = triple.rating - r_hat;
    if !err.is_finite() {
        return Err(Error::Divergence {
            param: format!("prediction for user {u}, item {i}"),
            epoch: 0,
            step: 0,
        });
    }
    if let Some(t) = trace.as_deref_mut() {
        t.residual = err;
    }

    let eta = config.eta;
    let lambda = config.lambda;
    let eps = config.adagrad_epsilon;
    let layers = model.s.len();
    let act = model.activation;

    // Effective step size: plain eta, or AdaGrad with the squared raw
    // gradient accumulated before each update.
    macro_rules! step_of {
        ($acc:expr, $grad:expr) => {{
            if config.use_adagrad {
                *$acc += $grad * $grad;
                eta / ($acc.sqrt() + eps)
            } else {
                eta
            }
        }};
    }

    scratch.p_row.clear();
    scratch
        .p_row
        .extend((0..model.dims[0]).map(|f| model.p[[u, f]]));

    // Backward sweep from the top: delta[j] = d r_hat / d xs[j], computed
    // entirely from entry values before any update lands.
    scratch.delta[0].copy_from_slice(&scratch.p_row);
    for j in 0..layers {
        // Reuse delta[j] as dz in place: dz_j = delta_j * g'(z_j).
        for r in 0..scratch.delta[j].len() {
            scratch.delta[j][r] *= act.eval_derivative(scratch.zs[j][r]);
        }
        let (head, tail) = scratch.delta.split_at_mut(j + 1);
        let dz = &head[j];
        let next = &mut tail[0];
        let s = &model.s[j];
        for c in 0..next.len() {
            let mut acc = 0.0;
            for (r, dzr) in dz.iter().enumerate() {
                acc += s[[r, c]] * dzr;
            }
            next[c] = acc;
        }
    }

    if model.use_bias {
        let g = err - lambda * model.b_user[u];
        let step = step_of!(&mut ada.b_user[u], g);
        model.b_user[u] += step * g;

        let g = err - lambda * model.b_item[i];
        let step = step_of!(&mut ada.b_item[i], g);
        model.b_item[i] += step * g;
    }

    for f in 0..model.dims[0] {
        let g = err * scratch.xs[0][f] - lambda * scratch.p_row[f];
        let step = step_of!(&mut ada.p[[u, f]], g);
        model.p[[u, f]] += step * g;
    }

    // Conditional parameters accumulate their squared gradient only when the
    // update lands; a rejected candidate leaves both the entry and its
    // accumulator untouched.
    macro_rules! conditional_step {
        ($acc:expr, $grad:expr, $old:expr) => {{
            if config.use_adagrad {
                let next = *$acc + $grad * $grad;
                let step = eta / (next.sqrt() + eps);
                (next, $old + step * $grad)
            } else {
                (*$acc, $old + eta * $grad)
            }
        }};
    }

    // Weight layers: entry (r, c) of layer j moves only if the r-th
    // activated feature for this item stays positive with the candidate
    // value substituted (everything else at entry values).
    for j in 0..layers {
        let vacuous = act.always_positive();
        for r in 0..model.dims[j] {
            let dz = scratch.delta[j][r];
            for c in 0..model.dims[j + 1] {
                let x_in = scratch.xs[j + 1][c];
                let old = model.s[j][[r, c]];
                let g = err * dz * x_in - lambda * old;
                let acc = &mut ada.s[j][[r, c]];
                let (next_acc, candidate) = conditional_step!(acc, g, old);
                let (accepted, check) = if vacuous {
                    (true, f64::INFINITY)
                } else {
                    let z_new = scratch.zs[j][r] + (candidate - old) * x_in;
                    (act.eval(z_new) > 0.0, act.eval(z_new))
                };
                if accepted {
                    model.s[j][[r, c]] = candidate;
                    *acc = next_acc;
                }
                if let Some(t) = trace.as_deref_mut() {
                    t.s_decisions.push(UpdateDecision {
                        layer: j,
                        row: r,
                        col: c,
                        candidate,
                        check_value: check,
                        accepted,
                    });
                }
            }
        }
    }

    // Deepest item column: candidates must stay strictly positive.
    for c in 0..*model.dims.last().expect("validated") {
        let old = model.q_items[[i, c]];
        let g = err * scratch.delta[layers][c] - lambda * old;
        let acc = &mut ada.q_items[[i, c]];
        let (next_acc, candidate) = conditional_step!(acc, g, old);
        let accepted = candidate > 0.0;
        if accepted {
            model.q_items[[i, c]] = candidate;
            *acc = next_acc;
        }
        if let Some(t) = trace.as_deref_mut() {
            t.q_decisions.push(UpdateDecision {
                layer: layers,
                row: c,
                col: i,
                candidate,
                check_value: candidate,
                accepted,
            });
        }
    }

    Ok(err)
}

/// Train a model on a view: `epochs` passes, each visiting every training
/// triple in a freshly seeded-shuffled order. Returns the model and a
/// per-epoch report. Deterministic in (view, config).
pub fn train(view: &DatasetView, config: &TrainConfig) -> Result<(NsnmfModel, TrainReport)> {
    config.validate()?;
    let started = Instant::now();

    // Independent sub-streams derived from the config seed: one for
    // parameter init, one for the early-stop holdout, one per epoch shuffle.
    let mut seq = SplitMix64::new(config.seed);
    let init_rng = seq.fork();
    let holdout_seed = seq.next_u64();

    let (fit_indices, holdout_indices): (Vec<u32>, Vec<u32>) = match &config.early_stop {
        Some(es) => {
            let mut idx: Vec<u32> = view.triple_indices().to_vec();
            SplitMix64::new(holdout_seed).shuffle(&mut idx);
            let n_holdout = ((idx.len() as f64) * es.holdout_fraction).floor() as usize;
            let n_holdout = n_holdout.max(1).min(idx.len().saturating_sub(1));
            let holdout = idx.split_off(idx.len() - n_holdout);
            (idx, holdout)
        }
        None => (view.triple_indices().to_vec(), Vec::new()),
    };

    let source = view.source();
    let triples = source.triples();
    let (mut model, mut ada) = init_with_rng(config, view, init_rng)?;

    let mut scratch = Scratch::new(&config.dims);
    let mut order = fit_indices.clone();
    let mut epoch_train_rmse = Vec::with_capacity(config.epochs);
    let mut holdout_rmse: Vec<f64> = Vec::new();
    let mut best_holdout = f64::INFINITY;
    let mut stale_epochs = 0usize;

    for epoch in 0..config.epochs {
        let shuffle_seed = seq.next_u64();
        order.copy_from_slice(&fit_indices);
        SplitMix64::new(shuffle_seed).shuffle(&mut order);

        let mut sse = 0.0;
        for (step, &ti) in order.iter().enumerate() {
            let triple = triples[ti as usize];
            let err = sgd_step_impl(&mut model, &mut ada, triple, config, &mut scratch, None)
                .map_err(|e| match e {
                    Error::Divergence { param, .. } => Error::Divergence {
                        param,
                        epoch: epoch + 1,
                        step: step + 1,
                    },
                    other => other,
                })?;
            sse += err * err;
        }
        epoch_train_rmse.push((sse / order.len() as f64).sqrt());

        if let Some(param) = model.first_non_finite_param() {
            return Err(Error::Divergence {
                param,
                epoch: epoch + 1,
                step: order.len(),
            });
        }
        debug_assert!(model.min_q_entry() >= 0.0);

        if let Some(es) = &config.early_stop {
            let mut sse = 0.0;
            for &ti in &holdout_indices {
                let t = triples[ti as usize];
                let e = t.rating - model.raw_score_with(t.user as usize, t.item as usize, &mut scratch);
                sse += e * e;
            }
            let rmse = (sse / holdout_indices.len() as f64).sqrt();
            holdout_rmse.push(rmse);
            if rmse < best_holdout - es.min_delta {
                best_holdout = rmse;
                stale_epochs = 0;
            } else {
                stale_epochs += 1;
                if stale_epochs >= es.patience {
                    break;
                }
            }
        }
    }

    let epochs_run = epoch_train_rmse.len();
    let report = TrainReport {
        epoch_train_rmse,
        holdout_rmse,
        epochs_run,
        wall_secs: started.elapsed().as_secs_f64(),
        config: config.clone(),
        seed: config.seed,
    };
    Ok((model, report))
}

/// The regularized training objective: the sum of squared residuals over the
/// view (unclipped scores) plus `lambda` times the squared entries of every
/// trainable parameter except `mu`.
pub fn regularized_objective(model: &NsnmfModel, view: &DatasetView, lambda: f64) -> f64 {
    let mut scratch = Scratch::new(&model.dims);
    let mut sse = 0.0;
    for t in view.iter() {
        let e = t.rating - model.raw_score_with(t.user as usize, t.item as usize, &mut scratch);
        sse += e * e;
    }
    let mut reg = 0.0;
    reg += model.b_user.iter().map(|v| v * v).sum::<f64>();
    reg += model.b_item.iter().map(|v| v * v).sum::<f64>();
    reg += model.p.iter().map(|v| v * v).sum::<f64>();
    for layer in &model.s {
        reg += layer.iter().map(|v| v * v).sum::<f64>();
    }
    reg += model.q_items.iter().map(|v| v * v).sum::<f64>();
    sse + lambda * reg
}
