//! Two-layer GraphSAGE regressor with hand-written reverse-mode gradients.
//!
//! Each layer computes `h_i = ReLU(W_self' z_i + W_neigh' mean_{j in N(i)} z_j)`
//! with dropout after the activation in training mode; mean pooling over the
//! final node embeddings feeds a linear head that predicts one score per
//! graph. Training is full-batch MSE with Adam, deterministic for a fixed
//! seed.

mod adam;

pub use adam::{adam_step, AdamState};

use crate::error::GnnError;
use crate::features::NodeFeatureMatrix;
use crate::graph::DiscourseGraph;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Which neighbor set the mean aggregator uses on the directed graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborMode {
    /// Union of in- and out-neighbors (default).
    Undirected,
    InOnly,
    OutOnly,
}

/// Training hyperparameters. All values are recorded in run manifests and
/// checkpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Dropout rate in [0, 1), applied after each ReLU in TRAIN mode with
    /// inverted scaling.
    pub dropout: f64,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Multiplier on the Glorot uniform init bound sqrt(6/(fan_in+fan_out)).
    pub weight_init_scale: f64,
    pub neighbor_mode: NeighborMode,
    /// Weight the neighbor mean by edge weights instead of a plain mean.
    pub use_edge_weights: bool,
    /// Train against z-scored targets; predictions are mapped back.
    pub standardize_targets: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: 64,
            learning_rate: 1e-3,
            epochs: 200,
            dropout: 0.2,
            seed: 42,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            weight_init_scale: 1.0,
            neighbor_mode: NeighborMode::Undirected,
            use_edge_weights: false,
            standardize_targets: true,
        }
    }
}

/// Forward-pass mode; dropout only fires in `Train`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// One participant graph prepared for the GNN: node feature rows plus the
/// directed weighted edge list in node-index space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSample {
    pub features: Vec<Vec<f64>>,
    pub edges: Vec<(usize, usize, u32)>,
}

impl GraphSample {
    pub fn from_graph(graph: &DiscourseGraph, matrix: &NodeFeatureMatrix) -> Self {
        GraphSample {
            features: matrix.rows.clone(),
            edges: graph
                .edges()
                .map(|(src, dst, edge)| (src, dst, edge.weight))
                .collect(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.features.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    /// Drop the nodes selected by `remove` together with their incident
    /// edges, remapping indices.
    pub fn without_nodes(&self, remove: &[bool]) -> GraphSample {
        let mut remap = vec![usize::MAX; self.features.len()];
        let mut features = Vec::new();
        for (i, row) in self.features.iter().enumerate() {
            if !remove[i] {
                remap[i] = features.len();
                features.push(row.clone());
            }
        }
        let edges = self
            .edges
            .iter()
            .filter(|(s, d, _)| !remove[*s] && !remove[*d])
            .map(|&(s, d, w)| (remap[s], remap[d], w))
            .collect();
        GraphSample { features, edges }
    }
}

/// All learnable tensors of the two-layer model.
#[derive(Debug, Clone, PartialEq)]
pub struct SageParameters {
    /// input_dim x hidden.
    pub w1_self: DMatrix<f64>,
    pub w1_neigh: DMatrix<f64>,
    /// hidden x hidden.
    pub w2_self: DMatrix<f64>,
    pub w2_neigh: DMatrix<f64>,
    pub head_w: DVector<f64>,
    pub head_b: f64,
}

impl SageParameters {
    /// Glorot-uniform initialization, seeded.
    pub fn glorot(input_dim: usize, hidden: usize, scale: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut uniform = |rows: usize, cols: usize| {
            let bound = scale * (6.0 / (rows + cols) as f64).sqrt();
            DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-bound..=bound))
        };
        let w1_self = uniform(input_dim, hidden);
        let w1_neigh = uniform(input_dim, hidden);
        let w2_self = uniform(hidden, hidden);
        let w2_neigh = uniform(hidden, hidden);
        let head = uniform(hidden, 1);
        SageParameters {
            w1_self,
            w1_neigh,
            w2_self,
            w2_neigh,
            head_w: DVector::from_column_slice(head.as_slice()),
            head_b: 0.0,
        }
    }

    pub fn zeros_like(&self) -> Self {
        SageParameters {
            w1_self: DMatrix::zeros(self.w1_self.nrows(), self.w1_self.ncols()),
            w1_neigh: DMatrix::zeros(self.w1_neigh.nrows(), self.w1_neigh.ncols()),
            w2_self: DMatrix::zeros(self.w2_self.nrows(), self.w2_self.ncols()),
            w2_neigh: DMatrix::zeros(self.w2_neigh.nrows(), self.w2_neigh.ncols()),
            head_w: DVector::zeros(self.head_w.len()),
            head_b: 0.0,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1_self.nrows()
    }

    pub fn hidden(&self) -> usize {
        self.w1_self.ncols()
    }

    /// All parameters as one flat vector (fixed tensor order).
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        out.extend_from_slice(self.w1_self.as_slice());
        out.extend_from_slice(self.w1_neigh.as_slice());
        out.extend_from_slice(self.w2_self.as_slice());
        out.extend_from_slice(self.w2_neigh.as_slice());
        out.extend_from_slice(self.head_w.as_slice());
        out.push(self.head_b);
        out
    }

    /// Inverse of [`SageParameters::flatten`].
    pub fn assign_from_flat(&mut self, flat: &[f64]) {
        let mut offset = 0;
        for tensor in [
            &mut self.w1_self,
            &mut self.w1_neigh,
            &mut self.w2_self,
            &mut self.w2_neigh,
        ] {
            let len = tensor.len();
            tensor.as_mut_slice().copy_from_slice(&flat[offset..offset + len]);
            offset += len;
        }
        let len = self.head_w.len();
        self.head_w
            .as_mut_slice()
            .copy_from_slice(&flat[offset..offset + len]);
        offset += len;
        self.head_b = flat[offset];
    }
}

/// Normalized neighbor lists: `adj[i]` holds `(j, weight)` with weights
/// summing to 1, so aggregation is a (weighted) mean.
fn normalized_adjacency(sample: &GraphSample, cfg: &TrainConfig) -> Vec<Vec<(usize, f64)>> {
    let n = sample.node_count();
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut push = |from: usize, to: usize, weight: f64| {
        match adj[from].iter_mut().find(|(j, _)| *j == to) {
            Some(slot) => slot.1 += weight,
            None => adj[from].push((to, weight)),
        }
    };
    for &(src, dst, weight) in &sample.edges {
        let w = if cfg.use_edge_weights {
            f64::from(weight)
        } else {
            1.0
        };
        match cfg.neighbor_mode {
            NeighborMode::Undirected => {
                push(src, dst, w);
                push(dst, src, w);
            }
            NeighborMode::OutOnly => push(src, dst, w),
            NeighborMode::InOnly => push(dst, src, w),
        }
    }
    for neighbors in &mut adj {
        neighbors.sort_by_key(|&(j, _)| j);
        let total: f64 = neighbors.iter().map(|(_, w)| w).sum();
        if total > 0.0 {
            for slot in neighbors.iter_mut() {
                slot.1 /= total;
            }
        }
    }
    adj
}

fn aggregate(adj: &[Vec<(usize, f64)>], z: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(z.nrows(), z.ncols());
    for (i, neighbors) in adj.iter().enumerate() {
        for &(j, w) in neighbors {
            for c in 0..z.ncols() {
                out[(i, c)] += w * z[(j, c)];
            }
        }
    }
    out
}

/// Scatter gradients back through the aggregation: out = M' z where M is
/// the normalized adjacency operator used by [`aggregate`].
fn aggregate_transpose(adj: &[Vec<(usize, f64)>], z: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(z.nrows(), z.ncols());
    for (i, neighbors) in adj.iter().enumerate() {
        for &(j, w) in neighbors {
            for c in 0..z.ncols() {
                out[(j, c)] += w * z[(i, c)];
            }
        }
    }
    out
}

fn relu_inplace(m: &mut DMatrix<f64>) {
    for v in m.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Inverted-scaling dropout mask: entries are 0 or 1/(1-p).
fn dropout_mask(rows: usize, cols: usize, rate: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let keep = 1.0 - rate;
    DMatrix::from_fn(rows, cols, |_, _| {
        if rng.gen::<f64>() < keep {
            1.0 / keep
        } else {
            0.0
        }
    })
}

struct Tape {
    adj: Vec<Vec<(usize, f64)>>,
    x: DMatrix<f64>,
    agg1: DMatrix<f64>,
    pre1: DMatrix<f64>,
    h1: DMatrix<f64>,
    mask1: Option<DMatrix<f64>>,
    agg2: DMatrix<f64>,
    pre2: DMatrix<f64>,
    mask2: Option<DMatrix<f64>>,
    readout: DVector<f64>,
    prediction: f64,
}

fn check_sample(sample: &GraphSample, params: &SageParameters) -> Result<(), GnnError> {
    let n = sample.node_count();
    if n == 0 {
        return Err(GnnError::EmptyGraph);
    }
    for row in &sample.features {
        if row.len() != params.input_dim() {
            return Err(GnnError::FeatureWidthMismatch {
                expected: params.input_dim(),
                found: row.len(),
            });
        }
    }
    for &(src, dst, _) in &sample.edges {
        if src >= n || dst >= n {
            return Err(GnnError::ShapeMismatch {
                rows: src.max(dst) + 1,
                nodes: n,
            });
        }
    }
    Ok(())
}

fn forward_tape(
    params: &SageParameters,
    sample: &GraphSample,
    cfg: &TrainConfig,
    mode: Mode,
    mask_seed: u64,
) -> Result<Tape, GnnError> {
    check_sample(sample, params)?;
    let n = sample.node_count();
    let d = params.input_dim();
    let hidden = params.hidden();
    let x = DMatrix::from_fn(n, d, |i, j| sample.features[i][j]);
    let adj = normalized_adjacency(sample, cfg);

    let with_dropout = mode == Mode::Train && cfg.dropout > 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(mask_seed);

    let agg1 = aggregate(&adj, &x);
    let pre1 = &x * &params.w1_self + &agg1 * &params.w1_neigh;
    let mut h1 = pre1.clone();
    relu_inplace(&mut h1);
    let mask1 = if with_dropout {
        let mask = dropout_mask(n, hidden, cfg.dropout, &mut rng);
        h1.component_mul_assign(&mask);
        Some(mask)
    } else {
        None
    };

    let agg2 = aggregate(&adj, &h1);
    let pre2 = &h1 * &params.w2_self + &agg2 * &params.w2_neigh;
    let mut h2 = pre2.clone();
    relu_inplace(&mut h2);
    let mask2 = if with_dropout {
        let mask = dropout_mask(n, hidden, cfg.dropout, &mut rng);
        h2.component_mul_assign(&mask);
        Some(mask)
    } else {
        None
    };

    let readout = DVector::from_fn(hidden, |c, _| h2.column(c).sum() / n as f64);
    let prediction = params.head_w.dot(&readout) + params.head_b;

    Ok(Tape {
        adj,
        x,
        agg1,
        pre1,
        h1,
        mask1,
        agg2,
        pre2,
        mask2,
        readout,
        prediction,
    })
}

/// Forward pass producing the graph-level prediction. Dropout masks are
/// drawn from `mask_seed` in TRAIN mode and ignored in EVAL mode.
pub fn forward(
    params: &SageParameters,
    sample: &GraphSample,
    cfg: &TrainConfig,
    mode: Mode,
    mask_seed: u64,
) -> Result<f64, GnnError> {
    Ok(forward_tape(params, sample, cfg, mode, mask_seed)?.prediction)
}

/// Deterministic EVAL-mode forward pass.
pub fn predict(
    params: &SageParameters,
    sample: &GraphSample,
    cfg: &TrainConfig,
) -> Result<f64, GnnError> {
    forward(params, sample, cfg, Mode::Eval, 0)
}

/// Mean squared error over the batch and its exact reverse-mode gradients,
/// under the dropout masks drawn for this `mask_seed`.
pub fn loss_and_gradients(
    batch: &[(&GraphSample, f64)],
    params: &SageParameters,
    cfg: &TrainConfig,
    mask_seed: u64,
) -> Result<(f64, SageParameters), GnnError> {
    if batch.is_empty() {
        return Err(GnnError::EmptyBatch);
    }
    let mut grads = params.zeros_like();
    let mut mse = 0.0;
    let b = batch.len() as f64;

    for (index, (sample, target)) in batch.iter().enumerate() {
        if !target.is_finite() {
            return Err(GnnError::NonFiniteTarget);
        }
        let tape = forward_tape(
            params,
            sample,
            cfg,
            Mode::Train,
            mix_seed(mask_seed, index as u64),
        )?;
        let residual = tape.prediction - target;
        mse += residual * residual / b;
        let g = 2.0 * residual / b;

        let n = tape.x.nrows();
        grads.head_b += g;
        grads.head_w.axpy(g, &tape.readout, 1.0);

        // d loss / d h2 rows: head through the mean readout.
        let mut d_h2 = DMatrix::from_fn(n, params.hidden(), |_, c| {
            g * params.head_w[c] / n as f64
        });
        if let Some(mask) = &tape.mask2 {
            d_h2.component_mul_assign(mask);
        }
        let d_pre2 = apply_relu_grad(d_h2, &tape.pre2);

        grads.w2_self += tape.h1.transpose() * &d_pre2;
        grads.w2_neigh += tape.agg2.transpose() * &d_pre2;

        let mut d_h1 = &d_pre2 * params.w2_self.transpose();
        let d_agg2 = &d_pre2 * params.w2_neigh.transpose();
        d_h1 += aggregate_transpose(&tape.adj, &d_agg2);
        if let Some(mask) = &tape.mask1 {
            d_h1.component_mul_assign(mask);
        }
        let d_pre1 = apply_relu_grad(d_h1, &tape.pre1);

        grads.w1_self += tape.x.transpose() * &d_pre1;
        grads.w1_neigh += tape.agg1.transpose() * &d_pre1;
    }

    Ok((mse, grads))
}

fn apply_relu_grad(mut upstream: DMatrix<f64>, pre: &DMatrix<f64>) -> DMatrix<f64> {
    for (slot, &p) in upstream.iter_mut().zip(pre.iter()) {
        if p <= 0.0 {
            *slot = 0.0;
        }
    }
    upstream
}

fn mix_seed(a: u64, b: u64) -> u64 {
    // splitmix64 over the combined value.
    let mut z = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A trained model plus the target scaling needed to undo the internal
/// z-scoring at prediction time.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub params: SageParameters,
    pub config: TrainConfig,
    pub target_mean: f64,
    pub target_std: f64,
    /// Per-epoch MSE on the (standardized) training targets, evaluated
    /// before each update step.
    pub loss_history: Vec<f64>,
}

impl TrainedModel {
    pub fn predict(&self, sample: &GraphSample) -> Result<f64, GnnError> {
        let raw = predict(&self.params, sample, &self.config)?;
        Ok(raw * self.target_std + self.target_mean)
    }
}

/// Full-batch training for `cfg.epochs` epochs, deterministic per seed
/// (initialization and per-epoch dropout masks both derive from it).
pub fn train(dataset: &[(GraphSample, f64)], cfg: &TrainConfig) -> Result<TrainedModel, GnnError> {
    if dataset.is_empty() {
        return Err(GnnError::EmptyBatch);
    }
    if dataset.iter().any(|(_, y)| !y.is_finite()) {
        return Err(GnnError::NonFiniteTarget);
    }
    let input_dim = dataset[0].0.feature_dim();

    let (target_mean, target_std) = if cfg.standardize_targets {
        let mean = dataset.iter().map(|(_, y)| y).sum::<f64>() / dataset.len() as f64;
        let var = dataset
            .iter()
            .map(|(_, y)| (y - mean).powi(2))
            .sum::<f64>()
            / dataset.len() as f64;
        let std = var.sqrt();
        (mean, if std > 1e-9 { std } else { 1.0 })
    } else {
        (0.0, 1.0)
    };

    let batch: Vec<(&GraphSample, f64)> = dataset
        .iter()
        .map(|(sample, y)| (sample, (y - target_mean) / target_std))
        .collect();

    let mut params = SageParameters::glorot(
        input_dim,
        cfg.hidden,
        cfg.weight_init_scale,
        mix_seed(cfg.seed, 0x1217),
    );
    let mut state = AdamState::new(&params);
    let mut loss_history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let (mse, grads) =
            loss_and_gradients(&batch, &params, cfg, mix_seed(cfg.seed, epoch as u64 + 1))?;
        if !mse.is_finite() {
            return Err(GnnError::Divergence { epoch });
        }
        loss_history.push(mse);
        adam_step(&mut params, &grads, &mut state, cfg);
    }

    Ok(TrainedModel {
        params,
        config: *cfg,
        target_mean,
        target_std,
        loss_history,
    })
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    version: String,
    input_dim: usize,
    hidden: usize,
    config: TrainConfig,
    target_mean: f64,
    target_std: f64,
    loss_history: Vec<f64>,
    w1_self: Vec<Vec<f64>>,
    w1_neigh: Vec<Vec<f64>>,
    w2_self: Vec<Vec<f64>>,
    w2_neigh: Vec<Vec<f64>>,
    head_w: Vec<f64>,
    head_b: f64,
}

const CHECKPOINT_VERSION: &str = "sage-checkpoint/1";

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

fn rows_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(r, c, |i, j| rows[i][j])
}

impl TrainedModel {
    pub fn to_json(&self) -> String {
        let file = CheckpointFile {
            version: CHECKPOINT_VERSION.to_string(),
            input_dim: self.params.input_dim(),
            hidden: self.params.hidden(),
            config: self.config,
            target_mean: self.target_mean,
            target_std: self.target_std,
            loss_history: self.loss_history.clone(),
            w1_self: matrix_rows(&self.params.w1_self),
            w1_neigh: matrix_rows(&self.params.w1_neigh),
            w2_self: matrix_rows(&self.params.w2_self),
            w2_neigh: matrix_rows(&self.params.w2_neigh),
            head_w: self.params.head_w.iter().copied().collect(),
            head_b: self.params.head_b,
        };
        serde_json::to_string_pretty(&file).expect("checkpoint serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let file: CheckpointFile = serde_json::from_str(text)?;
        Ok(TrainedModel {
            params: SageParameters {
                w1_self: rows_matrix(&file.w1_self),
                w1_neigh: rows_matrix(&file.w1_neigh),
                w2_self: rows_matrix(&file.w2_self),
                w2_neigh: rows_matrix(&file.w2_neigh),
                head_w: DVector::from_vec(file.head_w),
                head_b: file.head_b,
            },
            config: file.config,
            target_mean: file.target_mean,
            target_std: file.target_std,
            loss_history: file.loss_history,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg(hidden: usize) -> TrainConfig {
        TrainConfig {
            hidden,
            dropout: 0.0,
            ..TrainConfig::default()
        }
    }

    fn path_sample(n: usize, dim: usize) -> GraphSample {
        let features = (0..n)
            .map(|i| (0..dim).map(|j| ((i * 7 + j * 3) % 5) as f64 / 4.0).collect())
            .collect();
        let edges = (0..n.saturating_sub(1)).map(|i| (i, i + 1, 1)).collect();
        GraphSample { features, edges }
    }

    #[test]
    fn zero_parameters_predict_bias() {
        let sample = path_sample(4, 3);
        let params = SageParameters::glorot(3, 2, 1.0, 1).zeros_like();
        let mut with_bias = params.clone();
        with_bias.head_b = 4.25;
        let c = cfg(2);
        assert_eq!(predict(&with_bias, &sample, &c).unwrap(), 4.25);
    }

    #[test]
    fn isolated_node_uses_zero_neighbor_term() {
        // One node, no edges: h = relu(W_self' x) through both layers.
        let sample = GraphSample {
            features: vec![vec![1.0, 2.0]],
            edges: vec![],
        };
        let c = cfg(2);
        let params = SageParameters::glorot(2, 2, 1.0, 5);
        let got = predict(&params, &sample, &c).unwrap();

        let x = DVector::from_column_slice(&[1.0, 2.0]);
        let relu = |v: DVector<f64>| v.map(|e| e.max(0.0));
        let h1 = relu(params.w1_self.transpose() * &x);
        let h2 = relu(params.w2_self.transpose() * &h1);
        let expected = params.head_w.dot(&h2) + params.head_b;
        assert_relative_eq!(got, expected, epsilon = 1e-12);
    }

    #[test]
    fn hand_evaluated_two_node_forward() {
        // H = 2, d = 1, two connected nodes with features 1 and 3.
        let sample = GraphSample {
            features: vec![vec![1.0], vec![3.0]],
            edges: vec![(0, 1, 1)],
        };
        let params = SageParameters {
            w1_self: DMatrix::from_row_slice(1, 2, &[0.5, -0.25]),
            w1_neigh: DMatrix::from_row_slice(1, 2, &[0.1, 0.2]),
            w2_self: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]),
            w2_neigh: DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 0.0]),
            head_w: DVector::from_column_slice(&[1.0, 1.0]),
            head_b: 0.5,
        };
        // Node 0: self 1, neighbor mean 3 -> pre1 = [0.5 + 0.3, -0.25 + 0.6] = [0.8, 0.35]
        // Node 1: self 3, neighbor mean 1 -> pre1 = [1.5 + 0.1, -0.75 + 0.2] = [1.6, -0.55]
        // ReLU: [0.8, 0.35], [1.6, 0]. Layer 2 = identity self.
        // Readout = [(0.8+1.6)/2, (0.35+0)/2] = [1.2, 0.175]; pred = 1.375 + 0.5.
        let got = predict(&params, &sample, &cfg(2)).unwrap();
        assert_relative_eq!(got, 1.875, epsilon = 1e-12);
    }

    #[test]
    fn zero_residual_gives_zero_loss_and_bias_grad() {
        let sample = path_sample(3, 2);
        let mut params = SageParameters::glorot(2, 2, 1.0, 2).zeros_like();
        params.head_b = 7.0;
        let c = cfg(2);
        let batch = vec![(&sample, 7.0)];
        let (mse, grads) = loss_and_gradients(&batch, &params, &c, 0).unwrap();
        assert_eq!(mse, 0.0);
        assert_eq!(grads.head_b, 0.0);
    }

    #[test]
    fn duplicated_sample_leaves_gradients_unchanged() {
        let sample = path_sample(4, 3);
        let params = SageParameters::glorot(3, 2, 1.0, 8);
        let c = cfg(2);
        let single = vec![(&sample, 2.0)];
        let double = vec![(&sample, 2.0), (&sample, 2.0)];
        let (m1, g1) = loss_and_gradients(&single, &params, &c, 0).unwrap();
        let (m2, g2) = loss_and_gradients(&double, &params, &c, 0).unwrap();
        assert_relative_eq!(m1, m2, epsilon = 1e-12);
        for (a, b) in g1.flatten().iter().zip(g2.flatten()) {
            assert_relative_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let samples = [path_sample(4, 3), path_sample(6, 3), path_sample(2, 3)];
        let targets = [1.0, -0.5, 2.0];
        let c = cfg(3);
        let params = SageParameters::glorot(3, 3, 1.0, 11);
        let batch: Vec<(&GraphSample, f64)> = samples.iter().zip(targets).collect();
        let (_, grads) = loss_and_gradients(&batch, &params, &c, 0).unwrap();

        let flat_grads = grads.flatten();
        let base_flat = params.flatten();
        let eps = 1e-5;
        let mut max_rel = 0.0f64;
        for k in 0..base_flat.len() {
            let mut plus = params.clone();
            let mut flat = base_flat.clone();
            flat[k] += eps;
            plus.assign_from_flat(&flat);
            let (lp, _) = loss_and_gradients(&batch, &plus, &c, 0).unwrap();
            let mut minus = params.clone();
            flat[k] -= 2.0 * eps;
            minus.assign_from_flat(&flat);
            let (lm, _) = loss_and_gradients(&batch, &minus, &c, 0).unwrap();
            let numeric = (lp - lm) / (2.0 * eps);
            let denom = numeric.abs().max(flat_grads[k].abs()).max(1e-8);
            max_rel = max_rel.max((numeric - flat_grads[k]).abs() / denom);
        }
        assert!(max_rel < 1e-4, "max relative error {max_rel}");
    }

    #[test]
    fn dropout_zero_train_equals_eval() {
        let sample = path_sample(5, 3);
        let params = SageParameters::glorot(3, 4, 1.0, 3);
        let c = cfg(4);
        let train_pred = forward(&params, &sample, &c, Mode::Train, 99).unwrap();
        let eval_pred = forward(&params, &sample, &c, Mode::Eval, 0).unwrap();
        assert_eq!(train_pred, eval_pred);
    }

    #[test]
    fn permutation_invariance() {
        let sample = path_sample(6, 3);
        let params = SageParameters::glorot(3, 4, 1.0, 17);
        let c = cfg(4);
        let base = predict(&params, &sample, &c).unwrap();

        // Reverse the node order.
        let n = sample.node_count();
        let perm: Vec<usize> = (0..n).rev().collect();
        let features: Vec<Vec<f64>> = perm.iter().map(|&i| sample.features[i].clone()).collect();
        let mut inverse = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new;
        }
        let edges: Vec<(usize, usize, u32)> = sample
            .edges
            .iter()
            .map(|&(s, d, w)| (inverse[s], inverse[d], w))
            .collect();
        let permuted = GraphSample { features, edges };
        let got = predict(&params, &permuted, &c).unwrap();
        assert!((got - base).abs() < 1e-12);
    }

    #[test]
    fn overfits_single_sample() {
        let sample = path_sample(5, 3);
        let dataset = vec![(sample, 63.0)];
        let c = TrainConfig {
            hidden: 8,
            dropout: 0.0,
            epochs: 200,
            ..TrainConfig::default()
        };
        let model = train(&dataset, &c).unwrap();
        let first = model.loss_history[0];
        let last = *model.loss_history.last().unwrap();
        assert!(
            last < first * 0.01,
            "first={first} last={last} (no overfit)"
        );
        let pred = model.predict(&dataset[0].0).unwrap();
        assert!((pred - 63.0).abs() < 1.0, "pred={pred}");
    }

    #[test]
    fn training_is_deterministic() {
        let dataset: Vec<(GraphSample, f64)> = (0..4)
            .map(|i| (path_sample(4 + i, 3), i as f64))
            .collect();
        let c = TrainConfig {
            hidden: 4,
            epochs: 20,
            ..TrainConfig::default()
        };
        let a = train(&dataset, &c).unwrap();
        let b = train(&dataset, &c).unwrap();
        assert_eq!(a.params.flatten(), b.params.flatten());
        assert_eq!(a.loss_history, b.loss_history);
    }

    #[test]
    fn zero_learning_rate_keeps_init() {
        let dataset = vec![(path_sample(3, 2), 5.0)];
        let c = TrainConfig {
            hidden: 2,
            learning_rate: 0.0,
            epochs: 5,
            dropout: 0.0,
            ..TrainConfig::default()
        };
        let model = train(&dataset, &c).unwrap();
        let init = SageParameters::glorot(2, 2, c.weight_init_scale, mix_seed(c.seed, 0x1217));
        assert_eq!(model.params.flatten(), init.flatten());
    }

    #[test]
    fn checkpoint_roundtrip() {
        let dataset = vec![(path_sample(4, 3), 2.0), (path_sample(5, 3), 3.0)];
        let c = TrainConfig {
            hidden: 3,
            epochs: 3,
            ..TrainConfig::default()
        };
        let model = train(&dataset, &c).unwrap();
        let restored = TrainedModel::from_json(&model.to_json()).unwrap();
        assert_eq!(model, restored);
        let p1 = model.predict(&dataset[0].0).unwrap();
        let p2 = restored.predict(&dataset[0].0).unwrap();
        assert_eq!(p1, p2);
    }

    #[test]
    fn shape_mismatch_detected() {
        let params = SageParameters::glorot(3, 2, 1.0, 1);
        let sample = GraphSample {
            features: vec![vec![1.0, 2.0]],
            edges: vec![],
        };
        assert!(matches!(
            predict(&params, &sample, &cfg(2)),
            Err(GnnError::FeatureWidthMismatch { .. })
        ));
        let dangling = GraphSample {
            features: vec![vec![1.0, 2.0, 3.0]],
            edges: vec![(0, 5, 1)],
        };
        assert!(matches!(
            predict(&params, &dangling, &cfg(2)),
            Err(GnnError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn gesture_node_removal() {
        // Column 1 marks gesture nodes (like the node feature layout).
        let sample = GraphSample {
            features: vec![
                vec![0.7, 0.0, 1.0],
                vec![0.7, 1.0, 0.0],
                vec![0.7, 0.0, 1.0],
            ],
            edges: vec![(0, 1, 1), (1, 2, 2), (0, 2, 3)],
        };
        let remove: Vec<bool> = sample.features.iter().map(|r| r[1] == 1.0).collect();
        let pruned = sample.without_nodes(&remove);
        assert_eq!(pruned.node_count(), 2);
        assert_eq!(pruned.edges, vec![(0, 1, 3)]);
    }
}
