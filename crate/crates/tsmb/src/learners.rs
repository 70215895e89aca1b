//! Pluggable base predictive models: a gradient-boosted decision tree (the
//! default) and a linear/logistic baseline for fast tests.
//!
//! Both learners are deterministic given spec, data, and seed, and fitted
//! state serializes so that save -> load -> predict is bit-identical.

use serde::{Deserialize, Serialize};

use crate::dataset::AlignedDataset;
use crate::error::{Error, Result};

/// Which base model to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnerKind {
    Gbdt,
    Linear,
}

/// Training loss; follows the task kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    Squared,
    Logistic,
}

/// Gradient-boosting hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbdtParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
}

impl Default for GbdtParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 3,
            learning_rate: 0.1,
            min_samples_leaf: 5,
        }
    }
}

/// Linear-model hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    pub l2: f64,
}

impl Default for LinearParams {
    fn default() -> Self {
        Self { l2: 1e-3 }
    }
}

/// Full base-model specification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearnerSpec {
    pub kind: LearnerKind,
    #[serde(default)]
    pub gbdt: GbdtParams,
    #[serde(default)]
    pub linear: LinearParams,
    pub loss: Loss,
    #[serde(default)]
    pub seed: u64,
}

impl LearnerSpec {
    pub fn gbdt(loss: Loss) -> Self {
        Self {
            kind: LearnerKind::Gbdt,
            gbdt: GbdtParams::default(),
            linear: LinearParams::default(),
            loss,
            seed: 0,
        }
    }

    pub fn linear(loss: Loss) -> Self {
        Self {
            kind: LearnerKind::Linear,
            ..Self::gbdt(loss)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.gbdt.n_trees == 0 {
            return Err(Error::Config("n_trees must be >= 1".into()));
        }
        if self.gbdt.max_depth == 0 {
            return Err(Error::Config("max_depth must be >= 1".into()));
        }
        if !(self.gbdt.learning_rate > 0.0 && self.gbdt.learning_rate <= 1.0) {
            return Err(Error::Config(format!(
                "learning_rate must be in (0, 1], got {}",
                self.gbdt.learning_rate
            )));
        }
        if self.linear.l2 < 0.0 {
            return Err(Error::Config("l2 strength must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Tree {
    nodes: Vec<TreeNode>,
}

impl Tree {
    fn predict_row(&self, row: &[f64]) -> f64 {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    fn scale(&mut self, factor: f64) {
        for node in &mut self.nodes {
            if let TreeNode::Leaf { value } = node {
                *value *= factor;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum ModelState {
    /// Degenerate fit on a single-valued target.
    Constant { value: f64 },
    Linear {
        intercept: f64,
        coefficients: Vec<f64>,
    },
    Logistic {
        intercept: f64,
        coefficients: Vec<f64>,
    },
    Gbdt {
        initial: f64,
        /// Trees carry their accepted step size in the leaf values.
        trees: Vec<Tree>,
    },
}

/// A fitted base model plus training metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedLearner {
    spec: LearnerSpec,
    n_features: usize,
    n_rows: usize,
    degenerate: bool,
    state: ModelState,
    /// Training loss after each boosting stage (GBDT only).
    loss_curve: Vec<f64>,
}

impl FittedLearner {
    pub fn spec(&self) -> &LearnerSpec {
        &self.spec
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    /// True when the target had a single unique value and a constant model
    /// was fitted instead.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Per-tree training loss for GBDT fits; empty for linear models.
    pub fn loss_curve(&self) -> &[f64] {
        &self.loss_curve
    }

    /// Predict one value per row. Regression yields real values;
    /// classification yields probabilities in [0, 1].
    pub fn predict(&self, columns: &[Vec<f64>]) -> Result<Vec<f64>> {
        if columns.len() != self.n_features {
            return Err(Error::Data(format!(
                "model trained on {} features, got {}",
                self.n_features,
                columns.len()
            )));
        }
        let rows = columns.first().map_or(0, Vec::len);
        let mut out = Vec::with_capacity(rows);
        let mut row = vec![0.0; columns.len()];
        for j in 0..rows {
            for (i, c) in columns.iter().enumerate() {
                row[i] = c[j];
            }
            out.push(self.predict_row(&row));
        }
        Ok(out)
    }

    fn predict_row(&self, row: &[f64]) -> f64 {
        match &self.state {
            ModelState::Constant { value } => *value,
            ModelState::Linear {
                intercept,
                coefficients,
            } => intercept + dot(coefficients, row),
            ModelState::Logistic {
                intercept,
                coefficients,
            } => sigmoid(intercept + dot(coefficients, row)),
            ModelState::Gbdt { initial, trees } => {
                let mut f = *initial;
                for tree in trees {
                    f += tree.predict_row(row);
                }
                match self.spec.loss {
                    Loss::Squared => f,
                    Loss::Logistic => sigmoid(f),
                }
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Fit a base model on a column-major design matrix.
pub fn fit(spec: &LearnerSpec, columns: &[Vec<f64>], target: &[f64]) -> Result<FittedLearner> {
    spec.validate()?;
    let rows = target.len();
    if rows < 2 {
        return Err(Error::Data(format!("need at least 2 rows to fit, got {rows}")));
    }
    if columns.is_empty() {
        return Err(Error::Data("need at least 1 feature to fit".into()));
    }
    for c in columns {
        if c.len() != rows {
            return Err(Error::Data(format!(
                "design column length {} does not match target length {rows}",
                c.len()
            )));
        }
    }
    if spec.loss == Loss::Logistic {
        if let Some(&bad) = target.iter().find(|&&v| v != 0.0 && v != 1.0) {
            return Err(Error::Data(format!(
                "logistic loss needs 0/1 targets, got {bad}"
            )));
        }
    }

    let first = target[0];
    if target.iter().all(|&v| v == first) {
        log::warn!("single-valued target; fitting a constant model");
        return Ok(FittedLearner {
            spec: *spec,
            n_features: columns.len(),
            n_rows: rows,
            degenerate: true,
            state: ModelState::Constant { value: first },
            loss_curve: Vec::new(),
        });
    }

    let (state, loss_curve) = match spec.kind {
        LearnerKind::Gbdt => fit_gbdt(&spec.gbdt, spec.loss, columns, target)?,
        LearnerKind::Linear => (fit_linear(&spec.linear, spec.loss, columns, target)?, Vec::new()),
    };
    Ok(FittedLearner {
        spec: *spec,
        n_features: columns.len(),
        n_rows: rows,
        degenerate: false,
        state,
        loss_curve,
    })
}

/// Fit on an aligned dataset (design + target).
pub fn fit_aligned(spec: &LearnerSpec, aligned: &AlignedDataset) -> Result<FittedLearner> {
    fit(spec, aligned.columns(), aligned.target())
}

// ---------------------------------------------------------------------------
// Gradient boosting
// ---------------------------------------------------------------------------

fn fit_gbdt(
    params: &GbdtParams,
    loss: Loss,
    columns: &[Vec<f64>],
    target: &[f64],
) -> Result<(ModelState, Vec<f64>)> {
    let rows = target.len();
    let initial = match loss {
        Loss::Squared => target.iter().sum::<f64>() / rows as f64,
        Loss::Logistic => {
            let p = (target.iter().sum::<f64>() / rows as f64).clamp(1e-8, 1.0 - 1e-8);
            (p / (1.0 - p)).ln()
        }
    };
    let mut scores = vec![initial; rows];
    let mut trees: Vec<Tree> = Vec::with_capacity(params.n_trees);
    let mut loss_curve = Vec::with_capacity(params.n_trees);
    let mut prev_loss = training_loss(loss, &scores, target);

    let all_rows: Vec<usize> = (0..rows).collect();
    for _ in 0..params.n_trees {
        let residuals: Vec<f64> = match loss {
            Loss::Squared => target.iter().zip(&scores).map(|(y, f)| y - f).collect(),
            Loss::Logistic => target
                .iter()
                .zip(&scores)
                .map(|(y, f)| y - sigmoid(*f))
                .collect(),
        };

        let mut nodes = Vec::new();
        grow_tree(
            columns,
            &residuals,
            &all_rows,
            params.max_depth,
            params.min_samples_leaf,
            0,
            &mut nodes,
        );
        let mut tree = Tree { nodes };
        if loss == Loss::Logistic {
            newton_leaf_step(&mut tree, columns, &scores, target);
        }

        // The step must not increase training loss; halve the step size
        // until it does not, dropping the tree if halving never helps.
        let mut factor = params.learning_rate;
        let mut accepted = false;
        for _ in 0..12 {
            let candidate: Vec<f64> = scores
                .iter()
                .enumerate()
                .map(|(j, &f)| f + factor * tree_value_at(&tree, columns, j))
                .collect();
            let candidate_loss = training_loss(loss, &candidate, target);
            if candidate_loss <= prev_loss + 1e-12 {
                scores = candidate;
                prev_loss = candidate_loss;
                accepted = true;
                break;
            }
            factor *= 0.5;
        }
        tree.scale(if accepted { factor } else { 0.0 });
        trees.push(tree);
        loss_curve.push(prev_loss);
    }

    Ok((ModelState::Gbdt { initial, trees }, loss_curve))
}

fn tree_value_at(tree: &Tree, columns: &[Vec<f64>], row_idx: usize) -> f64 {
    let mut idx = 0;
    loop {
        match &tree.nodes[idx] {
            TreeNode::Leaf { value } => return *value,
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                idx = if columns[*feature][row_idx] <= *threshold {
                    *left
                } else {
                    *right
                };
            }
        }
    }
}

fn training_loss(loss: Loss, scores: &[f64], target: &[f64]) -> f64 {
    match loss {
        Loss::Squared => {
            scores
                .iter()
                .zip(target)
                .map(|(f, y)| (y - f).powi(2))
                .sum::<f64>()
                / target.len() as f64
        }
        Loss::Logistic => {
            scores
                .iter()
                .zip(target)
                .map(|(f, y)| {
                    let p = sigmoid(*f).clamp(1e-15, 1.0 - 1e-15);
                    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
                })
                .sum::<f64>()
                / target.len() as f64
        }
    }
}

/// Replace mean-residual leaves with a Newton step for logistic loss:
/// `sum(residual) / sum(p (1 - p))` over the rows in each leaf.
fn newton_leaf_step(tree: &mut Tree, columns: &[Vec<f64>], scores: &[f64], target: &[f64]) {
    let mut sums: Vec<(f64, f64)> = vec![(0.0, 0.0); tree.nodes.len()];
    for j in 0..target.len() {
        let mut idx = 0;
        loop {
            match &tree.nodes[idx] {
                TreeNode::Leaf { .. } => break,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if columns[*feature][j] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
        let p = sigmoid(scores[j]);
        sums[idx].0 += target[j] - p;
        sums[idx].1 += (p * (1.0 - p)).max(1e-8);
    }
    for (node, &(num, den)) in tree.nodes.iter_mut().zip(&sums) {
        if let TreeNode::Leaf { value } = node {
            if den > 0.0 {
                *value = num / den;
            }
        }
    }
}

fn grow_tree(
    columns: &[Vec<f64>],
    residuals: &[f64],
    rows: &[usize],
    depth_left: usize,
    min_samples_leaf: usize,
    _depth: usize,
    nodes: &mut Vec<TreeNode>,
) -> usize {
    let mean = rows.iter().map(|&j| residuals[j]).sum::<f64>() / rows.len() as f64;
    if depth_left == 0 || rows.len() < 2 * min_samples_leaf.max(1) {
        let idx = nodes.len();
        nodes.push(TreeNode::Leaf { value: mean });
        return idx;
    }

    let best = best_split(columns, residuals, rows, min_samples_leaf);
    let Some((feature, threshold)) = best else {
        let idx = nodes.len();
        nodes.push(TreeNode::Leaf { value: mean });
        return idx;
    };

    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
        .iter()
        .partition(|&&j| columns[feature][j] <= threshold);

    let idx = nodes.len();
    nodes.push(TreeNode::Leaf { value: mean }); // placeholder
    let left = grow_tree(
        columns,
        residuals,
        &left_rows,
        depth_left - 1,
        min_samples_leaf,
        _depth + 1,
        nodes,
    );
    let right = grow_tree(
        columns,
        residuals,
        &right_rows,
        depth_left - 1,
        min_samples_leaf,
        _depth + 1,
        nodes,
    );
    nodes[idx] = TreeNode::Split {
        feature,
        threshold,
        left,
        right,
    };
    idx
}

/// Exact greedy variance-reduction split over sorted feature values.
fn best_split(
    columns: &[Vec<f64>],
    residuals: &[f64],
    rows: &[usize],
    min_samples_leaf: usize,
) -> Option<(usize, f64)> {
    let n = rows.len();
    let total_sum: f64 = rows.iter().map(|&j| residuals[j]).sum();
    let mut best_gain = 0.0;
    let mut best: Option<(usize, f64)> = None;

    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n);
    for (feature, column) in columns.iter().enumerate() {
        pairs.clear();
        pairs.extend(rows.iter().map(|&j| (column[j], residuals[j])));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut left_sum = 0.0;
        for i in 0..n - 1 {
            left_sum += pairs[i].1;
            if pairs[i].0 == pairs[i + 1].0 {
                continue;
            }
            let left_count = i + 1;
            let right_count = n - left_count;
            if left_count < min_samples_leaf || right_count < min_samples_leaf {
                continue;
            }
            let right_sum = total_sum - left_sum;
            // Variance reduction up to constants: sum of per-side
            // (sum^2 / count) minus the parent's.
            let gain = left_sum * left_sum / left_count as f64
                + right_sum * right_sum / right_count as f64
                - total_sum * total_sum / n as f64;
            if gain > best_gain + 1e-12 {
                best_gain = gain;
                best = Some((feature, 0.5 * (pairs[i].0 + pairs[i + 1].0)));
            }
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Linear baseline
// ---------------------------------------------------------------------------

fn fit_linear(
    params: &LinearParams,
    loss: Loss,
    columns: &[Vec<f64>],
    target: &[f64],
) -> Result<ModelState> {
    match loss {
        Loss::Squared => fit_ridge(params.l2, columns, target),
        Loss::Logistic => fit_logistic(params.l2, columns, target),
    }
}

/// Closed-form ridge regression; the intercept is unpenalized, so the model
/// converges to the constant mean predictor as `l2` grows.
fn fit_ridge(l2: f64, columns: &[Vec<f64>], target: &[f64]) -> Result<ModelState> {
    let n = columns.len();
    let rows = target.len() as f64;
    let means: Vec<f64> = columns.iter().map(|c| c.iter().sum::<f64>() / rows).collect();
    let y_mean = target.iter().sum::<f64>() / rows;

    let mut gram = vec![vec![0.0; n]; n];
    let mut rhs = vec![0.0; n];
    for (a, ca) in columns.iter().enumerate() {
        for (b, cb) in columns.iter().enumerate().skip(a) {
            let s: f64 = ca
                .iter()
                .zip(cb)
                .map(|(x, z)| (x - means[a]) * (z - means[b]))
                .sum();
            gram[a][b] = s;
            gram[b][a] = s;
        }
        rhs[a] = ca
            .iter()
            .zip(target)
            .map(|(x, y)| (x - means[a]) * (y - y_mean))
            .sum();
        gram[a][a] += l2 + 1e-12;
    }

    let coefficients = solve_spd(gram, rhs)?;
    let intercept = y_mean - dot(&coefficients, &means);
    Ok(ModelState::Linear {
        intercept,
        coefficients,
    })
}

/// L2-regularized logistic regression via iteratively reweighted least
/// squares with an unpenalized intercept.
#[allow(clippy::needless_range_loop)] // dense-matrix index arithmetic
fn fit_logistic(l2: f64, columns: &[Vec<f64>], target: &[f64]) -> Result<ModelState> {
    let n = columns.len();
    let rows = target.len();
    let mut beta = vec![0.0; n + 1]; // intercept first

    for _ in 0..50 {
        // Accumulate X' W X and X' (y - p) over augmented rows [1, x].
        let mut hessian = vec![vec![0.0; n + 1]; n + 1];
        let mut grad = vec![0.0; n + 1];
        for j in 0..rows {
            let mut eta = beta[0];
            for (i, c) in columns.iter().enumerate() {
                eta += beta[i + 1] * c[j];
            }
            let p = sigmoid(eta);
            let w = (p * (1.0 - p)).max(1e-10);
            let r = target[j] - p;
            let mut xj = Vec::with_capacity(n + 1);
            xj.push(1.0);
            for c in columns {
                xj.push(c[j]);
            }
            for a in 0..=n {
                grad[a] += xj[a] * r;
                for b in a..=n {
                    hessian[a][b] += w * xj[a] * xj[b];
                }
            }
        }
        for a in 0..=n {
            for b in 0..a {
                hessian[a][b] = hessian[b][a];
            }
        }
        for (a, row) in hessian.iter_mut().enumerate().skip(1) {
            row[a] += l2 + 1e-12;
            grad[a] -= (l2 + 1e-12) * beta[a];
        }

        let step = solve_spd(hessian, grad)?;
        let mut delta = 0.0f64;
        for (b, s) in beta.iter_mut().zip(&step) {
            *b += s;
            delta = delta.max(s.abs());
        }
        if delta < 1e-10 {
            break;
        }
    }

    Ok(ModelState::Logistic {
        intercept: beta[0],
        coefficients: beta[1..].to_vec(),
    })
}

/// Solve a symmetric positive-definite system by Cholesky decomposition.
#[allow(clippy::needless_range_loop)] // dense-matrix index arithmetic
fn solve_spd(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i][j];
            for k in 0..j {
                sum -= a[i][k] * a[j][k];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(Error::Numeric(
                        "linear system is not positive definite".into(),
                    ));
                }
                a[i][j] = sum.sqrt();
            } else {
                a[i][j] = sum / a[j][j];
            }
        }
    }
    for i in 0..n {
        for k in 0..i {
            b[i] -= a[i][k] * b[k];
        }
        b[i] /= a[i][i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            b[i] -= a[k][i] * b[k];
        }
        b[i] /= a[i][i];
    }
    Ok(b)
}
