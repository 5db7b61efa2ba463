//! L2-regularized logistic regression trained by full-batch gradient descent
//! with backtracking line search. Deterministic: no sampling, no shuffling.

use serde::{Deserialize, Serialize};

use crate::corpus::ConflictLabel;
use crate::util::{derive_seed, sigmoid, Mat};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogRegParams {
    /// L2 penalty on the weights; the bias is never regularized.
    pub l2_lambda: f64,
    pub max_iter: usize,
    /// Convergence threshold on the gradient's L2 norm.
    pub tol: f64,
}

impl Default for LogRegParams {
    fn default() -> Self {
        LogRegParams { l2_lambda: 1e-3, max_iter: 1000, tol: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub l2_lambda: f64,
}

fn label_sign(l: ConflictLabel) -> f64 {
    match l {
        ConflictLabel::HighConflict => 1.0,
        ConflictLabel::LowConflict => -1.0,
    }
}

/// Mean logistic loss plus `l2/2 * ||w||^2`, with its gradient in `(w, b)`.
/// Exposed so the gradients the optimizer follows can be checked directly
/// against finite differences.
pub fn logreg_loss_grad(
    x: &Mat,
    y: &[ConflictLabel],
    w: &[f64],
    b: f64,
    l2_lambda: f64,
) -> (f64, Vec<f64>, f64) {
    let n = x.rows() as f64;
    let mut loss = 0.0;
    let mut grad_w = vec![0.0; w.len()];
    let mut grad_b = 0.0;
    for (i, &label) in y.iter().enumerate() {
        let row = x.row(i);
        let yi = label_sign(label);
        let z: f64 = row.iter().zip(w).map(|(xi, wi)| xi * wi).sum::<f64>() + b;
        let m = yi * z;
        // log(1 + e^-m), stable for large |m|.
        loss += (-m).max(0.0) + (-(-m).abs()).exp().ln_1p();
        // d/dz log(1+e^-m) = -y * sigmoid(-m)
        let g = -yi * sigmoid(-m);
        for (gw, &xi) in grad_w.iter_mut().zip(row) {
            *gw += g * xi;
        }
        grad_b += g;
    }
    loss /= n;
    grad_b /= n;
    for (gw, &wi) in grad_w.iter_mut().zip(w) {
        *gw = *gw / n + l2_lambda * wi;
    }
    loss += 0.5 * l2_lambda * w.iter().map(|wi| wi * wi).sum::<f64>();
    (loss, grad_w, grad_b)
}

/// Trains on feature rows `x` with labels `y`. Both classes must be present.
/// Stops when the gradient norm drops below `tol` or after `max_iter`
/// line-search steps.
pub fn train_logreg(x: &Mat, y: &[ConflictLabel], params: &LogRegParams) -> Result<LogRegModel> {
    if x.rows() != y.len() {
        return Err(Error::Usage(format!("{} rows but {} labels", x.rows(), y.len())));
    }
    if x.rows() == 0 {
        return Err(Error::Data("no training rows".into()));
    }
    if !(params.l2_lambda >= 0.0 && params.l2_lambda.is_finite()) {
        return Err(Error::Usage(format!("l2_lambda must be >= 0, got {}", params.l2_lambda)));
    }
    let n_high = y.iter().filter(|&&l| l == ConflictLabel::HighConflict).count();
    if n_high == 0 || n_high == y.len() {
        return Err(Error::Data("training data must contain both classes".into()));
    }

    let dim = x.cols();
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let (mut loss, mut grad_w, mut grad_b) = logreg_loss_grad(x, y, &w, b, params.l2_lambda);
    for _iter in 0..params.max_iter {
        let gnorm2: f64 = grad_w.iter().map(|g| g * g).sum::<f64>() + grad_b * grad_b;
        if gnorm2.sqrt() <= params.tol {
            break;
        }
        // Backtracking line search along the negative gradient (Armijo).
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let w_new: Vec<f64> =
                w.iter().zip(&grad_w).map(|(wi, gi)| wi - step * gi).collect();
            let b_new = b - step * grad_b;
            let (loss_new, gw_new, gb_new) =
                logreg_loss_grad(x, y, &w_new, b_new, params.l2_lambda);
            if loss_new <= loss - 1e-4 * step * gnorm2 {
                w = w_new;
                b = b_new;
                loss = loss_new;
                grad_w = gw_new;
                grad_b = gb_new;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // Step underflowed: we are at numerical precision; treat as
            // converged rather than spinning.
            break;
        }
    }
    if !loss.is_finite() {
        return Err(Error::Numeric("logistic loss diverged".into()));
    }
    Ok(LogRegModel { weights: w, bias: b, l2_lambda: params.l2_lambda })
}

/// P(high | x).
pub fn predict_proba(model: &LogRegModel, row: &[f64]) -> f64 {
    let z: f64 =
        row.iter().zip(&model.weights).map(|(xi, wi)| xi * wi).sum::<f64>() + model.bias;
    sigmoid(z)
}

/// Hard label; the 0.5 boundary goes to `LowConflict`.
pub fn predict_logreg(model: &LogRegModel, row: &[f64]) -> ConflictLabel {
    if predict_proba(model, row) > 0.5 {
        ConflictLabel::HighConflict
    } else {
        ConflictLabel::LowConflict
    }
}

/// Picks the lambda with the best mean weighted F1 over stratified k-fold
/// cross-validation. Folds are assigned deterministically from `seed`. Ties
/// prefer the larger lambda (stronger regularization).
pub fn cv_select_lambda(
    x: &Mat,
    y: &[ConflictLabel],
    grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<f64> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    if grid.is_empty() {
        return Err(Error::Usage("empty lambda grid".into()));
    }
    if folds < 2 {
        return Err(Error::Usage(format!("need at least 2 folds, got {folds}")));
    }
    // Stratified fold assignment: shuffle each class, deal round-robin.
    let mut fold_of = vec![0usize; y.len()];
    for label in ConflictLabel::ALL {
        let mut members: Vec<usize> =
            (0..y.len()).filter(|&i| y[i] == label).collect();
        if members.len() < folds {
            return Err(Error::Data(format!(
                "class {} has {} samples; cannot make {} folds",
                label,
                members.len(),
                folds
            )));
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(
            seed,
            &[label as u64 + 1],
        ));
        members.shuffle(&mut rng);
        for (pos, &i) in members.iter().enumerate() {
            fold_of[i] = pos % folds;
        }
    }

    let mut best = (f64::NEG_INFINITY, grid[0]);
    for &lambda in grid {
        let mut scores = Vec::with_capacity(folds);
        for fold in 0..folds {
            let train_idx: Vec<usize> =
                (0..y.len()).filter(|&i| fold_of[i] != fold).collect();
            let test_idx: Vec<usize> = (0..y.len()).filter(|&i| fold_of[i] == fold).collect();
            let xtr =
                Mat::from_rows(train_idx.iter().map(|&i| x.row(i).to_vec()).collect())?;
            let ytr: Vec<ConflictLabel> = train_idx.iter().map(|&i| y[i]).collect();
            let model = train_logreg(
                &xtr,
                &ytr,
                &LogRegParams { l2_lambda: lambda, ..LogRegParams::default() },
            )?;
            let pred: Vec<ConflictLabel> =
                test_idx.iter().map(|&i| predict_logreg(&model, x.row(i))).collect();
            let gold: Vec<ConflictLabel> = test_idx.iter().map(|&i| y[i]).collect();
            scores.push(super::evaluate(&pred, &gold)?.weighted_f1);
        }
        let mean = scores.iter().sum::<f64>() / scores.len() as f64;
        if mean > best.0 || (mean == best.0 && lambda > best.1) {
            best = (mean, lambda);
        }
    }
    Ok(best.1)
}
