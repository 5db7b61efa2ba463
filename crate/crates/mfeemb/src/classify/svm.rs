//! C-SVC with an RBF kernel, trained by sequential minimal optimization.
//!
//! The dual problem
//!
//! ```text
//! max W(a) = sum a_i - 1/2 sum_ij a_i a_j y_i y_j K_ij
//! s.t. 0 <= a_i <= C,  sum a_i y_i = 0
//! ```
//!
//! is solved pairwise: repeatedly pick two multipliers, optimize them
//! analytically holding the rest fixed, and update the bias and error cache.
//! Heuristics follow the classic formulation (second-choice by maximal
//! |E1 - E2|, then randomized sweeps), with the random scan starts drawn from
//! a seeded generator so training is reproducible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::ConflictLabel;
use crate::util::Mat;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Gamma {
    /// `1 / (n_features * var(X))`, with the variance taken over every entry
    /// of the training matrix.
    #[serde(rename = "scale")]
    Scale,
    #[serde(untagged)]
    Value(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    pub c: f64,
    pub gamma: Gamma,
    /// KKT tolerance; training stops when every multiplier satisfies the
    /// optimality conditions within this slack.
    pub tol: f64,
    /// Cap on successful pair optimizations before giving up.
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams { c: 1.0, gamma: Gamma::Scale, tol: 1e-3, max_iter: 1_000_000, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    /// Training rows with nonzero multiplier.
    pub support_vectors: Mat,
    /// `a_i * y_i` for each support vector.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub c: f64,
    /// Full multiplier vector in training order (zeros included); kept so
    /// optimality can be audited against the training set.
    pub alphas: Vec<f64>,
}

pub fn rbf_kernel(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

/// Resolves a gamma spec against the training matrix.
pub fn resolve_gamma(gamma: Gamma, x: &Mat) -> Result<f64> {
    match gamma {
        Gamma::Value(g) => {
            if g.is_finite() && g > 0.0 {
                Ok(g)
            } else {
                Err(Error::Usage(format!("gamma must be positive, got {g}")))
            }
        }
        Gamma::Scale => {
            let vals = x.as_slice();
            if vals.is_empty() {
                return Err(Error::Data("empty training matrix".into()));
            }
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            if var == 0.0 {
                return Err(Error::Numeric(
                    "gamma=scale undefined: training features have zero variance".into(),
                ));
            }
            Ok(1.0 / (x.cols() as f64 * var))
        }
    }
}

/// Dual objective `W(a)` for multipliers `a` over kernel matrix `k`.
pub fn dual_objective(alphas: &[f64], y: &[f64], k: &Mat) -> f64 {
    let n = alphas.len();
    let obj: f64 = alphas.iter().sum();
    let mut quad = 0.0;
    for i in 0..n {
        if alphas[i] == 0.0 {
            continue;
        }
        let ki = k.row(i);
        for j in 0..n {
            if alphas[j] != 0.0 {
                quad += alphas[i] * alphas[j] * y[i] * y[j] * ki[j];
            }
        }
    }
    obj - 0.5 * quad
}

/// Largest KKT violation over the training set for a given solution:
/// `a=0` requires `y f >= 1`, `a=C` requires `y f <= 1`, interior multipliers
/// require `y f = 1`.
pub fn kkt_max_violation(alphas: &[f64], y: &[f64], k: &Mat, bias: f64, c: f64) -> f64 {
    let n = alphas.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let f: f64 = (0..n).map(|j| alphas[j] * y[j] * k.row(i)[j]).sum::<f64>() + bias;
        let margin = y[i] * f;
        let atol = 1e-10 * c.max(1.0);
        let v = if alphas[i] <= atol {
            (1.0 - margin).max(0.0)
        } else if alphas[i] >= c - atol {
            (margin - 1.0).max(0.0)
        } else {
            (margin - 1.0).abs()
        };
        worst = worst.max(v);
    }
    worst
}

fn label_sign(l: ConflictLabel) -> f64 {
    match l {
        ConflictLabel::HighConflict => 1.0,
        ConflictLabel::LowConflict => -1.0,
    }
}

struct Smo<'a> {
    k: &'a Mat,
    y: &'a [f64],
    c: f64,
    tol: f64,
    /// Minimum relative step; below this a pair is considered optimized.
    eps: f64,
    alphas: Vec<f64>,
    bias: f64,
    /// Error cache `E_i = f(x_i) - y_i`, kept exact after every step.
    errors: Vec<f64>,
    steps: usize,
    max_steps: usize,
    rng: ChaCha8Rng,
}

impl<'a> Smo<'a> {
    fn new(k: &'a Mat, y: &'a [f64], params: &SvmParams) -> Self {
        let n = y.len();
        Smo {
            k,
            y,
            c: params.c,
            tol: params.tol,
            eps: params.tol.min(1e-3),
            alphas: vec![0.0; n],
            bias: 0.0,
            // With all multipliers zero, f = 0 and E_i = -y_i.
            errors: y.iter().map(|&yi| -yi).collect(),
            steps: 0,
            max_steps: params.max_iter,
            rng: ChaCha8Rng::seed_from_u64(params.seed),
        }
    }

    fn non_bound(&self, i: usize) -> bool {
        self.alphas[i] > 0.0 && self.alphas[i] < self.c
    }

    fn take_step(&mut self, i1: usize, i2: usize) -> Result<bool> {
        if i1 == i2 {
            return Ok(false);
        }
        let (a1_old, a2_old) = (self.alphas[i1], self.alphas[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let (e1, e2) = (self.errors[i1], self.errors[i2]);
        let s = y1 * y2;
        let (lo, hi) = if s < 0.0 {
            ((a2_old - a1_old).max(0.0), (self.c + a2_old - a1_old).min(self.c))
        } else {
            ((a1_old + a2_old - self.c).max(0.0), (a1_old + a2_old).min(self.c))
        };
        if lo >= hi {
            return Ok(false);
        }
        let k11 = self.k.row(i1)[i1];
        let k12 = self.k.row(i1)[i2];
        let k22 = self.k.row(i2)[i2];
        let eta = k11 + k22 - 2.0 * k12;
        let mut a2 = if eta > 0.0 {
            (a2_old + y2 * (e1 - e2) / eta).clamp(lo, hi)
        } else {
            // Flat direction: compare the objective at both box ends.
            let f1 = e1 + y1;
            let f2 = e2 + y2;
            let v1 = f1 - self.bias - y1 * a1_old * k11 - y2 * a2_old * k12;
            let v2 = f2 - self.bias - y1 * a1_old * k12 - y2 * a2_old * k22;
            let gamma_sum = a1_old + s * a2_old;
            let psi = |a: f64| {
                let a1 = gamma_sum - s * a;
                0.5 * k11 * a1 * a1
                    + 0.5 * k22 * a * a
                    + s * k12 * a1 * a
                    + y1 * a1 * v1
                    + y2 * a * v2
                    - a1
                    - a
            };
            let (lobj, hobj) = (psi(lo), psi(hi));
            if lobj < hobj - self.eps {
                lo
            } else if hobj < lobj - self.eps {
                hi
            } else {
                return Ok(false);
            }
        };
        // Snap to the box to keep bound classification exact.
        if a2 < 1e-12 {
            a2 = 0.0;
        } else if a2 > self.c - 1e-12 {
            a2 = self.c;
        }
        if (a2 - a2_old).abs() < self.eps * (a2 + a2_old + self.eps) {
            return Ok(false);
        }
        let a1 = a1_old + s * (a2_old - a2);
        let a1 = if a1 < 1e-12 {
            0.0
        } else if a1 > self.c - 1e-12 {
            self.c
        } else {
            a1
        };

        let d1 = y1 * (a1 - a1_old);
        let d2 = y2 * (a2 - a2_old);
        let b1 = self.bias - e1 - d1 * k11 - d2 * k12;
        let b2 = self.bias - e2 - d1 * k12 - d2 * k22;
        let b_new = if a1 > 0.0 && a1 < self.c {
            b1
        } else if a2 > 0.0 && a2 < self.c {
            b2
        } else {
            (b1 + b2) / 2.0
        };
        let db = b_new - self.bias;
        self.bias = b_new;
        self.alphas[i1] = a1;
        self.alphas[i2] = a2;
        for i in 0..self.errors.len() {
            self.errors[i] += d1 * self.k.row(i1)[i] + d2 * self.k.row(i2)[i] + db;
        }
        self.steps += 1;
        if self.steps > self.max_steps {
            return Err(Error::Numeric(format!(
                "SMO exceeded {} pair optimizations without converging",
                self.max_steps
            )));
        }
        Ok(true)
    }

    fn examine(&mut self, i2: usize) -> Result<bool> {
        let y2 = self.y[i2];
        let a2 = self.alphas[i2];
        let e2 = self.errors[i2];
        let r2 = e2 * y2;
        let violates =
            (r2 < -self.tol && a2 < self.c) || (r2 > self.tol && a2 > 0.0);
        if !violates {
            return Ok(false);
        }
        let n = self.alphas.len();
        // Second-choice heuristic: maximize |E1 - E2| over non-bound points.
        let mut best: Option<(f64, usize)> = None;
        for i1 in 0..n {
            if self.non_bound(i1) {
                let gap = (self.errors[i1] - e2).abs();
                if best.map_or(true, |(g, _)| gap > g) {
                    best = Some((gap, i1));
                }
            }
        }
        if let Some((_, i1)) = best {
            if self.take_step(i1, i2)? {
                return Ok(true);
            }
        }
        // Sweep non-bound points from a random start, then everything.
        let start = self.rng.random_range(0..n);
        for off in 0..n {
            let i1 = (start + off) % n;
            if self.non_bound(i1) && self.take_step(i1, i2)? {
                return Ok(true);
            }
        }
        let start = self.rng.random_range(0..n);
        for off in 0..n {
            let i1 = (start + off) % n;
            if self.take_step(i1, i2)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn solve(&mut self) -> Result<()> {
        let n = self.alphas.len();
        let mut examine_all = true;
        let mut num_changed = 0usize;
        while num_changed > 0 || examine_all {
            num_changed = 0;
            if examine_all {
                for i in 0..n {
                    num_changed += self.examine(i)? as usize;
                }
            } else {
                for i in 0..n {
                    if self.non_bound(i) {
                        num_changed += self.examine(i)? as usize;
                    }
                }
            }
            if examine_all {
                examine_all = false;
            } else if num_changed == 0 {
                examine_all = true;
            }
        }
        Ok(())
    }
}

/// Trains an RBF C-SVC by SMO. Both classes must be present.
pub fn train_svm_smo(x: &Mat, y: &[ConflictLabel], params: &SvmParams) -> Result<SvmModel> {
    if x.rows() != y.len() {
        return Err(Error::Usage(format!("{} rows but {} labels", x.rows(), y.len())));
    }
    if x.rows() == 0 {
        return Err(Error::Data("no training rows".into()));
    }
    if !(params.c.is_finite() && params.c > 0.0) {
        return Err(Error::Usage(format!("C must be positive, got {}", params.c)));
    }
    if !(params.tol.is_finite() && params.tol > 0.0) {
        return Err(Error::Usage(format!("tol must be positive, got {}", params.tol)));
    }
    let n_high = y.iter().filter(|&&l| l == ConflictLabel::HighConflict).count();
    if n_high == 0 || n_high == y.len() {
        return Err(Error::Data("training data must contain both classes".into()));
    }

    let gamma = resolve_gamma(params.gamma, x)?;
    let n = x.rows();
    let mut k = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = rbf_kernel(x.row(i), x.row(j), gamma);
            k.row_mut(i)[j] = v;
            k.row_mut(j)[i] = v;
        }
    }
    let ys: Vec<f64> = y.iter().map(|&l| label_sign(l)).collect();

    let mut smo = Smo::new(&k, &ys, params);
    smo.solve()?;

    // The pair updates pin the bias only through free support vectors; with
    // every multiplier at a bound the recorded value can sit outside the
    // feasible interval. Recompute it from the final multipliers: the mean
    // over free vectors, else the midpoint of the interval the bound
    // constraints leave open.
    let mut b_lo = f64::NEG_INFINITY;
    let mut b_hi = f64::INFINITY;
    let mut free_sum = 0.0;
    let mut free_n = 0usize;
    for i in 0..n {
        let w: f64 = (0..n).map(|j| smo.alphas[j] * ys[j] * k.row(i)[j]).sum();
        let nu = ys[i] - w;
        let a = smo.alphas[i];
        if a > 0.0 && a < params.c {
            free_sum += nu;
            free_n += 1;
        } else if (a == 0.0 && ys[i] > 0.0) || (a == params.c && ys[i] < 0.0) {
            b_lo = b_lo.max(nu);
        } else {
            b_hi = b_hi.min(nu);
        }
    }
    smo.bias = if free_n > 0 {
        free_sum / free_n as f64
    } else if b_lo.is_finite() && b_hi.is_finite() {
        (b_lo + b_hi) / 2.0
    } else if b_lo.is_finite() {
        b_lo
    } else if b_hi.is_finite() {
        b_hi
    } else {
        0.0
    };

    let mut sv_rows = Vec::new();
    let mut dual_coef = Vec::new();
    for i in 0..n {
        if smo.alphas[i] > 0.0 {
            sv_rows.push(x.row(i).to_vec());
            dual_coef.push(smo.alphas[i] * ys[i]);
        }
    }
    if sv_rows.is_empty() {
        return Err(Error::Numeric("SMO produced no support vectors".into()));
    }
    Ok(SvmModel {
        support_vectors: Mat::from_rows(sv_rows)?,
        dual_coef,
        bias: smo.bias,
        gamma,
        c: params.c,
        alphas: smo.alphas,
    })
}

/// Signed decision value `sum_i dual_coef_i K(sv_i, row) + b`.
pub fn svm_decision(model: &SvmModel, row: &[f64]) -> f64 {
    let mut f = model.bias;
    for (i, coef) in model.dual_coef.iter().enumerate() {
        f += coef * rbf_kernel(model.support_vectors.row(i), row, model.gamma);
    }
    f
}

/// Hard label; the decision boundary itself goes to `LowConflict`.
pub fn predict_svm(model: &SvmModel, row: &[f64]) -> ConflictLabel {
    if svm_decision(model, row) > 0.0 {
        ConflictLabel::HighConflict
    } else {
        ConflictLabel::LowConflict
    }
}
