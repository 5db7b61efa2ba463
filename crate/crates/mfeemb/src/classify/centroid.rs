//! Few-shot nearest-centroid classifier: one mean vector per class, queries
//! assigned to the centroid with the highest cosine similarity.

use serde::{Deserialize, Serialize};

use crate::corpus::ConflictLabel;
use crate::genmetric::cosine;
use crate::util::Mat;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidModel {
    /// Class centroids in fixed label order (`low` first). Ties in query
    /// similarity resolve to the earlier entry.
    pub centroids: Vec<(ConflictLabel, Vec<f64>)>,
}

/// Computes the per-class mean vectors. Every class must have at least one
/// sample, and no class mean may be the zero vector (cosine would be
/// undefined for it).
pub fn fit_centroids(x: &Mat, y: &[ConflictLabel]) -> Result<CentroidModel> {
    if x.rows() != y.len() {
        return Err(Error::Usage(format!("{} rows but {} labels", x.rows(), y.len())));
    }
    if x.rows() == 0 {
        return Err(Error::Data("no training rows".into()));
    }
    let mut centroids = Vec::with_capacity(2);
    for label in ConflictLabel::ALL {
        let members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == label).collect();
        if members.is_empty() {
            return Err(Error::Data(format!("class {label} has no samples")));
        }
        let mut mean = vec![0.0; x.cols()];
        for &i in &members {
            for (m, &v) in mean.iter_mut().zip(x.row(i)) {
                *m += v;
            }
        }
        let inv = 1.0 / members.len() as f64;
        mean.iter_mut().for_each(|m| *m *= inv);
        if mean.iter().all(|&m| m == 0.0) {
            return Err(Error::Numeric(format!("class {label} centroid is the zero vector")));
        }
        centroids.push((label, mean));
    }
    Ok(CentroidModel { centroids })
}

/// Assigns `row` to the centroid with maximal cosine similarity. Errors on a
/// zero-norm query rather than guessing.
pub fn classify_centroid(model: &CentroidModel, row: &[f64]) -> Result<ConflictLabel> {
    let mut best: Option<(f64, ConflictLabel)> = None;
    for (label, centroid) in &model.centroids {
        let sim = cosine(row, centroid)?;
        // Strict improvement only: earlier (low) wins exact ties.
        if best.map_or(true, |(s, _)| sim > s) {
            best = Some((sim, *label));
        }
    }
    best.map(|(_, l)| l).ok_or_else(|| Error::Data("model has no centroids".into()))
}
