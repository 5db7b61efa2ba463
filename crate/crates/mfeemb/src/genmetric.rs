//! Embedding-space generalizability: how tightly classes cluster versus how
//! much they bleed into each other.
//!
//! For feature rows grouped by class, the score is
//!
//! ```text
//! score = (1/N) * sum_c ( intra(c) - max_{c' != c} inter(c, c') )
//! ```
//!
//! where `intra(c)` is the mean cosine similarity over ordered pairs of
//! distinct rows within class `c` and `inter(c, c')` the mean cosine over all
//! cross-class row pairs. Positive scores mean classes cohere more than they
//! overlap; the score lives in [-2, 2].
//!
//! All pair similarities are aggregated by sorting before summation, so any
//! permutation of the input rows produces a bit-identical report.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::ConflictLabel;
use crate::util::{permutation_stable_mean, Mat};
use crate::{Error, Result};

/// Cosine similarity. Errors on zero-norm or non-finite input rather than
/// inventing a value.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Usage(format!(
            "cosine of vectors with different lengths ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if !(dot.is_finite() && na.is_finite() && nb.is_finite()) {
        return Err(Error::Numeric("non-finite input to cosine".into()));
    }
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Numeric("cosine undefined for zero-norm vector".into()));
    }
    Ok(dot / (na.sqrt() * nb.sqrt()))
}

/// Mean cosine over ordered pairs `(i, j), i != j` within one class. With the
/// similarity symmetric this equals the unordered-pair mean; the 1/(k(k-1))
/// normalization just counts each unordered pair twice. Requires `k >= 2`.
pub fn intra_class(rows: &[&[f64]]) -> Result<f64> {
    let k = rows.len();
    if k < 2 {
        return Err(Error::Data(format!(
            "intra-class similarity needs at least 2 rows, got {k}"
        )));
    }
    let mut sims = Vec::with_capacity(k * (k - 1));
    for i in 0..k {
        for j in 0..k {
            if i != j {
                sims.push(cosine(rows[i], rows[j])?);
            }
        }
    }
    Ok(permutation_stable_mean(&sims))
}

/// Mean cosine over all cross pairs of the two classes, normalized by
/// `1/(k_a * k_b)`. Requires both classes non-empty.
pub fn inter_class(a: &[&[f64]], b: &[&[f64]]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Data("inter-class similarity needs non-empty classes".into()));
    }
    let mut sims = Vec::with_capacity(a.len() * b.len());
    for ra in a {
        for rb in b {
            sims.push(cosine(ra, rb)?);
        }
    }
    Ok(permutation_stable_mean(&sims))
}

/// Per-class and aggregate similarity structure of a labeled embedding matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    /// Class name -> mean within-class cosine.
    pub intra: BTreeMap<String, f64>,
    /// "classA->classB" -> mean cross-class cosine.
    pub inter: BTreeMap<String, f64>,
    pub class_sizes: BTreeMap<String, usize>,
    pub score: f64,
}

/// Computes the generalizability score of labeled feature rows. Requires both
/// labels present with at least 2 rows each.
pub fn generalizability_score(features: &Mat, labels: &[ConflictLabel]) -> Result<SimilarityReport> {
    if features.rows() != labels.len() {
        return Err(Error::Usage(format!(
            "{} feature rows but {} labels",
            features.rows(),
            labels.len()
        )));
    }
    let mut groups: BTreeMap<ConflictLabel, Vec<&[f64]>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        groups.entry(l).or_default().push(features.row(i));
    }
    if groups.len() < 2 {
        return Err(Error::Data(
            "generalizability needs at least 2 classes present".into(),
        ));
    }
    for (l, rows) in &groups {
        if rows.len() < 2 {
            return Err(Error::Data(format!(
                "class {} has {} row(s); need at least 2",
                l,
                rows.len()
            )));
        }
    }

    let mut intra = BTreeMap::new();
    let mut class_sizes = BTreeMap::new();
    for (l, rows) in &groups {
        intra.insert(l.to_string(), intra_class(rows)?);
        class_sizes.insert(l.to_string(), rows.len());
    }
    let mut inter = BTreeMap::new();
    let classes: Vec<ConflictLabel> = groups.keys().copied().collect();
    for (ai, &ca) in classes.iter().enumerate() {
        for &cb in classes.iter().skip(ai + 1) {
            let v = inter_class(&groups[&ca], &groups[&cb])?;
            inter.insert(format!("{ca}->{cb}"), v);
            inter.insert(format!("{cb}->{ca}"), v);
        }
    }

    // score = mean over classes of (intra(c) - worst-case inter(c, *)).
    let mut terms: Vec<f64> = Vec::with_capacity(classes.len());
    for &c in &classes {
        let worst = classes
            .iter()
            .filter(|&&o| o != c)
            .map(|o| inter[&format!("{c}->{o}")])
            .fold(f64::NEG_INFINITY, f64::max);
        terms.push(intra[&c.to_string()] - worst);
    }
    let score = permutation_stable_mean(&terms);
    Ok(SimilarityReport { intra, inter, class_sizes, score })
}
