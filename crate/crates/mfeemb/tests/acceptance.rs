//! Acceptance gate: one test per release criterion, each printing a single
//! `criterion N (...): PASS/FAIL` line (visible with `--nocapture`, or in the
//! captured output of a failed run).

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use mfeemb::analyze::{da_frequency_by_class, top_ngrams};
use mfeemb::augment::{audit_robustness, augment_corpus, hamming, AugmentConfig, Thesaurus};
use mfeemb::classify::{
    classify_centroid, dual_objective, fit_centroids, kkt_max_violation, predict_svm, rbf_kernel,
    train_svm_smo, Gamma, SvmParams,
};
use mfeemb::corpus::{vocabulary, ConflictLabel};
use mfeemb::embed::{Channel, ChannelSet};
use mfeemb::experiment::{load_config, prepare, run_experiment, run_single, AugmentBlock};
use mfeemb::featurize::{tokenize, DaTagger, PolarityLexicon, TagSet};
use mfeemb::genmetric::generalizability_score;
use mfeemb::pvec::{ns_micro_grads, ns_micro_loss, train, NsMicro, PvMode, TrainConfig};
use mfeemb::synth::{
    desk_asist, desk_experiment_config, desk_lexicon_tsv, desk_teams, desk_thesaurus_tsv,
    two_topic_docs, write_desk_benchmark,
};
use mfeemb::util::Mat;

fn check(n: usize, label: &str, body: impl FnOnce() -> Result<String, String>) {
    match body() {
        Ok(detail) => println!("criterion {n} ({label}): PASS - {detail}"),
        Err(why) => {
            println!("criterion {n} ({label}): FAIL - {why}");
            panic!("criterion {n} ({label}): {why}");
        }
    }
}

fn naive_cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for i in 0..a.len() {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    dot / (na.sqrt() * nb.sqrt())
}

#[test]
fn criterion_1_generalizability_matches_naive_oracle() {
    check(1, "generalizability oracle", || {
        let start = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let mut worst: f64 = 0.0;
        for _ in 0..200 {
            let n = rng.random_range(4..=20usize);
            let n_low = rng.random_range(2..=n - 2);
            let dim = rng.random_range(3..=16usize);
            let mut rows: Vec<Vec<f64>> =
                (0..n).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let mut labels: Vec<ConflictLabel> = (0..n)
                .map(|i| {
                    if i < n_low {
                        ConflictLabel::LowConflict
                    } else {
                        ConflictLabel::HighConflict
                    }
                })
                .collect();
            // Interleave the classes so grouping is actually exercised.
            for i in (1..n).rev() {
                let j = rng.random_range(0..=i);
                rows.swap(i, j);
                labels.swap(i, j);
            }

            let mat = Mat::from_rows(rows.clone()).map_err(|e| e.to_string())?;
            let report = generalizability_score(&mat, &labels).map_err(|e| e.to_string())?;

            // Naive double-loop oracle.
            let mut groups: BTreeMap<ConflictLabel, Vec<&[f64]>> = BTreeMap::new();
            for (i, &l) in labels.iter().enumerate() {
                groups.entry(l).or_default().push(&rows[i]);
            }
            let mut naive_intra = BTreeMap::new();
            for (&l, members) in &groups {
                let m = members.len();
                let mut sum = 0.0;
                for i in 0..m {
                    for j in i + 1..m {
                        sum += naive_cosine(members[i], members[j]);
                    }
                }
                naive_intra.insert(l, sum / (m * (m - 1) / 2) as f64);
            }
            let low = &groups[&ConflictLabel::LowConflict];
            let high = &groups[&ConflictLabel::HighConflict];
            let mut cross = 0.0;
            for a in low {
                for b in high {
                    cross += naive_cosine(a, b);
                }
            }
            let inter = cross / (low.len() * high.len()) as f64;
            let naive_score = ((naive_intra[&ConflictLabel::LowConflict] - inter)
                + (naive_intra[&ConflictLabel::HighConflict] - inter))
                / 2.0;

            let diff = (report.score - naive_score).abs();
            worst = worst.max(diff);
            if diff > 1e-12 {
                return Err(format!("score {} vs oracle {naive_score}", report.score));
            }
            for (&l, &v) in &naive_intra {
                let got = report.intra[l.as_str()];
                if (got - v).abs() > 1e-12 {
                    return Err(format!("intra[{l}] {got} vs oracle {v}"));
                }
            }
            if (report.inter["low->high"] - inter).abs() > 1e-12 {
                return Err(format!("inter {} vs oracle {inter}", report.inter["low->high"]));
            }

            // Permutation invariance must be bit-exact.
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let prows: Vec<Vec<f64>> = order.iter().map(|&i| rows[i].clone()).collect();
            let plabels: Vec<ConflictLabel> = order.iter().map(|&i| labels[i]).collect();
            let pmat = Mat::from_rows(prows).map_err(|e| e.to_string())?;
            let pscore =
                generalizability_score(&pmat, &plabels).map_err(|e| e.to_string())?.score;
            if pscore.to_bits() != report.score.to_bits() {
                return Err(format!("permuted score {pscore} != {}", report.score));
            }

            // Power-of-two row scaling must be bit-exact.
            let scales = [0.25, 0.5, 2.0, 4.0, 8.0];
            let srows: Vec<Vec<f64>> = rows
                .iter()
                .map(|r| {
                    let s = scales[rng.random_range(0..scales.len())];
                    r.iter().map(|v| v * s).collect()
                })
                .collect();
            let smat = Mat::from_rows(srows).map_err(|e| e.to_string())?;
            let sscore = generalizability_score(&smat, &labels).map_err(|e| e.to_string())?.score;
            if sscore.to_bits() != report.score.to_bits() {
                return Err(format!("scaled score {sscore} != {}", report.score));
            }
        }
        let secs = start.elapsed().as_secs_f64();
        if secs >= 5.0 {
            return Err(format!("took {secs:.1}s, budget is 5s"));
        }
        Ok(format!("200 instances, worst oracle gap {worst:.2e}, {secs:.2}s"))
    });
}

#[test]
fn criterion_2_multi_feature_embedding_transfers_where_words_alone_cannot() {
    check(2, "cross-domain trend", || {
        let start = Instant::now();
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        write_desk_benchmark(dir.path(), 7).map_err(|e| e.to_string())?;
        let cfg = load_config(dir.path().join("desk_config.json")).map_err(|e| e.to_string())?;
        if cfg.runs != 15 {
            return Err(format!("benchmark config has {} runs, expected 15", cfg.runs));
        }
        let mut word_cfg = cfg.clone();
        word_cfg.channels = ChannelSet::of(&[Channel::Word]).map_err(|e| e.to_string())?;

        let full = run_experiment(&cfg).map_err(|e| e.to_string())?;
        let word = run_experiment(&word_cfg).map_err(|e| e.to_string())?;

        let wins = (0..cfg.runs)
            .filter(|&r| {
                full.runs[r].generalizability["desk_asist"].score
                    > word.runs[r].generalizability["desk_asist"].score
            })
            .count();
        let f1_full = full.aggregate["desk_asist"].weighted_f1.mean;
        let f1_word = word.aggregate["desk_asist"].weighted_f1.mean;

        if wins < 14 {
            return Err(format!(
                "multi-feature generalizability beat word-only in only {wins}/15 runs"
            ));
        }
        if f1_full - f1_word < 0.05 {
            return Err(format!(
                "target F1 margin {:.3} (multi {f1_full:.3} vs word {f1_word:.3}) below 0.05",
                f1_full - f1_word
            ));
        }
        let secs = start.elapsed().as_secs_f64();
        if secs >= 120.0 {
            return Err(format!("took {secs:.1}s, budget is 120s"));
        }
        Ok(format!(
            "score wins {wins}/15, F1 {f1_full:.3} vs {f1_word:.3} (margin {:.3}), {secs:.1}s",
            f1_full - f1_word
        ))
    });
}

#[test]
fn criterion_3_centroid_classifier_matches_exhaustive_oracle() {
    check(3, "few-shot centroid oracle", || {
        let mut rng = ChaCha8Rng::seed_from_u64(303);
        let mut queries = 0usize;
        for _ in 0..1000 {
            let dim = rng.random_range(2..=8usize);
            let m_low = rng.random_range(1..=6usize);
            let m_high = rng.random_range(1..=6usize);
            let mut rows = Vec::new();
            let mut labels = Vec::new();
            for _ in 0..m_low {
                rows.push((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>());
                labels.push(ConflictLabel::LowConflict);
            }
            for _ in 0..m_high {
                rows.push((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>());
                labels.push(ConflictLabel::HighConflict);
            }
            let mat = Mat::from_rows(rows.clone()).map_err(|e| e.to_string())?;
            let model = fit_centroids(&mat, &labels).map_err(|e| e.to_string())?;

            // Independent per-class means.
            let mut naive = Vec::new();
            for class in [ConflictLabel::LowConflict, ConflictLabel::HighConflict] {
                let members: Vec<&Vec<f64>> = rows
                    .iter()
                    .zip(&labels)
                    .filter(|(_, &l)| l == class)
                    .map(|(r, _)| r)
                    .collect();
                let mut mean = vec![0.0; dim];
                for r in &members {
                    for (m, v) in mean.iter_mut().zip(r.iter()) {
                        *m += v;
                    }
                }
                mean.iter_mut().for_each(|m| *m /= members.len() as f64);
                naive.push((class, mean));
            }
            for ((cl, cv), (nl, nv)) in model.centroids.iter().zip(&naive) {
                if cl != nl {
                    return Err(format!("centroid order {cl} vs {nl}"));
                }
                for (a, b) in cv.iter().zip(nv) {
                    if (a - b).abs() > 1e-12 {
                        return Err(format!("centroid value {a} vs independent mean {b}"));
                    }
                }
            }

            for _ in 0..3 {
                let q: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
                let got = classify_centroid(&model, &q).map_err(|e| e.to_string())?;
                let mut want = naive[0].0;
                let mut best = naive_cosine(&q, &naive[0].1);
                for (cl, cv) in &naive[1..] {
                    let s = naive_cosine(&q, cv);
                    if s > best {
                        best = s;
                        want = *cl;
                    }
                }
                if got != want {
                    return Err(format!("prediction {got} but cosine argmax oracle says {want}"));
                }
                queries += 1;
            }
        }
        Ok(format!("1000 instances, {queries} predictions, exact agreement"))
    });
}

#[test]
fn criterion_4_paragraph_vector_gradients_and_topic_separation() {
    check(4, "paragraph-vector correctness", || {
        let start = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(404);
        let mut worst_rel: f64 = 0.0;
        for _ in 0..50 {
            let dim = rng.random_range(2..=8usize);
            let n_contrib = rng.random_range(1..=4usize);
            let n_noise = rng.random_range(0..=5usize);
            let vec_of = |rng: &mut ChaCha8Rng| -> Vec<f64> {
                (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect()
            };
            let m = NsMicro {
                contributors: (0..n_contrib).map(|_| vec_of(&mut rng)).collect(),
                target: vec_of(&mut rng),
                noise: (0..n_noise).map(|_| vec_of(&mut rng)).collect(),
            };
            let grads = ns_micro_grads(&m);
            let h = 1e-5;
            let mut check_block = |select: &dyn Fn(&mut NsMicro) -> &mut Vec<f64>,
                                   analytic: &[f64]|
             -> Result<(), String> {
                for k in 0..dim {
                    let mut plus = m.clone();
                    select(&mut plus)[k] += h;
                    let mut minus = m.clone();
                    select(&mut minus)[k] -= h;
                    let fd = (ns_micro_loss(&plus) - ns_micro_loss(&minus)) / (2.0 * h);
                    let g = analytic[k];
                    let abs = (g - fd).abs();
                    let rel = abs / g.abs().max(fd.abs()).max(1e-12);
                    if abs > 1e-8 && rel > 1e-5 {
                        return Err(format!("gradient {g} vs finite difference {fd}"));
                    }
                    if abs > 1e-8 {
                        worst_rel = worst_rel.max(rel);
                    }
                }
                Ok(())
            };
            for c in 0..n_contrib {
                check_block(&move |m: &mut NsMicro| &mut m.contributors[c], &grads.contributors[c])?;
            }
            check_block(&|m: &mut NsMicro| &mut m.target, &grads.target)?;
            for nn in 0..n_noise {
                check_block(&move |m: &mut NsMicro| &mut m.noise[nn], &grads.noise[nn])?;
            }
        }

        let (docs, topics) = two_topic_docs(20, 30, 11);
        let cfg = TrainConfig {
            mode: PvMode::Dm,
            dim: 16,
            epochs: 80,
            window: 4,
            negative: 5,
            alpha: 0.05,
            min_alpha: 1e-4,
            min_count: 1,
            sample: None,
            seed: 77,
        };
        let model = train(&docs, &cfg).map_err(|e| e.to_string())?;
        let vecs: Vec<&[f64]> = docs
            .iter()
            .map(|d| {
                let idx = model.doc_index(&d.id).expect("trained doc");
                model.doc_vectors.row(idx)
            })
            .collect();
        let mut same_topic = 0usize;
        for i in 0..vecs.len() {
            let mut best = None;
            let mut best_sim = f64::NEG_INFINITY;
            for j in 0..vecs.len() {
                if i == j {
                    continue;
                }
                let s = naive_cosine(vecs[i], vecs[j]);
                if s > best_sim {
                    best_sim = s;
                    best = Some(j);
                }
            }
            if topics[i] == topics[best.unwrap()] {
                same_topic += 1;
            }
        }
        let frac = same_topic as f64 / vecs.len() as f64;
        if frac < 0.9 {
            return Err(format!("only {same_topic}/40 same-topic nearest neighbors"));
        }

        let again = train(&docs, &cfg).map_err(|e| e.to_string())?;
        let identical = |a: &Mat, b: &Mat| {
            a.as_slice().iter().zip(b.as_slice()).all(|(x, y)| x.to_bits() == y.to_bits())
        };
        if !identical(&model.doc_vectors, &again.doc_vectors)
            || !identical(&model.word_vectors, &again.word_vectors)
            || !identical(&model.context_vectors, &again.context_vectors)
        {
            return Err("retraining under the same seed was not bit-identical".into());
        }
        let secs = start.elapsed().as_secs_f64();
        if secs >= 60.0 {
            return Err(format!("took {secs:.1}s, budget is 60s"));
        }
        Ok(format!(
            "50 gradient checks (worst rel {worst_rel:.1e}), {same_topic}/40 topic NNs, bit-identical retrain, {secs:.1}s"
        ))
    });
}

/// Gauss-Jordan with partial pivoting; `None` when the system is singular.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r][col] / a[col][col];
            for k in col..n {
                a[r][k] -= f * a[col][k];
            }
            b[r] -= f * b[col];
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Globally optimal dual objective by enumerating every active-set pattern
/// (each multiplier at 0, at C, or free) and solving the KKT system.
fn qp_oracle(k: &Mat, y: &[f64], c: f64) -> f64 {
    let n = y.len();
    let q = |i: usize, j: usize| y[i] * y[j] * k.row(i)[j];
    let objective = |alpha: &[f64]| {
        let mut w = 0.0;
        for i in 0..n {
            w += alpha[i];
            for j in 0..n {
                w -= 0.5 * alpha[i] * alpha[j] * q(i, j);
            }
        }
        w
    };
    let eps = 1e-7;
    let mut best = f64::NEG_INFINITY;
    for pattern in 0..3usize.pow(n as u32) {
        let mut kind = vec![0u8; n];
        let mut p = pattern;
        for slot in kind.iter_mut() {
            *slot = (p % 3) as u8;
            p /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| kind[i] == 2).collect();
        let mut alpha = vec![0.0; n];
        for i in 0..n {
            if kind[i] == 1 {
                alpha[i] = c;
            }
        }
        if free.is_empty() {
            let balance: f64 = (0..n).map(|i| y[i] * alpha[i]).sum();
            if balance.abs() > eps {
                continue;
            }
            let mut lo = f64::NEG_INFINITY;
            let mut hi = f64::INFINITY;
            for i in 0..n {
                let g = 1.0 - (0..n).map(|j| q(i, j) * alpha[j]).sum::<f64>();
                match (kind[i], y[i] > 0.0) {
                    (0, true) => lo = lo.max(g),
                    (0, false) => hi = hi.min(-g),
                    (1, true) => hi = hi.min(g),
                    (1, false) => lo = lo.max(-g),
                    _ => unreachable!(),
                }
            }
            if lo <= hi + eps {
                best = best.max(objective(&alpha));
            }
            continue;
        }
        let f = free.len();
        let mut a = vec![vec![0.0; f + 1]; f + 1];
        let mut rhs = vec![0.0; f + 1];
        for (r, &i) in free.iter().enumerate() {
            for (cidx, &j) in free.iter().enumerate() {
                a[r][cidx] = q(i, j);
            }
            a[r][f] = y[i];
            rhs[r] = 1.0 - (0..n).filter(|&j| kind[j] == 1).map(|j| q(i, j) * c).sum::<f64>();
        }
        for (cidx, &j) in free.iter().enumerate() {
            a[f][cidx] = y[j];
        }
        rhs[f] = -(0..n).filter(|&j| kind[j] == 1).map(|j| y[j] * c).sum::<f64>();
        let Some(sol) = solve_linear(a, rhs) else { continue };
        let b = sol[f];
        if sol[..f].iter().any(|&v| v < -eps || v > c + eps) {
            continue;
        }
        for (idx, &i) in free.iter().enumerate() {
            alpha[i] = sol[idx].clamp(0.0, c);
        }
        let mut feasible = true;
        for i in 0..n {
            if kind[i] == 2 {
                continue;
            }
            let g = 1.0 - (0..n).map(|j| q(i, j) * alpha[j]).sum::<f64>();
            let lagrangian = g - b * y[i];
            if (kind[i] == 0 && lagrangian > eps) || (kind[i] == 1 && lagrangian < -eps) {
                feasible = false;
                break;
            }
        }
        if feasible {
            best = best.max(objective(&alpha));
        }
    }
    best
}

#[test]
fn criterion_5_smo_reaches_the_qp_optimum() {
    check(5, "SMO correctness", || {
        let mut rng = ChaCha8Rng::seed_from_u64(505);
        let gamma = 0.8;
        let cs = [0.5, 2.0, 10.0];
        let mut instances = 0usize;
        let mut worst_gap: f64 = 0.0;
        for (idx, &n) in [4usize, 4, 6, 6, 8, 8, 10, 10, 12].iter().enumerate() {
            let c = cs[idx % cs.len()];
            let (rows, labels) = loop {
                let rows: Vec<Vec<f64>> = (0..n)
                    .map(|_| (0..2).map(|_| rng.random_range(-1.0..1.0)).collect())
                    .collect();
                let labels: Vec<ConflictLabel> = (0..n)
                    .map(|_| {
                        if rng.random::<bool>() {
                            ConflictLabel::HighConflict
                        } else {
                            ConflictLabel::LowConflict
                        }
                    })
                    .collect();
                let highs = labels.iter().filter(|&&l| l == ConflictLabel::HighConflict).count();
                if highs > 0 && highs < n {
                    break (rows, labels);
                }
            };
            let x = Mat::from_rows(rows.clone()).map_err(|e| e.to_string())?;
            let params = SvmParams {
                c,
                gamma: Gamma::Value(gamma),
                tol: 1e-7,
                max_iter: 10_000_000,
                seed: 9,
            };
            let model = train_svm_smo(&x, &labels, &params).map_err(|e| e.to_string())?;

            let y: Vec<f64> = labels
                .iter()
                .map(|&l| if l == ConflictLabel::HighConflict { 1.0 } else { -1.0 })
                .collect();
            let mut gram = Mat::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    gram.row_mut(i)[j] = rbf_kernel(&rows[i], &rows[j], gamma);
                }
            }

            if model.alphas.iter().any(|&a| a < -1e-9 || a > c + 1e-9) {
                return Err("a multiplier escaped the [0, C] box".into());
            }
            let kkt = kkt_max_violation(&model.alphas, &y, &gram, model.bias, c);
            if kkt > 1e-3 {
                return Err(format!("KKT residual {kkt:.2e} above 1e-3"));
            }

            let achieved = dual_objective(&model.alphas, &y, &gram);
            let optimum = qp_oracle(&gram, &y, c);
            let gap = (optimum - achieved).abs();
            worst_gap = worst_gap.max(gap);
            if gap > 1e-6 {
                return Err(format!(
                    "n={n} C={c}: dual objective {achieved} vs QP oracle optimum {optimum}"
                ));
            }
            instances += 1;
        }

        let xor_rows = vec![
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
        ];
        let xor_labels = vec![
            ConflictLabel::LowConflict,
            ConflictLabel::LowConflict,
            ConflictLabel::HighConflict,
            ConflictLabel::HighConflict,
        ];
        let x = Mat::from_rows(xor_rows.clone()).map_err(|e| e.to_string())?;
        let params =
            SvmParams { c: 10.0, gamma: Gamma::Value(2.0), tol: 1e-6, max_iter: 1_000_000, seed: 9 };
        let model = train_svm_smo(&x, &xor_labels, &params).map_err(|e| e.to_string())?;
        for (row, &want) in xor_rows.iter().zip(&xor_labels) {
            if predict_svm(&model, row) != want {
                return Err("XOR with an RBF kernel was not fit to accuracy 1.0".into());
            }
        }
        Ok(format!("{instances} QP instances, worst optimality gap {worst_gap:.2e}, XOR exact"))
    });
}

#[test]
fn criterion_6_augmentation_budget_vocabulary_and_sentiment_stability() {
    check(6, "augmentation contract", || {
        let tagset = TagSet::bundled();
        let lexicon = PolarityLexicon::parse(&desk_lexicon_tsv()).map_err(|e| e.to_string())?;
        let thesaurus = Thesaurus::parse(&desk_thesaurus_tsv()).map_err(|e| e.to_string())?;
        let source = desk_teams(3).corpus;

        let cfg = AugmentConfig { rate: 0.1, copies: 4, target_vocab: None, seed: 5 };
        let (synthetic, logs) =
            augment_corpus(&source, &thesaurus, &cfg, false).map_err(|e| e.to_string())?;
        if synthetic.len() != 4 * source.len() {
            return Err(format!(
                "copies=4 produced {} synthetic dialogues from {}",
                synthetic.len(),
                source.len()
            ));
        }
        for d in &source.dialogues {
            let replaceable: usize = d
                .utterances
                .iter()
                .flat_map(|u| tokenize(&u.text))
                .filter(|t| !thesaurus.synonyms(t).is_empty())
                .count();
            let expected =
                if replaceable == 0 { 0 } else { 1usize.max((0.1 * replaceable as f64).round() as usize) };
            for k in 1..=4 {
                let log = &logs[&format!("{}_syn{k}", d.id)];
                if log.len() != expected {
                    return Err(format!(
                        "dialogue {} copy {k}: {} replacements, budget says {expected} of {replaceable}",
                        d.id,
                        log.len()
                    ));
                }
                for r in log {
                    if !thesaurus.synonyms(&r.original).contains(&r.replacement) {
                        return Err(format!(
                            "replacement {} -> {} is not in the thesaurus",
                            r.original, r.replacement
                        ));
                    }
                }
            }
        }

        let target_vocab = vocabulary(&desk_asist(3).corpus);
        let mut total = 0usize;
        let mut seed = 0u64;
        while total < 10_000 {
            let cfg = AugmentConfig {
                rate: 1.0,
                copies: 10,
                target_vocab: Some(target_vocab.clone()),
                seed,
            };
            let (_, logs) =
                augment_corpus(&source, &thesaurus, &cfg, false).map_err(|e| e.to_string())?;
            for log in logs.values() {
                for r in log {
                    if !target_vocab.contains(&r.replacement) {
                        return Err(format!(
                            "constrained replacement emitted {} outside the target vocabulary",
                            r.replacement
                        ));
                    }
                    total += 1;
                }
            }
            seed += 1;
        }

        let cfg = AugmentConfig { rate: 0.3, copies: 4, target_vocab: None, seed: 21 };
        let (synthetic, _) =
            augment_corpus(&source, &thesaurus, &cfg, false).map_err(|e| e.to_string())?;
        let audit = audit_robustness(&source, &synthetic, &DaTagger::Pretagged, &lexicon, 5, &tagset)
            .map_err(|e| e.to_string())?;
        if audit.mean_senti_hamming != 0.0 {
            return Err(format!(
                "equal-polarity thesaurus moved quantized sentiment by {}",
                audit.mean_senti_hamming
            ));
        }
        Ok(format!(
            "budgets exact on 48 copies, {total} constrained replacements with 0 violations, sentiment Hamming 0"
        ))
    });
}

#[test]
fn criterion_7_hamming_and_ngram_oracles() {
    check(7, "analytics oracles", || {
        let mut rng = ChaCha8Rng::seed_from_u64(707);
        for _ in 0..500 {
            let len_a = rng.random_range(0..=12usize);
            let len_b = rng.random_range(0..=12usize);
            let a: Vec<u32> = (0..len_a).map(|_| rng.random_range(0..5)).collect();
            let b: Vec<u32> = (0..len_b).map(|_| rng.random_range(0..5)).collect();
            let naive = {
                let max = len_a.max(len_b);
                if max == 0 {
                    0.0
                } else {
                    let mut mismatches = 0usize;
                    for t in 0..max {
                        if a.get(t) != b.get(t) {
                            mismatches += 1;
                        }
                    }
                    mismatches as f64 / max as f64
                }
            };
            if hamming(&a, &b) != naive {
                return Err(format!("hamming({a:?}, {b:?}) = {} vs oracle {naive}", hamming(&a, &b)));
            }
        }

        let alphabet = ["a", "b", "c", "d", "e"];
        for _ in 0..500 {
            let seqs: Vec<Vec<String>> = (0..rng.random_range(1..=6usize))
                .map(|_| {
                    (0..rng.random_range(0..=8usize))
                        .map(|_| alphabet[rng.random_range(0..alphabet.len())].to_string())
                        .collect()
                })
                .collect();
            let n = rng.random_range(1..=3usize);
            let k = rng.random_range(1..=6usize);
            let got = top_ngrams(&seqs, n, k).map_err(|e| e.to_string())?;

            let mut counts: Vec<(Vec<String>, u64)> = Vec::new();
            for seq in &seqs {
                if seq.len() < n {
                    continue;
                }
                for start in 0..=seq.len() - n {
                    let gram: Vec<String> = seq[start..start + n].to_vec();
                    match counts.iter_mut().find(|(g, _)| *g == gram) {
                        Some((_, c)) => *c += 1,
                        None => counts.push((gram, 1)),
                    }
                }
            }
            counts.sort_by(|x, y| y.1.cmp(&x.1).then_with(|| x.0.cmp(&y.0)));
            counts.truncate(k);
            if got != counts {
                return Err(format!("top_ngrams (n={n}, k={k}) disagreed with the oracle"));
            }
        }

        let corpus = desk_teams(5).corpus;
        let freqs = da_frequency_by_class(&corpus, &DaTagger::Pretagged, &TagSet::bundled())
            .map_err(|e| e.to_string())?;
        for (class, tags) in &freqs {
            let sum: f64 = tags.values().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(format!("DA frequencies for class {class} sum to {sum}"));
            }
        }
        Ok("500 hamming + 500 n-gram instances exact, DA frequencies normalized".into())
    });
}

#[test]
fn criterion_8_cli_run_is_byte_deterministic() {
    check(8, "end-to-end determinism", || {
        let start = Instant::now();
        let exe = env!("CARGO_BIN_EXE_mfeemb");
        let bench = Path::new(env!("CARGO_MANIFEST_DIR")).join("benchmark");
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;

        // The committed benchmark must be exactly what the generator emits.
        let regen = dir.path().join("regen");
        let status = Command::new(exe)
            .args(["make-desk-corpus", "--out"])
            .arg(&regen)
            .args(["--seed", "7"])
            .status()
            .map_err(|e| e.to_string())?;
        if !status.success() {
            return Err("make-desk-corpus failed".into());
        }
        for name in [
            "desk_teams.jsonl",
            "desk_teams.channels.json",
            "desk_asist.jsonl",
            "desk_asist.channels.json",
            "desk_lexicon.tsv",
            "desk_thesaurus.tsv",
            "desk_config.json",
        ] {
            let committed = std::fs::read(bench.join(name)).map_err(|e| e.to_string())?;
            let fresh = std::fs::read(regen.join(name)).map_err(|e| e.to_string())?;
            if committed != fresh {
                return Err(format!("bundled {name} differs from the generator output"));
            }
        }

        let mut reports = Vec::new();
        for i in 0..2 {
            let out = dir.path().join(format!("report{i}.json"));
            let status = Command::new(exe)
                .args(["run", "--config"])
                .arg(bench.join("desk_config.json"))
                .arg("--out")
                .arg(&out)
                .status()
                .map_err(|e| e.to_string())?;
            if !status.success() {
                return Err(format!("run invocation {i} failed"));
            }
            reports.push(std::fs::read(&out).map_err(|e| e.to_string())?);
        }
        if reports[0] != reports[1] {
            return Err("two runs of the bundled config produced different report bytes".into());
        }
        let secs = start.elapsed().as_secs_f64();
        if secs >= 600.0 {
            return Err(format!("took {secs:.1}s, budget is 600s"));
        }
        Ok(format!("{} byte-identical report bytes, {secs:.1}s", reports[0].len()))
    });
}

#[test]
fn criterion_9_target_tokens_never_reach_training() {
    check(9, "transfer hygiene", || {
        let sentinel = "zqsentinelqz";
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let source = desk_teams(9).corpus;
        let mut target = desk_asist(9).corpus;
        for d in &mut target.dialogues {
            for u in &mut d.utterances {
                u.text.push(' ');
                u.text.push_str(sentinel);
            }
        }
        mfeemb::corpus::save_corpus(&source, dir.path().join("source.jsonl"))
            .map_err(|e| e.to_string())?;
        mfeemb::corpus::save_corpus(&target, dir.path().join("target.jsonl"))
            .map_err(|e| e.to_string())?;
        std::fs::write(dir.path().join("lex.tsv"), desk_lexicon_tsv()).map_err(|e| e.to_string())?;
        std::fs::write(dir.path().join("thes.tsv"), desk_thesaurus_tsv())
            .map_err(|e| e.to_string())?;

        let mut cfg = desk_experiment_config();
        cfg.source = "source.jsonl".into();
        cfg.targets = vec!["target.jsonl".into()];
        cfg.lexicon = Some("lex.tsv".into());
        cfg.runs = 2;
        cfg.base_dir = dir.path().to_path_buf();
        cfg.augment = Some(AugmentBlock {
            thesaurus: Some("thes.tsv".into()),
            rate: 0.2,
            copies: 2,
            target_vocab_from: Some("target.jsonl".into()),
            include_originals: true,
        });

        let report = run_experiment(&cfg).map_err(|e| e.to_string())?;
        if report.runs.len() != 2 || report.augment_audit.is_none() {
            return Err("experiment with augmentation did not produce the expected report".into());
        }

        let prep = prepare(&cfg).map_err(|e| e.to_string())?;
        let tv = prep.target_vocab.clone().ok_or("target vocabulary was not prepared")?;
        if !tv.contains(sentinel) {
            return Err("instrumentation failure: sentinel missing from the target vocabulary".into());
        }
        let (result, artifacts) = run_single(&prep, 0).map_err(|e| e.to_string())?;

        if artifacts.models.word.vocab.contains(sentinel)
            || artifacts.models.da.vocab.contains(sentinel)
            || artifacts.models.senti.vocab.contains(sentinel)
        {
            return Err("sentinel leaked into a trained vocabulary".into());
        }
        let train_vocab = vocabulary(&artifacts.train_corpus);
        if train_vocab.contains(sentinel) {
            return Err("sentinel leaked into the classifier's training corpus".into());
        }
        if result.train_dialogues != 3 * source.len() {
            return Err(format!(
                "classifier saw {} dialogues, expected {} (source + 2 copies)",
                result.train_dialogues,
                3 * source.len()
            ));
        }
        if artifacts.train_corpus.dialogues.iter().any(|d| !d.id.starts_with("teams_")) {
            return Err("a non-source dialogue reached classifier training".into());
        }
        // Target vocabulary may act only as the augmentation filter: anything
        // new in the training vocabulary must come from that filtered set.
        let source_vocab = vocabulary(&source);
        let leaked: BTreeSet<&String> = train_vocab
            .iter()
            .filter(|t| !source_vocab.contains(*t) && !tv.contains(*t))
            .collect();
        if !leaked.is_empty() {
            return Err(format!("training vocabulary grew outside the allowed sets: {leaked:?}"));
        }

        let mut plain = cfg.clone();
        plain.augment = None;
        let prep = prepare(&plain).map_err(|e| e.to_string())?;
        let (result, artifacts) = run_single(&prep, 0).map_err(|e| e.to_string())?;
        if artifacts.models.word.vocab.contains(sentinel) || result.train_dialogues != source.len()
        {
            return Err("unaugmented run was not limited to the source corpus".into());
        }
        Ok("sentinel stayed out of every trained vocabulary and classifier input".into())
    });
}
