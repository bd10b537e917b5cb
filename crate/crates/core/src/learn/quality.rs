//! Bigram logistic-regression text-quality model, trained on rated posts.
//! Ratings above 3 are labeled appropriate; the model scores the probability
//! that a post is appropriate.

use super::{train_logreg, DesignMatrix, LearnError, LinearModel, TrainOptions};
use crate::textfeat;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Ratings strictly above this are labeled appropriate.
pub const APPROPRIATE_RATING_THRESHOLD: f64 = 3.0;

/// Bigrams must occur at least this often in training to enter the vocabulary.
pub const MIN_BIGRAM_COUNT: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityModel {
    pub model: LinearModel,
}

pub fn bigram_key(a: &str, b: &str) -> String {
    format!("{a} {b}")
}

fn bigram_counts(text: &str) -> BTreeMap<String, f64> {
    let mut counts = BTreeMap::new();
    if let Ok(t) = textfeat::tokenize(text) {
        for (a, b) in textfeat::bigrams(&t) {
            *counts.entry(bigram_key(&a, &b)).or_insert(0.0) += 1.0;
        }
    }
    counts
}

/// Trains the text-quality model on `(text, rating)` pairs. The vocabulary
/// keeps bigrams seen at least [`MIN_BIGRAM_COUNT`] times in the training
/// texts; bigram counts are used raw (no standardization), so a post with no
/// in-vocabulary bigram scores exactly `sigmoid(bias)`.
pub fn train_quality_model(
    labeled: &[(String, f64)],
    opts: &TrainOptions,
) -> Result<QualityModel, LearnError> {
    let labels: Vec<bool> = labeled
        .iter()
        .map(|(_, r)| *r > APPROPRIATE_RATING_THRESHOLD)
        .collect();
    if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
        return Err(LearnError::SingleClass);
    }
    let per_post: Vec<BTreeMap<String, f64>> =
        labeled.iter().map(|(text, _)| bigram_counts(text)).collect();
    let mut totals: BTreeMap<&str, usize> = BTreeMap::new();
    for counts in &per_post {
        for (k, v) in counts {
            *totals.entry(k.as_str()).or_insert(0) += *v as usize;
        }
    }
    let vocabulary: BTreeMap<String, u32> = totals
        .into_iter()
        .filter(|(_, c)| *c >= MIN_BIGRAM_COUNT)
        .enumerate()
        .map(|(i, (k, _))| (k.to_string(), i as u32))
        .collect();
    if vocabulary.is_empty() {
        return Err(LearnError::EmptyVocabulary);
    }
    let rows: Vec<Vec<(u32, f64)>> = per_post
        .iter()
        .map(|counts| {
            counts
                .iter()
                .filter_map(|(k, v)| vocabulary.get(k).map(|&j| (j, *v)))
                .collect()
        })
        .collect();
    let names: Vec<String> = vocabulary.keys().cloned().collect();
    let x = DesignMatrix::from_sparse(rows, vocabulary.len());
    let train_opts = TrainOptions { standardize: false, ..opts.clone() };
    let mut model = train_logreg(&x, &labels, None, Some(names), &train_opts)?;
    model.vocabulary = Some(vocabulary);
    Ok(QualityModel { model })
}

impl QualityModel {
    /// Probability that the post text is appropriate.
    pub fn score(&self, text: &str) -> f64 {
        let vocab = self.model.vocabulary.as_ref().expect("quality model has vocabulary");
        let row: Vec<(u32, f64)> = bigram_counts(text)
            .iter()
            .filter_map(|(k, v)| vocab.get(k).map(|&j| (j, *v)))
            .collect();
        self.model.predict_sparse(&row)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::{auc, stratified_folds};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn labeled_fixture() -> Vec<(String, f64)> {
        let mut out = Vec::new();
        for i in 0..12 {
            if i % 2 == 0 {
                out.push((format!("very nice topic here number {i}"), 4.0));
            } else {
                out.push((format!("awful mess topic here number {i}"), 2.0));
            }
        }
        out
    }

    #[test]
    fn separating_bigram_dominates() {
        let labeled = labeled_fixture();
        let qm = train_quality_model(&labeled, &TrainOptions::default()).unwrap();
        let names = &qm.model.feature_names;
        let weights = &qm.model.weights;
        let max_idx = (0..weights.len())
            .max_by(|&a, &b| weights[a].abs().partial_cmp(&weights[b].abs()).unwrap())
            .unwrap();
        let top = &names[max_idx];
        assert!(
            top.contains("very nice") || top.contains("nice topic")
                || top.contains("awful mess") || top.contains("mess topic"),
            "top bigram was {top}"
        );
    }

    #[test]
    fn out_of_vocabulary_post_scores_sigmoid_bias() {
        let labeled = labeled_fixture();
        let qm = train_quality_model(&labeled, &TrainOptions::default()).unwrap();
        let b = qm.model.bias;
        let expect = 1.0 / (1.0 + (-b).exp());
        let s = qm.score("zzz qqq xxx unheard tokens entirely");
        assert_abs_diff_eq!(s, expect, epsilon = 1e-9);
    }

    #[test]
    fn single_class_and_empty_vocab_rejected() {
        let all_good: Vec<(String, f64)> =
            (0..6).map(|i| (format!("fine text {i}"), 5.0)).collect();
        assert!(matches!(
            train_quality_model(&all_good, &TrainOptions::default()),
            Err(LearnError::SingleClass)
        ));
        // every bigram unique -> nothing reaches the minimum count
        let labeled = vec![
            ("alpha beta".to_string(), 5.0),
            ("gamma delta".to_string(), 1.0),
        ];
        assert!(matches!(
            train_quality_model(&labeled, &TrainOptions::default()),
            Err(LearnError::EmptyVocabulary)
        ));
    }

    #[test]
    fn planted_signal_recovered_under_cross_validation() {
        // posts with planted "quality" tokens; ratings track them noisily
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut labeled = Vec::new();
        for i in 0..400 {
            let good = i % 2 == 0;
            let mut words = Vec::new();
            for _ in 0..12 {
                let w = if good && rng.gen_bool(0.4) {
                    "kind words"
                } else if !good && rng.gen_bool(0.4) {
                    "hostile words"
                } else {
                    ["some topic", "other stuff", "daily news"][rng.gen_range(0..3)]
                };
                words.push(w);
            }
            let text = words.join(" ");
            let rating = if good { 4.0 } else { 2.0 };
            labeled.push((text, rating));
        }
        let labels: Vec<bool> = labeled.iter().map(|(_, r)| *r > 3.0).collect();
        let folds = stratified_folds(&labels, 10, 3).unwrap();
        let mut scores = vec![0.0; labeled.len()];
        for fold in 0..10 {
            let train: Vec<(String, f64)> = labeled
                .iter()
                .enumerate()
                .filter(|(i, _)| folds[*i] != fold)
                .map(|(_, l)| l.clone())
                .collect();
            let qm = train_quality_model(&train, &TrainOptions::default()).unwrap();
            for (i, (text, _)) in labeled.iter().enumerate() {
                if folds[i] == fold {
                    scores[i] = qm.score(text);
                }
            }
        }
        let a = auc(&scores, &labels).unwrap();
        assert!(a > 0.65, "cross-validated quality AUC {a}");
    }
}
