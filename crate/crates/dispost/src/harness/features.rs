//! Mutual-information feature selection for word-count corpora.
//!
//! Words are scored by the mutual information between the class label and
//! the word's presence (count > 0) in a document, estimated from empirical
//! counts with add-one smoothing on every (class, presence) cell. Selection
//! must be computed on the training split alone; test documents are then
//! projected onto the selected vocabulary.

use crate::data::{Dataset, FeatureValue, Observation};
use crate::error::{Error, Result};
use crate::logspace::stable_sum;

/// The outcome of selecting the most class-informative words.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSelection {
    /// Selected word ids in ascending order, so projected columns keep the
    /// original relative order.
    pub word_ids: Vec<usize>,
    /// Mutual information of each selected word, aligned with `word_ids`.
    pub scores: Vec<f64>,
}

impl FeatureSelection {
    /// Projects a dataset onto the selected vocabulary.
    pub fn project(&self, dataset: &Dataset) -> Result<Dataset> {
        project(dataset, &self.word_ids)
    }
}

/// Mutual information between class and word presence for every word, from
/// smoothed empirical counts.
pub fn mutual_information_scores(corpus: &Dataset) -> Result<Vec<f64>> {
    if corpus.is_empty() {
        return Err(Error::Config(
            "feature selection needs a non-empty corpus".into(),
        ));
    }
    let classes = corpus.num_classes();
    let words = corpus.feature_dim();
    // present[w][c] = number of class-c documents containing word w.
    let mut present = vec![vec![0usize; classes]; words];
    let mut class_totals = vec![0usize; classes];
    for obs in corpus.iter() {
        class_totals[obs.class] += 1;
        for (w, f) in obs.features.iter().enumerate() {
            let count = f.observed().ok_or_else(|| Error::UnexpectedMissing {
                context: "feature selection on a corpus with missing counts".to_string(),
            })?;
            if count > 0.0 {
                present[w][obs.class] += 1;
            }
        }
    }
    let smoothed_total = corpus.len() as f64 + (2 * classes) as f64;
    let scores = present
        .iter()
        .map(|per_class| {
            // Smoothed joint p(class, presence) over the 2C cells.
            let cells: Vec<(f64, usize, usize)> = (0..classes)
                .flat_map(|c| {
                    let with = per_class[c] + 1;
                    let without = class_totals[c] - per_class[c] + 1;
                    [(with as f64, c, 1), (without as f64, c, 0)]
                })
                .collect();
            let p_class: Vec<f64> = (0..classes)
                .map(|c| (class_totals[c] + 2) as f64 / smoothed_total)
                .collect();
            let p_present: f64 = cells
                .iter()
                .filter(|(_, _, b)| *b == 1)
                .map(|(n, _, _)| n)
                .sum::<f64>()
                / smoothed_total;
            let p_blocked = [1.0 - p_present, p_present];
            stable_sum(cells.iter().map(|(n, c, b)| {
                let p = n / smoothed_total;
                p * (p / (p_class[*c] * p_blocked[*b])).ln()
            }))
        })
        .collect();
    Ok(scores)
}

/// Keeps the `n_words` words with the highest mutual information between
/// class and presence; exact score ties go to the lower word id.
pub fn select_features_mi(train: &Dataset, n_words: usize) -> Result<FeatureSelection> {
    if n_words == 0 {
        return Err(Error::Config("cannot select zero words".into()));
    }
    if n_words > train.feature_dim() {
        return Err(Error::Config(format!(
            "cannot select {n_words} words from a {}-word vocabulary",
            train.feature_dim()
        )));
    }
    let scores = mutual_information_scores(train)?;
    let mut ranked: Vec<usize> = (0..scores.len()).collect();
    ranked.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .expect("MI scores are finite")
            .then(a.cmp(&b))
    });
    let mut word_ids: Vec<usize> = ranked[..n_words].to_vec();
    word_ids.sort_unstable();
    let selected_scores = word_ids.iter().map(|&w| scores[w]).collect();
    Ok(FeatureSelection {
        word_ids,
        scores: selected_scores,
    })
}

/// Projects a dataset onto the given word columns, in the given order.
pub fn project(dataset: &Dataset, word_ids: &[usize]) -> Result<Dataset> {
    for &w in word_ids {
        if w >= dataset.feature_dim() {
            return Err(Error::DimensionMismatch {
                expected: dataset.feature_dim(),
                got: w + 1,
            });
        }
    }
    let mut projected = Dataset::new(dataset.num_classes(), word_ids.len())?;
    for obs in dataset.iter() {
        let features: Vec<FeatureValue> = word_ids.iter().map(|&w| obs.features[w]).collect();
        projected.push(Observation {
            class: obs.class,
            features,
        })?;
    }
    Ok(projected)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(class: usize, counts: &[f64]) -> Observation {
        Observation::observed(class, counts)
    }

    #[test]
    fn class_exclusive_words_outrank_uninformative_ones() {
        // Word 0 appears only in class-1 documents; word 1 appears in half
        // the documents of every class.
        let mut ds = Dataset::new(2, 2).unwrap();
        for i in 0..20 {
            let class = i % 2;
            let w0 = if class == 1 { 3.0 } else { 0.0 };
            let w1 = if i % 4 < 2 { 1.0 } else { 0.0 };
            ds.push(doc(class, &[w0, w1])).unwrap();
        }
        let scores = mutual_information_scores(&ds).unwrap();
        assert!(scores[0] > scores[1], "scores {scores:?}");
        let selected = select_features_mi(&ds, 1).unwrap();
        assert_eq!(selected.word_ids, vec![0]);
    }

    #[test]
    fn mi_matches_a_hand_computed_contingency_table() {
        // 2 classes x 3 words, 8 documents. For word 0: class-0 docs have
        // it 3 of 4 times, class-1 docs 1 of 4 times.
        let mut ds = Dataset::new(2, 3).unwrap();
        let rows = [
            (0, [1.0, 0.0, 2.0]),
            (0, [2.0, 1.0, 0.0]),
            (0, [1.0, 0.0, 1.0]),
            (0, [0.0, 1.0, 0.0]),
            (1, [0.0, 1.0, 1.0]),
            (1, [5.0, 0.0, 0.0]),
            (1, [0.0, 1.0, 2.0]),
            (1, [0.0, 0.0, 1.0]),
        ];
        for (c, counts) in rows {
            ds.push(doc(c, &counts)).unwrap();
        }
        let scores = mutual_information_scores(&ds).unwrap();
        // Hand computation with add-one smoothing, total 8 + 4 = 12:
        // word 0 cells (class, present): (0,1)=3+1, (0,0)=1+1, (1,1)=1+1, (1,0)=3+1.
        let cells: [(f64, f64, f64); 4] = [
            (4.0, 6.0, 6.0),
            (2.0, 6.0, 6.0),
            (2.0, 6.0, 6.0),
            (4.0, 6.0, 6.0),
        ];
        let expected: f64 = cells
            .iter()
            .map(|(joint, class_margin, presence_margin)| {
                let p = joint / 12.0;
                p * ((p * 12.0 * 12.0) / (class_margin * presence_margin)).ln()
            })
            .sum();
        assert!(
            (scores[0] - expected).abs() < 1e-12,
            "{} vs {expected}",
            scores[0]
        );
    }

    #[test]
    fn full_vocabulary_selection_projects_to_identity() {
        let mut ds = Dataset::new(2, 3).unwrap();
        ds.push(doc(0, &[1.0, 0.0, 2.0])).unwrap();
        ds.push(doc(1, &[0.0, 4.0, 0.0])).unwrap();
        let selection = select_features_mi(&ds, 3).unwrap();
        assert_eq!(selection.word_ids, vec![0, 1, 2]);
        let projected = project(&ds, &selection.word_ids).unwrap();
        assert_eq!(projected, ds);
    }

    #[test]
    fn ties_break_toward_the_lower_word_id() {
        // Words 1 and 2 have identical presence patterns, hence identical
        // scores; selecting one must take word 1.
        let mut ds = Dataset::new(2, 3).unwrap();
        ds.push(doc(0, &[1.0, 1.0, 1.0])).unwrap();
        ds.push(doc(0, &[1.0, 0.0, 0.0])).unwrap();
        ds.push(doc(1, &[0.0, 1.0, 1.0])).unwrap();
        ds.push(doc(1, &[0.0, 0.0, 0.0])).unwrap();
        let scores = mutual_information_scores(&ds).unwrap();
        assert_eq!(scores[1], scores[2]);
        let selection = select_features_mi(&ds, 2).unwrap();
        assert_eq!(selection.word_ids, vec![0, 1]);
    }

    #[test]
    fn selection_ignores_anything_outside_the_given_split() {
        let mut train = Dataset::new(2, 3).unwrap();
        train.push(doc(0, &[2.0, 0.0, 1.0])).unwrap();
        train.push(doc(1, &[0.0, 3.0, 1.0])).unwrap();
        let selection = select_features_mi(&train, 2).unwrap();

        // A wildly different test split projects onto the same columns.
        let mut test = Dataset::new(2, 3).unwrap();
        test.push(doc(1, &[9.0, 9.0, 9.0])).unwrap();
        let projected = project(&test, &selection.word_ids).unwrap();
        assert_eq!(projected.feature_dim(), 2);
        assert_eq!(selection, select_features_mi(&train, 2).unwrap());
    }

    #[test]
    fn oversized_requests_are_usage_errors() {
        let mut ds = Dataset::new(2, 2).unwrap();
        ds.push(doc(0, &[1.0, 0.0])).unwrap();
        assert!(matches!(
            select_features_mi(&ds, 3),
            Err(Error::Config(_))
        ));
        assert!(matches!(select_features_mi(&ds, 0), Err(Error::Config(_))));
    }
}
