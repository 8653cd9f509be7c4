//! Labeled datasets with optional missing feature values.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// A single feature component: an observed real value or a missing marker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeatureValue {
    Observed(f64),
    Missing,
}

impl FeatureValue {
    pub fn is_missing(&self) -> bool {
        matches!(self, FeatureValue::Missing)
    }

    /// The observed value, or `None` for a missing marker.
    pub fn observed(&self) -> Option<f64> {
        match self {
            FeatureValue::Observed(v) => Some(*v),
            FeatureValue::Missing => None,
        }
    }
}

impl From<f64> for FeatureValue {
    fn from(v: f64) -> Self {
        FeatureValue::Observed(v)
    }
}

/// One labeled observation: a class in `0..num_classes` and a feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub class: usize,
    pub features: Vec<FeatureValue>,
}

impl Observation {
    /// Builds a fully observed observation from raw values.
    pub fn observed(class: usize, features: &[f64]) -> Self {
        Observation {
            class,
            features: features.iter().map(|&v| FeatureValue::Observed(v)).collect(),
        }
    }

    pub fn is_fully_observed(&self) -> bool {
        self.features.iter().all(|f| !f.is_missing())
    }

    /// The feature vector as raw values; errors when any component is missing.
    pub fn dense_features(&self) -> Result<Vec<f64>> {
        self.features
            .iter()
            .map(|f| {
                f.observed().ok_or_else(|| Error::UnexpectedMissing {
                    context: "dense feature access".to_string(),
                })
            })
            .collect()
    }
}

/// A fixed-shape collection of observations.
///
/// Every observation has the same feature dimension and a class label in
/// `0..num_classes`. Missing markers are structurally allowed anywhere;
/// operations that require full observations reject them explicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    num_classes: usize,
    feature_dim: usize,
    observations: Vec<Observation>,
}

impl Dataset {
    /// Creates an empty dataset with the given shape.
    pub fn new(num_classes: usize, feature_dim: usize) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::Config("num_classes must be positive".into()));
        }
        if feature_dim == 0 {
            return Err(Error::Config("feature_dim must be positive".into()));
        }
        Ok(Dataset {
            num_classes,
            feature_dim,
            observations: Vec::new(),
        })
    }

    /// Creates a dataset from observations, validating shape and labels.
    pub fn from_observations(
        num_classes: usize,
        feature_dim: usize,
        observations: Vec<Observation>,
    ) -> Result<Self> {
        let mut ds = Dataset::new(num_classes, feature_dim)?;
        for obs in observations {
            ds.push(obs)?;
        }
        Ok(ds)
    }

    pub fn push(&mut self, obs: Observation) -> Result<()> {
        if obs.class >= self.num_classes {
            return Err(Error::ClassOutOfRange {
                label: obs.class,
                num_classes: self.num_classes,
            });
        }
        if obs.features.len() != self.feature_dim {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim,
                got: obs.features.len(),
            });
        }
        for f in &obs.features {
            if let FeatureValue::Observed(v) = f {
                if v.is_nan() {
                    return Err(Error::Config("feature values must not be NaN".into()));
                }
            }
        }
        self.observations.push(obs);
        Ok(())
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Observation> {
        self.observations.iter()
    }

    /// True when no observation contains a missing marker.
    pub fn is_fully_observed(&self) -> bool {
        self.observations.iter().all(|o| o.is_fully_observed())
    }

    /// The subset of fully observed rows, keeping dataset shape.
    pub fn complete_cases(&self) -> Dataset {
        Dataset {
            num_classes: self.num_classes,
            feature_dim: self.feature_dim,
            observations: self
                .observations
                .iter()
                .filter(|o| o.is_fully_observed())
                .cloned()
                .collect(),
        }
    }

    /// Rows reordered by an index permutation (used by exchangeability checks).
    pub fn permuted(&self, order: &[usize]) -> Result<Dataset> {
        if order.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: order.len(),
            });
        }
        let observations = order
            .iter()
            .map(|&i| {
                self.observations
                    .get(i)
                    .cloned()
                    .ok_or(Error::Config(format!("permutation index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            num_classes: self.num_classes,
            feature_dim: self.feature_dim,
            observations,
        })
    }

    /// Writes the dataset as CSV: header `class,x_0,..,x_{D-1}`, missing
    /// values serialized as `NA`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["class".to_string()];
        header.extend((0..self.feature_dim).map(|d| format!("x_{d}")));
        w.write_record(&header)?;
        for obs in &self.observations {
            let mut record = vec![obs.class.to_string()];
            for f in &obs.features {
                record.push(match f {
                    FeatureValue::Observed(v) => format!("{v}"),
                    FeatureValue::Missing => "NA".to_string(),
                });
            }
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_path<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(file)
    }

    /// Reads a dataset from CSV written by [`Dataset::write_csv`]. The class
    /// count is inferred as `max label + 1` unless `num_classes` is given.
    pub fn read_csv<R: std::io::Read>(reader: R, num_classes: Option<usize>) -> Result<Dataset> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        if headers.is_empty() || &headers[0] != "class" {
            return Err(Error::Parse {
                line: 1,
                message: "expected header starting with `class`".into(),
            });
        }
        let feature_dim = headers.len() - 1;
        if feature_dim == 0 {
            return Err(Error::Parse {
                line: 1,
                message: "expected at least one feature column".into(),
            });
        }
        let mut observations = Vec::new();
        let mut max_class = 0usize;
        for (idx, record) in r.records().enumerate() {
            let line = idx + 2;
            let record = record?;
            if record.len() != feature_dim + 1 {
                return Err(Error::Parse {
                    line,
                    message: format!(
                        "expected {} fields, found {}",
                        feature_dim + 1,
                        record.len()
                    ),
                });
            }
            let class: usize = record[0].trim().parse().map_err(|_| Error::Parse {
                line,
                message: format!("invalid class label `{}`", &record[0]),
            })?;
            max_class = max_class.max(class);
            let mut features = Vec::with_capacity(feature_dim);
            for field in record.iter().skip(1) {
                let field = field.trim();
                if field == "NA" {
                    features.push(FeatureValue::Missing);
                } else {
                    let v: f64 = field.parse().map_err(|_| Error::Parse {
                        line,
                        message: format!("invalid feature value `{field}`"),
                    })?;
                    features.push(FeatureValue::Observed(v));
                }
            }
            observations.push(Observation { class, features });
        }
        let num_classes = match num_classes {
            Some(c) => {
                if max_class >= c {
                    return Err(Error::ClassOutOfRange {
                        label: max_class,
                        num_classes: c,
                    });
                }
                c
            }
            None => max_class + 1,
        };
        Dataset::from_observations(num_classes, feature_dim, observations)
    }

    pub fn read_csv_path<P: AsRef<Path>>(path: P, num_classes: Option<usize>) -> Result<Dataset> {
        let file = std::fs::File::open(path)?;
        Dataset::read_csv(file, num_classes)
    }
}

/// Loads a bag-of-words corpus: one document per line,
/// `label<TAB>word:count word:count ...`.
///
/// Tokens are arbitrary strings; the vocabulary is the sorted set of tokens
/// appearing anywhere in the file, and the returned dataset holds one count
/// column per vocabulary entry. Labels must be nonnegative integers; counts
/// must be positive integers. Returns the dataset together with the
/// vocabulary in column order.
pub fn load_bag_of_words<P: AsRef<Path>>(path: P) -> Result<(Dataset, Vec<String>)> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut docs: Vec<(usize, Vec<(String, u64)>)> = Vec::new();
    let mut vocab_set: BTreeMap<String, usize> = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (label_str, rest) = line.split_once('\t').ok_or(Error::Parse {
            line: line_no,
            message: "expected `label<TAB>word:count ...`".into(),
        })?;
        let label: usize = label_str.trim().parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("invalid label `{label_str}`"),
        })?;
        let mut counts = Vec::new();
        for token in rest.split_whitespace() {
            let (word, count_str) = token.rsplit_once(':').ok_or(Error::Parse {
                line: line_no,
                message: format!("malformed `word:count` token `{token}`"),
            })?;
            if word.is_empty() {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("empty word in token `{token}`"),
                });
            }
            let count: u64 = count_str.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("invalid count in token `{token}`"),
            })?;
            if count == 0 {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("zero count for word `{word}`"),
                });
            }
            vocab_set.entry(word.to_string()).or_insert(0);
            counts.push((word.to_string(), count));
        }
        docs.push((label, counts));
    }
    if docs.is_empty() {
        return Err(Error::Config("bag-of-words file contains no documents".into()));
    }
    let vocab: Vec<String> = vocab_set.keys().cloned().collect();
    for (i, word) in vocab.iter().enumerate() {
        *vocab_set.get_mut(word).expect("vocab entry") = i;
    }
    let max_label = docs.iter().map(|(l, _)| *l).max().unwrap_or(0);
    let mut dataset = Dataset::new(max_label + 1, vocab.len())?;
    for (label, counts) in docs {
        let mut features = vec![FeatureValue::Observed(0.0); vocab.len()];
        for (word, count) in counts {
            let col = vocab_set[&word];
            if let FeatureValue::Observed(v) = &mut features[col] {
                *v += count as f64;
            }
        }
        dataset.push(Observation {
            class: label,
            features,
        })?;
    }
    Ok((dataset, vocab))
}
