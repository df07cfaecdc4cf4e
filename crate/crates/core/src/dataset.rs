//! Labeled examples and the label dictionary.
//!
//! The boosting code only ever reads labels; feature vectors are kept around
//! solely so that triplets can be generated from them.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Dense mapping between label names and ids `0..L`, in first-occurrence order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelDict {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl LabelDict {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_names<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut dict = Self::new();
        for name in names {
            let name = name.into();
            if dict.index.contains_key(&name) {
                return Err(Error::InvalidConfig(format!("duplicate label name {name:?}")));
            }
            dict.intern(&name);
        }
        Ok(dict)
    }

    /// Returns the id of `name`, assigning the next free id on first sight.
    pub fn intern(&mut self, name: &str) -> usize {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.names.len();
        self.names.push(name.to_owned());
        self.index.insert(name.to_owned(), id);
        id
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: usize) -> Option<&str> {
        self.names.get(id).map(String::as_str)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// Row-major feature matrix with a fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Features {
    dim: usize,
    data: Vec<f64>,
}

impl Features {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if dim == 0 {
            return Err(Error::InvalidConfig("feature dimension must be >= 1".into()));
        }
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::InconsistentDimension { row: r + 1 });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dict: LabelDict,
    labels: Vec<usize>,
    features: Option<Features>,
}

impl Dataset {
    pub fn new(dict: LabelDict, labels: Vec<usize>, features: Option<Features>) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&y| y >= dict.len()) {
            return Err(Error::IdOutOfRange {
                id: bad as u64,
                n: dict.len(),
            });
        }
        if let Some(f) = &features {
            if f.len() != labels.len() {
                return Err(Error::Mismatch(format!(
                    "{} labels but {} feature rows",
                    labels.len(),
                    f.len()
                )));
            }
        }
        Ok(Self {
            dict,
            labels,
            features,
        })
    }

    /// Feature-free dataset from label names, interned in order.
    pub fn from_label_names<S: AsRef<str>>(names: &[S]) -> Self {
        let mut dict = LabelDict::new();
        let labels = names.iter().map(|s| dict.intern(s.as_ref())).collect();
        Self {
            dict,
            labels,
            features: None,
        }
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_labels(&self) -> usize {
        self.dict.len()
    }

    pub fn dict(&self) -> &LabelDict {
        &self.dict
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn features(&self) -> Option<&Features> {
        self.features.as_ref()
    }

    pub fn require_features(&self) -> Result<&Features> {
        self.features.as_ref().ok_or(Error::MissingFeatures)
    }

    /// Number of distinct labels that actually occur.
    pub fn classes_present(&self) -> usize {
        let mut seen = vec![false; self.dict.len()];
        for &y in &self.labels {
            seen[y] = true;
        }
        seen.into_iter().filter(|&s| s).count()
    }

    /// New dataset holding the given examples in the given order. The label
    /// dictionary is shared unchanged.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        let features = self.features.as_ref().map(|f| Features {
            dim: f.dim,
            data: indices.iter().flat_map(|&i| f.row(i).iter().copied()).collect(),
        });
        Dataset {
            dict: self.dict.clone(),
            labels,
            features,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (i, &y) in self.labels.iter().enumerate() {
            out.push_str(&self.dict.names[y]);
            if let Some(f) = &self.features {
                for v in f.row(i) {
                    // Display for f64 is the shortest string that parses back exactly.
                    let _ = write!(out, ",{v}");
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

pub fn load_csv(path: impl AsRef<Path>, has_header: bool) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, has_header)
}

/// Parses `label,f1,...,fD` rows. Row numbers in errors are 1-based line numbers.
pub fn parse_csv(text: &str, has_header: bool) -> Result<Dataset> {
    let mut dict = LabelDict::new();
    let mut labels = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;

    for (lineno, line) in text.lines().enumerate() {
        let row = lineno + 1;
        if has_header && lineno == 0 {
            continue;
        }
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let name = fields.next().unwrap_or("").trim();
        if name.is_empty() {
            return Err(Error::MalformedRow {
                row,
                msg: "missing label".into(),
            });
        }
        let feats = fields
            .map(|f| {
                f.trim().parse::<f64>().map_err(|_| Error::MalformedRow {
                    row,
                    msg: format!("cannot parse {f:?} as a real"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        match width {
            None => width = Some(feats.len()),
            Some(w) if w != feats.len() => return Err(Error::InconsistentDimension { row }),
            _ => {}
        }
        labels.push(dict.intern(name));
        rows.push(feats);
    }

    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let features = match width {
        Some(w) if w > 0 => Some(Features::from_rows(&rows)?),
        _ => None,
    };
    Dataset::new(dict, labels, features)
}

/// Shuffled index partition: `(train, test)` with `ceil(n * test_fraction)`
/// test examples. Each side is returned in ascending order.
pub fn split_indices(n: usize, test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..=1.0).contains(&test_fraction) {
        return Err(Error::InvalidParameter(format!(
            "test fraction {test_fraction} outside [0, 1]"
        )));
    }
    let n_test = ((n as f64) * test_fraction).ceil() as usize;
    let n_test = n_test.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut test = order[..n_test].to_vec();
    let mut train = order[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}

pub fn split(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(ds.n(), test_fraction, seed)?;
    Ok((ds.subset(&train), ds.subset(&test)))
}
