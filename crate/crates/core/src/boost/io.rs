use std::fmt::Write as _;
use std::path::Path;

use super::StrongModel;
use crate::dataset::LabelDict;
use crate::error::{Error, Result};
use crate::triplets::io::{parse_header, parse_ids};
use crate::weak_learner::{LabelSet, TripletClassifier};

const MAGIC: &str = "tripletboost-model";

impl StrongModel {
    /// Text form. Weights use the shortest decimal that parses back to the
    /// same `f64`, so a save/load cycle is exact.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(64 + self.classifiers.len() * 40);
        let _ = writeln!(
            out,
            "{MAGIC} v1 L={} n={} C={}",
            self.num_labels(),
            self.n_train,
            self.rounds_run
        );
        out.push_str(&self.dict.names().join("\t"));
        out.push('\n');
        for h in &self.classifiers {
            let _ = writeln!(out, "{} {} {:?} {:x} {:x}", h.j, h.k, h.alpha, h.o_j, h.o_k);
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::VersionMismatch("missing header".into()))?;
        let fields = parse_header(header, MAGIC, &["L", "n", "C"])?;
        let (l, n, rounds) = (fields[0], fields[1], fields[2]);
        let names_line = lines.next().ok_or_else(|| Error::MalformedLine {
            line: 2,
            msg: "missing label names".into(),
        })?;
        let dict = LabelDict::from_names(names_line.split('\t'))?;
        if dict.len() != l {
            return Err(Error::MalformedLine {
                line: 2,
                msg: format!("header announces L={l} but {} names follow", dict.len()),
            });
        }
        let mut classifiers = Vec::new();
        for (idx, line) in lines.enumerate() {
            let lineno = idx + 3;
            if line.is_empty() {
                continue;
            }
            let bad = |msg: String| Error::MalformedLine { line: lineno, msg };
            let parts: Vec<&str> = line.split(' ').collect();
            if parts.len() != 5 {
                return Err(bad("expected `j k alpha oj ok`".into()));
            }
            let [j, k] = parse_ids::<2>(&parts[..2].join(" "), lineno)?;
            let alpha: f64 = parts[2].parse().map_err(|_| bad(format!("bad weight {:?}", parts[2])))?;
            let set = |s: &str| {
                LabelSet::from_str_radix(s, 16).map_err(|_| bad(format!("bad label set {s:?}")))
            };
            classifiers.push(TripletClassifier {
                j,
                k,
                o_j: set(parts[3])?,
                o_k: set(parts[4])?,
                alpha,
            });
        }
        StrongModel::new(classifiers, dict, n, rounds)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}
