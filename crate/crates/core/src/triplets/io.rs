use std::fmt::Write as _;
use std::path::Path;

use super::{Triplet, TripletStore};
use crate::error::{Error, Result};

const MAGIC: &str = "tripletset";
const VERSION: &str = "v1";

impl TripletStore {
    /// Text form: header `tripletset v1 n=<n> m=<m>` then one `i j k` per line
    /// in canonical order. Equal stores serialize to identical bytes.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(16 + self.len() * 12);
        let _ = writeln!(out, "{MAGIC} {VERSION} n={} m={}", self.n(), self.len());
        for t in self.iter() {
            let _ = writeln!(out, "{} {} {}", t.i, t.j, t.k);
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::VersionMismatch("missing header".into()))?;
        let fields = parse_header(header, MAGIC, &["n", "m"])?;
        let (n, m) = (fields[0], fields[1]);
        let mut triplets = Vec::with_capacity(m);
        for (idx, line) in lines.enumerate() {
            let lineno = idx + 2;
            if line.is_empty() {
                continue;
            }
            let ids = parse_ids::<3>(line, lineno)?;
            triplets.push(Triplet::new(ids[0], ids[1], ids[2]));
        }
        if triplets.len() != m {
            return Err(Error::MalformedLine {
                line: 1,
                msg: format!("header announces m={m} but {} triplets follow", triplets.len()),
            });
        }
        TripletStore::build(n, triplets, 2)
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

/// Parses `<magic> v1 key=<usize> ...` with keys in the given order.
pub(crate) fn parse_header(line: &str, magic: &str, keys: &[&str]) -> Result<Vec<usize>> {
    let mut parts = line.split(' ');
    if parts.next() != Some(magic) {
        return Err(Error::VersionMismatch(line.to_owned()));
    }
    if parts.next() != Some(VERSION) {
        return Err(Error::VersionMismatch(line.to_owned()));
    }
    let mut values = Vec::with_capacity(keys.len());
    for key in keys {
        let part = parts.next().ok_or_else(|| Error::VersionMismatch(line.to_owned()))?;
        let value = part
            .strip_prefix(key)
            .and_then(|rest| rest.strip_prefix('='))
            .and_then(|v| v.parse::<usize>().ok())
            .ok_or_else(|| Error::VersionMismatch(line.to_owned()))?;
        values.push(value);
    }
    if parts.next().is_some() {
        return Err(Error::VersionMismatch(line.to_owned()));
    }
    Ok(values)
}

pub(crate) fn parse_ids<const N: usize>(line: &str, lineno: usize) -> Result<[u32; N]> {
    let mut out = [0u32; N];
    let mut parts = line.split(' ');
    for slot in out.iter_mut() {
        let p = parts.next().ok_or_else(|| Error::MalformedLine {
            line: lineno,
            msg: format!("expected {N} ids"),
        })?;
        *slot = p.parse().map_err(|_| Error::MalformedLine {
            line: lineno,
            msg: format!("bad id {p:?}"),
        })?;
    }
    if parts.next().is_some() {
        return Err(Error::MalformedLine {
            line: lineno,
            msg: format!("expected {N} ids"),
        });
    }
    Ok(out)
}
