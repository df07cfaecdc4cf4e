//! Triplet comparisons `(i, j, k)`: "example `i` is closer to `j` than to `k`".
//!
//! A [`TripletStore`] is immutable and kept in canonical order, sorted by
//! `(i, min(j, k), max(j, k))`. Since a pair `{j, k}` occupies a single slot
//! per anchor, both orientations of a triplet can never coexist, and a lookup
//! is one binary search inside the anchor's slice.

mod generate;
pub(crate) mod io;
mod ratings;

pub use generate::{
    generate_bernoulli, generate_from_vectors, generate_subsampled, generate_test_bernoulli,
    generate_test_triplets, noise_seed, Metric,
};
pub use ratings::{generate_from_ratings, Ratings};

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{exact_count, seeded, select_ranks};

pub type ExampleId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Triplet {
    pub i: ExampleId,
    pub j: ExampleId,
    pub k: ExampleId,
}

impl Triplet {
    pub fn new(i: ExampleId, j: ExampleId, k: ExampleId) -> Self {
        Self { i, j, k }
    }

    /// Canonical sort key; identical for a triplet and its swap.
    #[inline]
    pub fn key(&self) -> (ExampleId, ExampleId, ExampleId) {
        (self.i, self.j.min(self.k), self.j.max(self.k))
    }

    #[inline]
    pub fn swapped(&self) -> Self {
        Self {
            i: self.i,
            j: self.k,
            k: self.j,
        }
    }
}

/// Outcome of a membership query for `(i, j, k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `(i, j, k)` is present.
    Forward,
    /// `(i, k, j)` is present.
    Reverse,
    Absent,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripletStore {
    n: usize,
    triplets: Vec<Triplet>,
    // triplets[offsets[i]..offsets[i + 1]] are anchored on i
    offsets: Vec<usize>,
}

impl TripletStore {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            triplets: Vec::new(),
            offsets: vec![0; n + 1],
        }
    }

    /// Validates and canonicalizes an arbitrary collection of triplets.
    pub fn from_triplets(n: usize, triplets: Vec<Triplet>) -> Result<Self> {
        Self::build(n, triplets, 1)
    }

    /// `first_line` is the line number reported for `triplets[0]` in errors.
    pub(crate) fn build(n: usize, triplets: Vec<Triplet>, first_line: usize) -> Result<Self> {
        for (pos, t) in triplets.iter().enumerate() {
            for id in [t.i, t.j, t.k] {
                if id as usize >= n {
                    return Err(Error::IdOutOfRange { id: id as u64, n });
                }
            }
            if t.j == t.k {
                return Err(Error::MalformedLine {
                    line: first_line + pos,
                    msg: "j and k must differ".into(),
                });
            }
        }
        let already_sorted = triplets.windows(2).all(|w| w[0].key() < w[1].key());
        if already_sorted {
            return Ok(Self::from_sorted_unchecked(n, triplets));
        }
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_by_key(|&p| (triplets[p].key(), p));
        for w in order.windows(2) {
            let (a, b) = (triplets[w[0]], triplets[w[1]]);
            if a.key() == b.key() {
                let line = first_line + w[0].max(w[1]);
                return Err(if a == b {
                    Error::DuplicateTriplet { line }
                } else {
                    Error::ContradictoryTriplet { line }
                });
            }
        }
        let sorted = order.into_iter().map(|p| triplets[p]).collect();
        Ok(Self::from_sorted_unchecked(n, sorted))
    }

    /// Caller guarantees strictly increasing canonical keys and valid ids.
    pub(crate) fn from_sorted_unchecked(n: usize, triplets: Vec<Triplet>) -> Self {
        debug_assert!(triplets.windows(2).all(|w| w[0].key() < w[1].key()));
        let mut offsets = vec![0usize; n + 1];
        for t in &triplets {
            offsets[t.i as usize + 1] += 1;
        }
        for a in 0..n {
            offsets[a + 1] += offsets[a];
        }
        Self {
            n,
            triplets,
            offsets,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.triplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }

    pub fn triplets(&self) -> &[Triplet] {
        &self.triplets
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Triplet> {
        self.triplets.iter()
    }

    pub fn anchored(&self, i: ExampleId) -> &[Triplet] {
        let i = i as usize;
        if i >= self.n {
            return &[];
        }
        &self.triplets[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn lookup(&self, i: ExampleId, j: ExampleId, k: ExampleId) -> Result<Side> {
        if j == k {
            return Err(Error::SameReference(j));
        }
        Ok(self.side(i, j, k))
    }

    /// [`lookup`](Self::lookup) without the `j != k` check.
    #[inline]
    pub fn side(&self, i: ExampleId, j: ExampleId, k: ExampleId) -> Side {
        let slice = self.anchored(i);
        let key = (j.min(k), j.max(k));
        match slice.binary_search_by(|t| (t.j.min(t.k), t.j.max(t.k)).cmp(&key)) {
            Ok(pos) if slice[pos].j == j => Side::Forward,
            Ok(_) => Side::Reverse,
            Err(_) => Side::Absent,
        }
    }

    pub fn contains(&self, t: &Triplet) -> bool {
        t.j != t.k && self.side(t.i, t.j, t.k) == Side::Forward
    }

    /// Number of candidate slots `(i, {j, k})` with `i, j, k` pairwise distinct.
    pub fn candidate_count(n: usize) -> u64 {
        let n = n as u64;
        if n < 3 {
            return 0;
        }
        n * (n - 1) * (n - 2) / 2
    }

    /// Fraction of candidate slots that hold a triplet.
    pub fn availability(&self) -> f64 {
        let total = Self::candidate_count(self.n);
        if total == 0 {
            0.0
        } else {
            self.len() as f64 / total as f64
        }
    }

    /// Keeps exactly `round(proportion * m)` triplets, chosen uniformly
    /// without replacement.
    pub fn subsample(&self, proportion: f64, seed: u64) -> Result<Self> {
        check_unit("proportion", proportion)?;
        let mut rng = seeded(seed);
        let ranks = select_ranks(self.len(), exact_count(proportion, self.len()), &mut rng);
        let kept = ranks.into_iter().map(|r| self.triplets[r]).collect();
        Ok(Self::from_sorted_unchecked(self.n, kept))
    }

    /// Swaps `j` and `k` on exactly `round(rate * m)` triplets chosen uniformly
    /// without replacement. The selection depends only on `m`, `rate`, and
    /// `seed`, so applying it twice with the same arguments is the identity.
    pub fn add_noise(&self, rate: f64, seed: u64) -> Result<Self> {
        check_unit("noise rate", rate)?;
        let mut rng = seeded(seed);
        Ok(self.with_swaps(rate, &mut rng))
    }

    pub(crate) fn with_swaps<R: Rng + ?Sized>(&self, rate: f64, rng: &mut R) -> Self {
        let mut triplets = self.triplets.clone();
        for r in select_ranks(triplets.len(), exact_count(rate, triplets.len()), rng) {
            triplets[r] = triplets[r].swapped();
        }
        // swapping keeps the canonical key, so order is preserved
        Self {
            n: self.n,
            triplets,
            offsets: self.offsets.clone(),
        }
    }

    /// Splits a store over one universe into a training store over `train`
    /// (re-indexed by position in `train`) and the test-time triplets whose
    /// anchor is in `test` and whose references are in `train`, anchors
    /// re-indexed by position in `test`.
    pub fn partition(&self, train: &[usize], test: &[usize]) -> Result<(TripletStore, Vec<Triplet>)> {
        let mut train_pos = vec![u32::MAX; self.n];
        let mut test_pos = vec![u32::MAX; self.n];
        for (p, &id) in train.iter().enumerate() {
            *train_pos
                .get_mut(id)
                .ok_or(Error::IdOutOfRange { id: id as u64, n: self.n })? = p as u32;
        }
        for (p, &id) in test.iter().enumerate() {
            let slot = test_pos
                .get_mut(id)
                .ok_or(Error::IdOutOfRange { id: id as u64, n: self.n })?;
            if train_pos[id] != u32::MAX {
                return Err(Error::InvalidConfig(format!("example {id} is in both train and test")));
            }
            *slot = p as u32;
        }
        let mut train_triplets = Vec::new();
        let mut test_triplets = Vec::new();
        for t in &self.triplets {
            let (j, k) = (train_pos[t.j as usize], train_pos[t.k as usize]);
            if j == u32::MAX || k == u32::MAX {
                continue;
            }
            let (ti, si) = (train_pos[t.i as usize], test_pos[t.i as usize]);
            if ti != u32::MAX {
                train_triplets.push(Triplet::new(ti, j, k));
            } else if si != u32::MAX {
                test_triplets.push(Triplet::new(si, j, k));
            }
        }
        let store = TripletStore::from_triplets(train.len(), train_triplets)?;
        test_triplets.sort_by_key(Triplet::key);
        Ok((store, test_triplets))
    }
}

impl<'a> IntoIterator for &'a TripletStore {
    type Item = &'a Triplet;
    type IntoIter = std::slice::Iter<'a, Triplet>;

    fn into_iter(self) -> Self::IntoIter {
        self.triplets.iter()
    }
}

pub(crate) fn check_unit(what: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{what} {v} outside [0, 1]")))
    }
}
