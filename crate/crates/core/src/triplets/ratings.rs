//! Triplets from a sparse user × item rating table.
//!
//! Item `i` is closer to `j` than to `k` when, among the users who rated all
//! three, more of them rated `i` and `j` similarly than `i` and `k`.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::index;
use rayon::prelude::*;

use super::{Triplet, TripletStore};
use crate::error::{Error, Result};
use crate::rng::seeded;

#[derive(Debug, Clone, PartialEq)]
pub struct Ratings {
    // per item: (user, rating), sorted by user
    by_item: Vec<Vec<(u32, f64)>>,
    n_users: usize,
}

impl Ratings {
    /// Builds the table from `(user, item, rating)` entries. Items are dense
    /// ids; the item count is one past the largest id seen unless `n_items`
    /// is given.
    pub fn from_entries(entries: &[(u32, u32, f64)], n_items: Option<usize>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyRatings);
        }
        let max_item = entries.iter().map(|e| e.1 as usize).max().unwrap_or(0);
        let n = n_items.unwrap_or(max_item + 1);
        if max_item >= n {
            return Err(Error::IdOutOfRange {
                id: max_item as u64,
                n,
            });
        }
        let mut by_item = vec![Vec::new(); n];
        let mut n_users = 0;
        for &(u, i, r) in entries {
            by_item[i as usize].push((u, r));
            n_users = n_users.max(u as usize + 1);
        }
        for (item, list) in by_item.iter_mut().enumerate() {
            list.sort_by_key(|e| e.0);
            if list.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::InvalidConfig(format!("item {item} rated twice by one user")));
            }
        }
        Ok(Self { by_item, n_users })
    }

    /// Parses `user item rating` lines. User tokens are arbitrary strings;
    /// items must be dense non-negative integers.
    pub fn parse(text: &str) -> Result<Self> {
        let mut users: HashMap<String, u32> = HashMap::new();
        let mut entries = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: &str| Error::MalformedLine {
                line: idx + 1,
                msg: msg.to_owned(),
            };
            let mut parts = line.split_whitespace();
            let (Some(u), Some(i), Some(r), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
                return Err(bad("expected `user item rating`"));
            };
            let next = users.len() as u32;
            let user = *users.entry(u.to_owned()).or_insert(next);
            let item: u32 = i.parse().map_err(|_| bad("bad item id"))?;
            let rating: f64 = r.parse().map_err(|_| bad("bad rating"))?;
            entries.push((user, item, rating));
        }
        Self::from_entries(&entries, None)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn n_items(&self) -> usize {
        self.by_item.len()
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn item(&self, i: usize) -> &[(u32, f64)] {
        &self.by_item[i]
    }

    /// Number of users agreeing that `i` is closer to `j`, minus those
    /// agreeing it is closer to `k`, and the size of the common-rater set.
    pub fn vote(&self, i: usize, j: usize, k: usize) -> (i64, usize) {
        let (a, b, c) = (&self.by_item[i], &self.by_item[j], &self.by_item[k]);
        let (mut pb, mut pc) = (0usize, 0usize);
        let mut sum = 0i64;
        let mut common = 0usize;
        for &(u, ri) in a {
            while pb < b.len() && b[pb].0 < u {
                pb += 1;
            }
            while pc < c.len() && c[pc].0 < u {
                pc += 1;
            }
            if pb < b.len() && pc < c.len() && b[pb].0 == u && c[pc].0 == u {
                common += 1;
                let dij = (ri - b[pb].1).abs();
                let dik = (ri - c[pc].1).abs();
                if dij < dik {
                    sum += 1;
                } else if dij > dik {
                    sum -= 1;
                }
            }
        }
        (sum, common)
    }

    fn orient(&self, i: usize, a: usize, b: usize) -> Option<Triplet> {
        let (sum, common) = self.vote(i, a, b);
        if common == 0 {
            return None;
        }
        // dividing by |U| does not change the sign
        match sum.cmp(&0) {
            std::cmp::Ordering::Greater => Some(Triplet::new(i as u32, a as u32, b as u32)),
            std::cmp::Ordering::Less => Some(Triplet::new(i as u32, b as u32, a as u32)),
            std::cmp::Ordering::Equal => None,
        }
    }
}

/// Rank `r` in `0..C(m, 2)` to the pair `(a, b)`, `a < b < m`, in lexicographic order.
fn unrank_pair(r: u64, m: u64) -> (u64, u64) {
    let before = |a: u64| a * m - a * (a + 1) / 2;
    let (mut lo, mut hi) = (0u64, m - 1);
    // largest a with before(a) <= r
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if before(mid) <= r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, lo + 1 + (r - before(lo)))
}

/// Examines every candidate `(i, {j, k})`, or `candidate_limit` of them drawn
/// uniformly without replacement, and keeps the ones with a strict majority.
pub fn generate_from_ratings(ratings: &Ratings, candidate_limit: Option<u64>, seed: u64) -> Result<TripletStore> {
    let n = ratings.n_items();
    if ratings.by_item.iter().all(Vec::is_empty) {
        return Err(Error::EmptyRatings);
    }
    let total = TripletStore::candidate_count(n);
    let exhaustive = candidate_limit.map_or(true, |l| l >= total);
    let triplets: Vec<Triplet> = if exhaustive {
        (0..n)
            .into_par_iter()
            .flat_map_iter(|i| {
                let others: Vec<usize> = (0..n).filter(|&x| x != i).collect();
                let mut v = Vec::new();
                for (p, &a) in others.iter().enumerate() {
                    for &b in &others[p + 1..] {
                        v.extend(ratings.orient(i, a, b));
                    }
                }
                v
            })
            .collect()
    } else {
        let limit = candidate_limit.unwrap_or(0);
        let per_anchor = (n as u64 - 1) * (n as u64 - 2) / 2;
        let mut rng = seeded(seed);
        let mut picks: Vec<u64> = index::sample(&mut rng, total as usize, limit as usize)
            .into_iter()
            .map(|x| x as u64)
            .collect();
        picks.sort_unstable();
        let mut v: Vec<Triplet> = picks
            .par_iter()
            .filter_map(|&c| {
                let i = c / per_anchor;
                let (a, b) = unrank_pair(c % per_anchor, n as u64 - 1);
                let id = |x: u64| if x < i { x } else { x + 1 };
                ratings.orient(i as usize, id(a) as usize, id(b) as usize)
            })
            .collect();
        v.sort_by_key(Triplet::key);
        v
    };
    Ok(TripletStore::from_sorted_unchecked(n, triplets))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::triplets::Side;

    #[test]
    fn single_user_example() {
        // r = {i: 5, j: 5, k: 1}; |5-5| = 0 < |5-1| = 4
        let r = Ratings::from_entries(&[(0, 0, 5.0), (0, 1, 5.0), (0, 2, 1.0)], None).unwrap();
        let ts = generate_from_ratings(&r, None, 0).unwrap();
        assert_eq!(ts.lookup(0, 1, 2).unwrap(), Side::Forward);
    }

    #[test]
    fn no_common_rater_gives_nothing() {
        let r = Ratings::from_entries(&[(0, 0, 5.0), (0, 1, 5.0), (1, 2, 1.0)], None).unwrap();
        assert!(generate_from_ratings(&r, None, 0).unwrap().is_empty());
    }

    #[test]
    fn balanced_opposite_votes_are_excluded() {
        let r = Ratings::from_entries(
            &[
                (0, 0, 5.0),
                (0, 1, 5.0),
                (0, 2, 1.0),
                (1, 0, 5.0),
                (1, 1, 1.0),
                (1, 2, 5.0),
            ],
            None,
        )
        .unwrap();
        assert_eq!(r.vote(0, 1, 2), (0, 2));
        let ts = generate_from_ratings(&r, None, 0).unwrap();
        assert_eq!(ts.lookup(0, 1, 2).unwrap(), Side::Absent);
    }

    #[test]
    fn empty_table_is_rejected() {
        assert!(matches!(Ratings::from_entries(&[], None), Err(Error::EmptyRatings)));
        assert!(matches!(Ratings::parse("\n"), Err(Error::EmptyRatings)));
    }

    #[test]
    fn parse_lines() {
        let r = Ratings::parse("alice 0 4.5\nbob 1 3\nalice 2 1\n").unwrap();
        assert_eq!(r.n_items(), 3);
        assert_eq!(r.n_users(), 2);
        assert_eq!(r.item(2), &[(0, 1.0)]);
        assert!(Ratings::parse("alice zero 4\n").is_err());
    }

    #[test]
    fn unrank_enumerates_in_order() {
        for m in 2..9u64 {
            let mut r = 0;
            for a in 0..m {
                for b in a + 1..m {
                    assert_eq!(unrank_pair(r, m), (a, b));
                    r += 1;
                }
            }
        }
    }

    fn fixture(n_items: u32, n_users: u32) -> Ratings {
        let mut e = Vec::new();
        for u in 0..n_users {
            for i in 0..n_items {
                if (u * 7 + i * 3) % 4 != 0 {
                    e.push((u, i, ((u * 13 + i * 5) % 5 + 1) as f64));
                }
            }
        }
        Ratings::from_entries(&e, None).unwrap()
    }

    #[test]
    fn sampled_candidates_are_subset_of_exhaustive() {
        let r = fixture(12, 30);
        let full = generate_from_ratings(&r, None, 0).unwrap();
        let total = TripletStore::candidate_count(12);
        let part = generate_from_ratings(&r, Some(200), 3).unwrap();
        assert!(part.len() <= 200);
        assert!(part.iter().all(|t| full.contains(t)));
        assert_eq!(generate_from_ratings(&r, Some(total), 3).unwrap(), full);
        assert_eq!(part, generate_from_ratings(&r, Some(200), 3).unwrap());
    }
}
