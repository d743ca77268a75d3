//! Game records and the per-game persistence metrics derived from them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Real;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("record {id}: {reason}")]
    InvalidRecord { id: String, reason: String },
    #[error("fraction series: {0}")]
    InvalidSeries(String),
}

/// One game: identity, total players `G` and per-achievement unlock counts.
///
/// After [`canonical_order`] the counts are non-increasing, so `unlocks[n-1]`
/// is `g(n)`, the number of players that reached the n-th achievement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameRecord {
    pub id: String,
    pub name: String,
    pub players: u64,
    pub unlocks: Vec<u64>,
    #[serde(skip)]
    pub ordered: bool,
}

impl GameRecord {
    pub fn new(id: impl Into<String>, name: impl Into<String>, players: u64, unlocks: Vec<u64>) -> Self {
        Self {
            id: id.into(),
            name: name.into(),
            players,
            unlocks,
            ordered: false,
        }
    }

    /// Number of achievements `N`.
    pub fn achievements(&self) -> usize {
        self.unlocks.len()
    }

    /// Checks the record invariants (G >= 1, N >= 1, counts <= G, not all zero,
    /// non-increasing when flagged ordered).
    pub fn validate(&self) -> Result<(), DomainError> {
        let fail = |reason: &str| {
            Err(DomainError::InvalidRecord {
                id: self.id.clone(),
                reason: reason.to_string(),
            })
        };
        if self.players == 0 {
            return fail("no players");
        }
        if self.unlocks.is_empty() {
            return fail("no achievements");
        }
        if self.unlocks.iter().any(|&c| c > self.players) {
            return fail("unlock count exceeds players");
        }
        if self.unlocks.iter().all(|&c| c == 0) {
            return fail("all unlock counts are zero");
        }
        if self.ordered && self.unlocks.windows(2).any(|w| w[0] < w[1]) {
            return fail("flagged ordered but counts increase");
        }
        Ok(())
    }
}

/// Sorts unlock counts in decreasing order and marks the record ordered.
///
/// The sort is stable, so equal counts keep their original achievement order.
pub fn canonical_order(mut record: GameRecord) -> GameRecord {
    if !record.ordered {
        record.unlocks.sort_by(|a, b| b.cmp(a));
        record.ordered = true;
    }
    record
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CompletistClass {
    /// At least one player unlocked every achievement (F > 0).
    Completed,
    /// Nobody finished (F = 0).
    Uncompleted,
}

impl CompletistClass {
    pub fn as_str(self) -> &'static str {
        match self {
            CompletistClass::Completed => "completed",
            CompletistClass::Uncompleted => "uncompleted",
        }
    }
}

impl std::fmt::Display for CompletistClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-game persistence metrics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameMetrics<T> {
    /// Total players `G`.
    pub players: u64,
    /// Total achievements `N`.
    pub achievements: usize,
    /// Fraction of completists.
    pub completists: T,
    /// Completed fraction `U = n_max / N`.
    pub completed_fraction: T,
    /// Index of the last achievement anybody reached.
    pub n_max: usize,
    /// Players at `n_max`; only set for the uncompleted class.
    pub best_count: Option<u64>,
    pub class: CompletistClass,
}

/// Derives `F`, `U`, `n_max` and `C` from a record.
///
/// Only aggregate per-achievement counts are available, so the completist
/// count is taken as the smallest unlock count (players are assumed to unlock
/// achievements in a nested order). The result does not depend on the order
/// of `unlocks`.
pub fn compute_metrics<T: Real>(record: &GameRecord) -> Result<GameMetrics<T>, DomainError> {
    if record.players == 0 || record.unlocks.is_empty() {
        return Err(DomainError::InvalidRecord {
            id: record.id.clone(),
            reason: "empty record".into(),
        });
    }
    let n = record.unlocks.len();
    let n_max = record.unlocks.iter().filter(|&&c| c > 0).count();
    if n_max == 0 {
        return Err(DomainError::InvalidRecord {
            id: record.id.clone(),
            reason: "all unlock counts are zero".into(),
        });
    }
    let g = T::lit(record.players as f64);
    let min = record.unlocks.iter().copied().min().unwrap_or(0);
    let completists = T::lit(min as f64) / g;
    let (class, best_count) = if min > 0 {
        (CompletistClass::Completed, None)
    } else {
        // smallest nonzero count: the count at n_max after ordering
        let c = record.unlocks.iter().copied().filter(|&c| c > 0).min();
        (CompletistClass::Uncompleted, c)
    };
    Ok(GameMetrics {
        players: record.players,
        achievements: n,
        completists,
        completed_fraction: T::from_count(n_max) / T::from_count(n),
        n_max,
        best_count,
        class,
    })
}

/// Player fraction along normalized achievements.
///
/// `index[i]` is the integer achievement position `n`, `x[i] = n / N` and
/// `f[i] = g(n) / G`. The first point is always the anchor `(0, 1)`; achievements
/// nobody reached are not included.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FractionSeries<T> {
    pub id: String,
    pub total: usize,
    pub index: Vec<usize>,
    pub x: Vec<T>,
    pub f: Vec<T>,
}

impl<T: Real> FractionSeries<T> {
    /// Builds a series from explicit `(n, f)` points over `total` achievements.
    /// The anchor `(0, 1)` is prepended when the first point is not at `n = 0`.
    pub fn from_points(
        id: impl Into<String>,
        total: usize,
        points: &[(usize, T)],
    ) -> Result<Self, DomainError> {
        if total == 0 {
            return Err(DomainError::InvalidSeries("zero achievements".into()));
        }
        let mut index = Vec::with_capacity(points.len() + 1);
        let mut f = Vec::with_capacity(points.len() + 1);
        if points.first().map(|p| p.0) != Some(0) {
            index.push(0);
            f.push(T::one());
        }
        for &(n, v) in points {
            if n > total {
                return Err(DomainError::InvalidSeries(format!("position {n} beyond {total}")));
            }
            if !(v >= T::zero() && v <= T::one()) {
                return Err(DomainError::InvalidSeries(format!("fraction {v} outside [0, 1]")));
            }
            if v == T::zero() {
                continue;
            }
            index.push(n);
            f.push(v);
        }
        let x = index
            .iter()
            .map(|&n| T::from_count(n) / T::from_count(total))
            .collect();
        Ok(Self {
            id: id.into(),
            total,
            index,
            x,
            f,
        })
    }

    /// Number of points, anchor included.
    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }
}

/// Player fraction series of a record, in the record's current count order.
pub fn fraction_series<T: Real>(record: &GameRecord) -> FractionSeries<T> {
    let total = record.unlocks.len();
    let g = T::lit(record.players as f64);
    let mut index = vec![0];
    let mut f = vec![T::one()];
    for (i, &c) in record.unlocks.iter().enumerate() {
        if c > 0 {
            index.push(i + 1);
            f.push(T::lit(c as f64) / g);
        }
    }
    let x = index
        .iter()
        .map(|&n| T::from_count(n) / T::from_count(total.max(1)))
        .collect();
    FractionSeries {
        id: record.id.clone(),
        total,
        index,
        x,
        f,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(players: u64, unlocks: &[u64]) -> GameRecord {
        GameRecord::new("g", "Game", players, unlocks.to_vec())
    }

    #[test]
    fn canonical_order_sorts_descending() {
        assert_eq!(canonical_order(rec(10, &[5, 9, 1])).unlocks, vec![9, 5, 1]);
        let r = canonical_order(rec(10, &[7, 7, 7]));
        assert_eq!(r.unlocks, vec![7, 7, 7]);
        assert!(r.ordered);
    }

    #[test]
    fn canonical_order_large_permutation() {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let sorted: Vec<u64> = (0..1000u64).rev().map(|v| v / 3).collect();
        let mut shuffled = sorted.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(11));
        let mut oracle = shuffled.clone();
        oracle.sort_unstable();
        oracle.reverse();
        let out = canonical_order(rec(1000, &shuffled));
        assert_eq!(out.unlocks, oracle);
        assert_eq!(out.unlocks, sorted);
    }

    #[test]
    fn metrics_completed() {
        let m: GameMetrics<f64> = compute_metrics(&canonical_order(rec(100, &[100, 50, 25]))).unwrap();
        assert_eq!(m.completists, 0.25);
        assert_eq!(m.completed_fraction, 1.0);
        assert_eq!(m.class, CompletistClass::Completed);
        assert_eq!(m.best_count, None);
    }

    #[test]
    fn metrics_uncompleted() {
        let m: GameMetrics<f64> = compute_metrics(&canonical_order(rec(10, &[10, 5, 0, 0]))).unwrap();
        assert_eq!(m.completists, 0.0);
        assert_eq!(m.n_max, 2);
        assert_eq!(m.completed_fraction, 0.5);
        assert_eq!(m.best_count, Some(5));
        assert_eq!(m.class, CompletistClass::Uncompleted);
    }

    #[test]
    fn metrics_all_completists() {
        let m: GameMetrics<f32> = compute_metrics(&rec(3, &[3, 3, 3])).unwrap();
        assert_eq!(m.completists, 1.0);
        assert_eq!(m.completed_fraction, 1.0);
    }

    #[test]
    fn metrics_reject_all_zero() {
        let err = compute_metrics::<f64>(&rec(5, &[0, 0])).unwrap_err();
        assert!(matches!(err, DomainError::InvalidRecord { .. }));
    }

    #[test]
    fn series_examples() {
        let s: FractionSeries<f64> = fraction_series(&canonical_order(rec(4, &[4, 2, 1])));
        assert_eq!(s.x, vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]);
        assert_eq!(s.f, vec![1.0, 1.0, 0.5, 0.25]);
        let s: FractionSeries<f64> = fraction_series(&canonical_order(rec(5, &[5, 0])));
        assert_eq!(s.x, vec![0.0, 0.5]);
        assert_eq!(s.f, vec![1.0, 1.0]);
    }

    #[test]
    fn series_from_points_prepends_anchor_and_drops_zeros() {
        let s = FractionSeries::from_points("a", 4, &[(1, 0.5f64), (2, 0.0), (3, 0.25)]).unwrap();
        assert_eq!(s.index, vec![0, 1, 3]);
        assert_eq!(s.f, vec![1.0, 0.5, 0.25]);
        assert!(FractionSeries::from_points("a", 2, &[(3, 0.5f64)]).is_err());
        assert!(FractionSeries::from_points("a", 2, &[(1, 1.5f64)]).is_err());
    }

    #[test]
    fn validate_catches_violations() {
        assert!(rec(0, &[0]).validate().is_err());
        assert!(rec(3, &[]).validate().is_err());
        assert!(rec(3, &[4]).validate().is_err());
        let mut r = rec(3, &[1, 2]);
        r.ordered = true;
        assert!(r.validate().is_err());
        assert!(canonical_order(rec(3, &[1, 2])).validate().is_ok());
    }

    fn arb_record() -> impl Strategy<Value = GameRecord> {
        (1u64..500, 1usize..40).prop_flat_map(|(g, n)| {
            prop::collection::vec(0..=g, n)
                .prop_filter("not all zero", |v| v.iter().any(|&c| c > 0))
                .prop_map(move |v| GameRecord::new("p", "P", g, v))
        })
    }

    proptest! {
        #[test]
        fn series_matches_division_oracle(r in arb_record()) {
            let r = canonical_order(r);
            let s: FractionSeries<f64> = fraction_series(&r);
            prop_assert_eq!(s.f[0], 1.0);
            let mut k = 1;
            for (i, &c) in r.unlocks.iter().enumerate() {
                if c == 0 { continue; }
                prop_assert_eq!(s.index[k], i + 1);
                prop_assert_eq!(s.f[k], c as f64 / r.players as f64);
                prop_assert_eq!(s.x[k], (i + 1) as f64 / r.unlocks.len() as f64);
                k += 1;
            }
            prop_assert_eq!(k, s.len());
            prop_assert!(s.f.windows(2).all(|w| w[0] >= w[1]));
            prop_assert!(s.f.iter().all(|&v| v > 0.0 && v <= 1.0));
        }

        #[test]
        fn metrics_permutation_invariant(r in arb_record(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut shuffled = r.clone();
            shuffled.unlocks.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let a: GameMetrics<f64> = compute_metrics(&canonical_order(r.clone())).unwrap();
            let b: GameMetrics<f64> = compute_metrics(&shuffled).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(a.completed_fraction == 1.0, r.unlocks.iter().all(|&c| c > 0));
            if a.class == CompletistClass::Completed {
                let s: FractionSeries<f64> = fraction_series(&canonical_order(r));
                prop_assert!(s.f.iter().all(|&v| a.completists <= v));
            } else {
                let c = a.best_count.unwrap();
                prop_assert!(c >= 1 && a.n_max >= 1 && a.n_max <= a.achievements);
            }
        }
    }
}
