//! Per-game exponential decay of the player fraction, `f(n) = exp(-beta n)`.
//!
//! The fit is an unweighted least-squares line through the origin in
//! `(n, ln f)`: the intercept is pinned so that `f(0) = 1`. The coefficient of
//! determination of that fit doubles as the memoryless index.

use serde::Serialize;
use thiserror::Error;

use crate::domain::{CompletistClass, FractionSeries};
use crate::Real;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecayError {
    #[error("series {id}: no points beyond the (0, 1) anchor")]
    InsufficientData { id: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit<T> {
    pub game_id: String,
    /// Decay rate per achievement.
    pub beta: T,
    /// Coefficient of determination in log space; may be negative.
    pub r_squared: T,
    /// Points beyond the anchor that entered the fit.
    pub points_used: usize,
    /// Points dropped because their fraction was zero.
    pub excluded: usize,
}

/// Slope and R^2 of a least-squares line through the origin in `(pos, ln f)`.
///
/// `SS_tot` is taken about the mean of every retained log value, the
/// anchor's `ln 1 = 0` included. Zero residual with zero variance gives R^2 = 1.
pub(crate) fn fixed_intercept_fit<T: Real>(pos: &[T], f: &[T]) -> (T, T, usize, usize) {
    let mut pts = Vec::with_capacity(pos.len());
    let mut excluded = 0;
    for (&p, &v) in pos.iter().zip(f) {
        if v > T::zero() {
            pts.push((p, v.ln()));
        } else {
            excluded += 1;
        }
    }
    let sxy: T = pts.iter().map(|&(p, y)| p * y).sum();
    let sxx: T = pts.iter().map(|&(p, _)| p * p).sum();
    let used = pts.iter().filter(|&&(p, _)| p != T::zero()).count();
    let slope = if sxx > T::zero() { -sxy / sxx } else { T::zero() };
    let m = pts.iter().map(|&(_, y)| y).sum::<T>() / T::from_count(pts.len().max(1));
    let ss_res: T = pts
        .iter()
        .map(|&(p, y)| {
            let r = y + slope * p;
            r * r
        })
        .sum();
    let ss_tot: T = pts.iter().map(|&(_, y)| (y - m) * (y - m)).sum();
    let r2 = if ss_tot == T::zero() {
        if ss_res == T::zero() {
            T::one()
        } else {
            T::neg_infinity()
        }
    } else {
        T::one() - ss_res / ss_tot
    };
    (slope, r2, used, excluded)
}

/// Fits `beta` over integer achievement positions.
pub fn fit_decay<T: Real>(series: &FractionSeries<T>) -> Result<DecayFit<T>, DecayError> {
    let pos: Vec<T> = series.index.iter().map(|&n| T::from_count(n)).collect();
    let (beta, r_squared, points_used, excluded) = fixed_intercept_fit(&pos, &series.f);
    if points_used == 0 {
        return Err(DecayError::InsufficientData {
            id: series.id.clone(),
        });
    }
    Ok(DecayFit {
        game_id: series.id.clone(),
        beta,
        r_squared,
        points_used,
        excluded,
    })
}

/// Memorylessness of the decay: 1 for a perfectly exponential series.
pub fn memoryless_index<T: Real>(fit: &DecayFit<T>) -> T {
    fit.r_squared
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ClassFilter {
    All,
    Completed,
    Uncompleted,
}

impl ClassFilter {
    fn admits(self, class: CompletistClass) -> bool {
        match self {
            ClassFilter::All => true,
            ClassFilter::Completed => class == CompletistClass::Completed,
            ClassFilter::Uncompleted => class == CompletistClass::Uncompleted,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankingEntry<T> {
    pub rank: usize,
    pub game_id: String,
    pub r_squared: T,
    pub class: CompletistClass,
}

/// Ranks fits by decreasing R^2 (ties by game id). With `drop_negative`,
/// fits with R^2 < 0 are left out.
pub fn rank_by_r2<T: Real>(
    fits: &[(CompletistClass, DecayFit<T>)],
    class_filter: ClassFilter,
    drop_negative: bool,
) -> Vec<RankingEntry<T>> {
    let mut kept: Vec<&(CompletistClass, DecayFit<T>)> = fits
        .iter()
        .filter(|(class, fit)| {
            class_filter.admits(*class) && !(drop_negative && fit.r_squared < T::zero()) && !fit.r_squared.is_nan()
        })
        .collect();
    kept.sort_by(|a, b| {
        b.1.r_squared
            .partial_cmp(&a.1.r_squared)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.1.game_id.cmp(&b.1.game_id))
    });
    kept.into_iter()
        .enumerate()
        .map(|(i, (class, fit))| RankingEntry {
            rank: i + 1,
            game_id: fit.game_id.clone(),
            r_squared: fit.r_squared,
            class: *class,
        })
        .collect()
}

/// Per-game TSV: `game_id, class, beta, r2, points_used`.
pub fn decay_tsv<T: Real>(fits: &[(CompletistClass, DecayFit<T>)]) -> String {
    let mut out = String::from("game_id\tclass\tbeta\tr2\tpoints_used\n");
    for (class, fit) in fits {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            fit.game_id, class, fit.beta, fit.r_squared, fit.points_used
        ));
    }
    out
}

/// Ranking TSV: `rank, game_id, r2`.
pub fn ranking_tsv<T: Real>(ranking: &[RankingEntry<T>]) -> String {
    let mut out = String::from("rank\tgame_id\tr2\n");
    for e in ranking {
        out.push_str(&format!("{}\t{}\t{}\n", e.rank, e.game_id, e.r_squared));
    }
    out
}
