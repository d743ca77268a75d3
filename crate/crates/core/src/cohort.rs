//! Cohort aggregation over normalized achievements.
//!
//! Completed games are grouped by fraction of completists; each group gets a
//! 12-marker mean series (anchors `(0, 1)` and `(1, mean F)` plus ten
//! interior markers) whose decay slope follows `alpha = -ln F`. Uncompleted
//! games are grouped by total players, where `alpha U = ln(G / C)`.

use serde::Serialize;
use thiserror::Error;

use crate::decay::fixed_intercept_fit;
use crate::domain::{
    canonical_order, compute_metrics, fraction_series, CompletistClass, DomainError, FractionSeries, GameMetrics,
    GameRecord,
};
use crate::scalar::{mean, sample_std};
use crate::Real;

/// Interior markers of a cohort mean series.
pub const INTERIOR_MARKERS: usize = 10;
/// Total markers of a cohort mean series, anchors included.
pub const SERIES_MARKERS: usize = INTERIOR_MARKERS + 2;
/// Admissible completist window widths.
pub const MIN_WINDOW: f64 = 0.05;
pub const MAX_WINDOW: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CohortError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("wrong class: {0}")]
    WrongClass(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// A game's metrics together with its ordered fraction series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameProfile<T> {
    pub id: String,
    pub metrics: GameMetrics<T>,
    pub series: FractionSeries<T>,
}

impl<T: Real> GameProfile<T> {
    pub fn from_record(record: &GameRecord) -> Result<Self, DomainError> {
        let ordered;
        let record = if record.ordered {
            record
        } else {
            ordered = canonical_order(record.clone());
            &ordered
        };
        Ok(Self {
            id: record.id.clone(),
            metrics: compute_metrics(record)?,
            series: fraction_series(record),
        })
    }

    /// Decay slope over normalized achievements `x = n / N`, origin-pinned.
    pub fn alpha(&self) -> T {
        fixed_intercept_fit(&self.series.x, &self.series.f).0
    }
}

/// Interior marker positions `j / 11`, `j = 1..=10`.
pub fn marker_grid<T: Real>() -> Vec<T> {
    let denom = T::from_count(INTERIOR_MARKERS + 1);
    (1..=INTERIOR_MARKERS).map(|j| T::from_count(j) / denom).collect()
}

/// Evaluates a series at `grid` by linear interpolation in `(x, ln f)`.
/// Positions past the last point take the last value.
pub fn resample<T: Real>(series: &FractionSeries<T>, grid: &[T]) -> Vec<T> {
    let xs = &series.x;
    let ys: Vec<T> = series.f.iter().map(|v| v.ln()).collect();
    grid.iter()
        .map(|&g| {
            let j = xs.partition_point(|&x| x < g);
            if j == 0 {
                return series.f[0];
            }
            if j >= xs.len() {
                return series.f[xs.len() - 1];
            }
            if xs[j] == g {
                return series.f[j];
            }
            let (x0, x1) = (xs[j - 1], xs[j]);
            let t = (g - x0) / (x1 - x0);
            (ys[j - 1] + t * (ys[j] - ys[j - 1])).exp()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanSeries<T> {
    pub x: Vec<T>,
    pub f: Vec<T>,
    /// Spread across games at each marker (sample standard deviation).
    pub std: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohortSummary<T> {
    /// Window `(lo, hi]` on the fraction of completists.
    pub lo: T,
    pub hi: T,
    pub game_count: usize,
    pub mean_f: Option<T>,
    pub mean_series: Option<MeanSeries<T>>,
    /// Slope of the fitted `exp(-alpha x)` through the mean series.
    pub alpha: Option<T>,
    /// Spread of the per-game slopes in the window.
    pub alpha_std: Option<T>,
}

fn window_count<T: Real>(width: T) -> usize {
    (T::one() / width - T::lit(1e-9)).ceil().to_usize().unwrap_or(1).max(1)
}

/// Index `k` of the half-open window `(k w, (k+1) w]` holding `v > 0`.
fn window_index<T: Real>(v: T, width: T, count: usize) -> usize {
    let mut k = ((v / width).ceil().to_usize().unwrap_or(1)).saturating_sub(1);
    while k > 0 && v <= T::from_count(k) * width {
        k -= 1;
    }
    while k + 1 < count && v > T::from_count(k + 1) * width {
        k += 1;
    }
    k.min(count - 1)
}

/// Groups completed games into completist windows of the given width and
/// builds each window's mean series and fitted slope.
pub fn group_by_completists<T: Real>(
    games: &[GameProfile<T>],
    window_width: T,
) -> Result<Vec<CohortSummary<T>>, CohortError> {
    if !(window_width >= T::lit(MIN_WINDOW) - T::epsilon() && window_width <= T::lit(MAX_WINDOW) + T::epsilon()) {
        return Err(CohortError::InvalidInput(format!(
            "window width {window_width} outside [{MIN_WINDOW}, {MAX_WINDOW}]"
        )));
    }
    if let Some(g) = games.iter().find(|g| g.metrics.class != CompletistClass::Completed) {
        return Err(CohortError::WrongClass(format!("game {} has no completists", g.id)));
    }
    let count = window_count(window_width);
    let mut buckets: Vec<Vec<&GameProfile<T>>> = vec![Vec::new(); count];
    for g in games {
        buckets[window_index(g.metrics.completists, window_width, count)].push(g);
    }
    let grid = marker_grid::<T>();
    let mut out = Vec::with_capacity(count);
    for (k, bucket) in buckets.iter().enumerate() {
        let lo = T::from_count(k) * window_width;
        let hi = T::from_count(k + 1) * window_width;
        let mut summary = CohortSummary {
            lo,
            hi,
            game_count: bucket.len(),
            mean_f: None,
            mean_series: None,
            alpha: None,
            alpha_std: None,
        };
        if !bucket.is_empty() {
            let fs: Vec<T> = bucket.iter().map(|g| g.metrics.completists).collect();
            let mean_f = mean(&fs).unwrap_or_else(T::zero);
            let samples: Vec<Vec<T>> = bucket.iter().map(|g| resample(&g.series, &grid)).collect();
            let mut x = vec![T::zero()];
            let mut f = vec![T::one()];
            let mut std = vec![T::zero()];
            for j in 0..INTERIOR_MARKERS {
                let col: Vec<T> = samples.iter().map(|s| s[j]).collect();
                x.push(grid[j]);
                f.push(mean(&col).unwrap_or_else(T::zero));
                std.push(sample_std(&col));
            }
            x.push(T::one());
            f.push(mean_f);
            std.push(sample_std(&fs));
            let alphas: Vec<T> = bucket.iter().map(|g| g.alpha()).collect();
            summary.mean_f = Some(mean_f);
            summary.mean_series = Some(MeanSeries { x, f, std });
            summary.alpha_std = Some(sample_std(&alphas));
            summary.alpha = alpha_from_cohort(&summary).ok();
        }
        out.push(summary);
    }
    Ok(out)
}

/// Origin-pinned log-linear slope of a cohort mean series over `x` in [0, 1].
pub fn alpha_from_cohort<T: Real>(summary: &CohortSummary<T>) -> Result<T, CohortError> {
    let series = summary
        .mean_series
        .as_ref()
        .ok_or_else(|| CohortError::InsufficientData("window has no games".into()))?;
    let usable = series.f.iter().filter(|&&v| v > T::zero()).count();
    if usable < 2 {
        return Err(CohortError::InsufficientData(format!("{usable} usable markers")));
    }
    Ok(fixed_intercept_fit(&series.x, &series.f).0)
}

/// Engagement of a game for the decay predictors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Engagement<T> {
    /// Fraction of completists `F` (completed class).
    Completists(T),
    /// `C` players reached the furthest achievement `n_max` (uncompleted class).
    BestReach { best_count: T, n_max: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PredictorInput<T> {
    pub players: T,
    pub achievements: usize,
    pub engagement: Engagement<T>,
}

impl<T: Real> From<&GameMetrics<T>> for PredictorInput<T> {
    fn from(m: &GameMetrics<T>) -> Self {
        let engagement = match (m.class, m.best_count) {
            (CompletistClass::Uncompleted, Some(c)) => Engagement::BestReach {
                best_count: T::lit(c as f64),
                n_max: m.n_max,
            },
            _ => Engagement::Completists(m.completists),
        };
        Self {
            players: T::lit(m.players as f64),
            achievements: m.achievements,
            engagement,
        }
    }
}

/// Expected players at achievement `n` of a completed game:
/// `G exp(-|ln F| n / N)`.
pub fn predict_completed<T: Real>(input: &PredictorInput<T>, n: usize) -> Result<T, CohortError> {
    let Engagement::Completists(f) = input.engagement else {
        return Err(CohortError::WrongClass("completed-game predictor needs F".into()));
    };
    if !(f > T::zero()) {
        return Err(CohortError::WrongClass(format!("F = {f} has no completists")));
    }
    if f > T::one() || input.achievements == 0 || n > input.achievements || !(input.players >= T::one()) {
        return Err(CohortError::InvalidInput(format!(
            "F = {f}, N = {}, n = {n}, G = {}",
            input.achievements, input.players
        )));
    }
    let x = T::from_count(n) / T::from_count(input.achievements);
    Ok(input.players * (-f.ln().abs() * x).exp())
}

/// Expected players at achievement `n` of an uncompleted game:
/// `G exp(-ln(G / C) n / n_max)`.
pub fn predict_uncompleted<T: Real>(input: &PredictorInput<T>, n: usize) -> Result<T, CohortError> {
    let Engagement::BestReach { best_count, n_max } = input.engagement else {
        return Err(CohortError::WrongClass("uncompleted-game predictor needs C and n_max".into()));
    };
    let g = input.players;
    if !(best_count >= T::one()) || best_count > g || n_max == 0 || n > n_max {
        return Err(CohortError::InvalidInput(format!(
            "C = {best_count}, G = {g}, n_max = {n_max}, n = {n}"
        )));
    }
    let x = T::from_count(n) / T::from_count(n_max);
    Ok(g * (-(g / best_count).ln() * x).exp())
}

/// Per-game ingredients of the `alpha U` relation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaUPoint<T> {
    pub players: u64,
    pub best_count: u64,
    pub alpha: T,
    pub completed_fraction: T,
}

impl<T: Real> AlphaUPoint<T> {
    pub fn alpha_u(&self) -> T {
        self.alpha * self.completed_fraction
    }
}

/// Points for every uncompleted game in `games`.
pub fn alpha_u_points<T: Real>(games: &[GameProfile<T>]) -> Vec<AlphaUPoint<T>> {
    games
        .iter()
        .filter(|g| g.metrics.class == CompletistClass::Uncompleted)
        .map(|g| AlphaUPoint {
            players: g.metrics.players,
            best_count: g.metrics.best_count.unwrap_or(1),
            alpha: g.alpha(),
            completed_fraction: g.metrics.completed_fraction,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaUWindow<T> {
    /// Player window `(lo, hi]`.
    pub lo: u64,
    pub hi: u64,
    pub game_count: usize,
    pub mean_players: T,
    pub mean_alpha_u: T,
    pub std_alpha_u: T,
    /// Reference `ln(mean G)`, the `C = 1` model.
    pub ln_players: T,
}

/// Groups points into player windows `(k w, (k+1) w]` up to `max_players`.
pub fn alpha_u_windows<T: Real>(points: &[AlphaUPoint<T>], player_window: u64, max_players: u64) -> Vec<AlphaUWindow<T>> {
    let w = player_window.max(1);
    let mut buckets: std::collections::BTreeMap<u64, Vec<&AlphaUPoint<T>>> = Default::default();
    for p in points.iter().filter(|p| p.players >= 1 && p.players <= max_players) {
        buckets.entry((p.players - 1) / w).or_default().push(p);
    }
    buckets
        .into_iter()
        .map(|(k, pts)| {
            let gs: Vec<T> = pts.iter().map(|p| T::lit(p.players as f64)).collect();
            let au: Vec<T> = pts.iter().map(|p| p.alpha_u()).collect();
            let mean_players = mean(&gs).unwrap_or_else(T::zero);
            AlphaUWindow {
                lo: k * w,
                hi: (k + 1) * w,
                game_count: pts.len(),
                mean_players,
                mean_alpha_u: mean(&au).unwrap_or_else(T::zero),
                std_alpha_u: sample_std(&au),
                ln_players: mean_players.ln(),
            }
        })
        .collect()
}

/// `alpha U` against total players for the uncompleted games in `games`.
pub fn alpha_u_relation<T: Real>(games: &[GameProfile<T>], player_window: u64, max_players: u64) -> Vec<AlphaUWindow<T>> {
    alpha_u_windows(&alpha_u_points(games), player_window, max_players)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProfileVariable {
    /// Fraction of completists, over completed games.
    Completists,
    /// Completed fraction, over uncompleted games.
    CompletedFraction,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopularityPoint<T> {
    pub center: T,
    pub game_count: usize,
    pub mean_players: T,
    /// Standard error of the mean; zero for single-game windows.
    pub error: T,
}

/// Mean players in `marker_count` equal windows `(k/m, (k+1)/m]` of the
/// engagement variable. Empty windows are omitted.
pub fn popularity_profile<T: Real>(
    games: &[GameProfile<T>],
    by: ProfileVariable,
    marker_count: usize,
) -> Vec<PopularityPoint<T>> {
    let m = marker_count.max(1);
    let width = T::one() / T::from_count(m);
    let mut buckets: Vec<Vec<T>> = vec![Vec::new(); m];
    for g in games {
        let v = match (by, g.metrics.class) {
            (ProfileVariable::Completists, CompletistClass::Completed) => g.metrics.completists,
            (ProfileVariable::CompletedFraction, CompletistClass::Uncompleted) => g.metrics.completed_fraction,
            _ => continue,
        };
        buckets[window_index(v, width, m)].push(T::lit(g.metrics.players as f64));
    }
    buckets
        .iter()
        .enumerate()
        .filter(|(_, b)| !b.is_empty())
        .map(|(k, b)| {
            let n = T::from_count(b.len());
            PopularityPoint {
                center: (T::from_count(k) + T::lit(0.5)) * width,
                game_count: b.len(),
                mean_players: mean(b).unwrap_or_else(T::zero),
                error: sample_std(b) / n.sqrt(),
            }
        })
        .collect()
}
