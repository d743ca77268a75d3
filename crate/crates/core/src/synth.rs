//! Synthetic datasets with known ground truth.
//!
//! Totals (achievements, players) come from a random multiplicative
//! fragmentation: the log-size is a sum of `k` independent increments, so
//! sizes are approximately log-normal. Unlock counts come from constant
//! continuation: every player passes each achievement with probability `r`,
//! giving `g(n) ~ G r^n`.
//!
//! Randomness is ChaCha8 keyed by the run seed. Each game draws from its own
//! stream (the game index), and player depths are drawn in player order
//! within that stream, so output does not depend on how games are scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::GameRecord;

/// Stream offsets separating the independent random sources of a run.
const STREAM_ACHIEVEMENTS: u64 = 1 << 62;
const STREAM_PLAYERS: u64 = (1 << 62) + 1;
const STREAM_TARGETS: u64 = (1 << 62) + 2;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Law of the standardized log-increments of the fragmentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IncrementLaw {
    /// `ln p` for `p` uniform on (0, 1), standardized (mean -1, variance 1).
    #[default]
    LogUniform,
    /// Standard normal increments: the log-size is exactly normal.
    Normal,
}

/// Log-normal target `(mu, sigma)` of a fragmentation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogTarget {
    pub mu: f64,
    pub sigma: f64,
}

fn standard_increment(rng: &mut ChaCha8Rng, law: IncrementLaw) -> f64 {
    match law {
        IncrementLaw::LogUniform => {
            // -ln p ~ Exp(1): mean 1, variance 1
            let p: f64 = 1.0 - rng.random::<f64>();
            p.ln() + 1.0
        }
        IncrementLaw::Normal => rng.sample(StandardNormal),
    }
}

/// Continuous log-sizes `sum_j z_j`, with `z_j` of mean `mu / k` and
/// standard deviation `sigma / sqrt(k)`.
pub fn fragment_log_sizes(count: usize, k: usize, target: LogTarget, law: IncrementLaw, seed: u64) -> Vec<f64> {
    let k = k.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let loc = target.mu / k as f64;
    let scale = target.sigma / (k as f64).sqrt();
    (0..count)
        .map(|_| (0..k).map(|_| loc + scale * standard_increment(&mut rng, law)).sum())
        .collect()
}

/// Integer sizes `max(1, round(exp(log-size)))` from the fragmentation.
pub fn fragment_totals(count: usize, k: usize, target: LogTarget, law: IncrementLaw, seed: u64) -> Vec<u64> {
    fragment_log_sizes(count, k, target, law, seed)
        .into_iter()
        .map(|l| {
            let v = l.exp().round();
            if v >= u64::MAX as f64 {
                u64::MAX
            } else {
                (v as u64).max(1)
            }
        })
        .collect()
}

/// Player depth: achievements passed in a row, each with probability `r`,
/// capped at `n`. Geometric draw by inversion.
fn draw_depth(rng: &mut impl Rng, r: f64, n: usize) -> usize {
    if r >= 1.0 {
        return n;
    }
    if r <= 0.0 {
        return 0;
    }
    let u: f64 = 1.0 - rng.random::<f64>();
    let d = (u.ln() / r.ln()).floor();
    if d >= n as f64 {
        n
    } else {
        d as usize
    }
}

/// Unlock counts for `players` players passing each of `achievements`
/// achievements with probability `r`. Counts are non-increasing.
pub fn build_game_with(
    rng: &mut impl Rng,
    id: impl Into<String>,
    name: impl Into<String>,
    players: u64,
    achievements: usize,
    r: f64,
) -> GameRecord {
    let mut at_depth = vec![0u64; achievements + 1];
    for _ in 0..players {
        at_depth[draw_depth(rng, r, achievements)] += 1;
    }
    // unlocks[n-1] = players with depth >= n
    let mut unlocks = vec![0u64; achievements];
    let mut acc = 0u64;
    for n in (1..=achievements).rev() {
        acc += at_depth[n];
        unlocks[n - 1] = acc;
    }
    let mut record = GameRecord::new(id, name, players, unlocks);
    record.ordered = true;
    record
}

/// [`build_game_with`] on a ChaCha8 stream seeded from `seed`.
pub fn build_game(players: u64, achievements: usize, r: f64, seed: u64) -> GameRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    build_game_with(&mut rng, format!("syn-{seed}"), format!("Synthetic {seed}"), players, achievements, r)
}

/// How each game's target fraction of completists is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum CompletistRule {
    Fixed { value: f64 },
    Uniform { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub game_count: usize,
    /// Fragmentation steps `k`.
    pub frag_steps: usize,
    pub increments: IncrementLaw,
    pub achievements: LogTarget,
    pub players: LogTarget,
    pub completists: CompletistRule,
    /// Small-`G` regime where nobody is expected to finish: the target
    /// fraction becomes `expected_completists / G`.
    pub uncompleted_mode: bool,
    pub expected_completists: f64,
    /// Cap on sampled player totals.
    pub max_players: Option<u64>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            game_count: 1000,
            frag_steps: 16,
            increments: IncrementLaw::LogUniform,
            achievements: LogTarget { mu: 3.20, sigma: 0.66 },
            players: LogTarget { mu: 3.96, sigma: 2.18 },
            completists: CompletistRule::Uniform { lo: 0.01, hi: 0.9 },
            uncompleted_mode: false,
            expected_completists: 0.05,
            max_players: Some(100_000),
        }
    }
}

/// Ground truth of one synthetic game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub id: String,
    pub r: f64,
    #[serde(rename = "F_target")]
    pub f_target: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "G")]
    pub g: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub records: Vec<GameRecord>,
    pub truth: Vec<GroundTruth>,
}

pub fn game_id(index: usize) -> String {
    format!("syn-{index:06}")
}

/// Builds a full dataset: totals from the fragmentation, then one
/// constant-continuation game per index with `r = F_target^(1/N)`.
pub fn build_dataset(config: &SynthConfig) -> SynthDataset {
    let count = config.game_count;
    let ns = fragment_totals(count, config.frag_steps, config.achievements, config.increments, config.seed ^ STREAM_ACHIEVEMENTS);
    let mut gs = fragment_totals(count, config.frag_steps, config.players, config.increments, config.seed ^ STREAM_PLAYERS);
    let cap = if config.uncompleted_mode {
        Some(config.max_players.unwrap_or(100).min(100))
    } else {
        config.max_players
    };
    if let Some(cap) = cap {
        for g in &mut gs {
            *g = (*g).min(cap.max(1));
        }
    }
    let mut target_rng = stream_rng(config.seed, STREAM_TARGETS);
    let f_targets: Vec<f64> = gs
        .iter()
        .map(|&g| {
            if config.uncompleted_mode {
                (config.expected_completists / g as f64).min(1.0)
            } else {
                match config.completists {
                    CompletistRule::Fixed { value } => value,
                    CompletistRule::Uniform { lo, hi } => lo + (hi - lo) * target_rng.random::<f64>(),
                }
            }
        })
        .collect();
    let games: Vec<(GameRecord, GroundTruth)> = (0..count)
        .into_par_iter()
        .map(|i| {
            let n = ns[i].min(100_000) as usize;
            let g = gs[i];
            let f_target = f_targets[i].clamp(f64::MIN_POSITIVE, 1.0);
            let r = f_target.powf(1.0 / n as f64);
            let mut rng = stream_rng(config.seed, i as u64);
            let id = game_id(i);
            let record = build_game_with(&mut rng, id.clone(), format!("Synthetic game {i}"), g, n, r);
            (record, GroundTruth { id, r, f_target, n, g })
        })
        .collect();
    let (records, truth) = games.into_iter().unzip();
    SynthDataset { records, truth }
}

/// Ground-truth sidecar as JSON Lines: `{id, r, F_target, N, G}`.
pub fn truth_jsonl(truth: &[GroundTruth]) -> String {
    let mut out = String::new();
    for t in truth {
        out.push_str(&serde_json::to_string(t).expect("ground truth serializes"));
        out.push('\n');
    }
    out
}
