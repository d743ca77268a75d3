use gritstat::cohort::{self, GameProfile, ProfileVariable};
use gritstat::domain::canonical_order;
use gritstat::synth::{self, CompletistRule, LogTarget, SynthConfig};
use gritstat::{CompletistClass, GameRecord};

fn profile(record: &GameRecord) -> GameProfile<f64> {
    GameProfile::from_record(&canonical_order(record.clone())).unwrap()
}

/// Exact constant-ratio decay from `players` down to `best` at `n_max`,
/// counts rounded, zeros after `n_max`.
fn exact_uncompleted(id: usize, players: u64, best: u64, n_max: usize, total: usize) -> GameRecord {
    let ratio = (best as f64 / players as f64).powf(1.0 / n_max as f64);
    let unlocks = (1..=total)
        .map(|n| {
            if n > n_max {
                0
            } else if n == n_max {
                best
            } else {
                ((players as f64) * ratio.powi(n as i32)).round().max(best as f64) as u64
            }
        })
        .collect();
    GameRecord::new(format!("u{id}"), "u", players, unlocks)
}

#[test]
fn noisy_cohort_alpha_tracks_log_fraction() {
    let config = SynthConfig {
        seed: 37,
        game_count: 500,
        completists: CompletistRule::Fixed { value: 0.37 },
        players: LogTarget { mu: 7.0, sigma: 0.8 },
        ..SynthConfig::default()
    };
    let games: Vec<GameProfile<f64>> = synth::build_dataset(&config)
        .records
        .iter()
        .map(profile)
        .filter(|p| p.metrics.class == CompletistClass::Completed)
        .collect();
    let cohorts = cohort::group_by_completists(&games, 0.1).unwrap();
    let c = cohorts.iter().find(|c| c.lo < 0.37 && 0.37 <= c.hi).unwrap();
    let expected = -(0.37f64.ln());
    let alpha = c.alpha.unwrap();
    assert!(c.game_count > 300);
    assert!((alpha - expected).abs() / expected < 0.05, "alpha {alpha} vs {expected}");
}

#[test]
fn exact_decay_alpha_u_matches_log_players() {
    // every integer G in 11..=100 with C = 1, deepest point varying with G
    let games: Vec<GameProfile<f64>> = (11..=100u64)
        .map(|g| profile(&exact_uncompleted(g as usize, g, 1, 5 + (g as usize % 15), 30)))
        .collect();
    let windows = cohort::alpha_u_relation(&games, 10, 100);
    assert_eq!(windows.len(), 9);
    for w in &windows {
        let gap = (w.mean_alpha_u - w.ln_players).abs() / w.ln_players;
        assert!(gap < 0.05, "window ({}, {}]: {} vs {}", w.lo, w.hi, w.mean_alpha_u, w.ln_players);
    }
}

#[test]
fn larger_best_count_sits_below_log_players() {
    let games: Vec<GameProfile<f64>> = (11..=100u64)
        .map(|g| profile(&exact_uncompleted(g as usize, g, 2, 5 + (g as usize % 15), 30)))
        .collect();
    for w in cohort::alpha_u_relation(&games, 10, 100) {
        assert!(w.mean_alpha_u < w.ln_players, "window ({}, {}]", w.lo, w.hi);
    }
}

#[test]
fn popularity_falls_with_completist_fraction() {
    // G inversely tied to F, population weighted toward small F
    let records: Vec<GameRecord> = (0..400)
        .map(|i| {
            let f = 0.02 + 0.96 * ((i as f64 + 0.5) / 400.0).powi(2);
            let players = (2_000.0 * (1.0 - f) + 20.0).round() as u64;
            let best = ((players as f64) * f).round().max(1.0) as u64;
            let mid = (players + best) / 2;
            GameRecord::new(format!("p{i}"), "p", players, vec![players, mid, best])
        })
        .collect();
    let games: Vec<GameProfile<f64>> = records.iter().map(profile).collect();
    let prof = cohort::popularity_profile(&games, ProfileVariable::Completists, 10);
    assert!(prof.len() >= 8);
    for pair in prof.windows(2) {
        assert!(pair[1].mean_players < pair[0].mean_players);
    }
}
