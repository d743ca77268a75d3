use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gritstat::distfit::{self, Family};
use gritstat::ingest::{self, Format};

fn gritstat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gritstat"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = gritstat(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn field<'a>(stdout: &'a str, key: &str) -> &'a str {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('\t')))
        .unwrap_or_else(|| panic!("no {key} in {stdout}"))
}

fn simulate(dir: &Path, games: usize, seed: u64) -> String {
    let d = dir.to_str().unwrap();
    ok(&["simulate", "--games", &games.to_string(), "--seed", &seed.to_string(), "--out", d]);
    dir.join("games.jsonl").to_str().unwrap().to_string()
}

#[test]
fn simulate_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    simulate(&a, 1000, 7);
    simulate(&b, 1000, 7);
    for name in ["games.jsonl", "truth.jsonl"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let c = tmp.path().join("c");
    simulate(&c, 1000, 8);
    assert_ne!(fs::read(a.join("games.jsonl")).unwrap(), fs::read(c.join("games.jsonl")).unwrap());
}

#[test]
fn stats_match_a_direct_recount() {
    let tmp = tempfile::tempdir().unwrap();
    let input = simulate(tmp.path(), 2000, 11);
    let (records, _) = ingest::load(Path::new(&input), Format::JsonLines).unwrap();
    let completed = records.iter().filter(|r| r.unlocks.iter().all(|&c| c > 0)).count();
    let mean_players = records.iter().map(|r| r.players as f64).sum::<f64>() / records.len() as f64;

    let out_dir = tmp.path().join("stats");
    let stdout = ok(&["stats", "--input", &input, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(field(&stdout, "games"), records.len().to_string());
    assert_eq!(field(&stdout, "completed"), completed.to_string());
    assert_eq!(field(&stdout, "uncompleted"), (records.len() - completed).to_string());
    assert_eq!(field(&stdout, "mean_players"), format!("{mean_players:.3}"));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("stats.json")).unwrap()).unwrap();
    assert_eq!(json["completed"], completed);
}

#[test]
fn fit_dist_echoes_the_library_fit() {
    let tmp = tempfile::tempdir().unwrap();
    let input = simulate(tmp.path(), 5000, 3);
    let (records, _) = ingest::load(Path::new(&input), Format::JsonLines).unwrap();
    let values: Vec<f64> = records.iter().map(|r| r.achievements() as f64).collect();
    let fit = distfit::fit_family(&values, Family::LogNormal).unwrap().report("achievements");

    let out_dir = tmp.path().join("fit");
    let stdout = ok(&["fit-dist", "--input", &input, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(field(&stdout, "family"), "lognormal");
    for (name, value) in &fit.params {
        let printed: f64 = field(&stdout, name).split('\t').next().unwrap().parse().unwrap();
        assert!((printed - value).abs() < 5e-5, "{name}: {printed} vs {value}");
    }
    let mu: f64 = field(&stdout, "mu").split('\t').next().unwrap().parse().unwrap();
    assert!((mu - 3.20).abs() < 0.1, "mu {mu}");
    assert!(out_dir.join("fit_achievements.json").exists());
    assert!(out_dir.join("hist_achievements.tsv").exists());
}

#[test]
fn report_writes_the_full_bundle() {
    let tmp = tempfile::tempdir().unwrap();
    let input = simulate(tmp.path(), 5000, 19);
    let out_dir = tmp.path().join("report");
    let stdout = ok(&["report", "--input", &input, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(stdout.lines().count(), 12);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    for art in manifest["artifacts"].as_array().unwrap() {
        let name = art["file"].as_str().unwrap();
        let lines = fs::read_to_string(out_dir.join(name)).unwrap().lines().count();
        assert_eq!(art["rows"].as_u64().unwrap() as usize + 1, lines, "{name}");
    }
}

#[test]
fn report_on_completed_only_data_succeeds() {
    let tmp = tempfile::tempdir().unwrap();
    let input = simulate(tmp.path(), 800, 23);
    let (records, _) = ingest::load(Path::new(&input), Format::JsonLines).unwrap();
    let completed: Vec<_> = records.into_iter().filter(|r| r.unlocks.iter().all(|&c| c > 0)).collect();
    let filtered = tmp.path().join("completed.jsonl");
    ingest::write_jsonl(&completed, fs::File::create(&filtered).unwrap()).unwrap();
    let out_dir = tmp.path().join("report");
    ok(&["report", "--input", filtered.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    let fig4 = fs::read_to_string(out_dir.join("fig4.tsv")).unwrap();
    assert_eq!(fig4.lines().count(), 1);
}

#[test]
fn exit_codes_separate_usage_from_data_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("missing.jsonl");
    assert_eq!(gritstat(&["stats", "--input", missing.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(gritstat(&["stats", "--bogus"]).status.code(), Some(2));
    assert_eq!(gritstat(&["stats"]).status.code(), Some(2));

    let empty = tmp.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let out = gritstat(&["stats", "--input", empty.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    let input = simulate(tmp.path(), 200, 1);
    let out_dir = tmp.path().join("c");
    let args = ["cohort", "--input", &input, "--out", out_dir.to_str().unwrap(), "--window", "0.5"];
    assert_eq!(gritstat(&args).status.code(), Some(2));
}

#[test]
fn flags_override_the_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("gritstat.conf");
    let from_file = tmp.path().join("from_file");
    fs::write(
        &config,
        format!("# defaults\ngames = 50\nseed = 5\nout = {}\n", from_file.display()),
    )
    .unwrap();
    let cfg = config.to_str().unwrap();
    let stdout = ok(&["--config", cfg, "simulate"]);
    assert_eq!(field(&stdout, "games"), "50");
    assert_eq!(field(&stdout, "seed"), "5");
    assert!(from_file.join("games.jsonl").exists());

    let stdout = ok(&["--config", cfg, "simulate", "--seed", "9", "--games", "70"]);
    assert_eq!(field(&stdout, "games"), "70");
    assert_eq!(field(&stdout, "seed"), "9");

    fs::write(&config, "colour = blue\n").unwrap();
    assert_eq!(gritstat(&["--config", cfg, "simulate"]).status.code(), Some(2));
}
