use std::fs;
use std::io::Write;
use std::path::Path;

use gritstat::ingest::{self, Format, RejectReason};
use gritstat::synth::{self, SynthConfig};
use gritstat::GameRecord;

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn valid_synthetic(count: usize, seed: u64) -> Vec<GameRecord> {
    let config = SynthConfig {
        seed,
        game_count: count + count / 2,
        ..SynthConfig::default()
    };
    synth::build_dataset(&config)
        .records
        .into_iter()
        .filter(|r| r.validate().is_ok())
        .take(count)
        .collect()
}

#[test]
fn hundred_row_fixture_has_three_malformed_lines() {
    let rows = ingest::parse(&fixture("hundred_rows.jsonl"), Format::JsonLines).unwrap();
    let bad: Vec<usize> = rows.iter().filter_map(|r| r.as_ref().err().map(|e| e.row)).collect();
    assert_eq!(rows.len(), 100);
    assert_eq!(rows.iter().filter(|r| r.is_ok()).count(), 97);
    assert_eq!(bad, vec![18, 53, 89]);
}

#[test]
fn corrupted_rows_are_all_quarantined() {
    let valid = valid_synthetic(1000, 21);
    assert_eq!(valid.len(), 1000);
    let corrupt = [
        r#"{"id":"bad-{i}","name":"x","players":5,"unlocks":[6,1]}"#,
        r#"{"id":"bad-{i}","name":"x","players":5,"unlocks":[0,0]}"#,
        r#"{"id":"bad-{i}","name":"x","players":0,"unlocks":[0]}"#,
        r#"{"id":"bad-{i}","name":"x","players":5,"unlocks":[]}"#,
        r#"{"id":"bad-{i}","name":"x","players":5,"unlocks":[3,-1]}"#,
        r#"{"id":"bad-{i}","name":"x","players":5"#,
    ];
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mixed.jsonl");
    let mut out = fs::File::create(&path).unwrap();
    let mut bad = 0;
    for (i, r) in valid.iter().enumerate() {
        writeln!(out, "{}", ingest::record_to_json(r)).unwrap();
        if i % 20 == 7 {
            writeln!(out, "{}", corrupt[bad % corrupt.len()].replace("{i}", &bad.to_string())).unwrap();
            bad += 1;
        }
    }
    drop(out);
    assert_eq!(bad, 50);
    let (accepted, raw) = ingest::load(&path, Format::JsonLines).unwrap();
    assert_eq!(accepted.len(), 1000);
    assert_eq!(raw.rejected.len(), 50);
    let ids: Vec<&str> = accepted.iter().map(|r| r.id.as_str()).collect();
    let expected: Vec<&str> = valid.iter().map(|r| r.id.as_str()).collect();
    assert_eq!(ids, expected);
    assert!(raw.rejected.iter().any(|r| r.reason == RejectReason::CountExceedsPlayers));
    assert!(raw.rejected.iter().any(|r| r.reason == RejectReason::NegativeCount));
}

#[test]
fn csv_and_jsonl_inputs_agree() {
    let valid = valid_synthetic(200, 4);
    let dir = tempfile::tempdir().unwrap();
    let jsonl = dir.path().join("games.jsonl");
    ingest::write_jsonl(&valid, fs::File::create(&jsonl).unwrap()).unwrap();
    let csv = dir.path().join("games.csv");
    let mut body = String::from("id,name,players,unlocks\n");
    for r in &valid {
        let unlocks: Vec<String> = r.unlocks.iter().map(u64::to_string).collect();
        body.push_str(&format!("{},\"{}\",{},{}\n", r.id, r.name, r.players, unlocks.join("|")));
    }
    fs::write(&csv, body).unwrap();
    let (a, _) = ingest::load(&jsonl, Format::JsonLines).unwrap();
    let (b, _) = ingest::load(&csv, Format::Csv).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 200);
}

#[test]
fn curated_output_reingests_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let (first, _) = ingest::load(&fixture("hundred_rows.jsonl"), Format::JsonLines).unwrap();
    let path = dir.path().join("curated.jsonl");
    ingest::write_jsonl(&first, fs::File::create(&path).unwrap()).unwrap();
    let bytes = fs::read(&path).unwrap();
    let (second, raw) = ingest::load(&path, Format::JsonLines).unwrap();
    assert_eq!(first, second);
    assert!(raw.rejected.is_empty());
    ingest::write_jsonl(&second, fs::File::create(&path).unwrap()).unwrap();
    assert_eq!(fs::read(&path).unwrap(), bytes);
}
