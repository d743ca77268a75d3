use std::fs;

use gritstat::report::{self, ReportOptions, FIGURE_FILES};
use gritstat::synth::{self, SynthConfig};
use gritstat::GameRecord;
use sha2::{Digest, Sha256};

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn synthetic(count: usize, seed: u64) -> Vec<GameRecord> {
    let config = SynthConfig {
        seed,
        game_count: count,
        ..SynthConfig::default()
    };
    synth::build_dataset(&config)
        .records
        .into_iter()
        .filter(|r| r.validate().is_ok())
        .collect()
}

#[test]
fn five_thousand_games_bundle_matches_manifest() {
    let records = synthetic(5_000, 55);
    let dir = tempfile::tempdir().unwrap();
    report::report(&records, dir.path(), &ReportOptions::default()).unwrap();
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    let artifacts = manifest["artifacts"].as_array().unwrap();
    assert_eq!(artifacts.len(), 11);
    for (name, art) in FIGURE_FILES.iter().zip(artifacts) {
        let bytes = fs::read(dir.path().join(name)).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert_eq!(art["file"], *name);
        assert_eq!(art["rows"].as_u64().unwrap() as usize + 1, text.lines().count(), "{name}");
        assert_eq!(art["sha256"].as_str().unwrap(), hex(&Sha256::digest(&bytes)), "{name}");
        assert!(text.ends_with('\n') && !text.contains('\r'));
        let columns = text.lines().next().unwrap().split('\t').count();
        assert!(text.lines().all(|l| l.split('\t').count() == columns), "{name}");
    }
    assert_eq!(manifest["games"].as_u64().unwrap() as usize, records.len());
    let fit = &manifest["fits"]["achievements"];
    assert_eq!(fit["family"], "lognormal");
    assert!(fit["ci"]["mu"].is_array());
}

#[test]
fn completed_only_dataset_writes_header_only_tables() {
    let records: Vec<GameRecord> = synthetic(500, 3)
        .into_iter()
        .filter(|r| r.unlocks.iter().all(|&c| c > 0))
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let manifest = report::report(&records, dir.path(), &ReportOptions::default()).unwrap();
    assert_eq!(manifest.uncompleted, 0);
    assert_eq!(fs::read_to_string(dir.path().join("fig2d.tsv")).unwrap(), "rank\tgame_id\tr2\n");
    assert_eq!(
        fs::read_to_string(dir.path().join("fig4.tsv")).unwrap(),
        "mean_G\tmean_alphaU\tstd\tln_G\n"
    );
}

#[test]
fn negative_r2_games_never_reach_the_uncompleted_ranking() {
    let records = synthetic(3_000, 8);
    let bundle = report::build(&records, &ReportOptions::default()).unwrap();
    let fig2d = &bundle.files.iter().find(|(n, _)| n == "fig2d.tsv").unwrap().1;
    for line in fig2d.lines().skip(1) {
        let r2: f64 = line.split('\t').nth(2).unwrap().parse().unwrap();
        assert!(r2 >= 0.0);
    }
}
