use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use gritstat::cohort::{self, GameProfile};
use gritstat::decay::{self, ClassFilter};
use gritstat::distfit::{self, BinScheme, Family};
use gritstat::ingest::{self, Format};
use gritstat::report::{self, ReportOptions};
use gritstat::synth::{self, SynthConfig};
use gritstat::{CompletistClass, GameRecord};
use serde_json::json;

use crate::config::ConfigFile;
use crate::{CliError, CohortArgs, FitDecayArgs, FitDistArgs, InputArgs, SimulateArgs};

type Outcome = Result<(), CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn input_format(file: &ConfigFile, io: &InputArgs, path: &Path) -> Result<Format, CliError> {
    match file.pick(io.format.clone(), "format")? {
        Some(raw) => raw.parse::<Format>().map_err(usage),
        None => Ok(match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::JsonLines,
        }),
    }
}

/// Loads and curates `--input`; rejected rows are logged, not fatal.
fn load(file: &ConfigFile, io: &InputArgs) -> Result<Vec<GameRecord>, CliError> {
    let path: PathBuf = file.required(io.input.clone(), "input")?;
    let format = input_format(file, io, &path)?;
    let (records, raw) = ingest::load(&path, format).map_err(|e| CliError::Data(e.into()))?;
    if !raw.rejected.is_empty() {
        log::warn!("{}: {} of {} rows rejected", path.display(), raw.rejected.len(), raw.rows);
    }
    log::info!("{}: {} games", path.display(), records.len());
    Ok(records)
}

fn load_nonempty(file: &ConfigFile, io: &InputArgs) -> Result<Vec<GameRecord>, CliError> {
    let records = load(file, io)?;
    if records.is_empty() {
        return Err(CliError::Data(anyhow!("dataset is empty")));
    }
    Ok(records)
}

fn out_dir(file: &ConfigFile, flag: Option<PathBuf>) -> Result<PathBuf, CliError> {
    let dir: PathBuf = file.required(flag, "out")?;
    fs::create_dir_all(&dir)
        .with_context(|| format!("cannot create {}", dir.display()))?;
    Ok(dir)
}

fn write(dir: &Path, name: &str, body: &str) -> Outcome {
    let path = dir.join(name);
    fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> Outcome {
    let mut body = serde_json::to_string_pretty(value).expect("json value serializes");
    body.push('\n');
    write(dir, name, &body)
}

fn profiles(records: &[GameRecord]) -> Vec<GameProfile<f64>> {
    records
        .iter()
        .filter_map(|r| match GameProfile::from_record(r) {
            Ok(p) => Some(p),
            Err(e) => {
                log::warn!("skipping {}: {e}", r.id);
                None
            }
        })
        .collect()
}

fn split(profiles: Vec<GameProfile<f64>>) -> (Vec<GameProfile<f64>>, Vec<GameProfile<f64>>) {
    profiles
        .into_iter()
        .partition(|p| p.metrics.class == CompletistClass::Completed)
}

pub fn ingest(file: &ConfigFile, io: InputArgs) -> Outcome {
    let path: PathBuf = file.required(io.input.clone(), "input")?;
    let format = input_format(file, &io, &path)?;
    let dir = out_dir(file, io.out.clone())?;
    let (records, raw) = ingest::load(&path, format).map_err(|e| CliError::Data(e.into()))?;
    let games = dir.join("games.jsonl");
    let handle = fs::File::create(&games).with_context(|| format!("cannot write {}", games.display()))?;
    ingest::write_jsonl(&records, BufWriter::new(handle))
        .with_context(|| format!("cannot write {}", games.display()))?;
    write(&dir, "rejected.tsv", &ingest::rejections_tsv(&raw.rejected))?;
    println!("rows\t{}", raw.rows);
    println!("accepted\t{}", raw.accepted);
    println!("rejected\t{}", raw.rejected.len());
    Ok(())
}

pub fn stats(file: &ConfigFile, io: InputArgs) -> Outcome {
    let records = load_nonempty(file, &io)?;
    let (completed, uncompleted) = split(profiles(&records));
    let games = completed.len() + uncompleted.len();
    let pct = 100.0 * completed.len() as f64 / games as f64;
    let mean = |f: fn(&GameProfile<f64>) -> f64| {
        completed.iter().chain(&uncompleted).map(f).sum::<f64>() / games as f64
    };
    let mean_n = mean(|p| p.metrics.achievements as f64);
    let mean_g = mean(|p| p.metrics.players as f64);
    println!("games\t{games}");
    println!("completed\t{}", completed.len());
    println!("uncompleted\t{}", uncompleted.len());
    println!("with_completists_pct\t{pct:.2}");
    println!("mean_achievements\t{mean_n:.3}");
    println!("mean_players\t{mean_g:.3}");
    if let Some(flag) = io.out.clone().or(file.pick(None, "out")?) {
        let dir = out_dir(file, Some(flag))?;
        write_json(
            &dir,
            "stats.json",
            &json!({
                "games": games,
                "completed": completed.len(),
                "uncompleted": uncompleted.len(),
                "with_completists_pct": pct,
                "mean_achievements": mean_n,
                "mean_players": mean_g,
            }),
        )?;
    }
    Ok(())
}

pub fn fit_dist(file: &ConfigFile, a: FitDistArgs) -> Outcome {
    let variable: String = file.or(a.variable.clone(), "variable", "achievements".to_string())?;
    let family_raw: String = file.or(a.family.clone(), "family", "lognormal".to_string())?;
    let family = match family_raw.to_ascii_lowercase().as_str() {
        "auto" => None,
        other => Some(other.parse::<Family>().map_err(usage)?),
    };
    let bins: usize = file.or(a.bins, "bins", 30)?;
    if bins == 0 {
        return Err(usage("--bins must be positive"));
    }
    let records = load_nonempty(file, &a.io)?;
    let values: Vec<f64> = match variable.as_str() {
        "achievements" => records.iter().map(|r| r.achievements() as f64).collect(),
        "players" => records.iter().map(|r| r.players as f64).collect(),
        other => return Err(usage(format!("unknown variable '{other}' (achievements or players)"))),
    };
    let fit = match family {
        Some(f) => distfit::fit_family(&values, f),
        None => distfit::select_best(&values),
    }
    .map_err(|e| CliError::Data(anyhow!("{variable}: {e}")))?;
    let candidates: Vec<serde_json::Value> = Family::ALL
        .iter()
        .filter(|_| family.is_none())
        .map(|&f| match distfit::fit_family(&values, f) {
            Ok(c) => json!({ "family": f, "ks": c.ks_stat }),
            Err(e) => json!({ "family": f, "error": e.to_string() }),
        })
        .collect();
    let rep = fit.report(&variable);

    println!("variable\t{variable}");
    println!("family\t{}", rep.family);
    for (name, value) in &rep.params {
        match rep.ci.as_ref().and_then(|ci| ci.get(name)) {
            Some([lo, hi]) => println!("{name}\t{value:.4}\t[{lo:.4}, {hi:.4}]"),
            None => println!("{name}\t{value:.4}"),
        }
    }
    if let Some(ks) = rep.ks {
        println!("ks\t{ks:.5}");
    }
    println!("n\t{}", rep.n);

    if let Some(flag) = a.io.out.clone().or(file.pick(None, "out")?) {
        let dir = out_dir(file, Some(flag))?;
        let mut body = serde_json::to_value(&rep).expect("fit report serializes");
        if !candidates.is_empty() {
            body["candidates"] = serde_json::Value::Array(candidates);
        }
        write_json(&dir, &format!("fit_{variable}.json"), &body)?;
        let hist = distfit::histogram(&values, BinScheme::LogBins, bins)
            .map_err(|e| CliError::Data(anyhow!("{variable}: {e}")))?;
        write(&dir, &format!("hist_{variable}.tsv"), &hist.to_tsv())?;
    }
    Ok(())
}

pub fn fit_decay(file: &ConfigFile, a: FitDecayArgs) -> Outcome {
    let drop_negative = file.switch(a.drop_negative_r2, "drop-negative-r2")?;
    let dir = out_dir(file, a.io.out.clone())?;
    let records = load_nonempty(file, &a.io)?;
    let fits: Vec<_> = profiles(&records)
        .iter()
        .filter_map(|p| match decay::fit_decay(&p.series) {
            Ok(f) => Some((p.metrics.class, f)),
            Err(e) => {
                log::warn!("{e}");
                None
            }
        })
        .collect();
    write(&dir, "decay.tsv", &decay::decay_tsv(&fits))?;
    for (filter, name) in [
        (ClassFilter::Completed, "ranking_completed.tsv"),
        (ClassFilter::Uncompleted, "ranking_uncompleted.tsv"),
    ] {
        let ranking = decay::rank_by_r2(&fits, filter, drop_negative);
        write(&dir, name, &decay::ranking_tsv(&ranking))?;
        let r2: Vec<f64> = ranking.iter().map(|e| e.r_squared).collect();
        let median = if r2.is_empty() { f64::NAN } else { r2[r2.len() / 2] };
        println!("{}\tgames {}\tmedian_r2 {median:.4}", filter_name(filter), r2.len());
    }
    Ok(())
}

fn filter_name(filter: ClassFilter) -> &'static str {
    match filter {
        ClassFilter::All => "all",
        ClassFilter::Completed => "completed",
        ClassFilter::Uncompleted => "uncompleted",
    }
}

fn report_options(file: &ConfigFile, a: &CohortArgs) -> Result<ReportOptions, CliError> {
    let d = ReportOptions::default();
    let opts = ReportOptions {
        window: file.or(a.window, "window", d.window)?,
        player_window: file.or(a.player_window, "player-window", d.player_window)?,
        max_players: file.or(a.max_players, "max-players", d.max_players)?,
        ..d
    };
    if !(cohort::MIN_WINDOW..=cohort::MAX_WINDOW).contains(&opts.window) {
        return Err(usage(format!(
            "--window must lie in [{}, {}], got {}",
            cohort::MIN_WINDOW,
            cohort::MAX_WINDOW,
            opts.window
        )));
    }
    if opts.player_window == 0 {
        return Err(usage("--player-window must be positive"));
    }
    Ok(opts)
}

pub fn cohort(file: &ConfigFile, a: CohortArgs) -> Outcome {
    let opts = report_options(file, &a)?;
    let dir = out_dir(file, a.io.out.clone())?;
    let records = load_nonempty(file, &a.io)?;
    let (completed, uncompleted) = split(profiles(&records));
    let (fig3a, fig3b) =
        report::cohort_tables(&completed, opts.window).map_err(|e| CliError::Data(e.into()))?;
    write(&dir, "fig3a.tsv", &fig3a)?;
    write(&dir, "fig3b.tsv", &fig3b)?;
    write(
        &dir,
        "fig4.tsv",
        &report::alpha_u_table(&uncompleted, opts.player_window, opts.max_players),
    )?;
    let summaries = cohort::group_by_completists(&completed, opts.window).map_err(|e| CliError::Data(e.into()))?;
    println!("window\tgames\tmean_F\talpha\t-ln(mean_F)");
    for s in summaries.iter().filter(|s| s.game_count > 0) {
        let (mf, alpha) = (s.mean_f.unwrap_or(f64::NAN), s.alpha.unwrap_or(f64::NAN));
        println!("({:.2}, {:.2}]\t{}\t{mf:.4}\t{alpha:.4}\t{:.4}", s.lo, s.hi, s.game_count, -mf.ln());
    }
    Ok(())
}

pub fn simulate(file: &ConfigFile, a: SimulateArgs) -> Outcome {
    let d = SynthConfig::default();
    let config = SynthConfig {
        seed: file.or(a.seed, "seed", d.seed)?,
        game_count: file.or(a.games, "games", d.game_count)?,
        uncompleted_mode: file.switch(a.uncompleted, "uncompleted")?,
        ..d
    };
    let dir = out_dir(file, a.out.clone())?;
    let data = synth::build_dataset(&config);
    let games = dir.join("games.jsonl");
    let handle = fs::File::create(&games).with_context(|| format!("cannot write {}", games.display()))?;
    ingest::write_jsonl(&data.records, BufWriter::new(handle))
        .with_context(|| format!("cannot write {}", games.display()))?;
    write(&dir, "truth.jsonl", &synth::truth_jsonl(&data.truth))?;
    let completed = data.records.iter().filter(|r| r.unlocks.iter().all(|&c| c > 0)).count();
    println!("games\t{}", data.records.len());
    println!("seed\t{}", config.seed);
    println!("with_completists\t{completed}");
    Ok(())
}

pub fn report(file: &ConfigFile, a: CohortArgs) -> Outcome {
    let opts = report_options(file, &a)?;
    let dir = out_dir(file, a.io.out.clone())?;
    let records = load_nonempty(file, &a.io)?;
    let manifest = report::report(&records, &dir, &opts).map_err(|e| CliError::Data(e.into()))?;
    println!(
        "games\t{}\tcompleted {}\tuncompleted {}",
        manifest.games, manifest.completed, manifest.uncompleted
    );
    for art in &manifest.artifacts {
        println!("{}\t{} rows", art.file, art.rows);
    }
    Ok(())
}
