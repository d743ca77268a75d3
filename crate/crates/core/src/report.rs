//! Figure-data bundle for a curated dataset.
//!
//! Writes one TSV per panel (`fig1a`..`fig1f`, `fig2c`, `fig2d`, `fig3a`,
//! `fig3b`, `fig4`) plus `manifest.json` with row counts, SHA-256 checksums
//! and the distribution fits. TSV files use a header row, tab separators and
//! LF line endings. Output bytes depend only on the input records and options.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cohort::{self, GameProfile, ProfileVariable};
use crate::decay::{self, ClassFilter, DecayFit};
use crate::distfit::{self, BinScheme, Family, FitReport};
use crate::domain::{CompletistClass, GameRecord};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error(transparent)]
    Cohort(#[from] cohort::CohortError),
    #[error("cannot write {path}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReportOptions {
    /// Completist window width for the cohort panels.
    pub window: f64,
    /// Player window width for the `alpha U` panel.
    pub player_window: u64,
    /// Largest player total included in the `alpha U` panel.
    pub max_players: u64,
    /// Bins for the total-achievement and total-player histograms (log-spaced).
    pub total_bins: usize,
    /// Bins for the completist and completed-fraction histograms (linear on [0, 1]).
    pub fraction_bins: usize,
    /// Markers for the popularity panels.
    pub popularity_markers: usize,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            window: 0.1,
            player_window: 10,
            max_players: 100,
            total_bins: 30,
            fraction_bins: 20,
            popularity_markers: 10,
        }
    }
}

pub const FIGURE_FILES: [&str; 11] = [
    "fig1a.tsv", "fig1b.tsv", "fig1c.tsv", "fig1d.tsv", "fig1e.tsv", "fig1f.tsv", "fig2c.tsv", "fig2d.tsv",
    "fig3a.tsv", "fig3b.tsv", "fig4.tsv",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Artifact {
    pub file: String,
    /// Data rows, header excluded.
    pub rows: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub games: usize,
    pub completed: usize,
    pub uncompleted: usize,
    pub options: ReportOptions,
    pub fits: BTreeMap<String, Option<FitReport>>,
    pub artifacts: Vec<Artifact>,
}

/// In-memory bundle: file name to contents, in [`FIGURE_FILES`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub files: Vec<(String, String)>,
    pub manifest: Manifest,
}

fn tsv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join("\t");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join("\t"));
        out.push('\n');
    }
    out
}

fn empty_hist() -> String {
    tsv(&["bin_center", "probability"], std::iter::empty())
}

fn histogram_tsv(values: &[f64], scheme: BinScheme, bins: usize, range: Option<(f64, f64)>) -> String {
    let h = match range {
        Some((lo, hi)) => distfit::histogram_in(values, scheme, bins, lo, hi),
        None => distfit::histogram(values, scheme, bins),
    };
    h.map(|h| h.to_tsv()).unwrap_or_else(|_| empty_hist())
}

fn fit_report(values: &[f64], variable: &str) -> Option<FitReport> {
    distfit::fit_family(values, Family::LogNormal)
        .ok()
        .map(|f| f.report(variable))
}

/// Builds the bundle in memory.
pub fn build(records: &[GameRecord], opts: &ReportOptions) -> Result<Bundle, ReportError> {
    if records.is_empty() {
        return Err(ReportError::EmptyDataset);
    }
    let profiles: Vec<GameProfile<f64>> = records
        .par_iter()
        .filter_map(|r| match GameProfile::from_record(r) {
            Ok(p) => Some(p),
            Err(e) => {
                log::warn!("skipping {}: {e}", r.id);
                None
            }
        })
        .collect();
    if profiles.is_empty() {
        return Err(ReportError::EmptyDataset);
    }
    let (completed, uncompleted): (Vec<_>, Vec<_>) = profiles
        .iter()
        .cloned()
        .partition(|p| p.metrics.class == CompletistClass::Completed);

    let n_values: Vec<f64> = profiles.iter().map(|p| p.metrics.achievements as f64).collect();
    let g_values: Vec<f64> = profiles.iter().map(|p| p.metrics.players as f64).collect();
    let f_values: Vec<f64> = completed.iter().map(|p| p.metrics.completists).collect();
    let u_values: Vec<f64> = uncompleted.iter().map(|p| p.metrics.completed_fraction).collect();

    let mut files = vec![
        histogram_tsv(&n_values, BinScheme::LogBins, opts.total_bins, None),
        histogram_tsv(&g_values, BinScheme::LogBins, opts.total_bins, None),
        histogram_tsv(&f_values, BinScheme::LinearBins, opts.fraction_bins, Some((0.0, 1.0))),
        histogram_tsv(&u_values, BinScheme::LinearBins, opts.fraction_bins, Some((0.0, 1.0))),
    ];

    for by in [ProfileVariable::Completists, ProfileVariable::CompletedFraction] {
        let prof = cohort::popularity_profile(&profiles, by, opts.popularity_markers);
        files.push(tsv(
            &["bin_center", "mean_players", "error"],
            prof.iter()
                .map(|p| vec![p.center.to_string(), p.mean_players.to_string(), p.error.to_string()]),
        ));
    }

    let fits: Vec<(CompletistClass, DecayFit<f64>)> = profiles
        .par_iter()
        .filter_map(|p| decay::fit_decay(&p.series).ok().map(|f| (p.metrics.class, f)))
        .collect();
    for (filter, drop_negative) in [(ClassFilter::Completed, false), (ClassFilter::Uncompleted, true)] {
        files.push(decay::ranking_tsv(&decay::rank_by_r2(&fits, filter, drop_negative)));
    }

    let (fig3a, fig3b) = cohort_tables(&completed, opts.window)?;
    files.push(fig3a);
    files.push(fig3b);
    files.push(alpha_u_table(&uncompleted, opts.player_window, opts.max_players));

    let files: Vec<(String, String)> = FIGURE_FILES.iter().map(|s| s.to_string()).zip(files).collect();
    let artifacts = files
        .iter()
        .map(|(name, body)| Artifact {
            file: name.clone(),
            rows: body.lines().count().saturating_sub(1),
            sha256: checksum(body.as_bytes()),
        })
        .collect();
    let mut fit_map = BTreeMap::new();
    fit_map.insert("achievements".to_string(), fit_report(&n_values, "achievements"));
    fit_map.insert("players".to_string(), fit_report(&g_values, "players"));
    Ok(Bundle {
        files,
        manifest: Manifest {
            games: profiles.len(),
            completed: completed.len(),
            uncompleted: uncompleted.len(),
            options: *opts,
            fits: fit_map,
            artifacts,
        },
    })
}

/// Cohort tables for Completed games: the mean series per window
/// (`fig3a`) and `alpha` against the window mean `F` (`fig3b`).
pub fn cohort_tables(completed: &[GameProfile<f64>], window: f64) -> Result<(String, String), ReportError> {
    let cohorts = cohort::group_by_completists(completed, window)?;
    let mut series_rows = Vec::new();
    let mut alpha_rows = Vec::new();
    for c in cohorts.iter().filter(|c| c.game_count > 0) {
        if let Some(s) = &c.mean_series {
            for i in 0..s.x.len() {
                series_rows.push(vec![
                    c.lo.to_string(),
                    c.hi.to_string(),
                    s.x[i].to_string(),
                    s.f[i].to_string(),
                    s.std[i].to_string(),
                ]);
            }
        }
        if let (Some(mf), Some(alpha)) = (c.mean_f, c.alpha) {
            alpha_rows.push(vec![
                mf.to_string(),
                alpha.to_string(),
                c.alpha_std.unwrap_or(0.0).to_string(),
                (-mf.ln()).to_string(),
            ]);
        }
    }
    Ok((
        tsv(&["window_lo", "window_hi", "x", "mean_f", "std_f"], series_rows),
        tsv(&["mean_F", "alpha", "std", "neg_ln_F"], alpha_rows),
    ))
}

/// Mean `alpha U` per player window for Uncompleted games (`fig4`).
pub fn alpha_u_table(uncompleted: &[GameProfile<f64>], player_window: u64, max_players: u64) -> String {
    let windows = cohort::alpha_u_relation(uncompleted, player_window, max_players);
    tsv(
        &["mean_G", "mean_alphaU", "std", "ln_G"],
        windows.iter().map(|w| {
            vec![
                w.mean_players.to_string(),
                w.mean_alpha_u.to_string(),
                w.std_alpha_u.to_string(),
                w.ln_players.to_string(),
            ]
        }),
    )
}

pub fn checksum(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes the bundle files and `manifest.json` into `out_dir`.
pub fn write(bundle: &Bundle, out_dir: &Path) -> Result<(), ReportError> {
    let io_err = |path: &Path| {
        let path = path.display().to_string();
        move |source| ReportError::Io { path, source }
    };
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    for (name, body) in &bundle.files {
        let path = out_dir.join(name);
        fs::write(&path, body).map_err(io_err(&path))?;
    }
    let path = out_dir.join("manifest.json");
    let mut json = serde_json::to_string_pretty(&bundle.manifest).expect("manifest serializes");
    json.push('\n');
    fs::write(&path, json).map_err(io_err(&path))
}

/// Builds and writes the bundle.
pub fn report(records: &[GameRecord], out_dir: &Path, opts: &ReportOptions) -> Result<Manifest, ReportError> {
    let bundle = build(records, opts)?;
    write(&bundle, out_dir)?;
    Ok(bundle.manifest)
}
