//! `antex benchmark`: run the full (decomposer, t, component, k) grid on a
//! dataset and emit the three CSV reports.
//!
//! Output files (all written atomically, byte-stable for a fixed config
//! and seed):
//!
//! * `accuracy_vs_t.csv` — columns `t,component,k_nn,mean,std,decomposer`;
//!   one row per grid cell, |t| x |components| x |k| rows per decomposer.
//! * `components.csv` — columns `component,k_nn,t,mean,std` at each
//!   component's best t for the reference decomposer, plus `v-f` delta rows
//!   (their `t` and `std` fields are empty).
//! * `operators.csv` — columns `decomposer,k_nn,t,mean,std`: the texture
//!   (v) pipeline of every decomposer at its best t.
//! * `best_texture_report.csv` / `best_texture_confusion.csv` — per-fold
//!   accuracies (`fold,accuracy` rows, then `mean`/`std` summary rows) and
//!   the summed confusion matrix (true classes in rows, predictions in
//!   columns) of the best texture cell.
//! * `benchmark.run.json` — config echo, dataset stats, timestamp, and any
//!   per-cell failures.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use antex::classify::{cross_validate, CvConfig, CvReport, FeatureTable};
use antex::datasets::{ingest, Dataset, Manifest};
use antex::gabor::Component;
use antex::pipeline::{featurize_dataset, PipelineConfig};
use anyhow::Context;
use clap::Args;
use serde::Serialize;

use crate::config::{BenchmarkSettings, ResolvedBenchmark};
use crate::features::{build_decomposer, conduction_name, BankEcho};
use crate::outio::{unix_now, write_atomic};
use crate::parse::{self, DecomposerName};

#[derive(Args, Debug)]
pub struct BenchmarkArgs {
    /// Plain-text `key = value` config file; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Dataset manifest (v1 text format).
    #[arg(long, short = 'm')]
    pub manifest: Option<PathBuf>,

    /// Directory the manifest paths are relative to (default: the
    /// manifest's own directory).
    #[arg(long)]
    pub root: Option<PathBuf>,

    /// Report directory (created if missing).
    #[arg(long, short = 'o')]
    pub out_dir: Option<PathBuf>,

    /// Decomposition scales, e.g. "10..200:10" (default) or "10,40".
    #[arg(long)]
    pub t_values: Option<String>,

    /// Components to evaluate, subset of "f,u,v" (default all).
    #[arg(long)]
    pub components: Option<String>,

    /// Neighbor counts for KNN, e.g. "3,5,7" (default).
    #[arg(long)]
    pub knn: Option<String>,

    /// Decomposers to compare, subset of
    /// "perona_malik,gaussian,laplacian,log" (default all).
    #[arg(long)]
    pub decomposers: Option<String>,

    /// Seed for fold shuffling.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Cross-validation folds.
    #[arg(long)]
    pub folds: Option<usize>,

    /// z-score features with training-fold statistics: true | false.
    #[arg(long)]
    pub normalize: Option<String>,

    #[arg(long)]
    pub lambda: Option<f64>,

    #[arg(long)]
    pub kappa: Option<f64>,

    /// Conduction function: exponential | rational.
    #[arg(long)]
    pub conduction: Option<String>,

    #[arg(long)]
    pub gaussian_sigma: Option<f64>,

    #[arg(long)]
    pub log_sigma: Option<f64>,

    #[arg(long)]
    pub scales: Option<usize>,

    #[arg(long)]
    pub orientations: Option<usize>,

    #[arg(long)]
    pub low_freq: Option<f64>,

    #[arg(long)]
    pub high_freq: Option<f64>,

    /// Also write per-cell fold and confusion CSVs under `reports/`.
    #[arg(long)]
    pub write_reports: bool,
}

impl BenchmarkArgs {
    fn to_settings(&self) -> anyhow::Result<BenchmarkSettings> {
        let parse_opt = |v: &Option<String>,
                         f: fn(&str) -> Result<Vec<usize>, String>|
         -> anyhow::Result<Option<Vec<usize>>> {
            v.as_deref().map(f).transpose().map_err(anyhow::Error::msg)
        };
        Ok(BenchmarkSettings {
            manifest: self.manifest.clone(),
            root: self.root.clone(),
            out_dir: self.out_dir.clone(),
            t_values: parse_opt(&self.t_values, parse::usize_list)?,
            components: self
                .components
                .as_deref()
                .map(parse::component_list)
                .transpose()
                .map_err(anyhow::Error::msg)?,
            knn: parse_opt(&self.knn, parse::usize_list)?,
            decomposers: self
                .decomposers
                .as_deref()
                .map(parse::decomposer_list)
                .transpose()
                .map_err(anyhow::Error::msg)?,
            seed: self.seed,
            folds: self.folds,
            normalize: self
                .normalize
                .as_deref()
                .map(parse::boolean)
                .transpose()
                .map_err(anyhow::Error::msg)?,
            lambda: self.lambda,
            kappa: self.kappa,
            conduction: self
                .conduction
                .as_deref()
                .map(parse::conduction)
                .transpose()
                .map_err(anyhow::Error::msg)?,
            gaussian_sigma: self.gaussian_sigma,
            log_sigma: self.log_sigma,
            scales: self.scales,
            orientations: self.orientations,
            low_freq: self.low_freq,
            high_freq: self.high_freq,
            write_reports: self.write_reports.then_some(true),
        })
    }
}

#[derive(Debug, Clone)]
struct CellRow {
    decomposer: &'static str,
    t: usize,
    component: Component,
    k: usize,
    mean: f64,
    std: f64,
}

pub fn run(args: BenchmarkArgs) -> anyhow::Result<i32> {
    let base = match &args.config {
        Some(path) => BenchmarkSettings::from_file(path)?,
        None => BenchmarkSettings::default(),
    };
    let cfg = base.overlay(args.to_settings()?).finalize()?;
    let manifest = Manifest::load(&cfg.manifest)?;
    let dataset = ingest(&manifest, &cfg.root)?;
    run_grid(&cfg, &dataset)
}

fn run_grid(cfg: &ResolvedBenchmark, dataset: &Dataset) -> anyhow::Result<i32> {
    std::fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    let reports_dir = cfg.out_dir.join("reports");
    if cfg.write_reports {
        std::fs::create_dir_all(&reports_dir)?;
    }

    let mut rows: Vec<CellRow> = Vec::new();
    let mut failures: Vec<String> = Vec::new();
    // best texture cell of the reference decomposer, for headline reports
    let reference = if cfg.decomposers.contains(&DecomposerName::PeronaMalik) {
        DecomposerName::PeronaMalik
    } else {
        cfg.decomposers[0]
    };
    let mut best_texture: Option<(f64, usize, usize, CvReport)> = None;

    // The original component never depends on (decomposer, t): featurize
    // and cross-validate it once, then reuse the numbers in every slot.
    let mut f_results: HashMap<usize, (f64, f64)> = HashMap::new();
    if cfg.components.contains(&Component::Original) {
        match featurize(cfg, dataset, Component::Original, reference, 0) {
            Err(e) => failures.push(format!("component f: {e}")),
            Ok(table) => {
                for &k in &cfg.knn {
                    match cv(cfg, &table, k) {
                        Ok(report) => {
                            f_results
                                .insert(k, (report.mean_accuracy, report.std_accuracy));
                            maybe_write_cell_reports(
                                cfg,
                                &reports_dir,
                                "any",
                                0,
                                Component::Original,
                                k,
                                &report,
                            )?;
                        }
                        Err(e) => failures.push(format!("component f, k={k}: {e}")),
                    }
                }
            }
        }
    }

    for &dec in &cfg.decomposers {
        // Laplacian and LoG responses are t-independent for t >= 1; cache
        // their tables instead of re-decomposing.
        let mut op_cache: HashMap<(Component, usize), FeatureTable> = HashMap::new();
        for &t in &cfg.t_values {
            for &comp in &cfg.components {
                if comp == Component::Original {
                    for &k in &cfg.knn {
                        if let Some(&(mean, std)) = f_results.get(&k) {
                            rows.push(CellRow {
                                decomposer: dec.as_str(),
                                t,
                                component: comp,
                                k,
                                mean,
                                std,
                            });
                        }
                    }
                    continue;
                }
                let cache_t = match dec {
                    DecomposerName::Laplacian | DecomposerName::Log => t.min(1),
                    _ => t,
                };
                let table = match op_cache.get(&(comp, cache_t)) {
                    Some(table) => table.clone(),
                    None => match featurize(cfg, dataset, comp, dec, cache_t) {
                        Ok(table) => {
                            if matches!(dec, DecomposerName::Laplacian | DecomposerName::Log) {
                                op_cache.insert((comp, cache_t), table.clone());
                            }
                            table
                        }
                        Err(e) => {
                            failures.push(format!("{} t={t} {comp}: {e}", dec.as_str()));
                            continue;
                        }
                    },
                };
                for &k in &cfg.knn {
                    match cv(cfg, &table, k) {
                        Ok(report) => {
                            rows.push(CellRow {
                                decomposer: dec.as_str(),
                                t,
                                component: comp,
                                k,
                                mean: report.mean_accuracy,
                                std: report.std_accuracy,
                            });
                            if comp == Component::Texture && dec == reference {
                                let better = best_texture
                                    .as_ref()
                                    .map(|(m, ..)| report.mean_accuracy > *m)
                                    .unwrap_or(true);
                                if better {
                                    best_texture =
                                        Some((report.mean_accuracy, t, k, report.clone()));
                                }
                            }
                            maybe_write_cell_reports(
                                cfg,
                                &reports_dir,
                                dec.as_str(),
                                t,
                                comp,
                                k,
                                &report,
                            )?;
                        }
                        Err(e) => {
                            failures.push(format!("{} t={t} {comp} k={k}: {e}", dec.as_str()))
                        }
                    }
                }
            }
            println!("{} t={t}: done", dec.as_str());
        }
    }

    write_accuracy_vs_t(cfg, &rows)?;
    write_components(cfg, &rows, reference)?;
    write_operators(cfg, &rows)?;
    if let Some((_, t, k, report)) = &best_texture {
        let mut buf = Vec::new();
        report.write_csv(&mut buf)?;
        write_atomic(&cfg.out_dir.join("best_texture_report.csv"), &buf)?;
        let mut buf = Vec::new();
        report.write_confusion_csv(&mut buf)?;
        write_atomic(&cfg.out_dir.join("best_texture_confusion.csv"), &buf)?;
        println!(
            "best texture cell: {} t={t} k={k} accuracy {:.4}",
            reference.as_str(),
            report.mean_accuracy
        );
    }
    write_run_manifest(cfg, dataset, &failures)?;

    if failures.is_empty() {
        Ok(0)
    } else {
        eprintln!("{} grid cell(s) failed:", failures.len());
        for f in &failures {
            eprintln!("  {f}");
        }
        eprintln!("partial results were written to {}", cfg.out_dir.display());
        Ok(3)
    }
}

fn featurize(
    cfg: &ResolvedBenchmark,
    dataset: &Dataset,
    component: Component,
    dec: DecomposerName,
    t: usize,
) -> anyhow::Result<FeatureTable> {
    let decomposer = build_decomposer(
        dec,
        t,
        cfg.lambda,
        cfg.kappa,
        cfg.conduction,
        cfg.gaussian_sigma,
        cfg.log_sigma,
    )?;
    Ok(featurize_dataset(
        dataset,
        &PipelineConfig {
            component,
            decomposer,
            bank: cfg.bank,
        },
    )?)
}

fn cv(cfg: &ResolvedBenchmark, table: &FeatureTable, k: usize) -> anyhow::Result<CvReport> {
    Ok(cross_validate(
        table,
        &CvConfig {
            folds: cfg.folds,
            k_nn: k,
            seed: cfg.seed,
            normalize: cfg.normalize,
        },
    )?)
}

fn maybe_write_cell_reports(
    cfg: &ResolvedBenchmark,
    reports_dir: &std::path::Path,
    dec: &str,
    t: usize,
    comp: Component,
    k: usize,
    report: &CvReport,
) -> anyhow::Result<()> {
    if !cfg.write_reports {
        return Ok(());
    }
    let stem = format!("{dec}_t{t}_{comp}_k{k}");
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    write_atomic(&reports_dir.join(format!("{stem}_folds.csv")), &buf)?;
    let mut buf = Vec::new();
    report.write_confusion_csv(&mut buf)?;
    write_atomic(&reports_dir.join(format!("{stem}_confusion.csv")), &buf)?;
    Ok(())
}

fn write_accuracy_vs_t(cfg: &ResolvedBenchmark, rows: &[CellRow]) -> anyhow::Result<()> {
    let mut text = String::from("t,component,k_nn,mean,std,decomposer\n");
    for row in rows {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{}",
            row.t, row.component, row.k, row.mean, row.std, row.decomposer
        );
    }
    write_atomic(&cfg.out_dir.join("accuracy_vs_t.csv"), text.as_bytes())
}

/// Best row (max mean, then smallest t) for one (decomposer, component, k).
fn best_cell<'a>(
    rows: &'a [CellRow],
    dec: &str,
    comp: Component,
    k: usize,
) -> Option<&'a CellRow> {
    rows.iter()
        .filter(|r| r.decomposer == dec && r.component == comp && r.k == k)
        .fold(None, |best: Option<&CellRow>, row| match best {
            None => Some(row),
            Some(b) if row.mean > b.mean || (row.mean == b.mean && row.t < b.t) => Some(row),
            Some(b) => Some(b),
        })
}

fn write_components(
    cfg: &ResolvedBenchmark,
    rows: &[CellRow],
    reference: DecomposerName,
) -> anyhow::Result<()> {
    let mut text = String::from("component,k_nn,t,mean,std\n");
    for &comp in &cfg.components {
        for &k in &cfg.knn {
            if let Some(row) = best_cell(rows, reference.as_str(), comp, k) {
                let _ = writeln!(
                    text,
                    "{},{},{},{},{}",
                    comp, k, row.t, row.mean, row.std
                );
            }
        }
    }
    if cfg.components.contains(&Component::Original)
        && cfg.components.contains(&Component::Texture)
    {
        for &k in &cfg.knn {
            let f = best_cell(rows, reference.as_str(), Component::Original, k);
            let v = best_cell(rows, reference.as_str(), Component::Texture, k);
            if let (Some(f), Some(v)) = (f, v) {
                let _ = writeln!(text, "v-f,{},,{},", k, v.mean - f.mean);
            }
        }
    }
    write_atomic(&cfg.out_dir.join("components.csv"), text.as_bytes())
}

fn write_operators(cfg: &ResolvedBenchmark, rows: &[CellRow]) -> anyhow::Result<()> {
    let mut text = String::from("decomposer,k_nn,t,mean,std\n");
    for &dec in &cfg.decomposers {
        for &k in &cfg.knn {
            if let Some(row) = best_cell(rows, dec.as_str(), Component::Texture, k) {
                let _ = writeln!(
                    text,
                    "{},{},{},{},{}",
                    dec.as_str(),
                    k,
                    row.t,
                    row.mean,
                    row.std
                );
            }
        }
    }
    write_atomic(&cfg.out_dir.join("operators.csv"), text.as_bytes())
}

#[derive(Serialize)]
struct RunManifest {
    command: &'static str,
    created_unix: u64,
    seed: u64,
    manifest: String,
    root: String,
    out_dir: String,
    samples: usize,
    classes: usize,
    width: usize,
    height: usize,
    t_values: Vec<usize>,
    components: Vec<String>,
    k_nn: Vec<usize>,
    decomposers: Vec<&'static str>,
    folds: usize,
    normalize: bool,
    lambda: f64,
    kappa: f64,
    conduction: &'static str,
    gaussian_sigma: f64,
    log_sigma: f64,
    bank: BankEcho,
    failures: Vec<String>,
}

fn write_run_manifest(
    cfg: &ResolvedBenchmark,
    dataset: &Dataset,
    failures: &[String],
) -> anyhow::Result<()> {
    let mut classes: Vec<&str> = dataset.samples.iter().map(|s| s.label.as_str()).collect();
    classes.sort_unstable();
    classes.dedup();
    let (width, height) = dataset.dimensions().unwrap_or((0, 0));
    let run = RunManifest {
        command: "benchmark",
        created_unix: unix_now(),
        seed: cfg.seed,
        manifest: cfg.manifest.display().to_string(),
        root: cfg.root.display().to_string(),
        out_dir: cfg.out_dir.display().to_string(),
        samples: dataset.len(),
        classes: classes.len(),
        width,
        height,
        t_values: cfg.t_values.clone(),
        components: cfg.components.iter().map(|c| c.to_string()).collect(),
        k_nn: cfg.knn.clone(),
        decomposers: cfg.decomposers.iter().map(|d| d.as_str()).collect(),
        folds: cfg.folds,
        normalize: cfg.normalize,
        lambda: cfg.lambda,
        kappa: cfg.kappa,
        conduction: conduction_name(cfg.conduction),
        gaussian_sigma: cfg.gaussian_sigma,
        log_sigma: cfg.log_sigma,
        bank: (&cfg.bank).into(),
        failures: failures.to_vec(),
    };
    write_atomic(
        &cfg.out_dir.join("benchmark.run.json"),
        &serde_json::to_vec_pretty(&run)?,
    )
}
