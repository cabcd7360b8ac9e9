//! Benchmark configuration: a plain-text `key = value` file merged with
//! command-line overrides (flags win). `#` starts a comment; keys are
//! snake_case and documented in `antex benchmark --help`.

use std::path::{Path, PathBuf};

use antex::diffusion::{ConductionKind, DEFAULT_KAPPA, DEFAULT_LAMBDA};
use antex::gabor::{BankParams, Component};
use antex::operators::{DEFAULT_GAUSSIAN_SIGMA, DEFAULT_LOG_SIGMA};
use anyhow::{bail, Context};

use crate::parse::{self, DecomposerName};

/// Partially specified benchmark settings; `None` means "not given here".
#[derive(Debug, Default, Clone)]
pub struct BenchmarkSettings {
    pub manifest: Option<PathBuf>,
    pub root: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub t_values: Option<Vec<usize>>,
    pub components: Option<Vec<Component>>,
    pub knn: Option<Vec<usize>>,
    pub decomposers: Option<Vec<DecomposerName>>,
    pub seed: Option<u64>,
    pub folds: Option<usize>,
    pub normalize: Option<bool>,
    pub lambda: Option<f64>,
    pub kappa: Option<f64>,
    pub conduction: Option<ConductionKind>,
    pub gaussian_sigma: Option<f64>,
    pub log_sigma: Option<f64>,
    pub scales: Option<usize>,
    pub orientations: Option<usize>,
    pub low_freq: Option<f64>,
    pub high_freq: Option<f64>,
    pub write_reports: Option<bool>,
}

impl BenchmarkSettings {
    pub fn from_file(path: &Path) -> anyhow::Result<BenchmarkSettings> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg = BenchmarkSettings::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("{}:{}: expected key = value", path.display(), n + 1);
            };
            let (key, value) = (key.trim(), value.trim());
            cfg.set(key, value)
                .map_err(|e| anyhow::anyhow!("{}:{}: {e}", path.display(), n + 1))?;
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let float = |v: &str| v.parse::<f64>().map_err(|_| format!("bad number {v:?}"));
        let int = |v: &str| v.parse::<usize>().map_err(|_| format!("bad integer {v:?}"));
        match key {
            "manifest" => self.manifest = Some(PathBuf::from(value)),
            "root" => self.root = Some(PathBuf::from(value)),
            "out_dir" => self.out_dir = Some(PathBuf::from(value)),
            "t_values" => self.t_values = Some(parse::usize_list(value)?),
            "components" => self.components = Some(parse::component_list(value)?),
            "knn" => self.knn = Some(parse::usize_list(value)?),
            "decomposers" => self.decomposers = Some(parse::decomposer_list(value)?),
            "seed" => {
                self.seed = Some(value.parse().map_err(|_| format!("bad seed {value:?}"))?)
            }
            "folds" => self.folds = Some(int(value)?),
            "normalize" => self.normalize = Some(parse::boolean(value)?),
            "lambda" => self.lambda = Some(float(value)?),
            "kappa" => self.kappa = Some(float(value)?),
            "conduction" => self.conduction = Some(parse::conduction(value)?),
            "gaussian_sigma" => self.gaussian_sigma = Some(float(value)?),
            "log_sigma" => self.log_sigma = Some(float(value)?),
            "scales" => self.scales = Some(int(value)?),
            "orientations" => self.orientations = Some(int(value)?),
            "low_freq" => self.low_freq = Some(float(value)?),
            "high_freq" => self.high_freq = Some(float(value)?),
            "write_reports" => self.write_reports = Some(parse::boolean(value)?),
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    /// Overlays `other` on top of `self`; values in `other` win.
    pub fn overlay(mut self, other: BenchmarkSettings) -> BenchmarkSettings {
        macro_rules! take {
            ($($field:ident),+) => {
                $(if other.$field.is_some() { self.$field = other.$field; })+
            };
        }
        take!(
            manifest, root, out_dir, t_values, components, knn, decomposers, seed, folds,
            normalize, lambda, kappa, conduction, gaussian_sigma, log_sigma, scales,
            orientations, low_freq, high_freq, write_reports
        );
        self
    }

    /// Applies defaults and validates the required fields.
    pub fn finalize(self) -> anyhow::Result<ResolvedBenchmark> {
        let Some(manifest) = self.manifest else {
            bail!("a dataset manifest is required (--manifest or `manifest =` in the config)");
        };
        let root = self
            .root
            .or_else(|| manifest.parent().map(|p| p.to_path_buf()))
            .unwrap_or_else(|| PathBuf::from("."));
        let Some(out_dir) = self.out_dir else {
            bail!("an output directory is required (--out-dir or `out_dir =` in the config)");
        };
        Ok(ResolvedBenchmark {
            manifest,
            root,
            out_dir,
            t_values: self.t_values.unwrap_or_else(|| (1..=20).map(|i| i * 10).collect()),
            components: self.components.unwrap_or_else(|| {
                vec![Component::Original, Component::Cartoon, Component::Texture]
            }),
            knn: self.knn.unwrap_or_else(|| vec![3, 5, 7]),
            decomposers: self.decomposers.unwrap_or_else(|| {
                vec![
                    DecomposerName::PeronaMalik,
                    DecomposerName::Gaussian,
                    DecomposerName::Laplacian,
                    DecomposerName::Log,
                ]
            }),
            seed: self.seed.unwrap_or(0),
            folds: self.folds.unwrap_or(10),
            normalize: self.normalize.unwrap_or(true),
            lambda: self.lambda.unwrap_or(DEFAULT_LAMBDA),
            kappa: self.kappa.unwrap_or(DEFAULT_KAPPA),
            conduction: self.conduction.unwrap_or(ConductionKind::Exponential),
            gaussian_sigma: self.gaussian_sigma.unwrap_or(DEFAULT_GAUSSIAN_SIGMA),
            log_sigma: self.log_sigma.unwrap_or(DEFAULT_LOG_SIGMA),
            bank: BankParams {
                scales: self.scales.unwrap_or(5),
                orientations: self.orientations.unwrap_or(8),
                low_freq: self.low_freq.unwrap_or(0.05),
                high_freq: self.high_freq.unwrap_or(0.4),
            },
            write_reports: self.write_reports.unwrap_or(false),
        })
    }
}

/// Fully resolved benchmark run description.
#[derive(Debug, Clone)]
pub struct ResolvedBenchmark {
    pub manifest: PathBuf,
    pub root: PathBuf,
    pub out_dir: PathBuf,
    pub t_values: Vec<usize>,
    pub components: Vec<Component>,
    pub knn: Vec<usize>,
    pub decomposers: Vec<DecomposerName>,
    pub seed: u64,
    pub folds: usize,
    pub normalize: bool,
    pub lambda: f64,
    pub kappa: f64,
    pub conduction: ConductionKind,
    pub gaussian_sigma: f64,
    pub log_sigma: f64,
    pub bank: BankParams,
    pub write_reports: bool,
}
