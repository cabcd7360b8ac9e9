//! Dataset featurization: pick a component (f, u or v), produce it with the
//! configured decomposer, and extract Gabor energies for every sample.

use rayon::prelude::*;

use crate::classify::{FeatureTable, TableRow};
use crate::datasets::Dataset;
use crate::diffusion::{decompose, DiffusionParams};
use crate::error::{Error, Result};
use crate::gabor::{
    build_filter_bank, extract_features, BankParams, Component, ConvMethod, FeatureVector,
    PreparedBank,
};
use crate::img::GrayImage;
use crate::operators::{operator_decompose, OperatorKind};

/// How the cartoon/texture pair is produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decomposer {
    PeronaMalik(DiffusionParams),
    Operator { kind: OperatorKind, iterations: usize },
}

impl Decomposer {
    pub fn name(&self) -> &'static str {
        match self {
            Decomposer::PeronaMalik(_) => "perona_malik",
            Decomposer::Operator { kind, .. } => kind.name(),
        }
    }

    /// The scale parameter `t` this decomposer runs at.
    pub fn iterations(&self) -> usize {
        match self {
            Decomposer::PeronaMalik(p) => p.iterations(),
            Decomposer::Operator { iterations, .. } => *iterations,
        }
    }

    pub fn with_iterations(self, iterations: usize) -> Decomposer {
        match self {
            Decomposer::PeronaMalik(p) => Decomposer::PeronaMalik(p.with_iterations(iterations)),
            Decomposer::Operator { kind, .. } => Decomposer::Operator { kind, iterations },
        }
    }

    fn run(&self, image: &GrayImage) -> Result<(GrayImage, GrayImage)> {
        match self {
            Decomposer::PeronaMalik(params) => Ok(decompose(image, params)),
            Decomposer::Operator { kind, iterations } => {
                operator_decompose(image, *kind, *iterations)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub component: Component,
    pub decomposer: Decomposer,
    pub bank: BankParams,
}

/// One feature vector per dataset sample, labels carried through.
///
/// `Original` skips decomposition entirely; `Cartoon`/`Texture` run the
/// configured decomposer first. The texture component is filtered as-is
/// (signed, zero-mean) with no re-normalization. Rows keep dataset order.
pub fn featurize_dataset(ds: &Dataset, cfg: &PipelineConfig) -> Result<FeatureTable> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (width, height) = ds.dimensions().unwrap();
    for s in &ds.samples {
        if s.image.dimensions() != (width, height) {
            return Err(Error::DimensionMismatch(format!(
                "{} is {}x{}, expected {width}x{height}",
                s.sample_id,
                s.image.width(),
                s.image.height()
            )));
        }
    }
    let bank = build_filter_bank(&cfg.bank)?;
    let method = ConvMethod::auto_for(width, height);
    let prepared = match method {
        ConvMethod::Fft => Some(PreparedBank::new(&bank, width, height)?),
        ConvMethod::Direct => None,
    };
    let featurize = |image: &GrayImage| -> Result<FeatureVector> {
        match &prepared {
            Some(p) => p.extract(image),
            None => extract_features(image, &bank, ConvMethod::Direct),
        }
    };

    let rows: Result<Vec<TableRow>> = ds
        .samples
        .par_iter()
        .map(|sample| {
            let features = match cfg.component {
                Component::Original => featurize(&sample.image)?,
                Component::Cartoon => {
                    let (cartoon, _) = cfg.decomposer.run(&sample.image)?;
                    featurize(&cartoon)?
                }
                Component::Texture => {
                    let (_, texture) = cfg.decomposer.run(&sample.image)?;
                    featurize(&texture)?
                }
            };
            Ok(TableRow {
                sample_id: sample.sample_id.clone(),
                label: sample.label.clone(),
                features: features.tagged(cfg.component),
            })
        })
        .collect();
    Ok(FeatureTable { rows: rows? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{synth_dataset, SynthSpec};
    use crate::diffusion::ConductionKind;

    fn small_dataset() -> Dataset {
        synth_dataset(&SynthSpec::new(2, 3, 48, 20.0, 4.0, 77)).unwrap()
    }

    // 3 scales x 4 orientations fits 48px samples (largest kernel 35x35)
    fn small_bank() -> BankParams {
        BankParams {
            scales: 3,
            orientations: 4,
            low_freq: 0.1,
            high_freq: 0.4,
        }
    }

    fn pm(iterations: usize) -> Decomposer {
        Decomposer::PeronaMalik(
            DiffusionParams::new(0.25, 30.0, ConductionKind::Exponential, iterations).unwrap(),
        )
    }

    #[test]
    fn rows_follow_dataset_order() {
        let ds = small_dataset();
        let cfg = PipelineConfig {
            component: Component::Original,
            decomposer: pm(5),
            bank: small_bank(),
        };
        let table = featurize_dataset(&ds, &cfg).unwrap();
        assert_eq!(table.len(), ds.len());
        for (row, sample) in table.rows.iter().zip(&ds.samples) {
            assert_eq!(row.sample_id, sample.sample_id);
            assert_eq!(row.label, sample.label);
            assert_eq!(row.features.len(), 12);
            assert_eq!(row.features.source_tag, Component::Original);
        }
    }

    #[test]
    fn original_ignores_decomposer() {
        let ds = small_dataset();
        let mk = |decomposer| PipelineConfig {
            component: Component::Original,
            decomposer,
            bank: small_bank(),
        };
        let a = featurize_dataset(&ds, &mk(pm(50))).unwrap();
        let b = featurize_dataset(
            &ds,
            &mk(Decomposer::Operator {
                kind: OperatorKind::Laplacian,
                iterations: 3,
            }),
        )
        .unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert_eq!(x.features.energies, y.features.energies);
        }
    }

    #[test]
    fn zero_iterations_collapse() {
        let ds = small_dataset();
        let mk = |component| PipelineConfig {
            component,
            decomposer: pm(0),
            bank: small_bank(),
        };
        let f = featurize_dataset(&ds, &mk(Component::Original)).unwrap();
        let u = featurize_dataset(&ds, &mk(Component::Cartoon)).unwrap();
        let v = featurize_dataset(&ds, &mk(Component::Texture)).unwrap();
        for i in 0..ds.len() {
            assert_eq!(f.rows[i].features.energies, u.rows[i].features.energies);
            assert!(v.rows[i].features.energies.iter().all(|&e| e == 0.0));
        }
        assert_eq!(u.rows[0].features.source_tag, Component::Cartoon);
        assert_eq!(v.rows[0].features.source_tag, Component::Texture);
    }

    #[test]
    fn permutation_equivariance() {
        let mut ds = small_dataset();
        let cfg = PipelineConfig {
            component: Component::Texture,
            decomposer: pm(3),
            bank: small_bank(),
        };
        let base = featurize_dataset(&ds, &cfg).unwrap();
        ds.samples.reverse();
        let reversed = featurize_dataset(&ds, &cfg).unwrap();
        for (i, row) in reversed.rows.iter().enumerate() {
            let original = &base.rows[base.len() - 1 - i];
            assert_eq!(row.sample_id, original.sample_id);
            assert_eq!(row.features.energies, original.features.energies);
        }
    }

    #[test]
    fn determinism_across_runs() {
        let ds = small_dataset();
        let cfg = PipelineConfig {
            component: Component::Texture,
            decomposer: pm(4),
            bank: small_bank(),
        };
        let a = featurize_dataset(&ds, &cfg).unwrap();
        let b = featurize_dataset(&ds, &cfg).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            for (p, q) in x.features.energies.iter().zip(&y.features.energies) {
                assert_eq!(p.to_bits(), q.to_bits());
            }
        }
    }

    #[test]
    fn empty_dataset_is_an_error() {
        let ds = Dataset {
            samples: Vec::new(),
            provenance: Default::default(),
        };
        let cfg = PipelineConfig {
            component: Component::Original,
            decomposer: pm(1),
            bank: small_bank(),
        };
        assert!(matches!(
            featurize_dataset(&ds, &cfg),
            Err(Error::EmptyDataset)
        ));
    }
}
