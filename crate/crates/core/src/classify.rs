//! KNN classification with Euclidean distance and stratified k-fold
//! cross-validation.
//!
//! Everything here is deterministic: folds come from a seeded shuffle, and
//! ties are broken by a fixed chain (smaller sample index for equal
//! distances; for split votes the tied class with the nearest single
//! neighbor, then the lexicographically smaller class name).

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gabor::FeatureVector;

#[derive(Debug, Clone)]
pub struct TableRow {
    pub sample_id: String,
    pub label: String,
    pub features: FeatureVector,
}

/// Labeled feature vectors, one row per sample.
#[derive(Debug, Clone, Default)]
pub struct FeatureTable {
    pub rows: Vec<TableRow>,
}

impl FeatureTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Writes the CSV form: `sample_id,label,source_tag,E11,...` with one
    /// column per (scale, orientation) energy, printed as shortest
    /// round-trip decimals.
    pub fn write_csv(
        &self,
        scales: usize,
        orientations: usize,
        w: &mut dyn Write,
    ) -> std::io::Result<()> {
        write!(w, "sample_id,label,source_tag")?;
        for m in 1..=scales {
            for n in 1..=orientations {
                write!(w, ",E{m}{n}")?;
            }
        }
        writeln!(w)?;
        for row in &self.rows {
            debug_assert_eq!(row.features.len(), scales * orientations);
            write!(w, "{},{},{}", row.sample_id, row.label, row.features.source_tag)?;
            for e in &row.features.energies {
                write!(w, ",{e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Cross-validation settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvConfig {
    pub folds: usize,
    pub k_nn: usize,
    pub seed: u64,
    /// z-score each feature dimension with training-fold statistics.
    pub normalize: bool,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            folds: 10,
            k_nn: 5,
            seed: 0,
            normalize: true,
        }
    }
}

/// Majority label among the `k_nn` nearest training rows.
///
/// Distances are compared squared (same ordering as Euclidean). Equal
/// distances rank by smaller sample index; vote ties go to the tied class
/// with the nearest single neighbor, then to the lexicographically smaller
/// class name.
pub fn knn_predict<'a>(train: &'a FeatureTable, query: &[f64], k_nn: usize) -> Result<&'a str> {
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if k_nn == 0 || k_nn > train.len() {
        return Err(Error::KTooLarge {
            k: k_nn,
            n: train.len(),
        });
    }
    let mut dists: Vec<(f64, usize)> = train
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| (squared_distance(&row.features.energies, query), i))
        .collect();
    dists.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let neighbors = &dists[..k_nn];

    // (count, nearest distance) per class among the k neighbors.
    let mut votes: BTreeMap<&str, (usize, f64)> = BTreeMap::new();
    for &(d, i) in neighbors {
        let entry = votes
            .entry(train.rows[i].label.as_str())
            .or_insert((0, f64::INFINITY));
        entry.0 += 1;
        if d < entry.1 {
            entry.1 = d;
        }
    }
    // BTreeMap iterates labels in lexicographic order, so strict comparisons
    // resolve every remaining tie toward the smaller name.
    let mut best: Option<(&str, usize, f64)> = None;
    for (label, &(count, nearest)) in &votes {
        let better = match best {
            None => true,
            Some((_, bc, bn)) => count > bc || (count == bc && nearest < bn),
        };
        if better {
            best = Some((label, count, nearest));
        }
    }
    Ok(best.unwrap().0)
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Per-fold accuracies plus a confusion matrix summed over folds.
#[derive(Debug, Clone)]
pub struct CvReport {
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    /// Class names, sorted; rows of `confusion` are true classes, columns
    /// predictions.
    pub labels: Vec<String>,
    pub confusion: Vec<Vec<usize>>,
    pub total: usize,
}

impl CvReport {
    pub fn correct(&self) -> usize {
        (0..self.labels.len()).map(|i| self.confusion[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        self.correct() as f64 / self.total as f64
    }

    /// Per-fold rows followed by `mean` and `std` summary rows.
    pub fn write_csv(&self, w: &mut dyn Write) -> std::io::Result<()> {
        writeln!(w, "fold,accuracy")?;
        for (i, acc) in self.fold_accuracies.iter().enumerate() {
            writeln!(w, "{},{acc}", i + 1)?;
        }
        writeln!(w, "mean,{}", self.mean_accuracy)?;
        writeln!(w, "std,{}", self.std_accuracy)
    }

    /// Square matrix with true classes as rows and predictions as columns.
    pub fn write_confusion_csv(&self, w: &mut dyn Write) -> std::io::Result<()> {
        write!(w, "true\\pred")?;
        for label in &self.labels {
            write!(w, ",{label}")?;
        }
        writeln!(w)?;
        for (label, row) in self.labels.iter().zip(&self.confusion) {
            write!(w, "{label}")?;
            for count in row {
                write!(w, ",{count}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Stratified k-fold cross-validation of a KNN classifier.
///
/// Folds are built by shuffling each class's rows with a seeded generator
/// and dealing them round-robin, so per-class counts across folds differ by
/// at most one. With `normalize`, dimensions are z-scored using statistics
/// of the training part only (zero-variance dimensions pass through).
pub fn cross_validate(table: &FeatureTable, cfg: &CvConfig) -> Result<CvReport> {
    if cfg.folds < 2 {
        return Err(Error::InvalidSpec(format!(
            "cross-validation needs >= 2 folds, got {}",
            cfg.folds
        )));
    }
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, row) in table.rows.iter().enumerate() {
        by_class.entry(row.label.as_str()).or_default().push(i);
    }
    if by_class.len() < 2 {
        return Err(Error::InvalidSpec(
            "classification needs >= 2 distinct labels".into(),
        ));
    }
    for (class, members) in &by_class {
        if members.len() < cfg.folds {
            return Err(Error::TooFewSamplesPerClass {
                class: class.to_string(),
                count: members.len(),
                folds: cfg.folds,
            });
        }
    }

    // Classes are visited in name order with one generator, so the
    // partition depends only on (table, seed).
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut fold_of = vec![0usize; table.len()];
    for members in by_class.values() {
        let mut shuffled = members.clone();
        shuffled.shuffle(&mut rng);
        for (pos, &row) in shuffled.iter().enumerate() {
            fold_of[row] = pos % cfg.folds;
        }
    }

    let labels: Vec<String> = by_class.keys().map(|s| s.to_string()).collect();
    let label_index: BTreeMap<&str, usize> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();

    let fold_results: Vec<Result<(f64, Vec<Vec<usize>>)>> = (0..cfg.folds)
        .into_par_iter()
        .map(|fold| evaluate_fold(table, cfg, &fold_of, fold, &labels, &label_index))
        .collect();

    let mut fold_accuracies = Vec::with_capacity(cfg.folds);
    let mut confusion = vec![vec![0usize; labels.len()]; labels.len()];
    for result in fold_results {
        let (acc, fold_confusion) = result?;
        fold_accuracies.push(acc);
        for (dst, src) in confusion.iter_mut().zip(&fold_confusion) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
    }
    let mean = fold_accuracies.iter().sum::<f64>() / fold_accuracies.len() as f64;
    let var = fold_accuracies
        .iter()
        .map(|a| (a - mean) * (a - mean))
        .sum::<f64>()
        / fold_accuracies.len() as f64;
    Ok(CvReport {
        fold_accuracies,
        mean_accuracy: mean,
        std_accuracy: var.sqrt(),
        labels,
        confusion,
        total: table.len(),
    })
}

fn evaluate_fold(
    table: &FeatureTable,
    cfg: &CvConfig,
    fold_of: &[usize],
    fold: usize,
    labels: &[String],
    label_index: &BTreeMap<&str, usize>,
) -> Result<(f64, Vec<Vec<usize>>)> {
    let dims = table.rows[0].features.len();
    let train_rows: Vec<usize> = (0..table.len()).filter(|&i| fold_of[i] != fold).collect();
    let test_rows: Vec<usize> = (0..table.len()).filter(|&i| fold_of[i] == fold).collect();

    // Training-fold statistics for z-scoring.
    let (mean, std) = if cfg.normalize {
        let mut mean = vec![0.0; dims];
        for &i in &train_rows {
            for (m, e) in mean.iter_mut().zip(&table.rows[i].features.energies) {
                *m += e;
            }
        }
        for m in &mut mean {
            *m /= train_rows.len() as f64;
        }
        let mut var = vec![0.0; dims];
        for &i in &train_rows {
            for d in 0..dims {
                let delta = table.rows[i].features.energies[d] - mean[d];
                var[d] += delta * delta;
            }
        }
        let std: Vec<f64> = var
            .iter()
            .map(|v| (v / train_rows.len() as f64).sqrt())
            .collect();
        (mean, std)
    } else {
        (vec![0.0; dims], vec![1.0; dims])
    };
    let scale_row = |row: &[f64]| -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(d, &v)| {
                if std[d] > 0.0 {
                    (v - mean[d]) / std[d]
                } else {
                    v
                }
            })
            .collect()
    };

    let train = FeatureTable {
        rows: train_rows
            .iter()
            .map(|&i| {
                let row = &table.rows[i];
                TableRow {
                    sample_id: row.sample_id.clone(),
                    label: row.label.clone(),
                    features: FeatureVector {
                        energies: scale_row(&row.features.energies),
                        source_tag: row.features.source_tag,
                    },
                }
            })
            .collect(),
    };

    let mut confusion = vec![vec![0usize; labels.len()]; labels.len()];
    let mut correct = 0usize;
    for &i in &test_rows {
        let query = scale_row(&table.rows[i].features.energies);
        let predicted = knn_predict(&train, &query, cfg.k_nn)?;
        let truth = table.rows[i].label.as_str();
        confusion[label_index[truth]][label_index[predicted]] += 1;
        if predicted == truth {
            correct += 1;
        }
    }
    Ok((correct as f64 / test_rows.len() as f64, confusion))
}
