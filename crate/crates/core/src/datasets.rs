//! Dataset ingestion (manifest-driven tile splitting) and a procedural
//! synthetic texture generator for hermetic benchmarks.
//!
//! Manifest format, version "v1": one header line `v1`, then one entry per
//! line as `class_name<TAB>relative_path<TAB>SPLIT` where SPLIT is either
//! `ROWSxCOLS` or `none`. Blank lines and lines starting with `#` are
//! ignored. UTF-8 throughout.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::img::{self, GrayImage};

pub const MANIFEST_VERSION: &str = "v1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub class_name: String,
    pub path: PathBuf,
    /// Grid split as (rows, cols), or `None` for the whole image.
    pub split: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Manifest {
    pub format_version: String,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Manifest> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Manifest::parse(&text, path)
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Manifest> {
        let err = |line: usize, detail: String| Error::ManifestParse {
            path: origin.to_path_buf(),
            line,
            detail,
        };
        let mut lines = text.lines().enumerate();
        let version = loop {
            match lines.next() {
                None => return Err(err(0, "empty manifest".into())),
                Some((_, l)) if l.trim().is_empty() || l.trim_start().starts_with('#') => {}
                Some((n, l)) => {
                    let v = l.trim();
                    if v != MANIFEST_VERSION {
                        return Err(err(n + 1, format!("unsupported version {v:?}")));
                    }
                    break v.to_string();
                }
            }
        };
        let mut entries = Vec::new();
        for (n, line) in lines {
            let line_no = n + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(err(
                    line_no,
                    format!("expected 3 tab-separated fields, got {}", fields.len()),
                ));
            }
            let class_name = fields[0].trim().to_string();
            if class_name.is_empty() {
                return Err(err(line_no, "empty class name".into()));
            }
            let path = PathBuf::from(fields[1].trim());
            if path.as_os_str().is_empty() {
                return Err(err(line_no, "empty path".into()));
            }
            let split_field = fields[2].trim();
            let split = if split_field.eq_ignore_ascii_case("none") {
                None
            } else {
                let (r, c) = split_field
                    .split_once(['x', 'X'])
                    .ok_or_else(|| err(line_no, format!("bad split spec {split_field:?}")))?;
                let rows: usize = r
                    .parse()
                    .map_err(|_| err(line_no, format!("bad split rows {r:?}")))?;
                let cols: usize = c
                    .parse()
                    .map_err(|_| err(line_no, format!("bad split cols {c:?}")))?;
                if rows == 0 || cols == 0 {
                    return Err(err(line_no, "split grid must be at least 1x1".into()));
                }
                Some((rows, cols))
            };
            entries.push(ManifestEntry {
                class_name,
                path,
                split,
            });
        }
        let mut seen = std::collections::HashSet::new();
        for e in &entries {
            if !seen.insert(&e.path) {
                return Err(Error::ManifestParse {
                    path: origin.to_path_buf(),
                    line: 0,
                    detail: format!("duplicate path {}", e.path.display()),
                });
            }
        }
        Ok(Manifest {
            format_version: version,
            entries,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.format_version);
        for e in &self.entries {
            let split = match e.split {
                None => "none".to_string(),
                Some((r, c)) => format!("{r}x{c}"),
            };
            let _ = writeln!(out, "{}\t{}\t{split}", e.class_name, e.path.display());
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Sample {
    pub image: GrayImage,
    pub label: String,
    pub sample_id: String,
}

/// Uniformly sized labeled samples plus the manifest they came from.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub provenance: Manifest,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dimensions(&self) -> Option<(usize, usize)> {
        self.samples.first().map(|s| s.image.dimensions())
    }
}

/// Loads every manifest entry under `root`, applying its grid split.
///
/// Grid cells are cut with [`img::split_tiles`] using tile dimensions
/// `floor(width/cols) x floor(height/rows)`; sample ids follow
/// `<class>/<source-stem>#<row>_<col>`. Output order matches the manifest.
pub fn ingest(manifest: &Manifest, root: impl AsRef<Path>) -> Result<Dataset> {
    let root = root.as_ref();
    let loaded: Vec<std::result::Result<Vec<Sample>, String>> = manifest
        .entries
        .par_iter()
        .map(|entry| ingest_entry(entry, root).map_err(|e| format!("{}: {e}", entry.path.display())))
        .collect();

    let mut samples = Vec::new();
    let mut failures = Vec::new();
    for result in loaded {
        match result {
            Ok(batch) => samples.extend(batch),
            Err(msg) => failures.push(msg),
        }
    }
    if !failures.is_empty() {
        return Err(Error::IngestFailures(failures));
    }
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let dims = samples[0].image.dimensions();
    for s in &samples {
        if s.image.dimensions() != dims {
            return Err(Error::DimensionMismatch(format!(
                "{} is {}x{}, expected {}x{}",
                s.sample_id,
                s.image.width(),
                s.image.height(),
                dims.0,
                dims.1
            )));
        }
    }
    Ok(Dataset {
        samples,
        provenance: manifest.clone(),
    })
}

fn ingest_entry(entry: &ManifestEntry, root: &Path) -> Result<Vec<Sample>> {
    let path = root.join(&entry.path);
    let image = img::load_image(&path)?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".into());
    let label = &entry.class_name;
    match entry.split {
        None => Ok(vec![Sample {
            sample_id: format!("{label}/{stem}#0_0"),
            label: label.clone(),
            image,
        }]),
        Some((rows, cols)) => {
            let tile_w = image.width() / cols;
            let tile_h = image.height() / rows;
            if tile_w == 0 || tile_h == 0 {
                return Err(Error::TileTooLarge {
                    tile_w: cols,
                    tile_h: rows,
                    width: image.width(),
                    height: image.height(),
                });
            }
            let tiles = img::split_tiles(&image, tile_w, tile_h)?;
            let grid_cols = image.width() / tile_w;
            let mut out = Vec::with_capacity(rows * cols);
            for (i, tile) in tiles.into_iter().enumerate() {
                let (r, c) = (i / grid_cols, i % grid_cols);
                if r < rows && c < cols {
                    out.push(Sample {
                        sample_id: format!("{label}/{stem}#{r}_{c}"),
                        label: label.clone(),
                        image: tile,
                    });
                }
            }
            Ok(out)
        }
    }
}

/// One class's oriented sinusoidal carrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Carrier {
    /// Cycles per pixel.
    pub frequency: f64,
    /// Radians.
    pub orientation: f64,
    /// Intensity units around the 128 midpoint.
    pub amplitude: f64,
}

/// Recipe for a deterministic synthetic texture dataset. Each sample is
///
/// ```text
/// clamp(128 + A sin(2 pi f (x cos th + y sin th))
///           + s * ramp_amplitude * (u cos phi + v sin phi)   u, v in [-1, 1]
///           + noise_sigma * N(0, 1),
///       0, 255)
/// ```
///
/// with a fresh random ramp direction `phi` in [0, 2 pi) and strength
/// `s` in [0.2, 1] per sample. The ramps model per-sample illumination
/// drift (including sensor saturation where they push past the 8-bit
/// range): they corrupt features taken from the raw image while a
/// cartoon/texture split strips them away.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub classes: usize,
    pub samples_per_class: usize,
    pub size: usize,
    pub carriers: Vec<Carrier>,
    pub ramp_amplitude: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SynthSpec {
    /// Default carrier table: triples of classes share a frequency band and
    /// sit 18 degrees apart in orientation (less than one filter slot of
    /// the default 8-orientation bank), so neighboring classes are easy to
    /// confuse once illumination varies.
    pub fn new(
        classes: usize,
        samples_per_class: usize,
        size: usize,
        ramp_amplitude: f64,
        noise_sigma: f64,
        seed: u64,
    ) -> SynthSpec {
        let bands = [0.17, 0.22, 0.13];
        let carriers = (0..classes)
            .map(|c| Carrier {
                frequency: bands[(c / 3) % bands.len()],
                orientation: (c % 3) as f64 * std::f64::consts::PI / 10.0
                    + (c / 9) as f64 * std::f64::consts::PI / 30.0,
                amplitude: 40.0,
            })
            .collect();
        SynthSpec {
            classes,
            samples_per_class,
            size,
            carriers,
            ramp_amplitude,
            noise_sigma,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.classes == 0 || self.samples_per_class == 0 || self.size == 0 {
            return Err(Error::InvalidSpec(
                "classes, samples_per_class and size must be positive".into(),
            ));
        }
        if self.carriers.len() != self.classes {
            return Err(Error::InvalidSpec(format!(
                "{} carriers for {} classes",
                self.carriers.len(),
                self.classes
            )));
        }
        let finite = self.ramp_amplitude.is_finite()
            && self.noise_sigma.is_finite()
            && self.noise_sigma >= 0.0
            && self.ramp_amplitude >= 0.0
            && self
                .carriers
                .iter()
                .all(|c| c.frequency.is_finite() && c.orientation.is_finite() && c.amplitude.is_finite());
        if !finite {
            return Err(Error::InvalidSpec("non-finite or negative parameter".into()));
        }
        Ok(())
    }
}

/// Generates the dataset described by `spec`; bit-identical for equal specs.
pub fn synth_dataset(spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let size = spec.size;
    let half = (size.max(2) - 1) as f64 / 2.0;
    let mut samples = Vec::with_capacity(spec.classes * spec.samples_per_class);
    for (c, carrier) in spec.carriers.iter().enumerate() {
        let label = format!("class{c:02}");
        let (sin_t, cos_t) = carrier.orientation.sin_cos();
        let omega = 2.0 * std::f64::consts::PI * carrier.frequency;
        for i in 0..spec.samples_per_class {
            let phi = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
            let (sin_p, cos_p) = phi.sin_cos();
            let strength = rng.gen_range(0.2..=1.0) * spec.ramp_amplitude;
            let mut data = Vec::with_capacity(size * size);
            for y in 0..size {
                for x in 0..size {
                    let along = x as f64 * cos_t + y as f64 * sin_t;
                    let carrier_v = carrier.amplitude * (omega * along).sin();
                    let (u, v) = (x as f64 / half - 1.0, y as f64 / half - 1.0);
                    let ramp = strength * (u * cos_p + v * sin_p);
                    let noise = spec.noise_sigma * standard_normal(&mut rng);
                    data.push((128.0 + carrier_v + ramp + noise).clamp(0.0, 255.0));
                }
            }
            samples.push(Sample {
                image: GrayImage::new(size, size, data),
                label: label.clone(),
                sample_id: format!("{label}/{i:03}"),
            });
        }
    }
    Ok(Dataset {
        samples,
        provenance: Manifest {
            format_version: MANIFEST_VERSION.into(),
            entries: Vec::new(),
        },
    })
}

/// Box-Muller transform over the generator's uniforms.
fn standard_normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_gradient_pgm(path: &Path, w: usize, h: usize) {
        let image = GrayImage::from_fn(w, h, |x, y| ((x * 3 + y * 7) % 256) as f64);
        img::save_image(&image, path).unwrap();
    }

    #[test]
    fn manifest_round_trip() {
        let text = "v1\n# textures\nbark\timg/bark.pgm\t3x3\nsand\timg/sand.png\tnone\n";
        let m = Manifest::parse(text, Path::new("test.manifest")).unwrap();
        assert_eq!(m.format_version, "v1");
        assert_eq!(m.entries.len(), 2);
        assert_eq!(m.entries[0].split, Some((3, 3)));
        assert_eq!(m.entries[1].split, None);
        let again = Manifest::parse(&m.to_text(), Path::new("re")).unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn manifest_errors_carry_line_numbers() {
        let bad_version = Manifest::parse("v9\n", Path::new("m"));
        assert!(matches!(bad_version, Err(Error::ManifestParse { line: 1, .. })));
        let bad_fields = Manifest::parse("v1\nonly_one_field\n", Path::new("m"));
        assert!(matches!(bad_fields, Err(Error::ManifestParse { line: 2, .. })));
        let bad_split = Manifest::parse("v1\nc\tp.pgm\t3by3\n", Path::new("m"));
        assert!(matches!(bad_split, Err(Error::ManifestParse { line: 2, .. })));
        let dup = Manifest::parse("v1\na\tp.pgm\tnone\nb\tp.pgm\tnone\n", Path::new("m"));
        assert!(matches!(dup, Err(Error::ManifestParse { .. })));
    }

    #[test]
    fn ingest_split_grid() {
        let dir = tempfile::tempdir().unwrap();
        write_gradient_pgm(&dir.path().join("tex.pgm"), 512, 512);
        let manifest = Manifest::parse("v1\nbark\ttex.pgm\t4x4\n", Path::new("m")).unwrap();
        let ds = ingest(&manifest, dir.path()).unwrap();
        assert_eq!(ds.len(), 16);
        assert_eq!(ds.dimensions(), Some((128, 128)));
        assert_eq!(ds.samples[0].sample_id, "bark/tex#0_0");
        assert_eq!(ds.samples[15].sample_id, "bark/tex#3_3");
        assert!(ds.samples.iter().all(|s| s.label == "bark"));
    }

    #[test]
    fn ingest_passthrough_and_order() {
        let dir = tempfile::tempdir().unwrap();
        write_gradient_pgm(&dir.path().join("a.pgm"), 32, 32);
        write_gradient_pgm(&dir.path().join("b.pgm"), 32, 32);
        let manifest =
            Manifest::parse("v1\nzz\tb.pgm\tnone\naa\ta.pgm\tnone\n", Path::new("m")).unwrap();
        let ds = ingest(&manifest, dir.path()).unwrap();
        assert_eq!(ds.len(), 2);
        // manifest order, not alphabetical
        assert_eq!(ds.samples[0].sample_id, "zz/b#0_0");
        assert_eq!(ds.samples[1].sample_id, "aa/a#0_0");
    }

    #[test]
    fn ingest_many_sources() {
        let dir = tempfile::tempdir().unwrap();
        let mut text = String::from("v1\n");
        for i in 0..50 {
            let name = format!("t{i:02}.pgm");
            write_gradient_pgm(&dir.path().join(&name), 8, 8);
            text.push_str(&format!("c{i:02}\t{name}\t4x4\n"));
        }
        let manifest = Manifest::parse(&text, Path::new("m")).unwrap();
        let ds = ingest(&manifest, dir.path()).unwrap();
        assert_eq!(ds.len(), 800);
    }

    #[test]
    fn ingest_aggregates_missing_files() {
        let dir = tempfile::tempdir().unwrap();
        write_gradient_pgm(&dir.path().join("ok.pgm"), 16, 16);
        let manifest = Manifest::parse(
            "v1\na\tok.pgm\tnone\nb\tmissing1.pgm\tnone\nc\tmissing2.pgm\tnone\n",
            Path::new("m"),
        )
        .unwrap();
        match ingest(&manifest, dir.path()) {
            Err(Error::IngestFailures(failures)) => {
                assert_eq!(failures.len(), 2);
                assert!(failures[0].contains("missing1.pgm"));
            }
            other => panic!("expected IngestFailures, got {other:?}"),
        }
    }

    #[test]
    fn ingest_rejects_mixed_dimensions() {
        let dir = tempfile::tempdir().unwrap();
        write_gradient_pgm(&dir.path().join("a.pgm"), 16, 16);
        write_gradient_pgm(&dir.path().join("b.pgm"), 24, 24);
        let manifest =
            Manifest::parse("v1\na\ta.pgm\tnone\nb\tb.pgm\tnone\n", Path::new("m")).unwrap();
        assert!(matches!(
            ingest(&manifest, dir.path()),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn synth_is_deterministic_and_balanced() {
        let spec = SynthSpec::new(5, 10, 64, 30.0, 5.0, 1234);
        let a = synth_dataset(&spec).unwrap();
        let b = synth_dataset(&spec).unwrap();
        assert_eq!(a.len(), 50);
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert_eq!(x.sample_id, y.sample_id);
            assert_eq!(x.label, y.label);
            for (p, q) in x.image.pixels().iter().zip(y.image.pixels()) {
                assert_eq!(p.to_bits(), q.to_bits());
            }
        }
        for c in 0..5 {
            let label = format!("class{c:02}");
            assert_eq!(a.samples.iter().filter(|s| s.label == label).count(), 10);
        }
    }

    #[test]
    fn synth_without_randomness_is_the_closed_form() {
        let spec = SynthSpec::new(2, 1, 16, 0.0, 0.0, 9);
        let ds = synth_dataset(&spec).unwrap();
        let carrier = spec.carriers[0];
        let (sin_t, cos_t) = carrier.orientation.sin_cos();
        for y in 0..16 {
            for x in 0..16 {
                let along = x as f64 * cos_t + y as f64 * sin_t;
                let expect = (128.0
                    + carrier.amplitude
                        * (2.0 * std::f64::consts::PI * carrier.frequency * along).sin())
                .clamp(0.0, 255.0);
                assert_eq!(ds.samples[0].image.get(x, y), expect);
            }
        }
    }

    #[test]
    fn synth_range_and_validation() {
        let spec = SynthSpec::new(3, 4, 32, 120.0, 40.0, 5);
        let ds = synth_dataset(&spec).unwrap();
        for s in &ds.samples {
            for &v in s.image.pixels() {
                assert!((0.0..=255.0).contains(&v));
            }
        }
        let mut bad = SynthSpec::new(3, 4, 32, 1.0, 1.0, 5);
        bad.carriers.pop();
        assert!(matches!(synth_dataset(&bad), Err(Error::InvalidSpec(_))));
        assert!(matches!(
            synth_dataset(&SynthSpec::new(0, 4, 32, 1.0, 1.0, 5)),
            Err(Error::InvalidSpec(_))
        ));
    }
}
