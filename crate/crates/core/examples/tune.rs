use antex::classify::{cross_validate, CvConfig};
use antex::datasets::{synth_dataset, Carrier, SynthSpec};
use antex::diffusion::{ConductionKind, DiffusionParams};
use antex::gabor::{BankParams, Component};
use antex::pipeline::{featurize_dataset, Decomposer, PipelineConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let ramp: f64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(50.0);
    let noise: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(8.0);
    let kappa: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(45.0);
    let seed: u64 = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(7);
    let spacing_deg: f64 = args.get(5).map(|s| s.parse().unwrap()).unwrap_or(18.0);
    let freq: f64 = args.get(6).map(|s| s.parse().unwrap()).unwrap_or(0.18);
    let amp: f64 = args.get(7).map(|s| s.parse().unwrap()).unwrap_or(40.0);

    let mut spec = SynthSpec::new(5, 20, 128, ramp, noise, seed);
    spec.carriers = (0..5)
        .map(|c| Carrier {
            frequency: freq,
            orientation: (c as f64) * spacing_deg.to_radians(),
            amplitude: amp,
        })
        .collect();
    let ds = synth_dataset(&spec).unwrap();
    let bank = BankParams::default();
    let cv = |table: &antex::classify::FeatureTable, k: usize| {
        cross_validate(table, &CvConfig { folds: 10, k_nn: k, seed: 0, normalize: true }).unwrap().mean_accuracy
    };
    let feat = |component: Component, t: usize| {
        let cfg = PipelineConfig {
            component,
            decomposer: Decomposer::PeronaMalik(
                DiffusionParams::new(0.25, kappa, ConductionKind::Exponential, t).unwrap(),
            ),
            bank,
        };
        featurize_dataset(&ds, &cfg).unwrap()
    };
    println!("ramp={ramp} noise={noise} kappa={kappa} seed={seed} spacing={spacing_deg}deg freq={freq} amp={amp}");
    let f_table = feat(Component::Original, 0);
    for k in [3usize, 5, 7] {
        print!("  f    k={k}: {:.4}", cv(&f_table, k));
    }
    println!();
    for t in [10usize, 20, 40, 70, 100] {
        let v_table = feat(Component::Texture, t);
        print!("  v t={t:3}");
        for k in [3usize, 5, 7] {
            print!("  k={k}: {:.4}", cv(&v_table, k));
        }
        println!();
    }
}
