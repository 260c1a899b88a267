//! Augmentation versus the 6x-duplicated control at two training sizes.
//!
//! Runs a reduced version of `configs/less_data_news.toml`; pass `--full`
//! for the whole grid (about 10 minutes on one core).
//!
//!     cargo run --release --example less_data [-- --full] [out_dir]

use std::path::PathBuf;

use textaug::bench::{emit_results, run_experiment, DatasetConfig, ExperimentConfig, RunOptions};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let full = args.iter().any(|a| a == "--full");
    let out = args.iter().find(|a| !a.starts_with("--")).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("less_data"));

    let mut cfg = ExperimentConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/less_data_news.toml")).unwrap();
    if !full {
        cfg.train_sizes = vec![500, 2000];
        cfg.val_size = 3000;
        cfg.repeats = 2;
        cfg.model.epochs = 20;
        if let DatasetConfig::Synthetic { n_docs, .. } = &mut cfg.dataset {
            *n_docs = 6000;
        }
    }
    let opts = RunOptions {
        checkpoint_dir: Some(out.join("checkpoints")),
        jobs: None,
        progress: Some(Box::new(|c, _| eprintln!("{}: {:.4}", c.key, c.final_val_error.unwrap_or(f64::NAN)))),
    };
    let result = run_experiment(&cfg, &opts).unwrap();
    emit_results(&result, &out).unwrap();

    println!("{:<10} {:>6} {:>8} {:>8} {:>10}", "method", "train", "mean", "std", "reference");
    for a in &result.aggregates {
        let reference = a.reference.map(|r| format!("{r:.4}")).unwrap_or_default();
        println!("{:<10} {:>6} {:>8.4} {:>8.4} {:>10}", a.method.as_str(), a.train_size, a.mean, a.std, reference);
    }
    println!("results in {}", out.display());
}
