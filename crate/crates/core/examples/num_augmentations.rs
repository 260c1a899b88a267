//! Error after 5x versus 10x augmentation.
//!
//! Reduced grid by default; `--full` runs `configs/num_aug_news.toml` as is.
//!
//!     cargo run --release --example num_augmentations [-- --full]

use textaug::bench::{compare_num_augmentations, DatasetConfig, ExperimentConfig, RunOptions};

fn main() {
    let full = std::env::args().any(|a| a == "--full");
    let mut cfg = ExperimentConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/num_aug_news.toml")).unwrap();
    if !full {
        cfg.train_sizes = vec![1000];
        cfg.val_size = 3000;
        cfg.repeats = 2;
        cfg.model.epochs = 20;
        if let DatasetConfig::Synthetic { n_docs, .. } = &mut cfg.dataset {
            *n_docs = 5000;
        }
    }
    let opts = RunOptions { checkpoint_dir: None, jobs: None, progress: None };
    let (rows, _) = compare_num_augmentations(&cfg, &[1, 5, 10], &opts).unwrap();
    println!("{:<10} {:>6} {:>6} {:>8} {:>8}", "method", "train", "n_aug", "mean", "std");
    for r in &rows {
        println!("{:<10} {:>6} {:>6} {:>8.4} {:>8.4}", r.method.as_str(), r.train_size, r.n_aug, r.mean, r.std);
    }
}
