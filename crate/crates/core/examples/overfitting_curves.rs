//! Validation-loss curves of the embedding-average MLP with and without
//! mixup. Writes `curves.csv` with one column per arm.
//!
//! Default is a shortened run; `--full` uses `configs/overfitting_news.toml`
//! unchanged (about 11 minutes).
//!
//!     cargo run --release --example overfitting_curves [-- --full]

use textaug::bench::{run_experiment, DatasetConfig, ExperimentConfig, Method, RunOptions};

fn main() {
    let full = std::env::args().any(|a| a == "--full");
    let mut cfg = ExperimentConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/overfitting_news.toml")).unwrap();
    if !full {
        cfg.train_sizes = vec![3000];
        cfg.val_size = 3000;
        cfg.repeats = 1;
        cfg.model.epochs = 40;
        if let DatasetConfig::Synthetic { n_docs, .. } = &mut cfg.dataset {
            *n_docs = 6000;
        }
    }
    let result = run_experiment(&cfg, &RunOptions { checkpoint_dir: None, jobs: None, progress: None }).unwrap();
    let curve = |m: Method| result.cells.iter().find(|c| c.key.method == m).map(|c| c.log.clone()).unwrap();
    let (plain, mixed) = (curve(Method::None), curve(Method::Mixup));

    let path = std::env::temp_dir().join("curves.csv");
    let mut w = csv::Writer::from_path(&path).unwrap();
    w.write_record(["epoch", "val_loss_none", "val_loss_mixup"]).unwrap();
    for (a, b) in plain.epochs.iter().zip(&mixed.epochs) {
        w.write_record([a.epoch.to_string(), a.val_loss.to_string(), b.val_loss.to_string()]).unwrap();
    }
    w.flush().unwrap();

    for (name, log) in [("none", &plain), ("mixup", &mixed)] {
        println!(
            "{name:<6} min val loss {:.4}, final {:.4}, rise {:.4}",
            log.min_val_loss().unwrap(),
            log.last().unwrap().val_loss,
            log.val_loss_rise().unwrap()
        );
    }
    println!("curves in {}", path.display());
}
