//! Regenerates the bundled UCR-style sample datasets under `data/`.
//!
//! Usage: cargo run -p softmsm --example gen_datasets -- [out_dir]

use std::path::PathBuf;

use softmsm::data::{synth_dataset, write_tabular, SynthKind};

fn main() {
    let out_dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("data"));
    std::fs::create_dir_all(&out_dir).expect("create output directory");

    let splits = [("TRAIN", 101u64), ("TEST", 202u64)];
    for (split, seed) in splits {
        let dataset =
            synth_dataset(SynthKind::TwoClass, 10, 60, 0.02, 8, seed).expect("generate dataset");
        let path = out_dir.join(format!("warped_shapes_{split}.tsv"));
        write_tabular(&dataset, &path).expect("write dataset");
        println!(
            "wrote {} ({} series, length {})",
            path.display(),
            dataset.n(),
            dataset.series_len()
        );
    }
}
