//! Shape and content pins for the bundled sample datasets, plus the
//! prototype golden values derived from them.

use std::path::PathBuf;

use softmsm::averaging::{frechet_loss, OptimizerConfig};
use softmsm::data::{load_tabular, synth_dataset, z_normalized, SynthKind};
use softmsm::learning::{nearest_centroid_fit, AveragingConfig, AveragingMethod};
use softmsm::{Geometry, SoftParams};

fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

#[test]
fn bundled_files_have_the_expected_shape() {
    for name in ["warped_shapes_TRAIN.tsv", "warped_shapes_TEST.tsv"] {
        let d = load_tabular(&data_path(name), false).unwrap();
        assert_eq!(d.n(), 20, "{name}");
        assert_eq!(d.series_len(), 60, "{name}");
        assert_eq!(d.n_classes(), 2, "{name}");
        let counts: Vec<usize> = (0..2).map(|c| d.class_members(c).len()).collect();
        assert_eq!(counts, vec![10, 10], "{name}");
    }
}

#[test]
fn bundled_train_matches_its_generator() {
    // The bundled files are the generator's output for pinned seeds.
    let from_file = load_tabular(&data_path("warped_shapes_TRAIN.tsv"), false).unwrap();
    let regenerated = synth_dataset(SynthKind::TwoClass, 10, 60, 0.02, 8, 101).unwrap();
    assert_eq!(from_file.labels(), regenerated.labels());
    for (a, b) in from_file.data().iter().zip(regenerated.data().iter()) {
        for (va, vb) in a.values().iter().zip(b.values()) {
            assert!((va - vb).abs() < 1e-15);
        }
    }
}

#[test]
fn per_class_prototype_losses_are_pinned() {
    let dataset = z_normalized(&synth_dataset(SynthKind::TwoClass, 10, 60, 0.02, 8, 101).unwrap());
    let params = SoftParams::new(0.01, 1.0).unwrap();
    let averaging = AveragingConfig {
        method: AveragingMethod::Eba,
        geometry: Geometry::Msm,
        params,
        optimizer: OptimizerConfig {
            max_iters: 50,
            seed: 0,
            ..OptimizerConfig::default()
        },
    };
    let prototypes = nearest_centroid_fit(&dataset, &averaging).unwrap();
    let expected = [523.5318425221054, 673.4123378480148];
    for (class, pin) in expected.iter().enumerate() {
        let class_set = dataset
            .data()
            .subset(&dataset.class_members(class))
            .unwrap();
        let loss = frechet_loss(prototypes.get(class), &class_set, Geometry::Msm, 1.0).unwrap();
        assert!(
            (loss - pin).abs() <= 1e-6 * pin,
            "class {class}: {loss} vs {pin}"
        );
    }
}
