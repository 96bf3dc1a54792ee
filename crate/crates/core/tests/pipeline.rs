use std::f64::consts::PI;

use texlat::archive::FeatureArchive;
use texlat::eval::evaluate_model;
use texlat::hppca::fit_hierarchy;
use texlat::procedural::{corpus, grating, CLASSES};
use texlat::pss::PssExtractor;
use texlat::{Pyramid, PyramidParams, PssParams, SynthesisConfig};

fn energy(data: &[f64]) -> f64 {
    data.iter().map(|v| v * v).sum()
}

#[test]
fn sinusoid_lands_in_its_band() {
    let side = 64;
    let params = PyramidParams::new(4, 4);
    for scale in 0..4 {
        // radius pi / 2^(scale+1) is where scale `scale` has full gain
        let cycles = (side >> (scale + 2)) as f64;
        let img = grating(side, cycles, 0.0, 0.4).unwrap();
        let pyr = Pyramid::build(&img, params).unwrap();
        let total = energy(img.data());
        let in_scale = energy(pyr.reconstruct_scale(scale).unwrap().data());
        assert!(in_scale / total > 0.999, "scale {scale}: {:.4}", in_scale / total);
        let per_orient: Vec<f64> = (0..4)
            .map(|k| energy(pyr.reconstruct_band(scale, k).unwrap().data()))
            .collect();
        let best = per_orient.iter().cloned().fold(0.0, f64::max);
        assert_eq!(best, per_orient[0], "scale {scale}: {per_orient:?}");
    }
    let vertical = grating(side, 8.0, PI / 2.0, 0.0).unwrap();
    let pyr = Pyramid::build(&vertical, params).unwrap();
    let per_orient: Vec<f64> = (0..4)
        .map(|k| energy(pyr.reconstruct_band(1, k).unwrap().data()))
        .collect();
    assert!(per_orient[2] > per_orient[0] && per_orient[2] > per_orient[1] && per_orient[2] > per_orient[3]);
}

#[test]
fn evaluate_small_corpus() {
    let params = PssParams::new(2, 2, 3);
    let images = corpus(6, 32, 3).unwrap();
    let extractor = PssExtractor::new(32, params).unwrap();
    let mut archive = FeatureArchive::new(params).unwrap();
    for item in &images {
        archive.push(&item.class, &item.id, extractor.extract(&item.image).unwrap()).unwrap();
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("features.pssa");
    archive.save(&path).unwrap();
    let archive = FeatureArchive::load(&path).unwrap();
    assert_eq!(archive.len(), 24);

    let model = fit_hierarchy(&archive.vectors(), 0.9999, 5).unwrap();
    let cfg = SynthesisConfig {
        iterations: 5,
        side: 32,
        ..SynthesisConfig::default()
    };
    let subset: Vec<_> = images.iter().step_by(6).cloned().collect();
    let report = evaluate_model(&model, &subset, &cfg, 9).unwrap();
    assert_eq!(report.rows.len(), 4);
    let classes: Vec<String> = report.class_means().into_iter().map(|(c, _)| c).collect();
    assert_eq!(classes, CLASSES);
    for row in &report.rows {
        assert!(row.tss.is_finite() && row.tss <= 1.0 + 1e-12, "{row:?}");
        assert!(row.pss_error.is_finite() && row.final_distance.is_finite());
    }
    let again = evaluate_model(&model, &subset, &cfg, 9).unwrap();
    assert_eq!(again, report);
}
