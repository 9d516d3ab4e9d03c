use sarheight_core::eval::{stratified_report, EvalPair};
use sarheight_core::geometry::ProjectionFactor;
use sarheight_core::pipeline::{
    deduplicate, extract_samples, read_sample_set, split_loco, tile, write_sample_set, SampleSet,
};
use sarheight_core::regressor::{
    load_checkpoint, predict_heights, save_checkpoint, train, ModelConfig, Normalization, TrainHyper,
};
use sarheight_core::scene_sim::{generate_city, render_amplitude, Speckle};
use sarheight_core::{BuildingSample, SceneSpec, TrainState};

fn city(name: &str, seed: u64) -> Vec<BuildingSample> {
    let spec = SceneSpec {
        seed,
        extent_m: [250.0, 250.0],
        n_buildings: 30,
        min_spacing_m: 15.0,
        speckle: Speckle::SingleLook,
        ..SceneSpec::default()
    };
    let fps = generate_city(&spec).unwrap();
    let amp = render_amplitude(&fps, &spec).unwrap();
    let mut all = Vec::new();
    for p in tile(&amp, 64, 0.2).unwrap() {
        let ex = extract_samples(&amp, &p, &fps, &spec.geom, ProjectionFactor::Cos, name, 24).unwrap();
        all.extend(ex.samples);
    }
    let samples = deduplicate(all);
    assert!(samples.len() >= 25, "{name}: {} samples", samples.len());
    assert!(samples.len() <= 30);
    samples
}

#[test]
fn simulate_train_predict_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let mut samples = city("north", 1);
    samples.extend(city("south", 2));

    // Sample sets survive a disk round trip.
    let stem = dir.path().join("north");
    let north = SampleSet {
        city_id: "north".into(),
        chip_px: 24,
        projection_factor: ProjectionFactor::Cos,
        config_hash: None,
        samples: samples.iter().filter(|s| s.city_id == "north").cloned().collect(),
    };
    write_sample_set(&stem, &north).unwrap();
    assert_eq!(read_sample_set(&stem).unwrap(), north);

    let (train_set, test_set) = split_loco(&samples, "south").unwrap();
    let config = ModelConfig {
        chip_px: 24,
        normalization: Some(Normalization::fit(&train_set).unwrap()),
        ..ModelConfig::default()
    };
    let mut state = TrainState::new(config).unwrap();
    let hyper = TrainHyper { epochs: 4, batch_size: 8, ..TrainHyper::default() };
    train(&mut state, &train_set, &hyper).unwrap();
    assert_eq!(state.loss_history.len() as u64, state.step);
    assert!(state.loss_history.iter().all(|l| l.is_finite()));

    let ckpt = dir.path().join("model");
    save_checkpoint(&ckpt, &state, None).unwrap();
    let restored = load_checkpoint(&ckpt).unwrap().0;

    let preds = predict_heights(&restored, &test_set, ProjectionFactor::Cos).unwrap();
    assert_eq!(preds, predict_heights(&state, &test_set, ProjectionFactor::Cos).unwrap());
    let pairs: Vec<EvalPair> = test_set
        .iter()
        .zip(&preds)
        .map(|(s, p)| EvalPair::new(&s.building_id, &s.city_id, s.ref_height_m, p.height_m).unwrap())
        .collect();
    let report = stratified_report("south", &pairs, 40.0);
    assert_eq!(report.all.n, test_set.len());
    assert!(report.all.rmse.unwrap() >= report.all.mae.unwrap());
}
