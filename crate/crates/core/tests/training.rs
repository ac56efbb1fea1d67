use foresee_core::fusion::MergeMode;
use foresee_core::losses::global_mean_error;
use foresee_core::toytrain::{
    batch_loss_and_gradient, datasets, generate_scene, predict, train_step, Objective, Sample, ToyConfig, ToyModel,
};

fn small_config(height: usize, width: usize) -> ToyConfig {
    let mut cfg = ToyConfig::default();
    cfg.scene.height = height;
    cfg.scene.width = width;
    cfg.scene.object_size = (3, 5);
    cfg.scene.building_width = (3, 6);
    cfg.scene.max_objects = 2;
    cfg
}

#[test]
fn one_scene_overfits_in_200_steps() {
    let mut cfg = small_config(8, 12);
    cfg.model.features = 16;
    cfg.model.head_hidden = 32;
    cfg.model.head_kernel = 3;
    let spec = cfg.bin_spec().unwrap();
    let sample = Sample::new(generate_scene(&cfg.scene, 0).unwrap(), &spec).unwrap();
    let mut model = ToyModel::new(&cfg.model, 1).unwrap();
    for _ in 0..200 {
        train_step(&mut model, &[&sample], Objective::Global, 0.5).unwrap();
    }
    let logits = predict(&model, &sample.scene, MergeMode::Max).unwrap();
    let ce = global_mean_error(&logits, &sample.labels).unwrap();
    assert!(ce < 0.05, "global mean CE {ce} after 200 steps");
}

#[test]
fn end_to_end_gradient_matches_central_differences() {
    let mut cfg = small_config(8, 12);
    cfg.model.features = 4;
    cfg.model.head_hidden = 5;
    cfg.model.head_kernel = 3;
    cfg.bins.num_bins = 6;
    cfg.model.num_bins = 6;
    let spec = cfg.bin_spec().unwrap();
    let samples: Vec<Sample> =
        (0..2).map(|i| Sample::new(generate_scene(&cfg.scene, i).unwrap(), &spec).unwrap()).collect();
    let batch: Vec<&Sample> = samples.iter().collect();
    for objective in [
        Objective::Global,
        Objective::Separated(0.3),
        Objective::Branches { lambda_f: 0.2, lambda_b: 0.2 },
    ] {
        let model = ToyModel::new(&cfg.model, objective.num_heads()).unwrap();
        let (_, grad) = batch_loss_and_gradient(&model, &batch, objective).unwrap();
        let total = |m: &ToyModel| batch_loss_and_gradient(m, &batch, objective).unwrap().0.iter().sum::<f64>();
        let mut probe = model.clone();
        // every 7th parameter keeps the test quick while touching every layer
        let mut checked = 0;
        let mut flat = 0;
        for slice in 0..probe.params().len() {
            for e in 0..probe.params()[slice].len() {
                flat += 1;
                if flat % 7 != 0 {
                    continue;
                }
                let orig = probe.params()[slice][e];
                probe.params_mut()[slice][e] = orig + 1e-5;
                let up = total(&probe);
                probe.params_mut()[slice][e] = orig - 1e-5;
                let down = total(&probe);
                probe.params_mut()[slice][e] = orig;
                let numeric = (up - down) / 2e-5;
                let analytic = grad.params()[slice][e];
                let scale = analytic.abs().max(numeric.abs()).max(1e-4);
                assert!(
                    (analytic - numeric).abs() <= 1e-4 * scale,
                    "{objective:?} slice {slice} element {e}: {analytic} vs {numeric}"
                );
                checked += 1;
            }
        }
        assert!(checked > 40);
    }
}

#[test]
fn separated_loss_is_affine_in_lambda_on_a_frozen_model() {
    let mut cfg = small_config(12, 16);
    cfg.model.features = 4;
    cfg.model.head_hidden = 4;
    cfg.train.train_scenes = 3;
    let (train, _) = datasets(&cfg).unwrap();
    let batch: Vec<&Sample> = train.iter().collect();
    let mut model = ToyModel::new(&cfg.model, 1).unwrap();
    // a few steps so the check is not made at initialization only
    for _ in 0..3 {
        train_step(&mut model, &batch, Objective::Separated(0.5), 0.3).unwrap();
    }
    let loss = |l: f64| batch_loss_and_gradient(&model, &batch, Objective::Separated(l)).unwrap().0[0];
    let (at0, at_half, at1) = (loss(0.0), loss(0.5), loss(1.0));
    assert!((at_half - 0.5 * (at0 + at1)).abs() < 1e-12, "{at0} {at_half} {at1}");
    for l in [0.1, 0.25, 0.8] {
        assert!((loss(l) - ((1.0 - l) * at0 + l * at1)).abs() < 1e-12);
    }
}
