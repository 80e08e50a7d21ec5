use super::*;
use crate::diffcore::{init_params, OptimizerState, ParamVector};
use crate::encoder::{Encoder, VectorizerConfig};
use crate::moo::min_norm_weights;
use crate::pipeline::{sample_class_batch, IdSet, Source};
use crate::{seeding, synth, Error};

fn small_config(mode: Mode) -> RunConfig {
    let mut cfg = RunConfig { mode, seeds: vec![3], ..Default::default() };
    cfg.features = VectorizerConfig { dim: 256, ..Default::default() };
    cfg.model = ModelConfig { hidden: 16, embed_dim: 8 };
    cfg.train.epochs = 3;
    cfg.train.eval_interval = 2;
    cfg
}

fn data(cfg: &RunConfig) -> PreparedData {
    PreparedData::new(synth::two_cluster(60, 1), synth::two_cluster(40, 2), &cfg.features).unwrap()
}

struct Fixture {
    encoder: Encoder,
    params: ParamVector,
    data: PreparedData,
    groups: Vec<Vec<usize>>,
}

fn fixture(cfg: &RunConfig) -> Fixture {
    let data = data(cfg);
    let encoder = Encoder::new(architecture(cfg, 2)).unwrap();
    let params = init_params(encoder.layout(), 11).unwrap();
    let groups = data.train.ids_by_class(0..data.train.len());
    Fixture { encoder, params, data, groups }
}

fn run_steps(cfg: &RunConfig, steps: usize) -> (ParamVector, Vec<StepRecord>) {
    let mut f = fixture(cfg);
    let mut state = OptimizerState::new(f.params.len(), cfg.optim);
    let settings = step_settings(cfg).unwrap();
    let mut records = Vec::new();
    let mut grads = GradientSet::zeros(f.params.len());
    for step in 0..steps {
        let seed = seeding::derive(5, &[step as u64]);
        let plan = sample_class_batch(&f.groups, 8, seed).unwrap();
        records.push(
            train_step(&f.encoder, &mut f.params, &mut state, &plan, &f.data.train_features, &settings, step, seed, &mut grads)
                .unwrap(),
        );
    }
    (f.params, records)
}

#[test]
fn ls_with_zero_lambda_matches_ce_bitwise() {
    let ce = run_steps(&small_config(Mode::Ce), 20).0;
    let ls = run_steps(&RunConfig { lambda: 0.0, ..small_config(Mode::CeLs) }, 20).0;
    assert!(ce.values().iter().zip(ls.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
}

fn gradients(cfg: &RunConfig) -> (crate::contrastive::LossVector, GradientSet) {
    let f = fixture(cfg);
    let plan = sample_class_batch(&f.groups, 8, 9).unwrap();
    let mut grads = GradientSet::zeros(f.params.len());
    let loss =
        batch_gradients(&f.encoder, &f.params, &plan, &f.data.train_features, cfg.tau, 9, true, &mut grads).unwrap();
    (loss, grads)
}

#[test]
fn combination_is_linear() {
    let cfg = small_config(Mode::CeLs);
    let (_, g) = gradients(&cfg);
    let combined = combine(&g, 0.3, [0.1, 0.9]);
    for (i, c) in combined.iter().enumerate() {
        let expected = 0.3 * (0.1 * g.pos[i] + 0.9 * g.neg[i]) + 0.7 * g.ce[i];
        assert!((c - expected).abs() <= 1e-12);
    }
    let pos_only = combine(&g, 1.0, [1.0, 0.0]);
    assert!(pos_only.iter().zip(&g.pos).all(|(a, b)| a.to_bits() == b.to_bits()));
    let mut in_place = g.clone();
    combine_in_place(&mut in_place, 0.3, [0.1, 0.9]);
    assert_eq!(in_place.ce, combined);
}

#[test]
fn epo_on_the_ray_uses_min_norm() {
    let cfg = small_config(Mode::CeEpo);
    let (loss, g) = gradients(&cfg);
    let shift = 1.0 / cfg.tau;
    let (l1, l2) = (loss.pos + shift, loss.neg + shift);
    let settings = StepSettings {
        r: Some(crate::moo::PreferenceVector::pair(l2 / (l1 + l2)).unwrap()),
        ..step_settings(&cfg).unwrap()
    };
    let (beta, combination) = contrastive_weights(&settings, &loss, &g).unwrap();
    assert_eq!(combination, Combination::EpoDescent);
    assert_eq!(beta, min_norm_weights(&g.pos, &g.neg).unwrap().beta);
}

#[test]
fn epo_shift_is_applied_once() {
    let cfg = small_config(Mode::CeEpo);
    let (loss, g) = gradients(&cfg);
    let settings = step_settings(&cfg).unwrap();
    let shift = 1.0 / cfg.tau;
    let point = crate::moo::ObjectivePoint::new(vec![loss.pos + shift, loss.neg + shift]).unwrap();
    let expected =
        crate::moo::epo_weights(&point, &g.pos, &g.neg, settings.r.as_ref().unwrap(), cfg.eps_balance).unwrap();
    assert_eq!(contrastive_weights(&settings, &loss, &g).unwrap().0, expected.beta);
}

#[test]
fn evaluate_breaks_ties_toward_class_zero() {
    let cfg = small_config(Mode::Ce);
    let f = fixture(&cfg);
    let mut values = vec![0.0; f.params.len()];
    let bias = f.encoder.layout().segment("embed.bias").unwrap().range();
    values[bias.start] = 1.0;
    let params = ParamVector::from_values(f.encoder.layout().clone(), values).unwrap();
    let class0: Vec<usize> = (0..f.data.validation.len()).filter(|&i| f.data.validation.rows[i].label == 0).collect();
    let ids = IdSet { source: Source::Validation, ids: class0 };
    assert_eq!(evaluate(&f.encoder, &params, &f.data, &ids).unwrap(), 1.0);
}

#[test]
fn untrained_model_is_near_chance() {
    let cfg = small_config(Mode::Ce);
    let data = PreparedData::new(synth::two_cluster(20, 1), synth::two_cluster(200, 2), &cfg.features).unwrap();
    let encoder = Encoder::new(architecture(&cfg, 2)).unwrap();
    let params = init_params(encoder.layout(), 0).unwrap();
    let ids = IdSet { source: Source::Validation, ids: (0..200).collect() };
    let acc = evaluate(&encoder, &params, &data, &ids).unwrap();
    assert!((0.3..=0.7).contains(&acc), "{acc}");
}

#[test]
fn single_seed_reports_zero_std() {
    let cfg = small_config(Mode::CeEpo);
    let report = run_experiment(&cfg, &data(&cfg)).unwrap();
    assert_eq!(report.aggregate.completed, 1);
    assert!(report.aggregate.single_seed);
    assert_eq!(report.aggregate.std_test_accuracy, Some(0.0));
    let run = &report.runs[0];
    assert_eq!(run.steps.len(), 3 * 2);
    assert_eq!(run.evals.iter().map(|e| e.step).collect::<Vec<_>>(), vec![2, 4, 6]);
    assert!(run.evals.iter().any(|e| e.step == run.best_step && e.validation_accuracy == run.best_validation_accuracy));
}

#[test]
fn repeated_seeds_agree() {
    let cfg = RunConfig { seeds: vec![4, 4], ..small_config(Mode::CeLs) };
    let report = run_experiment(&cfg, &data(&cfg)).unwrap();
    assert_eq!(report.seeds[0], report.seeds[1]);
    assert_eq!(report.runs[0].best_params, report.runs[1].best_params);
    assert!(!report.aggregate.single_seed);
}

#[test]
fn failed_seeds_are_recorded() {
    let mut cfg = small_config(Mode::Ce);
    cfg.train.few_shot = 200;
    cfg.seeds = vec![0, 1];
    let report = run_experiment(&cfg, &data(&cfg)).unwrap();
    assert_eq!(report.aggregate.failed, 2);
    assert_eq!(report.aggregate.mean_test_accuracy, None);
    assert!(report.seeds.iter().all(|s| s.status == "failed" && s.error.is_some()));
}

#[test]
fn mismatched_labels_are_rejected() {
    let mut val = synth::two_cluster(10, 2);
    val.labels.reverse();
    let err = PreparedData::new(synth::two_cluster(10, 1), val, &VectorizerConfig::default()).unwrap_err();
    assert!(matches!(err, Error::Data(_)));
}

#[test]
fn mean_std_convention() {
    assert_eq!(mean_std(&[]), None);
    assert_eq!(mean_std(&[0.5]), Some((0.5, 0.0)));
    let (m, s) = mean_std(&[1.0, 2.0, 3.0]).unwrap();
    assert_eq!(m, 2.0);
    assert!((s - 1.0).abs() < 1e-15);
}

#[test]
fn checkpoint_model_reproduces_evaluation() {
    let cfg = small_config(Mode::CeEpo);
    let data = data(&cfg);
    let run = run_seed(&cfg, &data, 3).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    crate::diffcore::write_checkpoint(&path, &run.best_params, &run.checkpoint_meta("d", &cfg.features)).unwrap();
    let model = Model::load(&path).unwrap();
    assert_eq!(model.seed(), Some(3));
    assert_eq!(model.features, cfg.features);
    let correct = run
        .split
        .test
        .ids
        .iter()
        .filter(|&&id| {
            let row = &data.validation.rows[id];
            model.predict(&row.text, None).unwrap() == row.label
        })
        .count();
    assert_eq!(correct as f64 / run.split.test.ids.len() as f64, run.test_accuracy);
}
