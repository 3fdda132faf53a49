//! Training loop, prediction and the evaluation metrics.

mod common;

use common::{random_prob_rows, rng, tally_one_vs_rest, topk_by_sorting, toy_grids};
use emocpd::amino::NUM_CLASSES;
use emocpd::net::{Model, ModelConfig};
use emocpd::train::{
    accuracy, confusion_from_predictions, evaluate_accuracy, history_csv, per_class_metrics, predict, ranked_classes,
    topk_accuracy, topk_curve, train, ConfusionMatrix, Dataset, MetricsReport, TrainConfig, TrainError,
};
use emocpd::voxel::write_emog;
use proptest::prelude::*;
use rand::Rng;

fn tiny() -> ModelConfig {
    ModelConfig::uniform(4, 8)
}

fn small_set(n: usize) -> Dataset {
    Dataset::new(toy_grids().into_iter().take(n).collect())
}

fn short_run(lr: f64, weight_decay: f64, steps: usize, seed: u64) -> TrainConfig {
    TrainConfig {
        lr,
        weight_decay,
        batch_size: 4,
        epochs: 10,
        max_steps: Some(steps),
        seed,
        val_every: 2,
        ..TrainConfig::default()
    }
}

fn trainable_values(m: &Model<f32>) -> Vec<Vec<f32>> {
    m.store.iter().filter(|(_, p)| p.requires_grad).map(|(_, p)| p.value.data().to_vec()).collect()
}

#[test]
fn zero_learning_rate_leaves_parameters_unchanged() {
    let data = small_set(8);
    let out = train(&tiny(), &short_run(0.0, 0.0, 3, 5), &data, None, |_| {}).unwrap();
    let fresh = Model::<f32>::new(&tiny(), 5).unwrap();
    assert_eq!(out.history.len(), 3);
    assert_eq!(trainable_values(&out.last), trainable_values(&fresh));
}

#[test]
fn same_seed_reproduces_the_run_bit_for_bit() {
    let data = small_set(8);
    let val = small_set(4);
    let cfg = short_run(1e-3, 1e-3, 4, 11);
    let a = train(&tiny(), &cfg, &data, Some(&val), |_| {}).unwrap();
    let b = train(&tiny(), &cfg, &data, Some(&val), |_| {}).unwrap();
    assert_eq!(a.history, b.history);
    assert_eq!(a.last.fingerprint(), b.last.fingerprint());
    assert_eq!(a.best.fingerprint(), b.best.fingerprint());
    assert_eq!(history_csv(&a.history), history_csv(&b.history));
    assert!(history_csv(&a.history).starts_with("step,epoch,train_loss,train_acc,val_acc\n"));
    // validation every second step and after the last
    let val_steps: Vec<usize> = a.history.iter().filter(|r| r.val_acc.is_some()).map(|r| r.step).collect();
    assert_eq!(val_steps, vec![2, 4]);

    let other = train(&tiny(), &short_run(1e-3, 1e-3, 4, 12), &data, Some(&val), |_| {}).unwrap();
    assert_ne!(other.last.fingerprint(), a.last.fingerprint());
}

#[test]
fn evaluation_and_prediction_do_not_touch_the_model() {
    let data = small_set(6);
    let model = train(&tiny(), &short_run(1e-3, 0.0, 2, 3), &data, None, |_| {}).unwrap().last;
    let before = model.fingerprint();
    evaluate_accuracy(&model, &data, 4).unwrap();
    predict(&model, &data, 4).unwrap();
    assert_eq!(model.fingerprint(), before);
}

#[test]
fn prediction_rows_are_distributions_and_duplicates_agree() {
    let grids = toy_grids();
    let mut samples: Vec<_> = grids[..5].to_vec();
    samples.push(grids[2].clone());
    let data = Dataset::new(samples);
    let model = Model::<f32>::new(&tiny(), 9).unwrap();
    // batch size 4 puts the duplicate in a different batch from its original
    let probs = predict(&model, &data, 4).unwrap();
    assert_eq!(probs.len(), 6);
    for row in &probs {
        assert_eq!(row.len(), NUM_CLASSES);
        assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-6);
        let top = ranked_classes(row)[0];
        assert!(row.iter().all(|&p| p <= row[top]));
    }
    assert_eq!(probs[2], probs[5]);
    let acc = evaluate_accuracy(&model, &data, 4).unwrap();
    let report = MetricsReport::compute(&probs, &data.labels()).unwrap();
    assert_eq!(acc, report.accuracy);
}

#[test]
fn non_finite_loss_aborts_with_diagnostics() {
    let mut grids: Vec<_> = toy_grids().into_iter().take(4).collect();
    grids[0].values[123] = f32::NAN;
    let err = train(&tiny(), &short_run(1e-3, 0.0, 2, 1), &Dataset::new(grids), None, |_| {}).unwrap_err();
    match err {
        TrainError::NonFinite { step, lr, .. } => {
            assert_eq!(step, 1);
            assert_eq!(lr, 1e-3);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn invalid_configs_and_empty_sets_are_rejected() {
    let data = small_set(2);
    for cfg in [
        TrainConfig { batch_size: 0, ..TrainConfig::default() },
        TrainConfig { epochs: 0, ..TrainConfig::default() },
        TrainConfig { lr: -1.0, ..TrainConfig::default() },
    ] {
        assert!(matches!(train(&tiny(), &cfg, &data, None, |_| {}), Err(TrainError::Config(_))));
    }
    let empty = Dataset::default();
    assert!(matches!(train(&tiny(), &TrainConfig::default(), &empty, None, |_| {}), Err(TrainError::EmptyTrainSet)));
}

#[test]
fn dataset_concatenates_files_and_shuffles_reproducibly() {
    let grids = toy_grids();
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<_> = (0..2)
        .map(|i| {
            let p = dir.path().join(format!("part{i}.emog"));
            let mut bytes = Vec::new();
            write_emog(&mut bytes, &grids[i * 10..(i + 1) * 10]).unwrap();
            std::fs::write(&p, bytes).unwrap();
            p
        })
        .collect();
    let data = Dataset::from_files(&paths).unwrap();
    assert_eq!(data.len(), 20);
    assert_eq!(data.samples, grids[..20].to_vec());
    assert_eq!(data.class_histogram().iter().sum::<usize>(), 20);
    assert_eq!(data.epoch_order(4, 0), data.epoch_order(4, 0));
    assert_ne!(data.epoch_order(4, 0), data.epoch_order(4, 1));
    let mut sorted = data.epoch_order(4, 3);
    sorted.sort();
    assert_eq!(sorted, (0..20).collect::<Vec<_>>());

    std::fs::write(dir.path().join("bad.emog"), b"NOPE\x01\x00").unwrap();
    assert!(Dataset::from_files(&[dir.path().join("bad.emog")]).is_err());
}

#[test]
fn per_class_metrics_match_a_per_sample_tally() {
    let mut r = rng(70);
    for _ in 0..20 {
        let n = r.random_range(1..=1000);
        let (probs, labels) = random_prob_rows(&mut r, n);
        let cm = confusion_from_predictions(&probs, &labels).unwrap();
        let metrics = per_class_metrics(&cm);
        for c in 0..NUM_CLASSES {
            let (tp, fp, fn_) = tally_one_vs_rest(&probs, &labels, c);
            let div = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
            assert_eq!(metrics[c].recall, div(tp, tp + fn_));
            assert_eq!(metrics[c].precision, div(tp, tp + fp));
            assert_eq!(metrics[c].f1, div(2 * tp, 2 * tp + fp + fn_));
        }
        let hits = (0..NUM_CLASSES).map(|c| tally_one_vs_rest(&probs, &labels, c).0).sum::<u64>();
        assert_eq!(accuracy(&cm).unwrap(), hits as f64 / n as f64);
    }
}

#[test]
fn topk_curve_agrees_with_sort_oracle() {
    let mut r = rng(71);
    let (probs, labels) = random_prob_rows(&mut r, 300);
    let curve = topk_curve(&probs, &labels).unwrap();
    for k in 1..=NUM_CLASSES {
        assert_eq!(curve[k - 1], topk_by_sorting(&probs, &labels, k));
        assert_eq!(topk_accuracy(&probs, &labels, k).unwrap(), curve[k - 1]);
    }
    let cm = confusion_from_predictions(&probs, &labels).unwrap();
    assert_eq!(curve[0], accuracy(&cm).unwrap());
    assert_eq!(curve[NUM_CLASSES - 1], 1.0);
    assert!(curve.windows(2).all(|w| w[0] <= w[1]));
}

proptest! {
    #[test]
    fn f1_is_the_harmonic_mean_of_precision_and_recall(cells in prop::collection::vec(0u64..30, NUM_CLASSES * NUM_CLASSES)) {
        let mut cm = ConfusionMatrix::default();
        for (i, v) in cells.iter().enumerate() {
            cm.counts[i / NUM_CLASSES][i % NUM_CLASSES] = *v;
        }
        for m in per_class_metrics(&cm) {
            let (p, r) = (m.precision, m.recall);
            if p + r > 0.0 {
                prop_assert!((m.f1 - 2.0 * p * r / (p + r)).abs() <= 1e-12);
            } else {
                prop_assert_eq!(m.f1, 0.0);
            }
        }
    }

    #[test]
    fn confusion_total_and_row_sums_are_conserved(labels in prop::collection::vec(0usize..NUM_CLASSES, 1..200), seed in any::<u64>()) {
        let (probs, _) = random_prob_rows(&mut rng(seed), labels.len());
        let cm = confusion_from_predictions(&probs, &labels).unwrap();
        prop_assert_eq!(cm.total(), labels.len() as u64);
        for c in 0..NUM_CLASSES {
            prop_assert_eq!(cm.row_sum(c), labels.iter().filter(|&&l| l == c).count() as u64);
        }
    }
}
