//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits nonzero if any fails. Pass criterion numbers as arguments to
//! run a subset, e.g. `cargo test --test acceptance -- 3 7`.

mod common;
#[path = "../../autograd/tests/suite/mod.rs"]
mod op_suite;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::{
    boundary_margin, in_box_channel_sums, published_correlations, random_cluster, random_prob_rows, rigid_fixture, rng,
    tally_one_vs_rest, topk_by_sorting, toy_grids,
};
use emocpd::amino::{AminoAcid, NUM_CLASSES};
use emocpd::analysis::{classify_amino_acids, Group, DEFAULT_ALPHA};
use emocpd::features::{shrake_rupley, DEFAULT_POINTS, DEFAULT_PROBE};
use emocpd::geometry::{RigidMotion, Vec3};
use emocpd::net::{Fwd, Mode, Model, ModelConfig};
use emocpd::structure::{extract_sites, write_pdb};
use emocpd::synth::random_protein;
use emocpd::train::{
    accuracy, confusion_from_predictions, per_class_metrics, topk_accuracy, train_step, ConfusionMatrix, Dataset,
    TrainConfig,
};
use emocpd::voxel::{build_grid, LocalFrame};
use emocpd_autograd::{Adam, Graph, Tensor};
use proptest::prelude::*;
use proptest::test_runner::{Config as ProptestConfig, TestRunner};
use rand::Rng;

type Verdict = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn gradients() -> Verdict {
    let start = Instant::now();
    let mut cases = op_suite::gradients::all();
    cases.extend(common::modules::all());
    let elapsed = start.elapsed();
    let (worst_name, worst) = cases
        .iter()
        .max_by(|a, b| a.1.max_rel_err.total_cmp(&b.1.max_rel_err))
        .map(|(n, r)| (n.clone(), r.max_rel_err))
        .unwrap();
    for (name, report) in &cases {
        ensure!(report.max_rel_err <= 1e-4, "{name}: max rel err {:.3e} at {:?}", report.max_rel_err, report.worst);
    }
    ensure!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
    Ok(format!("{} operator and module checks, worst {worst:.2e} ({worst_name})", cases.len()))
}

fn oracles() -> Verdict {
    let outcomes = op_suite::oracles::all();
    for required in ["conv3d", "linear", "global_max_pool", "softmax", "cross_entropy"] {
        ensure!(outcomes.iter().any(|o| o.name == required), "no oracle for {required}");
    }
    for o in &outcomes {
        ensure!(o.instances >= 100, "{}: only {} instances", o.name, o.instances);
        ensure!(o.max_err <= 1e-10, "{}: max deviation {:e}", o.name, o.max_err);
    }
    let worst = outcomes.iter().map(|o| o.max_err).fold(0.0, f64::max);
    let summary: Vec<String> = outcomes.iter().map(|o| format!("{} x{}", o.name, o.instances)).collect();
    Ok(format!("{}; worst deviation {worst:.1e}", summary.join(", ")))
}

fn voxelizer_invariance() -> Verdict {
    let fx = rigid_fixture(7);
    ensure!(fx.model.atoms.len() == 50, "fixture has {} atoms", fx.model.atoms.len());
    let frame = LocalFrame::for_site(&fx.site).map_err(|e| e.to_string())?;
    let mut min_margin = f64::INFINITY;
    for (i, a) in fx.model.atoms.iter().enumerate() {
        if fx.site.sidechain_atom_ids.contains(&i) {
            continue;
        }
        let p = frame.to_local(a.position);
        min_margin = [p.x, p.y, p.z].iter().map(|&v| boundary_margin(v)).fold(min_margin, f64::min);
    }
    ensure!(min_margin >= 1e-3, "an atom sits {min_margin:e} Å from a cell face");
    let base = build_grid(&fx.site, &fx.model, &fx.features, "fixture").map_err(|e| e.to_string())?;
    let mut r = rng(8);
    for m in 0..100 {
        let motion = RigidMotion::random(&mut r, 100.0);
        let mut moved = fx.model.clone();
        for a in &mut moved.atoms {
            a.position = motion.apply(a.position);
        }
        let site = extract_sites(&moved).sites.remove(0);
        let grid = build_grid(&site, &moved, &fx.features, "fixture").map_err(|e| e.to_string())?;
        ensure!(grid == base, "motion {m} changed the grid");
    }
    for seed in 0..10 {
        let fx = rigid_fixture(seed);
        let grid = build_grid(&fx.site, &fx.model, &fx.features, "fixture").map_err(|e| e.to_string())?;
        let want = in_box_channel_sums(&fx);
        for (c, w) in want.iter().enumerate() {
            let got: f64 = grid.values[c * 8000..(c + 1) * 8000].iter().map(|&v| v as f64).sum();
            ensure!(got == *w, "fixture {seed} channel {c}: grid sum {got} vs atom sum {w}");
        }
    }
    Ok(format!("100 motions bitwise identical, min face margin {min_margin:.3} Å; channel sums exact on 10 fixtures"))
}

fn sasa() -> Verdict {
    ensure!(DEFAULT_POINTS == 960, "default lattice has {DEFAULT_POINTS} points");
    let r = 1.7;
    let got = shrake_rupley(&[Vec3::ZERO], &[r], DEFAULT_PROBE, DEFAULT_POINTS)[0];
    let want = 4.0 * std::f64::consts::PI * (r + 1.4) * (r + 1.4);
    let rel = (got - want).abs() / want;
    ensure!(rel <= 0.02, "isolated sphere {got} vs {want}");
    let mut g = rng(40);
    for config in 0..50 {
        let n = g.random_range(3..15);
        let (mut centers, mut radii) = random_cluster(&mut g, n);
        let before = shrake_rupley(&centers, &radii, DEFAULT_PROBE, DEFAULT_POINTS);
        centers.push(Vec3::new(g.random_range(-5.0..5.0), g.random_range(-5.0..5.0), g.random_range(-5.0..5.0)));
        radii.push(g.random_range(1.2..1.9));
        let after = shrake_rupley(&centers, &radii, DEFAULT_PROBE, DEFAULT_POINTS);
        for (i, (b, a)) in before.iter().zip(&after).enumerate() {
            ensure!(a <= b, "config {config} atom {i}: {b} -> {a}");
        }
    }
    Ok(format!("isolated sphere off by {:.3}%; monotone on 50 configurations", rel * 100.0))
}

fn metrics() -> Verdict {
    let mut r = rng(70);
    for run in 0..50 {
        let n = r.random_range(1..=1000);
        let (probs, labels) = random_prob_rows(&mut r, n);
        let cm = confusion_from_predictions(&probs, &labels).map_err(|e| e.to_string())?;
        let per_class = per_class_metrics(&cm);
        for (c, m) in per_class.iter().enumerate() {
            let (tp, fp, fn_) = tally_one_vs_rest(&probs, &labels, c);
            let div = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
            ensure!(m.recall == div(tp, tp + fn_), "run {run} class {c}: recall");
            ensure!(m.precision == div(tp, tp + fp), "run {run} class {c}: precision");
            ensure!(m.f1 == div(2 * tp, 2 * tp + fp + fn_), "run {run} class {c}: f1");
        }
        for k in 1..=NUM_CLASSES {
            let got = topk_accuracy(&probs, &labels, k).map_err(|e| e.to_string())?;
            ensure!(got == topk_by_sorting(&probs, &labels, k), "run {run}: top-{k}");
        }
        let acc = accuracy(&cm).map_err(|e| e.to_string())?;
        ensure!(topk_accuracy(&probs, &labels, 1).unwrap() == acc, "run {run}: top-1 {acc}");
        ensure!(topk_accuracy(&probs, &labels, 20).unwrap() == 1.0, "run {run}: top-20 below 1");
    }
    Ok("50 random instances match the per-sample tally and sort oracles exactly".into())
}

fn table_partition() -> Verdict {
    let (r, p) = published_correlations();
    let groups = classify_amino_acids(&r, &p, DEFAULT_ALPHA);
    let members = |g: Group| -> String {
        let mut s: Vec<char> = AminoAcid::ALL.iter().filter(|a| groups[a.index()] == g).map(|a| a.one_letter()).collect();
        s.sort();
        s.into_iter().collect()
    };
    let (pos, neg) = (members(Group::Positive), members(Group::Negative));
    ensure!(pos == "AGPV", "positive set {pos}");
    ensure!(neg == "CEIMNQS", "negative set {neg}");
    Ok(format!("positive {{{pos}}}, negative {{{neg}}}, {} neutral", members(Group::Neutral).len()))
}

/// Width-8 network on the 64 toy grids, full-batch Adam. Stops at the first
/// step whose batch accuracy reaches 95%.
fn overfit() -> Verdict {
    const STEPS: usize = 300;
    let start = Instant::now();
    let data = Dataset::new(toy_grids());
    ensure!(data.len() == 64, "toy set has {} grids", data.len());
    let model_cfg = ModelConfig::uniform(8, 64);
    let train_cfg = TrainConfig {
        lr: 5e-3,
        weight_decay: 0.0,
        batch_size: 64,
        seed: 1,
        ..TrainConfig::default()
    };
    let mut model = Model::<f32>::new(&model_cfg, train_cfg.seed).map_err(|e| e.to_string())?;
    let mut adam = Adam::new(train_cfg.adam());
    let mut losses = Vec::new();
    let mut reached = None;
    for step in 1..=STEPS {
        let order = data.epoch_order(train_cfg.seed, step as u64 - 1);
        let (x, labels) = data.batch::<f32>(&order);
        let stats = train_step(&mut model, &mut adam, x, &labels, step).map_err(|e| e.to_string())?;
        losses.push(stats.loss);
        if stats.accuracy >= 0.95 {
            reached = Some((step, stats.accuracy));
            break;
        }
    }
    let elapsed = start.elapsed();
    let first = &losses[..losses.len().min(20)];
    ensure!(first.len() == 20, "stopped after {} steps, before the loss window closed", first.len());
    if let Some(i) = first.windows(2).position(|w| w[1] >= w[0]) {
        return Err(format!("loss rose at step {}: {} -> {}", i + 2, first[i], first[i + 1]));
    }
    let (step, acc) = reached.ok_or_else(|| format!("accuracy below 95% after {STEPS} steps"))?;
    ensure!(elapsed < Duration::from_secs(900), "took {elapsed:?}");
    Ok(format!(
        "{:.1}% at step {step} in {:.0} s; loss {:.3} -> {:.3} strictly decreasing over steps 1-20",
        acc * 100.0,
        elapsed.as_secs_f64(),
        first[0],
        first[19]
    ))
}

fn shape_trace() -> Verdict {
    let cfg = ModelConfig::default();
    let declared: Vec<usize> = cfg.validate().map_err(|e| e.to_string())?.iter().map(|s| s.spatial).collect();
    let model = Model::<f32>::new(&cfg, 1).map_err(|e| e.to_string())?;
    let x = Tensor::from_fn([2, 7, 20, 20, 20], |i| ((i * 7919) % 13) as f32 * 0.1);
    let mut g = Graph::new();
    let xv = g.constant(x);
    let mut f = Fwd::new(&mut g, &model.store, Mode::Eval);
    let stages = model.forward_stages(&mut f, xv).map_err(|e| e.to_string())?;
    let (logits, blocks) = stages.split_last().unwrap();
    let mut walk: Vec<usize> = blocks.iter().map(|&v| g.shape(v)[2]).collect();
    ensure!(blocks.iter().all(|&v| g.shape(v)[0] == 2 && g.shape(v)[2..].iter().all(|&s| s == g.shape(v)[2])), "non-cubic stage");
    ensure!(walk == declared, "forward {walk:?} vs declared {declared:?}");
    walk.dedup();
    ensure!(walk == [20, 10, 5, 3], "spatial walk {walk:?}");
    ensure!(g.shape(*logits) == [2, 20], "logits {:?}", g.shape(*logits));
    Ok(format!("[2,7,20,20,20] -> 20/10/5/3 over {} blocks -> [2,20]", blocks.len()))
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_emocpd")).args(args).output().map_err(|e| e.to_string())?;
    ensure!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr).trim());
    Ok(())
}

/// Voxelize, train, predict, evaluate and analyze into `out`.
fn pipeline(inputs: &[String], config: &Path, out: &Path) -> Result<(), String> {
    std::fs::create_dir_all(out).map_err(|e| e.to_string())?;
    let p = |name: &str| out.join(name).to_str().unwrap().to_string();
    let cfg = config.to_str().unwrap();
    let mut args = vec!["--config", cfg, "voxelize", "-o"];
    let data = p("data.emog");
    args.push(&data);
    args.push("-i");
    args.extend(inputs.iter().map(String::as_str));
    run_cli(&args)?;
    run_cli(&["--config", cfg, "train", "--train", &data, "--val", &data, "-o", &p("model.emoc"), "--history", &p("history.csv")])?;
    run_cli(&["--config", cfg, "predict", "--checkpoint", &p("model.emoc"), "-i", &data, "-o", &p("predictions.csv")])?;
    run_cli(&["--config", cfg, "evaluate", "--checkpoint", &p("model.emoc"), "-i", &data, "-o", &p("report.json"), "--confusion", &p("confusion.csv")])?;
    run_cli(&["--config", cfg, "analyze", "--predictions", &p("predictions.csv"), "-o", &p("analysis.json")])
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let inputs: Vec<String> = (0..3)
        .map(|i| {
            let path = d.join(format!("s{i}.pdb"));
            std::fs::write(&path, write_pdb(&random_protein(20 + i, 2, 8, &format!("s{i}")))).unwrap();
            path.to_str().unwrap().to_string()
        })
        .collect();
    let mut cfg = emocpd::cli::RunConfig::default();
    cfg.seed = 42;
    cfg.model = ModelConfig::uniform(4, 8);
    cfg.train.lr = 1e-3;
    cfg.train.batch_size = 8;
    cfg.train.max_steps = Some(4);
    cfg.train.val_every = 2;
    let config = d.join("run.toml");
    std::fs::write(&config, cfg.to_toml()).map_err(|e| e.to_string())?;
    pipeline(&inputs, &config, &d.join("a"))?;
    pipeline(&inputs, &config, &d.join("b"))?;
    let artifacts = [
        "data.emog",
        "data.emog.json",
        "model.emoc",
        "history.csv",
        "predictions.csv",
        "report.json",
        "confusion.csv",
        "analysis.json",
    ];
    let mut bytes = 0;
    for name in artifacts {
        let a = std::fs::read(d.join("a").join(name)).map_err(|e| format!("{name}: {e}"))?;
        let b = std::fs::read(d.join("b").join(name)).map_err(|e| format!("{name}: {e}"))?;
        ensure!(a == b, "{name} differs between runs");
        bytes += a.len();
    }
    Ok(format!("{} artifacts ({bytes} bytes) byte-identical across two seeded runs", artifacts.len()))
}

fn f1_identity() -> Verdict {
    let mut runner = TestRunner::new(ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::with_cases(2000)
    });
    let strategy = (prop::collection::vec(0u64..40, NUM_CLASSES * NUM_CLASSES), prop::bool::ANY);
    let result = runner.run(&strategy, |(cells, sparse)| {
        let mut cm = ConfusionMatrix::default();
        for (i, v) in cells.iter().enumerate() {
            // the sparse variant zeroes most cells so some classes go empty
            cm.counts[i / NUM_CLASSES][i % NUM_CLASSES] = if sparse && v % 5 != 0 { 0 } else { *v };
        }
        for m in per_class_metrics(&cm) {
            let (p, r) = (m.precision, m.recall);
            if p + r > 0.0 {
                prop_assert!((m.f1 - 2.0 * p * r / (p + r)).abs() <= 1e-12, "f1 {} p {} r {}", m.f1, p, r);
            }
        }
        Ok(())
    });
    result.map_err(|e| e.to_string())?;
    Ok("2000 random confusion matrices, dense and sparse".into())
}

fn main() {
    let criteria: [(u32, &str, fn() -> Verdict); 10] = [
        (1, "gradient suite", gradients),
        (2, "oracle suite", oracles),
        (3, "voxelizer invariance", voxelizer_invariance),
        (4, "SASA", sasa),
        (5, "metrics", metrics),
        (6, "published partition", table_partition),
        (7, "overfit run", overfit),
        (8, "shape trace", shape_trace),
        (9, "determinism", determinism),
        (10, "F1 identity", f1_identity),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, title, check) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => println!("PASS [{id:>2}] {title}: {detail} ({secs:.1} s)"),
            Err(why) => {
                failed += 1;
                println!("FAIL [{id:>2}] {title}: {why} ({secs:.1} s)");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
