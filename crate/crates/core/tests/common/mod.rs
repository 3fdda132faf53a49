//! Fixtures shared by the integration tests and the acceptance suite.
#![allow(dead_code)]

pub mod modules;

use emocpd::amino::{AminoAcid, NUM_CLASSES};
use emocpd::features::{AtomFeature, ElementClass, FeatureSet, Featurizer};
use emocpd::geometry::Vec3;
use emocpd::net::{Fwd, Mode};
use emocpd::pipeline::{voxelize_model, VoxelizeOptions};
use emocpd::structure::{extract_sites, parse_pdb, write_pdb, Atom, PdbOptions, ProteinModel, ResidueSite};
use emocpd::synth::random_protein;
use emocpd::voxel::{LocalFrame, MicroEnvGrid};
use emocpd_autograd::gradcheck::{check_gradients, GradCheckConfig, GradCheckReport};
use emocpd_autograd::{ParamId, ParamStore, Result, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize], scale: f64) -> Tensor<f64> {
    Tensor::from_fn(shape.to_vec(), |_| rng.random_range(-scale..scale))
}

pub fn atom(serial: i64, name: &str, element: &str, residue: &str, chain: char, seq: i32, p: Vec3) -> Atom {
    Atom {
        serial,
        name: name.into(),
        element: element.into(),
        residue_name: residue.into(),
        chain_id: chain,
        residue_seq: seq,
        insertion_code: None,
        position: p,
        occupancy: 1.0,
        charge: None,
        vdw_radius: None,
        hetero: false,
    }
}

/// Replaces every trainable tensor with uniform noise of the given scale so
/// that finite differences see well-conditioned activations.
pub fn randomize_trainables(store: &mut ParamStore<f64>, seed: u64, scale: f64) {
    let mut r = rng(seed);
    for p in store.iter_mut().filter(|p| p.requires_grad) {
        let shape = p.value.shape().to_vec();
        p.value = random_tensor(&mut r, &shape, scale);
    }
}

/// Gradient check of a module with respect to its input and every
/// trainable parameter, in training mode. The module output is reduced to
/// a scalar through fixed random weights.
pub fn module_gradcheck<F>(store: &ParamStore<f64>, x: Tensor<f64>, max_coords: usize, forward: F) -> GradCheckReport
where
    F: Fn(&mut Fwd<f64>, Var) -> Result<Var>,
{
    let ids: Vec<ParamId> = store.iter().filter(|(_, p)| p.requires_grad).map(|(id, _)| id).collect();
    let mut inputs = vec![x];
    inputs.extend(ids.iter().map(|&id| store.value(id).clone()));
    let cfg = GradCheckConfig {
        max_coords,
        ..GradCheckConfig::default()
    };
    check_gradients(&inputs, cfg, |g, vars| {
        let mut f = Fwd::new(g, store, Mode::Train);
        for (&id, &v) in ids.iter().zip(&vars[1..]) {
            f.binder.insert(id, v);
        }
        let y = forward(&mut f, vars[0])?;
        let shape = f.graph.shape(y).to_vec();
        let w = random_tensor(&mut rng(99), &shape, 1.0);
        let wv = f.graph.constant(w);
        let p = f.graph.mul(y, wv)?;
        Ok(f.graph.sum(p))
    })
    .expect("gradient check runs")
}

/// Synthetic protein pushed through PDB text and back, as a
/// structure file would arrive.
pub fn toy_structure(seed: u64, chains: usize, length: usize, source: &str) -> ProteinModel {
    let protein = random_protein(seed, chains, length, source);
    let text = write_pdb(&protein);
    parse_pdb(
        &text,
        &PdbOptions {
            include_hetatm: false,
            source_id: source.into(),
        },
    )
    .expect("synthetic PDB parses")
}

/// 64 labelled grids covering all 20 classes.
pub fn toy_grids() -> Vec<MicroEnvGrid> {
    let model = toy_structure(1, 2, 32, "toy");
    let (grids, _) = voxelize_model(&model, &Featurizer::default(), &VoxelizeOptions::default()).expect("voxelize");
    grids
}

/// Distance from `v` to the nearest integer.
pub fn boundary_margin(v: f64) -> f64 {
    (v - v.round()).abs()
}

/// A 50-atom microenvironment: one alanine whose frame is built from its
/// real backbone, plus 45 neighbours placed at random inside cells (at least
/// 0.05 Å from any face) or outside the box, with random dyadic features.
pub struct RigidFixture {
    pub model: ProteinModel,
    pub site: ResidueSite,
    pub features: FeatureSet,
}

pub fn rigid_fixture(seed: u64) -> RigidFixture {
    let mut r = rng(seed);
    let central = [
        ("N", "N", Vec3::new(1.458, 0.0, 0.0)),
        ("CA", "C", Vec3::ZERO),
        ("C", "C", Vec3::new(-0.551, 1.422, 0.0)),
        ("O", "O", Vec3::new(-1.70, 1.60, 0.35)),
        ("CB", "C", Vec3::new(-0.53, -0.77, 1.21)),
    ];
    let mut atoms: Vec<Atom> = central
        .iter()
        .enumerate()
        .map(|(i, &(name, el, p))| atom(i as i64 + 1, name, el, "ALA", 'A', 10, p))
        .collect();
    let probe = ProteinModel {
        atoms: atoms.clone(),
        source_id: "fixture".into(),
    };
    let site = extract_sites(&probe).sites.remove(0);
    let frame = LocalFrame::for_site(&site).expect("frame");
    let elements = ["C", "N", "O", "S", "H"];
    for i in 0..45 {
        let local = if i % 9 == 8 {
            // outside the box along one axis
            Vec3::new(r.random_range(10.5..14.0), r.random_range(-9.0..9.0), r.random_range(-9.0..9.0))
        } else {
            let cell = |r: &mut ChaCha8Rng| r.random_range(-10i32..10) as f64 + r.random_range(0.05..0.95);
            Vec3::new(cell(&mut r), cell(&mut r), cell(&mut r))
        };
        let global = frame.origin + frame.x * local.x + frame.y * local.y + frame.z * local.z;
        let el = elements[r.random_range(0..elements.len())];
        atoms.push(atom(6 + i as i64, &format!("{el}{i}"), el, "GLY", 'B', 1 + i, global));
    }
    let classes = [ElementClass::C, ElementClass::N, ElementClass::O, ElementClass::S, ElementClass::H];
    let features = atoms
        .iter()
        .map(|a| {
            Some(AtomFeature {
                class: classes[elements.iter().position(|e| *e == a.element).unwrap()],
                // dyadic values keep every partial sum exact in f32 and f64
                fc: r.random_range(-50i32..50) as f64 / 64.0,
                sasa: r.random_range(0i32..640) as f64 / 16.0,
            })
        })
        .collect();
    let model = ProteinModel {
        atoms,
        source_id: "fixture".into(),
    };
    let site = extract_sites(&model).sites.into_iter().find(|s| s.label == AminoAcid::Ala).expect("central site");
    RigidFixture {
        model,
        site,
        features: FeatureSet {
            features,
            charge_misses: 0,
        },
    }
}

/// Channel totals of every non-masked atom inside the box, summed in f64
/// straight from the feature vectors.
pub fn in_box_channel_sums(fx: &RigidFixture) -> [f64; 7] {
    let frame = LocalFrame::for_site(&fx.site).unwrap();
    let mut sums = [0.0; 7];
    for (i, (a, f)) in fx.model.atoms.iter().zip(&fx.features.features).enumerate() {
        if fx.site.sidechain_atom_ids.contains(&i) {
            continue;
        }
        let p = frame.to_local(a.position);
        if [p.x, p.y, p.z].iter().all(|&v| (-10.0..10.0).contains(&v)) {
            for (s, v) in sums.iter_mut().zip(f.unwrap().to_vector()) {
                *s += v;
            }
        }
    }
    sums
}

/// A loose random cluster of `n` atoms with carbon-to-sulfur radii.
pub fn random_cluster(r: &mut impl Rng, n: usize) -> (Vec<Vec3>, Vec<f64>) {
    let centers = (0..n)
        .map(|_| Vec3::new(r.random_range(-5.0..5.0), r.random_range(-5.0..5.0), r.random_range(-5.0..5.0)))
        .collect();
    let radii = (0..n).map(|_| r.random_range(1.2..1.9)).collect();
    (centers, radii)
}

/// Random probability rows over the twenty classes and uniform labels.
pub fn random_prob_rows(r: &mut impl Rng, n: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let probs = (0..n)
        .map(|_| {
            // coarse values make ties common
            let raw: Vec<f64> = (0..NUM_CLASSES).map(|_| r.random_range(0..6) as f64 + 0.5).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / s).collect()
        })
        .collect();
    let labels = (0..n).map(|_| r.random_range(0..NUM_CLASSES)).collect();
    (probs, labels)
}

/// Per-sample tally of one-vs-rest counts, independent of the matrix.
pub fn tally_one_vs_rest(probs: &[Vec<f64>], labels: &[usize], c: usize) -> (u64, u64, u64) {
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (row, &l) in probs.iter().zip(labels) {
        let mut best = 0;
        for j in 1..NUM_CLASSES {
            if row[j] > row[best] {
                best = j;
            }
        }
        match (l == c, best == c) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            _ => {}
        }
    }
    (tp, fp, fn_)
}

/// Top-k accuracy by fully sorting each row (descending probability,
/// lower class first on ties) and scanning the first `k` entries.
pub fn topk_by_sorting(probs: &[Vec<f64>], labels: &[usize], k: usize) -> f64 {
    let hits = probs
        .iter()
        .zip(labels)
        .filter(|(row, &l)| {
            let mut order: Vec<usize> = (0..row.len()).collect();
            order.sort_by(|&a, &b| row[b].partial_cmp(&row[a]).unwrap().then(a.cmp(&b)));
            order[..k].contains(&l)
        })
        .count();
    hits as f64 / labels.len() as f64
}

/// Published per-amino-acid (r, p) pairs, keyed by one-letter code.
pub const PUBLISHED_CORRELATIONS: [(char, f64, f64); 20] = [
    ('H', -0.03, 0.34),
    ('K', -0.08, 0.02),
    ('R', -0.06, 0.08),
    ('D', 0.04, 0.26),
    ('E', -0.16, 2.5e-6),
    ('S', -0.09, 8e-3),
    ('T', 0.06, 0.07),
    ('N', -0.16, 3.6e-6),
    ('Q', -0.33, 3.8e-24),
    ('A', 0.32, 4.8e-22),
    ('V', 0.17, 7.5e-7),
    ('L', -3e-3, 0.93),
    ('I', -0.11, 1e-3),
    ('M', -0.20, 3.4e-9),
    ('F', 0.01, 0.76),
    ('Y', -0.07, 0.03),
    ('W', 0.06, 0.08),
    ('P', 0.20, 3.3e-9),
    ('G', 0.34, 5.2e-25),
    ('C', -0.20, 1.6e-9),
];

/// The published values as `(r, p)` vectors in class order.
pub fn published_correlations() -> ([f64; NUM_CLASSES], [f64; NUM_CLASSES]) {
    let mut r = [f64::NAN; NUM_CLASSES];
    let mut p = [f64::NAN; NUM_CLASSES];
    for (code, rv, pv) in PUBLISHED_CORRELATIONS {
        let aa = AminoAcid::ALL.iter().find(|a| a.one_letter() == code).unwrap();
        r[aa.index()] = rv;
        p[aa.index()] = pv;
    }
    (r, p)
}
