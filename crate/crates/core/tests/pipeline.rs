//! End-to-end pipeline tests on small grids: parse, abstract,
//! serialize, reconstruct, and the baseline comparison.

mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use primsketch::budget::Budgeted;
use primsketch::cli::{RecordsFile, RECORDS_SCHEMA_VERSION};
use primsketch::{
    abstract_sketch, apply_record, normalize_stroke, parse_ndjson, primitive_set, sw_abstract,
    dt_loss_mean, field, FitConfig, Gamma, Grid, Point, Sketch, DEFAULT_KAPPA,
};

const SAMPLE: &str = include_str!("../data/quickdraw_sample.ndjson");

fn quick_cfg() -> FitConfig {
    FitConfig {
        max_refine_iters: 50,
        ..FitConfig::default()
    }
}

#[test]
fn bundled_sample_parses_cleanly() {
    let sketches = parse_ndjson(SAMPLE.as_bytes()).expect("bundled sample is well-formed");
    assert_eq!(sketches.len(), 54);
    let categories: std::collections::BTreeSet<&str> = sketches
        .iter()
        .filter_map(|s| s.category.as_deref())
        .collect();
    assert_eq!(categories.len(), 9);
    for sk in &sketches {
        assert!(!sk.strokes().is_empty());
        assert!(sk.id.is_some());
        for stroke in sk.strokes() {
            assert!(stroke.len() >= 2);
        }
    }
}

#[test]
fn records_file_round_trip_reconstructs_strokes() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let set = primitive_set();
    let grid = Grid::new(24).unwrap();
    let gamma = Gamma::default();

    let strokes: Vec<_> = (0..3).map(|_| common::random_tracing(&mut rng, 0.3).1).collect();
    let sk = Sketch::new(strokes, Some("rt".into()), Some("test".into())).unwrap();
    let ps = abstract_sketch(&sk, set, &grid, gamma, &quick_cfg(), DEFAULT_KAPPA).unwrap();

    let file = RecordsFile {
        schema_version: RECORDS_SCHEMA_VERSION,
        sketches: vec![ps],
    };
    let json = serde_json::to_string_pretty(&file).unwrap();
    let back: RecordsFile = serde_json::from_str(&json).unwrap();
    assert_eq!(back.schema_version, RECORDS_SCHEMA_VERSION);
    let ps_back = &back.sketches[0];

    let direct = file.sketches[0].reconstruct(set).unwrap();
    let parsed = ps_back.reconstruct(set).unwrap();
    for (a, b) in direct.strokes().iter().zip(parsed.strokes()) {
        for (pa, pb) in a.points().iter().zip(b.points()) {
            assert!((*pa - *pb).norm() < 1e-6);
        }
    }
}

#[test]
fn traced_round_trip_recovers_ids_and_small_residuals() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let set = primitive_set();
    let grid = Grid::new(32).unwrap();
    let gamma = Gamma::default();
    let cfg = quick_cfg();
    let mut hits = 0;
    let total = 14;
    for _ in 0..total {
        let (id, stroke) = common::random_tracing(&mut rng, 0.3);
        let sk = Sketch::new(vec![stroke], None, None).unwrap();
        let ps = abstract_sketch(&sk, set, &grid, gamma, &cfg, DEFAULT_KAPPA).unwrap();
        if ps.records[0].id == id {
            hits += 1;
        }
    }
    assert!(hits >= total - 1, "identified {hits}/{total}");
}

#[test]
fn matcher_beats_baseline_on_traced_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let set = primitive_set();
    let grid = Grid::new(24).unwrap();
    let gamma = Gamma::default();
    let cfg = quick_cfg();

    let strokes: Vec<_> = (0..12).map(|_| common::random_tracing(&mut rng, 0.3).1).collect();
    let sk = Sketch::new(strokes, None, None).unwrap();
    let pmn = abstract_sketch(&sk, set, &grid, gamma, &cfg, DEFAULT_KAPPA).unwrap();
    let sw = sw_abstract(&sk, set, &grid, gamma);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(
        mean(&pmn.residuals) <= mean(&sw.residuals),
        "pmn {} vs sw {}",
        mean(&pmn.residuals),
        mean(&sw.residuals)
    );
}

#[test]
fn skipped_strokes_and_budget_flow() {
    // stroke-3 input through abstraction and truncation
    let rows: Vec<(f64, f64, u8)> = (0..30)
        .map(|i| {
            let a = i as f64 / 29.0 * std::f64::consts::PI;
            let lift = u8::from(i == 29);
            (3.0 * (a.cos() - ((i as f64 - 1.0) / 29.0 * std::f64::consts::PI).cos()), 2.5, lift)
        })
        .collect();
    let sk = primsketch::parse_stroke3(&rows).unwrap();
    assert_eq!(sk.strokes().len(), 1);
    let messages = sk.message_count();
    assert_eq!(messages, sk.strokes()[0].len().div_ceil(3));
    let kept = sk.truncate(0.34).unwrap();
    assert!(kept.message_count() <= messages);
}

#[test]
fn reconstruction_residual_matches_reported() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let set = primitive_set();
    let grid = Grid::new(32).unwrap();
    let gamma = Gamma::default();
    let stroke = common::wobbly_stroke(&mut rng);
    let sk = Sketch::new(vec![stroke.clone()], None, None).unwrap();
    let ps = abstract_sketch(&sk, set, &grid, gamma, &quick_cfg(), DEFAULT_KAPPA).unwrap();

    let rebuilt = apply_record(&set[ps.records[0].id.index()], &ps.records[0]).unwrap();
    let n = normalize_stroke(&stroke).unwrap();
    let frame: Vec<Point> = rebuilt
        .points()
        .iter()
        .map(|&p| (p - n.mu) * (2.0 / n.w))
        .collect();
    let fa = field(&frame, &grid, gamma).unwrap();
    let fb = field(n.points(), &grid, gamma).unwrap();
    let loss = dt_loss_mean(&fa, &fb).unwrap();
    assert!(
        (loss - ps.residuals[0]).abs() <= 1e-9,
        "reconstructed {loss} vs reported {}",
        ps.residuals[0]
    );
}
