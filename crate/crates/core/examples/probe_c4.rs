use primsketch::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0407);
    let set = primitive_set();
    let grid = Grid::new(128).unwrap();
    let gamma = Gamma::default();

    let mut strokes = Vec::new();
    let mut angles = Vec::new();
    for _ in 0..25 {
        let stroke = {
            let n = rng.gen_range(22..32);
            let radius = rng.gen_range(25.0..60.0);
            let aspect = rng.gen_range(0.8..1.0);
            let amp = rng.gen_range(0.06..0.12);
            let harmonic = rng.gen_range(2..4) as f64;
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            let tilt = rng.gen_range(0.0..std::f64::consts::TAU);
            let span = rng.gen_range(0.80..0.97) * std::f64::consts::TAU;
            let center = Point::new(rng.gen_range(-40.0..40.0), rng.gen_range(-40.0..40.0));
            let (ts, tc) = tilt.sin_cos();
            let pts = (0..n)
                .map(|i| {
                    let theta = span * i as f64 / (n - 1) as f64;
                    let r = radius * (1.0 + amp * (harmonic * theta + phase).sin());
                    let x = r * theta.cos();
                    let y = r * theta.sin() * aspect;
                    center + Point::new(tc * x - ts * y, ts * x + tc * y)
                })
                .collect();
            Stroke::new(pts).unwrap()
        };
        let mut a = Vec::new();
        for _ in 0..4 {
            a.push(rng.gen_range(0.0..std::f64::consts::TAU));
        }
        strokes.push(stroke);
        angles.push(a);
    }

    for (cfg_name, cfg) in [
        (
            "c4cfg",
            FitConfig {
                coarse_scale_levels: vec![0.25, 0.5, 0.75, 0.9, 1.0],
                refine_top_k: 5,
                rel_tol: 1e-6,
                ..FitConfig::default()
            },
        ),
    ] {
        for si in 0..strokes.len() {
            let normalized = normalize_stroke(&strokes[si]).unwrap();
            let min_loss = |nrm: &NormalizedStroke| -> f64 {
                let fits = fit_all(nrm, set, &grid, gamma, &cfg).unwrap();
                matcher::select(&fits).unwrap().loss
            };
            let base = min_loss(&normalized);
            let rots: Vec<f64> = angles[si]
                .iter()
                .map(|&a| min_loss(&normalized.rotated(a)))
                .collect();
            let worst = rots
                .iter()
                .map(|&r| (base - r).abs() / base.max(r))
                .fold(0.0f64, f64::max);
            if worst > 0.025 {
                println!(
                    "{cfg_name} stroke {si:2}: base {base:.5e} rots {:?} worst {:.2}%",
                    rots.iter().map(|r| format!("{r:.4e}")).collect::<Vec<_>>(),
                    worst * 100.0
                );
            }
            if si == strokes.len() - 1 {
                println!("{cfg_name}: sweep done");
            }
        }
    }
}
