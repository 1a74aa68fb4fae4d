//! Shared generators for the integration and acceptance suites.
#![allow(dead_code)]

use primsketch::{
    apply_record, primitive_set, Point, Primitive, PrimitiveId, PrimitiveRecord, Stroke,
    TransformParams,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn trace_primitive(
    set: &[Primitive],
    id: PrimitiveId,
    params: TransformParams,
    mu: Point,
    w: f64,
) -> Stroke {
    let rec = PrimitiveRecord::new(id, params, mu, w).expect("valid record");
    apply_record(&set[id.index()], &rec).expect("tracing a primitive yields a stroke")
}

/// A random in-family transform with `sx` bounded below.
pub fn random_params(rng: &mut ChaCha8Rng, sx_min: f64) -> TransformParams {
    TransformParams::new(
        rng.gen_range(0.0..std::f64::consts::TAU),
        rng.gen_range(sx_min..=1.0),
        rng.gen_range(0.0..std::f64::consts::TAU),
    )
    .expect("sampled parameters are in-family")
}

/// A random placement on a QuickDraw-like canvas.
pub fn random_placement(rng: &mut ChaCha8Rng) -> (Point, f64) {
    (
        Point::new(rng.gen_range(-100.0..100.0), rng.gen_range(-100.0..100.0)),
        rng.gen_range(5.0..150.0),
    )
}

/// A tracing of a random primitive under a random in-family transform.
pub fn random_tracing(rng: &mut ChaCha8Rng, sx_min: f64) -> (PrimitiveId, Stroke) {
    let set = primitive_set();
    let id = PrimitiveId::ALL[rng.gen_range(0..PrimitiveId::ALL.len())];
    let params = random_params(rng, sx_min);
    let (mu, w) = random_placement(rng);
    (id, trace_primitive(set, id, params, mu, w))
}

/// A tracing with per-point jitter of `noise` canvas units.
pub fn noisy_tracing(rng: &mut ChaCha8Rng, sx_min: f64, noise: f64) -> (PrimitiveId, Stroke) {
    let (id, stroke) = random_tracing(rng, sx_min);
    let points = stroke
        .points()
        .iter()
        .map(|&p| {
            p + Point::new(
                rng.gen_range(-noise..=noise),
                rng.gen_range(-noise..=noise),
            )
        })
        .collect();
    (id, Stroke::new(points).expect("jitter keeps the stroke valid"))
}

/// A smooth random polyline that is not a primitive tracing.
pub fn wobbly_stroke(rng: &mut ChaCha8Rng) -> Stroke {
    let n = rng.gen_range(8..24);
    let mut points = Vec::with_capacity(n);
    let mut pos = Point::new(rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0));
    let mut heading: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let step = rng.gen_range(3.0..9.0);
    for _ in 0..n {
        points.push(pos);
        heading += rng.gen_range(-0.7..0.7);
        pos = pos + Point::new(heading.cos(), heading.sin()) * step;
    }
    Stroke::new(points).expect("wobbly strokes have distinct points")
}
