//! Shape-Words comparison baseline: least-squares fitting of lines and
//! circular arcs, one shape per stroke, emitted in the shared
//! primitive-record schema so budget accounting is unchanged.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use thiserror::Error;

use crate::affine::{PrimitiveRecord, TransformParams, SCALE_MAX, SCALE_MIN};
use crate::field::{dt_loss_mean, field, Gamma, Grid};
use crate::matcher::PrimitiveSketch;
use crate::primitives::{Primitive, PrimitiveId};
use crate::sketch::{normalize_stroke, Point, Sketch, Stroke};

#[derive(Debug, Error)]
pub enum SwError {
    #[error("arc fitting needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("points are collinear or nearly so; fall back to a line")]
    NearCollinear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SwKind {
    Line,
    Arc,
}

#[derive(Clone, Debug)]
pub enum SwGeometry {
    Line {
        /// A point on the line (the point centroid).
        point: Point,
        /// Unit direction.
        direction: Point,
    },
    Arc {
        center: Point,
        radius: f64,
        /// Unwrapped angles: `end_angle - start_angle` is the signed
        /// sweep of the points around the center.
        start_angle: f64,
        end_angle: f64,
    },
}

/// A least-squares line or arc bound to one stroke.
#[derive(Clone, Debug)]
pub struct SwFit {
    pub kind: SwKind,
    pub geometry: SwGeometry,
    /// Mean squared point distance to the fitted shape.
    pub residual: f64,
}

/// Total-least-squares line through the points: the principal axis of
/// the centered point cloud. The residual is the mean squared
/// perpendicular distance (the smaller covariance eigenvalue).
pub fn fit_line_ls(s: &Stroke) -> SwFit {
    let m = s.len() as f64;
    let mu = s.mean();
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in s.points() {
        let d = *p - mu;
        sxx += d.x * d.x;
        sxy += d.x * d.y;
        syy += d.y * d.y;
    }
    sxx /= m;
    sxy /= m;
    syy /= m;
    let tr = sxx + syy;
    let half_gap = (sxx - syy) / 2.0;
    let lambda1 = tr / 2.0 + (half_gap * half_gap + sxy * sxy).sqrt();
    let v1 = Point::new(sxy, lambda1 - sxx);
    let v2 = Point::new(lambda1 - syy, sxy);
    let v = if v1.norm_sq() >= v2.norm_sq() { v1 } else { v2 };
    let direction = if v.norm_sq() > 0.0 {
        v * (1.0 / v.norm())
    } else if sxx >= syy {
        Point::new(1.0, 0.0)
    } else {
        Point::new(0.0, 1.0)
    };
    SwFit {
        kind: SwKind::Line,
        geometry: SwGeometry::Line { point: mu, direction },
        residual: (tr - lambda1).max(0.0),
    }
}

/// Algebraic circle fit (Kasa): linear least squares on
/// x^2 + y^2 + B x + C y + D = 0 over centroid-shifted coordinates. The
/// arc is limited to the angular span of the points; the residual is
/// the mean squared radial distance.
pub fn fit_arc_ls(s: &Stroke) -> Result<SwFit, SwError> {
    let m = s.len();
    if m < 3 {
        return Err(SwError::TooFewPoints(m));
    }
    let mu = s.mean();
    let mf = m as f64;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    let (mut sxz, mut syz, mut sz) = (0.0, 0.0, 0.0);
    for p in s.points() {
        let q = *p - mu;
        let z = q.norm_sq();
        sxx += q.x * q.x;
        sxy += q.x * q.y;
        syy += q.y * q.y;
        sxz += q.x * z;
        syz += q.y * z;
        sz += z;
    }
    // centered coordinates zero the first-moment terms, leaving a 2x2
    // solve for (B, C) and D = -sz/m
    let det = sxx * syy - sxy * sxy;
    if det <= 1e-12 * (sxx + syy) * (sxx + syy) {
        return Err(SwError::NearCollinear);
    }
    let b = (-sxz * syy + syz * sxy) / det;
    let c = (-syz * sxx + sxz * sxy) / det;
    let d = -sz / mf;
    let center_local = Point::new(-b / 2.0, -c / 2.0);
    let r_sq = center_local.norm_sq() - d;
    if !(r_sq.is_finite() && r_sq > 0.0) {
        return Err(SwError::NearCollinear);
    }
    let radius = r_sq.sqrt();
    let center = center_local + mu;

    let (min, max) = s.bbox();
    let bbox_side = (max.x - min.x).max(max.y - min.y);
    if radius > 1e4 * bbox_side {
        return Err(SwError::NearCollinear);
    }

    let residual = s
        .points()
        .iter()
        .map(|&p| {
            let e = (p - center).norm() - radius;
            e * e
        })
        .sum::<f64>()
        / mf;

    // unwrap the point angles so the span survives the +-pi seam
    let first = s.points()[0] - center;
    let start_angle = first.y.atan2(first.x);
    let mut unwrapped = start_angle;
    let mut prev_raw = start_angle;
    for p in &s.points()[1..] {
        let d = *p - center;
        let a = d.y.atan2(d.x);
        unwrapped += wrap_pi(a - prev_raw);
        prev_raw = a;
    }
    let end_angle = unwrapped;

    Ok(SwFit {
        kind: SwKind::Arc,
        geometry: SwGeometry::Arc {
            center,
            radius,
            start_angle,
            end_angle,
        },
        residual,
    })
}

fn wrap_pi(a: f64) -> f64 {
    let mut x = a.rem_euclid(2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    }
    x
}

/// Longest sweep used when emitting a record for a near-closed arc;
/// keeps the chord between the arc endpoints from degenerating.
const MAX_RECORD_SWEEP: f64 = 1.95 * PI;

fn line_record_from_geometry(s: &Stroke, point: Point, direction: Point) -> PrimitiveRecord {
    // clip to the projections of the stroke endpoints
    let first = s.points()[0];
    let last = *s.points().last().unwrap();
    let mut t0 = (first - point).dot(direction);
    let mut t1 = (last - point).dot(direction);
    if (t1 - t0).abs() < 1e-9 {
        // closed strokes project their endpoints to the same spot; span
        // the whole cloud instead
        t0 = f64::INFINITY;
        t1 = f64::NEG_INFINITY;
        for p in s.points() {
            let t = (*p - point).dot(direction);
            t0 = t0.min(t);
            t1 = t1.max(t);
        }
    }
    let e0 = point + direction * t0;
    let e1 = point + direction * t1;
    let chord = e1 - e0;
    let psi = chord.y.atan2(chord.x);
    let w = chord.norm().max(1e-9);
    let mid = (e0 + e1) * 0.5;
    PrimitiveRecord::new(
        PrimitiveId::Line,
        TransformParams::new(0.0, 1.0, psi).expect("sx = 1 is in-family"),
        mid,
        w,
    )
    .expect("line record parameters are finite")
}

/// Maps the canonical arc onto a fitted circular arc with the in-family
/// transform through the arc endpoints and midpoint: the canonical
/// semicircle becomes the half-ellipse with one axis along the chord
/// and the other through the arc midpoint.
fn arc_record_from_geometry(
    arc_primitive: &Primitive,
    center: Point,
    radius: f64,
    start_angle: f64,
    end_angle: f64,
) -> Option<PrimitiveRecord> {
    let sweep = (end_angle - start_angle).clamp(-MAX_RECORD_SWEEP, MAX_RECORD_SWEEP);
    let a0 = start_angle;
    let a1 = start_angle + sweep;
    let mid = start_angle + sweep / 2.0;
    let at = |a: f64| center + Point::new(a.cos(), a.sin()) * radius;
    let p_start = at(a0);
    let p_end = at(a1);
    let p_mid = at(mid);
    let q = (p_start + p_end) * 0.5;
    let mut c1 = (p_end - p_start) * 0.5;
    let c2 = p_mid - q;
    if c1.norm() < 1e-9 || c2.norm() < 1e-9 {
        return None;
    }
    // the family has positive determinant; flip the traversal if needed
    if c1.x * c2.y - c1.y * c2.x < 0.0 {
        c1 = c1 * -1.0;
    }
    let p_len = c1.norm();
    let q_len = c2.norm();
    let alpha = c1.y.atan2(c1.x);
    let (theta1, sx, theta2, w) = if p_len <= q_len {
        (0.0, (p_len / q_len).clamp(SCALE_MIN, SCALE_MAX), alpha, 2.0 * q_len)
    } else {
        (
            FRAC_PI_2,
            (q_len / p_len).clamp(SCALE_MIN, SCALE_MAX),
            alpha - FRAC_PI_2,
            2.0 * p_len,
        )
    };
    // translation: the canonical chord midpoint sits at minus the raw
    // point mean, so only the canonical endpoints are needed
    let canon = arc_primitive.canonical_points();
    let canon_chord_mid = (canon[0] + *canon.last().unwrap()) * 0.5;
    let l_apply = |v: Point| c1 * v.x + c2 * v.y;
    let t = q - l_apply(canon_chord_mid);
    PrimitiveRecord::new(
        PrimitiveId::Arc,
        TransformParams::new(theta1, sx, theta2).ok()?,
        t,
        w,
    )
    .ok()
}

/// Abstracts a sketch with the line/arc vocabulary: per stroke, fit
/// both by least squares, keep the lower-residual kind, and emit a
/// record in the shared schema. Residuals attached to the result are
/// field-difference losses in the stroke's normalized frame, directly
/// comparable with the matcher's.
pub fn sw_abstract(
    sk: &Sketch,
    set: &[Primitive],
    grid: &Grid,
    gamma: Gamma,
) -> PrimitiveSketch {
    let arc_primitive = &set[PrimitiveId::Arc.index()];
    let line_primitive = &set[PrimitiveId::Line.index()];
    let outcomes: Vec<(usize, Option<(PrimitiveRecord, f64)>)> = sk
        .strokes()
        .par_iter()
        .enumerate()
        .map(|(i, stroke)| {
            let normalized = match normalize_stroke(stroke) {
                Ok(n) => n,
                Err(e) => {
                    log::warn!("sw: skipping stroke {i}: {e}");
                    return (i, None);
                }
            };
            let line = fit_line_ls(stroke);
            let arc = fit_arc_ls(stroke).ok();
            let use_arc = arc
                .as_ref()
                .map(|a| a.residual < line.residual)
                .unwrap_or(false);
            let record = if use_arc {
                let SwGeometry::Arc { center, radius, start_angle, end_angle } =
                    arc.unwrap().geometry
                else {
                    unreachable!()
                };
                arc_record_from_geometry(arc_primitive, center, radius, start_angle, end_angle)
            } else {
                None
            }
            .unwrap_or_else(|| {
                let SwGeometry::Line { point, direction } = line.geometry else {
                    unreachable!()
                };
                line_record_from_geometry(stroke, point, direction)
            });

            let primitive = if record.id == PrimitiveId::Arc {
                arc_primitive
            } else {
                line_primitive
            };
            let rebuilt = crate::affine::apply_record(primitive, &record)
                .expect("record ids match their primitives");
            let inv = 2.0 / normalized.w;
            let frame: Vec<Point> = rebuilt
                .points()
                .iter()
                .map(|&p| (p - normalized.mu) * inv)
                .collect();
            let residual = match (
                field(&frame, grid, gamma),
                field(normalized.points(), grid, gamma),
            ) {
                (Ok(fa), Ok(fb)) => dt_loss_mean(&fa, &fb).expect("same grid"),
                _ => f64::INFINITY,
            };
            (i, Some((record, residual)))
        })
        .collect();

    let mut records = Vec::new();
    let mut residuals = Vec::new();
    let mut skipped = Vec::new();
    for (i, o) in outcomes {
        match o {
            Some((rec, res)) => {
                records.push(rec);
                residuals.push(res);
            }
            None => skipped.push(i),
        }
    }
    let compat = vec![Vec::new(); records.len()];
    PrimitiveSketch {
        sketch_id: sk.id.clone(),
        category: sk.category.clone(),
        records,
        residuals,
        compat,
        skipped_strokes: skipped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::budget::Budgeted;
    use crate::primitives::primitive_set;

    fn pts(v: &[(f64, f64)]) -> Stroke {
        Stroke::new(v.iter().map(|&(x, y)| Point::new(x, y)).collect()).unwrap()
    }

    #[test]
    fn line_fit_collinear_points() {
        let s = pts(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0), (3.5, 3.5)]);
        let fit = fit_line_ls(&s);
        assert!(fit.residual < 1e-15);
        let SwGeometry::Line { direction, .. } = fit.geometry else {
            panic!()
        };
        assert!((direction.y / direction.x - 1.0).abs() < 1e-9);
    }

    #[test]
    fn line_fit_three_point_oracle() {
        // hand-solved total least squares: horizontal line y = 1/3,
        // residual 2/9
        let s = pts(&[(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)]);
        let fit = fit_line_ls(&s);
        let SwGeometry::Line { point, direction } = fit.geometry else {
            panic!()
        };
        assert!((fit.residual - 2.0 / 9.0).abs() < 1e-12);
        assert!(direction.y.abs() < 1e-12, "direction {direction:?}");
        assert!((point.y - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn line_residual_invariant_under_rigid_motion() {
        let s = pts(&[(0.0, 0.0), (1.0, 0.8), (2.0, 0.1), (3.0, 1.2)]);
        let base = fit_line_ls(&s).residual;
        let angle: f64 = 0.77;
        let (sn, cs) = angle.sin_cos();
        let moved = Stroke::new(
            s.points()
                .iter()
                .map(|p| Point::new(cs * p.x - sn * p.y + 5.0, sn * p.x + cs * p.y - 11.0))
                .collect(),
        )
        .unwrap();
        let rot = fit_line_ls(&moved).residual;
        assert!((base - rot).abs() < 1e-9);
    }

    #[test]
    fn arc_fit_recovers_exact_circle() {
        let pts_on_circle: Vec<Point> = (0..12)
            .map(|i| {
                let a = 0.3 + i as f64 * 0.45;
                Point::new(4.0 + 2.5 * a.cos(), -1.0 + 2.5 * a.sin())
            })
            .collect();
        let fit = fit_arc_ls(&Stroke::new(pts_on_circle).unwrap()).unwrap();
        let SwGeometry::Arc { center, radius, .. } = fit.geometry else {
            panic!()
        };
        assert!((center - Point::new(4.0, -1.0)).norm() < 1e-6);
        assert!((radius - 2.5).abs() < 1e-6);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn arc_fit_three_points_is_circumcircle() {
        let a = Point::new(0.0, 0.0);
        let b = Point::new(2.0, 0.0);
        let c = Point::new(1.0, 1.0);
        let fit = fit_arc_ls(&Stroke::new(vec![a, b, c]).unwrap()).unwrap();
        let SwGeometry::Arc { center, radius, .. } = fit.geometry else {
            panic!()
        };
        // circumcircle of (0,0),(2,0),(1,1): center (1, 0), radius 1
        assert!((center - Point::new(1.0, 0.0)).norm() < 1e-9);
        assert!((radius - 1.0).abs() < 1e-9);
        assert!(fit.residual < 1e-18);
    }

    #[test]
    fn arc_fit_rejects_collinear() {
        let s = pts(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0)]);
        assert!(matches!(fit_arc_ls(&s), Err(SwError::NearCollinear)));
        let two = pts(&[(0.0, 0.0), (1.0, 0.0)]);
        assert!(matches!(fit_arc_ls(&two), Err(SwError::TooFewPoints(2))));
    }

    #[test]
    fn arc_span_tracks_the_points() {
        let pts_on_arc: Vec<Point> = (0..=8)
            .map(|i| {
                let a = -0.4 + i as f64 * 0.25;
                Point::new(a.cos(), a.sin())
            })
            .collect();
        let fit = fit_arc_ls(&Stroke::new(pts_on_arc).unwrap()).unwrap();
        let SwGeometry::Arc { start_angle, end_angle, .. } = fit.geometry else {
            panic!()
        };
        assert!((start_angle - (-0.4)).abs() < 1e-6);
        assert!((end_angle - 1.6).abs() < 1e-6);
    }

    #[test]
    fn sw_abstract_picks_kinds_and_stays_budget_compatible() {
        let set = primitive_set();
        let grid = Grid::new(24).unwrap();
        let gamma = Gamma::default();
        let straight = pts(&[(0.0, 0.0), (3.0, 0.1), (6.0, -0.1), (9.0, 0.0)]);
        let semicircle = Stroke::new(
            (0..=10)
                .map(|i| {
                    let a = PI * i as f64 / 10.0;
                    Point::new(5.0 * a.cos(), 5.0 * a.sin() + 2.0)
                })
                .collect(),
        )
        .unwrap();
        let sk = Sketch::new(vec![straight, semicircle], None, None).unwrap();
        let ps = sw_abstract(&sk, set, &grid, gamma);
        assert_eq!(ps.records.len(), 2);
        assert_eq!(ps.records[0].id, PrimitiveId::Line);
        assert_eq!(ps.records[1].id, PrimitiveId::Arc);
        assert_eq!(ps.message_count(), 2);
        assert!(ps.residuals.iter().all(|r| r.is_finite()));
        // records reconstruct through the shared pipeline
        let rebuilt = ps.reconstruct(set).unwrap();
        assert_eq!(rebuilt.strokes().len(), 2);
    }

    #[test]
    fn sw_arc_record_reproduces_a_semicircle_closely() {
        let set = primitive_set();
        let grid = Grid::new(48).unwrap();
        let gamma = Gamma::default();
        let semicircle = Stroke::new(
            (0..=12)
                .map(|i| {
                    let a = PI * i as f64 / 12.0;
                    Point::new(3.0 * a.cos() + 1.0, 3.0 * a.sin() - 2.0)
                })
                .collect(),
        )
        .unwrap();
        let sk = Sketch::new(vec![semicircle], None, None).unwrap();
        let ps = sw_abstract(&sk, set, &grid, gamma);
        assert_eq!(ps.records[0].id, PrimitiveId::Arc);
        assert!(
            ps.residuals[0] < 5e-3,
            "semicircle residual {}",
            ps.residuals[0]
        );
    }
}
