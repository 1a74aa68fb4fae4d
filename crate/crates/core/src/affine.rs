//! The constrained affine family (rotate, anisotropic scale, rotate
//! with bounded single-axis scale), its application to primitives, and
//! denormalization into canvas coordinates.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::primitives::{find_primitive, Primitive, PrimitiveId};
use crate::sketch::{ModelError, Point, Sketch, Stroke};

/// Lower bound of the scaled axis; keeps shapes from collapsing into
/// lines.
pub const SCALE_MIN: f64 = 0.05;
/// Upper bound of the scaled axis; the other axis is fixed at 1.
pub const SCALE_MAX: f64 = 1.0;

#[derive(Debug, Error)]
pub enum AffineError {
    #[error("scale {0} outside [{SCALE_MIN}, {SCALE_MAX}]")]
    ScaleOutOfRange(f64),
    #[error("non-finite transform parameter")]
    NonFiniteParam,
    #[error("record is for primitive {record} but was applied to {primitive}")]
    IdMismatch {
        record: PrimitiveId,
        primitive: PrimitiveId,
    },
    #[error("no primitive with id {0} in the set")]
    UnknownId(PrimitiveId),
    #[error("cannot reconstruct a sketch from zero records")]
    EmptyRecords,
    #[error("stroke scale w must be positive and finite, got {0}")]
    BadScale(f64),
    #[error("non-finite translation")]
    BadTranslation,
    #[error("transformed primitive is degenerate: {0}")]
    Degenerate(#[from] ModelError),
}

/// Parameters of one in-family map: R(theta2) * diag(sx, 1) * R(theta1)
/// with sx in [SCALE_MIN, SCALE_MAX]. Angles are canonicalized to
/// [0, 2*pi) at construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct TransformParams {
    theta1: f64,
    sx: f64,
    theta2: f64,
}

#[derive(Deserialize)]
struct RawParams {
    theta1: f64,
    sx: f64,
    theta2: f64,
}

impl TryFrom<RawParams> for TransformParams {
    type Error = AffineError;
    fn try_from(r: RawParams) -> Result<Self, AffineError> {
        TransformParams::new(r.theta1, r.sx, r.theta2)
    }
}

impl TransformParams {
    pub const IDENTITY: TransformParams = TransformParams {
        theta1: 0.0,
        sx: 1.0,
        theta2: 0.0,
    };

    pub fn new(theta1: f64, sx: f64, theta2: f64) -> Result<Self, AffineError> {
        if !(theta1.is_finite() && sx.is_finite() && theta2.is_finite()) {
            return Err(AffineError::NonFiniteParam);
        }
        if !(SCALE_MIN..=SCALE_MAX).contains(&sx) {
            return Err(AffineError::ScaleOutOfRange(sx));
        }
        Ok(TransformParams {
            theta1: canonical_angle(theta1),
            sx,
            theta2: canonical_angle(theta2),
        })
    }

    pub fn theta1(&self) -> f64 {
        self.theta1
    }

    pub fn sx(&self) -> f64 {
        self.sx
    }

    pub fn theta2(&self) -> f64 {
        self.theta2
    }
}

/// Wraps an angle into [0, 2*pi).
pub fn canonical_angle(theta: f64) -> f64 {
    let a = theta.rem_euclid(TAU);
    if a == TAU {
        0.0
    } else {
        a
    }
}

/// A 2x2 linear map applied to column points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2 {
    /// Row-major entries [[m00, m01], [m10, m11]].
    pub m: [[f64; 2]; 2],
}

impl Mat2 {
    pub fn rotation(theta: f64) -> Mat2 {
        let (s, c) = theta.sin_cos();
        Mat2 {
            m: [[c, -s], [s, c]],
        }
    }

    pub fn apply(&self, p: Point) -> Point {
        Point::new(
            self.m[0][0] * p.x + self.m[0][1] * p.y,
            self.m[1][0] * p.x + self.m[1][1] * p.y,
        )
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn mul(&self, other: &Mat2) -> Mat2 {
        let a = &self.m;
        let b = &other.m;
        Mat2 {
            m: [
                [
                    a[0][0] * b[0][0] + a[0][1] * b[1][0],
                    a[0][0] * b[0][1] + a[0][1] * b[1][1],
                ],
                [
                    a[1][0] * b[0][0] + a[1][1] * b[1][0],
                    a[1][0] * b[0][1] + a[1][1] * b[1][1],
                ],
            ],
        }
    }
}

/// Composes the family matrix M = R(theta2) * diag(sx, 1) * R(theta1);
/// det(M) = sx.
pub fn compose(t: &TransformParams) -> Mat2 {
    let r1 = Mat2::rotation(t.theta1);
    let r2 = Mat2::rotation(t.theta2);
    let scale = Mat2 {
        m: [[t.sx, 0.0], [0.0, 1.0]],
    };
    r2.mul(&scale).mul(&r1)
}

/// One transformed-primitive stroke: six reals plus a categorical id,
/// matching the budget message format.
///
/// Reconstruction maps each canonical point x to
/// `compose(params) * x * (w / 2) + (tx, ty)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRecord")]
pub struct PrimitiveRecord {
    pub id: PrimitiveId,
    pub theta1: f64,
    pub sx: f64,
    pub theta2: f64,
    pub tx: f64,
    pub ty: f64,
    pub w: f64,
}

#[derive(Deserialize)]
struct RawRecord {
    id: PrimitiveId,
    theta1: f64,
    sx: f64,
    theta2: f64,
    tx: f64,
    ty: f64,
    w: f64,
}

impl TryFrom<RawRecord> for PrimitiveRecord {
    type Error = AffineError;
    fn try_from(r: RawRecord) -> Result<Self, AffineError> {
        let params = TransformParams::new(r.theta1, r.sx, r.theta2)?;
        PrimitiveRecord::new(r.id, params, Point::new(r.tx, r.ty), r.w)
    }
}

impl PrimitiveRecord {
    pub fn new(
        id: PrimitiveId,
        params: TransformParams,
        translation: Point,
        w: f64,
    ) -> Result<Self, AffineError> {
        if !translation.is_finite() {
            return Err(AffineError::BadTranslation);
        }
        if !(w.is_finite() && w > 0.0) {
            return Err(AffineError::BadScale(w));
        }
        Ok(PrimitiveRecord {
            id,
            theta1: params.theta1(),
            sx: params.sx(),
            theta2: params.theta2(),
            tx: translation.x,
            ty: translation.y,
            w,
        })
    }

    pub fn params(&self) -> TransformParams {
        TransformParams::new(self.theta1, self.sx, self.theta2)
            .expect("record params are validated at construction")
    }

    pub fn translation(&self) -> Point {
        Point::new(self.tx, self.ty)
    }
}

/// Re-draws a primitive as a canvas-space stroke according to a record.
pub fn apply_record(p: &Primitive, rec: &PrimitiveRecord) -> Result<Stroke, AffineError> {
    if p.id != rec.id {
        return Err(AffineError::IdMismatch {
            record: rec.id,
            primitive: p.id,
        });
    }
    let m = compose(&rec.params());
    let half = rec.w / 2.0;
    let t = rec.translation();
    let points = p
        .canonical_points()
        .iter()
        .map(|&x| m.apply(x) * half + t)
        .collect();
    Ok(Stroke::new(points)?)
}

/// Re-draws every record, in order, into the abstracted sketch.
pub fn reconstruct(
    records: &[PrimitiveRecord],
    set: &[Primitive],
    id: Option<String>,
    category: Option<String>,
) -> Result<Sketch, AffineError> {
    if records.is_empty() {
        return Err(AffineError::EmptyRecords);
    }
    let strokes = records
        .iter()
        .map(|rec| {
            let p = find_primitive(set, rec.id).ok_or(AffineError::UnknownId(rec.id))?;
            apply_record(p, rec)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Sketch::new(strokes, id, category)?)
}
