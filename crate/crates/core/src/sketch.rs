//! Sketch data model: strokes, sketches, input parsers, stroke
//! normalization, and message segmentation.

use std::io::BufRead;
use std::ops::{Add, Mul, Sub};

use serde::Deserialize;
use thiserror::Error;

use crate::affine::PrimitiveRecord;

/// A 2D point in canvas units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("stroke needs at least 2 distinct points, got {0}")]
    TooFewPoints(usize),
    #[error("non-finite coordinate ({0}, {1})")]
    NonFinite(f64, f64),
    #[error("sketch has no strokes")]
    EmptySketch,
    #[error("degenerate stroke: zero-size bounding box")]
    DegenerateBoundingBox,
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("line {line}: sketch {id:?} has no usable strokes")]
    EmptySketchLine { line: usize, id: Option<String> },
    #[error("stroke-3 input is empty")]
    EmptyRows,
    #[error("stroke-3 input has no stroke with 2 or more points")]
    NoUsableStrokes,
    #[error("non-finite offset in stroke-3 row {0}")]
    NonFiniteRow(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("invalid stroke-3 JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// One continuous pen trace: an ordered polyline with at least two points.
///
/// Consecutive duplicate points are collapsed at construction so every
/// segment has positive length.
#[derive(Clone, Debug, PartialEq)]
pub struct Stroke {
    points: Vec<Point>,
}

impl Stroke {
    pub fn new(points: Vec<Point>) -> Result<Self, ModelError> {
        for p in &points {
            if !p.is_finite() {
                return Err(ModelError::NonFinite(p.x, p.y));
            }
        }
        let mut deduped: Vec<Point> = Vec::with_capacity(points.len());
        for p in points {
            if deduped.last() != Some(&p) {
                deduped.push(p);
            }
        }
        if deduped.len() < 2 {
            return Err(ModelError::TooFewPoints(deduped.len()));
        }
        Ok(Stroke { points: deduped })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Number of points, m(s).
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn mean(&self) -> Point {
        let n = self.points.len() as f64;
        let sum = self
            .points
            .iter()
            .fold(Point::ORIGIN, |acc, &p| acc + p);
        sum * (1.0 / n)
    }

    /// Axis-aligned bounding box as (min, max).
    pub fn bbox(&self) -> (Point, Point) {
        bbox(&self.points)
    }
}

/// Root-mean-square distance from the arclength centroid, under the
/// uniform-arclength measure of the polyline. Unlike a statistic over
/// the sample points, this does not depend on how densely the polyline
/// is sampled, and it is invariant under rotation.
///
/// Per segment from a to b (relative to the centroid),
/// integral of |a + t(b-a)|^2 over t in [0,1] equals
/// |a|^2 + a.(b-a) + |b-a|^2/3.
pub fn arclength_rms_radius(points: &[Point]) -> f64 {
    let mut total_len = 0.0;
    let mut centroid = Point::ORIGIN;
    for w in points.windows(2) {
        let len = (w[1] - w[0]).norm();
        total_len += len;
        centroid = centroid + (w[0] + w[1]) * (0.5 * len);
    }
    if total_len <= 0.0 {
        // all points coincident; callers guarantee otherwise
        return 0.0;
    }
    centroid = centroid * (1.0 / total_len);
    let mut acc = 0.0;
    for w in points.windows(2) {
        let a = w[0] - centroid;
        let d = w[1] - w[0];
        let len = d.norm();
        acc += len * (a.norm_sq() + a.dot(d) + d.norm_sq() / 3.0);
    }
    (acc / total_len).sqrt()
}

pub(crate) fn bbox(points: &[Point]) -> (Point, Point) {
    let mut min = Point::new(f64::INFINITY, f64::INFINITY);
    let mut max = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        min.x = min.x.min(p.x);
        min.y = min.y.min(p.y);
        max.x = max.x.max(p.x);
        max.y = max.y.max(p.y);
    }
    (min, max)
}

/// An ordered list of strokes; stroke order is drawing order and is
/// preserved by every operation in this crate.
#[derive(Clone, Debug, PartialEq)]
pub struct Sketch {
    strokes: Vec<Stroke>,
    pub id: Option<String>,
    pub category: Option<String>,
}

impl Sketch {
    pub fn new(
        strokes: Vec<Stroke>,
        id: Option<String>,
        category: Option<String>,
    ) -> Result<Self, ModelError> {
        if strokes.is_empty() {
            return Err(ModelError::EmptySketch);
        }
        Ok(Sketch { strokes, id, category })
    }

    pub fn strokes(&self) -> &[Stroke] {
        &self.strokes
    }
}

/// A stroke rescaled to span the normalized box: points are mean-centered
/// and divided by half the longest bounding-box side, so the output has
/// point mean (0, 0) and longest bbox side 2. `mu` and `w` retain the
/// original placement so `denormalize` is an exact inverse.
///
/// Because centering uses the point mean rather than the bbox center,
/// outputs may slightly exceed [-1, 1]; the field grid's +-1.5 padding
/// absorbs this.
#[derive(Clone, Debug)]
pub struct NormalizedStroke {
    points: Vec<Point>,
    pub mu: Point,
    pub w: f64,
}

impl NormalizedStroke {
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Arclength-RMS radius; the rotation- and sampling-invariant size
    /// statistic fit candidates are matched to.
    pub fn rms_radius(&self) -> f64 {
        arclength_rms_radius(&self.points)
    }

    /// The same shape rotated about the origin of the normalized frame,
    /// keeping `mu` and `w`. The result is no longer bbox-canonical;
    /// it exists for rotation-equivariance experiments on the fitter.
    pub fn rotated(&self, angle: f64) -> NormalizedStroke {
        let (s, c) = angle.sin_cos();
        let points = self
            .points
            .iter()
            .map(|p| Point::new(c * p.x - s * p.y, s * p.x + c * p.y))
            .collect();
        NormalizedStroke {
            points,
            mu: self.mu,
            w: self.w,
        }
    }

    /// Maps the normalized points back to canvas units.
    pub fn denormalize(&self) -> Stroke {
        let half = self.w / 2.0;
        let points = self.points.iter().map(|&p| p * half + self.mu).collect();
        Stroke::new(points).expect("normalized stroke denormalizes to a valid stroke")
    }
}

/// Normalizes a stroke: subtract the point mean, divide by half the
/// longest bounding-box side. Aspect ratio is preserved.
pub fn normalize_stroke(s: &Stroke) -> Result<NormalizedStroke, ModelError> {
    let mu = s.mean();
    let (min, max) = s.bbox();
    let w = (max.x - min.x).max(max.y - min.y);
    if w <= 0.0 {
        return Err(ModelError::DegenerateBoundingBox);
    }
    let inv = 2.0 / w;
    let points = s.points().iter().map(|&p| (p - mu) * inv).collect();
    Ok(NormalizedStroke { points, mu, w })
}

/// The unit of communication budget: three stroke points or one
/// primitive record, each worth six reals plus one categorical value.
#[derive(Clone, Debug, PartialEq)]
pub enum Message {
    HumanPoints {
        stroke_index: usize,
        /// 1 to 3 points; a trailing group of 1-2 points still costs a
        /// full message.
        points: Vec<Point>,
    },
    Primitive(PrimitiveRecord),
}

/// Splits each stroke, in drawing order, into consecutive groups of
/// three points. A final group of 1-2 points still forms one message.
pub fn segment_messages(sk: &Sketch) -> Vec<Message> {
    let mut out = Vec::new();
    for (stroke_index, stroke) in sk.strokes().iter().enumerate() {
        for chunk in stroke.points().chunks(3) {
            out.push(Message::HumanPoints {
                stroke_index,
                points: chunk.to_vec(),
            });
        }
    }
    out
}

#[derive(Deserialize)]
struct NdjsonLine {
    #[serde(default)]
    word: Option<String>,
    #[serde(default)]
    key_id: Option<serde_json::Value>,
    drawing: Vec<[Vec<f64>; 2]>,
}

/// Parses newline-delimited JSON where each line carries a `drawing`
/// field of `[xs, ys]` coordinate-array pairs (the QuickDraw raw
/// distribution format). `word` maps to the sketch category.
///
/// Strokes with fewer than two distinct points are dropped with a
/// warning; a sketch left with no strokes is rejected with its line
/// number.
pub fn parse_ndjson<R: BufRead>(reader: R) -> Result<Vec<Sketch>, ParseError> {
    let mut sketches = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let text = line?;
        if text.trim().is_empty() {
            continue;
        }
        let parsed: NdjsonLine =
            serde_json::from_str(&text).map_err(|e| ParseError::Line {
                line: line_no,
                msg: e.to_string(),
            })?;
        let id = parsed.key_id.map(|v| match v {
            serde_json::Value::String(s) => s,
            other => other.to_string(),
        });
        let mut strokes = Vec::with_capacity(parsed.drawing.len());
        for (si, [xs, ys]) in parsed.drawing.into_iter().enumerate() {
            if xs.len() != ys.len() {
                return Err(ParseError::Line {
                    line: line_no,
                    msg: format!(
                        "stroke {si}: {} x coordinates but {} y coordinates",
                        xs.len(),
                        ys.len()
                    ),
                });
            }
            let points: Vec<Point> = xs
                .iter()
                .zip(&ys)
                .map(|(&x, &y)| Point::new(x, y))
                .collect();
            match Stroke::new(points) {
                Ok(s) => strokes.push(s),
                Err(e) => {
                    log::warn!("line {line_no}: dropping stroke {si}: {e}");
                }
            }
        }
        if strokes.is_empty() {
            return Err(ParseError::EmptySketchLine { line: line_no, id });
        }
        sketches.push(Sketch { strokes, id, category: parsed.word });
    }
    Ok(sketches)
}

/// Serializes a sketch as one NDJSON line in the same format
/// [`parse_ndjson`] reads; parsing it back is the identity on
/// coordinates and stroke order.
pub fn to_ndjson_line(sk: &Sketch) -> String {
    let drawing: Vec<[Vec<f64>; 2]> = sk
        .strokes()
        .iter()
        .map(|s| {
            [
                s.points().iter().map(|p| p.x).collect(),
                s.points().iter().map(|p| p.y).collect(),
            ]
        })
        .collect();
    let mut obj = serde_json::Map::new();
    if let Some(word) = &sk.category {
        obj.insert("word".into(), serde_json::Value::String(word.clone()));
    }
    if let Some(id) = &sk.id {
        obj.insert("key_id".into(), serde_json::Value::String(id.clone()));
    }
    obj.insert(
        "drawing".into(),
        serde_json::to_value(&drawing).expect("coordinates serialize"),
    );
    serde_json::Value::Object(obj).to_string()
}

/// Parses the offset "stroke-3" format: rows of `(dx, dy, pen_lift)`.
///
/// Absolute positions are the cumulative sum of offsets starting from
/// the origin; the origin itself is the first drawn point when the
/// first row has the pen down. A row with `pen_lift = 1` terminates the
/// current stroke after its point.
pub fn parse_stroke3(rows: &[(f64, f64, u8)]) -> Result<Sketch, ParseError> {
    if rows.is_empty() {
        return Err(ParseError::EmptyRows);
    }
    let mut pos = Point::ORIGIN;
    let mut current: Vec<Point> = if rows[0].2 == 0 {
        vec![Point::ORIGIN]
    } else {
        Vec::new()
    };
    let mut strokes = Vec::new();
    let mut flush = |pts: &mut Vec<Point>| {
        if !pts.is_empty() {
            match Stroke::new(std::mem::take(pts)) {
                Ok(s) => strokes.push(s),
                Err(e) => log::warn!("dropping stroke-3 segment: {e}"),
            }
        }
    };
    for (i, &(dx, dy, lift)) in rows.iter().enumerate() {
        if !dx.is_finite() || !dy.is_finite() {
            return Err(ParseError::NonFiniteRow(i));
        }
        pos = pos + Point::new(dx, dy);
        current.push(pos);
        if lift != 0 {
            flush(&mut current);
        }
    }
    flush(&mut current);
    drop(flush);
    if strokes.is_empty() {
        return Err(ParseError::NoUsableStrokes);
    }
    Ok(Sketch { strokes, id: None, category: None })
}

/// Parses a JSON array of `[dx, dy, pen_lift]` triplets.
pub fn parse_stroke3_json(bytes: &[u8]) -> Result<Sketch, ParseError> {
    let rows: Vec<(f64, f64, u8)> = serde_json::from_slice(bytes)?;
    parse_stroke3(&rows)
}
