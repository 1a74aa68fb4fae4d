//! The drawing-primitive vocabulary: seven canonical shapes shipped as
//! an embedded, versioned JSON document.

use std::fmt;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::sketch::Point;

/// Stable identifier of a drawing primitive, in vocabulary order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimitiveId {
    Line,
    Arc,
    Circle,
    Corner,
    Triangle,
    Square,
    UShape,
}

impl PrimitiveId {
    pub const ALL: [PrimitiveId; 7] = [
        PrimitiveId::Line,
        PrimitiveId::Arc,
        PrimitiveId::Circle,
        PrimitiveId::Corner,
        PrimitiveId::Triangle,
        PrimitiveId::Square,
        PrimitiveId::UShape,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PrimitiveId::Line => "line",
            PrimitiveId::Arc => "arc",
            PrimitiveId::Circle => "circle",
            PrimitiveId::Corner => "corner",
            PrimitiveId::Triangle => "triangle",
            PrimitiveId::Square => "square",
            PrimitiveId::UShape => "u_shape",
        }
    }

    /// Rank in vocabulary order; also the categorical value in the
    /// canonical binary message encoding.
    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&p| p == self).unwrap()
    }

    pub fn from_index(i: usize) -> Option<PrimitiveId> {
        Self::ALL.get(i).copied()
    }
}

impl fmt::Display for PrimitiveId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A canonical polyline in normalized coordinates: point mean at the
/// origin, longest bounding-box side exactly 2.
#[derive(Clone, Debug)]
pub struct Primitive {
    pub id: PrimitiveId,
    canonical_points: Vec<Point>,
}

impl Primitive {
    pub fn canonical_points(&self) -> &[Point] {
        &self.canonical_points
    }
}

#[derive(Deserialize)]
struct PrimitiveDoc {
    version: u32,
    primitives: Vec<PrimitiveEntry>,
}

#[derive(Deserialize)]
struct PrimitiveEntry {
    id: PrimitiveId,
    points: Vec<[f64; 2]>,
}

static EMBEDDED: &str = include_str!("../data/primitives.json");

static SET: LazyLock<(u32, Vec<Primitive>)> = LazyLock::new(|| {
    let doc: PrimitiveDoc =
        serde_json::from_str(EMBEDDED).expect("embedded primitive set is valid JSON");
    let primitives: Vec<Primitive> = doc
        .primitives
        .into_iter()
        .map(|e| Primitive {
            id: e.id,
            canonical_points: e.points.iter().map(|&[x, y]| Point::new(x, y)).collect(),
        })
        .collect();
    assert_eq!(primitives.len(), PrimitiveId::ALL.len());
    for (i, p) in primitives.iter().enumerate() {
        assert_eq!(p.id, PrimitiveId::ALL[i], "embedded set must be in vocabulary order");
    }
    (doc.version, primitives)
});

/// The embedded 7-primitive vocabulary, in vocabulary order.
pub fn primitive_set() -> &'static [Primitive] {
    &SET.1
}

/// Version of the embedded primitive document.
pub fn primitive_set_version() -> u32 {
    SET.0
}

/// Looks up a primitive by id in a set.
pub fn find_primitive(set: &[Primitive], id: PrimitiveId) -> Option<&Primitive> {
    set.iter().find(|p| p.id == id)
}
