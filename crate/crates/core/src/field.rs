//! Exponentiated inverse distance transform of a polyline on a fixed
//! grid, and the field-difference loss.
//!
//! The influence of a stroke at a grid coordinate g is
//! exp(-gamma * d^2) where d is the Euclidean distance from g to the
//! nearest point of the polyline. The loss between two fields is the
//! sum (or mean) of absolute value differences over the grid.

use std::io::{self, Read, Write};

use thiserror::Error;

use crate::sketch::Point;

/// Half-extent of the square field grid. Normalized strokes live in
/// roughly [-1, 1]; the padding absorbs mean-centered shapes that
/// slightly exceed it.
pub const GRID_EXTENT: f64 = 1.5;

/// Default per-axis grid resolution.
pub const DEFAULT_GRID_RESOLUTION: usize = 64;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("grid resolution must be at least 2, got {0}")]
    BadResolution(usize),
    #[error("fields computed on different grids ({0} vs {1})")]
    GridMismatch(usize, usize),
    #[error("gamma must be positive and finite, got {0}")]
    BadGamma(f64),
    #[error("polyline needs at least 2 points")]
    DegeneratePolyline,
}

/// Smoothing factor of the exponentiated distance transform.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gamma(f64);

impl Gamma {
    pub fn new(value: f64) -> Result<Self, FieldError> {
        if value.is_finite() && value > 0.0 {
            Ok(Gamma(value))
        } else {
            Err(FieldError::BadGamma(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for Gamma {
    fn default() -> Self {
        Gamma(6.0)
    }
}

/// An n-by-n lattice of coordinates linearly spaced in
/// [-GRID_EXTENT, GRID_EXTENT]^2, corners exactly at the extent.
#[derive(Clone, Debug)]
pub struct Grid {
    resolution: usize,
    coords: Vec<Point>,
}

impl Grid {
    pub fn new(resolution: usize) -> Result<Self, FieldError> {
        if resolution < 2 {
            return Err(FieldError::BadResolution(resolution));
        }
        let n = resolution;
        let step = 2.0 * GRID_EXTENT / (n - 1) as f64;
        let axis: Vec<f64> = (0..n)
            .map(|i| {
                if i == n - 1 {
                    GRID_EXTENT
                } else {
                    -GRID_EXTENT + step * i as f64
                }
            })
            .collect();
        let mut coords = Vec::with_capacity(n * n);
        for &y in &axis {
            for &x in &axis {
                coords.push(Point::new(x, y));
            }
        }
        Ok(Grid { resolution, coords })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Row-major lattice coordinates (y outer, x inner).
    pub fn coords(&self) -> &[Point] {
        &self.coords
    }

    pub fn spacing(&self) -> f64 {
        2.0 * GRID_EXTENT / (self.resolution - 1) as f64
    }

    pub fn cell_area(&self) -> f64 {
        let s = self.spacing();
        s * s
    }
}

/// Influence values of one polyline over a grid; every value in (0, 1].
#[derive(Clone, Debug)]
pub struct Field {
    values: Vec<f64>,
    resolution: usize,
}

impl Field {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

struct Segment {
    a: Point,
    d: Point,
    inv_len_sq: f64,
}

impl Segment {
    #[inline]
    fn sq_dist(&self, g: Point) -> f64 {
        let r = ((g - self.a).dot(self.d) * self.inv_len_sq).clamp(0.0, 1.0);
        let foot = self.a + self.d * r;
        (g - foot).norm_sq()
    }
}

fn segments(polyline: &[Point]) -> Vec<Segment> {
    polyline
        .windows(2)
        .filter_map(|w| {
            let d = w[1] - w[0];
            let len_sq = d.norm_sq();
            (len_sq > 0.0).then(|| Segment {
                a: w[0],
                d,
                inv_len_sq: 1.0 / len_sq,
            })
        })
        .collect()
}

/// Squared Euclidean distance from g to the closed segment [a, b]; the
/// projection parameter is clamped to [0, 1].
pub fn point_segment_sq_dist(g: Point, a: Point, b: Point) -> f64 {
    let d = b - a;
    let len_sq = d.norm_sq();
    if len_sq == 0.0 {
        return (g - a).norm_sq();
    }
    let r = ((g - a).dot(d) / len_sq).clamp(0.0, 1.0);
    (g - (a + d * r)).norm_sq()
}

/// Minimum squared distance from g to any segment of the polyline.
pub fn min_sq_dist(g: Point, polyline: &[Point]) -> f64 {
    segments(polyline)
        .iter()
        .fold(f64::INFINITY, |best, s| best.min(s.sq_dist(g)))
}

/// Influence of the polyline at g: exp(-gamma * min squared segment
/// distance). Equals 1 exactly when g lies on the polyline.
pub fn influence(g: Point, polyline: &[Point], gamma: Gamma) -> f64 {
    (-gamma.value() * min_sq_dist(g, polyline)).exp()
}

/// Evaluates the influence at every grid coordinate.
pub fn field(polyline: &[Point], grid: &Grid, gamma: Gamma) -> Result<Field, FieldError> {
    let segs = segments(polyline);
    if segs.is_empty() {
        return Err(FieldError::DegeneratePolyline);
    }
    let coords = grid.coords();
    // stream each segment over the whole lattice; the per-point minimum
    // commutes and the inner loop vectorizes
    let mut best = vec![f64::INFINITY; coords.len()];
    for s in &segs {
        for (b, &p) in best.iter_mut().zip(coords) {
            let d = s.sq_dist(p);
            if d < *b {
                *b = d;
            }
        }
    }
    let g = gamma.value();
    let values = best.into_iter().map(|d| (-g * d).exp()).collect();
    Ok(Field {
        values,
        resolution: grid.resolution(),
    })
}

/// Sum over the grid of absolute value differences between two fields.
pub fn dt_loss(fa: &Field, fb: &Field) -> Result<f64, FieldError> {
    if fa.resolution != fb.resolution {
        return Err(FieldError::GridMismatch(fa.resolution, fb.resolution));
    }
    Ok(fa
        .values
        .iter()
        .zip(&fb.values)
        .map(|(a, b)| (a - b).abs())
        .sum())
}

/// The loss normalized per grid point, comparable across resolutions.
pub fn dt_loss_mean(fa: &Field, fb: &Field) -> Result<f64, FieldError> {
    let n = fa.values.len() as f64;
    Ok(dt_loss(fa, fb)? / n)
}

/// Writes a field as a portable float array: n, then n*n values,
/// row-major, all little-endian f64.
pub fn write_field_dump<W: Write>(field: &Field, mut w: W) -> io::Result<()> {
    w.write_all(&(field.resolution as f64).to_le_bytes())?;
    for v in &field.values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a field dump written by [`write_field_dump`].
pub fn read_field_dump<R: Read>(mut r: R) -> io::Result<Field> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    let n = f64::from_le_bytes(buf) as usize;
    let mut values = Vec::with_capacity(n * n);
    for _ in 0..n * n {
        r.read_exact(&mut buf)?;
        values.push(f64::from_le_bytes(buf));
    }
    Ok(Field {
        values,
        resolution: n,
    })
}
