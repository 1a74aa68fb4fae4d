//! Deterministic SVG rendering of sketches and their primitive
//! abstractions.

use std::fmt::Write as _;

use crate::affine::AffineError;
use crate::matcher::PrimitiveSketch;
use crate::primitives::{Primitive, PrimitiveId};
use crate::sketch::{bbox, Point, Sketch};

/// Fixed primitive-to-color legend, one entry per vocabulary slot.
pub fn primitive_color(id: PrimitiveId) -> &'static str {
    match id {
        PrimitiveId::Line => "#4363d8",
        PrimitiveId::Arc => "#e6194b",
        PrimitiveId::Circle => "#3cb44b",
        PrimitiveId::Corner => "#f58231",
        PrimitiveId::Triangle => "#911eb4",
        PrimitiveId::Square => "#f032e6",
        PrimitiveId::UShape => "#9a6324",
    }
}

#[derive(Clone, Debug)]
pub struct SvgStyle {
    /// Stroke width in canvas units; when unset, 1% of the content's
    /// larger dimension.
    pub stroke_width: Option<f64>,
    /// Margin around the content, as a fraction of its larger
    /// dimension.
    pub margin: f64,
    pub background: Option<String>,
}

impl Default for SvgStyle {
    fn default() -> Self {
        SvgStyle {
            stroke_width: None,
            margin: 0.05,
            background: Some("#ffffff".to_string()),
        }
    }
}

fn fmt_coord(v: f64) -> String {
    format!("{v:.3}")
}

fn path_d(points: &[Point]) -> String {
    let mut d = String::new();
    for (i, p) in points.iter().enumerate() {
        let cmd = if i == 0 { 'M' } else { 'L' };
        let _ = write!(d, "{}{} {} ", cmd, fmt_coord(p.x), fmt_coord(p.y));
    }
    d.trim_end().to_string()
}

fn document(paths: &[(Option<PrimitiveId>, Vec<Point>)], style: &SvgStyle) -> String {
    let all: Vec<Point> = paths.iter().flat_map(|(_, pts)| pts.iter().copied()).collect();
    let (min, max) = bbox(&all);
    let span = (max.x - min.x).max(max.y - min.y).max(1e-9);
    let margin = style.margin * span;
    let stroke_width = style.stroke_width.unwrap_or(span * 0.01).max(span * 1e-4);
    let x0 = min.x - margin;
    let y0 = min.y - margin;
    let width = (max.x - min.x) + 2.0 * margin;
    let height = (max.y - min.y) + 2.0 * margin;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\">",
        fmt_coord(x0),
        fmt_coord(y0),
        fmt_coord(width),
        fmt_coord(height)
    );
    if let Some(bg) = &style.background {
        let _ = writeln!(
            out,
            "  <rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>",
            fmt_coord(x0),
            fmt_coord(y0),
            fmt_coord(width),
            fmt_coord(height),
            bg
        );
    }
    for (id, pts) in paths {
        let (class, color) = match id {
            Some(id) => (id.name(), primitive_color(*id)),
            None => ("stroke", "#000000"),
        };
        let _ = writeln!(
            out,
            "  <path class=\"{}\" d=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"{}\" stroke-linecap=\"round\" stroke-linejoin=\"round\"/>",
            class,
            path_d(pts),
            color,
            fmt_coord(stroke_width)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Renders a human sketch: one black path per stroke.
pub fn render_sketch_svg(sk: &Sketch, style: &SvgStyle) -> String {
    let paths: Vec<(Option<PrimitiveId>, Vec<Point>)> = sk
        .strokes()
        .iter()
        .map(|s| (None, s.points().to_vec()))
        .collect();
    document(&paths, style)
}

/// Renders a primitive sketch: one path per record, colored by the
/// fixed legend and carrying the primitive id as its class.
pub fn render_primitive_svg(
    ps: &PrimitiveSketch,
    set: &[Primitive],
    style: &SvgStyle,
) -> Result<String, AffineError> {
    let sk = ps.reconstruct(set)?;
    let paths: Vec<(Option<PrimitiveId>, Vec<Point>)> = ps
        .records
        .iter()
        .zip(sk.strokes())
        .map(|(rec, s)| (Some(rec.id), s.points().to_vec()))
        .collect();
    Ok(document(&paths, style))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::{PrimitiveRecord, TransformParams};
    use crate::primitives::primitive_set;
    use crate::sketch::Stroke;

    fn one_stroke_sketch() -> Sketch {
        Sketch::new(
            vec![Stroke::new(vec![
                Point::new(0.0, 0.0),
                Point::new(10.0, 4.0),
                Point::new(20.0, 0.0),
            ])
            .unwrap()],
            None,
            None,
        )
        .unwrap()
    }

    #[test]
    fn one_path_per_stroke() {
        let svg = render_sketch_svg(&one_stroke_sketch(), &SvgStyle::default());
        assert_eq!(svg.matches("<path").count(), 1);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("viewBox"));
    }

    #[test]
    fn primitive_paths_carry_class_and_color() {
        let set = primitive_set();
        let ps = PrimitiveSketch {
            sketch_id: None,
            category: None,
            records: vec![
                PrimitiveRecord::new(
                    PrimitiveId::Circle,
                    TransformParams::IDENTITY,
                    Point::new(0.0, 0.0),
                    10.0,
                )
                .unwrap(),
                PrimitiveRecord::new(
                    PrimitiveId::Line,
                    TransformParams::IDENTITY,
                    Point::new(20.0, 0.0),
                    8.0,
                )
                .unwrap(),
            ],
            residuals: vec![0.0, 0.0],
            compat: vec![vec![], vec![]],
            skipped_strokes: vec![],
        };
        let svg = render_primitive_svg(&ps, set, &SvgStyle::default()).unwrap();
        assert!(svg.contains("class=\"circle\""));
        assert!(svg.contains("class=\"line\""));
        assert!(svg.contains(primitive_color(PrimitiveId::Circle)));
        assert!(svg.contains(primitive_color(PrimitiveId::Line)));
    }

    #[test]
    fn output_is_byte_deterministic() {
        let sk = one_stroke_sketch();
        let a = render_sketch_svg(&sk, &SvgStyle::default());
        let b = render_sketch_svg(&sk, &SvgStyle::default());
        assert_eq!(a, b);
    }
}
