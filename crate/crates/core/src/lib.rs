//! Abstract free-hand vector sketches by re-drawing every stroke as the
//! best-fitting affine-transformed drawing primitive.
//!
//! The pipeline per stroke: normalize into the canonical frame, render
//! an exponentiated distance field on a fixed grid, minimize the
//! field-difference loss over a rotate-scale-rotate family for each of
//! the seven vocabulary primitives, and keep the best fit as one
//! compact record (six reals plus a categorical id). Records support
//! budgeted communication, reconstruction, SVG rendering, and usage
//! analytics; a least-squares line/arc baseline shares the same record
//! schema.

pub mod affine;
pub mod budget;
pub mod cli;
pub mod field;
pub mod fitter;
pub mod matcher;
pub mod primitives;
pub mod sketch;
pub mod stats;
pub mod svg;
pub mod sw;

pub use affine::{
    apply_record, compose, reconstruct, PrimitiveRecord, TransformParams, SCALE_MAX, SCALE_MIN,
};
pub use budget::{compression_summary, encode_message, Budgeted, BudgetReport, MESSAGE_BYTES};
pub use field::{
    dt_loss, dt_loss_mean, field, influence, point_segment_sq_dist, Field, Gamma, Grid,
    DEFAULT_GRID_RESOLUTION, GRID_EXTENT,
};
pub use fitter::{fit_all, fit_primitive, FitConfig, FitResult, FitTarget};
pub use matcher::{abstract_sketch, compatibility, select, weighted_loss, PrimitiveSketch, DEFAULT_KAPPA};
pub use primitives::{primitive_set, Primitive, PrimitiveId};
pub use sketch::{
    arclength_rms_radius, normalize_stroke, parse_ndjson, parse_stroke3, segment_messages,
    to_ndjson_line, Message, NormalizedStroke, Point, Sketch, Stroke,
};
pub use stats::{usage_stats, UsageStats};
pub use svg::{primitive_color, render_primitive_svg, render_sketch_svg, SvgStyle};
pub use sw::{fit_arc_ls, fit_line_ls, sw_abstract, SwFit, SwKind};
