//! Best-primitive selection per stroke, loss-based compatibility
//! scores, the weighted diagnostic loss, and abstracted-sketch
//! assembly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::affine::PrimitiveRecord;
use crate::field::{Gamma, Grid};
use crate::fitter::{fit_with_target, transformed_candidate, FitConfig, FitError, FitResult, FitTarget};
use crate::primitives::{Primitive, PrimitiveId};
use crate::sketch::{normalize_stroke, Sketch};

/// Softmax temperature over negated fitted losses.
pub const DEFAULT_KAPPA: f64 = 0.2;

#[derive(Debug, Error)]
pub enum MatchError {
    #[error("compatibility needs at least one fit")]
    NoFits,
    #[error("kappa must be positive and finite, got {0}")]
    BadKappa(f64),
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// A probability distribution over primitives scoring how well each can
/// represent a stroke; the argmax always coincides with the
/// minimum-loss fit.
#[derive(Clone, Debug)]
pub struct Compatibility {
    scores: Vec<(PrimitiveId, f64)>,
    pub kappa: f64,
}

impl Compatibility {
    pub fn scores(&self) -> &[(PrimitiveId, f64)] {
        &self.scores
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.scores.iter().map(|&(_, p)| p).collect()
    }
}

/// Softmax over (-loss / kappa), one entry per fit.
pub fn compatibility(fits: &[FitResult], kappa: f64) -> Result<Compatibility, MatchError> {
    if fits.is_empty() {
        return Err(MatchError::NoFits);
    }
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(MatchError::BadKappa(kappa));
    }
    let logits: Vec<f64> = fits.iter().map(|f| -f.loss / kappa).collect();
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    let scores = fits
        .iter()
        .zip(&exps)
        .map(|(f, &e)| (f.primitive_id, e / total))
        .collect();
    Ok(Compatibility { scores, kappa })
}

/// Compatibility-weighted sum of fitted losses; a per-stroke diagnostic.
pub fn weighted_loss(fits: &[FitResult], comp: &Compatibility) -> f64 {
    debug_assert_eq!(fits.len(), comp.scores.len());
    fits.iter()
        .zip(comp.scores())
        .map(|(f, &(id, p))| {
            debug_assert_eq!(f.primitive_id, id);
            p * f.loss
        })
        .sum()
}

/// The minimum-loss fit; ties break toward the earlier primitive in
/// vocabulary order.
pub fn select(fits: &[FitResult]) -> Option<&FitResult> {
    fits.iter().min_by(|a, b| {
        a.loss
            .total_cmp(&b.loss)
            .then(a.primitive_id.index().cmp(&b.primitive_id.index()))
    })
}

/// The compressed, budget-accountable representation of a sketch: one
/// primitive record per source stroke, in drawing order, with residual
/// losses and compatibility distributions attached for analytics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PrimitiveSketch {
    pub sketch_id: Option<String>,
    pub category: Option<String>,
    pub records: Vec<PrimitiveRecord>,
    /// Per-record field-difference loss at the selected fit, normalized
    /// per grid point.
    pub residuals: Vec<f64>,
    /// Per-record compatibility distribution in vocabulary order; empty
    /// for pipelines that do not compute one.
    pub compat: Vec<Vec<f64>>,
    /// Indices of source strokes skipped as degenerate.
    pub skipped_strokes: Vec<usize>,
}

impl PrimitiveSketch {
    pub fn reconstruct(&self, set: &[Primitive]) -> Result<Sketch, crate::affine::AffineError> {
        crate::affine::reconstruct(
            &self.records,
            set,
            self.sketch_id.clone(),
            self.category.clone(),
        )
    }
}

/// Re-draws every stroke of a sketch as its best-fitting primitive:
/// normalize, fit all primitives against the shared stroke field,
/// select the minimum-loss fit, and bind it to the stroke's placement.
///
/// Degenerate strokes are skipped with a warning and recorded.
pub fn abstract_sketch(
    sk: &Sketch,
    set: &[Primitive],
    grid: &Grid,
    gamma: Gamma,
    cfg: &FitConfig,
    kappa: f64,
) -> Result<PrimitiveSketch, MatchError> {
    cfg.validate()?;
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(MatchError::BadKappa(kappa));
    }
    struct PerStroke {
        record: PrimitiveRecord,
        residual: f64,
        compat: Vec<f64>,
    }
    let outcomes: Vec<(usize, Option<PerStroke>)> = sk
        .strokes()
        .par_iter()
        .enumerate()
        .map(|(i, stroke)| {
            let normalized = match normalize_stroke(stroke) {
                Ok(n) => n,
                Err(e) => {
                    log::warn!("skipping stroke {i}: {e}");
                    return (i, None);
                }
            };
            let target = match FitTarget::new(&normalized, grid, gamma) {
                Ok(t) => t,
                Err(e) => {
                    log::warn!("skipping stroke {i}: {e}");
                    return (i, None);
                }
            };
            let fits: Vec<FitResult> = set
                .iter()
                .map(|p| fit_with_target(&target, p, grid, gamma, cfg))
                .collect();
            let best = select(&fits).expect("primitive set is nonempty");
            let comp = compatibility(&fits, kappa).expect("fits nonempty, kappa validated");
            let primitive = &set[fits
                .iter()
                .position(|f| f.primitive_id == best.primitive_id)
                .expect("selected fit comes from the set")];
            // the candidate was scored after matching the stroke's RMS
            // radius; fold that factor into the stored stroke scale
            let (_, k) = transformed_candidate(primitive, &best.params, target.rms());
            let record = PrimitiveRecord::new(
                best.primitive_id,
                best.params,
                normalized.mu,
                normalized.w * k,
            )
            .expect("fit produces a valid record");
            (
                i,
                Some(PerStroke {
                    record,
                    residual: best.loss,
                    compat: comp.probabilities(),
                }),
            )
        })
        .collect();

    let mut records = Vec::new();
    let mut residuals = Vec::new();
    let mut compat = Vec::new();
    let mut skipped = Vec::new();
    for (i, outcome) in outcomes {
        match outcome {
            Some(o) => {
                records.push(o.record);
                residuals.push(o.residual);
                compat.push(o.compat);
            }
            None => skipped.push(i),
        }
    }
    Ok(PrimitiveSketch {
        sketch_id: sk.id.clone(),
        category: sk.category.clone(),
        records,
        residuals,
        compat,
        skipped_strokes: skipped,
    })
}
