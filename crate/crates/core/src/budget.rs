//! Message accounting and budget-constrained truncation for human and
//! primitive sketches.
//!
//! A human message is three stroke points; a primitive message is one
//! record. Both carry six reals plus one categorical value, and both
//! encode to the same number of bytes under the canonical binary
//! encoding (six little-endian f32 values followed by one u8).

use serde::Serialize;
use thiserror::Error;

use crate::affine::PrimitiveRecord;
use crate::matcher::PrimitiveSketch;
use crate::primitives::PrimitiveId;
use crate::sketch::{segment_messages, Message, Sketch, Stroke};

/// Bytes of one encoded message of either kind.
pub const MESSAGE_BYTES: usize = 6 * 4 + 1;

#[derive(Debug, Error)]
pub enum BudgetError {
    #[error("budget fraction must be in (0, 1], got {0}")]
    BadFraction(f64),
    #[error("order must be a permutation of 0..{expected}")]
    BadOrder { expected: usize },
    #[error("truncation kept no drawable stroke")]
    NothingKept,
    #[error("malformed message encoding")]
    BadEncoding,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    Human,
    Primitive,
}

#[derive(Clone, Debug, Serialize)]
pub struct BudgetReport {
    pub total_messages: usize,
    pub kept_messages: usize,
    pub budget_fraction: f64,
    pub kind: MessageKind,
}

/// Messages that survive an N% budget: floor of the fraction with a
/// minimum of one message, so tiny budgets still communicate something.
pub fn kept_count(total: usize, fraction: f64) -> Result<usize, BudgetError> {
    if !(fraction.is_finite() && fraction > 0.0 && fraction <= 1.0) {
        return Err(BudgetError::BadFraction(fraction));
    }
    if total == 0 {
        return Ok(0);
    }
    Ok(((fraction * total as f64).floor() as usize).max(1))
}

fn keep_set(total: usize, fraction: f64, order: Option<&[usize]>) -> Result<Vec<usize>, BudgetError> {
    let k = kept_count(total, fraction)?;
    let mut kept: Vec<usize> = match order {
        None => (0..k).collect(),
        Some(order) => {
            if order.len() != total {
                return Err(BudgetError::BadOrder { expected: total });
            }
            let mut seen = vec![false; total];
            for &i in order {
                if i >= total || seen[i] {
                    return Err(BudgetError::BadOrder { expected: total });
                }
                seen[i] = true;
            }
            order[..k].to_vec()
        }
    };
    // kept messages are replayed in drawing order
    kept.sort_unstable();
    Ok(kept)
}

/// Anything measurable in budget messages and truncatable to a prefix
/// of them.
pub trait Budgeted: Sized {
    fn message_count(&self) -> usize;

    fn kind(&self) -> MessageKind;

    /// Keeps the first `max(1, floor(fraction * total))` messages in
    /// drawing order.
    fn truncate(&self, fraction: f64) -> Result<Self, BudgetError> {
        self.truncate_with_order(fraction, None)
    }

    /// Like [`Budgeted::truncate`], but an external ranker may supply
    /// the message order (most important first). Kept messages are
    /// still replayed in drawing order.
    fn truncate_with_order(
        &self,
        fraction: f64,
        order: Option<&[usize]>,
    ) -> Result<Self, BudgetError>;

    fn budget_report(&self, fraction: f64) -> Result<BudgetReport, BudgetError> {
        let total = self.message_count();
        Ok(BudgetReport {
            total_messages: total,
            kept_messages: kept_count(total, fraction)?,
            budget_fraction: fraction,
            kind: self.kind(),
        })
    }
}

impl Budgeted for Sketch {
    fn message_count(&self) -> usize {
        self.strokes().iter().map(|s| s.len().div_ceil(3)).sum()
    }

    fn kind(&self) -> MessageKind {
        MessageKind::Human
    }

    fn truncate_with_order(
        &self,
        fraction: f64,
        order: Option<&[usize]>,
    ) -> Result<Self, BudgetError> {
        let messages = segment_messages(self);
        let kept = keep_set(messages.len(), fraction, order)?;
        let mut per_stroke: Vec<Vec<crate::sketch::Point>> =
            vec![Vec::new(); self.strokes().len()];
        for &mi in &kept {
            if let Message::HumanPoints { stroke_index, points } = &messages[mi] {
                per_stroke[*stroke_index].extend_from_slice(points);
            }
        }
        let strokes: Vec<Stroke> = per_stroke
            .into_iter()
            .filter(|pts| !pts.is_empty())
            .filter_map(|pts| match Stroke::new(pts) {
                Ok(s) => Some(s),
                Err(e) => {
                    log::warn!("truncation dropped a fragment: {e}");
                    None
                }
            })
            .collect();
        if strokes.is_empty() {
            return Err(BudgetError::NothingKept);
        }
        Ok(Sketch::new(strokes, self.id.clone(), self.category.clone())
            .expect("kept strokes are nonempty"))
    }
}

impl Budgeted for PrimitiveSketch {
    fn message_count(&self) -> usize {
        self.records.len()
    }

    fn kind(&self) -> MessageKind {
        MessageKind::Primitive
    }

    fn truncate_with_order(
        &self,
        fraction: f64,
        order: Option<&[usize]>,
    ) -> Result<Self, BudgetError> {
        let kept = keep_set(self.records.len(), fraction, order)?;
        let pick = |v: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            kept.iter().filter_map(|&i| v.get(i).cloned()).collect()
        };
        Ok(PrimitiveSketch {
            sketch_id: self.sketch_id.clone(),
            category: self.category.clone(),
            records: kept.iter().map(|&i| self.records[i].clone()).collect(),
            residuals: kept.iter().filter_map(|&i| self.residuals.get(i).copied()).collect(),
            compat: pick(&self.compat),
            skipped_strokes: self.skipped_strokes.clone(),
        })
    }
}

/// Human-vs-primitive message accounting for one sketch, with kept
/// counts at the standard 10/20/30% budgets.
#[derive(Clone, Debug, Serialize)]
pub struct CompressionSummary {
    pub sketch_id: Option<String>,
    pub human_messages: usize,
    pub primitive_messages: usize,
    /// primitive / human message count.
    pub ratio: f64,
    pub kept: Vec<BudgetLine>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BudgetLine {
    pub fraction: f64,
    pub human_kept: usize,
    pub primitive_kept: usize,
}

pub fn compression_summary(sk: &Sketch, ps: &PrimitiveSketch) -> CompressionSummary {
    let human = sk.message_count();
    let prim = ps.message_count();
    let kept = [0.1, 0.2, 0.3]
        .iter()
        .map(|&fraction| BudgetLine {
            fraction,
            human_kept: kept_count(human, fraction).expect("valid fraction"),
            primitive_kept: kept_count(prim, fraction).expect("valid fraction"),
        })
        .collect();
    CompressionSummary {
        sketch_id: sk.id.clone(),
        human_messages: human,
        primitive_messages: prim,
        ratio: prim as f64 / human as f64,
        kept,
    }
}

/// Canonical binary encoding: six little-endian f32 values plus one u8
/// categorical. Human messages carry up to three points (missing
/// coordinates padded with zero) and the stroke index modulo 256;
/// primitive messages carry the record parameters and the vocabulary
/// rank. This is the accounting encoding behind the information-parity
/// claim, not a general interchange format.
pub fn encode_message(m: &Message) -> [u8; MESSAGE_BYTES] {
    let mut out = [0u8; MESSAGE_BYTES];
    let (reals, tag): ([f32; 6], u8) = match m {
        Message::HumanPoints { stroke_index, points } => {
            let mut reals = [0.0f32; 6];
            for (i, p) in points.iter().take(3).enumerate() {
                reals[2 * i] = p.x as f32;
                reals[2 * i + 1] = p.y as f32;
            }
            (reals, (*stroke_index % 256) as u8)
        }
        Message::Primitive(rec) => (
            [
                rec.theta1 as f32,
                rec.sx as f32,
                rec.theta2 as f32,
                rec.tx as f32,
                rec.ty as f32,
                rec.w as f32,
            ],
            rec.id.index() as u8,
        ),
    };
    for (i, r) in reals.iter().enumerate() {
        out[4 * i..4 * i + 4].copy_from_slice(&r.to_le_bytes());
    }
    out[MESSAGE_BYTES - 1] = tag;
    out
}

/// Decodes a primitive message encoded by [`encode_message`]; lossless
/// at f32 precision.
pub fn decode_primitive_message(bytes: &[u8; MESSAGE_BYTES]) -> Result<PrimitiveRecord, BudgetError> {
    let mut reals = [0.0f64; 6];
    for (i, r) in reals.iter_mut().enumerate() {
        let mut b = [0u8; 4];
        b.copy_from_slice(&bytes[4 * i..4 * i + 4]);
        *r = f32::from_le_bytes(b) as f64;
    }
    let id = PrimitiveId::from_index(bytes[MESSAGE_BYTES - 1] as usize)
        .ok_or(BudgetError::BadEncoding)?;
    let params = crate::affine::TransformParams::new(reals[0], reals[1], reals[2])
        .map_err(|_| BudgetError::BadEncoding)?;
    PrimitiveRecord::new(id, params, crate::sketch::Point::new(reals[3], reals[4]), reals[5])
        .map_err(|_| BudgetError::BadEncoding)
}
