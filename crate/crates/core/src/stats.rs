//! Primitive-usage analytics over abstracted sketches.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::matcher::PrimitiveSketch;
use crate::primitives::PrimitiveId;

/// Usage percentage of one primitive within a group of records.
#[derive(Clone, Debug, Serialize)]
pub struct UsageEntry {
    pub id: PrimitiveId,
    pub percent: f64,
}

/// Per-category histogram over primitive ids, as percentages summing to
/// 100 per category (and overall).
#[derive(Clone, Debug, Serialize)]
pub struct UsageStats {
    pub total_records: usize,
    pub overall: Vec<UsageEntry>,
    pub per_category: BTreeMap<String, Vec<UsageEntry>>,
}

const UNCATEGORIZED: &str = "(uncategorized)";

fn percentages(counts: &[usize; 7]) -> Vec<UsageEntry> {
    let total: usize = counts.iter().sum();
    PrimitiveId::ALL
        .iter()
        .enumerate()
        .map(|(i, &id)| UsageEntry {
            id,
            percent: if total == 0 {
                0.0
            } else {
                100.0 * counts[i] as f64 / total as f64
            },
        })
        .collect()
}

pub fn usage_stats(results: &[PrimitiveSketch]) -> UsageStats {
    let mut overall = [0usize; 7];
    let mut by_cat: BTreeMap<String, [usize; 7]> = BTreeMap::new();
    let mut total = 0usize;
    for ps in results {
        let cat = ps
            .category
            .clone()
            .unwrap_or_else(|| UNCATEGORIZED.to_string());
        let slot = by_cat.entry(cat).or_insert([0usize; 7]);
        for rec in &ps.records {
            overall[rec.id.index()] += 1;
            slot[rec.id.index()] += 1;
            total += 1;
        }
    }
    UsageStats {
        total_records: total,
        overall: percentages(&overall),
        // categories whose sketches contributed no records cannot carry
        // a percentage distribution
        per_category: by_cat
            .into_iter()
            .filter(|(_, v)| v.iter().sum::<usize>() > 0)
            .map(|(k, v)| (k, percentages(&v)))
            .collect(),
    }
}

impl UsageStats {
    /// Ids ranked by overall usage, most used first.
    pub fn ranked(&self) -> Vec<PrimitiveId> {
        let mut order: Vec<&UsageEntry> = self.overall.iter().collect();
        order.sort_by(|a, b| b.percent.total_cmp(&a.percent).then(a.id.index().cmp(&b.id.index())));
        order.into_iter().map(|e| e.id).collect()
    }

    /// CSV mirror: one row per category plus an `overall` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("category");
        for id in PrimitiveId::ALL {
            out.push(',');
            out.push_str(id.name());
        }
        out.push('\n');
        let mut row = |name: &str, entries: &[UsageEntry]| {
            out.push_str(name);
            for e in entries {
                out.push_str(&format!(",{:.2}", e.percent));
            }
            out.push('\n');
        };
        row("overall", &self.overall);
        for (cat, entries) in &self.per_category {
            row(cat, entries);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::{PrimitiveRecord, TransformParams};
    use crate::sketch::Point;

    fn sketch_with(ids: &[PrimitiveId], category: Option<&str>) -> PrimitiveSketch {
        PrimitiveSketch {
            sketch_id: None,
            category: category.map(str::to_string),
            records: ids
                .iter()
                .map(|&id| {
                    PrimitiveRecord::new(id, TransformParams::IDENTITY, Point::ORIGIN, 2.0)
                        .unwrap()
                })
                .collect(),
            residuals: vec![0.0; ids.len()],
            compat: vec![vec![]; ids.len()],
            skipped_strokes: vec![],
        }
    }

    #[test]
    fn all_arcs_is_one_hundred_percent() {
        let stats = usage_stats(&[sketch_with(&[PrimitiveId::Arc; 4], Some("cat"))]);
        assert_eq!(stats.total_records, 4);
        for e in &stats.overall {
            let want = if e.id == PrimitiveId::Arc { 100.0 } else { 0.0 };
            assert_eq!(e.percent, want);
        }
    }

    #[test]
    fn even_split_and_sum_to_hundred() {
        let stats = usage_stats(&[sketch_with(
            &[PrimitiveId::Arc, PrimitiveId::Arc, PrimitiveId::Circle, PrimitiveId::Circle],
            Some("face"),
        )]);
        let by_id: BTreeMap<PrimitiveId, f64> =
            stats.overall.iter().map(|e| (e.id, e.percent)).collect();
        assert_eq!(by_id[&PrimitiveId::Arc], 50.0);
        assert_eq!(by_id[&PrimitiveId::Circle], 50.0);
        let total: f64 = stats.overall.iter().map(|e| e.percent).sum();
        assert!((total - 100.0).abs() < 0.01);
        let cat_total: f64 = stats.per_category["face"].iter().map(|e| e.percent).sum();
        assert!((cat_total - 100.0).abs() < 0.01);
    }

    #[test]
    fn categories_partition_records() {
        let stats = usage_stats(&[
            sketch_with(&[PrimitiveId::Line], Some("chair")),
            sketch_with(&[PrimitiveId::Circle], None),
        ]);
        assert_eq!(stats.per_category.len(), 2);
        assert!(stats.per_category.contains_key("chair"));
        assert!(stats.per_category.contains_key(UNCATEGORIZED));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let stats = usage_stats(&[sketch_with(&[PrimitiveId::Square], Some("purse"))]);
        let csv = stats.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "category,line,arc,circle,corner,triangle,square,u_shape"
        );
        assert!(lines.next().unwrap().starts_with("overall,"));
        assert!(csv.contains("purse,"));
    }

    #[test]
    fn ranked_orders_by_usage() {
        let stats = usage_stats(&[sketch_with(
            &[PrimitiveId::Circle, PrimitiveId::Circle, PrimitiveId::Arc, PrimitiveId::Line],
            None,
        )]);
        let ranked = stats.ranked();
        assert_eq!(ranked[0], PrimitiveId::Circle);
        // tie between line and arc resolves by vocabulary order
        assert_eq!(ranked[1], PrimitiveId::Line);
        assert_eq!(ranked[2], PrimitiveId::Arc);
    }
}
