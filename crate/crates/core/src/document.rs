//! On-disk forms of spaces, measures and tables.
//!
//! JSON numbers use the shortest representation that parses back to the same
//! binary64 value; TSV cells use 17 significant digits.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::packing::{CurvePoint, PackingObservation};
use crate::space::{MetricRule, PseudoMetricSpace};
use crate::transfer::{Construction, DiscreteMeasure, TransferKind, TransferRecord};
use crate::verify::PlotRow;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointEntry {
    pub id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Matrix,
    Euclidean,
    Max,
    Snowflake,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    #[serde(rename = "type")]
    pub kind: MetricKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Rows and columns follow the order of `points`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<Vec<f64>>>,
}

/// Space description. `c_d` and `diameter` are written on export and
/// ignored on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceDocument {
    pub points: Vec<PointEntry>,
    pub metric: MetricSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diameter: Option<f64>,
}

/// Validates a document into a space; points end up in ascending id order.
pub fn load_space(doc: &SpaceDocument) -> Result<PseudoMetricSpace> {
    if doc.points.is_empty() {
        return Err(Error::InvalidSpace("space has no points".into()));
    }
    let labels: Vec<u64> = doc.points.iter().map(|p| p.id).collect();
    let coords: Option<Vec<Vec<f64>>> = doc.points.iter().map(|p| p.coords.clone()).collect();
    let rule = match (doc.metric.kind, doc.metric.p) {
        (MetricKind::Matrix, _) => MetricRule::Matrix,
        (MetricKind::Euclidean, _) => MetricRule::Euclidean,
        (MetricKind::Max, _) => MetricRule::Max,
        (MetricKind::Snowflake, Some(p)) => MetricRule::Snowflake { p },
        (MetricKind::Snowflake, None) => {
            return Err(Error::Document("snowflake metric needs a power p".into()));
        }
    };
    if rule == MetricRule::Matrix {
        let table = doc
            .metric
            .table
            .clone()
            .ok_or_else(|| Error::Document("matrix metric needs a table".into()))?;
        let space = PseudoMetricSpace::from_table(labels.clone(), table)?;
        return match coords {
            Some(mut c) => {
                let mut order: Vec<usize> = (0..labels.len()).collect();
                order.sort_by_key(|&i| labels[i]);
                c = order.iter().map(|&i| c[i].clone()).collect();
                space.with_coordinate_metadata(c)
            }
            None => Ok(space),
        };
    }
    let coords = coords.ok_or_else(|| Error::Document(format!("{} metric needs coordinates on every point", rule.name())))?;
    if let Some(dim) = coords.first().map(Vec::len) {
        if dim == 0 || coords.iter().any(|c| c.len() != dim) {
            return Err(Error::Document("coordinates must share one positive dimension".into()));
        }
    }
    PseudoMetricSpace::from_coordinates(labels, coords, rule)
}

/// Export form of a space. Coordinate spaces at scale 1 keep their rule;
/// everything else is written as a table.
pub fn space_document(space: &PseudoMetricSpace) -> SpaceDocument {
    let coords = space.coords();
    let points = space
        .ids()
        .map(|p| PointEntry {
            id: space.label(p),
            coords: coords.map(|c| c[p].clone()),
        })
        .collect();
    let metric = match space.rule() {
        MetricRule::Euclidean if space.scale() == 1.0 => MetricSpec {
            kind: MetricKind::Euclidean,
            p: None,
            table: None,
        },
        MetricRule::Max if space.scale() == 1.0 => MetricSpec {
            kind: MetricKind::Max,
            p: None,
            table: None,
        },
        MetricRule::Snowflake { p } if space.scale() == 1.0 => MetricSpec {
            kind: MetricKind::Snowflake,
            p: Some(p),
            table: None,
        },
        _ => MetricSpec {
            kind: MetricKind::Matrix,
            p: None,
            table: Some(space.ids().map(|p| space.row(p).to_vec()).collect()),
        },
    };
    SpaceDocument {
        points,
        metric,
        c_d: Some(space.c_d()),
        diameter: Some(space.diameter()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassEntry {
    pub id: u64,
    pub mass: f64,
}

/// Constants of the construction that produced a measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureMetadata {
    pub a: f64,
    pub s_prime: f64,
    pub t_prime: f64,
    pub c1: f64,
    pub c2: f64,
    pub c4: f64,
    pub stabilization_level: usize,
    pub drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureDocument {
    pub level: usize,
    pub masses: Vec<MassEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<MeasureMetadata>,
}

/// Total-mass slack accepted by [`load_measure`].
pub const MEASURE_TOTAL_TOLERANCE: f64 = 1e-9;

/// Aligns a measure document with a space. A point of the space without an
/// entry is [`Error::UnsupportedMeasure`].
pub fn load_measure(doc: &MeasureDocument, space: &PseudoMetricSpace) -> Result<DiscreteMeasure> {
    let mut mass: Vec<Option<f64>> = vec![None; space.len()];
    for e in &doc.masses {
        let p = space
            .id_of_label(e.id)
            .ok_or_else(|| Error::InvalidMeasure(format!("point {} is not in the space", e.id)))?;
        if mass[p].is_some() {
            return Err(Error::InvalidMeasure(format!("point {} listed twice", e.id)));
        }
        if !(e.mass >= 0.0 && e.mass.is_finite()) {
            return Err(Error::InvalidMeasure(format!("point {} has mass {}", e.id, e.mass)));
        }
        mass[p] = Some(e.mass);
    }
    let mass: Vec<f64> = mass
        .into_iter()
        .enumerate()
        .map(|(p, m)| m.ok_or(Error::UnsupportedMeasure(space.label(p))))
        .collect::<Result<_>>()?;
    let total: f64 = mass.iter().sum();
    if (total - 1.0).abs() > MEASURE_TOTAL_TOLERANCE {
        return Err(Error::InvalidMeasure(format!("total mass {total}")));
    }
    Ok(DiscreteMeasure { level: doc.level, mass })
}

pub fn measure_document(measure: &DiscreteMeasure, space: &PseudoMetricSpace, metadata: Option<MeasureMetadata>) -> MeasureDocument {
    MeasureDocument {
        level: measure.level,
        masses: space
            .ids()
            .map(|p| MassEntry {
                id: space.label(p),
                mass: measure.mass[p],
            })
            .collect(),
        metadata,
    }
}

impl MeasureMetadata {
    pub fn of(construction: &Construction) -> Self {
        let k = &construction.constants;
        MeasureMetadata {
            a: k.a,
            s_prime: k.s_prime,
            t_prime: k.t_prime,
            c1: k.c1,
            c2: k.c2,
            c4: k.c4,
            stabilization_level: construction.stabilization_level,
            drift: construction.drift,
        }
    }
}

/// A real with 17 significant digits.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Tab-separated table with a header line.
pub fn tsv<I>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut out = header.join("\t");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join("\t"));
        out.push('\n');
    }
    out
}

/// Transfer log, one row per record, endpoints as point ids.
pub fn transfer_log_tsv(records: &[TransferRecord], space: &PseudoMetricSpace) -> String {
    tsv(
        &["step", "level", "kind", "source", "dest", "amount", "distance"],
        records.iter().map(|r| {
            vec![
                r.step.to_string(),
                r.level.to_string(),
                match r.kind {
                    TransferKind::Split => "split".into(),
                    TransferKind::Rebalance => "rebalance".into(),
                },
                space.label(r.source).to_string(),
                space.label(r.dest).to_string(),
                real(r.amount),
                real(r.distance),
            ]
        }),
    )
}

pub fn packing_profile_tsv(profile: &[PackingObservation], space: &PseudoMetricSpace) -> String {
    tsv(
        &["center", "r_small", "r_big", "k", "count", "exact"],
        profile.iter().map(|o| {
            vec![
                space.label(o.center).to_string(),
                real(o.r_small),
                real(o.r_big),
                real(o.k),
                o.count.to_string(),
                o.exact.to_string(),
            ]
        }),
    )
}

/// Upper and lower curves side by side; both must share the gamma grid.
pub fn curves_tsv(upper: &[CurvePoint], lower: &[CurvePoint]) -> String {
    tsv(
        &["gamma", "c_upper", "c_lower"],
        upper.iter().zip(lower).map(|(u, l)| vec![real(u.gamma), real(u.c), real(l.c)]),
    )
}

pub fn plot_tsv(rows: &[PlotRow], space: &PseudoMetricSpace) -> String {
    tsv(
        &["center", "r_small", "r_big", "k", "ratio"],
        rows.iter().map(|r| {
            vec![
                space.label(r.center).to_string(),
                real(r.r_small),
                real(r.r_big),
                real(r.k),
                real(r.ratio),
            ]
        }),
    )
}

/// Measure as `id<TAB>mass` lines.
pub fn measure_tsv(measure: &DiscreteMeasure, space: &PseudoMetricSpace) -> String {
    let mut out = String::from("id\tmass\n");
    for p in space.ids() {
        let _ = writeln!(out, "{}\t{}", space.label(p), real(measure.mass[p]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(json: &str) -> SpaceDocument {
        serde_json::from_str(json).unwrap()
    }

    #[test]
    fn coordinates_load_sorted_by_id() {
        let s = load_space(&doc(r#"{"points":[{"id":7,"coords":[1.0]},{"id":2,"coords":[0.0]}],"metric":{"type":"euclidean"}}"#)).unwrap();
        assert_eq!(s.labels(), &[2, 7]);
        assert_eq!(s.coords().unwrap()[0], vec![0.0]);
        assert_eq!(s.dist(0, 1), 1.0);
    }

    #[test]
    fn table_rows_follow_document_order() {
        let s = load_space(&doc(
            r#"{"points":[{"id":3},{"id":1},{"id":2}],"metric":{"type":"matrix","table":[[0,1,2],[1,0,4],[2,4,0]]}}"#,
        ))
        .unwrap();
        // ids 1, 2, 3 after sorting
        assert_eq!(s.dist(0, 1), 4.0);
        assert_eq!(s.dist(0, 2), 1.0);
        assert_eq!(s.dist(1, 2), 2.0);
    }

    #[test]
    fn asymmetric_table_is_rejected() {
        let r = load_space(&doc(r#"{"points":[{"id":0},{"id":1}],"metric":{"type":"matrix","table":[[0,1],[2,0]]}}"#));
        assert!(matches!(r, Err(Error::SymmetryViolation { .. })));
    }

    #[test]
    fn snowflake_needs_power() {
        let r = load_space(&doc(r#"{"points":[{"id":0,"coords":[0]}],"metric":{"type":"snowflake"}}"#));
        assert!(matches!(r, Err(Error::Document(_))));
    }

    #[test]
    fn snowflake_half_on_three_points() {
        let s = load_space(&doc(
            r#"{"points":[{"id":0,"coords":[0]},{"id":1,"coords":[0.5]},{"id":2,"coords":[1]}],"metric":{"type":"snowflake","p":0.5}}"#,
        ))
        .unwrap();
        assert_eq!(s.c_d(), 1.0);
        let text = serde_json::to_string(&space_document(&s)).unwrap();
        assert!(text.contains(r#""p":0.5"#));
    }

    #[test]
    fn export_round_trips() {
        let s = crate::space::generate_cantor(1.0 / 3.0, 3, (0.0, 1.0)).unwrap();
        for space in [s.clone(), s.normalized(0.99)] {
            let text = serde_json::to_string(&space_document(&space)).unwrap();
            let back = load_space(&serde_json::from_str(&text).unwrap()).unwrap();
            assert_eq!(back.labels(), space.labels());
            for p in space.ids() {
                assert_eq!(back.row(p), space.row(p));
            }
        }
    }

    #[test]
    fn missing_mass_entry_is_unsupported() {
        let s = PseudoMetricSpace::from_line(&[0.0, 1.0]).unwrap();
        let d = MeasureDocument {
            level: 0,
            masses: vec![MassEntry { id: 0, mass: 1.0 }],
            metadata: None,
        };
        assert_eq!(load_measure(&d, &s), Err(Error::UnsupportedMeasure(1)));
    }

    #[test]
    fn measure_round_trips() {
        let s = PseudoMetricSpace::from_line(&[0.0, 1.0, 3.0]).unwrap();
        let m = DiscreteMeasure { level: 2, mass: vec![0.1, 0.2, 0.7] };
        let text = serde_json::to_string(&measure_document(&m, &s, None)).unwrap();
        let back = load_measure(&serde_json::from_str(&text).unwrap(), &s).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn reals_keep_seventeen_digits() {
        assert_eq!(real(0.1), "1.0000000000000001e-1");
        assert_eq!(real(1.0 / 3.0).parse::<f64>().unwrap(), 1.0 / 3.0);
    }
}
