//! Finite pseudo-metric spaces.
//!
//! A [`PseudoMetricSpace`] owns a materialized symmetric distance table over
//! its points together with the least quasi-triangle constant `c_d`, i.e. the
//! smallest `c_d >= 1` with `d(x, z) <= c_d * (d(x, y) + d(y, z))` for every
//! triple.
//!
//! Point ids are dense indices `0..n` ordered by the user-facing label, so
//! "ascending id order" and "ascending label order" coincide. Coordinate
//! derived distances are snapped to a binary grid of spacing
//! `2^(floor(log2(diameter)) - 40)` so that lengths which agree mathematically
//! (a Cantor gap and a net radius `9^-m`, say) compare equal bit for bit.
//! Explicit distance tables are stored verbatim.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense index of a point inside a [`PseudoMetricSpace`].
pub type PointId = usize;

/// Bits of relative resolution kept by the distance grid.
const GRID_BITS: i32 = 40;

/// How distances are derived from coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum MetricRule {
    /// Explicit distance table, no coordinate rule.
    Matrix,
    Euclidean,
    /// Max-coordinate (Chebyshev) distance.
    Max,
    /// Euclidean distance raised to the power `p` in `(0, 1]`.
    Snowflake { p: f64 },
}

impl MetricRule {
    /// Rules that are guaranteed to produce a true metric (`c_d = 1`).
    pub fn is_metric(&self) -> bool {
        !matches!(self, MetricRule::Matrix)
    }

    fn validate(&self) -> Result<()> {
        match *self {
            MetricRule::Snowflake { p } if !(p > 0.0 && p <= 1.0) => Err(Error::InvalidSpace(
                format!("snowflake power {p} is outside (0, 1]"),
            )),
            _ => Ok(()),
        }
    }

    fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            MetricRule::Matrix => unreachable!("matrix rule has no coordinate formula"),
            MetricRule::Euclidean => euclidean(a, b),
            MetricRule::Max => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max),
            MetricRule::Snowflake { p } => euclidean(a, b).powf(p),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MetricRule::Matrix => "matrix",
            MetricRule::Euclidean => "euclidean",
            MetricRule::Max => "max",
            MetricRule::Snowflake { .. } => "snowflake",
        }
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    if a.len() == 1 {
        return (a[0] - b[0]).abs();
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn grid_for(diameter: f64) -> Option<f64> {
    (diameter > 0.0 && diameter.is_finite())
        .then(|| 2f64.powi(diameter.log2().floor() as i32 - GRID_BITS))
}

fn snap(x: f64, quantum: f64) -> f64 {
    (x / quantum).round() * quantum
}

/// A finite pseudo-metric space with a materialized distance table.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoMetricSpace {
    labels: Vec<u64>,
    coords: Option<Vec<Vec<f64>>>,
    rule: MetricRule,
    scale: f64,
    dist: Vec<f64>,
    quantum: Option<f64>,
    c_d: f64,
    diameter: f64,
    min_distance: f64,
}

/// Open ball `{ y : d(center, y) < radius }`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: PointId,
    pub radius: f64,
    pub members: Vec<PointId>,
}

impl PseudoMetricSpace {
    /// Builds a space from coordinates under a coordinate metric rule.
    ///
    /// Labels must be unique; points are reordered by ascending label.
    pub fn from_coordinates(
        labels: Vec<u64>,
        coords: Vec<Vec<f64>>,
        rule: MetricRule,
    ) -> Result<Self> {
        rule.validate()?;
        if rule == MetricRule::Matrix {
            return Err(Error::InvalidSpace(
                "matrix rule requires an explicit table".into(),
            ));
        }
        if labels.len() != coords.len() {
            return Err(Error::InvalidSpace(format!(
                "{} labels for {} coordinate vectors",
                labels.len(),
                coords.len()
            )));
        }
        if labels.is_empty() {
            return Err(Error::InvalidSpace("space has no points".into()));
        }
        let dim = coords[0].len();
        if dim == 0 {
            return Err(Error::InvalidSpace("points have no coordinates".into()));
        }
        for (label, c) in labels.iter().zip(&coords) {
            if c.len() != dim {
                return Err(Error::InvalidSpace(format!(
                    "point {label} has {} coordinates, expected {dim}",
                    c.len()
                )));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidSpace(format!(
                    "point {label} has a non-finite coordinate"
                )));
            }
        }
        let (labels, coords) = sort_by_label(labels, coords)?;
        let n = labels.len();
        let mut dist = vec![0.0; n * n];
        let mut diameter: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = rule.eval(&coords[i], &coords[j]);
                dist[i * n + j] = d;
                dist[j * n + i] = d;
                diameter = diameter.max(d);
            }
        }
        let quantum = grid_for(diameter);
        if let Some(q) = quantum {
            dist.iter_mut().for_each(|d| *d = snap(*d, q));
        }
        let mut space = PseudoMetricSpace {
            labels,
            coords: Some(coords),
            rule,
            scale: 1.0,
            dist,
            quantum,
            c_d: 1.0,
            diameter: 0.0,
            min_distance: f64::INFINITY,
        };
        space.check_degenerate()?;
        space.refresh_extent();
        space.c_d = quasi_triangle_constant(&space);
        Ok(space)
    }

    /// Builds a space from an explicit distance table (rows in `labels` order).
    pub fn from_table(labels: Vec<u64>, table: Vec<Vec<f64>>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::InvalidSpace("space has no points".into()));
        }
        if table.len() != n || table.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidSpace(format!(
                "distance table must be {n} x {n}"
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let v = table[i][j];
                let bad = !v.is_finite() || v < 0.0 || (i == j && v != 0.0);
                if bad {
                    return Err(Error::InvalidDistance {
                        a: labels[i],
                        b: labels[j],
                        value: v,
                    });
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if table[i][j] != table[j][i] {
                    return Err(Error::SymmetryViolation {
                        a: labels[i],
                        b: labels[j],
                        ab: table[i][j],
                        ba: table[j][i],
                    });
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| labels[i]);
        check_unique(&order, &labels)?;
        let mut dist = vec![0.0; n * n];
        for (a, &i) in order.iter().enumerate() {
            for (b, &j) in order.iter().enumerate() {
                dist[a * n + b] = table[i][j];
            }
        }
        let labels = order.iter().map(|&i| labels[i]).collect();
        let mut space = PseudoMetricSpace {
            labels,
            coords: None,
            rule: MetricRule::Matrix,
            scale: 1.0,
            dist,
            quantum: None,
            c_d: 1.0,
            diameter: 0.0,
            min_distance: f64::INFINITY,
        };
        space.check_degenerate()?;
        space.refresh_extent();
        space.c_d = quasi_triangle_constant(&space);
        Ok(space)
    }

    /// Points on a line (labels `0..n`), euclidean distance.
    pub fn from_line(xs: &[f64]) -> Result<Self> {
        Self::from_coordinates(
            (0..xs.len() as u64).collect(),
            xs.iter().map(|&x| vec![x]).collect(),
            MetricRule::Euclidean,
        )
    }

    /// Attaches coordinates to a table space as metadata only.
    pub fn with_coordinate_metadata(mut self, coords: Vec<Vec<f64>>) -> Result<Self> {
        if coords.len() != self.len() {
            return Err(Error::InvalidSpace("coordinate count mismatch".into()));
        }
        self.coords = Some(coords);
        Ok(self)
    }

    fn check_degenerate(&self) -> Result<()> {
        let n = self.len();
        for i in 0..n {
            for j in (i + 1)..n {
                if self.dist(i, j) == 0.0 {
                    return Err(Error::DegeneratePair {
                        a: self.labels[i],
                        b: self.labels[j],
                    });
                }
            }
        }
        Ok(())
    }

    fn refresh_extent(&mut self) {
        let n = self.len();
        let mut diameter: f64 = 0.0;
        let mut min_distance = f64::INFINITY;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = self.dist(i, j);
                diameter = diameter.max(d);
                min_distance = min_distance.min(d);
            }
        }
        self.diameter = diameter;
        self.min_distance = min_distance;
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn ids(&self) -> std::ops::Range<PointId> {
        0..self.len()
    }

    pub fn labels(&self) -> &[u64] {
        &self.labels
    }

    pub fn label(&self, id: PointId) -> u64 {
        self.labels[id]
    }

    pub fn id_of_label(&self, label: u64) -> Option<PointId> {
        self.labels.binary_search(&label).ok()
    }

    pub fn coords(&self) -> Option<&[Vec<f64>]> {
        self.coords.as_deref()
    }

    pub fn rule(&self) -> MetricRule {
        self.rule
    }

    /// Factor applied to the underlying distances (1 unless normalized).
    pub fn scale(&self) -> f64 {
        self.scale
    }

    #[inline]
    pub fn dist(&self, a: PointId, b: PointId) -> f64 {
        self.dist[a * self.len() + b]
    }

    /// Distances from `a` to every point, indexed by id.
    #[inline]
    pub fn row(&self, a: PointId) -> &[f64] {
        let n = self.len();
        &self.dist[a * n..(a + 1) * n]
    }

    pub fn c_d(&self) -> f64 {
        self.c_d
    }

    /// Largest pairwise distance (0 for a singleton).
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Smallest positive pairwise distance (infinite for a singleton).
    pub fn min_distance(&self) -> f64 {
        self.min_distance
    }

    /// Spacing of the distance grid, if distances are snapped.
    pub fn quantum(&self) -> Option<f64> {
        self.quantum
    }

    /// Maps a length onto the same grid as the stored distances, so that
    /// thresholds compare consistently against table entries.
    pub fn canonical(&self, length: f64) -> f64 {
        match self.quantum {
            Some(q) if length.is_finite() => snap(length, q),
            _ => length,
        }
    }

    pub fn ball(&self, center: PointId, radius: f64) -> Ball {
        let members = self
            .row(center)
            .iter()
            .enumerate()
            .filter(|(_, &d)| d < radius)
            .map(|(y, _)| y)
            .collect();
        Ball {
            center,
            radius,
            members,
        }
    }

    /// Sorted distinct positive distances.
    pub fn distinct_distances(&self) -> Vec<f64> {
        let n = self.len();
        let mut out = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
        for i in 0..n {
            out.extend_from_slice(&self.row(i)[i + 1..]);
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Rescales distances so that the diameter becomes `target`.
    pub fn normalized(&self, target: f64) -> PseudoMetricSpace {
        if self.len() < 2 || self.diameter == 0.0 {
            return self.clone();
        }
        let factor = target / self.diameter;
        let quantum = self.quantum.and_then(|_| grid_for(target));
        let dist = self
            .dist
            .iter()
            .map(|&d| match quantum {
                Some(q) => snap(d * factor, q),
                None => d * factor,
            })
            .collect();
        let mut out = PseudoMetricSpace {
            dist,
            quantum,
            scale: self.scale * factor,
            ..self.clone()
        };
        out.refresh_extent();
        out
    }

    /// Sub-space on the given ids (relabelled by their original labels).
    pub fn restrict(&self, ids: &[PointId]) -> Result<PseudoMetricSpace> {
        let mut ids = ids.to_vec();
        ids.sort_unstable();
        ids.dedup();
        if ids.is_empty() {
            return Err(Error::InvalidSpace("empty restriction".into()));
        }
        let m = ids.len();
        let mut dist = vec![0.0; m * m];
        for (a, &i) in ids.iter().enumerate() {
            for (b, &j) in ids.iter().enumerate() {
                dist[a * m + b] = self.dist(i, j);
            }
        }
        let mut out = PseudoMetricSpace {
            labels: ids.iter().map(|&i| self.labels[i]).collect(),
            coords: self
                .coords
                .as_ref()
                .map(|c| ids.iter().map(|&i| c[i].clone()).collect()),
            dist,
            ..self.clone()
        };
        out.refresh_extent();
        out.c_d = quasi_triangle_constant(&out);
        Ok(out)
    }
}

fn sort_by_label(labels: Vec<u64>, coords: Vec<Vec<f64>>) -> Result<(Vec<u64>, Vec<Vec<f64>>)> {
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by_key(|&i| labels[i]);
    check_unique(&order, &labels)?;
    let mut coords: Vec<Option<Vec<f64>>> = coords.into_iter().map(Some).collect();
    let sorted_coords = order.iter().map(|&i| coords[i].take().unwrap()).collect();
    Ok((order.iter().map(|&i| labels[i]).collect(), sorted_coords))
}

fn check_unique(order: &[usize], labels: &[u64]) -> Result<()> {
    for w in order.windows(2) {
        if labels[w[0]] == labels[w[1]] {
            return Err(Error::InvalidSpace(format!(
                "duplicate point id {}",
                labels[w[0]]
            )));
        }
    }
    Ok(())
}

/// Least admissible quasi-triangle constant.
///
/// Coordinate rules are true metrics and return 1 directly; explicit tables
/// are scanned over all triples.
pub fn quasi_triangle_constant(space: &PseudoMetricSpace) -> f64 {
    if space.rule().is_metric() {
        1.0
    } else {
        quasi_triangle_constant_exhaustive(space)
    }
}

/// `max(1, max d(x,z) / (d(x,y) + d(y,z)))` over triples with `x != z` and
/// `y` distinct from both.
pub fn quasi_triangle_constant_exhaustive(space: &PseudoMetricSpace) -> f64 {
    let n = space.len();
    let mut best: f64 = 1.0;
    for x in 0..n {
        let rx = space.row(x);
        for z in (x + 1)..n {
            let rz = space.row(z);
            let mut shortest = f64::INFINITY;
            for y in 0..n {
                if y != x && y != z {
                    shortest = shortest.min(rx[y] + rz[y]);
                }
            }
            if shortest.is_finite() {
                best = best.max(rx[z] / shortest);
            }
        }
    }
    best
}

/// Endpoints of the surviving intervals of the iterated-deletion Cantor
/// construction: each interval is replaced by its two end subintervals of
/// relative length `ratio`, `level` times, starting from `[a, b]`.
pub fn generate_cantor(ratio: f64, level: u32, interval: (f64, f64)) -> Result<PseudoMetricSpace> {
    if !(ratio > 0.0 && ratio <= 0.5) {
        return Err(Error::InvalidRatio(ratio));
    }
    let (a, b) = interval;
    if !(a.is_finite() && b.is_finite() && b > a) {
        return Err(Error::InvalidInterval(a, b));
    }
    let points = cantor_endpoints(ratio, level, a, b);
    PseudoMetricSpace::from_line(&points)
}

/// The coordinates emitted by [`generate_cantor`], ascending.
pub fn cantor_endpoints(ratio: f64, level: u32, a: f64, b: f64) -> Vec<f64> {
    let mut intervals = vec![(a, b)];
    for _ in 0..level {
        intervals = intervals
            .into_iter()
            .flat_map(|(lo, hi)| {
                let len = (hi - lo) * ratio;
                [(lo, lo + len), (hi - len, hi)]
            })
            .collect();
    }
    let mut points: Vec<f64> = intervals.into_iter().flat_map(|(lo, hi)| [lo, hi]).collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    points
}

/// Union of two coordinate spaces under the same rule; coincident points are
/// merged and ids reassigned in lexicographic coordinate order.
pub fn union_spaces(a: &PseudoMetricSpace, b: &PseudoMetricSpace) -> Result<PseudoMetricSpace> {
    if a.rule() != b.rule() {
        return Err(Error::MetricMismatch(format!(
            "{:?} vs {:?}",
            a.rule(),
            b.rule()
        )));
    }
    if a.scale() != 1.0 || b.scale() != 1.0 {
        return Err(Error::MetricMismatch("normalized spaces cannot be merged".into()));
    }
    let (Some(ca), Some(cb)) = (a.coords(), b.coords()) else {
        return Err(Error::MetricMismatch(
            "union needs coordinates on both sides".into(),
        ));
    };
    if a.rule() == MetricRule::Matrix {
        return Err(Error::MetricMismatch("matrix spaces have no coordinate rule".into()));
    }
    if ca[0].len() != cb[0].len() {
        return Err(Error::MetricMismatch(format!(
            "dimension {} vs {}",
            ca[0].len(),
            cb[0].len()
        )));
    }
    let mut all: Vec<Vec<f64>> = ca.iter().chain(cb).cloned().collect();
    all.sort_by(|x, y| {
        x.iter()
            .zip(y)
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let extent = a.diameter().max(b.diameter()).max(
        all.first()
            .zip(all.last())
            .map(|(f, l)| a.rule().eval(f, l))
            .unwrap_or(0.0),
    );
    let merge_below = grid_for(extent).map_or(0.0, |q| q / 2.0);
    let mut merged: Vec<Vec<f64>> = Vec::with_capacity(all.len());
    for p in all {
        match merged.last() {
            Some(last) if a.rule().eval(last, &p) <= merge_below => {}
            _ => merged.push(p),
        }
    }
    PseudoMetricSpace::from_coordinates((0..merged.len() as u64).collect(), merged, a.rule())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[&[f64]]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| r.to_vec()).collect()
    }

    #[test]
    fn two_points_on_a_line() {
        let s = PseudoMetricSpace::from_line(&[0.0, 1.0]).unwrap();
        assert_eq!(s.dist(0, 1), 1.0);
        assert_eq!(s.dist(1, 0), 1.0);
        assert_eq!(s.dist(0, 0), 0.0);
        assert_eq!(s.c_d(), 1.0);
        assert_eq!(s.diameter(), 1.0);
    }

    #[test]
    fn snowflake_of_line_is_a_metric() {
        let s = PseudoMetricSpace::from_coordinates(
            vec![0, 1, 2],
            vec![vec![0.0], vec![0.5], vec![1.0]],
            MetricRule::Snowflake { p: 0.5 },
        )
        .unwrap();
        assert_eq!(s.c_d(), 1.0);
        // brute force over the three triples; sqrt(1) / (2 sqrt(0.5)) < 1
        assert!(quasi_triangle_constant_exhaustive(&s) <= 1.0 + 1e-12);
    }

    #[test]
    fn asymmetric_table_rejected() {
        let err = PseudoMetricSpace::from_table(vec![0, 1], table(&[&[0.0, 1.0], &[2.0, 0.0]]))
            .unwrap_err();
        assert!(matches!(err, Error::SymmetryViolation { a: 0, b: 1, .. }));
    }

    #[test]
    fn zero_off_diagonal_rejected() {
        let err = PseudoMetricSpace::from_table(vec![0, 1], table(&[&[0.0, 0.0], &[0.0, 0.0]]))
            .unwrap_err();
        assert!(matches!(err, Error::DegeneratePair { .. }));
    }

    #[test]
    fn negative_entry_rejected() {
        let err = PseudoMetricSpace::from_table(vec![0, 1], table(&[&[0.0, -1.0], &[-1.0, 0.0]]))
            .unwrap_err();
        assert!(matches!(err, Error::InvalidDistance { .. }));
    }

    #[test]
    fn squared_line_has_constant_two() {
        // {0, 1, 2} with d = |x - y|^2: the equispaced triple gives 4 / (1 + 1)
        let s = PseudoMetricSpace::from_table(
            vec![0, 1, 2],
            table(&[&[0.0, 1.0, 4.0], &[1.0, 0.0, 1.0], &[4.0, 1.0, 0.0]]),
        )
        .unwrap();
        assert_eq!(s.c_d(), 2.0);
    }

    #[test]
    fn singleton_and_doubleton_constants() {
        let one = PseudoMetricSpace::from_table(vec![7], table(&[&[0.0]])).unwrap();
        assert_eq!(one.c_d(), 1.0);
        assert_eq!(one.diameter(), 0.0);
        let two = PseudoMetricSpace::from_table(vec![0, 1], table(&[&[0.0, 3.0], &[3.0, 0.0]]))
            .unwrap();
        assert_eq!(two.c_d(), 1.0);
    }

    #[test]
    fn labels_are_sorted() {
        let s = PseudoMetricSpace::from_coordinates(
            vec![5, 2],
            vec![vec![1.0], vec![0.0]],
            MetricRule::Euclidean,
        )
        .unwrap();
        assert_eq!(s.labels(), &[2, 5]);
        assert_eq!(s.coords().unwrap()[0], vec![0.0]);
        assert_eq!(s.id_of_label(5), Some(1));
    }

    #[test]
    fn duplicate_labels_rejected() {
        let err = PseudoMetricSpace::from_coordinates(
            vec![1, 1],
            vec![vec![0.0], vec![1.0]],
            MetricRule::Euclidean,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidSpace(_)));
    }

    #[test]
    fn bad_snowflake_power_rejected() {
        let err = PseudoMetricSpace::from_coordinates(
            vec![0, 1],
            vec![vec![0.0], vec![1.0]],
            MetricRule::Snowflake { p: 1.5 },
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidSpace(_)));
    }

    #[test]
    fn cantor_one_step() {
        let close = |got: Vec<f64>, expect: &[f64]| {
            assert_eq!(got.len(), expect.len());
            for (p, e) in got.iter().zip(expect) {
                assert!((p - e).abs() < 1e-15, "{got:?}");
            }
        };
        close(cantor_endpoints(1.0 / 3.0, 1, 0.0, 1.0), &[0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]);
        close(cantor_endpoints(1.0 / 3.0, 0, 0.0, 1.0), &[0.0, 1.0]);
        close(cantor_endpoints(1.0 / 9.0, 1, 1.0, 2.0), &[1.0, 10.0 / 9.0, 17.0 / 9.0, 2.0]);
    }

    #[test]
    fn cantor_rejects_bad_inputs() {
        assert!(matches!(
            generate_cantor(0.6, 2, (0.0, 1.0)),
            Err(Error::InvalidRatio(_))
        ));
        assert!(matches!(
            generate_cantor(0.0, 2, (0.0, 1.0)),
            Err(Error::InvalidRatio(_))
        ));
        assert!(matches!(
            generate_cantor(0.3, 2, (1.0, 1.0)),
            Err(Error::InvalidInterval(..))
        ));
    }

    #[test]
    fn half_ratio_merges_shared_midpoints() {
        let s = generate_cantor(0.5, 3, (0.0, 1.0)).unwrap();
        assert_eq!(s.len(), 9);
    }

    #[test]
    fn union_merges_the_junction() {
        let c1 = generate_cantor(1.0 / 3.0, 1, (0.0, 1.0)).unwrap();
        let c2 = generate_cantor(1.0 / 9.0, 1, (1.0, 2.0)).unwrap();
        let f = union_spaces(&c1, &c2).unwrap();
        assert_eq!(f.len(), 7);
        assert_eq!(f.coords().unwrap()[3], vec![1.0]);
    }

    #[test]
    fn union_is_idempotent() {
        let c = generate_cantor(1.0 / 3.0, 3, (0.0, 1.0)).unwrap();
        let u = union_spaces(&c, &c).unwrap();
        assert_eq!(u.len(), c.len());
        assert_eq!(u.coords(), c.coords());
    }

    #[test]
    fn disjoint_union_diameter() {
        let a = PseudoMetricSpace::from_line(&[0.0, 1.0]).unwrap();
        let b = PseudoMetricSpace::from_line(&[2.0, 3.0]).unwrap();
        let u = union_spaces(&a, &b).unwrap();
        assert_eq!(u.len(), 4);
        assert_eq!(u.diameter(), 3.0);
        assert_eq!(u.dist(1, 2), 1.0);
    }

    #[test]
    fn union_rejects_mixed_rules() {
        let a = PseudoMetricSpace::from_line(&[0.0, 1.0]).unwrap();
        let b = PseudoMetricSpace::from_coordinates(
            vec![0, 1],
            vec![vec![0.0], vec![1.0]],
            MetricRule::Max,
        )
        .unwrap();
        assert!(matches!(union_spaces(&a, &b), Err(Error::MetricMismatch(_))));
    }

    #[test]
    fn grid_makes_equal_lengths_bitwise_equal() {
        // 1 + 8/81 and 10/9 differ by 1/81 only up to rounding noise
        let s = PseudoMetricSpace::from_line(&[1.0, 1.0 + 8.0 / 81.0, 10.0 / 9.0, 2.0]).unwrap();
        assert_eq!(s.dist(1, 2), s.canonical(1.0 / 81.0));
        assert_eq!(s.dist(0, 2), s.canonical(1.0 / 9.0));
    }

    #[test]
    fn normalization_rescales_diameter() {
        let s = generate_cantor(1.0 / 3.0, 2, (0.0, 3.0)).unwrap();
        let n = s.normalized(0.99);
        assert!((n.diameter() - 0.99).abs() < 1e-12);
        assert!((n.scale() - 0.33).abs() < 1e-12);
        assert_eq!(n.c_d(), s.c_d());
    }

    #[test]
    fn ball_is_open() {
        let s = PseudoMetricSpace::from_line(&[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(s.ball(0, 1.0).members, vec![0]);
        assert_eq!(s.ball(0, 1.5).members, vec![0, 1]);
    }
}
