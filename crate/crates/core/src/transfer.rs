//! Level-by-level mass transfer along a net hierarchy.
//!
//! A refinement takes a measure `f0` on `S_m` to a measure `f1` on `S_{m+1}`:
//! the mass of each `e` is first spread evenly over its children
//! `S_{e,m+1}`, then every pair of level-`(m+1)` points at distance
//! `<= C2 A^{-m-1}` is visited once and, if the two masses differ by more
//! than the factor `C1 = A^{s'-t'}`, mass flows from the heavy to the light
//! point until the ratio is exactly `C1`.
//!
//! Iterating from a uniform measure on `S_0` and continuing with `S_j = X`
//! past the hierarchy depth until no pair is close enough to interact gives
//! the stable measure returned by [`build_measure`].

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nets::{NetHierarchy, INEQUALITY_TOLERANCE};
use crate::space::{PointId, PseudoMetricSpace};

/// Allowed deviation of the total mass from 1.
pub const CONSERVATION_TOLERANCE: f64 = 1e-12;

/// Constants of the refinement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferConstants {
    pub a: f64,
    pub c_d: f64,
    pub s_prime: f64,
    pub t_prime: f64,
    /// `A^{s'-t'}`
    pub c1: f64,
    /// `8 C_d^3`
    pub c2: f64,
    /// `2 C_d^2 / (1 - C_d / A)`
    pub c4: f64,
}

impl TransferConstants {
    pub fn new(a: f64, c_d: f64, s_prime: f64, t_prime: f64) -> Result<Self> {
        if !(a > c_d) || !a.is_finite() {
            return Err(Error::ScaleTooSmall { a, c_d });
        }
        if !(t_prime >= 0.0 && s_prime >= t_prime && s_prime.is_finite()) {
            return Err(Error::InvalidExponents(format!(
                "need s' >= t' >= 0, got s' = {s_prime}, t' = {t_prime}"
            )));
        }
        Ok(TransferConstants {
            a,
            c_d,
            s_prime,
            t_prime,
            c1: a.powf(s_prime - t_prime),
            c2: 8.0 * c_d.powi(3),
            c4: 2.0 * c_d * c_d / (1.0 - c_d / a),
        })
    }

    /// Constants for a hierarchy built on `h`'s space.
    pub fn for_hierarchy(h: &NetHierarchy, s_prime: f64, t_prime: f64) -> Result<Self> {
        Self::new(h.scale_base(), h.space().c_d(), s_prime, t_prime)
    }
}

/// Nonnegative masses on the points of one net level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    pub level: usize,
    /// Mass per point id; zero off the support level.
    pub mass: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn get(&self, p: PointId) -> f64 {
        self.mass[p]
    }

    /// Uniform probability on `points` inside a space of `n` points.
    pub fn uniform(level: usize, n: usize, points: &[PointId]) -> Self {
        let mut mass = vec![0.0; n];
        let share = 1.0 / points.len() as f64;
        for &p in points {
            mass[p] = share;
        }
        DiscreteMeasure { level, mass }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransferKind {
    Split,
    Rebalance,
}

/// One mass move.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferRecord {
    /// Ordinal within the refinement.
    pub step: usize,
    pub level: usize,
    pub kind: TransferKind,
    pub source: PointId,
    pub dest: PointId,
    pub amount: f64,
    pub distance: f64,
}

/// Spreads the mass of every `e` in `S_m` evenly over `S_{e,m+1}`.
pub fn homogeneous_split(
    f0: &DiscreteMeasure,
    h: &NetHierarchy,
) -> Result<(DiscreteMeasure, Vec<TransferRecord>)> {
    let m = f0.level;
    let space = h.space();
    let mut mass = vec![0.0; f0.mass.len()];
    let mut records = Vec::new();
    for &e in h.level(m) {
        let children = h.children(m, e);
        if children.is_empty() {
            return Err(Error::PartitionBroken {
                level: m,
                parent: space.label(e),
            });
        }
        let share = f0.mass[e] / children.len() as f64;
        for &g in children {
            mass[g] = share;
            if g != e && share > 0.0 {
                records.push(TransferRecord {
                    step: records.len(),
                    level: m,
                    kind: TransferKind::Split,
                    source: e,
                    dest: g,
                    amount: share,
                    distance: space.dist(e, g),
                });
            }
        }
    }
    Ok((DiscreteMeasure { level: m + 1, mass }, records))
}

/// Pairs `g < g'` of `points` with `d(g, g') <= threshold`, lexicographic.
pub fn pairs_within(space: &PseudoMetricSpace, points: &[PointId], threshold: f64) -> Vec<(PointId, PointId)> {
    let mut out = Vec::new();
    for (i, &g) in points.iter().enumerate() {
        let row = space.row(g);
        for &g2 in &points[i + 1..] {
            if row[g2] <= threshold {
                out.push((g, g2));
            }
        }
    }
    out
}

/// `C2 A^{-m-1}` on the hierarchy's distance grid.
pub fn close_pair_threshold(h: &NetHierarchy, m: usize, c2: f64) -> f64 {
    h.space()
        .canonical(c2 * h.scale_base().powi(-(m as i32 + 1)))
}

/// Pairs of `S_{m+1}` at distance `<= C2 A^{-m-1}`, lexicographic by id.
pub fn close_pairs(h: &NetHierarchy, m: usize, c2: f64) -> Vec<(PointId, PointId)> {
    pairs_within(h.space(), h.level(m + 1), close_pair_threshold(h, m, c2))
}

/// Whether `x <= c1 * y` up to the relative inequality tolerance.
fn within_factor(x: f64, y: f64, c1: f64) -> bool {
    x <= c1 * y * (1.0 + INEQUALITY_TOLERANCE)
}

/// If the masses of `pair` are more than a factor `c1` apart, moves
/// `(heavy - c1 * light) / (c1 + 1)` from the heavy to the light point and
/// returns the move; otherwise leaves `f` unchanged.
pub fn rebalance_pair(
    f: &mut DiscreteMeasure,
    space: &PseudoMetricSpace,
    pair: (PointId, PointId),
    c1: f64,
) -> Option<TransferRecord> {
    let (g1, g2) = pair;
    let (m1, m2) = (f.mass[g1], f.mass[g2]);
    let (heavy, light) = if !within_factor(m1, m2, c1) {
        (g1, g2)
    } else if !within_factor(m2, m1, c1) {
        (g2, g1)
    } else {
        return None;
    };
    let delta = (f.mass[heavy] - c1 * f.mass[light]) / (c1 + 1.0);
    f.mass[heavy] -= delta;
    f.mass[light] += delta;
    Some(TransferRecord {
        step: 0,
        level: f.level.saturating_sub(1),
        kind: TransferKind::Rebalance,
        source: heavy,
        dest: light,
        amount: delta,
        distance: space.dist(heavy, light),
    })
}

/// Order in which close pairs are visited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
#[derive(Default)]
pub enum PairOrder {
    #[default]
    Lexicographic,
    /// Shuffled per level with a ChaCha8 stream seeded from `seed` and `m`.
    Seeded { seed: u64 },
}


/// Worst case of one checked inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub holds: bool,
    /// Number of inequalities evaluated.
    pub checked: usize,
    /// Largest `lhs / rhs` seen (or distance over bound); `<= 1` when it holds.
    pub worst_ratio: f64,
    pub witness: Option<(u64, u64)>,
}

impl PropertyCheck {
    fn new() -> Self {
        PropertyCheck {
            holds: true,
            checked: 0,
            worst_ratio: 0.0,
            witness: None,
        }
    }

    fn observe(&mut self, ratio: f64, ok: bool, witness: (u64, u64)) {
        self.checked += 1;
        if ratio > self.worst_ratio || (!ok && self.holds) {
            self.worst_ratio = self.worst_ratio.max(ratio);
            self.witness = Some(witness);
        }
        self.holds &= ok;
    }
}

/// Per-refinement audit of the lemma's properties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub level: usize,
    /// Whether `S_m = S_{m+1} = X` (past the hierarchy depth).
    pub fictitious: bool,
    pub close_pairs: usize,
    pub split_moves: usize,
    pub rebalance_moves: usize,
    /// `f1(g') <= C1 f1(g)` for close pairs, by a full rescan.
    pub property_a: PropertyCheck,
    /// `A^{-s'} f0(e) <= f1(g) <= A^{-t'} f0(e)` for `g` in `S_{e,m+1}`;
    /// not applicable at fictitious levels.
    pub property_b: Option<PropertyCheck>,
    /// Largest deviation `|total - f0(X)|` seen after any single move.
    pub conservation_error: f64,
    pub property_c: bool,
    /// Mass that reaches `g` from `e` travels `d(e, g) <= 2 C_d A^{-m}`.
    pub property_d: PropertyCheck,
    /// Split moves within `2 C_d A^{-m}`, rebalance moves within `C2 A^{-m-1}`.
    pub record_bounds: PropertyCheck,
    /// No point receives in one rebalance and sends in a later one.
    pub no_relay: bool,
    /// Every point of `S_{m+1}` carries positive mass.
    pub positive: bool,
}

impl StepReport {
    pub fn passed(&self) -> bool {
        self.property_a.holds
            && self.property_b.as_ref().is_none_or(|b| b.holds)
            && self.property_c
            && self.property_d.holds
            && self.record_bounds.holds
            && self.no_relay
            && self.positive
    }
}

/// Result of one refinement.
#[derive(Debug, Clone)]
pub struct Refinement {
    pub measure: DiscreteMeasure,
    pub records: Vec<TransferRecord>,
    pub report: StepReport,
}

/// Checks `f0(e') <= C1 f0(e)` for all `e, e'` in `S_m` within
/// `C2 A^{-m}`.
pub fn check_hypothesis(f0: &DiscreteMeasure, h: &NetHierarchy, k: &TransferConstants) -> Result<()> {
    let m = f0.level;
    let space = h.space();
    let threshold = space.canonical(k.c2 * k.a.powi(-(m as i32)));
    for (e, e2) in pairs_within(space, h.level(m), threshold) {
        for (heavy, light) in [(e, e2), (e2, e)] {
            if !within_factor(f0.mass[heavy], f0.mass[light], k.c1) {
                return Err(Error::HypothesisViolation {
                    level: m,
                    heavy: space.label(heavy),
                    light: space.label(light),
                    heavy_mass: f0.mass[heavy],
                    light_mass: f0.mass[light],
                    c1: k.c1,
                    distance: space.dist(heavy, light),
                });
            }
        }
    }
    Ok(())
}

/// One application of the lemma: `f0` on `S_m` to `f1` on `S_{m+1}`.
pub fn refine_measure(
    f0: &DiscreteMeasure,
    h: &NetHierarchy,
    k: &TransferConstants,
    order: PairOrder,
) -> Result<Refinement> {
    check_hypothesis(f0, h, k)?;
    let m = f0.level;
    let space = h.space();
    let (mut f1, mut records) = homogeneous_split(f0, h)?;
    let split_moves = records.len();
    let split_snapshot = f1.clone();

    let mut pairs = close_pairs(h, m, k.c2);
    if let PairOrder::Seeded { seed } = order {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (m as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        pairs.shuffle(&mut rng);
    }
    let start_total = f0.total();
    let mut running = f1.total();
    let mut conservation_error = (running - start_total).abs();
    for &pair in &pairs {
        let before = (f1.mass[pair.0], f1.mass[pair.1]);
        if let Some(mut rec) = rebalance_pair(&mut f1, space, pair, k.c1) {
            running += (f1.mass[pair.0] - before.0) + (f1.mass[pair.1] - before.1);
            conservation_error = conservation_error.max((running - start_total).abs());
            rec.step = records.len();
            rec.level = m;
            records.push(rec);
        }
    }
    let final_total = f1.total();
    conservation_error = conservation_error.max((final_total - start_total).abs());

    let report = audit(f0, &split_snapshot, &f1, &records, split_moves, pairs.len(), h, k, conservation_error);
    Ok(Refinement {
        measure: f1,
        records,
        report,
    })
}

#[allow(clippy::too_many_arguments)]
fn audit(
    f0: &DiscreteMeasure,
    split: &DiscreteMeasure,
    f1: &DiscreteMeasure,
    records: &[TransferRecord],
    split_moves: usize,
    pair_count: usize,
    h: &NetHierarchy,
    k: &TransferConstants,
    conservation_error: f64,
) -> StepReport {
    let m = f0.level;
    let space = h.space();
    let label = |p: PointId| space.label(p);
    let fictitious = m >= h.depth();
    let fine = h.level(m + 1);

    let mut property_a = PropertyCheck::new();
    for (g, g2) in close_pairs(h, m, k.c2) {
        for (x, y) in [(g, g2), (g2, g)] {
            let ratio = f1.mass[x] / (k.c1 * f1.mass[y]);
            property_a.observe(ratio, within_factor(f1.mass[x], f1.mass[y], k.c1), (label(x), label(y)));
        }
    }

    let property_b = (!fictitious).then(|| {
        let lo_factor = k.a.powf(-k.s_prime);
        let hi_factor = k.a.powf(-k.t_prime);
        let mut check = PropertyCheck::new();
        for &e in h.level(m) {
            for &g in h.children(m, e) {
                let lo = lo_factor * f0.mass[e];
                let hi = hi_factor * f0.mass[e];
                let v = f1.mass[g];
                let ok = v >= lo * (1.0 - INEQUALITY_TOLERANCE) && v <= hi * (1.0 + INEQUALITY_TOLERANCE);
                let ratio = (lo / v).max(v / hi);
                check.observe(ratio, ok, (label(e), label(g)));
            }
        }
        check
    });

    // Provenance: the level-m points whose mass ends up at each fine point.
    let mut origin: Vec<BTreeSet<PointId>> = vec![BTreeSet::new(); f1.mass.len()];
    for &g in fine {
        if split.mass[g] > 0.0 {
            if let Some(e) = h.parent(m, g) {
                origin[g].insert(e);
            }
        }
    }
    let mut record_bounds = PropertyCheck::new();
    let reach = space.canonical(2.0 * k.c_d * k.a.powi(-(m as i32)));
    let pair_reach = close_pair_threshold(h, m, k.c2);
    let mut received = vec![false; f1.mass.len()];
    let mut no_relay = true;
    for rec in records {
        let bound = match rec.kind {
            TransferKind::Split => reach,
            TransferKind::Rebalance => pair_reach,
        };
        record_bounds.observe(rec.distance / bound, rec.distance <= bound, (label(rec.source), label(rec.dest)));
        if rec.kind == TransferKind::Rebalance {
            if received[rec.source] {
                no_relay = false;
            }
            received[rec.dest] = true;
            let from = origin[rec.source].clone();
            origin[rec.dest].extend(from);
        }
    }
    let mut property_d = PropertyCheck::new();
    for &g in fine {
        for &e in &origin[g] {
            let d = space.dist(e, g);
            property_d.observe(d / reach, d <= reach, (label(e), label(g)));
        }
    }

    StepReport {
        level: m,
        fictitious,
        close_pairs: pair_count,
        split_moves,
        rebalance_moves: records.len() - split_moves,
        property_a,
        property_b,
        conservation_error,
        property_c: conservation_error <= CONSERVATION_TOLERANCE,
        property_d,
        record_bounds,
        no_relay,
        positive: fine.iter().all(|&g| f1.mass[g] > 0.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuildOptions {
    pub order: PairOrder,
    /// Safety bound on fictitious refinements past the hierarchy depth.
    pub max_extra_levels: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            order: PairOrder::Lexicographic,
            max_extra_levels: 256,
        }
    }
}

/// Full run of the construction.
#[derive(Debug, Clone)]
pub struct Construction {
    pub constants: TransferConstants,
    /// The stable measure, supported on all of `X`.
    pub measure: DiscreteMeasure,
    /// `mu_0, mu_1, ...` up to and including the stable measure.
    pub snapshots: Vec<DiscreteMeasure>,
    /// Moves that balance the initial measure on `S_0` (raw mode only).
    pub initial_records: Vec<TransferRecord>,
    pub log: Vec<TransferRecord>,
    pub reports: Vec<StepReport>,
    /// First level `j` at which refinement no longer changes anything.
    pub stabilization_level: usize,
    /// Largest total-mass drift corrected by renormalization.
    pub drift: f64,
}

impl Construction {
    pub fn all_passed(&self) -> bool {
        self.reports.iter().all(StepReport::passed)
    }
}

/// Builds `mu_0` uniform on `S_0` (balanced within `C2` if `S_0` has several
/// points), refines through the hierarchy, then keeps refining with
/// `S_j = X` until no pair lies within `C2 A^{-j-1}`.
pub fn build_measure(h: &NetHierarchy, k: &TransferConstants, options: &BuildOptions) -> Result<Construction> {
    let space = h.space();
    let n = space.len();
    let mut mu = DiscreteMeasure::uniform(0, n, h.level(0));
    let mut initial_records = Vec::new();
    if h.level(0).len() > 1 {
        let threshold = space.canonical(k.c2);
        for pair in pairs_within(space, h.level(0), threshold) {
            if let Some(mut rec) = rebalance_pair(&mut mu, space, pair, k.c1) {
                rec.step = initial_records.len();
                rec.level = 0;
                initial_records.push(rec);
            }
        }
    }
    let mut snapshots = vec![mu.clone()];
    let mut log = Vec::new();
    let mut reports = Vec::new();
    let mut drift: f64 = 0.0;
    let mut m = 0;
    loop {
        if m >= h.depth() {
            if close_pairs(h, m, k.c2).is_empty() {
                break;
            }
            if m >= h.depth() + options.max_extra_levels {
                return Err(Error::InvalidConstant(format!(
                    "no stabilization within {} levels past the depth",
                    options.max_extra_levels
                )));
            }
        }
        let step = refine_measure(&mu, h, k, options.order)?;
        mu = step.measure;
        let total = mu.total();
        if (total - 1.0).abs() > CONSERVATION_TOLERANCE {
            drift = drift.max((total - 1.0).abs());
            mu.mass.iter_mut().for_each(|v| *v /= total);
        }
        let offset = log.len();
        log.extend(step.records.into_iter().map(|mut r| {
            r.step += offset;
            r
        }));
        reports.push(step.report);
        snapshots.push(mu.clone());
        m += 1;
    }
    Ok(Construction {
        constants: *k,
        measure: mu,
        snapshots,
        initial_records,
        log,
        reports,
        stabilization_level: m,
        drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nets::build_hierarchy;
    use crate::space::{generate_cantor, union_spaces};

    fn two_points() -> NetHierarchy {
        build_hierarchy(&PseudoMetricSpace::from_line(&[0.0, 1.0]).unwrap(), 16.0, true).unwrap()
    }

    #[test]
    fn constants_follow_their_formulas() {
        let k = TransferConstants::new(9.0, 1.0, 0.75, 0.25).unwrap();
        assert_eq!(k.c1, 3.0);
        assert_eq!(k.c2, 8.0);
        assert!((k.c4 - 2.25).abs() < 1e-15);
        assert!(matches!(TransferConstants::new(1.0, 1.0, 1.0, 0.0), Err(Error::ScaleTooSmall { .. })));
    }

    #[test]
    fn rebalance_moves_to_exact_ratio() {
        let s = PseudoMetricSpace::from_line(&[0.0, 1.0]).unwrap();
        let mut f = DiscreteMeasure { level: 1, mass: vec![10.0, 1.0] };
        let rec = rebalance_pair(&mut f, &s, (0, 1), 4.0).unwrap();
        assert!((rec.amount - 1.2).abs() < 1e-15);
        assert!((f.mass[0] - 8.8).abs() < 1e-14 && (f.mass[1] - 2.2).abs() < 1e-14);
        assert!((f.mass[0] - 4.0 * f.mass[1]).abs() < 1e-14);
        assert_eq!(f.total(), 11.0);
    }

    #[test]
    fn compliant_pairs_are_left_alone() {
        let s = PseudoMetricSpace::from_line(&[0.0, 1.0]).unwrap();
        let mut f = DiscreteMeasure { level: 1, mass: vec![0.5, 0.5] };
        assert!(rebalance_pair(&mut f, &s, (0, 1), 1.0).is_none());
        let mut g = DiscreteMeasure { level: 1, mass: vec![0.8, 0.2] };
        assert!(rebalance_pair(&mut g, &s, (1, 0), 4.0).is_none());
        assert_eq!(g.mass, vec![0.8, 0.2]);
    }

    #[test]
    fn split_divides_evenly() {
        let h = two_points();
        let f0 = DiscreteMeasure::uniform(0, 2, h.level(0));
        let (f1, recs) = homogeneous_split(&f0, &h).unwrap();
        assert_eq!(f1.mass, vec![0.5, 0.5]);
        assert_eq!(recs.len(), 1);
        assert_eq!((recs[0].source, recs[0].dest), (0, 1));
    }

    #[test]
    fn split_with_unequal_child_counts() {
        // parents 0 and 5 with children {0, 1} and {3, 4, 5}
        let s = PseudoMetricSpace::from_line(&[0.0, 0.1, 5.0, 9.8, 9.9, 10.0]).unwrap();
        let h = build_hierarchy(&s, 4.0, false).unwrap();
        let m = (0..h.depth())
            .find(|&j| h.level(j).len() == 3 && h.level(j + 1).len() == 6)
            .expect("level with three parents");
        let mut mass = vec![0.0; 6];
        for &e in h.level(m) {
            mass[e] = 1.0 / 3.0;
        }
        let f0 = DiscreteMeasure { level: m, mass };
        let (f1, _) = homogeneous_split(&f0, &h).unwrap();
        let counts: Vec<usize> = h.level(m).iter().map(|&e| h.children(m, e).len()).collect();
        for &e in h.level(m) {
            let c = h.children(m, e).len() as f64;
            for &g in h.children(m, e) {
                assert_eq!(f1.mass[g], 1.0 / 3.0 / c);
            }
        }
        assert!(counts.contains(&1));
        assert!((f1.total() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ordered_close_pairs() {
        let s = PseudoMetricSpace::from_line(&[0.0, 0.1, 0.2]).unwrap();
        assert_eq!(pairs_within(&s, &[0, 1, 2], 1.0), vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn close_pairs_empty_below_separation() {
        let s = generate_cantor(1.0 / 3.0, 3, (0.0, 1.0)).unwrap();
        let h = build_hierarchy(&s, 3.0, true).unwrap();
        for m in 0..h.depth() {
            assert!(close_pairs(&h, m, 0.5).is_empty());
        }
    }

    #[test]
    fn two_point_construction() {
        let h = two_points();
        let k = TransferConstants::for_hierarchy(&h, 1.0, 0.0).unwrap();
        let c = build_measure(&h, &k, &BuildOptions::default()).unwrap();
        assert_eq!(c.measure.mass, vec![0.5, 0.5]);
        assert!(c.all_passed());
        assert_eq!(c.snapshots.len(), c.stabilization_level + 1);
    }

    #[test]
    fn singleton_construction() {
        let s = PseudoMetricSpace::from_line(&[0.0]).unwrap();
        let h = build_hierarchy(&s, 9.0, true).unwrap();
        let k = TransferConstants::for_hierarchy(&h, 1.0, 0.0).unwrap();
        let c = build_measure(&h, &k, &BuildOptions::default()).unwrap();
        assert_eq!(c.measure.mass, vec![1.0]);
        assert!(c.log.is_empty());
        assert_eq!(c.stabilization_level, 0);
    }

    #[test]
    fn hypothesis_violation_is_reported() {
        let s = PseudoMetricSpace::from_line(&[0.0, 0.01, 1.0]).unwrap();
        let h = build_hierarchy(&s, 16.0, true).unwrap();
        assert_eq!(h.level(2), &[0, 1, 2]);
        // c1 = 4 and the first two points are within 8 / 16^2
        let k = TransferConstants::for_hierarchy(&h, 0.5, 0.0).unwrap();
        let f = DiscreteMeasure { level: 2, mass: vec![0.9, 0.05, 0.05] };
        let err = refine_measure(&f, &h, &k, PairOrder::Lexicographic).unwrap_err();
        assert!(matches!(err, Error::HypothesisViolation { level: 2, heavy: 0, light: 1, .. }));
        assert!(err.is_precondition_failure());
    }

    #[test]
    fn touching_union_steps_pass() {
        let c1 = generate_cantor(1.0 / 3.0, 4, (0.0, 1.0)).unwrap();
        let c2 = generate_cantor(1.0 / 9.0, 2, (1.0, 2.0)).unwrap();
        let f = union_spaces(&c1, &c2).unwrap();
        let h = build_hierarchy(&f, 9.0, false).unwrap();
        let k = TransferConstants::for_hierarchy(&h, 5f64.ln() / 9f64.ln(), 2f64.ln() / 9f64.ln()).unwrap();
        let c = build_measure(&h, &k, &BuildOptions::default()).unwrap();
        for r in &c.reports {
            assert!(r.property_a.holds && r.property_c && r.property_d.holds && r.no_relay, "{r:?}");
        }
        assert!(c.measure.mass.iter().all(|&v| v > 0.0));
        assert!((c.measure.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn seeded_order_keeps_properties() {
        let s = generate_cantor(1.0 / 3.0, 4, (0.0, 1.0)).unwrap();
        let h = build_hierarchy(&s, 16.0, true).unwrap();
        let k = TransferConstants::for_hierarchy(&h, 0.9, 0.3).unwrap();
        let options = BuildOptions {
            order: PairOrder::Seeded { seed: 7 },
            ..Default::default()
        };
        let c = build_measure(&h, &k, &options).unwrap();
        assert!(c.reports.iter().all(|r| r.property_a.holds && r.no_relay));
    }
}
