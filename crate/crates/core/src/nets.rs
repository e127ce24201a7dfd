//! Nested hierarchies of maximal `A^-j`-separated nets.
//!
//! Level `j` holds a maximal set `S_j` whose points are pairwise at distance
//! `>= A^-j`. Each `g` in `S_{j+1}` is projected to its nearest point of `S_j`
//! (lowest id on ties), and the preimages `S_{e,j+1}` partition `S_{j+1}`.
//! Nets are nested: `S_{j+1}` is grown greedily from `S_j`. Construction
//! stops at the first depth `J` with `S_J = X`; the accessors extend the
//! hierarchy past `J` with `S_j = X` and identity projections.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::packing::greedy_separated_seeded;
use crate::space::{PointId, PseudoMetricSpace};

/// Relative slack for comparisons against irrational thresholds such as
/// `A^{s'}`.
pub const INEQUALITY_TOLERANCE: f64 = 1e-12;

/// Diameter used in normalized mode.
pub const NORMALIZED_DIAMETER: f64 = 0.99;

/// Outcome of [`choose_scale_base`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleChoice {
    pub a: f64,
    /// Constraints that an override violates.
    pub warnings: Vec<String>,
}

/// Exponent and constant inputs of the scale-base constraints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleInputs {
    pub c_d: f64,
    pub s: f64,
    pub t: f64,
    pub s_prime: f64,
    pub t_prime: f64,
    pub c_s: f64,
    pub c_t: f64,
}

impl ScaleInputs {
    /// Checks `s' > s >= t > t' >= 0` (or `t = t' = 0`) and positive constants.
    pub fn validate(&self) -> Result<()> {
        self.validate_order(true)
    }

    fn validate_order(&self, strict_lower: bool) -> Result<()> {
        let ScaleInputs { c_d, s, t, s_prime, t_prime, c_s, c_t } = *self;
        let finite = [c_d, s, t, s_prime, t_prime, c_s, c_t].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidExponents("non-finite input".into()));
        }
        if s_prime <= s {
            return Err(Error::InvalidExponents(format!("s' = {s_prime} must exceed s = {s}")));
        }
        if s < t {
            return Err(Error::InvalidExponents(format!("s = {s} is below t = {t}")));
        }
        if t_prime < 0.0 {
            return Err(Error::InvalidExponents(format!("t' = {t_prime} is negative")));
        }
        if strict_lower && t > 0.0 && t_prime >= t {
            return Err(Error::InvalidExponents(format!("t' = {t_prime} must be below t = {t}")));
        }
        if strict_lower && t == 0.0 && t_prime != 0.0 {
            return Err(Error::InvalidExponents("t = 0 requires t' = 0".into()));
        }
        if c_d < 1.0 {
            return Err(Error::InvalidConstant(format!("c_d = {c_d} is below 1")));
        }
        if c_s <= 0.0 || c_t <= 0.0 {
            return Err(Error::InvalidConstant(format!("c_s = {c_s}, c_t = {c_t} must be positive")));
        }
        Ok(())
    }

    fn violations(&self, a: f64) -> Vec<String> {
        let ScaleInputs { c_d, s, t, s_prime, t_prime, c_s, c_t } = *self;
        let mut out = Vec::new();
        if t_prime >= t && !(t == 0.0 && t_prime == 0.0) {
            out.push(format!("t' = {t_prime} is not below t = {t}"));
        }
        if a < 16.0 * c_d.powi(4) {
            out.push(format!("A >= 16*C_d^4 = {} violated", 16.0 * c_d.powi(4)));
        }
        if a.powf(s_prime - s) <= c_s {
            out.push(format!("A^(s'-s) > C_s = {c_s} violated"));
        }
        if t > t_prime {
            let bound = 4f64.powf(t) * c_d.powf(2.0 * t) / c_t;
            if a.powf(t - t_prime) <= bound {
                out.push(format!("A^(t-t') > 4^t C_d^(2t) / C_t = {bound} violated"));
            }
        }
        out
    }
}

/// Smallest integer `A` with `A >= 16 C_d^4`, `A^{s'-s} > C_s` and, when
/// `t > t'`, `A^{t-t'} > 4^t C_d^{2t} / C_t`. An override is returned as is,
/// with one warning per violated constraint; `t' >= t` is then a warning
/// rather than an error.
pub fn choose_scale_base(inputs: &ScaleInputs, override_a: Option<f64>) -> Result<ScaleChoice> {
    inputs.validate_order(override_a.is_none())?;
    if let Some(a) = override_a {
        if !(a > 1.0 && a.is_finite()) {
            return Err(Error::InvalidConstant(format!("scale base {a} must exceed 1")));
        }
        return Ok(ScaleChoice {
            a,
            warnings: inputs.violations(a),
        });
    }
    let ScaleInputs { c_d, s, t, s_prime, t_prime, c_s, c_t } = *inputs;
    let mut start = (16.0 * c_d.powi(4)).ceil();
    start = start.max(c_s.powf(1.0 / (s_prime - s)).floor());
    if t > t_prime {
        let bound = 4f64.powf(t) * c_d.powf(2.0 * t) / c_t;
        start = start.max(bound.powf(1.0 / (t - t_prime)).floor());
    }
    let mut a = start.max(2.0);
    while !inputs.violations(a).is_empty() {
        a += 1.0;
    }
    Ok(ScaleChoice {
        a,
        warnings: Vec::new(),
    })
}

/// Nested net hierarchy over a working copy of the space.
#[derive(Debug, Clone)]
pub struct NetHierarchy {
    space: PseudoMetricSpace,
    a: f64,
    normalization: f64,
    levels: Vec<Vec<PointId>>,
    /// `parents[j][i]` is the projection of `levels[j + 1][i]` into `S_j`.
    parents: Vec<Vec<PointId>>,
    /// `children[j][i]` is `S_{e,j+1}` for `e = levels[j][i]`.
    children: Vec<Vec<Vec<PointId>>>,
    /// `position[j][p]` is the index of `p` in `levels[j]`, if present.
    position: Vec<Vec<Option<usize>>>,
    identity: Vec<PointId>,
}

/// Builds `S_0, S_1, ...` at separations `A^-j` (on the distance grid of the
/// working space) until every point is a net point.
///
/// In normalized mode distances are first rescaled to diameter
/// [`NORMALIZED_DIAMETER`].
pub fn build_hierarchy(space: &PseudoMetricSpace, a: f64, normalized: bool) -> Result<NetHierarchy> {
    if !(a > space.c_d()) || !a.is_finite() {
        return Err(Error::ScaleTooSmall { a, c_d: space.c_d() });
    }
    let working = if normalized {
        space.normalized(NORMALIZED_DIAMETER)
    } else {
        space.clone()
    };
    let n = working.len();
    let all: Vec<PointId> = working.ids().collect();
    let mut levels: Vec<Vec<PointId>> = vec![greedy_separated_seeded(&working, &[], &all, working.canonical(1.0))];
    let mut parents = Vec::new();
    while levels.last().unwrap().len() < n {
        let j = levels.len() as i32;
        let separation = working.canonical(a.powi(-j));
        let previous = levels.last().unwrap();
        let next = greedy_separated_seeded(&working, previous, &all, separation);
        let proj: Vec<PointId> = next.iter().map(|&g| nearest(&working, g, previous)).collect();
        parents.push(proj);
        levels.push(next);
    }
    let mut position = Vec::with_capacity(levels.len());
    for level in &levels {
        let mut pos = vec![None; n];
        for (i, &p) in level.iter().enumerate() {
            pos[p] = Some(i);
        }
        position.push(pos);
    }
    let mut children = Vec::with_capacity(parents.len());
    for (j, proj) in parents.iter().enumerate() {
        let mut sets = vec![Vec::new(); levels[j].len()];
        for (i, &e) in proj.iter().enumerate() {
            sets[position[j][e].expect("parent lies in the coarser net")].push(levels[j + 1][i]);
        }
        children.push(sets);
    }
    Ok(NetHierarchy {
        normalization: working.scale() / space.scale(),
        space: working,
        a,
        levels,
        parents,
        children,
        position,
        identity: (0..n).collect(),
    })
}

fn nearest(space: &PseudoMetricSpace, g: PointId, candidates: &[PointId]) -> PointId {
    let row = space.row(g);
    let mut best = candidates[0];
    for &e in &candidates[1..] {
        if row[e] < row[best] || (row[e] == row[best] && e < best) {
            best = e;
        }
    }
    best
}

impl NetHierarchy {
    /// The space the nets live in (rescaled in normalized mode).
    pub fn space(&self) -> &PseudoMetricSpace {
        &self.space
    }

    pub fn scale_base(&self) -> f64 {
        self.a
    }

    /// Factor applied to the input distances (1 in raw mode).
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// Deepest constructed level `J`, the first with `S_J = X`.
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    /// `A^-j` mapped onto the distance grid.
    pub fn separation(&self, j: usize) -> f64 {
        self.space.canonical(self.a.powi(-(j as i32)))
    }

    /// `S_j`, ascending; equal to `X` for `j >= J`.
    pub fn level(&self, j: usize) -> &[PointId] {
        &self.levels[j.min(self.depth())]
    }

    pub fn contains(&self, j: usize, p: PointId) -> bool {
        j >= self.depth() || self.position[j][p].is_some()
    }

    /// Projection of `g` in `S_{j+1}` to `S_j`.
    pub fn parent(&self, j: usize, g: PointId) -> Option<PointId> {
        if j >= self.depth() {
            return (g < self.space.len()).then_some(g);
        }
        let i = self.position[j + 1][g]?;
        Some(self.parents[j][i])
    }

    /// `S_{e,j+1}` for `e` in `S_j`, ascending; empty if `e` is not in `S_j`.
    pub fn children(&self, j: usize, e: PointId) -> &[PointId] {
        if j >= self.depth() {
            return &self.identity[e..=e];
        }
        match self.position[j][e] {
            Some(i) => &self.children[j][i],
            None => &[],
        }
    }

    /// `(e, #S_{e,j+1})` for every `e` in `S_j`.
    pub fn child_counts(&self, j: usize) -> Vec<(PointId, usize)> {
        self.level(j)
            .iter()
            .map(|&e| (e, self.children(j, e).len()))
            .collect()
    }

    /// Serializable per-level listing with labels.
    pub fn dump(&self) -> HierarchyDump {
        let label = |p: PointId| self.space.label(p);
        let levels = (0..=self.depth())
            .map(|j| LevelDump {
                level: j,
                separation: self.separation(j),
                members: self.level(j).iter().map(|&p| label(p)).collect(),
                parents: if j == 0 {
                    Vec::new()
                } else {
                    self.level(j)
                        .iter()
                        .map(|&g| [label(g), label(self.parent(j - 1, g).unwrap())])
                        .collect()
                },
                child_counts: if j < self.depth() {
                    self.child_counts(j)
                        .into_iter()
                        .map(|(e, c)| (label(e), c))
                        .collect()
                } else {
                    Vec::new()
                },
            })
            .collect();
        HierarchyDump {
            scale_base: self.a,
            normalization: self.normalization,
            depth: self.depth(),
            levels,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyDump {
    pub scale_base: f64,
    pub normalization: f64,
    pub depth: usize,
    pub levels: Vec<LevelDump>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelDump {
    pub level: usize,
    pub separation: f64,
    pub members: Vec<u64>,
    /// `[child, parent]` label pairs linking this level to the previous one.
    pub parents: Vec<[u64; 2]>,
    /// `(parent, number of children)` towards the next level.
    pub child_counts: Vec<(u64, usize)>,
}

/// A parent whose child count leaves `[A^{t'}, A^{s'}]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChildViolation {
    pub level: usize,
    pub parent: u64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChildBoundReport {
    pub lower: f64,
    pub upper: f64,
    /// Levels `m` whose children sets were checked.
    pub levels_checked: Vec<usize>,
    /// Child count to number of parents with that count.
    pub histogram: BTreeMap<usize, usize>,
    pub violations: Vec<ChildViolation>,
}

impl ChildBoundReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `A^{t'} <= #S_{e,m+1} <= A^{s'}` for every `m < J`.
pub fn check_child_bounds(h: &NetHierarchy, s_prime: f64, t_prime: f64) -> ChildBoundReport {
    let levels: Vec<usize> = (0..h.depth()).collect();
    check_child_bounds_at(h, s_prime, t_prime, &levels)
}

/// [`check_child_bounds`] restricted to the given levels `m` (those at or
/// beyond `J` are skipped).
pub fn check_child_bounds_at(
    h: &NetHierarchy,
    s_prime: f64,
    t_prime: f64,
    levels: &[usize],
) -> ChildBoundReport {
    let lower = h.scale_base().powf(t_prime);
    let upper = h.scale_base().powf(s_prime);
    let mut histogram = BTreeMap::new();
    let mut violations = Vec::new();
    let mut checked = Vec::new();
    for &m in levels.iter().filter(|&&m| m < h.depth()) {
        checked.push(m);
        for (e, count) in h.child_counts(m) {
            *histogram.entry(count).or_insert(0) += 1;
            let c = count as f64;
            if c < lower * (1.0 - INEQUALITY_TOLERANCE) || c > upper * (1.0 + INEQUALITY_TOLERANCE) {
                violations.push(ChildViolation {
                    level: m,
                    parent: h.space().label(e),
                    count,
                });
            }
        }
    }
    ChildBoundReport {
        lower,
        upper,
        levels_checked: checked,
        histogram,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{generate_cantor, union_spaces};

    fn inputs(c_d: f64, s: f64, t: f64, s_prime: f64, t_prime: f64, c_s: f64) -> ScaleInputs {
        ScaleInputs { c_d, s, t, s_prime, t_prime, c_s, c_t: 1.0 }
    }

    #[test]
    fn smallest_integer_meeting_all_constraints() {
        let choice = choose_scale_base(&inputs(1.0, 0.7, 0.0, 1.0, 0.0, 4.0), None).unwrap();
        // 4^(1/0.3) = 101.59...
        assert_eq!(choice.a, 102.0);
        assert!(101f64.powf(0.3) <= 4.0 && 102f64.powf(0.3) > 4.0);
        let easy = choose_scale_base(&inputs(1.0, 0.5, 0.0, 1.0, 0.0, 1.0), None).unwrap();
        assert_eq!(easy.a, 16.0);
    }

    #[test]
    fn lower_constraint_applies_when_t_positive() {
        let i = ScaleInputs { c_d: 1.0, s: 1.0, t: 1.0, s_prime: 2.0, t_prime: 0.5, c_s: 1.0, c_t: 0.1 };
        let a = choose_scale_base(&i, None).unwrap().a;
        // A^(1/2) > 4 / 0.1 = 40 needs A > 1600
        assert_eq!(a, 1601.0);
    }

    #[test]
    fn override_reports_violations() {
        let choice = choose_scale_base(&inputs(1.0, 0.6, 0.0, 0.8, 0.0, 1.0), Some(9.0)).unwrap();
        assert_eq!(choice.a, 9.0);
        assert_eq!(choice.warnings.len(), 1);
        assert!(choice.warnings[0].contains("16*C_d^4"));
    }

    #[test]
    fn exponent_order_enforced() {
        let bad = inputs(1.0, 0.7, 0.0, 0.6, 0.0, 1.0);
        assert!(matches!(choose_scale_base(&bad, None), Err(Error::InvalidExponents(_))));
        let bad_t = ScaleInputs { t: 0.3, t_prime: 0.3, ..inputs(1.0, 0.7, 0.0, 1.0, 0.0, 1.0) };
        assert!(matches!(choose_scale_base(&bad_t, None), Err(Error::InvalidExponents(_))));
        let kept = choose_scale_base(&bad_t, Some(16.0)).unwrap();
        assert_eq!(kept.warnings, vec!["t' = 0.3 is not below t = 0.3".to_string()]);
        assert!(matches!(choose_scale_base(&bad, Some(16.0)), Err(Error::InvalidExponents(_))));
    }

    #[test]
    fn normalized_two_points() {
        let s = PseudoMetricSpace::from_line(&[0.0, 1.0]).unwrap();
        let h = build_hierarchy(&s, 16.0, true).unwrap();
        assert_eq!(h.level(0), &[0]);
        assert_eq!(h.level(1), &[0, 1]);
        assert_eq!(h.depth(), 1);
        assert_eq!(h.children(0, 0), &[0, 1]);
        assert_eq!(h.parent(0, 1), Some(0));
        assert!((h.space().diameter() - 0.99).abs() < 1e-12);
    }

    #[test]
    fn scale_must_exceed_constant() {
        let s = PseudoMetricSpace::from_table(
            vec![0, 1, 2],
            vec![vec![0.0, 1.0, 4.0], vec![1.0, 0.0, 1.0], vec![4.0, 1.0, 0.0]],
        )
        .unwrap();
        assert!(matches!(
            build_hierarchy(&s, 2.0, true),
            Err(Error::ScaleTooSmall { .. })
        ));
        assert!(build_hierarchy(&s, 2.5, true).is_ok());
    }

    #[test]
    fn singleton_hierarchy() {
        let s = PseudoMetricSpace::from_line(&[3.0]).unwrap();
        let h = build_hierarchy(&s, 4.0, true).unwrap();
        assert_eq!(h.depth(), 0);
        assert_eq!(h.level(5), &[0]);
        assert_eq!(h.children(3, 0), &[0]);
    }

    #[test]
    fn touching_union_levels_and_child_counts() {
        let c1 = generate_cantor(1.0 / 3.0, 4, (0.0, 1.0)).unwrap();
        let c2 = generate_cantor(1.0 / 9.0, 2, (1.0, 2.0)).unwrap();
        let f = union_spaces(&c1, &c2).unwrap();
        let h = build_hierarchy(&f, 9.0, false).unwrap();
        let coord = |p: PointId| f.coords().unwrap()[p][0];
        let s0: Vec<f64> = h.level(0).iter().map(|&p| coord(p)).collect();
        assert_eq!(s0, vec![0.0, 1.0, 2.0]);
        for (e, count) in h.child_counts(1) {
            let x = coord(e);
            let expect = if x < 1.0 { 4 } else if x == 1.0 { 5 } else { 2 };
            assert_eq!(count, expect, "parent at {x}");
        }
        let report = check_child_bounds_at(&h, 0.5, 0.0, &[1]);
        // A^(1/2) = 3 is exceeded by every parent in [0, 1]
        let left = h.level(1).iter().filter(|&&e| coord(e) <= 1.0).count();
        assert_eq!(report.violations.len(), left);
    }

    #[test]
    fn zero_lower_exponent_never_fails_low() {
        let s = generate_cantor(1.0 / 3.0, 3, (0.0, 1.0)).unwrap();
        let h = build_hierarchy(&s, 3.0, true).unwrap();
        let report = check_child_bounds(&h, 10.0, 0.0);
        assert!(report.passed());
        assert_eq!(report.lower, 1.0);
    }
}
