//! Checks of the two-sided ball-ratio bounds for a measure.
//!
//! For a center `x` and radii `R <= kR <= cap` the tested quantity is
//! `mu(B(x, kR)) / mu(B(x, R))`. Radii range over the spectrum of midpoints
//! between consecutive distinct distances, so no radius ever sits on a
//! distance value.
//!
//! The literal profile has `|X| * S^2` entries for `S` radii, which is too
//! many beyond toy spaces. [`RatioEnvelope`] instead groups, per center, the
//! radii that see the same ball into cells; an extremal constant over all
//! radius pairs is attained at cell endpoints and can be found with one
//! prefix scan per center.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nets::INEQUALITY_TOLERANCE;
use crate::packing::{fit_lower_dimension, fit_power_law, fit_upper_dimension, spectrum_radii, CurvePoint, Dilated, DimensionFit, PackingObservation, Side};
use crate::space::{PointId, PseudoMetricSpace};
use crate::transfer::{Construction, DiscreteMeasure};

/// Sum of masses over the open ball `B(center, radius)`.
pub fn ball_mass(measure: &DiscreteMeasure, space: &PseudoMetricSpace, center: PointId, radius: f64) -> f64 {
    space
        .row(center)
        .iter()
        .zip(&measure.mass)
        .filter(|(&d, _)| d < radius)
        .map(|(_, &m)| m)
        .sum()
}

/// Fails with the first point carrying no mass.
pub fn ensure_supported(measure: &DiscreteMeasure, space: &PseudoMetricSpace) -> Result<()> {
    match measure.mass.iter().position(|&m| !(m > 0.0)) {
        Some(p) => Err(Error::UnsupportedMeasure(space.label(p))),
        None => Ok(()),
    }
}

/// Per-center distances in ascending order.
#[derive(Debug, Clone)]
pub struct BallIndex {
    n: usize,
    order: Vec<u32>,
    dists: Vec<f64>,
}

impl BallIndex {
    pub fn new(space: &PseudoMetricSpace) -> Self {
        let n = space.len();
        let mut order = Vec::with_capacity(n * n);
        let mut dists = Vec::with_capacity(n * n);
        for x in space.ids() {
            let row = space.row(x);
            let mut ids: Vec<u32> = (0..n as u32).collect();
            ids.sort_by(|&a, &b| row[a as usize].total_cmp(&row[b as usize]).then(a.cmp(&b)));
            dists.extend(ids.iter().map(|&y| row[y as usize]));
            order.extend(ids);
        }
        BallIndex { n, order, dists }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Distances from `x`, ascending.
    pub fn distances(&self, x: PointId) -> &[f64] {
        &self.dists[x * self.n..(x + 1) * self.n]
    }

    /// Number of points strictly closer than `radius` to `x`.
    pub fn count_within(&self, x: PointId, radius: f64) -> usize {
        self.distances(x).partition_point(|&d| d < radius)
    }

    /// Cumulative masses: entry `x * (n + 1) + i` is the mass of the `i`
    /// nearest points to `x`.
    pub fn prefix_masses(&self, measure: &DiscreteMeasure) -> Vec<f64> {
        let n = self.n;
        let mut out = Vec::with_capacity(n * (n + 1));
        for x in 0..n {
            let mut acc = 0.0;
            out.push(0.0);
            for &y in &self.order[x * n..(x + 1) * n] {
                acc += measure.mass[y as usize];
                out.push(acc);
            }
        }
        out
    }

    /// `mu(B(x, radius))` from a [`prefix_masses`](Self::prefix_masses) table.
    pub fn mass_within(&self, prefix: &[f64], x: PointId, radius: f64) -> f64 {
        prefix[x * (self.n + 1) + self.count_within(x, radius)]
    }
}

/// One tested ratio `mu(B(x, r_big)) / mu(B(x, r_small))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallRatioObservation {
    pub center: PointId,
    pub r_small: f64,
    pub r_big: f64,
    pub k: f64,
    pub mass_small: f64,
    pub mass_big: f64,
    pub ratio: f64,
}

impl BallRatioObservation {
    fn new(center: PointId, r_small: f64, r_big: f64, mass_small: f64, mass_big: f64) -> Self {
        BallRatioObservation {
            center,
            r_small,
            r_big,
            k: r_big / r_small,
            mass_small,
            mass_big,
            ratio: mass_big / mass_small,
        }
    }
}

impl Dilated for BallRatioObservation {
    fn dilation(&self) -> f64 {
        self.k
    }
    fn quantity(&self) -> f64 {
        self.ratio
    }
}

/// Radii used by every ratio check: the spectrum up to `cap`.
pub fn verification_radii(space: &PseudoMetricSpace, cap: f64) -> Vec<f64> {
    spectrum_radii(space, cap)
}

/// Every `(center, r_small <= r_big)` combination of verification radii.
pub fn ratio_profile(
    measure: &DiscreteMeasure,
    space: &PseudoMetricSpace,
    scale_cap: f64,
) -> Result<Vec<BallRatioObservation>> {
    ensure_supported(measure, space)?;
    let radii = verification_radii(space, scale_cap);
    let mut out = Vec::with_capacity(space.len() * radii.len() * (radii.len() + 1) / 2);
    for x in space.ids() {
        let masses: Vec<f64> = radii.iter().map(|&r| ball_mass(measure, space, x, r)).collect();
        for b in 0..radii.len() {
            for s in 0..=b {
                out.push(BallRatioObservation::new(x, radii[s], radii[b], masses[s], masses[b]));
            }
        }
    }
    Ok(out)
}

/// Smallest `C` with `ratio <= C k^gamma` over the profile.
pub fn fit_measure_upper(profile: &[BallRatioObservation], gamma: f64) -> Result<DimensionFit<BallRatioObservation>> {
    fit_power_law(profile, gamma, Side::Upper)
}

/// Largest `C` with `ratio >= C k^gamma` over the profile.
pub fn fit_measure_lower(profile: &[BallRatioObservation], gamma: f64) -> Result<DimensionFit<BallRatioObservation>> {
    fit_power_law(profile, gamma, Side::Lower)
}

/// Radii of one center that see the same ball: `lo..=hi` with ball mass
/// `mass`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Cell {
    mass: f64,
    lo: f64,
    hi: f64,
}

/// Which centers a check visits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum CenterSelection {
    All,
    /// `count` distinct centers drawn with a ChaCha8 stream from `seed`.
    Sampled { count: usize, seed: u64 },
}

impl CenterSelection {
    pub fn centers(&self, n: usize) -> Vec<PointId> {
        match *self {
            CenterSelection::All => (0..n).collect(),
            CenterSelection::Sampled { count, seed } if count < n => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut picked = rand::seq::index::sample(&mut rng, n, count).into_vec();
                picked.sort_unstable();
                picked
            }
            CenterSelection::Sampled { .. } => (0..n).collect(),
        }
    }
}

/// Cell decomposition of the ratio profile.
#[derive(Debug, Clone)]
pub struct RatioEnvelope {
    centers: Vec<(PointId, Vec<Cell>)>,
    scale_cap: f64,
    k_max: f64,
}

impl RatioEnvelope {
    pub fn new(measure: &DiscreteMeasure, space: &PseudoMetricSpace, scale_cap: f64) -> Result<Self> {
        Self::with_centers(measure, space, scale_cap, CenterSelection::All)
    }

    pub fn with_centers(
        measure: &DiscreteMeasure,
        space: &PseudoMetricSpace,
        scale_cap: f64,
        selection: CenterSelection,
    ) -> Result<Self> {
        ensure_supported(measure, space)?;
        let radii = verification_radii(space, scale_cap);
        let index = BallIndex::new(space);
        let prefix = index.prefix_masses(measure);
        let n = space.len();
        let mut centers = Vec::new();
        for x in selection.centers(n) {
            let d = index.distances(x);
            let mut cells = Vec::new();
            // radii in (d[i], d[i + 1]] see the i + 1 nearest points
            for i in 0..n {
                let upper = d.get(i + 1).copied().unwrap_or(f64::INFINITY);
                if upper == d[i] {
                    continue;
                }
                let a = radii.partition_point(|&r| r <= d[i]);
                let b = radii.partition_point(|&r| r <= upper);
                if a < b {
                    cells.push(Cell {
                        mass: prefix[x * (n + 1) + i + 1],
                        lo: radii[a],
                        hi: radii[b - 1],
                    });
                }
            }
            centers.push((x, cells));
        }
        let k_max = radii.last().zip(radii.first()).map_or(1.0, |(b, s)| b / s);
        Ok(RatioEnvelope {
            centers,
            scale_cap,
            k_max,
        })
    }

    pub fn scale_cap(&self) -> f64 {
        self.scale_cap
    }

    /// Largest dilation among the radii.
    pub fn k_max(&self) -> f64 {
        self.k_max
    }

    /// Extremal observations: for every ordered pair of cells the radius
    /// pair with the smallest and the largest dilation. Every fit over this
    /// set equals the fit over the literal profile.
    pub fn observations(&self) -> Vec<BallRatioObservation> {
        let mut out = Vec::new();
        for (x, cells) in &self.centers {
            for (j, cj) in cells.iter().enumerate() {
                for ci in &cells[..j] {
                    out.push(BallRatioObservation::new(*x, ci.hi, cj.lo, ci.mass, cj.mass));
                    out.push(BallRatioObservation::new(*x, ci.lo, cj.hi, ci.mass, cj.mass));
                }
                out.push(BallRatioObservation::new(*x, cj.lo, cj.lo, cj.mass, cj.mass));
                out.push(BallRatioObservation::new(*x, cj.lo, cj.hi, cj.mass, cj.mass));
            }
        }
        out
    }

    /// Smallest `C` with `mu(B(x,kR)) <= C k^gamma mu(B(x,R))`.
    pub fn fit_upper(&self, gamma: f64) -> Result<DimensionFit<BallRatioObservation>> {
        self.fit(gamma, Side::Upper)
    }

    /// Largest `C` with `mu(B(x,kR)) >= C k^gamma mu(B(x,R))`.
    pub fn fit_lower(&self, gamma: f64) -> Result<DimensionFit<BallRatioObservation>> {
        self.fit(gamma, Side::Lower)
    }

    fn fit(&self, gamma: f64, side: Side) -> Result<DimensionFit<BallRatioObservation>> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidExponents(format!("gamma = {gamma}")));
        }
        let mut best: Option<(f64, BallRatioObservation)> = None;
        let mut consider = |v: f64, obs: BallRatioObservation| {
            let better = match (&best, side) {
                (None, _) => true,
                (Some((b, _)), Side::Upper) => v > *b,
                (Some((b, _)), Side::Lower) => v < *b,
            };
            if better {
                best = Some((v, obs));
            }
        };
        for (x, cells) in &self.centers {
            match side {
                Side::Upper => {
                    // max over i < j of (m_j lo_j^-g) / (m_i hi_i^-g); i = j gives 1
                    let mut small: Option<(f64, &Cell)> = None;
                    for cj in cells {
                        consider(1.0, BallRatioObservation::new(*x, cj.lo, cj.lo, cj.mass, cj.mass));
                        if let Some((w, ci)) = small {
                            let v = cj.mass * cj.lo.powf(-gamma) / w;
                            consider(v, BallRatioObservation::new(*x, ci.hi, cj.lo, ci.mass, cj.mass));
                        }
                        let w = cj.mass * cj.hi.powf(-gamma);
                        if small.is_none_or(|(s, _)| w < s) {
                            small = Some((w, cj));
                        }
                    }
                }
                Side::Lower => {
                    // min over i <= j of (m_j hi_j^-g) / (m_i lo_i^-g)
                    let mut large: Option<(f64, &Cell)> = None;
                    for cj in cells {
                        let w = cj.mass * cj.lo.powf(-gamma);
                        if large.is_none_or(|(l, _)| w > l) {
                            large = Some((w, cj));
                        }
                        let (wi, ci) = large.unwrap();
                        let v = cj.mass * cj.hi.powf(-gamma) / wi;
                        consider(v, BallRatioObservation::new(*x, ci.lo, cj.hi, ci.mass, cj.mass));
                    }
                }
            }
        }
        let (c, witness) = best.ok_or(Error::EmptyProfile)?;
        Ok(DimensionFit { gamma, c, side, witness })
    }

    /// Fitted constants over the exponent grid.
    pub fn scan(&self, side: Side, resolution: f64, gamma_max: f64) -> Result<Vec<CurvePoint>> {
        crate::packing::gamma_grid(resolution, gamma_max)?
            .into_iter()
            .map(|gamma| self.fit(gamma, side).map(|f| CurvePoint { gamma, c: f.c }))
            .collect()
    }

    /// The `k = cap / R` specialization of an upper fit:
    /// `mu(B(x,R)) >= mu(B(x,cap)) / C * (R / cap)^gamma` for every radius.
    pub fn weak_upper_check(&self, fit: &DimensionFit<BallRatioObservation>) -> WeakCheck {
        self.weak_check(fit, Side::Upper)
    }

    /// The `k = cap / R` specialization of a lower fit:
    /// `mu(B(x,R)) <= mu(B(x,cap)) / C * (R / cap)^gamma` for every radius.
    pub fn weak_lower_check(&self, fit: &DimensionFit<BallRatioObservation>) -> WeakCheck {
        self.weak_check(fit, Side::Lower)
    }

    fn weak_check(&self, fit: &DimensionFit<BallRatioObservation>, side: Side) -> WeakCheck {
        let mut check = WeakCheck {
            holds: true,
            checked: 0,
            worst_margin: f64::INFINITY,
            witness: None,
        };
        for (x, cells) in &self.centers {
            let Some(top) = cells.last() else { continue };
            let cap = top.hi;
            for cell in cells {
                // the binding radius in the cell for each direction
                let r = match side {
                    Side::Upper => cell.hi,
                    Side::Lower => cell.lo,
                };
                let bound = top.mass / fit.c * (r / cap).powf(fit.gamma);
                let (margin, ok) = match side {
                    Side::Upper => (cell.mass / bound, cell.mass >= bound * (1.0 - INEQUALITY_TOLERANCE)),
                    Side::Lower => (bound / cell.mass, cell.mass <= bound * (1.0 + INEQUALITY_TOLERANCE)),
                };
                check.checked += 1;
                if margin < check.worst_margin {
                    check.worst_margin = margin;
                    check.witness = Some((*x, r));
                }
                check.holds &= ok;
            }
        }
        check
    }
}

/// Outcome of a `k = cap / R` check; `worst_margin >= 1` when it holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakCheck {
    pub holds: bool,
    pub checked: usize,
    pub worst_margin: f64,
    /// `(center, radius)` of the worst margin.
    pub witness: Option<(PointId, f64)>,
}

/// Largest `mu(B(x, factor R)) / mu(B(x, R))` with its location.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DilationReport {
    pub factor: f64,
    pub constant: f64,
    pub center: PointId,
    pub radius: f64,
}

/// `sup mu(B(x, 2R)) / mu(B(x, R))` over centers and radii `0 < 2R <= cap`.
pub fn doubling_constant(measure: &DiscreteMeasure, space: &PseudoMetricSpace, scale_cap: f64) -> Result<DilationReport> {
    dilation_constant(measure, space, scale_cap, 2.0, scale_cap)
}

/// `sup mu(B(x, factor R)) / mu(B(x, R))` over centers and real radii
/// `0 < R <= cap` with `factor R <= outer_cap`.
///
/// Both ball masses are constant while `R` stays in a half-open interval
/// `(b, b']` between consecutive breakpoints `d(x, y)` and `d(x, y) / factor`,
/// so each interval is evaluated once at its right end (clipped to the caps).
pub fn dilation_constant(
    measure: &DiscreteMeasure,
    space: &PseudoMetricSpace,
    scale_cap: f64,
    factor: f64,
    outer_cap: f64,
) -> Result<DilationReport> {
    ensure_supported(measure, space)?;
    if !(factor >= 1.0) {
        return Err(Error::InvalidConstant(format!("dilation factor {factor}")));
    }
    let limit = scale_cap.min(outer_cap / factor);
    let index = BallIndex::new(space);
    let prefix = index.prefix_masses(measure);
    let mut best = DilationReport {
        factor,
        constant: 1.0,
        center: 0,
        radius: limit,
    };
    if !(limit > 0.0) {
        return Ok(best);
    }
    for x in space.ids() {
        let d = index.distances(x);
        let mut breaks: Vec<f64> = Vec::with_capacity(2 * d.len() + 1);
        breaks.push(0.0);
        breaks.extend(d[1..].iter().copied());
        breaks.extend(d[1..].iter().map(|&v| v / factor));
        breaks.push(limit);
        breaks.retain(|&b| b <= limit);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        for &r in &breaks[1..] {
            let ratio = index.mass_within(&prefix, x, factor * r) / index.mass_within(&prefix, x, r);
            if ratio > best.constant {
                best = DilationReport {
                    factor,
                    constant: ratio,
                    center: x,
                    radius: r,
                };
            }
        }
    }
    Ok(best)
}

/// Reference implementation of [`dilation_constant`]: direct ball sums at
/// every radius of the global candidate set.
pub fn dilation_constant_exhaustive(
    measure: &DiscreteMeasure,
    space: &PseudoMetricSpace,
    scale_cap: f64,
    factor: f64,
    outer_cap: f64,
) -> Result<f64> {
    ensure_supported(measure, space)?;
    let limit = scale_cap.min(outer_cap / factor);
    let mut candidates = vec![limit];
    for x in space.ids() {
        for &v in space.row(x) {
            candidates.push(v);
            candidates.push(v / factor);
        }
    }
    let mut best: f64 = 1.0;
    for x in space.ids() {
        for &r in &candidates {
            if r > 0.0 && r <= limit {
                best = best.max(ball_mass(measure, space, x, factor * r) / ball_mass(measure, space, x, r));
            }
        }
    }
    Ok(best)
}

/// Which `(x, r, j)` triples the transport check visits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum TransportGrid {
    /// Every center, verification radius and level.
    Full,
    Sampled { count: usize, seed: u64 },
    /// Full up to `MAX_FULL_GRID` points, otherwise 10^4 seeded samples.
    Auto { seed: u64 },
}

/// Largest space checked on the full grid by [`TransportGrid::Auto`].
pub const MAX_FULL_GRID: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransportViolation {
    pub center: PointId,
    pub radius: f64,
    pub level: usize,
    /// `mu_j(B(x, r))` against `mu(B(x, r + C4 A^-j))`, or the reverse.
    pub lhs: f64,
    pub rhs: f64,
    pub forward: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportReport {
    pub c4: f64,
    pub checked: usize,
    pub full_grid: bool,
    /// Smallest `rhs - lhs` over all checked inequalities.
    pub min_slack: f64,
    pub violations: Vec<TransportViolation>,
}

impl TransportReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `mu_j(B(x,r)) <= mu(B(x, r + C4 A^-j))` and
/// `mu(B(x,r)) <= mu_j(B(x, r + C4 A^-j))` for the snapshots of a
/// construction on `space` (the hierarchy's working space).
pub fn transport_bound_check(construction: &Construction, space: &PseudoMetricSpace, grid: TransportGrid) -> TransportReport {
    let k = &construction.constants;
    let index = BallIndex::new(space);
    let final_prefix = index.prefix_masses(&construction.measure);
    let snapshot_prefix: Vec<Vec<f64>> = construction.snapshots.iter().map(|m| index.prefix_masses(m)).collect();
    let radii = verification_radii(space, space.diameter().max(f64::MIN_POSITIVE) * 2.0);
    let mut report = TransportReport {
        c4: k.c4,
        checked: 0,
        full_grid: false,
        min_slack: f64::INFINITY,
        violations: Vec::new(),
    };
    let check = |x: PointId, r: f64, j: usize, report: &mut TransportReport| {
        let wider = r + k.c4 * k.a.powi(-(j as i32));
        let pairs = [
            (index.mass_within(&snapshot_prefix[j], x, r), index.mass_within(&final_prefix, x, wider), true),
            (index.mass_within(&final_prefix, x, r), index.mass_within(&snapshot_prefix[j], x, wider), false),
        ];
        for (lhs, rhs, forward) in pairs {
            report.checked += 1;
            report.min_slack = report.min_slack.min(rhs - lhs);
            if lhs > rhs + crate::transfer::CONSERVATION_TOLERANCE {
                report.violations.push(TransportViolation { center: x, radius: r, level: j, lhs, rhs, forward });
            }
        }
    };
    let levels = construction.snapshots.len();
    let grid = match grid {
        TransportGrid::Auto { seed } if space.len() > MAX_FULL_GRID => TransportGrid::Sampled { count: 10_000, seed },
        TransportGrid::Auto { .. } => TransportGrid::Full,
        g => g,
    };
    match grid {
        TransportGrid::Full | TransportGrid::Auto { .. } => {
            report.full_grid = true;
            for x in space.ids() {
                for &r in &radii {
                    for j in 0..levels {
                        check(x, r, j, &mut report);
                    }
                }
            }
        }
        TransportGrid::Sampled { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..count {
                let x = rng.gen_range(0..space.len());
                let r = radii[rng.gen_range(0..radii.len())];
                let j = rng.gen_range(0..levels);
                check(x, r, j, &mut report);
            }
        }
    }
    report
}

/// Consistency of packing fits with measure fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrivialInequalityReport {
    pub gamma_upper: f64,
    /// Packing constant `c` with `N <= c k^gamma`.
    pub packing_upper: f64,
    /// Measure constant `C` with `mu(B(x,kR)) <= C k^gamma mu(B(x,R))`.
    pub measure_upper: f64,
    /// `C 8^gamma C_d^{3 gamma}`.
    pub upper_bound: f64,
    pub upper_holds: bool,
    /// Whether every packing count was exact (otherwise the upper side is
    /// only checked against lower bounds on `N`).
    pub upper_counts_exact: bool,
    pub upper_witness: PackingObservation,
    pub gamma_lower: f64,
    /// Packing constant `c` with `N >= c k^gamma`.
    pub packing_lower: f64,
    /// Measure constant `C` with `mu(B(x,kR)) >= C k^gamma mu(B(x,R))`.
    pub measure_lower: f64,
    /// `max mu(B(x, 2 C_d R)) / mu(B(x, R))`.
    pub dilation: f64,
    /// `C / dilation`.
    pub lower_bound: f64,
    pub lower_holds: bool,
    pub lower_witness: PackingObservation,
}

impl TrivialInequalityReport {
    pub fn passed(&self) -> bool {
        self.upper_holds && self.lower_holds
    }
}

/// Measure-side inputs of [`trivial_inequality_report`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureFits {
    pub gamma_upper: f64,
    pub upper: f64,
    pub gamma_lower: f64,
    pub lower: f64,
    /// Dilation constant at factor `2 C_d`.
    pub dilation: f64,
}

impl MeasureFits {
    /// Fits of a measure at the given exponents, with the dilation constant
    /// over radii up to the scale cap and unrestricted outer radius.
    pub fn compute(
        measure: &DiscreteMeasure,
        space: &PseudoMetricSpace,
        envelope: &RatioEnvelope,
        gamma_upper: f64,
        gamma_lower: f64,
    ) -> Result<Self> {
        let factor = 2.0 * space.c_d();
        let dilation = dilation_constant(measure, space, envelope.scale_cap(), factor, f64::INFINITY)?;
        Ok(MeasureFits {
            gamma_upper,
            upper: envelope.fit_upper(gamma_upper)?.c,
            gamma_lower,
            lower: envelope.fit_lower(gamma_lower)?.c,
            dilation: dilation.constant,
        })
    }
}

/// If `mu` satisfies the upper bound with constant `C`, packing counts obey
/// `N <= C 8^gamma C_d^{3 gamma} k^gamma`; if it satisfies the lower bound
/// with constant `C` and dilation constant `D` at factor `2 C_d`, maximal
/// separated sets obey `N >= (C / D) k^gamma`.
pub fn trivial_inequality_report(
    packing: &[PackingObservation],
    fits: &MeasureFits,
    c_d: f64,
) -> Result<TrivialInequalityReport> {
    let pu = fit_upper_dimension(packing, fits.gamma_upper)?;
    let pl = fit_lower_dimension(packing, fits.gamma_lower)?;
    let g = fits.gamma_upper;
    let upper_bound = fits.upper * 8f64.powf(g) * c_d.powf(3.0 * g);
    let lower_bound = fits.lower / fits.dilation;
    Ok(TrivialInequalityReport {
        gamma_upper: g,
        packing_upper: pu.c,
        measure_upper: fits.upper,
        upper_bound,
        upper_holds: pu.c <= upper_bound * (1.0 + INEQUALITY_TOLERANCE),
        upper_counts_exact: packing.iter().all(|o| o.exact),
        upper_witness: pu.witness,
        gamma_lower: fits.gamma_lower,
        packing_lower: pl.c,
        measure_lower: fits.lower,
        dilation: fits.dilation,
        lower_bound,
        lower_holds: pl.c >= lower_bound * (1.0 - INEQUALITY_TOLERANCE),
        lower_witness: pl.witness,
    })
}

/// Options of [`verify_measure`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub gamma_upper: f64,
    pub gamma_lower: f64,
    pub scale_cap: f64,
    pub centers: CenterSelection,
}

/// Fits, doubling constant and weak-condition checks of one measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub scale_cap: f64,
    pub centers: CenterSelection,
    pub u_fit: DimensionFit<BallRatioObservation>,
    pub l_fit: DimensionFit<BallRatioObservation>,
    pub doubling_constant: f64,
    pub doubling_witness: DilationReport,
    pub weak_upper: WeakCheck,
    pub weak_lower: WeakCheck,
    /// Failed checks, one line each.
    pub violations: Vec<String>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Runs the ratio fits at the requested exponents and the doubling check.
pub fn verify_measure(
    measure: &DiscreteMeasure,
    space: &PseudoMetricSpace,
    options: &VerifyOptions,
) -> Result<(VerificationReport, RatioEnvelope)> {
    let envelope = RatioEnvelope::with_centers(measure, space, options.scale_cap, options.centers)?;
    let u_fit = envelope.fit_upper(options.gamma_upper)?;
    let l_fit = envelope.fit_lower(options.gamma_lower)?;
    let doubling = doubling_constant(measure, space, options.scale_cap)?;
    let weak_upper = envelope.weak_upper_check(&u_fit);
    let weak_lower = envelope.weak_lower_check(&l_fit);
    let mut violations = Vec::new();
    if !u_fit.c.is_finite() {
        violations.push(format!("upper constant at gamma = {} is not finite", u_fit.gamma));
    }
    if !(l_fit.c.is_finite() && l_fit.c > 0.0) {
        violations.push(format!("lower constant at gamma = {} is not positive", l_fit.gamma));
    }
    if !weak_upper.holds {
        violations.push(format!("weak upper condition fails at {:?}", weak_upper.witness));
    }
    if !weak_lower.holds {
        violations.push(format!("weak lower condition fails at {:?}", weak_lower.witness));
    }
    Ok((
        VerificationReport {
            scale_cap: options.scale_cap,
            centers: options.centers,
            u_fit,
            l_fit,
            doubling_constant: doubling.constant,
            doubling_witness: doubling,
            weak_upper,
            weak_lower,
            violations,
        },
        envelope,
    ))
}

/// One row of the `k` versus ratio plot table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub center: PointId,
    pub r_small: f64,
    pub r_big: f64,
    pub k: f64,
    pub ratio: f64,
}

/// Ratios at dyadic radii `cap 2^-i` (down to below the minimum distance)
/// for every center.
pub fn plot_data(measure: &DiscreteMeasure, space: &PseudoMetricSpace, scale_cap: f64) -> Vec<PlotRow> {
    let radii = crate::packing::dyadic_radii(space, scale_cap);
    let index = BallIndex::new(space);
    let prefix = index.prefix_masses(measure);
    let mut rows = Vec::new();
    for x in space.ids() {
        let masses: Vec<f64> = radii.iter().map(|&r| index.mass_within(&prefix, x, r)).collect();
        for b in 0..radii.len() {
            for s in 0..=b {
                rows.push(PlotRow {
                    center: x,
                    r_small: radii[s],
                    r_big: radii[b],
                    k: radii[b] / radii[s],
                    ratio: masses[b] / masses[s],
                });
            }
        }
    }
    rows
}
