//! Separated sets, packing numbers `N(x, R, k)` and power-law fits.
//!
//! `N(x, R, k)` is the largest number of points of the open ball `B(x, kR)`
//! that are pairwise at distance `>= R`. Three counters are provided:
//!
//! * [`exact_packing_number`]: branch and bound maximum independent set on
//!   the "too close" graph, limited to a configurable number of points;
//! * [`line_packing_number`]: leftmost-first sweep, exact for point sets on a
//!   line under a distance that is monotone in the coordinate gap;
//! * [`greedy_separated`]: deterministic maximal set, a lower bound on `N`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{MetricRule, PointId, PseudoMetricSpace};

/// Default size limit for [`exact_packing_number`].
pub const DEFAULT_ORACLE_CAP: usize = 24;

/// Hard limit imposed by the bitmask representation.
const MAX_ORACLE_POINTS: usize = 64;

/// Maximal `separation`-separated subset of `candidates`, scanned in
/// ascending id order.
pub fn greedy_separated(
    space: &PseudoMetricSpace,
    candidates: &[PointId],
    separation: f64,
) -> Vec<PointId> {
    greedy_separated_seeded(space, &[], candidates, separation)
}

/// Like [`greedy_separated`], but `seeds` are accepted first without test.
/// The seeds must already be pairwise `separation`-separated.
pub fn greedy_separated_seeded(
    space: &PseudoMetricSpace,
    seeds: &[PointId],
    candidates: &[PointId],
    separation: f64,
) -> Vec<PointId> {
    let mut order = candidates.to_vec();
    order.sort_unstable();
    order.dedup();
    let mut chosen = seeds.to_vec();
    for c in order {
        let row = space.row(c);
        if chosen.iter().all(|&s| row[s] >= separation) {
            chosen.push(c);
        }
    }
    chosen.sort_unstable();
    chosen.dedup();
    chosen
}

/// Exact maximum number of pairwise `separation`-separated points among
/// `members`.
pub fn exact_packing_number(
    space: &PseudoMetricSpace,
    members: &[PointId],
    separation: f64,
    cap: usize,
) -> Result<usize> {
    let cap = cap.min(MAX_ORACLE_POINTS);
    if members.len() > cap {
        return Err(Error::OracleTooLarge {
            size: members.len(),
            cap,
        });
    }
    let n = members.len();
    if n == 0 {
        return Ok(0);
    }
    // conflict[i]: members closer than `separation` to member i
    let mut conflict = vec![0u64; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if space.dist(members[i], members[j]) < separation {
                conflict[i] |= 1 << j;
                conflict[j] |= 1 << i;
            }
        }
    }
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut best = 0;
    max_independent(&conflict, all, 0, &mut best);
    Ok(best)
}

fn max_independent(conflict: &[u64], open: u64, taken: usize, best: &mut usize) {
    if open == 0 {
        *best = (*best).max(taken);
        return;
    }
    if taken + open.count_ones() as usize <= *best {
        return;
    }
    // vertices without open neighbours are always taken
    let mut free = 0u64;
    let mut pivot = 0usize;
    let mut pivot_degree = 0u32;
    let mut bits = open;
    while bits != 0 {
        let v = bits.trailing_zeros() as usize;
        bits &= bits - 1;
        let degree = (conflict[v] & open).count_ones();
        if degree == 0 {
            free |= 1 << v;
        } else if degree > pivot_degree {
            pivot = v;
            pivot_degree = degree;
        }
    }
    if free != 0 {
        max_independent(conflict, open & !free, taken + free.count_ones() as usize, best);
        return;
    }
    let without = open & !(1 << pivot);
    max_independent(conflict, without & !conflict[pivot], taken + 1, best);
    max_independent(conflict, without, taken, best);
}

/// True when the space is a subset of a line and distances grow with the
/// coordinate gap, so that [`line_packing_number`] is exact.
pub fn is_line_space(space: &PseudoMetricSpace) -> bool {
    matches!(
        space.rule(),
        MetricRule::Euclidean | MetricRule::Max | MetricRule::Snowflake { .. }
    ) && space.coords().is_some_and(|c| c.first().is_some_and(|p| p.len() == 1))
}

/// Exact packing number on a line: sweep by coordinate and keep every point
/// that is `separation` away from the last one kept.
pub fn line_packing_number(
    space: &PseudoMetricSpace,
    members: &[PointId],
    separation: f64,
) -> usize {
    let coords = space.coords().expect("line space has coordinates");
    let mut order = members.to_vec();
    order.sort_by(|&a, &b| coords[a][0].total_cmp(&coords[b][0]).then(a.cmp(&b)));
    let mut count = 0;
    let mut last: Option<PointId> = None;
    for p in order {
        if last.is_none_or(|l| space.dist(l, p) >= separation) {
            count += 1;
            last = Some(p);
        }
    }
    count
}

/// One packing count `N(center, r_small, r_big / r_small)` or a lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PackingObservation {
    pub center: PointId,
    pub r_small: f64,
    pub r_big: f64,
    pub k: f64,
    pub count: usize,
    pub exact: bool,
}

/// Which radii the profile ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RadiiPolicy {
    /// Midpoints between consecutive distinct distances.
    Spectrum,
    /// `cap * 2^-i` down to the first radius below the minimum distance.
    Dyadic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PackingMode {
    Exact,
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileOptions {
    pub policy: RadiiPolicy,
    pub mode: PackingMode,
    /// Largest admissible `kR`; defaults to the diameter.
    pub scale_cap: Option<f64>,
    pub oracle_cap: usize,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions {
            policy: RadiiPolicy::Spectrum,
            mode: PackingMode::Exact,
            scale_cap: None,
            oracle_cap: DEFAULT_ORACLE_CAP,
        }
    }
}

/// Scale cap used when none is given: the diameter, or 1 for a singleton.
pub fn default_scale_cap(space: &PseudoMetricSpace) -> f64 {
    if space.diameter() > 0.0 {
        space.diameter()
    } else {
        1.0
    }
}

/// Ascending radii: half the minimum distance, every midpoint between
/// consecutive distinct distances up to `cap`, and `cap` itself.
pub fn spectrum_radii(space: &PseudoMetricSpace, cap: f64) -> Vec<f64> {
    let distances = space.distinct_distances();
    let mut radii = Vec::with_capacity(distances.len() + 1);
    if let Some(&first) = distances.first() {
        radii.push(first / 2.0);
    }
    radii.extend(
        distances
            .windows(2)
            .map(|w| (w[0] + w[1]) / 2.0)
            .take_while(|&r| r <= cap),
    );
    radii.retain(|&r| r < cap);
    radii.push(cap);
    radii
}

/// Ascending radii `cap * 2^-i`, `i = 0, 1, ...`, stopping at the first one
/// below the minimum distance.
pub fn dyadic_radii(space: &PseudoMetricSpace, cap: f64) -> Vec<f64> {
    let floor = space.min_distance();
    let mut radii = vec![cap];
    let mut r = cap;
    while r >= floor && floor.is_finite() {
        r /= 2.0;
        radii.push(r);
    }
    radii.reverse();
    radii
}

/// Packing observations for every center and every pair of policy radii
/// `R <= kR <= cap`.
pub fn packing_profile(space: &PseudoMetricSpace, options: &ProfileOptions) -> Vec<PackingObservation> {
    let cap = options.scale_cap.unwrap_or_else(|| default_scale_cap(space));
    let radii = match options.policy {
        RadiiPolicy::Spectrum => spectrum_radii(space, cap),
        RadiiPolicy::Dyadic => dyadic_radii(space, cap),
    };
    let line = is_line_space(space);
    let mut out = Vec::new();
    for center in space.ids() {
        let row = space.row(center);
        for (bi, &r_big) in radii.iter().enumerate() {
            let ball: Vec<PointId> = space.ids().filter(|&y| row[y] < r_big).collect();
            for &r_small in &radii[..=bi] {
                let (count, exact) = count_separated(space, &ball, r_small, options, line);
                out.push(PackingObservation {
                    center,
                    r_small,
                    r_big,
                    k: r_big / r_small,
                    count,
                    exact,
                });
            }
        }
    }
    out
}

fn count_separated(
    space: &PseudoMetricSpace,
    ball: &[PointId],
    separation: f64,
    options: &ProfileOptions,
    line: bool,
) -> (usize, bool) {
    if options.mode == PackingMode::Exact {
        if line {
            return (line_packing_number(space, ball, separation), true);
        }
        if let Ok(n) = exact_packing_number(space, ball, separation, options.oracle_cap) {
            return (n, true);
        }
    }
    (greedy_separated(space, ball, separation).len(), false)
}

/// Which inequality a fit certifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `value <= c * k^gamma`
    Upper,
    /// `value >= c * k^gamma`
    Lower,
}

/// Observations carrying a dilation `k >= 1` and a positive quantity that a
/// power law `c * k^gamma` should bound.
pub trait Dilated {
    fn dilation(&self) -> f64;
    fn quantity(&self) -> f64;
}

impl Dilated for PackingObservation {
    fn dilation(&self) -> f64 {
        self.k
    }
    fn quantity(&self) -> f64 {
        self.count as f64
    }
}

/// Exponent with its extremal constant and the observation attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionFit<W = PackingObservation> {
    pub gamma: f64,
    pub c: f64,
    pub side: Side,
    pub witness: W,
}

impl<W: Dilated> DimensionFit<W> {
    /// Whether `obs` satisfies the fitted inequality, up to relative `tol`.
    pub fn admits(&self, obs: &W, tol: f64) -> bool {
        let bound = self.c * obs.dilation().powf(self.gamma);
        match self.side {
            Side::Upper => obs.quantity() <= bound * (1.0 + tol),
            Side::Lower => obs.quantity() >= bound * (1.0 - tol),
        }
    }
}

/// Extremal constant of `quantity / k^gamma` over the profile.
pub fn fit_power_law<W: Dilated + Clone>(profile: &[W], gamma: f64, side: Side) -> Result<DimensionFit<W>> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidExponents(format!("gamma = {gamma}")));
    }
    let mut best: Option<(f64, &W)> = None;
    for obs in profile {
        let v = obs.quantity() / obs.dilation().powf(gamma);
        let better = match (best, side) {
            (None, _) => true,
            (Some((b, _)), Side::Upper) => v > b,
            (Some((b, _)), Side::Lower) => v < b,
        };
        if better {
            best = Some((v, obs));
        }
    }
    let (c, witness) = best.ok_or(Error::EmptyProfile)?;
    Ok(DimensionFit {
        gamma,
        c,
        side,
        witness: witness.clone(),
    })
}

/// Smallest `C` with `count <= C k^gamma` over the profile.
pub fn fit_upper_dimension(profile: &[PackingObservation], gamma: f64) -> Result<DimensionFit> {
    fit_power_law(profile, gamma, Side::Upper)
}

/// Largest `C` with `count >= C k^gamma` over the profile. Greedy counts are
/// lower bounds on `N`, so every observation is admissible here.
pub fn fit_lower_dimension(profile: &[PackingObservation], gamma: f64) -> Result<DimensionFit> {
    fit_power_law(profile, gamma, Side::Lower)
}

/// One point of a constant-versus-exponent curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub gamma: f64,
    pub c: f64,
}

/// Default upper end of the exponent sweep.
pub const DEFAULT_GAMMA_MAX: f64 = 2.0;

/// Exponent grid `0, resolution, 2 resolution, ...` up to `gamma_max`.
pub fn gamma_grid(resolution: f64, gamma_max: f64) -> Result<Vec<f64>> {
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(Error::InvalidResolution(resolution));
    }
    let steps = (gamma_max / resolution + 1e-9).floor().max(0.0) as usize;
    Ok((0..=steps).map(|i| i as f64 * resolution).collect())
}

/// Fitted constant at every exponent of the grid.
pub fn scan_dimension<W: Dilated + Clone>(
    profile: &[W],
    side: Side,
    resolution: f64,
    gamma_max: f64,
) -> Result<Vec<CurvePoint>> {
    gamma_grid(resolution, gamma_max)?
        .into_iter()
        .map(|gamma| {
            fit_power_law(profile, gamma, side).map(|fit| CurvePoint { gamma, c: fit.c })
        })
        .collect()
}

/// Log-slope threshold defining the knee.
pub const KNEE_SLOPE: f64 = 0.5;

/// Exponent where the curve changes regime.
///
/// The slope of `ln c` between consecutive grid points is divided by
/// `ln k_max`, the largest log-dilation in the data, which makes it the
/// fraction of the widest observation that still drives the fit. For the
/// upper side the knee is the first grid exponent at which this normalized
/// slope magnitude drops below [`KNEE_SLOPE`]; for the lower side it is the
/// first one at which it reaches [`KNEE_SLOPE`]. Returns `None` when the
/// curve never crosses the threshold or `k_max = 1`.
pub fn curve_knee(curve: &[CurvePoint], side: Side, k_max: f64) -> Option<f64> {
    let scale = k_max.ln();
    if !(scale > 0.0) {
        return None;
    }
    curve.windows(2).find_map(|w| {
        let slope = (w[1].c.ln() - w[0].c.ln()).abs() / (w[1].gamma - w[0].gamma) / scale;
        let hit = match side {
            Side::Upper => slope < KNEE_SLOPE,
            Side::Lower => slope >= KNEE_SLOPE,
        };
        hit.then_some(w[0].gamma)
    })
}

/// Largest dilation present in a profile.
pub fn max_dilation<W: Dilated>(profile: &[W]) -> f64 {
    profile.iter().map(Dilated::dilation).fold(1.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> PseudoMetricSpace {
        PseudoMetricSpace::from_line(xs).unwrap()
    }

    fn brute_force(space: &PseudoMetricSpace, members: &[PointId], sep: f64) -> usize {
        let n = members.len();
        (0u32..1 << n)
            .filter(|mask| {
                let picked: Vec<_> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
                picked.iter().enumerate().all(|(a, &i)| {
                    picked[a + 1..]
                        .iter()
                        .all(|&j| space.dist(members[i], members[j]) >= sep)
                })
            })
            .map(|mask| mask.count_ones() as usize)
            .max()
            .unwrap_or(0)
    }

    #[test]
    fn greedy_skips_close_candidate() {
        let s = line(&[0.0, 0.4, 1.0]);
        assert_eq!(greedy_separated(&s, &[0, 1, 2], 0.5), vec![0, 2]);
        // 0.4 is within 0.5 of 0, so nothing can be added
        assert!(s.dist(0, 1) < 0.5);
    }

    #[test]
    fn greedy_small_separation_keeps_everything() {
        let s = line(&[0.0, 0.4, 1.0]);
        assert_eq!(greedy_separated(&s, &[2, 0, 1], s.canonical(0.4)), vec![0, 1, 2]);
        assert_eq!(greedy_separated(&s, &[1], 10.0), vec![1]);
    }

    #[test]
    fn exact_examples() {
        let s = line(&[0.0, 0.3, 0.6, 1.0]);
        let all = [0, 1, 2, 3];
        assert_eq!(exact_packing_number(&s, &all, 0.35, 24).unwrap(), 3);
        assert_eq!(brute_force(&s, &all, 0.35), 3);
        assert_eq!(exact_packing_number(&s, &all, 1.5, 24).unwrap(), 1);
        let two = line(&[0.0, 1.0]);
        assert_eq!(exact_packing_number(&two, &[0, 1], 0.5, 24).unwrap(), 2);
    }

    #[test]
    fn exact_respects_cap() {
        let s = line(&(0..30).map(f64::from).collect::<Vec<_>>());
        let all: Vec<_> = s.ids().collect();
        assert_eq!(
            exact_packing_number(&s, &all, 1.0, 24),
            Err(Error::OracleTooLarge { size: 30, cap: 24 })
        );
        assert_eq!(exact_packing_number(&s, &all, 2.0, 30).unwrap(), 15);
    }

    #[test]
    fn exact_beats_greedy_on_a_path() {
        // greedy takes the middle point first in id order and stops at 1
        let s = PseudoMetricSpace::from_table(
            vec![0, 1, 2],
            vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 2.0], vec![1.0, 2.0, 0.0]],
        )
        .unwrap();
        assert_eq!(greedy_separated(&s, &[0, 1, 2], 1.5).len(), 1);
        assert_eq!(exact_packing_number(&s, &[0, 1, 2], 1.5, 24).unwrap(), 2);
    }

    #[test]
    fn two_point_profile() {
        let s = line(&[0.0, 1.0]);
        let opts = ProfileOptions {
            scale_cap: Some(1.5),
            ..Default::default()
        };
        let profile = packing_profile(&s, &opts);
        // radii: 0.5 and the cap 1.5
        let at = |rs: f64, rb: f64| {
            profile
                .iter()
                .find(|o| o.center == 0 && o.r_small == rs && o.r_big == rb)
                .unwrap()
                .count
        };
        assert_eq!(at(0.5, 0.5), 1);
        assert_eq!(at(0.5, 1.5), 2);
        assert_eq!(at(1.5, 1.5), 1);
        assert!(profile.iter().all(|o| o.exact && o.k >= 1.0));
    }

    #[test]
    fn unit_dilation_below_min_distance_counts_one() {
        let s = crate::space::generate_cantor(1.0 / 3.0, 2, (0.0, 1.0)).unwrap();
        let profile = packing_profile(&s, &ProfileOptions::default());
        let r = s.min_distance() / 2.0;
        let hits: Vec<_> = profile.iter().filter(|o| o.r_big == r).collect();
        assert_eq!(hits.len(), s.len());
        assert!(hits.iter().all(|o| o.count == 1));
    }

    #[test]
    fn cantor_level_four_left_endpoints() {
        let s = crate::space::generate_cantor(1.0 / 3.0, 4, (0.0, 1.0)).unwrap();
        assert_eq!(s.len(), 32);
        // B(0, 1) misses only the point 1; with R just above 3^-4 each run of
        // four points 3^-4 apart contributes two
        let ball = s.ball(0, 1.0).members;
        assert_eq!(ball.len(), 31);
        let r = 1.5 * 3f64.powi(-4);
        assert_eq!(line_packing_number(&s, &ball, r), 16);
        assert_eq!(exact_packing_number(&s, &ball, r, 32).unwrap(), 16);
    }

    #[test]
    fn fit_examples() {
        let obs = PackingObservation {
            center: 0,
            r_small: 1.0,
            r_big: 2.0,
            k: 2.0,
            count: 4,
            exact: true,
        };
        assert_eq!(fit_upper_dimension(&[obs], 2.0).unwrap().c, 1.0);
        let fit = fit_upper_dimension(&[obs], 1.0).unwrap();
        assert_eq!(fit.c, 2.0);
        assert_eq!(fit.witness, obs);
        let obs4 = PackingObservation { k: 4.0, count: 2, r_big: 4.0, ..obs };
        assert_eq!(fit_lower_dimension(&[obs4], 0.5).unwrap().c, 1.0);
        assert_eq!(fit_lower_dimension(&[obs, obs4], 0.0).unwrap().c, 2.0);
        assert_eq!(fit_upper_dimension(&[], 1.0), Err(Error::EmptyProfile));
    }

    #[test]
    fn zero_resolution_rejected() {
        let s = line(&[0.0, 1.0]);
        let p = packing_profile(&s, &ProfileOptions::default());
        assert_eq!(
            scan_dimension(&p, Side::Upper, 0.0, 1.0),
            Err(Error::InvalidResolution(0.0))
        );
    }

    #[test]
    fn two_point_upper_curve_is_nonincreasing() {
        let s = line(&[0.0, 1.0]);
        let opts = ProfileOptions {
            scale_cap: Some(1.5),
            ..Default::default()
        };
        let p = packing_profile(&s, &opts);
        let curve = scan_dimension(&p, Side::Upper, 0.1, 2.0).unwrap();
        assert_eq!(curve.len(), 21);
        assert!(curve.windows(2).all(|w| w[1].c <= w[0].c));
        assert_eq!(curve[0].c, 2.0);
    }

    #[test]
    fn dyadic_radii_reach_below_min_distance() {
        let s = line(&[0.0, 0.25, 1.0]);
        let r = dyadic_radii(&s, 1.0);
        assert_eq!(r, vec![0.125, 0.25, 0.5, 1.0]);
    }

    #[test]
    fn spectrum_radii_are_midpoints() {
        let s = line(&[0.0, 1.0, 3.0]);
        assert_eq!(spectrum_radii(&s, 3.0), vec![0.5, 1.5, 2.5, 3.0]);
        assert_eq!(spectrum_radii(&s, 2.0), vec![0.5, 1.5, 2.0]);
    }

    #[test]
    fn knee_of_synthetic_curves() {
        // ln c falls at slope 2 ln 4 until gamma = 0.5, then flattens
        let k_max: f64 = 4.0;
        let curve: Vec<CurvePoint> = (0..=10)
            .map(|i| {
                let g = i as f64 * 0.1;
                let lc = if g <= 0.5 { -2.0 * k_max.ln() * g } else { -k_max.ln() };
                CurvePoint { gamma: g, c: lc.exp() }
            })
            .collect();
        let knee = curve_knee(&curve, Side::Upper, k_max).unwrap();
        assert!((knee - 0.5).abs() < 1e-12);
        assert_eq!(curve_knee(&curve, Side::Lower, k_max), Some(0.0));
        assert_eq!(curve_knee(&curve, Side::Upper, 1.0), None);
    }
}
