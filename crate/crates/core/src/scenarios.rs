//! The worked Cantor-type examples: a single Cantor set, the disjoint union
//! `E = C_t ∪ C_s` and the touching union `F = C_1 ∪ C_2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nets::NetHierarchy;
use crate::space::{generate_cantor, union_spaces, PointId, PseudoMetricSpace};
use crate::transfer::DiscreteMeasure;

/// `log 2 / log 3`, dimension of the middle-thirds Cantor set.
pub fn dim_cantor_third() -> f64 {
    2f64.ln() / 3f64.ln()
}

/// `log 2 / log 9`, dimension of the Cantor set with ratio 1/9.
pub fn dim_cantor_ninth() -> f64 {
    2f64.ln() / 9f64.ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// `cantor(1/3, l)` on `[0, 1]`.
    Cantor,
    /// `cantor(1/9, l/2)` on `[0, 1]` and `cantor(1/3, l)` on `[2, 3]`.
    Disjoint,
    /// `cantor(1/3, 2 (l/2))` on `[0, 1]` and `cantor(1/9, l/2)` on `[1, 2]`.
    Touching,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Cantor, Scenario::Disjoint, Scenario::Touching];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Cantor => "cantor",
            Scenario::Disjoint => "disjoint",
            Scenario::Touching => "touching",
        }
    }

    /// Expected `(lower, upper)` dimensions of the limit set.
    pub fn dimensions(self) -> (f64, f64) {
        match self {
            Scenario::Cantor => (dim_cantor_third(), dim_cantor_third()),
            Scenario::Disjoint | Scenario::Touching => (dim_cantor_ninth(), dim_cantor_third()),
        }
    }
}

/// A generated example together with the point sets of its pieces.
#[derive(Debug, Clone)]
pub struct ScenarioSpace {
    pub scenario: Scenario,
    pub level: u32,
    pub space: PseudoMetricSpace,
    /// Ids of each Cantor piece; pieces of `F` share the point 1.
    pub branches: Vec<Vec<PointId>>,
}

/// Builds the example at demo level `level`. Both pieces of the unions are
/// truncated at the same 9-adic scale.
pub fn scenario_space(scenario: Scenario, level: u32) -> Result<ScenarioSpace> {
    match scenario {
        Scenario::Cantor => {
            let space = generate_cantor(1.0 / 3.0, level, (0.0, 1.0))?;
            let branches = vec![space.ids().collect()];
            Ok(ScenarioSpace { scenario, level, space, branches })
        }
        Scenario::Disjoint => {
            let ct = generate_cantor(1.0 / 9.0, level / 2, (0.0, 1.0))?;
            let cs = generate_cantor(1.0 / 3.0, level, (2.0, 3.0))?;
            let space = union_spaces(&ct, &cs)?;
            let branches = split_at(&space, 1.0, 2.0);
            Ok(ScenarioSpace { scenario, level, space, branches })
        }
        Scenario::Touching => {
            let mut s = touching_union(level / 2)?;
            s.level = level;
            Ok(s)
        }
    }
}

/// `F` at truncation level `l`: `C_1 = cantor(1/3, 2l)` on `[0, 1]` and
/// `C_2 = cantor(1/9, l)` on `[1, 2]`.
pub fn touching_union(l: u32) -> Result<ScenarioSpace> {
    let c1 = generate_cantor(1.0 / 3.0, 2 * l, (0.0, 1.0))?;
    let c2 = generate_cantor(1.0 / 9.0, l, (1.0, 2.0))?;
    let space = union_spaces(&c1, &c2)?;
    let branches = split_at(&space, 1.0, 1.0);
    Ok(ScenarioSpace {
        scenario: Scenario::Touching,
        level: 2 * l,
        space,
        branches,
    })
}

/// Points with coordinate `<= left_end` and points with coordinate
/// `>= right_start`.
fn split_at(space: &PseudoMetricSpace, left_end: f64, right_start: f64) -> Vec<Vec<PointId>> {
    let coords = space.coords().expect("generated spaces carry coordinates");
    let left = space.ids().filter(|&p| coords[p][0] <= left_end).collect();
    let right = space.ids().filter(|&p| coords[p][0] >= right_start).collect();
    vec![left, right]
}

/// Average of the uniform probability measures on each branch. On `F` this
/// is `(nu_1 + nu_2) / 2`, which puts extra mass on the shared point.
pub fn branch_measure(space: &PseudoMetricSpace, branches: &[Vec<PointId>]) -> Result<DiscreteMeasure> {
    if branches.is_empty() || branches.iter().any(|b| b.is_empty()) {
        return Err(Error::InvalidMeasure("every branch needs a point".into()));
    }
    let mut mass = vec![0.0; space.len()];
    let weight = 1.0 / branches.len() as f64;
    for branch in branches {
        let share = weight / branch.len() as f64;
        for &p in branch {
            mass[p] += share;
        }
    }
    Ok(DiscreteMeasure { level: 0, mass })
}

/// Exponents certified by the child counts of levels `0..levels`:
/// `s' = log(max) / log A` and `t' = log(min) / log A`.
pub fn certifying_exponents(h: &NetHierarchy, levels: usize) -> Option<(f64, f64)> {
    let counts: Vec<usize> = (0..levels.min(h.depth()))
        .flat_map(|m| h.child_counts(m).into_iter().map(|(_, c)| c))
        .collect();
    let max = *counts.iter().max()?;
    let min = *counts.iter().min()?;
    let ln_a = h.scale_base().ln();
    Some(((max as f64).ln() / ln_a, (min as f64).ln() / ln_a))
}

/// Exponents for a construction on `h` from the child counts of levels
/// `0..levels`. When every parent has the same number `n` of children the
/// certifying pair collapses, so `(log(n + 1), log(max(n - 1, 1))) / log A`
/// is used instead. Falls back to `(1, 0)` without any counted level.
pub fn construction_exponents(h: &NetHierarchy, levels: usize) -> (f64, f64) {
    match certifying_exponents(h, levels) {
        Some((s, t)) if s > t => (s, t),
        Some((s, _)) => {
            let n = h.scale_base().powf(s).round();
            let ln_a = h.scale_base().ln();
            ((n + 1.0).ln() / ln_a, (n - 1.0).max(1.0).ln() / ln_a)
        }
        None => (1.0, 0.0),
    }
}
