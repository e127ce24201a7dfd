//! Fixtures shared by the benchmarks.

use doubling_core::nets::{build_hierarchy, NetHierarchy};
use doubling_core::scenarios::touching_union;
use doubling_core::transfer::{build_measure, BuildOptions, Construction, TransferConstants};
use doubling_core::PseudoMetricSpace;

pub const A: f64 = 9.0;

/// `F` at truncation level `l`.
pub fn f_space(l: u32) -> PseudoMetricSpace {
    touching_union(l).expect("F").space
}

pub fn f_hierarchy(l: u32) -> NetHierarchy {
    build_hierarchy(&f_space(l), A, false).expect("hierarchy")
}

pub fn f_constants(h: &NetHierarchy) -> TransferConstants {
    TransferConstants::for_hierarchy(h, 5f64.ln() / A.ln(), 2f64.ln() / A.ln()).expect("constants")
}

pub fn f_construction(l: u32) -> (NetHierarchy, Construction) {
    let h = f_hierarchy(l);
    let k = f_constants(&h);
    let c = build_measure(&h, &k, &BuildOptions::default()).expect("construction");
    (h, c)
}
