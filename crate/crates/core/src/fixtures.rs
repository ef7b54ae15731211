//! Charts shipped with the crate.

use crate::chart_format::parse_dg_spec;
use crate::error::{Error, Result};
use crate::graded::ChartedDgManifold;

const CHARTS: &[(&str, &str)] = &[
    ("abelian2", include_str!("../charts/abelian2.dg")),
    ("so3", include_str!("../charts/so3.dg")),
    ("heisenberg", include_str!("../charts/heisenberg.dg")),
    ("affine2", include_str!("../charts/affine2.dg")),
    ("string_su2", include_str!("../charts/string_su2.dg")),
    ("poisson_const", include_str!("../charts/poisson_const.dg")),
    (
        "poisson_quadratic",
        include_str!("../charts/poisson_quadratic.dg"),
    ),
    ("courant_std", include_str!("../charts/courant_std.dg")),
    ("courant_hflux", include_str!("../charts/courant_hflux.dg")),
    ("broken_jacobi", include_str!("../charts/broken_jacobi.dg")),
];

/// Names of the valid bundled charts (the failure fixture is excluded).
pub const BUNDLED: &[&str] = &[
    "abelian2",
    "so3",
    "heisenberg",
    "affine2",
    "string_su2",
    "poisson_const",
    "poisson_quadratic",
    "courant_std",
    "courant_hflux",
];

pub fn source(name: &str) -> Option<&'static str> {
    let stem = name.strip_suffix(".dg").unwrap_or(name);
    CHARTS.iter().find(|(n, _)| *n == stem).map(|(_, s)| *s)
}

pub fn bundled(name: &str) -> Result<ChartedDgManifold> {
    bundled_with(name, false)
}

pub fn bundled_with(name: &str, allow_unchecked: bool) -> Result<ChartedDgManifold> {
    let stem = name.strip_suffix(".dg").unwrap_or(name);
    let text =
        source(stem).ok_or_else(|| Error::InvalidChart(format!("no bundled chart {name:?}")))?;
    parse_dg_spec(text, stem, allow_unchecked)
}
