//! Geometries used by the bundled experiments.

use crate::mesh::Inclusion;

/// Six inclusions of mixed shape in two rows.
pub fn six_inclusion_target() -> Vec<Inclusion> {
    vec![
        Inclusion::ellipse(0.24, 0.27, 0.12, 0.08, 0.3),
        Inclusion::circle(0.53, 0.24, 0.09),
        Inclusion::ellipse(0.8, 0.3, 0.08, 0.12, 0.0),
        Inclusion::circle(0.22, 0.73, 0.1),
        Inclusion::ellipse(0.52, 0.7, 0.11, 0.07, -0.4),
        Inclusion::circle(0.79, 0.75, 0.09),
    ]
}

/// Equal circles on a regular two-by-three grid, one per target inclusion.
pub fn six_inclusion_initial() -> Vec<Inclusion> {
    [0.25, 0.75]
        .iter()
        .flat_map(|&y| [0.25, 0.5, 0.75].map(|x| Inclusion::circle(x, y, 0.08)))
        .collect()
}

/// Ellipse used as the starting shape of the single-interface experiments.
pub fn single_ellipse() -> Inclusion {
    Inclusion::ellipse(0.5, 0.5, 0.28, 0.16, 0.5)
}

/// Circle used as the target of the single-interface experiments.
pub fn single_circle() -> Inclusion {
    Inclusion::circle(0.5, 0.5, 0.2)
}
