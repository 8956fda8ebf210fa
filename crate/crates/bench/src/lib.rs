//! Fixtures shared by the criterion benches.

use binormal_core::Vec3;

/// Figure-style seeds `G(0) = (0,0,2 c0)`, `T(0) = e1` for a few `(a, c0)`.
pub fn standard_seeds() -> Vec<(f64, Vec3, Vec3)> {
    [(10.0, 1.0), (15.0, 5.0), (20.0, 3.0)]
        .iter()
        .map(|&(a, c0)| (a, Vec3::new(0.0, 0.0, 2.0 * c0), Vec3::E1))
        .collect()
}
