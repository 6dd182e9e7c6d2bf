//! Reference systems used throughout the tests, benches and CLI examples.

use std::f64::consts::FRAC_PI_4;

use crate::geometry::AffineIFS;
use crate::matrix2::{Mat2, Vec2};
use crate::symbolic::Bernoulli;

/// A named IFS together with its Bernoulli weights.
#[derive(Debug, Clone)]
pub struct ReferenceSystem {
    pub name: &'static str,
    pub ifs: AffineIFS,
    pub mu: Bernoulli,
}

fn build(
    name: &'static str,
    matrices: Vec<Mat2>,
    translations: Vec<Vec2>,
    probs: Vec<f64>,
) -> ReferenceSystem {
    ReferenceSystem {
        name,
        ifs: AffineIFS::new(matrices, translations).expect("reference system is valid"),
        mu: Bernoulli::new(probs).expect("reference weights are valid"),
    }
}

/// Diagonal pair `diag(0.5, 0.2)`, `diag(0.3, 0.25)` with `p = (0.6, 0.4)`.
pub fn d2() -> ReferenceSystem {
    build(
        "d2",
        vec![Mat2::diag(0.5, 0.2), Mat2::diag(0.3, 0.25)],
        vec![Vec2::new(0.0, 0.0), Vec2::new(0.7, 0.75)],
        vec![0.6, 0.4],
    )
}

/// The diagonal pair with uniform weights; a carpet with well separated pieces.
pub fn d2_carpet() -> ReferenceSystem {
    ReferenceSystem {
        name: "d2-carpet",
        mu: Bernoulli::uniform(2),
        ..d2()
    }
}

/// The diagonal pair with both translations zero; the pieces share a point.
pub fn d2_zero_translation() -> ReferenceSystem {
    build(
        "d2-zero-translation",
        vec![Mat2::diag(0.5, 0.2), Mat2::diag(0.3, 0.25)],
        vec![Vec2::ZERO, Vec2::ZERO],
        vec![0.6, 0.4],
    )
}

/// Two copies of `diag(0.4, 0.2)` with uniform weights.
pub fn equal_maps() -> ReferenceSystem {
    build(
        "equal-maps",
        vec![Mat2::diag(0.4, 0.2), Mat2::diag(0.4, 0.2)],
        vec![Vec2::new(0.0, 0.0), Vec2::new(0.6, 0.0)],
        vec![0.5, 0.5],
    )
}

/// A pair of strictly positive matrices with separated translations.
pub fn p1() -> ReferenceSystem {
    build(
        "p1",
        vec![
            Mat2::new(0.45, 0.15, 0.10, 0.30),
            Mat2::new(0.35, 0.10, 0.20, 0.40),
        ],
        vec![Vec2::new(0.0, 0.0), Vec2::new(0.6, 0.5)],
        vec![0.6, 0.4],
    )
}

/// Singleton `0.5·R(45°)`: conformal, hence not dominated.
pub fn rotation() -> ReferenceSystem {
    build(
        "rotation",
        vec![Mat2::rotation(FRAC_PI_4).scaled(0.5)],
        vec![Vec2::ZERO],
        vec![1.0],
    )
}

/// All reference systems by name.
pub fn by_name(name: &str) -> Option<ReferenceSystem> {
    match name {
        "d2" => Some(d2()),
        "d2-carpet" => Some(d2_carpet()),
        "d2-zero-translation" => Some(d2_zero_translation()),
        "equal-maps" => Some(equal_maps()),
        "p1" => Some(p1()),
        "rotation" => Some(rotation()),
        _ => None,
    }
}
