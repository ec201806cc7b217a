#![allow(dead_code)]

use ssfinsler::{Family, MetricSpec};

/// One instance of every catalog family, with the parameters used throughout
/// the tests.
pub fn catalog_instances() -> Vec<Family> {
    vec![
        Family::Euclidean {},
        Family::Klein {},
        Family::ProjSphere {},
        Family::Funk {},
        Family::Berwald {},
        Family::Shen { eps: 0.5 },
        Family::Soln1 { c: 1.0, k: -1.0 },
        Family::SolnFamily {
            c: 1.0,
            d: 0.3,
            k: 1.0,
            branch: 0,
        },
        Family::SolnK0 { c: 2.0, d: 0.5 },
        Family::SolnKm1 { c: 2.0, d: 0.5 },
        Family::Bryant { c: 1.0, d: 0.3 },
        Family::TestPoly { a: 0.1, b: 0.05 },
    ]
}

pub fn spec(f: Family, n: usize) -> MetricSpec {
    MetricSpec::new(f, n).unwrap()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}
