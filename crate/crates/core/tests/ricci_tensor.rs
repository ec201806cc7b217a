mod common;

use common::{norm, spec};
use nalgebra::DVector;
use ssfinsler::curvature::CurvatureBundle;
use ssfinsler::oracle::{self, SprayData};
use ssfinsler::verify::random_points;
use ssfinsler::{Family, PointSample};

fn bundle(s: &ssfinsler::MetricSpec, x: &[f64], y: &[f64]) -> CurvatureBundle {
    let r = norm(x);
    let sv = x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / norm(y);
    CurvatureBundle::at(s, PointSample::new(r, sv.clamp(-r, r)).unwrap()).unwrap()
}

#[test]
fn funk_ricci_tensor_is_a_multiple_of_g() {
    for n in [2, 3, 4] {
        let s = spec(Family::Funk {}, n);
        for (x, y) in random_points(n, s.rho, 8, 21) {
            let b = bundle(&s, &x, &y);
            let ric = b.compute_ricci_tensor(&x, &y).unwrap();
            let g = SprayData::from_profile(&s, &x, &y, 3).unwrap().g;
            let expect = g * (-0.25 * (n as f64 - 1.0));
            let diff = (&ric - &expect).amax();
            assert!(diff < 1e-11 * expect.amax(), "n={n}: {diff}");
        }
    }
}

#[test]
fn ricci_tensor_contracts_to_ricci_on_test_metric() {
    let s = spec(Family::TestPoly { a: 0.1, b: 0.05 }, 3);
    for (x, y) in random_points(3, s.rho, 10, 4) {
        let b = bundle(&s, &x, &y);
        let ric = b.compute_ricci_tensor(&x, &y).unwrap();
        let yv = DVector::from_column_slice(&y);
        let contracted = (yv.transpose() * &ric * &yv)[(0, 0)];
        let ric_scalar = b.compute_ricci(norm(&y));
        assert!((contracted - ric_scalar).abs() <= 1e-10 * ric_scalar.abs().max(1.0));
        assert!((&ric - ric.transpose()).amax() < 1e-14);
    }
}

#[test]
fn riemann_annihilates_y_on_test_metric() {
    let s = spec(Family::TestPoly { a: 0.1, b: 0.05 }, 3);
    for (x, y) in random_points(3, s.rho, 10, 9) {
        let b = bundle(&s, &x, &y);
        let r = b.assemble_riemann(&x, &y).unwrap();
        let ry = &r * DVector::from_column_slice(&y);
        assert!(ry.amax() <= 1e-12 * r.amax().max(1.0));
        let spray = SprayData::from_profile(&s, &x, &y, 4).unwrap();
        let ry = oracle::riemann_curvature(&spray).unwrap() * DVector::from_column_slice(&y);
        assert!(ry.amax() <= 1e-12 * r.amax().max(1.0));
    }
}
