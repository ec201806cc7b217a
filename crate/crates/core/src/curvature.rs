//! Reduced curvature of `F = |y| φ(r, s)` computed from the profile alone.
//!
//! The spray of such a metric is `G^i = |y| P y^i + |y|² Q x^i` with scalar
//! functions `P(r, s)` and `Q(r, s)`, and the Riemann curvature collapses to
//! four scalar functions `R1 .. R4` of `(r, s)`:
//!
//! ```text
//! R^i_j = R1 (|y|² δ_ij − y^i y^j) + |y| R2 (|y| x^j − s y^j) x^i + R4 (|y| x^j − s y^j) y^i
//! ```
//!
//! All intermediate quantities stay jets in `(r, s)` until the final
//! extraction, because several outputs need `s`-derivatives of `R1` and `R2`.
//! Order budget, counted on the input `φ` jet: `R1 .. R4` need order 4, `χ`
//! needs 5, `H` and `Ric_ij` need 6. [`jet::DEFAULT_JET2_ORDER`] (7) leaves
//! one order of headroom.
//!
//! [`jet::DEFAULT_JET2_ORDER`]: crate::jet::DEFAULT_JET2_ORDER

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::catalog::{PointSample, Profile};
use crate::error::{Error, Result};
use crate::jet::{Jet, Jet2, Real, Scalar, DEFAULT_JET2_ORDER};

const R: usize = 0;
const S: usize = 1;

/// Minimum `φ` order for a full [`CurvatureBundle`].
pub const BUNDLE_ORDER: usize = 6;

fn require_order<T: Scalar>(j: &Jet<T>, order: usize, what: &str) -> Result<()> {
    if j.order() < order {
        Err(Error::usage(format!(
            "{what} needs a jet of order >= {order}, got {}",
            j.order()
        )))
    } else {
        Ok(())
    }
}

/// `P` and `Q` of the spray, as jets of order `φ.order − 2`.
pub fn compute_pq<T: Real>(phi: &Jet<T>, p: &PointSample) -> Result<(Jet<T>, Jet<T>)> {
    require_order(phi, 2, "compute_pq")?;
    let (r, s) = Jet::<T>::seed_rs(p.r, p.s, phi.order())?;
    let phi_r = phi.derivative(R)?;
    let phi_s = phi.derivative(S)?;
    let phi_rs = phi_r.derivative(S)?;
    let phi_ss = phi_s.derivative(S)?;
    let u = &(&r * &r) - &(&s * &s);

    let q_num = &(&(&s * &phi_rs) + &(&r * &phi_ss)) - &phi_r;
    let q_den = &(phi - &(&s * &phi_s)) + &(&u * &phi_ss);
    if !(q_den.value().to_f64() > 0.0) {
        return Err(Error::Degenerate(format!(
            "φ - sφ_s + (r² - s²)φ_ss = {:e} is not positive",
            q_den.value().to_f64()
        ))
        .at_point(p.r, p.s));
    }
    let q = q_num.checked_div(&(&(&r * &q_den) * 2.0))?;

    let phi_inv = phi.recip()?;
    let first = (&(&s * &phi_r) + &(&r * &phi_s)).checked_div(&(&(&r * phi) * 2.0))?;
    let second = &(&q * &phi_inv) * &(&(&s * phi) + &(&u * &phi_s));
    Ok((&first - &second, q))
}

/// `[1 + sP + (r² − s²)P_s]`, shared by `R1` and `R3`.
fn bracket<T: Real>(p_jet: &Jet<T>, r: &Jet<T>, s: &Jet<T>) -> Result<Jet<T>> {
    let u = &(r * r) - &(s * s);
    let p_s = p_jet.derivative(S)?;
    Ok(&(&(s * p_jet) + 1.0) + &(&u * &p_s))
}

/// `R1`, `R2`, `R3` as jets of order `P.order − 2`.
pub fn compute_r123<T: Real>(
    p_jet: &Jet<T>,
    q: &Jet<T>,
    p: &PointSample,
) -> Result<(Jet<T>, Jet<T>, Jet<T>)> {
    require_order(p_jet, 2, "compute_r123 (P)")?;
    require_order(q, 2, "compute_r123 (Q)")?;
    let order = p_jet.order().min(q.order());
    let (r, s) = Jet::<T>::seed_rs(p.r, p.s, order)?;
    let inv_r = r.recip()?;
    let u = &(&r * &r) - &(&s * &s);

    let p_r = p_jet.derivative(R)?;
    let p_s = p_jet.derivative(S)?;
    let p_rs = p_r.derivative(S)?;
    let p_ss = p_s.derivative(S)?;
    let q_r = q.derivative(R)?;
    let q_s = q.derivative(S)?;
    let q_rs = q_r.derivative(S)?;
    let q_ss = q_s.derivative(S)?;
    let w = bracket(p_jet, &r, &s)?;

    let r1 = &(&p_jet.square() - &(&inv_r * &(&(&s * &p_r) + &(&r * &p_s)))) + &(&(q * &w) * 2.0);

    let r2 = &(&(&inv_r * &(&(&(&q_r * 2.0) - &(&s * &q_rs)) - &(&r * &q_ss)))
        + &(&(q * &(&(q * 2.0) - &(&s * &q_s))) * 2.0))
        + &(&u * &(&(&(q * &q_ss) * 2.0) - &q_s.square()));

    let r3 =
        &(&inv_r * &(&(&p_r - &(&s * &p_rs)) - &(&r * &p_ss))) + &(&(q * &w.derivative(S)?) * 2.0);

    let top = order - 2;
    Ok((r1.truncate(top), r2.truncate(top), r3.truncate(top)))
}

/// `R4 = ½ (3 R3 − [R1]_s)`.
pub fn compute_r4<T: Real>(r1: &Jet<T>, r3: &Jet<T>) -> Result<Jet<T>> {
    require_order(r1, 1, "compute_r4 (R1)")?;
    Ok((&(r3 * 3.0) - &r1.derivative(S)?) * 0.5)
}

/// `ψ = (sφ_r + rφ_s)/(2rφ)`, equal to `P` whenever `Q = 0`.
pub fn compute_psi<T: Real>(phi: &Jet<T>, p: &PointSample) -> Result<Jet<T>> {
    require_order(phi, 1, "compute_psi")?;
    let (r, s) = Jet::<T>::seed_rs(p.r, p.s, phi.order())?;
    let num = &(&s * &phi.derivative(R)?) + &(&r * &phi.derivative(S)?);
    num.checked_div(&(&(&r * phi) * 2.0))
}

/// `sφ_rs + rφ_ss − φ_r` at the point (the numerator of `Q`).
pub fn q_numerator<T: Real>(phi: &Jet<T>, p: &PointSample) -> Result<f64> {
    let phi_r = phi.partial(&[1, 0])?;
    let phi_rs = phi.partial(&[1, 1])?;
    let phi_ss = phi.partial(&[0, 2])?;
    Ok((T::from_f64(p.s) * phi_rs + T::from_f64(p.r) * phi_ss - phi_r).to_f64())
}

/// Quantities of the projectively flat reduction (valid when `Q = 0`).
#[derive(Debug, Clone)]
pub struct ReducedCurvature<T: Scalar = f64> {
    pub psi: Jet<T>,
    pub r1: Jet<T>,
    pub r3: Jet<T>,
    pub r4: Jet<T>,
}

/// `ψ` and the simplified `R1`, `R3`, `R4` under `Q = 0`.
///
/// Fails with [`Error::Precondition`] unless `|sφ_rs + rφ_ss − φ_r|` is at most
/// `1e-8 · max(1, |φ_r|)`.
pub fn compute_psi_reduced<T: Real>(phi: &Jet<T>, p: &PointSample) -> Result<ReducedCurvature<T>> {
    require_order(phi, 3, "compute_psi_reduced")?;
    let num = q_numerator(phi, p)?;
    let scale = phi.partial(&[1, 0])?.to_f64().abs().max(1.0);
    if num.abs() > 1e-8 * scale {
        return Err(Error::Precondition(format!(
            "Q is not negligible: sφ_rs + rφ_ss - φ_r = {num:e}"
        ))
        .at_point(p.r, p.s));
    }
    let psi = compute_psi(phi, p)?;
    let (r, s) = Jet::<T>::seed_rs(p.r, p.s, psi.order())?;
    let inv_r = r.recip()?;
    let psi_r = psi.derivative(R)?;
    let psi_s = psi.derivative(S)?;
    let psi_rs = psi_r.derivative(S)?;
    let psi_ss = psi_s.derivative(S)?;
    let r1 = &psi.square() - &(&inv_r * &(&(&s * &psi_r) + &(&r * &psi_s)));
    let tail = &(&s * &psi_rs) + &(&r * &psi_ss);
    let r3 = &inv_r * &(&psi_r - &tail);
    let r4 = &inv_r * &(&(&(&psi_r * 2.0) - &(&(&r * &psi) * &psi_s)) - &tail);
    Ok(ReducedCurvature { psi, r1, r3, r4 })
}

/// Every reduced curvature quantity at one `(r, s)` sample.
#[derive(Debug, Clone)]
pub struct CurvatureBundle {
    pub point: PointSample,
    pub n: usize,
    pub phi: Jet2,
    pub p: Jet2,
    pub q: Jet2,
    pub psi: Jet2,
    pub r1: Jet2,
    pub r2: Jet2,
    pub r3: Jet2,
    pub r4: Jet2,
    /// `M = −½{(n+1)R3 + (r² − s²)[R2]_s}`.
    pub m: f64,
    pub m_s: f64,
    pub r1_s: f64,
    pub r2_s: f64,
    pub r2_ss: f64,
    /// `ψ_v = ψ_s + (s/r)ψ_r`, the derivative along `u = const`.
    pub psi_v: f64,
    /// `ψ² − ψ_v`, equal to `Kφ²` for projectively flat metrics of constant curvature.
    pub ode_rhs: f64,
    /// `ψ_r − sψ_rs − rψ_ss`.
    pub pde2: f64,
    /// `sφ_rs + rφ_ss − φ_r`.
    pub q_num: f64,
    req2: f64,
}

impl CurvatureBundle {
    /// Build the bundle from a `φ` jet of order ≥ [`BUNDLE_ORDER`].
    ///
    /// All arithmetic runs in `T`; the stored jets are rounded to `f64`
    /// afterwards, as are the residuals that cancel heavily (`M`, the
    /// identity between `R4` and `R1`, `R2`, and `ψ² − ψ_v`).
    pub fn new<T: Real>(phi: &Jet<T>, point: PointSample, n: usize) -> Result<Self> {
        require_order(phi, BUNDLE_ORDER, "CurvatureBundle")?;
        if n < 2 {
            return Err(Error::usage(format!("dimension must be >= 2, got {n}")));
        }
        let (p, q) = compute_pq(phi, &point)?;
        let (r1, r2, r3) = compute_r123(&p, &q, &point)?;
        let r4 = compute_r4(&r1, &r3)?;
        let psi = compute_psi(phi, &point)?;

        let (r, s) = Jet::<T>::seed_rs(point.r, point.s, r2.order())?;
        let u = &(&r * &r) - &(&s * &s);
        let r2_s_jet = r2.derivative(S)?;
        let m_jet = (&(&r3 * (n as f64 + 1.0)) + &(&u * &r2_s_jet)) * -0.5;

        let t = T::from_f64;
        let (s0, u0) = (
            t(point.s),
            t(point.r) * t(point.r) - t(point.s) * t(point.s),
        );
        let phi_s = phi.partial(&[0, 1])?;
        let req2 = r4.value()
            + s0 * r2.value()
            + phi_s * phi.value().inv() * (u0 * r2.value() + r1.value());
        let psi_v = psi.partial(&[0, 1])? + s0 * t(point.r).inv() * psi.partial(&[1, 0])?;
        let ode_rhs = psi.value() * psi.value() - psi_v;
        let pde2 = psi.partial(&[1, 0])?
            - s0 * psi.partial(&[1, 1])?
            - t(point.r) * psi.partial(&[0, 2])?;

        Ok(CurvatureBundle {
            point,
            n,
            phi: phi.to_f64(),
            m: m_jet.value().to_f64(),
            m_s: m_jet.partial(&[0, 1])?.to_f64(),
            r1_s: r1.partial(&[0, 1])?.to_f64(),
            r2_s: r2.partial(&[0, 1])?.to_f64(),
            r2_ss: r2.partial(&[0, 2])?.to_f64(),
            psi_v: psi_v.to_f64(),
            ode_rhs: ode_rhs.to_f64(),
            pde2: pde2.to_f64(),
            q_num: q_numerator(phi, &point)?,
            req2: req2.to_f64(),
            p: p.to_f64(),
            q: q.to_f64(),
            psi: psi.to_f64(),
            r1: r1.to_f64(),
            r2: r2.to_f64(),
            r3: r3.to_f64(),
            r4: r4.to_f64(),
        })
    }

    /// Bundle of a profile at `point`, evaluated in double-double.
    pub fn at<P: Profile + ?Sized>(profile: &P, point: PointSample) -> Result<Self> {
        let phi = profile
            .phi_jet_dd(point.r, point.s, DEFAULT_JET2_ORDER)
            .map_err(|e| e.at_point(point.r, point.s))?;
        Self::new(&phi, point, profile.dim())
    }

    pub fn phi_value(&self) -> f64 {
        self.phi.value()
    }

    pub fn phi_s(&self) -> f64 {
        self.phi.partial(&[0, 1]).expect("bundle phi order >= 6")
    }

    /// Curvature estimate `R1/φ²`.
    pub fn k_hat(&self) -> f64 {
        self.r1.value() / self.phi_value().powi(2)
    }

    /// `(n+1)R3 + (r² − s²)[R2]_s`, which equals `−2M`.
    pub fn einstein_residual(&self) -> f64 {
        -2.0 * self.m
    }

    /// Residual of the identity `R4 + sR2 = −(φ_s/φ){(r² − s²)R2 + R1}`.
    pub fn req2_residual(&self) -> f64 {
        self.req2
    }

    fn check_xy(&self, x: &[f64], y: &[f64]) -> Result<(f64, DVector<f64>, DVector<f64>)> {
        if x.len() != self.n || y.len() != self.n {
            return Err(Error::usage(format!(
                "expected vectors of length {}, got ({}, {})",
                self.n,
                x.len(),
                y.len()
            )));
        }
        let xv = DVector::from_column_slice(x);
        let yv = DVector::from_column_slice(y);
        let ylen = yv.norm();
        if ylen == 0.0 {
            return Err(Error::usage("direction y = 0"));
        }
        let r = xv.norm();
        let s = xv.dot(&yv) / ylen;
        let tol = 1e-12 * self.point.r.max(1.0);
        if (r - self.point.r).abs() > tol || (s - self.point.s).abs() > tol {
            return Err(Error::usage(format!(
                "(x, y) gives (r, s) = ({r}, {s}), bundle was built at ({}, {})",
                self.point.r, self.point.s
            )));
        }
        Ok((ylen, xv, yv))
    }

    /// `|y| x − s y`, the component of `|y| x` orthogonal to `y`.
    fn transverse(&self, ylen: f64, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        x * ylen - y * self.point.s
    }

    /// The Riemann curvature matrix `R^i_j` at `(x, y)`.
    pub fn assemble_riemann(&self, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
        let (ylen, xv, yv) = self.check_xy(x, y)?;
        let t = self.transverse(ylen, &xv, &yv);
        let (r1, r2, r4) = (self.r1.value(), self.r2.value(), self.r4.value());
        let n = self.n;
        let proj = DMatrix::identity(n, n) * (ylen * ylen) - &yv * yv.transpose();
        Ok(proj * r1 + (&xv * t.transpose()) * (ylen * r2) + (&yv * t.transpose()) * r4)
    }

    /// `Ric = (n−1)|y|²R1 + (r² − s²)|y|²R2`.
    pub fn compute_ricci(&self, ylen: f64) -> f64 {
        let y2 = ylen * ylen;
        (self.n as f64 - 1.0) * y2 * self.r1.value() + self.point.u() * y2 * self.r2.value()
    }

    /// `χ_i = M (|y| x^i − s y^i)`.
    pub fn compute_chi(&self, x: &[f64], y: &[f64]) -> Result<DVector<f64>> {
        let (ylen, xv, yv) = self.check_xy(x, y)?;
        Ok(self.transverse(ylen, &xv, &yv) * self.m)
    }

    /// `H_ij = M_s|y|⁻² t_i t_j − sM|y|⁻²(|y|²δ_ij − y^i y^j)` with `t = |y|x − sy`.
    pub fn compute_h(&self, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
        let (ylen, xv, yv) = self.check_xy(x, y)?;
        let t = self.transverse(ylen, &xv, &yv);
        let n = self.n;
        let y2 = ylen * ylen;
        let proj = DMatrix::identity(n, n) * y2 - &yv * yv.transpose();
        Ok((&t * t.transpose()) * (self.m_s / y2) - proj * (self.point.s * self.m / y2))
    }

    /// `Ric_ij = ½ [Ric]_{y^i y^j} + H_ij`.
    ///
    /// The `y`-Hessian of `Ric = |y|² f(r, s(y))` is taken by composing the
    /// `(r, s)` jet of `f = (n−1)R1 + (r² − s²)R2` with the second-order jet of
    /// `s(y) = ⟨x, y⟩/|y|` at fixed `x`.
    pub fn compute_ricci_tensor(&self, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
        let h = self.compute_h(x, y)?;
        let n = self.n;
        let (r, s) = Jet::seed_rs(self.point.r, self.point.s, self.r2.order())?;
        let u = &(&r * &r) - &(&s * &s);
        let f = &(&self.r1 * (n as f64 - 1.0)) + &(&u * &self.r2);
        require_order(&f, 2, "compute_ricci_tensor")?;

        let ys = Jet::variables(y, 2)?;
        let y2 = ys
            .iter()
            .map(|j| j.square())
            .reduce(|a, b| &a + &b)
            .expect("n >= 2");
        let ylen = y2.sqrt()?;
        let dot = ys
            .iter()
            .zip(x)
            .map(|(j, &xi)| j * xi)
            .reduce(|a, b| &a + &b)
            .expect("n >= 2");
        let s_y = dot.checked_div(&ylen)?;
        // s(y) agrees with the bundle's s only to rounding; the displacement
        // must start at exactly zero
        let ds = s_y.add_scalar(-s_y.value());
        let dr = Jet::zero(n, 2);
        let ric = &y2 * &f.compose_bivariate(&dr, &ds)?;

        let mut out = h;
        for i in 0..n {
            for j in 0..n {
                let mut idx = vec![0usize; n];
                idx[i] += 1;
                idx[j] += 1;
                out[(i, j)] += 0.5 * ric.partial(&idx)?;
            }
        }
        Ok(out)
    }

    /// Serializable scalar summary.
    pub fn summary(&self) -> BundleSummary {
        BundleSummary {
            r: self.point.r,
            s: self.point.s,
            p: self.p.value(),
            q: self.q.value(),
            psi: self.psi.value(),
            r1: self.r1.value(),
            r2: self.r2.value(),
            r3: self.r3.value(),
            r4: self.r4.value(),
            m: self.m,
            k_hat: self.k_hat(),
        }
    }
}

/// Point values of a [`CurvatureBundle`], as written to JSON reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BundleSummary {
    pub r: f64,
    pub s: f64,
    #[serde(rename = "P")]
    pub p: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    pub psi: f64,
    #[serde(rename = "R1")]
    pub r1: f64,
    #[serde(rename = "R2")]
    pub r2: f64,
    #[serde(rename = "R3")]
    pub r3: f64,
    #[serde(rename = "R4")]
    pub r4: f64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "K_hat")]
    pub k_hat: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{Family, MetricSpec};

    fn spec(f: Family) -> MetricSpec {
        MetricSpec::new(f, 3).unwrap()
    }

    fn bundle(spec: &MetricSpec, r: f64, s: f64) -> CurvatureBundle {
        CurvatureBundle::at(spec, PointSample::new(r, s).unwrap()).unwrap()
    }

    fn samples(rho: f64, count: usize) -> Vec<(f64, f64)> {
        (0..count)
            .map(|k| {
                let r = 0.01 + (rho * 0.99 - 0.01) * ((k * 7) % count) as f64 / count as f64;
                let s = r * (2.0 * ((k * 13) % count) as f64 / count as f64 - 1.0) * 0.999;
                (r, s)
            })
            .collect()
    }

    fn test_poly() -> MetricSpec {
        spec(Family::TestPoly { a: 0.1, b: 0.05 })
    }

    #[test]
    fn euclidean_is_flat() {
        let b = bundle(&spec(Family::Euclidean {}), 0.4, 0.1);
        for j in [&b.p, &b.q, &b.psi, &b.r1, &b.r2, &b.r3, &b.r4] {
            assert_eq!(j.max_abs(), 0.0);
        }
        assert_eq!(b.m, 0.0);
        assert_eq!(b.k_hat(), 0.0);
    }

    #[test]
    fn funk_has_constant_flag_curvature() {
        let funk = spec(Family::Funk {});
        for (r, s) in samples(funk.rho, 50) {
            let b = bundle(&funk, r, s);
            let f2 = b.phi_value().powi(2);
            assert!(
                (b.r1.value() + 0.25 * f2).abs() <= 1e-9 * f2,
                "R1 at ({r}, {s})"
            );
            assert!(b.r2.value().abs() <= 1e-9 * f2);
            assert!(b.r3.value().abs() <= 1e-9 * f2);
            assert!(b.q.value().abs() <= 1e-12);
        }
    }

    #[test]
    fn klein_baseline() {
        let klein = spec(Family::Klein {});
        for (r, s) in samples(klein.rho, 20) {
            let b = bundle(&klein, r, s);
            let f2 = b.phi_value().powi(2);
            assert!((b.r1.value() + f2).abs() <= 1e-9 * f2);
            assert!(b.r2.value().abs() <= 1e-9 * f2);
        }
    }

    #[test]
    fn test_poly_spray_matches_hand_derivation() {
        // φ = 1 + as + br²: φ_r = 2br, φ_s = a, second s-derivatives vanish,
        // so Q = −b/(1 + br²) and P follows from the closed forms directly.
        let (a, b) = (0.1, 0.05);
        for (r, s) in samples(0.8, 10) {
            let bun = bundle(&test_poly(), r, s);
            let phi = 1.0 + a * s + b * r * r;
            let q = -b / (1.0 + b * r * r);
            let p = (s * 2.0 * b * r + r * a) / (2.0 * r * phi)
                - q / phi * (s * phi + (r * r - s * s) * a);
            assert!((bun.q.value() - q).abs() < 1e-15);
            assert!((bun.p.value() - p).abs() < 1e-14);
            let qn = q_numerator(&bun.phi, &bun.point).unwrap();
            assert!((qn + 2.0 * b * r).abs() < 1e-15);
        }
    }

    #[test]
    fn test_poly_is_not_of_constant_curvature() {
        let b = bundle(&test_poly(), 0.5, 0.2);
        assert!(b.r2.value().abs() > 1e-4);
        assert!(b.r3.value().abs() > 1e-4);
        assert!(b.m.abs() > 1e-4);
    }

    #[test]
    fn r4_r1_r2_identity() {
        for family in [
            Family::TestPoly { a: 0.1, b: 0.05 },
            Family::TestPoly { a: -0.2, b: 0.1 },
            Family::Funk {},
        ] {
            let sp = spec(family);
            for (r, s) in samples(sp.rho, 20) {
                let b = bundle(&sp, r, s);
                let tol = 1e-9 * (1.0 + b.r1.value().abs());
                assert!(
                    b.req2_residual().abs() <= tol,
                    "{} at ({r}, {s})",
                    sp.family
                );
            }
        }
    }

    #[test]
    fn reduced_formulas_agree_when_q_vanishes() {
        for family in [
            Family::Funk {},
            Family::Berwald {},
            Family::Shen { eps: 0.5 },
        ] {
            let sp = spec(family);
            for (r, s) in samples(sp.rho, 10) {
                let p = PointSample::new(r, s).unwrap();
                let phi = sp.phi_jet_in::<crate::jet::Dd>(r, s, 7).unwrap();
                let red = compute_psi_reduced(&phi, &p).unwrap();
                let b = CurvatureBundle::new(&phi, p, 3).unwrap();
                let f2 = b.phi_value().powi(2);
                assert!(
                    (red.psi.value().to_f64() - b.p.value()).abs()
                        <= 1e-12 * b.p.value().abs().max(1.0)
                );
                assert!((red.r1.value().to_f64() - b.r1.value()).abs() <= 1e-12 * f2);
                assert!((red.r3.value().to_f64() - b.r3.value()).abs() <= 1e-12 * f2);
                assert!((red.r4.value().to_f64() - b.r4.value()).abs() <= 1e-12 * f2);
            }
        }
    }

    #[test]
    fn reduction_requires_vanishing_q() {
        let p = PointSample::new(0.5, 0.2).unwrap();
        let phi = test_poly().phi_jet(0.5, 0.2, 7).unwrap();
        assert!(matches!(
            compute_psi_reduced(&phi, &p),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn scaling_profile_keeps_spray_and_scales_k() {
        // shen(0) = ½ funk: the spray is unchanged and K_hat grows by 4
        let funk = spec(Family::Funk {});
        let half = spec(Family::Shen { eps: 0.0 });
        for (r, s) in samples(0.9, 10) {
            let (a, b) = (bundle(&funk, r, s), bundle(&half, r, s));
            assert!((a.p.value() - b.p.value()).abs() < 1e-13 * a.p.value().abs().max(1.0));
            assert!((a.r1.value() - b.r1.value()).abs() < 1e-12 * a.r1.value().abs().max(1.0));
            assert!((b.k_hat() - 4.0 * a.k_hat()).abs() < 1e-12);
        }
    }

    fn frame(r: f64, s: f64) -> (Vec<f64>, Vec<f64>) {
        // x = (r cos θ, r sin θ, 0) with ⟨x, e1⟩ = s, y = 2 e1
        let c = s / r;
        let x = vec![r * c, r * (1.0 - c * c).sqrt(), 0.0];
        (x, vec![2.0, 0.0, 0.0])
    }

    #[test]
    fn riemann_annihilates_y_and_traces_to_ricci() {
        let sp = test_poly();
        for (r, s) in samples(sp.rho, 10) {
            let b = bundle(&sp, r, s);
            let (x, y) = frame(r, s);
            let riem = b.assemble_riemann(&x, &y).unwrap();
            let yv = DVector::from_column_slice(&y);
            let scale = riem.abs().max().max(1.0);
            assert!((&riem * &yv).amax() <= 1e-13 * scale);
            assert!((riem.trace() - b.compute_ricci(2.0)).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn ricci_tensor_contracts_to_ricci() {
        let sp = test_poly();
        for (r, s) in samples(sp.rho, 10) {
            let b = bundle(&sp, r, s);
            let (x, y) = frame(r, s);
            let ric_ij = b.compute_ricci_tensor(&x, &y).unwrap();
            let yv = DVector::from_column_slice(&y);
            let contracted = (yv.transpose() * &ric_ij * &yv)[(0, 0)];
            let ric = b.compute_ricci(2.0);
            assert!(
                (contracted - ric).abs() <= 1e-10 * ric.abs().max(1.0),
                "{contracted} vs {ric}"
            );
            assert!((&ric_ij - ric_ij.transpose()).amax() <= 1e-12 * ric.abs().max(1.0));
        }
    }

    #[test]
    fn chi_and_h_vanish_for_constant_curvature() {
        let b = bundle(&spec(Family::Funk {}), 0.6, -0.3);
        let (x, y) = frame(0.6, -0.3);
        assert!(b.compute_chi(&x, &y).unwrap().amax() < 1e-14);
        assert!(b.compute_h(&x, &y).unwrap().amax() < 1e-14);
    }

    #[test]
    fn chi_is_orthogonal_to_y() {
        let b = bundle(&test_poly(), 0.6, -0.3);
        let (x, y) = frame(0.6, -0.3);
        let chi = b.compute_chi(&x, &y).unwrap();
        assert!(chi.dot(&DVector::from_column_slice(&y)).abs() < 1e-14);
        assert!(chi.amax() > 1e-4);
    }

    #[test]
    fn mismatched_point_is_rejected() {
        let b = bundle(&test_poly(), 0.6, -0.3);
        assert!(matches!(
            b.compute_chi(&[0.6, 0.0, 0.0], &[1.0, 0.0, 0.0]),
            Err(Error::Usage(_))
        ));
        assert!(matches!(
            b.compute_chi(&[0.6, 0.0], &[1.0, 0.0]),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn order_budget_is_enforced() {
        let p = PointSample::new(0.5, 0.2).unwrap();
        let phi = test_poly().phi_jet(0.5, 0.2, 5).unwrap();
        assert!(matches!(
            CurvatureBundle::new(&phi, p, 3),
            Err(Error::Usage(_))
        ));
        let (pj, qj) = compute_pq(&phi, &p).unwrap();
        assert_eq!(pj.order(), 3);
        assert_eq!(qj.order(), 3);
        let (r1, _, _) = compute_r123(&pj, &qj, &p).unwrap();
        assert_eq!(r1.order(), 1);
    }

    #[test]
    fn summary_uses_report_field_names() {
        let b = bundle(&spec(Family::Funk {}), 0.5, 0.2);
        let v = serde_json::to_value(b.summary()).unwrap();
        for key in [
            "r", "s", "P", "Q", "psi", "R1", "R2", "R3", "R4", "M", "K_hat",
        ] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert!((v["K_hat"].as_f64().unwrap() + 0.25).abs() < 1e-12);
    }
}
