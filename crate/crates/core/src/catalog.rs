//! Closed-form profiles `φ(r, s)` of spherically symmetric metrics
//! `F = |y| φ(|x|, ⟨x, y⟩/|y|)`.
//!
//! Every family is evaluated as a [`Jet2`] in `(r, s)`, so downstream code gets
//! all partial derivatives of `φ` up to the requested order from one call.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::{Dd, Jet, Jet2, JetN, Real};

/// Smallest radius sampled; the curvature formulas carry `1/r` factors.
pub const R_MIN: f64 = 1e-3;

/// Default radius for families living on the unit ball.
pub const UNIT_BALL_RHO: f64 = 1.0 - 1e-3;

/// Default radius of the non-constant-curvature test profile.
pub const TEST_POLY_RHO: f64 = 0.8;

/// The built-in profile families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum Family {
    /// `φ = 1`.
    Euclidean {},
    /// Klein model of hyperbolic space, `φ = √(1 − r² + s²)/(1 − r²)`.
    Klein {},
    /// Round sphere in projective coordinates, `φ = √(1 + r² − s²)/(1 + r²)`.
    ProjSphere {},
    Funk {},
    Berwald {},
    Shen {
        eps: f64,
    },
    /// `φ = 1/(2√−K) · 1/(√(C − r² + s²) + s)`.
    Soln1 {
        #[serde(rename = "C")]
        c: f64,
        #[serde(rename = "K")]
        k: f64,
    },
    /// `φ = q/(q²(Dq + s)² + K)` with `q` a root of `D²q⁴ + (u − C)q² − K = 0`.
    ///
    /// `branch` bit 0 picks the sign in front of the discriminant root (0 → +),
    /// bit 1 the sign of `q` (0 → +).
    SolnFamily {
        #[serde(rename = "C")]
        c: f64,
        #[serde(rename = "D")]
        d: f64,
        #[serde(rename = "K")]
        k: f64,
        branch: u8,
    },
    SolnK0 {
        #[serde(rename = "C")]
        c: f64,
        #[serde(rename = "D")]
        d: f64,
    },
    SolnKm1 {
        #[serde(rename = "C")]
        c: f64,
        #[serde(rename = "D")]
        d: f64,
    },
    Bryant {
        #[serde(rename = "C")]
        c: f64,
        #[serde(rename = "D")]
        d: f64,
    },
    /// `φ = 1 + a·s + b·r²`; not of constant curvature, used to exercise
    /// every term of the curvature formulas.
    TestPoly {
        a: f64,
        b: f64,
    },
}

impl Family {
    pub fn id(&self) -> &'static str {
        match self {
            Family::Euclidean {} => "euclidean",
            Family::Klein {} => "klein",
            Family::ProjSphere {} => "proj_sphere",
            Family::Funk {} => "funk",
            Family::Berwald {} => "berwald",
            Family::Shen { .. } => "shen",
            Family::Soln1 { .. } => "soln1",
            Family::SolnFamily { .. } => "soln_family",
            Family::SolnK0 { .. } => "soln_k0",
            Family::SolnKm1 { .. } => "soln_km1",
            Family::Bryant { .. } => "bryant",
            Family::TestPoly { .. } => "test_poly",
        }
    }

    /// Expected constant flag curvature, if the family has one.
    pub fn k_target(&self) -> Option<f64> {
        match *self {
            Family::Euclidean {} | Family::Berwald {} | Family::SolnK0 { .. } => Some(0.0),
            Family::Klein {} | Family::Shen { .. } | Family::SolnKm1 { .. } => Some(-1.0),
            Family::ProjSphere {} | Family::Bryant { .. } => Some(1.0),
            Family::Funk {} => Some(-0.25),
            Family::Soln1 { k, .. } | Family::SolnFamily { k, .. } => Some(k),
            Family::TestPoly { .. } => None,
        }
    }

    /// Whether the default radius comes from a feasibility scan rather than
    /// the unit ball.
    pub fn has_scanned_domain(&self) -> bool {
        !matches!(
            self,
            Family::Euclidean {}
                | Family::Klein {}
                | Family::ProjSphere {}
                | Family::Funk {}
                | Family::Berwald {}
                | Family::Shen { .. }
        )
    }

    /// Whether `sφ_rs + rφ_ss − φ_r` vanishes identically (projectively flat profile).
    pub fn is_projectively_flat(&self) -> bool {
        !matches!(self, Family::TestPoly { .. })
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::usage(m));
        match *self {
            Family::Shen { eps } if !(-1.0..1.0).contains(&eps) => {
                bad(format!("shen requires -1 <= eps < 1, got {eps}"))
            }
            Family::Soln1 { k, .. } if k >= 0.0 => bad(format!("soln1 requires K < 0, got {k}")),
            Family::SolnK0 { d, .. } | Family::SolnKm1 { d, .. } | Family::Bryant { d, .. }
                if d == 0.0 =>
            {
                bad(format!("{} requires D != 0", self.id()))
            }
            Family::SolnFamily { branch, .. } if branch > 3 => {
                bad(format!("soln_family branch must be 0..=3, got {branch}"))
            }
            _ => {
                let finite = match *self {
                    Family::Shen { eps } => eps.is_finite(),
                    Family::Soln1 { c, k } => c.is_finite() && k.is_finite(),
                    Family::SolnFamily { c, d, k, .. } => {
                        c.is_finite() && d.is_finite() && k.is_finite()
                    }
                    Family::SolnK0 { c, d }
                    | Family::SolnKm1 { c, d }
                    | Family::Bryant { c, d } => c.is_finite() && d.is_finite(),
                    Family::TestPoly { a, b } => a.is_finite() && b.is_finite(),
                    _ => true,
                };
                if finite {
                    Ok(())
                } else {
                    bad(format!("{} parameters must be finite", self.id()))
                }
            }
        }
    }

    /// Largest radius allowed by the square roots of the closed form, if any.
    fn sqrt_radius(&self) -> Option<f64> {
        match *self {
            Family::Soln1 { c, .. } | Family::SolnK0 { c, .. } => Some(c.max(0.0).sqrt()),
            Family::SolnKm1 { c, d } => Some((c - 2.0 * d.abs()).max(0.0).sqrt()),
            _ => None,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Family::Shen { eps } => write!(f, "shen(eps={eps})"),
            Family::Soln1 { c, k } => write!(f, "soln1(C={c}, K={k})"),
            Family::SolnFamily { c, d, k, branch } => {
                write!(f, "soln_family(C={c}, D={d}, K={k}, branch={branch})")
            }
            Family::SolnK0 { c, d } | Family::SolnKm1 { c, d } | Family::Bryant { c, d } => {
                write!(f, "{}(C={c}, D={d})", self.id())
            }
            Family::TestPoly { a, b } => write!(f, "test_poly(a={a}, b={b})"),
            _ => f.write_str(self.id()),
        }
    }
}

/// A catalog entry instantiated in dimension `n` on the ball of radius `rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecRecord", into = "SpecRecord")]
pub struct MetricSpec {
    pub family: Family,
    pub n: usize,
    pub rho: f64,
}

#[derive(Serialize, Deserialize)]
struct SpecRecord {
    #[serde(flatten)]
    family: Family,
    n: usize,
    rho: f64,
    #[serde(rename = "K_target")]
    k_target: Option<f64>,
}

impl From<MetricSpec> for SpecRecord {
    fn from(m: MetricSpec) -> Self {
        SpecRecord {
            family: m.family,
            n: m.n,
            rho: m.rho,
            k_target: m.family.k_target(),
        }
    }
}

impl TryFrom<SpecRecord> for MetricSpec {
    type Error = Error;
    fn try_from(r: SpecRecord) -> Result<Self> {
        MetricSpec::with_rho(r.family, r.n, r.rho)
    }
}

impl MetricSpec {
    /// Spec with the family's default radius (pre-scanned for the `C, D` families).
    pub fn new(family: Family, n: usize) -> Result<Self> {
        family.validate()?;
        if n < 2 {
            return Err(Error::usage(format!("dimension must be >= 2, got {n}")));
        }
        let rho = default_rho(&family)?;
        Ok(MetricSpec { family, n, rho })
    }

    pub fn with_rho(family: Family, n: usize, rho: f64) -> Result<Self> {
        family.validate()?;
        if n < 2 {
            return Err(Error::usage(format!("dimension must be >= 2, got {n}")));
        }
        if !(rho > R_MIN) || !rho.is_finite() {
            return Err(Error::usage(format!(
                "rho must exceed r_min = {R_MIN}, got {rho}"
            )));
        }
        if let Some(limit) = family.sqrt_radius() {
            if rho > limit {
                return Err(Error::domain(format!(
                    "rho = {rho} exceeds the square-root domain radius {limit} of {family}"
                )));
            }
        }
        Ok(MetricSpec { family, n, rho })
    }

    pub fn k_target(&self) -> Option<f64> {
        self.family.k_target()
    }

    /// Jet of `φ` at `(r, s)`, checked against the domain and convexity.
    ///
    /// Evaluated in double-double and rounded; see [`MetricSpec::phi_jet_in`].
    pub fn phi_jet(&self, r: f64, s: f64, order: usize) -> Result<Jet2> {
        Ok(self.phi_jet_in::<Dd>(r, s, order)?.to_f64())
    }

    /// [`MetricSpec::phi_jet`] with coefficients in `T`.
    pub fn phi_jet_in<T: Real>(&self, r: f64, s: f64, order: usize) -> Result<Jet<T>> {
        if !(r.is_finite() && s.is_finite()) || r < 0.0 {
            return Err(Error::domain(format!("invalid sample (r, s) = ({r}, {s})")));
        }
        if s.abs() > r * (1.0 + 1e-12) + 1e-300 {
            return Err(Error::domain(format!("|s| > r at (r, s) = ({r}, {s})")));
        }
        if r >= self.rho {
            return Err(Error::domain(format!(
                "r = {r} outside the domain radius {}",
                self.rho
            )));
        }
        let phi = profile::<T>(&self.family, r, s, order.max(2))?;
        check_convexity(&phi.to_f64(), r, s)?;
        Ok(phi.truncate(order))
    }
}

/// A `(r, s)` sample with `r_min ≤ r` and `|s| ≤ r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointSample {
    pub r: f64,
    pub s: f64,
}

impl PointSample {
    pub fn new(r: f64, s: f64) -> Result<Self> {
        Self::with_r_min(r, s, R_MIN)
    }

    pub fn with_r_min(r: f64, s: f64, r_min: f64) -> Result<Self> {
        if !(r.is_finite() && s.is_finite()) {
            return Err(Error::usage("sample coordinates must be finite"));
        }
        if r < r_min {
            return Err(Error::usage(format!("r = {r} below r_min = {r_min}")));
        }
        if s.abs() > r * (1.0 + 1e-12) {
            return Err(Error::usage(format!("|s| > r at (r, s) = ({r}, {s})")));
        }
        Ok(PointSample { r, s })
    }

    /// `r² − s²`, the squared length of the component of `x` orthogonal to `y`.
    pub fn u(&self) -> f64 {
        self.r * self.r - self.s * self.s
    }
}

/// Jet of `φ` at a sample point.
pub fn eval_phi(spec: &MetricSpec, p: &PointSample, order: usize) -> Result<Jet2> {
    spec.phi_jet(p.r, p.s, order)
}

fn named_sqrt<T: Real>(j: &Jet<T>, what: &str) -> Result<Jet<T>> {
    j.sqrt().map_err(|e| match e {
        Error::Domain(m) => Error::Domain(format!("√({what}): {m}")),
        other => other,
    })
}

fn named_div<T: Real>(a: &Jet<T>, b: &Jet<T>, what: &str) -> Result<Jet<T>> {
    a.checked_div(b).map_err(|e| match e {
        Error::Singularity(m) => Error::Singularity(format!("denominator {what}: {m}")),
        other => other,
    })
}

/// `(√(A − r² + s²) + s)/(A − r²)`, the Funk profile on the ball of radius √A.
fn funk_like<T: Real>(r: &Jet<T>, s: &Jet<T>, a: f64) -> Result<Jet<T>> {
    let u = &(r * r) - &(s * s);
    let root = named_sqrt(&(-&u + a), "A - (r^2 - s^2)")?;
    named_div(&(&root + s), &(-(r * r) + a), "A - r^2")
}

fn profile<T: Real>(family: &Family, r0: f64, s0: f64, order: usize) -> Result<Jet<T>> {
    let (r, s) = Jet::<T>::seed_rs(r0, s0, order)?;
    let r2 = &r * &r;
    let u = &r2 - &(&s * &s);
    let one = Jet::constant(2, order, T::one());
    let t = T::from_f64;
    match *family {
        Family::Euclidean {} => Ok(one),
        Family::Klein {} => {
            let num = named_sqrt(&(-&u + 1.0), "1 - r^2 + s^2")?;
            named_div(&num, &(-&r2 + 1.0), "1 - r^2")
        }
        Family::ProjSphere {} => {
            let num = named_sqrt(&(&u + 1.0), "1 + r^2 - s^2")?;
            named_div(&num, &(&r2 + 1.0), "1 + r^2")
        }
        Family::Funk {} => funk_like(&r, &s, 1.0),
        Family::Berwald {} => {
            let root = named_sqrt(&(-&u + 1.0), "1 - (r^2 - s^2)")?;
            let num = (&root + &s).square();
            let den = &(-&r2 + 1.0).square() * &root;
            named_div(&num, &den, "(1 - r^2)^2 √(1 - (r^2 - s^2))")
        }
        Family::Shen { eps } => {
            let funk = funk_like(&r, &s, 1.0)?;
            let eps2 = t(eps) * t(eps);
            let root = named_sqrt(&(-&u.scale(eps2) + 1.0), "1 - eps^2 (r^2 - s^2)")?;
            let second = named_div(
                &(&root + &(&s * eps)),
                &(-r2.scale(eps2) + 1.0),
                "1 - eps^2 r^2",
            )?;
            Ok((&funk - &(&second * eps)) * 0.5)
        }
        Family::Soln1 { c, k } => {
            let root = named_sqrt(&(-&u + c), "C - r^2 + s^2")?;
            let den = &root + &s;
            let factor = (t(-4.0) * t(k)).principal_sqrt()?.inv();
            Ok(named_div(&one, &den, "√(C - r^2 + s^2) + s")?.scale(factor))
        }
        Family::SolnK0 { c, d } => {
            let root = named_sqrt(&(-&u + c), "C - r^2 + s^2")?;
            let den = &root * &(&root - &s).square();
            Ok(named_div(&one, &den, "√(C - r^2 + s^2)(√(C - r^2 + s^2) - s)^2")? * d)
        }
        Family::SolnKm1 { c, d } => {
            let two_d = t(2.0) * t(d);
            let plus = named_sqrt(&(-&u + c).add_scalar(two_d), "C + 2D - r^2 + s^2")?;
            let minus = named_sqrt(&(-&u + c).add_scalar(-two_d), "C - 2D - r^2 + s^2")?;
            let a = named_div(&one, &(&plus - &s), "√(C + 2D - r^2 + s^2) - s")?;
            let b = named_div(&one, &(&minus - &s), "√(C - 2D - r^2 + s^2) - s")?;
            // the closed form is negative for D > 0; orient so that φ > 0
            let orientation = -d.signum();
            Ok((&a - &b) * (0.5 * orientation))
        }
        Family::Bryant { c, d } => bryant(&u, &s, c, d, false),
        Family::SolnFamily { c, d, k, branch } => {
            let inner_sign = if branch & 1 == 0 { 1.0 } else { -1.0 };
            let q_sign = if branch & 2 == 0 { 1.0 } else { -1.0 };
            let d2 = t(d) * t(d);
            let q2 = if d == 0.0 {
                // (u − C) q² = K
                named_div(&Jet::constant(2, order, t(k)), &(&u - c), "u - C")?
            } else {
                let cu = -&u + c;
                let disc = cu.square().add_scalar(t(4.0) * d2 * t(k));
                let root = named_sqrt(&disc, "(C - u)^2 + 4 D^2 K")?;
                (&cu + &(&root * inner_sign)).scale((d2 + d2).inv())
            };
            let q = named_sqrt(&q2, "q^2")? * q_sign;
            let den = &(&q.square() * &(&(&q * d) + &s).square()) + k;
            named_div(&q, &den, "q^2 (Dq + s)^2 + K")
        }
        Family::TestPoly { a, b } => Ok(&(&one + &(&s * a)) + &(&r2 * b)),
    }
}

/// `Re(1/(√w − i s))` with `w = r² − s² − C − 2iD` (principal root).
///
/// With `printed_radicand` the radicand is taken as `C + 2iD − r² + s²`
/// instead; that variant is kept only to show that it is not projectively
/// flat (see the catalog tests).
fn bryant<T: Real>(
    u: &Jet<T>,
    s: &Jet<T>,
    c: f64,
    d: f64,
    printed_radicand: bool,
) -> Result<Jet<T>> {
    let i = T::complex(T::zero(), T::one());
    let shift = T::complex(T::from_f64(c), T::from_f64(2.0) * T::from_f64(d));
    let arg = if printed_radicand {
        (-&u.to_complex()).add_scalar(shift)
    } else {
        u.to_complex().add_scalar(-shift)
    };
    let root = arg.sqrt().map_err(|e| match e {
        Error::Domain(m) => Error::Domain(format!("√(r^2 - s^2 - C - 2iD): {m}")),
        other => other,
    })?;
    let den = &root - &s.to_complex().scale(i);
    let val = den.recip().map_err(|e| match e {
        Error::Singularity(m) => Error::Singularity(format!("denominator √w - is: {m}")),
        other => other,
    })?;
    // real part only after all complex arithmetic
    Ok(Jet::real_part(&val))
}

/// `φ > 0` and `φ − sφ_s + (r² − s²)φ_ss > 0`.
fn check_convexity(phi: &Jet2, r: f64, s: f64) -> Result<()> {
    let v = phi.value();
    if !(v > 0.0) {
        return Err(Error::Degenerate(format!(
            "φ = {v:e} is not positive at (r, s) = ({r}, {s})"
        )));
    }
    let phi_s = phi.partial(&[0, 1])?;
    let phi_ss = phi.partial(&[0, 2])?;
    let den = v - s * phi_s + (r * r - s * s) * phi_ss;
    if !(den > 0.0) {
        return Err(Error::Degenerate(format!(
            "φ - sφ_s + (r² - s²)φ_ss = {den:e} is not positive at (r, s) = ({r}, {s})"
        )));
    }
    Ok(())
}

/// Profile function supplied by the caller; used by tests and by the oracle.
pub trait Profile: Sync {
    fn phi_jet(&self, r: f64, s: f64, order: usize) -> Result<Jet2>;

    /// Double-double jet; the default widens the `f64` jet.
    fn phi_jet_dd(&self, r: f64, s: f64, order: usize) -> Result<Jet<Dd>> {
        Ok(self.phi_jet(r, s, order)?.map(Dd::from))
    }

    fn dim(&self) -> usize;
}

impl Profile for MetricSpec {
    fn phi_jet(&self, r: f64, s: f64, order: usize) -> Result<Jet2> {
        MetricSpec::phi_jet(self, r, s, order)
    }
    fn phi_jet_dd(&self, r: f64, s: f64, order: usize) -> Result<Jet<Dd>> {
        self.phi_jet_in(r, s, order)
    }
    fn dim(&self) -> usize {
        self.n
    }
}

/// A profile given by a closure over the seeded `(r, s)` jets.
pub struct FnProfile<F> {
    pub n: usize,
    pub f: F,
}

impl<F> Profile for FnProfile<F>
where
    F: Fn(&Jet2, &Jet2) -> Result<Jet2> + Sync,
{
    fn phi_jet(&self, r: f64, s: f64, order: usize) -> Result<Jet2> {
        let (rj, sj) = Jet::seed_rs(r, s, order.max(2))?;
        let phi = (self.f)(&rj, &sj)?;
        check_convexity(&phi, r, s)?;
        Ok(phi.truncate(order))
    }
    fn dim(&self) -> usize {
        self.n
    }
}

/// Jet of `F(x, y) = |y| φ(|x|, ⟨x, y⟩/|y|)` in the `2n` variables `(x, y)`.
///
/// Variables `0..n` are `x`, `n..2n` are `y`.
pub fn eval_f_jet<P: Profile + ?Sized>(
    profile: &P,
    x: &[f64],
    y: &[f64],
    order: usize,
) -> Result<JetN> {
    let n = profile.dim();
    if x.len() != n || y.len() != n {
        return Err(Error::usage(format!(
            "point has dimensions ({}, {}), metric has n = {n}",
            x.len(),
            y.len()
        )));
    }
    let ynorm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if ynorm == 0.0 {
        return Err(Error::domain("direction y = 0"));
    }
    let r0 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r0 < R_MIN {
        return Err(Error::domain(format!("|x| = {r0} below r_min = {R_MIN}")));
    }
    let point: Vec<f64> = x.iter().chain(y).copied().collect();
    let vars = Jet::variables(&point, order)?;
    let (xs, ys) = vars.split_at(n);
    let sum_sq = |v: &[JetN]| {
        v.iter()
            .map(|j| j.square())
            .reduce(|a, b| &a + &b)
            .expect("n >= 1")
    };
    let r = sum_sq(xs).sqrt()?;
    let ylen = sum_sq(ys).sqrt()?;
    let dot = xs
        .iter()
        .zip(ys)
        .map(|(a, b)| a * b)
        .reduce(|a, b| &a + &b)
        .expect("n >= 1");
    let s = dot.checked_div(&ylen)?;
    let s0 = s.value();
    let phi = profile.phi_jet(r0, s0.clamp(-r0, r0), order)?;
    let phi_f = phi.compose_bivariate(&(&r - r0), &(&s - s0))?;
    Ok(&ylen * &phi_f)
}

/// Search the largest radius (below `upper`) on which the family evaluates
/// with positive, strongly convex profile on a coarse `(r, s)` grid, and
/// return 98% of it.
pub fn feasible_radius(family: &Family, upper: f64) -> Result<f64> {
    const RADII: usize = 200;
    const SLOPES: usize = 41;
    let ok_at = |r: f64| -> bool {
        (0..SLOPES).all(|j| {
            let s = r * (2.0 * j as f64 / (SLOPES - 1) as f64 - 1.0) * (1.0 - 1e-9);
            profile(family, r, s, 2)
                .and_then(|phi| check_convexity(&phi, r, s))
                .is_ok()
        })
    };
    let mut last_good = None;
    for i in 0..RADII {
        let r = R_MIN + (upper - R_MIN) * i as f64 / RADII as f64;
        if ok_at(r) {
            last_good = Some(r);
        } else {
            break;
        }
    }
    match last_good {
        None => Err(Error::domain(format!(
            "{family} has no feasible domain around the origin"
        ))),
        Some(r) if r >= R_MIN + (upper - R_MIN) * (RADII - 1) as f64 / RADII as f64 => {
            Ok(upper * (1.0 - 1e-3))
        }
        Some(r) => {
            // refine between the last good and first bad radius
            let step = (upper - R_MIN) / RADII as f64;
            let (mut lo, mut hi) = (r, r + step);
            for _ in 0..40 {
                let mid = 0.5 * (lo + hi);
                if ok_at(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(0.98 * lo)
        }
    }
}

/// Sampling radius used when none is given.
pub fn default_rho(family: &Family) -> Result<f64> {
    match family {
        Family::Euclidean {}
        | Family::Klein {}
        | Family::ProjSphere {}
        | Family::Funk {}
        | Family::Berwald {}
        | Family::Shen { .. } => Ok(UNIT_BALL_RHO),
        Family::TestPoly { .. } => feasible_radius(family, TEST_POLY_RHO),
        Family::Soln1 { .. } | Family::SolnK0 { .. } | Family::SolnKm1 { .. } => {
            let limit = family.sqrt_radius().unwrap_or(0.0);
            if limit <= R_MIN {
                return Err(Error::domain(format!(
                    "{family}: square-root arguments are negative near the origin"
                )));
            }
            feasible_radius(family, limit)
        }
        Family::Bryant { c, d } | Family::SolnFamily { c, d, .. } => {
            // beyond |C| + 2|D| + 1 the profile decays; the convexity scan decides
            feasible_radius(family, (c.abs() + 2.0 * d.abs() + 1.0).sqrt())
        }
    }
}

/// Expected curvature constant of a catalog family.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum KTarget {
    Value(f64),
    /// Equal to the named parameter.
    Param(&'static str),
    None,
}

#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntry {
    pub family: &'static str,
    pub params: Vec<&'static str>,
    pub constraints: &'static str,
    #[serde(rename = "K_target")]
    pub k_target: KTarget,
    pub note: &'static str,
}

/// Every built-in family with its parameters and expected curvature.
pub fn list_catalog() -> Vec<CatalogEntry> {
    use KTarget::*;
    let e = |family, params, constraints, k_target, note| CatalogEntry {
        family,
        params,
        constraints,
        k_target,
        note,
    };
    vec![
        e(
            "euclidean",
            vec![],
            "",
            Value(0.0),
            "Riemannian baseline, phi = 1",
        ),
        e(
            "klein",
            vec![],
            "r < 1",
            Value(-1.0),
            "Riemannian baseline, Klein model",
        ),
        e(
            "proj_sphere",
            vec![],
            "",
            Value(1.0),
            "Riemannian baseline, round sphere in projective chart",
        ),
        e(
            "funk",
            vec![],
            "r < 1",
            Value(-0.25),
            "Funk metric, projectively flat",
        ),
        e(
            "berwald",
            vec![],
            "r < 1",
            Value(0.0),
            "Berwald's metric, projectively flat",
        ),
        e(
            "shen",
            vec!["eps"],
            "-1 <= eps < 1, r < 1",
            Value(-1.0),
            "projectively flat, built from the Funk metric",
        ),
        e(
            "soln1",
            vec!["C", "K"],
            "K < 0, r^2 < C",
            Param("K"),
            "Q = 0 solution, reversed Funk type",
        ),
        e(
            "soln_family",
            vec!["C", "D", "K", "branch"],
            "branch in 0..=3",
            Param("K"),
            "general Q = 0 solution through the biquadratic in q",
        ),
        e(
            "soln_k0",
            vec!["C", "D"],
            "D != 0, r^2 < C",
            Value(0.0),
            "Q = 0 solution of Berwald type",
        ),
        e(
            "soln_km1",
            vec!["C", "D"],
            "D != 0, r^2 < C - 2|D|",
            Value(-1.0),
            "Q = 0 solution of Shen type",
        ),
        e(
            "bryant",
            vec!["C", "D"],
            "D != 0",
            Value(1.0),
            "Bryant's metrics, complex closed form",
        ),
        e(
            "test_poly",
            vec!["a", "b"],
            "|a| <= 0.2, |b| <= 0.1 suggested",
            None,
            "phi = 1 + a s + b r^2, not of constant curvature",
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(f: Family) -> MetricSpec {
        MetricSpec::new(f, 3).unwrap()
    }

    #[test]
    fn funk_values() {
        let s = spec(Family::Funk {});
        assert_eq!(s.phi_jet(0.0, 0.0, 3).unwrap().value(), 1.0);
        let v = s.phi_jet(0.5, 0.2, 3).unwrap().value();
        let expect = (0.79f64.sqrt() + 0.2) / 0.75;
        assert!((v - expect).abs() < 1e-15);
        assert!((v - 1.4517593).abs() < 1e-7);
    }

    #[test]
    fn berwald_at_origin() {
        let s = spec(Family::Berwald {});
        assert!((s.phi_jet(0.0, 0.0, 3).unwrap().value() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn shen_zero_is_half_funk() {
        let shen = spec(Family::Shen { eps: 0.0 });
        let funk = spec(Family::Funk {});
        for &(r, s) in &[(0.3, 0.1), (0.9, -0.85), (0.01, 0.0)] {
            let a = shen.phi_jet(r, s, 5).unwrap();
            let b = funk.phi_jet(r, s, 5).unwrap();
            for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
                assert!((x - 0.5 * y).abs() <= 1e-14 * y.abs().max(1.0));
            }
        }
    }

    #[test]
    fn shen_minus_one_is_klein() {
        let shen = spec(Family::Shen { eps: -1.0 });
        let klein = spec(Family::Klein {});
        let a = shen.phi_jet(0.6, 0.3, 4).unwrap();
        let b = klein.phi_jet(0.6, 0.3, 4).unwrap();
        for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(MetricSpec::new(Family::Shen { eps: 1.0 }, 3).is_err());
        assert!(MetricSpec::new(Family::Shen { eps: -1.0 }, 3).is_ok());
        assert!(MetricSpec::new(Family::Soln1 { c: 1.0, k: 0.5 }, 3).is_err());
        assert!(MetricSpec::new(Family::Bryant { c: 1.0, d: 0.0 }, 3).is_err());
        assert!(MetricSpec::new(Family::Funk {}, 1).is_err());
    }

    #[test]
    fn domain_errors_name_the_subexpression() {
        let s = MetricSpec::with_rho(Family::Funk {}, 3, 5.0).unwrap();
        match s.phi_jet(1.5, 0.0, 3) {
            Err(Error::Domain(m)) => assert!(m.contains("r^2 - s^2"), "{m}"),
            other => panic!("expected domain error, got {other:?}"),
        }
        assert!(matches!(
            spec(Family::Funk {}).phi_jet(0.9995, 0.0, 3),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn c_d_families_get_scanned_radius() {
        let km1 = spec(Family::SolnKm1 { c: 2.0, d: 0.5 });
        assert!(km1.rho > 0.5 && km1.rho < 1.0, "{}", km1.rho);
        let bryant = spec(Family::Bryant { c: 1.0, d: 0.3 });
        assert!(bryant.rho > 1.0 && bryant.rho < 1.4, "{}", bryant.rho);
        assert!(matches!(
            MetricSpec::with_rho(Family::SolnKm1 { c: 2.0, d: 0.5 }, 3, 1.5),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn soln_km1_is_oriented_positive() {
        let s = spec(Family::SolnKm1 { c: 2.0, d: 0.5 });
        let v = s.phi_jet(0.3, 0.1, 2).unwrap().value();
        let u: f64 = 0.09 - 0.01;
        let printed = 0.5 * (1.0 / ((3.0 - u).sqrt() - 0.1) - 1.0 / ((1.0 - u).sqrt() - 0.1));
        assert!((v + printed).abs() < 1e-15);
    }

    #[test]
    fn bryant_radicand_sign() {
        // the closed form coincides with the K = 1 root branch of the quartic
        let closed = spec(Family::Bryant { c: 1.0, d: 0.3 });
        let general = MetricSpec::with_rho(
            Family::SolnFamily {
                c: 1.0,
                d: 0.3,
                k: 1.0,
                branch: 0,
            },
            3,
            closed.rho,
        )
        .unwrap();
        for &(r, s) in &[(0.3, 0.1), (0.4, -0.2), (0.2, 0.15)] {
            let a = closed.phi_jet(r, s, 4).unwrap();
            let b = general.phi_jet(r, s, 4).unwrap();
            for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
                assert!((x - y).abs() < 1e-12 * y.abs().max(1.0), "{x} vs {y}");
            }
        }
        // with radicand C + 2iD - r² + s², sφ_rs + rφ_ss - φ_r does not vanish
        let (r, s) = Jet2::seed_rs(0.3, 0.1, 3).unwrap();
        let u = &(&r * &r) - &(&s * &s);
        let phi = bryant(&u, &s, 1.0, 0.3, true).unwrap();
        let q_num: f64 = 0.1 * phi.partial(&[1, 1]).unwrap() + 0.3 * phi.partial(&[0, 2]).unwrap()
            - phi.partial(&[1, 0]).unwrap();
        assert!(q_num.abs() > 0.1, "{q_num}");
    }

    #[test]
    fn catalog_listing_is_complete() {
        let cat = list_catalog();
        assert_eq!(cat.len(), 12);
        let k = |id: &str| {
            cat.iter()
                .find(|e| e.family == id)
                .unwrap()
                .k_target
                .clone()
        };
        assert_eq!(k("funk"), KTarget::Value(-0.25));
        assert_eq!(k("berwald"), KTarget::Value(0.0));
        assert_eq!(k("shen"), KTarget::Value(-1.0));
        assert_eq!(k("soln_k0"), KTarget::Value(0.0));
        assert_eq!(k("soln_km1"), KTarget::Value(-1.0));
        assert_eq!(k("bryant"), KTarget::Value(1.0));
    }

    #[test]
    fn spec_json_round_trip() {
        let s = spec(Family::Shen { eps: 0.5 });
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"family\":\"shen\""), "{text}");
        assert!(text.contains("\"K_target\":-1.0"), "{text}");
        let back: MetricSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        let e = serde_json::to_string(&spec(Family::Euclidean {})).unwrap();
        let back: MetricSpec = serde_json::from_str(&e).unwrap();
        assert_eq!(back.family, Family::Euclidean {});
    }
}
