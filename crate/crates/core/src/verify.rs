//! Grid-sampled residual checks of the constant-curvature equations.
//!
//! Every check evaluates a [`CurvatureBundle`] at each grid point (in
//! parallel), turns it into one normalized residual and reduces the residuals
//! to a [`CheckResult`]. Curvature residuals are relative to `φ²`, the natural
//! scale of `R1 = Kφ²`.
//!
//! [`run_suite`] runs every check for one metric and assembles a
//! [`VerificationReport`], which is the JSON contract of the CLI.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{default_rho, MetricSpec, PointSample, Profile, R_MIN};
use crate::curvature::CurvatureBundle;
use crate::error::{Error, Result};
use crate::oracle::{self, SprayData};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_GRID: usize = 40;
pub const DEFAULT_DELTA: f64 = 1e-3;
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_ORACLE_POINTS: usize = 20;
/// Tolerance of the `R4` identity, relative to `1 + |R1|`.
pub const IDENTITY_TOL: f64 = 1e-9;
/// Tolerance of the oracle comparisons (relative).
pub const ORACLE_TOL: f64 = 1e-6;
/// `|sφ_rs + rφ_ss − φ_r| / max(1, |φ_r|)` below which `Q` counts as zero for
/// the projectively flat reductions.
pub const Q_ZERO_TOL: f64 = 1e-8;

/// Uniform `(r, s)` sampling: `r` over `[r_min, ρ(1 − δ)]`, and for each `r`,
/// `s` over `[−r(1 − δ), r(1 − δ)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nr: usize,
    pub ns: usize,
    pub r_min: f64,
    pub rho: f64,
    pub delta: f64,
}

impl Grid {
    pub fn new(nr: usize, ns: usize, r_min: f64, rho: f64, delta: f64) -> Result<Self> {
        if nr == 0 || ns == 0 {
            return Err(Error::usage("empty grid"));
        }
        if nr < 2 || ns < 2 {
            return Err(Error::usage(format!(
                "grid needs at least 2 samples per axis, got {nr}x{ns}"
            )));
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::usage(format!(
                "delta must lie in [0, 1), got {delta}"
            )));
        }
        if !(r_min > 0.0) || !(r_min < rho * (1.0 - delta)) {
            return Err(Error::usage(format!(
                "need 0 < r_min < rho (1 - delta), got r_min = {r_min}, rho = {rho}, delta = {delta}"
            )));
        }
        Ok(Grid {
            nr,
            ns,
            r_min,
            rho,
            delta,
        })
    }

    /// Default 40×40 grid on the spec's domain.
    pub fn for_spec(spec: &MetricSpec) -> Self {
        Grid {
            nr: DEFAULT_GRID,
            ns: DEFAULT_GRID,
            r_min: R_MIN,
            rho: spec.rho,
            delta: DEFAULT_DELTA,
        }
    }

    pub fn len(&self) -> usize {
        self.nr * self.ns
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> Vec<PointSample> {
        let r_max = self.rho * (1.0 - self.delta);
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.nr {
            let r = self.r_min + (r_max - self.r_min) * i as f64 / (self.nr - 1) as f64;
            let half = r * (1.0 - self.delta);
            for j in 0..self.ns {
                let s = -half + 2.0 * half * j as f64 / (self.ns - 1) as f64;
                out.push(PointSample { r, s });
            }
        }
        out
    }
}

/// Location of a residual in the `(r, s)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub r: f64,
    pub s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// The check could not be evaluated (domain or numeric failure).
    Error,
    /// A precondition of the check does not hold, so it does not apply.
    Skipped,
}

/// Reduction of one residual over a set of sample points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub status: Status,
    pub max_residual: Option<f64>,
    pub mean_residual: Option<f64>,
    pub argmax: Option<Location>,
    pub tolerance: f64,
    pub pass: bool,
    pub points: usize,
    pub error: Option<String>,
    /// `(r, s, residual)` per sample, for CSV export.
    #[serde(skip)]
    pub per_point: Vec<(f64, f64, f64)>,
}

impl CheckResult {
    fn from_residuals(name: &str, tolerance: f64, per_point: Vec<(f64, f64, f64)>) -> Self {
        let mut max: Option<(f64, Location)> = None;
        let mut sum = 0.0;
        for &(r, s, v) in &per_point {
            sum += v;
            // a NaN residual dominates: it must never look like a pass
            let worse = match max {
                None => true,
                Some((m, _)) => !m.is_nan() && (v > m || v.is_nan()),
            };
            if worse {
                max = Some((v, Location { r, s }));
            }
        }
        let max_residual = max.map(|(m, _)| m);
        let pass = max_residual.is_some_and(|m| m <= tolerance);
        CheckResult {
            name: name.to_string(),
            status: if pass { Status::Pass } else { Status::Fail },
            max_residual,
            mean_residual: (!per_point.is_empty()).then(|| sum / per_point.len() as f64),
            argmax: max.map(|(_, l)| l),
            tolerance,
            pass,
            points: per_point.len(),
            error: None,
            per_point,
        }
    }

    fn failed(name: &str, tolerance: f64, err: &Error) -> Self {
        let status = match err {
            Error::Precondition(_) => Status::Skipped,
            _ => Status::Error,
        };
        CheckResult {
            name: name.to_string(),
            status,
            max_residual: None,
            mean_residual: None,
            argmax: None,
            tolerance,
            pass: false,
            points: 0,
            error: Some(err.to_string()),
            per_point: Vec::new(),
        }
    }

    /// Re-derive `pass` from the stored numbers.
    pub fn recomputed_pass(&self) -> bool {
        self.max_residual.is_some_and(|m| m <= self.tolerance)
    }
}

/// Curvature bundles over a grid, shared by all grid checks.
pub struct Samples {
    pub n: usize,
    pub bundles: Vec<(PointSample, Result<CurvatureBundle>)>,
}

impl Samples {
    pub fn evaluate<P: Profile + ?Sized>(profile: &P, grid: &Grid) -> Self {
        let bundles = grid
            .points()
            .into_par_iter()
            .map(|p| {
                let b = PointSample::with_r_min(p.r, p.s, grid.r_min)
                    .and_then(|p| CurvatureBundle::at(profile, p))
                    .map_err(|e| e.at_point(p.r, p.s));
                (p, b)
            })
            .collect();
        Samples {
            n: profile.dim(),
            bundles,
        }
    }

    /// Apply `f` at every point; the first failing point (in grid order)
    /// aborts the check with its error.
    fn residuals(
        &self,
        f: impl Fn(&CurvatureBundle) -> Result<f64> + Sync,
    ) -> Result<Vec<(f64, f64, f64)>> {
        let out: Vec<Result<(f64, f64, f64)>> = self
            .bundles
            .par_iter()
            .map(|(p, b)| {
                let b = b.as_ref().map_err(Clone::clone)?;
                let v = f(b).map_err(|e| e.at_point(p.r, p.s))?;
                Ok((p.r, p.s, v))
            })
            .collect();
        out.into_iter().collect()
    }

    fn check(
        &self,
        name: &str,
        tol: f64,
        f: impl Fn(&CurvatureBundle) -> Result<f64> + Sync,
    ) -> Result<CheckResult> {
        Ok(CheckResult::from_residuals(name, tol, self.residuals(f)?))
    }

    fn q_is_zero(&self) -> Result<()> {
        for (p, b) in &self.bundles {
            let b = b.as_ref().map_err(Clone::clone)?;
            let scale = b.phi.partial(&[1, 0])?.abs().max(1.0);
            if b.q_num.abs() > Q_ZERO_TOL * scale {
                return Err(Error::Precondition(format!(
                    "Q is not negligible: sφ_rs + rφ_ss - φ_r = {:e}",
                    b.q_num
                ))
                .at_point(p.r, p.s));
            }
        }
        Ok(())
    }

    /// `|(n−1)Kφ² − (n−1)R1 − (r² − s²)R2| / ((n−1)φ²)`.
    pub fn constant_ricci(&self, k: f64, tol: f64) -> Result<CheckResult> {
        let m = self.n as f64 - 1.0;
        self.check("thm1_1", tol, |b| {
            let f2 = phi2(b);
            Ok((m * k * f2 - m * b.r1.value() - b.point.u() * b.r2.value()).abs() / (m * f2))
        })
    }

    /// `|R1 − Kφ²|/φ²` and `|R2|/φ²`.
    pub fn constant_flag(&self, k: f64, tol: f64) -> Result<[CheckResult; 2]> {
        Ok([
            self.check("thm1_2/R1", tol, |b| {
                Ok((b.r1.value() - k * phi2(b)).abs() / phi2(b))
            })?,
            self.check("thm1_2/R2", tol, |b| Ok(b.r2.value().abs() / phi2(b)))?,
        ])
    }

    /// The Ricci equation and `|(n+1)R3 + (r² − s²)[R2]_s|/φ²`.
    pub fn einstein_tensor(&self, k: f64, tol: f64) -> Result<[CheckResult; 2]> {
        let mut ricci = self.constant_ricci(k, tol)?;
        ricci.name = "thm1_3/ricci".into();
        let einstein = self.check("thm1_3/einstein", tol, |b| {
            Ok(b.einstein_residual().abs() / phi2(b))
        })?;
        Ok([ricci, einstein])
    }

    /// `|R2|/φ²`, `|R3|/φ²` and the spread of `K̂ = R1/φ²`.
    pub fn thm14(&self, tol: f64) -> Result<([CheckResult; 2], KHat)> {
        let checks = [
            self.check("thm1_4/R2", tol, |b| Ok(b.r2.value().abs() / phi2(b)))?,
            self.check("thm1_4/R3", tol, |b| Ok(b.r3.value().abs() / phi2(b)))?,
        ];
        let k_hat = self
            .k_hat()
            .ok_or_else(|| Error::Degenerate("no grid point could be evaluated".into()))?;
        Ok((checks, k_hat))
    }

    /// Statistics of `K̂` over the points that evaluated.
    pub fn k_hat(&self) -> Option<KHat> {
        let vals: Vec<f64> = self
            .bundles
            .iter()
            .filter_map(|(_, b)| b.as_ref().ok().map(CurvatureBundle::k_hat))
            .collect();
        KHat::from_values(&vals)
    }

    /// `|χ|/(|y| r φ²)` in the frame `x = (s, √(r² − s²), 0, …)`, `y = e₁`.
    pub fn chi_vanishes(&self, tol: f64) -> Result<CheckResult> {
        let n = self.n;
        self.check("lemma2_4", tol, |b| {
            let (x, y) = canonical_frame(n, b.point);
            let chi = b.compute_chi(&x, &y)?;
            Ok(chi.norm() / (b.point.r * phi2(b)))
        })
    }

    /// `max |H_ij| / φ²` in the same frame.
    pub fn h_vanishes(&self, tol: f64) -> Result<CheckResult> {
        let n = self.n;
        self.check("lemma2_5", tol, |b| {
            let (x, y) = canonical_frame(n, b.point);
            Ok(b.compute_h(&x, &y)?.amax() / phi2(b))
        })
    }

    /// `|sφ_rs + rφ_ss − φ_r| / max(1, |φ_r|)`.
    pub fn projective_q0(&self, tol: f64) -> Result<CheckResult> {
        self.check("pde1", tol, |b| {
            Ok(b.q_num.abs() / b.phi.partial(&[1, 0])?.abs().max(1.0))
        })
    }

    /// `|ψ_r − sψ_rs − rψ_ss| / φ²`; requires `Q = 0`.
    pub fn pde2(&self, tol: f64) -> Result<CheckResult> {
        self.q_is_zero()?;
        self.check("pde2", tol, |b| Ok(b.pde2.abs() / phi2(b)))
    }

    /// `|Kφ² − ψ² + ψ_v| / φ²` with `ψ_v = ψ_s + (s/r)ψ_r`; requires `Q = 0`.
    pub fn ode_uv(&self, k: f64, tol: f64) -> Result<CheckResult> {
        self.q_is_zero()?;
        self.check("ode_uv", tol, |b| {
            Ok((k * phi2(b) - b.ode_rhs).abs() / phi2(b))
        })
    }

    /// `|R4 + sR2 + (φ_s/φ){(r² − s²)R2 + R1}| / (1 + |R1|)`.
    pub fn r4_identity(&self, tol: f64) -> Result<CheckResult> {
        self.check("identity/R4", tol, |b| {
            Ok(b.req2_residual().abs() / (1.0 + b.r1.value().abs()))
        })
    }
}

fn phi2(b: &CurvatureBundle) -> f64 {
    b.phi_value().powi(2)
}

/// `x = (s, √(r² − s²), 0, …)`, `y = e₁`: a point with the given `(r, s)`.
pub fn canonical_frame(n: usize, p: PointSample) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut y = vec![0.0; n];
    x[0] = p.s;
    x[1] = p.u().max(0.0).sqrt();
    y[0] = 1.0;
    (x, y)
}

/// Mean and spread of the curvature estimate `K̂ = R1/φ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KHat {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub spread: f64,
}

impl KHat {
    fn from_values(vals: &[f64]) -> Option<Self> {
        if vals.is_empty() {
            return None;
        }
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(KHat {
            mean: vals.iter().sum::<f64>() / vals.len() as f64,
            min,
            max,
            spread: max - min,
        })
    }
}

fn grid_samples(spec: &MetricSpec, grid: &Grid) -> Samples {
    Samples::evaluate(spec, grid)
}

/// Constant Ricci curvature `K` on the grid, at the default tolerance.
pub fn verify_constant_ricci(spec: &MetricSpec, k: f64, grid: &Grid) -> Result<CheckResult> {
    grid_samples(spec, grid).constant_ricci(k, DEFAULT_TOL)
}

/// Constant flag curvature `K`: the `R1` and `R2` residuals.
pub fn verify_constant_flag(spec: &MetricSpec, k: f64, grid: &Grid) -> Result<[CheckResult; 2]> {
    grid_samples(spec, grid).constant_flag(k, DEFAULT_TOL)
}

/// Einstein metric with `Ric = (n−1)KF²`: both equations.
pub fn verify_einstein_tensor(spec: &MetricSpec, k: f64, grid: &Grid) -> Result<[CheckResult; 2]> {
    grid_samples(spec, grid).einstein_tensor(k, DEFAULT_TOL)
}

/// `R2 = R3 = 0` with the resulting curvature estimate.
pub fn verify_thm14(spec: &MetricSpec, grid: &Grid) -> Result<([CheckResult; 2], KHat)> {
    grid_samples(spec, grid).thm14(DEFAULT_TOL)
}

/// `Q = 0`, i.e. `φ_r − sφ_rs − rφ_ss = 0`.
pub fn verify_projective_q0(spec: &MetricSpec, grid: &Grid) -> Result<CheckResult> {
    grid_samples(spec, grid).projective_q0(DEFAULT_TOL)
}

/// `Kφ² = ψ² − ψ_v` along the grid; fails with a precondition error unless `Q = 0`.
pub fn verify_ode_uv(spec: &MetricSpec, k: f64, grid: &Grid) -> Result<CheckResult> {
    grid_samples(spec, grid).ode_uv(k, DEFAULT_TOL)
}

/// Pointwise comparison of the reduced formulas against the generic oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    pub r: f64,
    pub s: f64,
    /// Relative difference of `R^i_j`.
    pub riemann: f64,
    /// Relative difference of `Ric` against the oracle trace.
    pub ricci: f64,
    pub chi: f64,
    pub h: f64,
}

/// Compare the assembled `R^i_j`, `Ric`, `χ` and `H` at `(x, y)` with the
/// oracle values.
///
/// Differences are relative to `max(|oracle|_max, φ²|y|^d)` where `d` is the
/// degree of homogeneity in `y` (2 for `R` and `Ric`, 1 for `χ`, 0 for `H`),
/// so quantities that vanish are compared on the curvature scale.
pub fn compare_with_oracle<P: Profile + ?Sized>(
    profile: &P,
    x: &[f64],
    y: &[f64],
) -> Result<OracleComparison> {
    let n = profile.dim();
    if x.len() != n || y.len() != n {
        return Err(Error::usage(format!(
            "point has dimensions ({}, {}), metric has n = {n}",
            x.len(),
            y.len()
        )));
    }
    let xv = DVector::from_column_slice(x);
    let yv = DVector::from_column_slice(y);
    let ylen = yv.norm();
    if ylen == 0.0 {
        return Err(Error::domain("direction y = 0"));
    }
    let r = xv.norm();
    let s = (xv.dot(&yv) / ylen).clamp(-r, r);
    let point = PointSample::new(r, s)?;
    let bundle = CurvatureBundle::at(profile, point)?;
    let spray = SprayData::from_profile(profile, x, y, oracle::H_ORDER)?;

    let phi2 = bundle.phi_value().powi(2);
    let rel_mat = |a: &DMatrix<f64>, b: &DMatrix<f64>, d: i32| {
        (a - b).amax() / b.amax().max(phi2 * ylen.powi(d))
    };
    let riem_oracle = oracle::riemann_curvature(&spray)?;
    let riem = bundle.assemble_riemann(x, y)?;
    let ric_oracle = riem_oracle.trace();
    let ric = bundle.compute_ricci(ylen);
    let chi_oracle = oracle::chi_from_riemann(&spray)?;
    let chi = bundle.compute_chi(x, y)?;
    let h_oracle = oracle::h_from_chi(&spray)?;
    let h = bundle.compute_h(x, y)?;
    Ok(OracleComparison {
        r,
        s,
        riemann: rel_mat(&riem, &riem_oracle, 2),
        ricci: (ric - ric_oracle).abs() / ric_oracle.abs().max(phi2 * ylen * ylen),
        chi: (&chi - &chi_oracle).amax() / chi_oracle.amax().max(phi2 * ylen),
        h: rel_mat(&h, &h_oracle, 0),
    })
}

/// `count` random `(x, y)` pairs with `|x|` in `[0.1ρ, 0.85ρ]`, `|y|` in `[0.5, 2]`.
pub fn random_points(n: usize, rho: f64, count: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = |rng: &mut ChaCha8Rng| loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 0.1 && norm <= 1.0 {
            return v.into_iter().map(|a| a / norm).collect::<Vec<_>>();
        }
    };
    (0..count)
        .map(|_| {
            let rx = rng.gen_range(0.1..0.85) * rho;
            let ry = rng.gen_range(0.5..2.0);
            let x = unit(&mut rng).into_iter().map(|a| a * rx).collect();
            let y = unit(&mut rng).into_iter().map(|a| a * ry).collect();
            (x, y)
        })
        .collect()
}

/// Oracle comparisons at seeded random points, one check per quantity.
pub fn oracle_checks<P: Profile + ?Sized>(
    profile: &P,
    rho: f64,
    count: usize,
    seed: u64,
    tol: f64,
) -> Result<Vec<CheckResult>> {
    let points = random_points(profile.dim(), rho, count, seed);
    let cmp: Vec<Result<OracleComparison>> = points
        .par_iter()
        .map(|(x, y)| compare_with_oracle(profile, x, y))
        .collect();
    let cmp: Vec<OracleComparison> = cmp.into_iter().collect::<Result<_>>()?;
    let pick = |name: &str, f: fn(&OracleComparison) -> f64| {
        CheckResult::from_residuals(name, tol, cmp.iter().map(|c| (c.r, c.s, f(c))).collect())
    };
    Ok(vec![
        pick("oracle/riemann", |c| c.riemann),
        pick("oracle/ricci", |c| c.ricci),
        pick("oracle/chi", |c| c.chi),
        pick("oracle/H", |c| c.h),
    ])
}

/// Pointwise form of the equivalences `χ = 0 ⇔ (n+1)R3 + (r² − s²)[R2]_s = 0`
/// and `H = 0 ⇔ M = M_s = 0` at one `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceCheck {
    /// `(n+1)R3 + (r² − s²)[R2]_s`.
    pub einstein: f64,
    /// `|χ|`.
    pub chi_norm: f64,
    /// `||χ| − ½|einstein|·|t|| / (φ²|y|)` with `t = |y|x − sy`; zero whenever
    /// the two sides are proportional as claimed.
    pub proportionality: f64,
    pub m: f64,
    pub m_s: f64,
    /// `max |H_ij|`.
    pub h_max: f64,
    /// `max |H_ij − (M_s|y|⁻² t t^T − sM|y|⁻²(|y|²δ − y y^T))|`, from the oracle.
    pub h_oracle_diff: f64,
}

pub fn equivalence_check<P: Profile + ?Sized>(
    profile: &P,
    x: &[f64],
    y: &[f64],
) -> Result<EquivalenceCheck> {
    let xv = DVector::from_column_slice(x);
    let yv = DVector::from_column_slice(y);
    let ylen = yv.norm();
    let r = xv.norm();
    let s = (xv.dot(&yv) / ylen).clamp(-r, r);
    let bundle = CurvatureBundle::at(profile, PointSample::new(r, s)?)?;
    let chi = bundle.compute_chi(x, y)?;
    let t_norm = (&xv * ylen - &yv * s).norm();
    let einstein = bundle.einstein_residual();
    let phi2 = bundle.phi_value().powi(2);
    let h = bundle.compute_h(x, y)?;
    let spray = SprayData::from_profile(profile, x, y, oracle::H_ORDER)?;
    let h_oracle = oracle::h_from_chi(&spray)?;
    Ok(EquivalenceCheck {
        einstein,
        chi_norm: chi.norm(),
        proportionality: (chi.norm() - 0.5 * einstein.abs() * t_norm).abs() / (phi2 * ylen),
        m: bundle.m,
        m_s: bundle.m_s,
        h_max: h.amax(),
        h_oracle_diff: (&h - &h_oracle).amax(),
    })
}

/// Real roots of `D²q⁴ + (u − C)q² − K = 0` and the profile values they give.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuarticSolution {
    pub u: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "K")]
    pub k: f64,
    /// `(C − u)² + 4D²K`, the discriminant in `q²`.
    pub discriminant: f64,
    pub roots: Vec<QuarticRoot>,
    /// Index of the selected root, if any root gives `φ > 0`.
    pub branch_used: Option<usize>,
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuarticRoot {
    pub q: f64,
    pub multiplicity: u32,
    /// `|D²q⁴ + (u − C)q² − K|`.
    pub residual: f64,
    /// `max(1, |K|, D²q⁴)`.
    pub scale: f64,
    /// `φ = q/(q²(Dq + v)² + K)` once evaluated at some `v`.
    pub phi: Option<f64>,
    /// `φ > 0`; roots with `φ ≤ 0` are kept but flagged.
    pub admissible: Option<bool>,
}

impl QuarticSolution {
    /// Evaluate `φ` on every root at `v` and select a branch with `φ > 0`,
    /// preferring the root closest to `previous` (continuity along a path).
    pub fn evaluate(mut self, v: f64, previous: Option<f64>) -> Result<Self> {
        let phis = phi_from_q(&self, v)?;
        for (root, phi) in self.roots.iter_mut().zip(phis) {
            root.phi = Some(phi);
            root.admissible = Some(phi > 0.0);
        }
        let target = previous.unwrap_or(f64::INFINITY);
        self.branch_used = self
            .roots
            .iter()
            .enumerate()
            .filter(|(_, r)| r.admissible == Some(true))
            .min_by(|(_, a), (_, b)| {
                let da = (a.q - target).abs();
                let db = (b.q - target).abs();
                // without a previous root: largest q first
                da.partial_cmp(&db)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(b.q.total_cmp(&a.q))
            })
            .map(|(i, _)| i);
        Ok(self)
    }
}

/// Solve `D²q⁴ + (u − C)q² − K = 0` for real `q ≠ 0`, largest first.
///
/// No real root is not an error: the solution is empty and carries a
/// diagnostic.
pub fn solve_q(u: f64, c: f64, d: f64, k: f64) -> Result<QuarticSolution> {
    if ![u, c, d, k].iter().all(|v| v.is_finite()) {
        return Err(Error::usage("solve_q needs finite inputs"));
    }
    let cu = c - u;
    let d2 = d * d;
    let discriminant = cu * cu + 4.0 * d2 * k;
    let mut squares: Vec<(f64, u32)> = Vec::new();
    let mut diagnostic = None;
    if d == 0.0 {
        // (u − C) q² = K
        if cu == 0.0 {
            diagnostic = Some(if k == 0.0 {
                "D = 0 and u = C: every q solves the equation".to_string()
            } else {
                format!("D = 0 and u = C: no solution for K = {k}")
            });
        } else {
            squares.push((-k / cu, 1));
        }
    } else if discriminant < 0.0 {
        diagnostic = Some(format!(
            "discriminant (C - u)^2 + 4 D^2 K = {discriminant:e} < 0: no real q^2"
        ));
    } else {
        let root = discriminant.sqrt();
        // the larger-magnitude root first, the other through the product −K/D²
        let big = if cu >= 0.0 {
            (cu + root) / (2.0 * d2)
        } else {
            (cu - root) / (2.0 * d2)
        };
        let small = if big != 0.0 { -k / (d2 * big) } else { 0.0 };
        if discriminant == 0.0 {
            squares.push((big, 2));
        } else {
            squares.push((big, 1));
            squares.push((small, 1));
        }
    }
    let mut roots = Vec::new();
    for (w, mult) in squares {
        if !(w > 0.0) {
            continue;
        }
        // one Newton step on f(w) = D²w² + (C − u)·(−w) − K
        let f = d2 * w * w - cu * w - k;
        let fp = 2.0 * d2 * w - cu;
        let w = if fp != 0.0 && mult == 1 {
            w - f / fp
        } else {
            w
        };
        let q = w.sqrt();
        for q in [q, -q] {
            let q4 = d2 * q.powi(4);
            let residual = (q4 - cu * q * q - k).abs();
            roots.push(QuarticRoot {
                q,
                multiplicity: mult,
                residual,
                scale: 1f64.max(k.abs()).max(q4),
                phi: None,
                admissible: None,
            });
        }
    }
    roots.sort_by(|a, b| b.q.total_cmp(&a.q));
    if roots.is_empty() && diagnostic.is_none() {
        diagnostic = Some(format!(
            "no positive q^2 (discriminant {discriminant:e}, C - u = {cu:e}, K = {k:e})"
        ));
    }
    Ok(QuarticSolution {
        u,
        c,
        d,
        k,
        discriminant,
        roots,
        branch_used: None,
        diagnostic,
    })
}

/// `φ = q/(q²(Dq + v)² + K)` for every root of `sol`.
pub fn phi_from_q(sol: &QuarticSolution, v: f64) -> Result<Vec<f64>> {
    sol.roots
        .iter()
        .map(|root| {
            let q = root.q;
            let den = q * q * (sol.d * q + v).powi(2) + sol.k;
            if den == 0.0 {
                Err(Error::Singularity(format!(
                    "q^2 (Dq + v)^2 + K = 0 at q = {q}, v = {v}"
                )))
            } else {
                Ok(q / den)
            }
        })
        .collect()
}

/// Where `K` for the curvature-equation checks came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KSource {
    Config,
    Catalog,
    Estimate,
}

/// Options of [`run_suite`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub grid: Grid,
    pub tol: f64,
    pub seed: u64,
    pub oracle_points: usize,
    /// Curvature constant for the curvature-equation checks; defaults to the catalog
    /// value, then to the grid mean of `K̂`.
    #[serde(rename = "K")]
    pub k: Option<f64>,
}

impl SuiteConfig {
    pub fn for_spec(spec: &MetricSpec) -> Self {
        SuiteConfig {
            grid: Grid::for_spec(spec),
            tol: DEFAULT_TOL,
            seed: DEFAULT_SEED,
            oracle_points: DEFAULT_ORACLE_POINTS,
            k: None,
        }
    }

    fn validate(&self) -> Result<()> {
        let g = self.grid;
        Grid::new(g.nr, g.ns, g.r_min, g.rho, g.delta)?;
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::usage(format!(
                "tol must lie in (0, 1), got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

/// Verdict per check group: `None` when the group does not apply.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    pub thm1_1: Option<bool>,
    pub thm1_2: Option<bool>,
    pub thm1_3: Option<bool>,
    pub thm1_4: Option<bool>,
    pub lemma2_4: Option<bool>,
    pub lemma2_5: Option<bool>,
    pub pde1: Option<bool>,
    pub pde2: Option<bool>,
    pub ode_uv: Option<bool>,
    pub identities: Option<bool>,
    pub oracle: Option<bool>,
}

impl Verdicts {
    fn from_checks(checks: &[CheckResult]) -> Self {
        let group = |prefix: &str| -> Option<bool> {
            let members: Vec<&CheckResult> = checks
                .iter()
                .filter(|c| c.name.split('/').next() == Some(prefix))
                .collect();
            if members.is_empty() || members.iter().all(|c| c.status == Status::Skipped) {
                return None;
            }
            Some(
                members
                    .iter()
                    .filter(|c| c.status != Status::Skipped)
                    .all(|c| c.recomputed_pass()),
            )
        };
        Verdicts {
            thm1_1: group("thm1_1"),
            thm1_2: group("thm1_2"),
            thm1_3: group("thm1_3"),
            thm1_4: group("thm1_4"),
            lemma2_4: group("lemma2_4"),
            lemma2_5: group("lemma2_5"),
            pde1: group("pde1"),
            pde2: group("pde2"),
            ode_uv: group("ode_uv"),
            identities: group("identity"),
            oracle: group("oracle"),
        }
    }

    pub fn as_map(&self) -> BTreeMap<&'static str, Option<bool>> {
        BTreeMap::from([
            ("thm1_1", self.thm1_1),
            ("thm1_2", self.thm1_2),
            ("thm1_3", self.thm1_3),
            ("thm1_4", self.thm1_4),
            ("lemma2_4", self.lemma2_4),
            ("lemma2_5", self.lemma2_5),
            ("pde1", self.pde1),
            ("pde2", self.pde2),
            ("ode_uv", self.ode_uv),
            ("identities", self.identities),
            ("oracle", self.oracle),
        ])
    }
}

/// Radius information for the sampled domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainInfo {
    pub rho: f64,
    /// Radius found by the feasibility pre-scan of the family, when the
    /// family's domain is not the unit ball.
    pub feasible_radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub spec: MetricSpec,
    pub config: SuiteConfig,
    pub domain: DomainInfo,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "K_source")]
    pub k_source: KSource,
    #[serde(rename = "K_hat")]
    pub k_hat: Option<KHat>,
    pub checks: Vec<CheckResult>,
    pub verdicts: Verdicts,
    /// No check failed or errored.
    pub pass: bool,
    /// Some check could not be evaluated because of a domain or numeric error.
    pub numeric_error: bool,
}

impl VerificationReport {
    /// Verdicts re-derived from the stored residuals and tolerances.
    pub fn recomputed_verdicts(&self) -> Verdicts {
        Verdicts::from_checks(&self.checks)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Pretty JSON; identical inputs give identical bytes.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: VerificationReport = serde_json::from_str(text)
            .map_err(|e| Error::usage(format!("cannot read report: {e}")))?;
        if report.schema_version != SCHEMA_VERSION {
            return Err(Error::usage(format!(
                "report schema version {} is not supported (expected {SCHEMA_VERSION})",
                report.schema_version
            )));
        }
        Ok(report)
    }

    /// Per-point residuals as CSV with columns `r, s, check, residual`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["r", "s", "check", "residual"])
            .map_err(csv_error)?;
        for c in &self.checks {
            for &(r, s, v) in &c.per_point {
                w.write_record([
                    format!("{r:?}"),
                    format!("{s:?}"),
                    c.name.clone(),
                    format!("{v:?}"),
                ])
                .map_err(csv_error)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::usage(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Fixed-width table of check results, one line per check (plus one per error).
pub fn check_table(checks: &[CheckResult]) -> String {
    let mut out = format!(
        "{:<18} {:>6}  {:>11}  {:>11}  {:>9}  {}\n",
        "check", "status", "max", "mean", "tol", "argmax (r, s)"
    );
    for c in checks {
        let status = match c.status {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Error => "ERROR",
            Status::Skipped => "skip",
        };
        let num = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3e}"));
        let at = c
            .argmax
            .map_or(String::new(), |l| format!("({:.4}, {:.4})", l.r, l.s));
        out += &format!(
            "{:<18} {:>6}  {:>11}  {:>11}  {:>9.1e}  {}\n",
            c.name,
            status,
            num(c.max_residual),
            num(c.mean_residual),
            c.tolerance,
            at
        );
        if let Some(e) = &c.error {
            out += &format!("{:<18} {e}\n", "");
        }
    }
    out
}

fn csv_error(e: csv::Error) -> Error {
    Error::usage(format!("csv: {e}"))
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let g = &self.config.grid;
        writeln!(
            f,
            "metric   {} (n = {}, rho = {})",
            self.spec.family, self.spec.n, self.spec.rho
        )?;
        writeln!(
            f,
            "grid     {}x{}, r_min = {}, delta = {}; tol = {:e}; seed = {}; oracle points = {}",
            g.nr,
            g.ns,
            g.r_min,
            g.delta,
            self.config.tol,
            self.config.seed,
            self.config.oracle_points
        )?;
        if let Some(rho) = self.domain.feasible_radius {
            writeln!(f, "domain   feasible radius from pre-scan: {rho}")?;
        }
        let source = match self.k_source {
            KSource::Config => "given",
            KSource::Catalog => "catalog",
            KSource::Estimate => "estimated",
        };
        writeln!(f, "K        {} ({source})", self.k)?;
        if let Some(k) = self.k_hat {
            writeln!(f, "K_hat    mean {:.12} spread {:.3e}", k.mean, k.spread)?;
        }
        writeln!(f)?;
        f.write_str(&check_table(&self.checks))?;
        writeln!(f)?;
        let verdicts: Vec<String> = self
            .verdicts
            .as_map()
            .into_iter()
            .map(|(k, v)| {
                let v = match v {
                    Some(true) => "pass",
                    Some(false) => "FAIL",
                    None => "n/a",
                };
                format!("{k}={v}")
            })
            .collect();
        writeln!(f, "verdicts {}", verdicts.join(" "))?;
        write!(f, "overall  {}", if self.pass { "PASS" } else { "FAIL" })
    }
}

/// Run every check for `spec` and assemble the report.
///
/// Per-check errors are recorded in the report rather than returned; only an
/// invalid configuration is an error.
pub fn run_suite(spec: &MetricSpec, config: &SuiteConfig) -> Result<VerificationReport> {
    config.validate()?;
    let tol = config.tol;
    let samples = Samples::evaluate(spec, &config.grid);
    let k_hat = samples.k_hat();
    let (k, k_source) = match (config.k, spec.k_target(), k_hat) {
        (Some(k), _, _) => (k, KSource::Config),
        (None, Some(k), _) => (k, KSource::Catalog),
        (None, None, Some(h)) => (h.mean, KSource::Estimate),
        (None, None, None) => (0.0, KSource::Estimate),
    };

    let mut checks = Vec::new();
    let mut push_all = |name: &str, r: Result<Vec<CheckResult>>| match r {
        Ok(v) => checks.extend(v),
        Err(e) => checks.push(CheckResult::failed(name, tol, &e)),
    };
    push_all("thm1_1", samples.constant_ricci(k, tol).map(|c| vec![c]));
    push_all("thm1_2", samples.constant_flag(k, tol).map(Vec::from));
    push_all("thm1_3", samples.einstein_tensor(k, tol).map(Vec::from));
    push_all("thm1_4", samples.thm14(tol).map(|(c, _)| Vec::from(c)));
    push_all("lemma2_4", samples.chi_vanishes(tol).map(|c| vec![c]));
    push_all("lemma2_5", samples.h_vanishes(tol).map(|c| vec![c]));
    push_all("pde1", samples.projective_q0(tol).map(|c| vec![c]));
    push_all("pde2", samples.pde2(tol).map(|c| vec![c]));
    push_all("ode_uv", samples.ode_uv(k, tol).map(|c| vec![c]));
    push_all(
        "identity/R4",
        samples.r4_identity(IDENTITY_TOL).map(|c| vec![c]),
    );
    if config.oracle_points > 0 {
        push_all(
            "oracle",
            oracle_checks(
                spec,
                spec.rho,
                config.oracle_points,
                config.seed,
                ORACLE_TOL,
            ),
        );
    }

    let verdicts = Verdicts::from_checks(&checks);
    let pass = checks
        .iter()
        .all(|c| matches!(c.status, Status::Pass | Status::Skipped));
    let numeric_error = checks.iter().any(|c| c.status == Status::Error);
    let feasible_radius = if spec.family.has_scanned_domain() {
        default_rho(&spec.family).ok()
    } else {
        None
    };
    Ok(VerificationReport {
        schema_version: SCHEMA_VERSION,
        spec: *spec,
        config: *config,
        domain: DomainInfo {
            rho: spec.rho,
            feasible_radius,
        },
        k,
        k_source,
        k_hat,
        checks,
        verdicts,
        pass,
        numeric_error,
    })
}

/// Random-point comparison of the reduced formulas with the oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub schema_version: u32,
    pub spec: MetricSpec,
    pub seed: u64,
    pub points: usize,
    /// `K` of the flag-curvature tensor check, when one is known.
    #[serde(rename = "K")]
    pub k: Option<f64>,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
    pub numeric_error: bool,
}

/// Oracle equivalence at `count` seeded points, plus the tensor check
/// `R^i_k = K(F²δ^i_k − g_kl y^l y^i)` when `k` is given.
pub fn run_oracle_check(
    spec: &MetricSpec,
    count: usize,
    seed: u64,
    k: Option<f64>,
    tol: f64,
) -> OracleReport {
    let mut checks = oracle_checks(spec, spec.rho, count, seed, tol)
        .unwrap_or_else(|e| vec![CheckResult::failed("oracle", tol, &e)]);
    if let Some(k) = k {
        let pts = random_points(spec.n, spec.rho, count, seed);
        let cfc: Result<Vec<(f64, f64, f64)>> = pts
            .iter()
            .map(|(x, y)| {
                let spray = SprayData::from_profile(spec, x, y, oracle::RIEMANN_ORDER)?;
                let res = oracle::cfc_tensor_check(&spray, k)?;
                let r = x.iter().map(|a| a * a).sum::<f64>().sqrt();
                let ylen = y.iter().map(|a| a * a).sum::<f64>().sqrt();
                let s = x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / ylen;
                Ok((r, s, res.normalized))
            })
            .collect();
        checks.push(match cfc {
            Ok(v) => CheckResult::from_residuals("oracle/cfc", tol, v),
            Err(e) => CheckResult::failed("oracle/cfc", tol, &e),
        });
    }
    OracleReport {
        schema_version: SCHEMA_VERSION,
        spec: *spec,
        seed,
        points: count,
        k,
        pass: checks.iter().all(|c| c.status == Status::Pass),
        numeric_error: checks.iter().any(|c| c.status == Status::Error),
        checks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Family;

    fn small(spec: &MetricSpec) -> Grid {
        Grid {
            nr: 8,
            ns: 7,
            ..Grid::for_spec(spec)
        }
    }

    fn spec(f: Family) -> MetricSpec {
        MetricSpec::new(f, 3).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(
            matches!(Grid::new(0, 5, 1e-3, 1.0, 1e-3), Err(Error::Usage(m)) if m == "empty grid")
        );
        assert!(Grid::new(1, 5, 1e-3, 1.0, 1e-3).is_err());
        assert!(Grid::new(5, 5, 0.0, 1.0, 1e-3).is_err());
        assert!(Grid::new(5, 5, 1.0, 1.0, 1e-3).is_err());
        assert!(Grid::new(5, 5, 1e-3, 1.0, 1.0).is_err());
        let g = Grid::new(4, 3, 0.1, 1.0, 0.0).unwrap();
        let pts = g.points();
        assert_eq!(pts.len(), 12);
        assert_eq!((pts[0].r, pts[0].s), (0.1, -0.1));
        assert_eq!((pts[11].r, pts[11].s), (1.0, 1.0));
        assert_eq!(pts[1].s, 0.0);
    }

    #[test]
    fn grid_stays_inside_the_margin() {
        let g = Grid::new(10, 9, 1e-3, 0.999, 1e-3).unwrap();
        for p in g.points() {
            assert!(p.r <= 0.999 * (1.0 - 1e-3) * (1.0 + 1e-15));
            assert!(p.s.abs() <= p.r * (1.0 - 1e-3) * (1.0 + 1e-15));
        }
    }

    #[test]
    fn funk_with_wrong_k_is_off_by_a_quarter() {
        let s = spec(Family::Funk {});
        let r = verify_constant_ricci(&s, 0.0, &small(&s)).unwrap();
        assert!(!r.pass);
        assert!((r.max_residual.unwrap() - 0.25).abs() < 1e-12);
        let ok = verify_constant_ricci(&s, -0.25, &small(&s)).unwrap();
        assert!(ok.pass && ok.max_residual.unwrap() < 1e-9);
    }

    #[test]
    fn constant_flag_reports_both_residuals() {
        let s = spec(Family::SolnK0 { c: 1.0, d: 1.0 });
        let [r1, r2] = verify_constant_flag(&s, 0.0, &small(&s)).unwrap();
        assert!(r1.pass && r2.pass, "{r1:?} {r2:?}");
        let t = spec(Family::TestPoly { a: 0.1, b: 0.05 });
        let [_, r2] = verify_constant_flag(&t, 0.0, &small(&t)).unwrap();
        assert!(!r2.pass);
    }

    #[test]
    fn einstein_residual_is_minus_two_m() {
        let t = spec(Family::TestPoly { a: 0.1, b: 0.05 });
        let g = small(&t);
        let [_, e] = verify_einstein_tensor(&t, 0.0, &g).unwrap();
        assert!(!e.pass);
        let samples = Samples::evaluate(&t, &g);
        for ((_, b), &(_, _, res)) in samples.bundles.iter().zip(&e.per_point) {
            let b = b.as_ref().unwrap();
            let expect = (-2.0 * b.m).abs() / b.phi_value().powi(2);
            assert!((res - expect).abs() <= 1e-12 * expect.max(1e-300));
        }
    }

    #[test]
    fn thm14_estimates_k() {
        let s = spec(Family::Shen { eps: -0.5 });
        let ([r2, r3], k) = verify_thm14(&s, &small(&s)).unwrap();
        assert!(r2.pass && r3.pass);
        assert!((k.mean + 1.0).abs() < 1e-12 && k.spread < 1e-12);
    }

    #[test]
    fn projective_check_matches_hand_value() {
        // φ = 1 + 0.1 s + 0.05 r²: sφ_rs + rφ_ss − φ_r = −0.1 r
        let t = spec(Family::TestPoly { a: 0.1, b: 0.05 });
        let g = small(&t);
        let r = verify_projective_q0(&t, &g).unwrap();
        for &(r, _, v) in &r.per_point {
            assert!((v - 0.1 * r).abs() < 1e-15);
        }
        assert!(
            verify_projective_q0(&spec(Family::Berwald {}), &g)
                .unwrap()
                .pass
        );
    }

    #[test]
    fn ode_check_needs_q_zero() {
        let t = spec(Family::TestPoly { a: 0.1, b: 0.05 });
        assert!(matches!(
            verify_ode_uv(&t, 0.0, &small(&t)),
            Err(Error::Precondition(_))
        ));
        let e = spec(Family::Euclidean {});
        let r = verify_ode_uv(&e, 0.0, &small(&e)).unwrap();
        assert_eq!(r.max_residual, Some(0.0));
        let s = spec(Family::Soln1 { c: 1.0, k: -2.0 });
        assert!(verify_ode_uv(&s, -2.0, &small(&s)).unwrap().pass);
    }

    #[test]
    fn domain_errors_carry_the_point() {
        let s = MetricSpec::with_rho(Family::Funk {}, 3, 1.5).unwrap();
        match verify_constant_ricci(&s, -0.25, &small(&s)) {
            Err(Error::Domain(m)) => assert!(m.contains("(r, s) = ("), "{m}"),
            other => panic!("expected a domain error, got {other:?}"),
        }
    }

    #[test]
    fn nan_residuals_fail() {
        let c = CheckResult::from_residuals(
            "x",
            1.0,
            vec![(0.1, 0.0, 0.5), (0.2, 0.0, f64::NAN), (0.3, 0.0, 0.7)],
        );
        assert!(!c.pass);
        assert!(c.max_residual.unwrap().is_nan());
        assert_eq!(c.argmax.unwrap().r, 0.2);
    }

    #[test]
    fn quartic_examples() {
        let s = solve_q(0.5, 1.0, 1.0, 0.0).unwrap();
        let qs: Vec<f64> = s.roots.iter().map(|r| r.q).collect();
        assert_eq!(qs.len(), 2);
        assert!((qs[0] - 0.5f64.sqrt()).abs() < 1e-15 && (qs[1] + 0.5f64.sqrt()).abs() < 1e-15);

        let s = solve_q(-2.0, 1.0, 1.0, -1.0).unwrap();
        let mut q2: Vec<f64> = s.roots.iter().map(|r| r.q * r.q).collect();
        q2.sort_by(f64::total_cmp);
        q2.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let root5 = 5f64.sqrt();
        assert!((q2[0] - (3.0 - root5) / 2.0).abs() < 1e-14);
        assert!((q2[1] - (3.0 + root5) / 2.0).abs() < 1e-14);

        let s = solve_q(1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(
            s.roots.iter().map(|r| r.q).collect::<Vec<_>>(),
            vec![1.0, -1.0]
        );

        let none = solve_q(0.0, 1.0, 1.0, -1.0).unwrap();
        assert!(none.roots.is_empty());
        assert!(none.diagnostic.unwrap().contains("discriminant"));
    }

    #[test]
    fn quartic_degenerate_d() {
        let s = solve_q(0.5, 1.0, 0.0, -2.0).unwrap();
        assert_eq!(s.roots.len(), 2);
        assert!((s.roots[0].q - 2.0).abs() < 1e-15);
        assert!(solve_q(1.0, 1.0, 0.0, 0.0).unwrap().diagnostic.is_some());
    }

    #[test]
    fn phi_branch_selection() {
        let s = solve_q(0.5, 1.0, 1.0, 0.0)
            .unwrap()
            .evaluate(0.1, None)
            .unwrap();
        assert_eq!(s.branch_used, Some(0));
        assert_eq!(s.roots[1].admissible, Some(false));
        // q² (Dq + v)² + K = 0 at q = 1, v = −1
        let s = solve_q(0.0, 1.0, 1.0, 0.0).unwrap();
        assert!(matches!(phi_from_q(&s, -1.0), Err(Error::Singularity(_))));
    }

    #[test]
    fn report_round_trips() {
        let s = spec(Family::Funk {});
        let config = SuiteConfig {
            grid: small(&s),
            oracle_points: 3,
            ..SuiteConfig::for_spec(&s)
        };
        let report = run_suite(&s, &config).unwrap();
        assert!(report.pass, "{report}");
        assert_eq!(report.k_source, KSource::Catalog);
        let back = VerificationReport::from_json(&report.to_json()).unwrap();
        assert_eq!(back.verdicts, report.verdicts);
        assert_eq!(back.recomputed_verdicts(), report.verdicts);
        assert_eq!(back.to_json(), report.to_json());
    }

    #[test]
    fn test_metric_passes_identities_only() {
        let t = spec(Family::TestPoly { a: 0.1, b: 0.05 });
        let config = SuiteConfig {
            grid: small(&t),
            oracle_points: 3,
            ..SuiteConfig::for_spec(&t)
        };
        let report = run_suite(&t, &config).unwrap();
        let v = &report.verdicts;
        assert_eq!(report.k_source, KSource::Estimate);
        assert_eq!((v.identities, v.oracle), (Some(true), Some(true)));
        assert_eq!(
            (v.thm1_2, v.thm1_4, v.pde1),
            (Some(false), Some(false), Some(false))
        );
        assert_eq!((v.pde2, v.ode_uv), (None, None));
        assert!(!report.pass && !report.numeric_error);
    }

    #[test]
    fn oracle_comparison_on_klein() {
        let k = spec(Family::Klein {});
        let c = compare_with_oracle(&k, &[0.3, -0.2, 0.4], &[1.0, 0.5, -0.7]).unwrap();
        assert!(
            c.riemann < 1e-12 && c.ricci < 1e-12 && c.chi < 1e-12 && c.h < 1e-12,
            "{c:?}"
        );
    }
}
