//! First-principles Finsler curvature from `F(x, y)` alone.
//!
//! Nothing here knows about the spherically symmetric structure: the input is
//! a [`JetN`] of `F` in the `2n` variables `(x¹..xⁿ, y¹..yⁿ)` and every object
//! is obtained from the textbook definitions
//!
//! ```text
//! g_ij  = ½ [F²]_{y^i y^j}
//! G^i   = ¼ g^{il} { [F²]_{x^m y^l} y^m − [F²]_{x^l} }
//! R^i_k = 2 ∂G^i/∂x^k − y^j ∂²G^i/∂x^j∂y^k + 2 G^j ∂²G^i/∂y^j∂y^k − ∂G^i/∂y^j ∂G^j/∂y^k
//! χ_i   = −(1/6) { 2 R^m_{i·m} + R^m_{m·i} }
//! H_ij  = ½ { χ_{i·j} + χ_{j·i} }
//! ```
//!
//! Each step differentiates a jet and so consumes orders: `R` needs an `F`
//! jet of order 4, `χ` order 5 and `H` order 6.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::catalog::{eval_f_jet, Profile};
use crate::error::{Error, Result};
use crate::jet::{Jet, JetN};

/// `F` order needed for the Riemann curvature.
pub const RIEMANN_ORDER: usize = 4;
/// `F` order needed for `χ`.
pub const CHI_ORDER: usize = 5;
/// `F` order needed for `H`.
pub const H_ORDER: usize = 6;

/// Condition number of `g` above which a warning is recorded.
pub const CONDITION_WARN: f64 = 1e8;

fn y_var(n: usize, k: usize) -> usize {
    n + k
}

fn dims(f_jet: &JetN) -> Result<usize> {
    if !f_jet.nvars().is_multiple_of(2) || f_jet.nvars() == 0 {
        return Err(Error::usage(format!(
            "F jet must have 2n variables, got {}",
            f_jet.nvars()
        )));
    }
    Ok(f_jet.nvars() / 2)
}

fn require_order(order: usize, needed: usize, what: &str) -> Result<()> {
    if order < needed {
        Err(Error::usage(format!(
            "{what} needs an F jet of order >= {needed}, got {order}"
        )))
    } else {
        Ok(())
    }
}

/// Jets of `g_ij` (row-major), order `F.order − 2`.
fn metric_jets(f_jet: &JetN) -> Result<Vec<JetN>> {
    let n = dims(f_jet)?;
    let f2 = f_jet.square();
    let mut g = Vec::with_capacity(n * n);
    for i in 0..n {
        let fi = f2.derivative(y_var(n, i))?;
        for j in 0..n {
            g.push(fi.derivative(y_var(n, j))? * 0.5);
        }
    }
    Ok(g)
}

/// Condition number of a symmetric positive definite matrix.
fn spd_condition(g: &DMatrix<f64>) -> Result<f64> {
    let eig = SymmetricEigen::new(g.clone());
    let min = eig.eigenvalues.min();
    let max = eig.eigenvalues.max();
    if !(min > 0.0) {
        return Err(Error::Degenerate(format!(
            "fundamental tensor is not positive definite, eigenvalues {:?}",
            eig.eigenvalues.as_slice()
        )));
    }
    Ok(max / min)
}

/// `g_ij = ½[F²]_{y^i y^j}` at the expansion point.
pub fn fundamental_tensor(f_jet: &JetN) -> Result<DMatrix<f64>> {
    require_order(f_jet.order(), 2, "fundamental_tensor")?;
    let n = dims(f_jet)?;
    if !(f_jet.value() > 0.0) {
        return Err(Error::Degenerate(format!(
            "F = {:e} is not positive",
            f_jet.value()
        )));
    }
    let g = metric_jets(f_jet)?;
    let g = DMatrix::from_fn(n, n, |i, j| g[i * n + j].value());
    spd_condition(&g)?;
    Ok(g)
}

/// Solve `A X = B` for jet-valued `A` (n×n, row-major) by Gauss–Jordan
/// elimination, pivoting on the constant terms.
fn solve_jets(mut a: Vec<JetN>, mut b: Vec<JetN>, n: usize) -> Result<Vec<JetN>> {
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                a[i * n + col]
                    .value()
                    .abs()
                    .total_cmp(&a[j * n + col].value().abs())
            })
            .expect("non-empty range");
        if a[pivot * n + col].value() == 0.0 {
            return Err(Error::Degenerate("singular fundamental tensor".into()));
        }
        if pivot != col {
            for k in 0..n {
                a.swap(pivot * n + k, col * n + k);
            }
            b.swap(pivot, col);
        }
        let inv = a[col * n + col].recip()?;
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = &a[row * n + col] * &inv;
            for k in col..n {
                let t = &factor * &a[col * n + k];
                a[row * n + k] = &a[row * n + k] - &t;
            }
            let t = &factor * &b[col];
            b[row] = &b[row] - &t;
        }
    }
    (0..n).map(|i| b[i].checked_div(&a[i * n + i])).collect()
}

/// Spray coefficients `G^i` as jets of order `F.order − 2`.
///
/// `y` is the expansion point of the direction variables of `f_jet`.
pub fn spray_coefficients(f_jet: &JetN, y: &[f64]) -> Result<Vec<JetN>> {
    require_order(f_jet.order(), 3, "spray_coefficients")?;
    let n = dims(f_jet)?;
    if y.len() != n {
        return Err(Error::usage(format!(
            "direction has length {}, F jet has n = {n}",
            y.len()
        )));
    }
    let f2 = f_jet.square();
    let g = metric_jets(f_jet)?;
    let point: Vec<f64> = std::iter::repeat_n(0.0, n)
        .chain(y.iter().copied())
        .collect();
    let ys: Vec<JetN> = (0..n)
        .map(|k| Jet::variable(&point, y_var(n, k), f_jet.order()))
        .collect::<Result<_>>()?;

    let mut rhs = Vec::with_capacity(n);
    for l in 0..n {
        let f2_yl = f2.derivative(y_var(n, l))?;
        let mut acc = -f2.derivative(l)?;
        for (m, ym) in ys.iter().enumerate() {
            acc = &acc + &(&f2_yl.derivative(m)? * ym);
        }
        rhs.push(acc * 0.25);
    }
    solve_jets(g, rhs, n)
}

/// Spray, metric and curvature of `F` at one point `(x, y)`.
#[derive(Debug, Clone)]
pub struct SprayData {
    pub n: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Truncation order of the `F` jet the data was built from.
    pub order_budget: usize,
    pub f: JetN,
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    /// `G^i`, jets of order `order_budget − 2`.
    pub spray: Vec<JetN>,
    /// `R^i_k` row-major, jets of order `order_budget − 4`; empty when the
    /// budget is below [`RIEMANN_ORDER`].
    pub riemann: Vec<JetN>,
    pub condition: f64,
    pub warnings: Vec<String>,
}

impl SprayData {
    /// Build from an `F` jet expanded at `(x, y)`.
    pub fn new(f_jet: &JetN, x: &[f64], y: &[f64]) -> Result<Self> {
        let n = dims(f_jet)?;
        if x.len() != n {
            return Err(Error::usage(format!(
                "point has length {}, F jet has n = {n}",
                x.len()
            )));
        }
        let g = fundamental_tensor(f_jet)?;
        let condition = spd_condition(&g)?;
        let mut warnings = Vec::new();
        if condition > CONDITION_WARN {
            warnings.push(format!(
                "fundamental tensor condition number {condition:e} exceeds {CONDITION_WARN:e}"
            ));
        }
        let g_inv = g
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Degenerate("singular fundamental tensor".into()))?;
        let spray = spray_coefficients(f_jet, y)?;
        let riemann = if f_jet.order() >= RIEMANN_ORDER {
            riemann_jets(&spray, y)?
        } else {
            Vec::new()
        };
        Ok(SprayData {
            n,
            x: x.to_vec(),
            y: y.to_vec(),
            order_budget: f_jet.order(),
            f: f_jet.clone(),
            g,
            g_inv,
            spray,
            riemann,
            condition,
            warnings,
        })
    }

    /// Evaluate `F` from a profile and build the spray data in one go.
    pub fn from_profile<P: Profile + ?Sized>(
        profile: &P,
        x: &[f64],
        y: &[f64],
        order: usize,
    ) -> Result<Self> {
        let f = eval_f_jet(profile, x, y, order)?;
        SprayData::new(&f, x, y)
    }

    pub fn f_value(&self) -> f64 {
        self.f.value()
    }

    fn riemann_jet(&self, i: usize, k: usize) -> &JetN {
        &self.riemann[i * self.n + k]
    }
}

/// `R^i_k` as jets of order `G.order − 2`.
fn riemann_jets(spray: &[JetN], y: &[f64]) -> Result<Vec<JetN>> {
    let n = spray.len();
    let order = spray[0].order();
    let point: Vec<f64> = std::iter::repeat_n(0.0, n)
        .chain(y.iter().copied())
        .collect();
    let ys: Vec<JetN> = (0..n)
        .map(|k| Jet::variable(&point, y_var(n, k), order))
        .collect::<Result<_>>()?;

    // first y-derivatives of every G^j, reused in the quadratic term
    let mut g_y = Vec::with_capacity(n * n);
    for gj in spray {
        for k in 0..n {
            g_y.push(gj.derivative(y_var(n, k))?);
        }
    }

    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        let gi = &spray[i];
        for k in 0..n {
            let gi_yk = &g_y[i * n + k];
            let mut acc = gi.derivative(k)? * 2.0;
            for j in 0..n {
                acc = &acc - &(&ys[j] * &gi_yk.derivative(j)?);
                acc = &acc + &(&(&spray[j] * &gi_yk.derivative(y_var(n, j))?) * 2.0);
                acc = &acc - &(&g_y[i * n + j] * &g_y[j * n + k]);
            }
            out.push(acc);
        }
    }
    Ok(out)
}

fn require_riemann(spray: &SprayData, needed: usize, what: &str) -> Result<()> {
    require_order(spray.order_budget, needed, what)
}

/// The Berwald Riemann curvature `R^i_k` at the expansion point.
pub fn riemann_curvature(spray: &SprayData) -> Result<DMatrix<f64>> {
    require_riemann(spray, RIEMANN_ORDER, "riemann_curvature")?;
    let n = spray.n;
    Ok(DMatrix::from_fn(n, n, |i, k| {
        spray.riemann_jet(i, k).value()
    }))
}

/// `χ_i` as jets of order `order_budget − 5`.
pub fn chi_jets(spray: &SprayData) -> Result<Vec<JetN>> {
    require_riemann(spray, CHI_ORDER, "chi_from_riemann")?;
    let n = spray.n;
    let mut trace_y = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = spray.riemann_jet(0, 0).derivative(y_var(n, i))?;
        for m in 1..n {
            acc = &acc + &spray.riemann_jet(m, m).derivative(y_var(n, i))?;
        }
        trace_y.push(acc);
    }
    (0..n)
        .map(|i| {
            let mut acc = spray.riemann_jet(0, i).derivative(y_var(n, 0))?;
            for m in 1..n {
                acc = &acc + &spray.riemann_jet(m, i).derivative(y_var(n, m))?;
            }
            Ok((&(acc * 2.0) + &trace_y[i]) * (-1.0 / 6.0))
        })
        .collect()
}

/// `χ_i = −(1/6){2R^m_{i·m} + R^m_{m·i}}` at the expansion point.
pub fn chi_from_riemann(spray: &SprayData) -> Result<DVector<f64>> {
    let chi = chi_jets(spray)?;
    Ok(DVector::from_iterator(
        spray.n,
        chi.iter().map(|c| c.value()),
    ))
}

/// `H_ij = ½{χ_{i·j} + χ_{j·i}}` at the expansion point.
pub fn h_from_chi(spray: &SprayData) -> Result<DMatrix<f64>> {
    require_riemann(spray, H_ORDER, "h_from_chi")?;
    let n = spray.n;
    let chi = chi_jets(spray)?;
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            d[(i, j)] = chi[i].derivative(y_var(n, j))?.value();
        }
    }
    Ok((&d + d.transpose()) * 0.5)
}

/// Residual of the constant-flag-curvature identity
/// `R^i_k = K{F² δ^i_k − g_kl y^l y^i}`.
#[derive(Debug, Clone)]
pub struct CfcResidual {
    pub matrix: DMatrix<f64>,
    pub max_abs: f64,
    /// `max_abs / (|K| F²)`, or `max_abs / F²` when `K = 0`.
    pub normalized: f64,
}

pub fn cfc_tensor_check(spray: &SprayData, k: f64) -> Result<CfcResidual> {
    let r = riemann_curvature(spray)?;
    let n = spray.n;
    let y = DVector::from_column_slice(&spray.y);
    let f2 = spray.f_value().powi(2);
    let gy = &spray.g * &y;
    let model = (DMatrix::identity(n, n) * f2 - &y * gy.transpose()) * k;
    let matrix = r - model;
    let max_abs = matrix.amax();
    let scale = if k != 0.0 { k.abs() * f2 } else { f2 };
    Ok(CfcResidual {
        normalized: max_abs / scale,
        max_abs,
        matrix,
    })
}
