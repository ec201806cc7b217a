//! Truncated multivariate Taylor polynomials ("jets").
//!
//! A [`Jet`] of order `N` in `m` variables stores the Taylor expansion of a
//! function about some point, truncated at total degree `N`. Coefficients are
//! the *raw* Taylor coefficients: the entry for multi-index `α` multiplies
//! `Δ^α = Π (Δx_k)^{α_k}`, so the mixed partial `∂^α f` equals `α! · c_α`.
//! [`Jet::partial`] performs that conversion; every other operation works on
//! raw coefficients, which makes multiplication a plain truncated convolution.
//!
//! Monomials are stored in graded order (all degree-0 terms, then degree 1,
//! ...), so a jet of order `N` truncated to `K < N` is a prefix of the same
//! coefficient vector. Binary operations on jets of different order produce
//! a jet of the smaller order, which is exactly the information both operands
//! carry.
//!
//! Two- and `m`-variable jets share one implementation: [`Jet2`] is the
//! bivariate `(r, s)` jet used for profile functions and [`JetN`] the jet in
//! the `2n` coordinates `(x, y)` used by the curvature oracle.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::{Arc, OnceLock, RwLock};

use num_complex::{Complex, Complex64};
use twofloat::TwoFloat;

use crate::error::{Error, Result};

/// Default truncation order for bivariate profile jets.
pub const DEFAULT_JET2_ORDER: usize = 7;
/// Default truncation order for oracle jets.
pub const DEFAULT_JETN_ORDER: usize = 4;

/// Double-double real: about 32 significant digits.
///
/// Curvature formulas subtract terms that grow like `(1 − r²)^-3` near the
/// boundary of the unit ball, so plain `f64` loses up to eight digits there.
pub type Dd = TwoFloat;
/// Complex numbers over [`Dd`].
pub type DdComplex = Complex<TwoFloat>;

/// Coefficient field of a jet.
pub trait Scalar:
    Copy
    + fmt::Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(v: f64) -> Self;
    fn magnitude(self) -> f64;
    /// Multiplicative inverse.
    fn inv(self) -> Self {
        Self::one() / self
    }
    /// Principal square root; fails on the branch cut.
    fn principal_sqrt(self) -> Result<Self>;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(v: f64) -> Self {
        v
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
    fn principal_sqrt(self) -> Result<Self> {
        if self > 0.0 {
            Ok(self.sqrt())
        } else {
            Err(Error::domain(format!(
                "square root of non-positive value {self:e}"
            )))
        }
    }
}

impl Scalar for TwoFloat {
    fn zero() -> Self {
        TwoFloat::from(0.0)
    }
    fn one() -> Self {
        TwoFloat::from(1.0)
    }
    fn from_f64(v: f64) -> Self {
        TwoFloat::from(v)
    }
    fn magnitude(self) -> f64 {
        f64::from(self).abs()
    }
    fn inv(self) -> Self {
        // the crate's division is only accurate to about 1e-17; one Newton
        // step restores full double-double precision
        let one = TwoFloat::from(1.0);
        let b = one / self;
        b + b * (one - self * b)
    }
    fn principal_sqrt(self) -> Result<Self> {
        if self > TwoFloat::from(0.0) {
            Ok(self.sqrt())
        } else {
            Err(Error::domain(format!(
                "square root of non-positive value {:e}",
                f64::from(self)
            )))
        }
    }
}

impl Scalar for DdComplex {
    fn zero() -> Self {
        Complex::new(Dd::zero(), Dd::zero())
    }
    fn one() -> Self {
        Complex::new(Dd::one(), Dd::zero())
    }
    fn from_f64(v: f64) -> Self {
        Complex::new(Dd::from_f64(v), Dd::zero())
    }
    fn magnitude(self) -> f64 {
        f64::from(self.re).hypot(f64::from(self.im))
    }
    fn inv(self) -> Self {
        let scale = (self.re * self.re + self.im * self.im).inv();
        Complex::new(self.re * scale, -self.im * scale)
    }
    fn principal_sqrt(self) -> Result<Self> {
        let zero = Dd::zero();
        if self.im == zero && self.re <= zero {
            return Err(Error::domain(format!(
                "complex square root on the branch cut at {}",
                f64::from(self.re)
            )));
        }
        let m = (self.re * self.re + self.im * self.im).sqrt();
        let half = Dd::from_f64(0.5);
        // take the root of the larger component first to avoid cancellation
        if self.re >= zero {
            let t = ((m + self.re) * half).sqrt();
            Ok(Complex::new(t, self.im * (t + t).inv()))
        } else {
            let t = ((m - self.re) * half).sqrt();
            let t = if self.im < zero { -t } else { t };
            Ok(Complex::new(self.im * (t + t).inv(), t))
        }
    }
}

/// Real coefficient fields, paired with their complex extension.
pub trait Real: Scalar + PartialOrd {
    type Complex: Scalar;
    fn to_f64(self) -> f64;
    fn complex(re: Self, im: Self) -> Self::Complex;
    fn real_part(c: Self::Complex) -> Self;
}

impl Real for f64 {
    type Complex = Complex64;
    fn to_f64(self) -> f64 {
        self
    }
    fn complex(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }
    fn real_part(c: Complex64) -> f64 {
        c.re
    }
}

impl Real for TwoFloat {
    type Complex = DdComplex;
    fn to_f64(self) -> f64 {
        f64::from(self)
    }
    fn complex(re: Dd, im: Dd) -> DdComplex {
        Complex::new(re, im)
    }
    fn real_part(c: DdComplex) -> Dd {
        c.re
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_f64(v: f64) -> Self {
        Complex64::new(v, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
    fn principal_sqrt(self) -> Result<Self> {
        if self.im == 0.0 && self.re <= 0.0 {
            Err(Error::domain(format!(
                "complex square root on the branch cut at {self}"
            )))
        } else {
            Ok(self.sqrt())
        }
    }
}

/// Monomial bookkeeping shared by all jets with the same `(nvars, order)`.
pub struct Layout {
    nvars: usize,
    order: usize,
    exps: Vec<u8>,
    /// `degree_end[d]` = number of monomials with total degree ≤ d.
    degree_end: Vec<usize>,
    index: HashMap<Vec<u8>, usize>,
    products: Vec<[u32; 3]>,
    /// `raise[k][i]` = index of `α_i + e_k`, or `NONE` at top degree.
    raise: Vec<Vec<u32>>,
    factorial: Vec<f64>,
}

const NONE: u32 = u32::MAX;

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Number of coefficients of a jet with the given shape.
pub fn coefficient_count(nvars: usize, order: usize) -> usize {
    binomial(nvars + order, order)
}

fn push_monomials(nvars: usize, degree: usize, prefix: &mut Vec<u8>, out: &mut Vec<u8>) {
    if prefix.len() + 1 == nvars {
        let used: usize = prefix.iter().map(|&e| e as usize).sum();
        out.extend_from_slice(prefix);
        out.push((degree - used) as u8);
        return;
    }
    let used: usize = prefix.iter().map(|&e| e as usize).sum();
    for e in (0..=degree - used).rev() {
        prefix.push(e as u8);
        push_monomials(nvars, degree, prefix, out);
        prefix.pop();
    }
}

impl Layout {
    fn build(nvars: usize, order: usize) -> Layout {
        assert!(nvars >= 1, "jets need at least one variable");
        let mut exps = Vec::new();
        let mut degree_end = Vec::with_capacity(order + 1);
        for d in 0..=order {
            push_monomials(nvars, d, &mut Vec::with_capacity(nvars), &mut exps);
            degree_end.push(exps.len() / nvars);
        }
        let len = exps.len() / nvars;
        debug_assert_eq!(len, coefficient_count(nvars, order));

        let index: HashMap<Vec<u8>, usize> = (0..len)
            .map(|i| (exps[i * nvars..(i + 1) * nvars].to_vec(), i))
            .collect();
        let degree = |i: usize| -> usize {
            exps[i * nvars..(i + 1) * nvars]
                .iter()
                .map(|&e| e as usize)
                .sum()
        };

        let mut products = Vec::new();
        let mut scratch = vec![0u8; nvars];
        for i in 0..len {
            let di = degree(i);
            for j in 0..degree_end[order - di] {
                for k in 0..nvars {
                    scratch[k] = exps[i * nvars + k] + exps[j * nvars + k];
                }
                let target = index[&scratch];
                products.push([i as u32, j as u32, target as u32]);
            }
        }

        let raise = (0..nvars)
            .map(|k| {
                (0..len)
                    .map(|i| {
                        if degree(i) == order {
                            NONE
                        } else {
                            scratch.copy_from_slice(&exps[i * nvars..(i + 1) * nvars]);
                            scratch[k] += 1;
                            index[&scratch] as u32
                        }
                    })
                    .collect()
            })
            .collect();

        let factorial = (0..len)
            .map(|i| {
                exps[i * nvars..(i + 1) * nvars]
                    .iter()
                    .map(|&e| (1..=e as u32).map(f64::from).product::<f64>())
                    .product()
            })
            .collect();

        Layout {
            nvars,
            order,
            exps,
            degree_end,
            index,
            products,
            raise,
            factorial,
        }
    }

    /// Shared layout for `(nvars, order)`, built once per process.
    pub fn get(nvars: usize, order: usize) -> Arc<Layout> {
        type Cache = RwLock<HashMap<(usize, usize), Arc<Layout>>>;
        static CACHE: OnceLock<Cache> = OnceLock::new();
        let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
        if let Some(l) = cache
            .read()
            .expect("layout cache poisoned")
            .get(&(nvars, order))
        {
            return Arc::clone(l);
        }
        let mut w = cache.write().expect("layout cache poisoned");
        Arc::clone(
            w.entry((nvars, order))
                .or_insert_with(|| Arc::new(Layout::build(nvars, order))),
        )
    }

    pub fn len(&self) -> usize {
        self.degree_end[self.order]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn exponents(&self, i: usize) -> &[u8] {
        &self.exps[i * self.nvars..(i + 1) * self.nvars]
    }

    pub fn index_of(&self, exps: &[u8]) -> Option<usize> {
        self.index.get(exps).copied()
    }
}

/// Truncated Taylor polynomial with coefficients in `T`.
#[derive(Clone)]
pub struct Jet<T: Scalar = f64> {
    layout: Arc<Layout>,
    coeffs: Vec<T>,
}

/// Bivariate `(r, s)` jet of a profile function.
pub type Jet2 = Jet<f64>;
/// Complex bivariate jet, used for profiles defined through complex arithmetic.
pub type ComplexJet2 = Jet<Complex64>;
/// Jet in the `2n` coordinates `(x¹..xⁿ, y¹..yⁿ)`.
pub type JetN = Jet<f64>;

impl<T: Scalar> fmt::Debug for Jet<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("nvars", &self.layout.nvars)
            .field("order", &self.layout.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl<T: Scalar> PartialEq for Jet<T> {
    fn eq(&self, other: &Self) -> bool {
        self.layout.nvars == other.layout.nvars
            && self.layout.order == other.layout.order
            && self.coeffs == other.coeffs
    }
}

impl<T: Scalar> Jet<T> {
    pub fn zero(nvars: usize, order: usize) -> Self {
        let layout = Layout::get(nvars, order);
        let coeffs = vec![T::zero(); layout.len()];
        Jet { layout, coeffs }
    }

    pub fn constant(nvars: usize, order: usize, value: T) -> Self {
        let mut j = Self::zero(nvars, order);
        j.coeffs[0] = value;
        j
    }

    /// Jet of the coordinate function `x_k` at `point`.
    pub fn variable(point: &[T], k: usize, order: usize) -> Result<Self> {
        if order < 1 {
            return Err(Error::usage("seeding a variable requires order >= 1"));
        }
        if k >= point.len() {
            return Err(Error::usage(format!(
                "variable index {k} out of range for {} variables",
                point.len()
            )));
        }
        let mut j = Self::constant(point.len(), order, point[k]);
        // degree-1 monomials follow the constant in variable order
        j.coeffs[1 + k] = T::one();
        Ok(j)
    }

    /// All coordinate jets at `point`.
    pub fn variables(point: &[T], order: usize) -> Result<Vec<Self>> {
        (0..point.len())
            .map(|k| Self::variable(point, k, order))
            .collect()
    }

    pub fn from_coeffs(nvars: usize, order: usize, coeffs: Vec<T>) -> Result<Self> {
        let layout = Layout::get(nvars, order);
        if coeffs.len() != layout.len() {
            return Err(Error::usage(format!(
                "expected {} coefficients for {nvars} variables at order {order}, got {}",
                layout.len(),
                coeffs.len()
            )));
        }
        Ok(Jet { layout, coeffs })
    }

    pub fn nvars(&self) -> usize {
        self.layout.nvars
    }

    pub fn order(&self) -> usize {
        self.layout.order
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// Constant term, i.e. the function value at the expansion point.
    pub fn value(&self) -> T {
        self.coeffs[0]
    }

    /// Raw Taylor coefficient of the monomial with exponents `exps`.
    pub fn coeff(&self, exps: &[u8]) -> Result<T> {
        self.check_multi_index(exps.iter().map(|&e| e as usize))?;
        Ok(self.coeffs[self.layout.index[exps]])
    }

    /// Mixed partial derivative `∂^α f` at the expansion point (`α! · c_α`).
    pub fn partial(&self, multi_index: &[usize]) -> Result<T> {
        self.check_multi_index(multi_index.iter().copied())?;
        let exps: Vec<u8> = multi_index.iter().map(|&e| e as u8).collect();
        let i = self.layout.index[&exps];
        Ok(self.coeffs[i] * T::from_f64(self.layout.factorial[i]))
    }

    fn check_multi_index(&self, idx: impl ExactSizeIterator<Item = usize>) -> Result<()> {
        if idx.len() != self.layout.nvars {
            return Err(Error::usage(format!(
                "multi-index has {} entries, jet has {} variables",
                idx.len(),
                self.layout.nvars
            )));
        }
        let degree: usize = idx.sum();
        if degree > self.layout.order {
            return Err(Error::usage(format!(
                "multi-index of degree {degree} exceeds truncation order {}",
                self.layout.order
            )));
        }
        Ok(())
    }

    /// Drop all terms above `order`.
    pub fn truncate(&self, order: usize) -> Self {
        if order >= self.layout.order {
            return self.clone();
        }
        let layout = Layout::get(self.layout.nvars, order);
        let coeffs = self.coeffs[..layout.len()].to_vec();
        Jet { layout, coeffs }
    }

    /// Jet of `∂f/∂x_k`; the order drops by one.
    pub fn derivative(&self, k: usize) -> Result<Self> {
        if k >= self.layout.nvars {
            return Err(Error::usage(format!(
                "derivative index {k} out of range for {} variables",
                self.layout.nvars
            )));
        }
        if self.layout.order == 0 {
            return Err(Error::usage("cannot differentiate an order-0 jet"));
        }
        let layout = Layout::get(self.layout.nvars, self.layout.order - 1);
        let raise = &self.layout.raise[k];
        let coeffs = (0..layout.len())
            .map(|i| {
                let mult = f64::from(self.layout.exponents(i)[k]) + 1.0;
                self.coeffs[raise[i] as usize] * T::from_f64(mult)
            })
            .collect();
        Ok(Jet { layout, coeffs })
    }

    /// Mixed derivative over a list of variable indices, applied left to right.
    pub fn derivatives(&self, vars: &[usize]) -> Result<Self> {
        vars.iter()
            .try_fold(self.clone(), |acc, &k| acc.derivative(k))
    }

    pub fn scale(&self, factor: T) -> Self {
        Jet {
            layout: Arc::clone(&self.layout),
            coeffs: self.coeffs.iter().map(|&c| c * factor).collect(),
        }
    }

    pub fn add_scalar(&self, v: T) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += v;
        out
    }

    fn assert_compatible(&self, other: &Self) {
        assert_eq!(
            self.layout.nvars, other.layout.nvars,
            "jets over different variable counts"
        );
    }

    fn lower_layout(&self, other: &Self) -> Arc<Layout> {
        self.assert_compatible(other);
        if self.layout.order <= other.layout.order {
            Arc::clone(&self.layout)
        } else {
            Arc::clone(&other.layout)
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        let layout = self.lower_layout(other);
        let coeffs = (0..layout.len())
            .map(|i| f(self.coeffs[i], other.coeffs[i]))
            .collect();
        Jet { layout, coeffs }
    }

    fn product(&self, other: &Self) -> Self {
        let layout = self.lower_layout(other);
        let mut coeffs = vec![T::zero(); layout.len()];
        for &[i, j, k] in &layout.products {
            coeffs[k as usize] += self.coeffs[i as usize] * other.coeffs[j as usize];
        }
        Jet { layout, coeffs }
    }

    /// Evaluate the univariate series `Σ c_k (f - f₀)^k` at this jet.
    ///
    /// `series[k]` is the k-th raw Taylor coefficient of the outer function at
    /// the constant term of `self`. Terms past the jet order are ignored.
    pub fn compose_series(&self, series: &[T]) -> Self {
        let mut h = self.clone();
        h.coeffs[0] = T::zero();
        let top = series.len().min(self.layout.order + 1);
        let mut acc = Jet::constant(self.layout.nvars, self.layout.order, series[top - 1]);
        for &c in series[..top - 1].iter().rev() {
            acc = acc.product(&h);
            acc.coeffs[0] += c;
        }
        acc
    }

    /// `1 / f`.
    pub fn recip(&self) -> Result<Self> {
        let a0 = self.value();
        if a0.magnitude() == 0.0 {
            return Err(Error::Singularity(
                "division by a jet with zero constant term".into(),
            ));
        }
        let inv = a0.inv();
        let mut series = Vec::with_capacity(self.layout.order + 1);
        let mut c = inv;
        for _ in 0..=self.layout.order {
            series.push(c);
            c = -c * inv;
        }
        Ok(self.compose_series(&series))
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self> {
        Ok(self.product(&other.recip()?))
    }

    /// Principal square root.
    pub fn sqrt(&self) -> Result<Self> {
        let a0 = self.value();
        let root = a0.principal_sqrt()?;
        let inv = a0.inv();
        let mut series = Vec::with_capacity(self.layout.order + 1);
        series.push(root);
        // c_k = c_{k-1} (1/2 - (k-1)) / (k a0)
        for k in 1..=self.layout.order {
            let prev = series[k - 1];
            let factor = T::from_f64(0.5 - (k as f64 - 1.0)) * T::from_f64(k as f64).inv();
            series.push(prev * factor * inv);
        }
        Ok(self.compose_series(&series))
    }

    pub fn powi(&self, n: i32) -> Result<Self> {
        if n < 0 {
            return self.recip()?.powi(-n);
        }
        let mut base = self.clone();
        let mut acc = Jet::constant(self.layout.nvars, self.layout.order, T::one());
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.product(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.product(&base);
            }
        }
        Ok(acc)
    }

    pub fn square(&self) -> Self {
        self.product(self)
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|c| c.magnitude())
            .fold(0.0, f64::max)
    }
}

impl<T: Scalar> Jet<T> {
    /// Apply `f` to every coefficient.
    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Jet<U> {
        Jet {
            layout: Arc::clone(&self.layout),
            coeffs: self.coeffs.iter().map(|&c| f(c)).collect(),
        }
    }
}

impl<T: Real> Jet<T> {
    /// Seed the bivariate jets of `r` and `s` at `(r, s)`.
    pub fn seed_rs(r: f64, s: f64, order: usize) -> Result<(Self, Self)> {
        let p = [T::from_f64(r), T::from_f64(s)];
        Ok((Jet::variable(&p, 0, order)?, Jet::variable(&p, 1, order)?))
    }

    /// Lift a real jet to complex coefficients.
    pub fn to_complex(&self) -> Jet<T::Complex> {
        self.map(|c| T::complex(c, T::zero()))
    }

    /// Round every coefficient to `f64`.
    pub fn to_f64(&self) -> Jet<f64> {
        self.map(T::to_f64)
    }

    /// Real part of a complex jet, taken coefficientwise.
    pub fn real_part(c: &Jet<T::Complex>) -> Self {
        c.map(T::real_part)
    }

    /// Compose a bivariate jet with displacement jets in another variable set.
    ///
    /// `self` is the expansion of `φ(r₀ + a, s₀ + b)` in `(a, b)`; `da` and `db`
    /// are jets of the displacements and must have zero constant term. The
    /// result is the jet of `φ` along those displacements, at the smaller of
    /// the two orders.
    pub fn compose_bivariate(&self, da: &Self, db: &Self) -> Result<Self> {
        if self.nvars() != 2 {
            return Err(Error::usage(
                "compose_bivariate needs a two-variable outer jet",
            ));
        }
        da.assert_compatible(db);
        if da.value().magnitude() != 0.0 || db.value().magnitude() != 0.0 {
            return Err(Error::usage(
                "displacement jets must have zero constant term",
            ));
        }
        let order = self.order().min(da.order()).min(db.order());
        let da = da.truncate(order);
        let db = db.truncate(order);
        let nv = da.nvars();
        let mut db_pows = vec![Jet::constant(nv, order, T::one())];
        for j in 1..=order {
            let next = db_pows[j - 1].product(&db);
            db_pows.push(next);
        }
        // Horner in a with inner sums over powers of b
        let inner = |i: usize| -> Self {
            let mut acc = Jet::zero(nv, order);
            for (j, p) in db_pows.iter().enumerate().take(order - i + 1) {
                let mut e = [0u8; 2];
                e[0] = i as u8;
                e[1] = j as u8;
                let c = self.coeffs[self.layout.index[&e[..]]];
                if c.magnitude() != 0.0 {
                    acc = &acc + &p.scale(c);
                }
            }
            acc
        };
        let mut acc = inner(order);
        for i in (0..order).rev() {
            acc = &acc.product(&da) + &inner(i);
        }
        Ok(acc)
    }
}

impl Jet<Complex64> {
    /// Real part, taken coefficientwise.
    pub fn re(&self) -> Jet<f64> {
        self.map(|c| c.re)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl<'a, T: Scalar> $tr<&'a Jet<T>> for &'a Jet<T> {
            type Output = Jet<T>;
            fn $m(self, rhs: &'a Jet<T>) -> Jet<T> {
                let f: fn(&Jet<T>, &Jet<T>) -> Jet<T> = $body;
                f(self, rhs)
            }
        }
        impl<T: Scalar> $tr<Jet<T>> for Jet<T> {
            type Output = Jet<T>;
            fn $m(self, rhs: Jet<T>) -> Jet<T> {
                (&self).$m(&rhs)
            }
        }
        impl<'a, T: Scalar> $tr<&'a Jet<T>> for Jet<T> {
            type Output = Jet<T>;
            fn $m(self, rhs: &'a Jet<T>) -> Jet<T> {
                (&self).$m(rhs)
            }
        }
        impl<'a, T: Scalar> $tr<Jet<T>> for &'a Jet<T> {
            type Output = Jet<T>;
            fn $m(self, rhs: Jet<T>) -> Jet<T> {
                self.$m(&rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| a.zip_with(b, |x, y| x + y));
binop!(Sub, sub, |a, b| a.zip_with(b, |x, y| x - y));
binop!(Mul, mul, |a, b| a.product(b));

macro_rules! scalar_op {
    ($tr:ident, $m:ident, $body:expr) => {
        impl<'a, T: Scalar> $tr<f64> for &'a Jet<T> {
            type Output = Jet<T>;
            fn $m(self, rhs: f64) -> Jet<T> {
                let f: fn(&Jet<T>, T) -> Jet<T> = $body;
                f(self, T::from_f64(rhs))
            }
        }
        impl<T: Scalar> $tr<f64> for Jet<T> {
            type Output = Jet<T>;
            fn $m(self, rhs: f64) -> Jet<T> {
                (&self).$m(rhs)
            }
        }
    };
}

scalar_op!(Add, add, |a, v| a.add_scalar(v));
scalar_op!(Sub, sub, |a, v| a.add_scalar(-v));
scalar_op!(Mul, mul, |a, v| a.scale(v));

impl<T: Scalar> Neg for &Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Jet<T> {
        self.scale(-T::one())
    }
}

impl<T: Scalar> Neg for Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Jet<T> {
        -&self
    }
}
