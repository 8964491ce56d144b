//! Truncated Laurent series over `Complex64` and spectral sampling on the unit circle.
//!
//! A [`TruncatedSeries`] of order `N` stores the coefficients of `z^k` for
//! `-N <= k <= N`. Every operation re-truncates its result to that window.
//! Series that are expansions around `0` (finitely many negative powers) or
//! around `infinity` (finitely many positive powers) are treated exactly within
//! the window; see [`Expansion`].

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Relative threshold on discarded mass above which a product is flagged lossy.
pub const LOSS_THRESHOLD: f64 = 1e-13;

/// Point around which a one-sided series is expanded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expansion {
    /// Finitely many negative powers, tail in positive powers.
    Zero,
    /// Finitely many positive powers, tail in negative powers.
    Infinity,
}

/// Exponent subsets used by [`TruncatedSeries::project`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Pos,
    Neg,
    Zero,
    Geq0,
    Leq0,
}

impl Part {
    fn keeps(self, k: i64) -> bool {
        match self {
            Part::Pos => k > 0,
            Part::Neg => k < 0,
            Part::Zero => k == 0,
            Part::Geq0 => k >= 0,
            Part::Leq0 => k <= 0,
        }
    }
}

#[derive(Clone, PartialEq)]
pub struct TruncatedSeries {
    order: usize,
    coeffs: Vec<C64>,
    lossy: bool,
}

impl fmt::Debug for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self.terms().map(|(k, c)| format!("({:.6e}{:+.6e}i)z^{}", c.re, c.im, k)).collect();
        write!(f, "TruncatedSeries[N={}] {}", self.order, terms.join(" + "))
    }
}

impl TruncatedSeries {
    pub fn zeros(order: usize) -> Self {
        Self { order, coeffs: vec![ZERO; 2 * order + 1], lossy: false }
    }

    pub fn constant(order: usize, c: C64) -> Self {
        Self::monomial(order, 0, c)
    }

    pub fn monomial(order: usize, k: i64, c: C64) -> Self {
        let mut s = Self::zeros(order);
        s.set(k, c);
        s
    }

    /// The identity series `z`.
    pub fn identity(order: usize) -> Self {
        Self::monomial(order, 1, ONE)
    }

    /// Builds a series from `(exponent, coefficient)` pairs; exponents outside
    /// the window are dropped, repeated exponents accumulate.
    pub fn from_terms(order: usize, terms: &[(i64, C64)]) -> Self {
        let mut s = Self::zeros(order);
        for &(k, c) in terms {
            if s.in_window(k) {
                let i = s.idx(k);
                s.coeffs[i] += c;
            }
        }
        s
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn is_lossy(&self) -> bool {
        self.lossy
    }

    #[inline]
    pub fn in_window(&self, k: i64) -> bool {
        k.unsigned_abs() as usize <= self.order
    }

    #[inline]
    fn idx(&self, k: i64) -> usize {
        (k + self.order as i64) as usize
    }

    /// Coefficient of `z^k` (zero outside the window).
    #[inline]
    pub fn coeff(&self, k: i64) -> C64 {
        if self.in_window(k) {
            self.coeffs[self.idx(k)]
        } else {
            ZERO
        }
    }

    /// Sets the coefficient of `z^k`; silently ignored outside the window.
    pub fn set(&mut self, k: i64, c: C64) {
        if self.in_window(k) {
            let i = self.idx(k);
            self.coeffs[i] = c;
        }
    }

    /// Coefficients ordered from `z^-N` to `z^N`.
    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// Nonzero terms as `(exponent, coefficient)`.
    pub fn terms(&self) -> impl Iterator<Item = (i64, C64)> + '_ {
        let n = self.order as i64;
        self.coeffs.iter().enumerate().filter(|(_, c)| **c != ZERO).map(move |(i, c)| (i as i64 - n, *c))
    }

    /// Lowest exponent with a nonzero coefficient.
    pub fn n_min(&self) -> Option<i64> {
        self.terms().next().map(|(k, _)| k)
    }

    /// Highest exponent with a nonzero coefficient.
    pub fn n_max(&self) -> Option<i64> {
        let n = self.order as i64;
        self.coeffs.iter().rposition(|c| *c != ZERO).map(|i| i as i64 - n)
    }

    /// Sum of coefficient moduli.
    pub fn l1_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// Largest coefficient difference over the window.
    pub fn max_diff(&self, other: &Self) -> f64 {
        let n = self.order.max(other.order) as i64;
        (-n..=n).fold(0.0, |m, k| m.max((self.coeff(k) - other.coeff(k)).norm()))
    }

    /// Re-windows to a new ambient order (drops or zero-pads).
    pub fn with_order(&self, order: usize) -> Self {
        let mut s = Self::zeros(order);
        for (k, c) in self.terms() {
            s.set(k, c);
        }
        s.lossy = self.lossy;
        s
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { order: self.order, coeffs: self.coeffs.iter().map(|x| x * c).collect(), lossy: self.lossy }
    }

    /// Multiplies by `z^shift`.
    pub fn shift(&self, shift: i64) -> Self {
        let mut s = Self::zeros(self.order);
        for (k, c) in self.terms() {
            s.set(k + shift, c);
        }
        s.lossy = self.lossy;
        s
    }

    /// Cauchy product truncated to `[-N, N]`.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.order, other.order, "series orders differ");
        let n = self.order as i64;
        let mut out = Self::zeros(self.order);
        let mut discarded = 0.0;
        let a: Vec<(i64, C64)> = self.terms().collect();
        let b: Vec<(i64, C64)> = other.terms().collect();
        for &(i, ca) in &a {
            for &(j, cb) in &b {
                let k = i + j;
                if k.abs() <= n {
                    out.coeffs[(k + n) as usize] += ca * cb;
                } else {
                    discarded += (ca * cb).norm();
                }
            }
        }
        let scale = self.l1_norm() * other.l1_norm();
        out.lossy = self.lossy || other.lossy || discarded > LOSS_THRESHOLD * scale;
        out
    }

    /// Coefficient of `z^-1` in the product, i.e. `(1/2 pi i) \oint A B dz`,
    /// without forming the product.
    pub fn residue_of_product(&self, other: &Self) -> C64 {
        let n = self.order.min(other.order) as i64;
        let mut acc = ZERO;
        for k in -n..=n {
            let j = -1 - k;
            if j.abs() <= n {
                acc += self.coeff(k) * other.coeff(j);
            }
        }
        acc
    }

    /// Coefficient of `z^-1`.
    pub fn residue(&self) -> C64 {
        self.coeff(-1)
    }

    pub fn derivative(&self) -> Self {
        let mut s = Self::zeros(self.order);
        for (k, c) in self.terms() {
            s.set(k - 1, c * k as f64);
        }
        s.lossy = self.lossy;
        s
    }

    /// Termwise antiderivative; fails if a `z^-1` term is present.
    pub fn antiderivative(&self) -> Result<Self> {
        let mut s = Self::zeros(self.order);
        for (k, c) in self.terms() {
            if k == -1 {
                if c.norm() > 1e-12 * self.max_abs().max(1.0) {
                    return Err(Error::IncompatibleValuation("antiderivative of a series with a z^-1 term".into()));
                }
                continue;
            }
            s.set(k + 1, c / (k + 1) as f64);
        }
        s.lossy = self.lossy;
        Ok(s)
    }

    pub fn project(&self, part: Part) -> Self {
        let mut s = Self::zeros(self.order);
        for (k, c) in self.terms() {
            if part.keeps(k) {
                s.set(k, c);
            }
        }
        s.lossy = self.lossy;
        s
    }

    /// Evaluates the truncated sum at a point.
    pub fn eval(&self, z: C64) -> C64 {
        let n = self.order as i64;
        // positive part by Horner in z, negative part by Horner in 1/z
        let mut pos = ZERO;
        for k in (0..=n).rev() {
            pos = pos * z + self.coeff(k);
        }
        if self.n_min().is_none_or(|m| m >= 0) {
            return pos;
        }
        let zi = z.inv();
        let mut neg = ZERO;
        for k in (1..=n).rev() {
            neg = neg * zi + self.coeff(-k);
        }
        pos + neg * zi
    }

    /// Reciprocal as a one-sided expansion around `at`.
    pub fn recip(&self, at: Expansion) -> Result<Self> {
        let lead_exp = match at {
            Expansion::Zero => self.n_min(),
            Expansion::Infinity => self.n_max(),
        }
        .ok_or_else(|| Error::NonUnitInput("reciprocal of the zero series".into()))?;
        let lead = self.coeff(lead_exp);
        let n = self.order as i64;
        // u_j: normalized coefficients moving away from the leading term
        let step: i64 = if at == Expansion::Zero { 1 } else { -1 };
        let len = (n - step * (-lead_exp)).max(0) as usize + 1;
        let len = len.min(2 * self.order + 1);
        let u: Vec<C64> = (0..len).map(|j| self.coeff(lead_exp + step * j as i64) / lead).collect();
        let mut r = vec![ZERO; len];
        if len > 0 {
            r[0] = ONE;
        }
        for m in 1..len {
            let mut acc = ZERO;
            for j in 1..=m {
                acc -= u[j] * r[m - j];
            }
            r[m] = acc;
        }
        let inv_lead = lead.inv();
        let mut out = Self::zeros(self.order);
        for (m, rm) in r.iter().enumerate() {
            out.set(-lead_exp + step * m as i64, rm * inv_lead);
        }
        out.lossy = self.lossy;
        Ok(out)
    }

    /// Integer power; negative powers go through [`recip`](Self::recip).
    pub fn pow(&self, p: i64, at: Expansion) -> Result<Self> {
        let base = if p < 0 { self.recip(at)? } else { self.clone() };
        let mut e = p.unsigned_abs();
        let mut acc = Self::constant(self.order, ONE);
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&sq);
            }
            e >>= 1;
            if e > 0 {
                sq = sq.mul(&sq);
            }
        }
        Ok(acc)
    }

    /// Quotient `self / den` with `den` expanded around `at`.
    pub fn div(&self, den: &Self, at: Expansion) -> Result<Self> {
        Ok(self.mul(&den.recip(at)?))
    }

    /// Expansion point of an inner function suitable for composition.
    fn inner_expansion(&self) -> Result<Expansion> {
        let lo = self.n_min().ok_or_else(|| Error::IncompatibleValuation("composition with the zero series".into()))?;
        let hi = self.n_max().unwrap_or(lo);
        if lo >= 1 {
            Ok(Expansion::Zero)
        } else if hi == 1 {
            Ok(Expansion::Infinity)
        } else {
            Err(Error::IncompatibleValuation(format!(
                "inner series must be b1 z + ... or b z + b0 + b1/z + ...; support is [{lo}, {hi}]"
            )))
        }
    }

    /// Coefficients of `self(inner(z))` by Horner-style power accumulation.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        assert_eq!(self.order, inner.order, "series orders differ");
        let at = inner.inner_expansion()?;
        let lo = self.n_min().unwrap_or(0);
        let hi = self.n_max().unwrap_or(0);
        let mut out = Self::constant(self.order, self.coeff(0));
        if hi > 0 {
            let mut p = inner.clone();
            for k in 1..=hi {
                let c = self.coeff(k);
                if c != ZERO {
                    out = &out + &p.scale(c);
                }
                if k < hi {
                    p = p.mul(inner);
                }
            }
        }
        if lo < 0 {
            let inv = inner.recip(at)?;
            let mut p = inv.clone();
            for k in 1..=(-lo) {
                let c = self.coeff(-k);
                if c != ZERO {
                    out = &out + &p.scale(c);
                }
                if k < -lo {
                    p = p.mul(&inv);
                }
            }
        }
        Ok(out)
    }

    /// Composition by sampling `inner` on the grid, evaluating `self` pointwise
    /// and refitting. Only valid when `inner(S^1)` lies where `self` converges.
    pub fn compose_on_grid(&self, inner: &Self, m: usize) -> Result<Self> {
        let g = CircleGrid::sample(inner, m)?;
        let vals: Vec<C64> = g.samples().iter().map(|&z| self.eval(z)).collect();
        Ok(CircleGrid::from_samples(vals)?.fourier(self.order))
    }

    /// Compositional inverse of `a1 z + a2 z^2 + ...` or `b z + b0 + b1/z + ...`,
    /// by Newton iteration on coefficients.
    pub fn comp_inverse(&self) -> Result<Self> {
        let at = self.inner_expansion()?;
        let lead = self.coeff(1);
        if lead.norm() < 1e-12 {
            return Err(Error::SingularLeadingCoefficient(lead.norm()));
        }
        if at == Expansion::Zero && self.n_min() != Some(1) {
            return Err(Error::IncompatibleValuation("Taylor series must start at z^1".into()));
        }
        let z = Self::identity(self.order);
        let c0 = self.coeff(0);
        // linear-term inverse
        let mut b = Self::from_terms(self.order, &[(1, lead.inv()), (0, -c0 / lead)]);
        let deriv = self.derivative();
        let mut last_step = f64::INFINITY;
        for _ in 0..50 {
            let err = &self.compose(&b)? - &z;
            let dd = deriv.compose(&b)?;
            let step = err.div(&dd, at)?;
            b = &b - &step;
            let size = step.max_abs();
            // large inverse coefficients put the roundoff floor above 1e-14;
            // stop there once steps no longer contract
            if size < 1e-14 || (size >= 0.5 * last_step && size < 1e-8 * b.max_abs()) {
                break;
            }
            last_step = size;
        }
        Ok(b)
    }

    /// `log c + log(1 + u)` for a unit `c (1 + u)` whose non-constant part is
    /// entirely positive or entirely negative; principal branch for `log c`.
    pub fn log_unit(&self) -> Result<Self> {
        let c = self.coeff(0);
        let scale = self.max_abs();
        if c.norm() <= 1e-14 * scale.max(f64::MIN_POSITIVE) || scale == 0.0 {
            return Err(Error::NonUnitInput("constant term vanishes".into()));
        }
        let has_pos = self.terms().any(|(k, _)| k > 0);
        let has_neg = self.terms().any(|(k, _)| k < 0);
        let at = match (has_pos, has_neg) {
            (true, true) => return Err(Error::NonUnitInput("non-constant part has both signs".into())),
            (true, false) | (false, false) => Expansion::Zero,
            (false, true) => Expansion::Infinity,
        };
        // one extra order so that differentiating and integrating back keeps
        // the full window
        let wide = self.with_order(self.order + 1);
        let mut out = wide.derivative().div(&wide, at)?.antiderivative()?.with_order(self.order);
        out.set(0, c.ln());
        Ok(out)
    }

    /// `exp` of a series without constant term whose support is one-sided.
    pub fn exp_series(&self, at: Expansion) -> Self {
        // E' = A' E, solved coefficientwise moving away from the constant term
        let n = self.order as i64;
        let step = if at == Expansion::Zero { 1 } else { -1 };
        let mut e = Self::constant(self.order, ONE);
        for m in 1..=n {
            // coefficient of z^{step m}: (1/m) sum_{j=1}^m j a_{step j} e_{step (m-j)}
            let mut acc = ZERO;
            for j in 1..=m {
                acc += self.coeff(step * j) * (j as f64) * e.coeff(step * (m - j));
            }
            e.set(step * m, acc / m as f64);
        }
        e.scale(self.coeff(0).exp())
    }
}

impl Add for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn add(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        assert_eq!(self.order, rhs.order, "series orders differ");
        TruncatedSeries {
            order: self.order,
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
            lossy: self.lossy || rhs.lossy,
        }
    }
}

impl Sub for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn sub(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        assert_eq!(self.order, rhs.order, "series orders differ");
        TruncatedSeries {
            order: self.order,
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect(),
            lossy: self.lossy || rhs.lossy,
        }
    }
}

impl Neg for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn neg(self) -> TruncatedSeries {
        self.scale(-ONE)
    }
}

impl Mul for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn mul(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        TruncatedSeries::mul(self, rhs)
    }
}

/// Values at the roots of unity `w_k = exp(2 pi i k / M)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CircleGrid {
    samples: Vec<C64>,
}

/// Checks `M` is a power of two with `M >= 4 (N + 1)`.
pub fn check_grid(m: usize, order: usize) -> Result<()> {
    let need = 4 * (order + 1);
    if !m.is_power_of_two() || m < need {
        return Err(Error::GridTooSmall { grid: m, order, need });
    }
    Ok(())
}

/// The nodes `exp(2 pi i k / M)`.
pub fn nodes(m: usize) -> Vec<C64> {
    (0..m).map(|k| C64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64)).collect()
}

impl CircleGrid {
    pub fn from_samples(samples: Vec<C64>) -> Result<Self> {
        let m = samples.len();
        if !m.is_power_of_two() || m < 4 {
            return Err(Error::GridTooSmall { grid: m, order: 0, need: 4 });
        }
        Ok(Self { samples })
    }

    /// Evaluates a pointwise function at the nodes.
    pub fn from_fn(m: usize, f: impl Fn(C64) -> C64) -> Result<Self> {
        Self::from_samples(nodes(m).into_iter().map(f).collect())
    }

    /// Samples a series on `M` nodes via one inverse FFT.
    pub fn sample(a: &TruncatedSeries, m: usize) -> Result<Self> {
        check_grid(m, a.order())?;
        let mut buf = vec![ZERO; m];
        for (k, c) in a.terms() {
            buf[k.rem_euclid(m as i64) as usize] += c;
        }
        FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
        Ok(Self { samples: buf })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    /// All `M` discrete Fourier coefficients, indexed `k = -M/2 .. M/2 - 1`.
    pub fn fourier_dense(&self) -> Vec<(i64, C64)> {
        let m = self.samples.len();
        let mut buf = self.samples.clone();
        FftPlanner::new().plan_fft_forward(m).process(&mut buf);
        let inv = 1.0 / m as f64;
        let half = (m / 2) as i64;
        (-half..half).map(|k| (k, buf[k.rem_euclid(m as i64) as usize] * inv)).collect()
    }

    /// Fourier coefficients in the window `[-order, order]`.
    pub fn fourier(&self, order: usize) -> TruncatedSeries {
        let mut s = TruncatedSeries::zeros(order);
        for (k, c) in self.fourier_dense() {
            s.set(k, c);
        }
        s
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "grid sizes differ");
        Self { samples: self.samples.iter().zip(&other.samples).map(|(a, b)| a * b).collect() }
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self { samples: self.samples.iter().map(|&x| f(x)).collect() }
    }

    /// Trapezoid rule for `(1 / 2 pi i) \oint h(w) dw` on the unit circle.
    pub fn contour_integral(&self) -> C64 {
        let m = self.samples.len();
        let nodes = nodes(m);
        let sum: C64 = self.samples.iter().zip(&nodes).map(|(h, w)| h * w).sum();
        sum / m as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, c| m.max(c.norm()))
    }
}
