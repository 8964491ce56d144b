//! Pairs `(f, g)` of univalent maps normalized by `f'(0) g'(inf) = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{nodes, CircleGrid, TruncatedSeries, C64, ONE, ZERO};

/// Whether the pair holds `(f, g)` themselves or their inverses `(F, G)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Forward,
    Inverse,
}

/// Closed form `f(z) = z / (b (1 + a z))`, `g(z) = b z + c`.
///
/// With `b = e^{i alpha/2} / sqrt(1 - |a|^2)` and
/// `c = -conj(a) e^{-i alpha/2} / sqrt(1 - |a|^2)` this is the welding pair of
/// a disc automorphism; other triples are the disc family off the welding locus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobiusTriple {
    pub a: C64,
    pub b: C64,
    pub c: C64,
}

impl MobiusTriple {
    pub fn disc(a: C64, alpha: f64) -> Self {
        let s = (1.0 - a.norm_sqr()).sqrt();
        let b = C64::from_polar(1.0, alpha / 2.0) / s;
        let c = -a.conj() * C64::from_polar(1.0, -alpha / 2.0) / s;
        Self { a, b, c }
    }

    /// The triple describing `(f^{-1}, g^{-1})`.
    pub fn inverse(&self) -> Self {
        Self { a: -self.a * self.b, b: self.b.inv(), c: -self.c / self.b }
    }

    pub fn f(&self, z: C64) -> C64 {
        z / (self.b * (ONE + self.a * z))
    }

    pub fn g(&self, z: C64) -> C64 {
        self.b * z + self.c
    }

    pub fn f_coeffs(&self, len: usize) -> Vec<C64> {
        let mut out = Vec::with_capacity(len);
        let mut t = self.b.inv();
        for _ in 0..len {
            out.push(t);
            t *= -self.a;
        }
        out
    }
}

/// Coefficients of `f` and `g`. When built from a Möbius triple, `f`
/// coefficients beyond the stored ones follow that triple (the triple's `g`
/// is linear, so `g` has no tail); perturbing stored coefficients keeps the
/// tail.
#[derive(Debug, Clone, PartialEq)]
pub struct UnivalentPair {
    f: Vec<C64>,
    b: C64,
    g: Vec<C64>,
    role: Role,
    tail: Option<MobiusTriple>,
    pure: bool,
}

impl UnivalentPair {
    /// `f = sum_{n>=1} f[n-1] z^n`, `g = b z + sum_{n>=0} g[n] z^{-n}`.
    pub fn new(f: Vec<C64>, b: C64, g: Vec<C64>, role: Role) -> Result<Self> {
        let a1 = *f.first().ok_or_else(|| Error::InvalidPair("f has no coefficients".into()))?;
        if a1.norm() < 1e-300 || b.norm() < 1e-300 {
            return Err(Error::InvalidPair("zero leading coefficient".into()));
        }
        if (a1 * b - ONE).norm() > 1e-12 {
            return Err(Error::InvalidPair(format!("f'(0) g'(inf) = {} differs from 1", a1 * b)));
        }
        if f.iter().chain(&g).any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidPair("non-finite coefficient".into()));
        }
        Ok(Self { f, b, g, role, tail: None, pure: true })
    }

    /// Möbius pair with coefficient arrays of length `len`.
    pub fn from_mobius(m: MobiusTriple, len: usize, role: Role) -> Result<Self> {
        let mut g = vec![ZERO; len];
        g[0] = m.c;
        let mut p = Self::new(m.f_coeffs(len), m.b, g, role)?;
        p.tail = Some(m);
        Ok(p)
    }

    /// Welding pair of the disc automorphism `e^{-i alpha}(z + conj a)/(1 + a z)`.
    pub fn mobius(a: C64, alpha: f64, len: usize) -> Result<Self> {
        Self::from_mobius(MobiusTriple::disc(a, alpha), len, Role::Forward)
    }

    pub fn f_coeffs(&self) -> &[C64] {
        &self.f
    }

    pub fn g_lead(&self) -> C64 {
        self.b
    }

    pub fn g_coeffs(&self) -> &[C64] {
        &self.g
    }

    pub fn a1(&self) -> C64 {
        self.f[0]
    }

    pub fn role(&self) -> Role {
        self.role
    }

    /// The Möbius closed form, if the pair is exactly one.
    pub fn exact(&self) -> Option<&MobiusTriple> {
        if self.pure {
            self.tail.as_ref()
        } else {
            None
        }
    }

    /// Adds `df[k]` to `a_{k+1}` and `dg[k]` to `b_k`, then resets `b = 1/a_1`.
    pub fn perturbed(&self, df: &[C64], dg: &[C64]) -> Result<Self> {
        let mut p = self.clone();
        if df.len() > p.f.len() {
            let extra: Vec<C64> = match &p.tail {
                Some(m) => m.f_coeffs(df.len())[p.f.len()..].to_vec(),
                None => vec![ZERO; df.len() - p.f.len()],
            };
            p.f.extend(extra);
        }
        if dg.len() > p.g.len() {
            p.g.resize(dg.len(), ZERO);
        }
        for (x, d) in p.f.iter_mut().zip(df) {
            *x += d;
        }
        for (x, d) in p.g.iter_mut().zip(dg) {
            *x += d;
        }
        if df.iter().chain(dg).any(|d| *d != ZERO) {
            p.pure = false;
        }
        if p.f[0].norm() < 1e-300 {
            return Err(Error::InvalidPair("a_1 vanishes".into()));
        }
        p.b = p.f[0].inv();
        Ok(p)
    }

    /// Series window that holds every stored coefficient.
    pub fn window(&self) -> usize {
        self.f.len().max(self.g.len()).max(1)
    }

    pub fn f_series(&self, order: usize) -> TruncatedSeries {
        let mut terms: Vec<(i64, C64)> = self.f.iter().enumerate().map(|(i, c)| (i as i64 + 1, *c)).collect();
        if let Some(m) = &self.tail {
            if order > self.f.len() {
                let full = m.f_coeffs(order);
                terms.extend((self.f.len()..order).map(|i| (i as i64 + 1, full[i])));
            }
        }
        TruncatedSeries::from_terms(order, &terms)
    }

    pub fn g_series(&self, order: usize) -> TruncatedSeries {
        let mut terms = vec![(1, self.b)];
        terms.extend(self.g.iter().enumerate().map(|(i, c)| (-(i as i64), *c)));
        TruncatedSeries::from_terms(order, &terms)
    }

    pub fn eval_f(&self, z: C64) -> C64 {
        if let Some(m) = self.exact() {
            return m.f(z);
        }
        let head = self.f.iter().rev().fold(ZERO, |acc, c| (acc + c) * z);
        match &self.tail {
            // sum_{k > L} a_k z^k = z (-a z)^L / (b (1 + a z))
            Some(m) => head + z * (-m.a * z).powu(self.f.len() as u32) / (m.b * (ONE + m.a * z)),
            None => head,
        }
    }

    pub fn eval_g(&self, z: C64) -> C64 {
        let zi = z.inv();
        let tail = self.g.iter().rev().fold(ZERO, |acc, c| acc * zi + c);
        self.b * z + tail
    }

    pub fn eval_df(&self, z: C64) -> C64 {
        if let Some(m) = self.exact() {
            let d = ONE + m.a * z;
            return (m.b * d * d).inv();
        }
        let head = self.f.iter().enumerate().rev().fold(ZERO, |acc, (i, c)| acc * z + c * (i + 1) as f64);
        match &self.tail {
            Some(m) => {
                let l = self.f.len() as u32;
                let d = ONE + m.a * z;
                let p = (-m.a).powu(l) / m.b;
                head + p * z.powu(l) * ((l + 1) as f64 * d - m.a * z) / (d * d)
            }
            None => head,
        }
    }

    pub fn eval_dg(&self, z: C64) -> C64 {
        let zi = z.inv();
        let mut acc = ZERO;
        for (i, c) in self.g.iter().enumerate().skip(1).rev() {
            acc = acc * zi - c * i as f64;
        }
        // acc = sum_{i>=1} -i g_i zi^{i-1}; derivative carries one more 1/z^2
        self.b + acc * zi * zi
    }

    /// Samples of `log(f(w)/w)` on the circle, with the branch fixed by
    /// `log a_1` (principal) and continuity.
    pub fn log_f_over_z_on_circle(&self, m: usize) -> Result<Vec<C64>> {
        if let Some(t) = self.exact() {
            let l = self.a1().ln();
            return Ok(nodes(m).into_iter().map(|w| l - (ONE + t.a * w).ln()).collect());
        }
        let order = self.log_window(m)?;
        let s = self.f_series(order).shift(-1).log_unit()?;
        Ok(CircleGrid::sample(&s, m)?.samples().to_vec())
    }

    /// Samples of `log(g(w)/w)` on the circle, branch fixed by `log b`.
    pub fn log_g_over_z_on_circle(&self, m: usize) -> Result<Vec<C64>> {
        if let Some(t) = self.exact() {
            let l = self.b.ln();
            let r = t.c / t.b;
            return Ok(nodes(m).into_iter().map(|w| l + (ONE + r / w).ln()).collect());
        }
        let order = self.log_window(m)?;
        let s = self.g_series(order).shift(-1).log_unit()?;
        Ok(CircleGrid::sample(&s, m)?.samples().to_vec())
    }

    fn log_window(&self, m: usize) -> Result<usize> {
        let order = (m / 4).saturating_sub(1);
        if order <= self.window() {
            return Err(Error::GridTooSmall { grid: m, order: self.window() + 1, need: 4 * (self.window() + 2) });
        }
        Ok(order)
    }

    pub fn f_on_circle(&self, m: usize) -> Vec<C64> {
        nodes(m).into_iter().map(|w| self.eval_f(w)).collect()
    }

    pub fn g_on_circle(&self, m: usize) -> Vec<C64> {
        nodes(m).into_iter().map(|w| self.eval_g(w)).collect()
    }

    /// The pair `(f^{-1}, g^{-1})` by series reversion within `order`.
    pub fn inverse(&self, order: usize) -> Result<Self> {
        let role = match self.role {
            Role::Forward => Role::Inverse,
            Role::Inverse => Role::Forward,
        };
        if let Some(m) = self.exact() {
            return Self::from_mobius(m.inverse(), order, role);
        }
        let fi = self.f_series(order).comp_inverse()?;
        let gi = self.g_series(order).comp_inverse()?;
        let f = (1..=order as i64).map(|k| fi.coeff(k)).collect();
        let g = (0..order as i64).map(|k| gi.coeff(-k)).collect();
        let mut p = Self::new(f, gi.coeff(1), g, role)?;
        p.b = p.f[0].inv();
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_is_enforced() {
        let r = UnivalentPair::new(vec![C64::new(2.0, 0.0)], ONE, vec![ZERO], Role::Forward);
        assert!(matches!(r, Err(Error::InvalidPair(_))));
    }

    #[test]
    fn mobius_coefficients_match_closed_form() {
        let p = UnivalentPair::mobius(C64::new(0.3, 0.2), 0.7, 40).unwrap();
        let m = *p.exact().unwrap();
        let plain =
            UnivalentPair::new(p.f_coeffs().to_vec(), p.g_lead(), p.g_coeffs().to_vec(), Role::Forward).unwrap();
        for k in 0..7 {
            let z = C64::from_polar(0.9, k as f64);
            assert!((plain.eval_f(z) - m.f(z)).norm() < 1e-12);
            assert!((plain.eval_g(1.0 / z) - m.g(1.0 / z)).norm() < 1e-14);
            assert!((plain.eval_df(z) - p.eval_df(z)).norm() < 1e-10);
        }
    }

    #[test]
    fn inverse_of_mobius_by_reversion() {
        let p = UnivalentPair::mobius(C64::new(0.2, -0.1), 1.1, 30).unwrap();
        let plain =
            UnivalentPair::new(p.f_coeffs().to_vec(), p.g_lead(), p.g_coeffs().to_vec(), Role::Forward).unwrap();
        let exact = p.inverse(30).unwrap();
        let rev = plain.inverse(30).unwrap();
        for (x, y) in exact.f_coeffs().iter().zip(rev.f_coeffs()).take(20) {
            assert!((x - y).norm() < 1e-12);
        }
        for (x, y) in exact.g_coeffs().iter().zip(rev.g_coeffs()).take(20) {
            assert!((x - y).norm() < 1e-12);
        }
        assert_eq!(rev.role(), Role::Inverse);
    }

    #[test]
    fn perturbed_mobius_keeps_exact_tail() {
        let m = MobiusTriple::disc(C64::new(0.3, 0.1), 0.4);
        let p = UnivalentPair::from_mobius(m, 6, Role::Forward).unwrap();
        let d = [ZERO, C64::new(0.01, 0.0), ZERO, C64::new(0.0, 0.02)];
        let q = p.perturbed(&d, &[C64::new(0.005, 0.0)]).unwrap();
        assert!(q.exact().is_none());
        let z = C64::from_polar(1.0, 0.8);
        let want = m.f(z) + d[1] * z * z + d[3] * z.powu(4);
        assert!((q.eval_f(z) - want).norm() < 1e-14);
        let h = 1e-6;
        let fd = (q.eval_f(z + h) - q.eval_f(z - h)) / (2.0 * h);
        assert!((fd - q.eval_df(z)).norm() < 1e-8);
        let s = q.f_series(40);
        assert!((s.coeff(30) - m.f_coeffs(30)[29]).norm() < 1e-18);
        assert!((q.eval_g(z) - m.g(z) - 0.005).norm() < 1e-15);
    }

    #[test]
    fn log_samples_agree_between_routes() {
        let p = UnivalentPair::mobius(C64::new(0.3, -0.2), 2.5, 8).unwrap();
        let q = p.perturbed(&[], &[]).unwrap();
        let plain = UnivalentPair::new(
            p.f_series(60).coeffs()[61..].to_vec(),
            p.g_lead(),
            p.g_coeffs().to_vec(),
            Role::Forward,
        )
        .unwrap();
        assert!(q.exact().is_some());
        let a = p.log_f_over_z_on_circle(256).unwrap();
        let b = plain.log_f_over_z_on_circle(256).unwrap();
        let c = p.log_g_over_z_on_circle(256).unwrap();
        let d = plain.log_g_over_z_on_circle(256).unwrap();
        for k in 0..256 {
            assert!((a[k] - b[k]).norm() < 1e-13);
            assert!((c[k] - d[k]).norm() < 1e-13);
        }
    }

    #[test]
    fn dg_matches_difference_quotient() {
        let p = UnivalentPair::new(
            vec![ONE],
            ONE,
            vec![C64::new(0.1, 0.0), C64::new(0.2, 0.1), C64::new(0.0, 0.05)],
            Role::Forward,
        )
        .unwrap();
        let z = C64::new(1.3, 0.4);
        let h = 1e-6;
        let fd = (p.eval_g(z + h) - p.eval_g(z - h)) / (2.0 * h);
        assert!((fd - p.eval_dg(z)).norm() < 1e-8);
    }
}
