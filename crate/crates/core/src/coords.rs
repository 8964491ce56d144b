//! Coordinate charts `(t_n, v_n)` on pairs of univalent maps, Cauchy
//! transforms of the jump data, and harmonic moments of analytic curves.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pair::{MobiusTriple, Role, UnivalentPair};
use crate::series::{check_grid, nodes, CircleGrid, Expansion, TruncatedSeries, C64, ONE, ZERO};
use crate::welding::{CircleHomeo, WeldingSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chart {
    /// Fourier coefficients of `gamma` and `1/gamma^{-1}`.
    Inverse,
    /// Contour integrals over the welded pair.
    Direct,
    /// Same integrals on an arbitrary normalized pair.
    Extended,
    /// Harmonic moments of an analytic curve.
    Wz,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateVector {
    pub chart: Chart,
    order: usize,
    t: Vec<C64>,
    v: Vec<C64>,
    /// `w^{-1}` coefficient of `1/gamma^{-1}` (inverse chart); equals `t_0`.
    pub c0: C64,
}

impl CoordinateVector {
    pub fn zeros(chart: Chart, order: usize) -> Self {
        Self { chart, order, t: vec![ZERO; 2 * order + 1], v: vec![ZERO; 2 * order + 1], c0: ZERO }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn idx(&self, n: i64) -> usize {
        assert!(n.unsigned_abs() as usize <= self.order, "index {n} outside order {}", self.order);
        (n + self.order as i64) as usize
    }

    pub fn t(&self, n: i64) -> C64 {
        self.t[self.idx(n)]
    }

    pub fn v(&self, n: i64) -> C64 {
        self.v[self.idx(n)]
    }

    pub fn set_t(&mut self, n: i64, x: C64) {
        let i = self.idx(n);
        self.t[i] = x;
    }

    pub fn set_v(&mut self, n: i64, x: C64) {
        let i = self.idx(n);
        self.v[i] = x;
    }

    /// `t_{-N}, ..., t_N`.
    pub fn t_all(&self) -> &[C64] {
        &self.t
    }

    pub fn v_all(&self) -> &[C64] {
        &self.v
    }

    /// Restriction to `|n| <= order`.
    pub fn truncated(&self, order: usize) -> Self {
        let mut out = Self::zeros(self.chart, order.min(self.order));
        let k = out.order as i64;
        for n in -k..=k {
            out.set_t(n, self.t(n));
            out.set_v(n, self.v(n));
        }
        out.c0 = self.c0;
        out
    }

    pub fn is_finite(&self) -> bool {
        self.t.iter().chain(&self.v).all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

#[derive(Serialize, Deserialize)]
struct CoordinateJson {
    chart: Chart,
    order: usize,
    t: Vec<(i64, f64, f64)>,
    v: Vec<(i64, f64, f64)>,
}

impl Serialize for CoordinateVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let k = self.order as i64;
        CoordinateJson {
            chart: self.chart,
            order: self.order,
            t: (-k..=k).map(|n| (n, self.t(n).re, self.t(n).im)).collect(),
            v: (-k..=k).map(|n| (n, self.v(n).re, self.v(n).im)).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CoordinateVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = CoordinateJson::deserialize(d)?;
        let mut out = CoordinateVector::zeros(j.chart, j.order);
        for (list, is_t) in [(&j.t, true), (&j.v, false)] {
            for &(n, re, im) in list {
                if n.unsigned_abs() as usize > j.order {
                    return Err(serde::de::Error::custom(format!("index {n} outside order {}", j.order)));
                }
                if is_t {
                    out.set_t(n, C64::new(re, im));
                } else {
                    out.set_v(n, C64::new(re, im));
                }
            }
        }
        out.c0 = out.t(0);
        Ok(out)
    }
}

/// `(1/2 pi i) \oint h(w) dw` from samples of `h` at the nodes.
fn contour(h: impl Iterator<Item = C64>, w: &[C64]) -> C64 {
    let sum: C64 = h.zip(w).map(|(h, w)| h * w).sum();
    sum / w.len() as f64
}

struct CircleSamples {
    w: Vec<C64>,
    f: Vec<C64>,
    df: Vec<C64>,
    g: Vec<C64>,
    dg: Vec<C64>,
}

impl CircleSamples {
    fn new(pair: &UnivalentPair, m: usize) -> Result<Self> {
        let w = nodes(m);
        let f: Vec<C64> = w.iter().map(|&z| pair.eval_f(z)).collect();
        let min_f = f.iter().fold(f64::INFINITY, |a, z| a.min(z.norm()));
        if !(min_f > 1e-8) {
            return Err(Error::FVanishesOnCircle(min_f));
        }
        Ok(Self {
            df: w.iter().map(|&z| pair.eval_df(z)).collect(),
            g: w.iter().map(|&z| pair.eval_g(z)).collect(),
            dg: w.iter().map(|&z| pair.eval_dg(z)).collect(),
            f,
            w,
        })
    }
}

/// Direct chart by trapezoid quadrature on `m` nodes of the integrals over the
/// unit circle. `chart` tags the result as [`Chart::Direct`] (welded pair) or
/// [`Chart::Extended`] (any normalized pair); the numbers are the same.
pub fn direct_chart(pair: &UnivalentPair, order: usize, m: usize, chart: Chart) -> Result<CoordinateVector> {
    check_grid(m, order)?;
    let s = CircleSamples::new(pair, m)?;
    let lf = pair.log_f_over_z_on_circle(m)?;
    let lg = pair.log_g_over_z_on_circle(m)?;
    let w = &s.w;
    let mut cv = CoordinateVector::zeros(chart, order);
    // running powers g^{-n}, g^n, f^{n-2}, f^{-n-2}
    let f_inv: Vec<C64> = s.f.iter().map(|z| z.inv()).collect();
    let g_inv: Vec<C64> = s.g.iter().map(|z| z.inv()).collect();
    let base_t: Vec<C64> = (0..m).map(|k| s.dg[k] * f_inv[k]).collect(); // g'/f
    let base_m: Vec<C64> = (0..m).map(|k| s.g[k] * s.df[k]).collect(); // g f'
    let mut g_neg = base_t.clone();
    let mut g_pos = base_t.clone();
    let mut f_pos: Vec<C64> = (0..m).map(|k| base_m[k] * f_inv[k] * f_inv[k]).collect();
    let mut f_neg = f_pos.clone();
    cv.set_t(0, contour(base_t.iter().copied(), w));
    for n in 1..=order as i64 {
        let nf = n as f64;
        for k in 0..m {
            g_neg[k] *= g_inv[k];
            g_pos[k] *= s.g[k];
            f_pos[k] *= s.f[k];
            f_neg[k] *= f_inv[k];
        }
        cv.set_t(n, contour(g_neg.iter().copied(), w) / nf);
        cv.set_v(n, contour(g_pos.iter().copied(), w));
        cv.set_t(-n, -contour(f_pos.iter().copied(), w) / nf);
        cv.set_v(-n, -contour(f_neg.iter().copied(), w));
    }
    let v0 = contour((0..m).map(|k| lg[k] * base_t[k]), w)
        - contour((0..m).map(|k| lf[k] * base_m[k] * f_inv[k] * f_inv[k]), w)
        - contour((0..m).map(|k| s.g[k] * f_inv[k] / w[k]), w);
    cv.set_v(0, v0);
    cv.c0 = cv.t(0);
    Ok(cv)
}

/// Inverse chart from samples of `gamma` and `gamma^{-1}` at the nodes, with
/// `f` supplying the logarithmic terms of `v_0`.
fn inverse_chart_from_samples(
    pair: &UnivalentPair,
    gamma: &[C64],
    gamma_inv: &[C64],
    order: usize,
) -> Result<CoordinateVector> {
    let m = gamma.len();
    check_grid(m, order + 1)?;
    let w = nodes(m);
    let c = CircleGrid::from_samples(gamma.to_vec())?.fourier(order + 1);
    let recip: Vec<C64> = gamma_inv.iter().map(|z| z.inv()).collect();
    let d = CircleGrid::from_samples(recip.clone())?.fourier(order + 1);
    let mut cv = CoordinateVector::zeros(Chart::Inverse, order);
    cv.set_t(0, c.coeff(1));
    for n in 1..=order as i64 {
        let nf = n as f64;
        cv.set_t(-n, -c.coeff(1 - n) / nf);
        cv.set_v(-n, -c.coeff(n + 1));
        cv.set_t(n, d.coeff(n - 1) / nf);
        cv.set_v(n, d.coeff(-n - 1));
    }
    cv.c0 = d.coeff(-1);
    let lf = pair.log_f_over_z_on_circle(m)?;
    let lg = pair.log_g_over_z_on_circle(m)?;
    let first = contour((0..m).map(|k| lf[k] * gamma[k] / (w[k] * w[k]) - lg[k] * recip[k]), &w);
    // the curve integral of G/F dz/z pulled back by z = f(w)
    let second = contour((0..m).map(|k| gamma[k] / w[k] * pair.eval_df(w[k]) / pair.eval_f(w[k])), &w);
    cv.set_v(0, first - second);
    Ok(cv)
}

/// Inverse chart of a welded homeomorphism.
pub fn inverse_chart(gamma: &CircleHomeo, sol: &WeldingSolution, order: usize) -> Result<CoordinateVector> {
    inverse_chart_from_samples(&sol.pair, gamma.samples(), gamma.inverse_samples()?, order)
}

/// Inverse chart of an arbitrary normalized pair, with `gamma = g^{-1} o f`
/// and `gamma^{-1} = f^{-1} o g` evaluated pointwise on the circle. On welded
/// pairs this agrees with [`inverse_chart`]; off the welding locus it is the
/// holomorphic continuation used for finite-difference flows.
pub fn inverse_chart_of_pair(pair: &UnivalentPair, order: usize, m: usize) -> Result<CoordinateVector> {
    let (gamma, gamma_inv) = compositions_on_circle(pair, m)?;
    inverse_chart_from_samples(pair, &gamma, &gamma_inv, order)
}

/// `(g^{-1}(f(w_k)), f^{-1}(g(w_k)))` at the nodes.
pub fn compositions_on_circle(pair: &UnivalentPair, m: usize) -> Result<(Vec<C64>, Vec<C64>)> {
    let w = nodes(m);
    if let Some(t) = pair.exact() {
        let inv = t.inverse();
        let gi = |z: C64| (z - t.c) / t.b;
        let gamma = w.iter().map(|&z| gi(t.f(z))).collect();
        let gamma_inv = w.iter().map(|&z| inv.f(t.g(z))).collect();
        return Ok((gamma, gamma_inv));
    }
    let f_targets: Vec<C64> = w.iter().map(|&z| pair.eval_f(z)).collect();
    let g_targets: Vec<C64> = w.iter().map(|&z| pair.eval_g(z)).collect();
    let gamma = solve_on_circle(&f_targets, |u| pair.eval_g(u), |u| pair.eval_dg(u))?;
    let gamma_inv = solve_on_circle(&g_targets, |u| pair.eval_f(u), |u| pair.eval_df(u))?;
    Ok((gamma, gamma_inv))
}

/// Solves `h(u_k) = y_k` node by node, starting from the best node on the
/// unit circle and continuing from the previous solution.
fn solve_on_circle(y: &[C64], h: impl Fn(C64) -> C64, dh: impl Fn(C64) -> C64) -> Result<Vec<C64>> {
    let m = y.len();
    let w = nodes(m);
    let newton = |target: C64, mut u: C64, node: usize| -> Result<C64> {
        for _ in 0..60 {
            let step = (h(u) - target) / dh(u);
            if !(step.norm() < 1.0) {
                return Err(Error::NewtonStall { node });
            }
            u -= step;
            if step.norm() < 1e-15 * u.norm().max(1.0) {
                break;
            }
        }
        let r = (h(u) - target).norm();
        if !(r <= 1e-11 * target.norm().max(1.0)) {
            return Err(Error::NewtonStall { node });
        }
        Ok(u)
    };
    let start =
        w.iter().min_by(|a, b| (h(**a) - y[0]).norm().total_cmp(&(h(**b) - y[0]).norm())).copied().unwrap_or(ONE);
    let mut out = Vec::with_capacity(m);
    out.push(newton(y[0], start, 0)?);
    for k in 1..m {
        let guess = if k >= 2 { out[k - 1] * out[k - 1] / out[k - 2] } else { out[0] * w[1] };
        out.push(newton(y[k], guess, k)?);
    }
    Ok(out)
}

/// Holomorphic pieces of the jump data: `S_+`, `S~_+` at the origin and
/// `S_-`, `S~_-` at infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyData {
    pub s_plus: TruncatedSeries,
    pub s_minus: TruncatedSeries,
    pub st_plus: TruncatedSeries,
    pub st_minus: TruncatedSeries,
}

impl CauchyData {
    /// Largest mismatch with the expansions implied by the coordinates.
    pub fn coefficient_residual(&self, cv: &CoordinateVector) -> f64 {
        let k = self.s_plus.order().min(cv.order()) as i64;
        let mut r = 0.0f64;
        let mut upd = |x: C64| r = r.max(x.norm());
        upd(self.s_minus.coeff(-1) + cv.t(0));
        upd(self.st_minus.coeff(-1) + cv.t(0));
        for n in 1..=k {
            let nf = n as f64;
            upd(self.s_plus.coeff(n - 1) - cv.t(n) * nf);
            upd(self.st_plus.coeff(n - 1) + cv.v(-n));
            upd(self.s_minus.coeff(-n - 1) + cv.v(n));
            upd(self.st_minus.coeff(-n - 1) - cv.t(-n) * nf);
        }
        r
    }

    /// `max |1/f(w_k) - (S_+ - S_-)(g(w_k))|` and the analogous residual of
    /// `g(w)/f(w)^2` against `S~_+ - S~_-` on `f(w_k)`.
    ///
    /// The series are expanded about the origin, so roundoff in coefficient
    /// `n` is amplified by roughly `(max|curve| / min|curve|)^n`.
    pub fn jump_residual(&self, pair: &UnivalentPair, m: usize) -> (f64, f64) {
        let mut r = (0.0f64, 0.0f64);
        for w in nodes(m) {
            let (f, g) = (pair.eval_f(w), pair.eval_g(w));
            let a = f.inv() - (self.s_plus.eval(g) - self.s_minus.eval(g));
            let b = g / (f * f) - (self.st_plus.eval(f) - self.st_minus.eval(f));
            r = (r.0.max(a.norm()), r.1.max(b.norm()));
        }
        r
    }
}

/// Cauchy integrals of the jump data, evaluated by quadrature on a circle
/// well inside (for `+`) or outside (for `-`) the curve and expanded by FFT.
pub fn cauchy_data(pair: &UnivalentPair, order: usize, m: usize) -> Result<CauchyData> {
    check_grid(m, order)?;
    let s = CircleSamples::new(pair, m)?;
    let density_g: Vec<C64> = (0..m).map(|k| s.dg[k] / s.f[k]).collect();
    let density_f: Vec<C64> = (0..m).map(|k| s.g[k] * s.df[k] / (s.f[k] * s.f[k])).collect();
    let expand = |curve: &[C64], density: &[C64], radius: f64, plus: bool| -> Result<TruncatedSeries> {
        let vals: Vec<C64> = nodes(m)
            .into_iter()
            .map(|u| {
                let z = u * radius;
                contour((0..m).map(|k| density[k] / (curve[k] - z)), &s.w)
            })
            .collect();
        let raw = CircleGrid::from_samples(vals)?.fourier(order + 1);
        let mut out = TruncatedSeries::zeros(order + 1);
        for k in -(order as i64 + 1)..=(order as i64 + 1) {
            let keep = if plus { k >= 0 } else { k < 0 };
            if keep {
                out.set(k, raw.coeff(k) / radius.powi(k as i32));
            }
        }
        Ok(out)
    };
    let (gmin, gmax) = s.g.iter().fold((f64::INFINITY, 0.0f64), |(a, b), z| (a.min(z.norm()), b.max(z.norm())));
    let (fmin, fmax) = s.f.iter().fold((f64::INFINITY, 0.0f64), |(a, b), z| (a.min(z.norm()), b.max(z.norm())));
    // trapezoid error decays like rho^-m; keep rho small so the rescaling
    // by rho^n of the recovered coefficients stays mild
    let rho = (40.0 / m as f64).exp().max(1.25);
    Ok(CauchyData {
        s_plus: expand(&s.g, &density_g, gmin / rho, true)?,
        s_minus: expand(&s.g, &density_g, gmax * rho, false)?,
        st_plus: expand(&s.f, &density_f, fmin / rho, true)?,
        st_minus: expand(&s.f, &density_f, fmax * rho, false)?,
    })
}

/// `psi(z) = sum v_{-n}/n z^n` and `phi(z) = sum v_n/n z^{-n}` (inverse
/// chart); the direct-chart potentials have the same shape.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratingPotentials {
    pub chart: Chart,
    pub psi: TruncatedSeries,
    pub phi: TruncatedSeries,
}

impl GeneratingPotentials {
    pub fn new(cv: &CoordinateVector) -> Self {
        let k = cv.order();
        let mut psi = TruncatedSeries::zeros(k);
        let mut phi = TruncatedSeries::zeros(k);
        for n in 1..=k as i64 {
            psi.set(n, cv.v(-n) / n as f64);
            phi.set(-n, cv.v(n) / n as f64);
        }
        Self { chart: cv.chart, psi, phi }
    }
}

/// Harmonic moments of the curve `g(S^1)` for `g(w) = b w + b_0 + b_1/w + ...`.
///
/// `v_0` is the exterior area integral of `log|z|` regularized against the
/// unit disc: `v_0 = -1/2 - (1/pi) \iint_{inside} log|z| dA`, so that it
/// vanishes on the unit circle. The interior integral is done in polar form,
/// which requires the curve to be star-shaped about the origin.
pub fn wz_moments(g: &TruncatedSeries, order: usize, m: usize) -> Result<CoordinateVector> {
    check_grid(m, order.max(g.order()))?;
    if g.n_max() != Some(1) {
        return Err(Error::InvalidInput("expected g(w) = b w + b_0 + b_1/w + ...".into()));
    }
    let w = nodes(m);
    let z = CircleGrid::sample(g, m)?;
    let dz = CircleGrid::sample(&g.derivative(), m)?;
    let (z, dz) = (z.samples(), dz.samples());
    let mut cv = CoordinateVector::zeros(Chart::Wz, order);
    let base: Vec<C64> = (0..m).map(|k| z[k].conj() * dz[k]).collect();
    cv.set_t(0, contour(base.iter().copied(), &w));
    let mut neg = base.clone();
    let mut pos = base;
    for n in 1..=order as i64 {
        for k in 0..m {
            neg[k] /= z[k];
            pos[k] *= z[k];
        }
        let t = contour(neg.iter().copied(), &w);
        let v = contour(pos.iter().copied(), &w);
        cv.set_t(n, t);
        cv.set_v(n, v);
        cv.set_t(-n, -t.conj());
        cv.set_v(-n, -v.conj());
    }
    let mut interior = 0.0;
    for k in 0..m {
        let jac = (z[k].conj() * w[k] * dz[k]).re;
        if !(jac > 0.0) {
            return Err(Error::CurveNotClosedToTolerance(format!("curve is not star-shaped about 0 near node {k}")));
        }
        interior += jac * (0.5 * z[k].norm().ln() - 0.25);
    }
    interior *= 2.0 * PI / m as f64;
    cv.set_v(0, C64::new(-0.5 - interior / PI, 0.0));
    cv.c0 = cv.t(0);
    Ok(cv)
}

/// The pair `(1/g(1/z), 1/f(1/z))` obtained by exchanging inside and outside.
pub fn swap_pair(pair: &UnivalentPair, order: usize) -> Result<UnivalentPair> {
    if let Some(t) = pair.exact() {
        let swapped = MobiusTriple { a: t.c / t.b, b: t.b, c: t.a * t.b };
        return UnivalentPair::from_mobius(swapped, order, pair.role());
    }
    let n = order as i64;
    // g(1/z) = b/z + b_0 + b_1 z + ..., f(1/z) = a_1/z + a_2/z^2 + ...
    let g_flip = TruncatedSeries::from_terms(
        order,
        &std::iter::once((-1, pair.g_lead()))
            .chain(pair.g_coeffs().iter().enumerate().map(|(i, c)| (i as i64, *c)))
            .collect::<Vec<_>>(),
    );
    let f_flip =
        TruncatedSeries::from_terms(order, &pair.f_series(order).terms().map(|(k, c)| (-k, c)).collect::<Vec<_>>());
    let ft = g_flip.recip(Expansion::Zero)?;
    let gt = f_flip.recip(Expansion::Infinity)?;
    let f = (1..=n).map(|k| ft.coeff(k)).collect();
    let g = (0..n).map(|k| gt.coeff(-k)).collect();
    let lead = ft.coeff(1).inv();
    UnivalentPair::new(f, lead, g, Role::Forward)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::welding::{mobius_weld, MobiusParams};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn identity_inverse_chart() {
        let p = MobiusParams::new(ZERO, 0.0).unwrap();
        let g = CircleHomeo::mobius(p, 8, 64).unwrap();
        let s = mobius_weld(p, 8, 64).unwrap();
        let cv = inverse_chart(&g, &s, 8).unwrap();
        for n in -8i64..=8 {
            let t = if n == 0 { ONE } else { ZERO };
            let v = if n == 0 { -ONE } else { ZERO };
            assert!((cv.t(n) - t).norm() < 1e-14, "t{n}");
            assert!((cv.v(n) - v).norm() < 1e-14, "v{n}");
        }
    }

    #[test]
    fn mobius_inverse_chart_numbers() {
        let p = MobiusParams::new(c(0.3, 0.0), 0.0).unwrap();
        let g = CircleHomeo::mobius(p, 16, 256).unwrap();
        let s = mobius_weld(p, 16, 256).unwrap();
        let cv = inverse_chart(&g, &s, 16).unwrap();
        assert!((cv.t(1) + 0.3).norm() < 1e-12);
        assert!((cv.t(0) - 0.91).norm() < 1e-12);
        assert!((cv.t(-1) + 0.3).norm() < 1e-12);
        assert!((cv.v(1) - 0.273).norm() < 1e-12);
        assert!((cv.v(-1) - 0.273).norm() < 1e-12);
        for n in 2..=16 {
            assert!(cv.t(n).norm() < 1e-12 && cv.t(-n).norm() < 1e-12);
        }
        let v0 = 0.91 * 0.91f64.ln() - 0.91 - 0.09;
        assert!((cv.v(0) - v0).norm() < 1e-12, "{}", cv.v(0));
        assert!((cv.c0 - cv.t(0)).norm() < 1e-12);
        // the pointwise-composition route agrees on the welded pair
        let cv2 = inverse_chart_of_pair(&s.pair, 16, 256).unwrap();
        for n in -16i64..=16 {
            assert!((cv.t(n) - cv2.t(n)).norm() < 1e-11);
            assert!((cv.v(n) - cv2.v(n)).norm() < 1e-11);
        }
    }

    #[test]
    fn mobius_direct_chart_numbers() {
        let s = mobius_weld(MobiusParams::new(c(0.3, 0.0), 0.0).unwrap(), 16, 256).unwrap();
        let cv = direct_chart(&s.pair, 16, 256, Chart::Direct).unwrap();
        let r = 0.3 / 0.91f64.sqrt();
        assert!((cv.t(1) - r).norm() < 1e-12);
        assert!((cv.t(0) - 1.0 / 0.91).norm() < 1e-12);
        assert!((cv.t(-1) - r).norm() < 1e-12);
        assert!((cv.v(1) + r / 0.91).norm() < 1e-12);
        for n in 2..=16 {
            assert!(cv.t(n).norm() < 1e-12 && cv.t(-n).norm() < 1e-12);
        }
        let id = mobius_weld(MobiusParams::new(ZERO, 0.0).unwrap(), 8, 64).unwrap();
        let cv = direct_chart(&id.pair, 8, 64, Chart::Direct).unwrap();
        assert!((cv.t(0) - 1.0).norm() < 1e-15 && (cv.v(0) + 1.0).norm() < 1e-15);
    }

    #[test]
    fn direct_chart_detects_vanishing_f() {
        let p = UnivalentPair::new(vec![c(1e-9, 0.0)], c(1e9, 0.0), vec![ZERO], Role::Forward).unwrap();
        assert!(matches!(direct_chart(&p, 4, 64, Chart::Extended), Err(Error::FVanishesOnCircle(_))));
    }

    #[test]
    fn cauchy_data_of_mobius() {
        let s = mobius_weld(MobiusParams::new(c(0.3, 0.0), 0.0).unwrap(), 16, 256).unwrap();
        let cv = direct_chart(&s.pair, 32, 256, Chart::Direct).unwrap();
        let cd = cauchy_data(&s.pair, 32, 256).unwrap();
        assert!((cd.s_plus.coeff(0) - 0.3 / 0.91f64.sqrt()).norm() < 1e-10);
        assert!(cd.coefficient_residual(&cv.truncated(16)) < 1e-9);
        // the series are centred at 0, so the jump check wants a nearly round curve
        let s = mobius_weld(MobiusParams::new(c(0.1, 0.05), 0.4).unwrap(), 16, 256).unwrap();
        let cd = cauchy_data(&s.pair, 24, 256).unwrap();
        let (a, b) = cd.jump_residual(&s.pair, 256);
        assert!(a < 1e-9 && b < 1e-9, "{a} {b}");
        let id = mobius_weld(MobiusParams::new(ZERO, 0.0).unwrap(), 8, 64).unwrap();
        let cd = cauchy_data(&id.pair, 8, 64).unwrap();
        assert!(cd.s_plus.max_abs() < 1e-12);
        assert!((cd.s_minus.coeff(-1) + 1.0).norm() < 1e-12);
    }

    #[test]
    fn potentials_carry_v() {
        let s = mobius_weld(MobiusParams::new(c(0.2, 0.1), 0.3).unwrap(), 8, 64).unwrap();
        let cv = direct_chart(&s.pair, 4, 64, Chart::Direct).unwrap();
        let gp = GeneratingPotentials::new(&cv);
        assert!((gp.psi.coeff(2) - cv.v(-2) / 2.0).norm() < 1e-15);
        assert!((gp.phi.coeff(-3) - cv.v(3) / 3.0).norm() < 1e-15);
    }

    #[test]
    fn unit_circle_moments() {
        let cv = wz_moments(&TruncatedSeries::identity(8), 8, 64).unwrap();
        assert!((cv.t(0) - 1.0).norm() < 1e-14);
        assert!(cv.v(0).norm() < 1e-14);
        for n in 1..=8 {
            assert!(cv.t(n).norm() < 1e-14);
        }
        let r = 1.7;
        let cv = wz_moments(&TruncatedSeries::monomial(8, 1, c(r, 0.0)), 8, 64).unwrap();
        assert!((cv.t(0) - r * r).norm() < 1e-13);
    }

    #[test]
    fn swap_of_mobius_matches_series_route() {
        let p = UnivalentPair::mobius(c(0.25, 0.1), 0.9, 40).unwrap();
        let plain =
            UnivalentPair::new(p.f_coeffs().to_vec(), p.g_lead(), p.g_coeffs().to_vec(), Role::Forward).unwrap();
        let a = swap_pair(&p, 40).unwrap();
        let b = swap_pair(&plain, 40).unwrap();
        for w in nodes(16) {
            assert!((a.eval_f(w) - b.eval_f(w)).norm() < 1e-12);
            assert!((a.eval_g(w) - b.eval_g(w)).norm() < 1e-12);
        }
    }

    #[test]
    fn swap_reverses_orientation() {
        let p = UnivalentPair::mobius(c(0.25, 0.1), 0.9, 40).unwrap();
        let q = p.perturbed(&[ZERO, c(0.02, 0.01), c(-0.01, 0.0)], &[c(0.01, 0.0), c(0.0, 0.02)]).unwrap();
        for pair in [p, q] {
            let a = direct_chart(&pair, 8, 256, Chart::Extended).unwrap();
            let b = direct_chart(&swap_pair(&pair, 48).unwrap(), 8, 256, Chart::Extended).unwrap();
            assert!((b.t(0) - a.t(0)).norm() < 1e-12);
            assert!((b.v(0) - a.v(0)).norm() < 1e-12);
            for n in (-8i64..=8).filter(|&n| n != 0) {
                assert!((b.t(n) + a.t(-n)).norm() < 1e-12, "t{n}");
                assert!((b.v(n) + a.v(-n)).norm() < 1e-12, "v{n}");
            }
        }
    }

    #[test]
    fn coordinate_json_round_trip() {
        let s = mobius_weld(MobiusParams::new(c(0.2, 0.1), 0.3).unwrap(), 8, 64).unwrap();
        let cv = direct_chart(&s.pair, 3, 64, Chart::Direct).unwrap();
        let text = serde_json::to_string(&cv).unwrap();
        let back: CoordinateVector = serde_json::from_str(&text).unwrap();
        assert_eq!(back.t_all(), cv.t_all());
        assert_eq!(back.v_all(), cv.v_all());
    }
}
