//! Free energy `F = log tau` in each chart, and finite-difference probes of
//! its first and second derivatives.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::coords::{compositions_on_circle, Chart, CoordinateVector};
use crate::error::{Error, Result};
use crate::family::{chart_invert_with, shifted_target, ChartFamily, FamilyPoint, InvertOptions, Linearization};
use crate::grunsky::{grunsky_to_order, GrunskyMatrix};
use crate::pair::UnivalentPair;
use crate::series::{nodes, C64, ZERO};

/// `(1/2 pi i) \oint h dw` from node samples.
fn contour(h: impl Iterator<Item = C64>, w: &[C64]) -> C64 {
    h.zip(w).map(|(h, w)| h * w).sum::<C64>() / w.len() as f64
}

/// `w phi'(w) + 2 phi(w)` with `phi = sum v_n/n w^{-n}`, and
/// `z psi'(z) - 2 psi(z)` with `psi = sum v_{-n}/n z^n`.
fn phi_term(cv: &CoordinateVector, z: C64) -> C64 {
    let zi = z.inv();
    let mut pow = ZERO + 1.0;
    let mut acc = ZERO;
    for n in 1..=cv.order() as i64 {
        pow *= zi;
        acc += cv.v(n) * (2 - n) as f64 / n as f64 * pow;
    }
    acc
}

fn psi_term(cv: &CoordinateVector, z: C64) -> C64 {
    let mut pow = ZERO + 1.0;
    let mut acc = ZERO;
    for n in 1..=cv.order() as i64 {
        pow *= z;
        acc += cv.v(-n) * (n - 2) as f64 / n as f64 * pow;
    }
    acc
}

fn base_part(cv: &CoordinateVector) -> C64 {
    2.0 * cv.t(0) * cv.v(0) - cv.t(0) * cv.t(0)
}

/// Inverse-chart `log tau` from samples of `gamma` and `gamma^{-1}`.
pub fn log_tau_inverse_from_samples(gamma: &[C64], gamma_inv: &[C64], cv: &CoordinateVector) -> C64 {
    let w = nodes(gamma.len());
    let first = contour(gamma_inv.iter().zip(&w).map(|(gi, w)| phi_term(cv, *w) / gi), &w);
    let second = contour(gamma.iter().zip(&w).map(|(g, w)| g / (w * w) * psi_term(cv, *w)), &w);
    (base_part(cv) + first + second) / 4.0
}

/// Inverse-chart `log tau` of a pair, with `gamma = g^{-1} o f` formed on `m`
/// nodes.
pub fn log_tau_inverse(pair: &UnivalentPair, cv: &CoordinateVector, m: usize) -> Result<C64> {
    let (gamma, gamma_inv) = compositions_on_circle(pair, m)?;
    Ok(log_tau_inverse_from_samples(&gamma, &gamma_inv, cv))
}

/// Direct-chart `log tau`, with both curve integrals pulled back to the circle.
pub fn log_tau_direct(pair: &UnivalentPair, cv: &CoordinateVector, m: usize) -> Result<C64> {
    let w = nodes(m);
    let mut f = Vec::with_capacity(m);
    for &z in &w {
        let v = pair.eval_f(z);
        if !(v.norm() > 1e-8) {
            return Err(Error::FVanishesOnCircle(v.norm()));
        }
        f.push(v);
    }
    let g: Vec<C64> = w.iter().map(|&z| pair.eval_g(z)).collect();
    let first = contour((0..m).map(|k| pair.eval_dg(w[k]) / f[k] * phi_term(cv, g[k])), &w);
    let second = contour((0..m).map(|k| g[k] * pair.eval_df(w[k]) / (f[k] * f[k]) * psi_term(cv, f[k])), &w);
    Ok((base_part(cv) + first + second) / 4.0)
}

/// The real free energy on free pairs: the direct expression plus its
/// conjugate.
pub fn log_tau_extended(pair: &UnivalentPair, cv: &CoordinateVector, m: usize) -> Result<f64> {
    Ok(2.0 * log_tau_direct(pair, cv, m)?.re)
}

/// `(2 t0 v0 - t0^2 - sum (n-2)(t_n v_n + t_{-n} v_{-n})) / 4` over `|n| <= N`.
pub fn log_tau_explicit(cv: &CoordinateVector) -> C64 {
    let mut acc = base_part(cv);
    for n in 1..=cv.order() as i64 {
        acc -= (n - 2) as f64 * (cv.t(n) * cv.v(n) + cv.t(-n) * cv.v(-n));
    }
    acc / 4.0
}

/// `log tau` at a family point in the family's chart. The extended value is
/// real and returned with zero imaginary part.
pub fn free_energy(family: &ChartFamily, point: &FamilyPoint) -> Result<C64> {
    let m = family.grid();
    match family.chart() {
        Chart::Inverse => log_tau_inverse(&point.pair, &point.coords, m),
        Chart::Direct => log_tau_direct(&point.pair, &point.coords, m),
        Chart::Extended => Ok(C64::new(log_tau_extended(&point.pair, &point.coords, m)?, 0.0)),
        Chart::Wz => Err(Error::InvalidInput("no free energy for harmonic moments".into())),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FreeEnergyRecord {
    pub chart: Chart,
    pub log_tau: (f64, f64),
    /// `(n, re v_n, im v_n)`.
    pub gradient: Vec<(i64, f64, f64)>,
    pub hessian: Option<HessianRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HessianRecord {
    pub indices: Vec<i64>,
    /// Row-major `[re, im]` entries.
    pub entries: Vec<Vec<[f64; 2]>>,
}

impl FreeEnergyRecord {
    pub fn new(chart: Chart, log_tau: C64, cv: &CoordinateVector, hessian: Option<&Hessian>) -> Self {
        let k = cv.order() as i64;
        Self {
            chart,
            log_tau: (log_tau.re, log_tau.im),
            gradient: (-k..=k).map(|n| (n, cv.v(n).re, cv.v(n).im)).collect(),
            hessian: hessian.map(|h| HessianRecord {
                indices: h.indices.clone(),
                entries: (0..h.indices.len())
                    .map(|i| (0..h.indices.len()).map(|j| [h.matrix[(i, j)].re, h.matrix[(i, j)].im]).collect())
                    .collect(),
            }),
        }
    }
}

/// Evaluates `log tau` at chart-shifted points around one base point, sharing
/// the chart Jacobian.
pub struct Prober<'a> {
    family: &'a ChartFamily,
    base: FamilyPoint,
    lin: Linearization,
    opts: InvertOptions,
}

impl<'a> Prober<'a> {
    pub fn new(family: &'a ChartFamily, opts: InvertOptions) -> Result<Self> {
        let base = family.base_point()?;
        let lin = Linearization::at(family, &base)?;
        Ok(Self { family, base, lin, opts })
    }

    pub fn base(&self) -> &FamilyPoint {
        &self.base
    }

    pub fn family(&self) -> &ChartFamily {
        self.family
    }

    /// The family point with `t_n += dt` for each listed shift, other times fixed.
    pub fn point(&self, shifts: &[(i64, C64)]) -> Result<FamilyPoint> {
        if shifts.iter().all(|s| s.1 == ZERO) {
            return Ok(self.base.clone());
        }
        let target = shifted_target(&self.base, shifts);
        Ok(chart_invert_with(self.family, &target, &self.base, &self.lin, self.opts)?.0)
    }

    pub fn energy(&self, shifts: &[(i64, C64)]) -> Result<C64> {
        free_energy(self.family, &self.point(shifts)?)
    }
}

/// Holomorphic derivative along `t_n` of a function of the times, by a
/// central difference with a real step; for a real function the Wirtinger
/// derivative `(d_x - i d_y)/2` is formed from real and imaginary steps.
fn first_derivative(p: &Prober, n: i64, h: f64, real: bool) -> Result<C64> {
    let d = |step: C64| -> Result<C64> { Ok((p.energy(&[(n, step)])? - p.energy(&[(n, -step)])?) / (2.0 * h)) };
    let dx = d(C64::new(h, 0.0))?;
    if !real {
        return Ok(dx);
    }
    let dy = d(C64::new(0.0, h))?;
    Ok((dx - C64::i() * dy) / 2.0)
}

fn second_derivative(p: &Prober, m: i64, n: i64, h: f64, real: bool) -> Result<C64> {
    let mixed = |sm: C64, sn: C64| -> Result<C64> {
        if m == n {
            let e = |s: C64| p.energy(&[(m, s)]);
            // step sm along t_m twice; with sn = i sm this is the d_x d_y stencil
            if sn == sm {
                return Ok((e(sm)? - 2.0 * p.energy(&[])? + e(-sm)?) / (h * h));
            }
            let e2 = |a: C64, b: C64| p.energy(&[(m, a + b)]);
            return Ok((e2(sm, sn)? - e2(sm, -sn)? - e2(-sm, sn)? + e2(-sm, -sn)?) / (4.0 * h * h));
        }
        let e2 = |a: C64, b: C64| p.energy(&[(m, a), (n, b)]);
        Ok((e2(sm, sn)? - e2(sm, -sn)? - e2(-sm, sn)? + e2(-sm, -sn)?) / (4.0 * h * h))
    };
    let hr = C64::new(h, 0.0);
    let xx = mixed(hr, hr)?;
    if !real {
        return Ok(xx);
    }
    let xy = mixed(hr, C64::new(0.0, h))?;
    // F = H + conj H: d_x d_x F = 2 Re H'', d_x d_y F = -2 Im H''
    Ok((xx - C64::i() * xy) / 2.0)
}

fn richardson(d: impl Fn(f64) -> Result<C64>, h: f64) -> Result<C64> {
    let coarse = d(h)?;
    let fine = d(h / 2.0)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// `d log tau / d t_n` for each `n`, central differences with Richardson
/// extrapolation.
pub fn gradient_fd(p: &Prober, indices: &[i64], h: f64) -> Result<Vec<C64>> {
    let real = p.family().chart() == Chart::Extended;
    indices.par_iter().map(|&n| richardson(|s| first_derivative(p, n, s, real), h)).collect()
}

#[derive(Debug, Clone)]
pub struct Hessian {
    pub indices: Vec<i64>,
    pub matrix: DMatrix<C64>,
}

impl Hessian {
    /// `max |H_ij - H_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let k = self.indices.len();
        let mut r = 0.0f64;
        for i in 0..k {
            for j in 0..k {
                r = r.max((self.matrix[(i, j)] - self.matrix[(j, i)]).norm());
            }
        }
        r
    }

    /// `max |H - other| / max |other|`.
    pub fn relative_error(&self, other: &Hessian) -> f64 {
        let scale = other.matrix.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        let diff = self.matrix.iter().zip(other.matrix.iter()).fold(0.0f64, |a, (x, y)| a.max((x - y).norm()));
        diff / scale
    }
}

/// Second derivatives of `log tau` over `indices x indices`, central second
/// differences with Richardson extrapolation from `h` and `h/2`. Only the
/// upper triangle is probed.
pub fn hessian_fd(p: &Prober, indices: &[i64], h: f64) -> Result<Hessian> {
    let real = p.family().chart() == Chart::Extended;
    let k = indices.len();
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i..k).map(move |j| (i, j))).collect();
    let vals: Vec<C64> = pairs
        .par_iter()
        .map(|&(i, j)| richardson(|s| second_derivative(p, indices[i], indices[j], s, real), h))
        .collect::<Result<_>>()?;
    let mut matrix = DMatrix::from_element(k, k, ZERO);
    for (&(i, j), v) in pairs.iter().zip(vals) {
        matrix[(i, j)] = v;
        matrix[(j, i)] = v;
    }
    Ok(Hessian { indices: indices.to_vec(), matrix })
}

/// The Hessian predicted by Grunsky coefficients: `-|mn| b_{m,n}`,
/// `|m| b_{m,0}`, `-2 b_{0,0}`.
pub fn hessian_from_grunsky(b: &GrunskyMatrix, indices: &[i64]) -> Hessian {
    let k = indices.len();
    let mut matrix = DMatrix::from_element(k, k, ZERO);
    for (i, &m) in indices.iter().enumerate() {
        for (j, &n) in indices.iter().enumerate() {
            matrix[(i, j)] = match (m, n) {
                (0, 0) => -2.0 * b.get(0, 0),
                (m, 0) => m.abs() as f64 * b.get(m, 0),
                (0, n) => n.abs() as f64 * b.get(n, 0),
                (m, n) => -((m * n).abs() as f64) * b.get(m, n),
            };
        }
    }
    Hessian { indices: indices.to_vec(), matrix }
}

/// Grunsky matrix whose entries the chart's Hessian reproduces: that of
/// `(f, g)` for the inverse chart, of `(f^{-1}, g^{-1})` otherwise.
pub fn chart_grunsky(pair: &UnivalentPair, chart: Chart, order: usize) -> Result<GrunskyMatrix> {
    let window = pair.window().max(2 * order + 2);
    match chart {
        Chart::Inverse => {
            let wide = pair.perturbed(&vec![ZERO; window], &vec![ZERO; window])?;
            grunsky_to_order(&wide, order)
        }
        _ => grunsky_to_order(&pair.inverse(window)?, order),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coords::{direct_chart, inverse_chart};
    use crate::welding::{mobius_weld, CircleHomeo, MobiusParams};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn identity_is_minus_three_quarters() {
        let p = MobiusParams::new(ZERO, 0.0).unwrap();
        let s = mobius_weld(p, 8, 64).unwrap();
        let g = CircleHomeo::mobius(p, 8, 64).unwrap();
        let cv = inverse_chart(&g, &s, 8).unwrap();
        assert!((log_tau_inverse(&s.pair, &cv, 64).unwrap() + 0.75).norm() < 1e-14);
        let cv = direct_chart(&s.pair, 8, 64, Chart::Direct).unwrap();
        assert!((log_tau_direct(&s.pair, &cv, 64).unwrap() + 0.75).norm() < 1e-14);
        assert!((log_tau_extended(&s.pair, &cv, 64).unwrap() + 1.5).abs() < 1e-14);
    }

    #[test]
    fn mobius_inverse_value() {
        let p = MobiusParams::new(c(0.3, 0.0), 0.0).unwrap();
        let s = mobius_weld(p, 16, 256).unwrap();
        let g = CircleHomeo::mobius(p, 16, 256).unwrap();
        let cv = inverse_chart(&g, &s, 16).unwrap();
        let lt = log_tau_inverse(&s.pair, &cv, 256).unwrap();
        assert!((lt - (-0.742_024_3)).norm() < 1e-6, "{lt}");
        assert!((lt - log_tau_explicit(&cv)).norm() < 1e-12);
    }

    #[test]
    fn quadrature_matches_explicit_sum_direct() {
        let s = mobius_weld(MobiusParams::new(c(0.2, -0.1), 1.1).unwrap(), 16, 256).unwrap();
        let cv = direct_chart(&s.pair, 24, 256, Chart::Direct).unwrap();
        let lt = log_tau_direct(&s.pair, &cv, 256).unwrap();
        assert!((lt - log_tau_explicit(&cv)).norm() < 1e-12);
    }

    #[test]
    fn grunsky_hessian_layout() {
        let pair = UnivalentPair::mobius(c(0.3, 0.0), 0.0, 16).unwrap();
        let b = chart_grunsky(&pair, Chart::Inverse, 3).unwrap();
        let h = hessian_from_grunsky(&b, &[-1, 0, 1]);
        assert!((h.matrix[(1, 1)] - 0.91f64.ln()).norm() < 1e-12);
        assert!((h.matrix[(0, 2)] + 0.91).norm() < 1e-12);
    }
}
