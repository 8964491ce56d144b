//! Conformal welding of circle homeomorphisms: `gamma = g^{-1} o f` on the unit circle.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pair::{MobiusTriple, Role, UnivalentPair};
use crate::series::{check_grid, nodes, CircleGrid, TruncatedSeries, C64, ONE, ZERO};

/// Largest `|a|` accepted for Möbius parameters.
pub const MOBIUS_RADIUS_GUARD: f64 = 0.9;

/// Disc automorphism `e^{-i alpha} (z + conj a) / (1 + a z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobiusParams {
    a: C64,
    alpha: f64,
}

impl MobiusParams {
    pub fn new(a: C64, alpha: f64) -> Result<Self> {
        if !(a.norm() <= MOBIUS_RADIUS_GUARD) || !alpha.is_finite() {
            return Err(Error::InvalidInput(format!(
                "Möbius parameter |a| = {} exceeds {MOBIUS_RADIUS_GUARD}",
                a.norm()
            )));
        }
        Ok(Self { a, alpha })
    }

    pub fn a(&self) -> C64 {
        self.a
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn eval(&self, z: C64) -> C64 {
        C64::from_polar(1.0, -self.alpha) * (z + self.a.conj()) / (ONE + self.a * z)
    }

    pub fn eval_inverse(&self, z: C64) -> C64 {
        let e = C64::from_polar(1.0, self.alpha);
        (e * z - self.a.conj()) / (ONE - self.a * e * z)
    }

    pub fn triple(&self) -> MobiusTriple {
        MobiusTriple::disc(self.a, self.alpha)
    }
}

/// Serializable description of a circle homeomorphism.
///
/// `fourier` lists `[n, re, im]` for `gamma(w) = sum c_n w^{n+1}`.
/// `perturbed_mobius` reparametrizes the angle of its base map:
/// `gamma(e^{i theta}) = base(e^{i phi(theta)})` with
/// `phi(theta) = theta + sum Re(eps_n e^{i n theta})` over `[n, re, im]` modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum HomeoSpec {
    Mobius { a: [f64; 2], alpha: f64 },
    Fourier { coeffs: Vec<(i64, f64, f64)> },
    PerturbedMobius { base: Box<HomeoSpec>, modes: Vec<(i64, f64, f64)> },
}

#[derive(Debug, Clone)]
enum Map {
    Mobius(MobiusParams),
    Series(TruncatedSeries),
    Perturbed { base: Box<Map>, modes: Vec<(i64, C64)> },
}

impl Map {
    fn from_spec(spec: &HomeoSpec) -> Result<Self> {
        Ok(match spec {
            HomeoSpec::Mobius { a, alpha } => Map::Mobius(MobiusParams::new(C64::new(a[0], a[1]), *alpha)?),
            HomeoSpec::Fourier { coeffs } => {
                let order = coeffs.iter().map(|(n, _, _)| (n + 1).unsigned_abs() as usize).max().unwrap_or(1);
                let terms: Vec<(i64, C64)> = coeffs.iter().map(|&(n, re, im)| (n + 1, C64::new(re, im))).collect();
                Map::Series(TruncatedSeries::from_terms(order, &terms))
            }
            HomeoSpec::PerturbedMobius { base, modes } => Map::Perturbed {
                base: Box::new(Map::from_spec(base)?),
                modes: modes.iter().map(|&(n, re, im)| (n, C64::new(re, im))).collect(),
            },
        })
    }

    fn eval(&self, theta: f64) -> C64 {
        match self {
            Map::Mobius(p) => p.eval(C64::from_polar(1.0, theta)),
            Map::Series(s) => s.eval(C64::from_polar(1.0, theta)),
            Map::Perturbed { base, modes } => {
                let shift: f64 = modes.iter().map(|(n, e)| (e * C64::from_polar(1.0, *n as f64 * theta)).re).sum();
                base.eval(theta + shift)
            }
        }
    }
}

/// A sampled orientation-preserving homeomorphism of the unit circle.
#[derive(Debug, Clone)]
pub struct CircleHomeo {
    map: Map,
    order: usize,
    samples: Vec<C64>,
    fourier: TruncatedSeries,
    inverse: OnceLock<std::result::Result<Vec<C64>, Error>>,
}

impl CircleHomeo {
    pub fn from_spec(spec: &HomeoSpec, order: usize, grid: usize) -> Result<Self> {
        Self::build(Map::from_spec(spec)?, order, grid)
    }

    pub fn mobius(p: MobiusParams, order: usize, grid: usize) -> Result<Self> {
        Self::build(Map::Mobius(p), order, grid)
    }

    pub fn identity(order: usize, grid: usize) -> Result<Self> {
        Self::mobius(MobiusParams::new(ZERO, 0.0)?, order, grid)
    }

    /// Homeomorphism known only through its values at the grid nodes.
    pub fn from_samples(samples: Vec<C64>, order: usize) -> Result<Self> {
        let m = samples.len();
        let series = CircleGrid::from_samples(samples)?.fourier(m / 2 - 1);
        Self::build(Map::Series(series), order, m)
    }

    fn build(map: Map, order: usize, grid: usize) -> Result<Self> {
        check_grid(grid, order)?;
        let samples: Vec<C64> = (0..grid).map(|k| map.eval(2.0 * PI * k as f64 / grid as f64)).collect();
        check_circle_valued(&samples)?;
        lifted_angles(&samples)?;
        let fourier = CircleGrid::from_samples(samples.clone())?.fourier(order);
        Ok(Self { map, order, samples, fourier, inverse: OnceLock::new() })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn grid(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    /// `gamma` as a Laurent series in `w` (window `[-N, N]`).
    pub fn series(&self) -> &TruncatedSeries {
        &self.fourier
    }

    /// `c_n` in `gamma(w) = sum c_n w^{n+1}`.
    pub fn c(&self, n: i64) -> C64 {
        self.fourier.coeff(n + 1)
    }

    pub fn eval_angle(&self, theta: f64) -> C64 {
        self.map.eval(theta)
    }

    pub fn mobius_params(&self) -> Option<MobiusParams> {
        match self.map {
            Map::Mobius(p) => Some(p),
            _ => None,
        }
    }

    /// Samples of `gamma^{-1}` at the grid nodes, computed on first use.
    pub fn inverse_samples(&self) -> Result<&[C64]> {
        self.inverse.get_or_init(|| invert_circle_map(self)).as_ref().map(|v| v.as_slice()).map_err(Clone::clone)
    }
}

fn check_circle_valued(samples: &[C64]) -> Result<()> {
    for (k, z) in samples.iter().enumerate() {
        let d = (z.norm() - 1.0).abs();
        if !(d <= 1e-10) {
            return Err(Error::NotAHomeomorphism(format!("|gamma| - 1 = {d:e} at node {k}")));
        }
    }
    Ok(())
}

/// Continuous argument of the samples, starting in `(-pi, pi]`, after
/// checking it increases strictly and winds once.
fn lifted_angles(samples: &[C64]) -> Result<Vec<f64>> {
    let m = samples.len();
    let mut out = Vec::with_capacity(m + 1);
    out.push(samples[0].arg());
    for k in 0..m {
        let step = (samples[(k + 1) % m] / samples[k]).arg();
        if !(step > 0.0) {
            return Err(Error::NotAHomeomorphism(format!("argument does not increase at node {k}")));
        }
        out.push(out[k] + step);
    }
    let winding = (out[m] - out[0]) / (2.0 * PI);
    if (winding - 1.0).abs() > 1e-6 {
        return Err(Error::NotAHomeomorphism(format!("winding number {winding}")));
    }
    Ok(out)
}

/// Samples of `gamma^{-1}` at the grid nodes by bracketing on the lifted
/// argument and a safeguarded secant refinement in each bracket.
pub fn invert_circle_map(gamma: &CircleHomeo) -> Result<Vec<C64>> {
    let m = gamma.grid();
    let lifted = lifted_angles(gamma.samples())?;
    let base = lifted[0];
    let h = 2.0 * PI / m as f64;
    (0..m)
        .into_par_iter()
        .map(|k| {
            let mut psi = h * k as f64;
            psi += 2.0 * PI * ((base - psi) / (2.0 * PI)).ceil();
            // bracket j: lifted[j] <= psi < lifted[j + 1]
            let j = lifted.partition_point(|&x| x <= psi).saturating_sub(1).min(m - 1);
            let target = C64::from_polar(1.0, -psi);
            let resid = |theta: f64| (gamma.eval_angle(theta) * target).arg();
            let (mut lo, mut hi) = (h * j as f64, h * (j + 1) as f64);
            let (mut flo, mut fhi) = (resid(lo), resid(hi));
            // gamma may carry a node onto a node; the endpoint residual is then
            // roundoff of either sign
            if flo.abs() <= 1e-14 {
                return Ok(C64::from_polar(1.0, lo));
            }
            if fhi.abs() <= 1e-14 {
                return Ok(C64::from_polar(1.0, hi));
            }
            if !(flo < 0.0 && fhi >= 0.0) {
                return Err(Error::NotAHomeomorphism(format!("no bracket for node {k}")));
            }
            let mut side = 0i8;
            for _ in 0..200 {
                // Illinois variant of regula falsi
                let mut x = (lo * fhi - hi * flo) / (fhi - flo);
                if !(x > lo && x < hi) {
                    x = 0.5 * (lo + hi);
                }
                let fx = resid(x);
                if fx.abs() < 1e-16 || hi - lo < 1e-15 {
                    return Ok(C64::from_polar(1.0, x));
                }
                if fx < 0.0 {
                    lo = x;
                    flo = fx;
                    if side == -1 {
                        fhi *= 0.5;
                    }
                    side = -1;
                } else {
                    hi = x;
                    fhi = fx;
                    if side == 1 {
                        flo *= 0.5;
                    }
                    side = 1;
                }
            }
            Ok(C64::from_polar(1.0, 0.5 * (lo + hi)))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct WeldingSolution {
    pub pair: UnivalentPair,
    /// `max_k |f(w_k) - g(gamma(w_k))|`.
    pub residual_sup: f64,
    pub newton_iters: usize,
    /// Samples of the welded curve `f(S^1)`.
    pub curve_samples: Vec<C64>,
}

fn residual_samples(pair: &UnivalentPair, gamma: &[C64]) -> Vec<C64> {
    let w = nodes(gamma.len());
    w.iter().zip(gamma).map(|(&w, &z)| pair.eval_f(w) - pair.eval_g(z)).collect()
}

fn solution(pair: UnivalentPair, gamma: &[C64], newton_iters: usize) -> WeldingSolution {
    let residual_sup = residual_samples(&pair, gamma).iter().fold(0.0f64, |m, r| m.max(r.norm()));
    let curve_samples = pair.f_on_circle(gamma.len());
    WeldingSolution { pair, residual_sup, newton_iters, curve_samples }
}

/// Exact welding of a disc automorphism, coefficients expanded to `order`.
pub fn mobius_weld(p: MobiusParams, order: usize, grid: usize) -> Result<WeldingSolution> {
    check_grid(grid, order)?;
    let pair = UnivalentPair::mobius(p.a, p.alpha, order.max(1))?;
    let gamma: Vec<C64> = nodes(grid).into_iter().map(|w| p.eval(w)).collect();
    Ok(solution(pair, &gamma, 0))
}

/// Least-squares Möbius fit `gamma (1 + a w) ~ beta w + delta` of the samples.
pub fn fit_mobius(gamma: &CircleHomeo) -> MobiusParams {
    let w = nodes(gamma.grid());
    let s = gamma.samples();
    let a = DMatrix::from_fn(s.len(), 3, |k, j| match j {
        0 => s[k] * w[k],
        1 => -w[k],
        _ => -ONE,
    });
    let rhs = DVector::from_iterator(s.len(), s.iter().map(|z| -z));
    let ah = a.adjoint();
    let sol = (&ah * &a).lu().solve(&(&ah * rhs));
    let fallback = MobiusParams { a: ZERO, alpha: 0.0 };
    let Some(x) = sol else { return fallback };
    let (beta, delta) = (x[1], x[2]);
    if !(beta.norm() > 1e-12) {
        return fallback;
    }
    let mut a_fit = (delta / beta).conj();
    if a_fit.norm() > MOBIUS_RADIUS_GUARD {
        a_fit *= MOBIUS_RADIUS_GUARD / a_fit.norm();
    }
    MobiusParams { a: a_fit, alpha: -beta.arg() }
}

#[derive(Debug, Clone, Copy)]
pub struct WeldOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for WeldOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 50 }
    }
}

/// Welds `gamma` starting from its Möbius fit.
pub fn weld(gamma: &CircleHomeo, opts: WeldOptions) -> Result<WeldingSolution> {
    let fit = fit_mobius(gamma);
    let init = UnivalentPair::mobius(fit.a, fit.alpha, gamma.order())?;
    weld_from(gamma, &init, opts)
}

/// Levenberg-Marquardt on the Fourier modes `[-N, N]` of `f(w) - g(gamma(w))`.
///
/// Unknowns are `a_1..a_N, b_0..b_N` with `b = 1/a_1`. The residual is
/// holomorphic in them, so the normal equations are formed with the complex
/// Jacobian directly.
pub fn weld_from(gamma: &CircleHomeo, init: &UnivalentPair, opts: WeldOptions) -> Result<WeldingSolution> {
    let n = gamma.order();
    let m = gamma.grid();
    let gs = gamma.samples();
    let dim = 2 * n + 1;
    let mode_idx = |j: i64| (j + n as i64) as usize;

    // modes of gamma and of gamma^{-k}, k = 0..N, in the window
    let project = |vals: Vec<C64>| -> Result<TruncatedSeries> { Ok(CircleGrid::from_samples(vals)?.fourier(n)) };
    let gamma_modes = project(gs.to_vec())?;
    let inv_pows: Vec<Vec<C64>> = {
        let inv: Vec<C64> = gs.iter().map(|z| z.inv()).collect();
        let mut cur = vec![ONE; m];
        let mut out = Vec::with_capacity(n + 1);
        for _ in 0..=n {
            out.push(cur.clone());
            cur = cur.iter().zip(&inv).map(|(a, b)| a * b).collect();
        }
        out
    };
    let inv_modes: Vec<TruncatedSeries> = inv_pows.iter().map(|v| project(v.clone())).collect::<Result<_>>()?;

    let mut x: Vec<C64> = (0..n).map(|i| init.f_coeffs().get(i).copied().unwrap_or(ZERO)).collect();
    x.extend((0..=n).map(|i| init.g_coeffs().get(i).copied().unwrap_or(ZERO)));

    let unpack = |x: &[C64]| -> Result<UnivalentPair> {
        UnivalentPair::new(x[..n].to_vec(), x[0].inv(), x[n..].to_vec(), Role::Forward)
    };
    let projected = |x: &[C64]| -> DVector<C64> {
        let mut r = DVector::from_element(dim, ZERO);
        for (i, a) in x[..n].iter().enumerate() {
            r[mode_idx(i as i64 + 1)] += a;
        }
        let b = x[0].inv();
        for j in -(n as i64)..=(n as i64) {
            let mut acc = b * gamma_modes.coeff(j);
            for (k, bk) in x[n..].iter().enumerate() {
                acc += bk * inv_modes[k].coeff(j);
            }
            r[mode_idx(j)] -= acc;
        }
        r
    };
    let sup_residual = |x: &[C64]| -> Result<(f64, f64)> {
        let pair = unpack(x)?;
        let res = residual_samples(&pair, gs);
        let sup = res.iter().fold(0.0f64, |a, r| a.max(r.norm()));
        let dense = CircleGrid::from_samples(res)?.fourier_dense();
        let high: f64 = dense.iter().filter(|(j, _)| j.unsigned_abs() as usize > n).map(|(_, c)| c.norm_sqr()).sum();
        Ok((sup, high.sqrt()))
    };

    // a stalled solve whose residual lives mostly outside the window is a
    // window that is too small, not a bad starting point
    let failure = |x: &[C64], in_window: f64, iterations: usize| -> Result<Error> {
        let (sup, high) = sup_residual(x)?;
        Ok(if high > 10.0 * opts.tol && in_window < high {
            Error::TruncationUndersized { energy: high }
        } else {
            Error::NoConvergence { iterations, residual: sup }
        })
    };

    let mut lambda = 1e-3;
    let mut r = projected(&x);
    for iter in 1..=opts.max_iter {
        let (sup, high) = sup_residual(&x)?;
        if sup < opts.tol {
            return Ok(solution(unpack(&x)?, gs, iter));
        }
        let rnorm = r.norm();
        if rnorm < 1e-3 * opts.tol {
            if high > 10.0 * opts.tol {
                return Err(Error::TruncationUndersized { energy: high });
            }
            return Err(Error::NoConvergence { iterations: iter, residual: sup });
        }
        let mut jac = DMatrix::from_element(dim, dim, ZERO);
        let a1 = x[0];
        for j in -(n as i64)..=(n as i64) {
            jac[(mode_idx(j), 0)] = gamma_modes.coeff(j) / (a1 * a1);
        }
        for i in 0..n {
            jac[(mode_idx(i as i64 + 1), i)] += ONE;
        }
        for k in 0..=n {
            for j in -(n as i64)..=(n as i64) {
                jac[(mode_idx(j), n + k)] = -inv_modes[k].coeff(j);
            }
        }
        let jh = jac.adjoint();
        let normal = &jh * &jac;
        let grad = &jh * &r;
        let scale = (0..dim).map(|i| normal[(i, i)].re).fold(0.0, f64::max).max(1e-300);
        let mut accepted = false;
        for _ in 0..12 {
            let mut a = normal.clone();
            for i in 0..dim {
                a[(i, i)] += lambda * scale;
            }
            let Some(step) = a.lu().solve(&(-&grad)) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<C64> = x.iter().zip(step.iter()).map(|(a, d)| a + d).collect();
            if trial[0].norm() < 1e-12 {
                lambda *= 10.0;
                continue;
            }
            let rt = projected(&trial);
            if rt.norm() < rnorm {
                x = trial;
                r = rt;
                lambda = (lambda * 0.3).max(1e-15);
                accepted = true;
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            return Err(failure(&x, r.norm(), iter)?);
        }
    }
    Err(failure(&x, r.norm(), opts.max_iter)?)
}

/// Recovers `gamma` at `grid` nodes by solving `g(e^{i theta}) = f(w_k)` for
/// `theta`, node by node with continuation.
pub fn gamma_from_pair(pair: &UnivalentPair, order: usize, grid: usize) -> Result<CircleHomeo> {
    check_grid(grid, order)?;
    let w = nodes(grid);
    let h = 2.0 * PI / grid as f64;
    let scale = pair.g_lead().norm();
    let solve = |target: C64, mut theta: f64, node: usize| -> Result<f64> {
        for _ in 0..60 {
            let e = C64::from_polar(1.0, theta);
            let res = pair.eval_g(e) - target;
            let jac = C64::i() * e * pair.eval_dg(e);
            let step = (jac.conj() * res).re / jac.norm_sqr();
            theta -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let res = (pair.eval_g(C64::from_polar(1.0, theta)) - target).norm();
        if !(res <= 1e-9 * scale.max(1.0)) {
            return Err(Error::NewtonStall { node });
        }
        Ok(theta)
    };
    // coarse search for the first node
    let t0 = pair.eval_f(ONE);
    let start = (0..grid)
        .map(|k| (k, (pair.eval_g(w[k]) - t0).norm()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(k, _)| h * k as f64)
        .unwrap_or(0.0);
    let mut thetas = Vec::with_capacity(grid);
    thetas.push(solve(t0, start, 0)?);
    for k in 1..grid {
        let guess = if k >= 2 { 2.0 * thetas[k - 1] - thetas[k - 2] } else { thetas[0] + h };
        thetas.push(solve(pair.eval_f(w[k]), guess, k)?);
    }
    let samples = thetas.into_iter().map(|t| C64::from_polar(1.0, t)).collect();
    CircleHomeo::from_samples(samples, order)
}
