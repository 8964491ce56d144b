//! Dispersionless Toda checks: Lax operators built from a pair, the Poisson
//! bracket in `(p, t_0)`, the Lax and string equations by finite differences
//! through the chart family, Orlov-Schulman functions and the
//! Riemann-Hilbert relations.

use serde::Serialize;

use crate::coords::{compositions_on_circle, Chart, CoordinateVector};
use crate::error::{Error, Result};
use crate::pair::UnivalentPair;
use crate::series::{nodes, Expansion, Part, TruncatedSeries, C64, ONE};
use crate::tau::Prober;

/// `L = r p + u_1 + u_2/p + ...` and `L~` with `1/L~ = r/p + ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaxPair {
    pub chart: Chart,
    pub l: TruncatedSeries,
    pub lt: TruncatedSeries,
    pub lt_inv: TruncatedSeries,
}

impl LaxPair {
    /// `(g, f)` for the direct and extended charts, `(g^{-1}, f^{-1})` for
    /// the inverse chart.
    pub fn of_pair(pair: &UnivalentPair, chart: Chart, order: usize) -> Result<Self> {
        let (l, lt) = match chart {
            Chart::Inverse => {
                let inv = pair.inverse(order)?;
                (inv.g_series(order), inv.f_series(order))
            }
            Chart::Direct | Chart::Extended => (pair.g_series(order), pair.f_series(order)),
            Chart::Wz => return Err(Error::InvalidInput("no Lax pair for harmonic moments".into())),
        };
        let lt_inv = lt.recip(Expansion::Zero)?;
        Ok(Self { chart, l, lt, lt_inv })
    }

    /// Common leading coefficient `r`.
    pub fn r(&self) -> C64 {
        self.l.coeff(1)
    }

    /// `|L_1 - (1/L~)_{-1}|`.
    pub fn leading_mismatch(&self) -> f64 {
        (self.l.coeff(1) - self.lt_inv.coeff(-1)).norm()
    }
}

/// `B_n = (L^n)_{>0} + (L^n)_0 / 2`.
pub fn b_operator(l: &TruncatedSeries, n: usize) -> Result<TruncatedSeries> {
    let ln = l.pow(n as i64, Expansion::Infinity)?;
    Ok(half_constant(&ln, Part::Pos))
}

/// `B~_n = (L~^{-n})_{<0} + (L~^{-n})_0 / 2`.
pub fn bt_operator(lt: &TruncatedSeries, n: usize) -> Result<TruncatedSeries> {
    let ln = lt.pow(-(n as i64), Expansion::Zero)?;
    Ok(half_constant(&ln, Part::Neg))
}

fn half_constant(s: &TruncatedSeries, part: Part) -> TruncatedSeries {
    let mut out = s.project(part);
    out.set(0, s.coeff(0) / 2.0);
    out
}

/// `p d/dp`, coefficientwise `k a_k`.
fn p_dp(s: &TruncatedSeries) -> TruncatedSeries {
    let mut out = TruncatedSeries::zeros(s.order());
    for (k, c) in s.terms() {
        out.set(k, c * k as f64);
    }
    out
}

/// `{A, B} = p A_p B_{t0} - p A_{t0} B_p`.
pub fn poisson(
    a: &TruncatedSeries,
    a_t0: &TruncatedSeries,
    b: &TruncatedSeries,
    b_t0: &TruncatedSeries,
) -> TruncatedSeries {
    &(&p_dp(a) * b_t0) - &(a_t0 * &p_dp(b))
}

/// Finite-difference report in the layout `{check, chart, base, n, h,
/// residual, h_half_residual, ratio}`.
#[derive(Debug, Clone, Serialize)]
pub struct FdReport {
    pub check: String,
    pub chart: Chart,
    pub base: String,
    pub n: Option<i64>,
    pub h: f64,
    pub residual: f64,
    pub h_half_residual: f64,
    pub ratio: f64,
}

impl FdReport {
    fn new(check: &str, chart: Chart, base: &str, n: Option<i64>, h: f64, r: f64, r2: f64) -> Self {
        Self { check: check.into(), chart, base: base.into(), n, h, residual: r, h_half_residual: r2, ratio: r / r2 }
    }
}

/// Lax pairs along one time direction, sampled at `t_n +- h`.
struct Stencil {
    plus: LaxPair,
    minus: LaxPair,
    h: f64,
}

impl Stencil {
    fn new(p: &Prober, n: i64, h: f64, order: usize) -> Result<Self> {
        let chart = p.family().chart();
        let plus = LaxPair::of_pair(&p.point(&[(n, C64::new(h, 0.0))])?.pair, chart, order)?;
        let minus = LaxPair::of_pair(&p.point(&[(n, C64::new(-h, 0.0))])?.pair, chart, order)?;
        Ok(Self { plus, minus, h })
    }

    fn diff(&self, f: impl Fn(&LaxPair) -> Result<TruncatedSeries>) -> Result<TruncatedSeries> {
        Ok((&f(&self.plus)? - &f(&self.minus)?).scale(C64::new(0.5 / self.h, 0.0)))
    }
}

fn window_norm(s: &TruncatedSeries, window: usize) -> f64 {
    let k = window as i64;
    (-k..=k).map(|j| s.coeff(j).norm()).fold(0.0, f64::max)
}

/// Largest violation of the four Lax equations for the flow `t_n`, over the
/// coefficients `|j| <= window` of `L` and `L~`. `n > 0` uses `B_n`, `n < 0`
/// uses `B~_{|n|}`.
fn lax_residual_at(p: &Prober, n: i64, h: f64, order: usize, window: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidInput("Lax flows are indexed by n != 0".into()));
    }
    let chart = p.family().chart();
    let base = LaxPair::of_pair(&p.base().pair, chart, order)?;
    let along = Stencil::new(p, n, h, order)?;
    let along_t0 = Stencil::new(p, 0, h, order)?;
    let k = n.unsigned_abs() as usize;
    let op = |lp: &LaxPair| if n > 0 { b_operator(&lp.l, k) } else { bt_operator(&lp.lt, k) };
    let b = op(&base)?;
    let b_t0 = along_t0.diff(op)?;
    let mut worst = 0.0f64;
    let sides: [fn(&LaxPair) -> Result<TruncatedSeries>; 2] = [|lp| Ok(lp.l.clone()), |lp| Ok(lp.lt.clone())];
    for side in sides {
        let x = side(&base)?;
        let x_t = along.diff(side)?;
        let x_t0 = along_t0.diff(side)?;
        let rhs = poisson(&b, &b_t0, &x, &x_t0);
        worst = worst.max(window_norm(&(&x_t - &rhs), window));
    }
    Ok(worst)
}

/// Lax residual at `h` and `h/2`.
pub fn lax_residual(p: &Prober, n: i64, h: f64, order: usize, window: usize, base: &str) -> Result<FdReport> {
    let r = lax_residual_at(p, n, h, order, window)?;
    let r2 = lax_residual_at(p, n, h / 2.0, order, window)?;
    Ok(FdReport::new("lax", p.family().chart(), base, Some(n), h, r, r2))
}

fn string_residual_at(p: &Prober, h: f64, order: usize, window: usize) -> Result<f64> {
    let chart = p.family().chart();
    let base = LaxPair::of_pair(&p.base().pair, chart, order)?;
    let along_t0 = Stencil::new(p, 0, h, order)?;
    let l_t0 = along_t0.diff(|lp| Ok(lp.l.clone()))?;
    let li_t0 = along_t0.diff(|lp| Ok(lp.lt_inv.clone()))?;
    let mut bracket = poisson(&base.l, &l_t0, &base.lt_inv, &li_t0);
    bracket.set(0, bracket.coeff(0) - ONE);
    Ok(window_norm(&bracket, window))
}

/// `{L, 1/L~} - 1` over `|j| <= window`, at `h` and `h/2`.
pub fn string_residual(p: &Prober, h: f64, order: usize, window: usize, base: &str) -> Result<FdReport> {
    let r = string_residual_at(p, h, order, window)?;
    let r2 = string_residual_at(p, h / 2.0, order, window)?;
    Ok(FdReport::new("string", p.family().chart(), base, None, h, r, r2))
}

/// `M = sum n t_n L^n + t_0 + sum v_n L^{-n}` and
/// `M~ = -sum n t_{-n} L~^{-n} + t_0 - sum v_{-n} L~^n` as series in `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrlovPair {
    pub m: TruncatedSeries,
    pub mt: TruncatedSeries,
}

pub fn orlov(cv: &CoordinateVector, lax: &LaxPair) -> Result<OrlovPair> {
    let order = lax.l.order();
    let mut m = TruncatedSeries::constant(order, cv.t(0));
    let mut mt = TruncatedSeries::constant(order, cv.t(0));
    let l_inv = lax.l.recip(Expansion::Infinity)?;
    let (mut lp, mut lm) = (TruncatedSeries::constant(order, ONE), TruncatedSeries::constant(order, ONE));
    let (mut tp, mut tm) = (lp.clone(), lp.clone());
    for n in 1..=cv.order() as i64 {
        let nf = n as f64;
        lp = &lp * &lax.l;
        lm = &lm * &l_inv;
        tp = &tp * &lax.lt;
        tm = &tm * &lax.lt_inv;
        m = &(&m + &lp.scale(cv.t(n) * nf)) + &lm.scale(cv.v(n));
        mt = &(&mt - &tm.scale(cv.t(-n) * nf)) - &tp.scale(cv.v(-n));
    }
    Ok(OrlovPair { m, mt })
}

/// Largest tail term tolerated in the Orlov sums on the evaluation points.
pub const TAIL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RhResidual {
    /// `max |M / L - 1/L~|`.
    pub res1: f64,
    /// `max |L~ M~ - L|`.
    pub res2: f64,
    /// `max |M - M~|`.
    pub orlov_gap: f64,
}

/// The relations `L^{-1} M = 1/L~` and `L~ M~ = L` at `m` points: on the unit
/// circle with `(L, L~) = (g(w), f(w))` for the direct charts, on the curve
/// `g(w)` with `(L, L~) = (w, f^{-1}(g(w)))` for the inverse chart. The Orlov
/// sums run over every stored time and are evaluated at those points.
pub fn rh_residual(pair: &UnivalentPair, cv: &CoordinateVector, m: usize) -> Result<RhResidual> {
    let w = nodes(m);
    let (l, lt): (Vec<C64>, Vec<C64>) = match cv.chart {
        Chart::Direct | Chart::Extended => {
            (w.iter().map(|&z| pair.eval_g(z)).collect(), w.iter().map(|&z| pair.eval_f(z)).collect())
        }
        Chart::Inverse => (w.clone(), compositions_on_circle(pair, m)?.1),
        Chart::Wz => return Err(Error::InvalidInput("no Riemann-Hilbert data for harmonic moments".into())),
    };
    let k = cv.order() as i64;
    let mut out = RhResidual { res1: 0.0, res2: 0.0, orlov_gap: 0.0 };
    let mut tail = 0.0f64;
    for (&l, &lt) in l.iter().zip(&lt) {
        let (mut mm, mut mmt) = (cv.t(0), cv.t(0));
        let (li, lti) = (l.inv(), lt.inv());
        let (mut pl, mut pli, mut plt, mut plti) = (ONE, ONE, ONE, ONE);
        for n in 1..=k {
            let nf = n as f64;
            pl *= l;
            pli *= li;
            plt *= lt;
            plti *= lti;
            mm += cv.t(n) * nf * pl + cv.v(n) * pli;
            mmt -= cv.t(-n) * nf * plti + cv.v(-n) * plt;
            if n == k {
                let terms = [cv.t(n) * nf * pl, cv.v(n) * pli, cv.t(-n) * nf * plti, cv.v(-n) * plt];
                tail = terms.iter().fold(tail, |a, z| a.max(z.norm()));
            }
        }
        if !(mm.norm().is_finite() && mmt.norm().is_finite()) {
            return Err(Error::EvaluationOffDomain("Orlov sums overflow on the evaluation points".into()));
        }
        out.res1 = out.res1.max((mm * li - lti).norm());
        out.res2 = out.res2.max((lt * mmt - l).norm());
        out.orlov_gap = out.orlov_gap.max((mm - mmt).norm());
    }
    if tail > TAIL_TOL {
        return Err(Error::TailDivergence(tail));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coords::direct_chart;
    use crate::series::ZERO;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn b_operator_examples() {
        let p = TruncatedSeries::identity(6);
        assert!((&b_operator(&p, 1).unwrap() - &p).max_abs() < 1e-15);
        let u = c(0.4, -0.2);
        let l = &p + &TruncatedSeries::constant(6, u);
        let b1 = b_operator(&l, 1).unwrap();
        assert!((b1.coeff(1) - ONE).norm() < 1e-15 && (b1.coeff(0) - u / 2.0).norm() < 1e-15);
        let pair = UnivalentPair::mobius(c(0.3, 0.0), 0.0, 8).unwrap();
        let b1 = b_operator(&pair.g_series(8), 1).unwrap();
        assert!((b1.coeff(1) - 1.048_284_8).norm() < 1e-7);
        assert!((b1.coeff(0) + 0.157_242_7).norm() < 1e-7);
    }

    #[test]
    fn projections_add_up() {
        let pair = UnivalentPair::mobius(c(0.2, 0.3), 0.7, 8).unwrap();
        let l3 = pair.g_series(10).pow(3, Expansion::Infinity).unwrap();
        let sum = &(&l3.project(Part::Pos) + &l3.project(Part::Neg)) + &l3.project(Part::Zero);
        assert_eq!(sum.coeffs(), l3.coeffs());
    }

    #[test]
    fn canonical_bracket() {
        let p = TruncatedSeries::identity(4);
        let z = TruncatedSeries::zeros(4);
        let one = TruncatedSeries::constant(4, ONE);
        assert!(poisson(&p, &z, &one, &z).max_abs() < 1e-15);
        // {p, t0} = p
        let t0 = TruncatedSeries::constant(4, c(0.7, 0.0));
        assert!((&poisson(&p, &z, &t0, &one) - &p).max_abs() < 1e-15);
    }

    #[test]
    fn leading_coefficients_agree() {
        let pair = UnivalentPair::mobius(c(0.2, 0.3), 0.7, 16).unwrap();
        for chart in [Chart::Direct, Chart::Inverse] {
            let lp = LaxPair::of_pair(&pair, chart, 16).unwrap();
            assert!(lp.leading_mismatch() < 1e-13, "{chart:?}");
        }
    }

    #[test]
    fn identity_rh_is_exact() {
        let pair = UnivalentPair::mobius(ZERO, 0.0, 8).unwrap();
        let cv = direct_chart(&pair, 8, 64, Chart::Direct).unwrap();
        let r = rh_residual(&pair, &cv, 64).unwrap();
        assert!(r.res1 < 1e-13 && r.res2 < 1e-13 && r.orlov_gap < 1e-13);
        let om = orlov(&cv, &LaxPair::of_pair(&pair, Chart::Direct, 8).unwrap()).unwrap();
        assert!((om.m.coeff(0) - ONE).norm() < 1e-15 && (&om.m - &om.mt).max_abs() < 1e-15);
    }

    #[test]
    fn mobius_rh_direct() {
        // the v-series converges on g(S^1) only for |a| < 1/2; at N = 24 the
        // dropped tail and the amplified quadrature noise are both ~1e-9
        let pair = UnivalentPair::mobius(c(0.3, 0.0), 0.0, 24).unwrap();
        let cv = direct_chart(&pair, 24, 256, Chart::Direct).unwrap();
        let r = rh_residual(&pair, &cv, 256).unwrap();
        assert!(r.res1 < 1e-8 && r.res2 < 1e-8 && r.orlov_gap < 1e-8, "{r:?}");
        let short = direct_chart(&pair, 8, 256, Chart::Direct).unwrap();
        assert!(matches!(rh_residual(&pair, &short, 256), Err(Error::TailDivergence(_))));
    }
}
