//! Finite-dimensional families of free pairs around a base point, and Newton
//! inversion of a chart on them. This is what turns "vary `t_n` with the other
//! times fixed" into something computable.

use nalgebra::{DMatrix, DVector};

use crate::coords::{direct_chart, inverse_chart_of_pair, Chart, CoordinateVector};
use crate::error::{Error, Result};
use crate::pair::UnivalentPair;
use crate::series::{C64, ZERO};

/// Forward-difference step for the chart Jacobian.
pub const JACOBIAN_STEP: f64 = 1e-6;
/// Largest Jacobian condition number accepted by [`chart_invert`].
pub const MAX_CONDITION: f64 = 1e10;

/// Pairs `base.perturbed(da, db)` with `da` touching `a_1..a_{K+1}` and `db`
/// touching `b_0..b_{K-1}`; `b` follows from `a_1 b = 1`. The `2K+1`
/// parameters match the `2K+1` times `t_{-K..K}`.
#[derive(Debug, Clone)]
pub struct ChartFamily {
    base: UnivalentPair,
    chart: Chart,
    order: usize,
    grid: usize,
}

#[derive(Debug, Clone)]
pub struct FamilyPoint {
    pub params: Vec<C64>,
    pub pair: UnivalentPair,
    pub coords: CoordinateVector,
}

impl ChartFamily {
    pub fn new(base: UnivalentPair, chart: Chart, order: usize, grid: usize) -> Result<Self> {
        if chart == Chart::Wz {
            return Err(Error::InvalidInput("no pair family for harmonic moments".into()));
        }
        if order == 0 {
            return Err(Error::InvalidInput("family order must be positive".into()));
        }
        Ok(Self { base, chart, order, grid })
    }

    pub fn dim(&self) -> usize {
        2 * self.order + 1
    }

    pub fn chart(&self) -> Chart {
        self.chart
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn base(&self) -> &UnivalentPair {
        &self.base
    }

    pub fn pair_at(&self, params: &[C64]) -> Result<UnivalentPair> {
        assert_eq!(params.len(), self.dim());
        let (da, db) = params.split_at(self.order + 1);
        if params.iter().all(|p| *p == ZERO) {
            return Ok(self.base.clone());
        }
        self.base.perturbed(da, db)
    }

    pub fn coords_of(&self, pair: &UnivalentPair) -> Result<CoordinateVector> {
        match self.chart {
            Chart::Inverse => inverse_chart_of_pair(pair, self.order, self.grid),
            c => direct_chart(pair, self.order, self.grid, c),
        }
    }

    pub fn point(&self, params: Vec<C64>) -> Result<FamilyPoint> {
        let pair = self.pair_at(&params)?;
        let coords = self.coords_of(&pair)?;
        Ok(FamilyPoint { params, pair, coords })
    }

    pub fn base_point(&self) -> Result<FamilyPoint> {
        self.point(vec![ZERO; self.dim()])
    }

    /// `d t_n / d param_j`, rows ordered `t_{-K}, ..., t_K`.
    pub fn jacobian(&self, at: &FamilyPoint) -> Result<DMatrix<C64>> {
        let d = self.dim();
        let cols: Vec<Result<Vec<C64>>> = (0..d)
            .map(|j| {
                let mut p = at.params.clone();
                p[j] += JACOBIAN_STEP;
                let cv = self.point(p)?.coords;
                Ok(cv.t_all().iter().zip(at.coords.t_all()).map(|(a, b)| (a - b) / JACOBIAN_STEP).collect())
            })
            .collect();
        let mut jac = DMatrix::zeros(d, d);
        for (j, col) in cols.into_iter().enumerate() {
            for (i, x) in col?.into_iter().enumerate() {
                jac[(i, j)] = x;
            }
        }
        Ok(jac)
    }
}

pub fn condition_number(jac: &DMatrix<C64>) -> f64 {
    let sv = jac.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, Copy)]
pub struct InvertOptions {
    /// Target accuracy in `max |t_n - target_n|`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for InvertOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 40 }
    }
}

/// A point together with its factored chart Jacobian, reused across many
/// nearby inversions.
pub struct Linearization {
    lu: nalgebra::LU<C64, nalgebra::Dyn, nalgebra::Dyn>,
    pub condition: f64,
}

impl Linearization {
    pub fn at(family: &ChartFamily, point: &FamilyPoint) -> Result<Self> {
        let jac = family.jacobian(point)?;
        let condition = condition_number(&jac);
        if !(condition <= MAX_CONDITION) {
            return Err(Error::ChartDegenerate(condition));
        }
        Ok(Self { lu: jac.lu(), condition })
    }

    fn solve(&self, rhs: &DVector<C64>) -> Result<DVector<C64>> {
        self.lu.solve(rhs).ok_or(Error::ChartDegenerate(f64::INFINITY))
    }
}

/// Newton iteration for `t(point) = target` (the `t` part of `target` only).
/// Returns the point and the number of steps taken.
pub fn chart_invert(
    family: &ChartFamily,
    target: &CoordinateVector,
    start: &FamilyPoint,
    opts: InvertOptions,
) -> Result<(FamilyPoint, usize)> {
    let lin = Linearization::at(family, start)?;
    chart_invert_with(family, target, start, &lin, opts)
}

/// As [`chart_invert`], with a Jacobian computed elsewhere (chord steps; the
/// Jacobian is refreshed if the iteration stops contracting).
pub fn chart_invert_with(
    family: &ChartFamily,
    target: &CoordinateVector,
    start: &FamilyPoint,
    lin: &Linearization,
    opts: InvertOptions,
) -> Result<(FamilyPoint, usize)> {
    if target.order() != family.order() {
        return Err(Error::OrderMismatch(target.order(), family.order()));
    }
    let residual = |p: &FamilyPoint| -> DVector<C64> {
        DVector::from_iterator(family.dim(), target.t_all().iter().zip(p.coords.t_all()).map(|(a, b)| a - b))
    };
    let mut point = start.clone();
    let mut r = residual(&point);
    let mut norm = max_abs(&r);
    let mut fresh: Option<Linearization> = None;
    for step in 0..opts.max_iter {
        if norm <= opts.tol {
            return Ok((point, step));
        }
        let dp = fresh.as_ref().unwrap_or(lin).solve(&r)?;
        let params: Vec<C64> = point.params.iter().zip(dp.iter()).map(|(p, d)| p + d).collect();
        let next = family.point(params)?;
        let r_next = residual(&next);
        let n_next = max_abs(&r_next);
        if !(n_next < norm) || n_next > 0.5 * norm {
            if fresh.is_some() && !(n_next < norm) {
                return Err(Error::NoConvergence { iterations: step + 1, residual: n_next });
            }
            fresh = Some(Linearization::at(family, if n_next < norm { &next } else { &point })?);
        }
        if n_next < norm {
            point = next;
            r = r_next;
            norm = n_next;
        }
    }
    if norm <= opts.tol {
        return Ok((point, opts.max_iter));
    }
    Err(Error::NoConvergence { iterations: opts.max_iter, residual: norm })
}

fn max_abs(v: &DVector<C64>) -> f64 {
    v.iter().fold(0.0f64, |a, z| a.max(z.norm()))
}

/// `t` of `point` with `t_n += dt` for each listed `(n, dt)`.
pub fn shifted_target(point: &FamilyPoint, shifts: &[(i64, C64)]) -> CoordinateVector {
    let mut t = point.coords.clone();
    for &(n, dt) in shifts {
        t.set_t(n, t.t(n) + dt);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn fixed_point_takes_no_steps() {
        let base = UnivalentPair::mobius(c(0.3, 0.0), 0.0, 12).unwrap();
        let fam = ChartFamily::new(base, Chart::Extended, 6, 128).unwrap();
        let p0 = fam.base_point().unwrap();
        let (p, steps) = chart_invert(&fam, &p0.coords, &p0, InvertOptions::default()).unwrap();
        assert_eq!(steps, 0);
        assert!(p.params.iter().all(|x| *x == ZERO));
    }

    #[test]
    fn identity_t2_shift_direct() {
        let base = UnivalentPair::mobius(ZERO, 0.0, 8).unwrap();
        let fam = ChartFamily::new(base, Chart::Extended, 6, 128).unwrap();
        let p0 = fam.base_point().unwrap();
        let target = shifted_target(&p0, &[(2, c(0.01, 0.0))]);
        let opts = InvertOptions { tol: 1e-12, max_iter: 40 };
        let (p, _) = chart_invert(&fam, &target, &p0, opts).unwrap();
        let again = direct_chart(&p.pair, 6, 128, Chart::Extended).unwrap();
        for n in -6i64..=6 {
            assert!((again.t(n) - target.t(n)).norm() < 1e-10, "t{n}");
        }
    }

    #[test]
    fn inverse_chart_t0_shift() {
        let base = UnivalentPair::mobius(c(0.3, 0.0), 0.0, 12).unwrap();
        let fam = ChartFamily::new(base, Chart::Inverse, 6, 128).unwrap();
        let p0 = fam.base_point().unwrap();
        let target = shifted_target(&p0, &[(0, c(0.01, 0.0))]);
        let opts = InvertOptions { tol: 1e-12, max_iter: 40 };
        let (p, _) = chart_invert(&fam, &target, &p0, opts).unwrap();
        assert!((p.coords.t(0) - 0.92).norm() < 1e-10);
        assert!((p.coords.t(1) + 0.3).norm() < 1e-10);
        assert!((p.coords.t(-1) + 0.3).norm() < 1e-10);
    }

    #[test]
    fn full_rank_at_mobius() {
        for chart in [Chart::Inverse, Chart::Extended] {
            let base = UnivalentPair::mobius(c(0.2, 0.1), 0.5, 12).unwrap();
            let fam = ChartFamily::new(base, chart, 8, 128).unwrap();
            let lin = Linearization::at(&fam, &fam.base_point().unwrap()).unwrap();
            assert!(lin.condition < 1e8, "{chart:?} {}", lin.condition);
        }
    }
}
