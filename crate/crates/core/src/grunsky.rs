//! Faber polynomials and generalized Grunsky coefficients of a pair.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pair::UnivalentPair;
use crate::series::{Expansion, Part, TruncatedSeries, C64, ZERO};

/// Two-route discrepancy above which the coefficients are rejected.
pub const SYMMETRY_TOL: f64 = 1e-8;

/// `b_{m,n}` for `-K <= m, n <= K`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrunskyMatrix {
    order: usize,
    entries: Vec<C64>,
    max_asymmetry: f64,
}

impl GrunskyMatrix {
    fn zeros(order: usize) -> Self {
        let d = 2 * order + 1;
        Self { order, entries: vec![ZERO; d * d], max_asymmetry: 0.0 }
    }

    fn idx(&self, m: i64, n: i64) -> usize {
        let k = self.order as i64;
        assert!(m.abs() <= k && n.abs() <= k, "Grunsky index ({m}, {n}) outside order {k}");
        ((m + k) * (2 * k + 1) + (n + k)) as usize
    }

    fn put(&mut self, m: i64, n: i64, v: C64) {
        let i = self.idx(m, n);
        self.entries[i] = v;
        let j = self.idx(n, m);
        self.entries[j] = v;
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, m: i64, n: i64) -> C64 {
        self.entries[self.idx(m, n)]
    }

    /// Largest disagreement between independent routes to the same entry.
    pub fn max_asymmetry(&self) -> f64 {
        self.max_asymmetry
    }

    /// Rows from `m = -K` to `K`, columns likewise.
    pub fn dense(&self) -> Vec<Vec<C64>> {
        let d = 2 * self.order + 1;
        self.entries.chunks(d).map(|r| r.to_vec()).collect()
    }
}

impl Serialize for GrunskyMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let rows: Vec<Vec<[f64; 2]>> = self.dense().iter().map(|r| r.iter().map(|c| [c.re, c.im]).collect()).collect();
        let mut st = s.serialize_struct("GrunskyMatrix", 4)?;
        st.serialize_field("order", &self.order)?;
        st.serialize_field("index_offset", &(self.order as i64))?;
        st.serialize_field("max_asymmetry", &self.max_asymmetry)?;
        st.serialize_field("entries", &rows)?;
        st.end()
    }
}

/// `P_n` (polynomial in `w`) and `Q_n` (polynomial in `1/w`) for `n = 1..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct FaberSet {
    pub order: usize,
    pub p: Vec<TruncatedSeries>,
    pub q: Vec<TruncatedSeries>,
}

struct Inverses {
    window: usize,
    f: TruncatedSeries,
    g: TruncatedSeries,
    f_inv: TruncatedSeries,
    g_inv: TruncatedSeries,
}

impl Inverses {
    fn new(pair: &UnivalentPair) -> Result<Self> {
        let window = pair.window() + 1;
        let f = pair.f_series(window);
        let g = pair.g_series(window);
        let f_inv = f.comp_inverse()?;
        let g_inv = g.comp_inverse()?;
        Ok(Self { window, f, g, f_inv, g_inv })
    }

    fn p(&self, n: usize) -> Result<TruncatedSeries> {
        Ok(self.g_inv.pow(n as i64, Expansion::Infinity)?.project(Part::Geq0))
    }

    fn q(&self, n: usize) -> Result<TruncatedSeries> {
        Ok(self.f_inv.pow(-(n as i64), Expansion::Zero)?.project(Part::Leq0))
    }
}

/// `P_n = (g^{-1})^n_{>=0}` and `Q_n = (f^{-1})^{-n}_{<=0}`.
pub fn faber(pair: &UnivalentPair, n: usize) -> Result<(TruncatedSeries, TruncatedSeries)> {
    if n == 0 || n > pair.window() {
        return Err(Error::InvalidInput(format!("Faber index {n} outside 1..={}", pair.window())));
    }
    let inv = Inverses::new(pair)?;
    Ok((inv.p(n)?, inv.q(n)?))
}

pub fn faber_set(pair: &UnivalentPair, order: usize) -> Result<FaberSet> {
    let inv = Inverses::new(pair)?;
    let mut p = Vec::with_capacity(order);
    let mut q = Vec::with_capacity(order);
    for n in 1..=order {
        p.push(inv.p(n)?);
        q.push(inv.q(n)?);
    }
    Ok(FaberSet { order, p, q })
}

/// Grunsky coefficients to half the pair's coefficient length.
pub fn grunsky(pair: &UnivalentPair) -> Result<GrunskyMatrix> {
    grunsky_to_order(pair, (pair.window() / 2).max(1))
}

/// Grunsky coefficients for `|m|, |n| <= order`.
///
/// Mixed entries are read both from `P_n o f` and from `Q_m o g`; entries in
/// the pure blocks are read once per ordering. Any disagreement above
/// [`SYMMETRY_TOL`] is reported as [`Error::SymmetryViolation`].
pub fn grunsky_to_order(pair: &UnivalentPair, order: usize) -> Result<GrunskyMatrix> {
    let inv = Inverses::new(pair)?;
    let k = order as i64;
    if order == 0 || order > inv.window {
        return Err(Error::InvalidInput(format!("Grunsky order {order} exceeds window {}", inv.window)));
    }
    let log_g = inv.g.shift(-1).log_unit()?;
    let log_f = inv.f.shift(-1).log_unit()?;

    // raw[n][m] from each route, n >= 1
    let mut pg = vec![vec![ZERO; order + 1]; order + 1]; // b_{n,m}
    let mut pf = vec![vec![ZERO; order + 1]; order + 1]; // b_{n,-m}, m = 0 holds b_{n,0}
    let mut qg = vec![vec![ZERO; order + 1]; order + 1]; // b_{m,-n} indexed [n][m], m = 0 holds b_{-n,0}
    let mut qf = vec![vec![ZERO; order + 1]; order + 1]; // b_{-n,-m}
    for n in 1..=order {
        let nf = n as f64;
        let p = inv.p(n)?;
        let q = inv.q(n)?;
        let p_g = p.compose(&inv.g)?;
        let p_f = p.compose(&inv.f)?;
        let q_g = q.compose(&inv.g)?;
        let q_f = q.compose(&inv.f)?;
        pf[n][0] = p_f.coeff(0) / nf;
        qg[n][0] = -q_g.coeff(0) / nf;
        for m in 1..=order {
            let mi = m as i64;
            pg[n][m] = p_g.coeff(-mi) / nf;
            pf[n][m] = p_f.coeff(mi) / nf;
            qg[n][m] = q_g.coeff(-mi) / nf;
            qf[n][m] = q_f.coeff(mi) / nf;
        }
    }

    let mut out = GrunskyMatrix::zeros(order);
    let mut worst = (0.0f64, 0i64, 0i64);
    let mut track = |x: C64, y: C64, m: i64, n: i64| {
        let d = (x - y).norm();
        if d > worst.0 || d.is_nan() {
            worst = (d, m, n);
        }
        (x + y) * 0.5
    };

    out.put(0, 0, pair.g_lead().ln());
    for n in 1..=k {
        let nu = n as usize;
        out.put(n, 0, track(-log_g.coeff(-n), pf[nu][0], n, 0));
        out.put(-n, 0, track(-log_f.coeff(n), qg[nu][0], -n, 0));
        for m in n..=k {
            let mu = m as usize;
            out.put(n, m, track(pg[nu][mu], pg[mu][nu], n, m));
            out.put(-n, -m, track(qf[nu][mu], qf[mu][nu], -n, -m));
        }
        for m in 1..=k {
            let mu = m as usize;
            // b_{n,-m}: P_n o f versus Q_m o g
            out.put(n, -m, track(pf[nu][mu], qg[mu][nu], n, -m));
        }
    }
    out.max_asymmetry = worst.0;
    if !(worst.0 <= SYMMETRY_TOL) {
        return Err(Error::SymmetryViolation { m: worst.1, n: worst.2, discrepancy: worst.0 });
    }
    Ok(out)
}

/// Largest coefficient residual of the four Faber expansions, with the
/// compositions formed pointwise on `m` circle nodes rather than by series
/// multiplication. Order is `[P o g, P o f, Q o g, Q o f]`.
pub fn faber_residuals(pair: &UnivalentPair, b: &GrunskyMatrix, m: usize) -> Result<[f64; 4]> {
    let k = b.order();
    crate::series::check_grid(m, k)?;
    let set = faber_set(pair, k)?;
    let gs = pair.g_on_circle(m);
    let fs = pair.f_on_circle(m);
    let ki = k as i64;
    let mut res = [0.0f64; 4];
    let fit = |poly: &TruncatedSeries, at: &[C64]| -> Result<TruncatedSeries> {
        let vals = at.iter().map(|&z| poly.eval(z)).collect();
        Ok(crate::series::CircleGrid::from_samples(vals)?.fourier(k))
    };
    for n in 1..=ki {
        let nf = n as f64;
        let p = &set.p[n as usize - 1];
        let q = &set.q[n as usize - 1];
        let pg = fit(p, &gs)?;
        let pf = fit(p, &fs)?;
        let qg = fit(q, &gs)?;
        let qf = fit(q, &fs)?;
        let upd = |r: &mut f64, x: C64| *r = r.max(x.norm());
        upd(&mut res[0], pg.coeff(n) - 1.0);
        upd(&mut res[1], pf.coeff(0) - b.get(n, 0) * nf);
        upd(&mut res[2], qg.coeff(0) + b.get(-n, 0) * nf);
        upd(&mut res[3], qf.coeff(-n) - 1.0);
        for mm in 1..=ki {
            upd(&mut res[0], pg.coeff(-mm) - b.get(n, mm) * nf);
            upd(&mut res[1], pf.coeff(mm) - b.get(n, -mm) * nf);
            upd(&mut res[2], qg.coeff(-mm) - b.get(mm, -n) * nf);
            upd(&mut res[3], qf.coeff(mm) - b.get(-n, -mm) * nf);
        }
    }
    Ok(res)
}

/// `g'(zeta) / (g(zeta) - g(z)) - 1 / (zeta - z)` evaluated pointwise, next
/// to its expansion `sum m b_{n,m} z^{-n} zeta^{-m-1}` truncated at the
/// matrix order.
pub fn kernel_check_points(pair: &UnivalentPair, b: &GrunskyMatrix, z: C64, zeta: C64) -> (C64, C64) {
    let lhs = pair.eval_dg(zeta) / (pair.eval_g(zeta) - pair.eval_g(z)) - (zeta - z).inv();
    let k = b.order() as i64;
    let mut rhs = ZERO;
    for n in 1..=k {
        for m in 1..=k {
            rhs += b.get(n, m) * m as f64 * z.powi(-(n as i32)) * zeta.powi(-(m as i32) - 1);
        }
    }
    (lhs, rhs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplementarityReport {
    pub order: usize,
    pub cond_b: f64,
    pub cond_c: f64,
}

/// Condition numbers of `sqrt(nm) b_{-m,n}` and `sqrt(mn) b_{m,-n}`.
pub fn complementarity_diagnostic(b: &GrunskyMatrix) -> ComplementarityReport {
    let k = b.order();
    let build = |sign: i64| {
        DMatrix::from_fn(k, k, |i, j| {
            let (m, n) = (i as i64 + 1, j as i64 + 1);
            b.get(-sign * m, sign * n) * ((m * n) as f64).sqrt()
        })
    };
    let cond = |mat: DMatrix<C64>| {
        let sv = mat.singular_values();
        let max = sv.iter().cloned().fold(0.0, f64::max);
        let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    };
    ComplementarityReport { order: k, cond_b: cond(build(1)), cond_c: cond(build(-1)) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pair::Role;
    use crate::series::ONE;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn identity_pair(len: usize) -> UnivalentPair {
        let mut f = vec![ZERO; len];
        f[0] = ONE;
        UnivalentPair::new(f, ONE, vec![ZERO; len], Role::Forward).unwrap()
    }

    fn ellipse(cc: C64, len: usize) -> UnivalentPair {
        let mut f = vec![ZERO; len];
        f[0] = ONE;
        let mut g = vec![ZERO; len];
        g[1] = cc;
        UnivalentPair::new(f, ONE, g, Role::Forward).unwrap()
    }

    #[test]
    fn identity_pair_faber() {
        let p = identity_pair(8);
        for n in 1..=4 {
            let (pn, qn) = faber(&p, n).unwrap();
            assert!(pn.max_diff(&TruncatedSeries::monomial(pn.order(), n as i64, ONE)) < 1e-15);
            assert!(qn.max_diff(&TruncatedSeries::monomial(qn.order(), -(n as i64), ONE)) < 1e-15);
        }
    }

    #[test]
    fn identity_pair_grunsky() {
        // log((z - zeta)/z) = -sum zeta^k z^{-k} / k, so only b_{k,-k} = 1/k survive
        let b = grunsky(&identity_pair(8)).unwrap();
        let k = b.order() as i64;
        for m in -k..=k {
            for n in -k..=k {
                let want = if m > 0 && n == -m {
                    c(1.0 / m as f64, 0.0)
                } else if m < 0 && n == -m {
                    c(1.0 / n as f64, 0.0)
                } else {
                    ZERO
                };
                assert!((b.get(m, n) - want).norm() < 1e-15, "({m},{n})");
            }
        }
    }

    #[test]
    fn ellipse_faber_and_grunsky() {
        let cc = c(0.2, 0.1);
        let p = ellipse(cc, 12);
        let (p2, _) = faber(&p, 2).unwrap();
        assert!((p2.coeff(2) - ONE).norm() < 1e-14);
        assert!((p2.coeff(0) + cc * 2.0).norm() < 1e-14);
        assert!(p2.coeff(1).norm() < 1e-14);
        // log(1 - c/(z zeta)) = -sum c^m (z zeta)^{-m} / m
        let b = grunsky(&p).unwrap();
        for n in 1..=6i64 {
            for m in 1..=6i64 {
                let want = if n == m { cc.powi(m as i32) / m as f64 } else { ZERO };
                assert!((b.get(n, m) - want).norm() < 1e-14, "({n},{m})");
            }
        }
    }

    #[test]
    fn mobius_faber_and_grunsky() {
        let a = 0.3;
        let p = UnivalentPair::mobius(c(a, 0.0), 0.0, 24).unwrap();
        let s = 0.91f64.sqrt();
        let (bb, cc) = (1.0 / s, -0.3 / s);
        let (p1, _) = faber(&p, 1).unwrap();
        assert!((p1.coeff(1) - 1.0 / bb).norm() < 1e-14);
        assert!((p1.coeff(0) + cc / bb).norm() < 1e-14);

        for alpha in [0.0, 0.7, std::f64::consts::PI] {
            let av = c(0.25, -0.3);
            let p = UnivalentPair::mobius(av, alpha, 32).unwrap();
            let g = grunsky(&p).unwrap();
            let k = g.order() as i64;
            for n in 1..=k {
                for m in 1..=k {
                    assert!(g.get(n, m).norm() < 1e-14);
                }
            }
            let e = C64::from_polar(1.0, -alpha);
            assert!((g.get(1, 0) - av.conj() * e).norm() < 1e-14);
            assert!((g.get(1, -1) - e * (1.0 - av.norm_sqr())).norm() < 1e-14);
        }
    }

    #[test]
    fn faber_leading_coefficients() {
        let p = UnivalentPair::new(
            vec![c(0.8, 0.1), c(0.1, 0.0), c(0.0, 0.02)],
            c(0.8, 0.1).inv(),
            vec![c(0.05, 0.0), c(0.1, 0.02), c(0.01, 0.0)],
            Role::Forward,
        )
        .unwrap();
        let set = faber_set(&p, 3).unwrap();
        for n in 1..=3i64 {
            let pn = &set.p[n as usize - 1];
            let qn = &set.q[n as usize - 1];
            assert!((pn.coeff(n) - p.g_lead().powi(-(n as i32))).norm() < 1e-13);
            assert!((qn.coeff(-n) - p.a1().powi(n as i32)).norm() < 1e-13);
        }
    }

    #[test]
    fn complementarity_of_mobius() {
        let p = UnivalentPair::mobius(c(0.3, 0.0), 0.0, 24).unwrap();
        let b = grunsky(&p).unwrap();
        assert!((b.get(-1, 1) - 0.91).norm() < 1e-14);
        let r = complementarity_diagnostic(&b);
        assert!(r.cond_b.is_finite() && r.cond_c.is_finite());
    }

    #[test]
    fn ellipse_kernel_expansion() {
        let cc = c(0.3, -0.1);
        let p = ellipse(cc, 24);
        let b = grunsky(&p).unwrap();
        let (lhs, rhs) = kernel_check_points(&p, &b, c(1.7, 0.3), c(-0.4, 1.9));
        assert!((lhs - rhs).norm() < 1e-8);
    }

    #[test]
    fn pointwise_faber_residuals_mobius() {
        let p = UnivalentPair::mobius(c(0.3, 0.4), 1.0, 32).unwrap();
        let b = grunsky_to_order(&p, 8).unwrap();
        let r = faber_residuals(&p, &b, 256).unwrap();
        for x in r {
            assert!(x < 1e-12, "{r:?}");
        }
    }
}
