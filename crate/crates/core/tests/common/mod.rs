//! Independent oracles shared by the integration tests and the acceptance
//! run.

// each test binary uses a different subset
#![allow(dead_code)]

use dtoda::grunsky::grunsky_to_order;
use dtoda::{Result, UnivalentPair, C64};

pub const N: usize = 5;

/// Power series in `(x, y)` truncated at degree `D` in each variable.
#[derive(Clone)]
struct Bi {
    c: Vec<Vec<C64>>,
}

impl Bi {
    fn zero(d: usize) -> Self {
        Bi { c: vec![vec![C64::new(0.0, 0.0); d + 1]; d + 1] }
    }

    fn deg(&self) -> usize {
        self.c.len() - 1
    }

    fn add(&mut self, i: usize, j: usize, v: C64) {
        if i <= self.deg() && j <= self.deg() {
            self.c[i][j] += v;
        }
    }

    fn mul(&self, o: &Bi) -> Bi {
        let d = self.deg();
        let mut r = Bi::zero(d);
        for i in 0..=d {
            for j in 0..=d {
                if self.c[i][j] == C64::new(0.0, 0.0) {
                    continue;
                }
                for k in 0..=d - i {
                    for l in 0..=d - j {
                        r.c[i + k][j + l] += self.c[i][j] * o.c[k][l];
                    }
                }
            }
        }
        r
    }

    /// Principal log, with `log c00` supplied by the caller's branch.
    fn log(&self) -> Bi {
        let d = self.deg();
        let c00 = self.c[0][0];
        let mut u = self.clone();
        for row in u.c.iter_mut() {
            for x in row.iter_mut() {
                *x /= c00;
            }
        }
        u.c[0][0] = C64::new(0.0, 0.0);
        let mut out = Bi::zero(d);
        out.c[0][0] = c00.ln();
        let mut pw = u.clone();
        for k in 1..=2 * d {
            let s = if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
            for i in 0..=d {
                for j in 0..=d {
                    out.c[i][j] += pw.c[i][j] * s;
                }
            }
            pw = pw.mul(&u);
        }
        out
    }
}

/// `b_{m,n}` for `|m|, |n| <= N` read off the three generating functions.
pub fn oracle(f: &[C64], b: C64, g: &[C64]) -> Vec<Vec<C64>> {
    let d = N;
    let mut out = vec![vec![C64::new(f64::NAN, 0.0); 2 * N + 1]; 2 * N + 1];
    let at = |m: i64, n: i64| ((m + N as i64) as usize, (n + N as i64) as usize);
    let mut set = |m: i64, n: i64, v: C64| {
        let (i, j) = at(m, n);
        out[i][j] = v;
    };

    // (G(z) - G(zeta)) / (z - zeta), x = 1/z, y = 1/zeta
    let mut q1 = Bi::zero(d);
    q1.add(0, 0, b);
    for (k, gk) in g.iter().enumerate().skip(1) {
        for j in 0..k {
            q1.add(k - j, j + 1, -gk);
        }
    }
    let l1 = q1.log();

    // (G(z) - F(zeta)) / z, x = 1/z, y = zeta
    let mut q2 = Bi::zero(d);
    q2.add(0, 0, b);
    for (k, gk) in g.iter().enumerate() {
        q2.add(k + 1, 0, *gk);
    }
    for (j, aj) in f.iter().enumerate() {
        q2.add(1, j + 1, -aj);
    }
    let l2 = q2.log();

    // (F(z) - F(zeta)) / (z - zeta), x = z, y = zeta
    let mut q3 = Bi::zero(d);
    for (jm1, aj) in f.iter().enumerate() {
        let j = jm1 + 1;
        for i in 0..j {
            q3.add(i, j - 1 - i, *aj);
        }
    }
    let l3 = q3.log();

    for m in 0..=d {
        for n in 0..=d {
            let (mi, ni) = (m as i64, n as i64);
            if m >= 1 && n >= 1 {
                set(mi, ni, -l1.c[m][n]);
            }
            if m >= 1 {
                set(mi, -ni, -l2.c[m][n]);
                set(-ni, mi, -l2.c[m][n]);
            }
            set(-mi, -ni, -l3.c[m][n]);
        }
    }
    out
}

/// Largest `|b_{m,n} - oracle|` over `|m|, |n| <= N`.
pub fn oracle_deviation(pair: &UnivalentPair) -> Result<f64> {
    let want = oracle(pair.f_coeffs(), pair.g_lead(), pair.g_coeffs());
    let got = grunsky_to_order(pair, N)?;
    let k = N as i64;
    let mut worst = 0.0f64;
    for m in -k..=k {
        for n in -k..=k {
            let w = want[(m + k) as usize][(n + k) as usize];
            let e = (got.get(m, n) - w).norm();
            worst = worst.max(if e.is_nan() { f64::INFINITY } else { e });
        }
    }
    Ok(worst)
}

/// `(1 / 2 pi i) \oint z^{-n} conj(z) dz` over the image of the unit circle
/// under `g(w) = w + u / w`, from the expansion of the pulled-back integrand
/// at `w = infinity` (the only singularity outside the disc).
///
/// With `x = 1/w` the integrand is `w^{1-n} Q(x)`,
/// `Q = (1 + u x^2)^{-n} (conj u + x^2) (1 - u x^2)`, so the integral is the
/// `x^{2-n}` coefficient of `Q`.
pub fn ellipse_moment(u: C64, n: i64) -> C64 {
    let k = 2 - n;
    if k < 0 {
        return C64::new(0.0, 0.0);
    }
    let len = k as usize + 1;
    let mut q = vec![C64::new(0.0, 0.0); len + 2];
    // (1 + u y)^{-n} in y = x^2: binomial series
    let mut binom = vec![C64::new(0.0, 0.0); len];
    let mut c = C64::new(1.0, 0.0);
    for (j, b) in binom.iter_mut().enumerate() {
        *b = c;
        let j = j as f64;
        c *= u * (-(n as f64) - j) / (j + 1.0);
    }
    for (j, b) in binom.iter().enumerate() {
        // times (conj u + y)(1 - u y) = conj u + (1 - |u|^2) y - u y^2
        let terms = [(0, u.conj()), (1, C64::new(1.0 - u.norm_sqr(), 0.0)), (2, -u)];
        for (d, t) in terms {
            let deg = 2 * (j + d);
            if deg < q.len() {
                q[deg] += b * t;
            }
        }
    }
    q[k as usize]
}
