use dtoda::coords::{direct_chart, inverse_chart_of_pair, wz_moments};
use dtoda::grunsky::{faber_residuals, grunsky};
use dtoda::tau::{
    chart_grunsky, gradient_fd, hessian_fd, hessian_from_grunsky, log_tau_direct, log_tau_extended, log_tau_inverse,
    FreeEnergyRecord, Prober,
};
use dtoda::toda::{lax_residual, rh_residual, string_residual, FdReport};
use dtoda::{Chart, ChartFamily, CoordinateVector, InvertOptions, UnivalentPair, C64};
use serde::Serialize;

use crate::config::{Input, PairJson, RunConfig};
use crate::output::{Csv, Sink};
use crate::{CliError, Suite};

#[derive(Serialize)]
struct WeldJson {
    order: usize,
    grid: usize,
    residual_sup: f64,
    newton_iters: usize,
    pair: PairJson,
}

pub fn weld(cfg: &RunConfig) -> Result<(), CliError> {
    let Input::Gamma(spec) = &cfg.input else {
        return Err(CliError::Usage("weld needs a `gamma` input".into()));
    };
    let s = cfg.weld(spec, cfg.tol)?;
    let sink = Sink::new(cfg.out.clone());
    sink.json(&WeldJson {
        order: cfg.order,
        grid: cfg.grid,
        residual_sup: s.residual_sup,
        newton_iters: s.newton_iters,
        pair: PairJson::of(&s.pair),
    })?;
    let mut csv = Csv::new(&["k", "theta", "re", "im"]);
    let m = s.curve_samples.len();
    for (k, z) in s.curve_samples.iter().enumerate() {
        csv.row(&[k as i64], &[std::f64::consts::TAU * k as f64 / m as f64, z.re, z.im]);
    }
    sink.csv(&csv)
}

fn coords(cfg: &RunConfig, pair: &UnivalentPair, chart: Chart) -> dtoda::Result<CoordinateVector> {
    match chart {
        Chart::Inverse => inverse_chart_of_pair(pair, cfg.order, cfg.grid),
        Chart::Wz => wz_moments(&pair.g_series(pair.window().max(cfg.order)), cfg.order, cfg.grid),
        c => direct_chart(pair, cfg.order, cfg.grid, c),
    }
}

fn write_coords(cfg: &RunConfig, cv: &CoordinateVector) -> Result<(), CliError> {
    let sink = Sink::new(cfg.out.clone());
    sink.json(cv)?;
    let mut csv = Csv::new(&["n", "t_re", "t_im", "v_re", "v_im"]);
    let k = cv.order() as i64;
    for n in -k..=k {
        csv.row(&[n], &[cv.t(n).re, cv.t(n).im, cv.v(n).re, cv.v(n).im]);
    }
    sink.csv(&csv)
}

pub fn chart(cfg: &RunConfig) -> Result<(), CliError> {
    let cv = coords(cfg, &cfg.pair()?, cfg.chart)?;
    write_coords(cfg, &cv)
}

pub fn moments(cfg: &RunConfig) -> Result<(), CliError> {
    let cv = coords(cfg, &cfg.pair()?, Chart::Wz)?;
    write_coords(cfg, &cv)
}

pub fn grunsky_cmd(cfg: &RunConfig) -> Result<(), CliError> {
    let b = grunsky(&cfg.pair()?)?;
    let sink = Sink::new(cfg.out.clone());
    sink.json(&b)?;
    let mut csv = Csv::new(&["m", "n", "re", "im"]);
    let k = b.order() as i64;
    for m in -k..=k {
        for n in -k..=k {
            csv.row(&[m, n], &[b.get(m, n).re, b.get(m, n).im]);
        }
    }
    sink.csv(&csv)
}

fn fd_chart(cfg: &RunConfig) -> Result<Chart, CliError> {
    match cfg.chart {
        Chart::Wz => Err(CliError::Usage("harmonic moments have no free energy".into())),
        c => Ok(c),
    }
}

fn fd_opts() -> InvertOptions {
    InvertOptions { tol: 1e-13, max_iter: 40 }
}

fn log_tau(pair: &UnivalentPair, cv: &CoordinateVector, m: usize) -> dtoda::Result<C64> {
    match cv.chart {
        Chart::Inverse => log_tau_inverse(pair, cv, m),
        Chart::Extended => Ok(C64::new(log_tau_extended(pair, cv, m)?, 0.0)),
        _ => log_tau_direct(pair, cv, m),
    }
}

pub fn tau(cfg: &RunConfig) -> Result<(), CliError> {
    let chart = fd_chart(cfg)?;
    let pair = cfg.pair()?;
    let cv = coords(cfg, &pair, chart)?;
    let lt = log_tau(&pair, &cv, cfg.grid)?;
    let hessian = match &cfg.indices {
        Some(idx) => {
            let fam = ChartFamily::new(pair, chart, cfg.order, cfg.grid)?;
            Some(hessian_fd(&Prober::new(&fam, fd_opts())?, idx, cfg.h)?)
        }
        None => None,
    };
    let rec = FreeEnergyRecord::new(chart, lt, &cv, hessian.as_ref());
    let sink = Sink::new(cfg.out.clone());
    sink.json(&rec)?;
    let mut csv = Csv::new(&["n", "v_re", "v_im"]);
    for &(n, re, im) in &rec.gradient {
        csv.row(&[n], &[re, im]);
    }
    sink.csv(&csv)
}

/// One line of a verification report.
#[derive(Serialize)]
struct Check {
    check: String,
    chart: Chart,
    base: String,
    n: Option<i64>,
    h: Option<f64>,
    residual: f64,
    h_half_residual: Option<f64>,
    ratio: Option<f64>,
    threshold: f64,
    pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct Report {
    suite: Suite,
    pass: bool,
    checks: Vec<Check>,
}

impl Check {
    fn plain(check: &str, cfg: &RunConfig, chart: Chart, residual: f64, threshold: f64) -> Self {
        Self {
            check: check.into(),
            chart,
            base: cfg.base_name().into(),
            n: None,
            h: None,
            residual,
            h_half_residual: None,
            ratio: None,
            threshold,
            // NaN residuals fail
            pass: residual < threshold,
            error: None,
        }
    }

    /// A second-order check whose finite-difference probes could not be
    /// evaluated, typically because the step leaves the chart's domain.
    fn failed(check: &str, chart: Chart, base: &str, n: Option<i64>, h: f64, threshold: f64, e: dtoda::Error) -> Self {
        Self {
            check: check.into(),
            chart,
            base: base.into(),
            n,
            h: Some(h),
            residual: f64::NAN,
            h_half_residual: None,
            ratio: None,
            threshold,
            pass: false,
            error: Some(e.to_string()),
        }
    }

    /// Second-order differences: the residual must be small and shrink by
    /// about four when `h` halves.
    fn second_order(r: FdReport, threshold: f64) -> Self {
        Self {
            pass: r.residual < threshold && (3.5..=4.5).contains(&r.ratio),
            check: r.check,
            chart: r.chart,
            base: r.base,
            n: r.n,
            h: Some(r.h),
            residual: r.residual,
            h_half_residual: Some(r.h_half_residual),
            ratio: Some(r.ratio),
            threshold,
            error: None,
        }
    }
}

impl Suite {
    fn default_threshold(self) -> f64 {
        match self {
            Suite::Hirota | Suite::Lax | Suite::String => 1e-5,
            Suite::Rh | Suite::Gradient => 1e-6,
            Suite::Symmetry => 1e-9,
        }
    }
}

pub fn verify(cfg: &RunConfig, suite: Suite) -> Result<bool, CliError> {
    let thr = cfg.tol.unwrap_or(suite.default_threshold());
    let pair = cfg.pair()?;
    let base = cfg.base_name();
    let fd = |chart: Chart| ChartFamily::new(pair.clone(), chart, cfg.order, cfg.grid);
    let checks = match suite {
        Suite::Hirota => {
            let chart = fd_chart(cfg)?;
            let idx = cfg.indices.clone().unwrap_or_else(|| (-2..=2).collect());
            let k = idx.iter().map(|n| n.unsigned_abs() as usize).max().unwrap_or(1).max(1);
            let fam = fd(chart)?;
            let got = hessian_fd(&Prober::new(&fam, fd_opts())?, &idx, cfg.h)?;
            let want = hessian_from_grunsky(&chart_grunsky(&pair, chart, k)?, &idx);
            let mut c = Check::plain("hirota", cfg, chart, got.relative_error(&want), thr);
            c.h = Some(cfg.h);
            vec![c]
        }
        Suite::Lax => {
            let chart = fd_chart(cfg)?;
            let fam = fd(chart)?;
            let p = Prober::new(&fam, fd_opts())?;
            [1i64, -1, 2, -2]
                .into_iter()
                .map(|n| match lax_residual(&p, n, cfg.h, 2 * cfg.order, cfg.window, base) {
                    Ok(r) => Check::second_order(r, thr),
                    Err(e) => Check::failed("lax", chart, base, Some(n), cfg.h, thr, e),
                })
                .collect()
        }
        Suite::String => {
            let chart = fd_chart(cfg)?;
            let fam = fd(chart)?;
            let p = Prober::new(&fam, fd_opts())?;
            vec![match string_residual(&p, cfg.h, 2 * cfg.order, cfg.window, base) {
                Ok(r) => Check::second_order(r, thr),
                Err(e) => Check::failed("string", chart, base, None, cfg.h, thr, e),
            }]
        }
        Suite::Rh => {
            let chart = fd_chart(cfg)?;
            let r = rh_residual(&pair, &coords(cfg, &pair, chart)?, cfg.grid)?;
            vec![
                Check::plain("rh_l_inverse_m", cfg, chart, r.res1, thr),
                Check::plain("rh_lt_mt", cfg, chart, r.res2, thr),
                Check::plain("rh_orlov_gap", cfg, chart, r.orlov_gap, thr),
            ]
        }
        Suite::Symmetry => {
            let b = grunsky(&pair)?;
            let faber = faber_residuals(&pair, &b, cfg.grid)?;
            let mut out = vec![Check::plain("grunsky_symmetry", cfg, Chart::Inverse, b.max_asymmetry(), thr)];
            for (i, r) in faber.into_iter().enumerate() {
                out.push(Check::plain(&format!("faber_identity_{}", i + 1), cfg, Chart::Inverse, r, thr));
            }
            out
        }
        Suite::Gradient => {
            let fam = fd(fd_chart(cfg)?)?;
            let p = Prober::new(&fam, fd_opts())?;
            let idx = cfg.indices.clone().unwrap_or_else(|| (-3..=3).collect());
            let got = gradient_fd(&p, &idx, cfg.h)?;
            let v = &p.base().coords;
            let scale = idx.iter().fold(0.0f64, |m, &n| m.max(v.v(n).norm())).max(1.0);
            idx.iter()
                .zip(got)
                .map(|(&n, g)| {
                    let mut c = Check::plain("gradient", cfg, fam.chart(), (g - v.v(n)).norm() / scale, thr);
                    c.n = Some(n);
                    c.h = Some(cfg.h);
                    c
                })
                .collect()
        }
    };
    let pass = checks.iter().all(|c| c.pass);
    Sink::new(cfg.out.clone()).json(&Report { suite, pass, checks })?;
    Ok(pass)
}
