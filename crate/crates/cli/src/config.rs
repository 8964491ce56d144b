//! Run configuration: a JSON file, overridden field by field by flags.

use std::path::{Path, PathBuf};

use dtoda::welding::{mobius_weld, weld, WeldOptions};
use dtoda::{Chart, CircleHomeo, HomeoSpec, MobiusParams, Role, UnivalentPair, WeldingSolution, C64};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// `f = sum f[k] z^(k+1)`, `g = b z + sum g[k] z^-k`, entries `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairJson {
    pub f: Vec<[f64; 2]>,
    pub b: [f64; 2],
    pub g: Vec<[f64; 2]>,
}

impl PairJson {
    pub fn of(pair: &UnivalentPair) -> Self {
        let pack = |cs: &[C64]| cs.iter().map(|c| [c.re, c.im]).collect();
        Self { f: pack(pair.f_coeffs()), b: [pair.g_lead().re, pair.g_lead().im], g: pack(pair.g_coeffs()) }
    }

    fn build(&self) -> dtoda::Result<UnivalentPair> {
        let unpack = |cs: &[[f64; 2]]| cs.iter().map(|c| C64::new(c[0], c[1])).collect();
        UnivalentPair::new(unpack(&self.f), C64::new(self.b[0], self.b[1]), unpack(&self.g), Role::Forward)
    }
}

/// Either coefficient lists or a disc automorphism.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PairInput {
    Coeffs(PairJson),
    Mobius { mobius: MobiusJson },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MobiusJson {
    pub a: [f64; 2],
    pub alpha: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub gamma: Option<HomeoSpec>,
    pub pair: Option<PairInput>,
    pub order: Option<usize>,
    pub grid: Option<usize>,
    pub tol: Option<f64>,
    pub h: Option<f64>,
    pub chart: Option<Chart>,
    pub suite: Option<String>,
    /// Hessian indices for `tau`; Grunsky-pattern indices for `verify hirota`.
    pub indices: Option<Vec<i64>>,
    /// Coefficient window `|j| <= window` for the Lax and string checks.
    pub window: Option<usize>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub order: Option<usize>,
    pub grid: Option<usize>,
    pub tol: Option<f64>,
    pub h: Option<f64>,
    pub chart: Option<Chart>,
    pub suite: Option<String>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub enum Input {
    Gamma(HomeoSpec),
    Pair(PairInput),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: Input,
    pub order: usize,
    pub grid: usize,
    pub tol: Option<f64>,
    pub h: f64,
    pub chart: Chart,
    pub suite: Option<String>,
    pub indices: Option<Vec<i64>>,
    pub window: usize,
    pub out: Option<PathBuf>,
}

pub const DEFAULT_ORDER: usize = 16;
pub const DEFAULT_H: f64 = 1e-3;

fn default_grid(order: usize) -> usize {
    (4 * (order + 1)).next_power_of_two().max(256)
}

impl RunConfig {
    pub fn load(path: &Path, over: Overrides) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
        let file: FileConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Parse { path: path.to_path_buf(), source: e })?;
        Self::resolve(file, over)
    }

    pub fn resolve(file: FileConfig, over: Overrides) -> Result<Self, CliError> {
        let input = match (file.gamma, file.pair) {
            (Some(g), None) => Input::Gamma(g),
            (None, Some(p)) => Input::Pair(p),
            (Some(_), Some(_)) => return Err(CliError::Usage("config sets both `gamma` and `pair`".into())),
            (None, None) => return Err(CliError::Usage("config needs a `gamma` or a `pair`".into())),
        };
        let order = over.order.or(file.order).unwrap_or(DEFAULT_ORDER);
        let grid = over.grid.or(file.grid).unwrap_or_else(|| default_grid(order));
        let tol = over.tol.or(file.tol);
        let h = over.h.or(file.h).unwrap_or(DEFAULT_H);
        if order == 0 {
            return Err(CliError::Usage("order must be positive".into()));
        }
        if !grid.is_power_of_two() || grid < 4 * (order + 1) {
            return Err(CliError::Usage(format!(
                "grid {grid} must be a power of two and at least 4 (order + 1) = {}",
                4 * (order + 1)
            )));
        }
        if let Some(t) = tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(CliError::Usage(format!("tolerance {t} must be positive")));
            }
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(CliError::Usage(format!("step {h} must be positive")));
        }
        Ok(Self {
            input,
            order,
            grid,
            tol,
            h,
            chart: over.chart.or(file.chart).unwrap_or(Chart::Inverse),
            suite: over.suite.or(file.suite),
            indices: file.indices,
            window: file.window.unwrap_or(4),
            out: over.out.or(file.out),
        })
    }

    /// Welds `gamma` at the configured order and grid. A bare disc
    /// automorphism is welded in closed form.
    pub fn weld(&self, gamma: &HomeoSpec, tol: Option<f64>) -> dtoda::Result<WeldingSolution> {
        if let HomeoSpec::Mobius { a, alpha } = gamma {
            return mobius_weld(MobiusParams::new(C64::new(a[0], a[1]), *alpha)?, self.order, self.grid);
        }
        let g = CircleHomeo::from_spec(gamma, self.order, self.grid)?;
        let tol = tol.unwrap_or(WeldOptions::default().tol);
        weld(&g, WeldOptions { tol, ..WeldOptions::default() })
    }

    pub fn pair(&self) -> dtoda::Result<UnivalentPair> {
        match &self.input {
            Input::Gamma(g) => Ok(self.weld(g, None)?.pair),
            Input::Pair(PairInput::Coeffs(p)) => p.build(),
            Input::Pair(PairInput::Mobius { mobius }) => {
                UnivalentPair::mobius(C64::new(mobius.a[0], mobius.a[1]), mobius.alpha, self.order)
            }
        }
    }

    /// Short label for reports.
    pub fn base_name(&self) -> &'static str {
        match &self.input {
            Input::Gamma(HomeoSpec::Mobius { .. }) | Input::Pair(PairInput::Mobius { .. }) => "mobius",
            Input::Gamma(_) => "welded",
            Input::Pair(_) => "pair",
        }
    }
}
