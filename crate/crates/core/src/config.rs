//! Sectioned `key = value` run configuration.
//!
//! ```text
//! [game]
//! sigma0 = 0.15
//! rho = 0.02
//! f_poly = 3, 1
//! c0 = 100
//! c1 = 15
//! g1 = 15
//!
//! [grid]
//! x_max = 4
//! h = 1/64
//! ```
//!
//! Lines starting with `#` or `;` are comments. Reals accept fractions
//! such as `1/64`.

use std::collections::HashMap;
use std::path::PathBuf;

use crate::discretization::{build_grid, BoundaryData, ImpulseMode};
use crate::driver::DriverParams;
use crate::error::{Error, Result};
use crate::game::{CostFamily, GainFamily, GameSpec, PayoffFamily};
use crate::solver::{SolverParams, SolverVariant, StoppingDenominator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiagnosticsLevel {
    Off,
    #[default]
    Basic,
    Full,
}

impl std::str::FromStr for DiagnosticsLevel {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "off" => Ok(Self::Off),
            "basic" => Ok(Self::Basic),
            "full" => Ok(Self::Full),
            _ => Err(format!("expected off, basic or full, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub x_max: f64,
    pub h: f64,
    pub impulse_mode: ImpulseMode,
    /// Explicit Neumann slopes; defaults are derived from the game otherwise.
    pub lbc: Option<f64>,
    pub rbc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub diagnostics: DiagnosticsLevel,
    /// Significant digits for reals in CSV output.
    pub precision: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            diagnostics: DiagnosticsLevel::Basic,
            precision: 17,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Reference {
    pub boundary: Option<f64>,
    pub target: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub game: GameSpec,
    pub grid: GridConfig,
    pub solver: SolverParams,
    pub driver: DriverParams,
    pub output: OutputConfig,
    pub sweep: Option<Vec<f64>>,
    pub reference: Option<Reference>,
}

impl RunConfig {
    /// Boundary slopes: explicit values where given, game defaults otherwise.
    pub fn boundary(&self) -> BoundaryData {
        let d = crate::discretization::default_boundary(&self.game);
        BoundaryData {
            lbc: self.grid.lbc.unwrap_or(d.lbc),
            rbc: self.grid.rbc.unwrap_or(d.rbc),
        }
    }

    /// Whether any default boundary slope comes from the non-affine fallback.
    pub fn boundary_is_heuristic(&self) -> bool {
        crate::discretization::boundary_is_heuristic(&self.game)
            && (self.grid.lbc.is_none() || self.grid.rbc.is_none())
    }
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Config {
        line,
        msg: msg.into(),
    }
}

/// Parses a finite real, allowing `a/b`.
pub fn parse_real(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    let value = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| format!("invalid number `{s}`"))?;
            let b: f64 = b.trim().parse().map_err(|_| format!("invalid number `{s}`"))?;
            a / b
        }
        None => s.parse().map_err(|_| format!("invalid number `{s}`"))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("`{s}` is not a finite number"))
    }
}

struct Entry {
    line: usize,
    value: String,
}

const KEYS: &[(&str, &[&str])] = &[
    (
        "game",
        &[
            "drift_kappa",
            "sigma0",
            "rho",
            "f_poly",
            "f_abs",
            "c0",
            "c1",
            "c2",
            "c_sqrt",
            "g0",
            "g1",
            "symmetry_line",
        ],
    ),
    ("grid", &["x_max", "h", "impulse_mode", "lbc", "rbc"]),
    (
        "solver",
        &[
            "variant",
            "lambda",
            "inner_tol",
            "tol",
            "scale",
            "max_outer_iters",
            "max_inner_iters",
            "cycle_window",
            "stopping_denominator",
        ],
    ),
    ("output", &["dir", "diagnostics", "precision"]),
    ("sweep", &["h"]),
    ("reference", &["boundary", "target"]),
];

struct Sections {
    map: HashMap<(String, String), Entry>,
    seen: HashMap<String, usize>,
}

impl Sections {
    fn get(&self, sec: &str, key: &str) -> Option<&Entry> {
        self.map.get(&(sec.to_string(), key.to_string()))
    }

    fn real(&self, sec: &str, key: &str) -> Result<Option<(f64, usize)>> {
        self.get(sec, key)
            .map(|e| parse_real(&e.value).map(|v| (v, e.line)).map_err(|m| err(e.line, m)))
            .transpose()
    }

    fn real_or(&self, sec: &str, key: &str, default: f64) -> Result<f64> {
        Ok(self.real(sec, key)?.map_or(default, |(v, _)| v))
    }

    fn count(&self, sec: &str, key: &str, default: usize) -> Result<usize> {
        match self.get(sec, key) {
            None => Ok(default),
            Some(e) => e
                .value
                .trim()
                .parse()
                .map_err(|_| err(e.line, format!("expected a nonnegative integer, got `{}`", e.value))),
        }
    }

    fn list(&self, sec: &str, key: &str) -> Result<Option<(Vec<f64>, usize)>> {
        let Some(e) = self.get(sec, key) else {
            return Ok(None);
        };
        let values = e
            .value
            .split(',')
            .map(|s| parse_real(s).map_err(|m| err(e.line, m)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Some((values, e.line)))
    }
}

fn tokenize(text: &str) -> Result<Sections> {
    let mut map = HashMap::new();
    let mut seen = HashMap::new();
    let mut section: Option<String> = None;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split(['#', ';']).next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| err(line, "unterminated section header"))?
                .trim();
            if !KEYS.iter().any(|(s, _)| *s == name) {
                return Err(err(line, format!("unknown section [{name}]")));
            }
            if seen.insert(name.to_string(), line).is_some() {
                return Err(err(line, format!("duplicate section [{name}]")));
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected `key = value`, got `{content}`")))?;
        let key = key.trim();
        let sec = section
            .as_deref()
            .ok_or_else(|| err(line, format!("key `{key}` outside of any section")))?;
        let allowed = KEYS.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or(&[]);
        if !allowed.contains(&key) {
            return Err(err(line, format!("unknown key `{key}` in [{sec}]")));
        }
        let entry = Entry {
            line,
            value: value.trim().to_string(),
        };
        if map.insert((sec.to_string(), key.to_string()), entry).is_some() {
            return Err(err(line, format!("duplicate key `{key}` in [{sec}]")));
        }
    }
    Ok(Sections { map, seen })
}

fn check_step(x_max: f64, h: f64, line: usize) -> Result<()> {
    build_grid(x_max, h).map(|_| ()).map_err(|e| err(line, e.to_string()))
}

fn parse_game(s: &Sections) -> Result<GameSpec> {
    let rho = s.real("game", "rho")?;
    let sigma = s.real("game", "sigma0")?;
    let header = s.seen.get("game").copied().unwrap_or(0);
    let (rho, rho_line) = rho.ok_or_else(|| err(header, "missing `rho` in [game]"))?;
    let (sigma0, sigma_line) = sigma.ok_or_else(|| err(header, "missing `sigma0` in [game]"))?;
    if rho <= 0.0 {
        return Err(err(rho_line, "rho must be > 0"));
    }
    if sigma0 <= 0.0 {
        return Err(err(sigma_line, "sigma0 must be > 0"));
    }
    let kappa = s.real("game", "drift_kappa")?;
    if let Some((k, line)) = kappa {
        if k < 0.0 {
            return Err(err(line, "drift_kappa must be >= 0"));
        }
    }
    let poly = s.list("game", "f_poly")?.map_or_else(Vec::new, |(v, _)| v);
    let spec = GameSpec::new(
        kappa.map_or(0.0, |(k, _)| k),
        sigma0,
        rho,
        PayoffFamily::new(poly, s.real_or("game", "f_abs", 0.0)?),
        CostFamily {
            c0: s.real_or("game", "c0", 0.0)?,
            c1: s.real_or("game", "c1", 0.0)?,
            c2: s.real_or("game", "c2", 0.0)?,
            c_sqrt: s.real_or("game", "c_sqrt", 0.0)?,
        },
        GainFamily {
            g0: s.real_or("game", "g0", 0.0)?,
            g1: s.real_or("game", "g1", 0.0)?,
        },
    )
    .map_err(|e| err(header, e.to_string()))?;
    Ok(spec.with_symmetry_line(s.real_or("game", "symmetry_line", 0.0)?))
}

fn parse_grid(s: &Sections) -> Result<GridConfig> {
    let header = s.seen.get("grid").copied().unwrap_or(0);
    let (x_max, _) = s
        .real("grid", "x_max")?
        .ok_or_else(|| err(header, "missing `x_max` in [grid]"))?;
    let (h, h_line) = s
        .real("grid", "h")?
        .ok_or_else(|| err(header, "missing `h` in [grid]"))?;
    check_step(x_max, h, h_line)?;
    let impulse_mode = match s.get("grid", "impulse_mode") {
        None => ImpulseMode::Constrained,
        Some(e) => match e.value.as_str() {
            "constrained" => ImpulseMode::Constrained,
            "unconstrained" => ImpulseMode::Unconstrained,
            other => {
                return Err(err(
                    e.line,
                    format!("impulse_mode must be constrained or unconstrained, got `{other}`"),
                ))
            }
        },
    };
    Ok(GridConfig {
        x_max,
        h,
        impulse_mode,
        lbc: s.real("grid", "lbc")?.map(|(v, _)| v),
        rbc: s.real("grid", "rbc")?.map(|(v, _)| v),
    })
}

fn positive(s: &Sections, key: &str, default: f64, allow_zero: bool) -> Result<f64> {
    match s.real("solver", key)? {
        None => Ok(default),
        Some((v, line)) => {
            if v > 0.0 || (allow_zero && v == 0.0) {
                Ok(v)
            } else {
                let bound = if allow_zero { ">= 0" } else { "> 0" };
                Err(err(line, format!("{key} must be {bound}")))
            }
        }
    }
}

fn parse_solver(s: &Sections) -> Result<(SolverParams, DriverParams)> {
    let sp_default = SolverParams::default();
    let dp_default = DriverParams::default();
    let variant = match s.get("solver", "variant") {
        None => SolverVariant::Fppi,
        Some(e) => match e.value.as_str() {
            "fppi" => SolverVariant::Fppi,
            "howard" => SolverVariant::Howard,
            other => return Err(err(e.line, format!("variant must be fppi or howard, got `{other}`"))),
        },
    };
    let denominator = match s.get("solver", "stopping_denominator") {
        None => StoppingDenominator::Abs,
        Some(e) => match e.value.as_str() {
            "abs" => StoppingDenominator::Abs,
            "signed" => StoppingDenominator::Signed,
            other => {
                return Err(err(
                    e.line,
                    format!("stopping_denominator must be abs or signed, got `{other}`"),
                ))
            }
        },
    };
    let scale = positive(s, "scale", sp_default.scale, false)?;
    let solver = SolverParams {
        lambda: positive(s, "lambda", sp_default.lambda, false)?,
        inner_tol: positive(s, "inner_tol", sp_default.inner_tol, false)?,
        scale,
        max_inner_iters: s.count("solver", "max_inner_iters", sp_default.max_inner_iters)?,
        variant,
        denominator,
    };
    let driver = DriverParams {
        tol: positive(s, "tol", dp_default.tol, true)?,
        scale,
        max_outer_iters: s.count("solver", "max_outer_iters", dp_default.max_outer_iters)?,
        cycle_window: s.count("solver", "cycle_window", dp_default.cycle_window)?,
        ..dp_default
    };
    Ok((solver, driver))
}

fn parse_output(s: &Sections) -> Result<OutputConfig> {
    let mut out = OutputConfig::default();
    if let Some(e) = s.get("output", "dir") {
        out.dir = Some(PathBuf::from(&e.value));
    }
    if let Some(e) = s.get("output", "diagnostics") {
        out.diagnostics = e.value.parse().map_err(|m: String| err(e.line, m))?;
    }
    if let Some(e) = s.get("output", "precision") {
        out.precision = e
            .value
            .parse()
            .ok()
            .filter(|p| (1..=17).contains(p))
            .ok_or_else(|| err(e.line, "precision must be an integer between 1 and 17"))?;
    }
    Ok(out)
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let s = tokenize(text)?;
    let game = parse_game(&s)?;
    let grid = parse_grid(&s)?;
    let (solver, driver) = parse_solver(&s)?;
    let output = parse_output(&s)?;
    let sweep = match s.list("sweep", "h")? {
        None => None,
        Some((hs, line)) => {
            for &h in &hs {
                check_step(grid.x_max, h, line)?;
            }
            Some(hs)
        }
    };
    let reference = s.seen.contains_key("reference").then(|| -> Result<Reference> {
        Ok(Reference {
            boundary: s.real("reference", "boundary")?.map(|(v, _)| v),
            target: s.real("reference", "target")?.map(|(v, _)| v),
        })
    });
    Ok(RunConfig {
        game,
        grid,
        solver,
        driver,
        output,
        sweep,
        reference: reference.transpose()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINEAR: &str = "
[game]
sigma0 = 0.15
rho = 0.02
f_poly = 3, 1
c0 = 100
c1 = 15
g1 = 15

[grid]
x_max = 4
h = 1/64
";

    #[test]
    fn linear_game_config() {
        let cfg = parse_config(LINEAR).unwrap();
        assert_eq!(cfg.game, GameSpec::linear_game());
        assert_eq!(cfg.grid.h, 1.0 / 64.0);
        assert_eq!(cfg.grid.impulse_mode, ImpulseMode::Constrained);
        assert_eq!(cfg.solver, SolverParams::default());
        assert_eq!(cfg.driver, DriverParams::default());
        assert_eq!(cfg.boundary(), BoundaryData { lbc: 15.0, rbc: 15.0 });
        assert!(cfg.sweep.is_none() && cfg.reference.is_none());
    }

    #[test]
    fn cash_game_config() {
        let text = "
[game]
sigma0 = 1
rho = .5
f_abs = -1
c0 = 3
c1 = 1
g0 = -1
[grid]
x_max = 8
h = 0.015625
";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.game, GameSpec::cash_game());
        assert_eq!(cfg.boundary(), BoundaryData { lbc: 1.0, rbc: 0.0 });
    }

    #[test]
    fn solver_section_overrides() {
        let text = format!(
            "{LINEAR}\n[solver]\nvariant = howard\nlambda = 2\ntol = 0\ncycle_window = 4\nstopping_denominator = signed\n"
        );
        let cfg = parse_config(&text).unwrap();
        assert_eq!(cfg.solver.variant, SolverVariant::Howard);
        assert_eq!(cfg.solver.lambda, 2.0);
        assert_eq!(cfg.solver.denominator, StoppingDenominator::Signed);
        assert_eq!(cfg.driver.tol, 0.0);
        assert_eq!(cfg.driver.cycle_window, 4);
    }

    #[test]
    fn sweep_and_reference() {
        let text = format!("{LINEAR}\n[sweep]\nh = 1, 1/2, 0.25\n[reference]\nboundary = -2.8238\ntarget = 1.5243\n");
        let cfg = parse_config(&text).unwrap();
        assert_eq!(cfg.sweep, Some(vec![1.0, 0.5, 0.25]));
        let r = cfg.reference.unwrap();
        assert_eq!((r.boundary, r.target), (Some(-2.8238), Some(1.5243)));
    }

    fn line_of(text: &str) -> usize {
        match parse_config(text) {
            Err(Error::Config { line, .. }) => line,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(line_of("[game]\nsigma0 = 1\nrho = 1\nfoo = 2\n"), 4);
        assert_eq!(line_of("[game]\nsigma0 = 1\nrho = abc\n"), 3);
        assert_eq!(line_of("[game]\nsigma0 = 1\nrho = 1\n[grid]\nx_max = 1\nh = 0.3\n"), 6);
        assert_eq!(line_of("[game]\nsigma0 = 1\nrho = -1\n"), 3);
        assert_eq!(line_of("[gaem]\n"), 1);
        assert_eq!(line_of("sigma0 = 1\n"), 1);
        assert_eq!(line_of(&format!("{LINEAR}[sweep]\nh = 1, 0.3\n")), 14);
        assert_eq!(line_of(&format!("{LINEAR}[solver]\nvariant = newton\n")), 14);
    }

    #[test]
    fn fractions_and_comments() {
        assert_eq!(parse_real("1/64"), Ok(0.015625));
        assert_eq!(parse_real(" -2.5 "), Ok(-2.5));
        assert!(parse_real("1/0").is_err());
        assert!(parse_real("nan").is_err());
        let text = LINEAR.replace("rho = 0.02", "rho = 0.02 # discount");
        assert_eq!(parse_config(&text).unwrap().game.rho, 0.02);
    }
}
