//! INI-style scenario files for the two-mode merge/split system.
//!
//! ```text
//! # comments start with '#' or ';'
//! [mode1]
//! alpha1 = 2.5
//! [run]
//! T = 5
//! cfl_mode = warn
//! ```
//!
//! Sections are `mode1`, `mode2`, `run`, `initial` and `mc`. Missing keys
//! keep their defaults; unknown sections or keys are errors.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{build_mode1_mask, Grid1D, LineEnd, Mesh};
use crate::model::{CflMode, Drift, InitialSpec, McSettings, ModeId, ModeSpec, Reset, Scenario};

/// Flat parameter set of the two-mode scenario. Defaults reproduce the
/// reference example.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub alpha1: f64,
    pub gamma1: f64,
    pub sigma1: f64,
    pub epsilon: f64,
    pub n_a: usize,
    pub n_b: usize,

    pub gamma2: f64,
    pub sigma2: f64,
    pub n_c: usize,
    pub reset_a: f64,
    pub reset_b: f64,
    pub delta_width_cells: f64,

    pub t_final: f64,
    pub n_steps: usize,
    pub snapshot_stride: usize,
    pub cfl_mode: CflMode,

    pub mu_a: f64,
    pub mu_b: f64,
    pub var_a: f64,
    pub var_b: f64,

    pub n_particles: usize,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            alpha1: 2.5,
            gamma1: 0.2,
            sigma1: 0.01,
            epsilon: 0.05,
            n_a: 201,
            n_b: 201,
            gamma2: 0.2,
            sigma2: 0.01,
            n_c: 201,
            reset_a: 0.5,
            reset_b: 0.8,
            delta_width_cells: 3.0,
            t_final: 5.0,
            n_steps: 20000,
            snapshot_stride: 2000,
            cfl_mode: CflMode::Error,
            mu_a: 0.6,
            mu_b: 0.2,
            var_a: 0.008,
            var_b: 0.004,
            n_particles: 200_000,
            seed: 1,
        }
    }
}

fn parse_value<T: std::str::FromStr>(raw: &str, path: &str, line: usize, key: &str) -> Result<T> {
    raw.parse().map_err(|_| Error::Parse {
        path: path.to_string(),
        line,
        message: format!("invalid value `{raw}` for `{key}`"),
    })
}

impl ScenarioConfig {
    /// Parse config text; `path` only labels error messages.
    pub fn parse(text: &str, path: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut section: Option<String> = None;
        let mut seen: Vec<(String, String)> = Vec::new();
        for (k, raw_line) in text.lines().enumerate() {
            let line = k + 1;
            let err = |message: String| Error::Parse {
                path: path.to_string(),
                line,
                message,
            };
            let content = raw_line.split(['#', ';']).next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err(format!("malformed section header `{content}`")))?
                    .trim();
                if !["mode1", "mode2", "run", "initial", "mc"].contains(&name) {
                    return Err(err(format!("unknown section `[{name}]`")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, found `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let sec = section
                .as_deref()
                .ok_or_else(|| err(format!("key `{key}` appears before any section")))?;
            if seen.iter().any(|(s, k)| s == sec && k == key) {
                return Err(err(format!("duplicate key `{key}` in [{sec}]")));
            }
            seen.push((sec.to_string(), key.to_string()));
            let p = |v: &str| parse_value::<f64>(v, path, line, key);
            let u = |v: &str| parse_value::<usize>(v, path, line, key);
            match (sec, key) {
                ("mode1", "alpha1") => cfg.alpha1 = p(value)?,
                ("mode1", "gamma1") => cfg.gamma1 = p(value)?,
                ("mode1", "sigma1") => cfg.sigma1 = p(value)?,
                ("mode1", "epsilon") => cfg.epsilon = p(value)?,
                ("mode1", "n_a") => cfg.n_a = u(value)?,
                ("mode1", "n_b") => cfg.n_b = u(value)?,
                ("mode2", "gamma2") => cfg.gamma2 = p(value)?,
                ("mode2", "sigma2") => cfg.sigma2 = p(value)?,
                ("mode2", "n_c") => cfg.n_c = u(value)?,
                ("mode2", "reset_a") => cfg.reset_a = p(value)?,
                ("mode2", "reset_b") => cfg.reset_b = p(value)?,
                ("mode2", "delta_width_cells") => cfg.delta_width_cells = p(value)?,
                ("run", "T") => cfg.t_final = p(value)?,
                ("run", "n_steps") => cfg.n_steps = u(value)?,
                ("run", "snapshot_stride") => cfg.snapshot_stride = u(value)?,
                ("run", "cfl_mode") => {
                    cfg.cfl_mode = match value {
                        "error" => CflMode::Error,
                        "warn" => CflMode::Warn,
                        _ => return Err(err(format!("cfl_mode must be `error` or `warn`, found `{value}`"))),
                    }
                }
                ("initial", "mu_a") => cfg.mu_a = p(value)?,
                ("initial", "mu_b") => cfg.mu_b = p(value)?,
                ("initial", "var_a") => cfg.var_a = p(value)?,
                ("initial", "var_b") => cfg.var_b = p(value)?,
                ("mc", "n_particles") => cfg.n_particles = u(value)?,
                ("mc", "seed") => cfg.seed = parse_value(value, path, line, key)?,
                _ => return Err(err(format!("unknown key `{key}` in [{sec}]"))),
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Config text that parses back to `self`.
    pub fn to_ini(&self) -> String {
        let mut s = String::new();
        let cfl = match self.cfl_mode {
            CflMode::Error => "error",
            CflMode::Warn => "warn",
        };
        // Writing to a String cannot fail.
        let _ = write!(
            s,
            "[mode1]\nalpha1 = {:?}\ngamma1 = {:?}\nsigma1 = {:?}\nepsilon = {:?}\nn_a = {}\nn_b = {}\n\n\
             [mode2]\ngamma2 = {:?}\nsigma2 = {:?}\nn_c = {}\nreset_a = {:?}\nreset_b = {:?}\ndelta_width_cells = {:?}\n\n\
             [run]\nT = {:?}\nn_steps = {}\nsnapshot_stride = {}\ncfl_mode = {}\n\n\
             [initial]\nmu_a = {:?}\nmu_b = {:?}\nvar_a = {:?}\nvar_b = {:?}\n\n\
             [mc]\nn_particles = {}\nseed = {}\n",
            self.alpha1,
            self.gamma1,
            self.sigma1,
            self.epsilon,
            self.n_a,
            self.n_b,
            self.gamma2,
            self.sigma2,
            self.n_c,
            self.reset_a,
            self.reset_b,
            self.delta_width_cells,
            self.t_final,
            self.n_steps,
            self.snapshot_stride,
            cfl,
            self.mu_a,
            self.mu_b,
            self.var_a,
            self.var_b,
            self.n_particles,
            self.seed,
        );
        s
    }

    /// Construct grids, masks and modes and validate the result.
    pub fn build(&self) -> Result<Scenario> {
        let a = Grid1D::unit(self.n_a)?;
        let b = Grid1D::unit(self.n_b)?;
        let c = Grid1D::unit(self.n_c)?;
        let mask = build_mode1_mask(a, b, self.epsilon)?;
        let spacing = a.dx().max(b.dx());
        let mode1 = ModeSpec::new(
            ModeId(1),
            Mesh::Plane(mask),
            Drift::Rotation {
                alpha: self.alpha1,
                gamma: self.gamma1,
            },
            self.sigma1,
            Some(Reset::MidpointMerge { target: ModeId(2) }),
        )?;
        let mode2 = ModeSpec::new(
            ModeId(2),
            Mesh::Line {
                grid: c,
                left: LineEnd::Reflecting,
                right: LineEnd::Guard,
            },
            Drift::Shift { gamma: self.gamma2 },
            self.sigma2,
            Some(Reset::PointSplit {
                target: ModeId(1),
                point: [self.reset_a, self.reset_b],
                delta_width: self.delta_width_cells * spacing,
            }),
        )?;
        Scenario::new(
            vec![mode1, mode2],
            InitialSpec {
                mode: ModeId(1),
                mean: vec![self.mu_a, self.mu_b],
                variance: vec![self.var_a, self.var_b],
            },
            self.t_final,
            self.n_steps,
            self.snapshot_stride,
            McSettings {
                n_particles: self.n_particles,
                seed: self.seed,
            },
            self.cfl_mode,
        )
    }
}

/// Read, parse and validate a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    ScenarioConfig::load(path)?.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(ScenarioConfig::parse("", "x").unwrap(), ScenarioConfig::default());
        assert_eq!(
            ScenarioConfig::parse("# nothing\n\n ; here\n", "x").unwrap(),
            ScenarioConfig::default()
        );
    }

    #[test]
    fn round_trip() {
        let c = ScenarioConfig {
            sigma1: 0.1 + 0.2,
            cfl_mode: CflMode::Warn,
            seed: u64::MAX,
            ..ScenarioConfig::default()
        };
        assert_eq!(ScenarioConfig::parse(&c.to_ini(), "x").unwrap(), c);
        let d = ScenarioConfig::default();
        assert_eq!(ScenarioConfig::parse(&d.to_ini(), "x").unwrap(), d);
    }

    #[test]
    fn overrides_and_comments() {
        let c = ScenarioConfig::parse("[run]\nT = 2.5  # shorter\nn_steps=100\n[mode1]\nn_a = 51\n", "x").unwrap();
        assert_eq!(c.t_final, 2.5);
        assert_eq!(c.n_steps, 100);
        assert_eq!(c.n_a, 51);
        assert_eq!(c.n_b, 201);
    }

    fn parse_err(text: &str) -> (usize, String) {
        match ScenarioConfig::parse(text, "cfg").unwrap_err() {
            Error::Parse { line, message, .. } => (line, message),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(parse_err("[run]\n\nTT = 3\n").0, 3);
        assert!(parse_err("[run]\nTT = 3\n").1.contains("TT"));
        assert_eq!(parse_err("[bogus]\n").0, 1);
        assert_eq!(parse_err("T = 1\n").0, 1);
        assert_eq!(parse_err("[run]\nn_steps = -4\n").0, 2);
        assert_eq!(parse_err("[run]\nT = 1\nT = 2\n").0, 3);
        assert_eq!(parse_err("[run]\ncfl_mode = maybe\n").0, 2);
        assert_eq!(parse_err("[mode1\n").0, 1);
        assert_eq!(parse_err("[mc]\nseed\n").0, 2);
    }

    #[test]
    fn desk_defaults_build() {
        let c = ScenarioConfig {
            n_a: 51,
            n_b: 51,
            n_c: 51,
            n_steps: 2000,
            ..ScenarioConfig::default()
        };
        let s = c.build().unwrap();
        assert_eq!(s.modes().len(), 2);
        match s.modes()[1].reset().unwrap() {
            Reset::PointSplit { delta_width, point, .. } => {
                assert!((delta_width - 3.0 / 51.0).abs() < 1e-15);
                assert_eq!(*point, [0.5, 0.8]);
            }
            r => panic!("unexpected {r:?}"),
        }
    }

    #[test]
    fn coarse_band_is_rejected() {
        let c = ScenarioConfig {
            n_a: 20,
            n_b: 20,
            ..ScenarioConfig::default()
        };
        assert!(matches!(c.build().unwrap_err(), Error::UnderResolvedBand { .. }));
    }
}
