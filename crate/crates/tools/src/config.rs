//! TOML run configuration with the sections `[problem]`, `[grid]`, `[data]`,
//! `[output]` and `[verify]`. Unknown keys are rejected and every key has a
//! default, so an empty file describes the reference null-form run.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use penrose_core::compat::{GaussianBump, NonlinearitySpec, RadialProfile};
use penrose_core::geometry::ObstacleSpec;
use penrose_core::solver::{Forcing, InitialData, Shape, SolverConfig};

use crate::error::{CliError, Result};
use crate::profile::read_profile;

pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub problem: Problem,
    pub grid: Grid,
    pub data: Data,
    pub output: Output,
    pub verify: Verify,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Problem {
    pub obstacle_radius: f64,
    /// One of `zero`, `q0_radial`, `dt_squared`.
    pub nonlinearity: String,
    pub epsilon: f64,
    pub forcing: Option<ForcingParams>,
}

impl Default for Problem {
    fn default() -> Self {
        Self { obstacle_radius: 0.2, nonlinearity: "q0_radial".into(), epsilon: 0.01, forcing: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingParams {
    pub amplitude: f64,
    pub t_center: f64,
    pub t_width: f64,
    pub r_center: f64,
    pub r_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Grid {
    pub dr: f64,
    pub cfl: f64,
    pub t_max: f64,
    /// Defaults to the smallest radius free of boundary reflections.
    pub r_max: Option<f64>,
    pub snapshot_stride: usize,
    pub sweeps: usize,
    pub local_radius: Option<f64>,
}

impl Default for Grid {
    fn default() -> Self {
        let s = SolverConfig::default();
        Self {
            dr: s.dr,
            cfl: s.cfl,
            t_max: s.t_max,
            r_max: None,
            snapshot_stride: s.snapshot_stride,
            sweeps: s.sweeps,
            local_radius: None,
        }
    }
}

/// One Cauchy datum before scaling by `epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ShapeSpec {
    Zero,
    Gaussian { center: f64, width: f64, amplitude: f64 },
    /// Two-column `(r, value)` text on a uniform grid.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Data {
    pub f: ShapeSpec,
    pub g: ShapeSpec,
    /// Grid of analytic profiles handed to the compatibility jet.
    pub profile_dr: f64,
    pub profile_r_max: f64,
}

impl Default for Data {
    fn default() -> Self {
        Self {
            f: ShapeSpec::Zero,
            g: ShapeSpec::Gaussian { center: 1.5, width: 0.25, amplitude: 1.0 },
            profile_dr: 2e-3,
            profile_r_max: 3.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Output {
    pub dir: Option<PathBuf>,
    /// Write one CSV per stored frame.
    pub frames: bool,
}

impl Default for Output {
    fn default() -> Self {
        Self { dir: None, frames: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Verify {
    pub seed: u64,
    pub sigma: f64,
    pub jet_order: usize,
    pub compat_order: usize,
    pub compat_tol: Option<f64>,
    pub conservation_until: f64,
    pub morawetz_window: [f64; 2],
    pub power_window: [f64; 2],
    pub plateau_window: [f64; 2],
    pub weighted_order: usize,
    pub weighted_t_end: f64,
    pub slice_rows: usize,
    pub slice_dt: f64,
}

impl Default for Verify {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            sigma: 0.25,
            jet_order: 4,
            compat_order: 3,
            compat_tol: None,
            conservation_until: 40.0,
            morawetz_window: [5.0, 30.0],
            power_window: [10.0, 80.0],
            plateau_window: [20.0, 80.0],
            weighted_order: 2,
            weighted_t_end: PI - 0.05,
            slice_rows: 60,
            slice_dt: 2e-3,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: Config = toml::from_str(&text).map_err(|e| {
            let line = e.span().map_or(0, |s| text[..s.start].lines().count().max(1));
            CliError::parse(path, line, e.message())
        })?;
        cfg.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always serializable")
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn obstacle(&self) -> Result<ObstacleSpec> {
        Ok(ObstacleSpec::sphere(self.problem.obstacle_radius)?)
    }

    pub fn nonlinearity(&self) -> Result<NonlinearitySpec> {
        NonlinearitySpec::builtin(&self.problem.nonlinearity).ok_or_else(|| {
            CliError::Config(format!(
                "unknown nonlinearity {:?}; expected zero, q0_radial or dt_squared",
                self.problem.nonlinearity
            ))
        })
    }

    pub fn forcing(&self) -> Option<Forcing> {
        self.problem.forcing.map(|f| Forcing {
            amplitude: f.amplitude,
            t_center: f.t_center,
            t_width: f.t_width,
            r_center: f.r_center,
            r_width: f.r_width,
        })
    }

    fn shape(&self, spec: &ShapeSpec) -> Result<Shape> {
        Ok(match spec {
            ShapeSpec::Zero => Shape::Zero,
            ShapeSpec::Gaussian { center, width, amplitude } => {
                Shape::Gaussian(GaussianBump { center: *center, width: *width, amplitude: *amplitude })
            }
            ShapeSpec::File { path } => Shape::Sampled(read_profile(&self.resolve(path))?),
        })
    }

    /// Solver configuration with `r_max` filled in when absent.
    pub fn solver_config(&self) -> Result<SolverConfig> {
        let g = &self.grid;
        let mut cfg = SolverConfig {
            obstacle: self.obstacle()?,
            nonlinearity: self.nonlinearity()?,
            data: InitialData { f: self.shape(&self.data.f)?, g: self.shape(&self.data.g)? },
            epsilon: self.problem.epsilon,
            forcing: self.forcing(),
            dr: g.dr,
            cfl: g.cfl,
            t_max: g.t_max,
            r_max: 0.0,
            snapshot_stride: g.snapshot_stride,
            local_radius: g.local_radius,
            sweeps: g.sweeps,
        };
        cfg.r_max = g.r_max.unwrap_or_else(|| cfg.min_r_max());
        Ok(cfg)
    }

    /// Copy with every default made explicit, suitable for a manifest.
    pub fn resolved(&self) -> Result<Self> {
        let mut out = self.clone();
        out.grid.r_max = Some(self.solver_config()?.r_max);
        out.data.f = self.absolute_shape(&self.data.f);
        out.data.g = self.absolute_shape(&self.data.g);
        Ok(out)
    }

    fn absolute_shape(&self, spec: &ShapeSpec) -> ShapeSpec {
        match spec {
            ShapeSpec::File { path } => ShapeSpec::File { path: self.resolve(path) },
            other => other.clone(),
        }
    }

    /// Cauchy profiles `(eps f, eps g)` on a shared grid starting at `r_b`.
    ///
    /// A file datum fixes the grid; analytic data use `profile_dr` up to
    /// `profile_r_max`.
    pub fn data_profiles(&self) -> Result<(RadialProfile, RadialProfile)> {
        let rb = self.problem.obstacle_radius;
        let eps = self.problem.epsilon;
        let files: Vec<RadialProfile> = [&self.data.f, &self.data.g]
            .into_iter()
            .filter_map(|s| match s {
                ShapeSpec::File { path } => Some(read_profile(&self.resolve(path))),
                _ => None,
            })
            .collect::<Result<_>>()?;
        let (r0, dr, n) = match files.first() {
            Some(p) => (p.r0(), p.dr(), p.len()),
            None => {
                let dr = self.data.profile_dr;
                (rb, dr, ((self.data.profile_r_max - rb) / dr).round() as usize + 1)
            }
        };
        if files.iter().any(|p| p.r0() != r0 || p.dr() != dr || p.len() != n) {
            return Err(CliError::Config("file profiles for f and g must share one grid".into()));
        }
        if (r0 - rb).abs() > 1e-12 * (1.0 + rb) {
            return Err(CliError::Config(format!("profile grid starts at {r0}, expected r_b = {rb}")));
        }
        let build = |spec: &ShapeSpec| -> Result<RadialProfile> {
            let shape = self.shape(spec)?;
            let p = match &shape {
                Shape::Sampled(p) => p.clone(),
                _ => RadialProfile::from_fn(r0, dr, n, |r| shape.eval(r))?,
            };
            Ok(p.scaled(eps))
        };
        Ok((build(&self.data.f)?, build(&self.data.g)?))
    }
}
