//! JSON run configuration: equation parameters, numerics and data profiles.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cauchy::SolverConfig;
use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridKind};
use crate::spectral::PdeParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsConfig {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub kappa_re: f64,
    pub kappa_im: f64,
    pub p: f64,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        Self { alpha: 0.5, beta: 1.0, delta: 0.3, kappa_re: 0.0, kappa_im: 0.0, p: 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SobolevConfig {
    pub s: f64,
}

impl Default for SobolevConfig {
    fn default() -> Self {
        Self { s: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub fixed_point_tol: f64,
    pub quad_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self { fixed_point_tol: d.fixed_point_tol, quad_tol: d.quad_tol }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsConfig {
    #[serde(rename = "T")]
    pub t_final: f64,
    #[serde(rename = "Tprime")]
    pub t_prime: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "Nx")]
    pub nx: usize,
    #[serde(rename = "Nt")]
    pub nt: usize,
    pub contour_density: f64,
    #[serde(rename = "truncation_M")]
    pub truncation_m: f64,
    pub tolerances: Tolerances,
    pub max_picard: usize,
    pub lambda_margin: f64,
    pub gl_order: usize,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            t_final: d.t_final,
            t_prime: d.t_prime,
            l: d.l,
            nx: d.nx,
            nt: d.nt,
            contour_density: d.contour_density,
            truncation_m: d.truncation_m,
            tolerances: Tolerances::default(),
            max_picard: d.max_picard,
            lambda_margin: d.lambda_margin,
            gl_order: d.gl_order,
        }
    }
}

fn one() -> f64 {
    1.0
}

/// Analytic data profile or a CSV file `coord,re,im`.
///
/// Profiles are functions of `x` for the initial datum and of `t` for the
/// boundary datum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum Profile {
    /// `A e^{iφ} exp(−((s−c)/w)²)`.
    Gaussian {
        #[serde(default = "one")]
        amplitude: f64,
        center: f64,
        width: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `A exp(1 − 1/(1 − r²))` for `r = (s−c)/ρ`, `|r| < 1`.
    Bump {
        #[serde(default = "one")]
        amplitude: f64,
        center: f64,
        radius: f64,
    },
    /// Wave packet `A e^{ik(s−c)} exp(−((s−c)/w)²)`.
    Mode {
        #[serde(default = "one")]
        amplitude: f64,
        wavenumber: f64,
        center: f64,
        width: f64,
    },
    Constant {
        re: f64,
        #[serde(default)]
        im: f64,
    },
    Zero,
    /// Constant equal to `u₀(0)`; only meaningful for the boundary datum.
    Compatible,
    /// Samples resampled linearly onto the solver grid. Relative paths are
    /// resolved against the config file.
    Csv { path: PathBuf },
}

impl Profile {
    fn eval(&self, s: f64) -> Complex64 {
        match *self {
            Profile::Gaussian { amplitude, center, width, phase } => {
                let r = (s - center) / width;
                Complex64::from_polar(amplitude * (-r * r).exp(), phase)
            }
            Profile::Bump { amplitude, center, radius } => {
                let r = (s - center) / radius;
                if r.abs() < 1.0 {
                    Complex64::new(amplitude * (1.0 - 1.0 / (1.0 - r * r)).exp(), 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            Profile::Mode { amplitude, wavenumber, center, width } => {
                let r = (s - center) / width;
                Complex64::from_polar(amplitude * (-r * r).exp(), wavenumber * (s - center))
            }
            Profile::Constant { re, im } => Complex64::new(re, im),
            Profile::Zero | Profile::Compatible | Profile::Csv { .. } => Complex64::new(0.0, 0.0),
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("{name}: {m}")));
        match *self {
            Profile::Gaussian { width, .. } | Profile::Mode { width, .. } if !(width > 0.0) => {
                bad("width must be positive")
            }
            Profile::Bump { radius, .. } if !(radius > 0.0) => bad("radius must be positive"),
            _ => Ok(()),
        }
    }

    /// Samples on `n` points of `[start, end]`.
    pub fn sample(
        &self,
        start: f64,
        end: f64,
        n: usize,
        kind: GridKind,
        base_dir: Option<&Path>,
    ) -> Result<GridFunction> {
        if let Profile::Csv { path } = self {
            let full = match base_dir {
                Some(dir) if path.is_relative() => dir.join(path),
                _ => path.clone(),
            };
            let raw = GridFunction::load_csv(&full, kind)?;
            if raw.start > start + 1e-12 || raw.end < end - 1e-12 {
                return Err(Error::InvalidConfig(format!(
                    "{} covers [{}, {}], which does not contain [{start}, {end}]",
                    full.display(),
                    raw.start,
                    raw.end
                )));
            }
            return GridFunction::from_fn(start, end, n, kind, |s| raw.interpolate(s));
        }
        GridFunction::from_fn(start, end, n, kind, |s| self.eval(s))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub u0: Profile,
    pub g: Profile,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            u0: Profile::Gaussian { amplitude: 0.1, center: 15.0, width: 2.0, phase: 0.0 },
            g: Profile::Gaussian { amplitude: 0.05, center: 0.5, width: 0.1, phase: 0.0 },
        }
    }
}

/// Top-level run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub params: ParamsConfig,
    pub sobolev: SobolevConfig,
    pub numerics: NumericsConfig,
    pub scenario: ScenarioConfig,
    /// Seed for randomized verification sweeps.
    pub seed: u64,
    /// Directory for resolving relative CSV paths.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.pde_params()?;
        self.solver_config().validate()?;
        let s = self.sobolev.s;
        if !(0.0..=2.0).contains(&s) || !s.is_finite() {
            return Err(Error::InvalidConfig(format!("s = {s} outside [0, 2]")));
        }
        if (s - 0.5).abs() < 1e-12 {
            return Err(Error::HalfExcluded);
        }
        self.scenario.u0.validate("scenario.u0")?;
        self.scenario.g.validate("scenario.g")?;
        if matches!(self.scenario.u0, Profile::Compatible) {
            return Err(Error::InvalidConfig("scenario.u0 cannot be 'compatible'".into()));
        }
        Ok(())
    }

    pub fn pde_params(&self) -> Result<PdeParams> {
        let p = &self.params;
        PdeParams::new(p.alpha, p.beta, p.delta, Complex64::new(p.kappa_re, p.kappa_im), p.p)
    }

    pub fn solver_config(&self) -> SolverConfig {
        let n = &self.numerics;
        SolverConfig {
            t_final: n.t_final,
            t_prime: n.t_prime,
            l: n.l,
            nx: n.nx,
            nt: n.nt,
            contour_density: n.contour_density,
            truncation_m: n.truncation_m,
            fixed_point_tol: n.tolerances.fixed_point_tol,
            max_picard: n.max_picard,
            quad_tol: n.tolerances.quad_tol,
            lambda_margin: n.lambda_margin,
            gl_order: n.gl_order,
        }
    }

    /// `(u₀, g)` sampled on the solver grids.
    pub fn data(&self) -> Result<(GridFunction, GridFunction)> {
        self.data_on(&self.solver_config())
    }

    /// `(u₀, g)` sampled on the grids of `c`.
    pub fn data_on(&self, c: &SolverConfig) -> Result<(GridFunction, GridFunction)> {
        let dir = self.base_dir.as_deref();
        let u0 = self.scenario.u0.sample(0.0, c.l, c.nx, GridKind::Spatial, dir)?;
        let g = match self.scenario.g {
            Profile::Compatible => {
                let v = u0.values[0];
                GridFunction::from_fn(0.0, c.t_final, c.nt, GridKind::Temporal, |_| v)?
            }
            ref p => p.sample(0.0, c.t_final, c.nt, GridKind::Temporal, dir)?,
        };
        Ok((u0, g))
    }
}
