//! The solution operator `Φu = y + z^u + q^u` on the half-line and its
//! Picard iteration.

use log::{info, warn};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cauchy::{solve_duhamel, solve_homogeneous, trace_at_zero, SolverConfig};
use crate::contours::ContourSpec;
use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridKind, SpaceTimeField};
use crate::ibvp::{assemble_g0, reduced_contour, ReducedRepresentation};
use crate::norms::{
    compatibility_check, fractional_time_seminorm, high_reg_condition_check, hs_norm_half_line, strichartz_exponents,
};
use crate::spectral::PdeParams;
use crate::transforms::{extend_initial, ExtensionPolicy};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `κ|u|^p u`.
#[inline]
pub fn nonlinearity(u: Complex64, params: &PdeParams) -> Complex64 {
    let m = u.norm();
    if m == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    params.kappa * m.powf(params.p) * u
}

/// [`nonlinearity`] applied pointwise.
pub fn nonlinear_field(u: &SpaceTimeField, params: &PdeParams) -> SpaceTimeField {
    let mut out = u.clone();
    out.values.par_iter_mut().for_each(|v| *v = nonlinearity(*v, params));
    out
}

/// Extend every slice of a half-line field to `[−L, L]`.
pub fn extend_field(u: &SpaceTimeField, policy: ExtensionPolicy) -> Result<SpaceTimeField> {
    let mut out = SpaceTimeField::zeros(-u.x_end, u.x_end, 2 * u.nx - 1, u.t_start, u.t_end, u.nt)?;
    let nxw = out.nx;
    out.values
        .par_chunks_mut(nxw)
        .enumerate()
        .try_for_each(|(n, slice)| -> Result<()> {
            slice.copy_from_slice(&extend_initial(&u.slice_function(n), policy)?.values);
            Ok(())
        })?;
    Ok(out)
}

/// Parts of `Φ` that do not depend on the iterate.
pub struct PhiContext {
    config: SolverConfig,
    params: PdeParams,
    policy: ExtensionPolicy,
    g: GridFunction,
    /// `S[E₀u₀;0]` restricted to `[0, L]`.
    y: SpaceTimeField,
    ytrace: GridFunction,
    contour: ContourSpec,
    /// Relative envelope at the contour truncation.
    pub contour_tail: f64,
}

impl PhiContext {
    /// Solve the free problem once and fix the contour from the linear
    /// boundary datum `g − y(0,·)`.
    pub fn new(
        u0: &GridFunction,
        g: &GridFunction,
        config: &SolverConfig,
        params: &PdeParams,
        policy: ExtensionPolicy,
    ) -> Result<Self> {
        config.validate()?;
        if u0.len() != config.nx || g.len() != config.nt {
            return Err(Error::GridMismatch(format!(
                "data sizes ({}, {}) do not match Nx = {}, Nt = {}",
                u0.len(),
                g.len(),
                config.nx,
                config.nt
            )));
        }
        let whole = solve_homogeneous(&extend_initial(u0, policy)?, config, params)?;
        let ytrace = trace_at_zero(&whole)?;
        let y = whole.restrict_x(config.nx - 1, 2 * config.nx - 2);
        let zero = ytrace.map(|_| Complex64::new(0.0, 0.0));
        let g0 = assemble_g0(g, &ytrace, &zero, config.t_prime)?;
        let rc = reduced_contour(&g0, config, params)?;
        Ok(Self {
            config: *config,
            params: *params,
            policy,
            g: g.clone(),
            y,
            ytrace,
            contour: rc.spec,
            contour_tail: rc.tail,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    /// `y + z + q` for a prescribed whole-line forcing `F` (`z = S[0;F]`).
    fn assemble(&self, forcing: Option<&SpaceTimeField>) -> Result<SpaceTimeField> {
        let nx = self.config.nx;
        let (zhalf, ztrace) = match forcing {
            Some(f) => {
                let z = solve_duhamel(f, &self.params)?;
                (Some(z.restrict_x(nx - 1, 2 * nx - 2)), trace_at_zero(&z)?)
            }
            None => (None, self.ytrace.map(|_| Complex64::new(0.0, 0.0))),
        };
        let g0 = assemble_g0(&self.g, &self.ytrace, &ztrace, self.config.t_prime)?;
        let rep = ReducedRepresentation::new(&g0, &self.contour, &self.params);
        let mut out = rep.evaluate(0, &self.y.xs(), &self.y.ts())?;
        out.x_start = self.y.x_start;
        out.x_end = self.y.x_end;
        out.axpy(Complex64::new(1.0, 0.0), &self.y)?;
        if let Some(z) = zhalf {
            out.axpy(Complex64::new(1.0, 0.0), &z)?;
        }
        Ok(out)
    }

    /// The linear solution (`κ = 0`).
    pub fn linear_solution(&self) -> Result<SpaceTimeField> {
        self.assemble(None)
    }

    /// `Φu`.
    pub fn apply(&self, u: &SpaceTimeField) -> Result<SpaceTimeField> {
        if !u.same_grid(&self.y) {
            return Err(Error::GridMismatch("iterate does not live on the solver grid".into()));
        }
        if self.params.kappa == Complex64::new(0.0, 0.0) {
            return self.assemble(None);
        }
        let forcing = nonlinear_field(&extend_field(u, self.policy)?, &self.params);
        self.assemble(Some(&forcing))
    }
}

/// `Φu = y|_{Q_T} + z^u|_{Q_T} + q^u` for half-line `u`.
pub fn phi_map(
    u: &SpaceTimeField,
    u0: &GridFunction,
    g: &GridFunction,
    config: &SolverConfig,
    params: &PdeParams,
    policy: ExtensionPolicy,
) -> Result<SpaceTimeField> {
    PhiContext::new(u0, g, config, params, policy)?.apply(u)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PicardOptions {
    /// Sobolev index of the data.
    pub s: f64,
    /// Bound on `‖u₀‖_{H^s} + ‖g‖_{H^{(s+1)/3}}` at the critical power.
    pub small_data_level: f64,
    /// Tolerance for `u₀(0) = g(0)`.
    pub compatibility_tol: f64,
    /// Smallest window, in time steps, before giving up.
    pub min_window_steps: usize,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self { s: 1.0, small_data_level: 0.5, compatibility_tol: 1e-8, min_window_steps: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowDiagnostics {
    pub t_start: f64,
    pub t_end: f64,
    pub iterations: usize,
    /// `d_n = max_t ‖u_{n+1}(·,t) − u_n(·,t)‖_{L²}`.
    pub distances: Vec<f64>,
    /// `d_{n+1}/d_n`.
    pub ratios: Vec<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentTolerances {
    pub fixed_point_tol: f64,
    pub quad_tol: f64,
    pub contour_tail: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardDiagnostics {
    /// Iterations over all windows.
    pub iterations: usize,
    /// Number of times a window was halved.
    pub horizon_subdivisions: usize,
    /// Whether the solution was pieced together from several windows.
    pub concatenated: bool,
    pub windows: Vec<WindowDiagnostics>,
    pub tolerances: ComponentTolerances,
    /// Norm in which contraction and uniqueness were observed.
    pub iteration_norm: String,
}

impl PicardDiagnostics {
    pub fn ratios(&self) -> Vec<f64> {
        self.windows.iter().flat_map(|w| w.ratios.iter().copied()).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Check that `(s, p)` is admissible and, at the critical power, that the
/// data are small.
pub fn regularity_gate(u0: &GridFunction, g: &GridFunction, params: &PdeParams, opts: &PicardOptions) -> Result<()> {
    let (s, p) = (opts.s, params.p);
    if s == 0.5 {
        return Err(Error::RegularityGate("s = 1/2 is excluded".into()));
    }
    if s > 0.5 {
        if !high_reg_condition_check(s, p) {
            return Err(Error::RegularityGate(format!("p = {p} is not admissible for s = {s}")));
        }
        return Ok(());
    }
    strichartz_exponents(s, p).map_err(|e| Error::RegularityGate(e.to_string()))?;
    let critical = 6.0 / (1.0 - 2.0 * s);
    if (p - critical).abs() < 1e-12 * critical {
        let size = data_norm(u0, g, s)?;
        if size > opts.small_data_level {
            return Err(Error::RegularityGate(format!(
                "critical power p = {p} needs small data: norm {size:.3e} > {:.3e}",
                opts.small_data_level
            )));
        }
    }
    Ok(())
}

/// `‖u₀‖_{H^s} + ‖g‖_{L²} + |g|_{H^{(s+1)/3}}`.
pub fn data_norm(u0: &GridFunction, g: &GridFunction, s: f64) -> Result<f64> {
    let m = (s + 1.0) / 3.0;
    let sq: Vec<f64> = g.values.iter().map(|v| v.norm_sqr()).collect();
    let gl2 = crate::quad::trapezoid(&sq, g.spacing()).sqrt();
    Ok(hs_norm_half_line(u0, s)? + gl2 + fractional_time_seminorm(g, m)?)
}

enum WindowOutcome {
    Converged(SpaceTimeField, WindowDiagnostics),
    Stalled(WindowDiagnostics),
}

fn iterate_window(ctx: &PhiContext, seed: SpaceTimeField, t_offset: f64) -> Result<WindowOutcome> {
    let cfg = ctx.config;
    let mut u = seed;
    let mut diag = WindowDiagnostics {
        t_start: t_offset,
        t_end: t_offset + cfg.t_final,
        iterations: 0,
        distances: Vec::new(),
        ratios: Vec::new(),
        converged: false,
    };
    let mut growing = 0;
    while diag.iterations < cfg.max_picard {
        let next = ctx.apply(&u)?;
        let d = next.max_slice_l2_distance(&u)?;
        diag.iterations += 1;
        if let Some(&prev) = diag.distances.last() {
            let ratio = if prev > 0.0 { d / prev } else { 0.0 };
            diag.ratios.push(ratio);
            growing = if ratio >= 1.0 { growing + 1 } else { 0 };
        }
        diag.distances.push(d);
        u = next;
        if !d.is_finite() {
            return Ok(WindowOutcome::Stalled(diag));
        }
        if d <= cfg.fixed_point_tol {
            diag.converged = true;
            return Ok(WindowOutcome::Converged(u, diag));
        }
        if growing >= 3 {
            return Ok(WindowOutcome::Stalled(diag));
        }
    }
    Ok(WindowOutcome::Stalled(diag))
}

fn window_config(base: &SolverConfig, steps: usize, extra_steps: usize) -> SolverConfig {
    let dt = base.dt();
    SolverConfig {
        t_final: steps as f64 * dt,
        t_prime: (steps + extra_steps) as f64 * dt,
        nt: steps + 1,
        ..*base
    }
}

/// Samples `from..=to` of `g`, shifted to start at `t = 0`.
fn sub_function(g: &GridFunction, from: usize, to: usize) -> Result<GridFunction> {
    GridFunction::new(0.0, g.coord(to) - g.coord(from), g.values[from..=to].to_vec(), GridKind::Temporal)
}

struct Recorder {
    windows: Vec<WindowDiagnostics>,
    subdivisions: usize,
    contour_tail: f64,
}

/// Solve on `steps` time steps starting from `u0`, halving on stagnation.
#[allow(clippy::too_many_arguments)]
fn solve_span(
    u0: &GridFunction,
    g: &GridFunction,
    base: &SolverConfig,
    params: &PdeParams,
    opts: &PicardOptions,
    extra_steps: usize,
    t_offset: f64,
    rec: &mut Recorder,
) -> Result<SpaceTimeField> {
    let steps = g.len() - 1;
    let cfg = window_config(base, steps, extra_steps);
    let ctx = PhiContext::new(u0, g, &cfg, params, ExtensionPolicy::for_regularity(opts.s))?;
    rec.contour_tail = rec.contour_tail.max(ctx.contour_tail);
    let seed = ctx.linear_solution()?;
    match iterate_window(&ctx, seed, t_offset)? {
        WindowOutcome::Converged(mut u, diag) => {
            rec.windows.push(diag);
            u.t_start += t_offset;
            u.t_end += t_offset;
            Ok(u)
        }
        WindowOutcome::Stalled(diag) => {
            rec.windows.push(diag);
            let half = steps / 2;
            if half < opts.min_window_steps.max(16 - 1) {
                return Err(Error::NoContraction(format!(
                    "no contraction on a window of {steps} steps starting at t = {t_offset}"
                )));
            }
            rec.subdivisions += 1;
            warn!("Picard iteration stalled on [{t_offset}, {}]; halving the window", t_offset + cfg.t_final);
            let first = solve_span(u0, &sub_function(g, 0, half)?, base, params, opts, extra_steps, t_offset, rec)?;
            let mid = first.slice_function(first.nt - 1);
            let t_mid = t_offset + half as f64 * base.dt();
            let second = solve_span(&mid, &sub_function(g, half, steps)?, base, params, opts, extra_steps, t_mid, rec)?;
            concatenate(&first, &second)
        }
    }
}

/// Join two fields sharing the time level at the seam.
fn concatenate(a: &SpaceTimeField, b: &SpaceTimeField) -> Result<SpaceTimeField> {
    if a.nx != b.nx || (a.t_end - b.t_start).abs() > 1e-9 * (1.0 + a.t_end.abs()) {
        return Err(Error::GridMismatch("windows do not join".into()));
    }
    let mut values = a.values.clone();
    values.extend_from_slice(&b.values[b.nx..]);
    Ok(SpaceTimeField { t_end: b.t_end, nt: a.nt + b.nt - 1, values, ..a.clone() })
}

/// Fixed point of `Φ` on `[0, L] × [0, T]`, seeded with the linear solution.
///
/// A window whose iteration stalls (three non-decreasing steps or more than
/// `max_picard` iterations) is split in half; the second half restarts from
/// the terminal slice of the first with the boundary datum shifted in time.
pub fn picard_solve(
    u0: &GridFunction,
    g: &GridFunction,
    config: &SolverConfig,
    params: &PdeParams,
    opts: &PicardOptions,
) -> Result<(SpaceTimeField, PicardDiagnostics)> {
    config.validate()?;
    if !compatibility_check(u0, g, opts.s, opts.compatibility_tol) {
        return Err(Error::IncompatibleData((u0.values[0] - g.values[0]).norm()));
    }
    regularity_gate(u0, g, params, opts)?;
    let extra_steps = config.nt_prime() - config.nt;
    let mut rec = Recorder { windows: Vec::new(), subdivisions: 0, contour_tail: 0.0 };
    let u = solve_span(u0, g, config, params, opts, extra_steps, 0.0, &mut rec)?;
    let diag = PicardDiagnostics {
        iterations: rec.windows.iter().map(|w| w.iterations).sum(),
        horizon_subdivisions: rec.subdivisions,
        concatenated: rec.subdivisions > 0,
        windows: rec.windows,
        tolerances: ComponentTolerances {
            fixed_point_tol: config.fixed_point_tol,
            quad_tol: config.quad_tol,
            contour_tail: rec.contour_tail,
        },
        iteration_norm: "max_t L2_x".into(),
    };
    info!("Picard: {} iterations, {} subdivisions", diag.iterations, diag.horizon_subdivisions);
    Ok((u, diag))
}

/// Run the iteration from `seed` instead of the linear solution and return
/// `max |u_seed − u_linear_seed|` between the two limits.
pub fn uniqueness_check(
    u0: &GridFunction,
    g: &GridFunction,
    config: &SolverConfig,
    params: &PdeParams,
    opts: &PicardOptions,
    seed: SpaceTimeField,
) -> Result<f64> {
    let ctx = PhiContext::new(u0, g, config, params, ExtensionPolicy::for_regularity(opts.s))?;
    let a = match iterate_window(&ctx, ctx.linear_solution()?, 0.0)? {
        WindowOutcome::Converged(u, _) => u,
        WindowOutcome::Stalled(_) => return Err(Error::NoContraction("reference iteration stalled".into())),
    };
    let b = match iterate_window(&ctx, seed, 0.0)? {
        WindowOutcome::Converged(u, _) => u,
        WindowOutcome::Stalled(_) => return Err(Error::NoContraction("seeded iteration stalled".into())),
    };
    Ok(a.max_abs_diff(&b))
}

/// Discrete `L²` norm over interior points of
/// `i u_t + iβ u_xxx + α u_xx + iδ u_x − f(u)` with centered stencils.
pub fn residual_check(u: &SpaceTimeField, params: &PdeParams) -> f64 {
    if u.nx < 5 || u.nt < 3 {
        return 0.0;
    }
    let (h, dt) = (u.dx(), u.dt());
    let (alpha, beta, delta) = (params.alpha, params.beta, params.delta);
    let sum: f64 = (1..u.nt - 1)
        .into_par_iter()
        .map(|n| {
            let mut acc = 0.0;
            for i in 2..u.nx - 2 {
                let v = |di: isize, dn: isize| u.at((i as isize + di) as usize, (n as isize + dn) as usize);
                let ut = (v(0, 1) - v(0, -1)) / (2.0 * dt);
                let ux = (v(1, 0) - v(-1, 0)) / (2.0 * h);
                let uxx = (v(1, 0) - 2.0 * v(0, 0) + v(-1, 0)) / (h * h);
                let uxxx = (v(2, 0) - 2.0 * v(1, 0) + 2.0 * v(-1, 0) - v(-2, 0)) / (2.0 * h * h * h);
                let r = I * ut + I * beta * uxxx + alpha * uxx + I * delta * ux - nonlinearity(v(0, 0), params);
                acc += r.norm_sqr();
            }
            acc
        })
        .sum();
    (sum * h * dt).sqrt()
}
