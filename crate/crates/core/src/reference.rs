//! Method-of-lines finite-difference solver on `[0, L]`, used as an
//! independent check of the transform-based solvers.
//!
//! Fourth-order centred stencils in space, a Dirichlet value at `x = 0`
//! closed by cubic extrapolation ghosts, a quartic sponge on the last 15% of
//! the interval, and TR-BDF2 in time. Both TR-BDF2 stages share one banded
//! matrix, factored once.

use log::warn;
use num_complex::Complex64;
use serde::Serialize;

use crate::cauchy::SolverConfig;
use crate::error::{Error, Result};
use crate::grid::{GridFunction, SpaceTimeField};
use crate::ibvp::{reduced_contour, solve_reduced};
use crate::nonlinear::nonlinearity;
use crate::spectral::PdeParams;

/// Fraction of `[0, L]` covered by the sponge layer.
pub const SPONGE_FRACTION: f64 = 0.15;
/// Peak damping rate of the sponge.
pub const SPONGE_STRENGTH: f64 = 20.0;
/// `β Δt / h³` above which a warning is logged.
pub const CFL_WARN_LEVEL: f64 = 1.0;

const INNER_TOL: f64 = 1e-13;
const INNER_MAX: usize = 60;
const BAND: usize = 3;
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `β Δt / h³`, the stiffness measure of the third-derivative term.
pub fn cfl_number(config: &SolverConfig, params: &PdeParams) -> f64 {
    params.beta * config.dt() / config.dx().powi(3)
}

/// Quartic damping profile, zero up to `(1 − SPONGE_FRACTION)·L`.
pub fn sponge(x: f64, l: f64) -> f64 {
    let start = (1.0 - SPONGE_FRACTION) * l;
    if x <= start {
        0.0
    } else {
        SPONGE_STRENGTH * ((x - start) / (l - start)).powi(4)
    }
}

/// Banded LU factorization with partial pivoting.
struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    a: Vec<Complex64>,
    piv: Vec<usize>,
}

#[allow(clippy::needless_range_loop)]
impl BandedLu {
    fn new(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, a: vec![ZERO; n * width], piv: vec![0; n] }
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    fn add(&mut self, i: usize, j: usize, v: Complex64) {
        let k = self.idx(i, j);
        self.a[k] += v;
    }

    fn get(&self, i: usize, j: usize) -> Complex64 {
        self.a[self.idx(i, j)]
    }

    fn factor(&mut self) -> Result<()> {
        let (n, kl, upper) = (self.n, self.kl, self.ku + self.kl);
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            for r in k + 1..=last {
                if self.get(r, k).norm() > self.get(p, k).norm() {
                    p = r;
                }
            }
            self.piv[k] = p;
            let jmax = (k + upper).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    let (a, b) = (self.idx(k, j), self.idx(p, j));
                    self.a.swap(a, b);
                }
            }
            let pivot = self.get(k, k);
            if pivot.norm() == 0.0 {
                return Err(Error::InvalidParams("singular implicit system".into()));
            }
            for r in k + 1..=last {
                let l = self.get(r, k) / pivot;
                let ir = self.idx(r, k);
                self.a[ir] = l;
                if l == ZERO {
                    continue;
                }
                for j in k + 1..=jmax {
                    let v = self.get(k, j);
                    let ij = self.idx(r, j);
                    self.a[ij] -= l * v;
                }
            }
        }
        Ok(())
    }

    fn solve(&self, b: &mut [Complex64]) {
        let (n, kl, upper) = (self.n, self.kl, self.ku + self.kl);
        for k in 0..n {
            b.swap(k, self.piv[k]);
            let bk = b[k];
            for r in k + 1..=(k + kl).min(n - 1) {
                b[r] -= self.get(r, k) * bk;
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for j in k + 1..=(k + upper).min(n - 1) {
                s -= self.get(k, j) * b[j];
            }
            b[k] = s / self.get(k, k);
        }
    }
}

/// Spatial operator restricted to the unknowns `u_1 … u_{N−1}`.
///
/// `rows[i]` holds `(column, coefficient)` pairs; `boundary[i]` multiplies
/// the Dirichlet value `u_0`.
struct SpatialOperator {
    rows: Vec<Vec<(usize, Complex64)>>,
    boundary: Vec<Complex64>,
}

impl SpatialOperator {
    fn new(nx: usize, h: f64, l: f64, params: &PdeParams) -> Self {
        let (a, b, d) = (params.alpha, params.beta, params.delta);
        let i = Complex64::i();
        let d1 = [0.0, 1.0, -8.0, 0.0, 8.0, -1.0, 0.0].map(|c| c / (12.0 * h));
        let d2 = [0.0, -1.0, 16.0, -30.0, 16.0, -1.0, 0.0].map(|c| c / (12.0 * h * h));
        let d3 = [1.0, -8.0, 13.0, 0.0, -13.0, 8.0, -1.0].map(|c| c / (8.0 * h * h * h));
        let stencil: Vec<Complex64> = (0..7)
            .map(|o| Complex64::new(-b * d3[o] - d * d1[o], 0.0) + i * a * d2[o])
            .collect();
        let ghost_m1 = [4.0, -6.0, 4.0, -1.0];
        let ghost_m2 = [10.0, -20.0, 15.0, -4.0];
        let last = nx - 1;
        let n = nx - 2;
        let mut rows = vec![Vec::new(); n];
        let mut boundary = vec![ZERO; n];
        for (row, gi) in (1..last).enumerate() {
            let mut acc = vec![ZERO; last];
            let mut bnd = ZERO;
            for (o, &c) in stencil.iter().enumerate() {
                if c == ZERO {
                    continue;
                }
                let j = gi as isize + o as isize - 3;
                let weights: &[f64] = match j {
                    -1 => &ghost_m1,
                    -2 => &ghost_m2,
                    _ => &[],
                };
                if j < 0 {
                    bnd += c * weights[0];
                    for (q, &w) in weights.iter().enumerate().skip(1) {
                        acc[q] += c * w;
                    }
                } else if j == 0 {
                    bnd += c;
                } else if (j as usize) < last {
                    acc[j as usize] += c;
                }
            }
            acc[gi] -= sponge(gi as f64 * h, l);
            rows[row] = acc
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != ZERO)
                .map(|(j, v)| (j - 1, *v))
                .collect();
            boundary[row] = bnd;
        }
        Self { rows, boundary }
    }

    fn apply(&self, u: &[Complex64], g: Complex64, out: &mut [Complex64]) {
        for (r, row) in self.rows.iter().enumerate() {
            let mut s = self.boundary[r] * g;
            for &(j, c) in row {
                s += c * u[j];
            }
            out[r] = s;
        }
    }

    fn implicit_matrix(&self, c: f64) -> Result<BandedLu> {
        let n = self.rows.len();
        let mut m = BandedLu::new(n, BAND, BAND);
        for (r, row) in self.rows.iter().enumerate() {
            m.add(r, r, Complex64::new(1.0, 0.0));
            for &(j, v) in row {
                m.add(r, j, -c * v);
            }
        }
        m.factor()?;
        Ok(m)
    }
}

/// Cubic Lagrange interpolation of a uniform grid function.
fn interp_cubic(g: &GridFunction, t: f64) -> Complex64 {
    let n = g.len();
    let h = g.spacing();
    let s = ((t - g.start) / h).clamp(0.0, (n - 1) as f64);
    let base = (s.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
    let mut acc = ZERO;
    for a in 0..4 {
        let mut w = 1.0;
        for b in 0..4 {
            if a != b {
                w *= (s - (base + b) as f64) / (a as f64 - b as f64);
            }
        }
        acc += g.values[base + a] * w;
    }
    acc
}

/// Solves the initial-boundary value problem on `[0, L] × [0, T]`.
///
/// `u0` must live on the `Nx`-point grid of `[0, L]` and `g` on the
/// `Nt`-point grid of `[0, T]`. With `nonlinear = false` the power term is
/// dropped regardless of `κ`.
pub fn fd_solve(
    u0: &GridFunction,
    g: &GridFunction,
    config: &SolverConfig,
    params: &PdeParams,
    nonlinear: bool,
) -> Result<SpaceTimeField> {
    config.validate()?;
    params.validate()?;
    if !(params.beta > 0.0) {
        return Err(Error::InvalidParams(format!(
            "beta = {} must be positive: the half-line problem carries a single boundary condition at x = 0",
            params.beta
        )));
    }
    let (nx, nt, l, t_final) = (config.nx, config.nt, config.l, config.t_final);
    if u0.len() != nx || u0.start != 0.0 || (u0.end - l).abs() > 1e-12 * l {
        return Err(Error::GridMismatch(format!("u0 must have {nx} points on [0, {l}]")));
    }
    if g.len() != nt || g.start != 0.0 || (g.end - t_final).abs() > 1e-12 * t_final {
        return Err(Error::GridMismatch(format!("g must have {nt} points on [0, {t_final}]")));
    }
    let cfl = cfl_number(config, params);
    if cfl > CFL_WARN_LEVEL {
        warn!("finite-difference step has beta*dt/h^3 = {cfl:.3e}; the implicit scheme stays stable but loses accuracy");
    }

    let h = config.dx();
    let dt = config.dt();
    let op = SpatialOperator::new(nx, h, l, params);
    let gamma = 2.0 - std::f64::consts::SQRT_2;
    let c = gamma * dt / 2.0;
    let lu = op.implicit_matrix(c)?;
    let w_star = 1.0 / (gamma * (2.0 - gamma));
    let w_old = (1.0 - gamma) * (1.0 - gamma) / (gamma * (2.0 - gamma));
    let nonlinear = nonlinear && params.kappa != ZERO;
    let source = |u: &[Complex64], out: &mut [Complex64]| {
        for (o, &v) in out.iter_mut().zip(u) {
            *o = -Complex64::i() * nonlinearity(v, params);
        }
    };

    let n = nx - 2;
    let mut field = SpaceTimeField::zeros(0.0, l, nx, 0.0, t_final, nt)?;
    field.slice_mut(0).copy_from_slice(&u0.values);
    field.slice_mut(0)[nx - 1] = ZERO;
    let mut u: Vec<Complex64> = u0.values[1..nx - 1].to_vec();
    let mut au = vec![ZERO; n];
    let mut src = vec![ZERO; n];
    let mut rhs_fixed = vec![ZERO; n];
    let mut stage = vec![ZERO; n];
    let mut next = vec![ZERO; n];

    // Solves (I − cA)v = fixed + c·(b(t)·g + N(v)), iterating on N.
    let implicit = |fixed: &[Complex64], gval: Complex64, guess: &mut Vec<Complex64>, step: usize| -> Result<()> {
        let mut src = vec![ZERO; n];
        let mut rhs = vec![ZERO; n];
        let iters = if nonlinear { INNER_MAX } else { 1 };
        let mut last_change = f64::INFINITY;
        let mut growth = 0;
        for it in 0..iters {
            if nonlinear {
                source(guess, &mut src);
            }
            for r in 0..n {
                rhs[r] = fixed[r] + c * (op.boundary[r] * gval + src[r]);
            }
            lu.solve(&mut rhs);
            if !nonlinear {
                std::mem::swap(guess, &mut rhs);
                return Ok(());
            }
            let scale = rhs.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
            let change = rhs.iter().zip(guess.iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            std::mem::swap(guess, &mut rhs);
            if !change.is_finite() {
                return Err(Error::InnerSolveDiverged { step });
            }
            if change <= INNER_TOL * scale {
                return Ok(());
            }
            growth = if change >= last_change { growth + 1 } else { 0 };
            if growth >= 3 || it + 1 == iters {
                return Err(Error::InnerSolveDiverged { step });
            }
            last_change = change;
        }
        Ok(())
    };

    for step in 0..nt - 1 {
        let t0 = step as f64 * dt;
        let g0 = g.values[step];
        let g_mid = interp_cubic(g, t0 + gamma * dt);
        let g1 = g.values[step + 1];

        op.apply(&u, g0, &mut au);
        if nonlinear {
            source(&u, &mut src);
        }
        for r in 0..n {
            rhs_fixed[r] = u[r] + c * (au[r] + src[r]);
        }
        stage.copy_from_slice(&u);
        implicit(&rhs_fixed, g_mid, &mut stage, step)?;

        for r in 0..n {
            rhs_fixed[r] = w_star * stage[r] - w_old * u[r];
        }
        next.copy_from_slice(&stage);
        implicit(&rhs_fixed, g1, &mut next, step)?;
        std::mem::swap(&mut u, &mut next);

        let slice = field.slice_mut(step + 1);
        slice[0] = g1;
        slice[1..nx - 1].copy_from_slice(&u);
    }
    Ok(field)
}

/// One row of a refinement table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    /// Mesh parameter of the row (`h`, or `1/density` for contour studies).
    pub h: f64,
    pub error: f64,
    /// `log2(error_prev / error)`; `NaN` on the first row or when either error vanishes.
    pub order: f64,
}

fn with_orders(pairs: Vec<(f64, f64)>) -> Vec<ConvergenceRow> {
    let mut rows = Vec::with_capacity(pairs.len());
    for (idx, &(h, error)) in pairs.iter().enumerate() {
        let order = if idx == 0 {
            f64::NAN
        } else {
            let prev = pairs[idx - 1];
            if prev.1 > 0.0 && error > 0.0 {
                (prev.1 / error).ln() / (prev.0 / h).ln()
            } else {
                f64::NAN
            }
        };
        rows.push(ConvergenceRow { h, error, order });
    }
    rows
}

/// Data for a refinement study: `data(config)` returns `(u₀, g)` sampled on
/// the grids of `config`.
pub struct Scenario<'a> {
    pub data: &'a dyn Fn(&SolverConfig) -> Result<(GridFunction, GridFunction)>,
    pub nonlinear: bool,
}

/// Self-convergence of [`fd_solve`] at `t = T`.
///
/// Level `r` uses `(Nx−1)·2^r` space and `(Nt−1)·2^r` time intervals.
/// Row `r` reports the relative L² distance between the terminal slices of
/// levels `r` and `r + 1`, sampled on the coarser grid; the orders then
/// estimate the convergence rate without an exact solution.
pub fn convergence_study(
    scenario: &Scenario<'_>,
    base: &SolverConfig,
    params: &PdeParams,
    refinements: usize,
) -> Result<Vec<ConvergenceRow>> {
    if refinements < 1 {
        return Err(Error::InvalidConfig("at least one refinement is required".into()));
    }
    let mut finals = Vec::with_capacity(refinements + 1);
    for r in 0..=refinements {
        let mut cfg = *base;
        cfg.nx = (base.nx - 1) * (1 << r) + 1;
        cfg.nt = (base.nt - 1) * (1 << r) + 1;
        let (u0, g) = (scenario.data)(&cfg)?;
        let u = fd_solve(&u0, &g, &cfg, params, scenario.nonlinear)?;
        finals.push((cfg.dx(), u.slice(u.nt - 1).to_vec()));
    }
    let pairs = finals
        .windows(2)
        .map(|w| {
            let (h, coarse) = (&w[0].0, &w[0].1);
            let fine = &w[1].1;
            let mut diff = 0.0;
            let mut norm = 0.0;
            for (i, &c) in coarse.iter().enumerate() {
                let f = fine[2 * i];
                diff += (c - f).norm_sqr();
                norm += f.norm_sqr();
            }
            let err = if norm > 0.0 { (diff / norm).sqrt() } else { diff.sqrt() };
            (*h, err)
        })
        .collect();
    Ok(with_orders(pairs))
}

/// Boundary and initial-time errors of the reduced solver as the contour
/// density increases.
///
/// For each density the rows report `sup_t |q(0,t) − g₀(t)|` and
/// `sup_x |q(x,0)|` relative to `max|g₀|`, with `h = 1/density`.
pub fn density_study(
    g0: &GridFunction,
    base: &SolverConfig,
    params: &PdeParams,
    densities: &[f64],
) -> Result<(Vec<ConvergenceRow>, Vec<ConvergenceRow>)> {
    let peak = g0.max_abs().max(f64::MIN_POSITIVE);
    let ts: Vec<f64> = base.ts();
    let xs = base.half_line_xs();
    let mut boundary = Vec::with_capacity(densities.len());
    let mut initial = Vec::with_capacity(densities.len());
    for &density in densities {
        let mut cfg = *base;
        cfg.contour_density = density;
        let contour = reduced_contour(g0, &cfg, params)?;
        let trace = solve_reduced(g0, &contour.spec, &xs[..2], &ts, params)?;
        let start = solve_reduced(g0, &contour.spec, &xs, &ts[..2], params)?;
        let eb = ts
            .iter()
            .enumerate()
            .map(|(n, &t)| (trace.at(0, n) - g0.interpolate(t)).norm())
            .fold(0.0, f64::max);
        let ei = start.slice(0).iter().map(|v| v.norm()).fold(0.0, f64::max);
        boundary.push((1.0 / density, eb / peak));
        initial.push((1.0 / density, ei / peak));
    }
    Ok((with_orders(boundary), with_orders(initial)))
}

/// Writes a refinement table as CSV with columns `h,error,order`.
pub fn write_table<W: std::io::Write>(rows: &[ConvergenceRow], mut out: W) -> Result<()> {
    writeln!(out, "h,error,order")?;
    for r in rows {
        writeln!(out, "{:.17e},{:.17e},{:.17e}", r.h, r.error, r.order)?;
    }
    Ok(())
}
