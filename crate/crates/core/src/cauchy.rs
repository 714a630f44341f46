//! Whole-line problems: the free propagator `S[y₀;0]`, the Duhamel term
//! `S[0;F]`, traces at `x = 0`, and the dispersive kernel `I(x,y,t)`.

use std::f64::consts::{PI, TAU};

use log::warn;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridKind, SpaceTimeField};
use crate::quad::{gauss_legendre, linear_exp_weights};
use crate::spectral::{omega, PdeParams};
use crate::transforms::PeriodicGrid;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Relative size of `|u(±L)|` that triggers the periodic-wrap warning.
pub const WRAP_WARN_LEVEL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
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
    pub fixed_point_tol: f64,
    pub max_picard: usize,
    pub quad_tol: f64,
    /// `λ` margin over the branch-cut height (must exceed 1).
    pub lambda_margin: f64,
    pub gl_order: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            t_final: 1.0,
            t_prime: 2.0,
            l: 40.0,
            nx: 257,
            nt: 401,
            contour_density: 2.0,
            truncation_m: 0.0,
            fixed_point_tol: 1e-10,
            max_picard: 30,
            quad_tol: 1e-10,
            lambda_margin: 1.5,
            gl_order: 8,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return bad(format!("T = {} must be positive", self.t_final));
        }
        if !(self.t_prime > self.t_final) || !self.t_prime.is_finite() {
            return bad(format!("Tprime = {} must exceed T = {}", self.t_prime, self.t_final));
        }
        if !(self.l > 0.0) || !self.l.is_finite() {
            return bad(format!("L = {} must be positive", self.l));
        }
        if self.nx < 16 || self.nt < 16 {
            return bad(format!("grid sizes Nx = {}, Nt = {} must be at least 16", self.nx, self.nt));
        }
        if !(self.contour_density > 0.0) {
            return bad("contour_density must be positive".into());
        }
        if !(self.truncation_m >= 0.0) {
            return bad("truncation_M must be nonnegative (0 selects it automatically)".into());
        }
        if !(self.fixed_point_tol > 0.0 && self.quad_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if !(self.lambda_margin > 1.0) {
            return bad("lambda_margin must exceed 1".into());
        }
        if self.gl_order == 0 || self.max_picard == 0 {
            return bad("gl_order and max_picard must be positive".into());
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.t_final / (self.nt - 1) as f64
    }

    pub fn dx(&self) -> f64 {
        self.l / (self.nx - 1) as f64
    }

    /// Number of time samples covering `[0, T′]` at the solver step.
    pub fn nt_prime(&self) -> usize {
        ((self.t_prime / self.dt()).round() as usize) + 1
    }

    /// Spatial half-line grid `[0, L]`.
    pub fn half_line_xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| i as f64 * self.dx()).collect()
    }

    pub fn ts(&self) -> Vec<f64> {
        (0..self.nt).map(|n| n as f64 * self.dt()).collect()
    }
}

/// `max_t max(|u(−L,t)|, |u(L,t)|) / max|u|`.
pub fn wrap_indicator(u: &SpaceTimeField) -> f64 {
    let peak = u.max_abs();
    if peak == 0.0 {
        return 0.0;
    }
    let edge = (0..u.nt)
        .map(|n| u.at(0, n).norm().max(u.at(u.nx - 1, n).norm()))
        .fold(0.0, f64::max);
    edge / peak
}

fn warn_on_wrap(u: &SpaceTimeField, what: &str) {
    let w = wrap_indicator(u);
    if w > WRAP_WARN_LEVEL {
        warn!("{what}: |u| at ±L reaches {w:.2e} of max|u|; periodic wrap may pollute the solution");
    }
}

fn whole_line_field(y0ext: &GridFunction, config: &SolverConfig) -> Result<SpaceTimeField> {
    SpaceTimeField::zeros(y0ext.start, y0ext.end, y0ext.len(), 0.0, config.t_final, config.nt)
}

/// `S[y₀;0]` on `[−L,L] × [0,T]`.
pub fn solve_homogeneous(y0ext: &GridFunction, config: &SolverConfig, params: &PdeParams) -> Result<SpaceTimeField> {
    let grid = PeriodicGrid::for_function(y0ext)?;
    let spec = grid.forward(&y0ext.values[..grid.n]);
    let mut out = whole_line_field(y0ext, config)?;
    let ts = out.ts();
    let symbols: Vec<Complex64> = grid.wavenumbers.iter().map(|&k| omega(Complex64::new(k, 0.0), params)).collect();
    let n = grid.n;
    out.values.par_chunks_mut(y0ext.len()).zip(ts.par_iter()).for_each(|(slice, &t)| {
        let modes: Vec<Complex64> = spec.iter().zip(&symbols).map(|(v, w)| v * (-w * t).exp()).collect();
        let back = grid.inverse(&modes);
        slice[..n].copy_from_slice(&back);
        slice[n] = back[0];
    });
    warn_on_wrap(&out, "homogeneous solve");
    Ok(out)
}

/// `S[0;F]`: `ẑ(k,t) = −i∫₀ᵗ e^{−ω(k)(t−t′)}F̂(k,t′)dt′`, exact for `F̂`
/// piecewise linear in time.
pub fn solve_duhamel(forcing: &SpaceTimeField, params: &PdeParams) -> Result<SpaceTimeField> {
    let line = forcing.slice_function(0);
    let grid = PeriodicGrid::for_function(&line)?;
    let n = grid.n;
    let nxw = forcing.nx;
    let spectra: Vec<Vec<Complex64>> = (0..forcing.nt)
        .into_par_iter()
        .map(|j| grid.forward(&forcing.slice(j)[..n]))
        .collect();
    let dt = forcing.dt();
    let steps: Vec<(Complex64, Complex64, Complex64)> = grid
        .wavenumbers
        .iter()
        .map(|&k| {
            let z = -omega(Complex64::new(k, 0.0), params) * dt;
            let (a, b) = linear_exp_weights(z);
            // weight on F̂ₙ is ∫₀¹e^{zu}u du, on F̂ₙ₊₁ is ∫₀¹e^{zu}(1−u) du
            (z.exp(), -I * dt * b, -I * dt * a)
        })
        .collect();
    let mut zhat = vec![Complex64::new(0.0, 0.0); n];
    let mut hats = Vec::with_capacity(forcing.nt);
    hats.push(zhat.clone());
    for j in 0..forcing.nt.saturating_sub(1) {
        let (f0, f1) = (&spectra[j], &spectra[j + 1]);
        for (m, z) in zhat.iter_mut().enumerate() {
            let (e, w0, w1) = steps[m];
            *z = e * *z + w0 * f0[m] + w1 * f1[m];
        }
        hats.push(zhat.clone());
    }
    let mut out = SpaceTimeField::zeros(forcing.x_start, forcing.x_end, nxw, forcing.t_start, forcing.t_end, forcing.nt)?;
    out.values.par_chunks_mut(nxw).zip(hats.par_iter()).enumerate().for_each(|(j, (slice, h))| {
        if j == 0 {
            return;
        }
        let back = grid.inverse(h);
        slice[..n].copy_from_slice(&back);
        slice[n] = back[0];
    });
    warn_on_wrap(&out, "Duhamel solve");
    Ok(out)
}

/// Time series `u(0, ·)` by linear interpolation in `x`.
pub fn trace_at_zero(u: &SpaceTimeField) -> Result<GridFunction> {
    if !(u.x_start <= 0.0 && u.x_end >= 0.0) {
        return Err(Error::GridMismatch(format!("x = 0 is outside [{}, {}]", u.x_start, u.x_end)));
    }
    let pos = (0.0 - u.x_start) / u.dx();
    let i = (pos.floor() as usize).min(u.nx - 2);
    let theta = pos - i as f64;
    let values = (0..u.nt)
        .map(|n| {
            let (a, b) = (u.at(i, n), u.at(i + 1, n));
            if theta.abs() < 1e-12 {
                a
            } else {
                a + (b - a) * theta
            }
        })
        .collect();
    GridFunction::new(u.t_start, u.t_end, values, GridKind::Temporal)
}

/// `Ai(z)` for real `z` from `(1/2π)∫e^{i(s³/3 + zs)}ds` along `Im s = η`.
pub fn airy_ai(z: f64) -> f64 {
    let eta = if z > 1.0 {
        z.sqrt()
    } else if z > -1.0 {
        1.0
    } else {
        1.0 / (-z).sqrt()
    };
    let sigma_max = (40.0 / eta).sqrt() + (-z).max(0.0).sqrt();
    let rule = gauss_legendre(16);
    let integrand = |sigma: f64| {
        let s = Complex64::new(sigma, eta);
        (I * (s * s * s / 3.0 + z * s)).exp()
    };
    let rate = |sigma: f64| (sigma * sigma - eta * eta + z).abs() + 2.0 * eta * sigma.abs() + 1.0;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut a = -sigma_max;
    while a < sigma_max {
        let len = (PI / rate(a)).min(PI / rate((a + PI / rate(a)).min(sigma_max))).max(1e-6);
        let b = (a + len).min(sigma_max);
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        acc += rule.iter().map(|&(x, w)| integrand(mid + half * x) * w).sum::<Complex64>() * half;
        a = b;
    }
    acc.re / TAU
}

/// `I(x,y,t) = ∫ e^{ik(x−y−tδ) + i(tβk³ − tαk²)} dk`.
///
/// The shift `k = κ + α/(3β)` removes the quadratic term and leaves an Airy
/// integral in `κ`.
pub fn dispersive_kernel(x: f64, y: f64, t: f64, params: &PdeParams) -> Result<Complex64> {
    if t == 0.0 {
        return Err(Error::TimeZero);
    }
    let (alpha, beta, delta) = (params.alpha, params.beta, params.delta);
    let a = params.shift();
    let big_x = x - y - t * delta;
    let xi = big_x - t * alpha * alpha / (3.0 * beta);
    let c0 = a * big_x - 2.0 * t * alpha * a * a / 3.0;
    let c = (3.0 * beta * t.abs()).powf(-1.0 / 3.0);
    // ∫e^{i(τκ³+ξκ)}dκ = 2πc·Ai(±ξc), the sign following τ = βt
    let airy = if t > 0.0 { airy_ai(xi * c) } else { airy_ai(-xi * c) };
    Ok(Complex64::from_polar(TAU * c * airy, c0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::{extend_initial, ExtensionPolicy};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn config(nx: usize, nt: usize, l: f64, t: f64) -> SolverConfig {
        SolverConfig { nx, nt, l, t_final: t, t_prime: 2.0 * t, ..Default::default() }
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let mut cfg = SolverConfig { t_prime: 0.5, ..Default::default() };
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
        cfg = SolverConfig { nx: 8, ..Default::default() };
        assert!(cfg.validate().is_err());
        let json = r#"{"T": 0.5, "Tprime": 1.0, "Nx": 64}"#;
        let cfg: SolverConfig = serde_json::from_str(json).unwrap();
        assert_eq!((cfg.t_final, cfg.nx, cfg.nt), (0.5, 64, 401));
        assert_eq!(cfg.nt_prime(), 801);
    }

    #[test]
    fn homogeneous_conserves_mass_and_is_linear() {
        let p = PdeParams::linear(0.7, 1.0, -0.3).unwrap();
        let cfg = config(257, 33, 30.0, 1.0);
        let u0 = GridFunction::from_fn(0.0, 30.0, 257, GridKind::Spatial, |x| c((-(x - 10.0).powi(2) / 4.0).exp(), 0.0)).unwrap();
        let ext = extend_initial(&u0, ExtensionPolicy::Hestenes).unwrap();
        let y = solve_homogeneous(&ext, &cfg, &p).unwrap();
        let n0 = y.slice_l2(0);
        for n in 0..y.nt {
            assert!((y.slice_l2(n) / n0 - 1.0).abs() < 1e-10);
        }
        assert!(y.slice(0).iter().zip(&ext.values).all(|(a, b)| (a - b).norm() < 1e-12));

        let zero = GridFunction::zeros(-30.0, 30.0, 513, GridKind::Spatial).unwrap();
        assert_eq!(solve_homogeneous(&zero, &cfg, &p).unwrap().max_abs(), 0.0);

        let other = GridFunction::from_fn(-30.0, 30.0, 513, GridKind::Spatial, |x| c(0.0, (-(x + 3.0).powi(2)).exp())).unwrap();
        let combo = ext.linear_combination(c(2.0, 1.0), &other, c(-0.5, 0.0)).unwrap();
        let mut expect = solve_homogeneous(&ext, &cfg, &p).unwrap();
        expect.values.iter_mut().for_each(|v| *v *= c(2.0, 1.0));
        expect.axpy(c(-0.5, 0.0), &solve_homogeneous(&other, &cfg, &p).unwrap()).unwrap();
        let got = solve_homogeneous(&combo, &cfg, &p).unwrap();
        assert!(got.max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn duhamel_matches_closed_form_for_static_forcing() {
        let p = PdeParams::linear(0.4, 1.0, -0.2).unwrap();
        let (l, nxw, nt, t_end) = (20.0, 257, 41, 0.8);
        let mut f = SpaceTimeField::zeros(-l, l, nxw, 0.0, t_end, nt).unwrap();
        let profile: Vec<Complex64> = f.xs().iter().map(|&x| c((-x * x).exp(), 0.2 * x * (-x * x).exp())).collect();
        for n in 0..nt {
            f.slice_mut(n).copy_from_slice(&profile);
        }
        let z = solve_duhamel(&f, &p).unwrap();
        assert_eq!(z.slice(0).iter().map(|v| v.norm()).fold(0.0, f64::max), 0.0);

        let grid = PeriodicGrid::new(-l, l, nxw).unwrap();
        let fhat = grid.forward(&profile[..nxw - 1]);
        for n in [1, 17, nt - 1] {
            let t = z.t(n);
            let exact: Vec<Complex64> = fhat
                .iter()
                .zip(&grid.wavenumbers)
                .map(|(v, &k)| {
                    let w = omega(c(k, 0.0), &p);
                    let factor = if w.norm() < 1e-14 { -I * t } else { -I * (1.0 - (-w * t).exp()) / w };
                    factor * v
                })
                .collect();
            let back = grid.inverse(&exact);
            let err = back.iter().zip(z.slice(n)).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-8, "slice {n}: {err}");
        }
        let zero = SpaceTimeField::zeros(-l, l, nxw, 0.0, t_end, nt).unwrap();
        assert_eq!(solve_duhamel(&zero, &p).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn duhamel_manufactured_solution() {
        // w = t·φ(x) satisfies ŵ_t = −ωŵ − iF̂ for F̂ = i(1 + ωt)φ̂
        let p = PdeParams::linear(0.5, 1.0, -0.1).unwrap();
        let (l, nxw, nt, t_end) = (20.0, 257, 201, 1.0);
        let grid = PeriodicGrid::new(-l, l, nxw).unwrap();
        let phi: Vec<Complex64> = (0..nxw - 1).map(|i| c((-(grid.start + i as f64 * grid.spacing()).powi(2)).exp(), 0.0)).collect();
        let phat = grid.forward(&phi);
        let mut f = SpaceTimeField::zeros(-l, l, nxw, 0.0, t_end, nt).unwrap();
        for n in 0..nt {
            let t = f.t(n);
            let fh: Vec<Complex64> = phat
                .iter()
                .zip(&grid.wavenumbers)
                .map(|(v, &k)| I * (v + omega(c(k, 0.0), &p) * t * v))
                .collect();
            let back = grid.inverse(&fh);
            f.slice_mut(n)[..nxw - 1].copy_from_slice(&back);
            f.slice_mut(n)[nxw - 1] = back[0];
        }
        let z = solve_duhamel(&f, &p).unwrap();
        for n in [50, 200] {
            let t = z.t(n);
            let err = (0..nxw - 1).map(|i| (z.at(i, n) - phi[i] * t).norm()).fold(0.0, f64::max);
            assert!(err < 1e-10, "t = {t}: {err}");
        }
    }

    #[test]
    fn trace_examples() {
        let zero = SpaceTimeField::zeros(-5.0, 5.0, 21, 0.0, 1.0, 11).unwrap();
        assert_eq!(trace_at_zero(&zero).unwrap().max_abs(), 0.0);
        let mut u = SpaceTimeField::zeros(-5.0, 5.0, 21, 0.0, 1.0, 11).unwrap();
        for n in 0..11 {
            for i in 0..21 {
                *u.at_mut(i, n) = c(u.x(i) + u.t(n), 0.0);
            }
        }
        let tr = trace_at_zero(&u).unwrap();
        for n in 0..11 {
            assert!((tr.values[n].re - u.t(n)).abs() < 1e-14);
        }
        let shifted = SpaceTimeField::zeros(1.0, 5.0, 21, 0.0, 1.0, 11).unwrap();
        assert!(trace_at_zero(&shifted).is_err());
    }

    #[test]
    fn airy_values() {
        for (z, v) in [(0.0, 0.355028053887817), (1.0, 0.1352924163), (-1.0, 0.5355608833), (2.0, 0.03492413042), (-5.0, 0.3507610090)] {
            assert!((airy_ai(z) - v).abs() < 1e-9, "Ai({z}) = {}", airy_ai(z));
        }
    }

    #[test]
    fn kernel_decay_and_symmetry() {
        let p = PdeParams::linear(0.0, 1.0, 0.0).unwrap();
        let ai0 = 0.355028053887817;
        for t in [0.01, 0.3, 1.0, 7.0, 100.0] {
            let k = dispersive_kernel(1.5, 1.5, t, &p).unwrap();
            let scaled = k.norm() * (p.beta * t).powf(1.0 / 3.0);
            let exact = TAU * 3f64.powf(-1.0 / 3.0) * ai0;
            assert!((scaled / exact - 1.0).abs() < 1e-6);
        }
        assert!(matches!(dispersive_kernel(0.0, 0.0, 0.0, &p), Err(Error::TimeZero)));
        let q = PdeParams::linear(0.8, 1.2, -0.5).unwrap();
        for (x, y, t) in [(0.3, 1.1, 0.5), (2.0, -1.0, 3.0), (1.0, 1.0, 0.2)] {
            let fwd = dispersive_kernel(x, y, t, &q).unwrap();
            let back = dispersive_kernel(y, x, -t, &q).unwrap();
            assert!((back - fwd.conj()).norm() < 1e-9 * (1.0 + fwd.norm()));
        }
        let same = dispersive_kernel(0.7, 0.7, -0.9, &q).unwrap();
        assert!((same - dispersive_kernel(0.7, 0.7, 0.9, &q).unwrap().conj()).norm() < 1e-9);
    }

    #[test]
    fn kernel_matches_direct_quadrature() {
        // ∫ e^{iφ(k)} e^{−εk²} dk, extrapolated to ε = 0 from ε, ε/2, ε/4
        let p = PdeParams::linear(0.6, 1.0, -0.4).unwrap();
        let (x, y, t) = (0.8, 0.2, 0.05);
        let damped = |eps: f64| -> Complex64 {
            let kmax = (40.0 / eps).sqrt();
            let h = 5e-4;
            let n = (2.0 * kmax / h) as usize;
            (0..=n)
                .map(|j| {
                    let k = -kmax + j as f64 * h;
                    let ph = k * (x - y - t * p.delta) + t * (p.beta * k.powi(3) - p.alpha * k * k);
                    Complex64::from_polar(h * (-eps * k * k).exp(), ph)
                })
                .sum()
        };
        let eps = 0.01;
        let extrapolated = (damped(eps) - 6.0 * damped(eps / 2.0) + 8.0 * damped(eps / 4.0)) / 3.0;
        let got = dispersive_kernel(x, y, t, &p).unwrap();
        assert!((got - extrapolated).norm() < 1e-3 * got.norm(), "{got} vs {extrapolated}");
    }
}
