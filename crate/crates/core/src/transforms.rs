//! Fourier-side plumbing: half-line and whole-line transforms, temporal
//! transforms of boundary traces, and the extension operators that move
//! half-line data onto the whole line and compactify boundary data in time.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridKind};
use crate::quad::exp_linear_integral;
use crate::spectral::{omega, PdeParams};

/// Default relative size of `|f(L)|` tolerated when truncating `∫₀^∞` at `L`.
pub const DEFAULT_DECAY_TOL: f64 = 1e-8;

/// Hestenes reflection coefficients at arguments `(x, 2x, 3x)`; they match
/// value, first and second derivative across `x = 0`.
pub const HESTENES_COEFFS: [f64; 3] = [6.0, -8.0, 3.0];

/// The reflection is tapered to zero between distances `w` and `2w` from
/// the boundary, so features far from `x = 0` are not copied (compressed)
/// onto the negative axis.
pub const HESTENES_TAPER: f64 = 1.0;

/// `f̂(k) = ∫₀^L e^{−ikx} f(x) dx` for `Im k ≤ 0`.
pub fn half_line_ft(f: &GridFunction, k: Complex64, decay_tol: f64) -> Result<Complex64> {
    if k.im > 0.0 {
        return Err(Error::UpperHalfPlane(k));
    }
    let peak = f.max_abs();
    if peak > 0.0 {
        let tail = f.values.last().unwrap().norm() / peak;
        if tail > decay_tol {
            return Err(Error::TailTooLarge(tail));
        }
    }
    // trapezoid on e^{−ikx}f with the first Euler–Maclaurin correction
    let h = f.spacing();
    let g: Vec<Complex64> = f
        .values
        .iter()
        .enumerate()
        .map(|(j, &v)| (Complex64::new(0.0, -1.0) * k * f.coord(j)).exp() * v)
        .collect();
    let n = g.len();
    let mut acc = g[1..n - 1].iter().sum::<Complex64>() + 0.5 * (g[0] + g[n - 1]);
    acc *= h;
    if n >= 3 {
        let da = (-3.0 * g[0] + 4.0 * g[1] - g[2]) / (2.0 * h);
        let db = (3.0 * g[n - 1] - 4.0 * g[n - 2] + g[n - 3]) / (2.0 * h);
        acc -= h * h / 12.0 * (db - da);
    }
    Ok(acc)
}

/// Periodic FFT machinery for a whole-line grid over `[−L, L]` with the
/// duplicate endpoint dropped.
#[derive(Clone)]
pub struct PeriodicGrid {
    pub n: usize,
    pub start: f64,
    pub period: f64,
    pub wavenumbers: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for PeriodicGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PeriodicGrid").field("n", &self.n).field("period", &self.period).finish()
    }
}

impl PeriodicGrid {
    /// Grid matching a `GridFunction` with `points` samples on `[start, end]`.
    pub fn new(start: f64, end: f64, points: usize) -> Result<Self> {
        if points < 3 {
            return Err(Error::InvalidGrid("periodic grid needs at least 3 points".into()));
        }
        let n = points - 1;
        let period = end - start;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let dk = 2.0 * PI / period;
        let wavenumbers = (0..n)
            .map(|j| {
                let jj = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
                jj * dk
            })
            .collect();
        Ok(Self { n, start, period, wavenumbers, forward, inverse })
    }

    pub fn for_function(f: &GridFunction) -> Result<Self> {
        Self::new(f.start, f.end, f.len())
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.n as f64
    }

    /// Unnormalized DFT of the first `n` samples.
    pub fn forward(&self, samples: &[Complex64]) -> Vec<Complex64> {
        let mut buf = samples[..self.n].to_vec();
        self.forward.process(&mut buf);
        buf
    }

    /// Inverse DFT including the `1/n` factor.
    pub fn inverse(&self, spectrum: &[Complex64]) -> Vec<Complex64> {
        let mut buf = spectrum.to_vec();
        self.inverse.process(&mut buf);
        let s = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|v| *v *= s);
        buf
    }

    /// Append the periodic copy of the first sample to close the grid.
    pub fn close(&self, mut samples: Vec<Complex64>) -> Vec<Complex64> {
        samples.truncate(self.n);
        samples.push(samples[0]);
        samples
    }

    /// Continuous transform samples `f̂(k_j) ≈ ∫ e^{−ik_j x} f dx`, with the
    /// phase of the grid origin included.
    pub fn continuous_transform(&self, samples: &[Complex64]) -> Vec<Complex64> {
        let h = self.spacing();
        self.forward(samples)
            .into_iter()
            .zip(&self.wavenumbers)
            .map(|(v, &k)| v * h * Complex64::from_polar(1.0, -k * self.start))
            .collect()
    }
}

/// `S[f;0](·, t)`: multiply the periodic spectrum by `e^{−ω(k)t}`.
pub fn whole_line_propagator_apply(f: &GridFunction, t: f64, params: &PdeParams) -> Result<GridFunction> {
    if t == 0.0 {
        return Ok(f.clone());
    }
    let grid = PeriodicGrid::for_function(f)?;
    let mut spec = grid.forward(&f.values);
    for (v, &k) in spec.iter_mut().zip(&grid.wavenumbers) {
        *v *= (-omega(Complex64::new(k, 0.0), params) * t).exp();
    }
    let values = grid.close(grid.inverse(&spec));
    Ok(GridFunction { values, ..f.clone() })
}

/// `∫₀^{t_end} e^{κt′} h(t′) dt′`: trapezoid rule on the product with the
/// first Euler–Maclaurin end corrections. A trailing partial cell is
/// integrated exactly against the linear interpolant.
#[allow(clippy::needless_range_loop)]
pub fn time_transform(h: &GridFunction, kappa: Complex64, t_end: f64) -> Complex64 {
    let zero = Complex64::new(0.0, 0.0);
    let t_end = t_end.min(h.end);
    if t_end <= h.start || h.len() < 2 {
        return zero;
    }
    let dt = h.spacing();
    let span = (t_end - h.start) / dt;
    let last = if (span - span.round()).abs() < 1e-9 { span.round() as usize } else { span.floor() as usize };
    let last = last.min(h.len() - 1);
    let v = &h.values;

    // e^{κt_j} by recurrence, resynchronized to bound rounding drift
    let step = (kappa * dt).exp();
    let mut e = (kappa * h.start).exp();
    let mut prod = Vec::with_capacity(last + 1);
    for j in 0..=last {
        if j > 0 {
            e = if j % 128 == 0 { (kappa * h.coord(j)).exp() } else { e * step };
        }
        prod.push(e * v[j]);
    }
    let mut acc = zero;
    if last >= 1 {
        acc = prod[1..last].iter().sum::<Complex64>() + 0.5 * (prod[0] + prod[last]);
        acc *= dt;
        if last >= 2 {
            // d/dt (e^{κt}h) = e^{κt}(κh + h′) with one-sided h′
            let da = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dt);
            let db = (3.0 * v[last] - 4.0 * v[last - 1] + v[last - 2]) / (2.0 * dt);
            let ga = kappa * prod[0] + (kappa * h.start).exp() * da;
            let gb = kappa * prod[last] + (kappa * h.coord(last)).exp() * db;
            acc -= dt * dt / 12.0 * (gb - ga);
        }
    }
    if last + 1 < h.len() && t_end > h.coord(last) + 1e-12 * dt {
        acc += exp_linear_integral(&v[last..last + 2], h.coord(last), dt, kappa, t_end);
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExtensionPolicy {
    /// `u(−x) = χ(x)[6u(x) − 8u(2x) + 3u(3x)]`, C²-matched at the origin,
    /// with `χ` a smooth taper (see [`HESTENES_TAPER`]).
    Hestenes,
    /// Zero outside `[0, L]`; bounded on `H^s` only for `s < 1/2`.
    Zero,
}

impl ExtensionPolicy {
    /// Zero extension for `s < 1/2`, reflection otherwise.
    pub fn for_regularity(s: f64) -> Self {
        if s < 0.5 {
            ExtensionPolicy::Zero
        } else {
            ExtensionPolicy::Hestenes
        }
    }
}

/// Extend samples on `[0, L]` to `[−L, L]` (same spacing, `2n − 1` points).
pub fn extend_initial(u0: &GridFunction, policy: ExtensionPolicy) -> Result<GridFunction> {
    if u0.start.abs() > 1e-12 * (1.0 + u0.end.abs()) {
        return Err(Error::InvalidGrid(format!("extension expects a grid starting at 0, got {}", u0.start)));
    }
    let n = u0.len();
    let mut values = Vec::with_capacity(2 * n - 1);
    for i in (1..n).rev() {
        let v = match policy {
            ExtensionPolicy::Zero => Complex64::new(0.0, 0.0),
            ExtensionPolicy::Hestenes => {
                let taper = smooth_cutoff(u0.coord(i) / HESTENES_TAPER - 1.0);
                if taper == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    HESTENES_COEFFS
                        .iter()
                        .enumerate()
                        .map(|(j, &a)| {
                            let idx = (j + 1) * i;
                            if idx < n {
                                u0.values[idx] * a
                            } else {
                                Complex64::new(0.0, 0.0)
                            }
                        })
                        .sum::<Complex64>()
                        * taper
                }
            }
        };
        values.push(v);
    }
    values.extend_from_slice(&u0.values);
    GridFunction::new(-u0.end, u0.end, values, u0.kind)
}

/// Smooth step: 1 for `s ≤ 0`, 0 for `s ≥ 1`, C^∞ and monotone in between.
pub fn smooth_cutoff(s: f64) -> f64 {
    if s <= 0.0 {
        return 1.0;
    }
    if s >= 1.0 {
        return 0.0;
    }
    let bump = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
    let a = bump(1.0 - s);
    let b = bump(s);
    a / (a + b)
}

/// Extend `g` on `[0, T]` to `[0, T′]`: constant continuation of `g(T)`
/// multiplied by a smooth cutoff that reaches zero at `T′ − (T′ − T)/4`.
pub fn extend_boundary(g: &GridFunction, t_prime: f64) -> Result<GridFunction> {
    let t = g.end;
    if t_prime <= t {
        return Err(Error::InvalidConfig(format!("T' = {t_prime} must exceed T = {t}")));
    }
    let h = g.spacing();
    let extra = (t_prime - t) / h;
    let steps = extra.round();
    if (extra - steps).abs() > 1e-6 {
        return Err(Error::GridMismatch(format!(
            "T' - T = {} is not a multiple of the time step {h}",
            t_prime - t
        )));
    }
    let steps = steps as usize;
    let eta = 0.25 * (t_prime - t);
    let ramp = t_prime - eta - t;
    let last = *g.values.last().unwrap();
    let mut values = g.values.clone();
    for j in 1..=steps {
        let tj = t + j as f64 * h;
        values.push(last * smooth_cutoff((tj - t) / ramp));
    }
    GridFunction::new(g.start, g.start + (g.len() - 1 + steps) as f64 * h, values, GridKind::Temporal)
}
