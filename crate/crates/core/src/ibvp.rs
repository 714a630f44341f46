//! The reduced half-line problem `q(x,0) = 0`, `q(0,t) = g₀(t)`: assembly of
//! `g₀`, evaluation of the contour representation, and the spectral
//! identities it satisfies.

use std::f64::consts::{PI, TAU};

use log::warn;
use matrixmultiply::CGemmOption;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cauchy::SolverConfig;
use crate::contours::{
    build_contour_asymmetric, c_pm, gamma_path, select_lambda, ContourOptions, ContourSpec, Parametrization,
};
use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridKind, SpaceTimeField};
use crate::quad::gauss_legendre;
use crate::spectral::{classify, nu_pair, omega, omega_prime, PdeParams, SpectralClassification};
use crate::transforms::{extend_boundary, half_line_ft, time_transform};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Relative right-end size tolerated when transforming half-line slices.
const SLICE_DECAY_TOL: f64 = 1e-4;

/// `E_b[g − y(0,·) − z(0,·)]` on `[0, T′]`.
pub fn assemble_g0(g: &GridFunction, ytrace: &GridFunction, ztrace: &GridFunction, t_prime: f64) -> Result<GridFunction> {
    if !g.same_grid(ytrace) || !g.same_grid(ztrace) {
        return Err(Error::GridMismatch("boundary datum and traces live on different time grids".into()));
    }
    let diff: Vec<Complex64> = g
        .values
        .iter()
        .zip(&ytrace.values)
        .zip(&ztrace.values)
        .map(|((a, b), c)| a - b - c)
        .collect();
    let diff = GridFunction::new(g.start, g.end, diff, GridKind::Temporal)?;
    extend_boundary(&diff, t_prime)
}

/// Contour for the reduced problem together with how its truncation was
/// chosen.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReducedContour {
    pub spec: ContourSpec,
    /// Per-branch truncations `(M_left, M_right)`.
    pub truncation: (f64, f64),
    /// Largest `|Im ω|` representable by the time grid of `g₀`.
    pub nyquist: f64,
    /// Whether a branch had to stop at the Nyquist height.
    pub nyquist_limited: bool,
    /// Envelope `|ω′ k′ g̃₀|` at the truncation relative to its maximum.
    pub tail: f64,
}

/// Height `m` on branch `j` where `|Im ω(γⱼ(m))|` first reaches `level`.
fn height_for_frequency(j: u8, level: f64, params: &PdeParams, lambda: f64) -> Result<f64> {
    let freq = |m: f64| -> Result<f64> { Ok(omega(gamma_path(j, m, params, lambda)?.0, params).im.abs()) };
    let mut lo = lambda;
    let mut hi = lambda + 1.0;
    while freq(hi)? < level {
        lo = hi;
        hi = lambda + 2.0 * (hi - lambda);
        if hi > 1e8 {
            return Err(Error::InvalidParams(format!("frequency {level} is out of reach on branch {j}")));
        }
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if freq(mid)? < level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// `|ω′(γ) γ′| · |g̃₀(ω(γ), T′)|` along branch `j`.
fn branch_envelope(j: u8, ms: &[f64], g0: &GridFunction, params: &PdeParams, lambda: f64) -> Result<Vec<f64>> {
    ms.par_iter()
        .map(|&m| {
            let (k, dk) = gamma_path(j, m, params, lambda)?;
            let om = omega(k, params);
            Ok((omega_prime(k, params) * dk).norm() * time_transform(g0, om, g0.end).norm())
        })
        .collect()
}

/// Build the contour used by [`solve_reduced`].
///
/// With `config.truncation_m == 0` each branch is cut where the envelope of
/// the integrand falls below `quad_tol` of its peak, but never above the
/// height where `|Im ω|` reaches `π/Δt`: beyond it the discrete time
/// transform repeats periodically. A user-supplied `M` whose tail exceeds
/// `quad_tol` is rejected.
pub fn reduced_contour(g0: &GridFunction, config: &SolverConfig, params: &PdeParams) -> Result<ReducedContour> {
    let cls = classify(params);
    let lambda = select_lambda(&cls, params, config.lambda_margin)?;
    let nyquist = PI / g0.spacing();
    let samples = 600;
    let mut truncation = [0.0; 2];
    let mut tail: f64 = 0.0;
    let mut limited = false;
    for (slot, j) in [(0usize, 1u8), (1, 3)] {
        let cap = height_for_frequency(j, nyquist, params, lambda)?;
        let top = if config.truncation_m > 0.0 { config.truncation_m.max(cap) } else { cap };
        let ms: Vec<f64> = (0..=samples).map(|i| lambda + (top - lambda) * i as f64 / samples as f64).collect();
        let env = branch_envelope(j, &ms, g0, params, lambda)?;
        let peak = env.iter().cloned().fold(0.0, f64::max);
        if config.truncation_m > 0.0 {
            let m = config.truncation_m;
            let idx = ms.iter().position(|&x| x >= m).unwrap_or(samples);
            let rel = if peak > 0.0 { env[idx..].iter().cloned().fold(0.0, f64::max) / peak } else { 0.0 };
            if rel > config.quad_tol && m < cap {
                return Err(Error::TruncationInsufficient { tail: rel, tol: config.quad_tol });
            }
            if m > cap {
                warn!("truncation M = {m} exceeds the Nyquist height {cap:.4} on branch {j}");
            }
            truncation[slot] = m;
            tail = tail.max(rel);
            continue;
        }
        if peak == 0.0 {
            truncation[slot] = (lambda + 1.0).min(cap);
            continue;
        }
        let last_big = env.iter().rposition(|&e| e > config.quad_tol * peak).unwrap_or(0);
        if last_big + 2 > samples {
            limited = true;
            truncation[slot] = cap;
            tail = tail.max(env[samples] / peak);
        } else {
            truncation[slot] = ms[last_big + 2];
            tail = tail.max(env[last_big + 2..].iter().cloned().fold(0.0, f64::max) / peak);
        }
    }
    if limited {
        warn!("contour truncated at the Nyquist height pi/dt; relative tail {tail:.3e} (refine the time step)");
    }
    let opts = ContourOptions {
        density: config.contour_density,
        gl_order: config.gl_order,
        t_osc: g0.end,
        x_max: config.l,
        x_min: 0.0,
        tail_tol: config.quad_tol,
        parametrization: Parametrization::Gamma,
    };
    let spec = build_contour_asymmetric(&cls, params, lambda, (truncation[0], truncation[1]), &opts)?;
    Ok(ReducedContour { spec, truncation: (truncation[0], truncation[1]), nyquist, nyquist_limited: limited, tail })
}

/// `g₀` transformed at every node, ready for repeated evaluation.
#[derive(Debug, Clone)]
pub struct ReducedRepresentation {
    nodes: Vec<Complex64>,
    omegas: Vec<Complex64>,
    /// `−(i/2π) ω′(k) g̃₀(ω(k), T′) dk w` per node.
    coeffs: Vec<Complex64>,
}

impl ReducedRepresentation {
    pub fn new(g0: &GridFunction, contour: &ContourSpec, params: &PdeParams) -> Self {
        let t_prime = g0.end;
        let coeffs: Vec<Complex64> = contour
            .nodes
            .par_iter()
            .map(|n| {
                let om = omega(n.k, params);
                -I / TAU * omega_prime(n.k, params) * time_transform(g0, om, t_prime) * n.dk * n.weight
            })
            .collect();
        Self {
            nodes: contour.nodes.iter().map(|n| n.k).collect(),
            omegas: contour.nodes.iter().map(|n| omega(n.k, params)).collect(),
            coeffs,
        }
    }

    /// `∂ₓʲ q` at `(xs[i], ts[n])`, stored as a field over uniform `xs`, `ts`.
    pub fn evaluate(&self, j: u32, xs: &[f64], ts: &[f64]) -> Result<SpaceTimeField> {
        let (nx, nt, nk) = (xs.len(), ts.len(), self.nodes.len());
        let mut out = SpaceTimeField::zeros(xs[0], xs[nx - 1], nx, ts[0], ts[nt - 1], nt)?;
        check_uniform(xs, "x")?;
        check_uniform(ts, "t")?;
        if nk == 0 {
            return Ok(out);
        }
        // E[i][n] = e^{i k_n x_i}, row-major nx × nk
        let mut e = vec![ZERO; nx * nk];
        e.par_chunks_mut(nk).zip(xs.par_iter()).for_each(|(row, &x)| {
            for (v, k) in row.iter_mut().zip(&self.nodes) {
                *v = (I * k * x).exp();
            }
        });
        // B[n][m] = c_n (ik_n)^j e^{−ω_n t_m}, row-major nk × nt
        let mut b = vec![ZERO; nk * nt];
        b.par_chunks_mut(nt).enumerate().for_each(|(n, row)| {
            let c = self.coeffs[n] * (I * self.nodes[n]).powu(j);
            for (v, &t) in row.iter_mut().zip(ts) {
                *v = c * (-self.omegas[n] * t).exp();
            }
        });
        // out[m][i] = Σ_n E[i][n] B[n][m], written with the x index fastest
        unsafe {
            matrixmultiply::zgemm(
                CGemmOption::Standard,
                CGemmOption::Standard,
                nx,
                nk,
                nt,
                [1.0, 0.0],
                e.as_ptr() as *const [f64; 2],
                nk as isize,
                1,
                b.as_ptr() as *const [f64; 2],
                nt as isize,
                1,
                [0.0, 0.0],
                out.values.as_mut_ptr() as *mut [f64; 2],
                1,
                nx as isize,
            );
        }
        Ok(out)
    }
}

fn check_uniform(v: &[f64], name: &str) -> Result<()> {
    if v.len() < 2 {
        return Err(Error::InvalidGrid(format!("{name} grid needs at least two points")));
    }
    let h = (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64;
    if !(h > 0.0) || v.iter().enumerate().any(|(i, &x)| (x - v[0] - i as f64 * h).abs() > 1e-9 * (1.0 + x.abs())) {
        return Err(Error::InvalidGrid(format!("{name} grid must be uniform and increasing")));
    }
    Ok(())
}

/// `q(x,t) = −(i/2π)∫_{∂D⁺} e^{ikx−ω(k)t} ω′(k) g̃₀(ω(k),T′) dk`.
pub fn solve_reduced(
    g0: &GridFunction,
    contour: &ContourSpec,
    xs: &[f64],
    ts: &[f64],
    params: &PdeParams,
) -> Result<SpaceTimeField> {
    reduced_derivative(0, g0, contour, xs, ts, params)
}

/// `∂ₓʲ q` from the same representation, `j ≤ 2`.
pub fn reduced_derivative(
    j: u32,
    g0: &GridFunction,
    contour: &ContourSpec,
    xs: &[f64],
    ts: &[f64],
    params: &PdeParams,
) -> Result<SpaceTimeField> {
    if j > 2 {
        return Err(Error::InvalidParams(format!("derivative order {j} not in 0..=2")));
    }
    ReducedRepresentation::new(g0, contour, params).evaluate(j, xs, ts)
}

/// Terms of the global relation at one `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalRelationTerms {
    /// `e^{ω t} q̂(k, t)`.
    pub lhs: Complex64,
    /// `(−βk² + αk + δ) g̃₀`.
    pub t0: Complex64,
    /// `(iβk − iα) g̃₁`.
    pub t1: Complex64,
    /// `β g̃₂`.
    pub t2: Complex64,
}

impl GlobalRelationTerms {
    pub fn residual(&self) -> Complex64 {
        self.lhs - self.t0 - self.t1 - self.t2
    }

    pub fn scale(&self) -> f64 {
        self.lhs.norm() + self.t0.norm() + self.t1.norm() + self.t2.norm()
    }
}

/// `q_x(0,·)` and `q_xx(0,·)` from one-sided third-order stencils.
pub fn boundary_derivatives(q: &SpaceTimeField) -> Result<(GridFunction, GridFunction)> {
    if q.nx < 5 {
        return Err(Error::InvalidGrid("boundary stencils need at least five x points".into()));
    }
    let h = q.dx();
    let col = |i: usize| -> Vec<Complex64> { (0..q.nt).map(|n| q.at(i, n)).collect() };
    let c: Vec<Vec<Complex64>> = (0..5).map(col).collect();
    let d1 = (0..q.nt)
        .map(|n| (-11.0 * c[0][n] + 18.0 * c[1][n] - 9.0 * c[2][n] + 2.0 * c[3][n]) / (6.0 * h))
        .collect();
    let d2 = (0..q.nt)
        .map(|n| {
            (35.0 * c[0][n] - 104.0 * c[1][n] + 114.0 * c[2][n] - 56.0 * c[3][n] + 11.0 * c[4][n]) / (12.0 * h * h)
        })
        .collect();
    Ok((
        GridFunction::new(q.t_start, q.t_end, d1, GridKind::Temporal)?,
        GridFunction::new(q.t_start, q.t_end, d2, GridKind::Temporal)?,
    ))
}

fn time_index(q: &SpaceTimeField, t: f64) -> Result<usize> {
    let pos = (t - q.t_start) / q.dt();
    let n = pos.round();
    if (pos - n).abs() > 1e-6 || n < 0.0 || n as usize >= q.nt {
        return Err(Error::GridMismatch(format!("t = {t} is not a time level of the field")));
    }
    Ok(n as usize)
}

/// Terms of `e^{ωt}q̂(k,t) = (−βk²+αk+δ)g̃₀ + (iβk−iα)g̃₁ + βg̃₂` for the
/// half-line field `q` (zero initial data), with `g̃₁`, `g̃₂` built from
/// finite-difference boundary derivatives of `q`.
pub fn global_relation_terms(
    q: &SpaceTimeField,
    g0: &GridFunction,
    k: Complex64,
    t: f64,
    params: &PdeParams,
) -> Result<GlobalRelationTerms> {
    if k.im > 0.0 {
        return Err(Error::UpperHalfPlane(k));
    }
    let n = time_index(q, t)?;
    let om = omega(k, params);
    let qhat = half_line_ft(&q.slice_function(n), k, SLICE_DECAY_TOL)?;
    let (g1, g2) = boundary_derivatives(q)?;
    let (alpha, beta, delta) = (params.alpha, params.beta, params.delta);
    Ok(GlobalRelationTerms {
        lhs: (om * t).exp() * qhat,
        t0: (-beta * k * k + alpha * k + delta) * time_transform(g0, om, t),
        t1: (I * beta * k - I * alpha) * time_transform(&g1, om, t),
        t2: beta * time_transform(&g2, om, t),
    })
}

/// Residual of the global relation; see [`global_relation_terms`].
pub fn global_relation_residual(
    q: &SpaceTimeField,
    g0: &GridFunction,
    k: Complex64,
    t: f64,
    params: &PdeParams,
) -> Result<Complex64> {
    Ok(global_relation_terms(q, g0, k, t, params)?.residual())
}

/// Clamp a root that should lie in the closed lower half-plane but picked
/// up a rounding-level positive imaginary part.
fn lower_half(nu: Complex64) -> Complex64 {
    if nu.im > 0.0 && nu.im <= 1e-12 * (1.0 + nu.norm()) {
        Complex64::new(nu.re, 0.0)
    } else {
        nu
    }
}

/// `(1/2π)∫_{∂D⁺} e^{ikx}[(ν₋−k)q̂(ν₊,t) − (ν₊−k)q̂(ν₋,t)]/(ν₋−ν₊) dk`,
/// which vanishes for an exact solution.
pub fn vanish_check(
    q: &SpaceTimeField,
    contour: &ContourSpec,
    t: f64,
    x: f64,
    params: &PdeParams,
) -> Result<Complex64> {
    let n = time_index(q, t)?;
    let slice = q.slice_function(n);
    let cls = classify(params);
    let terms: Vec<Complex64> = contour
        .nodes
        .par_iter()
        .map(|node| {
            let k = node.k;
            let (np, nm) = nu_pair(k, &cls, params)?;
            let (np, nm) = (lower_half(np), lower_half(nm));
            let qp = half_line_ft(&slice, np, SLICE_DECAY_TOL)?;
            let qm = half_line_ft(&slice, nm, SLICE_DECAY_TOL)?;
            let integrand = ((nm - k) * qp - (np - k) * qm) / (nm - np);
            Ok((I * k * x).exp() * integrand * node.dk * node.weight)
        })
        .collect::<Result<_>>()?;
    Ok(terms.iter().sum::<Complex64>() / TAU)
}

/// `(g̃₁, g̃₂)(ω(k), t)` from `q̂(ν±, t)` and `g̃₀` by eliminating between
/// the global relations at `ν₊` and `ν₋`.
pub fn reconstruct_boundary_transforms(
    qhat_plus: Complex64,
    qhat_minus: Complex64,
    g0_tilde: Complex64,
    k: Complex64,
    t: f64,
    cls: &SpectralClassification,
    params: &PdeParams,
) -> Result<(Complex64, Complex64)> {
    let (np, nm) = nu_pair(k, cls, params)?;
    let gap = (nm - np).norm();
    if gap < 1e-8 * (1.0 + k.norm()) {
        return Err(Error::DegenerateSymmetry { k, gap });
    }
    let (alpha, beta, delta) = (params.alpha, params.beta, params.delta);
    let e = (omega(k, params) * t).exp();
    let g1 = e * (qhat_plus - qhat_minus) / (I * beta * (np - nm)) + I * k * g0_tilde;
    let a = |nu: Complex64| -beta * nu * nu + alpha * nu + delta;
    let from = |nu: Complex64, qh: Complex64| (e * qh - a(nu) * g0_tilde - (I * beta * nu - I * alpha) * g1) / beta;
    let g2 = 0.5 * (from(np, qhat_plus) + from(nm, qhat_minus));
    Ok((g1, g2))
}

/// `max |γ₁(m)|^{2j} |τ′(m)| / (1 + τ(m)²)^{(j+1)/3}` with `τ = iω(γ₁(m))`.
pub fn suplem_ratio(j: u32, m_grid: &[f64], params: &PdeParams, lambda: f64) -> Result<f64> {
    let mut best: f64 = 0.0;
    for &m in m_grid {
        let (k, dk) = gamma_path(1, m, params, lambda)?;
        let tau = (I * omega(k, params)).re;
        let dtau = (I * omega_prime(k, params) * dk).re;
        let r = k.norm().powi(2 * j as i32) * dtau.abs() / (1.0 + tau * tau).powf((j as f64 + 1.0) / 3.0);
        best = best.max(r);
    }
    Ok(best)
}

/// `s(m) = √(3(m − α/(3β))² − (α² + 3βδ)/(3β²))`, continued analytically to
/// `Re m < α/(3β)` with `s ≈ √3(α/(3β) − m)`.
fn s_of(m: Complex64, params: &PdeParams) -> Complex64 {
    let a = params.shift();
    let d = params.discriminant() / (9.0 * params.beta * params.beta);
    let w = m - a;
    if d == 0.0 {
        return -3f64.sqrt() * w;
    }
    -3f64.sqrt() * w * (Complex64::new(1.0, 0.0) - d / (w * w)).sqrt()
}

/// Phase `iω(Γ₁(m))` of the left branch as a polynomial in `m`.
fn branch_phase(m: Complex64, params: &PdeParams) -> (Complex64, Complex64) {
    let (alpha, beta, delta) = (params.alpha, params.beta, params.delta);
    let c1 = 2.0 * (delta - alpha * alpha / beta);
    let p = -8.0 * beta * m * m * m + 8.0 * alpha * m * m + c1 * m - alpha * delta / beta;
    let dp = -24.0 * beta * m * m + 16.0 * alpha * m + c1;
    (p, dp)
}

/// Composite GL16 over adaptively sized panels of `u ∈ [0, u_max]`.
fn panel_integrate(
    u_max: f64,
    rate: impl Fn(f64) -> f64,
    f: impl Fn(f64) -> Complex64,
    density: f64,
) -> Complex64 {
    let rule = gauss_legendre(16);
    let mut acc = ZERO;
    let mut u = 0.0;
    while u < u_max {
        let len = (TAU / (density * rate(u))).min(u_max - u);
        let len = len.min(TAU / (density * rate(u + len)));
        let hi = if u_max - (u + len) < 0.25 * len { u_max } else { u + len };
        let (mid, half) = (0.5 * (u + hi), 0.5 * (hi - u));
        acc += rule.iter().map(|&(x, w)| f(mid + half * x) * (w * half)).sum::<Complex64>();
        u = hi;
    }
    acc
}

/// `K(y,x,z,t) = ∫_{−∞}^{c₋} e^{i(m(x−y) + iω(Γ₁(m))t)} e^{−z s(m)} dm`.
///
/// The real segment `[m₀, c₋]` is integrated with `m = c₋ − u²`; the rest
/// runs along a ray from `m₀` into the sector where the cubic phase decays.
pub fn oscillatory_kernel_k(y: f64, x: f64, z: f64, t: f64, params: &PdeParams, lambda: f64) -> Result<Complex64> {
    if t == 0.0 {
        return Err(Error::TimeZero);
    }
    if !(z >= 0.0) {
        return Err(Error::InvalidParams(format!("amplitude parameter z = {z} must be nonnegative")));
    }
    let (cm, _) = c_pm(params, lambda)?;
    let a = params.shift();
    let d = params.discriminant() / (9.0 * params.beta * params.beta);
    let xy = x - y;
    let m0 = cm.min(a - 2.0 * d.abs().sqrt()) - 1.0;
    let integrand = |m: Complex64| -> Complex64 {
        let (p, _) = branch_phase(m, params);
        (I * (m * xy + p * t) - z * s_of(m, params)).exp()
    };
    let local_rate = |m: Complex64| -> f64 {
        let (_, dp) = branch_phase(m, params);
        (xy + dp * t).norm() + z * 3f64.sqrt() + 1.0
    };
    let density = 6.0;

    let u_max = (cm - m0).sqrt();
    let real_part = panel_integrate(
        u_max,
        |u| local_rate(Complex64::new(cm - u * u, 0.0)) * 2.0 * u.max(0.05),
        |u| integrand(Complex64::new(cm - u * u, 0.0)) * (2.0 * u),
        density,
    );

    let theta = if t > 0.0 { 7.0 * PI / 6.0 } else { 5.0 * PI / 6.0 };
    let dir = Complex64::from_polar(1.0, theta);
    // |e^{iφ}| ≤ exp(−8β|t|r³ + O(r²)); stop once it is below e^{−40}
    let growth = (xy.abs() + z * 3f64.sqrt()) + 24.0 * (params.beta * t * (m0 - a).powi(2)).abs();
    let mut r_max: f64 = 1.0;
    while 8.0 * params.beta * t.abs() * r_max.powi(3) - growth * r_max < 40.0 {
        r_max *= 1.25;
    }
    let ray = panel_integrate(r_max, |r| local_rate(m0 + dir * r), |r| integrand(m0 + dir * r) * dir, density);
    // the ray runs outward from m₀; the integral runs inward to m₀
    Ok(real_part - ray)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LaplaceDirection {
    /// `x ↦ ∫ e^{−x s(m)} f(m) dm` over `m ≤ c₋`.
    Forward,
    /// `m ↦ ∫₀^∞ e^{−x s(m)} f(x) dx`.
    Adjoint,
}

fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    w[0] *= 0.5;
    w[n - 1] *= 0.5;
    w
}

/// Modified Laplace transform with kernel `e^{−x s(m)}`.
///
/// `f` lives on an `m`-grid inside `(−∞, c₋]` for the forward direction
/// and on an `x`-grid inside `[0, ∞)` for the adjoint; the output grid is
/// `out = (start, end, points)`. Both directions use trapezoid weights on
/// their input grid, so on matching grids the discrete operators are exact
/// weighted adjoints of each other.
pub fn modified_laplace(
    f: &GridFunction,
    direction: LaplaceDirection,
    params: &PdeParams,
    lambda: f64,
    out: (f64, f64, usize),
) -> Result<GridFunction> {
    let (cm, _) = c_pm(params, lambda)?;
    let (o_start, o_end, o_n) = out;
    if o_n < 2 || !(o_end > o_start) {
        return Err(Error::InvalidGrid("output grid needs two or more increasing points".into()));
    }
    let (m_check, x_check) = match direction {
        LaplaceDirection::Forward => ((f.start, f.end), (o_start, o_end)),
        LaplaceDirection::Adjoint => ((o_start, o_end), (f.start, f.end)),
    };
    let slack = 1e-12 * (1.0 + cm.abs());
    if m_check.1 > cm + slack || x_check.0 < 0.0 {
        return Err(Error::InvalidGrid(format!(
            "m-grid must end at or before c- = {cm} and x-grid must start at or after 0"
        )));
    }
    let s_at = |m: f64| s_of(Complex64::new(m.min(cm), 0.0), params).re.max(0.0);
    let w = trapezoid_weights(f.len(), f.spacing());
    let h_out = (o_end - o_start) / (o_n - 1) as f64;
    let values: Vec<Complex64> = (0..o_n)
        .into_par_iter()
        .map(|i| {
            let o = o_start + i as f64 * h_out;
            f.values
                .iter()
                .enumerate()
                .map(|(j, v)| {
                    let src = f.coord(j);
                    let (x, m) = match direction {
                        LaplaceDirection::Forward => (o, src),
                        LaplaceDirection::Adjoint => (src, o),
                    };
                    v * ((-x * s_at(m)).exp() * w[j])
                })
                .sum()
        })
        .collect();
    let kind = match direction {
        LaplaceDirection::Forward => GridKind::Spatial,
        LaplaceDirection::Adjoint => GridKind::Spectral,
    };
    GridFunction::new(o_start, o_end, values, kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::smooth_cutoff;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn bump(center: f64, width: f64, t_prime: f64, n: usize) -> GridFunction {
        GridFunction::from_fn(0.0, t_prime, n, GridKind::Temporal, |t| {
            let s = (t - center) / width;
            c((-s * s).exp(), 0.0)
        })
        .unwrap()
    }

    fn config(t: f64, t_prime: f64, nt: usize) -> SolverConfig {
        SolverConfig { t_final: t, t_prime, nt, nx: 401, l: 20.0, ..SolverConfig::default() }
    }

    #[test]
    fn assemble_g0_cancels_and_checks_grids() {
        let g = GridFunction::from_fn(0.0, 1.0, 11, GridKind::Temporal, |t| c(t, 1.0)).unwrap();
        let y = g.map(|v| v * 0.25);
        let z = g.map(|v| v * 0.75);
        let g0 = assemble_g0(&g, &y, &z, 2.0).unwrap();
        assert_eq!(g0.len(), 21);
        assert!(g0.max_abs() < 1e-15);
        let bad = GridFunction::from_fn(0.0, 1.0, 12, GridKind::Temporal, |_| c(0.0, 0.0)).unwrap();
        assert!(matches!(assemble_g0(&g, &bad, &z, 2.0), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn zero_boundary_data_gives_zero_field() {
        let params = PdeParams::linear(0.0, 1.0, -1.0).unwrap();
        let g0 = GridFunction::zeros(0.0, 2.0, 201, GridKind::Temporal).unwrap();
        let rc = reduced_contour(&g0, &config(1.0, 2.0, 101), &params).unwrap();
        let xs: Vec<f64> = (0..11).map(|i| i as f64).collect();
        let ts: Vec<f64> = (0..11).map(|i| i as f64 * 0.1).collect();
        let q = solve_reduced(&g0, &rc.spec, &xs, &ts, &params).unwrap();
        assert_eq!(q.max_abs(), 0.0);
    }

    fn recovery_errors(params: &PdeParams, density: f64) -> (f64, f64) {
        let g0 = bump(0.5, 0.08, 2.0, 2001);
        let mut cfg = config(1.0, 2.0, 1001);
        cfg.contour_density = density;
        let rc = reduced_contour(&g0, &cfg, params).unwrap();
        let xs: Vec<f64> = (0..201).map(|i| i as f64 * 0.05).collect();
        let ts: Vec<f64> = (0..201).map(|i| i as f64 * 0.005).collect();
        let q = solve_reduced(&g0, &rc.spec, &xs, &ts, params).unwrap();
        let bc = (0..q.nt).map(|n| (q.at(0, n) - g0.interpolate(q.t(n))).norm()).fold(0.0, f64::max);
        let ic = q.slice(0).iter().map(|v| v.norm()).fold(0.0, f64::max);
        (bc, ic)
    }

    #[test]
    fn reduced_solution_recovers_boundary_and_initial_data() {
        for params in [
            PdeParams::linear(0.0, 1.0, -1.0).unwrap(),
            PdeParams::linear(1.0, 1.0, 0.0).unwrap(),
            PdeParams::linear(0.0, 1.0, 0.0).unwrap(),
        ] {
            let (bc, ic) = recovery_errors(&params, 2.0);
            assert!(bc < 1e-4 && ic < 1e-4, "{params:?}: bc {bc:e}, ic {ic:e}");
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let params = PdeParams::linear(0.5, 1.0, -0.5).unwrap();
        let g0 = bump(0.4, 0.1, 2.0, 1001);
        let rc = reduced_contour(&g0, &config(1.0, 2.0, 501), &params).unwrap();
        let h = 1e-3;
        let xs: Vec<f64> = (0..5).map(|i| 1.0 + (i as f64 - 2.0) * h).collect();
        let ts = vec![0.6, 0.7, 0.8];
        let rep = ReducedRepresentation::new(&g0, &rc.spec, &params);
        let q = rep.evaluate(0, &xs, &ts).unwrap();
        let q1 = rep.evaluate(1, &xs, &ts).unwrap();
        let q2 = rep.evaluate(2, &xs, &ts).unwrap();
        let direct = solve_reduced(&g0, &rc.spec, &xs, &ts, &params).unwrap();
        assert_eq!(direct.values, q.values);
        for n in 0..3 {
            let d1 = (q.at(3, n) - q.at(1, n)) / (2.0 * h);
            let d2 = (q.at(3, n) - 2.0 * q.at(2, n) + q.at(1, n)) / (h * h);
            let scale = q1.at(2, n).norm().max(q2.at(2, n).norm()).max(1e-3);
            assert!((d1 - q1.at(2, n)).norm() < 1e-5 * scale, "{d1} vs {}", q1.at(2, n));
            assert!((d2 - q2.at(2, n)).norm() < 1e-4 * scale, "{d2} vs {}", q2.at(2, n));
        }
    }

    #[test]
    fn user_truncation_too_small_is_rejected() {
        let params = PdeParams::linear(0.0, 1.0, -1.0).unwrap();
        let g0 = bump(0.5, 0.05, 2.0, 2001);
        let mut cfg = config(1.0, 2.0, 1001);
        cfg.truncation_m = 1.5;
        assert!(matches!(
            reduced_contour(&g0, &cfg, &params),
            Err(Error::TruncationInsufficient { .. })
        ));
    }

    #[test]
    fn nyquist_cap_applies_to_rough_data() {
        let params = PdeParams::linear(0.0, 1.0, -1.0).unwrap();
        // a kink at t = 0.3 keeps the spectrum from decaying
        let g0 = GridFunction::from_fn(0.0, 2.0, 201, GridKind::Temporal, |t| {
            c((0.3 - (t - 0.3).abs()).max(0.0), 0.0)
        })
        .unwrap();
        let rc = reduced_contour(&g0, &config(1.0, 2.0, 101), &params).unwrap();
        assert!(rc.nyquist_limited);
        let top = omega(gamma_path(3, rc.truncation.1, &params, rc.spec.lambda).unwrap().0, &params);
        assert!((top.im.abs() - rc.nyquist).abs() < 1e-6 * rc.nyquist);
    }

    #[test]
    fn boundary_derivative_stencils_are_third_order() {
        let field = |h: f64| {
            let mut f = SpaceTimeField::zeros(0.0, 10.0 * h, 11, 0.0, 1.0, 2).unwrap();
            for n in 0..2 {
                for i in 0..11 {
                    *f.at_mut(i, n) = c((f.x(i) + 0.3).sin(), 0.0);
                }
            }
            f
        };
        let err = |h: f64| {
            let (d1, d2) = boundary_derivatives(&field(h)).unwrap();
            ((d1.values[0].re - 0.3f64.cos()).abs(), (d2.values[0].re + 0.3f64.sin()).abs())
        };
        let (a1, a2) = err(0.02);
        let (b1, b2) = err(0.01);
        assert!((a1 / b1).log2() > 2.7, "{}", (a1 / b1).log2());
        assert!((a2 / b2).log2() > 2.7, "{}", (a2 / b2).log2());
    }

    #[test]
    fn global_relation_rejects_upper_half_plane() {
        let params = PdeParams::linear(0.0, 1.0, -1.0).unwrap();
        let q = SpaceTimeField::zeros(0.0, 1.0, 11, 0.0, 1.0, 11).unwrap();
        let g0 = GridFunction::zeros(0.0, 1.0, 11, GridKind::Temporal).unwrap();
        assert!(matches!(
            global_relation_residual(&q, &g0, c(0.0, 0.1), 0.5, &params),
            Err(Error::UpperHalfPlane(_))
        ));
        assert_eq!(global_relation_residual(&q, &g0, c(1.0, -0.5), 0.5, &params).unwrap(), ZERO);
    }

    #[test]
    fn reconstruction_of_zero_solution_is_zero_and_bottom_is_not_degenerate() {
        let params = PdeParams::linear(0.0, 1.0, 0.0).unwrap();
        let cls = classify(&params);
        let lambda = select_lambda(&cls, &params, 1.5).unwrap();
        let bottom = c(params.shift(), lambda);
        let (g1, g2) = reconstruct_boundary_transforms(ZERO, ZERO, ZERO, bottom, 0.5, &cls, &params).unwrap();
        assert_eq!((g1, g2), (ZERO, ZERO));
    }

    #[test]
    fn suplem_ratio_plateaus() {
        let params = PdeParams::linear(0.5, 1.0, -0.3).unwrap();
        let cls = classify(&params);
        let lambda = select_lambda(&cls, &params, 1.5).unwrap();
        for j in 0..3 {
            let grid = |top: f64| -> Vec<f64> { (0..=4000).map(|i| lambda + (top - lambda) * i as f64 / 4000.0).collect() };
            let r1 = suplem_ratio(j, &grid(50.0), &params, lambda).unwrap();
            let r2 = suplem_ratio(j, &grid(100.0), &params, lambda).unwrap();
            assert!(r1 > 0.0 && (r2 / r1 - 1.0).abs() < 0.05, "j = {j}: {r1} {r2}");
        }
    }

    #[test]
    fn kernel_scaling_and_symmetry() {
        let params = PdeParams::linear(0.0, 1.0, 0.0).unwrap();
        let lambda = select_lambda(&classify(&params), &params, 1.5).unwrap();
        // α = δ = 0, λ → c₋ = a: x = y, z = 0 gives ∫_{−∞}^{c₋} e^{−8itm³}dm
        let k1 = oscillatory_kernel_k(0.0, 0.0, 0.0, 1.0, &params, 0.0 * lambda).unwrap();
        let k8 = oscillatory_kernel_k(0.0, 0.0, 0.0, 8.0, &params, 0.0 * lambda).unwrap();
        assert!((k8 * 2.0 - k1).norm() < 1e-9 * k1.norm(), "{k1} {k8}");
        // closed form ∫₀^∞ e^{8itm³}dm = Γ(4/3) e^{iπ/6} / 2
        let expected = Complex64::from_polar(0.892_979_511_569_249_2 / 2.0, PI / 6.0);
        assert!((k1 - expected).norm() < 1e-9, "{k1} vs {expected}");
        let kp = oscillatory_kernel_k(0.3, 1.1, 0.2, 0.7, &params, lambda).unwrap();
        let km = oscillatory_kernel_k(1.1, 0.3, 0.2, -0.7, &params, lambda).unwrap();
        assert!((kp - km.conj()).norm() < 1e-9 * kp.norm());
        assert!(matches!(oscillatory_kernel_k(0.0, 0.0, 0.0, 0.0, &params, lambda), Err(Error::TimeZero)));
        let damped = oscillatory_kernel_k(0.0, 0.0, 60.0, 1.0, &params, lambda).unwrap();
        assert!(damped.norm() < 1e-20);
    }

    #[test]
    fn modified_laplace_adjoint_identity() {
        let params = PdeParams::linear(0.5, 1.0, 0.5).unwrap();
        let lambda = select_lambda(&classify(&params), &params, 1.5).unwrap();
        let (cm, _) = c_pm(&params, lambda).unwrap();
        let f = GridFunction::from_fn(cm - 6.0, cm, 301, GridKind::Spectral, |m| c((m - cm).cos(), 0.3 * m)).unwrap();
        let g = GridFunction::from_fn(0.0, 8.0, 257, GridKind::Spatial, |x| c((-x).exp(), x.sin())).unwrap();
        let ff = modified_laplace(&f, LaplaceDirection::Forward, &params, lambda, (0.0, 8.0, 257)).unwrap();
        let ag = modified_laplace(&g, LaplaceDirection::Adjoint, &params, lambda, (cm - 6.0, cm, 301)).unwrap();
        let wx = trapezoid_weights(257, g.spacing());
        let wm = trapezoid_weights(301, f.spacing());
        let lhs: Complex64 = ff.values.iter().zip(&g.values).zip(&wx).map(|((a, b), w)| a * b.conj() * w).sum();
        let rhs: Complex64 = f.values.iter().zip(&ag.values).zip(&wm).map(|((a, b), w)| a * b.conj() * w).sum();
        assert!((lhs - rhs).norm() < 1e-12 * lhs.norm());
        let zero = GridFunction::zeros(cm - 1.0, cm, 11, GridKind::Spectral).unwrap();
        let out = modified_laplace(&zero, LaplaceDirection::Forward, &params, lambda, (0.0, 1.0, 5)).unwrap();
        assert_eq!(out.max_abs(), 0.0);
    }

    #[test]
    fn cutoff_is_used_by_assembly() {
        // the extension ramps to zero well before T'
        let g = GridFunction::from_fn(0.0, 1.0, 11, GridKind::Temporal, |_| c(1.0, 0.0)).unwrap();
        let zero = g.map(|_| ZERO);
        let g0 = assemble_g0(&g, &zero, &zero, 2.0).unwrap();
        assert_eq!(g0.values[15], c(smooth_cutoff(0.5 / 0.75), 0.0));
        assert_eq!(*g0.values.last().unwrap(), ZERO);
    }
}
