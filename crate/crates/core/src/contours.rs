//! Integration contours `∂D⁺` (and the deformed `∂D̃⁺`) in the two
//! parametrizations used by the reduced boundary-value solver, discretized
//! by composite Gauss–Legendre panels.
//!
//! The contour is `Γ = (−γ₁) ∪ γ₂ ∪ γ₃`: down the left branch of the
//! hyperbola `Re ω = 0`, across the horizontal segment at height `λ`, and up
//! the right branch. For a nonpositive discriminant `λ` lifts the segment
//! above the branch cut (or above `α/(3β)`), which realizes the deformation
//! to `∂D̃⁺`.

use std::f64::consts::TAU;
use std::io::{BufWriter, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::gauss_legendre;
use crate::spectral::{omega, omega_prime, DiscCase, PdeParams, SpectralClassification};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Default `λ₀` for a vanishing discriminant (any positive value works).
pub const DEFAULT_LAMBDA0: f64 = 1.0;

/// Pick the height `λ` of the horizontal segment.
pub fn select_lambda(cls: &SpectralClassification, params: &PdeParams, margin: f64) -> Result<f64> {
    if !(margin > 1.0) {
        return Err(Error::InvalidParams(format!("lambda margin {margin} must exceed 1")));
    }
    Ok(match cls.case {
        DiscCase::PositiveDisc => 0.0,
        DiscCase::ZeroDisc => margin * DEFAULT_LAMBDA0,
        DiscCase::NegativeDisc => margin * 2.0 * (-cls.discriminant).sqrt() / (3.0 * params.beta),
    })
}

/// `c± = (α ± √(3β²λ² + α² + 3βδ)) / (3β)`, returned as `(c−, c+)`.
pub fn c_pm(params: &PdeParams, lambda: f64) -> Result<(f64, f64)> {
    let rad = 3.0 * params.beta * params.beta * lambda * lambda + params.discriminant();
    if rad < 0.0 {
        return Err(Error::NegativeRadicand(rad));
    }
    let root = rad.sqrt();
    let tb = 3.0 * params.beta;
    Ok(((params.alpha - root) / tb, (params.alpha + root) / tb))
}

/// `(γⱼ(m), γⱼ′(m))`, parametrized by the imaginary part on the branches.
pub fn gamma_path(j: u8, m: f64, params: &PdeParams, lambda: f64) -> Result<(Complex64, Complex64)> {
    let tb = 3.0 * params.beta;
    match j {
        1 | 3 => {
            if m < lambda {
                return Err(Error::OutOfInterval { m, lo: lambda, hi: f64::INFINITY });
            }
            let rad = 3.0 * params.beta * params.beta * m * m + params.discriminant();
            if rad < 0.0 {
                return Err(Error::NegativeRadicand(rad));
            }
            let root = rad.sqrt();
            let sign = if j == 1 { -1.0 } else { 1.0 };
            let k = Complex64::new((params.alpha + sign * root) / tb, m);
            let dre = if root > 0.0 { sign * params.beta * m / root } else { 0.0 };
            Ok((k, Complex64::new(dre, 1.0)))
        }
        2 => {
            let (cm, cp) = c_pm(params, lambda)?;
            if m < cm - 1e-12 || m > cp + 1e-12 {
                return Err(Error::OutOfInterval { m, lo: cm, hi: cp });
            }
            Ok((Complex64::new(m, lambda), Complex64::new(1.0, 0.0)))
        }
        _ => Err(Error::InvalidParams(format!("contour piece index {j} not in 1..=3"))),
    }
}

/// Height `√(3(m − α/(3β))² − (α²+3βδ)/(3β²))` of `∂D⁺` above `Re k = m`.
pub fn branch_height(m: f64, params: &PdeParams) -> f64 {
    let d = m - params.shift();
    (3.0 * d * d - params.discriminant() / (3.0 * params.beta * params.beta)).max(0.0).sqrt()
}

/// `(Γⱼ(m), Γⱼ′(m))`, parametrized by the real part on the branches.
pub fn big_gamma_path(j: u8, m: f64, params: &PdeParams, lambda: f64) -> Result<(Complex64, Complex64)> {
    let (cm, cp) = c_pm(params, lambda)?;
    match j {
        1 | 3 => {
            let inside = if j == 1 { m <= cm + 1e-12 } else { m >= cp - 1e-12 };
            if !inside {
                let (lo, hi) = if j == 1 { (f64::NEG_INFINITY, cm) } else { (cp, f64::INFINITY) };
                return Err(Error::OutOfInterval { m, lo, hi });
            }
            let s = branch_height(m, params);
            let ds = if s > 0.0 { 3.0 * (m - params.shift()) / s } else { f64::INFINITY };
            Ok((Complex64::new(m, s), Complex64::new(1.0, ds)))
        }
        2 => {
            if m < cm - 1e-12 || m > cp + 1e-12 {
                return Err(Error::OutOfInterval { m, lo: cm, hi: cp });
            }
            Ok((Complex64::new(m, lambda), Complex64::new(1.0, 0.0)))
        }
        _ => Err(Error::InvalidParams(format!("contour piece index {j} not in 1..=3"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parametrization {
    /// Branches parametrized by `Im k ∈ [λ, M]`.
    Gamma,
    /// Branches parametrized by `Re k`, truncated at `|Re k − α/(3β)| ≤ M`.
    BigGamma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SegmentKind {
    GammaLeft,
    GammaBottom,
    GammaRight,
    BigGammaLeft,
    BigGammaBottom,
    BigGammaRight,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSegment {
    pub kind: SegmentKind,
    /// Parameter interval `[m_a, m_b]` of the closed-form map.
    pub interval: (f64, f64),
    /// `+1` when traversal follows increasing `m`, `−1` otherwise.
    pub orientation: f64,
}

impl PathSegment {
    pub fn eval(&self, m: f64, params: &PdeParams, lambda: f64) -> Result<(Complex64, Complex64)> {
        match self.kind {
            SegmentKind::GammaLeft => gamma_path(1, m, params, lambda),
            SegmentKind::GammaBottom => gamma_path(2, m, params, lambda),
            SegmentKind::GammaRight => gamma_path(3, m, params, lambda),
            SegmentKind::BigGammaLeft => big_gamma_path(1, m, params, lambda),
            SegmentKind::BigGammaBottom => big_gamma_path(2, m, params, lambda),
            SegmentKind::BigGammaRight => big_gamma_path(3, m, params, lambda),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourNode {
    pub m: f64,
    pub k: Complex64,
    /// Oriented `dk/du` at the node, `u` being the panel variable.
    pub dk: Complex64,
    pub weight: f64,
    pub segment: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourOptions {
    /// Panels per `2π` of local phase.
    pub density: f64,
    pub gl_order: usize,
    /// Time scale of the oscillation `e^{±ω(k)t}` carried by the integrand.
    pub t_osc: f64,
    /// Largest `x` at which `e^{ikx}` will be evaluated.
    pub x_max: f64,
    /// Smallest positive `x` of interest; `0` disables the decay check.
    pub x_min: f64,
    pub tail_tol: f64,
    pub parametrization: Parametrization,
}

impl Default for ContourOptions {
    fn default() -> Self {
        Self {
            density: 1.0,
            gl_order: 8,
            t_osc: 2.0,
            x_max: 0.0,
            x_min: 0.0,
            tail_tol: 1e-10,
            parametrization: Parametrization::Gamma,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    pub lambda: f64,
    pub c_minus: f64,
    pub c_plus: f64,
    pub truncation_m: f64,
    pub parametrization: Parametrization,
    pub segments: Vec<PathSegment>,
    pub nodes: Vec<ContourNode>,
    /// Smallest distance from the nodes to the cut and to `α/(3β)` when the
    /// contour had to be lifted (`∞` for a positive discriminant).
    pub clearance: f64,
    pub panels: usize,
}

impl ContourSpec {
    /// `Σ f(k) dk w` over the nodes, in node order.
    pub fn integrate(&self, mut f: impl FnMut(Complex64) -> Complex64) -> Complex64 {
        self.nodes.iter().map(|n| f(n.k) * n.dk * n.weight).sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// CSV rows `m, Re k, Im k, Re ω(k), Im ω(k)` in traversal order.
    pub fn write_csv<W: Write>(&self, out: W, params: &PdeParams) -> Result<()> {
        let mut w = BufWriter::new(out);
        writeln!(w, "m,re_k,im_k,re_omega,im_omega")?;
        for n in &self.nodes {
            let om = omega(n.k, params);
            writeln!(w, "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}", n.m, n.k.re, n.k.im, om.re, om.im)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Smooth substitute variable for a branch segment: `m = m₀ ± u²` near the
/// endpoint where `Γ′` blows up when `λ = 0`.
#[derive(Clone, Copy)]
struct PanelMap {
    segment: PathSegment,
    /// Panel variable range.
    u_range: (f64, f64),
    squared_from: Option<(f64, f64)>,
}

impl PanelMap {
    fn m_of(&self, u: f64) -> (f64, f64) {
        match self.squared_from {
            Some((m0, dir)) => (m0 + dir * u * u, dir * 2.0 * u),
            None => (u, 1.0),
        }
    }

    fn eval(&self, u: f64, params: &PdeParams, lambda: f64) -> Result<(f64, Complex64, Complex64)> {
        let (m, dm) = self.m_of(u);
        let (k, dk) = self.segment.eval(m, params, lambda)?;
        let dk = if dm == 0.0 {
            // u = 0 at a square-root endpoint: dk/du = lim (1 + i s′) 2u
            let s_coeff = (2.0 * (m - params.shift()).abs() * 3.0).sqrt();
            I * s_coeff.max(0.0) * if self.segment.kind == SegmentKind::BigGammaLeft { -1.0 } else { 1.0 }
        } else {
            dk * dm
        };
        Ok((m, k, dk))
    }
}

fn local_rate(k: Complex64, dk: Complex64, params: &PdeParams, opts: &ContourOptions) -> f64 {
    // e^{ikx} is negligible once Im k · x exceeds ~36
    let x_eff = if k.im > 0.0 { opts.x_max.min(36.0 / k.im) } else { opts.x_max };
    (omega_prime(k, params) * dk).norm() * opts.t_osc + dk.norm() * x_eff + 1.0
}

/// Panel breakpoints on `[a, b]` keeping the phase per panel near `2π/density`.
fn breakpoints(a: f64, b: f64, rate: impl Fn(f64) -> f64, density: f64) -> Vec<f64> {
    let mut pts = vec![a];
    let mut u = a;
    let target = TAU / density;
    while u < b {
        let mut len = target / rate(u);
        let probe = (u + len).min(b);
        len = len.min(target / rate(probe));
        let mut next = u + len;
        if next >= b || b - next < 0.3 * len {
            next = b;
        }
        pts.push(next);
        u = next;
    }
    pts
}

fn uniform_breakpoints(a: f64, b: f64, rate: impl Fn(f64) -> f64, density: f64) -> Vec<f64> {
    let samples = 64;
    let max_rate = (0..=samples)
        .map(|j| rate(a + (b - a) * j as f64 / samples as f64))
        .fold(0.0, f64::max);
    let panels = (((b - a) * max_rate * density / TAU).ceil() as usize).max(1);
    (0..=panels).map(|j| a + (b - a) * j as f64 / panels as f64).collect()
}

/// Discretize the contour with composite Gauss–Legendre panels.
pub fn build_contour(
    cls: &SpectralClassification,
    params: &PdeParams,
    lambda: f64,
    truncation_m: f64,
    opts: &ContourOptions,
) -> Result<ContourSpec> {
    build_contour_asymmetric(cls, params, lambda, (truncation_m, truncation_m), opts)
}

/// As [`build_contour`], with separate truncations `(M_left, M_right)` for
/// the two branches.
pub fn build_contour_asymmetric(
    cls: &SpectralClassification,
    params: &PdeParams,
    lambda: f64,
    truncation: (f64, f64),
    opts: &ContourOptions,
) -> Result<ContourSpec> {
    let (m_left, m_right) = truncation;
    let truncation_m = m_left.max(m_right);
    if !(opts.density > 0.0) || opts.gl_order == 0 {
        return Err(Error::InvalidParams("contour density and order must be positive".into()));
    }
    let (cm, cp) = c_pm(params, lambda)?;
    let a = params.shift();
    let (left, bottom, right) = match opts.parametrization {
        Parametrization::Gamma => {
            if m_left.min(m_right) <= lambda {
                return Err(Error::InvalidParams(format!(
                    "truncation M = ({m_left}, {m_right}) must exceed lambda = {lambda}"
                )));
            }
            let left = PanelMap {
                segment: PathSegment { kind: SegmentKind::GammaLeft, interval: (lambda, m_left), orientation: -1.0 },
                u_range: (lambda, m_left),
                squared_from: None,
            };
            let right = PanelMap {
                segment: PathSegment { kind: SegmentKind::GammaRight, interval: (lambda, m_right), orientation: 1.0 },
                u_range: (lambda, m_right),
                squared_from: None,
            };
            let bottom = PanelMap {
                segment: PathSegment { kind: SegmentKind::GammaBottom, interval: (cm, cp), orientation: 1.0 },
                u_range: (cm, cp),
                squared_from: None,
            };
            (left, bottom, right)
        }
        Parametrization::BigGamma => {
            if a - m_left >= cm || a + m_right <= cp {
                return Err(Error::InvalidParams(format!(
                    "truncation M = ({m_left}, {m_right}) must reach beyond c- = {cm} and c+ = {cp}"
                )));
            }
            let umax_l = (cm - (a - m_left)).sqrt();
            let umax_r = ((a + m_right) - cp).sqrt();
            let left = PanelMap {
                segment: PathSegment {
                    kind: SegmentKind::BigGammaLeft,
                    interval: (a - m_left, cm),
                    orientation: 1.0,
                },
                u_range: (0.0, umax_l),
                squared_from: Some((cm, -1.0)),
            };
            let right = PanelMap {
                segment: PathSegment {
                    kind: SegmentKind::BigGammaRight,
                    interval: (cp, a + m_right),
                    orientation: 1.0,
                },
                u_range: (0.0, umax_r),
                squared_from: Some((cp, 1.0)),
            };
            let bottom = PanelMap {
                segment: PathSegment { kind: SegmentKind::BigGammaBottom, interval: (cm, cp), orientation: 1.0 },
                u_range: (cm, cp),
                squared_from: None,
            };
            (left, bottom, right)
        }
    };

    let rate_of = |map: &PanelMap, u: f64| -> f64 {
        match map.eval(u, params, lambda) {
            Ok((_, k, dk)) => local_rate(k, dk, params, opts),
            Err(_) => 1.0,
        }
    };
    // shared breakpoints keep the two branches mirror images when α = 0
    let branch_rate = |u: f64| rate_of(&left, u).max(rate_of(&right, u));
    let (ua, ub) = left.u_range;
    let branch_pts = if ub - ua <= right.u_range.1 - right.u_range.0 {
        breakpoints(ua, right.u_range.1.max(ub), branch_rate, opts.density)
    } else {
        breakpoints(ua, ub, branch_rate, opts.density)
    };
    let clip = |pts: &[f64], hi: f64| -> Vec<f64> {
        let mut out: Vec<f64> = pts.iter().copied().filter(|&u| u < hi).collect();
        out.push(hi);
        out
    };
    let left_pts = clip(&branch_pts, left.u_range.1);
    let right_pts = clip(&branch_pts, right.u_range.1);
    let bottom_pts = if cp - cm > 0.0 {
        uniform_breakpoints(cm, cp, |u| rate_of(&bottom, u), opts.density)
    } else {
        Vec::new()
    };

    let rule = gauss_legendre(opts.gl_order);
    let mut nodes = Vec::new();
    let mut panels = 0;
    let mut emit = |map: &PanelMap, pts: &[f64], seg_idx: usize, traversal: f64| -> Result<()> {
        // node order follows traversal direction
        let mut panel_nodes = Vec::new();
        for w in pts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for &(x, wt) in &rule {
                let u = mid + half * x;
                let (m, k, dk) = map.eval(u, params, lambda)?;
                panel_nodes.push(ContourNode { m, k, dk: dk * traversal, weight: wt * half, segment: seg_idx });
            }
            panels += 1;
        }
        if traversal < 0.0 {
            panel_nodes.reverse();
        }
        nodes.extend(panel_nodes);
        Ok(())
    };

    emit(&left, &left_pts, 0, -1.0)?;
    if !bottom_pts.is_empty() {
        emit(&bottom, &bottom_pts, 1, 1.0)?;
    }
    emit(&right, &right_pts, 2, 1.0)?;
    let segments = vec![left.segment, bottom.segment, right.segment];

    let top_im = match opts.parametrization {
        Parametrization::Gamma => m_left.min(m_right),
        Parametrization::BigGamma => branch_height(a - m_left, params).min(branch_height(a + m_right, params)),
    };
    if opts.x_min > 0.0 {
        let tail = (-top_im * opts.x_min).exp();
        if tail > opts.tail_tol {
            return Err(Error::TruncationInsufficient { tail, tol: opts.tail_tol });
        }
    }

    let clearance = match cls.case {
        DiscCase::PositiveDisc => f64::INFINITY,
        DiscCase::ZeroDisc => nodes
            .iter()
            .map(|n| (n.k - Complex64::new(a, 0.0)).norm())
            .fold(f64::INFINITY, f64::min),
        DiscCase::NegativeDisc => nodes.iter().map(|n| cls.distance_to_cut(n.k)).fold(f64::INFINITY, f64::min),
    };

    Ok(ContourSpec {
        lambda,
        c_minus: cm,
        c_plus: cp,
        truncation_m,
        parametrization: opts.parametrization,
        segments,
        nodes,
        clearance,
        panels,
    })
}
