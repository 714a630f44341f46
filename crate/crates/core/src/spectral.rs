//! Dispersion relation of the linear operator and its symmetry structure.
//!
//! For `i u_t + i β u_xxx + α u_xx + i δ u_x = f(u)` the plane wave
//! `exp(ikx − ω(k)t)` solves the linear part with
//! `ω(k) = −iβk³ + iαk² + iδk`. The two nontrivial solutions `ν±(k)` of
//! `ω(ν) = ω(k)` involve a square root whose branch cuts depend on the sign
//! of the discriminant `α² + 3βδ`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default distance below which a point counts as lying on a branch cut.
pub const DEFAULT_EPS_CUT: f64 = 1e-10;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Coefficients of `i u_t + i β u_xxx + α u_xx + i δ u_x = κ |u|^p u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdeParams {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub kappa: Complex64,
    pub p: f64,
}

impl PdeParams {
    pub fn new(alpha: f64, beta: f64, delta: f64, kappa: Complex64, p: f64) -> Result<Self> {
        let params = Self { alpha, beta, delta, kappa, p };
        params.validate()?;
        Ok(params)
    }

    /// Linear equation (`κ = 0`) with a nominal power `p = 2`.
    pub fn linear(alpha: f64, beta: f64, delta: f64) -> Result<Self> {
        Self::new(alpha, beta, delta, Complex64::new(0.0, 0.0), 2.0)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.alpha, self.beta, self.delta, self.kappa.re, self.kappa.im, self.p]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParams("all coefficients must be finite".into()));
        }
        if self.beta <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "beta = {} must be positive: the half-line problem is posed with a single \
                 boundary condition at x = 0, which requires beta > 0",
                self.beta
            )));
        }
        if self.p <= 0.0 {
            return Err(Error::InvalidParams(format!("power p = {} must be positive", self.p)));
        }
        Ok(())
    }

    pub fn with_kappa(mut self, kappa: Complex64) -> Self {
        self.kappa = kappa;
        self
    }

    /// `α² + 3βδ`.
    pub fn discriminant(&self) -> f64 {
        self.alpha * self.alpha + 3.0 * self.beta * self.delta
    }

    /// Real part of the branch-point pair, `α / (3β)`.
    pub fn shift(&self) -> f64 {
        self.alpha / (3.0 * self.beta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiscCase {
    PositiveDisc,
    ZeroDisc,
    NegativeDisc,
}

/// Branch cut of the square root in `ν±`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BranchCut {
    /// `(−∞, left_end] ∪ [right_start, ∞)` on the real axis.
    TwoRays { left_end: f64, right_start: f64 },
    /// Entire symmetries, nothing to avoid.
    None,
    /// Vertical segment `re + i[im_low, im_high]`.
    VerticalSegment { re: f64, im_low: f64, im_high: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralClassification {
    pub discriminant: f64,
    pub case: DiscCase,
    /// `(b−, b+)`; absent when the discriminant vanishes.
    pub branch_points: Option<(Complex64, Complex64)>,
    pub cut: BranchCut,
    pub eps_cut: f64,
}

impl SpectralClassification {
    pub fn with_eps_cut(mut self, eps_cut: f64) -> Self {
        self.eps_cut = eps_cut;
        self
    }

    /// Euclidean distance from `k` to the cut (infinite when there is none).
    pub fn distance_to_cut(&self, k: Complex64) -> f64 {
        match self.cut {
            BranchCut::None => f64::INFINITY,
            BranchCut::TwoRays { left_end, right_start } => {
                if k.re <= left_end || k.re >= right_start {
                    k.im.abs()
                } else {
                    let dl = Complex64::new(k.re - left_end, k.im).norm();
                    let dr = Complex64::new(k.re - right_start, k.im).norm();
                    dl.min(dr)
                }
            }
            BranchCut::VerticalSegment { re, im_low, im_high } => {
                let im = k.im.clamp(im_low, im_high);
                Complex64::new(k.re - re, k.im - im).norm()
            }
        }
    }
}

/// Classify the dispersion relation by the sign of `α² + 3βδ`.
pub fn classify(params: &PdeParams) -> SpectralClassification {
    let disc = params.discriminant();
    let scale = params.alpha * params.alpha + 3.0 * params.beta * params.delta.abs();
    let three_beta = 3.0 * params.beta;
    if disc.abs() <= 1e-14 * scale.max(f64::MIN_POSITIVE) || disc == 0.0 {
        return SpectralClassification {
            discriminant: disc,
            case: DiscCase::ZeroDisc,
            branch_points: None,
            cut: BranchCut::None,
            eps_cut: DEFAULT_EPS_CUT,
        };
    }
    if disc > 0.0 {
        let root = disc.sqrt();
        let bm = (params.alpha - 2.0 * root) / three_beta;
        let bp = (params.alpha + 2.0 * root) / three_beta;
        SpectralClassification {
            discriminant: disc,
            case: DiscCase::PositiveDisc,
            branch_points: Some((Complex64::new(bm, 0.0), Complex64::new(bp, 0.0))),
            cut: BranchCut::TwoRays { left_end: bm, right_start: bp },
            eps_cut: DEFAULT_EPS_CUT,
        }
    } else {
        let re = params.shift();
        let h = 2.0 * (-disc).sqrt() / three_beta;
        SpectralClassification {
            discriminant: disc,
            case: DiscCase::NegativeDisc,
            branch_points: Some((Complex64::new(re, -h), Complex64::new(re, h))),
            cut: BranchCut::VerticalSegment { re, im_low: -h, im_high: h },
            eps_cut: DEFAULT_EPS_CUT,
        }
    }
}

/// `ω(k) = −iβk³ + iαk² + iδk`.
#[inline]
pub fn omega(k: Complex64, params: &PdeParams) -> Complex64 {
    I * k * ((-params.beta * k + params.alpha) * k + params.delta)
}

/// `ω′(k) = −3iβk² + 2iαk + iδ`.
#[inline]
pub fn omega_prime(k: Complex64, params: &PdeParams) -> Complex64 {
    I * ((-3.0 * params.beta * k + 2.0 * params.alpha) * k + params.delta)
}

/// The single-valued square root of `(k − α/(3β))² − 4(α²+3βδ)/(9β²)`,
/// built from the angle conventions attached to each branch point.
pub fn sqrt_branch(k: Complex64, cls: &SpectralClassification) -> Result<Complex64> {
    let (bm, bp) = match cls.branch_points {
        Some(pair) => pair,
        None => {
            return Err(Error::InvalidParams(
                "sqrt_branch is undefined for a vanishing discriminant".into(),
            ))
        }
    };
    let dist = cls.distance_to_cut(k);
    if cls.eps_cut > 0.0 && dist <= cls.eps_cut {
        return Err(Error::OnBranchCut { k, eps: cls.eps_cut });
    }
    let zp = k - bp;
    let zm = k - bm;
    let modulus = (zp.norm() * zm.norm()).sqrt();
    let phase = match cls.case {
        DiscCase::PositiveDisc => {
            // θ− ∈ (−π, π], θ+ ∈ [0, 2π)
            let theta_m = zm.arg();
            let mut theta_p = zp.arg();
            if theta_p < 0.0 {
                theta_p += TAU;
            }
            0.5 * (theta_p + theta_m)
        }
        DiscCase::NegativeDisc => {
            // k − b± = |k − b±| e^{i(θ± − π/2)}, θ± ∈ [0, 2π)
            let wrap = |z: Complex64| {
                let mut th = z.arg() + FRAC_PI_2;
                if th < 0.0 {
                    th += TAU;
                }
                if th >= TAU {
                    th -= TAU;
                }
                th
            };
            0.5 * (wrap(zp) + wrap(zm) - PI)
        }
        DiscCase::ZeroDisc => unreachable!("branch points are absent for a zero discriminant"),
    };
    Ok(Complex64::from_polar(modulus, phase))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Nontrivial roots `ν±(k)` of `ω(ν) = ω(k)`.
pub fn nu_pm(
    k: Complex64,
    cls: &SpectralClassification,
    params: &PdeParams,
    sign: Sign,
) -> Result<Complex64> {
    let half_sqrt3_i = I * (3.0f64.sqrt() / 2.0);
    let base = -0.5 * (k - params.alpha / params.beta);
    let root = match cls.case {
        DiscCase::ZeroDisc => k - params.shift(),
        _ => sqrt_branch(k, cls)?,
    };
    Ok(base + sign.value() * half_sqrt3_i * root)
}

/// Both symmetry roots `(ν+, ν−)`.
pub fn nu_pair(
    k: Complex64,
    cls: &SpectralClassification,
    params: &PdeParams,
) -> Result<(Complex64, Complex64)> {
    Ok((nu_pm(k, cls, params, Sign::Plus)?, nu_pm(k, cls, params, Sign::Minus)?))
}

/// Left-hand side of the region inequality; negative inside `Re ω < 0`.
pub fn region_function(k: Complex64, params: &PdeParams) -> f64 {
    let d = k.re - params.shift();
    3.0 * d * d - k.im * k.im - params.discriminant() / (3.0 * params.beta * params.beta)
}

/// Membership in `D⁺ = {Im k > 0, Re ω(k) < 0}`.
pub fn in_d_plus(k: Complex64, params: &PdeParams) -> bool {
    k.im > 0.0 && region_function(k, params) < 0.0
}

/// Membership in the closure of `D⁺`, with absolute slack `tol`.
pub fn in_d_plus_closure(k: Complex64, params: &PdeParams, tol: f64) -> bool {
    k.im >= -tol && region_function(k, params) <= tol
}
