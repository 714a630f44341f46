//! Sobolev, Bessel-potential and mixed space-time norms, plus the exponent
//! arithmetic behind the well-posedness conditions.
//!
//! Half-line norms are surrogates: the norm of the fixed extension `E₀u`,
//! which bounds the infimum-over-extensions definition from above.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, SpaceTimeField};
use crate::quad::{gauss_legendre, trapezoid};
use crate::transforms::{extend_initial, ExtensionPolicy, PeriodicGrid};

const ADMISSIBILITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevSpec {
    pub s: f64,
    pub mu: Option<f64>,
    pub r: Option<f64>,
}

impl SobolevSpec {
    pub fn new(s: f64, mu: Option<f64>, r: Option<f64>) -> Result<Self> {
        if !s.is_finite() {
            return Err(Error::InvalidParams(format!("regularity exponent {s} is not finite")));
        }
        match (mu, r) {
            (None, None) => {}
            (Some(mu), Some(r)) => {
                if !(mu >= 2.0 && r >= 2.0) || !mu.is_finite() || !r.is_finite() {
                    return Err(Error::RangeViolation(format!("(mu, r) = ({mu}, {r}) must be finite and at least 2")));
                }
                let gap = 3.0 / mu + 1.0 / r - 0.5;
                if gap.abs() > ADMISSIBILITY_TOL {
                    return Err(Error::RangeViolation(format!("3/mu + 1/r - 1/2 = {gap:e}")));
                }
            }
            _ => return Err(Error::InvalidParams("mu and r must be given together".into())),
        }
        Ok(Self { s, mu, r })
    }

    pub fn sobolev(s: f64) -> Result<Self> {
        Self::new(s, None, None)
    }

    /// Temporal regularity `(s+1)/3` of boundary traces.
    pub fn m(&self) -> f64 {
        (self.s + 1.0) / 3.0
    }
}

fn check_whole_line(f: &GridFunction) -> Result<()> {
    if f.len() < 3 {
        return Err(Error::InvalidGrid("norms need at least three samples".into()));
    }
    Ok(())
}

/// `(∫(1+k²)^s |f̂|² dk / 2π)^{1/2}` by discrete Plancherel on the periodic grid.
pub fn hs_norm_line(f: &GridFunction, s: f64) -> Result<f64> {
    check_whole_line(f)?;
    let grid = PeriodicGrid::for_function(f)?;
    let spec = grid.continuous_transform(&f.values);
    let scale = 1.0 / (grid.n as f64 * grid.spacing());
    let sum: f64 = spec
        .iter()
        .zip(&grid.wavenumbers)
        .map(|(v, &k)| (1.0 + k * k).powf(s) * v.norm_sqr())
        .sum();
    Ok((sum * scale).sqrt())
}

/// `H^s` surrogate for data on `[0, L]`, through the default extension for `s`.
pub fn hs_norm_half_line(u0: &GridFunction, s: f64) -> Result<f64> {
    let ext = extend_initial(u0, ExtensionPolicy::for_regularity(s))?;
    hs_norm_line(&ext, s)
}

/// `L^r` norm of `F⁻¹[(1+k²)^{s/2} f̂]`.
pub fn bessel_norm(f: &GridFunction, s: f64, r: f64) -> Result<f64> {
    check_whole_line(f)?;
    if !(r >= 1.0) || !r.is_finite() {
        return Err(Error::RangeViolation(format!("Lebesgue exponent {r} must be finite and at least 1")));
    }
    let grid = PeriodicGrid::for_function(f)?;
    let samples = &f.values[..grid.n];
    let mut spec = grid.forward(samples);
    for (v, &k) in spec.iter_mut().zip(&grid.wavenumbers) {
        *v *= (1.0 + k * k).powf(0.5 * s);
    }
    let back = grid.inverse(&spec);
    let h = grid.spacing();
    let sum: f64 = back.iter().map(|v| v.norm().powf(r)).sum();
    Ok((h * sum).powf(1.0 / r))
}

/// `L^μ_t H^{s,r}_x` over the field's time grid. Fields on `[0, L]` are
/// extended slice by slice with the default extension.
pub fn mixed_norm(u: &SpaceTimeField, spec: &SobolevSpec) -> Result<f64> {
    let (mu, r) = match (spec.mu, spec.r) {
        (Some(mu), Some(r)) => (mu, r),
        _ => return Err(Error::RangeViolation("mixed norm needs an admissible (mu, r) pair".into())),
    };
    if !mu.is_finite() {
        return Err(Error::RangeViolation("mu = infinity is not supported".into()));
    }
    let half_line = u.x_start.abs() < 1e-12 * (1.0 + u.x_end.abs());
    let mut slices = Vec::with_capacity(u.nt);
    for n in 0..u.nt {
        let f = u.slice_function(n);
        let f = if half_line { extend_initial(&f, ExtensionPolicy::for_regularity(spec.s))? } else { f };
        slices.push(bessel_norm(&f, spec.s, r)?.powf(mu));
    }
    let integral = if u.nt == 1 { 0.0 } else { trapezoid(&slices, u.dt()) };
    Ok(integral.powf(1.0 / mu))
}

/// `(2∫₀^T∫₀^{T−t} |z(t+l) − z(t)|² / l^{1+2m} dl dt)^{1/2}` for the linear
/// interpolant of `z`. The inner integral uses `l = (T−t)v²`.
pub fn fractional_time_seminorm(z: &GridFunction, m: f64) -> Result<f64> {
    if !(m > 0.0 && m < 1.0) {
        return Err(Error::ExponentOutOfRange(m));
    }
    let (a, b) = (z.start, z.end);
    let rule = gauss_legendre(8);
    let inner_panels = 32;
    let cells = z.len() - 1;
    let dt = z.spacing();
    let mut total = 0.0;
    for c in 0..cells {
        let (lo, hi) = (a + c as f64 * dt, a + (c + 1) as f64 * dt);
        for &(xo, wo) in &rule {
            let t = 0.5 * (lo + hi) + 0.5 * (hi - lo) * xo;
            let span = b - t;
            if span <= 0.0 {
                continue;
            }
            let zt = z.interpolate(t);
            let mut inner = 0.0;
            for p in 0..inner_panels {
                let (vl, vh) = (p as f64 / inner_panels as f64, (p + 1) as f64 / inner_panels as f64);
                for &(xi, wi) in &rule {
                    let v = 0.5 * (vl + vh) + 0.5 * (vh - vl) * xi;
                    let l = span * v * v;
                    let diff = (z.interpolate((t + l).min(b)) - zt).norm_sqr();
                    // dl / l^{1+2m} = 2 span^{−2m} v^{−1−4m} dv
                    inner += wi * 0.5 * (vh - vl) * diff * 2.0 * span.powf(-2.0 * m) * v.powf(-1.0 - 4.0 * m);
                }
            }
            total += wo * 0.5 * (hi - lo) * inner;
        }
    }
    Ok((2.0 * total).sqrt())
}

fn to_rational(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::InvalidParams(format!("{x} is not finite")))
}

/// Exact `(μ, r) = (6(p+1)/(p(1−2s)), 2(p+1)/(1+2sp))`.
pub fn strichartz_exponents_exact(s: &BigRational, p: &BigRational) -> (BigRational, BigRational) {
    let one = BigRational::one();
    let two = BigRational::from_integer(BigInt::from(2));
    let six = BigRational::from_integer(BigInt::from(6));
    let mu = &six * (p + &one) / (p * (&one - &two * s));
    let r = &two * (p + &one) / (&one + &two * s * p);
    (mu, r)
}

/// Admissible pair attached to `(s, p)` in the low-regularity range.
pub fn strichartz_exponents(s: f64, p: f64) -> Result<SobolevSpec> {
    if !(0.0..0.5).contains(&s) {
        return Err(Error::RangeViolation(format!("s = {s} outside [0, 1/2)")));
    }
    let p_max = 6.0 / (1.0 - 2.0 * s);
    if !(p >= 1.0 && p <= p_max) {
        return Err(Error::RangeViolation(format!("p = {p} outside [1, {p_max}]")));
    }
    let (sr, pr) = (to_rational(s)?, to_rational(p)?);
    let (mu, r) = strichartz_exponents_exact(&sr, &pr);
    let three = BigRational::from_integer(BigInt::from(3));
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    let identity = &three / &mu + r.recip() - half;
    if !identity.is_zero() {
        return Err(Error::RangeViolation("admissibility identity failed in exact arithmetic".into()));
    }
    let mu = mu.to_f64().unwrap_or(f64::NAN);
    let r = r.to_f64().unwrap_or(f64::NAN);
    SobolevSpec::new(s, Some(mu), Some(r))
}

/// Time-gain exponent `σ(s)` of the nonlinear estimates.
pub fn sigma_exponent(s: f64) -> Result<f64> {
    if s == 0.5 {
        return Err(Error::HalfExcluded);
    }
    if !(-1.0..=2.0).contains(&s) {
        return Err(Error::RangeViolation(format!("s = {s} outside [-1, 2]")));
    }
    Ok(if s < 0.5 {
        (1.0 - 2.0 * s) / 6.0
    } else if s < 2.0 {
        (2.0 - s) / 3.0
    } else {
        0.5
    })
}

fn is_integer(x: f64) -> bool {
    x.fract() == 0.0
}

/// Smoothness-versus-growth condition on `p` for `1/2 < s ≤ 2`.
pub fn high_reg_condition_check(s: f64, p: f64) -> bool {
    if !(p > 0.0) {
        return false;
    }
    let p_int = is_integer(p);
    if p_int && (p as i64) % 2 == 0 {
        return true;
    }
    let p_odd = p_int;
    if is_integer(s) && s > 0.0 {
        if p_odd {
            p >= s
        } else {
            p.floor() >= s - 1.0
        }
    } else if p_odd {
        p > s
    } else {
        p.floor() >= s.floor()
    }
}

/// `u₀(0) = g(0)` to relative tolerance; only meaningful for `s > 1/2`.
pub fn compatibility_check(u0: &GridFunction, g: &GridFunction, s: f64, tol: f64) -> bool {
    if s <= 0.5 {
        return true;
    }
    let a = u0.values[0];
    (a - g.values[0]).norm() <= tol * (1.0 + a.norm())
}
