//! Quadrature primitives shared by the transforms and contour integrals.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending in the node.
pub fn gauss_legendre(order: usize) -> Vec<(f64, f64)> {
    let order = NonZeroUsize::new(order.max(1)).unwrap();
    let mut pairs: Vec<(f64, f64)> = GaussLegendre::new(order).as_node_weight_pairs().to_vec();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

/// `(∫₀¹ e^{zs}(1−s) ds, ∫₀¹ e^{zs} s ds)`.
///
/// These are the weights for exact integration of `e^{zs}` against the two
/// hat functions of a single linear element.
pub fn linear_exp_weights(z: Complex64) -> (Complex64, Complex64) {
    if z.norm() < 0.125 {
        // Σ zⁿ/(n+2)! and Σ zⁿ/(n!(n+2))
        let mut a = Complex64::new(0.0, 0.0);
        let mut b = Complex64::new(0.0, 0.0);
        let mut zn = Complex64::new(1.0, 0.0);
        let mut fact = 1.0;
        for n in 0..14 {
            let nf = n as f64;
            a += zn / (fact * (nf + 1.0) * (nf + 2.0));
            b += zn / (fact * (nf + 2.0));
            fact *= nf + 1.0;
            zn *= z;
        }
        (a, b)
    } else {
        let ez = z.exp();
        let z2 = z * z;
        let a = (ez - 1.0 - z) / z2;
        let b = ((z - 1.0) * ez + 1.0) / z2;
        (a, b)
    }
}

/// `∫_{x₀}^{x_end} e^{κx} P(x) dx` where `P` is the piecewise-linear
/// interpolant of `values` on the uniform grid `x_j = x₀ + j h`.
///
/// Exact for piecewise-linear data at every `κ`, reducing to the trapezoid
/// rule when `κ = 0`. `x_end` may fall inside the grid; the integral then
/// stops there using the interpolated value.
pub fn exp_linear_integral(
    values: &[Complex64],
    x0: f64,
    h: f64,
    kappa: Complex64,
    x_end: f64,
) -> Complex64 {
    let n = values.len();
    if n < 2 || x_end <= x0 {
        return Complex64::new(0.0, 0.0);
    }
    let span = (x_end - x0) / h;
    let full = (span.floor() as usize).min(n - 1);
    let z = kappa * h;
    let (wa, wb) = linear_exp_weights(z);
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..full {
        let e = (kappa * (x0 + j as f64 * h)).exp();
        acc += e * (wa * values[j] + wb * values[j + 1]);
    }
    acc *= h;
    let frac = span - full as f64;
    if full < n - 1 && frac > 1e-12 {
        // partial last element [x_full, x_end], fraction θ of a cell
        let theta = frac;
        let v0 = values[full];
        let v1 = values[full] + (values[full + 1] - values[full]) * theta;
        let (pa, pb) = linear_exp_weights(z * theta);
        let e = (kappa * (x0 + full as f64 * h)).exp();
        acc += e * (pa * v0 + pb * v1) * (h * theta);
    }
    acc
}

/// Trapezoid rule on a uniform grid.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => h * (0.5 * (values[0] + values[n - 1]) + values[1..n - 1].iter().sum::<f64>()),
    }
}
