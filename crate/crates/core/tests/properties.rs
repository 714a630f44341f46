use num_complex::Complex64;
use proptest::prelude::*;

use hnls_core::norms::{sigma_exponent, strichartz_exponents};
use hnls_core::spectral::{classify, in_d_plus_closure, nu_pair, omega};
use hnls_core::transforms::extend_boundary;
use hnls_core::{GridFunction, GridKind, PdeParams};

fn params() -> impl Strategy<Value = PdeParams> {
    (-2.0..2.0f64, 0.2..3.0f64, -2.0..2.0f64).prop_map(|(a, b, d)| PdeParams::linear(a, b, d).unwrap())
}

proptest! {
    #[test]
    fn symmetry_roots_share_omega(p in params(), re in -5.0..5.0f64, im in -5.0..5.0f64) {
        let cls = classify(&p);
        let k = Complex64::new(re, im);
        prop_assume!(cls.distance_to_cut(k) > 1e-4);
        let (np, nm) = nu_pair(k, &cls, &p).unwrap();
        let om = omega(k, &p);
        for nu in [np, nm] {
            prop_assert!((omega(nu, &p) - om).norm() <= 1e-10 * (1.0 + om.norm()));
        }
        let sum = np + nm - (p.alpha / p.beta - k);
        prop_assert!(sum.norm() <= 1e-12 * (1.0 + k.norm()));
    }

    #[test]
    fn roots_leave_the_upper_half_plane(p in params(), re in -5.0..5.0f64, im in 0.0..5.0f64) {
        let cls = classify(&p);
        let k = Complex64::new(re, im);
        prop_assume!(in_d_plus_closure(k, &p, 0.0) && cls.distance_to_cut(k) > 1e-4);
        let (np, nm) = nu_pair(k, &cls, &p).unwrap();
        prop_assert!(np.im <= 1e-12 && nm.im <= 1e-12, "{np} {nm}");
    }

    #[test]
    fn strichartz_pairs_are_admissible(s in 0.0..0.49f64, frac in 0.0..1.0f64) {
        let p = 1.0 + frac * (6.0 / (1.0 - 2.0 * s) - 1.0);
        let spec = strichartz_exponents(s, p).unwrap();
        let (mu, r) = (spec.mu.unwrap(), spec.r.unwrap());
        prop_assert!(mu >= 2.0 && r >= 2.0);
        prop_assert!((3.0 / mu + 1.0 / r - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sigma_is_positive_off_the_half(s in 0.0..2.0f64) {
        prop_assume!(s != 0.5);
        let sigma = sigma_exponent(s).unwrap();
        prop_assert!(sigma > 0.0 && sigma <= 0.5);
    }

    #[test]
    fn boundary_extension_is_linear(a in -3.0..3.0f64, b in -3.0..3.0f64, w in 0.5..8.0f64) {
        let f = GridFunction::from_fn(0.0, 1.0, 41, GridKind::Temporal, |t| Complex64::new((w * t).sin(), t)).unwrap();
        let g = GridFunction::from_fn(0.0, 1.0, 41, GridKind::Temporal, |t| Complex64::new(1.0, (w * t).cos())).unwrap();
        let (ca, cb) = (Complex64::new(a, 0.0), Complex64::new(0.0, b));
        let lhs = extend_boundary(&f.linear_combination(ca, &g, cb).unwrap(), 2.0).unwrap();
        let rhs = extend_boundary(&f, 2.0).unwrap().linear_combination(ca, &extend_boundary(&g, 2.0).unwrap(), cb).unwrap();
        for (x, y) in lhs.values.iter().zip(&rhs.values) {
            prop_assert!((x - y).norm() < 1e-12);
        }
        prop_assert!(lhs.values.last().unwrap().norm() == 0.0);
    }
}
