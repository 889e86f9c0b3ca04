use approx::assert_relative_eq;
use mie_core::bounds::{
    contractivity_lambda, double_count_factor, distillation_entropy_bound, wall_sum_eps_bound, markov_concentration, mie_lower_bound,
};
use mie_core::linalg::CMat;
use mie_core::C64;
use proptest::prelude::*;

fn projector(v: &[C64]) -> CMat {
    let k = CMat::from_column_slice(v.len(), 1, v);
    &k * k.adjoint()
}

#[test]
fn computational_basis_lambda_is_sqrt_d() {
    // Φ maps a traceless diagonal operator to d times itself
    for d in 2..=4 {
        let povm: Vec<CMat> = (0..d)
            .map(|s| {
                let mut e = vec![C64::new(0.0, 0.0); d];
                e[s] = C64::new(1.0, 0.0);
                projector(&e)
            })
            .collect();
        assert_relative_eq!(contractivity_lambda(&povm).unwrap(), (d as f64).sqrt(), epsilon = 1e-10);
    }
}

#[test]
fn qubit_two_design_lambda() {
    // six Pauli eigenstates weighted 1/3 form a 2-design, so on traceless X
    // Φ(X) = (2/3) X
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (o, i) = (C64::new(s, 0.0), C64::new(0.0, s));
    let states = [
        [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        [o, o],
        [o, -o],
        [o, i],
        [o, -i],
    ];
    let povm: Vec<CMat> = states.iter().map(|v| projector(v) * C64::new(1.0 / 3.0, 0.0)).collect();
    assert_relative_eq!(contractivity_lambda(&povm).unwrap(), (2.0f64 / 3.0).sqrt(), epsilon = 1e-10);
}

#[test]
fn non_povm_is_rejected() {
    let half = CMat::identity(2, 2) * C64::new(0.5, 0.0);
    assert!(contractivity_lambda(&[half]).is_err());
    assert!(contractivity_lambda(&[]).is_err());
}

proptest! {
    #[test]
    fn entropy_bound_decreases_from_ln_d(e1 in 0.0f64..2.0, de in 0.0f64..2.0, d in 2.0f64..1e6) {
        let e2 = (e1 + de).min(2.0);
        let (b1, b2) = (distillation_entropy_bound(e1, d).unwrap(), distillation_entropy_bound(e2, d).unwrap());
        prop_assert!(b1 <= d.ln() + 1e-12);
        // the bound is decreasing wherever ε/2 ≤ 1 − 1/d
        if e2 / 2.0 <= 1.0 - 1.0 / d {
            prop_assert!(b2 <= b1 + 1e-12);
        }
    }

    #[test]
    fn double_count_factor_is_increasing(x in 0.0f64..20.0, dx in 1e-6f64..5.0) {
        let (f1, f2) = (double_count_factor(x), double_count_factor(x + dx));
        prop_assert!(f1 >= 1.0);
        prop_assert!(f2 > f1);
        prop_assert!(wall_sum_eps_bound(x + dx, 4.0) > wall_sum_eps_bound(x, 4.0));
    }

    #[test]
    fn markov_is_monotone_and_clamped(eps in 0.0f64..2.0, d in 2.0f64..100.0, delta in 0.7f64..5.0) {
        let p = markov_concentration(eps, d, delta).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!(markov_concentration(eps * 0.5, d, delta).unwrap() <= p);
        prop_assert!(markov_concentration(eps, d, 0.69).is_err());
    }

    #[test]
    fn mie_bound_chain(f in 0.01f64..40.0) {
        let r = mie_lower_bound((-f).exp());
        prop_assert_eq!(r.valid, f >= 2.0);
        prop_assert!((r.f_saw - f).abs() < 1e-9 * f.max(1.0));
        if r.valid {
            prop_assert!(r.mie_lower_nats >= 0.0);
            prop_assert!((r.mie_lower_nats - (2.0 * f - 2.0 * (std::f64::consts::E * f).ln())).abs() < 1e-9);
            // the target dimension is the integer ceiling of e^{2F}/F²
            prop_assert!(r.d_prime >= (2.0 * f).exp() / (f * f) * (1.0 - 1e-12));
            let larger = mie_lower_bound((-(f + 1.0)).exp());
            prop_assert!(larger.mie_lower_nats > r.mie_lower_nats);
        } else {
            prop_assert_eq!(r.mie_lower_nats, 0.0);
        }
    }
}
