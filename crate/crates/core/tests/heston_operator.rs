use hestonreg::analytic::{AnalyticField, ClosureField, Constant, Polynomial, Separable};
use hestonreg::heston_operator::{
    apply_b, apply_operator, apply_to_field, commutator_residual, derived_constants, shift_coefficients,
    simple_dy_commutator, validate_coefficients, Coefficients, JetPoint, RawCoefficients,
};
use hestonreg::Error;
use nalgebra::Matrix2;
use proptest::prelude::*;

fn raw(sigma: f64, rho: f64, kappa: f64, theta: f64, c0: f64, q: f64, gamma: f64) -> RawCoefficients {
    RawCoefficients {
        sigma,
        rho,
        kappa,
        theta,
        c0,
        q,
        gamma,
    }
}

fn base() -> Coefficients {
    Coefficients::new(1.0, 0.0, 1.0, 0.5, 0.0, 0.0, 0.0).unwrap()
}

#[test]
fn validation_examples() {
    assert!(validate_coefficients(&raw(1.0, 0.0, 1.0, 0.5, 0.0, 0.0, 0.0)).is_ok());
    assert_eq!(
        validate_coefficients(&raw(0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0)).unwrap_err(),
        Error::SigmaZero
    );
    assert!(matches!(
        validate_coefficients(&raw(1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0)),
        Err(Error::RhoOutOfRange(_))
    ));
    assert!(matches!(
        validate_coefficients(&raw(1.0, -1.0, 1.0, 1.0, 0.0, 0.0, 0.0)),
        Err(Error::RhoOutOfRange(_))
    ));
    assert!(matches!(
        validate_coefficients(&raw(1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0)),
        Err(Error::NonpositiveKappaTheta { .. })
    ));
    assert!(matches!(
        validate_coefficients(&raw(1.0, 0.0, 1.0, -1.0, 0.0, 0.0, 0.0)),
        Err(Error::NonpositiveKappaTheta { .. })
    ));
    assert!(matches!(
        validate_coefficients(&raw(1.0, 0.0, 1.0, 1.0, -0.1, 0.0, 0.0)),
        Err(Error::NegativeC0(_))
    ));
    assert!(matches!(
        validate_coefficients(&raw(1.0, 0.0, 1.0, 1.0, 0.0, 0.0, -0.1)),
        Err(Error::NegativeGamma(_))
    ));
    // Negative sigma is admissible; q is unrestricted.
    assert!(validate_coefficients(&raw(-1.0, 0.3, 1.0, 1.0, 0.0, -7.0, 0.0)).is_ok());
}

#[test]
fn derived_examples() {
    let d = derived_constants(&base());
    assert!((d.nu0 - 1.0).abs() < 1e-15);
    assert!((d.beta - 1.0).abs() < 1e-15);
    assert!((d.mu - 2.0).abs() < 1e-15);
    assert!((d.a1 + 0.5).abs() < 1e-15);
    assert_eq!(d.b1, 0.0);
    assert!(d.b1_is_zero);

    let c = Coefficients::new(2.0, 0.5, 1.0, 1.0, 0.0, 0.0, 0.0).unwrap();
    assert!((c.derived().nu0 - (5.0 - 13f64.sqrt()) / 2.0).abs() < 1e-12);
    assert!((c.derived().nu0 - 0.697224).abs() < 1e-6);

    let c = Coefficients::new(2.0, 0.0, 2.0, 1.0, 0.0, 0.0, 0.0).unwrap();
    assert!((c.derived().beta - 1.0).abs() < 1e-15);
    assert!((c.derived().mu - 1.0).abs() < 1e-15);

    let c = Coefficients::new(0.5, -0.4, 2.0, 0.3, 0.7, 1.1, 0.0).unwrap();
    let d = c.derived();
    let lambda = 1.0 + 2.0 * 0.2 + 0.25 + 0.6 + 0.4 + 0.7;
    assert!((d.lambda - lambda).abs() < 1e-14);
    assert!((d.b1 - (0.7 - 1.1 + 0.6 * 0.4 / 0.5)).abs() < 1e-14);
    assert!(!d.b1_is_zero);
}

#[test]
fn shift_examples() {
    let c = base();
    let s0 = shift_coefficients(&c, 0);
    assert_eq!(*s0.as_coefficients(), c);
    let s1 = shift_coefficients(&c, 1);
    assert!((s1.theta_m() - 1.0).abs() < 1e-15);
    assert_eq!(s1.q_m(), 0.0);
    assert!((s1.c0_m() - 1.0).abs() < 1e-15);
    assert!((s1.beta_m() - 2.0).abs() < 1e-15);
    assert_eq!(s1.as_coefficients().kappa(), c.kappa());
}

#[test]
fn operator_examples() {
    let c = Coefficients::new(1.3, 0.2, 1.0, 0.5, 0.8, 0.1, 0.0).unwrap();
    let s = shift_coefficients(&c, 0);
    let one = JetPoint::second_order(0.4, 0.9, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    assert!((apply_operator(&s, &one).unwrap() - 0.8).abs() < 1e-15);
    for (x, y) in [(0.0, 0.1), (2.0, 3.0), (-1.0, 0.5)] {
        let v = Polynomial::new(vec![(1, 0, 1.0)]);
        let av = apply_to_field(&s, &v, x, y).unwrap();
        assert!((av - (-(0.8 - 0.1 - y / 2.0) + 0.8 * x)).abs() < 1e-14);
        let av0 = apply_to_field(&shift_coefficients(&base(), 0), &v, x, y).unwrap();
        assert!((av0 + (0.0 - 0.0 - y / 2.0)).abs() < 1e-14);
    }
    let y2 = Polynomial::new(vec![(0, 2, 1.0)]);
    assert!(apply_to_field(&shift_coefficients(&base(), 0), &y2, 0.0, 1.0).unwrap().abs() < 1e-15);
    let short = JetPoint::from_fn(0.0, 1.0, 1, |_, _| 1.0);
    assert!(matches!(apply_operator(&s, &short), Err(Error::MissingDerivative { .. })));
}

#[test]
fn b_examples() {
    let x2 = Polynomial::new(vec![(2, 0, 1.0)]);
    for x in [-1.0, 0.0, 2.5] {
        let j = x2.jet(x, 1.0, 2).unwrap();
        assert!((apply_b(&j).unwrap() - (x - 1.0)).abs() < 1e-14);
    }
    let expx = ClosureField::new(8, |_, b, x, _| if b == 0 { x.exp() } else { 0.0 });
    assert!(apply_b(&expx.jet(0.7, 1.0, 2).unwrap()).unwrap().abs() < 1e-15);
    let x = Polynomial::new(vec![(1, 0, 1.0)]);
    assert_eq!(apply_b(&x.jet(3.0, 1.0, 2).unwrap()).unwrap(), 0.5);
}

#[test]
fn commutator_examples() {
    let c = Coefficients::new(0.7, -0.45, 1.7, 0.3, 0.9, 0.2, 0.4).unwrap();
    let y2 = Polynomial::new(vec![(0, 2, 1.0)]);
    for (x, y) in [(0.1, 0.2), (-3.0, 5.0)] {
        assert!(commutator_residual(&c, &y2, 0, 1, x, y).unwrap().within(1e-12));
    }
    let x = Polynomial::new(vec![(1, 0, 1.0)]);
    let r = commutator_residual(&c, &x, 0, 1, 0.3, 0.8).unwrap();
    assert!(r.residual < 1e-15);
    // [D_y, A] x = (1/2) v_x = 1/2
    let j = x.jet(0.3, 0.8, 3).unwrap();
    assert!((simple_dy_commutator(&c, &j).unwrap() - 0.5).abs() < 1e-15);
    for m in 1..=3 {
        let r = commutator_residual(&c, &Constant(4.0), 0, m, 0.3, 0.8).unwrap();
        assert_eq!(r.residual, 0.0);
    }
    // v_x != 0 exercises the x-drift of A_1.
    let xy = Polynomial::new(vec![(1, 1, 1.0)]);
    assert!(commutator_residual(&c, &xy, 0, 1, 0.3, 0.8).unwrap().within(1e-14));
    let cubic = ClosureField::new(3, |a, b, x, y| if a + b == 0 { x * y } else { 0.0 });
    assert!(matches!(
        commutator_residual(&c, &cubic, 1, 1, 0.3, 0.8),
        Err(Error::InsufficientJetOrder { required: 4, .. })
    ));
}

fn valid_coefficients() -> impl Strategy<Value = Coefficients> {
    (
        prop_oneof![-3.0..-0.05f64, 0.05..3.0f64],
        -0.99..0.99f64,
        0.05..4.0f64,
        0.05..2.0f64,
        0.0..3.0f64,
        -2.0..2.0f64,
        0.0..2.0f64,
    )
        .prop_map(|(s, r, k, t, c0, q, g)| Coefficients::new(s, r, k, t, c0, q, g).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn nu0_is_smallest_eigenvalue(c in valid_coefficients()) {
        let rs = c.rho() * c.sigma();
        let m = Matrix2::new(1.0, rs, rs, c.sigma() * c.sigma());
        let eig = m.symmetric_eigenvalues();
        let brute = eig[0].min(eig[1]);
        let nu0 = c.derived().nu0;
        prop_assert!(nu0 > 0.0);
        prop_assert!((nu0 - brute).abs() <= 1e-12 * brute.abs().max(1e-300) + 1e-15);
    }

    #[test]
    fn shifted_beta_grows_by_m(c in valid_coefficients(), m in 1u32..=5) {
        let s = shift_coefficients(&c, m);
        prop_assert!((s.beta_m() - (c.derived().beta + m as f64)).abs() < 1e-10 * (1.0 + s.beta_m()));
        prop_assert!((s.as_coefficients().derived().beta - s.beta_m()).abs() < 1e-10 * (1.0 + s.beta_m()));
    }

    #[test]
    fn shifts_compose(c in valid_coefficients(), m1 in 0u32..4, m2 in 0u32..4) {
        let twice = shift_coefficients(shift_coefficients(&c, m1).as_coefficients(), m2);
        let once = shift_coefficients(&c, m1 + m2);
        let (a, b) = (twice.as_coefficients(), once.as_coefficients());
        let close = |p: f64, q: f64| (p - q).abs() <= 1e-12 * (1.0 + p.abs());
        prop_assert!(close(a.theta(), b.theta()));
        prop_assert!(close(a.q(), b.q()));
        prop_assert!(close(a.c0(), b.c0()));
        prop_assert_eq!(a.kappa(), b.kappa());
        prop_assert_eq!(a.sigma(), b.sigma());
        prop_assert_eq!(a.rho(), b.rho());
    }

    #[test]
    fn mixed_commutators_hold(c in valid_coefficients(), x in -2.0..2.0f64, y in 0.01..3.0f64) {
        let fields: Vec<Box<dyn AnalyticField>> = vec![
            Box::new(Polynomial::new(vec![(5, 0, 0.3), (2, 3, -1.0), (1, 1, 2.0), (0, 4, 0.5)])),
            Box::new(Separable::exp_x_sin_y(0.7, 1.3)),
            Box::new(Separable::cos_x_exp_y(1.1, -0.6)),
        ];
        for f in &fields {
            for k in 0..=3 {
                for m in 0..=3 {
                    let r = commutator_residual(&c, f.as_ref(), k, m, x, y).unwrap();
                    prop_assert!(r.within(1e-10), "k={} m={} residual {:e} scale {:e}", k, m, r.residual, r.scale);
                }
            }
        }
    }
}
