use proptest::prelude::*;
use rustc_hash::FxHashMap;

use hamjet::catalog::{build, FamilySpec, Sign};
use hamjet::diffop::DiffOp;
use hamjet::expr::{
    parse, parse_with, probe_ratfn, Atom, Coeff, Dialect, ParseContext, ProbeConfig, Rat, Scalar,
};
use hamjet::jetcalc::{euler_operator, frechet_derivative, total_derivative};
use hamjet::momentum::{
    decide_momentum, momentum_ode_fifth, momentum_residual_system, numeric_check, solve_ode,
    verify_momentum_density, MomentumVerdict,
};
use hamjet::transform::{is_special_contact, k_operator, pushforward_operator, Substitution, SubstitutionKind};
use hamjet::RatFn;

fn cfg() -> ProbeConfig {
    ProbeConfig::new(24, 1e-9, 7)
}

fn rf(s: &str) -> RatFn {
    parse(s).unwrap().to_ratfn().unwrap()
}

fn yv(s: &str) -> RatFn {
    let ctx = ParseContext::new().dialect(Dialect::Substitution);
    parse_with(s, &ctx).unwrap().to_ratfn().unwrap()
}

fn vanishes(r: &RatFn) -> bool {
    r.is_zero() || probe_ratfn(r, &cfg()).unwrap().verdict.is_zero()
}

fn same_op(a: &DiffOp, b: &DiffOp) -> bool {
    a.sub(b).coeffs().iter().all(vanishes)
}

/// Polynomial in the given variables with small integer coefficients.
fn poly_in(vars: &'static [&'static str], max_terms: usize) -> impl Strategy<Value = RatFn> {
    let term = (-3i64..=3, prop::collection::vec(0u32..=2, vars.len()));
    prop::collection::vec(term, 1..=max_terms).prop_map(move |terms| {
        let mut out = RatFn::zero();
        for (c, exps) in terms {
            let mut t = RatFn::int(c);
            for (v, e) in vars.iter().zip(exps) {
                t = t.mul(&rf(v).pow(e as i32).unwrap());
            }
            out = out.add(&t);
        }
        out
    })
}

fn jet_poly() -> impl Strategy<Value = RatFn> {
    poly_in(&["x", "u", "u_1", "u_2"], 4)
}

fn operator() -> impl Strategy<Value = DiffOp> {
    prop::collection::vec(poly_in(&["u", "u_1"], 3), 1..=3).prop_map(DiffOp::from_coeffs)
}

fn nonzero_rat() -> impl Strategy<Value = Rat> {
    (prop_oneof![-4i64..=-1, 1i64..=4], 1i64..=3).prop_map(|(n, d)| Rat::new(n, d))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn euler_annihilates_total_derivatives(f in jet_poly()) {
        let d = total_derivative(&f).unwrap();
        prop_assert!(euler_operator(&d).unwrap().is_zero());
    }

    #[test]
    fn variational_derivatives_have_self_adjoint_linearization(t in jet_poly()) {
        let l = frechet_derivative(&euler_operator(&t).unwrap()).unwrap();
        prop_assert!(same_op(&l, &l.adjoint().unwrap()));
    }

    #[test]
    fn adjoint_is_an_involution(a in operator()) {
        prop_assert!(same_op(&a.adjoint().unwrap().adjoint().unwrap(), &a));
    }

    #[test]
    fn adjoint_reverses_composition(a in operator(), b in operator()) {
        let lhs = a.compose(&b).unwrap().adjoint().unwrap();
        let rhs = b.adjoint().unwrap().compose(&a.adjoint().unwrap()).unwrap();
        prop_assert!(same_op(&lhs, &rhs));
    }

    #[test]
    fn odd_symmetrizations_are_skew(a in poly_in(&["u", "u_1"], 3), k in prop_oneof![Just(1usize), Just(3)]) {
        let op = DiffOp::from_symmetrized(&[(a, k)]).unwrap();
        prop_assert!(op.is_skew_adjoint().unwrap());
    }

    #[test]
    fn x_dependent_operators_are_not_translation_invariant(a in poly_in(&["x"], 3), c in nonzero_rat()) {
        let a = a.add(&rf("x"));
        prop_assume!(a.depends_on(Atom::x_id()));
        // a(x)∘D + D∘a(x) + c D^3: constant in u, hence Hamiltonian
        let op = DiffOp::from_symmetrized(&[(a, 1)]).unwrap()
            .add(&DiffOp::dx_pow(3).scale(&Coeff::real(c)));
        match decide_momentum(&op, &cfg()).unwrap() {
            MomentumVerdict::No(w) => prop_assert_eq!(w.tag(), "NOT_TRANSLATION_INVARIANT"),
            other => prop_assert!(false, "{:?}", other),
        }
    }

    #[test]
    fn linear_third_order_momenta(a in (1i64..=9, 1i64..=4), plus in any::<bool>()) {
        let a = RatFn::ratio(a.0, a.1);
        let sign = if plus { Sign::Plus } else { Sign::Minus };
        let op = build(&FamilySpec::third_linear(sign, a.clone())).unwrap();
        let t = rf("u").div(&a).unwrap().scale(&sign.coeff());
        prop_assert!(verify_momentum_density(&op, &t, &cfg()).unwrap());
        let v = decide_momentum(&op, &cfg()).unwrap();
        prop_assert_eq!(v.label(), "YES");
        prop_assert!(verify_momentum_density(&op, v.density().unwrap(), &cfg()).unwrap());
    }

    #[test]
    fn constant_third_order_has_no_momentum(a in -6i64..=6, plus in any::<bool>()) {
        let sign = if plus { Sign::Plus } else { Sign::Minus };
        let op = build(&FamilySpec::third_constant(sign, RatFn::int(a))).unwrap();
        let v = decide_momentum(&op, &cfg()).unwrap();
        prop_assert_eq!(v.label(), "NO");
    }

    #[test]
    fn residual_system_vanishes_on_momenta(a in (1i64..=9, 1i64..=4)) {
        // h = δ(u/A)/δu = 1/A: every equation must hold
        let a = RatFn::ratio(a.0, a.1);
        let op = build(&FamilySpec::third_linear(Sign::Plus, a.clone())).unwrap();
        let h = a.recip().unwrap();
        for eq in momentum_residual_system(&op).unwrap() {
            let mut map = FxHashMap::default();
            for id in eq.lhs.vars() {
                if let Atom::Func(f) = Atom::from_id(id) {
                    let v = if f.dx == 0 && f.du == 0 { h.clone() } else { RatFn::zero() };
                    map.insert(id, v);
                }
            }
            prop_assert!(eq.lhs.substitute(&map).unwrap().is_zero(), "{}", eq.monomial);
        }
    }

    #[test]
    fn series_solutions_satisfy_the_ode(
        alpha in -3i64..=3,
        beta in -3i64..=3,
        plus in any::<bool>(),
        init in prop::collection::vec(-3i64..=3, 5),
    ) {
        let sign = if plus { Sign::Plus } else { Sign::Minus };
        let ode = momentum_ode_fifth(&RatFn::int(alpha), &RatFn::int(beta), sign).unwrap();
        let init: Vec<Scalar> = init.into_iter().map(Scalar::int).collect();
        let sol = solve_ode(&ode, &Scalar::int(0), &init, 24).unwrap();
        prop_assert!(sol.residual < 1e-9);
        let check = numeric_check(&ode, &sol, &init, 0.25, 200).unwrap();
        prop_assert!(check.max_deviation < 1e-6, "{}", check.max_deviation);
    }

    #[test]
    fn point_pushforwards_keep_hamiltonian(a in nonzero_rat(), b in -2i64..=2, lin in 1i64..=3) {
        let op = build(&FamilySpec::third_linear(Sign::Plus, RatFn::int(lin))).unwrap();
        let psi = yv("v").scale(&Coeff::real(a)).add(&RatFn::int(b));
        let s = Substitution::new(yv("y"), psi).unwrap();
        let out = pushforward_operator(&op, &s).unwrap();
        prop_assert!(out.is_hamiltonian(&cfg()).unwrap().is_hamiltonian());
    }

    #[test]
    fn pushforward_is_functorial(a in nonzero_rat(), b in -2i64..=2, c in -2i64..=2) {
        let op = build(&FamilySpec::third_linear(Sign::Plus, RatFn::int(1))).unwrap();
        let s1 = Substitution::new(yv("y").add(&yv("v").scale(&Coeff::int(c))), yv("v")).unwrap();
        let s2 = Substitution::new(yv("y"), yv("v").scale(&Coeff::real(a)).add(&RatFn::int(b))).unwrap();
        let stepwise = pushforward_operator(&pushforward_operator(&op, &s1).unwrap(), &s2).unwrap();
        let direct = pushforward_operator(&op, &s1.then(&s2).unwrap()).unwrap();
        prop_assert!(same_op(&stepwise, &direct));
    }

    #[test]
    fn inverse_substitution_recovers_operator(a in nonzero_rat(), b in -2i64..=2) {
        let op = build(&FamilySpec::third_linear(Sign::Plus, RatFn::int(2))).unwrap();
        let a_inv = a.recip().unwrap();
        let fwd = Substitution::new(yv("y"), yv("v").scale(&Coeff::real(a)).add(&RatFn::int(b))).unwrap();
        let back = Substitution::new(yv("y"), yv("v").sub(&RatFn::int(b)).scale(&Coeff::real(a_inv))).unwrap();
        let round = pushforward_operator(&pushforward_operator(&op, &fwd).unwrap(), &back).unwrap();
        prop_assert!(same_op(&round, &op));
    }

    #[test]
    fn special_contact_k_has_order_zero(a in nonzero_rat(), b in -2i64..=2) {
        let point = Substitution::new(yv("y"), yv("v").scale(&Coeff::real(a)).add(&RatFn::int(b))).unwrap();
        let contact = Substitution::new(yv("y - v/v_1"), yv("v_1")).unwrap();
        let s = point.then(&contact).unwrap();
        prop_assert_eq!(s.kind(), SubstitutionKind::SpecialContact);
        prop_assert!(is_special_contact(&s, &cfg()).unwrap().is_special);
        prop_assert_eq!(k_operator(&s).unwrap().order(), Some(0));
    }

    #[test]
    fn expressions_round_trip_through_text(f in jet_poly(), g in poly_in(&["u", "u_1"], 3)) {
        prop_assume!(!g.is_zero());
        let r = f.div(&g).unwrap();
        let back = parse(&r.to_expr().to_string()).unwrap().to_ratfn().unwrap();
        prop_assert_eq!(back, r);
    }

    #[test]
    fn probes_are_deterministic(f in jet_poly()) {
        let a = probe_ratfn(&f, &cfg()).unwrap();
        let b = probe_ratfn(&f, &cfg()).unwrap();
        prop_assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }
}
