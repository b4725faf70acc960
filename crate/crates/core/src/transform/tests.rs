use super::*;
use crate::catalog::{build, FamilySpec, UnitParams};
use crate::expr::{parse, parse_with, Dialect, ParseContext, DEFAULT_SEED, DEFAULT_TOL};

fn rf(s: &str) -> RatFn {
    parse(s).unwrap().to_ratfn().unwrap()
}

fn yv(s: &str) -> RatFn {
    let ctx = ParseContext::new().dialect(Dialect::Substitution);
    parse_with(s, &ctx).unwrap().to_ratfn().unwrap()
}

fn sub(phi: &str, psi: &str) -> Substitution {
    Substitution::new(yv(phi), yv(psi)).unwrap()
}

fn cfg() -> ProbeConfig {
    ProbeConfig::new(64, DEFAULT_TOL, DEFAULT_SEED)
}

fn assert_same(a: &DiffOp, b: &DiffOp) {
    let d = a.sub(b);
    for c in d.coeffs() {
        if !c.is_zero() {
            assert!(probe_ratfn(c, &cfg()).unwrap().verdict.is_zero(), "{a} vs {b}");
        }
    }
}

#[test]
fn classification() {
    assert_eq!(Substitution::identity().kind(), SubstitutionKind::Point);
    assert_eq!(sub("y", "I*v").kind(), SubstitutionKind::Point);
    assert_eq!(sub("y - v/v_1", "v_1").kind(), SubstitutionKind::SpecialContact);
    assert_eq!(sub("y + v_1", "v").kind(), SubstitutionKind::General);
}

#[test]
fn special_contact_reports() {
    let r = is_special_contact(&Substitution::identity(), &cfg()).unwrap();
    assert!(r.is_special);
    assert_eq!(r.rho, Some(RatFn::one()));
    let r = is_special_contact(&sub("y", "I*v"), &cfg()).unwrap();
    assert!(r.is_special);
    assert_eq!(r.rho, Some(RatFn::imag_unit()));
    let r = is_special_contact(&sub("y + v_1", "v"), &cfg()).unwrap();
    assert!(!r.is_special);
    assert!(r.failed_condition.unwrap().contains("tangency"));
    let r = is_special_contact(&sub("y - v/v_1", "v_1"), &cfg()).unwrap();
    assert_eq!(r.rho, Some(yv("v_1/v")));
}

#[test]
fn k_operator_forms() {
    assert_eq!(k_operator(&Substitution::identity()).unwrap(), DiffOp::identity());
    assert_eq!(k_operator(&sub("y", "v^3 + v")).unwrap(), DiffOp::mult(yv("3*v^2 + 1")));
    // special contact: a multiplication by ρ D_y(φ)
    let s = sub("y - v/v_1", "v_1");
    let k = k_operator(&s).unwrap();
    assert_eq!(k.order(), Some(0));
    let rho = is_special_contact(&s, &cfg()).unwrap().rho.unwrap();
    assert_eq!(k.coeff(0), rho.mul(&total_derivative(s.phi()).unwrap()));
}

#[test]
fn identity_is_neutral() {
    let op = build(&FamilySpec::third_linear(Sign::Plus, RatFn::int(2))).unwrap();
    assert_eq!(pushforward_operator(&op, &Substitution::identity()).unwrap(), op);
    // the explicit identity goes through the general path too
    let s = Substitution { phi: yv("y"), psi: yv("v + 0*v_1"), kind: SubstitutionKind::Point };
    assert_eq!(pushforward_operator(&op, &s).unwrap(), op);
}

#[test]
fn scaling_first_order() {
    let op = DiffOp::dx();
    let out = pushforward_operator(&op, &sub("y", "3*v")).unwrap();
    assert_eq!(out, DiffOp::dx().scale(&Coeff::real(Rat::new(1, 9))));
}

#[test]
fn imaginary_scaling_flips_sign() {
    let op = build(&FamilySpec::fifth_unit(
        Sign::Minus,
        UnitParams::Explicit { alpha: rf("0"), beta: rf("0"), gamma: rf("0") },
    ))
    .unwrap();
    let out = pushforward_operator(&op, &sub("y", "I*v")).unwrap();
    assert_eq!(out.leading(), Some(&RatFn::one()));
}

#[test]
fn general_substitution_refused() {
    assert!(pushforward_operator(&DiffOp::dx(), &sub("y + v_1", "v")).is_err());
}

#[test]
fn pushforward_keeps_hamiltonian() {
    let op = build(&FamilySpec::third_linear(Sign::Plus, RatFn::int(1))).unwrap();
    let out = pushforward_operator(&op, &sub("y", "v^3 + v")).unwrap();
    assert!(out.is_hamiltonian(&cfg()).unwrap().is_hamiltonian());
    let out = pushforward_operator(&DiffOp::dx(), &sub("y - v/v_1", "v_1")).unwrap();
    assert!(out.is_hamiltonian(&cfg()).unwrap().is_hamiltonian());
}

#[test]
fn functorial_and_invertible() {
    let op = build(&FamilySpec::third_linear(Sign::Plus, RatFn::int(1))).unwrap();
    let s1 = sub("y + v", "v");
    let s2 = sub("y", "2*v + 1");
    let two_steps = pushforward_operator(&pushforward_operator(&op, &s1).unwrap(), &s2).unwrap();
    let composite = pushforward_operator(&op, &s1.then(&s2).unwrap()).unwrap();
    assert_same(&two_steps, &composite);
    let back = pushforward_operator(&pushforward_operator(&op, &s1).unwrap(), &sub("y - v", "v")).unwrap();
    assert_same(&back, &op);
}

fn quartic(scale: &str) -> DiffOp {
    let op = build(&FamilySpec::fifth_inverse_quartic(Sign::Plus, rf("0"), rf("0"))).unwrap();
    // u = c v turns the leading coefficient 1/u_1^4 into 1/(c^6 u_1^4)
    pushforward_operator(&op, &sub("y", scale)).unwrap()
}

#[test]
fn normalize_quartic_rescaling() {
    // leading coefficient 1/(64 u_1^4): ψ' = 64^(-1/6) = 1/2
    let n = normalize_leading_coefficient(&quartic("2*v"), &cfg()).unwrap();
    assert_eq!(n.substitution.psi(), &yv("v/2"));
    assert_eq!(n.operator.leading(), Some(&yv("v_1^(-4)")));
    // 1/(16 u_1^4) needs ψ' = (1/4)^(1/3)
    let op = quartic("v").scale(&Coeff::real(Rat::new(1, 16)));
    let n = normalize_leading_coefficient(&op, &cfg()).unwrap();
    assert!(n.substitution.psi().has_kernels());
    assert!(n.check.verdict.is_zero());
    assert_eq!(n.target, yv("v_1^(-4)"));
}

#[test]
fn normalize_identity_when_normal() {
    let op = quartic("v");
    let n = normalize_leading_coefficient(&op, &cfg()).unwrap();
    assert!(n.substitution.is_identity());
    assert_eq!(n.operator, op);
}

#[test]
fn normalize_constant_leading() {
    let op = DiffOp::dx_pow(5).scale(&Coeff::int(4));
    let n = normalize_leading_coefficient(&op, &cfg()).unwrap();
    assert_eq!(n.substitution.psi(), &yv("2*v"));
    assert_eq!(n.operator.leading(), Some(&RatFn::one()));
}

#[test]
fn normalize_shifted_quartic() {
    // x = y + v maps 1/u_1^4 to 1/(u_1 + ...)^4-type leading coefficients
    let op = quartic("v");
    let shifted = pushforward_operator(&op, &sub("y - v", "v")).unwrap();
    let n = normalize_leading_coefficient(&shifted, &cfg()).unwrap();
    assert!(n.check.verdict.is_zero(), "{:?}", n);
}

#[test]
fn constant_power_exact_and_kernel() {
    assert_eq!(const_power(&Rat::int(16), &Rat::new(-1, 2)).unwrap(), RatFn::ratio(1, 4));
    let c = const_power(&Rat::int(4), &Rat::new(-1, 3)).unwrap();
    assert!(c.has_kernels());
}
