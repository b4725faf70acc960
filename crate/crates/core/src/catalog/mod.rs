//! Constructors for the classified operator families.
//!
//! * `third-conjugated`: `±(1/u_1)∘[D³ + 2S D + D(S)]∘(1/u_1) + 2f D + D(f)`
//!   with `S = u_3/u_1 − (3/2)u_2²/u_1²` and `f = f(u)`;
//! * `third-linear`: `±[D³ + 2A u D + A u_1]`, `A > 0`;
//! * `third-constant`: `±[D³ + A D]`;
//! * `fifth-unit`: fifth order with leading coefficient `±1`, either with
//!   coefficients built from `α(x), β(x), γ(x)` or with `b(x), c(x)` given;
//! * `fifth-inverse-quartic`: fifth order with leading coefficient
//!   `±1/u_1⁴`, built from `α(u), β(u)`.

mod relations;

use std::fmt;

pub use relations::{verify_coefficient_relations, RelationCheck, RELATIONS};

use crate::diffop::{DiffOp, HamiltonianReport};
use crate::error::{Error, Result};
use crate::expr::{classify, Coeff, IdKind, ProbeConfig, RatFn};
use crate::jetcalc::{total_derivative, total_derivative_n};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn coeff(self) -> Coeff {
        Coeff::int(self.value())
    }

    pub fn parse(s: &str) -> Option<Sign> {
        match s {
            "+" | "plus" | "1" | "+1" => Some(Sign::Plus),
            "-" | "minus" | "-1" => Some(Sign::Minus),
            _ => None,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// Parameters of the leading-coefficient-one fifth-order family.
#[derive(Clone, Debug, PartialEq)]
pub enum UnitParams {
    /// `α, β, γ` functions of `x`. With `β ≢ 0`, `γ` must equal the value
    /// derived from some constant `ρ`.
    Explicit {
        alpha: RatFn,
        beta: RatFn,
        gamma: RatFn,
    },
    /// `γ = −ρ/β² − β''/(2β) + (β')²/(4β²)` derived from the constant `ρ`.
    Rho {
        alpha: RatFn,
        beta: RatFn,
        rho: RatFn,
    },
    /// `b, c` functions of `x` alone.
    Quasiconstant { b: RatFn, c: RatFn },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    ThirdConjugated { f: RatFn },
    ThirdLinear { a: RatFn },
    ThirdConstant { a: RatFn },
    FifthUnit(UnitParams),
    FifthInverseQuartic { alpha: RatFn, beta: RatFn },
}

impl Family {
    pub fn tag(&self) -> &'static str {
        match self {
            Family::ThirdConjugated { .. } => "third-conjugated",
            Family::ThirdLinear { .. } => "third-linear",
            Family::ThirdConstant { .. } => "third-constant",
            Family::FifthUnit(_) => "fifth-unit",
            Family::FifthInverseQuartic { .. } => "fifth-inverse-quartic",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FamilySpec {
    pub family: Family,
    pub sign: Sign,
}

impl FamilySpec {
    pub fn new(family: Family, sign: Sign) -> FamilySpec {
        FamilySpec { family, sign }
    }

    pub fn fifth_inverse_quartic(sign: Sign, alpha: RatFn, beta: RatFn) -> FamilySpec {
        FamilySpec::new(Family::FifthInverseQuartic { alpha, beta }, sign)
    }

    pub fn fifth_unit(sign: Sign, params: UnitParams) -> FamilySpec {
        FamilySpec::new(Family::FifthUnit(params), sign)
    }

    pub fn third_conjugated(sign: Sign, f: RatFn) -> FamilySpec {
        FamilySpec::new(Family::ThirdConjugated { f }, sign)
    }

    pub fn third_linear(sign: Sign, a: RatFn) -> FamilySpec {
        FamilySpec::new(Family::ThirdLinear { a }, sign)
    }

    pub fn third_constant(sign: Sign, a: RatFn) -> FamilySpec {
        FamilySpec::new(Family::ThirdConstant { a }, sign)
    }
}

/// Which coordinates a parameter may depend on.
#[derive(Clone, Copy)]
enum Dep {
    Const,
    X,
    U,
}

fn check_dep(name: &str, f: &RatFn, dep: Dep) -> Result<()> {
    for id in f.all_vars() {
        let ok = match classify(id) {
            IdKind::X => matches!(dep, Dep::X),
            IdKind::Jet(0) => matches!(dep, Dep::U),
            IdKind::Jet(_) | IdKind::TestJet(..) => false,
            IdKind::Dynamic => matches!(
                crate::expr::Atom::from_id(id),
                crate::expr::Atom::Param(_) | crate::expr::Atom::Kernel(..)
            ),
        };
        if !ok {
            let what = match dep {
                Dep::Const => "a constant",
                Dep::X => "a function of x only",
                Dep::U => "a function of u only",
            };
            return Err(Error::InvalidParameter(format!(
                "{name} must be {what}, got {}",
                f.to_expr()
            )));
        }
    }
    Ok(())
}

fn u(k: usize) -> RatFn {
    RatFn::jet(k).expect("low jet orders are always in range")
}

fn q(n: i64, d: i64) -> Coeff {
    Coeff::real(crate::expr::Rat::new(n, d))
}

/// `S = u_3/u_1 − (3/2) u_2²/u_1²`.
pub fn schwarzian_s() -> RatFn {
    let u1 = u(1);
    u(3).div(&u1).expect("u_1 is nonzero").sub(
        &u(2)
            .pow(2)
            .expect("power")
            .div(&u1.pow(2).expect("power"))
            .expect("u_1 is nonzero")
            .scale(&q(3, 2)),
    )
}

/// `b` for leading coefficient `sign/u_1⁴`.
pub fn inverse_quartic_b(sign: Sign, alpha: &RatFn) -> Result<RatFn> {
    let s = sign.coeff();
    let (u1, u2, u3) = (u(1), u(2), u(3));
    let inner = u3
        .mul(&u1)
        .scale(&Coeff::int(10))
        .sub(&u2.pow(2)?.scale(&Coeff::int(55)))
        .scale(&s)
        .add(&alpha.mul(&u1.pow(4)?).scale(&Coeff::int(2)));
    inner.div(&u1.pow(6)?.scale(&Coeff::int(2)))
}

/// `c` for leading coefficient `sign/u_1⁴`.
pub fn inverse_quartic_c(sign: Sign, alpha: &RatFn, beta: &RatFn) -> Result<RatFn> {
    let s = sign.coeff();
    let (u1, u2, u3, u4, u5) = (u(1), u(2), u(3), u(4), u(5));
    let da = alpha.diff(crate::expr::Atom::jet_id(0)?)?;
    let p = |e: &RatFn, n: i32| e.pow(n);
    let signed = p(&u1, 3)?
        .mul(&u5)
        .scale(&Coeff::int(-3))
        .add(&p(&u1, 2)?.mul(&u2).mul(&u4).scale(&Coeff::int(65)))
        .add(&p(&u1, 2)?.mul(&p(&u3, 2)?).scale(&Coeff::int(50)))
        .sub(&u1.mul(&p(&u2, 2)?).mul(&u3).scale(&Coeff::int(615)))
        .add(&p(&u2, 4)?.scale(&Coeff::int(735)))
        .scale(&s);
    let free = p(&u1, 6)?
        .mul(&u2)
        .mul(&da)
        .scale(&Coeff::int(3))
        .add(&p(&u1, 5)?.mul(&u3).mul(alpha).scale(&Coeff::int(2)))
        .sub(&p(&u1, 4)?.mul(&p(&u2, 2)?).mul(alpha).scale(&Coeff::int(6)))
        .add(&beta.mul(&p(&u1, 8)?));
    free.add(&signed).div(&p(&u1, 8)?)
}

/// `γ = −ρ/β² − β''/(2β) + (β')²/(4β²)` for `β(x) ≢ 0`.
pub fn unit_gamma(beta: &RatFn, rho: &RatFn) -> Result<RatFn> {
    let b1 = total_derivative(beta)?;
    let b2 = total_derivative(&b1)?;
    let b_sq = beta.pow(2)?;
    Ok(rho
        .div(&b_sq)?
        .neg()
        .sub(&b2.div(&beta.scale(&Coeff::int(2)))?)
        .add(&b1.pow(2)?.div(&b_sq.scale(&Coeff::int(4)))?))
}

/// `b` and `c` of the leading-coefficient-one family for `α, β, γ`.
pub fn unit_bc(alpha: &RatFn, beta: &RatFn, gamma: &RatFn) -> Result<(RatFn, RatFn)> {
    let z = u(0).add(alpha);
    let zs: Vec<RatFn> = crate::jetcalc::total_derivatives(&z, 4)?;
    let w = beta.mul(&z).add(gamma);
    let w1 = total_derivative(&w)?;
    let b1 = total_derivative(beta)?;
    let b2 = total_derivative(&b1)?;
    let (z0, z1, z2, z3, z4) = (&zs[0], &zs[1], &zs[2], &zs[3], &zs[4]);
    let zp = |n: i32| z0.pow(n);
    let b = z2
        .div(z0)?
        .scale(&q(3, 2))
        .sub(&z1.pow(2)?.div(&zp(2)?)?.scale(&q(7, 4)))
        .add(&beta.mul(z0))
        .add(gamma);
    let terms: Vec<RatFn> = vec![
        z4.div(z0)?.neg(),
        beta.mul(&z1.pow(2)?).div(&z0.scale(&Coeff::int(2)))?,
        w.mul(z2).div(&z0.scale(&Coeff::int(2)))?,
        w.mul(&z1.pow(2)?).div(&zp(2)?.scale(&Coeff::int(4)))?.neg(),
        w1.mul(z1).div(z0)?.neg(),
        z1.mul(z3).div(&zp(2)?)?.scale(&q(9, 2)),
        z1.pow(2)?.mul(z2).div(&zp(3)?)?.scale(&q(-129, 8)),
        z1.pow(4)?.div(&zp(4)?)?.scale(&q(273, 32)),
        z2.pow(2)?.div(&zp(2)?)?.scale(&q(33, 8)),
        beta.mul(z2).scale(&q(-1, 2)),
        z0.mul(&b2).scale(&q(-3, 2)),
        b1.mul(z1).scale(&q(-1, 2)),
        beta.pow(2)?.mul(&zp(2)?).scale(&q(-1, 2)),
        w.pow(2)?.scale(&q(1, 2)),
    ];
    let c = crate::diffop::sum(terms);
    Ok((b, c))
}

/// Builds the operator for a family specification.
pub fn build(spec: &FamilySpec) -> Result<DiffOp> {
    let s = spec.sign.coeff();
    match &spec.family {
        Family::ThirdConjugated { f } => {
            check_dep("f", f, Dep::U)?;
            let sch = schwarzian_s();
            let inner = DiffOp::from_coeffs(vec![
                total_derivative(&sch)?,
                sch.scale(&Coeff::int(2)),
                RatFn::zero(),
                RatFn::one(),
            ]);
            let inv_u1 = DiffOp::mult(u(1).recip()?);
            let core = inv_u1.compose(&inner)?.compose(&inv_u1)?.scale(&s);
            Ok(core.add(&DiffOp::from_symmetrized(&[(f.clone(), 1)])?))
        }
        Family::ThirdLinear { a } => {
            check_dep("A", a, Dep::Const)?;
            match a.as_constant() {
                Some(c) if c.is_real() && c.re.signum() > 0 => {}
                _ => {
                    return Err(Error::InvalidParameter(format!(
                        "A must be a positive constant, got {}",
                        a.to_expr()
                    )))
                }
            }
            Ok(DiffOp::from_coeffs(vec![
                a.mul(&u(1)),
                a.mul(&u(0)).scale(&Coeff::int(2)),
                RatFn::zero(),
                RatFn::one(),
            ])
            .scale(&s))
        }
        Family::ThirdConstant { a } => {
            check_dep("A", a, Dep::Const)?;
            Ok(
                DiffOp::from_coeffs(vec![RatFn::zero(), a.clone(), RatFn::zero(), RatFn::one()])
                    .scale(&s),
            )
        }
        Family::FifthUnit(p) => {
            let (b, c) = match p {
                UnitParams::Quasiconstant { b, c } => {
                    check_dep("b", b, Dep::X)?;
                    check_dep("c", c, Dep::X)?;
                    (b.clone(), c.clone())
                }
                UnitParams::Explicit { alpha, beta, gamma } => {
                    check_dep("alpha", alpha, Dep::X)?;
                    check_dep("beta", beta, Dep::X)?;
                    check_dep("gamma", gamma, Dep::X)?;
                    if !beta.is_zero() && !gamma_is_admissible(beta, gamma)? {
                        return Err(Error::InvalidParameter(
                            "with beta nonzero, gamma must be -rho/beta^2 - beta''/(2 beta) + beta'^2/(4 beta^2) for a constant rho".into(),
                        ));
                    }
                    unit_bc(alpha, beta, gamma)?
                }
                UnitParams::Rho { alpha, beta, rho } => {
                    check_dep("alpha", alpha, Dep::X)?;
                    check_dep("beta", beta, Dep::X)?;
                    check_dep("rho", rho, Dep::Const)?;
                    if beta.is_zero() {
                        return Err(Error::InvalidParameter(
                            "rho determines gamma only for beta nonzero".into(),
                        ));
                    }
                    let gamma = unit_gamma(beta, rho)?;
                    unit_bc(alpha, beta, &gamma)?
                }
            };
            let op = DiffOp::from_symmetrized(&[(RatFn::ratio(1, 2), 5), (b, 3), (c, 1)])?;
            Ok(op.scale(&s))
        }
        Family::FifthInverseQuartic { alpha, beta } => {
            check_dep("alpha", alpha, Dep::U)?;
            check_dep("beta", beta, Dep::U)?;
            let a = u(1).pow(-4)?.scale(&q(1, 2)).scale(&s);
            let b = inverse_quartic_b(spec.sign, alpha)?;
            let c = inverse_quartic_c(spec.sign, alpha, beta)?;
            DiffOp::from_symmetrized(&[(a, 5), (b, 3), (c, 1)])
        }
    }
}

/// `γ` is admissible for `β ≢ 0` iff `ρ = −β²(γ + β''/(2β) − (β')²/(4β²))`
/// is constant.
fn gamma_is_admissible(beta: &RatFn, gamma: &RatFn) -> Result<bool> {
    let b1 = total_derivative(beta)?;
    let b2 = total_derivative(&b1)?;
    let b_sq = beta.pow(2)?;
    let inner = gamma
        .add(&b2.div(&beta.scale(&Coeff::int(2)))?)
        .sub(&b1.pow(2)?.div(&b_sq.scale(&Coeff::int(4)))?);
    let rho = b_sq.mul(&inner).neg();
    Ok(total_derivative_n(&rho, 1)?.is_zero())
}

/// Runs the Hamiltonian check on the built operator.
pub fn verify_family_hamiltonian(
    spec: &FamilySpec,
    cfg: &ProbeConfig,
) -> Result<HamiltonianReport> {
    build(spec)?.is_hamiltonian(cfg)
}

/// Relation checks together with the Jacobi check of the same operator.
/// Relations failing while the Jacobi condition holds are reported as
/// suspect transcriptions.
#[derive(Clone, Debug)]
pub struct RelationAudit {
    pub checks: Vec<RelationCheck>,
    pub hamiltonian: HamiltonianReport,
    pub suspect: Vec<u32>,
}

pub fn audit_coefficient_relations(
    alpha: &RatFn,
    beta: &RatFn,
    sign: Sign,
    cfg: &ProbeConfig,
) -> Result<RelationAudit> {
    let checks = verify_coefficient_relations(alpha, beta, sign, cfg)?;
    let hamiltonian = verify_family_hamiltonian(
        &FamilySpec::fifth_inverse_quartic(sign, alpha.clone(), beta.clone()),
        cfg,
    )?;
    let suspect = if hamiltonian.is_hamiltonian() {
        checks
            .iter()
            .filter(|c| !c.report.verdict.is_zero())
            .map(|c| c.index)
            .collect()
    } else {
        Vec::new()
    };
    Ok(RelationAudit {
        checks,
        hamiltonian,
        suspect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn rf(s: &str) -> RatFn {
        parse(s).unwrap().to_ratfn().unwrap()
    }

    #[test]
    fn constant_alpha_beta_coefficients() {
        let b = inverse_quartic_b(Sign::Plus, &rf("1/2")).unwrap();
        assert_eq!(b, rf("(10*u_3*u_1 - 55*u_2^2 + u_1^4)/(2*u_1^6)"));
        let c = inverse_quartic_c(Sign::Plus, &rf("1/2"), &rf("-1")).unwrap();
        let expect = rf("(u_1^5*u_3 - 3*u_1^4*u_2^2 - u_1^8 - 3*u_1^3*u_5 + 65*u_1^2*u_2*u_4 + 50*u_1^2*u_3^2 - 615*u_1*u_2^2*u_3 + 735*u_2^4)/u_1^8");
        assert_eq!(c, expect);
    }

    #[test]
    fn sine_alpha_puts_cosine_in_c() {
        let c = inverse_quartic_c(Sign::Plus, &rf("sin(u)"), &rf("sin(u) + u")).unwrap();
        // α' = cos u enters only through 3 u_2 α'/u_1²
        let cos_id = rf("cos(u)").vars()[0];
        assert!(c.vars().contains(&cos_id));
        assert!(!c.sub(&rf("3*u_2*cos(u)/u_1^2")).vars().contains(&cos_id));
    }

    #[test]
    fn inverse_quartic_leading_coefficient() {
        for sign in [Sign::Plus, Sign::Minus] {
            let op = build(&FamilySpec::fifth_inverse_quartic(sign, rf("u"), rf("u^2"))).unwrap();
            assert_eq!(op.order(), Some(5));
            assert_eq!(op.leading().unwrap(), &rf("1/u_1^4").scale(&sign.coeff()));
            assert!(op.is_skew_adjoint().unwrap());
        }
    }

    #[test]
    fn unit_leading_coefficient_is_sign() {
        let op = build(&FamilySpec::fifth_unit(
            Sign::Plus,
            UnitParams::Explicit {
                alpha: RatFn::zero(),
                beta: RatFn::zero(),
                gamma: rf("x"),
            },
        ))
        .unwrap();
        assert_eq!(op.leading().unwrap(), &RatFn::one());
        let op = build(&FamilySpec::fifth_unit(
            Sign::Minus,
            UnitParams::Quasiconstant {
                b: RatFn::zero(),
                c: RatFn::zero(),
            },
        ))
        .unwrap();
        assert_eq!(op, DiffOp::dx_pow(5).neg());
    }

    #[test]
    fn parameter_validation() {
        assert!(build(&FamilySpec::third_linear(Sign::Plus, rf("-1"))).is_err());
        assert!(build(&FamilySpec::third_linear(Sign::Plus, rf("0"))).is_err());
        assert!(build(&FamilySpec::third_conjugated(Sign::Plus, rf("x"))).is_err());
        assert!(build(&FamilySpec::fifth_inverse_quartic(
            Sign::Plus,
            rf("u_1"),
            rf("0")
        ))
        .is_err());
        let bad = UnitParams::Explicit {
            alpha: RatFn::zero(),
            beta: RatFn::one(),
            gamma: rf("x"),
        };
        assert!(build(&FamilySpec::fifth_unit(Sign::Plus, bad)).is_err());
        let good = UnitParams::Explicit {
            alpha: RatFn::zero(),
            beta: RatFn::one(),
            gamma: rf("-3"),
        };
        assert!(build(&FamilySpec::fifth_unit(Sign::Plus, good)).is_ok());
    }

    #[test]
    fn third_constant_zero_is_dx3() {
        assert_eq!(
            build(&FamilySpec::third_constant(Sign::Plus, RatFn::zero())).unwrap(),
            DiffOp::dx_pow(3)
        );
    }

    #[test]
    fn conjugated_form_leading_coefficient() {
        let op = build(&FamilySpec::third_conjugated(Sign::Plus, RatFn::zero())).unwrap();
        assert_eq!(op.order(), Some(3));
        assert_eq!(op.leading().unwrap(), &rf("1/u_1^2"));
        assert!(op.is_skew_adjoint().unwrap());
    }
}
