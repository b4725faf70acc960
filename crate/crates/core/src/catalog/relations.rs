//! Necessary conditions on `b` and `c` for a Hamiltonian operator with
//! leading coefficient `1/(2u_1⁴)` in the symmetrized form
//! `aD⁵ + D⁵∘a + bD³ + D³∘b + cD + D∘c`.
//!
//! Each relation is stored as text with placeholders bound at check time:
//! `b`, `c` are the coefficients, `_uK` suffixes take partial derivatives in
//! order (`_u` is `∂/∂u`), and a `D` or `Dn` prefix applies `D_x` `n` times
//! after the partials. `b_u2_u1_u` is `∂³b/∂u_2∂u_1∂u`, `D2b_u2` is
//! `D_x²(∂b/∂u_2)`.

use std::collections::BTreeSet;

use rustc_hash::FxHashMap;

use super::{inverse_quartic_b, inverse_quartic_c, Sign};
use crate::error::{Error, Result};
use crate::expr::{parse_with, Atom, ParseContext, ProbeConfig, ProbeReport, RatFn, ZeroVerdict};
use crate::jetcalc::total_derivative_n;

/// `(index, lhs, rhs)`.
pub const RELATIONS: &[(u32, &str, &str)] = &[
    (1, "c_u6", "0"),
    (2, "b_u4", "0"),
    (3, "c_u5", "-3/u_1^5"),
    (4, "b_u3", "5/u_1^5"),
    (5, "c_u4", "(85*u_2 - 2*b_u2*u_1^6)/(3*u_1^6)"),
    (
        6,
        "c_u3",
        "(-16*b_u2*u_1^6*u_2 - 225*u_1*u_3 - 9*Db_u2*u_1^7 + 410*u_2^2 + 6*b*u_1^6)/(3*u_1^7)",
    ),
    (
        7,
        "b_u1",
        "(26*b_u2*u_1^6*u_2 + 340*u_1*u_3 + 7*Db_u2*u_1^7 - 550*u_2^2 - 6*b*u_1^6)/(3*u_1^7)",
    ),
    (
        8,
        "c_u2",
        "(-3*b_u*u_1^8 + 140*b_u2*u_1^6*u_2^2 + 80*b*u_1^6*u_2 + 11390*u_1*u_2*u_3 - 96*b_u2*u_1^7*u_3 \
         - 14260*u_2^3 - 27*D2b_u2*u_1^8 + 21*Db*u_1^7 - 1200*u_1^2*u_4 + 2*b_u2*b*u_1^12 \
         - 82*Db_u2*u_1^7*u_2)/(6*u_1^8)",
    ),
    (
        9,
        "c_u1",
        "(18*b_u*u_1^8*u_2 - 42*Db_u2*u_1^7*u_2^2 + 416*b_u2*u_1^6*u_2^3 - 271*Db*u_1^7*u_2 \
         - 856*b*u_1^6*u_2^2 + 80*b*u_1^7*u_3 + 14730*u_1^2*u_2*u_4 - 214*Db_u2*u_1^8*u_3 \
         - 68*b_u2*u_1^8*u_4 - 136*D2b_u2*u_1^8*u_2 + 2*Db_u2*b*u_1^13 - 4*b_u2*Db*u_1^13 \
         - 92450*u_1*u_2^2*u_3 - 1080*u_1^3*u_5 - 21*D3b_u2*u_1^9 + 3*D2b*u_1^8 + 7610*u_1^2*u_3^2 \
         - 3*Db_u*u_1^9 - 404*b_u2*u_1^7*u_2*u_3 - 4*b_u2*b*u_1^12*u_2 + 87920*u_2^4)/(6*u_1^9)",
    ),
    (
        10,
        "c_u",
        "(-21*D4b_u2*u_1^10 + 9*D2b_u*u_1^10 + 28410*u_1^3*u_3*u_4 + 15730*u_1^3*u_2*u_5 \
         - 66*D2b*u_1^8*u_2 - 608*Db*u_1^7*u_2^2 - 717*Db*u_1^8*u_3 - 13280*b*u_1^6*u_2^3 \
         - 660*b*u_1^8*u_4 - 205510*u_1^2*u_2*u_3^2 - 139340*u_1^2*u_2^2*u_4 + 838900*u_1*u_2^3*u_3 \
         - 80*Db*b_u2*u_1^13*u_2 - 1416*b_u2*u_1^7*u_2^2*u_3 - 2062*Db_u2*u_1^8*u_2*u_3 \
         - 464*b_u2*b*u_1^12*u_2^2 - 32*b_u2*b*u_1^13*u_3 - 120*Db_u2*b*u_1^13*u_2 \
         - 744*b_u2*u_1^8*u_2*u_4 - 673120*u_2^5 + 440*c*u_1^8*u_2 - 6*Db*b*u_1^13 \
         - 232*b^2*u_1^12*u_2 - 1092*u_1^4*u_6 - 9*D3b*u_1^9 + 6*Dc*u_1^9 \
         - 252*D3b_u2*u_1^9*u_2 - 956*D2b_u2*u_1^8*u_2^2 - 408*D2b_u2*u_1^9*u_3 + 8*c*b_u2*u_1^14 \
         + 6*b_u*b*u_1^14 - 4*b^2*b_u2*u_1^18 - 1304*Db_u2*u_1^7*u_2^3 - 282*Db_u2*u_1^9*u_4 \
         - 2200*b_u2*u_1^6*u_2^4 - 68*b_u2*u_1^9*u_5 + 66*Db_u*u_1^9*u_2 + 192*b_u*u_1^8*u_2^2 \
         + 12*b_u*u_1^9*u_3 - 12*D2b_u2*b*u_1^14 - 12*Db_u2*Db*u_1^14 - 708*b_u2*u_1^8*u_3^2 \
         + 3124*b*u_1^7*u_2*u_3)/(6*u_1^10)",
    ),
    (
        11,
        "0",
        "1197*u_1^8*b_u2_u + 252*u_1^9*b_u2_u1_u + 2034*b*u_1^6 + 378*u_1^10*b_u2_u2_u_u \
         - 71865*u_3*u_1 + 27*u_1^7*b_u1 + 16*u_1^12*b_u2^2 + 756*u_1^8*u_2*u_3*b_u2_u2_u2_u1 \
         + 392590*u_2^2 + 2268*u_1^7*u_2*u_3*b_u2_u2_u2 + 378*u_1^8*u_2^2*b_u2_u2_u1_u1 \
         + 36*b*u_1^12*b_u2_u2 + 2868*u_1^6*u_2^2*b_u2_u2 + 756*u_1^9*u_3*b_u2_u2_u2_u \
         + 3926*u_1^6*u_2*b_u2 + 756*u_1^9*u_2*b_u2_u2_u1_u + 378*u_1^8*u_3^2*b_u2_u2_u2_u2 \
         + 630*u_1^8*u_3*b_u2_u2_u1 + 252*u_1^8*u_2*b_u2_u1_u1 + 1929*u_1^7*u_2*b_u2_u1 \
         + 2268*u_1^7*u_2^2*b_u2_u2_u1 + 2646*u_1^8*u_2*b_u2_u2_u + 2466*u_1^7*u_3*b_u2_u2 \
         + 378*u_1^8*u_4*b_u2_u2_u2",
    ),
];

#[derive(Clone, Debug, PartialEq)]
pub struct RelationCheck {
    pub index: u32,
    /// `lhs − rhs` after binding `b` and `c`.
    pub residual: RatFn,
    pub report: ProbeReport,
}

impl RelationCheck {
    pub fn holds(&self) -> bool {
        self.report.verdict.is_zero()
    }
}

/// Splits a placeholder into `(D count, coefficient, partial orders)`.
fn parse_placeholder(name: &str) -> Option<(usize, char, Vec<usize>)> {
    let (d, rest) = match name.strip_prefix('D') {
        Some(r) => {
            let digits: String = r.chars().take_while(char::is_ascii_digit).collect();
            let n = if digits.is_empty() {
                1
            } else {
                digits.parse().ok()?
            };
            (n, &r[digits.len()..])
        }
        None => (0, name),
    };
    let mut chars = rest.chars();
    let which = chars.next().filter(|c| *c == 'b' || *c == 'c')?;
    let mut partials = Vec::new();
    let tail = chars.as_str();
    if !tail.is_empty() {
        for seg in tail.strip_prefix("_u")?.split("_u") {
            partials.push(if seg.is_empty() { 0 } else { seg.parse().ok()? });
        }
    }
    Some((d, which, partials))
}

fn placeholders(src: &str) -> BTreeSet<String> {
    src.split(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
        .filter(|w| parse_placeholder(w).is_some())
        .map(str::to_string)
        .collect()
}

fn bind(name: &str, b: &RatFn, c: &RatFn) -> Result<RatFn> {
    let (d, which, partials) = parse_placeholder(name)
        .ok_or_else(|| Error::InvalidParameter(format!("bad placeholder {name}")))?;
    let mut f = if which == 'b' { b.clone() } else { c.clone() };
    for k in partials {
        f = f.diff(Atom::jet_id(k)?)?;
    }
    total_derivative_n(&f, d)
}

/// Residual `lhs − rhs` of one relation for the given `b`, `c`.
pub fn relation_residual(lhs: &str, rhs: &str, b: &RatFn, c: &RatFn) -> Result<RatFn> {
    let mut names = placeholders(lhs);
    names.extend(placeholders(rhs));
    let ctx = ParseContext::with_params(names.iter().cloned());
    let l = parse_with(lhs, &ctx)?.to_ratfn()?;
    let r = parse_with(rhs, &ctx)?.to_ratfn()?;
    let mut map = FxHashMap::default();
    for n in &names {
        map.insert(Atom::param(n).id()?, bind(n, b, c)?);
    }
    l.sub(&r).substitute(&map)
}

/// Checks every relation for the family with leading coefficient
/// `sign/u_1⁴`. For the minus sign the relations apply to `(−b, −c)`.
pub fn verify_coefficient_relations(
    alpha: &RatFn,
    beta: &RatFn,
    sign: Sign,
    cfg: &ProbeConfig,
) -> Result<Vec<RelationCheck>> {
    let s = sign.coeff();
    let b = inverse_quartic_b(sign, alpha)?.scale(&s);
    let c = inverse_quartic_c(sign, alpha, beta)?.scale(&s);
    RELATIONS
        .iter()
        .map(|(index, lhs, rhs)| {
            let residual = relation_residual(lhs, rhs, &b, &c)?;
            let report = if residual.is_zero() {
                ProbeReport::exact_zero()
            } else if residual.has_kernels() || residual.is_inexact() {
                crate::expr::probe_ratfn(&residual, cfg)?
            } else {
                let mut rep = crate::expr::probe_ratfn(&residual, cfg)?;
                if rep.verdict.is_zero() {
                    rep.verdict = ZeroVerdict::NonZero {
                        witness: Default::default(),
                        value: num_complex::Complex64::new(f64::NAN, 0.0),
                    };
                }
                rep
            };
            Ok(RelationCheck {
                index: *index,
                residual,
                report,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn rf(s: &str) -> RatFn {
        parse(s).unwrap().to_ratfn().unwrap()
    }

    #[test]
    fn placeholder_names() {
        assert_eq!(parse_placeholder("b"), Some((0, 'b', vec![])));
        assert_eq!(parse_placeholder("D2b_u2"), Some((2, 'b', vec![2])));
        assert_eq!(
            parse_placeholder("b_u2_u1_u"),
            Some((0, 'b', vec![2, 1, 0]))
        );
        assert_eq!(parse_placeholder("Dc"), Some((1, 'c', vec![])));
        assert_eq!(parse_placeholder("u_2"), None);
        assert_eq!(parse_placeholder("bx"), None);
    }

    #[test]
    fn all_relations_hold_on_the_family() {
        let cfg = ProbeConfig::default();
        for sign in [Sign::Plus, Sign::Minus] {
            for (a, b) in [("1/2", "-1"), ("u^2", "u^3 - 2"), ("0", "0")] {
                let checks = verify_coefficient_relations(&rf(a), &rf(b), sign, &cfg).unwrap();
                assert_eq!(checks.len(), 11);
                for ch in checks {
                    assert!(
                        ch.holds(),
                        "relation {} fails for sign {sign}, alpha {a}: {}",
                        ch.index,
                        ch.residual.to_expr()
                    );
                }
            }
        }
    }

    #[test]
    fn relations_detect_a_wrong_b() {
        let b = rf("(10*u_1*u_3 - 54*u_2^2)/(2*u_1^6)");
        let c = inverse_quartic_c(Sign::Plus, &RatFn::zero(), &RatFn::zero()).unwrap();
        let (_, l, r) = RELATIONS.iter().find(|r| r.0 == 7).unwrap();
        assert!(!relation_residual(l, r, &b, &c).unwrap().is_zero());
    }
}
