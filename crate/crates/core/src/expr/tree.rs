//! Expression trees: the form users write and read.
//!
//! Trees are converted to [`RatFn`] for any computation; [`Expr::normalize`]
//! goes there and back, producing `numerator / denominator` with both sides
//! expanded.

use std::fmt;
use std::sync::Arc;

use super::atom::{FuncSym, Kernel};
use super::number::{Coeff, Rat, Scalar};
use super::ratfn::RatFn;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(Scalar),
    X,
    /// `u_k`; `Jet(0)` is `u`.
    Jet(u32),
    TestJet {
        set: u32,
        order: u32,
    },
    Param(Arc<str>),
    Func(FuncSym),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Box<Expr>, i32),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Apply(Kernel, Box<Expr>),
}

impl Expr {
    pub fn int(n: i64) -> Expr {
        Expr::Num(Scalar::int(n))
    }

    pub fn coeff(c: &Coeff) -> Expr {
        Expr::Num(Scalar::from_coeff(c))
    }

    pub fn param(name: &str) -> Expr {
        Expr::Param(name.into())
    }

    /// Converts to the canonical rational form.
    pub fn to_ratfn(&self) -> Result<RatFn> {
        Ok(match self {
            Expr::Num(s) => match s {
                Scalar::Float(z) => {
                    let re = RatFn::float(z.re)?;
                    if z.im == 0.0 {
                        re
                    } else {
                        re.add(&RatFn::float(z.im)?.mul(&RatFn::imag_unit()))
                    }
                }
                exact => RatFn::constant(exact.to_coeff().expect("exact scalar")),
            },
            Expr::X => RatFn::x(),
            Expr::Jet(k) => RatFn::jet(*k as usize)?,
            Expr::TestJet { set, order } => RatFn::test_jet(*set, *order as usize)?,
            Expr::Param(p) => RatFn::param(p),
            Expr::Func(s) => RatFn::func(s.clone()),
            Expr::Add(ts) => {
                let mut acc = RatFn::zero();
                for t in ts {
                    acc = acc.add(&t.to_ratfn()?);
                }
                acc
            }
            Expr::Mul(fs) => {
                let mut acc = RatFn::one();
                for f in fs {
                    acc = acc.mul(&f.to_ratfn()?);
                }
                acc
            }
            Expr::Pow(b, e) => b.to_ratfn()?.pow(*e)?,
            Expr::Div(a, b) => a.to_ratfn()?.mul(&b.recip_ratfn()?),
            Expr::Neg(a) => a.to_ratfn()?.neg(),
            Expr::Apply(k, a) => RatFn::kernel(*k, &a.to_ratfn()?)?,
        })
    }

    /// `1/self`, inverting products factor by factor so that a factored
    /// denominator keeps its factors.
    fn recip_ratfn(&self) -> Result<RatFn> {
        match self {
            Expr::Mul(fs) => {
                let mut acc = RatFn::one();
                for f in fs {
                    acc = acc.mul(&f.recip_ratfn()?);
                }
                Ok(acc)
            }
            Expr::Pow(b, e) if *e > 0 => b.recip_ratfn()?.pow(*e),
            _ => self.to_ratfn()?.recip(),
        }
    }

    /// Canonical form as a tree; idempotent.
    pub fn normalize(&self) -> Result<Expr> {
        Ok(self.to_ratfn()?.to_expr())
    }

    fn is_atomic(&self) -> bool {
        match self {
            Expr::X
            | Expr::Jet(_)
            | Expr::TestJet { .. }
            | Expr::Param(_)
            | Expr::Func(_)
            | Expr::Apply(..) => true,
            Expr::Num(s) => match s.to_coeff() {
                Some(c) => c.is_real() && c.re.is_integer() && c.re.signum() >= 0,
                None => matches!(s, Scalar::Float(z) if z.im == 0.0 && z.re >= 0.0),
            },
            _ => false,
        }
    }

    /// Whether the term prints with a leading minus sign that can be
    /// folded into a preceding `-`.
    fn negated(&self) -> Option<Expr> {
        match self {
            Expr::Neg(a) => Some((**a).clone()),
            Expr::Num(s) => match s.to_coeff() {
                Some(c) if c.is_negative_real() => Some(Expr::coeff(&c.neg())),
                _ => None,
            },
            Expr::Mul(fs) => match fs.first() {
                Some(Expr::Num(s)) => match s.to_coeff() {
                    Some(c) if c.is_negative_real() => {
                        let mut rest = fs.clone();
                        let pos = c.neg();
                        if pos.is_one() {
                            rest.remove(0);
                        } else {
                            rest[0] = Expr::coeff(&pos);
                        }
                        Some(if rest.len() == 1 {
                            rest.pop().unwrap()
                        } else {
                            Expr::Mul(rest)
                        })
                    }
                    _ => None,
                },
                _ => None,
            },
            _ => None,
        }
    }
}

fn fmt_factor(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e {
        Expr::Add(_) | Expr::Neg(_) | Expr::Div(..) => write!(f, "({e})"),
        Expr::Num(s) => match s.to_coeff() {
            Some(c) if c.is_real() && c.re.signum() >= 0 => write!(f, "{e}"),
            Some(c) if !c.is_real() => write!(f, "{e}"),
            _ => write!(f, "({e})"),
        },
        _ => write!(f, "{e}"),
    }
}

fn fmt_base(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if e.is_atomic() {
        write!(f, "{e}")
    } else {
        write!(f, "({e})")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(s) => write!(f, "{s}"),
            Expr::X => write!(f, "x"),
            Expr::Jet(0) => write!(f, "u"),
            Expr::Jet(k) => write!(f, "u_{k}"),
            Expr::TestJet { set, order } => write!(f, "w{set}_{order}"),
            Expr::Param(p) => write!(f, "{p}"),
            Expr::Func(s) => write!(f, "{s}"),
            Expr::Add(ts) => {
                for (i, t) in ts.iter().enumerate() {
                    match t.negated() {
                        Some(p) if i > 0 => write!(f, " - {p}")?,
                        _ if i > 0 => write!(f, " + {t}")?,
                        _ => write!(f, "{t}")?,
                    }
                }
                Ok(())
            }
            Expr::Mul(fs) => {
                for (i, x) in fs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "*")?;
                    }
                    if i == 0 {
                        if let Expr::Num(s) = x {
                            if s.to_coeff().map(|c| c.is_real()).unwrap_or(false) {
                                write!(f, "{x}")?;
                                continue;
                            }
                        }
                    }
                    fmt_factor(x, f)?;
                }
                Ok(())
            }
            Expr::Pow(b, e) => {
                fmt_base(b, f)?;
                if *e < 0 {
                    write!(f, "^({e})")
                } else {
                    write!(f, "^{e}")
                }
            }
            Expr::Div(a, b) => {
                match **a {
                    Expr::Add(_) | Expr::Neg(_) | Expr::Div(..) => write!(f, "({a})")?,
                    _ => write!(f, "{a}")?,
                }
                write!(f, "/")?;
                match &**b {
                    Expr::Pow(base, e) if *e > 0 && base.is_atomic() => write!(f, "{b}"),
                    _ => fmt_base(b, f),
                }
            }
            Expr::Neg(a) => {
                write!(f, "-")?;
                match **a {
                    Expr::Add(_) | Expr::Neg(_) => write!(f, "({a})"),
                    _ => write!(f, "{a}"),
                }
            }
            Expr::Apply(k, a) => write!(f, "{}({a})", k.name()),
        }
    }
}

impl From<&RatFn> for Expr {
    fn from(r: &RatFn) -> Expr {
        r.to_expr()
    }
}

impl TryFrom<&Expr> for RatFn {
    type Error = Error;

    fn try_from(e: &Expr) -> Result<RatFn> {
        e.to_ratfn()
    }
}

/// Builds a rational constant expression.
pub fn rational(n: i64, d: i64) -> Expr {
    Expr::coeff(&Coeff::real(Rat::new(n, d)))
}
