//! Evaluation at numeric jet points.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use rustc_hash::FxHashMap;

use super::atom::{classify, Atom, IdKind, Kernel, VarId};
use super::number::{Coeff, Scalar};
use super::poly::Poly;
use super::ratfn::RatFn;
use super::tree::Expr;
use crate::error::{Error, Result};

/// A numeric assignment to jet coordinates, test-function jets, parameters
/// and unknown-function partials.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct JetPoint {
    values: FxHashMap<VarId, Scalar>,
    /// Lower bound on `|value|` that every sampled coordinate satisfies.
    pub min_abs: Option<f64>,
}

impl JetPoint {
    pub fn new() -> JetPoint {
        JetPoint::default()
    }

    pub fn set(&mut self, id: VarId, v: Scalar) -> &mut JetPoint {
        self.values.insert(id, v);
        self
    }

    pub fn with(mut self, id: VarId, v: impl Into<Scalar>) -> JetPoint {
        self.values.insert(id, v.into());
        self
    }

    pub fn with_x(self, v: impl Into<Scalar>) -> JetPoint {
        self.with(Atom::x_id(), v)
    }

    pub fn with_jet(self, k: usize, v: impl Into<Scalar>) -> Result<JetPoint> {
        Ok(self.with(Atom::jet_id(k)?, v))
    }

    pub fn with_param(self, name: &str, v: impl Into<Scalar>) -> JetPoint {
        let id = Atom::param(name).id().expect("parameters always intern");
        self.with(id, v)
    }

    pub fn get(&self, id: VarId) -> Option<&Scalar> {
        self.values.get(&id)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Assignments keyed by the printed atom name, in a stable order.
    pub fn named(&self) -> BTreeMap<String, Scalar> {
        self.values
            .iter()
            .map(|(id, v)| (Atom::from_id(*id).to_string(), v.clone()))
            .collect()
    }
}

impl fmt::Display for JetPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let named = self.named();
        write!(f, "{{")?;
        for (i, (k, v)) in named.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{k}={v}")?;
        }
        write!(f, "}}")
    }
}

fn unassigned(id: VarId) -> Error {
    Error::Unassigned(Atom::from_id(id).to_string())
}

/// Evaluates an expression; exact when the expression and the point are.
pub fn eval(e: &Expr, p: &JetPoint) -> Result<Scalar> {
    eval_ratfn(&e.to_ratfn()?, p)
}

pub fn eval_ratfn(r: &RatFn, p: &JetPoint) -> Result<Scalar> {
    if !r.is_inexact() && !r.has_kernels() {
        let mut vals: FxHashMap<VarId, Coeff> = FxHashMap::default();
        let mut exact = true;
        for id in r.vars() {
            match p.get(id) {
                Some(s) => match s.to_coeff() {
                    Some(c) => {
                        vals.insert(id, c);
                    }
                    None => {
                        exact = false;
                        break;
                    }
                },
                None => return Err(unassigned(id)),
            }
        }
        if exact {
            return eval_exact(r, &vals).map(|c| Scalar::from_coeff(&c));
        }
    }
    let mut cache = FxHashMap::default();
    let (v, _) = eval_float(r, &|id| p.get(id).map(Scalar::to_c64), &mut cache)?;
    Ok(Scalar::Float(v))
}

fn eval_exact_poly(p: &Poly, vals: &FxHashMap<VarId, Coeff>) -> Result<Coeff> {
    let mut acc = Coeff::ZERO;
    for (m, c) in p.terms() {
        let mut t = c.clone();
        for &(v, e) in m.0.iter() {
            let x = vals.get(&v).ok_or_else(|| unassigned(v))?;
            t = t.mul(&x.pow(e).ok_or(Error::DivisionByZero)?);
        }
        acc = acc.add(&t);
    }
    Ok(acc)
}

fn eval_exact(r: &RatFn, vals: &FxHashMap<VarId, Coeff>) -> Result<Coeff> {
    let n = eval_exact_poly(r.numer(), vals)?;
    let mut d = Coeff::ONE;
    for (f, e) in r.den_factors() {
        d = d.mul(
            &eval_exact_poly(f, vals)?
                .pow(*e as i32)
                .ok_or(Error::DivisionByZero)?,
        );
    }
    n.div(&d).ok_or(Error::DivisionByZero)
}

pub(crate) fn kernel_value(k: Kernel, z: Complex64) -> Result<Complex64> {
    Ok(match k {
        Kernel::Sin => z.sin(),
        Kernel::Cos => z.cos(),
        Kernel::Exp => z.exp(),
        Kernel::Ln => {
            if z.im == 0.0 && z.re <= 0.0 {
                return Err(Error::Domain(format!("ln of nonpositive value {}", z.re)));
            }
            z.ln()
        }
        Kernel::Sqrt => z.sqrt(),
    })
}

/// Floating evaluation with a magnitude scale: the largest absolute value
/// among the numerator's terms divided by the denominator's magnitude.
pub(crate) fn eval_float(
    r: &RatFn,
    base: &dyn Fn(VarId) -> Option<Complex64>,
    cache: &mut FxHashMap<VarId, Complex64>,
) -> Result<(Complex64, f64)> {
    for id in r.vars() {
        if cache.contains_key(&id) {
            continue;
        }
        let v = match classify(id) {
            IdKind::Dynamic => match Atom::from_id(id) {
                Atom::Kernel(k, arg) => {
                    let (a, _) = eval_float(&arg, base, cache)?;
                    kernel_value(k, a)?
                }
                _ => base(id).ok_or_else(|| unassigned(id))?,
            },
            _ => base(id).ok_or_else(|| unassigned(id))?,
        };
        cache.insert(id, v);
    }
    let (n, scale) = float_poly(r.numer(), cache)?;
    let mut d = Complex64::new(1.0, 0.0);
    for (f, e) in r.den_factors() {
        let (fv, _) = float_poly(f, cache)?;
        d *= fv.powi(*e as i32);
    }
    let dn = d.norm();
    if dn == 0.0 || !dn.is_finite() {
        return Err(Error::DivisionByZero);
    }
    Ok((n / d, scale / dn))
}

fn float_poly(p: &Poly, vals: &FxHashMap<VarId, Complex64>) -> Result<(Complex64, f64)> {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut scale: f64 = 0.0;
    for (m, c) in p.terms() {
        let mut t = c.to_c64();
        for &(v, e) in m.0.iter() {
            let x = vals[&v];
            if e < 0 && x.norm() == 0.0 {
                return Err(Error::DivisionByZero);
            }
            t *= x.powi(e);
        }
        scale = scale.max(t.norm());
        acc += t;
    }
    Ok((acc, scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn exact_and_error_cases() {
        let p = JetPoint::new().with_jet(1, 3).unwrap();
        assert_eq!(eval(&parse("u_1^2").unwrap(), &p).unwrap(), Scalar::int(9));
        let s = parse("u_3/u_1 - 3/2*u_2^2/u_1^2").unwrap();
        let p = JetPoint::new()
            .with_jet(1, 1)
            .unwrap()
            .with_jet(2, 0)
            .unwrap()
            .with_jet(3, 2)
            .unwrap();
        assert_eq!(eval(&s, &p).unwrap(), Scalar::int(2));
        let p = JetPoint::new().with_jet(1, 0).unwrap();
        assert_eq!(
            eval(&parse("1/u_1").unwrap(), &p),
            Err(Error::DivisionByZero)
        );
        let p = JetPoint::new().with_jet(0, -1).unwrap();
        assert!(matches!(
            eval(&parse("ln(u)").unwrap(), &p),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            eval(&parse("u_2").unwrap(), &p),
            Err(Error::Unassigned(_))
        ));
    }

    #[test]
    fn kernels_evaluate_in_floating_point() {
        let p = JetPoint::new().with_jet(0, 1).unwrap();
        let v = eval(&parse("sin(u)^2 + cos(u)^2").unwrap(), &p).unwrap();
        assert!((v.to_c64() - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }
}
