//! Calculus on the jet space: total derivative, order and level, Euler and
//! Fréchet operators, prolonged evolutionary vector fields.

use std::cmp::Ordering;
use std::fmt;

use crate::diffop::DiffOp;
use crate::error::{Error, Result};
use crate::expr::{classify, Atom, IdKind, RatFn, VarId};

/// Differential order: a nonnegative integer, or −∞ for quasiconstants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OrderValue {
    NegInfinity,
    Finite(usize),
}

impl OrderValue {
    pub fn finite(self) -> Option<usize> {
        match self {
            OrderValue::Finite(k) => Some(k),
            OrderValue::NegInfinity => None,
        }
    }
}

impl PartialOrd for OrderValue {
    fn partial_cmp(&self, o: &OrderValue) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for OrderValue {
    fn cmp(&self, o: &OrderValue) -> Ordering {
        match (self, o) {
            (OrderValue::NegInfinity, OrderValue::NegInfinity) => Ordering::Equal,
            (OrderValue::NegInfinity, _) => Ordering::Less,
            (_, OrderValue::NegInfinity) => Ordering::Greater,
            (OrderValue::Finite(a), OrderValue::Finite(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for OrderValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrderValue::NegInfinity => write!(f, "-inf"),
            OrderValue::Finite(k) => write!(f, "{k}"),
        }
    }
}

/// `D_x` on a single atom other than a kernel.
fn total_derivative_atom(id: VarId) -> Result<RatFn> {
    match classify(id) {
        IdKind::X => Ok(RatFn::one()),
        IdKind::Jet(k) => RatFn::jet(k as usize + 1),
        IdKind::TestJet(s, k) => RatFn::test_jet(s, k as usize + 1),
        IdKind::Dynamic => match Atom::from_id(id) {
            Atom::Func(s) => {
                let mut out = RatFn::zero();
                if s.args.has_x() {
                    out = out.add(&RatFn::func(s.with_derivs(s.dx + 1, s.du)));
                }
                if s.args.has_u() {
                    out = out.add(&RatFn::func(s.with_derivs(s.dx, s.du + 1)).mul(&RatFn::jet(1)?));
                }
                Ok(out)
            }
            _ => Ok(RatFn::zero()),
        },
    }
}

/// The total derivative `D_x`.
pub fn total_derivative(f: &RatFn) -> Result<RatFn> {
    f.derive(&total_derivative_atom)
}

/// `[f, D f, …, D^n f]`.
pub fn total_derivatives(f: &RatFn, n: usize) -> Result<Vec<RatFn>> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(f.clone());
    for i in 0..n {
        let next = total_derivative(&out[i])?;
        out.push(next);
    }
    Ok(out)
}

pub fn total_derivative_n(f: &RatFn, n: usize) -> Result<RatFn> {
    let mut g = f.clone();
    for _ in 0..n {
        if g.is_zero() {
            break;
        }
        g = total_derivative(&g)?;
    }
    Ok(g)
}

/// Largest jet index occurring anywhere in `f`, counting `u` inside
/// unknown functions of `u`.
fn max_jet_index(f: &RatFn) -> Option<usize> {
    let mut best: Option<usize> = None;
    for id in f.all_vars() {
        let k = match classify(id) {
            IdKind::Jet(k) => Some(k as usize),
            IdKind::Dynamic => match Atom::from_id(id) {
                Atom::Func(s) if s.args.has_u() => Some(0),
                _ => None,
            },
            _ => None,
        };
        if let Some(k) = k {
            best = Some(best.map_or(k, |b: usize| b.max(k)));
        }
    }
    best
}

/// Largest `m` with `∂f/∂u_m ≠ 0`, read off the normal form.
pub fn diff_order(f: &RatFn) -> Result<OrderValue> {
    let Some(top) = max_jet_index(f) else {
        return Ok(OrderValue::NegInfinity);
    };
    for m in (0..=top).rev() {
        if !f.diff(Atom::jet_id(m)?)?.is_zero() {
            return Ok(OrderValue::Finite(m));
        }
    }
    Ok(OrderValue::NegInfinity)
}

/// `max_j (j + ord p_j)`; when every coefficient is quasiconstant the
/// order of the operator.
pub fn level(op: &DiffOp) -> Result<Option<usize>> {
    let Some(n) = op.order() else {
        return Ok(None);
    };
    let mut best: Option<usize> = None;
    for (j, p) in op.coeffs().iter().enumerate() {
        if p.is_zero() {
            continue;
        }
        if let OrderValue::Finite(o) = diff_order(p)? {
            best = Some(best.map_or(j + o, |b: usize| b.max(j + o)));
        }
    }
    Ok(Some(best.unwrap_or(n)))
}

fn reject_test_jets(f: &RatFn, what: &str) -> Result<()> {
    if f.all_vars()
        .iter()
        .any(|id| matches!(classify(*id), IdKind::TestJet(..)))
    {
        return Err(Error::Precondition(format!(
            "{what} must not involve test-function jets"
        )));
    }
    Ok(())
}

/// Variational derivative `Σ (−1)^i D^i(∂T/∂u_i)`.
pub fn euler_operator(t: &RatFn) -> Result<RatFn> {
    reject_test_jets(t, "a density")?;
    let Some(n) = max_jet_index(t) else {
        return Ok(RatFn::zero());
    };
    // Horner: Σ (−1)^i D^i(a_i) = a_0 − D(a_1 − D(a_2 − …))
    let mut acc = RatFn::zero();
    for i in (0..=n).rev() {
        let a = t.diff(Atom::jet_id(i)?)?;
        acc = if acc.is_zero() {
            a
        } else {
            a.sub(&total_derivative(&acc)?)
        };
    }
    Ok(acc)
}

/// Linearization `D_f = Σ (∂f/∂u_i) D^i`.
pub fn frechet_derivative(f: &RatFn) -> Result<DiffOp> {
    reject_test_jets(f, "the linearized function")?;
    let n = max_jet_index(f).unwrap_or(0);
    let mut coeffs = Vec::with_capacity(n + 1);
    for i in 0..=n {
        coeffs.push(f.diff(Atom::jet_id(i)?)?);
    }
    Ok(DiffOp::from_coeffs(coeffs))
}

/// `pr v_h (e) = Σ D^i(h) ∂e/∂u_i`, with unknown functions of `u`
/// differentiated through their `u` argument.
pub fn prolong_apply(h: &RatFn, e: &RatFn) -> Result<RatFn> {
    let n = max_jet_index(e).unwrap_or(0);
    let dh = total_derivatives(h, n)?;
    e.derive(&|id| match classify(id) {
        IdKind::Jet(k) => Ok(dh[k as usize].clone()),
        IdKind::Dynamic => match Atom::from_id(id) {
            Atom::Func(s) if s.args.has_u() => {
                Ok(RatFn::func(s.with_derivs(s.dx, s.du + 1)).mul(h))
            }
            _ => Ok(RatFn::zero()),
        },
        _ => Ok(RatFn::zero()),
    })
}

/// Whether no coefficient depends explicitly on `x`.
pub fn is_translation_invariant(op: &DiffOp) -> Result<bool> {
    for p in op.coeffs() {
        if !p.diff(Atom::x_id())?.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}
