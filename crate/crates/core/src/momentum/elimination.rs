//! Deriving a contradiction from `𝔇(h) = u_1` with `h = h(x, u)`.
//!
//! The coefficient of the top jet `u_n` in `𝔇(h) − u_1` is linear in `h`
//! and `h_u`; when it reads `h_u = κ h` with `κ = k ∂_u L / L` for a
//! polynomial `L(x, u)` and a constant `k`, then `h = f(x) L^k`. Every
//! partial of `h` is then `L^k` times a rational function of `f` and its
//! derivatives, so the remaining coefficients become linear equations for
//! `f`. Solving them for the highest derivative of `f` and substituting
//! back must leave nothing to match the right-hand side `u_1`.

use rustc_hash::FxHashMap;

use crate::diffop::DiffOp;
use crate::error::{Error, Result};
use crate::expr::{classify, Atom, Coeff, Expr, FuncArgs, FuncSym, IdKind, Kernel, Mono, Poly, RatFn, VarId};

#[derive(Clone, Debug, PartialEq)]
pub struct TraceStep {
    pub label: String,
    pub residual: Expr,
}

fn h_sym() -> FuncSym {
    FuncSym::new("h", FuncArgs::XU)
}

fn f_sym() -> FuncSym {
    FuncSym::new("f", FuncArgs::X)
}

fn f_deriv(j: u32) -> RatFn {
    RatFn::func(f_sym().with_derivs(j, 0))
}

fn f_deriv_id(j: u32) -> VarId {
    Atom::Func(f_sym().with_derivs(j, 0)).id().expect("unknown functions always intern")
}

fn func_of(id: VarId, name: &str) -> Option<FuncSym> {
    if classify(id) != IdKind::Dynamic {
        return None;
    }
    match Atom::from_id(id) {
        Atom::Func(s) if &*s.name == name => Some(s),
        _ => None,
    }
}

fn f_order(id: VarId) -> Option<u32> {
    func_of(id, "f").filter(|s| s.args == FuncArgs::X).map(|s| s.dx)
}

/// Whether every atom is `x`, `u` (when `allow_u`), a parameter or a kernel.
fn only_x_u(r: &RatFn, allow_u: bool) -> bool {
    r.all_vars().into_iter().all(|id| match classify(id) {
        IdKind::X => true,
        IdKind::Jet(0) => allow_u,
        IdKind::Dynamic => matches!(Atom::from_id(id), Atom::Param(_) | Atom::Kernel(..)),
        _ => false,
    })
}

fn u_id() -> VarId {
    Atom::jet_id(0).expect("u is always in range")
}

/// `κ = k ∂_u L / L` with `L` the denominator of `κ`.
fn log_derivative_form(kappa: &RatFn) -> Result<(Coeff, RatFn)> {
    let (_, den) = kappa.expanded();
    let lc = den.terms().first().map(|(_, c)| c.clone()).unwrap_or(Coeff::ONE);
    let l = RatFn::from_poly(den).scale(&lc.recip().ok_or(Error::DivisionByZero)?);
    let lu = l.diff(u_id())?;
    if lu.is_zero() {
        return Err(Error::Unsupported(format!("cannot integrate h_u = ({}) h in closed form", kappa.to_expr())));
    }
    let k = kappa.mul(&l).div(&lu)?;
    match k.as_constant() {
        Some(c) => Ok((c, l)),
        None => Err(Error::Unsupported(format!("cannot integrate h_u = ({}) h in closed form", kappa.to_expr()))),
    }
}

/// `f(x) L^k` for display.
fn power_expr(l: &RatFn, k: &Coeff) -> Expr {
    let f = Expr::Func(f_sym());
    if k.is_zero() {
        return f;
    }
    let base = l.to_expr();
    let re = &k.re;
    let twice = re.mul(&crate::expr::Rat::int(2));
    let pow = if k.is_real() && re.is_integer() {
        Expr::Pow(Box::new(base), re.to_f64() as i32)
    } else if k.is_real() && twice.is_integer() {
        Expr::Pow(Box::new(Expr::Apply(Kernel::Sqrt, Box::new(base))), twice.to_f64() as i32)
    } else {
        let ln = Expr::Apply(Kernel::Ln, Box::new(base));
        Expr::Apply(Kernel::Exp, Box::new(Expr::Mul(vec![Expr::coeff(k), ln])))
    };
    Expr::Mul(vec![f, pow])
}

/// `f^{(r)} = Σ_{j<r} c_j f^{(j)}` with `c_j` functions of `x`.
struct Rule {
    order: u32,
    coeffs: Vec<RatFn>,
    /// `rule_r, rule_{r+1}, …` expressed through `f, …, f^{(r−1)}`.
    ext: Vec<RatFn>,
}

impl Rule {
    fn new(order: u32, coeffs: Vec<RatFn>) -> Rule {
        let first = coeffs.iter().enumerate().fold(RatFn::zero(), |acc, (j, c)| acc.add(&c.mul(&f_deriv(j as u32))));
        Rule { order, coeffs, ext: vec![first] }
    }

    fn as_equation(&self) -> RatFn {
        f_deriv(self.order).sub(&self.ext[0])
    }

    fn rewrite(&mut self, j: u32) -> Result<RatFn> {
        let idx = (j - self.order) as usize;
        while self.ext.len() <= idx {
            let last = self.ext.last().expect("rule has a first entry");
            let d = last.diff(Atom::x_id())?;
            let mut map = FxHashMap::default();
            map.insert(f_deriv_id(self.order), self.ext[0].clone());
            self.ext.push(d.substitute(&map)?);
        }
        Ok(self.ext[idx].clone())
    }

    fn reduce(&mut self, e: &RatFn) -> Result<RatFn> {
        let mut map = FxHashMap::default();
        for id in e.vars() {
            if let Some(j) = f_order(id) {
                if j >= self.order {
                    map.insert(id, self.rewrite(j)?);
                }
            }
        }
        e.substitute(&map)
    }
}

/// Writes a linear homogeneous equation in `f` as a rule for its highest
/// derivative, if the coefficients depend on `x` only.
fn solve_for_top(eq: &RatFn) -> Result<Option<Rule>> {
    let orders: Vec<u32> = eq.vars().into_iter().filter_map(f_order).collect();
    let Some(&top) = orders.iter().max() else {
        return Ok(None);
    };
    let lead = eq.diff(f_deriv_id(top))?;
    let mut coeffs = Vec::with_capacity(top as usize);
    let mut rebuilt = lead.mul(&f_deriv(top));
    for j in 0..top {
        let a = eq.diff(f_deriv_id(j))?;
        rebuilt = rebuilt.add(&a.mul(&f_deriv(j)));
        coeffs.push(a.div(&lead)?.neg());
    }
    if !rebuilt.sub(eq).is_zero() {
        return Ok(None);
    }
    if !coeffs.iter().all(|c| only_x_u(c, false)) {
        return Ok(None);
    }
    Ok(Some(Rule::new(top, coeffs)))
}

fn monomial_expr(m: &Mono) -> Expr {
    RatFn::from_poly(Poly::monomial(m.clone(), Coeff::ONE)).to_expr()
}

/// Replays the elimination for `𝔇(h(x, u)) = u_1`; the last step's residual
/// is the unit of the contradiction `0 = 1`.
pub fn eliminate_momentum(op: &DiffOp) -> Result<Vec<TraceStep>> {
    let n = op.order().ok_or_else(|| Error::Precondition("zero operator".into()))?;
    if n < 2 {
        return Err(Error::Precondition("elimination needs order at least 2".into()));
    }
    let mut steps = Vec::new();
    let h = RatFn::func(h_sym());
    let h_id = Atom::Func(h_sym()).id()?;
    let hu_sym = h_sym().with_derivs(0, 1);
    let hu_id = Atom::Func(hu_sym.clone()).id()?;
    let r_op = op.apply(&h)?;
    let top = r_op.diff(Atom::jet_id(n)?)?;
    let a = top.diff(hu_id)?;
    let b = top.diff(h_id)?;
    if a.is_zero() || !top.sub(&a.mul(&RatFn::func(hu_sym.clone()))).sub(&b.mul(&h)).is_zero() {
        return Err(Error::Unsupported(format!("coefficient of u_{n} is not of the form A h_u + B h")));
    }
    let kappa = b.div(&a)?.neg();
    if !only_x_u(&kappa, true) {
        return Err(Error::Unsupported(format!("h_u = ({}) h depends on higher jets", kappa.to_expr())));
    }
    let relation = RatFn::func(hu_sym).sub(&kappa.mul(&h));
    steps.push(TraceStep { label: format!("coefficient of u_{n}: h_u = ({}) h", kappa.to_expr()), residual: relation.to_expr() });

    let (k, l) = if kappa.is_zero() { (Coeff::ZERO, RatFn::one()) } else { log_derivative_form(&kappa)? };
    let lambda_x = if k.is_zero() { RatFn::zero() } else { l.diff(Atom::x_id())?.div(&l)?.scale(&k) };
    let shape = power_expr(&l, &k);
    steps.push(TraceStep {
        label: format!("integrating in u: h = {shape}"),
        residual: Expr::Add(vec![Expr::Func(h_sym()), Expr::Neg(Box::new(shape))]),
    });

    // h_{x^i u^j} = L^k g_{ij} with g_{00} = f
    let mut table: FxHashMap<(u32, u32), RatFn> = FxHashMap::default();
    let mut map = FxHashMap::default();
    for id in r_op.vars() {
        let Some(s) = func_of(id, "h") else { continue };
        let mut g = f_deriv(0);
        for i in 0..s.dx {
            g = match table.get(&(i + 1, 0)) {
                Some(v) => v.clone(),
                None => {
                    let v = g.diff(Atom::x_id())?.add(&lambda_x.mul(&g));
                    table.insert((i + 1, 0), v.clone());
                    v
                }
            };
        }
        for j in 0..s.du {
            g = match table.get(&(s.dx, j + 1)) {
                Some(v) => v.clone(),
                None => {
                    let v = g.diff(u_id())?.add(&kappa.mul(&g));
                    table.insert((s.dx, j + 1), v.clone());
                    v
                }
            };
        }
        map.insert(id, g);
    }
    let p = r_op.substitute(&map)?;

    let den_vars: Vec<VarId> = p.den_factors().iter().flat_map(|(f, _)| f.vars()).collect();
    let key = |id: VarId| matches!(classify(id), IdKind::Jet(k) if k >= 1) && !den_vars.contains(&id);
    let u1 = Mono::var(Atom::jet_id(1)?, 1);
    let mut target = RatFn::zero();
    let mut eqs: Vec<(Mono, RatFn)> = Vec::new();
    for (m, c) in p.collect_numerator(key) {
        if m == u1 {
            target = c;
        } else {
            eqs.push((m, c));
        }
    }

    let mut rule: Option<Rule> = None;
    loop {
        let mut next = Vec::new();
        for (m, e) in eqs {
            let e = match rule.as_mut() {
                Some(r) => r.reduce(&e)?,
                None => e,
            };
            if !e.is_zero() {
                next.push((m, e));
            }
        }
        eqs = next;
        if eqs.is_empty() {
            break;
        }
        let mut best: Option<(usize, Rule)> = None;
        for (i, (_, e)) in eqs.iter().enumerate() {
            if let Some(r) = solve_for_top(e)? {
                if best.as_ref().is_none_or(|(_, b)| r.order < b.order) {
                    best = Some((i, r));
                }
            }
        }
        let Some((i, new_rule)) = best else {
            return Err(Error::Unsupported("remaining equations cannot be solved for f".into()));
        };
        if rule.as_ref().is_some_and(|old| old.order <= new_rule.order) {
            return Err(Error::Unsupported("elimination does not terminate".into()));
        }
        let eq_expr = new_rule.as_equation().to_expr();
        steps.push(TraceStep { label: format!("coefficient of {}: {eq_expr} = 0", monomial_expr(&eqs[i].0)), residual: eq_expr });
        if let Some(old) = rule.take() {
            eqs.push((Mono::one(), old.as_equation()));
        }
        eqs.remove(i);
        let _ = &new_rule.coeffs;
        rule = Some(new_rule);
    }
    let target = match rule.as_mut() {
        Some(r) => r.reduce(&target)?,
        None => target,
    };
    if !target.is_zero() {
        return Err(Error::Unsupported(format!(
            "coefficient of u_1 reduces to {}, not zero",
            target.to_expr()
        )));
    }
    steps.push(TraceStep { label: "coefficient of u_1: 0 = 1".into(), residual: Expr::int(1) });
    Ok(steps)
}

/// Elimination for a fifth-order operator with leading coefficient `±1`.
pub fn unit_leading_elimination(op: &DiffOp) -> Result<Vec<TraceStep>> {
    let lead = op.leading().and_then(RatFn::as_constant);
    let unit = lead.is_some_and(|c| c.is_one() || c.neg().is_one());
    if op.order() != Some(5) || !unit {
        return Err(Error::Precondition("expected a fifth-order operator with leading coefficient ±1".into()));
    }
    eliminate_momentum(op)
}
