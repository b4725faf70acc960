//! Canonical rational functions over the extended jet ring.
//!
//! A value is `num / ∏ fᵢ^eᵢ` where `num` is a Laurent polynomial (so
//! monomial denominators such as powers of `u_1` cost nothing) and the `fᵢ`
//! are monic, non-monomial polynomials without monomial content. The factor
//! list is kept free of divisibility relations between its members, and any
//! factor dividing the numerator is cancelled. This is not a full gcd
//! reduction, but zero-testing is exact: the value is zero iff `num` is.

use std::cmp::Ordering;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::One;
use rustc_hash::FxHashMap;

use super::atom::{classify, Atom, FuncArgs, IdKind, Kernel, VarId};
use super::number::{Coeff, Rat};
use super::poly::{Mono, Poly};
use super::tree::Expr;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RatFn {
    num: Poly,
    den: Vec<(Poly, u32)>,
    inexact: bool,
}

pub(crate) fn coeff_cmp(a: &Coeff, b: &Coeff) -> Ordering {
    a.re.cmp(&b.re).then_with(|| a.im.cmp(&b.im))
}

pub(crate) fn poly_cmp(a: &Poly, b: &Poly) -> Ordering {
    let (ta, tb) = (a.terms(), b.terms());
    ta.len().cmp(&tb.len()).then_with(|| {
        for ((ma, ca), (mb, cb)) in ta.iter().zip(tb) {
            let o = ma.lex_cmp(mb).then_with(|| coeff_cmp(ca, cb));
            if o != Ordering::Equal {
                return o;
            }
        }
        Ordering::Equal
    })
}

/// Inserts `f^e` into a factor list, keeping members pairwise
/// non-dividing. `f` must be monic, non-constant, without monomial content.
fn insert_factor(list: &mut Vec<(Poly, u32)>, f: Poly, e: u32) {
    let mut pending = vec![(f, e)];
    while let Some((f, e)) = pending.pop() {
        if e == 0 || f.as_constant().is_some() {
            continue;
        }
        let mut placed = false;
        let mut i = 0;
        while i < list.len() {
            if list[i].0 == f {
                list[i].1 += e;
                placed = true;
                break;
            }
            let g = &list[i].0;
            if f.len() >= g.len() {
                if let Some(q) = f.div_exact(g) {
                    list[i].1 += e;
                    pending.push((q, e));
                    placed = true;
                    break;
                }
            }
            if g.len() >= f.len() {
                if let Some(q) = g.div_exact(&f) {
                    let (_, ge) = list.remove(i);
                    pending.push((q, ge));
                    pending.push((f.clone(), e + ge));
                    placed = true;
                    break;
                }
            }
            i += 1;
        }
        if !placed {
            list.push((f, e));
        }
    }
    list.sort_by(|a, b| poly_cmp(&a.0, &b.0));
}

/// Splits a polynomial into `c · m · P` with `P` monic and free of
/// monomial content.
fn split_content(p: &Poly) -> (Coeff, Mono, Poly) {
    let m = p.monomial_content();
    let shifted = p.mul_term(&m.inv(), &Coeff::ONE);
    let (c, monic) = shifted.make_monic();
    (c, m, monic)
}

impl RatFn {
    fn build(num: Poly, den: Vec<(Poly, u32)>, inexact: bool) -> RatFn {
        if num.is_zero() {
            return RatFn {
                num,
                den: Vec::new(),
                inexact,
            };
        }
        let mut r = RatFn { num, den, inexact };
        r.cancel();
        r
    }

    fn cancel(&mut self) {
        if self.den.is_empty() {
            return;
        }
        let mut keep = Vec::with_capacity(self.den.len());
        for (f, mut e) in std::mem::take(&mut self.den) {
            while e > 0 && self.num.len() >= f.len() {
                match self.num.div_exact(&f) {
                    Some(q) => {
                        self.num = q;
                        e -= 1;
                    }
                    None => break,
                }
            }
            if e > 0 {
                keep.push((f, e));
            }
        }
        self.den = keep;
    }

    pub fn zero() -> RatFn {
        RatFn::from_poly(Poly::zero())
    }

    pub fn one() -> RatFn {
        RatFn::from_poly(Poly::one())
    }

    pub fn constant(c: Coeff) -> RatFn {
        RatFn::from_poly(Poly::constant(c))
    }

    pub fn int(n: i64) -> RatFn {
        RatFn::constant(Coeff::int(n))
    }

    pub fn ratio(n: i64, d: i64) -> RatFn {
        RatFn::constant(Coeff::real(Rat::new(n, d)))
    }

    pub fn imag_unit() -> RatFn {
        RatFn::constant(Coeff::I)
    }

    /// Exact dyadic value of a float, marked inexact.
    pub fn float(v: f64) -> Result<RatFn> {
        let r = Rat::from_f64(v)
            .ok_or_else(|| Error::InvalidParameter(format!("non-finite number {v}")))?;
        let mut out = RatFn::constant(Coeff::real(r));
        out.inexact = true;
        Ok(out)
    }

    pub fn from_poly(p: Poly) -> RatFn {
        RatFn {
            num: p,
            den: Vec::new(),
            inexact: false,
        }
    }

    pub fn var(id: VarId) -> RatFn {
        RatFn::from_poly(Poly::var(id))
    }

    pub fn atom(a: &Atom) -> Result<RatFn> {
        Ok(RatFn::var(a.id()?))
    }

    pub fn x() -> RatFn {
        RatFn::var(Atom::x_id())
    }

    pub fn jet(k: usize) -> Result<RatFn> {
        Ok(RatFn::var(Atom::jet_id(k)?))
    }

    /// `u_0`, which is always within the jet bound.
    pub fn u() -> RatFn {
        RatFn::var(Atom::jet_id(0).expect("u_0 is always in range"))
    }

    pub fn test_jet(set: u32, k: usize) -> Result<RatFn> {
        Ok(RatFn::var(Atom::test_id(set, k)?))
    }

    pub fn param(name: &str) -> RatFn {
        RatFn::var(Atom::param(name).id().expect("parameters always intern"))
    }

    pub fn func(sym: crate::expr::FuncSym) -> RatFn {
        RatFn::var(
            Atom::Func(sym)
                .id()
                .expect("function symbols always intern"),
        )
    }

    pub fn numer(&self) -> &Poly {
        &self.num
    }

    pub fn den_factors(&self) -> &[(Poly, u32)] {
        &self.den
    }

    pub fn is_inexact(&self) -> bool {
        self.inexact
    }

    pub(crate) fn with_inexact(mut self, flag: bool) -> RatFn {
        self.inexact |= flag;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.den.is_empty() && self.num.is_one()
    }

    /// True when there is no non-monomial denominator.
    pub fn is_laurent(&self) -> bool {
        self.den.is_empty()
    }

    pub fn as_constant(&self) -> Option<Coeff> {
        if self.den.is_empty() {
            self.num.as_constant()
        } else {
            None
        }
    }

    pub fn add(&self, o: &RatFn) -> RatFn {
        let inexact = self.inexact || o.inexact;
        if o.is_zero() {
            return self.clone().with_inexact(inexact);
        }
        if self.is_zero() {
            return o.clone().with_inexact(inexact);
        }
        if self.den == o.den {
            return RatFn::build(self.num.add(&o.num), self.den.clone(), inexact);
        }
        let mut lcm = self.den.clone();
        for (f, e) in &o.den {
            match lcm.iter_mut().find(|(g, _)| g == f) {
                Some(slot) => slot.1 = slot.1.max(*e),
                None => lcm.push((f.clone(), *e)),
            }
        }
        lcm.sort_by(|a, b| poly_cmp(&a.0, &b.0));
        let cofactor = |den: &[(Poly, u32)]| {
            let mut c = Poly::one();
            for (f, e) in &lcm {
                let have = den.iter().find(|(g, _)| g == f).map(|p| p.1).unwrap_or(0);
                if *e > have {
                    c = c.mul(&f.pow(e - have));
                }
            }
            c
        };
        let n = self
            .num
            .mul(&cofactor(&self.den))
            .add(&o.num.mul(&cofactor(&o.den)));
        RatFn::build(n, lcm, inexact)
    }

    pub fn neg(&self) -> RatFn {
        RatFn {
            num: self.num.neg(),
            den: self.den.clone(),
            inexact: self.inexact,
        }
    }

    pub fn sub(&self, o: &RatFn) -> RatFn {
        self.add(&o.neg())
    }

    pub fn scale(&self, c: &Coeff) -> RatFn {
        if c.is_zero() {
            return RatFn::zero().with_inexact(self.inexact);
        }
        RatFn {
            num: self.num.scale(c),
            den: self.den.clone(),
            inexact: self.inexact,
        }
    }

    pub fn mul(&self, o: &RatFn) -> RatFn {
        let inexact = self.inexact || o.inexact;
        if self.is_zero() || o.is_zero() {
            return RatFn::zero().with_inexact(inexact);
        }
        if o.den.is_empty() && self.den.is_empty() {
            return RatFn {
                num: self.num.mul(&o.num),
                den: Vec::new(),
                inexact,
            };
        }
        // cross-cancel before multiplying out
        let mut a = RatFn {
            num: self.num.clone(),
            den: o.den.clone(),
            inexact,
        };
        a.cancel();
        let mut b = RatFn {
            num: o.num.clone(),
            den: self.den.clone(),
            inexact,
        };
        b.cancel();
        let mut den = a.den;
        for (f, e) in b.den {
            insert_factor(&mut den, f, e);
        }
        RatFn::build(a.num.mul(&b.num), den, inexact)
    }

    pub fn recip(&self) -> Result<RatFn> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let (c, m, p) = split_content(&self.num);
        let cinv = c.recip().ok_or(Error::DivisionByZero)?;
        let mut num = Poly::monomial(m.inv(), cinv);
        for (f, e) in &self.den {
            num = num.mul(&f.pow(*e));
        }
        let mut den = Vec::new();
        if p.as_constant().is_none() {
            insert_factor(&mut den, p, 1);
        }
        Ok(RatFn::build(num, den, self.inexact))
    }

    pub fn div(&self, o: &RatFn) -> Result<RatFn> {
        Ok(self.mul(&o.recip()?))
    }

    pub fn pow(&self, n: i32) -> Result<RatFn> {
        if n < 0 {
            return self.recip()?.pow(-n);
        }
        let n = n as u32;
        if n == 0 {
            return Ok(RatFn::one().with_inexact(self.inexact));
        }
        let num = self.num.pow(n);
        let den = self.den.iter().map(|(f, e)| (f.clone(), e * n)).collect();
        Ok(RatFn {
            num,
            den,
            inexact: self.inexact,
        })
    }

    /// Applies an analytic kernel, evaluating it when the argument is a
    /// constant with an exact value.
    pub fn kernel(k: Kernel, arg: &RatFn) -> Result<RatFn> {
        if let Some(c) = arg.as_constant() {
            if !arg.inexact {
                match k {
                    Kernel::Sin if c.is_zero() => return Ok(RatFn::zero()),
                    Kernel::Cos | Kernel::Exp if c.is_zero() => return Ok(RatFn::one()),
                    Kernel::Ln if c.is_one() => return Ok(RatFn::zero()),
                    Kernel::Ln if c.is_zero() => {
                        return Err(Error::Domain("logarithm of zero".into()));
                    }
                    Kernel::Sqrt if c.is_real() => {
                        let r = &c.re;
                        if r.signum() >= 0 {
                            if let Some(s) = r.sqrt_exact() {
                                return Ok(RatFn::constant(Coeff::real(s)));
                            }
                        } else if let Some(s) = r.neg().sqrt_exact() {
                            return Ok(RatFn::constant(Coeff {
                                re: Rat::ZERO,
                                im: s,
                            }));
                        }
                    }
                    _ => {}
                }
            }
        }
        let atom = Atom::Kernel(k, Arc::new(arg.clone()));
        Ok(RatFn::var(atom.id()?).with_inexact(arg.inexact))
    }

    /// Derivative of the kernel at `arg`, i.e. `k'(arg)`.
    pub fn kernel_derivative(k: Kernel, arg: &RatFn) -> Result<RatFn> {
        Ok(match k {
            Kernel::Sin => RatFn::kernel(Kernel::Cos, arg)?,
            Kernel::Cos => RatFn::kernel(Kernel::Sin, arg)?.neg(),
            Kernel::Exp => RatFn::kernel(Kernel::Exp, arg)?,
            Kernel::Ln => arg.recip()?,
            Kernel::Sqrt => RatFn::kernel(Kernel::Sqrt, arg)?
                .scale(&Coeff::int(2))
                .recip()?,
        })
    }

    /// Variables occurring at top level (kernel atoms count as variables).
    pub fn vars(&self) -> Vec<VarId> {
        let mut v = self.num.vars();
        for (f, _) in &self.den {
            v.extend(f.vars());
        }
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Variables including those inside kernel arguments; kernel atoms
    /// themselves are listed as well.
    pub fn all_vars(&self) -> Vec<VarId> {
        let mut out = Vec::new();
        let mut stack = self.vars();
        while let Some(id) = stack.pop() {
            if out.contains(&id) {
                continue;
            }
            out.push(id);
            if classify(id) == IdKind::Dynamic {
                if let Atom::Kernel(_, arg) = Atom::from_id(id) {
                    stack.extend(arg.vars());
                }
            }
        }
        out.sort_unstable();
        out
    }

    pub fn has_kernels(&self) -> bool {
        self.vars()
            .into_iter()
            .any(|id| classify(id) == IdKind::Dynamic && Atom::from_id(id).is_kernel())
    }

    /// Whether `v` occurs anywhere, including inside kernel arguments.
    pub fn depends_on(&self, v: VarId) -> bool {
        self.all_vars().contains(&v)
    }

    /// Applies a derivation given its values on non-kernel atoms; kernel
    /// atoms are handled by the chain rule.
    pub fn derive(&self, base: &dyn Fn(VarId) -> Result<RatFn>) -> Result<RatFn> {
        let mut cache: FxHashMap<VarId, RatFn> = FxHashMap::default();
        self.derive_cached(base, &mut cache)
    }

    fn derive_cached(
        &self,
        base: &dyn Fn(VarId) -> Result<RatFn>,
        cache: &mut FxHashMap<VarId, RatFn>,
    ) -> Result<RatFn> {
        for v in self.vars() {
            if cache.contains_key(&v) {
                continue;
            }
            let d = match classify(v) {
                IdKind::Dynamic => match Atom::from_id(v) {
                    Atom::Kernel(k, arg) => {
                        let da = arg.derive_cached(base, cache)?;
                        if da.is_zero() {
                            RatFn::zero()
                        } else {
                            RatFn::kernel_derivative(k, &arg)?.mul(&da)
                        }
                    }
                    _ => base(v)?,
                },
                _ => base(v)?,
            };
            cache.insert(v, d);
        }
        let dn = derive_poly(&self.num, cache);
        if self.den.is_empty() {
            return Ok(dn.with_inexact(self.inexact));
        }
        // D(N/∏f^e) = [D(N)∏f − N Σ e D(f) ∏_{j≠i} f_j] / (∏f^e ∏f)
        let q = RatFn {
            num: Poly::one(),
            den: self.den.clone(),
            inexact: false,
        };
        let mut acc = dn.mul(&q);
        let n_over_q = RatFn {
            num: self.num.clone(),
            den: self.den.clone(),
            inexact: false,
        };
        for (f, e) in &self.den {
            let df = derive_poly(f, cache);
            if df.is_zero() {
                continue;
            }
            let mut fden = Vec::new();
            insert_factor(&mut fden, f.clone(), 1);
            let inv_f = RatFn {
                num: Poly::one(),
                den: fden,
                inexact: false,
            };
            let term = n_over_q.mul(&df).mul(&inv_f).scale(&Coeff::int(*e as i64));
            acc = acc.sub(&term);
        }
        Ok(acc.with_inexact(self.inexact))
    }

    /// Partial derivative with respect to the atom `v`. Unknown functions
    /// differentiate by bumping their multi-index; kernels by the chain
    /// rule.
    pub fn diff(&self, v: VarId) -> Result<RatFn> {
        let u0 = Atom::jet_id(0)?;
        let x0 = Atom::x_id();
        self.derive(&|id| {
            if id == v {
                return Ok(RatFn::one());
            }
            if classify(id) == IdKind::Dynamic {
                if let Atom::Func(s) = Atom::from_id(id) {
                    if v == x0 && s.args.has_x() {
                        return Ok(RatFn::func(s.with_derivs(s.dx + 1, s.du)));
                    }
                    if v == u0 && s.args.has_u() {
                        return Ok(RatFn::func(s.with_derivs(s.dx, s.du + 1)));
                    }
                }
            }
            Ok(RatFn::zero())
        })
    }

    /// Simultaneous substitution of atoms. Kernel arguments are rewritten
    /// recursively; unknown functions whose arguments are rebound are
    /// rejected.
    pub fn substitute(&self, map: &FxHashMap<VarId, RatFn>) -> Result<RatFn> {
        if map.is_empty() {
            return Ok(self.clone());
        }
        let mut vals: FxHashMap<VarId, RatFn> = FxHashMap::default();
        let x0 = Atom::x_id();
        let u0 = Atom::jet_id(0)?;
        for v in self.vars() {
            if let Some(r) = map.get(&v) {
                vals.insert(v, r.clone());
                continue;
            }
            if classify(v) == IdKind::Dynamic {
                match Atom::from_id(v) {
                    Atom::Kernel(k, arg) => {
                        let na = arg.substitute(map)?;
                        if na != *arg {
                            vals.insert(v, RatFn::kernel(k, &na)?);
                        }
                    }
                    Atom::Func(s) => {
                        let hit = (s.args.has_x() && map.contains_key(&x0))
                            || (s.args.has_u() && map.contains_key(&u0));
                        if hit {
                            return Err(Error::Unsupported(format!(
                                "cannot substitute into the arguments of {s}"
                            )));
                        }
                    }
                    _ => {}
                }
            }
        }
        if vals.is_empty() {
            return Ok(self.clone());
        }
        let mut pow_cache: FxHashMap<(VarId, i32), RatFn> = FxHashMap::default();
        let mut out = subst_poly(&self.num, &vals, &mut pow_cache)?;
        for (f, e) in &self.den {
            let sf = subst_poly(f, &vals, &mut pow_cache)?;
            out = out.div(&sf.pow(*e as i32)?)?;
        }
        Ok(out.with_inexact(self.inexact))
    }

    /// Numerator and denominator as ordinary polynomials, with the monomial
    /// part of the denominator pulled out of the Laurent numerator.
    pub fn expanded(&self) -> (Poly, Poly) {
        let content = self.num.monomial_content();
        let neg = Mono(content.0.iter().filter(|p| p.1 < 0).copied().collect());
        let num = self.num.mul_term(&neg.inv(), &Coeff::ONE);
        let mut den = Poly::monomial(neg.inv(), Coeff::ONE);
        for (f, e) in &self.den {
            den = den.mul(&f.pow(*e));
        }
        // clear coefficient denominators for readability
        let mut l = BigInt::one();
        for (_, c) in num.terms() {
            l = l.lcm(c.re.to_big().denom()).lcm(c.im.to_big().denom());
        }
        if !l.is_one() {
            let k = Coeff::real(Rat::from_big(BigRational::from_integer(l)));
            return (num.scale(&k), den.scale(&k));
        }
        (num, den)
    }

    pub fn to_expr(&self) -> Expr {
        let (num, den) = self.expanded();
        let n = poly_to_expr(&num);
        if den.is_one() {
            return n;
        }
        if self.den.len() <= 1 && self.den.iter().all(|(_, e)| *e == 1) {
            return Expr::Div(Box::new(n), Box::new(poly_to_expr(&den)));
        }
        // keep the factorization visible so that parsing rebuilds it
        let mut scale = den;
        let mut factors = Vec::new();
        for (f, e) in &self.den {
            scale = scale.div_exact(&f.pow(*e)).expect("factor of the expanded denominator");
            let b = poly_to_expr(f);
            factors.push(if *e == 1 { b } else { Expr::Pow(Box::new(b), *e as i32) });
        }
        if !scale.is_one() {
            factors.insert(0, poly_to_expr(&scale));
        }
        let d = if factors.len() == 1 { factors.pop().unwrap() } else { Expr::Mul(factors) };
        Expr::Div(Box::new(n), Box::new(d))
    }

    /// Groups the numerator by monomials in the selected atoms. Each
    /// returned coefficient shares this value's denominator. Only valid
    /// when the selected atoms do not occur in the denominator factors.
    pub fn collect_numerator(&self, key: impl Fn(VarId) -> bool) -> Vec<(Mono, RatFn)> {
        self.num
            .collect_by(key)
            .into_iter()
            .map(|(m, p)| (m, RatFn::build(p, self.den.clone(), self.inexact)))
            .collect()
    }
}

fn derive_poly(p: &Poly, dv: &FxHashMap<VarId, RatFn>) -> RatFn {
    let mut terms: Vec<(Mono, Coeff)> = Vec::new();
    let mut rational: Vec<(VarId, RatFn)> = Vec::new();
    let mut inexact = false;
    for (v, d) in dv {
        if d.is_zero() {
            continue;
        }
        inexact |= d.inexact;
        if !d.den.is_empty() {
            rational.push((*v, d.clone()));
        }
    }
    for (m, c) in p.terms() {
        for &(v, e) in m.0.iter() {
            let d = match dv.get(&v) {
                Some(d) if !d.is_zero() && d.den.is_empty() => d,
                _ => continue,
            };
            let base = m.mul(&Mono::var(v, -1));
            let ce = c.mul(&Coeff::int(e as i64));
            for (dm, dc) in d.num.terms() {
                terms.push((base.mul(dm), ce.mul(dc)));
            }
        }
    }
    let mut out = RatFn::from_poly(Poly::from_terms(terms));
    for (v, d) in rational {
        out = out.add(&RatFn::from_poly(p.diff(v)).mul(&d));
    }
    out.with_inexact(inexact)
}

fn subst_poly(
    p: &Poly,
    vals: &FxHashMap<VarId, RatFn>,
    cache: &mut FxHashMap<(VarId, i32), RatFn>,
) -> Result<RatFn> {
    let mut poly_terms: Vec<(Mono, Coeff)> = Vec::new();
    let mut rest = RatFn::zero();
    for (m, c) in p.terms() {
        let mut kept = Mono::one();
        let mut factor = RatFn::one();
        for &(v, e) in m.0.iter() {
            match vals.get(&v) {
                None => kept = kept.mul(&Mono::var(v, e)),
                Some(r) => {
                    let pw = match cache.get(&(v, e)) {
                        Some(x) => x.clone(),
                        None => {
                            let x = r.pow(e)?;
                            cache.insert((v, e), x.clone());
                            x
                        }
                    };
                    factor = factor.mul(&pw);
                }
            }
        }
        if factor.den.is_empty() && !factor.inexact {
            for (fm, fc) in factor.num.terms() {
                poly_terms.push((kept.mul(fm), c.mul(fc)));
            }
        } else {
            rest = rest.add(&factor.mul(&RatFn::from_poly(Poly::monomial(kept, c.clone()))));
        }
    }
    Ok(RatFn::from_poly(Poly::from_terms(poly_terms)).add(&rest))
}

fn atom_to_expr(id: VarId) -> Expr {
    match Atom::from_id(id) {
        Atom::X => Expr::X,
        Atom::Jet(k) => Expr::Jet(k),
        Atom::TestJet { set, order } => Expr::TestJet { set, order },
        Atom::Param(p) => Expr::Param(p),
        Atom::Func(s) => Expr::Func(s),
        Atom::Kernel(k, arg) => Expr::Apply(k, Box::new(arg.to_expr())),
    }
}

pub(crate) fn mono_to_expr(m: &Mono) -> Vec<Expr> {
    let mut atoms: Vec<(Atom, VarId, i32)> =
        m.0.iter().map(|&(v, e)| (Atom::from_id(v), v, e)).collect();
    atoms.sort_by(|a, b| a.0.display_cmp(&b.0));
    atoms
        .into_iter()
        .map(|(_, v, e)| {
            if e == 1 {
                atom_to_expr(v)
            } else {
                Expr::Pow(Box::new(atom_to_expr(v)), e)
            }
        })
        .collect()
}

pub(crate) fn poly_to_expr(p: &Poly) -> Expr {
    let mut terms = Vec::with_capacity(p.len());
    for (m, c) in p.terms() {
        let mut factors = mono_to_expr(m);
        if factors.is_empty() {
            terms.push(Expr::coeff(c));
            continue;
        }
        if c.is_one() {
        } else if c.neg().is_one() {
            let body = if factors.len() == 1 {
                factors.pop().unwrap()
            } else {
                Expr::Mul(factors)
            };
            terms.push(Expr::Neg(Box::new(body)));
            continue;
        } else {
            factors.insert(0, Expr::coeff(c));
        }
        terms.push(if factors.len() == 1 {
            factors.pop().unwrap()
        } else {
            Expr::Mul(factors)
        });
    }
    match terms.len() {
        0 => Expr::coeff(&Coeff::ZERO),
        1 => terms.pop().unwrap(),
        _ => Expr::Add(terms),
    }
}

/// Unknown function partial as an id; convenience for callers that build
/// ansatz functions.
pub fn func_id(name: &str, args: FuncArgs, dx: u32, du: u32) -> VarId {
    Atom::Func(crate::expr::FuncSym::new(name, args).with_derivs(dx, du))
        .id()
        .expect("function symbols always intern")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(k: usize) -> RatFn {
        RatFn::jet(k).unwrap()
    }

    #[test]
    fn cancellation_to_zero() {
        let e = u(0).add(&u(0)).sub(&u(0).scale(&Coeff::int(2)));
        assert!(e.is_zero());
    }

    #[test]
    fn common_factor_cancels() {
        let a = u(0).add(&RatFn::one());
        let b = u(0).mul(&u(0)).sub(&RatFn::one());
        let q = b.div(&a).unwrap();
        assert_eq!(q, u(0).sub(&RatFn::one()));
        let r = q.mul(&a.recip().unwrap()).mul(&a);
        assert_eq!(r, q);
    }

    #[test]
    fn monomial_denominators_stay_laurent() {
        let s = u(3).div(&u(1)).unwrap().sub(
            &u(2)
                .pow(2)
                .unwrap()
                .div(&u(1).pow(2).unwrap())
                .unwrap()
                .scale(&Coeff::real(Rat::new(3, 2))),
        );
        assert!(s.is_laurent());
        let d = s.diff(Atom::jet_id(3).unwrap()).unwrap();
        assert_eq!(d, u(1).recip().unwrap());
    }

    #[test]
    fn derivative_of_quotient() {
        // d/du (1/(u+1)) = -1/(u+1)^2
        let a = u(0).add(&RatFn::one());
        let f = a.recip().unwrap();
        let d = f.diff(Atom::jet_id(0).unwrap()).unwrap();
        let expect = a.pow(-2).unwrap().neg();
        assert!(d.sub(&expect).is_zero());
    }

    #[test]
    fn kernels_are_atoms_with_trivial_values() {
        assert!(RatFn::kernel(Kernel::Sin, &RatFn::zero())
            .unwrap()
            .is_zero());
        assert!(RatFn::kernel(Kernel::Cos, &RatFn::zero()).unwrap().is_one());
        assert_eq!(
            RatFn::kernel(Kernel::Sqrt, &RatFn::int(-4)).unwrap(),
            RatFn::constant(Coeff {
                re: Rat::ZERO,
                im: Rat::int(2)
            })
        );
        let s = RatFn::kernel(Kernel::Sin, &u(0)).unwrap();
        let c = RatFn::kernel(Kernel::Cos, &u(0)).unwrap();
        let e = s.mul(&s).add(&c.mul(&c));
        assert!(!e.is_zero());
        assert!(e.as_constant().is_none());
        assert_eq!(s.diff(Atom::jet_id(0).unwrap()).unwrap(), c);
    }

    #[test]
    fn substitution_with_imaginary_unit() {
        let mut m = FxHashMap::default();
        m.insert(Atom::jet_id(0).unwrap(), RatFn::imag_unit().mul(&u(1)));
        let e = u(0).mul(&u(0)).substitute(&m).unwrap();
        assert_eq!(e, u(1).mul(&u(1)).neg());
    }
}
