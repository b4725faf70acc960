//! Changes of variables `x = φ(y, v, v_1, …)`, `u = ψ(y, v, v_1, …)`.
//!
//! The new coordinates `y, v, v_k` share atoms with `x, u, u_k`; which
//! reading applies is a matter of context. Only point and special contact
//! substitutions are accepted for operators, since for those the operator
//! `K` relating the two brackets is a multiplication.

use rustc_hash::FxHashMap;

use crate::catalog::Sign;
use crate::diffop::DiffOp;
use crate::error::{Error, Result};
use crate::expr::{
    classify, probe_ratfn, Atom, Coeff, IdKind, Kernel, ProbeConfig, ProbeReport, Rat, RatFn,
    VarId, ZeroVerdict,
};
use crate::jetcalc::{diff_order, is_translation_invariant, total_derivative};
use crate::momentum::ansatz::integrate_u;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubstitutionKind {
    Point,
    SpecialContact,
    General,
}

impl SubstitutionKind {
    pub fn tag(self) -> &'static str {
        match self {
            SubstitutionKind::Point => "POINT",
            SubstitutionKind::SpecialContact => "SPECIAL_CONTACT",
            SubstitutionKind::General => "GENERAL",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Substitution {
    phi: RatFn,
    psi: RatFn,
    kind: SubstitutionKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContactReport {
    pub is_special: bool,
    /// `ψ_v − φ_v D_y(ψ) / D_y(φ)`, when the structural conditions hold.
    pub rho: Option<RatFn>,
    pub failed_condition: Option<String>,
    /// Probe showing `ρ ≢ 0`; nonvanishing is only checked at the samples.
    pub rho_probe: Option<ProbeReport>,
}

fn max_jet(f: &RatFn) -> usize {
    f.all_vars()
        .into_iter()
        .filter_map(|id| match classify(id) {
            IdKind::Jet(k) => Some(k as usize),
            _ => None,
        })
        .max()
        .unwrap_or(0)
}

fn jet_order(f: &RatFn) -> Result<usize> {
    Ok(diff_order(f)?.finite().unwrap_or(0))
}

fn v(k: usize) -> Result<VarId> {
    Atom::jet_id(k)
}

fn contact_conditions(phi: &RatFn, psi: &RatFn) -> Result<std::result::Result<RatFn, String>> {
    let y = Atom::x_id();
    let w = phi.sub(&RatFn::x());
    if w.all_vars().contains(&y) {
        return Ok(Err("φ − y depends on y".into()));
    }
    if psi.all_vars().contains(&y) {
        return Ok(Err("ψ depends on y".into()));
    }
    if jet_order(phi)? > 1 || jet_order(psi)? > 1 {
        return Ok(Err("φ or ψ depends on v_2 or higher".into()));
    }
    let dphi = total_derivative(phi)?;
    let dpsi = total_derivative(psi)?;
    let tangency = phi.diff(v(1)?)?.mul(&dpsi).sub(&psi.diff(v(1)?)?.mul(&dphi));
    if !tangency.is_zero() {
        return Ok(Err(format!("tangency identity fails: φ_v1 D(ψ) − ψ_v1 D(φ) = {}", tangency.to_expr())));
    }
    if dphi.is_zero() {
        return Ok(Err("D_y(φ) vanishes".into()));
    }
    let rho = psi.diff(v(0)?)?.sub(&phi.diff(v(0)?)?.mul(&dpsi).div(&dphi)?);
    if rho.is_zero() {
        return Ok(Err("ρ vanishes identically".into()));
    }
    Ok(Ok(rho))
}

/// Checks `x = y + w(v, v_1)`, `u = ψ(v, v_1)`, the tangency identity and
/// `ρ ≢ 0`.
pub fn is_special_contact(s: &Substitution, cfg: &ProbeConfig) -> Result<ContactReport> {
    match contact_conditions(&s.phi, &s.psi)? {
        Err(msg) => Ok(ContactReport { is_special: false, rho: None, failed_condition: Some(msg), rho_probe: None }),
        Ok(rho) => {
            let probe = probe_ratfn(&rho, cfg)?;
            let nonzero = matches!(probe.verdict, ZeroVerdict::NonZero { .. });
            Ok(ContactReport {
                is_special: nonzero,
                failed_condition: (!nonzero).then(|| "ρ vanishes at every sample".to_string()),
                rho: Some(rho),
                rho_probe: Some(probe),
            })
        }
    }
}

impl Substitution {
    /// Classifies `x = φ`, `u = ψ`.
    pub fn new(phi: RatFn, psi: RatFn) -> Result<Substitution> {
        let kind = if max_jet(&phi) == 0 && max_jet(&psi) == 0 {
            SubstitutionKind::Point
        } else if contact_conditions(&phi, &psi)?.is_ok() {
            SubstitutionKind::SpecialContact
        } else {
            SubstitutionKind::General
        };
        Ok(Substitution { phi, psi, kind })
    }

    pub fn identity() -> Substitution {
        Substitution { phi: RatFn::x(), psi: RatFn::u(), kind: SubstitutionKind::Point }
    }

    pub fn phi(&self) -> &RatFn {
        &self.phi
    }

    pub fn psi(&self) -> &RatFn {
        &self.psi
    }

    pub fn kind(&self) -> SubstitutionKind {
        self.kind
    }

    /// Jet orders `(m, n)` of `φ` and `ψ`.
    pub fn orders(&self) -> Result<(usize, usize)> {
        Ok((jet_order(&self.phi)?, jet_order(&self.psi)?))
    }

    pub fn is_identity(&self) -> bool {
        self.phi == RatFn::x() && self.psi == RatFn::u()
    }

    /// Rewrites a function of `x, u, u_k` in the new coordinates:
    /// `x ↦ φ`, `u_k ↦ (D_y(φ)^{-1} D_y)^k ψ`.
    pub fn rewrite(&self, f: &RatFn) -> Result<RatFn> {
        if self.is_identity() {
            return Ok(f.clone());
        }
        let top = max_jet(f);
        let dphi_inv = total_derivative(&self.phi)?.recip()?;
        let mut map = FxHashMap::default();
        map.insert(Atom::x_id(), self.phi.clone());
        let mut uk = self.psi.clone();
        map.insert(v(0)?, uk.clone());
        for k in 1..=top {
            uk = total_derivative(&uk)?.mul(&dphi_inv);
            map.insert(v(k)?, uk.clone());
        }
        f.substitute(&map)
    }

    /// `self` followed by `next`: the composite expresses `x, u` through the
    /// coordinates of `next`.
    pub fn then(&self, next: &Substitution) -> Result<Substitution> {
        Substitution::new(next.rewrite(&self.phi)?, next.rewrite(&self.psi)?)
    }

    /// `𝔇̄`: the operator with `D_x = D_y(φ)^{-1} D_y` and rewritten
    /// coefficients.
    pub fn rewrite_operator(&self, op: &DiffOp) -> Result<DiffOp> {
        if self.is_identity() {
            return Ok(op.clone());
        }
        let dx = DiffOp::mult(total_derivative(&self.phi)?.recip()?).compose(&DiffOp::dx())?;
        let mut power = DiffOp::identity();
        let mut out = DiffOp::zero();
        for (j, a) in op.coeffs().iter().enumerate() {
            if j > 0 {
                power = dx.compose(&power)?;
            }
            if !a.is_zero() {
                out = out.add(&DiffOp::mult(self.rewrite(a)?).compose(&power)?);
            }
        }
        Ok(out)
    }
}

/// `K = Σ_i (−1)^i D^i ∘ (ψ_{v_i} D(φ) − φ_{v_i} D(ψ))`.
pub fn k_operator(s: &Substitution) -> Result<DiffOp> {
    let (m, n) = s.orders()?;
    let dphi = total_derivative(&s.phi)?;
    let dpsi = total_derivative(&s.psi)?;
    let mut k = DiffOp::zero();
    for i in 0..=m.max(n) {
        let vi = v(i)?;
        let c = s.psi.diff(vi)?.mul(&dphi).sub(&s.phi.diff(vi)?.mul(&dpsi));
        if c.is_zero() {
            continue;
        }
        let term = DiffOp::dx_pow(i).compose(&DiffOp::mult(c))?;
        k = if i % 2 == 0 { k.add(&term) } else { k.sub(&term) };
    }
    Ok(k)
}

/// The operator in the new coordinates: `𝔇₂ = K^{-1} D_y(φ) 𝔇̄ K^{-1}` with
/// `K` a multiplication.
pub fn pushforward_operator(op: &DiffOp, s: &Substitution) -> Result<DiffOp> {
    if s.is_identity() {
        return Ok(op.clone());
    }
    if s.kind == SubstitutionKind::General {
        return Err(Error::Unsupported(
            "general differential substitutions may map local operators to nonlocal ones".into(),
        ));
    }
    let k = k_operator(s)?;
    if k.order().is_some_and(|o| o > 0) {
        return Err(Error::Unsupported(format!("K = {k} is not a multiplication")));
    }
    let kinv = k.coeff(0).recip().map_err(|_| Error::Domain("K vanishes identically".into()))?;
    let dphi = total_derivative(&s.phi)?;
    let bar = s.rewrite_operator(op)?;
    DiffOp::mult(dphi.mul(&kinv)).compose(&bar)?.compose(&DiffOp::mult(kinv))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Normalization {
    pub substitution: Substitution,
    pub operator: DiffOp,
    pub sign: Sign,
    /// `±1` or `±1/v_1^4`.
    pub target: RatFn,
    /// Zero test of the new leading coefficient minus `target`.
    pub check: ProbeReport,
}

/// `a^e` for a positive rational `a`, exact when possible.
fn const_power(a: &Rat, e: &Rat) -> Result<RatFn> {
    let big = e.to_big();
    let (p, q) = (big.numer().clone(), big.denom().clone());
    let q32: Option<u32> = num_traits::ToPrimitive::to_u32(&q);
    let p32: Option<i32> = num_traits::ToPrimitive::to_i32(&p);
    if let (Some(q), Some(p)) = (q32, p32) {
        if let Some(r) = a.nth_root_exact(q).and_then(|r| r.pow(p)) {
            return Ok(RatFn::constant(Coeff::real(r)));
        }
    }
    let ln = RatFn::kernel(Kernel::Ln, &RatFn::constant(Coeff::real(a.clone())))?;
    RatFn::kernel(Kernel::Exp, &ln.scale(&Coeff::real(e.clone())))
}

/// A solution `ψ(v)` of `ψ' = a ψ^m` in closed form.
fn power_law_solution(a: &RatFn, m: &Rat) -> Result<Option<RatFn>> {
    let v = RatFn::u();
    if m.is_one() {
        return Ok(Some(RatFn::kernel(Kernel::Exp, &a.mul(&v))?));
    }
    let one_minus = Rat::int(1).sub(m);
    let e = one_minus.recip().expect("m ≠ 1");
    let base = a.mul(&v).scale(&Coeff::real(one_minus));
    if e.is_integer() {
        return Ok(Some(base.pow(e.to_f64() as i32)?));
    }
    let twice = e.mul(&Rat::int(2));
    if twice.is_integer() {
        return Ok(Some(RatFn::kernel(Kernel::Sqrt, &base)?.pow(twice.to_f64() as i32)?));
    }
    Ok(None)
}

/// `(c, k)` with `q = c u^k` for a real constant `c`.
fn monomial_in_u(q: &RatFn) -> Option<(Rat, i32)> {
    if !q.den_factors().is_empty() {
        return None;
    }
    let terms = q.numer().terms();
    let [(m, c)] = terms else { return None };
    if !c.is_real() {
        return None;
    }
    let u = Atom::jet_id(0).ok()?;
    match m.0.as_slice() {
        [] => Some((c.re.clone(), 0)),
        [(id, k)] if *id == u => Some((c.re.clone(), *k)),
        _ => None,
    }
}

/// Point substitution `u = ψ(v)` with `ψ' = |c|^p ψ^{kq}` for `q = c u^k`.
fn rescaling(q: &RatFn, p: Rat, kq: Rat, what: &str) -> Result<(Substitution, i32)> {
    let Some((c, k)) = monomial_in_u(q) else {
        return Err(Error::Unsupported(format!("{what}: {} is not of the form c*u^k", q.to_expr())));
    };
    let sign = c.signum();
    let abs = if sign < 0 { c.neg() } else { c };
    let a = const_power(&abs, &p)?;
    let m = kq.mul(&Rat::int(k as i64));
    match power_law_solution(&a, &m)? {
        Some(psi) => Ok((Substitution::new(RatFn::x(), psi)?, sign)),
        None => Err(Error::Unsupported(format!(
            "{what}: ψ' = ({}) ψ^({m}) has no closed-form solution here",
            a.to_expr()
        ))),
    }
}

fn check_leading(op: &DiffOp, target: &RatFn, cfg: &ProbeConfig) -> Result<ProbeReport> {
    let r = op.leading().cloned().unwrap_or_else(RatFn::zero).sub(target);
    if r.is_zero() {
        return Ok(ProbeReport::exact_zero());
    }
    probe_ratfn(&r, cfg)
}

/// Brings the leading coefficient of a fifth-order translation-invariant
/// Hamiltonian operator to `±1` or `±1/u_1^4` by a point substitution.
pub fn normalize_leading_coefficient(op: &DiffOp, cfg: &ProbeConfig) -> Result<Normalization> {
    if op.order() != Some(5) {
        return Err(Error::Precondition("expected a fifth-order operator".into()));
    }
    if !is_translation_invariant(op)? {
        return Err(Error::Precondition("operator depends on x".into()));
    }
    if !op.is_hamiltonian(cfg)?.is_hamiltonian() {
        return Err(Error::Precondition("operator is not Hamiltonian".into()));
    }
    normalize_inner(op, cfg, true)
}

fn normalize_inner(op: &DiffOp, cfg: &ProbeConfig, allow_shift: bool) -> Result<Normalization> {
    let lead = op.leading().expect("fifth order").clone();
    if jet_order(&lead)? > 1 {
        return Err(Error::Unsupported(
            "leading coefficient depends on u_2; this needs a genuine contact transformation".into(),
        ));
    }
    let u1 = Atom::jet_id(1)?;
    let q = lead.recip()?;
    if q.den_factors().iter().any(|(f, _)| f.contains_var(u1)) {
        return Err(Error::Unsupported(format!("1/({}) is not polynomial in u_1", lead.to_expr())));
    }
    let mut coeffs: [RatFn; 5] = std::array::from_fn(|_| RatFn::zero());
    for (m, c) in q.collect_numerator(|id| id == u1) {
        let j = match m.0.as_slice() {
            [] => 0,
            [(_, e)] if (0..=4).contains(e) => *e as usize,
            _ => return Err(Error::Unsupported(format!("1/({}) has degree above 4 in u_1", lead.to_expr()))),
        };
        coeffs[j] = c;
    }
    let only_u = |r: &RatFn| r.all_vars().into_iter().all(|id| classify(id) == IdKind::Jet(0));
    if !coeffs.iter().all(only_u) {
        return Err(Error::Unsupported("leading coefficient is not a function of u and u_1".into()));
    }
    let unit = |s: i32| RatFn::int(s as i64);
    let finish = |sub: Substitution, sign: i32, quartic: bool| -> Result<Normalization> {
        let operator = pushforward_operator(op, &sub)?;
        let target = if quartic { unit(sign).mul(&RatFn::jet(1)?.pow(-4)?) } else { unit(sign) };
        let check = check_leading(&operator, &target, cfg)?;
        let sign = if sign > 0 { Sign::Plus } else { Sign::Minus };
        Ok(Normalization { substitution: sub, operator, sign, target, check })
    };
    let [q0, q1, q2, q3, q4] = &coeffs;
    if q1.is_zero() && q2.is_zero() && q3.is_zero() && q4.is_zero() {
        // leading coefficient 1/q0(u): ψ'^2 = |1/q0(ψ)|
        let (sub, sign) = rescaling(q0, Rat::new(-1, 2), Rat::new(-1, 2), "(ψ')^2 = ±1/q(ψ)")?;
        return finish(sub, sign, false);
    }
    if q0.is_zero() && q1.is_zero() && q2.is_zero() && q3.is_zero() {
        // leading coefficient 1/(q4(u) u_1^4): ψ'^6 q4(ψ) = ±1
        let (sub, sign) = rescaling(q4, Rat::new(-1, 6), Rat::new(-1, 6), "(ψ')^6 = ±1/q(ψ)")?;
        return finish(sub, sign, true);
    }
    // q4 (u_1 + r)^4 with r ≠ 0: x = y + w(v), w' = −1/r, then rescale
    if q4.is_zero() || !allow_shift {
        return Err(Error::Unsupported(format!("leading coefficient {} is not in a recognized form", lead.to_expr())));
    }
    let r = q3.div(&q4.scale(&Coeff::int(4)))?;
    let u1r = RatFn::jet(1)?.add(&r);
    if !u1r.pow(4)?.mul(q4).sub(&q).is_zero() {
        return Err(Error::Unsupported(format!("1/({}) is not a fourth power in u_1", lead.to_expr())));
    }
    let Some(w) = integrate_u(&r.recip()?.neg()) else {
        return Err(Error::Unsupported(format!("w' = {} has no polynomial antiderivative", r.recip()?.neg().to_expr())));
    };
    let shift = Substitution::new(RatFn::x().add(&w), RatFn::u())?;
    let shifted = pushforward_operator(op, &shift)?;
    let rest = normalize_inner(&shifted, cfg, false)?;
    let sub = shift.then(&rest.substitution)?;
    Ok(Normalization { substitution: sub, ..rest })
}

#[cfg(test)]
mod tests;
