//! The momentum problem `𝔇 δ_u T = u_1`: checking candidate densities,
//! the residual system for `h(x, u)`, the ODEs for `h(u)` and the decision
//! procedure.

pub(crate) mod ansatz;
mod elimination;
mod ode;

pub use elimination::{eliminate_momentum, unit_leading_elimination, TraceStep};
pub use ode::{
    momentum_ode_fifth, momentum_ode_third, numeric_check, solve_ode, LinearODE, NumericCheck,
    SeriesSolution,
};

use crate::catalog::{self, FamilySpec, Sign};
use crate::diffop::DiffOp;
use crate::error::{Error, Result};
use crate::expr::{classify, probe_ratfn, Atom, Expr, FuncArgs, FuncSym, IdKind, ProbeConfig, ProbeReport, RatFn, VarId};
use crate::jetcalc::{diff_order, euler_operator, is_translation_invariant, OrderValue};

/// Degree bound of the polynomial search for densities.
const DENSITY_DEGREE: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub enum NoWitness {
    NotTranslationInvariant,
    /// The elimination for a unit leading coefficient reached `0 = 1`.
    EliminationContradiction { trace: Vec<TraceStep> },
    /// The residual system has no solution; `residual` is what is left of
    /// the equation matching `u_1`.
    InconsistentSystem { residual: Expr, trace: Vec<TraceStep> },
}

impl NoWitness {
    pub fn tag(&self) -> &'static str {
        match self {
            NoWitness::NotTranslationInvariant => "NOT_TRANSLATION_INVARIANT",
            NoWitness::EliminationContradiction { .. } => "ELIMINATION_CONTRADICTION",
            NoWitness::InconsistentSystem { .. } => "INCONSISTENT_SYSTEM",
        }
    }

    pub fn trace(&self) -> &[TraceStep] {
        match self {
            NoWitness::NotTranslationInvariant => &[],
            NoWitness::EliminationContradiction { trace } | NoWitness::InconsistentSystem { trace, .. } => trace,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MomentumVerdict {
    Yes {
        /// `T` with `𝔇 δ_u T = u_1`, when one was found.
        density: Option<RatFn>,
        /// Equation for `h = δ_u T`.
        ode: Option<LinearODE>,
        reason: String,
    },
    No(NoWitness),
    Unknown { reason: String },
}

impl MomentumVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            MomentumVerdict::Yes { .. } => "YES",
            MomentumVerdict::No(_) => "NO",
            MomentumVerdict::Unknown { .. } => "UNKNOWN",
        }
    }

    pub fn density(&self) -> Option<&RatFn> {
        match self {
            MomentumVerdict::Yes { density, .. } => density.as_ref(),
            _ => None,
        }
    }

    pub fn ode(&self) -> Option<&LinearODE> {
        match self {
            MomentumVerdict::Yes { ode, .. } => ode.as_ref(),
            _ => None,
        }
    }
}

fn check_density_atoms(t: &RatFn) -> Result<()> {
    for id in t.all_vars() {
        let ok = match classify(id) {
            IdKind::X | IdKind::Jet(_) => true,
            IdKind::TestJet(..) => false,
            IdKind::Dynamic => !matches!(Atom::from_id(id), Atom::Func(_)),
        };
        if !ok {
            return Err(Error::Precondition("a density may only involve x, u, its jets and parameters".into()));
        }
    }
    Ok(())
}

/// Zero test of `𝔇(δ_u T) − u_1`.
pub fn check_momentum_density(op: &DiffOp, t: &RatFn, cfg: &ProbeConfig) -> Result<ProbeReport> {
    check_density_atoms(t)?;
    let r = op.apply(&euler_operator(t)?)?.sub(&RatFn::jet(1)?);
    if r.is_zero() {
        return Ok(ProbeReport::exact_zero());
    }
    probe_ratfn(&r, cfg)
}

pub fn verify_momentum_density(op: &DiffOp, t: &RatFn, cfg: &ProbeConfig) -> Result<bool> {
    Ok(check_momentum_density(op, t, cfg)?.verdict.is_zero())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualEquation {
    /// Monomial in `u_1, u_2, …` whose coefficient this is.
    pub monomial: Expr,
    /// Coefficient, to vanish identically.
    pub lhs: RatFn,
}

/// The unknown `h(x, u)`.
pub fn unknown_h() -> RatFn {
    RatFn::func(FuncSym::new("h", FuncArgs::XU))
}

/// Coefficients of `𝔇(h(x, u)) − u_1` by monomials in the jets `u_k`,
/// `k ≥ 1`, that do not occur in denominators.
pub fn momentum_residual_system(op: &DiffOp) -> Result<Vec<ResidualEquation>> {
    let n = op.order().ok_or_else(|| Error::Precondition("zero operator".into()))?;
    if n > 5 {
        return Err(Error::Precondition(format!("order {n} exceeds 5")));
    }
    let lead = op.leading().expect("nonzero operator");
    if diff_order(lead)? > OrderValue::Finite(1) {
        return Err(Error::Precondition("leading coefficient depends on u_2 or higher".into()));
    }
    let r = op.apply(&unknown_h())?.sub(&RatFn::jet(1)?);
    Ok(collect_by_jets(&r)
        .into_iter()
        .map(|(m, lhs)| ResidualEquation { monomial: m.to_expr(), lhs })
        .collect())
}

/// Collection key: `u_k`, `k ≥ 1`, absent from the denominators of `r`.
fn jet_key(r: &RatFn) -> impl Fn(VarId) -> bool {
    let den: Vec<VarId> = r.den_factors().iter().flat_map(|(f, _)| f.vars()).collect();
    move |id| matches!(classify(id), IdKind::Jet(k) if k >= 1) && !den.contains(&id)
}

pub(crate) fn collect_by_jets(r: &RatFn) -> Vec<(RatFn, RatFn)> {
    r.collect_numerator(jet_key(r))
        .into_iter()
        .map(|(m, c)| (RatFn::from_poly(crate::expr::Poly::monomial(m, crate::expr::Coeff::ONE)), c))
        .collect()
}

/// `(a_k, k)` for odd `k` with `op = Σ (a_k ∘ D^k + D^k ∘ a_k)`; `None` when
/// the operator is not skew-adjoint.
pub fn symmetrized_parts(op: &DiffOp) -> Result<Option<Vec<(RatFn, usize)>>> {
    let mut rem = op.clone();
    let mut parts = Vec::new();
    while let Some(n) = rem.order() {
        if n % 2 == 0 {
            return Ok(None);
        }
        let a = rem.leading().expect("nonzero").scale(&crate::expr::Coeff::real(crate::expr::Rat::new(1, 2)));
        rem = rem.sub(&DiffOp::from_symmetrized(&[(a.clone(), n)])?);
        parts.push((a, n));
    }
    Ok(Some(parts))
}

fn only_u(r: &RatFn) -> bool {
    r.all_vars().into_iter().all(|id| match classify(id) {
        IdKind::Jet(0) => true,
        IdKind::Dynamic => matches!(Atom::from_id(id), Atom::Param(_) | Atom::Kernel(..)),
        _ => false,
    })
}

fn unit_sign(c: &RatFn) -> Option<Sign> {
    let c = c.as_constant()?;
    if c.is_one() {
        Some(Sign::Plus)
    } else if c.neg().is_one() {
        Some(Sign::Minus)
    } else {
        None
    }
}

/// `(α, β, sign)` when `op` is the inverse-quartic fifth-order family.
pub fn inverse_quartic_parameters(op: &DiffOp) -> Result<Option<(RatFn, RatFn, Sign)>> {
    if op.order() != Some(5) {
        return Ok(None);
    }
    let Some(parts) = symmetrized_parts(op)? else {
        return Ok(None);
    };
    let get = |k: usize| parts.iter().find(|(_, j)| *j == k).map(|(a, _)| a.clone()).unwrap_or_else(RatFn::zero);
    let u1 = RatFn::jet(1)?;
    let Some(sign) = unit_sign(&get(5).mul(&u1.pow(4)?).scale(&crate::expr::Coeff::int(2))) else {
        return Ok(None);
    };
    // b − b(α = 0) = α / u_1^2, c − c(α, β = 0) = β
    let b0 = catalog::inverse_quartic_b(sign, &RatFn::zero())?;
    let alpha = get(3).sub(&b0).mul(&u1.pow(2)?);
    if !only_u(&alpha) {
        return Ok(None);
    }
    let c0 = catalog::inverse_quartic_c(sign, &alpha, &RatFn::zero())?;
    let beta = get(1).sub(&c0);
    if !only_u(&beta) {
        return Ok(None);
    }
    let rebuilt = catalog::build(&FamilySpec::fifth_inverse_quartic(sign, alpha.clone(), beta.clone()))?;
    if !rebuilt.sub(op).is_zero() {
        return Ok(None);
    }
    Ok(Some((alpha, beta, sign)))
}

/// `(f, sign)` when `op` is `±` the conjugated third-order form with `f(u)`.
pub fn third_conjugated_parameters(op: &DiffOp) -> Result<Option<(RatFn, Sign)>> {
    if op.order() != Some(3) {
        return Ok(None);
    }
    let lead = op.leading().expect("nonzero").mul(&RatFn::jet(1)?.pow(2)?);
    let Some(sign) = unit_sign(&lead) else {
        return Ok(None);
    };
    let core = catalog::build(&FamilySpec::third_conjugated(sign, RatFn::zero()))?;
    let rest = op.sub(&core).scale(&sign.coeff());
    if rest.order().is_some_and(|k| k > 1) {
        return Ok(None);
    }
    let f = rest.coeff(1).scale(&crate::expr::Coeff::real(crate::expr::Rat::new(1, 2)));
    if !only_u(&f) || !DiffOp::from_symmetrized(&[(f.clone(), 1)])?.sub(&rest).is_zero() {
        return Ok(None);
    }
    Ok(Some((f, sign)))
}

/// `A` when `op = ±(D^3 + 2A u D + A u_1)` with constant `A ≠ 0`.
fn third_linear_parameter(op: &DiffOp) -> Result<Option<(RatFn, Sign)>> {
    if op.order() != Some(3) {
        return Ok(None);
    }
    let Some(sign) = unit_sign(op.leading().expect("nonzero")) else {
        return Ok(None);
    };
    let inner = op.scale(&sign.coeff());
    let a = inner.coeff(1).div(&RatFn::u().scale(&crate::expr::Coeff::int(2)))?;
    if a.is_zero() || a.as_constant().is_none() {
        return Ok(None);
    }
    let expected = DiffOp::from_coeffs(vec![
        a.mul(&RatFn::jet(1)?),
        a.mul(&RatFn::u()).scale(&crate::expr::Coeff::int(2)),
        RatFn::zero(),
        RatFn::one(),
    ]);
    Ok(expected.sub(&inner).is_zero().then_some((a, sign)))
}

/// Whether `op = ±(D^3 + A D)` with constant `A`.
fn is_third_constant(op: &DiffOp) -> bool {
    op.order() == Some(3)
        && op.leading().and_then(unit_sign).is_some()
        && op.coeff(2).is_zero()
        && op.coeff(0).is_zero()
        && op.coeff(1).as_constant().is_some()
}

/// Density `T = ∫ h du` from a polynomial `h(u)` with `residual(h) = 0`.
fn polynomial_density(residual: impl Fn(&RatFn) -> Result<RatFn>) -> Result<Option<RatFn>> {
    Ok(ansatz::polynomial_solution(DENSITY_DEGREE, residual)?.and_then(|h| ansatz::integrate_u(&h)))
}

fn verified(op: &DiffOp, t: Option<RatFn>, cfg: &ProbeConfig) -> Result<Option<RatFn>> {
    match t {
        Some(t) if verify_momentum_density(op, &t, cfg)? => Ok(Some(t)),
        _ => Ok(None),
    }
}

fn yes(density: Option<RatFn>, ode: Option<LinearODE>, reason: &str) -> MomentumVerdict {
    MomentumVerdict::Yes { density, ode, reason: reason.into() }
}

/// Decides whether the Hamiltonian operator `op` has a momentum.
pub fn decide_momentum(op: &DiffOp, cfg: &ProbeConfig) -> Result<MomentumVerdict> {
    let report = op.is_hamiltonian(cfg)?;
    if !report.is_hamiltonian() {
        return Err(Error::Precondition("operator is not Hamiltonian".into()));
    }
    let order = op.order().ok_or_else(|| Error::Precondition("zero operator".into()))?;
    let lead = op.leading().expect("nonzero").clone();

    if order == 5 && unit_sign(&lead).is_some() {
        match unit_leading_elimination(op) {
            Ok(trace) => return Ok(MomentumVerdict::No(NoWitness::EliminationContradiction { trace })),
            Err(Error::Unsupported(_)) => {}
            Err(e) => return Err(e),
        }
    }
    if !is_translation_invariant(op)? {
        return Ok(MomentumVerdict::No(NoWitness::NotTranslationInvariant));
    }
    let u1 = RatFn::jet(1)?;
    match order {
        1 => {
            let t = polynomial_density(|h| Ok(op.apply(h)?.sub(&u1)))?;
            Ok(yes(verified(op, t, cfg)?, None, "first-order translation-invariant operator"))
        }
        3 => {
            if let Some((f, sign)) = third_conjugated_parameters(op)? {
                let ode = momentum_ode_third(&f, sign)?;
                // the ODE's unknown is the density itself
                let t = ansatz::polynomial_solution(DENSITY_DEGREE, |p| ode.residual(p))?;
                return Ok(yes(verified(op, t, cfg)?, Some(ode), "third-order conjugated form"));
            }
            if third_linear_parameter(op)?.is_some() {
                let t = polynomial_density(|h| Ok(op.apply(h)?.sub(&u1)))?;
                return Ok(yes(verified(op, t, cfg)?, None, "third-order form with linear coefficient"));
            }
            if is_third_constant(op) {
                let trace = eliminate_momentum(op)?;
                let residual = trace.last().map(|s| s.residual.clone()).unwrap_or_else(|| Expr::int(1));
                return Ok(MomentumVerdict::No(NoWitness::InconsistentSystem { residual, trace }));
            }
            Ok(MomentumVerdict::Unknown { reason: "third-order operator not in a recognized normal form".into() })
        }
        5 => {
            if let Some((alpha, beta, sign)) = inverse_quartic_parameters(op)? {
                let ode = momentum_ode_fifth(&alpha, &beta, sign)?;
                let t = polynomial_density(|h| ode.residual(h))?;
                return Ok(yes(verified(op, t, cfg)?, Some(ode), "fifth-order operator with leading coefficient ±1/u_1^4"));
            }
            Ok(MomentumVerdict::Unknown {
                reason: "fifth-order leading coefficient not in a recognized normal form; try a change of variables first".into(),
            })
        }
        _ => Ok(MomentumVerdict::Unknown { reason: format!("no decision rule for order {order}") }),
    }
}
