//! Differential operators `Σ p_k ∘ D_x^k` and the Jacobi identity test.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expr::{
    binomial, classify, Atom, Coeff, IdKind, ProbeConfig, ProbeReport, RatFn, ZeroVerdict,
};
use crate::expr::{probe_sum, Expr};
use crate::jetcalc::{total_derivative, total_derivatives};

/// An operator in right normal form: `coeffs[k]` multiplies `D_x^k`.
/// Trailing zero coefficients are trimmed, so the zero operator has no
/// coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DiffOp {
    coeffs: Vec<RatFn>,
}

impl DiffOp {
    pub fn zero() -> DiffOp {
        DiffOp { coeffs: Vec::new() }
    }

    pub fn from_coeffs(mut coeffs: Vec<RatFn>) -> DiffOp {
        while coeffs.last().is_some_and(RatFn::is_zero) {
            coeffs.pop();
        }
        DiffOp { coeffs }
    }

    /// Sums `coeff ∘ D^power` over the given terms.
    pub fn from_terms(terms: &[(RatFn, usize)]) -> DiffOp {
        let n = terms.iter().map(|t| t.1 + 1).max().unwrap_or(0);
        let mut coeffs = vec![RatFn::zero(); n];
        for (c, k) in terms {
            coeffs[*k] = coeffs[*k].add(c);
        }
        DiffOp::from_coeffs(coeffs)
    }

    /// Multiplication by `f`.
    pub fn mult(f: RatFn) -> DiffOp {
        DiffOp::from_coeffs(vec![f])
    }

    pub fn identity() -> DiffOp {
        DiffOp::mult(RatFn::one())
    }

    pub fn dx() -> DiffOp {
        DiffOp::dx_pow(1)
    }

    pub fn dx_pow(k: usize) -> DiffOp {
        let mut c = vec![RatFn::zero(); k + 1];
        c[k] = RatFn::one();
        DiffOp { coeffs: c }
    }

    /// `Σ (p_k ∘ D^k + D^k ∘ p_k)`.
    pub fn from_symmetrized(parts: &[(RatFn, usize)]) -> Result<DiffOp> {
        let mut acc = DiffOp::zero();
        for (p, k) in parts {
            let left = DiffOp::from_terms(&[(p.clone(), *k)]);
            let right = DiffOp::dx_pow(*k).compose(&DiffOp::mult(p.clone()))?;
            acc = acc.add(&left).add(&right);
        }
        Ok(acc)
    }

    /// Highest power, or `None` for the zero operator.
    pub fn order(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[RatFn] {
        &self.coeffs
    }

    /// Coefficient of `D^k` (zero beyond the order).
    pub fn coeff(&self, k: usize) -> RatFn {
        self.coeffs.get(k).cloned().unwrap_or_else(RatFn::zero)
    }

    pub fn leading(&self) -> Option<&RatFn> {
        self.coeffs.last()
    }

    pub fn add(&self, o: &DiffOp) -> DiffOp {
        let n = self.coeffs.len().max(o.coeffs.len());
        DiffOp::from_coeffs((0..n).map(|k| self.coeff(k).add(&o.coeff(k))).collect())
    }

    pub fn neg(&self) -> DiffOp {
        DiffOp {
            coeffs: self.coeffs.iter().map(RatFn::neg).collect(),
        }
    }

    pub fn sub(&self, o: &DiffOp) -> DiffOp {
        self.add(&o.neg())
    }

    /// `f ∘ self`.
    pub fn left_mul(&self, f: &RatFn) -> DiffOp {
        DiffOp::from_coeffs(self.coeffs.iter().map(|p| f.mul(p)).collect())
    }

    pub fn scale(&self, c: &Coeff) -> DiffOp {
        DiffOp::from_coeffs(self.coeffs.iter().map(|p| p.scale(c)).collect())
    }

    /// `self ∘ o` via `D^k ∘ q = Σ_l C(k,l) D^{k−l}(q) D^l`.
    pub fn compose(&self, o: &DiffOp) -> Result<DiffOp> {
        let (Some(n), Some(m)) = (self.order(), o.order()) else {
            return Ok(DiffOp::zero());
        };
        let derivs: Vec<Vec<RatFn>> = o
            .coeffs
            .par_iter()
            .map(|q| total_derivatives(q, n))
            .collect::<Result<_>>()?;
        let parts: Vec<Vec<RatFn>> = (0..=n + m)
            .into_par_iter()
            .map(|pow| {
                let mut terms = Vec::new();
                for (k, p) in self.coeffs.iter().enumerate() {
                    if p.is_zero() {
                        continue;
                    }
                    for l in 0..=k {
                        if pow < l || pow - l > m {
                            continue;
                        }
                        let d = &derivs[pow - l][k - l];
                        if d.is_zero() {
                            continue;
                        }
                        terms.push(p.mul(d).scale(&Coeff::int(binomial(k, l))));
                    }
                }
                terms
            })
            .collect();
        Ok(DiffOp::from_coeffs(parts.into_iter().map(sum).collect()))
    }

    /// Formal adjoint `Σ (−1)^k D^k ∘ p_k`.
    pub fn adjoint(&self) -> Result<DiffOp> {
        let Some(n) = self.order() else {
            return Ok(DiffOp::zero());
        };
        let derivs: Vec<Vec<RatFn>> = self
            .coeffs
            .par_iter()
            .enumerate()
            .map(|(k, p)| total_derivatives(p, k))
            .collect::<Result<_>>()?;
        let coeffs = (0..=n)
            .map(|l| {
                let mut terms = Vec::new();
                for k in l..=n {
                    let d = &derivs[k][k - l];
                    if d.is_zero() {
                        continue;
                    }
                    let sign = if k % 2 == 0 { 1 } else { -1 };
                    terms.push(d.scale(&Coeff::int(sign * binomial(k, l))));
                }
                sum(terms)
            })
            .collect();
        Ok(DiffOp::from_coeffs(coeffs))
    }

    /// `Σ p_k D^k(f)`.
    pub fn apply(&self, f: &RatFn) -> Result<RatFn> {
        let Some(n) = self.order() else {
            return Ok(RatFn::zero());
        };
        let d = total_derivatives(f, n)?;
        Ok(sum(self
            .coeffs
            .iter()
            .zip(&d)
            .filter(|(p, _)| !p.is_zero())
            .map(|(p, x)| p.mul(x))
            .collect()))
    }

    /// `q_m = Σ_k (∂p_k/∂u_m) D^k(f)`, so that `D_A f = Σ_m q_m D^m`.
    fn d_coeffs(&self, f: &RatFn) -> Result<Vec<RatFn>> {
        let Some(n) = self.order() else {
            return Ok(Vec::new());
        };
        let mut top = 0;
        for p in &self.coeffs {
            for id in p.all_vars() {
                if let IdKind::Jet(k) = classify(id) {
                    top = top.max(k as usize);
                }
            }
        }
        let df = total_derivatives(f, n)?;
        let partials: Vec<Vec<RatFn>> = self
            .coeffs
            .par_iter()
            .map(|p| {
                (0..=top)
                    .map(|m| p.diff(Atom::jet_id(m)?))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let q: Vec<RatFn> = (0..=top)
            .into_par_iter()
            .map(|m| {
                sum((0..=n)
                    .filter(|k| !partials[*k][m].is_zero())
                    .map(|k| partials[k][m].mul(&df[k]))
                    .collect())
            })
            .collect();
        Ok(q)
    }

    /// `D_A f = Σ_{k,m} (∂p_k/∂u_m) D^k(f) D^m`.
    pub fn d_operator(&self, f: &RatFn) -> Result<DiffOp> {
        Ok(DiffOp::from_coeffs(self.d_coeffs(f)?))
    }

    /// The three terms `(D_A h1)(A h2)`, `−(D_A h2)(A h1)`, `A((D_A h1)^* h2)`
    /// whose sum is the Jacobi residual.
    pub fn jacobi_terms(&self, h1: &RatFn, h2: &RatFn) -> Result<[RatFn; 3]> {
        let ((q1, q2), (g1, g2)) = rayon::join(
            || rayon::join(|| self.d_coeffs(h1), || self.d_coeffs(h2)),
            || rayon::join(|| self.apply(h1), || self.apply(h2)),
        );
        let (q1, q2, g1, g2) = (q1?, q2?, g1?, g2?);
        let pair = |q: &[RatFn], g: &RatFn| -> Result<RatFn> {
            let dg = total_derivatives(g, q.len().saturating_sub(1))?;
            Ok(sum(q
                .iter()
                .zip(&dg)
                .filter(|(a, _)| !a.is_zero())
                .map(|(a, b)| a.mul(b))
                .collect()))
        };
        let third = || -> Result<RatFn> {
            // Σ (−1)^m D^m(q_m h2) = a_0 − D(a_1 − D(a_2 − …))
            let mut r = RatFn::zero();
            for q in q1.iter().rev() {
                let a = q.mul(h2);
                r = if r.is_zero() {
                    a
                } else {
                    a.sub(&total_derivative(&r)?)
                };
            }
            self.apply(&r)
        };
        let ((t1, t2), t3) =
            rayon::join(|| rayon::join(|| pair(&q1, &g2), || pair(&q2, &g1)), third);
        Ok([t1?, t2?.neg(), t3?])
    }

    /// Left-hand side of the Jacobi condition for the given test functions.
    pub fn jacobi_residual(&self, h1: &RatFn, h2: &RatFn) -> Result<RatFn> {
        let [a, b, c] = self.jacobi_terms(h1, h2)?;
        Ok(a.add(&b).add(&c))
    }

    pub fn is_skew_adjoint(&self) -> Result<bool> {
        Ok(self.adjoint()?.add(self).is_zero())
    }

    pub fn is_self_adjoint(&self) -> Result<bool> {
        Ok(self.adjoint()?.sub(self).is_zero())
    }

    /// Skew-adjointness (exact) plus the Jacobi condition with formal test
    /// functions.
    pub fn is_hamiltonian(&self, cfg: &ProbeConfig) -> Result<HamiltonianReport> {
        let skew_adjoint = self.is_skew_adjoint()?;
        let h1 = RatFn::test_jet(1, 0)?;
        let h2 = RatFn::test_jet(2, 0)?;
        let terms = self.jacobi_terms(&h1, &h2)?;
        let residual = terms[0].add(&terms[1]).add(&terms[2]);
        let exact_path = !residual.has_kernels() && !residual.is_inexact();
        let (jacobi, method) = if residual.is_zero() && exact_path {
            (ProbeReport::exact_zero(), ZeroMethod::Exact)
        } else if exact_path {
            // a nonzero exact normal form is a proof; the probe only finds
            // a witness point to report
            let mut rep = probe_sum(&[&residual], cfg).or_else(|e| match e {
                Error::Inconclusive { trials } => Ok(ProbeReport {
                    verdict: ZeroVerdict::NonZero {
                        witness: Default::default(),
                        value: f64::NAN.into(),
                    },
                    trials,
                    singular: trials,
                    max_residual: f64::NAN,
                }),
                other => Err(other),
            })?;
            if rep.verdict.is_zero() {
                rep.verdict = ZeroVerdict::NonZero {
                    witness: Default::default(),
                    value: num_complex::Complex64::new(f64::NAN, 0.0),
                };
            }
            (rep, ZeroMethod::Exact)
        } else {
            let refs: Vec<&RatFn> = terms.iter().collect();
            let mut rep = probe_sum(&refs, cfg)?;
            if residual.is_zero() && !rep.verdict.is_zero() {
                // the normal form already vanishes identically
                rep.verdict = ZeroVerdict::ExactZero;
            }
            (rep, ZeroMethod::Probe)
        };
        Ok(HamiltonianReport {
            skew_adjoint,
            jacobi,
            method,
            residual_terms: residual.numer().len(),
        })
    }

    /// The operator with every `D_x` written out, for display.
    pub fn to_terms(&self) -> Vec<(Expr, usize)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| (c.to_expr(), k))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZeroMethod {
    /// Decided from the exact normal form.
    Exact,
    /// Decided by sampling.
    Probe,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianReport {
    pub skew_adjoint: bool,
    pub jacobi: ProbeReport,
    pub method: ZeroMethod,
    /// Number of terms in the numerator of the residual's normal form.
    pub residual_terms: usize,
}

impl HamiltonianReport {
    pub fn jacobi_holds(&self) -> bool {
        self.jacobi.verdict.is_zero()
    }

    /// Jacobi is only meaningful for skew-adjoint operators; both must hold.
    pub fn is_hamiltonian(&self) -> bool {
        self.skew_adjoint && self.jacobi_holds()
    }
}

pub(crate) fn sum(terms: Vec<RatFn>) -> RatFn {
    // pairwise to keep intermediate sizes balanced
    let mut v = terms;
    if v.is_empty() {
        return RatFn::zero();
    }
    while v.len() > 1 {
        let mut next = Vec::with_capacity(v.len().div_ceil(2));
        let mut it = v.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(a.add(&b)),
                None => next.push(a),
            }
        }
        v = next;
    }
    v.pop().unwrap()
}

impl fmt::Display for DiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms = self.to_terms();
        if terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (c, k)) in terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            match k {
                0 => write!(f, "({c})")?,
                1 => write!(f, "({c})*Dx")?,
                _ => write!(f, "({c})*Dx^{k}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn rf(s: &str) -> RatFn {
        parse(s).unwrap().to_ratfn().unwrap()
    }

    #[test]
    fn leibniz() {
        let a = DiffOp::dx().compose(&DiffOp::mult(rf("u"))).unwrap();
        assert_eq!(a, DiffOp::from_coeffs(vec![rf("u_1"), rf("u")]));
        let b = DiffOp::dx_pow(2).compose(&DiffOp::mult(rf("u"))).unwrap();
        assert_eq!(
            b,
            DiffOp::from_coeffs(vec![rf("u_2"), rf("2*u_1"), rf("u")])
        );
    }

    #[test]
    fn adjoints() {
        assert_eq!(DiffOp::dx().adjoint().unwrap(), DiffOp::dx().neg());
        let m = DiffOp::mult(rf("x*u_2"));
        assert_eq!(m.adjoint().unwrap(), m);
        let s = DiffOp::from_symmetrized(&[(rf("u^2"), 1), (rf("u_1/u"), 3)]).unwrap();
        assert!(s.is_skew_adjoint().unwrap());
    }

    #[test]
    fn symmetrized_first_order() {
        let f = rf("u^3 + x");
        let s = DiffOp::from_symmetrized(&[(f.clone(), 1)]).unwrap();
        let df = total_derivative(&f).unwrap();
        assert_eq!(s, DiffOp::from_coeffs(vec![df, f.scale(&Coeff::int(2))]));
    }

    #[test]
    fn apply_and_d_operator() {
        let a = DiffOp::from_coeffs(vec![rf("u_1"), rf("2*u")]);
        assert_eq!(a.apply(&RatFn::one()).unwrap(), rf("u_1"));
        let f = rf("u_2*x");
        let d = a.d_operator(&f).unwrap();
        let df = total_derivative(&f).unwrap();
        assert_eq!(
            d,
            DiffOp::from_coeffs(vec![df.scale(&Coeff::int(2)), f.clone()])
        );
        assert!(DiffOp::dx_pow(3).d_operator(&f).unwrap().is_zero());
    }

    #[test]
    fn constant_coefficient_jacobi_vanishes() {
        let a = DiffOp::from_coeffs(vec![RatFn::zero(), rf("7"), RatFn::zero(), RatFn::one()]);
        let r = a
            .jacobi_residual(
                &RatFn::test_jet(1, 0).unwrap(),
                &RatFn::test_jet(2, 0).unwrap(),
            )
            .unwrap();
        assert!(r.is_zero());
    }

    #[test]
    fn first_order_hydrodynamic_is_hamiltonian() {
        let a = DiffOp::from_symmetrized(&[(rf("u"), 1)]).unwrap();
        let rep = a.is_hamiltonian(&ProbeConfig::default()).unwrap();
        assert!(rep.is_hamiltonian());
        assert_eq!(rep.jacobi.verdict, ZeroVerdict::ExactZero);
    }

    #[test]
    fn unsymmetrized_is_not_skew() {
        let a = DiffOp::from_coeffs(vec![RatFn::zero(), rf("u"), RatFn::zero(), RatFn::one()]);
        assert!(!a
            .is_hamiltonian(&ProbeConfig::default())
            .unwrap()
            .is_hamiltonian());
    }
}
