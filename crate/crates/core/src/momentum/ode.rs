//! Linear ODEs in `u` and their power-series solutions.

use std::fmt;

use num_complex::Complex64;
use rustc_hash::FxHashMap;

use crate::catalog::Sign;
use crate::error::{Error, Result};
use crate::expr::{classify, eval_ratfn, Atom, Coeff, Expr, IdKind, JetPoint, RatFn, Scalar, VarId};

/// `Σ_k c_k(u) y^{(k)}(u) = rhs(u)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearODE {
    coeffs: Vec<RatFn>,
    rhs: RatFn,
    symbol: String,
}

fn u_only(name: &str, f: &RatFn) -> Result<()> {
    for id in f.all_vars() {
        let ok = match classify(id) {
            IdKind::Jet(0) => true,
            IdKind::Dynamic => matches!(Atom::from_id(id), Atom::Param(_) | Atom::Kernel(..)),
            _ => false,
        };
        if !ok {
            return Err(Error::InvalidParameter(format!("{name} must depend on u only, got {}", f.to_expr())));
        }
    }
    Ok(())
}

fn u_id() -> VarId {
    Atom::jet_id(0).expect("u is always in range")
}

impl LinearODE {
    pub fn new(mut coeffs: Vec<RatFn>, rhs: RatFn, symbol: &str) -> Result<LinearODE> {
        while coeffs.last().is_some_and(RatFn::is_zero) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            return Err(Error::InvalidParameter("leading coefficient must be nonzero".into()));
        }
        for (k, c) in coeffs.iter().enumerate() {
            u_only(&format!("coefficient {k}"), c)?;
        }
        u_only("right-hand side", &rhs)?;
        Ok(LinearODE { coeffs, rhs, symbol: symbol.to_string() })
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[RatFn] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> RatFn {
        self.coeffs.get(k).cloned().unwrap_or_else(RatFn::zero)
    }

    pub fn rhs(&self) -> &RatFn {
        &self.rhs
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    /// `Σ c_k y^{(k)} − rhs` for a function `y(u)`.
    pub fn residual(&self, y: &RatFn) -> Result<RatFn> {
        let u = u_id();
        let mut d = y.clone();
        let mut acc = self.rhs.neg();
        for c in &self.coeffs {
            if !c.is_zero() {
                acc = acc.add(&c.mul(&d));
            }
            d = d.diff(u)?;
        }
        Ok(acc)
    }
}

impl fmt::Display for LinearODE {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let y = match k {
                0 => self.symbol.clone(),
                _ => format!("{}^({k})", self.symbol),
            };
            let e = c.to_expr();
            let term = if c.is_one() {
                y
            } else if c.neg().is_one() {
                format!("-{y}")
            } else {
                match e {
                    Expr::Num(_) => format!("{e}*{y}"),
                    Expr::Neg(inner) if matches!(*inner, Expr::Num(_)) => format!("-{inner}*{y}"),
                    _ => format!("({e})*{y}"),
                }
            };
            parts.push(term);
        }
        let mut s = String::new();
        for (i, p) in parts.iter().enumerate() {
            if i == 0 {
                s.push_str(p);
            } else if let Some(rest) = p.strip_prefix('-') {
                s.push_str(" - ");
                s.push_str(rest);
            } else {
                s.push_str(" + ");
                s.push_str(p);
            }
        }
        write!(f, "{s} = {}", self.rhs.to_expr())
    }
}

/// `±y'''''  + 2α y''' + 3α' y'' + (3α'' + 2β) y' + (α''' + β') y = 1`,
/// the equation for `h(u)` in a density `∫h du` of the fifth-order family
/// with leading coefficient `±1/u_1⁴`.
pub fn momentum_ode_fifth(alpha: &RatFn, beta: &RatFn, sign: Sign) -> Result<LinearODE> {
    u_only("alpha", alpha)?;
    u_only("beta", beta)?;
    let u = u_id();
    let a1 = alpha.diff(u)?;
    let a2 = a1.diff(u)?;
    let a3 = a2.diff(u)?;
    let b1 = beta.diff(u)?;
    let coeffs = vec![
        a3.add(&b1),
        a2.scale(&Coeff::int(3)).add(&beta.scale(&Coeff::int(2))),
        a1.scale(&Coeff::int(3)),
        alpha.scale(&Coeff::int(2)),
        RatFn::zero(),
        RatFn::int(sign.value()),
    ];
    LinearODE::new(coeffs, RatFn::one(), "h")
}

/// `±p'''' + 2f p'' + f' p' = 1`, the equation for the density `p(u)` of the
/// conjugated third-order family.
pub fn momentum_ode_third(f: &RatFn, sign: Sign) -> Result<LinearODE> {
    u_only("f", f)?;
    let f1 = f.diff(u_id())?;
    let coeffs = vec![RatFn::zero(), f1, f.scale(&Coeff::int(2)), RatFn::zero(), RatFn::int(sign.value())];
    LinearODE::new(coeffs, RatFn::one(), "p")
}

/// Truncated Taylor solution about `u0`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesSolution {
    pub u0: Scalar,
    /// `a_0 … a_N` with `y = Σ a_n (u − u0)^n`.
    pub coeffs: Vec<Scalar>,
    /// Largest coefficient of `(u − u0)^n`, `n ≤ N − order`, in the
    /// residual of the truncated series. Zero up to rounding by construction.
    pub residual: f64,
    /// The series as a polynomial when it solves the equation exactly.
    pub closed_form: Option<RatFn>,
}

impl SeriesSolution {
    pub fn is_exact(&self) -> bool {
        self.coeffs.iter().all(Scalar::is_exact)
    }

    pub fn eval(&self, u: f64) -> Complex64 {
        let t = Complex64::new(u, 0.0) - self.u0.to_c64();
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, a| acc * t + a.to_c64())
    }

    /// The truncated series as a polynomial in `u`, when its coefficients
    /// are exact.
    pub fn polynomial(&self) -> Option<RatFn> {
        let u0 = self.u0.to_coeff()?;
        let t = RatFn::u().sub(&RatFn::constant(u0));
        let mut acc = RatFn::zero();
        for a in self.coeffs.iter().rev() {
            acc = acc.mul(&t).add(&RatFn::constant(a.to_coeff()?));
        }
        Some(acc)
    }
}

/// Value of `f` at `u = u0`: exact when the substitution leaves a constant,
/// floating otherwise.
fn value_at(f: &RatFn, u0: &Scalar) -> Result<Scalar> {
    if let Some(c) = u0.to_coeff() {
        let mut map = FxHashMap::default();
        map.insert(u_id(), RatFn::constant(c));
        let v = f.substitute(&map)?;
        if let Some(k) = v.as_constant() {
            return Ok(Scalar::from_coeff(&k));
        }
    }
    let p = JetPoint::new().with(u_id(), u0.clone());
    eval_ratfn(f, &p)
}

/// `f^{(m)}(u0)/m!` for `m = 0..=n`.
fn taylor(f: &RatFn, u0: &Scalar, n: usize) -> Result<Vec<Scalar>> {
    let u = u_id();
    let mut out = Vec::with_capacity(n + 1);
    let mut g = f.clone();
    let mut fact = Scalar::int(1);
    for m in 0..=n {
        if g.is_zero() {
            out.resize(n + 1, Scalar::int(0));
            break;
        }
        if m > 0 {
            fact = fact.mul(&Scalar::int(m as i64));
        }
        let v = value_at(&g, u0).map_err(|e| match e {
            Error::DivisionByZero | Error::Domain(_) => Error::Singular(format!("coefficient {} is singular at u = {u0}", f.to_expr())),
            other => other,
        })?;
        out.push(v.checked_div(&fact).expect("factorial is nonzero"));
        g = g.diff(u)?;
    }
    Ok(out)
}

/// `j!/(j−k)!`.
fn falling(j: usize, k: usize) -> Scalar {
    ((j - k + 1)..=j).fold(Scalar::int(1), |acc, i| acc.mul(&Scalar::int(i as i64)))
}

/// Degree-`n` Taylor polynomial of the solution with
/// `y^{(i)}(u0) = init[i]`.
pub fn solve_ode(ode: &LinearODE, u0: &Scalar, init: &[Scalar], n: usize) -> Result<SeriesSolution> {
    let ord = ode.order();
    if init.len() != ord {
        return Err(Error::InvalidParameter(format!("expected {ord} initial values, got {}", init.len())));
    }
    if n + 1 < ord {
        return Err(Error::InvalidParameter(format!("series degree {n} is below the order {ord}")));
    }
    let gamma: Vec<Vec<Scalar>> = ode.coeffs().iter().map(|c| taylor(c, u0, n)).collect::<Result<_>>()?;
    let rho = taylor(ode.rhs(), u0, n)?;
    let lead = gamma[ord][0].clone();
    if lead.is_zero() {
        return Err(Error::Singular(format!("leading coefficient vanishes at u = {u0}")));
    }
    let zero = Scalar::int(0);
    let mut a: Vec<Scalar> = Vec::with_capacity(n + 1);
    let mut fact = Scalar::int(1);
    for (i, v) in init.iter().enumerate() {
        if i > 0 {
            fact = fact.mul(&Scalar::int(i as i64));
        }
        a.push(v.checked_div(&fact).expect("factorial is nonzero"));
    }
    // coefficient of t^m in Σ c_k y^(k), given a[..] (missing entries are 0)
    let lhs_coeff = |a: &[Scalar], m: usize, skip_top: bool| -> Scalar {
        let mut s = zero.clone();
        for (k, g) in gamma.iter().enumerate() {
            for (j, gj) in g.iter().enumerate().take(m + 1) {
                if gj.is_zero() || (skip_top && k == ord && j == 0) {
                    continue;
                }
                let idx = m - j + k;
                if let Some(v) = a.get(idx) {
                    if !v.is_zero() {
                        s = s.add(&gj.mul(v).mul(&falling(idx, k)));
                    }
                }
            }
        }
        s
    };
    let top = if n >= ord { n - ord + 1 } else { 0 };
    for m in 0..top {
        let s = rho[m].sub(&lhs_coeff(&a, m, true));
        let d = lead.mul(&falling(m + ord, ord));
        a.push(s.checked_div(&d).ok_or_else(|| Error::Singular("zero pivot in series recurrence".into()))?);
    }
    a.truncate(n + 1);
    while a.len() < n + 1 {
        a.push(zero.clone());
    }
    let mut residual: f64 = 0.0;
    for m in 0..top {
        residual = residual.max(lhs_coeff(&a, m, false).sub(&rho[m]).abs());
    }
    let mut sol = SeriesSolution { u0: u0.clone(), coeffs: a, residual, closed_form: None };
    if sol.is_exact() {
        if let Some(p) = sol.polynomial() {
            if ode.residual(&p)?.is_zero() {
                sol.closed_form = Some(p);
            }
        }
    }
    Ok(sol)
}

/// Comparison of the series with a fourth-order Runge–Kutta integration of
/// the same initial-value problem.
#[derive(Clone, Debug, PartialEq)]
pub struct NumericCheck {
    pub radius: f64,
    pub steps: usize,
    /// Largest `|y_rk4(u) − y_series(u)|` on `[u0 − radius, u0 + radius]`.
    pub max_deviation: f64,
}

fn eval_at(f: &RatFn, u: f64) -> Result<Complex64> {
    let p = JetPoint::new().with(u_id(), Scalar::float(u));
    Ok(eval_ratfn(f, &p)?.to_c64())
}

pub fn numeric_check(ode: &LinearODE, sol: &SeriesSolution, init: &[Scalar], radius: f64, steps: usize) -> Result<NumericCheck> {
    let ord = ode.order();
    if steps == 0 || radius <= 0.0 {
        return Err(Error::InvalidParameter("radius and steps must be positive".into()));
    }
    let u0 = sol.u0.to_c64().re;
    let deriv = |u: f64, y: &[Complex64]| -> Result<Vec<Complex64>> {
        let mut out: Vec<Complex64> = y[1..].to_vec();
        let mut s = eval_at(ode.rhs(), u)?;
        for (k, yk) in y.iter().enumerate() {
            let c = ode.coeff(k);
            if !c.is_zero() {
                s -= eval_at(&c, u)? * yk;
            }
        }
        out.push(s / eval_at(&ode.coeff(ord), u)?);
        Ok(out)
    };
    let mut max_dev: f64 = 0.0;
    for dir in [1.0, -1.0] {
        let h = dir * radius / steps as f64;
        let mut y: Vec<Complex64> = init.iter().map(Scalar::to_c64).collect();
        let mut u = u0;
        for _ in 0..steps {
            let k1 = deriv(u, &y)?;
            let y2: Vec<Complex64> = y.iter().zip(&k1).map(|(a, b)| a + b * (h / 2.0)).collect();
            let k2 = deriv(u + h / 2.0, &y2)?;
            let y3: Vec<Complex64> = y.iter().zip(&k2).map(|(a, b)| a + b * (h / 2.0)).collect();
            let k3 = deriv(u + h / 2.0, &y3)?;
            let y4: Vec<Complex64> = y.iter().zip(&k3).map(|(a, b)| a + b * h).collect();
            let k4 = deriv(u + h, &y4)?;
            for i in 0..ord {
                y[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
            }
            u += h;
            max_dev = max_dev.max((y[0] - sol.eval(u)).norm());
        }
    }
    Ok(NumericCheck { radius, steps, max_deviation: max_dev })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn rf(s: &str) -> RatFn {
        parse(s).unwrap().to_ratfn().unwrap()
    }

    fn q(n: i64, d: i64) -> Scalar {
        Scalar::ratio(n, d)
    }

    #[test]
    fn fifth_order_coefficients() {
        let ode = momentum_ode_fifth(&rf("1/2"), &rf("-1"), Sign::Plus).unwrap();
        let expect: Vec<RatFn> = ["0", "-2", "0", "1", "0", "1"].iter().map(|s| rf(s)).collect();
        assert_eq!(ode.coeffs(), expect.as_slice());
        assert_eq!(ode.to_string(), "h^(5) + h^(3) - 2*h^(1) = 1");
        assert!(ode.residual(&rf("-u/2")).unwrap().is_zero());
    }

    #[test]
    fn sine_coefficients_admit_constant_solution() {
        let ode = momentum_ode_fifth(&rf("sin(u)"), &rf("sin(u) + u"), Sign::Plus).unwrap();
        assert_eq!(ode.coeff(0), RatFn::one());
        assert_eq!(ode.coeff(1), rf("2*u - sin(u)"));
        assert!(ode.residual(&RatFn::one()).unwrap().is_zero());
    }

    #[test]
    fn third_order_coefficients() {
        let ode = momentum_ode_third(&rf("u"), Sign::Plus).unwrap();
        assert_eq!(ode.to_string(), "p^(4) + (2*u)*p^(2) + p^(1) = 1");
        let ode = momentum_ode_third(&rf("3"), Sign::Plus).unwrap();
        assert!(ode.residual(&rf("u^2/12")).unwrap().is_zero());
    }

    #[test]
    fn series_terminates_for_linear_solution() {
        let ode = momentum_ode_fifth(&rf("1/2"), &rf("-1"), Sign::Plus).unwrap();
        let init = [q(0, 1), q(-1, 2), q(0, 1), q(0, 1), q(0, 1)];
        let s = solve_ode(&ode, &q(0, 1), &init, 12).unwrap();
        assert_eq!(s.coeffs.len(), 13);
        assert_eq!(s.coeffs[1], q(-1, 2));
        assert!(s.coeffs.iter().enumerate().all(|(i, c)| i == 1 || c.is_zero()));
        assert_eq!(s.closed_form, Some(rf("-u/2")));
        assert_eq!(s.residual, 0.0);
    }

    #[test]
    fn pure_fifth_derivative() {
        let ode = LinearODE::new(vec![RatFn::zero(); 5].into_iter().chain([RatFn::one()]).collect(), RatFn::one(), "h").unwrap();
        let s = solve_ode(&ode, &q(0, 1), &vec![q(0, 1); 5], 6).unwrap();
        assert_eq!(s.closed_form, Some(rf("u^5/120")));
    }

    #[test]
    fn kernel_coefficients_at_zero() {
        let ode = momentum_ode_fifth(&rf("sin(u)"), &rf("sin(u) + u"), Sign::Plus).unwrap();
        let init = [q(1, 1), q(0, 1), q(0, 1), q(0, 1), q(0, 1)];
        let s = solve_ode(&ode, &q(0, 1), &init, 12).unwrap();
        assert_eq!(s.coeffs[0], q(1, 1));
        assert!(s.coeffs[1..].iter().all(Scalar::is_zero));
        assert!(s.residual < 1e-12);
        let chk = numeric_check(&ode, &s, &init, 0.5, 200).unwrap();
        assert!(chk.max_deviation < 1e-9, "{chk:?}");
    }

    #[test]
    fn series_matches_runge_kutta() {
        // y'' + y = 0, y(0) = 0, y'(0) = 1
        let ode = LinearODE::new(vec![RatFn::one(), RatFn::zero(), RatFn::one()], RatFn::zero(), "y").unwrap();
        let init = [q(0, 1), q(1, 1)];
        let s = solve_ode(&ode, &q(0, 1), &init, 20).unwrap();
        assert_eq!(s.coeffs[3], q(-1, 6));
        let chk = numeric_check(&ode, &s, &init, 1.0, 400).unwrap();
        assert!(chk.max_deviation < 1e-10, "{chk:?}");
    }

    #[test]
    fn singular_point_rejected() {
        let ode = LinearODE::new(vec![RatFn::one(), RatFn::u()], RatFn::one(), "y").unwrap();
        assert!(matches!(solve_ode(&ode, &q(0, 1), &[q(1, 1)], 4), Err(Error::Singular(_))));
        assert!(matches!(
            LinearODE::new(vec![RatFn::x()], RatFn::one(), "y"),
            Err(Error::InvalidParameter(_))
        ));
    }
}
