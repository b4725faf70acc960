//! Polynomial ansatz for momentum densities.
//!
//! `h(u) = Σ c_i u^i` with symbolic `c_i`; the residual is linear in the
//! `c_i`, so collecting it over every other atom gives a linear system that
//! is solved exactly. Kernel atoms are treated as independent, which can
//! miss solutions that rely on trigonometric identities but never produces
//! a wrong one.

use rustc_hash::FxHashMap;

use crate::error::Result;
use crate::expr::{Atom, Coeff, RatFn, VarId};

const PREFIX: &str = "__ansatz_c";

fn unknown(i: usize) -> RatFn {
    RatFn::param(&format!("{PREFIX}{i}"))
}

fn unknown_id(i: usize) -> Result<VarId> {
    Atom::param(&format!("{PREFIX}{i}")).id()
}

/// Solves `A c = b` exactly; free unknowns are set to zero. `None` when
/// inconsistent.
pub(crate) fn solve_linear(mut rows: Vec<(Vec<Coeff>, Coeff)>, n: usize) -> Option<Vec<Coeff>> {
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut r = 0;
    for col in 0..n {
        let Some(p) = (r..rows.len()).find(|i| !rows[*i].0[col].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r].0[col].recip()?;
        let (a, b) = &mut rows[r];
        for v in a.iter_mut() {
            *v = v.mul(&inv);
        }
        *b = b.mul(&inv);
        let (pa, pb) = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r || row.0[col].is_zero() {
                continue;
            }
            let f = row.0[col].clone();
            for (v, pv) in row.0.iter_mut().zip(&pa) {
                *v = v.sub(&f.mul(pv));
            }
            row.1 = row.1.sub(&f.mul(&pb));
        }
        pivots.push((r, col));
        r += 1;
    }
    if rows[r..].iter().any(|(_, b)| !b.is_zero()) {
        return None;
    }
    let mut sol = vec![Coeff::ZERO; n];
    for (row, col) in pivots {
        sol[col] = rows[row].1.clone();
    }
    Some(sol)
}

/// Finds a polynomial `h(u)` of degree at most `degree` with
/// `residual(h) ≡ 0`, where `residual` is affine in `h`.
pub(crate) fn polynomial_solution(
    degree: usize,
    residual: impl Fn(&RatFn) -> Result<RatFn>,
) -> Result<Option<RatFn>> {
    let u = RatFn::u();
    let mut h = RatFn::zero();
    for i in 0..=degree {
        h = h.add(&unknown(i).mul(&u.pow(i as i32)?));
    }
    let r = residual(&h)?;
    if r.is_inexact() {
        return Ok(None);
    }
    let ids: Vec<VarId> = (0..=degree).map(unknown_id).collect::<Result<_>>()?;
    if r.den_factors().iter().any(|(f, _)| ids.iter().any(|id| f.contains_var(*id))) {
        return Ok(None);
    }
    // group the numerator by every atom except the unknowns
    let mut rows: FxHashMap<crate::expr::Mono, (Vec<Coeff>, Coeff)> = FxHashMap::default();
    for (m, c) in r.numer().terms() {
        let (key, rest) = m.split(|v| ids.contains(&v));
        let row = rows.entry(rest).or_insert_with(|| (vec![Coeff::ZERO; ids.len()], Coeff::ZERO));
        match key.0.as_slice() {
            [] => row.1 = row.1.sub(c),
            [(v, 1)] => {
                let i = ids.iter().position(|id| id == v).expect("unknown id");
                row.0[i] = row.0[i].add(c);
            }
            _ => return Ok(None),
        }
    }
    let Some(sol) = solve_linear(rows.into_values().collect(), ids.len()) else {
        return Ok(None);
    };
    let mut out = RatFn::zero();
    for (i, c) in sol.iter().enumerate() {
        out = out.add(&RatFn::constant(c.clone()).mul(&u.pow(i as i32)?));
    }
    Ok(Some(out))
}

/// `∫ h du` for a polynomial `h(u)` with constant coefficients.
pub(crate) fn integrate_u(h: &RatFn) -> Option<RatFn> {
    if !h.den_factors().is_empty() {
        return None;
    }
    let u0 = Atom::jet_id(0).ok()?;
    let mut out = RatFn::zero();
    for (m, c) in h.numer().terms() {
        let e = match m.0.as_slice() {
            [] => 0,
            [(v, e)] if *v == u0 && *e >= 0 => *e,
            _ => return None,
        };
        let c = c.mul_rat(&crate::expr::Rat::new(1, e as i64 + 1));
        out = out.add(&RatFn::constant(c).mul(&RatFn::u().pow(e + 1).ok()?));
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn rf(s: &str) -> RatFn {
        parse(s).unwrap().to_ratfn().unwrap()
    }

    #[test]
    fn linear_solver() {
        let c = |n: i64| Coeff::int(n);
        let rows = vec![(vec![c(1), c(1)], c(3)), (vec![c(1), c(-1)], c(1))];
        assert_eq!(solve_linear(rows, 2), Some(vec![c(2), c(1)]));
        let rows = vec![(vec![c(1), c(1)], c(3)), (vec![c(2), c(2)], c(1))];
        assert_eq!(solve_linear(rows, 2), None);
    }

    #[test]
    fn finds_polynomial_solution() {
        // h'' - 2 = 0
        let two = RatFn::int(2);
        let u0 = Atom::jet_id(0).unwrap();
        let h = polynomial_solution(4, |h| Ok(h.diff(u0)?.diff(u0)?.sub(&two))).unwrap().unwrap();
        assert_eq!(h, rf("u^2"));
        // h' = 1/u has no polynomial solution
        let r = polynomial_solution(4, |h| Ok(h.diff(u0)?.sub(&rf("1/u")))).unwrap();
        assert!(r.is_none());
    }

    #[test]
    fn integration() {
        assert_eq!(integrate_u(&rf("3*u^2 - 1/2")).unwrap(), rf("u^3 - u/2"));
        assert!(integrate_u(&rf("x")).is_none());
    }
}
