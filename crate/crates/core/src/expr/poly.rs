//! Sparse multivariate Laurent polynomials with exact Gaussian-rational
//! coefficients.
//!
//! Terms are kept sorted in descending lexicographic order on exponent
//! vectors (variables compared by id), which is a group order on `Z^n`, so
//! multiplying every term by one monomial never reorders anything.

use std::cmp::Ordering;
use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use rustc_hash::FxHashMap;
use smallvec::SmallVec;

use super::atom::VarId;
use super::number::Coeff;

/// Sparse exponent vector, sorted by variable id, no zero exponents.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Mono(pub SmallVec<[(VarId, i32); 4]>);

impl Mono {
    pub fn one() -> Mono {
        Mono(SmallVec::new())
    }

    pub fn var(v: VarId, e: i32) -> Mono {
        if e == 0 {
            return Mono::one();
        }
        let mut s = SmallVec::new();
        s.push((v, e));
        Mono(s)
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn exponent(&self, v: VarId) -> i32 {
        match self.0.binary_search_by_key(&v, |p| p.0) {
            Ok(i) => self.0[i].1,
            Err(_) => 0,
        }
    }

    pub fn mul(&self, o: &Mono) -> Mono {
        if o.is_one() {
            return self.clone();
        }
        if self.is_one() {
            return o.clone();
        }
        let (a, b) = (&self.0, &o.0);
        let mut out = SmallVec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    let e = a[i].1 + b[j].1;
                    if e != 0 {
                        out.push((a[i].0, e));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Mono(out)
    }

    pub fn inv(&self) -> Mono {
        Mono(self.0.iter().map(|&(v, e)| (v, -e)).collect())
    }

    pub fn pow(&self, n: i32) -> Mono {
        if n == 0 {
            return Mono::one();
        }
        Mono(self.0.iter().map(|&(v, e)| (v, e * n)).collect())
    }

    /// Removes variable `v`, returning its exponent.
    pub fn without(&self, v: VarId) -> (Mono, i32) {
        match self.0.binary_search_by_key(&v, |p| p.0) {
            Ok(i) => {
                let mut m = self.0.clone();
                let (_, e) = m.remove(i);
                (Mono(m), e)
            }
            Err(_) => (self.clone(), 0),
        }
    }

    pub fn has_negative(&self) -> bool {
        self.0.iter().any(|p| p.1 < 0)
    }

    /// Splits into the part over variables accepted by `keep` and the rest.
    pub fn split(&self, keep: impl Fn(VarId) -> bool) -> (Mono, Mono) {
        let mut a = SmallVec::new();
        let mut b = SmallVec::new();
        for &p in &self.0 {
            if keep(p.0) {
                a.push(p);
            } else {
                b.push(p);
            }
        }
        (Mono(a), Mono(b))
    }

    pub fn lex_cmp(&self, o: &Mono) -> Ordering {
        let (a, b) = (&self.0, &o.0);
        let (mut i, mut j) = (0, 0);
        loop {
            match (a.get(i), b.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(&(_, ea)), None) => return ea.cmp(&0),
                (None, Some(&(_, eb))) => return 0.cmp(&eb),
                (Some(&(va, ea)), Some(&(vb, eb))) => match va.cmp(&vb) {
                    Ordering::Less => return ea.cmp(&0),
                    Ordering::Greater => return 0.cmp(&eb),
                    Ordering::Equal => {
                        if ea != eb {
                            return ea.cmp(&eb);
                        }
                        i += 1;
                        j += 1;
                    }
                },
            }
        }
    }
}

/// Orders monomials by [`Mono::lex_cmp`] for use as a map key.
#[derive(PartialEq, Eq)]
struct LexKey(Mono);

impl PartialOrd for LexKey {
    fn partial_cmp(&self, o: &LexKey) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for LexKey {
    fn cmp(&self, o: &LexKey) -> Ordering {
        self.0.lex_cmp(&o.0)
    }
}

/// Laurent polynomial; terms sorted descending by [`Mono::lex_cmp`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Poly {
    terms: Vec<(Mono, Coeff)>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly { terms: Vec::new() }
    }

    pub fn constant(c: Coeff) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: vec![(Mono::one(), c)],
        }
    }

    pub fn one() -> Poly {
        Poly::constant(Coeff::ONE)
    }

    pub fn var(v: VarId) -> Poly {
        Poly::monomial(Mono::var(v, 1), Coeff::ONE)
    }

    pub fn monomial(m: Mono, c: Coeff) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: vec![(m, c)],
        }
    }

    /// Builds from arbitrary (possibly repeated, unsorted) terms.
    pub fn from_terms(terms: impl IntoIterator<Item = (Mono, Coeff)>) -> Poly {
        let mut acc: FxHashMap<Mono, Coeff> = FxHashMap::default();
        for (m, c) in terms {
            match acc.get_mut(&m) {
                Some(e) => *e = e.add(&c),
                None => {
                    acc.insert(m, c);
                }
            }
        }
        Poly::from_map(acc)
    }

    fn from_map(acc: FxHashMap<Mono, Coeff>) -> Poly {
        let mut terms: Vec<(Mono, Coeff)> = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        terms.sort_unstable_by(|a, b| b.0.lex_cmp(&a.0));
        Poly { terms }
    }

    pub fn terms(&self) -> &[(Mono, Coeff)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0.is_one() && self.terms[0].1.is_one()
    }

    /// The value if this is a constant (including zero).
    pub fn as_constant(&self) -> Option<Coeff> {
        match self.terms.as_slice() {
            [] => Some(Coeff::ZERO),
            [(m, c)] if m.is_one() => Some(c.clone()),
            _ => None,
        }
    }

    pub fn as_monomial(&self) -> Option<(&Mono, &Coeff)> {
        match self.terms.as_slice() {
            [(m, c)] => Some((m, c)),
            _ => None,
        }
    }

    pub fn leading(&self) -> Option<&(Mono, Coeff)> {
        self.terms.first()
    }

    pub fn add(&self, o: &Poly) -> Poly {
        if o.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return o.clone();
        }
        let (a, b) = (&self.terms, &o.terms);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.lex_cmp(&b[j].0) {
                Ordering::Greater => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Less => {
                    out.push(b[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let c = a[i].1.add(&b[j].1);
                    if !c.is_zero() {
                        out.push((a[i].0.clone(), c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Poly { terms: out }
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), c.neg()))
                .collect(),
        }
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        self.add(&o.neg())
    }

    pub fn scale(&self, k: &Coeff) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        if k.is_one() {
            return self.clone();
        }
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), c.mul(k)))
                .collect(),
        }
    }

    /// Multiplies by `c·m`; ordering is preserved.
    pub fn mul_term(&self, m: &Mono, c: &Coeff) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(mm, cc)| (mm.mul(m), cc.mul(c)))
                .filter(|(_, c)| !c.is_zero())
                .collect(),
        }
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero();
        }
        if let Some((m, c)) = o.as_monomial() {
            return self.mul_term(m, c);
        }
        if let Some((m, c)) = self.as_monomial() {
            return o.mul_term(m, c);
        }
        let (small, large) = if self.len() <= o.len() {
            (self, o)
        } else {
            (o, self)
        };
        let mut acc: FxHashMap<Mono, Coeff> =
            FxHashMap::with_capacity_and_hasher(large.len() * 2, Default::default());
        for (ms, cs) in &small.terms {
            for (ml, cl) in &large.terms {
                let m = ms.mul(ml);
                let c = cs.mul(cl);
                match acc.get_mut(&m) {
                    Some(e) => *e = e.add(&c),
                    None => {
                        acc.insert(m, c);
                    }
                }
            }
        }
        Poly::from_map(acc)
    }

    pub fn pow(&self, n: u32) -> Poly {
        let mut acc = Poly::one();
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Partial derivative with respect to the variable `v`.
    pub fn diff(&self, v: VarId) -> Poly {
        let mut out = Vec::new();
        for (m, c) in &self.terms {
            let e = m.exponent(v);
            if e == 0 {
                continue;
            }
            let nm = m.mul(&Mono::var(v, -1));
            out.push((nm, c.mul(&Coeff::int(e as i64))));
        }
        Poly { terms: out }
    }

    /// Variables that occur, ascending.
    pub fn vars(&self) -> Vec<VarId> {
        let mut vs: Vec<VarId> = self
            .terms
            .iter()
            .flat_map(|(m, _)| m.0.iter().map(|p| p.0))
            .collect();
        vs.sort_unstable();
        vs.dedup();
        vs
    }

    pub fn contains_var(&self, v: VarId) -> bool {
        self.terms.iter().any(|(m, _)| m.exponent(v) != 0)
    }

    pub fn has_negative_exponents(&self) -> bool {
        self.terms.iter().any(|(m, _)| m.has_negative())
    }

    /// Largest monomial dividing every term (exponents may be negative).
    pub fn monomial_content(&self) -> Mono {
        let vars = self.vars();
        let mut out = SmallVec::new();
        for v in vars {
            let mn = self
                .terms
                .iter()
                .map(|(m, _)| m.exponent(v))
                .min()
                .unwrap_or(0);
            if mn != 0 {
                out.push((v, mn));
            }
        }
        Mono(out)
    }

    pub fn max_degree(&self, v: VarId) -> i32 {
        self.terms
            .iter()
            .map(|(m, _)| m.exponent(v))
            .max()
            .unwrap_or(0)
    }

    pub fn min_degree(&self, v: VarId) -> i32 {
        self.terms
            .iter()
            .map(|(m, _)| m.exponent(v))
            .min()
            .unwrap_or(0)
    }

    /// Exact quotient `self / d` if `d` divides `self`. `d` must have no
    /// monomial content and no negative exponents.
    pub fn div_exact(&self, d: &Poly) -> Option<Poly> {
        if d.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Poly::zero());
        }
        if let Some(c) = d.as_constant() {
            return Some(self.scale(&c.recip()?));
        }
        let shift = self.monomial_content();
        let (dm, dc) = d.leading()?.clone();
        let dc_inv = dc.recip()?;
        let dm_inv = dm.inv();
        let shift_inv = shift.inv();
        let mut rem: BTreeMap<LexKey, Coeff> = self
            .terms
            .iter()
            .map(|(m, c)| (LexKey(m.mul(&shift_inv)), c.clone()))
            .collect();
        let mut quot: Vec<(Mono, Coeff)> = Vec::new();
        while let Some((LexKey(rm), rc)) = rem.pop_last() {
            let qm = rm.mul(&dm_inv);
            if qm.has_negative() {
                return None;
            }
            let qc = rc.mul(&dc_inv);
            for (m, c) in &d.terms[1..] {
                match rem.entry(LexKey(m.mul(&qm))) {
                    Entry::Occupied(mut o) => {
                        let v = o.get().sub(&c.mul(&qc));
                        if v.is_zero() {
                            o.remove();
                        } else {
                            *o.get_mut() = v;
                        }
                    }
                    Entry::Vacant(v) => {
                        v.insert(c.mul(&qc).neg());
                    }
                }
            }
            quot.push((qm, qc));
        }
        let q = Poly { terms: quot };
        Some(q.mul_term(&shift, &Coeff::ONE))
    }

    /// Groups terms by their part over the variables selected by `key`;
    /// the values hold the remaining parts.
    pub fn collect_by(&self, key: impl Fn(VarId) -> bool) -> Vec<(Mono, Poly)> {
        let mut groups: FxHashMap<Mono, Vec<(Mono, Coeff)>> = FxHashMap::default();
        for (m, c) in &self.terms {
            let (k, rest) = m.split(&key);
            groups.entry(k).or_default().push((rest, c.clone()));
        }
        let mut out: Vec<(Mono, Poly)> = groups
            .into_iter()
            .map(|(k, ts)| (k, Poly::from_terms(ts)))
            .collect();
        out.sort_by(|a, b| b.0.lex_cmp(&a.0));
        out
    }

    pub fn map_coeffs(&self, f: impl Fn(&Coeff) -> Coeff) -> Poly {
        Poly::from_terms(self.terms.iter().map(|(m, c)| (m.clone(), f(c))))
    }

    /// Makes the leading coefficient one, returning the factor removed.
    pub fn make_monic(&self) -> (Coeff, Poly) {
        match self.leading() {
            None => (Coeff::ONE, Poly::zero()),
            Some((_, c)) => {
                let lc = c.clone();
                let inv = lc.recip().expect("nonzero leading coefficient");
                (lc, self.scale(&inv))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: VarId) -> Poly {
        Poly::var(i)
    }

    #[test]
    fn arithmetic_cancels() {
        let a = v(1).add(&v(2));
        let b = a.mul(&a).sub(&v(1).mul(&v(1))).sub(&v(2).mul(&v(2)));
        let two_xy = v(1).mul(&v(2)).scale(&Coeff::int(2));
        assert_eq!(b, two_xy);
        assert!(b.sub(&two_xy).is_zero());
    }

    #[test]
    fn exact_division() {
        let a = v(1).add(&Poly::one());
        let b = v(2).sub(&v(3));
        let p = a.mul(&b).mul(&Poly::var(5));
        assert_eq!(p.div_exact(&a), Some(b.mul(&Poly::var(5))));
        assert_eq!(v(1).div_exact(&a), None);
        let laurent = a.mul_term(&Mono::var(4, -3), &Coeff::int(7));
        assert_eq!(
            laurent.div_exact(&a),
            Some(Poly::monomial(Mono::var(4, -3), Coeff::int(7)))
        );
    }

    #[test]
    fn derivative_of_laurent() {
        let p = Poly::monomial(Mono::var(1, -2), Coeff::int(3));
        assert_eq!(p.diff(1), Poly::monomial(Mono::var(1, -3), Coeff::int(-6)));
    }

    #[test]
    fn order_is_compatible_with_products() {
        let a = Mono::var(1, 2);
        let b = Mono::var(2, 5);
        assert_eq!(a.lex_cmp(&b), Ordering::Greater);
        let m = Mono::var(3, -1);
        assert_eq!(a.mul(&m).lex_cmp(&b.mul(&m)), Ordering::Greater);
    }
}
