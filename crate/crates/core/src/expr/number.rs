//! Exact and floating scalars.
//!
//! [`Rat`] is the workhorse rational used inside polynomials: it stays on a
//! machine-word fast path and only promotes to `BigRational` when a result
//! no longer fits. [`Coeff`] pairs two of them into an exact Gaussian
//! rational. [`Scalar`] is the public value type returned by evaluation.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Pow, Signed, ToPrimitive, Zero};

/// Reduced rational number, `den > 0`. The `Small` form is used whenever both
/// parts fit in an `i64`, so structural equality is value equality.
#[derive(Clone, Debug)]
pub enum Rat {
    Small(i64, i64),
    Big(BigRational),
}

fn gcd_i128(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Rat {
    pub const ZERO: Rat = Rat::Small(0, 1);
    pub const ONE: Rat = Rat::Small(1, 1);

    pub fn int(n: i64) -> Rat {
        Rat::Small(n, 1)
    }

    /// `n / d`; panics on a zero denominator.
    pub fn new(n: i64, d: i64) -> Rat {
        assert!(d != 0, "zero denominator");
        Rat::from_i128(n as i128, d as i128)
    }

    fn from_i128(n: i128, d: i128) -> Rat {
        let (mut n, mut d) = (n, d);
        if d < 0 {
            n = -n;
            d = -d;
        }
        let g = gcd_i128(n, d);
        if g > 1 {
            n /= g;
            d /= g;
        }
        if n == 0 {
            return Rat::ZERO;
        }
        match (i64::try_from(n), i64::try_from(d)) {
            (Ok(n), Ok(d)) => Rat::Small(n, d),
            _ => Rat::Big(BigRational::new_raw(BigInt::from(n), BigInt::from(d))),
        }
    }

    pub fn from_big(r: BigRational) -> Rat {
        if let (Some(n), Some(d)) = (r.numer().to_i64(), r.denom().to_i64()) {
            return Rat::Small(n, d);
        }
        Rat::Big(r)
    }

    pub fn to_big(&self) -> BigRational {
        match self {
            Rat::Small(n, d) => BigRational::new_raw(BigInt::from(*n), BigInt::from(*d)),
            Rat::Big(b) => b.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Rat::Small(0, _))
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Rat::Small(1, 1))
    }

    pub fn is_integer(&self) -> bool {
        match self {
            Rat::Small(_, d) => *d == 1,
            Rat::Big(b) => b.is_integer(),
        }
    }

    pub fn signum(&self) -> i32 {
        match self {
            Rat::Small(n, _) => n.signum() as i32,
            Rat::Big(b) => {
                if b.is_negative() {
                    -1
                } else if b.is_zero() {
                    0
                } else {
                    1
                }
            }
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Rat::Small(n, d) => *n as f64 / *d as f64,
            Rat::Big(b) => b.to_f64().unwrap_or(f64::NAN),
        }
    }

    /// Exact value of a finite double.
    pub fn from_f64(v: f64) -> Option<Rat> {
        BigRational::from_float(v).map(Rat::from_big)
    }

    pub fn add(&self, o: &Rat) -> Rat {
        match (self, o) {
            (Rat::Small(a, b), Rat::Small(c, d)) => {
                if *b == 1 && *d == 1 {
                    return Rat::from_i128(*a as i128 + *c as i128, 1);
                }
                Rat::from_i128(
                    *a as i128 * *d as i128 + *c as i128 * *b as i128,
                    *b as i128 * *d as i128,
                )
            }
            _ => Rat::from_big(self.to_big() + o.to_big()),
        }
    }

    pub fn sub(&self, o: &Rat) -> Rat {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Rat) -> Rat {
        match (self, o) {
            (Rat::Small(a, b), Rat::Small(c, d)) => {
                if *b == 1 && *d == 1 {
                    return Rat::from_i128(*a as i128 * *c as i128, 1);
                }
                Rat::from_i128(*a as i128 * *c as i128, *b as i128 * *d as i128)
            }
            _ => Rat::from_big(self.to_big() * o.to_big()),
        }
    }

    pub fn neg(&self) -> Rat {
        match self {
            Rat::Small(n, d) => Rat::from_i128(-(*n as i128), *d as i128),
            Rat::Big(b) => Rat::from_big(-b.clone()),
        }
    }

    pub fn recip(&self) -> Option<Rat> {
        match self {
            Rat::Small(0, _) => None,
            Rat::Small(n, d) => Some(Rat::from_i128(*d as i128, *n as i128)),
            Rat::Big(b) => Some(Rat::from_big(b.recip())),
        }
    }

    pub fn pow(&self, e: i32) -> Option<Rat> {
        let base = if e < 0 { self.recip()? } else { self.clone() };
        let mut acc = Rat::ONE;
        for _ in 0..e.unsigned_abs() {
            acc = acc.mul(&base);
        }
        Some(acc)
    }

    /// Exact square root when the value is the square of a rational.
    /// Exact nonnegative `n`-th root of a nonnegative rational.
    pub fn nth_root_exact(&self, n: u32) -> Option<Rat> {
        if self.signum() < 0 || n == 0 {
            return None;
        }
        let b = self.to_big();
        let r = b.numer().nth_root(n);
        let d = b.denom().nth_root(n);
        if &Pow::pow(&r, n) == b.numer() && &Pow::pow(&d, n) == b.denom() {
            Some(Rat::from_big(BigRational::new(r, d)))
        } else {
            None
        }
    }

    pub fn sqrt_exact(&self) -> Option<Rat> {
        if self.signum() < 0 {
            return None;
        }
        let b = self.to_big();
        let n = b.numer().sqrt();
        let d = b.denom().sqrt();
        if &(&n * &n) == b.numer() && &(&d * &d) == b.denom() {
            Some(Rat::from_big(BigRational::new(n, d)))
        } else {
            None
        }
    }
}

impl PartialEq for Rat {
    fn eq(&self, o: &Rat) -> bool {
        match (self, o) {
            (Rat::Small(a, b), Rat::Small(c, d)) => a == c && b == d,
            (Rat::Big(a), Rat::Big(b)) => a == b,
            _ => false,
        }
    }
}
impl Eq for Rat {}

impl Hash for Rat {
    fn hash<H: Hasher>(&self, h: &mut H) {
        match self {
            Rat::Small(n, d) => {
                0u8.hash(h);
                n.hash(h);
                d.hash(h);
            }
            Rat::Big(b) => {
                1u8.hash(h);
                b.hash(h);
            }
        }
    }
}

impl PartialOrd for Rat {
    fn partial_cmp(&self, o: &Rat) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Rat {
    fn cmp(&self, o: &Rat) -> Ordering {
        match (self, o) {
            (Rat::Small(a, b), Rat::Small(c, d)) => {
                (*a as i128 * *d as i128).cmp(&(*c as i128 * *b as i128))
            }
            _ => self.to_big().cmp(&o.to_big()),
        }
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rat::Small(n, 1) => write!(f, "{n}"),
            Rat::Small(n, d) => write!(f, "{n}/{d}"),
            Rat::Big(b) if b.is_integer() => write!(f, "{}", b.numer()),
            Rat::Big(b) => write!(f, "{}/{}", b.numer(), b.denom()),
        }
    }
}

/// Exact Gaussian rational `re + im·i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Coeff {
    pub re: Rat,
    pub im: Rat,
}

impl Coeff {
    pub const ZERO: Coeff = Coeff {
        re: Rat::ZERO,
        im: Rat::ZERO,
    };
    pub const ONE: Coeff = Coeff {
        re: Rat::ONE,
        im: Rat::ZERO,
    };
    pub const I: Coeff = Coeff {
        re: Rat::ZERO,
        im: Rat::ONE,
    };

    pub fn real(r: Rat) -> Coeff {
        Coeff {
            re: r,
            im: Rat::ZERO,
        }
    }

    pub fn int(n: i64) -> Coeff {
        Coeff::real(Rat::int(n))
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn add(&self, o: &Coeff) -> Coeff {
        if self.im.is_zero() && o.im.is_zero() {
            return Coeff::real(self.re.add(&o.re));
        }
        Coeff {
            re: self.re.add(&o.re),
            im: self.im.add(&o.im),
        }
    }

    pub fn sub(&self, o: &Coeff) -> Coeff {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Coeff {
        if self.im.is_zero() {
            return Coeff::real(self.re.neg());
        }
        Coeff {
            re: self.re.neg(),
            im: self.im.neg(),
        }
    }

    pub fn mul(&self, o: &Coeff) -> Coeff {
        if self.im.is_zero() {
            if o.im.is_zero() {
                return Coeff::real(self.re.mul(&o.re));
            }
            return Coeff {
                re: self.re.mul(&o.re),
                im: self.re.mul(&o.im),
            };
        }
        if o.im.is_zero() {
            return Coeff {
                re: self.re.mul(&o.re),
                im: self.im.mul(&o.re),
            };
        }
        Coeff {
            re: self.re.mul(&o.re).sub(&self.im.mul(&o.im)),
            im: self.re.mul(&o.im).add(&self.im.mul(&o.re)),
        }
    }

    pub fn mul_rat(&self, r: &Rat) -> Coeff {
        if self.im.is_zero() {
            return Coeff::real(self.re.mul(r));
        }
        Coeff {
            re: self.re.mul(r),
            im: self.im.mul(r),
        }
    }

    pub fn recip(&self) -> Option<Coeff> {
        if self.im.is_zero() {
            return self.re.recip().map(Coeff::real);
        }
        let n2 = self.re.mul(&self.re).add(&self.im.mul(&self.im));
        let inv = n2.recip()?;
        Some(Coeff {
            re: self.re.mul(&inv),
            im: self.im.neg().mul(&inv),
        })
    }

    pub fn div(&self, o: &Coeff) -> Option<Coeff> {
        Some(self.mul(&o.recip()?))
    }

    pub fn pow(&self, e: i32) -> Option<Coeff> {
        let base = if e < 0 { self.recip()? } else { self.clone() };
        let mut acc = Coeff::ONE;
        for _ in 0..e.unsigned_abs() {
            acc = acc.mul(&base);
        }
        Some(acc)
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn is_negative_real(&self) -> bool {
        self.im.is_zero() && self.re.signum() < 0
    }
}

impl fmt::Display for Coeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            return write!(f, "{}", self.re);
        }
        if self.re.is_zero() {
            return if self.im.is_one() {
                write!(f, "I")
            } else {
                write!(f, "{}*I", self.im)
            };
        }
        if self.im.signum() < 0 {
            write!(f, "({}-{}*I)", self.re, self.im.neg())
        } else {
            write!(f, "({}+{}*I)", self.re, self.im)
        }
    }
}

/// A numeric value: exact rational, exact complex rational, or a double
/// precision complex. Arithmetic stays exact unless a floating operand is
/// involved.
#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Rational(BigRational),
    Complex(BigRational, BigRational),
    Float(Complex64),
}

impl Scalar {
    pub fn int(n: i64) -> Scalar {
        Scalar::Rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(n: i64, d: i64) -> Scalar {
        Scalar::Rational(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn float(v: f64) -> Scalar {
        Scalar::Float(Complex64::new(v, 0.0))
    }

    pub fn from_coeff(c: &Coeff) -> Scalar {
        if c.im.is_zero() {
            Scalar::Rational(c.re.to_big())
        } else {
            Scalar::Complex(c.re.to_big(), c.im.to_big())
        }
    }

    /// The exact coefficient, if this scalar is exact.
    pub fn to_coeff(&self) -> Option<Coeff> {
        match self {
            Scalar::Rational(r) => Some(Coeff::real(Rat::from_big(r.clone()))),
            Scalar::Complex(a, b) => Some(Coeff {
                re: Rat::from_big(a.clone()),
                im: Rat::from_big(b.clone()),
            }),
            Scalar::Float(_) => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, Scalar::Float(_))
    }

    pub fn to_c64(&self) -> Complex64 {
        match self {
            Scalar::Rational(r) => Complex64::new(r.to_f64().unwrap_or(f64::NAN), 0.0),
            Scalar::Complex(a, b) => Complex64::new(
                a.to_f64().unwrap_or(f64::NAN),
                b.to_f64().unwrap_or(f64::NAN),
            ),
            Scalar::Float(z) => *z,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Rational(r) => r.is_zero(),
            Scalar::Complex(a, b) => a.is_zero() && b.is_zero(),
            Scalar::Float(z) => z.re == 0.0 && z.im == 0.0,
        }
    }

    fn normalized(self) -> Scalar {
        match self {
            Scalar::Complex(a, b) if b.is_zero() => Scalar::Rational(a),
            s => s,
        }
    }

    fn binop(
        &self,
        o: &Scalar,
        exact: impl Fn(&Coeff, &Coeff) -> Option<Coeff>,
        float: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Option<Scalar> {
        match (self.to_coeff(), o.to_coeff()) {
            (Some(a), Some(b)) => exact(&a, &b).map(|c| Scalar::from_coeff(&c).normalized()),
            _ => Some(Scalar::Float(float(self.to_c64(), o.to_c64()))),
        }
    }

    pub fn add(&self, o: &Scalar) -> Scalar {
        self.binop(o, |a, b| Some(a.add(b)), |a, b| a + b)
            .expect("addition is total")
    }

    pub fn sub(&self, o: &Scalar) -> Scalar {
        self.binop(o, |a, b| Some(a.sub(b)), |a, b| a - b)
            .expect("subtraction is total")
    }

    pub fn mul(&self, o: &Scalar) -> Scalar {
        self.binop(o, |a, b| Some(a.mul(b)), |a, b| a * b)
            .expect("multiplication is total")
    }

    /// `None` on exact division by zero. Floating division follows IEEE rules.
    pub fn checked_div(&self, o: &Scalar) -> Option<Scalar> {
        self.binop(o, |a, b| a.div(b), |a, b| a / b)
    }

    pub fn abs(&self) -> f64 {
        self.to_c64().norm()
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Float(z) if z.im == 0.0 => write!(f, "{}", z.re),
            Scalar::Float(z) => write!(f, "({}{:+}*I)", z.re, z.im),
            s => write!(f, "{}", s.to_coeff().expect("exact")),
        }
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Scalar {
        Scalar::int(n)
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> i64 {
    let mut r: i64 = 1;
    for i in 0..k {
        r = r * (n - i) as i64 / (i as i64 + 1);
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_rationals_reduce_and_promote() {
        assert_eq!(Rat::new(6, -4), Rat::Small(-3, 2));
        let big = Rat::int(i64::MAX).mul(&Rat::int(4));
        assert!(matches!(big, Rat::Big(_)));
        let back = big.mul(&Rat::new(1, 4));
        assert_eq!(back, Rat::int(i64::MAX));
        assert!(matches!(back, Rat::Small(..)));
        assert_eq!(Rat::int(i64::MIN).neg().neg(), Rat::int(i64::MIN));
    }

    #[test]
    fn gaussian_arithmetic() {
        let i = Coeff::I;
        assert_eq!(i.mul(&i), Coeff::int(-1));
        let z = Coeff {
            re: Rat::int(3),
            im: Rat::int(4),
        };
        assert_eq!(z.mul(&z.recip().unwrap()), Coeff::ONE);
    }

    #[test]
    fn scalar_exactness_propagates() {
        let a = Scalar::ratio(1, 3);
        let b = Scalar::int(2);
        assert!(a.mul(&b).is_exact());
        assert!(!a.add(&Scalar::float(0.5)).is_exact());
        assert!(Scalar::int(1).checked_div(&Scalar::int(0)).is_none());
    }

    #[test]
    fn exact_square_roots() {
        assert_eq!(Rat::new(9, 4).sqrt_exact(), Some(Rat::new(3, 2)));
        assert_eq!(Rat::int(2).sqrt_exact(), None);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(6, 0), 1);
        assert_eq!(binomial(6, 6), 1);
    }
}
