//! Exact arithmetic in cyclotomic fields Q(zeta_L).
//!
//! An element is stored as its coordinate vector in the power basis
//! `1, z, ..., z^(phi(L)-1)` modulo the L-th cyclotomic polynomial. Operands
//! of different orders are embedded into the field of the lcm of the orders.
//! Results that happen to be rational are stored at order 1.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::rc::Rc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::arith::{euler_phi, lcm};
use crate::Error;

/// Precomputed data for one cyclotomic order.
struct FieldData {
    phi: usize,
    /// Coefficients of the cyclotomic polynomial below the leading term,
    /// stored as (degree, coefficient) for nonzero entries.
    poly_tail: Vec<(usize, i64)>,
    /// `z^e mod Phi_L` for `e` in `0..L`.
    powers: Vec<Vec<i64>>,
}

thread_local! {
    static FIELDS: RefCell<HashMap<u64, Rc<FieldData>>> = RefCell::new(HashMap::new());
}

fn cyclotomic_poly(n: u64) -> Vec<i64> {
    // x^n - 1 divided by all Phi_d with d | n, d < n.
    let mut num = vec![0i64; n as usize + 1];
    num[0] = -1;
    num[n as usize] = 1;
    for d in crate::arith::divisors(n) {
        if d == n {
            continue;
        }
        let den = cyclotomic_poly(d);
        num = poly_div_exact(&num, &den);
    }
    num
}

fn poly_div_exact(num: &[i64], den: &[i64]) -> Vec<i64> {
    let mut rem = num.to_vec();
    let dn = den.len() - 1;
    let nn = rem.len() - 1;
    let mut q = vec![0i64; nn - dn + 1];
    for i in (0..=nn - dn).rev() {
        let c = rem[i + dn] / den[dn];
        q[i] = c;
        for (j, dj) in den.iter().enumerate() {
            rem[i + j] -= c * dj;
        }
    }
    q
}

fn field(order: u64) -> Rc<FieldData> {
    FIELDS.with(|f| {
        if let Some(d) = f.borrow().get(&order) {
            return d.clone();
        }
        let poly = cyclotomic_poly(order);
        let phi = poly.len() - 1;
        debug_assert_eq!(phi as u64, euler_phi(order));
        let poly_tail: Vec<(usize, i64)> = poly[..phi]
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0)
            .map(|(i, c)| (i, *c))
            .collect();
        let mut powers = Vec::with_capacity(order as usize);
        let mut cur = vec![0i64; phi];
        cur[0] = 1;
        for _ in 0..order {
            powers.push(cur.clone());
            // multiply by z
            let top = cur[phi - 1];
            for i in (1..phi).rev() {
                cur[i] = cur[i - 1];
            }
            cur[0] = 0;
            if top != 0 {
                for &(i, c) in &poly_tail {
                    cur[i] -= top * c;
                }
            }
        }
        let data = Rc::new(FieldData {
            phi,
            poly_tail,
            powers,
        });
        f.borrow_mut().insert(order, data.clone());
        data
    })
}

#[derive(Clone, Debug)]
pub struct Cyclotomic {
    order: u64,
    coeffs: Vec<BigRational>,
}

impl Cyclotomic {
    pub fn zero() -> Self {
        Self::from_rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Self::from_rational(BigRational::one())
    }

    pub fn from_rational(r: BigRational) -> Self {
        Cyclotomic {
            order: 1,
            coeffs: vec![r],
        }
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_bigint(n: BigInt) -> Self {
        Self::from_rational(BigRational::from_integer(n))
    }

    /// Build from power-basis coordinates; `coeffs.len()` must be phi(order).
    pub fn from_coeffs(order: u64, coeffs: Vec<BigRational>) -> Result<Self, Error> {
        if order == 0 {
            return Err(Error::Invalid("cyclotomic order must be positive".into()));
        }
        if coeffs.len() as u64 != euler_phi(order) {
            return Err(Error::Invalid(format!(
                "order {} needs {} coefficients, got {}",
                order,
                euler_phi(order),
                coeffs.len()
            )));
        }
        Ok(Cyclotomic { order, coeffs }.normalized())
    }

    /// e(a/b) = exp(2 pi i a / b).
    pub fn root_of_unity(a: i64, b: u64) -> Self {
        assert!(b >= 1, "root of unity order must be positive");
        let e = a.rem_euclid(b as i64) as u64;
        let g = crate::arith::gcd(e, b);
        let (e, b) = (e / g, b / g);
        if b == 1 {
            return Self::one();
        }
        if b == 2 {
            return Self::from_int(-1);
        }
        let f = field(b);
        let coeffs = f.powers[e as usize]
            .iter()
            .map(|&c| BigRational::from_integer(BigInt::from(c)))
            .collect();
        Cyclotomic { order: b, coeffs }
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.coeffs[0].is_one() && self.coeffs[1..].iter().all(|c| c.is_zero())
    }

    pub fn is_rational(&self) -> bool {
        self.coeffs[1..].iter().all(|c| c.is_zero())
    }

    /// The rational value, if the element lies in Q.
    pub fn as_rational(&self) -> Option<&BigRational> {
        if self.is_rational() {
            Some(&self.coeffs[0])
        } else {
            None
        }
    }

    fn normalized(mut self) -> Self {
        if self.order > 1 && self.coeffs[1..].iter().all(|c| c.is_zero()) {
            self.coeffs.truncate(1);
            self.order = 1;
        }
        self
    }

    /// Represent the same element in Q(zeta_l2); `order` must divide `l2`.
    pub fn embed(&self, l2: u64) -> Result<Self, Error> {
        if l2 == 0 || !l2.is_multiple_of(self.order) {
            return Err(Error::Invalid(format!(
                "cannot embed order {} into order {}",
                self.order, l2
            )));
        }
        Ok(Cyclotomic {
            order: l2,
            coeffs: self.embed_coeffs(l2),
        })
    }

    fn embed_coeffs(&self, l2: u64) -> Vec<BigRational> {
        if l2 == self.order {
            return self.coeffs.clone();
        }
        let f = field(l2);
        let m = l2 / self.order;
        let mut out = vec![BigRational::zero(); f.phi];
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let p = &f.powers[((i as u64 * m) % l2) as usize];
            for (j, &pj) in p.iter().enumerate() {
                if pj != 0 {
                    out[j] += c * BigRational::from_integer(BigInt::from(pj));
                }
            }
        }
        out
    }

    fn scale(&self, r: &BigRational) -> Self {
        if r.is_zero() {
            return Self::zero();
        }
        Cyclotomic {
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * r).collect(),
        }
    }

    pub fn scale_rational(&self, r: &BigRational) -> Self {
        self.scale(r)
    }

    fn add_impl(&self, other: &Self, sign: bool) -> Self {
        if self.order == other.order {
            let coeffs = self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| if sign { a - b } else { a + b })
                .collect();
            return Cyclotomic {
                order: self.order,
                coeffs,
            }
            .normalized();
        }
        let l = lcm(self.order, other.order);
        let mut a = self.embed_coeffs(l);
        let b = other.embed_coeffs(l);
        for (x, y) in a.iter_mut().zip(b) {
            if sign {
                *x -= y;
            } else {
                *x += y;
            }
        }
        Cyclotomic {
            order: l,
            coeffs: a,
        }
        .normalized()
    }

    fn mul_impl(&self, other: &Self) -> Self {
        if self.order == 1 {
            return other.scale(&self.coeffs[0]).normalized();
        }
        if other.order == 1 {
            return self.scale(&other.coeffs[0]).normalized();
        }
        let l = lcm(self.order, other.order);
        let a = if self.order == l {
            std::borrow::Cow::Borrowed(&self.coeffs)
        } else {
            std::borrow::Cow::Owned(self.embed_coeffs(l))
        };
        let b = if other.order == l {
            std::borrow::Cow::Borrowed(&other.coeffs)
        } else {
            std::borrow::Cow::Owned(other.embed_coeffs(l))
        };
        let f = field(l);
        let phi = f.phi;
        let mut acc = vec![BigRational::zero(); 2 * phi - 1];
        for (i, x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                if !y.is_zero() {
                    acc[i + j] += x * y;
                }
            }
        }
        for e in (phi..2 * phi - 1).rev() {
            let c = std::mem::take(&mut acc[e]);
            if c.is_zero() {
                continue;
            }
            for &(t, pt) in &f.poly_tail {
                acc[e - phi + t] -= &c * BigRational::from_integer(BigInt::from(pt));
            }
        }
        acc.truncate(phi);
        Cyclotomic {
            order: l,
            coeffs: acc,
        }
        .normalized()
    }

    /// Multiplicative inverse.
    pub fn inv(&self) -> Result<Self, Error> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if self.order == 1 {
            return Ok(Self::from_rational(self.coeffs[0].recip()));
        }
        // Solve (multiplication by self) * y = 1 in the power basis.
        let phi = self.coeffs.len();
        let mut cols: Vec<Vec<BigRational>> = Vec::with_capacity(phi);
        for j in 0..phi {
            let basis = Self::root_of_unity(j as i64, self.order).embed_coeffs(self.order);
            let prod = self.mul_impl(&Cyclotomic {
                order: self.order,
                coeffs: basis,
            });
            cols.push(prod.embed_coeffs(self.order));
        }
        // Augmented matrix rows: m[i][j] = cols[j][i].
        let mut m: Vec<Vec<BigRational>> = (0..phi)
            .map(|i| {
                let mut row: Vec<BigRational> = (0..phi).map(|j| cols[j][i].clone()).collect();
                row.push(if i == 0 {
                    BigRational::one()
                } else {
                    BigRational::zero()
                });
                row
            })
            .collect();
        for c in 0..phi {
            let p = (c..phi)
                .find(|&r| !m[r][c].is_zero())
                .ok_or(Error::DivisionByZero)?;
            m.swap(c, p);
            let pv = m[c][c].recip();
            for x in m[c].iter_mut() {
                *x *= &pv;
            }
            let pivot_row = m[c].clone();
            for (r, row) in m.iter_mut().enumerate() {
                if r == c || row[c].is_zero() {
                    continue;
                }
                let f = row[c].clone();
                for (x, y) in row.iter_mut().zip(&pivot_row) {
                    *x -= &f * y;
                }
            }
        }
        let coeffs = m.into_iter().map(|mut r| r.pop().unwrap()).collect();
        Ok(Cyclotomic {
            order: self.order,
            coeffs,
        }
        .normalized())
    }

    pub fn div(&self, other: &Self) -> Result<Self, Error> {
        Ok(self * &other.inv()?)
    }

    /// Integer power (negative exponents invert).
    pub fn pow(&self, e: i64) -> Result<Self, Error> {
        let mut base = if e < 0 { self.inv()? } else { self.clone() };
        let mut n = e.unsigned_abs();
        let mut acc = Self::one();
        while n > 0 {
            if n & 1 == 1 {
                acc = &acc * &base;
            }
            n >>= 1;
            if n > 0 {
                base = &base * &base;
            }
        }
        Ok(acc)
    }

    /// Complex conjugation, z -> z^(-1).
    pub fn conj(&self) -> Self {
        if self.order <= 2 {
            return self.clone();
        }
        let f = field(self.order);
        let l = self.order;
        let mut out = vec![BigRational::zero(); f.phi];
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let p = &f.powers[((l - i as u64) % l) as usize];
            for (j, &pj) in p.iter().enumerate() {
                if pj != 0 {
                    out[j] += c * BigRational::from_integer(BigInt::from(pj));
                }
            }
        }
        Cyclotomic {
            order: l,
            coeffs: out,
        }
        .normalized()
    }

    /// Floating-point value.
    pub fn numeric_eval(&self) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let angle = 2.0 * std::f64::consts::PI * i as f64 / self.order as f64;
            acc += Complex64::from_polar(1.0, angle) * rational_to_f64(c);
        }
        acc
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

impl PartialEq for Cyclotomic {
    fn eq(&self, other: &Self) -> bool {
        if self.order == other.order {
            return self.coeffs == other.coeffs;
        }
        let l = lcm(self.order, other.order);
        self.embed_coeffs(l) == other.embed_coeffs(l)
    }
}

impl Eq for Cyclotomic {}

impl Default for Cyclotomic {
    fn default() -> Self {
        Self::zero()
    }
}

impl From<BigRational> for Cyclotomic {
    fn from(r: BigRational) -> Self {
        Self::from_rational(r)
    }
}

impl From<i64> for Cyclotomic {
    fn from(n: i64) -> Self {
        Self::from_int(n)
    }
}

impl<'a> Add<&'a Cyclotomic> for &'a Cyclotomic {
    type Output = Cyclotomic;
    fn add(self, rhs: &Cyclotomic) -> Cyclotomic {
        self.add_impl(rhs, false)
    }
}

impl<'a> Sub<&'a Cyclotomic> for &'a Cyclotomic {
    type Output = Cyclotomic;
    fn sub(self, rhs: &Cyclotomic) -> Cyclotomic {
        self.add_impl(rhs, true)
    }
}

impl<'a> Mul<&'a Cyclotomic> for &'a Cyclotomic {
    type Output = Cyclotomic;
    fn mul(self, rhs: &Cyclotomic) -> Cyclotomic {
        self.mul_impl(rhs)
    }
}

impl Add for Cyclotomic {
    type Output = Cyclotomic;
    fn add(self, rhs: Cyclotomic) -> Cyclotomic {
        &self + &rhs
    }
}

impl Sub for Cyclotomic {
    type Output = Cyclotomic;
    fn sub(self, rhs: Cyclotomic) -> Cyclotomic {
        &self - &rhs
    }
}

impl Mul for Cyclotomic {
    type Output = Cyclotomic;
    fn mul(self, rhs: Cyclotomic) -> Cyclotomic {
        &self * &rhs
    }
}

impl Neg for &Cyclotomic {
    type Output = Cyclotomic;
    fn neg(self) -> Cyclotomic {
        Cyclotomic {
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl Neg for Cyclotomic {
    type Output = Cyclotomic;
    fn neg(self) -> Cyclotomic {
        -&self
    }
}

impl AddAssign<&Cyclotomic> for Cyclotomic {
    fn add_assign(&mut self, rhs: &Cyclotomic) {
        if self.order == rhs.order {
            for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
                *a += b;
            }
            let me = std::mem::take(self);
            *self = me.normalized();
        } else {
            *self = self.add_impl(rhs, false);
        }
    }
}

impl SubAssign<&Cyclotomic> for Cyclotomic {
    fn sub_assign(&mut self, rhs: &Cyclotomic) {
        if self.order == rhs.order {
            for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
                *a -= b;
            }
            let me = std::mem::take(self);
            *self = me.normalized();
        } else {
            *self = self.add_impl(rhs, true);
        }
    }
}

impl fmt::Display for Cyclotomic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.order == 1 {
            return write!(f, "{}", crate::arith::format_rational(&self.coeffs[0]));
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", sign)?;
            }
            first = false;
            let a = c.abs();
            let body = crate::arith::format_rational(&a);
            match i {
                0 => write!(f, "{}", body)?,
                _ => {
                    if !a.is_one() {
                        write!(f, "{}*", body)?;
                    }
                    if i == 1 {
                        write!(f, "z{}", self.order)?;
                    } else {
                        write!(f, "z{}^{}", self.order, i)?;
                    }
                }
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct CycJson {
    order: u64,
    coeffs: Vec<(String, String)>,
}

impl Serialize for Cyclotomic {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        CycJson {
            order: self.order,
            coeffs: self
                .coeffs
                .iter()
                .map(|c| (c.numer().to_string(), c.denom().to_string()))
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Cyclotomic {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = CycJson::deserialize(d)?;
        let mut coeffs = Vec::with_capacity(j.coeffs.len());
        for (n, dn) in &j.coeffs {
            let n: BigInt = n.parse().map_err(D::Error::custom)?;
            let dn: BigInt = dn.parse().map_err(D::Error::custom)?;
            if dn.is_zero() {
                return Err(D::Error::custom("zero denominator"));
            }
            coeffs.push(BigRational::new(n, dn));
        }
        Cyclotomic::from_coeffs(j.order, coeffs).map_err(D::Error::custom)
    }
}

/// Sum of an iterator of references.
pub fn sum<'a, I: IntoIterator<Item = &'a Cyclotomic>>(it: I) -> Cyclotomic {
    let mut acc = Cyclotomic::zero();
    for x in it {
        acc += x;
    }
    acc
}
