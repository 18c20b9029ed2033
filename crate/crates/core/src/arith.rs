//! Small integer number theory helpers shared across the crate.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub fn gcd(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

pub fn lcm(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        return 0;
    }
    a / gcd(a, b) * b
}

pub fn euler_phi(n: u64) -> u64 {
    factorize(n)
        .into_iter()
        .map(|(p, e)| (p - 1) * p.pow(e - 1))
        .product()
}

/// Prime factorisation by trial division, primes in increasing order.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn divisors(n: u64) -> Vec<u64> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n.is_multiple_of(d) {
            small.push(d);
            if d * d != n {
                large.push(n / d);
            }
        }
        d += 1;
    }
    small.extend(large.into_iter().rev());
    small
}

/// Non-negative residue of a big integer modulo `n`.
pub fn residue(x: &BigInt, n: u64) -> u64 {
    if n == 1 {
        return 0;
    }
    let m = BigInt::from(n);
    x.mod_floor(&m).to_u64().expect("residue fits in u64")
}

pub fn residue_i64(x: i64, n: u64) -> u64 {
    x.rem_euclid(n as i64) as u64
}

/// Extended gcd: returns (g, x, y) with a*x + b*y = g >= 0.
pub fn ext_gcd(a: &BigInt, b: &BigInt) -> (BigInt, BigInt, BigInt) {
    let e = a.extended_gcd(b);
    if e.gcd.is_negative() {
        (-e.gcd, -e.x, -e.y)
    } else {
        (e.gcd, e.x, e.y)
    }
}

/// Inverse of `a` modulo `n`, if it exists.
pub fn inv_mod(a: u64, n: u64) -> Option<u64> {
    if n == 1 {
        return Some(0);
    }
    let e = (a as i64).extended_gcd(&(n as i64));
    if e.gcd != 1 {
        return None;
    }
    Some(e.x.rem_euclid(n as i64) as u64)
}

pub fn binomial(n: u64, k: u64) -> BigInt {
    let mut r = BigInt::one();
    for i in 0..k {
        r = r * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    r
}

/// Bernoulli numbers B_0..=B_n with B_1 = -1/2.
pub fn bernoulli_numbers(n: usize) -> Vec<BigRational> {
    let mut b: Vec<BigRational> = Vec::with_capacity(n + 1);
    for m in 0..=n {
        if m == 0 {
            b.push(BigRational::one());
            continue;
        }
        // sum_{j=0}^{m} C(m+1, j) B_j = 0
        let mut acc = BigRational::zero();
        for (j, bj) in b.iter().enumerate() {
            acc += BigRational::from_integer(binomial(m as u64 + 1, j as u64)) * bj;
        }
        b.push(-acc / BigRational::from_integer(BigInt::from(m + 1)));
    }
    b
}

/// Bernoulli polynomial B_k(x) = sum_j C(k,j) B_j x^{k-j}.
pub fn bernoulli_poly(k: usize, x: &BigRational) -> BigRational {
    let b = bernoulli_numbers(k);
    let mut acc = BigRational::zero();
    for (j, bj) in b.iter().enumerate() {
        let pw = num_traits::pow(x.clone(), k - j);
        acc += BigRational::from_integer(binomial(k as u64, j as u64)) * bj * pw;
    }
    acc
}

pub fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Parse "p/q" or "p" into a rational.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(BigRational::new(n, d))
            }
        }
        None => s.parse::<BigInt>().ok().map(BigRational::from_integer),
    }
}

pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Smallest integer >= r.
pub fn ceil_rational(r: &BigRational) -> BigInt {
    r.ceil().to_integer()
}
