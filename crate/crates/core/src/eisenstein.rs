//! Normalised Fourier expansions of the lattice Eisenstein series
//! G_{k,N,c,d}(tau) = sum over (c', d') = (c, d) mod N of (c' tau + d')^{-k}.
//!
//! Stored series are G / C_k with C_k = (-2 pi i)^k / (N^k (k-1)!), in powers
//! of q^{1/N}. Weights 1 and 2 use the Hecke-regularised series; weight 2 is
//! made holomorphic by subtracting the level-1 series.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{bernoulli_poly, bernoulli_numbers, divisors, format_rational, gcd, residue};
use crate::cyclotomic::Cyclotomic;
use crate::fourier::FourierExpansion;
use crate::modgroup::SL2;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EisensteinIndex {
    pub k: u32,
    #[serde(rename = "N")]
    pub n: u64,
    pub c: u64,
    pub d: u64,
}

impl EisensteinIndex {
    pub fn new(k: u32, n: u64, c: i64, d: i64) -> Result<Self> {
        if k == 0 || n == 0 {
            return Err(Error::Invalid("Eisenstein series need k >= 1 and N >= 1".into()));
        }
        let c = c.rem_euclid(n as i64) as u64;
        let d = d.rem_euclid(n as i64) as u64;
        if gcd(gcd(c, d), n) != 1 {
            return Err(Error::Invalid(format!(
                "gcd(c, d, N) must be 1, got c={} d={} N={}",
                c, d, n
            )));
        }
        Ok(EisensteinIndex { k, n, c, d })
    }
}

impl std::fmt::Display for EisensteinIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "G[{},{},{},{}]", self.k, self.n, self.c, self.d)
    }
}

/// All valid indices of weight k and level N, ordered by (c, d).
pub fn all_indices(k: u32, n: u64) -> Vec<EisensteinIndex> {
    let mut out = Vec::new();
    for c in 0..n {
        for d in 0..n {
            if gcd(gcd(c, d), n) == 1 {
                out.push(EisensteinIndex { k, n, c, d });
            }
        }
    }
    out
}

/// (c, d) -> (c, d) g modulo N.
pub fn eis_slash_index(idx: &EisensteinIndex, g: &SL2) -> EisensteinIndex {
    let n = idx.n;
    let (a, b, c, d) = g.reduce(n);
    EisensteinIndex {
        k: idx.k,
        n,
        c: (idx.c * a + idx.d * c) % n,
        d: (idx.c * b + idx.d * d) % n,
    }
}

/// Index attached to the coset of `gamma`: the bottom row of gamma^{-1}.
pub fn coset_index(k: u32, n: u64, gamma: &SL2) -> EisensteinIndex {
    let c = residue(&-&gamma.c, n);
    let d = residue(&gamma.a, n);
    EisensteinIndex { k, n, c, d }
}

/// Periodic Bernoulli function at a/N with the value at 0 set to B_k
/// (and to 0 for k = 1).
fn periodic_bernoulli(k: u32, a: u64, n: u64) -> BigRational {
    if a == 0 {
        if k == 1 {
            return BigRational::zero();
        }
        return bernoulli_numbers(k as usize)[k as usize].clone();
    }
    bernoulli_poly(k as usize, &BigRational::new(BigInt::from(a), BigInt::from(n)))
}

fn sum_roots(counts: &[BigInt], n: u64) -> Cyclotomic {
    let mut acc = Cyclotomic::zero();
    for (r, cnt) in counts.iter().enumerate() {
        if cnt.is_zero() {
            continue;
        }
        acc += &(&Cyclotomic::from_bigint(cnt.clone()) * &Cyclotomic::root_of_unity(r as i64, n));
    }
    acc
}

fn constant_term(idx: &EisensteinIndex) -> Cyclotomic {
    let EisensteinIndex { k, n, c, d } = *idx;
    let mut acc = Cyclotomic::zero();
    if c == 0 {
        // -((-1)^k N^{k-1} / k) sum_a e(-a d / N) B_k({a/N})
        let sign: i64 = if k % 2 == 0 { 1 } else { -1 };
        let pre = BigRational::new(
            BigInt::from(-sign) * BigInt::from(n).pow(k - 1),
            BigInt::from(k),
        );
        for a in 0..n {
            let b = periodic_bernoulli(k, a, n);
            if b.is_zero() {
                continue;
            }
            let e = Cyclotomic::root_of_unity(-((a * d) as i64), n);
            acc += &e.scale_rational(&(&b * &pre));
        }
    }
    if k == 1 && c != 0 {
        acc += &Cyclotomic::from_rational(
            BigRational::new(BigInt::one(), BigInt::from(2)) - BigRational::new(BigInt::from(c), BigInt::from(n)),
        );
    }
    acc
}

/// The plain divisor-sum expansion used for every weight.
fn raw_series(idx: &EisensteinIndex, precision: &BigRational) -> FourierExpansion {
    let EisensteinIndex { k, n, c, d } = *idx;
    let mut f = FourierExpansion::zero(n, precision.clone());
    f.add_term(0, &constant_term(idx));
    let neg_c = (n - c) % n;
    let minus_one_k = if k % 2 == 0 { 1 } else { -1 };
    for j in 1..f.bound() {
        let j_u = j as u64;
        let mut counts = vec![BigInt::zero(); n as usize];
        for m in divisors(j_u) {
            let quo = (j_u / m) % n;
            let pw = BigInt::from(m).pow(k - 1);
            if quo == c {
                counts[((d * m) % n) as usize] += &pw;
            }
            if quo == neg_c {
                let r = ((n - (d * m) % n) % n) as usize;
                counts[r] += &pw * minus_one_k;
            }
        }
        f.add_term(j, &sum_roots(&counts, n));
    }
    f
}

/// -1/12 + 2 sum sigma_1(n) q^n, the normalised level-one weight-2 series,
/// written over denominator `n`.
fn level_one_weight2(n: u64, precision: &BigRational) -> FourierExpansion {
    let idx = EisensteinIndex { k: 2, n: 1, c: 0, d: 0 };
    raw_series(&idx, precision).rescale(n).expect("multiple")
}

fn cache() -> &'static Mutex<HashMap<(EisensteinIndex, String), Arc<FourierExpansion>>> {
    static C: OnceLock<Mutex<HashMap<(EisensteinIndex, String), Arc<FourierExpansion>>>> = OnceLock::new();
    C.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Normalised expansion of G_{k,N,c,d} below the precision bound.
pub fn eis_fourier(idx: &EisensteinIndex, precision: &BigRational) -> Result<Arc<FourierExpansion>> {
    let idx = EisensteinIndex::new(idx.k, idx.n, idx.c as i64, idx.d as i64)?;
    let key = (idx, format_rational(precision));
    if let Some(f) = cache().lock().unwrap().get(&key) {
        return Ok(f.clone());
    }
    let f = Arc::new(match idx.k {
        1 => eis_fourier_weight1(&idx, precision)?,
        2 => eis_fourier_weight2(&idx, precision)?,
        _ => raw_series(&idx, precision),
    });
    cache().lock().unwrap().insert(key, f.clone());
    Ok(f)
}

pub fn eis_fourier_weight1(idx: &EisensteinIndex, precision: &BigRational) -> Result<FourierExpansion> {
    if idx.k != 1 {
        return Err(Error::Invalid("weight-1 expansion needs k = 1".into()));
    }
    Ok(raw_series(idx, precision))
}

/// Holomorphic weight-2 combination G_{2,N,c,d} - N^{-2} G_{2,1,0,0}, normalised.
pub fn eis_fourier_weight2(idx: &EisensteinIndex, precision: &BigRational) -> Result<FourierExpansion> {
    if idx.k != 2 {
        return Err(Error::Invalid("weight-2 expansion needs k = 2".into()));
    }
    Ok(raw_series(idx, precision).sub(&level_one_weight2(idx.n, precision)))
}

/// C_k = (-2 pi i)^k / (N^k (k-1)!).
pub fn normalisation(k: u32, n: u64) -> Complex64 {
    let base = Complex64::new(0.0, -2.0 * std::f64::consts::PI / n as f64);
    let fact: f64 = (1..k).map(|i| i as f64).product();
    base.powu(k) / fact
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rational;

    fn sigma(k: u32, n: u64) -> i64 {
        divisors(n).iter().map(|d| (*d as i64).pow(k)).sum()
    }

    #[test]
    fn e4_and_e6() {
        let f = eis_fourier(&EisensteinIndex::new(4, 1, 0, 0).unwrap(), &rational(21, 1)).unwrap();
        assert_eq!(f.coefficient(0), Cyclotomic::from_rational(rational(1, 120)));
        for n in 1..=20 {
            assert_eq!(f.coefficient(n), Cyclotomic::from_int(2 * sigma(3, n as u64)));
        }
        let f = eis_fourier(&EisensteinIndex::new(6, 1, 0, 0).unwrap(), &rational(5, 1)).unwrap();
        assert_eq!(f.coefficient(0), Cyclotomic::from_rational(rational(-1, 252)));
        assert_eq!(f.coefficient(2), Cyclotomic::from_int(2 * sigma(5, 2)));
    }

    #[test]
    fn cusp_constant_terms_vanish() {
        for n in 2..=5 {
            for idx in all_indices(4, n) {
                if idx.c != 0 {
                    let f = eis_fourier(&idx, &rational(1, 1)).unwrap();
                    assert!(f.coefficient(0).is_zero());
                }
            }
        }
    }

    #[test]
    fn weight2_level1_vanishes() {
        let f = eis_fourier(&EisensteinIndex::new(2, 1, 0, 0).unwrap(), &rational(6, 1)).unwrap();
        assert!(f.is_zero());
    }

    #[test]
    fn odd_level_two_constant() {
        // sum over odd d' of d'^{-4} divided by C_4 is 1/8
        let f = eis_fourier(&EisensteinIndex::new(4, 2, 0, 1).unwrap(), &rational(1, 1)).unwrap();
        assert_eq!(f.coefficient(0), Cyclotomic::from_rational(rational(1, 8)));
    }

    #[test]
    fn slash_index_examples() {
        let idx = EisensteinIndex::new(3, 5, 2, 3).unwrap();
        assert_eq!(eis_slash_index(&idx, &SL2::identity()), idx);
        assert_eq!(eis_slash_index(&idx, &SL2::t()), EisensteinIndex::new(3, 5, 2, 0).unwrap());
        assert_eq!(eis_slash_index(&idx, &SL2::s()), EisensteinIndex::new(3, 5, 3, 3).unwrap());
    }

    #[test]
    fn t_shift_matches_slash() {
        for k in 1..=4 {
            for n in 1..=5 {
                for idx in all_indices(k, n) {
                    let p = rational(3, 1);
                    let f = eis_fourier(&idx, &p).unwrap();
                    let g = eis_fourier(&eis_slash_index(&idx, &SL2::t()), &p).unwrap();
                    assert_eq!(f.t_action(), *g, "{}", idx);
                }
            }
        }
    }

    #[test]
    fn coset_indices() {
        assert_eq!(coset_index(4, 5, &SL2::identity()), EisensteinIndex::new(4, 5, 0, 1).unwrap());
        // gamma^{-1} = S means gamma = S^{-1}
        let g = SL2::s().inverse();
        assert_eq!(coset_index(4, 5, &g), EisensteinIndex::new(4, 5, 1, 0).unwrap());
    }

    #[test]
    fn invalid_index() {
        assert!(EisensteinIndex::new(4, 4, 2, 2).is_err());
        assert!(EisensteinIndex::new(0, 4, 1, 0).is_err());
    }
}
