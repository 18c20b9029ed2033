//! SL2(Z): matrices, words in S and T, congruence subgroups, coset tables.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::arith::{ext_gcd, gcd, lcm, residue};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SL2 {
    pub a: BigInt,
    pub b: BigInt,
    pub c: BigInt,
    pub d: BigInt,
}

impl SL2 {
    pub fn new(a: BigInt, b: BigInt, c: BigInt, d: BigInt) -> Result<Self> {
        if &a * &d - &b * &c != BigInt::one() {
            return Err(Error::Invalid(format!(
                "determinant of ({} {}; {} {}) is not 1",
                a, b, c, d
            )));
        }
        Ok(SL2 { a, b, c, d })
    }

    pub fn from_i64(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        Self::new(a.into(), b.into(), c.into(), d.into())
    }

    fn raw(a: i64, b: i64, c: i64, d: i64) -> Self {
        SL2 {
            a: a.into(),
            b: b.into(),
            c: c.into(),
            d: d.into(),
        }
    }

    pub fn identity() -> Self {
        Self::raw(1, 0, 0, 1)
    }

    pub fn s() -> Self {
        Self::raw(0, -1, 1, 0)
    }

    pub fn t() -> Self {
        Self::raw(1, 1, 0, 1)
    }

    pub fn minus_identity() -> Self {
        Self::raw(-1, 0, 0, -1)
    }

    pub fn t_pow(e: &BigInt) -> Self {
        SL2 {
            a: BigInt::one(),
            b: e.clone(),
            c: BigInt::zero(),
            d: BigInt::one(),
        }
    }

    pub fn mul(&self, o: &SL2) -> SL2 {
        SL2 {
            a: &self.a * &o.a + &self.b * &o.c,
            b: &self.a * &o.b + &self.b * &o.d,
            c: &self.c * &o.a + &self.d * &o.c,
            d: &self.c * &o.b + &self.d * &o.d,
        }
    }

    pub fn inverse(&self) -> SL2 {
        SL2 {
            a: self.d.clone(),
            b: -&self.b,
            c: -&self.c,
            d: self.a.clone(),
        }
    }

    pub fn neg(&self) -> SL2 {
        SL2 {
            a: -&self.a,
            b: -&self.b,
            c: -&self.c,
            d: -&self.d,
        }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    /// Entries reduced modulo `n` as (a, b, c, d).
    pub fn reduce(&self, n: u64) -> (u64, u64, u64, u64) {
        (
            residue(&self.a, n),
            residue(&self.b, n),
            residue(&self.c, n),
            residue(&self.d, n),
        )
    }

    pub fn pow(&self, e: u64) -> SL2 {
        let mut acc = SL2::identity();
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }
}

impl fmt::Display for SL2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} {}; {} {})", self.a, self.b, self.c, self.d)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Letter {
    S,
    T(BigInt),
}

/// Product of letters, read left to right.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Word(pub Vec<Letter>);

impl Word {
    pub fn evaluate(&self) -> SL2 {
        let mut acc = SL2::identity();
        for l in &self.0 {
            acc = match l {
                Letter::S => acc.mul(&SL2::s()),
                Letter::T(e) => acc.mul(&SL2::t_pow(e)),
            };
        }
        acc
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|l| match l {
                Letter::S => "S".to_string(),
                Letter::T(e) => format!("T^{}", e),
            })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Write `g` as a word in S and powers of T (Euclid on the first column).
pub fn word_decompose(g: &SL2) -> Word {
    let mut letters = Vec::new();
    let mut g = g.clone();
    while !g.c.is_zero() {
        let q = g.a.div_floor(&g.c);
        if !q.is_zero() {
            letters.push(Letter::T(q.clone()));
        }
        letters.extend([Letter::S, Letter::S, Letter::S]);
        // g <- S T^{-q} g
        g = SL2::s().mul(&SL2::t_pow(&-q)).mul(&g);
    }
    if g.a.is_one() {
        if !g.b.is_zero() {
            letters.push(Letter::T(g.b.clone()));
        }
    } else {
        letters.push(Letter::S);
        letters.push(Letter::S);
        if !g.b.is_zero() {
            letters.push(Letter::T(-&g.b));
        }
    }
    Word(letters)
}

pub fn member_gamma0(g: &SL2, n: u64) -> bool {
    residue(&g.c, n) == 0
}

pub fn member_gamma1(g: &SL2, n: u64) -> bool {
    let (a, _, c, d) = g.reduce(n);
    c == 0 && a == 1 % n && d == 1 % n
}

pub fn member_gamma_n(g: &SL2, n: u64) -> bool {
    member_gamma1(g, n) && residue(&g.b, n) == 0
}

/// A matrix in SL2(Z) whose first column is congruent to (a, c) mod n.
pub fn lift_column(a: u64, c: u64, n: u64) -> Result<SL2> {
    let (a, c) = (a % n, c % n);
    if gcd(gcd(a, c), n) != 1 {
        return Err(Error::Invalid(format!(
            "column ({}, {}) is not primitive modulo {}",
            a, c, n
        )));
    }
    if n == 1 || (a == 1 && c == 0) {
        return Ok(SL2::identity());
    }
    let c2 = if c == 0 { n } else { c };
    let mut a2 = a;
    while gcd(a2, c2) != 1 {
        a2 += n;
    }
    let (g, x, y) = ext_gcd(&BigInt::from(a2), &BigInt::from(c2));
    debug_assert!(g.is_one());
    SL2::new(BigInt::from(a2), -y, BigInt::from(c2), x)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Subgroup {
    Gamma0,
    Gamma1,
}

/// Left cosets G / H for H = Gamma0(N) or Gamma1(N), keyed by the first
/// column modulo N (up to units for Gamma0).
#[derive(Clone, Debug)]
pub struct CosetTable {
    pub level: u64,
    pub kind: Subgroup,
    pub reps: Vec<SL2>,
    pub keys: Vec<(u64, u64)>,
    index: HashMap<(u64, u64), usize>,
    units: Vec<u64>,
}

impl CosetTable {
    pub fn new(kind: Subgroup, n: u64) -> Self {
        assert!(n >= 1, "level must be positive");
        let units: Vec<u64> = (0..n.max(1)).filter(|u| gcd(*u, n) == 1).collect();
        let mut t = CosetTable {
            level: n,
            kind,
            reps: Vec::new(),
            keys: Vec::new(),
            index: HashMap::new(),
            units,
        };
        for c in 0..n {
            for a in 0..n {
                if gcd(gcd(a, c), n) != 1 {
                    continue;
                }
                let key = t.canonical(a, c);
                if t.index.contains_key(&key) {
                    continue;
                }
                t.index.insert(key, t.reps.len());
                t.keys.push(key);
                t.reps.push(lift_column(key.0, key.1, n).expect("primitive column"));
            }
        }
        t
    }

    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    fn canonical(&self, a: u64, c: u64) -> (u64, u64) {
        let n = self.level;
        let (a, c) = (a % n, c % n);
        match self.kind {
            Subgroup::Gamma1 => (a, c),
            Subgroup::Gamma0 => self
                .units
                .iter()
                .map(|u| ((u * a) % n, (u * c) % n))
                .min()
                .unwrap_or((0, 0)),
        }
    }

    pub fn key_of(&self, g: &SL2) -> (u64, u64) {
        self.canonical(residue(&g.a, self.level), residue(&g.c, self.level))
    }

    pub fn index_of(&self, g: &SL2) -> usize {
        self.index[&self.key_of(g)]
    }

    pub fn index_of_column(&self, a: u64, c: u64) -> usize {
        self.index[&self.canonical(a, c)]
    }

    /// Index of the coset `g * rep_j`, computed on columns mod N.
    pub fn act(&self, g: &SL2, j: usize) -> usize {
        let n = self.level;
        let (ga, gb, gc, gd) = g.reduce(n);
        let col = lift_key_column(&self.reps[j], n);
        let a = (ga * col.0 + gb * col.1) % n.max(1);
        let c = (gc * col.0 + gd * col.1) % n.max(1);
        self.index_of_column(a, c)
    }

    pub fn contains_subgroup_element(&self, g: &SL2) -> bool {
        match self.kind {
            Subgroup::Gamma0 => member_gamma0(g, self.level),
            Subgroup::Gamma1 => member_gamma1(g, self.level),
        }
    }
}

fn lift_key_column(g: &SL2, n: u64) -> (u64, u64) {
    (residue(&g.a, n), residue(&g.c, n))
}

pub fn cosets_gamma1(n: u64) -> CosetTable {
    CosetTable::new(Subgroup::Gamma1, n)
}

pub fn cosets_gamma0(n: u64) -> CosetTable {
    CosetTable::new(Subgroup::Gamma0, n)
}

/// Orbits of left multiplication by T on G / Gamma1(N). These are in
/// bijection with the double cosets Gamma1(N) \ G / Gamma1(N).
#[derive(Clone, Debug)]
pub struct TOrbits {
    /// Orbits as lists of coset indices, each starting at its smallest index
    /// and listed in the order x, Tx, T^2 x, ...
    pub orbits: Vec<Vec<usize>>,
    pub orbit_of: Vec<usize>,
}

pub fn t_orbits(table: &CosetTable) -> TOrbits {
    let n = table.len();
    let mut orbit_of = vec![usize::MAX; n];
    let mut orbits = Vec::new();
    let t = SL2::t();
    for start in 0..n {
        if orbit_of[start] != usize::MAX {
            continue;
        }
        let id = orbits.len();
        let mut orbit = vec![start];
        orbit_of[start] = id;
        let mut cur = table.act(&t, start);
        while cur != start {
            orbit_of[cur] = id;
            orbit.push(cur);
            cur = table.act(&t, cur);
        }
        orbits.push(orbit);
    }
    TOrbits { orbits, orbit_of }
}

/// Representatives of Gamma1(N) \ SL2(Z) / Gamma1(N).
pub fn double_cosets_gamma1(n: u64) -> Vec<SL2> {
    let table = cosets_gamma1(n);
    t_orbits(&table)
        .orbits
        .iter()
        .map(|o| table.reps[o[0]].clone())
        .collect()
}

/// Smallest n > 0 with g T^n g^{-1} in Gamma1(N).
pub fn n_g(g: &SL2, n: u64) -> u64 {
    let ac = residue(&(&g.a * &g.c), n);
    let cc = residue(&(&g.c * &g.c), n);
    lcm(n / gcd(n, ac), n / gcd(n, cc))
}

/// Random product of S and T^{+-1} of the given maximal length.
pub fn random_element<R: Rng>(rng: &mut R, max_len: usize) -> SL2 {
    let len = rng.gen_range(0..=max_len);
    let mut g = SL2::identity();
    for _ in 0..len {
        g = match rng.gen_range(0..3) {
            0 => g.mul(&SL2::s()),
            1 => g.mul(&SL2::t()),
            _ => g.mul(&SL2::t_pow(&BigInt::from(-1))),
        };
    }
    g
}

/// Random element of Gamma(N).
pub fn random_gamma_n<R: Rng>(rng: &mut R, n: u64) -> SL2 {
    let n_i = n as i64;
    loop {
        let a = 1 + n_i * rng.gen_range(-3i64..=3);
        let c = n_i * rng.gen_range(-3i64..=3);
        let (g, x, y) = ext_gcd(&BigInt::from(a), &BigInt::from(c));
        if !g.is_one() {
            continue;
        }
        // a x + c y = 1, so (a -y; c x) has determinant 1.
        let mut m = SL2 {
            a: BigInt::from(a),
            b: -y,
            c: BigInt::from(c),
            d: x,
        };
        // Fix b and d modulo N by right multiplication with a power of T.
        let b0 = residue(&m.b, n) as i64;
        let t = -b0 + n_i * rng.gen_range(-2i64..=2);
        m = m.mul(&SL2::t_pow(&BigInt::from(t)));
        if member_gamma_n(&m, n) {
            return m;
        }
    }
}

pub fn to_i64(x: &BigInt) -> Option<i64> {
    x.to_i64()
}

pub fn abs_max(g: &SL2) -> BigInt {
    [&g.a, &g.b, &g.c, &g.d]
        .iter()
        .map(|x| x.abs())
        .max()
        .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn words_round_trip() {
        let t5 = SL2::t().pow(5);
        assert_eq!(word_decompose(&t5).evaluate(), t5);
        assert_eq!(word_decompose(&SL2::s()).evaluate(), SL2::s());
        let l = SL2::from_i64(1, 0, 1, 1).unwrap();
        assert_eq!(word_decompose(&l).evaluate(), l);
        assert_eq!(word_decompose(&SL2::minus_identity()).evaluate(), SL2::minus_identity());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let g = random_element(&mut rng, 30);
            assert_eq!(word_decompose(&g).evaluate(), g);
        }
    }

    #[test]
    fn membership() {
        assert!(member_gamma1(&SL2::t(), 5));
        assert!(!member_gamma0(&SL2::s(), 5));
        assert!(member_gamma_n(&SL2::t().pow(4), 4));
        assert!(!member_gamma_n(&SL2::t().pow(3), 4));
    }

    #[test]
    fn lifts() {
        assert!(lift_column(1, 0, 4).unwrap().is_identity());
        let g = lift_column(0, 1, 4).unwrap();
        assert_eq!(g.reduce(4).0, 0);
        assert_eq!(g.reduce(4).2, 1);
        let g = lift_column(2, 1, 5).unwrap();
        assert_eq!((g.reduce(5).0, g.reduce(5).2), (2, 1));
        assert!(lift_column(2, 2, 4).is_err());
    }

    #[test]
    fn coset_counts() {
        assert_eq!(cosets_gamma1(1).len(), 1);
        assert_eq!(cosets_gamma1(5).len(), 24);
        assert_eq!(cosets_gamma1(4).len(), 12);
        assert_eq!(cosets_gamma0(4).len(), 6);
        assert_eq!(cosets_gamma0(3).len(), 4);
        assert_eq!(cosets_gamma1(2).keys, vec![(1, 0), (0, 1), (1, 1)]);
    }

    #[test]
    fn coset_well_defined() {
        for n in 1..=6 {
            for kind in [Subgroup::Gamma0, Subgroup::Gamma1] {
                let t = CosetTable::new(kind, n);
                for (i, g) in t.reps.iter().enumerate() {
                    assert_eq!(t.index_of(g), i);
                    for (j, h) in t.reps.iter().enumerate() {
                        let inside = t.contains_subgroup_element(&g.inverse().mul(h));
                        assert_eq!(inside, i == j);
                    }
                }
            }
        }
    }

    #[test]
    fn double_coset_counts() {
        assert_eq!(double_cosets_gamma1(1).len(), 1);
        assert_eq!(double_cosets_gamma1(2).len(), 2);
        // brute-force partition for N = 3 via membership tests
        let n = 3;
        let table = cosets_gamma1(n);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut parent: Vec<usize> = (0..table.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                x = p[x];
            }
            x
        }
        for _ in 0..500 {
            let h = random_element(&mut rng, 20);
            if !member_gamma1(&h, n) {
                continue;
            }
            for j in 0..table.len() {
                let i = table.index_of(&h.mul(&table.reps[j]));
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri.max(rj)] = ri.min(rj);
            }
        }
        let mut roots: Vec<usize> = (0..table.len()).map(|i| find(&mut parent, i)).collect();
        roots.sort();
        roots.dedup();
        assert_eq!(roots.len(), double_cosets_gamma1(n).len());
    }

    #[test]
    fn n_g_examples_and_brute_force() {
        assert_eq!(n_g(&SL2::identity(), 4), 1);
        assert_eq!(n_g(&SL2::s(), 4), 4);
        assert_eq!(n_g(&SL2::from_i64(1, 0, 2, 1).unwrap(), 4), 2);
        for n in 1..=6 {
            for g in cosets_gamma1(n).reps {
                let brute = (1..=n)
                    .find(|&m| member_gamma1(&g.mul(&SL2::t().pow(m)).mul(&g.inverse()), n))
                    .unwrap();
                assert_eq!(n_g(&g, n), brute);
            }
        }
    }

    #[test]
    fn orbits_cover_cosets() {
        for n in 1..=8 {
            let table = cosets_gamma1(n);
            let o = t_orbits(&table);
            let total: usize = o.orbits.iter().map(|x| x.len()).sum();
            assert_eq!(total, table.len());
            for orbit in &o.orbits {
                let x = &table.reps[orbit[0]];
                assert_eq!(orbit.len() as u64, n_g(&x.inverse(), n));
            }
        }
    }

    #[test]
    fn gamma_n_sampler() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..=6 {
            for _ in 0..20 {
                assert!(member_gamma_n(&random_gamma_n(&mut rng, n), n));
            }
        }
    }

    proptest! {
        #[test]
        fn decompose_random(a in -200i64..200, c in -200i64..200) {
            let (g, x, y) = ext_gcd(&BigInt::from(a), &BigInt::from(c));
            prop_assume!(g.is_one());
            let m = SL2::new(BigInt::from(a), -y, BigInt::from(c), x).unwrap();
            prop_assert_eq!(word_decompose(&m).evaluate(), m);
        }
    }
}
