//! Dirichlet characters, described by their exponents on a fixed set of
//! generators of (Z/N)^*.

use serde::{Deserialize, Serialize};

use crate::arith::{factorize, gcd, lcm};
use crate::cyclotomic::Cyclotomic;
use crate::{Error, Result};

/// Generators of (Z/N)^* with their orders.
///
/// Odd prime powers contribute a primitive root; 4 contributes -1; 2^a with
/// a >= 3 contributes -1 and 5. Each local generator is lifted by CRT so that
/// it is 1 modulo the other prime powers.
pub fn unit_generators(n: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    for (p, e) in factorize(n) {
        let q = p.pow(e);
        let rest = n / q;
        let local: Vec<(u64, u64)> = if p == 2 {
            match e {
                1 => vec![],
                2 => vec![(3, 2)],
                _ => vec![(q - 1, 2), (5, q / 4)],
            }
        } else {
            let phi = (p - 1) * p.pow(e - 1);
            let g = (2..q)
                .find(|&g| gcd(g, q) == 1 && mult_order(g, q) == phi)
                .expect("odd prime powers have primitive roots");
            vec![(g, phi)]
        };
        for (g, ord) in local {
            out.push((crt(g, q, 1, rest), ord));
        }
    }
    out
}

fn mult_order(g: u64, n: u64) -> u64 {
    let mut x = g % n;
    let mut k = 1;
    while x != 1 % n {
        x = x * g % n;
        k += 1;
    }
    k
}

fn crt(a: u64, m: u64, b: u64, n: u64) -> u64 {
    (0..m * n)
        .find(|x| x % m == a % m && x % n == b % n)
        .expect("coprime moduli")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirichletCharacter {
    pub modulus: u64,
    pub exponents: Vec<u64>,
    gens: Vec<(u64, u64)>,
    /// Values as e(s / value_order); `None` off the units.
    table: Vec<Option<u64>>,
    value_order: u64,
}

impl DirichletCharacter {
    pub fn new(modulus: u64, exponents: Vec<u64>) -> Result<Self> {
        if modulus == 0 {
            return Err(Error::Invalid("character modulus must be positive".into()));
        }
        let gens = unit_generators(modulus);
        if exponents.len() != gens.len() {
            return Err(Error::Invalid(format!(
                "modulus {} has {} unit generators, got {} exponents",
                modulus,
                gens.len(),
                exponents.len()
            )));
        }
        let exponents: Vec<u64> = exponents
            .iter()
            .zip(&gens)
            .map(|(e, (_, o))| e % o)
            .collect();
        let value_order = gens.iter().map(|(_, o)| *o).fold(1, lcm);
        let mut table = vec![None; modulus as usize];
        // Walk all products of generator powers in mixed radix.
        let mut idx = vec![0u64; gens.len()];
        loop {
            let mut u = 1 % modulus;
            let mut s = 0u64;
            for (i, (g, o)) in gens.iter().enumerate() {
                for _ in 0..idx[i] {
                    u = u * g % modulus;
                }
                s = (s + exponents[i] * idx[i] * (value_order / o)) % value_order;
            }
            table[u as usize] = Some(s);
            let mut k = 0;
            loop {
                if k == gens.len() {
                    return Ok(DirichletCharacter {
                        modulus,
                        exponents,
                        gens,
                        table,
                        value_order,
                    });
                }
                idx[k] += 1;
                if idx[k] < gens[k].1 {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }

    pub fn trivial(modulus: u64) -> Self {
        let k = unit_generators(modulus).len();
        Self::new(modulus, vec![0; k]).expect("trivial character")
    }

    /// Character number `index` in mixed-radix order of exponent tuples;
    /// index 0 is the trivial character.
    pub fn from_index(modulus: u64, index: u64) -> Result<Self> {
        let gens = unit_generators(modulus);
        let count: u64 = gens.iter().map(|(_, o)| *o).product();
        if index >= count {
            return Err(Error::Invalid(format!(
                "modulus {} has {} characters, index {} out of range",
                modulus, count, index
            )));
        }
        let mut rest = index;
        let mut exps = Vec::new();
        for (_, o) in &gens {
            exps.push(rest % o);
            rest /= o;
        }
        Self::new(modulus, exps)
    }

    pub fn index(&self) -> u64 {
        let mut idx = 0;
        let mut radix = 1;
        for (e, (_, o)) in self.exponents.iter().zip(&self.gens) {
            idx += e * radix;
            radix *= o;
        }
        idx
    }

    pub fn all(modulus: u64) -> Vec<Self> {
        let count: u64 = unit_generators(modulus).iter().map(|(_, o)| *o).product();
        (0..count)
            .map(|i| Self::from_index(modulus, i).expect("in range"))
            .collect()
    }

    pub fn generators(&self) -> &[(u64, u64)] {
        &self.gens
    }

    /// chi(u) as e(s / value_order), or None when gcd(u, N) > 1.
    pub fn exponent_of(&self, u: i64) -> Option<(u64, u64)> {
        let r = u.rem_euclid(self.modulus as i64) as usize;
        self.table[r].map(|s| (s, self.value_order))
    }

    pub fn value(&self, u: i64) -> Cyclotomic {
        match self.exponent_of(u) {
            Some((s, o)) => Cyclotomic::root_of_unity(s as i64, o),
            None => Cyclotomic::zero(),
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.exponents.iter().all(|e| *e == 0)
    }

    /// chi(-1) = +1 or -1.
    pub fn parity(&self) -> i64 {
        if self.value(-1).is_one() {
            1
        } else {
            -1
        }
    }

    pub fn conj(&self) -> Self {
        let exps = self
            .exponents
            .iter()
            .zip(&self.gens)
            .map(|(e, (_, o))| (o - e) % o)
            .collect();
        Self::new(self.modulus, exps).expect("same modulus")
    }

    /// Order of the character as an element of the character group.
    pub fn order(&self) -> u64 {
        self.exponents
            .iter()
            .zip(&self.gens)
            .map(|(e, (_, o))| o / gcd(*e, *o))
            .fold(1, lcm)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum CharacterSpec {
    Exponents { modulus: u64, exponents: Vec<u64> },
    Index { modulus: u64, index: u64 },
}

impl CharacterSpec {
    pub fn build(&self) -> Result<DirichletCharacter> {
        match self {
            CharacterSpec::Exponents { modulus, exponents } => {
                DirichletCharacter::new(*modulus, exponents.clone())
            }
            CharacterSpec::Index { modulus, index } => {
                DirichletCharacter::from_index(*modulus, *index)
            }
        }
    }
}

impl From<&DirichletCharacter> for CharacterSpec {
    fn from(c: &DirichletCharacter) -> Self {
        CharacterSpec::Exponents {
            modulus: c.modulus,
            exponents: c.exponents.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_shapes() {
        assert_eq!(unit_generators(4), vec![(3, 2)]);
        assert_eq!(unit_generators(8), vec![(7, 2), (5, 2)]);
        assert_eq!(unit_generators(2), vec![]);
        assert_eq!(unit_generators(3), vec![(2, 2)]);
        let g12 = unit_generators(12);
        assert_eq!(g12.len(), 2);
    }

    #[test]
    fn character_counts_and_multiplicativity() {
        for n in 1..=24u64 {
            let chars = DirichletCharacter::all(n);
            assert_eq!(chars.len() as u64, crate::arith::euler_phi(n));
            assert!(chars[0].is_trivial());
            for chi in &chars {
                assert!(chi.value(1).is_one());
                for a in 0..n as i64 {
                    for b in 0..n as i64 {
                        assert_eq!(chi.value(a * b), &chi.value(a) * &chi.value(b));
                    }
                }
            }
        }
    }

    #[test]
    fn mod4_character() {
        let chi = DirichletCharacter::from_index(4, 1).unwrap();
        assert_eq!(chi.value(3), Cyclotomic::from_int(-1));
        assert_eq!(chi.value(1), Cyclotomic::one());
        assert!(chi.value(2).is_zero());
        assert_eq!(chi.parity(), -1);
        assert_eq!(chi.conj(), chi);
    }

    #[test]
    fn spec_parsing() {
        let s: CharacterSpec = serde_json::from_str(r#"{"modulus":5,"index":2}"#).unwrap();
        let chi = s.build().unwrap();
        assert_eq!(chi.order(), 2);
        let s: CharacterSpec = serde_json::from_str(r#"{"modulus":5,"exponents":[1]}"#).unwrap();
        assert_eq!(s.build().unwrap().order(), 4);
    }
}
