//! Truncated Puiseux series sum_{j} c_j q^{j/D} with cyclotomic coefficients,
//! stored for exponents j/D below a rational precision bound.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::arith::{format_rational, lcm, parse_rational};
use crate::artypes::TBlocks;
use crate::cyclotomic::Cyclotomic;
use crate::linalg::SparseMatrix;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct FourierExpansion {
    pub denominator: u64,
    pub precision: BigRational,
    pub terms: BTreeMap<i64, Cyclotomic>,
}

impl FourierExpansion {
    pub fn zero(denominator: u64, precision: BigRational) -> Self {
        assert!(denominator >= 1);
        FourierExpansion {
            denominator,
            precision,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_terms<I: IntoIterator<Item = (i64, Cyclotomic)>>(
        denominator: u64,
        precision: BigRational,
        terms: I,
    ) -> Self {
        let mut f = Self::zero(denominator, precision);
        for (j, c) in terms {
            f.add_term(j, &c);
        }
        f
    }

    /// Whether q^{j/D} lies below the precision bound.
    pub fn in_range(&self, j: i64) -> bool {
        let lhs = BigInt::from(j) * self.precision.denom();
        lhs < self.precision.numer() * BigInt::from(self.denominator)
    }

    /// Exponent numerators 0..bound() are exactly those in range.
    pub fn bound(&self) -> i64 {
        let x = &self.precision * BigRational::from_integer(BigInt::from(self.denominator));
        x.ceil().to_integer().to_i64().expect("precision fits").max(0)
    }

    pub fn add_term(&mut self, j: i64, c: &Cyclotomic) {
        if c.is_zero() || !self.in_range(j) {
            return;
        }
        let e = self.terms.entry(j).or_default();
        *e += c;
        if e.is_zero() {
            self.terms.remove(&j);
        }
    }

    pub fn coefficient(&self, j: i64) -> Cyclotomic {
        self.terms.get(&j).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Same series over a multiple of the denominator.
    pub fn rescale(&self, d2: u64) -> Result<Self> {
        if !d2.is_multiple_of(self.denominator) {
            return Err(Error::Invalid(format!(
                "denominator {} does not divide {}",
                self.denominator, d2
            )));
        }
        let m = (d2 / self.denominator) as i64;
        Ok(FourierExpansion {
            denominator: d2,
            precision: self.precision.clone(),
            terms: self.terms.iter().map(|(j, c)| (j * m, c.clone())).collect(),
        })
    }

    /// Re-express over denominator `d2`, failing if a nonzero exponent is not
    /// in (1/d2)Z.
    pub fn to_denominator(&self, d2: u64) -> Result<Self> {
        let d = self.denominator as i64;
        let mut terms = BTreeMap::new();
        for (j, c) in &self.terms {
            let num = j * d2 as i64;
            if num % d != 0 {
                return Err(Error::Invalid(format!(
                    "exponent {}/{} is not a multiple of 1/{}",
                    j, d, d2
                )));
            }
            terms.insert(num / d, c.clone());
        }
        Ok(FourierExpansion {
            denominator: d2,
            precision: self.precision.clone(),
            terms,
        })
    }

    pub fn truncate(&self, precision: &BigRational) -> Self {
        let p = precision.min(&self.precision).clone();
        let mut f = Self::zero(self.denominator, p);
        for (j, c) in &self.terms {
            if f.in_range(*j) {
                f.terms.insert(*j, c.clone());
            }
        }
        f
    }

    fn unify(&self, other: &Self) -> (Self, Self) {
        let d = lcm(self.denominator, other.denominator);
        (
            self.rescale(d).expect("lcm"),
            other.rescale(d).expect("lcm"),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        let (a, b) = self.unify(other);
        let p = a.precision.clone().min(b.precision.clone());
        let mut out = a.truncate(&p);
        for (j, c) in &b.terms {
            out.add_term(*j, c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&Cyclotomic::from_int(-1)))
    }

    pub fn scale(&self, c: &Cyclotomic) -> Self {
        if c.is_zero() {
            return Self::zero(self.denominator, self.precision.clone());
        }
        FourierExpansion {
            denominator: self.denominator,
            precision: self.precision.clone(),
            terms: self.terms.iter().map(|(j, x)| (*j, x * c)).collect(),
        }
    }

    /// Truncated product; precision is the minimum of the two.
    pub fn mul(&self, other: &Self) -> Self {
        let (a, b) = self.unify(other);
        let p = a.precision.clone().min(b.precision.clone());
        let mut out = Self::zero(a.denominator, p);
        let bound = out.bound();
        let mut acc: BTreeMap<i64, Cyclotomic> = BTreeMap::new();
        for (i, x) in &a.terms {
            for (j, y) in &b.terms {
                let k = i + j;
                if k >= bound {
                    break;
                }
                if !out.in_range(k) {
                    continue;
                }
                let t = x * y;
                acc.entry(k).and_modify(|e| *e += &t).or_insert(t);
            }
        }
        out.terms = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        out
    }

    /// The action of T: coefficient of q^{j/D} is multiplied by e(j/D)^power.
    pub fn t_action_pow(&self, power: i64) -> Self {
        let d = self.denominator;
        FourierExpansion {
            denominator: d,
            precision: self.precision.clone(),
            terms: self
                .terms
                .iter()
                .map(|(j, c)| {
                    let e = Cyclotomic::root_of_unity(j * power, d);
                    (*j, c * &e)
                })
                .collect(),
        }
    }

    pub fn t_action(&self) -> Self {
        self.t_action_pow(1)
    }

    /// Numerical value at tau of the truncated series.
    pub fn numeric_eval(&self, tau: Complex64) -> Complex64 {
        let two_pi_i = Complex64::new(0.0, 2.0 * std::f64::consts::PI);
        let q = (two_pi_i * tau / self.denominator as f64).exp();
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, c) in &self.terms {
            acc += c.numeric_eval() * q.powi(*j as i32);
        }
        acc
    }

    /// Sum of |c_j| over stored terms; used to bound truncation tails.
    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms
            .values()
            .map(|c| c.numeric_eval().norm())
            .fold(0.0, f64::max)
    }

    pub fn has_negative_exponents(&self) -> bool {
        self.terms.keys().any(|j| *j < 0)
    }

    pub fn max_order(&self) -> u64 {
        self.terms.values().map(|c| c.order()).fold(1, lcm)
    }
}

#[derive(Serialize, Deserialize)]
struct FeJson {
    denominator: u64,
    precision: String,
    terms: Vec<(i64, Cyclotomic)>,
}

impl Serialize for FourierExpansion {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FeJson {
            denominator: self.denominator,
            precision: format_rational(&self.precision),
            terms: self.terms.iter().map(|(j, c)| (*j, c.clone())).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FourierExpansion {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = FeJson::deserialize(d)?;
        if j.denominator == 0 {
            return Err(D::Error::custom("denominator must be positive"));
        }
        let p = parse_rational(&j.precision)
            .ok_or_else(|| D::Error::custom(format!("bad precision '{}'", j.precision)))?;
        if p.is_negative() {
            return Err(D::Error::custom("precision must be non-negative"));
        }
        let mut f = FourierExpansion::zero(j.denominator, p);
        for (e, c) in j.terms {
            if !f.in_range(e) {
                return Err(D::Error::custom(format!("exponent {} beyond precision", e)));
            }
            f.add_term(e, &c);
        }
        Ok(f)
    }
}

/// One series per coordinate of V(rho).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorFourierExpansion {
    pub components: Vec<FourierExpansion>,
}

impl VectorFourierExpansion {
    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| c.is_zero())
    }

    /// Applies a constant matrix to the vector of series.
    pub fn apply_matrix(&self, m: &SparseMatrix) -> Self {
        let template = &self.components[0];
        let components = m
            .rows
            .iter()
            .map(|row| {
                let mut acc = FourierExpansion::zero(template.denominator, template.precision.clone());
                for (j, x) in row {
                    acc = acc.add(&self.components[*j].scale(x));
                }
                acc
            })
            .collect();
        VectorFourierExpansion { components }
    }

    pub fn t_action_pow(&self, power: i64) -> Self {
        VectorFourierExpansion {
            components: self.components.iter().map(|c| c.t_action_pow(power)).collect(),
        }
    }

    /// Whether the series action of T agrees with rho(T) on the vector.
    pub fn is_t_invariant(&self, rho_t: &SparseMatrix) -> bool {
        self.t_action_pow(1) == self.apply_matrix(rho_t)
    }

    pub fn truncate(&self, p: &BigRational) -> Self {
        VectorFourierExpansion {
            components: self.components.iter().map(|c| c.truncate(p)).collect(),
        }
    }

    pub fn numeric_eval(&self, tau: Complex64) -> Vec<Complex64> {
        self.components.iter().map(|c| c.numeric_eval(tau)).collect()
    }
}

/// Restriction to the coordinates of orbit representatives.
pub fn deflate(v: &VectorFourierExpansion, blocks: &TBlocks) -> Vec<FourierExpansion> {
    blocks
        .retained()
        .into_iter()
        .map(|i| v.components[i].clone())
        .collect()
}

/// Rebuilds all coordinates from the representatives using
/// F_{perm(b)} = M_b T^{-1}(F_b).
pub fn inflate(deflated: &[FourierExpansion], blocks: &TBlocks, dim: usize) -> Result<VectorFourierExpansion> {
    let retained = blocks.retained();
    if deflated.len() != retained.len() {
        return Err(Error::Invalid(format!(
            "expected {} deflated components, got {}",
            retained.len(),
            deflated.len()
        )));
    }
    let template = deflated
        .first()
        .cloned()
        .ok_or_else(|| Error::Invalid("nothing to inflate".into()))?;
    let mut comps: Vec<Option<FourierExpansion>> = vec![None; dim];
    for (i, f) in retained.iter().zip(deflated) {
        comps[*i] = Some(f.clone());
    }
    for orbit in &blocks.orbits {
        for w in orbit.windows(2) {
            let (b, nb) = (w[0], w[1]);
            let src: Vec<FourierExpansion> = blocks.blocks[b]
                .iter()
                .map(|&i| comps[i].as_ref().expect("filled along orbit").t_action_pow(-1))
                .collect();
            for (r, &i) in blocks.blocks[nb].iter().enumerate() {
                let mut acc = FourierExpansion::zero(template.denominator, template.precision.clone());
                for (c, s) in src.iter().enumerate() {
                    let m = &blocks.maps[b][r][c];
                    if !m.is_zero() {
                        acc = acc.add(&s.scale(m));
                    }
                }
                comps[i] = Some(acc);
            }
        }
    }
    Ok(VectorFourierExpansion {
        components: comps.into_iter().map(|c| c.expect("all blocks covered")).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rational;
    use crate::artypes::type_rho_n;
    use proptest::prelude::*;

    fn c(n: i64) -> Cyclotomic {
        Cyclotomic::from_int(n)
    }

    #[test]
    fn products() {
        let p = rational(3, 1);
        let a = FourierExpansion::from_terms(1, p.clone(), [(0, c(1)), (1, c(1))]);
        let b = FourierExpansion::from_terms(1, p.clone(), [(0, c(1)), (1, c(-1))]);
        let ab = a.mul(&b);
        assert_eq!(ab, FourierExpansion::from_terms(1, p, [(0, c(1)), (2, c(-1))]));
        let a2 = FourierExpansion::from_terms(1, rational(2, 1), [(0, c(1)), (1, c(1))]);
        assert_eq!(a2.mul(&a2).precision, rational(2, 1));
        let h = FourierExpansion::from_terms(2, rational(5, 2), (0..5).map(|j| (j, c(1))));
        assert_eq!(h.mul(&h).coefficient(3), c(4));
    }

    #[test]
    fn t_action_examples() {
        let q = FourierExpansion::from_terms(1, rational(2, 1), [(1, c(1))]);
        assert_eq!(q.t_action(), q);
        let h = FourierExpansion::from_terms(2, rational(1, 1), [(1, c(1))]);
        assert_eq!(h.t_action().coefficient(1), c(-1));
        let x = FourierExpansion::from_terms(6, rational(1, 1), (0..6).map(|j| (j, c(j + 1))));
        let mut y = x.clone();
        for _ in 0..6 {
            y = y.t_action();
        }
        assert_eq!(x, y);
    }

    #[test]
    fn denominators() {
        let h = FourierExpansion::from_terms(2, rational(2, 1), [(2, c(1))]);
        assert_eq!(h.to_denominator(1).unwrap().coefficient(1), c(1));
        let h = FourierExpansion::from_terms(2, rational(2, 1), [(1, c(1))]);
        assert!(h.to_denominator(1).is_err());
    }

    #[test]
    fn json_round_trip() {
        let f = FourierExpansion::from_terms(3, rational(5, 3), [(0, c(1)), (4, Cyclotomic::root_of_unity(1, 3))]);
        let s = serde_json::to_string(&f).unwrap();
        assert!(s.contains("\"precision\":\"5/3\""));
        let g: FourierExpansion = serde_json::from_str(&s).unwrap();
        assert_eq!(f, g);
        assert!(serde_json::from_str::<FourierExpansion>(
            r#"{"denominator":1,"precision":"1","terms":[[3,{"order":1,"coeffs":[["1","1"]]}]]}"#
        )
        .is_err());
    }

    #[test]
    fn deflation_round_trip_rho2() {
        let r = type_rho_n(2);
        let t = r.rho_t().unwrap();
        let blocks = TBlocks::from_matrix(&t).unwrap();
        // a T-invariant expansion: components (f0, g, T g) where f0 has integral exponents
        let p = rational(2, 1);
        let f0 = FourierExpansion::from_terms(2, p.clone(), [(0, c(1)), (2, c(3))]);
        let g = FourierExpansion::from_terms(2, p.clone(), [(1, c(5)), (2, c(7))]);
        let mut comps = vec![f0.clone(); 3];
        // rho(T) swaps the two non-fixed cosets
        let fixed = (0..3).find(|&i| t.get(i, i).is_one()).unwrap();
        let others: Vec<usize> = (0..3).filter(|&i| i != fixed).collect();
        comps[fixed] = f0;
        comps[others[0]] = g.clone();
        comps[others[1]] = g.t_action();
        let v = VectorFourierExpansion { components: comps };
        assert!(v.is_t_invariant(&t));
        let d = deflate(&v, &blocks);
        assert_eq!(d.len(), 2);
        let back = inflate(&d, &blocks, 3).unwrap();
        assert_eq!(back, v);
        assert_eq!(deflate(&back, &blocks), d);
    }

    fn arb_series() -> impl Strategy<Value = FourierExpansion> {
        (1u64..=6, prop::collection::vec((0i64..12, -3i64..=3), 0..6)).prop_map(|(d, ts)| {
            FourierExpansion::from_terms(d, rational(2, 1), ts.into_iter().map(|(j, x)| (j, c(x))))
        })
    }

    proptest! {
        #[test]
        fn t_action_is_multiplicative(x in arb_series(), y in arb_series()) {
            prop_assert_eq!(x.mul(&y).t_action(), x.t_action().mul(&y.t_action()));
        }

        #[test]
        fn multiplication_commutes(x in arb_series(), y in arb_series()) {
            prop_assert_eq!(x.mul(&y), y.mul(&x));
        }
    }
}
