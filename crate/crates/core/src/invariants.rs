//! Invariant vectors of SL2(Z) types.
//!
//! The generic method takes the kernel of the stacked matrix
//! `[rho(S) - I; rho(T) - I]`. The structured methods build invariants of
//! `rho_N^v (x) rho` and `rho_N0^v (x) rho_N0^v (x) rho` directly from the
//! coset tables of Gamma1(N): an invariant is determined by its value on the
//! identity coset (resp. on one pair per T-orbit), which only has to be fixed
//! by a power of rho(T).
//!
//! Coordinates of the ambient spaces follow the Kronecker order:
//! `x * dim + i` for double and `(x * |cosets| + y) * dim + i` for triple
//! invariants, with `x`, `y` indices into [`cosets_gamma1`].

use std::collections::HashMap;

use num_bigint::BigInt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{ext_gcd, gcd, rational};
use crate::artypes::{type_dual, type_rho_n, type_tensor, Group, TypeRef};
use crate::characters::DirichletCharacter;
use crate::cyclotomic::Cyclotomic;
use crate::linalg::{sv_from_map, RowSpace, SparseVec};
use crate::modgroup::{cosets_gamma1, n_g, t_orbits, CosetTable, SL2};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Generic,
    Structured,
    /// Generic up to [`AUTO_GENERIC_LIMIT`] ambient dimensions.
    Auto,
}

pub const AUTO_GENERIC_LIMIT: usize = 200;

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "generic" => Ok(Method::Generic),
            "structured" => Ok(Method::Structured),
            "auto" => Ok(Method::Auto),
            _ => Err(Error::Invalid(format!("unknown method '{}'", s))),
        }
    }
}

impl Method {
    pub fn resolve(self, ambient_dim: usize) -> Method {
        match self {
            Method::Auto if ambient_dim <= AUTO_GENERIC_LIMIT => Method::Generic,
            Method::Auto => Method::Structured,
            m => m,
        }
    }
}

/// Which space the vectors live in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape {
    Plain,
    Double {
        #[serde(rename = "N")]
        n: u64,
    },
    Triple {
        #[serde(rename = "N0")]
        n0: u64,
    },
}

#[derive(Clone, Debug)]
pub struct InvariantBasis {
    pub ambient: TypeRef,
    pub shape: Shape,
    pub method: Method,
    /// Batch label: a double coset or a character block.
    pub label: String,
    pub vectors: Vec<SparseVec>,
}

impl InvariantBasis {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Exact check that every vector is fixed by rho(S) and rho(T).
    pub fn certify(&self) -> Result<()> {
        let s = self.ambient.rho_s()?;
        let t = self.ambient.rho_t()?;
        for (i, v) in self.vectors.iter().enumerate() {
            if s.apply(v) != *v || t.apply(v) != *v {
                return Err(Error::Validation(format!(
                    "{} vector {} ({}) is not invariant",
                    self.label, i, self.ambient.describe()
                )));
            }
        }
        Ok(())
    }
}

fn require_sl2z(rho: &TypeRef) -> Result<()> {
    if rho.group != Group::SL2Z {
        return Err(Error::Invalid(format!(
            "invariants need a type on SL2(Z), got one on {}",
            rho.group
        )));
    }
    Ok(())
}

fn require_level(rho: &TypeRef, n: u64) -> Result<()> {
    if n == 0 || !n.is_multiple_of(rho.level) {
        return Err(Error::Level(format!(
            "level {} of the type does not divide {}",
            rho.level, n
        )));
    }
    Ok(())
}

/// rho_N^v (x) rho.
pub fn ambient_double(rho: &TypeRef, n: u64) -> Result<TypeRef> {
    type_tensor(type_dual(type_rho_n(n)), rho.clone())
}

/// rho_N0^v (x) rho_N0^v (x) rho.
pub fn ambient_triple(rho: &TypeRef, n0: u64) -> Result<TypeRef> {
    let d = type_dual(type_rho_n(n0));
    type_tensor(type_tensor(d.clone(), d)?, rho.clone())
}

fn generic_kernel(amb: &TypeRef) -> Result<Vec<SparseVec>> {
    let one = Cyclotomic::one();
    let mut rs = RowSpace::new();
    for m in [amb.rho_s()?, amb.rho_t()?] {
        for row in m.minus_scalar(&one).rows {
            if !row.is_empty() {
                rs.insert(&row);
            }
        }
    }
    Ok(rs.kernel(amb.dim))
}

/// H^0(rho) as the kernel of [rho(S) - I; rho(T) - I].
pub fn invariants_generic(rho: &TypeRef) -> Result<InvariantBasis> {
    require_sl2z(rho)?;
    Ok(InvariantBasis {
        ambient: rho.clone(),
        shape: Shape::Plain,
        method: Method::Generic,
        label: "all".into(),
        vectors: generic_kernel(rho)?,
    })
}

/// ker(rho(T)^n - I) as a list of rho(T)-eigenvectors with the exponent `m`
/// of their eigenvalue e(m / M).
fn t_eigenvectors(rho: &TypeRef, n: u64) -> Result<Vec<(u64, u64, SparseVec)>> {
    let mut out = Vec::new();
    for iso in rho.t_isotypic()? {
        if (iso.m * n).is_multiple_of(iso.modulus) {
            for v in iso.basis {
                out.push((iso.m, iso.modulus, v));
            }
        }
    }
    Ok(out)
}

/// The image of the adjunction unit: sum over cosets x of e_x (x) rho(g_x) w.
fn double_from_fixed(rho: &TypeRef, table: &CosetTable, w: &SparseVec) -> Result<SparseVec> {
    let dim = rho.dim;
    let mut out = Vec::new();
    for (x, g) in table.reps.iter().enumerate() {
        let img = rho.evaluate(g)?.apply(w);
        out.extend(img.into_iter().map(|(i, c)| (x * dim + i, c)));
    }
    Ok(out)
}

/// H^0(rho_N^v (x) rho) for a type of level dividing N.
pub fn invariants_double(rho: &TypeRef, n: u64, method: Method) -> Result<InvariantBasis> {
    require_sl2z(rho)?;
    require_level(rho, n)?;
    let amb = ambient_double(rho, n)?;
    let method = method.resolve(amb.dim);
    let vectors = match method {
        Method::Generic => generic_kernel(&amb)?,
        _ => {
            let table = cosets_gamma1(n);
            let mut vs = Vec::new();
            for (_, _, w) in t_eigenvectors(rho, 1)? {
                vs.push(double_from_fixed(rho, &table, &w)?);
            }
            vs
        }
    };
    let basis = InvariantBasis {
        ambient: amb,
        shape: Shape::Double { n },
        method,
        label: "double".into(),
        vectors,
    };
    if method == Method::Structured {
        basis.certify()?;
    }
    Ok(basis)
}

/// A double coset Gamma1(N0) g Gamma1(N0) seen as the T-orbit of the coset of
/// g: left multiplication by T permutes the orbit as a single cycle.
#[derive(Clone, Debug)]
pub struct PiGData {
    pub rep: SL2,
    pub n_g: u64,
    /// Coset indices y, Ty, T^2 y, ...
    pub cycle: Vec<usize>,
}

pub fn pi_g_data(n0: u64) -> Vec<PiGData> {
    let table = cosets_gamma1(n0);
    t_orbits(&table)
        .orbits
        .into_iter()
        .map(|cycle| {
            let rep = table.reps[cycle[0]].clone();
            PiGData {
                n_g: cycle.len() as u64,
                rep,
                cycle,
            }
        })
        .collect()
}

/// Triple invariants attached to one double coset: for every rho(T)
/// eigenvector v with eigenvalue lambda, lambda^{n_g} = 1, the vector
/// sum_x e_x (x) pi(g_x) (sum_j lambda^j e_{T^j y}) (x) rho(g_x) v.
fn triple_for_orbit(rho: &TypeRef, table: &CosetTable, orbit: &PiGData) -> Result<Vec<SparseVec>> {
    let dim = rho.dim;
    let size = table.len();
    let mut out = Vec::new();
    for (m, modulus, v) in t_eigenvectors(rho, orbit.n_g)? {
        // The cycle vector has eigenvalue lambda^{-1} under T, matching
        // the class -m of the projection formula.
        let lambda: Vec<Cyclotomic> = (0..orbit.n_g)
            .map(|j| Cyclotomic::root_of_unity((m * j) as i64, modulus))
            .collect();
        let mut acc: HashMap<usize, Cyclotomic> = HashMap::new();
        for (x, g) in table.reps.iter().enumerate() {
            let gv = rho.evaluate(g)?.apply(&v);
            for (j, &y) in orbit.cycle.iter().enumerate() {
                let gy = table.act(g, y);
                let base = (x * size + gy) * dim;
                for (i, c) in &gv {
                    let val = &lambda[j] * c;
                    acc.entry(base + i).and_modify(|e| *e += &val).or_insert(val);
                }
            }
        }
        out.push(sv_from_map(acc));
    }
    Ok(out)
}

/// Triple invariants split into one batch per double coset of Gamma1(N0).
pub fn triple_batches(rho: &TypeRef, n: u64, n0: u64) -> Result<Vec<InvariantBasis>> {
    require_sl2z(rho)?;
    require_level(rho, n)?;
    if n0 == 0 || !n0.is_multiple_of(n) {
        return Err(Error::Level(format!("{} does not divide N0 = {}", n, n0)));
    }
    let amb = ambient_triple(rho, n0)?;
    let table = cosets_gamma1(n0);
    let orbits = pi_g_data(n0);
    let parts: Vec<Result<Vec<SparseVec>>> = orbits
        .par_iter()
        .map(|o| triple_for_orbit(rho, &table, o))
        .collect();
    let mut out = Vec::new();
    for (o, vs) in orbits.iter().zip(parts) {
        let basis = InvariantBasis {
            ambient: amb.clone(),
            shape: Shape::Triple { n0 },
            method: Method::Structured,
            label: format!("double coset {} (n_g = {})", o.rep, o.n_g),
            vectors: vs?,
        };
        basis.certify()?;
        out.push(basis);
    }
    Ok(out)
}

/// H^0(rho_N0^v (x) rho_N0^v (x) rho) for a type of level dividing N | N0.
pub fn invariants_triple(rho: &TypeRef, n: u64, n0: u64, method: Method) -> Result<InvariantBasis> {
    require_sl2z(rho)?;
    require_level(rho, n)?;
    if n0 == 0 || !n0.is_multiple_of(n) {
        return Err(Error::Level(format!("{} does not divide N0 = {}", n, n0)));
    }
    let amb = ambient_triple(rho, n0)?;
    let method = method.resolve(amb.dim);
    let vectors = match method {
        Method::Generic => generic_kernel(&amb)?,
        _ => triple_batches(rho, n, n0)?
            .into_iter()
            .flat_map(|b| b.vectors)
            .collect(),
    };
    Ok(InvariantBasis {
        ambient: amb,
        shape: Shape::Triple { n0 },
        method,
        label: "triple".into(),
        vectors,
    })
}

/// A lift of the diamond operator <u> to Gamma0(N): (x, -y; N, u).
pub fn diamond(u: u64, n: u64) -> SL2 {
    let (_, x, y) = ext_gcd(&BigInt::from(u), &BigInt::from(n));
    SL2 {
        a: x,
        b: -y,
        c: BigInt::from(n),
        d: BigInt::from(u),
    }
}

fn units(n: u64) -> Vec<u64> {
    (0..n).filter(|u| gcd(*u, n) == 1).collect()
}

/// chi(u)-weighted average (1/phi) sum_u conj(chi)(u) F(. sigma_u) on the
/// coset coordinate picked out by `coset_of` / `with_coset`.
struct RightAction {
    units: Vec<u64>,
    /// `inv[k][x']` is the x with x sigma_{u_k} = x'.
    inv: Vec<Vec<usize>>,
}

impl RightAction {
    fn new(table: &CosetTable) -> Self {
        let n = table.level;
        let units = units(n);
        let inv = units
            .iter()
            .map(|&u| {
                let s = diamond(u, n);
                let mut inv = vec![0usize; table.len()];
                for (x, g) in table.reps.iter().enumerate() {
                    inv[table.index_of(&g.mul(&s))] = x;
                }
                inv
            })
            .collect();
        RightAction { units, inv }
    }

    fn project<F, G>(&self, v: &SparseVec, chi: &DirichletCharacter, coset_of: F, with_coset: G) -> SparseVec
    where
        F: Fn(usize) -> usize,
        G: Fn(usize, usize) -> usize,
    {
        let mut acc: HashMap<usize, Cyclotomic> = HashMap::new();
        for (k, &u) in self.units.iter().enumerate() {
            let w = chi.value(u as i64).conj();
            for (idx, c) in v {
                let x = self.inv[k][coset_of(*idx)];
                let val = &w * c;
                acc.entry(with_coset(*idx, x))
                    .and_modify(|e| *e += &val)
                    .or_insert(val);
            }
        }
        let scale = Cyclotomic::from_rational(rational(1, self.units.len() as i64));
        let mut out = sv_from_map(acc);
        for e in out.iter_mut() {
            e.1 = &e.1 * &scale;
        }
        out
    }
}

fn independent(vs: impl IntoIterator<Item = SparseVec>) -> Vec<SparseVec> {
    let mut rs = RowSpace::new();
    vs.into_iter().filter(|v| !v.is_empty() && rs.insert(v)).collect()
}

/// Invariants split by characters of the diamond operators: first the double
/// blocks H^0(rho_chi^v (x) rho) for chi mod N, then the triple blocks
/// H^0(rho_chi1^v (x) rho_chi2^v (x) rho) for chi1, chi2 mod N0. A vector F in
/// the block of chi satisfies F(x sigma_u) = chi(u) F(x) in each coset slot.
pub fn invariants_dirichlet_blocks(rho: &TypeRef, n: u64, n0: u64) -> Result<Vec<InvariantBasis>> {
    let double = invariants_double(rho, n, Method::Structured)?;
    let table = cosets_gamma1(n);
    let dim = rho.dim;
    let mut out = Vec::new();
    let fixed: Vec<SparseVec> = t_eigenvectors(rho, 1)?.into_iter().map(|e| e.2).collect();
    for chi in DirichletCharacter::all(n) {
        let mut vs = Vec::new();
        for w in &fixed {
            let mut acc: HashMap<usize, Cyclotomic> = HashMap::new();
            for u in units(n) {
                let img = rho.evaluate(&diamond(u, n))?.apply(w);
                let f = chi.value(u as i64).conj();
                for (i, c) in img {
                    let val = &f * &c;
                    acc.entry(i).and_modify(|e| *e += &val).or_insert(val);
                }
            }
            vs.push(sv_from_map(acc));
        }
        let mut vectors = Vec::new();
        for w in independent(vs) {
            vectors.push(double_from_fixed(rho, &table, &w)?);
        }
        let basis = InvariantBasis {
            ambient: double.ambient.clone(),
            shape: Shape::Double { n },
            method: Method::Structured,
            label: format!("chi mod {} #{}", n, chi.index()),
            vectors,
        };
        basis.certify()?;
        out.push(basis);
    }

    let full = invariants_triple(rho, n, n0, Method::Structured)?;
    let table0 = cosets_gamma1(n0);
    let size = table0.len();
    let act = RightAction::new(&table0);
    let x_of = |idx: usize| idx / dim / size;
    let y_of = |idx: usize| (idx / dim) % size;
    let with_x = |idx: usize, x: usize| (x * size + y_of(idx)) * dim + idx % dim;
    let with_y = |idx: usize, y: usize| (x_of(idx) * size + y) * dim + idx % dim;
    let chars = DirichletCharacter::all(n0);
    let blocks: Vec<Vec<Vec<SparseVec>>> = full
        .vectors
        .par_iter()
        .map(|v| {
            chars
                .iter()
                .map(|c1| {
                    let p1 = act.project(v, c1, x_of, with_x);
                    chars
                        .iter()
                        .map(|c2| act.project(&p1, c2, y_of, with_y))
                        .collect()
                })
                .collect()
        })
        .collect();
    for (i1, c1) in chars.iter().enumerate() {
        for (i2, c2) in chars.iter().enumerate() {
            let vectors = independent(blocks.iter().map(|b| b[i1][i2].clone()));
            let basis = InvariantBasis {
                ambient: full.ambient.clone(),
                shape: Shape::Triple { n0 },
                method: Method::Structured,
                label: format!("chi mod {} #{} x #{}", n0, c1.index(), c2.index()),
                vectors,
            };
            basis.certify()?;
            out.push(basis);
        }
    }
    Ok(out)
}

/// Upper bound for the triple invariants: (#double cosets) * dim(rho).
pub fn triple_dimension_bound(rho: &TypeRef, n0: u64) -> usize {
    pi_g_data(n0).len() * rho.dim
}

/// Consistency of the orbit lengths with the closed formula for n_g.
pub fn orbit_lengths_match(n0: u64) -> bool {
    pi_g_data(n0)
        .iter()
        .all(|o| o.n_g == n_g(&o.rep.inverse(), n0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::artypes::{type_rho_chi, type_trivial};
    use crate::linalg::{rank_of, same_span};

    fn trivial() -> TypeRef {
        type_trivial(Group::SL2Z)
    }

    fn chi(n: u64, i: u64) -> TypeRef {
        type_rho_chi(DirichletCharacter::from_index(n, i).unwrap())
    }

    #[test]
    fn generic_examples() {
        assert_eq!(invariants_generic(&trivial()).unwrap().len(), 1);
        let r2 = invariants_generic(&type_rho_n(2)).unwrap();
        assert_eq!(r2.len(), 1);
        let v = &r2.vectors[0];
        assert_eq!(v.len(), 3);
        assert!(v.iter().all(|(_, c)| *c == v[0].1));
        let amb = ambient_double(&type_rho_n(2), 2).unwrap();
        assert_eq!(invariants_generic(&amb).unwrap().len(), 2);
    }

    #[test]
    fn double_examples() {
        for n in 1..=4 {
            assert_eq!(invariants_double(&trivial(), n, Method::Structured).unwrap().len(), 1);
        }
        assert_eq!(invariants_double(&type_rho_n(2), 2, Method::Structured).unwrap().len(), 2);
        assert!(invariants_double(&type_rho_n(3), 2, Method::Structured).is_err());
    }

    #[test]
    fn double_matches_generic() {
        let types = [trivial(), type_rho_n(2), chi(3, 1), chi(4, 1), type_rho_n(3)];
        for rho in &types {
            for n in 1..=4u64 {
                if n % rho.level != 0 || rho.dim > 6 {
                    continue;
                }
                let s = invariants_double(rho, n, Method::Structured).unwrap();
                let g = invariants_double(rho, n, Method::Generic).unwrap();
                assert!(same_span(&s.vectors, &g.vectors), "{} N={}", rho.describe(), n);
                let t_fixed = t_eigenvectors(rho, 1).unwrap().len();
                assert_eq!(s.len(), t_fixed);
            }
        }
    }

    #[test]
    fn triple_examples() {
        assert_eq!(invariants_triple(&trivial(), 1, 1, Method::Structured).unwrap().len(), 1);
        assert_eq!(invariants_triple(&trivial(), 1, 2, Method::Structured).unwrap().len(), 2);
        assert!(invariants_triple(&type_rho_n(2), 2, 3, Method::Structured).is_err());
    }

    #[test]
    fn triple_matches_generic_small() {
        for (rho, n, n0) in [(trivial(), 1, 3), (type_rho_n(2), 2, 2), (chi(3, 1), 3, 3)] {
            let s = invariants_triple(&rho, n, n0, Method::Structured).unwrap();
            let g = invariants_triple(&rho, n, n0, Method::Generic).unwrap();
            assert!(same_span(&s.vectors, &g.vectors));
            assert!(s.len() <= triple_dimension_bound(&rho, n0));
        }
    }

    #[test]
    fn orbit_lengths() {
        for n0 in 1..=12 {
            assert!(orbit_lengths_match(n0), "N0 = {}", n0);
        }
    }

    #[test]
    fn diamond_lifts() {
        for n in 1..=9u64 {
            for u in units(n) {
                let s = diamond(u, n);
                assert!(crate::modgroup::member_gamma0(&s, n));
                assert_eq!(crate::arith::residue(&s.d, n), u % n);
            }
        }
    }

    #[test]
    fn dirichlet_blocks_union() {
        for n0 in 2..=4u64 {
            let rho = trivial();
            let blocks = invariants_dirichlet_blocks(&rho, 1, n0).unwrap();
            let triple: Vec<SparseVec> = blocks
                .iter()
                .filter(|b| matches!(b.shape, Shape::Triple { .. }))
                .flat_map(|b| b.vectors.clone())
                .collect();
            let full = invariants_triple(&rho, 1, n0, Method::Structured).unwrap();
            assert!(same_span(&triple, &full.vectors));
            assert_eq!(rank_of(&triple), triple.len());
        }
    }

    // -I acts trivially on trivial rho, so chi1 * chi2 must be even.
    #[test]
    fn dirichlet_parity_blocks_vanish() {
        let n0 = 4;
        let chars = DirichletCharacter::all(n0);
        let blocks = invariants_dirichlet_blocks(&trivial(), 1, n0).unwrap();
        let triple: Vec<&InvariantBasis> = blocks
            .iter()
            .filter(|b| matches!(b.shape, Shape::Triple { .. }))
            .collect();
        assert_eq!(triple.len(), chars.len() * chars.len());
        for (i1, c1) in chars.iter().enumerate() {
            for (i2, c2) in chars.iter().enumerate() {
                let b = triple[i1 * chars.len() + i2];
                if c1.parity() * c2.parity() == -1 {
                    assert!(b.is_empty(), "{}", b.label);
                }
            }
        }
    }

    #[test]
    fn single_block_at_level_one() {
        let blocks = invariants_dirichlet_blocks(&trivial(), 1, 1).unwrap();
        assert_eq!(blocks.len(), 2);
        assert_eq!(blocks[0].len(), 1);
        assert_eq!(blocks[1].len(), 1);
    }

    #[test]
    fn double_blocks_cover_fixed_space() {
        let rho = type_rho_n(4);
        let blocks = invariants_dirichlet_blocks(&rho, 4, 4).unwrap();
        let double: Vec<SparseVec> = blocks
            .iter()
            .filter(|b| matches!(b.shape, Shape::Double { .. }))
            .flat_map(|b| b.vectors.clone())
            .collect();
        let full = invariants_double(&rho, 4, Method::Structured).unwrap();
        assert!(same_span(&double, &full.vectors));
    }
}
