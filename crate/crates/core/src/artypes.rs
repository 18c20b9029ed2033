//! Arithmetic types: finite-dimensional representations of SL2(Z) or of
//! Gamma0(N), Gamma1(N) with congruence kernel, evaluated exactly.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use num_traits::ToPrimitive;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::arith::{lcm, residue};
use crate::characters::DirichletCharacter;
use crate::cyclotomic::Cyclotomic;
use crate::linalg::{RowSpace, SparseMatrix, SparseVec};
use crate::modgroup::{
    cosets_gamma0, cosets_gamma1, member_gamma0, member_gamma1, random_element, random_gamma_n,
    word_decompose, CosetTable, Letter, Subgroup, SL2,
};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Group {
    SL2Z,
    Gamma0(u64),
    Gamma1(u64),
}

impl Group {
    pub fn contains(&self, g: &SL2) -> bool {
        match self {
            Group::SL2Z => true,
            Group::Gamma0(n) => member_gamma0(g, *n),
            Group::Gamma1(n) => member_gamma1(g, *n),
        }
    }

    pub fn level(&self) -> u64 {
        match self {
            Group::SL2Z => 1,
            Group::Gamma0(n) | Group::Gamma1(n) => *n,
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Group::SL2Z => write!(f, "SL2Z"),
            Group::Gamma0(n) => write!(f, "Gamma0({})", n),
            Group::Gamma1(n) => write!(f, "Gamma1({})", n),
        }
    }
}

impl std::str::FromStr for Group {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "SL2Z" {
            return Ok(Group::SL2Z);
        }
        let parse = |prefix: &str| -> Option<u64> {
            s.strip_prefix(prefix)?
                .strip_suffix(')')?
                .trim()
                .parse()
                .ok()
        };
        if let Some(n) = parse("Gamma0(") {
            return Ok(Group::Gamma0(n));
        }
        if let Some(n) = parse("Gamma1(") {
            return Ok(Group::Gamma1(n));
        }
        Err(Error::Invalid(format!("unknown group '{}'", s)))
    }
}

/// Block-monomial data for S and T: generator `g` sends `e_i (x) w` to
/// `e_{perm[i]} (x) blocks[i] w`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwistedPermData {
    pub n: usize,
    pub d: usize,
    pub s_perm: Vec<usize>,
    pub s_blocks: Vec<Vec<Vec<Cyclotomic>>>,
    pub t_perm: Vec<usize>,
    pub t_blocks: Vec<Vec<Vec<Cyclotomic>>>,
}

impl TwistedPermData {
    fn matrix(&self, perm: &[usize], blocks: &[Vec<Vec<Cyclotomic>>]) -> Result<SparseMatrix> {
        let (n, d) = (self.n, self.d);
        if perm.len() != n || blocks.len() != n {
            return Err(Error::Invalid("twisted permutation needs n images and n blocks".into()));
        }
        let mut seen = vec![false; n];
        for &p in perm {
            if p >= n || seen[p] {
                return Err(Error::Invalid("twist data does not define a permutation".into()));
            }
            seen[p] = true;
        }
        let mut m = SparseMatrix::zero(n * d, n * d);
        for (i, &pi) in perm.iter().enumerate() {
            let b = &blocks[i];
            if b.len() != d || b.iter().any(|r| r.len() != d) {
                return Err(Error::Invalid(format!("twist block {} is not {}x{}", i, d, d)));
            }
            for (r, row) in b.iter().enumerate() {
                for (c, x) in row.iter().enumerate() {
                    if !x.is_zero() {
                        m.set(pi * d + r, i * d + c, x.clone());
                    }
                }
            }
        }
        Ok(m)
    }
}

#[derive(Debug)]
pub enum Kind {
    Trivial,
    Dirichlet(DirichletCharacter),
    Induced {
        inner: Arc<ArithmeticType>,
        table: Arc<CosetTable>,
    },
    TwistedPerm {
        data: TwistedPermData,
        s_powers: Vec<SparseMatrix>,
        t_powers: Vec<SparseMatrix>,
    },
    Tensor(Arc<ArithmeticType>, Arc<ArithmeticType>),
    Dual(Arc<ArithmeticType>),
}

const MEMO_CAP: usize = 4096;

#[derive(Debug)]
pub struct ArithmeticType {
    pub kind: Kind,
    pub dim: usize,
    pub level: u64,
    pub group: Group,
    memo: Mutex<HashMap<SL2, Arc<SparseMatrix>>>,
}

pub type TypeRef = Arc<ArithmeticType>;

fn wrap(kind: Kind, dim: usize, level: u64, group: Group) -> TypeRef {
    Arc::new(ArithmeticType {
        kind,
        dim,
        level,
        group,
        memo: Mutex::new(HashMap::new()),
    })
}

pub fn type_trivial(group: Group) -> TypeRef {
    wrap(Kind::Trivial, 1, group.level(), group)
}

pub fn type_dirichlet(chi: DirichletCharacter) -> TypeRef {
    let n = chi.modulus;
    wrap(Kind::Dirichlet(chi), 1, n, Group::Gamma0(n))
}

pub fn type_induce(inner: TypeRef) -> Result<TypeRef> {
    let table = match inner.group {
        Group::Gamma0(n) => cosets_gamma0(n),
        Group::Gamma1(n) => cosets_gamma1(n),
        Group::SL2Z => return Err(Error::Invalid("induction needs a Gamma0 or Gamma1 type".into())),
    };
    let dim = table.len() * inner.dim;
    let level = inner.level;
    Ok(wrap(
        Kind::Induced {
            inner,
            table: Arc::new(table),
        },
        dim,
        level,
        Group::SL2Z,
    ))
}

pub fn type_rho_n(n: u64) -> TypeRef {
    type_induce(type_trivial(Group::Gamma1(n))).expect("Gamma1 type")
}

pub fn type_rho_chi(chi: DirichletCharacter) -> TypeRef {
    type_induce(type_dirichlet(chi)).expect("Gamma0 type")
}

pub fn type_dual(inner: TypeRef) -> TypeRef {
    let (dim, level, group) = (inner.dim, inner.level, inner.group);
    wrap(Kind::Dual(inner), dim, level, group)
}

pub fn type_tensor(a: TypeRef, b: TypeRef) -> Result<TypeRef> {
    if a.group != b.group {
        return Err(Error::Invalid(format!(
            "tensor of types on different groups {} and {}",
            a.group, b.group
        )));
    }
    let (dim, level, group) = (a.dim * b.dim, lcm(a.level, b.level), a.group);
    Ok(wrap(Kind::Tensor(a, b), dim, level, group))
}

/// Twisted permutation type on SL2(Z), given by its values on S and T and an
/// asserted level.
pub fn type_twisted_perm(data: TwistedPermData, level: u64) -> Result<TypeRef> {
    if data.n == 0 || data.d == 0 || level == 0 {
        return Err(Error::Invalid("twisted permutation type needs n, d, level >= 1".into()));
    }
    let s = data.matrix(&data.s_perm, &data.s_blocks)?;
    let t = data.matrix(&data.t_perm, &data.t_blocks)?;
    let mut s_powers = vec![SparseMatrix::identity(s.nrows)];
    for _ in 1..4 {
        let next = s_powers.last().unwrap().mul(&s);
        s_powers.push(next);
    }
    let mut t_powers = vec![SparseMatrix::identity(t.nrows)];
    loop {
        let next = t_powers.last().unwrap().mul(&t);
        if next.is_identity() {
            break;
        }
        if t_powers.len() as u64 >= level {
            return Err(Error::Validation(format!(
                "rho(T) does not have order dividing the level {}",
                level
            )));
        }
        t_powers.push(next);
    }
    let dim = data.n * data.d;
    Ok(wrap(
        Kind::TwistedPerm {
            data,
            s_powers,
            t_powers,
        },
        dim,
        level,
        Group::SL2Z,
    ))
}

impl ArithmeticType {
    pub fn evaluate(&self, g: &SL2) -> Result<Arc<SparseMatrix>> {
        if let Some(m) = self.memo.lock().unwrap().get(g) {
            return Ok(m.clone());
        }
        if !self.group.contains(g) {
            return Err(Error::NotInSubgroup(format!("{} for {}", g, self.group)));
        }
        let m = Arc::new(self.compute(g)?);
        let mut memo = self.memo.lock().unwrap();
        if memo.len() >= MEMO_CAP {
            memo.clear();
        }
        memo.insert(g.clone(), m.clone());
        Ok(m)
    }

    fn compute(&self, g: &SL2) -> Result<SparseMatrix> {
        Ok(match &self.kind {
            Kind::Trivial => SparseMatrix::identity(1),
            Kind::Dirichlet(chi) => {
                let d = residue(&g.d, chi.modulus) as i64;
                let mut m = SparseMatrix::zero(1, 1);
                m.set(0, 0, chi.value(d));
                m
            }
            Kind::Induced { inner, table } => {
                let k = inner.dim;
                let mut m = SparseMatrix::zero(self.dim, self.dim);
                for (j, dj) in table.reps.iter().enumerate() {
                    let h = g.mul(dj);
                    let i = table.index_of(&h);
                    let t = table.reps[i].inverse().mul(&h);
                    let blk = inner.evaluate(&t)?;
                    for (r, row) in blk.rows.iter().enumerate() {
                        for (c, x) in row {
                            m.rows[i * k + r].push((j * k + c, x.clone()));
                        }
                    }
                }
                for row in m.rows.iter_mut() {
                    row.sort_by_key(|e| e.0);
                }
                m
            }
            Kind::TwistedPerm {
                s_powers, t_powers, ..
            } => {
                let mut acc = SparseMatrix::identity(self.dim);
                let word = word_decompose(g);
                let mut s_run = 0usize;
                let flush = |acc: SparseMatrix, s_run: &mut usize| {
                    let r = *s_run % 4;
                    *s_run = 0;
                    if r == 0 {
                        acc
                    } else {
                        acc.mul(&s_powers[r])
                    }
                };
                for l in &word.0 {
                    match l {
                        Letter::S => s_run += 1,
                        Letter::T(e) => {
                            acc = flush(acc, &mut s_run);
                            let ord = t_powers.len() as i64;
                            let r = (e % num_bigint::BigInt::from(ord))
                                .to_i64()
                                .unwrap()
                                .rem_euclid(ord);
                            if r != 0 {
                                acc = acc.mul(&t_powers[r as usize]);
                            }
                        }
                    }
                }
                flush(acc, &mut s_run)
            }
            Kind::Tensor(a, b) => a.evaluate(g)?.kron(&*b.evaluate(g)?),
            Kind::Dual(a) => a.evaluate(&g.inverse())?.transpose(),
        })
    }

    pub fn rho_s(&self) -> Result<Arc<SparseMatrix>> {
        self.evaluate(&SL2::s())
    }

    pub fn rho_t(&self) -> Result<Arc<SparseMatrix>> {
        self.evaluate(&SL2::t())
    }

    /// Multiplicative order of rho(T); must divide the level.
    pub fn t_order(&self) -> Result<u64> {
        let t = self.rho_t()?;
        let mut p = (*t).clone();
        for k in 1..=self.level {
            if p.is_identity() {
                if !self.level.is_multiple_of(k) {
                    break;
                }
                return Ok(k);
            }
            p = p.mul(&t);
        }
        Err(Error::Validation(format!(
            "order of rho(T) does not divide the level {}",
            self.level
        )))
    }

    /// Decomposition of V under rho(T): for each m mod M with a nonzero
    /// eigenspace, the eigenvalue e(m/M) and a basis of the eigenspace,
    /// obtained as the column space of the averaging projection.
    pub fn t_isotypic(&self) -> Result<Vec<Isotypic>> {
        let m_ord = self.t_order()?;
        let t = self.rho_t()?;
        // columns of rho(T)^h for all h
        let mut powers = vec![SparseMatrix::identity(self.dim)];
        for _ in 1..m_ord {
            let next = powers.last().unwrap().mul(&t);
            powers.push(next);
        }
        let mut out = Vec::new();
        for m in 0..m_ord {
            let proj = projection(&powers, m, m_ord);
            let mut rs = RowSpace::new();
            let mut basis = Vec::new();
            for col in proj.transpose().rows {
                if rs.insert(&col) {
                    basis.push(col);
                }
            }
            if !basis.is_empty() {
                out.push(Isotypic {
                    m,
                    modulus: m_ord,
                    basis,
                });
            }
        }
        Ok(out)
    }

    /// The projection onto the e(m/M)-eigenspace of rho(T).
    pub fn t_projection(&self, m: u64) -> Result<SparseMatrix> {
        let m_ord = self.t_order()?;
        let t = self.rho_t()?;
        let mut powers = vec![SparseMatrix::identity(self.dim)];
        for _ in 1..m_ord {
            let next = powers.last().unwrap().mul(&t);
            powers.push(next);
        }
        Ok(projection(&powers, m % m_ord, m_ord))
    }

    /// Exact relation checks and a probabilistic level check.
    pub fn validate<R: Rng>(&self, rng: &mut R, samples: usize) -> Result<ValidationReport> {
        let mut report = ValidationReport {
            relations: None,
            level: self.level,
            level_checked: samples,
            passed: true,
            witness: None,
        };
        if self.group == Group::SL2Z {
            let s = self.rho_s()?;
            let t = self.rho_t()?;
            let s2 = s.mul(&s);
            let st = s.mul(&t);
            let checks = [
                ("rho(S)^4 = I", s2.mul(&s2).is_identity()),
                ("(rho(S)rho(T))^3 = rho(S)^2", st.mul(&st).mul(&st) == s2),
                ("rho(S)^2 rho(T) = rho(T) rho(S)^2", s2.mul(&t) == t.mul(&s2)),
            ];
            report.relations = Some(true);
            for (name, ok) in checks {
                if !ok {
                    report.relations = Some(false);
                    report.passed = false;
                    report.witness = Some(format!("relation {} fails", name));
                    return Ok(report);
                }
            }
        }
        let n = self.level;
        for i in 0..samples {
            let g = if i % 2 == 0 && self.group == Group::SL2Z {
                let c = random_element(rng, 12);
                c.mul(&SL2::t().pow(n)).mul(&c.inverse())
            } else {
                random_gamma_n(rng, n)
            };
            let m = self.evaluate_checked(&g)?;
            if !m.is_identity() {
                report.passed = false;
                report.witness = Some(format!(
                    "{} lies in Gamma({}) but is not in the kernel (word {})",
                    g,
                    n,
                    word_decompose(&g)
                ));
                return Ok(report);
            }
        }
        Ok(report)
    }

    fn evaluate_checked(&self, g: &SL2) -> Result<Arc<SparseMatrix>> {
        // Uncached: random samples would only pollute the memo.
        if !self.group.contains(g) {
            return Err(Error::NotInSubgroup(format!("{}", g)));
        }
        Ok(Arc::new(self.compute(g)?))
    }

    /// Lcm of the cyclotomic orders appearing in rho(S) and rho(T).
    pub fn field_order(&self) -> Result<u64> {
        if self.group != Group::SL2Z {
            return Ok(1);
        }
        Ok(lcm(self.rho_s()?.orders(), self.rho_t()?.orders()))
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            Kind::Trivial => format!("trivial on {}", self.group),
            Kind::Dirichlet(chi) => format!("dirichlet mod {} #{}", chi.modulus, chi.index()),
            Kind::Induced { inner, .. } => format!("Ind({})", inner.describe()),
            Kind::TwistedPerm { data, .. } => {
                format!("twisted permutation n={} d={}", data.n, data.d)
            }
            Kind::Tensor(a, b) => format!("({}) (x) ({})", a.describe(), b.describe()),
            Kind::Dual(a) => format!("dual({})", a.describe()),
        }
    }
}

fn projection(powers: &[SparseMatrix], m: u64, m_ord: u64) -> SparseMatrix {
    let n = powers[0].nrows;
    let mut acc = SparseMatrix::zero(n, n);
    for (h, p) in powers.iter().enumerate() {
        let w = Cyclotomic::root_of_unity(-((m * h as u64) as i64), m_ord);
        acc = acc.add(&p.scale(&w));
    }
    let inv = Cyclotomic::from_rational(crate::arith::rational(1, m_ord as i64));
    acc.scale(&inv)
}

#[derive(Clone, Debug)]
pub struct Isotypic {
    pub m: u64,
    pub modulus: u64,
    pub basis: Vec<SparseVec>,
}

impl Isotypic {
    pub fn eigenvalue(&self) -> Cyclotomic {
        Cyclotomic::root_of_unity(self.m as i64, self.modulus)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ValidationReport {
    /// None for types not defined on all of SL2(Z).
    pub relations: Option<bool>,
    pub level: u64,
    pub level_checked: usize,
    pub passed: bool,
    pub witness: Option<String>,
}

/// Blocks of coordinates permuted by rho(T): rho(T) maps block `b` onto block
/// `perm[b]` through the matrix `maps[b]` (rows indexed by the target block).
#[derive(Clone, Debug)]
pub struct TBlocks {
    pub blocks: Vec<Vec<usize>>,
    pub perm: Vec<usize>,
    pub maps: Vec<Vec<Vec<Cyclotomic>>>,
    /// Orbits of `perm`, each starting at its smallest block.
    pub orbits: Vec<Vec<usize>>,
}

impl TBlocks {
    /// Derive the coarsest-needed block decomposition from a sparse invertible matrix.
    pub fn from_matrix(t: &SparseMatrix) -> Result<TBlocks> {
        let n = t.nrows;
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        fn union(p: &mut [usize], a: usize, b: usize) -> bool {
            let (ra, rb) = (find(p, a), find(p, b));
            if ra == rb {
                return false;
            }
            p[ra.max(rb)] = ra.min(rb);
            true
        }
        let cols = t.transpose();
        loop {
            let mut changed = false;
            // Images of one block lie in one block.
            let mut img_rep: HashMap<usize, usize> = HashMap::new();
            for (j, col) in cols.rows.iter().enumerate() {
                let bj = find(&mut parent, j);
                for (i, _) in col {
                    match img_rep.get(&bj) {
                        Some(&r) => changed |= union(&mut parent, r, *i),
                        None => {
                            img_rep.insert(bj, *i);
                        }
                    }
                }
            }
            // Preimages of one block lie in one block.
            let mut pre_rep: HashMap<usize, usize> = HashMap::new();
            for (i, row) in t.rows.iter().enumerate() {
                let bi = find(&mut parent, i);
                for (j, _) in row {
                    match pre_rep.get(&bi) {
                        Some(&r) => changed |= union(&mut parent, r, *j),
                        None => {
                            pre_rep.insert(bi, *j);
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let mut block_id: HashMap<usize, usize> = HashMap::new();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut of = vec![0usize; n];
        for i in 0..n {
            let r = find(&mut parent, i);
            let id = *block_id.entry(r).or_insert_with(|| {
                blocks.push(Vec::new());
                blocks.len() - 1
            });
            blocks[id].push(i);
            of[i] = id;
        }
        let mut perm = vec![usize::MAX; blocks.len()];
        for (b, blk) in blocks.iter().enumerate() {
            let j = blk[0];
            let i = cols.rows[j]
                .first()
                .ok_or_else(|| Error::Invalid("rho(T) is singular".into()))?
                .0;
            perm[b] = of[i];
        }
        let mut maps = Vec::with_capacity(blocks.len());
        for (b, blk) in blocks.iter().enumerate() {
            let target = &blocks[perm[b]];
            if target.len() != blk.len() {
                return Err(Error::Invalid("rho(T) does not permute its blocks".into()));
            }
            let m: Vec<Vec<Cyclotomic>> = target
                .iter()
                .map(|&i| blk.iter().map(|&j| t.get(i, j)).collect())
                .collect();
            maps.push(m);
        }
        let mut seen = vec![false; blocks.len()];
        let mut orbits = Vec::new();
        for b in 0..blocks.len() {
            if seen[b] {
                continue;
            }
            let mut orbit = vec![b];
            seen[b] = true;
            let mut cur = perm[b];
            while cur != b {
                seen[cur] = true;
                orbit.push(cur);
                cur = perm[cur];
            }
            orbits.push(orbit);
        }
        Ok(TBlocks {
            blocks,
            perm,
            maps,
            orbits,
        })
    }

    /// Coordinates kept by deflation: the blocks of orbit representatives.
    pub fn retained(&self) -> Vec<usize> {
        let mut r: Vec<usize> = self
            .orbits
            .iter()
            .flat_map(|o| self.blocks[o[0]].iter().copied())
            .collect();
        r.sort_unstable();
        r
    }

    pub fn trivial(dim: usize) -> TBlocks {
        TBlocks {
            blocks: vec![(0..dim).collect()],
            perm: vec![0],
            maps: vec![(0..dim)
                .map(|i| {
                    (0..dim)
                        .map(|j| if i == j { Cyclotomic::one() } else { Cyclotomic::zero() })
                        .collect()
                })
                .collect()],
            orbits: vec![vec![0]],
        }
    }
}

/// Convenience: the Gamma1 or Gamma0 table underlying an induced type.
pub fn induced_table(rho: &ArithmeticType) -> Option<(&CosetTable, Subgroup)> {
    match &rho.kind {
        Kind::Induced { table, .. } => Some((table, table.kind)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sv_to_dense;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn chi4() -> DirichletCharacter {
        DirichletCharacter::from_index(4, 1).unwrap()
    }

    #[test]
    fn trivial_type() {
        let t = type_trivial(Group::SL2Z);
        assert!(t.rho_s().unwrap().is_identity());
        assert!(t.rho_t().unwrap().is_identity());
        assert_eq!(t.level, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(t.validate(&mut rng, 10).unwrap().passed);
    }

    #[test]
    fn dirichlet_type() {
        let t = type_dirichlet(chi4());
        let v = |g: SL2| t.evaluate(&g).unwrap().get(0, 0);
        assert!(v(SL2::t()).is_one());
        assert!(v(SL2::from_i64(1, 0, 4, 1).unwrap()).is_one());
        assert_eq!(v(SL2::from_i64(3, 1, 8, 3).unwrap()), Cyclotomic::from_int(-1));
        assert!(t.evaluate(&SL2::s()).is_err());
    }

    #[test]
    fn rho_2_structure() {
        let r = type_rho_n(2);
        assert_eq!(r.dim, 3);
        let t = r.rho_t().unwrap();
        // one fixed point, one 2-cycle
        let fixed = (0..3).filter(|&i| t.get(i, i).is_one()).count();
        assert_eq!(fixed, 1);
        assert!(t.mul(&t).is_identity());
        assert!(r.evaluate(&SL2::identity()).unwrap().is_identity());
        let iso = r.t_isotypic().unwrap();
        let dims: Vec<(u64, usize)> = iso.iter().map(|x| (x.m, x.basis.len())).collect();
        assert_eq!(dims, vec![(0, 2), (1, 1)]);
    }

    #[test]
    fn dims() {
        assert_eq!(type_rho_chi(chi4()).dim, 6);
        assert_eq!(type_rho_n(4).dim, 12);
        assert_eq!(type_tensor(type_rho_n(2), type_rho_n(2)).unwrap().dim, 9);
    }

    #[test]
    fn relations_and_levels() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for r in [
            type_rho_n(3),
            type_rho_n(4),
            type_rho_chi(chi4()),
            type_rho_chi(DirichletCharacter::from_index(5, 1).unwrap()),
            type_dual(type_rho_n(3)),
            type_tensor(type_rho_n(2), type_dual(type_rho_chi(chi4()))).unwrap(),
        ] {
            let rep = r.validate(&mut rng, 50).unwrap();
            assert!(rep.passed, "{}: {:?}", r.describe(), rep.witness);
        }
    }

    #[test]
    fn multiplicativity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for r in [type_rho_n(3), type_rho_chi(chi4()), type_dual(type_rho_n(4))] {
            for _ in 0..50 {
                let g = random_element(&mut rng, 15);
                let h = random_element(&mut rng, 15);
                let lhs = r.evaluate(&g).unwrap().mul(&r.evaluate(&h).unwrap());
                assert_eq!(lhs, *r.evaluate(&g.mul(&h)).unwrap());
            }
        }
    }

    #[test]
    fn induce_matches_constructors() {
        let a = type_induce(type_dirichlet(chi4())).unwrap();
        let b = type_rho_chi(chi4());
        assert_eq!(*a.rho_s().unwrap(), *b.rho_s().unwrap());
        assert_eq!(*a.rho_t().unwrap(), *b.rho_t().unwrap());
        let c = type_induce(type_trivial(Group::Gamma1(2))).unwrap();
        assert_eq!(*c.rho_t().unwrap(), *type_rho_n(2).rho_t().unwrap());
        // trivial character gives the permutation type on Gamma0 cosets
        let triv = type_rho_chi(DirichletCharacter::trivial(4));
        let perm = type_induce(type_trivial(Group::Gamma0(4))).unwrap();
        assert_eq!(*triv.rho_s().unwrap(), *perm.rho_s().unwrap());
        assert_eq!(*triv.rho_t().unwrap(), *perm.rho_t().unwrap());
    }

    #[test]
    fn dual_behaviour() {
        let r = type_rho_chi(chi4());
        let dd = type_dual(type_dual(r.clone()));
        assert_eq!(*dd.rho_s().unwrap(), *r.rho_s().unwrap());
        assert_eq!(*dd.rho_t().unwrap(), *r.rho_t().unwrap());
        let s_inv = r.evaluate(&SL2::s().inverse()).unwrap();
        assert_eq!(*type_dual(r.clone()).rho_s().unwrap(), s_inv.transpose());
        // rho_2 is self-dual: equal traces on random words
        let r2 = type_rho_n(2);
        let d2 = type_dual(r2.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let g = random_element(&mut rng, 20);
            assert_eq!(r2.evaluate(&g).unwrap().trace(), d2.evaluate(&g).unwrap().trace());
        }
    }

    #[test]
    fn projections_partition_unity() {
        let r = type_rho_n(4);
        let ord = r.t_order().unwrap();
        let mut sum = SparseMatrix::zero(r.dim, r.dim);
        for m in 0..ord {
            sum = sum.add(&r.t_projection(m).unwrap());
        }
        assert!(sum.is_identity());
        let t = r.rho_t().unwrap();
        for iso in r.t_isotypic().unwrap() {
            let lam = iso.eigenvalue();
            for v in &iso.basis {
                let tv = sv_to_dense(&t.apply(v), r.dim);
                let lv = sv_to_dense(v, r.dim);
                for (a, b) in tv.iter().zip(&lv) {
                    assert_eq!(*a, &lam * b);
                }
            }
        }
    }

    fn rho2_twisted(corrupt: bool) -> Result<TypeRef> {
        let r = type_rho_n(2);
        let s = r.rho_s().unwrap();
        let t = r.rho_t().unwrap();
        let perm_of = |m: &SparseMatrix| -> Vec<usize> {
            (0..3).map(|j| (0..3).find(|&i| !m.get(i, j).is_zero()).unwrap()).collect()
        };
        let one = || vec![vec![Cyclotomic::one()]];
        let mut t_blocks = vec![one(), one(), one()];
        if corrupt {
            t_blocks[0] = vec![vec![Cyclotomic::from_int(-1)]];
        }
        type_twisted_perm(
            TwistedPermData {
                n: 3,
                d: 1,
                s_perm: perm_of(&s),
                s_blocks: vec![one(), one(), one()],
                t_perm: perm_of(&t),
                t_blocks,
            },
            2,
        )
    }

    #[test]
    fn twisted_perm_matches_rho2() {
        let tw = rho2_twisted(false).unwrap();
        let r = type_rho_n(2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..30 {
            let g = random_element(&mut rng, 20);
            assert_eq!(*tw.evaluate(&g).unwrap(), *r.evaluate(&g).unwrap());
        }
        assert!(tw.validate(&mut rng, 20).unwrap().passed);
    }

    #[test]
    fn corrupted_twist_fails_validation() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        match rho2_twisted(true) {
            Ok(tw) => {
                let rep = tw.validate(&mut rng, 20).unwrap();
                assert!(!rep.passed);
                assert!(rep.witness.is_some());
            }
            Err(e) => assert!(matches!(e, Error::Validation(_))),
        }
    }

    #[test]
    fn t_blocks_of_rho2() {
        let r = type_rho_n(2);
        let b = TBlocks::from_matrix(&r.rho_t().unwrap()).unwrap();
        assert_eq!(b.orbits.len(), 2);
        assert_eq!(b.retained().len(), 2);
        let b = TBlocks::from_matrix(&type_rho_chi(chi4()).rho_t().unwrap()).unwrap();
        let total: usize = b.blocks.iter().map(|x| x.len()).sum();
        assert_eq!(total, 6);
    }

    #[test]
    fn group_parsing() {
        assert_eq!("Gamma0(4)".parse::<Group>().unwrap(), Group::Gamma0(4));
        assert_eq!("SL2Z".parse::<Group>().unwrap(), Group::SL2Z);
        assert!("Gamma2(4)".parse::<Group>().is_err());
    }
}
