//! Sparse matrices, sparse vectors and exact row reduction over cyclotomic fields.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::cyclotomic::Cyclotomic;
use crate::{Error, Result};

/// Sparse vector: entries sorted by index, no explicit zeros.
pub type SparseVec = Vec<(usize, Cyclotomic)>;

/// `a + coef * b` for sparse vectors.
pub fn sv_axpy(a: &SparseVec, coef: &Cyclotomic, b: &SparseVec) -> SparseVec {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j >= b.len() || (i < a.len() && a[i].0 < b[j].0) {
            out.push(a[i].clone());
            i += 1;
        } else if i >= a.len() || b[j].0 < a[i].0 {
            out.push((b[j].0, coef * &b[j].1));
            j += 1;
        } else {
            let v = &a[i].1 + &(coef * &b[j].1);
            if !v.is_zero() {
                out.push((a[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

pub fn sv_scale(a: &SparseVec, coef: &Cyclotomic) -> SparseVec {
    if coef.is_zero() {
        return Vec::new();
    }
    a.iter().map(|(i, x)| (*i, coef * x)).collect()
}

pub fn sv_get(a: &SparseVec, i: usize) -> Option<&Cyclotomic> {
    a.binary_search_by_key(&i, |e| e.0).ok().map(|p| &a[p].1)
}

pub fn sv_from_map(m: HashMap<usize, Cyclotomic>) -> SparseVec {
    let mut v: SparseVec = m.into_iter().filter(|(_, x)| !x.is_zero()).collect();
    v.sort_by_key(|e| e.0);
    v
}

pub fn sv_from_dense(d: &[Cyclotomic]) -> SparseVec {
    d.iter()
        .enumerate()
        .filter(|(_, x)| !x.is_zero())
        .map(|(i, x)| (i, x.clone()))
        .collect()
}

pub fn sv_to_dense(a: &SparseVec, n: usize) -> Vec<Cyclotomic> {
    let mut d = vec![Cyclotomic::zero(); n];
    for (i, x) in a {
        d[*i] = x.clone();
    }
    d
}

/// Row-major sparse matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub rows: Vec<SparseVec>,
}

impl SparseMatrix {
    pub fn zero(nrows: usize, ncols: usize) -> Self {
        SparseMatrix {
            nrows,
            ncols,
            rows: vec![Vec::new(); nrows],
        }
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            nrows: n,
            ncols: n,
            rows: (0..n).map(|i| vec![(i, Cyclotomic::one())]).collect(),
        }
    }

    pub fn from_dense(d: &[Vec<Cyclotomic>]) -> Self {
        let nrows = d.len();
        let ncols = d.first().map_or(0, |r| r.len());
        SparseMatrix {
            nrows,
            ncols,
            rows: d.iter().map(|r| sv_from_dense(r)).collect(),
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<Cyclotomic>> {
        self.rows.iter().map(|r| sv_to_dense(r, self.ncols)).collect()
    }

    pub fn get(&self, i: usize, j: usize) -> Cyclotomic {
        sv_get(&self.rows[i], j).cloned().unwrap_or_default()
    }

    pub fn set(&mut self, i: usize, j: usize, v: Cyclotomic) {
        let row = &mut self.rows[i];
        match row.binary_search_by_key(&j, |e| e.0) {
            Ok(p) => {
                if v.is_zero() {
                    row.remove(p);
                } else {
                    row[p].1 = v;
                }
            }
            Err(p) => {
                if !v.is_zero() {
                    row.insert(p, (j, v));
                }
            }
        }
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.len()).sum()
    }

    pub fn mul(&self, other: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.ncols, other.nrows, "dimension mismatch in product");
        let rows = self
            .rows
            .iter()
            .map(|r| {
                if r.len() == 1 {
                    return sv_scale(&other.rows[r[0].0], &r[0].1);
                }
                let mut acc: HashMap<usize, Cyclotomic> = HashMap::new();
                for (k, a) in r {
                    for (j, b) in &other.rows[*k] {
                        let p = a * b;
                        acc.entry(*j)
                            .and_modify(|x| *x += &p)
                            .or_insert(p);
                    }
                }
                sv_from_map(acc)
            })
            .collect();
        SparseMatrix {
            nrows: self.nrows,
            ncols: other.ncols,
            rows,
        }
    }

    pub fn apply(&self, v: &SparseVec) -> SparseVec {
        // Column-oriented would be faster for very sparse v; rows are short here.
        let mut acc: HashMap<usize, Cyclotomic> = HashMap::new();
        let dense: HashMap<usize, &Cyclotomic> = v.iter().map(|(i, x)| (*i, x)).collect();
        for (i, r) in self.rows.iter().enumerate() {
            let mut s = Cyclotomic::zero();
            let mut hit = false;
            for (j, a) in r {
                if let Some(x) = dense.get(j) {
                    s += &(a * x);
                    hit = true;
                }
            }
            if hit && !s.is_zero() {
                acc.insert(i, s);
            }
        }
        sv_from_map(acc)
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut rows: Vec<SparseVec> = vec![Vec::new(); self.ncols];
        for (i, r) in self.rows.iter().enumerate() {
            for (j, x) in r {
                rows[*j].push((i, x.clone()));
            }
        }
        SparseMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            rows,
        }
    }

    /// Kronecker product; index of (i, k) is `i * other.nrows + k`.
    pub fn kron(&self, other: &SparseMatrix) -> SparseMatrix {
        let mut rows = Vec::with_capacity(self.nrows * other.nrows);
        for ra in &self.rows {
            for rb in &other.rows {
                let mut row = Vec::with_capacity(ra.len() * rb.len());
                for (ja, a) in ra {
                    for (jb, b) in rb {
                        row.push((ja * other.ncols + jb, a * b));
                    }
                }
                rows.push(row);
            }
        }
        SparseMatrix {
            nrows: self.nrows * other.nrows,
            ncols: self.ncols * other.ncols,
            rows,
        }
    }

    pub fn pow(&self, mut e: u64) -> SparseMatrix {
        let mut base = self.clone();
        let mut acc = SparseMatrix::identity(self.nrows);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn is_identity(&self) -> bool {
        self.nrows == self.ncols
            && self
                .rows
                .iter()
                .enumerate()
                .all(|(i, r)| r.len() == 1 && r[0].0 == i && r[0].1.is_one())
    }

    pub fn add(&self, other: &SparseMatrix) -> SparseMatrix {
        let one = Cyclotomic::one();
        SparseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            rows: self
                .rows
                .iter()
                .zip(&other.rows)
                .map(|(a, b)| sv_axpy(a, &one, b))
                .collect(),
        }
    }

    pub fn scale(&self, c: &Cyclotomic) -> SparseMatrix {
        SparseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            rows: self.rows.iter().map(|r| sv_scale(r, c)).collect(),
        }
    }

    /// `self - c * I`.
    pub fn minus_scalar(&self, c: &Cyclotomic) -> SparseMatrix {
        let mut m = self.clone();
        for i in 0..self.nrows.min(self.ncols) {
            let v = &m.get(i, i) - c;
            m.set(i, i, v);
        }
        m
    }

    pub fn trace(&self) -> Cyclotomic {
        let mut t = Cyclotomic::zero();
        for i in 0..self.nrows.min(self.ncols) {
            if let Some(x) = sv_get(&self.rows[i], i) {
                t += x;
            }
        }
        t
    }

    /// Largest cyclotomic order among the entries.
    pub fn orders(&self) -> u64 {
        self.rows
            .iter()
            .flat_map(|r| r.iter().map(|(_, x)| x.order()))
            .fold(1, crate::arith::lcm)
    }
}

/// Incrementally maintained reduced row echelon form of a sparse row space.
///
/// Every stored row has a pivot entry equal to one and no entries in other
/// pivot columns. Pivot columns are chosen to be the entry of the new row that
/// occurs in the fewest stored rows, which keeps monomial systems sparse.
#[derive(Clone, Debug, Default)]
pub struct RowSpace {
    rows: HashMap<usize, SparseVec>,
    occurs: HashMap<usize, HashSet<usize>>,
}

impl RowSpace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn pivots(&self) -> Vec<usize> {
        let mut p: Vec<usize> = self.rows.keys().copied().collect();
        p.sort_unstable();
        p
    }

    /// Residual of `v` after eliminating all pivot columns.
    pub fn reduce(&self, v: &SparseVec) -> SparseVec {
        if !v.iter().any(|(c, _)| self.rows.contains_key(c)) {
            return v.clone();
        }
        let mut acc: HashMap<usize, Cyclotomic> = HashMap::new();
        for (c, x) in v {
            if let Some(row) = self.rows.get(c) {
                for (j, y) in row {
                    if j == c {
                        continue;
                    }
                    let t = -(x * y);
                    acc.entry(*j).and_modify(|e| *e += &t).or_insert(t);
                }
            } else {
                acc.entry(*c).and_modify(|e| *e += x).or_insert_with(|| x.clone());
            }
        }
        sv_from_map(acc)
    }

    pub fn contains(&self, v: &SparseVec) -> bool {
        self.reduce(v).is_empty()
    }

    /// Adds `v`; returns false if it was already in the span.
    pub fn insert(&mut self, v: &SparseVec) -> bool {
        let r = self.reduce(v);
        if r.is_empty() {
            return false;
        }
        let count = |c: &usize| self.occurs.get(c).map_or(0, |s| s.len());
        let p = r
            .iter()
            .map(|(c, _)| *c)
            .min_by(|a, b| count(a).cmp(&count(b)).then(a.cmp(b)))
            .unwrap();
        let inv = sv_get(&r, p).unwrap().inv().expect("nonzero pivot");
        let r = sv_scale(&r, &inv);
        if let Some(users) = self.occurs.remove(&p) {
            let mut users: Vec<usize> = users.into_iter().collect();
            users.sort_unstable();
            for q in users {
                let row = self.rows.get(&q).unwrap();
                let f = -sv_get(row, p).unwrap().clone();
                let new_row = sv_axpy(row, &f, &r);
                for (c, _) in &r {
                    if *c == p {
                        continue;
                    }
                    let set = self.occurs.entry(*c).or_default();
                    if sv_get(&new_row, *c).is_some() {
                        set.insert(q);
                    } else {
                        set.remove(&q);
                    }
                }
                self.rows.insert(q, new_row);
            }
        }
        for (c, _) in &r {
            if *c != p {
                self.occurs.entry(*c).or_default().insert(p);
            }
        }
        self.rows.insert(p, r);
        true
    }

    /// Basis of the orthogonal complement in the coordinate sense: all x with
    /// row . x = 0 for every stored row. One vector per free column.
    pub fn kernel(&self, ncols: usize) -> Vec<SparseVec> {
        let mut out = Vec::new();
        for f in 0..ncols {
            if self.rows.contains_key(&f) {
                continue;
            }
            let mut v: SparseVec = vec![(f, Cyclotomic::one())];
            if let Some(users) = self.occurs.get(&f) {
                for p in users {
                    let a = sv_get(&self.rows[p], f).unwrap();
                    v.push((*p, -a));
                }
            }
            v.sort_by_key(|e| e.0);
            out.push(v);
        }
        out
    }
}

/// Rank of a family of sparse vectors.
pub fn rank_of(vs: &[SparseVec]) -> usize {
    let mut rs = RowSpace::new();
    for v in vs {
        rs.insert(v);
    }
    rs.rank()
}

/// Whether two families span the same space.
pub fn same_span(a: &[SparseVec], b: &[SparseVec]) -> bool {
    let mut ra = RowSpace::new();
    for v in a {
        ra.insert(v);
    }
    let mut rb = RowSpace::new();
    for v in b {
        rb.insert(v);
    }
    ra.rank() == rb.rank() && b.iter().all(|v| ra.contains(v))
}

/// Dense row echelon form with tagged linear combinations.
///
/// Each row carries a map `tag -> coefficient` that records which input rows
/// it is made of.
#[derive(Clone, Debug, Default)]
pub struct TaggedRref {
    pub rows: Vec<Vec<Cyclotomic>>,
    pub combos: Vec<BTreeMap<usize, Cyclotomic>>,
    pub pivots: Vec<usize>,
}

impl TaggedRref {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Adds a row; returns true if it increased the rank. Keeps the form reduced.
    pub fn insert(&mut self, mut row: Vec<Cyclotomic>, mut combo: BTreeMap<usize, Cyclotomic>) -> bool {
        for (k, &p) in self.pivots.iter().enumerate() {
            if row[p].is_zero() {
                continue;
            }
            let f = row[p].clone();
            for (x, y) in row.iter_mut().zip(&self.rows[k]) {
                if !y.is_zero() {
                    *x -= &(&f * y);
                }
            }
            combo_axpy(&mut combo, &-&f, &self.combos[k]);
        }
        let Some(p) = row.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let inv = row[p].inv().expect("nonzero pivot");
        for x in row.iter_mut() {
            if !x.is_zero() {
                *x = &*x * &inv;
            }
        }
        for v in combo.values_mut() {
            *v = &*v * &inv;
        }
        for k in 0..self.rows.len() {
            if self.rows[k][p].is_zero() {
                continue;
            }
            let f = self.rows[k][p].clone();
            for (x, y) in self.rows[k].iter_mut().zip(&row) {
                if !y.is_zero() {
                    *x -= &(&f * y);
                }
            }
            let c = combo.clone();
            combo_axpy(&mut self.combos[k], &-&f, &c);
        }
        // keep rows sorted by pivot
        let pos = self.pivots.partition_point(|&q| q < p);
        self.pivots.insert(pos, p);
        self.rows.insert(pos, row);
        self.combos.insert(pos, combo);
        true
    }
}

pub fn combo_axpy(
    a: &mut BTreeMap<usize, Cyclotomic>,
    coef: &Cyclotomic,
    b: &BTreeMap<usize, Cyclotomic>,
) {
    for (k, v) in b {
        let t = coef * v;
        let e = a.entry(*k).or_insert_with(Cyclotomic::zero);
        *e += &t;
        if e.is_zero() {
            a.remove(k);
        }
    }
}

/// Inverse of a small dense matrix.
pub fn dense_inverse(m: &[Vec<Cyclotomic>]) -> Result<Vec<Vec<Cyclotomic>>> {
    let n = m.len();
    let mut a: Vec<Vec<Cyclotomic>> = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| {
                if i == j {
                    Cyclotomic::one()
                } else {
                    Cyclotomic::zero()
                }
            }));
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n)
            .find(|&r| !a[r][c].is_zero())
            .ok_or_else(|| Error::Invalid("singular matrix".into()))?;
        a.swap(c, p);
        let inv = a[c][c].inv()?;
        for x in a[c].iter_mut() {
            *x = &*x * &inv;
        }
        let pr = a[c].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r == c || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (x, y) in row.iter_mut().zip(&pr) {
                if !y.is_zero() {
                    *x -= &(&f * y);
                }
            }
        }
    }
    Ok(a.into_iter().map(|r| r[n..].to_vec()).collect())
}
