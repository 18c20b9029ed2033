//! Bases of spaces of vector-valued modular forms M_k(rho).
//!
//! Invariant vectors of `rho_N^v (x) rho` are sent to sums of single
//! Eisenstein series of weight k and level N = level(rho); invariants of
//! `rho_N0^v (x) rho_N0^v (x) rho` to sums of products of series of weights l
//! and k - l and level N0. The truncated expansions are row reduced; every
//! basis element keeps the formal combination of Eisenstein products it came
//! from, so it can be re-expanded to any precision.
//!
//! Rows are laid out coordinate-major then exponent: for each kept
//! coordinate i (in increasing order) the coefficients of q^{j/N} for
//! j = 0, 1, ... below the precision.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{format_rational, gcd, lcm, parse_rational, rational};
use crate::artypes::{Group, TBlocks, TypeRef};
use crate::cyclotomic::Cyclotomic;
use crate::eisenstein::{coset_index, eis_fourier, EisensteinIndex};
use crate::fourier::{deflate, inflate, FourierExpansion, VectorFourierExpansion};
use crate::invariants::{
    ambient_triple, invariants_dirichlet_blocks, invariants_double, invariants_triple, triple_batches,
    InvariantBasis, Method, Shape,
};
use crate::linalg::{SparseVec, TaggedRref};
use crate::modgroup::{cosets_gamma1, CosetTable, SL2};
use crate::typespec::TypeSpec;
use crate::{Error, Result};

pub const SCHEMA: &str = "vvmf/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComputationConfig {
    #[serde(rename = "type")]
    pub spec: TypeSpec,
    pub k: u32,
    /// Split weights; empty means all of 1..=k/2.
    pub ls: Vec<u32>,
    /// Defaults to the level of the type.
    #[serde(rename = "N0")]
    pub n0: Option<u64>,
    pub precision: Option<String>,
    pub expected_dim: Option<usize>,
    pub method: Method,
    pub dirichlet_blocks: bool,
    pub deflation: bool,
    /// Largest multiplier m tried in N0 <- m * N0 when expected_dim is not reached.
    pub max_n0_multiplier: u64,
}

impl ComputationConfig {
    pub fn new(spec: TypeSpec, k: u32) -> Self {
        ComputationConfig {
            spec,
            k,
            ls: Vec::new(),
            n0: None,
            precision: None,
            expected_dim: None,
            method: Method::Auto,
            dirichlet_blocks: false,
            deflation: true,
            max_n0_multiplier: 3,
        }
    }

    fn split_weights(&self) -> Result<Vec<u32>> {
        let ls: Vec<u32> = if self.ls.is_empty() {
            (1..=self.k / 2).collect()
        } else {
            self.ls.clone()
        };
        for &l in &ls {
            if l == 0 || l >= self.k {
                return Err(Error::Invalid(format!("split weight l = {} outside 1..={}", l, self.k - 1)));
            }
        }
        Ok(ls)
    }
}

/// Smallest P in (1/N)Z with P > k/12.
pub fn sturm_precision(k: u32, n: u64) -> BigRational {
    let num = (k as u64 * n) / 12 + 1;
    BigRational::new(BigInt::from(num), BigInt::from(n))
}

/// c * prod(factors) placed in one coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolicTerm {
    pub coeff: Cyclotomic,
    pub factors: Vec<EisensteinIndex>,
    pub component: usize,
}

/// A vector of linear combinations of Eisenstein series and their products.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SymbolicExpression {
    pub terms: Vec<SymbolicTerm>,
}

type TermKey = (Vec<EisensteinIndex>, usize);

impl SymbolicExpression {
    fn from_map(m: BTreeMap<TermKey, Cyclotomic>) -> Self {
        SymbolicExpression {
            terms: m
                .into_iter()
                .filter(|(_, c)| !c.is_zero())
                .map(|((factors, component), coeff)| SymbolicTerm {
                    coeff,
                    factors,
                    component,
                })
                .collect(),
        }
    }

    fn accumulate(&self, coef: &Cyclotomic, into: &mut BTreeMap<TermKey, Cyclotomic>) {
        for t in &self.terms {
            let v = coef * &t.coeff;
            into.entry((t.factors.clone(), t.component))
                .and_modify(|e| *e += &v)
                .or_insert(v);
        }
    }

    /// Expansion of every coordinate to `precision`, over denominator `den`.
    pub fn expand(&self, dim: usize, den: u64, precision: &BigRational) -> Result<VectorFourierExpansion> {
        let mut groups: BTreeMap<&[EisensteinIndex], Vec<(usize, &Cyclotomic)>> = BTreeMap::new();
        for t in &self.terms {
            if t.component >= dim {
                return Err(Error::Invalid(format!("term for coordinate {} of a {}-dimensional type", t.component, dim)));
            }
            groups.entry(&t.factors).or_default().push((t.component, &t.coeff));
        }
        let work: Vec<(&[EisensteinIndex], Vec<(usize, &Cyclotomic)>)> = groups.into_iter().collect();
        let partial: Vec<Result<Vec<BTreeMap<i64, Cyclotomic>>>> = work
            .par_iter()
            .map(|(factors, uses)| {
                let series = product_series(factors, precision)?;
                let mut acc = vec![BTreeMap::new(); dim];
                for (i, c) in uses {
                    add_scaled(&mut acc[*i], &series, c);
                }
                Ok(acc)
            })
            .collect();
        let mut acc: Vec<BTreeMap<(i64, u64), Cyclotomic>> = vec![BTreeMap::new(); dim];
        for (p, (factors, _)) in partial.into_iter().zip(&work) {
            let d = factors.iter().map(|f| f.n).fold(1, lcm);
            for (i, m) in p?.into_iter().enumerate() {
                for (j, c) in m {
                    acc[i].entry((j, d)).and_modify(|e| *e += &c).or_insert(c);
                }
            }
        }
        let mut components = Vec::with_capacity(dim);
        for m in acc {
            components.push(collect_series(m, den, precision)?);
        }
        Ok(VectorFourierExpansion { components })
    }
}

fn add_scaled(acc: &mut BTreeMap<i64, Cyclotomic>, f: &FourierExpansion, c: &Cyclotomic) {
    for (j, x) in &f.terms {
        let v = c * x;
        acc.entry(*j).and_modify(|e| *e += &v).or_insert(v);
    }
}

/// Gathers terms keyed by (numerator, denominator) into a series over `den`.
fn collect_series(m: BTreeMap<(i64, u64), Cyclotomic>, den: u64, precision: &BigRational) -> Result<FourierExpansion> {
    let mut merged: BTreeMap<(i64, u64), Cyclotomic> = BTreeMap::new();
    for ((j, d), c) in m {
        let g = gcd(j.unsigned_abs(), d).max(1);
        merged
            .entry((j / g as i64, d / g))
            .and_modify(|e| *e += &c)
            .or_insert(c);
    }
    let mut f = FourierExpansion::zero(den, precision.clone());
    for ((j, d), c) in merged {
        if c.is_zero() {
            continue;
        }
        if !den.is_multiple_of(d) {
            return Err(Error::Validation(format!(
                "coefficient at exponent {}/{} is not in (1/{})Z",
                j, d, den
            )));
        }
        f.add_term(j * (den / d) as i64, &c);
    }
    Ok(f)
}

fn product_series(factors: &[EisensteinIndex], precision: &BigRational) -> Result<FourierExpansion> {
    let mut it = factors.iter();
    let first = it
        .next()
        .ok_or_else(|| Error::Invalid("empty Eisenstein product".into()))?;
    let mut acc = (*eis_fourier(first, precision)?).clone();
    for f in it {
        acc = acc.mul(&*eis_fourier(f, precision)?);
    }
    Ok(acc)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Completeness {
    Yes,
    No,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchRecord {
    pub label: String,
    pub size: usize,
    pub rank_after: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub k: u32,
    pub level: u64,
    #[serde(rename = "N0")]
    pub n0: u64,
    #[serde(rename = "N0_tried")]
    pub n0_tried: Vec<u64>,
    pub ls: Vec<u32>,
    pub precision: String,
    pub rank: usize,
    pub expected_dim: Option<usize>,
    pub complete: Completeness,
    pub method: Method,
    pub dirichlet_blocks: bool,
    pub deflation: bool,
    /// Kept coordinates of V(rho), in row order.
    pub retained: Vec<usize>,
    pub row_width: usize,
    /// Lcm of the cyclotomic orders in the output.
    pub field_order: u64,
    pub batches: Vec<BatchRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisElement {
    pub deflated: Vec<FourierExpansion>,
    pub expansion: VectorFourierExpansion,
    pub symbolic: SymbolicExpression,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisResult {
    pub schema: String,
    #[serde(rename = "type")]
    pub spec: TypeSpec,
    pub metadata: Metadata,
    pub elements: Vec<BasisElement>,
}

impl BasisResult {
    pub fn precision(&self) -> Result<BigRational> {
        parse_rational(&self.metadata.precision)
            .ok_or_else(|| Error::Invalid(format!("bad precision '{}'", self.metadata.precision)))
    }

    pub fn rank(&self) -> usize {
        self.elements.len()
    }
}

/// One invariant ready to be mapped to Eisenstein data.
struct Job<'a> {
    vector: &'a SparseVec,
    shape: Shape,
    /// Weights of the factors: [k] or [l, k - l].
    weights: Vec<u32>,
}

struct Context {
    rho: TypeRef,
    level: u64,
    precision: BigRational,
    bound: usize,
    retained: Vec<usize>,
    position: HashMap<usize, usize>,
    tables: Mutex<HashMap<u64, Arc<CosetTable>>>,
}


impl Context {
    fn table(&self, n: u64) -> Arc<CosetTable> {
        self.tables
            .lock()
            .unwrap()
            .entry(n)
            .or_insert_with(|| Arc::new(cosets_gamma1(n)))
            .clone()
    }

    fn symbolic(&self, job: &Job) -> SymbolicExpression {
        let dim = self.rho.dim;
        let mut map: BTreeMap<TermKey, Cyclotomic> = BTreeMap::new();
        match job.shape {
            Shape::Double { n } => {
                let table = self.table(n);
                for (idx, c) in job.vector {
                    let x = idx / dim;
                    let f = coset_index(job.weights[0], n, &table.reps[x]);
                    map.insert((vec![f], idx % dim), c.clone());
                }
            }
            Shape::Triple { n0 } => {
                let table = self.table(n0);
                let size = table.len();
                for (idx, c) in job.vector {
                    let (x, y) = (idx / dim / size, (idx / dim) % size);
                    let fx = coset_index(job.weights[0], n0, &table.reps[x]);
                    let fy = coset_index(job.weights[1], n0, &table.reps[y]);
                    map.insert((vec![fx, fy], idx % dim), c.clone());
                }
            }
            Shape::Plain => {}
        }
        SymbolicExpression::from_map(map)
    }

    /// Expansions of the kept coordinates only, flattened into a row.
    fn row(&self, job: &Job) -> Result<Vec<Cyclotomic>> {
        let dim = self.rho.dim;
        let p = &self.precision;
        let mut acc: Vec<BTreeMap<(i64, u64), Cyclotomic>> = vec![BTreeMap::new(); self.retained.len()];
        match job.shape {
            Shape::Double { n } => {
                let table = self.table(n);
                for (idx, c) in job.vector {
                    let Some(&pos) = self.position.get(&(idx % dim)) else {
                        continue;
                    };
                    let f = eis_fourier(&coset_index(job.weights[0], n, &table.reps[idx / dim]), p)?;
                    for (j, x) in &f.terms {
                        let v = c * x;
                        acc[pos].entry((*j, n)).and_modify(|e| *e += &v).or_insert(v);
                    }
                }
            }
            Shape::Triple { n0 } => {
                let table = self.table(n0);
                let size = table.len();
                // sum_x G_l(x) * (sum_y w(x, y) G_{k-l}(y))
                let mut inner: BTreeMap<(usize, usize), BTreeMap<i64, Cyclotomic>> = BTreeMap::new();
                for (idx, c) in job.vector {
                    let Some(&pos) = self.position.get(&(idx % dim)) else {
                        continue;
                    };
                    let (x, y) = (idx / dim / size, (idx / dim) % size);
                    let g = eis_fourier(&coset_index(job.weights[1], n0, &table.reps[y]), p)?;
                    add_scaled(inner.entry((x, pos)).or_default(), &g, c);
                }
                for ((x, pos), terms) in inner {
                    let h = FourierExpansion::from_terms(n0, p.clone(), terms);
                    if h.is_zero() {
                        continue;
                    }
                    let g = eis_fourier(&coset_index(job.weights[0], n0, &table.reps[x]), p)?;
                    for (j, v) in g.mul(&h).terms {
                        acc[pos].entry((j, n0)).and_modify(|e| *e += &v).or_insert(v);
                    }
                }
            }
            Shape::Plain => return Err(Error::Invalid("plain invariants have no Eisenstein image".into())),
        }
        let mut row = Vec::with_capacity(self.retained.len() * self.bound);
        for m in acc {
            let f = collect_series(m, self.level, p)?;
            for j in 0..self.bound {
                row.push(f.coefficient(j as i64));
            }
        }
        Ok(row)
    }

    fn element(&self, row: &[Cyclotomic], symbolic: SymbolicExpression, blocks: &TBlocks, deflation: bool) -> Result<BasisElement> {
        let series: Vec<FourierExpansion> = row
            .chunks(self.bound.max(1))
            .take(self.retained.len())
            .map(|chunk| {
                FourierExpansion::from_terms(
                    self.level,
                    self.precision.clone(),
                    chunk.iter().enumerate().map(|(j, c)| (j as i64, c.clone())),
                )
            })
            .collect();
        let series = if self.bound == 0 {
            vec![FourierExpansion::zero(self.level, self.precision.clone()); self.retained.len()]
        } else {
            series
        };
        let expansion = if deflation {
            inflate(&series, blocks, self.rho.dim)?
        } else {
            VectorFourierExpansion { components: series }
        };
        let deflated = deflate(&expansion, blocks);
        Ok(BasisElement {
            deflated,
            expansion,
            symbolic,
        })
    }
}

fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    match crate::thread_cap() {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        None => f(),
    }
}

fn batches_for(rho: &TypeRef, cfg: &ComputationConfig, n0: u64) -> Result<(Vec<InvariantBasis>, Vec<InvariantBasis>)> {
    let level = rho.level;
    if cfg.dirichlet_blocks {
        let blocks = invariants_dirichlet_blocks(rho, level, n0)?;
        let (double, triple) = blocks
            .into_iter()
            .partition(|b| matches!(b.shape, Shape::Double { .. }));
        return Ok((double, triple));
    }
    let double = vec![invariants_double(rho, level, cfg.method)?];
    let amb_dim = ambient_triple(rho, n0)?.dim;
    let triple = match cfg.method.resolve(amb_dim) {
        Method::Generic => vec![invariants_triple(rho, level, n0, Method::Generic)?],
        _ => triple_batches(rho, level, n0)?,
    };
    Ok((double, triple))
}

/// Runs the basis computation described by `cfg`.
pub fn compute_basis(cfg: &ComputationConfig) -> Result<BasisResult> {
    with_pool(|| compute_basis_inner(cfg))
}

fn compute_basis_inner(cfg: &ComputationConfig) -> Result<BasisResult> {
    let rho = cfg.spec.build()?;
    if rho.group != Group::SL2Z {
        return Err(Error::Invalid(format!("modular forms need a type on SL2(Z), got {}", rho.group)));
    }
    if cfg.k < 2 {
        return Err(Error::Invalid(format!("weight must be at least 2, got {}", cfg.k)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let report = rho.validate(&mut rng, 20)?;
    if !report.passed {
        return Err(Error::Validation(report.witness.unwrap_or_else(|| "type is not valid".into())));
    }
    let level = rho.level;
    let ls = cfg.split_weights()?;
    let base_n0 = cfg.n0.unwrap_or(level);
    if base_n0 == 0 || !base_n0.is_multiple_of(level) {
        return Err(Error::Level(format!("level {} does not divide N0 = {}", level, base_n0)));
    }
    let mut precision = sturm_precision(cfg.k, level);
    if let Some(s) = &cfg.precision {
        let p = parse_rational(s).ok_or_else(|| Error::Invalid(format!("bad precision '{}'", s)))?;
        // round up to the 1/level grid
        let grid = (p * BigRational::from_integer(BigInt::from(level))).ceil()
            / BigRational::from_integer(BigInt::from(level));
        if grid > precision {
            precision = grid;
        }
    }
    let bound = (&precision * BigRational::from_integer(BigInt::from(level)))
        .to_integer()
        .to_usize()
        .ok_or_else(|| Error::Invalid("precision too large".into()))?;
    let blocks = TBlocks::from_matrix(&*rho.rho_t()?)?;
    let retained: Vec<usize> = if cfg.deflation {
        blocks.retained()
    } else {
        (0..rho.dim).collect()
    };
    let position = retained.iter().enumerate().map(|(p, i)| (*i, p)).collect();
    let ctx = Context {
        rho: rho.clone(),
        level,
        precision: precision.clone(),
        bound,
        retained: retained.clone(),
        position,
        tables: Mutex::new(HashMap::new()),
    };

    let mut rref = TaggedRref::new();
    let mut inputs: Vec<SymbolicExpression> = Vec::new();
    let mut records = Vec::new();
    let mut tried = Vec::new();
    let mut used_n0 = base_n0;
    let target = cfg.expected_dim;
    let done = |r: &TaggedRref| target.is_some_and(|t| r.rank() >= t);

    let multipliers = if target.is_some() { cfg.max_n0_multiplier.max(1) } else { 1 };
    'outer: for mult in 1..=multipliers {
        let n0 = base_n0 * mult;
        tried.push(n0);
        used_n0 = n0;
        let (double, triple) = batches_for(&rho, cfg, n0)?;
        let mut plan: Vec<(String, &InvariantBasis, Vec<u32>)> = Vec::new();
        if mult == 1 {
            for b in &double {
                plan.push((format!("weight {}: {}", cfg.k, b.label), b, vec![cfg.k]));
            }
        }
        for &l in &ls {
            for b in &triple {
                plan.push((format!("N0 = {}, l = {}: {}", n0, l, b.label), b, vec![l, cfg.k - l]));
            }
        }
        for (label, batch, weights) in plan {
            if done(&rref) {
                break 'outer;
            }
            let jobs: Vec<Job> = batch
                .vectors
                .iter()
                .map(|v| Job {
                    vector: v,
                    shape: batch.shape,
                    weights: weights.clone(),
                })
                .collect();
            let rows: Vec<Result<(Vec<Cyclotomic>, SymbolicExpression)>> = jobs
                .par_iter()
                .map(|job| Ok((ctx.row(job)?, ctx.symbolic(job))))
                .collect();
            for r in rows {
                let (row, sym) = r?;
                if done(&rref) {
                    break;
                }
                let id = inputs.len();
                inputs.push(sym);
                let mut combo = BTreeMap::new();
                combo.insert(id, Cyclotomic::one());
                rref.insert(row, combo);
            }
            records.push(BatchRecord {
                label,
                size: batch.len(),
                rank_after: rref.rank(),
            });
        }
        if target.is_none() || done(&rref) {
            break;
        }
    }

    let complete = match target {
        None => Completeness::Unknown,
        Some(t) if rref.rank() >= t => Completeness::Yes,
        Some(_) => Completeness::No,
    };

    let rho_t = rho.rho_t()?;
    let mut elements = Vec::with_capacity(rref.rank());
    for (row, combo) in rref.rows.iter().zip(&rref.combos) {
        let mut map = BTreeMap::new();
        for (id, c) in combo {
            inputs[*id].accumulate(c, &mut map);
        }
        let el = ctx.element(row, SymbolicExpression::from_map(map), &blocks, cfg.deflation)?;
        if !el.expansion.is_t_invariant(&rho_t) {
            return Err(Error::Validation("an output expansion is not T-invariant".into()));
        }
        elements.push(el);
    }
    let mut field_order = rho.field_order()?;
    for el in &elements {
        for c in &el.expansion.components {
            field_order = lcm(field_order, c.max_order());
        }
        for t in &el.symbolic.terms {
            field_order = lcm(field_order, t.coeff.order());
        }
    }

    Ok(BasisResult {
        schema: SCHEMA.into(),
        spec: cfg.spec.clone(),
        metadata: Metadata {
            k: cfg.k,
            level,
            n0: used_n0,
            n0_tried: tried,
            ls,
            precision: format_rational(&precision),
            rank: elements.len(),
            expected_dim: target,
            complete,
            method: cfg.method,
            dirichlet_blocks: cfg.dirichlet_blocks,
            deflation: cfg.deflation,
            row_width: retained.len() * bound,
            retained,
            field_order,
            batches: records,
        },
        elements,
    })
}

/// Re-expands every element to precision `p2` from its symbolic expression.
/// The stored coefficients must be reproduced exactly.
pub fn extend_precision(result: &BasisResult, p2: &BigRational) -> Result<BasisResult> {
    let p = result.precision()?;
    if *p2 < p {
        return Err(Error::Invalid(format!(
            "new precision {} is below the stored precision {}",
            format_rational(p2),
            format_rational(&p)
        )));
    }
    let rho = result.spec.build()?;
    let blocks = TBlocks::from_matrix(&*rho.rho_t()?)?;
    let level = result.metadata.level;
    let mut out = result.clone();
    with_pool(|| -> Result<()> {
        for el in out.elements.iter_mut() {
            let full = el.symbolic.expand(rho.dim, level, p2)?;
            if full.truncate(&p) != el.expansion {
                return Err(Error::Validation(
                    "symbolic expression does not reproduce the stored expansion".into(),
                ));
            }
            el.deflated = deflate(&full, &blocks);
            el.expansion = full;
        }
        Ok(())
    })?;
    out.metadata.precision = format_rational(p2);
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModularityFailure {
    pub element: usize,
    pub gamma: String,
    pub tau: [f64; 2],
    pub residual: f64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModularityReport {
    pub schema: String,
    pub trials: usize,
    pub tolerance: f64,
    pub evaluation_precision: String,
    pub max_residual: f64,
    pub passed: bool,
    pub failures: Vec<ModularityFailure>,
}

/// Precision used for numeric evaluation.
const CHECK_PRECISION: i64 = 8;

fn random_gamma(rng: &mut ChaCha8Rng, trial: usize) -> SL2 {
    let m = BigInt::from(rng.gen_range(-3i64..=3));
    let n = BigInt::from(rng.gen_range(-3i64..=3));
    let g = match trial % 4 {
        0 => SL2::s(),
        1 => SL2::t_pow(&m),
        // T^m S T^n = (m, mn - 1; 1, n)
        _ => SL2::t_pow(&m).mul(&SL2::s()).mul(&SL2::t_pow(&n)),
    };
    if rng.gen_bool(0.5) {
        g.neg()
    } else {
        g
    }
}

fn moebius(g: &SL2, tau: Complex64) -> (Complex64, Complex64) {
    let f = |x: &BigInt| x.to_f64().unwrap_or(f64::NAN);
    let j = f(&g.c) * tau + f(&g.d);
    ((f(&g.a) * tau + f(&g.b)) / j, j)
}

/// Numeric check of f(gamma tau) = (c tau + d)^k rho(gamma) f(tau) on random
/// gamma and tau with Im(tau), Im(gamma tau) around 1. Series are re-expanded
/// from their symbolic expressions; the residual is measured relative to
/// max(1, |f(tau)|) and compared with `tol` plus a bound for the tail.
pub fn modularity_check(result: &BasisResult, trials: usize, tol: f64, seed: u64) -> Result<ModularityReport> {
    let rho = result.spec.build()?;
    let k = result.metadata.k as i32;
    let p = result.precision()?;
    let p_check = p.clone().max(rational(CHECK_PRECISION, 1));
    let level = result.metadata.level;
    let mut failures = Vec::new();
    let mut max_residual: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut expansions = Vec::new();
    for (e, el) in result.elements.iter().enumerate() {
        let full = with_pool(|| el.symbolic.expand(rho.dim, level, &p_check))?;
        if full.truncate(&p) != el.expansion {
            failures.push(ModularityFailure {
                element: e,
                gamma: "-".into(),
                tau: [0.0, 0.0],
                residual: f64::INFINITY,
                reason: "stored expansion differs from its symbolic expression".into(),
            });
            max_residual = f64::INFINITY;
        }
        expansions.push(full);
    }
    let p_f = p_check.to_f64().unwrap_or(CHECK_PRECISION as f64);
    for trial in 0..trials {
        let g = random_gamma(&mut rng, trial);
        let y = rng.gen_range(0.8..1.25);
        let tau = if g.c == BigInt::from(0) {
            Complex64::new(rng.gen_range(-0.5..0.5), y)
        } else {
            let c = g.c.to_f64().unwrap();
            let d = g.d.to_f64().unwrap();
            Complex64::new(-d / c + rng.gen_range(-0.1..0.1), y / c.abs())
        };
        let (gt, j) = moebius(&g, tau);
        let rho_inv = rho.evaluate(&g.inverse())?;
        let y_min = tau.im.min(gt.im);
        for (e, f) in expansions.iter().enumerate() {
            let at_tau = f.numeric_eval(tau);
            let at_gt = f.numeric_eval(gt);
            let scale = j.powi(-k);
            let mut res2 = 0.0;
            let mut norm2 = 0.0;
            for (i, row) in rho_inv.rows.iter().enumerate() {
                let mut v = Complex64::new(0.0, 0.0);
                for (col, x) in row {
                    v += x.numeric_eval() * at_gt[*col];
                }
                let r = scale * v - at_tau[i];
                res2 += r.norm_sqr();
                norm2 += at_tau[i].norm_sqr();
            }
            let residual = res2.sqrt() / norm2.sqrt().max(1.0);
            let maxc = f.components.iter().map(|c| c.max_abs_coefficient()).fold(0.0, f64::max);
            let tail = maxc * (-2.0 * std::f64::consts::PI * p_f * y_min).exp() * (1.0 + p_f).powi(k) * 4.0;
            max_residual = max_residual.max(residual);
            if !(residual < tol + tail) {
                failures.push(ModularityFailure {
                    element: e,
                    gamma: format!("{}", g),
                    tau: [tau.re, tau.im],
                    residual,
                    reason: format!("residual above {:e}", tol + tail),
                });
            }
        }
    }
    failures.truncate(20);
    Ok(ModularityReport {
        schema: SCHEMA.into(),
        trials,
        tolerance: tol,
        evaluation_precision: format_rational(&p_check),
        max_residual,
        passed: failures.is_empty(),
        failures,
    })
}

/// Whether the rows are in reduced row echelon form in the flattened order.
pub fn is_rref(result: &BasisResult) -> bool {
    let bound = match result.elements.first().and_then(|e| e.deflated.first()) {
        Some(f) => f.bound() as usize,
        None => return true,
    };
    let rows: Vec<Vec<Cyclotomic>> = result
        .elements
        .iter()
        .map(|e| {
            let comps: Vec<&FourierExpansion> = result
                .metadata
                .retained
                .iter()
                .map(|&i| &e.expansion.components[i])
                .collect();
            comps
                .iter()
                .flat_map(|f| (0..bound).map(|j| f.coefficient(j as i64)))
                .collect()
        })
        .collect();
    let mut last = None;
    for (r, row) in rows.iter().enumerate() {
        let Some(p) = row.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        if !row[p].is_one() || last.is_some_and(|q| q >= p) {
            return false;
        }
        for (s, other) in rows.iter().enumerate() {
            if s != r && !other[p].is_zero() {
                return false;
            }
        }
        last = Some(p);
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::divisors;

    fn trivial() -> TypeSpec {
        TypeSpec::Trivial { group: None }
    }

    fn sigma(k: u32, n: u64) -> i64 {
        divisors(n).iter().map(|d| (*d as i64).pow(k)).sum()
    }

    #[test]
    fn sturm_examples() {
        assert_eq!(sturm_precision(12, 1), rational(2, 1));
        assert_eq!(sturm_precision(4, 1), rational(1, 1));
        assert_eq!(sturm_precision(4, 3), rational(2, 3));
    }

    #[test]
    fn e4() {
        let r = compute_basis(&ComputationConfig::new(trivial(), 4)).unwrap();
        assert_eq!(r.rank(), 1);
        let ext = extend_precision(&r, &rational(10, 1)).unwrap();
        let f = &ext.elements[0].expansion.components[0];
        assert_eq!(f.coefficient(0), Cyclotomic::one());
        for n in 1..10 {
            assert_eq!(f.coefficient(n), Cyclotomic::from_int(240 * sigma(3, n as u64)));
        }
        assert_eq!(ext.elements[0].expansion.truncate(&rational(1, 1)), r.elements[0].expansion);
    }

    #[test]
    fn weight_two_is_empty() {
        let r = compute_basis(&ComputationConfig::new(trivial(), 2)).unwrap();
        assert_eq!(r.rank(), 0);
        assert_eq!(r.metadata.complete, Completeness::Unknown);
    }

    #[test]
    fn delta() {
        let r = compute_basis(&ComputationConfig::new(trivial(), 12)).unwrap();
        assert_eq!(r.rank(), 2);
        assert!(is_rref(&r));
        let ext = extend_precision(&r, &rational(6, 1)).unwrap();
        let cusp = &ext.elements[1].expansion.components[0];
        let want = [0, 1, -24, 252, -1472, 4830];
        for (n, w) in want.iter().enumerate() {
            assert_eq!(cusp.coefficient(n as i64), Cyclotomic::from_int(*w));
        }
    }

    #[test]
    fn expected_dim_stops_early() {
        let mut cfg = ComputationConfig::new(trivial(), 12);
        cfg.expected_dim = Some(1);
        let r = compute_basis(&cfg).unwrap();
        assert_eq!(r.rank(), 1);
        assert_eq!(r.metadata.complete, Completeness::Yes);
    }

    #[test]
    fn escalation_reports_incomplete() {
        let mut cfg = ComputationConfig::new(trivial(), 4);
        cfg.expected_dim = Some(2);
        cfg.max_n0_multiplier = 2;
        let r = compute_basis(&cfg).unwrap();
        assert_eq!(r.rank(), 1);
        assert_eq!(r.metadata.n0_tried, vec![1, 2]);
        assert_eq!(r.metadata.complete, Completeness::No);
    }

    #[test]
    fn rho2_weight4() {
        let spec = TypeSpec::RhoN { n: 2 };
        let on = compute_basis(&ComputationConfig::new(spec.clone(), 4)).unwrap();
        let mut cfg = ComputationConfig::new(spec, 4);
        cfg.deflation = false;
        let off = compute_basis(&cfg).unwrap();
        assert_eq!(on.rank(), off.rank());
        assert!(on.rank() >= 2);
        assert!(on.metadata.row_width < off.metadata.row_width);
        let rho = on.spec.build().unwrap();
        let t = rho.rho_t().unwrap();
        for el in on.elements.iter().chain(&off.elements) {
            assert!(el.expansion.is_t_invariant(&t));
        }
    }

    #[test]
    fn symbolic_reproduces_rows() {
        let spec = TypeSpec::RhoN { n: 3 };
        let r = compute_basis(&ComputationConfig::new(spec, 3)).unwrap();
        let p = r.precision().unwrap();
        assert!(r.rank() > 0);
        for el in &r.elements {
            assert_eq!(el.symbolic.expand(8, 3, &p).unwrap(), el.expansion);
        }
    }

    #[test]
    fn methods_agree() {
        let spec = TypeSpec::RhoN { n: 2 };
        let mut spans = Vec::new();
        for (method, blocks) in [(Method::Generic, false), (Method::Structured, false), (Method::Structured, true)] {
            let mut cfg = ComputationConfig::new(spec.clone(), 6);
            cfg.method = method;
            cfg.dirichlet_blocks = blocks;
            let r = compute_basis(&cfg).unwrap();
            spans.push(r.elements.iter().map(|e| e.expansion.clone()).collect::<Vec<_>>());
        }
        // reduced echelon forms of the same space coincide
        assert_eq!(spans[0], spans[1]);
        assert_eq!(spans[0], spans[2]);
    }

    #[test]
    fn deterministic_json() {
        let cfg = ComputationConfig::new(TypeSpec::RhoN { n: 2 }, 4);
        let a = serde_json::to_string(&compute_basis(&cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&compute_basis(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
        let back: BasisResult = serde_json::from_str(&a).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), a);
    }

    #[test]
    fn modularity_positive_and_negative() {
        let r = compute_basis(&ComputationConfig::new(trivial(), 4)).unwrap();
        let rep = modularity_check(&r, 20, 1e-6, 1).unwrap();
        assert!(rep.passed, "{:?}", rep.failures);
        let mut bad = r.clone();
        bad.elements[0].symbolic.terms[0].coeff = &bad.elements[0].symbolic.terms[0].coeff * &Cyclotomic::from_int(2);
        let ext = extend_precision(&r, &rational(1, 1)).unwrap();
        assert_eq!(ext, r);
        let rep = modularity_check(&bad, 5, 1e-6, 1).unwrap();
        assert!(!rep.passed);
    }

    #[test]
    fn bad_configs() {
        let mut cfg = ComputationConfig::new(TypeSpec::RhoN { n: 2 }, 4);
        cfg.n0 = Some(3);
        assert!(matches!(compute_basis(&cfg), Err(Error::Level(_))));
        let mut cfg = ComputationConfig::new(trivial(), 4);
        cfg.ls = vec![4];
        assert!(compute_basis(&cfg).is_err());
        assert!(compute_basis(&ComputationConfig::new(trivial(), 1)).is_err());
    }
}
