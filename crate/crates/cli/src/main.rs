//! `vvmf` command-line front end.
//!
//! Exit codes: 0 success, 1 computation error or failed check, 2 usage error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use vvmf::arith::{euler_phi, format_rational, parse_rational};
use vvmf::eisenstein::{eis_fourier, eis_fourier_weight1, eis_fourier_weight2, EisensteinIndex};
use vvmf::engine::{
    compute_basis, extend_precision, modularity_check, sturm_precision, BasisResult, ComputationConfig, SCHEMA,
};
use vvmf::invariants::{
    invariants_dirichlet_blocks, invariants_double, invariants_generic, invariants_triple, pi_g_data, InvariantBasis,
    Method,
};
use vvmf::modgroup::{cosets_gamma0, cosets_gamma1};
use vvmf::typespec::TypeSpec;

#[derive(Parser)]
#[command(name = "vvmf", version, about = "Exact bases of vector-valued modular forms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fourier expansion of one normalised Eisenstein series.
    Eisenstein {
        #[arg(long)]
        k: u32,
        #[arg(long = "N")]
        n: u64,
        #[arg(long, allow_hyphen_values = true)]
        c: i64,
        #[arg(long, allow_hyphen_values = true)]
        d: i64,
        /// Precision in units of q, e.g. 3 or 5/2.
        #[arg(long)]
        prec: String,
        #[command(flatten)]
        out: Output,
    },
    /// Invariant vectors of a type or of its double/triple ambient spaces.
    Invariants {
        #[command(flatten)]
        ty: TypeArg,
        #[arg(long = "double", value_name = "N", conflicts_with = "triple")]
        double: Option<u64>,
        #[arg(long = "triple", num_args = 2, value_names = ["N", "N0"])]
        triple: Option<Vec<u64>>,
        #[arg(long, default_value = "auto")]
        method: Method,
        /// Split into Dirichlet character blocks (needs --triple).
        #[arg(long, requires = "triple")]
        dirichlet: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Compute a basis of M_k(rho).
    Basis {
        #[command(flatten)]
        ty: TypeArg,
        #[arg(long)]
        k: u32,
        /// Split weight; repeat to give several. Default: 1..=k/2.
        #[arg(long = "l")]
        ls: Vec<u32>,
        #[arg(long = "N0")]
        n0: Option<u64>,
        #[arg(long)]
        prec: Option<String>,
        /// Expected dimension; stops early once reached.
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long, visible_alias = "strategy", default_value = "auto")]
        method: Method,
        #[arg(long)]
        dirichlet_blocks: bool,
        #[arg(long)]
        no_deflation: bool,
        #[arg(long, default_value_t = 3)]
        max_n0_multiplier: u64,
        #[command(flatten)]
        out: Output,
    },
    /// Re-expand a stored basis to a higher precision.
    Extend {
        /// Result file written by `basis`.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        prec: String,
        #[command(flatten)]
        out: Output,
    },
    /// Numeric modularity check of a stored basis.
    Check {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: Output,
    },
    /// Level, dimension, Sturm precision, coset counts and validation.
    Info {
        #[arg(long = "type", value_name = "FILE", required_unless_present = "cosets", conflicts_with = "cosets")]
        ty: Option<String>,
        /// Coset counts for level N only.
        #[arg(long, value_name = "N")]
        cosets: Option<u64>,
        #[arg(long)]
        k: Option<u32>,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Args)]
struct TypeArg {
    /// Type spec: a JSON file, or inline JSON starting with '{'.
    #[arg(long = "type", value_name = "FILE")]
    ty: String,
}

#[derive(Args)]
struct Output {
    /// Write JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Compute(String),
}

impl From<vvmf::Error> for Failure {
    fn from(e: vvmf::Error) -> Self {
        Failure::Compute(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn read_source(arg: &str) -> CliResult<(String, String)> {
    if arg.trim_start().starts_with('{') {
        return Ok(("<inline>".into(), arg.to_string()));
    }
    let text = fs::read_to_string(arg).map_err(|e| Failure::Usage(format!("{}: {}", arg, e)))?;
    Ok((arg.to_string(), text))
}

fn parse_json<T: serde::de::DeserializeOwned>(name: &str, text: &str) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| Failure::Usage(format!("{}:{}:{}: {}", name, e.line(), e.column(), e)))
}

fn load_spec(arg: &str) -> CliResult<TypeSpec> {
    let (name, text) = read_source(arg)?;
    parse_json(&name, &text)
}

fn load_result(path: &Path) -> CliResult<BasisResult> {
    let (name, text) = read_source(&path.to_string_lossy())?;
    let r: BasisResult = parse_json(&name, &text)?;
    if r.schema != SCHEMA {
        return Err(Failure::Usage(format!("{}: unsupported schema '{}'", name, r.schema)));
    }
    Ok(r)
}

fn precision_arg(s: &str) -> CliResult<num_rational::BigRational> {
    parse_rational(s)
        .filter(|p| *p > num_rational::BigRational::from_integer(0.into()))
        .ok_or_else(|| Failure::Usage(format!("precision must be a positive rational, got '{}'", s)))
}

fn emit<T: Serialize>(value: &T, out: &Output) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Compute(e.to_string()))? + "\n";
    match &out.out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {}", p.display(), e))),
        None => {
            print!("{}", text);
            Ok(())
        }
    }
}

fn basis_json(b: &InvariantBasis) -> Value {
    json!({
        "label": b.label,
        "shape": b.shape,
        "method": b.method,
        "ambient_dim": b.ambient.dim,
        "vectors": b.vectors,
    })
}

fn coset_counts(n: u64) -> Value {
    let g1 = cosets_gamma1(n).len();
    json!({
        "N": n,
        "gamma0": cosets_gamma0(n).len(),
        "gamma1": g1,
        "gamma": g1 as u64 * n,
        "double_cosets_gamma1": pi_g_data(n).len(),
        "units": euler_phi(n),
    })
}

fn run(cli: Cli) -> CliResult<bool> {
    match cli.command {
        Command::Eisenstein { k, n, c, d, prec, out } => {
            let p = precision_arg(&prec)?;
            let idx = EisensteinIndex::new(k, n, c, d).map_err(|e| Failure::Usage(e.to_string()))?;
            let f = match k {
                1 => eis_fourier_weight1(&idx, &p)?,
                2 => eis_fourier_weight2(&idx, &p)?,
                _ => (*eis_fourier(&idx, &p)?).clone(),
            };
            emit(&json!({"schema": SCHEMA, "index": idx, "expansion": f}), &out)?;
        }
        Command::Invariants { ty, double, triple, method, dirichlet, out } => {
            let spec = load_spec(&ty.ty)?;
            let rho = spec.build()?;
            let batches: Vec<InvariantBasis> = match (double, triple) {
                (Some(n), _) => vec![invariants_double(&rho, n, method)?],
                (None, Some(t)) if dirichlet => invariants_dirichlet_blocks(&rho, t[0], t[1])?,
                (None, Some(t)) => vec![invariants_triple(&rho, t[0], t[1], method)?],
                (None, None) => vec![invariants_generic(&rho)?],
            };
            let dim: usize = batches.iter().map(|b| b.len()).sum();
            emit(
                &json!({
                    "schema": SCHEMA,
                    "type": spec,
                    "dimension": dim,
                    "batches": batches.iter().map(basis_json).collect::<Vec<_>>(),
                }),
                &out,
            )?;
        }
        Command::Basis {
            ty,
            k,
            ls,
            n0,
            prec,
            dim,
            method,
            dirichlet_blocks,
            no_deflation,
            max_n0_multiplier,
            out,
        } => {
            let spec = load_spec(&ty.ty)?;
            if let Some(p) = &prec {
                precision_arg(p)?;
            }
            let mut cfg = ComputationConfig::new(spec, k);
            cfg.ls = ls;
            cfg.n0 = n0;
            cfg.precision = prec;
            cfg.expected_dim = dim;
            cfg.method = method;
            cfg.dirichlet_blocks = dirichlet_blocks;
            cfg.deflation = !no_deflation;
            cfg.max_n0_multiplier = max_n0_multiplier;
            emit(&compute_basis(&cfg)?, &out)?;
        }
        Command::Extend { input, prec, out } => {
            let r = load_result(&input)?;
            let p = precision_arg(&prec)?;
            emit(&extend_precision(&r, &p)?, &out)?;
        }
        Command::Check { input, trials, tol, seed, out } => {
            let r = load_result(&input)?;
            let report = modularity_check(&r, trials, tol, seed)?;
            emit(&report, &out)?;
            return Ok(report.passed);
        }
        Command::Info { ty, cosets, k, samples, out } => {
            if let Some(n) = cosets {
                if n == 0 {
                    return Err(Failure::Usage("--cosets needs N >= 1".into()));
                }
                emit(&json!({"schema": SCHEMA, "cosets": coset_counts(n)}), &out)?;
                return Ok(true);
            }
            let spec = load_spec(ty.as_deref().unwrap_or_default())?;
            let rho = spec.build()?;
            let report = rho.validate(&mut ChaCha8Rng::seed_from_u64(0x5eed), samples)?;
            let sturm: Value = match k {
                Some(k) => json!({ k.to_string(): format_rational(&sturm_precision(k, rho.level)) }),
                None => (1..=12u32)
                    .map(|k| (k.to_string(), json!(format_rational(&sturm_precision(k, rho.level)))))
                    .collect::<serde_json::Map<_, _>>()
                    .into(),
            };
            emit(
                &json!({
                    "schema": SCHEMA,
                    "type": spec,
                    "description": rho.describe(),
                    "group": rho.group,
                    "level": rho.level,
                    "dimension": rho.dim,
                    "field_order": rho.field_order()?,
                    "sturm_precision": sturm,
                    "cosets": coset_counts(rho.level),
                    "validation": report,
                }),
                &out,
            )?;
            return Ok(report.passed);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Compute(m)) => {
            eprintln!("error: {}", m);
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("usage error: {}", m);
            ExitCode::from(2)
        }
    }
}
