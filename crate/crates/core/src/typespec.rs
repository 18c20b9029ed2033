//! JSON description of arithmetic types.
//!
//! ```json
//! {"kind": "rho_chi", "character": {"modulus": 4, "index": 1}}
//! {"kind": "tensor", "left": {"kind": "rho_N", "N": 2}, "right": {"kind": "trivial"}}
//! ```
//!
//! Twisted permutation types list, for S and T, the image of each block
//! (1-based) and the twist block applied on the way.

use serde::{Deserialize, Serialize};

use crate::artypes::{
    type_dirichlet, type_dual, type_induce, type_rho_chi, type_rho_n, type_tensor, type_trivial,
    type_twisted_perm, Group, TwistedPermData, TypeRef,
};
use crate::characters::CharacterSpec;
use crate::cyclotomic::Cyclotomic;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub perm: Vec<usize>,
    pub blocks: Vec<Vec<Vec<Cyclotomic>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TypeSpec {
    Trivial {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        group: Option<String>,
    },
    Dirichlet {
        character: CharacterSpec,
    },
    #[serde(rename = "rho_N")]
    RhoN {
        #[serde(rename = "N")]
        n: u64,
    },
    RhoChi {
        character: CharacterSpec,
    },
    TwistedPerm {
        n: usize,
        d: usize,
        level: u64,
        #[serde(rename = "S")]
        s: GeneratorSpec,
        #[serde(rename = "T")]
        t: GeneratorSpec,
    },
    Tensor {
        left: Box<TypeSpec>,
        right: Box<TypeSpec>,
    },
    Dual {
        of: Box<TypeSpec>,
    },
    Induce {
        of: Box<TypeSpec>,
    },
}

/// Flat form read directly from the input so that errors keep positions.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    kind: String,
    group: Option<String>,
    character: Option<CharacterSpec>,
    #[serde(rename = "N")]
    big_n: Option<u64>,
    n: Option<usize>,
    d: Option<usize>,
    level: Option<u64>,
    #[serde(rename = "S")]
    s: Option<GeneratorSpec>,
    #[serde(rename = "T")]
    t: Option<GeneratorSpec>,
    left: Option<Box<RawSpec>>,
    right: Option<Box<RawSpec>>,
    of: Option<Box<RawSpec>>,
}

fn need<T>(x: Option<T>, kind: &str, field: &str) -> std::result::Result<T, String> {
    x.ok_or_else(|| format!("kind '{}' needs field '{}'", kind, field))
}

impl TryFrom<RawSpec> for TypeSpec {
    type Error = String;
    fn try_from(r: RawSpec) -> std::result::Result<Self, String> {
        let k = r.kind.as_str();
        let sub = |x: Option<Box<RawSpec>>, f: &str| -> std::result::Result<Box<TypeSpec>, String> {
            Ok(Box::new(TypeSpec::try_from(*need(x, k, f)?)?))
        };
        Ok(match k {
            "trivial" => TypeSpec::Trivial { group: r.group },
            "dirichlet" => TypeSpec::Dirichlet {
                character: need(r.character, k, "character")?,
            },
            "rho_N" => TypeSpec::RhoN {
                n: need(r.big_n, k, "N")?,
            },
            "rho_chi" => TypeSpec::RhoChi {
                character: need(r.character, k, "character")?,
            },
            "twisted_perm" => TypeSpec::TwistedPerm {
                n: need(r.n, k, "n")?,
                d: need(r.d, k, "d")?,
                level: need(r.level, k, "level")?,
                s: need(r.s, k, "S")?,
                t: need(r.t, k, "T")?,
            },
            "tensor" => TypeSpec::Tensor {
                left: sub(r.left, "left")?,
                right: sub(r.right, "right")?,
            },
            "dual" => TypeSpec::Dual { of: sub(r.of, "of")? },
            "induce" => TypeSpec::Induce { of: sub(r.of, "of")? },
            other => return Err(format!("unknown kind '{}'", other)),
        })
    }
}

impl<'de> Deserialize<'de> for TypeSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawSpec::deserialize(d)?;
        TypeSpec::try_from(raw).map_err(serde::de::Error::custom)
    }
}

fn zero_based(perm: &[usize]) -> Result<Vec<usize>> {
    perm.iter()
        .map(|&p| {
            p.checked_sub(1)
                .ok_or_else(|| Error::Invalid("permutation entries are 1-based".into()))
        })
        .collect()
}

impl TypeSpec {
    pub fn build(&self) -> Result<TypeRef> {
        Ok(match self {
            TypeSpec::Trivial { group } => {
                let g = match group {
                    Some(s) => s.parse::<Group>()?,
                    None => Group::SL2Z,
                };
                type_trivial(g)
            }
            TypeSpec::Dirichlet { character } => type_dirichlet(character.build()?),
            TypeSpec::RhoN { n } => {
                if *n == 0 {
                    return Err(Error::Invalid("rho_N needs N >= 1".into()));
                }
                type_rho_n(*n)
            }
            TypeSpec::RhoChi { character } => type_rho_chi(character.build()?),
            TypeSpec::TwistedPerm { n, d, level, s, t } => type_twisted_perm(
                TwistedPermData {
                    n: *n,
                    d: *d,
                    s_perm: zero_based(&s.perm)?,
                    s_blocks: s.blocks.clone(),
                    t_perm: zero_based(&t.perm)?,
                    t_blocks: t.blocks.clone(),
                },
                *level,
            )?,
            TypeSpec::Tensor { left, right } => type_tensor(left.build()?, right.build()?)?,
            TypeSpec::Dual { of } => type_dual(of.build()?),
            TypeSpec::Induce { of } => type_induce(of.build()?)?,
        })
    }

    pub fn parse(json: &str) -> std::result::Result<TypeSpec, serde_json::Error> {
        serde_json::from_str(json)
    }
}
