//! Text forms of a constraint system: a versioned JSON dump that parses back
//! losslessly, and SMT-LIB2 for external nonlinear real solvers.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Constraint, ConstraintSystem, Flavor, InteriorScope, Monomial, Poly2, Relation, Tag, VarId};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Json,
    Smt2,
}

#[derive(Serialize, Deserialize)]
struct SystemDoc {
    schema: u32,
    flavor: Flavor,
    interior_scope: InteriorScope,
    graph_digest: String,
    variables: Vec<String>,
    constraints: Vec<ConstraintDoc>,
}

#[derive(Serialize, Deserialize)]
struct ConstraintDoc {
    tag: TagDoc,
    relation: Relation,
    terms: Vec<TermDoc>,
}

#[derive(Serialize, Deserialize)]
struct TermDoc {
    coef: i64,
    vars: Vec<String>,
}

/// Vertex labels are 1-based here, matching variable names.
#[derive(Serialize, Deserialize, Default)]
struct TagDoc {
    kind: String,
    i: usize,
    j: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    z: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stencil: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    interior: Option<bool>,
}

impl TagDoc {
    fn from_tag(tag: &Tag) -> Self {
        let base = |i: usize, j: usize| TagDoc { kind: tag.kind().to_string(), i: i + 1, j: j + 1, ..Default::default() };
        match *tag {
            Tag::ConTurn { i, j, k } | Tag::ConInterior { i, j, k } | Tag::DisExcl { i, j, k } => {
                TagDoc { k: Some(k + 1), ..base(i, j) }
            }
            Tag::DisEq { i, j } => base(i, j),
            Tag::ConSqu { i, j, k, li, lj, lk, interior } => TagDoc {
                k: Some(k + 1),
                stencil: Some(vec![li, lj, lk]),
                interior: Some(interior),
                ..base(i, j)
            },
            Tag::DisSquIn { i, j, z, l } => TagDoc { z: Some(z + 1), stencil: Some(vec![l]), ..base(i, j) },
            Tag::DisSquOut { i, j, k, l } => TagDoc { k: Some(k + 1), stencil: Some(vec![l]), ..base(i, j) },
        }
    }

    fn to_tag(&self) -> Result<Tag, String> {
        let dec = |v: usize| v.checked_sub(1).ok_or_else(|| "vertex labels are 1-based".to_string());
        let need = |v: Option<usize>, name: &str| v.ok_or_else(|| format!("{} tag needs field {name}", self.kind)).and_then(dec);
        let stencil = |len: usize| -> Result<Vec<u8>, String> {
            match &self.stencil {
                Some(s) if s.len() == len && s.iter().all(|&l| l < 9) => Ok(s.clone()),
                _ => Err(format!("{} tag needs {len} stencil indices in 0..9", self.kind)),
            }
        };
        let (i, j) = (dec(self.i)?, dec(self.j)?);
        Ok(match self.kind.as_str() {
            "CON_TURN" => Tag::ConTurn { i, j, k: need(self.k, "k")? },
            "CON_INTERIOR" => Tag::ConInterior { i, j, k: need(self.k, "k")? },
            "DIS_EQ" => Tag::DisEq { i, j },
            "DIS_EXCL" => Tag::DisExcl { i, j, k: need(self.k, "k")? },
            "CONSQU" => {
                let s = stencil(3)?;
                Tag::ConSqu {
                    i,
                    j,
                    k: need(self.k, "k")?,
                    li: s[0],
                    lj: s[1],
                    lk: s[2],
                    interior: self.interior.ok_or("CONSQU tag needs field interior")?,
                }
            }
            "DISSQU_IN" => Tag::DisSquIn { i, j, z: need(self.z, "z")?, l: stencil(1)?[0] },
            "DISSQU_OUT" => Tag::DisSquOut { i, j, k: need(self.k, "k")?, l: stencil(1)?[0] },
            other => return Err(format!("unknown tag kind {other}")),
        })
    }
}

fn monomial_vars(m: &Monomial) -> Vec<String> {
    m.vars().iter().map(VarId::name).collect()
}

fn to_json(system: &ConstraintSystem) -> String {
    let doc = SystemDoc {
        schema: SCHEMA_VERSION,
        flavor: system.flavor,
        interior_scope: system.interior_scope,
        graph_digest: system.graph_digest.clone(),
        variables: system.variables.iter().map(VarId::name).collect(),
        constraints: system
            .constraints
            .iter()
            .map(|c| ConstraintDoc {
                tag: TagDoc::from_tag(&c.tag),
                relation: c.relation,
                terms: c.poly.terms().map(|(m, &coef)| TermDoc { coef, vars: monomial_vars(m) }).collect(),
            })
            .collect(),
    };
    let mut text = serde_json::to_string(&doc).expect("system serializes");
    text.push('\n');
    text
}

fn parse_var(name: &str) -> Result<VarId, String> {
    VarId::parse(name).ok_or_else(|| format!("bad variable name {name:?}"))
}

/// Parses the JSON export back into a system.
pub fn parse_system_json(text: &str) -> Result<ConstraintSystem, String> {
    let doc: SystemDoc = serde_json::from_str(text).map_err(|e| e.to_string())?;
    if doc.schema != SCHEMA_VERSION {
        return Err(format!("unsupported schema {}", doc.schema));
    }
    let variables = doc.variables.iter().map(|v| parse_var(v)).collect::<Result<Vec<_>, _>>()?;
    let mut constraints = Vec::with_capacity(doc.constraints.len());
    for c in &doc.constraints {
        let mut poly = Poly2::zero();
        for t in &c.terms {
            let vars = t.vars.iter().map(|v| parse_var(v)).collect::<Result<Vec<_>, _>>()?;
            let m = match vars.as_slice() {
                [] => Monomial::One,
                [a] => Monomial::Lin(*a),
                [a, b] => Monomial::quad(*a, *b),
                _ => return Err("monomials have at most two variables".into()),
            };
            if vars.iter().any(|v| !variables.contains(v)) {
                return Err(format!("constraint uses an unregistered variable in {:?}", t.vars));
            }
            poly.add_term(m, t.coef);
        }
        constraints.push(Constraint { poly, relation: c.relation, tag: c.tag.to_tag()? });
    }
    Ok(ConstraintSystem {
        flavor: doc.flavor,
        interior_scope: doc.interior_scope,
        variables,
        constraints,
        graph_digest: doc.graph_digest,
    })
}

fn smt_term(m: &Monomial, coef: i64) -> String {
    let mut factors = Vec::new();
    if coef != 1 || *m == Monomial::One {
        factors.push(if coef < 0 { format!("(- {})", -coef) } else { coef.to_string() });
    }
    factors.extend(monomial_vars(m));
    if factors.len() == 1 {
        factors.pop().unwrap()
    } else {
        format!("(* {})", factors.join(" "))
    }
}

fn smt_poly(p: &Poly2) -> String {
    let terms: Vec<String> = p.terms().map(|(m, &c)| smt_term(m, c)).collect();
    match terms.len() {
        0 => "0".into(),
        1 => terms.into_iter().next().unwrap(),
        _ => format!("(+ {})", terms.join(" ")),
    }
}

fn to_smt2(system: &ConstraintSystem) -> String {
    let mut out = String::new();
    let flavor = match system.flavor {
        Flavor::Const => "CONST",
        Flavor::ConstSqu => "CONSTSQU",
    };
    let _ = writeln!(out, "; schema {SCHEMA_VERSION} flavor {flavor} graph {}", system.graph_digest);
    let _ = writeln!(out, "(set-logic QF_NRA)");
    for v in &system.variables {
        let _ = writeln!(out, "(declare-const {} Real)", v.name());
    }
    for c in &system.constraints {
        let _ = writeln!(out, "(assert ({} {} 0))", c.relation.symbol(), smt_poly(&c.poly));
    }
    let _ = writeln!(out, "(check-sat)");
    let _ = writeln!(out, "(get-model)");
    out
}

pub fn export_system(system: &ConstraintSystem, format: ExportFormat) -> String {
    match format {
        ExportFormat::Json => to_json(system),
        ExportFormat::Smt2 => to_smt2(system),
    }
}
