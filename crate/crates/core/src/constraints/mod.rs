//! The realization constraint systems.
//!
//! `Const` places every vertex and one witness disc centre per edge: the
//! outer cycle must turn right at every vertex, every other point must lie
//! left of each outer edge, and each edge's disc passes through its endpoints
//! while every other point stays strictly outside. `ConstSqu` repeats the
//! same conditions for the nine stencil points around each vertex and gives
//! every disc an explicit radius.

mod export;
pub mod poly;

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::Rat;
use crate::graph::PlaneTriangulation;

pub use export::{export_system, parse_system_json, ExportFormat};
pub use poly::{Affine, Monomial, Poly2, SymPoint, VarId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Flavor {
    Const,
    #[serde(rename = "CONSTSQU")]
    ConstSqu,
}

/// Which vertices the "left of every outer edge" constraints quantify over.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum InteriorScope {
    /// Every vertex other than the edge's endpoints.
    #[default]
    AllOthers,
    /// Only vertices off the outer face.
    OffOuterFace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<=")]
    Le,
}

impl Relation {
    pub fn symbol(&self) -> &'static str {
        match self {
            Relation::Eq => "=",
            Relation::Gt => ">",
            Relation::Lt => "<",
            Relation::Ge => ">=",
            Relation::Le => "<=",
        }
    }

    pub fn is_strict(&self) -> bool {
        matches!(self, Relation::Gt | Relation::Lt)
    }

    /// Sign that turns the polynomial value into a slack that is positive when satisfied.
    pub fn orientation(&self) -> i8 {
        match self {
            Relation::Gt | Relation::Ge | Relation::Eq => 1,
            Relation::Lt | Relation::Le => -1,
        }
    }

    pub fn holds(&self, sign: i8) -> bool {
        match self {
            Relation::Eq => sign == 0,
            Relation::Gt => sign > 0,
            Relation::Lt => sign < 0,
            Relation::Ge => sign >= 0,
            Relation::Le => sign <= 0,
        }
    }
}

/// Where a constraint came from. Vertex indices are 0-based; stencil indices
/// run 0 (the point itself) through 8.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tag {
    ConTurn { i: usize, j: usize, k: usize },
    ConInterior { i: usize, j: usize, k: usize },
    DisEq { i: usize, j: usize },
    DisExcl { i: usize, j: usize, k: usize },
    ConSqu { i: usize, j: usize, k: usize, li: u8, lj: u8, lk: u8, interior: bool },
    DisSquIn { i: usize, j: usize, z: usize, l: u8 },
    DisSquOut { i: usize, j: usize, k: usize, l: u8 },
}

impl Tag {
    pub fn kind(&self) -> &'static str {
        match self {
            Tag::ConTurn { .. } => "CON_TURN",
            Tag::ConInterior { .. } => "CON_INTERIOR",
            Tag::DisEq { .. } => "DIS_EQ",
            Tag::DisExcl { .. } => "DIS_EXCL",
            Tag::ConSqu { .. } => "CONSQU",
            Tag::DisSquIn { .. } => "DISSQU_IN",
            Tag::DisSquOut { .. } => "DISSQU_OUT",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub poly: Poly2,
    pub relation: Relation,
    pub tag: Tag,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintSystem {
    pub flavor: Flavor,
    pub interior_scope: InteriorScope,
    pub variables: Vec<VarId>,
    pub constraints: Vec<Constraint>,
    pub graph_digest: String,
}

/// Offsets of the nine stencil points: the vertex itself, the four corners,
/// then the four side midpoints.
pub const STENCIL: [(i64, i64); 9] = [
    (0, 0),
    (-1, -1),
    (-1, 1),
    (1, -1),
    (1, 1),
    (-1, 0),
    (0, 1),
    (1, 0),
    (0, -1),
];

impl ConstraintSystem {
    pub fn var_count(&self) -> usize {
        self.variables.len()
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn count_kind(&self, kind: &str) -> usize {
        self.constraints.iter().filter(|c| c.tag.kind() == kind).count()
    }

    pub fn index_of(&self) -> BTreeMap<VarId, usize> {
        self.variables.iter().enumerate().map(|(k, &v)| (v, k)).collect()
    }

    /// SHA-256 of the canonical JSON export.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        hex::encode(Sha256::digest(export_system(self, ExportFormat::Json).as_bytes()))
    }
}

fn point_variables(g: &PlaneTriangulation, with_radius: bool) -> Vec<VarId> {
    let mut vars = Vec::new();
    for v in 0..g.n() {
        vars.push(VarId::Px(v));
        vars.push(VarId::Py(v));
    }
    for &(i, j) in g.edges() {
        vars.push(VarId::Cx(i, j));
        vars.push(VarId::Cy(i, j));
        if with_radius {
            vars.push(VarId::R(i, j));
        }
    }
    vars
}

fn outer_pairs(g: &PlaneTriangulation) -> Vec<(usize, usize)> {
    let o = g.outer_face();
    (0..o.len()).map(|t| (o[t], o[(t + 1) % o.len()])).collect()
}

fn interior_candidates(g: &PlaneTriangulation, scope: InteriorScope, i: usize, j: usize) -> Vec<usize> {
    (0..g.n())
        .filter(|&k| k != i && k != j)
        .filter(|k| scope == InteriorScope::AllOthers || !g.outer_face().contains(k))
        .collect()
}

/// Builds `Const(G)` for the graph's current outer face.
pub fn build_const(g: &PlaneTriangulation, scope: InteriorScope) -> ConstraintSystem {
    let o = g.outer_face();
    let m = o.len();
    let mut constraints = Vec::new();
    let p = |v: usize| SymPoint::vertex(v, 0, 0);
    for t in 0..m {
        let (i, j, k) = (o[t], o[(t + 1) % m], o[(t + 2) % m]);
        constraints.push(Constraint {
            poly: poly::con(&p(i), &p(j), &p(k)),
            relation: Relation::Gt,
            tag: Tag::ConTurn { i, j, k },
        });
    }
    for (i, j) in outer_pairs(g) {
        for k in interior_candidates(g, scope, i, j) {
            constraints.push(Constraint {
                poly: poly::con(&p(i), &p(k), &p(j)),
                relation: Relation::Lt,
                tag: Tag::ConInterior { i, j, k },
            });
        }
    }
    for &(i, j) in g.edges() {
        let c = SymPoint::center(i, j);
        let mut eq = poly::dist_sq(&p(i), &c);
        eq.add_scaled(&poly::dist_sq(&p(j), &c), -1);
        constraints.push(Constraint { poly: eq, relation: Relation::Eq, tag: Tag::DisEq { i, j } });
        for k in (0..g.n()).filter(|&k| k != i && k != j) {
            let mut ex = poly::dist_sq(&p(k), &c);
            ex.add_scaled(&poly::dist_sq(&p(i), &c), -1);
            constraints.push(Constraint { poly: ex, relation: Relation::Gt, tag: Tag::DisExcl { i, j, k } });
        }
    }
    ConstraintSystem {
        flavor: Flavor::Const,
        interior_scope: scope,
        variables: point_variables(g, false),
        constraints,
        graph_digest: g.digest(),
    }
}

fn stencil(v: usize, l: usize) -> SymPoint {
    let (dx, dy) = STENCIL[l];
    SymPoint::vertex(v, dx, dy)
}

/// Builds `ConstSqu(G)` for the graph's current outer face.
pub fn build_constsqu(g: &PlaneTriangulation, scope: InteriorScope) -> ConstraintSystem {
    let o = g.outer_face();
    let m = o.len();
    let mut constraints = Vec::new();
    for t in 0..m {
        let (i, j, k) = (o[t], o[(t + 1) % m], o[(t + 2) % m]);
        for li in 0..9 {
            for lj in 0..9 {
                for lk in 0..9 {
                    constraints.push(Constraint {
                        poly: poly::con(&stencil(i, li), &stencil(j, lj), &stencil(k, lk)),
                        relation: Relation::Gt,
                        tag: Tag::ConSqu { i, j, k, li: li as u8, lj: lj as u8, lk: lk as u8, interior: false },
                    });
                }
            }
        }
    }
    for (i, j) in outer_pairs(g) {
        for k in interior_candidates(g, scope, i, j) {
            for li in 0..9 {
                for lj in 0..9 {
                    for lk in 0..9 {
                        constraints.push(Constraint {
                            poly: poly::con(&stencil(i, li), &stencil(k, lk), &stencil(j, lj)),
                            relation: Relation::Lt,
                            tag: Tag::ConSqu { i, j, k, li: li as u8, lj: lj as u8, lk: lk as u8, interior: true },
                        });
                    }
                }
            }
        }
    }
    for &(i, j) in g.edges() {
        let c = SymPoint::center(i, j);
        let r = Affine::var(VarId::R(i, j));
        let r_sq = r.mul(&r);
        for z in [i, j] {
            for l in 0..9 {
                let mut inc = poly::dist_sq(&stencil(z, l), &c);
                inc.add_scaled(&r_sq, -1);
                constraints.push(Constraint {
                    poly: inc,
                    relation: Relation::Le,
                    tag: Tag::DisSquIn { i, j, z, l: l as u8 },
                });
            }
        }
        for k in (0..g.n()).filter(|&k| k != i && k != j) {
            for l in 0..9 {
                let mut ex = poly::dist_sq(&stencil(k, l), &c);
                ex.add_scaled(&r_sq, -1);
                constraints.push(Constraint {
                    poly: ex,
                    relation: Relation::Gt,
                    tag: Tag::DisSquOut { i, j, k, l: l as u8 },
                });
            }
        }
    }
    ConstraintSystem {
        flavor: Flavor::ConstSqu,
        interior_scope: scope,
        variables: point_variables(g, true),
        constraints,
        graph_digest: g.digest(),
    }
}

/// Values for the variables of a system.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment<T> {
    pub flavor: Flavor,
    pub values: BTreeMap<VarId, T>,
}

impl<T: Clone> Assignment<T> {
    pub fn new(flavor: Flavor) -> Self {
        Assignment { flavor, values: BTreeMap::new() }
    }

    pub fn get(&self, var: VarId) -> Option<&T> {
        self.values.get(&var)
    }

    pub fn set(&mut self, var: VarId, value: T) {
        self.values.insert(var, value);
    }

    pub fn point(&self, v: usize) -> Option<(T, T)> {
        Some((self.values.get(&VarId::Px(v))?.clone(), self.values.get(&VarId::Py(v))?.clone()))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("assignment has no value for {0}")]
    MissingVariable(String),
}

impl EvalError {
    pub fn code(&self) -> &'static str {
        "MISSING_VARIABLE"
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Constraint values times `denominator`, which is positive.
    pub scaled_residuals: Vec<BigInt>,
    pub denominator: BigInt,
    pub satisfied: Vec<bool>,
    pub all_satisfied: bool,
    /// Smallest oriented slack over the strict inequalities.
    pub min_strict_margin: Option<Rat>,
}

impl EvalReport {
    pub fn residual(&self, k: usize) -> Rat {
        Rat::new(self.scaled_residuals[k].clone(), self.denominator.clone())
    }

    pub fn violated(&self) -> impl Iterator<Item = usize> + '_ {
        self.satisfied.iter().enumerate().filter(|(_, s)| !**s).map(|(k, _)| k)
    }
}

/// Scaled values fit comfortably in `i128` products below this many bits.
const FAST_BITS: u64 = 58;

/// Exact evaluation. All values are brought to a common denominator `L`, so
/// each constraint is one integer sum whose sign decides the relation.
pub fn evaluate(system: &ConstraintSystem, assignment: &Assignment<Rat>) -> Result<EvalReport, EvalError> {
    let mut lcm = BigInt::one();
    let mut values = Vec::with_capacity(system.variables.len());
    for &var in &system.variables {
        let value = assignment
            .values
            .get(&var)
            .ok_or_else(|| EvalError::MissingVariable(var.name()))?;
        lcm = lcm.lcm(value.denom());
        values.push(value);
    }
    let index = system.index_of();
    let scaled: Vec<BigInt> = values.iter().map(|v| v.numer() * (&lcm / v.denom())).collect();
    let fast = lcm.bits() <= FAST_BITS && scaled.iter().all(|v| v.bits() <= FAST_BITS);
    let small: Vec<i128> = if fast { scaled.iter().map(|v| i128::try_from(v).expect("fits")).collect() } else { Vec::new() };
    let lcm_small = if fast { i128::try_from(&lcm).expect("fits") } else { 0 };
    let lcm_sq = &lcm * &lcm;

    let mut sums = Vec::with_capacity(system.len());
    let mut satisfied = Vec::with_capacity(system.len());
    let mut min_slack: Option<BigInt> = None;
    for c in &system.constraints {
        let sum = if fast {
            let mut acc: i128 = 0;
            for (m, &coef) in c.poly.terms() {
                let coef = coef as i128;
                acc += match m {
                    Monomial::One => coef * lcm_small * lcm_small,
                    Monomial::Lin(a) => coef * small[index[a]] * lcm_small,
                    Monomial::Quad(a, b) => coef * small[index[a]] * small[index[b]],
                };
            }
            BigInt::from(acc)
        } else {
            let mut acc = BigInt::zero();
            for (m, &coef) in c.poly.terms() {
                let coef = BigInt::from(coef);
                acc += match m {
                    Monomial::One => coef * &lcm_sq,
                    Monomial::Lin(a) => coef * &scaled[index[a]] * &lcm,
                    Monomial::Quad(a, b) => coef * &scaled[index[a]] * &scaled[index[b]],
                };
            }
            acc
        };
        let sign = if sum.is_positive() { 1 } else if sum.is_negative() { -1 } else { 0 };
        satisfied.push(c.relation.holds(sign));
        if c.relation.is_strict() {
            let slack = if c.relation.orientation() > 0 { sum.clone() } else { -sum.clone() };
            if min_slack.as_ref().is_none_or(|m| &slack < m) {
                min_slack = Some(slack);
            }
        }
        sums.push(sum);
    }
    Ok(EvalReport {
        all_satisfied: satisfied.iter().all(|&s| s),
        min_strict_margin: min_slack.map(|s| Rat::new(s, lcm_sq.clone())),
        scaled_residuals: sums,
        denominator: lcm_sq,
        satisfied,
    })
}
