//! Penalty-method search for floating-point solutions of a constraint system.
//!
//! Gradient descent with a backtracking (Armijo) line search on a squared
//! hinge penalty. Restarts begin from a Tutte drawing with seeded jitter.
//! Floating answers are only candidates: exactness comes from rounding and
//! exact evaluation downstream.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constraints::{Assignment, ConstraintSystem, EvalError, Flavor, Monomial, Relation, Tag, VarId};
use crate::exact::{rationalize, Rat};
use crate::graph::PlaneTriangulation;
use crate::tutte::{tutte_embedding, tutte_weighted};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Slack demanded of strict inequalities. `None` picks the flavor default:
    /// 1.0 for `ConstSqu`, `1e-3` times the bounding-box area for `Const`.
    pub margin: Option<f64>,
    pub max_iterations: usize,
    pub restarts: usize,
    pub seed: u64,
    pub initial_step: f64,
    pub step_shrink: f64,
    pub step_grow: f64,
    pub armijo: f64,
    pub stagnation_window: usize,
    pub stagnation_tolerance: f64,
    /// Restart jitter as a fraction of the minimum pairwise distance.
    pub jitter: f64,
    /// The penalty aims for this multiple of the margin, so descent crosses
    /// the acceptance boundary instead of creeping up to it.
    pub overshoot: f64,
    pub time_budget_secs: f64,
    pub denominators: Vec<u64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            margin: None,
            max_iterations: 20_000,
            restarts: 8,
            seed: 0,
            initial_step: 1e-3,
            step_shrink: 0.5,
            step_grow: 2.0,
            armijo: 1e-4,
            stagnation_window: 200,
            stagnation_tolerance: 1e-12,
            jitter: 0.25,
            overshoot: 2.0,
            time_budget_secs: 60.0,
            denominators: vec![1, 64, 4096, 1 << 20],
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), String> {
        if let Some(m) = self.margin {
            if !(m > 0.0 && m.is_finite()) {
                return Err(format!("margin must be positive, got {m}"));
            }
        }
        if self.denominators.is_empty() || self.denominators.windows(2).any(|w| w[0] >= w[1]) || self.denominators[0] == 0 {
            return Err("denominators must be positive and strictly ascending".into());
        }
        if !(self.overshoot >= 1.0) {
            return Err("overshoot must be at least 1".into());
        }
        if !(self.step_shrink > 0.0 && self.step_shrink < 1.0 && self.step_grow >= 1.0) {
            return Err("step schedule needs 0 < shrink < 1 <= grow".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SolveStatus {
    SatisfiedFloat,
    Exhausted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub assignment: Assignment<f64>,
    pub min_margin: f64,
    pub loss: f64,
    pub iterations: usize,
    pub restart: usize,
}

const CONST_TERM: u32 = u32::MAX;

/// Flat form of a system for fast floating-point evaluation. Each term is
/// `coef * x[a] * x[b]`, with `CONST_TERM` standing for the factor 1.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub variables: Vec<VarId>,
    index: BTreeMap<VarId, usize>,
    terms: Vec<(u32, u32, f64)>,
    rows: Vec<(usize, usize, Relation)>,
    /// Centre variable pairs with the endpoints they must be equidistant to.
    bisectors: Vec<(usize, usize, usize, usize, usize, usize)>,
}

impl Compiled {
    pub fn new(system: &ConstraintSystem) -> Self {
        let index = system.index_of();
        let mut terms = Vec::new();
        let mut rows = Vec::with_capacity(system.len());
        let mut bisectors = Vec::new();
        for c in &system.constraints {
            let start = terms.len();
            for (m, &coef) in c.poly.terms() {
                let (a, b) = match *m {
                    Monomial::One => (CONST_TERM, CONST_TERM),
                    Monomial::Lin(v) => (index[&v] as u32, CONST_TERM),
                    Monomial::Quad(u, v) => (index[&u] as u32, index[&v] as u32),
                };
                terms.push((a, b, coef as f64));
            }
            rows.push((start, terms.len(), c.relation));
            if let Tag::DisEq { i, j } = c.tag {
                bisectors.push((
                    index[&VarId::Cx(i, j)],
                    index[&VarId::Cy(i, j)],
                    index[&VarId::Px(i)],
                    index[&VarId::Py(i)],
                    index[&VarId::Px(j)],
                    index[&VarId::Py(j)],
                ));
            }
        }
        Compiled { variables: system.variables.clone(), index, terms, rows, bisectors }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn index(&self, var: VarId) -> Option<usize> {
        self.index.get(&var).copied()
    }

    fn factor(x: &[f64], k: u32) -> f64 {
        if k == CONST_TERM {
            1.0
        } else {
            x[k as usize]
        }
    }

    pub fn row_value(&self, row: usize, x: &[f64]) -> f64 {
        let (s, e, _) = self.rows[row];
        self.terms[s..e]
            .iter()
            .map(|&(a, b, c)| c * Self::factor(x, a) * Self::factor(x, b))
            .sum()
    }

    /// Penalty value and its gradient.
    pub fn loss_grad(&self, x: &[f64], margin: f64, grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        for (row, &(s, e, rel)) in self.rows.iter().enumerate() {
            let v = self.row_value(row, x);
            let dv = match rel {
                Relation::Eq => {
                    loss += v * v;
                    2.0 * v
                }
                _ => {
                    let orient = rel.orientation() as f64;
                    let target = if rel.is_strict() { margin } else { 0.0 };
                    let gap = target - orient * v;
                    if gap <= 0.0 {
                        continue;
                    }
                    loss += gap * gap;
                    -2.0 * gap * orient
                }
            };
            for &(a, b, c) in &self.terms[s..e] {
                if a != CONST_TERM {
                    grad[a as usize] += dv * c * Self::factor(x, b);
                }
                if b != CONST_TERM {
                    grad[b as usize] += dv * c * Self::factor(x, a);
                }
            }
        }
        loss
    }

    pub fn loss(&self, x: &[f64], margin: f64) -> f64 {
        let mut loss = 0.0;
        for (row, &(_, _, rel)) in self.rows.iter().enumerate() {
            let v = self.row_value(row, x);
            loss += match rel {
                Relation::Eq => v * v,
                _ => {
                    let target = if rel.is_strict() { margin } else { 0.0 };
                    let gap = target - rel.orientation() as f64 * v;
                    if gap > 0.0 {
                        gap * gap
                    } else {
                        0.0
                    }
                }
            };
        }
        loss
    }

    /// Whether `x` meets every relation in floating point: equalities within
    /// `eq_tol`, strict inequalities with slack at least `margin`. Also
    /// returns the smallest strict slack.
    pub fn check(&self, x: &[f64], margin: f64, eq_tol: f64) -> (bool, f64) {
        let mut ok = true;
        let mut min_slack = f64::INFINITY;
        for (row, &(_, _, rel)) in self.rows.iter().enumerate() {
            let v = self.row_value(row, x);
            let slack = rel.orientation() as f64 * v;
            match rel {
                Relation::Eq => ok &= v.abs() <= eq_tol,
                Relation::Ge | Relation::Le => ok &= slack >= 0.0,
                Relation::Gt | Relation::Lt => {
                    ok &= slack >= margin;
                    min_slack = min_slack.min(slack);
                }
            }
        }
        (ok, min_slack)
    }

    /// Moves every witness centre onto the perpendicular bisector of its edge.
    pub fn project_centers(&self, x: &mut [f64]) {
        for &(cx, cy, xi, yi, xj, yj) in &self.bisectors {
            let (mx, my) = ((x[xi] + x[xj]) / 2.0, (x[yi] + x[yj]) / 2.0);
            let (dx, dy) = (x[xj] - x[xi], x[yj] - x[yi]);
            let len_sq = dx * dx + dy * dy;
            if len_sq == 0.0 {
                continue;
            }
            let along = ((x[cx] - mx) * dx + (x[cy] - my) * dy) / len_sq;
            x[cx] -= along * dx;
            x[cy] -= along * dy;
        }
    }

    /// Area of the bounding box of the point variables, at least 1.
    pub fn point_scale(&self, x: &[f64]) -> f64 {
        let (mut lo_x, mut hi_x, mut lo_y, mut hi_y) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for (k, v) in self.variables.iter().enumerate() {
            match v {
                VarId::Px(_) => {
                    lo_x = lo_x.min(x[k]);
                    hi_x = hi_x.max(x[k]);
                }
                VarId::Py(_) => {
                    lo_y = lo_y.min(x[k]);
                    hi_y = hi_y.max(x[k]);
                }
                _ => {}
            }
        }
        ((hi_x - lo_x) * (hi_y - lo_y)).max(1.0)
    }

    pub fn to_vec(&self, a: &Assignment<f64>) -> Result<Vec<f64>, EvalError> {
        self.variables
            .iter()
            .map(|v| a.get(*v).copied().ok_or_else(|| EvalError::MissingVariable(v.name())))
            .collect()
    }

    pub fn to_assignment(&self, flavor: Flavor, x: &[f64]) -> Assignment<f64> {
        Assignment { flavor, values: self.variables.iter().copied().zip(x.iter().copied()).collect() }
    }
}

/// Penalty and gradient keyed by variable.
pub fn penalty(
    system: &ConstraintSystem,
    a: &Assignment<f64>,
    margin: f64,
) -> Result<(f64, BTreeMap<VarId, f64>), EvalError> {
    let compiled = Compiled::new(system);
    let x = compiled.to_vec(a)?;
    let mut grad = vec![0.0; x.len()];
    let loss = compiled.loss_grad(&x, margin, &mut grad);
    Ok((loss, compiled.variables.iter().copied().zip(grad).collect()))
}

fn circumcenter_f64(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> Option<(f64, f64)> {
    let d = 2.0 * (a.0 * (b.1 - c.1) + b.0 * (c.1 - a.1) + c.0 * (a.1 - b.1));
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let (a2, b2, c2) = (a.0 * a.0 + a.1 * a.1, b.0 * b.0 + b.1 * b.1, c.0 * c.0 + c.1 * c.1);
    Some((
        (a2 * (b.1 - c.1) + b2 * (c.1 - a.1) + c2 * (a.1 - b.1)) / d,
        (a2 * (c.0 - b.0) + b2 * (a.0 - c.0) + c2 * (b.0 - a.0)) / d,
    ))
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

pub fn min_pairwise_distance(points: &[(f64, f64)]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            best = best.min(dist(points[i], points[j]));
        }
    }
    best
}

/// Witness centre guesses for a drawing: for an edge with two inner faces
/// the midpoint of their circumcentres, for a hull edge the circumcentre of
/// its face moved outward by the edge length.
pub fn witness_guess(g: &PlaneTriangulation, points: &[(f64, f64)]) -> BTreeMap<(usize, usize), ((f64, f64), f64)> {
    let faces = g.inner_faces();
    let mut out = BTreeMap::new();
    for &(i, j) in g.edges() {
        let incident: Vec<&[usize]> = faces.iter().copied().filter(|f| f.contains(&i) && f.contains(&j)).collect();
        let cc = |f: &[usize]| circumcenter_f64(points[f[0]], points[f[1]], points[f[2]]);
        let mid = ((points[i].0 + points[j].0) / 2.0, (points[i].1 + points[j].1) / 2.0);
        let (dx, dy) = (points[j].0 - points[i].0, points[j].1 - points[i].1);
        let center = match incident.as_slice() {
            [a, b] => match (cc(a), cc(b)) {
                (Some(p), Some(q)) => ((p.0 + q.0) / 2.0, (p.1 + q.1) / 2.0),
                _ => mid,
            },
            [a] => {
                let k = a.iter().copied().find(|&v| v != i && v != j).unwrap_or(i);
                let toward_k = -dy * (points[k].0 - points[i].0) + dx * (points[k].1 - points[i].1);
                let (nx, ny) = if toward_k > 0.0 { (dy, -dx) } else { (-dy, dx) };
                let base = cc(a).unwrap_or(mid);
                (base.0 + nx, base.1 + ny)
            }
            _ => mid,
        };
        out.insert((i, j), (center, dist(center, points[i]) + 2.0));
    }
    out
}

/// Assignment built from explicit point positions: centres from
/// [`witness_guess`], radii two units beyond the endpoints.
pub fn assignment_from_points(g: &PlaneTriangulation, system: &ConstraintSystem, points: &[(f64, f64)]) -> Assignment<f64> {
    let mut a = Assignment::new(system.flavor);
    for (v, &(x, y)) in points.iter().enumerate() {
        a.set(VarId::Px(v), x);
        a.set(VarId::Py(v), y);
    }
    for ((i, j), ((cx, cy), r)) in witness_guess(g, points) {
        a.set(VarId::Cx(i, j), cx);
        a.set(VarId::Cy(i, j), cy);
        if system.flavor == Flavor::ConstSqu {
            a.set(VarId::R(i, j), r);
        }
    }
    a
}

/// Tutte drawing scaled to a minimum pairwise distance of 10; restarts
/// after the first add seeded jitter growing with the restart index.
/// Restart 0 is the plain Tutte drawing. Later restarts draw the outer face
/// on random clockwise angles, weight edges randomly and add a little jitter,
/// so each restart starts from a different planar drawing.
pub fn initialize(g: &PlaneTriangulation, system: &ConstraintSystem, config: &SolverConfig, restart: usize) -> Assignment<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(restart as u64));
    let drawn = if restart == 0 {
        tutte_embedding(g, 1.0)
    } else {
        let m = g.outer_face().len();
        let mut gaps: Vec<f64> = (0..m).map(|_| rng.gen_range(0.5..1.5)).collect();
        let total: f64 = gaps.iter().sum();
        let mut angle = std::f64::consts::FRAC_PI_2;
        let mut angles = Vec::with_capacity(m);
        for gap in &mut gaps {
            angles.push(angle);
            angle -= std::f64::consts::TAU * *gap / total;
        }
        let mut weights = BTreeMap::new();
        for &(u, v) in g.edges() {
            weights.insert((u, v), rng.gen_range(0.2..5.0f64));
        }
        tutte_weighted(g, 1.0, &angles, |u, v| weights[&(u.min(v), u.max(v))])
    };
    let mut points = drawn.unwrap_or_else(|_| {
        // a valid triangulation never gets here; fall back to a circle
        let n = g.n() as f64;
        (0..g.n())
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / n;
                (t.cos(), t.sin())
            })
            .collect()
    });
    let d = min_pairwise_distance(&points);
    let scale = if d > 0.0 && d.is_finite() { 10.0 / d } else { 10.0 };
    for p in &mut points {
        p.0 *= scale;
        p.1 *= scale;
    }
    if restart > 0 {
        let amount = config.jitter * 10.0;
        for p in &mut points {
            p.0 += rng.gen_range(-amount..=amount);
            p.1 += rng.gen_range(-amount..=amount);
        }
    }
    assignment_from_points(g, system, &points)
}

pub fn default_margin(system: &ConstraintSystem, compiled: &Compiled, x: &[f64]) -> f64 {
    match system.flavor {
        Flavor::ConstSqu => 1.0,
        Flavor::Const => 1e-3 * compiled.point_scale(x),
    }
}

/// Outcome of a single descent, with a deadline.
pub fn solve_from(
    system: &ConstraintSystem,
    start: &Assignment<f64>,
    config: &SolverConfig,
    restart: usize,
    deadline: Option<Instant>,
) -> Result<SolveOutcome, EvalError> {
    let compiled = Compiled::new(system);
    let x0 = compiled.to_vec(start)?;
    Ok(descend(&compiled, system.flavor, x0, config, restart, deadline, None))
}

fn satisfied(compiled: &Compiled, x: &[f64], margin: f64) -> (bool, f64, Vec<f64>) {
    let mut y = x.to_vec();
    compiled.project_centers(&mut y);
    let eq_tol = 1e-9 * compiled.point_scale(&y);
    let (ok, slack) = compiled.check(&y, margin, eq_tol);
    (ok, slack, y)
}

fn descend(
    compiled: &Compiled,
    flavor: Flavor,
    mut x: Vec<f64>,
    config: &SolverConfig,
    restart: usize,
    deadline: Option<Instant>,
    fixed_margin: Option<f64>,
) -> SolveOutcome {
    let margin = fixed_margin.or(config.margin).unwrap_or_else(|| match flavor {
        Flavor::ConstSqu => 1.0,
        Flavor::Const => 1e-3 * compiled.point_scale(&x),
    });
    let finish = |x: Vec<f64>, status, loss, iterations| {
        let (_, slack) = compiled.check(&x, margin, f64::INFINITY);
        SolveOutcome {
            status,
            assignment: compiled.to_assignment(flavor, &x),
            min_margin: slack,
            loss,
            iterations,
            restart,
        }
    };
    let target = margin * config.overshoot;
    let mut grad = vec![0.0; x.len()];
    let mut trial = vec![0.0; x.len()];
    let mut loss = compiled.loss_grad(&x, target, &mut grad);
    let mut step = config.initial_step / compiled.point_scale(&x);
    let mut window_start = loss;
    for it in 0..config.max_iterations {
        let (ok, _, projected) = satisfied(compiled, &x, margin);
        if ok {
            let l = compiled.loss(&projected, target);
            return finish(projected, SolveStatus::SatisfiedFloat, l, it);
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            return finish(x, SolveStatus::Exhausted, loss, it);
        }
        let g_sq: f64 = grad.iter().map(|g| g * g).sum();
        if g_sq == 0.0 || !g_sq.is_finite() {
            return finish(x, SolveStatus::Exhausted, loss, it);
        }
        let mut accepted = false;
        while step > 1e-300 {
            for k in 0..x.len() {
                trial[k] = x[k] - step * grad[k];
            }
            let trial_loss = compiled.loss(&trial, target);
            if trial_loss <= loss - config.armijo * step * g_sq {
                std::mem::swap(&mut x, &mut trial);
                loss = compiled.loss_grad(&x, target, &mut grad);
                step *= config.step_grow;
                accepted = true;
                break;
            }
            step *= config.step_shrink;
        }
        if !accepted {
            return finish(x, SolveStatus::Exhausted, loss, it + 1);
        }
        if (it + 1) % config.stagnation_window == 0 {
            if window_start - loss < config.stagnation_tolerance * window_start {
                return finish(x, SolveStatus::Exhausted, loss, it + 1);
            }
            window_start = loss;
        }
    }
    let (ok, _, projected) = satisfied(compiled, &x, margin);
    if ok {
        let l = compiled.loss(&projected, target);
        return finish(projected, SolveStatus::SatisfiedFloat, l, config.max_iterations);
    }
    finish(x, SolveStatus::Exhausted, loss, config.max_iterations)
}

/// Descends from `initialize` for each restart in turn, stopping at the first
/// floating solution. Returns the lowest-loss attempt otherwise.
pub fn solve(g: &PlaneTriangulation, system: &ConstraintSystem, config: &SolverConfig) -> SolveOutcome {
    let compiled = Compiled::new(system);
    let deadline = Instant::now() + std::time::Duration::from_secs_f64(config.time_budget_secs.max(0.0));
    let mut best: Option<SolveOutcome> = None;
    for restart in 0..config.restarts.max(1) {
        let start = initialize(g, system, config, restart);
        let x0 = compiled.to_vec(&start).expect("initialize covers every variable");
        let outcome = descend(&compiled, system.flavor, x0, config, restart, Some(deadline), None);
        if outcome.status == SolveStatus::SatisfiedFloat {
            return outcome;
        }
        if best.as_ref().is_none_or(|b| outcome.loss < b.loss) {
            best = Some(outcome);
        }
        if Instant::now() >= deadline {
            break;
        }
    }
    best.expect("at least one restart")
}

/// Descent on an existing compiled system with an explicit margin; used to
/// polish lifted assignments.
pub fn polish(
    compiled: &Compiled,
    flavor: Flavor,
    start: Vec<f64>,
    config: &SolverConfig,
    margin: f64,
    deadline: Option<Instant>,
) -> SolveOutcome {
    descend(compiled, flavor, start, config, 0, deadline, Some(margin))
}

/// One exact assignment per configured denominator bound, in order.
pub fn round_candidates<'a>(a: &'a Assignment<f64>, config: &'a SolverConfig) -> impl Iterator<Item = Assignment<Rat>> + 'a {
    config.denominators.iter().map(move |&d| Assignment {
        flavor: a.flavor,
        values: a
            .values
            .iter()
            .map(|(&var, &v)| (var, rationalize(v, d).unwrap_or_else(|_| Rat::from_integer(0.into()))))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{build_const, build_constsqu, InteriorScope, Poly2};
    use crate::exact::ratio;
    use crate::graph::tests::k4;
    use crate::instance::fan_triangulation;

    fn single(relation: Relation) -> ConstraintSystem {
        ConstraintSystem {
            flavor: Flavor::Const,
            interior_scope: InteriorScope::AllOthers,
            variables: vec![VarId::Px(0)],
            constraints: vec![crate::constraints::Constraint {
                poly: Poly2::from_terms([(Monomial::Lin(VarId::Px(0)), 1)]),
                relation,
                tag: Tag::ConTurn { i: 0, j: 1, k: 2 },
            }],
            graph_digest: String::new(),
        }
    }

    #[test]
    fn hinge_algebra() {
        let sys = single(Relation::Gt);
        let mut a = Assignment::new(Flavor::Const);
        a.set(VarId::Px(0), -1.0);
        let (loss, grad) = penalty(&sys, &a, 1.0).unwrap();
        assert_eq!(loss, 4.0);
        assert_eq!(grad[&VarId::Px(0)], -4.0);
        a.set(VarId::Px(0), 3.0);
        let (loss, grad) = penalty(&sys, &a, 1.0).unwrap();
        assert_eq!((loss, grad[&VarId::Px(0)]), (0.0, 0.0));
    }

    #[test]
    fn missing_variable() {
        let sys = single(Relation::Gt);
        let err = penalty(&sys, &Assignment::new(Flavor::Const), 1.0).unwrap_err();
        assert_eq!(err.code(), "MISSING_VARIABLE");
    }

    fn finite_difference_check(system: &ConstraintSystem, seed: u64) {
        let compiled = Compiled::new(system);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..compiled.variables.len()).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let margin = 0.5;
        let mut grad = vec![0.0; x.len()];
        compiled.loss_grad(&x, margin, &mut grad);
        for k in 0..x.len() {
            let h = 1e-5 * x[k].abs().max(1.0);
            let (mut up, mut down) = (x.clone(), x.clone());
            up[k] += h;
            down[k] -= h;
            let fd = (compiled.loss(&up, margin) - compiled.loss(&down, margin)) / (2.0 * h);
            let err = (fd - grad[k]).abs() / grad[k].abs().max(fd.abs()).max(1.0);
            assert!(err <= 1e-6, "var {k}: analytic {} vs fd {fd}", grad[k]);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for seed in 0..5 {
            finite_difference_check(&build_const(&k4(), InteriorScope::AllOthers), seed);
        }
        finite_difference_check(&build_constsqu(&fan_triangulation(4), InteriorScope::AllOthers), 9);
    }

    #[test]
    fn initialize_k4() {
        let g = k4();
        let sys = build_const(&g, InteriorScope::AllOthers);
        let a = initialize(&g, &sys, &SolverConfig::default(), 0);
        assert_eq!(a.values.len(), 20);
        let pts: Vec<(f64, f64)> = (0..4).map(|v| a.point(v).unwrap()).collect();
        let centroid = ((pts[0].0 + pts[1].0 + pts[2].0) / 3.0, (pts[0].1 + pts[1].1 + pts[2].1) / 3.0);
        assert!(dist(pts[3], centroid) < 1e-9);
        assert!(min_pairwise_distance(&pts) >= 10.0 - 1e-9);
        assert_eq!(a, initialize(&g, &sys, &SolverConfig::default(), 0));
        assert_ne!(a, initialize(&g, &sys, &SolverConfig::default(), 1));
    }

    #[test]
    fn solve_k4_const() {
        let g = k4();
        let sys = build_const(&g, InteriorScope::AllOthers);
        let out = solve(&g, &sys, &SolverConfig::default());
        assert_eq!(out.status, SolveStatus::SatisfiedFloat);
        assert!(out.min_margin > 0.0);
        let again = solve(&g, &sys, &SolverConfig::default());
        assert_eq!(out, again);
    }

    #[test]
    fn accepted_steps_never_raise_the_loss() {
        let g = crate::instance::random_instance(9, 4, 1000).unwrap().graph;
        let sys = build_const(&g, InteriorScope::AllOthers);
        let compiled = Compiled::new(&sys);
        let x0 = compiled.to_vec(&initialize(&g, &sys, &SolverConfig::default(), 2)).unwrap();
        let mut last = f64::INFINITY;
        for cap in 0..60 {
            let config = SolverConfig { max_iterations: cap, ..SolverConfig::default() };
            let out = descend(&compiled, Flavor::Const, x0.clone(), &config, 0, None, None);
            if out.status == SolveStatus::SatisfiedFloat {
                break;
            }
            assert!(out.loss <= last, "cap {cap}: {} after {last}", out.loss);
            last = out.loss;
        }
    }

    #[test]
    fn zero_budget_is_exhausted() {
        let g = fan_triangulation(5);
        let sys = build_const(&g, InteriorScope::AllOthers);
        let config = SolverConfig { max_iterations: 0, restarts: 1, ..SolverConfig::default() };
        let compiled = Compiled::new(&sys);
        // a collapsed start violates every strict constraint
        let x = vec![0.0; compiled.variables.len()];
        let out = polish(&compiled, Flavor::Const, x, &config, 1.0, None);
        assert_eq!(out.status, SolveStatus::Exhausted);
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn rounding_stream() {
        let config = SolverConfig { denominators: vec![10, 1000], ..SolverConfig::default() };
        let mut a = Assignment::new(Flavor::Const);
        a.set(VarId::Px(0), 0.3333333333);
        a.set(VarId::Py(0), 2.5);
        let out: Vec<_> = round_candidates(&a, &config).collect();
        assert_eq!(out.len(), 2);
        for cand in &out {
            assert_eq!(cand.get(VarId::Px(0)), Some(&ratio(1, 3)));
            assert_eq!(cand.get(VarId::Py(0)), Some(&ratio(5, 2)));
        }
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        assert!(SolverConfig { denominators: vec![64, 1], ..Default::default() }.validate().is_err());
        assert!(SolverConfig { margin: Some(0.0), ..Default::default() }.validate().is_err());
    }
}
