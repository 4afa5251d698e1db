//! End-to-end realization: outer-face candidates, numeric search, lifting to
//! the stencil system, exact rounding, integer scaling and certification.
//!
//! Nothing is reported as realized unless [`certify`] accepted the exact
//! integer points.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::One;
use serde::Serialize;
use thiserror::Error;

use crate::constraints::{
    build_const, build_constsqu, evaluate, export_system, Assignment, ConstraintSystem, ExportFormat, Flavor,
    InteriorScope, VarId, STENCIL,
};
use crate::exact::{dist_sq, format_rat, Rat, RatPoint};
use crate::graph::{cyclic_eq, reversed_cycle, PlaneTriangulation, ValidationReport};
use crate::instance::{perturb_within_halfbox, witness_centers_from_faces};
use crate::oracle::{delaunay, OracleError, PositionIssue};
use crate::solver::{assignment_from_points, initialize, polish, solve_from, Compiled, SolveStatus, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealizeConfig {
    pub solver: SolverConfig,
    pub interior_scope: InteriorScope,
    pub allow_reflection: bool,
    /// Start the search at these positions instead of a Tutte drawing.
    pub warm_start: Option<Vec<(f64, f64)>>,
    /// Where to write the stencil system of each outer face when the answer is unknown.
    pub smt2_dir: Option<PathBuf>,
    /// Values of the scaled robustness radius tried when lifting, in order.
    pub lift_targets: Vec<f64>,
    /// Half-box perturbations tried when rounding lands on a cocircular set.
    pub perturbation_trials: usize,
    /// Iterations spent polishing a lifted assignment that fails exactly.
    pub polish_iterations: usize,
}

impl Default for RealizeConfig {
    fn default() -> Self {
        RealizeConfig {
            solver: SolverConfig::default(),
            interior_scope: InteriorScope::AllOthers,
            allow_reflection: true,
            warm_start: None,
            smt2_dir: None,
            lift_targets: vec![4.0, 16.0, 64.0, 1024.0],
            perturbation_trials: 32,
            polish_iterations: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RealizeStatus {
    Realized,
    Unknown,
    InvalidInput,
}

/// Integer points plus the exact checks they passed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RealizationCertificate {
    pub points: Vec<(BigInt, BigInt)>,
    /// Hull cycle of `points`, clockwise.
    pub outer_face: Vec<usize>,
    /// One disc centre per edge, in sorted edge order.
    pub witness_centers: Vec<((usize, usize), RatPoint)>,
    pub transcript: Vec<String>,
}

impl RealizationCertificate {
    pub fn rat_points(&self) -> Vec<RatPoint> {
        self.points.iter().map(|(x, y)| RatPoint::from_bigints(x.clone(), y.clone())).collect()
    }

    pub fn centers(&self) -> BTreeMap<(usize, usize), RatPoint> {
        self.witness_centers.iter().cloned().collect()
    }

    /// The points and witness centres as an exact `Const` assignment.
    pub fn const_assignment(&self) -> Assignment<Rat> {
        let mut a = Assignment::new(Flavor::Const);
        for (v, p) in self.rat_points().into_iter().enumerate() {
            a.set(VarId::Px(v), p.x);
            a.set(VarId::Py(v), p.y);
        }
        for ((i, j), c) in &self.witness_centers {
            a.set(VarId::Cx(*i, *j), c.x.clone());
            a.set(VarId::Cy(*i, *j), c.y.clone());
        }
        a
    }
}

/// One search attempt for one outer face.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Attempt {
    /// 1-based labels.
    pub outer_face: Vec<usize>,
    pub restart: usize,
    pub solve_status: SolveStatus,
    pub iterations: usize,
    pub loss: f64,
    pub min_margin: f64,
    pub stage: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lift_target: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub denominator: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub attempts: Vec<Attempt>,
    /// Best (largest) floating margin reached per outer face, 1-based labels.
    pub best_margins: Vec<(Vec<usize>, f64)>,
    pub smt2_paths: Vec<PathBuf>,
    /// Wall-clock time; left out of reports so they stay reproducible.
    #[serde(skip)]
    pub elapsed_secs: f64,
    pub timed_out: bool,
}

#[derive(Debug, Clone)]
pub struct RealizationResult {
    pub status: RealizeStatus,
    pub certificate: Option<RealizationCertificate>,
    pub validation: Option<ValidationReport>,
    pub diagnostics: Diagnostics,
    /// The graph re-embedded with the outer face that succeeded.
    pub graph: Option<PlaneTriangulation>,
    /// The exact stencil-system solution the certificate came from.
    pub constsqu_solution: Option<Assignment<Rat>>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CertifyError {
    #[error("expected {expected} points, got {got}")]
    PointCount { expected: usize, got: usize },
    #[error("points are not in general position: {0:?}")]
    NotGeneralPosition(Vec<PositionIssue>),
    #[error("Delaunay edges differ: missing {missing:?}, extra {extra:?}")]
    EdgeMismatch { missing: Vec<(usize, usize)>, extra: Vec<(usize, usize)> },
    #[error("hull cycle {found:?} does not match outer face {expected:?}")]
    HullMismatch { expected: Vec<usize>, found: Vec<usize> },
    #[error("no valid witness disc for edge {edge:?}")]
    WitnessFail { edge: (usize, usize) },
}

impl CertifyError {
    pub fn code(&self) -> &'static str {
        match self {
            CertifyError::PointCount { .. } => "POINT_COUNT",
            CertifyError::NotGeneralPosition(_) => "NOT_GENERAL_POSITION",
            CertifyError::EdgeMismatch { .. } => "EDGE_MISMATCH",
            CertifyError::HullMismatch { .. } => "HULL_MISMATCH",
            CertifyError::WitnessFail { .. } => "WITNESS_FAIL",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certification {
    pub transcript: Vec<String>,
    pub hull: Vec<usize>,
    pub witness_centers: Vec<((usize, usize), RatPoint)>,
}

/// Checks exactly that the Delaunay triangulation of `points` is `g` under
/// the identity labelling, with `g`'s outer face as the hull.
pub fn certify(g: &PlaneTriangulation, points: &[RatPoint], allow_reflection: bool) -> Result<Certification, CertifyError> {
    if points.len() != g.n() {
        return Err(CertifyError::PointCount { expected: g.n(), got: points.len() });
    }
    let mut transcript = Vec::new();
    let dt = delaunay(points).map_err(|OracleError::NotGeneralPosition(issues)| CertifyError::NotGeneralPosition(issues))?;
    transcript.push("GENERAL_POSITION".to_string());
    transcript.push(format!("DELAUNAY {} edges {} faces", dt.edges.len(), dt.faces.len()));

    let missing: Vec<(usize, usize)> = g.edges().iter().copied().filter(|&(a, b)| !dt.has_edge(a, b)).collect();
    let extra: Vec<(usize, usize)> = dt.edges.iter().copied().filter(|&(a, b)| !g.has_edge(a, b)).collect();
    if !missing.is_empty() || !extra.is_empty() {
        let one_based = |v: Vec<(usize, usize)>| v.into_iter().map(|(a, b)| (a + 1, b + 1)).collect();
        return Err(CertifyError::EdgeMismatch { missing: one_based(missing), extra: one_based(extra) });
    }
    transcript.push("EDGE_SET".to_string());

    let expected = g.outer_face();
    if cyclic_eq(expected, &dt.hull) {
        transcript.push("HULL_CYCLE".to_string());
    } else if allow_reflection && cyclic_eq(&reversed_cycle(expected), &dt.hull) {
        transcript.push("HULL_CYCLE MIRRORED".to_string());
    } else {
        return Err(CertifyError::HullMismatch {
            expected: expected.iter().map(|v| v + 1).collect(),
            found: dt.hull.iter().map(|v| v + 1).collect(),
        });
    }

    let centers = witness_centers_from_faces(&dt.edges, &dt.faces, points);
    let mut witnesses = Vec::with_capacity(dt.edges.len());
    for &(i, j) in &dt.edges {
        let Some(c) = centers.get(&(i, j)) else {
            return Err(CertifyError::WitnessFail { edge: (i + 1, j + 1) });
        };
        let r_sq = dist_sq(&points[i], c);
        let ok = dist_sq(&points[j], c) == r_sq
            && (0..points.len()).filter(|&k| k != i && k != j).all(|k| dist_sq(&points[k], c) > r_sq);
        if !ok {
            return Err(CertifyError::WitnessFail { edge: (i + 1, j + 1) });
        }
        witnesses.push(((i, j), c.clone()));
    }
    transcript.push(format!("WITNESS_DISCS {}", witnesses.len()));
    Ok(Certification { transcript, hull: dt.hull, witness_centers: witnesses })
}

/// Multiplies every coordinate by the least common multiple of the
/// denominators. Returns that factor and the integer points.
pub fn scale_to_integers(points: &[RatPoint]) -> (BigInt, Vec<(BigInt, BigInt)>) {
    let mut beta = BigInt::one();
    for p in points {
        beta = beta.lcm(p.x.denom()).lcm(p.y.denom());
    }
    let scaled = points
        .iter()
        .map(|p| {
            let x = (&p.x * Rat::from_integer(beta.clone())).to_integer();
            let y = (&p.y * Rat::from_integer(beta.clone())).to_integer();
            (x, y)
        })
        .collect();
    (beta, scaled)
}

fn points_of(a: &Assignment<Rat>, n: usize) -> Vec<RatPoint> {
    (0..n).map(|v| {
        let (x, y) = a.point(v).expect("assignment covers points");
        RatPoint::new(x, y)
    })
    .collect()
}

fn float_points(a: &Assignment<f64>, n: usize) -> Vec<(f64, f64)> {
    (0..n).map(|v| a.point(v).expect("assignment covers points")).collect()
}

/// The three separation distances of a floating `Const` solution, combined
/// into a robustness radius as in the exact [`crate::instance::radius_bounds`].
fn float_radius(g: &PlaneTriangulation, a: &Assignment<f64>) -> f64 {
    let p = float_points(a, g.n());
    let d = |u: (f64, f64), v: (f64, f64)| (u.0 - v.0).hypot(u.1 - v.1);
    let mut best = f64::INFINITY;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            best = best.min(d(p[i], p[j]));
        }
    }
    for &(i, j) in g.edges() {
        let c = (a.values[&VarId::Cx(i, j)], a.values[&VarId::Cy(i, j)]);
        let rho = d(p[i], c).max(d(p[j], c));
        for k in (0..p.len()).filter(|&k| k != i && k != j) {
            best = best.min(d(p[k], c) - rho);
        }
    }
    let outer = g.outer_face();
    for t in 0..outer.len() {
        let (i, j) = (outer[t], outer[(t + 1) % outer.len()]);
        let len = d(p[i], p[j]);
        for k in (0..p.len()).filter(|&k| k != i && k != j) {
            let (a, b, c) = (p[i], p[k], p[j]);
            let area = c.0 * b.1 - c.0 * a.1 - a.0 * b.1 - b.0 * c.1 + b.0 * a.1 + a.0 * c.1;
            best = best.min(area.abs() / len);
        }
    }
    best / 3.0
}

/// Scales a `Const` solution so its robustness radius equals `target` and
/// picks each disc radius halfway between the stencil points it must hold
/// and the nearest stencil point it must exclude.
fn lift(g: &PlaneTriangulation, a: &Assignment<f64>, target: f64) -> Option<Assignment<f64>> {
    let r = float_radius(g, a);
    if !(r > 0.0 && r.is_finite()) {
        return None;
    }
    let alpha = target / r;
    let p: Vec<(f64, f64)> = float_points(a, g.n()).iter().map(|&(x, y)| (alpha * x, alpha * y)).collect();
    let mut out = Assignment::new(Flavor::ConstSqu);
    for (v, &(x, y)) in p.iter().enumerate() {
        out.set(VarId::Px(v), x);
        out.set(VarId::Py(v), y);
    }
    let pts = &p;
    let stencil_dist = |v: usize, c: (f64, f64)| {
        STENCIL.iter().map(move |&(dx, dy)| (pts[v].0 + dx as f64 - c.0).hypot(pts[v].1 + dy as f64 - c.1))
    };
    for &(i, j) in g.edges() {
        let c = (alpha * a.values[&VarId::Cx(i, j)], alpha * a.values[&VarId::Cy(i, j)]);
        let inner = stencil_dist(i, c).chain(stencil_dist(j, c)).fold(0.0, f64::max);
        let outer = (0..g.n())
            .filter(|&k| k != i && k != j)
            .flat_map(|k| stencil_dist(k, c))
            .fold(f64::INFINITY, f64::min);
        out.set(VarId::Cx(i, j), c.0);
        out.set(VarId::Cy(i, j), c.1);
        out.set(VarId::R(i, j), (inner + outer) / 2.0);
    }
    Some(out)
}

enum Exact {
    Certified(RealizationCertificate, Assignment<Rat>),
    Failed(String),
}

struct FaceRun {
    graph: PlaneTriangulation,
    const_system: ConstraintSystem,
    squ_system: Option<ConstraintSystem>,
    best_margin: f64,
}

impl FaceRun {
    fn squ(&mut self, scope: InteriorScope) -> &ConstraintSystem {
        let g = &self.graph;
        self.squ_system.get_or_insert_with(|| build_constsqu(g, scope))
    }
}

fn certify_rounded(
    g: &PlaneTriangulation,
    exact: &Assignment<Rat>,
    config: &RealizeConfig,
    salt: u64,
) -> Result<RealizationCertificate, String> {
    let points = points_of(exact, g.n());
    let attempt = |pts: &[RatPoint]| -> Result<RealizationCertificate, CertifyError> {
        let (_, ints) = scale_to_integers(pts);
        let rat: Vec<RatPoint> = ints.iter().map(|(x, y)| RatPoint::from_bigints(x.clone(), y.clone())).collect();
        let cert = certify(g, &rat, config.allow_reflection)?;
        Ok(RealizationCertificate {
            points: ints,
            outer_face: cert.hull,
            witness_centers: cert.witness_centers,
            transcript: cert.transcript,
        })
    };
    match attempt(&points) {
        Ok(c) => Ok(c),
        Err(CertifyError::NotGeneralPosition(_)) => {
            // Exact stencil solutions keep their triangulation under half-unit
            // moves, so a seeded nudge breaks accidental cocircularity.
            let seed = config.solver.seed ^ salt.rotate_left(17);
            for trial in perturb_within_halfbox(&points, seed, config.perturbation_trials).into_iter().skip(8) {
                if let Ok(c) = attempt(&trial) {
                    return Ok(c);
                }
            }
            Err("CERTIFY_FAILED NOT_GENERAL_POSITION after perturbation".into())
        }
        Err(e) => Err(format!("CERTIFY_FAILED {}", e.code())),
    }
}

fn try_exact(run: &mut FaceRun, lifted: &Assignment<f64>, config: &RealizeConfig, salt: u64) -> (Exact, Option<u64>) {
    let scope = config.interior_scope;
    let squ = run.squ(scope).clone();
    let mut last = String::from("ROUNDING_FAILED");
    for (candidate, &den) in crate::solver::round_candidates(lifted, &config.solver).zip(&config.solver.denominators) {
        let Ok(report) = evaluate(&squ, &candidate) else { continue };
        if !report.all_satisfied {
            continue;
        }
        match certify_rounded(&run.graph, &candidate, config, salt) {
            Ok(cert) => return (Exact::Certified(cert, candidate), Some(den)),
            Err(stage) => last = stage,
        }
    }
    (Exact::Failed(last), None)
}

fn attempt_face(
    run: &mut FaceRun,
    restart: usize,
    config: &RealizeConfig,
    deadline: Instant,
    warm: Option<&[(f64, f64)]>,
) -> (Attempt, Option<(RealizationCertificate, Assignment<Rat>)>) {
    let start = match warm {
        Some(points) => assignment_from_points(&run.graph, &run.const_system, points),
        None => initialize(&run.graph, &run.const_system, &config.solver, restart),
    };
    let outcome = solve_from(&run.const_system, &start, &config.solver, restart, Some(deadline))
        .expect("start assignment covers the system");
    run.best_margin = run.best_margin.max(outcome.min_margin);
    let mut attempt = Attempt {
        outer_face: run.graph.outer_face().iter().map(|v| v + 1).collect(),
        restart,
        solve_status: outcome.status,
        iterations: outcome.iterations,
        loss: outcome.loss,
        min_margin: outcome.min_margin,
        stage: "SOLVE_EXHAUSTED".into(),
        lift_target: None,
        denominator: None,
    };
    if outcome.status != SolveStatus::SatisfiedFloat {
        return (attempt, None);
    }
    let salt = restart as u64;
    let mut first_lift = None;
    for &target in &config.lift_targets {
        if Instant::now() >= deadline {
            attempt.stage = "TIMEOUT".into();
            return (attempt, None);
        }
        let Some(lifted) = lift(&run.graph, &outcome.assignment, target) else {
            attempt.stage = "LIFT_DEGENERATE".into();
            return (attempt, None);
        };
        attempt.lift_target = Some(target);
        match try_exact(run, &lifted, config, salt) {
            (Exact::Certified(cert, exact), den) => {
                attempt.stage = "CERTIFIED".into();
                attempt.denominator = den;
                return (attempt, Some((cert, exact)));
            }
            (Exact::Failed(stage), _) => attempt.stage = stage,
        }
        first_lift.get_or_insert(lifted);
    }
    // Last resort: descend on the stencil system itself from the first lift.
    if let Some(lifted) = first_lift {
        let squ = run.squ(config.interior_scope).clone();
        let compiled = Compiled::new(&squ);
        let x = compiled.to_vec(&lifted).expect("lift covers the stencil system");
        let solver = SolverConfig { max_iterations: config.polish_iterations, ..config.solver.clone() };
        let polished = polish(&compiled, Flavor::ConstSqu, x, &solver, 1.0, Some(deadline));
        if polished.status == SolveStatus::SatisfiedFloat {
            attempt.lift_target = None;
            if let (Exact::Certified(cert, exact), den) = try_exact(run, &polished.assignment, config, salt) {
                attempt.stage = "CERTIFIED_AFTER_POLISH".into();
                attempt.denominator = den;
                return (attempt, Some((cert, exact)));
            }
            attempt.stage = "POLISH_ROUNDING_FAILED".into();
        }
    }
    (attempt, None)
}

fn triangle_certificate(g: &PlaneTriangulation, config: &RealizeConfig) -> Option<RealizationCertificate> {
    let f = g.outer_face();
    let mut raw = vec![(0i64, 0i64); 3];
    raw[f[0]] = (0, 0);
    raw[f[1]] = (0, 1);
    raw[f[2]] = (1, 0);
    let points: Vec<RatPoint> = raw.iter().map(|&(x, y)| RatPoint::from_ints(x, y)).collect();
    let cert = certify(g, &points, config.allow_reflection).ok()?;
    Some(RealizationCertificate {
        points: raw.iter().map(|&(x, y)| (BigInt::from(x), BigInt::from(y))).collect(),
        outer_face: cert.hull,
        witness_centers: cert.witness_centers,
        transcript: cert.transcript,
    })
}

fn write_smt2(runs: &mut [FaceRun], config: &RealizeConfig) -> Vec<PathBuf> {
    let Some(dir) = &config.smt2_dir else { return Vec::new() };
    let mut paths = Vec::new();
    if std::fs::create_dir_all(dir).is_err() {
        return paths;
    }
    for (k, run) in runs.iter_mut().enumerate() {
        let text = export_system(run.squ(config.interior_scope), ExportFormat::Smt2);
        let path = dir.join(format!("constsqu_face{}.smt2", k + 1));
        if std::fs::write(&path, text).is_ok() {
            paths.push(path);
        }
    }
    paths
}

/// Searches for integer points whose Delaunay triangulation is `g`.
pub fn realize(g: &PlaneTriangulation, config: &RealizeConfig) -> RealizationResult {
    let started = Instant::now();
    let deadline = started + Duration::from_secs_f64(config.solver.time_budget_secs.max(0.0));
    let mut diagnostics = Diagnostics {
        attempts: Vec::new(),
        best_margins: Vec::new(),
        smt2_paths: Vec::new(),
        elapsed_secs: 0.0,
        timed_out: false,
    };
    let report = g.validate();
    if !report.ok {
        return RealizationResult {
            status: RealizeStatus::InvalidInput,
            certificate: None,
            validation: Some(report),
            diagnostics,
            graph: None,
            constsqu_solution: None,
        };
    }
    if g.n() == 3 {
        let cert = triangle_certificate(g, config);
        return RealizationResult {
            status: if cert.is_some() { RealizeStatus::Realized } else { RealizeStatus::Unknown },
            certificate: cert,
            validation: Some(report),
            diagnostics,
            graph: Some(g.clone()),
            constsqu_solution: None,
        };
    }

    let mut runs: Vec<FaceRun> = g
        .candidate_outer_faces()
        .iter()
        .filter_map(|f| g.reembed_with_outer_face(f).ok())
        .map(|graph| FaceRun {
            const_system: build_const(&graph, config.interior_scope),
            graph,
            squ_system: None,
            best_margin: f64::NEG_INFINITY,
        })
        .collect();

    let rounds = config.solver.restarts.max(1);
    'rounds: for restart in 0..rounds {
        for face in 0..runs.len() {
            if Instant::now() >= deadline {
                diagnostics.timed_out = true;
                break 'rounds;
            }
            let warm = if face == 0 && restart == 0 { config.warm_start.as_deref() } else { None };
            let (attempt, success) = attempt_face(&mut runs[face], restart, config, deadline, warm);
            diagnostics.attempts.push(attempt);
            if let Some((cert, exact)) = success {
                diagnostics.best_margins = runs
                    .iter()
                    .map(|r| (r.graph.outer_face().iter().map(|v| v + 1).collect(), r.best_margin))
                    .collect();
                diagnostics.elapsed_secs = started.elapsed().as_secs_f64();
                return RealizationResult {
                    status: RealizeStatus::Realized,
                    certificate: Some(cert),
                    validation: Some(report),
                    diagnostics,
                    graph: Some(runs[face].graph.clone()),
                    constsqu_solution: Some(exact),
                };
            }
        }
    }
    diagnostics.best_margins = runs
        .iter()
        .map(|r| (r.graph.outer_face().iter().map(|v| v + 1).collect(), r.best_margin))
        .collect();
    diagnostics.smt2_paths = write_smt2(&mut runs, config);
    diagnostics.elapsed_secs = started.elapsed().as_secs_f64();
    RealizationResult {
        status: RealizeStatus::Unknown,
        certificate: None,
        validation: Some(report),
        diagnostics,
        graph: None,
        constsqu_solution: None,
    }
}

/// Text form of a rational, for reports.
pub fn rat_text(value: &Rat) -> String {
    format_rat(value)
}
