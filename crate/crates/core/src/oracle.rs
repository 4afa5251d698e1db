//! Brute-force exact Delaunay triangulation and general-position checks.
//!
//! A triple is a Delaunay face exactly when its circumdisc contains no other
//! point; with no four points cocircular these triangles tile the hull.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::exact::{convex_hull, PointFrame, RatPoint};
use crate::graph::{GraphError, PlaneTriangulation};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PositionIssue {
    DuplicatePoint { first: usize, second: usize },
    AllCollinear,
    CocircularQuad { points: [usize; 4] },
    BoundaryCollinear { point: usize },
    TooFewPoints,
}

impl PositionIssue {
    pub fn code(&self) -> &'static str {
        match self {
            PositionIssue::DuplicatePoint { .. } => "DUPLICATE_POINT",
            PositionIssue::AllCollinear => "ALL_COLLINEAR",
            PositionIssue::CocircularQuad { .. } => "COCIRCULAR_QUAD",
            PositionIssue::BoundaryCollinear { .. } => "BOUNDARY_COLLINEAR",
            PositionIssue::TooFewPoints => "TOO_FEW_POINTS",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PositionReport {
    pub ok: bool,
    pub issues: Vec<PositionIssue>,
}

impl PositionReport {
    pub fn has(&self, code: &str) -> bool {
        self.issues.iter().any(|i| i.code() == code)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("points are not in general position: {0:?}")]
    NotGeneralPosition(Vec<PositionIssue>),
}

impl OracleError {
    pub fn code(&self) -> &'static str {
        "NOT_GENERAL_POSITION"
    }
}

/// Reports every duplicate, a fully collinear set, every cocircular
/// quadruple, and points sitting on a hull edge. Stops collecting cocircular
/// quadruples after `MAX_QUADS` to bound report size.
pub fn general_position_check(points: &[RatPoint]) -> PositionReport {
    const MAX_QUADS: usize = 64;
    let mut issues = Vec::new();
    if points.len() < 3 {
        issues.push(PositionIssue::TooFewPoints);
        return PositionReport { ok: false, issues };
    }
    let frame = PointFrame::new(points);
    let n = points.len();
    for i in 0..n {
        for j in i + 1..n {
            if frame.same(i, j) {
                issues.push(PositionIssue::DuplicatePoint { first: i, second: j });
            }
        }
    }
    match convex_hull(points) {
        Err(_) => issues.push(PositionIssue::AllCollinear),
        Ok(hull) => issues.extend(
            hull.boundary_collinear
                .into_iter()
                .map(|point| PositionIssue::BoundaryCollinear { point }),
        ),
    }
    if !issues.is_empty() {
        return PositionReport { ok: false, issues };
    }
    let mut quads = 0;
    'outer: for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if frame.orient(i, j, k) == 0 {
                    continue;
                }
                for l in k + 1..n {
                    if frame.in_circle(i, j, k, l) == Some(0) {
                        issues.push(PositionIssue::CocircularQuad { points: [i, j, k, l] });
                        quads += 1;
                        if quads >= MAX_QUADS {
                            break 'outer;
                        }
                    }
                }
            }
        }
    }
    PositionReport { ok: issues.is_empty(), issues }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DelaunayResult {
    /// `(i, j)` with `i < j`, sorted.
    pub edges: Vec<(usize, usize)>,
    /// Sorted index triples of the bounded faces.
    pub faces: Vec<[usize; 3]>,
    /// Clockwise hull cycle.
    pub hull: Vec<usize>,
    pub general_position: bool,
}

impl DelaunayResult {
    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.binary_search(&(a.min(b), a.max(b))).is_ok()
    }

    /// Faces containing both endpoints of an edge.
    pub fn faces_of_edge(&self, a: usize, b: usize) -> Vec<[usize; 3]> {
        self.faces
            .iter()
            .filter(|f| f.contains(&a) && f.contains(&b))
            .copied()
            .collect()
    }
}

pub fn delaunay(points: &[RatPoint]) -> Result<DelaunayResult, OracleError> {
    let report = general_position_check(points);
    if !report.ok {
        return Err(OracleError::NotGeneralPosition(report.issues));
    }
    let hull = convex_hull(points).expect("checked above").cycle;
    let frame = PointFrame::new(points);
    let n = points.len();
    let mut faces = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if frame.orient(i, j, k) == 0 {
                    continue;
                }
                let empty = (0..n)
                    .filter(|&q| q != i && q != j && q != k)
                    .all(|q| frame.in_circle(i, j, k, q) == Some(-1));
                if empty {
                    faces.push([i, j, k]);
                }
            }
        }
    }
    let edges: BTreeSet<(usize, usize)> = faces
        .iter()
        .flat_map(|f| [(f[0], f[1]), (f[0], f[2]), (f[1], f[2])])
        .collect();
    Ok(DelaunayResult {
        edges: edges.into_iter().collect(),
        faces,
        hull,
        general_position: true,
    })
}

/// The Delaunay triangulation as a plane graph with identity labels.
pub fn as_plane_triangulation(result: &DelaunayResult, points: &[RatPoint]) -> Result<PlaneTriangulation, GraphError> {
    PlaneTriangulation::from_points(points, &result.edges, result.hull.clone())
}
