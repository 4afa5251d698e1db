//! Combinatorial plane triangulations given by a rotation system.
//!
//! Vertices are `0..n` internally; file formats use the labels `1..=n`.
//! `rotation[v]` lists the neighbours of `v` in counterclockwise order. A face
//! is traced by keeping the face on the left of each dart, so inner faces come
//! out counterclockwise and the outer face comes out clockwise.

use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::exact::{orientation, RatPoint};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("rotation has {got} entries but n = {n}")]
    RotationSize { n: usize, got: usize },
    #[error("vertex label {0} is out of range")]
    LabelOutOfRange(usize),
    #[error("vertex {0} lists neighbour {1} more than once")]
    DuplicateNeighbor(usize, usize),
    #[error("vertex {0} lists itself as a neighbour")]
    SelfLoop(usize),
    #[error("edge ({0}, {1}) has no reciprocal entry")]
    AsymmetricEdge(usize, usize),
    #[error("graph is not connected")]
    NotConnected,
    #[error("face {0:?} is not a face of the embedding")]
    FaceNotFound(Vec<usize>),
    #[error("barycentric system is numerically singular")]
    SingularSystem,
}

impl GraphError {
    pub fn code(&self) -> &'static str {
        match self {
            GraphError::RotationSize { .. } => "ROTATION_SIZE",
            GraphError::LabelOutOfRange(_) => "LABEL_OUT_OF_RANGE",
            GraphError::DuplicateNeighbor(..) => "DUPLICATE_NEIGHBOR",
            GraphError::SelfLoop(_) => "SELF_LOOP",
            GraphError::AsymmetricEdge(..) => "ASYMMETRIC_EDGE",
            GraphError::NotConnected => "NOT_CONNECTED",
            GraphError::FaceNotFound(_) => "FACE_NOT_FOUND",
            GraphError::SingularSystem => "SINGULAR_SYSTEM",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Rule {
    TooFewVertices,
    NotConnected,
    OuterFaceNotFound,
    FaceNotCycle,
    NontriangularInnerFace,
    Degree2Interior,
    EulerMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub rule: Rule,
    pub message: String,
    /// Offending vertices as 1-based labels.
    pub vertices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn has(&self, rule: Rule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaneTriangulation {
    n: usize,
    rotation: Vec<Vec<usize>>,
    outer_face: Vec<usize>,
    edges: Vec<(usize, usize)>,
    faces: Vec<Vec<usize>>,
    reflected: bool,
}

/// Rotate a cycle so that its smallest vertex comes first, keeping direction.
pub fn canonical_cycle(cycle: &[usize]) -> Vec<usize> {
    match cycle.iter().enumerate().min_by_key(|(_, v)| **v) {
        Some((start, _)) => cycle[start..].iter().chain(&cycle[..start]).copied().collect(),
        None => Vec::new(),
    }
}

/// Same cyclic sequence, same direction.
pub fn cyclic_eq(a: &[usize], b: &[usize]) -> bool {
    a.len() == b.len() && canonical_cycle(a) == canonical_cycle(b)
}

pub fn reversed_cycle(cycle: &[usize]) -> Vec<usize> {
    cycle.iter().rev().copied().collect()
}

fn check_rotation(rotation: &[Vec<usize>]) -> Result<(), GraphError> {
    let n = rotation.len();
    for (v, nbrs) in rotation.iter().enumerate() {
        let mut seen = BTreeSet::new();
        for &u in nbrs {
            if u >= n {
                return Err(GraphError::LabelOutOfRange(u + 1));
            }
            if u == v {
                return Err(GraphError::SelfLoop(v + 1));
            }
            if !seen.insert(u) {
                return Err(GraphError::DuplicateNeighbor(v + 1, u + 1));
            }
        }
    }
    for (v, nbrs) in rotation.iter().enumerate() {
        for &u in nbrs {
            if !rotation[u].contains(&v) {
                return Err(GraphError::AsymmetricEdge(v + 1, u + 1));
            }
        }
    }
    Ok(())
}

fn is_connected(rotation: &[Vec<usize>]) -> bool {
    if rotation.is_empty() {
        return true;
    }
    let mut seen = vec![false; rotation.len()];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(v) = queue.pop_front() {
        for &u in &rotation[v] {
            if !seen[u] {
                seen[u] = true;
                queue.push_back(u);
            }
        }
    }
    seen.iter().all(|&s| s)
}

/// Traces every face of a symmetric rotation system. Each dart is used once.
fn trace_faces(rotation: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let position = |v: usize, u: usize| rotation[v].iter().position(|&w| w == u).unwrap();
    let mut used: Vec<Vec<bool>> = rotation.iter().map(|r| vec![false; r.len()]).collect();
    let mut faces = Vec::new();
    for start in 0..rotation.len() {
        for slot in 0..rotation[start].len() {
            if used[start][slot] {
                continue;
            }
            let mut face = Vec::new();
            let (mut u, mut s) = (start, slot);
            while !used[u][s] {
                used[u][s] = true;
                face.push(u);
                let v = rotation[u][s];
                let back = position(v, u);
                let deg = rotation[v].len();
                // clockwise neighbour of u around v
                let next = (back + deg - 1) % deg;
                u = v;
                s = next;
            }
            faces.push(canonical_cycle(&face));
        }
    }
    faces.sort();
    faces
}

/// Face cycles of a rotation system.
pub fn faces_from_rotation(rotation: &[Vec<usize>]) -> Result<Vec<Vec<usize>>, GraphError> {
    check_rotation(rotation)?;
    if !is_connected(rotation) {
        return Err(GraphError::NotConnected);
    }
    Ok(trace_faces(rotation))
}

/// Rebuilds the rotation system implied by a face list produced by [`faces_from_rotation`].
pub fn rotation_from_faces(n: usize, faces: &[Vec<usize>]) -> Vec<Vec<usize>> {
    // a face (.., u, v, w, ..) says that u follows w counterclockwise around v
    let mut succ: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for face in faces {
        let len = face.len();
        for k in 0..len {
            let (u, v, w) = (face[k], face[(k + 1) % len], face[(k + 2) % len]);
            succ[v].push((w, u));
        }
    }
    succ.into_iter()
        .map(|pairs| {
            if pairs.is_empty() {
                return Vec::new();
            }
            let first = pairs.iter().map(|p| p.0).min().unwrap();
            let mut order = vec![first];
            let mut cur = first;
            loop {
                let next = pairs.iter().find(|p| p.0 == cur).map(|p| p.1).unwrap();
                if next == first || order.len() > pairs.len() {
                    break;
                }
                order.push(next);
                cur = next;
            }
            order
        })
        .collect()
}

fn canonical_rotation(rotation: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    rotation.into_iter().map(|r| canonical_cycle(&r)).collect()
}

/// Counterclockwise neighbour order induced by a straight-line drawing.
pub fn rotation_from_points(points: &[RatPoint], edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut nbrs: Vec<Vec<usize>> = vec![Vec::new(); points.len()];
    for &(a, b) in edges {
        nbrs[a].push(b);
        nbrs[b].push(a);
    }
    let zero = num_traits::Zero::zero;
    for (v, list) in nbrs.iter_mut().enumerate() {
        let origin = &points[v];
        let upper = |u: usize| {
            let dy = &points[u].y - &origin.y;
            let dx = &points[u].x - &origin.x;
            dy > zero() || (dy == zero() && dx > zero())
        };
        list.sort_by(|&a, &b| {
            upper(b).cmp(&upper(a)).then_with(|| {
                // same half plane: a before b when b is counterclockwise of a
                0.cmp(&orientation(origin, &points[a], &points[b]))
            })
        });
        *list = canonical_cycle(list);
    }
    nbrs
}

impl PlaneTriangulation {
    /// Builds a plane graph from a counterclockwise rotation system and a
    /// clockwise outer face. An outer face that only matches in reverse is
    /// accepted by reflecting the whole embedding.
    pub fn new(n: usize, rotation: Vec<Vec<usize>>, outer_face: Vec<usize>) -> Result<Self, GraphError> {
        if rotation.len() != n {
            return Err(GraphError::RotationSize { n, got: rotation.len() });
        }
        check_rotation(&rotation)?;
        if let Some(&bad) = outer_face.iter().find(|&&v| v >= n) {
            return Err(GraphError::LabelOutOfRange(bad + 1));
        }
        let mut rotation = canonical_rotation(rotation);
        let mut faces = trace_faces(&rotation);
        let mut reflected = false;
        if !faces.iter().any(|f| cyclic_eq(f, &outer_face))
            && faces.iter().any(|f| cyclic_eq(f, &reversed_cycle(&outer_face)))
        {
            rotation = canonical_rotation(rotation.into_iter().map(|r| reversed_cycle(&r)).collect());
            faces = trace_faces(&rotation);
            reflected = true;
        }
        let mut edges: Vec<(usize, usize)> = rotation
            .iter()
            .enumerate()
            .flat_map(|(v, r)| r.iter().filter(move |&&u| v < u).map(move |&u| (v, u)))
            .collect();
        edges.sort();
        Ok(PlaneTriangulation {
            n,
            rotation,
            outer_face: canonical_cycle(&outer_face),
            edges,
            faces,
            reflected,
        })
    }

    /// Straight-line drawing with the given clockwise outer face.
    pub fn from_points(points: &[RatPoint], edges: &[(usize, usize)], outer_face: Vec<usize>) -> Result<Self, GraphError> {
        PlaneTriangulation::new(points.len(), rotation_from_points(points, edges), outer_face)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rotation(&self) -> &[Vec<usize>] {
        &self.rotation
    }

    pub fn outer_face(&self) -> &[usize] {
        &self.outer_face
    }

    /// Undirected edges `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Every face of the embedding, outer face included.
    pub fn faces(&self) -> &[Vec<usize>] {
        &self.faces
    }

    /// True when the input outer face only matched after mirroring the rotation.
    pub fn was_reflected(&self) -> bool {
        self.reflected
    }

    pub fn degree(&self, v: usize) -> usize {
        self.rotation[v].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        let key = (a.min(b), a.max(b));
        self.edges.binary_search(&key).is_ok()
    }

    pub fn is_outer(&self, face: &[usize]) -> bool {
        cyclic_eq(face, &self.outer_face)
    }

    pub fn inner_faces(&self) -> Vec<&[usize]> {
        self.faces
            .iter()
            .filter(|f| !self.is_outer(f))
            .map(|f| f.as_slice())
            .collect()
    }

    /// SHA-256 over the canonical rotation system and outer face.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        hasher.update(format!("n={};", self.n));
        for (v, r) in self.rotation.iter().enumerate() {
            hasher.update(format!("{v}:{r:?};"));
        }
        hasher.update(format!("outer:{:?}", self.outer_face));
        hex::encode(hasher.finalize())
    }

    pub fn is_maximal(&self) -> bool {
        self.faces.iter().all(|f| f.len() == 3)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let mut push = |rule: Rule, message: String, vertices: Vec<usize>| {
            violations.push(Violation {
                rule,
                message,
                vertices: vertices.into_iter().map(|v| v + 1).collect(),
            })
        };
        if self.n < 3 {
            push(Rule::TooFewVertices, format!("need at least 3 vertices, got {}", self.n), vec![]);
        }
        if !is_connected(&self.rotation) {
            let isolated: Vec<usize> = (0..self.n).filter(|&v| self.rotation[v].is_empty()).collect();
            push(Rule::NotConnected, "graph is not connected".into(), isolated);
        }
        let outer_found = self.faces.iter().any(|f| self.is_outer(f));
        if !outer_found {
            push(
                Rule::OuterFaceNotFound,
                "outer face is not a face of the embedding".into(),
                self.outer_face.clone(),
            );
        }
        for face in &self.faces {
            let distinct: BTreeSet<usize> = face.iter().copied().collect();
            if distinct.len() != face.len() {
                push(Rule::FaceNotCycle, "face boundary repeats a vertex".into(), face.clone());
            } else if face.len() != 3 && !self.is_outer(face) {
                push(
                    Rule::NontriangularInnerFace,
                    format!("inner face has {} vertices", face.len()),
                    face.clone(),
                );
            }
        }
        for v in 0..self.n {
            if self.degree(v) == 2 && !self.outer_face.contains(&v) {
                push(Rule::Degree2Interior, "degree-2 vertex is not on the outer face".into(), vec![v]);
            }
        }
        let euler = self.n as i64 - self.edges.len() as i64 + self.faces.len() as i64;
        if euler != 2 {
            push(
                Rule::EulerMismatch,
                format!("V - E + F = {euler}, expected 2"),
                vec![],
            );
        }
        ValidationReport { ok: violations.is_empty(), violations }
    }

    /// Faces that may serve as the outer face of a realization.
    pub fn candidate_outer_faces(&self) -> Vec<Vec<usize>> {
        if self.outer_face.len() >= 4 || !self.is_maximal() {
            return vec![self.outer_face.clone()];
        }
        let mut out = vec![self.outer_face.clone()];
        out.extend(self.faces.iter().filter(|f| !self.is_outer(f)).cloned());
        out
    }

    /// Same rotation system with `face` declared as the outer face.
    pub fn reembed_with_outer_face(&self, face: &[usize]) -> Result<Self, GraphError> {
        let found = self
            .faces
            .iter()
            .find(|f| cyclic_eq(f, face) || cyclic_eq(f, &reversed_cycle(face)))
            .ok_or_else(|| GraphError::FaceNotFound(face.iter().map(|v| v + 1).collect()))?;
        let mut out = self.clone();
        out.outer_face = found.clone();
        Ok(out)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// K4 drawn as triangle 0,1,2 (clockwise) around vertex 3.
    pub fn k4() -> PlaneTriangulation {
        // positions: 0=(0,0) 1=(0,3) 2=(3,0) 3=(1,1); clockwise outer 0,1,2
        let rotation = vec![vec![2, 3, 1], vec![0, 3, 2], vec![1, 3, 0], vec![0, 2, 1]];
        PlaneTriangulation::new(4, rotation, vec![0, 1, 2]).unwrap()
    }

    /// Quadrilateral 0,1,2,3 (clockwise) with diagonal 0-2.
    pub fn quad_diag() -> PlaneTriangulation {
        // 0=(0,0) 1=(0,1) 2=(1,1) 3=(1,0)
        let rotation = vec![vec![3, 2, 1], vec![0, 2], vec![1, 0, 3], vec![2, 0]];
        PlaneTriangulation::new(4, rotation, vec![0, 1, 2, 3]).unwrap()
    }

    #[test]
    fn k4_faces() {
        let g = k4();
        assert_eq!(g.faces().len(), 4);
        assert!(g.faces().iter().all(|f| f.len() == 3));
        assert!(g.validate().ok, "{:?}", g.validate());
        assert!(!g.was_reflected());
    }

    #[test]
    fn quad_with_chord_faces() {
        let g = quad_diag();
        let faces = faces_from_rotation(g.rotation()).unwrap();
        assert_eq!(faces.len(), 3);
        assert!(faces.contains(&vec![0, 1, 2, 3]));
        let tri: Vec<_> = faces.iter().filter(|f| f.len() == 3).collect();
        assert_eq!(tri.len(), 2);
        let sets: Vec<BTreeSet<usize>> = tri.iter().map(|f| f.iter().copied().collect()).collect();
        assert!(sets.contains(&BTreeSet::from([0, 1, 2])));
        assert!(sets.contains(&BTreeSet::from([0, 2, 3])));
        assert!(g.validate().ok);
        assert_eq!(g.candidate_outer_faces(), vec![vec![0, 1, 2, 3]]);
    }

    #[test]
    fn asymmetric_rotation_rejected() {
        let rotation = vec![vec![1, 2], vec![2], vec![0, 1]];
        assert_eq!(faces_from_rotation(&rotation), Err(GraphError::AsymmetricEdge(1, 2)));
        assert_eq!(
            PlaneTriangulation::new(3, rotation, vec![0, 1, 2]).unwrap_err().code(),
            "ASYMMETRIC_EDGE"
        );
    }

    #[test]
    fn disconnected_rotation() {
        let rotation = vec![vec![1], vec![0], vec![3], vec![2]];
        assert_eq!(faces_from_rotation(&rotation), Err(GraphError::NotConnected));
        let g = PlaneTriangulation::new(4, rotation, vec![0, 1]).unwrap();
        assert!(g.validate().has(Rule::NotConnected));
    }

    #[test]
    fn malformed_labels() {
        assert_eq!(
            PlaneTriangulation::new(2, vec![vec![5], vec![]], vec![0, 1]),
            Err(GraphError::LabelOutOfRange(6))
        );
        assert_eq!(
            PlaneTriangulation::new(2, vec![vec![1, 1], vec![0]], vec![0, 1]),
            Err(GraphError::DuplicateNeighbor(1, 2))
        );
    }

    #[test]
    fn interior_degree_two_flagged() {
        // triangle 0,1,2 with vertex 3 inside joined to 0 and 1 only
        // 0=(0,0) 1=(0,3) 2=(3,0) 3=(1,1)
        let rotation = vec![vec![2, 3, 1], vec![0, 3, 2], vec![1, 0], vec![0, 1]];
        let g = PlaneTriangulation::new(4, rotation, vec![0, 1, 2]).unwrap();
        let report = g.validate();
        assert!(!report.ok);
        assert!(report.has(Rule::Degree2Interior));
        let v = report.violations.iter().find(|v| v.rule == Rule::Degree2Interior).unwrap();
        assert_eq!(v.vertices, vec![4]);
    }

    #[test]
    fn reflected_input_is_normalized() {
        let g = k4();
        // counterclockwise outer face
        let h = PlaneTriangulation::new(4, g.rotation().to_vec(), vec![0, 2, 1]).unwrap();
        assert!(h.was_reflected());
        assert!(h.validate().ok);
        assert_eq!(h.edges(), g.edges());
    }

    #[test]
    fn k4_candidates_and_reembed() {
        let g = k4();
        let cands = g.candidate_outer_faces();
        assert_eq!(cands.len(), 4);
        assert_eq!(cands[0], g.outer_face().to_vec());
        let target = cands.iter().find(|f| f.contains(&3) && f.contains(&0) && f.contains(&1)).unwrap();
        let h = g.reembed_with_outer_face(target).unwrap();
        assert!(h.validate().ok);
        assert_eq!(h.rotation(), g.rotation());
        let inner: BTreeSet<BTreeSet<usize>> =
            h.inner_faces().iter().map(|f| f.iter().copied().collect()).collect();
        let expected: BTreeSet<BTreeSet<usize>> = [
            BTreeSet::from([0, 1, 2]),
            BTreeSet::from([0, 2, 3]),
            BTreeSet::from([1, 2, 3]),
        ]
        .into_iter()
        .collect();
        assert_eq!(inner, expected);
        assert_eq!(g.reembed_with_outer_face(g.outer_face()).unwrap(), g);
        assert_eq!(
            g.reembed_with_outer_face(&[0, 1]).unwrap_err().code(),
            "FACE_NOT_FOUND"
        );
    }

    #[test]
    fn rotation_round_trips_through_faces() {
        for g in [k4(), quad_diag()] {
            let faces = faces_from_rotation(g.rotation()).unwrap();
            let rebuilt = rotation_from_faces(g.n(), &faces);
            assert_eq!(faces_from_rotation(&rebuilt).unwrap(), faces);
            let total: usize = faces.iter().map(|f| f.len()).sum();
            assert_eq!(total, 2 * g.edges().len());
        }
    }

    #[test]
    fn rotation_from_drawing_matches_hand_rotation() {
        let pts = [(0, 0), (0, 3), (3, 0), (1, 1)].map(|(x, y)| RatPoint::from_ints(x, y));
        let edges = vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let g = PlaneTriangulation::from_points(&pts, &edges, vec![0, 1, 2]).unwrap();
        assert_eq!(g, k4());
    }
}
