//! Test instances with known answers, robustness radii, and perturbations.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::constraints::{build_const, evaluate, Assignment, Flavor, InteriorScope, VarId};
use crate::exact::{con_poly, dist_sq, format_rat, int, rat_to_f64, rationalize, Rat, RatPoint};
use crate::graph::PlaneTriangulation;
use crate::oracle::{as_plane_triangulation, delaunay, general_position_check};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InstanceError {
    #[error("no general-position sample of {n} points in [0, {bound}]^2 after {attempts} attempts")]
    BoundTooSmall { n: usize, bound: i64, attempts: usize },
    #[error("instances need at least {min} vertices, got {n}")]
    TooFewVertices { n: usize, min: usize },
    #[error("assignment does not satisfy Const(G) exactly")]
    UnsatisfiedInput,
}

impl InstanceError {
    pub fn code(&self) -> &'static str {
        match self {
            InstanceError::BoundTooSmall { .. } => "BOUND_TOO_SMALL",
            InstanceError::TooFewVertices { .. } => "TOO_FEW_VERTICES",
            InstanceError::UnsatisfiedInput => "UNSATISFIED_INPUT",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub points: Vec<(i64, i64)>,
    pub graph: PlaneTriangulation,
}

impl Instance {
    pub fn rat_points(&self) -> Vec<RatPoint> {
        self.points.iter().map(|&(x, y)| RatPoint::from_ints(x, y)).collect()
    }
}

const MAX_ATTEMPTS: usize = 1000;

/// Samples integer points in `[0, bound]^2` until they are in general
/// position, then returns their Delaunay triangulation.
pub fn random_instance(n: usize, seed: u64, bound: i64) -> Result<Instance, InstanceError> {
    if n < 4 {
        return Err(InstanceError::TooFewVertices { n, min: 4 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_ATTEMPTS {
        let raw: Vec<(i64, i64)> = (0..n).map(|_| (rng.gen_range(0..=bound), rng.gen_range(0..=bound))).collect();
        let points: Vec<RatPoint> = raw.iter().map(|&(x, y)| RatPoint::from_ints(x, y)).collect();
        if !general_position_check(&points).ok {
            continue;
        }
        let dt = delaunay(&points).expect("general position checked");
        let graph = as_plane_triangulation(&dt, &points).expect("a Delaunay triangulation is a plane graph");
        return Ok(Instance { points: raw, graph });
    }
    Err(InstanceError::BoundTooSmall { n, bound, attempts: MAX_ATTEMPTS })
}

/// Vertices on a convex arc, in the clockwise order `0, 1, ..., n-1`.
fn convex_arc(n: usize) -> Vec<RatPoint> {
    (0..n as i64).map(|k| RatPoint::from_ints(k, -k * k)).collect()
}

/// The fan over a convex `n`-gon: every chord leaves vertex 0.
pub fn fan_triangulation(n: usize) -> PlaneTriangulation {
    assert!(n >= 3, "a fan needs at least three vertices");
    let mut edges: Vec<(usize, usize)> = (1..n).map(|k| (0, k)).collect();
    edges.extend((1..n - 1).map(|k| (k, k + 1)));
    PlaneTriangulation::from_points(&convex_arc(n), &edges, (0..n).collect()).expect("fan is planar")
}

/// Drawing used by [`octahedron`]: outer triangle 0, 1, 2 and an inner
/// triangle 3, 4, 5 with 3 near side 0-1, 4 near 1-2, 5 near 0-2.
pub fn octahedron_points() -> Vec<RatPoint> {
    [(0, 0), (0, 12), (12, 0), (2, 5), (5, 5), (5, 2)]
        .map(|(x, y)| RatPoint::from_ints(x, y))
        .to_vec()
}

pub fn octahedron() -> PlaneTriangulation {
    let edges = [
        (0, 1),
        (1, 2),
        (0, 2),
        (3, 4),
        (4, 5),
        (3, 5),
        (0, 3),
        (1, 3),
        (1, 4),
        (2, 4),
        (0, 5),
        (2, 5),
    ];
    PlaneTriangulation::from_points(&octahedron_points(), &edges, vec![0, 1, 2]).expect("octahedron is planar")
}

/// Closed rational interval.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Interval {
    #[serde(serialize_with = "ser_rat")]
    pub lo: Rat,
    #[serde(serialize_with = "ser_rat")]
    pub hi: Rat,
}

fn ser_rat<S: serde::Serializer>(value: &Rat, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format_rat(value))
}

impl Interval {
    pub fn point(v: Rat) -> Self {
        Interval { lo: v.clone(), hi: v }
    }

    pub fn width(&self) -> Rat {
        &self.hi - &self.lo
    }

    pub fn contains(&self, v: &Rat) -> bool {
        &self.lo <= v && v <= &self.hi
    }

    pub fn sub(&self, other: &Interval) -> Interval {
        Interval { lo: &self.lo - &other.hi, hi: &self.hi - &other.lo }
    }

    pub fn min(&self, other: &Interval) -> Interval {
        Interval { lo: self.lo.clone().min(other.lo.clone()), hi: self.hi.clone().min(other.hi.clone()) }
    }

    pub fn mid_f64(&self) -> f64 {
        rat_to_f64(&((&self.lo + &self.hi) / int(2)))
    }
}

/// Encloses `sqrt(q)` between dyadic rationals with `bits` fractional bits.
pub fn sqrt_interval(q: &Rat, bits: u32) -> Interval {
    assert!(!q.is_negative(), "square root of a negative value");
    let scale = BigInt::one() << (2 * bits as usize);
    let scaled = q * Rat::from_integer(scale);
    let floor = scaled.floor().to_integer();
    let ceil = scaled.ceil().to_integer();
    let den = BigInt::one() << bits as usize;
    let lo_root = floor.sqrt();
    let mut hi_root = ceil.sqrt();
    if &hi_root * &hi_root < ceil {
        hi_root += 1;
    }
    Interval { lo: Rat::new(lo_root, den.clone()), hi: Rat::new(hi_root, den) }
}

const BASE_BITS: u32 = 128;
const MAX_BITS: u32 = 4096;

/// `sqrt(a) - sqrt(b)` for `a > b >= 0`, refined until the lower end is positive.
fn sqrt_difference(a: &Rat, b: &Rat) -> Interval {
    let mut bits = BASE_BITS;
    loop {
        let d = sqrt_interval(a, bits).sub(&sqrt_interval(b, bits));
        if d.lo.is_positive() || bits >= MAX_BITS {
            return d;
        }
        bits *= 2;
    }
}

fn positive_sqrt(q: &Rat) -> Interval {
    let mut bits = BASE_BITS;
    loop {
        let s = sqrt_interval(q, bits);
        if s.lo.is_positive() || bits >= MAX_BITS {
            return s;
        }
        bits *= 2;
    }
}

/// Enclosures of the three separation distances of an exact realization and
/// the resulting safe perturbation radius.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RadiusBounds {
    /// Minimum distance between two points.
    pub d_n: Interval,
    /// Minimum gap between a witness disc and a point it must exclude.
    pub d_c: Interval,
    /// Minimum distance from a point to the line through an outer edge.
    pub d_a: Interval,
    /// A third of the smallest lower end; a certified lower bound on the true radius.
    #[serde(serialize_with = "ser_rat")]
    pub r: Rat,
}

/// Computes the bounds for points plus per-edge witness centres, after
/// checking that together they satisfy `Const(G)` exactly.
pub fn radius_bounds(
    g: &PlaneTriangulation,
    points: &[RatPoint],
    centers: &BTreeMap<(usize, usize), RatPoint>,
) -> Result<RadiusBounds, InstanceError> {
    let system = build_const(g, InteriorScope::AllOthers);
    let mut a = Assignment::new(Flavor::Const);
    for (v, p) in points.iter().enumerate() {
        a.set(VarId::Px(v), p.x.clone());
        a.set(VarId::Py(v), p.y.clone());
    }
    for (&(i, j), c) in centers {
        a.set(VarId::Cx(i, j), c.x.clone());
        a.set(VarId::Cy(i, j), c.y.clone());
    }
    let report = evaluate(&system, &a).map_err(|_| InstanceError::UnsatisfiedInput)?;
    if !report.all_satisfied || points.len() != g.n() {
        return Err(InstanceError::UnsatisfiedInput);
    }

    let n = points.len();
    let mut min_pair: Option<Rat> = None;
    for i in 0..n {
        for j in i + 1..n {
            let d = dist_sq(&points[i], &points[j]);
            if min_pair.as_ref().is_none_or(|m| &d < m) {
                min_pair = Some(d);
            }
        }
    }
    let d_n = positive_sqrt(&min_pair.expect("at least two points"));

    let mut d_c: Option<Interval> = None;
    for &(i, j) in g.edges() {
        let c = &centers[&(i, j)];
        let radius_sq = dist_sq(&points[i], c);
        let nearest = (0..n)
            .filter(|&k| k != i && k != j)
            .map(|k| dist_sq(&points[k], c))
            .min()
            .expect("n >= 3");
        let gap = sqrt_difference(&nearest, &radius_sq);
        d_c = Some(match d_c {
            None => gap,
            Some(cur) => cur.min(&gap),
        });
    }
    let d_c = d_c.expect("graph has edges");

    let outer = g.outer_face();
    let mut min_line: Option<Rat> = None;
    for t in 0..outer.len() {
        let (i, j) = (outer[t], outer[(t + 1) % outer.len()]);
        let len_sq = dist_sq(&points[i], &points[j]);
        for k in (0..n).filter(|&k| k != i && k != j) {
            let area = con_poly(&points[i], &points[k], &points[j]);
            let d = &area * &area / &len_sq;
            if min_line.as_ref().is_none_or(|m| &d < m) {
                min_line = Some(d);
            }
        }
    }
    let d_a = positive_sqrt(&min_line.expect("outer face has an edge and an extra vertex"));

    let lowest = d_n.lo.clone().min(d_c.lo.clone()).min(d_a.lo.clone());
    Ok(RadiusBounds { d_n, d_c, d_a, r: lowest / int(3) })
}

const OFFSET_DENOMINATOR: u64 = 1 << 20;

/// Rational point in the closed unit disc, uniform up to rationalization.
fn unit_disc_sample(rng: &mut ChaCha8Rng) -> (Rat, Rat) {
    loop {
        let theta = rng.gen::<f64>() * std::f64::consts::TAU;
        let rho = rng.gen::<f64>().sqrt();
        let dx = rationalize(rho * theta.cos(), OFFSET_DENOMINATOR).expect("finite");
        let dy = rationalize(rho * theta.sin(), OFFSET_DENOMINATOR).expect("finite");
        if &dx * &dx + &dy * &dy <= Rat::one() {
            return (dx, dy);
        }
    }
}

/// Each trial moves every point by an offset of norm at most `r`; the bound
/// holds exactly since offsets are rational unit-disc samples scaled by `r`.
pub fn perturb_within_radius(points: &[RatPoint], r: &Rat, seed: u64, trials: usize) -> Vec<Vec<RatPoint>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials)
        .map(|_| {
            points
                .iter()
                .map(|p| {
                    let (dx, dy) = unit_disc_sample(&mut rng);
                    p.offset(&(dx * r), &(dy * r))
                })
                .collect()
        })
        .collect()
}

/// Each trial offsets every coordinate by a rational in `[-1/2, 1/2]`. The
/// first four trials shift all points to one corner of the box, the next
/// four pick a random corner per point, later trials are uniform dyadics.
pub fn perturb_within_halfbox(points: &[RatPoint], seed: u64, trials: usize) -> Vec<Vec<RatPoint>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = Rat::new(BigInt::one(), BigInt::from(2));
    let corner = |sx: bool, sy: bool| {
        let pick = |s: bool| if s { half.clone() } else { -half.clone() };
        (pick(sx), pick(sy))
    };
    let steps: i64 = 1 << 21;
    (0..trials)
        .map(|t| {
            points
                .iter()
                .map(|p| {
                    let (dx, dy) = if t < 4 {
                        corner(t & 1 == 1, t & 2 == 2)
                    } else if t < 8 {
                        corner(rng.gen(), rng.gen())
                    } else {
                        let m = |rng: &mut ChaCha8Rng| Rat::new(BigInt::from(rng.gen_range(-steps / 2..=steps / 2)), BigInt::from(steps));
                        (m(&mut rng), m(&mut rng))
                    };
                    p.offset(&dx, &dy)
                })
                .collect()
        })
        .collect()
}

/// Witness centres for a point set whose Delaunay triangulation is `g`.
pub fn witness_centers(g: &PlaneTriangulation, points: &[RatPoint]) -> BTreeMap<(usize, usize), RatPoint> {
    let faces: Vec<[usize; 3]> = g.inner_faces().iter().map(|f| [f[0], f[1], f[2]]).collect();
    witness_centers_from_faces(g.edges(), &faces, points)
}

/// The midpoint of the two adjacent face circumcentres for an inner edge,
/// and the face circumcentre pushed outward by the edge normal for a hull
/// edge. Both lie strictly inside the edge's Voronoi segment, so every other
/// point is strictly farther than the endpoints.
pub fn witness_centers_from_faces(
    edges: &[(usize, usize)],
    faces: &[[usize; 3]],
    points: &[RatPoint],
) -> BTreeMap<(usize, usize), RatPoint> {
    use crate::exact::circumcenter;
    let mut out = BTreeMap::new();
    for &(i, j) in edges {
        let incident: Vec<&[usize; 3]> = faces.iter().filter(|f| f.contains(&i) && f.contains(&j)).collect();
        let cc = |f: &[usize; 3]| circumcenter(&points[f[0]], &points[f[1]], &points[f[2]]).ok();
        let center = match incident.as_slice() {
            [a, b] => match (cc(a), cc(b)) {
                (Some(ca), Some(cb)) => RatPoint::new((&ca.x + &cb.x) / int(2), (&ca.y + &cb.y) / int(2)),
                _ => continue,
            },
            [a] => {
                let Some(c) = cc(a) else { continue };
                let k = a.iter().copied().find(|&v| v != i && v != j).expect("triangle");
                let (dx, dy) = (&points[j].x - &points[i].x, &points[j].y - &points[i].y);
                let toward_k = -&dy * (&points[k].x - &points[i].x) + &dx * (&points[k].y - &points[i].y);
                let (nx, ny) = if toward_k.is_positive() { (dy, -dx) } else { (-dy, dx) };
                RatPoint::new(&c.x + nx, &c.y + ny)
            }
            _ => continue,
        };
        out.insert((i, j), center);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;
    use crate::graph::tests::k4;
    use crate::graph::Rule;
    use crate::oracle::delaunay;

    #[test]
    fn random_instance_matches_oracle() {
        let inst = random_instance(4, 7, 1000).unwrap();
        let dt = delaunay(&inst.rat_points()).unwrap();
        assert_eq!(dt.edges, inst.graph.edges());
        assert!(inst.graph.validate().ok);
        assert_eq!(random_instance(4, 7, 1000).unwrap().points, inst.points);
    }

    #[test]
    fn tiny_bound_is_rejected() {
        let err = random_instance(4, 1, 1).unwrap_err();
        assert_eq!(err.code(), "BOUND_TOO_SMALL");
        assert_eq!(random_instance(3, 1, 100).unwrap_err().code(), "TOO_FEW_VERTICES");
    }

    #[test]
    fn edge_count_identity() {
        for seed in 0..20 {
            let inst = random_instance(4 + (seed as usize % 9), seed, 1000).unwrap();
            let (n, h) = (inst.graph.n(), inst.graph.outer_face().len());
            assert_eq!(inst.graph.edges().len(), 3 * n - 3 - h);
        }
    }

    #[test]
    fn fan_counts() {
        for (n, e, f) in [(4, 5, 2), (6, 9, 4)] {
            let g = fan_triangulation(n);
            assert_eq!(g.edges().len(), e);
            assert_eq!(g.inner_faces().len(), f);
            assert_eq!(g.outer_face(), (0..n).collect::<Vec<_>>().as_slice());
        }
        for n in 4..=12 {
            assert!(fan_triangulation(n).validate().ok);
        }
    }

    #[test]
    fn octahedron_is_maximal() {
        let g = octahedron();
        assert!(g.validate().ok);
        assert!(g.is_maximal());
        assert_eq!(g.edges().len(), 12);
        assert!(!g.validate().has(Rule::Degree2Interior));
    }

    fn k4_points() -> Vec<RatPoint> {
        [(0, 0), (0, 30), (30, 0), (10, 10)].map(|(x, y)| RatPoint::from_ints(x, y)).to_vec()
    }

    #[test]
    fn sqrt_enclosure() {
        let s = sqrt_interval(&int(2), 64);
        assert!(&s.lo * &s.lo <= int(2) && &s.hi * &s.hi >= int(2));
        assert!(s.width() <= Rat::new(BigInt::from(2), BigInt::one() << 64));
        let exact = sqrt_interval(&int(49), 32);
        assert!(exact.contains(&int(7)));
        assert_eq!(exact.lo, int(7));
    }

    #[test]
    fn k4_radius_bounds() {
        let g = k4();
        let pts = k4_points();
        let b = radius_bounds(&g, &pts, &witness_centers(&g, &pts)).unwrap();
        // the closest pair is (0,0)-(10,10) at distance sqrt(200)
        assert!(&b.d_n.lo * &b.d_n.lo <= int(200) && &b.d_n.hi * &b.d_n.hi >= int(200));
        assert!(b.r.is_positive());
        assert!(b.d_c.lo.is_positive() && b.d_a.lo.is_positive());
    }

    #[test]
    fn radius_bounds_scale_linearly() {
        let g = k4();
        let pts = k4_points();
        let centers = witness_centers(&g, &pts);
        let b1 = radius_bounds(&g, &pts, &centers).unwrap();
        let three = int(3);
        let pts3: Vec<RatPoint> = pts.iter().map(|p| p.scaled(&three)).collect();
        let centers3 = centers.iter().map(|(&e, c)| (e, c.scaled(&three))).collect();
        let b3 = radius_bounds(&g, &pts3, &centers3).unwrap();
        for (a, b) in [(&b1.d_n, &b3.d_n), (&b1.d_c, &b3.d_c), (&b1.d_a, &b3.d_a)] {
            let (x, y) = (a.mid_f64() * 3.0, b.mid_f64());
            assert!(((x - y) / y).abs() <= 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn unsatisfied_assignment_is_rejected() {
        let g = k4();
        let pts = k4_points();
        let mut centers = witness_centers(&g, &pts);
        centers.insert((0, 1), RatPoint::from_ints(500, 500));
        assert_eq!(radius_bounds(&g, &pts, &centers).unwrap_err().code(), "UNSATISFIED_INPUT");
    }

    #[test]
    fn radius_perturbations_stay_in_disc() {
        let pts = k4_points();
        let r = Rat::new(BigInt::from(7), BigInt::from(3));
        for trial in perturb_within_radius(&pts, &r, 11, 20) {
            for (p, q) in pts.iter().zip(&trial) {
                assert!(dist_sq(p, q) <= &r * &r);
            }
        }
        assert!(perturb_within_radius(&pts, &Rat::zero(), 3, 4).iter().all(|t| t == &pts));
        assert_eq!(perturb_within_radius(&pts, &r, 5, 3), perturb_within_radius(&pts, &r, 5, 3));
    }

    #[test]
    fn halfbox_perturbations() {
        let pts = k4_points();
        let half = Rat::new(BigInt::one(), BigInt::from(2));
        let trials = perturb_within_halfbox(&pts, 9, 30);
        for trial in &trials {
            for (p, q) in pts.iter().zip(trial) {
                assert!((&q.x - &p.x).abs() <= half && (&q.y - &p.y).abs() <= half);
            }
        }
        assert!(trials[..4].iter().all(|t| (&t[0].x - &pts[0].x).abs() == half));
        let d = delaunay(&pts).unwrap();
        for trial in &trials {
            assert_eq!(delaunay(trial).unwrap().edges, d.edges);
        }
    }
}
