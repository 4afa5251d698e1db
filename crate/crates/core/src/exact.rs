//! Exact rational arithmetic and the geometric predicates the certifier trusts.
//!
//! Everything here is exact. Floating point only enters through
//! [`rationalize`], which turns a solver value into the closest rational with
//! a bounded denominator.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Arbitrary precision rational in canonical form.
pub type Rat = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeomError {
    #[error("the three points are collinear")]
    CollinearTriple,
    #[error("value is not finite")]
    NonFinite,
    #[error("all points are collinear")]
    AllCollinear,
    #[error("rational literal {0:?} is malformed")]
    BadLiteral(String),
}

impl GeomError {
    pub fn code(&self) -> &'static str {
        match self {
            GeomError::CollinearTriple => "COLLINEAR_TRIPLE",
            GeomError::NonFinite => "NON_FINITE",
            GeomError::AllCollinear => "ALL_COLLINEAR",
            GeomError::BadLiteral(_) => "BAD_LITERAL",
        }
    }
}

pub fn int(v: i64) -> Rat {
    Rat::from_integer(BigInt::from(v))
}

pub fn ratio(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Parses `"a"` or `"a/b"`.
pub fn parse_rat(text: &str) -> Result<Rat, GeomError> {
    let bad = || GeomError::BadLiteral(text.to_string());
    let text = text.trim();
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok(Rat::new(num, den))
}

pub fn format_rat(value: &Rat) -> String {
    if value.is_integer() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

pub fn rat_to_f64(value: &Rat) -> f64 {
    value.to_f64().unwrap_or_else(|| {
        // Ratio of huge integers: shift both down to a representable range.
        let shift = value.numer().bits().max(value.denom().bits()).saturating_sub(1000);
        let n = (value.numer() >> shift).to_f64().unwrap_or(f64::NAN);
        let d = (value.denom() >> shift).to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

fn sign_of(value: &Rat) -> i8 {
    if value.is_positive() {
        1
    } else if value.is_negative() {
        -1
    } else {
        0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RatPoint {
    pub x: Rat,
    pub y: Rat,
}

impl RatPoint {
    pub fn new(x: Rat, y: Rat) -> Self {
        RatPoint { x, y }
    }

    pub fn from_ints(x: i64, y: i64) -> Self {
        RatPoint::new(int(x), int(y))
    }

    pub fn from_bigints(x: BigInt, y: BigInt) -> Self {
        RatPoint::new(Rat::from_integer(x), Rat::from_integer(y))
    }

    pub fn scaled(&self, factor: &Rat) -> Self {
        RatPoint::new(&self.x * factor, &self.y * factor)
    }

    pub fn offset(&self, dx: &Rat, dy: &Rat) -> Self {
        RatPoint::new(&self.x + dx, &self.y + dy)
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (rat_to_f64(&self.x), rat_to_f64(&self.y))
    }
}

impl fmt::Display for RatPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", format_rat(&self.x), format_rat(&self.y))
    }
}

/// The turn polynomial `x2*y1 - x2*y0 - x0*y1 - x1*y2 + x1*y0 + x0*y2`.
///
/// Positive means a right turn at `p1`, negative a left turn, zero collinear.
pub fn con_poly(p0: &RatPoint, p1: &RatPoint, p2: &RatPoint) -> Rat {
    &p2.x * &p1.y - &p2.x * &p0.y - &p0.x * &p1.y - &p1.x * &p2.y + &p1.x * &p0.y + &p0.x * &p2.y
}

/// Counterclockwise orientation sign of `(a, b, c)`: +1 for a left turn at `b`.
pub fn orientation(a: &RatPoint, b: &RatPoint, c: &RatPoint) -> i8 {
    -sign_of(&con_poly(a, b, c))
}

pub fn dist_sq(p: &RatPoint, q: &RatPoint) -> Rat {
    let dx = &p.x - &q.x;
    let dy = &p.y - &q.y;
    &dx * &dx + &dy * &dy
}

/// +1 if `q` is strictly inside the circle through `a, b, c`, 0 if on it, -1 if outside.
/// The orientation of the triple does not matter.
pub fn in_circle_sign(a: &RatPoint, b: &RatPoint, c: &RatPoint, q: &RatPoint) -> Result<i8, GeomError> {
    let orient = orientation(a, b, c);
    if orient == 0 {
        return Err(GeomError::CollinearTriple);
    }
    let (adx, ady) = (&a.x - &q.x, &a.y - &q.y);
    let (bdx, bdy) = (&b.x - &q.x, &b.y - &q.y);
    let (cdx, cdy) = (&c.x - &q.x, &c.y - &q.y);
    let alift = &adx * &adx + &ady * &ady;
    let blift = &bdx * &bdx + &bdy * &bdy;
    let clift = &cdx * &cdx + &cdy * &cdy;
    let det = alift * (&bdx * &cdy - &cdx * &bdy)
        + blift * (&cdx * &ady - &adx * &cdy)
        + clift * (&adx * &bdy - &bdx * &ady);
    Ok(sign_of(&det) * orient)
}

pub fn circumcenter(a: &RatPoint, b: &RatPoint, c: &RatPoint) -> Result<RatPoint, GeomError> {
    let d = (&a.x * (&b.y - &c.y) + &b.x * (&c.y - &a.y) + &c.x * (&a.y - &b.y)) * int(2);
    if d.is_zero() {
        return Err(GeomError::CollinearTriple);
    }
    let a2 = &a.x * &a.x + &a.y * &a.y;
    let b2 = &b.x * &b.x + &b.y * &b.y;
    let c2 = &c.x * &c.x + &c.y * &c.y;
    let ux = (&a2 * (&b.y - &c.y) + &b2 * (&c.y - &a.y) + &c2 * (&a.y - &b.y)) / &d;
    let uy = (&a2 * (&c.x - &b.x) + &b2 * (&a.x - &c.x) + &c2 * (&b.x - &a.x)) / &d;
    Ok(RatPoint::new(ux, uy))
}

/// Closest rational to `x` whose denominator does not exceed `max_denominator`.
pub fn rationalize(x: f64, max_denominator: u64) -> Result<Rat, GeomError> {
    if !x.is_finite() {
        return Err(GeomError::NonFinite);
    }
    let exact = Rat::from_float(x).ok_or(GeomError::NonFinite)?;
    Ok(limit_denominator(&exact, &BigInt::from(max_denominator.max(1))))
}

/// Best approximation of `value` among rationals with denominator at most `max_den`.
pub fn limit_denominator(value: &Rat, max_den: &BigInt) -> Rat {
    if value.denom() <= max_den {
        return value.clone();
    }
    let (mut p0, mut q0, mut p1, mut q1) = (BigInt::zero(), BigInt::one(), BigInt::one(), BigInt::zero());
    let mut n = value.numer().clone();
    let mut d = value.denom().clone();
    loop {
        let a = n.div_floor(&d);
        let q2 = &q0 + &a * &q1;
        if &q2 > max_den {
            break;
        }
        let p2 = &p0 + &a * &p1;
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
        let rem = &n - &a * &d;
        n = std::mem::replace(&mut d, rem);
    }
    let k = (max_den - &q0).div_floor(&q1);
    let semi_den = &q0 + &k * &q1;
    if BigInt::from(2) * &d * &semi_den <= *value.denom() {
        Rat::new(p1, q1)
    } else {
        Rat::new(&p0 + &k * &p1, semi_den)
    }
}

/// Strictly convex hull of a point set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hull {
    /// Clockwise cycle of input indices, starting at the lexicographically smallest point.
    pub cycle: Vec<usize>,
    /// Points lying on a hull edge without being a hull vertex.
    pub boundary_collinear: Vec<usize>,
}

pub fn convex_hull(points: &[RatPoint]) -> Result<Hull, GeomError> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| points[i].cmp(&points[j]).then(i.cmp(&j)));
    // Andrew's monotone chain; popping on `orientation <= 0` drops collinear points.
    let mut ccw: Vec<usize> = Vec::with_capacity(points.len() + 1);
    let build = |seq: &mut dyn Iterator<Item = usize>, chain: &mut Vec<usize>| {
        let floor = (chain.len() + 1).max(2);
        for idx in seq {
            while chain.len() >= floor
                && orientation(&points[chain[chain.len() - 2]], &points[chain[chain.len() - 1]], &points[idx]) <= 0
            {
                chain.pop();
            }
            chain.push(idx);
        }
    };
    build(&mut order.iter().copied(), &mut ccw);
    build(&mut order.iter().rev().copied(), &mut ccw);
    ccw.pop();
    if ccw.len() < 3 {
        return Err(GeomError::AllCollinear);
    }
    let mut cycle = Vec::with_capacity(ccw.len());
    cycle.push(ccw[0]);
    cycle.extend(ccw[1..].iter().rev());

    let on_hull: std::collections::HashSet<usize> = cycle.iter().copied().collect();
    let mut boundary_collinear = Vec::new();
    for (idx, p) in points.iter().enumerate() {
        if on_hull.contains(&idx) || cycle.iter().any(|&h| points[h] == *p) {
            continue;
        }
        let hits_edge = (0..cycle.len()).any(|e| {
            let a = &points[cycle[e]];
            let b = &points[cycle[(e + 1) % cycle.len()]];
            con_poly(a, p, b).is_zero() && on_segment_box(a, b, p)
        });
        if hits_edge {
            boundary_collinear.push(idx);
        }
    }
    Ok(Hull { cycle, boundary_collinear })
}

fn on_segment_box(a: &RatPoint, b: &RatPoint, p: &RatPoint) -> bool {
    let within = |lo: &Rat, hi: &Rat, v: &Rat| {
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        lo <= v && v <= hi
    };
    within(&a.x, &b.x, &p.x) && within(&a.y, &b.y, &p.y)
}

/// A point set rescaled to integer coordinates by the common denominator.
///
/// Orientation and in-circle signs are invariant under positive scaling, so
/// the predicates below agree with [`orientation`] and [`in_circle_sign`] on
/// the original points. Small coordinates take an `i128` fast path.
#[derive(Debug, Clone)]
pub enum PointFrame {
    Small(Vec<(i128, i128)>),
    Big(Vec<(BigInt, BigInt)>),
}

const SMALL_LIMIT_BITS: u64 = 28;

impl PointFrame {
    pub fn new(points: &[RatPoint]) -> Self {
        let mut lcm = BigInt::one();
        for p in points {
            lcm = lcm.lcm(p.x.denom()).lcm(p.y.denom());
        }
        let scale = |v: &Rat| v.numer() * (&lcm / v.denom());
        let big: Vec<(BigInt, BigInt)> = points.iter().map(|p| (scale(&p.x), scale(&p.y))).collect();
        let small = big.iter().all(|(x, y)| x.bits() <= SMALL_LIMIT_BITS && y.bits() <= SMALL_LIMIT_BITS);
        if small {
            PointFrame::Small(
                big.iter()
                    .map(|(x, y)| (x.to_i128().unwrap(), y.to_i128().unwrap()))
                    .collect(),
            )
        } else {
            PointFrame::Big(big)
        }
    }

    pub fn len(&self) -> usize {
        match self {
            PointFrame::Small(p) => p.len(),
            PointFrame::Big(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn same(&self, i: usize, j: usize) -> bool {
        match self {
            PointFrame::Small(p) => p[i] == p[j],
            PointFrame::Big(p) => p[i] == p[j],
        }
    }

    /// Counterclockwise orientation sign of `(i, j, k)`.
    pub fn orient(&self, i: usize, j: usize, k: usize) -> i8 {
        match self {
            PointFrame::Small(p) => {
                let (a, b, c) = (p[i], p[j], p[k]);
                let det = (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
                det.signum() as i8
            }
            PointFrame::Big(p) => {
                let (a, b, c) = (&p[i], &p[j], &p[k]);
                let det = (&b.0 - &a.0) * (&c.1 - &a.1) - (&b.1 - &a.1) * (&c.0 - &a.0);
                det.signum().to_i8().unwrap()
            }
        }
    }

    /// In-circle sign of `q` against the circle through `(i, j, k)`, orientation-free.
    /// `None` when the triple is collinear.
    pub fn in_circle(&self, i: usize, j: usize, k: usize, q: usize) -> Option<i8> {
        let orient = self.orient(i, j, k);
        if orient == 0 {
            return None;
        }
        let det_sign = match self {
            PointFrame::Small(p) => {
                let d = |s: usize| (p[s].0 - p[q].0, p[s].1 - p[q].1);
                let (a, b, c) = (d(i), d(j), d(k));
                let lift = |v: (i128, i128)| v.0 * v.0 + v.1 * v.1;
                let det = lift(a) * (b.0 * c.1 - c.0 * b.1)
                    + lift(b) * (c.0 * a.1 - a.0 * c.1)
                    + lift(c) * (a.0 * b.1 - b.0 * a.1);
                det.signum() as i8
            }
            PointFrame::Big(p) => {
                let d = |s: usize| (&p[s].0 - &p[q].0, &p[s].1 - &p[q].1);
                let (a, b, c) = (d(i), d(j), d(k));
                let lift = |v: &(BigInt, BigInt)| &v.0 * &v.0 + &v.1 * &v.1;
                let det = lift(&a) * (&b.0 * &c.1 - &c.0 * &b.1)
                    + lift(&b) * (&c.0 * &a.1 - &a.0 * &c.1)
                    + lift(&c) * (&a.0 * &b.1 - &b.0 * &a.1);
                det.signum().to_i8().unwrap()
            }
        };
        Some(det_sign * orient)
    }
}
