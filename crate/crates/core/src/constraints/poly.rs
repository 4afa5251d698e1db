//! Degree-2 integer polynomials over the realization variables.

use std::collections::BTreeMap;
use std::fmt;

/// A variable of a constraint system. Vertex indices are 0-based; edge
/// variables carry the normalized pair `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarId {
    Px(usize),
    Py(usize),
    Cx(usize, usize),
    Cy(usize, usize),
    R(usize, usize),
}

impl VarId {
    /// Text name with 1-based labels, e.g. `x_3`, `cy_1_4`, `r_2_5`.
    pub fn name(&self) -> String {
        match *self {
            VarId::Px(i) => format!("x_{}", i + 1),
            VarId::Py(i) => format!("y_{}", i + 1),
            VarId::Cx(i, j) => format!("cx_{}_{}", i + 1, j + 1),
            VarId::Cy(i, j) => format!("cy_{}_{}", i + 1, j + 1),
            VarId::R(i, j) => format!("r_{}_{}", i + 1, j + 1),
        }
    }

    pub fn parse(name: &str) -> Option<VarId> {
        let mut parts = name.split('_');
        let kind = parts.next()?;
        let idx: Vec<usize> = parts.map(|p| p.parse::<usize>().ok()).collect::<Option<_>>()?;
        if idx.iter().any(|&v| v == 0) {
            return None;
        }
        let v = |k: usize| idx[k] - 1;
        match (kind, idx.len()) {
            ("x", 1) => Some(VarId::Px(v(0))),
            ("y", 1) => Some(VarId::Py(v(0))),
            ("cx", 2) => Some(VarId::Cx(v(0), v(1))),
            ("cy", 2) => Some(VarId::Cy(v(0), v(1))),
            ("r", 2) => Some(VarId::R(v(0), v(1))),
            _ => None,
        }
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Monomial {
    One,
    Lin(VarId),
    /// Ordered so that the first variable is not greater than the second.
    Quad(VarId, VarId),
}

impl Monomial {
    pub fn quad(a: VarId, b: VarId) -> Self {
        if a <= b {
            Monomial::Quad(a, b)
        } else {
            Monomial::Quad(b, a)
        }
    }

    pub fn degree(&self) -> usize {
        match self {
            Monomial::One => 0,
            Monomial::Lin(_) => 1,
            Monomial::Quad(..) => 2,
        }
    }

    pub fn vars(&self) -> Vec<VarId> {
        match *self {
            Monomial::One => vec![],
            Monomial::Lin(a) => vec![a],
            Monomial::Quad(a, b) => vec![a, b],
        }
    }
}

/// Integer polynomial of total degree at most 2 with no zero coefficients.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Poly2 {
    terms: BTreeMap<Monomial, i64>,
}

impl Poly2 {
    pub fn zero() -> Self {
        Poly2::default()
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, i64)>) -> Self {
        let mut p = Poly2::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn add_term(&mut self, monomial: Monomial, coef: i64) {
        if coef == 0 {
            return;
        }
        let entry = self.terms.entry(monomial).or_insert(0);
        *entry += coef;
        if *entry == 0 {
            self.terms.remove(&monomial);
        }
    }

    pub fn add_scaled(&mut self, other: &Poly2, factor: i64) {
        for (&m, &c) in &other.terms {
            self.add_term(m, c * factor);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &i64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn max_abs_coefficient(&self) -> i64 {
        self.terms.values().map(|c| c.abs()).max().unwrap_or(0)
    }

    pub fn coefficient(&self, monomial: &Monomial) -> i64 {
        self.terms.get(monomial).copied().unwrap_or(0)
    }

    /// Evaluates with any numeric type that can be built from integers.
    pub fn eval_with<T, F>(&self, mut value: F) -> T
    where
        T: Clone + std::ops::Add<Output = T> + std::ops::Mul<Output = T> + From<i32>,
        F: FnMut(VarId) -> T,
    {
        let mut acc = T::from(0);
        for (m, &c) in &self.terms {
            let coef = T::from(c as i32);
            let term = match *m {
                Monomial::One => coef,
                Monomial::Lin(a) => coef * value(a),
                Monomial::Quad(a, b) => coef * value(a) * value(b),
            };
            acc = acc + term;
        }
        acc
    }
}

/// Affine form `constant + sum(coef * var)`, used to write stencil points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Affine {
    pub constant: i64,
    pub terms: Vec<(VarId, i64)>,
}

impl Affine {
    pub fn var(v: VarId) -> Self {
        Affine { constant: 0, terms: vec![(v, 1)] }
    }

    pub fn shifted(v: VarId, offset: i64) -> Self {
        Affine { constant: offset, terms: vec![(v, 1)] }
    }

    pub fn mul(&self, other: &Affine) -> Poly2 {
        let mut p = Poly2::zero();
        p.add_term(Monomial::One, self.constant * other.constant);
        for &(v, c) in &self.terms {
            p.add_term(Monomial::Lin(v), c * other.constant);
        }
        for &(v, c) in &other.terms {
            p.add_term(Monomial::Lin(v), c * self.constant);
        }
        for &(a, ca) in &self.terms {
            for &(b, cb) in &other.terms {
                p.add_term(Monomial::quad(a, b), ca * cb);
            }
        }
        p
    }
}

/// A point whose coordinates are affine in the variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymPoint {
    pub x: Affine,
    pub y: Affine,
}

impl SymPoint {
    pub fn vertex(i: usize, dx: i64, dy: i64) -> Self {
        SymPoint {
            x: Affine::shifted(VarId::Px(i), dx),
            y: Affine::shifted(VarId::Py(i), dy),
        }
    }

    pub fn center(i: usize, j: usize) -> Self {
        SymPoint {
            x: Affine::var(VarId::Cx(i, j)),
            y: Affine::var(VarId::Cy(i, j)),
        }
    }
}

/// The turn polynomial `x2*y1 - x2*y0 - x0*y1 - x1*y2 + x1*y0 + x0*y2`.
pub fn con(p0: &SymPoint, p1: &SymPoint, p2: &SymPoint) -> Poly2 {
    let mut p = Poly2::zero();
    p.add_scaled(&p2.x.mul(&p1.y), 1);
    p.add_scaled(&p2.x.mul(&p0.y), -1);
    p.add_scaled(&p0.x.mul(&p1.y), -1);
    p.add_scaled(&p1.x.mul(&p2.y), -1);
    p.add_scaled(&p1.x.mul(&p0.y), 1);
    p.add_scaled(&p0.x.mul(&p2.y), 1);
    p
}

/// `|z - c|^2` expanded.
pub fn dist_sq(z: &SymPoint, c: &SymPoint) -> Poly2 {
    let mut p = Poly2::zero();
    for (a, b) in [(&z.x, &c.x), (&z.y, &c.y)] {
        p.add_scaled(&a.mul(a), 1);
        p.add_scaled(&b.mul(b), 1);
        p.add_scaled(&a.mul(b), -2);
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for v in [VarId::Px(0), VarId::Py(11), VarId::Cx(2, 5), VarId::Cy(0, 1), VarId::R(3, 9)] {
            assert_eq!(VarId::parse(&v.name()), Some(v));
        }
        assert_eq!(VarId::Cx(0, 3).name(), "cx_1_4");
        assert_eq!(VarId::parse("x_0"), None);
        assert_eq!(VarId::parse("z_1"), None);
    }

    #[test]
    fn con_matches_expanded_form() {
        let p = con(&SymPoint::vertex(0, 0, 0), &SymPoint::vertex(1, 0, 0), &SymPoint::vertex(2, 0, 0));
        let (x, y) = (VarId::Px, VarId::Py);
        assert_eq!(p.len(), 6);
        assert_eq!(p.coefficient(&Monomial::quad(x(2), y(1))), 1);
        assert_eq!(p.coefficient(&Monomial::quad(x(2), y(0))), -1);
        assert_eq!(p.coefficient(&Monomial::quad(x(0), y(1))), -1);
        assert_eq!(p.coefficient(&Monomial::quad(x(1), y(2))), -1);
        assert_eq!(p.coefficient(&Monomial::quad(x(1), y(0))), 1);
        assert_eq!(p.coefficient(&Monomial::quad(x(0), y(2))), 1);
    }

    #[test]
    fn eval_generic() {
        let p = Poly2::from_terms([
            (Monomial::One, 3),
            (Monomial::Lin(VarId::Px(0)), -2),
            (Monomial::quad(VarId::Px(0), VarId::Py(0)), 5),
        ]);
        let v: f64 = p.eval_with(|var| if var == VarId::Px(0) { 2.0 } else { 0.5 });
        assert_eq!(v, 3.0 - 4.0 + 5.0);
    }
}
