//! File formats shared by the command-line tool and the tests.
//!
//! Every format uses 1-based vertex labels.
//!
//! - Graph: `{"n": 4, "rotation": {"1": [2, 4, 3], ...}, "outer_face": [1, 2, 3]}`
//!   with neighbours counterclockwise and the outer face clockwise.
//! - Points: one `x y` pair per line, integer or `a/b` tokens, `#` comments.
//! - Certificate: `{"points", "outer_face", "witness_centers", "transcript"}`
//!   in that order, with integer coordinates as JSON numbers of any size.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use num_bigint::BigInt;
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::Number;
use thiserror::Error;

use crate::exact::{format_rat, parse_rat, RatPoint};
use crate::graph::{GraphError, PlaneTriangulation};
use crate::realizer::RealizationCertificate;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("line {line}: {message}")]
    Points { line: usize, message: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphIn {
    n: usize,
    rotation: BTreeMap<String, Vec<usize>>,
    outer_face: Vec<usize>,
}

struct RotationOut<'a>(&'a [Vec<usize>]);

impl Serialize for RotationOut<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (v, nbrs) in self.0.iter().enumerate() {
            let labels: Vec<usize> = nbrs.iter().map(|u| u + 1).collect();
            map.serialize_entry(&(v + 1).to_string(), &labels)?;
        }
        map.end()
    }
}

#[derive(Serialize)]
struct GraphOut<'a> {
    n: usize,
    rotation: RotationOut<'a>,
    outer_face: Vec<usize>,
}

fn label(v: usize, n: usize) -> Result<usize, GraphError> {
    if (1..=n).contains(&v) {
        Ok(v - 1)
    } else {
        Err(GraphError::LabelOutOfRange(v))
    }
}

/// Vertices missing from `rotation` get no neighbours, so they show up as
/// disconnected when the graph is validated.
pub fn parse_graph(text: &str) -> Result<PlaneTriangulation, FormatError> {
    let doc: GraphIn = serde_json::from_str(text)?;
    let mut rotation = vec![Vec::new(); doc.n];
    for (key, nbrs) in &doc.rotation {
        let v: usize = key
            .trim()
            .parse()
            .map_err(|_| FormatError::Invalid(format!("rotation key {key:?} is not a vertex label")))?;
        let v = label(v, doc.n)?;
        rotation[v] = nbrs.iter().map(|&u| label(u, doc.n)).collect::<Result<_, _>>()?;
    }
    let outer = doc.outer_face.iter().map(|&u| label(u, doc.n)).collect::<Result<_, _>>()?;
    Ok(PlaneTriangulation::new(doc.n, rotation, outer)?)
}

pub fn graph_to_json(g: &PlaneTriangulation) -> String {
    let doc = GraphOut {
        n: g.n(),
        rotation: RotationOut(g.rotation()),
        outer_face: g.outer_face().iter().map(|v| v + 1).collect(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("graph serializes");
    text.push('\n');
    text
}

pub fn parse_points(text: &str) -> Result<Vec<RatPoint>, FormatError> {
    let mut points = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| FormatError::Points { line: k + 1, message };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(err(format!("expected two coordinates, found {}", tokens.len())));
        }
        let x = parse_rat(tokens[0]).map_err(|e| err(e.to_string()))?;
        let y = parse_rat(tokens[1]).map_err(|e| err(e.to_string()))?;
        points.push(RatPoint::new(x, y));
    }
    Ok(points)
}

pub fn points_to_text(points: &[RatPoint]) -> String {
    let mut out = String::new();
    for p in points {
        let _ = writeln!(out, "{} {}", format_rat(&p.x), format_rat(&p.y));
    }
    out
}

fn big_number(v: &BigInt) -> Number {
    Number::from_str(&v.to_string()).expect("integers are valid JSON numbers")
}

#[derive(Serialize, Deserialize)]
struct CertificateDoc {
    points: Vec<[Number; 2]>,
    outer_face: Vec<usize>,
    witness_centers: Vec<[String; 2]>,
    transcript: Vec<String>,
}

pub fn certificate_to_json(cert: &RealizationCertificate) -> String {
    let doc = CertificateDoc {
        points: cert.points.iter().map(|(x, y)| [big_number(x), big_number(y)]).collect(),
        outer_face: cert.outer_face.iter().map(|v| v + 1).collect(),
        witness_centers: cert.witness_centers.iter().map(|(_, c)| [format_rat(&c.x), format_rat(&c.y)]).collect(),
        transcript: cert.transcript.clone(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("certificate serializes");
    text.push('\n');
    text
}

fn big_from_number(n: &Number) -> Result<BigInt, FormatError> {
    n.to_string()
        .parse()
        .map_err(|_| FormatError::Invalid(format!("coordinate {n} is not an integer")))
}

/// Just the integer points of a certificate, for re-verification.
pub fn certificate_points(text: &str) -> Result<Vec<RatPoint>, FormatError> {
    let doc: CertificateDoc = serde_json::from_str(text)?;
    doc.points
        .iter()
        .map(|[x, y]| Ok(RatPoint::from_bigints(big_from_number(x)?, big_from_number(y)?)))
        .collect()
}

/// Reads a certificate back; witness centres are matched to the sorted
/// edges of `g`.
pub fn parse_certificate(text: &str, g: &PlaneTriangulation) -> Result<RealizationCertificate, FormatError> {
    let doc: CertificateDoc = serde_json::from_str(text)?;
    if doc.witness_centers.len() != g.edges().len() {
        return Err(FormatError::Invalid(format!(
            "{} witness centres for {} edges",
            doc.witness_centers.len(),
            g.edges().len()
        )));
    }
    let points = doc
        .points
        .iter()
        .map(|[x, y]| Ok((big_from_number(x)?, big_from_number(y)?)))
        .collect::<Result<Vec<_>, FormatError>>()?;
    let outer_face = doc.outer_face.iter().map(|&v| label(v, points.len())).collect::<Result<_, _>>()?;
    let mut witness_centers = Vec::with_capacity(g.edges().len());
    for (&edge, [x, y]) in g.edges().iter().zip(&doc.witness_centers) {
        let parse = |t: &str| parse_rat(t).map_err(|e| FormatError::Invalid(e.to_string()));
        witness_centers.push((edge, RatPoint::new(parse(x)?, parse(y)?)));
    }
    Ok(RealizationCertificate { points, outer_face, witness_centers, transcript: doc.transcript })
}

/// Points, edges and the outer cycle as a standalone SVG image.
pub fn plot_svg(g: &PlaneTriangulation, points: &[RatPoint]) -> String {
    const SIZE: f64 = 600.0;
    const PAD: f64 = 30.0;
    let p: Vec<(f64, f64)> = points.iter().map(RatPoint::to_f64).collect();
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &p {
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    let span = (x1 - x0).max(y1 - y0).max(f64::MIN_POSITIVE);
    let scale = (SIZE - 2.0 * PAD) / span;
    // SVG y grows downwards
    let map = |(x, y): (f64, f64)| (PAD + (x - x0) * scale, SIZE - PAD - (y - y0) * scale);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let outer = g.outer_face();
    let on_hull = |a: usize, b: usize| {
        (0..outer.len()).any(|t| {
            let (u, v) = (outer[t], outer[(t + 1) % outer.len()]);
            (u, v) == (a, b) || (v, u) == (a, b)
        })
    };
    for &(a, b) in g.edges() {
        if a >= p.len() || b >= p.len() {
            continue;
        }
        let ((ax, ay), (bx, by)) = (map(p[a]), map(p[b]));
        let (stroke, width) = if on_hull(a, b) { ("black", 2.5) } else { ("#4a6fa5", 1.2) };
        let _ = writeln!(
            out,
            r#"<line x1="{ax:.2}" y1="{ay:.2}" x2="{bx:.2}" y2="{by:.2}" stroke="{stroke}" stroke-width="{width}"/>"#
        );
    }
    for (v, &q) in p.iter().enumerate() {
        let (x, y) = map(q);
        let _ = writeln!(out, r##"<circle cx="{x:.2}" cy="{y:.2}" r="4" fill="#c0392b"/>"##);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" font-family="sans-serif">{}</text>"#,
            x + 6.0,
            y - 6.0,
            v + 1
        );
    }
    out.push_str("</svg>\n");
    out
}
