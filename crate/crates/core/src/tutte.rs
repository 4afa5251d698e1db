//! Barycentric (Tutte) placement used to seed the numeric search.

use nalgebra::{DMatrix, DVector};

use crate::graph::{GraphError, PlaneTriangulation};

/// Outer face on a regular polygon of `radius` (clockwise), every other
/// vertex at the mean of its neighbours.
pub fn tutte_embedding(g: &PlaneTriangulation, radius: f64) -> Result<Vec<(f64, f64)>, GraphError> {
    let m = g.outer_face().len() as f64;
    let angles: Vec<f64> = (0..g.outer_face().len())
        .map(|k| std::f64::consts::FRAC_PI_2 - std::f64::consts::TAU * k as f64 / m)
        .collect();
    tutte_weighted(g, radius, &angles, |_, _| 1.0)
}

/// Outer vertex `k` goes to angle `angles[k]` on the circle (the angles must
/// decrease so the polygon is clockwise); every other vertex sits at the
/// `weight`-weighted mean of its neighbours. Positive weights keep the
/// drawing planar.
pub fn tutte_weighted(
    g: &PlaneTriangulation,
    radius: f64,
    angles: &[f64],
    weight: impl Fn(usize, usize) -> f64,
) -> Result<Vec<(f64, f64)>, GraphError> {
    let n = g.n();
    let outer = g.outer_face();
    let mut pos = vec![(0.0, 0.0); n];
    for (&v, &angle) in outer.iter().zip(angles) {
        pos[v] = (radius * angle.cos(), radius * angle.sin());
    }
    let interior: Vec<usize> = (0..n).filter(|v| !outer.contains(v)).collect();
    if interior.is_empty() {
        return Ok(pos);
    }
    let mut slot = vec![usize::MAX; n];
    for (k, &v) in interior.iter().enumerate() {
        slot[v] = k;
    }
    let size = interior.len();
    let mut lap = DMatrix::<f64>::zeros(size, size);
    let mut rhs_x = DVector::<f64>::zeros(size);
    let mut rhs_y = DVector::<f64>::zeros(size);
    for (row, &v) in interior.iter().enumerate() {
        for &u in &g.rotation()[v] {
            let w = weight(v, u);
            lap[(row, row)] += w;
            if slot[u] == usize::MAX {
                rhs_x[row] += w * pos[u].0;
                rhs_y[row] += w * pos[u].1;
            } else {
                lap[(row, slot[u])] -= w;
            }
        }
    }
    let lu = lap.clone().lu();
    let xs = lu.solve(&rhs_x).ok_or(GraphError::SingularSystem)?;
    let ys = lu.solve(&rhs_y).ok_or(GraphError::SingularSystem)?;
    let tolerance = 1e-10 * radius.max(1.0);
    let res_x = (&lap * &xs - &rhs_x).amax();
    let res_y = (&lap * &ys - &rhs_y).amax();
    if !(res_x <= tolerance && res_y <= tolerance) {
        return Err(GraphError::SingularSystem);
    }
    for (row, &v) in interior.iter().enumerate() {
        pos[v] = (xs[row], ys[row]);
    }
    Ok(pos)
}
