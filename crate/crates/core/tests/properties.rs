use std::collections::BTreeSet;

use dtr_core::constraints::{build_const, build_constsqu, evaluate, Assignment, Flavor, InteriorScope, VarId};
use dtr_core::exact::{
    circumcenter, con_poly, dist_sq, format_rat, in_circle_sign, parse_rat, rationalize, ratio, Rat, RatPoint,
};
use dtr_core::graph::{canonical_cycle, faces_from_rotation, rotation_from_faces};
use dtr_core::instance::{fan_triangulation, random_instance, witness_centers};
use dtr_core::io::{graph_to_json, parse_graph, parse_points, points_to_text};
use dtr_core::oracle::{as_plane_triangulation, delaunay};
use dtr_core::solver::{initialize, solve, Compiled, SolverConfig};
use dtr_core::tutte::tutte_embedding;
use proptest::prelude::*;

fn point() -> impl Strategy<Value = RatPoint> {
    (-1000i64..1000, 1i64..50, -1000i64..1000, 1i64..50).prop_map(|(a, b, c, d)| RatPoint::new(ratio(a, b), ratio(c, d)))
}

fn positive_rat() -> impl Strategy<Value = Rat> {
    (1i64..500, 1i64..500).prop_map(|(a, b)| ratio(a, b))
}

fn face_set(faces: &[Vec<usize>]) -> BTreeSet<Vec<usize>> {
    faces.iter().map(|f| canonical_cycle(f)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn con_poly_is_antisymmetric_and_translation_invariant(a in point(), b in point(), c in point(), d in point()) {
        prop_assert_eq!(con_poly(&a, &b, &c), -con_poly(&a, &c, &b));
        let moved = |p: &RatPoint| p.offset(&d.x, &d.y);
        prop_assert_eq!(con_poly(&moved(&a), &moved(&b), &moved(&c)), con_poly(&a, &b, &c));
    }

    #[test]
    fn predicates_scale_quadratically(a in point(), b in point(), c in point(), alpha in positive_rat()) {
        let sq = &alpha * &alpha;
        prop_assert_eq!(con_poly(&a.scaled(&alpha), &b.scaled(&alpha), &c.scaled(&alpha)), &sq * con_poly(&a, &b, &c));
        prop_assert_eq!(dist_sq(&a.scaled(&alpha), &b.scaled(&alpha)), &sq * dist_sq(&a, &b));
    }

    #[test]
    fn in_circle_ignores_triangle_order(a in point(), b in point(), c in point(), q in point()) {
        prop_assume!(con_poly(&a, &b, &c) != Rat::from_integer(0.into()));
        let s = in_circle_sign(&a, &b, &c, &q).unwrap();
        for (x, y, z) in [(&a, &c, &b), (&b, &a, &c), (&b, &c, &a), (&c, &a, &b), (&c, &b, &a)] {
            prop_assert_eq!(in_circle_sign(x, y, z, &q).unwrap(), s);
        }
    }

    #[test]
    fn circumcenter_is_equidistant(a in point(), b in point(), c in point()) {
        prop_assume!(con_poly(&a, &b, &c) != Rat::from_integer(0.into()));
        let o = circumcenter(&a, &b, &c).unwrap();
        prop_assert_eq!(dist_sq(&o, &a), dist_sq(&o, &b));
        prop_assert_eq!(dist_sq(&o, &a), dist_sq(&o, &c));
    }

    #[test]
    fn rationalize_is_exact_on_representable_values(num in -100_000i64..100_000, shift in 0u32..20) {
        let den = 1i64 << shift;
        let x = num as f64 / den as f64;
        prop_assert_eq!(rationalize(x, den as u64).unwrap(), ratio(num, den));
    }

    #[test]
    fn rational_text_round_trips(a in point()) {
        prop_assert_eq!(parse_rat(&format_rat(&a.x)).unwrap(), a.x.clone());
        let pts = vec![a.clone(), a.scaled(&ratio(3, 7))];
        prop_assert_eq!(parse_points(&points_to_text(&pts)).unwrap(), pts);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn rotation_and_faces_rebuild_each_other(n in 4usize..14, seed in 0u64..10_000) {
        let g = random_instance(n, seed, 1000).unwrap().graph;
        let faces = faces_from_rotation(g.rotation()).unwrap();
        let rebuilt = faces_from_rotation(&rotation_from_faces(n, &faces)).unwrap();
        prop_assert_eq!(face_set(&rebuilt), face_set(&faces));
        let total: usize = faces.iter().map(Vec::len).sum();
        prop_assert_eq!(total, 2 * g.edges().len());
        prop_assert!(g.validate().ok);
        prop_assert!(g.edges().len() <= 3 * n - 6);
    }

    #[test]
    fn graph_json_round_trips(n in 4usize..14, seed in 0u64..10_000) {
        let g = random_instance(n, seed, 1000).unwrap().graph;
        prop_assert_eq!(parse_graph(&graph_to_json(&g)).unwrap(), g);
    }

    #[test]
    fn tutte_outer_polygon_turns_clockwise(n in 4usize..14, seed in 0u64..10_000, fan in any::<bool>()) {
        let g = if fan { fan_triangulation(n) } else { random_instance(n, seed, 1000).unwrap().graph };
        let pos = tutte_embedding(&g, 1.0).unwrap();
        let rat = |v: usize| RatPoint::new(rationalize(pos[v].0, 1 << 30).unwrap(), rationalize(pos[v].1, 1 << 30).unwrap());
        let outer = g.outer_face();
        let m = outer.len();
        for t in 0..m {
            let (a, b, c) = (rat(outer[t]), rat(outer[(t + 1) % m]), rat(outer[(t + 2) % m]));
            prop_assert!(con_poly(&a, &b, &c) > Rat::from_integer(0.into()));
        }
    }

    #[test]
    fn delaunay_is_similarity_invariant(n in 4usize..12, seed in 0u64..10_000, alpha in positive_rat()) {
        let inst = random_instance(n, seed, 1000).unwrap();
        let pts = inst.rat_points();
        let dt = delaunay(&pts).unwrap();
        let scaled: Vec<RatPoint> = pts.iter().map(|p| p.scaled(&alpha)).collect();
        let again = delaunay(&scaled).unwrap();
        prop_assert_eq!(&dt.edges, &again.edges);
        prop_assert_eq!(&dt.hull, &again.hull);
        prop_assert!(as_plane_triangulation(&dt, &pts).unwrap().validate().ok);
    }

    #[test]
    fn generating_points_satisfy_const_and_scale(n in 4usize..12, seed in 0u64..10_000, alpha in positive_rat()) {
        let inst = random_instance(n, seed, 1000).unwrap();
        let g = &inst.graph;
        let pts = inst.rat_points();
        let mut a = Assignment::new(Flavor::Const);
        for (v, p) in pts.iter().enumerate() {
            a.set(VarId::Px(v), p.x.clone());
            a.set(VarId::Py(v), p.y.clone());
        }
        for ((i, j), c) in witness_centers(g, &pts) {
            a.set(VarId::Cx(i, j), c.x);
            a.set(VarId::Cy(i, j), c.y);
        }
        let system = build_const(g, InteriorScope::AllOthers);
        prop_assert!(evaluate(&system, &a).unwrap().all_satisfied);
        let mut scaled = Assignment::new(Flavor::Const);
        for (&var, value) in &a.values {
            scaled.set(var, value * &alpha);
        }
        prop_assert!(evaluate(&system, &scaled).unwrap().all_satisfied);
        let dt = delaunay(&pts).unwrap();
        prop_assert_eq!(dt.edges.as_slice(), g.edges());
    }

    #[test]
    fn system_sizes_follow_closed_forms(n in 4usize..10, seed in 0u64..10_000, off_outer in any::<bool>()) {
        let g = random_instance(n, seed, 1000).unwrap().graph;
        let (e, c) = (g.edges().len(), g.outer_face().len());
        let scope = if off_outer { InteriorScope::OffOuterFace } else { InteriorScope::AllOthers };
        let per_edge = if off_outer { n - c } else { n - 2 };
        let cons = build_const(&g, scope);
        prop_assert_eq!(cons.var_count(), 2 * n + 2 * e);
        prop_assert_eq!(cons.len(), c + c * per_edge + e * (n - 1));
        let squ = build_constsqu(&g, scope);
        prop_assert_eq!(squ.var_count(), 2 * n + 3 * e);
        prop_assert_eq!(squ.len(), 729 * (c + c * per_edge) + 18 * e + 9 * e * (n - 2));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn zero_loss_means_floating_satisfaction(n in 4usize..9, seed in 0u64..1000, margin in 0.01f64..50.0, shrink in 0.0f64..1.0) {
        let g = random_instance(n, seed, 1000).unwrap().graph;
        let system = build_const(&g, InteriorScope::AllOthers);
        let compiled = Compiled::new(&system);
        let start = initialize(&g, &system, &SolverConfig::default(), 0);
        let mut x = compiled.to_vec(&start).unwrap();
        compiled.project_centers(&mut x);
        for v in &mut x {
            *v *= shrink;
        }
        let zero = compiled.loss(&x, margin) == 0.0;
        prop_assert_eq!(zero, compiled.check(&x, margin, 0.0).0);
    }

    #[test]
    fn solving_is_deterministic(n in 4usize..8, seed in 0u64..1000) {
        let g = random_instance(n, seed, 1000).unwrap().graph;
        let system = build_const(&g, InteriorScope::AllOthers);
        let config = SolverConfig { restarts: 2, max_iterations: 3000, ..SolverConfig::default() };
        let a = solve(&g, &system, &config);
        let b = solve(&g, &system, &config);
        prop_assert_eq!(a, b);
    }
}
