use proptest::prelude::*;
use quadrascope::convexity::{compute_zmax, ExtendedReal, ZmaxConfig};
use quadrascope::estimates::{estimate_chain, EstimateConfig};
use quadrascope::generators::{planted_flat_edge_map, random_map, random_point, random_unitary};
use quadrascope::io::{parse_problem, problem_json, Problem};
use quadrascope::oracle::{sample_image, Region};
use quadrascope::{seeds, support_frame, CVector, Cx, QuadraticMap, SymMatrix};

fn scaled(map: &QuadraticMap, s: f64) -> QuadraticMap {
    QuadraticMap::new(
        map.field(),
        map.a().iter().map(|a| a.scaled(s)).collect(),
        map.v().iter().map(|v| v * Cx::new(s, 0.0)).collect(),
        map.f0().iter().map(|f| f * s).collect(),
    )
    .unwrap()
}

fn close(a: &ExtendedReal, b: &ExtendedReal, rel: f64) -> bool {
    match (a, b) {
        (ExtendedReal::Finite(x), ExtendedReal::Finite(y)) => (x - y).abs() <= rel * (1.0 + x.abs().max(y.abs())),
        (ExtendedReal::Infinite, ExtendedReal::Infinite) => true,
        _ => false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn height_is_the_metric_distance(seed in any::<u64>(), m in 1usize..5, n in 1usize..6, complex in any::<bool>()) {
        let mut rng = seeds::rng(seed, "prop-identity");
        let (map, c_plus) = random_map(&mut rng, m, n, complex);
        let frame = support_frame(&map, &c_plus).unwrap();
        let x = random_point(&mut rng, n, map.field(), 3.0);
        let y = map.evaluate(&x).unwrap();
        let d = &x - &frame.x0;
        let dist = d.dotc(&(map.combined_matrix(&c_plus).matrix() * &d)).re;
        let h = frame.height(&map, &y);
        prop_assert!((h - dist).abs() <= 1e-9 * (1.0 + h.abs()));
    }

    #[test]
    fn problem_json_round_trips(seed in any::<u64>(), m in 1usize..4, n in 1usize..4, complex in any::<bool>()) {
        let mut rng = seeds::rng(seed, "prop-json");
        let (map, _) = random_map(&mut rng, m, n, complex);
        let text = serde_json::to_string(&problem_json(&Problem::Map(map.clone()))).unwrap();
        let back = parse_problem(&text).unwrap();
        prop_assert!(back.warnings.is_empty());
        prop_assert_eq!(back.problem, Problem::Map(map));
    }

    #[test]
    fn sphere_slices_are_flat(seed in any::<u64>(), m in 1usize..4, n in 2usize..5, z in 0.0f64..4.0) {
        let mut rng = seeds::rng(seed, "prop-sphere");
        let (map, c_plus) = random_map(&mut rng, m, n, seed % 2 == 0);
        let frame = support_frame(&map, &c_plus).unwrap();
        let cloud = sample_image(&map, &Region::Sphere { frame: frame.clone(), z }, 50, seed).unwrap();
        for y in &cloud.points {
            prop_assert!((frame.height(&map, y) - z).abs() <= 1e-12 * (1.0 + y.iter().map(|v| v.abs()).sum::<f64>()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn zmax_scales_with_the_map(seed in any::<u64>(), n in 2usize..5, s in 0.1f64..10.0) {
        let mut rng = seeds::rng(seed, "prop-scale");
        let p = planted_flat_edge_map(&mut rng, 2, n, seed % 2 == 0);
        let frame = support_frame(&p.map, &p.c_plus).unwrap();
        let z = compute_zmax(&p.map, &frame, &ZmaxConfig::default()).unwrap().value;
        let big = scaled(&p.map, s);
        let zs = compute_zmax(&big, &support_frame(&big, &p.c_plus).unwrap(), &ZmaxConfig::default()).unwrap().value;
        let expected = ExtendedReal::from_f64(s * z.value());
        prop_assert!(close(&zs, &expected, 1e-7), "{zs} vs {expected}");
    }

    #[test]
    fn zmax_ignores_unitary_changes_of_variables(seed in any::<u64>(), m in 2usize..4, n in 2usize..5, complex in any::<bool>()) {
        let mut rng = seeds::rng(seed, "prop-unitary");
        let p = planted_flat_edge_map(&mut rng, m, n, complex);
        let q = random_unitary(&mut rng, n, p.map.field());
        let moved = p.map.change_basis(&q).unwrap();
        let z = compute_zmax(&p.map, &support_frame(&p.map, &p.c_plus).unwrap(), &ZmaxConfig::default()).unwrap().value;
        let zq = compute_zmax(&moved, &support_frame(&moved, &p.c_plus).unwrap(), &ZmaxConfig::default()).unwrap().value;
        prop_assert!(close(&z, &zq, 1e-6), "{z} vs {zq}");
    }

    #[test]
    fn estimates_stay_below_zmax(seed in any::<u64>(), n in 2usize..5, complex in any::<bool>()) {
        let mut rng = seeds::rng(seed, "prop-estimates");
        let p = planted_flat_edge_map(&mut rng, 2, n, complex);
        let frame = support_frame(&p.map, &p.c_plus).unwrap();
        let z = compute_zmax(&p.map, &frame, &ZmaxConfig::default()).unwrap().value.value();
        let r = estimate_chain(&p.map, &frame, &EstimateConfig::default());
        prop_assert!(r.is_ordered(1e-12));
        prop_assert!(r.z_est <= z * (1.0 + 1e-7), "{} > {z}", r.z_est);
    }
}

#[test]
fn zero_vector_map_has_zero_radius_through_the_origin() {
    // Homogeneous map: w(c) = 0, so every singular pencil is solved by x = 0.
    let a = vec![SymMatrix::identity(quadrascope::Field::Complex, 3), SymMatrix::diag(quadrascope::Field::Complex, &[1.0, 0.0, -1.0])];
    let map = QuadraticMap::new(quadrascope::Field::Complex, a, vec![CVector::zeros(3); 2], vec![0.0; 2]).unwrap();
    let frame = support_frame(&map, &[1.0, 0.0]).unwrap();
    assert_eq!(compute_zmax(&map, &frame, &ZmaxConfig::default()).unwrap().value, ExtendedReal::Finite(0.0));
}
