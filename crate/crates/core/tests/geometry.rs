use hestonreg::discretization::Grid;
use hestonreg::geometry::{
    ball_inclusion_check, ball_membership, cycloidal_distance, BallKind, BallSpec, BoundaryPart, HalfPlaneDomain,
    Point, Region,
};
use hestonreg::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn distance_examples() {
    let z = Point::new(-1.5, 2.0);
    assert_eq!(cycloidal_distance(&z, &z).unwrap(), 0.0);
    let s = cycloidal_distance(&Point::new(0.0, 1.0), &Point::new(0.0, 0.0)).unwrap();
    assert!((s - 0.5f64.sqrt()).abs() < 1e-15);
    assert!(s * s <= 1.0);
    assert!(matches!(
        cycloidal_distance(&Point::new(0.0, -0.1), &Point::new(0.0, 0.0)),
        Err(Error::NegativeY { .. })
    ));
}

#[test]
fn membership_examples() {
    let o = Point::new(0.0, 0.0);
    let e = BallSpec::euclidean_half(o, 1.0).unwrap();
    assert!(ball_membership(&e, &Point::new(0.0, 0.5)));
    assert!(!ball_membership(&e, &Point::new(0.5, 0.0)));
    let c = BallSpec::cycloidal(o, 1.0).unwrap();
    assert!(ball_membership(&c, &Point::new(0.0, 1.0)));
    assert_eq!(c.kind, BallKind::Cycloidal);
    assert!(BallSpec::euclidean_half(o, 0.0).is_err());
    assert!(BallSpec::euclidean_half(Point::new(0.0, -1.0), 1.0).is_err());
}

#[test]
fn inclusion_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let r = ball_inclusion_check(&Point::new(0.0, 0.0), 0.5, 10_000, &mut rng).unwrap();
    assert!(r.passed());
    let r = ball_inclusion_check(&Point::new(0.0, 2.0), 0.5, 10_000, &mut rng).unwrap();
    assert!((r.outer_radius - 1.5).abs() < 1e-15);
    assert!(r.passed());
    let r = ball_inclusion_check(&Point::new(3.0, 0.1), 1e-9, 1000, &mut rng).unwrap();
    assert!(r.passed());
}

#[test]
fn boundary_partition_of_grid_nodes() {
    let d = HalfPlaneDomain::new(-1.0, 2.0, 1.5).unwrap();
    let g = Grid::new(d, 9, 7, 2.0).unwrap();
    let (nx, ny) = (g.nx(), g.ny());
    let mut counts = [0usize; 3];
    for j in 0..=ny {
        for i in 0..=nx {
            let on_edge = i == 0 || i == nx || j == 0 || j == ny;
            let part = g.classify_node(i, j);
            match part {
                BoundaryPart::Interior => {
                    assert!(!on_edge);
                    counts[0] += 1
                }
                BoundaryPart::Degenerate => {
                    assert!(j == 0 && i > 0 && i < nx);
                    counts[1] += 1
                }
                BoundaryPart::NonDegenerate => {
                    assert!(on_edge && !(j == 0 && i > 0 && i < nx));
                    counts[2] += 1
                }
                BoundaryPart::Outside => panic!("grid node outside its domain"),
            }
            assert_eq!(g.is_dirichlet(i, j), part == BoundaryPart::NonDegenerate);
        }
    }
    assert_eq!(counts[1], nx - 1);
    assert_eq!(counts[2], 2 * (ny + 1) + (nx - 1));
    assert_eq!(counts.iter().sum::<usize>(), g.node_count());
    assert_eq!(g.classify_node(0, 0), BoundaryPart::NonDegenerate);
    assert_eq!(g.classify_node(nx, 0), BoundaryPart::NonDegenerate);
}

#[test]
fn regions_translate_with_points() {
    let b = Region::Ball(BallSpec::euclidean_half(Point::new(1.0, 0.0), 0.3).unwrap());
    let p = Point::new(1.1, 0.1);
    assert!(b.contains(&p));
    assert!(b.translated(2.0).contains(&p.translated(2.0)));
    assert!(!b.translated(2.0).contains(&p));
}

fn upper(lo: f64, hi: f64) -> impl Strategy<Value = Point> {
    (lo..hi, 0.0..10.0f64).prop_map(|(x, y)| Point::new(x, y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn distance_is_symmetric_and_dominated(z in upper(-10.0, 10.0), w in upper(-10.0, 10.0)) {
        let s = cycloidal_distance(&z, &w).unwrap();
        prop_assert_eq!(s, cycloidal_distance(&w, &z).unwrap());
        prop_assert!(s * s <= z.distance(&w) * (1.0 + 1e-14));
    }

    #[test]
    fn axis_centres_give_reverse_bound(z in upper(-10.0, 10.0), x0 in -10.0..10.0f64) {
        let z0 = Point::new(x0, 0.0);
        let s = cycloidal_distance(&z, &z0).unwrap();
        prop_assert!(z.distance(&z0) <= 2.0 * s * s * (1.0 + 1e-14));
    }
}
