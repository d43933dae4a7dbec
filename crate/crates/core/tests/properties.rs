use std::sync::OnceLock;

use crackinit::dual::{cutoff, MIN_SCALE_CELLS};
use crackinit::elastic::{Datum, Problem, ScalarField};
use crackinit::energy::{Integrand, ScalarCoefficient};
use crackinit::geometry::{cover_crack, CrackSet, Domain, Grid, Point, Rect, Side};
use crackinit::poincare::{constrained_quotient, optimal_constant, GraphDomain, PoincareCase};
use crackinit::singularity::{fit_power_law, local_energy};
use proptest::prelude::*;

fn smooth_field() -> &'static ScalarField {
    static F: OnceLock<ScalarField> = OnceLock::new();
    F.get_or_init(|| {
        let d = Domain::with_dirichlet_sides(Rect::unit_square(), &Side::ALL);
        let g = Grid::for_domain(&d, 64, 64).unwrap();
        let p = Problem::new(d, g, Integrand::p_power(2.0, ScalarCoefficient::Constant(2.0)).unwrap(), Datum::x1())
            .unwrap();
        ScalarField::from_fn(&p, &p.empty_crack(), |q| (2.0 * q.x).sin() * q.y + q.x * q.x).unwrap()
    })
}

fn grid32() -> Grid {
    Grid::new(32, 32, 1.0 / 32.0, Point::new(0.0, 0.0)).unwrap()
}

fn segment() -> impl Strategy<Value = (usize, usize, usize, bool)> {
    (0usize..=32, 0usize..=32, 1usize..12, any::<bool>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn local_energy_is_monotone_and_additive(
        x in 0.2f64..0.8, y in 0.2f64..0.8, r1 in 0.04f64..0.1, dr in 0.0f64..0.08,
    ) {
        let u = smooth_field();
        let c = Point::new(x, y);
        let a = local_energy(u, c, r1).unwrap();
        let b = local_energy(u, c, r1 + dr).unwrap();
        prop_assert!(b >= a);
        // disjoint balls: the energies add up to the cell sum over the union
        let other = Point::new(1.0 - x, 1.0 - y);
        if c.dist(other) > 2.0 * r1 + 0.05 {
            let g = u.grid();
            let union: f64 = (0..g.n_cells())
                .filter(|&k| g.cell_center(k).dist(c) < r1 || g.cell_center(k).dist(other) < r1)
                .map(|k| u.cell_gradient_power(k, 2.0))
                .sum();
            let sum = a + local_energy(u, other, r1).unwrap();
            prop_assert!((union - sum).abs() <= 1e-12 * union);
        }
    }

    #[test]
    fn power_laws_are_recovered(a in 0.3f64..2.5, c in 0.1f64..10.0) {
        let radii: Vec<f64> = (0..6).map(|k| 0.3 * 0.5f64.powi(k)).collect();
        let e: Vec<f64> = radii.iter().map(|r| c * r.powf(a)).collect();
        let (fa, fc) = fit_power_law(&radii, &e).unwrap();
        prop_assert!((fa - a).abs() < 0.02);
        prop_assert!((fc / c - 1.0).abs() < 1e-6);
    }

    #[test]
    fn crack_text_round_trips(segs in proptest::collection::vec(segment(), 1..5)) {
        let g = grid32();
        let h = g.h();
        let mut c = CrackSet::empty(&g);
        for (i, j, len, horizontal) in segs {
            let a = Point::new(i as f64 * h, j as f64 * h);
            let b = if horizontal {
                Point::new(((i + len).min(32)) as f64 * h, j as f64 * h)
            } else {
                Point::new(i as f64 * h, ((j + len).min(32)) as f64 * h)
            };
            if a != b {
                c.add_segment(a, b).unwrap();
            }
        }
        let back = CrackSet::parse(&g, &c.to_text()).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert!((back.h1_measure() - c.len() as f64 * h).abs() < 1e-12);
        let parts = c.connected_components();
        prop_assert_eq!(parts.iter().map(|p| p.len()).sum::<usize>(), c.len());
    }

    #[test]
    fn cutoffs_stay_in_range(i in 48usize..72, j in 48usize..80, len in 2usize..8) {
        let domain = Domain::with_dirichlet_sides(Rect::unit_square(), &Side::ALL);
        let g = Grid::new(128, 128, 1.0 / 128.0, Point::new(0.0, 0.0)).unwrap();
        let h = g.h();
        let crack = CrackSet::from_segment(
            &g,
            Point::new(i as f64 * h, j as f64 * h),
            Point::new((i + len) as f64 * h, j as f64 * h),
        )
        .unwrap();
        let cover = cover_crack(&crack, &domain, 1).unwrap();
        let phi = cutoff(&cover, &g).unwrap();
        prop_assert!(phi.nodal.iter().all(|&v| (0.0..=1.0).contains(&v)));
        for n in crack.nodes() {
            prop_assert_eq!(phi.nodal[n], 0.0);
        }
        for m in &cover.members {
            prop_assert!(m.shape.scale() >= MIN_SCALE_CELLS * h);
            prop_assert!(phi.gradient_bound <= 2.0 / m.shape.scale() * (1.0 + 1e-9));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // The computed constant bounds every constrained field, not just the extremal one.
    #[test]
    fn poincare_constant_bounds_random_fields(
        coef in proptest::collection::vec(-1.0f64..1.0, 12),
        case_idx in 0usize..4,
    ) {
        let case = PoincareCase::ALL[case_idx];
        let d = GraphDomain::flat(12);
        let c = optimal_constant(&d, case).unwrap().constant;
        let q = constrained_quotient(&d, case, |x, y, comp| {
            let k = 6 * comp;
            coef[k] + coef[k + 1] * x + coef[k + 2] * y + coef[k + 3] * (3.0 * x).sin()
                + coef[k + 4] * (2.0 * y).cos() + coef[k + 5] * x * y
        });
        prop_assert!(q <= c * (1.0 + 1e-8), "{} > {}", q, c);
    }
}
