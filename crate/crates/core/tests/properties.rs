mod common;

use std::collections::BTreeMap;

use common::{central_difference, random_bivector, random_shaped_poly, relative_error};
use poisson_corners::corners::{
    boundary_faces, corner_depth, fibre_product_dim, tangent_map, FibreProductDesc, ModelSpace, OpenBox, Region,
    SmoothMapDesc,
};
use poisson_corners::expr::{
    canonicalize, differentiate, evaluate, expr_equal_on, parse, ratio, EqualityVerdict, Expr, Point, Poly,
};
use poisson_corners::poisson::{bracket, jacobi_defect, BivectorField};
use poisson_corners::sampling::SamplingConfig;
use poisson_corners::sheaf::{
    check_morphism_square, germ_at, germ_equal, in_maximal_ideal, pullback_morphism, residue_exact, FunctionPresheaf,
    OpenLattice, Section,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn same(a: &Expr, b: &Expr) -> bool {
    Poly::from_expr(a).sub(&Poly::from_expr(b)).is_zero()
}

fn space3() -> ModelSpace {
    ModelSpace::new(3, 1).unwrap()
}

fn plane_presheaf() -> FunctionPresheaf {
    let s = ModelSpace::new(2, 1).unwrap();
    let open = |n: &str, b: &[(i64, i64)]| (n.to_string(), Region::single(s, OpenBox::from_ints(b)).unwrap());
    let lattice = OpenLattice::new(
        s,
        vec![
            open("U", &[(0, 3), (-2, 2)]),
            open("A", &[(0, 2), (-2, 2)]),
            open("B", &[(1, 3), (-2, 2)]),
            open("AB", &[(1, 2), (-2, 2)]),
            open("C", &[(1, 2), (-1, 1)]),
        ],
    )
    .unwrap();
    FunctionPresheaf::new(lattice)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn canonicalize_is_idempotent(seed in any::<u64>()) {
        let e = random_shaped_poly(&mut rng(seed), 3, 4);
        let once = canonicalize(&e);
        prop_assert_eq!(canonicalize(&once), once);
    }

    #[test]
    fn parse_print_roundtrip_on_canonical_forms(seed in any::<u64>()) {
        let c = canonicalize(&random_shaped_poly(&mut rng(seed), 3, 4));
        prop_assert_eq!(parse(&c.to_string(), 3).unwrap(), c);
    }

    #[test]
    fn derivative_commutes_with_sums(seed in any::<u64>(), var in 1usize..=3) {
        let mut r = rng(seed);
        let (a, b) = (random_shaped_poly(&mut r, 3, 4), random_shaped_poly(&mut r, 3, 4));
        let lhs = differentiate(&a.clone().add(b.clone()), var);
        let rhs = canonicalize(&differentiate(&a, var).add(differentiate(&b, var)));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn derivative_matches_finite_differences(seed in any::<u64>(), var in 1usize..=3) {
        let mut r = rng(seed);
        let e = random_shaped_poly(&mut r, 3, 4);
        let d = differentiate(&e, var);
        let p: Vec<f64> = (0..3).map(|_| r.gen_range(-1.5..1.5)).collect();
        let f = |x: &[f64]| Poly::from_expr(&e).eval_f64(x).unwrap();
        let fd = central_difference(f, &p, var - 1, 1e-5);
        let exact = Poly::from_expr(&d).eval_f64(&p).unwrap();
        prop_assert!(relative_error(fd, exact) < 1e-6, "{} vs {}", fd, exact);
    }

    #[test]
    fn residue_is_a_ring_homomorphism(seed in any::<u64>()) {
        let p = plane_presheaf();
        let mut r = rng(seed);
        let x = Point::new(vec![ratio(r.gen_range(0..20), 10), ratio(r.gen_range(-15..15), 10)]);
        let g = |r: &mut ChaCha8Rng| germ_at(&p, &p.section(random_shaped_poly(r, 2, 3), "A").unwrap(), &x).unwrap();
        let (a, b) = (g(&mut r), g(&mut r));
        let (ra, rb) = (residue_exact(&a).unwrap(), residue_exact(&b).unwrap());
        prop_assert_eq!(residue_exact(&a.add(&b).unwrap()).unwrap(), &ra + &rb);
        prop_assert_eq!(residue_exact(&a.mul(&b).unwrap()).unwrap(), &ra * &rb);
    }

    #[test]
    fn maximal_ideal_is_an_ideal(seed in any::<u64>()) {
        let p = plane_presheaf();
        let mut r = rng(seed);
        let x = Point::new(vec![ratio(r.gen_range(0..20), 10), ratio(r.gen_range(-15..15), 10)]);
        // f - f(x) vanishes at x
        let vanishing = |r: &mut ChaCha8Rng| {
            let f = random_shaped_poly(r, 2, 3);
            let v = poisson_corners::expr::evaluate_exact(&f, &x).unwrap();
            let s = p.section(f.sub(Expr::constant(v)), "A").unwrap();
            germ_at(&p, &s, &x).unwrap()
        };
        let (a, b) = (vanishing(&mut r), vanishing(&mut r));
        let c = germ_at(&p, &p.section(random_shaped_poly(&mut r, 2, 3), "A").unwrap(), &x).unwrap();
        prop_assert!(in_maximal_ideal(&a).unwrap());
        prop_assert!(in_maximal_ideal(&a.add(&b).unwrap()).unwrap());
        prop_assert!(in_maximal_ideal(&c.mul(&a).unwrap()).unwrap());
    }

    #[test]
    fn germ_equality_is_an_equivalence(seed in any::<u64>()) {
        let p = plane_presheaf();
        let c = SamplingConfig::default();
        let mut r = rng(seed);
        let x = Point::new(vec![ratio(3, 2), ratio(1, 2)]);
        let base = random_shaped_poly(&mut r, 2, 3);
        let other = random_shaped_poly(&mut r, 2, 3);
        let exprs = [base.clone(), canonicalize(&base), other];
        let germs: Vec<_> = exprs
            .iter()
            .zip(["A", "B", "AB"])
            .map(|(e, d)| germ_at(&p, &p.section(e.clone(), d).unwrap(), &x).unwrap())
            .collect();
        let eq = |i: usize, j: usize| germ_equal(&germs[i], &germs[j], &c).unwrap().is_equal();
        for i in 0..3 {
            prop_assert!(eq(i, i));
            for j in 0..3 {
                prop_assert_eq!(eq(i, j), eq(j, i));
                for k in 0..3 {
                    prop_assert!(!(eq(i, j) && eq(j, k)) || eq(i, k));
                }
            }
        }
        prop_assert!(eq(0, 1));
    }

    #[test]
    fn gluing_is_unique(seed in any::<u64>()) {
        let p = plane_presheaf();
        let e = random_shaped_poly(&mut rng(seed), 2, 3);
        let cover = vec!["A".to_string(), "B".to_string()];
        let parts1 = vec![p.section(e.clone(), "A").unwrap(), p.section(canonicalize(&e), "B").unwrap()];
        let parts2 = vec![p.section(canonicalize(&e), "A").unwrap(), p.section(e.clone(), "B").unwrap()];
        let g1 = p.glue(&cover, "U", &parts1).unwrap();
        let g2 = p.glue(&cover, "U", &parts2).unwrap();
        prop_assert_eq!(p.sections_equal(&g1.section, &g2.section).unwrap(), EqualityVerdict::ProvenEqual);
    }

    #[test]
    fn restriction_composition_holds(seed in any::<u64>()) {
        let p = plane_presheaf();
        let mut r = rng(seed);
        let sections: Vec<Section> = (0..4).map(|_| p.section(random_shaped_poly(&mut r, 2, 4), "U").unwrap()).collect();
        let report = p.check_composition(&sections).unwrap();
        prop_assert!(report.passed());
        prop_assert!(report.chains_checked > 0);
    }

    #[test]
    fn pullbacks_pass_the_morphism_square(seed in any::<u64>(), flip in any::<bool>()) {
        let p = plane_presheaf();
        let s = p.ambient();
        let comps = if flip { vec![Expr::var(1), Expr::var(2).neg()] } else { vec![Expr::var(1), Expr::var(2)] };
        let map = SmoothMapDesc::new(s, s, comps).unwrap();
        let m = pullback_morphism(&map, p.lattice(), p.lattice(), &BTreeMap::new(), p.sampling()).unwrap();
        let mut r = rng(seed);
        let probes: Vec<Section> = ["U", "A", "B"]
            .iter()
            .map(|d| p.section(random_shaped_poly(&mut r, 2, 3), d).unwrap())
            .collect();
        prop_assert!(check_morphism_square(&m, &p, &p, &probes).unwrap().passed());
    }

    #[test]
    fn bracket_is_antisymmetric_and_bilinear(seed in any::<u64>(), a in -5i64..5, b in 1i64..5) {
        let mut r = rng(seed);
        let pi = random_bivector(&mut r, space3(), 2);
        let (f, g, h) = (random_shaped_poly(&mut r, 3, 3), random_shaped_poly(&mut r, 3, 3), random_shaped_poly(&mut r, 3, 3));
        prop_assert!(same(&bracket(&f, &g, &pi).unwrap(), &bracket(&g, &f, &pi).unwrap().neg()));
        prop_assert_eq!(bracket(&f, &f, &pi).unwrap(), Expr::zero());
        let (ca, cb) = (Expr::constant(ratio(a, 1)), Expr::constant(ratio(1, b)));
        let lhs = bracket(&ca.clone().mul(f.clone()).add(cb.clone().mul(h.clone())), &g, &pi).unwrap();
        let rhs = ca.mul(bracket(&f, &g, &pi).unwrap()).add(cb.mul(bracket(&h, &g, &pi).unwrap()));
        prop_assert!(same(&lhs, &rhs));
    }

    #[test]
    fn leibniz_in_each_argument(seed in any::<u64>()) {
        let mut r = rng(seed);
        let pi = random_bivector(&mut r, space3(), 2);
        let (f, g, s) = (random_shaped_poly(&mut r, 3, 3), random_shaped_poly(&mut r, 3, 3), random_shaped_poly(&mut r, 3, 3));
        let lhs = bracket(&f, &g.clone().mul(s.clone()), &pi).unwrap();
        let rhs = bracket(&f, &g, &pi).unwrap().mul(s.clone()).add(g.clone().mul(bracket(&f, &s, &pi).unwrap()));
        prop_assert!(same(&lhs, &rhs));
        let lhs = bracket(&g.clone().mul(s.clone()), &f, &pi).unwrap();
        let rhs = bracket(&g, &f, &pi).unwrap().mul(s.clone()).add(g.clone().mul(bracket(&s, &f, &pi).unwrap()));
        prop_assert!(same(&lhs, &rhs));
    }

    #[test]
    fn coordinate_triples_suffice_for_jacobi(seed in any::<u64>()) {
        let mut r = rng(seed);
        let so3 = BivectorField::from_entries(
            ModelSpace::euclidean(3),
            &[((1, 2), Expr::var(3)), ((2, 3), Expr::var(1)), ((3, 1), Expr::var(2))],
        )
        .unwrap();
        let (f, g, h) = (random_shaped_poly(&mut r, 3, 2), random_shaped_poly(&mut r, 3, 2), random_shaped_poly(&mut r, 3, 2));
        let d = jacobi_defect(&f, &g, &h, &so3).unwrap();
        let region = ModelSpace::euclidean(3).default_sample_region();
        for x in region.points(16, seed) {
            prop_assert!(evaluate(&d, &x).unwrap().abs() <= 1e-9);
        }
    }

    #[test]
    fn corner_depth_vanishes_exactly_inside(n in 1usize..4, k_raw in 0usize..4, coords in prop::collection::vec(0i64..3, 3)) {
        let k = k_raw.min(n);
        let s = ModelSpace::new(n, k).unwrap();
        let p = Point::from_ints(&coords[..n]);
        let interior = coords[..k].iter().all(|c| *c > 0);
        prop_assert_eq!(corner_depth(&s, &p).unwrap() == 0, interior);
    }

    #[test]
    fn boundary_faces_shape(n in 1usize..6, k_raw in 0usize..6) {
        let k = k_raw.min(n);
        let faces = boundary_faces(&ModelSpace::new(n, k).unwrap());
        prop_assert_eq!(faces.len(), k);
        for (_, f) in faces {
            prop_assert_eq!((f.n, f.k), (n - 1, k - 1));
        }
    }

    #[test]
    fn fibre_dimension_is_symmetric(nx in 0usize..4, ny in 0usize..4, nz in 1usize..4) {
        let z = ModelSpace::euclidean(nz);
        let zero = |n: usize| SmoothMapDesc::new(ModelSpace::euclidean(n), z, vec![Expr::zero(); nz]).unwrap();
        let d1 = FibreProductDesc::new(zero(nx), zero(ny)).unwrap();
        let d2 = FibreProductDesc::new(zero(ny), zero(nx)).unwrap();
        prop_assert_eq!(fibre_product_dim(&d1), fibre_product_dim(&d2));
    }

    #[test]
    fn tangent_map_matches_finite_differences(seed in any::<u64>(), quadratic in any::<bool>()) {
        let mut r = rng(seed);
        let degree = if quadratic { 2 } else { 1 };
        let comps: Vec<Expr> = (0..2).map(|_| common::random_poly(&mut r, 2, degree, 3)).collect();
        let s = ModelSpace::euclidean(2);
        let phi = SmoothMapDesc::new(s, s, comps.clone()).unwrap();
        let u = Point::new(vec![ratio(r.gen_range(-10..10), 7), ratio(r.gen_range(-10..10), 7)]);
        let j = tangent_map(&phi, &u).unwrap();
        for (c, row) in comps.iter().zip(&j) {
            for (col, entry) in row.iter().enumerate() {
                let f = |x: &[f64]| Poly::from_expr(c).eval_f64(x).unwrap();
                let fd = central_difference(f, &u.to_f64(), col, 1e-5);
                prop_assert!(relative_error(fd, *entry) < 1e-6);
            }
        }
    }
}

#[test]
fn sampled_equality_for_trig_identity() {
    let a = parse("sin(x1)^2 + cos(x1)^2", 1).unwrap();
    let v =
        expr_equal_on(&a, &Expr::one(), &ModelSpace::euclidean(1).default_sample_region(), &SamplingConfig::default());
    assert_eq!(v, EqualityVerdict::SampledEqual { points: 64 });
    assert!(!Poly::from_expr(&a).sub(&Poly::one()).is_zero());
}
