//! Cross-module properties over randomized inputs.

use std::f64::consts::PI;

use nonlocal_cp::assembly::{assemble, dot, h1_norm_sq, Field};
use nonlocal_cp::construct::{build_counterexample, solve_enlarged, BuildOptions, InnerProblem, Mode};
use nonlocal_cp::geometry::{enlarge, mesh, DomainSpec, Point};
use nonlocal_cp::mcatalog::{classify, find_increasing_pair, MFunctionSpec};
use nonlocal_cp::verify::{certify, CertVerdict, check_weak_supersolution, nonlocal_linear_solution_set};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn regular_polygon(n: usize, r: f64, shift: Point) -> DomainSpec {
    let vertices = (0..n)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / n as f64;
            [shift[0] + r * a.cos(), shift[1] + r * a.sin()]
        })
        .collect();
    DomainSpec::ConvexPolygon { vertices }
}

fn vertices(d: &DomainSpec) -> Vec<Point> {
    match d {
        DomainSpec::Rectangle { a, b, c, d } => vec![[*a, *c], [*b, *c], [*b, *d], [*a, *d]],
        DomainSpec::ConvexPolygon { vertices } => vertices.clone(),
        _ => unreachable!(),
    }
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let t = (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
    (p[0] - a[0] - t * dx).hypot(p[1] - a[1] - t * dy)
}

/// Hausdorff distance from a convex polygon to a convex subset of it: the
/// largest distance from an outer vertex to the inner boundary.
fn hausdorff_outer_to_inner(outer: &DomainSpec, inner: &DomainSpec) -> f64 {
    let iv = vertices(inner);
    vertices(outer)
        .iter()
        .map(|&p| {
            (0..iv.len())
                .map(|i| point_segment_distance(p, iv[i], iv[(i + 1) % iv.len()]))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn enlargement_is_strictly_monotone(n in 3usize..9, r in 0.2f64..3.0, t1 in 0.01f64..0.5, dt in 0.01f64..0.5) {
        let base = regular_polygon(n, r, [0.3, -0.7]);
        let (small, large) = (enlarge(&base, t1).unwrap(), enlarge(&base, t1 + dt).unwrap());
        for v in vertices(&small) {
            prop_assert!(large.contains(v, -1e-9));
        }
        prop_assert!(vertices(&large).iter().any(|&v| !small.contains(v, 0.0)));

        let disk = DomainSpec::Disk { center: [1.0, 2.0], radius: r };
        let (DomainSpec::Disk { radius: r1, .. }, DomainSpec::Disk { radius: r2, .. }) =
            (enlarge(&disk, t1).unwrap(), enlarge(&disk, t1 + dt).unwrap()) else { unreachable!() };
        prop_assert!(r2 > r1 && r1 > r);
    }

    #[test]
    fn hausdorff_bound_for_non_acute_corners(n in 4usize..10, r in 0.2f64..3.0, tau in 1e-4f64..0.5,
                                             w in 0.1f64..4.0, hgt in 0.1f64..4.0) {
        let poly = regular_polygon(n, r, [0.0, 0.0]);
        prop_assert!(hausdorff_outer_to_inner(&enlarge(&poly, tau).unwrap(), &poly) <= 2f64.sqrt() * tau * (1.0 + 1e-9));
        let rect = DomainSpec::Rectangle { a: 0.0, b: w, c: -hgt, d: 0.0 };
        let d = hausdorff_outer_to_inner(&enlarge(&rect, tau).unwrap(), &rect);
        prop_assert!((d - 2f64.sqrt() * tau).abs() <= 1e-9 * tau.max(1.0));
    }

    #[test]
    fn classification_is_scale_invariant(a in 0.1f64..10.0, b in 0.0f64..10.0, p in 0.1f64..3.0, c in 1e-3f64..1e3) {
        for spec in [
            MFunctionSpec::Affine { a, b },
            MFunctionSpec::Power { a, b, p },
            MFunctionSpec::RationalDecay { a },
        ] {
            let base = classify(&spec, 50.0, 128).unwrap();
            let scaled = classify(&spec.scaled(c), 50.0, 128).unwrap();
            prop_assert_eq!(base.verdict, scaled.verdict);
            prop_assert_eq!(find_increasing_pair(&spec, 50.0, 128).unwrap().is_none(), base.nonincreasing);
        }
    }

    #[test]
    fn quadratic_forms_are_positive(seed in any::<u64>()) {
        let msh = mesh(&DomainSpec::Disk { center: [0.0, 0.0], radius: 1.0 }, 0.2).unwrap();
        let ops = assemble(&msh);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = Field::new(&msh, (0..msh.node_count()).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        prop_assert!(h1_norm_sq(&v, &ops).unwrap() >= 0.0);
        prop_assert!(dot(v.values(), &ops.apply_mass(&v).unwrap()) > 0.0);
        let c = rng.random_range(-5.0..5.0);
        let lhs = h1_norm_sq(&v.scaled(c), &ops).unwrap();
        let rhs = c * c * h1_norm_sq(&v, &ops).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs());
    }
}

#[test]
fn measure_converges_under_refinement() {
    let domains = [
        DomainSpec::Disk { center: [0.0, 0.0], radius: 1.0 },
        regular_polygon(5, 1.0, [0.0, 0.0]),
        DomainSpec::Rectangle { a: 0.0, b: 2.0, c: 0.0, d: 1.0 },
        DomainSpec::Interval { a: -1.0, b: 2.0 },
    ];
    for d in &domains {
        let h = d.default_h();
        let e1 = (mesh(d, h).unwrap().measure() / d.measure() - 1.0).abs();
        let e2 = (mesh(d, h / 2.0).unwrap().measure() / d.measure() - 1.0).abs();
        assert!(e1 <= 0.05, "{d:?}: {e1}");
        assert!(e2 <= e1 + 1e-12, "{d:?}: {e1} -> {e2}");
    }
}

#[test]
fn interpolated_eigenfunction_norm_converges_at_second_order() {
    let cases: [(DomainSpec, fn(Point) -> f64, f64, f64); 2] = [
        (DomainSpec::Interval { a: 0.0, b: PI }, |p| p[0].sin(), PI / 2.0, PI / 20.0),
        (
            DomainSpec::Rectangle { a: 0.0, b: 1.0, c: 0.0, d: 1.0 },
            |p| (PI * p[0]).sin() * (PI * p[1]).sin(),
            PI * PI / 2.0,
            1.0 / 8.0,
        ),
    ];
    for (d, f, exact, h) in cases {
        let errs: Vec<f64> = [h, h / 2.0, h / 4.0]
            .iter()
            .map(|&h| {
                let msh = mesh(&d, h).unwrap();
                (h1_norm_sq(&Field::from_fn(&msh, f), &assemble(&msh)).unwrap() - exact).abs()
            })
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order >= 1.9, "{d:?}: order {order}");
        }
    }
}

#[test]
fn enlarged_eigenvalues_decrease_with_tau() {
    let domains = [
        (DomainSpec::Interval { a: -PI / 2.0, b: PI / 2.0 }, PI / 400.0),
        (DomainSpec::Rectangle { a: 0.0, b: 1.0, c: 0.0, d: 1.0 }, 1.0 / 24.0),
        (DomainSpec::Disk { center: [0.0, 0.0], radius: 1.0 }, 0.08),
        (regular_polygon(6, 1.0, [0.0, 0.0]), 0.08),
    ];
    for (d, h) in &domains {
        let inner = InnerProblem::new(d, *h).unwrap();
        let mut prev = inner.eigen.lambda;
        for tau in [0.02, 0.05, 0.1, 0.2, 0.4] {
            let outer = solve_enlarged(&inner, tau).unwrap();
            let margin = prev - outer.eigen.lambda;
            assert!(margin > 0.0, "{d:?} τ={tau}");
            if prev == inner.eigen.lambda {
                let resid = inner.eigen.density_residual.max(outer.eigen.density_residual);
                assert!(margin > 10.0 * resid, "{d:?}: margin {margin} vs residual {resid}");
            }
            prev = outer.eigen.lambda;
        }
    }
}

#[test]
fn solution_set_matches_affine_inversion() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..100 {
        let (a, b): (f64, f64) = (rng.random_range(0.1..10.0), rng.random_range(0.1..10.0));
        let (lambda1, norm): (f64, f64) = (rng.random_range(0.5..20.0), rng.random_range(0.5..5.0));
        let theta = lambda1 * a * rng.random_range(1.01..10.0);
        let exact = ((theta / lambda1 - a) / (b * norm)).sqrt();
        let set = nonlocal_linear_solution_set(&MFunctionSpec::Affine { a, b }, lambda1, norm, theta, 3.0 * exact).unwrap();
        assert_eq!(set.roots.len(), 1);
        assert!(((set.roots[0].s - exact) / exact).abs() <= 1e-10, "{a} {b} {theta}");
    }
}

#[test]
fn supersolution_margin_is_monotone_in_coefficient() {
    let d = DomainSpec::Disk { center: [0.0, 0.0], radius: 1.0 };
    let inner = InnerProblem::new(&d, 0.1).unwrap();
    let outer = solve_enlarged(&inner, 0.2).unwrap();
    let mut prev = f64::INFINITY;
    for coeff in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0] {
        let m = check_weak_supersolution(&outer.phi_restricted, coeff, &inner.ops).unwrap();
        assert!(m <= prev);
        prev = m;
    }
}

#[test]
fn two_dimensional_certificates() {
    let m = MFunctionSpec::Affine { a: 1.0, b: 1.0 };
    // On a fixed mesh ‖u_ε‖² saturates as ε → 0 (the boundary layer cannot
    // get thinner than one cell), so t₂/t₁ has to stay below that ceiling.
    let domains = [
        (DomainSpec::Rectangle { a: 0.0, b: 1.0, c: 0.0, d: 1.0 }, 1.0 / 24.0, 4.0),
        (DomainSpec::Disk { center: [0.0, 0.0], radius: 1.0 }, 0.05, 2.5),
        (regular_polygon(6, 1.0, [0.0, 0.0]), 0.05, 2.5),
    ];
    for (d, h, t2) in &domains {
        for mode in [Mode::Ssm, Mode::StrongCp, Mode::WeakCp] {
            let opts = BuildOptions { h: Some(*h), tau0: Some(0.25) };
            let run = || {
                let cex = build_counterexample(d, &m, 1.0, *t2, mode, opts).unwrap();
                certify(&cex, &m).unwrap()
            };
            let cert = run();
            assert_eq!(cert.verdict, CertVerdict::CertifiedFailure, "{d:?} {mode:?}: {:?}", cert.failed);
            assert_eq!(serde_json::to_string(&cert).unwrap(), serde_json::to_string(&run()).unwrap());
        }
    }
}
