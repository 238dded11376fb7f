use cfh_core::lattice::{estimate_bound_constants, DEFAULT_SAFETY};
use cfh_core::samplers::{default_domain, default_pseudosphere, inverted_pseudosphere};
use cfh_core::{build_domain, build_lattice, CfhError};
use proptest::prelude::*;

#[test]
fn domains_must_be_cubes() {
    assert!(matches!(build_domain(0.0, 1.0, 0.0, 2.0, 0.0, 1.0), Err(CfhError::UnequalSides(_))));
    let d = build_domain(0.0, 2.0, 1.0, 3.0, -1.0, 1.0).unwrap();
    assert_eq!(d.a, 2.0);
}

#[test]
fn lattices_need_a_positive_resolution() {
    assert_eq!(build_lattice(default_domain(), 0), Err(CfhError::InvalidN(0)));
    let lat = build_lattice(default_domain(), 4).unwrap();
    assert_eq!(lat.node_count(), 125);
    assert_eq!(lat.node(4, 4, 4), [1.5, 1.0, 1.0]);
    assert_eq!(lat.index(1, 2, 3), (3 * 5 + 2) * 5 + 1);
}

proptest! {
    #[test]
    fn lattice_nodes_are_evenly_spaced(n in 1usize..64, i in 0usize..64) {
        let lat = build_lattice(default_domain(), n).unwrap();
        let i = i % (n + 1);
        let x = lat.x(i);
        prop_assert!((x - (0.5 + i as f64 / n as f64)).abs() < 1e-14);
        prop_assert!((lat.delta - 1.0 / n as f64).abs() < 1e-15);
    }
}

#[test]
fn bound_constants_of_the_pseudosphere() {
    let c = estimate_bound_constants(&default_pseudosphere(), &default_domain(), 65, 1.0).unwrap();
    // C₁ = max(P, 1/P, |κᵢ|) = |κ₂| = sinh u at u = 1.5;
    // C₂ = max |∂κ| = |∂κ₁| = csch u coth u at u = 0.5.
    assert!((c.c1 - 1.5f64.sinh()).abs() < 1e-12, "{}", c.c1);
    assert!((c.c2 - 0.5f64.cosh() / 0.5f64.sinh().powi(2)).abs() < 1e-12, "{}", c.c2);
    let inflated = estimate_bound_constants(&default_pseudosphere(), &default_domain(), 65, DEFAULT_SAFETY).unwrap();
    assert!((inflated.c1 - DEFAULT_SAFETY * c.c1).abs() < 1e-12);
    assert!((inflated.lattice_bound(8) / inflated.slice_bound(8) - 1.5).abs() < 1e-12);
}

#[test]
fn bound_constants_are_stable_under_grid_doubling() {
    let e = inverted_pseudosphere();
    let dom = default_domain();
    let coarse = estimate_bound_constants(&e, &dom, 33, 1.1).unwrap();
    let fine = estimate_bound_constants(&e, &dom, 65, 1.1).unwrap();
    assert!((coarse.c1 - fine.c1).abs() < 0.05 * fine.c1);
    assert!((coarse.c2 - fine.c2).abs() < 0.05 * fine.c2);
}

#[test]
fn bound_constant_arguments_are_checked() {
    let e = default_pseudosphere();
    assert!(estimate_bound_constants(&e, &default_domain(), 8, 1.1).is_err());
    assert!(estimate_bound_constants(&e, &default_domain(), 33, 0.5).is_err());
}
