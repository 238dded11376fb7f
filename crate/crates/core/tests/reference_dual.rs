use cfh_core::lattice::shift;
use cfh_core::numerics::sin_angle;
use cfh_core::reference_dual::{
    check_nondegenerate, involution_check, loop_residual, reference_dual_lattice, reference_dual_lattice_ordered,
    simpson_error_estimate,
};
use cfh_core::samplers::{cusp_pseudosphere, default_domain, default_pseudosphere, inverted_pseudosphere};
use cfh_core::{build_lattice, Axis, CfhError};

const LOOP_TOL: f64 = 1e-10;

#[test]
fn closed_loops_integrate_to_zero() {
    let dom = default_domain();
    let side = dom.a / 8.0;
    for e in [default_pseudosphere(), inverted_pseudosphere()] {
        for corner in dom.interior_grid(3) {
            let corner = corner.map(|c| c - side / 2.0);
            for plane in [(Axis::X, Axis::Y), (Axis::Y, Axis::Z), (Axis::Z, Axis::X)] {
                let r = loop_residual(&e, corner, plane, side, 16);
                assert!(r <= LOOP_TOL, "{} {plane:?} at {corner:?}: {r}", e.name);
            }
        }
    }
}

#[test]
fn reference_matches_closed_form_with_fourth_order_refinement() {
    let e = default_pseudosphere();
    let lat = build_lattice(default_domain(), 8).unwrap();
    let exact = e.exact_dual.clone().unwrap();
    let base = exact(lat.node(0, 0, 0));
    let err = |m: usize| {
        let field = reference_dual_lattice(&e, &lat, m).unwrap();
        let mut worst: f64 = 0.0;
        for k in 0..=8 {
            for j in 0..=8 {
                for i in 0..=8 {
                    worst = worst.max((field.get(i, j, k) - (exact(lat.node(i, j, k)) - base)).norm());
                }
            }
        }
        worst
    };
    let (e2, e4, e16) = (err(2), err(4), err(16));
    assert!(e2 / e4 >= 12.0, "ratio {}", e2 / e4);
    assert!(e16 < 1e-9, "{e16}");
}

#[test]
fn leg_order_does_not_matter() {
    let lat = build_lattice(default_domain(), 8).unwrap();
    for e in [default_pseudosphere(), inverted_pseudosphere()] {
        let a = reference_dual_lattice_ordered(&e, &lat, 16, [Axis::X, Axis::Y, Axis::Z]).unwrap();
        let b = reference_dual_lattice_ordered(&e, &lat, 16, [Axis::Z, Axis::Y, Axis::X]).unwrap();
        let diff = a.values.iter().zip(&b.values).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max);
        assert!(diff <= 10.0 * LOOP_TOL, "{}: {diff}", e.name);
        assert_eq!(b.path_order, [Axis::Z, Axis::Y, Axis::X]);
    }
}

#[test]
fn dual_of_the_dual_is_the_original() {
    let lat = build_lattice(default_domain(), 16).unwrap();
    for e in [default_pseudosphere(), inverted_pseudosphere()] {
        let r = involution_check(&e, &lat, 16).unwrap();
        assert!(r <= 1e-7, "{}: {r}", e.name);
    }
}

#[test]
fn field_tangents_are_parallel_to_the_hypersurface_tangents() {
    let e = inverted_pseudosphere();
    let lat = build_lattice(default_domain(), 8).unwrap();
    let field = reference_dual_lattice(&e, &lat, 16).unwrap();
    let h = 1e-3;
    for p in default_domain().interior_grid(3) {
        let s = e.sample_at(p);
        for axis in Axis::ALL {
            let d = (field.value_at(&e, shift(p, axis, h), 16) - field.value_at(&e, shift(p, axis, -h), 16)) / (2.0 * h);
            assert!(sin_angle(&d, &s.tangent(axis)) <= 1e-4, "{axis:?} at {p:?}");
        }
    }
}

#[test]
fn value_at_nodes_reproduces_node_values() {
    let e = inverted_pseudosphere();
    let lat = build_lattice(default_domain(), 4).unwrap();
    let field = reference_dual_lattice(&e, &lat, 16).unwrap();
    let v = field.value_at(&e, lat.node(2, 1, 3), 16);
    assert!((v - field.get(2, 1, 3)).norm() < 1e-15);
    assert_eq!(field.get(0, 0, 0).norm(), 0.0);
}

#[test]
fn quadrature_error_estimate_is_small() {
    let lat = build_lattice(default_domain(), 8).unwrap();
    let e = inverted_pseudosphere();
    let est = simpson_error_estimate(&e, &lat, 16);
    let finer = simpson_error_estimate(&e, &lat, 32);
    assert!(est / finer >= 12.0, "{est} {finer}");
    // Accumulated over the 3n edges of the longest path, far below the
    // discrete-dual error at this resolution (≈ 0.3).
    assert!(3.0 * 8.0 * est < 1e-4, "{est}");
}

#[test]
fn degenerate_regions_are_rejected() {
    let lat = build_lattice(default_domain(), 8).unwrap();
    let e = cusp_pseudosphere();
    assert!(matches!(check_nondegenerate(&e, &lat), Err(CfhError::DegenerateRegion(..))));
    assert!(matches!(reference_dual_lattice(&e, &lat, 16), Err(CfhError::DegenerateRegion(..))));
}
