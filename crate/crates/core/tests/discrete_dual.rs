use cfh_core::convergence::fit_slope;
use cfh_core::discrete_dual::{
    assemble, connector_constant_residual, connector_edges, connector_tangent_deviation, connector_u, connector_v,
    connector_z, parallel_segment, surface_xbar, surface_yunder, u_curve, u_segment, v_curve, v_segment, z_spine,
    Scheme,
};
use cfh_core::lattice::shift;
use cfh_core::numerics::{fd1_lin, sin_angle};
use cfh_core::samplers::{cusp_pseudosphere, default_domain, inverted_pseudosphere, swap_xy_entry};
use cfh_core::{build_domain, build_lattice, Axis, CfhError, V4};
use proptest::prelude::*;

fn rel_close(a: V4, b: V4, tol: f64) -> bool {
    (a - b).norm() <= tol * a.norm().max(b.norm()).max(1.0)
}

#[test]
fn curves_start_at_zero_and_nodes_follow_the_translation_formula() {
    let e = inverted_pseudosphere();
    let lat = build_lattice(default_domain(), 6).unwrap();
    let k = 2;
    let s = surface_xbar(&e, &lat, k, 3);
    assert_eq!(s.node(0, 0), V4::zeros());
    let spine = v_curve(&e, &lat, 0, k, 1);
    assert_eq!(spine.node_value(0), V4::zeros());
    for j in 0..=6 {
        let u = u_curve(&e, &lat, j, k, 1);
        assert_eq!(u.node_value(0), V4::zeros());
        for i in 0..=6 {
            assert!(rel_close(s.node(i, j), spine.node_value(j) + u.node_value(i), 1e-15));
        }
    }
    let t = surface_yunder(&e, &lat, k, 3);
    let spine = u_curve(&e, &lat, 0, k, 1);
    for i in 0..=6 {
        let v = v_curve(&e, &lat, i, k, 1);
        for j in 0..=6 {
            assert!(rel_close(t.node(i, j), spine.node_value(i) + v.node_value(j), 1e-15));
        }
    }
    assert_eq!(z_spine(&e, &lat, Scheme::XBar, 2).node_value(0), V4::zeros());
}

#[test]
fn curves_are_continuous_at_cell_joints() {
    let e = inverted_pseudosphere();
    let lat = build_lattice(default_domain(), 8).unwrap();
    let (j, k) = (3, 5);
    let curve = u_curve(&e, &lat, j, k, 4);
    let mut left_limit = V4::zeros();
    for i in 0..8 {
        // Right limit at x_i is the node value; left limit is the previous
        // segment evaluated at its right end.
        assert!(rel_close(curve.node_value(i), left_limit, 1e-13), "joint {i}");
        left_limit = curve.node_value(i) + u_segment(&e, &lat, i, j, k, lat.x(i + 1));
    }
    assert!(rel_close(curve.node_value(8), left_limit, 1e-13));
    assert_eq!(curve.values.len(), 8 * 4 + 1);
}

#[test]
fn segment_tangents_are_parallel_to_hypersurface_tangents() {
    let e = inverted_pseudosphere();
    let lat = build_lattice(default_domain(), 4).unwrap();
    let h = lat.delta / 100.0;
    for (i, j, k) in [(0, 0, 0), (1, 2, 3), (3, 3, 1)] {
        for frac in [0.25, 0.5, 0.75] {
            let x = lat.x(i) + frac * lat.delta;
            let d = fd1_lin(|t| u_segment(&e, &lat, i, j, k, x + t), h);
            let fx = e.sample_at([x, lat.y(j), lat.z(k)]).f_x();
            assert!(sin_angle(&d, &fx) <= 1e-8, "u at ({i},{j},{k}) {frac}");
            let z = lat.z(k) + frac * lat.delta;
            let anchor = lat.node(i, j, k);
            let dz = fd1_lin(|t| parallel_segment(&e, anchor, 1, [lat.x(i), lat.y(j), z + t]), h);
            let fz = e.sample_at([lat.x(i), lat.y(j), z]).f_z();
            assert!(sin_angle(&dz, &fz) <= 1e-10, "z at ({i},{j},{k}) {frac}");
        }
    }
}

#[test]
fn right_tangent_of_v_segment_is_the_dual_tangent() {
    let e = inverted_pseudosphere();
    let lat = build_lattice(default_domain(), 4).unwrap();
    for (i, j, k) in [(0, 0, 0), (2, 1, 3)] {
        let p = lat.node(i, j, k);
        let d = fd1_lin(|t| v_segment(&e, &lat, i, j, k, lat.y(j) + t), 1e-3);
        let s = e.sample_at(p);
        let sigma2 = cfh_core::invariants::sample_invariants(&s).unwrap().1.s2;
        let want = s.f_y() * sigma2;
        assert!(rel_close(d, want, 1e-8), "{d:?} vs {want:?}");
    }
}

#[test]
fn schemes_agree_under_the_coordinate_swap() {
    let e = inverted_pseudosphere();
    let n = 6;
    let xbar = assemble(&e, &build_lattice(default_domain(), n).unwrap(), Scheme::XBar).unwrap();
    let swapped = swap_xy_entry(&e);
    let dom = build_domain(0.0, 1.0, 0.5, 1.5, 0.0, 1.0).unwrap();
    let yunder = assemble(&swapped, &build_lattice(dom, n).unwrap(), Scheme::YUnder).unwrap();
    for k in 0..=n {
        for j in 0..=n {
            for i in 0..=n {
                assert!((xbar.get(i, j, k) - yunder.get(j, i, k)).norm() <= 1e-10);
            }
        }
    }
}

#[test]
fn assembled_lattice_is_anchored_on_the_spine() {
    let e = inverted_pseudosphere();
    let lat = build_lattice(default_domain(), 5).unwrap();
    for scheme in [Scheme::XBar, Scheme::YUnder] {
        let hs = assemble(&e, &lat, scheme).unwrap();
        assert_eq!(hs.get(0, 0, 0), V4::zeros());
        for k in 0..=5 {
            assert_eq!(hs.get(0, 0, k), hs.z_spine.node_value(k));
        }
    }
}

#[test]
fn connectors_hit_both_nodes_and_satisfy_the_constant_vector_identity() {
    let e = inverted_pseudosphere();
    let lat = build_lattice(default_domain(), 6).unwrap();
    let k = 3;
    let s = surface_xbar(&e, &lat, k, 4);
    for i in 1..=6 {
        for j in 0..6 {
            let c = connector_v(&e, &s, i, j, 8);
            assert!(rel_close(c.values[0], s.node(i, j), 1e-13));
            assert!(rel_close(*c.values.last().unwrap(), s.node(i, j + 1), 1e-13));
            assert!(connector_constant_residual(&e, &lat, Axis::Y, 2, [i, j, k], 8) <= 1e-13);
        }
    }
    let t = surface_yunder(&e, &lat, k, 4);
    let c = connector_u(&e, &t, 2, 4, 8);
    assert!(rel_close(c.values[0], t.node(2, 4), 1e-13));
    assert!(rel_close(*c.values.last().unwrap(), t.node(3, 4), 1e-13));
    let hs = assemble(&e, &lat, Scheme::XBar).unwrap();
    let cz = connector_z(&e, &hs, 4, 1, 2, 8);
    assert!(rel_close(cz.values[0], hs.get(4, 1, 2), 1e-13));
    assert!(rel_close(*cz.values.last().unwrap(), hs.get(4, 1, 3), 1e-13));
    assert!(connector_constant_residual(&e, &lat, Axis::Z, 1, [4, 1, 2], 8) <= 1e-13);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn every_connector_edge_joins_its_nodes(n in 2usize..7, pick in 0usize..1000, yunder in any::<bool>()) {
        let e = inverted_pseudosphere();
        let lat = build_lattice(default_domain(), n).unwrap();
        let scheme = if yunder { Scheme::YUnder } else { Scheme::XBar };
        let hs = assemble(&e, &lat, scheme).unwrap();
        for axis in Axis::ALL {
            let edges = connector_edges(&hs, axis);
            if edges.is_empty() {
                continue;
            }
            let node = edges[pick % edges.len()];
            let c = hs.edge_curve(&e, axis, node, 5);
            let mut end = node;
            end[axis.index()] += 1;
            prop_assert!(rel_close(c.values[0], hs.get(node[0], node[1], node[2]), 1e-13));
            prop_assert!(rel_close(*c.values.last().unwrap(), hs.get(end[0], end[1], end[2]), 1e-13));
        }
    }
}

#[test]
fn z_connector_tangents_converge_at_first_order() {
    let e = inverted_pseudosphere();
    let pts: Vec<(f64, f64)> = [8usize, 16, 32]
        .iter()
        .map(|&n| {
            let hs = assemble(&e, &build_lattice(default_domain(), n).unwrap(), Scheme::XBar).unwrap();
            (n as f64, connector_tangent_deviation(&e, &hs, Axis::Z, 7))
        })
        .collect();
    let fit = fit_slope(&pts).unwrap();
    assert!((-1.25..=-0.75).contains(&fit.slope), "{pts:?} slope {}", fit.slope);
}

#[test]
fn assembly_is_independent_of_the_thread_count() {
    let e = inverted_pseudosphere();
    let lat = build_lattice(default_domain(), 12).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| assemble(&e, &lat, Scheme::YUnder).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn degenerate_regions_are_rejected() {
    let lat = build_lattice(default_domain(), 4).unwrap();
    assert!(matches!(assemble(&cusp_pseudosphere(), &lat, Scheme::XBar), Err(CfhError::DegenerateRegion(..))));
}

#[test]
fn shift_moves_along_one_axis() {
    assert_eq!(shift([1.0, 2.0, 3.0], Axis::Y, 0.5), [1.0, 2.5, 3.0]);
}
