use cfh_core::convergence::{
    cusp_experiment, find_cusp_root, fit_slope, reference_values, sweep, sweep_with_safety, ReferenceKind,
};
use cfh_core::discrete_dual::Scheme;
use cfh_core::lattice::{estimate_bound_constants, DEFAULT_GRID_M, DEFAULT_SAFETY};
use cfh_core::samplers::{cusp_pseudosphere, default_domain, default_pseudosphere, inverted_pseudosphere};
use cfh_core::{build_lattice, CfhError};

#[test]
fn inverted_entry_converges_at_first_order_within_the_bounds() {
    let e = inverted_pseudosphere();
    let dom = default_domain();
    let c = estimate_bound_constants(&e, &dom, DEFAULT_GRID_M, DEFAULT_SAFETY).unwrap();
    for scheme in [Scheme::XBar, Scheme::YUnder] {
        let r = sweep(&e, &dom, scheme, &[8, 16, 32, 64], ReferenceKind::Quadrature { m: 16 }, &c).unwrap();
        assert!(r.all_satisfied(), "{scheme:?}");
        assert!((-1.25..=-0.80).contains(&r.slope.slope), "{scheme:?} slope {}", r.slope.slope);
        assert!((-2.3..=-1.7).contains(&r.connector_slope.slope), "{scheme:?} connector {}", r.connector_slope.slope);
        assert!(r.reference_within_budget);
        assert_eq!(r.rows[0].slope_running, None);
        assert!(r.rows[2].slope_running.is_some());
    }
}

#[test]
fn exact_and_quadrature_references_agree() {
    let e = default_pseudosphere();
    let lat = build_lattice(default_domain(), 8).unwrap();
    let a = reference_values(&e, &lat, ReferenceKind::Exact).unwrap();
    let b = reference_values(&e, &lat, ReferenceKind::Quadrature { m: 16 }).unwrap();
    let d = a.iter().zip(&b).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max);
    assert!(d < 1e-9, "{d}");
    assert!(matches!(
        reference_values(&inverted_pseudosphere(), &lat, ReferenceKind::Exact),
        Err(CfhError::Unsupported(_))
    ));
}

#[test]
fn csv_has_the_documented_columns() {
    let r = sweep_with_safety(
        &default_pseudosphere(),
        &default_domain(),
        Scheme::XBar,
        &[4, 8, 16],
        ReferenceKind::Exact,
        DEFAULT_SAFETY,
    )
    .unwrap();
    let mut buf = Vec::new();
    r.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,delta,sup_error,bound,satisfied,slope_running");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("4,2.5e-1,"));
    assert!(lines[1].ends_with(",true,"));
    assert_eq!(lines[3].split(',').count(), 6);
}

#[test]
fn sweep_rejects_bad_input() {
    let e = default_pseudosphere();
    let dom = default_domain();
    let c = estimate_bound_constants(&e, &dom, DEFAULT_GRID_M, DEFAULT_SAFETY).unwrap();
    assert!(sweep(&e, &dom, Scheme::XBar, &[8, 16], ReferenceKind::Exact, &c).is_err());
    assert!(matches!(
        sweep(&e, &dom, Scheme::XBar, &[0, 8, 16], ReferenceKind::Exact, &c),
        Err(CfhError::InvalidN(_))
    ));
    assert!(fit_slope(&[(8.0, f64::NAN), (16.0, 1.0), (32.0, 1.0)]).is_err());
}

#[test]
fn cusp_reversal_is_localized_at_first_order() {
    let e = cusp_pseudosphere();
    let dom = default_domain();
    let root = find_cusp_root(&e, &dom, 17).unwrap();
    assert!(root.transversal);
    let errs: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|&n| {
            let r = cfh_core::convergence::cusp_experiment_at(&e, &dom, n, &root).unwrap();
            assert!(r.within_2delta, "n={n}: {r:?}");
            assert!(r.tangent_dot < 0.0, "n={n}: {r:?}");
            r.localization_error
        })
        .collect();
    assert!(errs[0] / errs[1] >= 1.8 && errs[1] / errs[2] >= 1.8, "{errs:?}");
    let r = cusp_experiment(&e, &dom, 64, 17).unwrap();
    assert_eq!(r.root, root.point);
}

#[test]
fn pseudosphere_has_no_cusp() {
    assert_eq!(
        cusp_experiment(&default_pseudosphere(), &default_domain(), 16, 17).unwrap_err(),
        CfhError::NoDegeneratePoint
    );
}
