use remez_rigidity::gallery::{
    gallery_ellipse_rectangle, gallery_product_poly, gallery_triangle, select_zeta, Provenance, RowStatus,
};
use remez_rigidity::extrema::{find_critical_points, product_polynomial, CriticalKind};

#[test]
fn triangle_cases() {
    for (h, want) in [(0.1, 21.0), (0.5, 5.0), (1.0, 3.0)] {
        let r = gallery_triangle(h).unwrap();
        assert!(r.passed());
        assert!(r.row("R_1 lower (LP)").unwrap().measured >= want - 1e-9);
        let cmp = r.row("published R_1 = 1 / (h/2)").unwrap();
        assert_eq!(cmp.expected, 2.0 / h);
        assert_eq!(cmp.provenance, Provenance::Published);
    }
}

#[test]
fn ellipse_rectangle_cases() {
    for (h, want) in [(0.2, 24.75), (0.1, 99.75)] {
        let r = gallery_ellipse_rectangle(h).unwrap();
        assert!(r.passed());
        let w = r.row("R_2 witness lower").unwrap();
        assert!((w.expected - want).abs() < 1e-9);
        assert!(w.measured >= want);
        let area = r.row("rectangle area").unwrap();
        assert!((area.measured - h / 24.0).abs() < 1e-15);
        assert_eq!(r.row("published rectangle area h/48").unwrap().status, RowStatus::Flag);
        assert_eq!(r.discrepancies.len(), 1);
    }
    assert!(gallery_ellipse_rectangle(0.6).is_err());
}

#[test]
fn product_cases() {
    let r = gallery_product_poly(2, &[-0.4, 0.0, 0.4], None, 5).unwrap();
    assert!(r.passed(), "{:#?}", r.rows);
    assert_eq!(r.row("closed zero-set components").unwrap().measured, 2.0);
    assert!(r.row("witness ratio M_0 / max_Z").unwrap().measured >= 1e6);
    let r = gallery_product_poly(2, &[-0.25, 0.25], None, 5).unwrap();
    assert_eq!(r.row("compact positive components (flood fill)").unwrap().measured, 1.0);
    assert_eq!(r.row("published count (d-1)^n / 2").unwrap().status, RowStatus::Flag);
}

#[test]
fn zeta_guard() {
    let p = product_polynomial(2, &[-0.25, 0.25]).unwrap();
    let max = find_critical_points(&p, 0.05)
        .unwrap()
        .into_iter()
        .find(|c| c.kind == CriticalKind::Max)
        .unwrap();
    assert!(gallery_product_poly(2, &[-0.25, 0.25], Some(max.value), 1).is_err());
    assert!(gallery_product_poly(2, &[-0.25, 0.25], Some(0.0), 1).is_err());
    assert!(gallery_product_poly(2, &[-0.25, 0.25], Some(0.3 * max.value), 1).unwrap().passed());
    let z = select_zeta(&p, 9).unwrap();
    assert!(z > 0.0 && z < 0.5 * max.value);
}

#[test]
fn reruns_are_byte_identical() {
    let a = serde_json::to_string(&gallery_product_poly(2, &[-0.4, 0.0, 0.4], None, 42).unwrap()).unwrap();
    let b = serde_json::to_string(&gallery_product_poly(2, &[-0.4, 0.0, 0.4], None, 42).unwrap()).unwrap();
    assert_eq!(a, b);
    let a = serde_json::to_string(&gallery_triangle(0.25).unwrap()).unwrap();
    let b = serde_json::to_string(&gallery_triangle(0.25).unwrap()).unwrap();
    assert_eq!(a, b);
}
