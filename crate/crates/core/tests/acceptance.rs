//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use remez_rigidity::extrema::{bezout_extrema_check, find_critical_points, product_polynomial, CriticalKind};
use remez_rigidity::gallery::{gallery_ellipse_rectangle, gallery_triangle, RowStatus};
use remez_rigidity::levelset::{
    extract_zero_set, integrate_flow, isotopy_check, thresholds, estimate_gamma, FieldSpec, IsotopyStatus,
    JetModel, PolyField,
};
use remez_rigidity::poly::{derivative_norm_at, BallGrid};
use remez_rigidity::remez::{
    measure_remez_bound, remez_finite, topological_bound_witness_test, topological_remez_bound, PointSet,
};
use remez_rigidity::rigidity::{divided_difference, from_remez, interior, points_1d, spike_difference, topological, density_from_parts};
use remez_rigidity::{markov_derivative_bound, sup_norm_ball, MultiPoly};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c01_measure_bound() -> Outcome {
    let mut cases = 0;
    for i in 1..=50 {
        let lambda = 0.02 * i as f64;
        for n in 1..=3 {
            for d in 1..=5 {
                let m = measure_remez_bound(lambda, n, d).map_err(|e| e.to_string())?;
                let simple = (4.0 * n as f64 / lambda).powi(d as i32);
                ensure((m.simple_bound - simple).abs() <= 1e-12 * simple, || {
                    format!("simple bound {} != {simple} at lambda={lambda} n={n} d={d}", m.simple_bound)
                })?;
                ensure(m.chebyshev_bound <= m.simple_bound, || {
                    format!("chebyshev {} > simple {} at lambda={lambda} n={n} d={d}", m.chebyshev_bound, m.simple_bound)
                })?;
                if i == 50 {
                    ensure((m.chebyshev_bound - 1.0).abs() < 1e-12, || format!("lambda=1 gives {}", m.chebyshev_bound))?;
                    ensure(m.simple_bound == (4.0 * n as f64).powi(d as i32), || "lambda=1 simple bound".into())?;
                }
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} cases, zero violations"))
}

fn c02_finite_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_gap = 0.0f64;
    let mut done = 0;
    while done < 20 {
        let n = 1 + done % 2;
        let d = 1 + (done / 2) % 2;
        let dim = common::monomials(n, d).len();
        let m = rng.gen_range(dim..=12);
        let pts: Vec<Vec<f64>> = (0..m).map(|_| common::random_in_ball(n, 1.0, &mut rng)).collect();
        let Ok(z) = PointSet::new(n, pts.clone()) else { continue };
        let Some(oracle) = common::remez_oracle(n, d, &pts) else { continue };
        if oracle > 1e4 {
            continue;
        }
        let step = 0.045 / ((n as f64).sqrt() * (d * d) as f64);
        let r = remez_finite(&z, d, step).map_err(|e| e.to_string())?;
        ensure(r.norming, || format!("set {done} reported non-norming but oracle found {oracle}"))?;
        ensure(r.lower <= oracle * (1.0 + 1e-9) && oracle <= r.upper * (1.0 + 1e-9), || {
            format!("set {done} (n={n} d={d} m={m}): oracle {oracle} outside [{}, {}]", r.lower, r.upper)
        })?;
        let gap = (r.upper - r.lower) / r.lower;
        ensure(gap <= 0.05, || format!("set {done}: relative gap {gap}"))?;
        worst_gap = worst_gap.max(gap);
        done += 1;
    }
    Ok(format!("20 sets enclosed, worst relative gap {worst_gap:.4}"))
}

fn c03_triangle() -> Outcome {
    let mut parts = Vec::new();
    for h in [0.1, 0.25, 0.5, 1.0] {
        let r = gallery_triangle(h).map_err(|e| e.to_string())?;
        let lower = r.row("R_1 lower (LP)").ok_or("missing LP row")?.measured;
        ensure(lower >= 1.0 + 2.0 / h - 1e-9, || format!("h={h}: lower {lower} < 1 + 2/h"))?;
        ensure(lower >= 2.0 / h, || format!("h={h}: lower {lower} < 2/h"))?;
        ensure(r.passed(), || format!("h={h}: failing rows"))?;
        let flag = r.row("published R_1 = 1 / (h/2)").ok_or("missing comparator row")?;
        ensure(flag.status == RowStatus::Flag && !r.discrepancies.is_empty(), || {
            format!("h={h}: discrepancy not flagged")
        })?;
        parts.push(format!("h={h}: {lower:.4}"));
    }
    Ok(parts.join(", "))
}

fn c04_ellipse_rectangle() -> Outcome {
    let mut parts = Vec::new();
    for (h, target) in [(0.2, 24.75), (0.1, 99.75)] {
        let closed_form: f64 = (1.0 - h * h / 4.0) / (h * h);
        ensure((closed_form - target).abs() <= 1e-9, || format!("arithmetic {closed_form} vs {target}"))?;
        let r = gallery_ellipse_rectangle(h).map_err(|e| e.to_string())?;
        ensure(r.passed(), || format!("h={h}: failing rows {:?}", r.rows))?;
        let w = r.row("R_2 witness lower").ok_or("missing witness row")?.measured;
        ensure(w >= target - 1e-9, || format!("h={h}: witness lower {w} < {target}"))?;
        let family = remez_rigidity::gallery::ellipse_rectangle_family(h).map_err(|e| e.to_string())?;
        let b = topological_remez_bound(&family, 2).map_err(|e| e.to_string())?;
        ensure(b.bound.is_finite() && b.bound >= w, || format!("h={h}: bound {} < witness {w}", b.bound))?;
        parts.push(format!("h={h}: witness {w:.3} <= bound {:.4e}", b.bound));
    }
    Ok(parts.join(", "))
}

fn c05_witness_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut min_ratio = f64::INFINITY;
    for k in 0..20 {
        let f = common::random_disks(2, 2, &mut rng);
        let r = topological_bound_witness_test(&f, 2, 500, 1000 + k).map_err(|e| e.to_string())?;
        ensure(r.skipped.is_none(), || format!("family {k} skipped"))?;
        ensure(r.violations.is_empty(), || format!("family {k}: {} violations", r.violations.len()))?;
        min_ratio = min_ratio.min(r.min_ratio);
    }
    Ok(format!("10000 trials, zero violations, min max_Z|P|/kappa = {min_ratio:.3}"))
}

fn count(points: &[remez_rigidity::extrema::CriticalPoint], kind: CriticalKind) -> usize {
    points.iter().filter(|c| c.kind == kind).count()
}

fn c06_bezout() -> Outcome {
    let quad = product_polynomial(2, &[-0.25, 0.25]).map_err(|e| e.to_string())?;
    let c = find_critical_points(&quad, 0.05).map_err(|e| e.to_string())?;
    let ext = count(&c, CriticalKind::Max) + count(&c, CriticalKind::Min);
    ensure(c.len() == 5 && ext == 1, || format!("quadratic product: {} points, {ext} extrema", c.len()))?;
    let cubic = product_polynomial(2, &[-0.4, 0.0, 0.4]).map_err(|e| e.to_string())?;
    let c = find_critical_points(&cubic, 0.05).map_err(|e| e.to_string())?;
    let (mx, mn) = (count(&c, CriticalKind::Max), count(&c, CriticalKind::Min));
    ensure(c.len() == 13 && mx == 2 && mn == 2, || {
        format!("cubic product: {} points, {mx} Max, {mn} Min", c.len())
    })?;
    ensure(bezout_extrema_check(&cubic, &c).consistent, || "cubic product inconsistent with Bezout".into())?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut most = 0;
    for _ in 0..200 {
        let p = MultiPoly::random(2, 3, &mut rng).map_err(|e| e.to_string())?;
        let c = find_critical_points(&p, 0.05).map_err(|e| e.to_string())?;
        let nondeg = c.iter().filter(|x| x.kind != CriticalKind::Degenerate).count();
        ensure(nondeg <= 4, || format!("{nondeg} nondegenerate critical points for {:?}", p.coeffs()))?;
        most = most.max(nondeg);
    }
    Ok(format!("5/1 and 13/(2 Max, 2 Min); random cubics at most {most} <= 4"))
}

fn c07_non_norming() -> Outcome {
    let sets: Vec<(usize, usize, Vec<Vec<f64>>)> = vec![
        (2, 1, vec![vec![-0.5, -0.5], vec![0.0, 0.0], vec![0.3, 0.3]]),
        (2, 2, (0..8).map(|i| vec![-0.7 + 0.2 * i as f64, 0.1 - 0.05 * i as f64]).collect()),
        (2, 2, vec![vec![0.1, 0.2], vec![-0.3, 0.4], vec![0.5, -0.1], vec![0.0, -0.6], vec![0.7, 0.3]]),
        (1, 2, vec![vec![-0.5], vec![0.5]]),
        (1, 3, vec![vec![-0.9], vec![0.0], vec![0.4]]),
    ];
    for (k, (n, d, pts)) in sets.into_iter().enumerate() {
        let z = PointSet::new(n, pts).map_err(|e| e.to_string())?;
        let r = remez_finite(&z, d, 0.02).map_err(|e| e.to_string())?;
        ensure(!r.norming && r.lower.is_infinite() && r.upper.is_infinite(), || format!("set {k}: finite R"))?;
        let on_z = z.max_abs(&r.witness);
        let sup = sup_norm_ball(&r.witness, 0.02).map_err(|e| e.to_string())?.grid_max;
        ensure(on_z <= 1e-9 && sup >= 0.1, || format!("set {k}: certificate max_Z {on_z}, sup {sup}"))?;
    }
    Ok("5 sets: R = inf with kernel certificates".into())
}

fn c08_rigidity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for k in 0..50 {
        let n = if k % 5 == 4 { 1 } else { 2 };
        let count = rng.gen_range(2..=if n == 1 { 3 } else { 5 });
        let f = common::random_disks(n, count, &mut rng);
        let d = rng.gen_range(1..=f.max_degree().unwrap_or(1));
        let b = topological_remez_bound(&f, d).map_err(|e| e.to_string())?;
        let via = from_remez(&b.to_report().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let direct = topological(&f, d).map_err(|e| e.to_string())?;
        let rel = (via.lower - direct.lower).abs() / direct.lower;
        ensure(rel <= 1e-12, || format!("family {k}: {} vs {}", via.lower, direct.lower))?;
        worst = worst.max(rel);
    }
    let p = points_1d(3, 2).map_err(|e| e.to_string())?.lower;
    ensure(p == 0.75, || format!("points_1d(3, 2) = {p}"))?;
    for d in 0..=8 {
        let closed = (1..=d + 1).map(|i| i as f64).product::<f64>() / 2f64.powi(d as i32 + 1);
        let v = interior(d).map_err(|e| e.to_string())?.lower;
        ensure((v - closed).abs() <= 1e-15 * closed, || format!("interior({d}) = {v}"))?;
    }
    let dens = density_from_parts(1, 1, 0.1, 100).map_err(|e| e.to_string())?.lower;
    ensure((dens - 2.4).abs() < 1e-12, || format!("density = {dens}"))?;
    Ok(format!("50 families, worst relative difference {worst:.1e}; 0.75 and 2.4 reproduced"))
}

fn c09_divided_differences() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let k = rng.gen_range(1..=7);
        let nodes = loop {
            let v: Vec<f64> = (0..=k).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let sep = v.iter().enumerate().flat_map(|(i, a)| v[i + 1..].iter().map(move |b| (a - b).abs())).fold(f64::INFINITY, f64::min);
            if sep > 0.05 {
                break v;
            }
        };
        let mut values = vec![0.0; nodes.len()];
        values[0] = 1.0;
        let table = divided_difference(&nodes, &values).map_err(|e| e.to_string())?;
        let closed = 1.0 / nodes[1..].iter().map(|z| nodes[0] - z).product::<f64>();
        let rel = (table - closed).abs() / closed.abs();
        ensure(rel <= 1e-10, || format!("table {table} vs closed form {closed}"))?;
        ensure((spike_difference(nodes[0], &nodes[1..]) - closed.abs()).abs() <= 1e-10 * closed.abs(), || {
            "spike difference".into()
        })?;
        worst = worst.max(rel);
        // Degree k - 1 data over k + 1 nodes.
        let coeffs: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let data: Vec<f64> = nodes
            .iter()
            .map(|x| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c))
            .collect();
        let dd = divided_difference(&nodes, &data).map_err(|e| e.to_string())?;
        ensure(dd.abs() <= 1e-9, || format!("degree {} data gave {dd}", k - 1))?;
    }
    Ok(format!("1000 node sets, worst relative error {worst:.1e}; polynomial data annihilated"))
}

fn ellipse(h: f64) -> MultiPoly {
    MultiPoly::from_terms(2, 2, &[(&[0, 0], -h * h / 4.0), (&[2, 0], h * h), (&[0, 2], 1.0)]).unwrap()
}

fn c10_isotopy() -> Outcome {
    let cell = 0.005;
    let exact = JetModel::exact(ellipse(0.2)).map_err(|e| e.to_string())?;
    let v = isotopy_check(&exact, cell);
    ensure(v.status == IsotopyStatus::Verified, || format!("exact model: {:?} {:?}", v.status, v.reason))?;
    ensure(v.diagnostics.iter().all(|r| r.t_zero.is_some_and(|t| t.abs() <= 1e-10)), || "exact model: t != 0".into())?;

    // Perturbation sized to half the threshold at the estimated gamma.
    let curve = extract_zero_set(exact.field(), cell).map_err(|e| e.to_string())?;
    let gamma = estimate_gamma(&exact, &curve).map_err(|e| e.to_string())?;
    let t = thresholds(2, 2, gamma).map_err(|e| e.to_string())?.t;
    let unit = MultiPoly::from_terms(2, 6, &[(&[3, 3], 1.0), (&[4, 2], 0.3)]).map_err(|e| e.to_string())?;
    let eps = 0.5 * t / unit.derivative_norm_coefficient_bound(3);
    let tail = unit.scaled(eps);
    let bound = tail.derivative_norm_coefficient_bound(3);
    let model = JetModel::new(2, ellipse(0.2), bound, FieldSpec::PolynomialTail { tail }).map_err(|e| e.to_string())?;
    ensure(model.spot_check(2000, 10).ok, || "perturbed model fails its own spot check".into())?;
    let v = isotopy_check(&model, cell);
    ensure(v.status == IsotopyStatus::Verified, || format!("perturbed model: {:?} {:?}", v.status, v.reason))?;
    let th = v.constants.ok_or("missing constants")?;
    ensure(bound <= th.t, || format!("remainder {bound} > T {}", th.t))?;
    ensure(v.pairing == vec![(0, 0)], || format!("pairing {:?}", v.pairing))?;
    ensure(
        v.diagnostics.iter().all(|r| r.dp_dt_min >= 0.5 && r.dp_dt_max <= 1.5 && r.identity_residual <= 1e-6),
        || "band or identity violated".into(),
    )?;
    let trajectories = v.diagnostics.len();

    // Two nested ovals, f = (r^2 - 0.09)(r^2 - 0.16).
    let taylor = MultiPoly::from_terms(2, 2, &[(&[0, 0], 0.0144), (&[2, 0], -0.25), (&[0, 2], -0.25)]).map_err(|e| e.to_string())?;
    let quartic = MultiPoly::from_terms(2, 4, &[(&[4, 0], 1.0), (&[2, 2], 2.0), (&[0, 4], 1.0)]).map_err(|e| e.to_string())?;
    let honest = quartic.derivative_norm_coefficient_bound(3);
    for rb in [honest, 0.0] {
        let m = JetModel::new(2, taylor.clone(), rb, FieldSpec::PolynomialTail { tail: quartic.clone() }).map_err(|e| e.to_string())?;
        let v = isotopy_check(&m, cell);
        ensure(v.status != IsotopyStatus::Verified, || format!("nested ovals verified with bound {rb}"))?;
    }
    Ok(format!("exact Verified, perturbed Verified ({trajectories} trajectories), nested ovals never Verified"))
}

fn c11_flow() -> Outcome {
    let g = PolyField::new(
        &MultiPoly::from_terms(2, 2, &[(&[0, 0], -0.16), (&[2, 0], 1.0), (&[0, 2], 1.0)]).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for t in [0.01, -0.01] {
        let x = integrate_flow(&g, [0.4, 0.0], t, 2e-4, 0.1).map_err(|e| e.to_string())?;
        let err = (x[0] - (0.16f64 + t).sqrt()).abs().max(x[1].abs());
        ensure(err <= 1e-7, || format!("t={t}: error {err}"))?;
        worst = worst.max(err);
    }
    Ok(format!("worst error {worst:.1e}"))
}

fn c12_markov() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = 0.0f64;
    let mut total = 0;
    for n in 1..=2usize {
        let points: Vec<Vec<f64>> = match n {
            1 => (0..=4000).map(|i| vec![-1.0 + i as f64 / 2000.0]).collect(),
            _ => {
                let g = BallGrid::new(2, 0.03).map_err(|e| e.to_string())?;
                g.points().map(|p| p.to_vec()).collect()
            }
        };
        for d in 1..=4usize {
            for trial in 0..1250 {
                let p = if trial == 0 {
                    let t = remez_rigidity::poly::chebyshev_polynomial(d).map_err(|e| e.to_string())?;
                    let coeffs: Vec<f64> = (0..=d).map(|k| t.coeffs()[k]).collect();
                    MultiPoly::univariate(n, 0, &coeffs).map_err(|e| e.to_string())?
                } else {
                    MultiPoly::random(n, d, &mut rng).map_err(|e| e.to_string())?
                };
                let m0 = points.iter().map(|x| p.value(x).abs()).fold(0.0, f64::max);
                if m0 == 0.0 {
                    continue;
                }
                for k in 1..=2usize {
                    let tensor = p.derivative_tensor(k);
                    let mk = points.iter().map(|x| derivative_norm_at(&tensor, x)).fold(0.0, f64::max) / m0;
                    let c = markov_derivative_bound(n, d, k);
                    ensure(mk <= c * (1.0 + 1e-12), || format!("n={n} d={d} k={k}: M_k/M_0 = {mk} > {c}"))?;
                    if c > 0.0 {
                        worst = worst.max(mk / c);
                    }
                }
                total += 1;
            }
        }
    }
    Ok(format!("{total} polynomials, largest M_k / (C_k M_0) = {worst:.4}"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("measure bound ordering and lambda = 1 structure", c01_measure_bound),
        ("finite Remez enclosure vs vertex-enumeration oracle", c02_finite_oracle),
        ("triangle lower bound 1 + 2/h and published comparator", c03_triangle),
        ("ellipse-rectangle witness and topological sandwich", c04_ellipse_rectangle),
        ("topological bound witness suite", c05_witness_suite),
        ("critical point counts and Bezout bound", c06_bezout),
        ("non-norming detection with kernel certificate", c07_non_norming),
        ("rigidity identities", c08_rigidity),
        ("divided differences", c09_divided_differences),
        ("isotopy checker verdicts", c10_isotopy),
        ("flow map radial closed form", c11_flow),
        ("Markov bound safety", c12_markov),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name} ({secs:.1}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({secs:.1}s): {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
