//! Independent oracles shared by the integration and acceptance suites.
//! Nothing here calls the library's evaluation, LP or sup-norm code.

#![allow(dead_code)]

use rand::Rng;
use remez_rigidity::remez::{DomainFamily, DomainSpec};

/// Exponents of all monomials of degree at most `d` in `n <= 2` variables.
pub fn monomials(n: usize, d: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    match n {
        1 => (0..=d as u32).for_each(|a| out.push(vec![a])),
        2 => {
            for a in 0..=d as u32 {
                for b in 0..=(d as u32 - a) {
                    out.push(vec![a, b]);
                }
            }
        }
        _ => panic!("oracle supports n <= 2"),
    }
    out
}

/// Plain power-product evaluation.
pub fn eval_naive(mons: &[Vec<u32>], coeffs: &[f64], x: &[f64]) -> f64 {
    mons.iter()
        .zip(coeffs)
        .map(|(e, c)| c * e.iter().zip(x).map(|(&k, v)| v.powi(k as i32)).product::<f64>())
        .sum()
}

/// Gaussian elimination with partial pivoting; `None` when a pivot falls
/// below `1e-12` times the largest entry.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

pub fn random_in_ball<R: Rng>(n: usize, radius: f64, rng: &mut R) -> Vec<f64> {
    loop {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-radius..radius)).collect();
        if x.iter().map(|v| v * v).sum::<f64>() <= radius * radius {
            return x;
        }
    }
}

/// `count` pairwise disjoint balls inside the unit ball of `R^n`, with a
/// gap of at least 0.01 between them.
pub fn random_disks<R: Rng>(n: usize, count: usize, rng: &mut R) -> DomainFamily {
    'outer: loop {
        let mut balls: Vec<(Vec<f64>, f64)> = Vec::new();
        for _ in 0..count {
            let mut placed = false;
            for _ in 0..500 {
                let r = rng.gen_range(0.05..0.45);
                let c = random_in_ball(n, 1.0 - r - 0.01, rng);
                let ok = balls.iter().all(|(c2, r2)| {
                    let d = c.iter().zip(c2).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                    d > r + r2 + 0.01
                });
                if ok {
                    balls.push((c, r));
                    placed = true;
                    break;
                }
            }
            if !placed {
                continue 'outer;
            }
        }
        let specs = balls
            .into_iter()
            .map(|(center, radius)| DomainSpec::Ball { center, radius })
            .collect();
        return DomainFamily::new(n, specs).expect("disjoint balls inside the unit ball");
    }
}

/// Oracle for `R_d(Z)`: enumerates the vertices of `{c : |E c| <= 1}`
/// (every sign pattern on every `D`-subset of rows) and maximizes each
/// vertex polynomial over a dense grid of the ball, then polishes the best
/// candidates locally.
pub fn remez_oracle(n: usize, d: usize, z: &[Vec<f64>]) -> Option<f64> {
    let mons = monomials(n, d);
    let dim = mons.len();
    let rows: Vec<Vec<f64>> = z
        .iter()
        .map(|p| mons.iter().map(|e| e.iter().zip(p).map(|(&k, v)| v.powi(k as i32)).product()).collect())
        .collect();
    let m = rows.len();
    if m < dim {
        return None;
    }
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    for subset in subsets(m, dim) {
        let a: Vec<Vec<f64>> = subset.iter().map(|&i| rows[i].clone()).collect();
        for signs in 0..(1u32 << (dim - 1)) {
            let b: Vec<f64> = (0..dim)
                .map(|k| if k == 0 || signs & (1 << (k - 1)) == 0 { 1.0 } else { -1.0 })
                .collect();
            let Some(c) = solve_dense(a.clone(), b) else { continue };
            let feasible = rows
                .iter()
                .all(|r| r.iter().zip(&c).map(|(u, v)| u * v).sum::<f64>().abs() <= 1.0 + 1e-9);
            if feasible && !vertices.iter().any(|v| close(v, &c)) {
                vertices.push(c);
            }
        }
    }
    if vertices.is_empty() {
        return None;
    }
    let grid = oracle_grid(n);
    let mut scored: Vec<(f64, usize, Vec<f64>)> = vertices
        .iter()
        .map(|v| {
            let (best, at) = grid
                .iter()
                .map(|x| eval_naive(&mons, v, x).abs())
                .enumerate()
                .fold((0.0, 0), |acc, (i, val)| if val > acc.0 { (val, i) } else { acc });
            (best, at, v.clone())
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = scored[0].0;
    for (_, at, v) in scored.iter().take(4) {
        let f = |x: &[f64]| eval_naive(&mons, v, x).abs();
        best = best.max(polish(n, f, &grid[*at]));
    }
    Some(best)
}

fn close(a: &[f64], b: &[f64]) -> bool {
    let scale = a.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9 * scale)
}

fn subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            cur.push(i);
            rec(i + 1, m, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, m, k, &mut Vec::new(), &mut out);
    out
}

/// Square lattice of step 0.02 in the ball plus 2048 points on the sphere
/// (n = 2), or 4001 equispaced points of `[-1, 1]` (n = 1).
pub fn oracle_grid(n: usize) -> Vec<Vec<f64>> {
    match n {
        1 => (0..=4000).map(|i| vec![-1.0 + i as f64 / 2000.0]).collect(),
        2 => {
            let mut pts = Vec::new();
            for i in 0..=100 {
                for j in 0..=100 {
                    let x = vec![-1.0 + 0.02 * i as f64, -1.0 + 0.02 * j as f64];
                    if x[0] * x[0] + x[1] * x[1] <= 1.0 {
                        pts.push(x);
                    }
                }
            }
            for k in 0..2048 {
                let t = 2.0 * std::f64::consts::PI * k as f64 / 2048.0;
                pts.push(vec![t.cos(), t.sin()]);
            }
            pts
        }
        _ => panic!("oracle supports n <= 2"),
    }
}

/// Local maximization of `f` over the ball from `x0`: golden section along
/// the boundary or the segment, pattern search in the interior.
pub fn polish(n: usize, f: impl Fn(&[f64]) -> f64, x0: &[f64]) -> f64 {
    let on_sphere = (x0.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12;
    let mut best = f(x0);
    if n == 1 {
        let g = |t: f64| f(&[t]);
        best = best.max(golden(g, (x0[0] - 1e-3).max(-1.0), (x0[0] + 1e-3).min(1.0)));
        return best;
    }
    if on_sphere {
        let t0 = x0[1].atan2(x0[0]);
        let w = 2.0 * std::f64::consts::PI / 2048.0;
        best = best.max(golden(|t| f(&[t.cos(), t.sin()]), t0 - w, t0 + w));
    }
    let mut x = x0.to_vec();
    let mut step = 0.02;
    while step > 1e-12 {
        let mut improved = false;
        for (dx, dy) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)] {
            let mut y = vec![x[0] + step * dx, x[1] + step * dy];
            let r = (y[0] * y[0] + y[1] * y[1]).sqrt();
            if r > 1.0 {
                y = vec![y[0] / r, y[1] / r];
            }
            let v = f(&y);
            if v > best {
                best = v;
                x = y;
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best
}

fn golden(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut best = f(a).max(f(b));
    for _ in 0..200 {
        let (fc, fd) = (f(c), f(d));
        best = best.max(fc).max(fd);
        if fc > fd {
            b = d;
        } else {
            a = c;
        }
        c = b - r * (b - a);
        d = a + r * (b - a);
        if b - a < 1e-14 {
            break;
        }
    }
    best
}

/// Central-difference gradient.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            (f(&xp) - f(&xm)) / (2.0 * h)
        })
        .collect()
}
