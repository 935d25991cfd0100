//! Critical points of polynomials in the unit ball, their Hessian
//! classification and the Bezout count `(d - 1)^n`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigenvalues, Lu};
use crate::poly::{self, BallGrid, MultiPoly};
use crate::remez::{DomainFamily, DomainSpec};

/// Residual accepted for a critical point.
pub const GRADIENT_TOL: f64 = 1e-8;
/// Relative eigenvalue size below which a Hessian counts as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;
const NEWTON_ITERATIONS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CriticalKind {
    Max,
    Min,
    Saddle,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub location: Vec<f64>,
    pub kind: CriticalKind,
    pub value: f64,
    pub gradient_norm: f64,
    pub hessian_eigen_signs: Vec<i8>,
}

/// Gradient and Hessian polynomials, computed once per polynomial.
#[derive(Debug, Clone)]
pub struct Derivatives {
    poly: MultiPoly,
    grad: Vec<MultiPoly>,
    hess: Vec<Vec<MultiPoly>>,
}

impl Derivatives {
    pub fn new(p: &MultiPoly) -> Derivatives {
        Derivatives {
            poly: p.clone(),
            grad: p.gradient(),
            hess: p.hessian(),
        }
    }

    pub fn gradient_at(&self, x: &[f64]) -> Vec<f64> {
        self.grad.iter().map(|g| g.value(x)).collect()
    }

    pub fn hessian_at(&self, x: &[f64]) -> Vec<f64> {
        self.hess.iter().flat_map(|row| row.iter().map(|h| h.value(x))).collect()
    }

    /// Newton iteration on `grad P = 0` from `x0`. Returns the limit and
    /// its gradient norm, or `None` when the iteration fails.
    pub fn newton(&self, x0: &[f64]) -> Option<(Vec<f64>, f64)> {
        let n = x0.len();
        let mut x = x0.to_vec();
        for _ in 0..NEWTON_ITERATIONS {
            let g = self.gradient_at(&x);
            let gn = norm(&g);
            if gn == 0.0 {
                break;
            }
            let lu = Lu::factor(&self.hessian_at(&x), n).ok()?;
            let step = lu.solve(&g);
            let sn = norm(&step);
            if !sn.is_finite() {
                return None;
            }
            // Keep wild steps from leaving the region of interest at once.
            let scale = if sn > 0.5 { 0.5 / sn } else { 1.0 };
            x.iter_mut().zip(&step).for_each(|(xi, si)| *xi -= scale * si);
            if norm(&x) > 2.0 {
                return None;
            }
            if sn < 1e-15 * (1.0 + norm(&x)) {
                break;
            }
        }
        let res = norm(&self.gradient_at(&x));
        (res <= GRADIENT_TOL).then_some((x, res))
    }

    pub fn classify(&self, x: Vec<f64>, residual: f64) -> CriticalPoint {
        let n = x.len();
        let eig = symmetric_eigenvalues(&self.hessian_at(&x), n);
        let radius = eig.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        let signs: Vec<i8> = eig
            .iter()
            .map(|&e| {
                if radius == 0.0 || e.abs() < DEGENERACY_TOL * radius {
                    0
                } else if e > 0.0 {
                    1
                } else {
                    -1
                }
            })
            .collect();
        let kind = if signs.contains(&0) {
            CriticalKind::Degenerate
        } else if signs.iter().all(|&s| s < 0) {
            CriticalKind::Max
        } else if signs.iter().all(|&s| s > 0) {
            CriticalKind::Min
        } else {
            CriticalKind::Saddle
        };
        CriticalPoint {
            value: self.poly.value(&x),
            location: x,
            kind,
            gradient_norm: residual,
            hessian_eigen_signs: signs,
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Radius, relative to the seed step, within which two Newton limits are
/// the same critical point.
pub const DEDUP_FACTOR: f64 = 1e-3;

/// Critical points of `P` in the closed unit ball, found by Newton's method
/// from every point of a seed grid. Points are ordered lexicographically
/// by coordinates.
pub fn find_critical_points(p: &MultiPoly, seed_grid_step: f64) -> Result<Vec<CriticalPoint>> {
    if p.degree() < 2 {
        return Err(Error::InvalidInput("critical point search needs degree at least 2".into()));
    }
    if !(seed_grid_step > 0.0 && seed_grid_step <= 0.2) {
        return Err(Error::InvalidInput(format!(
            "seed grid step must be in (0, 0.2], got {seed_grid_step}"
        )));
    }
    let der = Derivatives::new(p);
    let grid = BallGrid::new(p.n(), seed_grid_step)?;
    let limits: Vec<(Vec<f64>, f64)> = (0..grid.len())
        .into_par_iter()
        .filter_map(|i| der.newton(grid.point(i)))
        .filter(|(x, _)| norm(x) <= 1.0 + 1e-9)
        .collect();
    let radius = DEDUP_FACTOR * seed_grid_step;
    let mut kept: Vec<(Vec<f64>, f64)> = Vec::new();
    for (x, r) in limits {
        match kept.iter_mut().find(|(y, _)| dist(y, &x) <= radius) {
            Some(existing) => {
                if r < existing.1 {
                    *existing = (x, r);
                }
            }
            None => kept.push((x, r)),
        }
    }
    kept.sort_by(|a, b| {
        a.0.iter()
            .zip(&b.0)
            .map(|(u, v)| u.total_cmp(v))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(kept.into_iter().map(|(x, r)| der.classify(x, r)).collect())
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BezoutReport {
    pub degree: usize,
    pub n: usize,
    pub bound: usize,
    pub critical_points: usize,
    pub maxima: usize,
    pub minima: usize,
    pub saddles: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
    /// False when more nondegenerate points were found than Bezout allows,
    /// which can only mean failed deduplication.
    pub consistent: bool,
}

/// Checks nondegenerate critical points (and extrema) against `(d - 1)^n`,
/// with `d` the exact degree of `P`.
pub fn bezout_extrema_check(p: &MultiPoly, points: &[CriticalPoint]) -> BezoutReport {
    let d = p.exact_degree();
    let n = p.n();
    let bound = d.saturating_sub(1).pow(n as u32);
    let count = |k: CriticalKind| points.iter().filter(|c| c.kind == k).count();
    let degenerate = count(CriticalKind::Degenerate);
    let (maxima, minima, saddles) = (count(CriticalKind::Max), count(CriticalKind::Min), count(CriticalKind::Saddle));
    let skipped = (degenerate > 0).then(|| format!("{degenerate} degenerate critical points; check skipped"));
    let consistent = skipped.is_some() || (points.len() <= bound && maxima + minima <= bound);
    BezoutReport {
        degree: d,
        n,
        bound,
        critical_points: points.len(),
        maxima,
        minima,
        saddles,
        skipped,
        consistent,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainExtremum {
    pub domain: usize,
    pub boundary_max: f64,
    pub interior_max: f64,
    pub interior_argmax: Vec<f64>,
    /// Critical point located inside the domain when the interior
    /// maximum beats the boundary.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub critical_point: Option<CriticalPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteriorWitnessReport {
    pub degree: usize,
    pub j_d: usize,
    /// Whether the family has the `(d - 1)^n + 1` domains the bound needs.
    pub precondition_met: bool,
    pub kappa: f64,
    /// Sampled `max |P|` over the boundaries of the checked domains.
    pub boundary_max: f64,
    /// `boundary_max < kappa`, the hypothesis under which each checked
    /// domain must carry an interior extremum.
    pub triggered: bool,
    pub domains: Vec<DomainExtremum>,
    /// Triggered and every checked domain produced an interior critical
    /// point that is a local extremum.
    pub mechanism_confirmed: bool,
}

const INTERIOR_SAMPLES_PER_AXIS: f64 = 80.0;
const BOUNDARY_SAMPLES: usize = 720;

/// For the first `j_d` domains (by volume), compares the sampled maximum
/// of `|P|` on the boundary with the interior maximum and locates the
/// interior critical point when the interior wins.
pub fn interior_extremum_witness(p: &MultiPoly, f: &DomainFamily, d: usize) -> Result<InteriorWitnessReport> {
    if p.n() != f.n() {
        return Err(Error::DimensionMismatch {
            expected: f.n(),
            got: p.n(),
        });
    }
    if d == 0 || f.is_empty() {
        return Err(Error::InvalidInput("need d >= 1 and a non-empty family".into()));
    }
    let sup = poly::sup_norm_ball(p, 0.25 * poly::max_admissible_step(p.n(), p.degree().max(1)))?;
    if sup.grid_max > 1.0 + 1e-6 || sup.certified_max < 1.0 - 1e-6 {
        return Err(Error::InvalidInput(format!(
            "polynomial must be normalized to sup 1 on the ball (grid max {}, certified {})",
            sup.grid_max, sup.certified_max
        )));
    }
    let n = f.n();
    let j_d = crate::remez::required_domains(d, n);
    let checked = j_d.min(f.len());
    let lambda = f.normalized_volumes()[checked - 1];
    let kappa = (lambda / (4.0 * n as f64)).powi(d as i32);
    let der = Derivatives::new(p);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut domains = Vec::new();
    for rank in 0..checked {
        let idx = f.by_volume(rank);
        let dom = &f.domains()[idx];
        let boundary_max = dom
            .boundary_points(BOUNDARY_SAMPLES, &mut rng)
            .iter()
            .map(|x| p.value(x).abs())
            .fold(0.0, f64::max);
        let (interior_max, argmax) = interior_max(p, dom);
        let critical_point = if interior_max > boundary_max {
            der.newton(&argmax)
                .filter(|(x, _)| dom.contains(x))
                .map(|(x, r)| der.classify(x, r))
        } else {
            None
        };
        domains.push(DomainExtremum {
            domain: idx,
            boundary_max,
            interior_max,
            interior_argmax: argmax,
            critical_point,
        });
    }
    let boundary_max = domains.iter().map(|x| x.boundary_max).fold(0.0, f64::max);
    let triggered = boundary_max < kappa;
    let mechanism_confirmed = triggered
        && domains.iter().all(|x| {
            x.critical_point
                .as_ref()
                .is_some_and(|c| matches!(c.kind, CriticalKind::Max | CriticalKind::Min))
        });
    Ok(InteriorWitnessReport {
        degree: d,
        j_d,
        precondition_met: f.len() >= j_d,
        kappa,
        boundary_max,
        triggered,
        domains,
        mechanism_confirmed,
    })
}

/// Lattice maximum of `|P|` over the domain (plus its center).
fn interior_max(p: &MultiPoly, dom: &DomainSpec) -> (f64, Vec<f64>) {
    let (lo, hi) = dom.bounding_box();
    let n = lo.len();
    let step = lo
        .iter()
        .zip(&hi)
        .map(|(a, b)| (b - a) / INTERIOR_SAMPLES_PER_AXIS)
        .fold(f64::INFINITY, f64::min);
    let counts: Vec<usize> = lo.iter().zip(&hi).map(|(a, b)| ((b - a) / step).floor() as usize + 1).collect();
    let center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let mut best = (p.value(&center).abs(), center);
    let mut idx = vec![0usize; n];
    let mut x = vec![0.0; n];
    loop {
        for k in 0..n {
            x[k] = lo[k] + idx[k] as f64 * step;
        }
        if dom.contains(&x) {
            let v = p.value(&x).abs();
            if v > best.0 {
                best = (v, x.clone());
            }
        }
        let mut k = 0;
        loop {
            if k == n {
                return best;
            }
            idx[k] += 1;
            if idx[k] < counts[k] {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// `prod_i Q(x_i)` for a univariate `Q` given by its roots.
pub fn product_polynomial(n: usize, roots: &[f64]) -> Result<MultiPoly> {
    let mut p = MultiPoly::constant(n, 1.0)?;
    for var in 0..n {
        for &r in roots {
            p = p.mul(&MultiPoly::univariate(n, var, &[-r, 1.0])?)?;
        }
    }
    Ok(p)
}
