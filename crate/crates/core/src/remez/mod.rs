//! Remez (norming) constants
//!
//! `R_d(Z)` is the smallest `K` with `sup_B |P| <= K sup_Z |P|` for every
//! polynomial of degree `d`. Finite sets are handled exactly up to a
//! certified grid inflation by linear programming; domain families get the
//! measure and topological upper bounds.

mod domains;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use domains::{certified_disjoint, required_domains, unit_ball_volume, DomainFamily, DomainSpec};

use crate::error::{Error, Result};
use crate::linalg::rank_reveal;
use crate::lp::{LinearProgram, LpOutcome, Simplex};
use crate::poly::{self, chebyshev_t, BallGrid, Basis, EvaluationMatrix, MultiPoly};

const NORMING_RANK_TOL: f64 = 1e-10;

/// Finite set of distinct points in the closed unit ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPointSet", into = "RawPointSet")]
pub struct PointSet {
    n: usize,
    points: Vec<Vec<f64>>,
    rho: f64,
}

#[derive(Serialize, Deserialize)]
struct RawPointSet {
    n: usize,
    points: Vec<Vec<f64>>,
}

impl TryFrom<RawPointSet> for PointSet {
    type Error = Error;

    fn try_from(raw: RawPointSet) -> Result<Self> {
        PointSet::new(raw.n, raw.points)
    }
}

impl From<PointSet> for RawPointSet {
    fn from(z: PointSet) -> Self {
        RawPointSet {
            n: z.n,
            points: z.points,
        }
    }
}

impl PointSet {
    pub fn new(n: usize, points: Vec<Vec<f64>>) -> Result<PointSet> {
        if n == 0 || n > poly::MAX_DIM {
            return Err(Error::InvalidInput(format!("dimension {n} out of range")));
        }
        if points.is_empty() {
            return Err(Error::InvalidInput("empty point set".into()));
        }
        for p in &points {
            if p.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: p.len(),
                });
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput("non-finite coordinate".into()));
            }
            let r = p.iter().map(|x| x * x).sum::<f64>().sqrt();
            if r > 1.0 + 1e-12 {
                return Err(Error::InvalidInput(format!("point {p:?} outside the unit ball")));
            }
        }
        let mut rho = f64::INFINITY;
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                let d = points[i]
                    .iter()
                    .zip(&points[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                rho = rho.min(d);
            }
        }
        if rho == 0.0 {
            return Err(Error::InvalidInput("duplicate points".into()));
        }
        Ok(PointSet { n, points, rho })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Minimal pairwise distance (infinite for a single point).
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `max_Z |P|`.
    pub fn max_abs(&self, p: &MultiPoly) -> f64 {
        self.points.iter().map(|z| p.value(z).abs()).fold(0.0, f64::max)
    }

    /// Row-major `|Z| x D` matrix of monomial values.
    pub fn evaluation_matrix(&self, d: usize) -> Vec<f64> {
        let basis = Basis::get(self.n, d);
        self.points.iter().flat_map(|z| basis.monomial_values(z)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormingCheck {
    pub norming: bool,
    pub rank: usize,
    pub dimension: usize,
    /// Polynomial vanishing on `Z` up to rounding, scaled to grid sup 1.
    pub certificate: Option<MultiPoly>,
}

/// Whether evaluation on `Z` determines polynomials of degree `d`.
pub fn norming_check(z: &PointSet, d: usize) -> Result<NormingCheck> {
    let basis = Basis::get(z.n(), d);
    let dim = basis.len();
    let m = z.evaluation_matrix(d);
    let rr = rank_reveal(&m, z.len(), dim, NORMING_RANK_TOL);
    let certificate = match rr.kernel {
        Some(k) => {
            let p = MultiPoly::from_coeffs(z.n(), d, k)?;
            let grid = BallGrid::new(z.n(), 0.02)?;
            let (gmax, _) = grid.max_abs(&p);
            Some(p.scaled(1.0 / gmax))
        }
        None => None,
    };
    Ok(NormingCheck {
        norming: rr.rank == dim,
        rank: rr.rank,
        dimension: dim,
        certificate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemezMethod {
    FiniteLp,
    Topological,
}

/// Enclosure `[lower, upper]` of `R_d(Z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemezReport {
    pub degree: usize,
    #[serde(with = "crate::serde_ext")]
    pub lower: f64,
    #[serde(with = "crate::serde_ext")]
    pub upper: f64,
    pub witness: MultiPoly,
    pub norming: bool,
    pub method: RemezMethod,
    #[serde(default, with = "crate::serde_ext::option", skip_serializing_if = "Option::is_none")]
    pub grid_step: Option<f64>,
    /// Grid point where the witness attains `lower`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness_point: Option<Vec<f64>>,
}

/// `sup_B |P| / max_Z |P|` with the certified sup; infinite when `P`
/// vanishes on `Z`.
pub fn witness_ratio(p: &MultiPoly, z: &PointSet, grid_step: f64) -> Result<f64> {
    let sup = poly::sup_norm_ball(p, grid_step)?.certified_max;
    let on_z = z.max_abs(p);
    Ok(if on_z == 0.0 { f64::INFINITY } else { sup / on_z })
}

/// Grid points per warm-started LP chunk. Fixed so that results do not
/// depend on the thread count.
const LP_CHUNK: usize = 256;

/// Certified enclosure of `R_d(Z)` for a finite set.
///
/// At every grid point `x` of the ball the LP `max P(x)` subject to
/// `-1 <= P(z) <= 1` on `Z` is solved; the polytope is symmetric, so this
/// is also `max |P(x)|`. The largest optimum is `lower` and the grid
/// inflation turns it into `upper`.
pub fn remez_finite(z: &PointSet, d: usize, grid_step: f64) -> Result<RemezReport> {
    let n = z.n();
    let factor = if d == 0 {
        1.0
    } else {
        poly::inflation(n, d, grid_step)?
    };
    let check = norming_check(z, d)?;
    if !check.norming {
        return Ok(RemezReport {
            degree: d,
            lower: f64::INFINITY,
            upper: f64::INFINITY,
            witness: check.certificate.expect("rank-deficient matrix has a kernel"),
            norming: false,
            method: RemezMethod::FiniteLp,
            grid_step: Some(grid_step),
            witness_point: None,
        });
    }
    let basis = Basis::get(n, d);
    let dim = basis.len();
    let mut lp = LinearProgram::new(vec![0.0; dim])?;
    for p in z.points() {
        lp.constrain(&basis.monomial_values(p), -1.0, 1.0)?;
    }
    let grid = BallGrid::new(n, grid_step.min(1.0))?;
    let evals = EvaluationMatrix::new(n, d, grid.points());
    let chunks: Vec<usize> = (0..grid.len()).step_by(LP_CHUNK).collect();
    let best = chunks
        .par_iter()
        .map(|&start| -> Result<(f64, usize, Vec<f64>)> {
            let mut simplex = Simplex::new(&lp)?
                .ok_or_else(|| Error::Inconsistent("norming LP is infeasible".into()))?;
            let mut best = (f64::NEG_INFINITY, usize::MAX, Vec::new());
            for i in start..(start + LP_CHUNK).min(grid.len()) {
                match simplex.maximize(evals.row(i))? {
                    LpOutcome::Optimal { optimum, solution } => {
                        if optimum > best.0 {
                            best = (optimum, i, solution);
                        }
                    }
                    _ => {
                        return Err(Error::Inconsistent(
                            "norming LP unbounded although the evaluation matrix has full rank".into(),
                        ))
                    }
                }
            }
            Ok(best)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold((f64::NEG_INFINITY, usize::MAX, Vec::new()), |a, b| {
            if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                b
            } else {
                a
            }
        });
    let (lower, idx, coeffs) = best;
    if !(lower >= 1.0 - 1e-9) {
        return Err(Error::Inconsistent(format!("grid LP maximum {lower} below 1")));
    }
    let lower = lower.max(1.0);
    Ok(RemezReport {
        degree: d,
        lower,
        upper: lower * factor,
        witness: MultiPoly::from_coeffs(n, d, coeffs)?,
        norming: true,
        method: RemezMethod::FiniteLp,
        grid_step: Some(grid_step),
        witness_point: Some(grid.point(idx).to_vec()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureBound {
    pub chebyshev_bound: f64,
    pub simple_bound: f64,
}

/// Remez bound for a measurable set of normalized measure `lambda`:
/// `T_d((1 + s)/(1 - s))` with `s = (1 - lambda)^(1/n)`, and the cruder
/// `(4n/lambda)^d`.
pub fn measure_remez_bound(lambda: f64, n: usize, d: usize) -> Result<MeasureBound> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::InvalidInput(format!("lambda must lie in (0, 1], got {lambda}")));
    }
    if n == 0 {
        return Err(Error::InvalidInput("dimension must be positive".into()));
    }
    let s = (1.0 - lambda).powf(1.0 / n as f64);
    let arg = (1.0 + s) / (1.0 - s);
    Ok(MeasureBound {
        chebyshev_bound: chebyshev_t(d as u32, arg),
        simple_bound: (4.0 * n as f64 / lambda).powi(d as i32),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologicalBound {
    pub degree: usize,
    pub n: usize,
    /// 1-based rank `(d - 1)^n + 1` of the binding domain by volume.
    pub j_d: usize,
    /// Input index of the binding domain.
    pub binding_index: usize,
    pub lambda: f64,
    pub raw_volume: f64,
    /// `(4n / lambda_{j_d})^d`.
    pub bound: f64,
    /// Same expression with the raw volume.
    pub raw_bound: f64,
    /// `(lambda_{j_d} / 4n)^d`.
    pub kappa: f64,
}

impl TopologicalBound {
    pub fn to_report(&self) -> Result<RemezReport> {
        Ok(RemezReport {
            degree: self.degree,
            lower: 1.0,
            upper: self.bound,
            witness: MultiPoly::constant(self.n, 1.0)?,
            norming: true,
            method: RemezMethod::Topological,
            grid_step: None,
            witness_point: None,
        })
    }
}

/// Upper bound on `R_d` of the union of the boundaries of a disjoint
/// domain family with at least `(d - 1)^n + 1` members.
pub fn topological_remez_bound(f: &DomainFamily, d: usize) -> Result<TopologicalBound> {
    if d == 0 {
        return Err(Error::InvalidInput("degree must be at least 1".into()));
    }
    let n = f.n();
    let j_d = required_domains(d, n);
    if j_d > f.len() {
        return Err(Error::TooFewDomains {
            degree: d,
            required: j_d,
            available: f.len(),
        });
    }
    let idx = f.by_volume(j_d - 1);
    let dom = &f.domains()[idx];
    let lambda = dom.normalized_volume();
    let raw = dom.volume();
    let four_n = 4.0 * n as f64;
    Ok(TopologicalBound {
        degree: d,
        n,
        j_d,
        binding_index: idx,
        lambda,
        raw_volume: raw,
        bound: (four_n / lambda).powi(d as i32),
        raw_bound: (four_n / raw).powi(d as i32),
        kappa: (lambda / four_n).powi(d as i32),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub trial: usize,
    pub polynomial: MultiPoly,
    pub boundary_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessTestReport {
    pub degree: usize,
    pub trials: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
    pub j_d: usize,
    pub kappa: f64,
    /// Smallest `max_Z |P| / kappa` over all trials.
    #[serde(with = "crate::serde_ext")]
    pub min_ratio: f64,
    pub violations: Vec<Violation>,
}

/// Samples per domain boundary in [`topological_bound_witness_test`].
pub const BOUNDARY_SAMPLES: usize = 512;

/// Grid used to normalize random polynomials in the witness test.
const WITNESS_GRID_STEP: f64 = 0.02;

/// Checks `max_Z |P| >= kappa_d` for random polynomials scaled so that
/// their ball-grid maximum is 1 (hence true sup at least 1). Half the
/// trials are uniform random, half are pushed towards vanishing on the
/// boundaries of the first `j_d` domains.
pub fn topological_bound_witness_test(
    f: &DomainFamily,
    d: usize,
    trials: usize,
    seed: u64,
) -> Result<WitnessTestReport> {
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be at least 1".into()));
    }
    let n = f.n();
    let bound = match topological_remez_bound(f, d) {
        Ok(b) => b,
        Err(Error::TooFewDomains { required, available, .. }) => {
            return Ok(WitnessTestReport {
                degree: d,
                trials,
                seed,
                skipped: Some(format!(
                    "family has {available} domains, degree {d} needs at least {required}"
                )),
                j_d: required,
                kappa: 0.0,
                min_ratio: f64::NAN,
                violations: Vec::new(),
            })
        }
        Err(e) => return Err(e),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut boundary = Vec::new();
    for rank in 0..bound.j_d {
        boundary.extend(f.domains()[f.by_volume(rank)].boundary_points(BOUNDARY_SAMPLES, &mut rng));
    }
    let on_z = EvaluationMatrix::new(n, d, boundary.iter().map(|p| p.as_slice()));
    let grid = BallGrid::new(n, WITNESS_GRID_STEP)?;
    let on_ball = EvaluationMatrix::new(n, d, grid.points());
    let basis = Basis::get(n, d);

    let polys: Vec<Vec<f64>> = (0..trials)
        .map(|t| {
            if t % 2 == 0 {
                (0..basis.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()
            } else {
                hugging_coefficients(f, &bound, d, &mut rng, &basis)
            }
        })
        .collect();
    let results: Vec<(f64, Option<Violation>)> = polys
        .into_par_iter()
        .enumerate()
        .map(|(t, c)| -> Result<(f64, Option<Violation>)> {
            let (gmax, _) = on_ball.max_abs(&c);
            let c: Vec<f64> = c.iter().map(|x| x / gmax).collect();
            let (zmax, _) = on_z.max_abs(&c);
            let violation = if zmax < bound.kappa {
                Some(Violation {
                    trial: t,
                    polynomial: MultiPoly::from_coeffs(n, d, c)?,
                    boundary_max: zmax,
                })
            } else {
                None
            };
            Ok((zmax / bound.kappa, violation))
        })
        .collect::<Result<_>>()?;
    let min_ratio = results.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    Ok(WitnessTestReport {
        degree: d,
        trials,
        seed,
        skipped: None,
        j_d: bound.j_d,
        kappa: bound.kappa,
        min_ratio,
        violations: results.into_iter().filter_map(|r| r.1).collect(),
    })
}

/// A polynomial vanishing on one domain boundary (a sphere or ellipsoid
/// equation when available) plus a small random perturbation.
fn hugging_coefficients<R: Rng>(
    f: &DomainFamily,
    bound: &TopologicalBound,
    d: usize,
    rng: &mut R,
    basis: &Basis,
) -> Vec<f64> {
    let n = f.n();
    let target = f.by_volume(rng.gen_range(0..bound.j_d));
    let eps = 10f64.powf(rng.gen_range(-4.0..-1.0));
    let noise = MultiPoly::random(n, d, rng).expect("valid shape").scaled(eps);
    let base = if d >= 2 {
        match &f.domains()[target] {
            DomainSpec::Ball { center, radius } => quadric(center, &vec![*radius; n], n),
            DomainSpec::Ellipse { center, semiaxes } => quadric(center, semiaxes, n),
            DomainSpec::Box { lo, hi } => {
                let c: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
                let s: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (b - a)).collect();
                quadric(&c, &s, n)
            }
        }
    } else {
        MultiPoly::zeros(n, 0).expect("valid shape")
    };
    let p = base.embed(d).expect("degree fits").add(&noise).expect("same dimension");
    debug_assert_eq!(p.coeffs().len(), basis.len());
    p.coeffs().to_vec()
}

/// `sum ((x_i - c_i) / a_i)^2 - 1`.
fn quadric(center: &[f64], semiaxes: &[f64], n: usize) -> MultiPoly {
    let mut p = MultiPoly::constant(n, -1.0).expect("valid shape");
    for i in 0..n {
        let t = MultiPoly::univariate(n, i, &[-center[i] / semiaxes[i], 1.0 / semiaxes[i]]).expect("valid shape");
        p = p.add(&t.mul(&t).expect("same dimension")).expect("same dimension");
    }
    p
}
