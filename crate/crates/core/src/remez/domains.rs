//! Primitive compact domains inside the unit ball and disjoint families of
//! them.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strict separation margin for disjointness and containment tests.
const MARGIN: f64 = 1e-12;

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(n - 2) * 2.0 * PI / n as f64,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum DomainSpec {
    Ball { center: Vec<f64>, radius: f64 },
    /// Axis-aligned box `[lo_1, hi_1] x ... x [lo_n, hi_n]`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Axis-aligned ellipsoid.
    Ellipse { center: Vec<f64>, semiaxes: Vec<f64> },
}

impl DomainSpec {
    pub fn dim(&self) -> usize {
        match self {
            DomainSpec::Ball { center, .. } => center.len(),
            DomainSpec::Box { lo, .. } => lo.len(),
            DomainSpec::Ellipse { center, .. } => center.len(),
        }
    }

    fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        let ok = match self {
            DomainSpec::Ball { center, radius } => finite(center) && radius.is_finite() && *radius > 0.0,
            DomainSpec::Box { lo, hi } => {
                lo.len() == hi.len() && finite(lo) && finite(hi) && lo.iter().zip(hi).all(|(a, b)| a < b)
            }
            DomainSpec::Ellipse { center, semiaxes } => {
                center.len() == semiaxes.len()
                    && finite(center)
                    && finite(semiaxes)
                    && semiaxes.iter().all(|a| *a > 0.0)
            }
        };
        if ok && self.dim() > 0 {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("degenerate domain {self:?}")))
        }
    }

    /// Raw n-volume.
    pub fn volume(&self) -> f64 {
        let n = self.dim();
        match self {
            DomainSpec::Ball { radius, .. } => unit_ball_volume(n) * radius.powi(n as i32),
            DomainSpec::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| b - a).product(),
            DomainSpec::Ellipse { semiaxes, .. } => unit_ball_volume(n) * semiaxes.iter().product::<f64>(),
        }
    }

    /// Volume as a fraction of the unit ball's volume.
    pub fn normalized_volume(&self) -> f64 {
        self.volume() / unit_ball_volume(self.dim())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            DomainSpec::Ball { center, radius } => dist2(x, center) <= radius * radius,
            DomainSpec::Box { lo, hi } => x.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| *a <= *v && v <= b),
            DomainSpec::Ellipse { center, semiaxes } => {
                x.iter().zip(center).zip(semiaxes).map(|((v, c), a)| ((v - c) / a).powi(2)).sum::<f64>() <= 1.0
            }
        }
    }

    /// Smallest axis-aligned box containing the domain.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            DomainSpec::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
            DomainSpec::Box { lo, hi } => (lo.clone(), hi.clone()),
            DomainSpec::Ellipse { center, semiaxes } => (
                center.iter().zip(semiaxes).map(|(c, a)| c - a).collect(),
                center.iter().zip(semiaxes).map(|(c, a)| c + a).collect(),
            ),
        }
    }

    /// A ball containing the domain.
    pub fn enclosing_ball(&self) -> (Vec<f64>, f64) {
        match self {
            DomainSpec::Ball { center, radius } => (center.clone(), *radius),
            DomainSpec::Box { lo, hi } => {
                let c: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
                (c, 0.5 * dist2(lo, hi).sqrt())
            }
            DomainSpec::Ellipse { center, semiaxes } => {
                (center.clone(), semiaxes.iter().fold(0.0f64, |m, a| m.max(*a)))
            }
        }
    }

    /// Largest Euclidean norm over the domain, or an upper bound for it.
    pub fn max_norm(&self) -> f64 {
        match self {
            DomainSpec::Ball { center, radius } => norm(center) + radius,
            DomainSpec::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(a, b)| a.abs().max(b.abs()).powi(2))
                .sum::<f64>()
                .sqrt(),
            DomainSpec::Ellipse { center, semiaxes } => {
                if norm(center) == 0.0 {
                    semiaxes.iter().fold(0.0f64, |m, a| m.max(*a))
                } else {
                    let (c, r) = self.enclosing_ball();
                    let (lo, hi) = self.bounding_box();
                    let boxed = DomainSpec::Box { lo, hi }.max_norm();
                    (norm(&c) + r).min(boxed)
                }
            }
        }
    }

    /// `count` points on the boundary. In the plane they are equally spaced
    /// in the natural parameter; otherwise they are drawn from `rng`.
    pub fn boundary_points<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<Vec<f64>> {
        let n = self.dim();
        match self {
            DomainSpec::Ball { center, radius } => self
                .directions(count, rng)
                .into_iter()
                .map(|u| u.iter().zip(center).map(|(v, c)| c + radius * v).collect())
                .collect(),
            DomainSpec::Ellipse { center, semiaxes } => self
                .directions(count, rng)
                .into_iter()
                .map(|u| u.iter().zip(center).zip(semiaxes).map(|((v, c), a)| c + a * v).collect())
                .collect(),
            DomainSpec::Box { lo, hi } => {
                if n == 1 {
                    return vec![lo.clone(), hi.clone()];
                }
                if n == 2 {
                    let (w, h) = (hi[0] - lo[0], hi[1] - lo[1]);
                    let per = 2.0 * (w + h);
                    return (0..count)
                        .map(|k| {
                            let s = per * k as f64 / count as f64;
                            if s < w {
                                vec![lo[0] + s, lo[1]]
                            } else if s < w + h {
                                vec![hi[0], lo[1] + (s - w)]
                            } else if s < 2.0 * w + h {
                                vec![hi[0] - (s - w - h), hi[1]]
                            } else {
                                vec![lo[0], hi[1] - (s - 2.0 * w - h)]
                            }
                        })
                        .collect();
                }
                // Faces weighted by area.
                let sides: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| b - a).collect();
                let vol: f64 = sides.iter().product();
                let face: Vec<f64> = sides.iter().map(|s| vol / s).collect();
                let total: f64 = face.iter().sum::<f64>();
                (0..count)
                    .map(|_| {
                        let mut pick = rng.gen_range(0.0..total);
                        let mut axis = 0;
                        while axis + 1 < n && pick >= face[axis] {
                            pick -= face[axis];
                            axis += 1;
                        }
                        let mut x: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| rng.gen_range(*a..*b)).collect();
                        x[axis] = if rng.gen_bool(0.5) { lo[axis] } else { hi[axis] };
                        x
                    })
                    .collect()
            }
        }
    }

    fn directions<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<Vec<f64>> {
        match self.dim() {
            1 => vec![vec![-1.0], vec![1.0]],
            2 => (0..count)
                .map(|k| {
                    let t = 2.0 * PI * k as f64 / count as f64;
                    vec![t.cos(), t.sin()]
                })
                .collect(),
            n => (0..count)
                .map(|_| {
                    let v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                    let r = norm(&v);
                    v.iter().map(|x| x / r).collect()
                })
                .collect(),
        }
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Squared distance from `x` to the box `[lo, hi]`, per axis.
fn box_gaps(x: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(lo.iter().zip(hi))
        .map(|(v, (a, b))| if v < a { a - v } else if v > b { v - b } else { 0.0 })
        .collect()
}

fn balls_apart(c1: &[f64], r1: f64, c2: &[f64], r2: f64) -> bool {
    dist2(c1, c2).sqrt() > r1 + r2 + MARGIN
}

fn boxes_apart(lo1: &[f64], hi1: &[f64], lo2: &[f64], hi2: &[f64]) -> bool {
    (0..lo1.len()).any(|i| hi1[i] + MARGIN < lo2[i] || hi2[i] + MARGIN < lo1[i])
}

fn ellipse_box_apart(center: &[f64], semiaxes: &[f64], lo: &[f64], hi: &[f64]) -> bool {
    let q: f64 = box_gaps(center, lo, hi)
        .iter()
        .zip(semiaxes)
        .map(|(g, a)| (g / a).powi(2))
        .sum();
    q > 1.0 + MARGIN
}

/// Conservative disjointness test; `false` may mean "could not certify".
pub fn certified_disjoint(a: &DomainSpec, b: &DomainSpec) -> bool {
    use DomainSpec::*;
    match (a, b) {
        (Ball { center: c1, radius: r1 }, Ball { center: c2, radius: r2 }) => balls_apart(c1, *r1, c2, *r2),
        (Box { lo: l1, hi: h1 }, Box { lo: l2, hi: h2 }) => boxes_apart(l1, h1, l2, h2),
        (Ball { center, radius }, Box { lo, hi }) | (Box { lo, hi }, Ball { center, radius }) => {
            norm(&box_gaps(center, lo, hi)) > radius + MARGIN
        }
        (Ellipse { center, semiaxes }, Box { lo, hi }) | (Box { lo, hi }, Ellipse { center, semiaxes }) => {
            ellipse_box_apart(center, semiaxes, lo, hi)
        }
        (Ellipse { center, semiaxes }, other) | (other, Ellipse { center, semiaxes }) => {
            let (c1, r1) = a.enclosing_ball();
            let (c2, r2) = b.enclosing_ball();
            if balls_apart(&c1, r1, &c2, r2) {
                return true;
            }
            let (lo, hi) = other.bounding_box();
            ellipse_box_apart(center, semiaxes, &lo, &hi)
                || match other {
                    Ellipse { center: c, semiaxes: s } => {
                        let (lo, hi) = a.bounding_box();
                        ellipse_box_apart(c, s, &lo, &hi)
                    }
                    _ => false,
                }
        }
    }
}

/// Pairwise disjoint primitive domains in the closed unit ball, ordered by
/// volume (largest first, ties by input order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFamily", into = "RawFamily")]
pub struct DomainFamily {
    n: usize,
    domains: Vec<DomainSpec>,
    order: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct RawFamily {
    n: usize,
    domains: Vec<DomainSpec>,
}

impl TryFrom<RawFamily> for DomainFamily {
    type Error = Error;

    fn try_from(raw: RawFamily) -> Result<Self> {
        DomainFamily::new(raw.n, raw.domains)
    }
}

impl From<DomainFamily> for RawFamily {
    fn from(f: DomainFamily) -> Self {
        RawFamily {
            n: f.n,
            domains: f.domains,
        }
    }
}

impl DomainFamily {
    pub fn new(n: usize, domains: Vec<DomainSpec>) -> Result<DomainFamily> {
        if n == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        for (i, d) in domains.iter().enumerate() {
            d.validate()?;
            if d.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: d.dim(),
                });
            }
            if d.max_norm() > 1.0 + MARGIN {
                return Err(Error::InvalidInput(format!("domain {i} is not inside the unit ball")));
            }
        }
        for i in 0..domains.len() {
            for j in (i + 1)..domains.len() {
                if !certified_disjoint(&domains[i], &domains[j]) {
                    return Err(Error::InvalidInput(format!(
                        "domains {i} and {j} are not certified disjoint"
                    )));
                }
            }
        }
        let mut order: Vec<usize> = (0..domains.len()).collect();
        order.sort_by(|&a, &b| domains[b].volume().total_cmp(&domains[a].volume()).then(a.cmp(&b)));
        Ok(DomainFamily { n, domains, order })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.domains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domains.is_empty()
    }

    /// Domains in input order.
    pub fn domains(&self) -> &[DomainSpec] {
        &self.domains
    }

    /// Input index of the `rank`-th largest domain (0-based).
    pub fn by_volume(&self, rank: usize) -> usize {
        self.order[rank]
    }

    /// Raw volumes sorted descending.
    pub fn volumes(&self) -> Vec<f64> {
        self.order.iter().map(|&i| self.domains[i].volume()).collect()
    }

    /// Normalized volumes sorted descending.
    pub fn normalized_volumes(&self) -> Vec<f64> {
        self.order.iter().map(|&i| self.domains[i].normalized_volume()).collect()
    }

    /// Largest `d` with `(d - 1)^n + 1 <= N`; `None` when the family is
    /// empty. Unbounded (`usize::MAX`) when `n = 0` cannot occur.
    pub fn max_degree(&self) -> Option<usize> {
        if self.domains.is_empty() {
            return None;
        }
        let mut d = 1usize;
        while required_domains(d + 1, self.n) <= self.domains.len() {
            d += 1;
        }
        Some(d)
    }
}

/// `(d - 1)^n + 1`, the number of domains the topological bound needs at
/// degree `d >= 1`.
pub fn required_domains(d: usize, n: usize) -> usize {
    (d.saturating_sub(1)).saturating_pow(n as u32).saturating_add(1)
}
