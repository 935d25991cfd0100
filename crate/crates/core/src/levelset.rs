//! Zero sets of planar fields and the gradient-flow isotopy check between
//! a smooth function and its Taylor polynomial.
//!
//! The flow of `v = grad f / |grad f|^2` moves points across level sets at
//! unit speed, so `Psi(y, t)`, the flow from a zero `y` for time `t`,
//! satisfies `f(Psi(y, t)) = t`. Along each trajectory the Taylor
//! polynomial `P` must cross zero exactly once with `|dP/dt - 1| <= 1/2`;
//! the crossings then trace a component of `{P = 0}` isotopic to the
//! component of `{f = 0}` they started on.

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{self, markov_derivative_bound, MultiPoly};
use crate::rigidity::factorial;

pub type Point = [f64; 2];

/// Planar scalar field with gradient.
pub trait ScalarField: Sync {
    fn value(&self, x: &Point) -> f64;
    fn gradient(&self, x: &Point) -> Point;
}

/// A bivariate polynomial with its gradient precomputed.
#[derive(Debug, Clone)]
pub struct PolyField {
    p: MultiPoly,
    grad: [MultiPoly; 2],
}

impl PolyField {
    pub fn new(p: &MultiPoly) -> Result<PolyField> {
        if p.n() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: p.n() });
        }
        Ok(PolyField {
            p: p.clone(),
            grad: [p.partial(0), p.partial(1)],
        })
    }

    pub fn poly(&self) -> &MultiPoly {
        &self.p
    }
}

impl ScalarField for PolyField {
    fn value(&self, x: &Point) -> f64 {
        self.p.value(x)
    }

    fn gradient(&self, x: &Point) -> Point {
        [self.grad[0].value(x), self.grad[1].value(x)]
    }
}

fn norm(v: &Point) -> f64 {
    v[0].hypot(v[1])
}

fn dist(a: &Point, b: &Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

// ---------------------------------------------------------------------------
// Zero-set extraction

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub vertices: Vec<Point>,
    /// Closed polylines repeat no vertex; the last connects to the first.
    pub closed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelCurve {
    pub cell_size: f64,
    pub components: Vec<Polyline>,
}

impl LevelCurve {
    pub fn vertex_count(&self) -> usize {
        self.components.iter().map(|c| c.vertices.len()).sum()
    }

    /// Index of the component with a vertex nearest to `x`, and the
    /// distance to that vertex.
    pub fn nearest_component(&self, x: &Point) -> Option<(usize, f64)> {
        self.components
            .iter()
            .enumerate()
            .flat_map(|(i, c)| c.vertices.iter().map(move |v| (i, dist(v, x))))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// Node lattice on `[-1, 1]^2` masked to the closed unit disk.
#[derive(Debug, Clone)]
struct Lattice {
    n: usize,
    h: f64,
    values: Vec<f64>,
    inside: Vec<bool>,
}

impl Lattice {
    fn new<F: ScalarField + ?Sized>(g: &F, cell_size: f64) -> Result<Lattice> {
        if !(cell_size > 0.0 && cell_size <= 0.05) {
            return Err(Error::InvalidInput(format!("cell size must be in (0, 0.05], got {cell_size}")));
        }
        let n = (2.0 / cell_size - 1e-9).ceil() as usize;
        let h = 2.0 / n as f64;
        let m = n + 1;
        let nodes: Vec<(f64, bool)> = (0..m * m)
            .into_par_iter()
            .map(|k| {
                let x = [-1.0 + (k % m) as f64 * h, -1.0 + (k / m) as f64 * h];
                if x[0] * x[0] + x[1] * x[1] <= 1.0 {
                    (g.value(&x), true)
                } else {
                    (f64::NAN, false)
                }
            })
            .collect();
        let (values, inside) = nodes.into_iter().unzip();
        Ok(Lattice { n, h, values, inside })
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        j * (self.n + 1) + i
    }

    fn node(&self, i: usize, j: usize) -> Point {
        [-1.0 + i as f64 * self.h, -1.0 + j as f64 * self.h]
    }

    fn positive(&self, i: usize, j: usize) -> bool {
        self.values[self.idx(i, j)] >= 0.0
    }
}

/// Zero set of `g` in the unit disk by marching squares.
///
/// Nodes with `g >= 0` count as positive. Cells with a corner outside the
/// disk are skipped. Saddle cells are resolved by the sign of `g` at the
/// cell center. Vertices are Newton-polished onto `g = 0` with steps no
/// longer than one cell.
pub fn extract_zero_set<F: ScalarField + ?Sized>(g: &F, cell_size: f64) -> Result<LevelCurve> {
    let lat = Lattice::new(g, cell_size)?;
    let n = lat.n;
    let m = n + 1;
    // Edge ids: 2 * node + 0 for the edge to the right, + 1 for the edge up.
    let h_edge = |i: usize, j: usize| 2 * (j * m + i);
    let v_edge = |i: usize, j: usize| 2 * (j * m + i) + 1;
    let mut points: HashMap<usize, Point> = HashMap::new();
    let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
    let crossing = |a: (usize, usize), b: (usize, usize)| -> Point {
        let (va, vb) = (lat.values[lat.idx(a.0, a.1)], lat.values[lat.idx(b.0, b.1)]);
        let s = va / (va - vb);
        let (pa, pb) = (lat.node(a.0, a.1), lat.node(b.0, b.1));
        [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])]
    };
    for j in 0..n {
        for i in 0..n {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            if corners.iter().any(|&(a, b)| !lat.inside[lat.idx(a, b)]) {
                continue;
            }
            let s: Vec<bool> = corners.iter().map(|&(a, b)| lat.positive(a, b)).collect();
            // Edges: bottom, right, top, left.
            let edges = [
                (h_edge(i, j), corners[0], corners[1]),
                (v_edge(i + 1, j), corners[1], corners[2]),
                (h_edge(i, j + 1), corners[3], corners[2]),
                (v_edge(i, j), corners[0], corners[3]),
            ];
            let cut: Vec<usize> = (0..4)
                .filter(|&e| {
                    let (_, a, b) = edges[e];
                    lat.positive(a.0, a.1) != lat.positive(b.0, b.1)
                })
                .collect();
            let pairs: Vec<(usize, usize)> = match cut.len() {
                0 => continue,
                2 => vec![(cut[0], cut[1])],
                4 => {
                    let c = lat.node(i, j);
                    let center = [c[0] + 0.5 * lat.h, c[1] + 0.5 * lat.h];
                    let center_pos = g.value(&center) >= 0.0;
                    // Diagonal pair (0, 2) positive when s[0] holds.
                    if s[0] == center_pos {
                        vec![(0, 1), (2, 3)]
                    } else {
                        vec![(3, 0), (1, 2)]
                    }
                }
                _ => unreachable!("a square has an even number of sign changes"),
            };
            for (a, b) in pairs {
                let (ea, ea0, ea1) = edges[a];
                let (eb, eb0, eb1) = edges[b];
                points.entry(ea).or_insert_with(|| crossing(ea0, ea1));
                points.entry(eb).or_insert_with(|| crossing(eb0, eb1));
                adj.entry(ea).or_default().push(eb);
                adj.entry(eb).or_default().push(ea);
            }
        }
    }
    // Walk the segment graph; open chains start at degree-one nodes.
    let mut keys: Vec<usize> = adj.keys().copied().collect();
    keys.sort_unstable();
    keys.sort_by_key(|k| adj[k].len() != 1);
    let mut seen: HashMap<usize, bool> = HashMap::new();
    let mut components = Vec::new();
    for &start in &keys {
        if seen.contains_key(&start) {
            continue;
        }
        let mut chain = vec![start];
        seen.insert(start, true);
        let mut prev = usize::MAX;
        let mut cur = start;
        let closed = loop {
            let next = adj[&cur].iter().copied().find(|&e| e != prev && !seen.contains_key(&e));
            match next {
                Some(e) => {
                    seen.insert(e, true);
                    chain.push(e);
                    prev = cur;
                    cur = e;
                }
                None => break chain.len() > 2 && adj[&cur].contains(&start) && adj[&start].len() == 2,
            }
        };
        let vertices: Vec<Point> = chain.iter().map(|e| polish(g, points[e], lat.h)).collect();
        components.push(Polyline { vertices, closed });
    }
    Ok(LevelCurve {
        cell_size: lat.h,
        components,
    })
}

/// Newton projection onto `g = 0` along the gradient, each step clamped
/// to `max_step`.
pub fn polish<F: ScalarField + ?Sized>(g: &F, x0: Point, max_step: f64) -> Point {
    let mut x = x0;
    for _ in 0..30 {
        let v = g.value(&x);
        let gr = g.gradient(&x);
        let n2 = gr[0] * gr[0] + gr[1] * gr[1];
        if v == 0.0 || n2 == 0.0 {
            break;
        }
        let mut step = [v * gr[0] / n2, v * gr[1] / n2];
        let len = norm(&step);
        if len > max_step {
            step = [step[0] * max_step / len, step[1] * max_step / len];
        }
        let next = [x[0] - step[0], x[1] - step[1]];
        if g.value(&next).abs() >= v.abs() {
            break;
        }
        x = next;
        if len < 1e-16 {
            break;
        }
    }
    x
}

/// Connected sign regions of a field on the masked lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignRegions {
    pub cell_size: f64,
    /// Node counts of positive regions not touching the disk boundary.
    pub compact_positive: Vec<usize>,
    pub positive: usize,
    pub negative: usize,
}

impl SignRegions {
    /// Closed zero-set components implied by the region count: disjoint
    /// closed curves in a disk split it into one more region than curves.
    pub fn implied_components(&self) -> usize {
        (self.positive + self.negative).saturating_sub(1)
    }
}

/// Flood fill of `g >= 0` and `g < 0` nodes (4-neighbour connectivity).
pub fn sign_regions<F: ScalarField + ?Sized>(g: &F, cell_size: f64) -> Result<SignRegions> {
    let lat = Lattice::new(g, cell_size)?;
    let m = lat.n + 1;
    let mut label = vec![usize::MAX; m * m];
    let mut positive = 0;
    let mut negative = 0;
    let mut compact_positive = Vec::new();
    let mut stack = Vec::new();
    for start in 0..m * m {
        if !lat.inside[start] || label[start] != usize::MAX {
            continue;
        }
        let sign = lat.values[start] >= 0.0;
        let mut size = 0;
        let mut compact = true;
        label[start] = start;
        stack.push(start);
        while let Some(k) = stack.pop() {
            size += 1;
            let (i, j) = (k % m, k / m);
            let nbrs = [
                (i > 0).then(|| k - 1),
                (i + 1 < m).then(|| k + 1),
                (j > 0).then(|| k - m),
                (j + 1 < m).then(|| k + m),
            ];
            if nbrs.iter().any(|q| q.map_or(true, |q| !lat.inside[q])) {
                compact = false;
            }
            for q in nbrs.into_iter().flatten() {
                if lat.inside[q] && label[q] == usize::MAX && (lat.values[q] >= 0.0) == sign {
                    label[q] = start;
                    stack.push(q);
                }
            }
        }
        if sign {
            positive += 1;
            if compact {
                compact_positive.push(size);
            }
        } else {
            negative += 1;
        }
    }
    Ok(SignRegions {
        cell_size: lat.h,
        compact_positive,
        positive,
        negative,
    })
}

// ---------------------------------------------------------------------------
// Jet models

/// Built-in smooth fields `f = P + extra`, where `extra` vanishes to order
/// `d` at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldSpec {
    /// `f = P`.
    Exact,
    /// `f = P + tail`, `tail` containing only monomials above degree `d`.
    PolynomialTail { tail: MultiPoly },
    /// `f = P + amplitude * (s - taylor_d(s))` with
    /// `s(x) = sin(omega . x + phase)`.
    SineTail {
        amplitude: f64,
        omega: [f64; 2],
        phase: f64,
    },
}

/// Taylor data of a smooth planar function at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawJet", into = "RawJet")]
pub struct JetModel {
    d: usize,
    taylor: MultiPoly,
    remainder_bound: f64,
    field: FieldSpec,
    #[serde(skip)]
    eval: JetField,
}

#[derive(Serialize, Deserialize)]
struct RawJet {
    n: usize,
    d: usize,
    taylor: MultiPoly,
    remainder_bound: f64,
    field: FieldSpec,
}

impl TryFrom<RawJet> for JetModel {
    type Error = Error;

    fn try_from(raw: RawJet) -> Result<Self> {
        if raw.n != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: raw.n });
        }
        JetModel::new(raw.d, raw.taylor, raw.remainder_bound, raw.field)
    }
}

impl From<JetModel> for RawJet {
    fn from(m: JetModel) -> Self {
        RawJet {
            n: 2,
            d: m.d,
            taylor: m.taylor,
            remainder_bound: m.remainder_bound,
            field: m.field,
        }
    }
}

/// Evaluator for `f`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct JetField {
    taylor: Option<PolyBox>,
    tail: Option<PolyBox>,
    sine: Option<SineTail>,
}

#[derive(Debug, Clone, PartialEq)]
struct PolyBox {
    p: MultiPoly,
    grad: [MultiPoly; 2],
}

impl PolyBox {
    fn new(p: &MultiPoly) -> PolyBox {
        PolyBox {
            p: p.clone(),
            grad: [p.partial(0), p.partial(1)],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct SineTail {
    amplitude: f64,
    omega: [f64; 2],
    phase: f64,
    taylor: PolyBox,
}

impl ScalarField for JetField {
    fn value(&self, x: &Point) -> f64 {
        let mut v = self.taylor.as_ref().map_or(0.0, |t| t.p.value(x));
        if let Some(t) = &self.tail {
            v += t.p.value(x);
        }
        if let Some(s) = &self.sine {
            let arg = s.omega[0] * x[0] + s.omega[1] * x[1] + s.phase;
            v += s.amplitude * (arg.sin() - s.taylor.p.value(x));
        }
        v
    }

    fn gradient(&self, x: &Point) -> Point {
        let mut g = [0.0; 2];
        for b in [&self.taylor, &self.tail].into_iter().flatten() {
            g[0] += b.grad[0].value(x);
            g[1] += b.grad[1].value(x);
        }
        if let Some(s) = &self.sine {
            let arg = s.omega[0] * x[0] + s.omega[1] * x[1] + s.phase;
            for k in 0..2 {
                g[k] += s.amplitude * (s.omega[k] * arg.cos() - s.taylor.grad[k].value(x));
            }
        }
        g
    }
}

/// Degree-`d` Taylor polynomial of `sin(omega . x + phase)` at the origin.
pub fn sine_taylor(omega: [f64; 2], phase: f64, d: usize) -> Result<MultiPoly> {
    let lin = MultiPoly::from_terms(2, 1, &[(&[1, 0], omega[0]), (&[0, 1], omega[1])])?;
    let mut total = MultiPoly::zeros(2, d)?;
    let mut power = MultiPoly::constant(2, 1.0)?;
    for k in 0..=d {
        // k-th derivative of sin at phase.
        let dk = (phase + k as f64 * PI / 2.0).sin();
        total = total.add(&power.scaled(dk / factorial(k)))?;
        power = power.mul(&lin)?;
    }
    Ok(total.truncate(d))
}

impl JetModel {
    pub fn new(d: usize, taylor: MultiPoly, remainder_bound: f64, field: FieldSpec) -> Result<JetModel> {
        if taylor.n() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: taylor.n() });
        }
        if taylor.exact_degree() > d {
            return Err(Error::InvalidInput(format!("Taylor polynomial exceeds degree {d}")));
        }
        if !(remainder_bound >= 0.0 && remainder_bound.is_finite()) {
            return Err(Error::InvalidInput("remainder bound must be finite and non-negative".into()));
        }
        let taylor = if taylor.degree() == d { taylor } else { taylor.embed(d).unwrap_or(taylor) };
        let mut eval = JetField {
            taylor: Some(PolyBox::new(&taylor)),
            ..JetField::default()
        };
        match &field {
            FieldSpec::Exact => {}
            FieldSpec::PolynomialTail { tail } => {
                if tail.n() != 2 {
                    return Err(Error::DimensionMismatch { expected: 2, got: tail.n() });
                }
                let low = tail.truncate(d);
                if low.coeffs().iter().any(|c| *c != 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "polynomial tail has monomials of degree <= {d}"
                    )));
                }
                eval.tail = Some(PolyBox::new(tail));
            }
            FieldSpec::SineTail { amplitude, omega, phase } => {
                if ![*amplitude, omega[0], omega[1], *phase].iter().all(|v| v.is_finite()) {
                    return Err(Error::InvalidInput("non-finite sine parameters".into()));
                }
                eval.sine = Some(SineTail {
                    amplitude: *amplitude,
                    omega: *omega,
                    phase: *phase,
                    taylor: PolyBox::new(&sine_taylor(*omega, *phase, d)?),
                });
            }
        }
        Ok(JetModel {
            d,
            taylor,
            remainder_bound,
            field,
            eval,
        })
    }

    /// Model with `f = P`.
    pub fn exact(taylor: MultiPoly) -> Result<JetModel> {
        let d = taylor.degree();
        JetModel::new(d, taylor, 0.0, FieldSpec::Exact)
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    pub fn taylor(&self) -> &MultiPoly {
        &self.taylor
    }

    pub fn remainder_bound(&self) -> f64 {
        self.remainder_bound
    }

    pub fn field_spec(&self) -> &FieldSpec {
        &self.field
    }

    pub fn field(&self) -> &JetField {
        &self.eval
    }

    /// Rigorous upper bound on `M_{d+1}(f)` for the built-in fields.
    pub fn remainder_upper_bound(&self) -> f64 {
        match &self.field {
            FieldSpec::Exact => 0.0,
            FieldSpec::PolynomialTail { tail } => tail.derivative_norm_coefficient_bound(self.d + 1),
            FieldSpec::SineTail { amplitude, omega, .. } => {
                amplitude.abs() * (omega[0].abs() + omega[1].abs()).powi(self.d as i32 + 1)
            }
        }
    }

    /// Spot check of `|f - P| <= M_{d+1} / (d + 1)!` and `|f| <= 1` on
    /// `samples` random points of the disk.
    pub fn spot_check(&self, samples: usize, seed: u64) -> ModelCheck {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let allowed = self.remainder_bound / factorial(self.d + 1);
        let mut worst_remainder = 0.0f64;
        let mut max_abs = 0.0f64;
        for _ in 0..samples {
            let r = rng.gen::<f64>().sqrt();
            let th = rng.gen_range(0.0..2.0 * PI);
            let x = [r * th.cos(), r * th.sin()];
            let f = self.eval.value(&x);
            worst_remainder = worst_remainder.max((f - self.taylor.value(&x)).abs());
            max_abs = max_abs.max(f.abs());
        }
        ModelCheck {
            samples,
            allowed_remainder: allowed,
            worst_remainder,
            max_abs,
            ok: worst_remainder <= allowed * (1.0 + 1e-9) + 1e-14 && max_abs <= 1.0 + 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCheck {
    pub samples: usize,
    pub allowed_remainder: f64,
    pub worst_remainder: f64,
    pub max_abs: f64,
    pub ok: bool,
}

// ---------------------------------------------------------------------------
// Regularity and thresholds

/// Certified lower bound on `|grad f|` along the extracted zero set.
///
/// The slack `M_2(f) * cell` uses the smaller of two rigorous bounds on
/// `M_2(P)` (Markov times the certified sup, or the coefficient bound)
/// plus `M_{d+1} / (d - 1)!` for the remainder.
pub fn estimate_gamma(model: &JetModel, curve: &LevelCurve) -> Result<f64> {
    let verts: Vec<&Point> = curve.components.iter().flat_map(|c| c.vertices.iter()).collect();
    if verts.is_empty() {
        return Err(Error::InvalidInput("empty zero set".into()));
    }
    let f = model.field();
    let min_grad = verts.iter().map(|x| norm(&f.gradient(x))).fold(f64::INFINITY, f64::min);
    let m2 = second_derivative_bound(model)?;
    let gamma = min_grad - m2 * curve.cell_size;
    if gamma <= 0.0 {
        return Err(Error::RegularityNotCertified { gamma });
    }
    Ok(gamma)
}

/// Upper bound on `M_2(f)` on the unit disk.
pub fn second_derivative_bound(model: &JetModel) -> Result<f64> {
    let p = model.taylor();
    let d = model.degree();
    let coeff = p.derivative_norm_coefficient_bound(2);
    let markov = if d >= 2 {
        let step = 0.5 * poly::max_admissible_step(2, d);
        markov_derivative_bound(2, d, 2) * poly::sup_norm_ball(p, step)?.certified_max
    } else {
        0.0
    };
    let remainder = if d >= 1 {
        model.remainder_bound() / factorial(d - 1)
    } else {
        model.remainder_bound()
    };
    Ok(coeff.min(markov) + remainder)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub c3: f64,
    pub delta: f64,
    pub eta: f64,
    pub t: f64,
}

/// `C3 = C2 + C2/(d+1)! + 1/(d-1)!` with `C2` the Markov constant for
/// second derivatives, `delta = gamma/(3 C3)`, `eta = delta gamma / 2` and
/// `T = min(1, d! gamma^2 / (4 C3))`.
pub fn thresholds(n: usize, d: usize, gamma: f64) -> Result<Thresholds> {
    if d < 2 {
        return Err(Error::InvalidInput(format!("thresholds need degree at least 2, got {d}")));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidInput(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    let c2 = markov_derivative_bound(n, d, 2);
    let c3 = c2 + c2 / factorial(d + 1) + 1.0 / factorial(d - 1);
    let delta = gamma / (3.0 * c3);
    Ok(Thresholds {
        c3,
        delta,
        eta: delta * gamma / 2.0,
        t: (factorial(d) * gamma * gamma / (4.0 * c3)).min(1.0),
    })
}

// ---------------------------------------------------------------------------
// Flow

/// Integrates `dx/dt = grad f / |grad f|^2` from `y` for time `t` with
/// fixed RK4 steps no longer than `max_step`. Fails when `|grad f|` drops
/// below `min_grad` at any stage.
pub fn integrate_flow<F: ScalarField + ?Sized>(
    f: &F,
    y: Point,
    t: f64,
    max_step: f64,
    min_grad: f64,
) -> Result<Point> {
    if t == 0.0 {
        return Ok(y);
    }
    let steps = (t.abs() / max_step).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    let mut x = y;
    for k in 0..steps {
        x = rk4_step(f, x, h, min_grad, k as f64 * h)?;
    }
    Ok(x)
}

fn velocity<F: ScalarField + ?Sized>(f: &F, x: &Point, min_grad: f64, t: f64) -> Result<Point> {
    let g = f.gradient(x);
    let n = norm(&g);
    if !(n >= min_grad) || n == 0.0 {
        return Err(Error::LeftNeighborhood { t, grad_norm: n });
    }
    let n2 = n * n;
    Ok([g[0] / n2, g[1] / n2])
}

fn rk4_step<F: ScalarField + ?Sized>(f: &F, x: Point, h: f64, min_grad: f64, t: f64) -> Result<Point> {
    let k1 = velocity(f, &x, min_grad, t)?;
    let k2 = velocity(f, &[x[0] + 0.5 * h * k1[0], x[1] + 0.5 * h * k1[1]], min_grad, t)?;
    let k3 = velocity(f, &[x[0] + 0.5 * h * k2[0], x[1] + 0.5 * h * k2[1]], min_grad, t)?;
    let k4 = velocity(f, &[x[0] + h * k3[0], x[1] + h * k3[1]], min_grad, t)?;
    Ok([
        x[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        x[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ])
}

/// Steps per `eta` used by the flow map.
pub const FLOW_STEPS: usize = 50;

/// `Psi(y, t)` for `|t| <= eta`, RK4 with step `eta / 50`.
pub fn flow_map(model: &JetModel, gamma: f64, eta: f64, y: Point, t: f64) -> Result<Point> {
    if t.abs() > eta * (1.0 + 1e-12) {
        return Err(Error::InvalidInput(format!("|t| = {} exceeds eta = {eta}", t.abs())));
    }
    integrate_flow(model.field(), y, t, eta / FLOW_STEPS as f64, gamma / 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub component: usize,
    pub vertex: usize,
    pub y: Point,
    pub dp_dt_min: f64,
    pub dp_dt_max: f64,
    pub sign_changes: usize,
    /// `t(y)`, the time at which `P` vanishes along the trajectory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_zero: Option<f64>,
    /// The zero of `P` reached by the flow.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero: Option<Point>,
    /// Largest `|f(Psi(y, t)) - t|` over the samples.
    pub identity_residual: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<TrajectoryFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryFailure {
    LeftNeighborhood,
    BandViolated,
    NoSignChange,
    MultipleSignChanges,
    IdentityViolated,
}

const TRAJECTORY_SAMPLES: usize = 2 * FLOW_STEPS + 1;
pub const IDENTITY_TOL: f64 = 1e-6;

/// Samples `P(Psi(y, t))` at 101 points of `[-eta, eta]`, checks the slope
/// band and the single sign change, and bisects for `t(y)`.
pub fn zero_on_trajectory(
    model: &JetModel,
    p: &PolyField,
    gamma: f64,
    eta: f64,
    y: Point,
) -> TrajectoryRecord {
    let mut rec = TrajectoryRecord {
        component: 0,
        vertex: 0,
        y,
        dp_dt_min: f64::NAN,
        dp_dt_max: f64::NAN,
        sign_changes: 0,
        t_zero: None,
        zero: None,
        identity_residual: 0.0,
        failure: None,
    };
    let f = model.field();
    let h = eta / FLOW_STEPS as f64;
    let min_grad = gamma / 2.0;
    // Positions at t_k = (k - 50) h.
    let mut xs = vec![[0.0; 2]; TRAJECTORY_SAMPLES];
    xs[FLOW_STEPS] = y;
    for dir in [1.0f64, -1.0] {
        let mut x = y;
        for s in 1..=FLOW_STEPS {
            match rk4_step(f, x, dir * h, min_grad, dir * (s - 1) as f64 * h) {
                Ok(next) => x = next,
                Err(_) => {
                    rec.failure = Some(TrajectoryFailure::LeftNeighborhood);
                    return rec;
                }
            }
            let k = (FLOW_STEPS as isize + dir as isize * s as isize) as usize;
            xs[k] = x;
        }
    }
    let ts: Vec<f64> = (0..TRAJECTORY_SAMPLES)
        .map(|k| (k as f64 - FLOW_STEPS as f64) * h)
        .collect();
    let ps: Vec<f64> = xs.iter().map(|x| p.value(x)).collect();
    rec.identity_residual = xs
        .iter()
        .zip(&ts)
        .map(|(x, t)| (f.value(x) - t).abs())
        .fold(0.0, f64::max);
    let slopes: Vec<f64> = ps.windows(2).map(|w| (w[1] - w[0]) / h).collect();
    rec.dp_dt_min = slopes.iter().copied().fold(f64::INFINITY, f64::min);
    rec.dp_dt_max = slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let changes: Vec<usize> = (0..TRAJECTORY_SAMPLES - 1)
        .filter(|&k| (ps[k] >= 0.0) != (ps[k + 1] >= 0.0))
        .collect();
    rec.sign_changes = changes.len();
    if rec.identity_residual > IDENTITY_TOL {
        rec.failure = Some(TrajectoryFailure::IdentityViolated);
        return rec;
    }
    if rec.dp_dt_min < 0.5 || rec.dp_dt_max > 1.5 {
        rec.failure = Some(TrajectoryFailure::BandViolated);
        return rec;
    }
    match changes.len() {
        0 => {
            rec.failure = Some(TrajectoryFailure::NoSignChange);
            return rec;
        }
        1 => {}
        _ => {
            rec.failure = Some(TrajectoryFailure::MultipleSignChanges);
            return rec;
        }
    }
    let k = changes[0];
    let (x0, t0) = (xs[k], ts[k]);
    let lo_pos = ps[k] >= 0.0;
    let (mut a, mut b) = (t0, ts[k + 1]);
    let mut zero = xs[k];
    while b - a > 1e-10 {
        let mid = 0.5 * (a + b);
        let Ok(xm) = rk4_step(f, x0, mid - t0, min_grad, t0) else {
            rec.failure = Some(TrajectoryFailure::LeftNeighborhood);
            return rec;
        };
        zero = xm;
        if (p.value(&xm) >= 0.0) == lo_pos {
            a = mid;
        } else {
            b = mid;
        }
    }
    let t = 0.5 * (a + b);
    if let Ok(x) = rk4_step(f, x0, t - t0, min_grad, t0) {
        zero = x;
    }
    rec.t_zero = Some(t);
    rec.zero = Some(zero);
    rec
}

// ---------------------------------------------------------------------------
// Isotopy verdict

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IsotopyStatus {
    Verified,
    Failed,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsotopyVerdict {
    pub status: IsotopyStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    /// `(component of {f = 0}, component of {P = 0})`.
    pub pairing: Vec<(usize, usize)>,
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<Thresholds>,
    pub remainder_bound: f64,
    pub components_f: usize,
    pub components_p: usize,
    pub cell_size: f64,
    pub diagnostics: Vec<TrajectoryRecord>,
}

impl IsotopyVerdict {
    fn stop(status: IsotopyStatus, reason: String, base: IsotopyVerdict) -> IsotopyVerdict {
        IsotopyVerdict {
            status,
            reason: Some(reason),
            ..base
        }
    }
}

/// Runs the full construction on `model` at lattice resolution
/// `cell_size`. Never errors: every failure becomes a verdict.
pub fn isotopy_check(model: &JetModel, cell_size: f64) -> IsotopyVerdict {
    let mut verdict = IsotopyVerdict {
        status: IsotopyStatus::Inconclusive,
        reason: None,
        pairing: Vec::new(),
        gamma: 0.0,
        constants: None,
        remainder_bound: model.remainder_bound(),
        components_f: 0,
        components_p: 0,
        cell_size,
        diagnostics: Vec::new(),
    };
    use IsotopyStatus::*;
    let curve_f = match extract_zero_set(model.field(), cell_size) {
        Ok(c) => c,
        Err(e) => return IsotopyVerdict::stop(Inconclusive, e.to_string(), verdict),
    };
    verdict.cell_size = curve_f.cell_size;
    verdict.components_f = curve_f.components.len();
    if curve_f.components.is_empty() {
        return IsotopyVerdict::stop(Inconclusive, "zero set of f is empty".into(), verdict);
    }
    if curve_f.components.iter().any(|c| !c.closed) {
        return IsotopyVerdict::stop(Inconclusive, "zero set of f reaches the boundary".into(), verdict);
    }
    let gamma = match estimate_gamma(model, &curve_f) {
        Ok(g) => g.min(1.0 - 1e-9),
        Err(e) => return IsotopyVerdict::stop(Inconclusive, e.to_string(), verdict),
    };
    verdict.gamma = gamma;
    let th = match thresholds(2, model.degree(), gamma) {
        Ok(t) => t,
        Err(e) => return IsotopyVerdict::stop(Inconclusive, e.to_string(), verdict),
    };
    verdict.constants = Some(th);
    if model.remainder_bound() > th.t {
        return IsotopyVerdict::stop(
            Inconclusive,
            format!(
                "threshold exceeded: M_(d+1) = {:.6e} > T = {:.6e}; the non-isotopy direction is not triggered",
                model.remainder_bound(),
                th.t
            ),
            verdict,
        );
    }
    let pfield = match PolyField::new(model.taylor()) {
        Ok(p) => p,
        Err(e) => return IsotopyVerdict::stop(Inconclusive, e.to_string(), verdict),
    };
    let jobs: Vec<(usize, usize, Point)> = curve_f
        .components
        .iter()
        .enumerate()
        .flat_map(|(c, poly)| poly.vertices.iter().enumerate().map(move |(v, y)| (c, v, *y)))
        .collect();
    verdict.diagnostics = jobs
        .par_iter()
        .map(|&(c, v, y)| {
            let mut r = zero_on_trajectory(model, &pfield, gamma, th.eta, y);
            r.component = c;
            r.vertex = v;
            r
        })
        .collect();
    if let Some(bad) = verdict.diagnostics.iter().find(|r| r.failure.is_some()) {
        let failure = bad.failure.clone().expect("checked");
        let status = if failure == TrajectoryFailure::LeftNeighborhood { Inconclusive } else { Failed };
        let reason = format!(
            "trajectory from component {} vertex {} failed: {failure:?}",
            bad.component, bad.vertex
        );
        return IsotopyVerdict::stop(status, reason, verdict);
    }
    let curve_p = match extract_zero_set(&pfield, cell_size) {
        Ok(c) => c,
        Err(e) => return IsotopyVerdict::stop(Inconclusive, e.to_string(), verdict),
    };
    verdict.components_p = curve_p.components.len();
    let tol = 2.0 * curve_p.cell_size;
    let mut pairing = Vec::new();
    for c in 0..curve_f.components.len() {
        let mut target: Option<usize> = None;
        for r in verdict.diagnostics.iter().filter(|r| r.component == c) {
            let zero = r.zero.expect("successful trajectory has a zero");
            match curve_p.nearest_component(&zero) {
                Some((w, dd)) if dd <= tol && target.map_or(true, |t| t == w) => target = Some(w),
                Some((w, dd)) if dd <= tol => {
                    let reason = format!("component {c} of f maps onto components {} and {w} of P", target.unwrap_or(w));
                    return IsotopyVerdict::stop(Failed, reason, verdict);
                }
                _ => {
                    let reason = format!("zero of P reached from component {c} is not on the extracted zero set of P");
                    return IsotopyVerdict::stop(Failed, reason, verdict);
                }
            }
        }
        pairing.push((c, target.expect("components are non-empty")));
    }
    let mut targets: Vec<usize> = pairing.iter().map(|p| p.1).collect();
    targets.sort_unstable();
    targets.dedup();
    if targets.len() != pairing.len() {
        verdict.pairing = pairing;
        return IsotopyVerdict::stop(Failed, "two components of f map to one component of P".into(), verdict);
    }
    verdict.pairing = pairing;
    verdict.status = Verified;
    verdict
}
