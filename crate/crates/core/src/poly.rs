//! Dense multivariate polynomials in the monomial basis, Chebyshev
//! polynomials, and certified sup-norm enclosures over the unit ball.
//!
//! Coefficients are stored in graded-lexicographic order: monomials are
//! grouped by total degree (ascending) and, inside a degree, sorted by
//! exponent vector in descending lexicographic order. For `n = 2, d = 2`
//! that is `[1, x, y, x^2, xy, y^2]`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 6;
pub const MAX_DEGREE: usize = 24;

/// `binom(n + d, n)`: the number of monomials of degree at most `d` in `n`
/// variables.
pub fn monomial_count(n: usize, d: usize) -> usize {
    let mut c: u128 = 1;
    for i in 1..=n as u128 {
        c = c * (d as u128 + i) / i;
    }
    c as usize
}

/// Exponent table for one `(n, d)` pair.
#[derive(Debug)]
pub struct Basis {
    n: usize,
    d: usize,
    exps: Vec<u8>,
    index: HashMap<Vec<u8>, usize>,
}

impl Basis {
    fn build(n: usize, d: usize) -> Basis {
        let mut exps = Vec::with_capacity(monomial_count(n, d) * n);
        let mut current = vec![0u8; n];
        for deg in 0..=d {
            push_degree(&mut exps, &mut current, 0, deg);
        }
        let index = exps
            .chunks(n.max(1))
            .enumerate()
            .map(|(i, e)| (e.to_vec(), i))
            .collect();
        Basis { n, d, exps, index }
    }

    /// Shared table for `(n, d)`.
    pub fn get(n: usize, d: usize) -> Arc<Basis> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Basis>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("basis cache poisoned");
        guard
            .entry((n, d))
            .or_insert_with(|| Arc::new(Basis::build(n, d)))
            .clone()
    }

    pub fn len(&self) -> usize {
        self.exps.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn exponents(&self, i: usize) -> &[u8] {
        &self.exps[i * self.n..(i + 1) * self.n]
    }

    pub fn index_of(&self, exps: &[u8]) -> Option<usize> {
        self.index.get(exps).copied()
    }

    /// Values of every monomial at `x`, in basis order.
    pub fn monomial_values(&self, x: &[f64]) -> Vec<f64> {
        let pw = power_table(x, self.d);
        (0..self.len())
            .map(|i| {
                self.exponents(i)
                    .iter()
                    .enumerate()
                    .map(|(v, &e)| pw[v][e as usize])
                    .product()
            })
            .collect()
    }
}

fn push_degree(out: &mut Vec<u8>, current: &mut [u8], var: usize, remaining: usize) {
    if var + 1 == current.len() {
        current[var] = remaining as u8;
        out.extend_from_slice(current);
        return;
    }
    for e in (0..=remaining).rev() {
        current[var] = e as u8;
        push_degree(out, current, var + 1, remaining - e);
    }
}

fn power_table(x: &[f64], d: usize) -> [[f64; MAX_DEGREE + 1]; MAX_DIM] {
    let mut pw = [[0.0; MAX_DEGREE + 1]; MAX_DIM];
    for (v, &xv) in x.iter().enumerate() {
        pw[v][0] = 1.0;
        for k in 1..=d {
            pw[v][k] = pw[v][k - 1] * xv;
        }
    }
    pw
}

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Real polynomial in `n` variables of degree at most `d`.
#[derive(Clone, Serialize, Deserialize)]
#[serde(try_from = "RawPoly", into = "RawPoly")]
pub struct MultiPoly {
    basis: Arc<Basis>,
    coeffs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawPoly {
    n: usize,
    d: usize,
    coeffs: Vec<f64>,
    #[serde(default = "grlex")]
    order: String,
}

fn grlex() -> String {
    "grlex".to_string()
}

impl TryFrom<RawPoly> for MultiPoly {
    type Error = Error;

    fn try_from(raw: RawPoly) -> Result<Self> {
        if raw.order != "grlex" {
            return Err(Error::InvalidInput(format!(
                "unsupported monomial order {:?}",
                raw.order
            )));
        }
        MultiPoly::from_coeffs(raw.n, raw.d, raw.coeffs)
    }
}

impl From<MultiPoly> for RawPoly {
    fn from(p: MultiPoly) -> Self {
        RawPoly {
            n: p.n(),
            d: p.degree(),
            coeffs: p.coeffs,
            order: grlex(),
        }
    }
}

impl std::fmt::Debug for MultiPoly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MultiPoly")
            .field("n", &self.n())
            .field("d", &self.degree())
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl PartialEq for MultiPoly {
    fn eq(&self, other: &Self) -> bool {
        self.n() == other.n() && self.degree() == other.degree() && self.coeffs == other.coeffs
    }
}

fn check_shape(n: usize, d: usize) -> Result<()> {
    if n == 0 || n > MAX_DIM {
        return Err(Error::InvalidInput(format!(
            "dimension must be in 1..={MAX_DIM}, got {n}"
        )));
    }
    if d > MAX_DEGREE {
        return Err(Error::InvalidInput(format!(
            "degree must be at most {MAX_DEGREE}, got {d}"
        )));
    }
    Ok(())
}

impl MultiPoly {
    pub fn zeros(n: usize, d: usize) -> Result<MultiPoly> {
        check_shape(n, d)?;
        let basis = Basis::get(n, d);
        let coeffs = vec![0.0; basis.len()];
        Ok(MultiPoly { basis, coeffs })
    }

    pub fn from_coeffs(n: usize, d: usize, coeffs: Vec<f64>) -> Result<MultiPoly> {
        check_shape(n, d)?;
        let expected = monomial_count(n, d);
        if coeffs.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: coeffs.len(),
            });
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite coefficient".into()));
        }
        Ok(MultiPoly {
            basis: Basis::get(n, d),
            coeffs,
        })
    }

    /// Builds a polynomial from `(exponents, coefficient)` terms; repeated
    /// monomials accumulate.
    pub fn from_terms(n: usize, d: usize, terms: &[(&[u8], f64)]) -> Result<MultiPoly> {
        let mut p = MultiPoly::zeros(n, d)?;
        for (exps, c) in terms {
            let idx = p.basis.index_of(exps).ok_or_else(|| {
                Error::InvalidInput(format!("monomial {exps:?} outside (n={n}, d={d})"))
            })?;
            p.coeffs[idx] += c;
        }
        Ok(p)
    }

    /// Coefficients drawn independently from `U(-1, 1)`.
    pub fn random<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<MultiPoly> {
        let mut p = MultiPoly::zeros(n, d)?;
        p.coeffs.iter_mut().for_each(|c| *c = rng.gen_range(-1.0..1.0));
        Ok(p)
    }

    pub fn constant(n: usize, value: f64) -> Result<MultiPoly> {
        MultiPoly::from_coeffs(n, 0, vec![value])
    }

    /// The coordinate function `x_var`.
    pub fn variable(n: usize, var: usize) -> Result<MultiPoly> {
        let mut exps = vec![0u8; n];
        exps[var] = 1;
        MultiPoly::from_terms(n, 1, &[(&exps, 1.0)])
    }

    /// Univariate polynomial `sum c_k t^k` placed in variable `var` of an
    /// `n`-variate ring.
    pub fn univariate(n: usize, var: usize, coeffs: &[f64]) -> Result<MultiPoly> {
        let d = coeffs.len().saturating_sub(1);
        let mut p = MultiPoly::zeros(n, d)?;
        let mut exps = vec![0u8; n];
        for (k, &c) in coeffs.iter().enumerate() {
            exps[var] = k as u8;
            let idx = p.basis.index_of(&exps).expect("monomial in range");
            p.coeffs[idx] = c;
        }
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.basis.n
    }

    /// Degree bound `d` of the coefficient space (not necessarily the
    /// exact degree).
    pub fn degree(&self) -> usize {
        self.basis.d
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    /// Largest total degree with a nonzero coefficient (0 for the zero
    /// polynomial).
    pub fn exact_degree(&self) -> usize {
        (0..self.coeffs.len())
            .rev()
            .find(|&i| self.coeffs[i] != 0.0)
            .map(|i| self.basis.exponents(i).iter().map(|&e| e as usize).sum())
            .unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: x.len(),
            });
        }
        Ok(self.value(x))
    }

    /// Evaluation without the dimension check. Panics if `x` is too short.
    pub fn value(&self, x: &[f64]) -> f64 {
        assert!(x.len() >= self.n(), "point has too few coordinates");
        let pw = power_table(x, self.degree());
        let basis = &self.basis;
        compensated_sum(self.coeffs.iter().enumerate().filter(|(_, c)| **c != 0.0).map(
            |(i, &c)| {
                let m: f64 = basis
                    .exponents(i)
                    .iter()
                    .enumerate()
                    .map(|(v, &e)| pw[v][e as usize])
                    .product();
                c * m
            },
        ))
    }

    /// Exact partial derivative in variable `var`.
    pub fn partial(&self, var: usize) -> MultiPoly {
        let n = self.n();
        let d = self.degree();
        let mut out = MultiPoly::zeros(n, d.saturating_sub(1)).expect("valid shape");
        if d == 0 {
            return out;
        }
        let mut target = vec![0u8; n];
        for (i, &c) in self.coeffs.iter().enumerate() {
            let e = self.basis.exponents(i);
            if e[var] == 0 || c == 0.0 {
                continue;
            }
            target.copy_from_slice(e);
            target[var] -= 1;
            let j = out.basis.index_of(&target).expect("lower monomial exists");
            out.coeffs[j] += c * e[var] as f64;
        }
        out
    }

    pub fn gradient(&self) -> Vec<MultiPoly> {
        (0..self.n()).map(|v| self.partial(v)).collect()
    }

    /// Second partials, `hessian()[i][j] = d^2 P / dx_i dx_j`.
    pub fn hessian(&self) -> Vec<Vec<MultiPoly>> {
        self.gradient()
            .iter()
            .map(|g| (0..self.n()).map(|j| g.partial(j)).collect())
            .collect()
    }

    /// All order-`k` partial derivatives over ordered index tuples
    /// `(i_1, ..., i_k)`, `n^k` polynomials in lexicographic tuple order.
    pub fn derivative_tensor(&self, k: usize) -> Vec<MultiPoly> {
        let mut layer = vec![self.clone()];
        for _ in 0..k {
            layer = layer
                .iter()
                .flat_map(|p| (0..self.n()).map(move |v| p.partial(v)))
                .collect();
        }
        layer
    }

    /// Sum of absolute coefficients. Bounds `sup |P|` on the unit ball,
    /// where every monomial has modulus at most one.
    pub fn coefficient_l1(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }

    /// Rigorous upper bound on `M_k(P)` from coefficients: the sum over all
    /// ordered order-`k` partials of their coefficient l1 norms.
    pub fn derivative_norm_coefficient_bound(&self, k: usize) -> f64 {
        self.derivative_tensor(k).iter().map(|p| p.coefficient_l1()).sum()
    }

    /// Same polynomial in a coefficient space of larger degree bound.
    pub fn embed(&self, d: usize) -> Result<MultiPoly> {
        if d < self.degree() {
            return Err(Error::InvalidInput(format!(
                "cannot embed degree {} into degree {d}",
                self.degree()
            )));
        }
        let mut out = MultiPoly::zeros(self.n(), d)?;
        for (i, &c) in self.coeffs.iter().enumerate() {
            let j = out.basis.index_of(self.basis.exponents(i)).expect("monomial exists");
            out.coeffs[j] = c;
        }
        Ok(out)
    }

    /// Drops every monomial of total degree above `d`.
    pub fn truncate(&self, d: usize) -> MultiPoly {
        let d = d.min(self.degree());
        let mut out = MultiPoly::zeros(self.n(), d).expect("valid shape");
        let len = out.coeffs.len();
        out.coeffs.copy_from_slice(&self.coeffs[..len]);
        out
    }

    /// Part of total degree strictly above `d`, kept in the original space.
    pub fn tail(&self, d: usize) -> MultiPoly {
        let mut out = self.clone();
        let keep = monomial_count(self.n(), d.min(self.degree()));
        out.coeffs[..keep].iter_mut().for_each(|c| *c = 0.0);
        out
    }

    pub fn scaled(&self, factor: f64) -> MultiPoly {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= factor);
        out
    }

    pub fn add(&self, other: &MultiPoly) -> Result<MultiPoly> {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &MultiPoly) -> Result<MultiPoly> {
        self.combine(other, -1.0)
    }

    fn combine(&self, other: &MultiPoly, sign: f64) -> Result<MultiPoly> {
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: other.n(),
            });
        }
        let d = self.degree().max(other.degree());
        let mut out = self.embed(d)?;
        let o = other.embed(d)?;
        out.coeffs
            .iter_mut()
            .zip(&o.coeffs)
            .for_each(|(a, b)| *a += sign * b);
        Ok(out)
    }

    pub fn mul(&self, other: &MultiPoly) -> Result<MultiPoly> {
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: other.n(),
            });
        }
        let n = self.n();
        let mut out = MultiPoly::zeros(n, self.degree() + other.degree())?;
        let mut e = vec![0u8; n];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                if b == 0.0 {
                    continue;
                }
                let ei = self.basis.exponents(i);
                let ej = other.basis.exponents(j);
                for v in 0..n {
                    e[v] = ei[v] + ej[v];
                }
                let k = out.basis.index_of(&e).expect("product monomial exists");
                out.coeffs[k] += a * b;
            }
        }
        Ok(out)
    }
}

/// Sum of `|d^k P / dx_t|` over all ordered tuples `t`, evaluated at `x`
/// from a precomputed derivative tensor.
pub fn derivative_norm_at(tensor: &[MultiPoly], x: &[f64]) -> f64 {
    tensor.iter().map(|p| p.value(x).abs()).sum()
}

/// Chebyshev polynomial of the first kind, `T_d(t)`.
///
/// Uses `cos(d arccos t)` on `[-1, 1]` and the three-term recurrence
/// outside it.
pub fn chebyshev_t(d: u32, t: f64) -> f64 {
    if t.abs() <= 1.0 {
        return (d as f64 * t.acos()).cos();
    }
    let (mut prev, mut cur) = (1.0, t);
    if d == 0 {
        return prev;
    }
    for _ in 1..d {
        let next = 2.0 * t * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `T_d` as a univariate `MultiPoly` (n = 1).
pub fn chebyshev_polynomial(d: usize) -> Result<MultiPoly> {
    let mut prev = vec![1.0];
    let mut cur = vec![0.0, 1.0];
    if d == 0 {
        return MultiPoly::univariate(1, 0, &prev);
    }
    for _ in 1..d {
        let mut next = vec![0.0; cur.len() + 1];
        for (k, &c) in cur.iter().enumerate() {
            next[k + 1] += 2.0 * c;
        }
        for (k, &c) in prev.iter().enumerate() {
            next[k] -= c;
        }
        prev = cur;
        cur = next;
    }
    MultiPoly::univariate(1, 0, &cur)
}

/// Iterated Kellogg constant `prod_{i<k} n (d - i)^2`, an explicit bound
/// with `M_k(P) <= C * M_0(P)` for every degree-`d` polynomial on the unit
/// ball. `M_k` sums over ordered derivative tuples; the bound also covers
/// the unordered convention.
pub fn markov_derivative_bound(n: usize, d: usize, k: usize) -> f64 {
    (0..k)
        .map(|i| {
            let r = d.saturating_sub(i) as f64;
            n as f64 * r * r
        })
        .product()
}

/// `sqrt(n)`: converts Kellogg's Euclidean gradient bound into the covering
/// radius of a cubic grid of unit step.
pub fn grid_constant(n: usize) -> f64 {
    (n as f64).sqrt()
}

/// Exclusive upper limit on a certifiable grid step for degree `d`.
pub fn max_admissible_step(n: usize, d: usize) -> f64 {
    if d == 0 {
        f64::INFINITY
    } else {
        1.0 / (grid_constant(n) * (d * d) as f64)
    }
}

/// Factor converting a grid maximum into a certified ball maximum.
pub fn inflation(n: usize, d: usize, step: f64) -> Result<f64> {
    let max_step = max_admissible_step(n, d);
    if !(step > 0.0 && step < max_step) {
        return Err(Error::GridStepTooLarge { step, max_step });
    }
    Ok(1.0 / (1.0 - step * grid_constant(n) * (d * d) as f64))
}

/// Sample points of the closed unit ball: every point of `step * Z^n`
/// inside the ball, followed by the projections onto the sphere of grid
/// points on the outermost shell.
#[derive(Debug, Clone)]
pub struct BallGrid {
    n: usize,
    step: f64,
    coords: Vec<f64>,
    interior_len: usize,
}

impl BallGrid {
    pub fn new(n: usize, step: f64) -> Result<BallGrid> {
        check_shape(n, 0)?;
        if !(step > 0.0 && step <= 1.0) {
            return Err(Error::InvalidInput(format!("grid step must be in (0, 1], got {step}")));
        }
        let k = (1.0 / step + 1e-9).floor() as i64;
        let inside = |idx: &[i64]| {
            idx.iter().map(|&i| (i as f64 * step).powi(2)).sum::<f64>() <= 1.0 + 1e-12
        };
        let mut coords = Vec::new();
        let mut shell = Vec::new();
        let mut idx = vec![-k; n];
        let mut nb = vec![0i64; n];
        loop {
            if inside(&idx) {
                coords.extend(idx.iter().map(|&i| i as f64 * step));
                let on_shell = (0..n).any(|v| {
                    [-1, 1].iter().any(|s| {
                        nb.copy_from_slice(&idx);
                        nb[v] += s;
                        !inside(&nb)
                    })
                });
                let norm = idx.iter().map(|&i| (i as f64 * step).powi(2)).sum::<f64>().sqrt();
                if on_shell && norm > 0.0 && (norm - 1.0).abs() > 1e-12 {
                    shell.extend(idx.iter().map(|&i| i as f64 * step / norm));
                }
            }
            // Odometer increment.
            let mut v = 0;
            loop {
                if v == n {
                    let interior_len = coords.len() / n;
                    coords.extend(shell);
                    return Ok(BallGrid {
                        n,
                        step,
                        coords,
                        interior_len,
                    });
                }
                idx[v] += 1;
                if idx[v] > k {
                    idx[v] = -k;
                    v += 1;
                } else {
                    break;
                }
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Number of lattice points; the remaining points lie on the sphere.
    pub fn interior_len(&self) -> usize {
        self.interior_len
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.n..(i + 1) * self.n]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks(self.n)
    }

    /// Maximum of `|P|` over the grid with its index; ties resolve to the
    /// lowest index.
    pub fn max_abs(&self, p: &MultiPoly) -> (f64, usize) {
        self.max_by(|x| p.value(x).abs())
    }

    pub fn max_by<F>(&self, f: F) -> (f64, usize)
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        const CHUNK: usize = 4096;
        self.coords
            .par_chunks(CHUNK * self.n)
            .enumerate()
            .map(|(c, chunk)| {
                chunk
                    .chunks(self.n)
                    .enumerate()
                    .map(|(i, x)| (f(x), c * CHUNK + i))
                    .fold((f64::NEG_INFINITY, usize::MAX), pick_max)
            })
            .reduce(|| (f64::NEG_INFINITY, usize::MAX), pick_max)
    }
}

/// Deterministic max with lowest-index tie-break.
pub(crate) fn pick_max(a: (f64, usize), b: (f64, usize)) -> (f64, usize) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

/// Monomial values of a fixed degree at every point of a grid, so that
/// many polynomials of that degree can be evaluated as dot products.
#[derive(Debug, Clone)]
pub struct EvaluationMatrix {
    dim: usize,
    rows: Vec<f64>,
}

impl EvaluationMatrix {
    pub fn new<'a>(n: usize, d: usize, points: impl Iterator<Item = &'a [f64]>) -> EvaluationMatrix {
        let basis = Basis::get(n, d);
        let mut rows = Vec::new();
        for x in points {
            rows.extend(basis.monomial_values(x));
        }
        EvaluationMatrix {
            dim: basis.len(),
            rows,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }

    pub fn value(&self, i: usize, coeffs: &[f64]) -> f64 {
        self.row(i).iter().zip(coeffs).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs(&self, coeffs: &[f64]) -> (f64, usize) {
        (0..self.len())
            .map(|i| (self.value(i, coeffs).abs(), i))
            .fold((f64::NEG_INFINITY, usize::MAX), pick_max)
    }
}

/// Grid maximum of `|P|` over the closed ball together with the certified
/// upper bound on the true supremum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupNormEnclosure {
    pub grid_max: f64,
    pub certified_max: f64,
    pub grid_step: f64,
    pub inflation: f64,
    pub argmax: Vec<f64>,
}

/// Certified enclosure of `sup_{B^n} |P|`.
///
/// Every point of the ball lies within `step * sqrt(n)` of a lattice point
/// inside the ball (round each coordinate toward zero), and Kellogg's
/// inequality bounds the gradient norm by `d^2 sup |P|`, so
/// `sup |P| <= grid_max / (1 - step sqrt(n) d^2)`.
pub fn sup_norm_ball(p: &MultiPoly, grid_step: f64) -> Result<SupNormEnclosure> {
    let factor = if p.degree() == 0 {
        if !(grid_step > 0.0) {
            return Err(Error::GridStepTooLarge {
                step: grid_step,
                max_step: f64::INFINITY,
            });
        }
        1.0
    } else {
        inflation(p.n(), p.degree(), grid_step)?
    };
    let grid = BallGrid::new(p.n(), grid_step.min(1.0))?;
    Ok(sup_norm_on_grid(p, &grid, factor))
}

pub(crate) fn sup_norm_on_grid(p: &MultiPoly, grid: &BallGrid, factor: f64) -> SupNormEnclosure {
    let (grid_max, idx) = grid.max_abs(p);
    SupNormEnclosure {
        grid_max,
        certified_max: grid_max * factor,
        grid_step: grid.step(),
        inflation: factor,
        argmax: grid.point(idx).to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle_minus_one() -> MultiPoly {
        MultiPoly::from_terms(2, 2, &[(&[0, 0], -1.0), (&[2, 0], 1.0), (&[0, 2], 1.0)]).unwrap()
    }

    fn ellipse(h: f64) -> MultiPoly {
        MultiPoly::from_terms(
            2,
            2,
            &[(&[2, 0], h * h), (&[0, 2], 1.0), (&[0, 0], -h * h / 4.0)],
        )
        .unwrap()
    }

    #[test]
    fn grlex_order_two_variables() {
        let b = Basis::get(2, 2);
        let exps: Vec<Vec<u8>> = (0..b.len()).map(|i| b.exponents(i).to_vec()).collect();
        assert_eq!(
            exps,
            vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]
        );
        assert_eq!(monomial_count(3, 4), 35);
    }

    #[test]
    fn eval_constant_term() {
        assert_eq!(circle_minus_one().eval(&[0.0, 0.0]).unwrap(), -1.0);
    }

    #[test]
    fn eval_ellipse_point() {
        let h = 0.2;
        assert!(ellipse(h).eval(&[0.0, h / 2.0]).unwrap().abs() < 1e-15);
    }

    #[test]
    fn eval_rejects_wrong_dimension() {
        assert_eq!(
            circle_minus_one().eval(&[0.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        );
    }

    #[test]
    fn coefficient_length_enforced() {
        assert!(MultiPoly::from_coeffs(2, 2, vec![0.0; 5]).is_err());
    }

    #[test]
    fn gradient_term_wise() {
        let g = circle_minus_one().gradient();
        let two_x = MultiPoly::from_terms(2, 1, &[(&[1, 0], 2.0)]).unwrap();
        let two_y = MultiPoly::from_terms(2, 1, &[(&[0, 1], 2.0)]).unwrap();
        assert_eq!(g, vec![two_x, two_y]);

        let h = 0.3;
        let g = ellipse(h).gradient();
        assert_eq!(g[0].coeffs(), &[0.0, 2.0 * h * h, 0.0]);
        assert_eq!(g[1].coeffs(), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let g = MultiPoly::constant(3, 4.0).unwrap().gradient();
        assert_eq!(g.len(), 3);
        assert!(g.iter().all(|p| p.coeffs() == [0.0]));
    }

    #[test]
    fn chebyshev_values() {
        assert_eq!(chebyshev_t(2, 3.0), 17.0);
        assert_eq!(chebyshev_t(1, 7.0), 7.0);
        assert!((chebyshev_t(5, 0.3) - (5.0 * 0.3f64.acos()).cos()).abs() < 1e-12);
        assert_eq!(chebyshev_t(0, -4.0), 1.0);
        let t3 = chebyshev_polynomial(3).unwrap();
        assert_eq!(t3.coeffs(), &[0.0, -3.0, 0.0, 4.0]);
        for &t in &[-2.5, -0.7, 0.1, 1.0, 3.0] {
            assert!((t3.value(&[t]) - chebyshev_t(3, t)).abs() < 1e-11 * t3.value(&[t]).abs().max(1.0));
        }
    }

    #[test]
    fn markov_constants() {
        assert_eq!(markov_derivative_bound(2, 2, 2), 16.0);
        assert_eq!(markov_derivative_bound(5, 3, 0), 1.0);
        assert_eq!(markov_derivative_bound(1, 1, 1), 1.0);
        assert_eq!(markov_derivative_bound(2, 2, 3), 0.0);
    }

    #[test]
    fn sup_norm_linear() {
        let p = MultiPoly::variable(1, 0).unwrap();
        let e = sup_norm_ball(&p, 0.01).unwrap();
        assert!(e.certified_max >= 1.0 && e.certified_max <= 1.02, "{e:?}");
        assert_eq!(e.grid_max, 1.0);
    }

    #[test]
    fn sup_norm_chebyshev_cubic() {
        let p = chebyshev_polynomial(3).unwrap();
        let e = sup_norm_ball(&p, 0.01).unwrap();
        assert!(e.certified_max >= 1.0 && e.certified_max <= 1.1, "{e:?}");
    }

    #[test]
    fn sup_norm_ellipse_against_dense_grid() {
        let p = ellipse(0.2);
        let e = sup_norm_ball(&p, 0.005).unwrap();
        // Brute-force oracle on a 1e-4 lattice restricted to the segment
        // x = 0 and the unit circle, where the maximum of h^2 x^2 + y^2 lives.
        let mut oracle = 0.0f64;
        for i in 0..=20000 {
            let y = -1.0 + i as f64 * 1e-4;
            oracle = oracle.max(p.value(&[0.0, y]).abs());
            let th = i as f64 * std::f64::consts::TAU / 20000.0;
            oracle = oracle.max(p.value(&[th.cos(), th.sin()]).abs());
        }
        assert!((oracle - 0.99).abs() < 1e-12);
        assert!(e.certified_max >= oracle && oracle >= e.grid_max - 1e-15);
        assert!(e.certified_max >= 0.99 && e.certified_max <= 1.05, "{e:?}");
    }

    #[test]
    fn sup_norm_rejects_coarse_grid() {
        let p = circle_minus_one();
        let max = max_admissible_step(2, 2);
        match sup_norm_ball(&p, 0.2) {
            Err(Error::GridStepTooLarge { max_step, .. }) => assert_eq!(max_step, max),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ball_grid_covers_sphere() {
        let g = BallGrid::new(2, 0.1).unwrap();
        assert!(g.len() > g.interior_len());
        for x in g.points() {
            assert!(x[0] * x[0] + x[1] * x[1] <= 1.0 + 1e-12);
        }
        for i in g.interior_len()..g.len() {
            let x = g.point(i);
            assert!(((x[0] * x[0] + x[1] * x[1]).sqrt() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mul_and_truncate() {
        let x = MultiPoly::variable(2, 0).unwrap();
        let y = MultiPoly::variable(2, 1).unwrap();
        let xy = x.mul(&y).unwrap();
        assert_eq!(xy.degree(), 2);
        assert_eq!(xy.value(&[0.5, 3.0]), 1.5);
        let s = xy.add(&x).unwrap();
        assert_eq!(s.truncate(1).value(&[0.5, 3.0]), 0.5);
        assert_eq!(s.tail(1).value(&[0.5, 3.0]), 1.5);
        assert_eq!(s.exact_degree(), 2);
    }

    #[test]
    fn json_shape() {
        let p = circle_minus_one();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"n":2,"d":2,"coeffs":[-1.0,0.0,0.0,1.0,0.0,1.0],"order":"grlex"}"#);
        let back: MultiPoly = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<MultiPoly>(r#"{"n":2,"d":2,"coeffs":[1.0]}"#).is_err());
    }
}
