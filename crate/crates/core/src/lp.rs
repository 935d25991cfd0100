//! Dense primal simplex for linear programs over free variables with
//! two-sided row bounds:
//!
//! ```text
//! maximize  c . v
//! subject to  lower_i <= a_i . v <= upper_i
//! ```
//!
//! The method walks vertices of the feasible polyhedron keeping a working
//! set of `D` active constraints. Variables start out pinned by "free"
//! pseudo-constraints, which may leave the working set but never re-enter.
//! Entering and leaving choices follow Bland's smallest-index rule.

use crate::error::{Error, Result};
use crate::linalg::Lu;

const FEASIBILITY_TOL: f64 = 1e-8;
const PHASE_ONE_TOL: f64 = 1e-9;

/// `maximize objective . v` subject to two-sided row bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    dim: usize,
    objective: Vec<f64>,
    rows: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Result<LinearProgram> {
        if objective.is_empty() {
            return Err(Error::InvalidInput("empty objective".into()));
        }
        if objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite objective".into()));
        }
        Ok(LinearProgram {
            dim: objective.len(),
            objective,
            rows: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
        })
    }

    /// Adds `lower <= row . v <= upper`; either bound may be infinite.
    pub fn constrain(&mut self, row: &[f64], lower: f64, upper: f64) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: row.len(),
            });
        }
        if row.iter().any(|a| !a.is_finite()) || lower.is_nan() || upper.is_nan() {
            return Err(Error::InvalidInput("non-finite constraint row".into()));
        }
        if lower > upper || lower == f64::INFINITY || upper == f64::NEG_INFINITY {
            return Err(Error::InvalidInput(format!("empty bound interval [{lower}, {upper}]")));
        }
        self.rows.extend_from_slice(row);
        self.lower.push(lower);
        self.upper.push(upper);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn set_objective(&mut self, objective: Vec<f64>) -> Result<()> {
        if objective.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: objective.len(),
            });
        }
        self.objective = objective;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }

    pub fn bounds(&self, i: usize) -> (f64, f64) {
        (self.lower[i], self.upper[i])
    }

    /// Largest bound violation of `v`, relative to `max(1, |bound|)`.
    pub fn violation(&self, v: &[f64]) -> f64 {
        (0..self.len())
            .map(|i| {
                let s = dot(self.row(i), v);
                let lo = (self.lower[i] - s) / self.lower[i].abs().max(1.0);
                let hi = (s - self.upper[i]) / self.upper[i].abs().max(1.0);
                lo.max(hi).max(0.0)
            })
            .fold(0.0, f64::max)
    }

    pub fn is_feasible(&self, v: &[f64]) -> bool {
        self.violation(v) <= FEASIBILITY_TOL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum LpStatus {
    Optimal,
    Unbounded,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { optimum: f64, solution: Vec<f64> },
    /// `ray` is a feasible direction with positive objective.
    Unbounded { ray: Vec<f64> },
    Infeasible,
}

impl LpOutcome {
    pub fn status(&self) -> LpStatus {
        match self {
            LpOutcome::Optimal { .. } => LpStatus::Optimal,
            LpOutcome::Unbounded { .. } => LpStatus::Unbounded,
            LpOutcome::Infeasible => LpStatus::Infeasible,
        }
    }

    pub fn optimum(&self) -> Option<f64> {
        match self {
            LpOutcome::Optimal { optimum, .. } => Some(*optimum),
            _ => None,
        }
    }
}

/// Solves `lp` from scratch.
pub fn solve(lp: &LinearProgram) -> Result<LpOutcome> {
    match Simplex::new(lp)? {
        Some(mut s) => s.maximize(lp.objective()),
        None => Ok(LpOutcome::Infeasible),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Active {
    /// Variable `j` held at `value`.
    Free(usize, f64),
    Lower(usize),
    Upper(usize),
}

impl Active {
    /// Bland ordering key: pseudo-constraints first, then rows.
    fn key(&self, dim: usize) -> usize {
        match *self {
            Active::Free(j, _) => j,
            Active::Lower(i) | Active::Upper(i) => dim + i,
        }
    }
}

/// Simplex state over a fixed constraint set. After one solve the final
/// vertex and working set are kept, so later objectives start warm.
#[derive(Debug, Clone)]
pub struct Simplex<'a> {
    lp: &'a LinearProgram,
    point: Vec<f64>,
    working: Vec<Active>,
    lu: Lu,
    max_iterations: usize,
}

impl<'a> Simplex<'a> {
    /// Finds a feasible starting point, or `None` when the constraints are
    /// infeasible.
    pub fn new(lp: &'a LinearProgram) -> Result<Option<Simplex<'a>>> {
        let origin = vec![0.0; lp.dim];
        let start = if lp.is_feasible(&origin) {
            origin
        } else {
            match phase_one(lp)? {
                Some(v) => v,
                None => return Ok(None),
            }
        };
        Ok(Some(Simplex::at_point(lp, start)?))
    }

    fn at_point(lp: &'a LinearProgram, point: Vec<f64>) -> Result<Simplex<'a>> {
        let working: Vec<Active> = point.iter().enumerate().map(|(j, &x)| Active::Free(j, x)).collect();
        let mut s = Simplex {
            lp,
            point,
            working,
            lu: Lu::factor(&[1.0], 1)?,
            max_iterations: 50 * (lp.len() + lp.dim) + 1000,
        };
        s.refactor()?;
        Ok(s)
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    fn basis_row(&self, a: &Active) -> Vec<f64> {
        match *a {
            Active::Free(j, _) => {
                let mut e = vec![0.0; self.lp.dim];
                e[j] = 1.0;
                e
            }
            Active::Lower(i) | Active::Upper(i) => self.lp.row(i).to_vec(),
        }
    }

    fn basis_rhs(&self, a: &Active) -> f64 {
        match *a {
            Active::Free(_, x) => x,
            Active::Lower(i) => self.lp.lower[i],
            Active::Upper(i) => self.lp.upper[i],
        }
    }

    /// Refactors the working matrix and snaps the vertex onto it.
    fn refactor(&mut self) -> Result<()> {
        let d = self.lp.dim;
        let mut m = Vec::with_capacity(d * d);
        for a in &self.working {
            m.extend(self.basis_row(a));
        }
        self.lu = Lu::factor(&m, d)?;
        let rhs: Vec<f64> = self.working.iter().map(|a| self.basis_rhs(a)).collect();
        self.point = self.lu.solve(&rhs);
        Ok(())
    }

    /// Maximizes `objective` starting from the current vertex.
    pub fn maximize(&mut self, objective: &[f64]) -> Result<LpOutcome> {
        let d = self.lp.dim;
        if objective.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: objective.len(),
            });
        }
        let cscale = objective.iter().fold(1.0f64, |m, c| m.max(c.abs()));
        for _ in 0..self.max_iterations {
            let y = self.lu.solve_transpose(objective);
            let ytol = 1e-11 * cscale;
            // Entering choice: smallest key among improvable entries.
            let entering = self
                .working
                .iter()
                .enumerate()
                .filter(|(k, a)| match a {
                    Active::Free(..) => y[*k].abs() > ytol,
                    Active::Upper(_) => y[*k] < -ytol,
                    Active::Lower(_) => y[*k] > ytol,
                })
                .min_by_key(|(_, a)| a.key(d))
                .map(|(k, _)| k);
            let Some(k) = entering else {
                return self.finish(objective);
            };
            let sigma = y[k].signum();
            let mut e = vec![0.0; d];
            e[k] = sigma;
            let p = self.lu.solve(&e);
            let pnorm = p.iter().fold(0.0f64, |m, x| m.max(x.abs()));

            // Ratio test, ties broken by smallest row index.
            let mut best: Option<(f64, usize, bool)> = None;
            let consider = |best: &mut Option<(f64, usize, bool)>, step: f64, i: usize, upper: bool| {
                let step = step.max(0.0);
                let better = match best {
                    None => true,
                    Some((s, j, _)) => step < *s || (step == *s && i < *j),
                };
                if better {
                    *best = Some((step, i, upper));
                }
            };
            let in_working: Vec<Option<usize>> = {
                let mut w = vec![None; self.lp.len()];
                for (pos, a) in self.working.iter().enumerate() {
                    if let Active::Lower(i) | Active::Upper(i) = *a {
                        w[i] = Some(pos);
                    }
                }
                w
            };
            for i in 0..self.lp.len() {
                let (lo, hi) = (self.lp.lower[i], self.lp.upper[i]);
                if let Some(pos) = in_working[i] {
                    if pos == k && lo.is_finite() && hi.is_finite() {
                        // The released row may travel to its opposite bound.
                        let flip_to_upper = matches!(self.working[k], Active::Lower(_));
                        consider(&mut best, hi - lo, i, flip_to_upper);
                    }
                    continue;
                }
                let a = self.lp.row(i);
                let r = dot(a, &p);
                let rtol = 1e-11 * pnorm * a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                if r > rtol && hi.is_finite() {
                    consider(&mut best, (hi - dot(a, &self.point)) / r, i, true);
                } else if r < -rtol && lo.is_finite() {
                    consider(&mut best, (lo - dot(a, &self.point)) / r, i, false);
                }
            }
            let Some((_, i, upper)) = best else {
                return Ok(LpOutcome::Unbounded { ray: p });
            };
            self.working[k] = if upper { Active::Upper(i) } else { Active::Lower(i) };
            self.refactor()?;
        }
        Err(Error::Inconsistent(format!(
            "simplex iteration limit {} reached",
            self.max_iterations
        )))
    }

    fn finish(&self, objective: &[f64]) -> Result<LpOutcome> {
        let violation = self.lp.violation(&self.point);
        if violation > FEASIBILITY_TOL {
            return Err(Error::Inconsistent(format!(
                "simplex vertex violates constraints by {violation:e}"
            )));
        }
        Ok(LpOutcome::Optimal {
            optimum: dot(objective, &self.point),
            solution: self.point.clone(),
        })
    }
}

/// Finds a feasible point through an auxiliary homotopy variable `theta`:
/// row `i` becomes `a_i v - r_i theta` with bounds shifted by `r_i`, where
/// `r_i` is the bound the origin violates, so `(0, 0)` is feasible and
/// `theta = 1` recovers the original system.
fn phase_one(lp: &LinearProgram) -> Result<Option<Vec<f64>>> {
    let d = lp.dim;
    let mut objective = vec![0.0; d + 1];
    objective[d] = 1.0;
    let mut aux = LinearProgram::new(objective)?;
    let mut row = vec![0.0; d + 1];
    for i in 0..lp.len() {
        let (lo, hi) = lp.bounds(i);
        let r = if lo > 0.0 {
            lo
        } else if hi < 0.0 {
            hi
        } else {
            0.0
        };
        row[..d].copy_from_slice(lp.row(i));
        row[d] = -r;
        aux.constrain(&row, lo - r, hi - r)?;
    }
    row.iter_mut().for_each(|x| *x = 0.0);
    row[d] = 1.0;
    aux.constrain(&row, 0.0, 1.0)?;
    let mut s = Simplex::at_point(&aux, vec![0.0; d + 1])?;
    match s.maximize(aux.objective())? {
        LpOutcome::Optimal { optimum, solution } if optimum >= 1.0 - PHASE_ONE_TOL => {
            let v = solution[..d].to_vec();
            if lp.is_feasible(&v) {
                Ok(Some(v))
            } else {
                Err(Error::Inconsistent("phase one point is not feasible".into()))
            }
        }
        LpOutcome::Optimal { .. } => Ok(None),
        _ => Err(Error::Inconsistent("phase one problem is unbounded".into())),
    }
}
