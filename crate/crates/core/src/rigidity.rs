//! Lower bounds on the rigidity constant `RG_d(Z)`: the smallest
//! `M_{d+1}(f)` over smooth `f` with `sup |f| = 1` vanishing on `Z`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::remez::{topological_remez_bound, DomainFamily, PointSet, RemezReport};

/// Largest degree accepted by the factorial-based formulas.
pub const MAX_RIGIDITY_DEGREE: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RigiditySource {
    FromRemez,
    OneDimPoints,
    Interior,
    Density,
    Topological,
    DividedDiff,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidityBound {
    pub degree: usize,
    pub lower: f64,
    pub source: RigiditySource,
    /// True when `lower` is an order-of-magnitude estimate rather than a
    /// proven bound.
    #[serde(default)]
    pub estimate: bool,
    /// Why the bound degenerated to 0, when it did.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub inputs: serde_json::Value,
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn check_degree(d: usize) -> Result<()> {
    if d > MAX_RIGIDITY_DEGREE {
        Err(Error::InvalidInput(format!(
            "degree {d} exceeds the supported maximum {MAX_RIGIDITY_DEGREE}"
        )))
    } else {
        Ok(())
    }
}

/// `(d + 1)! / 2`.
fn half_factorial(d: usize) -> f64 {
    factorial(d + 1) / 2.0
}

/// `((d + 1)! / 2) / R_d(Z)` using the certified upper end of the
/// enclosure; 0 for non-norming sets.
pub fn from_remez(report: &RemezReport) -> Result<RigidityBound> {
    let d = report.degree;
    check_degree(d)?;
    let lower = if report.upper.is_finite() {
        half_factorial(d) / report.upper
    } else {
        0.0
    };
    Ok(RigidityBound {
        degree: d,
        lower,
        source: RigiditySource::FromRemez,
        estimate: false,
        note: (!report.norming).then(|| "set is not norming; rigidity constant is 0".to_string()),
        inputs: json!({
            "remez_upper": if report.upper.is_finite() { json!(report.upper) } else { json!("inf") },
            "method": report.method,
        }),
    })
}

/// `(d + 1)! / 2^(d + 1)` for at least `d + 1` points on a line, else 0.
pub fn points_1d(count: usize, d: usize) -> Result<RigidityBound> {
    check_degree(d)?;
    let enough = count > d;
    Ok(RigidityBound {
        degree: d,
        lower: if enough { interior_value(d) } else { 0.0 },
        source: RigiditySource::OneDimPoints,
        estimate: false,
        note: (!enough).then(|| format!("{count} points do not exceed degree {d}")),
        inputs: json!({ "count": count }),
    })
}

fn interior_value(d: usize) -> f64 {
    factorial(d + 1) / 2f64.powi(d as i32 + 1)
}

/// Bound for sets with non-empty interior (asserted by the caller).
pub fn interior(d: usize) -> Result<RigidityBound> {
    check_degree(d)?;
    Ok(RigidityBound {
        degree: d,
        lower: interior_value(d),
        source: RigiditySource::Interior,
        estimate: false,
        note: None,
        inputs: json!({}),
    })
}

/// Density bound from the point count `m` and separation `rho`. Returns
/// `None` when `m <= (4d)^n (1/rho)^(n-1)`.
pub fn density_value(n: usize, d: usize, rho: f64, m: usize) -> Option<f64> {
    let m = m as f64;
    let four_d_n = (4.0 * d as f64).powi(n as i32);
    let threshold = four_d_n * (1.0 / rho).powi(n as i32 - 1);
    if !(rho.is_finite() && rho > 0.0 && m > threshold) {
        return None;
    }
    let base = (m * rho.powi(n as i32) - four_d_n * rho) / (4.0 * n as f64);
    Some(half_factorial(d) * base.powi(d as i32))
}

/// Density bound for a concrete point set.
pub fn density(z: &PointSet, d: usize) -> Result<RigidityBound> {
    density_from_parts(z.n(), d, z.rho(), z.len())
}

pub fn density_from_parts(n: usize, d: usize, rho: f64, m: usize) -> Result<RigidityBound> {
    check_degree(d)?;
    let value = density_value(n, d, rho, m);
    Ok(RigidityBound {
        degree: d,
        lower: value.unwrap_or(0.0),
        source: RigiditySource::Density,
        estimate: false,
        note: value.is_none().then(|| {
            format!(
                "inapplicable: need M > (4d)^n (1/rho)^(n-1) = {:.6e}",
                (4.0 * d as f64).powi(n as i32) * (1.0 / rho).powi(n as i32 - 1)
            )
        }),
        inputs: json!({ "n": n, "rho": if rho.is_finite() { json!(rho) } else { json!("inf") }, "count": m }),
    })
}

/// `((d + 1)! / 2) (lambda_{j_d} / 4n)^d` for a disjoint domain family.
pub fn topological(f: &DomainFamily, d: usize) -> Result<RigidityBound> {
    check_degree(d)?;
    let b = topological_remez_bound(f, d)?;
    let lower = half_factorial(d) * (b.lambda / (4.0 * f.n() as f64)).powi(d as i32);
    Ok(RigidityBound {
        degree: d,
        lower,
        source: RigiditySource::Topological,
        estimate: false,
        note: None,
        inputs: json!({ "n": f.n(), "j_d": b.j_d, "lambda": b.lambda, "domains": f.len() }),
    })
}

/// Leading coefficient of the Newton interpolant through
/// `(nodes[i], values[i])`.
pub fn divided_difference(nodes: &[f64], values: &[f64]) -> Result<f64> {
    if nodes.is_empty() || nodes.len() != values.len() {
        return Err(Error::InvalidInput(format!(
            "need matching non-empty nodes and values, got {} and {}",
            nodes.len(),
            values.len()
        )));
    }
    for i in 0..nodes.len() {
        for j in (i + 1)..nodes.len() {
            if nodes[i] == nodes[j] {
                return Err(Error::InvalidInput(format!("duplicate node {}", nodes[i])));
            }
        }
    }
    let mut table = values.to_vec();
    for level in 1..nodes.len() {
        for i in (level..nodes.len()).rev() {
            table[i] = (table[i] - table[i - 1]) / (nodes[i] - nodes[i - level]);
        }
    }
    Ok(table[nodes.len() - 1])
}

/// `1 / prod |z0 - z_i|`, the divided difference of data 1 at `z0` and 0
/// at the `z_i`, up to sign.
pub fn spike_difference(z0: f64, zeros: &[f64]) -> f64 {
    1.0 / zeros.iter().map(|z| (z0 - z).abs()).product::<f64>()
}

/// Infimum over probe points `z0` and `(d + 1)`-subsets of `Z` of the spike
/// divided difference. For fixed `z0` the infimum picks the `d + 1` points
/// farthest from `z0`.
pub fn whitney_1d(z: &PointSet, d: usize, probe_grid: usize) -> Result<RigidityBound> {
    if z.n() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: z.n(),
        });
    }
    if z.len() <= d {
        return Err(Error::InvalidInput(format!(
            "need at least {} points for degree {d}, have {}",
            d + 1,
            z.len()
        )));
    }
    if probe_grid < 10 {
        return Err(Error::InvalidInput("probe grid must have at least 10 points".into()));
    }
    let zs: Vec<f64> = z.points().iter().map(|p| p[0]).collect();
    let (best, at) = (0..probe_grid)
        .into_par_iter()
        .map(|k| {
            let z0 = -1.0 + 2.0 * k as f64 / (probe_grid - 1) as f64;
            if zs.iter().any(|&s| (s - z0).abs() < 1e-12) {
                return (f64::INFINITY, k);
            }
            let mut dist: Vec<f64> = zs.iter().map(|s| (z0 - s).abs()).collect();
            dist.sort_by(|a, b| b.total_cmp(a));
            (1.0 / dist[..=d].iter().product::<f64>(), k)
        })
        .reduce(
            || (f64::INFINITY, usize::MAX),
            |a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
        );
    let z0 = -1.0 + 2.0 * at as f64 / (probe_grid - 1) as f64;
    Ok(RigidityBound {
        degree: d,
        lower: best,
        source: RigiditySource::DividedDiff,
        estimate: true,
        note: Some("order-of-magnitude estimate of the rigidity constant".into()),
        inputs: json!({ "points": z.len(), "probe_grid": probe_grid, "argmin_z0": z0 }),
    })
}
