use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use remez_rigidity::extrema::{self, bezout_extrema_check, find_critical_points, product_polynomial};
use remez_rigidity::gallery::{self, GalleryReport, RowStatus};
use remez_rigidity::levelset::{extract_zero_set, isotopy_check, JetModel, PolyField};
use remez_rigidity::remez::{
    measure_remez_bound, remez_finite, topological_bound_witness_test, topological_remez_bound, DomainFamily, PointSet,
};
use remez_rigidity::{rigidity, MultiPoly};

use crate::emit::{self, Table};
use crate::svg::Plot;
use crate::{Cli, Command, Emit, ExtremaCmd, GalleryCmd, IsotopyCmd, PolyArg, RemezCmd, RigidityCmd};

pub struct Output {
    pub command: &'static str,
    pub params: Value,
    pub result: Value,
    pub table: Option<Table>,
    pub plot: Option<Plot>,
    /// Exit with the internal-consistency code after emitting.
    pub inconsistent: bool,
}

impl Output {
    fn new(command: &'static str, params: Value, result: impl Serialize) -> Result<Output> {
        Ok(Output {
            command,
            params,
            result: serde_json::to_value(result)?,
            table: None,
            plot: None,
            inconsistent: false,
        })
    }
}

pub fn run(cli: &Cli) -> Result<u8> {
    let out = dispatch(&cli.command, cli.seed)?;
    let text = match cli.emit {
        Emit::Json => emit::json(&out, cli.seed)?,
        Emit::Csv => emit::csv(&out, cli.seed)?,
    };
    print!("{text}");
    if let Some(path) = &cli.svg {
        match &out.plot {
            Some(p) => fs::write(path, p.render()).with_context(|| format!("writing {}", path.display()))?,
            None => eprintln!("warning: {} has no plot data, {} not written", out.command, path.display()),
        }
    }
    if out.inconsistent {
        eprintln!("error: report contains failing rows");
        return Ok(3);
    }
    Ok(0)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_poly(arg: &PolyArg) -> Result<MultiPoly> {
    match (&arg.poly, &arg.roots) {
        (Some(path), _) => read_json(path),
        (None, Some(roots)) => Ok(product_polynomial(arg.n, roots)?),
        (None, None) => anyhow::bail!(remez_rigidity::Error::InvalidInput("--poly or --roots is required".into())),
    }
}

fn poly_params(arg: &PolyArg) -> Value {
    match &arg.poly {
        Some(p) => json!({ "poly": p.display().to_string() }),
        None => json!({ "roots": arg.roots, "n": arg.n }),
    }
}

fn dispatch(cmd: &Command, seed: u64) -> Result<Output> {
    match cmd {
        Command::Remez(c) => remez(c, seed),
        Command::Rigidity(c) => rigidity_cmd(c),
        Command::Extrema(c) => extrema_cmd(c),
        Command::Isotopy(c) => isotopy(c),
        Command::Gallery(c) => gallery_cmd(c, seed),
    }
}

fn remez(cmd: &RemezCmd, seed: u64) -> Result<Output> {
    match cmd {
        RemezCmd::Finite { points, d, grid_step } => {
            let z: PointSet = read_json(&points.points)?;
            let r = remez_finite(&z, *d, *grid_step)?;
            let mut out = Output::new(
                "remez finite",
                json!({ "points": points.points.display().to_string(), "d": d, "grid_step": grid_step }),
                &r,
            )?;
            if z.n() == 2 {
                let mut plot = Plot::new();
                plot.heat(&r.witness, 96);
                plot.points(z.points());
                out.plot = Some(plot);
            }
            Ok(out)
        }
        RemezCmd::MeasureBound { lambda, n, d } => Output::new(
            "remez measure-bound",
            json!({ "lambda": lambda, "n": n, "d": d }),
            measure_remez_bound(*lambda, *n, *d)?,
        ),
        RemezCmd::TopologyBound { domains, d } => {
            let f: DomainFamily = read_json(&domains.domains)?;
            let b = topological_remez_bound(&f, *d)?;
            let mut out = Output::new(
                "remez topology-bound",
                json!({ "domains": domains.domains.display().to_string(), "d": d }),
                &b,
            )?;
            out.plot = Plot::domains(&f);
            Ok(out)
        }
        RemezCmd::WitnessTest { domains, d, trials } => {
            let f: DomainFamily = read_json(&domains.domains)?;
            let r = topological_bound_witness_test(&f, *d, *trials, seed)?;
            let mut out = Output::new(
                "remez witness-test",
                json!({ "domains": domains.domains.display().to_string(), "d": d, "trials": trials }),
                &r,
            )?;
            out.plot = Plot::domains(&f);
            Ok(out)
        }
    }
}

fn rigidity_cmd(cmd: &RigidityCmd) -> Result<Output> {
    match cmd {
        RigidityCmd::FromRemez { points, d, grid_step } => {
            let z: PointSet = read_json(&points.points)?;
            let r = remez_finite(&z, *d, *grid_step)?;
            Output::new(
                "rigidity from-remez",
                json!({ "points": points.points.display().to_string(), "d": d, "grid_step": grid_step }),
                rigidity::from_remez(&r)?,
            )
        }
        RigidityCmd::Points1d { count, d } => Output::new(
            "rigidity points-1d",
            json!({ "count": count, "d": d }),
            rigidity::points_1d(*count, *d)?,
        ),
        RigidityCmd::Interior { d } => Output::new("rigidity interior", json!({ "d": d }), rigidity::interior(*d)?),
        RigidityCmd::Density { points, n, rho, m, d } => {
            let bound = match (points, n, rho, m) {
                (Some(path), ..) => rigidity::density(&read_json::<PointSet>(path)?, *d)?,
                (None, Some(n), Some(rho), Some(m)) => rigidity::density_from_parts(*n, *d, *rho, *m)?,
                _ => anyhow::bail!(remez_rigidity::Error::InvalidInput(
                    "density needs --points or all of --n, --rho, --m".into()
                )),
            };
            let params = json!({
                "points": points.as_ref().map(|p| p.display().to_string()),
                "n": n, "rho": rho, "m": m, "d": d,
            });
            Output::new("rigidity density", params, bound)
        }
        RigidityCmd::Whitney1d { points, d, probe_grid } => {
            let z: PointSet = read_json(&points.points)?;
            Output::new(
                "rigidity whitney-1d",
                json!({ "points": points.points.display().to_string(), "d": d, "probe_grid": probe_grid }),
                rigidity::whitney_1d(&z, *d, *probe_grid)?,
            )
        }
    }
}

fn extrema_cmd(cmd: &ExtremaCmd) -> Result<Output> {
    let (name, arg, step) = match cmd {
        ExtremaCmd::Find { poly, seed_step } => ("extrema find", poly, *seed_step),
        ExtremaCmd::Bezout { poly, seed_step } => ("extrema bezout", poly, *seed_step),
    };
    let p = load_poly(arg)?;
    let points = find_critical_points(&p, step)?;
    let mut params = poly_params(arg);
    params["seed_step"] = json!(step);
    let mut out = match cmd {
        ExtremaCmd::Find { .. } => {
            let mut out = Output::new(name, params, json!({ "critical_points": &points }))?;
            out.table = Some(emit::critical_table(p.n(), &points));
            out
        }
        ExtremaCmd::Bezout { .. } => {
            let b = bezout_extrema_check(&p, &points);
            let inconsistent = !b.consistent;
            let mut out = Output::new(name, params, &b)?;
            out.inconsistent = inconsistent;
            out
        }
    };
    if p.n() == 2 {
        let mut plot = Plot::new();
        plot.heat(&p, 96);
        let locs: Vec<Vec<f64>> = points.iter().map(|c: &extrema::CriticalPoint| c.location.clone()).collect();
        plot.points(&locs);
        out.plot = Some(plot);
    }
    Ok(out)
}

fn isotopy(cmd: &IsotopyCmd) -> Result<Output> {
    let IsotopyCmd::Check { jet, cell } = cmd;
    let model: JetModel = read_json(jet)?;
    let verdict = isotopy_check(&model, *cell);
    let mut out = Output::new(
        "isotopy check",
        json!({ "jet": jet.display().to_string(), "cell": cell }),
        &verdict,
    )?;
    let mut plot = Plot::new();
    if let Ok(c) = extract_zero_set(model.field(), *cell) {
        plot.curves(&c.components, "#1f4e9c");
    }
    if let Ok(c) = PolyField::new(model.taylor()).and_then(|g| extract_zero_set(&g, *cell)) {
        plot.curves(&c.components, "#c0392b");
    }
    out.plot = Some(plot);
    Ok(out)
}

fn gallery_cmd(cmd: &GalleryCmd, seed: u64) -> Result<Output> {
    let (name, report, heat): (&'static str, GalleryReport, Option<MultiPoly>) = match cmd {
        GalleryCmd::Triangle { h } => ("gallery triangle", gallery::gallery_triangle(*h)?, None),
        GalleryCmd::EllipseRectangle { h } => (
            "gallery ellipse-rectangle",
            gallery::gallery_ellipse_rectangle(*h)?,
            Some(gallery::ellipse_polynomial(*h)?),
        ),
        GalleryCmd::ProductPoly { roots, zeta } => {
            let r = gallery::gallery_product_poly(2, roots, *zeta, seed)?;
            let z = r.row("zeta").map(|row| row.measured).unwrap_or(0.0);
            let p = product_polynomial(2, roots)?.sub(&MultiPoly::constant(2, z)?)?;
            ("gallery product-poly", r, Some(p))
        }
    };
    let mut out = Output::new(name, report.params.clone(), &report)?;
    out.table = Some(emit::gallery_table(&report));
    out.inconsistent = report.rows.iter().any(|r| r.status == RowStatus::Fail);
    let mut plot = Plot::new();
    if let Some(p) = &heat {
        plot.heat(p, 128);
    }
    plot.curves(&report.curves, "#1f4e9c");
    if let GalleryCmd::Triangle { h } = cmd {
        plot.points(&[vec![-0.5, 0.0], vec![0.0, *h], vec![0.5, 0.0]]);
    }
    out.plot = Some(plot);
    Ok(out)
}
