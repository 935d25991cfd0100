mod commands;
mod emit;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

const CSV_HELP: &str = "\
CSV output (--emit csv):
  gallery          quantity,measured,expected,relation,tolerance,provenance,status,note
  extrema find     kind,x_1,..,x_n,value,gradient_norm
  everything else  key,value  (one row per scalar of the JSON result, keys are
                   dotted paths such as result.lower or result.rows.0.status)

Exit codes: 0 success, 2 precondition error, 3 internal-consistency error,
64 usage error.";

#[derive(Debug, Parser)]
#[command(name = "remez", version, about = "Remez constants, rigidity bounds and level-set isotopy checks")]
#[command(after_help = CSV_HELP)]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Emit::Json)]
    pub emit: Emit,
    /// Write plot data (zero-set polylines, heat grid, points) as SVG.
    #[arg(long, global = true)]
    pub svg: Option<PathBuf>,
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Remez constants of finite sets, measurable sets and domain families.
    #[command(subcommand)]
    Remez(RemezCmd),
    /// Rigidity lower bounds.
    #[command(subcommand)]
    Rigidity(RigidityCmd),
    /// Critical points of a polynomial.
    #[command(subcommand)]
    Extrema(ExtremaCmd),
    /// Level-set isotopy verdicts for planar jets.
    #[command(subcommand)]
    Isotopy(IsotopyCmd),
    /// Worked examples with measured and expected values side by side.
    #[command(subcommand)]
    Gallery(GalleryCmd),
}

#[derive(Debug, Args)]
pub struct PointsArg {
    /// JSON file `{"n": .., "points": [[..], ..]}`.
    #[arg(long)]
    pub points: PathBuf,
}

#[derive(Debug, Args)]
pub struct DomainsArg {
    /// JSON file `{"n": .., "domains": [{"shape": "ball", "center": [..], "radius": ..}, ..]}`.
    #[arg(long)]
    pub domains: PathBuf,
}

#[derive(Debug, Args)]
pub struct PolyArg {
    /// JSON polynomial `{"n": .., "d": .., "coeffs": [..], "order": "grlex"}`.
    #[arg(long, conflicts_with = "roots", required_unless_present = "roots")]
    pub poly: Option<PathBuf>,
    /// Use the product polynomial Q(x_1)..Q(x_n) with Q having these roots.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub roots: Option<Vec<f64>>,
    /// Dimension for --roots.
    #[arg(long, default_value_t = 2)]
    pub n: usize,
}

#[derive(Debug, Subcommand)]
pub enum RemezCmd {
    /// Certified enclosure of R_d(Z) for a finite set.
    Finite {
        #[command(flatten)]
        points: PointsArg,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0.01)]
        grid_step: f64,
    },
    /// Chebyshev and simple bounds for a set of normalized measure lambda.
    MeasureBound {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
    },
    /// Upper bound from a disjoint domain family.
    TopologyBound {
        #[command(flatten)]
        domains: DomainsArg,
        #[arg(long)]
        d: usize,
    },
    /// Random polynomials against the topological bound.
    WitnessTest {
        #[command(flatten)]
        domains: DomainsArg,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum RigidityCmd {
    /// Lower bound from a finite Remez enclosure.
    FromRemez {
        #[command(flatten)]
        points: PointsArg,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0.01)]
        grid_step: f64,
    },
    /// Bound for `count` points on an interval.
    #[command(name = "points-1d")]
    Points1d {
        #[arg(long)]
        count: usize,
        #[arg(long)]
        d: usize,
    },
    /// Bound for the interior of the ball.
    Interior {
        #[arg(long)]
        d: usize,
    },
    /// Density bound, from a point file or from (n, rho, m).
    Density {
        #[arg(long, conflicts_with_all = ["n", "rho", "m"])]
        points: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        d: usize,
    },
    /// Divided-difference bound on the interval.
    #[command(name = "whitney-1d")]
    Whitney1d {
        #[command(flatten)]
        points: PointsArg,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 2001)]
        probe_grid: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum ExtremaCmd {
    /// Newton search for critical points inside the ball.
    Find {
        #[command(flatten)]
        poly: PolyArg,
        #[arg(long, default_value_t = 0.05)]
        seed_step: f64,
    },
    /// Critical-point count against the Bezout bound.
    Bezout {
        #[command(flatten)]
        poly: PolyArg,
        #[arg(long, default_value_t = 0.05)]
        seed_step: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum IsotopyCmd {
    /// Compare the zero set of a jet model with that of its Taylor part.
    Check {
        /// JSON jet model.
        #[arg(long)]
        jet: PathBuf,
        #[arg(long, default_value_t = 0.005)]
        cell: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum GalleryCmd {
    /// Three points (-1/2, 0), (0, h), (1/2, 0) at degree 1.
    Triangle {
        #[arg(long, default_value_t = 0.5)]
        h: f64,
    },
    /// Ellipse and rectangle family with the polynomial h^2 x^2 + y^2 - h^2/4.
    EllipseRectangle {
        #[arg(long, default_value_t = 0.2)]
        h: f64,
    },
    /// Product polynomial minus a small regular value.
    ProductPoly {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-0.4,0,0.4")]
        roots: Vec<f64>,
        #[arg(long, allow_hyphen_values = true)]
        zeta: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 64 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<remez_rigidity::Error>() {
        Some(err) if !err.is_precondition() => 3,
        _ => 2,
    }
}
