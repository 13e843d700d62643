//! Command-line front-end: parse body/instance specs from JSON, run the
//! verifiers, approximations, and counterexample constructions, and emit
//! deterministic JSON/CSV reports.
//!
//! Exit codes: 0 = pass, 1 = verification failure (report still written),
//! 2 = usage or specification error.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::{json, Value};

use extremal_core::body::{build_product_body, ConvexBody, ProductStructure};
use extremal_core::closed_forms::ProductCompact;
use extremal_core::log_support::{h_of_body, LogPoint};
use extremal_core::product::{
    corollary_suite, lhs_exact, rhs_eval, verify_against_lhs, CorollarySpec, GridSpec,
    TheoremInstance,
};
use extremal_core::siciak::{bernstein_walsh_check, build_basis, convergence_sweep, ApproxConfig};
use extremal_core::{
    intro_counterexample, sublevel_nonconvexity, weighted_counterexample, Error as CoreError,
};

#[derive(Parser)]
#[command(
    name = "extremal",
    version,
    about = "Support functions, logarithmic supporting functions, and \
             extremal growth functions of product compacta"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON input specification (defaults to stdin where required)
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Output path (defaults to stdout)
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Report format
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Seed for all randomized sampling; fully determines the run
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Tolerance override for verification commands
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the supporting function phi_S at given directions
    Support,
    /// Evaluate the logarithmic supporting function H_S at complex points
    /// (limsup extension across vanishing coordinates)
    Hs,
    /// Build the product body of (T, S_1, ..., S_l)
    BuildProduct,
    /// Lower hull of a body: the smallest lower set containing it
    LowerHull,
    /// Verify the product formula on a grid (exact toric path)
    VerifyTheorem,
    /// Instantiate and verify one corollary (siciak, sum, pnorm, lowerhull)
    Corollary,
    /// Bergman-sum approximation of the extremal function at a point
    ApproxV {
        /// polynomial degree
        #[arg(long)]
        m: usize,
    },
    /// Convergence table of the approximation against the exact reference
    Sweep,
    /// The introductory counterexample to the naive product identification
    CounterexampleIntro {
        /// body parameter in (0, 1)
        #[arg(long)]
        a: f64,
        /// evaluation radius, >= 1
        #[arg(long = "R")]
        r: f64,
    },
    /// The weighted-case counterexample witness
    CounterexampleWeighted,
    /// Non-convexity witness for a sublevel set of H_S
    CounterexampleSublevel {
        /// sublevel threshold; defaults to the construction's own level
        #[arg(long)]
        t: Option<f64>,
    },
    /// Bernstein-Walsh inequality check over random polynomials
    BwCheck {
        /// polynomial degree
        #[arg(long)]
        m: usize,
        /// number of random polynomials
        #[arg(long, default_value_t = 500)]
        trials: usize,
    },
}

// ---------------------------------------------------------------------
// input schemas (documented under docs/)

#[derive(Deserialize)]
struct RawBody {
    dim: usize,
    generators: Vec<Vec<f64>>,
    #[serde(default)]
    label: Option<String>,
}

impl RawBody {
    fn build(self) -> Result<ConvexBody> {
        let body = ConvexBody::new(self.dim, self.generators)?;
        Ok(match self.label {
            Some(l) => body.with_label(l),
            None => body,
        })
    }
}

#[derive(Deserialize)]
struct SupportInput {
    body: RawBody,
    xi: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct HsInput {
    body: RawBody,
    /// complex points as [re, im] pairs per coordinate
    points: Vec<Vec<[f64; 2]>>,
}

#[derive(Deserialize)]
struct BodyInput {
    body: RawBody,
}

#[derive(Deserialize)]
struct GridInput {
    ranges: Vec<(f64, f64)>,
    counts: Vec<usize>,
}

impl GridInput {
    fn build(self) -> GridSpec {
        GridSpec {
            ranges: self.ranges,
            counts: self.counts,
            phases: 1,
        }
    }
}

#[derive(Deserialize)]
struct InstanceInput {
    t: RawBody,
    factors: Vec<RawBody>,
    compacts: Vec<ProductCompact>,
    #[serde(default)]
    weights: Option<Vec<f64>>,
    #[serde(default)]
    grid: Option<GridInput>,
    /// compare against the logarithmic supporting function of this body
    /// instead of the exact product-formula left side (mismatch demos)
    #[serde(default)]
    lhs_body: Option<RawBody>,
}

impl InstanceInput {
    fn build(self) -> Result<(TheoremInstance, Option<GridSpec>, Option<ConvexBody>)> {
        let t = self.t.build()?;
        let factors = self
            .factors
            .into_iter()
            .map(RawBody::build)
            .collect::<Result<Vec<_>>>()?;
        let ps = ProductStructure::new(t, factors)?;
        for c in &self.compacts {
            for f in &c.factors {
                f.validate()?;
            }
        }
        let inst = TheoremInstance::new(ps, self.compacts, self.weights)?;
        let grid = self.grid.map(GridInput::build);
        let lhs_body = self.lhs_body.map(RawBody::build).transpose()?;
        Ok((inst, grid, lhs_body))
    }
}

#[derive(Deserialize)]
struct ApproxInput {
    #[serde(flatten)]
    instance: InstanceInput,
    /// evaluation point, [re, im] per coordinate
    z: Vec<[f64; 2]>,
}

#[derive(Deserialize)]
struct SweepInput {
    #[serde(flatten)]
    instance: InstanceInput,
    ms: Vec<usize>,
}

#[derive(Deserialize)]
struct CorollaryInput {
    name: String,
    #[serde(default)]
    ell: Option<usize>,
    #[serde(default)]
    factors: Option<Vec<RawBody>>,
    #[serde(default)]
    p: Option<f64>,
    #[serde(default)]
    vertices: Option<usize>,
    #[serde(default)]
    body: Option<RawBody>,
    #[serde(default)]
    grid: Option<GridInput>,
}

#[derive(Deserialize)]
struct WeightedInput {
    t: RawBody,
    factors: Vec<RawBody>,
}

// ---------------------------------------------------------------------
// deterministic report formatting: every float with 17 significant digits

fn render_json(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        Value::Number(n) => {
            if let Some(u) = n.as_u64() {
                let _ = write!(out, "{u}");
            } else if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else {
                let _ = write!(out, "{:.16e}", n.as_f64().unwrap());
            }
        }
        Value::String(s) => {
            let _ = write!(out, "{}", Value::String(s.clone()));
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                render_json(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            out.push('{');
            for (i, (k, item)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}:", Value::String(k.clone()));
                render_json(item, out);
            }
            out.push('}');
        }
    }
}

fn csv_float(x: f64) -> String {
    format!("{x:.16e}")
}

enum Output {
    Json(Value),
    Csv(String),
}

fn to_value<T: serde::Serialize>(t: &T) -> Result<Value> {
    Ok(serde_json::to_value(t)?)
}

// ---------------------------------------------------------------------

fn read_input(path: &Option<PathBuf>) -> Result<String> {
    match path {
        Some(p) => {
            std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))
        }
        None => {
            use std::io::Read;
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s).context("reading stdin")?;
            Ok(s)
        }
    }
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    // serde_json errors carry line and column in their display form
    serde_json::from_str(text).map_err(|e| anyhow!("input does not match the schema: {e}"))
}

fn complex_points(raw: &[[f64; 2]]) -> Vec<Complex64> {
    raw.iter().map(|p| Complex64::new(p[0], p[1])).collect()
}

fn grid_value(grid: &GridSpec) -> Value {
    json!({ "ranges": grid.ranges, "counts": grid.counts })
}

fn default_grid(n: usize) -> GridSpec {
    GridSpec::uniform(n, -3.0, 3.0, 11)
}

fn require_json(format: Format, command: &str) -> Result<()> {
    if format == Format::Csv {
        bail!("{command} supports only --format json");
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(Output, bool)> {
    let tol = cli.tol.unwrap_or(1e-9);
    match &cli.command {
        Command::Support => {
            let input: SupportInput = parse(&read_input(&cli.input)?)?;
            let body = input.body.build()?;
            let values = input
                .xi
                .iter()
                .map(|xi| body.support(xi))
                .collect::<extremal_core::Result<Vec<_>>>()?;
            match cli.format {
                Format::Json => Ok((
                    Output::Json(json!({ "values": values })),
                    true,
                )),
                Format::Csv => {
                    let mut csv = String::new();
                    for (xi, v) in input.xi.iter().zip(&values) {
                        let mut row: Vec<String> = xi.iter().map(|&x| csv_float(x)).collect();
                        row.push(csv_float(*v));
                        let _ = writeln!(csv, "{}", row.join(","));
                    }
                    Ok((Output::Csv(csv), true))
                }
            }
        }
        Command::Hs => {
            require_json(cli.format, "hs")?;
            let input: HsInput = parse(&read_input(&cli.input)?)?;
            let body = input.body.build()?;
            let h = h_of_body(&body);
            let mut values = Vec::new();
            for p in &input.points {
                let z = complex_points(p);
                let v = h.eval_extended(&LogPoint::from_complex(&z))?;
                values.push(if v.is_finite() {
                    Value::from(v)
                } else {
                    Value::Null
                });
            }
            Ok((Output::Json(json!({ "values": values })), true))
        }
        Command::BuildProduct => {
            require_json(cli.format, "build-product")?;
            let input: WeightedInput = parse(&read_input(&cli.input)?)?;
            let ps = ProductStructure::new(
                input.t.build()?,
                input
                    .factors
                    .into_iter()
                    .map(RawBody::build)
                    .collect::<Result<Vec<_>>>()?,
            )?;
            let body = build_product_body(&ps).canonicalize();
            Ok((Output::Json(to_value(&body)?), true))
        }
        Command::LowerHull => {
            require_json(cli.format, "lower-hull")?;
            let input: BodyInput = parse(&read_input(&cli.input)?)?;
            let hull = input.body.build()?.lower_hull()?;
            Ok((Output::Json(to_value(&hull)?), true))
        }
        Command::VerifyTheorem => {
            let input: InstanceInput = parse(&read_input(&cli.input)?)?;
            let (inst, grid, lhs_body) = input.build()?;
            let grid = grid.unwrap_or_else(|| default_grid(inst.total_dim()));
            let lhs = match &lhs_body {
                Some(b) => h_of_body(b).add_constant(inst.product_weight()?),
                None => lhs_exact(&inst)?,
            };
            let report = verify_against_lhs(&inst, &lhs, &grid, tol)?;
            let pass = report.pass;
            match cli.format {
                Format::Json => {
                    let mut v = to_value(&report)?;
                    v["grid"] = grid_value(&grid);
                    Ok((Output::Json(v), pass))
                }
                Format::Csv => {
                    let mut csv = String::new();
                    grid.for_each(|xi| {
                        let lhs_v = lhs.eval(xi)?;
                        let z: Vec<Complex64> =
                            xi.iter().map(|&x| Complex64::new(x.exp(), 0.0)).collect();
                        let rhs_v = rhs_eval(&inst, &z)?;
                        let mut row: Vec<String> = xi.iter().map(|&x| csv_float(x)).collect();
                        row.push(csv_float(lhs_v));
                        row.push(csv_float(rhs_v));
                        row.push(csv_float(lhs_v - rhs_v));
                        let _ = writeln!(csv, "{}", row.join(","));
                        Ok(())
                    })?;
                    Ok((Output::Csv(csv), pass))
                }
            }
        }
        Command::Corollary => {
            require_json(cli.format, "corollary")?;
            let input: CorollaryInput = parse(&read_input(&cli.input)?)?;
            let spec = match input.name.as_str() {
                "siciak" => CorollarySpec::Siciak {
                    ell: input.ell.unwrap_or(2),
                },
                "sum" => CorollarySpec::Sum {
                    factors: input
                        .factors
                        .ok_or_else(|| anyhow!("sum corollary needs \"factors\""))?
                        .into_iter()
                        .map(RawBody::build)
                        .collect::<Result<Vec<_>>>()?,
                },
                "pnorm" => CorollarySpec::PNorm {
                    p: input.p.unwrap_or(2.0),
                    vertices: input.vertices.unwrap_or(64),
                },
                "lowerhull" => CorollarySpec::LowerHull {
                    body: input
                        .body
                        .ok_or_else(|| anyhow!("lowerhull corollary needs \"body\""))?
                        .build()?,
                },
                other => bail!("unknown corollary {other:?} (siciak, sum, pnorm, lowerhull)"),
            };
            let dim = match &spec {
                CorollarySpec::Siciak { ell } => *ell,
                CorollarySpec::Sum { factors } => factors.iter().map(|f| f.dim).sum(),
                CorollarySpec::PNorm { .. } => 2,
                CorollarySpec::LowerHull { body } => body.dim,
            };
            let grid = input
                .grid
                .map(GridInput::build)
                .unwrap_or_else(|| default_grid(dim));
            let report = corollary_suite(&spec, &grid)?;
            let pass = report.pass;
            let mut v = to_value(&report)?;
            v["grid"] = grid_value(&grid);
            Ok((Output::Json(v), pass))
        }
        Command::ApproxV { m } => {
            require_json(cli.format, "approx-v")?;
            let input: ApproxInput = parse(&read_input(&cli.input)?)?;
            let (inst, _, _) = input.instance.build()?;
            let basis = build_basis(&ApproxConfig::new(*m), &inst)?;
            let z = complex_points(&input.z);
            let value = basis.eval(&z)?;
            Ok((
                Output::Json(json!({
                    "m": m,
                    "lattice_count": basis.len(),
                    "gram_error": basis.gram_error,
                    "value": value,
                })),
                true,
            ))
        }
        Command::Sweep => {
            let input: SweepInput = parse(&read_input(&cli.input)?)?;
            let (inst, grid, _) = input.instance.build()?;
            let grid = grid.unwrap_or_else(|| default_grid(inst.total_dim()));
            let rows = convergence_sweep(&inst, &input.ms, &grid)?;
            match cli.format {
                Format::Json => Ok((
                    Output::Json(json!({ "rows": to_value(&rows)?, "grid": grid_value(&grid) })),
                    true,
                )),
                Format::Csv => {
                    let mut csv = String::new();
                    for row in &rows {
                        let mut cols = vec![row.m.to_string(), csv_float(row.max_error)];
                        cols.extend(row.argmax.iter().map(|&x| csv_float(x)));
                        let _ = writeln!(csv, "{}", cols.join(","));
                    }
                    Ok((Output::Csv(csv), true))
                }
            }
        }
        Command::CounterexampleIntro { a, r } => {
            require_json(cli.format, "counterexample-intro")?;
            let report = intro_counterexample(*a, *r)?;
            let pass = report.pass;
            Ok((Output::Json(to_value(&report)?), pass))
        }
        Command::CounterexampleWeighted => {
            require_json(cli.format, "counterexample-weighted")?;
            let input: WeightedInput = parse(&read_input(&cli.input)?)?;
            let ps = ProductStructure::new(
                input.t.build()?,
                input
                    .factors
                    .into_iter()
                    .map(RawBody::build)
                    .collect::<Result<Vec<_>>>()?,
            )?;
            match weighted_counterexample(&ps) {
                Ok(witness) => {
                    let pass = witness.gap > 0.0;
                    Ok((Output::Json(to_value(&witness)?), pass))
                }
                Err(CoreError::NoWitness(msg)) => Ok((
                    Output::Json(json!({ "pass": false, "no_witness": msg })),
                    false,
                )),
                Err(e) => Err(e.into()),
            }
        }
        Command::CounterexampleSublevel { t } => {
            require_json(cli.format, "counterexample-sublevel")?;
            let input: BodyInput = parse(&read_input(&cli.input)?)?;
            let witness = sublevel_nonconvexity(&input.body.build()?, *t)?;
            let pass = witness.pass;
            Ok((Output::Json(to_value(&witness)?), pass))
        }
        Command::BwCheck { m, trials } => {
            require_json(cli.format, "bw-check")?;
            let input: InstanceInput = parse(&read_input(&cli.input)?)?;
            let (inst, _, _) = input.build()?;
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
            let report = bernstein_walsh_check(&inst, *m, *trials, &mut rng)?;
            let pass = report.violations == 0;
            Ok((Output::Json(to_value(&report)?), pass))
        }
    }
}

fn write_output(cli: &Cli, output: Output) -> Result<()> {
    let text = match output {
        Output::Json(v) => {
            let mut s = String::new();
            render_json(&v, &mut s);
            s.push('\n');
            s
        }
        Output::Csv(s) => s,
    };
    match &cli.output {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((output, pass)) => {
            if let Err(e) = write_output(&cli, output) {
                eprintln!("error: {e:#}");
                return ExitCode::from(2);
            }
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
