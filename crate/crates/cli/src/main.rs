use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use curvcheck::expr::Bindings;
use curvcheck::harness::{check_info, named_tensor, quantity_order, run_suite, RunOptions, SuiteReport, Verdict, QUANTITIES};
use curvcheck::models::{catalog, catalog_info, parse_spec, MetricSpec};
use curvcheck::static_tensors::StaticContext;
use curvcheck::tensor::{frame_components, orthonormal_frame, TensorValue};
use serde_json::json;

#[derive(Parser)]
#[command(name = "curvcheck", version, about = "Check curvature identities of Riemannian metrics at sampled points")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the identity suite on a metric.
    Check(CheckArgs),
    /// Print one tensor at one point.
    Eval(EvalArgs),
    /// List catalog entries or identity checks.
    List(ListArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Frame {
    /// Coordinate components.
    Coord,
    /// Gram–Schmidt on the coordinate basis.
    Orthonormal,
    /// Orthonormal frame starting with the unit normal to the level set of the potential.
    Normal,
}

#[derive(Clone, Copy, ValueEnum)]
enum ListWhat {
    Catalog,
    Checks,
    Tensors,
}

#[derive(clap::Args)]
struct SpecArgs {
    /// `catalog:<name>`, `file:<path>`, or a path to a spec file.
    source: String,
    /// Parameter override, repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
}

#[derive(clap::Args)]
struct CheckArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// Comma-separated globs over check ids.
    #[arg(long)]
    checks: Option<String>,
    #[arg(long, default_value_t = 100)]
    points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Jet order for every check (2..=8); default is each check's own demand.
    #[arg(long)]
    order: Option<usize>,
    /// Relative tolerance for every check; default is each check's own.
    #[arg(long)]
    tol: Option<f64>,
    /// Skip the perturbed-potential negative controls.
    #[arg(long)]
    no_controls: bool,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker thread cap.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(clap::Args)]
struct EvalArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// Tensor name; see `list tensors`.
    #[arg(long)]
    tensor: String,
    /// Comma-separated coordinates; default is the center of the domain.
    #[arg(long, allow_hyphen_values = true)]
    point: Option<String>,
    #[arg(long, value_enum, default_value_t = Frame::Coord)]
    frame: Frame,
    #[arg(long)]
    order: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(clap::Args)]
struct ListArgs {
    #[arg(value_enum, default_value_t = ListWhat::Checks)]
    what: ListWhat,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

/// Input or configuration problem; exit code 2.
struct ConfigError(String);

impl<E: std::fmt::Display> From<E> for ConfigError {
    fn from(e: E) -> Self {
        ConfigError(e.to_string())
    }
}

type CliResult<T> = Result<T, ConfigError>;

fn parse_params(raw: &[String]) -> CliResult<Bindings> {
    let mut b = Bindings::new();
    for p in raw {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("--param expects KEY=VALUE, got \"{p}\"")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| ConfigError(format!("--param {k}: \"{v}\" is not a number")))?;
        b.insert(k.trim().to_string(), v);
    }
    Ok(b)
}

fn load_spec(args: &SpecArgs) -> CliResult<MetricSpec> {
    let params = parse_params(&args.params)?;
    if let Some(name) = args.source.strip_prefix("catalog:") {
        return Ok(catalog(name, &params)?.spec);
    }
    let path = args.source.strip_prefix("file:").unwrap_or(&args.source);
    let text = fs::read_to_string(path).map_err(|e| ConfigError(format!("{path}: {e}")))?;
    let spec = parse_spec(&text).map_err(|e| ConfigError(format!("{path}: {e}")))?;
    let spec = spec.with_params(&params)?;
    spec.validate().map_err(|e| ConfigError(format!("{path}: {e}")))?;
    Ok(spec)
}

fn check_order(order: Option<usize>) -> CliResult<()> {
    match order {
        Some(k) if !(2..=curvcheck::jet::MAX_ORDER).contains(&k) => {
            Err(ConfigError(format!("--order must lie in 2..={}", curvcheck::jet::MAX_ORDER)))
        }
        _ => Ok(()),
    }
}

fn emit(text: &str, output: Option<&PathBuf>) -> CliResult<()> {
    match output {
        Some(p) => fs::write(p, text).map_err(|e| ConfigError(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn report_table(r: &SuiteReport) -> String {
    let mut s = String::new();
    s.push_str(&format!("# {}\n# {}\n", r.schema, r.note));
    s.push_str(&format!("spec: {} (dim {})", r.spec.name, r.spec.dim));
    if let Some(p) = &r.spec.potential {
        s.push_str(&format!(", {p}"));
    }
    s.push_str(&format!("\npoints: {}, seed: {}\n\n", r.options.points, r.options.seed));
    s.push_str(&format!("{:<28} {:<13} {:>10} {:>9}  {}\n", "check", "verdict", "max rel", "points", "note"));
    for c in &r.results {
        let rel = if c.verdict == Verdict::Skipped {
            "-".to_string()
        } else {
            format!("{:.2e}", c.max_rel_residual)
        };
        let pts = format!("{}/{}", c.points_evaluated, c.points_requested);
        s.push_str(&format!(
            "{:<28} {:<13} {:>10} {:>9}  {}\n",
            c.check,
            c.verdict.name(),
            rel,
            pts,
            c.reason.as_deref().unwrap_or("")
        ));
    }
    if !r.negative_controls.is_empty() {
        s.push_str("\nnegative controls (potential replaced):\n");
        for c in &r.negative_controls {
            s.push_str(&format!(
                "  {:<26} max rel {:.2e} (needs >= {:.0e}) {}\n",
                c.check,
                c.max_rel_residual,
                c.required,
                if c.failed_as_expected { "failed as expected" } else { "DID NOT FAIL" }
            ));
        }
    }
    s.push_str(&format!(
        "\n{} pass, {} vacuous, {} fail, {} skipped: {}\n",
        r.passed,
        r.vacuous,
        r.failed,
        r.skipped,
        r.verdict.name().to_uppercase()
    ));
    s
}

fn cmd_check(args: CheckArgs) -> CliResult<ExitCode> {
    if args.points == 0 {
        return Err(ConfigError("--points must be at least 1".into()));
    }
    if let Some(t) = args.tol {
        if t.is_nan() || t <= 0.0 {
            return Err(ConfigError("--tol must be positive".into()));
        }
    }
    check_order(args.order)?;
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let spec = load_spec(&args.spec)?;
    let options = RunOptions {
        points: args.points,
        seed: args.seed,
        order: args.order,
        tolerance: args.tol,
        filter: args.checks.clone(),
        controls: !args.no_controls,
    };
    let report = run_suite(&spec, &options);
    if report.results.is_empty() {
        return Err(ConfigError(format!("no check matches \"{}\"", args.checks.unwrap_or_default())));
    }
    let text = match args.format {
        Format::Table => report_table(&report),
        Format::Json => serde_json::to_string_pretty(&report)? + "\n",
    };
    emit(&text, args.output.as_ref())?;
    Ok(if report.success() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

/// Components as nested arrays, one level per slot.
fn nested(t: &TensorValue) -> serde_json::Value {
    fn go(c: &[f64], dim: usize, depth: usize) -> serde_json::Value {
        if depth == 0 {
            return json!(c[0]);
        }
        let stride = c.len() / dim;
        serde_json::Value::Array((0..dim).map(|i| go(&c[i * stride..(i + 1) * stride], dim, depth - 1)).collect())
    }
    go(t.components(), t.dim(), t.valence())
}

fn cmd_eval(args: EvalArgs) -> CliResult<ExitCode> {
    let spec = load_spec(&args.spec)?;
    check_order(args.order)?;
    let order = args.order.unwrap_or(quantity_order(&args.tensor)?.max(2));
    let point: Vec<f64> = match &args.point {
        Some(p) => p
            .split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|_| ConfigError(format!("--point: \"{x}\" is not a number"))))
            .collect::<CliResult<_>>()?,
        None => spec.center(),
    };
    let ctx = spec.context(&point, order)?;
    let t = named_tensor(&ctx, &args.tensor)?;
    let m = ctx.metric_values();
    let (frame_name, shown) = match args.frame {
        Frame::Coord => ("coord", t),
        Frame::Orthonormal => ("orthonormal", frame_components(&t, &ctx.orthonormal_frame(), &m)?),
        Frame::Normal => {
            let sc = StaticContext::new(&ctx)?;
            let frame = orthonormal_frame(&m.g, Some(&[sc.normal()?.to_vec()]));
            ("normal", frame_components(&t, &frame, &m)?)
        }
    };
    let text = match args.format {
        Format::Json => {
            let v = json!({
                "spec": spec.name,
                "tensor": args.tensor,
                "point": point,
                "frame": frame_name,
                "dim": shown.dim(),
                "variance": shown.variance(),
                "components": nested(&shown),
            });
            serde_json::to_string_pretty(&v)? + "\n"
        }
        Format::Table => {
            let mut s = format!("{} at {:?} on {} ({} frame)\n", args.tensor, point, spec.name, frame_name);
            let n = shown.dim();
            let k = shown.valence();
            for (flat, v) in shown.components().iter().enumerate() {
                let mut idx = vec![0; k];
                let mut r = flat;
                for slot in (0..k).rev() {
                    idx[slot] = r % n;
                    r /= n;
                }
                let label: Vec<String> = idx.iter().map(|i| (i + 1).to_string()).collect();
                s.push_str(&format!("  [{}] {:+.12e}\n", label.join(","), v));
            }
            s
        }
    };
    emit(&text, None)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_list(args: ListArgs) -> CliResult<ExitCode> {
    let text = match (args.what, args.format) {
        (ListWhat::Catalog, Format::Json) => serde_json::to_string_pretty(&catalog_info())? + "\n",
        (ListWhat::Catalog, Format::Table) => {
            let mut s = String::new();
            for c in catalog_info() {
                let params: Vec<String> = c.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
                s.push_str(&format!("{:<24} {:<18} {}\n", c.name, params.join(" "), c.description));
            }
            s
        }
        (ListWhat::Checks, Format::Json) => serde_json::to_string_pretty(&check_info())? + "\n",
        (ListWhat::Checks, Format::Table) => {
            let mut s = String::new();
            for c in check_info() {
                let mut gates = Vec::new();
                if c.requires.min_dim > 2 {
                    gates.push(format!("n >= {}", c.requires.min_dim));
                }
                if c.requires.potential {
                    gates.push("potential".to_string());
                }
                if c.requires.constant_scalar {
                    gates.push("constant s".to_string());
                }
                for t in c.requires.tags {
                    gates.push(t.name().to_string());
                }
                s.push_str(&format!("{:<28} order {}  [{}]\n    {}\n", c.id, c.order, gates.join(", "), c.formula));
            }
            s
        }
        (ListWhat::Tensors, Format::Json) => {
            let v: Vec<_> = QUANTITIES
                .iter()
                .map(|(n, o, d)| json!({"name": n, "order": o, "description": d}))
                .collect();
            serde_json::to_string_pretty(&v)? + "\n"
        }
        (ListWhat::Tensors, Format::Table) => QUANTITIES
            .iter()
            .map(|(n, o, d)| format!("{n:<24} order {o}  {d}\n"))
            .collect(),
    };
    emit(&text, None)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check(a) => cmd_check(a),
        Command::Eval(a) => cmd_eval(a),
        Command::List(a) => cmd_list(a),
    };
    match result {
        Ok(code) => code,
        Err(ConfigError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
