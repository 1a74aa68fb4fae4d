//! Command-line front end: a thin shell over the library calls.
//!
//! Exit codes: 0 on success, 1 on input/processing errors, 2 on usage
//! errors.

use std::error::Error;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::budget::{compression_summary, Budgeted};
use crate::field::{Gamma, Grid, DEFAULT_GRID_RESOLUTION};
use crate::fitter::{candidate_loss, candidate_points, fit_with_target, FitConfig, FitTarget};
use crate::matcher::{abstract_sketch, PrimitiveSketch, DEFAULT_KAPPA};
use crate::primitives::{primitive_set, PrimitiveId};
use crate::sketch::{normalize_stroke, parse_ndjson, parse_stroke3_json, Sketch};
use crate::stats::usage_stats;
use crate::svg::{render_primitive_svg, render_sketch_svg, SvgStyle};
use crate::sw::sw_abstract;

/// Version tag of the records file written by `abstract`.
pub const RECORDS_SCHEMA_VERSION: u32 = 1;

/// On-disk container for abstraction results.
#[derive(Debug, Serialize, Deserialize)]
pub struct RecordsFile {
    pub schema_version: u32,
    pub sketches: Vec<PrimitiveSketch>,
}

type BoxError = Box<dyn Error + Send + Sync>;
type CliResult = Result<(), BoxError>;

#[derive(Parser, Debug)]
#[command(name = "primsketch", version, about = "Abstract vector sketches with drawing primitives")]
struct Cli {
    /// Worker threads (default: $PRIMSKETCH_JOBS, then all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Re-draw every stroke as its best-fitting primitive
    Abstract(AbstractArgs),
    /// Render sketches or abstraction records as SVG files
    Render(RenderArgs),
    /// Message accounting at given budget fractions
    Budget(BudgetArgs),
    /// Primitive-usage statistics over abstraction records
    Stats(StatsArgs),
    /// Dump fields and per-candidate losses for one stroke
    FitDebug(FitDebugArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    Pmn,
    Sw,
}

#[derive(Args, Debug)]
struct FitFlags {
    /// Lattice steps per rotation angle in the coarse search
    #[arg(long)]
    coarse_steps: Option<usize>,
    /// Cap on accepted refinement iterations per candidate
    #[arg(long)]
    refine_iters: Option<usize>,
    /// How many coarse candidates get refined
    #[arg(long)]
    top_k: Option<usize>,
    /// JSON file with FitConfig overrides
    #[arg(long)]
    config: Option<PathBuf>,
}

impl FitFlags {
    fn build(&self) -> Result<FitConfig, BoxError> {
        let mut cfg = match &self.config {
            Some(path) => serde_json::from_reader(BufReader::new(File::open(path)?))?,
            None => FitConfig::default(),
        };
        if let Some(v) = self.coarse_steps {
            cfg.coarse_theta_steps = v;
        }
        if let Some(v) = self.refine_iters {
            cfg.max_refine_iters = v;
        }
        if let Some(v) = self.top_k {
            cfg.refine_top_k = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct AbstractArgs {
    /// Input sketches (NDJSON with a "drawing" field per line)
    #[arg(long)]
    input: PathBuf,
    /// Treat the input as a JSON array of stroke-3 [dx, dy, lift] rows
    #[arg(long)]
    stroke3: bool,
    /// Records JSON output path
    #[arg(long)]
    out: PathBuf,
    /// Directory for per-sketch SVG renderings
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Grid resolution per axis
    #[arg(long, default_value_t = DEFAULT_GRID_RESOLUTION)]
    grid: usize,
    /// Distance-transform smoothing factor
    #[arg(long, default_value_t = 6.0)]
    gamma: f64,
    /// Compatibility softmax temperature
    #[arg(long, default_value_t = DEFAULT_KAPPA)]
    kappa: f64,
    #[arg(long, value_enum, default_value_t = Method::Pmn)]
    method: Method,
    /// Run report JSON output path
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    fit: FitFlags,
}

#[derive(Args, Debug)]
struct RenderArgs {
    /// Input sketches (NDJSON)
    #[arg(long, required_unless_present = "records")]
    input: Option<PathBuf>,
    /// Abstraction records JSON
    #[arg(long, required_unless_present = "input")]
    records: Option<PathBuf>,
    /// Output directory for SVG files
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct BudgetArgs {
    /// Input sketches (NDJSON)
    #[arg(long)]
    input: PathBuf,
    /// Abstraction records JSON for the same sketches
    #[arg(long)]
    records: Option<PathBuf>,
    /// Comma-separated budget fractions in (0, 1]
    #[arg(long, default_value = "0.1,0.2,0.3", value_parser = parse_fractions)]
    fractions: Fractions,
}

#[derive(Clone, Debug)]
struct Fractions(Vec<f64>);

fn parse_fractions(s: &str) -> Result<Fractions, String> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let f: f64 = part
            .trim()
            .parse()
            .map_err(|_| format!("invalid fraction {part:?}"))?;
        if !(f.is_finite() && f > 0.0 && f <= 1.0) {
            return Err(format!("fraction {f} outside (0, 1]"));
        }
        out.push(f);
    }
    if out.is_empty() {
        return Err("no fractions given".into());
    }
    Ok(Fractions(out))
}

#[derive(Args, Debug)]
struct StatsArgs {
    /// Abstraction records JSON
    #[arg(long)]
    records: PathBuf,
    /// Stats JSON output (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV mirror of the usage table
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FitDebugArgs {
    /// Input sketches (NDJSON)
    #[arg(long)]
    input: PathBuf,
    /// Sketch index within the input
    #[arg(long, default_value_t = 0)]
    sketch: usize,
    /// Stroke index within the sketch
    #[arg(long, default_value_t = 0)]
    stroke: usize,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_GRID_RESOLUTION)]
    grid: usize,
    #[arg(long, default_value_t = 6.0)]
    gamma: f64,
    #[command(flatten)]
    fit: FitFlags,
}

/// Parses and runs the command line; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let pool = match thread_pool(cli.jobs) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let outcome = pool.install(|| match cli.command {
        Command::Abstract(args) => cmd_abstract(args),
        Command::Render(args) => cmd_render(args),
        Command::Budget(args) => cmd_budget(args),
        Command::Stats(args) => cmd_stats(args),
        Command::FitDebug(args) => cmd_fit_debug(args),
    });
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn thread_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool, BoxError> {
    let n = jobs.or_else(|| {
        std::env::var("PRIMSKETCH_JOBS")
            .ok()
            .and_then(|s| s.parse().ok())
    });
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = n {
        builder = builder.num_threads(n);
    }
    Ok(builder.build()?)
}

fn load_sketches(path: &Path, stroke3: bool) -> Result<Vec<Sketch>, BoxError> {
    let annotate = |e: BoxError| -> BoxError {
        format!("{}: {e}", path.display()).into()
    };
    if stroke3 {
        let bytes = fs::read(path).map_err(|e| annotate(e.into()))?;
        Ok(vec![parse_stroke3_json(&bytes).map_err(|e| annotate(e.into()))?])
    } else {
        let file = File::open(path).map_err(|e| annotate(e.into()))?;
        parse_ndjson(BufReader::new(file)).map_err(|e| annotate(e.into()))
    }
}

fn load_records(path: &Path) -> Result<RecordsFile, BoxError> {
    let file = File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let records: RecordsFile = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| format!("{}: {e}", path.display()))?;
    if records.schema_version != RECORDS_SCHEMA_VERSION {
        return Err(format!(
            "unsupported records schema version {} (expected {})",
            records.schema_version, RECORDS_SCHEMA_VERSION
        )
        .into());
    }
    Ok(records)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), BoxError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    Ok(())
}

fn svg_name(index: usize, sk_id: &Option<String>) -> String {
    match sk_id {
        Some(id) => {
            let safe: String = id
                .chars()
                .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
                .collect();
            format!("sketch_{index:04}_{safe}.svg")
        }
        None => format!("sketch_{index:04}.svg"),
    }
}

#[derive(Serialize)]
struct SketchReport {
    index: usize,
    id: Option<String>,
    category: Option<String>,
    strokes: usize,
    records: usize,
    skipped: Vec<usize>,
    mean_residual: f64,
    human_messages: usize,
    primitive_messages: usize,
    ratio: f64,
}

#[derive(Serialize)]
struct RunReport {
    method: String,
    grid: usize,
    gamma: f64,
    kappa: f64,
    sketches: Vec<SketchReport>,
    parse_ms: u128,
    abstract_ms: u128,
    render_ms: u128,
}

fn cmd_abstract(args: AbstractArgs) -> CliResult {
    use rayon::prelude::*;

    let t0 = Instant::now();
    let sketches = load_sketches(&args.input, args.stroke3)?;
    let parse_ms = t0.elapsed().as_millis();

    let grid = Grid::new(args.grid)?;
    let gamma = Gamma::new(args.gamma)?;
    let cfg = args.fit.build()?;
    let set = primitive_set();

    let t1 = Instant::now();
    let results: Vec<PrimitiveSketch> = match args.method {
        Method::Pmn => sketches
            .par_iter()
            .map(|sk| abstract_sketch(sk, set, &grid, gamma, &cfg, args.kappa))
            .collect::<Result<_, _>>()?,
        Method::Sw => sketches
            .par_iter()
            .map(|sk| sw_abstract(sk, set, &grid, gamma))
            .collect(),
    };
    let abstract_ms = t1.elapsed().as_millis();

    write_json(
        &args.out,
        &RecordsFile {
            schema_version: RECORDS_SCHEMA_VERSION,
            sketches: results.clone(),
        },
    )?;

    let t2 = Instant::now();
    if let Some(dir) = &args.svg {
        fs::create_dir_all(dir)?;
        let style = SvgStyle::default();
        for (i, ps) in results.iter().enumerate() {
            if ps.records.is_empty() {
                log::warn!("sketch {i}: nothing to render");
                continue;
            }
            let svg = render_primitive_svg(ps, set, &style)?;
            fs::write(dir.join(svg_name(i, &ps.sketch_id)), svg)?;
        }
    }
    let render_ms = t2.elapsed().as_millis();

    let reports: Vec<SketchReport> = sketches
        .iter()
        .zip(&results)
        .enumerate()
        .map(|(index, (sk, ps))| {
            let summary = compression_summary(sk, ps);
            let mean_residual = if ps.residuals.is_empty() {
                f64::NAN
            } else {
                ps.residuals.iter().sum::<f64>() / ps.residuals.len() as f64
            };
            SketchReport {
                index,
                id: sk.id.clone(),
                category: sk.category.clone(),
                strokes: sk.strokes().len(),
                records: ps.records.len(),
                skipped: ps.skipped_strokes.clone(),
                mean_residual,
                human_messages: summary.human_messages,
                primitive_messages: summary.primitive_messages,
                ratio: summary.ratio,
            }
        })
        .collect();

    let total_strokes: usize = reports.iter().map(|r| r.strokes).sum();
    let total_records: usize = reports.iter().map(|r| r.records).sum();
    let mean_ratio = reports.iter().map(|r| r.ratio).sum::<f64>() / reports.len().max(1) as f64;
    println!(
        "abstracted {} sketches ({} strokes -> {} records, mean message ratio {:.3}) in {} ms",
        reports.len(),
        total_strokes,
        total_records,
        mean_ratio,
        abstract_ms
    );

    if let Some(path) = &args.report {
        write_json(
            path,
            &RunReport {
                method: format!("{:?}", args.method).to_lowercase(),
                grid: args.grid,
                gamma: args.gamma,
                kappa: args.kappa,
                sketches: reports,
                parse_ms,
                abstract_ms,
                render_ms,
            },
        )?;
    }
    Ok(())
}

fn cmd_render(args: RenderArgs) -> CliResult {
    fs::create_dir_all(&args.out)?;
    let style = SvgStyle::default();
    let mut written = 0usize;
    if let Some(input) = &args.input {
        for (i, sk) in load_sketches(input, false)?.iter().enumerate() {
            let svg = render_sketch_svg(sk, &style);
            fs::write(args.out.join(svg_name(i, &sk.id)), svg)?;
            written += 1;
        }
    }
    if let Some(records) = &args.records {
        let set = primitive_set();
        for (i, ps) in load_records(records)?.sketches.iter().enumerate() {
            if ps.records.is_empty() {
                continue;
            }
            let svg = render_primitive_svg(ps, set, &style)?;
            fs::write(args.out.join(format!("primitive_{}", svg_name(i, &ps.sketch_id))), svg)?;
            written += 1;
        }
    }
    println!("wrote {written} SVG files to {}", args.out.display());
    Ok(())
}

fn cmd_budget(args: BudgetArgs) -> CliResult {
    let sketches = load_sketches(&args.input, false)?;
    let records = args.records.as_deref().map(load_records).transpose()?;
    if let Some(r) = &records {
        if r.sketches.len() != sketches.len() {
            return Err(format!(
                "records cover {} sketches but the input has {}",
                r.sketches.len(),
                sketches.len()
            )
            .into());
        }
    }
    let fractions = &args.fractions.0;

    let header: Vec<String> = fractions.iter().map(|f| format!("kept@{f}")).collect();
    println!("sketch\tkind\ttotal\t{}", header.join("\t"));
    let mut ratio_sum = 0.0;
    for (i, sk) in sketches.iter().enumerate() {
        let label = sk.id.clone().unwrap_or_else(|| i.to_string());
        let human_total = sk.message_count();
        let kept: Vec<String> = fractions
            .iter()
            .map(|&f| sk.budget_report(f).map(|r| r.kept_messages.to_string()))
            .collect::<Result<_, _>>()?;
        println!("{label}\thuman\t{human_total}\t{}", kept.join("\t"));
        if let Some(r) = &records {
            let ps = &r.sketches[i];
            let kept: Vec<String> = fractions
                .iter()
                .map(|&f| ps.budget_report(f).map(|r| r.kept_messages.to_string()))
                .collect::<Result<_, _>>()?;
            println!("{label}\tprimitive\t{}\t{}", ps.message_count(), kept.join("\t"));
            ratio_sum += compression_summary(sk, ps).ratio;
        }
    }
    if records.is_some() {
        println!(
            "mean primitive/human message ratio: {:.3}",
            ratio_sum / sketches.len() as f64
        );
    }
    Ok(())
}

fn cmd_stats(args: StatsArgs) -> CliResult {
    let records = load_records(&args.records)?;
    let stats = usage_stats(&records.sketches);
    match &args.out {
        Some(path) => write_json(path, &stats)?,
        None => {
            serde_json::to_writer_pretty(std::io::stdout().lock(), &stats)?;
            println!();
        }
    }
    if let Some(path) = &args.csv {
        fs::write(path, stats.to_csv())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CandidateDebug {
    theta1: f64,
    sx: f64,
    theta2: f64,
    loss: f64,
}

#[derive(Serialize)]
struct FitDebug {
    id: PrimitiveId,
    loss: f64,
    evals: u64,
    theta1: f64,
    sx: f64,
    theta2: f64,
    coarse_top: Vec<CandidateDebug>,
}

fn cmd_fit_debug(args: FitDebugArgs) -> CliResult {
    let sketches = load_sketches(&args.input, false)?;
    let sk = sketches
        .get(args.sketch)
        .ok_or_else(|| format!("no sketch {} in input", args.sketch))?;
    let stroke = sk
        .strokes()
        .get(args.stroke)
        .ok_or_else(|| format!("no stroke {} in sketch {}", args.stroke, args.sketch))?;
    let grid = Grid::new(args.grid)?;
    let gamma = Gamma::new(args.gamma)?;
    let cfg = args.fit.build()?;
    let set = primitive_set();

    fs::create_dir_all(&args.out)?;
    let normalized = normalize_stroke(stroke)?;
    let target = FitTarget::new(&normalized, &grid, gamma)?;
    let mut w = BufWriter::new(File::create(args.out.join("stroke_field.bin"))?);
    crate::field::write_field_dump(target.field(), &mut w)?;
    w.flush()?;

    let mut debugs = Vec::new();
    for p in set {
        let fit = fit_with_target(&target, p, &grid, gamma, &cfg);
        let best_field =
            crate::field::field(&candidate_points(p, &fit.params, target.rms()), &grid, gamma)?;
        let mut fw = BufWriter::new(File::create(
            args.out.join(format!("candidate_{}.bin", p.id)),
        )?);
        crate::field::write_field_dump(&best_field, &mut fw)?;
        fw.flush()?;

        // small coarse table for inspection
        let mut table = Vec::new();
        let steps = cfg.coarse_theta_steps;
        for i1 in 0..steps {
            let theta1 = std::f64::consts::TAU * i1 as f64 / steps as f64;
            for &sx in &cfg.coarse_scale_levels {
                for i2 in 0..steps {
                    let theta2 = std::f64::consts::TAU * i2 as f64 / steps as f64;
                    let t = crate::affine::TransformParams::new(theta1, sx, theta2)?;
                    table.push(CandidateDebug {
                        theta1,
                        sx,
                        theta2,
                        loss: candidate_loss(&target, p, &grid, gamma, &t),
                    });
                }
            }
        }
        table.sort_by(|a, b| a.loss.total_cmp(&b.loss));
        table.truncate(10);
        debugs.push(FitDebug {
            id: p.id,
            loss: fit.loss,
            evals: fit.evals,
            theta1: fit.params.theta1(),
            sx: fit.params.sx(),
            theta2: fit.params.theta2(),
            coarse_top: table,
        });
    }
    write_json(&args.out.join("fits.json"), &debugs)?;
    println!(
        "dumped stroke field, 7 candidate fields, and fits.json to {}",
        args.out.display()
    );
    Ok(())
}
