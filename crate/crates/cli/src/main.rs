use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use hyperqif::corpus::{self, CorpusSchema, ReportOptions};
use hyperqif::envanalysis::bits;
use hyperqif::json::{load, ChannelJson, DistributionJson, GainJson, HigherJson, HyperJson};
use hyperqif::numfmt::{round_json, sig12};
use hyperqif::{
    check_abstracts_within, collapse, decompose_security, environmental_vulnerability, hyper_vulnerability,
    model_vulnerability, strategy_vulnerability, strategy_vulnerability_given, vulnerability_n,
    AggregationMatrix, Distribution, GainFunction, HigherHyper, Hyper, SecretSpace, VulnerabilityMeasure,
    EPS_FEAS,
};

mod selftest;

const SCHEMA: &str = "hyperqif/1";

#[derive(Parser)]
#[command(
    name = "hyperqif",
    version,
    about = "Vulnerability of secrets chosen under many strategies"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// bayes, identity, or g (requires --gain)
    #[arg(long, global = true, default_value = "bayes")]
    measure: MeasureName,
    /// Gain function JSON for --measure g
    #[arg(long, global = true, value_name = "FILE")]
    gain: Option<PathBuf>,
    /// Numeric tolerance (refinement residual, selftest comparisons)
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    #[arg(long, global = true, default_value = "table")]
    output: Output,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum MeasureName {
    Bayes,
    Identity,
    G,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Output {
    Json,
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Vulnerability of a distribution, or posterior vulnerability of a hyper
    Vuln {
        #[arg(
            long,
            value_name = "FILE",
            required_unless_present = "hyper",
            conflicts_with = "hyper"
        )]
        dist: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        hyper: Option<PathBuf>,
    },
    /// Environmental vulnerability V_E
    EnvVuln {
        #[arg(long, value_name = "FILE")]
        env: PathBuf,
    },
    /// Strategy vulnerability V_S(E), or V_S(M|E) with --model
    StratVuln {
        #[arg(long, value_name = "FILE")]
        env: PathBuf,
        #[arg(long, value_name = "FILE")]
        model: Option<PathBuf>,
    },
    /// Perceived vulnerability split into aggregation and strategy factors
    Decompose {
        #[arg(long, value_name = "FILE")]
        env: PathBuf,
    },
    /// Apply an aggregation matrix to an environment
    Abstract {
        #[arg(long, value_name = "FILE")]
        env: PathBuf,
        #[arg(long, value_name = "FILE")]
        matrix: PathBuf,
    },
    /// Decide whether --abstract is an abstraction of --concrete (exit 0 if so, 1 if not)
    CheckRefines {
        #[arg(long, value_name = "FILE")]
        concrete: PathBuf,
        #[arg(long = "abstract", value_name = "FILE")]
        abstract_: PathBuf,
        /// Write the aggregation matrix found
        #[arg(long, value_name = "FILE")]
        emit_witness: Option<PathBuf>,
    },
    /// Collapse a higher-order hyper to an ordinary hyper
    Collapse {
        #[arg(long, value_name = "FILE")]
        higher: PathBuf,
    },
    /// Credential-corpus pipeline
    Corpus {
        #[command(subcommand)]
        command: CorpusCommand,
    },
    /// Same as `corpus analyze`
    CorpusAnalyze(CorpusArgs),
    #[command(hide = true)]
    Selftest {
        #[arg(long, default_value_t = 200)]
        instances: usize,
    },
}

#[derive(Subcommand)]
enum CorpusCommand {
    /// Decomposition report over attribute abstractions
    Analyze(CorpusArgs),
}

#[derive(Args)]
struct CorpusArgs {
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    #[arg(long, default_value = "password")]
    secret_col: String,
    /// Attribute abstractions, in report order
    #[arg(long, value_delimiter = ',')]
    attr_cols: Vec<String>,
    #[arg(long, default_value = "auto")]
    delimiter: Delimiter,
    #[arg(long, default_value_t = usize::MAX, hide_default_value = true)]
    max_bad_rows: usize,
    /// Input is one secret per line with no header
    #[arg(long)]
    no_header: bool,
    /// Derive this attribute from the year embedded in each secret, dropping
    /// secrets without one
    #[arg(long, value_name = "NAME")]
    year_from_secret: Option<String>,
    /// Assign this attribute uniformly at random from f/m
    #[arg(long, value_name = "NAME")]
    synth_gender: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Compute the omniscient row without the point-inner shortcut
    #[arg(long)]
    no_shortcut: bool,
    /// Write rank/probability series per strategy as CSV
    #[arg(long, value_name = "FILE")]
    plot_data: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    top: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Delimiter {
    Auto,
    Comma,
    Tab,
}

struct Outcome {
    value: Value,
    text: Option<String>,
    code: u8,
}

impl Outcome {
    fn ok(value: Value) -> Self {
        Outcome {
            value,
            text: None,
            code: 0,
        }
    }
}

impl Common {
    fn measure(&self, space: &SecretSpace) -> Result<VulnerabilityMeasure> {
        match (self.measure, &self.gain) {
            (MeasureName::G, Some(path)) => {
                let g: GainFunction = load::<GainJson, _>(path).with_context(|| path_msg(path))?;
                Ok(VulnerabilityMeasure::Gain(g))
            }
            (MeasureName::G, None) => bail!("--measure g requires --gain"),
            (_, Some(_)) => bail!("--gain is only valid with --measure g"),
            (MeasureName::Bayes, None) => Ok(VulnerabilityMeasure::Bayes),
            (MeasureName::Identity, None) => {
                Ok(VulnerabilityMeasure::Gain(GainFunction::identity(space.clone())))
            }
        }
    }
}

fn path_msg(p: &Path) -> String {
    format!("reading {}", p.display())
}

fn read_hyper(path: &Path) -> Result<Hyper> {
    load::<HyperJson, _>(path).with_context(|| path_msg(path))
}

fn hyper_fields(h: &Hyper, extra: Value) -> Value {
    let mut v = serde_json::to_value(HyperJson::from(h)).expect("serializable");
    merge(&mut v, extra);
    v
}

fn merge(into: &mut Value, extra: Value) {
    if let (Value::Object(a), Value::Object(b)) = (into, extra) {
        a.extend(b);
    }
}

fn with_schema(body: Value) -> Value {
    let mut v = json!({ "schema": SCHEMA });
    merge(&mut v, body);
    v
}

fn guess_label(measure: &VulnerabilityMeasure, dist: &Distribution) -> Result<String> {
    let k = measure.best_guess(dist)?;
    Ok(match measure {
        VulnerabilityMeasure::Bayes => dist.space().label(k).to_string(),
        VulnerabilityMeasure::Gain(g) => g.guesses().label(k).to_string(),
    })
}

fn decomposition_value(measure: &VulnerabilityMeasure, env: &Hyper) -> Result<Value> {
    let d = decompose_security(measure, env)?;
    Ok(json!({
        "measure": measure.name(),
        "perceived": d.perceived,
        "by_aggregation": d.by_aggregation,
        "by_strategy": d.by_strategy,
        "bits": d.bits(),
    }))
}

fn run(cli: Cli) -> Result<Outcome> {
    let common = &cli.common;
    match cli.command {
        Command::Vuln { dist, hyper } => {
            if let Some(path) = dist {
                let d: Distribution = load::<DistributionJson, _>(&path).with_context(|| path_msg(&path))?;
                let m = common.measure(d.space())?;
                Ok(Outcome::ok(json!({
                    "measure": m.name(),
                    "vulnerability": m.vulnerability(&d)?,
                    "guess": guess_label(&m, &d)?,
                })))
            } else {
                let path = hyper.expect("clap enforces one input");
                let h = read_hyper(&path)?;
                let m = common.measure(h.space())?;
                Ok(Outcome::ok(json!({
                    "measure": m.name(),
                    "vulnerability": hyper_vulnerability(&m, &h)?,
                })))
            }
        }
        Command::EnvVuln { env } => {
            let e = read_hyper(&env)?;
            let m = common.measure(e.space())?;
            Ok(Outcome::ok(json!({
                "measure": m.name(),
                "env_vulnerability": environmental_vulnerability(&m, &e)?,
            })))
        }
        Command::StratVuln { env, model } => {
            let e = read_hyper(&env)?;
            let m = common.measure(e.space())?;
            let v = match model {
                Some(path) => strategy_vulnerability_given(&m, &e, &read_hyper(&path)?)?,
                None => strategy_vulnerability(&m, &e)?,
            };
            Ok(Outcome::ok(json!({
                "measure": m.name(),
                "strategy_vulnerability": v,
                "bits": bits(v),
            })))
        }
        Command::Decompose { env } => {
            let e = read_hyper(&env)?;
            let m = common.measure(e.space())?;
            Ok(Outcome::ok(decomposition_value(&m, &e)?))
        }
        Command::Abstract { env, matrix } => {
            let e = read_hyper(&env)?;
            let a: AggregationMatrix = load::<ChannelJson, _>(&matrix).with_context(|| path_msg(&matrix))?;
            let model = hyperqif::apply_aggregation(&e, &a)?;
            let m = common.measure(e.space())?;
            let v = model_vulnerability(&m, &e, &a)?;
            Ok(Outcome::ok(hyper_fields(
                &model,
                json!({ "measure": m.name(), "env_vulnerability": v }),
            )))
        }
        Command::CheckRefines {
            concrete,
            abstract_,
            emit_witness,
        } => {
            let e = read_hyper(&concrete)?;
            let m = read_hyper(&abstract_)?;
            let tol = common.tolerance.unwrap_or(EPS_FEAS);
            let w = check_abstracts_within(&m, &e, tol)?;
            if let (Some(path), Some(a)) = (&emit_witness, &w.matrix) {
                let mut v = with_schema(serde_json::to_value(ChannelJson::from(a))?);
                round_json(&mut v);
                std::fs::write(path, serde_json::to_string_pretty(&v)? + "\n")
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(Outcome {
                value: json!({ "holds": w.holds, "residual": w.residual, "tolerance": tol }),
                text: None,
                code: if w.holds { 0 } else { 1 },
            })
        }
        Command::Collapse { higher } => {
            let h: HigherHyper = load::<HigherJson, _>(&higher).with_context(|| path_msg(&higher))?;
            let flat = collapse(&h)?;
            let m = common.measure(h.space())?;
            Ok(Outcome::ok(hyper_fields(
                &flat,
                json!({
                    "depth": h.depth(),
                    "measure": m.name(),
                    "vulnerability_n": vulnerability_n(&m, &h)?,
                    "vulnerability": hyper_vulnerability(&m, &flat)?,
                }),
            )))
        }
        Command::Corpus {
            command: CorpusCommand::Analyze(args),
        }
        | Command::CorpusAnalyze(args) => corpus_analyze(common, args),
        Command::Selftest { instances } => {
            let tol = common.tolerance.unwrap_or(1e-9);
            let report = selftest::run(instances, tol);
            let code = if report.failures == 0 { 0 } else { 1 };
            Ok(Outcome {
                value: report.to_json(),
                text: None,
                code,
            })
        }
    }
}

fn corpus_analyze(common: &Common, args: CorpusArgs) -> Result<Outcome> {
    let derived: Vec<&String> = args.year_from_secret.iter().chain(&args.synth_gender).collect();
    let mut attrs = args.attr_cols.clone();
    if attrs.is_empty() {
        attrs = derived.iter().map(|s| s.to_string()).collect();
    }
    for d in &derived {
        if !attrs.contains(d) {
            attrs.push(d.to_string());
        }
    }
    let schema = CorpusSchema {
        secret_col: args.secret_col.clone(),
        attr_cols: attrs.iter().filter(|a| !derived.contains(a)).cloned().collect(),
        delimiter: match args.delimiter {
            Delimiter::Auto => None,
            Delimiter::Comma => Some(b','),
            Delimiter::Tab => Some(b'\t'),
        },
        max_bad_rows: args.max_bad_rows,
        has_header: !args.no_header,
    };
    let ingested = corpus::ingest(&args.input, &schema).with_context(|| path_msg(&args.input))?;
    let total_rows = ingested.records.len() + ingested.malformed;
    let mut records = ingested.records;
    if let Some(name) = &args.year_from_secret {
        records = corpus::attach_year(records, name);
    }
    if let Some(name) = &args.synth_gender {
        let seed = args.seed.unwrap_or_else(hyperqif::testkit::seed);
        corpus::attach_random(&mut records, name, &["f", "m"], seed);
    }
    let mut bundle = corpus::EnvironmentBundle::new(records, attrs.clone())?;
    for a in &attrs {
        bundle.add_abstraction(a)?;
    }
    let measure = match common.measure {
        // identity gain equals Bayes; skips building an |X| x |X| matrix
        MeasureName::Identity if common.gain.is_none() => VulnerabilityMeasure::Bayes,
        _ => common.measure(bundle.space())?,
    };
    let table = corpus::decomposition_report(
        &bundle,
        &measure,
        ReportOptions {
            point_inner_shortcut: !args.no_shortcut,
        },
    )?;
    if let Some(path) = &args.plot_data {
        let f = File::create(path).with_context(|| format!("writing {}", path.display()))?;
        corpus::write_plot_data(&bundle, args.top, BufWriter::new(f))?;
    }
    let mut value = table.to_json();
    merge(
        &mut value,
        json!({ "rows_read": total_rows, "malformed": ingested.malformed }),
    );
    let text = format!(
        "rows read {}  malformed {}\n{}",
        total_rows,
        ingested.malformed,
        table.render()
    );
    Ok(Outcome {
        value,
        text: Some(text),
        code: 0,
    })
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => flatten_map(prefix, map, out),
        Value::Array(items) if items.iter().all(|x| !x.is_array() && !x.is_object()) => {
            let cells: Vec<String> = items.iter().map(scalar).collect();
            out.push((prefix.to_string(), cells.join(" ")));
        }
        Value::Array(items) => {
            for (i, x) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), x, out);
            }
        }
        _ => out.push((prefix.to_string(), scalar(v))),
    }
}

fn flatten_map(prefix: &str, map: &Map<String, Value>, out: &mut Vec<(String, String)>) {
    for (k, x) in map {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        flatten(&key, x, out);
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.to_string(),
            None => sig12(n.as_f64().unwrap_or(f64::NAN)),
        },
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn render_table(v: &Value) -> String {
    let mut rows = Vec::new();
    flatten("", v, &mut rows);
    let w = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    rows.iter().map(|(k, x)| format!("{k:<w$}  {x}\n")).collect()
}

/// The error chain on one line, skipping causes already quoted by their
/// parent.
fn diagnostic(e: &anyhow::Error) -> String {
    let mut parts: Vec<String> = Vec::new();
    for cause in e.chain() {
        let msg = cause.to_string().replace('\n', " ");
        if !parts.last().is_some_and(|p| p.contains(&msg)) {
            parts.push(msg);
        }
    }
    parts.join(": ")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let output = cli.common.output;
    match run(cli) {
        Ok(outcome) => {
            let mut value = with_schema(outcome.value);
            round_json(&mut value);
            let rendered = match (output, outcome.text) {
                (Output::Json, _) => serde_json::to_string_pretty(&value).expect("serializable") + "\n",
                (Output::Table, Some(text)) => text,
                (Output::Table, None) => {
                    if let Value::Object(map) = &mut value {
                        map.remove("schema");
                    }
                    render_table(&value)
                }
            };
            let mut stdout = std::io::stdout().lock();
            if let Err(e) = stdout.write_all(rendered.as_bytes()).and_then(|_| stdout.flush()) {
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    eprintln!("hyperqif: writing output: {e}");
                    return ExitCode::from(2);
                }
            }
            ExitCode::from(outcome.code)
        }
        Err(e) => {
            eprintln!("hyperqif: {}", diagnostic(&e));
            ExitCode::from(2)
        }
    }
}
