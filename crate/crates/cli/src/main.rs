use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use extreme_core::catalog::{load_catalog, serialize_catalog, verify_all, Catalog, FailedMeasure};
use extreme_core::cyclotomic::{exact_extremality_check, ExactVerdict};
use extreme_core::equivalence::enumerate_class_representatives;
use extreme_core::ingest::ingest;
use extreme_core::literal::{format_group, format_masses, format_set, parse_group, parse_measure, parse_set};
use extreme_core::measure::dual_measure;
use extreme_core::search::{resume_search, run_search, Objective, Retention, SearchConfig, Verdict};
use extreme_core::structure::{coset_union_decomposition, passes_difference_test, sumset_decomposition};
use extreme_core::{snap_turn, Element, Error, GroupSpec, PhaseMeasure, SearchReport64};

const EXIT_EXTREME: u8 = 0;
const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NOT_EXTREME: u8 = 3;
const EXIT_INCONCLUSIVE: u8 = 4;

#[derive(Parser)]
#[command(
    name = "extreme",
    version,
    about = "Find and verify extreme sets in finite abelian groups"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Group as comma-separated cyclic orders, e.g. `12` or `2,4`.
    #[arg(long, global = true)]
    group: Option<String>,
    /// Elements, e.g. `0,1,2,4` or `(0,0),(1,3)`.
    #[arg(long, global = true)]
    set: Option<String>,
    /// Turns `p/q` (or `mag:turn`) aligned with `--set`; unit masses when absent.
    #[arg(long, global = true)]
    masses: Option<String>,
    /// One JSON record per result.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads; all cores when absent.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Search checkpoint file, written after every mesh.
    #[arg(long, global = true)]
    checkpoint: Option<PathBuf>,
    /// Report wall-clock time. Off by default so output is reproducible.
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exact extremality check of a measure.
    Verify,
    /// Grid search for an extreme measure on one set.
    Search(SearchArgs),
    /// Search every class representative of a given size.
    Psc {
        #[arg(long)]
        size: usize,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Class representatives under automorphisms and translations.
    Classes {
        #[arg(long)]
        size: usize,
        #[arg(long, value_enum)]
        filter: Option<FilterKind>,
    },
    /// Class representatives annotated with the difference test.
    Filter {
        #[arg(long)]
        size: usize,
    },
    /// Coset-union and sumset decompositions of a set.
    Decompose,
    /// Verify or rebuild the catalog of known extreme measures.
    #[command(subcommand)]
    Catalog(CatalogCmd),
    /// The transform of a full-group measure as a measure on the dual group.
    Dual,
}

#[derive(Subcommand)]
enum CatalogCmd {
    /// Re-verify every catalog measure exactly.
    VerifyAll {
        /// Catalog file; the embedded catalog when absent.
        #[arg(long)]
        catalog: Option<PathBuf>,
        /// Only measures citing this source label.
        #[arg(long)]
        src: Option<String>,
    },
    /// Convert a LaTeX measure listing into catalog records.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FilterKind {
    Difference,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Findx,
    Findbest,
}

#[derive(Clone, Copy, ValueEnum)]
enum RetentionArg {
    Window,
    PerCoefficient,
}

#[derive(clap::Args, Clone)]
struct SearchArgs {
    /// First mesh; derived from the difference counts when absent.
    #[arg(long)]
    mesh_start: Option<u64>,
    #[arg(long, default_value_t = 64)]
    mesh_max: u64,
    /// Mesh multiplier between passes.
    #[arg(long, default_value_t = 2)]
    refinement: u64,
    /// Slack added to every retention threshold.
    #[arg(long, default_value_t = 1e-7)]
    precision: f64,
    /// Budget for retained grid points.
    #[arg(long, default_value_t = 1024)]
    ram_mb: usize,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Findx)]
    objective: ObjectiveArg,
    #[arg(long, value_enum, default_value_t = RetentionArg::Window)]
    retention: RetentionArg,
    /// Continue from `--checkpoint`.
    #[arg(long)]
    resume: bool,
}

enum Fail {
    Usage(String),
    Run(String),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) | Error::InvalidGroup(_) | Error::InvalidElement(_) | Error::InvalidMeasure(_) => {
                Fail::Usage(e.to_string())
            }
            _ => Fail::Run(e.to_string()),
        }
    }
}

struct Out {
    json: bool,
    started: Option<Instant>,
}

impl Out {
    fn timing(&self) -> Value {
        match self.started {
            Some(t) => json!(t.elapsed().as_secs_f64()),
            None => Value::Null,
        }
    }

    fn record(&self, command: &str, inputs: Value, verdict: Value, bounds: Value, witness: Value, text: &str) {
        if self.json {
            let rec = json!({
                "command": command,
                "inputs": inputs,
                "verdict": verdict,
                "bounds": bounds,
                "witness": witness,
                "timing": self.timing(),
            });
            println!("{rec}");
        } else {
            println!("{text}");
        }
    }
}

fn need<'a>(v: &'a Option<String>, flag: &str) -> Result<&'a str, Fail> {
    v.as_deref().ok_or_else(|| Fail::Usage(format!("--{flag} is required")))
}

fn group_arg(cli: &Cli) -> Result<GroupSpec, Fail> {
    Ok(parse_group(need(&cli.group, "group")?)?)
}

fn measure_arg(cli: &Cli, g: &GroupSpec) -> Result<PhaseMeasure, Fail> {
    Ok(parse_measure(g, need(&cli.set, "set")?, cli.masses.as_deref())?)
}

fn set_json(set: &[Element]) -> Value {
    json!(format_set(set))
}

fn measure_json(mu: &PhaseMeasure) -> Value {
    let masses: Vec<_> = mu.masses().values().copied().collect();
    json!({"set": format_set(&mu.support()), "masses": format_masses(&masses)})
}

fn config_from(args: &SearchArgs, checkpoint: &Option<PathBuf>) -> SearchConfig {
    SearchConfig {
        mesh_start: args.mesh_start,
        mesh_max: args.mesh_max,
        refinement_factor: args.refinement,
        precision: args.precision,
        memory_budget: args.ram_mb.saturating_mul(1 << 20),
        objective: match args.objective {
            ObjectiveArg::Findx => Objective::ConvolutionResidual,
            ObjectiveArg::Findbest => Objective::TransformMax,
        },
        retention: match args.retention {
            RetentionArg::Window => Retention::Window,
            RetentionArg::PerCoefficient => Retention::PerCoefficient,
        },
        checkpoint: checkpoint.clone(),
        ..SearchConfig::default()
    }
}

fn verdict_code(v: &Verdict<f64>) -> u8 {
    match v {
        Verdict::ExtremeFound(_) => EXIT_EXTREME,
        Verdict::CertifiedNotExtreme { .. } => EXIT_NOT_EXTREME,
        Verdict::Inconclusive(_) => EXIT_INCONCLUSIVE,
    }
}

fn report_search(out: &Out, command: &str, g: &GroupSpec, r: &SearchReport64) {
    let inputs = json!({"group": format_group(g), "set": set_json(&r.set)});
    let mut bounds = json!({
        "best_value": r.best_value,
        "lower_bound": r.lower_bound,
        "mesh_reached": r.mesh_reached,
        "kept": r.kept,
        "discarded": r.discarded,
        "passes": r.passes.iter().map(|p| json!({
            "mesh": p.mesh,
            "evaluated": p.evaluated,
            "kept": p.kept,
            "discarded": p.discarded,
            "min_score": p.min_score,
        })).collect::<Vec<_>>(),
    });
    let (witness, detail) = match &r.verdict {
        Verdict::ExtremeFound(mu) => {
            let masses: Vec<_> = mu.masses().values().copied().collect();
            (measure_json(mu), format!("masses={}", format_masses(&masses)))
        }
        Verdict::CertifiedNotExtreme {
            lower_bound,
            epsilon_used,
        } => {
            bounds["epsilon_used"] = json!(epsilon_used);
            bounds["certified_lower_bound"] = json!(lower_bound);
            (
                Value::Null,
                format!("lower_bound={lower_bound:.6} epsilon={epsilon_used:.6}"),
            )
        }
        Verdict::Inconclusive(why) => {
            bounds["reason"] = json!(why);
            (Value::Null, format!("reason=\"{why}\""))
        }
    };
    let text = format!(
        "{} set={} mesh={} best={:.9} kept={} discarded={} {}",
        r.verdict.name(),
        format_set(&r.set),
        r.mesh_reached,
        r.best_value,
        r.kept,
        r.discarded,
        detail
    );
    out.record(command, inputs, json!(r.verdict.name()), bounds, witness, &text);
}

fn search_one(
    g: &GroupSpec,
    set: &[Element],
    args: &SearchArgs,
    checkpoint: &Option<PathBuf>,
) -> Result<SearchReport64, Fail> {
    let config = config_from(args, checkpoint);
    if args.resume {
        let path = checkpoint
            .as_ref()
            .ok_or_else(|| Fail::Usage("--resume needs --checkpoint".into()))?;
        Ok(resume_search::<f64>(g, set, &config, path)?)
    } else {
        Ok(run_search::<f64>(g, set, &config)?)
    }
}

fn cmd_verify(cli: &Cli, out: &Out) -> Result<u8, Fail> {
    let g = group_arg(cli)?;
    let mu = measure_arg(cli, &g)?;
    let verdict = exact_extremality_check(&mu)?;
    let sup: f64 = mu.sup_transform()?;
    let norm: f64 = mu.total_variation();
    let root = (mu.len() as f64).sqrt();
    let inputs = json!({"group": format_group(&g), "measure": measure_json(&mu)});
    let bounds = json!({"sup_transform": sup, "norm_over_sqrt_n": norm / root});
    let (name, witness, text, code) = match verdict {
        ExactVerdict::Extreme => ("Extreme", Value::Null, "Extreme".to_string(), EXIT_EXTREME),
        ExactVerdict::NotExtreme { witness, sum } => (
            "NotExtreme",
            json!({"element": witness.to_string(), "sum": sum.to_string()}),
            format!("NotExtreme witness={witness} sum={sum}"),
            EXIT_NOT_EXTREME,
        ),
    };
    let text = format!("{text} sup_transform={sup:.12} norm/sqrt(N)={:.12}", norm / root);
    out.record("verify", inputs, json!(name), bounds, witness, &text);
    Ok(code)
}

fn cmd_search(cli: &Cli, out: &Out, args: &SearchArgs) -> Result<u8, Fail> {
    let g = group_arg(cli)?;
    let set = parse_set(&g, need(&cli.set, "set")?)?;
    let r = search_one(&g, &set, args, &cli.checkpoint)?;
    report_search(out, "search", &g, &r);
    Ok(verdict_code(&r.verdict))
}

fn cmd_psc(cli: &Cli, out: &Out, size: usize, args: &SearchArgs) -> Result<u8, Fail> {
    if args.resume || cli.checkpoint.is_some() {
        return Err(Fail::Usage(
            "psc runs many searches; checkpoints apply to `search` only".into(),
        ));
    }
    let g = group_arg(cli)?;
    let mut codes = Vec::new();
    for class in enumerate_class_representatives(&g, size)? {
        let r = search_one(&g, &class.representative, args, &None)?;
        report_search(out, "psc", &g, &r);
        codes.push(verdict_code(&r.verdict));
    }
    Ok(if codes.contains(&EXIT_EXTREME) {
        EXIT_EXTREME
    } else if codes.contains(&EXIT_INCONCLUSIVE) || codes.is_empty() {
        EXIT_INCONCLUSIVE
    } else {
        EXIT_NOT_EXTREME
    })
}

fn cmd_classes(cli: &Cli, out: &Out, size: usize, filter: Option<FilterKind>, annotate: bool) -> Result<u8, Fail> {
    let g = group_arg(cli)?;
    let command = if annotate { "filter" } else { "classes" };
    let mut count = 0usize;
    for class in enumerate_class_representatives(&g, size)? {
        let pass = passes_difference_test(&g, &class.representative)?;
        if matches!(filter, Some(FilterKind::Difference)) && !pass {
            continue;
        }
        count += 1;
        let rep = format_set(&class.representative);
        let inputs = json!({"group": format_group(&g), "size": size});
        if annotate {
            let text = format!("{rep} {}", if pass { "pass" } else { "fail" });
            out.record(
                command,
                inputs,
                json!(if pass { "pass" } else { "fail" }),
                json!({"representative": rep, "exact": class.exact}),
                Value::Null,
                &text,
            );
        } else {
            out.record(
                command,
                inputs,
                Value::Null,
                json!({"representative": rep, "exact": class.exact}),
                Value::Null,
                &rep,
            );
        }
    }
    out.record(
        command,
        json!({"group": format_group(&g), "size": size}),
        Value::Null,
        json!({"count": count}),
        Value::Null,
        &format!("count {count}"),
    );
    Ok(EXIT_EXTREME)
}

fn cmd_decompose(cli: &Cli, out: &Out) -> Result<u8, Fail> {
    let g = group_arg(cli)?;
    let set = parse_set(&g, need(&cli.set, "set")?)?;
    let coset = coset_union_decomposition(&g, &set)?;
    let sums = sumset_decomposition(&g, &set)?;
    let mut text = String::new();
    let coset_json = match &coset {
        Some((h, reps)) => {
            text.push_str(&format!(
                "coset union: H={{{}}} reps={{{}}}\n",
                format_set(h.elements()),
                format_set(reps)
            ));
            json!({"subgroup": format_set(h.elements()), "representatives": format_set(reps)})
        }
        None => {
            text.push_str("coset union: none\n");
            Value::Null
        }
    };
    let sums_json: Vec<Value> = sums
        .iter()
        .map(|(a, b)| {
            text.push_str(&format!("sumset: {{{}}} + {{{}}}\n", format_set(a), format_set(b)));
            json!({"a": format_set(a), "b": format_set(b)})
        })
        .collect();
    if sums.is_empty() {
        text.push_str("sumset: none\n");
    }
    out.record(
        "decompose",
        json!({"group": format_group(&g), "set": set_json(&set)}),
        Value::Null,
        json!({"coset_union": coset_json, "sumsets": sums_json}),
        Value::Null,
        text.trim_end(),
    );
    Ok(EXIT_EXTREME)
}

fn failure_json(f: &FailedMeasure) -> Value {
    json!({
        "group": format_group(&f.group),
        "set": format_set(&f.set),
        "src": f.check.provenance,
        "recorded": f.check.recorded.as_str(),
        "computed": f.check.computed.as_str(),
        "witness": f.check.witness.as_ref().map(|w| json!({"element": w.element.to_string(), "sum": w.sum})),
        "error": f.check.error,
    })
}

fn cmd_verify_all(out: &Out, catalog: &Option<PathBuf>, src: &Option<String>) -> Result<u8, Fail> {
    let mut cat: Catalog = load_catalog(catalog.as_deref())?;
    if let Some(label) = src {
        cat = cat.filter_provenance(label);
    }
    let s = verify_all(&cat);
    for f in &s.failed {
        let expected = f.check.as_expected();
        let witness = f
            .check
            .witness
            .as_ref()
            .map(|w| format!(" witness={} sum={}", w.element, w.sum))
            .unwrap_or_default();
        let text = format!(
            "{} group={} set={} src=\"{}\"{}",
            if expected {
                "expected-failure"
            } else {
                "UNEXPECTED-FAILURE"
            },
            format_group(&f.group),
            format_set(&f.set),
            f.check.provenance,
            witness
        );
        out.record(
            "catalog verify-all",
            json!({"catalog": catalog, "src": src}),
            json!(if expected {
                "ExpectedFailure"
            } else {
                "UnexpectedFailure"
            }),
            Value::Null,
            failure_json(f),
            &text,
        );
    }
    for f in s.unexpected.iter().filter(|f| f.check.computed.as_str() == "verified") {
        out.record(
            "catalog verify-all",
            json!({"catalog": catalog, "src": src}),
            json!("UnexpectedSuccess"),
            Value::Null,
            failure_json(f),
            &format!(
                "UNEXPECTED-SUCCESS group={} set={} src=\"{}\"",
                format_group(&f.group),
                format_set(&f.set),
                f.check.provenance
            ),
        );
    }
    let text = format!(
        "entries={} verified={} failed={} unexpected={}",
        s.entries,
        s.verified,
        s.failed.len(),
        s.unexpected.len()
    );
    out.record(
        "catalog verify-all",
        json!({"catalog": catalog, "src": src}),
        json!(if s.is_ok() { "Ok" } else { "Unexpected" }),
        json!({"entries": s.entries, "verified": s.verified, "failed": s.failed.len(), "unexpected": s.unexpected.len()}),
        Value::Null,
        &text,
    );
    Ok(if s.is_ok() { EXIT_EXTREME } else { EXIT_FAILURE })
}

fn cmd_ingest(input: &PathBuf, output: &Option<PathBuf>) -> Result<u8, Fail> {
    let src = std::fs::read_to_string(input).map_err(|e| Fail::Run(format!("{}: {e}", input.display())))?;
    let text = serialize_catalog(&ingest(&src)?);
    match output {
        Some(p) => std::fs::write(p, text).map_err(|e| Fail::Run(format!("{}: {e}", p.display())))?,
        None => print!("{text}"),
    }
    Ok(EXIT_EXTREME)
}

fn cmd_dual(cli: &Cli, out: &Out) -> Result<u8, Fail> {
    let g = group_arg(cli)?;
    let mu = measure_arg(cli, &g)?;
    let dual = dual_measure(&mu.to_complex::<f64>())?;
    let extreme = dual.measure.is_extreme_numeric(1e-9)?;
    let mut lines = Vec::new();
    let masses: Vec<Value> = dual
        .measure
        .masses()
        .iter()
        .map(|(gamma, z)| {
            // drop rounding noise so zero masses print as 0 with no phase
            let clean = |x: f64| if x.abs() < 1e-12 { 0.0 } else { x };
            let (re, im) = (clean(z.re), clean(z.im));
            let turn =
                (re != 0.0 || im != 0.0).then(|| snap_turn(im.atan2(re) / std::f64::consts::TAU, 1 << 20).to_string());
            let shown = turn.as_deref().unwrap_or("-");
            lines.push(format!("{gamma} {re:.12} {im:.12} |z|={:.12} turn~{shown}", z.norm()));
            json!({"character": gamma.to_string(), "re": re, "im": im, "turn": turn})
        })
        .collect();
    let verdict = if extreme { "Extreme" } else { "NotExtreme" };
    lines.push(format!("{verdict} scale={:.12}", dual.scale));
    out.record(
        "dual",
        json!({"group": format_group(&g), "measure": measure_json(&mu)}),
        json!(verdict),
        json!({"scale": dual.scale, "masses": masses}),
        Value::Null,
        &lines.join("\n"),
    );
    Ok(if extreme { EXIT_EXTREME } else { EXIT_NOT_EXTREME })
}

fn run(cli: &Cli) -> Result<u8, Fail> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Fail::Run(e.to_string()))?;
    }
    let out = Out {
        json: cli.json,
        started: cli.timing.then(Instant::now),
    };
    match &cli.cmd {
        Cmd::Verify => cmd_verify(cli, &out),
        Cmd::Search(args) => cmd_search(cli, &out, args),
        Cmd::Psc { size, search } => cmd_psc(cli, &out, *size, search),
        Cmd::Classes { size, filter } => cmd_classes(cli, &out, *size, *filter, false),
        Cmd::Filter { size } => cmd_classes(cli, &out, *size, None, true),
        Cmd::Decompose => cmd_decompose(cli, &out),
        Cmd::Catalog(CatalogCmd::VerifyAll { catalog, src }) => cmd_verify_all(&out, catalog, src),
        Cmd::Catalog(CatalogCmd::Ingest { input, output }) => cmd_ingest(input, output),
        Cmd::Dual => cmd_dual(cli, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(Fail::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Fail::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}
