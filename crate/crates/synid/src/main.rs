//! Command-line front end: identify causal effects, evaluate identified
//! signatures, verify them against the enumeration oracle, and render
//! string diagrams.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use std::collections::BTreeMap;
use std::io::IsTerminal;
use std::path::PathBuf;
use std::process::ExitCode;
use synid::semantics::{self, Interpretation};
use synid::{
    explain, identify, render, signature_from_admg, Admg, CausalQuery, Error, IdentifyResult,
    MonoidalSignature, NodeSet,
};

#[derive(Parser)]
#[command(
    name = "synid",
    about = "Syntactic causal identification on acyclic directed mixed graphs",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct QueryArgs {
    /// Cause variables, comma separated (the do() set)
    #[arg(long = "do", value_name = "NAMES", required = true)]
    do_: String,
    /// Effect variables, comma separated
    #[arg(long, value_name = "NAMES", required = true)]
    effect: String,
}

#[derive(Subcommand)]
enum Command {
    /// Derive the interventional signature, or report non-identifiability
    Identify {
        #[command(flatten)]
        query: QueryArgs,
        /// Print the derivation trace
        #[arg(long)]
        explain: bool,
        /// Emit a JSON envelope instead of text
        #[arg(long)]
        json: bool,
        /// Model file (.admg)
        model: PathBuf,
    },
    /// Evaluate the identified effect in a concrete interpretation
    Eval {
        #[command(flatten)]
        query: QueryArgs,
        /// Values for the intervened variables, e.g. X=0,Z=hi
        #[arg(long, value_name = "N=v,...", required = true)]
        value: String,
        /// prob, minplus or det
        #[arg(long, default_value = "prob")]
        interp: String,
        /// Seed for synthesized CPTs
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
        model: PathBuf,
    },
    /// Compare the identified formula against exhaustive enumeration on
    /// random models
    Check {
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
        model: PathBuf,
    },
    /// Emit a dot diagram of a model's or signature's maximal causal model
    Render {
        /// Collapse to the exterior signature first
        #[arg(long)]
        exterior: bool,
        /// Model file (.admg) or signature file
        input: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Identify {
            query,
            explain: want_explain,
            json,
            model,
        } => {
            let (graph, _) = load_model(&model)?;
            let q = parse_query(&query)?;
            let result = identify(&graph, &q)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&envelope(&result)).expect("json"));
            } else if want_explain {
                print!("{}", explain(&graph, &q, &result));
            } else {
                match &result {
                    IdentifyResult::Identified(id) => println!("{}", id.signature().to_text()),
                    IdentifyResult::NotIdentifiable { district, stuck, .. } => {
                        println!(
                            "not identifiable: district {{{}}} has no valid fixing sequence (stuck on {{{}}})",
                            district.join(", "),
                            stuck.join(", ")
                        );
                    }
                }
            }
            Ok(exit_for(&result))
        }
        Command::Eval {
            query,
            value,
            interp,
            seed,
            json,
            model,
        } => {
            let (graph, spec) = load_model(&model)?;
            let q = parse_query(&query)?;
            let interp: Interpretation = interp.parse()?;
            let result = identify(&graph, &q)?;
            let id = match &result {
                IdentifyResult::Identified(id) => id,
                IdentifyResult::NotIdentifiable { district, stuck, .. } => {
                    println!(
                        "not identifiable: district {{{}}} (stuck on {{{}}})",
                        district.join(", "),
                        stuck.join(", ")
                    );
                    return Ok(ExitCode::from(2));
                }
            };
            let exposed = id.exposed()?;
            let m = semantics::DiscreteModel::from_spec(spec, 2, seed)?;
            let joint = semantics::observational_joint(&m)?;
            let tables = semantics::module_tables(&joint, &exposed, interp)?;
            let mut a_values = parse_values(&value)?;
            for cause in &q.causes {
                if !a_values.contains_key(cause) {
                    return Err(Error::MissingValue(cause.clone()));
                }
            }
            // contexts the signature carries beyond the do() set are
            // irrelevant by construction; pin them for the enumeration
            let threading = synid::expr::thread(&exposed);
            for obj in threading.externals.objects() {
                if !a_values.contains_key(obj) {
                    a_values.insert(obj.clone(), default_value(&m, obj)?);
                }
            }
            let dist = semantics::evaluate(&exposed, &tables, &a_values, interp)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&dist_json(&dist)).expect("json"));
            } else {
                print_distribution(&q, &value, &dist, interp);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Check {
            query,
            trials,
            seed,
            json,
            model,
        } => {
            let (graph, _) = load_model(&model)?;
            let q = parse_query(&query)?;
            let result = identify(&graph, &q)?;
            if let IdentifyResult::NotIdentifiable { district, stuck, .. } = &result {
                if json {
                    println!(
                        "{}",
                        serde_json::json!({
                            "status": "skip",
                            "reason": "not identifiable",
                            "district": district,
                            "stuck": stuck,
                        })
                    );
                } else {
                    println!(
                        "{} not identifiable: district {{{}}} (stuck on {{{}}})",
                        paint("SKIP", "33"),
                        district.join(", "),
                        stuck.join(", ")
                    );
                }
                return Ok(ExitCode::from(2));
            }
            let report = semantics::check_identification(&graph, &q, trials, seed)?;
            if json {
                println!(
                    "{}",
                    serde_json::json!({
                        "status": if report.passed() { "pass" } else { "fail" },
                        "trials": report.trials,
                        "assignments_checked": report.assignments_checked,
                        "max_deviation": report.max_deviation,
                        "flagged_rows": report.flagged_rows,
                    })
                );
            } else {
                let verdict = if report.passed() {
                    paint("PASS", "32")
                } else {
                    paint("FAIL", "31")
                };
                println!(
                    "{verdict} max deviation {:.3e} over {} trials ({} assignments, {} flagged rows)",
                    report.max_deviation, report.trials, report.assignments_checked, report.flagged_rows
                );
            }
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Render { exterior, input } => {
            let sig = load_signature_or_model(&input)?;
            let dot = if exterior {
                render::render_exterior_dot(&sig)?
            } else {
                render::render_dot(&sig)
            };
            print!("{dot}");
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn exit_for(result: &IdentifyResult) -> ExitCode {
    if result.is_identified() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn load_model(path: &PathBuf) -> Result<(Admg, semantics::ModelSpec), Error> {
    let src = std::fs::read_to_string(path).map_err(|e| Error::Parse {
        line: 0,
        msg: format!("cannot read {}: {e}", path.display()),
    })?;
    let spec = semantics::parse_model(&src)?;
    Ok((spec.graph.clone(), spec))
}

fn load_signature_or_model(path: &PathBuf) -> Result<MonoidalSignature, Error> {
    let src = std::fs::read_to_string(path).map_err(|e| Error::Parse {
        line: 0,
        msg: format!("cannot read {}: {e}", path.display()),
    })?;
    let is_model = src.lines().any(|l| {
        let l = l.trim();
        l.starts_with("node ") || l.starts_with("edge ")
    });
    if is_model {
        let spec = semantics::parse_model(&src)?;
        Ok(signature_from_admg(&spec.graph))
    } else {
        MonoidalSignature::parse_text(&src)
    }
}

fn parse_query(args: &QueryArgs) -> Result<CausalQuery, Error> {
    CausalQuery::new(parse_names(&args.effect), parse_names(&args.do_))
}

fn parse_names(s: &str) -> NodeSet {
    s.split(',')
        .map(|n| n.trim().to_string())
        .filter(|n| !n.is_empty())
        .collect()
}

fn parse_values(s: &str) -> Result<BTreeMap<String, String>, Error> {
    let mut out = BTreeMap::new();
    for part in s.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (name, value) = part.split_once('=').ok_or_else(|| Error::Parse {
            line: 0,
            msg: format!("expected NAME=value, got `{part}`"),
        })?;
        out.insert(name.trim().to_string(), value.trim().to_string());
    }
    Ok(out)
}

fn default_value(m: &semantics::DiscreteModel, obj: &str) -> Result<String, Error> {
    let mut base = obj.to_string();
    while !m.graph().contains(&base) && base.ends_with('\'') {
        base.pop();
    }
    Ok(m.domain(&base)?[0].clone())
}

fn print_distribution(
    q: &CausalQuery,
    value: &str,
    dist: &semantics::Distribution,
    interp: Interpretation,
) {
    let effects: Vec<&String> = dist.vars().iter().collect();
    let what = match interp {
        Interpretation::Probability => "p",
        Interpretation::MinPlus => "cost",
        Interpretation::Deterministic => "value",
    };
    println!(
        "{what}({} | do({}))",
        effects.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", "),
        value
    );
    let _ = q;
    let cards: Vec<usize> = dist.domains().iter().map(|d| d.len()).collect();
    let mut labels: Vec<(String, f64)> = Vec::new();
    let mut width = 0;
    let mut idx = vec![0usize; cards.len()];
    for v in dist.values() {
        let label = dist
            .vars()
            .iter()
            .zip(dist.domains())
            .zip(&idx)
            .map(|((var, dom), &i)| format!("{var}={}", dom[i]))
            .collect::<Vec<_>>()
            .join(" ");
        width = width.max(label.len());
        labels.push((label, *v));
        // advance the odometer, last variable fastest
        for i in (0..cards.len()).rev() {
            idx[i] += 1;
            if idx[i] < cards[i] {
                break;
            }
            idx[i] = 0;
        }
    }
    for (label, v) in labels {
        if interp == Interpretation::Deterministic && v.abs() < 1e-9 {
            continue;
        }
        println!("  {label:<width$}  {v:.9}");
    }
}

fn envelope(result: &IdentifyResult) -> serde_json::Value {
    match result {
        IdentifyResult::Identified(id) => serde_json::json!({
            "status": "identified",
            "y_star": id.y_star.iter().collect::<Vec<_>>(),
            "districts": id.districts.iter().map(|t| serde_json::json!({
                "district": t.district,
                "plan": t.plan.to_string(),
                "signature": t.simplified.to_json(),
            })).collect::<Vec<_>>(),
            "signature": id.signature().to_json(),
        }),
        IdentifyResult::NotIdentifiable {
            district,
            stuck,
            pub_y_star,
        } => serde_json::json!({
            "status": "not_identifiable",
            "y_star": pub_y_star.iter().collect::<Vec<_>>(),
            "district": district,
            "stuck": stuck,
        }),
    }
}

fn dist_json(dist: &semantics::Distribution) -> serde_json::Value {
    let cards: Vec<usize> = dist.domains().iter().map(|d| d.len()).collect();
    let mut entries = Vec::new();
    let mut idx = vec![0usize; cards.len()];
    for v in dist.values() {
        let assign: serde_json::Map<String, serde_json::Value> = dist
            .vars()
            .iter()
            .zip(dist.domains())
            .zip(&idx)
            .map(|((var, dom), &i)| (var.clone(), serde_json::json!(dom[i])))
            .collect();
        entries.push(serde_json::json!({"assignment": assign, "value": v}));
        for i in (0..cards.len()).rev() {
            idx[i] += 1;
            if idx[i] < cards[i] {
                break;
            }
            idx[i] = 0;
        }
    }
    serde_json::json!({"vars": dist.vars(), "table": entries})
}

/// ANSI colour unless `SYNID_COLOR=0` or stdout is not a terminal.
fn paint(s: &str, code: &str) -> String {
    let enabled = std::env::var("SYNID_COLOR").map(|v| v != "0").unwrap_or(true)
        && std::io::stdout().is_terminal();
    if enabled {
        format!("\x1b[{code}m{s}\x1b[0m")
    } else {
        s.to_string()
    }
}
