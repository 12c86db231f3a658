use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use blm::audit::{digest, impact, AuditLog, AuditRecord, Verdict};
use blm::blps::{self, BlpsError};
use blm::contract::{load_contract, Contract, ContractError};
use blm::integrate::{integrate, BindingSpec, IntegrationError};
use blm::props::{evaluate_all, sorted, PropError, PropertySets};
use blm::{abstract_flow, build_flow, parse_source, print_model, ElementIndex, ElementKind, FlowError, LogicModel};

#[derive(Parser)]
#[command(name = "blm", version, about = "Business logic models: flows, properties, BLPS, integration")]
struct Cli {
    /// Append an audit record for this invocation to the given log.
    #[arg(long, global = true, value_name = "PATH")]
    audit: Option<PathBuf>,
    /// Actor name written to the audit log.
    #[arg(long, global = true, default_value = "blm")]
    actor: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Xml,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a model and summarize its services.
    Parse { file: PathBuf },
    /// Print flow productions.
    Flow {
        file: PathBuf,
        #[arg(long = "abstract")]
        abstract_view: bool,
    },
    /// Evaluate property sets under a contract.
    Eval {
        file: PathBuf,
        #[arg(long)]
        contract: Option<PathBuf>,
        /// Write the BLPS document here.
        #[arg(long, value_name = "OUT")]
        blps: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Restrict the report to one service.
        #[arg(long)]
        service: Option<String>,
    },
    /// Integrate two models through a binding.
    Integrate {
        source: PathBuf,
        target: PathBuf,
        /// `service.INDEX->target(var, var:param, ...)`
        #[arg(long)]
        bind: String,
        #[arg(long)]
        contract: Option<PathBuf>,
        /// Name of the integrated service.
        #[arg(long)]
        name: String,
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
    /// Compare two versions of a model and report property impact.
    Diff {
        old: PathBuf,
        new: PathBuf,
        #[arg(long)]
        contract: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

struct Failure {
    code: u8,
    category: &'static str,
    detail: String,
}

impl Failure {
    fn new(code: u8, category: &'static str, detail: impl Into<String>) -> Failure {
        Failure { code, category, detail: detail.into() }
    }

    fn usage(detail: impl Into<String>) -> Failure {
        Failure::new(4, "usage", detail)
    }
}

/// Successful run: stdout text, exit code (0 or 1), and the digest of the primary input.
struct Outcome {
    stdout: String,
    code: u8,
    digest: String,
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::new(3, "io", format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::new(3, "io", format!("{}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<LogicModel, Failure> {
    let text = read(path)?;
    if path.extension().is_some_and(|e| e == "xml") {
        let doc = blps::deserialize(&text).map_err(|e| blps_failure(path, e))?;
        return blps::to_model(&doc).map_err(|e| blps_failure(path, e));
    }
    parse_source(&text).map_err(|e| Failure::new(2, "parse", e.in_file(&path.display().to_string()).to_string()))
}

fn blps_failure(path: &Path, e: BlpsError) -> Failure {
    Failure::new(2, "schema", format!("{}: {e}", path.display()))
}

fn load_contract_file(path: Option<&Path>) -> Result<Contract, Failure> {
    match path {
        None => Ok(Contract::default()),
        Some(p) => load_contract(&read(p)?).map_err(|e| match e {
            ContractError::UnknownIndex(_) => Failure::new(1, "contract", format!("{}: {e}", p.display())),
            _ => Failure::new(2, "contract", format!("{}: {e}", p.display())),
        }),
    }
}

fn flow_failure(e: FlowError) -> Failure {
    Failure::new(2, "flow", e.to_string())
}

fn prop_failure(e: PropError) -> Failure {
    match e {
        PropError::UnknownIndex(_) => Failure::new(1, "contract", e.to_string()),
        PropError::Flow(f) => flow_failure(f),
    }
}

fn model_digest(model: &LogicModel) -> String {
    digest(print_model(model).as_bytes())
}

fn list(items: &[String]) -> String {
    items.join(",")
}

fn cmd_parse(file: &Path) -> Result<Outcome, Failure> {
    let model = load_model(file)?;
    let mut out = String::new();
    for svc in model.services.values() {
        let n = svc.elements.len();
        let _ = write!(out, "{}: {n} element{}", svc.name, if n == 1 { "" } else { "s" });
        let counts: Vec<String> = [ElementKind::BusinessFunction, ElementKind::DataRule, ElementKind::ConditionalRule]
            .into_iter()
            .map(|k| (k, svc.elements.iter().filter(|e| e.kind == k).count()))
            .filter(|(_, c)| *c > 0)
            .map(|(k, c)| format!("{c} {k}"))
            .collect();
        if !counts.is_empty() {
            let _ = write!(out, " ({})", counts.join(", "));
        }
        out.push('\n');
    }
    Ok(Outcome { stdout: out, code: 0, digest: model_digest(&model) })
}

fn cmd_flow(file: &Path, abstract_view: bool) -> Result<Outcome, Failure> {
    let model = load_model(file)?;
    let graph = if abstract_view { abstract_flow(&model) } else { build_flow(&model) }.map_err(flow_failure)?;
    Ok(Outcome { stdout: graph.to_string(), code: 0, digest: model_digest(&model) })
}

fn locals(set: &BTreeSet<ElementIndex>, service: &str) -> Vec<String> {
    sorted(set).into_iter().filter(|ix| ix.service == service).map(|ix| ix.local).collect()
}

fn property_lines(out: &mut String, props: &PropertySets, service: &str) {
    let _ = writeln!(out, "CF={}", list(&locals(&props.cf, service)));
    let _ = writeln!(out, "TF={}", list(&locals(&props.tf, service)));
    let _ = writeln!(out, "AF={}", list(&locals(&props.af, service)));
    let _ = writeln!(out, "NAF={}", list(&locals(&props.naf, service)));
}

fn cmd_eval(
    file: &Path,
    contract: Option<&Path>,
    blps_out: Option<&Path>,
    format: Format,
    service: Option<&str>,
) -> Result<Outcome, Failure> {
    let model = load_model(file)?;
    let contract = load_contract_file(contract)?;
    let props = evaluate_all(&model, &contract).map_err(prop_failure)?;
    let services: Vec<&str> = match service {
        Some(s) if model.service(s).is_none() => {
            return Err(Failure::usage(format!("no service `{s}` in {}", file.display())))
        }
        Some(s) => vec![s],
        None => model.services.keys().map(String::as_str).collect(),
    };
    let docs = services
        .iter()
        .map(|s| blps::generate_blps(&model, &props, s).map(|d| blps::serialize(&d)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| blps_failure(file, e))?;

    let mut out = String::new();
    match format {
        Format::Text => {
            for s in &services {
                let _ = writeln!(out, "service {s}");
                property_lines(&mut out, &props, s);
            }
            let _ = writeln!(out, "total_cost={}", props.total_cost);
        }
        Format::Xml => docs.iter().for_each(|d| out.push_str(d)),
    }
    if let Some(path) = blps_out {
        match docs.as_slice() {
            [one] => write(path, one)?,
            _ => return Err(Failure::usage("--blps needs exactly one service; use --service")),
        }
    }
    let all_computable =
        model.elements().filter(|e| services.contains(&e.index.service.as_str())).all(|e| props.cf.contains(&e.index));
    Ok(Outcome { stdout: out, code: if all_computable { 0 } else { 1 }, digest: model_digest(&model) })
}

fn integration_failure(e: IntegrationError) -> Failure {
    match e {
        IntegrationError::BindingSyntax(_) => Failure::usage(e.to_string()),
        IntegrationError::Flow(f) => flow_failure(f),
        IntegrationError::ServiceClash(_) => Failure::new(2, "integration", e.to_string()),
        _ => Failure::new(1, "integration", e.to_string()),
    }
}

fn cmd_integrate(
    source: &Path,
    target: &Path,
    bind: &str,
    contract: Option<&Path>,
    name: &str,
    output: Option<&Path>,
) -> Result<Outcome, Failure> {
    let binding = BindingSpec::parse(bind).map_err(integration_failure)?;
    let a = load_model(source)?;
    let b = load_model(target)?;
    let contract = load_contract_file(contract)?;
    let result = integrate(&a, &b, &binding, &contract).map_err(integration_failure)?;
    let mut out = String::new();
    if !result.violations.is_empty() {
        for v in &result.violations {
            let _ = writeln!(out, "{v}");
        }
        return Ok(Outcome { stdout: out, code: 1, digest: model_digest(&result.original) });
    }
    let doc = blps::generate_integrated_blps(&result.model, &result.properties, name);
    let text = blps::serialize(&doc);
    if let Some(path) = output {
        write(path, &text)?;
    }
    let _ = writeln!(out, "integrated {name}");
    let qualified = |s: &BTreeSet<ElementIndex>| sorted(s).iter().map(|i| i.to_string()).collect::<Vec<_>>();
    let _ = writeln!(out, "CF={}", list(&qualified(&result.properties.cf)));
    let _ = writeln!(out, "TF={}", list(&qualified(&result.properties.tf)));
    let _ = writeln!(out, "total_cost={}", result.properties.total_cost);
    Ok(Outcome { stdout: out, code: 0, digest: digest(text.as_bytes()) })
}

fn xml_attr(v: &str) -> String {
    quick_xml::escape::partial_escape(v).replace('"', "&quot;")
}

fn cmd_diff(old: &Path, new: &Path, contract: Option<&Path>, format: Format) -> Result<Outcome, Failure> {
    let a = load_model(old)?;
    let b = load_model(new)?;
    let contract = load_contract_file(contract)?;
    let report = impact(&a, &b, &contract).map_err(prop_failure)?;
    let cs = &report.changes;
    let deltas = [("CF", &report.cf), ("TF", &report.tf), ("AF", &report.af), ("NAF", &report.naf)];
    let mut out = String::new();
    match format {
        Format::Text => {
            let _ = writeln!(out, "changes: +{} -{} ~{}", cs.added.len(), cs.removed.len(), cs.modified.len());
            for ix in &cs.added {
                let _ = writeln!(out, "added {ix}");
            }
            for ix in &cs.removed {
                let _ = writeln!(out, "removed {ix}");
            }
            for (ix, fields) in &cs.modified {
                for d in fields {
                    let _ = writeln!(out, "modified {ix} {}: {:?} -> {:?}", d.field, d.old, d.new);
                }
            }
            for (name, d) in deltas {
                let _ = writeln!(out, "{name} {d}");
            }
            let _ = writeln!(out, "{}", report.verdict);
        }
        Format::Xml => {
            let _ = writeln!(out, "<impact verdict=\"{}\">", report.verdict);
            for ix in &cs.added {
                let _ = writeln!(out, "  <added index=\"{ix}\"/>");
            }
            for ix in &cs.removed {
                let _ = writeln!(out, "  <removed index=\"{ix}\"/>");
            }
            for (ix, fields) in &cs.modified {
                let _ = writeln!(out, "  <modified index=\"{ix}\">");
                for d in fields {
                    let _ = writeln!(
                        out,
                        "    <field name=\"{}\" old=\"{}\" new=\"{}\"/>",
                        xml_attr(&d.field),
                        xml_attr(&d.old),
                        xml_attr(&d.new)
                    );
                }
                let _ = writeln!(out, "  </modified>");
            }
            for (name, d) in deltas {
                let join =
                    |s: &BTreeSet<ElementIndex>| sorted(s).iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",");
                let _ = writeln!(
                    out,
                    "  <delta set=\"{name}\" entered=\"{}\" left=\"{}\"/>",
                    join(&d.entered),
                    join(&d.left)
                );
            }
            out.push_str("</impact>\n");
        }
    }
    let code = if report.verdict == Verdict::PropertiesPreserved { 0 } else { 1 };
    Ok(Outcome { stdout: out, code, digest: model_digest(&b) })
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    match &cli.command {
        Command::Parse { file } => cmd_parse(file),
        Command::Flow { file, abstract_view } => cmd_flow(file, *abstract_view),
        Command::Eval { file, contract, blps, format, service } => {
            cmd_eval(file, contract.as_deref(), blps.as_deref(), *format, service.as_deref())
        }
        Command::Integrate { source, target, bind, contract, name, output } => {
            cmd_integrate(source, target, bind, contract.as_deref(), name, output.as_deref())
        }
        Command::Diff { old, new, contract, format } => cmd_diff(old, new, contract.as_deref(), *format),
    }
}

fn operation(cmd: &Command) -> &'static str {
    match cmd {
        Command::Parse { .. } => "parse",
        Command::Flow { .. } => "flow",
        Command::Eval { .. } => "eval",
        Command::Integrate { .. } => "integrate",
        Command::Diff { .. } => "diff",
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or_default().trim_start_matches("error: ");
            eprintln!("error: usage: {first}");
            eprint!("{}", rendered.split_once('\n').map(|(_, rest)| rest).unwrap_or_default());
            return ExitCode::from(4);
        }
    };
    let result = run(&cli);
    let (code, digest, summary) = match &result {
        Ok(o) => {
            print!("{}", o.stdout);
            (o.code, o.digest.clone(), format!("exit {}", o.code))
        }
        Err(f) => {
            eprintln!("error: {}: {}", f.category, f.detail);
            (f.code, String::from("-"), format!("exit {} {}", f.code, f.category))
        }
    };
    if let Some(path) = &cli.audit {
        let rec = AuditRecord::new(&cli.actor, operation(&cli.command), &digest, &summary);
        if let Err(e) = AuditLog::new(path).record(rec) {
            eprintln!("error: io: {e}");
            return ExitCode::from(3);
        }
    }
    ExitCode::from(code)
}
