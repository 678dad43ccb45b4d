//! The `cmdkit` command line.
//!
//! Exit codes: 0 success, 1 findings (validation violations, unmet
//! `--require`), 2 usage, input or analysis errors.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::change::{
    class_level_impact, diff, impact, methods_in_classes, reduction_ratio, ChangeSet,
};
use crate::cmd::{build_cmd, export_dot, ClassMessageDiagram, EdgeLabel};
use crate::coverage::{evaluate, Criterion, DEFAULT_CYCLE_CAP};
use crate::dsl::{parse_model, parse_traces_checked, WithFile};
use crate::model::{synthesize_default_constructors, validate, ProgramModel};
use crate::regression::{select_tests, SelectionGranularity, TraceStore};
use crate::stats::stats;
use crate::strategy::{generate_strategy, Scope, StrategyItem, TestStrategy};

pub const CYCLE_CAP_ENV: &str = "CMDKIT_CYCLE_CAP";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Table,
    Tsv,
}

#[derive(Debug, Parser)]
#[command(name = "cmdkit", version, about = "Class message diagram analyses")]
struct Cli {
    /// Output layout.
    #[arg(long, value_enum, global = true, default_value_t = Format::Table)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the class message diagram and list its nodes and edges.
    Build {
        model: PathBuf,
        /// Also write Graphviz text to this file.
        #[arg(long, value_name = "OUT")]
        dot: Option<PathBuf>,
    },
    /// Check a model for well-formedness.
    Validate { model: PathBuf },
    /// Classify the changes between two model versions.
    Diff { old: PathBuf, new: PathBuf },
    /// Nodes of the new version affected by the changes.
    Impact {
        old: PathBuf,
        new: PathBuf,
        /// Report the class-level baseline and the reduction ratio instead.
        #[arg(long)]
        class_level: bool,
    },
    /// Integration or regression test order.
    Order {
        model: PathBuf,
        /// Restrict to methods impacted by the changes from this version.
        #[arg(long, value_name = "OLD")]
        impacted_from: Option<PathBuf>,
        #[arg(long)]
        top_down: bool,
        /// Write the strategy as Graphviz text to this file.
        #[arg(long, value_name = "OUT")]
        dot: Option<PathBuf>,
    },
    /// Coverage of a trace set under one criterion.
    Coverage {
        model: PathBuf,
        traces: PathBuf,
        #[arg(long)]
        criterion: Criterion,
        /// Maximum number of simple cycles to enumerate.
        #[arg(long)]
        cycle_cap: Option<usize>,
        /// Exit 1 when the ratio is below this value.
        #[arg(long, value_name = "RATIO")]
        require: Option<f64>,
    },
    /// Select and prioritize stored tests for a new version.
    Select {
        old: PathBuf,
        new: PathBuf,
        traces: PathBuf,
        /// Specification tags whose tests are obsolete.
        #[arg(long, value_delimiter = ',')]
        changed_specs: Vec<String>,
        #[arg(long, default_value = "method")]
        granularity: SelectionGranularity,
    },
    /// Class-level and method-level graph metrics.
    Stats { model: PathBuf },
    /// Store index: test id, spec tag, criticality, depth.
    Index { model: PathBuf, traces: PathBuf },
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

type Outcome = Result<i32, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn model_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Parses a model file and synthesizes default constructors. The model id is
/// the file stem.
fn parse_file(path: &Path) -> Result<ProgramModel, Failure> {
    let text = read(path)?;
    let parsed =
        parse_model(&text).map_err(|e| Failure::input(format!("error: {}", e.with_file(path))))?;
    let mut model = synthesize_default_constructors(&parsed);
    model.model_id = model_id(path);
    Ok(model)
}

/// Parses, validates and builds the diagram of a model file.
fn load(path: &Path) -> Result<(ProgramModel, ClassMessageDiagram), Failure> {
    let model = parse_file(path)?;
    let report = validate(&model);
    if !report.is_valid() {
        let lines: Vec<String> = report
            .violations
            .iter()
            .map(|v| format!("{}: error: {v}", path.display()))
            .collect();
        return Err(Failure::input(lines.join("\n")));
    }
    let cmd =
        build_cmd(&model).map_err(|e| Failure::input(format!("{}: error: {e}", path.display())))?;
    Ok((model, cmd))
}

fn load_traces(path: &Path, model: &ProgramModel) -> Result<TraceStore, Failure> {
    let text = read(path)?;
    parse_traces_checked(&text, model)
        .map_err(|e| Failure::input(format!("error: {}", e.with_file(path))))
}

fn render(format: Format, rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    match format {
        Format::Tsv => {
            for row in rows {
                out.push_str(&row.join("\t"));
                out.push('\n');
            }
        }
        Format::Table => {
            let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
            let widths: Vec<usize> = (0..cols)
                .map(|c| {
                    rows.iter()
                        .filter_map(|r| r.get(c))
                        .map(|s| s.chars().count())
                        .max()
                        .unwrap_or(0)
                })
                .collect();
            for row in rows {
                let mut line = String::new();
                for (c, cell) in row.iter().enumerate() {
                    if c + 1 == row.len() {
                        line.push_str(cell);
                    } else {
                        line.push_str(&format!("{cell:<w$}  ", w = widths[c]));
                    }
                }
                out.push_str(line.trim_end());
                out.push('\n');
            }
        }
    }
    out
}

fn row<const N: usize>(cells: [&str; N]) -> Vec<String> {
    cells.iter().map(|s| s.to_string()).collect()
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn changes_between(
    old: &Path,
    new: &Path,
) -> Result<(ProgramModel, ClassMessageDiagram, ProgramModel, ChangeSet), Failure> {
    let (old_model, old_cmd) = load(old)?;
    let (new_model, new_cmd) = load(new)?;
    let changes = diff(&old_model, &old_cmd, &new_model, &new_cmd);
    Ok((new_model, new_cmd, old_model, changes))
}

fn strategy_text(format: Format, strategy: &TestStrategy) -> String {
    match format {
        Format::Table => strategy.report(),
        Format::Tsv => {
            let mut rows = Vec::new();
            for (k, level) in strategy.levels.iter().enumerate() {
                for item in level {
                    rows.push(vec![k.to_string(), "item".into(), item.to_string()]);
                    if let StrategyItem::Component { plan, .. } = item {
                        for stub in &plan.edges_to_stub {
                            for label in &stub.labels {
                                rows.push(vec![
                                    k.to_string(),
                                    "stub".into(),
                                    format!("{}#{label}", stub.from),
                                    stub.to.to_string(),
                                ]);
                            }
                        }
                    }
                }
            }
            render(Format::Tsv, &rows)
        }
    }
}

fn cycle_cap(flag: Option<usize>) -> Result<usize, Failure> {
    if let Some(cap) = flag {
        return Ok(cap);
    }
    match std::env::var(CYCLE_CAP_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::input(format!("error: {CYCLE_CAP_ENV}: not a number: `{v}`"))),
        Err(_) => Ok(DEFAULT_CYCLE_CAP),
    }
}

fn execute(cli: Cli, out: &mut String) -> Outcome {
    let format = cli.format;
    match cli.command {
        Command::Build { model, dot } => {
            let (_, cmd) = load(&model)?;
            let mut rows = Vec::new();
            for node in cmd.nodes() {
                let kind = if node.is_method() { "METHOD" } else { "DATA" };
                rows.push(row(["node", kind, &node.to_string()]));
            }
            for e in cmd.edges() {
                let label = match &e.label {
                    EdgeLabel::Message {
                        site,
                        binding: crate::cmd::Binding::DuplicatedFor(d),
                    } => format!("msg#{} dup({d})", site.ordinal),
                    other => match other.site() {
                        Some(site) => format!("{}#{}", other.short_name(), site.ordinal),
                        None => other.short_name().to_string(),
                    },
                };
                rows.push(vec![
                    "edge".into(),
                    label,
                    cmd.node(e.src).to_string(),
                    cmd.node(e.dst).to_string(),
                ]);
            }
            out.push_str(&render(format, &rows));
            if let Some(path) = dot {
                write_file(&path, &export_dot(&cmd))?;
            }
            Ok(0)
        }
        Command::Validate { model } => {
            let m = parse_file(&model)?;
            let report = validate(&m);
            if report.is_valid() {
                out.push_str("valid\n");
                return Ok(0);
            }
            let rows: Vec<Vec<String>> = report
                .violations
                .iter()
                .map(|v| vec![v.code.to_string(), v.message.clone()])
                .collect();
            out.push_str(&render(format, &rows));
            Ok(1)
        }
        Command::Diff { old, new } => {
            let (_, _, _, changes) = changes_between(&old, &new)?;
            let rows: Vec<Vec<String>> = changes
                .entries
                .iter()
                .map(|e| row([e.kind.as_str(), e.granularity.as_str(), &e.subject]))
                .collect();
            out.push_str(&render(format, &rows));
            Ok(0)
        }
        Command::Impact {
            old,
            new,
            class_level,
        } => {
            let (new_model, new_cmd, _, changes) = changes_between(&old, &new)?;
            let imp = impact(&new_cmd, &changes);
            let mut rows = Vec::new();
            if class_level {
                let classes = class_level_impact(&new_model, &new_cmd, &changes);
                let total = methods_in_classes(&new_model, &classes);
                for c in &classes {
                    rows.push(row(["CLASS", c]));
                }
                rows.push(row(["METHODS", &format!("{}/{total}", imp.methods.len())]));
                rows.push(row([
                    "REDUCTION",
                    &format!("{:.4}", reduction_ratio(imp.methods.len(), total)),
                ]));
            } else {
                rows.extend(imp.methods.iter().map(|m| row(["METHOD", &m.to_string()])));
                rows.extend(
                    imp.variables
                        .iter()
                        .map(|v| row(["VARIABLE", &v.to_string()])),
                );
            }
            out.push_str(&render(format, &rows));
            Ok(0)
        }
        Command::Order {
            model,
            impacted_from,
            top_down,
            dot,
        } => {
            let scope_and_cmd = match impacted_from {
                Some(old) => {
                    let (_, new_cmd, _, changes) = changes_between(&old, &model)?;
                    let imp = impact(&new_cmd, &changes);
                    (Scope::Impacted(imp), new_cmd)
                }
                None => (Scope::All, load(&model)?.1),
            };
            let (scope, cmd) = scope_and_cmd;
            let mut strategy = generate_strategy(&cmd, &scope);
            if top_down {
                strategy = strategy.reversed();
            }
            out.push_str(&strategy_text(format, &strategy));
            if let Some(path) = dot {
                write_file(&path, &strategy.export_dot())?;
            }
            Ok(0)
        }
        Command::Coverage {
            model,
            traces,
            criterion,
            cycle_cap: cap,
            require,
        } => {
            let (m, cmd) = load(&model)?;
            let store = load_traces(&traces, &m)?;
            let cap = cycle_cap(cap)?;
            let report = evaluate(&cmd, &store, criterion, cap)
                .map_err(|e| Failure::input(format!("error: {e}")))?;
            match format {
                Format::Table => out.push_str(&report.report()),
                Format::Tsv => {
                    let mut rows = vec![vec![
                        report.criterion.to_string(),
                        report.covered.to_string(),
                        report.required.to_string(),
                        format!("{:.4}", report.ratio),
                    ]];
                    rows.extend(report.uncovered.iter().map(|u| row(["uncovered", u])));
                    out.push_str(&render(Format::Tsv, &rows));
                }
            }
            match require {
                Some(r) if report.ratio < r => Ok(1),
                _ => Ok(0),
            }
        }
        Command::Select {
            old,
            new,
            traces,
            changed_specs,
            granularity,
        } => {
            let (_, new_cmd, old_model, changes) = changes_between(&old, &new)?;
            let store = load_traces(&traces, &old_model)?;
            let imp = impact(&new_cmd, &changes);
            let specs: BTreeSet<String> = changed_specs
                .into_iter()
                .filter(|s| !s.is_empty())
                .collect();
            let result = select_tests(&store, &imp, &specs, &old_model.model_id, granularity)
                .map_err(|e| Failure::input(format!("error: {e}")))?;
            let mut rows = Vec::new();
            for (tag, ids) in [
                ("RERUN", &result.rerun),
                ("OBSOLETE", &result.obsolete),
                ("RETAINED", &result.retained),
            ] {
                rows.extend(ids.iter().map(|id| row([tag, id])));
            }
            out.push_str(&render(format, &rows));
            Ok(0)
        }
        Command::Stats { model } => {
            let (m, cmd) = load(&model)?;
            let s = stats(&m, &cmd);
            let mut rows = vec![row(["Metric", "Class level", "CMD level"])];
            for (name, c, k) in s.rows() {
                rows.push(vec![name.to_string(), c.to_string(), k.to_string()]);
            }
            out.push_str(&render(format, &rows));
            Ok(0)
        }
        Command::Index { model, traces } => {
            let (m, _) = load(&model)?;
            let store = load_traces(&traces, &m)?;
            out.push_str(&store.index_text());
            Ok(0)
        }
    }
}

/// Runs the command line with explicit output streams.
pub fn run_with(
    args: impl IntoIterator<Item = impl Into<OsString> + Clone>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let mut out = String::new();
    let result = execute(cli, &mut out);
    let _ = stdout.write_all(out.as_bytes());
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "{}", f.message);
            f.code
        }
    }
}

/// Runs the command line against the process streams and returns the exit
/// code.
pub fn run_cli(args: impl IntoIterator<Item = impl Into<OsString> + Clone>) -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}
