//! The `knowctx` command line.
//!
//! Exit codes: 0 success or feasible, 1 negative verdict, 2 usage or parse
//! error, 3 runtime error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::engine::OutcomeDistribution;
use crate::feasibility::{assess, FeasibilityReport, ShapeSpec, Verdict};
use crate::format::{complex6, csv_row, pairs, sig6, table};
use crate::oracle::{classicalize, mc_sample_classical, FrequencyTable};
use crate::random::GENERATOR;
use crate::rule::ProbabilityRule;
use crate::scenario::{demo, parse_scenario, run_events, ScenarioFile, Trace, DEMOS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleName {
    Classical,
    Born,
}

/// Inclusive range of set sizes, written `a..b`, `a-b` or `a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeRange {
    pub lo: usize,
    pub hi: usize,
}

impl std::str::FromStr for SizeRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s
            .split_once("..")
            .or_else(|| s.split_once('-'))
            .unwrap_or((s, s));
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("'{t}' is not a set size"))
        };
        let (lo, hi) = (parse(a)?, parse(b)?);
        if lo == 0 || lo > hi {
            return Err(format!("range {lo}..{hi} is empty or starts below 1"));
        }
        Ok(SizeRange { lo, hi })
    }
}

#[derive(Debug, Parser)]
#[command(name = "knowctx", version, about = "Knowability-aware probabilities over networks of alternatives")]
pub struct Cli {
    #[arg(long, global = true, value_enum, default_value = "table")]
    pub format: OutputFormat,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Replay a scenario file and print its state trace and distribution.
    Eval {
        #[arg(long)]
        scenario: PathBuf,
        /// Evaluate under |x|^(2 gamma) instead of |x|^2.
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Decide whether a rule has enough freedom for an (M, M') context.
    Feasibility {
        /// Set sizes as `M,M'`.
        #[arg(long)]
        shape: ShapeSpec,
        #[arg(long, conflicts_with = "rule", required_unless_present = "rule")]
        gamma: Option<f64>,
        #[arg(long, value_enum)]
        rule: Option<RuleName>,
        #[arg(long, default_value_t = 32)]
        restarts: usize,
        #[arg(long, env = "KNOWCTX_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Feasibility verdicts over a grid of shapes and exponents.
    Scan {
        #[arg(long, default_value = "1..4")]
        m: SizeRange,
        #[arg(long = "m-prime", default_value = "1..4")]
        m_prime: SizeRange,
        /// Comma-separated exponents.
        #[arg(long, default_value = "0.5,1,1.5,2")]
        gammas: String,
        #[arg(long, default_value_t = 32)]
        restarts: usize,
        #[arg(long, env = "KNOWCTX_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Monte Carlo frequencies against path-enumerated probabilities.
    Mc {
        #[arg(long, conflicts_with = "demo", required_unless_present = "demo")]
        scenario: Option<PathBuf>,
        #[arg(long)]
        demo: Option<String>,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        /// Raise every layer to level 3 before sampling.
        #[arg(long)]
        classicalize: bool,
        #[arg(long, env = "KNOWCTX_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Run a built-in interferometer scenario.
    Demo {
        /// One of mz-a, mz-b, mz-c, delayed-choice, eraser.
        name: String,
        /// Also write the scenario file here.
        #[arg(long)]
        export: Option<PathBuf>,
    },
}

struct Failure {
    code: i32,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

fn runtime(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_RUNTIME,
        message: message.into(),
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(&cli) {
        Ok((text, code)) => {
            let written = match &cli.output {
                Some(path) => std::fs::write(path, &text)
                    .map_err(|e| format!("cannot write {}: {e}", path.display())),
                None => out.write_all(text.as_bytes()).map_err(|e| e.to_string()),
            };
            match written {
                Ok(()) => code,
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    EXIT_RUNTIME
                }
            }
        }
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn execute(cli: &Cli) -> Result<(String, i32), Failure> {
    let fmt = cli.format;
    match &cli.command {
        Command::Eval { scenario, gamma } => {
            let rule = rule_from(*gamma)?;
            let s = load(scenario, rule)?;
            let trace = run_events(&s.ctx, &s.events).map_err(|e| runtime(e.to_string()))?;
            Ok((render_trace(&trace, &s.file, fmt), EXIT_OK))
        }
        Command::Demo { name, export } => {
            let (ctx, events) = demo(name).map_err(|e| usage(e.to_string()))?;
            let file = ScenarioFile::from_context(&ctx, &events);
            if let Some(path) = export {
                std::fs::write(path, file.to_json_pretty())
                    .map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))?;
            }
            let trace = run_events(&ctx, &events).map_err(|e| runtime(e.to_string()))?;
            Ok((render_trace(&trace, &file, fmt), EXIT_OK))
        }
        Command::Feasibility {
            shape,
            gamma,
            rule,
            restarts,
            seed,
        } => {
            if *restarts == 0 {
                return Err(usage("--restarts must be at least 1"));
            }
            let rule = match rule {
                Some(RuleName::Classical) => ProbabilityRule::Classical,
                Some(RuleName::Born) => ProbabilityRule::BORN,
                None => rule_from(*gamma)?,
            };
            let report = assess(*shape, rule, *restarts, *seed).map_err(|e| usage(e.to_string()))?;
            let code = if report.verdict.is_feasible() {
                EXIT_OK
            } else {
                EXIT_NEGATIVE
            };
            Ok((render_feasibility(&report, fmt), code))
        }
        Command::Scan {
            m,
            m_prime,
            gammas,
            restarts,
            seed,
        } => {
            if *restarts == 0 {
                return Err(usage("--restarts must be at least 1"));
            }
            let gammas = parse_gammas(gammas)?;
            let mut cells = Vec::new();
            for mm in m.lo..=m.hi {
                for mp in m_prime.lo..=m_prime.hi {
                    let shape = ShapeSpec::new(mm, mp).map_err(|e| usage(e.to_string()))?;
                    for &g in &gammas {
                        let rule = ProbabilityRule::gamma(g).map_err(|e| usage(e.to_string()))?;
                        let report =
                            assess(shape, rule, *restarts, *seed).map_err(|e| runtime(e.to_string()))?;
                        cells.push(ScanCell::from_report(g, &report));
                    }
                }
            }
            Ok((render_scan(&cells, *restarts, *seed, fmt), EXIT_OK))
        }
        Command::Mc {
            scenario,
            demo: demo_name,
            trials,
            classicalize: raise,
            seed,
        } => {
            let ctx = match (scenario, demo_name) {
                (Some(path), _) => load(path, ProbabilityRule::BORN)?.ctx,
                (None, Some(name)) => demo(name).map_err(|e| usage(e.to_string()))?.0,
                (None, None) => return Err(usage("give --scenario or --demo")),
            };
            let ctx = if *raise {
                classicalize(&ctx).map_err(|e| runtime(e.to_string()))?
            } else {
                ctx
            };
            let t = mc_sample_classical(&ctx, *trials, *seed).map_err(|e| runtime(e.to_string()))?;
            Ok((render_mc(&t, fmt), EXIT_OK))
        }
    }
}

fn rule_from(gamma: Option<f64>) -> Result<ProbabilityRule, Failure> {
    match gamma {
        None => Ok(ProbabilityRule::BORN),
        Some(g) => ProbabilityRule::gamma(g).map_err(|e| usage(e.to_string())),
    }
}

fn parse_gammas(s: &str) -> Result<Vec<f64>, Failure> {
    let gammas = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| usage(format!("'{t}' is not an exponent")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if gammas.is_empty() {
        return Err(usage("--gammas needs at least one exponent"));
    }
    Ok(gammas)
}

fn load(path: &Path, rule: ProbabilityRule) -> Result<crate::scenario::Scenario, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    parse_scenario(&text, rule).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize") + "\n"
}

fn dist_cells(d: Option<&OutcomeDistribution>, n: usize) -> Vec<String> {
    match d {
        Some(d) => d.probs.iter().map(|&p| sig6(p)).collect(),
        None => vec!["-".into(); n],
    }
}

fn describe(d: &OutcomeDistribution) -> String {
    let kind = serde_json::to_value(d.kind)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default();
    format!("layer {}, {}, {}, {}", d.layer, d.method, kind, d.conditioning)
}

fn render_trace(trace: &Trace, file: &ScenarioFile, fmt: OutputFormat) -> String {
    let labels: Vec<String> = trace
        .steps
        .iter()
        .find_map(|s| s.distribution.as_ref().map(|d| d.labels.clone()))
        .unwrap_or_default();
    match fmt {
        OutputFormat::Json => json(trace),
        OutputFormat::Csv => {
            let mut head = vec!["record", "n", "event", "state", "method"];
            head.extend(labels.iter().map(String::as_str));
            let mut s = csv_row(&head);
            let row = |record: &str, n: String, event: String, state: String, d: Option<&OutcomeDistribution>| {
                let mut r = vec![
                    record.to_string(),
                    n,
                    event,
                    state,
                    d.map(|d| d.method.to_string()).unwrap_or_default(),
                ];
                match d {
                    Some(d) => r.extend(d.probs.iter().map(|p| p.to_string())),
                    None => r.extend(labels.iter().map(|_| String::new())),
                }
                csv_row(&r)
            };
            for st in &trace.steps {
                s += &row(
                    "step",
                    st.n.map(|n| n.to_string()).unwrap_or_default(),
                    st.event.clone().unwrap_or_default(),
                    st.state.clone(),
                    st.distribution.as_ref(),
                );
            }
            if let Some(d) = &trace.distribution {
                s += &row("final", String::new(), String::new(), String::new(), Some(d));
            }
            s
        }
        OutputFormat::Table => {
            let layers = file
                .layers
                .iter()
                .map(|l| format!("{} (L{})", l.size, l.knowability))
                .collect::<Vec<_>>()
                .join(", ");
            let mut s = pairs(&[
                ("scenario", trace.name.clone()),
                ("rule", trace.rule.to_string()),
                ("layers", layers),
            ]);
            s.push('\n');
            let mut head = vec!["n", "event", "state"];
            head.extend(labels.iter().map(String::as_str));
            let rows: Vec<Vec<String>> = trace
                .steps
                .iter()
                .map(|st| {
                    let mut r = vec![
                        st.n.map(|n| n.to_string()).unwrap_or_else(|| "-".into()),
                        st.event.clone().unwrap_or_else(|| "start".into()),
                        st.state.clone(),
                    ];
                    r.extend(dist_cells(st.distribution.as_ref(), labels.len()));
                    r
                })
                .collect();
            s += &table(&head, &rows);
            if let Some(last) = trace.steps.last() {
                if !last.pending.is_empty() {
                    let p: Vec<String> = last.pending.iter().map(|k| k.to_string()).collect();
                    s += &format!("\npending layers: {}\n", p.join(", "));
                }
            }
            if let Some(d) = &trace.distribution {
                s += &format!("\ndistribution: {}\n", describe(d));
                let rows: Vec<Vec<String>> = d
                    .labels
                    .iter()
                    .zip(&d.probs)
                    .map(|(l, p)| vec![l.clone(), sig6(*p)])
                    .collect();
                s += &table(&["alternative", "value"], &rows);
                for w in &d.warnings {
                    s += &format!("warning: {w}\n");
                }
            }
            s
        }
    }
}

fn render_feasibility(r: &FeasibilityReport, fmt: OutputFormat) -> String {
    let residual = r.verdict.residual();
    match fmt {
        OutputFormat::Json => json(r),
        OutputFormat::Csv => {
            let mut s = format!("# seed={} generator={} restarts={}\n", r.seed, r.generator, r.trace.restarts);
            s += &csv_row(&[
                "m", "m_prime", "rule", "verdict", "residual", "unknowns", "residuals", "available",
                "required", "jacobian_rank", "propensity_freedom",
            ]);
            let opt = |v: Option<String>| v.unwrap_or_default();
            s += &csv_row(&[
                r.shape.m.to_string(),
                r.shape.m_prime.to_string(),
                r.rule.to_string(),
                r.verdict.name().to_string(),
                opt(residual.map(|x| x.to_string())),
                r.unknowns.to_string(),
                r.residuals.to_string(),
                opt(r.dof.map(|d| d.available.to_string())),
                opt(r.dof.map(|d| d.required.to_string())),
                opt(r.jacobian_rank.map(|x| x.to_string())),
                opt(r.propensity_freedom.map(|x| x.to_string())),
            ]);
            s
        }
        OutputFormat::Table => {
            let mut rows: Vec<(&str, String)> = vec![
                ("seed", format!("{} ({})", r.seed, r.generator)),
                ("shape", r.shape.to_string()),
                ("rule", r.rule.to_string()),
                ("verdict", r.verdict.name().to_string()),
            ];
            match &r.verdict {
                Verdict::Feasible { residual, restart, .. } => {
                    rows.push(("residual", sig6(*residual)));
                    rows.push(("restart", restart.to_string()));
                }
                Verdict::NoSolutionFound {
                    best_residual,
                    threshold,
                    certified,
                    ..
                } => {
                    rows.push(("best residual", sig6(*best_residual)));
                    rows.push((
                        "certified",
                        format!("{certified} (threshold {})", sig6(*threshold)),
                    ));
                }
                Verdict::AnalyticallyInadmissible { reason } => rows.push(("reason", reason.clone())),
            }
            if let Some(mode) = r.mode {
                rows.push(("system", format!("{} unknowns, {} residuals ({})", r.unknowns, r.residuals, mode_name(mode))));
            }
            if let Some(d) = r.dof {
                rows.push((
                    "dof",
                    format!(
                        "{} unknowns, {} conditions, available {}, required {}",
                        d.unknowns, d.conditions, d.available, d.required
                    ),
                ));
                rows.push((
                    "first layer",
                    format!("available {}, required {}", d.first_layer_available, d.first_layer_required),
                ));
            }
            rows.push(("M' >= M - 1", r.born_bound.to_string()));
            if let Some(k) = r.jacobian_rank {
                rows.push(("jacobian rank", k.to_string()));
            }
            if let Some(k) = r.propensity_freedom {
                rows.push(("propensity freedom", k.to_string()));
            }
            if r.trace.restarts > 0 {
                rows.push((
                    "restarts",
                    format!(
                        "{} ({} converged, {} iterations)",
                        r.trace.restarts, r.trace.converged, r.trace.total_iterations
                    ),
                ));
            }
            let mut s = pairs(&rows);
            let w = match &r.verdict {
                Verdict::Feasible { witness, .. } => Some(("witness", witness)),
                Verdict::NoSolutionFound { best, .. } => Some(("best point", best)),
                _ => None,
            };
            if let Some((title, rows)) = w {
                s += &format!("\n{title}\n");
                let cells: Vec<Vec<String>> = rows
                    .iter()
                    .enumerate()
                    .map(|(i, row)| {
                        std::iter::once(format!("A{}", i + 1))
                            .chain(row.iter().map(|&c| complex6(c)))
                            .collect()
                    })
                    .collect();
                let head: Vec<String> = std::iter::once(String::new())
                    .chain((0..r.shape.m_prime).map(|j| format!("A{}'", j + 1)))
                    .collect();
                let head: Vec<&str> = head.iter().map(String::as_str).collect();
                s += &table(&head, &cells);
            }
            s
        }
    }
}

fn mode_name(mode: crate::feasibility::SystemMode) -> String {
    match mode {
        crate::feasibility::SystemMode::Polynomial { degree } => format!("polynomial, degree {degree}"),
        crate::feasibility::SystemMode::Sampled { samples } => format!("sampled, {samples} first layers"),
    }
}

#[derive(Debug, Clone, Serialize)]
struct ScanCell {
    m: usize,
    m_prime: usize,
    gamma: f64,
    verdict: &'static str,
    residual: Option<f64>,
    born_bound: bool,
    available: Option<i64>,
    required: Option<i64>,
}

impl ScanCell {
    fn from_report(gamma: f64, r: &FeasibilityReport) -> Self {
        ScanCell {
            m: r.shape.m,
            m_prime: r.shape.m_prime,
            gamma,
            verdict: r.verdict.name(),
            residual: r.verdict.residual(),
            born_bound: r.born_bound,
            available: r.dof.map(|d| d.available),
            required: r.dof.map(|d| d.required),
        }
    }
}

#[derive(Serialize)]
struct ScanReport<'a> {
    seed: u64,
    generator: &'static str,
    restarts: usize,
    cells: &'a [ScanCell],
}

fn render_scan(cells: &[ScanCell], restarts: usize, seed: u64, fmt: OutputFormat) -> String {
    let header = format!("# seed={seed} generator={GENERATOR} restarts={restarts}\n");
    let opt = |v: Option<String>| v.unwrap_or_default();
    match fmt {
        OutputFormat::Json => json(&ScanReport {
            seed,
            generator: GENERATOR,
            restarts,
            cells,
        }),
        OutputFormat::Csv => {
            let mut s = header;
            s += &csv_row(&["m", "m_prime", "gamma", "verdict", "residual", "born_bound", "available", "required"]);
            for c in cells {
                s += &csv_row(&[
                    c.m.to_string(),
                    c.m_prime.to_string(),
                    c.gamma.to_string(),
                    c.verdict.to_string(),
                    opt(c.residual.map(|x| x.to_string())),
                    c.born_bound.to_string(),
                    opt(c.available.map(|x| x.to_string())),
                    opt(c.required.map(|x| x.to_string())),
                ]);
            }
            s
        }
        OutputFormat::Table => {
            let rows: Vec<Vec<String>> = cells
                .iter()
                .map(|c| {
                    vec![
                        c.m.to_string(),
                        c.m_prime.to_string(),
                        sig6(c.gamma),
                        c.verdict.to_string(),
                        c.residual.map(sig6).unwrap_or_else(|| "-".into()),
                        c.born_bound.to_string(),
                        c.available.map(|x| x.to_string()).unwrap_or_else(|| "-".into()),
                    ]
                })
                .collect();
            header + &table(&["M", "M'", "gamma", "verdict", "residual", "M'>=M-1", "available"], &rows)
        }
    }
}

fn render_mc(t: &FrequencyTable, fmt: OutputFormat) -> String {
    let header = format!("# seed={} generator={} trials={}\n", t.seed, t.generator, t.trials);
    match fmt {
        OutputFormat::Json => json(t),
        OutputFormat::Csv => {
            let mut s = header;
            s += &csv_row(&["alternative", "count", "freq", "exact", "sigma"]);
            for i in 0..t.labels.len() {
                s += &csv_row(&[
                    t.labels[i].clone(),
                    t.counts[i].to_string(),
                    t.freq[i].to_string(),
                    t.exact[i].to_string(),
                    t.sigma[i].to_string(),
                ]);
            }
            s
        }
        OutputFormat::Table => {
            let rows: Vec<Vec<String>> = (0..t.labels.len())
                .map(|i| {
                    vec![
                        t.labels[i].clone(),
                        t.counts[i].to_string(),
                        sig6(t.freq[i]),
                        sig6(t.exact[i]),
                        sig6(t.sigma[i]),
                    ]
                })
                .collect();
            let mut s = header + &table(&["alternative", "count", "freq", "exact", "sigma"], &rows);
            s += &format!("max |freq - exact| / sigma: {}\n", sig6(t.max_z()));
            s
        }
    }
}

/// Names accepted by `demo`.
pub fn demo_names() -> &'static [&'static str] {
    &DEMOS
}
