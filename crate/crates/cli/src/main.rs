//! `kljn-trust` command-line tool.
//!
//! Exit codes: 0 success, 1 domain error (invalid topology, unknown sensor,
//! failed check), 2 usage error (bad flags, unreadable input).

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kljn_trust::kljn::{
    run_key_exchange_with_budget, AttackModel, Attacker, KljnSessionConfig, SessionReport,
    DEFAULT_BUDGET_FACTOR,
};
use kljn_trust::orchestrator::{
    establish_network_keys, trust_report, EstablishOptions, NetworkKeyState,
};
use kljn_trust::trust::{Evaluator, TrustMatrix};
use kljn_trust::{Error, KillSwitchState, SensorId, Topology, TrustCoefficients};

const CSV_DECIMALS: usize = 3;

#[derive(Parser, Debug)]
#[command(
    name = "kljn-trust",
    version,
    about = "Trust evaluation and KLJN key-exchange simulation for hybrid sensor networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a topology document; exit 0 iff it has no errors.
    Validate {
        topology: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Also fail on warnings.
        #[arg(long)]
        deny_warnings: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Trust of sensor J as seen by sensor I.
    Trust {
        topology: PathBuf,
        i: String,
        j: String,
        #[command(flatten)]
        eval: EvalArgs,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Full trust matrix, row = evaluator, column = evaluated.
    TrustMatrix {
        topology: PathBuf,
        #[command(flatten)]
        eval: EvalArgs,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Peers of sensor I by descending trust.
    Rank {
        topology: PathBuf,
        i: String,
        #[command(flatten)]
        eval: EvalArgs,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Print a, b, c and their fixed-point residuals.
    Coefficients {
        /// Solve the fixed-point system numerically to this tolerance and
        /// fail unless it agrees with the closed form.
        #[arg(long, value_name = "TOL")]
        check: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run one simulated KLJN session and print its report.
    SimulateKljn {
        #[arg(long, default_value_t = 128)]
        bits: usize,
        #[command(flatten)]
        session: SessionArgs,
        /// Relative half-width of the level acceptance bands.
        #[arg(long)]
        tol: Option<f64>,
        /// Maximum bit periods (default: 64 per requested bit).
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long, value_enum)]
        attack: Option<AttackKind>,
        /// First period in which the attacker is active.
        #[arg(long, default_value_t = 0)]
        attack_start: u64,
        /// Injected current sd relative to the LL RMS current.
        #[arg(long, default_value_t = 0.5)]
        injection_amplitude: f64,
        /// Include the key bits in the report.
        #[arg(long)]
        emit_key: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Establish keys for every covered pair and write the state file.
    Establish {
        topology: PathBuf,
        #[arg(long, default_value_t = 128)]
        bits: usize,
        #[command(flatten)]
        session: SessionArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Apply kill-switch events to a state file (in place unless --out).
    Kill {
        state: PathBuf,
        /// Sensors to kill, comma-separated or repeated.
        #[arg(required = true, value_delimiter = ',')]
        sensors: Vec<String>,
        #[arg(long, default_value = "")]
        note: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Trust report (matrix, rankings, records, kill log) for a state file.
    Report {
        state: PathBuf,
        #[command(flatten)]
        coef: CoefArgs,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CoefMode {
    ClosedForm,
    FixedPoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum AttackKind {
    WireSubstitution,
    CurrentInjection,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Do not round CSV values to 3 decimals.
    #[arg(long)]
    full_precision: bool,
}

#[derive(Args, Debug)]
struct CoefArgs {
    #[arg(long = "coefficients", value_enum, default_value_t = CoefMode::ClosedForm)]
    mode: CoefMode,
    /// Tolerance of the fixed-point solve.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Sensors with the kill switch set, comma-separated.
    #[arg(long, value_delimiter = ',')]
    kill: Vec<String>,
    #[command(flatten)]
    coef: CoefArgs,
}

#[derive(Args, Debug)]
struct SessionArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// KLJN session parameters as JSON; omitted fields take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Domain(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Validate {
            topology,
            format,
            deny_warnings,
            output,
        } => {
            let t = load_topology(&topology)?;
            let report = t.validate();
            let text = match format {
                Format::Json => json(&report),
                Format::Csv => {
                    let mut s = String::from("severity,code,entities,message\n");
                    let rows = report
                        .errors
                        .iter()
                        .map(|i| ("error", i))
                        .chain(report.warnings.iter().map(|i| ("warning", i)));
                    for (severity, issue) in rows {
                        let code = serde_json::to_value(issue.code)
                            .ok()
                            .and_then(|v| v.as_str().map(str::to_owned))
                            .unwrap_or_default();
                        let entities: Vec<&str> =
                            issue.entities.iter().map(SensorId::as_str).collect();
                        let _ = writeln!(
                            s,
                            "{severity},{code},{},{}",
                            entities.join(" "),
                            csv_field(&issue.message)
                        );
                    }
                    s
                }
            };
            emit(&output, &text)?;
            if !report.is_valid() {
                return Err(Failure::Domain(format!("{report}")));
            }
            if deny_warnings && !report.warnings.is_empty() {
                return Err(Failure::Domain(format!(
                    "{} warning(s)",
                    report.warnings.len()
                )));
            }
            Ok(())
        }
        Command::Trust {
            topology,
            i,
            j,
            eval,
            format,
            output,
        } => {
            let t = load_valid_topology(&topology)?;
            let ev = evaluator(&t, &eval)?;
            let (i, j) = (t.sensor(&i)?.clone(), t.sensor(&j)?.clone());
            let value = ev.trust(&i, &j)?;
            let text = match format {
                Format::Json => {
                    let counts = ev.counts(&i, &j)?;
                    json(&serde_json::json!({
                        "i": i,
                        "j": j,
                        "trust": value,
                        "counts": counts,
                    }))
                }
                Format::Csv => format!("i,j,trust\n{i},{j},{}\n", fmt_value(value, &output)),
            };
            emit(&output, &text)
        }
        Command::TrustMatrix {
            topology,
            eval,
            format,
            output,
        } => {
            let t = load_valid_topology(&topology)?;
            let matrix = evaluator(&t, &eval)?.matrix();
            emit(&output, &matrix_text(&matrix, format, &output))
        }
        Command::Rank {
            topology,
            i,
            eval,
            format,
            output,
        } => {
            let t = load_valid_topology(&topology)?;
            let ev = evaluator(&t, &eval)?;
            let ranked = ev.rank(t.sensor(&i)?)?;
            let text = match format {
                Format::Json => json(&ranked),
                Format::Csv => {
                    let mut s = String::from("rank,sensor,trust\n");
                    for (n, peer) in ranked.iter().enumerate() {
                        let _ = writeln!(
                            s,
                            "{},{},{}",
                            n + 1,
                            peer.sensor,
                            fmt_value(peer.trust, &output)
                        );
                    }
                    s
                }
            };
            emit(&output, &text)
        }
        Command::Coefficients { check, output } => {
            let closed = TrustCoefficients::closed_form();
            let mut doc = serde_json::json!({
                "a": closed.a,
                "b": closed.b,
                "c": closed.c,
                "residuals": closed.residuals(),
            });
            let mut agreement = None;
            if let Some(tol) = check {
                let solved = TrustCoefficients::fixed_point(tol)?;
                let diff = closed.max_abs_diff(&solved);
                doc["check"] = serde_json::json!({
                    "tolerance": tol,
                    "fixed_point": solved,
                    "max_abs_diff": diff,
                    "agrees": diff <= tol,
                });
                agreement = Some((diff, tol));
            }
            emit(&output, &json(&doc))?;
            match agreement {
                Some((diff, tol)) if diff > tol => Err(Failure::Domain(format!(
                    "fixed-point solution differs from the closed form by {diff:e} > {tol:e}"
                ))),
                _ => Ok(()),
            }
        }
        Command::SimulateKljn {
            bits,
            session,
            tol,
            budget,
            attack,
            attack_start,
            injection_amplitude,
            emit_key,
            output,
        } => {
            let mut cfg = session_config(&session)?;
            if let Some(tol) = tol {
                cfg.level_tolerance = tol;
            }
            let attacker = attack.map(|kind| Attacker {
                model: match kind {
                    AttackKind::WireSubstitution => AttackModel::WireSubstitution,
                    AttackKind::CurrentInjection => AttackModel::CurrentInjection {
                        relative_amplitude: injection_amplitude,
                    },
                },
                start_period: attack_start,
            });
            let budget =
                budget.unwrap_or_else(|| DEFAULT_BUDGET_FACTOR.saturating_mul(bits as u64));
            let (result, exhausted) =
                match run_key_exchange_with_budget(&cfg, bits, attacker, budget) {
                    Ok(r) => (r, false),
                    Err(Error::BudgetExhausted { partial, .. }) => (*partial, true),
                    Err(e) => return Err(e.into()),
                };
            let report = SessionReport::new(&cfg, bits, attacker, &result, exhausted, emit_key);
            emit(&output, &json(&report))?;
            if exhausted {
                return Err(Failure::Domain(format!(
                    "period budget of {budget} exhausted with {} of {bits} key bits",
                    result.key_bits.len()
                )));
            }
            Ok(())
        }
        Command::Establish {
            topology,
            bits,
            session,
            output,
        } => {
            let t = load_topology(&topology)?;
            let cfg = session_config(&session)?;
            let opts = EstablishOptions {
                key_bits: bits,
                ..EstablishOptions::default()
            };
            let state = establish_network_keys(&t, &cfg, session.seed, &opts)?;
            emit(&output, &state.to_json())
        }
        Command::Kill {
            state,
            sensors,
            note,
            out,
        } => {
            let mut st = NetworkKeyState::from_json(&read(&state)?)?;
            let mut revoked = 0;
            for token in &sensors {
                let id = st.topology.sensor(token)?.clone();
                revoked += st.apply_kill_event(&id, note.clone())?;
            }
            let target = out.unwrap_or(state);
            write_file(&target, &st.to_json())?;
            eprintln!("revoked {revoked} record(s)");
            Ok(())
        }
        Command::Report {
            state,
            coef,
            format,
            output,
        } => {
            let st = NetworkKeyState::from_json(&read(&state)?)?;
            let report = trust_report(&st, &coefficients(&coef)?)?;
            let text = match format {
                Format::Json => json(&report),
                Format::Csv => matrix_text(&report.matrix, Format::Csv, &output),
            };
            emit(&output, &text)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Outcome {
    fs::write(path, text)
        .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

fn emit(output: &OutputArgs, text: &str) -> Outcome {
    match &output.out {
        Some(path) => write_file(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Failure::Usage(format!("cannot write to stdout: {e}")))
        }
    }
}

fn json<T: serde::Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

fn csv_field(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_owned()
    }
}

fn fmt_value(v: f64, output: &OutputArgs) -> String {
    if output.full_precision {
        format!("{v}")
    } else {
        format!("{v:.CSV_DECIMALS$}")
    }
}

fn matrix_text(matrix: &TrustMatrix, format: Format, output: &OutputArgs) -> String {
    match format {
        Format::Json => json(matrix),
        Format::Csv => matrix.to_csv((!output.full_precision).then_some(CSV_DECIMALS)),
    }
}

/// Parsed topology, with wireless sets derived when the document has none.
fn load_topology(path: &Path) -> Result<Topology, Failure> {
    let t = Topology::from_json(&read(path)?)?;
    Ok(if t.has_wireless_sets() {
        t
    } else {
        t.with_derived_wireless_sets()
    })
}

fn load_valid_topology(path: &Path) -> Result<Topology, Failure> {
    let t = load_topology(path)?;
    let report = t.validate();
    if !report.is_valid() {
        return Err(Error::InvalidTopology(report).into());
    }
    Ok(t)
}

fn coefficients(args: &CoefArgs) -> Result<TrustCoefficients, Failure> {
    Ok(match args.mode {
        CoefMode::ClosedForm => TrustCoefficients::closed_form(),
        CoefMode::FixedPoint => TrustCoefficients::fixed_point(args.tol)?,
    })
}

fn evaluator(t: &Topology, args: &EvalArgs) -> Result<Evaluator, Failure> {
    let killed = args
        .kill
        .iter()
        .filter(|s| !s.is_empty())
        .map(|s| t.sensor(s).cloned())
        .collect::<Result<Vec<_>, _>>()?;
    let ks = KillSwitchState::with_killed(killed);
    Ok(Evaluator::new(t, &coefficients(&args.coef)?, &ks)?)
}

fn session_config(args: &SessionArgs) -> Result<KljnSessionConfig, Failure> {
    let cfg: KljnSessionConfig = match &args.config {
        Some(path) => serde_json::from_str(&read(path)?)
            .map_err(|e| Failure::Usage(format!("invalid session config: {e}")))?,
        None => KljnSessionConfig::default(),
    };
    Ok(cfg.with_seed(args.seed))
}
