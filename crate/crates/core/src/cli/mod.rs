//! Command-line front end.
//!
//! Every command writes one JSON summary line to stdout, then
//! human-readable text. Exit codes: 0 ok, 2 parse, 3 validation,
//! 4 dimension mismatch, 5 identity residual, 6 unsupported, 1 other.

pub mod format;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::adapt::{adapt_enlg_to_qc_with, adapt_qc_to_enlg_with, AdaptError, AdaptationReceipt};
use crate::construct::{build_enlg, build_rv_game, chsh_game, ConstructError};
use crate::model::{
    check_enlg_compatible, check_qc_compatible, enlg_win_prob, qc_win_prob, validate_enlg,
    validate_enlg_strategy, validate_qc_game, validate_qc_strategy, ModelError,
    QCGame, ValidationReport,
};
use crate::optimize::{sweep_enlg, sweep_qc, OptimizeError, SeeSawConfig, SweepPoint};
use format::{
    game_to_string, parse_document, strategy_to_string, Document, FormatError, Game, GameFile,
    Metadata, Strategy, StrategyFile,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_DIMENSION: i32 = 4;
pub const EXIT_RESIDUAL: i32 = 5;
pub const EXIT_UNSUPPORTED: i32 = 6;

pub const SWEEP_HEADER: &str = "N,lower_bound,restarts_used,rounds,wall_time_seconds";

#[derive(Debug, Parser)]
#[command(name = "enlg", version, about = "Extended nonlocal games from quantum-classical games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Catalog {
    /// Binary XOR extended game on C^3 ⊗ C^3 with Weyl-rotated referee measurements
    Rv,
    /// CHSH as an extended game with a trivial referee register
    Chsh,
}

impl Catalog {
    fn name(self) -> &'static str {
        match self {
            Catalog::Rv => "rv",
            Catalog::Chsh => "chsh",
        }
    }

    fn file(self) -> GameFile {
        let (game, description) = match self {
            Catalog::Rv => (
                build_rv_game(),
                "binary XOR extended game on C^3 x C^3; referee rejects on the Weyl-rotated state gamma_(a xor b)",
            ),
            Catalog::Chsh => (chsh_game(), "CHSH with a one-dimensional referee register"),
        };
        GameFile {
            metadata: Metadata::new(self.name(), description),
            game: Game::Enlg(game),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Direction {
    QcToEnlg,
    EnlgToQc,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the extended game of a QC game, or write a catalog game
    Construct {
        /// QC game file
        input: Option<PathBuf>,
        #[arg(long, value_enum, conflicts_with = "input")]
        catalog: Option<Catalog>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Print winning and losing probabilities of a strategy
    Evaluate { game: PathBuf, strategy: PathBuf },
    /// Convert a strategy between a QC game and its extended game
    Adapt {
        #[arg(long, value_enum)]
        direction: Direction,
        /// The QC game, for either direction
        game: PathBuf,
        strategy: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// See-saw lower bounds over a list of ancilla dimensions
    Sweep {
        game: Option<PathBuf>,
        #[arg(long, value_enum, conflicts_with = "game")]
        catalog: Option<Catalog>,
        /// Ancilla dimensions, e.g. `1x1,2x2,3x3`; a bare `d` means `dxd`
        #[arg(long, default_value = "1x1,2x2,3x3")]
        dims: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        #[arg(long, default_value_t = 500)]
        max_rounds: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// CSV report path
        #[arg(long)]
        output: PathBuf,
        /// Fill the wall_time_seconds column (makes the CSV run-dependent)
        #[arg(long)]
        wall_time: bool,
    },
    /// Check a game or strategy file against the model invariants
    Validate { input: PathBuf },
    /// List catalog games, or write one
    Catalog {
        #[arg(value_enum)]
        name: Option<Catalog>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

/// A failed command: exit code, a short message and optional details.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
    details: Value,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
            details: Value::Null,
        }
    }

    fn with(mut self, details: Value) -> Self {
        self.details = details;
        self
    }
}

impl From<FormatError> for Failure {
    fn from(e: FormatError) -> Self {
        Failure::new(EXIT_PARSE, e.to_string())
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::DimensionMismatch { expected, found } => {
                Failure::new(EXIT_DIMENSION, format!("dimension mismatch: expected {expected}, found {found}"))
                    .with(json!({"expected": expected, "found": found}))
            }
            ModelError::ValidationFailed(report) => validation_failure("object", &report),
            other => Failure::new(EXIT_OTHER, other.to_string()),
        }
    }
}

impl From<ConstructError> for Failure {
    fn from(e: ConstructError) -> Self {
        match e {
            ConstructError::ValidationFailed(report) => validation_failure("QC game", &report),
            ConstructError::Model(m) => m.into(),
            other => Failure::new(EXIT_OTHER, other.to_string()),
        }
    }
}

impl From<AdaptError> for Failure {
    fn from(e: AdaptError) -> Self {
        match e {
            AdaptError::ValidationFailed { what, report } => validation_failure(what, &report),
            AdaptError::Model(m) => m.into(),
            AdaptError::Construct(c) => c.into(),
        }
    }
}

impl From<OptimizeError> for Failure {
    fn from(e: OptimizeError) -> Self {
        match e {
            OptimizeError::UnsupportedAnswerAlphabet(..) => Failure::new(EXIT_UNSUPPORTED, e.to_string()),
            OptimizeError::ValidationFailed { what, report } => validation_failure(what, &report),
            OptimizeError::Model(m) => m.into(),
            OptimizeError::Construct(c) => c.into(),
            OptimizeError::Adapt(a) => a.into(),
            OptimizeError::InvalidConfig(_) => Failure::new(EXIT_PARSE, e.to_string()),
            other => Failure::new(EXIT_OTHER, other.to_string()),
        }
    }
}

fn validation_failure(what: &str, report: &ValidationReport) -> Failure {
    let violations: Vec<Value> = report
        .violations
        .iter()
        .map(|v| json!({"location": v.location, "kind": v.kind.to_string(), "residual": v.residual}))
        .collect();
    Failure::new(EXIT_VALIDATION, format!("{what} failed validation:\n{report}"))
        .with(json!({"violations": violations}))
}

fn require_valid(what: &str, report: ValidationReport) -> Result<(), Failure> {
    if report.is_empty() {
        Ok(())
    } else {
        Err(validation_failure(what, &report))
    }
}

/// Summary line plus human-readable text of a successful command.
struct Success {
    summary: Value,
    text: String,
}

fn read_document(path: &Path) -> Result<Document, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_PARSE, format!("cannot read {}: {e}", path.display())))?;
    parse_document(&text).map_err(|e| Failure::new(EXIT_PARSE, format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::new(EXIT_OTHER, format!("cannot write {}: {e}", path.display())))
}

fn load_game(path: &Path) -> Result<GameFile, Failure> {
    match read_document(path)? {
        Document::Game(g) => {
            match &g.game {
                Game::Qc(q) => require_valid("QC game", validate_qc_game(q))?,
                Game::Enlg(h) => require_valid("extended game", validate_enlg(h))?,
            }
            Ok(g)
        }
        Document::Strategy(_) => Err(Failure::new(EXIT_PARSE, format!("{} is a strategy, not a game", path.display()))),
    }
}

fn load_qc_game(path: &Path) -> Result<QCGame, Failure> {
    match load_game(path)?.game {
        Game::Qc(g) => Ok(g),
        Game::Enlg(_) => Err(Failure::new(EXIT_PARSE, format!("{} is not a QC game", path.display()))),
    }
}

fn load_strategy(path: &Path) -> Result<StrategyFile, Failure> {
    match read_document(path)? {
        Document::Strategy(s) => {
            match &s.strategy {
                Strategy::Qc(q) => require_valid("QC strategy", validate_qc_strategy(q))?,
                Strategy::Enlg(e) => require_valid("extended-game strategy", validate_enlg_strategy(e))?,
            }
            Ok(s)
        }
        Document::Game(_) => Err(Failure::new(EXIT_PARSE, format!("{} is a game, not a strategy", path.display()))),
    }
}

fn prob(p: f64) -> String {
    format!("{p:.12}")
}

/// JSON number carrying exactly the printed 12-decimal digits.
fn prob_json(p: f64) -> Value {
    serde_json::from_str(&prob(p)).unwrap_or(Value::Null)
}

fn receipt_json(r: &AdaptationReceipt) -> Value {
    json!({
        "source_loss": prob_json(r.source_loss),
        "target_loss": prob_json(r.target_loss),
        "scale": r.scale.to_string(),
        "residual": r.residual,
    })
}

fn cmd_construct(input: Option<&Path>, catalog: Option<Catalog>, output: &Path) -> Result<Success, Failure> {
    let (file, summary) = match (input, catalog) {
        (_, Some(c)) => {
            let file = c.file();
            let Game::Enlg(h) = &file.game else { unreachable!() };
            let summary = json!({
                "catalog": c.name(),
                "questions": [h.questions().0, h.questions().1],
                "ref_dim": h.ref_dim(),
            });
            (file, summary)
        }
        (Some(path), None) => {
            let g = load_qc_game(path)?;
            let h = build_enlg(&g)?;
            let d = g.dims();
            let summary = json!({
                "n": d.n,
                "m": d.m,
                "questions": [h.questions().0, h.questions().1],
                "ref_dim": h.ref_dim(),
            });
            let file = GameFile {
                metadata: Metadata::new("", format!("extended game of {}", path.display())),
                game: Game::Enlg(h),
            };
            (file, summary)
        }
        (None, None) => return Err(Failure::new(EXIT_PARSE, "construct needs an input file or --catalog")),
    };
    write_file(output, &game_to_string(&file)?)?;
    let q = &summary["questions"];
    let mut text = String::new();
    if let (Some(n), Some(m)) = (summary["n"].as_u64(), summary["m"].as_u64()) {
        writeln!(text, "n = {n}, m = {m}").unwrap();
    }
    writeln!(text, "|X| = {}, |Y| = {}, ref_dim = {}", q[0], q[1], summary["ref_dim"]).unwrap();
    write!(text, "wrote {}", output.display()).unwrap();
    Ok(Success { summary, text })
}

fn cmd_evaluate(game: &Path, strategy: &Path) -> Result<Success, Failure> {
    let g = load_game(game)?;
    let s = load_strategy(strategy)?;
    let p = match (&g.game, &s.strategy) {
        (Game::Qc(g), Strategy::Qc(s)) => {
            check_qc_compatible(g, s)?;
            qc_win_prob(g, s)?
        }
        (Game::Enlg(h), Strategy::Enlg(s)) => {
            check_enlg_compatible(h, s)?;
            enlg_win_prob(h, s)?
        }
        _ => {
            return Err(Failure::new(EXIT_DIMENSION, "game and strategy are of different kinds")
                .with(json!({"game": game.display().to_string(), "strategy": strategy.display().to_string()})))
        }
    };
    let (win, lose) = (p.value(), 1.0 - p.value());
    Ok(Success {
        summary: json!({"win": prob_json(win), "lose": prob_json(lose)}),
        text: format!("win probability:  {}\nlose probability: {}", prob(win), prob(lose)),
    })
}

fn cmd_adapt(direction: Direction, game: &Path, strategy: &Path, output: &Path) -> Result<Success, Failure> {
    let g = load_qc_game(game)?;
    let s = load_strategy(strategy)?;
    let h = build_enlg(&g)?;
    let (adapted, receipt) = match (direction, s.strategy) {
        (Direction::QcToEnlg, Strategy::Qc(s)) => {
            let (a, r) = adapt_qc_to_enlg_with(&g, &h, &s)?;
            (Strategy::Enlg(a), r)
        }
        (Direction::EnlgToQc, Strategy::Enlg(s)) => {
            let (a, r) = adapt_enlg_to_qc_with(&g, &h, &s)?;
            (Strategy::Qc(a), r)
        }
        _ => return Err(Failure::new(EXIT_PARSE, "strategy kind does not match --direction")),
    };
    let file = StrategyFile {
        metadata: Metadata::new("", format!("adapted from {}", strategy.display())),
        strategy: adapted,
        receipt: Some(receipt),
    };
    write_file(output, &strategy_to_string(&file)?)?;
    let summary = json!({"receipt": receipt_json(&receipt), "holds": receipt.holds()});
    let text = format!(
        "source loss: {}\ntarget loss: {}\nscale:       {}\nresidual:    {:.3e}\nwrote {}",
        prob(receipt.source_loss),
        prob(receipt.target_loss),
        receipt.scale,
        receipt.residual,
        output.display()
    );
    if !receipt.holds() {
        return Err(Failure::new(EXIT_RESIDUAL, format!("loss identity residual {:.3e} exceeds tolerance\n{text}", receipt.residual))
            .with(summary));
    }
    Ok(Success { summary, text })
}

/// Parses `1x1,2x2,3` into ancilla dimension pairs.
pub fn parse_dims(spec: &str) -> Result<Vec<(usize, usize)>, String> {
    let parse = |t: &str| -> Result<usize, String> {
        match t.trim().parse::<usize>() {
            Ok(d) if d > 0 => Ok(d),
            _ => Err(format!("bad dimension `{t}`")),
        }
    };
    spec.split(',')
        .map(|item| match item.split_once(['x', 'X']) {
            Some((u, v)) => Ok((parse(u)?, parse(v)?)),
            None => parse(item).map(|d| (d, d)),
        })
        .collect()
}

fn cmd_sweep(
    game: Option<&Path>,
    catalog: Option<Catalog>,
    dims: &str,
    cfg: SeeSawConfig,
    output: &Path,
    wall_time: bool,
) -> Result<Success, Failure> {
    let dims = parse_dims(dims).map_err(|e| Failure::new(EXIT_PARSE, e))?;
    let (file, reference) = match (game, catalog) {
        (_, Some(c)) => (c.file(), format!("catalog:{}", c.name())),
        (Some(path), None) => (load_game(path)?, path.display().to_string()),
        (None, None) => return Err(Failure::new(EXIT_PARSE, "sweep needs a game file or --catalog")),
    };
    let start = Instant::now();
    let rows = match &file.game {
        Game::Enlg(h) => sweep_rows(&sweep_enlg(h, &dims, &cfg)?, &cfg),
        Game::Qc(g) => sweep_rows(&sweep_qc(g, &dims, &cfg)?, &cfg),
    };
    let elapsed = start.elapsed().as_secs_f64();
    let mut csv = String::from(SWEEP_HEADER);
    csv.push('\n');
    for r in &rows {
        let t = if wall_time { format!("{:.3}", r.seconds) } else { String::new() };
        writeln!(csv, "{},{},{},{},{t}", r.n, r.bound, r.restarts, r.rounds).unwrap();
    }
    write_file(output, &csv)?;
    let bounds: Vec<f64> = rows.iter().map(|r| r.bound).collect();
    let gap = bounds.last().zip(bounds.first()).map_or(0.0, |(l, f)| l - f);
    let summary = json!({
        "game": reference,
        "seed": cfg.seed,
        "rng": "chacha20",
        "restarts": cfg.restarts,
        "dims": dims.iter().map(|d| [d.0, d.1]).collect::<Vec<_>>(),
        "lower_bounds": bounds,
        "non_decreasing": bounds.windows(2).all(|w| w[1] >= w[0]),
        "empirical_gap": gap,
        "gap_certifies_strictness": false,
        "wall_time_seconds": elapsed,
        "output": output.display().to_string(),
    });
    let mut text = String::new();
    for (r, d) in rows.iter().zip(&dims) {
        writeln!(
            text,
            "N = {:>3} ({}x{}): lower bound {} after {} rounds",
            r.n,
            d.0,
            d.1,
            prob(r.bound),
            r.rounds
        )
        .unwrap();
    }
    writeln!(text, "empirical gap last - first: {gap:.3e} (lower bounds only, not a strictness certificate)").unwrap();
    write!(text, "{elapsed:.1}s total; wrote {}", output.display()).unwrap();
    Ok(Success { summary, text })
}

struct SweepRow {
    n: usize,
    bound: f64,
    restarts: usize,
    rounds: usize,
    seconds: f64,
}

fn sweep_rows<S>(points: &[SweepPoint<S>], cfg: &SeeSawConfig) -> Vec<SweepRow> {
    points
        .iter()
        .map(|p| SweepRow {
            n: p.total_dim(),
            bound: p.report.best_value,
            restarts: cfg.restarts,
            rounds: p.report.total_rounds(),
            seconds: p.wall_seconds,
        })
        .collect()
}

fn cmd_validate(input: &Path) -> Result<Success, Failure> {
    let doc = read_document(input)?;
    let (kind, report) = match &doc {
        Document::Game(g) => match &g.game {
            Game::Qc(q) => (format::KIND_QC, validate_qc_game(q)),
            Game::Enlg(h) => (format::KIND_ENLG, validate_enlg(h)),
        },
        Document::Strategy(s) => match &s.strategy {
            Strategy::Qc(q) => (format::KIND_QC_STRATEGY, validate_qc_strategy(q)),
            Strategy::Enlg(e) => (format::KIND_ENLG_STRATEGY, validate_enlg_strategy(e)),
        },
    };
    require_valid(kind, report)?;
    Ok(Success {
        summary: json!({"kind": kind, "violations": []}),
        text: format!("{} is a valid {kind} file", input.display()),
    })
}

fn cmd_catalog(name: Option<Catalog>, output: Option<&Path>) -> Result<Success, Failure> {
    let Some(c) = name else {
        let names: Vec<&str> = Catalog::value_variants().iter().map(|c| c.name()).collect();
        let text = Catalog::value_variants()
            .iter()
            .map(|c| format!("{:<5} {}", c.name(), c.file().metadata.description))
            .collect::<Vec<_>>()
            .join("\n");
        return Ok(Success {
            summary: json!({"catalog": names}),
            text,
        });
    };
    let text = game_to_string(&c.file())?;
    match output {
        Some(path) => {
            write_file(path, &text)?;
            Ok(Success {
                summary: json!({"catalog": c.name(), "output": path.display().to_string()}),
                text: format!("wrote {}", path.display()),
            })
        }
        None => Ok(Success {
            summary: json!({"catalog": c.name()}),
            text: text.trim_end().to_string(),
        }),
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Construct { .. } => "construct",
        Command::Evaluate { .. } => "evaluate",
        Command::Adapt { .. } => "adapt",
        Command::Sweep { .. } => "sweep",
        Command::Validate { .. } => "validate",
        Command::Catalog { .. } => "catalog",
    }
}

fn dispatch(command: Command) -> Result<Success, Failure> {
    match command {
        Command::Construct { input, catalog, output } => cmd_construct(input.as_deref(), catalog, &output),
        Command::Evaluate { game, strategy } => cmd_evaluate(&game, &strategy),
        Command::Adapt {
            direction,
            game,
            strategy,
            output,
        } => cmd_adapt(direction, &game, &strategy, &output),
        Command::Sweep {
            game,
            catalog,
            dims,
            seed,
            restarts,
            max_rounds,
            tol,
            output,
            wall_time,
        } => {
            let cfg = SeeSawConfig {
                ancilla_dims: (1, 1),
                restarts,
                max_rounds,
                improve_tol: tol,
                seed,
            };
            cmd_sweep(game.as_deref(), catalog, &dims, cfg, &output, wall_time)
        }
        Command::Validate { input } => cmd_validate(&input),
        Command::Catalog { name, output } => cmd_catalog(name, output.as_deref()),
    }
}

fn emit(out: &mut dyn Write, summary: &Value, text: &str) {
    // Output failures (closed pipe) leave nothing sensible to report.
    let _ = writeln!(out, "{summary}");
    if !text.is_empty() {
        let _ = writeln!(out, "{text}");
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    EXIT_OK
                }
                _ => EXIT_PARSE,
            };
            let summary = if code == EXIT_OK {
                json!({"status": "ok"})
            } else {
                json!({"status": "error", "code": code, "error": "usage"})
            };
            emit(out, &summary, e.render().to_string().trim_end());
            return code;
        }
    };
    let name = command_name(&cli.command);
    match dispatch(cli.command) {
        Ok(Success { mut summary, text }) => {
            if let Value::Object(m) = &mut summary {
                m.insert("command".into(), json!(name));
                m.insert("status".into(), json!("ok"));
            }
            emit(out, &summary, &text);
            EXIT_OK
        }
        Err(f) => {
            let mut summary = json!({
                "command": name,
                "status": "error",
                "code": f.code,
                "error": f.message.lines().next().unwrap_or_default(),
            });
            if !f.details.is_null() {
                summary["details"] = f.details;
            }
            emit(out, &summary, &f.message);
            f.code
        }
    }
}
