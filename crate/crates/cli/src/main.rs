//! `diagwork`: batch front end for every workbench operation.
//!
//! Exit codes: 0 on success or a true verdict, 1 on a false verdict, gate
//! rejection, refused certificate or fuel exhaustion, 2 on usage or format
//! errors.

use std::fmt::Display;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use diagwork_core::harness::{self, HarnessError, DEFAULT_FUEL, DEFAULT_PREFIX};
use diagwork_core::text::{parse, pretty_print};
use diagwork_core::{
    decode_program, encode_program, CertKind, CertifyError, EnumRule, GateError, Index, Machine,
    RunOutcome, Session, SessionError, TotalRule,
};
use diagwork_service::Workbench;

const ESCAPE_PREFIX: u64 = 100;

#[derive(Parser)]
#[command(
    name = "diagwork",
    version,
    about = "Diagonal workbench over a register language"
)]
struct Cli {
    /// Session file; created on first mutation, rewritten after each one.
    #[arg(long, global = true, env = "DIAGWORK_SESSION")]
    session: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long, global = true, default_value_t = DEFAULT_FUEL)]
    fuel: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    /// `key=value` lines.
    Machine,
}

#[derive(Subcommand)]
enum Command {
    /// Index of the program in a file (`-` for stdin).
    Encode { file: PathBuf },
    /// Canonical text of the program with this index.
    Decode { index: Index },
    /// Interpret an index on an input.
    Run { index: Index, input: Index },
    /// ψ(j) for a certified enumerator j; issues its total certificate.
    Psi { j: Index },
    /// Issue a certificate.
    Certify {
        #[command(subcommand)]
        class: CertifyClass,
    },
    /// One execution of procedure Q.
    Q {
        #[command(subcommand)]
        step: QStep,
    },
    /// Finite-prefix checks for a certified enumerator.
    Verify {
        #[command(subcommand)]
        check: Check,
    },
    /// Reproduce a worked example on a fresh session.
    Example {
        #[command(subcommand)]
        which: Example,
    },
    /// Session files.
    Session {
        #[command(subcommand)]
        op: SessionOp,
    },
    /// Serve the HTTP API over the session.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
    },
}

#[derive(Subcommand)]
enum CertifyClass {
    Total {
        index: Index,
        #[arg(long = "by", value_enum)]
        rule: TotalBy,
        premises: Vec<Index>,
    },
    Enum {
        index: Index,
        #[arg(long = "by", value_enum)]
        rule: EnumBy,
        premises: Vec<Index>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TotalBy {
    /// No premises; the program has no loop and no eval.
    Syntactic,
    /// Premise: the enumerator j with index = ψ(j).
    Psi,
    /// Premises: totals a, b with index = compose(a, b).
    Compose,
}

#[derive(Clone, Copy, ValueEnum)]
enum EnumBy {
    /// Premise: total t with index = const_program(t).
    Const,
    /// Premises: enumerator tail and total head.
    Prepend,
}

#[derive(Subcommand)]
enum QStep {
    Feed { j: Index },
    Query { x: Index },
    Both { x: Index, j: Index },
}

#[derive(Args)]
struct CheckArgs {
    j: Index,
    /// Check points n = 0..=N.
    #[arg(long = "n")]
    prefix: Option<u64>,
}

#[derive(Subcommand)]
enum Check {
    Diagonal(CheckArgs),
    Escape(CheckArgs),
    /// Feeds j into Q, then checks the witness.
    Thm5(CheckArgs),
}

#[derive(Subcommand)]
enum Example {
    #[command(name = "1")]
    One,
    #[command(name = "2")]
    Two {
        #[arg(long, default_value_t = 5)]
        k: u64,
    },
}

#[derive(Subcommand)]
enum SessionOp {
    /// Write the active session to a file.
    Save { path: PathBuf },
    /// Verify a session file and make it the active session.
    Load { path: PathBuf },
    /// Replay a session file and print the resulting α.
    Replay { path: PathBuf },
}

enum Failure {
    /// Exit 1: a well-formed request the model refused or a false verdict.
    Refused(String),
    /// Exit 2: bad input or I/O.
    Format(String),
}

impl From<GateError> for Failure {
    fn from(e: GateError) -> Self {
        Failure::Refused(e.to_string())
    }
}

impl From<CertifyError> for Failure {
    fn from(e: CertifyError) -> Self {
        Failure::Refused(format!("certificate refused: {e}"))
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Parameter(m) => Failure::Format(m),
            other => Failure::Refused(other.to_string()),
        }
    }
}

impl From<SessionError> for Failure {
    fn from(e: SessionError) -> Self {
        Failure::Format(format!("session: {e}"))
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Format(e.to_string())
    }
}

type Outcome = Result<bool, Failure>;

struct Ctx {
    session_path: Option<PathBuf>,
    format: Format,
    fuel: u64,
}

impl Ctx {
    fn open(&self) -> Result<Session, Failure> {
        match &self.session_path {
            Some(p) if p.exists() => Ok(Session::load(p)?),
            _ => Ok(Session::new()),
        }
    }

    fn persist(&self, s: &Session) -> Result<(), Failure> {
        if let Some(p) = &self.session_path {
            s.save(p)?;
        }
        Ok(())
    }

    fn emit(&self, text: impl Display, records: &[String]) {
        match self.format {
            Format::Text => print!("{text}"),
            Format::Machine => {
                for r in records {
                    println!("{r}");
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = Ctx {
        session_path: cli.session,
        format: cli.format,
        fuel: cli.fuel,
    };
    match dispatch(&ctx, cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Refused(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Format(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(ctx: &Ctx, command: Command) -> Outcome {
    match command {
        Command::Encode { file } => encode(ctx, &file),
        Command::Decode { index } => {
            let text = pretty_print(&decode_program(&index));
            ctx.emit(&text, &[format!("index={index} text={text:?}")]);
            Ok(true)
        }
        Command::Run { index, input } => {
            let outcome = Machine::new().run_index(&index, &input.0, ctx.fuel);
            let record = match &outcome {
                RunOutcome::Halted { value, fuel_used } => {
                    format!("outcome=halted value={value} fuel_used={fuel_used}")
                }
                RunOutcome::FuelExhausted => format!("outcome=fuel_exhausted fuel={}", ctx.fuel),
            };
            ctx.emit(format!("{outcome}\n"), &[record]);
            Ok(outcome.is_halted())
        }
        Command::Psi { j } => {
            let mut s = ctx.open()?;
            if !s.is_certified_enumerator(&j) {
                return Err(GateError::Uncertified { j }.into());
            }
            let cert = s.apply_rule_psi(&j)?;
            ctx.persist(&s)?;
            ctx.emit(
                format!("{}\n", cert.subject),
                &[format!("j={j} psi={}", cert.subject)],
            );
            Ok(true)
        }
        Command::Certify { class } => certify(ctx, class),
        Command::Q { step } => q(ctx, step),
        Command::Verify { check } => verify(ctx, check),
        Command::Example { which } => {
            let t = match which {
                Example::One => harness::run_example1()?,
                Example::Two { k } => harness::run_example2(k)?,
            };
            ctx.emit(t.to_text(), &t.to_records());
            Ok(true)
        }
        Command::Session { op } => session(ctx, op),
        Command::Serve { addr } => {
            let s = ctx.open()?;
            let runtime = tokio::runtime::Runtime::new()?;
            eprintln!("serving on http://{addr}");
            runtime.block_on(diagwork_service::serve(Arc::new(Workbench::new(s)), &addr))?;
            Ok(true)
        }
    }
}

fn encode(ctx: &Ctx, file: &Path) -> Outcome {
    let text = if file == Path::new("-") {
        let mut buf = String::new();
        std::io::stdin().read_to_string(&mut buf)?;
        buf
    } else {
        std::fs::read_to_string(file)
            .map_err(|e| Failure::Format(format!("{}: {e}", file.display())))?
    };
    let program = parse(&text).map_err(|e| Failure::Format(format!("{}: {e}", file.display())))?;
    let index = encode_program(&program);
    ctx.emit(format!("{index}\n"), &[format!("index={index}")]);
    Ok(true)
}

fn certify(ctx: &Ctx, class: CertifyClass) -> Outcome {
    let (subject, kind, premises) = match class {
        CertifyClass::Total {
            index,
            rule,
            premises,
        } => {
            let kind = match (rule, premises.as_slice()) {
                (TotalBy::Syntactic, []) => Some(TotalRule::Syntactic),
                (TotalBy::Psi, [j]) => Some(TotalRule::ByPsi { source: j.clone() }),
                (TotalBy::Compose, [a, b]) => Some(TotalRule::ByCompose {
                    a: a.clone(),
                    b: b.clone(),
                }),
                _ => None,
            };
            (index, kind.map(CertKind::Total), premises.len())
        }
        CertifyClass::Enum {
            index,
            rule,
            premises,
        } => {
            let kind = match (rule, premises.as_slice()) {
                (EnumBy::Const, [t]) => Some(EnumRule::Const { t: t.clone() }),
                (EnumBy::Prepend, [tail, head]) => Some(EnumRule::Prepend {
                    tail: tail.clone(),
                    head: head.clone(),
                }),
                _ => None,
            };
            (index, kind.map(CertKind::Enumerator), premises.len())
        }
    };
    let kind = kind.ok_or_else(|| {
        Failure::Format(format!(
            "wrong number of premises ({premises}) for this rule"
        ))
    })?;
    let mut s = ctx.open()?;
    let cert = s.issue(&subject, kind)?;
    ctx.persist(&s)?;
    let record = cert.to_record();
    ctx.emit(format!("{record}\n"), &[record_kv(&cert)]);
    Ok(true)
}

fn record_kv(cert: &diagwork_core::Certificate) -> String {
    let premises: Vec<String> = cert.premises.iter().map(ToString::to_string).collect();
    format!(
        "certificate={} subject={} class={} premises={}",
        cert.tag,
        cert.subject,
        cert.class,
        premises.join(",")
    )
}

fn q(ctx: &Ctx, step: QStep) -> Outcome {
    let mut s = ctx.open()?;
    let slot = s.alpha().least_unused().clone();
    let (x, j) = match &step {
        QStep::Feed { j } => (None, Some(j)),
        QStep::Query { x } => (Some(&x.0), None),
        QStep::Both { x, j } => (Some(&x.0), Some(j)),
    };
    let returned = s.q_step(x, j)?;
    ctx.persist(&s)?;
    let mut records = Vec::new();
    if let Some(j) = j {
        records.push(format!(
            "fed={j} slot={slot} value={}",
            s.peek(&slot).expect("fed slot")
        ));
    }
    records.push(format!("returned={returned}"));
    ctx.emit(format!("{returned}\n"), &records);
    Ok(true)
}

fn verify(ctx: &Ctx, check: Check) -> Outcome {
    match check {
        Check::Diagonal(a) => {
            let s = ctx.open()?;
            let r = harness::verify_diagonal(
                s.registry(),
                &a.j,
                a.prefix.unwrap_or(DEFAULT_PREFIX),
                ctx.fuel,
            )?;
            ctx.emit(r.to_text(), &r.to_records());
            Ok(r.verdict)
        }
        Check::Escape(a) => {
            let s = ctx.open()?;
            let r = harness::verify_escape(
                s.registry(),
                &a.j,
                a.prefix.unwrap_or(ESCAPE_PREFIX),
                ctx.fuel,
            )?;
            ctx.emit(r.to_text(), &r.to_records());
            Ok(r.verdict)
        }
        Check::Thm5(a) => {
            let mut s = ctx.open()?;
            let r = harness::theorem5_witness(
                &mut s,
                &a.j,
                a.prefix.unwrap_or(DEFAULT_PREFIX),
                ctx.fuel,
            )?;
            ctx.persist(&s)?;
            ctx.emit(r.to_text(), &r.to_records());
            Ok(r.verdict)
        }
    }
}

fn summary(s: &Session) -> String {
    format!(
        "records={} alpha={} certificates={} least_unused={}",
        s.log().len(),
        s.alpha().len(),
        s.registry().len(),
        s.alpha().least_unused()
    )
}

fn session(ctx: &Ctx, op: SessionOp) -> Outcome {
    match op {
        SessionOp::Save { path } => {
            let s = ctx.open()?;
            s.save(&path)?;
            ctx.emit(
                format!("saved {} records to {}\n", s.log().len(), path.display()),
                &[summary(&s)],
            );
        }
        SessionOp::Load { path } => {
            let s = Session::load(&path)?;
            let Some(active) = &ctx.session_path else {
                return Err(Failure::Format(
                    "session load needs --session or DIAGWORK_SESSION".into(),
                ));
            };
            s.save(active)?;
            ctx.emit(
                format!(
                    "loaded {} records from {} into {}\n",
                    s.log().len(),
                    path.display(),
                    active.display()
                ),
                &[summary(&s)],
            );
        }
        SessionOp::Replay { path } => {
            let s = Session::load(&path)?;
            let mut text = format!(
                "replayed {} records; alpha has {} entries\n",
                s.log().len(),
                s.alpha().len()
            );
            let mut records = vec![summary(&s)];
            for e in s.alpha().entries() {
                let origin = format!("{:?}", e.origin).to_lowercase();
                text.push_str(&format!("  alpha({}) = {}  [{origin}]\n", e.slot, e.index));
                records.push(format!("slot={} index={} origin={origin}", e.slot, e.index));
            }
            ctx.emit(text, &records);
        }
    }
    Ok(true)
}
