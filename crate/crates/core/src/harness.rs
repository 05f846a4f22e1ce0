//! Finite-prefix checks of the diagonal construction and scripted
//! reproductions of the two worked examples of procedure Q.
//!
//! Every check quantifies over `n ≤ N` only. A point whose interpretation
//! runs out of fuel is reported as inconclusive and never counts as a pass.
//!
//! Reports render two ways: human text and `key=value` records, one check
//! per line. Both are also `Serialize` for the service.

use std::fmt::{self, Write as _};

use num_bigint::BigUint;
use serde::Serialize;
use thiserror::Error;

use crate::algebra::{const_program, prepend_value, psi};
use crate::certify::{CertifyError, EnumRule, Registry};
use crate::lang::Machine;
use crate::numbering::Index;
use crate::qproc::{GateError, Session};

pub const DEFAULT_PREFIX: u64 = 25;
pub const DEFAULT_FUEL: u64 = 1_000_000;
/// Points per level at which the shift law of the prepend chain is sampled.
pub const SHIFT_LAW_POINTS: u64 = 5;
pub const MAX_CHAIN_LENGTH: u64 = 8;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Gate(#[from] GateError),
    #[error(transparent)]
    Certify(#[from] CertifyError),
    #[error("assertion failed: {label}: {left} != {right}")]
    Assertion {
        label: String,
        left: String,
        right: String,
    },
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Inconclusive => "inconclusive",
        })
    }
}

/// Builder for one `key=value key=value` record line. Absent values are `-`.
#[derive(Debug, Default)]
pub struct Record(String);

impl Record {
    pub fn new(kind: &str, value: impl fmt::Display) -> Self {
        Record(format!("{kind}={value}"))
    }

    pub fn field(mut self, key: &str, value: impl fmt::Display) -> Self {
        write!(self.0, " {key}={value}").unwrap();
        self
    }

    pub fn opt(self, key: &str, value: Option<&impl fmt::Display>) -> Self {
        match value {
            Some(v) => self.field(key, v),
            None => self.field(key, "-"),
        }
    }
}

impl fmt::Display for Record {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn show(v: Option<&impl fmt::Display>) -> String {
    v.map_or_else(|| "FUEL-EXHAUSTED".to_string(), |v| v.to_string())
}

fn verdict_word(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

/// One point of the law `φ_{ψ(j)}(n) = φ_{φ_j(n)}(n) + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiagonalCheck {
    pub n: u64,
    /// `φ_j(n)`
    pub enumerated: Option<Index>,
    /// `φ_{φ_j(n)}(n)`
    #[serde(with = "opt_decimal")]
    pub inner: Option<BigUint>,
    /// `φ_{ψ(j)}(n)`
    #[serde(with = "opt_decimal")]
    pub diagonal: Option<BigUint>,
    pub status: Status,
}

impl DiagonalCheck {
    fn record(&self) -> Record {
        Record::new("check", "diagonal")
            .field("n", self.n)
            .opt("enumerated", self.enumerated.as_ref())
            .opt("inner", self.inner.as_ref())
            .opt("diagonal", self.diagonal.as_ref())
            .field("status", self.status)
    }

    fn text(&self) -> String {
        format!(
            "  n={:<3} phi_j(n)={}  phi_(phi_j(n))(n)={}  phi_psi(n)={}  {}",
            self.n,
            show(self.enumerated.as_ref()),
            show(self.inner.as_ref()),
            show(self.diagonal.as_ref()),
            self.status.to_string().to_uppercase()
        )
    }
}

fn diagonal_check(
    machine: &mut Machine,
    j: &Index,
    psi_j: &Index,
    n: u64,
    fuel: u64,
) -> DiagonalCheck {
    let x = BigUint::from(n);
    let enumerated = machine.run_index(j, &x, fuel).into_value().map(Index);
    let inner = enumerated
        .as_ref()
        .and_then(|m| machine.run_index(m, &x, fuel).into_value());
    let diagonal = machine.run_index(psi_j, &x, fuel).into_value();
    let status = match (&inner, &diagonal) {
        (Some(i), Some(d)) if *d == i + 1u32 => Status::Pass,
        (Some(_), Some(_)) => Status::Fail,
        _ => Status::Inconclusive,
    };
    DiagonalCheck {
        n,
        enumerated,
        inner,
        diagonal,
        status,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub passed: usize,
    pub failed: usize,
    pub inconclusive: usize,
}

impl Tally {
    fn of(statuses: impl Iterator<Item = Status>) -> Self {
        let mut t = Tally::default();
        for s in statuses {
            match s {
                Status::Pass => t.passed += 1,
                Status::Fail => t.failed += 1,
                Status::Inconclusive => t.inconclusive += 1,
            }
        }
        t
    }

    pub fn all_pass(&self) -> bool {
        self.failed == 0 && self.inconclusive == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiagonalReport {
    pub enumerator: Index,
    pub psi: Index,
    pub prefix: u64,
    pub fuel: u64,
    pub checks: Vec<DiagonalCheck>,
    pub tally: Tally,
    pub verdict: bool,
}

impl DiagonalReport {
    pub fn to_records(&self) -> Vec<String> {
        let mut out = vec![Record::new("report", "diagonal")
            .field("j", &self.enumerator)
            .field("psi", &self.psi)
            .field("prefix", self.prefix)
            .field("fuel", self.fuel)
            .to_string()];
        out.extend(self.checks.iter().map(|c| c.record().to_string()));
        out.push(tally_record(self.verdict, &self.tally));
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "diagonal law for j={} (psi={}) over n<={} with fuel {}\n",
            self.enumerator, self.psi, self.prefix, self.fuel
        );
        for c in &self.checks {
            out.push_str(&c.text());
            out.push('\n');
        }
        out.push_str(&tally_text(self.verdict, &self.tally));
        out
    }
}

fn tally_record(verdict: bool, t: &Tally) -> String {
    Record::new("verdict", verdict_word(verdict).to_lowercase())
        .field("passed", t.passed)
        .field("failed", t.failed)
        .field("inconclusive", t.inconclusive)
        .to_string()
}

fn tally_text(verdict: bool, t: &Tally) -> String {
    format!(
        "verdict: {} ({} pass, {} fail, {} inconclusive)\n",
        verdict_word(verdict),
        t.passed,
        t.failed,
        t.inconclusive
    )
}

fn require_enumerator(registry: &Registry, j: &Index) -> Result<(), HarnessError> {
    if registry.is_certified_enumerator(j) {
        Ok(())
    } else {
        Err(GateError::Uncertified { j: j.clone() }.into())
    }
}

/// Checks `φ_{ψ(j)}(n) = φ_{φ_j(n)}(n) + 1` for `n = 0..=prefix`. Each of
/// the three interpretations per point gets its own `fuel` budget.
pub fn verify_diagonal(
    registry: &Registry,
    j: &Index,
    prefix: u64,
    fuel: u64,
) -> Result<DiagonalReport, HarnessError> {
    require_enumerator(registry, j)?;
    Ok(diagonal_report(&mut Machine::new(), j, prefix, fuel))
}

fn diagonal_report(machine: &mut Machine, j: &Index, prefix: u64, fuel: u64) -> DiagonalReport {
    let psi_j = psi(j);
    let checks: Vec<_> = (0..=prefix)
        .map(|n| diagonal_check(machine, j, &psi_j, n, fuel))
        .collect();
    let tally = Tally::of(checks.iter().map(|c| c.status));
    DiagonalReport {
        enumerator: j.clone(),
        psi: psi_j,
        prefix,
        fuel,
        checks,
        verdict: tally.all_pass(),
        tally,
    }
}

/// One sampled point of `range φ_j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EscapeCheck {
    pub n: u64,
    pub value: Option<Index>,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EscapeReport {
    pub enumerator: Index,
    pub psi: Index,
    pub prefix: u64,
    pub fuel: u64,
    pub checks: Vec<EscapeCheck>,
    pub tally: Tally,
    pub verdict: bool,
}

impl EscapeReport {
    pub fn to_records(&self) -> Vec<String> {
        let mut out = vec![Record::new("report", "escape")
            .field("j", &self.enumerator)
            .field("psi", &self.psi)
            .field("prefix", self.prefix)
            .field("fuel", self.fuel)
            .to_string()];
        out.extend(self.checks.iter().map(|c| {
            Record::new("check", "escape")
                .field("n", c.n)
                .opt("value", c.value.as_ref())
                .field("status", c.status)
                .to_string()
        }));
        out.push(tally_record(self.verdict, &self.tally));
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "escape of psi={} from range of j={} over n<={} with fuel {}\n",
            self.psi, self.enumerator, self.prefix, self.fuel
        );
        for c in &self.checks {
            writeln!(
                out,
                "  n={:<3} phi_j(n)={}  {}",
                c.n,
                show(c.value.as_ref()),
                c.status.to_string().to_uppercase()
            )
            .unwrap();
        }
        out.push_str(&tally_text(self.verdict, &self.tally));
        out
    }
}

fn sample_range(
    machine: &mut Machine,
    j: &Index,
    psi_j: &Index,
    prefix: u64,
    fuel: u64,
) -> Vec<EscapeCheck> {
    (0..=prefix)
        .map(|n| {
            let value = machine
                .run_index(j, &BigUint::from(n), fuel)
                .into_value()
                .map(Index);
            let status = match &value {
                Some(v) if v == psi_j => Status::Fail,
                Some(_) => Status::Pass,
                None => Status::Inconclusive,
            };
            EscapeCheck { n, value, status }
        })
        .collect()
}

/// Checks `ψ(j) ∉ { φ_j(n) : n ≤ prefix }`.
pub fn verify_escape(
    registry: &Registry,
    j: &Index,
    prefix: u64,
    fuel: u64,
) -> Result<EscapeReport, HarnessError> {
    require_enumerator(registry, j)?;
    let psi_j = psi(j);
    let checks = sample_range(&mut Machine::new(), j, &psi_j, prefix, fuel);
    let tally = Tally::of(checks.iter().map(|c| c.status));
    Ok(EscapeReport {
        enumerator: j.clone(),
        psi: psi_j,
        prefix,
        fuel,
        checks,
        verdict: tally.all_pass(),
        tally,
    })
}

/// The finite-prefix content of the argument that no `P_j` computes ω when
/// `j` is fed to Q: ω(l) = ψ(j), yet ψ(j) is absent from the sampled range of
/// `φ_j` and the diagonal +1 law holds at every sampled point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContradictionReport {
    pub enumerator: Index,
    #[serde(with = "crate::decimal")]
    pub fed_slot: BigUint,
    pub omega_at_slot: Index,
    pub psi: Index,
    pub sampled_range: Vec<EscapeCheck>,
    pub diagonal_checks: Vec<DiagonalCheck>,
    /// Points where any interpretation ran out of fuel.
    pub inconclusive: Vec<u64>,
    pub verdict: bool,
}

impl ContradictionReport {
    pub fn to_records(&self) -> Vec<String> {
        let mut out = vec![Record::new("report", "thm5")
            .field("j", &self.enumerator)
            .field("slot", &self.fed_slot)
            .field("omega", &self.omega_at_slot)
            .field("psi", &self.psi)
            .to_string()];
        for c in &self.sampled_range {
            out.push(
                Record::new("check", "range")
                    .field("n", c.n)
                    .opt("value", c.value.as_ref())
                    .field("status", c.status)
                    .to_string(),
            );
        }
        out.extend(self.diagonal_checks.iter().map(|c| c.record().to_string()));
        out.push(
            Record::new("verdict", verdict_word(self.verdict).to_lowercase())
                .field("inconclusive", self.inconclusive.len())
                .to_string(),
        );
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "fed j={} into Q: slot l={}, omega(l)={}, psi(j)={}\n",
            self.enumerator, self.fed_slot, self.omega_at_slot, self.psi
        );
        out.push_str("sampled range of phi_j:\n");
        for c in &self.sampled_range {
            writeln!(
                out,
                "  n={:<3} phi_j(n)={}  {}",
                c.n,
                show(c.value.as_ref()),
                c.status.to_string().to_uppercase()
            )
            .unwrap();
        }
        out.push_str("diagonal law:\n");
        for c in &self.diagonal_checks {
            out.push_str(&c.text());
            out.push('\n');
        }
        writeln!(
            out,
            "verdict: {} (omega(l) = psi(j) escapes every sampled phi_j(n); {} inconclusive)",
            verdict_word(self.verdict),
            self.inconclusive.len()
        )
        .unwrap();
        out
    }
}

/// Feeds `j` to Q and assembles the witness over `n ≤ prefix`.
pub fn theorem5_witness(
    session: &mut Session,
    j: &Index,
    prefix: u64,
    fuel: u64,
) -> Result<ContradictionReport, HarnessError> {
    require_enumerator(session.registry(), j)?;
    let slot = session.alpha().least_unused().clone();
    session.q_feed(j)?;
    let omega_at_slot = Index(session.q_query(&slot));
    let psi_j = psi(j);

    let mut machine = Machine::new();
    let sampled_range = sample_range(&mut machine, j, &psi_j, prefix, fuel);
    let diagonal_checks: Vec<_> = (0..=prefix)
        .map(|n| diagonal_check(&mut machine, j, &psi_j, n, fuel))
        .collect();

    let mut inconclusive: Vec<u64> = sampled_range
        .iter()
        .filter(|c| c.status == Status::Inconclusive)
        .map(|c| c.n)
        .chain(
            diagonal_checks
                .iter()
                .filter(|c| c.status == Status::Inconclusive)
                .map(|c| c.n),
        )
        .collect();
    inconclusive.sort_unstable();
    inconclusive.dedup();

    let verdict = omega_at_slot == psi_j
        && sampled_range.iter().all(|c| c.status == Status::Pass)
        && diagonal_checks.iter().all(|c| c.status == Status::Pass);

    Ok(ContradictionReport {
        enumerator: j.clone(),
        fed_slot: slot,
        omega_at_slot,
        psi: psi_j,
        sampled_range,
        diagonal_checks,
        inconclusive,
        verdict,
    })
}

/// One line of an example transcript.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Step {
    Certify {
        tag: String,
        subject: Index,
    },
    Feed {
        j: Index,
        slot: String,
        returned: String,
    },
    Query {
        x: String,
        returned: String,
    },
    Assert {
        label: String,
        left: String,
        right: String,
    },
}

impl Step {
    fn record(&self) -> Record {
        match self {
            Step::Certify { tag, subject } => Record::new("step", "certify")
                .field("rule", tag)
                .field("subject", subject),
            Step::Feed { j, slot, returned } => Record::new("step", "feed")
                .field("j", j)
                .field("slot", slot)
                .field("returned", returned),
            Step::Query { x, returned } => Record::new("step", "query")
                .field("x", x)
                .field("returned", returned),
            Step::Assert { label, left, right } => Record::new("step", "assert")
                .field("label", format!("{label:?}"))
                .field("left", left)
                .field("right", right)
                .field("holds", left == right),
        }
    }

    fn text(&self) -> String {
        match self {
            Step::Certify { tag, subject } => format!("certify {tag} {subject}"),
            Step::Feed { j, slot, returned } => {
                format!("feed j={j} -> alpha({slot}) := psi(j), returned {returned}")
            }
            Step::Query { x, returned } => format!("query omega({x}) = {returned}"),
            Step::Assert { label, left, right } => {
                format!(
                    "assert {label}: {left} = {right} {}",
                    if left == right { "OK" } else { "FAILED" }
                )
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Transcript {
    pub name: String,
    pub steps: Vec<Step>,
    #[serde(skip)]
    pub session: Session,
}

impl Transcript {
    pub fn to_records(&self) -> Vec<String> {
        let mut out = vec![Record::new("transcript", format!("{:?}", self.name)).to_string()];
        out.extend(self.steps.iter().map(|s| s.record().to_string()));
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.name);
        for s in &self.steps {
            out.push_str(&s.text());
            out.push('\n');
        }
        out
    }

    pub fn assertions(&self) -> impl Iterator<Item = &Step> {
        self.steps
            .iter()
            .filter(|s| matches!(s, Step::Assert { .. }))
    }
}

struct Script {
    name: String,
    session: Session,
    steps: Vec<Step>,
}

impl Script {
    fn new(name: &str) -> Self {
        Script {
            name: name.into(),
            session: Session::new(),
            steps: Vec::new(),
        }
    }

    fn base(&mut self) -> Result<Index, HarnessError> {
        let j1 = self.session.certify_base_enumerator()?;
        for c in self.session.registry().certificates() {
            self.steps.push(Step::Certify {
                tag: c.tag.into(),
                subject: c.subject.clone(),
            });
        }
        Ok(j1)
    }

    fn query(&mut self, x: u64) -> BigUint {
        let x = BigUint::from(x);
        let returned = self.session.q_query(&x);
        self.steps.push(Step::Query {
            x: x.to_string(),
            returned: returned.to_string(),
        });
        returned
    }

    fn feed(&mut self, j: &Index) -> Result<(), HarnessError> {
        let slot = self.session.alpha().least_unused().clone();
        let returned = self.session.q_feed(j)?;
        self.steps.push(Step::Feed {
            j: j.clone(),
            slot: slot.to_string(),
            returned: returned.to_string(),
        });
        Ok(())
    }

    fn assert_eq(
        &mut self,
        label: String,
        left: impl ToString,
        right: impl ToString,
    ) -> Result<(), HarnessError> {
        let (left, right) = (left.to_string(), right.to_string());
        if left != right {
            return Err(HarnessError::Assertion { label, left, right });
        }
        self.steps.push(Step::Assert { label, left, right });
        Ok(())
    }

    fn finish(self) -> Transcript {
        Transcript {
            name: self.name,
            steps: self.steps,
            session: self.session,
        }
    }
}

/// Example 1 on a fresh session: ω(1) and ω(5) take the constant `c`, then
/// feeding `j1` fills the least unused slot (0) with ψ(j1).
pub fn run_example1() -> Result<Transcript, HarnessError> {
    let mut s = Script::new("example 1");
    let j1 = s.base()?;
    let c = s.session.constant().clone();

    let w1 = s.query(1);
    s.assert_eq("omega(1) = c".into(), &w1, &c)?;
    let w5 = s.query(5);
    s.assert_eq("omega(5) = c".into(), &w5, &c)?;

    s.feed(&j1)?;
    let w0 = s.query(0);
    s.assert_eq("omega(0) = psi(j1)".into(), &w0, psi(&j1))?;
    let size = s.session.alpha().len();
    s.assert_eq("|alpha| = 3".into(), size, 3)?;
    Ok(s.finish())
}

/// Example 2 for levels `1..=k`: `j1 = const_program(0)` and
/// `j_m = prepend_value(j_{m-1}, ψ(j_{m-1}))`, each certified and fed in
/// turn. Asserts ω(m-1) = ψ(j_m) and samples the shift law
/// `φ_{j_m}(0) = ψ(j_{m-1})`, `φ_{j_m}(x) = φ_{j_{m-1}}(x-1)` for `x ≤ 5`.
pub fn run_example2(k: u64) -> Result<Transcript, HarnessError> {
    if !(1..=MAX_CHAIN_LENGTH).contains(&k) {
        return Err(HarnessError::Parameter(format!(
            "k must be in 1..={MAX_CHAIN_LENGTH}, got {k}"
        )));
    }
    let mut s = Script::new(&format!("example 2 (k={k})"));
    let mut machine = Machine::new();
    let mut j = s.base()?;

    for m in 1..=k {
        if m > 1 {
            let head = psi(&j);
            let next = prepend_value(&j, &head);
            let cert = s.session.issue_enum(
                &next,
                EnumRule::Prepend {
                    tail: j.clone(),
                    head: head.clone(),
                },
            )?;
            s.steps.push(Step::Certify {
                tag: cert.tag.into(),
                subject: next.clone(),
            });

            let at_zero = machine
                .run_index(&next, &BigUint::from(0u32), DEFAULT_FUEL)
                .into_value();
            s.assert_eq(
                format!("phi_j{m}(0) = psi(j{})", m - 1),
                show(at_zero.as_ref()),
                &head,
            )?;
            for x in 1..=SHIFT_LAW_POINTS {
                let now = machine
                    .run_index(&next, &BigUint::from(x), DEFAULT_FUEL)
                    .into_value();
                let before = machine
                    .run_index(&j, &BigUint::from(x - 1), DEFAULT_FUEL)
                    .into_value();
                if now.is_none() || before.is_none() {
                    return Err(HarnessError::Assertion {
                        label: format!("shift law at level {m}, x={x}"),
                        left: show(now.as_ref()),
                        right: show(before.as_ref()),
                    });
                }
                s.assert_eq(
                    format!("phi_j{m}({x}) = phi_j{}({})", m - 1, x - 1),
                    show(now.as_ref()),
                    show(before.as_ref()),
                )?;
            }
            j = next;
        }
        s.feed(&j)?;
        let w = s.query(m - 1);
        s.assert_eq(format!("omega({}) = psi(j{m})", m - 1), &w, psi(&j))?;
    }
    Ok(s.finish())
}

/// The enumerator chain `j_1..=j_k` of Example 2, without a session.
pub fn example2_chain(k: u64) -> Vec<Index> {
    let mut chain = vec![const_program(&Index::zero())];
    while (chain.len() as u64) < k {
        let last = chain.last().expect("non-empty");
        chain.push(prepend_value(last, &psi(last)));
    }
    chain
}

mod opt_decimal {
    use num_bigint::BigUint;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(value: &Option<BigUint>, s: S) -> Result<S::Ok, S::Error> {
        match value {
            Some(v) => s.collect_str(v),
            None => s.serialize_none(),
        }
    }
}
