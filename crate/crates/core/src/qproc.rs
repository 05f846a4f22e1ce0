//! Procedure Q, its global memo function α, and the session log that makes
//! α survive process restarts.
//!
//! ```text
//! 1. l := least { n | n ∉ dom α }
//! 2. if j is set
//! 3.   then α := α ∪ {(l, ψ(j))}
//! 4. if x is not set
//! 5.   then return 1
//! 6. if x ∈ dom α
//! 7.   then return α(x)
//! 8. α := α ∪ {(x, c)}
//! 9. return α(x)
//! ```
//!
//! `j` is only accepted when it holds an enumerator certificate, and every
//! accepted `j` also certifies ψ(j) total, so the range of α stays inside
//! the certified-total indices.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use num_bigint::BigUint;
use num_traits::One;
use serde::Serialize;
use thiserror::Error;

use crate::algebra;
use crate::certify::{CertKind, Certificate, CertifyError, EnumRule, Registry, TotalRule};
use crate::numbering::Index;

pub const SESSION_FORMAT_VERSION: u32 = 1;

/// Which line of Q created an α entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    /// Line 3: `(l, ψ(j))`.
    Feed,
    /// Line 8: `(x, c)`.
    Query,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AlphaEntry {
    #[serde(with = "crate::decimal")]
    pub slot: BigUint,
    pub index: Index,
    pub origin: Origin,
}

/// Append-only finite function ℕ → Index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AlphaStore {
    entries: Vec<AlphaEntry>,
    position: HashMap<BigUint, usize>,
    // dom α only grows, so the least unused slot never moves backwards.
    least_unused: BigUint,
}

impl AlphaStore {
    pub fn new() -> Self {
        AlphaStore::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, x: &BigUint) -> Option<&Index> {
        self.position.get(x).map(|&i| &self.entries[i].index)
    }

    pub fn contains(&self, x: &BigUint) -> bool {
        self.position.contains_key(x)
    }

    pub fn least_unused(&self) -> &BigUint {
        &self.least_unused
    }

    /// Entries in insertion order.
    pub fn entries(&self) -> &[AlphaEntry] {
        &self.entries
    }

    pub fn range(&self) -> impl Iterator<Item = &Index> {
        self.entries.iter().map(|e| &e.index)
    }

    fn insert(&mut self, slot: BigUint, index: Index, origin: Origin) {
        debug_assert!(!self.contains(&slot), "α is functional");
        self.position.insert(slot.clone(), self.entries.len());
        self.entries.push(AlphaEntry {
            slot,
            index,
            origin,
        });
        while self.position.contains_key(&self.least_unused) {
            self.least_unused += 1u32;
        }
    }
}

/// One mutating command against a session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Cert { subject: Index, kind: CertKind },
    Feed { j: Index },
    Query { x: BigUint },
    Both { x: BigUint, j: Index },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionRecord {
    pub command: Command,
    /// What Q returned; `None` for certificate issuance.
    pub returned: Option<BigUint>,
}

impl fmt::Display for SessionRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.command {
            Command::Cert { subject, kind } => {
                f.write_str(&Certificate::new(subject.clone(), kind.clone()).to_record())?
            }
            Command::Feed { j } => write!(f, "FEED {j}")?,
            Command::Query { x } => write!(f, "QUERY {x}")?,
            Command::Both { x, j } => write!(f, "BOTH {x} {j}")?,
        }
        if let Some(v) = &self.returned {
            write!(f, " {v}")?;
        }
        Ok(())
    }
}

/// Ordered command records; replaying them against an empty session
/// reproduces α and the certificate registry exactly.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SessionLog {
    pub records: Vec<SessionRecord>,
}

impl SessionLog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GateError {
    #[error("gate violation: {j} holds no enumerator certificate")]
    Uncertified { j: Index },
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("session i/o: {0}")]
    Io(#[from] io::Error),
    #[error("malformed record at line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("session file truncated; last good line is {last_good_line}")]
    Truncated { last_good_line: usize },
    #[error("record count trailer says {expected} but {found} records were read")]
    CountMismatch { expected: usize, found: usize },
    #[error("record at line {line} was rejected on replay: {message}")]
    Rejected { line: usize, message: String },
    #[error("replay diverged at line {line}: recorded {recorded}, recomputed {recomputed}")]
    Diverged {
        line: usize,
        recorded: String,
        recomputed: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Session {
    alpha: AlphaStore,
    registry: Registry,
    log: SessionLog,
    constant: Index,
}

impl Default for Session {
    fn default() -> Self {
        Session::new()
    }
}

impl Session {
    /// A session with α = ∅ ("before the first execution") and an empty
    /// registry. `c` is the identity index.
    pub fn new() -> Self {
        Session {
            alpha: AlphaStore::new(),
            registry: Registry::new(),
            log: SessionLog::default(),
            constant: algebra::identity_index(),
        }
    }

    pub fn alpha(&self) -> &AlphaStore {
        &self.alpha
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn log(&self) -> &SessionLog {
        &self.log
    }

    /// The constant `c` of line 8.
    pub fn constant(&self) -> &Index {
        &self.constant
    }

    /// Reads α without running Q. This is not ω: line 8 never fires.
    pub fn peek(&self, x: &BigUint) -> Option<&Index> {
        self.alpha.get(x)
    }

    pub fn is_certified_total(&self, i: &Index) -> bool {
        self.registry.is_certified_total(i)
    }

    pub fn is_certified_enumerator(&self, i: &Index) -> bool {
        self.registry.is_certified_enumerator(i)
    }

    /// One execution of Q. Rejects an uncertified `j` before touching α.
    pub fn q_step(&mut self, x: Option<&BigUint>, j: Option<&Index>) -> Result<BigUint, GateError> {
        if let Some(j) = j {
            if !self.registry.is_certified_enumerator(j) {
                return Err(GateError::Uncertified { j: j.clone() });
            }
        }
        let returned = self.step_unchecked(x, j);
        let command = match (x, j) {
            (Some(x), Some(j)) => Command::Both {
                x: x.clone(),
                j: j.clone(),
            },
            (Some(x), None) => Command::Query { x: x.clone() },
            (None, Some(j)) => Command::Feed { j: j.clone() },
            // Line 5 with nothing to do still counts as an execution, but
            // there is nothing to record or replay.
            (None, None) => return Ok(returned),
        };
        self.log.records.push(SessionRecord {
            command,
            returned: Some(returned.clone()),
        });
        Ok(returned)
    }

    fn step_unchecked(&mut self, x: Option<&BigUint>, j: Option<&Index>) -> BigUint {
        let l = self.alpha.least_unused().clone();
        if let Some(j) = j {
            let cert = self
                .registry
                .apply_rule_psi(j)
                .expect("enumerator certificate checked by the gate");
            self.alpha.insert(l, cert.subject, Origin::Feed);
        }
        let Some(x) = x else {
            return BigUint::one();
        };
        if let Some(v) = self.alpha.get(x) {
            return v.0.clone();
        }
        self.alpha
            .insert(x.clone(), self.constant.clone(), Origin::Query);
        self.alpha.get(x).expect("just inserted").0.clone()
    }

    /// ω(x). Always returns.
    pub fn q_query(&mut self, x: &BigUint) -> BigUint {
        self.q_step(Some(x), None)
            .expect("no second input, no gate")
    }

    /// Applies Q with only the second input set; returns 1.
    pub fn q_feed(&mut self, j: &Index) -> Result<BigUint, GateError> {
        self.q_step(None, Some(j))
    }

    pub fn issue_total(
        &mut self,
        subject: &Index,
        rule: TotalRule,
    ) -> Result<Certificate, CertifyError> {
        self.issue(subject, CertKind::Total(rule))
    }

    pub fn issue_enum(
        &mut self,
        subject: &Index,
        rule: EnumRule,
    ) -> Result<Certificate, CertifyError> {
        self.issue(subject, CertKind::Enumerator(rule))
    }

    pub fn apply_rule_psi(&mut self, j: &Index) -> Result<Certificate, CertifyError> {
        let subject = algebra::psi(j);
        self.issue(
            &subject,
            CertKind::Total(TotalRule::ByPsi { source: j.clone() }),
        )
    }

    pub fn issue(&mut self, subject: &Index, kind: CertKind) -> Result<Certificate, CertifyError> {
        let cert = self.registry.issue(subject, kind.clone())?;
        self.log.records.push(SessionRecord {
            command: Command::Cert {
                subject: subject.clone(),
                kind,
            },
            returned: None,
        });
        Ok(cert)
    }

    /// Re-executes a log from an empty session, checking every recorded
    /// return value.
    pub fn replay(log: &SessionLog) -> Result<Session, SessionError> {
        let mut session = Session::new();
        for (i, record) in log.records.iter().enumerate() {
            session.apply(record, i + 1)?;
        }
        Ok(session)
    }

    fn apply(&mut self, record: &SessionRecord, line: usize) -> Result<(), SessionError> {
        let rejected = |message: String| SessionError::Rejected { line, message };
        let returned = match &record.command {
            Command::Cert { subject, kind } => {
                self.issue(subject, kind.clone())
                    .map_err(|e| rejected(e.to_string()))?;
                None
            }
            Command::Feed { j } => Some(self.q_feed(j).map_err(|e| rejected(e.to_string()))?),
            Command::Query { x } => Some(self.q_query(x)),
            Command::Both { x, j } => Some(
                self.q_step(Some(x), Some(j))
                    .map_err(|e| rejected(e.to_string()))?,
            ),
        };
        if returned != record.returned {
            let show =
                |v: &Option<BigUint>| v.as_ref().map_or("nothing".to_string(), |v| v.to_string());
            return Err(SessionError::Diverged {
                line,
                recorded: show(&record.returned),
                recomputed: show(&returned),
            });
        }
        Ok(())
    }

    /// Renders the session file:
    ///
    /// ```text
    /// SESSION version=1 c=0
    /// CERT SYNTACTIC-TOTAL 0
    /// CERT ENUM-CONST 7 0
    /// FEED 7 1
    /// QUERY 1 0
    /// COUNT 4
    /// ```
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "SESSION version={SESSION_FORMAT_VERSION} c={}\n",
            self.constant
        );
        for record in &self.log.records {
            out.push_str(&record.to_string());
            out.push('\n');
        }
        out.push_str(&format!("COUNT {}\n", self.log.len()));
        out
    }

    pub fn parse_log(text: &str) -> Result<SessionLog, SessionError> {
        let lines: Vec<&str> = text.lines().collect();
        let header = lines
            .first()
            .ok_or(SessionError::Truncated { last_good_line: 0 })?;
        let expected_header = format!("SESSION version={SESSION_FORMAT_VERSION} c=0");
        if header.trim_end() != expected_header {
            return Err(SessionError::Malformed {
                line: 1,
                message: format!("expected header {expected_header:?}"),
            });
        }

        let mut log = SessionLog::default();
        for (i, line) in lines.iter().enumerate().skip(1) {
            let line_no = i + 1;
            let is_last = i + 1 == lines.len();
            let fields: Vec<&str> = line.split_whitespace().collect();
            if let ["COUNT", n] = fields.as_slice() {
                let expected: usize = n.parse().map_err(|_| SessionError::Malformed {
                    line: line_no,
                    message: format!("bad record count {n:?}"),
                })?;
                if !lines[i + 1..].iter().all(|l| l.trim().is_empty()) {
                    return Err(SessionError::Malformed {
                        line: line_no + 1,
                        message: "data after COUNT trailer".into(),
                    });
                }
                if expected != log.len() {
                    return Err(SessionError::CountMismatch {
                        expected,
                        found: log.len(),
                    });
                }
                return Ok(log);
            }
            match parse_record(&fields) {
                Ok(record) => log.records.push(record),
                // A half-written final line is a truncation, not corruption.
                Err(_) if is_last => {
                    return Err(SessionError::Truncated {
                        last_good_line: line_no - 1,
                    })
                }
                Err(message) => {
                    return Err(SessionError::Malformed {
                        line: line_no,
                        message,
                    })
                }
            }
        }
        Err(SessionError::Truncated {
            last_good_line: lines.len(),
        })
    }

    pub fn from_text(text: &str) -> Result<Session, SessionError> {
        let log = Session::parse_log(text)?;
        // Records start on line 2 of the file.
        Session::replay(&log).map_err(|e| match e {
            SessionError::Rejected { line, message } => SessionError::Rejected {
                line: line + 1,
                message,
            },
            SessionError::Diverged {
                line,
                recorded,
                recomputed,
            } => SessionError::Diverged {
                line: line + 1,
                recorded,
                recomputed,
            },
            other => other,
        })
    }

    /// Writes via a temporary sibling and rename, so a crash never leaves a
    /// half-written session under `path`.
    pub fn save(&self, path: &Path) -> Result<(), SessionError> {
        let tmp = path.with_extension("tmp-write");
        {
            let mut file = fs::File::create(&tmp)?;
            file.write_all(self.to_text().as_bytes())?;
            file.sync_all()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Session, SessionError> {
        Session::from_text(&fs::read_to_string(path)?)
    }
}

fn parse_record(fields: &[&str]) -> Result<SessionRecord, String> {
    let nat = |s: &str| crate::decimal::parse(s);
    let idx = |s: &str| s.parse::<Index>();
    let (command, returned) = match fields {
        ["CERT", rest @ ..] => {
            let (subject, kind) = Certificate::from_fields(rest)?;
            (Command::Cert { subject, kind }, None)
        }
        ["FEED", j, ret] => (Command::Feed { j: idx(j)? }, Some(nat(ret)?)),
        ["QUERY", x, ret] => (Command::Query { x: nat(x)? }, Some(nat(ret)?)),
        ["BOTH", x, j, ret] => (
            Command::Both {
                x: nat(x)?,
                j: idx(j)?,
            },
            Some(nat(ret)?),
        ),
        [verb, ..] => {
            return Err(format!(
                "unexpected {verb} record with {} fields",
                fields.len()
            ))
        }
        [] => return Err("empty line".into()),
    };
    Ok(SessionRecord { command, returned })
}

impl Session {
    /// Every value in the range of α holds a total certificate.
    pub fn range_is_certified(&self) -> bool {
        self.alpha
            .range()
            .all(|i| self.registry.is_certified_total(i))
    }

    /// Bootstraps the base certificates used throughout: `0` (identity) is
    /// syntactically total and `const_program(0)` is an enumerator.
    /// Returns `const_program(0)`.
    pub fn certify_base_enumerator(&mut self) -> Result<Index, CertifyError> {
        self.issue_total(&Index::zero(), TotalRule::Syntactic)?;
        let j1 = algebra::const_program(&Index::zero());
        self.issue_enum(&j1, EnumRule::Const { t: Index::zero() })?;
        Ok(j1)
    }
}
