//! Certificates of totality and enumerator-hood.
//!
//! A certificate is one node of a finite derivation. Its premises are
//! earlier certificates looked up by subject index, so every tree is
//! acyclic by construction. The rules:
//!
//! | rule               | class      | subject               | premises                         |
//! |--------------------|------------|-----------------------|----------------------------------|
//! | `SYNTACTIC-TOTAL`  | total      | no `while`, no `eval` | none                             |
//! | `TOTAL-BY-PSI`     | total      | `psi(j)`              | `j` enumerator                   |
//! | `TOTAL-BY-COMPOSE` | total      | `compose(a, b)`       | `a`, `b` total                   |
//! | `ENUM-CONST`       | enumerator | `const_program(t)`    | `t` total                        |
//! | `ENUM-PREPEND`     | enumerator | `prepend_value(j, v)` | `j` enumerator, `v` total        |
//!
//! On disk each certificate is one line: `CERT <TAG> <subject> <premise>...`.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::algebra;
use crate::lang::{Program, Statement};
use crate::numbering::{decode_program, Index};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Class {
    Total,
    Enumerator,
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Class::Total => "total",
            Class::Enumerator => "enumerator",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum TotalRule {
    Syntactic,
    ByPsi { source: Index },
    ByCompose { a: Index, b: Index },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum EnumRule {
    Const { t: Index },
    Prepend { tail: Index, head: Index },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(untagged)]
pub enum CertKind {
    Total(TotalRule),
    Enumerator(EnumRule),
}

impl CertKind {
    pub fn class(&self) -> Class {
        match self {
            CertKind::Total(_) => Class::Total,
            CertKind::Enumerator(_) => Class::Enumerator,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            CertKind::Total(TotalRule::Syntactic) => "SYNTACTIC-TOTAL",
            CertKind::Total(TotalRule::ByPsi { .. }) => "TOTAL-BY-PSI",
            CertKind::Total(TotalRule::ByCompose { .. }) => "TOTAL-BY-COMPOSE",
            CertKind::Enumerator(EnumRule::Const { .. }) => "ENUM-CONST",
            CertKind::Enumerator(EnumRule::Prepend { .. }) => "ENUM-PREPEND",
        }
    }

    /// Premises in record order, with the class each must hold.
    pub fn premises(&self) -> Vec<(Index, Class)> {
        match self {
            CertKind::Total(TotalRule::Syntactic) => vec![],
            CertKind::Total(TotalRule::ByPsi { source }) => {
                vec![(source.clone(), Class::Enumerator)]
            }
            CertKind::Total(TotalRule::ByCompose { a, b }) => {
                vec![(a.clone(), Class::Total), (b.clone(), Class::Total)]
            }
            CertKind::Enumerator(EnumRule::Const { t }) => vec![(t.clone(), Class::Total)],
            CertKind::Enumerator(EnumRule::Prepend { tail, head }) => {
                vec![
                    (tail.clone(), Class::Enumerator),
                    (head.clone(), Class::Total),
                ]
            }
        }
    }

    /// Rebuilds a kind from a record tag and its premise indices.
    pub fn from_parts(tag: &str, premises: &[Index]) -> Option<CertKind> {
        let kind = match (tag, premises) {
            ("SYNTACTIC-TOTAL", []) => CertKind::Total(TotalRule::Syntactic),
            ("TOTAL-BY-PSI", [j]) => CertKind::Total(TotalRule::ByPsi { source: j.clone() }),
            ("TOTAL-BY-COMPOSE", [a, b]) => CertKind::Total(TotalRule::ByCompose {
                a: a.clone(),
                b: b.clone(),
            }),
            ("ENUM-CONST", [t]) => CertKind::Enumerator(EnumRule::Const { t: t.clone() }),
            ("ENUM-PREPEND", [tail, head]) => CertKind::Enumerator(EnumRule::Prepend {
                tail: tail.clone(),
                head: head.clone(),
            }),
            _ => return None,
        };
        Some(kind)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Certificate {
    pub subject: Index,
    pub class: Class,
    pub tag: &'static str,
    #[serde(skip)]
    pub kind: CertKind,
    pub premises: Vec<Index>,
}

impl Certificate {
    pub fn new(subject: Index, kind: CertKind) -> Self {
        let premises = kind.premises().into_iter().map(|(i, _)| i).collect();
        Certificate {
            subject,
            class: kind.class(),
            tag: kind.tag(),
            kind,
            premises,
        }
    }

    /// `CERT <TAG> <subject> <premise>...`
    pub fn to_record(&self) -> String {
        let mut line = format!("CERT {} {}", self.tag, self.subject);
        for p in &self.premises {
            line.push(' ');
            line.push_str(&p.to_string());
        }
        line
    }

    /// Parses the fields after the `CERT` verb. Only the shape is checked;
    /// soundness is re-established by re-issuing against a registry.
    pub fn from_fields(fields: &[&str]) -> Result<(Index, CertKind), String> {
        let (tag, rest) = fields.split_first().ok_or("missing certificate tag")?;
        let (subject, premises) = rest.split_first().ok_or("missing certificate subject")?;
        let subject: Index = subject.parse()?;
        let premises = premises
            .iter()
            .map(|p| p.parse())
            .collect::<Result<Vec<Index>, _>>()?;
        let kind = CertKind::from_parts(tag, &premises)
            .ok_or_else(|| format!("unknown rule {tag} with {} premises", premises.len()))?;
        Ok((subject, kind))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CertifyError {
    #[error("{rule}: premise {index} is not certified {class}")]
    UnmetPremise {
        rule: &'static str,
        index: Index,
        class: Class,
    },
    #[error("{rule}: subject {subject} is not {expected}")]
    WrongShape {
        rule: &'static str,
        subject: Index,
        expected: String,
    },
}

/// Straight-line programs always halt.
pub fn check_syntactic_total(program: &Program) -> bool {
    program
        .walk()
        .all(|s| !matches!(s, Statement::While { .. } | Statement::Eval { .. }))
}

/// Append-only store of issued certificates.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Registry {
    log: Vec<Certificate>,
    by_subject: HashMap<(Index, Class), Vec<usize>>,
}

impl Registry {
    pub fn new() -> Self {
        Registry::default()
    }

    pub fn len(&self) -> usize {
        self.log.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log.is_empty()
    }

    /// Certificates in issuance order.
    pub fn certificates(&self) -> &[Certificate] {
        &self.log
    }

    pub fn certificates_for(&self, subject: &Index) -> Vec<&Certificate> {
        self.log.iter().filter(|c| &c.subject == subject).collect()
    }

    pub fn is_certified_total(&self, i: &Index) -> bool {
        self.by_subject.contains_key(&(i.clone(), Class::Total))
    }

    pub fn is_certified_enumerator(&self, i: &Index) -> bool {
        self.by_subject
            .contains_key(&(i.clone(), Class::Enumerator))
    }

    fn holds(&self, i: &Index, class: Class) -> bool {
        match class {
            Class::Total => self.is_certified_total(i),
            Class::Enumerator => self.is_certified_enumerator(i),
        }
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

    /// `L(j) ⇒ T(ψ(j))`: certifies ψ(j) total given an enumerator
    /// certificate for `j`.
    pub fn apply_rule_psi(&mut self, j: &Index) -> Result<Certificate, CertifyError> {
        let subject = algebra::psi(j);
        self.issue_total(&subject, TotalRule::ByPsi { source: j.clone() })
    }

    /// Checks premises and side condition, then records the certificate.
    /// Re-issuing an existing (subject, kind) returns the stored copy.
    pub fn issue(&mut self, subject: &Index, kind: CertKind) -> Result<Certificate, CertifyError> {
        let class = kind.class();
        if let Some(existing) = self
            .by_subject
            .get(&(subject.clone(), class))
            .and_then(|ids| ids.iter().map(|&i| &self.log[i]).find(|c| c.kind == kind))
        {
            return Ok(existing.clone());
        }

        let rule = kind.tag();
        for (index, class) in kind.premises() {
            if !self.holds(&index, class) {
                return Err(CertifyError::UnmetPremise { rule, index, class });
            }
        }

        let wrong = |expected: String| CertifyError::WrongShape {
            rule,
            subject: subject.clone(),
            expected,
        };
        match &kind {
            CertKind::Total(TotalRule::Syntactic) => {
                if !check_syntactic_total(&decode_program(subject)) {
                    return Err(wrong("a straight-line program (no while, no eval)".into()));
                }
            }
            CertKind::Total(TotalRule::ByPsi { source }) => {
                if &algebra::psi(source) != subject {
                    return Err(wrong(format!("psi({source})")));
                }
            }
            CertKind::Total(TotalRule::ByCompose { a, b }) => {
                if &algebra::compose(a, b) != subject {
                    return Err(wrong(format!("compose({a}, {b})")));
                }
            }
            CertKind::Enumerator(EnumRule::Const { t }) => {
                if &algebra::const_program(t) != subject {
                    return Err(wrong(format!("const_program({t})")));
                }
            }
            CertKind::Enumerator(EnumRule::Prepend { tail, head }) => {
                if &algebra::prepend_value(tail, head) != subject {
                    return Err(wrong(format!("prepend_value({tail}, {head})")));
                }
            }
        }

        let cert = Certificate::new(subject.clone(), kind);
        self.by_subject
            .entry((subject.clone(), class))
            .or_default()
            .push(self.log.len());
        self.log.push(cert.clone());
        Ok(cert)
    }

    /// One `CERT ...` line per certificate, in issuance order.
    pub fn to_records(&self) -> Vec<String> {
        self.log.iter().map(Certificate::to_record).collect()
    }

    /// Rebuilds a registry by re-issuing every record in order, so a forged
    /// or reordered file is rejected rather than trusted.
    pub fn from_records<'a>(
        lines: impl IntoIterator<Item = &'a str>,
    ) -> Result<Registry, RecordError> {
        let mut registry = Registry::new();
        for (n, line) in lines.into_iter().enumerate() {
            let line_no = n + 1;
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields.split_first() {
                None => continue,
                Some((&"CERT", rest)) => {
                    let (subject, kind) =
                        Certificate::from_fields(rest).map_err(|message| RecordError {
                            line: line_no,
                            message,
                        })?;
                    registry.issue(&subject, kind).map_err(|e| RecordError {
                        line: line_no,
                        message: e.to_string(),
                    })?;
                }
                Some((verb, _)) => {
                    return Err(RecordError {
                        line: line_no,
                        message: format!("unknown verb {verb}"),
                    })
                }
            }
        }
        Ok(registry)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed record at line {line}: {message}")]
pub struct RecordError {
    pub line: usize,
    pub message: String,
}
