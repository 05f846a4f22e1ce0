//! Computability workbench: a register language with a bijective numbering,
//! the diagonal and enumerator constructions over it, certificates of
//! totality, the stage procedure Q with a replayable session log, and
//! finite-prefix checks of the diagonal argument.

pub mod algebra;
pub mod certify;
pub mod decimal;
pub mod harness;
pub mod lang;
pub mod numbering;
pub mod qproc;
pub mod text;

pub use algebra::{
    build_psi, compose, const_program, identity_index, prepend_value, psi, DiagonalProgram,
};
pub use certify::{CertKind, Certificate, CertifyError, Class, EnumRule, Registry, TotalRule};
pub use harness::{
    ContradictionReport, DiagonalReport, EscapeReport, HarnessError, Status, Transcript,
};
pub use lang::{interpret, r, run_index, Machine, Program, Register, RunOutcome, Statement};
pub use numbering::{decode_program, encode_program, Index};
pub use qproc::{AlphaEntry, AlphaStore, GateError, Origin, Session, SessionError};
