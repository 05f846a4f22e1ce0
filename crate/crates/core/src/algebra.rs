//! Program constructors over indices.
//!
//! Every constructor is a fixed template with the argument indices embedded
//! as `set` literals. Scratch registers `r1..r3` never alias the
//! input/output register `r0` except where a template deliberately writes
//! its result there.

use num_bigint::BigUint;
use num_traits::Zero;
use serde::Serialize;

use crate::lang::{r, Program, Statement};
use crate::numbering::{encode_program, Index};

/// The program computing `n ↦ φ_{φ_j(n)}(n) + 1` for a source enumerator `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiagonalProgram {
    pub source_enumerator: Index,
    pub program: Program,
    pub index: Index,
}

/// Template for ψ(j):
///
/// ```text
/// set r1 <j>
/// eval r2 r1 r0    # m := φ_j(n)
/// eval r3 r2 r0    # φ_m(n)
/// inc r3
/// copy r0 r3
/// ```
pub fn psi_program(j: &Index) -> Program {
    Program::new(vec![
        Statement::set(r(1), j.0.clone()),
        Statement::eval(r(2), r(1), r(0)),
        Statement::eval(r(3), r(2), r(0)),
        Statement::inc(r(3)),
        Statement::copy(r(0), r(3)),
    ])
}

pub fn build_psi(j: &Index) -> DiagonalProgram {
    let program = psi_program(j);
    let index = encode_program(&program);
    DiagonalProgram {
        source_enumerator: j.clone(),
        program,
        index,
    }
}

/// Shorthand for `build_psi(j).index`.
pub fn psi(j: &Index) -> Index {
    encode_program(&psi_program(j))
}

/// Template for the enumerator `g` with `g(0) = v` and `g(n) = φ_j(n - 1)`:
///
/// ```text
/// set r3 <v>
/// set r2 <j>
/// while r0 {
///   dec r0
///   eval r3 r2 r0
///   set r0 0
/// }
/// copy r0 r3
/// ```
///
/// Both literals sit at the front of the statement list. Each level of
/// list or payload nesting doubles the bit length of an embedded literal,
/// so this layout keeps repeated prepending to roughly 16x growth per step.
pub fn prepend_program(j: &Index, v: &Index) -> Program {
    Program::new(vec![
        Statement::set(r(3), v.0.clone()),
        Statement::set(r(2), j.0.clone()),
        Statement::while_nz(
            r(0),
            vec![
                Statement::dec(r(0)),
                Statement::eval(r(3), r(2), r(0)),
                Statement::set(r(0), BigUint::zero()),
            ],
        ),
        Statement::copy(r(0), r(3)),
    ])
}

pub fn prepend_value(j: &Index, v: &Index) -> Index {
    encode_program(&prepend_program(j, v))
}

pub fn const_program_body(t: &Index) -> Program {
    Program::new(vec![Statement::set(r(0), t.0.clone())])
}

/// Index of `n ↦ t`.
pub fn const_program(t: &Index) -> Index {
    encode_program(&const_program_body(t))
}

pub fn compose_program(a: &Index, b: &Index) -> Program {
    Program::new(vec![
        Statement::set(r(1), b.0.clone()),
        Statement::eval(r(2), r(1), r(0)),
        Statement::set(r(1), a.0.clone()),
        Statement::eval(r(0), r(1), r(2)),
    ])
}

/// Index of `n ↦ φ_a(φ_b(n))`.
pub fn compose(a: &Index, b: &Index) -> Index {
    encode_program(&compose_program(a, b))
}

/// The empty program, i.e. the identity. This is the constant `c` that
/// procedure Q writes for fresh queries.
pub fn identity_index() -> Index {
    Index::zero()
}
