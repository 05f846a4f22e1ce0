#![allow(dead_code)]

use diagwork_core::{r, Program, Register, Statement};
use num_bigint::BigUint;
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::TestRunner;

pub fn big() -> impl Strategy<Value = BigUint> + Clone {
    prop_oneof![
        4 => (0u64..20).prop_map(BigUint::from),
        2 => any::<u64>().prop_map(BigUint::from),
        1 => prop::collection::vec(any::<u32>(), 1..6).prop_map(BigUint::new),
    ]
}

pub fn register() -> impl Strategy<Value = Register> + Clone {
    prop_oneof![
        6 => (0u64..5).prop_map(r),
        1 => big().prop_map(Register),
    ]
}

/// Small register file so that straight-line programs actually interact.
pub fn low_register() -> impl Strategy<Value = Register> + Clone {
    (0u64..4).prop_map(r)
}

fn leaf(
    reg: impl Strategy<Value = Register> + Clone + 'static,
    with_eval: bool,
) -> BoxedStrategy<Statement> {
    let base = prop_oneof![
        reg.clone().prop_map(Statement::inc),
        reg.clone().prop_map(Statement::dec),
        (reg.clone(), big()).prop_map(|(d, v)| Statement::set(d, v)),
        (reg.clone(), reg.clone()).prop_map(|(d, s)| Statement::copy(d, s)),
    ];
    if with_eval {
        prop_oneof![4 => base, 1 => (reg.clone(), reg.clone(), reg).prop_map(|(d, p, a)| Statement::eval(d, p, a))].boxed()
    } else {
        base.boxed()
    }
}

/// Arbitrary programs with `while` nesting depth at most 5.
pub fn program() -> impl Strategy<Value = Program> {
    let stmt = leaf(register(), true).prop_recursive(4, 48, 5, |inner| {
        prop_oneof![
            3 => leaf(register(), true),
            1 => (register(), prop::collection::vec(inner, 0..4)).prop_map(|(reg, body)| Statement::while_nz(reg, body)),
        ]
    });
    prop::collection::vec(stmt, 0..6).prop_map(Program::new)
}

/// Programs without `while` or `eval`, i.e. syntactically total ones.
pub fn straight_line() -> impl Strategy<Value = Program> {
    prop::collection::vec(leaf(low_register(), false), 0..10).prop_map(Program::new)
}

/// Deterministic draws from a strategy, for fixed-size samples.
pub fn sample<T: std::fmt::Debug>(strategy: impl Strategy<Value = T>, count: usize) -> Vec<T> {
    let mut runner = TestRunner::deterministic();
    (0..count)
        .map(|_| strategy.new_tree(&mut runner).expect("strategy").current())
        .collect()
}
