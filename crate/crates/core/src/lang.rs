//! The register object language and its fuel-bounded semantics.
//!
//! A program is a sequence of statements over unboundedly many registers
//! holding naturals. Input is placed in `r0`, output is read from `r0` when
//! the body finishes. Every statement execution, every loop test and every
//! loop re-test costs one unit of fuel; an `eval` costs one unit plus
//! whatever the evaluated program consumes, drawn from the same budget.

use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::numbering::{decode_program, Index};

/// A register name. Unmentioned registers read as zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Register(#[serde(with = "crate::decimal")] pub BigUint);

impl Register {
    pub fn new(id: u64) -> Self {
        Register(BigUint::from(id))
    }

    pub fn id(&self) -> &BigUint {
        &self.0
    }
}

impl From<u64> for Register {
    fn from(id: u64) -> Self {
        Register::new(id)
    }
}

impl fmt::Display for Register {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

/// Shorthand for `Register::new`.
pub fn r(id: u64) -> Register {
    Register::new(id)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Statement {
    /// `r := r + 1`
    Inc { reg: Register },
    /// `r := r - 1`, saturating at zero.
    Dec { reg: Register },
    /// Run `body` while `reg` is non-zero.
    While { reg: Register, body: Vec<Statement> },
    /// `r := n`
    SetConst {
        reg: Register,
        #[serde(with = "crate::decimal")]
        value: BigUint,
    },
    /// `dst := φ_{value(prog)}(value(arg))`
    Eval {
        dst: Register,
        prog: Register,
        arg: Register,
    },
    /// `dst := src`
    Copy { dst: Register, src: Register },
}

impl Statement {
    pub fn inc(reg: Register) -> Self {
        Statement::Inc { reg }
    }

    pub fn dec(reg: Register) -> Self {
        Statement::Dec { reg }
    }

    pub fn while_nz(reg: Register, body: Vec<Statement>) -> Self {
        Statement::While { reg, body }
    }

    pub fn set(reg: Register, value: impl Into<BigUint>) -> Self {
        Statement::SetConst {
            reg,
            value: value.into(),
        }
    }

    pub fn eval(dst: Register, prog: Register, arg: Register) -> Self {
        Statement::Eval { dst, prog, arg }
    }

    pub fn copy(dst: Register, src: Register) -> Self {
        Statement::Copy { dst, src }
    }
}

/// A finite statement sequence. The empty program computes the identity.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Program {
    pub body: Vec<Statement>,
}

impl Program {
    pub fn new(body: Vec<Statement>) -> Self {
        Program { body }
    }

    pub fn empty() -> Self {
        Program::default()
    }

    pub fn is_empty(&self) -> bool {
        self.body.is_empty()
    }

    /// Visits every statement, including those nested inside loop bodies.
    pub fn walk(&self) -> impl Iterator<Item = &Statement> {
        let mut stack: Vec<&Statement> = self.body.iter().rev().collect();
        std::iter::from_fn(move || {
            let stmt = stack.pop()?;
            if let Statement::While { body, .. } = stmt {
                stack.extend(body.iter().rev());
            }
            Some(stmt)
        })
    }
}

impl From<Vec<Statement>> for Program {
    fn from(body: Vec<Statement>) -> Self {
        Program { body }
    }
}

/// Result of a fuel-bounded run. `FuelExhausted` means "did not halt within
/// the budget", never "diverges".
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum RunOutcome {
    Halted {
        #[serde(with = "crate::decimal")]
        value: BigUint,
        fuel_used: u64,
    },
    FuelExhausted,
}

impl RunOutcome {
    pub fn value(&self) -> Option<&BigUint> {
        match self {
            RunOutcome::Halted { value, .. } => Some(value),
            RunOutcome::FuelExhausted => None,
        }
    }

    pub fn into_value(self) -> Option<BigUint> {
        match self {
            RunOutcome::Halted { value, .. } => Some(value),
            RunOutcome::FuelExhausted => None,
        }
    }

    pub fn fuel_used(&self) -> Option<u64> {
        match self {
            RunOutcome::Halted { fuel_used, .. } => Some(*fuel_used),
            RunOutcome::FuelExhausted => None,
        }
    }

    pub fn is_halted(&self) -> bool {
        matches!(self, RunOutcome::Halted { .. })
    }
}

impl fmt::Display for RunOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunOutcome::Halted { value, .. } => write!(f, "{value}"),
            RunOutcome::FuelExhausted => f.write_str("FUEL-EXHAUSTED"),
        }
    }
}

/// Flat instruction form of a program, registers renumbered to dense slots
/// with `r0` at slot 0.
#[derive(Debug)]
struct Compiled {
    code: Vec<Op>,
    slots: usize,
}

#[derive(Debug)]
enum Op {
    Inc(usize),
    Dec(usize),
    Set(usize, BigUint),
    Copy(usize, usize),
    Eval {
        dst: usize,
        prog: usize,
        arg: usize,
    },
    /// Costs fuel; jumps to `exit` when the register is zero.
    Test {
        reg: usize,
        exit: usize,
    },
    /// Free back-edge to the matching `Test`.
    Jump(usize),
}

struct SlotMap {
    slots: HashMap<BigUint, usize>,
}

impl SlotMap {
    fn new() -> Self {
        let mut slots = HashMap::new();
        slots.insert(BigUint::zero(), 0);
        SlotMap { slots }
    }

    fn get(&mut self, reg: &Register) -> usize {
        let next = self.slots.len();
        *self.slots.entry(reg.0.clone()).or_insert(next)
    }
}

fn compile(program: &Program) -> Compiled {
    fn emit(body: &[Statement], map: &mut SlotMap, code: &mut Vec<Op>) {
        for stmt in body {
            match stmt {
                Statement::Inc { reg } => code.push(Op::Inc(map.get(reg))),
                Statement::Dec { reg } => code.push(Op::Dec(map.get(reg))),
                Statement::SetConst { reg, value } => {
                    code.push(Op::Set(map.get(reg), value.clone()))
                }
                Statement::Copy { dst, src } => {
                    let (d, s) = (map.get(dst), map.get(src));
                    code.push(Op::Copy(d, s))
                }
                Statement::Eval { dst, prog, arg } => {
                    let (dst, prog, arg) = (map.get(dst), map.get(prog), map.get(arg));
                    code.push(Op::Eval { dst, prog, arg })
                }
                Statement::While { reg, body } => {
                    let test = code.len();
                    code.push(Op::Test {
                        reg: map.get(reg),
                        exit: 0,
                    });
                    emit(body, map, code);
                    code.push(Op::Jump(test));
                    let exit = code.len();
                    if let Op::Test { exit: e, .. } = &mut code[test] {
                        *e = exit;
                    }
                }
            }
        }
    }

    let mut map = SlotMap::new();
    let mut code = Vec::new();
    emit(&program.body, &mut map, &mut code);
    Compiled {
        code,
        slots: map.slots.len(),
    }
}

struct Frame {
    code: Rc<Compiled>,
    regs: Vec<BigUint>,
    pc: usize,
    /// Caller slot receiving this frame's `r0` on return.
    ret: usize,
}

impl Frame {
    fn new(code: Rc<Compiled>, input: BigUint, ret: usize) -> Self {
        let mut regs = vec![BigUint::zero(); code.slots];
        regs[0] = input;
        Frame {
            code,
            regs,
            pc: 0,
            ret,
        }
    }
}

/// An interpreter that memoizes decoded programs across runs.
///
/// The cache only affects speed; outcomes are a pure function of
/// `(program, input, fuel)`.
#[derive(Default)]
pub struct Machine {
    cache: HashMap<BigUint, Rc<Compiled>>,
}

impl Machine {
    pub fn new() -> Self {
        Machine::default()
    }

    fn load(&mut self, index: &BigUint) -> Rc<Compiled> {
        if let Some(c) = self.cache.get(index) {
            return Rc::clone(c);
        }
        let compiled = Rc::new(compile(&decode_program(&Index(index.clone()))));
        self.cache.insert(index.clone(), Rc::clone(&compiled));
        compiled
    }

    /// Runs the program with the given index.
    pub fn run_index(&mut self, index: &Index, input: &BigUint, fuel: u64) -> RunOutcome {
        let code = self.load(&index.0);
        self.execute(code, input.clone(), fuel)
    }

    pub fn run(&mut self, program: &Program, input: &BigUint, fuel: u64) -> RunOutcome {
        self.execute(Rc::new(compile(program)), input.clone(), fuel)
    }

    fn execute(&mut self, code: Rc<Compiled>, input: BigUint, fuel: u64) -> RunOutcome {
        let mut remaining = fuel;
        let mut stack = vec![Frame::new(code, input, 0)];

        loop {
            let top = stack.last_mut().expect("frame stack never empty here");
            if top.pc >= top.code.code.len() {
                let done = stack.pop().expect("checked above");
                let value = done.regs.into_iter().next().unwrap_or_default();
                match stack.last_mut() {
                    Some(caller) => {
                        caller.regs[done.ret] = value;
                        continue;
                    }
                    None => {
                        return RunOutcome::Halted {
                            value,
                            fuel_used: fuel - remaining,
                        };
                    }
                }
            }

            let code = Rc::clone(&top.code);
            let op = &code.code[top.pc];
            if let Op::Jump(target) = op {
                top.pc = *target;
                continue;
            }
            if remaining == 0 {
                return RunOutcome::FuelExhausted;
            }
            remaining -= 1;
            top.pc += 1;

            match op {
                Op::Inc(s) => top.regs[*s] += 1u32,
                Op::Dec(s) => {
                    let reg = &mut top.regs[*s];
                    if !reg.is_zero() {
                        *reg -= 1u32;
                    }
                }
                Op::Set(s, v) => top.regs[*s] = v.clone(),
                Op::Copy(d, s) => {
                    if d != s {
                        top.regs[*d] = top.regs[*s].clone();
                    }
                }
                Op::Test { reg, exit } => {
                    if top.regs[*reg].is_zero() {
                        top.pc = *exit;
                    }
                }
                Op::Eval { dst, prog, arg } => {
                    let index = top.regs[*prog].clone();
                    let input = top.regs[*arg].clone();
                    let dst = *dst;
                    let callee = self.load(&index);
                    stack.push(Frame::new(callee, input, dst));
                }
                Op::Jump(_) => unreachable!("handled before fuel is charged"),
            }
        }
    }
}

/// Runs `program` on `input` with a mandatory fuel budget.
pub fn interpret(program: &Program, input: &BigUint, fuel: u64) -> RunOutcome {
    Machine::new().run(program, input, fuel)
}

/// Runs the program with index `index`, i.e. computes φ_index(input) within `fuel`.
pub fn run_index(index: &Index, input: &BigUint, fuel: u64) -> RunOutcome {
    Machine::new().run_index(index, input, fuel)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(v: u64) -> BigUint {
        BigUint::from(v)
    }

    fn halted(v: u64) -> Option<BigUint> {
        Some(n(v))
    }

    #[test]
    fn empty_program_is_identity() {
        let out = interpret(&Program::empty(), &n(7), 10);
        assert_eq!(
            out,
            RunOutcome::Halted {
                value: n(7),
                fuel_used: 0
            }
        );
    }

    #[test]
    fn single_increment() {
        let p = Program::new(vec![Statement::inc(r(0))]);
        assert_eq!(
            interpret(&p, &n(5), 10),
            RunOutcome::Halted {
                value: n(6),
                fuel_used: 1
            }
        );
    }

    // Hand trace with r0 = 1: test(1) dec inc test(1) dec inc ... never
    // reaches zero, each iteration costs 3.
    #[test]
    fn spinning_loop_exhausts() {
        let p = Program::new(vec![Statement::while_nz(
            r(0),
            vec![Statement::dec(r(0)), Statement::inc(r(0))],
        )]);
        assert_eq!(interpret(&p, &n(1), 50), RunOutcome::FuelExhausted);
        assert_eq!(interpret(&p, &n(1), 10_000), RunOutcome::FuelExhausted);
        // zero input: single failing test
        assert_eq!(
            interpret(&p, &n(0), 1),
            RunOutcome::Halted {
                value: n(0),
                fuel_used: 1
            }
        );
    }

    #[test]
    fn loop_costs_one_per_test() {
        // while r0 { dec r0 } on input 3: 4 tests + 3 decs
        let p = Program::new(vec![Statement::while_nz(r(0), vec![Statement::dec(r(0))])]);
        assert_eq!(
            interpret(&p, &n(3), 7),
            RunOutcome::Halted {
                value: n(0),
                fuel_used: 7
            }
        );
        assert_eq!(interpret(&p, &n(3), 6), RunOutcome::FuelExhausted);
    }

    #[test]
    fn dec_saturates() {
        let p = Program::new(vec![Statement::dec(r(0)), Statement::dec(r(0))]);
        assert_eq!(interpret(&p, &n(1), 10).into_value(), halted(0));
    }

    #[test]
    fn unmentioned_registers_read_zero() {
        let p = Program::new(vec![Statement::copy(r(0), r(99))]);
        assert_eq!(interpret(&p, &n(12), 10).into_value(), halted(0));
    }

    #[test]
    fn addition_by_loop() {
        // r0 := r0 + 3 via a counter loop
        let p = Program::new(vec![
            Statement::set(r(1), 3u32),
            Statement::while_nz(r(1), vec![Statement::dec(r(1)), Statement::inc(r(0))]),
        ]);
        assert_eq!(interpret(&p, &n(4), 100).into_value(), halted(7));
    }

    #[test]
    fn eval_runs_decoded_program() {
        // index 1 is [inc r0]
        let p = Program::new(vec![
            Statement::set(r(1), 1u32),
            Statement::eval(r(0), r(1), r(0)),
        ]);
        assert_eq!(
            interpret(&p, &n(41), 10),
            RunOutcome::Halted {
                value: n(42),
                fuel_used: 3
            }
        );
        assert_eq!(interpret(&p, &n(41), 2), RunOutcome::FuelExhausted);
    }

    #[test]
    fn eval_of_empty_program_costs_one() {
        let p = Program::new(vec![Statement::eval(r(0), r(5), r(0))]);
        assert_eq!(
            interpret(&p, &n(9), 1),
            RunOutcome::Halted {
                value: n(9),
                fuel_used: 1
            }
        );
        assert_eq!(interpret(&p, &n(9), 0), RunOutcome::FuelExhausted);
    }

    #[test]
    fn huge_register_ids_are_fine() {
        let big = Register("123456789012345678901234567890".parse().unwrap());
        let p = Program::new(vec![
            Statement::inc(big.clone()),
            Statement::inc(big.clone()),
            Statement::copy(r(0), big),
        ]);
        assert_eq!(interpret(&p, &n(0), 10).into_value(), halted(2));
    }

    #[test]
    fn walk_visits_nested() {
        let p = Program::new(vec![
            Statement::while_nz(
                r(0),
                vec![Statement::while_nz(r(1), vec![Statement::inc(r(2))])],
            ),
            Statement::dec(r(0)),
        ]);
        assert_eq!(p.walk().count(), 4);
    }
}
