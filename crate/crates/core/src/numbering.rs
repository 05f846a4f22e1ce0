//! Bijective Gödel numbering between programs and naturals.
//!
//! Layout (bit-exact):
//!
//! * statement code `6 * payload + tag`, tags `inc=0 dec=1 while=2 set=3 eval=4 copy=5`
//! * payloads: `inc`/`dec` → register id; `while` → `pair(reg, list(body))`;
//!   `set` → `pair(reg, n)`; `eval` → `pair(dst, pair(prog, arg))`;
//!   `copy` → `pair(dst, src)`
//! * lists: `[] ↦ 0`, `h :: t ↦ pair(h, list(t)) + 1`
//! * program index = list of its statement codes
//!
//! Every natural decodes to exactly one program, so decoding is total.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::lang::{Program, Register, Statement};

/// The Gödel number of a program. Rendered as a plain decimal string.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Index(#[serde(with = "crate::decimal")] pub BigUint);

impl Index {
    pub fn new(value: impl Into<BigUint>) -> Self {
        Index(value.into())
    }

    pub fn zero() -> Self {
        Index(BigUint::zero())
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn bits(&self) -> u64 {
        self.0.bits()
    }
}

impl From<u64> for Index {
    fn from(v: u64) -> Self {
        Index(BigUint::from(v))
    }
}

impl From<BigUint> for Index {
    fn from(v: BigUint) -> Self {
        Index(v)
    }
}

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl FromStr for Index {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        crate::decimal::parse(s).map(Index)
    }
}

const TAG_INC: u32 = 0;
const TAG_DEC: u32 = 1;
const TAG_WHILE: u32 = 2;
const TAG_SET: u32 = 3;
const TAG_EVAL: u32 = 4;
const TAG_COPY: u32 = 5;
const TAGS: u32 = 6;

/// Cantor pairing `(a+b)(a+b+1)/2 + b`.
pub fn pair(a: &BigUint, b: &BigUint) -> BigUint {
    let s = a + b;
    let t = &s * (&s + 1u32);
    (t >> 1) + b
}

/// Inverse of [`pair`].
pub fn unpair(n: &BigUint) -> (BigUint, BigUint) {
    // w = floor((isqrt(8n + 1) - 1) / 2) is the diagonal holding n.
    let disc: BigUint = (n << 3) + 1u32;
    let w: BigUint = (isqrt(&disc) - 1u32) >> 1;
    let tri = (&w * (&w + 1u32)) >> 1;
    let b = n - tri;
    let a = &w - &b;
    (a, b)
}

/// Floor square root.
///
/// Seeds Newton with the root of the top half of the bits, so only two or
/// three full-width divisions remain at each level.
pub fn isqrt(n: &BigUint) -> BigUint {
    let bits = n.bits();
    if bits <= 128 {
        return n.sqrt();
    }
    let k = bits / 4;
    // (s + 1)^2 * 4^k > n, so the seed over-estimates.
    let s = isqrt(&(n >> (2 * k)));
    let mut x: BigUint = (s + 1u32) << k;
    loop {
        let y: BigUint = (&x + n / &x) >> 1;
        if y >= x {
            return x;
        }
        x = y;
    }
}

/// Counts pairing operations during an encode or decode.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct Steps(pub u64);

struct Codec<'a> {
    steps: &'a mut Steps,
}

impl Codec<'_> {
    fn pair(&mut self, a: &BigUint, b: &BigUint) -> BigUint {
        self.steps.0 += 1;
        pair(a, b)
    }

    fn unpair(&mut self, n: &BigUint) -> (BigUint, BigUint) {
        self.steps.0 += 1;
        unpair(n)
    }

    fn encode_list(&mut self, body: &[Statement]) -> BigUint {
        let mut acc = BigUint::zero();
        for stmt in body.iter().rev() {
            let head = self.encode_statement(stmt);
            acc = self.pair(&head, &acc) + 1u32;
        }
        acc
    }

    fn encode_statement(&mut self, stmt: &Statement) -> BigUint {
        let (payload, tag) = match stmt {
            Statement::Inc { reg } => (reg.0.clone(), TAG_INC),
            Statement::Dec { reg } => (reg.0.clone(), TAG_DEC),
            Statement::While { reg, body } => {
                let body = self.encode_list(body);
                (self.pair(&reg.0, &body), TAG_WHILE)
            }
            Statement::SetConst { reg, value } => (self.pair(&reg.0, value), TAG_SET),
            Statement::Eval { dst, prog, arg } => {
                let inner = self.pair(&prog.0, &arg.0);
                (self.pair(&dst.0, &inner), TAG_EVAL)
            }
            Statement::Copy { dst, src } => (self.pair(&dst.0, &src.0), TAG_COPY),
        };
        payload * TAGS + tag
    }

    fn decode_list(&mut self, code: &BigUint) -> Vec<Statement> {
        let mut body = Vec::new();
        let mut rest = code.clone();
        while !rest.is_zero() {
            let (head, tail) = self.unpair(&(rest - 1u32));
            body.push(self.decode_statement(&head));
            rest = tail;
        }
        body
    }

    fn decode_statement(&mut self, code: &BigUint) -> Statement {
        let tag = (code % TAGS).to_u32().expect("remainder below 6");
        let payload: BigUint = code / TAGS;
        match tag {
            TAG_INC => Statement::Inc {
                reg: Register(payload),
            },
            TAG_DEC => Statement::Dec {
                reg: Register(payload),
            },
            TAG_WHILE => {
                let (reg, body) = self.unpair(&payload);
                Statement::While {
                    reg: Register(reg),
                    body: self.decode_list(&body),
                }
            }
            TAG_SET => {
                let (reg, value) = self.unpair(&payload);
                Statement::SetConst {
                    reg: Register(reg),
                    value,
                }
            }
            TAG_EVAL => {
                let (dst, inner) = self.unpair(&payload);
                let (prog, arg) = self.unpair(&inner);
                Statement::Eval {
                    dst: Register(dst),
                    prog: Register(prog),
                    arg: Register(arg),
                }
            }
            TAG_COPY => {
                let (dst, src) = self.unpair(&payload);
                Statement::Copy {
                    dst: Register(dst),
                    src: Register(src),
                }
            }
            _ => unreachable!("tag is a residue mod 6"),
        }
    }
}

pub fn encode_program(program: &Program) -> Index {
    encode_program_counted(program, &mut Steps::default())
}

pub fn decode_program(index: &Index) -> Program {
    decode_program_counted(index, &mut Steps::default())
}

pub fn encode_program_counted(program: &Program, steps: &mut Steps) -> Index {
    Index(Codec { steps }.encode_list(&program.body))
}

pub fn decode_program_counted(index: &Index, steps: &mut Steps) -> Program {
    Program::new(Codec { steps }.decode_list(&index.0))
}

/// Code of a single statement (exposed for tooling and tests).
pub fn encode_statement(stmt: &Statement) -> BigUint {
    Codec {
        steps: &mut Steps::default(),
    }
    .encode_statement(stmt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::r;

    fn n(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn pair_values() {
        assert_eq!(pair(&n(0), &n(0)), n(0));
        // (1+2)(1+2+1)/2 + 2 = 6 + 2
        assert_eq!(pair(&n(1), &n(2)), n(8));
        assert_eq!(unpair(&n(8)), (n(1), n(2)));
        assert_eq!(unpair(&n(0)), (n(0), n(0)));
    }

    // Walking the diagonals in order is an independent oracle for unpair.
    #[test]
    fn unpair_matches_diagonal_walk() {
        let mut expected = Vec::new();
        'outer: for w in 0u64.. {
            for b in 0..=w {
                expected.push((w - b, b));
                if expected.len() == 10_001 {
                    break 'outer;
                }
            }
        }
        for (i, (a, b)) in expected.into_iter().enumerate() {
            assert_eq!(unpair(&n(i as u64)), (n(a), n(b)), "n = {i}");
            assert_eq!(pair(&n(a), &n(b)), n(i as u64));
        }
    }

    #[test]
    fn isqrt_agrees_with_newton_from_scratch() {
        let mut x = BigUint::from(0xdead_beef_u64);
        for i in 0..60u32 {
            x = &x * &x + BigUint::from(i) * 7919u32;
            let root = isqrt(&x);
            assert_eq!(root, x.sqrt(), "round {i}");
            assert!(&root * &root <= x && (&root + 1u32) * (&root + 1u32) > x);
            if x.bits() > 40_000 {
                break;
            }
        }
        // exact squares and their neighbours
        let big = (BigUint::from(1u32) << 1000) + 12345u32;
        let sq = &big * &big;
        assert_eq!(isqrt(&sq), big);
        assert_eq!(isqrt(&(&sq - 1u32)), &big - 1u32);
    }

    #[test]
    fn small_indices() {
        assert_eq!(encode_program(&Program::empty()), Index::from(0));
        assert_eq!(decode_program(&Index::from(0)), Program::empty());
        let succ = Program::new(vec![Statement::inc(r(0))]);
        assert_eq!(encode_program(&succ), Index::from(1));
        assert_eq!(decode_program(&Index::from(1)), succ);
        // [set r0 0]: code 3, list pair(3, 0) + 1 = 7
        assert_eq!(
            encode_program(&Program::new(vec![Statement::set(r(0), 0u32)])),
            Index::from(7)
        );
    }

    #[test]
    fn statement_codes() {
        assert_eq!(encode_statement(&Statement::inc(r(0))), n(0));
        assert_eq!(encode_statement(&Statement::dec(r(0))), n(1));
        assert_eq!(encode_statement(&Statement::inc(r(2))), n(12));
        // copy r1 r0: pair(1, 0) = 1 → 6 + 5
        assert_eq!(encode_statement(&Statement::copy(r(1), r(0))), n(11));
        // while r0 {}: pair(0, 0) = 0 → 2
        assert_eq!(encode_statement(&Statement::while_nz(r(0), vec![])), n(2));
    }

    #[test]
    fn index_text() {
        assert_eq!("12345".parse::<Index>().unwrap(), Index::from(12345));
        assert!("-1".parse::<Index>().is_err());
        assert!("".parse::<Index>().is_err());
        assert!(" 1".parse::<Index>().is_err());
        assert_eq!(Index::from(99).to_string(), "99");
    }

    #[test]
    fn decode_step_count_is_bounded_by_bits() {
        for v in (0u64..5000).chain([u64::MAX, 1 << 40, 123_456_789_012]) {
            let idx = Index::from(v);
            let mut steps = Steps::default();
            let p = decode_program_counted(&idx, &mut steps);
            assert!(steps.0 <= 4 * (idx.bits() + 1), "{v}: {} steps", steps.0);
            let mut steps = Steps::default();
            assert_eq!(encode_program_counted(&p, &mut steps), idx);
            assert!(steps.0 <= 4 * (idx.bits() + 1));
        }
    }
}
