//! Naturals as decimal strings: strict parsing and the serde adapter.

use num_bigint::BigUint;
use serde::{de, Deserialize, Deserializer, Serializer};

const LEAF_DIGITS: usize = 2048;

pub fn serialize<S: Serializer>(value: &BigUint, serializer: S) -> Result<S::Ok, S::Error> {
    serializer.collect_str(value)
}

pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<BigUint, D::Error> {
    let text = String::deserialize(deserializer)?;
    parse(&text).map_err(de::Error::custom)
}

/// Strict decimal parse: ASCII digits only, no sign, no whitespace.
///
/// Long inputs are split in halves and recombined with a power of ten, so
/// parsing a million-digit index costs a few large multiplications rather
/// than a quadratic digit loop.
pub fn parse(text: &str) -> Result<BigUint, String> {
    if text.is_empty() || !text.bytes().all(|b| b.is_ascii_digit()) {
        let shown: String = text.chars().take(32).collect();
        return Err(format!("not a decimal natural: {shown:?}"));
    }
    let mut powers = Vec::new();
    Ok(parse_digits(text.as_bytes(), &mut powers))
}

// powers[k] = 10^(LEAF_DIGITS << k)
fn parse_digits(digits: &[u8], powers: &mut Vec<BigUint>) -> BigUint {
    if digits.len() <= LEAF_DIGITS {
        return BigUint::parse_bytes(digits, 10).expect("validated digits");
    }
    let mut level = 0;
    while (LEAF_DIGITS << (level + 1)) < digits.len() {
        level += 1;
    }
    let low_len = LEAF_DIGITS << level;
    while powers.len() <= level {
        let next = match powers.last() {
            None => BigUint::from(10u32).pow(LEAF_DIGITS as u32),
            Some(p) => p * p,
        };
        powers.push(next);
    }
    let (high, low) = digits.split_at(digits.len() - low_len);
    let high = parse_digits(high, powers);
    let low = parse_digits(low, powers);
    high * &powers[level] + low
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_digits() {
        for bad in ["", "-3", "+3", "1 2", "0x10", "١٢"] {
            assert!(parse(bad).is_err(), "{bad:?}");
        }
        assert_eq!(parse("007").unwrap(), BigUint::from(7u32));
    }

    #[test]
    fn long_inputs_match_naive_parse() {
        for len in [
            LEAF_DIGITS - 1,
            LEAF_DIGITS,
            LEAF_DIGITS + 1,
            3 * LEAF_DIGITS + 17,
            9000,
        ] {
            let text: String = (0..len)
                .map(|i| char::from(b'0' + ((i * 7 + 3) % 10) as u8))
                .collect();
            let naive = BigUint::parse_bytes(text.as_bytes(), 10).unwrap();
            assert_eq!(parse(&text).unwrap(), naive, "len {len}");
            assert_eq!(
                naive.to_string().trim_start_matches('0'),
                text.trim_start_matches('0')
            );
        }
    }
}
