//! JSON helpers for integers that may not fit a double.

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde_json::Value;

/// Largest magnitude written as a plain JSON number.
pub const MAX_SAFE: i64 = 1 << 53;

/// Integers with `|n| > 2^53` become decimal strings.
pub fn big_to_json(n: &BigInt) -> Value {
    match n.to_i64() {
        Some(v) if v.abs() <= MAX_SAFE => Value::from(v),
        _ => Value::String(n.to_string()),
    }
}

/// Accepts JSON integers and decimal strings.
pub fn big_from_json(v: &Value) -> Option<BigInt> {
    match v {
        Value::Number(n) => n.as_i64().map(BigInt::from).or_else(|| n.as_u64().map(BigInt::from)),
        Value::String(s) => s.parse().ok(),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold() {
        assert_eq!(big_to_json(&BigInt::from(MAX_SAFE)), Value::from(MAX_SAFE));
        assert_eq!(big_to_json(&BigInt::from(MAX_SAFE + 1)), Value::from("9007199254740993"));
        assert_eq!(big_from_json(&Value::from("-12")), Some(BigInt::from(-12)));
        assert_eq!(big_from_json(&Value::Bool(true)), None);
    }
}
