//! Shift expressions such as `-2h4+3`, `h5-h3` or ranges `h4-2..h4+2`.

use num_bigint::{BigInt, BigUint};

use crate::error::{CliError, CliResult};

const MAX_RANGE: usize = 100_000;

/// Evaluates one expression; `heights[j - 1]` is `h_j`.
pub fn parse_shift(expr: &str, heights: &[BigUint]) -> CliResult<BigInt> {
    let bad = |why: &str| CliError::Usage(format!("shift '{expr}': {why}"));
    let s: String = expr.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err(bad("empty"));
    }
    let bytes = s.as_bytes();
    let mut total = BigInt::default();
    let mut i = 0;
    while i < bytes.len() {
        let mut sign = 1;
        if bytes[i] == b'+' || bytes[i] == b'-' {
            if bytes[i] == b'-' {
                sign = -1;
            }
            i += 1;
        } else if i > 0 {
            return Err(bad("expected + or -"));
        }
        let start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        let coef = &s[start..i];
        if i < bytes.len() && bytes[i] == b'*' {
            i += 1;
        }
        let term = if i < bytes.len() && bytes[i] == b'h' {
            i += 1;
            let st = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let j: usize = s[st..i].parse().map_err(|_| bad("missing stage after h"))?;
            let h = j
                .checked_sub(1)
                .and_then(|k| heights.get(k))
                .ok_or_else(|| bad(&format!("no stage {j}")))?;
            let a: BigInt = if coef.is_empty() {
                1.into()
            } else {
                coef.parse().map_err(|_| bad("bad coefficient"))?
            };
            a * BigInt::from(h.clone())
        } else {
            if coef.is_empty() {
                return Err(bad("missing term"));
            }
            coef.parse().map_err(|_| bad("bad integer"))?
        };
        total += term * sign;
    }
    Ok(total)
}

/// A single shift or an inclusive range `lo..hi`.
pub fn parse_shifts(expr: &str, heights: &[BigUint]) -> CliResult<Vec<BigInt>> {
    let Some((lo, hi)) = expr.split_once("..") else {
        return Ok(vec![parse_shift(expr, heights)?]);
    };
    let lo = parse_shift(lo, heights)?;
    let hi = parse_shift(hi, heights)?;
    if hi < lo {
        return Err(CliError::Usage(format!("range '{expr}' is empty")));
    }
    let len = &hi - &lo + 1;
    if len > BigInt::from(MAX_RANGE) {
        return Err(CliError::Usage(format!("range '{expr}' has more than {MAX_RANGE} shifts")));
    }
    let mut out = Vec::new();
    let mut m = lo;
    while m <= hi {
        out.push(m.clone());
        m += 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hs() -> Vec<BigUint> {
        [1u32, 3, 12, 60].iter().map(|&h| BigUint::from(h)).collect()
    }

    #[test]
    fn expressions() {
        let h = hs();
        let v = |e: &str| parse_shift(e, &h).unwrap();
        assert_eq!(v("0"), BigInt::from(0));
        assert_eq!(v("-7"), BigInt::from(-7));
        assert_eq!(v("h4"), BigInt::from(60));
        assert_eq!(v("-2h3+1"), BigInt::from(-23));
        assert_eq!(v("2*h3 - h2"), BigInt::from(21));
        assert!(parse_shift("h9", &h).is_err());
        assert!(parse_shift("2x", &h).is_err());
        assert!(parse_shift("", &h).is_err());
        assert!(parse_shift("3h", &h).is_err());
    }

    #[test]
    fn ranges() {
        let h = hs();
        let r = parse_shifts("h3-1..h3+1", &h).unwrap();
        assert_eq!(r, vec![BigInt::from(11), BigInt::from(12), BigInt::from(13)]);
        assert!(parse_shifts("5..1", &h).is_err());
        assert!(parse_shifts("0..1000000", &h).is_err());
    }
}
