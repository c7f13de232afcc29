//! Number formatting shared by the CSV and text outputs.

/// Formats `value` rounded to `digits` significant digits (at most 15),
/// using the shortest decimal form of the rounded number (`0.55`, not
/// `0.550000`).
///
/// Rounding is half-up on the 15-digit decimal expansion, so binary noise
/// below that precision cannot flip a tie: `0.45 * 0.55 * 0.45 * 0.55 * 2`
/// prints as `0.122513`, not `0.122512`.
pub fn sig(value: f64, digits: usize) -> String {
    if !value.is_finite() {
        return value.to_string();
    }
    if value == 0.0 {
        return "0".to_string();
    }
    let digits = digits.clamp(1, 15);
    let expansion = format!("{:.14e}", value.abs());
    let (mantissa, exponent) = expansion.split_once('e').expect("scientific notation");
    let mut exponent: i32 = exponent.parse().expect("integer exponent");
    let mut kept: Vec<u8> = mantissa
        .bytes()
        .filter(u8::is_ascii_digit)
        .map(|b| b - b'0')
        .collect();
    let round_up = kept.get(digits).is_some_and(|&d| d >= 5);
    kept.truncate(digits);
    if round_up {
        let mut i = digits;
        loop {
            if i == 0 {
                kept.insert(0, 1);
                kept.pop();
                exponent += 1;
                break;
            }
            i -= 1;
            if kept[i] == 9 {
                kept[i] = 0;
            } else {
                kept[i] += 1;
                break;
            }
        }
    }
    let text: String = kept.iter().map(|d| char::from(b'0' + d)).collect();
    let rounded: f64 = format!("{}.{}e{}", &text[..1], &text[1..], exponent)
        .parse()
        .expect("rounded decimal parses");
    if value < 0.0 {
        (-rounded).to_string()
    } else {
        rounded.to_string()
    }
}

/// Six significant digits, the precision of all figure outputs.
pub fn sig6(value: f64) -> String {
    sig(value, 6)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(sig6(0.55), "0.55");
        assert_eq!(sig6(2.0), "2");
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(0.12251250000001), "0.122513");
        assert_eq!(sig6(1.0 / 3.0), "0.333333");
        assert_eq!(sig6(-123456789.0), "-123457000");
        assert_eq!(sig6(1.5e-9), "0.0000000015");
        assert_eq!(sig6(f64::NAN), "NaN");
        assert_eq!(sig6(0.45 * 0.55 * 0.45 * 0.55 * 2.0), "0.122513");
        assert_eq!(sig6(0.9999996), "1");
        assert_eq!(sig6(-0.0000123456789), "-0.0000123457");
        assert_eq!(sig(0.125, 2), "0.13");
        assert_eq!(sig(99.95, 3), "100");
        assert_eq!(sig(0.26, 1), "0.3");
        assert_eq!(sig(9.6, 1), "10");
    }
}
