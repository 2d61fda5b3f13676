//! Axis tick placement and tick label formatting.

/// Exact power of ten. Decimal parsing is correctly rounded, unlike `powi`,
/// whose result may differ between platforms.
pub(crate) fn pow10(k: i32) -> f64 {
    format!("1e{k}").parse().expect("valid float literal")
}

/// Decimal exponent of `|v|` (`v` finite and non-zero).
fn decimal_exponent(v: f64) -> i32 {
    let s = format!("{:e}", v.abs());
    s[s.find('e').expect("exponent marker") + 1..]
        .parse()
        .expect("integer exponent")
}

/// Widens a degenerate range `lo == hi` to `lo ± max(0.5, 0.1·|lo|)`.
pub fn expand_degenerate(lo: f64, hi: f64) -> (f64, f64) {
    if lo == hi {
        let d = (0.1 * lo.abs()).max(0.5);
        (lo - d, hi + d)
    } else {
        (lo, hi)
    }
}

/// Ticks at multiples of a `{1, 2, 5}·10^k` step. The step is the one whose
/// covering tick count is closest to `target_count` (ties go to the larger
/// step); the returned ticks run from the last multiple at or below `lo` to
/// the first at or above `hi`.
pub fn nice_ticks(lo: f64, hi: f64, target_count: usize) -> Vec<f64> {
    let (lo, hi) = expand_degenerate(lo.min(hi), hi.max(lo));
    let target = target_count.max(2) as f64;
    let e = decimal_exponent(hi - lo);
    let mut best: Option<(f64, f64, i64, i64)> = None;
    for k in e - 2..=e + 1 {
        let p = pow10(k);
        for mult in [1.0, 2.0, 5.0] {
            let step = mult * p;
            let first = (lo / step).floor() as i64;
            let last = (hi / step).ceil() as i64;
            let count = (last - first + 1) as f64;
            let score = (count - target).abs();
            let better = match best {
                None => true,
                Some((s, bstep, _, _)) => score < s || (score == s && step > bstep),
            };
            if better {
                best = Some((score, step, first, last));
            }
        }
    }
    let (_, step, first, last) = best.expect("at least one candidate");
    (first..=last).map(|i| i as f64 * step).collect()
}

/// Integer decades covering `[lo, hi]`; both bounds must be positive.
pub fn log_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let first = decimal_exponent(lo);
    let mut last = decimal_exponent(hi);
    if pow10(last) < hi {
        last += 1;
    }
    (first..=last).map(pow10).collect()
}

/// Shortest decimal text with at most four significant digits, switching to
/// `1.5e+4` style when the decimal exponent reaches ±4.
pub fn format_tick(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return "0".into();
    }
    let s = format!("{:.3e}", v);
    let (mantissa, exp) = s.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let digits = digits.trim_end_matches('0');
    let digits = if digits.is_empty() { "0" } else { digits };
    let sign = if negative { "-" } else { "" };
    if exp.abs() >= 4 {
        let (head, tail) = digits.split_at(1);
        let mant = if tail.is_empty() {
            head.to_string()
        } else {
            format!("{head}.{tail}")
        };
        let esign = if exp < 0 { '-' } else { '+' };
        return format!("{sign}{mant}e{esign}{}", exp.abs());
    }
    let body = if exp < 0 {
        format!("0.{}{digits}", "0".repeat((-exp - 1) as usize))
    } else {
        let int_len = exp as usize + 1;
        if digits.len() <= int_len {
            format!("{digits}{}", "0".repeat(int_len - digits.len()))
        } else {
            format!("{}.{}", &digits[..int_len], &digits[int_len..])
        }
    };
    format!("{sign}{body}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_two_five_selection() {
        assert_eq!(nice_ticks(0.0, 10.0, 6), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        assert_eq!(nice_ticks(0.0, 1.0, 6), vec![0.0, 0.2, 0.4, 0.6000000000000001, 0.8, 1.0]);
        // step 50 covers with 4 ticks, step 20 with 7: 4 is closer to 5
        assert_eq!(nice_ticks(-3.0, 97.0, 5), vec![-50.0, 0.0, 50.0, 100.0]);
    }

    #[test]
    fn ticks_cover_range() {
        for &(lo, hi, n) in &[(0.13, 0.87, 5), (-2.5, 1e4, 7), (1e-6, 3e-6, 4), (99.0, 101.0, 6)] {
            let t = nice_ticks(lo, hi, n);
            assert!(t[0] <= lo && *t.last().unwrap() >= hi, "{t:?} for [{lo}, {hi}]");
            assert!(t.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn degenerate_range_expands() {
        assert_eq!(expand_degenerate(5.0, 5.0), (4.5, 5.5));
        assert_eq!(expand_degenerate(100.0, 100.0), (90.0, 110.0));
        let t = nice_ticks(5.0, 5.0, 6);
        assert!(t[0] <= 4.5 && *t.last().unwrap() >= 5.5);
    }

    #[test]
    fn decades() {
        assert_eq!(log_ticks(1.0, 1000.0), vec![1.0, 10.0, 100.0, 1000.0]);
        assert_eq!(log_ticks(0.02, 30.0), vec![0.01, 0.1, 1.0, 10.0, 100.0]);
        assert_eq!(log_ticks(1e-5, 1e-5), vec![1e-5]);
    }

    #[test]
    fn label_formatting() {
        let cases = [
            (0.0, "0"),
            (-0.0, "0"),
            (1.5, "1.5"),
            (0.6000000000000001, "0.6"),
            (-0.25, "-0.25"),
            (1000.0, "1000"),
            (12346.0, "1.235e+4"),
            (10000.0, "1e+4"),
            (0.0001, "1e-4"),
            (0.00025, "2.5e-4"),
            (0.001, "0.001"),
            (3.14159, "3.142"),
            (250.0, "250"),
        ];
        for (v, want) in cases {
            assert_eq!(format_tick(v), want, "{v}");
        }
    }
}
