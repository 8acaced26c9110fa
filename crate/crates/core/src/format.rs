//! Number formatting shared by the text file formats.

/// Formats `x` like C's `printf("%.{sig}g", x)`.
///
/// Trailing zeros are dropped, so whole numbers print without a decimal point.
/// With `sig = 17` the output round-trips every finite `f64` exactly.
pub fn fmt_g(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sig = sig.max(1);
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= sig as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g() {
        assert_eq!(fmt_g(0.0, 17), "0");
        assert_eq!(fmt_g(1.0, 17), "1");
        assert_eq!(fmt_g(2.5, 17), "2.5");
        assert_eq!(fmt_g(0.1, 17), "0.10000000000000001");
        assert_eq!(fmt_g(-1.5, 12), "-1.5");
        assert_eq!(fmt_g(1e-5, 17), "1.0000000000000001e-05");
        assert_eq!(fmt_g(123456.0, 3), "1.23e+05");
        assert_eq!(fmt_g(std::f64::consts::SQRT_2, 12), "1.41421356237");
        assert_eq!(fmt_g(0.0001, 12), "0.0001");
    }

    #[test]
    fn seventeen_digits_round_trip() {
        let mut x = 0.123_456_789_f64;
        for _ in 0..500 {
            x = x * 1.618_033_988_749 + 1e-7;
            if x > 1e12 {
                x /= 1e15;
            }
            let s = fmt_g(x, 17);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
    }
}
