//! Number formatting for CSV output: 12 significant digits, `.` decimal point,
//! `-` sign, plain notation for moderate magnitudes and `e` notation otherwise.

const SIG: i32 = 12;

pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    // exponent after rounding to SIG digits
    let sci = format!("{:.*e}", (SIG - 1) as usize, x);
    let exp: i32 = sci.rsplit('e').next().and_then(|e| e.parse().ok()).unwrap_or(0);
    if (-5..SIG).contains(&exp) {
        let decimals = (SIG - 1 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        let (mantissa, e) = sci.split_once('e').expect("scientific format");
        format!("{}e{}", trim_zeros(mantissa.to_string()), e)
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".into()
    } else {
        t.to_string()
    }
}
