//! Plain-text number formatting for CSV and summary output.

/// Formats with 12 significant digits, fixed notation in a moderate range and
/// scientific notation outside it. Trailing zeros are trimmed.
pub fn fmt12(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        trim_fixed(&s)
    } else {
        let s = format!("{x:.11e}");
        let (mant, e) = s.split_once('e').expect("scientific format");
        format!("{}e{e}", trim_fixed(mant))
    }
}

fn trim_fixed(s: &str) -> String {
    if !s.contains('.') {
        return s.to_string();
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".into()
    } else {
        t.to_string()
    }
}

/// Joins already formatted fields with commas.
pub fn csv_row<I, S>(fields: I) -> String
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut out = String::new();
    for (i, f) in fields.into_iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(f.as_ref());
    }
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(fmt12(std::f64::consts::LN_2), "0.69314718056");
        assert_eq!(fmt12(1.0), "1");
        assert_eq!(fmt12(-2.5), "-2.5");
        assert_eq!(fmt12(1234.5678), "1234.5678");
        assert_eq!(fmt12(1e-9), "1e-9");
        assert_eq!(fmt12(6.02214076e23), "6.02214076e23");
        assert_eq!(fmt12(0.0), "0");
        assert_eq!(fmt12(-1e-20 * 0.0), "0");
    }

    #[test]
    fn rows() {
        assert_eq!(csv_row(["a", "b"]), "a,b\n");
    }
}
