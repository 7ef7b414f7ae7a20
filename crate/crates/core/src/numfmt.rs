//! Number formatting for reports: 12 significant digits, with non-finite
//! values written as `inf`, `-inf` or `nan`.

use serde::Serializer;

pub const REPORT_DIGITS: usize = 12;

/// Formats `x` with 12 significant digits in scientific notation.
pub fn sig12(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{:.*e}", REPORT_DIGITS - 1, x)
    }
}

/// Rounds `x` to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if x.is_finite() {
        sig12(x).parse().expect("formatted float parses")
    } else {
        x
    }
}

/// Serializes a float rounded to 12 significant digits; non-finite values
/// become the strings `"inf"`, `"-inf"`, `"nan"` since JSON has no literal
/// for them.
pub fn serialize_f64<S: Serializer>(x: &f64, ser: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        ser.serialize_f64(round12(*x))
    } else {
        ser.serialize_str(&sig12(*x))
    }
}

pub fn serialize_f64_slice<S: Serializer>(xs: &[f64], ser: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = ser.serialize_seq(Some(xs.len()))?;
    for x in xs {
        seq.serialize_element(&Report(*x))?;
    }
    seq.end()
}

/// Wrapper that serializes through [`serialize_f64`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Report(pub f64);

impl serde::Serialize for Report {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        serialize_f64(&self.0, ser)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits_and_sentinels() {
        assert_eq!(sig12(1.0), "1.00000000000e0");
        assert_eq!(sig12(f64::INFINITY), "inf");
        assert_eq!(sig12(f64::NEG_INFINITY), "-inf");
        assert_eq!(round12(1.0 / 3.0), 0.333333333333);
    }

    #[test]
    fn json_sentinel_is_a_string() {
        let v = serde_json::to_string(&[Report(2.5), Report(f64::INFINITY)]).unwrap();
        assert_eq!(v, "[2.5,\"inf\"]");
    }
}
