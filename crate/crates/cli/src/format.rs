//! Number rendering: 17 significant digits in JSON, 6 in human output.

use serde_json::{Map, Number, Value};

/// A JSON number with 17 significant digits; non-finite values become `null`.
pub fn json_num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let text = format!("{x:.16e}");
    Value::Number(
        text.parse::<Number>()
            .expect("formatted float is valid JSON"),
    )
}

pub fn json_opt(x: Option<f64>) -> Value {
    x.map_or(Value::Null, json_num)
}

pub fn object<const N: usize>(pairs: [(&str, Value); N]) -> Value {
    Value::Object(
        pairs
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect::<Map<_, _>>(),
    )
}

/// Six significant digits, fixed notation for moderate magnitudes.
pub fn human(x: f64) -> String {
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
    if (-4..6).contains(&exp) {
        format!("{x:.*}", (5 - exp) as usize)
    } else {
        format!("{x:.5e}")
    }
}

pub fn human_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "undefined".into(), human)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        let v = json_num(0.1);
        assert_eq!(v.to_string(), "1.0000000000000001e-1");
        let back: f64 = v.to_string().parse().unwrap();
        assert_eq!(back, 0.1);
        assert_eq!(json_num(f64::INFINITY), Value::Null);
    }

    #[test]
    fn six_digits() {
        assert_eq!(human(0.812345678), "0.812346");
        assert_eq!(human(2.71234567), "2.71235");
        assert_eq!(human(123456.7), "123457");
        assert_eq!(human(1234567.8), "1.23457e6");
        assert_eq!(human(2e-7), "2.00000e-7");
        assert_eq!(human(-1.5), "-1.50000");
    }
}
