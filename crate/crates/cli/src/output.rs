//! Deterministic rendering: JSON objects with sorted keys and every float
//! rounded to six significant digits.

use serde_json::{Map, Value};
use taxrank::paths::PathParams;

pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let rounded: f64 = format!("{x:.5e}").parse().unwrap_or(x);
    serde_json::Number::from_f64(rounded).map_or(Value::Null, Value::Number)
}

pub fn opt_num(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

/// Same rounding as [`num`], as CSV text.
pub fn cell(x: f64) -> String {
    match num(x) {
        Value::Number(n) => n.to_string(),
        _ => String::new(),
    }
}

pub fn opt_cell(x: Option<f64>) -> String {
    x.map_or_else(String::new, cell)
}

pub fn object<const N: usize>(fields: [(&str, Value); N]) -> Value {
    let mut m = Map::new();
    for (k, v) in fields {
        m.insert(k.to_owned(), v);
    }
    Value::Object(m)
}

pub fn params(p: &PathParams) -> Value {
    object([
        ("alpha", num(p.alpha)),
        ("l_max", p.l_max.into()),
        ("l_th", p.l_th.into()),
    ])
}

pub fn render(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(num(0.974_532_626_319).to_string(), "0.974533");
        assert_eq!(num(0.001_207_812_434).to_string(), "0.00120781");
        assert_eq!(num(1.1).to_string(), "1.1");
        assert_eq!(num(2.0 / 3.0).to_string(), "0.666667");
        assert_eq!(num(f64::NAN), Value::Null);
        assert_eq!(cell(15.0 / 17.0), "0.882353");
    }

    #[test]
    fn keys_sorted() {
        let v = object([("zeta", 1.into()), ("alpha", 2.into())]);
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"{"alpha":2,"zeta":1}"#);
    }
}
