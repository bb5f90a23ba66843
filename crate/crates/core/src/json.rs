//! Serde helpers that print floats with 17 significant digits so that
//! JSON output round-trips exactly and is byte-stable. Non-finite values
//! become `null`.

use serde::ser::Error as _;
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

pub fn format_float(x: f64) -> Option<String> {
    x.is_finite().then(|| format!("{x:.16e}"))
}

pub fn float17<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    match format_float(*x) {
        Some(text) => RawValue::from_string(text).map_err(S::Error::custom)?.serialize(s),
        None => s.serialize_none(),
    }
}

pub fn opt_float17<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(x) => float17(x, s),
        None => s.serialize_none(),
    }
}

pub fn vec_float17<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for x in xs {
        seq.serialize_element(&Float17(*x))?;
    }
    seq.end()
}

/// A float that serializes through [`float17`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Float17(pub f64);

impl Serialize for Float17 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        float17(&self.0, s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        #[serde(serialize_with = "float17")]
        x: f64,
        #[serde(serialize_with = "float17")]
        y: f64,
        #[serde(serialize_with = "vec_float17")]
        z: Vec<f64>,
    }

    #[test]
    fn round_trips_and_nulls() {
        let row = Row { x: 0.1, y: f64::NAN, z: vec![1.0 / 3.0, -2.5e-300] };
        let text = serde_json::to_string(&row).unwrap();
        assert_eq!(text, r#"{"x":1.0000000000000001e-1,"y":null,"z":[3.3333333333333331e-1,-2.5000000000000000e-300]}"#);
        let back: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["x"].as_f64().unwrap(), 0.1);
        assert_eq!(back["z"][0].as_f64().unwrap(), 1.0 / 3.0);
    }
}
