//! Small shared helpers for report serialization and text formatting.

/// Serde adapter for `f64` fields that may legitimately be non-finite
/// (degenerate F statistics, percentage changes against a zero baseline).
/// Finite values serialize as numbers; non-finite ones as strings, so JSON
/// round-trips preserve them exactly.
pub mod float_maybe_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &f64, ser: S) -> Result<S::Ok, S::Error> {
        if value.is_finite() {
            ser.serialize_f64(*value)
        } else if value.is_nan() {
            ser.serialize_str("nan")
        } else if *value > 0.0 {
            ser.serialize_str("inf")
        } else {
            ser.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(de)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!(
                    "unrecognized float literal '{other}'"
                ))),
            },
        }
    }
}

/// Formats a value with four significant digits for text tables.
pub fn sig4(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return "0.000".into();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (3 - magnitude).clamp(0, 12) as usize;
    format!("{x:.decimals$}")
}
