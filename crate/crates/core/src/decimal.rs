//! Serde helpers that write reals as decimal strings.
//!
//! Strings keep `inf`, `-inf` and full round-trip precision through JSON.
//! Deserialization also accepts bare JSON numbers.

use serde::de::{self, Visitor};
use serde::{Deserializer, Serializer};
use std::fmt;

/// Formats with the shortest representation that round-trips.
pub fn format(value: f64) -> String {
    // -0.0 prints as 0.0
    let value = value + 0.0;
    format!("{value:?}")
}

/// Parses a decimal string; accepts `inf`, `-inf`, `infinity` and `exp(x)`.
pub fn parse(text: &str) -> Result<f64, String> {
    let t = text.trim();
    if let Some(inner) = t.strip_prefix("exp(").and_then(|s| s.strip_suffix(')')) {
        return parse(inner).map(f64::exp);
    }
    let v: f64 = t.parse().map_err(|_| format!("not a decimal real: {text:?}"))?;
    if v.is_nan() {
        return Err(format!("NaN is not accepted: {text:?}"));
    }
    Ok(v)
}

pub fn serialize<S: Serializer>(value: &f64, serializer: S) -> Result<S::Ok, S::Error> {
    serializer.serialize_str(&format(*value))
}

struct RealVisitor;

impl<'de> Visitor<'de> for RealVisitor {
    type Value = f64;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a decimal string or a number")
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
        parse(v).map_err(E::custom)
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
        Ok(v)
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
        Ok(v as f64)
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
        Ok(v as f64)
    }
}

pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<f64, D::Error> {
    deserializer.deserialize_any(RealVisitor)
}

pub mod vec {
    use serde::de::{SeqAccess, Visitor};
    use serde::ser::SerializeSeq;
    use serde::{Deserializer, Serializer};
    use std::fmt;

    pub fn serialize<S: Serializer>(values: &[f64], serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(values.len()))?;
        for v in values {
            seq.serialize_element(&super::format(*v))?;
        }
        seq.end()
    }

    struct Elem(f64);

    impl<'de> serde::Deserialize<'de> for Elem {
        fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
            super::deserialize(d).map(Elem)
        }
    }

    struct SeqVisitor;

    impl<'de> Visitor<'de> for SeqVisitor {
        type Value = Vec<f64>;

        fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            f.write_str("a list of decimal reals")
        }

        fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Vec<f64>, A::Error> {
            let mut out = Vec::new();
            while let Some(Elem(v)) = seq.next_element()? {
                out.push(v);
            }
            Ok(out)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Vec<f64>, D::Error> {
        deserializer.deserialize_seq(SeqVisitor)
    }
}

pub mod map {
    use serde::de::{MapAccess, Visitor};
    use serde::ser::SerializeMap;
    use serde::{Deserializer, Serializer};
    use std::collections::BTreeMap;
    use std::fmt;

    pub fn serialize<S: Serializer>(
        values: &BTreeMap<String, f64>,
        serializer: S,
    ) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(values.len()))?;
        for (k, v) in values {
            map.serialize_entry(k, &super::format(*v))?;
        }
        map.end()
    }

    struct Elem(f64);

    impl<'de> serde::Deserialize<'de> for Elem {
        fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
            super::deserialize(d).map(Elem)
        }
    }

    struct MapVisitor;

    impl<'de> Visitor<'de> for MapVisitor {
        type Value = BTreeMap<String, f64>;

        fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            f.write_str("a map of decimal reals")
        }

        fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Self::Value, A::Error> {
            let mut out = BTreeMap::new();
            while let Some((k, Elem(v))) = access.next_entry::<String, Elem>()? {
                out.insert(k, v);
            }
            Ok(out)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        deserializer: D,
    ) -> Result<BTreeMap<String, f64>, D::Error> {
        deserializer.deserialize_map(MapVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_special_forms() {
        assert_eq!(parse("-inf").unwrap(), f64::NEG_INFINITY);
        assert_eq!(parse(" 0.25 ").unwrap(), 0.25);
        assert!((parse("exp(-2)").unwrap() - (-2f64).exp()).abs() < 1e-17);
        assert!(parse("NaN").is_err());
        assert!(parse("abc").is_err());
    }

    #[test]
    fn format_round_trips() {
        for v in [0.1, 1e-300, 2f64.ln(), f64::INFINITY, f64::NEG_INFINITY, -3.0] {
            assert_eq!(parse(&format(v)).unwrap(), v);
        }
    }
}
