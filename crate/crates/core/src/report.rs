//! Serialisation helpers shared by the report types.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::Serializer;

/// JSON value for an exact integer: a number when it fits in 128 bits,
/// otherwise its decimal string.
pub fn big_value(x: &BigUint) -> serde_json::Value {
    match x.to_u64() {
        Some(v) => serde_json::Value::from(v),
        None => serde_json::Value::String(x.to_string()),
    }
}

pub fn big_map_value(m: &BTreeMap<usize, BigUint>) -> serde_json::Value {
    serde_json::Value::Object(
        m.iter()
            .map(|(k, v)| (k.to_string(), big_value(v)))
            .collect(),
    )
}

pub fn big<S: Serializer>(x: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    match x.to_u128() {
        Some(v) => s.serialize_u128(v),
        None => s.serialize_str(&x.to_string()),
    }
}

pub fn big_map<S: Serializer>(m: &BTreeMap<usize, BigUint>, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut map = s.serialize_map(Some(m.len()))?;
    for (k, v) in m {
        map.serialize_entry(&k.to_string(), &big_value(v))?;
    }
    map.end()
}
