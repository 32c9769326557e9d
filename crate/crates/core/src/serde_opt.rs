//! Optional values that survive formats without a null (TOML): `None` is
//! written as the string `"none"`; `null` is still accepted on input.

use serde::de::{self, Deserialize, Deserializer};
use serde::ser::{Serialize, SerializeSeq, Serializer};

#[derive(serde::Deserialize)]
#[serde(untagged)]
enum Repr<T> {
    Value(T),
    Word(String),
    Null(()),
}

fn resolve<T, E: de::Error>(r: Repr<T>) -> Result<Option<T>, E> {
    match r {
        Repr::Value(v) => Ok(Some(v)),
        Repr::Null(()) => Ok(None),
        Repr::Word(w) if w.eq_ignore_ascii_case("none") => Ok(None),
        Repr::Word(w) => Err(E::custom(format!("expected a value or \"none\", got {w:?}"))),
    }
}

pub fn serialize<T: Serialize, S: Serializer>(v: &Option<T>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => v.serialize(s),
        None => s.serialize_str("none"),
    }
}

pub fn deserialize<'de, T: Deserialize<'de>, D: Deserializer<'de>>(d: D) -> Result<Option<T>, D::Error> {
    resolve(Repr::deserialize(d)?)
}

pub mod vec {
    use super::*;

    struct Item<'a, T>(&'a Option<T>);

    impl<T: Serialize> Serialize for Item<'_, T> {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            super::serialize(self.0, s)
        }
    }

    pub fn serialize<T: Serialize, S: Serializer>(v: &[Option<T>], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            seq.serialize_element(&Item(x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, T: Deserialize<'de>, D: Deserializer<'de>>(d: D) -> Result<Vec<Option<T>>, D::Error> {
        Vec::<Repr<T>>::deserialize(d)?.into_iter().map(resolve).collect()
    }
}

#[cfg(test)]
mod tests {
    #[derive(Debug, PartialEq, serde::Serialize, serde::Deserialize)]
    struct S {
        #[serde(with = "super")]
        a: Option<usize>,
        #[serde(with = "super::vec")]
        b: Vec<Option<usize>>,
    }

    #[test]
    fn round_trip_and_null() {
        let s = S { a: None, b: vec![Some(3), None] };
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, r#"{"a":"none","b":[3,"none"]}"#);
        assert_eq!(serde_json::from_str::<S>(&j).unwrap(), s);
        assert_eq!(serde_json::from_str::<S>(r#"{"a":null,"b":[null]}"#).unwrap(), S { a: None, b: vec![None] });
        assert!(serde_json::from_str::<S>(r#"{"a":"x","b":[]}"#).is_err());
    }
}
