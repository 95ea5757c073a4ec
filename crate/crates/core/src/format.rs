//! The JSON instance document.
//!
//! ```json
//! {
//!   "men": ["m1", "m2"],
//!   "women": ["w1", "w2"],
//!   "costs": { "m1": [["w1", 1, 1], ["w2", 2, 1], ["m1", 3, 1]], ... },
//!   "leave": { "phi": [1, 4], "m1": [3, 4] },
//!   "nu": [1, 2]
//! }
//! ```
//!
//! Rationals are `[numerator, denominator]` pairs. Integers that do not fit in
//! an `i64` may be given as decimal strings. `nu` is optional.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::model::{Instance, LeaveDistribution, Leaver};
use crate::rational::Rational;

/// Parsed instance document.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceDocument {
    pub instance: Instance,
    pub leave: LeaveDistribution,
    pub nu: Option<Rational>,
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::Malformed(msg.into())
}

fn parse_int(value: &Value, what: &str) -> Result<BigInt> {
    match value {
        Value::Number(n) => n
            .as_i64()
            .map(BigInt::from)
            .ok_or_else(|| malformed(format!("{what}: expected an integer"))),
        Value::String(s) => s
            .parse()
            .map_err(|_| malformed(format!("{what}: `{s}` is not an integer"))),
        _ => Err(malformed(format!("{what}: expected an integer"))),
    }
}

fn parse_pair(value: &Value, what: &str) -> Result<Rational> {
    let items = value
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| malformed(format!("{what}: expected [numerator, denominator]")))?;
    let num = parse_int(&items[0], what)?;
    let den = parse_int(&items[1], what)?;
    if den.is_zero() {
        return Err(malformed(format!("{what}: zero denominator")));
    }
    Ok(Rational::new(num, den))
}

fn parse_ids(root: &Map<String, Value>, key: &str) -> Result<Vec<String>> {
    root.get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| malformed(format!("missing array `{key}`")))?
        .iter()
        .map(|v| {
            v.as_str()
                .map(str::to_string)
                .ok_or_else(|| malformed(format!("`{key}` must contain strings")))
        })
        .collect()
}

/// Parses and validates an instance document.
pub fn parse_instance(text: &str) -> Result<InstanceDocument> {
    let root: Value = serde_json::from_str(text).map_err(|e| malformed(e.to_string()))?;
    let root = root
        .as_object()
        .ok_or_else(|| malformed("top level must be an object"))?;
    for key in root.keys() {
        if !matches!(key.as_str(), "men" | "women" | "costs" | "leave" | "nu") {
            return Err(malformed(format!("unknown field `{key}`")));
        }
    }
    let men = parse_ids(root, "men")?;
    let women = parse_ids(root, "women")?;

    let costs_obj = root
        .get("costs")
        .and_then(Value::as_object)
        .ok_or_else(|| malformed("missing object `costs`"))?;
    let mut costs = Vec::new();
    for (agent, entries) in costs_obj {
        let entries = entries
            .as_array()
            .ok_or_else(|| malformed(format!("costs of `{agent}` must be an array")))?;
        for entry in entries {
            let items = entry
                .as_array()
                .filter(|a| a.len() == 3)
                .ok_or_else(|| malformed(format!("cost entry of `{agent}` must be [id, num, den]")))?;
            let candidate = items[0]
                .as_str()
                .ok_or_else(|| malformed(format!("cost entry of `{agent}` must name a candidate")))?;
            let what = format!("cost {agent}->{candidate}");
            let value = parse_pair(&Value::Array(items[1..].to_vec()), &what)?;
            costs.push((agent.clone(), candidate.to_string(), value));
        }
    }
    let instance = Instance::new(men, women, costs)?;

    let leave_obj = root
        .get("leave")
        .and_then(Value::as_object)
        .ok_or_else(|| malformed("missing object `leave`"))?;
    let phi = parse_pair(
        leave_obj.get("phi").ok_or_else(|| malformed("`leave` is missing `phi`"))?,
        "leave.phi",
    )?;
    let mut entries = Vec::new();
    for (id, value) in leave_obj.iter().filter(|(k, _)| k.as_str() != "phi") {
        entries.push((id.as_str(), parse_pair(value, &format!("leave.{id}"))?));
    }
    let leave = LeaveDistribution::from_ids(&instance, phi, entries)?;

    let nu = root.get("nu").map(|v| parse_pair(v, "nu")).transpose()?;
    Ok(InstanceDocument { instance, leave, nu })
}

fn int_value(value: &BigInt) -> Value {
    match value.to_i64() {
        Some(v) => Value::from(v),
        None => Value::from(value.to_string()),
    }
}

fn pair_value(value: &Rational) -> Value {
    Value::Array(vec![int_value(value.numer()), int_value(value.denom())])
}

/// Serializes with keys in document order and agents sorted by id.
pub fn serialize_instance(doc: &InstanceDocument) -> String {
    let instance = &doc.instance;
    let mut by_id: Vec<usize> = (0..instance.num_agents()).collect();
    by_id.sort_by(|&a, &b| instance.id(a).cmp(instance.id(b)));

    let mut root = Map::new();
    root.insert(
        "men".into(),
        instance.men().map(|a| Value::from(instance.id(a))).collect(),
    );
    root.insert(
        "women".into(),
        instance.women().map(|a| Value::from(instance.id(a))).collect(),
    );
    let mut costs = Map::new();
    for &a in &by_id {
        let entries = instance
            .preferences(a)
            .iter()
            .map(|&b| {
                let c = instance.cost(a, b);
                Value::Array(vec![
                    Value::from(instance.id(b)),
                    int_value(c.numer()),
                    int_value(c.denom()),
                ])
            })
            .collect();
        costs.insert(instance.id(a).to_string(), Value::Array(entries));
    }
    root.insert("costs".into(), Value::Object(costs));
    let mut leave = Map::new();
    leave.insert("phi".into(), pair_value(doc.leave.phi()));
    for &a in &by_id {
        let p = doc.leave.prob(Leaver::Agent(a));
        if !p.is_zero() {
            leave.insert(instance.id(a).to_string(), pair_value(p));
        }
    }
    root.insert("leave".into(), Value::Object(leave));
    if let Some(nu) = &doc.nu {
        root.insert("nu".into(), pair_value(nu));
    }
    let mut out = serde_json::to_string_pretty(&Value::Object(root)).expect("json values serialize");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::random_instance;
    use crate::rational::ratio;
    use proptest::prelude::*;

    #[test]
    fn gs3_document_parses() {
        let doc = parse_instance(fixtures::GS3_DOCUMENT).unwrap();
        assert_eq!(doc.instance.num_agents(), 6);
        assert_eq!(doc.instance, fixtures::gs3());
        let m1 = doc.instance.index_of("m1").unwrap();
        assert_eq!(doc.leave.prob(Leaver::Agent(m1)), &ratio(3, 4));
        assert_eq!(doc.leave.phi(), &ratio(1, 4));
        assert_eq!(doc.nu, None);
    }

    #[test]
    fn nobody_leaves_document() {
        let text = r#"{"men":["m"],"women":["w"],
            "costs":{"m":[["w",1,1],["m",2,1]],"w":[["m",1,1],["w",2,1]]},
            "leave":{"phi":[1,1]},"nu":[1,2]}"#;
        let doc = parse_instance(text).unwrap();
        assert_eq!(doc.leave.leavers(), vec![Leaver::Nobody]);
        assert_eq!(doc.nu, Some(ratio(1, 2)));
    }

    #[test]
    fn tie_in_document_is_rejected() {
        let text = fixtures::GS3_DOCUMENT.replace(r#"["w2", 2, 1]"#, r#"["w2", 1, 1]"#);
        assert!(text != fixtures::GS3_DOCUMENT);
        assert!(matches!(parse_instance(&text), Err(Error::TiedCost { .. })));
    }

    #[test]
    fn malformed_documents_are_rejected() {
        assert!(matches!(parse_instance("not json"), Err(Error::Malformed(_))));
        assert!(matches!(parse_instance("[]"), Err(Error::Malformed(_))));
        let bad_sum = fixtures::GS3_DOCUMENT.replace(r#""phi": [1, 4]"#, r#""phi": [1, 2]"#);
        assert!(matches!(parse_instance(&bad_sum), Err(Error::InvalidProbability(_))));
        let dup = fixtures::GS3_DOCUMENT.replace(r#""women": ["w1""#, r#""women": ["m1""#);
        assert!(matches!(parse_instance(&dup), Err(Error::DuplicateAgent(_))));
        let missing = fixtures::GS3_DOCUMENT.replace(r#"["w3", 3, 1], ["m1", 4, 1]"#, r#"["w3", 3, 1]"#);
        assert!(matches!(parse_instance(&missing), Err(Error::MissingCost { .. })));
        let zero_den = fixtures::GS3_DOCUMENT.replace(r#""phi": [1, 4]"#, r#""phi": [1, 0]"#);
        assert!(matches!(parse_instance(&zero_den), Err(Error::Malformed(_))));
    }

    #[test]
    fn serializer_key_order() {
        let doc = parse_instance(fixtures::GS3_DOCUMENT).unwrap();
        let text = serialize_instance(&doc);
        let positions: Vec<usize> = ["\"men\"", "\"women\"", "\"costs\"", "\"leave\""]
            .iter()
            .map(|k| text.find(k).unwrap())
            .collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
    }

    proptest! {
        #[test]
        fn round_trip(n in 1usize..6, seed in any::<u64>(), last in any::<bool>(), leavers in 0usize..4, nu_num in 0i64..5) {
            let instance = random_instance(n, seed, last).unwrap();
            let leave = LeaveDistribution::random(&instance, leavers, seed ^ 0x5eed);
            let nu = (nu_num > 0).then(|| ratio(nu_num - 1, 3));
            let doc = InstanceDocument { instance, leave, nu };
            let text = serialize_instance(&doc);
            let back = parse_instance(&text).unwrap();
            prop_assert_eq!(&back, &doc);
            prop_assert_eq!(serialize_instance(&back), text);
        }
    }
}
