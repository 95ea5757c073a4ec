//! The three-by-three market with three stable matchings, used across the tests and docs.

use crate::model::{Instance, LeaveDistribution, Matching};
use crate::rational::ratio;

pub const GS3_DOCUMENT: &str = r#"{
  "men": ["m1", "m2", "m3"],
  "women": ["w1", "w2", "w3"],
  "costs": {
    "m1": [["w1", 1, 1], ["w2", 2, 1], ["w3", 3, 1], ["m1", 4, 1]],
    "m2": [["w2", 1, 1], ["w3", 2, 1], ["w1", 3, 1], ["m2", 4, 1]],
    "m3": [["w3", 1, 1], ["w1", 2, 1], ["w2", 3, 1], ["m3", 4, 1]],
    "w1": [["m2", 1, 1], ["m3", 2, 1], ["m1", 3, 1], ["w1", 4, 1]],
    "w2": [["m3", 1, 1], ["m1", 2, 1], ["m2", 3, 1], ["w2", 4, 1]],
    "w3": [["m1", 1, 1], ["m2", 2, 1], ["m3", 3, 1], ["w3", 4, 1]]
  },
  "leave": { "phi": [1, 4], "m1": [3, 4] }
}
"#;

pub fn gs3() -> Instance {
    Instance::from_rankings(
        &["m1", "m2", "m3"],
        &["w1", "w2", "w3"],
        &[
            ("m1", &["w1", "w2", "w3", "m1"]),
            ("m2", &["w2", "w3", "w1", "m2"]),
            ("m3", &["w3", "w1", "w2", "m3"]),
            ("w1", &["m2", "m3", "m1", "w1"]),
            ("w2", &["m3", "m1", "m2", "w2"]),
            ("w3", &["m1", "m2", "m3", "w3"]),
        ],
    )
    .expect("fixture is valid")
}

/// `p(m1) = 3/4`, `p(phi) = 1/4`.
pub fn gs3_leave(instance: &Instance) -> LeaveDistribution {
    LeaveDistribution::from_ids(instance, ratio(1, 4), [("m1", ratio(3, 4))]).expect("valid")
}

/// Men-optimal matching.
pub fn mu_m(instance: &Instance) -> Matching {
    Matching::from_pairs(instance, &[("m1", "w1"), ("m2", "w2"), ("m3", "w3")]).expect("valid")
}

/// Sum-of-squares optimal matching.
pub fn mu_e(instance: &Instance) -> Matching {
    Matching::from_pairs(instance, &[("m1", "w2"), ("m2", "w3"), ("m3", "w1")]).expect("valid")
}

/// Women-optimal matching.
pub fn mu_f(instance: &Instance) -> Matching {
    Matching::from_pairs(instance, &[("m1", "w3"), ("m2", "w1"), ("m3", "w2")]).expect("valid")
}
