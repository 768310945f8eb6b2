//! Bundled scenarios and the two-road example networks.

use crate::model::{AffineLatency, Network};

const BUNDLED: &[(&str, &str)] = &[
    ("example_a_k1.5", include_str!("../fixtures/example_a_k1.5.json")),
    ("example_a_k2", include_str!("../fixtures/example_a_k2.json")),
    ("example_a_k3", include_str!("../fixtures/example_a_k3.json")),
    ("example_a_k4", include_str!("../fixtures/example_a_k4.json")),
    ("example_b_k4", include_str!("../fixtures/example_b_k4.json")),
    ("pigou", include_str!("../fixtures/pigou.json")),
    ("general_two_od", include_str!("../fixtures/general_two_od.json")),
];

/// Scenario text of a bundled fixture.
pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn bundled_names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

fn two_types() -> Vec<String> {
    vec!["human".into(), "autonomous".into()]
}

/// Two roads with slopes `[k, 1]` and `[1, k]`, one unit of each type.
/// Optimal cost 2; the reversed routing is an equilibrium of cost `2k`.
pub fn example_a(k: f64) -> Network {
    Network::parallel(
        two_types(),
        vec![
            AffineLatency::new(vec![k, 1.0], 0.0).expect("valid slopes"),
            AffineLatency::new(vec![1.0, k], 0.0).expect("valid slopes"),
        ],
        vec![1.0, 1.0],
    )
    .expect("valid network")
}

/// A constant road of latency 1 next to a road with slopes
/// `[k/(sqrt k + 1), 1/(sqrt k + 1)]`; demands `1/sqrt k` and 1.
pub fn example_b(k: f64) -> Network {
    let s = k.sqrt();
    Network::parallel(
        two_types(),
        vec![
            AffineLatency::new(vec![0.0, 0.0], 1.0).expect("valid slopes"),
            AffineLatency::new(vec![k / (s + 1.0), 1.0 / (s + 1.0)], 0.0).expect("valid slopes"),
        ],
        vec![1.0 / s, 1.0],
    )
    .expect("valid network")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse_scenario;

    #[test]
    fn bundled_fixtures_parse() {
        for name in bundled_names() {
            parse_scenario(bundled(name).unwrap()).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        assert!(bundled("missing").is_none());
    }

    #[test]
    fn fixtures_match_constructors() {
        for (name, k) in [("example_a_k1.5", 1.5), ("example_a_k2", 2.0), ("example_a_k3", 3.0), ("example_a_k4", 4.0)]
        {
            let parsed = parse_scenario(bundled(name).unwrap()).unwrap().network;
            assert_eq!(parsed, example_a(k), "{name}");
        }
        let parsed = parse_scenario(bundled("example_b_k4").unwrap()).unwrap().network;
        assert_eq!(parsed, example_b(4.0));
    }
}
