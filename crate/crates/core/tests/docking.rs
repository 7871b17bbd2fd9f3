use std::collections::BTreeMap;

use proptest::prelude::*;
use serde::Deserialize;
use smartlet::aquatics::{dock_score, FacePattern, Offset};

#[derive(Deserialize)]
struct Case {
    a: String,
    b: String,
    offset: Offset,
    score: i32,
}

#[derive(Deserialize)]
struct Fixture {
    patterns: BTreeMap<String, FacePattern>,
    cases: Vec<Case>,
}

#[test]
fn matches_geometric_oracle() {
    let f: Fixture = serde_json::from_str(include_str!("fixtures/dock_scores.json")).unwrap();
    assert!(f.cases.iter().any(|c| c.offset != Offset::Full));
    for c in &f.cases {
        let got = dock_score(&f.patterns[&c.a], &f.patterns[&c.b], c.offset);
        assert_eq!(got, Some(c.score), "{} vs {} {:?}", c.a, c.b, c.offset);
    }
}

#[test]
fn extremes() {
    let wet = FacePattern::uniform(false);
    let dry = FacePattern::uniform(true);
    assert_eq!(dock_score(&dry, &dry, Offset::Full), Some(16));
    assert_eq!(dock_score(&dry, &wet, Offset::Full), Some(-16));
    assert_eq!(dock_score(&wet, &wet, Offset::Full), Some(0));
    assert_eq!(dock_score(&dry, &dry, Offset::HalfY), Some(8));
}

#[test]
fn half_offset_needs_registration() {
    let mut a = FacePattern::uniform(true);
    a.registration = false;
    assert_eq!(dock_score(&a, &FacePattern::uniform(true), Offset::HalfX), None);
    assert_eq!(dock_score(&a, &FacePattern::uniform(true), Offset::Full), Some(16));
}

fn pattern() -> impl Strategy<Value = FacePattern> {
    any::<u16>().prop_map(|bits| format!("{bits:016b}").parse().unwrap())
}

proptest! {
    #[test]
    fn symmetric(a in pattern(), b in pattern(), offset in prop::sample::select(vec![Offset::Full, Offset::HalfX, Offset::HalfY])) {
        prop_assert_eq!(dock_score(&a, &b, offset), dock_score(&b, &a, offset));
    }

    #[test]
    fn pattern_text_round_trip(a in pattern()) {
        prop_assert_eq!(a.to_string().parse::<FacePattern>().unwrap(), a);
    }
}
