//! Seeded input generators shared by the criterion benches.

use chrono::Duration;
use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};

use gaplens_core::gap::rollup;
use gaplens_core::registry::{KcEntry, KcListDocument};
use gaplens_core::{
    Clock, FixedClock, GapFinding, KcId, KcRegistry, ReportStatus, SessionReport, SourceDoc, Timestamp,
};

const WORDS: &[&str] = &[
    "gradient", "descent", "loss", "logistic", "regression", "accuracy", "probability", "threshold", "feature",
    "weight", "bias", "softmax", "sigmoid", "overfitting", "validation", "split", "search", "heuristic", "node",
    "frontier", "layer", "activation", "epoch", "batch", "learning", "rate", "score", "predict", "class", "label",
];

/// A KC list with `top` root components, `mid` children each and `leaf`
/// grandchildren each: `top * (1 + mid * (1 + leaf))` entries in all.
pub fn kc_document(top: u32, mid: u32, leaf: u32) -> KcListDocument {
    let mut components = Vec::new();
    let entry = |id: String, parent: Option<&str>| KcEntry {
        title: format!("Topic {id}"),
        detail: parent.map(|p| format!("Refines {p}.")).unwrap_or_default(),
        id,
    };
    for a in 1..=top {
        let root = format!("KC{a}");
        components.push(entry(root.clone(), None));
        for b in 1..=mid {
            let m = format!("KC{a}.{b}");
            components.push(entry(m.clone(), Some(&root)));
            for c in 1..=leaf {
                components.push(entry(format!("KC{a}.{b}.{c}"), Some(&m)));
            }
        }
    }
    KcListDocument { course_id: "bench".into(), components }
}

pub fn registry(top: u32, mid: u32, leaf: u32) -> KcRegistry {
    KcRegistry::from_document(kc_document(top, mid, leaf)).expect("generated list is valid")
}

/// `docs` course files of roughly `words` words each.
pub fn corpus(seed: u64, docs: usize, words: usize) -> Vec<SourceDoc> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..docs)
        .map(|d| {
            let text: Vec<&str> = (0..words).map(|_| *WORDS.choose(&mut rng).unwrap()).collect();
            SourceDoc::new(format!("doc{d:03}.txt"), text.join(" "))
        })
        .collect()
}

pub fn queries(seed: u64, n: usize) -> Vec<String> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let len = rng.random_range(2..=6);
            (0..len).map(|_| *WORDS.choose(&mut rng).unwrap()).collect::<Vec<_>>().join(" ")
        })
        .collect()
}

/// `n` analyzed session reports against `registry`, each with a few gap
/// findings, stamped one second apart from the epoch.
pub fn reports(seed: u64, registry: &KcRegistry, n: usize) -> Vec<(SessionReport, Timestamp)> {
    let mut rng = StdRng::seed_from_u64(seed);
    let ids: Vec<KcId> = registry.components().iter().map(|k| k.id.clone()).collect();
    let start = FixedClock::epoch().now();
    (0..n)
        .map(|i| {
            let session = format!("s{i}");
            let findings: Vec<GapFinding> = (0..rng.random_range(1..=4))
                .map(|t| {
                    let kc = ids.choose(&mut rng).unwrap().clone();
                    GapFinding::gap(&session, t + 1, kc, rng.random_range(0.5..1.0), "misreads the concept")
                })
                .collect();
            let report = SessionReport {
                session_id: session,
                registry_version: registry.version().to_string(),
                status: ReportStatus::Analyzed,
                distinct_kcs: rollup(&findings),
                turns_analyzed: findings.len(),
                findings,
                unanalyzed_turns: vec![],
                dropped_unknown_kcs: 0,
            };
            (report, start + Duration::seconds(i as i64))
        })
        .collect()
}
