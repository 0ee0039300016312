//! Scripted providers for demo mode: a short logistic-regression exchange in
//! which the student reads `.score()` accuracy as a per-prediction
//! probability. Works offline and gives the same report every time.

use std::sync::Arc;

use gaplens_core::gap::{FindingList, RawFinding, Verdict};
use gaplens_core::{Gateway, ScriptedProvider};

pub const DEMO_KC: &str = "KC1.2.1";

pub const DEMO_STUDENT_TURNS: [&str; 3] = [
    "what is .score() on my sklearn logistic regression actually measuring?",
    "so my model had a 93.33% chance of getting each point right?",
    "ok so whenever it predicts a class it is 93.33% sure that class is correct?",
];

pub const DEMO_TUTOR_REPLIES: [&str; 3] = [
    "For a classifier, .score(X, y) returns mean accuracy: the share of rows in X whose predicted label \
     matches y. What number did you get, and on which data did you compute it?",
    "Not quite. 93.33% is the fraction of test points the model labelled correctly overall. It says nothing \
     about any single point. How would you get the model's confidence for one specific prediction?",
    "That confidence comes from predict_proba, and it differs from row to row. Accuracy summarizes the whole \
     test set. What do you think predict_proba returns for a point near the decision boundary?",
];

const TUTOR_FALLBACK: &str = "Good question. Let's work through it from the course notes. \
     What have you tried so far, and what did you expect to happen?";

pub fn demo_analysis_script() -> Vec<String> {
    let gap = |conf| {
        FindingList {
            findings: vec![RawFinding::gap(
                DEMO_KC,
                conf,
                "Reads the accuracy returned by .score() as the probability that each prediction is right.",
            )],
        }
        .to_json()
    };
    vec![FindingList { findings: vec![RawFinding::verdict_only(Verdict::Correct)] }.to_json(), gap(0.8), gap(0.9)]
}

pub struct DemoProviders {
    pub tutor: Arc<ScriptedProvider>,
    pub analyst: Arc<ScriptedProvider>,
}

impl DemoProviders {
    pub fn new() -> Self {
        let correct = FindingList { findings: vec![RawFinding::verdict_only(Verdict::Correct)] }.to_json();
        Self {
            tutor: Arc::new(ScriptedProvider::new(DEMO_TUTOR_REPLIES).with_fallback(TUTOR_FALLBACK)),
            analyst: Arc::new(ScriptedProvider::new(demo_analysis_script()).with_fallback(correct)),
        }
    }

    pub fn tutor_gateway(&self) -> Gateway {
        Gateway::scripted(self.tutor.clone())
    }

    pub fn analyst_gateway(&self) -> Gateway {
        Gateway::scripted(self.analyst.clone())
    }
}

impl Default for DemoProviders {
    fn default() -> Self {
        Self::new()
    }
}
