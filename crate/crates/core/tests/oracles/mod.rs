//! Brute-force reference implementations and the randomized checks built on
//! them. Shared with the acceptance target, so each check returns `Err` with
//! a description instead of panicking.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use chrono::Duration;
use rand::rngs::StdRng;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use serde_json::json;

use gaplens_core::aggregate::{Aggregator, Window};
use gaplens_core::dialogue::retrieval::{ingest_course_material, Retriever, SourceDoc};
use gaplens_core::eval::{detection_rate, speed_of_detection, top1_accuracy, EvalResult, Metrics, Persona, StudentProfile};
use gaplens_core::gap::{rollup, GapFinding, ReportStatus, SessionReport, Verdict};
use gaplens_core::store::{replay, EventBody, EventStore};
use gaplens_core::{parse_kc_list, FixedClock, KcId, Timestamp};

pub type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------
// KC registry

const WORDS: &[&str] = &[
    "gradient", "loss", "tree", "split", "kernel", "margin", "bias", "variance", "tensor", "search",
    "heuristic", "prior", "posterior", "entropy", "layer", "epoch", "batch", "regularization", "árbol", "数据",
];

fn phrase(rng: &mut StdRng, max_words: usize) -> String {
    let n = rng.random_range(1..=max_words);
    (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

/// Random hierarchical KC list. `shape` fixes the branching when given.
pub fn random_kc_document(rng: &mut StdRng, shape: Option<(u32, u32, u32)>) -> (serde_json::Value, Vec<String>) {
    let (tops, subs, leaves) = shape.unwrap_or((rng.random_range(1..=6), rng.random_range(0..=5), rng.random_range(0..=4)));
    let mut ids = Vec::new();
    for a in 1..=tops {
        ids.push(format!("KC{a}"));
        for b in 1..=subs {
            ids.push(format!("KC{a}.{b}"));
            for c in 1..=leaves {
                ids.push(format!("KC{a}.{b}.{c}"));
            }
        }
    }
    if rng.random_bool(0.3) {
        ids.shuffle(rng);
    }
    let components: Vec<_> = ids
        .iter()
        .map(|id| {
            let mut e = json!({ "id": id, "title": phrase(rng, 4) });
            if rng.random_bool(0.7) {
                e["detail"] = json!(format!("{}\n  {}", phrase(rng, 8), phrase(rng, 3)));
            }
            e
        })
        .collect();
    (json!({ "course_id": format!("course-{}", rng.random_range(0..1000)), "components": components }), ids)
}

fn expect_error(doc: &serde_json::Value, kind: &str) -> Result<(), String> {
    match parse_kc_list(&doc.to_string()) {
        Err(e) if e.kind() == kind => Ok(()),
        Err(e) => Err(format!("expected {kind}, got {}: {e}", e.kind())),
        Ok(_) => Err(format!("expected {kind}, document was accepted: {doc}")),
    }
}

pub fn registry_roundtrip(seed: u64) -> Check {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut saw_296 = false;
    for i in 0..50 {
        let shape = if i == 0 { Some((8, 6, 5)) } else { None };
        let (doc, ids) = random_kc_document(&mut rng, shape);
        let reg = parse_kc_list(&doc.to_string()).map_err(|e| format!("registry {i}: {e}"))?;
        saw_296 |= reg.len() == 296;
        ensure(reg.len() == ids.len(), || format!("registry {i}: {} != {}", reg.len(), ids.len()))?;

        let again = parse_kc_list(&reg.to_json()).map_err(|e| format!("registry {i} reparse: {e}"))?;
        ensure(again == reg, || format!("registry {i}: round trip differs"))?;
        ensure(again.version() == reg.version(), || format!("registry {i}: version drift"))?;

        let entries = doc["components"].as_array().unwrap();
        for (kc, entry) in reg.components().iter().zip(entries) {
            ensure(kc.id.as_str() == entry["id"], || format!("registry {i}: order changed at {}", kc.id))?;
            ensure(kc.title == entry["title"], || format!("registry {i}: title of {}", kc.id))?;
            ensure(kc.detail == entry["detail"].as_str().unwrap_or(""), || format!("registry {i}: detail of {}", kc.id))?;
            let parent = kc.id.as_str().rsplit_once('.').map(|(p, _)| p.to_string());
            ensure(kc.parent_id.as_ref().map(|p| p.to_string()) == parent, || format!("registry {i}: parent of {}", kc.id))?;
            if let Some(p) = &parent {
                ensure(reg.lookup(p).is_ok(), || format!("registry {i}: parent {p} not found"))?;
            }
        }
        let rendered = reg.render_for_prompt();
        ensure(rendered.lines().count() == ids.len(), || format!("registry {i}: rendered line count"))?;
        ensure(ids.iter().all(|id| rendered.contains(id.as_str())), || format!("registry {i}: id missing from render"))?;
        ensure(rendered == again.render_for_prompt(), || format!("registry {i}: render not stable"))?;

        // error cases against this registry
        let mut bad = doc.clone();
        for bad_id in ["kc1", "KC", "KC1.", "KC.1", "KC01", "KC1.02", "KC1.2.3.4", "KC1.x", "KC-1", "KC4294967296", " KC1"] {
            bad["components"][0]["id"] = json!(bad_id);
            expect_error(&bad, "InvalidId").map_err(|e| format!("registry {i} id {bad_id:?}: {e}"))?;
        }
        let mut dup = doc.clone();
        let pick = entries[rng.random_range(0..entries.len())].clone();
        dup["components"].as_array_mut().unwrap().push(pick);
        expect_error(&dup, "DuplicateId").map_err(|e| format!("registry {i}: {e}"))?;

        let mut orphan = doc.clone();
        orphan["components"].as_array_mut().unwrap().push(json!({ "id": "KC999.1", "title": "stray" }));
        expect_error(&orphan, "OrphanParent").map_err(|e| format!("registry {i}: {e}"))?;
        if let Some(leaf) = ids.iter().find(|id| id.matches('.').count() == 2) {
            // removing a mid-level KC orphans its children
            let mid = leaf.rsplit_once('.').unwrap().0.to_string();
            let mut cut = doc.clone();
            cut["components"].as_array_mut().unwrap().retain(|e| e["id"] != mid.as_str());
            expect_error(&cut, "OrphanParent").map_err(|e| format!("registry {i}: {e}"))?;
        }

        let mut empty = doc.clone();
        empty["components"] = json!([]);
        expect_error(&empty, "EmptyRegistry").map_err(|e| format!("registry {i}: {e}"))?;
        let mut blank = doc.clone();
        blank["components"][0]["title"] = json!("  ");
        expect_error(&blank, "MalformedDocument").map_err(|e| format!("registry {i}: {e}"))?;
        let mut extra = doc.clone();
        extra["components"][0]["weight"] = json!(1);
        expect_error(&extra, "MalformedDocument").map_err(|e| format!("registry {i}: {e}"))?;
    }
    ensure(saw_296, || "no 296-component registry generated".into())?;
    Ok("50 registries (incl. 296 KCs) round-trip; all error kinds raised".into())
}

// ---------------------------------------------------------------------------
// Retrieval

fn oracle_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            cur.extend(ch.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

struct OracleChunk {
    doc_id: String,
    seq: usize,
    start: usize,
    text: String,
}

fn oracle_chunks(docs: &[SourceDoc], size: usize, overlap: usize) -> Vec<OracleChunk> {
    let mut out = Vec::new();
    for d in docs {
        let chars: Vec<char> = d.text.chars().collect();
        let mut start = 0;
        let mut seq = 0;
        while start < chars.len() {
            let end = usize::min(start + size, chars.len());
            out.push(OracleChunk { doc_id: d.doc_id.clone(), seq, start, text: chars[start..end].iter().collect() });
            seq += 1;
            start += size - overlap;
        }
    }
    out
}

struct OracleCorpus {
    chunks: Vec<OracleChunk>,
    bags: Vec<BTreeMap<String, u32>>,
    df: BTreeMap<String, usize>,
}

impl OracleCorpus {
    fn new(chunks: Vec<OracleChunk>) -> Self {
        let bags: Vec<BTreeMap<String, u32>> = chunks
            .iter()
            .map(|c| {
                let mut bag = BTreeMap::new();
                for t in oracle_tokens(&c.text) {
                    *bag.entry(t).or_insert(0) += 1;
                }
                bag
            })
            .collect();
        let mut df = BTreeMap::new();
        for bag in &bags {
            for term in bag.keys() {
                *df.entry(term.clone()).or_insert(0) += 1;
            }
        }
        Self { chunks, bags, df }
    }

    /// Score every chunk directly: for each distinct query term (sorted),
    /// qtf * (1 + ln tf) * ln(1 + N / df).
    fn top_k(&self, query: &str, k: usize) -> Vec<(String, usize, f64)> {
        let n = self.chunks.len();
        let mut qbag: BTreeMap<String, u32> = BTreeMap::new();
        for t in oracle_tokens(query) {
            *qbag.entry(t).or_insert(0) += 1;
        }
        let mut scored = Vec::new();
        for (chunk, bag) in self.chunks.iter().zip(&self.bags) {
            let mut score = 0.0f64;
            for (term, qtf) in &qbag {
                if let Some(&tf) = bag.get(term) {
                    let df = self.df[term];
                    score += f64::from(*qtf) * ((1.0 + f64::from(tf).ln()) * (1.0 + n as f64 / df as f64).ln());
                }
            }
            if score > 0.0 {
                scored.push((chunk.doc_id.clone(), chunk.seq, score));
            }
        }
        scored.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap().then((&a.0, a.1).cmp(&(&b.0, b.1))));
        scored.truncate(k);
        scored
    }
}

pub fn retrieval_oracle(seed: u64) -> Check {
    let mut rng = StdRng::seed_from_u64(seed);
    let vocab: Vec<String> = (0..60).map(|i| format!("{}{}", WORDS[i % WORDS.len()], i / WORDS.len())).collect();
    let mut largest = 0;
    let mut queries = 0;
    for corpus in 0..20 {
        let size = rng.random_range(40..=300);
        let overlap = rng.random_range(0..size);
        let step = size - overlap;
        let budget = rng.random_range(1..=1000usize);
        let ndocs = rng.random_range(1..=8usize);
        let mut docs = Vec::new();
        for d in 0..ndocs {
            // keep the corpus at or under the chunk budget
            let max_chars = (budget / ndocs).max(1) * step;
            let mut text = String::new();
            let target = rng.random_range(1..=max_chars);
            while text.chars().count() < target {
                text.push_str(vocab.choose(&mut rng).unwrap());
                text.push_str([" ", ", ", ". ", "\n", "-"].choose(&mut rng).unwrap());
            }
            let text: String = text.chars().take(target).collect();
            docs.push(SourceDoc::new(format!("doc{d:02}"), text));
        }
        let oracle = oracle_chunks(&docs, size, overlap);
        ensure(oracle.len() <= 1000, || format!("corpus {corpus}: {} chunks over budget", oracle.len()))?;
        if oracle.iter().all(|c| oracle_tokens(&c.text).is_empty()) {
            continue;
        }
        largest = largest.max(oracle.len());
        let index = ingest_course_material(&docs, size, overlap).map_err(|e| format!("corpus {corpus}: {e}"))?;
        let got_chunks: Vec<_> = index.chunks().iter().map(|c| (c.doc_id.clone(), c.seq, c.start, c.text.clone())).collect();
        let want_chunks: Vec<_> = oracle.iter().map(|c| (c.doc_id.clone(), c.seq, c.start, c.text.clone())).collect();
        ensure(got_chunks == want_chunks, || format!("corpus {corpus}: chunking differs"))?;

        let corpus_oracle = OracleCorpus::new(oracle);
        for _ in 0..10 {
            let words = rng.random_range(1..=6);
            let mut query: Vec<String> = (0..words).map(|_| vocab.choose(&mut rng).unwrap().to_uppercase()).collect();
            if rng.random_bool(0.2) {
                query.push("zzzunknown".into());
            }
            let query = query.join(" ");
            let k = rng.random_range(1..=12);
            let want = corpus_oracle.top_k(&query, k);
            let got: Vec<(String, usize, f64)> =
                index.retrieve(&query, k).into_iter().map(|s| (s.chunk.doc_id, s.chunk.seq, s.score)).collect();
            ensure(got.len() == want.len(), || format!("corpus {corpus} q={query:?}: {} hits vs {}", got.len(), want.len()))?;
            for (g, w) in got.iter().zip(&want) {
                ensure(g.0 == w.0 && g.1 == w.1 && (g.2 - w.2).abs() <= 1e-9 * w.2.abs().max(1.0), || {
                    format!("corpus {corpus} q={query:?}: got {g:?}, want {w:?}")
                })?;
            }
            queries += 1;
        }
    }
    Ok(format!("20 corpora (largest {largest} chunks), {queries} queries match brute force"))
}

// ---------------------------------------------------------------------------
// Metrics

fn kc(id: &str) -> KcId {
    KcId::parse(id).unwrap()
}

fn random_findings(rng: &mut StdRng, session: &str, pool: &[KcId]) -> Vec<GapFinding> {
    let n = rng.random_range(0..=8);
    (0..n)
        .map(|_| {
            let turn = rng.random_range(1..=5);
            match rng.random_range(0..10) {
                0 => GapFinding::non_gap(session, turn, Verdict::Correct),
                1 => GapFinding::non_gap(session, turn, Verdict::InsufficientEvidence),
                _ => {
                    // coarse confidences so ties are common
                    let conf = f64::from(rng.random_range(0..=10u32)) / 10.0;
                    let m = format!("misconception {}", rng.random_range(0..6));
                    GapFinding::gap(session, turn, pool.choose(rng).unwrap().clone(), conf, &m)
                }
            }
        })
        .collect()
}

fn report_from(session: &str, version: &str, findings: Vec<GapFinding>, status: ReportStatus) -> SessionReport {
    let insufficient = status == ReportStatus::Insufficient;
    SessionReport {
        session_id: session.into(),
        registry_version: version.into(),
        status,
        distinct_kcs: if insufficient { vec![] } else { rollup(&findings) },
        findings: if insufficient { vec![] } else { findings },
        turns_analyzed: 5,
        unanalyzed_turns: vec![],
        dropped_unknown_kcs: 0,
    }
}

/// Flat recount straight from the raw findings.
struct OracleCounts {
    n: usize,
    detected: usize,
    turn_sum: usize,
    top1: usize,
}

fn oracle_counts(cases: &[(KcId, Vec<GapFinding>)]) -> OracleCounts {
    let mut out = OracleCounts { n: cases.len(), detected: 0, turn_sum: 0, top1: 0 };
    for (missing, findings) in cases {
        let gaps: Vec<&GapFinding> = findings.iter().filter(|f| f.verdict == Verdict::Gap).collect();
        let first = gaps.iter().filter(|f| f.kc_id.as_ref() == Some(missing)).map(|f| f.turn_index).min();
        if let Some(t) = first {
            out.detected += 1;
            out.turn_sum += t;
        }
        // best = highest confidence, then earliest turn, then smallest id
        let mut best: Option<(f64, usize, &KcId)> = None;
        let ids: BTreeSet<&KcId> = gaps.iter().filter_map(|f| f.kc_id.as_ref()).collect();
        for id in ids {
            let mine: Vec<&&GapFinding> = gaps.iter().filter(|f| f.kc_id.as_ref() == Some(id)).collect();
            let conf = mine.iter().map(|f| f.confidence.unwrap()).fold(f64::NEG_INFINITY, f64::max);
            let turn = mine.iter().map(|f| f.turn_index).min().unwrap();
            let better = match best {
                None => true,
                Some((bc, bt, bid)) => conf > bc || (conf == bc && (turn < bt || (turn == bt && id < bid))),
            };
            if better {
                best = Some((conf, turn, id));
            }
        }
        if best.map(|b| b.2) == Some(missing) {
            out.top1 += 1;
        }
    }
    out
}

pub fn metric_oracle(seed: u64) -> Check {
    let mut rng = StdRng::seed_from_u64(seed);
    let pool: Vec<KcId> = ["KC1", "KC1.1", "KC1.2", "KC2.1.1", "KC2.1.2", "KC3"].into_iter().map(kc).collect();
    let mut empty_speed = 0;
    for set in 0..500 {
        let size = rng.random_range(1..=40);
        let mut cases = Vec::new();
        let mut results = Vec::new();
        for p in 0..size {
            let sid = format!("s{p}");
            let missing = pool.choose(&mut rng).unwrap().clone();
            let findings = random_findings(&mut rng, &sid, &pool);
            let profile = StudentProfile {
                profile_id: sid.clone(),
                group_id: "g".into(),
                missing_kc: missing.clone(),
                behavior: Persona::Terse,
                script: None,
            };
            results.push(EvalResult::score(&profile, report_from(&sid, "v", findings.clone(), ReportStatus::Analyzed)));
            cases.push((missing, findings));
        }
        let o = oracle_counts(&cases);
        let want_det = o.detected as f64 / o.n as f64;
        let want_top1 = o.top1 as f64 / o.n as f64;
        let want_speed = (o.detected > 0).then(|| o.turn_sum as f64 / o.detected as f64);
        if want_speed.is_none() {
            empty_speed += 1;
        }

        let m = Metrics::from_results(&results).map_err(|e| format!("set {set}: {e}"))?;
        ensure(m.detection_rate.to_bits() == want_det.to_bits(), || format!("set {set}: detection {} vs {want_det}", m.detection_rate))?;
        ensure(m.top1_accuracy.to_bits() == want_top1.to_bits(), || format!("set {set}: top1 {} vs {want_top1}", m.top1_accuracy))?;
        ensure(m.speed_of_detection.map(f64::to_bits) == want_speed.map(f64::to_bits), || {
            format!("set {set}: speed {:?} vs {want_speed:?}", m.speed_of_detection)
        })?;
        ensure(detection_rate(&results).unwrap().to_bits() == want_det.to_bits(), || format!("set {set}: detection_rate fn"))?;
        ensure(top1_accuracy(&results).unwrap().to_bits() == want_top1.to_bits(), || format!("set {set}: top1_accuracy fn"))?;
        ensure(speed_of_detection(&results).ok().map(f64::to_bits) == want_speed.map(f64::to_bits), || format!("set {set}: speed fn"))?;
        ensure(m.top1_accuracy <= m.detection_rate, || format!("set {set}: top1 {} > detection {}", m.top1_accuracy, m.detection_rate))?;
        for r in &results {
            ensure(r.detected == r.first_turn.is_some() && (!r.top1_match || r.detected), || format!("set {set}: {} flags", r.profile_id))?;
        }
    }
    Ok(format!("500 result sets bit-identical ({empty_speed} with no detections); top1 <= detection on all"))
}

// ---------------------------------------------------------------------------
// Aggregation

struct Recorded {
    at: Timestamp,
    kcs: BTreeSet<KcId>,
}

fn brute_force_counts(state: &BTreeMap<String, Recorded>, window: Option<Window>) -> (Vec<(KcId, usize)>, usize) {
    let mut counts: BTreeMap<KcId, usize> = BTreeMap::new();
    let mut sessions = 0;
    for r in state.values() {
        if let Some(w) = window {
            if !(w.start <= r.at && r.at < w.end) {
                continue;
            }
        }
        sessions += 1;
        for k in &r.kcs {
            *counts.entry(k.clone()).or_insert(0) += 1;
        }
    }
    let mut rows: Vec<(KcId, usize)> = counts.into_iter().collect();
    rows.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    (rows, sessions)
}

pub fn aggregation_oracle(seed: u64) -> Check {
    let mut rng = StdRng::seed_from_u64(seed);
    let pool: Vec<KcId> = (1..=5).flat_map(|a| (1..=3).map(move |b| kc(&format!("KC{a}.{b}")))).collect();
    let t0 = FixedClock::epoch().0;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let log = dir.path().join("events.ndjson");
    let mut store = EventStore::open(&log, "course", "v1").map_err(|e| e.to_string())?.with_snapshot_every(97);
    let mut agg = Aggregator::new("course", "v1");
    let mut state: BTreeMap<String, Recorded> = BTreeMap::new();
    let mut stale = 0;

    for i in 0..1000 {
        let sid = format!("sess{:03}", rng.random_range(0..150));
        let at = t0 + Duration::minutes(rng.random_range(0..240));
        let version = if rng.random_bool(0.05) { "v0" } else { "v1" };
        let status = if rng.random_bool(0.1) { ReportStatus::Insufficient } else { ReportStatus::Analyzed };
        let report = report_from(&sid, version, random_findings(&mut rng, &sid, &pool), status);

        let outcome = agg.record(&report, at);
        match (version, status) {
            ("v0", _) => {
                stale += 1;
                ensure(outcome.is_err(), || format!("report {i}: stale report accepted"))?;
            }
            (_, ReportStatus::Insufficient) => ensure(outcome.is_err(), || format!("report {i}: insufficient accepted"))?,
            _ => {
                outcome.map_err(|e| format!("report {i}: {e}"))?;
                state.insert(sid.clone(), Recorded { at, kcs: report.distinct_kcs.iter().map(|s| s.kc_id.clone()).collect() });
            }
        }

        if !store.state().sessions.contains_key(&sid) {
            store
                .append(EventBody::SessionCreated { session_id: sid.clone(), course_id: "course".into(), student_ref: "x".into() }, at)
                .map_err(|e| format!("report {i}: {e}"))?;
        }
        store.append(EventBody::ReportStored { report: report.clone() }, at).map_err(|e| format!("report {i}: {e}"))?;
        // stale reports are recorded too so the store quarantines them
        if status == ReportStatus::Analyzed || version == "v0" {
            store.append(EventBody::AggregateRecorded { session_id: sid.clone() }, at).map_err(|e| format!("report {i}: {e}"))?;
        }
    }

    let mut windows = vec![None];
    for _ in 0..20 {
        let a = rng.random_range(0..260);
        let b = rng.random_range(a..=260);
        windows.push(Some(Window { start: t0 + Duration::minutes(a), end: t0 + Duration::minutes(b) }));
    }
    for w in windows {
        let (want, sessions) = brute_force_counts(&state, w);
        let dist = agg.distribution(w);
        let got: Vec<(KcId, usize)> = dist.entries.iter().map(|e| (e.kc_id.clone(), e.count)).collect();
        ensure(got == want, || format!("window {w:?}: distribution differs"))?;
        ensure(dist.sessions_counted == sessions, || format!("window {w:?}: sessions {} vs {sessions}", dist.sessions_counted))?;
        let total: usize = got.iter().map(|r| r.1).sum();
        let conserved: usize = state
            .values()
            .filter(|r| w.is_none_or(|w| w.start <= r.at && r.at < w.end))
            .map(|r| r.kcs.len())
            .sum();
        ensure(total == conserved, || format!("window {w:?}: conservation {total} vs {conserved}"))?;
        for e in &dist.entries {
            ensure(e.count <= dist.sessions_counted && e.sample_misconceptions.len() <= 3, || format!("{}: bounds", e.kc_id))?;
        }
        let mut prev: Vec<(KcId, usize)> = Vec::new();
        for n in 1..=want.len() + 1 {
            let top: Vec<(KcId, usize)> = agg.top_n(n, w).entries.iter().map(|e| (e.kc_id.clone(), e.count)).collect();
            ensure(top[..] == want[..n.min(want.len())], || format!("window {w:?}: top_{n} differs"))?;
            ensure(top.starts_with(&prev), || format!("window {w:?}: top_{n} not an extension"))?;
            prev = top;
        }
    }
    ensure(agg.quarantined() == stale, || format!("quarantined {} vs {stale}", agg.quarantined()))?;

    // The live store folded the same reports through its event log.
    ensure(store.state().aggregator == agg, || "event-store aggregator differs from direct fold".into())?;
    let live = store.state().clone();
    drop(store);
    let text = std::fs::read_to_string(&log).map_err(|e| e.to_string())?;
    let replayed = replay(std::io::Cursor::new(text), "course", "v1").map_err(|e| e.to_string())?;
    ensure(replayed == live, || "full replay differs from live state".into())?;
    let reopened = EventStore::open(&log, "course", "v1").map_err(|e| e.to_string())?;
    ensure(reopened.state() == &live, || "snapshot + tail differs from live state".into())?;
    ensure(
        replayed.aggregator.distribution(None) == live.aggregator.distribution(None),
        || "replayed distribution differs".into(),
    )?;
    Ok(format!("1000 reports over {} sessions match brute force; replay of {} events identical", state.len(), live.last_seq))
}
