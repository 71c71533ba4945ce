use std::collections::BTreeMap;
use std::path::Path;

use peerkit::baselines::{awrf_at, ndcg_at, recall_at, AwrfOptions, Gain};
use peerkit::io::{parse_measure_spec, read_langmap, read_qrels, read_run, write_langmap, write_qrels, write_run};
use peerkit::model::{canonicalize_run, DocId, Language, LanguageMap, QrelsStore, QueryId, RankMode, RawEntry, RunStore};
use peerkit::peer::{peer_aggregate, peer_query, LevelWeights, PeerOptions};
use peerkit::stats::{kw_statistic, GroupedRanks};
use peerkit::synth::{gen_increasing_length, gen_interleaving, gen_shifting};
use proptest::prelude::*;

fn id(s: String) -> DocId {
    DocId::new(s).unwrap()
}

/// (doc index, score, grade, language index) tuples for a single query.
fn instance() -> impl Strategy<Value = Vec<(f64, Option<u32>, usize, bool)>> {
    prop::collection::vec(
        (
            prop_oneof![Just(0.5), Just(1.0), -10.0..10.0f64],
            prop::option::of(0u32..3),
            0usize..3,
            prop::bool::weighted(0.85),
        ),
        1..30,
    )
}

fn build(items: &[(f64, Option<u32>, usize, bool)]) -> (RunStore, QrelsStore, LanguageMap, QueryId) {
    let q = QueryId::new("q").unwrap();
    let langs = ["eng", "fas", "rus"];
    let mut qrels = QrelsStore::new();
    let mut map = LanguageMap::new();
    let mut entries = Vec::new();
    for (i, (score, grade, lang, retrieved)) in items.iter().enumerate() {
        let d = id(format!("d{i}"));
        map.insert(d.clone(), Language::new(langs[*lang]).unwrap()).unwrap();
        if let Some(g) = grade {
            qrels.insert(q.clone(), d.clone(), *g).unwrap();
        }
        if *retrieved {
            entries.push(RawEntry::new(d, *score, 0));
        }
    }
    let mut run = RunStore::new();
    if !entries.is_empty() {
        run.insert(q.clone(), canonicalize_run(&q, entries, RankMode::Score).unwrap());
    }
    (run, qrels, map, q)
}

proptest! {
    #[test]
    fn canonicalize_is_permutation_invariant(items in instance(), seed in any::<u64>()) {
        let q = QueryId::new("q").unwrap();
        let entries: Vec<RawEntry> = items.iter().enumerate()
            .map(|(i, (s, ..))| RawEntry::new(id(format!("d{i}")), *s, 0))
            .collect();
        let a = canonicalize_run(&q, entries.clone(), RankMode::Score).unwrap();
        let mut shuffled = entries;
        let n = shuffled.len();
        for i in 0..n {
            shuffled.swap(i, (seed as usize).wrapping_add(i * 7919) % n);
        }
        let b = canonicalize_run(&q, shuffled, RankMode::Score).unwrap();
        prop_assert_eq!(&a, &b);

        let again: Vec<RawEntry> = a.entries().iter()
            .map(|e| RawEntry::new(e.doc.clone(), e.score, e.rank as i64))
            .collect();
        prop_assert_eq!(canonicalize_run(&q, again.clone(), RankMode::Score).unwrap(), a.clone());
        prop_assert_eq!(canonicalize_run(&q, again, RankMode::Declared).unwrap(), a.clone());
        for (i, e) in a.entries().iter().enumerate() {
            prop_assert_eq!(e.rank, i + 1);
        }
    }

    #[test]
    fn trec_round_trip(items in instance()) {
        let (run, qrels, map, _) = build(&items);
        let src = Path::new("mem");
        let mut buf = Vec::new();
        write_run(&mut buf, &run, "t").unwrap();
        prop_assert_eq!(read_run(&buf[..], src, RankMode::Score).unwrap(), run.clone());
        prop_assert_eq!(read_run(&buf[..], src, RankMode::Declared).unwrap(), run);
        let mut buf = Vec::new();
        write_qrels(&mut buf, &qrels).unwrap();
        prop_assert_eq!(read_qrels(&buf[..], src).unwrap(), qrels);
        let mut buf = Vec::new();
        write_langmap(&mut buf, &map).unwrap();
        prop_assert_eq!(read_langmap(&buf[..], src).unwrap(), map);
    }

    #[test]
    fn measures_are_bounded(items in instance(), cutoff in 1usize..40) {
        let (run, qrels, map, q) = build(&items);
        let list = run.get("q");
        for v in [
            ndcg_at(list, &qrels, &q, cutoff, Gain::Exponential),
            recall_at(list, &qrels, &q, cutoff),
        ].into_iter().flatten() {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
        }
        if let Some(o) = awrf_at(list, &qrels, &map, &q, cutoff, &AwrfOptions::default()).unwrap() {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&o.value));
        }
        if let Some(p) = peer_query(list, &qrels, &map, &q, &PeerOptions::new(cutoff)).unwrap().map(|r| r.value) {
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn recall_non_decreasing_in_cutoff(items in instance()) {
        let (run, qrels, _, q) = build(&items);
        let mut prev = 0.0;
        for x in 1..35 {
            if let Some(r) = recall_at(run.get("q"), &qrels, &q, x) {
                prop_assert!(r >= prev);
                prev = r;
            }
        }
    }

    #[test]
    fn peer_invariant_to_language_relabeling(items in instance(), cutoff in 1usize..40) {
        let (run, qrels, map, q) = build(&items);
        let renamed: BTreeMap<&str, &str> = [("eng", "zz1"), ("fas", "aa2"), ("rus", "mm3")].into_iter().collect();
        let mut map2 = LanguageMap::new();
        for (d, l) in map.iter() {
            map2.insert(d.clone(), Language::new(renamed[l.as_str()]).unwrap()).unwrap();
        }
        let opts = PeerOptions::new(cutoff);
        let a = peer_query(run.get("q"), &qrels, &map, &q, &opts).unwrap();
        let b = peer_query(run.get("q"), &qrels, &map2, &q, &opts).unwrap();
        match (a, b) {
            (Some(a), Some(b)) => prop_assert!((a.value - b.value).abs() <= 1e-12),
            (a, b) => prop_assert_eq!(a.is_none(), b.is_none()),
        }
    }

    #[test]
    fn peer_ignores_nonrelevant_positions_with_binary_weights(items in instance(), seed in any::<u64>()) {
        let (run, qrels, map, q) = build(&items);
        let Some(list) = run.get("q") else { return Ok(()) };
        // shuffle the nonrelevant/unjudged documents among their own slots
        let mut slots: Vec<usize> = Vec::new();
        let mut docs: Vec<DocId> = list.docs().cloned().collect();
        for (i, d) in docs.iter().enumerate() {
            if qrels.grade("q", d.as_str()).unwrap_or(0) == 0 {
                slots.push(i);
            }
        }
        let mut moved: Vec<DocId> = slots.iter().map(|&i| docs[i].clone()).collect();
        let shift = if moved.is_empty() { 0 } else { seed as usize % moved.len() };
        moved.rotate_left(shift);
        for (&i, d) in slots.iter().zip(moved) {
            docs[i] = d;
        }
        let entries = docs.into_iter().enumerate().map(|(r, d)| RawEntry::new(d, -(r as f64), 0)).collect();
        let mut run2 = RunStore::new();
        run2.insert(q.clone(), canonicalize_run(&q, entries, RankMode::Score).unwrap());
        let opts = PeerOptions {
            weights: LevelWeights::Explicit([(0, 0.0), (1, 1.0)].into_iter().collect()),
            ..PeerOptions::new(20)
        };
        let a = peer_query(run.get("q"), &qrels, &map, &q, &opts).unwrap();
        let b = peer_query(run2.get("q"), &qrels, &map, &q, &opts).unwrap();
        prop_assert_eq!(a.map(|r| r.value.to_bits()), b.map(|r| r.value.to_bits()));
    }

    #[test]
    fn measure_spec_display_round_trips(
        name in prop_oneof![Just("PEER"), Just("peer"), Just("AWRF"), Just("aDCG"), Just("alpha-ndcg"), Just("nDCG"), Just("recall")],
        opt in prop_oneof![
            Just(""), Just("(w=0:0,1:0.5,2:1)"), Just("(rerank=midranks,df=collection)"), Just("(absent=one)"),
            Just("(target=lang:eng:0.25,fas:0.75,dist=jsd)"), Just("(attention=rbp:0.8)"), Just("(alpha=0.2)"), Just("(gain=linear)"),
        ],
        cutoff in 1usize..2000,
    ) {
        let text = format!("{name}{opt}@{cutoff}");
        if let Ok(spec) = parse_measure_spec(&text) {
            let shown = spec.to_string();
            let reparsed = parse_measure_spec(&shown).unwrap();
            prop_assert_eq!(reparsed.to_string(), shown);
            prop_assert_eq!(reparsed, spec);
        }
    }

    #[test]
    fn kw_statistic_matches_rank_sum_form(groups in prop::collection::vec(prop::collection::vec(1u32..20, 1..8), 2..5)) {
        // distinct ranks 1..n so the two textbook forms coincide
        let mut next = 0.0;
        let ranks: Vec<Vec<f64>> = groups.iter().map(|g| g.iter().map(|_| { next += 1.0; next }).collect()).collect();
        let n = next;
        let h = kw_statistic(&GroupedRanks::new(ranks.clone())).unwrap();
        let rank_sum: f64 = ranks.iter().map(|g| g.iter().sum::<f64>().powi(2) / g.len() as f64).sum();
        let expected = 12.0 / (n * (n + 1.0)) * rank_sum - 3.0 * (n + 1.0);
        prop_assert!((h - expected).abs() <= 1e-9 * expected.abs().max(1.0));
    }
}

#[test]
fn full_shift_matches_interleaving() {
    for n in 1..30 {
        let a = gen_shifting(n, n).unwrap();
        let b = gen_interleaving(2 * n).unwrap();
        assert_eq!(a.language_sequence(), b.language_sequence());
    }
}

#[test]
fn full_prefix_matches_full_shift() {
    let a = gen_increasing_length(100, 100).unwrap();
    let b = gen_shifting(50, 50).unwrap();
    assert_eq!(a.language_sequence(), b.language_sequence());
}

#[test]
fn generators_cover_every_document() {
    for data in [gen_shifting(7, 3).unwrap(), gen_interleaving(9).unwrap(), gen_increasing_length(20, 6).unwrap()] {
        let list = data.run.get(data.query.as_str()).unwrap();
        for (i, e) in list.entries().iter().enumerate() {
            assert_eq!(e.rank, i + 1);
            assert!(data.langmap.contains(e.doc.as_str()));
            assert_eq!(data.qrels.grade(data.query.as_str(), e.doc.as_str()), Some(1));
        }
        let score = peer_aggregate(&data.run, &data.qrels, &data.langmap, &PeerOptions::new(100)).unwrap();
        assert!(score.excluded.is_empty());
    }
}
