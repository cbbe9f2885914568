use std::fs;

use memworth_core::textworld::*;

fn builtin() -> (Corpus, EmbeddingTable) {
    let c = Corpus::builtin();
    let t = EmbeddingTable::fallback(&c, FALLBACK_DIM).unwrap();
    (c, t)
}

#[test]
fn interchange_round_trip() {
    let (corpus, table) = builtin();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("emb.txt");
    table.save(&path).unwrap();

    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("#model=fallback-hash-256 dim=256\n"));
    assert_eq!(text.lines().count(), 1 + corpus.memories.len() + corpus.tasks.len());

    let back = load_embeddings(&path, &corpus).unwrap();
    assert_eq!(back.model, table.model);
    assert_eq!(back.dim, table.dim);
    assert!(back.is_unit_norm());
    for (id, v) in &table.vectors {
        let w = back.get(id).unwrap();
        let err = v.iter().zip(w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{id}: {err}");
    }
}

#[test]
fn foreign_model_header_is_kept_and_vectors_renormalized() {
    let corpus = Corpus::builtin();
    let mut text = String::from("#model=all-MiniLM-L6-v2 dim=3\n");
    for (i, id) in corpus.ids().enumerate() {
        text.push_str(&format!("{id}\t{} 2 0\n", i + 1));
    }
    let t = EmbeddingTable::parse(&text, &corpus).unwrap();
    assert_eq!(t.model, "all-MiniLM-L6-v2");
    assert!(t.is_unit_norm());
}

#[test]
fn missing_id_is_an_error() {
    let (corpus, table) = builtin();
    let mut buf = Vec::new();
    table.write(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let dropped: String = text.lines().filter(|l| !l.starts_with("py_reverse\t")).map(|l| format!("{l}\n")).collect();
    match EmbeddingTable::parse(&dropped, &corpus) {
        Err(TextError::MissingId(id)) => assert_eq!(id, "py_reverse"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn malformed_vectors_are_rejected() {
    let corpus = Corpus::builtin();
    let header = "#model=m dim=2\n";
    for body in ["geo_paris\t1 x\n", "geo_paris\t1 2 3\n", "geo_paris\t0 0\n", "geo_paris\tNaN 1\n", "geo_paris 1 2\n"] {
        let r = EmbeddingTable::parse(&format!("{header}{body}"), &corpus);
        assert!(matches!(r, Err(TextError::BadVector { .. })), "{body:?}: {r:?}");
    }
    assert!(matches!(EmbeddingTable::parse("model=m dim=2\n", &corpus), Err(TextError::BadHeader(_))));
    let dup = format!("{header}geo_paris\t1 0\ngeo_paris\t0 1\n");
    assert!(matches!(EmbeddingTable::parse(&dup, &corpus), Err(TextError::BadVector { .. })));
}

#[test]
fn hitchhiker_is_the_specialists_nearest_neighbour() {
    let (corpus, table) = builtin();
    let specialist = &corpus.memories[corpus.designated(Designation::Specialist)];
    let hitch = &corpus.memories[corpus.designated(Designation::Hitchhiker)];
    let stale = &corpus.memories[corpus.designated(Designation::Stale)];
    let s = table.get(&specialist.id).unwrap();
    let nearest = corpus
        .memories
        .iter()
        .filter(|m| m.id != specialist.id)
        .max_by(|a, b| cosine(s, table.get(&a.id).unwrap()).total_cmp(&cosine(s, table.get(&b.id).unwrap())))
        .unwrap();
    assert_eq!(nearest.id, hitch.id);
    assert!(cosine(s, table.get(&hitch.id).unwrap()) > cosine(s, table.get(&stale.id).unwrap()));
}

#[test]
fn exp5_is_deterministic_per_seed() {
    let (corpus, table) = builtin();
    let cfg = Exp5Cfg { n_episodes: 400, ..Exp5Cfg::default() };
    let a = run_exp5(&cfg, &corpus, &table, 11).unwrap();
    let b = run_exp5(&cfg, &corpus, &table, 11).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, run_exp5(&cfg, &corpus, &table, 12).unwrap());
}
