//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Run with `cargo test -p coptic-server --test acceptance`.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use common::{fixture_forms, oracle_cover, random_document, random_sentence, random_words, rng, Shape, UPOS};
use coptic_core::collab::{replay, EditEvent};
use coptic_core::formats::{
    doc_to_grid, doc_to_interchange, doc_to_xml, grid_to_doc, interchange_to_doc, validate, xml_to_doc, Artifact,
    Format, LayerKinds, Locator, ValidationSchema,
};
use coptic_core::lexicon::Lexicon;
use coptic_core::model::{DocMeta, Document};
use coptic_core::normalize::{standardize, NormConfig};
use coptic_core::pipeline::{build_groups, run_pipeline, run_pipeline_doc, LexiconRegistry, PipelineConfig};
use coptic_core::segment::{segment_group, segment_group_checked};
use coptic_core::store::{apply_changes, commit_id, doc_to_snapshot, Repo};
use coptic_core::tag::{lemmatize, tag_lang, tag_pos};
use coptic_core::treebank::{
    assign_deps, read_conllu, validate_tree, write_conllu, MultiwordToken, Sentence, TreeViolation,
};
use coptic_server::{router, AppState};
use http_body_util::BodyExt;
use rand::Rng;
use serde_json::{json, Value};
use tower::ServiceExt;
use unicode_normalization::UnicodeNormalization;

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

/// A named defect, the broken sentence, and the violation it must raise.
type Defect = (&'static str, Sentence, fn(&TreeViolation) -> bool);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

const FIXTURE_TEXT: &str = "ⲁϥⲥⲱⲧⲙ ⲛⲡⲣⲱⲙⲉ";

const FIXTURE_CONLLU: &str = "# sent_id = 1
# text = ⲁϥⲥⲱⲧⲙ ⲛⲡⲣⲱⲙⲉ
1-3\tⲁϥⲥⲱⲧⲙ\t_\t_\t_\t_\t_\t_\t_\t_
1\tⲁ\tⲁ\tAUX\t_\t_\t3\taux\t_\t_
2\tϥ\tϥ\tPRON\t_\t_\t3\tnsubj\t_\t_
3\tⲥⲱⲧⲙ\tⲥⲱⲧⲙ\tVERB\t_\t_\t0\troot\t_\t_
4-6\tⲛⲡⲣⲱⲙⲉ\t_\t_\t_\t_\t_\t_\t_\t_
4\tⲛ\tⲛ\tADP\t_\t_\t6\tcase\t_\t_
5\tⲡ\tⲡ\tDET\t_\t_\t6\tdet\t_\t_
6\tⲣⲱⲙⲉ\tⲣⲱⲙⲉ\tNOUN\t_\t_\t3\tobj\t_\t_

";

/// Commit id of [`frozen_commit`], fixed when the snapshot and hash
/// framing were settled. A change here breaks every stored repository.
const FROZEN_COMMIT_ID: &str = "86696243e6bfd1a90df40fd08308930d30936934dcc7887bac0c959630be54c0";

const CHILD_ENV: &str = "COPTIC_ACCEPTANCE_HASH_CHILD";

fn frozen_commit() -> String {
    let doc = fixture_doc();
    commit_id(&doc_to_snapshot(&doc), None, "ann", 1_700_000_000, "fixture")
}

fn fixture_doc() -> Document {
    let cfg = PipelineConfig::all(Format::Interchange);
    let mut doc = run_pipeline_doc(FIXTURE_TEXT, &cfg, &LexiconRegistry::with_fixture()).unwrap();
    let meta = DocMeta::new()
        .with_urn("urn:cts:copticLit:shenoute.eagerness")
        .unwrap()
        .with_title("Eagerness")
        .with_pair("source", "fixture")
        .unwrap();
    doc = doc.with_meta(meta);
    doc
}

fn segmentation_oracle() -> Outcome {
    let lex = Lexicon::fixture();
    let forms = fixture_forms();
    let mut strings = forms.clone();
    let mut layer = forms.clone();
    for _ in 1..4 {
        layer = layer
            .iter()
            .flat_map(|a| forms.iter().map(move |b| format!("{a}{b}")))
            .collect();
        strings.extend(layer.iter().cloned());
    }
    for s in &strings {
        let expected = oracle_cover(s, &forms).ok_or_else(|| format!("oracle found no cover for {s}"))?;
        let (morphs, ok) = segment_group_checked(s, &lex);
        let got: Vec<String> = morphs.into_iter().map(|m| m.orig).collect();
        ensure!(ok && got == expected, "{s}: segmenter {got:?}, oracle {expected:?}");
    }
    Ok(format!("{}/{} concatenations agree", strings.len(), strings.len()))
}

fn cover_soundness() -> Outcome {
    let lex = Lexicon::fixture();
    let forms = fixture_forms();
    let block: Vec<char> = (0x2C80..=0x2CFF)
        .chain(0x03E2..=0x03EF)
        .filter_map(char::from_u32)
        .filter(|c| !c.is_whitespace())
        .collect();
    let mut r = rng(2);
    for i in 0..10_000 {
        // Alternate between arbitrary block characters and lexicon-heavy
        // strings, so that both covered and uncovered groups occur.
        let s: String = if i % 2 == 0 {
            (0..r.random_range(1..12))
                .map(|_| block[r.random_range(0..block.len())])
                .collect()
        } else {
            (0..r.random_range(1..6))
                .map(|_| {
                    if r.random_bool(0.85) {
                        forms[r.random_range(0..forms.len())].clone()
                    } else {
                        block[r.random_range(0..block.len())].to_string()
                    }
                })
                .collect()
        };
        let joined: String = segment_group(&s, &lex).iter().map(|m| m.orig.as_str()).collect();
        ensure!(joined == s, "{s:?} came back as {joined:?}");
    }
    Ok("10000/10000 strings reassemble".into())
}

fn normalizer() -> Outcome {
    let cfg = NormConfig::default();
    let mut r = rng(3);
    for _ in 0..10_000 {
        let text = common::messy_text(&mut r);
        let once = standardize(&text, &cfg);
        ensure!(standardize(&once, &cfg) == once, "not idempotent on {text:?}");
        let nfd: String = text.nfd().collect();
        let nfc: String = text.nfc().collect();
        ensure!(standardize(&nfd, &cfg) == once, "NFD differs on {text:?}");
        ensure!(standardize(&nfc, &cfg) == once, "NFC differs on {text:?}");
    }
    Ok("10000/10000 idempotent and equivalence-stable".into())
}

fn tagger() -> Outcome {
    let lex = Lexicon::fixture();
    let mut r = rng(4);
    for _ in 0..1000 {
        let doc = random_document(&mut r, Shape::Any);
        let pos = tag_pos(&doc, &lex);
        let values = pos.token_values().ok_or("pos is not a token layer")?;
        ensure!(
            values.len() == doc.morph_count(),
            "pos arity {} for {} morphs",
            values.len(),
            doc.morph_count()
        );
        ensure!(
            values.iter().all(|v| UPOS.contains(&v.as_str())),
            "tag outside UPOS: {values:?}"
        );
        let tagged = doc.replace_layer(pos).map_err(|e| e.to_string())?;
        let lemma = lemmatize(&tagged, &lex).map_err(|e| e.to_string())?;
        let lang = tag_lang(&tagged, &lex).map_err(|e| e.to_string())?;
        ensure!(
            lemma.token_values().map(<[_]>::len) == Some(doc.morph_count()),
            "lemma arity"
        );
        let langs = lang.token_values().ok_or("lang is not a token layer")?;
        ensure!(langs.len() == doc.morph_count(), "lang arity");
        ensure!(
            langs.iter().all(|l| ["egy", "grc", "unknown"].contains(&l.as_str())),
            "lang outside set: {langs:?}"
        );
    }
    // Unknown forms: words with no cover at all.
    let letters: Vec<char> = "ⲃⲅⲇⲍⲑⲕⲝⲟⲫⲱϣϧϫϭϯ".chars().collect();
    let mut checked = 0;
    while checked < 1000 {
        let word: String = (0..r.random_range(1..7))
            .map(|_| letters[r.random_range(0..letters.len())])
            .collect();
        if segment_group_checked(&word, &lex).1 {
            continue;
        }
        let doc = Document::new(DocMeta::new(), build_groups(&word, None, Some(&lex))).map_err(|e| e.to_string())?;
        let tagged = doc.attach_layer(tag_pos(&doc, &lex)).map_err(|e| e.to_string())?;
        let lemma = lemmatize(&tagged, &lex).map_err(|e| e.to_string())?;
        let lang = tag_lang(&tagged, &lex).map_err(|e| e.to_string())?;
        let got = (
            tagged.layer("pos").and_then(|l| l.value_at(0)),
            lemma.value_at(0),
            lang.value_at(0),
        );
        ensure!(
            got == (Some("X"), Some(word.as_str()), Some("unknown")),
            "{word}: {got:?}"
        );
        checked += 1;
    }
    Ok("1000 documents in-arity and in-tagset; 1000 unknown forms fall back exactly".into())
}

fn defects(base: &Sentence) -> Vec<Defect> {
    let n = base.nodes.len();
    let root = base.nodes.iter().position(|x| x.head == 0).unwrap();
    let other = (root + 1) % n;
    let clean = Sentence {
        mwt: vec![],
        ..base.clone()
    };
    let mut out: Vec<Defect> = Vec::new();

    let mut s = clean.clone();
    s.nodes[other].head = s.nodes[other].id;
    out.push(("self-loop", s, |v| matches!(v, TreeViolation::Cycle { .. })));

    let mut s = clean.clone();
    s.nodes[other].head = 0;
    s.nodes[other].deprel = "root".into();
    out.push(("double root", s, |v| matches!(v, TreeViolation::MultipleRoots)));

    let mut s = clean.clone();
    s.nodes[other].head = n + 3;
    out.push(("dangling head", s, |v| matches!(v, TreeViolation::DanglingHead { .. })));

    // Shift every id from `other` up by one, keeping heads consistent.
    let mut s = clean.clone();
    for node in &mut s.nodes {
        if node.id > other {
            node.id += 1;
        }
        if node.head > other {
            node.head += 1;
        }
    }
    out.push(("id gap", s, |v| matches!(v, TreeViolation::IdGap { .. })));

    let mut s = clean;
    let form = |a: usize, b: usize| MultiwordToken {
        first: a,
        last: b,
        form: "ⲁⲃ".into(),
        misc: vec![],
    };
    s.mwt = vec![form(1, 2), form(2, 3)];
    out.push(("overlapping mwt", s, |v| matches!(v, TreeViolation::MwtOverlap { .. })));
    out
}

fn treebank() -> Outcome {
    let cfg = PipelineConfig::all(Format::Conllu);
    let conllu = run_pipeline(FIXTURE_TEXT, &cfg, &LexiconRegistry::with_fixture()).map_err(|e| e.to_string())?;
    for s in read_conllu(&conllu).map_err(|e| e.to_string())? {
        ensure!(
            validate_tree(&s).is_empty(),
            "fixture tree invalid: {:?}",
            validate_tree(&s)
        );
    }
    let mut r = rng(5);
    let mut seeded = 0;
    for _ in 0..1000 {
        let words = random_words(&mut r, 20);
        let s = assign_deps(&words).map_err(|e| e.to_string())?;
        let v = validate_tree(&s);
        ensure!(
            v.is_empty(),
            "assign_deps gave {v:?} for {:?}",
            words.iter().map(|w| &w.upos).collect::<Vec<_>>()
        );
        if s.nodes.len() >= 3 {
            for (name, bad, is_it) in defects(&s) {
                let v = validate_tree(&bad);
                ensure!(
                    v.len() == 1 && is_it(&v[0]),
                    "{name}: expected one detection, got {v:?}"
                );
                seeded += 1;
            }
        }
    }
    for _ in 0..1000 {
        let s = vec![random_sentence(&mut r)];
        let text = write_conllu(&s);
        let back = read_conllu(&text).map_err(|e| format!("{e}\n{text}"))?;
        ensure!(write_conllu(&back) == text, "write/read/write differs:\n{text}");
    }
    Ok(format!(
        "1000 trees valid; {seeded} seeded defects detected once each; 1000 sentences byte-stable"
    ))
}

fn end_to_end() -> Outcome {
    let cfg = PipelineConfig::all(Format::Conllu);
    let got = run_pipeline(FIXTURE_TEXT, &cfg, &LexiconRegistry::with_fixture()).map_err(|e| e.to_string())?;
    ensure!(got == FIXTURE_CONLLU, "got:\n{got}");
    Ok("byte-exact".into())
}

fn meta(doc: &Document) -> Vec<(String, String)> {
    doc.meta()
        .entries()
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn round_trips(doc: &Document) -> Result<(), String> {
    let xml = doc_to_xml(doc).map_err(|e| e.to_string())?;
    let from_xml = xml_to_doc(&xml).map_err(|e| format!("{e}\n{xml}"))?;
    ensure!(&from_xml == doc, "XML round trip differs:\n{xml}");
    let kinds = LayerKinds::of(doc);
    let grid = doc_to_grid(doc);
    let from_grid = grid_to_doc(&grid, &kinds).map_err(|e| format!("{e}\n{grid}"))?;
    ensure!(&from_grid == doc, "grid round trip differs:\n{grid}");
    let m = meta(doc);
    let chained = interchange_to_doc(&doc_to_interchange(&from_grid)).map_err(|e| e.to_string())?;
    let chained = xml_to_doc(&doc_to_xml(&chained).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let chained = grid_to_doc(&doc_to_grid(&chained), &kinds).map_err(|e| e.to_string())?;
    for d in [&from_xml, &from_grid, &chained] {
        ensure!(meta(d) == m, "metadata changed: {:?} vs {m:?}", meta(d));
    }
    Ok(())
}

const FIXTURE_XML: &str = r#"<doc urn="urn:cts:copticLit:shenoute.eagerness" title="Eagerness"><meta key="source" value="fixture"/><pb n="1"/><cb n="a"/><lb n="1"/><hi rend="red">ⲁϥⲥⲱⲧⲙ</hi> <lb n="2"/><gap reason="lacuna">ⲛⲡⲣⲱⲙⲉ</gap> <note text="gloss">ⲉⲃⲟⲗ</note> ϩⲛ ⲧⲯⲩⲭⲏ</doc>"#;

fn formats() -> Outcome {
    let fixtures = [fixture_doc(), xml_to_doc(FIXTURE_XML).map_err(|e| e.to_string())?];
    for doc in &fixtures {
        round_trips(doc)?;
    }
    let mut r = rng(7);
    for _ in 0..1000 {
        round_trips(&random_document(&mut r, Shape::Xml))?;
    }

    let schema = ValidationSchema::fixture();
    let head = "#\turn\turn:cts:a:b\norig\tnorm\tgroup\tpb\tpos\n";
    let grid_at = |row: usize, layer: &str| Locator::Grid {
        row,
        layer: layer.into(),
    };
    let xml_at = |line: u32, col: u32| Locator::Xml { line, col };
    let mut bad_pos = fixture_doc();
    bad_pos.set_cell(2, "pos", "VRB").map_err(|e| e.to_string())?;
    // Strict, with every layer of the fixture declared except lemma.
    let mut strict = String::from("[grid]\nstrict\n");
    for l in fixture_doc().layers().filter(|l| l.name() != "lemma") {
        strict.push_str(&format!("layer {} {} .*\n", l.name(), l.kind().as_str()));
    }
    let strict = ValidationSchema::parse(&strict).map_err(|e| e.to_string())?;
    let titled = ValidationSchema::parse("[meta]\npattern title ^[A-Z]\n").map_err(|e| e.to_string())?;
    let lower = fixture_doc().with_meta(DocMeta::new().with_title("eagerness"));
    let cases: Vec<(&str, Vec<_>, Locator)> = vec![
        (
            "xml.malformed",
            validate(Artifact::Xml("<doc>\n  <pb></doc>"), &schema),
            xml_at(2, 7),
        ),
        (
            "xml.element",
            validate(Artifact::Xml("<doc urn=\"urn:cts:a:b\"><foo/></doc>"), &schema),
            xml_at(1, 24),
        ),
        (
            "xml.attribute",
            validate(
                Artifact::Xml("<doc urn=\"urn:cts:a:b\">\n<hi colour=\"red\">ⲁ</hi></doc>"),
                &schema,
            ),
            xml_at(2, 1),
        ),
        (
            "xml.nesting",
            validate(
                Artifact::Xml("<doc urn=\"urn:cts:a:b\"><m>ⲁ<pb n=\"1\"/></m></doc>"),
                &schema,
            ),
            xml_at(1, 28),
        ),
        (
            "grid.pattern",
            validate(Artifact::Document(&bad_pos), &schema),
            grid_at(3, "pos"),
        ),
        (
            "grid.kind",
            validate(Artifact::Grid(&format!("{head}ⲁ\tⲁ\tB\tX\tAUX\n")), &schema),
            grid_at(1, "pb"),
        ),
        (
            "grid.layer",
            validate(Artifact::Document(&fixture_doc()), &strict),
            grid_at(0, "lemma"),
        ),
        (
            "grid.malformed",
            validate(Artifact::Grid("#\turn\turn:cts:a:b\nnorm\torig\tgroup\n"), &schema),
            grid_at(0, ""),
        ),
        (
            "grid.ragged",
            validate(
                Artifact::Grid(&format!("{head}ⲁ\tⲁ\tB\tB-1\tAUX\nϥ\tϥ\tI\tI\n")),
                &schema,
            ),
            grid_at(2, ""),
        ),
        (
            "grid.bio",
            validate(
                Artifact::Grid(&format!("{head}ⲁ\tⲁ\tB\tO\tAUX\nϥ\tϥ\tI\tI\tPRON\n")),
                &schema,
            ),
            grid_at(2, "pb"),
        ),
        (
            "meta.required",
            validate(Artifact::Document(&fixture_doc().with_meta(DocMeta::new())), &schema),
            Locator::Meta { key: "urn".into() },
        ),
        (
            "meta.pattern",
            validate(Artifact::Document(&lower), &titled),
            Locator::Meta { key: "title".into() },
        ),
    ];
    for (rule, found, at) in &cases {
        ensure!(
            found.len() == 1 && found[0].rule == *rule && found[0].location == *at,
            "{rule}: expected one violation at {at:?}, got {found:?}"
        );
    }
    Ok(format!(
        "2 fixtures + 1000 documents round-trip; {} rule kinds located",
        cases.len()
    ))
}

fn store() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let repo = Repo::open(dir.path()).map_err(|e| e.to_string())?;
    let mut r = rng(8);
    let mut commits = Vec::new();
    for i in 0..50u64 {
        let doc = random_document(&mut r, Shape::Any);
        let mut m = doc.meta().clone();
        m.set("revision", &i.to_string()).map_err(|e| e.to_string())?;
        let doc = doc.with_meta(m);
        let c = repo
            .commit_at("d", &doc, "ann", &format!("commit {i}"), 1_700_000_000 + i)
            .map_err(|e| e.to_string())?
            .commit()
            .clone();
        commits.push((c, doc));
    }
    let history = repo.history("d").map_err(|e| e.to_string())?;
    ensure!(history.len() == 50, "history has {} commits", history.len());
    for (c, doc) in &commits {
        let out = repo.checkout("d", &c.id).map_err(|e| e.to_string())?;
        ensure!(&out == doc, "checkout of {} differs", c.id);
        let again = commit_id(
            &doc_to_snapshot(&out),
            c.parent.as_deref(),
            &c.author,
            c.timestamp,
            &c.message,
        );
        ensure!(again == c.id, "checkout of {} hashes to {again}", c.id);
    }
    for _ in 0..200 {
        let (a, _) = &commits[r.random_range(0..50)];
        let (b, want) = &commits[r.random_range(0..50)];
        let changes = repo.diff("d", &a.id, &b.id).map_err(|e| e.to_string())?;
        let base = repo.checkout("d", &a.id).map_err(|e| e.to_string())?;
        let patched = apply_changes(&base, &changes).map_err(|e| e.to_string())?;
        ensure!(&patched == want, "diff {} -> {} is not sound", a.id, b.id);
    }
    let exe = std::env::current_exe().map_err(|e| e.to_string())?;
    let child = std::process::Command::new(exe)
        .env(CHILD_ENV, "1")
        .output()
        .map_err(|e| e.to_string())?;
    let theirs = String::from_utf8_lossy(&child.stdout).trim().to_string();
    let ours = frozen_commit();
    ensure!(theirs == ours, "child process hashed {theirs}, this one {ours}");
    ensure!(
        ours == FROZEN_COMMIT_ID,
        "hash {ours} differs from the frozen {FROZEN_COMMIT_ID}"
    );
    Ok("50 commits, 50 checkouts hash-equal, 200 patches sound, hash stable across processes".into())
}

struct Client {
    doc: Document,
    seen: u64,
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, String) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

async fn sync(app: &Router, c: &mut Client, log: &mut Vec<u64>) -> Result<(), String> {
    let (s, body) = call(app, "GET", &format!("/api/docs/d/events?since={}", c.seen), None).await;
    ensure!(s == StatusCode::OK, "events: {s} {body}");
    let v: Value = serde_json::from_str(&body).map_err(|e| e.to_string())?;
    let events: Vec<EditEvent> = serde_json::from_value(v["events"].clone()).map_err(|e| e.to_string())?;
    for e in &events {
        log.push(e.revision);
    }
    c.doc = replay(&c.doc, &events).map_err(|e| e.to_string())?;
    c.seen = v["revision"].as_u64().ok_or("no revision")?;
    Ok(())
}

async fn service_run() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut schemas = BTreeMap::new();
    schemas.insert("fixture".to_string(), ValidationSchema::fixture());
    let repo = Repo::open(dir.path()).map_err(|e| e.to_string())?;
    let app = router(Arc::new(AppState::new(repo, LexiconRegistry::with_fixture(), schemas)));

    let start = fixture_doc();
    let (s, body) = call(
        &app,
        "PUT",
        "/api/docs/d?format=interchange",
        Some(serde_json::from_str(&doc_to_interchange(&start)).unwrap()),
    )
    .await;
    ensure!(s == StatusCode::OK, "seed: {s} {body}");
    let mut clients = [
        Client {
            doc: Document::empty(DocMeta::new()),
            seen: 0,
        },
        Client {
            doc: Document::empty(DocMeta::new()),
            seen: 0,
        },
    ];
    let mut log = Vec::new();
    sync(&app, &mut clients[0], &mut log).await?;
    log.clear();
    sync(&app, &mut clients[1], &mut Vec::new()).await?;

    let layers = ["pos", "lemma", "lang", "norm"];
    let values = ["NOUN", "VERB", "ⲁ", "egy", "ⲣⲱⲙⲉ", "X"];
    let mut r = rng(9);
    for _ in 0..200 {
        let who = r.random_range(0..2);
        let c = &mut clients[who];
        let edits: Vec<Value> = (0..r.random_range(1..4))
            .map(|_| {
                json!({
                    "index": r.random_range(0..start.morph_count()),
                    "layer": layers[r.random_range(0..layers.len())],
                    "value": values[r.random_range(0..values.len())],
                    "base_revision": c.seen,
                })
            })
            .collect();
        let (s, body) = call(&app, "POST", "/api/docs/d/edits", Some(json!({ "edits": edits }))).await;
        ensure!(s == StatusCode::OK, "edit: {s} {body}");
        // Clients poll at random, so they usually edit from a stale base.
        if r.random_bool(0.3) {
            let mut ignore = Vec::new();
            let sink = if who == 0 { &mut log } else { &mut ignore };
            sync(&app, c, sink).await?;
        }
    }
    sync(&app, &mut clients[0], &mut log).await?;
    sync(&app, &mut clients[1], &mut Vec::new()).await?;

    let (_, now) = call(&app, "GET", "/api/docs/d?format=interchange", None).await;
    let server = interchange_to_doc(&now).map_err(|e| e.to_string())?;
    ensure!(
        clients[0].doc == server && clients[1].doc == server,
        "replicas diverged"
    );
    let (_, all) = call(&app, "GET", "/api/docs/d/events?since=0", None).await;
    let all: Value = serde_json::from_str(&all).map_err(|e| e.to_string())?;
    let revs: Vec<u64> = all["events"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["revision"].as_u64().unwrap())
        .collect();
    let head = revs.len() as u64;
    ensure!(
        revs == (1..=head).collect::<Vec<_>>(),
        "revisions not gapless: {revs:?}"
    );
    ensure!(log == (2..=head).collect::<Vec<_>>(), "client saw revisions {log:?}");

    let cfg = PipelineConfig::all(Format::Conllu);
    let lexicons = LexiconRegistry::with_fixture();
    let text = "ⲁϥⲥⲱⲧⲙ ⲛⲡⲣⲱⲙⲉ ϩⲛ ⲧⲯⲩⲭⲏ · ⲁϥⲥⲱⲧⲙ ⲉⲃⲟⲗ.";
    let first = run_pipeline(text, &cfg, &lexicons).map_err(|e| e.to_string())?;
    let request = json!({"text": text, "config": {"output": "conllu"}});
    for _ in 0..10 {
        ensure!(
            run_pipeline(text, &cfg, &lexicons).map_err(|e| e.to_string())? == first,
            "library output varies"
        );
        let (s, body) = call(&app, "POST", "/api/pipeline", Some(request.clone())).await;
        ensure!(s == StatusCode::OK && body == first, "service output varies: {s}");
    }
    Ok(format!(
        "2 clients converged over {head} gapless revisions; pipeline identical over 10 repeats"
    ))
}

fn service() -> Outcome {
    tokio::runtime::Runtime::new()
        .map_err(|e| e.to_string())?
        .block_on(service_run())
}

fn main() -> ExitCode {
    if std::env::var_os(CHILD_ENV).is_some() {
        println!("{}", frozen_commit());
        return ExitCode::SUCCESS;
    }
    let criteria: [(&str, Check); _] = [
        ("segmentation oracle", segmentation_oracle),
        ("cover soundness", cover_soundness),
        ("normalizer", normalizer),
        ("tagger", tagger),
        ("treebank", treebank),
        ("end-to-end", end_to_end),
        ("formats", formats),
        ("store", store),
        ("service", service),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let ms = t.elapsed().as_millis();
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} ({ms} ms)"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why} ({ms} ms)");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
