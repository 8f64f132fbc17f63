mod common;

use common::{random_document, random_sentence, random_words, rng, Shape, UPOS};
use coptic_core::collab::{replay, CellEdit, WorkingCopy};
use coptic_core::formats::{
    canonicalize_grid, doc_to_grid, doc_to_interchange, doc_to_xml, grid_to_doc, interchange_to_doc, xml_to_doc,
    LayerKinds,
};
use coptic_core::lexicon::{LexEntry, Lexicon, Origin, Upos};
use coptic_core::model::{Document, Layer};
use coptic_core::normalize::{standardize, NormConfig};
use coptic_core::pipeline::build_groups;
use coptic_core::segment::{segment, segment_group};
use coptic_core::store::{apply_changes, diff_documents, doc_to_snapshot, snapshot_to_doc, Repo};
use coptic_core::tag::{find_mwes, lemmatize, tag_lang, tag_pos};
use coptic_core::treebank::{assign_deps, read_conllu, validate_tree, write_conllu};
use proptest::prelude::*;
use rand::Rng;
use unicode_normalization::UnicodeNormalization;

fn meta_of(doc: &Document) -> Vec<(String, String)> {
    doc.meta()
        .entries()
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn groups_tile_the_morphs(seed in any::<u64>()) {
        let doc = random_document(&mut rng(seed), Shape::Any);
        let mut next = 0;
        for g in doc.groups() {
            prop_assert_eq!(g.span.0, next);
            prop_assert_eq!(g.span.1 + 1 - g.span.0, g.morphs.len());
            next = g.span.1 + 1;
        }
        prop_assert_eq!(next, doc.morph_count());
        let total: usize = doc.groups().iter().map(|g| g.morphs.len()).sum();
        prop_assert_eq!(total, doc.morph_count());
    }

    #[test]
    fn attach_then_read_back(seed in any::<u64>()) {
        let doc = random_document(&mut rng(seed), Shape::Any);
        for layer in doc.layers() {
            let bare = doc.remove_layer(layer.name()).unwrap();
            let again = bare.attach_layer(layer.clone()).unwrap();
            prop_assert_eq!(again.layer(layer.name()), Some(layer));
            prop_assert!(bare.layer(layer.name()).is_none());
        }
    }

    #[test]
    fn interchange_round_trip(seed in any::<u64>()) {
        let doc = random_document(&mut rng(seed), Shape::Any);
        prop_assert_eq!(interchange_to_doc(&doc_to_interchange(&doc)).unwrap(), doc);
    }

    #[test]
    fn grid_round_trip(seed in any::<u64>()) {
        let doc = random_document(&mut rng(seed), Shape::Any);
        let kinds = LayerKinds::of(&doc);
        let grid = doc_to_grid(&doc);
        prop_assert_eq!(&grid_to_doc(&grid, &kinds).unwrap(), &doc);
        prop_assert_eq!(canonicalize_grid(&grid, &kinds).unwrap(), grid);
    }

    #[test]
    fn grid_canonical_form(seed in any::<u64>()) {
        // Shuffle the columns after orig, norm; canonicalizing restores them.
        let mut r = rng(seed);
        let doc = random_document(&mut r, Shape::Any);
        let kinds = LayerKinds::of(&doc);
        let grid = doc_to_grid(&doc);
        let lines: Vec<&str> = grid.lines().collect();
        let body = lines.iter().position(|l| !l.starts_with("#\t")).unwrap();
        let width = lines[body].split('\t').count();
        let mut order: Vec<usize> = (0..width).collect();
        for i in (3..width).rev() {
            order.swap(i, r.random_range(2..=i));
        }
        let mut shuffled: Vec<String> = lines[..body].iter().map(|l| l.to_string()).collect();
        for l in &lines[body..] {
            let cells: Vec<&str> = l.split('\t').collect();
            shuffled.push(order.iter().map(|&i| cells[i]).collect::<Vec<_>>().join("\t"));
        }
        let text = shuffled.join("\r\n") + "\r\n";
        prop_assert_eq!(&canonicalize_grid(&text, &kinds).unwrap(), &grid);
        prop_assert_eq!(doc_to_grid(&grid_to_doc(&text, &kinds).unwrap()), grid);
    }

    #[test]
    fn xml_round_trip(seed in any::<u64>()) {
        let doc = random_document(&mut rng(seed), Shape::Xml);
        let xml = doc_to_xml(&doc).unwrap();
        prop_assert_eq!(xml_to_doc(&xml).unwrap(), doc, "{}", xml);
    }

    #[test]
    fn metadata_survives_every_path(seed in any::<u64>()) {
        let doc = random_document(&mut rng(seed), Shape::Xml);
        let kinds = LayerKinds::of(&doc);
        let meta = meta_of(&doc);
        let via_xml = xml_to_doc(&doc_to_xml(&doc).unwrap()).unwrap();
        let via_grid = grid_to_doc(&doc_to_grid(&via_xml), &kinds).unwrap();
        let via_json = interchange_to_doc(&doc_to_interchange(&via_grid)).unwrap();
        let back = xml_to_doc(&doc_to_xml(&via_json).unwrap()).unwrap();
        for d in [&via_xml, &via_grid, &via_json, &back] {
            prop_assert_eq!(&meta_of(d), &meta);
        }
    }

    #[test]
    fn normalizer_is_idempotent_and_canonical(seed in any::<u64>()) {
        let text = common::messy_text(&mut rng(seed));
        let cfg = NormConfig::default();
        let once = standardize(&text, &cfg);
        prop_assert_eq!(&standardize(&once, &cfg), &once);
        let nfd: String = text.nfd().collect();
        let nfc: String = text.nfc().collect();
        prop_assert_eq!(&standardize(&nfd, &cfg), &once);
        prop_assert_eq!(&standardize(&nfc, &cfg), &once);
    }

    #[test]
    fn normalizer_never_grows_coptic(seed in any::<u64>()) {
        // Coptic letters, capitals, marks and spaces only: no composition
        // exclusions apply, so nothing expands.
        let mut r = rng(seed);
        let letters = common::coptic_letters();
        let caps = common::coptic_capitals();
        let n = r.random_range(0..30);
        let text: String = (0..n)
            .map(|_| match r.random_range(0..6) {
                0 => caps[r.random_range(0..caps.len())],
                1 => common::STRIP_MARKS[r.random_range(0..4)],
                2 => ' ',
                _ => letters[r.random_range(0..letters.len())],
            })
            .collect();
        let out = standardize(&text, &NormConfig::default());
        prop_assert!(out.chars().count() <= text.chars().count());
    }

    #[test]
    fn covers_are_sound_and_deterministic(seed in any::<u64>()) {
        let lex = Lexicon::fixture();
        let mut r = rng(seed);
        let forms = common::fixture_forms();
        let mut s = String::new();
        for _ in 0..r.random_range(1..6) {
            if r.random_bool(0.8) {
                s.push_str(&forms[r.random_range(0..forms.len())]);
            } else {
                s.push_str(&common::coptic_word(&mut r, 2));
            }
        }
        let morphs = segment_group(&s, &lex);
        let joined: String = morphs.iter().map(|m| m.orig.as_str()).collect();
        prop_assert_eq!(&joined, &s);
        prop_assert_eq!(segment_group(&s, &lex), morphs);
    }

    #[test]
    fn segmentation_is_stable_under_irrelevant_entries(seed in any::<u64>()) {
        let mut r = rng(seed);
        let forms = common::fixture_forms();
        let text: Vec<String> = (0..r.random_range(1..5))
            .map(|_| (0..r.random_range(1..4)).map(|_| forms[r.random_range(0..forms.len())].clone()).collect())
            .collect();
        let text = text.join(" ");
        let lex = Lexicon::fixture();
        let mut bigger = lex.clone();
        // ⲝ does not occur in any fixture form.
        bigger.insert(LexEntry::new("ⲝⲝ", Upos::Noun, "ⲝⲝ", Origin::Grc).unwrap());
        prop_assert_eq!(segment(&text, &lex), segment(&text, &bigger));
        let doc = Document::new(Default::default(), build_groups(&text, None, Some(&lex))).unwrap();
        prop_assert_eq!(tag_pos(&doc, &lex), tag_pos(&doc, &bigger));
        let tagged = doc.attach_layer(tag_pos(&doc, &lex)).unwrap();
        prop_assert_eq!(lemmatize(&tagged, &lex).unwrap(), lemmatize(&tagged, &bigger).unwrap());
        prop_assert_eq!(tag_lang(&tagged, &lex).unwrap(), tag_lang(&tagged, &bigger).unwrap());
        prop_assert_eq!(find_mwes(&tagged, &lex), find_mwes(&tagged, &bigger));
    }

    #[test]
    fn tagger_arity_and_tagset(seed in any::<u64>()) {
        let doc = random_document(&mut rng(seed), Shape::Xml);
        let lex = Lexicon::fixture();
        let pos = tag_pos(&doc, &lex);
        let values = pos.token_values().unwrap();
        prop_assert_eq!(values.len(), doc.morph_count());
        prop_assert!(values.iter().all(|v| UPOS.contains(&v.as_str())));
        let tagged = doc.replace_layer(pos).unwrap();
        for layer in [lemmatize(&tagged, &lex).unwrap(), tag_lang(&tagged, &lex).unwrap()] {
            prop_assert_eq!(layer.token_values().unwrap().len(), doc.morph_count());
        }
    }

    #[test]
    fn assigned_trees_are_valid(seed in any::<u64>()) {
        let words = random_words(&mut rng(seed), 15);
        let s = assign_deps(&words).unwrap();
        prop_assert_eq!(validate_tree(&s), vec![]);
        // n - 1 edges between words, and every word reaches the root.
        let n = s.nodes.len();
        prop_assert_eq!(s.nodes.iter().filter(|x| x.head != 0).count(), n - 1);
        for node in &s.nodes {
            let mut at = node.id;
            for _ in 0..=n {
                if at == 0 {
                    break;
                }
                at = s.nodes[at - 1].head;
            }
            prop_assert_eq!(at, 0);
        }
    }

    #[test]
    fn conllu_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sentences: Vec<_> = (0..r.random_range(1..4)).map(|_| random_sentence(&mut r)).collect();
        let text = write_conllu(&sentences);
        let back = read_conllu(&text).unwrap();
        prop_assert_eq!(&back, &sentences);
        prop_assert_eq!(write_conllu(&back), text);
    }

    #[test]
    fn snapshot_round_trip(seed in any::<u64>()) {
        let doc = random_document(&mut rng(seed), Shape::Any);
        prop_assert_eq!(snapshot_to_doc(&doc_to_snapshot(&doc)).unwrap(), doc);
    }

    #[test]
    fn patches_are_sound(a in any::<u64>(), b in any::<u64>(), edits in any::<u64>()) {
        let x = random_document(&mut rng(a), Shape::Any);
        // Half the time compare against an edited copy, so that cell-level
        // diffs are exercised and not only structural replacements.
        let y = if edits % 2 == 0 {
            random_document(&mut rng(b), Shape::Any)
        } else {
            mutate(&x, edits)
        };
        let changes = diff_documents(&x, &y);
        prop_assert_eq!(apply_changes(&x, &changes).unwrap(), y);
        prop_assert!(diff_documents(&x, &x).is_empty());
    }

    #[test]
    fn replay_rebuilds_the_working_copy(seed in any::<u64>()) {
        let mut r = rng(seed);
        let doc = random_document(&mut r, Shape::Any);
        let mut wc = WorkingCopy::new(doc.clone());
        let mut snapshots = vec![doc.clone()];
        for _ in 0..r.random_range(0..20) {
            if let Some(e) = random_edit(&mut r, wc.document(), wc.revision()) {
                wc.apply(&[e]).unwrap();
                snapshots.push(wc.document().clone());
            }
        }
        let revs: Vec<u64> = wc.events_since(0).unwrap().iter().map(|e| e.revision).collect();
        prop_assert_eq!(revs, (1..=wc.revision()).collect::<Vec<_>>());
        for (i, snap) in snapshots.iter().enumerate() {
            let rest = wc.events_since(i as u64).unwrap();
            prop_assert_eq!(&replay(snap, rest).unwrap(), wc.document());
        }
    }
}

/// A random editable cell change, if the document has any editable cell.
fn random_edit(r: &mut impl Rng, doc: &Document, base: u64) -> Option<CellEdit> {
    let n = doc.morph_count();
    if n == 0 {
        return None;
    }
    let mut layers: Vec<&str> = doc
        .layers()
        .filter(|l| l.token_values().is_some())
        .map(Layer::name)
        .collect();
    layers.push("norm");
    let layer = layers[r.random_range(0..layers.len())];
    let value = common::awkward_value(r, layer != "norm");
    Some(CellEdit::new(r.random_range(0..n), layer, &value, base))
}

fn mutate(doc: &Document, seed: u64) -> Document {
    let mut r = rng(seed);
    let mut out = doc.clone();
    for _ in 0..r.random_range(0..5) {
        if let Some(e) = random_edit(&mut r, &out, 0) {
            out.set_cell(e.index, &e.layer, &e.value).unwrap();
        }
    }
    let mut meta = out.meta().clone();
    if r.random_bool(0.5) {
        meta.set("version", &r.random_range(0..9).to_string()).unwrap();
    }
    out = out.with_meta(meta);
    if r.random_bool(0.3) {
        let n = out.morph_count();
        out = out
            .attach_layer(Layer::token("extra", vec!["v"; n]).unwrap())
            .unwrap_or(out);
    }
    out
}

#[test]
fn store_commit_checkout_identity() {
    let dir = tempfile::tempdir().unwrap();
    let repo = Repo::open(dir.path()).unwrap();
    let mut r = rng(7);
    let mut ids = Vec::new();
    for i in 0..20 {
        let doc = random_document(&mut r, Shape::Any);
        let outcome = repo
            .commit_at("d", &doc, "ann", &format!("c{i}"), 1_700_000_000 + i)
            .unwrap();
        let commit = outcome.commit().clone();
        assert_eq!(repo.checkout("d", &commit.id).unwrap(), doc);
        ids.push((commit.id, doc));
    }
    for (id, doc) in &ids {
        assert_eq!(&repo.checkout("d", id).unwrap(), doc);
    }
}
