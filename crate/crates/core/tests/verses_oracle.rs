mod oracles;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tricorpus::lang::{LangTag, Source};
use tricorpus::verses::{align_verse_docs, align_verses, VerseDoc, VerseKey};

fn doc(lang: &str, entries: &[oracles::OEntry]) -> VerseDoc {
    VerseDoc::new(
        LangTag::new(lang).unwrap(),
        entries
            .iter()
            .map(|(c, f, l, t)| {
                (
                    VerseKey {
                        chapter: *c,
                        first: *f,
                        last: *l,
                    },
                    t.clone(),
                )
            })
            .collect(),
    )
    .unwrap()
}

fn join(entries: &[oracles::OEntry]) -> String {
    entries.iter().map(|e| e.3.as_str()).collect::<Vec<_>>().join(" ")
}

#[test]
fn units_match_exhaustive_union_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let lez = LangTag::new("lez_Cyrl").unwrap();
    let rus = LangTag::new("rus_Cyrl").unwrap();
    for _ in 0..500 {
        let a = oracles::random_verse_doc(&mut rng, 6, "л");
        let b = oracles::random_verse_doc(&mut rng, 6, "р");
        let got = align_verses(&doc("lez_Cyrl", &a), &doc("rus_Cyrl", &b), Source::Bible, "").unwrap();
        let want = oracles::minimal_consistent_groups(&a, &b);
        let got_texts: Vec<(String, String)> = got
            .units
            .iter()
            .map(|u| (u.text(&lez).unwrap().to_string(), u.text(&rus).unwrap().to_string()))
            .collect();
        let want_texts: Vec<(String, String)> = want
            .iter()
            .map(|&((i0, i1), (j0, j1))| (join(&a[i0..i1]), join(&b[j0..j1])))
            .collect();
        assert_eq!(got_texts, want_texts, "{a:?} / {b:?}");
    }
}

#[test]
fn twenty_verse_fixture() {
    // 4-5 merged on one side, 9 missing on the other, 12-13 against 12 and 13-14.
    let mut a = Vec::new();
    let mut b = Vec::new();
    for v in 1..=20u32 {
        match v {
            4 => a.push(format!("1:4-5\tл4")),
            5 => {}
            12 => a.push(format!("1:12-13\tл12")),
            13 | 14 => {}
            _ => a.push(format!("1:{v}\tл{v}")),
        }
        match v {
            9 => {}
            13 => b.push(format!("1:13-14\tр13")),
            14 => {}
            _ => b.push(format!("1:{v}\tр{v}")),
        }
    }
    let a = VerseDoc::parse(LangTag::new("lez_Cyrl").unwrap(), &a.join("\n")).unwrap();
    let b = VerseDoc::parse(LangTag::new("rus_Cyrl").unwrap(), &b.join("\n")).unwrap();
    let out = align_verses(&a, &b, Source::Bible, "gen/").unwrap();

    // 20 verses: 4-5 becomes one unit, 9 is unmatched, 12-14 conflicts.
    assert_eq!(out.units.len(), 20 - 1 - 1 - 3);
    assert_eq!(out.unmatched.len(), 1);
    assert_eq!(out.conflicts.len(), 1);
    let merged = out.units.iter().find(|u| u.id == "gen/1:4-5").unwrap();
    let rus = LangTag::new("rus_Cyrl").unwrap();
    assert_eq!(merged.text(&rus), Some("р4 р5"));
    assert_eq!(merged.members[&rus].verse_ref.as_deref(), Some("1:4-5"));
    assert!(out.units.iter().all(|u| u.source == Source::Bible));
}

#[test]
fn three_documents_share_units() {
    let a = doc("lez_Cyrl", &[(1, 1, 1, "a1".into()), (1, 2, 3, "a2".into())]);
    let b = doc("rus_Cyrl", &[(1, 1, 1, "b1".into()), (1, 2, 2, "b2".into()), (1, 3, 3, "b3".into())]);
    let c = doc("azj_Latn", &[(1, 1, 1, "c1".into()), (1, 2, 2, "c2".into()), (1, 3, 3, "c3".into())]);
    let out = align_verse_docs(&[&a, &b, &c], Source::Quran, "q").unwrap();
    let ids: Vec<&str> = out.units.iter().map(|u| u.id.as_str()).collect();
    assert_eq!(ids, ["q1:1", "q1:2-3"]);
    assert_eq!(out.units[1].text(&LangTag::new("azj_Latn").unwrap()), Some("c2 c3"));
}

#[test]
fn rejects_unordered_keys() {
    let lez = LangTag::new("lez_Cyrl").unwrap();
    assert!(VerseDoc::from_pairs(lez.clone(), [("1:2", "x"), ("1:1", "y")]).is_err());
    assert!(VerseDoc::from_pairs(lez.clone(), [("1:1-3", "x"), ("1:2", "y")]).is_err());
    assert!(VerseDoc::from_pairs(lez, [("1:1", "x"), ("2:1", "y")]).is_ok());
}
