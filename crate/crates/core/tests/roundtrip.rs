use proptest::prelude::*;

use wbtree::conllu::{parse_document, serialize_document};

const FORMS: &[&str] = &["中山", "路", "_", "a b", "2004", "。", "Harry"];
const VALUES: &[&str] = &["_", "NOUN", "NN", "Case=Gen|Number=Sing", "SpaceAfter=No", "x:y", "Ä"];

#[derive(Debug, Clone)]
struct Row {
    fields: [&'static str; 8],
    head: Option<usize>,
    range_len: Option<usize>,
    empty_after: bool,
}

fn row() -> impl Strategy<Value = Row> {
    (
        prop::array::uniform8(prop::sample::select(VALUES)),
        prop::option::of(0usize..8),
        prop::option::of(1usize..3),
        any::<bool>(),
    )
        .prop_map(|(fields, head, range_len, empty_after)| Row {
            fields,
            head,
            range_len,
            empty_after,
        })
}

fn sentence_text(comments: &[&str], rows: &[Row], forms: &[&str]) -> String {
    let n = rows.len();
    let mut out = String::new();
    for c in comments {
        out.push_str(c);
        out.push('\n');
    }
    let mut covered_until = 0;
    for (i, r) in rows.iter().enumerate() {
        let id = i + 1;
        if let Some(len) = r.range_len {
            if id > covered_until && id + len <= n {
                out.push_str(&format!("{id}-{}\t{}\t_\t_\t_\t_\t_\t_\t_\t_\n", id + len, forms[i]));
                covered_until = id + len;
            }
        }
        let head = r.head.map_or("_".to_owned(), |h| h.min(n).to_string());
        let f = &r.fields;
        out.push_str(&format!(
            "{id}\t{}\t{}\t{}\t{}\t{}\t{head}\t{}\t{}\t{}\n",
            forms[i], f[0], f[1], f[2], f[3], f[4], f[5], f[6]
        ));
        if r.empty_after {
            out.push_str(&format!("{id}.1\t{}\t_\t_\t_\t_\t_\t_\t{id}:dep\t_\n", f[7]));
        }
    }
    out.push('\n');
    out
}

fn document() -> impl Strategy<Value = String> {
    let sentence = (
        prop::collection::vec(
            prop::sample::select(&["# sent_id = s", "# text = 中山路", "# newdoc", "#", "# x = a = b"][..]),
            0..3,
        ),
        prop::collection::vec((row(), prop::sample::select(FORMS)), 1..6),
    )
        .prop_map(|(comments, rows)| {
            let (rows, forms): (Vec<Row>, Vec<&str>) = rows.into_iter().unzip();
            sentence_text(&comments, &rows, &forms)
        });
    prop::collection::vec(sentence, 0..4).prop_map(|s| s.concat())
}

proptest! {
    #[test]
    fn parse_then_serialize_is_identity(text in document()) {
        let doc = parse_document(text.as_bytes(), "gen").unwrap();
        prop_assert_eq!(serialize_document(&doc), text);
    }
}
