use std::fmt::Write as _;

use thiserror::Error;

use super::{DepNode, MultiwordToken, Sentence};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ConlluError {
    pub line: usize,
    pub message: String,
}

fn field(s: &str) -> &str {
    if s.is_empty() {
        "_"
    } else {
        s
    }
}

fn misc_field(items: &[String]) -> String {
    if items.is_empty() {
        "_".to_string()
    } else {
        items.join("|")
    }
}

/// Serializes sentences: comments, range lines before their first word,
/// ten tab-separated columns, and a blank line after every sentence.
/// Empty fields are written as `_`.
pub fn write_conllu(sentences: &[Sentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        for c in &s.comments {
            let _ = writeln!(out, "# {c}");
        }
        let write_range = |out: &mut String, m: &MultiwordToken| {
            let _ = writeln!(
                out,
                "{}-{}\t{}\t_\t_\t_\t_\t_\t_\t_\t{}",
                m.first,
                m.last,
                field(&m.form),
                misc_field(&m.misc)
            );
        };
        for n in &s.nodes {
            for m in s.mwt.iter().filter(|m| m.first == n.id) {
                write_range(&mut out, m);
            }
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                n.id,
                field(&n.form),
                field(&n.lemma),
                field(&n.upos),
                field(&n.xpos),
                field(&n.feats),
                n.head,
                field(&n.deprel),
                field(&n.deps),
                misc_field(&n.misc)
            );
        }
        for m in &s.mwt {
            if !s.nodes.iter().any(|n| n.id == m.first) {
                write_range(&mut out, m);
            }
        }
        out.push('\n');
    }
    out
}

fn parse_id(s: &str, line: usize) -> Result<usize, ConlluError> {
    s.parse::<usize>().map_err(|_| ConlluError {
        line,
        message: format!("non-numeric id {s:?}"),
    })
}

fn parse_misc(s: &str) -> Vec<String> {
    if s == "_" {
        Vec::new()
    } else {
        s.split('|').map(String::from).collect()
    }
}

/// Parses CoNLL-U text. Sentences are separated by blank lines; the final
/// blank line may be missing.
pub fn read_conllu(text: &str) -> Result<Vec<Sentence>, ConlluError> {
    let mut sentences = Vec::new();
    let mut current = Sentence::default();
    let mut open = false;
    for (i, line) in text.split('\n').enumerate() {
        let line_no = i + 1;
        if line.is_empty() {
            if open {
                sentences.push(std::mem::take(&mut current));
                open = false;
            }
            continue;
        }
        open = true;
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.strip_prefix(' ').unwrap_or(comment);
            current.comments.push(comment.to_string());
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(ConlluError {
                line: line_no,
                message: format!("expected 10 columns, found {}", cols.len()),
            });
        }
        if let Some((a, b)) = cols[0].split_once('-') {
            let first = parse_id(a, line_no)?;
            let last = parse_id(b, line_no)?;
            if first == 0 || last <= first {
                return Err(ConlluError {
                    line: line_no,
                    message: format!("broken range {:?}", cols[0]),
                });
            }
            current.mwt.push(MultiwordToken {
                first,
                last,
                form: cols[1].to_string(),
                misc: parse_misc(cols[9]),
            });
            continue;
        }
        let id = parse_id(cols[0], line_no)?;
        let head = cols[6].parse::<usize>().map_err(|_| ConlluError {
            line: line_no,
            message: format!("non-numeric head {:?}", cols[6]),
        })?;
        current.nodes.push(DepNode {
            id,
            form: cols[1].to_string(),
            lemma: cols[2].to_string(),
            upos: cols[3].to_string(),
            xpos: cols[4].to_string(),
            feats: cols[5].to_string(),
            head,
            deprel: cols[7].to_string(),
            deps: cols[8].to_string(),
            misc: parse_misc(cols[9]),
        });
    }
    if open {
        sentences.push(current);
    }
    Ok(sentences)
}
