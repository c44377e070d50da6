use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::BufRead;

use indexmap::IndexMap;

use super::{NGramModel, NgramEntry};
use crate::error::{Error, Result};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn section_order(line: &str) -> Option<usize> {
    line.strip_prefix('\\')?
        .strip_suffix("-grams:")?
        .parse()
        .ok()
}

enum State {
    Preamble,
    Data,
    Section(usize),
    End,
}

/// Parses ARPA text.
///
/// N-gram lines are `log10prob <ws> w1 .. wn [<ws> log10backoff]`; tabs and
/// spaces are both accepted as separators.
pub fn parse_arpa<R: BufRead>(reader: R) -> Result<NGramModel> {
    let mut state = State::Preamble;
    let mut declared: Vec<usize> = Vec::new();
    let mut tables: Vec<IndexMap<Box<[u32]>, NgramEntry>> = Vec::new();
    let mut words: Vec<String> = Vec::new();
    let mut ids: HashMap<String, u32> = HashMap::new();
    let mut last_line = 0;

    let close_section = |n: usize, tables: &[IndexMap<Box<[u32]>, NgramEntry>], declared: &[usize], line: usize| {
        let found = tables[n - 1].len();
        if found != declared[n - 1] {
            return Err(parse_err(
                line,
                format!(
                    "\\{n}-grams: section has {found} entries but \\data\\ declares {}",
                    declared[n - 1]
                ),
            ));
        }
        Ok(())
    };

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        last_line = lineno;
        let line = line.map_err(|e| parse_err(lineno, format!("read failed: {e}")))?;
        let line = line.trim();
        match state {
            State::Preamble => {
                if line == "\\data\\" {
                    state = State::Data;
                }
            }
            State::Data => {
                if line.is_empty() {
                    continue;
                }
                if let Some(rest) = line.strip_prefix("ngram ") {
                    let (n, count) = rest
                        .split_once('=')
                        .ok_or_else(|| parse_err(lineno, format!("malformed count line {line:?}")))?;
                    let n: usize = n
                        .trim()
                        .parse()
                        .map_err(|_| parse_err(lineno, format!("bad order in {line:?}")))?;
                    let count: usize = count
                        .trim()
                        .parse()
                        .map_err(|_| parse_err(lineno, format!("bad count in {line:?}")))?;
                    if n != declared.len() + 1 {
                        return Err(parse_err(lineno, format!("expected ngram {}=, got {line:?}", declared.len() + 1)));
                    }
                    declared.push(count);
                } else if section_order(line) == Some(1) {
                    if declared.is_empty() {
                        return Err(parse_err(lineno, "\\data\\ section declares no n-gram counts"));
                    }
                    tables.push(IndexMap::with_capacity(declared[0]));
                    state = State::Section(1);
                } else {
                    return Err(parse_err(lineno, format!("unexpected line in \\data\\: {line:?}")));
                }
            }
            State::Section(n) => {
                if line.is_empty() {
                    continue;
                }
                if line.starts_with('\\') {
                    close_section(n, &tables, &declared, lineno)?;
                    if line == "\\end\\" {
                        if n != declared.len() {
                            return Err(parse_err(
                                lineno,
                                format!("missing \\{}-grams: section", n + 1),
                            ));
                        }
                        state = State::End;
                        continue;
                    }
                    match section_order(line) {
                        Some(m) if m == n + 1 && m <= declared.len() => {
                            tables.push(IndexMap::with_capacity(declared[m - 1]));
                            state = State::Section(m);
                        }
                        _ => {
                            return Err(parse_err(
                                lineno,
                                format!("unexpected section header {line:?} after \\{n}-grams:"),
                            ))
                        }
                    }
                    continue;
                }
                let fields: Vec<&str> = line.split_whitespace().collect();
                let has_backoff = match fields.len() {
                    l if l == n + 1 => false,
                    l if l == n + 2 && n < declared.len() => true,
                    l => {
                        return Err(parse_err(
                            lineno,
                            format!("\\{n}-grams: expected {} or {} fields, got {l}", n + 1, n + 2),
                        ))
                    }
                };
                let prob: f64 = fields[0]
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("bad probability {:?}", fields[0])))?;
                let backoff = if has_backoff {
                    let b = fields[n + 1];
                    Some(b.parse::<f64>().map_err(|_| parse_err(lineno, format!("bad backoff {b:?}")))?)
                } else {
                    None
                };
                let key: Box<[u32]> = if n == 1 {
                    let w = fields[1];
                    if ids.contains_key(w) {
                        return Err(parse_err(lineno, format!("duplicate unigram {w:?}")));
                    }
                    let id = words.len() as u32;
                    ids.insert(w.to_string(), id);
                    words.push(w.to_string());
                    Box::new([id])
                } else {
                    fields[1..=n]
                        .iter()
                        .map(|w| {
                            ids.get(*w)
                                .copied()
                                .ok_or_else(|| parse_err(lineno, format!("word {w:?} has no unigram entry")))
                        })
                        .collect::<Result<Vec<u32>>>()?
                        .into_boxed_slice()
                };
                if n > 1 && !tables[n - 2].contains_key(&key[..n - 1]) {
                    return Err(parse_err(
                        lineno,
                        format!("history of {:?} is not a listed {}-gram", fields[1..=n].join(" "), n - 1),
                    ));
                }
                let entry = NgramEntry {
                    log10_prob: prob,
                    log10_backoff: backoff,
                };
                if tables[n - 1].insert(key, entry).is_some() {
                    return Err(parse_err(lineno, format!("duplicate {n}-gram {:?}", fields[1..=n].join(" "))));
                }
            }
            State::End => {
                if !line.is_empty() {
                    return Err(parse_err(lineno, "content after \\end\\"));
                }
            }
        }
    }
    match state {
        State::End => Ok(NGramModel::from_parts(words, tables)),
        State::Preamble => Err(parse_err(last_line, "missing \\data\\ section")),
        State::Data => Err(parse_err(last_line, "missing \\1-grams: section")),
        State::Section(n) => {
            close_section(n, &tables, &declared, last_line)?;
            Err(parse_err(last_line, "missing \\end\\ marker"))
        }
    }
}

pub(super) fn write_arpa(model: &NGramModel) -> String {
    let mut out = String::from("\\data\\\n");
    for n in 1..=model.order() {
        let _ = writeln!(out, "ngram {n}={}", model.count(n));
    }
    for (i, table) in model.tables().iter().enumerate() {
        let _ = write!(out, "\n\\{}-grams:\n", i + 1);
        for (key, e) in table {
            let words = key
                .iter()
                .map(|&id| model.words()[id as usize].as_str())
                .collect::<Vec<_>>()
                .join(" ");
            match e.log10_backoff {
                Some(b) => {
                    let _ = writeln!(out, "{}\t{words}\t{b}", e.log10_prob);
                }
                None => {
                    let _ = writeln!(out, "{}\t{words}", e.log10_prob);
                }
            }
        }
    }
    out.push_str("\n\\end\\\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const UNIGRAMS: &str = "\\data\\\nngram 1=3\n\n\\1-grams:\n-0.5\t<s>\n-0.3\tx\n-0.2\t</s>\n\n\\end\\\n";

    #[test]
    fn unigram_only() {
        let lm = parse_arpa(UNIGRAMS.as_bytes()).unwrap();
        assert_eq!(lm.order(), 1);
        assert_eq!(lm.count(1), 3);
    }

    #[test]
    fn count_mismatch_names_section() {
        let text = "\\data\\\nngram 1=2\nngram 2=5\n\n\\1-grams:\n-1\ta\t-0.1\n-1\tb\t-0.1\n\n\\2-grams:\n-0.1\ta b\n-0.1\tb a\n-0.1\ta a\n-0.1\tb b\n\n\\end\\\n";
        let err = parse_arpa(text.as_bytes()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("\\2-grams:"), "{msg}");
        assert!(msg.contains("4 entries"), "{msg}");
        assert!(matches!(err, Error::Parse { line: 15, .. }), "{err:?}");
    }

    #[test]
    fn malformed_inputs() {
        let cases = [
            ("", "missing \\data\\"),
            ("\\data\\\nngram 1=1\n", "missing \\1-grams:"),
            ("\\data\\\nngram 1=1\n\\1-grams:\n-1\ta\n", "missing \\end\\"),
            ("\\data\\\nngram 1=1\n\\1-grams:\nfoo\ta\n\\end\\\n", "bad probability"),
            ("\\data\\\nngram 1=1\n\\1-grams:\n-1\ta\tb\tc\n\\end\\\n", "expected 2 or 3 fields"),
            ("\\data\\\nngram 1=1\nngram 2=0\n\\1-grams:\n-1\ta\n\\end\\\n", "missing \\2-grams:"),
            ("\\data\\\nngram 1=1\nngram 2=1\n\\1-grams:\n-1\ta\n\\2-grams:\n-1\ta q\n\\end\\\n", "no unigram"),
            ("\\data\\\nngram 1=2\nngram 2=1\nngram 3=1\n\\1-grams:\n-1\ta\n-1\tb\n\\2-grams:\n-1\ta b\n\\3-grams:\n-1\tb a b\n\\end\\\n", "history"),
        ];
        for (text, needle) in cases {
            let err = parse_arpa(text.as_bytes()).unwrap_err().to_string();
            assert!(err.contains(needle), "{needle:?} not in {err:?}");
        }
    }

    #[test]
    fn space_separated_lines() {
        let text = "\\data\\\nngram 1=2\nngram 2=1\n\\1-grams:\n-1 a -0.2\n-1 b\n\\2-grams:\n-0.5 a b\n\\end\\\n";
        let lm = parse_arpa(text.as_bytes()).unwrap();
        assert_eq!(lm.count(2), 1);
        assert_eq!(lm.entry(&[0]).unwrap().log10_backoff, Some(-0.2));
    }

    #[test]
    fn round_trip_reparses_equal() {
        let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/tiny4.arpa")).unwrap();
        let lm = parse_arpa(text.as_bytes()).unwrap();
        let again = parse_arpa(lm.to_arpa().as_bytes()).unwrap();
        assert_eq!(lm, again);
        assert_eq!(lm.to_arpa(), again.to_arpa());
    }
}
