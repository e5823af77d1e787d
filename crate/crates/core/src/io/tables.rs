//! CSV tables: labels, predictions, pseudo-labels, plus the plain edge list.
//!
//! ```text
//! labels:       id,label            (optional "# classes=C" comment line)
//! predictions:  id,label,score_0,...,score_{C-1}
//! pseudo:       id,label,weight
//! edge list:    i j w               (one undirected edge per line, i < j)
//! ```

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use super::{read_text, write_atomic};
use crate::certainty::{harden_labels, PseudoLabel, PseudoLabelSet};
use crate::data::LabelSet;
use crate::diffusion::ScoreMatrix;
use crate::error::{Error, LabelIssue, Result};
use crate::graph::Graph;

/// Round to 10 significant digits, then print the shortest form that reads
/// back to that rounded value.
pub fn format_real(v: f64) -> String {
    let rounded: f64 = format!("{v:.9e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

fn line_err(line: usize, issue: LabelIssue) -> Error {
    Error::Labels {
        line: Some(line),
        issue,
    }
}

/// Data lines as `(1-based line number, fields)`, with the header checked
/// and comment lines handed to `on_comment`.
fn data_lines<'a>(
    text: &'a str,
    header: &[&str],
    mut on_comment: impl FnMut(usize, &str) -> Result<()>,
) -> Result<Vec<(usize, Vec<&'a str>)>> {
    let mut rows = Vec::new();
    let mut seen_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            on_comment(line_no, comment.trim())?;
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if !seen_header {
            let ok = fields.len() >= header.len() && fields.iter().zip(header).all(|(f, h)| f == h);
            if !ok {
                return Err(Error::Parse {
                    line: line_no,
                    reason: format!("expected header starting with {:?}", header.join(",")),
                });
            }
            seen_header = true;
            rows.push((line_no, fields));
            continue;
        }
        rows.push((line_no, fields));
    }
    if !seen_header {
        return Err(Error::Parse {
            line: 1,
            reason: format!("missing header {:?}", header.join(",")),
        });
    }
    // first entry is the header itself
    Ok(rows.split_off(1))
}

/// Parse a labels table over `n` nodes.
pub fn parse_labels(text: &str, n: usize) -> Result<LabelSet> {
    let mut classes: Option<usize> = None;
    let rows = data_lines(text, &["id", "label"], |line, comment| {
        if let Some(v) = comment.strip_prefix("classes=") {
            let c = v.trim().parse::<usize>().map_err(|_| {
                line_err(line, LabelIssue::Malformed(format!("bad class count {v:?}")))
            })?;
            classes = Some(c);
        }
        Ok(())
    })?;
    let mut seen = HashSet::new();
    let mut labeled = Vec::with_capacity(rows.len());
    for (line, fields) in rows {
        if fields.len() != 2 {
            return Err(line_err(line, LabelIssue::Malformed(format!("expected 2 fields, got {}", fields.len()))));
        }
        let id: usize = fields[0]
            .parse()
            .map_err(|_| line_err(line, LabelIssue::Malformed(format!("bad id {:?}", fields[0]))))?;
        let class: i64 = fields[1]
            .parse()
            .map_err(|_| line_err(line, LabelIssue::Malformed(format!("bad label {:?}", fields[1]))))?;
        if class < 0 {
            return Err(line_err(line, LabelIssue::NegativeClass(class)));
        }
        let class = class as usize;
        if id >= n {
            return Err(line_err(line, LabelIssue::IdOutOfRange { id, n }));
        }
        if let Some(c) = classes {
            if class >= c {
                return Err(line_err(line, LabelIssue::ClassOutOfRange { class, classes: c }));
            }
        }
        if !seen.insert(id) {
            return Err(line_err(line, LabelIssue::DuplicateId(id)));
        }
        labeled.push((id, class));
    }
    LabelSet::new(n, classes, labeled)
}

pub fn read_labels(path: impl AsRef<Path>, n: usize) -> Result<LabelSet> {
    parse_labels(&read_text(path.as_ref())?, n)
}

pub fn write_labels(labels: &LabelSet, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::from("id,label\n");
    let _ = writeln!(out, "# classes={}", labels.classes());
    for &(id, c) in labels.labeled() {
        let _ = writeln!(out, "{id},{c}");
    }
    write_atomic(path.as_ref(), out.as_bytes())
}

/// Hard label and scores for every node, ordered by id.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionTable {
    pub labels: Vec<usize>,
    pub scores: ScoreMatrix,
}

impl PredictionTable {
    pub fn from_scores(scores: ScoreMatrix) -> Self {
        Self {
            labels: harden_labels(&scores),
            scores,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,label");
        for c in 0..self.scores.classes() {
            let _ = write!(out, ",score_{c}");
        }
        out.push('\n');
        for (id, label) in self.labels.iter().enumerate() {
            let _ = write!(out, "{id},{label}");
            for &v in self.scores.row(id) {
                let _ = write!(out, ",{}", format_real(v));
            }
            out.push('\n');
        }
        out
    }
}

pub fn write_predictions(t: &PredictionTable, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), t.to_csv().as_bytes())
}

pub fn parse_predictions(text: &str) -> Result<PredictionTable> {
    let header_line = text
        .lines()
        .find(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .unwrap_or("");
    let classes = header_line.split(',').filter(|f| f.trim().starts_with("score_")).count();
    let rows = data_lines(text, &["id", "label"], |_, _| Ok(()))?;
    let mut labels = Vec::with_capacity(rows.len());
    let mut data = Vec::with_capacity(rows.len() * classes);
    for (expected_id, (line, fields)) in rows.into_iter().enumerate() {
        let bad = |reason: String| Error::Parse { line, reason };
        if fields.len() != 2 + classes {
            return Err(bad(format!("expected {} fields, got {}", 2 + classes, fields.len())));
        }
        let id: usize = fields[0].parse().map_err(|_| bad(format!("bad id {:?}", fields[0])))?;
        if id != expected_id {
            return Err(bad(format!("rows must be ordered by id: expected {expected_id}, got {id}")));
        }
        labels.push(fields[1].parse().map_err(|_| bad(format!("bad label {:?}", fields[1])))?);
        for f in &fields[2..] {
            data.push(f.parse::<f64>().map_err(|_| bad(format!("bad score {f:?}")))?);
        }
    }
    let scores = ScoreMatrix::new(labels.len(), classes, data)?;
    Ok(PredictionTable { labels, scores })
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<PredictionTable> {
    parse_predictions(&read_text(path.as_ref())?)
}

pub fn pseudo_labels_csv(p: &PseudoLabelSet) -> String {
    let mut out = String::from("id,label,weight\n");
    for e in &p.entries {
        let _ = writeln!(out, "{},{},{}", e.id, e.label, format_real(e.weight));
    }
    out
}

pub fn write_pseudo_labels(p: &PseudoLabelSet, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), pseudo_labels_csv(p).as_bytes())
}

pub fn parse_pseudo_labels(text: &str, classes: usize) -> Result<PseudoLabelSet> {
    let rows = data_lines(text, &["id", "label", "weight"], |_, _| Ok(()))?;
    let mut entries = Vec::with_capacity(rows.len());
    for (line, fields) in rows {
        let bad = |reason: String| Error::Parse { line, reason };
        if fields.len() != 3 {
            return Err(bad(format!("expected 3 fields, got {}", fields.len())));
        }
        let id = fields[0].parse().map_err(|_| bad(format!("bad id {:?}", fields[0])))?;
        let label: usize = fields[1].parse().map_err(|_| bad(format!("bad label {:?}", fields[1])))?;
        let weight: f64 = fields[2].parse().map_err(|_| bad(format!("bad weight {:?}", fields[2])))?;
        if label >= classes || !(0.0..=1.0).contains(&weight) {
            return Err(bad(format!("label {label} or weight {weight} out of range")));
        }
        entries.push(PseudoLabel { id, label, weight });
    }
    Ok(PseudoLabelSet { classes, entries })
}

pub fn read_pseudo_labels(path: impl AsRef<Path>, classes: usize) -> Result<PseudoLabelSet> {
    parse_pseudo_labels(&read_text(path.as_ref())?, classes)
}

pub fn edge_list(g: &Graph) -> String {
    let mut out = String::new();
    for (i, j, w) in g.edges() {
        let _ = writeln!(out, "{i} {j} {w}");
    }
    out
}

pub fn write_edge_list(g: &Graph, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), edge_list(g).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_basic() {
        let l = parse_labels("id,label\n0,0\n5,1", 10).unwrap();
        assert_eq!(l.labeled(), &[(0, 0), (5, 1)]);
        assert_eq!(l.classes(), 2);
    }

    #[test]
    fn labels_class_comment() {
        let l = parse_labels("id,label\n# classes=4\n0,0\n1,1\n", 3).unwrap();
        assert_eq!(l.classes(), 4);
        let err = parse_labels("# classes=2\nid,label\n0,0\n1,2\n", 3).unwrap_err();
        assert!(matches!(
            err,
            Error::Labels {
                line: Some(4),
                issue: LabelIssue::ClassOutOfRange { class: 2, classes: 2 }
            }
        ));
    }

    #[test]
    fn labels_errors_name_line() {
        let dup = parse_labels("id,label\n0,0\n0,1", 5).unwrap_err();
        assert!(matches!(
            dup,
            Error::Labels {
                line: Some(3),
                issue: LabelIssue::DuplicateId(0)
            }
        ));
        let neg = parse_labels("id,label\n3,-1", 5).unwrap_err();
        assert!(matches!(
            neg,
            Error::Labels {
                line: Some(2),
                issue: LabelIssue::NegativeClass(-1)
            }
        ));
        let oob = parse_labels("id,label\n0,0\n7,1", 5).unwrap_err();
        assert!(matches!(
            oob,
            Error::Labels {
                line: Some(3),
                issue: LabelIssue::IdOutOfRange { id: 7, n: 5 }
            }
        ));
        assert!(matches!(parse_labels("idx,lab\n0,0", 5), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn predictions_csv_layout() {
        let t = PredictionTable::from_scores(ScoreMatrix::from_rows(&[[0.7, 0.3]]).unwrap());
        assert_eq!(t.to_csv(), "id,label,score_0,score_1\n0,0,0.7,0.3\n");
        let empty = PredictionTable::from_scores(ScoreMatrix::zeros(0, 2));
        assert_eq!(empty.to_csv(), "id,label,score_0,score_1\n");
        let tie = PredictionTable::from_scores(ScoreMatrix::from_rows(&[[0.5, 0.5]]).unwrap());
        assert_eq!(tie.labels, vec![0]);
    }

    #[test]
    fn ten_significant_digits() {
        assert_eq!(format_real(1.0 / 3.0), "0.3333333333");
        assert_eq!(format_real(123456789012.0), "123456789000");
        assert_eq!(format_real(1234567890123.0), "1234567890000");
        assert_eq!(format_real(2.0e-12), "0.000000000002");
    }

    #[test]
    fn pseudo_round_trip() {
        let p = PseudoLabelSet {
            classes: 3,
            entries: vec![
                PseudoLabel { id: 2, label: 1, weight: 0.25 },
                PseudoLabel { id: 4, label: 2, weight: 1.0 },
            ],
        };
        assert_eq!(parse_pseudo_labels(&pseudo_labels_csv(&p), 3).unwrap(), p);
    }

    #[test]
    fn edge_list_once_per_edge() {
        let g = Graph::from_edges(3, [(0, 1, 1.0), (2, 1, 0.5)]).unwrap();
        assert_eq!(edge_list(&g), "0 1 1\n1 2 0.5\n");
    }
}
