//! Rendering of command results as JSON, CSV or an aligned table.

use idealcast::io::format_number;
use idealcast::DiscreteDistribution;

/// A JSON-like document whose numbers are written with 17 significant digits.
#[derive(Debug, Clone, PartialEq)]
pub enum Doc {
    Null,
    Bool(bool),
    Int(usize),
    /// Non-finite values are written as the strings `"inf"` / `"-inf"`.
    Num(f64),
    Str(String),
    Arr(Vec<Doc>),
    Obj(Vec<(String, Doc)>),
}

impl Doc {
    pub fn obj<K: Into<String>>(fields: impl IntoIterator<Item = (K, Doc)>) -> Doc {
        Doc::Obj(fields.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn opt(v: Option<f64>) -> Doc {
        v.map_or(Doc::Null, Doc::Num)
    }

    pub fn distribution(dist: &DiscreteDistribution) -> Doc {
        Doc::obj([(
            "atoms",
            Doc::Arr(
                dist.atoms()
                    .map(|(x, p)| Doc::obj([("x", Doc::Num(x)), ("p", Doc::Num(p))]))
                    .collect(),
            ),
        )])
    }

    pub fn to_json(&self) -> String {
        let mut out = String::new();
        self.write_json(&mut out);
        out
    }

    fn write_json(&self, out: &mut String) {
        match self {
            Doc::Null => out.push_str("null"),
            Doc::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Doc::Int(n) => out.push_str(&n.to_string()),
            Doc::Num(x) if x.is_finite() => out.push_str(&format_number(*x)),
            Doc::Num(x) => write_string(out, &format_number(*x)),
            Doc::Str(s) => write_string(out, s),
            Doc::Arr(items) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    item.write_json(out);
                }
                out.push(']');
            }
            Doc::Obj(fields) => {
                out.push('{');
                for (i, (k, v)) in fields.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_string(out, k);
                    out.push_str(": ");
                    v.write_json(out);
                }
                out.push('}');
            }
        }
    }

    /// Text of a scalar as it appears in a CSV or table cell.
    pub fn cell(&self) -> String {
        match self {
            Doc::Null => String::new(),
            Doc::Bool(b) => b.to_string(),
            Doc::Int(n) => n.to_string(),
            Doc::Num(x) => format_number(*x),
            Doc::Str(s) => s.clone(),
            other => other.to_json(),
        }
    }
}

fn write_string(out: &mut String, s: &str) {
    out.push_str(&serde_json::to_string(s).expect("strings always serialize"));
}

/// Rows with a header, rendered as CSV or as an aligned table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(headers: impl IntoIterator<Item = S>) -> Self {
        Self {
            headers: headers.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Doc>) {
        self.rows.push(row.iter().map(Doc::cell).collect());
    }

    /// One header row and one value row from a flat object.
    pub fn from_flat(doc: &Doc) -> Self {
        let Doc::Obj(fields) = doc else {
            let mut t = Table::new(["value"]);
            t.push(vec![doc.clone()]);
            return t;
        };
        let mut t = Table::new(fields.iter().map(|(k, _)| k.clone()));
        t.push(fields.iter().map(|(_, v)| v.clone()).collect());
        t
    }

    pub fn to_csv(&self) -> String {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        writer.write_record(&self.headers).expect("in-memory write");
        for row in &self.rows {
            writer.write_record(row).expect("in-memory write");
        }
        let bytes = writer.into_inner().expect("in-memory flush");
        let mut text = String::from_utf8(bytes).expect("utf-8 input");
        if text.ends_with('\n') {
            text.pop();
        }
        text
    }

    pub fn to_aligned(&self) -> String {
        let mut widths: Vec<usize> = self.headers.iter().map(|h| h.len()).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let line = |cells: &[String]| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect::<Vec<_>>()
                .join("  ")
        };
        let mut out = vec![line(&self.headers)];
        out.extend(self.rows.iter().map(|r| line(r)));
        out.join("\n")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

/// A command result in both of its shapes.
pub struct Output {
    pub doc: Doc,
    pub table: Table,
}

impl Output {
    pub fn flat(doc: Doc) -> Self {
        let table = Table::from_flat(&doc);
        Self { doc, table }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.doc.to_json(),
            Format::Csv => self.table.to_csv(),
            Format::Table => self.table.to_aligned(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_object_as_json_and_csv() {
        let out = Output::flat(Doc::obj([("lower", Doc::Num(3.0)), ("upper", Doc::Num(3.0))]));
        assert_eq!(out.render(Format::Json), r#"{"lower": 3, "upper": 3}"#);
        assert_eq!(out.render(Format::Csv), "lower,upper\n3,3");
    }

    #[test]
    fn infinity_is_a_string() {
        let doc = Doc::obj([("mean", Doc::Num(f64::INFINITY))]);
        assert_eq!(doc.to_json(), r#"{"mean": "inf"}"#);
        assert_eq!(Table::from_flat(&doc).to_csv(), "mean\ninf");
    }

    #[test]
    fn nested_and_escaped() {
        let doc = Doc::obj([
            ("name", Doc::Str("a \"b\"".into())),
            ("items", Doc::Arr(vec![Doc::Int(1), Doc::Null, Doc::Bool(true)])),
            ("x", Doc::Num(0.1)),
        ]);
        assert_eq!(
            doc.to_json(),
            r#"{"name": "a \"b\"", "items": [1, null, true], "x": 0.10000000000000001}"#
        );
    }

    #[test]
    fn aligned_table() {
        let mut t = Table::new(["index", "score"]);
        t.push(vec![Doc::Int(0), Doc::Num(12.5)]);
        assert_eq!(t.to_aligned(), "index  score\n    0   12.5");
    }
}
