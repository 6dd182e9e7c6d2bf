//! CSV emission with a `#`-prefixed metadata preamble.

use std::fmt::Write as _;

/// Accumulates a CSV document. Numbers use the shortest round-trip form so
/// reruns with the same inputs are byte-identical. Metadata lines must come
/// before the header.
#[derive(Debug)]
pub struct CsvDoc {
    preamble: String,
    body: csv::Writer<Vec<u8>>,
}

impl CsvDoc {
    pub fn new(command: &str, system: &str, hash: &str) -> Self {
        let mut doc = CsvDoc {
            preamble: String::new(),
            body: csv::Writer::from_writer(Vec::new()),
        };
        doc.meta("affmf", env!("CARGO_PKG_VERSION"));
        doc.meta("command", command);
        doc.meta("system", system);
        doc.meta("config_hash", hash);
        doc.meta("logarithms", "natural");
        doc
    }

    pub fn meta(&mut self, key: &str, value: impl std::fmt::Display) {
        writeln!(self.preamble, "# {key}: {value}").expect("string write");
    }

    pub fn header(&mut self, columns: &[&str]) {
        self.body.write_record(columns).expect("in-memory write");
    }

    pub fn row(&mut self, fields: &[String]) {
        self.body.write_record(fields).expect("in-memory write");
    }

    pub fn finish(self) -> String {
        let body = self.body.into_inner().expect("in-memory flush");
        self.preamble + &String::from_utf8(body).expect("fields are UTF-8")
    }
}

pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Joins a list of values for a preamble line.
pub fn list<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preamble_then_rows() {
        let mut doc = CsvDoc::new("pressure", "d2", "abc");
        doc.meta("seed", 3);
        doc.header(&["n", "P_n"]);
        doc.row(&[4.to_string(), num(0.1)]);
        let text = doc.finish();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[..lines.len() - 2].iter().all(|l| l.starts_with("# ")));
        assert_eq!(lines[lines.len() - 2], "n,P_n");
        assert_eq!(lines[lines.len() - 1], "4,0.1");
        let mut doc = CsvDoc::new("spectrum", "d2", "abc");
        doc.row(&["(0,1)".into(), "a\"b".into()]);
        assert_eq!(doc.finish().lines().last().unwrap(), "\"(0,1)\",\"a\"\"b\"");
        assert_eq!(opt(None), "");
        assert_eq!(list(&[1, 2]), "1 2");
    }
}
