//! Plain CSV tables with `#` comment lines echoing the producing configuration.

use std::io::Write;

use crate::error::Result;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Shortest decimal that round-trips the `f64`, in exponent form.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table { comments: Vec::new(), header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn comment(mut self, line: impl Into<String>) -> Self {
        self.comments.push(line.into());
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for c in &self.comments {
            writeln!(out, "# {c}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_comments_header_and_rows() {
        let mut t = Table::new(["h", "defect"]).comment("kernel=StandardL2");
        t.push(vec![fmt_f64(0.125), fmt_f64(0.0)]);
        let s = t.to_csv_string().unwrap();
        assert_eq!(s, "# kernel=StandardL2\nh,defect\n1.25e-1,0e0\n");
        for v in [0.1, 1.0 / 3.0, 8.944271909999159e-1, 1e-300, -2.5e17] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }
}
