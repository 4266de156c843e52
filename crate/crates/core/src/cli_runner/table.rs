use std::fmt::Write as _;
use std::path::Path;

use crate::error::{DeitError, Result};

/// A CSV table of preformatted cells.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k].as_str()).collect())
    }

    /// CSV text with `# ` comment lines on top.
    pub fn render(&self, header: &[String]) -> String {
        let mut out = String::new();
        for h in header {
            let _ = writeln!(out, "{h}");
        }
        let _ = writeln!(out, "{}", self.columns.join(","));
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.join(","));
        }
        out
    }

    pub fn write(&self, path: &Path, header: &[String]) -> Result<()> {
        std::fs::write(path, self.render(header))
            .map_err(|e| DeitError::Config(format!("cannot write {}: {e}", path.display())))
    }
}

/// Fixed scientific notation so repeated runs give identical bytes.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.9e}")
    } else {
        "nan".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_header_then_rows() {
        let mut t = Table::new(["a", "b"]);
        t.rows.push(vec![num(1.5), num(f64::NAN)]);
        assert_eq!(
            t.render(&["# x = 1".into()]),
            "# x = 1\na,b\n1.500000000e0,nan\n"
        );
        assert_eq!(t.column("b").unwrap(), vec!["nan"]);
    }
}
