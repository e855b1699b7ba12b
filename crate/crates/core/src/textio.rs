//! Plain-text output helpers shared by CSV and JSON writers.

use std::io::{self, Write};

/// Decimal scientific notation with 17 significant digits; non-finite values
/// print as `nan`, `inf`, `-inf`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// A rectangular table of numbers with a header row.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Trailing `# key=value` comment lines.
    pub metadata: Vec<(String, String)>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            ..Default::default()
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", self.header.join(","))?;
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|v| fmt_num(*v)).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        for (k, v) in &self.metadata {
            writeln!(w, "# {k}={v}")?;
        }
        Ok(())
    }

    pub fn to_string_lossy(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ascii output")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_num(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_num(-2.5), "-2.5000000000000000e0");
        let back: f64 = fmt_num(std::f64::consts::PI).parse().unwrap();
        assert_eq!(back, std::f64::consts::PI);
    }

    #[test]
    fn csv_layout() {
        let mut t = CsvTable::new(["t", "z"]);
        t.push(vec![0.0, 1.0]);
        t.metadata.push(("absorbed_at".into(), fmt_num(0.5)));
        let s = t.to_string_lossy();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "t,z");
        assert_eq!(lines[1], "0.0000000000000000e0,1.0000000000000000e0");
        assert_eq!(lines[2], "# absorbed_at=5.0000000000000000e-1");
    }
}
