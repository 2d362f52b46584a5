//! CSV emission with a fixed, byte-stable layout.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Fixed six decimals. Rust's float formatting rounds the exact binary
/// value and breaks exact ties to even.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    let s = format!("{x:.6}");
    if s.strip_prefix('-')
        .is_some_and(|rest| rest.bytes().all(|b| b == b'0' || b == b'.'))
    {
        s[1..].to_string()
    } else {
        s
    }
}

pub fn dollars(cents: f64) -> String {
    num(gridstack_core::cents_to_dollars(cents))
}

#[derive(Debug, Clone)]
pub struct CsvReport {
    header: Vec<String>,
    columns: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl CsvReport {
    pub fn new(seed: u64, columns: &[&'static str]) -> Self {
        Self {
            header: vec![
                format!("# seed={seed} version={VERSION}"),
                "# numbers: 6 decimal places, round-half-even; money in USD; prices in cents/kWh".to_string(),
            ],
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    /// Records the seed list of a batch run.
    pub fn with_seeds(mut self, seeds: &[u64]) -> Self {
        let list: Vec<String> = seeds.iter().map(u64::to_string).collect();
        self.header.insert(1, format!("# seeds={}", list.join(",")));
        self
    }

    pub fn row(&mut self, cells: Vec<String>) {
        assert_eq!(cells.len(), self.columns.len(), "row width must match the header");
        self.rows.push(cells);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for line in &self.header {
            out.push_str(line);
            out.push('\n');
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, self.render())
    }
}
