use std::io::Write;
use std::path::Path;

use avckit::Dist;

use crate::Failure;

/// Two-column `key  value` listing.
#[derive(Default)]
pub struct Table {
    rows: Vec<(String, String)>,
}

impl Table {
    pub fn row(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.rows.push((key.to_string(), value.to_string()));
        self
    }

    pub fn print(&self) {
        let width = self.rows.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
        let mut out = std::io::stdout().lock();
        for (k, v) in &self.rows {
            let pad = width - k.chars().count();
            let _ = writeln!(out, "{k}{}  {v}", " ".repeat(pad));
        }
    }
}

pub fn fixed(v: f64) -> String {
    format!("{v:.10}")
}

pub fn dist(p: &Dist) -> String {
    let parts: Vec<String> = p.probs().iter().map(|v| format!("{v:.6}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Full-precision probabilities separated by `;` for CSV cells.
pub fn dist_cell(p: &Dist) -> String {
    p.probs().iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";")
}

/// Writes `header` and `rows` as CSV to `path`, or to stdout for `-`.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), Failure> {
    let sink: Box<dyn Write> = if path.as_os_str() == "-" {
        Box::new(std::io::stdout().lock())
    } else {
        Box::new(std::fs::File::create(path).map_err(|e| Failure {
            code: 2,
            message: format!("{}: {e}", path.display()),
        })?)
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}
