use std::io::Write;
use std::path::Path;

use crate::error::CliError;

/// Text output: commented header lines followed by a body.
#[derive(Default)]
pub struct Report {
    text: String,
}

impl Report {
    pub fn new(header: &str) -> Self {
        let mut r = Self::default();
        r.text.push_str(header);
        r.text.push('\n');
        r
    }

    /// Adds `# key = value` style lines.
    pub fn comment(&mut self, line: impl AsRef<str>) {
        for l in line.as_ref().lines() {
            self.text.push_str("# ");
            self.text.push_str(l);
            self.text.push('\n');
        }
    }

    pub fn line(&mut self, line: impl AsRef<str>) {
        self.text.push_str(line.as_ref());
        self.text.push('\n');
    }

    /// Appends CSV records; `rows` yields one record per row.
    pub fn csv<R, I>(&mut self, columns: &[&str], rows: R) -> Result<(), CliError>
    where
        R: IntoIterator<Item = I>,
        I: IntoIterator<Item = String>,
    {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(columns)?;
        for row in rows {
            w.write_record(row)?;
        }
        let bytes = w.into_inner().map_err(|e| crate::error::invalid(e.to_string()))?;
        self.text.push_str(&String::from_utf8_lossy(&bytes));
        Ok(())
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn write(&self, out: Option<&Path>) -> Result<(), CliError> {
        match out {
            Some(p) => std::fs::write(p, &self.text)?,
            None => match std::io::stdout().lock().write_all(self.text.as_bytes()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
                _ => {}
            },
        }
        Ok(())
    }
}

/// Shortest round-trip form, scientific outside `[1e-5, 1e16)`.
pub fn num(x: f64) -> String {
    if x == f64::NEG_INFINITY {
        "-inf".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else {
        format!("{x:?}")
    }
}
