//! Line-delimited JSON or CSV with a fixed column order per subcommand.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::config::OutputFormat;
use crate::Failure;

pub struct Emitter {
    w: Box<dyn Write>,
    pub format: OutputFormat,
}

impl Emitter {
    pub fn open(path: Option<&Path>, format: OutputFormat) -> Result<Self, Failure> {
        let w: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
                Failure::Config(format!("cannot create {}: {e}", p.display()))
            })?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        };
        Ok(Self { w, format })
    }

    pub fn json<T: Serialize>(&mut self, value: &T) -> Result<(), Failure> {
        let line = serde_json::to_string(value)
            .map_err(|e| Failure::Config(format!("serialization failed: {e}")))?;
        writeln!(self.w, "{line}")?;
        Ok(())
    }

    pub fn csv_row<S: AsRef<str>>(&mut self, cells: &[S]) -> Result<(), Failure> {
        let row: Vec<String> = cells.iter().map(|c| csv_escape(c.as_ref())).collect();
        writeln!(self.w, "{}", row.join(","))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), Failure> {
        self.w.flush()?;
        Ok(())
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::csv_escape;

    #[test]
    fn escapes_only_when_needed() {
        assert_eq!(csv_escape("1.5"), "1.5");
        assert_eq!(csv_escape("a,b"), "\"a,b\"");
        assert_eq!(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
    }
}
