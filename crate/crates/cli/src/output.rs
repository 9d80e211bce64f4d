use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use bestshot_core::io::{to_line, Record};

/// Line sink writing to a file, or stdout when no path is given.
pub struct Sink {
    out: Box<dyn Write>,
}

impl Sink {
    pub fn open(path: Option<&Path>) -> anyhow::Result<Sink> {
        let out: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(
                File::create(p).with_context(|| format!("creating {}", p.display()))?,
            )),
            None => Box::new(BufWriter::new(std::io::stdout().lock())),
        };
        Ok(Sink { out })
    }

    pub fn record<R: Record>(&mut self, r: &R) -> anyhow::Result<()> {
        let line = to_line(r)?;
        writeln!(self.out, "{line}").context("writing output")
    }

    pub fn finish(mut self) -> anyhow::Result<()> {
        self.out.flush().context("writing output")
    }
}
