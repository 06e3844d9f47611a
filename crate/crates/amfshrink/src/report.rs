//! CSV output with a one-line `#` header carrying the schema version.

use std::io::Write;

use crate::error::Result;

pub(crate) struct CsvOut<W: Write> {
    writer: csv::Writer<W>,
}

impl<W: Write> CsvOut<W> {
    pub(crate) fn new(mut w: W, header: &str) -> Result<Self> {
        writeln!(w, "{header}").map_err(csv::Error::from)?;
        Ok(Self {
            writer: csv::WriterBuilder::new().from_writer(w),
        })
    }

    pub(crate) fn row(&mut self, fields: &[String]) -> Result<()> {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub(crate) fn finish(mut self) -> Result<()> {
        self.writer.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

pub(crate) fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}
