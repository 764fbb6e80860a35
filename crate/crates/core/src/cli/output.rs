//! CSV files with `# key=value` metadata lines ahead of the header, and the
//! optional gnuplot scripts.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub struct CsvSink {
    inner: csv::Writer<BufWriter<File>>,
}

impl CsvSink {
    /// Creates `path`, writes the metadata lines and the header.
    pub fn create(path: &Path, metadata: &[(String, String)], header: &[&str]) -> Result<Self> {
        let mut file = BufWriter::new(File::create(path)?);
        for (k, v) in metadata {
            writeln!(file, "# {k}={v}")?;
        }
        let mut inner = csv::Writer::from_writer(file);
        inner.write_record(header).map_err(csv_error)?;
        Ok(Self { inner })
    }

    /// Appends a row and flushes, so that completed rows survive a later failure.
    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.inner.write_record(fields).map_err(csv_error)?;
        self.inner.flush()?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// `profile.csv` against `e^{-x}` on log-log axes.
pub const PROFILE_GNUPLOT: &str = "\
set datafile separator ','
set key autotitle columnhead
set logscale xy
set xlabel 'x'
set ylabel 'Pi(x)'
plot 'profile.csv' using 1:2 with lines title 'Pi', exp(-x) with lines dashtype 2 title 'exp(-x)'
";

/// Distances to `e^{-x}` against `ε` on log-log axes.
pub const SWEEP_GNUPLOT: &str = "\
set datafile separator ','
set key autotitle columnhead
set logscale xy
set xlabel 'epsilon'
plot 'sweep.csv' using 1:2 with linespoints title 'norm_ab', \\
     'sweep.csv' using 1:3 with linespoints title 'norm_01', \\
     'sweep.csv' using 1:(abs($4)) with linespoints title '|kappa|'
";

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}
