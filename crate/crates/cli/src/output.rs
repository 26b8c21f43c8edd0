//! CSV and manifest emission: stable schemas, 17-significant-digit floats,
//! and a JSON manifest that pins everything a rerun needs.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use spinqsd::Error;

/// 17 significant digits; round-trips any f64 exactly.
pub fn fmt_g(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct CsvWriter {
    path: PathBuf,
    out: BufWriter<fs::File>,
}

impl CsvWriter {
    pub fn create(dir: &Path, name: &str) -> Result<Self, Error> {
        fs::create_dir_all(dir).map_err(io_err)?;
        let path = dir.join(name);
        let out = BufWriter::new(fs::File::create(&path).map_err(io_err)?);
        Ok(CsvWriter { path, out })
    }

    pub fn header(&mut self, header: &str) -> Result<(), Error> {
        writeln!(self.out, "{header}").map_err(io_err)
    }

    pub fn row(&mut self, fields: &[String]) -> Result<(), Error> {
        writeln!(self.out, "{}", fields.join(",")).map_err(io_err)
    }

    pub fn finish(mut self) -> Result<PathBuf, Error> {
        self.out.flush().map_err(io_err)?;
        Ok(self.path)
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::InvalidParams(format!("io: {e}"))
}

/// Everything needed to reproduce a run bit-exactly: command, arguments,
/// seed, and the code version. Written as manifest.json next to the data.
#[derive(Serialize)]
pub struct Manifest {
    version: String,
    command: String,
    seed: u64,
    threads: usize,
    args: Vec<(String, String)>,
    outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, threads: usize) -> Self {
        Manifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            threads,
            args: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn arg(mut self, key: &str, value: String) -> Self {
        self.args.push((key.to_string(), value));
        self
    }

    pub fn output(mut self, path: &Path) -> Self {
        self.outputs.push(
            path.file_name()
                .unwrap_or_default()
                .to_string_lossy()
                .into_owned(),
        );
        self
    }

    pub fn write(&self, dir: &Path) -> Result<(), Error> {
        fs::create_dir_all(dir).map_err(io_err)?;
        let body = serde_json::to_string_pretty(self)
            .map_err(|e| Error::InvalidParams(format!("manifest: {e}")))?;
        fs::write(dir.join("manifest.json"), body).map_err(io_err)
    }
}
