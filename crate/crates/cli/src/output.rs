//! Plain-text tables of a run record.
//!
//! Every table starts with a `# config_sha256=<hex>` line, then one
//! tab-separated header line naming columns with their units.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context};

pub const HASH_PREFIX: &str = "# config_sha256=";

pub struct TableWriter {
    out: BufWriter<File>,
    columns: usize,
}

impl TableWriter {
    pub fn create(path: &Path, config_hash: &str, columns: &[&str]) -> io::Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{HASH_PREFIX}{config_hash}")?;
        writeln!(out, "{}", columns.join("\t"))?;
        Ok(Self { out, columns: columns.len() })
    }

    pub fn row(&mut self, cells: &[Cell]) -> io::Result<()> {
        debug_assert_eq!(cells.len(), self.columns);
        let mut first = true;
        for c in cells {
            if !first {
                self.out.write_all(b"\t")?;
            }
            first = false;
            match c {
                Cell::F(v) => write!(self.out, "{v:e}")?,
                Cell::I(v) => write!(self.out, "{v}")?,
                Cell::U(v) => write!(self.out, "{v}")?,
                Cell::S(v) => write!(self.out, "{v}")?,
            }
        }
        self.out.write_all(b"\n")
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.out.flush()
    }
}

/// One table cell. Floats are written in shortest round-trip form.
#[derive(Debug, Clone)]
pub enum Cell {
    F(f64),
    I(i64),
    U(usize),
    S(String),
}

/// A table read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub config_hash: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
        let mut lines = BufReader::new(file).lines();
        let first = lines.next().transpose()?.unwrap_or_default();
        let Some(config_hash) = first.strip_prefix(HASH_PREFIX) else {
            bail!("{}: missing config hash line", path.display());
        };
        let header = lines
            .next()
            .transpose()?
            .with_context(|| format!("{}: missing column header", path.display()))?;
        let columns: Vec<String> = header.split('\t').map(str::to_string).collect();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            let row: Vec<String> = line.split('\t').map(str::to_string).collect();
            if row.len() != columns.len() {
                bail!("{}:{}: expected {} columns, got {}", path.display(), i + 3, columns.len(), row.len());
            }
            rows.push(row);
        }
        Ok(Self { config_hash: config_hash.to_string(), columns, rows })
    }

    pub fn column(&self, name: &str) -> anyhow::Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .with_context(|| format!("table has no column `{name}`"))
    }

    pub fn f64_at(&self, row: usize, col: usize) -> anyhow::Result<f64> {
        let s = &self.rows[row][col];
        s.parse().with_context(|| format!("not a number: `{s}`"))
    }
}

/// Spatial column names for a grid of dimension `dim`.
pub fn position_columns(dim: usize) -> &'static [&'static str] {
    &["x_m", "y_m", "z_m"][..dim]
}
