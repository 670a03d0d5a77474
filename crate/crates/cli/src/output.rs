use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use quetron_core::liouvillian::write_matrix_csv;

use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) if x.is_nan() => "nan".into(),
            Cell::Num(x) => format!("{x:.16e}"),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

/// Writes outputs into one directory, stamping each CSV with the config
/// hash and tool version.
pub struct OutputDir {
    root: PathBuf,
    stamp: String,
}

impl OutputDir {
    pub fn create(root: &Path, config_hash: &str) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            stamp: format!("# quetron {VERSION} config-sha256={config_hash}"),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    pub fn write_table(&self, name: &str, columns: &[&str], rows: &[Vec<Cell>]) -> Result<PathBuf, CliError> {
        let mut s = String::new();
        s.push_str(&self.stamp);
        s.push('\n');
        s.push_str(&columns.join(","));
        s.push('\n');
        for row in rows {
            let line: Vec<String> = row.iter().map(Cell::render).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        self.write_text(name, &s)
    }

    pub fn write_matrix(&self, name: &str, m: &DMatrix<f64>) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        let mut buf = Vec::new();
        writeln!(buf, "{}", self.stamp).expect("write to memory");
        write_matrix_csv(&mut buf, m).expect("write to memory");
        fs::write(&path, buf).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}
