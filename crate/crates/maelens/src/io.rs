//! Stable file formats: headerless CSV for matrices (UTF-8, comma, LF,
//! 17-significant-digit floats), header CSV for tables, and pretty JSON for
//! structured reports.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::analysis::KernelProfile;
use crate::correlation::DataMatrix;
use crate::gabor::TaskResult;
use crate::spectrum::SpectrumTable;
use crate::trainer::MlpModel;
use crate::{Error, Result};

/// Format a float with 17 significant digits (round-trip exact for `f64`).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write a matrix as headerless CSV, one row per line.
pub fn write_matrix_csv<P: AsRef<Path>>(path: P, m: &DMatrix<f64>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        w.write_all(line.join(",").as_bytes())?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Read a headerless CSV matrix; all rows must have equal length.
pub fn read_matrix_csv<P: AsRef<Path>>(path: P) -> Result<DMatrix<f64>> {
    let reader = BufReader::new(File::open(&path)?);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|cell| {
                cell.trim().parse::<f64>().map_err(|e| {
                    Error::Parse(format!(
                        "{}:{}: bad float {cell:?}: {e}",
                        path.as_ref().display(),
                        lineno + 1
                    ))
                })
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse(format!(
                    "{}:{}: ragged row ({} cells, expected {})",
                    path.as_ref().display(),
                    lineno + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse(format!(
            "{}: no data rows",
            path.as_ref().display()
        )));
    }
    let (n, d) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(n, d, |r, c| rows[r][c]))
}

/// Write a data matrix (same format as [`write_matrix_csv`]).
pub fn write_data_csv<P: AsRef<Path>>(path: P, x: &DataMatrix) -> Result<()> {
    write_matrix_csv(path, x.values())
}

/// Read a data matrix back (layout tags are not stored in CSV).
pub fn read_data_csv<P: AsRef<Path>>(path: P) -> Result<DataMatrix> {
    DataMatrix::new(read_matrix_csv(path)?)
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<P: AsRef<Path>, T: Serialize>(path: P, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<P: AsRef<Path>, T: DeserializeOwned>(path: P) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

/// Files making up a serialized MLP checkpoint: eight weight/bias CSVs plus
/// a JSON descriptor.
#[derive(Debug, Clone, Serialize, serde::Deserialize)]
pub struct MlpCheckpointMeta {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub latent_dim: usize,
    pub files: Vec<String>,
}

/// Write an MLP checkpoint as `<prefix>.{w1..w4,b1..b4}.csv` plus
/// `<prefix>.checkpoint.json`.
pub fn write_mlp_checkpoint(prefix: &str, model: &MlpModel) -> Result<MlpCheckpointMeta> {
    let mut files = Vec::new();
    let parts: [(&str, DMatrix<f64>); 8] = [
        ("w1", model.w1.clone()),
        ("b1", DMatrix::from_column_slice(1, model.b1.len(), model.b1.as_slice())),
        ("w2", model.w2.clone()),
        ("b2", DMatrix::from_column_slice(1, model.b2.len(), model.b2.as_slice())),
        ("w3", model.w3.clone()),
        ("b3", DMatrix::from_column_slice(1, model.b3.len(), model.b3.as_slice())),
        ("w4", model.w4.clone()),
        ("b4", DMatrix::from_column_slice(1, model.b4.len(), model.b4.as_slice())),
    ];
    for (name, matrix) in &parts {
        let path = format!("{prefix}.{name}.csv");
        write_matrix_csv(&path, matrix)?;
        files.push(path);
    }
    let meta = MlpCheckpointMeta {
        input_dim: model.input_dim(),
        hidden_dim: model.hidden_dim(),
        latent_dim: model.latent_dim(),
        files,
    };
    write_json(format!("{prefix}.checkpoint.json"), &meta)?;
    Ok(meta)
}

/// Load an MLP checkpoint written by [`write_mlp_checkpoint`].
pub fn read_mlp_checkpoint(prefix: &str) -> Result<MlpModel> {
    let meta: MlpCheckpointMeta = read_json(format!("{prefix}.checkpoint.json"))?;
    let load = |name: &str| read_matrix_csv(format!("{prefix}.{name}.csv"));
    let row_vec = |m: DMatrix<f64>| {
        nalgebra::DVector::from_column_slice(m.row(0).transpose().as_slice())
    };
    let model = MlpModel {
        w1: load("w1")?,
        b1: row_vec(load("b1")?),
        w2: load("w2")?,
        b2: row_vec(load("b2")?),
        w3: load("w3")?,
        b3: row_vec(load("b3")?),
        w4: load("w4")?,
        b4: row_vec(load("b4")?),
    };
    if model.input_dim() != meta.input_dim
        || model.hidden_dim() != meta.hidden_dim
        || model.latent_dim() != meta.latent_dim
    {
        return Err(Error::Parse(format!(
            "checkpoint {prefix} dimensions do not match its descriptor"
        )));
    }
    Ok(model)
}

/// `k,magnitude` table of a spectrum.
pub fn write_spectrum_csv<P: AsRef<Path>>(path: P, table: &SpectrumTable) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(b"k,magnitude\n")?;
    for (k, mag) in table.magnitude.iter().enumerate() {
        writeln!(w, "{k},{}", fmt_f64(*mag))?;
    }
    w.flush()?;
    Ok(())
}

/// `distance,mean_abs` table of a kernel profile.
pub fn write_profile_csv<P: AsRef<Path>>(path: P, profile: &KernelProfile) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(b"distance,mean_abs\n")?;
    for (r, v) in profile.distances.iter().zip(&profile.mean_abs) {
        writeln!(w, "{},{}", fmt_f64(*r), fmt_f64(*v))?;
    }
    w.flush()?;
    Ok(())
}

/// `m,p,sigma,f,train_mse,test_mse` table of a task sweep.
pub fn write_task_csv<P: AsRef<Path>>(path: P, result: &TaskResult) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(b"m,p,sigma,f,train_mse,test_mse\n")?;
    for row in &result.rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt_f64(row.m),
            row.p,
            fmt_f64(row.sigma),
            fmt_f64(row.f),
            fmt_f64(row.train_mse),
            fmt_f64(row.test_mse)
        )?;
    }
    w.flush()?;
    Ok(())
}
