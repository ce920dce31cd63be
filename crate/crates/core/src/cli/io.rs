//! CSV file formats, atomic writes and file digests.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use crate::cli::config::DataMode;
use crate::error::{MnpError, Result};
use crate::experiments::design_from_prices;
use crate::model::MnpData;
use crate::samplers::ChainOutput;

/// Formats a number with 17 significant digits, enough to read back the
/// identical `f64`.
pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `bytes` to `path` through a temporary file in the same
/// directory, renamed into place once complete.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| MnpError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| MnpError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| MnpError::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| MnpError::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| MnpError::io(path, e.error))?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| MnpError::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

fn data_err(line: usize, message: impl Into<String>) -> MnpError {
    MnpError::Data {
        line,
        message: message.into(),
    }
}

fn csv_reader(bytes: &[u8]) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes)
}

fn record_line(record: &csv::StringRecord, fallback: usize) -> usize {
    record.position().map_or(fallback, |p| p.line() as usize)
}

fn csv_err(e: csv::Error) -> MnpError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    data_err(line, e.to_string())
}

fn parse_cell(record: &csv::StringRecord, idx: usize, line: usize, column: &str) -> Result<f64> {
    let cell = record.get(idx).unwrap_or("");
    cell.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| data_err(line, format!("column `{column}`: `{cell}` is not a finite number")))
}

fn parse_choice(record: &csv::StringRecord, line: usize) -> Result<usize> {
    let cell = record.get(0).unwrap_or("");
    cell.parse::<usize>()
        .map_err(|_| data_err(line, format!("choice `{cell}` is not a non-negative integer")))
}

/// Column names of the wide layout for `p` rows and `q` columns.
pub fn wide_header(p: usize, q: usize) -> Vec<String> {
    let mut h = vec!["choice".to_string()];
    for k in 1..=p {
        for j in 1..=q {
            h.push(format!("x_{k}_{j}"));
        }
    }
    h
}

/// Reads a choice dataset in either layout.
pub fn read_data(bytes: &[u8], mode: DataMode) -> Result<MnpData> {
    let mut rdr = csv_reader(bytes);
    let header: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if header.first().map(String::as_str) != Some("choice") {
        return Err(data_err(1, "the first column must be `choice`"));
    }
    let (p, q) = match mode {
        DataMode::Wide => {
            let cells = header.len() - 1;
            let dims = header[1..]
                .iter()
                .map(|h| {
                    let mut parts = h.strip_prefix("x_")?.split('_');
                    let k: usize = parts.next()?.parse().ok()?;
                    let j: usize = parts.next()?.parse().ok()?;
                    parts.next().is_none().then_some((k, j))
                })
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| data_err(1, "covariate columns must be named `x_<row>_<column>`"))?;
            let p = dims.iter().map(|d| d.0).max().unwrap_or(0);
            let q = dims.iter().map(|d| d.1).max().unwrap_or(0);
            if p == 0 || q == 0 || p * q != cells || header != wide_header(p, q) {
                return Err(data_err(
                    1,
                    format!("expected columns {}", wide_header(p.max(1), q.max(1)).join(",")),
                ));
            }
            (p, q)
        }
        DataMode::Prices => {
            let p = header.len().saturating_sub(2);
            let expected: Vec<String> = std::iter::once("choice".to_string())
                .chain((0..=p).map(|k| format!("price_{k}")))
                .collect();
            if p == 0 || header != expected {
                return Err(data_err(1, "expected columns choice,price_0,...,price_p with p >= 1"));
            }
            (p, p + 1)
        }
    };
    let mut choices = Vec::new();
    let mut designs = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = record_line(&rec, idx + 2);
        if rec.len() != header.len() {
            return Err(data_err(
                line,
                format!("expected {} fields, found {}", header.len(), rec.len()),
            ));
        }
        let choice = parse_choice(&rec, line)?;
        if choice > p {
            return Err(data_err(line, format!("choice {choice} is outside 0..={p}")));
        }
        let values = (1..header.len())
            .map(|c| parse_cell(&rec, c, line, &header[c]))
            .collect::<Result<Vec<_>>>()?;
        let x = match mode {
            DataMode::Wide => DMatrix::from_row_slice(p, q, &values),
            DataMode::Prices => design_from_prices(&values).map_err(|e| data_err(line, e.to_string()))?,
        };
        choices.push(choice);
        designs.push(x);
    }
    if choices.is_empty() {
        return Err(data_err(2, "no observations"));
    }
    MnpData::new(choices, designs).map_err(|e| data_err(0, e.to_string()))
}

/// Serializes data in the wide layout.
pub fn write_data(data: &MnpData) -> Vec<u8> {
    let mut out = wide_header(data.p(), data.q()).join(",");
    out.push('\n');
    for (y, x) in data.choices().iter().zip(data.designs()) {
        out.push_str(&y.to_string());
        for k in 0..data.p() {
            for j in 0..data.q() {
                out.push(',');
                out.push_str(&format_number(x[(k, j)]));
            }
        }
        out.push('\n');
    }
    out.into_bytes()
}

pub fn sigma_label(j: usize, k: usize) -> String {
    format!("sigma_{}_{}", j + 1, k + 1)
}

pub fn latent_label(i: usize, k: usize) -> String {
    format!("w_{}_{}", i + 1, k + 1)
}

pub const DRAWS_HEADER: &str = "iteration,parameter,value";

/// Long-format draws: every retained iteration lists `beta_j`, the upper
/// triangle `sigma_j_k` and any kept latents `w_i_k`.
pub fn write_draws(out: &ChainOutput) -> Vec<u8> {
    let mut s = String::with_capacity(out.retained() * 160);
    s.push_str(DRAWS_HEADER);
    s.push('\n');
    let mut row = |t: usize, label: &str, v: f64| {
        s.push_str(&t.to_string());
        s.push(',');
        s.push_str(label);
        s.push(',');
        s.push_str(&format_number(v));
        s.push('\n');
    };
    let q = out.betas.first().map_or(0, |b| b.len());
    let p = out.sigmas.first().map_or(0, |m| m.nrows());
    let beta_labels: Vec<String> = (0..q).map(crate::diagnostics::beta_label).collect();
    let sigma_labels: Vec<(usize, usize, String)> = (0..p)
        .flat_map(|j| (j..p).map(move |k| (j, k, sigma_label(j, k))))
        .collect();
    for (r, &t) in out.iterations.iter().enumerate() {
        for (j, label) in beta_labels.iter().enumerate() {
            row(t, label, out.betas[r][j]);
        }
        for (j, k, label) in &sigma_labels {
            row(t, label, out.sigmas[r][(*j, *k)]);
        }
        for trace in &out.latent_traces {
            for k in 0..trace.draws[r].len() {
                row(t, &latent_label(trace.index, k), trace.draws[r][k]);
            }
        }
    }
    s.into_bytes()
}

/// Draws read back from a long-format file, one series per parameter in
/// order of first appearance.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawTable {
    pub iterations: Vec<usize>,
    pub parameters: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl DrawTable {
    pub fn series(&self, label: &str) -> Option<&[f64]> {
        self.parameters
            .iter()
            .position(|p| p == label)
            .map(|i| self.values[i].as_slice())
    }
}

/// Parses a long-format draws file. Every iteration must list the same
/// parameters in the same order, with strictly increasing iterations.
pub fn read_draws(bytes: &[u8]) -> Result<DrawTable> {
    let mut rdr = csv_reader(bytes);
    let header: Vec<&str> = rdr.headers().map_err(csv_err)?.iter().collect();
    if header != ["iteration", "parameter", "value"] {
        return Err(data_err(1, format!("expected header `{DRAWS_HEADER}`")));
    }
    let mut iterations: Vec<usize> = Vec::new();
    let mut parameters: Vec<String> = Vec::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    let mut slot = 0usize;
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = record_line(&rec, idx + 2);
        if rec.len() != 3 {
            return Err(data_err(line, format!("expected 3 fields, found {}", rec.len())));
        }
        let t: usize = rec[0]
            .parse()
            .map_err(|_| data_err(line, format!("iteration `{}` is not an integer", &rec[0])))?;
        let label = &rec[1];
        let v = parse_cell(&rec, 2, line, "value")?;
        let starts_new = iterations.last() != Some(&t);
        if starts_new {
            if let Some(&prev) = iterations.last() {
                if t <= prev {
                    return Err(data_err(line, format!("iteration {t} follows {prev}")));
                }
                if slot != parameters.len() {
                    return Err(data_err(
                        line,
                        format!("iteration {prev} lists {slot} of {} parameters", parameters.len()),
                    ));
                }
            }
            iterations.push(t);
            slot = 0;
        }
        if iterations.len() == 1 {
            if parameters.iter().any(|p| p == label) {
                return Err(data_err(
                    line,
                    format!("parameter `{label}` repeated within iteration {t}"),
                ));
            }
            parameters.push(label.to_string());
            values.push(vec![v]);
        } else {
            match parameters.get(slot) {
                Some(expected) if expected == label => values[slot].push(v),
                Some(expected) => {
                    return Err(data_err(
                        line,
                        format!("expected parameter `{expected}`, found `{label}`"),
                    ))
                }
                None => return Err(data_err(line, format!("unexpected extra parameter `{label}`"))),
            }
        }
        slot += 1;
    }
    if iterations.is_empty() {
        return Err(data_err(2, "no draws"));
    }
    if slot != parameters.len() {
        return Err(data_err(
            0,
            format!("last iteration lists {slot} of {} parameters", parameters.len()),
        ));
    }
    Ok(DrawTable {
        iterations,
        parameters,
        values,
    })
}
