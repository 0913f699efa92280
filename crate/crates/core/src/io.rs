//! Dataset files: CSV with a header row, and IDX image archives.
//!
//! Line and column numbers in errors are 1-based; line 1 is the header.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::projections::DataMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetFormat {
    Csv,
    IdxImages,
}

impl FromStr for DatasetFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(DatasetFormat::Csv),
            "idx-images" | "idx" => Ok(DatasetFormat::IdxImages),
            other => Err(Error::Config(format!("unknown dataset format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub data: DataMatrix<f64>,
    pub names: Vec<String>,
    pub labels: Option<Vec<String>>,
    /// `(rows, cols)` when every point is an image.
    pub image_shape: Option<(usize, usize)>,
}

impl Dataset {
    pub fn dimension(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Load a dataset. `label_column` names the CSV column holding class labels;
/// for IDX it is ignored and labels come from [`load_idx_labels`].
pub fn load_dataset(
    path: &Path,
    format: DatasetFormat,
    label_column: Option<&str>,
) -> Result<Dataset> {
    match format {
        DatasetFormat::Csv => read_csv(std::fs::File::open(path)?, label_column),
        DatasetFormat::IdxImages => parse_idx_images(&std::fs::read(path)?),
    }
}

pub fn read_csv<R: std::io::Read>(reader: R, label_column: Option<&str>) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(csv_error)?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::EmptyDataset);
    }
    let label_idx =
        match label_column {
            Some(name) => Some(header.iter().position(|h| h == name).ok_or_else(|| {
                Error::Config(format!("label column {name:?} is not in the header"))
            })?),
            None => None,
        };
    let names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|(j, _)| Some(*j) != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    if names.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut n = 0;
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() > header.len() {
            return Err(Error::Parse {
                line,
                column: header.len() + 1,
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        for j in 0..header.len() {
            let cell = record.get(j).unwrap_or("");
            if cell.is_empty() {
                return Err(Error::Parse {
                    line,
                    column: j + 1,
                    message: format!("missing value for {:?}", header[j]),
                });
            }
            if Some(j) == label_idx {
                labels.push(cell.to_string());
                continue;
            }
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ => {
                    return Err(Error::NonNumericCell {
                        row: line,
                        column: j + 1,
                        text: cell.to_string(),
                    })
                }
            }
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    Ok(Dataset {
        data: DataMatrix::new(n, names.len(), values)?,
        names,
        labels: label_idx.map(|_| labels),
        image_shape: None,
    })
}

fn csv_error(e: csv::Error) -> Error {
    match e.position() {
        Some(p) => Error::Parse {
            line: p.line() as usize,
            column: 0,
            message: e.to_string(),
        },
        None => Error::Parse {
            line: 0,
            column: 0,
            message: e.to_string(),
        },
    }
}

/// Write a dataset as CSV, labels last. Values use the shortest
/// representation that reads back exactly.
pub fn write_csv<W: std::io::Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = dataset.names.clone();
    if dataset.labels.is_some() {
        header.push("label".into());
    }
    w.write_record(&header).map_err(csv_error)?;
    for i in 0..dataset.data.n() {
        let mut row: Vec<String> = dataset.data.row(i).iter().map(f64::to_string).collect();
        if let Some(l) = &dataset.labels {
            row.push(l[i].clone());
        }
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Headerless numeric CSV, one row per point (custom perturbation files).
pub fn read_matrix_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_error)?;
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let row = record
            .iter()
            .enumerate()
            .map(|(j, cell)| {
                cell.parse::<f64>().map_err(|_| Error::NonNumericCell {
                    row: line,
                    column: j + 1,
                    text: cell.to_string(),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(rows)
}

struct IdxHeader {
    dims: Vec<usize>,
    data_offset: usize,
}

fn idx_header(bytes: &[u8]) -> Result<IdxHeader> {
    let bad = |offset, message: &str| Error::ParseBinary {
        offset,
        message: message.to_string(),
    };
    if bytes.len() < 4 {
        return Err(bad(0, "file too short for the magic number"));
    }
    if bytes[0] != 0 || bytes[1] != 0 {
        return Err(bad(0, "magic number must start with two zero bytes"));
    }
    if bytes[2] != 0x08 {
        return Err(bad(
            2,
            &format!(
                "unsupported element type 0x{:02x}; only unsigned bytes are read",
                bytes[2]
            ),
        ));
    }
    let ndims = bytes[3] as usize;
    if ndims == 0 {
        return Err(bad(3, "zero dimensions"));
    }
    let data_offset = 4 + 4 * ndims;
    if bytes.len() < data_offset {
        return Err(bad(bytes.len(), "file ends inside the dimension sizes"));
    }
    let dims: Vec<usize> = (0..ndims)
        .map(|k| {
            let o = 4 + 4 * k;
            u32::from_be_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]) as usize
        })
        .collect();
    let expected = dims.iter().product::<usize>();
    if bytes.len() - data_offset != expected {
        return Err(bad(
            data_offset,
            &format!(
                "expected {expected} data bytes, found {}",
                bytes.len() - data_offset
            ),
        ));
    }
    Ok(IdxHeader { dims, data_offset })
}

/// IDX archive of unsigned-byte images; pixels scaled to `[0, 1]`.
pub fn parse_idx_images(bytes: &[u8]) -> Result<Dataset> {
    let h = idx_header(bytes)?;
    let n = h.dims[0];
    let d: usize = h.dims[1..].iter().product();
    if n == 0 || d == 0 {
        return Err(Error::EmptyDataset);
    }
    let values = bytes[h.data_offset..]
        .iter()
        .map(|&b| f64::from(b) / 255.0)
        .collect();
    let (names, image_shape) = match h.dims[1..] {
        [rows, cols] => (
            (0..rows)
                .flat_map(|r| (0..cols).map(move |c| format!("r{r}c{c}")))
                .collect(),
            Some((rows, cols)),
        ),
        _ => ((0..d).map(|k| format!("p{k}")).collect(), None),
    };
    Ok(Dataset {
        data: DataMatrix::new(n, d, values)?,
        names,
        labels: None,
        image_shape,
    })
}

/// One-dimensional IDX label file.
pub fn load_idx_labels(path: &Path) -> Result<Vec<String>> {
    let bytes = std::fs::read(path)?;
    let h = idx_header(&bytes)?;
    if h.dims.len() != 1 {
        return Err(Error::ParseBinary {
            offset: 3,
            message: format!("label file has {} dimensions", h.dims.len()),
        });
    }
    Ok(bytes[h.data_offset..].iter().map(u8::to_string).collect())
}

/// Encode images as an IDX archive.
pub fn encode_idx_images(images: &[Vec<u8>], rows: usize, cols: usize) -> Vec<u8> {
    let mut out = vec![0, 0, 0x08, 3];
    for dim in [images.len(), rows, cols] {
        out.extend_from_slice(&(dim as u32).to_be_bytes());
    }
    for img in images {
        out.extend_from_slice(img);
    }
    out
}
