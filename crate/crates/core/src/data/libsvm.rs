//! libsvm text format: `label index:value ...` with 1-based, strictly
//! increasing indices. Labels in {-1,+1} or {0,1} (mapped to -1/+1).
//! Files ending in `.gz` are decompressed transparently.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::stream::Observation;
use crate::vector::Vector;

/// Parses a libsvm file (optionally gzip'd, by extension).
pub fn parse_libsvm<P: AsRef<Path>>(path: P) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path)?;
    if path.extension().is_some_and(|e| e == "gz") {
        parse_libsvm_reader(GzDecoder::new(file))
    } else {
        parse_libsvm_reader(file)
    }
}

/// Parses libsvm-format text from any reader.
pub fn parse_libsvm_reader<R: Read>(reader: R) -> Result<Dataset> {
    let reader = BufReader::new(reader);
    let mut raw_labels: Vec<f64> = Vec::new();
    let mut rows: Vec<Vec<(u32, f64)>> = Vec::new();
    let mut max_index = 0u32;

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            msg: e.to_string(),
        })?;
        let mut tokens = line.split_whitespace();
        let Some(label_tok) = tokens.next() else {
            continue; // blank line
        };
        let label: f64 = label_tok.parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("bad label token '{label_tok}'"),
        })?;
        if label != 0.0 && label != 1.0 && label != -1.0 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("label {label} not in {{-1, 0, +1}}"),
            });
        }

        let mut pairs: Vec<(u32, f64)> = Vec::new();
        let mut last: Option<u32> = None;
        for tok in tokens {
            let (idx_s, val_s) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line: lineno,
                msg: format!("token '{tok}' is not index:value"),
            })?;
            let idx: u32 = idx_s.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad index '{idx_s}'"),
            })?;
            if idx == 0 {
                return Err(Error::Parse {
                    line: lineno,
                    msg: "indices are 1-based; got 0".into(),
                });
            }
            let val: f64 = val_s.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad value '{val_s}'"),
            })?;
            if let Some(p) = last {
                if idx <= p {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("indices not strictly increasing: {p} then {idx}"),
                    });
                }
            }
            last = Some(idx);
            if val != 0.0 {
                pairs.push((idx - 1, val)); // store 0-based
                max_index = max_index.max(idx);
            }
        }
        raw_labels.push(label);
        rows.push(pairs);
    }

    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }

    // {0,1} encoding maps 0 -> -1; {-1,+1} passes through
    let has_zero = raw_labels.contains(&0.0);
    let has_neg = raw_labels.iter().any(|&l| l == -1.0);
    if has_zero && has_neg {
        return Err(Error::Parse {
            line: 0,
            msg: "labels mix 0 and -1; encoding is ambiguous".into(),
        });
    }

    let dim = max_index as usize;
    let observations: Vec<Observation> = rows
        .into_iter()
        .zip(raw_labels)
        .map(|(pairs, label)| {
            let y = if label == 0.0 { -1.0 } else { label };
            // pairs are validated sorted/nonzero above
            let x = Vector::sparse(dim, &pairs).expect("validated sparse row");
            Observation::new(x, y)
        })
        .collect();
    Dataset::new(observations, dim)
}

/// Writes observations in libsvm format (1-based indices, {-1,+1} labels).
/// Every file written this way parses back to the identical dataset provided
/// some observation touches the last coordinate (the format carries no
/// explicit dimension).
pub fn write_libsvm<P: AsRef<Path>>(data: &Dataset, path: P) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for obs in data.observations() {
        write!(w, "{}", obs.y)?;
        for (j, v) in obs.x.entries() {
            if v != 0.0 {
                write!(w, " {}:{}", j + 1, v)?;
            }
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}
