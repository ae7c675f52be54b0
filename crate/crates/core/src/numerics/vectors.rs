use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::tensor::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Overwrites rows of an embedding `table` with vectors from a plain-text
/// file of `word v1 ... vD` lines. Words the lookup does not know are
/// skipped; rows without a vector keep their random initialization.
/// Returns the number of rows filled.
pub fn load_pretrained<T: Scalar>(
    path: &Path,
    lookup: impl Fn(&str) -> Option<usize>,
    table: &mut Tensor<T>,
) -> Result<usize> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let dim = table.cols();
    let mut filled = 0;
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let mut parts = line.split_whitespace();
        let Some(word) = parts.next() else { continue };
        let values: Vec<f64> = parts
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::MalformedRecord {
                line: lineno + 1,
                reason: "non-numeric vector component".into(),
            })?;
        if values.len() != dim {
            return Err(Error::MalformedRecord {
                line: lineno + 1,
                reason: format!("vector has {} components, embedding width is {dim}", values.len()),
            });
        }
        if let Some(id) = lookup(word) {
            let row = &mut table.data_mut()[id * dim..(id + 1) * dim];
            for (dst, v) in row.iter_mut().zip(values) {
                *dst = T::lit(v);
            }
            filled += 1;
        }
    }
    Ok(filled)
}
