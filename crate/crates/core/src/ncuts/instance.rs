use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::io::{read_csv, write_csv};
use crate::linalg::RealMatrix;

/// Checks that every row of `E` holds exactly one 1 (zeros elsewhere) and
/// that no cluster is empty. Returns the cluster sizes.
pub fn validate_indicator(e: &RealMatrix) -> Result<Vec<usize>> {
    let mut sizes = vec![0usize; e.cols()];
    for i in 0..e.rows() {
        let mut ones = 0;
        for (j, &v) in e.row(i).iter().enumerate() {
            if v == 1.0 {
                ones += 1;
                sizes[j] += 1;
            } else if v != 0.0 {
                return Err(Error::Contract(format!("E[{i}, {j}] = {v} is not 0 or 1")));
            }
        }
        if ones != 1 {
            return Err(Error::Contract(format!(
                "row {i} of E has {ones} ones, expected 1"
            )));
        }
    }
    if let Some(cluster) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::EmptyCluster { cluster });
    }
    Ok(sizes)
}

pub fn labels_from_indicator(e: &RealMatrix) -> Result<Vec<usize>> {
    validate_indicator(e)?;
    Ok((0..e.rows())
        .map(|i| e.row(i).iter().position(|&v| v == 1.0).expect("validated"))
        .collect())
}

/// `m × k` indicator of `labels`; every label in `0..k` must occur.
pub fn indicator_from_labels(labels: &[usize], k: usize) -> Result<RealMatrix> {
    if let Some(&l) = labels.iter().find(|&&l| l >= k) {
        return Err(Error::Contract(format!(
            "label {l} out of range for k = {k}"
        )));
    }
    if labels.is_empty() || k == 0 {
        return Err(Error::EmptyMatrix {
            rows: labels.len(),
            cols: k,
        });
    }
    let e = RealMatrix::from_fn(
        labels.len(),
        k,
        |i, j| if labels[i] == j { 1.0 } else { 0.0 },
    );
    validate_indicator(&e)?;
    Ok(e)
}

/// Per-pixel features with their ground-truth partition.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationInstance {
    /// `m × d`, row `r·width + c` is pixel `(r, c)`.
    pub f: RealMatrix,
    /// `m × k` indicator.
    pub e: RealMatrix,
    pub k: usize,
    /// `(height, width)`.
    pub image_shape: (usize, usize),
}

impl SegmentationInstance {
    pub fn new(f: RealMatrix, e: RealMatrix, image_shape: (usize, usize)) -> Result<Self> {
        let m = image_shape.0 * image_shape.1;
        if f.rows() != m || e.rows() != m {
            return Err(Error::shape(
                "SegmentationInstance",
                format!(
                    "image {}x{} has {m} pixels, F has {} rows, E has {}",
                    image_shape.0,
                    image_shape.1,
                    f.rows(),
                    e.rows()
                ),
            ));
        }
        validate_indicator(&e)?;
        let k = e.cols();
        Ok(Self {
            f,
            e,
            k,
            image_shape,
        })
    }

    pub fn pixels(&self) -> usize {
        self.f.rows()
    }

    pub fn labels(&self) -> Vec<usize> {
        labels_from_indicator(&self.e).expect("validated on construction")
    }

    /// Writes `{stem}_features.csv`, `{stem}_labels.csv` (the indicator)
    /// and `{stem}_header.txt` (`height`, `width`, `k` as `key=value`).
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_csv(&dir.join(format!("{stem}_features.csv")), &self.f)?;
        write_csv(&dir.join(format!("{stem}_labels.csv")), &self.e)?;
        let header = format!(
            "height={}\nwidth={}\nk={}\n",
            self.image_shape.0, self.image_shape.1, self.k
        );
        fs::write(dir.join(format!("{stem}_header.txt")), header)?;
        Ok(())
    }

    pub fn read(dir: &Path, stem: &str) -> Result<Self> {
        let text = fs::read_to_string(dir.join(format!("{stem}_header.txt")))?;
        let mut fields = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: n + 1,
                message: format!("expected key=value, got {line:?}"),
            })?;
            let value: usize = value.trim().parse().map_err(|_| Error::Parse {
                line: n + 1,
                message: format!("{value:?} is not a nonnegative integer"),
            })?;
            fields.insert(key.trim().to_string(), value);
        }
        let get = |key: &str| {
            fields.get(key).copied().ok_or_else(|| Error::Parse {
                line: 0,
                message: format!("header is missing {key}"),
            })
        };
        let shape = (get("height")?, get("width")?);
        let f = read_csv(&dir.join(format!("{stem}_features.csv")))?;
        let e = read_csv(&dir.join(format!("{stem}_labels.csv")))?;
        let inst = Self::new(f, e, shape)?;
        if inst.k != get("k")? {
            return Err(Error::Contract(format!(
                "header k = {} but E has {} columns",
                get("k")?,
                inst.k
            )));
        }
        Ok(inst)
    }
}
