use std::fs::File;
use std::io;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::NodeId;

/// Per-node header processing delay, drawn uniformly from `[min, max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessingDelay {
    pub min: f64,
    pub max: f64,
}

impl ProcessingDelay {
    /// Default for unit-square networks. One abstract unit corresponds to
    /// 100 ms-equivalents (a median link of ~0.5 units is ~50 ms), so this is
    /// 0.5..1.5 ms-equivalents.
    pub const UNIT_SQUARE: ProcessingDelay = ProcessingDelay { min: 0.005, max: 0.015 };

    /// Default for latency matrices expressed in milliseconds.
    pub const MILLISECONDS: ProcessingDelay = ProcessingDelay { min: 0.5, max: 1.5 };

    pub fn validate(&self) -> std::result::Result<(), String> {
        if !(self.min > 0.0 && self.min.is_finite()) {
            return Err(format!("processing delay minimum {} must be positive", self.min));
        }
        if !(self.max >= self.min && self.max.is_finite()) {
            return Err(format!("processing delay maximum {} must be at least the minimum {}", self.max, self.min));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.max > self.min {
            rng.gen_range(self.min..=self.max)
        } else {
            self.min
        }
    }

    fn draw_all<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<f64>> {
        self.validate().map_err(Error::Config)?;
        Ok((0..n).map(|_| self.sample(rng)).collect())
    }
}

/// Symmetric pairwise link delays plus per-node processing delays.
#[derive(Clone, Debug, PartialEq)]
pub struct LatencyModel {
    n: usize,
    link: Vec<f64>,
    processing: Vec<f64>,
    positions: Option<Vec<[f64; 2]>>,
    labels: Option<Vec<String>>,
}

impl LatencyModel {
    /// Build from an explicit one-way delay matrix.
    pub fn from_matrix(matrix: &[Vec<f64>], processing: Vec<f64>) -> Result<Self> {
        let n = matrix.len();
        if processing.len() != n {
            return Err(Error::config(format!("{} processing delays for {n} nodes", processing.len())));
        }
        let mut link = vec![0.0; n * n];
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != n {
                return Err(Error::config(format!("latency row {i} has {} entries, expected {n}", row.len())));
            }
            for (j, &x) in row.iter().enumerate() {
                if !(x >= 0.0 && x.is_finite()) {
                    return Err(Error::config(format!("latency ({i},{j}) = {x} is not a finite nonnegative delay")));
                }
                if i != j {
                    link[i * n + j] = x;
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                if link[i * n + j] != link[j * n + i] {
                    return Err(Error::config(format!("latency ({i},{j}) differs from ({j},{i})")));
                }
            }
        }
        if let Some(v) = processing.iter().position(|&d| !(d > 0.0 && d.is_finite())) {
            return Err(Error::config(format!("processing delay of node {v} must be positive")));
        }
        Ok(LatencyModel { n, link, processing, positions: None, labels: None })
    }

    /// Euclidean delays between planar positions.
    pub fn from_positions(positions: Vec<[f64; 2]>, processing: Vec<f64>) -> Result<Self> {
        let n = positions.len();
        let matrix: Vec<Vec<f64>> =
            positions.iter().map(|a| positions.iter().map(|b| (a[0] - b[0]).hypot(a[1] - b[1])).collect()).collect();
        let mut model = Self::from_matrix(&matrix, processing)?;
        debug_assert_eq!(model.n, n);
        model.positions = Some(positions);
        Ok(model)
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    /// One-way delay between `u` and `v` (zero on the diagonal).
    #[inline]
    pub fn link(&self, u: NodeId, v: NodeId) -> f64 {
        self.link[u.index() * self.n + v.index()]
    }

    #[inline]
    pub fn processing(&self, v: NodeId) -> f64 {
        self.processing[v.index()]
    }

    pub fn positions(&self) -> Option<&[[f64; 2]]> {
        self.positions.as_deref()
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn max_link(&self) -> f64 {
        self.link.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_processing(&self) -> f64 {
        self.processing.iter().copied().fold(0.0, f64::max)
    }
}

/// Place `n` nodes uniformly on the unit square; delays are Euclidean distances.
pub fn unit_square_latency<R: Rng + ?Sized>(n: usize, delay: ProcessingDelay, rng: &mut R) -> Result<LatencyModel> {
    if n < 2 {
        return Err(Error::config("a unit-square network needs at least two nodes"));
    }
    let positions = (0..n).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect();
    let processing = delay.draw_all(n, rng)?;
    LatencyModel::from_positions(positions, processing)
}

/// Parse a round-trip ping matrix and convert it to symmetric one-way delays.
///
/// The first record holds the node labels (optionally preceded by a corner
/// cell); every following record is a label followed by `n` millisecond
/// cells. One-way delay is half the round trip, asymmetric pairs are averaged
/// and the diagonal is zero.
pub fn parse_ping_matrix<R: io::Read>(input: R) -> std::result::Result<(Vec<String>, Vec<Vec<f64>>), String> {
    let mut reader =
        csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(input);
    let mut records = reader.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| format!("row 0: {e}"))?,
        None => return Err("empty file".into()),
    };
    let mut labels = Vec::new();
    let mut ping = Vec::new();
    for (r, rec) in records.enumerate() {
        let row = r + 1;
        let rec = rec.map_err(|e| format!("row {row}: {e}"))?;
        let mut fields = rec.iter();
        labels.push(fields.next().unwrap_or_default().to_string());
        let cells = fields
            .enumerate()
            .map(|(c, cell)| {
                let col = c + 1;
                let x: f64 = cell.parse().map_err(|_| format!("row {row}, column {col}: cannot parse {cell:?}"))?;
                if !x.is_finite() || x < 0.0 {
                    return Err(format!("row {row}, column {col}: negative or non-finite ping {x}"));
                }
                Ok(x)
            })
            .collect::<std::result::Result<Vec<f64>, String>>()?;
        ping.push(cells);
    }
    let n = ping.len();
    if n == 0 {
        return Err("no data rows".into());
    }
    if header.len() != n && header.len() != n + 1 {
        return Err(format!("header has {} labels for {n} data rows", header.len()));
    }
    for (i, row) in ping.iter().enumerate() {
        if row.len() != n {
            return Err(format!("row {}: {} cells, expected {n} (matrix is not square)", i + 1, row.len()));
        }
    }
    let one_way = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 0.0 } else { (ping[i][j] / 2.0 + ping[j][i] / 2.0) / 2.0 }).collect())
        .collect();
    Ok((labels, one_way))
}

/// Load a ping matrix file and attach sampled processing delays.
pub fn load_latency_matrix<R: Rng + ?Sized>(path: &Path, delay: ProcessingDelay, rng: &mut R) -> Result<LatencyModel> {
    let ingest = |reason: String| Error::Ingestion { path: path.to_path_buf(), reason };
    let file = File::open(path).map_err(|e| ingest(e.to_string()))?;
    let (labels, matrix) = parse_ping_matrix(file).map_err(ingest)?;
    if matrix.len() < 2 {
        return Err(ingest("need at least two nodes".into()));
    }
    let processing = delay.draw_all(matrix.len(), rng)?;
    let mut model = LatencyModel::from_matrix(&matrix, processing)?;
    model.labels = Some(labels);
    Ok(model)
}
