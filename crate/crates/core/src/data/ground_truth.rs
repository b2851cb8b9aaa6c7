use std::cmp::Reverse;
use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::records::ParsedRecords;
use crate::matrix::EnvironmentMatrix;
use crate::{Error, Result};

/// Slot width for IntelLab-style epochs, in time units.
pub const DEFAULT_SLOT_WIDTH: i64 = 31;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridOptions {
    pub slot_width: i64,
    pub n_min: usize,
    pub t_min: usize,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            slot_width: DEFAULT_SLOT_WIDTH,
            n_min: 1,
            t_min: 1,
        }
    }
}

/// Complete per-attribute matrices over a common node x slot grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthBundle {
    pub attributes: Vec<String>,
    pub matrices: Vec<EnvironmentMatrix>,
    /// Raw sensor id of each row.
    pub node_ids: Vec<u64>,
    /// Slot index (time / slot_width, floored) of each column.
    pub slots: Vec<i64>,
}

impl GroundTruthBundle {
    pub fn shape(&self) -> (usize, usize) {
        (self.node_ids.len(), self.slots.len())
    }

    pub fn get(&self, name: &str) -> Option<&EnvironmentMatrix> {
        self.attributes
            .iter()
            .position(|a| a == name)
            .map(|i| &self.matrices[i])
    }

    /// A bundle over a plain 0..n x 0..t grid.
    pub fn from_matrices(
        attributes: Vec<String>,
        matrices: Vec<EnvironmentMatrix>,
    ) -> Result<Self> {
        if attributes.len() != matrices.len() || matrices.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "{} attribute names for {} matrices",
                attributes.len(),
                matrices.len()
            )));
        }
        let shape = matrices[0].shape();
        for m in &matrices {
            crate::matrix::check_same_shape("ground-truth bundle", m.shape(), shape)?;
        }
        Ok(Self {
            attributes,
            matrices,
            node_ids: (0..shape.0 as u64).collect(),
            slots: (0..shape.1 as i64).collect(),
        })
    }
}

/// Priority set: the first element has the highest count, lowest index on ties.
struct Ranked {
    set: BTreeSet<(Reverse<usize>, usize)>,
    count: Vec<usize>,
}

impl Ranked {
    fn new(count: Vec<usize>) -> Self {
        let set = count
            .iter()
            .enumerate()
            .map(|(i, &c)| (Reverse(c), i))
            .collect();
        Self { set, count }
    }

    fn top(&self) -> Option<(usize, usize)> {
        self.set.first().map(|&(Reverse(c), i)| (c, i))
    }

    fn remove(&mut self, i: usize) {
        self.set.remove(&(Reverse(self.count[i]), i));
    }

    fn decrease(&mut self, i: usize, by: usize) {
        if by == 0 || !self.set.remove(&(Reverse(self.count[i]), i)) {
            return;
        }
        self.count[i] -= by;
        self.set.insert((Reverse(self.count[i]), i));
    }
}

/// Extract a complete submatrix by greedy deletion: while anything is missing,
/// delete the row or column with the highest joint missing count (summed over
/// the requested attributes). Ties between a row and a column delete the column;
/// among rows or among columns the lowest index goes first.
///
/// Readings are bucketed into slots of `opts.slot_width`; several readings of one
/// node in one slot are averaged.
pub fn build_ground_truth(
    parsed: &ParsedRecords,
    attributes: &[&str],
    opts: &GridOptions,
) -> Result<GroundTruthBundle> {
    if parsed.records.is_empty() {
        return Err(Error::InvalidConfig(
            "no records to build ground truth from".into(),
        ));
    }
    if attributes.is_empty() {
        return Err(Error::InvalidConfig("no attributes requested".into()));
    }
    if opts.slot_width < 1 {
        return Err(Error::InvalidConfig(format!(
            "slot width must be >= 1, got {}",
            opts.slot_width
        )));
    }
    let attr_idx: Vec<usize> = attributes
        .iter()
        .map(|a| parsed.attribute_index(a))
        .collect::<Result<_>>()?;

    let mut nodes: Vec<u64> = parsed.records.iter().map(|r| r.sensor_id).collect();
    nodes.sort_unstable();
    nodes.dedup();
    let mut slots: Vec<i64> = parsed
        .records
        .iter()
        .map(|r| r.time.div_euclid(opts.slot_width))
        .collect();
    slots.sort_unstable();
    slots.dedup();
    let (n, t) = (nodes.len(), slots.len());

    let mut sums = vec![DMatrix::<f64>::zeros(n, t); attr_idx.len()];
    let mut counts = vec![DMatrix::<u32>::zeros(n, t); attr_idx.len()];
    for rec in &parsed.records {
        let i = nodes.binary_search(&rec.sensor_id).expect("node indexed");
        let j = slots
            .binary_search(&rec.time.div_euclid(opts.slot_width))
            .expect("slot indexed");
        for (a, &src) in attr_idx.iter().enumerate() {
            if let Some(v) = rec.values[src] {
                sums[a][(i, j)] += v;
                counts[a][(i, j)] += 1;
            }
        }
    }
    let missing = DMatrix::from_fn(n, t, |i, j| {
        counts.iter().filter(|c| c[(i, j)] == 0).count()
    });

    let mut rows = Ranked::new((0..n).map(|i| missing.row(i).sum()).collect());
    let mut cols = Ranked::new((0..t).map(|j| missing.column(j).sum()).collect());
    let mut row_alive = vec![true; n];
    let mut col_alive = vec![true; t];
    while let (Some((rc, ri)), Some((cc, ci))) = (rows.top(), cols.top()) {
        if rc == 0 && cc == 0 {
            break;
        }
        if rc > cc {
            rows.remove(ri);
            row_alive[ri] = false;
            for j in (0..t).filter(|&j| col_alive[j]) {
                cols.decrease(j, missing[(ri, j)]);
            }
        } else {
            cols.remove(ci);
            col_alive[ci] = false;
            for i in (0..n).filter(|&i| row_alive[i]) {
                rows.decrease(i, missing[(i, ci)]);
            }
        }
    }

    let keep_rows: Vec<usize> = (0..n).filter(|&i| row_alive[i]).collect();
    let keep_cols: Vec<usize> = (0..t).filter(|&j| col_alive[j]).collect();
    let achieved = (keep_rows.len(), keep_cols.len());
    if achieved.0 < opts.n_min.max(1) || achieved.1 < opts.t_min.max(1) {
        return Err(Error::GroundTruthTooSmall {
            achieved,
            requested: (opts.n_min, opts.t_min),
        });
    }

    let matrices = sums
        .iter()
        .zip(&counts)
        .map(|(s, c)| {
            EnvironmentMatrix::new(DMatrix::from_fn(achieved.0, achieved.1, |i, j| {
                let (ri, cj) = (keep_rows[i], keep_cols[j]);
                s[(ri, cj)] / f64::from(c[(ri, cj)])
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GroundTruthBundle {
        attributes: attributes.iter().map(|s| s.to_string()).collect(),
        matrices,
        node_ids: keep_rows.iter().map(|&i| nodes[i]).collect(),
        slots: keep_cols.iter().map(|&j| slots[j]).collect(),
    })
}
