use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;

use super::Dataset;
use crate::error::{Error, Result};
use crate::numerics::RngStream;

/// Default cap on the number of replace-one neighbors.
pub const DEFAULT_REPLACE_CAP: usize = 256;

/// Which records a neighboring dataset may differ in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NeighborNotion {
    ReplaceOne,
    RemoveOne,
    AddOne,
}

impl fmt::Display for NeighborNotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NeighborNotion::ReplaceOne => "replace",
            NeighborNotion::RemoveOne => "remove",
            NeighborNotion::AddOne => "add",
        })
    }
}

impl FromStr for NeighborNotion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "replace" | "replace-one" => Ok(NeighborNotion::ReplaceOne),
            "remove" | "remove-one" => Ok(NeighborNotion::RemoveOne),
            "add" | "add-one" => Ok(NeighborNotion::AddOne),
            _ => Err(Error::InvalidParameter(format!("unknown neighbor notion '{s}'"))),
        }
    }
}

/// One neighboring dataset, described relative to the base dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Neighbor {
    /// Base record `i` removed.
    Remove(usize),
    /// Pool record `p` appended.
    Add(usize),
    /// Base record `index` replaced by pool record `pool`.
    Replace { index: usize, pool: usize },
}

impl Neighbor {
    pub fn notion(&self) -> NeighborNotion {
        match self {
            Neighbor::Remove(_) => NeighborNotion::RemoveOne,
            Neighbor::Add(_) => NeighborNotion::AddOne,
            Neighbor::Replace { .. } => NeighborNotion::ReplaceOne,
        }
    }
}

impl fmt::Display for Neighbor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Neighbor::Remove(i) => write!(f, "remove:{i}"),
            Neighbor::Add(p) => write!(f, "add:{p}"),
            Neighbor::Replace { index, pool } => write!(f, "replace:{index}:{pool}"),
        }
    }
}

/// Neighboring datasets of a base dataset, plus the candidate pool they draw
/// added or substituted records from.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborSet {
    neighbors: Vec<Neighbor>,
    pool: Option<Dataset>,
    /// Number of neighbors before any cap was applied.
    total: usize,
}

impl NeighborSet {
    pub fn neighbors(&self) -> &[Neighbor] {
        &self.neighbors
    }

    pub fn pool(&self) -> Option<&Dataset> {
        self.pool.as_ref()
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    /// Whether the enumeration was subsampled.
    pub fn is_capped(&self) -> bool {
        self.total > self.neighbors.len()
    }

    pub fn total_before_cap(&self) -> usize {
        self.total
    }

    /// Distinct notions present, in a fixed order.
    pub fn notions(&self) -> Vec<NeighborNotion> {
        let mut v: Vec<NeighborNotion> = self.neighbors.iter().map(|n| n.notion()).collect();
        v.sort();
        v.dedup();
        v
    }

    /// Union of two sets over the same base dataset and pool.
    pub fn union(mut self, other: NeighborSet) -> Result<NeighborSet> {
        match (&self.pool, &other.pool) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::InvalidParameter(
                    "cannot merge neighbor sets drawn from different pools".into(),
                ))
            }
            (None, Some(_)) => self.pool = other.pool.clone(),
            _ => {}
        }
        self.total += other.total;
        self.neighbors.extend(other.neighbors);
        self.neighbors.sort();
        self.neighbors.dedup();
        Ok(self)
    }
}

/// Enumerates the neighbors of `data` under `notion`.
///
/// Replace-one neighbors number `n·|pool|`; when that exceeds `cap`, a
/// uniformly chosen subset of size `cap` is kept, drawn from `stream`.
pub fn enumerate_neighbors(
    data: &Dataset,
    notion: NeighborNotion,
    pool: Option<&Dataset>,
    cap: usize,
    stream: &RngStream,
) -> Result<NeighborSet> {
    let n = data.len();
    let pool_len = pool.map_or(0, |p| p.len());
    if let Some(p) = pool {
        if p.dim() != data.dim() {
            return Err(Error::DimensionMismatch {
                what: "pool feature dimension",
                expected: data.dim(),
                found: p.dim(),
            });
        }
    }
    let (neighbors, total) = match notion {
        NeighborNotion::RemoveOne => {
            if n < 2 {
                return Err(Error::TooFewRecords { needed: 2, found: n });
            }
            ((0..n).map(Neighbor::Remove).collect(), n)
        }
        NeighborNotion::AddOne => {
            if pool_len == 0 {
                return Err(Error::EmptyPool("add"));
            }
            if n == 0 {
                return Err(Error::EmptyDataset);
            }
            ((0..pool_len).map(Neighbor::Add).collect(), pool_len)
        }
        NeighborNotion::ReplaceOne => {
            if pool_len == 0 {
                return Err(Error::EmptyPool("replace"));
            }
            if n == 0 {
                return Err(Error::EmptyDataset);
            }
            if cap == 0 {
                return Err(Error::InvalidParameter("neighbor cap must be positive".into()));
            }
            let total = n * pool_len;
            let mut flat: Vec<usize> = if total > cap {
                sample(&mut stream.generator(), total, cap).into_vec()
            } else {
                (0..total).collect()
            };
            flat.sort_unstable();
            let list = flat
                .into_iter()
                .map(|k| Neighbor::Replace {
                    index: k / pool_len,
                    pool: k % pool_len,
                })
                .collect();
            (list, total)
        }
    };
    Ok(NeighborSet {
        neighbors,
        pool: match notion {
            NeighborNotion::RemoveOne => pool.cloned(),
            _ => Some(pool.expect("checked").clone()),
        },
        total,
    })
}
