//! One module per subcommand, plus the shared data loading.

pub mod bound;
pub mod estimate;
pub mod lazy;
pub mod mc_verify;
pub mod sweep;

use langevin_kl::data::{
    enumerate_neighbors, holdout_split, load_csv, synth_sphere, CsvSchema, LabelCoding, LabelRule, NeighborNotion,
    NeighborSet,
};
use langevin_kl::numerics::gaussian_matrix;
use langevin_kl::{Dataset, LossKind, RngStream};

use crate::config::{DataSource, RunConfig, SynthLabels};
use crate::error::CliError;

/// Stream id reserved for data generation, away from the per-run ids `0..runs`.
const DATA_STREAM: u64 = u64::MAX;

pub fn data_stream(seed: u64) -> RngStream {
    RngStream::new(seed, DATA_STREAM)
}

/// Training rows and, when requested, a held-out pool of candidate records.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub train: Dataset,
    pub pool: Option<Dataset>,
}

/// Loads or generates the data and fills in `cfg.d` for CSV input.
///
/// Synthetic sources generate `n + pool` points so that `n` is always the
/// training size; CSV sources hold the pool out of the file.
pub fn load_data(cfg: &mut RunConfig, with_pool: bool) -> Result<Loaded, CliError> {
    let root = data_stream(cfg.seed);
    let extra = if with_pool { cfg.pool } else { 0 };
    let full = match &cfg.data {
        DataSource::Synth(n) => {
            let d = cfg.input_dim()?;
            let rule = match cfg.labels {
                SynthLabels::Sign => LabelRule::RandomSign,
                SynthLabels::Teacher => {
                    LabelRule::LinearTeacher(gaussian_matrix(1, d, 1.0, &root.child(0))?.into_vec())
                }
                SynthLabels::Class => LabelRule::RandomClass(cfg.outputs),
            };
            synth_sphere(n + extra, d, &root.child(1), &rule)?
        }
        DataSource::Csv(path) => {
            let schema = CsvSchema {
                label_column: cfg.label_column.clone(),
                coding: if cfg.outputs == 1 {
                    LabelCoding::Binary
                } else {
                    LabelCoding::Classes(cfg.outputs)
                },
                normalize: cfg.normalize,
            };
            let data = load_csv(path, &schema)?;
            match cfg.d {
                Some(d) if d != data.dim() => {
                    return Err(CliError::Config(format!(
                        "d={d} but {} has {} feature columns",
                        path.display(),
                        data.dim()
                    )))
                }
                _ => cfg.d = Some(data.dim()),
            }
            data
        }
    };
    if extra == 0 {
        return Ok(Loaded {
            train: full,
            pool: None,
        });
    }
    if full.len() <= extra {
        return Err(CliError::Config(format!(
            "pool of {extra} leaves no training rows out of {}",
            full.len()
        )));
    }
    let (train, pool) = holdout_split(&full, extra, &root.child(2))?;
    Ok(Loaded {
        train,
        pool: Some(pool),
    })
}

pub fn neighbor_set(cfg: &RunConfig, data: &Loaded) -> Result<NeighborSet, CliError> {
    let set = enumerate_neighbors(
        &data.train,
        cfg.neighbor,
        data.pool.as_ref(),
        cfg.cap,
        &data_stream(cfg.seed).child(3),
    )?;
    if set.is_capped() {
        eprintln!(
            "note: evaluating {} of {} {} neighbors (cap {})",
            set.len(),
            set.total_before_cap(),
            cfg.neighbor,
            cfg.cap
        );
    }
    Ok(set)
}

pub fn needs_pool(notion: NeighborNotion) -> bool {
    notion != NeighborNotion::RemoveOne
}

pub fn loss_for(outputs: usize) -> LossKind {
    LossKind::for_outputs(outputs)
}

/// Steps at which cumulative values are reported: multiples of `every`, plus
/// the final step.
pub fn record_points(steps: usize, every: usize) -> Vec<usize> {
    let mut points: Vec<usize> = (0..=steps).step_by(every.max(1)).collect();
    if points.last() != Some(&steps) {
        points.push(steps);
    }
    points
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Command;

    #[test]
    fn record_points_end_at_last_step() {
        assert_eq!(record_points(0, 5), vec![0]);
        assert_eq!(record_points(7, 3), vec![0, 3, 6, 7]);
        assert_eq!(record_points(6, 3), vec![0, 3, 6]);
    }

    #[test]
    fn synthetic_pool_is_held_out() {
        let pairs = vec![
            ("data".to_string(), "synth:10".to_string()),
            ("pool".to_string(), "4".to_string()),
        ];
        let mut cfg = RunConfig::resolve(Command::Estimate, &pairs).unwrap();
        let loaded = load_data(&mut cfg, true).unwrap();
        assert_eq!(loaded.train.len(), 10);
        assert_eq!(loaded.pool.unwrap().len(), 4);
        let plain = load_data(&mut cfg, false).unwrap();
        assert_eq!(plain.train.len(), 10);
        assert!(plain.pool.is_none());
    }
}
