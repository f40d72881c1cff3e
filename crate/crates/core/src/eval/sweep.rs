//! Training-loss curves over architecture variants.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::report::write_comments;
use crate::error::{Error, Result};
use crate::mist::{format_loss, LossHistory, TrainingConfig};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPoint {
    pub kernel_size: usize,
    pub widths: Vec<usize>,
}

impl SweepPoint {
    /// Label such as `k24-10-50-50`.
    pub fn config_id(&self) -> String {
        let widths: Vec<String> = self.widths.iter().map(usize::to_string).collect();
        format!("k{}-{}", self.kernel_size, widths.join("-"))
    }
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub point: SweepPoint,
    pub config_id: String,
    pub history: LossHistory,
}

/// Trains every grid point from the same seed, data stream and budget.
pub fn sweep_hyperparams(base: &TrainingConfig, grid: &[SweepPoint]) -> Result<Vec<SweepResult>> {
    sweep_with(base, grid, |_, _, _| {})
}

/// [`sweep_hyperparams`] with a callback `(config_id, iteration, loss)`.
pub fn sweep_with(
    base: &TrainingConfig,
    grid: &[SweepPoint],
    mut on_log: impl FnMut(&str, usize, f64),
) -> Result<Vec<SweepResult>> {
    if grid.is_empty() {
        return Err(Error::invalid("hyperparameter grid is empty"));
    }
    grid.iter()
        .map(|point| {
            let cfg = TrainingConfig {
                kernel_size: point.kernel_size,
                widths: point.widths.clone(),
                ..base.clone()
            };
            let id = point.config_id();
            let model = cfg.initial_model(&cfg.code.build()?)?;
            let (_, history) = crate::mist::train_with(model, &cfg, |i, l| on_log(&id, i, l))?;
            Ok(SweepResult {
                point: point.clone(),
                config_id: id,
                history,
            })
        })
        .collect()
}

/// `config_id,iteration,loss` rows for all curves.
pub fn write_loss_csv<W: Write>(mut out: W, results: &[SweepResult], comments: &[String]) -> Result<()> {
    write_comments(&mut out, comments)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["config_id", "iteration", "loss"])?;
    for r in results {
        for &(it, loss) in &r.history.points {
            w.write_record([r.config_id.clone(), it.to_string(), format_loss(loss)])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mist::train_from_scratch;

    fn base() -> TrainingConfig {
        TrainingConfig {
            code: "conv:5,7:zero-tail:n=16".parse().unwrap(),
            batch_size: 8,
            iterations: 4,
            seed: 3,
            ..TrainingConfig::default()
        }
    }

    #[test]
    fn single_point_matches_plain_training() {
        let point = SweepPoint {
            kernel_size: 3,
            widths: vec![2, 3, 3],
        };
        let r = sweep_hyperparams(&base(), std::slice::from_ref(&point)).unwrap();
        let cfg = TrainingConfig {
            kernel_size: 3,
            widths: vec![2, 3, 3],
            ..base()
        };
        let (_, h) = train_from_scratch(&cfg).unwrap();
        assert_eq!(r[0].history, h);
        assert_eq!(r[0].config_id, "k3-2-3-3");
    }

    #[test]
    fn empty_grid_is_an_error() {
        assert!(sweep_hyperparams(&base(), &[]).is_err());
    }

    #[test]
    fn loss_csv_has_one_row_per_logged_step() {
        let grid = [
            SweepPoint {
                kernel_size: 3,
                widths: vec![2, 2, 2],
            },
            SweepPoint {
                kernel_size: 5,
                widths: vec![2, 2, 2],
            },
        ];
        let r = sweep_hyperparams(&base(), &grid).unwrap();
        let mut out = Vec::new();
        write_loss_csv(&mut out, &r, &["sweep".into()]).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# sweep");
        assert_eq!(lines[1], "config_id,iteration,loss");
        assert_eq!(lines.len(), 2 + 8);
        assert!(lines[6].starts_with("k5-2-2-2,1,"));
    }
}
