use serde::{Deserialize, Serialize};

use super::EvalError;

/// Mean and population standard deviation of repeated runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
}

/// Single-pass (Welford) mean and population SD.
pub fn aggregate_runs(values: &[f64]) -> Result<RunStats, EvalError> {
    if values.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (k, &x) in values.iter().enumerate() {
        let delta = x - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (x - mean);
    }
    let n = values.len();
    let constant = values.iter().all(|&v| v == values[0]);
    let sd = if constant { 0.0 } else { (m2 / n as f64).max(0.0).sqrt() };
    Ok(RunStats {
        n,
        mean: if constant { values[0] } else { mean },
        sd,
    })
}

/// Z-scores of run durations; all zeros when every duration is the same.
pub fn normalize_durations(durations: &[f64]) -> Result<Vec<f64>, EvalError> {
    let stats = aggregate_runs(durations)?;
    if stats.sd == 0.0 {
        return Ok(vec![0.0; durations.len()]);
    }
    Ok(durations.iter().map(|d| (d - stats.mean) / stats.sd).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_input() {
        let s = aggregate_runs(&[2.0, 2.0, 2.0]).unwrap();
        assert_eq!((s.n, s.mean, s.sd), (3, 2.0, 0.0));
        assert_eq!(normalize_durations(&[5.0, 5.0, 5.0]).unwrap(), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn two_point_z_scores() {
        assert_eq!(normalize_durations(&[1.0, 3.0]).unwrap(), vec![-1.0, 1.0]);
    }

    #[test]
    fn empty_input() {
        assert_eq!(aggregate_runs(&[]), Err(EvalError::EmptyInput));
        assert_eq!(normalize_durations(&[]), Err(EvalError::EmptyInput));
    }

    #[test]
    fn population_not_sample_sd() {
        // Population SD of 2, 4, 4, 4, 5, 5, 7, 9 is exactly 2.
        let s = aggregate_runs(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]).unwrap();
        assert_eq!(s.mean, 5.0);
        assert!((s.sd - 2.0).abs() < 1e-12);
    }
}
