//! Kernel temporal segmentation.
//!
//! Segment scatter is read off cumulative sums of the Gram matrix, so every
//! segment cost is O(1) after an O(n²) precompute. The dynamic program over
//! `(change points, prefix length)` is O(m·n²) and yields the global optimum
//! for every change-point count up to the requested maximum in one pass.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{FrameFeatureSeries, ShotError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KtsKernel {
    /// Dot product of raw feature vectors.
    Linear,
    /// Dot product after scaling each vector to unit L2 norm. Zero vectors stay zero.
    #[default]
    NormalizedLinear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangePointResult {
    /// Interior cut points, strictly increasing, each in `(0, n)`.
    pub boundaries: Vec<usize>,
    /// Total within-segment scatter of the returned segmentation.
    pub objective: f64,
    pub num_segments: usize,
}

/// Cumulative Gram sums over a feature series.
pub struct ScatterTable {
    n: usize,
    diag: Vec<f64>,
    // (n+1) x (n+1), row-major: cum[i][j] = sum of K[a][b] for a < i, b < j
    cum: Vec<f64>,
}

fn kernel_rows(features: &FrameFeatureSeries, kernel: KtsKernel) -> Vec<Vec<f64>> {
    features
        .rows()
        .map(|r| match kernel {
            KtsKernel::Linear => r.to_vec(),
            KtsKernel::NormalizedLinear => {
                let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 0.0 {
                    r.iter().map(|v| v / norm).collect()
                } else {
                    r.to_vec()
                }
            }
        })
        .collect()
}

impl ScatterTable {
    pub fn new(features: &FrameFeatureSeries, kernel: KtsKernel) -> Self {
        let x = kernel_rows(features, kernel);
        let n = x.len();
        let gram: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                (0..n)
                    .map(|j| x[i].iter().zip(&x[j]).map(|(a, b)| a * b).sum())
                    .collect()
            })
            .collect();
        let w = n + 1;
        let mut cum = vec![0.0; w * w];
        for i in 0..n {
            let mut row_acc = 0.0;
            for j in 0..n {
                row_acc += gram[i][j];
                cum[(i + 1) * w + j + 1] = cum[i * w + j + 1] + row_acc;
            }
        }
        let mut diag = vec![0.0; w];
        for i in 0..n {
            diag[i + 1] = diag[i] + gram[i][i];
        }
        Self { n, diag, cum }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Scatter of the half-open segment `[a, b)`.
    pub fn scatter(&self, a: usize, b: usize) -> f64 {
        debug_assert!(a < b && b <= self.n);
        let w = self.n + 1;
        let block = self.cum[b * w + b] - self.cum[a * w + b] - self.cum[b * w + a] + self.cum[a * w + a];
        let value = (self.diag[b] - self.diag[a]) - block / (b - a) as f64;
        value.max(0.0)
    }
}

/// Optimal scatter and boundaries for every change-point count `0..=max_change_points`.
pub fn optimal_segmentations(table: &ScatterTable, max_change_points: usize) -> Vec<(f64, Vec<usize>)> {
    let n = table.len();
    let m_max = max_change_points.min(n.saturating_sub(1));
    let w = n + 1;
    let mut cost = vec![f64::INFINITY; (m_max + 1) * w];
    let mut back = vec![0usize; (m_max + 1) * w];
    for l in 1..=n {
        cost[l] = table.scatter(0, l);
    }
    for k in 1..=m_max {
        for l in (k + 1)..=n {
            let mut best = f64::INFINITY;
            let mut arg = k;
            for t in k..l {
                let c = cost[(k - 1) * w + t] + table.scatter(t, l);
                if c < best {
                    best = c;
                    arg = t;
                }
            }
            cost[k * w + l] = best;
            back[k * w + l] = arg;
        }
    }
    (0..=m_max)
        .map(|k| {
            let mut cps = vec![0; k];
            let mut cur = n;
            for j in (1..=k).rev() {
                cur = back[j * w + cur];
                cps[j - 1] = cur;
            }
            (cost[k * w + n], cps)
        })
        .collect()
}

/// Model-selection penalty `m · (ln(n/m) + 1)`, zero at `m = 0`.
pub fn change_point_penalty(m: usize, n: usize) -> f64 {
    if m == 0 {
        0.0
    } else {
        let m = m as f64;
        m * ((n as f64 / m).ln() + 1.0)
    }
}

pub fn kts_segment(
    features: &FrameFeatureSeries,
    max_change_points: usize,
    penalty_weight: f64,
    kernel: KtsKernel,
) -> Result<ChangePointResult, ShotError> {
    let n = features.len();
    if n < 2 {
        return Err(ShotError::InvalidInput(format!("kts needs at least 2 frames, got {n}")));
    }
    if max_change_points >= n {
        return Err(ShotError::InvalidInput(format!(
            "max_change_points {max_change_points} must be below frame count {n}"
        )));
    }
    if !(penalty_weight.is_finite() && penalty_weight >= 0.0) {
        return Err(ShotError::InvalidInput(format!(
            "penalty_weight {penalty_weight} must be non-negative"
        )));
    }
    let table = ScatterTable::new(features, kernel);
    let candidates = optimal_segmentations(&table, max_change_points);
    let penalized: Vec<f64> = candidates
        .iter()
        .enumerate()
        .map(|(m, (scatter, _))| scatter + penalty_weight * change_point_penalty(m, n))
        .collect();
    let best = penalized.iter().copied().fold(f64::INFINITY, f64::min);
    // smallest m whose cost is within rounding of the minimum
    let tol = 1e-9 * best.abs().max(1.0);
    let chosen = penalized
        .iter()
        .position(|&c| c <= best + tol)
        .expect("at least m = 0 is a candidate");
    let (objective, boundaries) = candidates[chosen].clone();
    Ok(ChangePointResult {
        num_segments: boundaries.len() + 1,
        boundaries,
        objective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(v: &[f64]) -> FrameFeatureSeries {
        FrameFeatureSeries::from_scalars(v, 1.0).unwrap()
    }

    fn direct_scatter(v: &[f64]) -> f64 {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - mean).powi(2)).sum()
    }

    #[test]
    fn constant_series_has_no_cuts() {
        let s = series(&[3.0; 12]);
        for kernel in [KtsKernel::Linear, KtsKernel::NormalizedLinear] {
            for m in 0..5 {
                let r = kts_segment(&s, m, 0.0, kernel).unwrap();
                assert!(r.boundaries.is_empty());
                assert!(r.objective.abs() < 1e-12);
                assert_eq!(r.num_segments, 1);
            }
        }
    }

    #[test]
    fn single_step() {
        let r = kts_segment(&series(&[0., 0., 0., 5., 5., 5.]), 1, 0.0, KtsKernel::Linear).unwrap();
        assert_eq!(r.boundaries, vec![3]);
        assert_eq!(r.objective, 0.0);
    }

    #[test]
    fn two_steps() {
        let r = kts_segment(&series(&[0., 0., 4., 4., 9., 9.]), 2, 0.0, KtsKernel::Linear).unwrap();
        assert_eq!(r.boundaries, vec![2, 4]);
        // with one cut only, [0,0,4,4 | 9,9] wins with scatter 16
        let one = kts_segment(&series(&[0., 0., 4., 4., 9., 9.]), 1, 0.0, KtsKernel::Linear).unwrap();
        assert_eq!(one.boundaries, vec![4]);
        assert!((one.objective - 16.0).abs() < 1e-12);
    }

    #[test]
    fn scatter_table_matches_direct_sums() {
        let v = [1.0, -2.0, 0.5, 3.0, 3.0, 7.5, -1.0];
        let table = ScatterTable::new(&series(&v), KtsKernel::Linear);
        for a in 0..v.len() {
            for b in a + 1..=v.len() {
                assert!((table.scatter(a, b) - direct_scatter(&v[a..b])).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn penalty_suppresses_weak_cut() {
        let s = series(&[0.0, 0.0, 0.0, 0.3, 0.3, 0.3]);
        let free = kts_segment(&s, 1, 0.0, KtsKernel::Linear).unwrap();
        assert_eq!(free.boundaries, vec![3]);
        let penalized = kts_segment(&s, 1, 1.0, KtsKernel::Linear).unwrap();
        assert!(penalized.boundaries.is_empty());
    }

    #[test]
    fn errors() {
        assert!(matches!(
            kts_segment(&series(&[1.0]), 0, 0.0, KtsKernel::Linear),
            Err(ShotError::InvalidInput(_))
        ));
        assert!(kts_segment(&series(&[1.0, 2.0]), 2, 0.0, KtsKernel::Linear).is_err());
        assert_eq!(change_point_penalty(0, 10), 0.0);
        assert!((change_point_penalty(2, 10) - 2.0 * (5f64.ln() + 1.0)).abs() < 1e-12);
    }
}
