use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of first-coordinate values in the default two-channel grid.
pub const DEFAULT_GRID_STEPS: usize = 14;

/// Unit directions used to mix `J` channels into one signal each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinationGrid {
    thetas: Vec<Vec<f64>>,
}

impl CombinationGrid {
    /// Normalizes every direction; rejects empty grids, zero vectors and
    /// mixed dimensions.
    pub fn new(thetas: Vec<Vec<f64>>) -> Result<Self> {
        let dim = thetas.first().map(Vec::len).ok_or_else(|| Error::arg("empty combination grid"))?;
        if dim == 0 {
            return Err(Error::arg("combination directions need at least one coordinate"));
        }
        let mut out = Vec::with_capacity(thetas.len());
        for t in thetas {
            if t.len() != dim {
                return Err(Error::arg("combination directions differ in dimension"));
            }
            let norm = t.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(Error::arg("combination direction has zero or non-finite norm"));
            }
            out.push(t.iter().map(|v| v / norm).collect());
        }
        Ok(CombinationGrid { thetas: out })
    }

    /// The default grid for `j` channels.
    ///
    /// * `j = 1`: `{+1, −1}`.
    /// * `j = 2`: `θ1 = −1 + 2k/steps` for `k = 1..=steps`, `θ2 = +√(1−θ1²)`.
    /// * `j = 3`: `3·steps` points of a Fibonacci lattice on the half sphere
    ///   `θ3 ≥ 0`, which has about the same angular spacing as the `j = 2`
    ///   grid.
    pub fn default_for(j: usize, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::arg("grid needs at least one step"));
        }
        let thetas = match j {
            1 => vec![vec![1.0], vec![-1.0]],
            2 => (1..=steps)
                .map(|k| {
                    let t1 = -1.0 + 2.0 * k as f64 / steps as f64;
                    vec![t1, (1.0 - t1 * t1).max(0.0).sqrt()]
                })
                .collect(),
            3 => {
                let n = 3 * steps;
                let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
                (0..n)
                    .map(|i| {
                        let z = (i as f64 + 0.5) / n as f64;
                        let r = (1.0 - z * z).sqrt();
                        let phi = golden * i as f64;
                        vec![r * phi.cos(), r * phi.sin(), z]
                    })
                    .collect()
            }
            _ => return Err(Error::arg(format!("combination grids support 1 to 3 channels, got {j}"))),
        };
        CombinationGrid::new(thetas)
    }

    pub fn thetas(&self) -> &[Vec<f64>] {
        &self.thetas
    }

    pub fn dim(&self) -> usize {
        self.thetas[0].len()
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }
}

/// `z_θ(i) = Σ_j θ_j x_j(i)` for every direction of the grid.
pub fn linear_combinations_of(channels: &[Vec<f64>], grid: &CombinationGrid) -> Result<Vec<Vec<f64>>> {
    if channels.len() != grid.dim() {
        return Err(Error::arg(format!(
            "grid has dimension {} but there are {} channels",
            grid.dim(),
            channels.len()
        )));
    }
    let n = channels[0].len();
    if channels.iter().any(|c| c.len() != n) {
        return Err(Error::arg("channels differ in length"));
    }
    Ok(grid
        .thetas()
        .iter()
        .map(|theta| {
            let mut z = vec![0.0; n];
            for (c, &w) in channels.iter().zip(theta) {
                for (zi, xi) in z.iter_mut().zip(c) {
                    *zi += w * xi;
                }
            }
            z
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_two_channel_grid() {
        let g = CombinationGrid::default_for(2, DEFAULT_GRID_STEPS).unwrap();
        assert_eq!(g.len(), 14);
        for (k, t) in g.thetas().iter().enumerate() {
            assert!((t[0] - (k as f64 - 6.0) / 7.0).abs() < 1e-12);
            assert!(t[1] >= 0.0);
            assert!((t[0].hypot(t[1]) - 1.0).abs() < 1e-12);
        }
        assert_eq!(g.thetas()[13], vec![1.0, 0.0]);
    }

    #[test]
    fn single_channel_and_three_channel_grids() {
        let g = CombinationGrid::default_for(1, 14).unwrap();
        assert_eq!(g.thetas(), &[vec![1.0], vec![-1.0]]);
        let g = CombinationGrid::default_for(3, 14).unwrap();
        assert_eq!(g.len(), 42);
        for t in g.thetas() {
            assert!((t.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(t[2] > 0.0);
        }
        assert!(CombinationGrid::default_for(4, 14).is_err());
    }

    #[test]
    fn combination_examples() {
        let a = vec![1.0, -2.0, 3.5];
        let b = vec![0.5, 4.0, -1.0];
        let g = CombinationGrid::new(vec![vec![1.0, 0.0]]).unwrap();
        assert_eq!(linear_combinations_of(&[a.clone(), b], &g).unwrap()[0], a);
        let h = 1.0 / 2f64.sqrt();
        let g = CombinationGrid::new(vec![vec![h, -h]]).unwrap();
        let z = linear_combinations_of(&[a.clone(), a.clone()], &g).unwrap();
        assert!(z[0].iter().all(|v| *v == 0.0));
        assert!(linear_combinations_of(&[a], &g).is_err());
    }

    #[test]
    fn grid_rejects_bad_directions() {
        assert!(CombinationGrid::new(vec![]).is_err());
        assert!(CombinationGrid::new(vec![vec![0.0, 0.0]]).is_err());
        assert!(CombinationGrid::new(vec![vec![1.0], vec![1.0, 0.0]]).is_err());
    }

    proptest! {
        #[test]
        fn grids_are_unit_norm(steps in 1usize..60, j in 1usize..4) {
            let g = CombinationGrid::default_for(j, steps).unwrap();
            for t in g.thetas() {
                prop_assert!((t.iter().map(|v| v * v).sum::<f64>().sqrt() - 1.0).abs() < 1e-12);
            }
        }
    }
}
