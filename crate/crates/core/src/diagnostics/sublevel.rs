use ndarray::{Array1, ArrayView1};

use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::{BoxDomain, Objective};
use crate::Scalar;

/// How `dist(x, [F ≤ F̄])` is computed.
#[derive(Debug, Clone)]
pub enum SublevelOracle<S> {
    /// The problem's analytic projection onto `[F ≤ level]`.
    AnalyticProjection,
    /// `dist(x, X*)`, valid when `F̄ = F*`.
    SolutionSet,
    /// Nearest grid node inside the sublevel set.
    Grid(GridSublevel<S>),
}

/// Maximum dimension for grid oracles.
pub const GRID_MAX_DIM: usize = 3;

/// Grid nodes of a box with the membership mask of `[F ≤ level]`.
#[derive(Debug, Clone)]
pub struct GridSublevel<S> {
    lower: Array1<S>,
    h: S,
    shape: Vec<usize>,
    mask: Vec<bool>,
    level: S,
}

impl<S: Scalar> GridSublevel<S> {
    /// Evaluates `F` on every node `lower + i·h` of `bx`.
    pub fn new(obj: &dyn Objective<S>, bx: &BoxDomain<S>, h: S, level: S) -> Result<Self> {
        let n = bx.dim();
        if n > GRID_MAX_DIM {
            return Err(Error::Capability(format!(
                "grid sublevel oracle supports dimension <= {GRID_MAX_DIM}, got {n}"
            )));
        }
        if !(h > S::zero()) {
            return Err(Error::InvalidArgument("grid resolution must be positive".into()));
        }
        let shape: Vec<usize> = (0..n)
            .map(|i| ((bx.upper()[i] - bx.lower()[i]) / h).floor().to_usize().unwrap_or(0) + 1)
            .collect();
        let total: usize = shape.iter().product();
        if total > 50_000_000 {
            return Err(Error::InvalidArgument(format!("grid with {total} nodes is too fine")));
        }
        let lower = bx.lower().clone();
        let mut grid = Self {
            lower,
            h,
            shape,
            mask: Vec::new(),
            level,
        };
        let mask = (0..total)
            .map(|flat| {
                let x = grid.node(&grid.unflatten(flat));
                obj.objective(x.view()).map(|f| f <= level)
            })
            .collect::<Result<Vec<_>>>()?;
        grid.mask = mask;
        Ok(grid)
    }

    pub fn level(&self) -> S {
        self.level
    }

    pub fn resolution(&self) -> S {
        self.h
    }

    /// Length of a cell diagonal, the accuracy of [`Self::distance`].
    pub fn cell_diagonal(&self) -> S {
        self.h * S::lit(self.shape.len() as f64).sqrt()
    }

    fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.shape.len()];
        for d in (0..self.shape.len()).rev() {
            idx[d] = flat % self.shape[d];
            flat /= self.shape[d];
        }
        idx
    }

    fn flatten(&self, idx: &[i64]) -> Option<usize> {
        let mut flat = 0usize;
        for (d, &i) in idx.iter().enumerate() {
            if i < 0 || i as usize >= self.shape[d] {
                return None;
            }
            flat = flat * self.shape[d] + i as usize;
        }
        Some(flat)
    }

    fn node(&self, idx: &[usize]) -> Array1<S> {
        Array1::from_shape_fn(idx.len(), |d| self.lower[d] + S::lit(idx[d] as f64) * self.h)
    }

    /// Distance from `x` to the nearest masked node; `∞` if none.
    ///
    /// Searches Chebyshev rings around the node nearest to `x`. Nodes on ring
    /// `r` are at least `(r − ½)h` from `x`, which bounds the search.
    pub fn distance(&self, x: ArrayView1<S>) -> S {
        let n = self.shape.len();
        let center: Vec<i64> = (0..n)
            .map(|d| {
                let i = ((x[d] - self.lower[d]) / self.h).round().to_i64().unwrap_or(0);
                i.clamp(0, self.shape[d] as i64 - 1)
            })
            .collect();
        let max_ring = self.shape.iter().copied().max().unwrap_or(1) as i64;
        let mut best = S::infinity();
        for r in 0..=max_ring {
            if best.is_finite() && best <= (S::lit(r as f64) - S::lit(0.5)) * self.h {
                break;
            }
            self.visit_ring(&center, r, &mut |idx| {
                if let Some(flat) = self.flatten(idx) {
                    if self.mask[flat] {
                        let node = Array1::from_shape_fn(n, |d| self.lower[d] + S::lit(idx[d] as f64) * self.h);
                        best = best.min(linalg::dist(node.view(), x));
                    }
                }
            });
        }
        best
    }

    fn visit_ring(&self, center: &[i64], r: i64, f: &mut dyn FnMut(&[i64])) {
        let n = center.len();
        let mut offset = vec![-r; n];
        loop {
            if offset.iter().any(|o| o.abs() == r) {
                let idx: Vec<i64> = center.iter().zip(&offset).map(|(c, o)| c + o).collect();
                f(&idx);
            }
            let mut d = 0;
            loop {
                if d == n {
                    return;
                }
                offset[d] += 1;
                if offset[d] <= r {
                    break;
                }
                offset[d] = -r;
                d += 1;
            }
        }
    }
}

/// `dist(x, [F ≤ F̄])`; zero when `F(x) ≤ F̄` and `∞` (with a warning) when
/// the sublevel set is empty.
pub fn sublevel_distance<S: Scalar>(
    obj: &dyn Objective<S>,
    x: ArrayView1<S>,
    f_bar: S,
    oracle: &SublevelOracle<S>,
) -> Result<S> {
    if obj.objective(x)? <= f_bar {
        return Ok(S::zero());
    }
    let d = match oracle {
        SublevelOracle::AnalyticProjection => {
            let proj = obj
                .oracles()
                .sublevel_project
                .as_ref()
                .ok_or_else(|| Error::Capability("analytic sublevel projection".into()))?;
            match proj(x, f_bar) {
                Some(p) => linalg::dist(p.view(), x),
                None => S::infinity(),
            }
        }
        SublevelOracle::SolutionSet => {
            let oracles = obj.oracles();
            let (Some(f_star), Some(set)) = (oracles.optimal_value, oracles.solution_set.as_ref()) else {
                return Err(Error::Capability("optimal value and solution set".into()));
            };
            if (f_bar - f_star).abs() > S::lit(1e-12) * (S::one() + f_star.abs()) {
                return Err(Error::InvalidArgument(format!(
                    "solution-set oracle needs F_bar = F* = {f_star}, got {f_bar}"
                )));
            }
            set.distance(x)
        }
        SublevelOracle::Grid(grid) => {
            if grid.level != f_bar {
                return Err(Error::InvalidArgument(format!(
                    "grid was built for level {}, queried at {f_bar}",
                    grid.level
                )));
            }
            grid.distance(x)
        }
    };
    if d == S::infinity() {
        log::warn!("sublevel set at level {f_bar} is empty; distance is +inf");
    }
    Ok(d)
}
