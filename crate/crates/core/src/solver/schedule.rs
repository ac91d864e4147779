use std::ops::Range;

use ndarray::{s, Array1, Array2, ArrayView1};

use crate::bregman::BregmanKernel;
use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::CompositeProblem;
use crate::Scalar;

/// Rule producing the kernel `K^k` used at iteration `k`.
#[derive(Debug, Clone)]
pub enum KernelSchedule<S: Scalar> {
    Constant(BregmanKernel<S>),
    /// Barzilai–Borwein diagonal `dᵢ = clip(|Δ∇fᵢ/Δxᵢ|, m, M)`; the first
    /// iteration uses `(m/2)‖·‖²`.
    DiagonalBb { m: S, big_m: S },
    /// `D(x^k, x) = Σᵢ ½(xᵢ−xᵢ^k)ᵀ(Q_ii + cᵢI)(xᵢ−xᵢ^k)` for quadratic `f`.
    BlockJacobi { blocks: Vec<Range<usize>>, c: Vec<S> },
    /// Explicit sequence; the last kernel repeats once exhausted.
    Custom(Vec<BregmanKernel<S>>),
}

/// Validated block partition with the per-block curvature `Q_ii + cᵢI`.
#[derive(Debug, Clone)]
pub struct BlockCurvature<S> {
    pub blocks: Vec<Range<usize>>,
    pub matrices: Vec<Array2<S>>,
    pub m: S,
    pub big_m: S,
}

impl<S: Scalar> BlockCurvature<S> {
    pub fn new(q: &Array2<S>, blocks: &[Range<usize>], c: &[S]) -> Result<Self> {
        let n = q.nrows();
        if blocks.len() != c.len() || blocks.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "need one weight per block, got {} blocks and {} weights",
                blocks.len(),
                c.len()
            )));
        }
        let mut next = 0;
        for b in blocks {
            if b.start != next || b.end <= b.start {
                return Err(Error::InvalidArgument(
                    "blocks must be non-empty, contiguous and ordered".into(),
                ));
            }
            next = b.end;
        }
        if next != n {
            return Err(Error::InvalidArgument(format!(
                "blocks cover {next} coordinates, problem has {n}"
            )));
        }
        if c.iter().any(|w| !(*w >= S::zero())) {
            return Err(Error::InvalidArgument("block weights must be nonnegative".into()));
        }
        let mut matrices = Vec::with_capacity(blocks.len());
        let (mut m, mut big_m) = (S::infinity(), S::zero());
        for (b, &ci) in blocks.iter().zip(c) {
            let h = q.slice(s![b.clone(), b.clone()]).to_owned() + Array2::<S>::eye(b.len()) * ci;
            let eig = linalg::symmetric_eigenvalues(h.view())?;
            m = m.min(eig[0]);
            big_m = big_m.max(eig[eig.len() - 1]);
            matrices.push(h);
        }
        if !(m > S::zero()) {
            return Err(Error::InvalidArgument(format!(
                "block curvature is not positive definite (smallest eigenvalue {m})"
            )));
        }
        Ok(Self {
            blocks: blocks.to_vec(),
            matrices,
            m,
            big_m,
        })
    }

    /// The block-diagonal matrix as a dense SPD kernel.
    pub fn kernel(&self) -> Result<BregmanKernel<S>> {
        let n = self.blocks.last().map_or(0, |b| b.end);
        let mut h = Array2::zeros((n, n));
        for (b, hb) in self.blocks.iter().zip(&self.matrices) {
            h.slice_mut(s![b.clone(), b.clone()]).assign(hb);
        }
        BregmanKernel::spd_with_bounds(h, self.m, self.big_m)
    }
}

/// Evenly sized contiguous blocks (the last absorbs the remainder).
pub fn even_blocks(n: usize, count: usize) -> Vec<Range<usize>> {
    let count = count.clamp(1, n.max(1));
    let size = n / count;
    (0..count)
        .map(|i| {
            let end = if i + 1 == count { n } else { (i + 1) * size };
            i * size..end
        })
        .collect()
}

/// Schedule state for one run.
#[derive(Debug)]
pub(crate) struct SchedulePlan<S: Scalar> {
    kind: PlanKind<S>,
    pub m: S,
    pub big_m: S,
}

#[derive(Debug)]
enum PlanKind<S: Scalar> {
    Fixed(BregmanKernel<S>),
    Bb { weights: Array1<S> },
    Sequence(Vec<BregmanKernel<S>>),
}

impl<S: Scalar> KernelSchedule<S> {
    pub(crate) fn plan(&self, p: &CompositeProblem<S>) -> Result<SchedulePlan<S>> {
        let n = p.f().dim();
        Ok(match self {
            Self::Constant(k) => SchedulePlan {
                m: k.m(),
                big_m: k.big_m(),
                kind: PlanKind::Fixed(k.clone()),
            },
            Self::DiagonalBb { m, big_m } => {
                if !(*m > S::zero()) || !(*big_m >= *m) {
                    return Err(Error::InvalidArgument(format!(
                        "diagonal schedule needs 0 < m <= M, got [{m}, {big_m}]"
                    )));
                }
                SchedulePlan {
                    m: *m,
                    big_m: *big_m,
                    kind: PlanKind::Bb {
                        weights: Array1::from_elem(n, *m),
                    },
                }
            }
            Self::BlockJacobi { blocks, c } => {
                let qf = p.f().quadratic_form().ok_or_else(|| {
                    Error::Capability("block Jacobi kernels need a quadratic smooth term".into())
                })?;
                let curv = BlockCurvature::new(&qf.q, blocks, c)?;
                SchedulePlan {
                    m: curv.m,
                    big_m: curv.big_m,
                    kind: PlanKind::Fixed(curv.kernel()?),
                }
            }
            Self::Custom(seq) => {
                if seq.is_empty() {
                    return Err(Error::InvalidArgument("custom schedule is empty".into()));
                }
                let m = seq.iter().fold(S::infinity(), |a, k| a.min(k.m()));
                let big_m = seq.iter().fold(S::zero(), |a, k| a.max(k.big_m()));
                SchedulePlan {
                    m,
                    big_m,
                    kind: PlanKind::Sequence(seq.clone()),
                }
            }
        })
    }
}

impl<S: Scalar> SchedulePlan<S> {
    /// Kernel for iteration `k`; `prev` holds `(x^{k−1}, ∇f(x^{k−1}))`.
    pub fn kernel_at(
        &mut self,
        k: usize,
        x: ArrayView1<S>,
        grad: ArrayView1<S>,
        prev: Option<(ArrayView1<S>, ArrayView1<S>)>,
    ) -> Result<BregmanKernel<S>> {
        match &mut self.kind {
            PlanKind::Fixed(kernel) => Ok(kernel.clone()),
            PlanKind::Sequence(seq) => Ok(seq[k.min(seq.len() - 1)].clone()),
            PlanKind::Bb { weights } => {
                if let Some((xp, gp)) = prev {
                    for i in 0..weights.len() {
                        let dx = x[i] - xp[i];
                        if dx != S::zero() {
                            let ratio = ((grad[i] - gp[i]) / dx).abs();
                            if ratio.is_finite() {
                                weights[i] = ratio.max(self.m).min(self.big_m);
                            }
                        }
                    }
                }
                BregmanKernel::diagonal(weights.clone())
            }
        }
    }
}

/// Step sizes `ε^k`; the last value repeats once exhausted.
#[derive(Debug, Clone)]
pub struct EpsSchedule<S> {
    values: Vec<S>,
    lo: S,
    hi: S,
}

impl<S: Scalar> EpsSchedule<S> {
    pub fn constant(eps: S) -> Result<Self> {
        Self::sequence(vec![eps], eps, eps)
    }

    pub fn sequence(values: Vec<S>, lo: S, hi: S) -> Result<Self> {
        if values.is_empty() || !(lo > S::zero()) || !(lo <= hi) || !hi.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "step schedule needs values and 0 < eps_lo <= eps_hi, got [{lo}, {hi}]"
            )));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= lo && **v <= hi)) {
            return Err(Error::InvalidArgument(format!(
                "step {v} lies outside [{lo}, {hi}]"
            )));
        }
        Ok(Self { values, lo, hi })
    }

    pub fn at(&self, k: usize) -> S {
        self.values[k.min(self.values.len() - 1)]
    }

    pub fn lo(&self) -> S {
        self.lo
    }

    pub fn hi(&self) -> S {
        self.hi
    }
}

#[cfg(test)]
#[allow(clippy::single_range_in_vec_init)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn even_blocks_cover_range() {
        assert_eq!(even_blocks(10, 4), vec![0..2, 2..4, 4..6, 6..10]);
        assert_eq!(even_blocks(40, 4), vec![0..10, 10..20, 20..30, 30..40]);
    }

    #[test]
    fn block_curvature_validation() {
        let q = array![[1.0, 0.5], [0.5, 2.0]];
        let c = BlockCurvature::new(&q, &[0..1, 1..2], &[1.0, 1.0]).unwrap();
        assert_eq!((c.m, c.big_m), (2.0, 3.0));
        assert!(BlockCurvature::new(&q, &[0..1], &[1.0]).is_err());
        assert!(BlockCurvature::new(&q, &[1..2, 0..1], &[1.0, 1.0]).is_err());
        assert!(BlockCurvature::new(&q, &[0..2], &[-3.0]).is_err());
    }

    #[test]
    fn eps_schedule_bounds() {
        assert!(EpsSchedule::sequence(vec![0.1, 0.3], 0.1, 0.2).is_err());
        let e = EpsSchedule::sequence(vec![0.1, 0.2], 0.1, 0.2).unwrap();
        assert_eq!((e.at(0), e.at(5)), (0.1, 0.2));
    }
}
