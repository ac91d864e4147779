use ndarray::{Array1, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::Objective;
use crate::Scalar;

/// `𝔅(x̄; η, ν) = {x : ‖x − x̄‖ < η, F̄ < F(x) < F̄ + ν}`.
#[derive(Debug, Clone, Serialize)]
pub struct Region<S> {
    pub x_bar: Array1<S>,
    pub eta: S,
    pub nu: S,
    pub f_bar: S,
}

impl<S: Scalar> Region<S> {
    /// Region around `x_bar` with `F̄ = F(x̄)`.
    pub fn new(obj: &dyn Objective<S>, x_bar: Array1<S>, eta: S, nu: S) -> Result<Self> {
        let f_bar = obj.objective(x_bar.view())?;
        Self::with_level(x_bar, eta, nu, f_bar)
    }

    /// Region with an explicit reference value, e.g. `F*` for a band around
    /// the solution set.
    pub fn with_level(x_bar: Array1<S>, eta: S, nu: S, f_bar: S) -> Result<Self> {
        if !(eta > S::zero()) || !(nu > S::zero()) || !f_bar.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "region needs eta > 0, nu > 0 and finite F_bar, got eta={eta}, nu={nu}, F_bar={f_bar}"
            )));
        }
        if !linalg::is_finite(x_bar.view()) {
            return Err(Error::InvalidArgument("region center has non-finite entries".into()));
        }
        Ok(Self { x_bar, eta, nu, f_bar })
    }

    pub fn dim(&self) -> usize {
        self.x_bar.len()
    }

    pub fn in_value_band(&self, fx: S) -> bool {
        fx > self.f_bar && fx < self.f_bar + self.nu
    }

    pub fn in_ball(&self, x: ArrayView1<S>) -> bool {
        linalg::dist(x, self.x_bar.view()) < self.eta
    }

    pub fn contains(&self, obj: &dyn Objective<S>, x: ArrayView1<S>) -> Result<bool> {
        Ok(self.in_ball(x) && self.in_value_band(obj.objective(x)?))
    }

    /// `𝔅(x̄; η·radius_factor, ν/nu_divisor)`.
    pub fn shrink(&self, radius_factor: S, nu_divisor: S) -> Result<Self> {
        Self::with_level(self.x_bar.clone(), self.eta * radius_factor, self.nu / nu_divisor, self.f_bar)
    }
}

/// A point with its objective value.
#[derive(Debug, Clone)]
pub struct Sample<S> {
    pub x: Array1<S>,
    pub f: S,
}

/// Seeded rejection sampler on the uniform distribution of a ball.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Sampler {
    pub n_samples: usize,
    pub seed: u64,
    /// Draw budget as a multiple of `n_samples`.
    pub max_draw_factor: usize,
}

/// Fewer accepted samples than this is an error.
pub const MIN_ACCEPTED: usize = 30;

impl Default for Sampler {
    fn default() -> Self {
        Self {
            n_samples: 1000,
            seed: 0,
            max_draw_factor: 1000,
        }
    }
}

impl Sampler {
    pub fn new(n_samples: usize, seed: u64) -> Self {
        Self {
            n_samples,
            seed,
            ..Self::default()
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    /// Uniform draw from the open ball `𝔹(center; radius)`.
    pub fn draw_ball<S: Scalar, R: Rng>(rng: &mut R, center: ArrayView1<S>, radius: S) -> Array1<S> {
        let n = center.len();
        let dir: Array1<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = dir.dot(&dir).sqrt().max(f64::MIN_POSITIVE);
        let r = radius.as_f64() * rng.random::<f64>().powf(1.0 / n as f64);
        Array1::from_shape_fn(n, |i| center[i] + S::lit(dir[i] / norm * r))
    }

    /// `n_samples` points of the ball around `center`, with no value filter.
    pub fn sample_ball<S: Scalar>(&self, center: ArrayView1<S>, radius: S) -> Vec<Array1<S>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.n_samples)
            .map(|_| Self::draw_ball(&mut rng, center, radius))
            .collect()
    }

    /// Rejection sampling of `region`. Stops after `n_samples` acceptances or
    /// when the draw budget runs out; fewer than [`MIN_ACCEPTED`] is an error.
    pub fn sample<S: Scalar>(&self, obj: &dyn Objective<S>, region: &Region<S>) -> Result<Vec<Sample<S>>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let budget = self.n_samples.saturating_mul(self.max_draw_factor).max(self.n_samples);
        let mut out = Vec::with_capacity(self.n_samples);
        for _ in 0..budget {
            if out.len() == self.n_samples {
                break;
            }
            let x = Self::draw_ball(&mut rng, region.x_bar.view(), region.eta);
            let f = obj.objective(x.view())?;
            if region.in_value_band(f) && region.in_ball(x.view()) {
                out.push(Sample { x, f });
            }
        }
        if out.len() < MIN_ACCEPTED.min(self.n_samples.max(1)) {
            return Err(Error::InsufficientSamples {
                accepted: out.len(),
                required: MIN_ACCEPTED,
            });
        }
        if out.len() < self.n_samples {
            log::warn!(
                "sampler accepted {} of {} requested points within the draw budget",
                out.len(),
                self.n_samples
            );
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{CompositeProblem, Quadratic, Zero};
    use ndarray::array;

    fn half_sq() -> CompositeProblem<f64> {
        CompositeProblem::new(Quadratic::diagonal(array![1.0, 1.0], array![0.0, 0.0]).unwrap(), Zero)
    }

    #[test]
    fn samples_respect_membership_and_are_reproducible() {
        let p = half_sq();
        let region = Region::new(&p, array![0.0, 0.0], 1.0, 0.2).unwrap();
        let s = Sampler::new(200, 3);
        let a = s.sample(&p, &region).unwrap();
        let b = s.sample(&p, &region).unwrap();
        assert_eq!(a.len(), 200);
        for (u, v) in a.iter().zip(&b) {
            assert_eq!(u.x, v.x);
            assert!(region.contains(&p, u.x.view()).unwrap());
        }
    }

    #[test]
    fn empty_band_is_insufficient() {
        let p = half_sq();
        // F ≥ 2 never happens inside the unit ball.
        let region = Region::with_level(array![0.0, 0.0], 1.0, 1.0, 2.0).unwrap();
        let mut s = Sampler::new(100, 1);
        s.max_draw_factor = 10;
        assert!(matches!(s.sample(&p, &region), Err(Error::InsufficientSamples { .. })));
    }

    #[test]
    fn ball_draws_stay_inside() {
        let s = Sampler::new(500, 9);
        let c = array![1.0, -2.0, 0.5];
        for x in s.sample_ball(c.view(), 0.3) {
            assert!(linalg::dist(x.view(), c.view()) < 0.3);
        }
    }
}
