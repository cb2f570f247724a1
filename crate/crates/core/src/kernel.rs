//! Primary-space transition kernels.

use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProposalKind {
    Small,
    Large,
}

pub trait TransitionKernel: Send + Sync {
    /// Writes a proposal for `u` into `out`, which has the same length.
    fn propose<R: Rng + ?Sized>(&self, u: &[f64], out: &mut [f64], rng: &mut R) -> ProposalKind
    where
        Self: Sized;

    /// Density of proposing `to` from `from`. Only ratios are meaningful.
    fn transition_density(&self, from: &[f64], to: &[f64]) -> f64;

    fn is_symmetric(&self) -> bool;
}

/// Wraps `x` into `[0, 1)`.
#[inline]
pub fn wrap_unit(x: f64) -> f64 {
    let y = x - x.floor();
    if y >= 1.0 {
        0.0
    } else {
        y
    }
}

/// Per-coordinate mixture of a wrapped Gaussian of scale `sigma` and a
/// Kelemen-style exponential step between `sigma / 16` and `sigma`, both
/// symmetric on the torus, with full uniform redraws at `large_step_prob`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PrimaryKernel {
    pub sigma: f64,
    pub large_step_prob: f64,
}

impl Default for PrimaryKernel {
    fn default() -> Self {
        Self { sigma: 1.0 / 64.0, large_step_prob: 0.3 }
    }
}

impl PrimaryKernel {
    pub fn new(sigma: f64, large_step_prob: f64) -> Self {
        Self { sigma, large_step_prob }
    }

    #[inline]
    fn small_offset<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let sel: f64 = rng.gen();
        let a: f64 = rng.gen();
        let b: f64 = rng.gen();
        if sel < 0.5 {
            // Box-Muller, one branch.
            let r = (-2.0 * (1.0 - a).ln()).sqrt();
            self.sigma * r * (2.0 * std::f64::consts::PI * b).cos()
        } else {
            let s1 = self.sigma / 16.0;
            let mag = self.sigma * (-(self.sigma / s1).ln() * a).exp();
            if b < 0.5 {
                mag
            } else {
                -mag
            }
        }
    }

    /// Perturbs every coordinate of `u` in place with a small step.
    pub fn perturb_in_place<R: Rng + ?Sized>(&self, u: &mut [f64], rng: &mut R) {
        for x in u.iter_mut() {
            *x = wrap_unit(*x + self.small_offset(rng));
        }
    }
}

impl TransitionKernel for PrimaryKernel {
    fn propose<R: Rng + ?Sized>(&self, u: &[f64], out: &mut [f64], rng: &mut R) -> ProposalKind {
        if rng.gen::<f64>() < self.large_step_prob {
            for x in out.iter_mut() {
                *x = rng.gen();
            }
            ProposalKind::Large
        } else {
            out.copy_from_slice(u);
            self.perturb_in_place(out, rng);
            ProposalKind::Small
        }
    }

    /// The kernel is symmetric, so a constant is a valid density for ratios.
    fn transition_density(&self, _from: &[f64], _to: &[f64]) -> f64 {
        1.0
    }

    fn is_symmetric(&self) -> bool {
        true
    }
}

/// Proposes the current state unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullKernel;

impl TransitionKernel for NullKernel {
    fn propose<R: Rng + ?Sized>(&self, u: &[f64], out: &mut [f64], _rng: &mut R) -> ProposalKind {
        out.copy_from_slice(u);
        ProposalKind::Small
    }

    fn transition_density(&self, _from: &[f64], _to: &[f64]) -> f64 {
        1.0
    }

    fn is_symmetric(&self) -> bool {
        true
    }
}
