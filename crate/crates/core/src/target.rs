//! Target distributions over charted primary spaces.

use crate::chart::SamplingAtlas;

/// A non-negative scalar integrand on the target space.
pub trait Integrand<P>: Send + Sync {
    /// Scalar value `f*(x)`, e.g. the maximum color component.
    fn value(&self, x: &P) -> f64;

    /// Auxiliary indicator used by [`TargetMode::Auxiliary`]. Defaults to
    /// the support of `value`.
    fn auxiliary(&self, x: &P) -> f64 {
        if self.value(x) > 0.0 {
            1.0
        } else {
            0.0
        }
    }
}

impl<P, F> Integrand<P> for F
where
    F: Fn(&P) -> f64 + Send + Sync,
{
    fn value(&self, x: &P) -> f64 {
        self(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetMode {
    /// `f(x) / p_i(x)`: the pull-back of `f` into chart `i`.
    ImportanceSampled,
    /// `f(x) / sum_j p_j(x)`: identical in every chart.
    Weighted,
    /// A visibility-like indicator pulled back into chart `i`.
    Auxiliary,
}

/// Density on the extended space, evaluated through chart `i`.
pub trait TargetDistribution<P>: Send + Sync {
    /// Target value of `x` seen as the image of a point in chart `chart`.
    fn eval(&self, chart: usize, x: &P) -> f64;
}

/// Built-in target modes over an atlas and an integrand.
pub struct AtlasTarget<'a, P, I: ?Sized> {
    pub atlas: &'a SamplingAtlas<P>,
    pub integrand: &'a I,
    pub mode: TargetMode,
}

impl<'a, P, I: Integrand<P> + ?Sized> AtlasTarget<'a, P, I> {
    pub fn new(atlas: &'a SamplingAtlas<P>, integrand: &'a I, mode: TargetMode) -> Self {
        Self { atlas, integrand, mode }
    }
}

impl<'a, P, I> TargetDistribution<P> for AtlasTarget<'a, P, I>
where
    P: Sync,
    I: Integrand<P> + ?Sized,
{
    fn eval(&self, chart: usize, x: &P) -> f64 {
        match self.mode {
            TargetMode::ImportanceSampled => {
                let p = self.atlas.chart(chart).density(x);
                if p > 0.0 {
                    self.integrand.value(x) / p
                } else {
                    0.0
                }
            }
            TargetMode::Weighted => {
                let p = self.atlas.density_sum(x);
                if p > 0.0 {
                    self.integrand.value(x) / p
                } else {
                    0.0
                }
            }
            TargetMode::Auxiliary => {
                if self.atlas.chart(chart).density(x) > 0.0 {
                    self.integrand.auxiliary(x)
                } else {
                    0.0
                }
            }
        }
    }
}
