//! Sampling charts and atlases.

/// A parameterization of a target space by a unit hypercube.
///
/// `forward` maps primary coordinates to the target space, `right_inverse`
/// maps a target point plus `reverse_dim` uniform numbers back to primary
/// coordinates such that `forward(right_inverse(x, v)) == x`, and `density`
/// is the pdf of `forward(U)` for uniform `U` with respect to the target
/// measure. A density of exactly zero means "not representable in this chart".
pub trait SamplingChart: Send + Sync {
    type Point;

    fn dim(&self) -> usize;

    fn reverse_dim(&self) -> usize;

    /// `None` when the forward image is undefined (e.g. an escaped ray).
    fn forward(&self, u: &[f64]) -> Option<Self::Point>;

    /// `None` when `x` cannot be represented in this chart.
    fn right_inverse(&self, x: &Self::Point, v: &[f64]) -> Option<Vec<f64>>;

    fn density(&self, x: &Self::Point) -> f64;

    /// Density with which `right_inverse(x, ·)` produces `u`, where
    /// `x = forward(u)`.
    ///
    /// When the right inverse samples each fiber `{u : forward(u) = x}` with
    /// its conditional distribution this is `r(u) = 1 / density(x)`, which is
    /// the default. Charts whose inverse picks fiber branches with other
    /// probabilities must override it, otherwise chart swaps lose detailed
    /// balance. Returns `f64::INFINITY` for zero-density points.
    fn inverse_density(&self, u: &[f64], x: &Self::Point) -> f64 {
        let _ = u;
        let p = self.density(x);
        if p > 0.0 {
            1.0 / p
        } else {
            f64::INFINITY
        }
    }
}

/// A point of the extended state space: chart index plus coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartPoint {
    pub chart: usize,
    pub u: Vec<f64>,
}

impl ChartPoint {
    pub fn new(chart: usize, u: Vec<f64>) -> Self {
        Self { chart, u }
    }

    pub fn in_unit_cube(&self) -> bool {
        self.u.iter().all(|&x| (0.0..=1.0).contains(&x))
    }
}

pub type BoxedChart<P> = Box<dyn SamplingChart<Point = P>>;

/// An ordered family of charts of the same target space.
///
/// When `identity` is set, the target space itself is treated as an extra
/// chart with density 1, which enters every weighted-target denominator.
pub struct SamplingAtlas<P> {
    charts: Vec<BoxedChart<P>>,
    identity: bool,
}

impl<P> SamplingAtlas<P> {
    pub fn new(charts: Vec<BoxedChart<P>>) -> Self {
        Self { charts, identity: false }
    }

    pub fn with_identity_chart(mut self, identity: bool) -> Self {
        self.identity = identity;
        self
    }

    pub fn has_identity_chart(&self) -> bool {
        self.identity
    }

    pub fn len(&self) -> usize {
        self.charts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.charts.is_empty()
    }

    pub fn chart(&self, i: usize) -> &dyn SamplingChart<Point = P> {
        self.charts[i].as_ref()
    }

    pub fn charts(&self) -> impl Iterator<Item = &dyn SamplingChart<Point = P>> {
        self.charts.iter().map(|c| c.as_ref())
    }

    pub fn forward(&self, point: &ChartPoint) -> Option<P> {
        self.charts.get(point.chart)?.forward(&point.u)
    }

    /// Sum of all chart densities at `x`, the weighted-target denominator.
    pub fn density_sum(&self, x: &P) -> f64 {
        let sum: f64 = self.charts.iter().map(|c| c.density(x)).sum();
        if self.identity {
            sum + 1.0
        } else {
            sum
        }
    }

    /// Balance-heuristic weight of chart `i` at `x`.
    pub fn balance_weight(&self, i: usize, x: &P) -> f64 {
        let denom = self.density_sum(x);
        if denom > 0.0 {
            self.charts[i].density(x) / denom
        } else {
            0.0
        }
    }
}


#[cfg(test)]
mod tests {
    use super::testing::*;
    use super::*;
    use rand::Rng;

    #[test]
    fn right_inverse_law_on_toy_charts() {
        let mut rng = crate::rng::stream(1, 0);
        let charts: Vec<BoxedChart<f64>> = vec![Box::new(UnitChart), Box::new(SqrtChart), Box::new(FoldChart)];
        for chart in &charts {
            for _ in 0..100_000 {
                let u = [rng.gen::<f64>()];
                let x = chart.forward(&u).unwrap();
                if chart.density(&x) == 0.0 {
                    continue;
                }
                let v = [rng.gen::<f64>()];
                let back = chart.right_inverse(&x, &v).unwrap();
                let x2 = chart.forward(&back).unwrap();
                assert!((x - x2).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identity_chart_adds_unit_density() {
        let atlas = SamplingAtlas::new(vec![Box::new(UnitChart) as BoxedChart<f64>, Box::new(SqrtChart)]);
        assert!((atlas.density_sum(&0.5) - 2.0).abs() < 1e-15);
        let atlas = atlas.with_identity_chart(true);
        assert!((atlas.density_sum(&0.5) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn balance_weights_sum_to_one() {
        let atlas = SamplingAtlas::new(vec![Box::new(UnitChart) as BoxedChart<f64>, Box::new(SqrtChart)]);
        for x in [0.1, 0.4, 0.9] {
            let s = atlas.balance_weight(0, &x) + atlas.balance_weight(1, &x);
            assert!((s - 1.0).abs() < 1e-12);
        }
    }
}
