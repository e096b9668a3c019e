//! Transnormal functions `f` with `<grad f, grad f>_g = a o f` and their
//! profiles `a`, plus the built-in catalog and a numerical transnormality
//! verifier.

mod catalog;

pub use catalog::{
    builtin_catalog, cartan_munzner, desitter_arccos, distance_latitude, distance_profile,
    hahn_quadratic, lookup, real_line_identity, CatalogEntry,
};

use crate::error::{Error, Result};
use crate::geometry::{self, ChartPoint, GradientMode, ManifoldModel, ScalarField};
use crate::interval::Interval;
use crate::verify::ResidualReport;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

type ValueFn = dyn Fn(&ChartPoint) -> Result<f64> + Send + Sync;
type PartialsFn = dyn Fn(&ChartPoint) -> Result<Vec<f64>> + Send + Sync;
type LevelSamplerFn = dyn Fn(f64, &mut ChaCha8Rng) -> ChartPoint + Send + Sync;

/// The profile `a` of a transnormal function, with its derivative and the
/// image interval of `f` as domain.
#[derive(Clone)]
pub struct ProfileFunction {
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    deriv: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    domain: Interval,
    formula: String,
}

impl ProfileFunction {
    pub fn new(
        formula: impl Into<String>,
        domain: Interval,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        deriv: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ProfileFunction {
            eval: Arc::new(eval),
            deriv: Arc::new(deriv),
            domain,
            formula: formula.into(),
        }
    }

    pub fn constant(value: f64, domain: Interval) -> Self {
        ProfileFunction::new(format!("{value}"), domain, move |_| value, |_| 0.0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.eval)(t)
    }

    pub fn deriv(&self, t: f64) -> f64 {
        (self.deriv)(t)
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn formula(&self) -> &str {
        &self.formula
    }

    /// Same profile restricted (or extended) to a different image interval.
    pub fn with_domain(&self, domain: Interval) -> Self {
        ProfileFunction {
            eval: self.eval.clone(),
            deriv: self.deriv.clone(),
            domain,
            formula: self.formula.clone(),
        }
    }
}

impl std::fmt::Debug for ProfileFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProfileFunction")
            .field("formula", &self.formula)
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

/// A transnormal function on a manifold model.
///
/// Immutable after construction; evaluation is pure and thread-safe.
#[derive(Clone)]
pub struct TransnormalFunction {
    label: String,
    model: Arc<ManifoldModel>,
    value: Arc<ValueFn>,
    partials: Option<Arc<PartialsFn>>,
    profile: ProfileFunction,
    focal_values: Vec<f64>,
    level_sampler: Option<Arc<LevelSamplerFn>>,
}

impl TransnormalFunction {
    pub fn new(
        label: impl Into<String>,
        model: Arc<ManifoldModel>,
        value: impl Fn(&ChartPoint) -> Result<f64> + Send + Sync + 'static,
        profile: ProfileFunction,
        focal_values: Vec<f64>,
    ) -> Self {
        TransnormalFunction {
            label: label.into(),
            model,
            value: Arc::new(value),
            partials: None,
            profile,
            focal_values,
            level_sampler: None,
        }
    }

    /// Attach analytic coordinate partials (of a smooth extension).
    pub fn with_partials(
        mut self,
        partials: impl Fn(&ChartPoint) -> Result<Vec<f64>> + Send + Sync + 'static,
    ) -> Self {
        self.partials = Some(Arc::new(partials));
        self
    }

    /// Attach a closed-form level-set sampler.
    pub fn with_level_sampler(
        mut self,
        sampler: impl Fn(f64, &mut ChaCha8Rng) -> ChartPoint + Send + Sync + 'static,
    ) -> Self {
        self.level_sampler = Some(Arc::new(sampler));
        self
    }

    /// Override the declared image interval (semi-Riemannian catalog entries
    /// leave it to the caller).
    pub fn with_image(mut self, image: Interval) -> Self {
        self.profile = self.profile.with_domain(image);
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn model(&self) -> &ManifoldModel {
        &self.model
    }

    pub fn model_arc(&self) -> Arc<ManifoldModel> {
        self.model.clone()
    }

    pub fn profile(&self) -> &ProfileFunction {
        &self.profile
    }

    pub fn focal_values(&self) -> &[f64] {
        &self.focal_values
    }

    pub fn value(&self, point: &ChartPoint) -> Result<f64> {
        (self.value)(point)
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.partials.is_some()
    }

    /// Preferred differentiation mode: analytic when available.
    pub fn gradient_mode(&self) -> GradientMode {
        if self.partials.is_some() {
            GradientMode::Analytic
        } else {
            GradientMode::FiniteDifference(None)
        }
    }

    pub fn as_field(&self) -> &dyn ScalarField {
        self
    }

    pub(crate) fn sample_level(&self, level: f64, rng: &mut ChaCha8Rng) -> Option<ChartPoint> {
        self.level_sampler
            .as_ref()
            .map(|sampler| sampler(level, rng))
    }

    pub fn catalog_entry(&self) -> CatalogEntry {
        CatalogEntry::from_function(self)
    }
}

impl ScalarField for TransnormalFunction {
    fn value(&self, point: &ChartPoint) -> Result<f64> {
        (self.value)(point)
    }

    fn partials(&self, point: &ChartPoint) -> Option<Result<Vec<f64>>> {
        self.partials.as_ref().map(|p| p(point))
    }
}

impl std::fmt::Debug for TransnormalFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TransnormalFunction")
            .field("label", &self.label)
            .field("model", &self.model.describe())
            .field("profile", &self.profile.formula())
            .field("focal_values", &self.focal_values)
            .finish_non_exhaustive()
    }
}

/// Profile values this close to zero mark a point as focal-adjacent.
const PROFILE_FLOOR: f64 = 1e-6;
/// Distance-type profiles never vanish, so additionally keep clear of the
/// focal values themselves.
const FOCAL_RADIUS: f64 = 2e-3;
const SAMPLE_ATTEMPT_FACTOR: usize = 200;

/// Draw one pseudorandom regular point: away from profile zeros and from
/// declared focal values.
pub(crate) fn sample_regular_point(
    f: &TransnormalFunction,
    rng: &mut ChaCha8Rng,
) -> Result<(ChartPoint, f64)> {
    for _ in 0..SAMPLE_ATTEMPT_FACTOR {
        let point = geometry::random_point(f.model(), rng);
        let t = match f.value(&point) {
            Ok(t) => t,
            Err(_) => continue,
        };
        if !f.profile().domain().contains(t) {
            continue;
        }
        if f.profile().eval(t).abs() < PROFILE_FLOOR {
            continue;
        }
        if f
            .focal_values()
            .iter()
            .any(|fv| (t - fv).abs() < FOCAL_RADIUS)
        {
            continue;
        }
        return Ok((point, t));
    }
    Err(Error::NoRegularPoints)
}

/// Numerically verify the transnormal identity `<grad f, grad f> = a o f`
/// at `count` pseudorandom regular points.
pub fn verify_transnormal(
    f: &TransnormalFunction,
    count: usize,
    seed: u64,
    tol: f64,
) -> Result<ResidualReport> {
    assert!(count >= 1, "verify_transnormal needs at least one sample");
    let mut rng = crate::geometry::sample_rng(seed);
    let mode = f.gradient_mode();
    let mut max_abs = f64::NEG_INFINITY;
    let mut sum = 0.0;
    let mut worst: Option<ChartPoint> = None;
    for _ in 0..count {
        let (point, t) = sample_regular_point(f, &mut rng)?;
        let lhs = geometry::gradient_norm_sq(f.model(), f.as_field(), &point, mode)?;
        let residual = (lhs - f.profile().eval(t)).abs();
        sum += residual;
        if residual > max_abs {
            max_abs = residual;
            worst = Some(point);
        }
    }
    Ok(ResidualReport {
        sample_count: count,
        max_abs,
        mean_abs: sum / count as f64,
        worst_point: worst.expect("count >= 1"),
        tolerance: tol,
        pass: max_abs <= tol,
        gradient_mode: match mode {
            GradientMode::Analytic => "analytic".into(),
            GradientMode::FiniteDifference(_) => "finite-difference".into(),
        },
        seed,
    })
}
