//! Manifold models, metric evaluation and gradients.
//!
//! Models are either chart-based (semi-Euclidean space, with coordinates
//! equal to the chart) or embedded (pseudo-spheres and the hyperboloid model
//! of hyperbolic space, represented by ambient coordinates with tangent-space
//! projection). Warped products `L x_alpha N` carry `g = -g_L + alpha^2 g_N`
//! and concatenate the factor representations.
//!
//! Every point carries a *frame*: a basis of the tangent space at the point
//! (the coordinate basis for chart models, a pseudo-orthonormal basis for
//! embedded ones). Tangent vectors returned by [`gradient`] and consumed by
//! [`inner_g`] are coefficient vectors with respect to that frame, so
//! `inner_g(grad u, grad u)` is exactly `<grad u, grad u>_g`.

pub(crate) mod sample;

pub use sample::{random_point, sample_level_set, sample_rng};

use crate::error::{Error, Result};
use crate::transnormal::ProfileFunction;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use std::sync::Arc;

/// Scalar function of raw factor coordinates, used to feed the warp.
pub type CoordScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Metric signature: `negative_count` timelike directions out of `dimension`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Signature {
    pub negative_count: usize,
    pub dimension: usize,
}

impl Signature {
    pub fn new(negative_count: usize, dimension: usize) -> Self {
        assert!(dimension >= 1, "dimension must be at least 1");
        assert!(
            negative_count <= dimension,
            "negative_count {negative_count} exceeds dimension {dimension}"
        );
        Self {
            negative_count,
            dimension,
        }
    }

    pub fn riemannian(dimension: usize) -> Self {
        Self::new(0, dimension)
    }

    pub fn is_riemannian(&self) -> bool {
        self.negative_count == 0
    }

    /// Sign of the i-th coordinate direction (negatives first).
    pub fn eps(&self, i: usize) -> f64 {
        if i < self.negative_count {
            -1.0
        } else {
            1.0
        }
    }
}

/// How point coordinates are to be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Representation {
    /// Coordinates are chart coordinates.
    Chart,
    /// Coordinates are ambient coordinates of an embedded model.
    Ambient,
    /// Concatenation of the factor representations of a warped product.
    Product,
}

/// Warped product `L x_alpha N` with metric `-g_L + alpha^2 g_N`.
///
/// `warp` is the profile of the warping function over the values of a scalar
/// coordinate on `L` (extracted by `left_value`); both factors must be
/// Riemannian.
#[derive(Clone)]
pub struct WarpedProductModel {
    pub left: Box<ManifoldModel>,
    pub right: Box<ManifoldModel>,
    pub warp: ProfileFunction,
    left_value: CoordScalarFn,
}

impl std::fmt::Debug for WarpedProductModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WarpedProductModel")
            .field("left", &self.left)
            .field("right", &self.right)
            .field("warp", &self.warp.formula())
            .finish_non_exhaustive()
    }
}

/// A manifold model from the built-in family.
#[derive(Debug, Clone)]
pub enum ManifoldModel {
    /// Semi-Euclidean space with the flat metric `diag(-1,...,-1,1,...,1)`
    /// (timelike directions first).
    SemiEuclidean { signature: Signature },
    /// The quadric `<x, x> = +1` in a semi-Euclidean ambient space
    /// (timelike directions first); dimension is `ambient.dimension - 1`.
    PseudoSphere { ambient: Signature },
    /// Hyperboloid model of hyperbolic space: `<x, x> = -1` with the
    /// timelike axis *last* and last coordinate positive.
    Hyperbolic { ambient: Signature },
    WarpedProduct(WarpedProductModel),
}

impl ManifoldModel {
    pub fn semi_euclidean(negative_count: usize, dimension: usize) -> Self {
        ManifoldModel::SemiEuclidean {
            signature: Signature::new(negative_count, dimension),
        }
    }

    /// Round Riemannian sphere of dimension `n` embedded in `R^{n+1}`.
    pub fn sphere(n: usize) -> Self {
        ManifoldModel::PseudoSphere {
            ambient: Signature::riemannian(n + 1),
        }
    }

    /// Pseudo-sphere of dimension `n` and signature `s`.
    pub fn pseudo_sphere(s: usize, n: usize) -> Self {
        ManifoldModel::PseudoSphere {
            ambient: Signature::new(s, n + 1),
        }
    }

    /// Hyperbolic space of dimension `n` (hyperboloid model).
    pub fn hyperbolic(n: usize) -> Self {
        ManifoldModel::Hyperbolic {
            ambient: Signature::new(1, n + 1),
        }
    }

    /// Warped product over a 1-dimensional Euclidean base line, with the
    /// line coordinate feeding the warp (e.g. de Sitter as `R x_cosh S^n`).
    pub fn warped_line(right: ManifoldModel, warp: ProfileFunction) -> Self {
        Self::warped_product(
            ManifoldModel::semi_euclidean(0, 1),
            right,
            warp,
            Arc::new(|coords: &[f64]| coords[0]),
        )
    }

    pub fn warped_product(
        left: ManifoldModel,
        right: ManifoldModel,
        warp: ProfileFunction,
        left_value: CoordScalarFn,
    ) -> Self {
        assert!(
            left.signature().is_riemannian() && right.signature().is_riemannian(),
            "warped product factors must be Riemannian"
        );
        ManifoldModel::WarpedProduct(WarpedProductModel {
            left: Box::new(left),
            right: Box::new(right),
            warp,
            left_value,
        })
    }

    /// Intrinsic signature of the model.
    pub fn signature(&self) -> Signature {
        match self {
            ManifoldModel::SemiEuclidean { signature } => *signature,
            ManifoldModel::PseudoSphere { ambient } => {
                // The normal <x, x> = 1 is spacelike, so the induced metric
                // keeps all ambient timelike directions.
                Signature::new(ambient.negative_count, ambient.dimension - 1)
            }
            ManifoldModel::Hyperbolic { ambient } => Signature::riemannian(ambient.dimension - 1),
            ManifoldModel::WarpedProduct(w) => {
                let l = w.left.signature();
                let r = w.right.signature();
                // All of g_L flips sign in g = -g_L + alpha^2 g_N.
                Signature::new(l.dimension, l.dimension + r.dimension)
            }
        }
    }

    /// Intrinsic dimension.
    pub fn dimension(&self) -> usize {
        self.signature().dimension
    }

    /// Length of the coordinate vector representing a point.
    pub fn coord_len(&self) -> usize {
        match self {
            ManifoldModel::SemiEuclidean { signature } => signature.dimension,
            ManifoldModel::PseudoSphere { ambient } | ManifoldModel::Hyperbolic { ambient } => {
                ambient.dimension
            }
            ManifoldModel::WarpedProduct(w) => w.left.coord_len() + w.right.coord_len(),
        }
    }

    pub fn representation(&self) -> Representation {
        match self {
            ManifoldModel::SemiEuclidean { .. } => Representation::Chart,
            ManifoldModel::PseudoSphere { .. } | ManifoldModel::Hyperbolic { .. } => {
                Representation::Ambient
            }
            ManifoldModel::WarpedProduct(..) => Representation::Product,
        }
    }

    /// Short human-readable description, e.g. `R^3_1`, `S^2`, `R x_a S^3`.
    pub fn describe(&self) -> String {
        match self {
            ManifoldModel::SemiEuclidean { signature } => {
                if signature.is_riemannian() {
                    format!("R^{}", signature.dimension)
                } else {
                    format!("R^{}_{}", signature.dimension, signature.negative_count)
                }
            }
            ManifoldModel::PseudoSphere { ambient } => {
                if ambient.is_riemannian() {
                    format!("S^{}", ambient.dimension - 1)
                } else {
                    format!("S^{}_{}", ambient.dimension - 1, ambient.negative_count)
                }
            }
            ManifoldModel::Hyperbolic { ambient } => format!("H^{}", ambient.dimension - 1),
            ManifoldModel::WarpedProduct(w) => format!(
                "{} x_({}) {}",
                w.left.describe(),
                w.warp.formula(),
                w.right.describe()
            ),
        }
    }

    /// Ambient (or chart) bilinear form of the model's coordinate space.
    pub fn coord_inner(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            ManifoldModel::SemiEuclidean { signature } => {
                signed_inner(x, y, |i| signature.eps(i))
            }
            ManifoldModel::PseudoSphere { ambient } => signed_inner(x, y, |i| ambient.eps(i)),
            ManifoldModel::Hyperbolic { ambient } => {
                // Timelike axis last.
                let n = ambient.dimension - 1;
                signed_inner(x, y, |i| if i == n { -1.0 } else { 1.0 })
            }
            ManifoldModel::WarpedProduct(w) => {
                let nl = w.left.coord_len();
                w.left.coord_inner(&x[..nl], &y[..nl])
                    + w.right.coord_inner(&x[nl..], &y[nl..])
            }
        }
    }

    /// Deviation from the defining constraint (0 for chart models).
    pub fn constraint_deviation(&self, coords: &[f64]) -> f64 {
        match self {
            ManifoldModel::SemiEuclidean { .. } => 0.0,
            ManifoldModel::PseudoSphere { .. } => (self.coord_inner(coords, coords) - 1.0).abs(),
            ManifoldModel::Hyperbolic { .. } => {
                let q = (self.coord_inner(coords, coords) + 1.0).abs();
                let sheet = if *coords.last().unwrap() > 0.0 { 0.0 } else { f64::INFINITY };
                q.max(sheet)
            }
            ManifoldModel::WarpedProduct(w) => {
                let nl = w.left.coord_len();
                w.left
                    .constraint_deviation(&coords[..nl])
                    .max(w.right.constraint_deviation(&coords[nl..]))
            }
        }
    }

    /// Project ambient coordinates back onto the model (normalization onto
    /// the defining quadric; identity for chart models).
    pub fn project(&self, coords: &[f64]) -> Result<ChartPoint> {
        let projected = self.project_coords(coords)?;
        Ok(ChartPoint {
            coords: projected,
            representation: self.representation(),
        })
    }

    fn project_coords(&self, coords: &[f64]) -> Result<Vec<f64>> {
        match self {
            ManifoldModel::SemiEuclidean { .. } => Ok(coords.to_vec()),
            ManifoldModel::PseudoSphere { .. } => {
                let q = self.coord_inner(coords, coords);
                if q <= 0.0 {
                    return Err(Error::PointOffManifold { deviation: (q - 1.0).abs() });
                }
                let inv = 1.0 / q.sqrt();
                Ok(coords.iter().map(|c| c * inv).collect())
            }
            ManifoldModel::Hyperbolic { .. } => {
                let q = self.coord_inner(coords, coords);
                if q >= 0.0 || *coords.last().unwrap() <= 0.0 {
                    return Err(Error::PointOffManifold { deviation: (q + 1.0).abs() });
                }
                let inv = 1.0 / (-q).sqrt();
                Ok(coords.iter().map(|c| c * inv).collect())
            }
            ManifoldModel::WarpedProduct(w) => {
                let nl = w.left.coord_len();
                let mut out = w.left.project_coords(&coords[..nl])?;
                out.extend(w.right.project_coords(&coords[nl..])?);
                Ok(out)
            }
        }
    }

    /// Warping value `alpha` at the left part of a warped-product point.
    pub fn warp_at(&self, coords: &[f64]) -> Result<f64> {
        match self {
            ManifoldModel::WarpedProduct(w) => {
                let nl = w.left.coord_len();
                let t = (w.left_value)(&coords[..nl]);
                let alpha = w.warp.eval(t);
                if alpha <= 0.0 {
                    Err(Error::NonpositiveWarping { value: alpha, t })
                } else {
                    Ok(alpha)
                }
            }
            _ => Err(Error::FieldEvaluationFailure(
                "warp_at called on a non-warped model".into(),
            )),
        }
    }
}

fn signed_inner(x: &[f64], y: &[f64], eps: impl Fn(usize) -> f64) -> f64 {
    x.iter()
        .zip(y)
        .enumerate()
        .map(|(i, (a, b))| eps(i) * a * b)
        .sum()
}

/// A point on a manifold model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChartPoint {
    coords: Vec<f64>,
    representation: Representation,
}

impl ChartPoint {
    pub fn new(model: &ManifoldModel, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != model.coord_len() {
            return Err(Error::DimensionMismatch {
                expected: model.coord_len(),
                got: coords.len(),
            });
        }
        Ok(ChartPoint {
            coords,
            representation: model.representation(),
        })
    }

    /// Construct without a model at hand; the caller vouches for the length.
    pub(crate) fn new_unchecked(coords: Vec<f64>, representation: Representation) -> Self {
        ChartPoint {
            coords,
            representation,
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    /// Split a warped-product point into its factor points.
    pub fn split(&self, model: &ManifoldModel) -> Result<(ChartPoint, ChartPoint)> {
        match model {
            ManifoldModel::WarpedProduct(w) => {
                let nl = w.left.coord_len();
                Ok((
                    ChartPoint::new(&w.left, self.coords[..nl].to_vec())?,
                    ChartPoint::new(&w.right, self.coords[nl..].to_vec())?,
                ))
            }
            _ => Err(Error::FieldEvaluationFailure(
                "split called on a non-product point".into(),
            )),
        }
    }

    /// Join factor points into a warped-product point.
    pub fn join(left: &ChartPoint, right: &ChartPoint) -> ChartPoint {
        let mut coords = left.coords.clone();
        coords.extend_from_slice(&right.coords);
        ChartPoint {
            coords,
            representation: Representation::Product,
        }
    }
}

/// A scalar field on a manifold model.
///
/// `partials` returns the coordinate partial derivatives of a smooth
/// extension of the field (ambient partials for embedded models); it is the
/// analytic-gradient hook used by [`gradient`] in analytic mode.
pub trait ScalarField {
    fn value(&self, point: &ChartPoint) -> Result<f64>;

    fn partials(&self, _point: &ChartPoint) -> Option<Result<Vec<f64>>> {
        None
    }
}

/// Wrap closures as a [`ScalarField`].
pub struct FnField<V, P = fn(&ChartPoint) -> Result<Vec<f64>>>
where
    V: Fn(&ChartPoint) -> Result<f64>,
    P: Fn(&ChartPoint) -> Result<Vec<f64>>,
{
    value: V,
    partials: Option<P>,
}

impl<V: Fn(&ChartPoint) -> Result<f64>> FnField<V> {
    pub fn new(value: V) -> Self {
        FnField {
            value,
            partials: None,
        }
    }
}

impl<V, P> FnField<V, P>
where
    V: Fn(&ChartPoint) -> Result<f64>,
    P: Fn(&ChartPoint) -> Result<Vec<f64>>,
{
    pub fn with_partials(value: V, partials: P) -> Self {
        FnField {
            value,
            partials: Some(partials),
        }
    }
}

impl<V, P> ScalarField for FnField<V, P>
where
    V: Fn(&ChartPoint) -> Result<f64>,
    P: Fn(&ChartPoint) -> Result<Vec<f64>>,
{
    fn value(&self, point: &ChartPoint) -> Result<f64> {
        (self.value)(point)
    }

    fn partials(&self, point: &ChartPoint) -> Option<Result<Vec<f64>>> {
        self.partials.as_ref().map(|p| p(point))
    }
}

/// Differentiation mode for [`gradient`] and friends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GradientMode {
    /// Use the field's analytic `partials`.
    Analytic,
    /// Central finite differences along the frame; `None` picks
    /// `cbrt(machine epsilon) * max(1, |coordinate|)` per direction.
    FiniteDifference(Option<f64>),
}

const CONSTRAINT_TOL: f64 = 1e-9;

fn check_on_manifold(model: &ManifoldModel, point: &ChartPoint) -> Result<()> {
    if point.coords.len() != model.coord_len() {
        return Err(Error::DimensionMismatch {
            expected: model.coord_len(),
            got: point.coords.len(),
        });
    }
    let dev = model.constraint_deviation(&point.coords);
    if dev > CONSTRAINT_TOL {
        return Err(Error::PointOffManifold { deviation: dev });
    }
    Ok(())
}

/// Tangent frame at a point: `dimension()` vectors of coordinate length.
///
/// Chart models use the coordinate basis. Embedded models build a
/// pseudo-orthonormal basis of the tangent space by pivoted Gram-Schmidt
/// with respect to the ambient form. Warped products concatenate factor
/// frames (zero-padded into the product coordinates).
pub fn frame(model: &ManifoldModel, point: &ChartPoint) -> Result<Vec<DVector<f64>>> {
    check_on_manifold(model, point)?;
    frame_unchecked(model, point.coords())
}

fn frame_unchecked(model: &ManifoldModel, coords: &[f64]) -> Result<Vec<DVector<f64>>> {
    match model {
        ManifoldModel::SemiEuclidean { signature } => Ok((0..signature.dimension)
            .map(|i| DVector::from_fn(signature.dimension, |j, _| f64::from(j == i)))
            .collect()),
        ManifoldModel::PseudoSphere { .. } | ManifoldModel::Hyperbolic { .. } => {
            embedded_frame(model, coords)
        }
        ManifoldModel::WarpedProduct(w) => {
            let nl = w.left.coord_len();
            let total = coords.len();
            let mut out = Vec::with_capacity(model.dimension());
            for v in frame_unchecked(&w.left, &coords[..nl])? {
                let mut padded = DVector::zeros(total);
                padded.rows_mut(0, nl).copy_from(&v);
                out.push(padded);
            }
            for v in frame_unchecked(&w.right, &coords[nl..])? {
                let mut padded = DVector::zeros(total);
                padded.rows_mut(nl, total - nl).copy_from(&v);
                out.push(padded);
            }
            Ok(out)
        }
    }
}

/// Pseudo-orthonormal tangent basis of an embedded quadric at `coords`.
fn embedded_frame(model: &ManifoldModel, coords: &[f64]) -> Result<Vec<DVector<f64>>> {
    let m = coords.len();
    let n = m - 1;
    // Euclidean normal of the level set <x,x> = c is the sign-twisted point.
    let mut normal = DVector::zeros(m);
    for i in 0..m {
        let e_i: Vec<f64> = (0..m).map(|j| f64::from(j == i)).collect();
        normal[i] = model.coord_inner(&e_i, coords);
    }
    let normal_sq = normal.dot(&normal);

    // Project the standard basis onto the tangent hyperplane and pick the n
    // best-conditioned candidates under the ambient form, orthogonalizing as
    // we go (two passes per vector for stability).
    let mut candidates: Vec<DVector<f64>> = (0..m)
        .map(|i| {
            let mut v = DVector::zeros(m);
            v[i] = 1.0;
            let c = v.dot(&normal) / normal_sq;
            v - &normal * c
        })
        .collect();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut signs: Vec<f64> = Vec::with_capacity(n);
    for _ in 0..n {
        let mut best: Option<(usize, f64)> = None;
        for (idx, cand) in candidates.iter().enumerate() {
            let mut v = cand.clone();
            for (b, sg) in basis.iter().zip(&signs) {
                let c = model.coord_inner(v.as_slice(), b.as_slice()) * sg;
                v -= b * c;
            }
            let norm = model.coord_inner(v.as_slice(), v.as_slice()).abs();
            if best.is_none_or(|(_, bn)| norm > bn) {
                best = Some((idx, norm));
            }
        }
        let (idx, norm) = best.expect("candidate set exhausted");
        if norm < 1e-12 {
            return Err(Error::PointOffManifold { deviation: norm });
        }
        let mut v = candidates.swap_remove(idx);
        for _pass in 0..2 {
            for (b, sg) in basis.iter().zip(&signs) {
                let c = model.coord_inner(v.as_slice(), b.as_slice()) * sg;
                v -= b * c;
            }
        }
        let q = model.coord_inner(v.as_slice(), v.as_slice());
        v /= q.abs().sqrt();
        signs.push(q.signum());
        basis.push(v);
    }
    Ok(basis)
}

/// Metric matrix `g_ij` in the frame basis at `point`.
///
/// For warped products this is block-diagonal with blocks `-g_L` and
/// `alpha^2 g_N`.
pub fn metric_at(model: &ManifoldModel, point: &ChartPoint) -> Result<DMatrix<f64>> {
    check_on_manifold(model, point)?;
    metric_unchecked(model, point.coords())
}

fn metric_unchecked(model: &ManifoldModel, coords: &[f64]) -> Result<DMatrix<f64>> {
    match model {
        ManifoldModel::SemiEuclidean { signature } => Ok(DMatrix::from_fn(
            signature.dimension,
            signature.dimension,
            |i, j| if i == j { signature.eps(i) } else { 0.0 },
        )),
        ManifoldModel::PseudoSphere { .. } | ManifoldModel::Hyperbolic { .. } => {
            let basis = embedded_frame(model, coords)?;
            let n = basis.len();
            Ok(DMatrix::from_fn(n, n, |i, j| {
                let v = model.coord_inner(basis[i].as_slice(), basis[j].as_slice());
                // The frame is pseudo-orthonormal by construction; snap the
                // rounding fuzz so downstream inverses are exact.
                if i == j {
                    v.signum()
                } else {
                    0.0
                }
            }))
        }
        ManifoldModel::WarpedProduct(w) => {
            let nl = w.left.coord_len();
            let alpha = model.warp_at(coords)?;
            let gl = metric_unchecked(&w.left, &coords[..nl])?;
            let gn = metric_unchecked(&w.right, &coords[nl..])?;
            let dl = gl.nrows();
            let dn = gn.nrows();
            let mut out = DMatrix::zeros(dl + dn, dl + dn);
            out.view_mut((0, 0), (dl, dl)).copy_from(&(-&gl));
            out.view_mut((dl, dl), (dn, dn))
                .copy_from(&(&gn * (alpha * alpha)));
            Ok(out)
        }
    }
}

/// Inverse metric `g^{ij}` in the frame basis at `point`.
pub fn inverse_metric_at(model: &ManifoldModel, point: &ChartPoint) -> Result<DMatrix<f64>> {
    let g = metric_at(model, point)?;
    invert_symmetric(&g)
}

pub(crate) fn invert_symmetric(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    g.clone().try_inverse().ok_or(Error::FieldEvaluationFailure(
        "metric matrix is singular".into(),
    ))
}

/// Directional derivatives `du(e_i)` of `field` along the frame at `point`.
pub fn differential(
    model: &ManifoldModel,
    field: &dyn ScalarField,
    point: &ChartPoint,
    mode: GradientMode,
) -> Result<DVector<f64>> {
    let basis = frame(model, point)?;
    match mode {
        GradientMode::Analytic => {
            let partials = field
                .partials(point)
                .ok_or_else(|| {
                    Error::FieldEvaluationFailure(
                        "analytic gradient requested but the field provides none".into(),
                    )
                })??;
            if partials.len() != point.coords().len() {
                return Err(Error::DimensionMismatch {
                    expected: point.coords().len(),
                    got: partials.len(),
                });
            }
            Ok(DVector::from_iterator(
                basis.len(),
                basis
                    .iter()
                    .map(|b| b.iter().zip(&partials).map(|(bi, pi)| bi * pi).sum()),
            ))
        }
        GradientMode::FiniteDifference(step) => {
            let coords = DVector::from_column_slice(point.coords());
            let mut out = DVector::zeros(basis.len());
            for (k, b) in basis.iter().enumerate() {
                let scale = coords.dot(b).abs().max(1.0);
                let h = step.unwrap_or_else(|| f64::EPSILON.cbrt() * scale);
                let plus = model.project((&coords + b * h).as_slice())?;
                let minus = model.project((&coords - b * h).as_slice())?;
                let fp = field
                    .value(&plus)
                    .map_err(|e| Error::FieldEvaluationFailure(e.to_string()))?;
                let fm = field
                    .value(&minus)
                    .map_err(|e| Error::FieldEvaluationFailure(e.to_string()))?;
                out[k] = (fp - fm) / (2.0 * h);
            }
            Ok(out)
        }
    }
}

/// Gradient of `field` at `point` as frame coefficients:
/// `grad^j = sum_k g^{jk} du(e_k)`.
pub fn gradient(
    model: &ManifoldModel,
    field: &dyn ScalarField,
    point: &ChartPoint,
    mode: GradientMode,
) -> Result<DVector<f64>> {
    let du = differential(model, field, point, mode)?;
    let ginv = inverse_metric_at(model, point)?;
    Ok(&ginv * du)
}

/// Metric inner product of two frame-coefficient tangent vectors.
pub fn inner_g(
    model: &ManifoldModel,
    point: &ChartPoint,
    v: &DVector<f64>,
    w: &DVector<f64>,
) -> Result<f64> {
    let g = metric_at(model, point)?;
    if v.len() != g.nrows() || w.len() != g.nrows() {
        return Err(Error::DimensionMismatch {
            expected: g.nrows(),
            got: if v.len() != g.nrows() { v.len() } else { w.len() },
        });
    }
    Ok((v.transpose() * g * w)[(0, 0)])
}

/// `<grad u, grad u>_g` computed as `du^T g^{-1} du`.
pub fn gradient_norm_sq(
    model: &ManifoldModel,
    field: &dyn ScalarField,
    point: &ChartPoint,
    mode: GradientMode,
) -> Result<f64> {
    let du = differential(model, field, point, mode)?;
    let ginv = inverse_metric_at(model, point)?;
    Ok((du.transpose() * ginv * du)[(0, 0)])
}

#[cfg(test)]
mod tests;
