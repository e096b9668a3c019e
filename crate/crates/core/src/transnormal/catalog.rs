//! Built-in transnormal functions: quadratic isoparametric functions on
//! semi-Euclidean space, the low-curvature-count isoparametric families on
//! spheres, distance-type profiles, and the product-of-spheres foliation of
//! the round sphere used by the warped-product pipeline.

use super::{ProfileFunction, TransnormalFunction};
use crate::error::{Error, Result};
use crate::geometry::{ChartPoint, ManifoldModel, Signature};
use crate::interval::Interval;
use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::sync::Arc;

/// One row of the CLI catalog listing.
#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntry {
    pub label: String,
    pub manifold: String,
    pub profile: String,
    /// Image interval endpoints; `None` marks an unbounded end.
    pub image_lo: Option<f64>,
    pub image_hi: Option<f64>,
    pub focal_values: Vec<f64>,
}

impl CatalogEntry {
    pub(super) fn from_function(f: &TransnormalFunction) -> CatalogEntry {
        let domain = f.profile().domain();
        CatalogEntry {
            label: f.label().to_string(),
            manifold: f.model().describe(),
            profile: f.profile().formula().to_string(),
            image_lo: domain.lo.is_finite().then_some(domain.lo),
            image_hi: domain.hi.is_finite().then_some(domain.hi),
            focal_values: f.focal_values().to_vec(),
        }
    }
}

fn signed_dot(sig: Signature, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    (0..sig.dimension).map(|i| sig.eps(i) * x[i] * y[i]).sum()
}

/// Quadratic transnormal function `f(x) = <Ax, x> + 2<a, x>` on
/// semi-Euclidean space, valid whenever `A` is self-adjoint with
/// `(A - alpha_h I) A = 0` and `(A - alpha_h I) a = 0`; then
/// `<grad f, grad f> = 4 alpha_h f + beta` with `beta = 4 <a, a>`.
pub fn hahn_quadratic(
    a_mat: &DMatrix<f64>,
    a_vec: &DVector<f64>,
    alpha_h: f64,
    signature: Signature,
) -> Result<TransnormalFunction> {
    let n = signature.dimension;
    if a_mat.nrows() != n || a_mat.ncols() != n || a_vec.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a_mat.nrows().max(a_vec.len()),
        });
    }
    const TOL: f64 = 1e-10;
    // Self-adjointness with respect to the semi-Euclidean form: E A symmetric.
    for i in 0..n {
        for j in 0..n {
            let d = signature.eps(i) * a_mat[(i, j)] - signature.eps(j) * a_mat[(j, i)];
            if d.abs() > TOL {
                return Err(Error::HahnConditionViolated(format!(
                    "A is not self-adjoint for the given signature (entry ({i}, {j}) off by {d:.3e})"
                )));
            }
        }
    }
    let shifted = a_mat - DMatrix::identity(n, n) * alpha_h;
    let residual_mat = &shifted * a_mat;
    if residual_mat.amax() > TOL {
        return Err(Error::HahnConditionViolated(format!(
            "(A - alpha I) A = 0 fails with max entry {:.3e}",
            residual_mat.amax()
        )));
    }
    let residual_vec = &shifted * a_vec;
    if residual_vec.amax() > TOL {
        return Err(Error::HahnConditionViolated(format!(
            "(A - alpha I) a = 0 fails with max entry {:.3e}",
            residual_vec.amax()
        )));
    }

    let beta = 4.0 * signed_dot(signature, a_vec, a_vec);
    // + 0.0 normalizes a negative zero out of the division.
    let singular_t = (alpha_h != 0.0).then(|| -beta / (4.0 * alpha_h) + 0.0);
    let image = match singular_t {
        Some(t_star) if signature.is_riemannian() && a_mat.amax() > 0.0 => {
            if alpha_h > 0.0 {
                Interval::new(t_star, f64::INFINITY)
            } else {
                Interval::new(f64::NEG_INFINITY, t_star)
            }
        }
        _ => Interval::all(),
    };
    let formula = if alpha_h == 0.0 {
        format!("{beta}")
    } else if beta == 0.0 {
        format!("{}*t", 4.0 * alpha_h)
    } else {
        format!("{}*t + {}", 4.0 * alpha_h, beta)
    };
    let profile = ProfileFunction::new(
        formula,
        image,
        move |t| 4.0 * alpha_h * t + beta,
        move |_| 4.0 * alpha_h,
    );
    let focal = singular_t
        .filter(|t| image.contains(*t))
        .into_iter()
        .collect();

    let model = Arc::new(ManifoldModel::SemiEuclidean { signature });
    let mat = a_mat.clone();
    let vec = a_vec.clone();
    let value = move |p: &ChartPoint| -> Result<f64> {
        let x = DVector::from_column_slice(p.coords());
        Ok(signed_dot(signature, &(&mat * &x), &x) + 2.0 * signed_dot(signature, &vec, &x))
    };
    let mat_p = a_mat.clone();
    let vec_p = a_vec.clone();
    let partials = move |p: &ChartPoint| -> Result<Vec<f64>> {
        let x = DVector::from_column_slice(p.coords());
        let ax = &mat_p * &x + &vec_p;
        Ok((0..signature.dimension)
            .map(|k| 2.0 * signature.eps(k) * ax[k])
            .collect())
    };
    Ok(
        TransnormalFunction::new("hahn_quadratic", model, value, profile, focal)
            .with_partials(partials),
    )
}

fn unit_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| crate::geometry::sample::gauss(rng)).collect();
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return v.iter().map(|x| x / norm).collect();
        }
    }
}

/// Isoparametric function on a (pseudo-)sphere with `ell` distinct principal
/// curvatures and profile `ell^2 (1 - t^2)`.
///
/// Built-ins cover `ell = 1` (a height function `f(x) = <x, v>` along the
/// last, spacelike, axis) and `ell = 2` (`f(x) = |x_1|^2 - |x_2|^2` for a
/// coordinate split `(n_1, n_2)` of the ambient space). Higher `ell` values
/// must be registered by the caller through [`TransnormalFunction::new`].
pub fn cartan_munzner(
    ell: u32,
    split: Option<(usize, usize)>,
    model: &ManifoldModel,
) -> Result<TransnormalFunction> {
    let ambient = match model {
        ManifoldModel::PseudoSphere { ambient } => *ambient,
        _ => {
            return Err(Error::BadSplit(
                "cartan_munzner requires a (pseudo-)sphere model".into(),
            ))
        }
    };
    let riemannian = ambient.is_riemannian();
    let image = if riemannian {
        Interval::new(-1.0, 1.0)
    } else {
        Interval::all()
    };
    let ell_sq = f64::from(ell * ell);
    let profile = ProfileFunction::new(
        format!("{}*(1-t^2)", ell * ell),
        image,
        move |t| ell_sq * (1.0 - t * t),
        move |t| -2.0 * ell_sq * t,
    );
    let focal: Vec<f64> = [-1.0, 1.0]
        .into_iter()
        .filter(|t| image.contains(*t))
        .collect();
    let model = Arc::new(model.clone());
    let m = ambient.dimension;

    match ell {
        1 => {
            // Height along the last axis, which is spacelike because the
            // timelike directions come first and negative_count <= n.
            let value = move |p: &ChartPoint| -> Result<f64> { Ok(p.coords()[m - 1]) };
            let partials = move |_p: &ChartPoint| -> Result<Vec<f64>> {
                let mut v = vec![0.0; m];
                v[m - 1] = 1.0;
                Ok(v)
            };
            let mut f = TransnormalFunction::new("cartan_munzner_l1", model, value, profile, focal)
                .with_partials(partials);
            if riemannian {
                f = f.with_level_sampler(move |level, rng| {
                    let radius = (1.0 - level * level).max(0.0).sqrt();
                    let mut coords: Vec<f64> =
                        unit_vector(rng, m - 1).iter().map(|x| radius * x).collect();
                    coords.push(level);
                    ChartPoint::new_unchecked(coords, crate::geometry::Representation::Ambient)
                });
            }
            Ok(f)
        }
        2 => {
            let (n1, n2) = split.ok_or_else(|| {
                Error::BadSplit("ell = 2 requires an ambient coordinate split (n1, n2)".into())
            })?;
            if n1 + n2 != m || n1 < 2 || n2 < 2 {
                return Err(Error::BadSplit(format!(
                    "split ({n1}, {n2}) must satisfy n1 + n2 = {m} with both parts >= 2"
                )));
            }
            let value = move |p: &ChartPoint| -> Result<f64> {
                let x = p.coords();
                let mut acc = 0.0;
                for (i, xi) in x.iter().enumerate() {
                    let sign = if i < n1 { 1.0 } else { -1.0 };
                    acc += sign * ambient.eps(i) * xi * xi;
                }
                Ok(acc)
            };
            let partials = move |p: &ChartPoint| -> Result<Vec<f64>> {
                Ok(p.coords()
                    .iter()
                    .enumerate()
                    .map(|(i, xi)| {
                        let sign = if i < n1 { 1.0 } else { -1.0 };
                        2.0 * sign * ambient.eps(i) * xi
                    })
                    .collect())
            };
            let mut f = TransnormalFunction::new("cartan_munzner_l2", model, value, profile, focal)
                .with_partials(partials);
            if riemannian {
                f = f.with_level_sampler(move |level, rng| {
                    let r1 = ((1.0 + level) / 2.0).max(0.0).sqrt();
                    let r2 = ((1.0 - level) / 2.0).max(0.0).sqrt();
                    let mut coords: Vec<f64> =
                        unit_vector(rng, n1).iter().map(|x| r1 * x).collect();
                    coords.extend(unit_vector(rng, n2).iter().map(|x| r2 * x));
                    ChartPoint::new_unchecked(coords, crate::geometry::Representation::Ambient)
                });
            }
            Ok(f)
        }
        other => Err(Error::UnsupportedEll(other)),
    }
}

/// Constant-1 profile of a distance function with image `[0, delta]`.
pub fn distance_profile(delta: f64) -> ProfileFunction {
    assert!(delta > 0.0, "distance profile needs delta > 0");
    ProfileFunction::constant(1.0, Interval::new(0.0, delta))
}

/// The product-of-spheres foliation of the round sphere:
/// `f(z) = arccos(|z_1|^2 - |z_2|^2)` on `S^{n_1 + n_2 - 1}`, with
/// `<grad f, grad f> = 4` away from the focal spheres `f^{-1}{0, pi}`.
pub fn desitter_arccos(n1: usize, n2: usize) -> Result<TransnormalFunction> {
    if n1 < 2 || n2 < 2 {
        return Err(Error::BadSplit(format!(
            "desitter_arccos needs n1, n2 >= 2, got ({n1}, {n2})"
        )));
    }
    let n = n1 + n2 - 1;
    let model = Arc::new(ManifoldModel::sphere(n));
    let image = Interval::new(0.0, std::f64::consts::PI);
    let profile = ProfileFunction::constant(4.0, image);
    let phi = move |x: &[f64]| -> f64 {
        let a: f64 = x[..n1].iter().map(|v| v * v).sum();
        let b: f64 = x[n1..].iter().map(|v| v * v).sum();
        a - b
    };
    let value = move |p: &ChartPoint| -> Result<f64> {
        Ok(phi(p.coords()).clamp(-1.0, 1.0).acos())
    };
    let partials = move |p: &ChartPoint| -> Result<Vec<f64>> {
        let x = p.coords();
        let c = phi(x);
        let denom_sq = 1.0 - c * c;
        if denom_sq <= 0.0 {
            return Err(Error::FieldEvaluationFailure(
                "arccos foliation gradient is undefined on the focal spheres".into(),
            ));
        }
        let scale = -1.0 / denom_sq.sqrt();
        Ok(x.iter()
            .enumerate()
            .map(|(i, xi)| {
                let sign = if i < n1 { 1.0 } else { -1.0 };
                scale * 2.0 * sign * xi
            })
            .collect())
    };
    let sampler = move |level: f64, rng: &mut ChaCha8Rng| {
        let r1 = (level / 2.0).cos();
        let r2 = (level / 2.0).sin();
        let mut coords: Vec<f64> = unit_vector(rng, n1).iter().map(|x| r1 * x).collect();
        coords.extend(unit_vector(rng, n2).iter().map(|x| r2 * x));
        ChartPoint::new_unchecked(coords, crate::geometry::Representation::Ambient)
    };
    Ok(TransnormalFunction::new(
        "desitter_arccos",
        model,
        value,
        profile,
        vec![0.0, std::f64::consts::PI],
    )
    .with_partials(partials)
    .with_level_sampler(sampler))
}

/// Geodesic distance to the north pole on the round 2-sphere,
/// `f(x) = arccos(x_3)`: the desk-scale instance of an orbit-distance
/// function with constant profile 1 on `[0, pi]`.
pub fn distance_latitude() -> TransnormalFunction {
    let model = Arc::new(ManifoldModel::sphere(2));
    let profile = distance_profile(std::f64::consts::PI);
    let value = |p: &ChartPoint| -> Result<f64> { Ok(p.coords()[2].clamp(-1.0, 1.0).acos()) };
    let partials = |p: &ChartPoint| -> Result<Vec<f64>> {
        let z = p.coords()[2];
        let denom_sq = 1.0 - z * z;
        if denom_sq <= 0.0 {
            return Err(Error::FieldEvaluationFailure(
                "distance gradient undefined at the poles".into(),
            ));
        }
        Ok(vec![0.0, 0.0, -1.0 / denom_sq.sqrt()])
    };
    let sampler = |level: f64, rng: &mut ChaCha8Rng| {
        let radius = level.sin();
        let dir = unit_vector(rng, 2);
        ChartPoint::new_unchecked(
            vec![radius * dir[0], radius * dir[1], level.cos()],
            crate::geometry::Representation::Ambient,
        )
    };
    TransnormalFunction::new(
        "distance_latitude",
        model,
        value,
        profile,
        vec![0.0, std::f64::consts::PI],
    )
    .with_partials(partials)
    .with_level_sampler(sampler)
}

/// The identity on the Euclidean line, transnormal with profile 1. Serves as
/// the left factor of warped products such as the de Sitter model.
pub fn real_line_identity() -> TransnormalFunction {
    let model = Arc::new(ManifoldModel::semi_euclidean(0, 1));
    let profile = ProfileFunction::constant(1.0, Interval::all());
    TransnormalFunction::new(
        "real_line_identity",
        model,
        |p: &ChartPoint| Ok(p.coords()[0]),
        profile,
        vec![],
    )
    .with_partials(|_p: &ChartPoint| Ok(vec![1.0]))
    .with_level_sampler(|level, _rng| {
        ChartPoint::new_unchecked(vec![level], crate::geometry::Representation::Chart)
    })
}

/// All built-in catalog entries, in stable order.
pub fn builtin_catalog() -> Vec<TransnormalFunction> {
    let r3 = Signature::riemannian(3);
    let identity = DMatrix::identity(3, 3);
    let zero_mat = DMatrix::zeros(3, 3);
    let e1 = DVector::from_column_slice(&[1.0, 0.0, 0.0]);
    let zero_vec = DVector::zeros(3);
    let rank2 = DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, 1.0, 0.0]));

    vec![
        relabel(
            hahn_quadratic(&identity, &zero_vec, 1.0, r3).unwrap(),
            "hahn_norm_squared",
        ),
        relabel(
            hahn_quadratic(&zero_mat, &e1, 0.0, r3).unwrap(),
            "hahn_linear",
        ),
        relabel(
            hahn_quadratic(&rank2, &zero_vec, 1.0, r3).unwrap(),
            "hahn_rank2",
        ),
        relabel(
            hahn_quadratic(&identity, &e1, 1.0, r3).unwrap(),
            "hahn_shifted",
        ),
        relabel(
            hahn_quadratic(&DMatrix::identity(3, 3), &DVector::zeros(3), 1.0, Signature::new(1, 3))
                .unwrap(),
            "hahn_minkowski",
        ),
        cartan_munzner(1, None, &ManifoldModel::sphere(2)).unwrap(),
        cartan_munzner(2, Some((2, 2)), &ManifoldModel::sphere(3)).unwrap(),
        desitter_arccos(2, 2).unwrap(),
        distance_latitude(),
        real_line_identity(),
    ]
}

fn relabel(mut f: TransnormalFunction, label: &str) -> TransnormalFunction {
    f.label = label.to_string();
    f
}

/// Look up a built-in catalog entry by label.
pub fn lookup(label: &str) -> Option<TransnormalFunction> {
    builtin_catalog().into_iter().find(|f| f.label() == label)
}
