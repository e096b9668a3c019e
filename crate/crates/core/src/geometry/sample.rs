//! Pseudorandom points on manifold models and level-set sampling.

use super::{ChartPoint, ManifoldModel};
use crate::error::{Error, Result};
use crate::transnormal::TransnormalFunction;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seeded RNG used by every sampler in the crate; the ChaCha stream is
/// stable across platforms, which keeps reports byte-reproducible.
pub fn sample_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal deviate via Box-Muller.
pub(crate) fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let u: f64 = rng.gen();
        if u > f64::MIN_POSITIVE {
            let v: f64 = rng.gen();
            return (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos();
        }
    }
}

fn gauss_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * gauss(rng)).collect()
}

fn unit_gauss_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v = gauss_vec(rng, n, 1.0);
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return v.iter().map(|x| x / norm).collect();
        }
    }
}

/// Draw a pseudorandom point on the model.
///
/// Chart models use standard Gaussian coordinates; quadrics place a Gaussian
/// on the constraint surface.
pub fn random_point(model: &ManifoldModel, rng: &mut ChaCha8Rng) -> ChartPoint {
    let coords = random_coords(model, rng);
    ChartPoint {
        coords,
        representation: model.representation(),
    }
}

fn random_coords(model: &ManifoldModel, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match model {
        ManifoldModel::SemiEuclidean { signature } => gauss_vec(rng, signature.dimension, 1.0),
        ManifoldModel::PseudoSphere { ambient } => {
            let s = ambient.negative_count;
            let m = ambient.dimension;
            if s == 0 {
                unit_gauss_vec(rng, m)
            } else {
                let neg = gauss_vec(rng, s, 0.7);
                let neg_sq: f64 = neg.iter().map(|x| x * x).sum();
                let radius = (1.0 + neg_sq).sqrt();
                let pos = unit_gauss_vec(rng, m - s);
                neg.into_iter()
                    .chain(pos.into_iter().map(|x| radius * x))
                    .collect()
            }
        }
        ManifoldModel::Hyperbolic { ambient } => {
            let n = ambient.dimension - 1;
            let spatial = gauss_vec(rng, n, 0.7);
            let sq: f64 = spatial.iter().map(|x| x * x).sum();
            let mut coords = spatial;
            coords.push((1.0 + sq).sqrt());
            coords
        }
        ManifoldModel::WarpedProduct(w) => {
            let mut coords = random_coords(&w.left, rng);
            coords.extend(random_coords(&w.right, rng));
            coords
        }
    }
}

const LEVEL_TOL: f64 = 1e-9;
const NEWTON_TARGET: f64 = 5e-14;
const MAX_NEWTON_ITERS: usize = 50;
const MAX_RESTARTS: usize = 25;

/// Sample `count` pseudorandom points on the level set `f = level`.
///
/// Uses a closed-form sampler when the catalog entry supplies one, otherwise
/// Newton projection along the differential of `f`, starting from random
/// points. Reproducible: the same seed yields bit-identical points.
pub fn sample_level_set(
    f: &TransnormalFunction,
    level: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<ChartPoint>> {
    if !f.profile().domain().contains_interior(level) || f.profile().eval(level).abs() <= 1e-12 {
        return Err(Error::SingularLevel { level });
    }
    let mut rng = sample_rng(seed);
    let model = f.model();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        if let Some(point) = f.sample_level(level, &mut rng) {
            let value = f.value(&point)?;
            debug_assert!((value - level).abs() <= LEVEL_TOL);
            out.push(point);
            continue;
        }
        out.push(project_to_level(f, model, level, &mut rng)?);
    }
    Ok(out)
}

fn project_to_level(
    f: &TransnormalFunction,
    model: &ManifoldModel,
    level: f64,
    rng: &mut ChaCha8Rng,
) -> Result<ChartPoint> {
    'restart: for _ in 0..MAX_RESTARTS {
        let mut point = random_point(model, rng);
        let mut best_err = f64::INFINITY;
        for _ in 0..MAX_NEWTON_ITERS {
            let err = match f.value(&point) {
                Ok(v) => v - level,
                Err(_) => continue 'restart,
            };
            if err.abs() <= NEWTON_TARGET * level.abs().max(1.0) {
                return Ok(point);
            }
            best_err = best_err.min(err.abs());
            let du = match super::differential(model, f.as_field(), &point, f.gradient_mode()) {
                Ok(d) => d,
                Err(_) => continue 'restart,
            };
            let basis = super::frame(model, &point)?;
            let rate: f64 = du.iter().map(|d| d * d).sum();
            if rate < 1e-14 {
                continue 'restart;
            }
            let mut coords = point.coords().to_vec();
            for (dj, b) in du.iter().zip(&basis) {
                let c = -err / rate * dj;
                for (x, bi) in coords.iter_mut().zip(b.iter()) {
                    *x += c * bi;
                }
            }
            point = match model.project(&coords) {
                Ok(p) => p,
                Err(_) => continue 'restart,
            };
        }
        // Accept the looser documented tolerance if Newton plateaued there.
        if best_err <= LEVEL_TOL {
            if let Ok(v) = f.value(&point) {
                if (v - level).abs() <= LEVEL_TOL {
                    return Ok(point);
                }
            }
        }
    }
    Err(Error::ProjectionDivergence { level })
}
