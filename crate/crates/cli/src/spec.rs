//! Problem-spec file schema (TOML) and construction of solver objects.

use pdereduce::expr::Expr;
use pdereduce::geometry::{ManifoldModel, Signature};
use pdereduce::interval::Interval;
use pdereduce::reduce1d::{ReducedProblem1D, Seed1D, SignBranch};
use pdereduce::reduce2d::{CauchyData, Rect, ReducedProblem2D};
use pdereduce::transnormal::{self, ProfileFunction, TransnormalFunction};
use serde::Deserialize;
use std::sync::Arc;

/// Errors raised while reading or validating a spec file; they exit with
/// code 4.
#[derive(Debug)]
pub struct SpecError {
    pub path: String,
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for SpecError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: [{}] {}", self.path, self.field, self.message)
    }
}

impl std::error::Error for SpecError {}

fn err(path: &str, field: &str, message: impl std::fmt::Display) -> SpecError {
    SpecError {
        path: path.to_string(),
        field: field.to_string(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub mode: Mode,
    /// 1-D: the transnormal function to reduce along.
    pub transnormal: Option<TransnormalSpec>,
    /// 2-D: left and right factor transnormal functions plus the warp.
    pub left: Option<TransnormalSpec>,
    pub right: Option<TransnormalSpec>,
    pub warp: Option<WarpSpec>,
    pub equation: EquationSpec,
    pub seed: SeedSpec,
    pub cauchy: Option<CauchySpec>,
    #[serde(default)]
    pub numerics: NumericsSpec,
    pub verification: Option<VerificationSpec>,
    #[serde(default)]
    pub outputs: OutputsSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Reduce1d,
    Reduce2d,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransnormalSpec {
    /// Built-in catalog label (exclusive with `builder`).
    pub catalog: Option<String>,
    /// Parametric builder name: `hahn_quadratic`, `cartan_munzner` or
    /// `desitter_arccos`.
    pub builder: Option<String>,
    pub matrix: Option<Vec<Vec<f64>>>,
    pub vector: Option<Vec<f64>>,
    pub alpha: Option<f64>,
    pub dimension: Option<usize>,
    pub negative: Option<usize>,
    pub ell: Option<u32>,
    pub split: Option<[usize; 2]>,
    /// Optional image-interval override (semi-Riemannian catalog cases).
    pub image: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WarpSpec {
    /// Expression in `t` for the warping function, strictly positive.
    pub alpha: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquationSpec {
    /// Full reduced function: variables `(t, r, p)` in 1-D mode or
    /// `(t, s, r, tau)` in 2-D mode.
    pub fhat: Option<String>,
    /// Eikonal shortcut: expands to `p - (uhat)` or `tau - (uhat)`.
    pub uhat: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedSpec {
    pub t0: f64,
    pub r0: f64,
    pub s0: Option<f64>,
    pub p0: f64,
    pub q0: Option<f64>,
    #[serde(default)]
    pub sign: SignSpec,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
pub enum SignSpec {
    #[default]
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CauchySpec {
    pub curve_t: String,
    pub curve_s: String,
    pub curve_r: String,
    pub zeta_range: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsSpec {
    /// `rk` or `quadrature` (quadrature requires the eikonal shortcut).
    pub method: MethodSpec,
    pub tol: f64,
    pub span: Option<[f64; 2]>,
    pub sigma_span: Option<[f64; 2]>,
    pub zeta_grid: usize,
    pub rng_seed: u64,
    pub domain_t: Option<[f64; 2]>,
    pub domain_s: Option<[f64; 2]>,
}

impl Default for NumericsSpec {
    fn default() -> Self {
        NumericsSpec {
            method: MethodSpec::Rk,
            tol: 1e-10,
            span: None,
            sigma_span: None,
            zeta_grid: 41,
            rng_seed: 0,
            domain_t: None,
            domain_s: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodSpec {
    Rk,
    Quadrature,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerificationSpec {
    pub count: usize,
    pub tol: f64,
    pub gradient: GradientSpec,
    pub fd_step: f64,
    pub invariance_levels: Vec<f64>,
    pub invariance_count: usize,
    pub invariance_tol: f64,
}

impl Default for VerificationSpec {
    fn default() -> Self {
        VerificationSpec {
            count: 500,
            tol: 1e-4,
            gradient: GradientSpec::Fd,
            fd_step: 1e-5,
            invariance_levels: Vec::new(),
            invariance_count: 40,
            invariance_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientSpec {
    Fd,
    Analytic,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsSpec {
    pub solution_csv: Option<String>,
    pub solution_json: Option<String>,
    pub strips_csv: Option<String>,
    pub strips_json: Option<String>,
    pub coverage_json: Option<String>,
    pub residual_json: Option<String>,
    pub summary_json: Option<String>,
}

impl ProblemSpec {
    pub fn load(path: &str) -> Result<ProblemSpec, SpecError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| err(path, "file", format!("cannot read spec: {e}")))?;
        let spec: ProblemSpec =
            toml::from_str(&text).map_err(|e| err(path, "toml", e.to_string()))?;
        spec.validate(path)?;
        Ok(spec)
    }

    fn validate(&self, path: &str) -> Result<(), SpecError> {
        if self.equation.fhat.is_none() && self.equation.uhat.is_none() {
            return Err(err(path, "equation", "one of `fhat` or `uhat` is required"));
        }
        if self.equation.fhat.is_some() && self.equation.uhat.is_some() {
            return Err(err(path, "equation", "`fhat` and `uhat` are exclusive"));
        }
        match self.mode {
            Mode::Reduce1d => {
                if self.transnormal.is_none() {
                    return Err(err(path, "transnormal", "required in reduce1d mode"));
                }
                if self.numerics.span.is_none() {
                    return Err(err(path, "numerics.span", "required in reduce1d mode"));
                }
                if self.numerics.method == MethodSpec::Quadrature && self.equation.uhat.is_none() {
                    return Err(err(
                        path,
                        "numerics.method",
                        "quadrature requires the eikonal `uhat` form",
                    ));
                }
            }
            Mode::Reduce2d => {
                for (name, missing) in [
                    ("left", self.left.is_none()),
                    ("right", self.right.is_none()),
                    ("warp", self.warp.is_none()),
                    ("cauchy", self.cauchy.is_none()),
                ] {
                    if missing {
                        return Err(err(path, name, "required in reduce2d mode"));
                    }
                }
                if self.seed.s0.is_none() || self.seed.q0.is_none() {
                    return Err(err(path, "seed", "reduce2d needs s0 and q0"));
                }
                if self.numerics.sigma_span.is_none() {
                    return Err(err(path, "numerics.sigma_span", "required in reduce2d mode"));
                }
            }
        }
        Ok(())
    }

    /// The reduced-equation expression, with the eikonal shortcut expanded.
    pub fn fhat_text(&self) -> String {
        match (&self.equation.fhat, &self.equation.uhat) {
            (Some(f), None) => f.clone(),
            (None, Some(u)) => match self.mode {
                Mode::Reduce1d => format!("p - ({u})"),
                Mode::Reduce2d => format!("tau - ({u})"),
            },
            _ => unreachable!("validated"),
        }
    }
}

impl TransnormalSpec {
    pub fn build(&self, path: &str, section: &str) -> Result<TransnormalFunction, SpecError> {
        let f = match (&self.catalog, &self.builder) {
            (Some(label), None) => transnormal::lookup(label)
                .ok_or_else(|| err(path, section, format!("unknown catalog label `{label}`")))?,
            (None, Some(builder)) => self.build_parametric(path, section, builder)?,
            _ => {
                return Err(err(
                    path,
                    section,
                    "exactly one of `catalog` or `builder` is required",
                ))
            }
        };
        Ok(match self.image {
            Some([lo, hi]) => f.with_image(Interval::new(lo, hi)),
            None => f,
        })
    }

    fn build_parametric(
        &self,
        path: &str,
        section: &str,
        builder: &str,
    ) -> Result<TransnormalFunction, SpecError> {
        match builder {
            "hahn_quadratic" => {
                let dim = self
                    .dimension
                    .ok_or_else(|| err(path, section, "hahn_quadratic needs `dimension`"))?;
                let matrix = self
                    .matrix
                    .as_ref()
                    .ok_or_else(|| err(path, section, "hahn_quadratic needs `matrix`"))?;
                if matrix.len() != dim || matrix.iter().any(|row| row.len() != dim) {
                    return Err(err(path, section, "matrix must be dimension x dimension"));
                }
                let vector = self.vector.clone().unwrap_or_else(|| vec![0.0; dim]);
                if vector.len() != dim {
                    return Err(err(path, section, "vector length must match dimension"));
                }
                let a = nalgebra_matrix(matrix);
                let v = nalgebra::DVector::from_vec(vector);
                transnormal::hahn_quadratic(
                    &a,
                    &v,
                    self.alpha.unwrap_or(0.0),
                    Signature::new(self.negative.unwrap_or(0), dim),
                )
                .map_err(|e| err(path, section, e))
            }
            "cartan_munzner" => {
                let ell = self
                    .ell
                    .ok_or_else(|| err(path, section, "cartan_munzner needs `ell`"))?;
                let dim = self
                    .dimension
                    .ok_or_else(|| err(path, section, "cartan_munzner needs `dimension`"))?;
                let model = ManifoldModel::pseudo_sphere(self.negative.unwrap_or(0), dim);
                transnormal::cartan_munzner(ell, self.split.map(|[a, b]| (a, b)), &model)
                    .map_err(|e| err(path, section, e))
            }
            "desitter_arccos" => {
                let [n1, n2] = self
                    .split
                    .ok_or_else(|| err(path, section, "desitter_arccos needs `split`"))?;
                transnormal::desitter_arccos(n1, n2).map_err(|e| err(path, section, e))
            }
            other => Err(err(path, section, format!("unknown builder `{other}`"))),
        }
    }
}

fn nalgebra_matrix(rows: &[Vec<f64>]) -> nalgebra::DMatrix<f64> {
    let n = rows.len();
    nalgebra::DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

use pdereduce::nalgebra;

/// Everything assembled for a 1-D run.
pub struct Built1D {
    pub f: TransnormalFunction,
    pub problem: ReducedProblem1D,
    pub uhat: Option<Expr>,
    pub span: Interval,
}

/// Everything assembled for a 2-D run.
pub struct Built2D {
    pub f_left: TransnormalFunction,
    pub f_right: TransnormalFunction,
    pub problem: ReducedProblem2D,
    pub data: CauchyData,
    pub sigma_span: Interval,
    pub model: Arc<ManifoldModel>,
}

pub fn build_1d(spec: &ProblemSpec, path: &str) -> Result<Built1D, SpecError> {
    let f = spec
        .transnormal
        .as_ref()
        .unwrap()
        .build(path, "transnormal")?;
    let fhat_text = spec.fhat_text();
    let fhat = Expr::parse(&fhat_text, &["t", "r", "p"])
        .map_err(|e| err(path, "equation", format!("`{fhat_text}`: {e}")))?;
    let uhat = spec
        .equation
        .uhat
        .as_ref()
        .map(|u| Expr::parse(u, &["t"]).map_err(|e| err(path, "equation.uhat", e)))
        .transpose()?;
    let sign = match spec.seed.sign {
        SignSpec::Plus => SignBranch::Plus,
        SignSpec::Minus => SignBranch::Minus,
    };
    let problem = ReducedProblem1D::new(
        fhat,
        f.profile().clone(),
        Seed1D {
            t0: spec.seed.t0,
            r0: spec.seed.r0,
            p0: spec.seed.p0,
        },
        sign,
    )
    .map_err(|e| err(path, "seed", e))?;
    let [lo, hi] = spec.numerics.span.unwrap();
    if lo >= hi {
        return Err(err(path, "numerics.span", "span endpoints out of order"));
    }
    Ok(Built1D {
        f,
        problem,
        uhat,
        span: Interval::new(lo, hi),
    })
}

pub fn build_2d(spec: &ProblemSpec, path: &str) -> Result<Built2D, SpecError> {
    let f_left = spec.left.as_ref().unwrap().build(path, "left")?;
    let f_right = spec.right.as_ref().unwrap().build(path, "right")?;
    let warp_text = &spec.warp.as_ref().unwrap().alpha;
    let warp = Expr::parse(warp_text, &["t"])
        .map_err(|e| err(path, "warp.alpha", format!("`{warp_text}`: {e}")))?;
    let fhat_text = spec.fhat_text();
    let fhat = Expr::parse(&fhat_text, &["t", "s", "r", "tau"])
        .map_err(|e| err(path, "equation", format!("`{fhat_text}`: {e}")))?;

    let domain = Rect {
        t: spec
            .numerics
            .domain_t
            .map(|[a, b]| Interval::new(a, b))
            .unwrap_or(f_left.profile().domain()),
        s: spec
            .numerics
            .domain_s
            .map(|[a, b]| Interval::new(a, b))
            .unwrap_or(f_right.profile().domain()),
    };
    let problem = ReducedProblem2D::new(
        fhat,
        f_left.profile().clone(),
        f_right.profile().clone(),
        warp.clone(),
        Some(domain),
    )
    .map_err(|e| err(path, "warp", e))?;

    let cauchy = spec.cauchy.as_ref().unwrap();
    let parse_curve = |text: &str, field: &str| {
        Expr::parse(text, &["zeta"]).map_err(|e| err(path, field, format!("`{text}`: {e}")))
    };
    let data = CauchyData::new(
        parse_curve(&cauchy.curve_t, "cauchy.curve_t")?,
        parse_curve(&cauchy.curve_s, "cauchy.curve_s")?,
        parse_curve(&cauchy.curve_r, "cauchy.curve_r")?,
        cauchy.zeta_range,
        (spec.seed.p0, spec.seed.q0.unwrap()),
    )
    .map_err(|e| err(path, "cauchy", e))?;

    let [lo, hi] = spec.numerics.sigma_span.unwrap();
    if lo >= hi || lo > 0.0 || hi < 0.0 {
        return Err(err(
            path,
            "numerics.sigma_span",
            "sigma span must contain 0 with ordered endpoints",
        ));
    }

    // The lifted model: warped product with the left transnormal value
    // feeding the warp.
    let warp_profile = profile_from_expr(warp, f_left.profile().domain());
    let left_model = f_left.model().clone();
    let right_model = f_right.model().clone();
    let left_fn = f_left.clone();
    let left_value = move |coords: &[f64]| -> f64 {
        pdereduce::geometry::ChartPoint::new(left_fn.model(), coords.to_vec())
            .and_then(|p| left_fn.value(&p))
            .unwrap_or(f64::NAN)
    };
    let model = Arc::new(ManifoldModel::warped_product(
        left_model,
        right_model,
        warp_profile,
        Arc::new(left_value),
    ));

    Ok(Built2D {
        f_left,
        f_right,
        problem,
        data,
        sigma_span: Interval::new(lo, hi),
        model,
    })
}

/// Wrap an expression in `t` as a profile (value plus exact derivative).
pub fn profile_from_expr(expr: Expr, domain: Interval) -> ProfileFunction {
    let formula = expr.to_string();
    let e_val = expr.clone();
    let e_der = expr;
    ProfileFunction::new(
        formula,
        domain,
        move |t| e_val.eval(&[t]).unwrap_or(f64::NAN),
        move |t| {
            e_der
                .eval_with_partials(&[t])
                .map(|d| d.partial(0))
                .unwrap_or(f64::NAN)
        },
    )
}
