//! Convexity radii of quadratic-map images and the certificates built on them.
//!
//! All searches run in whitened coordinates, where the metric `A+` of the
//! support frame becomes the identity and `|x - x0|_+` becomes a Euclidean
//! length.

mod scan;

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::definiteness::{check_direction, find_positive_direction, DefinitenessConfig, DefinitenessReport};
use crate::error::{Error, Result};
use crate::numkernel::{solve_in_eigenbasis, sym_eig, CMatrix, CVector, Cx, Field, Metric, SymMatrix};
use crate::quadmap::{support_frame, QuadraticMap, SupportFrame};
use crate::seeds;
use crate::sphere::{combine, dot, norm, orthonormal_complement};

pub use scan::{ScanCoverage, ScanTolerances};
use scan::{FlatProblem, ScanBudget};

/// A nonnegative value that may be `+inf`. Serializes infinity as `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtendedReal {
    Finite(f64),
    Infinite,
}

impl ExtendedReal {
    pub fn from_f64(x: f64) -> Self {
        if x.is_finite() {
            Self::Finite(x)
        } else {
            Self::Infinite
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Self::Finite(_))
    }

    pub fn value(&self) -> f64 {
        match self {
            Self::Finite(x) => *x,
            Self::Infinite => f64::INFINITY,
        }
    }

    pub fn sqrt(&self) -> Self {
        match self {
            Self::Finite(x) => Self::Finite(x.max(0.0).sqrt()),
            Self::Infinite => Self::Infinite,
        }
    }
}

impl std::fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Finite(x) => write!(f, "{x}"),
            Self::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Finite(x) => s.serialize_f64(*x),
            Self::Infinite => s.serialize_str("inf"),
        }
    }
}

/// The singular pencil attached to a direction `c`:
/// `B = c.A - lambda A+`, with `lambda` the smallest eigenvalue of `c.A`
/// relative to `A+`, and right-hand side `w = c.(v - A x0)`.
#[derive(Clone, Debug)]
pub struct ShiftedPencil {
    pub c: Vec<f64>,
    pub bc: Vec<f64>,
    pub lambda_plus_min: f64,
    pub b: SymMatrix,
    pub w: CVector,
    /// `A+`-orthonormal basis of `ker B`.
    pub kernel: CMatrix,
    /// `sum |c_i| |L^{-1} (v_i - A_i x0)|`, the scale for the relative
    /// consistency test.
    pub w_scale: f64,
    /// `|c.(v - A x0) - bc.(v - A x0)|`, zero in exact arithmetic.
    pub rhs_gap: f64,
}

fn parallel(c: &[f64], c_plus: &[f64]) -> bool {
    let cp = norm(c_plus);
    let along = dot(c, c_plus) / (cp * cp);
    let rest: Vec<f64> = c.iter().zip(c_plus).map(|(x, y)| x - along * y).collect();
    norm(&rest) <= 1e-12 * norm(c)
}

pub fn shifted_pencil(map: &QuadraticMap, frame: &SupportFrame, c: &[f64], kernel_tol: f64) -> Result<ShiftedPencil> {
    if c.len() != map.m() {
        return Err(Error::InvalidInput(format!("direction has length {}, expected {}", c.len(), map.m())));
    }
    if norm(c) == 0.0 || parallel(c, &frame.c_plus) {
        return Err(Error::DegenerateDirection);
    }
    let ca = map.combined_matrix(c);
    let gen = crate::numkernel::gen_eig_min(&ca, &frame.metric, kernel_tol)?;
    let lambda = gen.lambda_min;
    let bc: Vec<f64> = c.iter().zip(&frame.c_plus).map(|(ci, pi)| ci - lambda * pi).collect();
    let b = ca.add(&frame.metric.plus_matrix().scaled(-lambda));
    let d = map.centered_vectors(&frame.x0);
    let along = |coeffs: &[f64]| {
        let mut out = CVector::zeros(map.n());
        for (ci, di) in coeffs.iter().zip(&d) {
            out += di * Cx::new(*ci, 0.0);
        }
        out
    };
    let w = along(c);
    let rhs_gap = (&w - along(&bc)).norm();
    let w_scale = whitened_scale(c, &d, &frame.metric);
    Ok(ShiftedPencil { c: c.to_vec(), bc, lambda_plus_min: lambda, b, w, kernel: gen.eigenspace, w_scale, rhs_gap })
}

/// The limit objective at one direction.
#[derive(Clone, Debug)]
pub struct PencilObjective {
    pub value: ExtendedReal,
    /// Whitened norm of the part of `w` in `ker B`.
    pub kernel_residual: f64,
    /// Minimum `A+`-norm solution `y` of `B y = w` (range part when inconsistent).
    pub offset: CVector,
}

fn whitened_scale(c: &[f64], d: &[CVector], metric: &Metric) -> f64 {
    c.iter().zip(d).map(|(ci, di)| ci.abs() * metric.whiten_vector(di).norm()).sum()
}

fn is_consistent(residual: f64, w_norm: f64, w_scale: f64, tols: &ScanTolerances) -> bool {
    residual <= tols.residual_tol * w_norm || w_norm <= tols.residual_tol * w_scale
}

/// `lim_{eps -> 0+} |(B + eps A+)^{-1} w|_+^2`, which is finite exactly when
/// `w` has no component in `ker B`.
pub fn zmax_objective(pencil: &ShiftedPencil, metric: &Metric, tols: &ScanTolerances) -> PencilObjective {
    let bt = metric.whiten_matrix(&pencil.b);
    let wt = metric.whiten_vector(&pencil.w);
    let eig = sym_eig(&bt).expect("finite pencil");
    let s = solve_in_eigenbasis(&eig, 0.0, &wt, tols.kernel_tol);
    let value = if is_consistent(s.kernel_residual, wt.norm(), pencil.w_scale, tols) {
        ExtendedReal::Finite(s.solution.norm_squared())
    } else {
        ExtendedReal::Infinite
    };
    PencilObjective { value, kernel_residual: s.kernel_residual, offset: metric.unwhiten(&s.solution) }
}

/// Regularized values `|(B + eps s A+)^{-1} w|_+^2` at a decreasing sequence
/// of `eps`, solved directly in the original coordinates, with a Richardson
/// extrapolation of the last two.
#[derive(Clone, Debug, Serialize)]
pub struct LimitCheck {
    pub epsilons: Vec<f64>,
    pub values: Vec<f64>,
    pub extrapolated: f64,
    pub agrees: bool,
}

pub const LIMIT_EPSILONS: [f64; 3] = [1e-4, 1e-6, 1e-8];

pub fn limit_check(pencil: &ShiftedPencil, metric: &Metric, z: f64) -> LimitCheck {
    let plus = metric.plus_matrix().matrix();
    let scale = metric.whiten_matrix(&pencil.b).frobenius_norm().max(f64::MIN_POSITIVE);
    let values: Vec<f64> = LIMIT_EPSILONS
        .iter()
        .map(|eps| {
            let reg = pencil.b.matrix() + plus * Cx::new(eps * scale, 0.0);
            match nalgebra::Cholesky::new(reg) {
                Some(ch) => {
                    let x = ch.solve(&pencil.w);
                    x.dotc(&(plus * &x)).re
                }
                None => f64::INFINITY,
            }
        })
        .collect();
    let r = LIMIT_EPSILONS[1] / LIMIT_EPSILONS[2];
    let extrapolated = (r * values[2] - values[1]) / (r - 1.0);
    let agrees = (extrapolated - z).abs() <= 1e-6 * z.abs().max(1e-12 * pencil.w_scale.powi(2).max(1e-300));
    LimitCheck { epsilons: LIMIT_EPSILONS.to_vec(), values, extrapolated, agrees }
}

/// A flat-edge direction found by a z_max search.
#[derive(Clone, Debug)]
pub struct SingularDirection {
    /// Unit direction in `R^m`, orthogonal to `c+` for z_max searches.
    pub c: Vec<f64>,
    pub bc: Vec<f64>,
    pub lambda_plus_min: f64,
    pub z: f64,
    pub kernel_residual: f64,
    /// `x - x0` for the closest point of the flat edge's preimage.
    pub offset: CVector,
    pub limit: Option<LimitCheck>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ZmaxMethod {
    /// Direct enumeration when `m <= 2`, scan otherwise.
    #[default]
    Auto,
    Exact,
    Scan,
}

#[derive(Clone, Debug, Serialize)]
pub struct ZmaxConfig {
    pub tolerances: ScanTolerances,
    pub method: ZmaxMethod,
    /// Multistart count for spheres of dimension 2 and up; `None` means `20 (m-1) m`.
    pub starts: Option<usize>,
    /// Angular grid size on circles.
    pub grid: usize,
    pub max_iter: usize,
    pub seed: u64,
    pub limit_check: bool,
}

impl Default for ZmaxConfig {
    fn default() -> Self {
        Self {
            tolerances: ScanTolerances::default(),
            method: ZmaxMethod::Auto,
            starts: None,
            grid: 720,
            max_iter: 400,
            seed: 0,
            limit_check: true,
        }
    }
}

impl ZmaxConfig {
    fn budget(&self, m: usize) -> ScanBudget {
        ScanBudget { starts: self.starts.unwrap_or(20 * m.saturating_sub(1) * m), grid: self.grid, max_iter: self.max_iter }
    }

    fn rng(&self, label: &str) -> ChaCha8Rng {
        seeds::rng(self.seed, label)
    }
}

#[derive(Clone, Debug)]
pub struct ZmaxResult {
    pub value: ExtendedReal,
    /// Sorted by `z`, then lexicographically by direction.
    pub witnesses: Vec<SingularDirection>,
    pub coverage: ScanCoverage,
}

fn check_domain(map: &QuadraticMap) -> Result<()> {
    if map.field() == Field::Real && map.n() == 1 {
        return Err(Error::UnsupportedDomain("real maps need n >= 2: the unit sphere of R^1 is disconnected".into()));
    }
    Ok(())
}

fn whitened_data(map: &QuadraticMap, metric: &Metric, x0: &CVector) -> (Vec<SymMatrix>, Vec<CVector>) {
    let mats = map.a().iter().map(|a| metric.whiten_matrix(a)).collect();
    let vecs = map.centered_vectors(x0).iter().map(|d| metric.whiten_vector(d)).collect();
    (mats, vecs)
}

/// `sum_i t_i X_i` for each row `t` of `basis`.
fn project_tuple(basis: &[Vec<f64>], mats: &[SymMatrix], vecs: &[CVector]) -> (Vec<SymMatrix>, Vec<CVector>) {
    let pm = basis.iter().map(|b| SymMatrix::combine(b, mats)).collect();
    let pv = basis
        .iter()
        .map(|b| {
            let mut out = CVector::zeros(vecs[0].len());
            for (t, v) in b.iter().zip(vecs) {
                out += v * Cx::new(*t, 0.0);
            }
            out
        })
        .collect();
    (pm, pv)
}

fn witness_from_pencil(pencil: &ShiftedPencil, metric: &Metric, obj: &PencilObjective, with_limit: bool) -> SingularDirection {
    let z = obj.value.value();
    SingularDirection {
        c: pencil.c.clone(),
        bc: pencil.bc.clone(),
        lambda_plus_min: pencil.lambda_plus_min,
        z,
        kernel_residual: obj.kernel_residual,
        offset: obj.offset.clone(),
        limit: with_limit.then(|| limit_check(pencil, metric, z)),
    }
}

fn sort_witnesses(w: &mut [SingularDirection]) {
    w.sort_by(|a, b| {
        a.z.total_cmp(&b.z).then_with(|| {
            a.c.iter().zip(&b.c).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
        })
    });
}

/// The convexity radius for the frame's `c+`: the smallest height above the
/// supporting hyperplane at which the image acquires a flat edge.
pub fn compute_zmax(map: &QuadraticMap, frame: &SupportFrame, config: &ZmaxConfig) -> Result<ZmaxResult> {
    check_domain(map)?;
    let m = map.m();
    let method = match config.method {
        ZmaxMethod::Auto if m <= 2 => ZmaxMethod::Exact,
        ZmaxMethod::Auto => ZmaxMethod::Scan,
        ZmaxMethod::Exact if m > 2 => {
            return Err(Error::Unsupported(format!("direct enumeration needs m <= 2, got m = {m}")));
        }
        other => other,
    };
    let basis = orthonormal_complement(&frame.c_plus);
    let tols = config.tolerances;

    if method == ZmaxMethod::Exact {
        let mut witnesses = Vec::new();
        let mut min_residual = f64::INFINITY;
        if let Some(b) = basis.first() {
            for sign in [1.0, -1.0] {
                let c: Vec<f64> = b.iter().map(|x| sign * x).collect();
                let pencil = shifted_pencil(map, frame, &c, tols.kernel_tol)?;
                let obj = zmax_objective(&pencil, &frame.metric, &tols);
                let rel = obj.kernel_residual / pencil.w_scale.max(f64::MIN_POSITIVE);
                min_residual = min_residual.min(rel);
                if obj.value.is_finite() {
                    witnesses.push(witness_from_pencil(&pencil, &frame.metric, &obj, config.limit_check));
                }
            }
        }
        sort_witnesses(&mut witnesses);
        let value = witnesses.first().map_or(ExtendedReal::Infinite, |w| ExtendedReal::Finite(w.z));
        let coverage = ScanCoverage {
            method: "exact".into(),
            dimension: basis.len(),
            starts: 2 * basis.len(),
            grid: 0,
            local_searches: 0,
            evaluations: 2 * basis.len(),
            min_relative_residual: if min_residual.is_finite() { min_residual } else { 0.0 },
        };
        return Ok(ZmaxResult { value, witnesses, coverage });
    }

    let (mats, vecs) = whitened_data(map, &frame.metric, &frame.x0);
    let (pm, pv) = project_tuple(&basis, &mats, &vecs);
    if pm.is_empty() {
        return Ok(ZmaxResult { value: ExtendedReal::Infinite, witnesses: vec![], coverage: empty_coverage() });
    }
    let problem = FlatProblem::new(pm, pv, false, tols);
    let outcome = problem.scan(&config.budget(m), &mut config.rng("zmax-scan"));
    let mut witnesses = Vec::new();
    for p in outcome.witnesses {
        let c = combine(&p.coords, &basis);
        let pencil = shifted_pencil(map, frame, &c, tols.kernel_tol)?;
        let obj = zmax_objective(&pencil, &frame.metric, &tols);
        let mut w = witness_from_pencil(&pencil, &frame.metric, &obj, false);
        w.z = p.eval.z;
        w.kernel_residual = p.eval.residual;
        if config.limit_check {
            w.limit = Some(limit_check(&pencil, &frame.metric, w.z));
        }
        witnesses.push(w);
    }
    sort_witnesses(&mut witnesses);
    let value = witnesses.first().map_or(ExtendedReal::Infinite, |w| ExtendedReal::Finite(w.z));
    Ok(ZmaxResult { value, witnesses, coverage: outcome.coverage })
}

fn empty_coverage() -> ScanCoverage {
    ScanCoverage {
        method: "empty".into(),
        dimension: 0,
        starts: 0,
        grid: 0,
        local_searches: 0,
        evaluations: 0,
        min_relative_residual: 0.0,
    }
}

/// Radius of the `A+`-ellipsoid around an arbitrary `x0` whose image is
/// convex, squared. Searches all unit `c` with `lambda_min(c.A) <= 0`
/// relative to the metric.
pub fn compute_epsilon_max(map: &QuadraticMap, x0: &CVector, metric: &Metric, config: &ZmaxConfig) -> Result<ZmaxResult> {
    check_domain(map)?;
    if x0.len() != map.n() || metric.n() != map.n() {
        return Err(Error::InvalidInput("center and metric must match the map's dimension".into()));
    }
    let m = map.m();
    let (mats, vecs) = whitened_data(map, metric, x0);
    let problem = FlatProblem::new(mats, vecs, true, config.tolerances);
    let outcome = problem.scan(&config.budget(m), &mut config.rng("epsilon-max-scan"));
    let mut witnesses: Vec<SingularDirection> = outcome
        .witnesses
        .into_iter()
        .map(|p| {
            let ca = map.combined_matrix(&p.coords);
            let b = ca.add(&metric.plus_matrix().scaled(-p.eval.lambda_min));
            let w = {
                let mut out = CVector::zeros(map.n());
                for (ci, di) in p.coords.iter().zip(map.centered_vectors(x0)) {
                    out += di * Cx::new(*ci, 0.0);
                }
                out
            };
            let eig = sym_eig(&metric.whiten_matrix(&b)).expect("finite pencil");
            let s = solve_in_eigenbasis(&eig, 0.0, &metric.whiten_vector(&w), config.tolerances.kernel_tol);
            let w_scale = whitened_scale(&p.coords, &map.centered_vectors(x0), metric);
            let pencil = ShiftedPencil {
                c: p.coords.clone(),
                bc: vec![],
                lambda_plus_min: p.eval.lambda_min,
                b,
                w,
                kernel: CMatrix::zeros(map.n(), 0),
                w_scale,
                rhs_gap: 0.0,
            };
            SingularDirection {
                c: p.coords.clone(),
                bc: vec![],
                lambda_plus_min: p.eval.lambda_min,
                z: p.eval.z,
                kernel_residual: p.eval.residual,
                offset: metric.unwhiten(&s.solution),
                limit: config.limit_check.then(|| limit_check(&pencil, metric, p.eval.z)),
            }
        })
        .collect();
    sort_witnesses(&mut witnesses);
    let value = witnesses.first().map_or(ExtendedReal::Infinite, |w| ExtendedReal::Finite(w.z));
    Ok(ZmaxResult { value, witnesses, coverage: outcome.coverage })
}

/// Left-hand side of the stable-convexity criterion for a tuple in
/// identity-metric form: the smallest `|B(c)^+ c.v|` over unit `c` at which
/// `c.v` avoids `ker B(c)`.
pub fn stable_convexity_margin(mats: &[SymMatrix], vecs: &[CVector], config: &ZmaxConfig) -> Result<ExtendedReal> {
    if mats.len() != vecs.len() {
        return Err(Error::InvalidInput(format!("{} matrices but {} vectors", mats.len(), vecs.len())));
    }
    if mats.is_empty() {
        return Ok(ExtendedReal::Infinite);
    }
    let n = mats[0].n();
    if mats.iter().any(|a| a.n() != n) || vecs.iter().any(|v| v.len() != n) {
        return Err(Error::InvalidInput("tuple entries must share one dimension".into()));
    }
    let problem = FlatProblem::new(mats.to_vec(), vecs.to_vec(), false, config.tolerances);
    let outcome = problem.scan(&config.budget(mats.len() + 1), &mut config.rng("zmax-scan"));
    let z = outcome.witnesses.first().map_or(ExtendedReal::Infinite, |p| ExtendedReal::Finite(p.eval.z));
    Ok(z.sqrt())
}

/// How the hyperplane with normal `c` meets the image.
#[derive(Clone, Debug)]
pub enum SupportClass {
    /// `c.A` is definite: the supporting hyperplane touches at one point.
    StrictSupport { touch_point: CVector },
    /// `c.A` is indefinite: `c.f` is unbounded both ways.
    Unbounded,
    /// `c.A` is semidefinite and singular, and `(c.A) x = c.v` is inconsistent.
    NoSupport { kernel_residual: f64 },
    /// `c.A` is semidefinite and singular with a consistent system: the
    /// hyperplane contains a whole affine family of image points.
    FlatEdge { solution_point: CVector, z_value: f64 },
}

impl SupportClass {
    pub fn name(&self) -> &'static str {
        match self {
            Self::StrictSupport { .. } => "strict_support",
            Self::Unbounded => "unbounded",
            Self::NoSupport { .. } => "no_support",
            Self::FlatEdge { .. } => "flat_edge",
        }
    }
}

pub fn classify_direction(map: &QuadraticMap, frame: &SupportFrame, c: &[f64], tols: &ScanTolerances) -> Result<SupportClass> {
    if c.len() != map.m() || norm(c) == 0.0 {
        return Err(Error::InvalidInput("direction must be a nonzero m-vector".into()));
    }
    let ca = map.combined_matrix(c);
    let eig = sym_eig(&ca)?;
    let scale = eig.values.iter().fold(0.0_f64, |s, l| s.max(l.abs()));
    let cut = tols.kernel_tol * scale;
    let (lo, hi) = (eig.lambda_min(), eig.lambda_max());
    if lo > cut || hi < -cut {
        let cv = map.combined_vector(c);
        let touch = ca.matrix().clone().lu().solve(&cv).ok_or(Error::DegenerateDirection)?;
        return Ok(SupportClass::StrictSupport { touch_point: touch });
    }
    if lo < -cut && hi > cut {
        return Ok(SupportClass::Unbounded);
    }
    let sign = if hi <= cut && lo < -cut { -1.0 } else { 1.0 };
    let c: Vec<f64> = c.iter().map(|x| sign * x).collect();
    let ca = map.combined_matrix(&c);
    let d = map.centered_vectors(&frame.x0);
    let mut w = CVector::zeros(map.n());
    for (ci, di) in c.iter().zip(&d) {
        w += di * Cx::new(*ci, 0.0);
    }
    let metric = &frame.metric;
    let h = metric.whiten_matrix(&ca);
    let wt = metric.whiten_vector(&w);
    let heig = sym_eig(&h)?;
    let s = solve_in_eigenbasis(&heig, 0.0, &wt, tols.kernel_tol);
    if is_consistent(s.kernel_residual, wt.norm(), whitened_scale(&c, &d, metric), tols) {
        let y = metric.unwhiten(&s.solution);
        Ok(SupportClass::FlatEdge { solution_point: &frame.x0 + y, z_value: s.solution.norm_squared() })
    } else {
        Ok(SupportClass::NoSupport { kernel_residual: s.kernel_residual })
    }
}

/// Minimum of `c.f` over the ellipsoid `|x - x0|_+^2 <= z`.
#[derive(Clone, Debug)]
pub struct SlabSupport {
    pub value: f64,
    pub minimizer: CVector,
    /// Multiplier of the ball constraint, `0` for interior minimizers.
    pub lambda: f64,
    pub interior: bool,
    /// `(lambda, |(c.A - lambda A+)^{-1} w|_+^2)` pairs visited by bisection.
    pub trace: Vec<(f64, f64)>,
}

impl SlabSupport {
    /// Whether the traced norm function increases with `lambda`.
    pub fn trace_is_monotone(&self) -> bool {
        let mut t = self.trace.clone();
        t.sort_by(|a, b| a.0.total_cmp(&b.0));
        t.windows(2).all(|p| p[0].1 <= p[1].1 * (1.0 + 1e-12) || p[1].1.is_infinite())
    }
}

pub fn slab_support_value(map: &QuadraticMap, frame: &SupportFrame, c: &[f64], z: f64, kernel_tol: f64) -> Result<SlabSupport> {
    if c.len() != map.m() {
        return Err(Error::InvalidInput(format!("direction has length {}, expected {}", c.len(), map.m())));
    }
    if !z.is_finite() || z < 0.0 {
        return Err(Error::InvalidInput(format!("radius must be finite and nonnegative, got {z}")));
    }
    let metric = &frame.metric;
    let h = metric.whiten_matrix(&map.combined_matrix(c));
    let mut w = CVector::zeros(map.n());
    for (ci, di) in c.iter().zip(map.centered_vectors(&frame.x0)) {
        w += di * Cx::new(*ci, 0.0);
    }
    let g = metric.whiten_vector(&w);
    let eig = sym_eig(&h)?;
    let n = g.len();
    let alpha: Vec<Cx> = (0..n).map(|k| eig.vectors.column(k).dotc(&g)).collect();
    let scale = eig.values.iter().fold(0.0_f64, |s, l| s.max(l.abs())).max(g.norm()).max(f64::MIN_POSITIVE);
    let cut = kernel_tol * scale;
    let mu0 = eig.lambda_min();
    let gnorm = g.norm();

    let step_at = |lambda: f64| -> CVector {
        let mut y = CVector::zeros(n);
        for k in 0..n {
            let d = eig.values[k] - lambda;
            if d.abs() > cut {
                y += eig.vectors.column(k) * (alpha[k] / d);
            }
        }
        y
    };
    let phi = |lambda: f64| -> f64 {
        (0..n)
            .map(|k| {
                let d = eig.values[k] - lambda;
                let a = alpha[k].norm_sqr();
                if a == 0.0 {
                    0.0
                } else {
                    a / (d * d)
                }
            })
            .sum()
    };
    let finish = |y: CVector, lambda: f64, interior: bool, trace: Vec<(f64, f64)>| -> SlabSupport {
        let x = &frame.x0 + metric.unwhiten(&y);
        let value = c.iter().zip(map.eval_unchecked(&x)).map(|(ci, fi)| ci * fi).sum();
        SlabSupport { value, minimizer: x, lambda, interior, trace }
    };

    let bottom: Vec<usize> = (0..n).filter(|&k| eig.values[k] <= mu0 + cut).collect();
    let bottom_weight = bottom.iter().map(|&k| alpha[k].norm_sqr()).sum::<f64>().sqrt();
    let bottom_clear = bottom_weight <= kernel_tol * gnorm.max(f64::MIN_POSITIVE);

    if z == 0.0 {
        return Ok(finish(CVector::zeros(n), 0.0, true, vec![]));
    }
    // Interior stationary point, possible only when c.A is semidefinite.
    if mu0 >= -cut && (mu0 > cut || bottom_clear) {
        let y = step_at(0.0);
        if y.norm_squared() <= z {
            return Ok(finish(y, 0.0, true, vec![]));
        }
    }
    // Degenerate boundary case: w misses the bottom eigenspace, and the
    // stationary point at lambda = mu0 is already inside the ball.
    if mu0 < -cut && bottom_clear {
        let y = step_at(mu0);
        let r = y.norm_squared();
        if r <= z {
            let t = (z - r).max(0.0).sqrt();
            let y = y + eig.vectors.column(bottom[0]) * Cx::new(t, 0.0);
            return Ok(finish(y, mu0, false, vec![(mu0, r)]));
        }
    }
    // phi increases on (-inf, min(0, mu0)); bracket phi = z and bisect.
    let mut hi = mu0.min(0.0);
    let mut lo = mu0 - gnorm / z.sqrt() - scale;
    let mut trace = vec![(lo, phi(lo))];
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()).max(scale) {
            break;
        }
        let p = phi(mid);
        trace.push((mid, p));
        if p > z {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let result = finish(step_at(lo), lo, false, trace);
    debug_assert!(result.trace_is_monotone());
    Ok(result)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CertifyConfig {
    /// Use this `c+` instead of searching for one.
    pub c_plus: Option<Vec<f64>>,
    pub definiteness: DefinitenessConfig,
    pub zmax: ZmaxConfig,
    /// Also report the convex-ball radius around the support point.
    pub epsilon_max: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CertificateStatus {
    FullImageConvex,
    SlabConvex { z_max: f64 },
    Inconclusive { reason: String },
}

impl CertificateStatus {
    pub fn name(&self) -> &'static str {
        match self {
            Self::FullImageConvex => "full_image_convex",
            Self::SlabConvex { .. } => "slab_convex",
            Self::Inconclusive { .. } => "inconclusive",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConvexityCertificate {
    pub status: CertificateStatus,
    pub definiteness: DefinitenessReport,
    pub frame: Option<SupportFrame>,
    pub z_max: Option<ExtendedReal>,
    pub witnesses: Vec<SingularDirection>,
    pub coverage: Option<ScanCoverage>,
    pub tolerances: BTreeMap<String, f64>,
    pub epsilon_max: Option<ExtendedReal>,
    pub caveats: Vec<String>,
}

impl ConvexityCertificate {
    /// The slab `c+.f0 + z0 <= c+.y <= c+.f0 + z0 + z_max` as (lower, upper).
    pub fn slab_bounds(&self, map: &QuadraticMap) -> Option<(f64, f64)> {
        let frame = self.frame.as_ref()?;
        let lower = frame.supporting_hyperplane(map).offset();
        match self.status {
            CertificateStatus::SlabConvex { z_max } => Some((lower, lower + z_max)),
            CertificateStatus::FullImageConvex => Some((lower, f64::INFINITY)),
            CertificateStatus::Inconclusive { .. } => None,
        }
    }
}

pub fn certify(map: &QuadraticMap, config: &CertifyConfig) -> Result<ConvexityCertificate> {
    check_domain(map)?;
    let mut tolerances = BTreeMap::new();
    tolerances.insert("kernel_tol".to_string(), config.zmax.tolerances.kernel_tol);
    tolerances.insert("residual_tol".to_string(), config.zmax.tolerances.residual_tol);
    tolerances.insert("definiteness_tol".to_string(), config.definiteness.tol);
    tolerances.insert("limit_check_rel".to_string(), 1e-6);

    let report = match &config.c_plus {
        Some(c) => {
            if c.len() != map.m() {
                return Err(Error::InvalidInput(format!("c_plus has length {}, expected {}", c.len(), map.m())));
            }
            check_direction(map.a(), c)
        }
        None => find_positive_direction(map.a(), &config.definiteness, &mut config.zmax.rng("definiteness")),
    };
    let mut caveats = Vec::new();
    if map.field() == Field::Real && map.n() < map.m() {
        caveats.push("check hypotheses: real field with n < m, the sphere-image criterion may be vacuous".to_string());
    }
    if !report.found {
        let reason = if config.c_plus.is_some() {
            format!("supplied c_plus is not definite (lambda_min = {:e})", report.lambda_min_at_c)
        } else {
            format!("no positive-definite combination found (best lambda_min = {})", report.lambda_min_at_c)
        };
        return Ok(ConvexityCertificate {
            status: CertificateStatus::Inconclusive { reason },
            definiteness: report,
            frame: None,
            z_max: None,
            witnesses: vec![],
            coverage: None,
            tolerances,
            epsilon_max: None,
            caveats,
        });
    }
    let frame = support_frame(map, &report.c_plus)?;
    let zr = compute_zmax(map, &frame, &config.zmax)?;
    let status = match zr.value {
        ExtendedReal::Infinite => {
            if zr.coverage.method != "exact" && zr.coverage.method != "empty" {
                caveats.push("full-image verdict holds at scan resolution".to_string());
            }
            CertificateStatus::FullImageConvex
        }
        ExtendedReal::Finite(z) => CertificateStatus::SlabConvex { z_max: z },
    };
    if zr.witnesses.iter().any(|w| w.limit.as_ref().is_some_and(|l| !l.agrees)) {
        caveats.push("a witness failed the regularized-limit cross-check".to_string());
    }
    let epsilon_max = if config.epsilon_max {
        Some(compute_epsilon_max(map, &frame.x0, &frame.metric, &config.zmax)?.value.sqrt())
    } else {
        None
    };
    Ok(ConvexityCertificate {
        status,
        definiteness: report,
        frame: Some(frame),
        z_max: Some(zr.value),
        witnesses: zr.witnesses,
        coverage: Some(zr.coverage),
        tolerances,
        epsilon_max,
        caveats,
    })
}
