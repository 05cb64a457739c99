//! Sampling-based ground truth: image clouds, membership by numerical
//! inversion, midpoint convexity probes and flat-edge tracing for `m = 2`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::convexity::{classify_direction, ScanTolerances, SupportClass};
use crate::error::{Error, Result};
use crate::numkernel::{sym_eig, CVector, Cx, Field};
use crate::quadmap::{QuadraticMap, SupportFrame};
use crate::seeds;
use crate::sphere::{angle_point, nelder_mead, norm};

/// Where preimages are drawn from.
#[derive(Clone, Debug)]
pub enum Region {
    /// Euclidean ball `|x| <= radius`.
    FullSpace { radius: f64 },
    /// Ellipsoid `|x - x0|_+^2 <= z`.
    Slab { frame: SupportFrame, z: f64 },
    /// Ellipsoid surface `|x - x0|_+^2 = z`.
    Sphere { frame: SupportFrame, z: f64 },
    /// Euclidean unit sphere; the domain of a joint numerical range.
    UnitSphere,
}

impl Region {
    pub fn name(&self) -> &'static str {
        match self {
            Self::FullSpace { .. } => "full",
            Self::Slab { .. } => "slab",
            Self::Sphere { .. } => "sphere",
            Self::UnitSphere => "unit_sphere",
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        match self {
            Self::FullSpace { radius } if !radius.is_finite() || *radius < 0.0 => {
                bad(format!("radius must be finite and non-negative, got {radius}"))
            }
            Self::Slab { frame, z } | Self::Sphere { frame, z } => {
                if !z.is_finite() || *z < 0.0 {
                    bad(format!("z must be finite and non-negative, got {z}"))
                } else if frame.metric.n() != n {
                    bad("frame dimension does not match the map".into())
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// A draw from the region; `scale` inflates balls and sphere radii.
    fn draw<R: Rng>(&self, rng: &mut R, n: usize, field: Field, scale: f64) -> CVector {
        let dim = if field == Field::Complex { 2 * n } else { n };
        let dir = gaussian_unit(rng, n, field);
        let ball = |rng: &mut R, r: f64| r * rng.random::<f64>().powf(1.0 / dim as f64);
        match self {
            Self::FullSpace { radius } => dir * Cx::new(ball(rng, scale * radius), 0.0),
            Self::Slab { frame, z } => {
                let r = ball(rng, scale * z.sqrt());
                &frame.x0 + frame.metric.unwhiten(&(dir * Cx::new(r, 0.0)))
            }
            Self::Sphere { frame, z } => {
                // Starts for inversion fill the inflated ball, samples stay on the surface.
                let r = if scale > 1.0 { ball(rng, scale * z.sqrt()) } else { z.sqrt() };
                &frame.x0 + frame.metric.unwhiten(&(dir * Cx::new(r, 0.0)))
            }
            Self::UnitSphere => dir,
        }
    }

    /// Nearest point of the region, used to keep witness search admissible.
    fn project(&self, x: &CVector) -> CVector {
        let clamp = |y: CVector, r: f64, surface: bool| {
            let len = y.norm();
            if len == 0.0 {
                let mut e = CVector::zeros(y.len());
                if surface && !e.is_empty() {
                    e[0] = Cx::new(r, 0.0);
                }
                e
            } else if surface || len > r {
                y * Cx::new(r / len, 0.0)
            } else {
                y
            }
        };
        match self {
            Self::FullSpace { radius } => clamp(x.clone(), *radius, false),
            Self::Slab { frame, z } | Self::Sphere { frame, z } => {
                let surface = matches!(self, Self::Sphere { .. });
                let y = frame.metric.upper() * (x - &frame.x0);
                &frame.x0 + frame.metric.unwhiten(&clamp(y, z.sqrt(), surface))
            }
            Self::UnitSphere => clamp(x.clone(), 1.0, true),
        }
    }
}

fn gaussian_unit<R: Rng>(rng: &mut R, n: usize, field: Field) -> CVector {
    crate::jnr::random_sphere_point(rng, n, field)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub region: String,
    pub count: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec<f64>>,
    pub provenance: Provenance,
}

impl PointCloud {
    /// Header `y1,...,ym`, then one row per point with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let m = self.points.first().map_or(0, Vec::len);
        let mut out = (1..=m).map(|i| format!("y{i}")).collect::<Vec<_>>().join(",");
        out.push('\n');
        for p in &self.points {
            out.push_str(&p.iter().map(|v| format!("{v:.16e}")).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str, provenance: Provenance) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::InvalidInput("empty CSV".into()))?;
        let m = header.split(',').count();
        let points = lines
            .enumerate()
            .map(|(i, line)| {
                let row: std::result::Result<Vec<f64>, _> = line.split(',').map(str::parse).collect();
                match row {
                    Ok(r) if r.len() == m => Ok(r),
                    _ => Err(Error::InvalidInput(format!("CSV row {} is malformed", i + 2))),
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self { points, provenance })
    }
}

fn sample_with_preimages(map: &QuadraticMap, region: &Region, count: usize, seed: u64, label: &str) -> Result<(Vec<CVector>, Vec<Vec<f64>>)> {
    region.validate(map.n())?;
    let mut rng = seeds::rng(seed, label);
    let xs: Vec<CVector> = (0..count).map(|_| region.draw(&mut rng, map.n(), map.field(), 1.0)).collect();
    let ys = xs.iter().map(|x| map.evaluate(x)).collect::<Result<_>>()?;
    Ok((xs, ys))
}

pub fn sample_image(map: &QuadraticMap, region: &Region, count: usize, seed: u64) -> Result<PointCloud> {
    if count == 0 {
        return Err(Error::InvalidInput("count must be at least 1".into()));
    }
    let (_, points) = sample_with_preimages(map, region, count, seed, "sample-image")?;
    Ok(PointCloud { points, provenance: Provenance { region: region.name().into(), count, seed } })
}

#[derive(Clone, Debug)]
pub struct MembershipConfig {
    pub starts: usize,
    pub max_iter: usize,
    /// Membership threshold relative to `1 + |y|`.
    pub tau: f64,
    /// Start region; its inflation by 2 is sampled. Defaults to a ball
    /// sized from `y`.
    pub region: Option<Region>,
    pub seed: u64,
}

impl Default for MembershipConfig {
    fn default() -> Self {
        Self { starts: 32, max_iter: 200, tau: 1e-5, region: None, seed: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct Membership {
    pub residual: f64,
    pub preimage: CVector,
    pub threshold: f64,
    pub member: bool,
}

/// Least-squares inversion problem `min |f(x) - y|^2` in real coordinates.
struct Inversion<'a> {
    map: &'a QuadraticMap,
    y: &'a [f64],
    on_sphere: bool,
}

impl Inversion<'_> {
    fn dim(&self) -> usize {
        match self.map.field() {
            Field::Real => self.map.n(),
            Field::Complex => 2 * self.map.n(),
        }
    }

    fn to_x(&self, p: &DVector<f64>) -> CVector {
        let n = self.map.n();
        match self.map.field() {
            Field::Real => CVector::from_fn(n, |k, _| Cx::new(p[k], 0.0)),
            Field::Complex => CVector::from_fn(n, |k, _| Cx::new(p[k], p[n + k])),
        }
    }

    fn to_p(&self, x: &CVector) -> DVector<f64> {
        let n = self.map.n();
        match self.map.field() {
            Field::Real => DVector::from_fn(n, |k, _| x[k].re),
            Field::Complex => DVector::from_fn(2 * n, |k, _| if k < n { x[k].re } else { x[k - n].im }),
        }
    }

    fn rows(&self) -> usize {
        self.map.m() + usize::from(self.on_sphere)
    }

    fn residual(&self, x: &CVector) -> DVector<f64> {
        let fx = self.map.evaluate(x).expect("dimension checked");
        let mut r = DVector::from_fn(self.rows(), |i, _| if i < fx.len() { fx[i] - self.y[i] } else { 0.0 });
        if self.on_sphere {
            r[self.map.m()] = x.norm_squared() - 1.0;
        }
        r
    }

    fn jacobian(&self, x: &CVector) -> DMatrix<f64> {
        let n = self.map.n();
        let mut j = DMatrix::zeros(self.rows(), self.dim());
        let mut put = |row: usize, g: &CVector| {
            for k in 0..n {
                j[(row, k)] = 2.0 * g[k].re;
                if self.map.field() == Field::Complex {
                    j[(row, n + k)] = 2.0 * g[k].im;
                }
            }
        };
        for (i, (a, v)) in self.map.a().iter().zip(self.map.v()).enumerate() {
            put(i, &(a.mul_vec(x) - v));
        }
        if self.on_sphere {
            put(self.map.m(), x);
        }
        j
    }

    /// Levenberg-Marquardt from `start`; returns `(|r|, x)`.
    fn solve(&self, start: &CVector, max_iter: usize, stop: f64) -> (f64, CVector) {
        let mut p = self.to_p(start);
        let mut x = self.to_x(&p);
        let mut r = self.residual(&x);
        let mut cost = r.norm_squared();
        let mut lambda = 1e-3;
        for _ in 0..max_iter {
            if cost.sqrt() <= stop {
                break;
            }
            let j = self.jacobian(&x);
            let jtj = j.transpose() * &j;
            let g = j.transpose() * &r;
            let floor = 1e-12 * (jtj.trace() / self.dim() as f64).max(1e-300);
            let mut accepted = false;
            for _ in 0..12 {
                let mut h = jtj.clone();
                for k in 0..self.dim() {
                    h[(k, k)] += lambda * (jtj[(k, k)] + floor);
                }
                let Some(chol) = h.cholesky() else {
                    lambda *= 4.0;
                    continue;
                };
                let step = chol.solve(&(-&g));
                let cand = &p + &step;
                let cx = self.to_x(&cand);
                let cr = self.residual(&cx);
                let cc = cr.norm_squared();
                if cc < cost {
                    let tiny = step.norm() <= 1e-15 * (1.0 + p.norm());
                    p = cand;
                    x = cx;
                    r = cr;
                    cost = cc;
                    lambda = (lambda / 3.0).max(1e-12);
                    accepted = !tiny;
                    break;
                }
                lambda *= 4.0;
            }
            if !accepted {
                break;
            }
        }
        (cost.sqrt(), x)
    }
}

fn default_start_region(map: &QuadraticMap, y: &[f64]) -> Region {
    let scale = map.a().iter().map(|a| a.frobenius_norm()).fold(0.0, f64::max).max(1e-12);
    let reach = (norm(y) + map.f0().iter().map(|f| f * f).sum::<f64>().sqrt()) / scale;
    Region::FullSpace { radius: reach.sqrt().max(1.0) }
}

fn invert<R: Rng>(
    map: &QuadraticMap,
    y: &[f64],
    region: &Region,
    warm: &[CVector],
    starts: usize,
    max_iter: usize,
    tau: f64,
    rng: &mut R,
) -> Membership {
    let threshold = tau * (1.0 + norm(y));
    let problem = Inversion { map, y, on_sphere: matches!(region, Region::UnitSphere) };
    let stop = 1e-3 * threshold;
    let mut best: Option<(f64, CVector)> = None;
    let candidates = warm.iter().cloned().map(Some).chain((0..starts).map(|_| None));
    for start in candidates {
        let start = start.unwrap_or_else(|| region.draw(rng, map.n(), map.field(), 2.0));
        let (res, x) = problem.solve(&start, max_iter, stop);
        if best.as_ref().is_none_or(|b| res < b.0) {
            best = Some((res, x));
        }
        if best.as_ref().is_some_and(|b| b.0 <= stop) {
            break;
        }
    }
    let (residual, preimage) = best.unwrap_or_else(|| (f64::INFINITY, CVector::zeros(map.n())));
    Membership { residual, preimage, threshold, member: residual <= threshold }
}

/// Distance from `y` to the image, by multistart local least squares.
pub fn membership(map: &QuadraticMap, y: &[f64], config: &MembershipConfig) -> Result<Membership> {
    if y.len() != map.m() {
        return Err(Error::InvalidInput(format!("point has length {}, expected {}", y.len(), map.m())));
    }
    let region = config.region.clone().unwrap_or_else(|| default_start_region(map, y));
    region.validate(map.n())?;
    let mut rng = seeds::rng(config.seed, "membership");
    Ok(invert(map, y, &region, &[], config.starts, config.max_iter, config.tau, &mut rng))
}

#[derive(Clone, Debug)]
pub struct ProbeConfig {
    pub pairs: usize,
    pub tau: f64,
    pub seed: u64,
    pub starts: usize,
    pub max_iter: usize,
    /// Extra image points used only as warm starts.
    pub cloud: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { pairs: 500, tau: 1e-5, seed: 0, starts: 32, max_iter: 200, cloud: 1000 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeFailure {
    pub y1: Vec<f64>,
    pub y2: Vec<f64>,
    /// Weight of `y1` in the tested combination.
    pub weight: f64,
    pub point: Vec<f64>,
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeVerdict {
    ConsistentWithConvex,
    NonConvexWitness,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub pairs_tested: usize,
    pub combinations_tested: usize,
    pub max_midpoint_residual: f64,
    /// Failures sorted by residual, largest first.
    pub failures: Vec<ProbeFailure>,
    pub verdict: ProbeVerdict,
    pub tau: f64,
}

struct Prober<'a> {
    map: &'a QuadraticMap,
    region: &'a Region,
    xs: Vec<CVector>,
    ys: Vec<Vec<f64>>,
    config: &'a ProbeConfig,
}

impl Prober<'_> {
    fn nearest(&self, y: &[f64]) -> &CVector {
        let d = |p: &Vec<f64>| p.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        let i = (0..self.ys.len()).min_by(|&i, &j| d(&self.ys[i]).total_cmp(&d(&self.ys[j]))).expect("non-empty cloud");
        &self.xs[i]
    }

    fn test<R: Rng>(&self, y: &[f64], warm: &[CVector], budget: usize, rng: &mut R) -> Membership {
        let mut starts = warm.to_vec();
        starts.push(self.nearest(y).clone());
        invert(self.map, y, self.region, &starts, self.config.starts * budget, self.config.max_iter * budget, self.config.tau, rng)
    }
}

fn combine(t: f64, a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(p, q)| t * p + (1.0 - t) * q).collect()
}

/// Tests midpoints and two random convex combinations of sampled image
/// pairs for membership. Failing points are re-checked with four times the
/// start budget, and the worst one is pushed towards a locally worst midpoint.
pub fn convexity_probe(map: &QuadraticMap, region: &Region, config: &ProbeConfig) -> Result<ProbeReport> {
    if config.pairs == 0 {
        return Err(Error::InvalidInput("pairs must be at least 1".into()));
    }
    let (xs, ys) = sample_with_preimages(map, region, 2 * config.pairs + config.cloud, config.seed, "probe-cloud")?;
    let prober = Prober { map, region, xs, ys, config };
    let mut rng = seeds::rng(config.seed, "probe-inversion");
    let mut weights_rng = seeds::rng(config.seed, "probe-weights");
    let mut max_mid: f64 = 0.0;
    let mut failures = Vec::new();
    let mut tested = 0;
    for k in 0..config.pairs {
        let (i, j) = (2 * k, 2 * k + 1);
        let weights = [0.5, weights_rng.random::<f64>(), weights_rng.random::<f64>()];
        for (w_idx, &t) in weights.iter().enumerate() {
            let point = combine(t, &prober.ys[i], &prober.ys[j]);
            let warm = [prober.xs[i].clone(), prober.xs[j].clone()];
            let mut res = prober.test(&point, &warm, 1, &mut rng);
            if !res.member {
                res = prober.test(&point, &warm, 4, &mut rng);
            }
            tested += 1;
            if w_idx == 0 {
                max_mid = max_mid.max(res.residual);
            }
            if !res.member {
                failures.push(ProbeFailure { y1: prober.ys[i].clone(), y2: prober.ys[j].clone(), weight: t, point, residual: res.residual });
            }
        }
    }
    if !failures.is_empty() {
        if let Some(w) = sharpen(&prober, &failures, &mut rng) {
            max_mid = max_mid.max(w.residual);
            failures.push(w);
        }
    }
    failures.sort_by(|a, b| b.residual.total_cmp(&a.residual));
    let verdict = if failures.is_empty() { ProbeVerdict::ConsistentWithConvex } else { ProbeVerdict::NonConvexWitness };
    Ok(ProbeReport { pairs_tested: config.pairs, combinations_tested: tested, max_midpoint_residual: max_mid, failures, verdict, tau: config.tau })
}

/// Local ascent of the midpoint residual over pairs of preimages in the
/// region, started from the worst failing pair.
fn sharpen<R: Rng>(prober: &Prober, failures: &[ProbeFailure], rng: &mut R) -> Option<ProbeFailure> {
    let worst = failures.iter().max_by(|a, b| a.residual.total_cmp(&b.residual))?;
    let map = prober.map;
    let inv = Inversion { map, y: &worst.y1, on_sphere: false };
    let x1 = prober.nearest(&worst.y1).clone();
    let x2 = prober.nearest(&worst.y2).clone();
    let d = inv.dim();
    let pack: Vec<f64> = inv.to_p(&x1).iter().chain(inv.to_p(&x2).iter()).copied().collect();
    let unpack = |p: &[f64]| {
        let a = prober.region.project(&inv.to_x(&DVector::from_column_slice(&p[..d])));
        let b = prober.region.project(&inv.to_x(&DVector::from_column_slice(&p[d..])));
        (a, b)
    };
    let mut local = seeds::rng(prober.config.seed, "probe-sharpen");
    let mut objective = |p: &[f64]| {
        let (a, b) = unpack(p);
        let (ya, yb) = (map.evaluate(&a).expect("checked"), map.evaluate(&b).expect("checked"));
        let mid = combine(0.5, &ya, &yb);
        let mut warm = vec![a, b];
        warm.push(prober.nearest(&mid).clone());
        -invert(map, &mid, prober.region, &warm, 8, prober.config.max_iter, prober.config.tau, &mut local).residual
    };
    let scale = pack.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-3);
    let (p, _) = nelder_mead(&mut objective, &pack, 0.1 * scale, 60 * (2 * d + 1), 1e-10 * scale);
    let (a, b) = unpack(&p);
    let (y1, y2) = (map.evaluate(&a).ok()?, map.evaluate(&b).ok()?);
    let point = combine(0.5, &y1, &y2);
    let check = prober.test(&point, &[a, b], 4, rng);
    (!check.member && check.residual > worst.residual).then_some(ProbeFailure { y1, y2, weight: 0.5, point, residual: check.residual })
}

#[derive(Clone, Debug, Serialize)]
pub struct FlatEdge2d {
    pub direction: Vec<f64>,
    /// Image points on the edge; the first is the one closest to the
    /// supporting hyperplane.
    pub contact_points: Vec<Vec<f64>>,
    pub min_height: f64,
}

fn lambda_min_at(map: &QuadraticMap, theta: f64) -> f64 {
    sym_eig(&map.combined_matrix(&angle_point(theta))).expect("finite").lambda_min()
}

/// Sweeps directions at angular step `2 pi / resolution`, locates where the
/// combination becomes singular semidefinite, and keeps the directions whose
/// supporting line contains an affine family of image points.
pub fn flat_edges_2d(map: &QuadraticMap, frame: &SupportFrame, resolution: usize, tols: &ScanTolerances) -> Result<Vec<FlatEdge2d>> {
    if map.m() != 2 {
        return Err(Error::Unsupported(format!("flat-edge tracing needs m = 2, got m = {}", map.m())));
    }
    let g = resolution.max(8);
    let step = std::f64::consts::TAU / g as f64;
    let values: Vec<f64> = (0..g).map(|i| lambda_min_at(map, i as f64 * step)).collect();
    let mut roots: Vec<f64> = Vec::new();
    for i in 0..g {
        let (a, b) = (values[i], values[(i + 1) % g]);
        if (a <= 0.0) == (b <= 0.0) {
            continue;
        }
        let (mut lo, mut hi) = (i as f64 * step, (i + 1) as f64 * step);
        let lo_neg = a <= 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if (lambda_min_at(map, mid) <= 0.0) == lo_neg {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // Take the semidefinite side of the bracket.
        roots.push(if lo_neg { hi } else { lo });
    }
    let mut out: Vec<FlatEdge2d> = Vec::new();
    for theta in roots {
        let c = angle_point(theta);
        if out.iter().any(|e| norm(&[e.direction[0] - c[0], e.direction[1] - c[1]]) < 1e-9) {
            continue;
        }
        let SupportClass::FlatEdge { solution_point, .. } = classify_direction(map, frame, &c, tols)? else {
            continue;
        };
        let metric = &frame.metric;
        let h = sym_eig(&metric.whiten_matrix(&map.combined_matrix(&c)))?;
        let cut = tols.kernel_tol * h.values.iter().fold(0.0_f64, |s, l| s.max(l.abs()));
        let y0 = metric.upper() * (&solution_point - &frame.x0);
        let mut xs = vec![solution_point.clone()];
        for k in (0..h.values.len()).filter(|&k| h.values[k].abs() <= cut) {
            let dir = h.vector(k);
            for s in (1..=10).flat_map(|j| [j as f64 / 10.0, -(j as f64) / 10.0]) {
                xs.push(&frame.x0 + metric.unwhiten(&(&y0 + &dir * Cx::new(s, 0.0))));
            }
        }
        let contact_points: Vec<Vec<f64>> = xs.iter().map(|x| map.evaluate(x)).collect::<Result<_>>()?;
        let min_height = contact_points.iter().map(|y| frame.height(map, y)).fold(f64::INFINITY, f64::min);
        out.push(FlatEdge2d { direction: c, contact_points, min_height });
    }
    out.sort_by(|a, b| a.min_height.total_cmp(&b.min_height));
    Ok(out)
}
