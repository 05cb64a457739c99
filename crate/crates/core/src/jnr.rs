//! Joint numerical ranges `{(x* A_1 x, ..., x* A_m x) : |x| = 1}` and two
//! sufficient convexity tests for them.
//!
//! The reduction test uses a direction `e` whose bottom eigenvalue has
//! multiplicity `n - 1`: after an affine change of the range, `e . A` becomes
//! `diag(0, ..., 0, 1)` and the remaining forms, sliced at last coordinate 1,
//! define an inhomogeneous quadratic map on `n - 1` variables. The range is
//! convex when that map's convexity radius is infinite.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::convexity::{compute_zmax, ExtendedReal, ZmaxConfig};
use crate::error::{Error, Result};
use crate::numkernel::{sym_eig, CMatrix, CVector, Cx, Field, Metric, SymMatrix};
use crate::quadmap::{support_frame, HomogenizedMap, QuadraticMap};
use crate::seeds;
use crate::sphere::{angle_point, golden_section, nelder_mead_sphere, norm, normalize, orthonormal_complement, random_unit};

#[derive(Clone, Debug, PartialEq)]
pub struct JnrTuple {
    field: Field,
    mats: Vec<SymMatrix>,
}

impl JnrTuple {
    pub fn new(field: Field, mats: Vec<SymMatrix>) -> Result<Self> {
        let n = mats.first().ok_or_else(|| Error::InvalidInput("empty tuple".into()))?.n();
        if n == 0 {
            return Err(Error::InvalidInput("matrices must be at least 1x1".into()));
        }
        if let Some(i) = mats.iter().position(|a| a.n() != n) {
            return Err(Error::InvalidInput(format!("A[{i}] has size {}, expected {n}", mats[i].n())));
        }
        let mats = mats.into_iter().map(|a| a.with_field(field)).collect::<Result<_>>()?;
        Ok(Self { field, mats })
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn matrices(&self) -> &[SymMatrix] {
        &self.mats
    }

    pub fn m(&self) -> usize {
        self.mats.len()
    }

    pub fn n(&self) -> usize {
        self.mats[0].n()
    }

    /// The forms as a homogeneous quadratic map; its image of the unit
    /// sphere is the range.
    pub fn as_map(&self) -> QuadraticMap {
        QuadraticMap::homogeneous(self.field, self.mats.clone()).expect("validated tuple")
    }

    /// The range point of a unit vector `x`.
    pub fn point(&self, x: &CVector) -> Vec<f64> {
        self.mats.iter().map(|a| a.quad_form(x)).collect()
    }

    /// Uniformly distributed unit vectors mapped into the range.
    pub fn sample<R: Rng>(&self, count: usize, rng: &mut R) -> Vec<Vec<f64>> {
        (0..count).map(|_| self.point(&random_sphere_point(rng, self.n(), self.field))).collect()
    }
}

pub(crate) fn random_sphere_point<R: Rng>(rng: &mut R, n: usize, field: Field) -> CVector {
    loop {
        let x = CVector::from_fn(n, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = if field == Field::Complex { rng.sample(StandardNormal) } else { 0.0 };
            Cx::new(re, im)
        });
        let r = x.norm();
        if r > 1e-12 {
            return x / Cx::new(r, 0.0);
        }
    }
}

/// The base of the image cone of a homogenized map, cut by the hyperplane
/// orthogonal to `ext_c_plus`, as a joint numerical range of `m` forms.
///
/// The forms are whitened so that `ext_c_plus . A` becomes the identity,
/// then re-expressed along an orthonormal basis of `ext_c_plus`-perp.
pub fn cone_base(hom: &HomogenizedMap, ext_c_plus: &[f64]) -> Result<JnrTuple> {
    if ext_c_plus.len() != hom.m_plus_one() {
        return Err(Error::InvalidInput(format!(
            "extended direction has length {}, expected {}",
            ext_c_plus.len(),
            hom.m_plus_one()
        )));
    }
    let metric = definite_metric(&SymMatrix::combine(ext_c_plus, &hom.big_a))?;
    let whitened: Vec<SymMatrix> = hom.big_a.iter().map(|a| metric.whiten_matrix(a)).collect();
    let basis = orthonormal_complement(ext_c_plus);
    let mats = basis.iter().map(|b| SymMatrix::combine(b, &whitened)).collect();
    JnrTuple::new(hom.field, mats)
}

fn definite_metric(plus: &SymMatrix) -> Result<Metric> {
    Metric::new(plus.clone()).map_err(|e| match e {
        Error::NotPositiveDefinite { lambda_min } => Error::NotDefiniteDirection { lambda_min },
        other => other,
    })
}

/// Sampled bottom-eigenvalue multiplicities of `c . A` over unit `c`.
#[derive(Clone, Debug)]
pub struct GutkinReport {
    /// Smallest relative gap `(lambda_2 - lambda_1) / spread` seen.
    pub min_gap: f64,
    pub multiplicity_profile: Vec<(Vec<f64>, usize)>,
    pub modal_multiplicity: usize,
    pub constant_multiplicity: bool,
    /// Refined directions whose bottom multiplicity exceeds the modal one.
    pub exceptional_directions: Vec<(Vec<f64>, usize)>,
    pub tol: f64,
}

fn relative_gap(a: &[SymMatrix], c: &[f64]) -> f64 {
    let e = sym_eig(&SymMatrix::combine(c, a)).expect("finite tuple");
    if e.values.len() < 2 {
        return f64::INFINITY;
    }
    let s = e.spread();
    if s == 0.0 {
        0.0
    } else {
        (e.values[1] - e.values[0]) / s
    }
}

fn multiplicity(a: &[SymMatrix], c: &[f64], tol: f64) -> usize {
    sym_eig(&SymMatrix::combine(c, a)).expect("finite tuple").bottom_multiplicity(tol)
}

pub fn eigengap_scan(tuple: &JnrTuple, samples: usize, seed: u64, tol: f64) -> GutkinReport {
    let a = tuple.matrices();
    let m = tuple.m();
    let mut rng = seeds::rng(seed, "eigengap-scan");
    let dirs: Vec<Vec<f64>> = if m == 1 {
        vec![vec![1.0], vec![-1.0]]
    } else {
        (0..samples.max(1)).map(|_| random_unit(&mut rng, m)).collect()
    };
    let gaps: Vec<f64> = dirs.iter().map(|c| relative_gap(a, c)).collect();
    let mut profile: Vec<(Vec<f64>, usize)> = dirs.iter().map(|c| (c.clone(), multiplicity(a, c, tol))).collect();

    // Exceptional directions are isolated, so sampling alone misses them:
    // descend on the gap from the most promising samples.
    let mut refined: Vec<Vec<f64>> = Vec::new();
    if m == 2 {
        let mut idx: Vec<usize> = (0..dirs.len()).collect();
        idx.sort_by(|&i, &j| dirs[i][1].atan2(dirs[i][0]).total_cmp(&dirs[j][1].atan2(dirs[j][0])));
        let angles: Vec<f64> = idx.iter().map(|&i| dirs[i][1].atan2(dirs[i][0])).collect();
        let k = idx.len();
        for p in 0..k {
            let g = gaps[idx[p]];
            let prev = gaps[idx[(p + k - 1) % k]];
            let next = gaps[idx[(p + 1) % k]];
            if g <= prev && g <= next {
                let lo = angles[(p + k - 1) % k] - if p == 0 { std::f64::consts::TAU } else { 0.0 };
                let hi = angles[(p + 1) % k] + if p + 1 == k { std::f64::consts::TAU } else { 0.0 };
                let (t, _) = golden_section(|t| relative_gap(a, &angle_point(t)), lo, hi, 1e-15);
                refined.push(angle_point(t));
            }
        }
    } else if m > 2 {
        let mut idx: Vec<usize> = (0..dirs.len()).collect();
        idx.sort_by(|&i, &j| gaps[i].total_cmp(&gaps[j]).then(i.cmp(&j)));
        for &i in idx.iter().take(8 * m) {
            let (c, _) = nelder_mead_sphere(|c| relative_gap(a, c), &dirs[i], 0.05, 2000, 1e-15);
            refined.push(c);
        }
    }

    let modal = modal_value(profile.iter().map(|p| p.1));
    let mut exceptional: Vec<(Vec<f64>, usize)> = Vec::new();
    for c in refined.iter().chain(dirs.iter().take(if m == 1 { 2 } else { 0 })) {
        let k = multiplicity(a, c, tol);
        if k > modal && !exceptional.iter().any(|(d, _)| norm(&sub(d, c)) < 1e-6) {
            exceptional.push((c.clone(), k));
        }
    }
    for c in refined {
        let k = multiplicity(a, &c, tol);
        profile.push((c, k));
    }
    let min_gap = profile.iter().map(|(c, _)| relative_gap(a, c)).fold(f64::INFINITY, f64::min);
    let constant = profile.iter().all(|p| p.1 == profile[0].1);
    exceptional.sort_by(|x, y| y.1.cmp(&x.1).then_with(|| lex(&x.0, &y.0)));
    GutkinReport {
        min_gap,
        multiplicity_profile: profile,
        modal_multiplicity: modal,
        constant_multiplicity: constant,
        exceptional_directions: exceptional,
        tol,
    }
}

fn modal_value(values: impl Iterator<Item = usize>) -> usize {
    let mut counts = std::collections::BTreeMap::new();
    for v in values {
        *counts.entry(v).or_insert(0usize) += 1;
    }
    // Ties go to the smaller multiplicity.
    counts.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).map_or(1, |(k, _)| *k)
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn lex(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
}

/// The affine change of range used by the reduction, and the resulting map.
#[derive(Clone, Debug)]
pub struct Reduction {
    pub e: Vec<f64>,
    /// Unitary change of basis: bottom eigenspace first, top eigenvector last.
    pub basis: CMatrix,
    pub lambda_bottom: f64,
    pub lambda_top: f64,
    /// Orthonormal basis of `e`-perp in coefficient space.
    pub complement: Vec<Vec<f64>>,
    /// Corner entries removed from each complement form.
    pub corners: Vec<f64>,
    /// `n - 1` variables; the complement forms, then the identity last.
    pub auxiliary: QuadraticMap,
}

impl Reduction {
    /// Image of a range point under the affine change, with the identity
    /// component (always 1 on the sphere) appended, followed by the slice
    /// coordinate `(e . y - lambda_bottom) / (lambda_top - lambda_bottom)`.
    pub fn transform_point(&self, y: &[f64]) -> Vec<f64> {
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let slice = (dot(&self.e, y) - self.lambda_bottom) / (self.lambda_top - self.lambda_bottom);
        let mut out: Vec<f64> = self.complement.iter().zip(&self.corners).map(|(b, k)| dot(b, y) - k * slice).collect();
        out.push(1.0);
        out.push(slice);
        out
    }

    /// The forms of the transformed tuple on the full `n`-dimensional space,
    /// in the same order as [`Reduction::transform_point`].
    pub fn transformed_forms(&self, tuple: &JnrTuple) -> Vec<SymMatrix> {
        let n = tuple.n();
        let aux = &self.auxiliary;
        let mut forms = Vec::new();
        for (a, v) in aux.a().iter().zip(aux.v()) {
            let mut big = CMatrix::zeros(n, n);
            big.view_mut((0, 0), (n - 1, n - 1)).copy_from(a.matrix());
            for r in 0..n - 1 {
                big[(r, n - 1)] = -v[r];
                big[(n - 1, r)] = -v[r].conj();
            }
            forms.push(SymMatrix::new(tuple.field(), big).expect("finite"));
        }
        // The appended identity keeps its corner: x* I x = 1 on the sphere.
        let last = forms.len() - 1;
        forms[last] = SymMatrix::identity(tuple.field(), n);
        let mut corner = vec![0.0; n];
        corner[n - 1] = 1.0;
        forms.push(SymMatrix::diag(tuple.field(), &corner));
        forms
    }
}

/// Builds the reduction along `e`, which must have a bottom eigenvalue of
/// multiplicity exactly `n - 1`.
pub fn reduce(tuple: &JnrTuple, e: &[f64], tol: f64) -> Result<Reduction> {
    let n = tuple.n();
    let m = tuple.m();
    if e.len() != m || norm(e) == 0.0 {
        return Err(Error::InvalidInput(format!("direction must be a nonzero {m}-vector")));
    }
    if n < 2 {
        return Err(Error::Unsupported("reduction needs n >= 2".into()));
    }
    let e = normalize(e);
    let eig = sym_eig(&SymMatrix::combine(&e, tuple.matrices()))?;
    let mult = eig.bottom_multiplicity(tol);
    if mult != n - 1 {
        return Err(Error::InvalidInput(format!("bottom multiplicity along e is {mult}, expected {}", n - 1)));
    }
    let lambda_bottom = eig.values[..n - 1].iter().sum::<f64>() / (n - 1) as f64;
    let lambda_top = eig.values[n - 1];

    // Canonical bottom basis: Gram-Schmidt of the projected coordinate axes.
    let bottom = eig.vectors.columns(0, n - 1).into_owned();
    let proj = &bottom * bottom.adjoint();
    let mut basis = CMatrix::zeros(n, n);
    let mut filled = 0;
    for axis in 0..n {
        if filled == n - 1 {
            break;
        }
        let mut u: CVector = proj.column(axis).into_owned();
        for _ in 0..2 {
            for j in 0..filled {
                let b = basis.column(j).into_owned();
                let p = b.dotc(&u);
                u -= b * p;
            }
        }
        let r = u.norm();
        if r > 1e-6 {
            basis.set_column(filled, &(u / Cx::new(r, 0.0)));
            filled += 1;
        }
    }
    let mut top = eig.vectors.column(n - 1).into_owned();
    let lead = top.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or(Cx::new(1.0, 0.0));
    top *= lead.conj() / Cx::new(lead.norm(), 0.0);
    basis.set_column(n - 1, &top);

    let complement = orthonormal_complement(&e);
    let mut a_aux = Vec::with_capacity(m);
    let mut v_aux = Vec::with_capacity(m);
    let mut corners = Vec::with_capacity(m - 1);
    for b in &complement {
        let f = SymMatrix::combine(b, tuple.matrices()).congruence(&basis)?;
        let corner = f.matrix()[(n - 1, n - 1)].re;
        corners.push(corner);
        let block = f.matrix().view((0, 0), (n - 1, n - 1)).into_owned();
        a_aux.push(SymMatrix::new(tuple.field(), block)?);
        v_aux.push(-f.matrix().view((0, n - 1), (n - 1, 1)).column(0).into_owned());
    }
    a_aux.push(SymMatrix::identity(tuple.field(), n - 1));
    v_aux.push(CVector::zeros(n - 1));
    let f0 = vec![0.0; a_aux.len()];
    let auxiliary = QuadraticMap::new(tuple.field(), a_aux, v_aux, f0)?;
    Ok(Reduction { e, basis, lambda_bottom, lambda_top, complement, corners, auxiliary })
}

#[derive(Clone, Debug)]
pub enum JnrStatus {
    ConvexByGutkinScan,
    ConvexByReduction { e: Vec<f64>, auxiliary: QuadraticMap, z_max: ExtendedReal },
    SampledEvidence { lifts_checked: usize, all_infinite: bool, failures: Vec<(usize, f64)> },
    Inconclusive { reason: String },
}

impl JnrStatus {
    pub fn name(&self) -> &'static str {
        match self {
            Self::ConvexByGutkinScan => "convex_by_gutkin_scan",
            Self::ConvexByReduction { .. } => "convex_by_reduction",
            Self::SampledEvidence { .. } => "sampled_evidence",
            Self::Inconclusive { .. } => "inconclusive",
        }
    }
}

#[derive(Clone, Debug)]
pub struct JnrCertificate {
    pub status: JnrStatus,
    pub caveats: Vec<String>,
    pub gutkin: Option<GutkinReport>,
}

#[derive(Clone, Debug)]
pub struct JnrConfig {
    pub samples: usize,
    pub tol: f64,
    pub seed: u64,
    pub zmax: ZmaxConfig,
}

impl Default for JnrConfig {
    fn default() -> Self {
        Self { samples: 720, tol: 1e-8, seed: 0, zmax: ZmaxConfig::default() }
    }
}

/// Convexity of the range by the constant-multiplicity scan alone.
pub fn certify_gutkin(tuple: &JnrTuple, config: &JnrConfig) -> JnrCertificate {
    let report = eigengap_scan(tuple, config.samples, config.seed, config.tol);
    let status = if report.constant_multiplicity {
        JnrStatus::ConvexByGutkinScan
    } else {
        JnrStatus::Inconclusive { reason: "bottom multiplicity varies across sampled directions".into() }
    };
    let caveats = vec![format!(
        "constant multiplicity checked on {} sampled directions only",
        report.multiplicity_profile.len()
    )];
    JnrCertificate { status, caveats, gutkin: Some(report) }
}

pub fn certify_reduction(tuple: &JnrTuple, e: Option<&[f64]>, config: &JnrConfig) -> Result<JnrCertificate> {
    let n = tuple.n();
    let mut gutkin = None;
    let candidates: Vec<Vec<f64>> = match e {
        Some(e) => vec![e.to_vec()],
        None => {
            let report = eigengap_scan(tuple, config.samples, config.seed, config.tol);
            let c = report.exceptional_directions.iter().filter(|(_, k)| *k == n - 1).map(|(d, _)| d.clone()).collect();
            gutkin = Some(report);
            c
        }
    };
    if candidates.is_empty() {
        return Ok(JnrCertificate {
            status: JnrStatus::Inconclusive {
                reason: format!("no direction with bottom multiplicity n-1 = {} found; see the eigengap scan", n.saturating_sub(1)),
            },
            caveats: vec![],
            gutkin,
        });
    }
    let mut reasons = Vec::new();
    for e in &candidates {
        let red = match reduce(tuple, e, config.tol) {
            Ok(r) => r,
            Err(err) => {
                reasons.push(err.to_string());
                continue;
            }
        };
        let aux = &red.auxiliary;
        let mut c_plus = vec![0.0; aux.m()];
        c_plus[aux.m() - 1] = 1.0;
        let frame = support_frame(aux, &c_plus)?;
        match compute_zmax(aux, &frame, &config.zmax) {
            Ok(r) if !r.value.is_finite() => {
                let caveats = if r.coverage.method == "exact" || r.coverage.method == "empty" {
                    vec![]
                } else {
                    vec!["infinite auxiliary radius holds at scan resolution".to_string()]
                };
                return Ok(JnrCertificate {
                    status: JnrStatus::ConvexByReduction { e: red.e.clone(), auxiliary: red.auxiliary, z_max: r.value },
                    caveats,
                    gutkin,
                });
            }
            Ok(r) => reasons.push(format!("auxiliary map has finite radius {}", r.value)),
            Err(err) => reasons.push(err.to_string()),
        }
    }
    Ok(JnrCertificate { status: JnrStatus::Inconclusive { reason: reasons.join("; ") }, caveats: vec![], gutkin })
}

/// Appends the identity and checks the convexity radius of `K` random
/// inhomogeneous lifts. A universally quantified hypothesis is only sampled,
/// so this never proves convexity.
pub fn certify_random_lifts(tuple: &JnrTuple, lifts: usize, config: &JnrConfig) -> Result<JnrCertificate> {
    if lifts == 0 {
        return Err(Error::InvalidInput("at least one lift is required".into()));
    }
    let n = tuple.n();
    let field = tuple.field();
    let mut a: Vec<SymMatrix> = tuple.matrices().to_vec();
    a.push(SymMatrix::identity(field, n));
    let mut c_plus = vec![0.0; a.len()];
    c_plus[a.len() - 1] = 1.0;
    let mut rng = seeds::rng(config.seed, "random-lifts");
    let mut failures = Vec::new();
    for k in 0..lifts {
        let v: Vec<CVector> = (0..a.len())
            .map(|_| loop {
                let v = crate::generators::random_vector(&mut rng, n, field);
                if v.norm() >= 0.1 {
                    break v;
                }
            })
            .collect();
        let map = QuadraticMap::new(field, a.clone(), v, vec![0.0; a.len()])?;
        let frame = support_frame(&map, &c_plus)?;
        let cfg = ZmaxConfig { seed: seeds::derive(config.seed, &format!("lift-{k}")), ..config.zmax.clone() };
        let r = compute_zmax(&map, &frame, &cfg)?;
        if r.value.is_finite() {
            failures.push((k, r.value.value()));
        }
    }
    Ok(JnrCertificate {
        status: JnrStatus::SampledEvidence { lifts_checked: lifts, all_infinite: failures.is_empty(), failures },
        caveats: vec![format!("sampled evidence over {lifts} random nonzero lifts, not a proof")],
        gutkin: None,
    })
}

/// A face of the range with more than one point: the supporting hyperplane
/// `normal . y = support` meets the range in the range of the compressed
/// tuple on the bottom eigenspace.
#[derive(Clone, Debug)]
pub struct JnrFlatEdge {
    pub normal: Vec<f64>,
    pub support: f64,
    pub multiplicity: usize,
    /// For `m = 2`: the segment's endpoints.
    pub endpoints: Option<(Vec<f64>, Vec<f64>)>,
}

pub fn flat_edges(tuple: &JnrTuple, report: &GutkinReport) -> Vec<JnrFlatEdge> {
    let a = tuple.matrices();
    let mut out = Vec::new();
    for (c, k) in &report.exceptional_directions {
        let eig = sym_eig(&SymMatrix::combine(c, a)).expect("finite tuple");
        let q = eig.vectors.columns(0, *k).into_owned();
        let compressed: Vec<SymMatrix> = a.iter().map(|ai| ai.congruence(&q).expect("finite")).collect();
        // A face is a single point when every compression is scalar.
        let scalar = compressed.iter().all(|s| {
            let e = sym_eig(s).expect("finite");
            e.spread() <= report.tol * (1.0 + e.lambda_max().abs())
        });
        if scalar {
            continue;
        }
        let endpoints = (a.len() == 2).then(|| {
            let t = vec![-c[1], c[0]];
            let e = sym_eig(&SymMatrix::combine(&t, &compressed)).expect("finite");
            let lo = q.clone() * e.vector(0);
            let hi = q.clone() * e.vector(*k - 1);
            (tuple.point(&lo), tuple.point(&hi))
        });
        out.push(JnrFlatEdge { normal: c.clone(), support: eig.lambda_min(), multiplicity: *k, endpoints });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{flat_edge_pair, flat_edge_tuple};
    use crate::quadmap::{extend_cplus, homogenize};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    fn hausdorff(from: &[Vec<f64>], to: &[Vec<f64>]) -> f64 {
        from.iter()
            .map(|p| to.iter().map(|q| norm(&sub(p, q))).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    }

    #[test]
    fn rejects_mismatched_sizes() {
        let err = JnrTuple::new(Field::Real, vec![SymMatrix::identity(Field::Real, 2), SymMatrix::identity(Field::Real, 3)]);
        assert!(err.unwrap_err().to_string().contains("A[1]"));
    }

    #[test]
    fn flat_edge_tuple_scan() {
        let t = flat_edge_tuple();
        let r = eigengap_scan(&t, 720, 0, 1e-8);
        assert_eq!(r.modal_multiplicity, 1);
        assert!(!r.constant_multiplicity);
        assert_eq!(r.exceptional_directions.len(), 1);
        let (e, k) = &r.exceptional_directions[0];
        assert_eq!(*k, 2);
        assert!(e[0].abs() < 1e-12 && (e[1] - 1.0).abs() < 1e-12, "{e:?}");
    }

    #[test]
    fn identity_has_full_multiplicity() {
        let t = JnrTuple::new(Field::Real, vec![SymMatrix::identity(Field::Real, 3)]).unwrap();
        let r = eigengap_scan(&t, 10, 0, 1e-8);
        assert!(r.constant_multiplicity);
        assert!(r.multiplicity_profile.iter().all(|p| p.1 == 3));
    }

    #[test]
    fn generic_complex_pair_is_simple() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = (0..2).map(|_| crate::generators::random_hermitian(&mut rng, 4, Field::Complex)).collect();
        let t = JnrTuple::new(Field::Complex, a).unwrap();
        let r = eigengap_scan(&t, 360, 1, 1e-8);
        assert_eq!(r.modal_multiplicity, 1);
        assert!(r.constant_multiplicity);
        assert!(r.exceptional_directions.is_empty());
    }

    #[test]
    fn reduction_of_flat_edge_tuple() {
        let t = flat_edge_tuple();
        let c = certify_reduction(&t, None, &JnrConfig::default()).unwrap();
        let JnrStatus::ConvexByReduction { e, auxiliary, z_max } = c.status else { panic!("{:?}", c.status) };
        assert_eq!(z_max, ExtendedReal::Infinite);
        assert!(e[0].abs() < 1e-12);
        assert_eq!((auxiliary.m(), auxiliary.n()), (2, 2));
        let a1 = auxiliary.a()[0].matrix();
        assert!((a1 - SymMatrix::diag(Field::Real, &[2.0, -2.0]).matrix()).norm() < 1e-12);
        assert!((auxiliary.v()[0][0].re - 1.5).abs() < 1e-12 && (auxiliary.v()[0][1].re + 1.5).abs() < 1e-12);
        assert!((auxiliary.a()[1].matrix() - CMatrix::identity(2, 2)).norm() < 1e-15);
        assert!(auxiliary.v()[1].norm() == 0.0);
    }

    #[test]
    fn reduction_is_an_affine_image_of_the_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let t = flat_edge_tuple();
        let red = reduce(&t, &[0.0, 1.0], 1e-8).unwrap();
        let forms = red.transformed_forms(&t);
        for _ in 0..5000 {
            let x = random_sphere_point(&mut rng, 3, Field::Real);
            let y = red.transform_point(&t.point(&x));
            let xb = red.basis.adjoint() * &x;
            let direct: Vec<f64> = forms.iter().map(|f| f.quad_form(&xb)).collect();
            for (p, q) in y.iter().zip(&direct) {
                assert!((p - q).abs() < 1e-10, "{y:?} vs {direct:?}");
            }
        }
        // A generic complex tuple with a planted degenerate direction.
        let n = 4;
        let mut a: Vec<SymMatrix> = (0..2).map(|_| crate::generators::random_hermitian(&mut rng, n, Field::Complex)).collect();
        let q = crate::generators::random_unitary(&mut rng, n, Field::Complex);
        let planted = SymMatrix::new(Field::Complex, &q * SymMatrix::diag(Field::Complex, &[0.5, 0.5, 0.5, 3.0]).matrix() * q.adjoint()).unwrap();
        a.push(planted);
        let t = JnrTuple::new(Field::Complex, a).unwrap();
        let red = reduce(&t, &[0.0, 0.0, 1.0], 1e-8).unwrap();
        let forms = red.transformed_forms(&t);
        for _ in 0..1000 {
            let x = random_sphere_point(&mut rng, n, Field::Complex);
            let y = red.transform_point(&t.point(&x));
            let xb = red.basis.adjoint() * &x;
            for (p, f) in y.iter().zip(&forms) {
                assert!((p - f.quad_form(&xb)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn one_form_reduces_to_an_interval() {
        let t = JnrTuple::new(Field::Real, vec![SymMatrix::diag(Field::Real, &[0.0, 0.0, 1.0])]).unwrap();
        let c = certify_reduction(&t, None, &JnrConfig::default()).unwrap();
        assert!(matches!(c.status, JnrStatus::ConvexByReduction { .. }), "{:?}", c.status);
    }

    #[test]
    fn no_exceptional_direction_is_inconclusive() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = (0..2).map(|_| crate::generators::random_hermitian(&mut rng, 4, Field::Complex)).collect();
        let t = JnrTuple::new(Field::Complex, a).unwrap();
        let c = certify_reduction(&t, None, &JnrConfig { samples: 180, ..JnrConfig::default() }).unwrap();
        assert!(matches!(c.status, JnrStatus::Inconclusive { .. }));
    }

    #[test]
    fn random_lifts_report_evidence() {
        let t = flat_edge_tuple();
        let c = certify_random_lifts(&t, 20, &JnrConfig::default()).unwrap();
        let JnrStatus::SampledEvidence { lifts_checked, .. } = c.status else { panic!() };
        assert_eq!(lifts_checked, 20);
        assert!(c.caveats[0].contains("not a proof"));
        assert!(certify_random_lifts(&t, 0, &JnrConfig::default()).is_err());
    }

    #[test]
    fn flat_edge_of_the_range_is_horizontal() {
        let t = flat_edge_tuple();
        let r = eigengap_scan(&t, 720, 0, 1e-8);
        let edges = flat_edges(&t, &r);
        assert_eq!(edges.len(), 1);
        assert!(edges[0].normal[0].abs() < 1e-12);
        assert!(edges[0].support.abs() < 1e-12);
        let (p, q) = edges[0].endpoints.clone().unwrap();
        assert!(p[1].abs() < 1e-12 && q[1].abs() < 1e-12);
        assert!(close((p[0] - q[0]).abs(), 4.0, 1e-12));
    }

    #[test]
    fn cone_base_matches_cone_slices() {
        let map = flat_edge_pair();
        let frame = support_frame(&map, &[1.0, 0.0]).unwrap();
        let ext = extend_cplus(&frame, 1.0).unwrap();
        assert_eq!(ext, vec![1.0, 0.0, 1.0]);
        let hom = homogenize(&map);
        let base = cone_base(&hom, &ext).unwrap();
        assert_eq!((base.m(), base.n()), (2, 3));

        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let basis = orthonormal_complement(&ext);
        let slice: Vec<Vec<f64>> = (0..2000)
            .map(|_| {
                let x = random_sphere_point(&mut rng, 3, Field::Real);
                let y = hom.evaluate(&x);
                let h: f64 = y.iter().zip(&ext).map(|(a, b)| a * b).sum();
                basis.iter().map(|b| b.iter().zip(&y).map(|(p, q)| p * q).sum::<f64>() / h).collect()
            })
            .collect();
        let sampled = base.sample(2000, &mut rng);
        let mesh = hausdorff(&sampled[..200], &sampled[200..]).max(hausdorff(&slice[..200], &slice[200..]));
        assert!(hausdorff(&sampled, &slice) <= 3.0 * mesh);
        assert!(hausdorff(&slice, &sampled) <= 3.0 * mesh);
    }

    #[test]
    fn cone_base_of_normalized_lift_is_a_basis_drop() {
        let a = vec![SymMatrix::diag(Field::Real, &[1.0, -1.0]), SymMatrix::identity(Field::Real, 2)];
        let hom = HomogenizedMap { big_a: a, f0_shift: vec![0.0], field: Field::Real };
        let base = cone_base(&hom, &[0.0, 1.0]).unwrap();
        assert_eq!(base.m(), 1);
        assert!((base.matrices()[0].matrix().map(|x| x.re.abs()) - SymMatrix::diag(Field::Real, &[1.0, 1.0]).matrix().map(|x| x.re)).norm() < 1e-15);
        assert!(matches!(cone_base(&hom, &[1.0, 0.0]), Err(Error::NotDefiniteDirection { .. })));
    }
}
