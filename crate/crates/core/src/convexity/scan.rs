//! Search for flat-edge directions of an identity-metric pencil tuple.
//!
//! For a tuple `(M_j, w_j)` and unit coefficients `c`, the pencil
//! `B(c) = c.M - lambda_min(c.M)` is singular and positive semidefinite. The
//! objective `|B(c)^+ (c.w)|^2` is finite only where `c.w` has no component
//! in `ker B(c)`, so rather than minimizing it directly we look for zeros of
//! that kernel component and evaluate the objective there.

use rand::Rng;
use serde::Serialize;

use crate::numkernel::{solve_in_eigenbasis, sym_eig, CVector, Cx, SymMatrix};
use crate::sphere::{angle_point, cyclic_local_minima, golden_section, nelder_mead_sphere, norm, random_unit};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScanTolerances {
    /// Relative eigenvalue threshold for kernel membership.
    pub kernel_tol: f64,
    /// Relative threshold on the kernel component of `c.w`.
    pub residual_tol: f64,
}

impl Default for ScanTolerances {
    fn default() -> Self {
        Self { kernel_tol: 1e-8, residual_tol: 1e-7 }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct FlatProblem {
    pub mats: Vec<SymMatrix>,
    pub vecs: Vec<CVector>,
    /// Restrict to directions with `lambda_min(c.M) <= 0`.
    pub admissible_only: bool,
    pub tols: ScanTolerances,
    vscale: f64,
    sscale: f64,
}

#[derive(Clone, Debug)]
pub(crate) struct PencilEval {
    pub lambda_min: f64,
    pub residual: f64,
    pub consistent: bool,
    pub admissible: bool,
    /// Squared minimum-norm solution length, infinite when inconsistent.
    pub z: f64,
}

#[derive(Clone, Debug)]
pub(crate) struct ScanPoint {
    pub coords: Vec<f64>,
    pub eval: PencilEval,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanCoverage {
    pub method: String,
    pub dimension: usize,
    pub starts: usize,
    pub grid: usize,
    pub local_searches: usize,
    pub evaluations: usize,
    /// Smallest kernel residual seen, relative to the problem's vector scale.
    pub min_relative_residual: f64,
}

pub(crate) struct ScanOutcome {
    pub witnesses: Vec<ScanPoint>,
    pub coverage: ScanCoverage,
}

#[derive(Clone, Debug)]
pub(crate) struct ScanBudget {
    pub starts: usize,
    pub grid: usize,
    pub max_iter: usize,
}

impl FlatProblem {
    pub fn new(mats: Vec<SymMatrix>, vecs: Vec<CVector>, admissible_only: bool, tols: ScanTolerances) -> Self {
        let vscale = vecs.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let sscale = mats.iter().map(SymMatrix::frobenius_norm).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        Self { mats, vecs, admissible_only, tols, vscale, sscale }
    }

    pub fn dimension(&self) -> usize {
        self.mats.len()
    }

    fn combined_vector(&self, coords: &[f64]) -> CVector {
        let n = self.mats[0].n();
        let mut w = CVector::zeros(n);
        for (c, v) in coords.iter().zip(&self.vecs) {
            w += v * Cx::new(*c, 0.0);
        }
        w
    }

    pub fn eval(&self, coords: &[f64]) -> PencilEval {
        let h = SymMatrix::combine(coords, &self.mats);
        let w = self.combined_vector(coords);
        let eig = sym_eig(&h).expect("finite pencil");
        let lambda_min = eig.lambda_min();
        let s = solve_in_eigenbasis(&eig, lambda_min, &w, self.tols.kernel_tol);
        let w_norm = w.norm();
        let consistent = s.kernel_residual <= self.tols.residual_tol * w_norm
            || w_norm <= self.tols.residual_tol * self.vscale;
        let admissible = !self.admissible_only || lambda_min <= self.tols.kernel_tol * self.sscale;
        let z = if consistent { s.solution.norm_squared() } else { f64::INFINITY };
        PencilEval { lambda_min, residual: s.kernel_residual, consistent, admissible, z }
    }

    fn merit_of(&self, e: &PencilEval) -> f64 {
        let mut r = if self.vscale > 0.0 { e.residual / self.vscale } else { 0.0 };
        if self.admissible_only && e.lambda_min > 0.0 {
            r += e.lambda_min / self.sscale;
        }
        r
    }

    fn merit(&self, coords: &[f64]) -> f64 {
        self.merit_of(&self.eval(coords))
    }

    /// `|(B + eps)^{-1} c.w|^2` plus the admissibility penalty; finite and
    /// continuous in `c` for every `eps > 0`.
    fn regularized(&self, coords: &[f64], eps: f64) -> f64 {
        let h = SymMatrix::combine(coords, &self.mats);
        let w = self.combined_vector(coords);
        let eig = sym_eig(&h).expect("finite pencil");
        let low = eig.lambda_min();
        let mut total = 0.0;
        for (k, &l) in eig.values.iter().enumerate() {
            let a = eig.vectors.column(k).dotc(&w).norm_sqr();
            total += a / (l - low + eps).powi(2);
        }
        if self.admissible_only && low > 0.0 {
            total += 1e6 * (low / self.sscale).powi(2) * (1.0 + total);
        }
        total
    }

    fn accepts(e: &PencilEval) -> bool {
        e.consistent && e.admissible
    }

    pub fn scan<R: Rng>(&self, budget: &ScanBudget, rng: &mut R) -> ScanOutcome {
        let k = self.dimension();
        let mut evaluations = 0usize;
        let mut local_searches = 0usize;
        let mut min_merit = f64::INFINITY;
        let mut witnesses: Vec<ScanPoint> = Vec::new();
        let consider = |coords: Vec<f64>, e: PencilEval, witnesses: &mut Vec<ScanPoint>, min_merit: &mut f64| {
            let merit = self.merit_of(&e);
            if merit < *min_merit {
                *min_merit = merit;
            }
            if Self::accepts(&e) {
                witnesses.push(ScanPoint { coords, eval: e });
            }
        };

        let (method, starts, grid) = match k {
            0 => ("empty", 0, 0),
            1 => {
                for sign in [1.0, -1.0] {
                    let coords = vec![sign];
                    let e = self.eval(&coords);
                    evaluations += 1;
                    consider(coords, e, &mut witnesses, &mut min_merit);
                }
                ("pair", 2, 0)
            }
            2 => {
                let g = budget.grid.max(8);
                let step = std::f64::consts::TAU / g as f64;
                let merits: Vec<f64> = (0..g).map(|i| self.merit(&angle_point(i as f64 * step))).collect();
                evaluations += g;
                for i in cyclic_local_minima(&merits) {
                    local_searches += 1;
                    let center = i as f64 * step;
                    let mut count = 0usize;
                    let (theta, _) = golden_section(
                        |t| {
                            count += 1;
                            self.merit(&angle_point(t))
                        },
                        center - step,
                        center + step,
                        1e-15,
                    );
                    evaluations += count;
                    let coords = angle_point(theta);
                    let e = self.eval(&coords);
                    consider(coords, e, &mut witnesses, &mut min_merit);
                }
                ("grid", 0, g)
            }
            _ => {
                let starts = budget.starts.max(1);
                for _ in 0..starts {
                    local_searches += 1;
                    let start = random_unit(rng, k);
                    let mut count = 0usize;
                    let (coords, _) = nelder_mead_sphere(
                        |c| {
                            count += 1;
                            self.merit(c)
                        },
                        &start,
                        0.2,
                        budget.max_iter,
                        1e-13,
                    );
                    evaluations += count;
                    let e = self.eval(&coords);
                    let accepted = Self::accepts(&e);
                    consider(coords.clone(), e, &mut witnesses, &mut min_merit);
                    if accepted {
                        // Zero sets may be positive-dimensional here; slide
                        // along them towards smaller objective values.
                        let (refined, used) = self.refine_along_zero_set(&coords, budget.max_iter);
                        evaluations += used;
                        if let Some(p) = refined {
                            consider(p.coords, p.eval, &mut witnesses, &mut min_merit);
                        }
                    }
                }
                ("multistart", starts, 0)
            }
        };

        witnesses.sort_by(|a, b| {
            a.eval.z.total_cmp(&b.eval.z).then_with(|| {
                a.coords
                    .iter()
                    .zip(&b.coords)
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
        });
        let mut unique: Vec<ScanPoint> = Vec::new();
        for w in witnesses {
            if !unique.iter().any(|u| norm(&sub(&u.coords, &w.coords)) < 1e-7) {
                unique.push(w);
            }
        }

        let coverage = ScanCoverage {
            method: method.to_string(),
            dimension: k,
            starts,
            grid,
            local_searches,
            evaluations,
            min_relative_residual: if min_merit.is_finite() { min_merit } else { 0.0 },
        };
        ScanOutcome { witnesses: unique, coverage }
    }

    fn refine_along_zero_set(&self, start: &[f64], max_iter: usize) -> (Option<ScanPoint>, usize) {
        let mut used = 0usize;
        let mut point = start.to_vec();
        let top = self.sscale;
        for eps in [1e-2, 1e-3, 1e-4, 1e-5, 1e-6] {
            let (p, _) = nelder_mead_sphere(
                |c| {
                    used += 1;
                    self.regularized(c, eps * top)
                },
                &point,
                0.05,
                max_iter,
                1e-12,
            );
            point = p;
        }
        let (p, _) = nelder_mead_sphere(
            |c| {
                used += 1;
                self.merit(c)
            },
            &point,
            1e-3,
            max_iter,
            1e-14,
        );
        let e = self.eval(&p);
        if Self::accepts(&e) {
            (Some(ScanPoint { coords: p, eval: e }), used)
        } else {
            (None, used)
        }
    }
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}
