//! Brute-force reference values for the closed-form kernels.
//!
//! Two independent estimators of the four-fold `1/r` integral, both
//! reported in the same `I` form as the analytic kernels
//! (`I = (sqrt(pi)/2) * int int int int dA1 dA2 / r`):
//!
//! * [`quad_oracle`]: tensor-product Gauss-Legendre, points per axis doubled
//!   until successive estimates agree. Only for separated pairs, where the
//!   integrand is smooth.
//! * [`mc_oracle`]: Monte-Carlo mean of `1/r` over uniform point pairs.
//!   Works for any pair, including coincident and touching rectangles.
//!
//! [`verify_kernels`] runs both against randomized configurations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{distance, CanonicalPair, Limits, Relation};
use crate::kernels::{closed_form_i, galerkin_i, SQRT_PI};
use crate::par::{map_range, Execution};

/// Identifier of the generator behind [`mc_oracle`] and case generation.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.9), seed_from_u64, one stream per 65536-sample block";

const MC_BLOCK: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub initial_points: usize,
    pub max_levels: usize,
    /// Relative difference between successive levels that counts as converged.
    pub tolerance: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            initial_points: 4,
            max_levels: 5,
            tolerance: 1e-11,
        }
    }
}

impl QuadratureSpec {
    fn validate(&self) -> Result<()> {
        if self.initial_points < 2 || self.max_levels == 0 || !(self.tolerance > 0.0) {
            return Err(Error::InvalidOracle(format!(
                "quadrature needs >= 2 initial points, >= 1 level and a positive tolerance, got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMethod {
    TensorQuadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleEstimate {
    /// `I`-form value (m^3).
    pub value: f64,
    pub error_estimate: f64,
    pub method: OracleMethod,
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn mapped(rule: &(Vec<f64>, Vec<f64>), s: [f64; 2]) -> (Vec<f64>, Vec<f64>) {
    let (half, mid) = (0.5 * (s[1] - s[0]), 0.5 * (s[1] + s[0]));
    (
        rule.0.iter().map(|x| mid + half * x).collect(),
        rule.1.iter().map(|w| half * w).collect(),
    )
}

/// Tensor rule with `n` points per axis. The squared distance splits as
/// `A(i, j) + B(k, l)`, with `(i, j)` indexing the shared first axis.
fn tensor_estimate(pair: &CanonicalPair, n: usize, exec: Execution) -> f64 {
    let rule = gauss_legendre(n);
    let l = &pair.limits;
    let (xa, wa) = mapped(&rule, l.a);
    let (xb, wb) = mapped(&rule, l.b);
    let (xc, wc) = mapped(&rule, l.c);
    let (xd, wd) = mapped(&rule, l.d);

    let mut outer = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let dx = xa[i] - xc[j];
            outer.push((dx * dx, wa[i] * wc[j]));
        }
    }
    let mut inner = Vec::with_capacity(n * n);
    for k in 0..n {
        for m in 0..n {
            let d2 = match pair.relation {
                Relation::Perpendicular => {
                    let dy = xb[k] - pair.y_c.unwrap_or_default();
                    let dz = pair.z_c - xd[m];
                    dy * dy + dz * dz
                }
                _ => {
                    let dy = xb[k] - xd[m];
                    dy * dy + pair.z_c * pair.z_c
                }
            };
            inner.push((d2, wb[k] * wd[m]));
        }
    }
    let rows = map_range(exec, outer.len(), |r| {
        let (a, wo) = outer[r];
        wo * inner.iter().map(|&(b, wi)| wi / (a + b).sqrt()).sum::<f64>()
    });
    0.5 * SQRT_PI * rows.iter().sum::<f64>()
}

/// Tensor Gauss-Legendre evaluation of `I` for a separated pair.
pub fn quad_oracle(pair: &CanonicalPair, spec: &QuadratureSpec) -> Result<OracleEstimate> {
    quad_oracle_with(pair, spec, Execution::default())
}

pub fn quad_oracle_with(pair: &CanonicalPair, spec: &QuadratureSpec, exec: Execution) -> Result<OracleEstimate> {
    spec.validate()?;
    pair.limits.validate()?;
    let gap = pair.gap();
    if gap <= 1e-6 * pair.limits.scale() {
        return Err(Error::TouchingPair { gap });
    }
    let mut n = spec.initial_points;
    let mut previous = tensor_estimate(pair, n, exec);
    let mut difference = f64::INFINITY;
    for _ in 0..spec.max_levels {
        n *= 2;
        let current = tensor_estimate(pair, n, exec);
        difference = (current - previous).abs();
        previous = current;
        if difference <= spec.tolerance * current.abs() {
            return Ok(OracleEstimate {
                value: current,
                error_estimate: difference,
                method: OracleMethod::TensorQuadrature,
            });
        }
    }
    Err(Error::NonConvergence {
        levels: spec.max_levels,
        best: previous,
        difference,
    })
}

#[derive(Clone, Copy, Default)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1.0;
        let d = x - self.mean;
        self.mean += d / self.count;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.count == 0.0 {
            return other;
        }
        let count = self.count + other.count;
        let d = other.mean - self.mean;
        Moments {
            count,
            mean: self.mean + d * other.count / count,
            m2: self.m2 + other.m2 + d * d * self.count * other.count / count,
        }
    }
}

fn block_seed(seed: u64, block: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block as u64);
    rng
}

/// Mean of `1/r` over uniform point pairs, one point per rectangle, with
/// `3 * standard error` as the error bound. Reported in `I` form.
pub fn mc_oracle(pair: &CanonicalPair, samples: usize, seed: u64) -> Result<OracleEstimate> {
    mc_oracle_with(pair, samples, seed, Execution::default())
}

pub fn mc_oracle_with(pair: &CanonicalPair, samples: usize, seed: u64, exec: Execution) -> Result<OracleEstimate> {
    if samples < 10_000 {
        return Err(Error::InvalidOracle(format!(
            "Monte-Carlo oracle needs at least 1e4 samples, got {samples}"
        )));
    }
    let l = pair.limits;
    l.validate()?;
    let blocks = samples.div_ceil(MC_BLOCK);
    let moments = map_range(exec, blocks, |b| {
        let mut rng = block_seed(seed, b);
        let count = MC_BLOCK.min(samples - b * MC_BLOCK);
        let mut m = Moments::default();
        let lerp = |s: [f64; 2], t: f64| s[0] + (s[1] - s[0]) * t;
        for _ in 0..count {
            let p = pair.first_point(lerp(l.a, rng.random()), lerp(l.b, rng.random()));
            let q = pair.second_point(lerp(l.c, rng.random()), lerp(l.d, rng.random()));
            m.push(1.0 / distance(p, q));
        }
        m
    });
    let total = moments.into_iter().fold(Moments::default(), Moments::merge);
    let variance = total.m2 / (total.count - 1.0);
    let scale = 0.5 * SQRT_PI * l.first_area() * l.second_area();
    Ok(OracleEstimate {
        value: total.mean * scale,
        error_estimate: 3.0 * (variance / total.count).sqrt() * scale,
        method: OracleMethod::MonteCarlo,
    })
}

/// Mean inverse distance `<1/r>` from an `I`-form estimate.
pub fn mean_inverse_distance(i_value: f64, limits: &Limits) -> f64 {
    2.0 * i_value / (SQRT_PI * limits.first_area() * limits.second_area())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseGroup {
    SeparatedParallel,
    SeparatedCoplanar,
    SeparatedPerpendicular,
    TouchingOrSelf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub parallel_pairs: usize,
    pub coplanar_pairs: usize,
    pub perpendicular_pairs: usize,
    pub touching_cases: usize,
    pub mc_samples: usize,
    pub seed: u64,
    pub quadrature: QuadratureSpec,
    /// Relative threshold for quadrature-checked cases.
    pub quad_threshold: f64,
    /// Test hook: analytic values are multiplied by `1 + perturbation`.
    pub perturbation: f64,
}

impl VerifyOptions {
    pub fn new(trial_count: usize, seed: u64) -> VerifyOptions {
        VerifyOptions {
            parallel_pairs: trial_count,
            coplanar_pairs: trial_count / 4,
            perpendicular_pairs: trial_count,
            touching_cases: (trial_count / 4).max(50),
            mc_samples: 1_000_000,
            seed,
            quadrature: QuadratureSpec::default(),
            quad_threshold: 1e-8,
            perturbation: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub case_id: usize,
    pub group: CaseGroup,
    pub relation: Relation,
    /// `(a0, a1, b0, b1, c0, c1, d0, d1)`.
    pub limits: [f64; 8],
    pub z_c: f64,
    pub y_c: Option<f64>,
    /// 16-corner closed form.
    pub analytic: f64,
    /// Value used in assembly; differs from `analytic` for far-field pairs.
    pub production: f64,
    pub oracle: f64,
    pub oracle_method: OracleMethod,
    /// Relative threshold for quadrature cases, absolute 3-sigma for Monte Carlo.
    pub error_bound: f64,
    pub relative_error: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub rng: String,
    pub seed: u64,
    pub cases: Vec<CaseResult>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.cases.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CaseResult> {
        self.cases.iter().filter(|c| !c.pass)
    }

    pub fn count(&self, group: CaseGroup) -> (usize, usize) {
        let of_group = self.cases.iter().filter(|c| c.group == group);
        let total = of_group.clone().count();
        (of_group.filter(|c| c.pass).count(), total)
    }

    pub fn max_relative_error(&self, group: CaseGroup) -> f64 {
        self.cases
            .iter()
            .filter(|c| c.group == group)
            .map(|c| c.relative_error)
            .fold(0.0, f64::max)
    }
}

fn interval(rng: &mut ChaCha8Rng, lo_range: (f64, f64), len_range: (f64, f64)) -> [f64; 2] {
    let lo = rng.random_range(lo_range.0..lo_range.1);
    [lo, lo + rng.random_range(len_range.0..len_range.1)]
}

const SIDE: (f64, f64) = (0.2, 2.0);

fn random_sign(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

fn separated_parallel(rng: &mut ChaCha8Rng) -> CanonicalPair {
    let l = Limits::new(
        interval(rng, (-1.0, 1.0), SIDE),
        interval(rng, (-1.0, 1.0), SIDE),
        interval(rng, (-2.0, 2.0), SIDE),
        interval(rng, (-2.0, 2.0), SIDE),
    );
    let z = random_sign(rng) * rng.random_range(0.4..3.0) * l.scale();
    CanonicalPair::parallel(l, z)
}

fn separated_coplanar(rng: &mut ChaCha8Rng) -> CanonicalPair {
    let a = interval(rng, (-1.0, 1.0), SIDE);
    let b = interval(rng, (-1.0, 1.0), SIDE);
    let d = interval(rng, (-2.0, 2.0), SIDE);
    let w = rng.random_range(SIDE.0..SIDE.1);
    let scale = [a[1] - a[0], b[1] - b[0], d[1] - d[0], w].into_iter().fold(0.0, f64::max);
    let g = rng.random_range(0.4..3.0) * scale;
    let c = if rng.random::<bool>() {
        [a[1] + g, a[1] + g + w]
    } else {
        [a[0] - g - w, a[0] - g]
    };
    CanonicalPair::parallel(Limits::new(a, b, c, d), 0.0)
}

fn separated_perpendicular(rng: &mut ChaCha8Rng) -> CanonicalPair {
    let l = Limits::new(
        interval(rng, (-1.0, 1.0), SIDE),
        interval(rng, (-1.0, 1.0), SIDE),
        interval(rng, (-2.0, 2.0), SIDE),
        interval(rng, (-1.0, 1.0), SIDE),
    );
    let g = rng.random_range(0.4..3.0) * l.scale();
    let (mut y_c, mut z_c) = (
        rng.random_range(-2.0..2.0),
        rng.random_range(-2.0..2.0),
    );
    // push the second plane clear of the first rectangle, or the first plane
    // clear of the second rectangle
    if rng.random::<bool>() {
        y_c = if rng.random::<bool>() { l.b[1] + g } else { l.b[0] - g };
    } else {
        z_c = if rng.random::<bool>() { l.d[1] + g } else { l.d[0] - g };
    }
    CanonicalPair::perpendicular(l, y_c, z_c)
}

fn touching(rng: &mut ChaCha8Rng, index: usize) -> CanonicalPair {
    let a = interval(rng, (-1.0, 1.0), SIDE);
    let b = interval(rng, (-1.0, 1.0), SIDE);
    match index % 5 {
        0 => CanonicalPair::parallel(Limits::new(a, b, a, b), 0.0),
        1 => {
            // shared edge along x = a1, partial overlap in y
            let w = rng.random_range(SIDE.0..SIDE.1);
            let d = interval(rng, (b[0] - 0.5, b[1]), SIDE);
            CanonicalPair::parallel(Limits::new(a, b, [a[1], a[1] + w], d), 0.0)
        }
        2 => {
            // shared corner (a1, b1)
            let w = rng.random_range(SIDE.0..SIDE.1);
            let h = rng.random_range(SIDE.0..SIDE.1);
            CanonicalPair::parallel(Limits::new(a, b, [a[1], a[1] + w], [b[1], b[1] + h]), 0.0)
        }
        3 => {
            // L-shaped: second rectangle rises from the edge y = b1 of the first
            let z_c = rng.random_range(-1.0..1.0);
            let h = rng.random_range(SIDE.0..SIDE.1);
            let d = if rng.random::<bool>() { [z_c, z_c + h] } else { [z_c - h, z_c] };
            CanonicalPair::perpendicular(Limits::new(a, b, a, d), b[1], z_c)
        }
        _ => {
            // perpendicular, touching along part of an edge with shifted x range
            let z_c = rng.random_range(-1.0..1.0);
            let h = rng.random_range(SIDE.0..SIDE.1);
            let c = interval(rng, (a[0] - 0.5, a[1]), SIDE);
            CanonicalPair::perpendicular(Limits::new(a, b, c, [z_c, z_c + h]), b[0], z_c)
        }
    }
}

/// Runs the randomized kernel-versus-oracle comparison.
pub fn verify_kernels(trial_count: usize, seed: u64) -> VerificationReport {
    verify_kernels_with(&VerifyOptions::new(trial_count, seed))
}

pub fn verify_kernels_with(opts: &VerifyOptions) -> VerificationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut plan = Vec::new();
    for _ in 0..opts.parallel_pairs {
        plan.push((CaseGroup::SeparatedParallel, separated_parallel(&mut rng)));
    }
    for _ in 0..opts.coplanar_pairs {
        plan.push((CaseGroup::SeparatedCoplanar, separated_coplanar(&mut rng)));
    }
    for _ in 0..opts.perpendicular_pairs {
        plan.push((CaseGroup::SeparatedPerpendicular, separated_perpendicular(&mut rng)));
    }
    for i in 0..opts.touching_cases {
        plan.push((CaseGroup::TouchingOrSelf, touching(&mut rng, i)));
    }

    let cases = map_range(Execution::default(), plan.len(), |id| {
        let (group, pair) = plan[id];
        run_case(id, group, &pair, opts)
    });
    VerificationReport {
        rng: RNG_ALGORITHM.to_string(),
        seed: opts.seed,
        cases,
    }
}

fn run_case(case_id: usize, group: CaseGroup, pair: &CanonicalPair, opts: &VerifyOptions) -> CaseResult {
    let mut result = CaseResult {
        case_id,
        group,
        relation: pair.relation,
        limits: pair.limits.to_array(),
        z_c: pair.z_c,
        y_c: pair.y_c,
        analytic: f64::NAN,
        production: f64::NAN,
        oracle: f64::NAN,
        oracle_method: OracleMethod::TensorQuadrature,
        error_bound: opts.quad_threshold,
        relative_error: f64::INFINITY,
        pass: false,
        note: None,
    };
    let values = closed_form_i(pair).and_then(|c| Ok((c, galerkin_i(pair)?)));
    let (analytic, production) = match values {
        Ok((c, g)) => (c * (1.0 + opts.perturbation), g * (1.0 + opts.perturbation)),
        Err(e) => {
            result.note = Some(e.to_string());
            return result;
        }
    };
    result.analytic = analytic;
    result.production = production;
    let worst = |oracle: f64| {
        let e = |v: f64| ((v - oracle) / oracle).abs();
        e(analytic).max(e(production))
    };
    // cases run in parallel already; keep each oracle call sequential
    let exec = Execution::Sequential;
    if group == CaseGroup::TouchingOrSelf {
        let seed = opts.seed.wrapping_add(1 + case_id as u64);
        match mc_oracle_with(pair, opts.mc_samples, seed, exec) {
            Ok(est) => {
                result.oracle = est.value;
                result.oracle_method = est.method;
                result.error_bound = est.error_estimate;
                result.relative_error = worst(est.value);
                result.pass = (analytic - est.value).abs() <= est.error_estimate
                    && (production - est.value).abs() <= est.error_estimate;
            }
            Err(e) => result.note = Some(e.to_string()),
        }
    } else {
        match quad_oracle_with(pair, &opts.quadrature, exec) {
            Ok(est) => {
                result.oracle = est.value;
                result.relative_error = worst(est.value);
                result.pass = result.relative_error < opts.quad_threshold;
            }
            Err(e) => result.note = Some(e.to_string()),
        }
    }
    result
}
