//! Coupling coefficients between tiles.
//!
//! The Galerkin tier averages `1/r` over both tiles. Through the Gaussian
//! transform `1/r = (2/sqrt(pi)) * int_0^inf exp(-u^2 r^2) du` the four-fold
//! area integral becomes `(2/sqrt(pi)) * I`, and `I` has a closed form as a
//! signed sum over the 16 corner combinations of the two rectangles.
//! Every `*_quadruple_i` function here returns that `I` (units m^3):
//!
//! ```text
//! P_ij = 2 I / (sqrt(pi) * 4 pi eps0 * S_i * S_j)
//! ```
//!
//! Terms whose polynomial prefactor vanishes are dropped before the
//! transcendental factor is evaluated; those are the terms whose
//! `asinh`/`atan` argument would otherwise divide by zero.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{canonicalize_pair, distance, CanonicalPair, Limits, Point3, Relation, Tile};

pub const SQRT_PI: f64 = 1.772_453_850_905_516;

/// Vacuum permittivity, CODATA 2018 (F/m).
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub epsilon_0: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants {
            epsilon_0: EPSILON_0,
        }
    }
}

impl PhysicalConstants {
    pub fn new(epsilon_0: f64) -> Result<PhysicalConstants> {
        if !(epsilon_0 > 0.0 && epsilon_0.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "epsilon_0 must be positive, got {epsilon_0}"
            )));
        }
        Ok(PhysicalConstants { epsilon_0 })
    }

    /// `4 pi eps0`, the unit in which normalized capacitances are quoted (per meter).
    pub fn four_pi_epsilon_0(&self) -> f64 {
        4.0 * PI * self.epsilon_0
    }

    pub fn coulomb_constant(&self) -> f64 {
        1.0 / self.four_pi_epsilon_0()
    }
}

/// Which approximation of the coupling coefficient to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum KernelTier {
    /// Point charge at the centers off the diagonal, centered double integral on it.
    #[serde(rename = "point")]
    PointCharge,
    /// Integral over the source tile against the target tile's center.
    #[serde(rename = "double")]
    CenterCollocation,
    /// Exact average of `1/r` over both tiles.
    #[default]
    #[serde(rename = "quad")]
    GalerkinQuadruple,
}

impl KernelTier {
    pub const ALL: [KernelTier; 3] = [
        KernelTier::PointCharge,
        KernelTier::CenterCollocation,
        KernelTier::GalerkinQuadruple,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelTier::PointCharge => "point",
            KernelTier::CenterCollocation => "double",
            KernelTier::GalerkinQuadruple => "quad",
        }
    }
}

impl fmt::Display for KernelTier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelTier {
    type Err = Error;

    fn from_str(s: &str) -> Result<KernelTier> {
        match s {
            "point" => Ok(KernelTier::PointCharge),
            "double" => Ok(KernelTier::CenterCollocation),
            "quad" => Ok(KernelTier::GalerkinQuadruple),
            other => Err(Error::InvalidConfig(format!(
                "unknown kernel tier {other:?} (expected point, double or quad)"
            ))),
        }
    }
}

/// `+1` when `i + j + k + l` is even, `-1` when odd. Inputs are 0 or 1.
pub fn sign_factor(i: u8, j: u8, k: u8, l: u8) -> f64 {
    debug_assert!(i <= 1 && j <= 1 && k <= 1 && l <= 1);
    if (i + j + k + l).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

#[inline]
fn negligible(coef: f64, tiny: f64) -> bool {
    coef == 0.0 || coef.abs() < tiny
}

/// `asinh(p / q)`; zero when `q == 0`, which only occurs under a vanishing prefactor.
#[inline]
fn asinh_ratio(p: f64, q: f64) -> f64 {
    if q == 0.0 {
        0.0
    } else {
        (p / q).asinh()
    }
}

/// `atan(p / q)` with the one-sided limit `+-pi/2` at `q == 0`.
#[inline]
fn atan_ratio(p: f64, q: f64) -> f64 {
    if q == 0.0 {
        if p == 0.0 {
            0.0
        } else {
            FRAC_PI_2.copysign(p)
        }
    } else {
        (p / q).atan()
    }
}

fn skip_threshold(limits: &Limits) -> f64 {
    let s = limits.scale();
    1e-30 * s * s * s
}

/// Orders the two rectangles so exchanging them yields the same sum,
/// bit for bit. The parallel and coplanar corner functions are even in
/// `x` and `y`, so the exchange itself does not change the value.
fn ordered(limits: &Limits) -> Limits {
    let first = [limits.a, limits.b];
    let second = [limits.c, limits.d];
    let key = |r: &[[f64; 2]; 2]| [r[0][0], r[0][1], r[1][0], r[1][1]];
    if key(&second)
        .iter()
        .zip(key(&first).iter())
        .find(|(s, f)| s != f)
        .is_some_and(|(s, f)| s < f)
    {
        limits.swapped()
    } else {
        *limits
    }
}

/// Corner function of the parallel-rectangle integral.
///
/// The printed r-term `(sqrt(pi)/12)(2z^2 - x^2 - y^2) r` is evaluated as
/// `(sqrt(pi)/12)(2z^2 rho^2/(r+|z|) - rho^2 r)`; the two differ by
/// `2|z|^3 sqrt(pi)/12`, the same at every corner, which the signed sum
/// annihilates. The rewritten form does not cancel catastrophically when
/// `|z|` is much larger than the rectangles.
#[inline]
fn parallel_corner(x: f64, y: f64, z: f64, tiny: f64) -> f64 {
    let (x2, y2, z2) = (x * x, y * y, z * z);
    let rho2 = x2 + y2;
    let r = (rho2 + z2).sqrt();
    if r == 0.0 {
        return 0.0;
    }
    let mut t = SQRT_PI / 12.0 * (2.0 * z2 * rho2 / (r + z.abs()) - rho2 * r);
    let c = y * (x2 - z2);
    if !negligible(c, tiny) {
        t += SQRT_PI / 4.0 * c * asinh_ratio(y, (x2 + z2).sqrt());
    }
    let c = x * (y2 - z2);
    if !negligible(c, tiny) {
        t += SQRT_PI / 4.0 * c * asinh_ratio(x, (y2 + z2).sqrt());
    }
    let c = x * y * z;
    if !negligible(c, tiny) {
        t -= SQRT_PI / 2.0 * c * atan_ratio(x * y, z * r);
    }
    t
}

/// Corner function of the coplanar limit. Square roots of `x^2` are `|x|`.
#[inline]
fn coplanar_corner(x: f64, y: f64, tiny: f64) -> f64 {
    let (x2, y2) = (x * x, y * y);
    let rho2 = x2 + y2;
    let mut t = -SQRT_PI / 12.0 * rho2 * rho2.sqrt();
    let c = y * x2;
    if !negligible(c, tiny) {
        t += SQRT_PI / 4.0 * c * asinh_ratio(y, x.abs());
    }
    let c = x * y2;
    if !negligible(c, tiny) {
        t += SQRT_PI / 4.0 * c * asinh_ratio(x, y.abs());
    }
    t
}

/// Corner function of the perpendicular-rectangle integral.
#[inline]
fn perpendicular_corner(x: f64, y: f64, z: f64, tiny: f64) -> f64 {
    let (x2, y2, z2) = (x * x, y * y, z * z);
    let r = (x2 + y2 + z2).sqrt();
    if r == 0.0 {
        return 0.0;
    }
    let mut t = -SQRT_PI / 6.0 * y * z * r;
    let c = z * (3.0 * x2 - z2);
    if !negligible(c, tiny) {
        t += SQRT_PI / 12.0 * c * asinh_ratio(y, (x2 + z2).sqrt());
    }
    let c = y * (3.0 * x2 - y2);
    if !negligible(c, tiny) {
        t += SQRT_PI / 12.0 * c * asinh_ratio(z, (x2 + y2).sqrt());
    }
    let c = x * y * z;
    if !negligible(c, tiny) {
        t += SQRT_PI / 2.0 * c * asinh_ratio(x, (y2 + z2).sqrt());
    }
    let c = x * z2;
    if !negligible(c, tiny) {
        t -= SQRT_PI / 4.0 * c * atan_ratio(x * y, z * r);
    }
    let c = x * y2;
    if !negligible(c, tiny) {
        t -= SQRT_PI / 4.0 * c * atan_ratio(x * z, y * r);
    }
    let c = x2 * x;
    if !negligible(c, tiny) {
        t -= SQRT_PI / 12.0 * c * atan_ratio(y * z, x * r);
    }
    t
}

/// Signed 16-corner sum with `x = a_i - c_j`, `y = b_k - d_l`.
fn corner_sum(limits: &Limits, mut corner: impl FnMut(f64, f64) -> f64) -> f64 {
    let mut sum = 0.0;
    for i in 0..2u8 {
        for j in 0..2u8 {
            let x = limits.a[i as usize] - limits.c[j as usize];
            for k in 0..2u8 {
                for l in 0..2u8 {
                    let y = limits.b[k as usize] - limits.d[l as usize];
                    sum += sign_factor(i, j, k, l) * corner(x, y);
                }
            }
        }
    }
    sum
}

/// Closed-form `I` for two parallel rectangles a distance `z_c` apart.
///
/// At `z_c == 0` every term that carries `z` drops and the result is the
/// coplanar limit.
pub fn parallel_quadruple_i(limits: &Limits, z_c: f64) -> Result<f64> {
    limits.validate()?;
    let tiny = skip_threshold(limits);
    let l = ordered(limits);
    Ok(corner_sum(&l, |x, y| parallel_corner(x, y, z_c, tiny)))
}

/// Closed-form `I` for two rectangles in the same plane.
///
/// Coincident rectangles are accepted and give the self-coupling value.
pub fn coplanar_quadruple_i(limits: &Limits) -> Result<f64> {
    limits.validate()?;
    let tiny = skip_threshold(limits);
    let l = ordered(limits);
    Ok(corner_sum(&l, |x, y| coplanar_corner(x, y, tiny)))
}

/// Closed-form `I` of a `w x h` rectangle with itself.
pub fn self_quadruple_i(w: f64, h: f64) -> Result<f64> {
    if !(w > 0.0 && h > 0.0 && w.is_finite() && h.is_finite()) {
        return Err(Error::DegenerateRectangle {
            width: w,
            height: h,
        });
    }
    let (w2, h2) = (w * w, h * h);
    Ok(SQRT_PI / 3.0 * (w2 * w + h2 * h) - SQRT_PI / 3.0 * (w2 + h2) * (w2 + h2).sqrt()
        + SQRT_PI * (h * w2 * (h / w).asinh() + w * h2 * (w / h).asinh()))
}

/// Closed-form `I` for perpendicular rectangles in the frame of
/// [`CanonicalPair`]: `x = a_i - c_j`, `y = b_k - y_c`, `z = z_c - d_l`.
pub fn perpendicular_quadruple_i(limits: &Limits, y_c: f64, z_c: f64) -> Result<f64> {
    limits.validate()?;
    let tiny = skip_threshold(limits);
    let mut sum = 0.0;
    for i in 0..2u8 {
        for j in 0..2u8 {
            let x = limits.a[i as usize] - limits.c[j as usize];
            for k in 0..2u8 {
                let y = limits.b[k as usize] - y_c;
                for l in 0..2u8 {
                    let z = z_c - limits.d[l as usize];
                    sum += sign_factor(i, j, k, l) * perpendicular_corner(x, y, z, tiny);
                }
            }
        }
    }
    Ok(sum)
}

/// Largest expansion degree [`far_field_i`] accepts.
pub const MAX_FAR_FIELD_ORDER: usize = 24;

/// `(ratio, order)`: at center distance / (sum of half-diagonals) of at
/// least `ratio`, truncating after `order` keeps the relative error near
/// 1e-15. Below the last ratio the corner sum is better conditioned.
const FAR_FIELD_ORDERS: [(f64, usize); 5] = [(30.0, 6), (14.0, 8), (10.0, 10), (6.0, 12), (4.0, 16)];

/// Smallest separation ratio handled by [`far_field_i`] in [`galerkin_i`].
pub const FAR_FIELD_RATIO: f64 = 4.0;

/// Number of multi-indices of total degree below `n`; the first flat
/// index of degree `n`.
#[inline]
fn degree_base(n: usize) -> usize {
    n * (n + 1) * (n + 2) / 6
}

/// Position of `(i, j, n - i - j)` within its degree block, ordered by `i`
/// then `j`.
#[inline]
fn row_start(n: usize, i: usize) -> usize {
    i * (n + 1) - i * i.saturating_sub(1) / 2
}

/// `E[w^k]`, `k = 0..=order`, for `w = s - t` with `s` and `t` independent
/// and uniform on centered intervals of lengths `l1` and `l2`. Symmetric in
/// `l1, l2` bit for bit.
fn difference_moments(l1: f64, l2: f64, order: usize) -> [f64; MAX_FAR_FIELD_ORDER + 1] {
    let uniform = |l: f64| {
        let mut m = [0.0; MAX_FAR_FIELD_ORDER + 1];
        let h = 0.5 * l;
        let mut p = 1.0;
        for (k, slot) in m.iter_mut().enumerate().take(order + 1) {
            if k % 2 == 0 {
                *slot = p / (k + 1) as f64;
            }
            p *= h;
        }
        m
    };
    let (x, y) = (uniform(l1), uniform(l2));
    let mut out = [0.0; MAX_FAR_FIELD_ORDER + 1];
    for k in (0..=order).step_by(2) {
        let mut binom = 1.0;
        let mut sum = 0.0;
        for j in 0..=k / 2 {
            if j > 0 {
                binom = binom * (k + 1 - j) as f64 / j as f64;
            }
            if j % 2 != 0 {
                continue;
            }
            let jj = k - j;
            sum += if j == jj {
                binom * x[j] * y[j]
            } else {
                binom * (x[j] * y[jj] + x[jj] * y[j])
            };
        }
        out[k] = sum;
    }
    out
}

/// Moment expansion of `I` about the center offset, truncated after total
/// degree `order` (at most [`MAX_FAR_FIELD_ORDER`]).
///
/// `<1/|R + w|>` is expanded in the difference `w` of two uniform points;
/// with independent axes only even moments survive. Taylor coefficients of
/// `1/r` follow `n r^2 T_a = (2n - 1) sum_i R_i T_(a - e_i) - (n - 1) sum_i T_(a - 2 e_i)`.
/// `extents[axis] = (first, second)` side lengths, zero along a normal.
pub fn far_field_i(offset: Point3, extents: [(f64, f64); 3], area1: f64, area2: f64, order: usize) -> f64 {
    let order = order.min(MAX_FAR_FIELD_ORDER);
    let [rx, ry, rz] = offset;
    let r2 = rx * rx + ry * ry + rz * rz;
    let mut t = vec![0.0; degree_base(order + 1)];
    t[0] = 1.0 / r2.sqrt();
    for n in 1..=order {
        let (a, b, inv) = ((2 * n - 1) as f64, (n - 1) as f64, 1.0 / (n as f64 * r2));
        let (base, b1) = (degree_base(n), degree_base(n - 1));
        let b2 = if n >= 2 { degree_base(n - 2) } else { 0 };
        for i in 0..=n {
            let out = base + row_start(n, i);
            // rows of degree n - 1 and n - 2 holding the same or smaller i
            let p_i = b1 + row_start(n - 1, i);
            let p_im1 = if i >= 1 { b1 + row_start(n - 1, i - 1) } else { 0 };
            let q_i = if n >= 2 { b2 + row_start(n - 2, i) } else { 0 };
            let q_im2 = if i >= 2 { b2 + row_start(n - 2, i - 2) } else { 0 };
            for j in 0..=n - i {
                let k = n - i - j;
                let mut s1 = 0.0;
                let mut s2 = 0.0;
                if i >= 1 {
                    s1 += rx * t[p_im1 + j];
                }
                if j >= 1 {
                    s1 += ry * t[p_i + j - 1];
                }
                if k >= 1 {
                    s1 += rz * t[p_i + j];
                }
                if i >= 2 {
                    s2 += t[q_im2 + j];
                }
                if j >= 2 {
                    s2 += t[q_i + j - 2];
                }
                if k >= 2 {
                    s2 += t[q_i + j];
                }
                t[out + j] = (a * s1 - b * s2) * inv;
            }
        }
    }
    let [mx, my, mz] = extents.map(|(l1, l2)| difference_moments(l1, l2, order));
    let mut mean = 0.0;
    // highest degree first so the small terms accumulate before the leading one
    for n in (0..=order - order % 2).rev().step_by(2) {
        let base = degree_base(n);
        for i in (0..=n).step_by(2) {
            let row = base + row_start(n, i);
            for j in (0..=n - i).step_by(2) {
                mean += t[row + j] * mx[i] * my[j] * mz[n - i - j];
            }
        }
    }
    0.5 * SQRT_PI * (area1 * area2) * mean
}

/// Center offset and per-axis extents of a canonical pair.
fn pair_moments(pair: &CanonicalPair) -> (Point3, [(f64, f64); 3]) {
    let l = &pair.limits;
    let len = |r: [f64; 2]| r[1] - r[0];
    let mid = |r: [f64; 2]| 0.5 * (r[0] + r[1]);
    match pair.y_c {
        None => (
            [mid(l.c) - mid(l.a), mid(l.d) - mid(l.b), pair.z_c],
            [(len(l.a), len(l.c)), (len(l.b), len(l.d)), (0.0, 0.0)],
        ),
        Some(y_c) => (
            [mid(l.c) - mid(l.a), y_c - mid(l.b), mid(l.d) - pair.z_c],
            [(len(l.a), len(l.c)), (len(l.b), 0.0), (0.0, len(l.d))],
        ),
    }
}

/// Expansion degree [`galerkin_i`] uses for `pair`, or `None` when the
/// pair is too close and the closed form is evaluated instead.
pub fn far_field_order(pair: &CanonicalPair) -> Option<usize> {
    if !matches!(
        pair.relation,
        Relation::Coplanar | Relation::ParallelOffset | Relation::Perpendicular
    ) {
        return None;
    }
    let (offset, ext) = pair_moments(pair);
    let half_diag = |pick: fn((f64, f64)) -> f64| {
        0.5 * ext.iter().map(|&e| pick(e) * pick(e)).sum::<f64>().sqrt()
    };
    let reach = half_diag(|e| e.0) + half_diag(|e| e.1);
    let r2 = offset.iter().map(|x| x * x).sum::<f64>();
    FAR_FIELD_ORDERS
        .iter()
        .find(|(ratio, _)| r2 >= (ratio * reach) * (ratio * reach))
        .map(|&(_, order)| order)
}

/// [`galerkin_i`] bisects the longest side while it exceeds this multiple
/// of the shortest side of the pair.
pub const SPLIT_RATIO: f64 = 2.0;

const MAX_SPLIT_DEPTH: usize = 12;

/// `I` for any canonical pair.
///
/// Well-separated pairs use [`far_field_i`]. Closer pairs with mismatched
/// sides are bisected along the longest side, since `I` is additive over a
/// partition of either rectangle; pieces that end up separated go to the
/// expansion. What remains uses the 16-corner closed form. Both measures
/// keep the result accurate where the corner sum would cancel.
pub fn galerkin_i(pair: &CanonicalPair) -> Result<f64> {
    pair.limits.validate()?;
    let pair = match pair.y_c {
        // I is even in z_c and symmetric in the two rectangles
        None => CanonicalPair::parallel(ordered(&pair.limits), pair.z_c.abs()),
        Some(_) => *pair,
    };
    galerkin_split(&pair, 0)
}

fn galerkin_split(pair: &CanonicalPair, depth: usize) -> Result<f64> {
    if let Some(order) = far_field_order(pair) {
        let l = &pair.limits;
        let (offset, ext) = pair_moments(pair);
        return Ok(far_field_i(offset, ext, l.first_area(), l.second_area(), order));
    }
    if depth < MAX_SPLIT_DEPTH && pair.relation != Relation::Identical {
        if let Some((lo, hi)) = bisect_longest(pair) {
            return Ok(galerkin_split(&lo, depth + 1)? + galerkin_split(&hi, depth + 1)?);
        }
    }
    closed_form_i(pair)
}

fn bisect_longest(pair: &CanonicalPair) -> Option<(CanonicalPair, CanonicalPair)> {
    let mut sides = pair.limits.to_array();
    let len = |k: usize, s: &[f64; 8]| s[2 * k + 1] - s[2 * k];
    let longest = (0..4).max_by(|&p, &q| len(p, &sides).total_cmp(&len(q, &sides)))?;
    let shortest = (0..4).map(|k| len(k, &sides)).fold(f64::INFINITY, f64::min);
    if len(longest, &sides) <= SPLIT_RATIO * shortest {
        return None;
    }
    let mid = 0.5 * (sides[2 * longest] + sides[2 * longest + 1]);
    let rebuild = |s: [f64; 8]| match pair.y_c {
        None => CanonicalPair::parallel(Limits::from_array(s), pair.z_c),
        Some(y_c) => CanonicalPair::perpendicular(Limits::from_array(s), y_c, pair.z_c),
    };
    let mut upper = sides;
    sides[2 * longest + 1] = mid;
    upper[2 * longest] = mid;
    Some((rebuild(sides), rebuild(upper)))
}

/// The 16-corner closed form for any canonical pair, regardless of distance.
pub fn closed_form_i(pair: &CanonicalPair) -> Result<f64> {
    let l = &pair.limits;
    match pair.relation {
        Relation::Identical => self_quadruple_i(l.a[1] - l.a[0], l.b[1] - l.b[0]),
        Relation::Coplanar => coplanar_quadruple_i(l),
        Relation::ParallelOffset => parallel_quadruple_i(l, pair.z_c),
        Relation::Perpendicular => {
            perpendicular_quadruple_i(l, pair.y_c.unwrap_or_default(), pair.z_c)
        }
        Relation::Skew => Err(Error::InvalidGeometry(
            "skew rectangle pairs are not supported".into(),
        )),
    }
}

/// Converts a closed-form `I` into a coupling coefficient (1/F).
pub fn i_to_p(i: f64, area1: f64, area2: f64, consts: &PhysicalConstants) -> f64 {
    2.0 * i / (SQRT_PI * consts.four_pi_epsilon_0() * area1 * area2)
}

/// Potential coefficient of a unit point charge at distance `d`.
pub fn point_charge_p(d: f64, consts: &PhysicalConstants) -> Result<f64> {
    if d == 0.0 || !d.is_finite() {
        return Err(Error::ZeroDistance);
    }
    Ok(consts.coulomb_constant() / d.abs())
}

#[inline]
fn collocation_corner(x: f64, y: f64, z: f64) -> f64 {
    let (x2, y2, z2) = (x * x, y * y, z * z);
    let mut t = 0.0;
    if x != 0.0 {
        t += x * asinh_ratio(y, (x2 + z2).sqrt());
    }
    if y != 0.0 {
        t += y * asinh_ratio(x, (y2 + z2).sqrt());
    }
    if x * y * z != 0.0 {
        t -= z * atan_ratio(x * y, z * (x2 + y2 + z2).sqrt());
    }
    t
}

/// `int int dx dy / sqrt(x^2 + y^2 + z^2)` over `[x0, x1] x [y0, y1]`, in
/// coordinates relative to the observation point (units m).
///
/// The corner function is
/// `x asinh(y/sqrt(x^2+z^2)) + y asinh(x/sqrt(y^2+z^2)) - z atan(xy/(z r))`,
/// which equals `x ln(y+r) + y ln(x+r) - z atan(...)`
/// up to terms linear in a single corner coordinate that cancel in the sum.
pub fn rectangle_point_integral(x: [f64; 2], y: [f64; 2], z: f64) -> f64 {
    collocation_corner(x[1], y[1], z) - collocation_corner(x[0], y[1], z)
        - collocation_corner(x[1], y[0], z)
        + collocation_corner(x[0], y[0], z)
}

/// Mean potential coefficient over `source` of a unit charge at `target`.
pub fn collocation_double_p(source: &Tile, target: Point3, consts: &PhysicalConstants) -> Result<f64> {
    let (w, h) = (source.u_interval.len(), source.v_interval.len());
    if !(w > 0.0 && h > 0.0) {
        return Err(Error::DegenerateRectangle {
            width: w,
            height: h,
        });
    }
    let (ua, va) = source.plane_axis.in_plane();
    let (pu, pv) = (target[ua.index()], target[va.index()]);
    let z = target[source.plane_axis.index()] - source.plane_offset;
    let integral = rectangle_point_integral(
        [source.u_interval.lo - pu, source.u_interval.hi - pu],
        [source.v_interval.lo - pv, source.v_interval.hi - pv],
        z,
    );
    Ok(integral / (consts.four_pi_epsilon_0() * source.area))
}

/// Coupling coefficient `P_12` (1/F) under the chosen tier.
pub fn coupling_p(t1: &Tile, t2: &Tile, tier: KernelTier, consts: &PhysicalConstants) -> Result<f64> {
    match tier {
        KernelTier::GalerkinQuadruple => {
            let pair = canonicalize_pair(t1, t2)?;
            Ok(i_to_p(galerkin_i(&pair)?, t1.area, t2.area, consts))
        }
        KernelTier::PointCharge | KernelTier::CenterCollocation if t1 == t2 => {
            collocation_double_p(t1, t1.center, consts)
        }
        KernelTier::PointCharge => point_charge_p(distance(t1.center, t2.center), consts),
        KernelTier::CenterCollocation => collocation_double_p(t1, t2.center, consts),
    }
}
