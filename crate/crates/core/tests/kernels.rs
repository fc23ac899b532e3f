mod common;

use capmom::geometry::{canonicalize_pair, Axis, CanonicalPair, Limits, Relation};
use capmom::kernels::*;
use capmom::oracle::{mc_oracle, quad_oracle, QuadratureSpec};
use common::*;

// Independent references: mpmath integration of the difference-variable
// reductions (triangle-weighted 2D/3D integrals of 1/r), 20 digits.
const SELF_UNIT_I: f64 = 2.634_938_400_981_404_3;
const SELF_UNIT_MEAN: f64 = 2.973_209_598_247_378_7;
const COAXIAL_0_1: f64 = 2.186_644_768_278_850_6;
const COAXIAL_1: f64 = 0.778_829_068_704_168_3;
const COAXIAL_100: f64 = 0.008_862_121_556_317_063;
const COAXIAL_1000: f64 = 0.000_886_226_777_748_333_2;
const COPLANAR_EDGE: f64 = 0.985_598_389_512_688_7;
const PERPENDICULAR_Y2: f64 = 0.551_028_049_894_739_9;
const PERPENDICULAR_EDGE: f64 = 1.195_422_855_805_873_9;

fn unit_square() -> [f64; 2] {
    [0.0, 1.0]
}

fn coaxial(z: f64) -> CanonicalPair {
    let u = unit_square();
    CanonicalPair::parallel(Limits::new(u, u, u, u), z)
}

fn four_pi_eps0() -> f64 {
    consts().four_pi_epsilon_0()
}

#[test]
fn sign_factor_examples() {
    assert_eq!(sign_factor(0, 0, 0, 0), 1.0);
    assert_eq!(sign_factor(1, 0, 0, 0), -1.0);
    assert_eq!(sign_factor(1, 1, 0, 0), 1.0);
}

#[test]
fn self_constant_against_closed_mean() {
    let i = self_quadruple_i(1.0, 1.0).unwrap();
    assert!(rel(i, SELF_UNIT_I) < 1e-14);
    assert!(rel(2.0 * i / SQRT_PI, SELF_UNIT_MEAN) < 1e-14);
    // doubling every length is exact in binary
    assert_eq!(self_quadruple_i(2.0, 2.0).unwrap(), 8.0 * i);
    assert_eq!(self_quadruple_i(0.3, 1.7).unwrap(), self_quadruple_i(1.7, 0.3).unwrap());
}

#[test]
fn coaxial_squares_against_reference() {
    for (z, reference, tol) in [
        (0.1, COAXIAL_0_1, 1e-13),
        (1.0, COAXIAL_1, 1e-13),
        (100.0, COAXIAL_100, 1e-13),
        (1000.0, COAXIAL_1000, 1e-13),
    ] {
        let i = galerkin_i(&coaxial(z)).unwrap();
        assert!(rel(i, reference) < tol, "z = {z}: {i} vs {reference}");
    }
    // the corner sum alone, below its cancellation range
    let closed = parallel_quadruple_i(&coaxial(0.1).limits, 0.1).unwrap();
    assert!(rel(closed, COAXIAL_0_1) < 1e-13);
}

#[test]
fn coaxial_quadrature_oracle_to_six_digits() {
    let est = quad_oracle(&coaxial(0.1), &QuadratureSpec::default()).unwrap();
    assert!(rel(galerkin_i(&coaxial(0.1)).unwrap(), est.value) < 1e-6);
}

#[test]
fn far_coaxial_is_point_charge_plus_quadrupole() {
    // 1/d (1 - <rho^2>/(2 d^2)) with <rho^2> = 1/3 for two unit squares
    let pair = coaxial(100.0);
    let p = i_to_p(galerkin_i(&pair).unwrap(), 1.0, 1.0, &consts()) * four_pi_eps0();
    assert!(rel(p, 0.01 * (1.0 - 1.0 / 60_000.0)) < 1e-8);
    assert!(rel(p, 0.01) < 2e-5);
    let est = quad_oracle(&pair, &QuadratureSpec::default()).unwrap();
    assert!(rel(galerkin_i(&pair).unwrap(), est.value) < 1e-10);
}

#[test]
fn swap_is_bit_exact() {
    let l = Limits::new([0.1, 0.9], [-0.3, 0.4], [0.5, 2.0], [0.2, 0.7]);
    let pair = CanonicalPair::parallel(l, 0.35);
    let swapped = CanonicalPair::parallel(l.swapped(), -0.35);
    assert_eq!(galerkin_i(&pair).unwrap(), galerkin_i(&swapped).unwrap());
    assert_eq!(
        parallel_quadruple_i(&l, 0.35).unwrap(),
        parallel_quadruple_i(&l.swapped(), -0.35).unwrap()
    );
}

#[test]
fn coplanar_edge_pair() {
    let l = Limits::from_array([0.0, 1.0, 0.0, 1.0, 1.0, 2.0, 0.0, 1.0]);
    let i = coplanar_quadruple_i(&l).unwrap();
    assert!(rel(i, COPLANAR_EDGE) < 1e-14);
    let est = mc_oracle(&CanonicalPair::parallel(l, 0.0), 1_000_000, 11).unwrap();
    assert!((i - est.value).abs() <= est.error_estimate, "{i} vs {est:?}");
    // continuity of the limit
    let near = parallel_quadruple_i(&l, 1e-6).unwrap();
    assert!(rel(near, i) < 1e-5);
}

#[test]
fn coplanar_limit_discrepancy_shrinks() {
    let l = Limits::from_array([0.0, 1.0, 0.0, 1.0, 1.0, 2.0, 0.0, 1.0]);
    let i = coplanar_quadruple_i(&l).unwrap();
    let gaps: Vec<f64> = (2..=6)
        .map(|k| (parallel_quadruple_i(&l, 10f64.powi(-k)).unwrap() - i).abs())
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}

#[test]
fn coplanar_translation_is_exact_for_binary_shifts() {
    let l = Limits::from_array([0.0, 1.0, 0.0, 1.0, 1.0, 2.0, 0.0, 1.0]);
    let moved = Limits::from_array([4.0, 5.0, -2.0, -1.0, 5.0, 6.0, -2.0, -1.0]);
    assert_eq!(
        coplanar_quadruple_i(&l).unwrap(),
        coplanar_quadruple_i(&moved).unwrap()
    );
}

#[test]
fn coincident_coplanar_equals_self() {
    for (w, h) in [(1.0, 1.0), (0.3, 2.0), (1e-3, 5e-3)] {
        let l = Limits::new([0.0, w], [0.0, h], [0.0, w], [0.0, h]);
        assert!(rel(coplanar_quadruple_i(&l).unwrap(), self_quadruple_i(w, h).unwrap()) < 1e-12);
    }
}

#[test]
fn perpendicular_separated_against_reference() {
    let floor = tile(Axis::Z, 0.0, (0.0, 1.0), (0.0, 1.0));
    // plane y = 2, x in [0, 1], z in [0, 1]; the y-normal plane has (u, v) = (z, x)
    let wall = tile(Axis::Y, 2.0, (0.0, 1.0), (0.0, 1.0));
    let pair = canonicalize_pair(&floor, &wall).unwrap();
    assert_eq!(pair.relation, Relation::Perpendicular);
    let i = galerkin_i(&pair).unwrap();
    assert!(rel(i, PERPENDICULAR_Y2) < 1e-13);
    let est = quad_oracle(&pair, &QuadratureSpec::default()).unwrap();
    assert!(rel(i, est.value) < 1e-8);
}

#[test]
fn adjacent_cube_faces() {
    let floor = tile(Axis::Z, 0.0, (0.0, 1.0), (0.0, 1.0));
    let side = tile(Axis::X, 0.0, (0.0, 1.0), (0.0, 1.0));
    let pair = canonicalize_pair(&floor, &side).unwrap();
    let i = galerkin_i(&pair).unwrap();
    assert!(rel(i, PERPENDICULAR_EDGE) < 1e-12, "{i}");
    let est = mc_oracle(&pair, 1_000_000, 5).unwrap();
    assert!((i - est.value).abs() <= est.error_estimate, "{i} vs {est:?}");
}

#[test]
fn perpendicular_reflection_through_shared_axis() {
    let floor = tile(Axis::Z, 0.0, (0.2, 1.1), (0.0, 0.7));
    let wall = tile(Axis::Y, 0.7, (0.0, 0.5), (-0.4, 0.9));
    // reflect x -> -x; x is the u axis of z-tiles and the v axis of y-tiles
    let floor_r = tile(Axis::Z, 0.0, (-1.1, -0.2), (0.0, 0.7));
    let wall_r = tile(Axis::Y, 0.7, (0.0, 0.5), (-0.9, 0.4));
    assert!(rel(i_of(&floor, &wall), i_of(&floor_r, &wall_r)) < 1e-14);
}

/// Fixed-order Gauss-Legendre average of `1/r` over two tiles given by
/// point maps on `[0, 1]^2`.
fn gl_pair(p1: impl Fn(f64, f64) -> [f64; 3], p2: impl Fn(f64, f64) -> [f64; 3]) -> f64 {
    let (x, w) = capmom::oracle::gauss_legendre(12);
    let nodes: Vec<(f64, f64)> = x.iter().zip(&w).map(|(&x, &w)| (0.5 * (x + 1.0), 0.5 * w)).collect();
    let mut sum = 0.0;
    for &(s1, ws1) in &nodes {
        for &(t1, wt1) in &nodes {
            let a = p1(s1, t1);
            for &(s2, ws2) in &nodes {
                for &(t2, wt2) in &nodes {
                    let b = p2(s2, t2);
                    sum += ws1 * wt1 * ws2 * wt2 / capmom::geometry::distance(a, b);
                }
            }
        }
    }
    sum
}

#[test]
fn canonical_frame_matches_direct_coordinates() {
    let floor = tile(Axis::Z, 0.0, (0.0, 1.0), (0.0, 1.0));
    let side = tile(Axis::X, 0.0, (0.0, 1.0), (0.0, 1.0));
    let pair = canonicalize_pair(&floor, &side).unwrap();
    let lerp = |r: [f64; 2], s: f64| r[0] + (r[1] - r[0]) * s;
    let l = pair.limits;
    let framed = gl_pair(
        |s, t| pair.first_point(lerp(l.a, s), lerp(l.b, t)),
        |s, t| pair.second_point(lerp(l.c, s), lerp(l.d, t)),
    );
    let direct = gl_pair(
        |s, t| floor.point(lerp(floor.u_interval.as_pair(), s), lerp(floor.v_interval.as_pair(), t)),
        |s, t| side.point(lerp(side.u_interval.as_pair(), s), lerp(side.v_interval.as_pair(), t)),
    );
    assert!(rel(framed, direct) < 1e-12, "{framed} vs {direct}");
}

#[test]
fn point_charge_values() {
    let k = point_charge_p(1.0, &consts()).unwrap();
    assert!(rel(k, 8.987_551_79e9) < 1e-8);
    assert_eq!(point_charge_p(2.0, &consts()).unwrap(), k / 2.0);
    assert!(rel(point_charge_p(0.1, &consts()).unwrap(), 8.987_551_79e10) < 1e-8);
    assert!(point_charge_p(0.0, &consts()).is_err());
}

#[test]
fn collocation_values() {
    let sq = tile(Axis::Z, 0.0, (-0.5, 0.5), (-0.5, 0.5));
    let c = collocation_double_p(&sq, sq.center, &consts()).unwrap() * four_pi_eps0();
    assert!(rel(c, 4.0 * (1.0 + 2f64.sqrt()).ln()) < 1e-14);
    let far = collocation_double_p(&sq, [0.0, 0.0, 100.0], &consts()).unwrap() * four_pi_eps0();
    assert!(rel(far, 0.01) < 1e-4);
    let left = collocation_double_p(&sq, [-0.8, 0.3, 0.2], &consts()).unwrap();
    let right = collocation_double_p(&sq, [0.8, 0.3, 0.2], &consts()).unwrap();
    assert!(rel(left, right) < 1e-14);
}

#[test]
fn collocation_matches_quadrature_off_center() {
    let sq = tile(Axis::Z, 0.0, (0.2, 1.3), (-0.4, 0.9));
    let target = [0.0, 0.0, 0.3];
    let (x, w) = capmom::oracle::gauss_legendre(80);
    let map = |r: (f64, f64), x: f64| 0.5 * (r.1 - r.0) * x + 0.5 * (r.0 + r.1);
    let mut q = 0.0;
    for (xi, wi) in x.iter().zip(&w) {
        for (yj, wj) in x.iter().zip(&w) {
            let (u, v) = (map((0.2, 1.3), *xi), map((-0.4, 0.9), *yj));
            q += wi * wj * 0.25 * 1.1 * 1.3 / (u * u + v * v + 0.09).sqrt();
        }
    }
    let p = collocation_double_p(&sq, target, &consts()).unwrap() * four_pi_eps0() * sq.area;
    assert!(rel(p, q) < 1e-10, "{p} vs {q}");
}

#[test]
fn three_tiers_agree_far_away() {
    let a = tile(Axis::Z, 0.0, (0.0, 1.0), (0.0, 1.0));
    let b = tile(Axis::Z, 1000.0, (0.0, 1.0), (0.0, 1.0));
    let values: Vec<f64> = KernelTier::ALL.iter().map(|&t| p_of(&a, &b, t)).collect();
    for x in &values {
        for y in &values {
            assert!(rel(*x, *y) < 1e-5, "{values:?}");
        }
    }
}

#[test]
fn unit_self_coupling_in_normalized_units() {
    let a = tile(Axis::Z, 0.0, (0.0, 1.0), (0.0, 1.0));
    let p = p_of(&a, &a, KernelTier::GalerkinQuadruple) * four_pi_eps0();
    assert!(rel(p, SELF_UNIT_MEAN) < 1e-14);
}

#[test]
fn galerkin_symmetry_across_relations() {
    let a = tile(Axis::Z, 0.0, (0.0, 0.5), (0.0, 0.5));
    for b in [
        tile(Axis::Z, 0.3, (0.1, 0.7), (0.2, 0.4)),
        tile(Axis::Z, 0.0, (0.5, 1.0), (0.25, 0.75)),
        tile(Axis::X, 0.5, (0.0, 0.4), (-0.1, 0.5)),
        tile(Axis::Y, -0.2, (0.0, 0.9), (0.1, 0.6)),
    ] {
        let g = KernelTier::GalerkinQuadruple;
        assert!(rel(p_of(&a, &b, g), p_of(&b, &a, g)) <= 1e-14);
    }
}

#[test]
fn far_field_expansion_matches_quadrature() {
    // mismatched sides at ratios straddling the switch to the expansion
    for z in [0.8, 1.5, 3.0, 10.0] {
        let l = Limits::new([0.0, 0.4], [0.0, 0.3], [0.3, 0.5], [-0.2, 0.35]);
        let pair = CanonicalPair::parallel(l, z);
        let est = quad_oracle(&pair, &QuadratureSpec::default()).unwrap();
        let i = galerkin_i(&pair).unwrap();
        assert!(rel(i, est.value) < 1e-11, "z = {z}: {i} vs {}", est.value);
    }
}

#[test]
fn mismatched_sizes_are_bisected_consistently() {
    // a small tile next to a long one: splitting must not change the value
    let small = tile(Axis::Z, 0.0, (0.0, 0.05), (0.0, 0.05));
    let long = tile(Axis::Z, 0.0, (0.05, 3.0), (0.0, 0.05));
    let pair = canonicalize_pair(&small, &long).unwrap();
    let split = galerkin_i(&pair).unwrap();
    let closed = closed_form_i(&pair).unwrap();
    assert!(rel(split, closed) < 1e-9, "{split} vs {closed}");
    let est = mc_oracle(&pair, 1_000_000, 3).unwrap();
    assert!((split - est.value).abs() <= est.error_estimate);
}
