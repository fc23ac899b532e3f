//! Pair generators and invariant checks shared by the property tests and
//! the acceptance suite.
#![allow(dead_code)]

use capmom::geometry::{canonicalize_pair, Axis, Interval, Relation, Tile};
use capmom::kernels::{coupling_p, galerkin_i, KernelTier, PhysicalConstants};

pub fn tile(axis: Axis, offset: f64, u: (f64, f64), v: (f64, f64)) -> Tile {
    Tile::new(
        axis,
        offset,
        Interval::new(u.0, u.1).unwrap(),
        Interval::new(v.0, v.1).unwrap(),
        0,
    )
}

pub fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

pub fn consts() -> PhysicalConstants {
    PhysicalConstants::default()
}

/// Draws numbers in `[0, 1)` from a fixed list, cycling.
pub struct Draws<'a> {
    values: &'a [f64],
    next: usize,
}

impl<'a> Draws<'a> {
    pub fn new(values: &'a [f64]) -> Draws<'a> {
        assert!(!values.is_empty());
        Draws { values, next: 0 }
    }

    pub fn unit(&mut self) -> f64 {
        let x = self.values[self.next % self.values.len()];
        self.next += 1;
        x
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn index(&mut self, n: usize) -> usize {
        ((self.unit() * n as f64) as usize).min(n - 1)
    }

    fn interval(&mut self) -> (f64, f64) {
        let lo = self.range(-1.0, 1.0);
        (lo, lo + self.range(0.1, 1.5))
    }
}

/// Number of draws one call of [`random_pair`] consumes at most.
pub const DRAWS_PER_PAIR: usize = 16;

/// A non-overlapping pair: parallel offset, coplanar (possibly
/// edge-touching), perpendicular (possibly edge-touching), or identical.
pub fn random_pair(d: &mut Draws) -> (Tile, Tile) {
    let axis = Axis::from_index(d.index(3));
    let offset = d.range(-1.0, 1.0);
    let first = tile(axis, offset, d.interval(), d.interval());
    match d.index(4) {
        0 => {
            let dz = d.range(0.05, 2.0) * if d.unit() < 0.5 { -1.0 } else { 1.0 };
            (first, tile(axis, offset + dz, d.interval(), d.interval()))
        }
        1 => {
            let gap = if d.unit() < 0.3 { 0.0 } else { d.range(0.0, 1.0) };
            let lo = first.u_interval.hi + gap;
            let u = (lo, lo + d.range(0.1, 1.5));
            (first, tile(axis, offset, u, d.interval()))
        }
        2 => {
            let other = Axis::from_index((axis.index() + 1 + d.index(2)) % 3);
            let along_other = first.extent(other);
            let gap = if d.unit() < 0.3 { 0.0 } else { d.range(0.0, 1.0) };
            let other_offset = if d.unit() < 0.5 {
                along_other.hi + gap
            } else {
                along_other.lo - gap
            };
            // second tile's extent along `axis` starts at the first tile's plane
            let gap2 = if d.unit() < 0.5 { 0.0 } else { d.range(0.0, 1.0) };
            let start = offset + gap2;
            let along_axis = (start, start + d.range(0.1, 1.5));
            let along_shared = d.interval();
            let (ou, _) = other.in_plane();
            let (u, v) = if ou == axis {
                (along_axis, along_shared)
            } else {
                (along_shared, along_axis)
            };
            (first, tile(other, other_offset, u, v))
        }
        _ => (first, first),
    }
}

pub fn i_of(t1: &Tile, t2: &Tile) -> f64 {
    galerkin_i(&canonicalize_pair(t1, t2).unwrap()).unwrap()
}

pub fn p_of(t1: &Tile, t2: &Tile, tier: KernelTier) -> f64 {
    coupling_p(t1, t2, tier, &consts()).unwrap()
}

pub type Check = Result<(), String>;

fn within(what: &str, a: f64, b: f64, tol: f64) -> Check {
    let e = rel(a, b);
    if e <= tol {
        Ok(())
    } else {
        Err(format!("{what}: {a:e} vs {b:e}, relative {e:e} > {tol:e}"))
    }
}

pub fn check_swap_symmetry(t1: &Tile, t2: &Tile) -> Check {
    let g = KernelTier::GalerkinQuadruple;
    within("swap symmetry", p_of(t1, t2, g), p_of(t2, t1, g), 1e-14)
}

pub fn check_scaling(t1: &Tile, t2: &Tile, lambda: f64) -> Check {
    let (s1, s2) = (t1.scaled(lambda), t2.scaled(lambda));
    within("I scaling", i_of(&s1, &s2), lambda.powi(3) * i_of(t1, t2), 1e-12)?;
    let g = KernelTier::GalerkinQuadruple;
    within("P scaling", p_of(&s1, &s2, g) * lambda, p_of(t1, t2, g), 1e-12)
}

pub fn check_translation(t1: &Tile, t2: &Tile, shift: [f64; 3]) -> Check {
    let moved = i_of(&t1.translated(shift), &t2.translated(shift));
    within("translation", moved, i_of(t1, t2), 1e-12)
}

pub fn check_positivity(t1: &Tile, t2: &Tile) -> Check {
    let i = i_of(t1, t2);
    if !(i > 0.0) {
        return Err(format!("I = {i:e} is not positive"));
    }
    for tier in KernelTier::ALL {
        let p = p_of(t1, t2, tier);
        if !(p > 0.0) {
            return Err(format!("{tier} P = {p:e} is not positive"));
        }
    }
    Ok(())
}

pub fn check_relation_symmetry(t1: &Tile, t2: &Tile) -> Check {
    let (a, b) = (
        canonicalize_pair(t1, t2).unwrap().relation,
        canonicalize_pair(t2, t1).unwrap().relation,
    );
    if a == b {
        Ok(())
    } else {
        Err(format!("relation {a:?} vs {b:?}"))
    }
}

pub fn check_canonical_distance(t1: &Tile, t2: &Tile) -> Check {
    let pair = canonicalize_pair(t1, t2).unwrap();
    let d3 = capmom::geometry::distance(t1.center, t2.center);
    let dc = pair.center_distance();
    if (d3 - dc).abs() <= 1e-12 * d3.max(1.0) {
        Ok(())
    } else {
        Err(format!("center distance {dc:e} vs {d3:e}"))
    }
}

/// Far-field limit for every tier: `4 pi eps0 P d` within `1e-3` of 1.
pub fn check_far_field(t1: &Tile, direction: [f64; 3], factor: f64) -> Check {
    let norm = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
    let d = factor * t1.diagonal();
    let shift = direction.map(|x| x / norm * d);
    let t2 = t1.translated(shift);
    let dist = capmom::geometry::distance(t1.center, t2.center);
    for tier in KernelTier::ALL {
        let v = p_of(t1, &t2, tier) * consts().four_pi_epsilon_0() * dist;
        if (v - 1.0).abs() > 1e-3 {
            return Err(format!("{tier}: 4 pi eps0 P d = {v}"));
        }
    }
    Ok(())
}

pub fn relation_of(t1: &Tile, t2: &Tile) -> Relation {
    canonicalize_pair(t1, t2).unwrap().relation
}
