//! Axis-aligned panels, their tile meshes, and reduction of tile pairs to
//! the canonical integration frames used by the closed-form kernels.
//!
//! A plane with normal along axis `k` carries in-plane coordinates
//! `(u, v)` along axes `(k+1, k+2) mod 3`. So a z-normal panel has
//! `u = x, v = y`, an x-normal panel `u = y, v = z` and a y-normal panel
//! `u = z, v = x`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point3 = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn from_index(i: usize) -> Axis {
        Axis::ALL[i % 3]
    }

    /// In-plane axes `(u, v)` of a plane with this normal.
    pub fn in_plane(self) -> (Axis, Axis) {
        let k = self.index();
        (Axis::from_index(k + 1), Axis::from_index(k + 2))
    }

    /// The axis that is neither `self` nor `other`. Panics if they are equal.
    pub fn third(self, other: Axis) -> Axis {
        assert_ne!(self, other, "third axis of identical axes");
        Axis::from_index(3 - self.index() - other.index())
    }
}

/// Closed interval `[lo, hi]` in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Interval> {
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
            return Err(Error::InvalidPanel(format!(
                "interval [{lo}, {hi}] must be finite with positive length"
            )));
        }
        Ok(Interval { lo, hi })
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Point at fraction `t` of the interval; exact at both ends.
    pub fn lerp(&self, t: f64) -> f64 {
        self.lo * (1.0 - t) + self.hi * t
    }

    /// Length of the intersection with `other` (zero if disjoint or touching).
    pub fn overlap(&self, other: &Interval) -> f64 {
        (self.hi.min(other.hi) - self.lo.max(other.lo)).max(0.0)
    }

    /// Distance between the two intervals (zero if they touch or overlap).
    pub fn gap(&self, other: &Interval) -> f64 {
        (other.lo - self.hi).max(self.lo - other.hi).max(0.0)
    }

    /// Distance from a coordinate to the interval.
    pub fn distance_to(&self, x: f64) -> f64 {
        (self.lo - x).max(x - self.hi).max(0.0)
    }

    pub fn as_pair(&self) -> [f64; 2] {
        [self.lo, self.hi]
    }
}

/// An axis-aligned conducting rectangle with its subdivision counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub plane_axis: Axis,
    pub plane_offset: f64,
    pub u_range: Interval,
    pub v_range: Interval,
    pub n_u: usize,
    pub n_v: usize,
    pub conductor_id: u32,
    pub voltage: f64,
}

impl Panel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        plane_axis: Axis,
        plane_offset: f64,
        u_range: (f64, f64),
        v_range: (f64, f64),
        n_u: usize,
        n_v: usize,
        conductor_id: u32,
        voltage: f64,
    ) -> Result<Panel> {
        if !plane_offset.is_finite() || !voltage.is_finite() {
            return Err(Error::InvalidPanel(
                "plane offset and voltage must be finite".into(),
            ));
        }
        if n_u == 0 || n_v == 0 {
            return Err(Error::InvalidPanel(format!(
                "subdivision counts must be at least 1, got {n_u} x {n_v}"
            )));
        }
        Ok(Panel {
            plane_axis,
            plane_offset,
            u_range: Interval::new(u_range.0, u_range.1)?,
            v_range: Interval::new(v_range.0, v_range.1)?,
            n_u,
            n_v,
            conductor_id,
            voltage,
        })
    }

    pub fn area(&self) -> f64 {
        self.u_range.len() * self.v_range.len()
    }
}

/// One mesh element: a rectangle carrying a single charge unknown.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tile {
    pub plane_axis: Axis,
    pub plane_offset: f64,
    pub u_interval: Interval,
    pub v_interval: Interval,
    pub area: f64,
    pub center: Point3,
    pub conductor_id: u32,
}

impl Tile {
    pub fn new(
        plane_axis: Axis,
        plane_offset: f64,
        u_interval: Interval,
        v_interval: Interval,
        conductor_id: u32,
    ) -> Tile {
        let mut tile = Tile {
            plane_axis,
            plane_offset,
            u_interval,
            v_interval,
            area: u_interval.len() * v_interval.len(),
            center: [0.0; 3],
            conductor_id,
        };
        tile.center = tile.point(u_interval.mid(), v_interval.mid());
        tile
    }

    /// Maps in-plane coordinates to a 3D point.
    pub fn point(&self, u: f64, v: f64) -> Point3 {
        let (ua, va) = self.plane_axis.in_plane();
        let mut p = [0.0; 3];
        p[self.plane_axis.index()] = self.plane_offset;
        p[ua.index()] = u;
        p[va.index()] = v;
        p
    }

    /// Extent along an in-plane axis. Panics if `axis` is the normal.
    pub fn extent(&self, axis: Axis) -> Interval {
        let (ua, va) = self.plane_axis.in_plane();
        if axis == ua {
            self.u_interval
        } else if axis == va {
            self.v_interval
        } else {
            panic!("axis {axis:?} is the tile normal")
        }
    }

    pub fn diagonal(&self) -> f64 {
        self.u_interval.len().hypot(self.v_interval.len())
    }

    /// The same tile rigidly moved by `shift`.
    pub fn translated(&self, shift: Point3) -> Tile {
        let (ua, va) = self.plane_axis.in_plane();
        let mv = |iv: Interval, d: f64| Interval {
            lo: iv.lo + d,
            hi: iv.hi + d,
        };
        Tile::new(
            self.plane_axis,
            self.plane_offset + shift[self.plane_axis.index()],
            mv(self.u_interval, shift[ua.index()]),
            mv(self.v_interval, shift[va.index()]),
            self.conductor_id,
        )
    }

    /// The same tile with every coordinate multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Tile {
        let sc = |iv: Interval| Interval {
            lo: iv.lo * factor,
            hi: iv.hi * factor,
        };
        Tile::new(
            self.plane_axis,
            self.plane_offset * factor,
            sc(self.u_interval),
            sc(self.v_interval),
            self.conductor_id,
        )
    }
}

/// Splits a panel into `n_u * n_v` equal rectangles, row-major with `u`
/// fastest.
pub fn subdivide_panel(panel: &Panel) -> Vec<Tile> {
    let edges = |iv: &Interval, n: usize| -> Vec<f64> {
        (0..=n).map(|k| iv.lerp(k as f64 / n as f64)).collect()
    };
    let us = edges(&panel.u_range, panel.n_u);
    let vs = edges(&panel.v_range, panel.n_v);
    let mut tiles = Vec::with_capacity(panel.n_u * panel.n_v);
    for vw in vs.windows(2) {
        for uw in us.windows(2) {
            tiles.push(Tile::new(
                panel.plane_axis,
                panel.plane_offset,
                Interval { lo: uw[0], hi: uw[1] },
                Interval { lo: vw[0], hi: vw[1] },
                panel.conductor_id,
            ));
        }
    }
    tiles
}

/// Ordered tiles plus the voltage of every conductor.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    tiles: Vec<Tile>,
    conductors: BTreeMap<u32, f64>,
}

impl Mesh {
    /// Meshes the panels in insertion order.
    ///
    /// Fails if a conductor is given two voltages or two coplanar panels
    /// overlap with positive area.
    pub fn from_panels(panels: &[Panel]) -> Result<Mesh> {
        if panels.is_empty() {
            return Err(Error::InvalidGeometry("no panels".into()));
        }
        let mut conductors = BTreeMap::new();
        for p in panels {
            if let Some(&v) = conductors.get(&p.conductor_id) {
                if v != p.voltage {
                    return Err(Error::ConflictingVoltage {
                        conductor: p.conductor_id,
                        first: v,
                        second: p.voltage,
                    });
                }
            } else {
                conductors.insert(p.conductor_id, p.voltage);
            }
        }
        for (i, p) in panels.iter().enumerate() {
            for (j, q) in panels.iter().enumerate().skip(i + 1) {
                if p.plane_axis == q.plane_axis
                    && p.plane_offset == q.plane_offset
                    && p.u_range.overlap(&q.u_range) > 0.0
                    && p.v_range.overlap(&q.v_range) > 0.0
                {
                    return Err(Error::InvalidGeometry(format!(
                        "panels {i} and {j} overlap"
                    )));
                }
            }
        }
        let tiles = panels.iter().flat_map(subdivide_panel).collect();
        Ok(Mesh { tiles, conductors })
    }

    pub fn tiles(&self) -> &[Tile] {
        &self.tiles
    }

    pub fn len(&self) -> usize {
        self.tiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }

    pub fn conductors(&self) -> &BTreeMap<u32, f64> {
        &self.conductors
    }

    pub fn voltage(&self, conductor_id: u32) -> f64 {
        self.conductors[&conductor_id]
    }

    /// Right-hand side of the moment system: each tile's conductor voltage.
    pub fn voltages(&self) -> Vec<f64> {
        self.tiles
            .iter()
            .map(|t| self.voltage(t.conductor_id))
            .collect()
    }

    /// Same tiles, every conductor voltage multiplied by `factor`.
    pub fn with_scaled_voltages(&self, factor: f64) -> Mesh {
        Mesh {
            tiles: self.tiles.clone(),
            conductors: self
                .conductors
                .iter()
                .map(|(&k, &v)| (k, v * factor))
                .collect(),
        }
    }
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidGeometry(format!(
            "{name} must be positive, got {value}"
        )))
    }
}

fn check_count(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidGeometry("n must be at least 1".into()));
    }
    Ok(())
}

/// Panels of a two-plate capacitor: plates centered on the z axis, the +1 V
/// plate (conductor 0) at `z = gap` and the -1 V plate (conductor 1) at `z = 0`.
pub fn parallel_plate_panels(width: f64, depth: f64, gap: f64, n: usize) -> Result<Vec<Panel>> {
    check_positive("width", width)?;
    check_positive("depth", depth)?;
    check_positive("gap", gap)?;
    check_count(n)?;
    let u = (-0.5 * width, 0.5 * width);
    let v = (-0.5 * depth, 0.5 * depth);
    Ok(vec![
        Panel::new(Axis::Z, gap, u, v, n, n, 0, 1.0)?,
        Panel::new(Axis::Z, 0.0, u, v, n, n, 1, -1.0)?,
    ])
}

pub fn build_parallel_plate(width: f64, depth: f64, gap: f64, n: usize) -> Result<Mesh> {
    Mesh::from_panels(&parallel_plate_panels(width, depth, gap, n)?)
}

/// Six faces of the cube `[-edge/2, edge/2]^3`, one conductor at 1 V.
pub fn cube_panels(edge: f64, n: usize) -> Result<Vec<Panel>> {
    check_positive("edge", edge)?;
    check_count(n)?;
    let h = 0.5 * edge;
    let mut panels = Vec::with_capacity(6);
    for axis in Axis::ALL {
        for offset in [-h, h] {
            panels.push(Panel::new(axis, offset, (-h, h), (-h, h), n, n, 0, 1.0)?);
        }
    }
    Ok(panels)
}

pub fn build_cube(edge: f64, n: usize) -> Result<Mesh> {
    Mesh::from_panels(&cube_panels(edge, n)?)
}

/// A single `side x side` plate in the `z = 0` plane at 1 V, meshed `n x n`.
pub fn build_square(side: f64, n: usize, voltage: f64) -> Result<Mesh> {
    check_positive("side", side)?;
    check_count(n)?;
    let h = 0.5 * side;
    Mesh::from_panels(&[Panel::new(Axis::Z, 0.0, (-h, h), (-h, h), n, n, 0, voltage)?])
}

/// How two tiles sit relative to each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// The two tiles are the same rectangle.
    #[serde(rename = "self")]
    Identical,
    Coplanar,
    ParallelOffset,
    Perpendicular,
    /// Not produced for axis-aligned tiles.
    Skew,
}

/// Corner limits of a rectangle pair: the first rectangle spans
/// `a x b`, the second `c x d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub c: [f64; 2],
    pub d: [f64; 2],
}

impl Limits {
    pub fn new(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> Limits {
        Limits { a, b, c, d }
    }

    /// Convenience for `(a0, a1, b0, b1, c0, c1, d0, d1)`.
    pub fn from_array(l: [f64; 8]) -> Limits {
        Limits::new([l[0], l[1]], [l[2], l[3]], [l[4], l[5]], [l[6], l[7]])
    }

    pub fn to_array(&self) -> [f64; 8] {
        [
            self.a[0], self.a[1], self.b[0], self.b[1], self.c[0], self.c[1], self.d[0],
            self.d[1],
        ]
    }

    /// Checks `a0 < a1` and friends, returning the first offending side.
    pub fn validate(&self) -> Result<()> {
        for (s, t) in [(self.a, self.b), (self.c, self.d)] {
            let (w, h) = (s[1] - s[0], t[1] - t[0]);
            if !(w > 0.0 && h > 0.0 && w.is_finite() && h.is_finite()) {
                return Err(Error::DegenerateRectangle {
                    width: w,
                    height: h,
                });
            }
        }
        Ok(())
    }

    pub fn first_area(&self) -> f64 {
        (self.a[1] - self.a[0]) * (self.b[1] - self.b[0])
    }

    pub fn second_area(&self) -> f64 {
        (self.c[1] - self.c[0]) * (self.d[1] - self.d[0])
    }

    /// Largest side length over both rectangles.
    pub fn scale(&self) -> f64 {
        [self.a, self.b, self.c, self.d]
            .iter()
            .map(|s| s[1] - s[0])
            .fold(0.0, f64::max)
    }

    /// The same pair with the two rectangles exchanged.
    pub fn swapped(&self) -> Limits {
        Limits::new(self.c, self.d, self.a, self.b)
    }
}

/// A tile pair expressed in the frame of the closed-form integrals.
///
/// Parallel pairs (`Identical`, `Coplanar`, `ParallelOffset`): the first
/// rectangle spans `a x b` in the plane `z = 0` and the second `c x d` in
/// the plane `z = z_c`.
///
/// Perpendicular pairs: `x` is the axis shared by both planes. The first
/// rectangle spans `a x b` in `(x, y)` on the plane `z = z_c`; the second
/// spans `c x d` in `(x, z)` on the plane `y = y_c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalPair {
    pub relation: Relation,
    pub limits: Limits,
    pub z_c: f64,
    pub y_c: Option<f64>,
}

impl CanonicalPair {
    pub fn parallel(limits: Limits, z_c: f64) -> CanonicalPair {
        let relation = if z_c != 0.0 {
            Relation::ParallelOffset
        } else if limits.a == limits.c && limits.b == limits.d {
            Relation::Identical
        } else {
            Relation::Coplanar
        };
        CanonicalPair {
            relation,
            limits,
            z_c,
            y_c: None,
        }
    }

    pub fn perpendicular(limits: Limits, y_c: f64, z_c: f64) -> CanonicalPair {
        CanonicalPair {
            relation: Relation::Perpendicular,
            limits,
            z_c,
            y_c: Some(y_c),
        }
    }

    /// 3D point of the first rectangle at canonical in-plane coordinates.
    pub fn first_point(&self, s: f64, t: f64) -> Point3 {
        match self.relation {
            Relation::Perpendicular => [s, t, self.z_c],
            _ => [s, t, 0.0],
        }
    }

    /// 3D point of the second rectangle at canonical in-plane coordinates.
    pub fn second_point(&self, s: f64, t: f64) -> Point3 {
        match self.relation {
            Relation::Perpendicular => [s, self.y_c.unwrap_or(0.0), t],
            _ => [s, t, self.z_c],
        }
    }

    pub fn center_distance(&self) -> f64 {
        let l = &self.limits;
        let mid = |s: [f64; 2]| 0.5 * (s[0] + s[1]);
        distance(
            self.first_point(mid(l.a), mid(l.b)),
            self.second_point(mid(l.c), mid(l.d)),
        )
    }

    /// Smallest distance between the two closed rectangles.
    pub fn gap(&self) -> f64 {
        let l = &self.limits;
        let iv = |s: [f64; 2]| Interval { lo: s[0], hi: s[1] };
        match self.relation {
            Relation::Perpendicular => {
                let dx = iv(l.a).gap(&iv(l.c));
                let dy = iv(l.b).distance_to(self.y_c.unwrap_or(0.0));
                let dz = iv(l.d).distance_to(self.z_c);
                (dx * dx + dy * dy + dz * dz).sqrt()
            }
            _ => {
                let dx = iv(l.a).gap(&iv(l.c));
                let dy = iv(l.b).gap(&iv(l.d));
                (dx * dx + dy * dy + self.z_c * self.z_c).sqrt()
            }
        }
    }
}

pub fn distance(p: Point3, q: Point3) -> f64 {
    let d = [p[0] - q[0], p[1] - q[1], p[2] - q[2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

/// Reduces a tile pair to its canonical frame.
///
/// Perpendicular pairs are ordered by normal axis, so `(t1, t2)` and
/// `(t2, t1)` produce the same frame. Parallel pairs keep argument order,
/// with `z_c = offset(t2) - offset(t1)`.
pub fn canonicalize_pair(t1: &Tile, t2: &Tile) -> Result<CanonicalPair> {
    if t1.plane_axis == t2.plane_axis {
        let z_c = t2.plane_offset - t1.plane_offset;
        let limits = Limits::new(
            t1.u_interval.as_pair(),
            t1.v_interval.as_pair(),
            t2.u_interval.as_pair(),
            t2.v_interval.as_pair(),
        );
        let pair = CanonicalPair::parallel(limits, z_c);
        if pair.relation == Relation::Coplanar
            && t1.u_interval.overlap(&t2.u_interval) > 0.0
            && t1.v_interval.overlap(&t2.v_interval) > 0.0
        {
            return Err(Error::OverlappingTiles);
        }
        return Ok(pair);
    }
    let (first, second) = if t1.plane_axis < t2.plane_axis {
        (t1, t2)
    } else {
        (t2, t1)
    };
    let shared = first.plane_axis.third(second.plane_axis);
    let limits = Limits::new(
        first.extent(shared).as_pair(),
        first.extent(second.plane_axis).as_pair(),
        second.extent(shared).as_pair(),
        second.extent(first.plane_axis).as_pair(),
    );
    Ok(CanonicalPair::perpendicular(
        limits,
        second.plane_offset,
        first.plane_offset,
    ))
}

/// One panel entry of the geometry JSON format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PanelSpec {
    pub normal: Axis,
    pub offset: f64,
    pub u: [f64; 2],
    pub v: [f64; 2],
    pub nu: usize,
    pub nv: usize,
    pub conductor: u32,
    pub voltage: f64,
}

/// Geometry input: `{"panels": [...]}`, lengths in meters, voltages in volts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryFile {
    pub panels: Vec<PanelSpec>,
}

impl GeometryFile {
    pub fn from_panels(panels: &[Panel]) -> GeometryFile {
        GeometryFile {
            panels: panels
                .iter()
                .map(|p| PanelSpec {
                    normal: p.plane_axis,
                    offset: p.plane_offset,
                    u: p.u_range.as_pair(),
                    v: p.v_range.as_pair(),
                    nu: p.n_u,
                    nv: p.n_v,
                    conductor: p.conductor_id,
                    voltage: p.voltage,
                })
                .collect(),
        }
    }

    pub fn read(path: &Path) -> Result<GeometryFile> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn to_panels(&self) -> Result<Vec<Panel>> {
        self.panels
            .iter()
            .map(|p| {
                Panel::new(
                    p.normal,
                    p.offset,
                    (p.u[0], p.u[1]),
                    (p.v[0], p.v[1]),
                    p.nu,
                    p.nv,
                    p.conductor,
                    p.voltage,
                )
            })
            .collect()
    }

    pub fn to_mesh(&self) -> Result<Mesh> {
        Mesh::from_panels(&self.to_panels()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_tile(axis: Axis, offset: f64, u: (f64, f64), v: (f64, f64)) -> Tile {
        Tile::new(
            axis,
            offset,
            Interval::new(u.0, u.1).unwrap(),
            Interval::new(v.0, v.1).unwrap(),
            0,
        )
    }

    #[test]
    fn subdivide_two_by_two() {
        let p = Panel::new(Axis::Z, 0.0, (0.0, 1.0), (0.0, 1.0), 2, 2, 3, 1.0).unwrap();
        let tiles = subdivide_panel(&p);
        assert_eq!(tiles.len(), 4);
        for t in &tiles {
            assert_eq!(t.area, 0.25);
            assert_eq!(t.u_interval.len(), 0.5);
            assert_eq!(t.conductor_id, 3);
        }
        // u fastest
        assert_eq!(tiles[1].center, [0.75, 0.25, 0.0]);
        assert_eq!(tiles[2].center, [0.25, 0.75, 0.0]);
    }

    #[test]
    fn subdivide_counts() {
        let p6 = Panel::new(Axis::Z, 0.0, (0.0, 1.0), (0.0, 1.0), 6, 6, 0, 1.0).unwrap();
        assert_eq!(subdivide_panel(&p6).len(), 36);
        let p48 = Panel::new(Axis::Z, 0.0, (0.0, 1.0), (0.0, 1.0), 48, 48, 0, 1.0).unwrap();
        assert_eq!(subdivide_panel(&p48).len(), 2304);
    }

    #[test]
    fn panel_rejects_bad_input() {
        assert!(Panel::new(Axis::Z, 0.0, (0.0, 0.0), (0.0, 1.0), 1, 1, 0, 1.0).is_err());
        assert!(Panel::new(Axis::Z, 0.0, (1.0, 0.0), (0.0, 1.0), 1, 1, 0, 1.0).is_err());
        assert!(Panel::new(Axis::Z, 0.0, (0.0, 1.0), (0.0, 1.0), 0, 1, 0, 1.0).is_err());
        assert!(Panel::new(Axis::Z, f64::NAN, (0.0, 1.0), (0.0, 1.0), 1, 1, 0, 1.0).is_err());
    }

    #[test]
    fn parallel_plate_layout() {
        let m = build_parallel_plate(1.0, 1.0, 0.1, 1).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.tiles()[0].plane_offset - m.tiles()[1].plane_offset, 0.1);
        assert_eq!(m.voltage(0), 1.0);
        assert_eq!(m.voltage(1), -1.0);
        assert_eq!(build_parallel_plate(1.0, 1.0, 0.1, 16).unwrap().len(), 512);

        let m = build_parallel_plate(2.0, 1.0, 0.1, 2).unwrap();
        assert_eq!(m.len(), 8);
        for t in m.tiles() {
            assert_eq!(t.u_interval.len(), 1.0);
            assert_eq!(t.v_interval.len(), 0.5);
        }
    }

    #[test]
    fn cube_layout() {
        let m = build_cube(1.0, 1).unwrap();
        assert_eq!(m.len(), 6);
        assert_eq!(m.conductors().len(), 1);
        assert_eq!(build_cube(1.0, 48).unwrap().len(), 13824);
        for t in build_cube(2.0, 1).unwrap().tiles() {
            assert_eq!(t.area, 4.0);
        }
        // no two cube tiles overlap
        let m = build_cube(1.0, 3).unwrap();
        for (i, a) in m.tiles().iter().enumerate() {
            for b in &m.tiles()[i + 1..] {
                assert_ne!(canonicalize_pair(a, b).unwrap().relation, Relation::Identical);
            }
        }
    }

    #[test]
    fn builders_reject_bad_dimensions() {
        assert!(build_parallel_plate(0.0, 1.0, 0.1, 1).is_err());
        assert!(build_parallel_plate(1.0, 1.0, 0.1, 0).is_err());
        assert!(build_cube(-1.0, 1).is_err());
    }

    #[test]
    fn canonical_self_and_offset() {
        let a = unit_tile(Axis::Z, 0.0, (0.0, 1.0), (0.0, 1.0));
        let p = canonicalize_pair(&a, &a).unwrap();
        assert_eq!(p.relation, Relation::Identical);
        assert_eq!(p.z_c, 0.0);

        let b = unit_tile(Axis::Z, 0.1, (0.0, 1.0), (0.0, 1.0));
        let p = canonicalize_pair(&a, &b).unwrap();
        assert_eq!(p.relation, Relation::ParallelOffset);
        assert_eq!(p.z_c, 0.1);
        assert_eq!(p.limits.to_array(), [0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn canonical_overlap_is_error() {
        let a = unit_tile(Axis::Z, 0.0, (0.0, 1.0), (0.0, 1.0));
        let b = unit_tile(Axis::Z, 0.0, (0.5, 1.5), (0.0, 1.0));
        assert!(matches!(
            canonicalize_pair(&a, &b),
            Err(Error::OverlappingTiles)
        ));
        // sharing an edge is fine
        let c = unit_tile(Axis::Z, 0.0, (1.0, 2.0), (0.0, 1.0));
        assert_eq!(canonicalize_pair(&a, &c).unwrap().relation, Relation::Coplanar);
    }

    #[test]
    fn canonical_perpendicular_frame() {
        // floor tile on z = 0, wall tile on x = 0 sharing the edge x = 0
        let floor = unit_tile(Axis::Z, 0.0, (0.0, 1.0), (0.0, 1.0));
        let wall = unit_tile(Axis::X, 0.0, (0.0, 1.0), (0.0, 1.0));
        let p = canonicalize_pair(&floor, &wall).unwrap();
        assert_eq!(p.relation, Relation::Perpendicular);
        // first = x-normal wall; shared axis y; wall spans z in b, floor spans x in d
        assert_eq!(p.z_c, 0.0);
        assert_eq!(p.y_c, Some(0.0));
        assert_eq!(p.limits.b, [0.0, 1.0]);
        assert_eq!(canonicalize_pair(&wall, &floor).unwrap(), p);
        assert_eq!(p.gap(), 0.0);
    }

    #[test]
    fn canonical_distance_matches_3d() {
        let m = build_cube(1.3, 3).unwrap();
        let tiles = m.tiles();
        for a in tiles.iter().step_by(5) {
            for b in tiles.iter().step_by(7) {
                let p = canonicalize_pair(a, b).unwrap();
                let d3 = distance(a.center, b.center);
                assert!((p.center_distance() - d3).abs() <= 1e-12 * d3.max(1.0));
            }
        }
    }

    #[test]
    fn mesh_rejects_conflicts() {
        let a = Panel::new(Axis::Z, 0.0, (0.0, 1.0), (0.0, 1.0), 1, 1, 0, 1.0).unwrap();
        let b = Panel::new(Axis::Z, 1.0, (0.0, 1.0), (0.0, 1.0), 1, 1, 0, 2.0).unwrap();
        assert!(matches!(
            Mesh::from_panels(&[a.clone(), b]),
            Err(Error::ConflictingVoltage { .. })
        ));
        let c = Panel::new(Axis::Z, 0.0, (0.5, 1.5), (0.0, 1.0), 1, 1, 1, 1.0).unwrap();
        assert!(Mesh::from_panels(&[a, c]).is_err());
    }

    #[test]
    fn geometry_json_round_trip() {
        let panels = cube_panels(1.0, 2).unwrap();
        let file = GeometryFile::from_panels(&panels);
        let text = serde_json::to_string(&file).unwrap();
        assert!(text.contains("\"normal\":\"x\""));
        let back: GeometryFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_mesh().unwrap(), build_cube(1.0, 2).unwrap());
        let bad = r#"{"panels":[{"normal":"w","offset":0,"u":[0,1],"v":[0,1],"nu":1,"nv":1,"conductor":0,"voltage":1}]}"#;
        assert!(serde_json::from_str::<GeometryFile>(bad).is_err());
    }
}
