//! Dense moment-method system `V = P Q`: assembly, factorization, and
//! capacitance extraction.
//!
//! Galerkin matrices are symmetric positive definite and are factored with
//! an in-place Cholesky; a packed copy of the lower triangle is kept for
//! the residual check. The other tiers need not be symmetric and go
//! through partial-pivoting LU on a full copy.

use std::collections::BTreeMap;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::llt;
use faer::linalg::solvers::Solve;
use faer::{Mat, MatMut, MatRef};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Mesh, Point3};
use crate::kernels::{coupling_p, KernelTier, PhysicalConstants};
use crate::par::{faer_par, for_each_chunk_mut, map_range, Execution};

pub const DEFAULT_MEMORY_CAP: u64 = 4 << 30;

/// Largest accepted 1-norm condition estimate.
pub const MAX_CONDITION: f64 = 1e12;

/// Largest accepted `||P Q - V||_inf / ||V||_inf`.
pub const MAX_RESIDUAL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssemblyOptions {
    pub constants: PhysicalConstants,
    pub memory_cap_bytes: u64,
    pub execution: Execution,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions {
            constants: PhysicalConstants::default(),
            memory_cap_bytes: DEFAULT_MEMORY_CAP,
            execution: Execution::default(),
        }
    }
}

/// Dense `n x n` potential coefficients (1/F) in mesh tile order.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    n: usize,
    /// Column-major.
    entries: Vec<f64>,
    tier: KernelTier,
    constants: PhysicalConstants,
}

impl CouplingMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tier(&self) -> KernelTier {
        self.tier
    }

    pub fn constants(&self) -> &PhysicalConstants {
        &self.constants
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[j * self.n + i]
    }

    pub fn as_faer(&self) -> MatRef<'_, f64> {
        MatRef::from_column_major_slice(&self.entries, self.n, self.n)
    }

    /// Largest `|P_ij - P_ji| / max(|P_ij|, |P_ji|)`.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.n {
            for i in 0..j {
                let (a, b) = (self.get(i, j), self.get(j, i));
                let m = a.abs().max(b.abs());
                if m > 0.0 {
                    worst = worst.max((a - b).abs() / m);
                }
            }
        }
        worst
    }

    /// `P x` using all stored entries.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = vec![0.0; n];
        for (j, &xj) in x.iter().enumerate() {
            let col = &self.entries[j * n..(j + 1) * n];
            for (yi, &p) in y.iter_mut().zip(col) {
                *yi += p * xj;
            }
        }
        y
    }
}

/// Bytes a dense solve of `n` unknowns needs under `tier`.
pub fn required_bytes(n: usize, tier: KernelTier) -> u64 {
    let n = n as u64;
    let copy = if tier == KernelTier::GalerkinQuadruple {
        n * (n + 1) / 2
    } else {
        n * n
    };
    (n * n + copy) * 8
}

pub fn assemble(mesh: &Mesh, tier: KernelTier) -> Result<CouplingMatrix> {
    assemble_with(mesh, tier, &AssemblyOptions::default())
}

/// Fills `P_ij = coupling_p(tile_i, tile_j)`. For the Galerkin tier only
/// `i <= j` is evaluated and mirrored.
pub fn assemble_with(mesh: &Mesh, tier: KernelTier, opts: &AssemblyOptions) -> Result<CouplingMatrix> {
    let n = mesh.len();
    if n == 0 {
        return Err(Error::InvalidGeometry("empty mesh".into()));
    }
    let required = required_bytes(n, tier);
    if required > opts.memory_cap_bytes {
        return Err(Error::MemoryCap {
            n,
            required,
            cap: opts.memory_cap_bytes,
        });
    }
    let tiles = mesh.tiles();
    let consts = &opts.constants;
    let mut entries = vec![0.0; n * n];
    let first_error = std::sync::Mutex::new(None);
    let record = |e: Error| {
        let mut slot = first_error.lock().unwrap();
        if slot.is_none() {
            *slot = Some(e);
        }
    };

    if tier == KernelTier::GalerkinQuadruple {
        // column j, rows j..n: P(j, i) for i >= j, i.e. the lower triangle
        for_each_chunk_mut(opts.execution, &mut entries, n, |j, col| {
            for i in j..n {
                match coupling_p(&tiles[j], &tiles[i], tier, consts) {
                    Ok(p) => col[i] = p,
                    Err(e) => return record(e),
                }
            }
        });
        mirror_lower_to_upper(&mut entries, n);
    } else {
        for_each_chunk_mut(opts.execution, &mut entries, n, |j, col| {
            for (i, slot) in col.iter_mut().enumerate() {
                match coupling_p(&tiles[i], &tiles[j], tier, consts) {
                    Ok(p) => *slot = p,
                    Err(e) => return record(e),
                }
            }
        });
    }
    if let Some(e) = first_error.into_inner().unwrap() {
        return Err(e);
    }
    Ok(CouplingMatrix {
        n,
        entries,
        tier,
        constants: *consts,
    })
}

fn mirror_lower_to_upper(entries: &mut [f64], n: usize) {
    const B: usize = 64;
    for jb in (0..n).step_by(B) {
        for ib in (0..=jb).step_by(B) {
            for j in jb..(jb + B).min(n) {
                for i in ib..(ib + B).min(j) {
                    entries[j * n + i] = entries[i * n + j];
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    /// Per-tile charge (C).
    pub charges: Vec<f64>,
    pub conductor_charges: BTreeMap<u32, f64>,
    pub capacitance_farads: f64,
    /// Capacitance divided by `4 pi eps0 * 1 m`.
    pub capacitance_normalized: f64,
    /// Per-tile charge over tile area (C/m^2).
    pub charge_densities: Vec<f64>,
    /// `||P Q - V||_inf / ||V||_inf`.
    pub residual: f64,
    pub condition_estimate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub execution: Execution,
    pub max_condition: f64,
    pub max_residual: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            execution: Execution::default(),
            max_condition: MAX_CONDITION,
            max_residual: MAX_RESIDUAL,
        }
    }
}

pub fn solve(matrix: CouplingMatrix, mesh: &Mesh) -> Result<SolveResult> {
    solve_with(matrix, mesh, &SolveOptions::default())
}

/// Solves `P Q = V` with `V_i` the voltage of tile `i`'s conductor.
///
/// Consumes the matrix: Galerkin systems are factored in place.
pub fn solve_with(matrix: CouplingMatrix, mesh: &Mesh, opts: &SolveOptions) -> Result<SolveResult> {
    if matrix.n != mesh.len() {
        return Err(Error::SizeMismatch {
            matrix: matrix.n,
            mesh: mesh.len(),
        });
    }
    let conductor_count = mesh.conductors().len();
    if conductor_count > 2 {
        return Err(Error::ConductorCount {
            found: conductor_count,
        });
    }
    let constants = matrix.constants;
    let v = mesh.voltages();
    let (charges, residual, condition_estimate) = if matrix.tier == KernelTier::GalerkinQuadruple {
        solve_symmetric(matrix, &v, opts)?
    } else {
        solve_general(matrix, &v, opts)?
    };

    let mut conductor_charges: BTreeMap<u32, f64> = mesh.conductors().keys().map(|&k| (k, 0.0)).collect();
    for (t, q) in mesh.tiles().iter().zip(&charges) {
        *conductor_charges.get_mut(&t.conductor_id).unwrap() += q;
    }
    let charge_densities = mesh.tiles().iter().zip(&charges).map(|(t, q)| q / t.area).collect();
    let capacitance_farads = capacitance_from(&conductor_charges, mesh)?;
    Ok(SolveResult {
        charges,
        conductor_charges,
        capacitance_farads,
        capacitance_normalized: capacitance_farads / constants.four_pi_epsilon_0(),
        charge_densities,
        residual,
        condition_estimate,
    })
}

/// Hager's 1-norm estimate of `||A^-1||_1`, given solvers for `A` and `A^T`.
fn inverse_norm_estimate(n: usize, solve: impl Fn(&mut [f64]), solve_t: impl Fn(&mut [f64])) -> f64 {
    let mut x = vec![1.0 / n as f64; n];
    let mut estimate = 0.0;
    for _ in 0..5 {
        let mut y = x.clone();
        solve(&mut y);
        estimate = y.iter().map(|v| v.abs()).sum::<f64>();
        if !estimate.is_finite() {
            return f64::INFINITY;
        }
        let mut z: Vec<f64> = y.iter().map(|v| if *v >= 0.0 { 1.0 } else { -1.0 }).collect();
        solve_t(&mut z);
        let (jmax, zmax) = z
            .iter()
            .enumerate()
            .fold((0, 0.0_f64), |acc, (j, v)| if v.abs() > acc.1 { (j, v.abs()) } else { acc });
        let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
        if zmax <= ztx {
            break;
        }
        x.iter_mut().for_each(|v| *v = 0.0);
        x[jmax] = 1.0;
    }
    estimate
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn check_condition(estimate: f64, opts: &SolveOptions) -> Result<()> {
    if !(estimate.is_finite() && estimate <= opts.max_condition) {
        return Err(Error::IllConditioned { estimate });
    }
    Ok(())
}

/// Lower triangle of a symmetric matrix, column-major packed: column `j`
/// holds rows `j..n`.
struct PackedLower {
    n: usize,
    data: Vec<f64>,
    offsets: Vec<usize>,
}

impl PackedLower {
    fn from_full(entries: &[f64], n: usize) -> PackedLower {
        let mut data = Vec::with_capacity(n * (n + 1) / 2);
        let mut offsets = Vec::with_capacity(n);
        for j in 0..n {
            offsets.push(data.len());
            data.extend_from_slice(&entries[j * n + j..(j + 1) * n]);
        }
        PackedLower { n, data, offsets }
    }

    fn column(&self, j: usize) -> &[f64] {
        &self.data[self.offsets[j]..self.offsets[j] + self.n - j]
    }

    fn mul_vec(&self, x: &[f64], exec: Execution) -> Vec<f64> {
        // y_j = sum_{i >= j} P_ij x_i, then the mirrored strict-lower part
        let mut y = map_range(exec, self.n, |j| {
            self.column(j).iter().zip(&x[j..]).map(|(p, q)| p * q).sum::<f64>()
        });
        for (j, &xj) in x.iter().enumerate() {
            for (yi, p) in y[j + 1..].iter_mut().zip(&self.column(j)[1..]) {
                *yi += p * xj;
            }
        }
        y
    }
}

fn solve_symmetric(matrix: CouplingMatrix, v: &[f64], opts: &SolveOptions) -> Result<(Vec<f64>, f64, f64)> {
    let n = matrix.n;
    let mut entries = matrix.entries;
    let par = faer_par(opts.execution);

    let norm1 = map_range(opts.execution, n, |j| {
        entries[j * n..(j + 1) * n].iter().map(|x| x.abs()).sum::<f64>()
    })
    .into_iter()
    .fold(0.0, f64::max);
    let original = PackedLower::from_full(&entries, n);

    {
        let a = MatMut::from_column_major_slice_mut(&mut entries, n, n);
        let req = llt::factor::cholesky_in_place_scratch::<f64>(n, par, Default::default());
        let mut buf = MemBuffer::new(req);
        llt::factor::cholesky_in_place(a, Default::default(), par, MemStack::new(&mut buf), Default::default())
            .map_err(|e| match e {
                llt::factor::LltError::NonPositivePivot { index } => Error::NotPositiveDefinite { pivot: index },
            })?;
    }

    let solve_in_place = |rhs: &mut [f64]| {
        let l = MatRef::from_column_major_slice(&entries, n, n);
        let b = MatMut::from_column_major_slice_mut(rhs, n, 1);
        let mut buf = MemBuffer::new(llt::solve::solve_in_place_scratch::<f64>(n, 1, par));
        llt::solve::solve_in_place(l, b, par, MemStack::new(&mut buf));
    };

    let condition_estimate = norm1 * inverse_norm_estimate(n, solve_in_place, solve_in_place);
    check_condition(condition_estimate, opts)?;
    refine_and_check(v, opts, solve_in_place, |x| original.mul_vec(x, opts.execution))
        .map(|(q, r)| (q, r, condition_estimate))
}

/// Solves, checks the relative residual, and applies one step of iterative
/// refinement if it is above the bound.
fn refine_and_check(
    v: &[f64],
    opts: &SolveOptions,
    solve: impl Fn(&mut [f64]),
    apply: impl Fn(&[f64]) -> Vec<f64>,
) -> Result<(Vec<f64>, f64)> {
    let mut q = v.to_vec();
    solve(&mut q);
    let vnorm = inf_norm(v).max(f64::MIN_POSITIVE);
    let residual_of = |q: &[f64]| -> Vec<f64> { apply(q).iter().zip(v).map(|(a, b)| a - b).collect() };
    let mut r = residual_of(&q);
    let mut residual = inf_norm(&r) / vnorm;
    if residual >= opts.max_residual {
        solve(&mut r);
        q.iter_mut().zip(&r).for_each(|(a, d)| *a -= d);
        r = residual_of(&q);
        residual = inf_norm(&r) / vnorm;
    }
    if !(residual < opts.max_residual) {
        return Err(Error::Residual { residual });
    }
    Ok((q, residual))
}

fn solve_general(matrix: CouplingMatrix, v: &[f64], opts: &SolveOptions) -> Result<(Vec<f64>, f64, f64)> {
    let n = matrix.n;
    let a = matrix.as_faer();
    let norm1 = (0..n)
        .map(|j| matrix.entries[j * n..(j + 1) * n].iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let lu = Mat::from_fn(n, n, |i, j| a[(i, j)]).partial_piv_lu();
    let solve_in_place = |rhs: &mut [f64]| {
        lu.solve_in_place(MatMut::from_column_major_slice_mut(rhs, n, 1));
    };
    let solve_t_in_place = |rhs: &mut [f64]| {
        lu.solve_transpose_in_place(MatMut::from_column_major_slice_mut(rhs, n, 1));
    };
    let condition_estimate = norm1 * inverse_norm_estimate(n, solve_in_place, solve_t_in_place);
    check_condition(condition_estimate, opts)?;

    refine_and_check(v, opts, solve_in_place, |x| matrix.mul_vec(x))
        .map(|(q, r)| (q, r, condition_estimate))
}

fn capacitance_from(conductor_charges: &BTreeMap<u32, f64>, mesh: &Mesh) -> Result<f64> {
    let conductors = mesh.conductors();
    match conductors.len() {
        1 => {
            let (id, &volts) = conductors.iter().next().unwrap();
            if volts == 0.0 {
                return Err(Error::InvalidConfig(
                    "self-capacitance needs a nonzero conductor voltage".into(),
                ));
            }
            Ok(conductor_charges[id] / volts)
        }
        2 => {
            let mut it = conductors.iter();
            let (a, b) = (it.next().unwrap(), it.next().unwrap());
            let ((pos, vp), (_, vn)) = if a.1 >= b.1 { (a, b) } else { (b, a) };
            if vp == vn {
                return Err(Error::EqualVoltages(*vp));
            }
            Ok(conductor_charges[pos] / (vp - vn))
        }
        found => Err(Error::ConductorCount { found }),
    }
}

/// Self-capacitance for one conductor, `Q_A / (V_A - V_B)` for two, where
/// `A` is the conductor at the higher voltage.
pub fn capacitance(result: &SolveResult, mesh: &Mesh) -> Result<f64> {
    capacitance_from(&result.conductor_charges, mesh)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChargeRecord {
    pub center: Point3,
    pub area: f64,
    pub charge: f64,
    pub density: f64,
}

pub fn charge_map(result: &SolveResult, mesh: &Mesh) -> Vec<ChargeRecord> {
    mesh.tiles()
        .iter()
        .zip(&result.charges)
        .map(|(t, &q)| ChargeRecord {
            center: t.center,
            area: t.area,
            charge: q,
            density: q / t.area,
        })
        .collect()
}
