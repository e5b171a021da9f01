//! Measurements on the diffuse interface: contour, curvature, chemical
//! potential on the interface, equipartition, energy density per unit length
//! and the far-field elliptic residual.
//!
//! Orientation: `Ω⁺ = {u > 0}`, normals point from `Ω⁺` into `Ω⁻` and the
//! curvature `κ = -div(∇u/|∇u|)` is positive where `Ω⁺` is convex.

mod contour;

pub use contour::{extract_interface, Component, Contour};

use crate::error::{Error, Result};
use crate::potential::{check_eps, chemical_potential, modica_mortola_parts, DoubleWell, SurfaceTension};
use crate::real::Real;
use crate::spectral::{FractionalOperator, GridSpec, ScalarField};

/// Cubic Lagrange interpolation of nodal values at `p` (4×4 stencil, shifted
/// inward near the walls).
pub fn interpolate<T: Real>(grid: &GridSpec<T>, values: &[T], p: [T; 2]) -> T {
    let mut base = [0usize; 2];
    let mut weights = [[T::zero(); 4]; 2];
    for axis in 0..2 {
        let n = grid.counts()[axis];
        let x = p[axis] / grid.spacing(axis) - T::lit(0.5);
        let i0 = x.floor().to_f64_lossy() as isize - 1;
        let i0 = i0.clamp(0, n as isize - 4) as usize;
        base[axis] = i0;
        let t = x - T::from_usize_lossy(i0);
        // nodes at offsets 0..4 relative to i0
        for (m, w) in weights[axis].iter_mut().enumerate() {
            let mut l = T::one();
            for q in 0..4 {
                if q != m {
                    l = l * (t - T::from_usize_lossy(q)) / (T::from_usize_lossy(m) - T::from_usize_lossy(q));
                }
            }
            *w = l;
        }
    }
    let ny = grid.counts()[1];
    let mut acc = T::zero();
    for a in 0..4 {
        for b in 0..4 {
            acc = acc + weights[0][a] * weights[1][b] * values[(base[0] + a) * ny + base[1] + b];
        }
    }
    acc
}

fn check_plane<T: Real>(op: &FractionalOperator<T>) -> Result<()> {
    let grid = op.grid();
    if grid.dim() != 2 {
        return Err(Error::UnsupportedDimension(grid.dim()));
    }
    if grid.counts().iter().any(|&n| n < 4) {
        return Err(Error::InvalidGrid(
            "interpolation needs at least 4 nodes per axis".into(),
        ));
    }
    Ok(())
}

/// Per-point curvature and gradient normals from spectral derivatives of `u`.
fn curvature_and_normals<T: Real>(
    op: &FractionalOperator<T>,
    u: &ScalarField<T>,
    contour: &Contour<T>,
) -> Result<(Vec<T>, Vec<[T; 2]>)> {
    check_plane(op)?;
    let grid = op.grid();
    let d = |orders: [usize; 2]| op.derivative(u, &orders).map(ScalarField::into_values);
    let (ux, uy) = (d([1, 0])?, d([0, 1])?);
    let (uxx, uxy, uyy) = (d([2, 0])?, d([1, 1])?, d([0, 2])?);
    let scale = ux
        .iter()
        .zip(&uy)
        .map(|(&a, &b)| (a * a + b * b).sqrt())
        .fold(T::zero(), T::max);
    let floor = T::lit(1e-8) * scale;
    let mut kappa = Vec::with_capacity(contour.len());
    let mut normals = Vec::with_capacity(contour.len());
    for (index, &p) in contour.points.iter().enumerate() {
        let at = |f: &[T]| interpolate(grid, f, p);
        let (gx, gy) = (at(&ux), at(&uy));
        let g = (gx * gx + gy * gy).sqrt();
        if !(g > floor) {
            return Err(Error::VanishingGradient { index });
        }
        let num = at(&uxx) * gy * gy - T::lit(2.0) * gx * gy * at(&uxy) + at(&uyy) * gx * gx;
        kappa.push(-num / (g * g * g));
        normals.push([-gx / g, -gy / g]);
    }
    Ok((kappa, normals))
}

/// `κ = -div(∇u/|∇u|)` at the contour points.
pub fn curvature<T: Real>(op: &FractionalOperator<T>, u: &ScalarField<T>, contour: &Contour<T>) -> Result<Vec<T>> {
    Ok(curvature_and_normals(op, u, contour)?.0)
}

/// Contour with gradient normals and curvature filled in.
pub fn measure_interface<T: Real>(op: &FractionalOperator<T>, u: &ScalarField<T>) -> Result<Contour<T>> {
    let u = op.to_nodal(u)?;
    let mut contour = extract_interface(&u)?;
    let (kappa, normals) = curvature_and_normals(op, &u, &contour)?;
    contour.normals = normals;
    Ok(contour.with_curvature(kappa))
}

/// Arc-length weighted Pearson correlation.
pub fn weighted_correlation<T: Real>(x: &[T], y: &[T], w: &[T]) -> T {
    let total: T = w.iter().copied().sum();
    let mean = |v: &[T]| v.iter().zip(w).map(|(&a, &b)| a * b).sum::<T>() / total;
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for ((&a, &b), &c) in x.iter().zip(y).zip(w) {
        let (dx, dy) = (a - mx, b - my);
        sxy = sxy + c * dx * dy;
        sxx = sxx + c * dx * dx;
        syy = syy + c * dy * dy;
    }
    sxy / (sxx * syy).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GibbsSample<T> {
    pub point: [T; 2],
    pub v: T,
    pub kappa: T,
    pub weight: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GibbsThomson<T> {
    pub v_mean: T,
    pub kappa_mean: T,
    /// `v̄ / κ̄`; positive for the relation `v = coef·κ` in this orientation.
    pub coef: T,
    /// Weighted correlation of `v` and `κ` over the table.
    pub correlation: T,
    pub table: Vec<GibbsSample<T>>,
}

impl<T: Real> GibbsThomson<T> {
    /// Relative deviation of `coef` from the constant predicted for `st`.
    pub fn relative_gap(&self, st: SurfaceTension) -> T {
        let target = T::lit(st.gibbs_coefficient());
        (self.coef - target).abs() / target
    }
}

/// Chemical potential sampled on the interface against curvature.
///
/// Uses `contour.curvature` when present.
pub fn gibbs_thomson_probe<T: Real>(
    op: &FractionalOperator<T>,
    u: &ScalarField<T>,
    eps: T,
    contour: &Contour<T>,
) -> Result<GibbsThomson<T>> {
    check_plane(op)?;
    if contour.is_empty() {
        return Err(Error::NoInterface);
    }
    let kappa = if contour.curvature.len() == contour.len() {
        contour.curvature.clone()
    } else {
        curvature(op, u, contour)?
    };
    let v = chemical_potential(op, u, eps)?;
    let grid = op.grid();
    let table: Vec<GibbsSample<T>> = contour
        .points
        .iter()
        .zip(&kappa)
        .zip(&contour.weights)
        .map(|((&p, &k), &w)| GibbsSample {
            point: p,
            v: interpolate(grid, v.values(), p),
            kappa: k,
            weight: w,
        })
        .collect();
    Ok(summarize(table))
}

/// Summary statistics of a (possibly pooled) table.
pub fn summarize<T: Real>(table: Vec<GibbsSample<T>>) -> GibbsThomson<T> {
    let w: Vec<T> = table.iter().map(|r| r.weight).collect();
    let v: Vec<T> = table.iter().map(|r| r.v).collect();
    let k: Vec<T> = table.iter().map(|r| r.kappa).collect();
    let total: T = w.iter().copied().sum();
    let v_mean = v.iter().zip(&w).map(|(&a, &b)| a * b).sum::<T>() / total;
    let kappa_mean = k.iter().zip(&w).map(|(&a, &b)| a * b).sum::<T>() / total;
    GibbsThomson {
        v_mean,
        kappa_mean,
        coef: v_mean / kappa_mean,
        correlation: weighted_correlation(&v, &k, &w),
        table,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equipartition<T> {
    /// `∫ |ε/2 |∇u|² - W(u)/ε|`.
    pub defect: T,
    /// `defect / M^ε(u)`.
    pub normalized: T,
}

pub fn equipartition_defect<T: Real>(
    op: &FractionalOperator<T>,
    u: &ScalarField<T>,
    eps: T,
) -> Result<Equipartition<T>> {
    check_eps(eps)?;
    let u = op.to_nodal(u)?;
    let grad = op.gradient(&u)?;
    let half = T::lit(0.5);
    let defect = (0..u.values().len())
        .map(|i| {
            let g2: T = grad.iter().map(|g| g.values()[i] * g.values()[i]).sum();
            (half * eps * g2 - DoubleWell::w(u.values()[i]) / eps).abs()
        })
        .sum::<T>()
        * op.grid().cell_volume();
    let m = modica_mortola_parts(op, &u, eps)?.total();
    Ok(Equipartition {
        defect,
        normalized: defect / m,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyDensity<T> {
    /// `M^ε(u) / |Γ|`.
    pub density: T,
    /// `density / σ_MM`.
    pub vs_modica_mortola: T,
    /// `density / (2 c_W)`.
    pub vs_cw: T,
}

pub fn energy_measure_density<T: Real>(
    op: &FractionalOperator<T>,
    u: &ScalarField<T>,
    eps: T,
    contour: &Contour<T>,
) -> Result<EnergyDensity<T>> {
    if contour.is_empty() {
        return Err(Error::NoInterface);
    }
    let density = modica_mortola_parts(op, u, eps)?.total() / contour.length();
    Ok(EnergyDensity {
        density,
        vs_modica_mortola: density / T::lit(SurfaceTension::ModicaMortola.value()),
        vs_cw: density / T::lit(2.0 * SurfaceTension::WellIntegral.value()),
    })
}

/// Nodes farther than `band` from every contour segment; all nodes when
/// there is no contour.
pub fn far_field_mask<T: Real>(grid: &GridSpec<T>, contour: Option<&Contour<T>>, band: T) -> Result<Vec<bool>> {
    if grid.dim() != 2 {
        return Err(Error::UnsupportedDimension(grid.dim()));
    }
    let mut mask = vec![true; grid.len()];
    let Some(contour) = contour else {
        return Ok(mask);
    };
    let [nx, ny] = [grid.counts()[0], grid.counts()[1]];
    let (hx, hy) = (grid.spacing(0), grid.spacing(1));
    let index_range = |lo: T, hi: T, h: T, n: usize| -> (usize, usize) {
        let a = ((lo / h - T::lit(0.5)).ceil().to_f64_lossy().max(0.0)) as usize;
        let b = ((hi / h - T::lit(0.5)).floor().to_f64_lossy().min(n as f64 - 1.0)).max(-1.0);
        (a, (b + 1.0) as usize)
    };
    for comp in &contour.components {
        let pts = &contour.points[comp.start..comp.start + comp.len];
        let nseg = if comp.closed {
            pts.len()
        } else {
            pts.len().saturating_sub(1)
        };
        for a in 0..nseg.max(1) {
            let p = pts[a];
            let q = pts[(a + 1) % pts.len()];
            let (i0, i1) = index_range(p[0].min(q[0]) - band, p[0].max(q[0]) + band, hx, nx);
            let (j0, j1) = index_range(p[1].min(q[1]) - band, p[1].max(q[1]) + band, hy, ny);
            let d = [q[0] - p[0], q[1] - p[1]];
            let dd = d[0] * d[0] + d[1] * d[1];
            for i in i0..i1 {
                let x = grid.coordinate(0, i);
                for j in j0..j1 {
                    let y = grid.coordinate(1, j);
                    let t = if dd > T::zero() {
                        (((x - p[0]) * d[0] + (y - p[1]) * d[1]) / dd)
                            .max(T::zero())
                            .min(T::one())
                    } else {
                        T::zero()
                    };
                    let (ex, ey) = (x - p[0] - t * d[0], y - p[1] - t * d[1]);
                    if ex * ex + ey * ey <= band * band {
                        mask[i * ny + j] = false;
                    }
                }
            }
        }
    }
    Ok(mask)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BulkResidual<T> {
    /// `‖A^s v + v - φ - σ‖` over the far field.
    pub absolute: T,
    /// `absolute / ‖φ + σ‖_{L²(Ω)}`.
    pub normalized: T,
    /// Same normalization without the mask.
    pub unmasked: T,
    /// Fraction of nodes in the far field.
    pub coverage: T,
}

/// Residual of `A^s v = φ + σ - v` away from the interface layer.
#[allow(clippy::too_many_arguments)]
pub fn bulk_residual<T: Real>(
    op: &FractionalOperator<T>,
    s: T,
    v: &ScalarField<T>,
    phi: &ScalarField<T>,
    sigma: &ScalarField<T>,
    u: &ScalarField<T>,
    band: T,
) -> Result<BulkResidual<T>> {
    if !(band >= T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "band must be non-negative (got {band})"
        )));
    }
    let u = op.to_nodal(u)?;
    let contour = match extract_interface(&u) {
        Ok(c) => Some(c),
        Err(Error::NoInterface) => None,
        Err(e) => return Err(e),
    };
    let mask = far_field_mask(op.grid(), contour.as_ref(), band)?;
    if !mask.iter().any(|&m| m) {
        return Err(Error::EmptyMask);
    }
    let asv = op.apply_power(s, &op.to_nodal(v)?)?;
    let v = op.to_nodal(v)?;
    let source = op.to_nodal(phi)?.add(&op.to_nodal(sigma)?)?;
    let dv = op.grid().cell_volume();
    let mut masked = T::zero();
    let mut full = T::zero();
    let mut rhs = T::zero();
    for (i, &m) in mask.iter().enumerate() {
        let r = asv.values()[i] + v.values()[i] - source.values()[i];
        full = full + r * r;
        if m {
            masked = masked + r * r;
        }
        rhs = rhs + source.values()[i] * source.values()[i];
    }
    let absolute = (masked * dv).sqrt();
    let norm = (rhs * dv).sqrt();
    let denom = if norm > T::zero() { norm } else { T::one() };
    Ok(BulkResidual {
        absolute,
        normalized: absolute / denom,
        unmasked: (full * dv).sqrt() / denom,
        coverage: T::from_usize_lossy(mask.iter().filter(|&&m| m).count()) / T::from_usize_lossy(mask.len()),
    })
}

/// `√(|{u > 0}|/π)`, with the area of each node's cell cut by the local
/// linear approximation of `u`.
pub fn radius_from_area<T: Real>(u: &ScalarField<T>) -> Result<T> {
    let grid = u.grid();
    if grid.dim() != 2 {
        return Err(Error::UnsupportedDimension(grid.dim()));
    }
    if !u.is_nodal() {
        return Err(Error::InvalidParameter("area needs nodal values".into()));
    }
    let [nx, ny] = [grid.counts()[0], grid.counts()[1]];
    let (hx, hy) = (grid.spacing(0), grid.spacing(1));
    let v = u.values();
    let at = |i: usize, j: usize| v[i * ny + j];
    let slope = |n: usize, k: usize, h: T, f: &dyn Fn(usize) -> T| -> T {
        if n < 2 {
            T::zero()
        } else if k == 0 {
            (f(1) - f(0)) / h
        } else if k == n - 1 {
            (f(n - 1) - f(n - 2)) / h
        } else {
            (f(k + 1) - f(k - 1)) / (T::lit(2.0) * h)
        }
    };
    let half = T::lit(0.5);
    let mut area = T::zero();
    for i in 0..nx {
        for j in 0..ny {
            let u0 = at(i, j);
            let gx = slope(nx, i, hx, &|k| at(k, j));
            let gy = slope(ny, j, hy, &|k| at(i, k));
            let reach = (gx.abs() * hx + gy.abs() * hy) * half;
            if u0 >= reach && u0 > T::zero() {
                area = area + hx * hy;
            } else if u0 > -reach {
                area = area + clipped_area(u0, gx, gy, hx * half, hy * half);
            }
        }
    }
    Ok((area / T::PI()).sqrt())
}

/// Area of `{ξ ∈ [-a, a]×[-b, b] : u0 + g·ξ > 0}` by polygon clipping.
fn clipped_area<T: Real>(u0: T, gx: T, gy: T, a: T, b: T) -> T {
    let square = [[-a, -b], [a, -b], [a, b], [-a, b]];
    let f = |p: [T; 2]| u0 + gx * p[0] + gy * p[1];
    let mut poly: Vec<[T; 2]> = Vec::with_capacity(6);
    for k in 0..4 {
        let (p, q) = (square[k], square[(k + 1) % 4]);
        let (fp, fq) = (f(p), f(q));
        if fp > T::zero() {
            poly.push(p);
        }
        if (fp > T::zero()) != (fq > T::zero()) {
            let t = fp / (fp - fq);
            poly.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    let n = poly.len();
    if n < 3 {
        return T::zero();
    }
    let twice: T = (0..n)
        .map(|k| {
            let (p, q) = (poly[k], poly[(k + 1) % n]);
            p[0] * q[1] - q[0] * p[1]
        })
        .sum();
    twice.abs() * T::lit(0.5)
}
