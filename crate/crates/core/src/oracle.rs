//! Sharp-interface reference in radial symmetry, discretized by finite
//! differences and independent of the spectral machinery.
//!
//! For `s = 1` the limit chemical potential solves `-Δv + v = φ + σ` in the
//! disc `r < R` and in the annulus `R < r < R_out`, with `v = g/R` on the
//! interface (`g` the Gibbs–Thomson coefficient, `κ = 1/R`), regularity at the
//! origin and no flux at `R_out`. The interface moves with
//! `[∂v/∂n] = -2Ṙ`, the jump taken as inside minus outside along `n = e_r`.

use crate::diagnostics::{interpolate, Contour};
use crate::error::{Error, Result};
use crate::potential::SurfaceTension;
use crate::real::Real;
use crate::spectral::{FractionalOperator, ScalarField};

/// Minimum number of radial nodes.
pub const MIN_RADIAL_NODES: usize = 200;

/// Radial source data on one side of the interface.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile<T> {
    Constant(T),
    /// Samples at increasing radii, linearly interpolated and held constant
    /// beyond the ends.
    Sampled {
        r: Vec<T>,
        values: Vec<T>,
    },
}

impl<T: Real> Profile<T> {
    pub fn at(&self, x: T) -> T {
        match self {
            Self::Constant(c) => *c,
            Self::Sampled { r, values } => {
                if x <= r[0] {
                    return values[0];
                }
                let last = r.len() - 1;
                if x >= r[last] {
                    return values[last];
                }
                let k = r.partition_point(|&ri| ri <= x) - 1;
                let t = (x - r[k]) / (r[k + 1] - r[k]);
                values[k] + t * (values[k + 1] - values[k])
            }
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        match self {
            Self::Constant(c) if c.is_finite() => Ok(()),
            Self::Constant(_) => Err(Error::InvalidParameter(format!("{name} is not finite"))),
            Self::Sampled { r, values } => {
                let ok = !r.is_empty()
                    && r.len() == values.len()
                    && r.windows(2).all(|w| w[1] > w[0])
                    && r.iter().chain(values).all(|x| x.is_finite());
                if ok {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "{name} needs finite samples at strictly increasing radii"
                    )))
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialProblem<T> {
    pub radius: T,
    pub outer_radius: T,
    pub s: T,
    pub gibbs_coef: T,
    pub phi_in: Profile<T>,
    pub phi_out: Profile<T>,
    pub sigma_in: Profile<T>,
    pub sigma_out: Profile<T>,
    pub nodes: usize,
}

impl<T: Real> RadialProblem<T> {
    /// Constant data on both sides; `g` defaults to the coefficient of `st`.
    #[allow(clippy::too_many_arguments)]
    pub fn uniform(
        radius: T,
        outer_radius: T,
        st: SurfaceTension,
        phi_in: T,
        phi_out: T,
        sigma_in: T,
        sigma_out: T,
        nodes: usize,
    ) -> Self {
        Self {
            radius,
            outer_radius,
            s: T::one(),
            gibbs_coef: T::lit(st.gibbs_coefficient()),
            phi_in: Profile::Constant(phi_in),
            phi_out: Profile::Constant(phi_out),
            sigma_in: Profile::Constant(sigma_in),
            sigma_out: Profile::Constant(sigma_out),
            nodes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (r, ro) = (self.radius, self.outer_radius);
        if !(r.is_finite() && ro.is_finite() && r > T::zero() && ro > r) {
            return Err(Error::InvalidParameter(format!(
                "radii must satisfy 0 < R < R_out (got R = {r}, R_out = {ro})"
            )));
        }
        if self.nodes < MIN_RADIAL_NODES {
            return Err(Error::InvalidParameter(format!(
                "at least {MIN_RADIAL_NODES} radial nodes required (got {})",
                self.nodes
            )));
        }
        if !self.gibbs_coef.is_finite() {
            return Err(Error::InvalidParameter("gibbs_coef is not finite".into()));
        }
        self.phi_in.validate("phi_in")?;
        self.phi_out.validate("phi_out")?;
        self.sigma_in.validate("sigma_in")?;
        self.sigma_out.validate("sigma_out")
    }

    /// Interface value of the chemical potential.
    pub fn interface_value(&self) -> T {
        self.gibbs_coef / self.radius
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialSolution<T> {
    /// Radii of the inner grid, ending at `R`.
    pub r_in: Vec<T>,
    pub v_in: Vec<T>,
    /// Radii of the outer grid, starting at `R`.
    pub r_out: Vec<T>,
    pub v_out: Vec<T>,
    /// `∂_r v(R⁻) - ∂_r v(R⁺)`.
    pub jump: T,
    /// `-jump / 2`.
    pub r_dot: T,
    /// Max-norm residual of the discrete equations at the solution.
    pub residual: T,
}

/// Interior rows of the radial operator `-(1/r)(r v')' + v` on a uniform
/// grid, with `(lower, diag, upper)` per node.
fn radial_row<T: Real>(r: T, h: T) -> (T, T, T) {
    let h2 = h * h;
    let half = T::lit(0.5) * h;
    let (rm, rp) = (r - half, r + half);
    (-rm / (r * h2), (rm + rp) / (r * h2) + T::one(), -rp / (r * h2))
}

/// Thomas algorithm; fails on a vanishing pivot.
fn solve_tridiagonal<T: Real>(lower: &[T], diag: &[T], upper: &[T], rhs: &[T]) -> Result<Vec<T>> {
    let n = diag.len();
    let mut c = vec![T::zero(); n];
    let mut d = vec![T::zero(); n];
    let scale = diag.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    let tiny = scale * T::epsilon() * T::lit(16.0);
    let mut pivot = diag[0];
    for i in 0..n {
        if i > 0 {
            pivot = diag[i] - lower[i] * c[i - 1];
        }
        if !(pivot.abs() > tiny) {
            return Err(Error::IllConditioned(format!("zero pivot at row {i}")));
        }
        c[i] = if i + 1 < n { upper[i] / pivot } else { T::zero() };
        let prev = if i > 0 { lower[i] * d[i - 1] } else { T::zero() };
        d[i] = (rhs[i] - prev) / pivot;
    }
    for i in (0..n - 1).rev() {
        d[i] = d[i] - c[i] * d[i + 1];
    }
    Ok(d)
}

fn residual_max<T: Real>(lower: &[T], diag: &[T], upper: &[T], rhs: &[T], x: &[T]) -> T {
    let n = x.len();
    (0..n)
        .map(|i| {
            let mut a = diag[i] * x[i] - rhs[i];
            if i > 0 {
                a = a + lower[i] * x[i - 1];
            }
            if i + 1 < n {
                a = a + upper[i] * x[i + 1];
            }
            a.abs()
        })
        .fold(T::zero(), T::max)
}

/// Solves the radial limit problem and returns the interface velocity.
pub fn radial_sharp_velocity<T: Real>(p: &RadialProblem<T>) -> Result<RadialSolution<T>> {
    p.validate()?;
    if p.s != T::one() {
        return Err(Error::InvalidParameter(format!(
            "the radial oracle covers s = 1 (got s = {}); use s2_jump_probe for s = 2",
            p.s
        )));
    }
    let (big_r, ro) = (p.radius, p.outer_radius);
    let share = (big_r / ro).to_f64_lossy();
    let n_in = ((p.nodes as f64 * share).round() as usize).clamp(MIN_RADIAL_NODES / 4, p.nodes);
    let n_out = p.nodes.saturating_sub(n_in).max(MIN_RADIAL_NODES / 4);
    let vr = p.interface_value();
    let two = T::lit(2.0);

    // inner disc: unknowns v_0..v_{n_in-1}, v_{n_in} = vr at r = R
    let h_in = big_r / T::from_usize_lossy(n_in);
    let r_in: Vec<T> = (0..=n_in).map(|i| T::from_usize_lossy(i) * h_in).collect();
    let mut lo = vec![T::zero(); n_in];
    let mut di = vec![T::zero(); n_in];
    let mut up = vec![T::zero(); n_in];
    let mut rhs = vec![T::zero(); n_in];
    for i in 0..n_in {
        rhs[i] = p.phi_in.at(r_in[i]) + p.sigma_in.at(r_in[i]);
        if i == 0 {
            // Δv(0) = 2 v''(0) with the even ghost v_{-1} = v_1
            let k = T::lit(4.0) / (h_in * h_in);
            di[0] = k + T::one();
            up[0] = -k;
        } else {
            let (a, b, c) = radial_row(r_in[i], h_in);
            lo[i] = a;
            di[i] = b;
            up[i] = c;
        }
    }
    rhs[n_in - 1] = rhs[n_in - 1] - up[n_in - 1] * vr;
    up[n_in - 1] = T::zero();
    let mut v_in = solve_tridiagonal(&lo, &di, &up, &rhs)?;
    let res_in = residual_max(&lo, &di, &up, &rhs, &v_in);
    v_in.push(vr);

    // outer annulus: v_0 = vr at r = R, unknowns v_1..v_{n_out}
    let h_out = (ro - big_r) / T::from_usize_lossy(n_out);
    let r_out: Vec<T> = (0..=n_out).map(|j| big_r + T::from_usize_lossy(j) * h_out).collect();
    let m = n_out;
    let mut lo = vec![T::zero(); m];
    let mut di = vec![T::zero(); m];
    let mut up = vec![T::zero(); m];
    let mut rhs = vec![T::zero(); m];
    for j in 1..=n_out {
        let row = j - 1;
        rhs[row] = p.phi_out.at(r_out[j]) + p.sigma_out.at(r_out[j]);
        let (a, b, c) = radial_row(r_out[j], h_out);
        di[row] = b;
        if j == n_out {
            // odd ghost for the flux: v_{n+1} = v_{n-1}
            lo[row] = a + c;
        } else {
            lo[row] = a;
            up[row] = c;
        }
        if j == 1 {
            rhs[row] = rhs[row] - a * vr;
            lo[row] = T::zero();
        }
    }
    let sol = solve_tridiagonal(&lo, &di, &up, &rhs)?;
    let res_out = residual_max(&lo, &di, &up, &rhs, &sol);
    let mut v_out = Vec::with_capacity(n_out + 1);
    v_out.push(vr);
    v_out.extend(sol);

    // second-order one-sided derivatives at R
    let three = T::lit(3.0);
    let four = T::lit(4.0);
    let n = n_in;
    let d_in = (three * v_in[n] - four * v_in[n - 1] + v_in[n - 2]) / (two * h_in);
    let d_out = (-three * v_out[0] + four * v_out[1] - v_out[2]) / (two * h_out);
    let jump = d_in - d_out;
    Ok(RadialSolution {
        r_in,
        v_in,
        r_out,
        v_out,
        jump,
        r_dot: -jump / two,
        residual: res_in.max(res_out),
    })
}

/// Radial bin averages of a nodal 2D field about `centre`, over the nodes
/// selected by `keep` and with `lo ≤ r ≤ hi`. Empty bins are skipped.
pub fn radial_profile<T: Real>(
    field: &ScalarField<T>,
    centre: [T; 2],
    lo: T,
    hi: T,
    bins: usize,
    keep: impl Fn(usize) -> bool,
) -> Result<Profile<T>> {
    let grid = field.grid();
    if grid.dim() != 2 {
        return Err(Error::UnsupportedDimension(grid.dim()));
    }
    if !field.is_nodal() {
        return Err(Error::InvalidParameter("radial averages need nodal values".into()));
    }
    if !(hi > lo) || bins == 0 {
        return Err(Error::InvalidParameter(format!("empty radial range [{lo}, {hi}]")));
    }
    let width = (hi - lo) / T::from_usize_lossy(bins);
    let mut sum = vec![T::zero(); bins];
    let mut count = vec![0usize; bins];
    for (i, &value) in field.values().iter().enumerate() {
        if !keep(i) {
            continue;
        }
        let p = grid.point(i);
        let r = (p[0] - centre[0]).hypot(p[1] - centre[1]);
        if r < lo || r > hi {
            continue;
        }
        let b = (((r - lo) / width).to_f64_lossy() as usize).min(bins - 1);
        sum[b] = sum[b] + value;
        count[b] += 1;
    }
    let (mut r, mut values) = (Vec::new(), Vec::new());
    for b in 0..bins {
        if count[b] > 0 {
            r.push(lo + (T::from_usize_lossy(b) + T::lit(0.5)) * width);
            values.push(sum[b] / T::from_usize_lossy(count[b]));
        }
    }
    if r.is_empty() {
        return Err(Error::EmptyMask);
    }
    Ok(Profile::Sampled { r, values })
}

/// Rate of change of the sharp energy along a radial evolution with normal
/// velocity `V` (positive when `Ω⁺` grows) and constant curvature `κ`:
/// `st·V κ |Γ| + 2 V σ̄_Γ |Γ| + (σ̇, A^s σ + u + 3σ)`.
///
/// `sigma_on_interface` is the interface average of `σ`.
#[allow(clippy::too_many_arguments)]
pub fn sharp_energy_rate<T: Real>(
    velocity: T,
    kappa_mean: T,
    length: T,
    sigma_on_interface: T,
    sigma: &ScalarField<T>,
    sigma_dot: &ScalarField<T>,
    u: &ScalarField<T>,
    op: &FractionalOperator<T>,
    s: T,
    st: SurfaceTension,
) -> Result<T> {
    let geometric = T::lit(st.value()) * velocity * kappa_mean * length;
    let exchange = T::lit(2.0) * velocity * sigma_on_interface * length;
    let sigma = op.to_nodal(sigma)?;
    let drive = op
        .apply_power(s, &sigma)?
        .axpby(T::one(), &op.to_nodal(u)?, T::one())?
        .axpby(T::one(), &sigma, T::lit(3.0))?;
    Ok(geometric + exchange + op.inner(sigma_dot, &drive)?)
}

/// Arc-length weighted means of `∂_n w(p - d n)` (inside) and
/// `∂_n w(p + d n)` (outside) over the contour, one pair per offset `d`.
/// Points whose samples leave the box at any offset are skipped, so every
/// pair averages over the same points.
pub fn normal_derivative_profile<T: Real>(
    op: &FractionalOperator<T>,
    w: &ScalarField<T>,
    contour: &Contour<T>,
    offsets: &[T],
) -> Result<Vec<(T, T)>> {
    let grid = op.grid();
    if grid.dim() != 2 {
        return Err(Error::UnsupportedDimension(grid.dim()));
    }
    if contour.is_empty() {
        return Err(Error::NoInterface);
    }
    if offsets.is_empty() || offsets.iter().any(|d| !(d.is_finite() && *d > T::zero())) {
        return Err(Error::InvalidParameter("offsets must be positive and finite".into()));
    }
    let grad = op.gradient(w)?;
    let (gx, gy) = (grad[0].values(), grad[1].values());
    let lengths = grid.lengths();
    let in_box = |q: [T; 2]| (0..2).all(|a| q[a] >= T::zero() && q[a] <= lengths[a]);
    let mut acc = vec![(T::zero(), T::zero()); offsets.len()];
    let mut total = T::zero();
    for ((&p, &n), &wgt) in contour.points.iter().zip(&contour.normals).zip(&contour.weights) {
        let at = |d: T, side: T| [p[0] + side * d * n[0], p[1] + side * d * n[1]];
        if !offsets
            .iter()
            .all(|&d| in_box(at(d, -T::one())) && in_box(at(d, T::one())))
        {
            continue;
        }
        let dn = |q: [T; 2]| interpolate(grid, gx, q) * n[0] + interpolate(grid, gy, q) * n[1];
        for (a, &d) in acc.iter_mut().zip(offsets) {
            a.0 = a.0 + wgt * dn(at(d, -T::one()));
            a.1 = a.1 + wgt * dn(at(d, T::one()));
        }
        total = total + wgt;
    }
    if total == T::zero() {
        return Err(Error::EmptyMask);
    }
    Ok(acc.into_iter().map(|(i, o)| (i / total, o / total)).collect())
}

/// Arc-length weighted mean of `∂_n w(p - δ n) - ∂_n w(p + δ n)` over the
/// contour: the jump of the normal derivative of `w` across the interface,
/// inside minus outside, read off at distance `δ = band` from the layer.
pub fn normal_derivative_jump<T: Real>(
    op: &FractionalOperator<T>,
    w: &ScalarField<T>,
    contour: &Contour<T>,
    band: T,
) -> Result<T> {
    let (i, o) = normal_derivative_profile(op, w, contour, &[band])?[0];
    Ok(i - o)
}

/// Value at `d = 0` of the least-squares line through `(d_j, y_j)`; the
/// mean for a single distinct offset.
fn intercept<T: Real>(d: &[T], y: &[T]) -> T {
    let n = T::from_usize_lossy(d.len());
    let dm = d.iter().copied().sum::<T>() / n;
    let ym = y.iter().copied().sum::<T>() / n;
    let sdd: T = d.iter().map(|&x| (x - dm) * (x - dm)).sum();
    if sdd <= T::lit(1e-14) * dm * dm {
        return ym;
    }
    let sdy: T = d.iter().zip(y).map(|(&x, &v)| (x - dm) * (v - ym)).sum();
    ym - sdy / sdd * dm
}

/// Value at `r0` of the least-squares fit `a/r + b r` through `(r_j, y_j)`:
/// the radial derivative of a field with a point source and a uniform source.
fn radial_value<T: Real>(r0: T, r: &[T], y: &[T]) -> T {
    let (mut s11, mut s12, mut s22, mut t1, mut t2) = (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    for (&ri, &yi) in r.iter().zip(y) {
        let (f1, f2) = (ri.recip(), ri);
        s11 = s11 + f1 * f1;
        s12 = s12 + f1 * f2;
        s22 = s22 + f2 * f2;
        t1 = t1 + f1 * yi;
        t2 = t2 + f2 * yi;
    }
    let det = s11 * s22 - s12 * s12;
    if r.len() < 2 || det <= T::lit(1e-12) * s11 * s22 {
        return y.iter().copied().sum::<T>() / T::from_usize_lossy(y.len().max(1));
    }
    let a = (t1 * s22 - t2 * s12) / det;
    let b = (s11 * t2 - s12 * t1) / det;
    a / r0 + b * r0
}

/// Jump of `∂_n w` across the interface, inside minus outside, with each
/// side's mean normal derivative extrapolated to the interface from samples
/// at the given offsets (which should clear the inner layer). The inside is
/// extrapolated linearly. The outside is extrapolated linearly, or, given the
/// radius `R` of a circular interface, by the radial fit `a/r + b r` at
/// `r = R + d`.
pub fn extrapolated_jump<T: Real>(
    op: &FractionalOperator<T>,
    w: &ScalarField<T>,
    contour: &Contour<T>,
    inside: &[T],
    outside: &[T],
    radius: Option<T>,
) -> Result<T> {
    let pin = normal_derivative_profile(op, w, contour, inside)?;
    let pout = normal_derivative_profile(op, w, contour, outside)?;
    let yin: Vec<T> = pin.iter().map(|p| p.0).collect();
    let yout: Vec<T> = pout.iter().map(|p| p.1).collect();
    let out = match radius {
        Some(r0) => {
            let r: Vec<T> = outside.iter().map(|&d| r0 + d).collect();
            radial_value(r0, &r, &yout)
        }
        None => intercept(outside, &yout),
    };
    Ok(intercept(inside, &yin) - out)
}

/// Strength `α` of the low-pass filter `exp(-α (λ/λ_max)^4)` applied to `Av`
/// before the `s = 2` probe differentiates it once more.
pub const S2_FILTER_STRENGTH: f64 = 200.0;

/// `[∂(A v)/∂n]` for the `s = 2` law `[∂(Av)/∂n] = -2Ṙ`.
///
/// `Av` carries grid-scale ringing from the nonlinearity that a further
/// derivative amplifies; it is damped by a filter acting only near the
/// resolution limit, then the jump is extrapolated from offsets outside the
/// layer (see [`extrapolated_jump`]; pass the disc radius for a circle).
pub fn s2_jump_probe<T: Real>(
    op: &FractionalOperator<T>,
    v: &ScalarField<T>,
    contour: &Contour<T>,
    inside: &[T],
    outside: &[T],
    radius: Option<T>,
) -> Result<T> {
    let av = op.apply_power(T::one(), &op.to_nodal(v)?)?;
    let lam_max = op.eigenvalues().iter().copied().fold(T::zero(), T::max);
    let alpha = T::lit(S2_FILTER_STRENGTH);
    let smooth = op.apply_symbol(&av, |lam, _| (-alpha * (lam / lam_max).powi(4)).exp())?;
    extrapolated_jump(op, &smooth, contour, inside, outside, radius)
}
