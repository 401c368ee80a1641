//! Quadratic forms for enclosed area and pulse energy, and the loop-closure
//! constraint set.
//!
//! With the envelope expanded as `Ω(t) = Σₖ ωₖ χₖ(t)`, the enclosed
//! phase-space area becomes `A = ωᵀ Â ω` with
//!
//! ```text
//! Âᵢⱼ = ½ ∬ χᵢ(t) · cos(δ·max(t,s)) sin(δ·min(t,s)) · χⱼ(s) dt ds,
//! ```
//!
//! and the regularised energy becomes `ωᵀ Ê ω` with `Ê = M + c·S`, where
//! `M` and `S` are the hat-basis mass and stiffness matrices.  The area
//! kernel is assembled per element pair by Gauss–Legendre quadrature; the
//! diagonal pairs are first split along the `t = s` kink of the kernel so
//! every quadrature cell sees a smooth integrand.
//!
//! Loop closure at the gate time and first-order insensitivity to
//! detuning drift require `⟨φⁱ, Ω⟩ = 0` for the four functions
//! `φ¹ = cos δt`, `φ² = sin δt`, `φ³ = t sin δt`, `φ⁴ = t cos δt`.
//! [`ConstraintSet`] carries their hat-basis moment vectors `bⁱ`, the
//! analytic Gram matrix of the `φⁱ`, and the orthogonal projector onto
//! the admissible subspace `{ω : bⁱᵀω = 0}`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, Matrix4};

use crate::error::{Error, Result};
use crate::fmath;
use crate::grid::{trig_moments_012, TimeGrid};
use crate::quadrature::GaussLegendre;

/// Default Gauss–Legendre points per axis per element in area assembly.
pub const DEFAULT_AREA_QUAD_ORDER: usize = 6;

/// Which quadratic form a kernel represents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    /// Enclosed-area form at detuning `delta` (rad/s).
    Area { delta: f64 },
    /// Energy form `M + c·S` with Sobolev weight `c`.
    Energy { c: f64 },
}

/// A symmetric quadratic form over hat-basis coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticKernel {
    grid: TimeGrid,
    kind: KernelKind,
    matrix: DMatrix<f64>,
}

impl QuadraticKernel {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Evaluate `ωᵀ M ω`.
    pub fn form(&self, omega: &[f64]) -> f64 {
        let n = self.matrix.nrows();
        assert_eq!(omega.len(), n, "coefficient count must match the kernel");
        let mut acc = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.matrix[(i, j)] * omega[j];
            }
            acc += omega[i] * row;
        }
        acc
    }

    /// Largest absolute deviation from symmetry, `max |Mᵢⱼ − Mⱼᵢ|`.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.matrix.nrows();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max(fmath::abs(self.matrix[(i, j)] - self.matrix[(j, i)]));
            }
        }
        worst
    }
}

/// Assemble the enclosed-area kernel with the default quadrature order.
pub fn build_area_kernel(grid: &TimeGrid, delta: f64) -> Result<QuadraticKernel> {
    build_area_kernel_with_order(grid, delta, DEFAULT_AREA_QUAD_ORDER)
}

/// Assemble the enclosed-area kernel with `order` Gauss–Legendre points
/// per axis per element.
pub fn build_area_kernel_with_order(
    grid: &TimeGrid,
    delta: f64,
    order: usize,
) -> Result<QuadraticKernel> {
    if !(delta > 0.0) {
        return Err(Error::NonPositive { what: "detuning delta", value: delta });
    }
    let n = grid.n();
    let ne = grid.n_elements();
    let gl = GaussLegendre::new(order);
    let mut m = DMatrix::<f64>::zeros(n, n);

    // Pre-map quadrature nodes onto every element once.
    let mut pts: Vec<Vec<(f64, f64)>> = Vec::with_capacity(ne);
    for e in 0..ne {
        let (a, b) = grid.element(e);
        pts.push(gl.mapped(a, b).collect());
    }

    let kernel = |t: f64, s: f64| {
        let (hi, lo) = if t >= s { (t, s) } else { (s, t) };
        fmath::cos(delta * hi) * fmath::sin(delta * lo)
    };

    // Accumulate one sample into the (up to) 2×2 block of hats active on
    // elements e (in t) and f (in s).
    let deposit = |m: &mut DMatrix<f64>, e: usize, f: usize, t: f64, s: f64, w: f64| {
        let (ae, be) = grid.element(e);
        let (af, bf) = grid.element(f);
        let rise_t = (t - ae) / (be - ae);
        let rise_s = (s - af) / (bf - af);
        let k = 0.5 * w * kernel(t, s);
        // (hat index, value); hat i sits at interior node i + 1.
        let t_hats = [(e, 1.0 - rise_t), (e + 1, rise_t)];
        let s_hats = [(f, 1.0 - rise_s), (f + 1, rise_s)];
        for &(ti, tv) in &t_hats {
            if ti == 0 || ti > n {
                continue;
            }
            for &(si, sv) in &s_hats {
                if si == 0 || si > n {
                    continue;
                }
                m[(ti - 1, si - 1)] += k * tv * sv;
            }
        }
    };

    for e in 0..ne {
        for f in 0..ne {
            if e != f {
                for &(t, wt) in &pts[e] {
                    for &(s, ws) in &pts[f] {
                        deposit(&mut m, e, f, t, s, wt * ws);
                    }
                }
            } else {
                // Split the square along t = s and map each triangle to the
                // unit square (Duffy), which concentrates points near the
                // kink and keeps the integrand smooth per cell.
                let (a, b) = grid.element(e);
                let h = b - a;
                for (x, wx) in gl.mapped(0.0, 1.0) {
                    for (y, wy) in gl.mapped(0.0, 1.0) {
                        let jac = h * h * x * wx * wy;
                        // Lower triangle: s ≤ t.
                        let (t, s) = (a + h * x, a + h * x * y);
                        deposit(&mut m, e, e, t, s, jac);
                        // Upper triangle: t ≤ s.
                        deposit(&mut m, e, e, s, t, jac);
                    }
                }
            }
        }
    }

    symmetrize(&mut m);
    Ok(QuadraticKernel { grid: grid.clone(), kind: KernelKind::Area { delta }, matrix: m })
}

/// Assemble `Ê = M + c·S` (mass plus `c` times stiffness).
pub fn build_energy_kernel(grid: &TimeGrid, c: f64) -> Result<QuadraticKernel> {
    if c < 0.0 {
        return Err(Error::NegativeSobolevWeight { c });
    }
    let mut m = mass_matrix(grid);
    if c > 0.0 {
        m += stiffness_matrix(grid).scale(c);
    }
    Ok(QuadraticKernel { grid: grid.clone(), kind: KernelKind::Energy { c }, matrix: m })
}

/// Hat-basis mass matrix `Mᵢⱼ = ∫ χᵢ χⱼ` (tridiagonal; closed form).
pub(crate) fn mass_matrix(grid: &TimeGrid) -> DMatrix<f64> {
    let n = grid.n();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for e in 0..grid.n_elements() {
        let (a, b) = grid.element(e);
        let h = b - a;
        // Local nodes e (falling) and e+1 (rising); interior hats only.
        add_local(&mut m, n, e, [h / 3.0, h / 6.0, h / 3.0]);
    }
    m
}

/// Hat-basis stiffness matrix `Sᵢⱼ = ∫ χᵢ′ χⱼ′` (tridiagonal; closed form).
pub(crate) fn stiffness_matrix(grid: &TimeGrid) -> DMatrix<f64> {
    let n = grid.n();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for e in 0..grid.n_elements() {
        let (a, b) = grid.element(e);
        let h = b - a;
        add_local(&mut m, n, e, [1.0 / h, -1.0 / h, 1.0 / h]);
    }
    m
}

/// Scatter a symmetric 2×2 element block `[diag, off; off, diag]` for the
/// hats at nodes `e` and `e+1` into the interior-hat matrix.
fn add_local(m: &mut DMatrix<f64>, n: usize, e: usize, local: [f64; 3]) {
    let [diag_a, off, diag_b] = local;
    if e >= 1 && e <= n {
        m[(e - 1, e - 1)] += diag_a;
    }
    if e + 1 <= n {
        m[(e, e)] += diag_b;
    }
    if e >= 1 && e + 1 <= n {
        m[(e - 1, e)] += off;
        m[(e, e - 1)] += off;
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// The four closure/robustness constraints in hat-basis form.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    grid: TimeGrid,
    delta: f64,
    vectors: DMatrix<f64>,
    gram: Matrix4<f64>,
    projector: DMatrix<f64>,
}

impl ConstraintSet {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `n × 4` matrix whose column `i` is `bⁱₖ = ∫ φⁱ χₖ`.
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    /// Constraint vector `bⁱ` (i = 0..4) as a column.
    pub fn vector(&self, i: usize) -> DVector<f64> {
        self.vectors.column(i).into_owned()
    }

    /// Analytic Gram matrix `Gᵢⱼ = ∫₀^τ φⁱ φʲ dt`.
    pub fn gram(&self) -> &Matrix4<f64> {
        &self.gram
    }

    /// Orthogonal projector onto `{ω : bⁱᵀ ω = 0, i = 1..4}`.
    pub fn projector(&self) -> &DMatrix<f64> {
        &self.projector
    }

    /// Worst relative constraint violation `maxᵢ |bⁱᵀω| / (‖bⁱ‖·‖ω‖)`.
    pub fn residual(&self, omega: &[f64]) -> f64 {
        let w = DVector::from_column_slice(omega);
        let mut worst = 0.0_f64;
        for i in 0..4 {
            let b = self.vectors.column(i);
            let scale = b.norm() * w.norm();
            if scale > 0.0 {
                worst = worst.max(fmath::abs(b.dot(&w)) / scale);
            }
        }
        worst
    }
}

/// Build the constraint set for a grid at detuning `delta`.
///
/// An incommensurate `δ·τ` (no integer number of loops) is allowed — the
/// algebra stays valid — but it is logged as a warning since closure of
/// the nominal loop then has no solution.
pub fn build_constraints(grid: &TimeGrid, delta: f64) -> Result<ConstraintSet> {
    if !(delta > 0.0) {
        return Err(Error::SingularGram);
    }
    let tau = grid.tau();
    let turns = delta * tau / (2.0 * core::f64::consts::PI);
    let nearest = fmath::round(turns);
    if nearest < 1.0 || fmath::abs(turns - nearest) > 1e-9 * turns.max(1.0) {
        log::warn!(
            "delta*tau = {turns:.6}*2pi is not an integer number of loops; \
             the closure constraints admit no exact loop"
        );
    }

    let n = grid.n();
    let mut b = DMatrix::<f64>::zeros(n, 4);
    for e in 0..grid.n_elements() {
        let (a, t1) = grid.element(e);
        let h = t1 - a;
        let [s0, c0, s1, c1, s2, c2] = trig_moments_012(a, t1, delta);
        // ∫ φ χ over this element for the rising ((t−a)/h) and falling
        // ((t1−t)/h) hat pieces; φ ∈ {cos δt, sin δt, t sin δt, t cos δt}.
        let rising = [
            (c1 - a * c0) / h,
            (s1 - a * s0) / h,
            (s2 - a * s1) / h,
            (c2 - a * c1) / h,
        ];
        let falling = [
            (t1 * c0 - c1) / h,
            (t1 * s0 - s1) / h,
            (t1 * s1 - s2) / h,
            (t1 * c1 - c2) / h,
        ];
        for i in 0..4 {
            if e + 1 <= n {
                b[(e, i)] += rising[i];
            }
            if e >= 1 {
                b[(e - 1, i)] += falling[i];
            }
        }
    }

    // Gram matrix of the φ themselves, via product-to-sum identities: all
    // ten entries reduce to moments of sin/cos at frequency 2δ.
    let [s0, c0, s1, c1, s2, c2] = trig_moments_012(0.0, tau, 2.0 * delta);
    let t2 = tau * tau / 2.0;
    let t3 = tau * tau * tau / 3.0;
    let gram = Matrix4::new(
        0.5 * (tau + c0), 0.5 * s0,         0.5 * s1,        0.5 * (t2 + c1),
        0.5 * s0,         0.5 * (tau - c0), 0.5 * (t2 - c1), 0.5 * s1,
        0.5 * s1,         0.5 * (t2 - c1),  0.5 * (t3 - c2), 0.5 * s2,
        0.5 * (t2 + c1),  0.5 * s1,         0.5 * s2,        0.5 * (t3 + c2),
    );
    if nalgebra::Cholesky::new(gram).is_none() {
        return Err(Error::SingularGram);
    }

    // Euclidean-orthogonal projector onto the admissible subspace, built
    // from the Gram matrix of the discretised constraint vectors so that
    // idempotence and bⁱ-annihilation hold to machine precision.
    let btb = b.transpose() * &b;
    let chol = nalgebra::Cholesky::new(btb).ok_or(Error::SingularGram)?;
    let mut x = b.transpose();
    for mut col in x.column_iter_mut() {
        chol.solve_mut(&mut col);
    }
    let mut projector = DMatrix::<f64>::identity(n, n) - &b * x;
    symmetrize(&mut projector);

    Ok(ConstraintSet { grid: grid.clone(), delta, vectors: b, gram, projector })
}

/// Restrict a kernel to the admissible subspace: `p M p`, resymmetrised.
///
/// The result is singular by construction (nullity at least 4).
pub fn project_kernel(kernel: &QuadraticKernel, constraints: &ConstraintSet) -> Result<QuadraticKernel> {
    if kernel.grid() != constraints.grid() {
        return Err(Error::GridMismatch);
    }
    let p = constraints.projector();
    let mut m = p * kernel.matrix() * p;
    symmetrize(&mut m);
    Ok(QuadraticKernel { grid: kernel.grid.clone(), kind: kernel.kind, matrix: m })
}
