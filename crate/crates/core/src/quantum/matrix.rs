//! Dense complex 2×2 and 4×4 matrices.
//!
//! 4×4 matrices act on A⊗B with row/column index `2a + b`. Operations that
//! act on the B factor only (`I_A ⊗ K`) are done block-wise on the four 2×2
//! B-blocks instead of through a full 4×4 product.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat4(pub [[C64; 4]; 4]);

impl Mat2 {
    pub const fn zero() -> Self {
        Mat2([[ZERO; 2]; 2])
    }

    pub const fn identity() -> Self {
        Mat2([[ONE, ZERO], [ZERO, ONE]])
    }

    pub fn from_real(m: [[f64; 2]; 2]) -> Self {
        Mat2(m.map(|row| row.map(|x| C64::new(x, 0.0))))
    }

    /// Rank-one projector `|v><v|`.
    pub fn outer(v: [C64; 2]) -> Self {
        let mut out = Self::zero();
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] = v[i] * v[j].conj();
            }
        }
        out
    }

    pub fn pauli_x() -> Self {
        Mat2([[ZERO, ONE], [ONE, ZERO]])
    }

    pub fn pauli_y() -> Self {
        let i = C64::new(0.0, 1.0);
        Mat2([[ZERO, -i], [i, ZERO]])
    }

    pub fn pauli_z() -> Self {
        Mat2([[ONE, ZERO], [ZERO, -ONE]])
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Mat2([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn scale(&self, s: f64) -> Self {
        Mat2(self.0.map(|row| row.map(|x| x * s)))
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    /// `Re Tr(self · other)`.
    pub fn trace_product(&self, other: &Mat2) -> f64 {
        let (a, b) = (&self.0, &other.0);
        (a[0][0] * b[0][0] + a[0][1] * b[1][0] + a[1][0] * b[0][1] + a[1][1] * b[1][1]).re
    }

    /// `K · self · K†`.
    pub fn sandwich(&self, k: &Mat2) -> Mat2 {
        *k * *self * k.adjoint()
    }

    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((self.0[i][j] - other.0[i][j]).norm());
            }
        }
        worst
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
    ///
    /// Exactly diagonal inputs are returned untouched so that functions of
    /// diagonal matrices (e.g. `sqrt(I)`) stay exact.
    pub fn hermitian_eigen(&self) -> ([f64; 2], [[C64; 2]; 2]) {
        let a = self.0[0][0].re;
        let d = self.0[1][1].re;
        let b = self.0[0][1];
        if b == ZERO {
            return if a <= d {
                ([a, d], [[ONE, ZERO], [ZERO, ONE]])
            } else {
                ([d, a], [[ZERO, ONE], [ONE, ZERO]])
            };
        }
        let mean = 0.5 * (a + d);
        let radius = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        let values = [mean - radius, mean + radius];
        let vectors = values.map(|lambda| {
            // (H - λ)v = 0 with v = (b, λ - a).
            let v = [b, C64::new(lambda - a, 0.0)];
            let norm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
            [v[0] / norm, v[1] / norm]
        });
        (values, vectors)
    }

    /// Applies a real function to the spectrum of a Hermitian matrix.
    pub fn hermitian_map(&self, f: impl Fn(f64) -> f64) -> Mat2 {
        let (values, vectors) = self.hermitian_eigen();
        if self.0[0][1] == ZERO {
            let mut out = Mat2::zero();
            out.0[0][0] = C64::new(f(self.0[0][0].re), 0.0);
            out.0[1][1] = C64::new(f(self.0[1][1].re), 0.0);
            return out;
        }
        let mut out = Mat2::zero();
        for (lambda, v) in values.iter().zip(vectors.iter()) {
            out = out + Mat2::outer(*v).scale(f(*lambda));
        }
        out
    }

    /// Square root of a PSD matrix; eigenvalues in `[-1e-10, 0)` are clipped.
    pub fn psd_sqrt(&self) -> Mat2 {
        self.hermitian_map(|x| x.max(0.0).sqrt())
    }

    /// Moore–Penrose inverse square root on the support (eigenvalues > 1e-12).
    pub fn psd_pinv_sqrt(&self) -> Mat2 {
        self.hermitian_map(|x| if x > 1e-12 { 1.0 / x.sqrt() } else { 0.0 })
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.hermitian_eigen().0[0]
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, rhs: Mat2) -> Mat2 {
        let mut out = self;
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] += rhs.0[i][j];
            }
        }
        out
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, rhs: Mat2) -> Mat2 {
        let mut out = self;
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] -= rhs.0[i][j];
            }
        }
        out
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &rhs.0);
        Mat2([
            [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
        ])
    }
}

impl Mat4 {
    pub const fn zero() -> Self {
        Mat4([[ZERO; 4]; 4])
    }

    pub fn identity() -> Self {
        let mut out = Self::zero();
        for i in 0..4 {
            out.0[i][i] = ONE;
        }
        out
    }

    pub fn from_real(m: [[f64; 4]; 4]) -> Self {
        Mat4(m.map(|row| row.map(|x| C64::new(x, 0.0))))
    }

    /// Rank-one projector `|v><v|`.
    pub fn outer(v: [C64; 4]) -> Self {
        let mut out = Self::zero();
        for i in 0..4 {
            for j in 0..4 {
                out.0[i][j] = v[i] * v[j].conj();
            }
        }
        out
    }

    pub fn kron(a: &Mat2, b: &Mat2) -> Self {
        let mut out = Self::zero();
        for ra in 0..2 {
            for ca in 0..2 {
                for rb in 0..2 {
                    for cb in 0..2 {
                        out.0[2 * ra + rb][2 * ca + cb] = a.0[ra][ca] * b.0[rb][cb];
                    }
                }
            }
        }
        out
    }

    /// The B-block `<a|ρ|a'>` as a 2×2 matrix.
    #[inline]
    pub fn block(&self, a: usize, a_prime: usize) -> Mat2 {
        let m = &self.0;
        Mat2([
            [m[2 * a][2 * a_prime], m[2 * a][2 * a_prime + 1]],
            [m[2 * a + 1][2 * a_prime], m[2 * a + 1][2 * a_prime + 1]],
        ])
    }

    #[inline]
    fn set_block(&mut self, a: usize, a_prime: usize, block: &Mat2) {
        for b in 0..2 {
            for b_prime in 0..2 {
                self.0[2 * a + b][2 * a_prime + b_prime] = block.0[b][b_prime];
            }
        }
    }

    /// `(I ⊗ K) · self · (I ⊗ K)†`.
    pub fn sandwich_b(&self, k: &Mat2) -> Mat4 {
        let k_dag = k.adjoint();
        let mut out = Mat4::zero();
        for a in 0..2 {
            for a_prime in 0..2 {
                out.set_block(a, a_prime, &(*k * self.block(a, a_prime) * k_dag));
            }
        }
        out
    }

    /// `Re Tr(self · (P ⊗ N))`.
    #[inline]
    pub fn expect_product(&self, p: &Mat2, n: &Mat2) -> f64 {
        let mut total = 0.0;
        for a in 0..2 {
            for a_prime in 0..2 {
                let coeff = p.0[a_prime][a];
                if coeff == ZERO {
                    continue;
                }
                let block = self.block(a, a_prime);
                let mut tr = ZERO;
                for b in 0..2 {
                    for b_prime in 0..2 {
                        tr += block.0[b][b_prime] * n.0[b_prime][b];
                    }
                }
                total += (coeff * tr).re;
            }
        }
        total
    }

    /// `Re Tr(self · (I ⊗ E))`.
    pub fn expect_b(&self, effect: &Mat2) -> f64 {
        self.block(0, 0).trace_product(effect) + self.block(1, 1).trace_product(effect)
    }

    pub fn partial_trace_b(&self) -> Mat2 {
        let mut out = Mat2::zero();
        for a in 0..2 {
            for a_prime in 0..2 {
                out.0[a][a_prime] = self.block(a, a_prime).trace();
            }
        }
        out
    }

    pub fn partial_trace_a(&self) -> Mat2 {
        self.block(0, 0) + self.block(1, 1)
    }

    pub fn adjoint(&self) -> Mat4 {
        let mut out = Mat4::zero();
        for i in 0..4 {
            for j in 0..4 {
                out.0[i][j] = self.0[j][i].conj();
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Mat4 {
        Mat4(self.0.map(|row| row.map(|x| x * s)))
    }

    pub fn trace(&self) -> C64 {
        (0..4).map(|i| self.0[i][i]).sum()
    }

    /// `Re Tr(self · other)`.
    pub fn trace_product(&self, other: &Mat4) -> f64 {
        let mut total = ZERO;
        for i in 0..4 {
            for j in 0..4 {
                total += self.0[i][j] * other.0[j][i];
            }
        }
        total.re
    }

    pub fn max_abs_diff(&self, other: &Mat4) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..4 {
            for j in 0..4 {
                worst = worst.max((self.0[i][j] - other.0[i][j]).norm());
            }
        }
        worst
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> [f64; 4] {
        let m = nalgebra::Matrix4::from_fn(|i, j| self.0[i][j]);
        let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
        let values = herm.symmetric_eigenvalues();
        let mut out = [values[0], values[1], values[2], values[3]];
        out.sort_by(f64::total_cmp);
        out
    }
}

impl Add for Mat4 {
    type Output = Mat4;
    fn add(self, rhs: Mat4) -> Mat4 {
        let mut out = self;
        for i in 0..4 {
            for j in 0..4 {
                out.0[i][j] += rhs.0[i][j];
            }
        }
        out
    }
}

impl Sub for Mat4 {
    type Output = Mat4;
    fn sub(self, rhs: Mat4) -> Mat4 {
        let mut out = self;
        for i in 0..4 {
            for j in 0..4 {
                out.0[i][j] -= rhs.0[i][j];
            }
        }
        out
    }
}

impl Mul for Mat4 {
    type Output = Mat4;
    fn mul(self, rhs: Mat4) -> Mat4 {
        let mut out = Mat4::zero();
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = ZERO;
                for k in 0..4 {
                    acc += self.0[i][k] * rhs.0[k][j];
                }
                out.0[i][j] = acc;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_hermitian(seed: u64) -> Mat2 {
        // Small deterministic generator; avoids pulling rand into matrix tests.
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let (a, d) = (next(), next());
        let b = C64::new(next(), next());
        Mat2([[C64::new(a, 0.0), b], [b.conj(), C64::new(d, 0.0)]])
    }

    #[test]
    fn sandwich_b_matches_full_kron_product() {
        let k = Mat2([[C64::new(0.3, 0.1), C64::new(-0.2, 0.4)], [C64::new(0.5, 0.0), C64::new(0.1, -0.7)]]);
        let rho = Mat4::kron(&random_hermitian(1), &random_hermitian(2))
            + Mat4::kron(&random_hermitian(3), &random_hermitian(4));
        let lifted = Mat4::kron(&Mat2::identity(), &k);
        let full = lifted * rho * lifted.adjoint();
        assert!(rho.sandwich_b(&k).max_abs_diff(&full) < 1e-14);
    }

    #[test]
    fn expect_product_matches_full_trace() {
        let rho = Mat4::kron(&random_hermitian(5), &random_hermitian(6));
        let (p, n) = (random_hermitian(7), random_hermitian(8));
        let full = rho.trace_product(&Mat4::kron(&p, &n));
        assert!((rho.expect_product(&p, &n) - full).abs() < 1e-14);
    }

    #[test]
    fn hermitian_eigen_reconstructs() {
        for seed in 0..50 {
            let h = random_hermitian(seed);
            let rebuilt = h.hermitian_map(|x| x);
            assert!(rebuilt.max_abs_diff(&h) < 1e-13, "seed {seed}");
            let sq = h.hermitian_map(|x| x * x);
            assert!(sq.max_abs_diff(&(h * h)) < 1e-13);
        }
    }

    #[test]
    fn sqrt_of_identity_is_exact() {
        assert_eq!(Mat2::identity().psd_sqrt(), Mat2::identity());
        assert_eq!(Mat2::identity().scale(0.25).psd_sqrt(), Mat2::identity().scale(0.5));
    }

    #[test]
    fn partial_traces_of_product() {
        let (a, b) = (Mat2::from_real([[0.7, 0.1], [0.1, 0.3]]), Mat2::from_real([[0.4, 0.0], [0.0, 0.6]]));
        let ab = Mat4::kron(&a, &b);
        assert!(ab.partial_trace_b().max_abs_diff(&a) < 1e-15);
        assert!(ab.partial_trace_a().max_abs_diff(&b) < 1e-15);
    }

    #[test]
    fn eigenvalues_of_diagonal() {
        let m = Mat4::from_real([
            [0.1, 0.0, 0.0, 0.0],
            [0.0, 0.4, 0.0, 0.0],
            [0.0, 0.0, -0.2, 0.0],
            [0.0, 0.0, 0.0, 0.7],
        ]);
        let ev = m.hermitian_eigenvalues();
        for (got, want) in ev.iter().zip([-0.2, 0.1, 0.4, 0.7]) {
            assert!((got - want).abs() < 1e-12);
        }
    }
}
