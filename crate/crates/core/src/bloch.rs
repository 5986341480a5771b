//! Generalized Gell-Mann generator basis and the Bloch-vector picture of
//! density matrices.
//!
//! For Hilbert dimension n the basis holds the n^2 - 1 traceless Hermitian
//! generators normalized to Tr(lam_a lam_b) = 2 delta_ab, ordered as all
//! symmetric pairs E_jk + E_kj (j < k, lexicographic), then all antisymmetric
//! pairs -i(E_jk - E_kj) in the same order, then the n - 1 diagonal
//! generators. For n = 2 this is exactly (sigma_x, sigma_y, sigma_z).
//!
//! A density matrix maps to the real vector x_a = (sqrt(n)/2) Tr(lam_a rho)
//! and back via rho = (I + sqrt(n) sum_a x_a lam_a) / n. Unitary conjugation
//! becomes an orthogonal action on x, and conjugation by exp(-iHt) is
//! generated by the real antisymmetric matrix returned by
//! [`GeneratorBasis::transfer_generator`]: x(t) = exp(G t) x(0).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;

const TRACE_TOL: f64 = 1e-10;
const HERMITICITY_TOL: f64 = 1e-8;
const UNITARITY_TOL: f64 = 1e-8;

/// Bloch coordinates of a state in a [`GeneratorBasis`]. Length n^2 - 1; a
/// pure state has squared norm (n - 1)/2 and the maximally mixed state is the
/// origin. Nothing constrains a raw vector to the physical (positive) region.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochState(pub DVector<f64>);

impl BlochState {
    pub fn zeros(dim: usize) -> Self {
        BlochState(DVector::zeros(dim))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.len() == 0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }
}

type Triplet = (usize, usize, Complex64);

/// The full generator basis for one Hilbert dimension, with each generator
/// kept both dense and as sparse triplets (every generator has at most n
/// nonzero entries, which the hot paths exploit).
#[derive(Debug, Clone)]
pub struct GeneratorBasis {
    dim: usize,
    mats: Vec<DMatrix<Complex64>>,
    trips: Vec<Vec<Triplet>>,
}

impl GeneratorBasis {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension {
                what: "generator basis",
                min: 2,
                got: dim,
            });
        }
        let mut trips: Vec<Vec<Triplet>> = Vec::with_capacity(dim * dim - 1);
        let one = Complex64::new(1.0, 0.0);
        for j in 0..dim {
            for k in j + 1..dim {
                trips.push(vec![(j, k, one), (k, j, one)]);
            }
        }
        for j in 0..dim {
            for k in j + 1..dim {
                trips.push(vec![(j, k, -Complex64::i()), (k, j, Complex64::i())]);
            }
        }
        for l in 1..dim {
            let s = (2.0 / (l as f64 * (l + 1) as f64)).sqrt();
            let mut t: Vec<Triplet> = (0..l).map(|m| (m, m, Complex64::new(s, 0.0))).collect();
            t.push((l, l, Complex64::new(-s * l as f64, 0.0)));
            trips.push(t);
        }
        let mats = trips
            .iter()
            .map(|t| {
                let mut m = DMatrix::zeros(dim, dim);
                for &(r, c, v) in t {
                    m[(r, c)] = v;
                }
                m
            })
            .collect();
        Ok(GeneratorBasis { dim, mats, trips })
    }

    /// Hilbert-space dimension n.
    pub fn hilbert_dim(&self) -> usize {
        self.dim
    }

    /// Number of generators, n^2 - 1.
    pub fn len(&self) -> usize {
        self.dim * self.dim - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn matrix(&self, a: usize) -> &DMatrix<Complex64> {
        &self.mats[a]
    }

    pub fn matrices(&self) -> &[DMatrix<Complex64>] {
        &self.mats
    }

    /// Tr(lam_a m) for every generator. Real for Hermitian m, so only the
    /// real part is kept; callers pass matrices they have already validated.
    pub(crate) fn coefficients(&self, m: &DMatrix<Complex64>) -> Vec<f64> {
        self.trips
            .iter()
            .map(|t| t.iter().map(|&(r, c, v)| (v * m[(c, r)]).re).sum())
            .collect()
    }

    fn check_dim(&self, m: &DMatrix<Complex64>, what: &'static str) -> Result<()> {
        if m.nrows() != self.dim || m.ncols() != self.dim {
            return Err(Error::LengthMismatch {
                what,
                expected: self.dim,
                got: m.nrows().max(m.ncols()),
            });
        }
        Ok(())
    }

    /// Bloch coordinates x_a = (sqrt(n)/2) Tr(lam_a rho) of a unit-trace
    /// Hermitian matrix.
    pub fn to_bloch(&self, rho: &DMatrix<Complex64>) -> Result<BlochState> {
        self.check_dim(rho, "density matrix")?;
        let trace_dev = (rho.trace() - Complex64::new(1.0, 0.0)).norm();
        if trace_dev > TRACE_TOL {
            return Err(Error::NotNormalized {
                what: "density matrix trace",
                deviation: trace_dev,
            });
        }
        let herm_dev = linalg::hermiticity_deviation(rho);
        if herm_dev > HERMITICITY_TOL {
            return Err(Error::NotHermitian {
                deviation: herm_dev,
            });
        }
        let scale = (self.dim as f64).sqrt() / 2.0;
        let coeff = self.coefficients(rho);
        Ok(BlochState(DVector::from_iterator(
            self.len(),
            coeff.into_iter().map(|c| scale * c),
        )))
    }

    /// Inverse of [`GeneratorBasis::to_bloch`]; always returns a Hermitian
    /// matrix with unit trace, whatever the input vector.
    pub fn from_bloch(&self, x: &BlochState) -> Result<DMatrix<Complex64>> {
        if x.len() != self.len() {
            return Err(Error::LengthMismatch {
                what: "bloch vector",
                expected: self.len(),
                got: x.len(),
            });
        }
        let n = self.dim as f64;
        let scale = n.sqrt() / n;
        let mut rho =
            DMatrix::from_diagonal_element(self.dim, self.dim, Complex64::new(1.0 / n, 0.0));
        for (t, &xa) in self.trips.iter().zip(x.0.iter()) {
            let w = Complex64::new(scale * xa, 0.0);
            for &(r, c, v) in t {
                rho[(r, c)] += w * v;
            }
        }
        Ok(rho)
    }

    /// Real antisymmetric generator of Bloch rotation under a Hamiltonian:
    /// G_ab = (i/2) Tr([lam_a, lam_b] h), so that exp(G t) x(rho) equals
    /// x(exp(-iht) rho exp(iht)).
    pub fn transfer_generator(&self, h: &DMatrix<Complex64>) -> Result<DMatrix<f64>> {
        self.check_dim(h, "hamiltonian")?;
        let dev = linalg::hermiticity_deviation(h);
        if dev > HERMITICITY_TOL {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let d = self.len();
        let mut g = DMatrix::zeros(d, d);
        // For Hermitian h, Tr([lam_a, lam_b] h) = 2i Im Tr(lam_a lam_b h),
        // so G_ab = -Im Tr(lam_a lam_b h); the trace runs over the sparse
        // entries of the two generators.
        for a in 0..d {
            for b in a + 1..d {
                let mut t = Complex64::new(0.0, 0.0);
                for &(r, s, va) in &self.trips[a] {
                    for &(s2, u, vb) in &self.trips[b] {
                        if s2 == s {
                            t += va * vb * h[(u, r)];
                        }
                    }
                }
                g[(a, b)] = -t.im;
                g[(b, a)] = t.im;
            }
        }
        Ok(g)
    }

    /// Sparse transfer generator of a single basis element, as triplets.
    /// `transfer_generator(h)` is the coefficient-weighted sum of these,
    /// which the lifted-generator assembly exploits.
    pub(crate) fn generator_of_basis(&self, a: usize) -> Vec<(usize, usize, f64)> {
        let d = self.len();
        let lam_a = &self.mats[a];
        let mut out = Vec::new();
        for i in 0..d {
            for j in i + 1..d {
                let mut t = Complex64::new(0.0, 0.0);
                for &(r, s, vi) in &self.trips[i] {
                    for &(s2, u, vj) in &self.trips[j] {
                        if s2 == s {
                            t += vi * vj * lam_a[(u, r)];
                        }
                    }
                }
                if t.im != 0.0 {
                    out.push((i, j, -t.im));
                    out.push((j, i, t.im));
                }
            }
        }
        out
    }

    /// Orthogonal Bloch action of a unitary: T_ab = (1/2) Tr(lam_a u lam_b u^dagger).
    pub fn transfer_matrix(&self, u: &DMatrix<Complex64>) -> Result<DMatrix<f64>> {
        self.check_dim(u, "unitary")?;
        let id = DMatrix::<Complex64>::identity(self.dim, self.dim);
        let dev = (u.adjoint() * u - id)
            .iter()
            .fold(0.0f64, |m, z| m.max(z.norm()));
        if dev > UNITARITY_TOL {
            return Err(Error::NotUnitary { deviation: dev });
        }
        let d = self.len();
        let mut t = DMatrix::zeros(d, d);
        for b in 0..d {
            // u lam_b u^dagger from the sparse entries of lam_b.
            let mut conj = DMatrix::<Complex64>::zeros(self.dim, self.dim);
            for &(r, c, v) in &self.trips[b] {
                let col_r = u.column(r);
                let col_c = u.column(c);
                for i in 0..self.dim {
                    let vi = v * col_r[i];
                    for j in 0..self.dim {
                        conj[(i, j)] += vi * col_c[j].conj();
                    }
                }
            }
            for a in 0..d {
                let tr: Complex64 = self.trips[a]
                    .iter()
                    .map(|&(r, c, v)| v * conj[(c, r)])
                    .sum();
                t[(a, b)] = 0.5 * tr.re;
            }
        }
        Ok(t)
    }
}
