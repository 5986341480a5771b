//! Small dense helpers: Hermitian eigendecompositions, unitary evolution by
//! diagonalization, and state constructors shared by the engine and tests.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub fn complexify(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Largest absolute deviation from Hermiticity.
pub fn hermiticity_deviation(m: &DMatrix<Complex64>) -> f64 {
    let mut dev: f64 = 0.0;
    for r in 0..m.nrows() {
        for c in r..m.ncols() {
            dev = dev.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    dev
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted
/// ascending. Columns of the returned matrix are the matching eigenvectors.
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let se = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..se.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let vals = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let vecs = DMatrix::from_columns(
        &order
            .iter()
            .map(|&i| se.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    (vals, vecs)
}

pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let se = m.clone().symmetric_eigen();
    let mut vals: Vec<f64> = se.eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Hermitian matrix held in diagonalized form, for exact unitary evolution
/// exp(-iHt) at arbitrary times.
#[derive(Debug, Clone)]
pub struct HamiltonianEigen {
    vals: Vec<f64>,
    vecs: DMatrix<Complex64>,
}

impl HamiltonianEigen {
    pub fn new(h: &DMatrix<Complex64>) -> Result<Self> {
        if h.nrows() != h.ncols() {
            return Err(Error::LengthMismatch {
                what: "hamiltonian columns",
                expected: h.nrows(),
                got: h.ncols(),
            });
        }
        let dev = hermiticity_deviation(h);
        if dev > 1e-8 {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let (vals, vecs) = hermitian_eigen(h);
        Ok(HamiltonianEigen { vals, vecs })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.vals
    }

    pub fn eigenvector(&self, k: usize) -> DVector<Complex64> {
        self.vecs.column(k).into_owned()
    }

    /// U(t) = exp(-iHt).
    pub fn unitary(&self, t: f64) -> DMatrix<Complex64> {
        let phases = DVector::from_iterator(
            self.vals.len(),
            self.vals.iter().map(|&e| (-Complex64::i() * e * t).exp()),
        );
        let mut scaled = self.vecs.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= phases[j];
        }
        scaled * self.vecs.adjoint()
    }

    pub fn evolve_ket(&self, psi: &DVector<Complex64>, t: f64) -> DVector<Complex64> {
        let mut coeff = self.vecs.adjoint() * psi;
        for (j, c) in coeff.iter_mut().enumerate() {
            *c *= (-Complex64::i() * self.vals[j] * t).exp();
        }
        &self.vecs * coeff
    }

    /// rho(t) = U rho U^dagger.
    pub fn conjugate(&self, rho: &DMatrix<Complex64>, t: f64) -> DMatrix<Complex64> {
        let u = self.unitary(t);
        &u * rho * u.adjoint()
    }
}

/// |k> in an n-dimensional node basis.
pub fn basis_ket(n: usize, k: usize) -> DVector<Complex64> {
    let mut v = DVector::zeros(n);
    v[k] = Complex64::new(1.0, 0.0);
    v
}

/// Uniform superposition over all n nodes.
pub fn uniform_ket(n: usize) -> DVector<Complex64> {
    DVector::from_element(n, Complex64::new(1.0 / (n as f64).sqrt(), 0.0))
}

/// Rank-one projector |psi><psi|.
pub fn projector(psi: &DVector<Complex64>) -> DMatrix<Complex64> {
    psi * psi.adjoint()
}

/// Haar-ish random pure state: normalized vector of complex Gaussians.
pub fn random_pure_state<R: Rng>(n: usize, rng: &mut R) -> DVector<Complex64> {
    let mut v = DVector::from_fn(n, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let norm = v.norm();
    v /= Complex64::new(norm, 0.0);
    v
}

/// Random full-rank density matrix G G^dagger / Tr.
pub fn random_density<R: Rng>(n: usize, rng: &mut R) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let rho = &g * g.adjoint();
    let tr: Complex64 = rho.trace();
    rho / tr
}
