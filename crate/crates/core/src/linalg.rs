//! Small dense linear-algebra helpers shared by the simulators.

use nalgebra::DMatrix;
use rand_distr::StandardNormal;

use crate::C64;

pub type CMat = DMatrix<C64>;

/// Eigenvalues below this are treated as zero in entropy sums.
pub const EIG_FLOOR: f64 = 1e-12;

pub fn complex_gaussian<R: rand::Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix<R: rand::Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// QR of a Gaussian matrix with the phases of `diag(R)` pushed into `Q`,
/// which makes the columns exactly Haar distributed.
fn haar_columns<R: rand::Rng + ?Sized>(d: usize, k: usize, rng: &mut R) -> CMat {
    let g = gaussian_matrix(d, k, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..k {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Haar-random `d × d` unitary.
pub fn haar_unitary<R: rand::Rng + ?Sized>(d: usize, rng: &mut R) -> CMat {
    haar_columns(d, d, rng)
}

/// The first `k` rows of a Haar-random `d × d` unitary.
pub fn haar_rows<R: rand::Rng + ?Sized>(k: usize, d: usize, rng: &mut R) -> CMat {
    haar_columns(d, k, rng).transpose()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    if m.nrows() == 1 {
        return vec![m[(0, 0)].re];
    }
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Trace norm of a Hermitian matrix.
pub fn trace_norm_hermitian(m: &CMat) -> f64 {
    hermitian_eigenvalues(m).iter().map(|x| x.abs()).sum()
}

/// Von Neumann entropy of a spectrum, in nats.
pub fn vn_entropy(spectrum: &[f64]) -> f64 {
    spectrum.iter().filter(|&&p| p > EIG_FLOOR).map(|&p| -p * p.ln()).sum()
}

/// Rényi-2 entropy of a spectrum, in nats.
pub fn renyi2_entropy(spectrum: &[f64]) -> f64 {
    let purity: f64 = spectrum.iter().filter(|&&p| p > EIG_FLOOR).map(|&p| p * p).sum();
    -purity.ln()
}

/// Binary entropy in nats with `h2(0) = h2(1) = 0`.
pub fn h2(x: f64) -> f64 {
    let term = |p: f64| if p <= 0.0 { 0.0 } else { -p * p.ln() };
    term(x) + term(1.0 - x)
}

/// Hermitian part, to scrub rounding asymmetry before an eigensolve.
pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}
