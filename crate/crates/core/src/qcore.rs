//! Dense complex matrices and the quantum objects built from them.
//!
//! Link states act on `alice ⊗ bob`, with all of Alice's qubits preceding
//! all of Bob's. A basis index on a link is `a * bob_dim + b`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const INVOLUTION_TOL: f64 = 1e-10;
pub const PSD_FLOOR: f64 = -1e-10;
pub const TRACE_TOL: f64 = 1e-12;

/// Largest number of Bell pairs per link (link dimension 4^6).
pub const MAX_COPIES: usize = 6;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Kronecker product of a list, left to right. Empty list gives the 1x1 identity.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> ComplexMatrix {
    factors
        .into_iter()
        .fold(identity(1), |acc, f| acc.kronecker(f))
}

/// Largest entry modulus.
pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn anticommutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b + b * a
}

pub fn hermitian_defect(m: &ComplexMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn trace(m: &ComplexMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and the
/// matching unitary whose columns are eigenvectors.
pub fn hermitian_eigen(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let vectors =
        ComplexMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Closest Hermitian involution to `h`: eigenvalues mapped to their sign.
/// Eigenvalues within `zero_tol` of zero map to +1; the count of such ties
/// is returned alongside.
pub fn hermitian_sign(h: &ComplexMatrix, zero_tol: f64) -> (ComplexMatrix, usize) {
    let (values, vectors) = hermitian_eigen(h);
    let mut ties = 0;
    let signs: Vec<Complex64> = values
        .iter()
        .map(|&v| {
            if v.abs() <= zero_tol {
                ties += 1;
                ONE
            } else if v > 0.0 {
                ONE
            } else {
                -ONE
            }
        })
        .collect();
    let d = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(signs));
    let s = &vectors * d * vectors.adjoint();
    (hermitian_part(&s), ties)
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm_hermitian(h: &ComplexMatrix) -> f64 {
    hermitian_eigen(h).0.iter().map(|v| v.abs()).sum()
}

/// Haar-random unitary from the QR decomposition of a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_fn(dim, |j, _| {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            d / d.norm()
        } else {
            ONE
        }
    }));
    q * phases
}

/// Random Hermitian involution `U diag(±1) U†` with Haar `U` and independent
/// fair signs.
pub fn random_involution<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let u = random_unitary(dim, rng);
    let d = nalgebra::DVector::from_fn(dim, |_, _| if rng.random::<bool>() { ONE } else { -ONE });
    hermitian_part(&(&u * ComplexMatrix::from_diagonal(&d) * u.adjoint()))
}

/// `exp(i·scale·H)` for a random Hermitian `H` of unit operator norm.
pub fn near_identity_unitary<R: Rng + ?Sized>(
    dim: usize,
    scale: f64,
    rng: &mut R,
) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let (values, vectors) = hermitian_eigen(&g);
    let norm = values
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max)
        .max(1e-300);
    let phases = nalgebra::DVector::from_iterator(
        dim,
        values
            .iter()
            .map(|v| Complex64::from_polar(1.0, scale * v / norm)),
    );
    &vectors * ComplexMatrix::from_diagonal(&phases) * vectors.adjoint()
}

/// Random involution with a balanced spectrum (traceless for even `dim`).
pub fn random_traceless_involution<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let u = random_unitary(dim, rng);
    let d = nalgebra::DVector::from_fn(dim, |j, _| if j < dim / 2 { -ONE } else { ONE });
    hermitian_part(&(&u * ComplexMatrix::from_diagonal(&d) * u.adjoint()))
}

// ---------------------------------------------------------------------------
// Observables
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Label {
    pub party: usize,
    pub setting: usize,
}

/// A Hermitian involution: a binary-outcome measurement with outcomes ±1.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    matrix: ComplexMatrix,
    pub label: Option<Label>,
}

impl Observable {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::NotObservable(format!(
                "matrix is {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NotObservable("non-finite entry".into()));
        }
        let herm = hermitian_defect(&matrix);
        if herm > HERMITIAN_TOL {
            return Err(Error::NotObservable(format!(
                "hermiticity defect {herm:.3e}"
            )));
        }
        let dim = matrix.nrows();
        let inv = max_abs(&(&matrix * &matrix - identity(dim)));
        if inv > INVOLUTION_TOL {
            return Err(Error::NotObservable(format!(
                "square differs from identity by {inv:.3e}"
            )));
        }
        Ok(Self {
            matrix,
            label: None,
        })
    }

    pub fn with_label(mut self, party: usize, setting: usize) -> Self {
        self.label = Some(Label { party, setting });
        self
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// `U O U†`.
    pub fn conjugate(&self, u: &ComplexMatrix) -> Result<Self> {
        let m = hermitian_part(&(u * &self.matrix * u.adjoint()));
        Ok(Self {
            label: self.label,
            ..Self::new(m)?
        })
    }
}

/// `m` pairwise anticommuting Hermitian involutions on `2^{floor(m/2)}`
/// dimensions (Jordan-Wigner): for each qubit `j`, `Z^{⊗j} ⊗ X ⊗ I…` and
/// `Z^{⊗j} ⊗ Y ⊗ I…`, followed by `Z^{⊗l}` when `m` is odd.
pub fn anticommuting_set(m: usize) -> Result<Vec<Observable>> {
    if m < 2 {
        return Err(Error::InvalidScenario(format!(
            "need at least 2 settings per party, got m={m}"
        )));
    }
    let qubits = m / 2;
    if qubits > MAX_COPIES {
        return Err(Error::Capacity(format!(
            "m={m} needs {qubits} qubits per party (limit {MAX_COPIES})"
        )));
    }
    let (z, i2) = (pauli_z(), identity(2));
    let string = |j: usize, p: &ComplexMatrix| -> ComplexMatrix {
        let mut factors: Vec<&ComplexMatrix> = vec![&z; j];
        factors.push(p);
        factors.extend(std::iter::repeat_n(&i2, qubits - j - 1));
        kron_all(factors)
    };
    let mut ops = Vec::with_capacity(m);
    for j in 0..qubits {
        ops.push(string(j, &pauli_x()));
        ops.push(string(j, &pauli_y()));
    }
    if m % 2 == 1 {
        ops.push(kron_all(std::iter::repeat_n(&z, qubits)));
    }
    ops.into_iter()
        .enumerate()
        .map(|(x, mat)| Observable::new(mat).map(|o| o.with_label(0, x + 1)))
        .collect()
}

/// Computational-basis transpose, used to move an operator across `|Φ+⟩`:
/// `(A ⊗ I)|Φ+⟩ = (I ⊗ Aᵀ)|Φ+⟩`.
pub fn transpose_on_bob(obs: &Observable) -> Observable {
    Observable {
        matrix: obs.matrix.transpose(),
        label: obs.label,
    }
}

// ---------------------------------------------------------------------------
// Link states
// ---------------------------------------------------------------------------

/// Density operator distributed by one source.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkState {
    matrix: ComplexMatrix,
    alice_dim: usize,
    bob_dim: usize,
    copies: usize,
    visibility: f64,
}

impl LinkState {
    /// Validates trace, Hermiticity and positivity.
    pub fn new(matrix: ComplexMatrix, alice_dim: usize, bob_dim: usize) -> Result<Self> {
        let dim = alice_dim * bob_dim;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::Dimension(format!(
                "state is {}x{}, expected {dim}x{dim}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let tr = trace(&matrix);
        if (tr - ONE).norm() > TRACE_TOL * dim as f64 {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        if hermitian_defect(&matrix) > HERMITIAN_TOL {
            return Err(Error::InvalidState("not Hermitian".into()));
        }
        let min_eig = hermitian_eigen(&matrix).0[0];
        if min_eig < PSD_FLOOR {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(Self {
            matrix,
            alice_dim,
            bob_dim,
            copies: 0,
            visibility: f64::NAN,
        })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn alice_dim(&self) -> usize {
        self.alice_dim
    }

    pub fn bob_dim(&self) -> usize {
        self.bob_dim
    }

    /// Number of two-qubit pairs; 0 for a generic state.
    pub fn copies(&self) -> usize {
        self.copies
    }

    /// Per-copy visibility; NaN for a generic state.
    pub fn visibility(&self) -> f64 {
        self.visibility
    }

    /// True when the state is pure up to the PSD tolerance.
    pub fn is_pure(&self) -> bool {
        let rho2 = trace(&(&self.matrix * &self.matrix)).re;
        (rho2 - 1.0).abs() < 1e-9
    }

    /// `ρ ↦ (U ⊗ I) ρ (U ⊗ I)†`.
    pub fn conjugate_alice(&self, u: &ComplexMatrix) -> Result<Self> {
        if u.nrows() != self.alice_dim {
            return Err(Error::Dimension(format!(
                "unitary has dimension {}, Alice has {}",
                u.nrows(),
                self.alice_dim
            )));
        }
        let full = kron(u, &identity(self.bob_dim));
        let m = hermitian_part(&(&full * &self.matrix * full.adjoint()));
        Ok(Self {
            matrix: m,
            ..self.clone()
        })
    }

    /// `tr[ρ (A ⊗ B)]` without forming the Kronecker product.
    pub fn expectation(
        &self,
        alice_op: &ComplexMatrix,
        bob_op: &ComplexMatrix,
    ) -> Result<Complex64> {
        self.check_ops(alice_op, bob_op)?;
        let (da, db) = (self.alice_dim, self.bob_dim);
        let mut acc = ZERO;
        for a in 0..da {
            for b in 0..db {
                let row = a * db + b;
                for a2 in 0..da {
                    let av = alice_op[(a2, a)];
                    if av == ZERO {
                        continue;
                    }
                    for b2 in 0..db {
                        let rv = self.matrix[(row, a2 * db + b2)];
                        if rv != ZERO {
                            acc += rv * av * bob_op[(b2, b)];
                        }
                    }
                }
            }
        }
        Ok(acc)
    }

    /// Effective operator on Bob: `tr_A[(A ⊗ I) ρ]`, so that
    /// `tr[ρ (A ⊗ B)] = tr[E B]`.
    pub fn reduce_to_bob(&self, alice_op: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_ops(alice_op, &identity(self.bob_dim))?;
        let (da, db) = (self.alice_dim, self.bob_dim);
        let mut e = ComplexMatrix::zeros(db, db);
        for b in 0..db {
            for b2 in 0..db {
                let mut acc = ZERO;
                for a in 0..da {
                    for a2 in 0..da {
                        acc += alice_op[(a, a2)] * self.matrix[(a2 * db + b, a * db + b2)];
                    }
                }
                e[(b, b2)] = acc;
            }
        }
        Ok(e)
    }

    /// Effective operator on Alice: `tr_B[(I ⊗ B) ρ]`, so that
    /// `tr[ρ (A ⊗ B)] = tr[F A]`.
    pub fn reduce_to_alice(&self, bob_op: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_ops(&identity(self.alice_dim), bob_op)?;
        let (da, db) = (self.alice_dim, self.bob_dim);
        let mut f = ComplexMatrix::zeros(da, da);
        for a in 0..da {
            for a2 in 0..da {
                let mut acc = ZERO;
                for b in 0..db {
                    for b2 in 0..db {
                        acc += bob_op[(b, b2)] * self.matrix[(a * db + b2, a2 * db + b)];
                    }
                }
                f[(a, a2)] = acc;
            }
        }
        Ok(f)
    }

    /// Reduced state of Alice.
    pub fn alice_marginal(&self) -> ComplexMatrix {
        self.reduce_to_alice(&identity(self.bob_dim))
            .expect("identity has matching dimension")
    }

    /// Reduced state of Bob.
    pub fn bob_marginal(&self) -> ComplexMatrix {
        self.reduce_to_bob(&identity(self.alice_dim))
            .expect("identity has matching dimension")
    }

    fn check_ops(&self, a: &ComplexMatrix, b: &ComplexMatrix) -> Result<()> {
        if a.nrows() != self.alice_dim || a.ncols() != self.alice_dim {
            return Err(Error::Dimension(format!(
                "Alice operator is {}x{}, link has dimension {}",
                a.nrows(),
                a.ncols(),
                self.alice_dim
            )));
        }
        if b.nrows() != self.bob_dim || b.ncols() != self.bob_dim {
            return Err(Error::Dimension(format!(
                "Bob operator is {}x{}, link has dimension {}",
                b.nrows(),
                b.ncols(),
                self.bob_dim
            )));
        }
        Ok(())
    }
}

fn check_copies(c: usize) -> Result<()> {
    if c == 0 {
        return Err(Error::InvalidScenario("need at least one copy".into()));
    }
    if c > MAX_COPIES {
        return Err(Error::Capacity(format!(
            "{c} copies per link (limit {MAX_COPIES})"
        )));
    }
    Ok(())
}

/// `|Φ+⟩^{⊗c}` with Alice's qubits first, i.e. `2^{-c/2} Σ_j |j⟩|j⟩`.
pub fn bell_copies(c: usize) -> Result<LinkState> {
    check_copies(c)?;
    let d = 1usize << c;
    let amp = 1.0 / d as f64;
    let mut rho = ComplexMatrix::zeros(d * d, d * d);
    for j in 0..d {
        for k in 0..d {
            rho[(j * d + j, k * d + k)] = Complex64::new(amp, 0.0);
        }
    }
    Ok(LinkState {
        matrix: rho,
        alice_dim: d,
        bob_dim: d,
        copies: c,
        visibility: 1.0,
    })
}

/// `c` copies of `v |Φ+⟩⟨Φ+| + (1-v) I/4`, reordered so Alice's qubits come first.
pub fn werner_copies(c: usize, v: f64) -> Result<LinkState> {
    check_copies(c)?;
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Domain(format!("visibility {v} outside [0, 1]")));
    }
    let single = {
        let bell = bell_copies(1)?.matrix;
        bell.scale(v) + identity(4).scale((1.0 - v) / 4.0)
    };
    let product = kron_all(std::iter::repeat_n(&single, c));
    // Product order is A1 B1 A2 B2 …; move to A1 … Ac B1 … Bc.
    let order: Vec<usize> = (0..c)
        .map(|j| 2 * j)
        .chain((0..c).map(|j| 2 * j + 1))
        .collect();
    let matrix = permute_subsystems(&product, &vec![2; 2 * c], &order);
    let d = 1usize << c;
    Ok(LinkState {
        matrix,
        alice_dim: d,
        bob_dim: d,
        copies: c,
        visibility: v,
    })
}

/// Reorders the tensor factors of an operator on `⊗_s dims[s]`. Output
/// factor `t` is input factor `order[t]`.
pub fn permute_subsystems(op: &ComplexMatrix, dims: &[usize], order: &[usize]) -> ComplexMatrix {
    assert_eq!(dims.len(), order.len());
    let total: usize = dims.iter().product();
    assert_eq!(op.nrows(), total);
    let new_dims: Vec<usize> = order.iter().map(|&s| dims[s]).collect();
    // Map each output index to the input index with the same digits.
    let map: Vec<usize> = (0..total)
        .map(|idx| {
            let mut digits = vec![0usize; dims.len()];
            let mut rest = idx;
            for t in (0..new_dims.len()).rev() {
                digits[order[t]] = rest % new_dims[t];
                rest /= new_dims[t];
            }
            digits
                .iter()
                .zip(dims)
                .fold(0usize, |acc, (&dgt, &d)| acc * d + dgt)
        })
        .collect();
    ComplexMatrix::from_fn(total, total, |r, c| op[(map[r], map[c])])
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// Row-major `(re, im)` pairs with a dimension header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub entries: Vec<(f64, f64)>,
}

impl From<&ComplexMatrix> for MatrixJson {
    fn from(m: &ComplexMatrix) -> Self {
        let dim = m.nrows();
        let entries = (0..dim)
            .flat_map(|r| (0..dim).map(move |c| (r, c)))
            .map(|(r, c)| (m[(r, c)].re, m[(r, c)].im))
            .collect();
        Self { dim, entries }
    }
}

impl TryFrom<&MatrixJson> for ComplexMatrix {
    type Error = Error;

    fn try_from(j: &MatrixJson) -> Result<Self> {
        if j.entries.len() != j.dim * j.dim {
            return Err(Error::Dimension(format!(
                "{} entries for dimension {}",
                j.entries.len(),
                j.dim
            )));
        }
        Ok(ComplexMatrix::from_fn(j.dim, j.dim, |r, c| {
            let (re, im) = j.entries[r * j.dim + c];
            Complex64::new(re, im)
        }))
    }
}
