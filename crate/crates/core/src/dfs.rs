//! Decoherence-free subspaces and subsystems.
//!
//! A state annihilated by every system operator of the interaction is
//! untouched by the environment. The subspace route goes through the Casimir
//! `C = Σ X_μ²`, whose kernel is exactly the common kernel of the `X_μ`. The
//! subsystem route finds the block form `S_α = ⊕_J I_{n_J} ⊗ S_J` from the
//! algebra of operators commuting with every `S_α`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::operator::{
    check_same_dim, frobenius, max_abs, spectral_decompose, CMatrix, HermitianOperator, C64, I,
};
use crate::qubit::{pauli_on_site, Axis};
use crate::{Error, Result};

/// Tolerance on the block-form verification.
pub const BLOCK_TOL: f64 = 1e-8;
/// Relative eigenvalue gap below which commutant eigenvalues are merged.
pub const CLUSTER_GAP: f64 = 1e-8;
/// Attempts with fresh random commutant elements before giving up.
pub const REFINEMENT_ROUNDS: usize = 5;

/// A nonempty list of Hermitian operators on a common space.
#[derive(Clone, Debug)]
pub struct GeneratorSet {
    generators: Vec<HermitianOperator>,
}

impl GeneratorSet {
    pub fn new(generators: Vec<HermitianOperator>) -> Result<Self> {
        let first = generators
            .first()
            .ok_or_else(|| Error::InvalidArgument("generator list is empty".into()))?;
        for g in &generators {
            check_same_dim(first.dim(), g.dim(), "generator set")?;
        }
        Ok(Self { generators })
    }

    pub fn dim(&self) -> usize {
        self.generators[0].dim()
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn generators(&self) -> &[HermitianOperator] {
        &self.generators
    }
}

/// `C = Σ_μ X_μ²`.
pub fn casimir(gens: &GeneratorSet) -> HermitianOperator {
    let mut acc = CMatrix::zeros(gens.dim(), gens.dim());
    for g in gens.generators() {
        acc += g.matrix() * g.matrix();
    }
    HermitianOperator::from_hermitian_parts(acc)
}

/// Orthonormal basis of the common kernel of a generator set.
#[derive(Clone, Debug)]
pub struct DfsBasis {
    vectors: CMatrix,
    tolerance: f64,
    max_residual: f64,
}

impl DfsBasis {
    /// Columns span the subspace.
    pub fn vectors(&self) -> &CMatrix {
        &self.vectors
    }

    pub fn dimension(&self) -> usize {
        self.vectors.ncols()
    }

    /// Casimir eigenvalue cut used to select the subspace.
    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Largest `‖X_μ v‖ / ‖X_μ‖` over generators and basis vectors.
    pub fn max_residual(&self) -> f64 {
        self.max_residual
    }

    /// Largest `|H_int (v ⊗ r)|` for `H_int = Σ X_μ ⊗ R_μ`, over basis vectors
    /// `v` and environment basis states `r`. Zero up to rounding for any
    /// choice of environment operators.
    pub fn interaction_residual(&self, gens: &GeneratorSet, env: &[HermitianOperator]) -> Result<f64> {
        if env.len() != gens.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} generators but {} environment operators",
                gens.len(),
                env.len()
            )));
        }
        let env_dim = env.first().map_or(1, |r| r.dim());
        for r in env {
            check_same_dim(env_dim, r.dim(), "environment operators")?;
        }
        let mut h = CMatrix::zeros(gens.dim() * env_dim, gens.dim() * env_dim);
        for (x, r) in gens.generators().iter().zip(env) {
            h += x.matrix().kronecker(r.matrix());
        }
        let states = self.vectors.kronecker(&CMatrix::identity(env_dim, env_dim));
        Ok(max_abs(&(h * states)))
    }
}

/// Kernel of the Casimir with eigenvalue cut `tol`, by default `1e-9` times
/// its largest eigenvalue (or `1e-9` when the Casimir vanishes).
pub fn dfs_nullspace(gens: &GeneratorSet, tol: Option<f64>) -> Result<DfsBasis> {
    let c = casimir(gens);
    let decomp = spectral_decompose(&c);
    let radius = decomp.eigenvalues().iter().fold(0.0_f64, |a, e| a.max(e.abs()));
    let tol = match tol {
        Some(t) if t > 0.0 && t.is_finite() => t,
        Some(t) => return Err(Error::InvalidArgument(format!("tolerance must be positive, got {t}"))),
        None => 1e-9 * if radius > 0.0 { radius } else { 1.0 },
    };
    let keep: Vec<usize> = (0..c.dim()).filter(|&k| decomp.eigenvalues()[k] < tol).collect();
    let vectors = decomp.eigenvectors().select_columns(&keep);
    let mut max_residual = 0.0_f64;
    for g in gens.generators() {
        let norm = g.operator_norm();
        if norm == 0.0 || vectors.ncols() == 0 {
            continue;
        }
        let image = g.matrix() * &vectors;
        for col in image.column_iter() {
            let r = col.norm() / norm;
            if r >= tol.sqrt() {
                return Err(Error::Numerical(format!(
                    "Casimir kernel vector not annihilated by a generator: residual {r:.3e}"
                )));
            }
            max_residual = max_residual.max(r);
        }
    }
    Ok(DfsBasis { vectors, tolerance: tol, max_residual })
}

/// Total spin `J_k = ½ Σ_j σ_k^{(j)}` of `n_qubits` qubits, site 1 being the
/// leftmost tensor factor.
pub fn collective_generators(n_qubits: usize) -> Result<GeneratorSet> {
    if n_qubits < 2 {
        return Err(Error::InvalidArgument(format!(
            "collective decoherence needs at least 2 qubits, got {n_qubits}"
        )));
    }
    let dim = 1usize << n_qubits.min(usize::BITS as usize - 1);
    let mut gens = Vec::with_capacity(3);
    for axis in Axis::ALL {
        let mut acc = CMatrix::zeros(dim, dim);
        for site in 1..=n_qubits {
            acc += pauli_on_site(axis, site, n_qubits)?.matrix();
        }
        gens.push(HermitianOperator::from_hermitian_parts(acc * C64::new(0.5, 0.0)));
    }
    let residual = su2_residual(&gens);
    if residual > 1e-12 {
        return Err(Error::Numerical(format!("collective generators violate SU(2): {residual:.3e}")));
    }
    GeneratorSet::new(gens)
}

/// Largest entry of `[J_a, J_b] − i J_c` over the cyclic triples.
pub fn su2_residual(j: &[HermitianOperator]) -> f64 {
    if j.len() != 3 {
        return f64::INFINITY;
    }
    let mut worst = 0.0_f64;
    for (a, b, c) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
        let (ja, jb, jc) = (j[a].matrix(), j[b].matrix(), j[c].matrix());
        let r = ja * jb - jb * ja - jc * I;
        worst = worst.max(max_abs(&r));
    }
    worst
}

/// `(2N)! / ((N+1)! N!)`, the number of independent singlets of `2N` spins ½.
pub fn catalan_dimension(n: u32) -> Result<u128> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    // Running binomial C(2N, N), exact at every step.
    let mut binom: u128 = 1;
    for k in 1..=u128::from(n) {
        binom = binom
            .checked_mul(u128::from(n) + k)
            .ok_or_else(|| Error::InvalidArgument(format!("Catalan number overflows for N = {n}")))?
            / k;
    }
    Ok(binom / (u128::from(n) + 1))
}

// Orthonormal coordinates on Hermitian matrices for the Hilbert–Schmidt
// product: diagonal entries, then √2 Re and √2 Im of each upper entry.
fn to_coords(m: &CMatrix) -> DVector<f64> {
    let d = m.nrows();
    let mut v = DVector::zeros(d * d);
    let mut idx = d;
    for i in 0..d {
        v[i] = m[(i, i)].re;
        for j in (i + 1)..d {
            v[idx] = std::f64::consts::SQRT_2 * m[(i, j)].re;
            v[idx + 1] = std::f64::consts::SQRT_2 * m[(i, j)].im;
            idx += 2;
        }
    }
    v
}

fn from_coords(v: &[f64], d: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut idx = d;
    for i in 0..d {
        m[(i, i)] = C64::new(v[i], 0.0);
        for j in (i + 1)..d {
            m[(i, j)] = C64::new(s * v[idx], s * v[idx + 1]);
            m[(j, i)] = m[(i, j)].conj();
            idx += 2;
        }
    }
    m
}

/// Hilbert–Schmidt orthonormal Hermitian basis of `{X : [X, S_α] = 0 ∀α}`.
/// The first element is `I/√d`.
pub fn commutant_basis(s_ops: &GeneratorSet) -> Vec<HermitianOperator> {
    let d = s_ops.dim();
    let n = d * d;
    // Gram matrix of the map X ↦ (i[S_α, X])_α in orthonormal coordinates.
    let mut gram = DMatrix::<f64>::zeros(n, n);
    let mut unit = vec![0.0; n];
    let mut columns: Vec<DMatrix<f64>> = s_ops.generators().iter().map(|_| DMatrix::zeros(n, n)).collect();
    for c in 0..n {
        unit[c] = 1.0;
        let x = from_coords(&unit, d);
        unit[c] = 0.0;
        for (s, k) in s_ops.generators().iter().zip(columns.iter_mut()) {
            let comm = (s.matrix() * &x - &x * s.matrix()) * I;
            k.set_column(c, &to_coords(&comm));
        }
    }
    for k in &columns {
        gram += k.transpose() * k;
    }
    let eig = SymmetricEigen::new(gram);
    let radius = eig.eigenvalues.iter().fold(0.0_f64, |a, e| a.max(e.abs()));
    let cut = 1e-10 * radius.max(1.0);
    let mut kernel: Vec<DVector<f64>> = (0..n)
        .filter(|&k| eig.eigenvalues[k] < cut)
        .map(|k| eig.eigenvectors.column(k).into_owned())
        .collect();

    // Put the identity first, then Gram–Schmidt the rest against it.
    let identity = to_coords(&CMatrix::identity(d, d)) / (d as f64).sqrt();
    kernel.sort_by(|a, b| b.dot(&identity).abs().total_cmp(&a.dot(&identity).abs()));
    let mut basis: Vec<DVector<f64>> = vec![identity];
    for mut v in kernel {
        for b in &basis {
            let p = v.dot(b);
            v -= b * p;
        }
        let norm = v.norm();
        if norm > 1e-6 && basis.len() < n {
            basis.push(v / norm);
        }
        if basis.len() == n {
            break;
        }
    }
    basis
        .into_iter()
        .map(|v| HermitianOperator::from_hermitian_parts(from_coords(v.as_slice(), d)))
        .collect()
}

/// One block `I_{n_J} ⊗ S_J` of the decomposition.
#[derive(Clone, Debug)]
pub struct SubsystemBlock {
    /// `n_J`: copies of the irreducible factor; the protected subsystem size.
    pub multiplicity: usize,
    /// `d_J`: size of the factor the interaction acts on.
    pub dimension: usize,
    /// `n_J·d_J` orthonormal columns, copy index slowest.
    pub isometry: CMatrix,
    /// `S_J` for each input operator.
    pub factors: Vec<CMatrix>,
}

impl SubsystemBlock {
    /// Interaction acts trivially on a factor of this block: either several
    /// copies share the same `S_J`, or `S_J` is a scalar.
    pub fn is_decoherence_free(&self) -> bool {
        self.multiplicity > 1 || self.dimension == 1
    }
}

#[derive(Clone, Debug)]
pub struct SubsystemDecomposition {
    blocks: Vec<SubsystemBlock>,
    residual: f64,
    rounds: usize,
}

impl SubsystemDecomposition {
    pub fn blocks(&self) -> &[SubsystemBlock] {
        &self.blocks
    }

    /// Largest reconstruction error of the input operators.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Random draws used, 1 when the first one succeeded.
    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.multiplicity * b.dimension).sum()
    }

    /// Blocks with `n_J > 1`.
    pub fn decoherence_free_subsystems(&self) -> impl Iterator<Item = &SubsystemBlock> {
        self.blocks.iter().filter(|b| b.multiplicity > 1)
    }

    /// `Σ_J V_J (I_{n_J} ⊗ S_J) V_J†` for operator `alpha`.
    pub fn reconstruct(&self, alpha: usize) -> CMatrix {
        let d = self.total_dim();
        let mut acc = CMatrix::zeros(d, d);
        for b in &self.blocks {
            let block = CMatrix::identity(b.multiplicity, b.multiplicity).kronecker(&b.factors[alpha]);
            acc += &b.isometry * block * b.isometry.adjoint();
        }
        acc
    }
}

fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

fn hs_dot(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

fn double_commutator(s_ops: &GeneratorSet, x: &CMatrix) -> CMatrix {
    let mut acc = CMatrix::zeros(x.nrows(), x.ncols());
    for s in s_ops.generators() {
        acc += commutator(s.matrix(), &commutator(s.matrix(), x));
    }
    acc
}

/// Orthogonal projection onto the commutant. `L(X) = Σ [S,[S,X]]` is positive
/// on Hermitian matrices with the commutant as kernel, so `X − L⁺L X` is the
/// projection; conjugate gradients on `L Y = L X` stay in the range of `L`.
/// A few passes clean up what a single solve leaves in weak directions.
fn project_to_commutant(s_ops: &GeneratorSet, x0: &CMatrix) -> CMatrix {
    let scale = s_ops
        .generators()
        .iter()
        .map(|s| frobenius(s.matrix()))
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut x = x0.clone();
    for _ in 0..6 {
        let b = double_commutator(s_ops, &x);
        let b_norm = frobenius(&b);
        if b_norm <= 1e-15 * scale * scale * frobenius(&x) {
            break;
        }
        let mut y = CMatrix::zeros(x.nrows(), x.ncols());
        let mut r = b.clone();
        let mut p = r.clone();
        let mut rr = hs_dot(&r, &r);
        for _ in 0..(4 * x.nrows() * x.nrows() + 20) {
            let lp = double_commutator(s_ops, &p);
            let curvature = hs_dot(&p, &lp);
            if curvature <= 0.0 {
                break;
            }
            let step = rr / curvature;
            y += &p * C64::new(step, 0.0);
            r -= &lp * C64::new(step, 0.0);
            let rr_next = hs_dot(&r, &r);
            if rr_next.sqrt() <= 1e-14 * b_norm {
                break;
            }
            p = &r + &p * C64::new(rr_next / rr, 0.0);
            rr = rr_next;
        }
        x -= y;
        x = (&x + x.adjoint()) * C64::new(0.5, 0.0);
    }
    x
}

fn random_commutant_element(s_ops: &GeneratorSet, rng: &mut ChaCha8Rng) -> CMatrix {
    let x0 = HermitianOperator::random(s_ops.dim(), rng).into_matrix();
    project_to_commutant(s_ops, &x0)
}

/// Groups eigenvalues (ascending) into clusters separated by more than `gap`.
fn cluster(values: &[f64], gap: f64) -> Vec<Vec<usize>> {
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (k, &v) in values.iter().enumerate() {
        match clusters.last_mut() {
            Some(c) if v - values[*c.last().unwrap()] <= gap => c.push(k),
            _ => clusters.push(vec![k]),
        }
    }
    clusters
}

/// Block form of a set of system operators, from one or more seeded random
/// elements of their commutant.
pub fn subsystem_decomposition(s_ops: &GeneratorSet, seed: u64) -> Result<SubsystemDecomposition> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last_problem = String::new();
    for round in 1..=REFINEMENT_ROUNDS {
        let x = random_commutant_element(s_ops, &mut rng);
        let y = random_commutant_element(s_ops, &mut rng);
        match try_decompose(s_ops, &x, &y) {
            Ok((blocks, residual)) => {
                log::debug!("subsystem decomposition found in round {round}, residual {residual:.3e}");
                return Ok(SubsystemDecomposition { blocks, residual, rounds: round });
            }
            Err(problem) => {
                log::debug!("round {round} rejected: {problem}");
                last_problem = problem;
            }
        }
    }
    Err(Error::StructureNotFound(format!(
        "no consistent block structure after {REFINEMENT_ROUNDS} rounds: {last_problem}"
    )))
}

fn try_decompose(
    s_ops: &GeneratorSet,
    x: &CMatrix,
    y: &CMatrix,
) -> std::result::Result<(Vec<SubsystemBlock>, f64), String> {
    let d = s_ops.dim();
    let hx = HermitianOperator::from_hermitian_parts(x.clone());
    let decomp = spectral_decompose(&hx);
    let values = decomp.eigenvalues();
    let radius = values.iter().fold(0.0_f64, |a, e| a.max(e.abs()));
    let clusters = cluster(values, CLUSTER_GAP * radius.max(f64::MIN_POSITIVE));
    let spaces: Vec<CMatrix> = clusters.iter().map(|c| decomp.eigenvectors().select_columns(c)).collect();

    // Eigenspaces linked by Y belong to the same block.
    let y_scale = frobenius(y).max(f64::MIN_POSITIVE);
    let m = spaces.len();
    let mut parent: Vec<usize> = (0..m).collect();
    fn root(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for a in 0..m {
        for b in (a + 1)..m {
            let coupling = frobenius(&(spaces[a].adjoint() * y * &spaces[b]));
            if coupling > 1e-7 * y_scale {
                let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
                parent[ra] = rb;
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut group_of = vec![usize::MAX; m];
    for a in 0..m {
        let r = root(&mut parent, a);
        if group_of[r] == usize::MAX {
            group_of[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[group_of[r]].push(a);
    }

    let mut blocks = Vec::with_capacity(groups.len());
    for members in &groups {
        let dimension = spaces[members[0]].ncols();
        if members.iter().any(|&a| spaces[a].ncols() != dimension) {
            return Err("linked eigenspaces have different dimensions".into());
        }
        let base = &spaces[members[0]];
        let mut columns = vec![base.clone()];
        for &a in &members[1..] {
            // P_a Y P_1 is a multiple of an isometry from the first copy.
            let image = &spaces[a] * (spaces[a].adjoint() * y * base);
            let gram = image.adjoint() * &image;
            let s = gram[(0, 0)].re;
            if s <= 1e-12 * y_scale * y_scale {
                return Err("weak link between eigenspaces of one block".into());
            }
            let mapped = image / C64::new(s.sqrt(), 0.0);
            let defect = max_abs(&(mapped.adjoint() * &mapped - CMatrix::identity(dimension, dimension)));
            if defect > 1e-6 {
                return Err(format!("copy map is not an isometry ({defect:.2e})"));
            }
            columns.push(mapped);
        }
        let n = columns.len();
        let mut isometry = CMatrix::zeros(d, n * dimension);
        for (a, c) in columns.iter().enumerate() {
            isometry.view_mut((0, a * dimension), (d, dimension)).copy_from(c);
        }
        let mut factors = Vec::with_capacity(s_ops.len());
        for s in s_ops.generators() {
            let local = isometry.adjoint() * s.matrix() * &isometry;
            let mut factor = CMatrix::zeros(dimension, dimension);
            for a in 0..n {
                factor += local.view((a * dimension, a * dimension), (dimension, dimension));
            }
            factors.push(factor / C64::new(n as f64, 0.0));
        }
        blocks.push(SubsystemBlock { multiplicity: n, dimension, isometry, factors });
    }

    let decomposition = SubsystemDecomposition { blocks, residual: 0.0, rounds: 0 };
    let mut residual = 0.0_f64;
    for (alpha, s) in s_ops.generators().iter().enumerate() {
        let err = max_abs(&(decomposition.reconstruct(alpha) - s.matrix()));
        residual = residual.max(err / s.max_abs().max(1.0));
    }
    if residual > BLOCK_TOL {
        return Err(format!("block form reproduces the operators only to {residual:.2e}"));
    }
    Ok((decomposition.blocks, residual))
}
