//! States and channels: Bell states, depolarizing / classical noise,
//! Eve's Gram-constrained probe interaction, the four noise scenarios,
//! and the measured classical-classical-quantum states.

use num_complex::Complex64 as C;

use crate::error::{QkdError, Result};
use crate::linalg::{
    tensor_product, ComplexMatrix, DensityOperator, ProbabilityVector,
    entropy_of_spectrum, hermitian_eigenvalues, shannon_cond_entropy,
    pauli_x, pauli_y, pauli_z,
};

/// Highest admissible noise parameter (p is capped just below 1).
pub const P_MAX: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolId {
    Bb84,
    SixState,
}

impl ProtocolId {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProtocolId::Bb84 => "bb84",
            ProtocolId::SixState => "six-state",
        }
    }
}

impl std::str::FromStr for ProtocolId {
    type Err = QkdError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bb84" => Ok(ProtocolId::Bb84),
            "six-state" | "six" => Ok(ProtocolId::SixState),
            other => Err(QkdError::Domain(format!("unknown protocol '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// No noise beyond Eve's interaction.
    S0None,
    /// Depolarizing noise on Alice's qubit.
    S1AliceQuantum,
    /// Depolarizing noise on Bob's qubit before Eve's interaction.
    S2BobBeforeEve,
    /// Depolarizing noise on Bob's qubit after Eve's interaction.
    S3BobAfterEve,
    /// Classical noise on Alice's measured bit string.
    S4Classical,
}

impl Scenario {
    pub fn index(&self) -> u8 {
        match self {
            Scenario::S0None => 0,
            Scenario::S1AliceQuantum => 1,
            Scenario::S2BobBeforeEve => 2,
            Scenario::S3BobAfterEve => 3,
            Scenario::S4Classical => 4,
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = QkdError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "0" | "none" => Ok(Scenario::S0None),
            "1" | "alice" => Ok(Scenario::S1AliceQuantum),
            "2" | "bob-before" => Ok(Scenario::S2BobBeforeEve),
            "3" | "bob-after" => Ok(Scenario::S3BobAfterEve),
            "4" | "classical" => Ok(Scenario::S4Classical),
            other => Err(QkdError::Domain(format!("unknown scenario '{other}'"))),
        }
    }
}

/// Noise scenario plus its parameter p (p_a, p_b, p_nb or p_cl by scenario).
#[derive(Debug, Clone, Copy)]
pub struct NoiseConfig {
    scenario: Scenario,
    p: f64,
}

impl NoiseConfig {
    pub fn new(scenario: Scenario, p: f64) -> Result<Self> {
        if !(0.0..=P_MAX).contains(&p) {
            return Err(QkdError::Domain(format!("noise parameter {p} outside [0,1)")));
        }
        if scenario == Scenario::S0None && p != 0.0 {
            return Err(QkdError::Domain("scenario 0 requires p = 0".into()));
        }
        Ok(NoiseConfig { scenario, p })
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BellState {
    PsiPlus,
    PsiMinus,
    PhiPlus,
    PhiMinus,
}

pub const BELL_ORDER: [BellState; 4] = [
    BellState::PsiPlus,
    BellState::PsiMinus,
    BellState::PhiPlus,
    BellState::PhiMinus,
];

/// Bell vector in the computational basis |00>,|01>,|10>,|11>.
pub fn bell_vector(which: BellState) -> [C; 4] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = C::new(0.0, 0.0);
    let a = C::new(s, 0.0);
    match which {
        BellState::PsiPlus => [z, a, a, z],
        BellState::PsiMinus => [z, a, -a, z],
        BellState::PhiPlus => [a, z, z, a],
        BellState::PhiMinus => [a, z, z, -a],
    }
}

/// Rank-1 projector onto the named Bell vector, subsystems A, B.
pub fn bell_state(which: BellState) -> DensityOperator {
    let v = bell_vector(which);
    DensityOperator::new(ComplexMatrix::outer(&v), vec![2, 2], vec!['A', 'B'])
        .expect("Bell projector is a valid state")
}

/// Embed a single-qubit operator on the labelled subsystem of a product space.
fn embed_single(dims: &[usize], labels: &[char], target: char, op: &ComplexMatrix) -> Result<ComplexMatrix> {
    let idx = labels
        .iter()
        .position(|&l| l == target)
        .ok_or(QkdError::UnknownLabel(target))?;
    if dims[idx] != 2 {
        return Err(QkdError::Domain(format!(
            "target '{target}' has dimension {}, expected a qubit",
            dims[idx]
        )));
    }
    let mut full = ComplexMatrix::identity(1);
    for (i, &d) in dims.iter().enumerate() {
        let factor = if i == idx {
            op.clone()
        } else {
            ComplexMatrix::identity(d)
        };
        full = tensor_product(&full, &factor);
    }
    Ok(full)
}

/// Depolarizing channel on the target qubit: Kraus A1 = sqrt(1-3p/4) 1,
/// A2..A4 = sqrt(p/4) sigma_{x,y,z}.
pub fn depolarize(rho: &DensityOperator, target: char, p: f64) -> Result<DensityOperator> {
    if !(0.0..=1.0).contains(&p) {
        return Err(QkdError::Domain(format!("depolarizing p {p} outside [0,1]")));
    }
    if p == 0.0 {
        return Ok(rho.clone());
    }
    let mut out = rho.matrix().scale(C::new(1.0 - 0.75 * p, 0.0));
    for sigma in [pauli_x(), pauli_y(), pauli_z()] {
        let k = embed_single(rho.dims(), rho.labels(), target, &sigma)?;
        let term = k.matmul(rho.matrix())?.matmul(&k.adjoint())?;
        out = out.add(&term.scale(C::new(0.25 * p, 0.0)))?;
    }
    DensityOperator::new(out, rho.dims().to_vec(), rho.labels().to_vec())
}

/// QBER as a function of disturbance and depolarizing noise: Q = (1-p)D + p/2.
pub fn qber_from_params(d: f64, p: f64) -> Result<f64> {
    check_d_p(d, p)?;
    Ok((1.0 - p) * d + p / 2.0)
}

/// Inverse of `qber_from_params`. Returns (D, clamped); `clamped` is set when
/// Q < p/2 (observed error below the channel floor) and D was clamped to 0.
pub fn disturbance_from_qber(q: f64, p: f64) -> Result<(f64, bool)> {
    if !(0.0..=0.5).contains(&q) {
        return Err(QkdError::Domain(format!("QBER {q} outside [0,0.5]")));
    }
    if !(0.0..=P_MAX).contains(&p) {
        return Err(QkdError::Domain(format!("noise parameter {p} outside [0,1)")));
    }
    let d = (q - p / 2.0) / (1.0 - p);
    if d < 0.0 {
        Ok((0.0, true))
    } else {
        Ok((d.min(0.5), false))
    }
}

fn check_d_p(d: f64, p: f64) -> Result<()> {
    if !(0.0..=0.5).contains(&d) {
        return Err(QkdError::Domain(format!("disturbance {d} outside [0,0.5]")));
    }
    if !(0.0..=P_MAX).contains(&p) {
        return Err(QkdError::Domain(format!("noise parameter {p} outside [0,1)")));
    }
    Ok(())
}

/// Feasible lambda4 interval for BB84 at given (D, p): the values for which
/// both Gram off-diagonals have magnitude <= 1, intersected with [0, Q].
/// Returns None when empty. At D = 0 the interval collapses to {Q/2}.
pub fn bb84_lambda4_range(d: f64, p: f64) -> Result<Option<(f64, f64)>> {
    check_d_p(d, p)?;
    let q = qber_from_params(d, p)?;
    // |<B|D>| <= 1  <=>  |Q - 2 lam4| <= (1-p) D
    let bd_half_width = (1.0 - p) * d;
    let (mut lo, mut hi) = ((q - bd_half_width) / 2.0, (q + bd_half_width) / 2.0);
    // |<A|C>| <= 1  <=>  |1 - 3Q + 2 lam4| <= (1-p)(1-D)
    let ac_c = (1.0 - p) * (1.0 - d);
    lo = lo.max((3.0 * q - 1.0 - ac_c) / 2.0);
    hi = hi.min((3.0 * q - 1.0 + ac_c) / 2.0);
    lo = lo.max(0.0);
    hi = hi.min(q);
    if lo > hi + 1e-15 {
        Ok(None)
    } else {
        Ok(Some((lo, hi.max(lo))))
    }
}

/// Eve's attack: protocol, disturbance, free parameter and the probe Gram.
#[derive(Debug, Clone)]
pub struct AttackSpec {
    protocol: ProtocolId,
    d: f64,
    lambda4: Option<f64>,
    gram: ComplexMatrix,
}

impl AttackSpec {
    pub fn protocol(&self) -> ProtocolId {
        self.protocol
    }

    pub fn disturbance(&self) -> f64 {
        self.d
    }

    pub fn lambda4(&self) -> Option<f64> {
        self.lambda4
    }

    pub fn gram(&self) -> &ComplexMatrix {
        &self.gram
    }
}

/// Gram matrix of Eve's probes (order A, B, C, D) under the protocol's
/// symmetry constraints, with noise parameter p entering through
/// Q = (1-p)D + p/2.
pub fn eve_gram(protocol: ProtocolId, d: f64, p: f64, lambda4: Option<f64>) -> Result<AttackSpec> {
    check_d_p(d, p)?;
    let q = qber_from_params(d, p)?;
    let mut g = ComplexMatrix::identity(4);
    let lam4 = match protocol {
        ProtocolId::SixState => {
            if lambda4.is_some() {
                return Err(QkdError::Domain(
                    "six-state attack has no free lambda4 parameter".into(),
                ));
            }
            let ac = if d >= 1.0 {
                0.0
            } else {
                (1.0 - 2.0 * q) / ((1.0 - p) * (1.0 - d))
            };
            g.set(0, 2, C::new(ac, 0.0));
            g.set(2, 0, C::new(ac, 0.0));
            None
        }
        ProtocolId::Bb84 => {
            let lam4 = lambda4.ok_or_else(|| {
                QkdError::Domain("BB84 attack requires lambda4".into())
            })?;
            if !(0.0..=q + 1e-12).contains(&lam4) {
                return Err(QkdError::Domain(format!(
                    "lambda4 {lam4} outside [0, Q={q}]"
                )));
            }
            // <B|D> divides by D; probes B, D carry weight sqrt(D) = 0 at
            // D = 0, so their overlap is immaterial there.
            let bd = if d > 1e-12 {
                (q - 2.0 * lam4) / ((1.0 - p) * d)
            } else {
                0.0
            };
            let ac = (1.0 - 3.0 * q + 2.0 * lam4) / ((1.0 - p) * (1.0 - d));
            g.set(1, 3, C::new(bd, 0.0));
            g.set(3, 1, C::new(bd, 0.0));
            g.set(0, 2, C::new(ac, 0.0));
            g.set(2, 0, C::new(ac, 0.0));
            Some(lam4)
        }
    };
    // feasibility: unit-bounded overlaps, then PSD
    for i in 0..4 {
        for j in 0..4 {
            if i != j && g.get(i, j).norm() > 1.0 + 1e-12 {
                return Err(QkdError::Infeasible(format!(
                    "probe overlap |G[{i}][{j}]| = {:.6} exceeds 1",
                    g.get(i, j).norm()
                )));
            }
        }
    }
    if !crate::linalg::is_psd(&g, 1e-10) {
        return Err(QkdError::Infeasible(
            "Gram is not positive semidefinite".into(),
        ));
    }
    Ok(AttackSpec {
        protocol,
        d,
        lambda4: lam4,
        gram: g,
    })
}

/// Semidefinite Cholesky factor L with G = L L^dagger; zero pivots admit the
/// PSD-singular case. Rows of L are the probe vectors.
fn semidefinite_cholesky(g: &ComplexMatrix) -> Result<Vec<Vec<C>>> {
    let n = g.dim();
    let mut l = vec![vec![C::new(0.0, 0.0); n]; n];
    for j in 0..n {
        let mut d = g.get(j, j).re;
        for k in 0..j {
            d -= l[j][k].norm_sqr();
        }
        if d < -1e-10 {
            return Err(QkdError::Infeasible(format!(
                "Gram not positive semidefinite (pivot {d:.3e})"
            )));
        }
        let dj = d.max(0.0).sqrt();
        l[j][j] = C::new(dj, 0.0);
        for i in (j + 1)..n {
            if dj < 1e-12 {
                continue;
            }
            let mut v = g.get(i, j);
            for k in 0..j {
                v -= l[i][k] * l[j][k].conj();
            }
            l[i][j] = v / dj;
        }
    }
    Ok(l)
}

/// Probe vectors (order A, B, C, D) whose pairwise inner products reproduce
/// the Gram. Deterministic Cholesky-based factorization.
pub fn probes_from_gram(spec: &AttackSpec) -> Result<Vec<Vec<C>>> {
    semidefinite_cholesky(spec.gram())
}

/// Alternate deterministic factorization of the same Gram (reversed pivot
/// order); differs from `probes_from_gram` by a unitary on Eve's space.
pub fn probes_from_gram_alt(spec: &AttackSpec) -> Result<Vec<Vec<C>>> {
    let n = spec.gram().dim();
    let mut rev = ComplexMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            rev.set(i, j, spec.gram().get(n - 1 - i, n - 1 - j));
        }
    }
    let l = semidefinite_cholesky(&rev)?;
    // undo the reversal on both the row order and the component order
    let mut out = vec![vec![C::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for j in 0..n {
            out[i][j] = l[n - 1 - i][n - 1 - j];
        }
    }
    Ok(out)
}

/// Pure state of Eq-style probe interaction on |Psi+>, with explicit probes.
fn eve_state_with_probes(d: f64, probes: &[Vec<C>]) -> Result<DensityOperator> {
    let s = ((1.0 - d).sqrt()) / 2f64.sqrt();
    let t = (d.sqrt()) / 2f64.sqrt();
    let (pa, pb, pc, pd) = (&probes[0], &probes[1], &probes[2], &probes[3]);
    let mut psi = vec![C::new(0.0, 0.0); 16];
    let mut put = |a: usize, b: usize, vec: &[C], w: f64| {
        for e in 0..4 {
            psi[a * 8 + b * 4 + e] += vec[e] * w;
        }
    };
    // (1/sqrt2)[ |0>_A (s |1>_B |C> + t |0>_B |D>)
    //          + |1>_A (s |0>_B |A> + t |1>_B |B>) ]
    put(0, 1, pc, s);
    put(0, 0, pd, t);
    put(1, 0, pa, s);
    put(1, 1, pb, t);
    DensityOperator::new(ComplexMatrix::outer(&psi), vec![2, 2, 4], vec!['A', 'B', 'E'])
}

/// Pure state after Eve's interaction: labels A(2), B(2), E(4).
pub fn eve_state(spec: &AttackSpec) -> Result<DensityOperator> {
    eve_state_with_probes(spec.disturbance(), &probes_from_gram(spec)?)
}

/// As `eve_state` but with the alternate probe factorization.
pub fn eve_state_alt(spec: &AttackSpec) -> Result<DensityOperator> {
    eve_state_with_probes(spec.disturbance(), &probes_from_gram_alt(spec)?)
}

/// Eve's isometry applied to Bob's qubit of a two-qubit state:
/// V|0> = sqrt(1-D)|0>|A> + sqrt(D)|1>|B>,
/// V|1> = sqrt(1-D)|1>|C> + sqrt(D)|0>|D>.
fn apply_eve_isometry(rho_ab: &DensityOperator, d: f64, probes: &[Vec<C>]) -> Result<DensityOperator> {
    let s = (1.0 - d).sqrt();
    let t = d.sqrt();
    // w[b_out * 4 + e][b_in]
    let mut w = vec![[C::new(0.0, 0.0); 2]; 8];
    for e in 0..4 {
        w[4 + e][0] += probes[1][e] * t; // sqrt(D) |1>|B>
        w[e][0] += probes[0][e] * s; // sqrt(1-D) |0>|A>
        w[4 + e][1] += probes[2][e] * s; // sqrt(1-D) |1>|C>
        w[e][1] += probes[3][e] * t; // sqrt(D) |0>|D>
    }
    let mut out = ComplexMatrix::zeros(16);
    for a in 0..2 {
        for ap in 0..2 {
            for be in 0..8 {
                for bep in 0..8 {
                    let mut acc = C::new(0.0, 0.0);
                    for b in 0..2 {
                        for bp in 0..2 {
                            acc += rho_ab.matrix().get(a * 2 + b, ap * 2 + bp)
                                * w[be][b]
                                * w[bep][bp].conj();
                        }
                    }
                    out.set(a * 8 + be, ap * 8 + bep, acc);
                }
            }
        }
    }
    DensityOperator::new(out, vec![2, 2, 4], vec!['A', 'B', 'E'])
}

/// State of the chosen noise scenario before measurement.
/// Scenario 4 lives on the measured ccq state; it is rejected here.
pub fn scenario_state(spec: &AttackSpec, noise: &NoiseConfig) -> Result<DensityOperator> {
    match noise.scenario() {
        Scenario::S0None => eve_state(spec),
        Scenario::S1AliceQuantum => depolarize(&eve_state(spec)?, 'A', noise.p()),
        Scenario::S2BobBeforeEve => {
            let noisy_bell = depolarize(&bell_state(BellState::PsiPlus), 'B', noise.p())?;
            apply_eve_isometry(&noisy_bell, spec.disturbance(), &probes_from_gram(spec)?)
        }
        Scenario::S3BobAfterEve => depolarize(&eve_state(spec)?, 'B', noise.p()),
        Scenario::S4Classical => Err(QkdError::Domain(
            "scenario 4 applies classical noise to the measured ccq state".into(),
        )),
    }
}

/// Classical-classical-quantum state: X (2), Y (2) classical, E quantum.
#[derive(Debug, Clone)]
pub struct CcqState {
    rho: DensityOperator,
}

impl CcqState {
    pub fn density(&self) -> &DensityOperator {
        &self.rho
    }

    fn e_dim(&self) -> usize {
        self.rho.dims()[2]
    }

    /// E-block at classical outcome (x, y).
    fn block(&self, x: usize, y: usize) -> ComplexMatrix {
        let de = self.e_dim();
        let base = (x * 2 + y) * de;
        let mut b = ComplexMatrix::zeros(de);
        for i in 0..de {
            for j in 0..de {
                b.set(i, j, self.rho.matrix().get(base + i, base + j));
            }
        }
        b
    }

    /// Joint outcome distribution p(x, y), row-major over (x, y).
    pub fn prob_xy(&self) -> Result<ProbabilityVector> {
        let mut w = Vec::with_capacity(4);
        for x in 0..2 {
            for y in 0..2 {
                w.push(self.block(x, y).trace().re.clamp(0.0, 1.0));
            }
        }
        ProbabilityVector::new(w)
    }

    /// Prob[X != Y].
    pub fn qber(&self) -> Result<f64> {
        let p = self.prob_xy()?;
        Ok(p.weights()[1] + p.weights()[2])
    }

    /// S(X|E) = S(rho_XE) - S(rho_E), exploiting the X-block-diagonal
    /// structure of rho_XE.
    pub fn sxe(&self) -> Result<f64> {
        let b0 = self.block(0, 0).add(&self.block(0, 1))?;
        let b1 = self.block(1, 0).add(&self.block(1, 1))?;
        let mut eigs_xe = hermitian_eigenvalues(&b0)?;
        eigs_xe.extend(hermitian_eigenvalues(&b1)?);
        let eigs_e = hermitian_eigenvalues(&b0.add(&b1)?)?;
        Ok(entropy_of_spectrum(&eigs_xe)? - entropy_of_spectrum(&eigs_e)?)
    }

    /// H(X|Y) of the outcome distribution.
    pub fn hxy(&self) -> Result<f64> {
        shannon_cond_entropy(&self.prob_xy()?, 2, 2)
    }
}

/// Measure A and B in the computational (Z) basis. Bob's outcome is
/// relabelled Y = 1 - b so that |Psi+> yields X = Y; QBER = Prob[X != Y].
pub fn measure_ccq(rho_abe: &DensityOperator) -> Result<CcqState> {
    let (ia, ib, ie) = (
        rho_abe.label_index('A')?,
        rho_abe.label_index('B')?,
        rho_abe.label_index('E')?,
    );
    if (ia, ib, ie) != (0, 1, 2) || rho_abe.dims()[0] != 2 || rho_abe.dims()[1] != 2 {
        return Err(QkdError::DimensionMismatch(
            "expected qubit subsystems ordered A, B, E".into(),
        ));
    }
    let de = rho_abe.dims()[2];
    let dim = 4 * de;
    let mut out = ComplexMatrix::zeros(dim);
    for a in 0..2 {
        for b in 0..2 {
            let (x, y) = (a, 1 - b);
            let src = (a * 2 + b) * de;
            let dst = (x * 2 + y) * de;
            for i in 0..de {
                for j in 0..de {
                    out.set(dst + i, dst + j, rho_abe.matrix().get(src + i, src + j));
                }
            }
        }
    }
    let rho = DensityOperator::new(out, vec![2, 2, de], vec!['X', 'Y', 'E'])?;
    Ok(CcqState { rho })
}

/// Classical noisy channel on the X register: flip probability p/2
/// (Kraus B1 = sqrt(1-p/2) 1, B2 = sqrt(p/2) sigma_x on X).
pub fn classical_flip(ccq: &CcqState, p: f64) -> Result<CcqState> {
    if !(0.0..=1.0).contains(&p) {
        return Err(QkdError::Domain(format!("classical noise p {p} outside [0,1]")));
    }
    let rho = ccq.density();
    let flip = embed_single(rho.dims(), rho.labels(), 'X', &pauli_x())?;
    let flipped = flip.matmul(rho.matrix())?.matmul(&flip.adjoint())?;
    let mixed = rho
        .matrix()
        .scale(C::new(1.0 - p / 2.0, 0.0))
        .add(&flipped.scale(C::new(p / 2.0, 0.0)))?;
    let rho = DensityOperator::new(mixed, rho.dims().to_vec(), rho.labels().to_vec())?;
    Ok(CcqState { rho })
}

/// Diagonal of a two-qubit state in the Bell basis (order Psi+, Psi-, Phi+,
/// Phi-) together with the largest off-diagonal Bell-basis magnitude.
pub fn bell_coefficients(rho_ab: &DensityOperator) -> Result<([f64; 4], f64)> {
    if rho_ab.dim() != 4 {
        return Err(QkdError::DimensionMismatch(format!(
            "expected a two-qubit state, got dimension {}",
            rho_ab.dim()
        )));
    }
    let vecs: Vec<[C; 4]> = BELL_ORDER.iter().map(|&b| bell_vector(b)).collect();
    let mut diag = [0.0; 4];
    let mut max_off = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = C::new(0.0, 0.0);
            for r in 0..4 {
                for c in 0..4 {
                    acc += vecs[i][r].conj() * rho_ab.matrix().get(r, c) * vecs[j][c];
                }
            }
            if i == j {
                diag[i] = acc.re;
            } else {
                max_off = max_off.max(acc.norm());
            }
        }
    }
    Ok((diag, max_off))
}

/// Fast evaluation of (S(X|E), H(X|Y), QBER) for scenario-1 depolarizing
/// noise (p = 0 reduces to scenario 0).
///
/// Exploits the structure of the measured state: with psi = sum_ab |ab> v_ab
/// and depolarizing noise on A, the E-block at outcome (a, b) is
/// (1 - p/2) |v_ab><v_ab| + (p/2) |v_{1-a,b}><v_{1-a,b}|, so only 4x4
/// operators ever materialize. Verified against the full channel pipeline
/// by unit test.
pub fn s1_sxe_hxy_fast(spec: &AttackSpec, p: f64) -> Result<(f64, f64, f64)> {
    if !(0.0..=P_MAX).contains(&p) {
        return Err(QkdError::Domain(format!("noise parameter {p} outside [0,1)")));
    }
    let probes = probes_from_gram(spec)?;
    let d = spec.disturbance();
    let s = ((1.0 - d) / 2.0).sqrt();
    let t = (d / 2.0).sqrt();
    let scale = |v: &[C], w: f64| -> Vec<C> { v.iter().map(|z| z * w).collect() };
    // psi components v[a][b] in Eve's 4-dim space
    let v = [
        [scale(&probes[3], t), scale(&probes[2], s)],
        [scale(&probes[0], s), scale(&probes[1], t)],
    ];
    let outer = |vec: &[C]| ComplexMatrix::outer(vec);
    // measured E-blocks with X = a, Y = 1 - b
    let mut blocks = Vec::with_capacity(4); // (x, y) row-major
    for x in 0..2 {
        for y in 0..2 {
            let b = 1 - y;
            let m = outer(&v[x][b])
                .scale(C::new(1.0 - p / 2.0, 0.0))
                .add(&outer(&v[1 - x][b]).scale(C::new(p / 2.0, 0.0)))?;
            blocks.push(m);
        }
    }
    let pxy: Vec<f64> = blocks.iter().map(|b| b.trace().re.clamp(0.0, 1.0)).collect();
    let qber = pxy[1] + pxy[2];
    let hxy = shannon_cond_entropy(&ProbabilityVector::new(pxy)?, 2, 2)?;
    let r0 = blocks[0].add(&blocks[1])?;
    let r1 = blocks[2].add(&blocks[3])?;
    let mut eigs_xe = hermitian_eigenvalues(&r0)?;
    eigs_xe.extend(hermitian_eigenvalues(&r1)?);
    let eigs_e = hermitian_eigenvalues(&r0.add(&r1)?)?;
    let sxe = entropy_of_spectrum(&eigs_xe)? - entropy_of_spectrum(&eigs_e)?;
    Ok((sxe, hxy, qber))
}

/// Measured ccq state of a scenario; the only entry point that also covers
/// scenario 4.
pub fn scenario_ccq(spec: &AttackSpec, noise: &NoiseConfig) -> Result<CcqState> {
    match noise.scenario() {
        Scenario::S4Classical => {
            let base = measure_ccq(&eve_state(spec)?)?;
            classical_flip(&base, noise.p())
        }
        _ => measure_ccq(&scenario_state(spec, noise)?),
    }
}

/// (S(X|E), H(X|Y), QBER) of a scenario's measured state.
pub fn scenario_sxe_hxy(spec: &AttackSpec, noise: &NoiseConfig) -> Result<(f64, f64, f64)> {
    let ccq = scenario_ccq(spec, noise)?;
    Ok((ccq.sxe()?, ccq.hxy()?, ccq.qber()?))
}
