//! Noise channels and noisy gate-set models.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::clifford::{CliffordGroup, SignedPerm, GROUP_ORDER};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::superop::Superop;

const CPTP_TOL: f64 = 1e-10;

/// Probabilities `(l_x, l_y, l_z)` of a Pauli channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PauliParams<T: Real> {
    pub l: [T; 3],
}

impl<T: Real> PauliParams<T> {
    pub fn new(l: [T; 3]) -> Result<Self> {
        let total = l[0] + l[1] + l[2];
        if l.iter().any(|&x| x < T::zero() || !x.is_finite()) {
            return Err(Error::InvalidProbability(format!(
                "negative or non-finite entry in {:?}",
                l.map(Real::to_f64_lossy)
            )));
        }
        if total > T::one() + T::tol(1e-12) {
            return Err(Error::InvalidProbability(format!(
                "sum {} exceeds 1",
                total.to_f64_lossy()
            )));
        }
        Ok(Self { l })
    }

    pub fn depolarizing(lambda: T) -> Result<Self> {
        Self::new([lambda; 3])
    }

    pub fn dephasing(lambda: T) -> Result<Self> {
        Self::new([T::zero(), T::zero(), lambda])
    }

    pub fn sum(&self) -> T {
        self.l[0] + self.l[1] + self.l[2]
    }
}

/// Rotation by `angle` (radians, right-handed) about a unit `axis`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RotationParams<T: Real> {
    pub axis: [T; 3],
    pub angle: T,
}

impl<T: Real> RotationParams<T> {
    /// Normalizes `axis`; a zero axis is rejected.
    pub fn new(axis: [T; 3], angle: T) -> Result<Self> {
        Ok(Self {
            axis: unit_axis(axis)?,
            angle,
        })
    }
}

fn unit_axis<T: Real>(axis: [T; 3]) -> Result<[T; 3]> {
    let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    if n <= T::tol(1e-300) || !n.is_finite() {
        return Err(Error::ZeroAxis);
    }
    Ok(axis.map(|x| x / n))
}

/// Cross-product matrix `K v = m x v`.
pub fn cross_matrix<T: Real>(m: &[T; 3]) -> DMatrix<T> {
    let z = T::zero();
    DMatrix::from_row_slice(3, 3, &[z, -m[2], m[1], m[2], z, -m[0], -m[1], m[0], z])
}

/// `cos(a) 1 + sin(a) K + (1 - cos(a)) m m^T`.
pub fn rotation_block<T: Real>(axis: &[T; 3], angle: T) -> DMatrix<T> {
    let k = cross_matrix(axis);
    let m = DVector::from_row_slice(axis);
    DMatrix::identity(3, 3) * angle.cos() + k * angle.sin() + &m * m.transpose() * (T::one() - angle.cos())
}

fn embed_unital<T: Real>(block: &DMatrix<T>) -> Superop<T> {
    Superop::from_unital_parts(&DVector::zeros(3), block).expect("3x3 unital block")
}

pub fn pauli_channel<T: Real>(p: &PauliParams<T>) -> Superop<T> {
    let [lx, ly, lz] = p.l;
    let two = T::lit(2.0);
    let diag = DVector::from_vec(vec![
        T::one() - two * (ly + lz),
        T::one() - two * (lx + lz),
        T::one() - two * (lx + ly),
    ]);
    embed_unital(&DMatrix::from_diagonal(&diag))
}

pub fn rotation_channel<T: Real>(r: &RotationParams<T>) -> Result<Superop<T>> {
    let axis = unit_axis(r.axis)?;
    Ok(embed_unital(&rotation_block(&axis, r.angle)))
}

/// Amplitude damping towards the `+z` pole with decay probability `gamma`.
pub fn amplitude_damping<T: Real>(gamma: T) -> Result<Superop<T>> {
    if !(gamma >= T::zero() && gamma <= T::one()) {
        return Err(Error::OutOfRange {
            name: "gamma",
            value: gamma.to_f64_lossy(),
            lo: 0.0,
            hi: 1.0,
        });
    }
    let s = (T::one() - gamma).sqrt();
    let t = DVector::from_vec(vec![T::zero(), T::zero(), gamma]);
    let eu = DMatrix::from_diagonal(&DVector::from_vec(vec![s, s, T::one() - gamma]));
    Superop::from_unital_parts(&t, &eu)
}

/// Primitive physical gates the Clifford compilation is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Primitive {
    X90,
    Y90,
}

impl Primitive {
    pub fn exact(self) -> SignedPerm {
        match self {
            Primitive::X90 => SignedPerm::X90,
            Primitive::Y90 => SignedPerm::Y90,
        }
    }
}

fn word_product(word: &[Primitive]) -> SignedPerm {
    word.iter()
        .fold(SignedPerm::IDENTITY, |acc, p| p.exact() * acc)
}

#[derive(Deserialize)]
struct CompilationAsset {
    words: Vec<Vec<Primitive>>,
}

const BUILTIN_COMPILATION: &str = include_str!("../assets/xy_clifford_compilation.json");

/// Compilation of each Clifford (by gate index) into time-ordered primitives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompilationTable {
    words: Vec<Vec<Primitive>>,
}

impl CompilationTable {
    /// The shipped table. The words are matched to gate indices by their
    /// composed action.
    pub fn builtin<T: Real>(group: &CliffordGroup<T>) -> Result<Self> {
        let asset: CompilationAsset = serde_json::from_str(BUILTIN_COMPILATION)
            .map_err(|e| Error::InvalidConfig(format!("builtin compilation table: {e}")))?;
        Self::from_unordered(group, asset.words)
    }

    /// Table given in gate-index order; every word must compose to its gate.
    pub fn from_indexed<T: Real>(group: &CliffordGroup<T>, words: Vec<Vec<Primitive>>) -> Result<Self> {
        if words.len() != group.len() {
            return Err(Error::ModelTableIncomplete(format!(
                "compilation table has {} entries, expected {}",
                words.len(),
                group.len()
            )));
        }
        for (i, w) in words.iter().enumerate() {
            if word_product(w) != group.exact(i) {
                return Err(Error::ModelTableIncomplete(format!(
                    "word {w:?} does not compile Clifford {i}"
                )));
            }
        }
        Ok(Self { words })
    }

    /// Words in any order; each Clifford must be covered exactly once.
    pub fn from_unordered<T: Real>(group: &CliffordGroup<T>, words: Vec<Vec<Primitive>>) -> Result<Self> {
        let mut slots: Vec<Option<Vec<Primitive>>> = vec![None; group.len()];
        for w in words {
            let i = group
                .index_of_exact(&word_product(&w))
                .expect("products of quarter turns are Clifford");
            if slots[i].replace(w).is_some() {
                return Err(Error::ModelTableIncomplete(format!(
                    "Clifford {i} compiled twice"
                )));
            }
        }
        let words = slots
            .into_iter()
            .enumerate()
            .map(|(i, w)| w.ok_or_else(|| Error::ModelTableIncomplete(format!("Clifford {i} missing"))))
            .collect::<Result<_>>()?;
        Ok(Self { words })
    }

    pub fn word(&self, gate: usize) -> &[Primitive] {
        &self.words[gate]
    }

    pub fn words(&self) -> &[Vec<Primitive>] {
        &self.words
    }

    pub fn mean_length(&self) -> f64 {
        self.words.iter().map(Vec::len).sum::<usize>() as f64 / self.words.len() as f64
    }
}

/// Serializable description of a single channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelSpec<T: Real> {
    Identity,
    Pauli { l: [T; 3] },
    Rotation { axis: [T; 3], angle: T },
    AmplitudeDamping { gamma: T },
    /// Raw 4x4 PTM, row-major.
    Ptm { matrix: Vec<Vec<T>> },
    /// Channels applied in the listed order.
    Sequence { channels: Vec<ChannelSpec<T>> },
}

impl<T: Real> ChannelSpec<T> {
    pub fn build(&self) -> Result<Superop<T>> {
        match self {
            ChannelSpec::Identity => Ok(Superop::qubit_identity()),
            ChannelSpec::Pauli { l } => Ok(pauli_channel(&PauliParams::new(*l)?)),
            ChannelSpec::Rotation { axis, angle } => {
                rotation_channel(&RotationParams::new(*axis, *angle)?)
            }
            ChannelSpec::AmplitudeDamping { gamma } => amplitude_damping(*gamma),
            ChannelSpec::Ptm { matrix } => {
                let n = matrix.len();
                if matrix.iter().any(|r| r.len() != n) {
                    return Err(Error::InvalidConfig("PTM rows must be square".into()));
                }
                let flat: Vec<T> = matrix.iter().flatten().copied().collect();
                let e = Superop::from_matrix(2, DMatrix::from_row_slice(n, n, &flat))?;
                if !e.is_cptp(T::tol(CPTP_TOL)) {
                    return Err(Error::NotCptp("PTM channel".into()));
                }
                Ok(e)
            }
            ChannelSpec::Sequence { channels } => channels.iter().try_fold(
                Superop::qubit_identity(),
                |acc, c| c.build()?.compose(&acc),
            ),
        }
    }

    pub fn from_superop(e: &Superop<T>) -> Self {
        let m = e.matrix();
        ChannelSpec::Ptm {
            matrix: (0..m.nrows())
                .map(|i| m.row(i).iter().copied().collect())
                .collect(),
        }
    }
}

/// Right-noise rotation with angle `scale * theta` about `axis`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ScaledRotation<T: Real> {
    pub axis: [T; 3],
    pub scale: T,
}

fn z_axis<T: Real>() -> [T; 3] {
    [T::zero(), T::zero(), T::one()]
}

/// How each ideal Clifford gate is corrupted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NoiseModel<T: Real> {
    /// `G~ = L G R` with gate-independent `L` and `R`.
    GateIndependentLr { left: ChannelSpec<T>, right: ChannelSpec<T> },
    /// `G~_k = G_k U_k`, `U_k` a rotation by `a_k theta` about `m_k`.
    PerGateUnitary { theta: T, gates: Vec<ScaledRotation<T>> },
    /// Pauli channels on both sides.
    PauliLr { l: [T; 3], s: [T; 3] },
    /// Each Clifford compiled into quarter-turn primitives, every primitive
    /// followed (in time) by the same rotation error of angle `theta`.
    ProctorPrimitive {
        theta: T,
        #[serde(default = "z_axis")]
        axis: [T; 3],
        /// Per gate index; the shipped table when absent.
        #[serde(default)]
        decomposition: Option<Vec<Vec<Primitive>>>,
    },
    /// Per-gate right noise, `G~_k = G_k Lambda_k`.
    Custom { right_noise: Vec<ChannelSpec<T>> },
}

/// One factor of a noisy gate written as an ordered matrix product.
#[derive(Debug, Clone, PartialEq)]
pub enum GateFactor<T: Real> {
    Fixed(DMatrix<T>),
    /// Rotation by `scale * theta` about `axis`.
    Rotation { axis: [T; 3], scale: T },
}

impl<T: Real> GateFactor<T> {
    pub fn evaluate(&self, theta: T) -> DMatrix<T> {
        match self {
            GateFactor::Fixed(m) => m.clone(),
            GateFactor::Rotation { axis, scale } => {
                embed_unital(&rotation_block(axis, *scale * theta)).into_matrix()
            }
        }
    }
}

/// Matrix product `factors[0] * factors[1] * ...` at angle `theta`.
pub fn evaluate_factors<T: Real>(factors: &[GateFactor<T>], theta: T) -> DMatrix<T> {
    factors
        .iter()
        .fold(DMatrix::identity(4, 4), |acc, f| acc * f.evaluate(theta))
}

impl<T: Real> NoiseModel<T> {
    pub fn pauli_lr(l: [T; 3], s: [T; 3]) -> Self {
        NoiseModel::PauliLr { l, s }
    }

    pub fn lr(left: &Superop<T>, right: &Superop<T>) -> Self {
        NoiseModel::GateIndependentLr {
            left: ChannelSpec::from_superop(left),
            right: ChannelSpec::from_superop(right),
        }
    }

    pub fn proctor(theta: T) -> Self {
        NoiseModel::ProctorPrimitive {
            theta,
            axis: z_axis(),
            decomposition: None,
        }
    }

    /// The scalar noise strength, for models parameterized by one angle.
    pub fn theta(&self) -> Option<T> {
        match self {
            NoiseModel::PerGateUnitary { theta, .. } | NoiseModel::ProctorPrimitive { theta, .. } => {
                Some(*theta)
            }
            _ => None,
        }
    }

    pub fn with_theta(&self, new_theta: T) -> Option<Self> {
        let mut out = self.clone();
        match &mut out {
            NoiseModel::PerGateUnitary { theta, .. } | NoiseModel::ProctorPrimitive { theta, .. } => {
                *theta = new_theta;
                Some(out)
            }
            _ => None,
        }
    }

    pub fn compilation(&self, group: &CliffordGroup<T>) -> Result<Option<CompilationTable>> {
        match self {
            NoiseModel::ProctorPrimitive { decomposition, .. } => Ok(Some(match decomposition {
                Some(words) => CompilationTable::from_indexed(group, words.clone())?,
                None => CompilationTable::builtin(group)?,
            })),
            _ => Ok(None),
        }
    }

    /// Noisy gates as ordered products of fixed matrices and rotations whose
    /// angle is linear in `theta`. `None` for models without such structure.
    pub fn gate_factors(&self, group: &CliffordGroup<T>) -> Result<Option<Vec<Vec<GateFactor<T>>>>> {
        match self {
            NoiseModel::PerGateUnitary { gates, .. } => {
                check_table_len(gates.len())?;
                let out = group
                    .gates()
                    .iter()
                    .zip(gates)
                    .map(|(g, r)| {
                        Ok(vec![
                            GateFactor::Fixed(g.matrix().clone()),
                            GateFactor::Rotation {
                                axis: unit_axis(r.axis)?,
                                scale: r.scale,
                            },
                        ])
                    })
                    .collect::<Result<_>>()?;
                Ok(Some(out))
            }
            NoiseModel::ProctorPrimitive { axis, .. } => {
                let axis = unit_axis(*axis)?;
                let table = self.compilation(group)?.expect("proctor model has a table");
                let out = table
                    .words()
                    .iter()
                    .map(|w| {
                        // latest primitive leftmost; each primitive acts after its own error
                        w.iter()
                            .rev()
                            .flat_map(|p| {
                                [
                                    GateFactor::Fixed(p.exact().to_superop::<T>().into_matrix()),
                                    GateFactor::Rotation {
                                        axis,
                                        scale: T::one(),
                                    },
                                ]
                            })
                            .collect()
                    })
                    .collect();
                Ok(Some(out))
            }
            _ => Ok(None),
        }
    }
}

fn check_table_len(n: usize) -> Result<()> {
    if n != GROUP_ORDER {
        return Err(Error::ModelTableIncomplete(format!(
            "{n} entries, expected {GROUP_ORDER}"
        )));
    }
    Ok(())
}

/// The noisy implementations `G~_k` of every Clifford under `model`.
pub fn noisy_gateset<T: Real>(group: &CliffordGroup<T>, model: &NoiseModel<T>) -> Result<Vec<Superop<T>>> {
    let gates = group.gates();
    if gates.len() != GROUP_ORDER {
        return Err(Error::ModelTableIncomplete(format!(
            "{} ideal gates, expected {GROUP_ORDER}",
            gates.len()
        )));
    }
    let out: Vec<Superop<T>> = match model {
        NoiseModel::GateIndependentLr { left, right } => {
            let (l, r) = (left.build()?, right.build()?);
            gates
                .iter()
                .map(|g| l.compose(g)?.compose(&r))
                .collect::<Result<_>>()?
        }
        NoiseModel::PauliLr { l, s } => {
            let l = pauli_channel(&PauliParams::new(*l)?);
            let r = pauli_channel(&PauliParams::new(*s)?);
            gates
                .iter()
                .map(|g| l.compose(g)?.compose(&r))
                .collect::<Result<_>>()?
        }
        NoiseModel::Custom { right_noise } => {
            check_table_len(right_noise.len())?;
            gates
                .iter()
                .zip(right_noise)
                .map(|(g, n)| g.compose(&n.build()?))
                .collect::<Result<_>>()?
        }
        NoiseModel::PerGateUnitary { theta, .. } | NoiseModel::ProctorPrimitive { theta, .. } => {
            let factors = model.gate_factors(group)?.expect("factorized model");
            factors
                .iter()
                .map(|f| Superop::from_matrix(2, evaluate_factors(f, *theta)))
                .collect::<Result<_>>()?
        }
    };
    let tol = T::tol(CPTP_TOL);
    for (k, g) in out.iter().enumerate() {
        if !g.is_cptp(tol) {
            return Err(Error::NotCptp(format!("noisy gate {k}")));
        }
    }
    Ok(out)
}

/// Rotation angle of the right residual `G^T G~`, in `[0, pi]`.
pub fn effective_right_unitary_angle<T: Real>(g: &Superop<T>, noisy: &Superop<T>) -> Result<T> {
    let residual = g.adjoint().compose(noisy)?;
    let ru = residual.unital_block();
    let dev = (ru.transpose() * &ru - DMatrix::identity(3, 3))
        .amax()
        .max(residual.translation().amax())
        .max((residual.matrix().row(0).transpose() - DVector::from_vec(vec![T::one(), T::zero(), T::zero(), T::zero()])).amax());
    if dev > T::tol(1e-9) {
        return Err(Error::NotUnitaryResidual(dev.to_f64_lossy()));
    }
    let cos = (ru.trace() - T::one()) / T::lit(2.0);
    let half = T::lit(0.5);
    let sin_axis = [
        (ru[(2, 1)] - ru[(1, 2)]) * half,
        (ru[(0, 2)] - ru[(2, 0)]) * half,
        (ru[(1, 0)] - ru[(0, 1)]) * half,
    ];
    let sin = (sin_axis[0] * sin_axis[0] + sin_axis[1] * sin_axis[1] + sin_axis[2] * sin_axis[2]).sqrt();
    Ok(sin.atan2(cos))
}
