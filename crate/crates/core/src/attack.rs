//! Intercept/resend and delayed-measurement eavesdroppers, the detector
//! efficiency split they exploit, and the click-post-selected statistics
//! Alice and Bob observe.
//!
//! Rounds are labelled by Eve's guess `e` of Bob's setting and Bob's actual
//! setting `b`. Eve blinds the detector so that it always clicks when
//! `e = b` and clicks with probability `η` otherwise; every `(e, b)` cell is
//! therefore weighted by 1 on the diagonal and by `η` off it.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_probability, Error, Result};
use crate::protocol::{build_states, check_n, input_bit, signed_mean_vectors, EncodingParams};
use crate::qmath::{
    compensated_sum, norm3, projector_pair_from_bloch, tensor, BlochAngles, DensityOperator, Mat2, Mat4, Subsystem,
    SPECTRAL_TOL,
};
use crate::qmath::{params_from_hermitian, ProjectorPair};

/// Detector click probabilities under blinding.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EfficiencyModel {
    n: usize,
    eta: f64,
}

impl EfficiencyModel {
    pub fn new(n: usize, eta: f64) -> Result<Self> {
        Ok(EfficiencyModel {
            n: check_n(n)?,
            eta: check_probability("eta", eta)?,
        })
    }

    /// Model whose observed average efficiency is `eta_avg`.
    pub fn from_eta_avg(n: usize, eta_avg: f64) -> Result<Self> {
        Self::new(n, eta_from_avg(n, eta_avg)?)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `P(click | e ≠ b)`.
    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// `P(click | e = b)`, always 1: Eve has no reason to suppress matched rounds.
    pub fn eta_eb(&self) -> f64 {
        1.0
    }

    pub fn eta_avg(&self) -> f64 {
        eta_avg(self)
    }

    pub fn weight(&self, e: usize, b: usize) -> f64 {
        if e == b {
            self.eta_eb()
        } else {
            self.eta
        }
    }

    /// `n(1 + (n−1)η)`, the sum of all cell weights.
    pub fn total_weight(&self) -> f64 {
        self.n as f64 * (1.0 + (self.n as f64 - 1.0) * self.eta)
    }

    /// Normalized weights; they sum to one.
    pub fn normalized_weights(&self) -> Vec<f64> {
        let total = self.total_weight();
        (0..self.n)
            .flat_map(|e| (0..self.n).map(move |b| (e, b)))
            .map(|(e, b)| self.weight(e, b) / total)
            .collect()
    }

    /// Weighted mean of an `n × n` row-major table of per-cell values.
    pub fn postselect(&self, cells: &[f64]) -> f64 {
        let n = self.n;
        let total = self.total_weight();
        compensated_sum((0..n * n).map(|k| self.weight(k / n, k % n) * cells[k])) / total
    }
}

/// Observed average efficiency: `(1+η)/2` for n = 2, `(1+2η)/3` for n = 3.
pub fn eta_avg(model: &EfficiencyModel) -> f64 {
    let n = model.n as f64;
    (1.0 + (n - 1.0) * model.eta) / n
}

/// Inverse of [`eta_avg`]; `eta_avg` must lie in `[1/n, 1]`.
pub fn eta_from_avg(n: usize, eta_avg: f64) -> Result<f64> {
    let n = check_n(n)? as f64;
    let lo = 1.0 / n;
    if !eta_avg.is_finite() {
        return Err(Error::NonFinite("eta_avg"));
    }
    // Allow rounding noise at the domain ends, e.g. a grid point of 1/3.
    if eta_avg < lo - 1e-12 || eta_avg > 1.0 + 1e-12 {
        return Err(Error::OutOfDomain {
            what: "eta_avg",
            value: eta_avg,
            lo,
            hi: 1.0,
        });
    }
    Ok(((n * eta_avg - 1.0) / (n - 1.0)).clamp(0.0, 1.0))
}

/// Post-selected success probabilities and the observed click rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObservedStats {
    pub p_b: f64,
    pub p_e: f64,
    pub eta_avg: f64,
}

/// `P_B − P_E`; positive means the key is secure against this attack.
pub fn security_margin(stats: &ObservedStats) -> f64 {
    stats.p_b - stats.p_e
}

fn n_from_states(states: &[DensityOperator<2>]) -> usize {
    if states.len() == 4 {
        2
    } else {
        3
    }
}

fn check_len<T>(what: &'static str, items: &[T], expected: usize) -> Result<()> {
    if items.len() != expected {
        return Err(Error::SizeMismatch {
            what,
            expected,
            got: items.len(),
        });
    }
    Ok(())
}

fn check_grid<T>(what: &'static str, items: &[Vec<T>], n: usize) -> Result<()> {
    check_len(what, items, n)?;
    items.iter().try_for_each(|row| check_len(what, row, n))
}

/// Intercept/resend: Eve measures Alice's qubit with a basis chosen by her
/// guess `e` and forwards the eigenstate of her outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct IrAttack {
    encoding: EncodingParams,
    states: Vec<DensityOperator<2>>,
    eve: Vec<ProjectorPair>,
    bob: Vec<Vec<ProjectorPair>>,
}

impl IrAttack {
    /// `eve[e]` is Eve's measurement for guess `e`, `bob[e][b]` Bob's
    /// (Eve-controlled) measurement in cell `(e, b)`.
    pub fn new(encoding: EncodingParams, eve: Vec<ProjectorPair>, bob: Vec<Vec<ProjectorPair>>) -> Result<Self> {
        let n = encoding.n()?;
        check_len("Eve measurements", &eve, n)?;
        check_grid("Bob measurements", &bob, n)?;
        let states = build_states(&encoding)?;
        Ok(IrAttack {
            encoding,
            states,
            eve,
            bob,
        })
    }

    /// Bob re-measures in Eve's basis, so he reproduces her guess exactly.
    pub fn mirrored(encoding: EncodingParams, eve: Vec<ProjectorPair>) -> Result<Self> {
        let bob = eve.iter().map(|m| vec![*m; eve.len()]).collect();
        Self::new(encoding, eve, bob)
    }

    pub fn n(&self) -> usize {
        self.eve.len()
    }

    pub fn encoding(&self) -> &EncodingParams {
        &self.encoding
    }

    pub fn states(&self) -> &[DensityOperator<2>] {
        &self.states
    }

    pub fn eve_measurements(&self) -> &[ProjectorPair] {
        &self.eve
    }

    pub fn bob_measurements(&self) -> &[Vec<ProjectorPair>] {
        &self.bob
    }

    fn check_cell(&self, e: usize, b: usize) -> Result<()> {
        let n = self.n();
        if e >= n || b >= n {
            return Err(Error::SizeMismatch {
                what: "(e, b) cell index",
                expected: n,
                got: e.max(b),
            });
        }
        Ok(())
    }

    /// `P_{E_b}^e`: Eve's chance that her outcome equals `a_b`.
    pub fn conditional_eve(&self, e: usize, b: usize) -> Result<f64> {
        self.check_cell(e, b)?;
        Ok(self.conditional_eve_unchecked(e, b))
    }

    fn conditional_eve_unchecked(&self, e: usize, b: usize) -> f64 {
        let n = self.n();
        let m = &self.eve[e];
        let sum = compensated_sum(
            self.states
                .iter()
                .enumerate()
                .map(|(x, rho)| m.probability(input_bit(x, b, n), rho)),
        );
        sum / self.states.len() as f64
    }

    /// `P_{B_b}^{eb}`: Bob's chance of outputting `a_b` after Eve resent the
    /// eigenstate of her outcome.
    pub fn conditional_bob(&self, e: usize, b: usize) -> Result<f64> {
        self.check_cell(e, b)?;
        Ok(self.conditional_bob_unchecked(e, b))
    }

    fn conditional_bob_unchecked(&self, e: usize, b: usize) -> f64 {
        let n = self.n();
        let m_eve = &self.eve[e];
        let m_bob = &self.bob[e][b];
        // Bob's success on each resent eigenstate does not depend on the input.
        let resent: [[f64; 2]; 2] = core::array::from_fn(|j| {
            let sent = m_eve.eigenstate(j);
            [m_bob.probability(0, &sent), m_bob.probability(1, &sent)]
        });
        let sum = compensated_sum(self.states.iter().enumerate().map(|(x, rho)| {
            let target = input_bit(x, b, n);
            (0..2)
                .map(|j| m_eve.probability(j, rho) * resent[j][target])
                .sum::<f64>()
        }));
        sum / self.states.len() as f64
    }

    fn cells(&self, f: impl Fn(usize, usize) -> f64) -> Vec<f64> {
        let n = self.n();
        (0..n * n).map(|k| f(k / n, k % n)).collect()
    }

    /// Post-selected `P_E` alone; skips Bob's cells.
    pub fn postselected_pe(&self, model: &EfficiencyModel) -> Result<f64> {
        self.check_model(model)?;
        Ok(model.postselect(&self.cells(|e, b| self.conditional_eve_unchecked(e, b))))
    }

    fn check_model(&self, model: &EfficiencyModel) -> Result<()> {
        if model.n() != self.n() {
            return Err(Error::SizeMismatch {
                what: "efficiency model n",
                expected: self.n(),
                got: model.n(),
            });
        }
        Ok(())
    }
}

/// Post-selected statistics of an intercept/resend attack.
pub fn postselected_stats_ir(attack: &IrAttack, model: &EfficiencyModel) -> Result<ObservedStats> {
    attack.check_model(model)?;
    let eve = attack.cells(|e, b| attack.conditional_eve_unchecked(e, b));
    let bob = attack.cells(|e, b| attack.conditional_bob_unchecked(e, b));
    Ok(ObservedStats {
        p_b: model.postselect(&bob),
        p_e: model.postselect(&eve),
        eta_avg: model.eta_avg(),
    })
}

/// Eve's intercept/resend measurements maximizing `P_E` for given states:
/// for each `e`, the direction of `Σ_b w_{eb} v_b` with `v_b` the signed
/// mean Bloch vector of bit `b`.
pub fn ir_optimal_eve_measurements(states: &[DensityOperator<2>], model: &EfficiencyModel) -> Vec<ProjectorPair> {
    let n = n_from_states(states);
    let bloch: Vec<[f64; 3]> = states.iter().map(|s| s.bloch_vector()).collect();
    let means = signed_mean_vectors(&bloch, n);
    (0..n)
        .map(|e| {
            let mut w = [0.0; 3];
            for (b, v) in means.iter().enumerate() {
                for k in 0..3 {
                    w[k] += model.weight(e, b) * v[k];
                }
            }
            direction_measurement(w)
        })
        .collect()
}

fn direction_measurement(v: [f64; 3]) -> ProjectorPair {
    if norm3(v) < 1e-14 {
        ProjectorPair::computational()
    } else {
        projector_pair_from_bloch(BlochAngles::from_vector(v))
    }
}

/// Delayed measurement: Eve entangles Alice's qubit with a blank memory
/// qubit, forwards the first subsystem to Bob, keeps the second, and
/// measures it only after `b` is announced.
#[derive(Clone, Debug, PartialEq)]
pub struct DmAttack {
    encoding: EncodingParams,
    states: Vec<DensityOperator<2>>,
    unitaries: Vec<Mat4>,
    eve: Vec<Vec<ProjectorPair>>,
    bob: Vec<Vec<ProjectorPair>>,
    blank: DensityOperator<2>,
}

impl DmAttack {
    pub fn new(
        encoding: EncodingParams,
        unitaries: Vec<Mat4>,
        eve: Vec<Vec<ProjectorPair>>,
        bob: Vec<Vec<ProjectorPair>>,
        blank: DensityOperator<2>,
    ) -> Result<Self> {
        let n = encoding.n()?;
        check_len("unitaries", &unitaries, n)?;
        check_grid("Eve measurements", &eve, n)?;
        check_grid("Bob measurements", &bob, n)?;
        for u in &unitaries {
            if !u.is_finite() {
                return Err(Error::NonFinite("unitary"));
            }
            let dev = u.unitarity_error();
            if dev > SPECTRAL_TOL {
                return Err(Error::NotUnitary(dev));
            }
        }
        let states = build_states(&encoding)?;
        Ok(DmAttack {
            encoding,
            states,
            unitaries,
            eve,
            bob,
            blank,
        })
    }

    /// The blank memory qubit `|0⟩⟨0|`.
    pub fn default_blank() -> DensityOperator<2> {
        DensityOperator::try_new(Mat2::from_real_diagonal([1.0, 0.0])).expect("|0><0| is a valid state")
    }

    /// Unitaries given, measurements chosen cell by cell to maximize both
    /// Eve's and Bob's success. The two optimizations are independent:
    /// Eve's marginal does not depend on Bob's measurement and vice versa.
    pub fn with_optimal_measurements(encoding: EncodingParams, unitaries: Vec<Mat4>) -> Result<Self> {
        let n = encoding.n()?;
        check_len("unitaries", &unitaries, n)?;
        let states = build_states(&encoding)?;
        let blank = Self::default_blank();
        let mut eve = Vec::with_capacity(n);
        let mut bob = Vec::with_capacity(n);
        for u in &unitaries {
            let mut eve_bloch = Vec::with_capacity(states.len());
            let mut bob_bloch = Vec::with_capacity(states.len());
            for rho in &states {
                let joint = joint_state(rho, &blank, u);
                bob_bloch.push(joint.reduced(Subsystem::First).bloch_vector());
                eve_bloch.push(joint.reduced(Subsystem::Second).bloch_vector());
            }
            eve.push(
                signed_mean_vectors(&eve_bloch, n)
                    .into_iter()
                    .map(direction_measurement)
                    .collect(),
            );
            bob.push(
                signed_mean_vectors(&bob_bloch, n)
                    .into_iter()
                    .map(direction_measurement)
                    .collect(),
            );
        }
        Self::new(encoding, unitaries, eve, bob, blank)
    }

    /// Delayed-measurement attack with the same statistics as `ir`: each
    /// `U_e` is a controlled flip of the memory qubit, controlled on Alice's
    /// qubit in Eve's measurement basis; Eve then reads her memory in the
    /// computational basis.
    pub fn embedding_ir(ir: &IrAttack) -> Result<Self> {
        let n = ir.n();
        let unitaries = ir.eve.iter().map(controlled_copy_unitary).collect();
        let eve = vec![vec![ProjectorPair::computational(); n]; n];
        Self::new(
            ir.encoding.clone(),
            unitaries,
            eve,
            ir.bob.clone(),
            Self::default_blank(),
        )
    }

    pub fn n(&self) -> usize {
        self.unitaries.len()
    }

    pub fn encoding(&self) -> &EncodingParams {
        &self.encoding
    }

    pub fn unitaries(&self) -> &[Mat4] {
        &self.unitaries
    }

    pub fn eve_measurements(&self) -> &[Vec<ProjectorPair>] {
        &self.eve
    }

    pub fn bob_measurements(&self) -> &[Vec<ProjectorPair>] {
        &self.bob
    }

    pub fn blank(&self) -> &DensityOperator<2> {
        &self.blank
    }

    /// `U_e (ρ_x ⊗ ρ_blank) U_e†`; Bob holds the first factor.
    pub fn joint_state(&self, x: usize, e: usize) -> Result<DensityOperator<4>> {
        let rho = self.states.get(x).ok_or(Error::SizeMismatch {
            what: "input index",
            expected: self.states.len(),
            got: x,
        })?;
        let u = self.unitaries.get(e).ok_or(Error::SizeMismatch {
            what: "Eve input e",
            expected: self.n(),
            got: e,
        })?;
        Ok(joint_state(rho, &self.blank, u))
    }

    /// `Tr((M_{e,b}^{B=i} ⊗ M_{e,b}^{E=j}) ρ_{x,e})`.
    pub fn joint_outcome_probability(
        &self,
        x: usize,
        e: usize,
        b: usize,
        bob_outcome: usize,
        eve_outcome: usize,
    ) -> Result<f64> {
        let joint = self.joint_state(x, e)?;
        let effect = tensor(self.bob[e][b].effect(bob_outcome), self.eve[e][b].effect(eve_outcome));
        crate::qmath::born_probability(&effect, &joint)
    }

    /// Per-cell success of Eve and Bob, averaged over inputs.
    fn cell_tables(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.n();
        let mut eve = vec![0.0; n * n];
        let mut bob = vec![0.0; n * n];
        let inv = 1.0 / self.states.len() as f64;
        for (e, u) in self.unitaries.iter().enumerate() {
            let reduced: Vec<(DensityOperator<2>, DensityOperator<2>)> = self
                .states
                .iter()
                .map(|rho| {
                    let joint = joint_state(rho, &self.blank, u);
                    (joint.reduced(Subsystem::First), joint.reduced(Subsystem::Second))
                })
                .collect();
            for b in 0..n {
                let me = &self.eve[e][b];
                let mb = &self.bob[e][b];
                eve[e * n + b] = inv
                    * compensated_sum(
                        reduced
                            .iter()
                            .enumerate()
                            .map(|(x, (_, s))| me.probability(input_bit(x, b, n), s)),
                    );
                bob[e * n + b] = inv
                    * compensated_sum(
                        reduced
                            .iter()
                            .enumerate()
                            .map(|(x, (s, _))| mb.probability(input_bit(x, b, n), s)),
                    );
            }
        }
        (eve, bob)
    }

    pub fn conditional_eve(&self, e: usize, b: usize) -> Result<f64> {
        let n = self.n();
        if e >= n || b >= n {
            return Err(Error::SizeMismatch {
                what: "(e, b) cell index",
                expected: n,
                got: e.max(b),
            });
        }
        Ok(self.cell_tables().0[e * n + b])
    }

    pub fn conditional_bob(&self, e: usize, b: usize) -> Result<f64> {
        let n = self.n();
        if e >= n || b >= n {
            return Err(Error::SizeMismatch {
                what: "(e, b) cell index",
                expected: n,
                got: e.max(b),
            });
        }
        Ok(self.cell_tables().1[e * n + b])
    }
}

fn joint_state(rho: &DensityOperator<2>, blank: &DensityOperator<2>, u: &Mat4) -> DensityOperator<4> {
    DensityOperator::new_unchecked(tensor(rho.matrix(), blank.matrix())).evolve(u)
}

/// Hermitian generator of the controlled copy used by [`DmAttack::embedding_ir`]:
/// `π · (M^{E=1} ⊗ |−⟩⟨−|)`, whose exponential is `I − 2 M^{E=1} ⊗ |−⟩⟨−|`.
pub fn controlled_copy_generator(eve: &ProjectorPair) -> [f64; 16] {
    params_from_hermitian(&copy_projector(eve).scale_real(core::f64::consts::PI))
}

fn copy_projector(eve: &ProjectorPair) -> Mat4 {
    let minus = crate::qmath::operator_from_bloch_vector([-1.0, 0.0, 0.0]);
    tensor(eve.p1(), &minus)
}

fn controlled_copy_unitary(eve: &ProjectorPair) -> Mat4 {
    Mat4::identity() - copy_projector(eve).scale_real(2.0)
}

/// Post-selected statistics of a delayed-measurement attack.
pub fn postselected_stats_dm(attack: &DmAttack, model: &EfficiencyModel) -> Result<ObservedStats> {
    if model.n() != attack.n() {
        return Err(Error::SizeMismatch {
            what: "efficiency model n",
            expected: attack.n(),
            got: model.n(),
        });
    }
    let (eve, bob) = attack.cell_tables();
    Ok(ObservedStats {
        p_b: model.postselect(&bob),
        p_e: model.postselect(&eve),
        eta_avg: model.eta_avg(),
    })
}

/// Either eavesdropping channel.
#[derive(Clone, Debug, PartialEq)]
pub enum AttackModel {
    InterceptResend(IrAttack),
    DelayedMeasurement(DmAttack),
}

impl AttackModel {
    pub fn n(&self) -> usize {
        match self {
            AttackModel::InterceptResend(a) => a.n(),
            AttackModel::DelayedMeasurement(a) => a.n(),
        }
    }

    pub fn encoding(&self) -> &EncodingParams {
        match self {
            AttackModel::InterceptResend(a) => a.encoding(),
            AttackModel::DelayedMeasurement(a) => a.encoding(),
        }
    }

    /// True when Eve also dictates Alice's preparations.
    pub fn tampers_with_alice(&self) -> bool {
        !matches!(self.encoding(), EncodingParams::Fixed2to1 | EncodingParams::Fixed3to1)
    }

    pub fn postselected_stats(&self, model: &EfficiencyModel) -> Result<ObservedStats> {
        match self {
            AttackModel::InterceptResend(a) => postselected_stats_ir(a, model),
            AttackModel::DelayedMeasurement(a) => postselected_stats_dm(a, model),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{honest_bob_measurements, quantum_max, success_probability, RacProtocol};
    use crate::qmath::unitary_from_generator;
    use approx::assert_abs_diff_eq;
    use core::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn z_basis() -> ProjectorPair {
        ProjectorPair::computational()
    }

    fn x_basis() -> ProjectorPair {
        projector_pair_from_bloch(BlochAngles::new(FRAC_PI_2, 0.0).unwrap())
    }

    fn swap() -> Mat4 {
        let mut s = Mat4::zeros();
        for (i, j) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            s.0[i][j] = crate::qmath::C64::new(1.0, 0.0);
        }
        s
    }

    /// Mirrored IR attack with Eve's best measurements on the fixed 2→1 states.
    fn optimal_ir_2to1(eta: f64) -> IrAttack {
        let model = EfficiencyModel::new(2, eta).unwrap();
        let states = build_states(&EncodingParams::Fixed2to1).unwrap();
        IrAttack::mirrored(EncodingParams::Fixed2to1, ir_optimal_eve_measurements(&states, &model)).unwrap()
    }

    #[test]
    fn eta_avg_examples() {
        assert_eq!(EfficiencyModel::new(2, 0.0).unwrap().eta_avg(), 0.5);
        assert_eq!(EfficiencyModel::new(2, 1.0).unwrap().eta_avg(), 1.0);
        assert_abs_diff_eq!(
            EfficiencyModel::new(3, 0.0).unwrap().eta_avg(),
            1.0 / 3.0,
            epsilon = 1e-16
        );
        assert!(EfficiencyModel::new(2, 1.5).is_err());
        assert!(eta_from_avg(2, 0.4).is_err());
        assert_abs_diff_eq!(eta_from_avg(3, 0.6).unwrap(), 0.4, epsilon = 1e-15);
    }

    #[test]
    fn eve_z_basis_on_fixed_2to1() {
        let attack = IrAttack::mirrored(EncodingParams::Fixed2to1, vec![z_basis(), x_basis()]).unwrap();
        // ρ₀₀, ρ₀₁, ρ₁₀, ρ₁₁ give 1, ½, ½, 1 for guessing a₀ in Z.
        assert_abs_diff_eq!(attack.conditional_eve(0, 0).unwrap(), 0.75, epsilon = 1e-15);
    }

    #[test]
    fn mixed_states_give_half() {
        let g = vec![BlochAngles::zero(); 4];
        let mut attack = IrAttack::mirrored(EncodingParams::General(g), vec![z_basis(), x_basis()]).unwrap();
        attack.states = vec![DensityOperator::maximally_mixed(); 4];
        for e in 0..2 {
            for b in 0..2 {
                assert_abs_diff_eq!(attack.conditional_eve(e, b).unwrap(), 0.5, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn eve_along_honest_direction_matches_honest_bit_success() {
        let honest = honest_bob_measurements(3).unwrap();
        let proto = RacProtocol::honest(&EncodingParams::Fixed3to1).unwrap();
        let attack = IrAttack::mirrored(EncodingParams::Fixed3to1, honest).unwrap();
        for b in 0..3 {
            assert_abs_diff_eq!(
                attack.conditional_eve(b, b).unwrap(),
                proto.bit_success(b),
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn mirrored_bob_equals_eve() {
        let eve = vec![
            projector_pair_from_bloch(BlochAngles::new(0.4, 1.0).unwrap()),
            projector_pair_from_bloch(BlochAngles::new(2.2, -0.3).unwrap()),
        ];
        let attack = IrAttack::mirrored(EncodingParams::Fixed2to1, eve).unwrap();
        for e in 0..2 {
            for b in 0..2 {
                assert_abs_diff_eq!(
                    attack.conditional_bob(e, b).unwrap(),
                    attack.conditional_eve(e, b).unwrap(),
                    epsilon = 1e-14
                );
            }
        }
    }

    #[test]
    fn unbiased_bob_learns_nothing() {
        let attack = IrAttack::new(
            EncodingParams::Fixed2to1,
            vec![z_basis(), z_basis()],
            vec![vec![x_basis(); 2]; 2],
        )
        .unwrap();
        for b in 0..2 {
            assert_abs_diff_eq!(attack.conditional_bob(0, b).unwrap(), 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn postselection_limits() {
        let attack = IrAttack::mirrored(
            EncodingParams::Fixed2to1,
            vec![
                projector_pair_from_bloch(BlochAngles::new(0.3, 0.0).unwrap()),
                projector_pair_from_bloch(BlochAngles::new(1.9, 0.0).unwrap()),
            ],
        )
        .unwrap();
        let cell = |e, b| attack.conditional_eve(e, b).unwrap();
        let all = (cell(0, 0) + cell(0, 1) + cell(1, 0) + cell(1, 1)) / 4.0;
        let full = postselected_stats_ir(&attack, &EfficiencyModel::new(2, 1.0).unwrap()).unwrap();
        assert_abs_diff_eq!(full.p_e, all, epsilon = 1e-15);
        let blind = postselected_stats_ir(&attack, &EfficiencyModel::new(2, 0.0).unwrap()).unwrap();
        assert_abs_diff_eq!(blind.p_e, (cell(0, 0) + cell(1, 1)) / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn optimal_ir_at_full_blinding_reaches_quantum_max() {
        let stats = postselected_stats_ir(&optimal_ir_2to1(0.0), &EfficiencyModel::new(2, 0.0).unwrap()).unwrap();
        assert_abs_diff_eq!(stats.p_e, quantum_max(2).unwrap(), epsilon = 1e-12);
        assert_abs_diff_eq!(stats.p_b, stats.p_e, epsilon = 1e-12);
        // At η = 0 Eve measures exactly along Bob's honest directions.
        let dir = optimal_ir_2to1(0.0).eve_measurements()[0].direction();
        assert_abs_diff_eq!(dir.alpha(), FRAC_PI_4, epsilon = 1e-12);
    }

    #[test]
    fn optimal_ir_at_eta_one() {
        let stats = postselected_stats_ir(&optimal_ir_2to1(1.0), &EfficiencyModel::new(2, 1.0).unwrap()).unwrap();
        assert_abs_diff_eq!(stats.p_e, 0.75, epsilon = 1e-12);
    }

    #[test]
    fn weights_sum_to_one() {
        for n in [2, 3] {
            for k in 0..=20 {
                let m = EfficiencyModel::new(n, k as f64 / 20.0).unwrap();
                let s: f64 = m.normalized_weights().iter().sum();
                assert_abs_diff_eq!(s, 1.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn model_mismatch_is_rejected() {
        let attack = optimal_ir_2to1(0.5);
        let r = postselected_stats_ir(&attack, &EfficiencyModel::new(3, 0.5).unwrap());
        assert!(matches!(r, Err(Error::SizeMismatch { .. })));
        assert!(attack.conditional_eve(2, 0).is_err());
    }

    #[test]
    fn dm_identity_and_swap_joint_states() {
        let n = 2;
        let eye = DmAttack::new(
            EncodingParams::Fixed2to1,
            vec![Mat4::identity(); n],
            vec![vec![z_basis(); n]; n],
            vec![vec![z_basis(); n]; n],
            DmAttack::default_blank(),
        )
        .unwrap();
        let states = build_states(&EncodingParams::Fixed2to1).unwrap();
        let blank = DmAttack::default_blank();
        for x in 0..4 {
            let j = eye.joint_state(x, 0).unwrap();
            assert!(j.matrix().max_abs_diff(&tensor(states[x].matrix(), blank.matrix())) < 1e-15);
        }
        let swapped = DmAttack::new(
            EncodingParams::Fixed2to1,
            vec![swap(); n],
            vec![vec![z_basis(); n]; n],
            vec![vec![z_basis(); n]; n],
            DmAttack::default_blank(),
        )
        .unwrap();
        for x in 0..4 {
            let j = swapped.joint_state(x, 1).unwrap();
            assert!(j.matrix().max_abs_diff(&tensor(blank.matrix(), states[x].matrix())) < 1e-15);
        }
    }

    #[test]
    fn dm_joint_state_stays_pure() {
        let p: [f64; 16] = core::array::from_fn(|i| ((i * 7 + 3) as f64).sin() * 2.0);
        let u = unitary_from_generator(&p).unwrap();
        let attack = DmAttack::with_optimal_measurements(EncodingParams::Fixed2to1, vec![u; 2]).unwrap();
        for x in 0..4 {
            let j = attack.joint_state(x, 0).unwrap();
            let checked = DensityOperator::try_new(*j.matrix()).unwrap();
            assert_abs_diff_eq!(checked.purity(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn dm_without_entangling_gives_eve_nothing() {
        let honest = honest_bob_measurements(2).unwrap();
        let bob = vec![honest.clone(), honest];
        let attack = DmAttack::new(
            EncodingParams::Fixed2to1,
            vec![Mat4::identity(); 2],
            vec![vec![x_basis(); 2]; 2],
            bob,
            DmAttack::default_blank(),
        )
        .unwrap();
        let model = EfficiencyModel::new(2, 0.3).unwrap();
        let stats = postselected_stats_dm(&attack, &model).unwrap();
        assert_abs_diff_eq!(stats.p_e, 0.5, epsilon = 1e-15);
        let proto = RacProtocol::honest(&EncodingParams::Fixed2to1).unwrap();
        assert_abs_diff_eq!(stats.p_b, success_probability(&proto), epsilon = 1e-14);
    }

    #[test]
    fn dm_swap_is_degenerate_ir() {
        // Eve keeps Alice's qubit and measures it like an IR attacker; Bob
        // only ever sees |0⟩, exactly as if Eve resent |0⟩ whatever she saw.
        let ir_opt = optimal_ir_2to1(0.2);
        let eve = ir_opt.eve_measurements().to_vec();
        let bob_basis = projector_pair_from_bloch(BlochAngles::new(0.9, 0.4).unwrap());
        let dm = DmAttack::new(
            EncodingParams::Fixed2to1,
            vec![swap(); 2],
            eve.iter().map(|m| vec![*m; 2]).collect(),
            vec![vec![bob_basis; 2]; 2],
            DmAttack::default_blank(),
        )
        .unwrap();
        let model = EfficiencyModel::new(2, 0.2).unwrap();
        let dm_stats = postselected_stats_dm(&dm, &model).unwrap();

        // Hand-built IR evaluation of the same strategy.
        let states = build_states(&EncodingParams::Fixed2to1).unwrap();
        let blank = DmAttack::default_blank();
        let mut eve_cells = [0.0; 4];
        let mut bob_cells = [0.0; 4];
        for e in 0..2 {
            for b in 0..2 {
                for (x, rho) in states.iter().enumerate() {
                    let bit = input_bit(x, b, 2);
                    eve_cells[2 * e + b] += eve[e].probability(bit, rho) / 4.0;
                    bob_cells[2 * e + b] += bob_basis.probability(bit, &blank) / 4.0;
                }
            }
        }
        assert_abs_diff_eq!(dm_stats.p_e, model.postselect(&eve_cells), epsilon = 1e-14);
        assert_abs_diff_eq!(dm_stats.p_b, model.postselect(&bob_cells), epsilon = 1e-14);
    }

    #[test]
    fn ir_embeds_into_dm() {
        let ir = IrAttack::new(
            EncodingParams::Fixed3to1,
            vec![
                projector_pair_from_bloch(BlochAngles::new(0.7, 1.0).unwrap()),
                projector_pair_from_bloch(BlochAngles::new(2.0, -1.0).unwrap()),
                projector_pair_from_bloch(BlochAngles::new(1.3, PI / 2.0).unwrap()),
            ],
            (0..3)
                .map(|e| {
                    (0..3)
                        .map(|b| {
                            projector_pair_from_bloch(BlochAngles::new(0.3 * (e + b) as f64, 0.5 * b as f64).unwrap())
                        })
                        .collect()
                })
                .collect(),
        )
        .unwrap();
        let dm = DmAttack::embedding_ir(&ir).unwrap();
        let model = EfficiencyModel::new(3, 0.37).unwrap();
        let a = postselected_stats_ir(&ir, &model).unwrap();
        let b = postselected_stats_dm(&dm, &model).unwrap();
        assert_abs_diff_eq!(a.p_e, b.p_e, epsilon = 1e-12);
        assert_abs_diff_eq!(a.p_b, b.p_b, epsilon = 1e-12);

        let from_generator = unitary_from_generator(&controlled_copy_generator(&ir.eve[1])).unwrap();
        assert!(from_generator.max_abs_diff(&dm.unitaries()[1]) < 1e-12);
    }

    #[test]
    fn joint_effects_marginalize_to_reduced_states() {
        let p: [f64; 16] = core::array::from_fn(|i| ((i * 5 + 1) as f64).cos());
        let u = unitary_from_generator(&p).unwrap();
        let dm = DmAttack::with_optimal_measurements(EncodingParams::Fixed2to1, vec![u, Mat4::identity()]).unwrap();
        let x = 2;
        let (e, b) = (0, 1);
        let bit = input_bit(x, b, 2);
        let joint = dm.joint_state(x, e).unwrap();
        let eve_marg: f64 = (0..2)
            .map(|i| dm.joint_outcome_probability(x, e, b, i, bit).unwrap())
            .sum();
        let direct = dm.eve_measurements()[e][b].probability(bit, &joint.reduced(Subsystem::Second));
        assert_abs_diff_eq!(eve_marg, direct, epsilon = 1e-14);
    }

    #[test]
    fn non_unitary_rejected() {
        let r = DmAttack::new(
            EncodingParams::Fixed2to1,
            vec![Mat4::identity().scale_real(1.1); 2],
            vec![vec![z_basis(); 2]; 2],
            vec![vec![z_basis(); 2]; 2],
            DmAttack::default_blank(),
        );
        assert!(matches!(r, Err(Error::NotUnitary(_))));
    }

    #[test]
    fn margin_examples() {
        let s = ObservedStats {
            p_b: 0.8536,
            p_e: 0.75,
            eta_avg: 1.0,
        };
        assert_abs_diff_eq!(security_margin(&s), 0.1036, epsilon = 1e-12);
        let eq = ObservedStats {
            p_b: 0.7887,
            p_e: 0.7887,
            eta_avg: 1.0 / 3.0,
        };
        assert_eq!(security_margin(&eq), 0.0);
    }
}
