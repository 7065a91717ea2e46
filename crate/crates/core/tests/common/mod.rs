//! Structural checks shared by the property tests and the acceptance run.
//! Each takes raw random parameters and returns the largest deviation from
//! the identity it checks.

#![allow(dead_code)]

use qracsec_core::attack::{postselected_stats_dm, postselected_stats_ir, DmAttack, EfficiencyModel, IrAttack};
use qracsec_core::protocol::{success_probability, EncodingParams, RacProtocol};
use qracsec_core::qmath::{
    bloch_vector_of, born_probability, exp_i_hermitian, operator_from_bloch_vector, partial_trace,
    projector_pair_from_bloch, state_from_bloch, tensor, unitary_from_generator, BlochAngles, DensityOperator, Mat2,
    Matrix, ProjectorPair, Subsystem, C64,
};

pub fn angles(a: f64, b: f64) -> BlochAngles {
    BlochAngles::new(a, b).expect("finite angles")
}

pub fn measurement(a: f64, b: f64) -> ProjectorPair {
    projector_pair_from_bloch(angles(a, b))
}

/// Mixed qubit state with Bloch vector `r` scaled into the unit ball.
pub fn mixed_state(r: [f64; 3]) -> DensityOperator<2> {
    let len = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
    let s = if len > 1.0 { 1.0 / len } else { 1.0 };
    DensityOperator::try_new(operator_from_bloch_vector([r[0] * s, r[1] * s, r[2] * s])).unwrap()
}

/// `p0 + p1 = I`, `p_i² = p_i`, `p0 p1 = 0`.
pub fn projector_completeness(a: f64, b: f64) -> f64 {
    let m = measurement(a, b);
    let ortho = (*m.p0() * *m.p1()).max_abs_diff(&Mat2::zeros());
    m.completeness_error().max(m.idempotence_error()).max(ortho)
}

/// Outcome probabilities of a qubit measurement on a mixed state, and of a
/// product measurement on an entangled two-qubit state, sum to one and
/// stay in `[0, 1]`.
pub fn born_normalization(r: [f64; 3], a: f64, b: f64, gen: &[f64; 16], a2: f64, b2: f64) -> f64 {
    let m = measurement(a, b);
    let rho = mixed_state(r);
    let p0 = born_probability(m.p0(), &rho).unwrap();
    let p1 = born_probability(m.p1(), &rho).unwrap();
    let mut err = (p0 + p1 - 1.0).abs();

    let u = unitary_from_generator(gen).unwrap();
    let joint = DensityOperator::try_new(tensor(rho.matrix(), state_from_bloch(angles(a2, b2)).matrix()))
        .unwrap()
        .evolve(&u);
    let m2 = measurement(b2, a);
    let mut total = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let p = born_probability(&tensor(m.effect(i), m2.effect(j)), &joint).unwrap();
            err = err.max((-p).max(p - 1.0).max(0.0));
            total += p;
        }
    }
    err.max((total - 1.0).abs())
}

/// `Tr_B(ρ_A ⊗ ρ_B) = ρ_A`, `Tr_A(ρ_A ⊗ ρ_B) = ρ_B`, and for an entangled
/// `ρ`: `Tr(ρ (M ⊗ I)) = Tr(Tr_B(ρ) M)`, `Tr(ρ (I ⊗ M)) = Tr(Tr_A(ρ) M)`.
pub fn partial_trace_identities(ra: [f64; 3], rb: [f64; 3], gen: &[f64; 16], a: f64, b: f64) -> f64 {
    let rho_a = mixed_state(ra);
    let rho_b = mixed_state(rb);
    let prod = tensor(rho_a.matrix(), rho_b.matrix());
    let err = partial_trace(&prod, Subsystem::First)
        .max_abs_diff(rho_a.matrix())
        .max(partial_trace(&prod, Subsystem::Second).max_abs_diff(rho_b.matrix()));

    let u = unitary_from_generator(gen).unwrap();
    let rho = DensityOperator::try_new(prod).unwrap().evolve(&u);
    let m = *measurement(a, b).p0();
    let id = Mat2::identity();
    let lhs_a = rho.matrix().trace_product(&tensor(&m, &id));
    let rhs_a = partial_trace(rho.matrix(), Subsystem::First).trace_product(&m);
    let lhs_b = rho.matrix().trace_product(&tensor(&id, &m));
    let rhs_b = partial_trace(rho.matrix(), Subsystem::Second).trace_product(&m);
    let tr = (partial_trace(rho.matrix(), Subsystem::First).trace() - C64::new(1.0, 0.0)).norm();
    err.max((lhs_a - rhs_a).norm()).max((lhs_b - rhs_b).norm()).max(tr)
}

/// `U†U = I` and `|det U| = 1` for `U = exp(iH)`.
pub fn unitarity(gen: &[f64; 16]) -> f64 {
    let u = unitary_from_generator(gen).unwrap();
    u.unitarity_error().max((u.determinant().norm() - 1.0).abs())
}

/// Normalized cell weights sum to one and post-selecting a constant table
/// returns the constant.
pub fn weight_normalization(n: usize, eta: f64, c: f64) -> f64 {
    let model = EfficiencyModel::new(n, eta).unwrap();
    let sum: f64 = model.normalized_weights().iter().sum();
    let table = vec![c; n * n];
    let avg = model.eta_avg();
    let mut err = (sum - 1.0).abs().max((model.postselect(&table) - c).abs());
    if avg < 1.0 / n as f64 - 1e-15 || avg > 1.0 + 1e-15 {
        err = err.max(1.0);
    }
    err
}

/// Statistics of a random intercept/resend attack and of its
/// delayed-measurement embedding coincide. `p` needs
/// `2·2ⁿ + 2n + 2n²` angles.
pub fn ir_dm_embedding(n: usize, eta: f64, p: &[f64]) -> f64 {
    let inputs = 1 << n;
    let (states, rest) = p.split_at(2 * inputs);
    let (eve, bob) = rest.split_at(2 * n);
    let encoding = EncodingParams::General(states.chunks(2).map(|c| angles(c[0], c[1])).collect());
    let eve: Vec<ProjectorPair> = eve.chunks(2).map(|c| measurement(c[0], c[1])).collect();
    let bob: Vec<Vec<ProjectorPair>> = bob
        .chunks(2 * n)
        .map(|row| row.chunks(2).map(|c| measurement(c[0], c[1])).collect())
        .collect();
    let ir = IrAttack::new(encoding, eve, bob).unwrap();
    let dm = DmAttack::embedding_ir(&ir).unwrap();
    let model = EfficiencyModel::new(n, eta).unwrap();
    let a = postselected_stats_ir(&ir, &model).unwrap();
    let b = postselected_stats_dm(&dm, &model).unwrap();
    (a.p_b - b.p_b)
        .abs()
        .max((a.p_e - b.p_e).abs())
        .max((a.eta_avg - b.eta_avg).abs())
}

pub fn embedding_param_count(n: usize) -> usize {
    2 * (1 << n) + 2 * n + 2 * n * n
}

/// The average success does not change when every state and measurement
/// is conjugated by the same qubit unitary. `p` needs `2·2ⁿ + 2n` angles.
pub fn unitary_invariance(n: usize, p: &[f64], h: [f64; 4]) -> f64 {
    let inputs = 1 << n;
    let states: Vec<DensityOperator<2>> = p[..2 * inputs]
        .chunks(2)
        .map(|c| state_from_bloch(angles(c[0], c[1])))
        .collect();
    let bob: Vec<ProjectorPair> = p[2 * inputs..].chunks(2).map(|c| measurement(c[0], c[1])).collect();
    let before = success_probability(&RacProtocol::new(states.clone(), bob.clone()).unwrap());

    let gen = Matrix([
        [C64::new(h[0], 0.0), C64::new(h[2], h[3])],
        [C64::new(h[2], -h[3]), C64::new(h[1], 0.0)],
    ]);
    let v = exp_i_hermitian(&gen);
    let states2: Vec<DensityOperator<2>> = states.iter().map(|s| s.evolve(&v)).collect();
    let bob2: Vec<ProjectorPair> = bob
        .iter()
        .map(|m| {
            let rotated = m.p0().conjugate_by(&v);
            projector_pair_from_bloch(BlochAngles::from_vector(bloch_vector_of(&rotated)))
        })
        .collect();
    let after = success_probability(&RacProtocol::new(states2, bob2).unwrap());
    (before - after).abs()
}

/// Best average success of any deterministic one-bit strategy, by
/// enumerating every encoder `x -> bit` and every decoder `(b, bit) -> guess`.
pub fn classical_bruteforce(n: usize) -> f64 {
    use qracsec_core::protocol::input_bit;
    let inputs = 1usize << n;
    let mut best = 0usize;
    for enc in 0u32..(1u32 << inputs) {
        // For each bit the best of the four decoders is independent of the
        // others, but all 4ⁿ combinations are scored anyway.
        for dec in 0u32..(1u32 << (2 * n)) {
            let mut hits = 0usize;
            for x in 0..inputs {
                let sent = ((enc >> x) & 1) as usize;
                for b in 0..n {
                    let guess = ((dec >> (2 * b + sent)) & 1) as usize;
                    hits += usize::from(guess == input_bit(x, b, n));
                }
            }
            best = best.max(hits);
        }
    }
    best as f64 / (inputs * n) as f64
}

/// Exhaustive search over Eve's two measurement directions restricted to
/// the XZ plane (where the standard 2→1 states live), `step` radians apart
/// on `[0, 2π)`. Bob mirrors Eve. Returns the best post-selected `P_E`
/// and the maximizing angles.
pub fn grid_oracle_2to1(eta: f64, step: f64) -> (f64, f64, f64) {
    use qracsec_core::protocol::{build_states, input_bit};
    let model = EfficiencyModel::new(2, eta).unwrap();
    let bloch: Vec<[f64; 3]> = build_states(&EncodingParams::Fixed2to1)
        .unwrap()
        .iter()
        .map(|s| s.bloch_vector())
        .collect();
    let mut v = [[0.0f64; 3]; 2];
    for (x, r) in bloch.iter().enumerate() {
        for (b, vb) in v.iter_mut().enumerate() {
            let s = if input_bit(x, b, 2) == 0 { 0.25 } else { -0.25 };
            for k in 0..3 {
                vb[k] += s * r[k];
            }
        }
    }
    assert!(v.iter().all(|vb| vb[1].abs() < 1e-15), "states left the XZ plane");

    let steps = (2.0 * std::f64::consts::PI / step).ceil() as usize;
    let dirs: Vec<(f64, f64)> = (0..steps)
        .map(|i| ((i as f64 * step).sin(), (i as f64 * step).cos()))
        .collect();
    let w = |e: usize, b: usize| model.weight(e, b);
    let total = model.total_weight();
    let (mut best, mut arg) = (f64::NEG_INFINITY, (0, 0));
    for (i, &(s0, c0)) in dirs.iter().enumerate() {
        let eve0 = w(0, 0) * (s0 * v[0][0] + c0 * v[0][2]) + w(0, 1) * (s0 * v[1][0] + c0 * v[1][2]);
        for (j, &(s1, c1)) in dirs.iter().enumerate() {
            let eve1 = w(1, 0) * (s1 * v[0][0] + c1 * v[0][2]) + w(1, 1) * (s1 * v[1][0] + c1 * v[1][2]);
            let pe = 0.5 + 0.5 * (eve0 + eve1) / total;
            if pe > best {
                best = pe;
                arg = (i, j);
            }
        }
    }
    (best, arg.0 as f64 * step, arg.1 as f64 * step)
}

/// `P_E` of the mirrored intercept/resend attack with Eve measuring along
/// XZ-plane angles `t0`, `t1`, evaluated through the attack module.
pub fn ir_2to1_xz(eta: f64, t0: f64, t1: f64) -> f64 {
    let eve = vec![measurement(t0, 0.0), measurement(t1, 0.0)];
    let attack = IrAttack::mirrored(EncodingParams::Fixed2to1, eve).unwrap();
    postselected_stats_ir(&attack, &EfficiencyModel::new(2, eta).unwrap())
        .unwrap()
        .p_e
}
