//! Single-erasure recovery circuits for the two small codes.
//!
//! Both recoveries act on the stochastic purification of the erased block:
//! the erased qudit has been secretly projected, so the circuit must return
//! the logical content on surviving carriers for every possible hidden
//! outcome.

use rand::Rng;

use super::state::{Basis, GateOp, MeasurementRecord, QuditState};
use super::{SimError, SimResult};

fn require_single_erasure(state: &QuditState, erased: usize, n: usize, d: u64) -> SimResult<()> {
    if state.n() != n || state.d() != d {
        return Err(SimError::BadQudit {
            index: erased,
            n: state.n(),
        });
    }
    let flags = state.erased_indices();
    if flags.len() > 1 {
        return Err(SimError::Uncorrectable {
            erased: flags.len(),
            radius: 1,
        });
    }
    if flags != vec![erased] {
        return Err(SimError::BadQudit {
            index: erased,
            n,
        });
    }
    Ok(())
}

/// Re-localizes the logical qutrit of an erased `[[3,1,2]]_3` block by two
/// modular additions between the surviving pair: with qudit `e` erased, the
/// survivors are `s1 = e+1`, `s2 = e+2` (mod 3), and the circuit is
/// `SUM(s1 -> s2)` followed by `SUM(s2 -> s1)`. Returns the index of the
/// qutrit now carrying the logical state.
pub fn recover_three_qutrit(state: &mut QuditState, erased: usize) -> SimResult<usize> {
    require_single_erasure(state, erased, 3, 3)?;
    let s1 = (erased + 1) % 3;
    let s2 = (erased + 2) % 3;
    state.apply_gate(&GateOp::Sum {
        control: s1,
        target: s2,
    })?;
    state.apply_gate(&GateOp::Sum {
        control: s2,
        target: s1,
    })?;
    Ok(s1)
}

/// Decodes an erased `[[4,2,2]]` block back to two bare qubits.
///
/// The erased qubit's pair partner serves as the helper: both qubits of the
/// other pair are CNOT-ed onto it and it is measured in Z. A pair of CNOTs
/// then aligns the surviving pair's parity frame, a Hadamard undoes the
/// remaining conjugate-basis encoding, and the measurement outcome
/// conditions a phase fix. Erasing inside a pair mirrors the code under the
/// in-pair swap, which flips the sign of `|11>_L`, so odd positions need an
/// extra logical CZ. Returns the measurement record and the two qubits now
/// holding logical qubits 1 and 2.
pub fn recover_four_qubit<R: Rng + ?Sized>(
    state: &mut QuditState,
    erased: usize,
    rng: &mut R,
) -> SimResult<(MeasurementRecord, [usize; 2])> {
    require_single_erasure(state, erased, 4, 2)?;
    let helper = erased ^ 1;
    let (o_a, o_b) = if erased < 2 { (2, 3) } else { (0, 1) };

    state.apply_gate(&GateOp::Sum {
        control: o_a,
        target: helper,
    })?;
    state.apply_gate(&GateOp::Sum {
        control: o_b,
        target: helper,
    })?;
    let record = state.measure(helper, Basis::Z, rng)?;

    state.apply_gate(&GateOp::Sum {
        control: o_b,
        target: o_a,
    })?;
    state.apply_gate(&GateOp::Sum {
        control: o_a,
        target: o_b,
    })?;
    state.apply_gate(&GateOp::Fourier { target: o_b })?;
    if record.outcome == 1 {
        state.apply_gate(&GateOp::PauliZ {
            target: o_b,
            power: 1,
        })?;
    }
    if erased % 2 == 1 {
        state.apply_gate(&GateOp::Cz { a: o_a, b: o_b })?;
    }
    Ok((record, [o_a, o_b]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::three_qutrit_code;
    use crate::mc::substream;
    use crate::simulator::test_util::random_logical;
    use num_complex::Complex64;

    #[test]
    fn three_qutrit_basis_state_recovery() {
        let code = three_qutrit_code();
        let logical = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        ];
        let encoded = QuditState::encode_qpyc(&code, &logical).unwrap();
        for (_, mut branch) in encoded.erase_branches(0).unwrap() {
            let carrier = recover_three_qutrit(&mut branch, 0).unwrap();
            let fid = branch.fidelity_on(&[carrier], &logical).unwrap();
            assert!((fid - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn three_qutrit_every_position_and_branch() {
        let code = three_qutrit_code();
        let mut rng = substream(21, 0);
        for _ in 0..10 {
            let logical = random_logical(3, &mut rng);
            let encoded = QuditState::encode_qpyc(&code, &logical).unwrap();
            for erased in 0..3 {
                let branches = encoded.erase_branches(erased).unwrap();
                assert_eq!(branches.len(), 3);
                for (_, mut branch) in branches {
                    let carrier = recover_three_qutrit(&mut branch, erased).unwrap();
                    let fid = branch.fidelity_on(&[carrier], &logical).unwrap();
                    assert!(
                        fid >= 1.0 - 1e-9,
                        "erased {erased}: fidelity {fid}"
                    );
                }
            }
        }
    }

    #[test]
    fn three_qutrit_rejects_two_erasures() {
        let code = three_qutrit_code();
        let mut rng = substream(22, 0);
        let logical = random_logical(3, &mut rng);
        let mut s = QuditState::encode_qpyc(&code, &logical).unwrap();
        s.erase(0, &mut rng).unwrap();
        s.erase(1, &mut rng).unwrap();
        assert!(matches!(
            recover_three_qutrit(&mut s, 0),
            Err(SimError::Uncorrectable { erased: 2, .. })
        ));
    }

    #[test]
    fn four_qubit_zero_state_recovery() {
        let logical = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        ];
        let encoded = QuditState::encode_four_qubit(&logical).unwrap();
        let mut rng = substream(23, 0);
        for (_, mut branch) in encoded.erase_branches(0).unwrap() {
            let (_, carriers) = recover_four_qubit(&mut branch, 0, &mut rng).unwrap();
            let fid = branch.fidelity_on(&carriers, &logical).unwrap();
            assert!((fid - 1.0).abs() < 1e-10, "{fid}");
        }
    }

    #[test]
    fn four_qubit_every_position_and_branch() {
        let mut rng = substream(24, 0);
        for _ in 0..10 {
            let logical = random_logical(4, &mut rng);
            let encoded = QuditState::encode_four_qubit(&logical).unwrap();
            for erased in 0..4 {
                let branches = encoded.erase_branches(erased).unwrap();
                assert_eq!(branches.len(), 2, "both hidden outcomes occur");
                for (_, mut branch) in branches {
                    let (_, carriers) = recover_four_qubit(&mut branch, erased, &mut rng).unwrap();
                    let fid = branch.fidelity_on(&carriers, &logical).unwrap();
                    assert!(
                        fid >= 1.0 - 1e-9,
                        "erased {erased}: fidelity {fid}"
                    );
                }
            }
        }
    }

    #[test]
    fn four_qubit_helper_outcome_reveals_hidden_digit() {
        let mut rng = substream(25, 0);
        let logical = random_logical(4, &mut rng);
        let encoded = QuditState::encode_four_qubit(&logical).unwrap();
        for (_, mut branch) in encoded.erase_branches(0).unwrap() {
            let hidden = branch.definite_digit(0).unwrap();
            let (record, _) = recover_four_qubit(&mut branch, 0, &mut rng).unwrap();
            assert_eq!(record.outcome, hidden);
        }
    }
}
