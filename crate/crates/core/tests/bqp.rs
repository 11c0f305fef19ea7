mod common;

use proptest::prelude::*;
use qla_disorder::bqp::{extend_circuit, CircuitGate, Verdict};
use qla_disorder::linalg::C64;
use qla_disorder::{clock_construction, ldos_decision, CMatrix, Error, GateCircuit};

fn rotation(theta: f64) -> GateCircuit {
    let (s, c) = theta.sin_cos();
    let m = CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(c, 0.0),
            C64::new(-s, 0.0),
            C64::new(s, 0.0),
            C64::new(c, 0.0),
        ],
    );
    GateCircuit::new(1, vec![CircuitGate::new("R", vec![0], m).unwrap()], vec![]).unwrap()
}

/// `−η Im[(ω + iη − h)^{-1}]_jj` from the eigenpairs of `h`.
fn ldos_oracle(h: &CMatrix, omega: f64, eta: f64, j: usize) -> f64 {
    let (vals, vecs) = common::eigh(h);
    vals.iter()
        .enumerate()
        .map(|(k, &l)| vecs[(j, k)].norm_sqr() * eta * eta / ((omega - l).powi(2) + eta * eta))
        .sum()
}

#[test]
fn not_gate_is_yes_identity_is_no() {
    let yes = GateCircuit::parse("qubits 1\nX 0\n").unwrap();
    let no = GateCircuit::parse("qubits 1\nI 0\n").unwrap();
    let dy = ldos_decision(&clock_construction(&yes).unwrap(), &yes).unwrap();
    let dn = ldos_decision(&clock_construction(&no).unwrap(), &no).unwrap();
    assert_eq!(dy.verdict, Verdict::Yes);
    assert_eq!(dn.verdict, Verdict::No);
    assert!((dy.output_probability - 1.0).abs() < 1e-15);
    assert!(dn.output_probability < 1e-15);
}

#[test]
fn input_bits_select_the_start_state() {
    let c = GateCircuit::parse("qubits 2\ninput 1\nCNOT 0 1\nSWAP 0 1\n").unwrap();
    // |10⟩ → CNOT → |11⟩ → SWAP → |11⟩: the output qubit reads 1.
    assert_eq!(c.input_index(), 2);
    let d = ldos_decision(&clock_construction(&c).unwrap(), &c).unwrap();
    assert_eq!(d.index, 2);
    assert_eq!(d.verdict, Verdict::Yes);
}

#[test]
fn two_gate_product_extends_to_five_clock_states() {
    let c = GateCircuit::parse("qubits 2\nH 0\nCZ 0 1\n").unwrap();
    let v = extend_circuit(&c).unwrap();
    assert_eq!(v.len(), 5);
    assert_eq!(v[2].name, "Z");
    assert_eq!(v[3].matrix, v[1].matrix.adjoint());
    let k = clock_construction(&c).unwrap();
    assert_eq!(k.clock_states, 5);
    assert_eq!(k.clock_qubits, 3);
    assert_eq!(k.h.nrows(), 5 * 4);
    assert!(k.gates_two_sparse);
    assert!(k.row_sparsity <= 4);
}

#[test]
fn spectrum_matches_clock_cosines() {
    let c = GateCircuit::random(3, 3, vec![true, false], 17).unwrap();
    let k = clock_construction(&c).unwrap();
    let (mut vals, _) = common::eigh(&k.h);
    vals.sort_by(f64::total_cmp);
    for (a, b) in vals.iter().zip(k.expected_spectrum()) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn decision_value_matches_eigen_oracle() {
    for key in 0..4 {
        let c = GateCircuit::random(2, 2 + key as usize, vec![key % 2 == 1], key).unwrap();
        let k = clock_construction(&c).unwrap();
        let d = ldos_decision(&k, &c).unwrap();
        let want = ldos_oracle(&k.h, k.omega, k.eta, d.index);
        assert!((d.value - want).abs() < 1e-12, "key {key}");
        assert!((d.margin - (d.value - 1.0 / k.clock_states as f64).abs()).abs() < 1e-15);
    }
}

#[test]
fn decision_parameters_follow_clock_size() {
    let k = clock_construction(&GateCircuit::parse("qubits 1\nH 0\nH 0\n").unwrap()).unwrap();
    let m = 5.0;
    assert!((k.omega + (2.0 * std::f64::consts::PI / m).cos()).abs() < 1e-15);
    assert!((k.epsilon - 1.0 / (6.0 * m)).abs() < 1e-15);
    assert!((k.eta - k.c * k.delta_gap).abs() < 1e-15);
    let k1 = clock_construction(&GateCircuit::parse("qubits 1\nH 0\n").unwrap()).unwrap();
    assert!((k1.omega - (std::f64::consts::PI / 3.0).cos()).abs() < 1e-15);
}

#[test]
fn parse_errors_carry_line_numbers() {
    let cases = [
        ("qubits 1\nX 3\n", 0),
        ("qubits 1\n\nU1 0 1 0 0 0\n", 3),
        ("qubits 1\nU1 0 1 0 1 0 0 0 1 0\n", 2),
        ("qubits 2\ninput 2\n", 2),
        ("X 0\n", 0),
    ];
    for (text, line) in cases {
        match GateCircuit::parse(text) {
            Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
            Err(Error::Contract(_)) => assert_eq!(line, 0, "{text:?}"),
            other => panic!("{text:?}: unexpected {other:?}"),
        }
    }
}

#[test]
fn explicit_two_qubit_matrix_parses() {
    let mut text = String::from("qubits 2\n# swap written out\nU2 0 1");
    for (i, j) in (0..4).flat_map(|i| (0..4).map(move |j| (i, j))) {
        let one = matches!((i, j), (0, 0) | (1, 2) | (2, 1) | (3, 3));
        text.push_str(if one { " 1 0" } else { " 0 0" });
    }
    let c = GateCircuit::parse(&text).unwrap();
    let swap = GateCircuit::parse("qubits 2\nSWAP 0 1").unwrap();
    assert_eq!(c.unitary(), swap.unitary());
}

proptest! {
    #![proptest_config(common::proptest_config(24))]

    // The start-site LDOS is affine in the output probability, so the
    // decision separates YES from NO by how likely the circuit outputs 1.
    #[test]
    fn ldos_is_affine_in_output_probability(t1 in 0.0f64..1.5, t2 in 0.0f64..1.5) {
        let value = |t: f64| {
            let c = rotation(t);
            let d = ldos_decision(&clock_construction(&c).unwrap(), &c).unwrap();
            (d.output_probability, d.value)
        };
        let (p0, v0) = value(0.0);
        let (p1, v1) = value(std::f64::consts::FRAC_PI_2);
        let slope = (v1 - v0) / (p1 - p0);
        prop_assert!(slope > 0.0);
        for t in [t1, t2] {
            let (p, v) = value(t);
            prop_assert!((v - (v0 + slope * (p - p0))).abs() < 1e-12);
        }
    }

    #[test]
    fn random_circuits_are_unitary(q in 2usize..5, t in 1usize..6, key in any::<u64>()) {
        let c = GateCircuit::random(q, t, vec![], key).unwrap();
        let u = c.unitary();
        let dim = 1 << q;
        prop_assert!(common::max_diff(&(u.adjoint() * &u), &CMatrix::identity(dim, dim)) < 1e-12);
        let p = c.output_probability();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&p));
    }
}
