use nalgebra::DMatrix;
use proptest::prelude::*;
use tpc_core::analysis::{fidelity_bound, Estimate};
use tpc_core::optics::{ArrivalClass, DetectionPort};
use tpc_core::qsim::{c, Operator, QuantumState, Subsystem, C64};
use tpc_core::{read_records, write_records, ClickRecord, PrepSign};

fn density(entries: &[(f64, f64)], dim: usize) -> DMatrix<C64> {
    let g = DMatrix::from_fn(dim, dim, |i, j| {
        let (re, im) = entries[i * dim + j];
        c(re, im)
    });
    let rho = &g * g.adjoint();
    let tr = rho.trace();
    rho / tr
}

fn entries(dim: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim * dim)
        .prop_filter("nonzero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn bound_never_exceeds_fidelity(e in entries(4)) {
        let rho = density(&e, 4);
        let d = [rho[(0, 0)].re, rho[(1, 1)].re, rho[(2, 2)].re, rho[(3, 3)].re];
        let cxx = 2.0 * (rho[(0, 3)].re + rho[(1, 2)].re);
        let f = 0.5 * (d[1] + d[2] + 2.0 * rho[(1, 2)].re);
        prop_assert!(fidelity_bound(d, cxx) <= f + 1e-10);
    }

    #[test]
    fn partial_trace_of_product(a in entries(2), b in entries(3)) {
        let ra = density(&a, 2);
        let rb = density(&b, 3);
        let sa = QuantumState::mixed(vec![Subsystem::new("a", 2).unwrap()], ra.clone()).unwrap();
        let sb = QuantumState::mixed(vec![Subsystem::new("b", 3).unwrap()], rb.clone()).unwrap();
        let joint = sa.tensor(&sb).unwrap();
        let back_a = joint.partial_trace(&["a"]).unwrap().density_matrix();
        let back_b = joint.partial_trace(&["b"]).unwrap().density_matrix();
        prop_assert!((back_a - ra).norm() < 1e-10);
        prop_assert!((back_b - rb).norm() < 1e-10);
    }

    #[test]
    fn unitary_preserves_trace(e in entries(3), theta in -3.2f64..3.2) {
        let rho = density(&e, 3);
        let s = QuantumState::mixed(vec![Subsystem::new("q", 3).unwrap()], rho).unwrap();
        let u = tpc_core::qsim::subspace_ry(theta, 3, 0, 2);
        let out = s.apply(&Operator::new(u, &["q"]).unwrap()).unwrap();
        prop_assert!((out.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn background_subtraction_inverts_mixing(c0 in -1.0f64..1.0, b in 0.0f64..0.95) {
        let mixed = Estimate::new((1.0 - b) * c0, 0.01);
        let back = tpc_core::analysis::subtract_background(mixed, b).unwrap();
        prop_assert!((back.value - c0).abs() < 1e-9);
    }

    #[test]
    fn records_round_trip(
        rows in prop::collection::vec((0u64..1_000_000, 0usize..5, 0usize..4, 0.0f64..1e5, -3.0f64..3.0, any::<bool>(), any::<bool>()), 0..40)
    ) {
        let ports = [DetectionPort::D, DetectionPort::A, DetectionPort::R, DetectionPort::L, DetectionPort::Z];
        let classes = [ArrivalClass::EarlyRevealing, ArrivalClass::Erased, ArrivalClass::LateRevealing, ArrivalClass::Invalid];
        let records: Vec<ClickRecord> = rows.iter().map(|&(id, p, k, t, ph, plus, click)| ClickRecord {
            cycle_id: id,
            port: ports[p],
            arrival_class: classes[k],
            t_ns: (t * 1e3).round() / 1e3,
            phase_rad: (ph * 1e6).round() / 1e6,
            prep_sign: if plus { PrepSign::Plus } else { PrepSign::Minus },
            readout_click: click,
        }).collect();
        let mut buf = Vec::new();
        write_records(&mut buf, &records).unwrap();
        let back = read_records(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), records.len());
        for (x, y) in records.iter().zip(&back) {
            prop_assert_eq!(x.cycle_id, y.cycle_id);
            prop_assert_eq!(x.port, y.port);
            prop_assert_eq!(x.arrival_class, y.arrival_class);
            prop_assert!((x.t_ns - y.t_ns).abs() < 1e-6);
            prop_assert!((x.phase_rad - y.phase_rad).abs() < 1e-9);
            prop_assert_eq!(x.prep_sign, y.prep_sign);
            prop_assert_eq!(x.readout_click, y.readout_click);
        }
    }
}
