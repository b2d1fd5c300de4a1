use tnq::mpo::{build_mpo, OperatorSpec};
use tnq::mps::Mps;
use tnq::stab::{PauliAxis, PauliString};
use tnq::tebd::{evolve, trotterize, EvolutionMode};
use tnq::tensor::{contract, C64, TruncationPolicy};

fn main() {
    let n = 8;
    let spec = OperatorSpec::Xxz { n, delta: 1.0 };
    let h = build_mpo(&spec).unwrap().to_dense();
    let bits: Vec<u8> = (0..n).map(|j| (j % 2) as u8).collect();
    let init = Mps::basis_state(&bits).unwrap();
    for dt in [0.01f64, 0.005] {
        let steps = (1.0 / dt).round() as usize;
        let plan = trotterize(&spec, dt, 2, EvolutionMode::Real).unwrap();
        let (out, _) = evolve(&init, &plan, steps, &TruncationPolicy::unlimited()).unwrap();
        let u = h.expm_hermitian(C64::new(0.0, -1.0)).unwrap();
        let v = contract(&u, &[1], &init.to_vector(), &[0]).unwrap();
        let mut max_err: f64 = 0.0;
        for j in 0..n {
            let z = PauliString::single(n, j, PauliAxis::Z);
            let m = out.expect_pauli_string(&z).unwrap();
            let zv = contract(&z.dense(), &[1], &v, &[0]).unwrap();
            let d = contract(&v.conj(), &[0], &zv, &[0]).unwrap().data()[0].re;
            max_err = max_err.max((m - d).abs());
        }
        println!("dt={dt}: max |<Z>| err = {max_err:.4e}, max bond {}", out.max_bond());
    }
}
