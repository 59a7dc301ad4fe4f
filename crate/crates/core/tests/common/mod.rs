#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use spinmer_core::IntegralSet;

pub fn hubbard_dimer(u: f64, t: f64) -> IntegralSet {
    let mut ints = IntegralSet::zeros(2);
    ints.set_h(0, 1, -t);
    ints.set_g(0, 0, 0, 0, u);
    ints.set_g(1, 1, 1, 1, u);
    ints
}

pub fn dimer_oracle(u: f64, t: f64) -> Vec<f64> {
    let r = (u * u + 16.0 * t * t).sqrt();
    let mut v = vec![(u - r) / 2.0, 0.0, u, (u + r) / 2.0];
    v.sort_by(f64::total_cmp);
    v
}

pub fn random_integrals(norb: usize, rng: &mut ChaCha8Rng) -> IntegralSet {
    let mut ints = IntegralSet::zeros(norb);
    ints.core_energy = rng.gen_range(-1.0..1.0);
    for p in 0..norb {
        for q in 0..=p {
            ints.set_h(p, q, rng.gen_range(-1.0..1.0));
        }
    }
    for p in 0..norb {
        for q in 0..norb {
            for r in 0..norb {
                for s in 0..norb {
                    if (p, q, r, s) <= (q, p, r, s).min((r, s, p, q)).min((p, q, s, r)) {
                        ints.set_g(p, q, r, s, rng.gen_range(-0.5..0.5));
                    }
                }
            }
        }
    }
    ints
}

pub fn random_spinmerism(rng: &mut ChaCha8Rng) -> spinmer_core::models::SpinmerismParams {
    spinmer_core::models::SpinmerismParams {
        rp: spinmer_core::ligandfield::RacahParameters::new(
            rng.gen_range(700.0..1000.0),
            rng.gen_range(3000.0..4500.0),
            rng.gen_range(0.0..3000.0),
        )
        .unwrap(),
        dq: rng.gen_range(1500.0..2600.0),
        eps_l: rng.gen_range(4000.0..12000.0),
        u_l: rng.gen_range(30000.0..90000.0),
        t_ml: rng.gen_range(0.0..4000.0),
        k_ml: rng.gen_range(0.0..500.0),
        k_ll: rng.gen_range(-200.0..200.0),
    }
}
