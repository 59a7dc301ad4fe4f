use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spinmer_core::eigensolve::{assign_spin, diagonalize, DEGENERACY_TOL, SPIN_TOL};
use spinmer_core::secondq::{build_hamiltonian, build_total_s2, raising};
use spinmer_core::spinproj::{build_projectors, coupled_weights_oracle, joint_decompose, SpinProjectorSet};
use spinmer_core::{Determinant, Fragment, SectorBasis, SectorSpec};

mod common;
use common::random_integrals;

fn factorial(n: i32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Racah's closed form for ⟨ja ma; jb mb | j m⟩, all arguments doubled.
fn clebsch_gordan(ja: i32, ma: i32, jb: i32, mb: i32, j: i32, m: i32) -> f64 {
    if ma + mb != m {
        return 0.0;
    }
    let h = |x: i32| x / 2;
    let pre = ((j + 1) as f64 * factorial(h(j + ja - jb)) * factorial(h(j - ja + jb)) * factorial(h(ja + jb - j))
        / factorial(h(ja + jb + j) + 1))
    .sqrt();
    let norm = (factorial(h(j + m))
        * factorial(h(j - m))
        * factorial(h(ja - ma))
        * factorial(h(ja + ma))
        * factorial(h(jb - mb))
        * factorial(h(jb + mb)))
    .sqrt();
    let mut sum = 0.0;
    for k in 0..=h(ja + jb - j) {
        let args = [h(ja + jb - j) - k, h(ja - ma) - k, h(jb + mb) - k, h(j - jb + ma) + k, h(j - ja - mb) + k];
        if args.iter().any(|&a| a < 0) {
            continue;
        }
        let denom: f64 = factorial(k) * args.iter().map(|&a| factorial(a)).product::<f64>();
        sum += if k % 2 == 0 { 1.0 } else { -1.0 } / denom;
    }
    pre * norm * sum
}

#[test]
fn oracle_matches_racah_formula() {
    for ja in 0i32..=4 {
        for jb in 0i32..=4 {
            let mut j = (ja - jb).abs();
            while j <= ja + jb {
                let mut m = -j;
                while m <= j {
                    let state = coupled_weights_oracle(ja as u32, jb as u32, j as u32, m).unwrap();
                    let mut ma = -ja;
                    while ma <= ja {
                        let mb = m - ma;
                        let want = clebsch_gordan(ja, ma, jb, mb, j, m);
                        let got = state.amplitudes.get(&(ma, mb)).copied().unwrap_or(0.0);
                        assert!((got - want).abs() < 1e-12, "ja={ja} jb={jb} j={j} m={m} ma={ma}: {got} vs {want}");
                        ma += 2;
                    }
                    m += 2;
                }
                j += 2;
            }
        }
    }
}

#[test]
fn oracle_two_one_to_two_at_top() {
    let w = coupled_weights_oracle(4, 2, 4, 4).unwrap().weights();
    assert!((w[&(4, 0)] - 2.0 / 3.0).abs() < 1e-14);
    assert!((w[&(2, 2)] - 1.0 / 3.0).abs() < 1e-14);
}

const A: [usize; 5] = [0, 2, 3, 5, 6];
const B: [usize; 2] = [1, 4];

/// A fragment in its highest-weight state: `twice_s` up electrons in its first
/// orbitals and `doubles` doubly occupied orbitals at the end.
fn highest_weight(orbitals: &[usize], twice_s: usize, doubles: usize) -> (u32, u32) {
    let n = orbitals.len();
    assert!(twice_s + doubles <= n);
    let mut alpha = 0;
    let mut beta = 0;
    for &p in &orbitals[..twice_s] {
        alpha |= 1 << p;
    }
    for &p in &orbitals[n - doubles..] {
        alpha |= 1 << p;
        beta |= 1 << p;
    }
    (alpha, beta)
}

struct Lowerer {
    bases: HashMap<SectorSpec, SectorBasis>,
}

impl Lowerer {
    fn basis(&mut self, spec: SectorSpec) -> &SectorBasis {
        self.bases.entry(spec).or_insert_with(|| SectorBasis::build(spec).unwrap())
    }

    /// `(Ŝ⁻_frag)^steps` applied to `v`, normalized.
    fn lower(&mut self, spec: SectorSpec, v: Vec<f64>, orbitals: &[usize], steps: usize) -> (SectorSpec, Vec<f64>) {
        let (mut spec, mut v) = (spec, v);
        for _ in 0..steps {
            let down = spec.lowered().unwrap();
            let source = self.basis(spec).clone();
            let target = self.basis(down).clone();
            let l = raising(&target, &source, orbitals).transpose();
            let mut w = l.matvec(&v);
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            w.iter_mut().for_each(|x| *x /= norm);
            spec = down;
            v = w;
        }
        (spec, v)
    }
}

struct Local {
    twice_s: usize,
    doubles: usize,
}

/// `Σ c(m_A, m_B) |S_A m_A⟩|S_B m_B⟩` in the 7-orbital determinant space, with
/// the local states generated by fragment lowering operators.
fn coupled_state(lw: &mut Lowerer, a: &Local, b: &Local, twice_s: u32, twice_m: i32) -> (SectorSpec, Vec<f64>) {
    let (aa, ab) = highest_weight(&A, a.twice_s, a.doubles);
    let (ba, bb) = highest_weight(&B, b.twice_s, b.doubles);
    let top = Determinant::new(aa | ba, ab | bb);
    let spec0 = SectorSpec::new(7, top.n_alpha() as usize, top.n_beta() as usize).unwrap();
    let oracle = coupled_weights_oracle(a.twice_s as u32, b.twice_s as u32, twice_s, twice_m).unwrap();
    let mut total: Option<(SectorSpec, Vec<f64>)> = None;
    for (&(ma, mb), &c) in &oracle.amplitudes {
        let basis0 = lw.basis(spec0).clone();
        let mut v = vec![0.0; basis0.len()];
        v[basis0.position(&top).unwrap()] = 1.0;
        let (spec, v) = lw.lower(spec0, v, &A, (a.twice_s as i32 - ma) as usize / 2);
        let (spec, v) = lw.lower(spec, v, &B, (b.twice_s as i32 - mb) as usize / 2);
        match &mut total {
            None => total = Some((spec, v.iter().map(|x| c * x).collect())),
            Some((s, acc)) => {
                assert_eq!(*s, spec);
                acc.iter_mut().zip(&v).for_each(|(x, y)| *x += c * y);
            }
        }
    }
    total.unwrap()
}

fn projector_sets(basis: &SectorBasis) -> (SpinProjectorSet, SpinProjectorSet) {
    (build_projectors(basis, &Fragment::new(A)).unwrap(), build_projectors(basis, &Fragment::new(B)).unwrap())
}

#[test]
fn joint_decompose_agrees_with_oracle_on_coupled_states() {
    let mut lw = Lowerer { bases: HashMap::new() };
    for twice_sa in 0..=4usize {
        for twice_sb in 0..=2usize {
            let a = Local { twice_s: twice_sa, doubles: usize::from(twice_sa < 4) };
            let b = Local { twice_s: twice_sb, doubles: usize::from(twice_sb == 0) };
            let (lo, hi) = ((twice_sa as i32 - twice_sb as i32).unsigned_abs(), (twice_sa + twice_sb) as u32);
            for twice_s in (lo..=hi).step_by(2) {
                for twice_m in [twice_s as i32, twice_s as i32 % 2] {
                    let (spec, psi) = coupled_state(&mut lw, &a, &b, twice_s, twice_m);
                    let basis = lw.basis(spec).clone();
                    let s2 = build_total_s2(&basis).unwrap();
                    let target = twice_s as f64 * (twice_s as f64 + 2.0) / 4.0;
                    let s2psi = s2.matvec(&psi);
                    let dev = s2psi.iter().zip(&psi).map(|(x, y)| (x - target * y).abs()).fold(0.0, f64::max);
                    assert!(dev < 1e-10, "S² deviation {dev}");
                    let (pa, pb) = projector_sets(&basis);
                    let d = joint_decompose(&psi, &pa, &pb).unwrap();
                    let oracle = coupled_weights_oracle(twice_sa as u32, twice_sb as u32, twice_s, twice_m).unwrap();
                    for sa in pa.twice_spins() {
                        for sb in pb.twice_spins() {
                            let want = oracle.joint_weights().get(&(sa, sb)).copied().unwrap_or(0.0);
                            assert!((d.weight(sa, sb) - want).abs() < 1e-10);
                        }
                    }
                }
            }
        }
    }
}

/// Inside the span of the product states at fixed M, diagonalizing total Ŝ²
/// recovers squared Clebsch–Gordan coefficients as component weights.
#[test]
fn total_spin_eigenbasis_reproduces_oracle_weights() {
    let mut lw = Lowerer { bases: HashMap::new() };
    let (a, b) = (Local { twice_s: 4, doubles: 0 }, Local { twice_s: 2, doubles: 0 });
    let twice_m = 2;
    let (aa, ab) = highest_weight(&A, 4, 0);
    let (ba, bb) = highest_weight(&B, 2, 0);
    let top = Determinant::new(aa | ba, ab | bb);
    let spec0 = SectorSpec::new(7, top.n_alpha() as usize, top.n_beta() as usize).unwrap();
    let mut products: Vec<((i32, i32), Vec<f64>)> = Vec::new();
    let mut spec_m = spec0;
    for ma in [4i32, 2, 0, -2, -4] {
        let mb = twice_m - ma;
        if mb.abs() > 2 {
            continue;
        }
        let basis0 = lw.basis(spec0).clone();
        let mut v = vec![0.0; basis0.len()];
        v[basis0.position(&top).unwrap()] = 1.0;
        let (spec, v) = lw.lower(spec0, v, &A, ((4 - ma) / 2) as usize);
        let (spec, v) = lw.lower(spec, v, &B, ((2 - mb) / 2) as usize);
        spec_m = spec;
        products.push(((ma, mb), v));
    }
    let basis = lw.basis(spec_m).clone();
    let s2 = build_total_s2(&basis).unwrap();
    let k = products.len();
    let reduced = DMatrix::from_fn(k, k, |i, j| {
        let sv = s2.matvec(&products[j].1);
        products[i].1.iter().zip(&sv).map(|(x, y)| x * y).sum::<f64>()
    });
    let eig = nalgebra::SymmetricEigen::new(reduced);
    for (col, &value) in eig.eigenvalues.iter().enumerate() {
        let twice_s = ((4.0 * value + 1.0).sqrt() - 1.0).round() as u32;
        let oracle = coupled_weights_oracle(a.twice_s as u32, b.twice_s as u32, twice_s, twice_m).unwrap().weights();
        for (row, (key, _)) in products.iter().enumerate() {
            let got = eig.eigenvectors[(row, col)].powi(2);
            let want = oracle.get(key).copied().unwrap_or(0.0);
            assert!((got - want).abs() < 1e-10, "S={twice_s}/2 {key:?}: {got} vs {want}");
        }
    }
}

#[test]
fn mixtures_split_by_local_spin_and_charge() {
    let mut lw = Lowerer { bases: HashMap::new() };
    let parts = [
        (Local { twice_s: 4, doubles: 0 }, Local { twice_s: 2, doubles: 0 }, 0.6),
        (Local { twice_s: 2, doubles: 1 }, Local { twice_s: 2, doubles: 0 }, 0.7),
        (Local { twice_s: 3, doubles: 1 }, Local { twice_s: 1, doubles: 0 }, 0.1),
    ];
    let norm = parts.iter().map(|p| p.2 * p.2).sum::<f64>().sqrt();
    let mut psi: Option<(SectorSpec, Vec<f64>)> = None;
    for (a, b, c) in &parts {
        let (spec, v) = coupled_state(&mut lw, a, b, 4, 4);
        match &mut psi {
            None => psi = Some((spec, v.iter().map(|x| c / norm * x).collect())),
            Some((s, acc)) => {
                assert_eq!(*s, spec);
                acc.iter_mut().zip(&v).for_each(|(x, y)| *x += c / norm * y);
            }
        }
    }
    let (spec, psi) = psi.unwrap();
    let basis = lw.basis(spec).clone();
    let (pa, pb) = projector_sets(&basis);
    let d = joint_decompose(&psi, &pa, &pb).unwrap();
    let w = |c: f64| c * c / (norm * norm);
    assert!((d.weight(4, 2) - w(0.6)).abs() < 1e-12);
    assert!((d.weight(2, 2) - w(0.7)).abs() < 1e-12);
    assert!((d.weight(3, 1) - w(0.1)).abs() < 1e-12);
    assert!((d.ct_weight(4) - w(0.1)).abs() < 1e-12);
    assert!((d.weight_with_number(3, 1, 5) - w(0.1)).abs() < 1e-12);
    assert!((d.total() - 1.0).abs() < 1e-12);
}

fn assert_projector_algebra(basis: &SectorBasis, frag: &Fragment) {
    let set = build_projectors(basis, frag).unwrap();
    let n = basis.len();
    let mut sum = DMatrix::zeros(n, n);
    let ps: Vec<DMatrix<f64>> = set.twice_spins().iter().map(|&s| set.projector(s)).collect();
    for (i, p) in ps.iter().enumerate() {
        assert!((p * p - p).amax() < 1e-10);
        for q in &ps[i + 1..] {
            assert!((p * q).amax() < 1e-10);
        }
        sum += p;
    }
    assert!((sum - DMatrix::identity(n, n)).amax() < 1e-10);
}

#[test]
fn projectors_are_complete_orthogonal_idempotents() {
    for (norb, na, nb) in [(4, 2, 2), (5, 3, 2), (6, 3, 3)] {
        let basis = SectorBasis::build(SectorSpec::new(norb, na, nb).unwrap()).unwrap();
        assert_projector_algebra(&basis, &Fragment::new(0..norb / 2));
        assert_projector_algebra(&basis, &Fragment::new([0, norb - 1]));
        assert_projector_algebra(&basis, &Fragment::new(0..norb));
    }
}

#[test]
fn disjoint_fragment_projectors_commute() {
    let basis = SectorBasis::build(SectorSpec::new(6, 3, 3).unwrap()).unwrap();
    let a = build_projectors(&basis, &Fragment::new([0, 2, 3, 5])).unwrap();
    let b = build_projectors(&basis, &Fragment::new([1, 4])).unwrap();
    for sa in a.twice_spins() {
        let pa = a.projector(sa);
        for sb in b.twice_spins() {
            let pb = b.projector(sb);
            assert!((&pa * &pb - &pb * &pa).amax() < 1e-10);
        }
    }
}

fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    m.qr().q()
}

#[test]
fn weights_are_invariant_under_intra_fragment_rotations() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ints = random_integrals(5, &mut rng);
    let basis = SectorBasis::build(SectorSpec::new(5, 2, 2).unwrap()).unwrap();
    let (fa, fb) = (Fragment::new([0, 1, 2]), Fragment::new([3, 4]));
    let pa = build_projectors(&basis, &fa).unwrap();
    let pb = build_projectors(&basis, &fb).unwrap();
    let reference = diagonalize(&build_hamiltonian(&basis, &ints).unwrap(), None).unwrap();
    for _ in 0..3 {
        let mut u = DMatrix::identity(5, 5);
        u.view_mut((0, 0), (3, 3)).copy_from(&random_orthogonal(3, &mut rng));
        u.view_mut((3, 3), (2, 2)).copy_from(&random_orthogonal(2, &mut rng));
        let rotated = diagonalize(&build_hamiltonian(&basis, &ints.rotated(&u)).unwrap(), None).unwrap();
        for i in 0..basis.len() {
            assert!((reference.eigenvalues[i] - rotated.eigenvalues[i]).abs() < 1e-10);
            let isolated = (i == 0 || reference.eigenvalues[i] - reference.eigenvalues[i - 1] > 1e-6)
                && (i + 1 == basis.len() || reference.eigenvalues[i + 1] - reference.eigenvalues[i] > 1e-6);
            if !isolated {
                continue;
            }
            let before = joint_decompose(&reference.vector(i), &pa, &pb).unwrap();
            let after = joint_decompose(&rotated.vector(i), &pa, &pb).unwrap();
            for (x, y) in before.entries.iter().zip(&after.entries) {
                assert!((x.weight - y.weight).abs() < 1e-9, "state {i}: {x:?} vs {y:?}");
            }
        }
    }
}

#[test]
fn weights_obey_triangle_rule() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let ints = random_integrals(6, &mut rng);
    let basis = SectorBasis::build(SectorSpec::new(6, 3, 3).unwrap()).unwrap();
    let h = build_hamiltonian(&basis, &ints).unwrap();
    let s2 = build_total_s2(&basis).unwrap();
    let spectrum = assign_spin(&diagonalize(&h, None).unwrap(), &s2, 0, SPIN_TOL, DEGENERACY_TOL).unwrap();
    let pa = build_projectors(&basis, &Fragment::new([0, 1, 2, 3])).unwrap();
    let pb = build_projectors(&basis, &Fragment::new([4, 5])).unwrap();
    let mut seen: BTreeMap<u32, usize> = BTreeMap::new();
    for i in 0..spectrum.len() {
        let s = spectrum.labels[i].unwrap().twice_s as i32;
        *seen.entry(s as u32).or_default() += 1;
        let d = joint_decompose(&spectrum.vector(i), &pa, &pb).unwrap();
        for e in &d.entries {
            let (sa, sb) = (e.twice_sa as i32, e.twice_sb as i32);
            if s < (sa - sb).abs() || s > sa + sb {
                assert!(e.weight.abs() < 1e-12, "state {i} S={s}/2 has {e:?}");
            }
        }
    }
    assert!(seen.len() >= 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn weights_sum_to_one(seed in any::<u64>(), split in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ints = random_integrals(5, &mut rng);
        let basis = SectorBasis::build(SectorSpec::new(5, 3, 2).unwrap()).unwrap();
        let pa = build_projectors(&basis, &Fragment::new(0..split)).unwrap();
        let pb = build_projectors(&basis, &Fragment::new(split..5)).unwrap();
        let spectrum = diagonalize(&build_hamiltonian(&basis, &ints).unwrap(), None).unwrap();
        for i in 0..spectrum.len() {
            let d = joint_decompose(&spectrum.vector(i), &pa, &pb).unwrap();
            prop_assert!((d.total() - 1.0).abs() < 1e-10);
            prop_assert!(d.entries.iter().all(|e| e.weight >= -1e-12));
            let by_number: f64 = d.number_distribution().values().sum();
            prop_assert!((by_number - 1.0).abs() < 1e-10);
        }
    }
}
