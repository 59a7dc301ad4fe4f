//! Acceptance criteria 1–11. Each prints one PASS/FAIL line; the process
//! fails on any FAIL that is not a documented known defect.

mod common;

use std::collections::HashMap;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spinmer_core::analysis::{ci_convergence, GapKind, DEFAULT_GAP_TOL};
use spinmer_core::cispace::{CILevel, OrbitalPartition};
use spinmer_core::eigensolve::{assign_spin, diagonalize, group_degenerate, Spectrum, DEGENERACY_TOL, SPIN_TOL};
use spinmer_core::io::write_fcidump;
use spinmer_core::ligandfield::{
    d_coulomb_integrals, ligand_field_integrals, linspace, tanabe_sugano, CrossingKind, RacahParameters, EG, T2G,
};
use spinmer_core::models::{
    build_heisenberg_dimer, build_hubbard_dimer, build_spinmerism, fit_heisenberg, ligand_fragment, metal_fragment,
    solve_spinmerism, spinmerism_sector, sweep_spinmerism, ReflectionBlock, SpinmerismParams, SweepParameter,
};
use spinmer_core::secondq::{build_hamiltonian, build_local_s2, build_total_s2, raising};
use spinmer_core::sparse::commutator_norm;
use spinmer_core::spinproj::{build_projectors, coupled_weights_oracle, joint_decompose, JointDecomposition};
use spinmer_core::{
    to_cm1, Determinant, Fragment, IntegralSet, OperatorMatrix, SectorBasis, SectorSpec, SparseMatrix,
};

/// Criteria whose literal statement is known not to hold for the model, with
/// the reason. A FAIL here does not fail the run as long as the failure has
/// exactly the documented shape (checked by the criterion itself).
const KNOWN_DEFECTS: [(u8, &str); 1] = [(
    2,
    "d5 metal + three ligand electrons couples S_Fe=5/2 with S_L=1/2 to S=3; those heptuplets have w(2,1)=0",
)];

/// Worst |Σ weights − 1| over every decomposition made by the run.
static COMPLETENESS: Mutex<(usize, f64, Vec<&'static str>)> = Mutex::new((0, 0.0, Vec::new()));

fn record(family: &'static str, ds: &[JointDecomposition]) {
    let mut c = COMPLETENESS.lock().unwrap();
    for d in ds {
        c.0 += 1;
        c.1 = c.1.max((d.total() - 1.0).abs());
    }
    if !c.2.contains(&family) {
        c.2.push(family);
    }
}

struct Outcome {
    pass: bool,
    detail: String,
    /// For known defects: whether the failure has the documented shape.
    as_documented: bool,
}

impl Outcome {
    fn check(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into(), as_documented: false }
    }
}

fn labelled(basis: &SectorBasis, ints: &IntegralSet) -> Spectrum {
    let h = build_hamiltonian(basis, ints).unwrap();
    let s2 = build_total_s2(basis).unwrap();
    assign_spin(&diagonalize(&h, None).unwrap(), &s2, basis.spec().twice_sz(), SPIN_TOL, DEGENERACY_TOL).unwrap()
}

fn decompose_all(basis: &SectorBasis, spectrum: &Spectrum, a: &Fragment, b: &Fragment) -> Vec<JointDecomposition> {
    let pa = build_projectors(basis, a).unwrap();
    let pb = build_projectors(basis, b).unwrap();
    (0..spectrum.len()).map(|i| joint_decompose(&spectrum.vector(i), &pa, &pb).unwrap()).collect()
}

fn lowest(spectrum: &Spectrum, twice_s: u32) -> f64 {
    (0..spectrum.len())
        .find(|&i| spectrum.labels[i].map(|l| l.twice_s) == Some(twice_s))
        .map(|i| spectrum.eigenvalues[i])
        .unwrap()
}

fn dimer_fragments() -> (Fragment, Fragment) {
    (Fragment::new([0]), Fragment::new([1]))
}

fn random_spinmerism(rng: &mut ChaCha8Rng) -> SpinmerismParams {
    SpinmerismParams {
        rp: RacahParameters::new(rng.gen_range(700.0..1000.0), rng.gen_range(3000.0..4500.0), rng.gen_range(0.0..3000.0))
            .unwrap(),
        dq: rng.gen_range(1500.0..2600.0),
        eps_l: rng.gen_range(4000.0..12000.0),
        u_l: rng.gen_range(30000.0..90000.0),
        t_ml: rng.gen_range(0.0..4000.0),
        k_ml: rng.gen_range(0.0..500.0),
        k_ll: rng.gen_range(-200.0..200.0),
    }
}

fn random_integrals(norb: usize, rng: &mut ChaCha8Rng) -> IntegralSet {
    let mut ints = IntegralSet::zeros(norb);
    ints.core_energy = rng.gen_range(-1.0..1.0);
    for p in 0..norb {
        for q in 0..=p {
            ints.set_h(p, q, rng.gen_range(-1.0..1.0));
        }
    }
    // one value per 8-fold class; set_g fills the rest
    for p in 0..norb {
        for q in 0..=p {
            for r in 0..norb {
                for s in 0..=r {
                    if p * (p + 1) / 2 + q >= r * (r + 1) / 2 + s {
                        ints.set_g(p, q, r, s, rng.gen_range(-0.5..0.5));
                    }
                }
            }
        }
    }
    // a positive diagonal keeps the model physical
    for p in 0..norb {
        ints.set_g(p, p, p, p, rng.gen_range(0.5..1.0));
    }
    ints
}

// 1 -------------------------------------------------------------------------

fn heisenberg_round_trip() -> Outcome {
    let ints = build_heisenberg_dimer(60.0);
    let basis = SectorBasis::build(SectorSpec::new(2, 1, 1).unwrap()).unwrap();
    let spectrum = labelled(&basis, &ints);
    let gap = to_cm1(lowest(&spectrum, 0) - lowest(&spectrum, 2));
    let fit = fit_heisenberg(&spectrum).unwrap();
    let (a, b) = dimer_fragments();
    record("Heisenberg dimer", &decompose_all(&basis, &spectrum, &a, &b));
    Outcome::check(
        (gap - 120.0).abs() < 1e-9 && (fit.j - 60.0).abs() < 1e-9,
        format!("singlet-triplet gap {gap:.9} cm-1, J = {:.12} cm-1", fit.j),
    )
}

// 2 -------------------------------------------------------------------------

fn heptuplet_purity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut heptuplets, mut pure, mut documented) = (0usize, 0usize, true);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let params = random_spinmerism(&mut rng);
        let sol = solve_spinmerism(&params, 0, None, None).unwrap();
        record("spinmerism Sz=0, all states", &sol.decompositions);
        let mut lowest_seen = false;
        for i in 0..sol.spectrum.len() {
            if sol.spectrum.multiplicity(i) != Some(7) {
                continue;
            }
            heptuplets += 1;
            let d = &sol.decompositions[i];
            let w = d.weight(4, 2);
            worst = worst.max((w - 1.0).abs());
            if (w - 1.0).abs() < 1e-10 {
                pure += 1;
            }
            // documented shape: the rest sits on (5/2, 1/2), and the lowest heptuplet is pure
            documented &= (w + d.weight(5, 1) - 1.0).abs() < 1e-10;
            if !lowest_seen {
                documented &= (w - 1.0).abs() < 1e-10;
                lowest_seen = true;
            }
        }
        // the Sz = 3 sector holds only heptuplets and must agree
        let top = solve_spinmerism(&params, 6, None, None).unwrap();
        record("spinmerism Sz=3", &top.decompositions);
        documented &= top.spectrum.len() == 7 && (0..7).all(|i| top.spectrum.multiplicity(i) == Some(7));
    }
    let mut o = Outcome::check(
        pure == heptuplets,
        format!("{pure}/{heptuplets} heptuplets have w(S_Fe=2,S_L=1)=1; max deviation {worst:.3e}"),
    );
    o.as_documented = documented;
    o
}

// 3 -------------------------------------------------------------------------

fn hubbard_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let u = rng.gen_range(0.05..5.0);
        let t = rng.gen_range(0.01..2.0);
        let basis = SectorBasis::build(SectorSpec::new(2, 1, 1).unwrap()).unwrap();
        let spectrum = labelled(&basis, &build_hubbard_dimer(u, t));
        let r = (u * u + 16.0 * t * t).sqrt();
        let mut want = [(u - r) / 2.0, 0.0, u, (u + r) / 2.0];
        want.sort_by(f64::total_cmp);
        for (e, w) in spectrum.eigenvalues.iter().zip(want) {
            worst = worst.max((e - w).abs());
        }
        let (a, b) = dimer_fragments();
        record("Hubbard dimer", &decompose_all(&basis, &spectrum, &a, &b));
    }
    Outcome::check(worst < 1e-12, format!("max |E - oracle| = {worst:.2e} hartree over 10 draws"))
}

// 4 -------------------------------------------------------------------------

const FRAG_A: [usize; 5] = [0, 1, 2, 3, 4];
const FRAG_B: [usize; 2] = [5, 6];

struct Lowerer {
    bases: HashMap<SectorSpec, SectorBasis>,
}

impl Lowerer {
    fn basis(&mut self, spec: SectorSpec) -> SectorBasis {
        self.bases.entry(spec).or_insert_with(|| SectorBasis::build(spec).unwrap()).clone()
    }

    /// `(Ŝ⁻_frag)^steps v`, normalized.
    fn lower(&mut self, mut spec: SectorSpec, mut v: Vec<f64>, orbitals: &[usize], steps: usize) -> (SectorSpec, Vec<f64>) {
        for _ in 0..steps {
            let down = spec.lowered().unwrap();
            let l = raising(&self.basis(down), &self.basis(spec), orbitals).transpose();
            let mut w = l.matvec(&v);
            let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            w.iter_mut().for_each(|x| *x /= n);
            spec = down;
            v = w;
        }
        (spec, v)
    }

    /// `|S_A m_A⟩|S_B m_B⟩` from the fragments' highest-weight determinants.
    fn product(&mut self, top: Determinant, ja: i32, ma: i32, jb: i32, mb: i32) -> (SectorSpec, Vec<f64>) {
        let spec0 = SectorSpec::new(7, top.n_alpha() as usize, top.n_beta() as usize).unwrap();
        let basis0 = self.basis(spec0);
        let mut v = vec![0.0; basis0.len()];
        v[basis0.position(&top).unwrap()] = 1.0;
        let (spec, v) = self.lower(spec0, v, &FRAG_A, ((ja - ma) / 2) as usize);
        self.lower(spec, v, &FRAG_B, ((jb - mb) / 2) as usize)
    }
}

/// Highest-weight determinant of a fragment: `twice_s` up electrons, then
/// `doubles` doubly occupied orbitals at the end.
fn highest_weight(orbitals: &[usize], twice_s: usize, doubles: usize) -> (u32, u32) {
    let n = orbitals.len();
    let (mut alpha, mut beta) = (0u32, 0u32);
    for &p in &orbitals[..twice_s] {
        alpha |= 1 << p;
    }
    for &p in &orbitals[n - doubles..] {
        alpha |= 1 << p;
        beta |= 1 << p;
    }
    (alpha, beta)
}

fn clebsch_gordan_oracle() -> Outcome {
    let mut lw = Lowerer { bases: HashMap::new() };
    let (mut cases, mut worst) = (0usize, 0.0f64);
    for ja in 0..=4i32 {
        for jb in 0..=2i32 {
            // doubly occupied orbitals vary the fragment electron counts
            let (aa, ab) = highest_weight(&FRAG_A, ja as usize, usize::from(ja < 4));
            let (ba, bb) = highest_weight(&FRAG_B, jb as usize, usize::from(jb == 0));
            let top = Determinant::new(aa | ba, ab | bb);
            for j in ((ja - jb).abs()..=ja + jb).step_by(2) {
                for m in (-j..=j).step_by(2) {
                    let oracle = coupled_weights_oracle(ja as u32, jb as u32, j as u32, m).unwrap();
                    let mut psi: Option<(SectorSpec, Vec<f64>)> = None;
                    let mut products = Vec::new();
                    for (&(ma, mb), &c) in &oracle.amplitudes {
                        let (spec, v) = lw.product(top, ja, ma, jb, mb);
                        match &mut psi {
                            None => psi = Some((spec, v.iter().map(|x| c * x).collect())),
                            Some((_, acc)) => acc.iter_mut().zip(&v).for_each(|(x, y)| *x += c * y),
                        }
                        products.push(((ma, mb), v));
                    }
                    let (spec, psi) = psi.unwrap();
                    let basis = lw.basis(spec);
                    // total spin of the assembled state
                    let s2 = build_total_s2(&basis).unwrap();
                    let target = (j * (j + 2)) as f64 / 4.0;
                    let s2psi = s2.matvec(&psi);
                    let mut dev = s2psi.iter().zip(&psi).map(|(x, y)| (x - target * y).abs()).fold(0.0, f64::max);
                    // joint weights
                    let pa = build_projectors(&basis, &Fragment::new(FRAG_A)).unwrap();
                    let pb = build_projectors(&basis, &Fragment::new(FRAG_B)).unwrap();
                    let d = joint_decompose(&psi, &pa, &pb).unwrap();
                    record("coupled CG states", std::slice::from_ref(&d));
                    let joint = oracle.joint_weights();
                    for sa in pa.twice_spins() {
                        for sb in pb.twice_spins() {
                            let want = joint.get(&(sa, sb)).copied().unwrap_or(0.0);
                            dev = dev.max((d.weight(sa, sb) - want).abs());
                        }
                    }
                    // product-state components are the squared coefficients
                    let weights = oracle.weights();
                    for (key, v) in &products {
                        let overlap: f64 = v.iter().zip(&psi).map(|(x, y)| x * y).sum();
                        dev = dev.max((overlap * overlap - weights[key]).abs());
                    }
                    worst = worst.max(dev);
                    cases += 1;
                }
            }
        }
    }
    Outcome::check(worst < 1e-10, format!("{cases} coupled states (S_A<=2, S_B<=1, all S, M); max deviation {worst:.2e}"))
}

// 5 -------------------------------------------------------------------------

fn d2_sum_rules() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let b = rng.gen_range(500.0..1200.0);
        let c = b * rng.gen_range(3.5..5.5);
        let rp = RacahParameters::new(b, c, 0.0).unwrap();
        let basis = SectorBasis::build(SectorSpec::new(5, 1, 1).unwrap()).unwrap();
        let spectrum = labelled(&basis, &d_coulomb_integrals(&rp));
        // (2S+1, number of Sz=0 components) → energy in cm⁻¹
        let mut terms = HashMap::new();
        for g in group_degenerate(&spectrum.eigenvalues, 1e-8) {
            let m = spectrum.multiplicity(g.start).unwrap();
            terms.insert((m, g.len()), to_cm1(spectrum.eigenvalues[g.start]));
        }
        let (f3, p3, d1) = (terms[&(3, 7)], terms[&(3, 3)], terms[&(1, 5)]);
        worst = worst.max(((d1 - f3) - (5.0 * b + 2.0 * c)).abs() / (5.0 * b + 2.0 * c));
        worst = worst.max(((p3 - f3) - 15.0 * b).abs() / (15.0 * b));
    }
    Outcome::check(worst < 1e-9, format!("max relative deviation {worst:.2e} over 5 (B, C) pairs"))
}

// 6 -------------------------------------------------------------------------

fn tanabe_sugano_d6() -> Outcome {
    let curve = tanabe_sugano(6, &RacahParameters::fe2(), &linspace(0.0, 4.0, 60)).unwrap();
    let ground0 = curve.points[0].ground().multiplicity;
    let crossover =
        curve.crossings.iter().find(|c| c.kind == CrossingKind::SpinCrossover && c.multiplicities == (5, 1));
    let excited = crossover.and_then(|x| {
        curve.crossings.iter().find(|c| {
            c.kind == CrossingKind::Excited
                && c.dq_over_b > x.dq_over_b
                && matches!(c.multiplicities, (3, 5) | (5, 3))
        })
    });
    let detail = format!(
        "ground 2S+1={ground0} at Dq=0; crossover 5->1 at Dq/B={}; excited 3/5 crossing at Dq/B={}",
        crossover.map_or("none".into(), |c| format!("{:.4}", c.dq_over_b)),
        excited.map_or("none".into(), |c| format!("{:.4}", c.dq_over_b)),
    );
    Outcome::check(
        ground0 == 5 && crossover.is_some_and(|c| c.dq_over_b > 0.0) && excited.is_some(),
        detail,
    )
}

// 7 -------------------------------------------------------------------------

fn spinmerism_avoided_crossing(limit: Duration) -> Outcome {
    let grid = linspace(2000.0, 2400.0, 60);
    let block = ReflectionBlock::E_XZ;
    let t = Instant::now();
    let free = sweep_spinmerism(&SpinmerismParams::default().decoupled(), SweepParameter::Dq, &grid, block, DEFAULT_GAP_TOL)
        .unwrap();
    let t_free = t.elapsed();
    let t = Instant::now();
    let coupled =
        sweep_spinmerism(&SpinmerismParams::default(), SweepParameter::Dq, &grid, block, DEFAULT_GAP_TOL).unwrap();
    let t_coupled = t.elapsed();
    for s in [&free, &coupled] {
        let ds: Vec<_> = s.points.iter().flat_map(|p| p.states.iter().map(|q| q.decomposition.clone())).collect();
        record("spinmerism sweep quintets", &ds);
    }
    let c = &coupled.crossing;
    let (mixed, swapped) = match &c.weight_exchange {
        Some(w) => (w.at_closest.iter().all(|x| x[2] >= 0.15 && x[4] >= 0.15), w.swapped),
        None => (false, false),
    };
    let exact = free.crossing.kind == GapKind::ExactCrossing && free.crossing.min_gap < 1e-6;
    let avoided = c.kind == GapKind::AvoidedCrossing && c.min_gap > 0.0;
    let detail = format!(
        "K_ML=0: {:?} gap {:.2e} cm-1 at Dq={:.3}; K_ML={}: {:?} gap {:.3} cm-1 at Dq={:.3}, S_Fe=1/2 weights >= 0.15: {mixed}, swapped: {swapped}; sweeps {:.1}s/{:.1}s",
        free.crossing.kind,
        free.crossing.min_gap,
        free.crossing.location,
        coupled.base.k_ml,
        c.kind,
        c.min_gap,
        c.location,
        t_free.as_secs_f64(),
        t_coupled.as_secs_f64(),
    );
    Outcome::check(exact && avoided && mixed && swapped && t_free < limit && t_coupled < limit, detail)
}

// 8 -------------------------------------------------------------------------

fn projection_completeness() -> Outcome {
    // random integrals with charge transfer between fragments, in every Sz
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let ints = random_integrals(5, &mut rng);
    for (na, nb) in [(3, 2), (2, 2), (3, 1)] {
        let basis = SectorBasis::build(SectorSpec::new(5, na, nb).unwrap()).unwrap();
        let spectrum = labelled(&basis, &ints);
        record("random integrals", &decompose_all(&basis, &spectrum, &Fragment::new([0, 1, 2]), &Fragment::new([3, 4])));
    }
    let c = COMPLETENESS.lock().unwrap();
    Outcome::check(
        c.0 > 0 && c.1 < 1e-10,
        format!("{} eigenstates from {}; max |sum w - 1| = {:.2e}", c.0, c.2.join(", "), c.1),
    )
}

// 9 -------------------------------------------------------------------------

struct Model {
    name: String,
    basis: SectorBasis,
    ints: IntegralSet,
    a: Fragment,
    b: Fragment,
}

fn parity_operator(basis: &SectorBasis, mask: u32) -> OperatorMatrix {
    let diag: Vec<f64> = basis
        .dets()
        .iter()
        .map(|d| if ((d.alpha & mask).count_ones() + (d.beta & mask).count_ones()) % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    OperatorMatrix::new(SparseMatrix::from_diagonal(&diag)).unwrap()
}

fn commutation_battery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut models = Vec::new();
    let spin_models: Vec<(String, SpinmerismParams)> = std::iter::once(("spinmerism default".to_string(), SpinmerismParams::default()))
        .chain((0..2).map(|k| (format!("spinmerism draw {k}"), random_spinmerism(&mut rng))))
        .collect();
    for (name, p) in &spin_models {
        let ints = build_spinmerism(p).unwrap();
        for twice_sz in [0, 2] {
            models.push(Model {
                name: format!("{name} 2Sz={twice_sz}"),
                basis: SectorBasis::build(spinmerism_sector(twice_sz).unwrap()).unwrap(),
                ints: ints.clone(),
                a: metal_fragment(),
                b: ligand_fragment(),
            });
        }
        models.push(Model {
            name: format!("{name} block"),
            basis: ReflectionBlock::E_XZ.basis(spinmerism_sector(0).unwrap()).unwrap(),
            ints,
            a: metal_fragment(),
            b: ligand_fragment(),
        });
    }
    let dimer = SectorBasis::build(SectorSpec::new(2, 1, 1).unwrap()).unwrap();
    let (da, db) = dimer_fragments();
    models.push(Model { name: "Heisenberg".into(), basis: dimer.clone(), ints: build_heisenberg_dimer(60.0), a: da.clone(), b: db.clone() });
    for k in 0..3 {
        let (u, t) = (rng.gen_range(0.05..5.0), rng.gen_range(0.01..2.0));
        models.push(Model { name: format!("Hubbard {k}"), basis: dimer.clone(), ints: build_hubbard_dimer(u, t), a: da.clone(), b: db.clone() });
    }
    for n in [(3, 3), (4, 2), (3, 2)] {
        models.push(Model {
            name: format!("ligand field d{}", n.0 + n.1),
            basis: SectorBasis::build(SectorSpec::new(5, n.0, n.1).unwrap()).unwrap(),
            ints: ligand_field_integrals(&RacahParameters::fe2(), 2000.0),
            a: Fragment::new(EG),
            b: Fragment::new(T2G),
        });
    }
    for k in 0..2 {
        models.push(Model {
            name: format!("random integrals {k}"),
            basis: SectorBasis::build(SectorSpec::new(6, 3, 3).unwrap()).unwrap(),
            ints: random_integrals(6, &mut rng),
            a: Fragment::new([0, 1, 2]),
            b: Fragment::new([3, 4, 5]),
        });
    }
    let (mut comm, mut asym) = (0.0f64, 0.0f64);
    let mut worst_model = String::new();
    for m in &models {
        let h = build_hamiltonian(&m.basis, &m.ints).unwrap();
        let s2 = build_total_s2(&m.basis).unwrap();
        let s2a = build_local_s2(&m.basis, &m.a).unwrap();
        let s2b = build_local_s2(&m.basis, &m.b).unwrap();
        let mut c = commutator_norm(&h, &s2, 4, 1).max(commutator_norm(&s2a, &s2b, 4, 2));
        if m.name.starts_with("spinmerism") {
            // reflections x -> -x and y -> -y
            for mask in [0b01100, 0b10100] {
                c = c.max(commutator_norm(&h, &parity_operator(&m.basis, mask), 4, 3));
            }
        }
        if c > comm {
            comm = c;
            worst_model = m.name.clone();
        }
        for op in [&h, &s2, &s2a, &s2b] {
            asym = asym.max(op.matrix().max_asymmetry().2);
        }
    }
    Outcome::check(
        comm < 1e-10 && asym < 1e-12,
        format!("{} models; max commutator norm {comm:.2e} ({worst_model}); max asymmetry {asym:.2e}", models.len()),
    )
}

// 10 ------------------------------------------------------------------------

fn brute_force_count(part: &OrbitalPartition, spec: SectorSpec, level: CILevel) -> usize {
    let n = spec.norb;
    let mut count = 0;
    for alpha in 0u32..(1 << n) {
        for beta in 0u32..(1 << n) {
            if alpha.count_ones() as usize != spec.nalpha || beta.count_ones() as usize != spec.nbeta {
                continue;
            }
            let occ = |p: usize| ((alpha >> p) & 1) + ((beta >> p) & 1);
            let holes: u32 = part.inactive().iter().map(|&p| 2 - occ(p)).sum();
            let particles: u32 = part.virtuals().iter().map(|&p| occ(p)).sum();
            count += usize::from(match level {
                CILevel::Fci => true,
                CILevel::Cas => holes == 0 && particles == 0,
                CILevel::CasS => holes <= 1 && particles <= 1,
                CILevel::Ddc2 => (holes <= 1 && particles <= 1) || holes + particles == 2,
                CILevel::Ddci => holes <= 2 && particles <= 2 && holes + particles <= 3,
            });
        }
    }
    count
}

fn ci_ladder() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let part = OrbitalPartition::contiguous(2, 2, 2);
    let spec = SectorSpec::new(6, 3, 3).unwrap();
    let (mut monotone, mut counts, mut rise) = (true, true, f64::NEG_INFINITY);
    let mut dims = Vec::new();
    for _ in 0..10 {
        let report = ci_convergence(&random_integrals(6, &mut rng), &part, spec).unwrap();
        monotone &= report.levels.len() == 5;
        for w in report.levels.windows(2) {
            rise = rise.max(w[1].ground_energy - w[0].ground_energy);
            monotone &= w[1].ground_energy <= w[0].ground_energy;
        }
        dims = report.levels.iter().map(|l| l.dimension).collect();
        counts &= report.levels.iter().all(|l| l.dimension == brute_force_count(&part, spec, l.level));
    }
    Outcome::check(
        monotone && counts,
        format!("10 draws; dimensions {dims:?} match brute force: {counts}; largest step {rise:.2e} hartree"),
    )
}

// 11 ------------------------------------------------------------------------

fn determinism() -> Outcome {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    common::write(p, "dimer.fcidump", &write_fcidump(&build_heisenberg_dimer(60.0), 2, 0));
    let runs: [(&str, &str, &str); 6] = [
        ("heisenberg", "[system]\nmodel = \"fcidump\"\npath = \"dimer.fcidump\"\n", "heisenberg"),
        ("spectrum", "[system]\nmodel = \"hubbard\"\nu_cm1 = 5000.0\nt_cm1 = 800.0\n", "spectrum"),
        ("project", "[system]\nmodel = \"spinmerism\"\nblock = \"even\"\n[solver]\nnroots = 10\n", "projection"),
        ("ts-diagram", "[ts]\npoints = 12\n", "ts_diagram"),
        ("sweep", "[sweep]\nstart = 2150.0\nstop = 2250.0\npoints = 6\n", "sweep"),
        ("dump-basis", "[system]\nmodel = \"spinmerism\"\ntwice_sz = 2\nblock = \"odd-x\"\n", "basis"),
    ];
    let mut identical = 0;
    let mut problems = Vec::new();
    for (cmd, cfg, stem) in runs {
        let cfg_path = common::write(p, &format!("{cmd}.toml"), cfg);
        let outs = [p.join(format!("{cmd}-1")), p.join(format!("{cmd}-2"))];
        for o in &outs {
            let code = common::run(&[cmd, "--config", cfg_path.to_str().unwrap(), "--out", o.to_str().unwrap()]);
            if code != 0 {
                problems.push(format!("{cmd} exited {code}"));
            }
        }
        for ext in ["csv", "json"] {
            let f = format!("{stem}.{ext}");
            match (std::fs::read(outs[0].join(&f)), std::fs::read(outs[1].join(&f))) {
                (Ok(x), Ok(y)) if x == y => identical += 1,
                _ => problems.push(format!("{f} differs")),
            }
        }
    }
    Outcome::check(
        problems.is_empty(),
        format!("{identical}/12 files byte-identical across repeated runs{}", if problems.is_empty() { String::new() } else { format!(": {}", problems.join("; ")) }),
    )
}

fn main() {
    type Criterion = (u8, &'static str, Option<Duration>, Box<dyn Fn() -> Outcome>);
    let secs = Duration::from_secs;
    let criteria: Vec<Criterion> = vec![
        (1, "Heisenberg round trip", Some(secs(1)), Box::new(heisenberg_round_trip)),
        (2, "heptuplet purity", Some(secs(120)), Box::new(heptuplet_purity)),
        (3, "Hubbard dimer oracle", Some(secs(1)), Box::new(hubbard_oracle)),
        (4, "Clebsch-Gordan oracle", Some(secs(60)), Box::new(clebsch_gordan_oracle)),
        (5, "d2 term sum rules", Some(secs(10)), Box::new(d2_sum_rules)),
        (6, "Tanabe-Sugano d6", Some(secs(120)), Box::new(tanabe_sugano_d6)),
        // the per-sweep limit is checked inside
        (7, "spinmerism avoided crossing", None, Box::new(move || spinmerism_avoided_crossing(secs(300)))),
        (8, "projection completeness", None, Box::new(projection_completeness)),
        (9, "commutation and symmetry", None, Box::new(commutation_battery)),
        (10, "CI ladder monotonicity", None, Box::new(ci_ladder)),
        (11, "determinism", None, Box::new(determinism)),
    ];
    let mut unexpected = Vec::new();
    for (id, name, limit, run) in criteria {
        let t = Instant::now();
        let mut o = run();
        let elapsed = t.elapsed();
        if let Some(l) = limit {
            if elapsed >= l {
                o.pass = false;
                o.detail.push_str(&format!("; runtime limit {}s exceeded", l.as_secs()));
            }
        }
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} [{name}]: {status} ({}; {:.2}s)", o.detail, elapsed.as_secs_f64());
        if !o.pass {
            match KNOWN_DEFECTS.iter().find(|(k, _)| *k == id) {
                Some((_, why)) if o.as_documented => println!("             known defect: {why}"),
                _ => unexpected.push(id),
            }
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected acceptance failures: {unexpected:?}");
        std::process::exit(1);
    }
}
