//! One pipeline per subcommand: resolve the configuration, solve, build the
//! table and the report, write them.

use std::path::{Path, PathBuf};

use spinmer_core::eigensolve::{assign_spin, diagonalize, Spectrum, SPIN_TOL};
use spinmer_core::io::{fmt_float, parse_fcidump, CsvTable};
use spinmer_core::ligandfield::{linspace, tanabe_sugano, RacahParameters};
use spinmer_core::models::{
    build_heisenberg_dimer, build_hubbard_dimer, build_spinmerism, fit_heisenberg, ligand_fragment, metal_fragment,
    spinmerism_sector, sweep_spinmerism, S_FE_LABELS,
};
use spinmer_core::secondq::{build_hamiltonian, build_total_s2};
use spinmer_core::spinproj::{build_projectors, ProjectionTable};
use spinmer_core::{to_hartree, Fragment, IntegralSet, SectorBasis, SectorSpec, HARTREE_TO_CM1};

use crate::config::{load_config, FragmentConfig, RunConfig, SolverConfig, SystemConfig};
use crate::error::CliError;
use crate::report::{
    opt_float, spectrum_rows, spin_text, timestamp, write_outputs, BasisBlock, BasisRecord, Metadata, Options,
    ProjectionBlock, ProjectionRecord, ReportDocument, SweepBlock, TOOL,
};
use crate::{Cli, Command};

/// Nominal d count of the metal in the spinmerism model (Fe²⁺, d⁶).
const SPINMERISM_NOMINAL_D: usize = 6;

struct Context<'a> {
    cli: &'a Cli,
    cfg: RunConfig,
    base_dir: PathBuf,
}

impl Context<'_> {
    fn log(&self, msg: impl AsRef<str>) {
        if self.cli.verbose {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn solver(&mut self) -> Result<SolverConfig, CliError> {
        let mut s = self.cfg.solver.clone().unwrap_or_default();
        if let Some(t) = self.cli.tol_degeneracy {
            s.tol_degeneracy_cm1 = t;
        }
        if !(s.tol_degeneracy_cm1.is_finite() && s.tol_degeneracy_cm1 > 0.0) {
            return Err(CliError::Config("solver.tol_degeneracy_cm1 must be positive".into()));
        }
        if s.nroots == Some(0) {
            return Err(CliError::Config("solver.nroots must be at least 1".into()));
        }
        self.cfg.solver = Some(s.clone());
        Ok(s)
    }

    fn absolute(&mut self) -> bool {
        let o = self.cfg.output.clone().unwrap_or_default();
        self.cfg.output = Some(o.clone());
        o.absolute_energies
    }

    fn document(&self, command: Command) -> Result<ReportDocument, CliError> {
        let tol = self.cfg.solver.as_ref().map(|s| s.tol_degeneracy_cm1).unwrap_or_else(|| SolverConfig::default().tol_degeneracy_cm1);
        Ok(ReportDocument::new(Metadata {
            tool: TOOL,
            version: env!("CARGO_PKG_VERSION"),
            command: command.name(),
            timestamp: timestamp()?,
            config: self.cfg.clone(),
            options: Options { format: self.cli.format, tol_degeneracy_cm1: tol, threads: self.cli.threads.map(|n| n.get()) },
        }))
    }
}

/// A Hamiltonian in a determinant basis, with the fragments used for local
/// spin analysis.
struct Problem {
    ints: IntegralSet,
    basis: SectorBasis,
    twice_sz: i32,
    fragments: Option<FragmentConfig>,
}

fn sector(norb: usize, nelec: usize, twice_sz: i32) -> Result<SectorSpec, CliError> {
    let n = nelec as i64;
    let m = twice_sz as i64;
    if m.abs() > n || (n + m) % 2 != 0 {
        return Err(CliError::Config(format!("twice_sz = {twice_sz} is impossible with {nelec} electrons")));
    }
    Ok(SectorSpec::new(norb, ((n + m) / 2) as usize, ((n - m) / 2) as usize)?)
}

fn dimer_fragments() -> FragmentConfig {
    FragmentConfig { a: vec![0], b: vec![1], nominal_a: 1, a_name: "A".into(), b_name: "B".into() }
}

fn prepare(ctx: &mut Context) -> Result<Problem, CliError> {
    let system = ctx.cfg.system()?.clone();
    let (ints, basis, twice_sz, default_frags, resolved) = match system {
        SystemConfig::Spinmerism { twice_sz, block } => {
            let params = ctx.cfg.spinmerism.unwrap_or_default();
            ctx.cfg.spinmerism = Some(params);
            let ints = build_spinmerism(&params)?;
            let spec = spinmerism_sector(twice_sz).map_err(|e| CliError::Config(e.to_string()))?;
            let basis = match block.block() {
                Some(b) => b.basis(spec)?,
                None => SectorBasis::build(spec)?,
            };
            let frags = FragmentConfig {
                a: metal_fragment().orbitals().to_vec(),
                b: ligand_fragment().orbitals().to_vec(),
                nominal_a: SPINMERISM_NOMINAL_D,
                a_name: "Fe".into(),
                b_name: "L".into(),
            };
            (ints, basis, twice_sz, Some(frags), SystemConfig::Spinmerism { twice_sz, block })
        }
        SystemConfig::Fcidump { path, twice_sz } => {
            let full = if path.is_absolute() { path.clone() } else { ctx.base_dir.join(&path) };
            ctx.log(format!("reading {}", full.display()));
            let f = parse_fcidump(&full)?;
            let tsz = twice_sz.unwrap_or(f.header.ms2);
            let spec = sector(f.header.norb, f.header.nelec, tsz)?;
            (f.integrals, SectorBasis::build(spec)?, tsz, None, SystemConfig::Fcidump { path, twice_sz: Some(tsz) })
        }
        SystemConfig::Hubbard { u_cm1, t_cm1, twice_sz } => {
            let ints = build_hubbard_dimer(to_hartree(u_cm1), to_hartree(t_cm1));
            let basis = SectorBasis::build(sector(2, 2, twice_sz)?)?;
            (ints, basis, twice_sz, Some(dimer_fragments()), SystemConfig::Hubbard { u_cm1, t_cm1, twice_sz })
        }
        SystemConfig::Heisenberg { j_cm1 } => {
            let basis = SectorBasis::build(sector(2, 2, 0)?)?;
            (build_heisenberg_dimer(j_cm1), basis, 0, Some(dimer_fragments()), SystemConfig::Heisenberg { j_cm1 })
        }
    };
    ints.validate()?;
    ctx.cfg.system = Some(resolved);
    let fragments = ctx.cfg.fragments.clone().or(default_frags);
    ctx.log(format!("sector dimension {}", basis.len()));
    Ok(Problem { ints, basis, twice_sz, fragments })
}

fn solve(ctx: &mut Context, p: &Problem) -> Result<Spectrum, CliError> {
    let solver = ctx.solver()?;
    let h = build_hamiltonian(&p.basis, &p.ints)?;
    let s2 = build_total_s2(&p.basis)?;
    let raw = diagonalize(&h, solver.nroots)?;
    Ok(assign_spin(&raw, &s2, p.twice_sz, SPIN_TOL, solver.tol_degeneracy_cm1 / HARTREE_TO_CM1)?)
}

fn spectrum_table(spectrum: &Spectrum, absolute: bool) -> Result<CsvTable, CliError> {
    let mut header = vec!["index", "energy_cm1", "multiplicity"];
    if absolute {
        header.push("energy_hartree");
    }
    let mut t = CsvTable::new(header);
    for r in spectrum_rows(spectrum, absolute) {
        let mut row = vec![r.index.to_string(), fmt_float(r.energy_cm1), r.multiplicity.map(|m| m.to_string()).unwrap_or_default()];
        if let Some(e) = r.energy_hartree {
            row.push(fmt_float(e));
        }
        t.push(row)?;
    }
    Ok(t)
}

fn cmd_spectrum(ctx: &mut Context) -> Result<Vec<PathBuf>, CliError> {
    let p = prepare(ctx)?;
    let spectrum = solve(ctx, &p)?;
    let absolute = ctx.absolute();
    let table = spectrum_table(&spectrum, absolute)?;
    let mut doc = ctx.document(Command::Spectrum)?;
    doc.spectrum = Some(spectrum_rows(&spectrum, absolute));
    write_outputs(&ctx.cli.out, "spectrum", ctx.cli.format, &table, &doc)
}

fn fragment(orbitals: &[usize], norb: usize, which: &str) -> Result<Fragment, CliError> {
    let f = Fragment::new(orbitals.iter().copied());
    if f.is_empty() {
        return Err(CliError::Config(format!("fragments.{which} is empty")));
    }
    f.validate(norb).map_err(|e| CliError::Config(format!("fragments.{which}: {e}")))?;
    Ok(f)
}

fn cmd_project(ctx: &mut Context) -> Result<Vec<PathBuf>, CliError> {
    let p = prepare(ctx)?;
    let spectrum = solve(ctx, &p)?;
    let absolute = ctx.absolute();
    let fr = p
        .fragments
        .as_ref()
        .ok_or_else(|| CliError::Config("missing key 'fragments' (needed for integrals read from a file)".into()))?;
    let a = fragment(&fr.a, p.basis.norb(), "a")?;
    let b = fragment(&fr.b, p.basis.norb(), "b")?;
    if !a.is_disjoint(&b) {
        return Err(CliError::Config("fragments.a and fragments.b overlap".into()));
    }
    ctx.cfg.fragments = Some(fr.clone());
    let pa = build_projectors(&p.basis, &a)?;
    let pb = build_projectors(&p.basis, &b)?;
    let proj = ProjectionTable::build(&spectrum, &pa, &pb, fr.nominal_a)?;
    let columns: Vec<String> = proj
        .columns
        .iter()
        .map(|&(sa, sb)| format!("S_{}={}|S_{}={}", fr.a_name, spin_text(sa), fr.b_name, spin_text(sb)))
        .collect();

    let mut header = vec!["energy_cm1".to_string(), "multiplicity".to_string()];
    header.extend(columns.iter().cloned());
    header.push("ct_weight".into());
    let mut table = CsvTable::new(header);
    for r in &proj.rows {
        let mut row = vec![fmt_float(r.energy_cm1), r.multiplicity.map(|m| m.to_string()).unwrap_or_default()];
        row.extend(r.weights.iter().map(|&w| fmt_float(w)));
        row.push(fmt_float(r.ct_weight));
        table.push(row)?;
    }
    let mut doc = ctx.document(Command::Project)?;
    doc.spectrum = Some(spectrum_rows(&spectrum, absolute));
    doc.projection = Some(ProjectionBlock {
        fragments: fr.clone(),
        columns,
        rows: proj.rows.into_iter().enumerate().map(|(i, row)| ProjectionRecord { spectrum_index: i, row }).collect(),
    });
    write_outputs(&ctx.cli.out, "projection", ctx.cli.format, &table, &doc)
}

fn cmd_ts_diagram(ctx: &mut Context) -> Result<Vec<PathBuf>, CliError> {
    let ts = ctx.cfg.ts.clone().unwrap_or_default();
    ctx.cfg.ts = Some(ts.clone());
    let rp = RacahParameters::new(ts.b, ts.c, 0.0).map_err(|e| CliError::Config(format!("ts: {e}")))?;
    if ts.points == 0 || (ts.points > 1 && !(ts.dq_over_b_max > ts.dq_over_b_min)) {
        return Err(CliError::Config("ts needs points >= 1 and dq_over_b_max > dq_over_b_min".into()));
    }
    let grid = if ts.points == 1 { vec![ts.dq_over_b_min] } else { linspace(ts.dq_over_b_min, ts.dq_over_b_max, ts.points) };
    ctx.log(format!("d{} diagram over {} points", ts.n_electrons, grid.len()));
    let curve = tanabe_sugano(ts.n_electrons, &rp, &grid).map_err(|e| match e {
        spinmer_core::Error::Parameter(m) => CliError::Config(format!("ts: {m}")),
        other => other.into(),
    })?;

    let mut header = vec!["dq_over_b".to_string()];
    header.extend(curve.tracks.iter().map(|t| t.label.clone()));
    let mut table = CsvTable::new(header);
    let series: Vec<Vec<Option<f64>>> = (0..curve.tracks.len()).map(|k| curve.track_series(k)).collect();
    for (i, p) in curve.points.iter().enumerate() {
        let mut row = vec![fmt_float(p.dq_over_b)];
        row.extend(series.iter().map(|s| opt_float(s[i])));
        table.push(row)?;
    }
    let mut doc = ctx.document(Command::TsDiagram)?;
    doc.ts_diagram = Some(curve);
    write_outputs(&ctx.cli.out, "ts_diagram", ctx.cli.format, &table, &doc)
}

fn cmd_sweep(ctx: &mut Context) -> Result<Vec<PathBuf>, CliError> {
    let sw = ctx.cfg.sweep.clone().unwrap_or_default();
    ctx.cfg.sweep = Some(sw.clone());
    let params = ctx.cfg.spinmerism.unwrap_or_default();
    ctx.cfg.spinmerism = Some(params);
    let block = sw
        .block
        .block()
        .ok_or_else(|| CliError::Config("sweep.block must name a reflection block, not 'full'".into()))?;
    if sw.points < 3 || !(sw.stop > sw.start) {
        return Err(CliError::Config("sweep needs points >= 3 and stop > start".into()));
    }
    if !(sw.gap_tol_cm1 >= 0.0) {
        return Err(CliError::Config("sweep.gap_tol_cm1 must be non-negative".into()));
    }
    params.with(sw.parameter, sw.start).validate()?;
    params.with(sw.parameter, sw.stop).validate()?;
    let values = linspace(sw.start, sw.stop, sw.points);
    ctx.log(format!("sweeping {} over {} points", sw.parameter.name(), values.len()));
    let sweep = sweep_spinmerism(&params, sw.parameter, &values, block, sw.gap_tol_cm1)?;

    let mut header: Vec<String> =
        [sw.parameter.name(), "ground_cm1", "Q1_cm1", "Q2_cm1", "gap_cm1", "next_cm1"].map(String::from).to_vec();
    for q in ["Q1", "Q2"] {
        header.extend(S_FE_LABELS.iter().map(|l| format!("{q}:{l}")));
    }
    let mut table = CsvTable::new(header);
    for p in &sweep.points {
        let (e1, e2) = (p.states[0].energy_cm1, p.states[1].energy_cm1);
        let mut row = vec![fmt_float(p.value), fmt_float(p.ground_cm1), fmt_float(e1), fmt_float(e2), fmt_float(e2 - e1), opt_float(p.next_cm1)];
        for s in &p.states {
            row.extend(s.s_fe_weights().into_iter().map(fmt_float));
        }
        table.push(row)?;
    }
    let mut doc = ctx.document(Command::Sweep)?;
    let flagged_steps = sweep.flagged_steps();
    doc.sweep = Some(SweepBlock { sweep, flagged_steps });
    write_outputs(&ctx.cli.out, "sweep", ctx.cli.format, &table, &doc)
}

fn cmd_heisenberg(ctx: &mut Context) -> Result<Vec<PathBuf>, CliError> {
    let p = prepare(ctx)?;
    if p.twice_sz != 0 {
        return Err(CliError::Config("heisenberg needs the twice_sz = 0 sector".into()));
    }
    let spectrum = solve(ctx, &p)?;
    let absolute = ctx.absolute();
    let fit = fit_heisenberg(&spectrum).map_err(|e| CliError::Solver(e.to_string()))?;
    ctx.log(format!("J = {} cm-1", fmt_float(fit.j)));
    let table = spectrum_table(&spectrum, absolute)?;
    let mut doc = ctx.document(Command::Heisenberg)?;
    doc.exchange = Some(fit);
    doc.spectrum = Some(spectrum_rows(&spectrum, absolute));
    write_outputs(&ctx.cli.out, "heisenberg", ctx.cli.format, &table, &doc)
}

fn cmd_dump_basis(ctx: &mut Context) -> Result<Vec<PathBuf>, CliError> {
    let p = prepare(ctx)?;
    let norb = p.basis.norb();
    let a = match &ctx.cfg.fragments {
        Some(f) => Some(fragment(&f.a, norb, "a")?),
        None => None,
    };
    let mut header = vec!["index", "occupation", "alpha", "beta"];
    if a.is_some() {
        header.push("n_a");
    }
    let mut table = CsvTable::new(header);
    let mut records = Vec::with_capacity(p.basis.len());
    for (i, d) in p.basis.dets().iter().enumerate() {
        let n_a = a.as_ref().map(|f| ((d.alpha & f.mask()).count_ones() + (d.beta & f.mask()).count_ones()) as usize);
        let occupation = d.occupation_string(norb);
        let mut row = vec![i.to_string(), occupation.clone(), format!("{:0w$b}", d.alpha, w = norb), format!("{:0w$b}", d.beta, w = norb)];
        if let Some(n) = n_a {
            row.push(n.to_string());
        }
        table.push(row)?;
        records.push(BasisRecord { index: i, occupation, alpha: d.alpha, beta: d.beta, n_a });
    }
    let spec = p.basis.spec();
    let mut doc = ctx.document(Command::DumpBasis)?;
    doc.basis = Some(BasisBlock {
        norb,
        n_alpha: spec.nalpha,
        n_beta: spec.nbeta,
        dimension: p.basis.len(),
        determinants: records,
    });
    write_outputs(&ctx.cli.out, "basis", ctx.cli.format, &table, &doc)
}

pub fn execute(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let (cfg, base_dir) = match &cli.config {
        Some(path) => (load_config(path)?, path.parent().map(Path::to_path_buf).unwrap_or_default()),
        None => (RunConfig::default(), PathBuf::new()),
    };
    let mut ctx = Context { cli, cfg, base_dir };
    match cli.command {
        Command::Spectrum => cmd_spectrum(&mut ctx),
        Command::Project => cmd_project(&mut ctx),
        Command::TsDiagram => cmd_ts_diagram(&mut ctx),
        Command::Sweep => cmd_sweep(&mut ctx),
        Command::Heisenberg => cmd_heisenberg(&mut ctx),
        Command::DumpBasis => cmd_dump_basis(&mut ctx),
    }
}
