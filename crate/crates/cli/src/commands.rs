//! One function per subcommand. Each writes its artifacts, prints a short
//! summary and reports whether all internal checks passed.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use betheforge::bethe::{energy_momentum, tau_eigenvalue};
use betheforge::chain::{diagonalize, hamiltonian, transfer_matrix, ChainSpec, DEFAULT_CAP};
use betheforge::repkit::Spin;
use betheforge::rsos::{count_paths, hole_ledger, zj_formula, RsosSpace};
use betheforge::scattering::{aux_constraint_residual, central_charge, compare_routes, phase_shift, AuxQuantumNumbers};
use betheforge::strings::{construct_states, count_states};
use betheforge::thermo::{
    delta_energy_dispersion, solve_transform_division, solve_vacuum_integral, vacuum_energy, vacuum_momentum, GridSpec,
};
use betheforge::Complex64;
use num_bigint::BigInt;
use rayon::prelude::*;
use serde::Serialize;

use crate::context;
use crate::output::{num, OutDir, Table};
use crate::CliError;

/// Options shared by all subcommands.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub spec: Option<PathBuf>,
    pub context: Option<PathBuf>,
    pub out: PathBuf,
    pub grid_n: usize,
    pub window: f64,
    pub tol: Option<f64>,
    pub cap: u128,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            spec: None,
            context: None,
            out: PathBuf::from("out"),
            grid_n: 4096,
            window: 24.0,
            tol: None,
            cap: DEFAULT_CAP,
        }
    }
}

impl RunConfig {
    fn tol(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    fn read(path: &Option<PathBuf>, what: &str) -> Result<String, CliError> {
        let p = path.as_ref().ok_or_else(|| CliError::Validation(format!("--{what} is required")))?;
        fs::read_to_string(p).map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))
    }

    pub fn load_spec(&self) -> Result<ChainSpec, CliError> {
        Ok(ChainSpec::from_json_with_cap(&Self::read(&self.spec, "spec")?, self.cap)?)
    }

    fn load_context(&self, spec: &ChainSpec) -> Result<(context::ContextFile, betheforge::thermo::ExcitationContext), CliError> {
        let file = context::parse(&Self::read(&self.context, "context")?)?;
        let ctx = context::build(spec, &file)?;
        Ok((file, ctx))
    }
}

fn status(ok: bool) -> &'static str {
    if ok {
        "OK"
    } else {
        "FAIL"
    }
}

fn complex(z: Complex64) -> String {
    format!("{}{}{}i", num(z.re), if z.im < 0.0 { "" } else { "+" }, num(z.im))
}

fn roots_field(roots: &[Complex64]) -> String {
    roots.iter().map(|&z| complex(z)).collect::<Vec<_>>().join(" ")
}

/// Hamiltonian spectra and the Bethe-state oracle.
pub fn cmd_diag(cfg: &RunConfig) -> Result<bool, CliError> {
    let spec = cfg.load_spec()?;
    let out = OutDir::create(&cfg.out)?;
    let tol_e = cfg.tol(1e-6);
    let tol_tau = cfg.tol(1e-7);
    let us = [Complex64::new(0.31, 0.07), Complex64::new(-0.64, 0.12)];
    let mut spectrum = Table::new(&["spin", "index", "energy"]);
    let mut hams = Vec::new();
    let mut transfers = Vec::new();
    for &s in &spec.distinct {
        let h = diagonalize(&hamiltonian(&spec, s)?)?;
        for (i, e) in h.eigenvalues.iter().enumerate() {
            spectrum.row([s.to_string(), i.to_string(), num(e.re)]);
        }
        hams.push(h);
        transfers.push(us.iter().map(|&u| diagonalize(&transfer_matrix(&spec, s, u)?)).collect::<Result<Vec<_>, _>>()?);
    }
    out.table("spectrum.csv", spectrum)?;
    let mut report = Table::new(&["M", "state", "roots", "spin", "energy_bethe", "energy_diag", "energy_diff", "tau_diff", "status"]);
    let mut all_ok = true;
    for m in 0..=spec.s0().floor().to_integer() as usize {
        let states: Vec<Vec<Complex64>> = if m == 0 {
            vec![Vec::new()]
        } else {
            construct_states(&spec, m).into_iter().map(|s| s.roots.roots).collect()
        };
        for (k, roots) in states.iter().enumerate() {
            let em = energy_momentum(&spec, roots)?;
            for (j, &s) in spec.distinct.iter().enumerate() {
                let e = em.energies[j].1;
                let nearest = hams[j].eigenvalues.iter().map(|x| x.re).min_by(|a, b| (a - e).abs().total_cmp(&(b - e).abs()));
                let nearest = nearest.unwrap_or(f64::NAN);
                let mut tau_diff = 0.0f64;
                for (i, &u) in us.iter().enumerate() {
                    let tau = tau_eigenvalue(&spec, s, u, roots)?;
                    let d = transfers[j][i].eigenvalues.iter().map(|x| (x - tau).norm()).fold(f64::INFINITY, f64::min);
                    tau_diff = tau_diff.max(d);
                }
                let ok = (nearest - e).abs() < tol_e && tau_diff < tol_tau;
                all_ok &= ok;
                report.row([
                    m.to_string(),
                    k.to_string(),
                    roots_field(roots),
                    s.to_string(),
                    num(e),
                    num(nearest),
                    num((nearest - e).abs()),
                    num(tau_diff),
                    status(ok).to_string(),
                ]);
                println!("M={m} state {k} spin {s}: E = {} matched {} {}", num(e), num(nearest), status(ok));
            }
        }
    }
    out.table("bethe_report.csv", report)?;
    Ok(all_ok)
}

/// Bethe states with a given number of roots.
pub fn cmd_bethe(cfg: &RunConfig, m: usize) -> Result<bool, CliError> {
    let spec = cfg.load_spec()?;
    let out = OutDir::create(&cfg.out)?;
    let mut header = vec!["state".to_string(), "strings".into(), "twice_q".into(), "roots".into(), "momentum".into()];
    header.extend(spec.distinct.iter().map(|s| format!("energy_{s}")));
    let mut table = Table::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
    let states = construct_states(&spec, m);
    for (k, st) in states.iter().enumerate() {
        let em = energy_momentum(&spec, &st.roots.roots)?;
        let strings = st.config.nu.iter().map(|(d, n)| format!("{d}:{n}")).collect::<Vec<_>>().join(" ");
        let qs = st.q.iter().map(|(d, q)| format!("{d}:{q:?}")).collect::<Vec<_>>().join(" ");
        let mut row = vec![k.to_string(), strings, qs, roots_field(&st.roots.roots), num(em.momentum)];
        row.extend(em.energies.iter().map(|(_, e)| num(*e)));
        table.row(row);
    }
    out.table("bethe.csv", table)?;
    println!("M={m}: {} states constructed", states.len());
    Ok(true)
}

/// Completeness table Z_M and its sum against the Hilbert-space dimension.
pub fn cmd_count(cfg: &RunConfig) -> Result<bool, CliError> {
    let spec = cfg.load_spec()?;
    let out = OutDir::create(&cfg.out)?;
    let mut table = Table::new(&["M", "Z_M"]);
    let mut sum = BigInt::from(0);
    println!("M Z_M");
    for m in 0..=spec.s0().floor().to_integer() as usize {
        let z = count_states(&spec, m);
        println!("{m} {z}");
        table.row([m.to_string(), z.to_string()]);
        sum += &z;
    }
    let dim: BigInt = spec.sites().iter().map(|s| BigInt::from(s.dim())).product();
    let ok = sum == dim;
    table.row(["total".to_string(), sum.to_string()]);
    table.row(["dimension".to_string(), dim.to_string()]);
    out.table("count.csv", table)?;
    println!("{sum} = {dim} {}", if ok { "OK" } else { "MISMATCH" });
    Ok(ok)
}

/// Vacuum energies by both routes, the vacuum momentum and the density grid.
pub fn cmd_vacuum(cfg: &RunConfig) -> Result<bool, CliError> {
    let spec = cfg.load_spec()?;
    let out = OutDir::create(&cfg.out)?;
    let tol = cfg.tol(1e-8);
    let mut table = Table::new(&["spin", "closed_form", "numeric", "difference", "status"]);
    let mut all_ok = true;
    for &s in &spec.distinct {
        let v = vacuum_energy(&spec, s)?;
        let ok = (v.closed_form - v.numeric).abs() < tol;
        all_ok &= ok;
        table.row([s.to_string(), num(v.closed_form), num(v.numeric), num((v.closed_form - v.numeric).abs()), status(ok).into()]);
        println!("E^({s}): {:.8} vs {:.8} {}", v.closed_form, v.numeric, status(ok));
    }
    out.table("vacuum_energy.csv", table)?;
    let p = vacuum_momentum(&spec, spec.length());
    println!("vacuum momentum: pi * {}/{}", p.reduced_over_pi.0, p.reduced_over_pi.1);
    let grid = GridSpec { half_window: cfg.window, n: cfg.grid_n };
    let dens = if cfg.grid_n.is_power_of_two() {
        solve_vacuum_integral(&spec, grid)?
    } else {
        solve_transform_division(&spec, grid)?
    };
    let mut header = vec!["lambda".to_string()];
    header.extend(spec.distinct.iter().map(|s| format!("sigma_{s}")));
    let mut table = Table::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
    for i in 0..dens.n {
        let mut row = vec![num(dens.lambda(i))];
        row.extend(dens.values.iter().map(|v| num(v[i])));
        table.row(row);
    }
    out.table("density.csv", table)?;
    let err = dens.max_error(&spec, cfg.window.min(10.0));
    let dens_ok = err < cfg.tol(1e-6).max(1e-6);
    println!("density sup error on [-10, 10]: {} {}", num(err), status(dens_ok));
    Ok(all_ok && dens_ok)
}

#[derive(Serialize)]
struct SeaReport {
    spin: Spin,
    holes: Vec<f64>,
    delta_energy: f64,
    momenta: Vec<f64>,
    dispersion_residual: f64,
}

#[derive(Serialize)]
struct ExciteReport {
    ledger: betheforge::rsos::HoleLedger,
    seas: Vec<SeaReport>,
}

/// Hole/string bookkeeping, degeneracy and dispersion of one excitation.
pub fn cmd_excite(cfg: &RunConfig) -> Result<bool, CliError> {
    let spec = cfg.load_spec()?;
    let out = OutDir::create(&cfg.out)?;
    let (_, ctx) = cfg.load_context(&spec)?;
    let counts: Vec<usize> = ctx.holes.iter().map(Vec::len).collect();
    let nu: BTreeMap<u32, usize> = ctx.new_strings.iter().map(|(&m, c)| (m, c.len())).collect();
    let ledger = hole_ledger(&spec, &counts, &nu)?;
    let tol = cfg.tol(1e-12);
    let mut ok = true;
    let mut seas = Vec::new();
    for (j, &s) in spec.distinct.iter().enumerate() {
        let d = delta_energy_dispersion(&spec, &ctx, s)?;
        ok &= d.dispersion_residual < tol;
        seas.push(SeaReport {
            spin: s,
            holes: ctx.holes[j].clone(),
            delta_energy: d.d_e,
            momenta: d.momenta,
            dispersion_residual: d.dispersion_residual,
        });
    }
    println!("mu = {:?}, total spin {}/{}, degeneracy {}", ledger.mu, ledger.total_spin.0, ledger.total_spin.1, ledger.degeneracy);
    out.json("excite.json", &ExciteReport { ledger, seas })?;
    println!("dispersion {}", status(ok));
    Ok(ok)
}

/// RSOS path counts against the trigonometric formula.
pub fn cmd_rsos(cfg: &RunConfig, max_sum: usize) -> Result<bool, CliError> {
    let out = OutDir::create(&cfg.out)?;
    let mut table = Table::new(&["sbar", "D", "D_prime", "paths", "formula", "status"]);
    let mut all = true;
    for s2 in 1..=7u32 {
        let sbar = Spin::from_doubled(s2);
        for d in (0..=max_sum).step_by(2) {
            for dp in (0..=max_sum - d).step_by(2) {
                let count = count_paths(RsosSpace::new(d, dp, sbar)?);
                let f = zj_formula(d + dp, sbar)?;
                let ok = (f.value - f.rounded as f64).abs() < 1e-9 && count == f.rounded.into();
                all &= ok;
                table.row([sbar.to_string(), d.to_string(), dp.to_string(), count.to_string(), num(f.value), (if ok { "MATCH" } else { "MISMATCH" }).into()]);
            }
        }
    }
    out.table("rsos.csv", table)?;
    println!("{}", if all { "all MATCH" } else { "MISMATCH found" });
    Ok(all)
}

/// Phase shifts by both routes, conjectured spectra and auxiliary residuals.
pub fn cmd_smatrix(cfg: &RunConfig) -> Result<bool, CliError> {
    let spec = cfg.load_spec()?;
    let out = OutDir::create(&cfg.out)?;
    let (file, ctx) = cfg.load_context(&spec)?;
    let tol = cfg.tol(1e-7);
    let jobs: Vec<(usize, usize)> =
        ctx.holes.iter().enumerate().flat_map(|(j, h)| (1..=h.len()).map(move |d| (j + 1, d))).collect();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(j, d)| {
            let p = phase_shift(&spec, &ctx, spec.distinct[j - 1], d)?;
            let routes = compare_routes(&spec, &ctx, j, d).ok();
            Ok::<_, betheforge::Error>((j, d, p, routes))
        })
        .collect::<Result<_, _>>()?;
    let mut phases = Table::new(&[
        "spin", "hole", "rapidity", "phi", "s_check_re", "s_check_im", "s_tilde_re", "s_tilde_im", "c", "residual", "status",
    ]);
    let mut spectra = Table::new(&["spin", "hole", "index", "re", "im", "string_route_re", "string_route_im"]);
    let mut all = true;
    for (j, d, p, routes) in &results {
        let s = spec.distinct[j - 1];
        let ok = p.residual < tol;
        all &= ok;
        phases.row([
            s.to_string(),
            d.to_string(),
            num(ctx.holes[j - 1][d - 1]),
            num(p.phi),
            num(p.factors.s_check.re),
            num(p.factors.s_check.im),
            num(p.factors.s_tilde.re),
            num(p.factors.s_tilde.im),
            p.factors.c.to_string(),
            num(p.residual),
            status(ok).into(),
        ]);
        println!("spin {s} hole {d}: |e^(i phi) - C S S| = {} {}", num(p.residual), status(ok));
        if let Some(r) = routes {
            for (k, z) in r.conjectured.iter().enumerate() {
                spectra.row([s.to_string(), d.to_string(), k.to_string(), num(z.re), num(z.im), num(r.string_route.re), num(r.string_route.im)]);
            }
        }
    }
    out.table("phases.csv", phases)?;
    out.table("spectra.csv", spectra)?;
    let q: AuxQuantumNumbers = file.twice_q.clone().unwrap_or_default();
    let mut aux = Table::new(&["gap", "length", "index", "center", "residual", "product_gap"]);
    for j in 0..=spec.n_distinct() {
        for e in aux_constraint_residual(&spec, &ctx, j, &q)? {
            aux.row([
                j.to_string(),
                e.doubled_len.to_string(),
                e.index.to_string(),
                num(e.center),
                num(e.residual),
                e.product_gap.map(num).unwrap_or_default(),
            ]);
        }
    }
    out.table("aux.csv", aux)?;
    Ok(all)
}

pub fn cmd_central_charge(cfg: &RunConfig) -> Result<bool, CliError> {
    let spec = cfg.load_spec()?;
    let out = OutDir::create(&cfg.out)?;
    let c = central_charge(&spec);
    println!("c = {c}");
    out.write("central_charge.txt", format!("{c}\n").as_bytes())?;
    Ok(true)
}
