//! Subcommand bodies. Each returns the paths of the artifacts it wrote.

use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::RunConfig;
use super::output::{num, write_csv, write_json};
use super::CliError;
use crate::bloch::{solve_bands, BandChecks, BandStructure, Gauge};
use crate::derivative::DerivativeScheme;
use crate::dynamics::{LinearResponse, PropagationExperiment};
use crate::grid::RingGrid;
use crate::lattice::{build_hamiltonian, build_hamiltonian_with_scheme, build_translation};
use crate::observable::{cell_periodicity_defect, locality_report, materialize, LocalObservableSeries};
use crate::operator::OperatorMatrix;
use crate::superselection::{probe_operator, selection_scan, winding_number, DeltaBin, TheoremCheck};
use crate::wannier::{build_wannier, wannier_projector, GaugeRecord};

/// An observable resolved from a builtin token or a named config series.
pub struct ResolvedObservable {
    pub label: String,
    pub operator: OperatorMatrix,
    /// Operator used for the locality report (banded materialization for series).
    pub locality_operator: OperatorMatrix,
    pub scheme: Option<DerivativeScheme>,
    pub locality_scheme: Option<DerivativeScheme>,
}

fn parse_call<'a>(token: &'a str, name: &str) -> Option<Vec<&'a str>> {
    let inner = token.strip_prefix(name)?.trim().strip_prefix('(')?.strip_suffix(')')?;
    Some(inner.split(',').map(str::trim).collect())
}

fn parse_index(token: &str, text: &str) -> Result<usize, CliError> {
    text.parse::<usize>()
        .map_err(|_| CliError::Config(format!("invalid observable `{token}`: `{text}` is not a non-negative integer")))
}

pub fn resolve_observable(
    cfg: &RunConfig,
    bands: Option<&BandStructure>,
    token: &str,
) -> Result<ResolvedObservable, CliError> {
    let grid = cfg.grid();
    let token = token.trim();
    let plain = |label: &str, op: OperatorMatrix| ResolvedObservable {
        label: label.to_string(),
        locality_operator: op.clone(),
        operator: op,
        scheme: None,
        locality_scheme: None,
    };
    match token {
        "hamiltonian" => {
            let h = build_hamiltonian(grid, &cfg.potential, cfg.lattice.mass)?;
            return Ok(plain(token, h));
        }
        "translation" => return Ok(plain(token, build_translation(grid))),
        "identity" => return Ok(plain(token, OperatorMatrix::identity(grid))),
        "none" => return Ok(plain(token, OperatorMatrix::zeros(grid))),
        _ => {}
    }
    if let Some(args) = parse_call(token, "harmonic") {
        if args.len() != 1 {
            return Err(CliError::Config(format!("invalid observable `{token}`: expected harmonic(m)")));
        }
        let m = parse_index(token, args[0])?;
        let series = LocalObservableSeries::harmonic(m as u32);
        let op = materialize(&series, grid, DerivativeScheme::Spectral)?;
        return Ok(plain(token, op));
    }
    if let Some(args) = parse_call(token, "wannier_projector") {
        if args.len() != 2 {
            return Err(CliError::Config(format!(
                "invalid observable `{token}`: expected wannier_projector(n, M)"
            )));
        }
        let band = parse_index(token, args[0])?;
        let site = parse_index(token, args[1])?;
        if band >= cfg.bands {
            return Err(CliError::Config(format!(
                "invalid observable `{token}`: band {band} not below `bands` = {}",
                cfg.bands
            )));
        }
        if site >= grid.n_cells() {
            return Err(CliError::Config(format!(
                "invalid observable `{token}`: site {site} not below n_cells = {}",
                grid.n_cells()
            )));
        }
        let owned;
        let bands = match bands {
            Some(b) => b,
            None => {
                owned = solve_bands(grid, &cfg.potential, cfg.lattice.mass, cfg.bands)?;
                &owned
            }
        };
        let w = build_wannier(bands, band, site)?;
        return Ok(plain(token, wannier_projector(&w)));
    }
    let o = cfg.observable(token).ok_or_else(|| {
        CliError::Config(format!(
            "unknown observable `{token}`: expected one of {:?}, harmonic(m), wannier_projector(n, M) or a name from [[observables]]",
            super::builtin_names()
        ))
    })?;
    Ok(ResolvedObservable {
        label: o.name.clone(),
        operator: materialize(&o.series, grid, o.scheme)?,
        locality_operator: materialize(&o.series, grid, o.locality_scheme)?,
        scheme: Some(o.scheme),
        locality_scheme: Some(o.locality_scheme),
    })
}

fn bands_for(cfg: &RunConfig) -> Result<BandStructure, CliError> {
    Ok(solve_bands(cfg.grid(), &cfg.potential, cfg.lattice.mass, cfg.bands)?)
}

#[derive(Serialize)]
struct SolveSummary<'a> {
    command: &'static str,
    config: &'a RunConfig,
    checks: BandChecks,
    band_minima: Vec<f64>,
    band_maxima: Vec<f64>,
}

pub fn cmd_solve(cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let bands = bands_for(cfg)?;
    let grid = cfg.grid();
    let mut paths = Vec::new();
    paths.push(write_csv(
        dir,
        "bands.csv",
        &["band", "l", "k", "energy"],
        bands.states().iter().map(|s| {
            vec![
                s.band.to_string(),
                s.wavevector_index.to_string(),
                num(s.wavevector()),
                num(s.energy),
            ]
        }),
    )?);
    paths.push(write_csv(
        dir,
        "states.csv",
        &[
            "band",
            "l",
            "l_symmetric",
            "k",
            "energy",
            "gauge_anchor",
            "norm_residual",
            "translation_residual",
            "cell_periodicity_residual",
        ],
        bands.states().iter().map(|s| {
            let anchor = match s.gauge {
                Gauge::Fixed { anchor } => anchor.to_string(),
                Gauge::Arbitrary => String::new(),
            };
            vec![
                s.band.to_string(),
                s.wavevector_index.to_string(),
                grid.symmetric_sector(s.wavevector_index).to_string(),
                num(s.wavevector()),
                num(s.energy),
                anchor,
                num(s.norm_residual()),
                num(s.translation_residual()),
                num(s.cell_periodicity_residual()),
            ]
        }),
    )?);
    let per_band = |f: fn(f64, f64) -> f64, init: f64| -> Vec<f64> {
        (0..bands.band_count())
            .map(|n| bands.band(n).map(|s| s.energy).fold(init, f))
            .collect()
    };
    let summary = SolveSummary {
        command: "solve",
        config: cfg,
        checks: bands.checks(),
        band_minima: per_band(f64::min, f64::INFINITY),
        band_maxima: per_band(f64::max, f64::NEG_INFINITY),
    };
    paths.push(write_json(dir, "summary_solve.json", &summary)?);
    Ok(paths)
}

#[derive(Serialize)]
struct WannierSummary<'a> {
    command: &'static str,
    config: &'a RunConfig,
    band: usize,
    site: usize,
    norm: f64,
    cell_probabilities: Vec<f64>,
    projector_trace: f64,
    projector_cell_periodicity_defect: f64,
    projector_locality_width: f64,
    projector_bandwidth_mass_at_cell: f64,
    gauge: GaugeRecord,
    gauge_dependent: &'static str,
}

pub fn cmd_wannier(cfg: &RunConfig, dir: &Path, band: usize, site: usize) -> Result<Vec<PathBuf>, CliError> {
    let grid = cfg.grid();
    if band >= cfg.bands {
        return Err(CliError::Config(format!("invalid value for `--band`: {band} (must be below bands = {})", cfg.bands)));
    }
    if site >= grid.n_cells() {
        return Err(CliError::Config(format!("invalid value for `--site`: {site} (must be below n_cells = {})", grid.n_cells())));
    }
    let bands = bands_for(cfg)?;
    let w = build_wannier(&bands, band, site)?;
    let projector = wannier_projector(&w);
    let report = locality_report(&projector);
    let mut paths = Vec::new();
    paths.push(write_csv(
        dir,
        "wannier.csv",
        &["x", "density"],
        w.density_profile().into_iter().map(|(x, d)| vec![num(x), num(d)]),
    )?);
    paths.push(write_csv(
        dir,
        "wannier_cells.csv",
        &["cell", "probability"],
        w.cell_probabilities()
            .into_iter()
            .enumerate()
            .map(|(c, p)| vec![c.to_string(), num(p)]),
    )?);
    paths.push(write_csv(
        dir,
        "locality.csv",
        &["w", "mass"],
        report.rows().map(|(x, m)| vec![num(x), num(m)]),
    )?);
    let summary = WannierSummary {
        command: "wannier",
        config: cfg,
        band,
        site,
        norm: w.wavefunction.norm(),
        cell_probabilities: w.cell_probabilities(),
        projector_trace: projector.trace().re,
        projector_cell_periodicity_defect: cell_periodicity_defect(&projector, &build_translation(grid))?,
        projector_locality_width: report.locality_width(),
        projector_bandwidth_mass_at_cell: report.bandwidth_mass(grid.cell_length()),
        gauge: w.source_gauge.clone(),
        gauge_dependent: "the Wannier shape depends on the Bloch phase convention; cell probabilities are not gauge-invariant",
    };
    paths.push(write_json(dir, "summary_wannier.json", &summary)?);
    Ok(paths)
}

#[derive(Serialize)]
struct BandRange {
    band: usize,
    min: f64,
    max: f64,
}

#[derive(Serialize)]
struct DeltaRow {
    delta_l: i64,
    #[serde(flatten)]
    bin: DeltaBin,
}

#[derive(Serialize)]
struct ScanSummary<'a> {
    command: &'static str,
    config: &'a RunConfig,
    observable: String,
    scheme: Option<String>,
    locality_scheme: Option<String>,
    cell_periodicity_defect: f64,
    locality_width: f64,
    bandwidth_mass_at_cell: f64,
    max_off_sector_modulus: f64,
    same_band_off_sector_modulus: Vec<BandRange>,
    hermitian_defect: f64,
    theorem_check: Option<TheoremCheck>,
    delta_l_histogram: Vec<DeltaRow>,
}

pub fn cmd_scan(cfg: &RunConfig, dir: &Path, observable: &str) -> Result<Vec<PathBuf>, CliError> {
    let grid = cfg.grid();
    let bands = bands_for(cfg)?;
    let obs = resolve_observable(cfg, Some(&bands), observable)?;
    let scan = selection_scan(&obs.label, &obs.operator, &bands)?;
    let report = locality_report(&obs.locality_operator);
    let mut paths = Vec::new();
    paths.push(write_csv(
        dir,
        "scan.csv",
        &["n", "l", "n2", "l2", "re", "im", "modulus"],
        scan.entries.iter().map(|e| {
            vec![
                e.band.to_string(),
                e.l.to_string(),
                e.band2.to_string(),
                e.l2.to_string(),
                num(e.re),
                num(e.im),
                num(e.modulus),
            ]
        }),
    )?);
    paths.push(write_csv(
        dir,
        "locality.csv",
        &["w", "mass"],
        report.rows().map(|(x, m)| vec![num(x), num(m)]),
    )?);
    let same_band: Vec<BandRange> = (0..bands.band_count())
        .map(|band| {
            let moduli: Vec<f64> = scan
                .entries
                .iter()
                .filter(|e| e.band == band && e.band2 == band && e.l != e.l2)
                .map(|e| e.modulus)
                .collect();
            BandRange {
                band,
                min: moduli.iter().copied().fold(f64::INFINITY, f64::min),
                max: moduli.iter().copied().fold(0.0, f64::max),
            }
        })
        .collect();
    let summary = ScanSummary {
        command: "scan",
        config: cfg,
        observable: obs.label.clone(),
        scheme: obs.scheme.map(|s| s.to_string()),
        locality_scheme: obs.locality_scheme.map(|s| s.to_string()),
        cell_periodicity_defect: scan.cell_periodicity_defect,
        locality_width: report.locality_width(),
        bandwidth_mass_at_cell: report.bandwidth_mass(grid.cell_length()),
        max_off_sector_modulus: scan.max_off_sector_modulus(),
        same_band_off_sector_modulus: same_band,
        hermitian_defect: scan.hermitian_defect(),
        theorem_check: scan.theorem_check,
        delta_l_histogram: scan
            .delta_l_histogram()
            .into_iter()
            .map(|(delta_l, bin)| DeltaRow { delta_l, bin })
            .collect(),
    };
    paths.push(write_json(dir, "summary_scan.json", &summary)?);
    Ok(paths)
}

#[derive(Serialize)]
struct WindingSummary<'a> {
    command: &'static str,
    config: &'a RunConfig,
    states: usize,
    defined: usize,
    matching_symmetric_sector: usize,
    observable: Option<String>,
}

pub fn cmd_winding(
    cfg: &RunConfig,
    dir: &Path,
    observable: Option<&str>,
    band: Option<usize>,
) -> Result<Vec<PathBuf>, CliError> {
    let grid: RingGrid = cfg.grid();
    if let Some(b) = band {
        if b >= cfg.bands {
            return Err(CliError::Config(format!("invalid value for `--band`: {b} (must be below bands = {})", cfg.bands)));
        }
    }
    let bands = bands_for(cfg)?;
    let selected: Vec<_> = bands
        .states()
        .iter()
        .filter(|s| band.is_none_or(|b| s.band == b))
        .collect();
    let windings: Vec<_> = selected.iter().map(|s| winding_number(&s.wavefunction)).collect();
    let mut paths = Vec::new();
    paths.push(write_csv(
        dir,
        "winding.csv",
        &["band", "l", "l_symmetric", "winding", "min_modulus", "max_step", "residual"],
        selected.iter().zip(&windings).map(|(s, w)| {
            vec![
                s.band.to_string(),
                s.wavevector_index.to_string(),
                grid.symmetric_sector(s.wavevector_index).to_string(),
                w.value.map(|v| v.to_string()).unwrap_or_else(|| "undefined".into()),
                num(w.min_modulus),
                num(w.max_step),
                num(w.residual),
            ]
        }),
    )?);

    if let Some(token) = observable {
        let obs = resolve_observable(cfg, Some(&bands), token)?;
        let probes = selected
            .iter()
            .map(|s| probe_operator(&obs.operator, &bands, s.band, s.wavevector_index))
            .collect::<crate::Result<Vec<_>>>()?;
        let mut header: Vec<String> = ["band", "l", "norm", "winding"].iter().map(|s| s.to_string()).collect();
        header.extend((0..grid.n_cells()).map(|l| format!("weight_{l}")));
        let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
        paths.push(write_csv(
            dir,
            "probe.csv",
            &header_refs,
            probes.iter().map(|p| {
                let mut row = vec![
                    p.band.to_string(),
                    p.l.to_string(),
                    num(p.norm),
                    p.winding.value.map(|v| v.to_string()).unwrap_or_else(|| "undefined".into()),
                ];
                row.extend(p.sector_weights.iter().map(|w| num(*w)));
                row
            }),
        )?);
    }

    let summary = WindingSummary {
        command: "winding",
        config: cfg,
        states: selected.len(),
        defined: windings.iter().filter(|w| w.value.is_some()).count(),
        matching_symmetric_sector: selected
            .iter()
            .zip(&windings)
            .filter(|(s, w)| w.value == Some(grid.symmetric_sector(s.wavevector_index)))
            .count(),
        observable: observable.map(str::to_string),
    };
    paths.push(write_json(dir, "summary_winding.json", &summary)?);
    Ok(paths)
}

#[derive(Serialize)]
struct PropagateSummary<'a> {
    command: &'static str,
    config: &'a RunConfig,
    kinetic_scheme: String,
    perturbation: String,
    source_index: usize,
    target_index: usize,
    ring_distance: f64,
    kernel_modulus: f64,
    perturbation_kernel_modulus: f64,
    linear_response: LinearResponse,
    second_order_slope: Option<f64>,
    max_unitarity_defect: f64,
    profile_epsilon: f64,
}

pub fn cmd_propagate(cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let dynamics = cfg
        .dynamics
        .as_ref()
        .ok_or_else(|| CliError::Config("missing required key `dynamics`".into()))?;
    let grid = cfg.grid();
    let h = build_hamiltonian_with_scheme(grid, &cfg.potential, cfg.lattice.mass, dynamics.kinetic_scheme)?;
    let r = resolve_observable(cfg, None, &dynamics.perturbation)?;
    let source = grid.cell_center_index(dynamics.source_cell);
    let target = grid.cell_center_index(dynamics.target_cell);
    let exp = PropagationExperiment::new(
        h,
        r.operator.clone(),
        dynamics.epsilons.clone(),
        source,
        target,
        dynamics.hbar,
    )?;
    let sweep = exp.sweep();
    let profile_epsilon = dynamics.epsilons.iter().copied().fold(0.0, f64::max);
    let profile = exp.transport_profile(profile_epsilon);
    let mut paths = Vec::new();
    paths.push(write_csv(
        dir,
        "sweep.csv",
        &["epsilon", "re", "im", "modulus", "first_re", "first_im", "first_modulus", "deviation", "unitarity_defect"],
        sweep.iter().map(|p| {
            vec![
                num(p.epsilon),
                num(p.exact[0]),
                num(p.exact[1]),
                num(p.exact_modulus),
                num(p.first_order[0]),
                num(p.first_order[1]),
                num(p.first_order_modulus),
                num(p.deviation),
                num(p.unitarity_defect),
            ]
        }),
    )?);
    paths.push(write_csv(
        dir,
        "profile.csv",
        &["index", "x", "probability"],
        profile
            .iter()
            .enumerate()
            .map(|(j, p)| vec![j.to_string(), num(grid.x(j)), num(*p)]),
    )?);
    let second = exp.second_order_slope();
    let summary = PropagateSummary {
        command: "propagate",
        config: cfg,
        kinetic_scheme: dynamics.kinetic_scheme.to_string(),
        perturbation: r.label,
        source_index: source,
        target_index: target,
        ring_distance: exp.ring_distance(),
        kernel_modulus: exp.total().kernel(source, target).norm(),
        perturbation_kernel_modulus: exp.perturbation().kernel(source, target).norm(),
        linear_response: exp.linear_response(),
        second_order_slope: second.is_finite().then_some(second),
        max_unitarity_defect: sweep.iter().map(|p| p.unitarity_defect).fold(0.0, f64::max),
        profile_epsilon,
    };
    paths.push(write_json(dir, "summary_propagate.json", &summary)?);
    Ok(paths)
}
