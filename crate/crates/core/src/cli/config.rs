//! Run configuration: a TOML file with explicit keys, validated into a fully
//! resolved [`RunConfig`] that is echoed into every JSON summary.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::derivative::{DerivativeScheme, FD_ORDERS, MAX_DERIVATIVE_ORDER};
use crate::grid::{RingGrid, MIN_CELLS, MIN_POINTS_PER_CELL};
use crate::lattice::{Harmonic, PotentialSpec};
use crate::observable::{LocalObservableSeries, SeriesTerm};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn missing(key: &str) -> ConfigError {
    ConfigError(format!("missing required key `{key}`"))
}

fn invalid(key: &str, value: impl std::fmt::Display, why: &str) -> ConfigError {
    ConfigError(format!("invalid value for `{key}`: {value} ({why})"))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema_version: Option<u32>,
    output_dir: Option<PathBuf>,
    bands: Option<i64>,
    lattice: Option<RawLattice>,
    potential: Option<RawPotential>,
    #[serde(default)]
    observables: Vec<RawObservable>,
    dynamics: Option<RawDynamics>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLattice {
    n_cells: Option<i64>,
    cell_length: Option<f64>,
    points_per_cell: Option<i64>,
    mass: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPotential {
    constant_term: Option<f64>,
    #[serde(default)]
    harmonics: Vec<RawHarmonic>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHarmonic {
    h: Option<i64>,
    alpha: Option<f64>,
    beta: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObservable {
    name: Option<String>,
    terms: Option<Vec<[f64; 4]>>,
    symmetrize: Option<bool>,
    scheme: Option<String>,
    locality_scheme: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDynamics {
    epsilons: Option<Vec<f64>>,
    source_cell: Option<i64>,
    target_cell: Option<i64>,
    perturbation: Option<String>,
    kinetic_scheme: Option<String>,
    hbar: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeConfig {
    pub n_cells: usize,
    pub cell_length: f64,
    pub points_per_cell: usize,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservableConfig {
    pub name: String,
    pub series: LocalObservableSeries,
    pub scheme: DerivativeScheme,
    pub locality_scheme: DerivativeScheme,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicsConfig {
    pub epsilons: Vec<f64>,
    pub source_cell: usize,
    pub target_cell: usize,
    pub perturbation: String,
    pub kinetic_scheme: DerivativeScheme,
    pub hbar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub schema_version: u32,
    pub output_dir: PathBuf,
    pub bands: usize,
    pub lattice: LatticeConfig,
    pub potential: PotentialSpec,
    pub observables: Vec<ObservableConfig>,
    pub dynamics: Option<DynamicsConfig>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| ConfigError(format!("malformed config: {e}")))?;
        resolve(raw)
    }

    pub fn grid(&self) -> RingGrid {
        RingGrid::new(
            self.lattice.n_cells,
            self.lattice.cell_length,
            self.lattice.points_per_cell,
        )
        .expect("validated on load")
    }

    pub fn observable(&self, name: &str) -> Option<&ObservableConfig> {
        self.observables.iter().find(|o| o.name == name)
    }
}

pub fn parse_scheme(key: &str, text: &str) -> Result<DerivativeScheme, ConfigError> {
    let scheme = match text {
        "spectral" => DerivativeScheme::Spectral,
        other => {
            let order = other
                .strip_prefix("fd")
                .and_then(|o| o.parse::<usize>().ok())
                .ok_or_else(|| invalid(key, format!("\"{text}\""), "expected \"spectral\" or fd2/fd4/fd6/fd8"))?;
            DerivativeScheme::FiniteDifference { order }
        }
    };
    if let DerivativeScheme::FiniteDifference { order } = scheme {
        if !FD_ORDERS.contains(&order) {
            return Err(invalid(key, format!("\"{text}\""), "expected fd2, fd4, fd6 or fd8"));
        }
    }
    Ok(scheme)
}

fn positive_int(key: &str, v: Option<i64>, min: i64) -> Result<usize, ConfigError> {
    let v = v.ok_or_else(|| missing(key))?;
    if v < min {
        return Err(invalid(key, v, &format!("must be >= {min}")));
    }
    Ok(v as usize)
}

fn positive_real(key: &str, v: Option<f64>) -> Result<f64, ConfigError> {
    let v = v.ok_or_else(|| missing(key))?;
    if !(v.is_finite() && v > 0.0) {
        return Err(invalid(key, v, "must be a positive finite number"));
    }
    Ok(v)
}

fn finite(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(key, v, "must be finite"))
    }
}

fn resolve(raw: RawConfig) -> Result<RunConfig, ConfigError> {
    let schema_version = raw.schema_version.unwrap_or(SCHEMA_VERSION);
    if schema_version != SCHEMA_VERSION {
        return Err(invalid("schema_version", schema_version, "only version 1 is supported"));
    }

    let lat = raw.lattice.ok_or_else(|| missing("lattice"))?;
    let lattice = LatticeConfig {
        n_cells: positive_int("lattice.n_cells", lat.n_cells, MIN_CELLS as i64)?,
        cell_length: positive_real("lattice.cell_length", lat.cell_length)?,
        points_per_cell: positive_int(
            "lattice.points_per_cell",
            lat.points_per_cell,
            MIN_POINTS_PER_CELL as i64,
        )?,
        mass: match lat.mass {
            None => 1.0,
            some => positive_real("lattice.mass", some)?,
        },
    };

    let bands = match raw.bands {
        None => 4.min(lattice.points_per_cell),
        Some(b) if b >= 1 && b as usize <= lattice.points_per_cell => b as usize,
        Some(b) => {
            return Err(invalid(
                "bands",
                b,
                &format!("must be between 1 and points_per_cell = {}", lattice.points_per_cell),
            ))
        }
    };

    let potential = match raw.potential {
        None => PotentialSpec::free(),
        Some(p) => {
            let constant_term = finite("potential.constant_term", p.constant_term.unwrap_or(0.0))?;
            let mut harmonics: Vec<Harmonic> = Vec::new();
            for (i, hm) in p.harmonics.into_iter().enumerate() {
                let key = |f: &str| format!("potential.harmonics[{i}].{f}");
                let h = hm.h.ok_or_else(|| missing(&key("h")))?;
                if h < 1 {
                    return Err(invalid(&key("h"), h, "must be >= 1"));
                }
                if harmonics.iter().any(|x| x.h as i64 == h) {
                    return Err(invalid(&key("h"), h, "harmonic index repeated"));
                }
                harmonics.push(Harmonic {
                    h: h as u32,
                    alpha: finite(&key("alpha"), hm.alpha.unwrap_or(0.0))?,
                    beta: finite(&key("beta"), hm.beta.unwrap_or(0.0))?,
                });
            }
            PotentialSpec {
                constant_term,
                harmonics,
            }
        }
    };

    let mut observables: Vec<ObservableConfig> = Vec::new();
    for (i, o) in raw.observables.into_iter().enumerate() {
        let key = |f: &str| format!("observables[{i}].{f}");
        let name = o.name.ok_or_else(|| missing(&key("name")))?;
        if name.is_empty() || name.contains('(') || super::builtin_names().contains(&name.as_str()) {
            return Err(invalid(&key("name"), format!("\"{name}\""), "empty or clashes with a builtin token"));
        }
        if observables.iter().any(|x| x.name == name) {
            return Err(invalid(&key("name"), format!("\"{name}\""), "duplicate observable name"));
        }
        let raw_terms = o.terms.ok_or_else(|| missing(&key("terms")))?;
        let mut terms = Vec::with_capacity(raw_terms.len());
        for (t, [m, n, c, d]) in raw_terms.into_iter().enumerate() {
            let tk = format!("observables[{i}].terms[{t}]");
            let as_index = |v: f64, what: &str, max: f64| -> Result<u32, ConfigError> {
                if v.fract() != 0.0 || v < 0.0 || v > max {
                    Err(invalid(&tk, v, &format!("{what} must be an integer in [0, {max}]")))
                } else {
                    Ok(v as u32)
                }
            };
            terms.push(SeriesTerm {
                m: as_index(m, "m", u32::MAX as f64)?,
                n: as_index(n, "n", MAX_DERIVATIVE_ORDER as f64)?,
                c: finite(&tk, c)?,
                d: finite(&tk, d)?,
            });
        }
        observables.push(ObservableConfig {
            name,
            series: LocalObservableSeries {
                terms,
                symmetrize: o.symmetrize.unwrap_or(true),
            },
            scheme: parse_scheme(&key("scheme"), o.scheme.as_deref().unwrap_or("spectral"))?,
            locality_scheme: parse_scheme(
                &key("locality_scheme"),
                o.locality_scheme.as_deref().unwrap_or("fd4"),
            )?,
        });
    }

    let dynamics = match raw.dynamics {
        None => None,
        Some(d) => {
            let epsilons = d.epsilons.ok_or_else(|| missing("dynamics.epsilons"))?;
            if epsilons.is_empty() {
                return Err(invalid("dynamics.epsilons", "[]", "at least one epsilon is required"));
            }
            if let Some(e) = epsilons.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
                return Err(invalid("dynamics.epsilons", e, "every epsilon must be positive"));
            }
            let cell = |key: &str, v: Option<i64>| -> Result<usize, ConfigError> {
                let v = v.ok_or_else(|| missing(key))?;
                if v < 0 || v as usize >= lattice.n_cells {
                    return Err(invalid(key, v, &format!("must be a cell index below {}", lattice.n_cells)));
                }
                Ok(v as usize)
            };
            Some(DynamicsConfig {
                epsilons,
                source_cell: cell("dynamics.source_cell", d.source_cell)?,
                target_cell: cell("dynamics.target_cell", d.target_cell)?,
                perturbation: d.perturbation.unwrap_or_else(|| "none".to_string()),
                kinetic_scheme: parse_scheme(
                    "dynamics.kinetic_scheme",
                    d.kinetic_scheme.as_deref().unwrap_or("fd8"),
                )?,
                hbar: match d.hbar {
                    None => 1.0,
                    some => positive_real("dynamics.hbar", some)?,
                },
            })
        }
    };

    Ok(RunConfig {
        schema_version,
        output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("out")),
        bands,
        lattice,
        potential,
        observables,
        dynamics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
        [lattice]
        n_cells = 8
        cell_length = 1.0
        points_per_cell = 32
    "#;

    #[test]
    fn defaults_are_resolved() {
        let c = RunConfig::parse(BASE).unwrap();
        assert_eq!(c.bands, 4);
        assert_eq!(c.lattice.mass, 1.0);
        assert_eq!(c.potential, PotentialSpec::free());
        assert_eq!(c.output_dir, PathBuf::from("out"));
        assert!(c.dynamics.is_none());
    }

    #[test]
    fn missing_key_is_named() {
        let err = RunConfig::parse("[lattice]\nn_cells = 8\npoints_per_cell = 32\n").unwrap_err();
        assert!(err.0.contains("lattice.cell_length"), "{err}");
    }

    #[test]
    fn invalid_values_are_named() {
        let err = RunConfig::parse("[lattice]\nn_cells = 8\ncell_length = 1.0\npoints_per_cell = 4\n").unwrap_err();
        assert!(err.0.contains("points_per_cell") && err.0.contains('4'), "{err}");
        let text = format!("{BASE}\n[dynamics]\nepsilons = []\nsource_cell = 2\ntarget_cell = 6\n");
        let err = RunConfig::parse(&text).unwrap_err();
        assert!(err.0.contains("dynamics.epsilons"), "{err}");
        let text = format!("{BASE}\n[[observables]]\nname = \"x\"\nterms = [[1.5, 0, 1, 0]]\n");
        assert!(RunConfig::parse(&text).unwrap_err().0.contains("terms[0]"));
        let text = format!("{BASE}\n[[observables]]\nname = \"y\"\nscheme = \"fd5\"\nterms = [[1, 0, 1, 0]]\n");
        assert!(RunConfig::parse(&text).unwrap_err().0.contains("scheme"));
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = RunConfig::parse(&format!("{BASE}\nbogus = 1\n")).unwrap_err();
        assert!(err.0.contains("bogus"), "{err}");
    }

    #[test]
    fn observables_and_potential() {
        let text = format!(
            "{BASE}\n[potential]\nharmonics = [{{ h = 1, alpha = 2.0 }}]\n\
             [[observables]]\nname = \"h1\"\nterms = [[1, 0, 1, 0], [0, 2, 0.5, 0]]\nscheme = \"fd6\"\n"
        );
        let c = RunConfig::parse(&text).unwrap();
        assert_eq!(c.potential, PotentialSpec::cosine(2.0));
        let o = c.observable("h1").unwrap();
        assert_eq!(o.series.terms[1], SeriesTerm::new(0, 2, 0.5, 0.0));
        assert!(o.series.symmetrize);
        assert_eq!(o.scheme, DerivativeScheme::FiniteDifference { order: 6 });
        assert_eq!(o.locality_scheme, DerivativeScheme::FiniteDifference { order: 4 });
    }
}
