//! Run configuration: merging command-line flags over an optional TOML
//! file, with validation errors surfaced as usage errors (exit code 2).

use std::collections::BTreeMap;
use std::path::PathBuf;

use berwald::catalog::{self, Scenario};
use berwald::conformal::{default_tolerance, CHECK_NAMES};
use berwald::SupportElement;
use serde::Deserialize;

/// Name of the generator behind `--seed`; recorded in output headers so a
/// run can be reproduced byte for byte.
pub const RNG_NAME: &str = "chacha8";

const DEFAULT_ORDER: usize = 6;
const DEFAULT_COUNT: usize = 16;
const DEFAULT_DT: f64 = 1e-3;
const DEFAULT_STEPS: usize = 2000;

/// File layout mirroring the command-line flags. Unknown keys are
/// rejected so typos do not silently fall back to defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub scenario: Option<String>,
    pub metric: Option<String>,
    pub factor: Option<String>,
    pub points: Option<Vec<[f64; 4]>>,
    pub seed: Option<u64>,
    pub count: Option<usize>,
    pub order: Option<usize>,
    pub format: Option<String>,
    pub output: Option<PathBuf>,
    pub tolerances: Option<BTreeMap<String, f64>>,
    pub checks: Option<Vec<String>>,
    pub dt: Option<f64>,
    pub steps: Option<usize>,
    pub transformed: Option<bool>,
    pub bound: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &PathBuf) -> Result<FileConfig, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("bad config {}: {e}", path.display()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Table,
    Json,
    Csv,
}

impl Format {
    fn parse(name: &str) -> Result<Format, String> {
        match name {
            "table" => Ok(Format::Table),
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format {other:?} (table, json, csv)")),
        }
    }
}

/// Where the support elements of a run come from.
#[derive(Clone, Debug)]
pub enum PointSource {
    Explicit(Vec<SupportElement>),
    Sampled { seed: u64, count: usize },
}

/// Everything a subcommand needs to run, fully validated.
pub struct RunConfig {
    pub scenario: Scenario,
    pub points: PointSource,
    pub order: usize,
    pub tolerances: BTreeMap<String, f64>,
    pub checks: Vec<String>,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub dt: f64,
    pub steps: usize,
    pub transformed: bool,
    pub bound: Option<f64>,
}

/// The shared command-line flags, before merging with the file.
#[derive(Debug, Default, clap::Args)]
pub struct RunArgs {
    /// Built-in scenario name (see the catalog subcommand).
    #[arg(long, conflicts_with_all = ["metric", "factor"])]
    pub scenario: Option<String>,

    /// Metric name; must be paired with --factor.
    #[arg(long, requires = "factor")]
    pub metric: Option<String>,

    /// Conformal factor name; must be paired with --metric.
    #[arg(long, requires = "metric")]
    pub factor: Option<String>,

    /// Support element x1,x2,y1,y2. Repeat for several points.
    #[arg(
        long = "point",
        value_name = "X1,X2,Y1,Y2",
        conflicts_with_all = ["seed", "count"],
        allow_hyphen_values = true
    )]
    pub points: Vec<String>,

    /// Seed for sampled support elements.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Number of sampled support elements.
    #[arg(long)]
    pub count: Option<usize>,

    /// Jet order for the analysis (at least 4).
    #[arg(long)]
    pub order: Option<usize>,

    /// Tolerance override NAME=VALUE; also spelled --tol.NAME VALUE.
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    pub tolerances: Vec<String>,

    /// TOML configuration file; explicit flags override its entries.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Write output here instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,

    /// Output format.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

fn parse_point(text: &str) -> Result<SupportElement, String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 4 {
        return Err(format!(
            "point {text:?} must have four comma-separated numbers"
        ));
    }
    let mut vals = [0.0; 4];
    for (slot, part) in vals.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse::<f64>()
            .map_err(|_| format!("point {text:?}: {part:?} is not a number"))?;
    }
    Ok(SupportElement::new([vals[0], vals[1]], [vals[2], vals[3]]))
}

fn parse_tolerance(text: &str) -> Result<(String, f64), String> {
    let (name, value) = text
        .split_once('=')
        .ok_or_else(|| format!("tolerance {text:?} must be NAME=VALUE"))?;
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|_| format!("tolerance {text:?}: {value:?} is not a number"))?;
    if !(value.is_finite() && value > 0.0) {
        return Err(format!("tolerance {text:?} must be positive and finite"));
    }
    Ok((name.trim().to_string(), value))
}

fn validate_check_name(name: &str) -> Result<(), String> {
    if CHECK_NAMES.contains(&name) {
        Ok(())
    } else {
        Err(format!(
            "unknown check {name:?} (known: {})",
            CHECK_NAMES.join(", ")
        ))
    }
}

/// Merge flags over the file and validate. `checks_requested` comes from
/// the check subcommand; other subcommands pass an empty slice.
pub fn resolve(args: &RunArgs, checks_requested: &[String]) -> Result<RunConfig, String> {
    let file = match &args.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };

    // Scenario selection: explicit flags first, then the file. A named
    // scenario and a metric/factor pair are alternatives at each layer.
    let scenario = if let Some(name) = &args.scenario {
        *catalog::scenario(name).ok_or_else(|| format!("unknown scenario {name:?}"))?
    } else if let (Some(m), Some(p)) = (&args.metric, &args.factor) {
        catalog::custom_scenario(m, p)
            .ok_or_else(|| format!("unknown metric {m:?} or factor {p:?}"))?
    } else if let Some(name) = &file.scenario {
        if file.metric.is_some() || file.factor.is_some() {
            return Err("config sets both scenario and metric/factor".to_string());
        }
        *catalog::scenario(name).ok_or_else(|| format!("unknown scenario {name:?}"))?
    } else if let (Some(m), Some(p)) = (&file.metric, &file.factor) {
        catalog::custom_scenario(m, p)
            .ok_or_else(|| format!("unknown metric {m:?} or factor {p:?}"))?
    } else {
        return Err("no scenario selected: pass --scenario or --metric with --factor".to_string());
    };

    // Point source: explicit points and sampling are alternatives; a flag
    // choice overrides whatever the file says.
    let points = if !args.points.is_empty() {
        let pts = args
            .points
            .iter()
            .map(|t| parse_point(t))
            .collect::<Result<Vec<_>, _>>()?;
        PointSource::Explicit(pts)
    } else if args.seed.is_some() || args.count.is_some() {
        PointSource::Sampled {
            seed: args.seed.or(file.seed).unwrap_or(0),
            count: args.count.or(file.count).unwrap_or(DEFAULT_COUNT),
        }
    } else if let Some(pts) = &file.points {
        if file.seed.is_some() || file.count.is_some() {
            return Err("config sets both points and seed/count".to_string());
        }
        PointSource::Explicit(
            pts.iter()
                .map(|v| SupportElement::new([v[0], v[1]], [v[2], v[3]]))
                .collect(),
        )
    } else {
        PointSource::Sampled {
            seed: file.seed.unwrap_or(0),
            count: file.count.unwrap_or(DEFAULT_COUNT),
        }
    };
    if let PointSource::Explicit(pts) = &points {
        if pts.is_empty() {
            return Err("no points given".to_string());
        }
    }
    if let PointSource::Sampled { count, .. } = &points {
        if *count == 0 {
            return Err("count must be at least 1".to_string());
        }
    }

    let order = args.order.or(file.order).unwrap_or(DEFAULT_ORDER);
    if !(4..=berwald::jet::MAX_ORDER).contains(&order) {
        return Err(format!(
            "order {order} out of range (4 through {})",
            berwald::jet::MAX_ORDER
        ));
    }

    // Tolerances: defaults per check, file overrides, then flags.
    let mut tolerances: BTreeMap<String, f64> = CHECK_NAMES
        .iter()
        .filter_map(|&name| default_tolerance(name).map(|tol| (name.to_string(), tol)))
        .collect();
    if let Some(file_tols) = &file.tolerances {
        for (name, value) in file_tols {
            validate_check_name(name)?;
            if !(value.is_finite() && *value > 0.0) {
                return Err(format!("tolerance for {name} must be positive and finite"));
            }
            tolerances.insert(name.clone(), *value);
        }
    }
    for text in &args.tolerances {
        let (name, value) = parse_tolerance(text)?;
        validate_check_name(&name)?;
        tolerances.insert(name, value);
    }

    // Check list: flags, then file, then the full battery.
    let checks: Vec<String> = if !checks_requested.is_empty() {
        checks_requested.to_vec()
    } else if let Some(file_checks) = &file.checks {
        file_checks.clone()
    } else {
        CHECK_NAMES.iter().map(|s| s.to_string()).collect()
    };
    for name in &checks {
        validate_check_name(name)?;
    }

    let format = match (&args.format, &file.format) {
        (Some(f), _) => *f,
        (None, Some(name)) => Format::parse(name)?,
        (None, None) => Format::Table,
    };

    let dt = file.dt.unwrap_or(DEFAULT_DT);
    if !(dt.is_finite() && dt > 0.0) {
        return Err("dt must be positive and finite".to_string());
    }
    let steps = file.steps.unwrap_or(DEFAULT_STEPS);
    if steps == 0 {
        return Err("steps must be at least 1".to_string());
    }

    Ok(RunConfig {
        scenario,
        points,
        order,
        tolerances,
        checks,
        format,
        output: args.output.clone().or(file.output),
        dt,
        steps,
        transformed: file.transformed.unwrap_or(false),
        bound: file.bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_parse_and_reject() {
        let p = parse_point("0.1, 0.2, 1.0, 0.5").unwrap();
        assert_eq!(p.x, [0.1, 0.2]);
        assert_eq!(p.y, [1.0, 0.5]);
        assert!(parse_point("1,2,3").is_err());
        assert!(parse_point("1,2,3,x").is_err());
    }

    #[test]
    fn tolerances_layer_in_order() {
        let args = RunArgs {
            scenario: Some("klein_log_shift".to_string()),
            tolerances: vec!["master_equivalence=1e-6".to_string()],
            ..Default::default()
        };
        let cfg = resolve(&args, &[]).unwrap();
        assert_eq!(cfg.tolerances["master_equivalence"], 1e-6);
        assert_eq!(cfg.tolerances["nondegeneracy"], 1e-9);
    }

    #[test]
    fn unknown_names_are_rejected() {
        let args = RunArgs {
            scenario: Some("nope".to_string()),
            ..Default::default()
        };
        assert!(resolve(&args, &[]).is_err());

        let args = RunArgs {
            scenario: Some("klein_log_shift".to_string()),
            tolerances: vec!["bogus=1e-6".to_string()],
            ..Default::default()
        };
        assert!(resolve(&args, &[]).is_err());
    }
}
