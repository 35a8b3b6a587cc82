//! Command implementations behind the `electrodiff` binary.
//!
//! Every run is described by a [`RunManifest`]: the command with its
//! arguments, the fully resolved parameter set, the depth cap and the output
//! path. [`execute`] depends on nothing else, so a saved manifest replays to
//! byte-identical output.

// Negated comparisons reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt::Write as _;
use std::path::PathBuf;

use electrodiff::backlund::{ladder, ladder_report, LadderConfig};
use electrodiff::corpuscle::{simulate_flux, WalkConfig, RNG_ALGORITHM};
use electrodiff::planck::{make_planck_seed, quantization_report, PlanckSeedSpec, Preset};
use electrodiff::verify::residual_check;
use electrodiff::{sample_profiles, Error, SolutionState};
use serde::{Deserialize, Serialize};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_BAD_INPUT: u8 = 2;
pub const EXIT_DEPTH_CAP: u8 = 3;
pub const EXIT_EVAL: u8 = 4;

/// `simulate` exits with [`EXIT_FAIL`] when `|z| ≥` this.
pub const SIMULATE_Z_GATE: f64 = 4.0;

pub const TOOL: &str = "electrodiff";

/// A command and its arguments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case", deny_unknown_fields)]
pub enum Task {
    Ladder { n_min: i32, n_max: i32 },
    Profiles { n: i32, grid: usize },
    Verify { n: i32, grid: usize, tol: f64 },
    Quantize { n_min: i32, n_max: i32 },
    Simulate { duration: f64, cells: u32, batches: u32 },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Ladder { .. } => "ladder",
            Task::Profiles { .. } => "profiles",
            Task::Verify { .. } => "verify",
            Task::Quantize { .. } => "quantize",
            Task::Simulate { .. } => "simulate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    #[serde(flatten)]
    pub task: Task,
    /// Preset the parameters were taken from, if any.
    pub preset: Option<String>,
    /// Parameter file the parameters were read from, if any.
    pub params_file: Option<PathBuf>,
    /// Resolved parameters in the parameter-file format.
    pub params: serde_json::Value,
    pub depth_cap: u32,
    pub out: Option<PathBuf>,
    pub rng_seed: Option<u64>,
    pub rng: Option<String>,
}

impl RunManifest {
    pub fn new(task: Task, source: &ParamSource, depth_cap: u32, out: Option<PathBuf>, rng_seed: Option<u64>) -> Self {
        let (preset, params_file) = match &source.origin {
            Origin::Preset(p) => (Some(p.name().to_string()), None),
            Origin::File(f) => (None, Some(f.clone())),
        };
        Self {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            task,
            preset,
            params_file,
            params: source.spec.to_json_value(),
            depth_cap,
            out,
            rng: rng_seed.map(|_| RNG_ALGORITHM.to_string()),
            rng_seed,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("manifest serializes")
    }

    pub fn from_json_str(text: &str) -> Result<Self, Failure> {
        let m: Self = serde_json::from_str(text).map_err(|e| Failure::bad_input(format!("manifest: {e}")))?;
        if m.tool != TOOL {
            return Err(Failure::bad_input(format!(
                "manifest: not an {TOOL} manifest (tool {:?})",
                m.tool
            )));
        }
        Ok(m)
    }

    /// The parameter set recorded in the manifest.
    pub fn spec(&self) -> Result<PlanckSeedSpec, Failure> {
        PlanckSeedSpec::from_json_str(&self.params.to_string()).map_err(|e| Failure::from_error("manifest params", e))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Origin {
    Preset(Preset),
    File(PathBuf),
}

/// Where a run's parameters came from, and what they resolved to.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSource {
    pub origin: Origin,
    pub spec: PlanckSeedSpec,
}

impl ParamSource {
    /// `--params FILE` wins over `--preset NAME`; neither means the canonical preset.
    pub fn resolve(params: Option<PathBuf>, preset: Option<&str>) -> Result<Self, Failure> {
        if let Some(path) = params {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Failure::bad_input(format!("--params {}: {e}", path.display())))?;
            let spec = PlanckSeedSpec::from_json_str(&text)
                .map_err(|e| Failure::from_error(&format!("--params {}", path.display()), e))?;
            return Ok(Self {
                origin: Origin::File(path),
                spec,
            });
        }
        let preset =
            Preset::from_name(preset.unwrap_or("canonical")).map_err(|e| Failure::from_error("--preset", e))?;
        Ok(Self {
            origin: Origin::Preset(preset),
            spec: preset.spec(),
        })
    }
}

/// A run that could not produce its output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn bad_input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_BAD_INPUT,
            message: message.into(),
        }
    }

    /// Exit code from the error kind, message prefixed with the offending flag.
    pub fn from_error(context: &str, e: Error) -> Self {
        let code = match e {
            Error::DepthCap { .. } => EXIT_DEPTH_CAP,
            Error::Eval(_) | Error::StepUnderflow { .. } => EXIT_EVAL,
            _ => EXIT_BAD_INPUT,
        };
        let message = match e {
            Error::DepthCap { .. } => format!("{context}: {e} (raise it with --depth-cap or ELECTRODIFF_DEPTH_CAP)"),
            Error::Eval(ref ev) => format!("{context}: evaluation failed at x = {}: {ev}", ev.x()),
            _ => format!("{context}: {e}"),
        };
        Self { code, message }
    }
}

/// Text to emit and the exit code that goes with it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub text: String,
    pub code: u8,
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn member(spec: &PlanckSeedSpec, n: i32, cfg: &LadderConfig) -> Result<SolutionState, Failure> {
    cfg.check(n).map_err(|e| Failure::from_error("--n", e))?;
    let seed = make_planck_seed(spec).map_err(|e| Failure::from_error("params", e))?;
    let ladder = ladder(&seed, n.min(0), n.max(0), cfg).map_err(|e| Failure::from_error("seed", e))?;
    Ok(ladder.get(n).expect("index inside requested range").clone())
}

pub fn execute(m: &RunManifest) -> Result<Output, Failure> {
    let spec = m.spec()?;
    let cfg = LadderConfig { depth_cap: m.depth_cap };
    let ok = |text| Ok(Output { text, code: EXIT_OK });
    match m.task {
        Task::Ladder { n_min, n_max } => {
            if n_min > n_max {
                return Err(Failure::bad_input(format!(
                    "--n-min {n_min} is greater than --n-max {n_max}"
                )));
            }
            cfg.check(n_min).map_err(|e| Failure::from_error("--n-min", e))?;
            cfg.check(n_max).map_err(|e| Failure::from_error("--n-max", e))?;
            let seed = make_planck_seed(&spec).map_err(|e| Failure::from_error("params", e))?;
            let report =
                ladder_report(&seed, n_min, n_max, &cfg).map_err(|e| Failure::from_error("--n-min/--n-max", e))?;
            ok(json(&report))
        }
        Task::Profiles { n, grid } => {
            if grid < 2 {
                return Err(Failure::bad_input(format!("--grid {grid}: need at least 2 points")));
            }
            let s = member(&spec, n, &cfg)?;
            let rows = sample_profiles(&s, grid).map_err(|e| Failure::from_error("profiles", e))?;
            let mut text = String::from("x,c_plus,c_minus,E\n");
            for r in rows {
                writeln!(
                    text,
                    "{:.16e},{:.16e},{:.16e},{:.16e}",
                    r.x, r.c_plus, r.c_minus, r.field
                )
                .unwrap();
            }
            ok(text)
        }
        Task::Verify { n, grid, tol } => {
            if !(tol >= 0.0) {
                return Err(Failure::bad_input(format!(
                    "--tol {tol}: must be a non-negative number"
                )));
            }
            let s = member(&spec, n, &cfg)?;
            let report = residual_check(&s, grid, tol).map_err(|e| match e {
                Error::GridTooSmall { .. } => Failure::from_error("--grid", e),
                e => Failure::from_error("verify", e),
            })?;
            Ok(Output {
                text: json(&report),
                code: if report.pass { EXIT_OK } else { EXIT_FAIL },
            })
        }
        Task::Quantize { n_min, n_max } => {
            let report = quantization_report(&spec, n_min, n_max).map_err(|e| Failure::from_error("quantize", e))?;
            ok(json(&report))
        }
        Task::Simulate {
            duration,
            cells,
            batches,
        } => {
            let seed = m
                .rng_seed
                .ok_or_else(|| Failure::bad_input("simulate: manifest has no rng_seed"))?;
            let cfg = WalkConfig {
                duration,
                cells,
                batches,
                ..WalkConfig::new(spec, seed)
            };
            let result = simulate_flux(&cfg).map_err(|e| Failure::from_error("simulate", e))?;
            Ok(Output {
                text: json(&result),
                code: if result.z_score.abs() < SIMULATE_Z_GATE {
                    EXIT_OK
                } else {
                    EXIT_FAIL
                },
            })
        }
    }
}
