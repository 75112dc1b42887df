//! Catalog of ready-to-run experiments.
//!
//! Each entry fixes one simulatable `P`-dynamics and, through `b_hat`, one
//! `Q`-dynamics. Where the underlying martingale problem has several
//! solutions the entry states which one it realizes.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use crate::diagnostic::{Classification, FellerPreset, UiStatus};
use crate::engine::{EngineSettings, Model};
use crate::error::{Error, Result};
use crate::path::{make_domain, CoefficientSet, Interval, PathView};
use crate::quadrature::{integrate_truncated, Endpoint, Improper, Truncation};
use crate::scalar::Real;

type ScalarCoefficient<T> = dyn Fn(T, &PathView<'_, T>) -> T + Send + Sync;

/// Key-value overrides applied on top of a catalog entry.
pub type Overrides = BTreeMap<String, String>;

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioMetadata {
    pub expected: Classification,
    pub analytic_ui: UiStatus,
    /// Which solution of the martingale problem the simulation realizes.
    pub branch: String,
    pub notes: String,
    /// One-dimensional `Q`-dynamics suitable for Feller's test.
    pub feller: Option<FellerPreset>,
}

#[derive(Clone, Debug)]
pub struct Scenario<T> {
    pub name: String,
    pub description: String,
    pub model: Model<T>,
    pub engine: EngineSettings<T>,
    pub horizon: T,
    pub times: Vec<T>,
    pub n_paths: usize,
    pub metadata: ScenarioMetadata,
    /// Overrides in effect, as given.
    pub overrides: Overrides,
    /// Every override key of this entry with its resolved value; building
    /// from this map reproduces the scenario.
    pub parameters: Overrides,
}

/// One line of the catalog listing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub expected: Classification,
}

const CATALOG: [CatalogEntry; 6] = [
    CatalogEntry {
        name: "trivial-unit",
        description: "Brownian motion with zero integrand: Z is identically one",
        expected: Classification::UIMartingale,
    },
    CatalogEntry {
        name: "stopped-bm-to-bessel3",
        description: "Brownian motion killed at zero with mu = 1/x; Q is a Bessel(3) process",
        expected: Classification::MartingaleNotUI,
    },
    CatalogEntry {
        name: "reciprocal-bessel",
        description: "Bessel(3) process from one with mu = -1/x; Z = 1/X and Q is Brownian motion",
        expected: Classification::StrictLocal,
    },
    CatalogEntry {
        name: "constant-branch",
        description: "indicator coefficients on (0, inf) from one; the constant solution",
        expected: Classification::UIMartingale,
    },
    CatalogEntry {
        name: "degenerate-nonunique",
        description: "diffusion switched on once the path leaves zero, mu = x^2; branch selectable",
        expected: Classification::UIMartingale,
    },
    CatalogEntry {
        name: "mckean-quadratic",
        description: "Brownian motion with mu = x^2 up to time T; Q explodes like dX = X^2 dt + dW",
        expected: Classification::StrictLocal,
    },
];

pub fn list_scenarios() -> &'static [CatalogEntry] {
    &CATALOG
}

const COMMON_KEYS: [&str; 7] = ["h", "n", "k_max", "n_max", "horizon", "x0", "depth"];

fn specific_keys(name: &str) -> &'static [&'static str] {
    match name {
        "mckean-quadratic" => &["T"],
        "degenerate-nonunique" => &["branch"],
        _ => &[],
    }
}

/// Keys accepted by `build_scenario` for this entry.
pub fn override_keys(name: &str) -> Vec<&'static str> {
    COMMON_KEYS.iter().chain(specific_keys(name)).copied().collect()
}

fn parse_num(key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::Config(format!("override `{key}`: `{v}` is not a finite number")))
}

fn parse_count(key: &str, v: &str) -> Result<u64> {
    let x = parse_num(key, v)?;
    if x < 0.0 || x.fract() != 0.0 || x > 1e15 {
        return Err(Error::Config(format!("override `{key}`: `{v}` is not a non-negative integer")));
    }
    Ok(x as u64)
}

fn positive(key: &str, v: &str) -> Result<f64> {
    let x = parse_num(key, v)?;
    if x <= 0.0 {
        return Err(Error::Config(format!("override `{key}` must be positive, got {v}")));
    }
    Ok(x)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Branch {
    Frozen,
    Diffusive,
}

fn indicator<T: Real>(c: bool) -> T {
    if c {
        T::one()
    } else {
        T::zero()
    }
}

/// Builds a catalog scenario with `overrides` applied.
pub fn build_scenario<T: Real>(name: &str, overrides: &Overrides) -> Result<Scenario<T>> {
    let entry = CATALOG
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::UnknownScenario(name.to_string()))?;
    let allowed = override_keys(name);
    if let Some(bad) = overrides.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(Error::Config(format!(
            "unknown override `{bad}` for scenario `{name}` (allowed: {})",
            allowed.join(", ")
        )));
    }
    let get = |k: &str| overrides.get(k).map(String::as_str);

    let cut = match get("T") {
        Some(v) => positive("T", v)?,
        None => 1.0,
    };
    let branch = match get("branch") {
        None | Some("frozen") => Branch::Frozen,
        Some("diffusive") => Branch::Diffusive,
        Some(other) => {
            return Err(Error::Config(format!(
                "override `branch`: expected `frozen` or `diffusive`, got `{other}`"
            )))
        }
    };

    let (intervals, x0_default, horizon, times, coefficients, meta): (
        Interval<T>,
        f64,
        f64,
        Vec<f64>,
        CoefficientSet<T>,
        ScenarioMetadata,
    ) = match name {
        "trivial-unit" => (
            Interval::real_line(),
            0.0,
            2.0,
            vec![1.0],
            CoefficientSet::scalar(|_, _| T::zero(), |_, _| T::one(), |_, _| T::zero()).with_flags(true, true),
            ScenarioMetadata {
                expected: Classification::UIMartingale,
                analytic_ui: UiStatus::Unknown,
                branch: "unique".into(),
                notes: "Z = 1 identically; both measures are Wiener measure.".into(),
                feller: Some(FellerPreset::Brownian),
            },
        ),
        "stopped-bm-to-bessel3" => (
            Interval::positive_half_line(),
            1.0,
            10.0,
            vec![0.5, 1.0, 2.0],
            CoefficientSet::scalar(
                |_, _| T::zero(),
                |_, _| T::one(),
                |_, p: &PathView<'_, T>| if p.alive { p.x[0].recip() } else { T::zero() },
            )
            .with_flags(true, true),
            ScenarioMetadata {
                expected: Classification::MartingaleNotUI,
                analytic_ui: UiStatus::Fails,
                branch: "unique".into(),
                notes: "Z is Brownian motion stopped at zero: a true martingale tending to zero, so not uniformly \
                        integrable. Under Q the quadratic variation grows like log t without exploding."
                    .into(),
                feller: Some(FellerPreset::Bessel3),
            },
        ),
        "reciprocal-bessel" => (
            Interval::positive_half_line(),
            1.0,
            1.0,
            vec![1.0],
            CoefficientSet::scalar(
                |_, p: &PathView<'_, T>| p.x[0].recip(),
                |_, _| T::one(),
                |_, p: &PathView<'_, T>| -p.x[0].recip(),
            )
            .with_flags(true, true),
            ScenarioMetadata {
                expected: Classification::StrictLocal,
                analytic_ui: UiStatus::Unknown,
                branch: "diffusive (Bessel(3) under P, Brownian motion under Q)".into(),
                notes: "E[Z_1] = 2 Phi(1) - 1 = 0.68269; Q-paths hit zero where the quadratic variation diverges."
                    .into(),
                feller: Some(FellerPreset::BrownianHalfLine),
            },
        ),
        "constant-branch" => {
            let moved = |p: &PathView<'_, T>| p.x[0] != T::one();
            (
                Interval::positive_half_line(),
                1.0,
                2.0,
                vec![1.0],
                CoefficientSet::scalar(
                    move |_, p: &PathView<'_, T>| indicator::<T>(p.alive && moved(p)) / p.x[0],
                    move |_, p: &PathView<'_, T>| indicator::<T>(moved(p)),
                    move |_, p: &PathView<'_, T>| -indicator::<T>(p.alive && moved(p)) / p.x[0],
                )
                .with_flags(true, true),
                ScenarioMetadata {
                    expected: Classification::UIMartingale,
                    analytic_ui: UiStatus::Unknown,
                    branch: "constant: the diffusion vanishes at the start point so the path never moves".into(),
                    notes: "The same coefficients also admit a Bessel(3) solution, covered by reciprocal-bessel."
                        .into(),
                    feller: None,
                },
            )
        }
        "degenerate-nonunique" => {
            let diffusion: Box<ScalarCoefficient<T>> = match branch {
                Branch::Frozen => Box::new(|_, p: &PathView<'_, T>| {
                    let stuck = p.running_min[0] == T::zero() && p.running_max[0] == T::zero();
                    T::one() - indicator::<T>(stuck)
                }),
                Branch::Diffusive => Box::new(|_, _| T::one()),
            };
            let (expected, label, feller) = match branch {
                Branch::Frozen => (Classification::UIMartingale, "frozen at zero", None),
                Branch::Diffusive => (
                    Classification::StrictLocal,
                    "diffusive (Brownian motion under P)",
                    Some(FellerPreset::Quadratic),
                ),
            };
            (
                Interval::real_line(),
                0.0,
                2.0,
                vec![1.0],
                CoefficientSet::scalar(
                    |_, _| T::zero(),
                    move |t, p| diffusion(t, p),
                    |_, p: &PathView<'_, T>| if p.alive { p.x[0] * p.x[0] } else { T::zero() },
                )
                .with_flags(true, false),
                ScenarioMetadata {
                    expected,
                    analytic_ui: UiStatus::Unknown,
                    branch: label.into(),
                    notes: "The diffusion coefficient is one minus the indicator that the path has never left zero; \
                            on the grid this means every state so far equals zero. The diffusive branch enables \
                            noise from the start."
                        .into(),
                    feller,
                },
            )
        }
        "mckean-quadratic" => {
            let cut_t = T::lit(cut);
            (
                Interval::real_line(),
                0.0,
                cut.max(1.0) * 2.0,
                vec![1.0],
                CoefficientSet::scalar(
                    |_, _| T::zero(),
                    |_, _| T::one(),
                    move |t, p: &PathView<'_, T>| if t <= cut_t { p.x[0] * p.x[0] } else { T::zero() },
                )
                .with_flags(false, false),
                ScenarioMetadata {
                    expected: Classification::StrictLocal,
                    analytic_ui: UiStatus::Unknown,
                    branch: "unique (Wiener measure under P)".into(),
                    notes: "Every continuous path has finite quadratic variation, yet E[Z_T] < 1: the explosive \
                            Q-paths are invisible on the space of continuous paths."
                        .into(),
                    feller: Some(FellerPreset::Quadratic),
                },
            )
        }
        _ => unreachable!("catalog and match agree"),
    };

    let x0 = match get("x0") {
        Some(v) => parse_num("x0", v)?,
        None => x0_default,
    };
    let x0_value = x0;
    let x0 = vec![T::lit(x0)];
    let domain = make_domain(&[intervals], &x0)?;
    let model = Model::new(domain, x0, coefficients)?;

    let mut engine = EngineSettings::<T>::default();
    if let Some(v) = get("h") {
        engine.step = T::lit(positive("h", v)?);
    }
    if let Some(v) = get("k_max") {
        engine.qv_cap = T::lit(positive("k_max", v)?);
    }
    if let Some(v) = get("n_max") {
        let n = parse_count("n_max", v)?;
        if n == 0 || n > u64::from(u32::MAX) {
            return Err(Error::Config(format!("override `n_max` out of range: {v}")));
        }
        engine.max_level = n as u32;
    }
    if let Some(v) = get("depth") {
        let d = parse_count("depth", v)?;
        if d > 30 {
            return Err(Error::Config(format!("override `depth` must be at most 30, got {v}")));
        }
        engine.refinement.max_depth = d as u32;
    }
    let horizon = match get("horizon") {
        Some(v) => positive("horizon", v)?,
        None => horizon,
    };
    let n_paths = match get("n") {
        Some(v) => parse_count("n", v)? as usize,
        None => 10_000,
    };

    let mut parameters = Overrides::new();
    let mut put = |k: &str, v: String| {
        parameters.insert(k.to_string(), v);
    };
    put("h", engine.step.to_f64_lossy().to_string());
    put("n", n_paths.to_string());
    put("k_max", engine.qv_cap.to_f64_lossy().to_string());
    put("n_max", engine.max_level.to_string());
    put("horizon", horizon.to_string());
    put("x0", x0_value.to_string());
    put("depth", engine.refinement.max_depth.to_string());
    if specific_keys(name).contains(&"T") {
        put("T", cut.to_string());
    }
    if specific_keys(name).contains(&"branch") {
        let b = match branch {
            Branch::Frozen => "frozen",
            Branch::Diffusive => "diffusive",
        };
        put("branch", b.to_string());
    }

    Ok(Scenario {
        name: entry.name.to_string(),
        description: entry.description.to_string(),
        model,
        engine,
        horizon: T::lit(horizon),
        times: times.into_iter().map(T::lit).collect(),
        n_paths,
        metadata: meta,
        overrides: overrides.clone(),
        parameters,
    })
}

/// Metadata of a catalog entry at its default branch.
pub fn expected_metadata(name: &str) -> Result<ScenarioMetadata> {
    build_scenario::<f64>(name, &Overrides::new()).map(|s| s.metadata)
}

/// `∫_0^T mu(t, x)^2 dt` along the deterministic path `x(t) = tan(t pi / (2T))`
/// of the quadratic integrand, approached through the truncation schedule.
/// The path reaches infinity at `T`, so it lies outside the continuous paths
/// yet inside the path space with a cemetery.
pub fn counterexample_path_qv(cut: f64) -> Improper<f64> {
    integrate_truncated(
        |t: f64| (t * FRAC_PI_2 / cut).tan().powi(4),
        0.0,
        Endpoint::Finite(cut),
        &Truncation::default(),
    )
}
