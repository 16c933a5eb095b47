//! Name-keyed factories for duration and observation laws.
//!
//! Laws are selected at runtime from strings of the form
//! `name:key=value,key=value`, e.g. `weibull:m=0.59,a=1` or `window:p=0,T=2`.
//! Additional laws can be registered under new names.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use super::duration::{DurationDistribution, EmpiricalDurations, Exponential, GammaLaw, Weibull};
use super::observation::{EmpiricalObservation, ObservationDistribution, PowerWindow, TruncatedExponential, UniformImproper};
use crate::error::{Error, Result};

/// Parsed `key=value` arguments of a law specification.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LawArgs {
    values: BTreeMap<String, String>,
}

impl LawArgs {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::InvalidParameter(format!("missing parameter '{key}'")))
    }

    pub fn number(&self, key: &str) -> Result<f64> {
        let raw = self.require(key)?;
        raw.trim()
            .parse::<f64>()
            .map_err(|_| Error::InvalidParameter(format!("parameter '{key}' is not a number: '{raw}'")))
    }

    fn expect_only(&self, allowed: &[&str]) -> Result<()> {
        match self.values.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(Error::InvalidParameter(format!(
                "unknown parameter '{k}' (expected {})",
                allowed.join(", ")
            ))),
            None => Ok(()),
        }
    }
}

/// Splits `name:k=v,...` into the name and its arguments.
pub fn parse_law_spec(spec: &str) -> Result<(String, LawArgs)> {
    let spec = spec.trim();
    let (name, rest) = match spec.split_once(':') {
        Some((n, r)) => (n.trim(), r.trim()),
        None => (spec, ""),
    };
    if name.is_empty() {
        return Err(Error::InvalidParameter(format!("empty law name in '{spec}'")));
    }
    let mut values = BTreeMap::new();
    for part in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::InvalidParameter(format!("expected key=value, got '{part}'")))?;
        if values.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
            return Err(Error::InvalidParameter(format!("parameter '{}' given twice", k.trim())));
        }
    }
    Ok((name.to_ascii_lowercase(), LawArgs { values }))
}

type DurationFactory = Arc<dyn Fn(&LawArgs) -> Result<DurationDistribution> + Send + Sync>;
type ObservationFactory = Arc<dyn Fn(&LawArgs) -> Result<ObservationDistribution> + Send + Sync>;

/// Registry of duration-law constructors.
#[derive(Clone)]
pub struct DurationRegistry {
    factories: BTreeMap<String, DurationFactory>,
}

impl DurationRegistry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    pub fn register<F>(&mut self, name: &str, factory: F)
    where
        F: Fn(&LawArgs) -> Result<DurationDistribution> + Send + Sync + 'static,
    {
        self.factories.insert(name.to_ascii_lowercase(), Arc::new(factory));
    }

    pub fn names(&self) -> Vec<&str> {
        self.factories.keys().map(String::as_str).collect()
    }

    pub fn build(&self, spec: &str) -> Result<DurationDistribution> {
        let (name, args) = parse_law_spec(spec)?;
        let factory = self.factories.get(&name).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "unknown duration law '{name}' (known: {})",
                self.names().join(", ")
            ))
        })?;
        factory(&args)
    }
}

impl Default for DurationRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register("weibull", |args| {
            args.expect_only(&["m", "a"])?;
            Ok(DurationDistribution::new(Weibull::new(args.number("m")?, args.number("a")?)?))
        });
        r.register("exponential", |args| {
            args.expect_only(&["mean"])?;
            Ok(DurationDistribution::new(Exponential::new(args.number("mean")?)?))
        });
        r.register("gamma", |args| {
            args.expect_only(&["k", "theta"])?;
            Ok(DurationDistribution::new(GammaLaw::new(args.number("k")?, args.number("theta")?)?))
        });
        r.register("empirical", |args| {
            args.expect_only(&["file"])?;
            let taus = crate::ratefilter::read_durations_path(Path::new(args.require("file")?))?;
            Ok(DurationDistribution::new(EmpiricalDurations::new(taus)?))
        });
        r
    }
}

/// Registry of observation-law constructors.
#[derive(Clone)]
pub struct ObservationRegistry {
    factories: BTreeMap<String, ObservationFactory>,
}

impl ObservationRegistry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    pub fn register<F>(&mut self, name: &str, factory: F)
    where
        F: Fn(&LawArgs) -> Result<ObservationDistribution> + Send + Sync + 'static,
    {
        self.factories.insert(name.to_ascii_lowercase(), Arc::new(factory));
    }

    pub fn names(&self) -> Vec<&str> {
        self.factories.keys().map(String::as_str).collect()
    }

    pub fn build(&self, spec: &str) -> Result<ObservationDistribution> {
        let (name, args) = parse_law_spec(spec)?;
        let factory = self.factories.get(&name).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "unknown observation law '{name}' (known: {})",
                self.names().join(", ")
            ))
        })?;
        factory(&args)
    }
}

impl Default for ObservationRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register("uniform", |args| {
            args.expect_only(&[])?;
            Ok(ObservationDistribution::new(UniformImproper))
        });
        r.register("texp", |args| {
            args.expect_only(&["lambda"])?;
            Ok(ObservationDistribution::new(TruncatedExponential::new(args.number("lambda")?)?))
        });
        r.register("window", |args| {
            args.expect_only(&["p", "T"])?;
            Ok(ObservationDistribution::new(PowerWindow::new(args.number("p")?, args.number("T")?)?))
        });
        r.register("empirical", |args| {
            args.expect_only(&["file"])?;
            let offsets = crate::ratefilter::read_offsets_path(Path::new(args.require("file")?))?;
            Ok(ObservationDistribution::new(EmpiricalObservation::new(offsets)?))
        });
        r
    }
}
