//! Sweep configuration: a TOML file plus command-line overrides.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use weakprobe::selection::{Mat2, QubitState};
use weakprobe::{Complex64, SelectionContext, ThermalGaussianProbe};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    SnrNumeric,
    SnrClosed,
    SnrExact,
    SnrWeak,
    QfiWeak,
    QfiNumeric,
    QfiEffective,
    Purity,
    AppendixB,
}

impl Quantity {
    pub fn name(&self) -> &'static str {
        match self {
            Quantity::SnrNumeric => "snr_numeric",
            Quantity::SnrClosed => "snr_closed",
            Quantity::SnrExact => "snr_exact",
            Quantity::SnrWeak => "snr_weak",
            Quantity::QfiWeak => "qfi_weak",
            Quantity::QfiNumeric => "qfi_numeric",
            Quantity::QfiEffective => "qfi_effective",
            Quantity::Purity => "purity",
            Quantity::AppendixB => "appendix_b",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisName {
    Temperature,
    Theta,
    Phi,
    PMax,
}

impl AxisName {
    pub fn name(&self) -> &'static str {
        match self {
            AxisName::Temperature => "temperature",
            AxisName::Theta => "theta",
            AxisName::Phi => "phi",
            AxisName::PMax => "p_max",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: AxisName,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                if i == n - 1 {
                    return self.stop;
                }
                match self.spacing {
                    Spacing::Linear => self.start + t * (self.stop - self.start),
                    Spacing::Log => (self.start.ln() + t * (self.stop.ln() - self.start.ln())).exp(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub sigma: f64,
    pub mass: f64,
    pub temperature: f64,
    pub hbar: f64,
    pub k_boltzmann: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { sigma: 1.0, mass: 50.0, temperature: 0.0, hbar: 1.0, k_boltzmann: weakprobe::probe::K_BOLTZMANN_AU }
    }
}

impl ProbeConfig {
    pub fn build(&self) -> weakprobe::Result<ThermalGaussianProbe> {
        ThermalGaussianProbe::with_constants(self.sigma, self.mass, self.temperature, self.hbar, self.k_boltzmann)
    }
}

/// Complex literal such as `0.5-0.3i`, `2.31i`, `-i` or `1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexLiteral(pub Complex64);

impl fmt::Display for ComplexLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let z = self.0;
        if z.im.is_sign_negative() {
            write!(f, "{:?}-{:?}i", z.re, -z.im)
        } else {
            write!(f, "{:?}+{:?}i", z.re, z.im)
        }
    }
}

impl FromStr for ComplexLiteral {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || format!("invalid complex literal `{s}`");
        if t.is_empty() {
            return Err(bad());
        }
        let Some(body) = t.strip_suffix('i') else {
            return t.parse::<f64>().map(|re| ComplexLiteral(Complex64::new(re, 0.0))).map_err(|_| bad());
        };
        // split at the last sign that is not part of an exponent
        let bytes = body.as_bytes();
        let split = (1..bytes.len())
            .rev()
            .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
        let (re, im) = match split {
            Some(k) => (&body[..k], &body[k..]),
            None => ("0", body),
        };
        let im = match im {
            "" | "+" => 1.0,
            "-" => -1.0,
            other => other.parse::<f64>().map_err(|_| bad())?,
        };
        let re = re.parse::<f64>().map_err(|_| bad())?;
        Ok(ComplexLiteral(Complex64::new(re, im)))
    }
}

impl Serialize for ComplexLiteral {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ComplexLiteral {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SelectionConfig {
    /// `|i> = cos(phi)|0> + i sin(phi)|1>`, `|f> = |0>`, `A = sigma_x`.
    Phi { phi: f64 },
    /// A `sigma_x` pair realizing the weak value and `|<f|i>|^2 = overlap`.
    WeakValue { weak_value: ComplexLiteral, overlap: f64 },
    /// Explicit states and observable.
    States { pre: [ComplexLiteral; 2], post: [ComplexLiteral; 2], observable: [[ComplexLiteral; 2]; 2] },
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig::Phi { phi: std::f64::consts::FRAC_PI_4 }
    }
}

impl SelectionConfig {
    pub fn build(&self) -> weakprobe::Result<SelectionContext> {
        match self {
            SelectionConfig::Phi { phi } => SelectionContext::qubit_family(*phi),
            SelectionConfig::WeakValue { weak_value, overlap } => SelectionContext::from_weak_value(weak_value.0, *overlap),
            SelectionConfig::States { pre, post, observable } => {
                let obs: Mat2 = [[observable[0][0].0, observable[0][1].0], [observable[1][0].0, observable[1][1].0]];
                SelectionContext::new(QubitState::new(pre[0].0, pre[1].0)?, QubitState::new(post[0].0, post[1].0)?, obs)
            }
        }
    }

    pub fn phi(&self) -> Option<f64> {
        match self {
            SelectionConfig::Phi { phi } => Some(*phi),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub theta: f64,
    pub n_trials: u64,
    /// Overrides the automatic momentum window.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_max: Option<f64>,
    /// Overrides the automatic point count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_points: Option<usize>,
    pub validity_threshold: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            theta: 0.025,
            n_trials: 10_000,
            p_max: None,
            n_points: None,
            validity_threshold: weakprobe::meter::WEAK_VALIDITY_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub quantity: Quantity,
    pub output: PathBuf,
    pub axis: Axis,
    #[serde(default)]
    pub probe: ProbeConfig,
    #[serde(default)]
    pub selection: SelectionConfig,
    #[serde(default)]
    pub run: RunConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            quantity: Quantity::SnrNumeric,
            output: PathBuf::from("sweep.csv"),
            axis: Axis { name: AxisName::Temperature, start: 0.0, stop: 300.0, points: 50, spacing: Spacing::Linear },
            probe: ProbeConfig::default(),
            selection: SelectionConfig::default(),
            run: RunConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Command-line overrides; any field that is set wins over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub sigma: Option<f64>,
    pub mass: Option<f64>,
    pub temperature: Option<f64>,
    pub theta: Option<f64>,
    pub phi: Option<f64>,
    pub n_trials: Option<u64>,
    pub p_max: Option<f64>,
    pub n_points: Option<usize>,
    pub output: Option<PathBuf>,
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: SweepConfig = toml::from_str(text).map_err(|e| ConfigError(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.sigma {
            self.probe.sigma = v;
        }
        if let Some(v) = o.mass {
            self.probe.mass = v;
        }
        if let Some(v) = o.temperature {
            self.probe.temperature = v;
        }
        if let Some(v) = o.theta {
            self.run.theta = v;
        }
        if let Some(v) = o.phi {
            self.selection = SelectionConfig::Phi { phi: v };
        }
        if let Some(v) = o.n_trials {
            self.run.n_trials = v;
        }
        if let Some(v) = o.p_max {
            self.run.p_max = Some(v);
        }
        if let Some(v) = o.n_points {
            self.run.n_points = Some(v);
        }
        if let Some(v) = &o.output {
            self.output = v.clone();
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |field: &str, msg: String| Err(ConfigError(format!("invalid `{field}`: {msg}")));
        let a = &self.axis;
        if !(a.start.is_finite() && a.stop.is_finite() && a.start < a.stop) {
            return err("axis", format!("need start < stop, got {} and {}", a.start, a.stop));
        }
        if a.points < 2 {
            return err("axis.points", format!("need at least 2, got {}", a.points));
        }
        if a.spacing == Spacing::Log && a.start <= 0.0 {
            return err("axis.start", "log spacing needs a positive start".into());
        }
        if a.name == AxisName::Phi && self.selection.phi().is_none() {
            return err("selection", "a phi sweep needs kind = \"phi\"".into());
        }
        if a.name == AxisName::Temperature && a.start < 0.0 {
            return err("axis.start", "temperature must be >= 0".into());
        }
        if a.name == AxisName::PMax && a.start <= 0.0 {
            return err("axis.start", "p_max must be > 0".into());
        }
        self.probe.build().map_err(|e| ConfigError(format!("invalid `probe`: {e}")))?;
        self.selection.build().map_err(|e| ConfigError(format!("invalid `selection`: {e}")))?;
        if !self.run.theta.is_finite() {
            return err("run.theta", "must be finite".into());
        }
        if self.run.n_trials == 0 {
            return err("run.n_trials", "must be >= 1".into());
        }
        if let Some(p) = self.run.p_max {
            if !(p.is_finite() && p > 0.0) {
                return err("run.p_max", format!("must be > 0, got {p}"));
            }
        }
        if let Some(n) = self.run.n_points {
            if n < weakprobe::grid::MIN_POINTS || n % 2 != 0 {
                return err("run.n_points", format!("must be even and >= {}, got {n}", weakprobe::grid::MIN_POINTS));
            }
        }
        if self.quantity == Quantity::AppendixB && a.name != AxisName::PMax && self.run.p_max.is_none() {
            return err("run.p_max", "appendix_b needs a p_max (or a p_max axis)".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_literals() {
        let cases = [
            ("0.5-0.3i", Complex64::new(0.5, -0.3)),
            ("2.31i", Complex64::new(0.0, 2.31)),
            ("-i", Complex64::new(0.0, -1.0)),
            ("i", Complex64::new(0.0, 1.0)),
            ("1", Complex64::new(1.0, 0.0)),
            ("-1e-3+2E+2i", Complex64::new(-1e-3, 200.0)),
            (" 1 + 1i ", Complex64::new(1.0, 1.0)),
        ];
        for (s, z) in cases {
            assert_eq!(s.parse::<ComplexLiteral>().unwrap().0, z, "{s}");
        }
        assert!("1+2j".parse::<ComplexLiteral>().is_err());
        assert!("".parse::<ComplexLiteral>().is_err());
    }

    #[test]
    fn axis_values() {
        let a = Axis { name: AxisName::Temperature, start: 0.0, stop: 300.0, points: 4, spacing: Spacing::Linear };
        assert_eq!(a.values(), vec![0.0, 100.0, 200.0, 300.0]);
        let l = Axis { name: AxisName::PMax, start: 10.0, stop: 1000.0, points: 3, spacing: Spacing::Log };
        let v = l.values();
        assert!((v[1] - 100.0).abs() < 1e-9);
        assert_eq!(v[2], 1000.0);
    }

    #[test]
    fn default_round_trips() {
        let d = SweepConfig::default();
        assert_eq!(SweepConfig::from_toml(&d.to_toml()).unwrap(), d);
    }

    #[test]
    fn diagnostics_name_the_field() {
        let text = "quantity = \"snr_numeric\"\noutput = \"x.csv\"\n[axis]\nname = \"temperature\"\nstart = 0.0\nstop = 300.0\npoints = 1\n";
        let e = SweepConfig::from_toml(text).unwrap_err();
        assert!(e.0.contains("axis.points"), "{e}");
        let e = SweepConfig::from_toml("quantity = \"bogus\"\n").unwrap_err();
        assert!(e.0.contains("line 1"), "{e}");
    }

    #[test]
    fn flags_win() {
        let mut c = SweepConfig::default();
        c.apply(&Overrides { sigma: Some(2.0), phi: Some(0.3), n_points: Some(128), ..Default::default() });
        assert_eq!(c.probe.sigma, 2.0);
        assert_eq!(c.selection, SelectionConfig::Phi { phi: 0.3 });
        assert_eq!(c.run.n_points, Some(128));
    }
}
