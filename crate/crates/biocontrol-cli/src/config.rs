//! `key = value` parameter files with `#` comments.
//!
//! Unknown keys, non-numeric values and non-positive model parameters are
//! rejected with the offending line number. Command-line flags override
//! file values.

use biocontrol::ModelParams;

/// Fully resolved run configuration: the ten fixed rates/capacities plus
/// optional controls and solver knobs.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub alpha1: f64,
    pub beta1: f64,
    pub mu1: f64,
    pub phi1: f64,
    pub c1: f64,
    pub alpha2: f64,
    pub beta2: f64,
    pub mu2: f64,
    pub phi2: f64,
    pub c2: f64,
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    /// Grid size for curve tracing.
    pub n: usize,
    /// Integration horizon for `simulate`.
    pub t_end: f64,
    /// Local error tolerance for the integrator.
    pub tol: f64,
    /// Relative band for "on the Hopf variety".
    pub sigma_tol: Option<f64>,
    /// Shooting seed radius override.
    pub hint_radius: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = ModelParams::reference(1.0, 1.0);
        RunConfig {
            alpha1: p.alpha1,
            beta1: p.beta1,
            mu1: p.mu1,
            phi1: p.phi1,
            c1: p.c1,
            alpha2: p.alpha2,
            beta2: p.beta2,
            mu2: p.mu2,
            phi2: p.phi2,
            c2: p.c2,
            k1: None,
            k2: None,
            n: 200,
            t_end: 100.0,
            tol: 1e-10,
            sigma_tol: None,
            hint_radius: None,
        }
    }
}

#[derive(Debug)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

const MODEL_KEYS: [&str; 12] = [
    "alpha1", "beta1", "mu1", "phi1", "c1", "k1", "alpha2", "beta2", "mu2", "phi2", "c2", "k2",
];

impl RunConfig {
    /// Apply one `key = value` assignment.
    pub fn assign(&mut self, key: &str, value: &str, line: Option<usize>) -> Result<(), ConfigError> {
        let err = |message: String| ConfigError { line, message };
        let number = || -> Result<f64, ConfigError> {
            value
                .parse::<f64>()
                .map_err(|_| err(format!("value `{value}` for key `{key}` is not a number")))
        };
        if MODEL_KEYS.contains(&key) {
            let v = number()?;
            if !v.is_finite() || v <= 0.0 {
                return Err(err(format!("parameter {key} = {v} must be positive")));
            }
            match key {
                "alpha1" => self.alpha1 = v,
                "beta1" => self.beta1 = v,
                "mu1" => self.mu1 = v,
                "phi1" => self.phi1 = v,
                "c1" => self.c1 = v,
                "k1" => self.k1 = Some(v),
                "alpha2" => self.alpha2 = v,
                "beta2" => self.beta2 = v,
                "mu2" => self.mu2 = v,
                "phi2" => self.phi2 = v,
                "c2" => self.c2 = v,
                "k2" => self.k2 = Some(v),
                _ => unreachable!(),
            }
            return Ok(());
        }
        match key {
            "n" => {
                let v = number()?;
                if v < 2.0 || v.fract() != 0.0 {
                    return Err(err(format!("n = {value} must be an integer >= 2")));
                }
                self.n = v as usize;
            }
            "t_end" => {
                let v = number()?;
                if v <= 0.0 {
                    return Err(err(format!("t_end = {v} must be positive")));
                }
                self.t_end = v;
            }
            "tol" => {
                let v = number()?;
                if v <= 0.0 {
                    return Err(err(format!("tol = {v} must be positive")));
                }
                self.tol = v;
            }
            "sigma_tol" => {
                let v = number()?;
                if v <= 0.0 {
                    return Err(err(format!("sigma_tol = {v} must be positive")));
                }
                self.sigma_tol = Some(v);
            }
            "hint_radius" => {
                let v = number()?;
                if v <= 0.0 {
                    return Err(err(format!("hint_radius = {v} must be positive")));
                }
                self.hint_radius = Some(v);
            }
            _ => return Err(err(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Parse a whole configuration file body.
    pub fn parse(&mut self, text: &str) -> Result<(), ConfigError> {
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError {
                    line: Some(line_no),
                    message: format!("expected `key = value`, got `{line}`"),
                });
            };
            self.assign(key.trim(), value.trim(), Some(line_no))?;
        }
        Ok(())
    }

    /// Model parameters with an explicit interaction pair.
    pub fn params_with(&self, k1: f64, k2: f64) -> ModelParams {
        ModelParams {
            alpha1: self.alpha1,
            beta1: self.beta1,
            mu1: self.mu1,
            phi1: self.phi1,
            c1: self.c1,
            k1,
            alpha2: self.alpha2,
            beta2: self.beta2,
            mu2: self.mu2,
            phi2: self.phi2,
            c2: self.c2,
            k2,
        }
    }

    /// Placeholder pair for subcommands that sweep the interaction plane.
    pub fn params_any(&self) -> ModelParams {
        self.params_with(self.k1.unwrap_or(1e-3), self.k2.unwrap_or(1e-3))
    }
}
