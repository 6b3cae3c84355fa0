//! Canonical verification scenarios: fixed walk/source configurations and
//! grids on which the predicted asymptotic laws are checked. Shared by the
//! acceptance suite and the CLI reproduction driver.

use serde::Serialize;

use crate::asymptotics::{
    check_asymptote, check_asymptote_with_tol, fit_exponent, lambert_w_lower, linear_fit,
    predicted_law, AsymptoteReport, AsymptoticsError, Quantity, WalkClass,
};
use crate::lattice_walk::{build_finite_range_walk, build_heavy_tail_walk, Angular, WalkSpec};
use crate::spectral::{beta_critical, beta_critical_with_tol, lambda0, lambda0_with_tol, SourceConfig};

/// Identifier of a canonical scenario. String ids are the regime labels
/// accepted by the CLI (`--theorem`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// d=1 nearest-neighbor Green function: G_lambda ~ (2 lambda)^{-1/2}.
    GreenPowerD1,
    /// d=3 simple walk, one source: lambda_0 ~ c (beta - beta_c)^2.
    Lambda0QuadraticD3,
    /// d=1 heavy tail alpha=3/2, recurrent: lambda_0 ~ c (N beta)^3,
    /// including the N-collapse ratio check.
    Lambda0CubicNbD1,
    /// d=2 heavy tail alpha=3/2, transient: lambda_0 ~ c (beta - beta_c)^3.
    Lambda0CubicDeltaD2,
    /// d=1 heavy tail alpha=1/2 = d/2: lambda_0 ln lambda_0 ~ -c (beta - beta_c),
    /// inverted through the lower Lambert branch.
    Lambda0LambertD1,
}

pub const ALL_SCENARIOS: [Scenario; 5] = [
    Scenario::GreenPowerD1,
    Scenario::Lambda0QuadraticD3,
    Scenario::Lambda0CubicNbD1,
    Scenario::Lambda0CubicDeltaD2,
    Scenario::Lambda0LambertD1,
];

impl Scenario {
    /// Regime label used on the CLI.
    pub fn label(&self) -> &'static str {
        match self {
            Scenario::GreenPowerD1 => "1i",
            Scenario::Lambda0QuadraticD3 => "2iii",
            Scenario::Lambda0CubicNbD1 => "4i",
            Scenario::Lambda0CubicDeltaD2 => "4iii",
            Scenario::Lambda0LambertD1 => "4iv",
        }
    }

    pub fn parse(label: &str) -> Option<Scenario> {
        ALL_SCENARIOS.iter().copied().find(|s| s.label() == label)
    }

    pub fn run(&self) -> Result<ScenarioOutcome, AsymptoticsError> {
        match self {
            Scenario::GreenPowerD1 => green_power_d1(),
            Scenario::Lambda0QuadraticD3 => lambda0_quadratic_d3(),
            Scenario::Lambda0CubicNbD1 => lambda0_cubic_nb_d1(),
            Scenario::Lambda0CubicDeltaD2 => lambda0_cubic_delta_d2(),
            Scenario::Lambda0LambertD1 => lambda0_lambert_d1(),
        }
    }
}

/// Scenario result: the generic law report plus scenario-specific
/// cross-checks folded into `pass`.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioOutcome {
    pub label: String,
    pub report: AsymptoteReport,
    /// Known exact law constant, when one is available.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constant_target: Option<f64>,
    /// `lambda_0(beta, N) / lambda_0(N beta, 1)` at the smallest betas,
    /// for the N-collapse scenario.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub collapse_ratios: Vec<f64>,
    /// Fitted eigenvalue exponent for the two-source configuration, for
    /// the N-collapse scenario.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitted_exponent_n2: Option<f64>,
    /// Relative error of the Lambert-branch reconstruction at the
    /// smallest grid point, for the Lambert scenario.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reconstruction_error: Option<f64>,
    pub pass: bool,
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

fn nn_walk_1d() -> WalkSpec {
    build_finite_range_walk(1, &[(vec![1], 0.5), (vec![-1], 0.5)]).expect("valid kernel")
}

fn simple_walk_3d() -> WalkSpec {
    let mut w = Vec::new();
    for i in 0..3 {
        for s in [1i64, -1] {
            let mut z = vec![0i64; 3];
            z[i] = s;
            w.push((z, 1.0 / 6.0));
        }
    }
    build_finite_range_walk(3, &w).expect("valid kernel")
}

fn heavy_walk(d: usize, alpha: f64, radius: i64) -> WalkSpec {
    build_heavy_tail_walk(d, alpha, Angular::Isotropic, 1.0, radius).expect("valid kernel")
}

/// d=1 nearest neighbor: G_lambda(0,0) = 1/sqrt(lambda^2 + 2 lambda), so
/// the small-lambda law is (2 lambda)^{-1/2} with constant 2^{-1/2}.
fn green_power_d1() -> Result<ScenarioOutcome, AsymptoticsError> {
    let walk = nn_walk_1d();
    let sources = SourceConfig::new(vec![vec![0]], 0.1)?;
    let grid = log_grid(1e-6, 1e-3, 13);
    let report = check_asymptote(&walk, &sources, Quantity::GreenSmallLambda, &grid)?;
    let target = std::f64::consts::FRAC_1_SQRT_2;
    let constant_ok = (report.constant - target).abs() <= 0.01 * target;
    let pass = report.pass && constant_ok;
    Ok(ScenarioOutcome {
        label: Scenario::GreenPowerD1.label().into(),
        report,
        constant_target: Some(target),
        collapse_ratios: Vec::new(),
        fitted_exponent_n2: None,
        reconstruction_error: None,
        pass,
    })
}

/// d=3 simple walk, one source: quadratic growth of lambda_0 in
/// beta - beta_c just above criticality.
fn lambda0_quadratic_d3() -> Result<ScenarioOutcome, AsymptoticsError> {
    let walk = simple_walk_3d();
    let sources = SourceConfig::new(vec![vec![0, 0, 0]], 0.1)?;
    let beta_c = beta_critical(&walk, &sources)?;
    let grid: Vec<f64> = log_grid(1e-3, 5e-2, 10)
        .into_iter()
        .map(|r| beta_c * (1.0 + r))
        .collect();
    let report = check_asymptote(&walk, &sources, Quantity::Lambda0, &grid)?;
    let pass = report.pass;
    Ok(ScenarioOutcome {
        label: Scenario::Lambda0QuadraticD3.label().into(),
        report,
        constant_target: None,
        collapse_ratios: Vec::new(),
        fitted_exponent_n2: None,
        reconstruction_error: None,
        pass,
    })
}

/// d=1, alpha=3/2 (recurrent, beta_c = 0): lambda_0 ~ c (N beta)^3; the
/// eigenvalue collapses onto the product N beta, checked by the ratio
/// lambda_0(beta, 2) / lambda_0(2 beta, 1).
fn lambda0_cubic_nb_d1() -> Result<ScenarioOutcome, AsymptoticsError> {
    let walk = heavy_walk(1, 1.5, 64);
    let sources = SourceConfig::new(vec![vec![0]], 0.01)?;
    let grid = log_grid(5e-3, 5e-2, 8);
    let report = check_asymptote(&walk, &sources, Quantity::Lambda0, &grid)?;

    let pair = SourceConfig::new(vec![vec![0], vec![1]], 0.01)?;
    let report2 = check_asymptote(&walk, &pair, Quantity::Lambda0, &grid)?;
    let mut ratios = Vec::new();
    for &beta in grid.iter().take(3) {
        let two = lambda0(&walk, &pair.with_beta(beta))?;
        let one = lambda0(&walk, &sources.with_beta(2.0 * beta))?;
        if let (Some(a), Some(b)) = (two, one) {
            ratios.push(a / b);
        }
    }
    let collapse_ok = ratios.len() == 3 && ratios.iter().all(|r| (r - 1.0).abs() <= 0.02);
    let exponent_ok = [&report, &report2].iter().all(|r| {
        r.fitted_exponent
            .map(|e| (e - 3.0).abs() <= 0.1)
            .unwrap_or(false)
    });
    let pass = exponent_ok && collapse_ok;
    Ok(ScenarioOutcome {
        label: Scenario::Lambda0CubicNbD1.label().into(),
        fitted_exponent_n2: report2.fitted_exponent,
        report,
        constant_target: None,
        collapse_ratios: ratios,
        reconstruction_error: None,
        pass,
    })
}

/// d=2, alpha=3/2 (transient): lambda_0 ~ c (beta - beta_c)^{alpha/(d-alpha)}
/// with exponent 3.
fn lambda0_cubic_delta_d2() -> Result<ScenarioOutcome, AsymptoticsError> {
    let walk = heavy_walk(2, 1.5, 8);
    let sources = SourceConfig::new(vec![vec![0, 0]], 0.1)?;
    // a 2-D heavy-tail quadrature per branch evaluation: certify only the
    // digits the fit uses
    let tol = Some(1e-6);
    let beta_c = beta_critical_with_tol(&walk, &sources, tol)?;
    let grid: Vec<f64> = log_grid(2e-3, 2e-2, 8)
        .into_iter()
        .map(|r| beta_c * (1.0 + r))
        .collect();
    let report = check_asymptote_with_tol(&walk, &sources, Quantity::Lambda0, &grid, tol)?;
    let pass = report
        .fitted_exponent
        .map(|e| (e - 3.0).abs() <= 0.15)
        .unwrap_or(false);
    Ok(ScenarioOutcome {
        label: Scenario::Lambda0CubicDeltaD2.label().into(),
        report,
        constant_target: None,
        collapse_ratios: Vec::new(),
        fitted_exponent_n2: None,
        reconstruction_error: None,
        pass,
    })
}

/// d=1, alpha=1/2 = d/2 (transient boundary case): lambda_0 ln lambda_0 ~
/// -c (beta - beta_c), so lambda_0 = exp(W_{-1}(-c Delta)) for small Delta.
fn lambda0_lambert_d1() -> Result<ScenarioOutcome, AsymptoticsError> {
    let walk = heavy_walk(1, 0.5, 64);
    let sources = SourceConfig::new(vec![vec![0]], 0.1)?;
    let tol = Some(1e-8);
    let beta_c = beta_critical_with_tol(&walk, &sources, tol)?;
    let rel: Vec<f64> = log_grid(1e-6, 1e-4, 9);
    let mut samples: Vec<(f64, f64)> = Vec::new(); // (delta, lambda_0)
    for &r in &rel {
        let delta = beta_c * r;
        if let Some(l0) = lambda0_with_tol(&walk, &sources.with_beta(beta_c + delta), tol)? {
            samples.push((delta, l0));
        }
    }
    if samples.len() < 4 {
        return Err(AsymptoticsError::TooFewSamples(samples.len()));
    }

    // generic law report: -lambda_0 ln lambda_0 against delta, log-log
    let transformed: Vec<(f64, f64)> = samples.iter().map(|&(u, v)| (u, -v * v.ln())).collect();
    let (slope, constant, r2) = fit_exponent(&transformed)?;
    let law = predicted_law(
        Quantity::Lambda0,
        WalkClass::HeavyTail,
        1,
        walk.alpha()
            .map(|_| crate::asymptotics::AlphaRational::new(1, 2))
            .transpose()?,
        1,
    )?;
    let report = AsymptoteReport {
        law,
        predicted_exponent: Some(1.0),
        fitted_exponent: Some(slope),
        constant,
        r2,
        pass: (slope - 1.0).abs() <= 0.05,
    };

    // criterion fit: lambda_0 ln lambda_0 linear in -delta over the last
    // decade of the grid, then invert through the lower Lambert branch
    let umin = samples.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let last_decade: Vec<(f64, f64)> = samples
        .iter()
        .filter(|&&(u, _)| u <= 10.0 * umin)
        .map(|&(u, v)| (-u, v * v.ln()))
        .collect();
    let (c_hat, _intercept, r2_lin) = linear_fit(&last_decade);
    let (delta0, l0) = samples[0];
    let w = lambert_w_lower(-c_hat * delta0)?;
    let rec_err = (w.exp() / l0 - 1.0).abs();
    let pass = r2_lin >= 0.999 && rec_err <= 0.05;
    Ok(ScenarioOutcome {
        label: Scenario::Lambda0LambertD1.label().into(),
        report,
        constant_target: None,
        collapse_ratios: Vec::new(),
        fitted_exponent_n2: None,
        reconstruction_error: Some(rec_err),
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_round_trip() {
        for s in ALL_SCENARIOS {
            assert_eq!(Scenario::parse(s.label()), Some(s));
        }
        assert_eq!(Scenario::parse("nope"), None);
    }

    #[test]
    #[ignore]
    fn probe_slow_scenarios() {
        for s in [
            Scenario::Lambda0QuadraticD3,
            Scenario::Lambda0CubicNbD1,
            Scenario::Lambda0CubicDeltaD2,
            Scenario::Lambda0LambertD1,
        ] {
            let t0 = std::time::Instant::now();
            let out = s.run();
            println!("== {:?} ({:.1?})\n{:#?}", s, t0.elapsed(), out);
        }
    }

    #[test]
    fn green_power_scenario_passes() {
        let out = green_power_d1().unwrap();
        assert!(out.pass, "{out:?}");
    }
}
