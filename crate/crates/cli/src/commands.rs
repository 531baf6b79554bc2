//! The subcommands. Machine output goes to stdout or the output directory
//! as newline-terminated JSON; diagnostics go to stderr.

use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use vvrkbs::certify::{self, InvariantReport, VerifyOptions};
use vvrkbs::measure::Atom;
use vvrkbs::operator_learning::{
    deeponet_embed, function_form_tv_upper, hyper_fit, weight_form_tv, HyperModel, HyperProblem,
};
use vvrkbs::solver::{export_network, fit, grid_oracle, NetworkDescription, Problem};
use vvrkbs::{AtomicVectorMeasure, DualPairSpec, FeatureKind, FeatureMap, Norm, RkbsFunction};

use crate::config::{Config, LoadedConfig, SpaceConfig};
use crate::data::{read_samples, Layout};
use crate::error::CliError;

/// Largest accepted relative gap between the conditional-gradient and the
/// grid-oracle objectives.
pub const ORACLE_GAP_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub objective: f64,
    pub atom_count: usize,
    pub certificate: f64,
    pub wall_time_ms: u64,
    pub seed: u64,
    pub config_digest: String,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Serialize)]
struct ModelFile<'a> {
    #[serde(flatten)]
    measure: &'a AtomicVectorMeasure,
    feature: &'a FeatureMap,
    space: SpaceOut,
    #[serde(skip_serializing_if = "Option::is_none")]
    network: Option<NetworkDescription>,
}

#[derive(Serialize, Deserialize, Clone, Copy)]
struct SpaceOut {
    d: usize,
    norm: Norm,
}

#[derive(Deserialize)]
struct ModelInput {
    atoms: Vec<Atom>,
    norm: Norm,
    radius: f64,
    feature: FeatureMap,
    space: SpaceOut,
}

fn to_json_line<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string(value).expect("plain data serializes");
    s.push('\n');
    s
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

fn prepare_out_dir(out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::Data(format!("cannot create {}: {e}", out.display())))
}

/// Unbounded features are only admitted with a truncating cut-off.
fn check_feature(f: &FeatureMap, role: &str) -> Result<(), CliError> {
    if !f.is_c0() {
        return Err(CliError::Data(format!(
            "{role}: an unbounded activation needs a truncating beta (smooth_bump or hard)"
        )));
    }
    Ok(())
}

fn load(path: &Path) -> Result<LoadedConfig, CliError> {
    let loaded = Config::load(path)?;
    let c = &loaded.config;
    if let Some(f) = &c.feature {
        check_feature(f, "feature")?;
    }
    if let Some(h) = &c.hyper {
        check_feature(&h.phi, "hyper.phi")?;
        check_feature(&h.psi, "hyper.psi")?;
    }
    if let Some(h) = &c.deeponet {
        check_feature(&h.phi, "deeponet.phi")?;
        check_feature(&h.psi, "deeponet.psi")?;
    }
    Ok(loaded)
}

fn elapsed_ms(start: Instant) -> u64 {
    u64::try_from(start.elapsed().as_millis()).unwrap_or(u64::MAX)
}

fn regression_problem(c: &Config, data_path: &Path) -> Result<Problem, CliError> {
    let feature = c.feature()?.clone();
    let spec = c.spec()?;
    let solver = c.solver()?;
    c.measurement.validate(spec.dim)?;
    let data = read_samples(
        data_path,
        Layout {
            input: "x",
            input_dim: feature.input_dim(),
            output: "y",
            output_dim: Some(c.measurement.out_dim(spec.dim)),
        },
    )?;
    Ok(Problem::new(data, c.loss, c.measurement.clone(), solver.lambda, feature, spec)?)
}

/// Fit a sparse measure; writes `model.json` and `report.json` into `out`.
pub fn cmd_fit(config: &Path, data: &Path, out: &Path, seed: Option<u64>) -> Result<String, CliError> {
    let start = Instant::now();
    let LoadedConfig { config: c, digest } = load(config)?;
    let opts = c.solver()?.options(seed)?;
    let problem = regression_problem(&c, data)?;
    let state = fit(&problem, &opts)?;

    let network = match problem.feature.kind() {
        FeatureKind::Neural { .. } => Some(export_network(&state.measure, &problem.feature)?),
        _ => None,
    };
    let model = ModelFile {
        measure: &state.measure,
        feature: &problem.feature,
        space: SpaceOut {
            d: problem.spec.dim,
            norm: problem.spec.primal_norm,
        },
        network,
    };
    let report = RunReport {
        objective: state.objective(),
        atom_count: state.measure.len(),
        certificate: state.certificate,
        wall_time_ms: elapsed_ms(start),
        seed: opts.seed,
        config_digest: digest,
        converged: state.converged,
        iterations: state.iterations,
    };
    prepare_out_dir(out)?;
    write_file(&out.join("model.json"), &to_json_line(&model))?;
    let line = to_json_line(&report);
    write_file(&out.join("report.json"), &line)?;
    if !state.converged {
        return Err(CliError::NonConvergence(format!(
            "certificate {:e} did not reach lambda·(1+tol) = {:e} (model written to {})",
            state.certificate,
            problem.lambda * (1.0 + opts.tol),
            out.display()
        )));
    }
    Ok(line)
}

#[derive(Serialize)]
struct Predictions {
    predictions: Vec<Vec<f64>>,
}

/// Evaluate a fitted model at the `x` columns of a CSV file.
pub fn cmd_predict(model: &Path, data: &Path) -> Result<String, CliError> {
    let text = fs::read_to_string(model).map_err(|e| CliError::Data(format!("cannot read model {}: {e}", model.display())))?;
    let m: ModelInput =
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("malformed model {}: {e}", model.display())))?;
    check_feature(&m.feature, "model feature")?;
    let spec = DualPairSpec::new(m.space.d, m.space.norm)?;
    let measure = AtomicVectorMeasure::from_atoms(m.atoms, spec.dim, m.norm, m.radius)?;
    let f = RkbsFunction::primal(measure, m.feature, spec)?;
    let samples = read_samples(
        data,
        Layout {
            input: "x",
            input_dim: f.feature().input_dim(),
            output: "y",
            output_dim: None,
        },
    )?;
    let predictions = samples.iter().map(|(x, _)| f.evaluate(x)).collect::<vvrkbs::Result<_>>()?;
    Ok(to_json_line(&Predictions { predictions }))
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    trials: usize,
    seed: u64,
    passed: bool,
    invariants: &'a [InvariantReport],
}

/// Outcome of the property suites; `passed` decides the exit code.
pub struct VerifyOutcome {
    pub json: String,
    pub passed: bool,
    pub reports: Vec<InvariantReport>,
}

/// Run every property suite, plus the reproducing suite on the configured
/// feature and space when a config is given.
pub fn cmd_verify(config: Option<&Path>, trials: usize, seed: u64, inject_fault: bool) -> Result<VerifyOutcome, CliError> {
    if trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let opts = VerifyOptions {
        trials,
        seed,
        inject_fault,
    };
    let mut reports = certify::run_all(&opts)?;
    if let Some(path) = config {
        let c = load(path)?.config;
        if let Some(feature) = &c.feature {
            reports.push(certify::reproducing_for(feature, &c.spec()?, &opts)?);
        }
    }
    let passed = reports.iter().all(|r| r.passed);
    let json = to_json_line(&VerifyOutput {
        trials,
        seed,
        passed,
        invariants: &reports,
    });
    Ok(VerifyOutcome { json, passed, reports })
}

#[derive(Serialize)]
struct OracleOutput {
    fit_objective: f64,
    oracle_objective: f64,
    relative_gap: f64,
    fit_atoms: usize,
    grid_points: usize,
    converged: bool,
}

fn relative_gap(a: f64, reference: f64) -> f64 {
    let diff = (a - reference).abs();
    if diff == 0.0 {
        0.0
    } else {
        diff / reference.abs()
    }
}

/// Fit on the configured weight grid and compare with the grid oracle.
pub fn cmd_oracle(config: &Path, data: &Path, seed: Option<u64>) -> Result<String, CliError> {
    let c = load(config)?.config;
    let oracle = *c.oracle()?;
    let opts = c.solver()?.options(seed)?;
    let problem = regression_problem(&c, data)?.restricted_to_grid(oracle.grid_per_dim);
    let state = fit(&problem, &opts)?;
    let reference = grid_oracle(&problem, oracle.grid_per_dim, oracle.max_iter, oracle.tol)?;
    let out = OracleOutput {
        fit_objective: state.objective(),
        oracle_objective: reference.objective,
        relative_gap: relative_gap(state.objective(), reference.objective),
        fit_atoms: state.measure.len(),
        grid_points: reference.grid.len(),
        converged: state.converged,
    };
    let line = to_json_line(&out);
    if !state.converged || out.relative_gap > ORACLE_GAP_TOL {
        print!("{line}");
        return Err(CliError::NonConvergence(format!(
            "fit and grid oracle disagree: relative gap {:e} (limit {ORACLE_GAP_TOL:e}), converged = {}",
            out.relative_gap, state.converged
        )));
    }
    Ok(line)
}

/// Fit a hypernetwork model on `z`/`y` data; writes `model.json` and
/// `report.json` into `out`.
pub fn cmd_hyper_fit(config: &Path, data: &Path, out: &Path, seed: Option<u64>) -> Result<String, CliError> {
    let start = Instant::now();
    let LoadedConfig { config: c, digest } = load(config)?;
    let hyper = c.hyper()?.clone();
    let spec = c.spec()?;
    let solver = c.solver()?;
    let opts = solver.options(seed)?;
    let samples = read_samples(
        data,
        Layout {
            input: "z",
            input_dim: hyper.phi.input_dim(),
            output: "y",
            output_dim: Some(hyper.functionals.len()),
        },
    )?;
    let hp = HyperProblem::new(samples, hyper.functionals, hyper.phi, hyper.psi, spec, c.loss, solver.lambda)?;
    let state = hyper_fit(&hp, &opts)?;
    let report = RunReport {
        objective: state.objective(),
        atom_count: state.model.len(),
        certificate: state.certificate,
        wall_time_ms: elapsed_ms(start),
        seed: opts.seed,
        config_digest: digest,
        converged: state.converged,
        iterations: state.iterations,
    };
    prepare_out_dir(out)?;
    write_file(&out.join("model.json"), &to_json_line(&state.model))?;
    let line = to_json_line(&report);
    write_file(&out.join("report.json"), &line)?;
    if !state.converged {
        return Err(CliError::NonConvergence(format!(
            "certificate {:e} did not reach lambda·(1+tol) (model written to {})",
            state.certificate,
            out.display()
        )));
    }
    Ok(line)
}

#[derive(Serialize)]
struct DeepOnetOutput {
    atom_count: usize,
    weight_form_tv: f64,
    function_form_tv_upper: f64,
}

/// Embed a DeepONet (basis measures plus branch coefficients) as a
/// hypernetwork model; writes `model.json` into `out`.
pub fn cmd_deeponet(config: &Path, out: &Path) -> Result<String, CliError> {
    let c = load(config)?.config;
    let spec = c.spec()?;
    let d = c.deeponet()?;
    let SpaceConfig { d: dim, .. } = c.space;
    let basis = d
        .basis
        .iter()
        .map(|mu| RkbsFunction::primal(mu.clone().with_dim(dim)?, d.psi.clone(), spec))
        .collect::<vvrkbs::Result<Vec<_>>>()?;
    let model: HyperModel = deeponet_embed(&basis, &d.coeffs, &d.phi)?;
    prepare_out_dir(out)?;
    write_file(&out.join("model.json"), &to_json_line(&model))?;
    Ok(to_json_line(&DeepOnetOutput {
        atom_count: model.len(),
        weight_form_tv: weight_form_tv(&model),
        function_form_tv_upper: function_form_tv_upper(&model),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use vvrkbs::{Activation, Beta};

    #[test]
    fn relu_needs_truncation() {
        let bad = FeatureMap::neural(Activation::Relu, 1, 1.0, Beta::One).unwrap();
        assert_eq!(check_feature(&bad, "feature").unwrap_err().exit_code(), 2);
        for ok in [
            FeatureMap::neural(Activation::Relu, 1, 1.0, Beta::SmoothBump).unwrap(),
            FeatureMap::neural(Activation::Tanh, 1, 1.0, Beta::One).unwrap(),
        ] {
            check_feature(&ok, "feature").unwrap();
        }
    }

    #[test]
    fn gap_is_relative_with_exact_zero() {
        assert_eq!(relative_gap(0.0, 0.0), 0.0);
        assert!((relative_gap(1.0001, 1.0) - 1e-4).abs() < 1e-12);
    }
}
