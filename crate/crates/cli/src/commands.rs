use std::path::{Path, PathBuf};

use risk_core::backtest::{breaches, coverage_report};
use risk_core::connectedness::{connectedness as connectedness_table, fit_var};
use risk_core::data::{load_csv, load_multi_csv, to_log_returns, CsvSchema, ReturnSeries};
use risk_core::garch::{fit, FitOptions, GarchFit};
use risk_core::mathstat::{mean, qq_points, sample_sd};
use risk_core::montecarlo::{run_mc, Innovation, McConfig};
use risk_core::var_engine::{rolling_var, write_var_table, VarConfig, VarMethod};
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::manifest::{sha256_file, Run};
use crate::{
    BacktestArgs, ConnectednessArgs, InnovationArg, InputArgs, McArgs, MethodArg, QqArgs, SingleMethodArg, VarArgs,
};

impl InputArgs {
    fn value_column(&self) -> &str {
        match &self.value_column {
            Some(c) => c,
            None if self.prices => "price",
            None => "return",
        }
    }

    fn load(&self) -> CliResult<ReturnSeries> {
        self.load_inner().map_err(|e| with_path(e, &self.input))
    }

    fn load_inner(&self) -> CliResult<ReturnSeries> {
        let col = self.value_column();
        if self.prices {
            let px = load_csv(&self.input, &CsvSchema::prices(&self.date_column, col))?;
            Ok(to_log_returns(&px)?)
        } else {
            Ok(load_csv(&self.input, &CsvSchema::returns(&self.date_column, col))?)
        }
    }

    fn config(&self) -> serde_json::Value {
        json!({
            "date_column": self.date_column,
            "value_column": self.value_column(),
            "prices": self.prices,
        })
    }
}

impl From<SingleMethodArg> for VarMethod {
    fn from(m: SingleMethodArg) -> Self {
        match m {
            SingleMethodArg::Hs => VarMethod::Hs,
            SingleMethodArg::GarchN => VarMethod::GarchNormal,
            SingleMethodArg::Fhs => VarMethod::Fhs,
        }
    }
}

impl MethodArg {
    fn methods(self) -> Vec<VarMethod> {
        match self {
            MethodArg::Hs => vec![VarMethod::Hs],
            MethodArg::GarchN => vec![VarMethod::GarchNormal],
            MethodArg::Fhs => vec![VarMethod::Fhs],
            MethodArg::All => VarMethod::ALL.to_vec(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            MethodArg::All => "all",
            m => m.methods()[0].name(),
        }
    }
}

impl From<InnovationArg> for Innovation {
    fn from(i: InnovationArg) -> Self {
        match i {
            InnovationArg::Normal => Innovation::Normal,
            InnovationArg::Fhs => Innovation::FhsBootstrap,
        }
    }
}

fn with_path(e: CliError, path: &Path) -> CliError {
    match e {
        CliError::Core(risk_core::RiskError::Io(source)) => CliError::Io {
            path: path.display().to_string(),
            source,
        },
        other => other,
    }
}

fn fit_converged(returns: &[f64]) -> CliResult<GarchFit> {
    let f = fit(returns, &FitOptions::default())?;
    if !f.converged {
        return Err(CliError::NotConverged(f.iterations));
    }
    Ok(f)
}

fn fit_json(f: Option<&GarchFit>) -> serde_json::Value {
    let opts = FitOptions::default();
    match f {
        Some(f) => json!({ "max_iter": opts.max_iter, "tol": opts.tol, "estimates": f.summary() }),
        None => serde_json::Value::Null,
    }
}

fn derived_path(out: &Path, suffix: &str) -> PathBuf {
    out.with_extension(suffix)
}

fn to_json_bytes(s: String) -> Vec<u8> {
    let mut b = s.into_bytes();
    b.push(b'\n');
    b
}

pub fn qq(a: &QqArgs) -> CliResult<()> {
    let series = a.input.load()?;
    let (points, garch) = if a.garch {
        let f = fit_converged(series.returns())?;
        (qq_points(&f.z, 0.0, 1.0)?, Some(f))
    } else {
        let r = series.returns();
        (qq_points(r, mean(r), sample_sd(r))?, None)
    };
    let mut buf = Vec::new();
    points.write_csv(&mut buf)?;

    let mut config = a.input.config();
    config["mode"] = json!(if a.garch { "garch" } else { "mean-match" });
    config["garch"] = fit_json(garch.as_ref());
    Run {
        command: "qq",
        input_sha256: sha256_file(&a.input.input)?,
        seed: None,
        config,
    }
    .emit(&a.out, &buf)
}

fn var_configs(methods: &[VarMethod], level: f64, window: usize) -> CliResult<Vec<VarConfig>> {
    Ok(methods
        .iter()
        .map(|&m| VarConfig::new(level, window, m))
        .collect::<risk_core::Result<Vec<_>>>()?)
}

fn var_tables(
    series: &ReturnSeries,
    configs: &[VarConfig],
) -> CliResult<(Vec<risk_core::var_engine::VarSeries>, Option<GarchFit>)> {
    let window = configs[0].window;
    if series.len() <= window {
        return Err(risk_core::RiskError::Data(format!(
            "series of length {} is not longer than the window {window}",
            series.len()
        ))
        .into());
    }
    let garch = if configs.iter().any(|c| c.method.needs_fit()) {
        Some(fit_converged(series.returns())?)
    } else {
        None
    };
    let tables = configs
        .iter()
        .map(|cfg| rolling_var(series, garch.as_ref(), cfg))
        .collect::<risk_core::Result<Vec<_>>>()?;
    Ok((tables, garch))
}

pub fn var(a: &VarArgs) -> CliResult<()> {
    let configs = var_configs(&a.method.methods(), a.level, a.window)?;
    let series = a.input.load()?;
    let (tables, garch) = var_tables(&series, &configs)?;
    let mut buf = Vec::new();
    write_var_table(&tables, &mut buf)?;

    let mut config = a.input.config();
    config["method"] = json!(a.method.name());
    config["level"] = json!(a.level);
    config["window"] = json!(a.window);
    config["garch"] = fit_json(garch.as_ref());
    Run {
        command: "var",
        input_sha256: sha256_file(&a.input.input)?,
        seed: None,
        config,
    }
    .emit(&a.out, &buf)
}

pub fn backtest(a: &BacktestArgs) -> CliResult<()> {
    let method = VarMethod::from(a.method);
    let configs = var_configs(&[method], a.level, a.window)?;
    let series = a.input.load()?;
    let (tables, garch) = var_tables(&series, &configs)?;
    let b = breaches(&tables[0])?;
    let report = coverage_report(&b, a.level)?;
    let mut csv = Vec::new();
    b.write_csv(&mut csv)?;
    let breaches_path = a.breaches.clone().unwrap_or_else(|| derived_path(&a.out, "breaches.csv"));

    let mut config = a.input.config();
    config["method"] = json!(method.name());
    config["level"] = json!(a.level);
    config["window"] = json!(a.window);
    config["garch"] = fit_json(garch.as_ref());
    let run = Run {
        command: "backtest",
        input_sha256: sha256_file(&a.input.input)?,
        seed: None,
        config,
    };
    run.emit(&a.out, &to_json_bytes(report.to_json()?))?;
    run.emit(&breaches_path, &csv)
}

pub fn mc(a: &McArgs) -> CliResult<()> {
    let seed = a
        .seed
        .ok_or_else(|| CliError::Config("--seed is required for Monte Carlo runs".into()))?;
    let cfg = McConfig {
        n_paths: a.paths,
        horizon: a.horizon,
        level: a.level,
        seed,
        innovation: a.innovation.into(),
    };
    cfg.validate()?;
    let series = a.input.load()?;
    let garch = fit_converged(series.returns())?;
    let ts = run_mc(&garch, &cfg)?;
    let mut csv = Vec::new();
    ts.write_csv(&mut csv)?;

    let mut config = a.input.config();
    config["innovation"] = json!(cfg.innovation);
    config["paths"] = json!(cfg.n_paths);
    config["horizon"] = json!(cfg.horizon);
    config["level"] = json!(cfg.level);
    config["garch"] = fit_json(Some(&garch));
    let run = Run {
        command: "mc",
        input_sha256: sha256_file(&a.input.input)?,
        seed: Some(seed),
        config,
    };
    run.emit(&a.out, &csv)?;
    if let Some(path) = &a.json {
        run.emit(path, &to_json_bytes(ts.to_json()?))?;
    }
    Ok(())
}

pub fn connectedness(a: &ConnectednessArgs) -> CliResult<()> {
    if a.order == 0 {
        return Err(CliError::Config("--order must be at least 1".into()));
    }
    if a.horizon == 0 {
        return Err(CliError::Config("--horizon must be at least 1".into()));
    }
    let data = load_multi_csv(&a.input, &a.date_column).map_err(|e| with_path(e.into(), &a.input))?;
    let model = fit_var(&data, a.order)?;
    let table = connectedness_table(&model, data.names(), a.horizon)?;
    let mut csv = Vec::new();
    table.write_csv(&mut csv)?;
    let edges = serde_json::to_string_pretty(&table.edges()).map_err(risk_core::RiskError::from)?;
    let edges_path = a.edges.clone().unwrap_or_else(|| derived_path(&a.out, "edges.json"));

    let run = Run {
        command: "connectedness",
        input_sha256: sha256_file(&a.input)?,
        seed: None,
        config: json!({
            "date_column": a.date_column,
            "order": a.order,
            "horizon": a.horizon,
            "variables": data.names(),
        }),
    };
    run.emit(&a.out, &csv)?;
    run.emit(&edges_path, &to_json_bytes(edges))
}
