//! Command-line interface: one subcommand per pipeline stage.
//!
//! Exit codes are a stable contract: 0 success, 2 usage error, 3 data
//! error, 4 internal error. All randomness flows from `--seed`, and every
//! run writes a manifest sufficient to reproduce its outputs.

pub mod config;
pub mod manifest;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::data::{
    generate_synthetic, load_csv, load_image, load_model, save_csv, save_model, Dataset,
    ModelArtifact,
};
use crate::ensemble::{fit_pipeline, physical_range_violations};
use crate::eval::{compare_models, comparison_chart, cross_validate, CVReport, ModelSpec};
use crate::forest::select_features;
use crate::texture::{extract_all, BorderPolicy, Connectivity, ExtractOptions, MaskBank};
use manifest::RunManifest;

const DEFAULT_TARGET: &str = "Contact Angle";

#[derive(Parser)]
#[command(name = "texwet", version, about = "Contact-angle prediction from surface texture and chemistry")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Args)]
struct CommonArgs {
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Master seed; all randomness derives from it.
    #[arg(long, default_value_t = 17)]
    seed: u64,
    /// Worker threads (0 = all cores). Outputs are identical for any value.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BorderArg {
    Reflect,
    Zero,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ConnectivityArg {
    #[value(name = "4")]
    Four,
    #[value(name = "8")]
    Eight,
}

#[derive(Subcommand)]
enum Command {
    /// Extract per-mask texture features from grayscale PGM images.
    Extract {
        #[command(flatten)]
        common: CommonArgs,
        /// Input images (PGM, 8-bit).
        #[arg(required = true)]
        images: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = BorderArg::Reflect)]
        border: BorderArg,
        #[arg(long, value_enum, default_value_t = ConnectivityArg::Eight)]
        connectivity: ConnectivityArg,
        /// Use the classical zero-sum edge vector instead of the default.
        #[arg(long)]
        classic_laws: bool,
        /// Subtract the local mean before filtering.
        #[arg(long)]
        normalize_contrast: bool,
        /// Quantization bins for thresholding.
        #[arg(long, default_value_t = 256)]
        bins: usize,
        /// Energy window half-width (window spans 2w+1).
        #[arg(long, default_value_t = 7)]
        half_window: usize,
    },
    /// Rank features by forest importance and keep the top k.
    Select {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = DEFAULT_TARGET)]
        target: String,
        #[arg(long)]
        id: Option<String>,
        #[arg(long, default_value_t = 20)]
        k: usize,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long, default_value_t = 200)]
        trees: usize,
    },
    /// Train the full pipeline and save a model artifact.
    Train {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = DEFAULT_TARGET)]
        target: String,
        #[arg(long)]
        id: Option<String>,
        /// Key-value config file; see docs for keys.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override one config key (repeatable), e.g. --set members=3.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
    },
    /// Predict contact angles for a feature table without targets.
    Predict {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        id: Option<String>,
    },
    /// Repeated k-fold cross validation, optionally comparing models.
    Cv {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = DEFAULT_TARGET)]
        target: String,
        #[arg(long)]
        id: Option<String>,
        #[arg(long, default_value_t = 8)]
        folds: usize,
        #[arg(long, default_value_t = 2)]
        repeats: usize,
        /// Also run the single-network and forest baselines on the same folds.
        #[arg(long)]
        compare: bool,
        /// Select features once on the whole dataset instead of per fold.
        #[arg(long)]
        global_selection: bool,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
    },
    /// Generate a synthetic dataset with the 36-column schema.
    Synth {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        n: usize,
        /// Target noise, degrees.
        #[arg(long, default_value_t = 5.0)]
        noise: f64,
    },
}

enum CliError {
    Usage(String),
    Data(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Internal(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<crate::data::DataError> for CliError {
    fn from(e: crate::data::DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<crate::eval::EvalError> for CliError {
    fn from(e: crate::eval::EvalError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<crate::ensemble::EnsembleError> for CliError {
    fn from(e: crate::ensemble::EnsembleError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<crate::forest::ForestError> for CliError {
    fn from(e: crate::forest::ForestError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(format!("i/o failure: {e}"))
    }
}

/// Parse arguments from the process environment and run.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap exits 0 for --help/--version and 2 for usage errors.
            return e.exit_code_or_print();
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

trait ClapExit {
    fn exit_code_or_print(self) -> i32;
}

impl ClapExit for clap::Error {
    fn exit_code_or_print(self) -> i32 {
        use clap::error::ErrorKind;
        let code = match self.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
            _ => 2,
        };
        let _ = self.print();
        code
    }
}

fn common_of(cmd: &Command) -> &CommonArgs {
    match cmd {
        Command::Extract { common, .. }
        | Command::Select { common, .. }
        | Command::Train { common, .. }
        | Command::Predict { common, .. }
        | Command::Cv { common, .. }
        | Command::Synth { common, .. } => common,
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let common = common_of(&cli.command).clone();
    std::fs::create_dir_all(&common.out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.jobs)
        .build()
        .map_err(|e| CliError::Internal(format!("cannot build worker pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Extract {
            common,
            images,
            border,
            connectivity,
            classic_laws,
            normalize_contrast,
            bins,
            half_window,
        } => cmd_extract(
            &common,
            &images,
            border,
            connectivity,
            classic_laws,
            normalize_contrast,
            bins,
            half_window,
        ),
        Command::Select { common, data, target, id, k, runs, trees } => {
            cmd_select(&common, &data, &target, id.as_deref(), k, runs, trees)
        }
        Command::Train { common, data, target, id, config, sets } => {
            cmd_train(&common, &data, &target, id.as_deref(), config.as_deref(), &sets)
        }
        Command::Predict { common, model, data, id } => {
            cmd_predict(&common, &model, &data, id.as_deref())
        }
        Command::Cv { common, data, target, id, folds, repeats, compare, global_selection, config, sets } => {
            cmd_cv(
                &common,
                &data,
                &target,
                id.as_deref(),
                folds,
                repeats,
                compare,
                global_selection,
                config.as_deref(),
                &sets,
            )
        }
        Command::Synth { common, n, noise } => cmd_synth(&common, n, noise),
    })
}

/// Merge config file and `--set` overrides into resolved settings.
fn resolve_settings(
    config: Option<&Path>,
    sets: &[String],
) -> Result<(crate::ensemble::PipelineSettings, crate::forest::ForestParams, BTreeMap<String, String>), CliError>
{
    let mut map = match config {
        Some(path) => config::read_config_file(path).map_err(CliError::Usage)?,
        None => BTreeMap::new(),
    };
    for s in sets {
        let Some((key, value)) = s.split_once('=') else {
            return Err(CliError::Usage(format!("--set expects KEY=VALUE, got {s:?}")));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    let forest = config::forest_params_from_map(&map).map_err(CliError::Usage)?;
    // forest_* keys are consumed above and are not pipeline keys.
    let mut pipeline_map = map.clone();
    pipeline_map.retain(|k, _| !k.starts_with("forest_"));
    let settings = config::settings_from_map(&pipeline_map).map_err(CliError::Usage)?;
    Ok((settings, forest, map))
}

fn load_dataset(path: &Path, target: Option<&str>, id: Option<&str>) -> Result<Dataset, CliError> {
    if !path.exists() {
        return Err(CliError::Usage(format!("input file {} does not exist", path.display())));
    }
    Ok(load_csv(path, target, id)?)
}

#[allow(clippy::too_many_arguments)]
fn cmd_extract(
    common: &CommonArgs,
    images: &[PathBuf],
    border: BorderArg,
    connectivity: ConnectivityArg,
    classic_laws: bool,
    normalize_contrast: bool,
    bins: usize,
    half_window: usize,
) -> Result<(), CliError> {
    use rayon::prelude::*;
    let opts = ExtractOptions {
        border: match border {
            BorderArg::Reflect => BorderPolicy::Reflect,
            BorderArg::Zero => BorderPolicy::Zero,
        },
        connectivity: match connectivity {
            ConnectivityArg::Four => Connectivity::Four,
            ConnectivityArg::Eight => Connectivity::Eight,
        },
        half_window,
        bins,
        normalize_contrast,
        area_scale: 1.0,
    };
    let bank = if classic_laws { MaskBank::classic_laws() } else { MaskBank::standard() };

    type ImageRow = (String, Vec<String>, Vec<f64>);
    let results: Vec<Result<ImageRow, String>> = images
        .par_iter()
        .map(|path| {
            let img = load_image(path).map_err(|e| format!("{}: {e}", path.display()))?;
            let features =
                extract_all(&img, &bank, &opts).map_err(|e| format!("{}: {e}", path.display()))?;
            let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            Ok((stem, features.column_names(), features.column_values()))
        })
        .collect();

    let mut failures = Vec::new();
    let mut rows = Vec::new();
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err(msg) => failures.push(msg),
        }
    }
    if !failures.is_empty() {
        for f in &failures {
            eprintln!("error: unreadable image: {f}");
        }
        // Unusable input arguments are a usage error by contract.
        return Err(CliError::Usage(format!("{} image(s) could not be processed", failures.len())));
    }

    let columns = rows.first().map(|(_, names, _)| names.clone()).unwrap_or_default();
    let ds = Dataset {
        columns,
        rows: rows.iter().map(|(_, _, v)| v.clone()).collect(),
        target: Vec::new(),
        ids: rows.iter().map(|(id, _, _)| id.clone()).collect(),
    };
    save_csv(&ds, &common.out.join("features.csv"), None)?;

    let mut m = RunManifest::new(
        "extract",
        common.seed,
        common.jobs,
        serde_json::json!({
            "border": format!("{border:?}"),
            "connectivity": format!("{connectivity:?}"),
            "classic_laws": classic_laws,
            "normalize_contrast": normalize_contrast,
            "bins": bins,
            "half_window": half_window,
        }),
    );
    for path in images {
        m.add_input(path)?;
    }
    m.write(&common.out)?;
    println!("extract: {} image(s) -> {}", images.len(), common.out.join("features.csv").display());
    Ok(())
}

fn cmd_select(
    common: &CommonArgs,
    data: &Path,
    target: &str,
    id: Option<&str>,
    k: usize,
    runs: usize,
    trees: usize,
) -> Result<(), CliError> {
    let ds = load_dataset(data, Some(target), id)?;
    let params = crate::forest::ForestParams { n_trees: trees, ..Default::default() };
    let report = select_features(&ds.rows, &ds.target, k, runs, &params, common.seed)?;

    // Full ranking (all features) and the chart-ready top-k slice.
    let mut order: Vec<usize> = (0..ds.n_features()).collect();
    order.sort_by(|&a, &b| report.mean[b].partial_cmp(&report.mean[a]).unwrap().then(a.cmp(&b)));
    let mut csv = String::from("feature,mean_importance,std_importance\n");
    for &j in &order {
        csv.push_str(&format!("{},{},{}\n", ds.columns[j], report.mean[j], report.std[j]));
    }
    std::fs::write(common.out.join("importance.csv"), csv)?;

    let mut chart = String::from("feature mean std\n");
    let mut selected = String::new();
    for &j in &report.selected {
        chart.push_str(&format!("{:?} {} {}\n", ds.columns[j], report.mean[j], report.std[j]));
        selected.push_str(&ds.columns[j]);
        selected.push('\n');
    }
    std::fs::write(common.out.join("importance_chart.txt"), chart)?;
    std::fs::write(common.out.join("selected.txt"), selected)?;

    // Plain feature correlation matrix, for the record.
    let corr = ds.correlation_matrix();
    let mut corr_csv = String::from("feature");
    for c in &ds.columns {
        corr_csv.push(',');
        corr_csv.push_str(c);
    }
    corr_csv.push('\n');
    for (a, row) in corr.iter().enumerate() {
        corr_csv.push_str(&ds.columns[a]);
        for v in row {
            corr_csv.push(',');
            corr_csv.push_str(&format!("{v}"));
        }
        corr_csv.push('\n');
    }
    std::fs::write(common.out.join("correlation.csv"), corr_csv)?;

    let mut m = RunManifest::new(
        "select",
        common.seed,
        common.jobs,
        serde_json::json!({"k": k, "runs": runs, "trees": trees, "target": target}),
    );
    m.add_input(data)?;
    m.write(&common.out)?;
    println!(
        "select: kept {} of {} features ({} run(s)) -> {}",
        report.selected.len(),
        ds.n_features(),
        runs,
        common.out.join("selected.txt").display()
    );
    Ok(())
}

fn cmd_train(
    common: &CommonArgs,
    data: &Path,
    target: &str,
    id: Option<&str>,
    config: Option<&Path>,
    sets: &[String],
) -> Result<(), CliError> {
    let ds = load_dataset(data, Some(target), id)?;
    let (settings, _, raw_map) = resolve_settings(config, sets)?;
    let ensemble = fit_pipeline(&ds, &settings, common.seed)?;

    let mut report = String::new();
    report.push_str(&format!("samples: {}\nfeatures kept: {}\n", ds.n_rows(), ensemble.selected.len()));
    for (mc, member) in ensemble.member_configs.iter().zip(&ensemble.members) {
        report.push_str(&format!(
            "member {}: lr {:.6e}, patience {}, best epoch {}, best val loss {:.6}\n",
            mc.index, mc.lr, mc.scheduler_patience, member.best_epoch, member.best_val_loss
        ));
    }
    let artifact = ModelArtifact::new(ensemble, settings.clone());
    report.push_str(&format!("config digest: {}\n", artifact.config_digest));
    save_model(&artifact, &common.out.join("model.json"))?;
    std::fs::write(common.out.join("training_report.txt"), &report)?;

    let mut m = RunManifest::new(
        "train",
        common.seed,
        common.jobs,
        serde_json::json!({
            "target": target,
            "settings": settings,
            "overrides": raw_map,
        }),
    );
    m.add_input(data)?;
    m.write(&common.out)?;
    println!("train: model written to {}", common.out.join("model.json").display());
    Ok(())
}

fn cmd_predict(common: &CommonArgs, model: &Path, data: &Path, id: Option<&str>) -> Result<(), CliError> {
    if !model.exists() {
        return Err(CliError::Usage(format!("model file {} does not exist", model.display())));
    }
    let artifact = load_model(model)?;
    let ds = load_dataset(data, None, id)?;
    let preds = artifact.ensemble.predict(&ds.columns, &ds.rows)?;
    for &i in &physical_range_violations(&preds) {
        eprintln!(
            "warning: sample {} predicted {:.2} degrees, outside the physical [0, 180] range",
            ds.ids[i], preds[i]
        );
    }

    let mut csv = String::from("id,prediction\n");
    for (id, p) in ds.ids.iter().zip(&preds) {
        csv.push_str(&format!("{id},{p}\n"));
    }
    std::fs::write(common.out.join("predictions.csv"), csv)?;

    let mut m = RunManifest::new("predict", common.seed, common.jobs, serde_json::json!({}));
    m.add_input(model)?;
    m.add_input(data)?;
    m.write(&common.out)?;
    println!("predict: {} row(s) -> {}", preds.len(), common.out.join("predictions.csv").display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_cv(
    common: &CommonArgs,
    data: &Path,
    target: &str,
    id: Option<&str>,
    folds: usize,
    repeats: usize,
    compare: bool,
    global_selection: bool,
    config: Option<&Path>,
    sets: &[String],
) -> Result<(), CliError> {
    let mut ds = load_dataset(data, Some(target), id)?;
    let (mut settings, forest_params, raw_map) = resolve_settings(config, sets)?;

    if global_selection {
        // One selection pass on the full dataset, then CV without per-fold
        // re-selection. Trades leakage for a fixed feature set.
        if let Some(sel) = &settings.selection {
            let report = select_features(
                &ds.rows,
                &ds.target,
                sel.k.min(ds.n_features()),
                sel.runs,
                &sel.forest,
                common.seed,
            )?;
            let keep: Vec<String> = report.selected.iter().map(|&j| ds.columns[j].clone()).collect();
            ds = ds.project(&keep).expect("selected columns exist");
            settings.selection = None;
        }
    }

    let reports: Vec<CVReport> = if compare {
        compare_models(&ds, folds, repeats, &settings, &forest_params, common.seed)?
    } else {
        vec![cross_validate(&ds, folds, repeats, &ModelSpec::Ensemble(settings.clone()), common.seed)?]
    };

    let mut summary = String::new();
    for report in &reports {
        std::fs::write(common.out.join(format!("cv_{}.csv", report.model)), report.to_csv())?;
        summary.push_str(&report.summary());
        summary.push('\n');
    }
    std::fs::write(common.out.join("cv_summary.txt"), &summary)?;
    if compare {
        std::fs::write(common.out.join("comparison_chart.txt"), comparison_chart(&reports))?;
    }

    let mut m = RunManifest::new(
        "cv",
        common.seed,
        common.jobs,
        serde_json::json!({
            "target": target,
            "folds": folds,
            "repeats": repeats,
            "compare": compare,
            "global_selection": global_selection,
            "settings": settings,
            "overrides": raw_map,
        }),
    );
    m.add_input(data)?;
    m.write(&common.out)?;
    print!("{summary}");
    Ok(())
}

fn cmd_synth(common: &CommonArgs, n: usize, noise: f64) -> Result<(), CliError> {
    if n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    if noise < 0.0 {
        return Err(CliError::Usage("--noise must be non-negative".into()));
    }
    let ds = generate_synthetic(n, noise, common.seed);
    save_csv(&ds, &common.out.join("synth.csv"), Some(DEFAULT_TARGET))?;
    let m = RunManifest::new(
        "synth",
        common.seed,
        common.jobs,
        serde_json::json!({"n": n, "noise": noise}),
    );
    m.write(&common.out)?;
    println!("synth: {} row(s) -> {}", n, common.out.join("synth.csv").display());
    Ok(())
}
