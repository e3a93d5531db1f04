use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::anyhow;
use entclass_core::acquisition::{
    AcquiredText, AcquisitionError, Acquirer, Cache, CacheMode, LlmClient, ModelFamily, RequestGate, SearchClient,
    SourceSpec,
};
use entclass_core::classify::{
    predict_instances, prompt_baseline, remote_infer, train, FineTuneClient, Prediction, SoftmaxModel,
};
use entclass_core::corpus::{
    build_instances, emit_chat_finetune, emit_tabular, read_tabular, system_instruction, BuildOptions,
    ChatFineTuneRecord, ClassificationInstance,
};
use entclass_core::eval::{
    ablate_snippets, evaluate_predictions, per_category_table, snippet_pools_from_cache, threshold_sweep,
    write_ablation_csv, write_per_category_csv, write_sweep_csv, EvalError, EvalReport,
};
use entclass_core::sha256_hex;
use entclass_core::taxonomy::{Dataset, EntityRecord, LoadOptions, Split, TaskId, TaxonomyScheme};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::Failure;
use crate::manifest::{write_json, DatasetInfo, RunManifest};

pub const DATASET_FILE: &str = "dataset.csv";
pub const INSTANCES_FILE: &str = "instances.jsonl";
pub const MODEL_FILE: &str = "model.json";
pub const PREDICTIONS_FILE: &str = "predictions.json";
pub const REPORT_FILE: &str = "report.json";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const ABLATION_FILE: &str = "ablation.csv";
pub const BASELINE_FILE: &str = "baseline_predictions.json";

pub struct Ctx {
    pub config: RunConfig,
    pub run_id: String,
    pub run_dir: PathBuf,
    pub scheme: TaxonomyScheme,
    pub refresh: bool,
    pub strict: bool,
}

impl Ctx {
    pub fn new(config: RunConfig, run_id: Option<String>, refresh: bool, strict: bool) -> Result<Self, Failure> {
        let run_id = run_id.unwrap_or_else(|| config.default_run_id());
        if run_id.is_empty() || run_id.contains(['/', '\\']) || run_id.starts_with('.') {
            return Err(Failure::config(anyhow!("invalid run id {run_id:?}")));
        }
        let scheme = match (&config.taxonomy_table, config.task) {
            (Some(table), TaskId::Healthcare) => TaxonomyScheme::healthcare_from_table(table)?,
            (Some(_), TaskId::Sic) => {
                return Err(Failure::config(anyhow!("taxonomy_table only applies to the healthcare task")))
            }
            (None, task) => TaxonomyScheme::for_task(task),
        };
        let run_dir = config.runs_dir.join(&run_id);
        Ok(Self { config, run_id, run_dir, scheme, refresh, strict })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.run_dir.join(name)
    }

    fn spec(&self) -> Result<SourceSpec, Failure> {
        SourceSpec::parse(&self.config.sources, self.config.acquisition.top_k).map_err(|e| Failure::config(anyhow!(e)))
    }

    fn load_options(&self) -> LoadOptions {
        LoadOptions { ratios: self.config.split.ratios(), seed: self.config.seed }
    }

    fn begin(&self, command: &str, dataset: Option<DatasetInfo>, signatures: &[String]) -> Result<RunManifest, Failure> {
        RunManifest::begin(&self.run_dir, &self.run_id, &self.config, command, dataset, signatures)
    }

    fn gate(&self) -> RequestGate {
        let a = &self.config.acquisition;
        RequestGate::new(a.max_parallel, a.requests_per_second, a.retry)
    }

    fn llm_client(&self, family: ModelFamily, model: Option<&str>) -> Result<LlmClient, Failure> {
        let llm = &self.config.llm;
        let (endpoint, default_model) = match family {
            ModelFamily::Gpt => (llm.endpoint.clone(), llm.gpt_model.as_str()),
            ModelFamily::Llama => (
                llm.llama_endpoint.clone().unwrap_or_else(|| llm.endpoint.clone()),
                llm.llama_model.as_str(),
            ),
        };
        Ok(LlmClient::from_env(endpoint, model.unwrap_or(default_model), self.gate())?)
    }

    /// Cache-only acquirer; summary keys use the configured model ids.
    fn offline_acquirer(&self) -> Result<Acquirer, Failure> {
        Ok(Acquirer::new(self.scheme.task(), self.cache()?, &self.config.acquisition)
            .with_mode(CacheMode::Offline)
            .with_summary_model(ModelFamily::Gpt, self.config.llm.gpt_model.clone())
            .with_summary_model(ModelFamily::Llama, self.config.llm.llama_model.clone()))
    }

    fn cache(&self) -> Result<Arc<Cache>, Failure> {
        Ok(Arc::new(Cache::open(&self.config.acquisition.cache_dir)?))
    }

    /// The input dataset with splits assigned from the seed.
    fn source_dataset(&self) -> Result<(Dataset, DatasetInfo), Failure> {
        let path = &self.config.dataset;
        let bytes = std::fs::read(path).map_err(|e| Failure::data(e).context(format!("reading {}", path.display())))?;
        let dataset = Dataset::from_reader(bytes.as_slice(), &self.scheme, self.load_options())?;
        let info = DatasetInfo { path: path.clone(), sha256: sha256_hex(&bytes), records: dataset.records.len() };
        Ok((dataset, info))
    }

    /// The run's frozen dataset, written by `build` (or `ablate`).
    fn run_dataset(&self) -> Result<Dataset, Failure> {
        let path = self.path(DATASET_FILE);
        if !path.exists() {
            return Err(Failure::data(anyhow!("{} is missing; run `entclass build` first", path.display())));
        }
        Ok(Dataset::load(&path, &self.scheme)?)
    }

    fn instances(&self) -> Result<Vec<ClassificationInstance>, Failure> {
        let path = self.path(INSTANCES_FILE);
        if !path.exists() {
            return Err(Failure::data(anyhow!("{} is missing; run `entclass build` first", path.display())));
        }
        Ok(read_tabular(&path)?)
    }

    fn split_instances(&self, dataset: &Dataset, split: Split) -> Result<Vec<ClassificationInstance>, Failure> {
        Ok(self
            .instances()?
            .into_iter()
            .filter(|i| dataset.get(&i.entity_id).is_some_and(|r| r.split == split))
            .collect())
    }

    fn resolve(&self, file: Option<&Path>, default: &str) -> PathBuf {
        match file {
            Some(p) if p.is_absolute() || p.components().count() > 1 => p.to_path_buf(),
            Some(p) => self.path(&p.to_string_lossy()),
            None => self.path(default),
        }
    }
}

fn sorted_test_records(dataset: &Dataset) -> Vec<&EntityRecord> {
    let mut records: Vec<&EntityRecord> = dataset.split(Split::Test).collect();
    records.sort_by(|a, b| a.entity_id.cmp(&b.entity_id));
    records
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AcquireReport {
    pub run_id: String,
    pub source_signature: String,
    pub entities: usize,
    pub fetched: usize,
    pub cache_hits: usize,
    pub refusals: usize,
    pub failures: usize,
    pub failed: BTreeMap<String, String>,
}

pub async fn acquire(ctx: &Ctx) -> Result<(), Failure> {
    let spec = ctx.spec()?;
    let (dataset, info) = ctx.source_dataset()?;
    ctx.begin("acquire", Some(info), &[spec.signature()])?;

    let gate = ctx.gate();
    let mode = if ctx.refresh { CacheMode::Refresh } else { CacheMode::ReadWrite };
    let mut acquirer = Acquirer::new(ctx.scheme.task(), ctx.cache()?, &ctx.config.acquisition).with_mode(mode);
    if spec.needs_search() {
        acquirer = acquirer.with_search(SearchClient::from_env(ctx.config.search.endpoint.clone(), gate)?);
    }
    for leaf in spec.leaves() {
        if let SourceSpec::Summary(family) = leaf {
            acquirer = acquirer.with_llm(*family, ctx.llm_client(*family, None)?);
        }
    }

    let pairs: Vec<(String, String)> = dataset.records.iter().map(|r| (r.entity_id.clone(), r.name.clone())).collect();
    let results = acquirer.acquire_many(&pairs, &spec).await;
    let mut failed = BTreeMap::new();
    let mut first_error: Option<AcquisitionError> = None;
    for (id, r) in results {
        if let Err(e) = r {
            failed.insert(id, e.to_string());
            first_error.get_or_insert(e);
        }
    }
    let stats = acquirer.stats();
    let report = AcquireReport {
        run_id: ctx.run_id.clone(),
        source_signature: spec.signature(),
        entities: pairs.len(),
        fetched: stats.fetched,
        cache_hits: stats.cache_hits,
        refusals: stats.refusals,
        failures: failed.len(),
        failed,
    };
    write_json(&ctx.path("acquire.json"), &report)?;
    println!(
        "acquire {}: {} entities, fetched {}, cache hits {}, refusals {}, failures {}",
        report.source_signature, report.entities, report.fetched, report.cache_hits, report.refusals, report.failures
    );
    match first_error {
        Some(e) if ctx.strict => Err(Failure::from(e).context("acquisition failed in strict mode")),
        _ => Ok(()),
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BuildReport {
    pub run_id: String,
    pub source_signature: String,
    pub instances: usize,
    pub train: usize,
    pub dev: usize,
    pub test: usize,
    pub missing: usize,
    pub refusals: usize,
    pub empty: usize,
}

pub async fn build(ctx: &Ctx) -> Result<(), Failure> {
    let spec = ctx.spec()?;
    let (dataset, info) = ctx.source_dataset()?;
    ctx.begin("build", Some(info), &[spec.signature()])?;
    dataset.save(ctx.path(DATASET_FILE))?;

    let acquirer = ctx.offline_acquirer()?;
    let mut texts: BTreeMap<String, AcquiredText> = BTreeMap::new();
    for r in &dataset.records {
        match acquirer.acquire(&r.entity_id, &r.name, &spec).await {
            Ok(t) => {
                texts.insert(r.entity_id.clone(), t);
            }
            Err(AcquisitionError::NotCached { .. }) if !ctx.strict => {}
            Err(e) => return Err(Failure::from(e).context(format!("loading text for {}", r.entity_id))),
        }
    }
    let options = BuildOptions { strict: ctx.strict, drop_empty: false };
    let out = build_instances(&dataset.records, &texts, &spec.signature(), options)?;
    emit_tabular(&out.instances, ctx.path(INSTANCES_FILE))?;

    let of_split = |split: Split| -> Vec<ClassificationInstance> {
        out.instances
            .iter()
            .filter(|i| dataset.get(&i.entity_id).is_some_and(|r| r.split == split))
            .cloned()
            .collect()
    };
    let (train_set, dev_set, test_set) = (of_split(Split::Train), of_split(Split::Dev), of_split(Split::Test));
    let ft = ctx.path("finetune");
    std::fs::create_dir_all(&ft)?;
    emit_chat_finetune(&train_set, &ctx.scheme, true, ft.join("train.jsonl"))?;
    emit_chat_finetune(&dev_set, &ctx.scheme, true, ft.join("dev.jsonl"))?;
    emit_chat_finetune(&test_set, &ctx.scheme, false, ft.join("test.jsonl"))?;

    let report = BuildReport {
        run_id: ctx.run_id.clone(),
        source_signature: spec.signature(),
        instances: out.instances.len(),
        train: train_set.len(),
        dev: dev_set.len(),
        test: test_set.len(),
        missing: out.missing,
        refusals: out.refusals,
        empty: out.empty,
    };
    write_json(&ctx.path("build.json"), &report)?;
    println!(
        "build {}: {} instances ({} train, {} dev, {} test), {} missing, {} refusals",
        report.source_signature, report.instances, report.train, report.dev, report.test, report.missing, report.refusals
    );
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RemoteJob {
    pub run_id: String,
    pub job_id: String,
    pub fine_tuned_model: Option<String>,
}

pub async fn train_cmd(ctx: &Ctx, remote: bool, wait: bool) -> Result<(), Failure> {
    ctx.begin("train", None, &[])?;
    if remote {
        let llm = LlmClient::from_env(
            ctx.config.llm.endpoint.clone(),
            ctx.config.llm.fine_tune_base_model.clone(),
            ctx.gate(),
        )?;
        let client =
            FineTuneClient::new(llm).with_poll_interval(Duration::from_millis(ctx.config.llm.poll_interval_ms));
        let ft = ctx.path("finetune");
        let train_file = ft.join("train.jsonl");
        if !train_file.exists() {
            return Err(Failure::data(anyhow!("{} is missing; run `entclass build` first", train_file.display())));
        }
        let dev_file = ft.join("dev.jsonl");
        let job_id = client.submit(&train_file, dev_file.exists().then_some(dev_file.as_path())).await?;
        let mut job = RemoteJob { run_id: ctx.run_id.clone(), job_id, fine_tuned_model: None };
        write_json(&ctx.path("remote_job.json"), &job)?;
        println!("submitted fine-tune job {}", job.job_id);
        if wait {
            let model = client.wait_for_model(&job.job_id, ctx.config.llm.max_polls).await?;
            println!("fine-tuned model {model}");
            job.fine_tuned_model = Some(model);
            write_json(&ctx.path("remote_job.json"), &job)?;
        }
        return Ok(());
    }

    let dataset = ctx.run_dataset()?;
    let train_set = ctx.split_instances(&dataset, Split::Train)?;
    let model = train(&train_set, &ctx.scheme, &ctx.config.train)?;
    model.save(ctx.path(MODEL_FILE))?;
    if let Some(s) = &model.training {
        println!(
            "trained on {} examples, {} steps, loss {:.4} -> {:.4}",
            s.examples, s.steps, s.initial_loss, s.final_loss
        );
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PredictionsFile {
    pub run_id: String,
    pub backend: String,
    pub model: String,
    pub predictions: Vec<Prediction>,
}

impl PredictionsFile {
    fn load(path: &Path) -> Result<Self, Failure> {
        let bytes = std::fs::read(path).map_err(|e| Failure::data(e).context(format!("reading {}", path.display())))?;
        serde_json::from_slice(&bytes).map_err(|e| Failure::data(e).context(format!("parsing {}", path.display())))
    }
}

pub async fn predict(ctx: &Ctx, remote: bool, model_id: Option<String>, out: Option<&Path>) -> Result<(), Failure> {
    ctx.begin("predict", None, &[])?;
    let dataset = ctx.run_dataset()?;
    let test_set = ctx.split_instances(&dataset, Split::Test)?;
    let file = if remote {
        let model_id = match model_id {
            Some(m) => m,
            None => {
                let job_path = ctx.path("remote_job.json");
                let job: RemoteJob = serde_json::from_slice(&std::fs::read(&job_path)?)?;
                job.fine_tuned_model
                    .ok_or_else(|| Failure::config(anyhow!("no fine-tuned model yet; pass --model-id")))?
            }
        };
        let llm = ctx.llm_client(ModelFamily::Gpt, Some(&model_id))?;
        let system = system_instruction(&ctx.scheme);
        let mut predictions = Vec::with_capacity(test_set.len());
        for inst in &test_set {
            let record = ChatFineTuneRecord::from_instance(inst, &system, false)?;
            predictions.push(remote_infer(&llm, &model_id, &inst.entity_id, &record, &ctx.scheme).await?);
        }
        PredictionsFile { run_id: ctx.run_id.clone(), backend: "remote".into(), model: model_id, predictions }
    } else {
        let model = SoftmaxModel::load(ctx.path(MODEL_FILE), &ctx.scheme)?;
        PredictionsFile {
            run_id: ctx.run_id.clone(),
            backend: "native".into(),
            model: MODEL_FILE.into(),
            predictions: predict_instances(&model, &test_set),
        }
    };
    write_json(&ctx.resolve(out, PREDICTIONS_FILE), &file)?;
    println!("{} predictions from the {} backend", file.predictions.len(), file.backend);
    Ok(())
}

pub fn eval(ctx: &Ctx, predictions: Option<&Path>, out: Option<&Path>, compare: Option<&Path>) -> Result<(), Failure> {
    ctx.begin("eval", None, &[])?;
    let dataset = ctx.run_dataset()?;
    let file = PredictionsFile::load(&ctx.resolve(predictions, PREDICTIONS_FILE))?;
    let (confusion, report) = evaluate_predictions(&dataset, &file.predictions)?;
    let eval_report = EvalReport {
        run_id: ctx.run_id.clone(),
        config_fingerprint: ctx.config.fingerprint(),
        report,
        confusion,
    };
    eval_report.save(ctx.resolve(out, REPORT_FILE))?;
    if let Some(other) = compare {
        let baseline = EvalReport::load(other)?;
        let rows = per_category_table(&ctx.scheme, &baseline.report, &eval_report.report)?;
        write_per_category_csv(ctx.path("per_category.csv"), &rows)?;
    }
    let r = &eval_report.report;
    println!(
        "macro P {:.4}  R {:.4}  F1 {:.4} over {} predictions ({} invalid)",
        r.macro_p,
        r.macro_r,
        r.macro_f1,
        eval_report.confusion.total(),
        eval_report.confusion.invalid_count()
    );
    Ok(())
}

pub fn sweep(ctx: &Ctx, predictions: Option<&Path>, out: Option<&Path>) -> Result<(), Failure> {
    ctx.begin("sweep", None, &[])?;
    let dataset = ctx.run_dataset()?;
    let file = PredictionsFile::load(&ctx.resolve(predictions, PREDICTIONS_FILE))?;
    let golds = file
        .predictions
        .iter()
        .map(|p| {
            dataset
                .get(&p.entity_id)
                .map(|r| r.label.clone())
                .ok_or_else(|| EvalError::UnknownEntity(p.entity_id.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let eval = &ctx.config.eval;
    let points = threshold_sweep(&file.predictions, &golds, &ctx.scheme, &eval.thresholds, eval.rule)?;
    write_sweep_csv(ctx.resolve(out, SWEEP_FILE), &points)?;
    for p in &points {
        println!(
            "t={:.2}  precision {:.4}  recall {:.4}  coverage {:.4}",
            p.threshold, p.precision, p.recall, p.coverage
        );
    }
    Ok(())
}

pub fn ablate(ctx: &Ctx, ks: Option<Vec<usize>>, out: Option<&Path>) -> Result<(), Failure> {
    let (source, info) = ctx.source_dataset()?;
    ctx.begin("ablate", Some(info), &[])?;
    let dataset_path = ctx.path(DATASET_FILE);
    let dataset = if dataset_path.exists() {
        ctx.run_dataset()?
    } else {
        source.save(&dataset_path)?;
        source
    };
    let pools = snippet_pools_from_cache(&*ctx.cache()?, &ctx.scheme)?;
    let ks = ks.unwrap_or_else(|| ctx.config.eval.ablation_ks.clone());
    let results = ablate_snippets(&dataset, &pools, &ks, &ctx.config.train)?;
    write_ablation_csv(ctx.resolve(out, ABLATION_FILE), &results)?;
    for r in &results {
        println!("k={:<3} macro F1 {:.4}", r.k, r.report.macro_f1);
    }
    Ok(())
}

pub async fn baseline(ctx: &Ctx, context: Option<&str>, model: Option<&str>, out: Option<&Path>) -> Result<(), Failure> {
    let context_spec = context
        .map(|c| SourceSpec::parse(c, ctx.config.acquisition.top_k).map_err(|e| Failure::config(anyhow!(e))))
        .transpose()?;
    let signatures: Vec<String> = context_spec.iter().map(|s| s.signature()).collect();
    ctx.begin("baseline", None, &signatures)?;
    let dataset = ctx.run_dataset()?;
    let llm = ctx.llm_client(ModelFamily::Gpt, model)?;
    let acquirer = ctx.offline_acquirer()?;

    let mut predictions = Vec::new();
    for r in sorted_test_records(&dataset) {
        let text = match &context_spec {
            Some(spec) => match acquirer.acquire(&r.entity_id, &r.name, spec).await {
                Ok(t) => Some(t),
                Err(AcquisitionError::NotCached { .. }) if !ctx.strict => None,
                Err(e) => return Err(e.into()),
            },
            None => None,
        };
        predictions.push(prompt_baseline(&r.entity_id, &r.name, text.as_ref(), &ctx.scheme, &llm).await?);
    }
    let file = PredictionsFile {
        run_id: ctx.run_id.clone(),
        backend: "prompt".into(),
        model: llm.model().to_string(),
        predictions,
    };
    write_json(&ctx.resolve(out, BASELINE_FILE), &file)?;
    let invalid = file.predictions.iter().filter(|p| p.label.is_invalid()).count();
    println!("{} baseline predictions ({} invalid)", file.predictions.len(), invalid);
    Ok(())
}
