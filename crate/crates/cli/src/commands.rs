use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Result;
use log::info;
use serde::Serialize;

use dmk_core::classifier::{metrics_to_csv, train_classifier};
use dmk_core::corpus::{
    generate_synthetic_corpus, parse_labeled, parse_listings, stratify, tokenize, train_test_split, write_csv,
    BinSummary, ListingRecord, PopularityLabel, SyntheticSpec, Vocabulary,
};
use dmk_core::gan::{
    gamma_sweep, generate_samples, step_log_to_csv, train_gan_with_scaling, GanConfig, Generator, KeywordSet,
};
use dmk_core::glove::{fit_minmax, train_glove, CooccurrenceMatrix, EmbeddingTable, ScalingParams};
use dmk_core::nn::checkpoint;

use crate::config::RunConfig;
use crate::io::{read_input, read_input_string, write_all, write_atomic};
use crate::{Command, GanOpts, InputError, Invocation, Toggle};

macro_rules! flag {
    ($inv:expr, $id:literal, $value:expr => $target:expr) => {
        if $inv.explicit($id) {
            $target = $value.into();
        }
    };
}

fn apply_gan_opts(inv: &Invocation, o: &GanOpts, gan: &mut GanConfig) {
    flag!(inv, "seq_len", o.seq_len => gan.seq_len);
    flag!(inv, "noise_dim", o.noise_dim => gan.noise_dim);
    flag!(inv, "gen_hidden", o.gen_hidden => gan.gen_hidden);
    flag!(inv, "disc_hidden", o.disc_hidden => gan.disc_hidden);
    flag!(inv, "disc_steps", o.disc_steps => gan.disc_steps);
    flag!(inv, "gen_steps", o.gen_steps => gan.gen_steps);
    flag!(inv, "cycles", o.cycles => gan.cycles);
    flag!(inv, "lr", o.lr => gan.lr);
    flag!(inv, "paper_literal_generator", o.paper_literal_generator => gan.paper_literal_generator);
    flag!(inv, "delta_space", o.delta_space => gan.delta_space);
    flag!(inv, "include_all_labels", o.include_all_labels => gan.include_all_labels);
}

/// Copies every explicitly given option into `cfg`.
pub(crate) fn apply_flags(inv: &Invocation, cfg: &mut RunConfig) {
    match &inv.cli.command {
        Command::Synth(a) => flag!(inv, "records", a.records => cfg.corpus.synthetic_records),
        Command::Ingest(a) => flag!(inv, "bin_width", a.bin_width => cfg.corpus.bin_width),
        Command::Glove(a) => {
            flag!(inv, "dim", a.dim => cfg.glove.dim);
            flag!(inv, "epochs", a.epochs => cfg.glove.epochs);
            flag!(inv, "lr", a.lr => cfg.glove.lr);
            flag!(inv, "window", a.window => cfg.corpus.window);
            flag!(inv, "min_count", a.min_count => cfg.corpus.min_count);
            flag!(inv, "x_max", a.x_max => cfg.glove.x_max);
            flag!(inv, "alpha", a.alpha => cfg.glove.alpha);
        }
        Command::Classify(a) => {
            let c = &mut cfg.classifier;
            flag!(inv, "epochs", a.epochs => c.epochs);
            flag!(inv, "ensemble", a.ensemble == Toggle::On => c.ensemble);
            flag!(inv, "ensemble_mode", a.ensemble_mode => c.ensemble_mode);
            flag!(inv, "recurrence", a.recurrence => c.recurrence);
            flag!(inv, "hidden", a.hidden => c.hidden);
            flag!(inv, "lr", a.lr => c.lr);
            flag!(inv, "max_len", a.max_len => c.max_len);
            flag!(inv, "init_scale", a.init_scale => c.init_scale);
            flag!(inv, "split_ratio", a.split_ratio => cfg.corpus.split_ratio);
        }
        Command::Gan(a) => {
            flag!(inv, "gamma", a.gamma => cfg.gan.gamma);
            flag!(inv, "keywords", a.keywords.clone() => cfg.keywords);
            apply_gan_opts(inv, &a.opts, &mut cfg.gan);
        }
        Command::Generate(a) => {
            flag!(inv, "paper_literal_generator", a.paper_literal_generator => cfg.gan.paper_literal_generator);
        }
        Command::Sweep(a) => {
            flag!(inv, "keywords", a.keywords.clone() => cfg.keywords);
            flag!(inv, "gammas", a.gammas.clone() => cfg.sweep.gammas);
            flag!(inv, "seeds", a.seeds.clone() => cfg.sweep.seeds);
            apply_gan_opts(inv, &a.opts, &mut cfg.gan);
        }
    }
}

pub fn dispatch(inv: &Invocation) -> Result<()> {
    let cfg = inv.run_config()?;
    let ctx = Context { cfg: &cfg };
    match &inv.cli.command {
        Command::Synth(a) => ctx.synth(&a.out),
        Command::Ingest(a) => ctx.ingest(a.input.as_deref(), &a.out, &a.report),
        Command::Glove(a) => {
            ctx.glove(a.input.as_deref(), a.out.as_deref(), a.scaling.as_deref(), a.objective.as_deref())
        }
        Command::Classify(a) => {
            ctx.classify(a.input.as_deref(), a.embeddings.as_deref(), &a.metrics, a.checkpoint.as_deref())
        }
        Command::Gan(a) => {
            ctx.gan(a.input.as_deref(), a.embeddings.as_deref(), a.scaling.as_deref(), a.checkpoint.as_deref(), &a.log)
        }
        Command::Generate(a) => ctx.generate(a),
        Command::Sweep(a) => ctx.sweep(a),
    }
}

#[derive(Debug, Serialize)]
struct IngestReport {
    rows_read: usize,
    rows_rejected: usize,
    reasons: Vec<String>,
    bin_width: f64,
    label_counts: BTreeMap<String, usize>,
    bins: Vec<BinSummary>,
}

struct Context<'a> {
    cfg: &'a RunConfig,
}

impl Context<'_> {
    fn seed(&self) -> u64 {
        self.cfg.seed.unwrap_or_default()
    }

    /// Flag value, else the configured path, else an input error.
    fn input(&self, flag: Option<&Path>, configured: &Option<PathBuf>, name: &str) -> Result<PathBuf> {
        flag.map(Path::to_path_buf)
            .or_else(|| configured.clone())
            .ok_or_else(|| InputError(format!("--{name} is required (or set it in the config paths)")).into())
    }

    /// Relative output paths land under the configured output directory.
    fn output(&self, path: &Path) -> PathBuf {
        match &self.cfg.paths.out_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.to_path_buf(),
        }
    }

    fn optional_output(&self, flag: Option<&Path>, configured: &Option<PathBuf>) -> Option<PathBuf> {
        flag.map(Path::to_path_buf).or_else(|| configured.clone()).map(|p| self.output(&p))
    }

    fn labeled(&self, flag: Option<&Path>) -> Result<Vec<(ListingRecord, PopularityLabel)>> {
        let path = self.input(flag, &self.cfg.paths.corpus, "input")?;
        let (records, report) = parse_labeled(&read_input(&path)?)?;
        if report.rows_rejected > 0 {
            log::warn!("{}: skipped {} malformed rows", path.display(), report.rows_rejected);
        }
        if records.is_empty() {
            return Err(InputError(format!("{} has no usable listings", path.display())).into());
        }
        Ok(records)
    }

    fn embeddings(&self, flag: Option<&Path>) -> Result<EmbeddingTable> {
        let path = self.input(flag, &self.cfg.paths.embeddings, "embeddings")?;
        Ok(EmbeddingTable::from_text(&read_input_string(&path)?)?)
    }

    fn scaling(&self, flag: Option<&Path>, table: &EmbeddingTable) -> Result<ScalingParams> {
        match flag.map(Path::to_path_buf).or_else(|| self.cfg.paths.scaling.clone()) {
            Some(path) => {
                let s = ScalingParams::from_json(&read_input_string(&path)?)?;
                if s.dim() != table.dim() {
                    return Err(InputError(format!(
                        "scaling in {} has {} dimensions, embeddings have {}",
                        path.display(),
                        s.dim(),
                        table.dim()
                    ))
                    .into());
                }
                Ok(s)
            }
            None => Ok(fit_minmax(table)?),
        }
    }

    fn keywords(&self, table: &EmbeddingTable) -> Result<KeywordSet> {
        let keywords =
            KeywordSet::new(self.cfg.keywords.iter().map(|k| k.trim().to_lowercase()).filter(|k| !k.is_empty()));
        for k in &keywords.words {
            if table.vocab().get(k).is_none() {
                return Err(InputError(format!("keyword `{k}` is not in the embedding vocabulary")).into());
            }
        }
        Ok(keywords)
    }

    fn synth(&self, out: &Path) -> Result<()> {
        let records =
            generate_synthetic_corpus(&SyntheticSpec::default(), self.cfg.corpus.synthetic_records, self.seed())?;
        let bytes = write_csv(records.iter().map(|r| (r, None)), false)?;
        write_atomic(&self.output(out), &bytes)?;
        info!("wrote {} synthetic listings", records.len());
        Ok(())
    }

    fn ingest(&self, input: Option<&Path>, out: &Path, report_path: &Path) -> Result<()> {
        let path = self.input(input, &self.cfg.paths.corpus, "input")?;
        let (records, parse) = parse_listings(&read_input(&path)?)?;
        if records.is_empty() {
            return Err(InputError(format!("{} has no usable listings", path.display())).into());
        }
        let ds = stratify(&records, self.cfg.corpus.bin_width)?;
        let mut label_counts = BTreeMap::new();
        for (_, l) in &ds.records {
            *label_counts.entry(l.as_str().to_string()).or_insert(0) += 1;
        }
        let report = IngestReport {
            rows_read: parse.rows_read,
            rows_rejected: parse.rows_rejected,
            reasons: parse.reasons,
            bin_width: ds.bin_width,
            label_counts,
            bins: ds.bins.clone(),
        };
        let csv = write_csv(ds.records.iter().map(|(r, l)| (r, Some(*l))), true)?;
        let json = serde_json::to_string_pretty(&report)? + "\n";
        write_all(&[(&self.output(out), &csv), (&self.output(report_path), json.as_bytes())])?;
        info!(
            "labelled {} listings in {} bins; rejected {} rows",
            ds.records.len(),
            ds.bins.len(),
            report.rows_rejected
        );
        Ok(())
    }

    fn glove(
        &self,
        input: Option<&Path>,
        out: Option<&Path>,
        scaling: Option<&Path>,
        objective: Option<&Path>,
    ) -> Result<()> {
        let path = self.input(input, &self.cfg.paths.corpus, "input")?;
        let out = self.output(&self.input(out, &self.cfg.paths.embeddings, "out")?);
        let scaling_out = self.output(&self.input(scaling, &self.cfg.paths.scaling, "scaling")?);
        let (records, _) = parse_listings(&read_input(&path)?)?;
        let tokens: Vec<Vec<String>> = records.iter().map(|r| tokenize(&r.description)).collect();
        let vocab = Vocabulary::build(&tokens, self.cfg.corpus.min_count)?;
        if vocab.known() == 0 {
            return Err(InputError(format!(
                "no word occurs at least {} times in {}",
                self.cfg.corpus.min_count,
                path.display()
            ))
            .into());
        }
        let m = CooccurrenceMatrix::from_tokens(&tokens, &vocab, self.cfg.corpus.window)?;
        let (table, curve) = train_glove(&m, &vocab, &self.cfg.glove)?;
        for (i, j) in curve.iter().enumerate() {
            info!("glove epoch {}: objective {j:.6}", i + 1);
        }
        // Fit the scaling to the vectors as they will be read back.
        let text = table.to_text();
        let scaling_json = fit_minmax(&EmbeddingTable::from_text(&text)?)?.to_json()? + "\n";
        let mut outputs: Vec<(PathBuf, Vec<u8>)> =
            vec![(out, text.into_bytes()), (scaling_out, scaling_json.into_bytes())];
        if let Some(p) = objective {
            let mut csv = String::from("epoch,objective\n");
            for (i, j) in curve.iter().enumerate() {
                writeln!(csv, "{},{j}", i + 1)?;
            }
            outputs.push((self.output(p), csv.into_bytes()));
        }
        write_all(&outputs.iter().map(|(p, b)| (p.as_path(), b.as_slice())).collect::<Vec<_>>())?;
        info!("{} words, dimension {}", vocab.known(), self.cfg.glove.dim);
        Ok(())
    }

    fn classify(
        &self,
        input: Option<&Path>,
        embeddings: Option<&Path>,
        metrics: &Path,
        ckpt: Option<&Path>,
    ) -> Result<()> {
        let records = self.labeled(input)?;
        let table = self.embeddings(embeddings)?;
        let ckpt_path = self.optional_output(ckpt, &self.cfg.paths.classifier_checkpoint);
        let split = train_test_split(&records, self.cfg.corpus.split_ratio, self.seed())?;
        let (model, rows) = train_classifier(&split, &table, &self.cfg.classifier)?;
        let csv = metrics_to_csv(&rows);
        let mut outputs = vec![(self.output(metrics), csv.into_bytes())];
        if let Some(p) = ckpt_path {
            outputs.push((p, (checkpoint::to_json(&model.to_checkpoint())? + "\n").into_bytes()));
        }
        write_all(&outputs.iter().map(|(p, b)| (p.as_path(), b.as_slice())).collect::<Vec<_>>())?;
        if let Some(last) = rows.last() {
            info!("final test accuracy {:.3}", last.test_acc);
        }
        Ok(())
    }

    fn gan(
        &self,
        input: Option<&Path>,
        embeddings: Option<&Path>,
        scaling: Option<&Path>,
        ckpt: Option<&Path>,
        log: &Path,
    ) -> Result<()> {
        let records = self.labeled(input)?;
        let table = self.embeddings(embeddings)?;
        let scaling = self.scaling(scaling, &table)?;
        let ckpt_path = self.optional_output(ckpt, &self.cfg.paths.gan_checkpoint);
        let keywords = self.keywords(&table)?;
        let config = GanConfig { dim: table.dim(), ..self.cfg.gan.clone() };
        if config.gamma > 0.0 && keywords.is_empty() {
            return Err(InputError("--keywords is required when gamma > 0".into()).into());
        }
        let run = train_gan_with_scaling(&config, &records, &table, &scaling, &keywords)?;
        let mut outputs = vec![(self.output(log), step_log_to_csv(&run.log).into_bytes())];
        if let Some(p) = ckpt_path {
            outputs.push((p, (checkpoint::to_json(&run.checkpoint())? + "\n").into_bytes()));
        }
        write_all(&outputs.iter().map(|(p, b)| (p.as_path(), b.as_slice())).collect::<Vec<_>>())?;
        Ok(())
    }

    fn generate(&self, a: &crate::GenerateArgs) -> Result<()> {
        let table = self.embeddings(a.embeddings.as_deref())?;
        let scaling = self.scaling(a.scaling.as_deref(), &table)?;
        let path = self.input(a.checkpoint.as_deref(), &self.cfg.paths.gan_checkpoint, "checkpoint")?;
        let ckpt = checkpoint::from_json(&read_input_string(&path)?)?;
        let &[hidden, noise_dim] = checkpoint::shape_of(&ckpt, "generator.l1.weight")? else {
            return Err(InputError("generator.l1.weight is not a matrix".into()).into());
        };
        let &[out, _] = checkpoint::shape_of(&ckpt, "generator.l3.weight")? else {
            return Err(InputError("generator.l3.weight is not a matrix".into()).into());
        };
        let d = table.dim();
        if out % d != 0 {
            return Err(InputError(format!("generator emits {out} values, not a multiple of dimension {d}")).into());
        }
        let config = GanConfig { seq_len: out / d, dim: d, noise_dim, gen_hidden: hidden, ..self.cfg.gan.clone() };
        let gen = Generator::from_checkpoint(&ckpt, &config)?;
        let samples = generate_samples(&gen, &table, &scaling, a.samples, self.seed(), a.metric.into())?;
        let mut text = String::new();
        for s in &samples {
            text.push_str(&s.join(" "));
            text.push('\n');
        }
        match &a.out {
            Some(p) => write_atomic(&self.output(p), text.as_bytes())?,
            None => print!("{text}"),
        }
        Ok(())
    }

    fn sweep(&self, a: &crate::SweepArgs) -> Result<()> {
        let records = self.labeled(a.input.as_deref())?;
        let table = self.embeddings(a.embeddings.as_deref())?;
        let scaling = self.scaling(a.scaling.as_deref(), &table)?;
        let keywords = self.keywords(&table)?;
        if keywords.is_empty() {
            return Err(InputError("--keywords is required".into()).into());
        }
        let config = GanConfig { dim: table.dim(), ..self.cfg.gan.clone() };
        let report =
            gamma_sweep(&self.cfg.sweep.gammas, &self.cfg.sweep.seeds, &config, &records, &table, &scaling, &keywords)?;
        let json = report.to_json()? + "\n";
        let text = report.to_text();
        match &a.table {
            Some(p) => write_all(&[(&self.output(&a.out), json.as_bytes()), (&self.output(p), text.as_bytes())])?,
            None => {
                write_atomic(&self.output(&a.out), json.as_bytes())?;
                print!("{text}");
            }
        }
        Ok(())
    }
}
