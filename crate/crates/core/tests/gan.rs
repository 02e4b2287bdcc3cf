use dmk_core::autodiff::Graph;
use dmk_core::corpus::{
    generate_labeled, stratify, tokenize, train_test_split, ListingRecord, PopularityLabel, SyntheticSpec, Vocabulary,
};
use dmk_core::gan::{
    discriminator_accuracy, step_log_to_csv, train_gan, DeltaSpace, Discriminator, GanConfig, GanTrainer, Generator,
    KeywordSet, KeywordTarget, Phase, RealSampler,
};
use dmk_core::glove::{fit_minmax, train_glove, CooccurrenceMatrix, EmbeddingTable, GloveConfig, ScalingParams};
use dmk_core::nn::checkpoint;
use dmk_core::nn::gradcheck::{gradient_check, DEFAULT_PROBE_EPS};
use dmk_core::Tensor;

type Labeled = Vec<(ListingRecord, PopularityLabel)>;

fn corpus(n: usize, dim: usize, seed: u64) -> (Labeled, EmbeddingTable, ScalingParams) {
    let records: Vec<_> =
        generate_labeled(&SyntheticSpec::default(), n, seed).unwrap().into_iter().map(|(r, _)| r).collect();
    let ds = stratify(&records, 30.0).unwrap();
    let tokens: Vec<Vec<String>> = ds.records.iter().map(|(r, _)| tokenize(&r.description)).collect();
    let vocab = Vocabulary::build(&tokens, 2).unwrap();
    let m = CooccurrenceMatrix::from_tokens(&tokens, &vocab, 5).unwrap();
    let cfg = GloveConfig { dim, epochs: 50, seed, ..GloveConfig::default() };
    let (table, _) = train_glove(&m, &vocab, &cfg).unwrap();
    let scaling = fit_minmax(&table).unwrap();
    (ds.records, table, scaling)
}

fn small(dim: usize) -> GanConfig {
    GanConfig {
        dim,
        seq_len: 4,
        noise_dim: 6,
        gen_hidden: 8,
        disc_hidden: 8,
        disc_steps: 7,
        gen_steps: 3,
        cycles: 2,
        seed: 3,
        ..GanConfig::default()
    }
}

#[test]
fn each_phase_leaves_the_other_network_untouched() {
    let (records, table, scaling) = corpus(60, 8, 1);
    let cfg = small(8);
    let sampler = RealSampler::from_labeled(&records, false, &table, &scaling, cfg.seq_len).unwrap();
    let target = KeywordTarget::resolve(&KeywordSet::new(["parking"]), &table, &scaling, DeltaSpace::Raw).unwrap();
    let mut t = GanTrainer::new(cfg, &sampler, Some(target)).unwrap();

    let (g0, d0) = (t.generator.params.checksum(), t.discriminator.params.checksum());
    t.discriminator_step(1, 1).unwrap();
    assert_eq!(t.generator.params.checksum(), g0);
    let d1 = t.discriminator.params.checksum();
    assert_ne!(d1, d0);

    t.generator_step(1, 1).unwrap();
    assert_eq!(t.discriminator.params.checksum(), d1);
    assert_ne!(t.generator.params.checksum(), g0);
}

#[test]
fn dmk_gradient_flows_through_the_discriminator() {
    let (_, table, scaling) = corpus(60, 3, 2);
    let cfg = GanConfig {
        dim: 3,
        seq_len: 2,
        noise_dim: 3,
        gen_hidden: 4,
        disc_hidden: 5,
        seed: 9,
        gamma: 0.3,
        ..GanConfig::default()
    };
    let disc = Discriminator::new(&cfg).unwrap();
    let mut gen = Generator::new(&cfg).unwrap();
    let z = Tensor::vector(vec![0.2, 0.7, 0.4]).unwrap();
    for space in [DeltaSpace::Scaled, DeltaSpace::Raw] {
        let target = KeywordTarget::resolve(&KeywordSet::new(["parking", "subway"]), &table, &scaling, space).unwrap();
        let start = gen.params.tensors();
        let report = gradient_check(
            |ts: &[Tensor]| {
                gen.params.set_tensors(ts.to_vec())?;
                let mut g = Graph::new();
                let gb = gen.params.bind(&mut g, true);
                let db = disc.params.bind(&mut g, false);
                let zv = g.input(z.clone());
                let out = gen.forward_graph(&mut g, &gb, zv)?;
                let p = disc.forward_graph(&mut g, &db, out)?;
                let bce = g.bce(p, 1.0)?;
                let delta = target.delta_graph(&mut g, out)?;
                let weighted = g.scale(delta, cfg.gamma)?;
                let loss = g.sub(bce, weighted)?;
                let grads = g.backward(loss)?;
                let gs =
                    gb.iter().zip(ts).map(|(v, t)| grads.get(*v).cloned().unwrap_or_else(|| Tensor::zeros(t.shape())));
                Ok((g.value(loss).item(), gs.collect()))
            },
            &start,
            DEFAULT_PROBE_EPS,
        )
        .unwrap();
        assert!(report.passes(1e-4), "{space:?}: {report:?}");
    }
}

#[test]
fn schedule_produces_expected_rows() {
    let (records, table, _) = corpus(60, 8, 1);
    let run = train_gan(&small(8), &records, &table, &KeywordSet::new(["parking"])).unwrap();
    assert_eq!(run.log.len(), 2 * (7 + 3));
    let phases: Vec<Phase> = run.log[..10].iter().map(|r| r.phase).collect();
    assert!(phases[..7].iter().all(|p| *p == Phase::Discriminator));
    assert!(phases[7..].iter().all(|p| *p == Phase::Generator));
    assert_eq!(run.log[10].cycle, 2);
    assert!(run.log.iter().all(|r| r.loss_d.is_some() == (r.phase == Phase::Discriminator)));
    let csv = step_log_to_csv(&run.log);
    assert_eq!(csv.lines().count(), 21);
    assert!(csv.starts_with("cycle,phase,step,loss_d,loss_g,delta,gamma\n"));
}

#[test]
fn same_seed_same_run() {
    let (records, table, _) = corpus(60, 8, 1);
    let kw = KeywordSet::new(["parking"]);
    let a = train_gan(&small(8), &records, &table, &kw).unwrap();
    let b = train_gan(&small(8), &records, &table, &kw).unwrap();
    assert_eq!(step_log_to_csv(&a.log), step_log_to_csv(&b.log));
    assert_eq!(checkpoint::to_json(&a.checkpoint()).unwrap(), checkpoint::to_json(&b.checkpoint()).unwrap());

    let c = train_gan(&GanConfig { seed: 4, ..small(8) }, &records, &table, &kw).unwrap();
    assert_ne!(step_log_to_csv(&a.log), step_log_to_csv(&c.log));
}

#[test]
fn positive_gamma_needs_keywords() {
    let (records, table, _) = corpus(60, 8, 1);
    assert!(train_gan(&small(8), &records, &table, &KeywordSet::default()).is_err());
    assert!(train_gan(&GanConfig { gamma: 0.0, ..small(8) }, &records, &table, &KeywordSet::default()).is_ok());
    assert!(train_gan(&small(8), &records, &table, &KeywordSet::new(["notaword"])).is_err());
}

#[test]
fn discriminator_separates_real_from_untrained_fakes() {
    let (records, table, scaling) = corpus(150, 8, 3);
    let split = train_test_split(&records, 0.7, 3).unwrap();
    let cfg = GanConfig { gamma: 0.0, disc_steps: 300, ..small(8) };
    let train = RealSampler::from_labeled(&split.train, false, &table, &scaling, cfg.seq_len).unwrap();
    let held_out = RealSampler::from_labeled(&split.test, false, &table, &scaling, cfg.seq_len).unwrap();
    let mut t = GanTrainer::new(cfg.clone(), &train, None).unwrap();
    let before = discriminator_accuracy(&t.discriminator, &t.generator, &held_out, 100, 1).unwrap();
    for step in 1..=cfg.disc_steps {
        t.discriminator_step(1, step).unwrap();
    }
    let after = discriminator_accuracy(&t.discriminator, &t.generator, &held_out, 100, 1).unwrap();
    assert!(after >= 0.95, "accuracy {before} -> {after}");
}
