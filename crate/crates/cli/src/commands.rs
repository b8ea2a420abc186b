use std::fmt::Display;
use std::path::Path;

use somfs_core::bench::{run_bench, BenchConfig};
use somfs_core::parallel::available_workers;
use somfs_core::{
    label_som, load_features, load_model, make_blobs, run_protocol, save_features, save_model, write_atomic,
    EpisodeSpec, GridShape, Model, SomMap, TrainConfig, Workers,
};

use crate::{BenchArgs, BlobsArgs, EpisodeArgs, EvalArgs, Failure, LabelArgs, ScheduleArgs, TrainArgs};

type CmdResult = Result<(), Failure>;

/// Errors from checking flag values before any data is touched.
fn usage(e: somfs_core::Error) -> Failure {
    Failure::Usage(e.to_string())
}

fn check_alpha(alpha: f64) -> CmdResult {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("--alpha must be positive, got {alpha}")))
    }
}

/// The command line that reproduces this run, with every default spelled
/// out. Printed before the run starts.
struct Resolved(Vec<String>);

impl Resolved {
    fn new(sub: &str) -> Self {
        Resolved(vec!["somfs".into(), sub.into()])
    }

    fn arg(&mut self, flag: &str, value: impl Display) -> &mut Self {
        self.0.push(format!("--{flag}"));
        self.0.push(quote(&value.to_string()));
        self
    }

    fn path(&mut self, flag: &str, path: &Path) -> &mut Self {
        self.arg(flag, path.display())
    }

    fn list(&mut self, flag: &str, values: &[usize]) -> &mut Self {
        let joined: Vec<String> = values.iter().map(usize::to_string).collect();
        self.arg(flag, joined.join(","))
    }

    fn flag(&mut self, flag: &str) -> &mut Self {
        self.0.push(format!("--{flag}"));
        self
    }

    fn schedule(&mut self, s: &ScheduleArgs) -> &mut Self {
        self.arg("epochs", s.epochs)
            .arg("eps-i", s.eps_i)
            .arg("eps-f", s.eps_f)
            .arg("sigma-i", s.sigma_i)
            .arg("sigma-f", s.sigma_f)
    }

    fn print(&self) {
        println!("resolved: {}", self.0.join(" "));
    }
}

fn quote(s: &str) -> String {
    let plain = !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || "-_./,:=+@%".contains(c));
    if plain {
        s.to_string()
    } else {
        format!("'{}'", s.replace('\'', r"'\''"))
    }
}

impl ScheduleArgs {
    fn config(&self, seed: u64, alpha: f64) -> Result<TrainConfig, Failure> {
        let mut cfg = TrainConfig::new(self.epochs, (self.eps_i, self.eps_f), (self.sigma_i, self.sigma_f))
            .map_err(usage)?
            .with_seed(seed);
        cfg.alpha = alpha;
        cfg.validate().map_err(usage)?;
        Ok(cfg)
    }
}

pub(crate) fn train(a: TrainArgs) -> CmdResult {
    let seed = a.seed.resolve();
    let shape = GridShape::new(a.rows, a.cols).map_err(usage)?;
    let cfg = a.schedule.config(seed, a.alpha)?;
    let workers = Workers::new(a.workers).map_err(usage)?;
    let format = a.input.format();

    Resolved::new("train")
        .path("features", &a.input.features)
        .arg("format", format)
        .arg("rows", a.rows)
        .arg("cols", a.cols)
        .schedule(&a.schedule)
        .arg("alpha", a.alpha)
        .arg("metric", a.metric)
        .arg("seed", seed)
        .arg("init", a.init)
        .arg("workers", a.workers)
        .path("out", &a.out)
        .print();

    let ds = load_features(&a.input.features, format)?;
    println!("loaded {} records of dimension {}, {} classes", ds.len(), ds.dim(), ds.num_classes());
    let mut som = SomMap::init(shape, ds.dim(), a.metric, seed, a.init.with(ds.samples()))?;
    let report = som.train(ds.samples(), &cfg, &workers)?;
    for (t, secs) in report.epoch_seconds.iter().enumerate() {
        println!("epoch {:>3}: {secs:.3} s", t + 1);
    }
    println!(
        "trained {} steps in {:.3} s; final eps {} sigma {}",
        report.steps,
        report.total_seconds(),
        report.final_eps,
        report.final_sigma
    );
    save_model(&Model::Unlabeled(som), &a.out)?;
    println!("wrote {} ({} neurons)", a.out.display(), shape.len());
    Ok(())
}

pub(crate) fn label(a: LabelArgs) -> CmdResult {
    check_alpha(a.alpha)?;
    let format = a.input.format();
    Resolved::new("label")
        .path("model", &a.model)
        .path("features", &a.input.features)
        .arg("format", format)
        .arg("alpha", a.alpha)
        .path("out", &a.out)
        .print();

    let som = load_model(&a.model)?.into_som();
    let ds = load_features(&a.input.features, format)?;
    let labeled = label_som(som, ds.iter(), ds.num_classes(), a.alpha)?;
    println!(
        "labeled {} of {} neurons from {} samples, {} classes",
        labeled.labeled_neurons(),
        labeled.som().len(),
        ds.len(),
        ds.num_classes()
    );
    save_model(&Model::Labeled(labeled), &a.out)?;
    println!("wrote {}", a.out.display());
    Ok(())
}

pub(crate) fn eval(a: EvalArgs) -> CmdResult {
    let format = a.input.format();
    Resolved::new("eval")
        .path("model", &a.model)
        .path("features", &a.input.features)
        .arg("format", format)
        .print();

    let labeled = match load_model(&a.model)? {
        Model::Labeled(l) => l,
        Model::Unlabeled(_) => {
            return Err(Failure::Message {
                code: 2,
                text: "model has no labels".into(),
            })
        }
    };
    let ds = load_features(&a.input.features, format)?;
    let accuracy = labeled.evaluate(ds.iter())?;
    let correct = (accuracy * ds.len() as f64).round() as usize;
    println!("accuracy: {accuracy:.4} ({correct}/{})", ds.len());
    Ok(())
}

pub(crate) fn episode(a: EpisodeArgs) -> CmdResult {
    check_alpha(a.alpha)?;
    let seed = a.seed.resolve();
    let mut spec = EpisodeSpec::new(a.shots, a.queries);
    spec.ways = a.ways;
    spec.runs = a.runs;
    spec.seed = seed;
    if let (Some(rows), Some(cols)) = (a.rows, a.cols) {
        spec.shape = GridShape::new(rows, cols).map_err(usage)?;
    }
    spec.train = a.schedule.config(seed, a.alpha)?;
    spec.metric = a.metric;
    spec.label_alpha = a.alpha;
    spec.init = a.init;
    spec.validate().map_err(usage)?;
    let workers = Workers::new(a.workers).map_err(usage)?;
    let format = a.input.format();

    let mut resolved = Resolved::new("episode");
    resolved
        .path("features", &a.input.features)
        .arg("format", format)
        .arg("ways", spec.ways)
        .arg("shots", spec.shots)
        .arg("queries", spec.queries)
        .arg("runs", spec.runs)
        .arg("seed", seed)
        .arg("rows", spec.shape.rows())
        .arg("cols", spec.shape.cols())
        .schedule(&a.schedule)
        .arg("metric", spec.metric)
        .arg("alpha", spec.label_alpha)
        .arg("init", spec.init)
        .arg("workers", a.workers);
    if let Some(csv) = &a.csv {
        resolved.path("csv", csv);
    }
    resolved.print();

    let ds = load_features(&a.input.features, format)?;
    let result = run_protocol(&ds, &spec, &workers)?;
    println!(
        "{}-way {}-shot, {} queries per class, {} neurons: {}",
        spec.ways,
        spec.shots,
        spec.queries,
        spec.shape.len(),
        result
    );
    if let Some(csv) = &a.csv {
        let mut buf = Vec::new();
        result.write_csv(&mut buf)?;
        write_atomic(csv, &buf)?;
        println!("wrote {}", csv.display());
    }
    Ok(())
}

pub(crate) fn bench(a: BenchArgs) -> CmdResult {
    let seed = a.seed.resolve();
    let mut cfg = BenchConfig {
        neuron_counts: a.neurons,
        dim: a.dim,
        samples_per_epoch: a.samples,
        epochs: a.epochs,
        seed,
        repeats: a.repeats,
        warmup: !a.no_warmup,
        metric: a.metric,
        ..BenchConfig::default()
    };
    if let Some(workers) = a.workers {
        cfg.worker_counts = workers;
    }
    cfg.validate().map_err(usage)?;

    let mut resolved = Resolved::new("bench");
    resolved
        .list("neurons", &cfg.neuron_counts)
        .arg("dim", cfg.dim)
        .arg("samples", cfg.samples_per_epoch)
        .arg("epochs", cfg.epochs)
        .list("workers", &cfg.worker_counts)
        .arg("repeats", cfg.repeats)
        .arg("metric", cfg.metric)
        .arg("seed", seed);
    if a.no_warmup {
        resolved.flag("no-warmup");
    }
    if let Some(out) = &a.out {
        resolved.path("out", out);
    }
    resolved.print();
    if let Some(&max) = cfg.worker_counts.iter().max() {
        if max > available_workers() {
            println!(
                "note: only {} CPU(s) available; larger worker counts run with {}",
                available_workers(),
                available_workers()
            );
        }
    }

    let report = run_bench(&cfg)?;
    println!("{:>6} {:>8} {:>12} {:>14} {:>8}", "k", "workers", "median_s", "samples/s", "speedup");
    for c in &report.cells {
        println!(
            "{:>6} {:>8} {:>12.4} {:>14.1} {:>8.3}",
            c.neurons, c.workers, c.median_seconds, c.samples_per_sec, c.speedup
        );
    }
    for (workers, fit) in &report.fits {
        println!(
            "workers {workers}: seconds = {:.6e} * k + {:.4}, R^2 = {:.4}",
            fit.slope, fit.intercept, fit.r_squared
        );
    }
    if let Some(out) = &a.out {
        let mut buf = Vec::new();
        report.write_csv(&mut buf)?;
        write_atomic(out, &buf)?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

pub(crate) fn blobs(a: BlobsArgs) -> CmdResult {
    let seed = a.seed.resolve();
    let format = a.format.unwrap_or_else(|| somfs_core::FeatureFormat::from_path(&a.out));
    let mut resolved = Resolved::new("blobs");
    resolved
        .arg("ways", a.ways)
        .arg("per-class", a.per_class)
        .arg("dim", a.dim)
        .arg("spread", a.spread)
        .arg("separation", a.separation);
    if let Some(s) = &a.scale {
        resolved.flag("scale").0.extend([s[0].to_string(), s[1].to_string()]);
    }
    resolved.arg("seed", seed).arg("format", format).path("out", &a.out).print();

    let mut ds = make_blobs(a.ways, a.per_class, a.dim, a.spread, a.separation, seed).map_err(usage)?;
    if let Some(s) = &a.scale {
        ds = ds.with_random_scaling(s[0], s[1], seed).map_err(usage)?;
    }
    save_features(&ds, &a.out, format)?;
    println!("wrote {} ({} records, {} classes)", a.out.display(), ds.len(), ds.num_classes());
    Ok(())
}
