//! Command-line interface. Data goes to files or standard output,
//! diagnostics to standard error.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::boost::{train, BoostConfig, StrongModel};
use crate::bounds;
use crate::dataset::{load_csv, split, split_indices};
use crate::error::{Error, Result};
use crate::eval::{self, load_label_sets};
use crate::experiment::{self, ExperimentSpec};
use crate::predict::{predictions_csv, TestTripletSet, TiePolicy};
use crate::synthetic::{moons, synthetic_ratings};
use crate::triplets::{
    generate_from_ratings, generate_subsampled, generate_test_triplets, noise_seed, Metric, Ratings, TripletStore,
};
use crate::weak_learner::RoundStats;

#[derive(Debug, Parser)]
#[command(name = "tripletboost", version, about = "Boosting from triplet comparisons")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Two interleaving half-circles as a label,x,y CSV.
    GenMoons {
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Random train/test split of a CSV dataset.
    Split {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0.3)]
        test_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        train_out: PathBuf,
        #[arg(long)]
        test_out: PathBuf,
    },
    /// Triplets from feature vectors: a uniform proportion of all strict comparisons, then swap noise.
    GenTriplets(GenTriplets),
    /// Triplets between items of a `user item rating` table.
    GenTripletsRatings {
        #[arg(long)]
        ratings: PathBuf,
        /// Examine only this many candidate triplets, drawn uniformly.
        #[arg(long)]
        candidates: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Synthetic rating table with genre-labelled items.
    GenRatings {
        #[arg(long, default_value_t = 50)]
        items: usize,
        #[arg(long, default_value_t = 200)]
        users: usize,
        #[arg(long, default_value_t = 5)]
        genres: usize,
        #[arg(long, default_value_t = 0.6)]
        density: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        ratings_out: PathBuf,
        #[arg(long)]
        items_out: PathBuf,
    },
    /// Splits a triplet store over labelled examples into training and test parts.
    SplitTriplets {
        #[arg(long)]
        triplets: PathBuf,
        /// One label set per line (`a` or `a|b`), first field of each row.
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, default_value_t = 0.3)]
        test_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        train_out: PathBuf,
        #[arg(long)]
        test_out: PathBuf,
        #[arg(long)]
        train_labels_out: PathBuf,
        #[arg(long)]
        test_labels_out: PathBuf,
    },
    /// Swaps a given fraction of the triplets of a store.
    AddNoise {
        #[arg(long)]
        triplets: PathBuf,
        #[arg(long)]
        rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Runs the boosting loop and writes the model.
    Train(TrainArgs),
    /// Writes one prediction per test example as CSV.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        test_triplets: PathBuf,
        #[arg(long, default_value = "random")]
        policy: TiePolicy,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Accuracy, abstention rate and ranking metrics on labelled test examples.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        test_triplets: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, default_value = "random")]
        policy: TiePolicy,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also report precision@1 and recall@k.
        #[arg(long)]
        k: Option<usize>,
        /// Append the report as one JSON line to this file.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Runs a proportion × noise × repetition grid described by a spec file.
    Experiment {
        #[arg(long)]
        spec: PathBuf,
        /// Overrides the spec's output path; standard output if neither is set.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Training-error and margin bounds from per-round statistics.
    Bound {
        /// CSV written by `train --stats-out`.
        #[arg(long)]
        stats: PathBuf,
        #[arg(long)]
        num_labels: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, value_delimiter = ',')]
        theta: Vec<f64>,
    },
    /// Closed-form abstention probability next to its Monte Carlo estimate.
    SimulateAbstention {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        c: usize,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Abstention bound over a (k, beta) grid as CSV.
    BoundSurface {
        #[arg(long, default_value_t = 100)]
        n: usize,
        /// `start:stop:step` or a comma-separated list.
        #[arg(long, default_value = "0:2.8:0.1")]
        k_grid: String,
        #[arg(long, default_value = "0:2:0.1")]
        beta_grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Asymptotic abstention regime for p = 2n^(k-3), C = n^beta/2.
    BoundLimit {
        #[arg(long)]
        k: f64,
        #[arg(long)]
        beta: f64,
        /// Also print the finite-n value.
        #[arg(long)]
        n: Option<usize>,
    },
}

#[derive(Debug, Args)]
pub struct GenTriplets {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "euclidean")]
    pub metric: Metric,
    #[arg(long, default_value_t = 1.0)]
    pub proportion: f64,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Test examples whose triplets against the training data are written to --test-out.
    #[arg(long, requires = "test_out")]
    pub test_data: Option<PathBuf>,
    #[arg(long, requires = "test_data")]
    pub test_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub triplets: PathBuf,
    #[arg(long)]
    pub rounds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_model: PathBuf,
    #[arg(long)]
    pub keep_zero_alpha: bool,
    /// Checkpoint interval; 0 reports only the final round.
    #[arg(long, default_value_t = 0)]
    pub stats_every: usize,
    /// Per-round W+, W-, Z and alpha as CSV.
    #[arg(long)]
    pub stats_out: Option<PathBuf>,
}

fn write_file(path: &Path, data: &str) -> Result<()> {
    std::fs::write(path, data).map_err(|e| Error::io(path, e))
}

fn write_out(path: Option<&Path>, data: &str) -> Result<()> {
    match path {
        Some(p) => write_file(p, data),
        None => std::io::stdout()
            .write_all(data.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Parses `start:stop:step` (inclusive, tolerant to rounding) or `a,b,c`.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidParameter(format!("bad grid {s:?}"));
    let num = |v: &str| v.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [a, b, c] => {
            let (start, stop, step) = (num(a)?, num(b)?, num(c)?);
            if !(step > 0.0) || stop < start {
                return Err(bad());
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            // round to 12 decimals so 0.1 steps print as 0.3, not 0.30000000000000004
            Ok((0..count)
                .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
                .collect())
        }
        [_] => s.split(',').map(num).collect(),
        _ => Err(bad()),
    }
}

pub fn stats_csv(stats: &[RoundStats]) -> String {
    let mut out = String::from("round,w_plus,w_minus,z,alpha\n");
    for (c, r) in stats.iter().enumerate() {
        out.push_str(&format!("{},{:?},{:?},{:?},{:?}\n", c + 1, r.w_plus, r.w_minus, r.z, r.alpha));
    }
    out
}

pub fn parse_stats_csv(text: &str) -> Result<Vec<RoundStats>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let v: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::MalformedRow {
                row: idx + 1,
                msg: "expected numbers".into(),
            })?;
        if v.len() != 5 {
            return Err(Error::MalformedRow {
                row: idx + 1,
                msg: "expected round,w_plus,w_minus,z,alpha".into(),
            });
        }
        out.push(RoundStats {
            w_plus: v[1],
            w_minus: v[2],
            z: v[3],
            alpha: v[4],
        });
    }
    Ok(out)
}

fn check_probability(what: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{what} = {p} is not in [0, 1]")))
    }
}

fn gen_triplets(a: &GenTriplets) -> Result<()> {
    let ds = load_csv(&a.data, false)?;
    let ts = generate_subsampled(&ds, a.metric, a.proportion, a.seed)?.add_noise(a.noise, noise_seed(a.seed))?;
    ts.save(&a.out)?;
    eprintln!("wrote {} triplets over {} examples", ts.len(), ts.n());
    if let (Some(test_path), Some(test_out)) = (&a.test_data, &a.test_out) {
        let test = load_csv(test_path, false)?;
        let t = generate_test_triplets(&ds, &test, a.metric, a.proportion, a.noise, a.seed)?;
        let set = TestTripletSet::from_triplets(test.n(), ds.n(), &t)?;
        set.save(test_out)?;
        eprintln!("wrote {} test triplets for {} examples", set.len(), set.n_test());
    }
    Ok(())
}

fn train_cmd(a: &TrainArgs) -> Result<()> {
    let ds = load_csv(&a.data, false)?;
    let ts = TripletStore::load(&a.triplets)?;
    let cfg = BoostConfig {
        rounds: a.rounds,
        seed: a.seed,
        keep_zero_alpha: a.keep_zero_alpha,
        stats_every: a.stats_every,
    };
    let model = train(&ds, &ts, &cfg)?;
    model.save(&a.out_model)?;
    if let Some(p) = &a.stats_out {
        write_file(p, &stats_csv(model.round_stats()))?;
    }
    let mut out = String::from("round,train_error,bound\n");
    for c in model.checkpoints() {
        out.push_str(&format!("{},{},{}\n", c.round, c.train_error, c.bound));
    }
    write_out(None, &out)?;
    eprintln!(
        "kept {} of {} classifiers",
        model.classifiers().len(),
        model.rounds_run()
    );
    Ok(())
}

fn split_triplets(
    triplets: &Path,
    labels: &Path,
    test_fraction: f64,
    seed: u64,
    outs: [&Path; 4],
) -> Result<()> {
    let ts = TripletStore::load(triplets)?;
    let lines: Vec<String> = read(labels)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(str::to_owned)
        .collect();
    if lines.len() != ts.n() {
        return Err(Error::Mismatch(format!(
            "{} label rows for {} examples",
            lines.len(),
            ts.n()
        )));
    }
    let (train_ids, test_ids) = split_indices(ts.n(), test_fraction, seed)?;
    let (train_store, test_triplets) = ts.partition(&train_ids, &test_ids)?;
    let test = TestTripletSet::from_triplets(test_ids.len(), train_ids.len(), &test_triplets)?;
    train_store.save(outs[0])?;
    test.save(outs[1])?;
    let pick = |ids: &[usize], primary: bool| -> String {
        ids.iter()
            .map(|&i| {
                let field = lines[i].split(',').next().unwrap_or("");
                let f = if primary { field.split('|').next().unwrap_or("") } else { field };
                format!("{f}\n")
            })
            .collect()
    };
    // training labels keep only the primary label; test labels keep the full set
    write_file(outs[2], &pick(&train_ids, true))?;
    write_file(outs[3], &pick(&test_ids, false))?;
    eprintln!(
        "train: {} examples, {} triplets; test: {} examples, {} triplets",
        train_ids.len(),
        train_store.len(),
        test_ids.len(),
        test.len()
    );
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenMoons { n, noise, seed, out } => moons(n, noise, seed)?.save_csv(&out),
        Command::Split {
            data,
            test_fraction,
            seed,
            train_out,
            test_out,
        } => {
            let ds = load_csv(&data, false)?;
            let (a, b) = split(&ds, test_fraction, seed)?;
            a.save_csv(&train_out)?;
            b.save_csv(&test_out)
        }
        Command::GenTriplets(a) => gen_triplets(&a),
        Command::GenTripletsRatings {
            ratings,
            candidates,
            seed,
            out,
        } => {
            let r = Ratings::load(&ratings)?;
            let ts = generate_from_ratings(&r, candidates, seed)?;
            eprintln!("wrote {} triplets over {} items", ts.len(), ts.n());
            ts.save(&out)
        }
        Command::GenRatings {
            items,
            users,
            genres,
            density,
            seed,
            ratings_out,
            items_out,
        } => {
            let fx = synthetic_ratings(items, users, genres, density, seed)?;
            write_file(&ratings_out, &fx.ratings_text())?;
            write_file(&items_out, &fx.items_text())
        }
        Command::SplitTriplets {
            triplets,
            labels,
            test_fraction,
            seed,
            train_out,
            test_out,
            train_labels_out,
            test_labels_out,
        } => split_triplets(
            &triplets,
            &labels,
            test_fraction,
            seed,
            [&train_out, &test_out, &train_labels_out, &test_labels_out],
        ),
        Command::AddNoise {
            triplets,
            rate,
            seed,
            out,
        } => TripletStore::load(&triplets)?.add_noise(rate, seed)?.save(&out),
        Command::Train(a) => train_cmd(&a),
        Command::Predict {
            model,
            test_triplets,
            policy,
            seed,
            out,
        } => {
            let model = StrongModel::load(&model)?;
            let test = TestTripletSet::load(&test_triplets)?;
            let (preds, labels) = eval::predict_all(&model, &test, policy, seed)?;
            write_out(out.as_deref(), &predictions_csv(&model, &preds, &labels))
        }
        Command::Evaluate {
            model,
            test_triplets,
            labels,
            policy,
            seed,
            k,
            json,
        } => {
            let model = StrongModel::load(&model)?;
            let test = TestTripletSet::load(&test_triplets)?;
            let truth = load_label_sets(&labels, model.dict())?;
            let report = eval::evaluate(&model, &test, &truth, policy, seed, k)?;
            write_out(None, &report.to_key_values())?;
            if let Some(p) = json {
                let mut f = std::fs::OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(&p)
                    .map_err(|e| Error::io(&p, e))?;
                f.write_all(report.to_json_line().as_bytes()).map_err(|e| Error::io(&p, e))?;
            }
            Ok(())
        }
        Command::Experiment { spec, out } => {
            let spec = ExperimentSpec::load(&spec)?;
            let ds = spec.load_dataset()?;
            let rows = experiment::run(&spec, &ds)?;
            write_out(out.as_deref().or(spec.output.as_deref()), &experiment::to_csv(&rows))
        }
        Command::Bound {
            stats,
            num_labels,
            n,
            theta,
        } => {
            let stats = parse_stats_csv(&read(&stats)?)?;
            let z: Vec<f64> = stats.iter().map(|s| s.z).collect();
            let mut out = format!("training_error_bound={}\n", bounds::training_error_bound(num_labels, &z));
            for t in theta {
                out.push_str(&format!(
                    "margin_bound[{t}]={}\n",
                    bounds::empirical_margin_bound(num_labels, &stats, n, t)
                ));
            }
            write_out(None, &out)
        }
        Command::SimulateAbstention { n, p, c, trials, seed } => {
            check_probability("p", p)?;
            let closed = bounds::abstention_bound(n, p, c as f64);
            let est = bounds::simulate_abstention(n, p, c, trials, seed)?;
            write_out(
                None,
                &format!(
                    "bound={closed}\nestimate={}\nstderr={}\n",
                    est.mean, est.stderr
                ),
            )
        }
        Command::BoundSurface {
            n,
            k_grid,
            beta_grid,
            out,
        } => {
            let (rows, skipped) = bounds::bound_surface(n, &parse_grid(&k_grid)?, &parse_grid(&beta_grid)?)?;
            for (k, beta) in skipped {
                eprintln!("skipped k={k} beta={beta}: p > 1");
            }
            write_out(out.as_deref(), &bounds::surface_csv(&rows))
        }
        Command::BoundLimit { k, beta, n } => {
            let limit = bounds::abstention_limit(k, beta)?;
            let mut out = format!("limit={limit}\nvalue={}\n", limit.value());
            if let Some(n) = n {
                out.push_str(&format!("finite_n_value={}\n", bounds::regime_bound(n, k, beta)));
            }
            write_out(None, &out)
        }
    }
}

/// Entry point used by the binary; returns the process exit status.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
