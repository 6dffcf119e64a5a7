use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use phaselab::dynamics::{simulate, simulate_until};
use phaselab::empirical::{
    checkpoint_table, data_root, load_cifar10, load_named, summarize_phases, summarize_transfer, train_f0, transfer_curve,
    Loss, ProbeConfig, RealDataset, Split, TrainConfig,
};
use phaselab::model::{Init, ModelParams};
use phaselab::oracle::compare_with_reduced;
use phaselab::plot::{render_svg, PlotSpec};
use phaselab::report::{certificates_table, oracle_table, phases_table, simulate_table, sweep_table};
use phaselab::table::{Cell, Table};
use phaselab::theory::{
    certify_crossing_window, certify_stage_bounds, crossing_suite, detect_phases, init_concentration_mc, loss_curve,
    saturation_check, series_residuals, tail_check, BoundCertificate, PhaseVerdict, Regime, SweepPoint,
};

#[derive(Parser, Debug)]
#[command(name = "phaselab", version, about = "Reconstruction-loss phases of softmax classifiers")]
pub struct Cli {
    /// Output directory (default `out`, or $PHASELAB_OUT)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// `key = value` file; command-line flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Svg,
    Both,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Reduced dynamics trajectory with per-step reconstruction errors
    #[command(args_override_self = true)]
    Simulate {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, default_value_t = 100_000)]
        t_max: usize,
        /// Keep every n-th iteration in the output
        #[arg(long, default_value_t = 1)]
        stride: usize,
    },
    /// Full weight-matrix gradient descent against the reduced dynamics
    #[command(args_override_self = true)]
    OracleCheck {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Bound certificates
    #[command(args_override_self = true)]
    Certify {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        #[arg(long, value_delimiter = ',', default_values_t = [100usize, 1000, 10000])]
        l_sweep: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [2.0f64, 3.0, 4.0])]
        k_sweep: Vec<f64>,
        #[arg(long, default_value_t = 2.0)]
        cf: f64,
    },
    /// Phase detection on a trajectory run to saturation
    #[command(args_override_self = true)]
    Phases {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, default_value_t = 50_000_000)]
        max_steps: usize,
        /// Curve thinning; 0 keeps about 10^4 rows
        #[arg(long, default_value_t = 0)]
        stride: usize,
    },
    /// Train F0 and record checkpoint metrics
    #[command(args_override_self = true)]
    Empirical {
        #[arg(long, default_value = "fashion")]
        dataset: String,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Probe F0 checkpoints on a second dataset
    #[command(args_override_self = true)]
    Transfer {
        #[arg(long, default_value = "fashion")]
        source: String,
        #[arg(long, default_value = "mnist")]
        probe: String,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long, default_value_t = 0.003)]
        probe_lr: f64,
        #[arg(long, default_value_t = 20)]
        probe_epochs: usize,
        /// Feed unstandardized outputs to the probe
        #[arg(long)]
        raw_probe: bool,
    },
    /// Random-initialization concentration and Gaussian tail checks
    #[command(args_override_self = true)]
    Concentration {
        #[arg(long, default_value_t = 100)]
        l: usize,
        #[arg(long, default_value_t = 10_000)]
        d: usize,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Render a CSV table as an SVG line chart
    #[command(args_override_self = true)]
    Plot {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "t")]
        x: String,
        #[arg(long, value_delimiter = ',', required = true)]
        columns: Vec<String>,
        /// Defaults to the input path with an .svg extension
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, default_value = "")]
        title: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    All,
    Stages,
    Saturation,
    Crossing,
    Series,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Deterministic,
    Random,
}

#[derive(Args, Debug, Clone)]
pub struct ProblemArgs {
    /// Sample count; defaults to 2l
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    pub d: usize,
    #[arg(long, default_value_t = 100)]
    pub l: usize,
    #[arg(long, default_value_t = 2.0)]
    pub k: f64,
    #[arg(long, default_value_t = 0.01)]
    pub lambda: f64,
    #[arg(long, value_enum, default_value_t = InitArg::Deterministic)]
    pub init: InitArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl ProblemArgs {
    fn params(&self) -> Result<ModelParams> {
        let p = ModelParams::new(self.n.unwrap_or(2 * self.l), self.d, self.l, self.k, self.lambda)?;
        Ok(match self.init {
            InitArg::Deterministic => p,
            InitArg::Random => p.with_init(Init::Random { seed: self.seed }),
        })
    }
}

#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// Training (and test) subset size
    #[arg(long = "samples", default_value_t = 10_000)]
    pub samples: usize,
    /// Defaults to $PHASELAB_DATA or ./data
    #[arg(long)]
    pub data_root: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    Ce,
    Hinge,
}

#[derive(Args, Debug, Clone)]
pub struct TrainArgs {
    #[arg(long, default_value_t = 0.002)]
    pub lr: f64,
    #[arg(long, default_value_t = 128)]
    pub batch: usize,
    #[arg(long, default_value_t = 256)]
    pub epochs: usize,
    #[arg(long, value_enum, default_value_t = LossArg::Ce)]
    pub loss: LossArg,
    #[arg(long, default_value_t = 0)]
    pub train_seed: u64,
    #[arg(long)]
    pub no_bias: bool,
}

impl TrainArgs {
    fn config(&self) -> Result<TrainConfig> {
        if !(self.lr >= 0.0) || self.batch == 0 || self.epochs == 0 {
            bail!("lr must be non-negative, batch and epochs positive");
        }
        Ok(TrainConfig {
            lr: self.lr,
            batch: self.batch,
            epochs: self.epochs,
            loss: match self.loss {
                LossArg::Ce => Loss::CrossEntropy,
                LossArg::Hinge => Loss::Hinge,
            },
            seed: self.train_seed,
            bias: !self.no_bias,
            ..TrainConfig::default()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
}

impl From<bool> for Status {
    fn from(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

struct Sink<'a> {
    dir: &'a Path,
    format: Format,
}

impl Sink<'_> {
    fn write(&self, stem: &str, table: &Table, plot: Option<PlotSpec>) -> Result<()> {
        fs::create_dir_all(self.dir).with_context(|| format!("creating {}", self.dir.display()))?;
        if matches!(self.format, Format::Csv | Format::Both) || plot.is_none() {
            let p = self.dir.join(format!("{stem}.csv"));
            table.save_csv(&p).with_context(|| format!("writing {}", p.display()))?;
        }
        if let (Some(spec), true) = (plot, matches!(self.format, Format::Svg | Format::Both)) {
            let p = self.dir.join(format!("{stem}.svg"));
            fs::write(&p, render_svg(table, &spec)?).with_context(|| format!("writing {}", p.display()))?;
        }
        Ok(())
    }
}

fn load_dataset(root: &Path, name: &str, split: Split, n: usize) -> Result<RealDataset> {
    let ds = if name == "cifar10" {
        let dir = root.join("cifar10");
        let files: Vec<PathBuf> = match split {
            Split::Train => (1..=5).map(|i| dir.join(format!("data_batch_{i}.bin"))).collect(),
            Split::Test => vec![dir.join("test_batch.bin")],
        };
        let mut ds = load_cifar10(&files)?;
        ds.split = split;
        ds
    } else {
        load_named(root, name, split)?
    };
    Ok(ds.subset(n))
}

fn pair(data: &DataArgs, name: &str) -> Result<(RealDataset, RealDataset)> {
    let root = data.data_root.clone().unwrap_or_else(data_root);
    Ok((load_dataset(&root, name, Split::Train, data.samples)?, load_dataset(&root, name, Split::Test, data.samples)?))
}

pub fn run(cli: &Cli, out: &Path) -> Result<Status> {
    let sink = Sink { dir: out, format: cli.format };
    match &cli.command {
        Command::Simulate { problem, t_max, stride } => {
            if *t_max == 0 {
                bail!("--t-max must be at least 1");
            }
            let params = problem.params()?;
            let tr = simulate(&params, *t_max);
            let table = simulate_table(&tr, *stride);
            let r = table.column("total_paper_gj")?;
            let (imin, rmin) = r.iter().enumerate().fold((0, f64::INFINITY), |b, (i, &v)| if v < b.1 { (i, v) } else { b });
            let tmin = table.column("t")?[imin];
            sink.write(
                "simulate",
                &table,
                Some(PlotSpec::new("t", &["total_paper_gj", "total_exact_opt", "q_self_weak"]).title("reduced dynamics")),
            )?;
            println!(
                "simulate: {} rows, R(0) = {:.6e}, min R = {rmin:.6e} at t = {tmin}, R(end) = {:.6e}",
                table.len(),
                r[0],
                r[r.len() - 1]
            );
            Ok(Status::Pass)
        }
        Command::OracleCheck { problem, steps, tol } => {
            let params = problem.params()?;
            let cmp = compare_with_reduced(&params, *steps)?;
            sink.write("oracle", &oracle_table(&cmp), None)?;
            let ok = cmp.max_dev <= *tol;
            println!(
                "oracle-check: {} max deviation {:e} over {} steps (tol {:e}), block spread {:e}",
                if ok { "PASS" } else { "FAIL" },
                cmp.max_dev,
                steps,
                tol,
                cmp.max_spread
            );
            Ok(ok.into())
        }
        Command::Certify { suite, l_sweep, k_sweep, cf } => {
            if !(*cf > 1.0) {
                bail!("--cf must exceed 1");
            }
            let mut certs = Vec::new();
            if matches!(suite, Suite::All | Suite::Stages) {
                certs.extend(certify_stage_bounds(l_sweep, k_sweep, *cf));
            }
            if matches!(suite, Suite::All | Suite::Saturation) {
                certs.push(saturation_certificate(l_sweep, k_sweep));
            }
            if matches!(suite, Suite::All | Suite::Crossing) {
                certs.push(certify_crossing_window(&crossing_suite(), |p| 2.0 / p.l as f64).0);
            }
            if matches!(suite, Suite::All | Suite::Series) {
                certs.push(series_certificate());
            }
            sink.write("certificates", &certificates_table(&certs), None)?;
            sink.write("certificate_points", &sweep_table(&certs), None)?;
            let failed: Vec<&str> = certs.iter().filter(|c| !c.pass).map(|c| c.claim.as_str()).collect();
            println!("certify: {}/{} certificates pass", certs.len() - failed.len(), certs.len());
            for f in &failed {
                println!("  FAIL {f}");
            }
            Ok(failed.is_empty().into())
        }
        Command::Phases { problem, max_steps, stride } => {
            let params = problem.params()?;
            let tr = simulate_until(&params, *max_steps, |_, q| q.q_self_weak >= 0.99);
            let rep = detect_phases(&tr, &params)?;
            sink.write("phases", &phases_table(&[(params, rep)]), None)?;
            let r = loss_curve(&tr);
            let stride = if *stride == 0 { (tr.len() / 10_000).max(1) } else { *stride };
            let mut curve = Table::new(["t", "f", "u", "q_self_weak", "total_paper_gj"]);
            for (i, (s, q)) in tr.states.iter().zip(&tr.probs).enumerate() {
                if i % stride == 0 || i + 1 == tr.len() {
                    curve.push(vec![Cell::from(s.t), s.f.into(), s.u.into(), q.q_self_weak.into(), r[i].into()])?;
                }
            }
            sink.write("phase_curve", &curve, Some(PlotSpec::new("t", &["total_paper_gj", "q_self_weak"]).title("phases")))?;
            println!(
                "phases: {:?}; R(0) = {:.6e}, min {:.6e} at t = {}, final {:.6e} at t = {}",
                rep.verdict, rep.r_initial, rep.r_min, rep.t_min_error, rep.r_final, rep.t_final
            );
            Ok((rep.verdict == PhaseVerdict::ThreePhases).into())
        }
        Command::Empirical { dataset, data, train } => {
            let cfg = train.config()?;
            let (tr, te) = pair(data, dataset)?;
            let ck = train_f0(&tr, &te, &cfg);
            let table = checkpoint_table(&ck);
            sink.write(
                "empirical",
                &table,
                Some(PlotSpec::new("t", &["test_acc", "recon_loss"]).title(&format!("F0 on {dataset}"))),
            )?;
            let s = summarize_phases(&ck);
            let ok = s.interior_minimum && s.accuracy_monotone(0.02);
            println!(
                "empirical: {} min recon {:.4} at t = {} (interior: {}), largest accuracy drop {:.4}",
                if ok { "PASS" } else { "FAIL" },
                s.min_recon,
                s.t_min_recon,
                s.interior_minimum,
                s.max_accuracy_drop
            );
            Ok(ok.into())
        }
        Command::Transfer { source, probe, data, train, probe_lr, probe_epochs, raw_probe } => {
            let cfg = train.config()?;
            let pcfg = ProbeConfig { lr: *probe_lr, epochs: *probe_epochs, standardize: !raw_probe, ..ProbeConfig::default() };
            let (str_, ste) = pair(data, source)?;
            let (ptr, pte) = pair(data, probe)?;
            let ck = transfer_curve(&str_, &ste, &ptr, &pte, &cfg, &pcfg)?;
            sink.write(
                "transfer",
                &checkpoint_table(&ck),
                Some(PlotSpec::new("t", &["test_acc", "recon_loss", "probe_acc"]).title(&format!("{source} -> {probe}"))),
            )?;
            let s = summarize_transfer(&ck).context("no checkpoints")?;
            let ok = s.early_stop(0.005);
            println!(
                "transfer: {} probe peak {:.4} at t = {}, source accuracy there {:.4} (max {:.4})",
                if ok { "PASS" } else { "FAIL" },
                s.best_probe_acc,
                s.best_probe_t,
                s.source_acc_at_best,
                s.max_source_acc
            );
            Ok(ok.into())
        }
        Command::Concentration { l, d, trials, seed } => {
            let params = ModelParams::new(2 * l, *d, *l, 2.0, 0.01)?;
            if *trials < 10_000 {
                bail!("--trials must be at least 10000");
            }
            let r = init_concentration_mc(&params, *trials, *seed);
            let mut t = Table::new(["l", "d", "trials", "band", "fraction", "floor", "variance", "variance_expected", "fraction_sqrt_band"]);
            t.push(vec![
                Cell::from(*l),
                (*d).into(),
                (*trials).into(),
                r.band.into(),
                r.fraction.into(),
                r.floor.into(),
                r.variance.into(),
                (1.0 / *l as f64).into(),
                r.fraction_sqrt_band.into(),
            ])?;
            sink.write("concentration", &t, None)?;
            sink.write("tail_bounds", &tail_table(), None)?;
            let ok = r.fraction_pass() && r.variance_pass();
            println!(
                "concentration: {} fraction {:.5} (floor {:.4}), Var(S_y) {:.5} vs {:.5}",
                if ok { "PASS" } else { "FAIL" },
                r.fraction,
                r.floor,
                r.variance,
                1.0 / *l as f64
            );
            Ok(ok.into())
        }
        Command::Plot { input, x, columns, output, title } => {
            let table = Table::load_csv(input).with_context(|| format!("reading {}", input.display()))?;
            let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
            let svg = render_svg(&table, &PlotSpec::new(x, &cols).title(title))?;
            let path = output.clone().unwrap_or_else(|| input.with_extension("svg"));
            fs::write(&path, svg).with_context(|| format!("writing {}", path.display()))?;
            println!("plot: wrote {}", path.display());
            Ok(Status::Pass)
        }
    }
}

fn saturation_certificate(l_sweep: &[usize], k_sweep: &[f64]) -> BoundCertificate {
    let mut sweep = Vec::new();
    let mut worst: f64 = 0.0;
    for &l in l_sweep {
        for &k in k_sweep {
            let s = saturation_check(l, k);
            let params = ModelParams::new(2 * l, l, l, k, 1.0).expect("valid");
            worst = worst.max((s.r_gj / s.predicted_gj - 1.0).abs());
            worst = worst.max((s.r_opt / s.predicted_opt - 1.0).abs());
            sweep.push(SweepPoint { params, f: s.f, measured: s.r_gj, predicted_scale: s.predicted_gj });
        }
    }
    BoundCertificate {
        claim: "saturation: R_gj = (k-1)^2/l and R_opt = (k-1)^2/(2l)".into(),
        sweep,
        fitted_constant: 1.0,
        max_ratio_deviation: worst,
        band: 0.01,
        pass: worst <= 0.01,
        note: String::new(),
    }
}

fn series_certificate() -> BoundCertificate {
    let (fl, ul, k) = (2.0, 1.0, 2.0);
    let at = |l: usize| series_residuals(fl / l as f64, ul / l as f64, k, l, Regime::Small).expect("small regime");
    let (a, b) = (at(1000), at(4000));
    let mut worst: f64 = 0.0;
    let mut notes = Vec::new();
    for i in 0..3 {
        let shrink = a[i].residual_ratio / b[i].residual_ratio;
        worst = worst.max((shrink / 4.0 - 1.0).abs());
        notes.push(format!("{} x{shrink:.3}", a[i].expansion.id()));
    }
    BoundCertificate {
        claim: "series: residual ratio shrinks 4x when l quadruples".into(),
        sweep: Vec::new(),
        fitted_constant: 4.0,
        max_ratio_deviation: worst,
        band: 0.3,
        pass: worst <= 0.3,
        note: notes.join("; "),
    }
}

fn tail_table() -> Table {
    let mut t = Table::new(["a", "sigma", "exact", "lower", "upper", "lower_holds", "half_lower_holds", "upper_holds"]);
    for sigma in [0.1, 0.5, 1.0, 2.0, 10.0] {
        for a in [0.01, 0.1, 0.5, 1.0, 2.0, 3.0] {
            let c = tail_check(a, sigma);
            t.push(vec![
                Cell::from(a),
                sigma.into(),
                c.exact.into(),
                c.lower.into(),
                c.upper.into(),
                c.lower_holds().into(),
                c.half_lower_holds().into(),
                c.upper_holds().into(),
            ])
            .expect("fixed width");
        }
    }
    t
}
