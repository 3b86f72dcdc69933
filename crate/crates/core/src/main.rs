use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qabpnp::denoise::{ProfileRule, ThresholdProfile};
use qabpnp::harness::config::KeyValues;
use qabpnp::harness::{
    ablation_csv, caption_defaults, convergence_csv, degrade, mode_label, results_csv,
    run_experiment, run_method, run_name, run_omp_ablation, trace_run, BlurSpec, ExperimentSpec,
    ImageSource, Method, MethodConfigs, QabSettings, TvSettings, DEFAULT_REALIZATIONS,
};
use qabpnp::metrics::MetricReport;
use qabpnp::par::Execution;
use qabpnp::{io, Error, Result};

/// Poisson deconvolution with a quantum adaptive basis denoiser.
#[derive(Parser, Debug)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic test image.
    Synth(Flags),
    /// Blur and Poisson-degrade an image at one SNR.
    Degrade(Flags),
    /// Restore a degraded observation.
    Restore(Flags),
    /// Score methods over seeded noise realizations.
    Bench(Flags),
    /// Time cutoff matching pursuit against full projection.
    AblateOmp(Flags),
    /// Write the log-RMSE convergence curve of one run.
    Trace(Flags),
}

/// Every flag can also be set as `key = value` in the `--config` file; the command line wins.
#[derive(Args, Debug, Default)]
struct Flags {
    /// Flat key-value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input image (.pgm or .csv); a synthetic image is used when absent.
    #[arg(long)]
    image: Option<PathBuf>,
    /// Synthetic kind: piecewise or textured.
    #[arg(long)]
    synthetic: Option<String>,
    /// Side of the synthetic image.
    #[arg(long)]
    n: Option<usize>,
    /// Clean image for scoring a `restore`.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Target SNR(s) in dB, comma-separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    snr: Option<Vec<f64>>,
    #[arg(long)]
    realizations: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// qab, tv, or both comma-separated.
    #[arg(long, value_delimiter = ',')]
    method: Option<Vec<String>>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Energy cutoff(s); a list only for ablate-omp.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    energy: Option<Vec<f64>>,
    #[arg(long)]
    lambda0: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// ħ²/2m.
    #[arg(long)]
    planck: Option<f64>,
    /// Smoothing of the potential.
    #[arg(long)]
    sigma_qab: Option<f64>,
    /// Taper plateau (needs --rho).
    #[arg(long)]
    s: Option<usize>,
    /// Taper ramp length (needs --s).
    #[arg(long)]
    rho: Option<usize>,
    /// Taper rule when --s/--rho are absent: half or hard.
    #[arg(long)]
    profile: Option<String>,
    /// Outer ADMM iterations.
    #[arg(long)]
    iters: Option<usize>,
    /// Project onto the complete basis instead of matching pursuit.
    #[arg(long)]
    no_omp: bool,
    #[arg(long)]
    tv_weight: Option<f64>,
    #[arg(long)]
    blur_size: Option<usize>,
    #[arg(long)]
    blur_sigma: Option<f64>,
    /// Grid-search unset hyperparameters on a held-out realization.
    #[arg(long)]
    tune: bool,
    /// Run realizations one at a time.
    #[arg(long)]
    sequential: bool,
}

const KNOWN_KEYS: &[&str] = &[
    "image", "synthetic", "n", "reference", "snr", "realizations", "seed", "method", "out", "energy", "lambda0",
    "gamma", "planck", "sigma-qab", "s", "rho", "profile", "iters", "no-omp", "tv-weight", "blur-size",
    "blur-sigma", "tune", "sequential",
];

macro_rules! fill {
    ($flags:ident, $file:ident; $($field:ident => $key:literal),* $(,)?) => {
        $( if $flags.$field.is_none() { $flags.$field = $file.get($key)?; } )*
    };
}

impl Flags {
    /// Fills unset flags from the config file.
    fn merged(mut self) -> Result<Self> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let file = KeyValues::load(&path)?;
        file.ensure_known(KNOWN_KEYS)?;
        fill!(self, file;
            image => "image", synthetic => "synthetic", n => "n", reference => "reference",
            realizations => "realizations", seed => "seed", out => "out", lambda0 => "lambda0",
            gamma => "gamma", planck => "planck", sigma_qab => "sigma-qab", s => "s", rho => "rho",
            profile => "profile", iters => "iters", tv_weight => "tv-weight", blur_size => "blur-size",
            blur_sigma => "blur-sigma",
        );
        if self.snr.is_none() {
            self.snr = file.get_list("snr")?;
        }
        if self.method.is_none() {
            self.method = file.get_list("method")?;
        }
        if self.energy.is_none() {
            self.energy = file.get_list("energy")?;
        }
        self.no_omp |= file.get("no-omp")?.unwrap_or(false);
        self.tune |= file.get("tune")?.unwrap_or(false);
        self.sequential |= file.get("sequential")?.unwrap_or(false);
        Ok(self)
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(1)
    }

    fn source(&self) -> Result<ImageSource> {
        match (&self.image, &self.synthetic) {
            (Some(_), Some(_)) => Err(Error::Config("give either --image or --synthetic, not both".into())),
            (Some(p), None) => Ok(ImageSource::File(p.clone())),
            (None, kind) => Ok(ImageSource::Synthetic {
                kind: kind.as_deref().unwrap_or("piecewise").parse()?,
                n: self.n.unwrap_or(64),
                seed: self.seed(),
            }),
        }
    }

    fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    fn snrs(&self) -> Vec<f64> {
        self.snr.clone().unwrap_or_else(|| vec![15.0])
    }

    fn single_snr(&self) -> Result<f64> {
        match self.snrs().as_slice() {
            [s] => Ok(*s),
            _ => Err(Error::Config("this command takes exactly one --snr".into())),
        }
    }

    fn methods(&self) -> Result<Vec<Method>> {
        match &self.method {
            None => Ok(vec![Method::Qab, Method::Tv]),
            Some(list) => list.iter().map(|m| m.parse()).collect(),
        }
    }

    fn single_method(&self) -> Result<Method> {
        match self.methods()?.as_slice() {
            [m] => Ok(*m),
            _ if self.method.is_none() => Ok(Method::Qab),
            _ => Err(Error::Config("this command takes exactly one --method".into())),
        }
    }

    fn single_energy(&self) -> Result<Option<f64>> {
        match self.energy.as_deref() {
            None => Ok(None),
            Some([e]) => Ok(Some(*e)),
            Some(_) => Err(Error::Config("only ablate-omp accepts several --energy values".into())),
        }
    }

    fn profile(&self) -> Result<Option<ProfileRule>> {
        match (self.s, self.rho, self.profile.as_deref()) {
            (Some(s), Some(rho), None) => Ok(Some(ProfileRule::Fixed(ThresholdProfile::new(s, rho)?))),
            (None, None, None) => Ok(None),
            (None, None, Some("half")) => Ok(Some(ProfileRule::Half)),
            (None, None, Some("hard")) => Ok(Some(ProfileRule::Hard)),
            (None, None, Some(other)) => Err(Error::Config(format!("unknown profile {other:?}"))),
            _ => Err(Error::Config("give --s and --rho together, without --profile".into())),
        }
    }

    fn qab(&self, energy: Option<f64>) -> Result<QabSettings> {
        Ok(QabSettings {
            energy,
            lambda0: self.lambda0,
            gamma: self.gamma,
            planck: self.planck,
            sigma_qab: self.sigma_qab,
            profile: self.profile()?,
            iters: self.iters,
            no_omp: self.no_omp,
        })
    }

    fn tv(&self) -> TvSettings {
        TvSettings {
            tv_weight: self.tv_weight,
            lambda0: self.lambda0,
            gamma: self.gamma,
            iters: self.iters,
        }
    }

    fn blur(&self) -> BlurSpec {
        let d = BlurSpec::default();
        BlurSpec {
            size: self.blur_size.unwrap_or(d.size),
            sigma: self.blur_sigma.unwrap_or(d.sigma),
        }
    }

    fn spec(&self, energy: Option<f64>) -> Result<ExperimentSpec> {
        Ok(ExperimentSpec {
            source: self.source()?,
            blur: self.blur(),
            snrs: self.snrs(),
            realizations: self.realizations.unwrap_or(DEFAULT_REALIZATIONS),
            seed: self.seed(),
            methods: self.methods()?,
            qab: self.qab(energy)?,
            tv: self.tv(),
            tune: self.tune,
            execution: if self.sequential {
                Execution::Sequential
            } else {
                Execution::Parallel
            },
            out_dir: Some(self.out_dir()),
        })
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Exit status on success: 0, or 2 when some cells failed.
fn run(command: Command) -> Result<u8> {
    match command {
        Command::Synth(f) => {
            let f = f.merged()?;
            let img = f.source()?.load()?;
            let dir = f.out_dir();
            create_dir(&dir)?;
            io::save(&img, &dir.join("synthetic.csv"))?;
            io::save(&img, &dir.join("synthetic.pgm"))?;
            println!("wrote {}x{} image to {}", img.side(), img.side(), dir.display());
            Ok(0)
        }
        Command::Degrade(f) => {
            let f = f.merged()?;
            let clean = f.source()?.load()?;
            let snr = f.single_snr()?;
            let op = f.blur().operator(clean.side())?;
            let d = degrade(&clean, &op, snr, f.seed())?;
            let dir = f.out_dir();
            create_dir(&dir)?;
            io::save(&clean, &dir.join("clean.csv"))?;
            io::save(&d.y, &dir.join("observed.csv"))?;
            io::save(&d.y.map(|v| v.min(1.0)), &dir.join("observed.pgm"))?;
            let m = MetricReport::compute(&clean, &d.y)?;
            println!(
                "target {snr} dB, measured {:.3} dB, photon scale {:.6}, PSNR {:.3} dB, SSIM {:.4}",
                d.measured_snr, d.scale, m.psnr, m.ssim
            );
            Ok(0)
        }
        Command::Restore(f) => {
            let f = f.merged()?;
            let Some(path) = f.image.clone() else {
                return Err(Error::Config("restore needs --image <observation>".into()));
            };
            let y = io::load(&path)?;
            let method = f.single_method()?;
            let snr = f.single_snr()?;
            let op = f.blur().operator(y.side())?;
            let reference = f.reference.as_deref().map(io::load).transpose()?;
            let configs = MethodConfigs {
                qab: f.qab(f.single_energy()?)?.resolve(snr),
                tv: f.tv().resolve(),
            };
            let (x, trace) = match (method, &reference) {
                (_, Some(r)) => {
                    let run = run_method(method, &configs, &y, &op, r)?;
                    println!("PSNR {:.3} dB, SSIM {:.4}", run.metrics.psnr, run.metrics.ssim);
                    (run.restored, run.trace)
                }
                (Method::Qab, None) => qabpnp::admm::run_qab_pnp(&y, &op, &configs.qab, None)?,
                (Method::Tv, None) => qabpnp::tv::run_tv_admm(&y, &op, &configs.tv, None)?,
            };
            let dir = f.out_dir();
            create_dir(&dir)?;
            io::save(&x, &dir.join(format!("restored_{}.csv", method.label())))?;
            io::save(&x.map(|v| v.min(1.0)), &dir.join(format!("restored_{}.pgm", method.label())))?;
            write_text(&dir.join(format!("trace_{}.csv", method.label())), &trace.to_csv())?;
            println!("wrote {}", dir.display());
            Ok(0)
        }
        Command::Bench(f) => {
            let f = f.merged()?;
            let spec = f.spec(f.single_energy()?)?;
            let report = run_experiment(&spec)?;
            print!("{}", results_csv(&report.rows));
            let failed = report.rows.iter().any(|r| r.completed < r.requested);
            Ok(if failed { 2 } else { 0 })
        }
        Command::AblateOmp(f) => {
            let f = f.merged()?;
            let spec = f.spec(None)?;
            let cutoffs = match &f.energy {
                Some(list) => list.clone(),
                None => vec![caption_defaults(spec.snrs[0]).energy],
            };
            let rows = run_omp_ablation(&spec, &cutoffs)?;
            print!("{}", ablation_csv(&rows));
            for r in &rows {
                println!("{} E={} {:.1} ms", mode_label(r.mode), r.energy, r.mean_millis);
            }
            Ok(if rows.iter().any(|r| !r.errors.is_empty()) { 2 } else { 0 })
        }
        Command::Trace(f) => {
            let f = f.merged()?;
            let method = f.single_method()?;
            let mut spec = f.spec(f.single_energy()?)?;
            spec.snrs = vec![f.single_snr()?];
            let t = trace_run(&spec, method)?;
            let dir = f.out_dir();
            create_dir(&dir)?;
            let path = dir.join(format!("trace_{}.csv", run_name(method, spec.snrs[0], 0)));
            write_text(&path, &convergence_csv(&t.curve))?;
            println!("wrote {}", path.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            let config = e.is_config() || matches!(e, Error::Io { .. } | Error::Format { .. });
            ExitCode::from(if config { 1 } else { 2 })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_fills_unset_flags_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        fs::write(&path, "snr = 10,20\nseed = 5\nno-omp = true\nlambda0 = 2\n").unwrap();
        let cli = Cli::try_parse_from(["qabpnp", "bench", "--config", path.to_str().unwrap(), "--seed", "9"]).unwrap();
        let Command::Bench(f) = cli.command else { panic!() };
        let f = f.merged().unwrap();
        assert_eq!(f.seed, Some(9));
        assert_eq!(f.snr, Some(vec![10.0, 20.0]));
        assert!(f.no_omp);
        assert_eq!(f.lambda0, Some(2.0));
    }

    #[test]
    fn unknown_config_key_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.conf");
        fs::write(&path, "speed = 3\n").unwrap();
        let f = Flags {
            config: Some(path),
            ..Default::default()
        };
        assert!(f.merged().unwrap_err().is_config());
    }

    #[test]
    fn profile_flags() {
        let f = Flags {
            s: Some(10),
            rho: Some(5),
            ..Default::default()
        };
        assert_eq!(f.profile().unwrap(), Some(ProfileRule::Fixed(ThresholdProfile { s: 10, rho: 5 })));
        let f = Flags {
            s: Some(10),
            ..Default::default()
        };
        assert!(f.profile().is_err());
        let f = Flags {
            profile: Some("hard".into()),
            ..Default::default()
        };
        assert_eq!(f.profile().unwrap(), Some(ProfileRule::Hard));
    }

    #[test]
    fn single_value_commands() {
        let f = Flags {
            snr: Some(vec![10.0, 15.0]),
            energy: Some(vec![4.0, 5.0]),
            ..Default::default()
        };
        assert!(f.single_snr().is_err());
        assert!(f.single_energy().is_err());
        assert_eq!(Flags::default().single_method().unwrap(), Method::Qab);
    }
}
