//! `percal` command-line tool.
//!
//! Tables go to stdout as CSV, record streams as JSON lines, diagnostics to
//! stderr.

use std::fs;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use nalgebra::Point2;
use serde::Deserialize;

use percal::camera::{
    horizon_edge_intersections_for_aspect, unproject_to_ground, CameraCalibration, HorizonFeature,
    ImageDims, DEFAULT_CAMERA_HEIGHT_M,
};
use percal::codec::{self, DecodeRule, LabelDistribution, ParamKind};
use percal::dataset::{build_dataset, read_jsonl, read_manifest, SplitFractions};
use percal::perceptual::{
    compensate_placement, load_study, sample_distortion, sample_valid_distortion, save_study,
    synthetic_study, ActiveParams, CompensationRule, SensitivityModel, SensitivityQuery, DEFAULT_K,
};
use percal::retrieval::RetrievalIndex;
use percal::sampling::{seeded_rng, SamplingConfig};
use percal::summary::{summarize_errors, EstimatePair};
use percal::synthetic::textured_panorama;

/// Environment variable naming the default sampling config file.
const CONFIG_ENV: &str = "PERCAL_CONFIG";

#[derive(Parser)]
#[command(
    name = "percal",
    version,
    about = "Single-image camera calibration toolkit"
)]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write procedurally generated equirectangular panoramas.
    SynthPanos(SynthPanosArgs),
    /// Sample labeled crops from a directory of panoramas.
    GenerateDataset(GenerateDatasetArgs),
    /// Print the bin edges of one or all label heads as CSV.
    ExportBins(ExportBinsArgs),
    /// Print the bin index of a value (radians or image units).
    Encode(EncodeArgs),
    /// Turn a bin index or a probability vector back into a value.
    Decode(DecodeArgs),
    /// KL divergence between predicted and target label distributions.
    KlLoss(KlLossArgs),
    /// Write synthetic study records (for demos and tests only).
    SynthStudy(SynthStudyArgs),
    /// Perceptual sensitivity of calibration errors from study records.
    Score(ScoreArgs),
    /// Sample random distortions, optionally applied to a dataset manifest.
    SampleDistortion(SampleDistortionArgs),
    /// Object scale that keeps an inserted object's pixel size under a distorted camera.
    Compensate(CompensateArgs),
    /// Build a horizon retrieval index from a dataset manifest.
    RetrieveBuild(RetrieveBuildArgs),
    /// Rank indexed images by horizon position.
    RetrieveQuery(RetrieveQueryArgs),
    /// Ground-plane point under a pixel.
    InsertPoint(InsertPointArgs),
    /// Binned quartiles of estimation errors.
    Summarize(SummarizeArgs),
}

/// Camera angles as given on the command line.
#[derive(Args, Clone, Copy)]
struct AngleArgs {
    /// Vertical field of view.
    #[arg(long, allow_hyphen_values = true)]
    vfov: f64,
    /// Pitch (positive tilts the camera down).
    #[arg(long, allow_hyphen_values = true)]
    pitch: f64,
    /// Roll.
    #[arg(long, allow_hyphen_values = true)]
    roll: f64,
}

fn to_rad(v: f64, radians: bool) -> f64 {
    if radians {
        v
    } else {
        v.to_radians()
    }
}

impl AngleArgs {
    fn calibration(&self, radians: bool) -> Result<CameraCalibration> {
        Ok(CameraCalibration::from_angles(
            to_rad(self.vfov, radians),
            to_rad(self.pitch, radians),
            to_rad(self.roll, radians),
        )?)
    }
}

#[derive(Args)]
struct SynthPanosArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10)]
    count: usize,
    /// Panorama height in pixels; width is twice this.
    #[arg(long, default_value_t = 256)]
    height: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GenerateDatasetArgs {
    /// Directory of 2:1 equirectangular panoramas (png/jpg).
    #[arg(long)]
    panos: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sampling config (JSON). Defaults apply when absent.
    #[arg(long, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    #[arg(long)]
    crops_per_pano: Option<usize>,
    #[arg(long)]
    out_size: Option<u32>,
    #[arg(long, default_value_t = 0.8)]
    train: f64,
    #[arg(long, default_value_t = 0.1)]
    val: f64,
    #[arg(long, default_value_t = 0.1)]
    test: f64,
}

#[derive(Args)]
struct ExportBinsArgs {
    /// Only this head; all three when omitted.
    #[arg(long)]
    param: Option<ParamKind>,
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long)]
    param: ParamKind,
    /// Value in the head's native unit: radians for slope and vfov, image units for offset.
    #[arg(long, allow_hyphen_values = true)]
    value: f64,
    /// Print the one-hot distribution as a JSON array instead of the index.
    #[arg(long)]
    distribution: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    Expectation,
    Argmax,
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long)]
    param: ParamKind,
    /// Bin index to decode to its center.
    #[arg(long, conflicts_with = "probs")]
    bin: Option<usize>,
    /// JSON array of 256 probabilities; `-` reads stdin.
    #[arg(long)]
    probs: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = RuleArg::Expectation)]
    rule: RuleArg,
}

#[derive(Args)]
struct KlLossArgs {
    /// JSON object with `slope`, `offset` and `vfov` probability arrays.
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    target: PathBuf,
}

#[derive(Args)]
struct SynthStudyArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 2000)]
    count: usize,
    #[arg(long, default_value_t = 50)]
    votes: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ScoreArgs {
    /// Study records (JSON lines).
    #[arg(long)]
    records: PathBuf,
    /// CSV with columns pitch_value, pitch_error, roll_value_deg,
    /// roll_error_deg, vfov_value_deg, vfov_error_deg.
    #[arg(long, required_unless_present = "pairs", conflicts_with = "pairs")]
    queries: Option<PathBuf>,
    /// Ground-truth/estimate pairs (JSON lines), scored as distortions.
    #[arg(long)]
    pairs: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
}

#[derive(Args)]
struct SampleDistortionArgs {
    /// Comma-separated subset of pitch, roll, vfov (or `all`).
    #[arg(long, default_value = "all")]
    active: String,
    /// Number of distortions to print when no manifest is given.
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Apply one distortion to each crop of this manifest and print
    /// ground-truth/distorted pairs.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum CompensationArg {
    GroundExact,
    FocalRatio,
}

#[derive(Args)]
struct CompensateArgs {
    #[arg(long, allow_hyphen_values = true)]
    gt_vfov: f64,
    #[arg(long, allow_hyphen_values = true)]
    gt_pitch: f64,
    #[arg(long, allow_hyphen_values = true)]
    gt_roll: f64,
    #[arg(long, allow_hyphen_values = true)]
    dist_vfov: f64,
    #[arg(long, allow_hyphen_values = true)]
    dist_pitch: f64,
    #[arg(long, allow_hyphen_values = true)]
    dist_roll: f64,
    /// Anchor pixel column.
    #[arg(long)]
    u: f64,
    /// Anchor pixel row.
    #[arg(long)]
    v: f64,
    /// Object height in pixels under the ground-truth camera.
    #[arg(long)]
    height_px: f64,
    #[arg(long)]
    width: u32,
    #[arg(long)]
    height: u32,
    #[arg(long, value_enum, default_value_t = CompensationArg::GroundExact)]
    rule: CompensationArg,
    /// Angles are in radians instead of degrees.
    #[arg(long)]
    radians: bool,
}

#[derive(Args)]
struct RetrieveBuildArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RetrieveQueryArgs {
    #[arg(long)]
    index: PathBuf,
    /// Use the feature of an indexed image as the query.
    #[arg(long, conflicts_with_all = ["vfov", "pitch", "roll"])]
    image_id: Option<String>,
    #[arg(long, allow_hyphen_values = true, requires_all = ["pitch", "roll"])]
    vfov: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pitch: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    roll: Option<f64>,
    /// Width over height of the query image, as `W:H` or a decimal.
    #[arg(long, default_value = "4:3")]
    aspect: String,
    #[arg(long, default_value_t = 4)]
    top_k: usize,
    #[arg(long)]
    radians: bool,
}

#[derive(Args)]
struct InsertPointArgs {
    #[command(flatten)]
    angles: AngleArgs,
    #[arg(long)]
    width: u32,
    #[arg(long)]
    height: u32,
    #[arg(long)]
    u: f64,
    #[arg(long)]
    v: f64,
    /// Camera height above the ground in meters.
    #[arg(long, default_value_t = DEFAULT_CAMERA_HEIGHT_M)]
    camera_height: f64,
    #[arg(long)]
    radians: bool,
}

#[derive(Args)]
struct SummarizeArgs {
    /// Ground-truth/estimate pairs (JSON lines with `gt` and `pred`).
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long, default_value_t = 5)]
    bins: usize,
    /// Also write the CDF of absolute vfov error to this CSV file.
    #[arg(long)]
    cdf_out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<()> {
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    match command {
        Command::SynthPanos(a) => synth_panos(a)?,
        Command::GenerateDataset(a) => generate_dataset(a, &mut out)?,
        Command::ExportBins(a) => export_bins(a, &mut out)?,
        Command::Encode(a) => encode(a, &mut out)?,
        Command::Decode(a) => decode(a, &mut out)?,
        Command::KlLoss(a) => kl_loss(a, &mut out)?,
        Command::SynthStudy(a) => synth_study(a)?,
        Command::Score(a) => score(a, &mut out)?,
        Command::SampleDistortion(a) => sample_distortions(a, &mut out)?,
        Command::Compensate(a) => compensate(a, &mut out)?,
        Command::RetrieveBuild(a) => retrieve_build(a)?,
        Command::RetrieveQuery(a) => retrieve_query(a, &mut out)?,
        Command::InsertPoint(a) => insert_point(a, &mut out)?,
        Command::Summarize(a) => summarize(a, &mut out)?,
    }
    out.flush()?;
    Ok(())
}

fn synth_panos(a: SynthPanosArgs) -> Result<()> {
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut rng = seeded_rng(a.seed);
    for i in 0..a.count {
        let pano = textured_panorama(&mut rng, a.height)?;
        let path = a.out.join(format!("pano_{i:04}.png"));
        pano.save(&path)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    info!("wrote {} panoramas to {}", a.count, a.out.display());
    Ok(())
}

fn generate_dataset(a: GenerateDatasetArgs, out: &mut impl Write) -> Result<()> {
    let mut config = match &a.config {
        Some(p) => SamplingConfig::from_json_file(p)?,
        None => SamplingConfig::default(),
    };
    if let Some(n) = a.crops_per_pano {
        config.crops_per_pano = n;
    }
    if let Some(s) = a.out_size {
        config.out_size = s;
    }
    let fractions = SplitFractions {
        train: a.train,
        val: a.val,
        test: a.test,
    };
    let manifest = build_dataset(&a.panos, &a.out, &config, a.seed, &fractions)?;
    info!(
        "wrote {} crops to {}",
        manifest.records.len(),
        a.out.display()
    );
    writeln!(out, "{}", manifest.records.len())?;
    Ok(())
}

fn export_bins(a: ExportBinsArgs, out: &mut impl Write) -> Result<()> {
    let kinds: Vec<ParamKind> = match a.param {
        Some(k) => vec![k],
        None => ParamKind::ALL.to_vec(),
    };
    writeln!(out, "param,bin,lo,hi,center")?;
    for kind in kinds {
        let spec = codec::make_bins(kind);
        for (i, c) in spec.centers().iter().enumerate() {
            writeln!(
                out,
                "{kind},{i},{},{},{c}",
                spec.edges()[i],
                spec.edges()[i + 1]
            )?;
        }
    }
    Ok(())
}

fn encode(a: EncodeArgs, out: &mut impl Write) -> Result<()> {
    let spec = codec::make_bins(a.param);
    let dist = codec::encode(a.value, &spec)?;
    if a.distribution {
        writeln!(out, "{}", serde_json::to_string(&dist)?)?;
    } else {
        writeln!(out, "{}", dist.argmax())?;
    }
    Ok(())
}

fn read_input(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
    }
}

fn decode(a: DecodeArgs, out: &mut impl Write) -> Result<()> {
    let spec = codec::make_bins(a.param);
    let rule = match a.rule {
        RuleArg::Expectation => DecodeRule::Expectation,
        RuleArg::Argmax => DecodeRule::Argmax,
    };
    let dist = match (a.bin, &a.probs) {
        (Some(b), _) => LabelDistribution::one_hot(b)?,
        (None, Some(p)) => serde_json::from_str::<LabelDistribution>(&read_input(p)?)
            .with_context(|| format!("parsing {}", p.display()))?,
        (None, None) => bail!("one of --bin or --probs is required"),
    };
    writeln!(out, "{}", codec::decode_with(&dist, &spec, rule))?;
    Ok(())
}

#[derive(Deserialize)]
struct HeadDistributions {
    slope: LabelDistribution,
    offset: LabelDistribution,
    vfov: LabelDistribution,
}

fn read_heads(path: &Path) -> Result<[LabelDistribution; 3]> {
    let h: HeadDistributions = serde_json::from_str(&read_input(path)?)
        .with_context(|| format!("parsing {}", path.display()))?;
    Ok([h.slope, h.offset, h.vfov])
}

fn kl_loss(a: KlLossArgs, out: &mut impl Write) -> Result<()> {
    let pred = read_heads(&a.pred)?;
    let target = read_heads(&a.target)?;
    writeln!(out, "{}", codec::kl_loss(&pred, &target))?;
    Ok(())
}

fn synth_study(a: SynthStudyArgs) -> Result<()> {
    let records = synthetic_study(&mut seeded_rng(a.seed), a.count, a.votes)?;
    save_study(&a.out, &records)?;
    info!(
        "wrote {} synthetic study records to {}",
        records.len(),
        a.out.display()
    );
    Ok(())
}

fn score(a: ScoreArgs, out: &mut impl Write) -> Result<()> {
    let records = load_study(&a.records)?;
    let model = SensitivityModel::new(&records, a.k)?;
    let mut w = csv::Writer::from_writer(out);
    if let Some(p) = &a.pairs {
        let pairs: Vec<EstimatePair> = read_jsonl(p, |_| Ok(()))?;
        w.write_record(["id", "sensitivity"])?;
        for pair in &pairs {
            let s = model.sensitivity(&SensitivityQuery::from_pair(&pair.gt, &pair.pred));
            w.write_record([pair.id.clone(), s.to_string()])?;
        }
    } else if let Some(p) = &a.queries {
        let mut rdr =
            csv::Reader::from_path(p).with_context(|| format!("reading {}", p.display()))?;
        w.write_record(["row", "sensitivity"])?;
        for (i, row) in rdr.deserialize::<SensitivityQuery>().enumerate() {
            let q = row.with_context(|| format!("{}: row {}", p.display(), i + 1))?;
            let q = SensitivityQuery::new(q.as_array())?;
            w.write_record([(i + 1).to_string(), model.sensitivity(&q).to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn sample_distortions(a: SampleDistortionArgs, out: &mut impl Write) -> Result<()> {
    let active: ActiveParams = a.active.parse()?;
    let mut rng = seeded_rng(a.seed);
    match &a.manifest {
        Some(m) => {
            let records = read_manifest(m)?;
            for r in &records {
                let gt = r.calibration()?;
                let (_, pred) = sample_valid_distortion(&mut rng, active, &gt)?;
                let pair = EstimatePair {
                    id: r.crop_id.clone(),
                    gt,
                    pred,
                };
                writeln!(out, "{}", serde_json::to_string(&pair)?)?;
            }
        }
        None => {
            for _ in 0..a.count {
                let d = sample_distortion(&mut rng, active)?;
                writeln!(out, "{}", serde_json::to_string(&d)?)?;
            }
        }
    }
    Ok(())
}

fn compensate(a: CompensateArgs, out: &mut impl Write) -> Result<()> {
    let gt = AngleArgs {
        vfov: a.gt_vfov,
        pitch: a.gt_pitch,
        roll: a.gt_roll,
    }
    .calibration(a.radians)?;
    let dist = AngleArgs {
        vfov: a.dist_vfov,
        pitch: a.dist_pitch,
        roll: a.dist_roll,
    }
    .calibration(a.radians)?;
    let rule = match a.rule {
        CompensationArg::GroundExact => CompensationRule::GroundExact,
        CompensationArg::FocalRatio => CompensationRule::FocalRatio,
    };
    let dims = ImageDims::new(a.width, a.height)?;
    let c = compensate_placement(&gt, &dist, Point2::new(a.u, a.v), a.height_px, dims, rule)?;
    writeln!(out, "anchor_u,anchor_v,scale_factor")?;
    writeln!(
        out,
        "{},{},{}",
        c.anchor_px.x, c.anchor_px.y, c.scale_factor
    )?;
    Ok(())
}

fn retrieve_build(a: RetrieveBuildArgs) -> Result<()> {
    let records = read_manifest(&a.manifest)?;
    let index = RetrievalIndex::from_manifest(&records)?;
    index.save(&a.out)?;
    info!("indexed {} images into {}", index.len(), a.out.display());
    Ok(())
}

fn parse_aspect(s: &str) -> Result<f64> {
    let value = match s.split_once(':') {
        Some((w, h)) => w.trim().parse::<f64>()? / h.trim().parse::<f64>()?,
        None => s.trim().parse::<f64>()?,
    };
    if !(value > 0.0) || !value.is_finite() {
        bail!("aspect must be positive, got '{s}'");
    }
    Ok(value)
}

fn retrieve_query(a: RetrieveQueryArgs, out: &mut impl Write) -> Result<()> {
    let index = RetrievalIndex::load(&a.index)?;
    let feature: HorizonFeature = match (&a.image_id, a.vfov, a.pitch, a.roll) {
        (Some(id), ..) => index
            .get(id)
            .with_context(|| format!("image '{id}' is not in the index"))?
            .feature(),
        (None, Some(vfov), Some(pitch), Some(roll)) => {
            let calib = AngleArgs { vfov, pitch, roll }.calibration(a.radians)?;
            horizon_edge_intersections_for_aspect(&calib, parse_aspect(&a.aspect)?)?
        }
        _ => bail!("give either --image-id or all of --vfov, --pitch and --roll"),
    };
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rank", "image_id", "distance"])?;
    for (i, m) in index.query(&feature, a.top_k)?.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            m.image_id.clone(),
            m.distance.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn insert_point(a: InsertPointArgs, out: &mut impl Write) -> Result<()> {
    let calib = a.angles.calibration(a.radians)?;
    let dims = ImageDims::new(a.width, a.height)?;
    let p = unproject_to_ground(Point2::new(a.u, a.v), &calib, dims, a.camera_height)?;
    writeln!(out, "x,y,z")?;
    writeln!(out, "{},{},{}", p.x, p.y, p.z)?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn summarize(a: SummarizeArgs, out: &mut impl Write) -> Result<()> {
    let pairs: Vec<EstimatePair> = read_jsonl(&a.pairs, |_| Ok(()))?;
    let summary = summarize_errors(&pairs, a.bins)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["param", "bin", "lo", "hi", "count", "q1", "median", "q3"])?;
    for p in &summary.params {
        for (i, b) in p.bins.iter().enumerate() {
            let q = b.quartiles;
            w.write_record([
                p.param.name().to_string(),
                i.to_string(),
                b.lo.to_string(),
                b.hi.to_string(),
                b.count.to_string(),
                opt(q.map(|q| q.q1)),
                opt(q.map(|q| q.median)),
                opt(q.map(|q| q.q3)),
            ])?;
        }
    }
    w.flush()?;
    if let Some(path) = &a.cdf_out {
        let mut c =
            csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
        c.write_record(["abs_vfov_error", "fraction"])?;
        for pt in &summary.vfov_abs_cdf {
            c.write_record([pt.abs_error.to_string(), pt.fraction.to_string()])?;
        }
        c.flush()?;
    }
    Ok(())
}
