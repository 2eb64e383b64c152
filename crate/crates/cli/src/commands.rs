use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use infostream::corpus::{load_corpus, load_corpus_in_range, parse_day};
use infostream::decompose::{contribution_series, load_queries, Contribution, DailySeries};
use infostream::mfdfa::{fluctuation_function, generalized_hurst, profile, MfdfaError, Validity};
use infostream::synth::{GroundTruth, SimCorpusSpec};
use infostream::{
    build_decomposition, contribution_coefficients, load_daily_totals, normalize_series, rank_subtopics,
    reduced_stream, simulate_corpus, validity_check, DateRange, MultifractalSpectrum, ReducedStream,
    SubtopicSpectrum,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ConfigEcho, Normalize, RunConfig};
use crate::error::CliError;
use crate::output::{stem_for, unique_stems, Artifacts};
use crate::series::{format_dated, parse_series};

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn parse_date_flag(flag: &str, raw: &str) -> Result<NaiveDate, CliError> {
    parse_day(raw).ok_or_else(|| CliError::input(format!("{flag}: invalid date {raw:?}")))
}

// ---------------------------------------------------------------- decompose

pub struct DecomposeInput {
    pub corpus: PathBuf,
    pub topics: PathBuf,
    pub totals: Option<PathBuf>,
    pub from: Option<String>,
    pub to: Option<String>,
}

#[derive(Serialize)]
struct RangeEcho {
    first: NaiveDate,
    last: NaiveDate,
    days: usize,
}

#[derive(Serialize)]
struct SubtopicEcho<'a> {
    name: &'a str,
    file: String,
    keywords: &'a [String],
    docs: u64,
}

#[derive(Serialize)]
struct DecomposeSummary<'a> {
    config: ConfigEcho,
    corpus: String,
    range: RangeEcho,
    documents: u64,
    dropped_outside_range: usize,
    other: u64,
    duplicates: u64,
    coefficients: Vec<Contribution>,
    subtopics: Vec<SubtopicEcho<'a>>,
    reduced_stream: Option<ReducedStream>,
}

fn contributions_csv(rows: &[Contribution]) -> String {
    let mut out = String::from("topic,documents,percent\n");
    for c in rows {
        let name = if c.name.contains([',', '"', '\n']) { format!("\"{}\"", c.name.replace('"', "\"\"")) } else { c.name.clone() };
        out.push_str(&format!("{name},{},{:.1}\n", c.docs, 100.0 * c.fraction));
    }
    out
}

pub fn decompose(input: &DecomposeInput, cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.normalize == Normalize::Rates && input.totals.is_none() {
        return Err(CliError::input(
            "--normalize rates needs --totals FILE with daily scanned totals (or pass --normalize counts)",
        ));
    }
    let queries = load_queries(&input.topics).map_err(|e| CliError::input(e.to_string()))?;
    let corpus_err = |e: infostream::CorpusError| CliError::input(format!("{}: {e}", input.corpus.display()));
    let (corpus, dropped) = match (&input.from, &input.to) {
        (None, None) => (load_corpus(&input.corpus).map_err(corpus_err)?, 0),
        (from, to) => {
            let all = load_corpus(&input.corpus).map_err(corpus_err)?.range();
            let first = from.as_deref().map(|s| parse_date_flag("--from", s)).transpose()?.unwrap_or(all.first());
            let last = to.as_deref().map(|s| parse_date_flag("--to", s)).transpose()?.unwrap_or(all.last());
            let range = DateRange::new(first, last).map_err(|e| CliError::input(e.to_string()))?;
            load_corpus_in_range(&input.corpus, range).map_err(corpus_err)?
        }
    };
    let range = corpus.range();
    let totals = match (&input.totals, cfg.normalize) {
        (Some(path), Normalize::Rates) => Some(
            load_daily_totals(path, range).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?,
        ),
        _ => None,
    };

    let result = build_decomposition(&corpus, &queries).map_err(|e| CliError::input(e.to_string()))?;
    if let Some(day) = result.identity_violation() {
        return Err(CliError::Numerical(format!("decomposition identity fails on {day}")));
    }
    let coefficients = contribution_coefficients(&result).map_err(|e| CliError::input(e.to_string()))?;
    let reduced = cfg
        .k_prime
        .map(|k| reduced_stream(&result, &corpus, &queries, k, cfg.threshold))
        .transpose()
        .map_err(|e| CliError::input(e.to_string()))?;

    let stems = unique_stems(result.subtopics.iter().map(|s| s.name.as_str()), &["main", "other", "duplicates"]);
    let start = range.first();
    let analysis = |counts: &DailySeries| -> Result<DailySeries, CliError> {
        match &totals {
            Some(t) => normalize_series(counts, t).map_err(|e| CliError::input(e.to_string())),
            None => Ok(counts.clone()),
        }
    };
    let fmt_series = |s: &DailySeries| format_dated(s.start, &s.values);

    let mut out = Artifacts::default();
    out.add("counts/main.csv", format_dated(start, &result.main.values));
    out.add("counts/other.csv", format_dated(start, &result.other.values));
    out.add("counts/duplicates.csv", format_dated(start, &result.duplicates.values));
    let main = result.main.to_series();
    out.add("series/main.csv", fmt_series(&analysis(&main)?));
    for (sub, stem) in result.subtopics.iter().zip(&stems) {
        let counts = sub.series.to_series();
        out.add(format!("counts/{stem}.csv"), format_dated(start, &sub.series.values));
        out.add(format!("series/{stem}.csv"), fmt_series(&analysis(&counts)?));
        let share = contribution_series(&counts, &main).map_err(|e| CliError::Numerical(e.to_string()))?;
        out.add(format!("share/{stem}.csv"), fmt_series(&share));
    }
    out.add("contributions.csv", contributions_csv(&coefficients));
    let summary = DecomposeSummary {
        config: cfg.echo(),
        corpus: file_name(&input.corpus),
        range: RangeEcho { first: range.first(), last: range.last(), days: range.days() },
        documents: result.total_docs,
        dropped_outside_range: dropped,
        other: result.other.total(),
        duplicates: result.duplicates.total(),
        coefficients,
        subtopics: result
            .subtopics
            .iter()
            .zip(&queries)
            .zip(&stems)
            .map(|((s, q), stem)| SubtopicEcho { name: &s.name, file: format!("{stem}.csv"), keywords: &q.keywords, docs: s.docs })
            .collect(),
        reduced_stream: reduced,
    };
    out.add_json("summary.json", &summary);

    let mut inputs = vec![input.corpus.clone(), input.topics.clone()];
    inputs.extend(input.totals.clone());
    out.commit(&cfg.out, &inputs)
}

// ----------------------------------------------------------------- spectrum

/// Sidecar written next to every spectrum CSV, or alone for a verdict.
#[derive(Debug, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub series: String,
    pub input: String,
    pub length: usize,
    pub start: Option<NaiveDate>,
    pub config: serde_json::Value,
    pub verdict: Validity,
    pub width: Option<f64>,
    pub degenerate_segments: Option<usize>,
    pub spectrum: Option<MultifractalSpectrum>,
}

fn expand_inputs(paths: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| CliError::input(format!("{}: {e}", p.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.is_file() && f.extension().is_some_and(|x| x == "csv"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    if files.is_empty() {
        return Err(CliError::input("no series files given"));
    }
    Ok(files)
}

fn spectrum_csv(s: &MultifractalSpectrum) -> String {
    let mut out = String::from("q,h,tau,alpha,f,fit_residual\n");
    for k in 0..s.q.len() {
        out.push_str(&format!("{},{},{},{},{},{}\n", s.q[k], s.h[k], s.tau[k], s.alpha[k], s.f[k], s.fit_residual[k]));
    }
    out
}

fn estimate(values: &[f64], cfg: &RunConfig) -> Result<(MultifractalSpectrum, usize), MfdfaError> {
    let p = profile(values)?;
    let surface = fluctuation_function(&p, &cfg.mfdfa)?;
    let fits = generalized_hurst(&surface)?;
    let s = MultifractalSpectrum::from_hurst(
        surface.q_grid.clone(),
        fits.iter().map(|f| f.slope).collect(),
        fits.iter().map(|f| f.residual).collect(),
        surface.scales.clone(),
    )?;
    Ok((s, surface.degenerate_segments.iter().sum()))
}

pub fn spectrum(paths: &[PathBuf], cfg: &RunConfig) -> Result<(), CliError> {
    let files = expand_inputs(paths)?;
    let stems: Vec<String> = files
        .iter()
        .map(|f| stem_for(&f.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()))
        .collect();
    for (i, s) in stems.iter().enumerate() {
        if stems[..i].contains(s) {
            return Err(CliError::input(format!("two inputs map to the same output name {s:?}")));
        }
    }
    let parsed = files
        .iter()
        .map(|f| parse_series(&read(f)?).map_err(|e| CliError::input(format!("{}: {e}", f.display()))))
        .collect::<Result<Vec<_>, _>>()?;
    let config = serde_json::to_value(cfg.echo()).expect("serializable config");

    let reports = parsed
        .par_iter()
        .zip(&files)
        .zip(&stems)
        .map(|((series, file), stem)| {
            let mut report = SpectrumReport {
                series: stem.clone(),
                input: file_name(file),
                length: series.values.len(),
                start: series.start,
                config: config.clone(),
                verdict: validity_check(&series.values, &cfg.mfdfa),
                width: None,
                degenerate_segments: None,
                spectrum: None,
            };
            if report.verdict == Validity::Ok {
                let (s, degenerate) = estimate(&series.values, cfg).map_err(|e| {
                    let msg = format!("{}: {e}", file.display());
                    if e.is_numerical() { CliError::Numerical(msg) } else { CliError::input(msg) }
                })?;
                report.width = Some(s.width());
                report.degenerate_segments = Some(degenerate);
                report.spectrum = Some(s);
            }
            Ok(report)
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let mut out = Artifacts::default();
    for report in &reports {
        if let Some(s) = &report.spectrum {
            out.add(format!("{}.csv", report.series), spectrum_csv(s));
        }
        out.add_json(format!("{}.json", report.series), report);
    }
    out.commit(&cfg.out, &files)
}

// ------------------------------------------------------------------ compare

#[derive(Serialize)]
struct RankingReport<'a> {
    config: ConfigEcho,
    main: String,
    q_grid: &'a [f64],
    rows: &'a [infostream::SpectrumDistance],
}

fn load_report(path: &Path) -> Result<SpectrumReport, CliError> {
    let report: SpectrumReport = serde_json::from_str(&read(path)?)
        .map_err(|e| CliError::input(format!("{}: not a spectrum report: {e}", path.display())))?;
    if report.verdict == Validity::Ok && report.spectrum.is_none() {
        return Err(CliError::input(format!("{}: verdict ok but no spectrum", path.display())));
    }
    Ok(report)
}

pub fn compare(main_path: &Path, dir: &Path, cfg: &RunConfig) -> Result<(), CliError> {
    let main = load_report(main_path)?;
    let main_spec = match (&main.verdict, main.spectrum) {
        (Validity::Ok, Some(s)) => s,
        (Validity::InsufficientData(reason), _) => {
            return Err(CliError::input(format!("{}: main stream has no spectrum ({reason})", main_path.display())))
        }
        _ => unreachable!("checked in load_report"),
    };
    let main_canon = fs::canonicalize(main_path).map_err(|e| CliError::input(format!("{}: {e}", main_path.display())))?;
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::input(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|f| f.is_file() && f.extension().is_some_and(|x| x == "json"))
        .filter(|f| fs::canonicalize(f).map(|c| c != main_canon).unwrap_or(true))
        .collect();
    files.sort();

    let mut subs: BTreeMap<String, SubtopicSpectrum> = BTreeMap::new();
    for f in &files {
        let report = load_report(f)?;
        let name = f.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let entry = match (report.verdict, report.spectrum) {
            (Validity::Ok, Some(s)) => {
                if s.q != main_spec.q {
                    return Err(CliError::input(format!(
                        "{}: q grid differs from {} ({} vs {} points)",
                        f.display(),
                        main_path.display(),
                        s.q.len(),
                        main_spec.q.len()
                    )));
                }
                SubtopicSpectrum::Valid(s)
            }
            (Validity::InsufficientData(reason), _) => SubtopicSpectrum::Invalid(reason),
            _ => unreachable!("checked in load_report"),
        };
        subs.insert(name, entry);
    }
    let table = rank_subtopics(&main_spec, subs.iter().map(|(n, s)| (n.as_str(), s)))
        .map_err(|e| CliError::input(e.to_string()))?;

    let mut out = Artifacts::default();
    out.add("ranking.csv", table.to_csv());
    out.add_json(
        "ranking.json",
        &RankingReport { config: cfg.echo(), main: file_name(main_path), q_grid: &main_spec.q, rows: &table.rows },
    );
    let mut inputs = files;
    inputs.push(main_path.to_path_buf());
    out.commit(&cfg.out, &inputs)
}

// ----------------------------------------------------------------- simulate

#[derive(Serialize)]
struct TruthReport<'a> {
    spec: &'a SimCorpusSpec,
    #[serde(flatten)]
    truth: &'a GroundTruth,
}

pub fn parse_sim_spec(path: &Path) -> Result<SimCorpusSpec, CliError> {
    let src = read(path)?;
    let parsed = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        serde_json::from_str(&src).map_err(|e| e.to_string())
    } else {
        toml::from_str(&src).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn simulate(spec_path: &Path, cfg: &RunConfig) -> Result<(), CliError> {
    let mut spec = parse_sim_spec(spec_path)?;
    if let Some(seed) = cfg.seed {
        spec.seed = seed;
    }
    let sim = simulate_corpus(&spec).map_err(|e| CliError::input(format!("{}: {e}", spec_path.display())))?;

    let mut out = Artifacts::default();
    let mut jsonl = Vec::new();
    sim.corpus.write_jsonl(&mut jsonl).expect("write to memory");
    out.add("corpus.jsonl", jsonl);
    out.add_json("truth.json", &TruthReport { spec: &spec, truth: &sim.truth });
    out.add_json("topics.json", &serde_json::json!({ "topics": spec.queries() }));
    let mut totals = String::from("date,count\n");
    for (day, n) in sim.totals.range().iter().zip(sim.totals.counts()) {
        totals.push_str(&format!("{day},{n}\n"));
    }
    out.add("totals.csv", totals);
    out.commit(&cfg.out, &[spec_path.to_path_buf()])
}
