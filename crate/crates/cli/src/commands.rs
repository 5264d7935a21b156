use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use gaussify::classic::{
    boxcox_scaled, fit_boxcox, log_transform, logit_transform, BoxCoxGrid, BoxCoxParams, ShiftGrid,
};
use gaussify::dataset::{LongitudinalDataset, Record};
use gaussify::distributions::{analytic_gaussianize_all, NormalParams};
use gaussify::hist::Histogram;
use gaussify::io::{self as gio, LineIndex, NamedSpec};
use gaussify::normality::{anderson_darling, ks_normality_with, moments, KsOptions};
use gaussify::rank::{gaussianize, RankTransformSpec, Sample};
use gaussify::reliability::{reliability_study, AverageOptions, StudyOptions};
use gaussify::rosenblatt::{self, BivariateNormalParams};
use gaussify::special::Probability;
use gaussify::synth::{generate, SynthConfig};
use gaussify::Error;

use crate::output::{self, BoxCoxEntry, NormalityEntry};
use crate::{Command, Failure, Format, Io, Method, TestChoice};

const PLAIN_MEASURE: &str = "value";
const PLAIN_SESSION: u32 = 1;

fn read_input(path: Option<&Path>) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    match path {
        None => io::stdin().lock().read_to_end(&mut buf)?,
        Some(p) if p.as_os_str() == "-" => io::stdin().lock().read_to_end(&mut buf)?,
        Some(p) => File::open(p)
            .and_then(|mut f| f.read_to_end(&mut buf))
            .map_err(|e| Error::Io(format!("{}: {e}", p.display())))?,
    };
    Ok(buf)
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        None => Box::new(BufWriter::new(io::stdout().lock())),
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?,
        )),
    })
}

struct Loaded {
    data: LongitudinalDataset,
    lines: LineIndex,
    plain: bool,
}

impl Loaded {
    /// Names the source line of the observation an element error points at.
    fn locate(&self, measure: &str, err: Error) -> Error {
        let (index, detail) = match &err {
            Error::DomainAt { index, value, reason } => (*index, format!("{reason} (value {value})")),
            Error::Overflow { index: Some(index), .. } => (*index, err.to_string()),
            _ => return err.in_measure(measure),
        };
        let located = self.data.measure(measure).ok().and_then(|table| {
            table
                .iter()
                .flat_map(|(&session, subjects)| subjects.keys().map(move |s| (session, s)))
                .nth(index)
                .and_then(|(session, subject)| self.lines.line(measure, session, subject))
        });
        match located {
            Some(line) if self.plain => Error::Parse { line, message: detail },
            Some(line) => Error::Parse {
                line,
                message: format!("measure `{measure}`: {detail}"),
            },
            None => err.in_measure(measure),
        }
    }

    fn measures(&self) -> Vec<String> {
        self.data.measures().map(str::to_string).collect()
    }

    /// Measure label for reports; plain input has none.
    fn label<'a>(&self, measure: &'a str) -> Option<&'a str> {
        (!self.plain).then_some(measure)
    }
}

fn load(io: &Io) -> Result<Loaded, Failure> {
    let bytes = read_input(io.input.as_deref())?;
    let (data, lines) = if io.plain {
        let text = std::str::from_utf8(&bytes).map_err(|e| Error::Io(e.to_string()))?;
        let mut data = LongitudinalDataset::new();
        let mut lines = LineIndex::default();
        for (i, (line, value)) in gio::parse_plain_located(text)?.into_iter().enumerate() {
            let record = Record {
                subject: (i + 1).to_string(),
                session: PLAIN_SESSION,
                measure: PLAIN_MEASURE.to_string(),
                value,
            };
            lines.insert(&record, line);
            data.insert(record)?;
        }
        (data, lines)
    } else {
        gio::read_long_csv_located(bytes.as_slice())?
    };
    if data.is_empty() {
        return Err(Error::EmptySample.into());
    }
    let data = match &io.measure {
        None => data,
        Some(m) => {
            if data.measure(m).is_err() {
                return Err(Failure::Usage(format!("unknown measure `{m}`")));
            }
            LongitudinalDataset::from_records(data.records().filter(|r| &r.measure == m))?
        }
    };
    Ok(Loaded {
        data,
        lines,
        plain: io.plain,
    })
}

fn write_dataset(out: Box<dyn Write>, loaded: &Loaded) -> Result<(), Failure> {
    if loaded.plain {
        gio::write_plain(out, &loaded.data.pooled(PLAIN_MEASURE)?)?;
    } else {
        gio::write_long_csv(out, &loaded.data)?;
    }
    Ok(())
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

pub fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Transform {
            io,
            method,
            mu,
            sigma,
            lambda1,
            lambda2,
            dist,
            spec_out,
            spec_in,
        } => {
            let target = NormalParams::new(mu, sigma).map_err(|e| usage(e.to_string()))?;
            if method != Method::RankNormal && (spec_in.is_some() || spec_out.is_some()) {
                return Err(usage("--spec-in and --spec-out only apply to --method rank-normal"));
            }
            if method == Method::Analytic && dist.is_none() {
                return Err(usage("--method analytic needs --dist"));
            }
            let fixed = lambda1.zip(lambda2).map(|(a, b)| BoxCoxParams::new(a, b));
            let stored = match &spec_in {
                Some(p) => Some(gio::read_rank_specs(read_input(Some(p))?.as_slice())?),
                None => None,
            };
            let mut loaded = load(&io)?;
            let mut fitted = Vec::new();
            for m in loaded.measures() {
                let values = loaded.data.pooled(&m)?;
                let out = match method {
                    Method::RankNormal => match &stored {
                        Some(specs) => {
                            let spec = pick_spec(specs, loaded.label(&m))?;
                            let applied = spec.apply(&values);
                            if applied.clamped > 0 {
                                eprintln!(
                                    "warning: measure `{m}`: {} value(s) outside the fitted range were clamped",
                                    applied.clamped
                                );
                            }
                            Ok(applied.values)
                        }
                        None => {
                            let (t, spec) = gaussianize(&Sample::new(values)?, target);
                            fitted.push(NamedSpec {
                                measure: loaded.label(&m).map(str::to_string),
                                spec,
                            });
                            Ok(t.into_vec())
                        }
                    },
                    Method::Log => log_transform(&values),
                    Method::Logit => logit_transform(&values),
                    Method::Boxcox => {
                        let params = match fixed {
                            Some(p) => p,
                            None => {
                                let fit = fit_boxcox(&values, &BoxCoxGrid::default()).map_err(|e| e.in_measure(&m))?;
                                eprintln!(
                                    "measure `{m}`: lambda1={} lambda2={} p={}",
                                    fit.params.lambda1,
                                    fit.params.lambda2,
                                    output::format_p(fit.ad_p_value.value())
                                );
                                fit.params
                            }
                        };
                        boxcox_scaled(&values, params)
                    }
                    Method::Analytic => analytic_gaussianize_all(&values, &dist.expect("checked above"), target),
                };
                let out = out.map_err(|e| loaded.locate(&m, e))?;
                loaded.data.replace_pooled(&m, &out)?;
            }
            if let Some(p) = &spec_out {
                gio::write_rank_specs(open_output(Some(p))?, &fitted)?;
            }
            write_dataset(open_output(io.output.as_deref())?, &loaded)
        }

        Command::FitBoxcox {
            io,
            format,
            grid_l1,
            grid_l2,
        } => {
            if grid_l2 == 0 {
                return Err(usage("--grid-l2 must be at least 1"));
            }
            let grid = BoxCoxGrid {
                lambda1: grid_l1,
                lambda2: ShiftGrid::DataRelative { count: grid_l2 },
            };
            let loaded = load(&io)?;
            let mut entries = Vec::new();
            for m in loaded.measures() {
                let values = loaded.data.pooled(&m)?;
                let fit = fit_boxcox(&values, &grid).map_err(|e| e.in_measure(&m))?;
                entries.push(BoxCoxEntry::new(loaded.label(&m), values.len(), &fit));
            }
            let out = open_output(io.output.as_deref())?;
            match format.format {
                Format::Json => output::boxcox_json(out, &grid, &entries),
                Format::Text => output::boxcox_text(out, &entries),
            }
        }

        Command::TestNormality {
            io,
            format,
            test,
            ks_replicates,
            seed,
        } => {
            if ks_replicates == 0 {
                return Err(usage("--ks-replicates must be positive"));
            }
            let ks = KsOptions {
                replicates: ks_replicates,
                seed,
            };
            let loaded = load(&io)?;
            let mut entries = Vec::new();
            for m in loaded.measures() {
                let values = loaded.data.pooled(&m)?;
                let run = || -> gaussify::Result<NormalityEntry> {
                    let mut tests = Vec::new();
                    if test != TestChoice::Ks {
                        tests.push(anderson_darling(&values)?);
                    }
                    if test != TestChoice::Ad {
                        tests.push(ks_normality_with(&values, ks)?);
                    }
                    Ok(NormalityEntry {
                        measure: loaded.label(&m).map(str::to_string),
                        moments: moments(&values)?,
                        tests,
                    })
                };
                entries.push(run().map_err(|e| e.in_measure(&m))?);
            }
            let out = open_output(io.output.as_deref())?;
            match format.format {
                Format::Json => output::normality_json(out, &entries),
                Format::Text => output::normality_text(out, &entries),
            }
        }

        Command::Reliability {
            io,
            format,
            pairing,
            window,
            transforms,
            averaging,
            per_session_fit,
        } => {
            if io.plain {
                return Err(usage("reliability needs long CSV input with sessions"));
            }
            let mut transforms = transforms;
            transforms.dedup();
            let options = StudyOptions {
                average: AverageOptions {
                    window,
                    pairing,
                    averaging,
                },
                transforms,
                per_session_fit,
                boxcox_grid: BoxCoxGrid::default(),
            };
            let loaded = load(&io)?;
            let report = reliability_study(&loaded.data, &options)?;
            let out = open_output(io.output.as_deref())?;
            match format.format {
                Format::Json => output::reliability_json(out, &report),
                Format::Text => output::reliability_text(out, &report, &options.transforms),
            }
        }

        Command::Rosenblatt {
            input,
            output,
            mu1,
            mu2,
            sigma1,
            sigma2,
            rho,
            inverse,
        } => {
            let params = BivariateNormalParams::new(mu1, mu2, sigma1, sigma2, rho).map_err(|e| usage(e.to_string()))?;
            let text = String::from_utf8(read_input(input.as_deref())?).map_err(|e| Error::Io(e.to_string()))?;
            let pairs = gio::parse_pairs(&text)?;
            let mapped = pairs
                .iter()
                .enumerate()
                .map(|(i, &(a, b))| {
                    let r = if inverse {
                        Probability::new(a)
                            .and_then(|x1| Probability::new(b).map(|x2| (x1, x2)))
                            .and_then(|(x1, x2)| rosenblatt::inverse(x1, x2, &params))
                    } else {
                        rosenblatt::forward(a, b, &params).map(|(x1, x2)| (x1.value(), x2.value()))
                    };
                    r.map_err(|e| Error::Domain(format!("pair {}: {e}", i + 1)))
                })
                .collect::<gaussify::Result<Vec<_>>>()?;
            gio::write_pairs(open_output(output.as_deref())?, &mapped)?;
            Ok(())
        }

        Command::Synth {
            output,
            subjects,
            sessions,
            rho,
            marginal,
            seed,
            name,
        } => {
            let config = SynthConfig {
                measure: name,
                ..SynthConfig::new(subjects, sessions, rho, marginal, seed)
            };
            config.validate().map_err(|e| usage(e.to_string()))?;
            gio::write_long_csv(open_output(output.as_deref())?, &generate(&config)?)?;
            Ok(())
        }

        Command::Hist { io, bins } => {
            if bins == 0 {
                return Err(usage("--bins must be at least 1"));
            }
            let loaded = load(&io)?;
            let names = loaded.measures();
            let hists = names
                .iter()
                .map(|m| Histogram::new(&loaded.data.pooled(m)?, bins).map_err(|e| e.in_measure(m)))
                .collect::<gaussify::Result<Vec<_>>>()?;
            let rows: Vec<(Option<&str>, &Histogram)> =
                names.iter().zip(&hists).map(|(m, h)| (loaded.label(m), h)).collect();
            gio::write_histograms(open_output(io.output.as_deref())?, &rows)?;
            Ok(())
        }
    }
}

fn pick_spec<'a>(specs: &'a [NamedSpec], measure: Option<&str>) -> Result<&'a RankTransformSpec, Failure> {
    let by_name = measure.and_then(|m| specs.iter().find(|s| s.measure.as_deref() == Some(m)));
    let single = (specs.len() == 1).then(|| &specs[0]);
    by_name.or(single).map(|s| &s.spec).ok_or_else(|| {
        Failure::Data(Error::Domain(format!(
            "no stored rank transform for measure `{}`",
            measure.unwrap_or(PLAIN_MEASURE)
        )))
    })
}
