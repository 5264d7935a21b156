use std::io::Write;

use serde::Serialize;

use gaussify::classic::{BoxCoxFit, BoxCoxGrid, ShiftGrid};
use gaussify::normality::{Moments, TestMethod, TestReport, P_FLOOR};
use gaussify::reliability::{ReliabilityReport, StudyTransform};

use crate::Failure;

/// p-value rounded to two significant figures; values at the floor print as
/// `<1e-16`.
pub fn format_p(p: f64) -> String {
    if p <= P_FLOOR {
        return format!("<{P_FLOOR:e}");
    }
    if p < 1e-3 {
        return format!("{p:.1e}");
    }
    let decimals = (1 - p.log10().floor() as i32).max(0) as usize;
    let s = format!("{p:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn r3(r: f64) -> String {
    format!("{r:.3}")
}

fn write_json<W: Write, T: Serialize>(mut out: W, value: &T) -> Result<(), Failure> {
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| gaussify::Error::Io(e.to_string()))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct TestJson {
    method: TestMethod,
    statistic: f64,
    p: f64,
    n: usize,
    estimated_mean: f64,
    estimated_sd: f64,
}

impl From<&TestReport> for TestJson {
    fn from(r: &TestReport) -> Self {
        TestJson {
            method: r.method,
            statistic: r.statistic,
            p: r.p_value.value(),
            n: r.n,
            estimated_mean: r.estimated_mean,
            estimated_sd: r.estimated_sd,
        }
    }
}

pub struct NormalityEntry {
    pub measure: Option<String>,
    pub moments: Moments,
    pub tests: Vec<TestReport>,
}

pub fn normality_json<W: Write>(out: W, entries: &[NormalityEntry]) -> Result<(), Failure> {
    #[derive(Serialize)]
    struct Entry<'a> {
        measure: Option<&'a str>,
        moments: &'a Moments,
        tests: Vec<TestJson>,
    }
    #[derive(Serialize)]
    struct Report<'a> {
        command: &'static str,
        measures: Vec<Entry<'a>>,
    }
    let measures = entries
        .iter()
        .map(|e| Entry {
            measure: e.measure.as_deref(),
            moments: &e.moments,
            tests: e.tests.iter().map(TestJson::from).collect(),
        })
        .collect();
    write_json(
        out,
        &Report {
            command: "test-normality",
            measures,
        },
    )
}

pub fn normality_text<W: Write>(mut out: W, entries: &[NormalityEntry]) -> Result<(), Failure> {
    writeln!(out, "measure\tmethod\tstatistic\tp\tn")?;
    for e in entries {
        for t in &e.tests {
            writeln!(
                out,
                "{}\t{}\t{:.4}\t{}\t{}",
                e.measure.as_deref().unwrap_or("-"),
                t.method,
                t.statistic,
                format_p(t.p_value.value()),
                t.n
            )?;
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
pub struct BoxCoxEntry {
    measure: Option<String>,
    n: usize,
    lambda1: f64,
    lambda2: f64,
    p: f64,
    grid_evaluations: usize,
    feasible_evaluations: usize,
}

impl BoxCoxEntry {
    pub fn new(measure: Option<&str>, n: usize, fit: &BoxCoxFit) -> Self {
        BoxCoxEntry {
            measure: measure.map(str::to_string),
            n,
            lambda1: fit.params.lambda1,
            lambda2: fit.params.lambda2,
            p: fit.ad_p_value.value(),
            grid_evaluations: fit.grid_evaluations,
            feasible_evaluations: fit.feasible_evaluations,
        }
    }
}

pub fn boxcox_json<W: Write>(out: W, grid: &BoxCoxGrid, entries: &[BoxCoxEntry]) -> Result<(), Failure> {
    #[derive(Serialize)]
    struct Grid {
        lambda1: String,
        lambda2: usize,
    }
    #[derive(Serialize)]
    struct Report<'a> {
        command: &'static str,
        grid: Grid,
        measures: &'a [BoxCoxEntry],
    }
    let lambda2 = match &grid.lambda2 {
        ShiftGrid::DataRelative { count } => *count,
        ShiftGrid::Explicit(v) => v.len(),
    };
    write_json(
        out,
        &Report {
            command: "fit-boxcox",
            grid: Grid {
                lambda1: grid.lambda1.to_string(),
                lambda2,
            },
            measures: entries,
        },
    )
}

pub fn boxcox_text<W: Write>(mut out: W, entries: &[BoxCoxEntry]) -> Result<(), Failure> {
    writeln!(out, "measure\tlambda1\tlambda2\tp\tn")?;
    for e in entries {
        writeln!(
            out,
            "{}\t{}\t{:.4}\t{}\t{}",
            e.measure.as_deref().unwrap_or("-"),
            e.lambda1,
            e.lambda2,
            format_p(e.p),
            e.n
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn reliability_json<W: Write>(out: W, report: &ReliabilityReport) -> Result<(), Failure> {
    #[derive(Serialize)]
    struct Report<'a> {
        command: &'static str,
        #[serde(flatten)]
        report: &'a ReliabilityReport,
    }
    write_json(
        out,
        &Report {
            command: "reliability",
            report,
        },
    )
}

/// One row per measure: raw r, r after each transform, Spearman ρ.
pub fn reliability_text<W: Write>(
    mut out: W,
    report: &ReliabilityReport,
    transforms: &[StudyTransform],
) -> Result<(), Failure> {
    write!(out, "measure\tr_raw")?;
    for t in transforms {
        write!(out, "\tr_{}", t.to_string().replace('-', "_"))?;
    }
    writeln!(out, "\trho_spearman")?;
    for m in &report.measures {
        write!(out, "{}\t{}", m.measure, r3(m.raw.mean_r))?;
        for t in transforms {
            let cell = m
                .transformed
                .iter()
                .find(|x| x.transform == *t)
                .and_then(|x| x.mean_r)
                .map_or_else(|| "-".to_string(), r3);
            write!(out, "\t{cell}")?;
        }
        writeln!(out, "\t{}", r3(m.spearman.mean_r))?;
    }
    if let Some(c) = &report.comparison {
        match &c.test {
            Some(t) => writeln!(
                out,
                "\npaired t-test, raw vs {} over {} measures: mean r {} -> {}, t = {:.2}, df = {}, p = {}\nnote: {}",
                c.transform,
                c.measures,
                r3(t.mean_before),
                r3(t.mean_after),
                t.t,
                t.df,
                format_p(t.p_value.value()),
                c.note
            )?,
            None => writeln!(
                out,
                "\npaired t-test, raw vs {}: not computed ({})",
                c.transform, c.note
            )?,
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::format_p;

    #[test]
    fn p_rounding() {
        assert_eq!(format_p(0.9999), "1");
        assert_eq!(format_p(1.0), "1");
        assert_eq!(format_p(0.25), "0.25");
        assert_eq!(format_p(0.5), "0.5");
        assert_eq!(format_p(0.0134), "0.013");
        assert_eq!(format_p(0.0025), "0.0025");
        assert_eq!(format_p(0.00011), "1.1e-4");
        assert_eq!(format_p(1e-16), "<1e-16");
        assert_eq!(format_p(0.0), "<1e-16");
    }
}
