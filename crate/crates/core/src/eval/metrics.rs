//! hit@k, median rank and the report formats.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::matching::{normalize_diagnosis, MatchRule};
use super::EvalError;
use crate::llm::LIST_LENGTH;

pub const HIT_KS: [usize; 3] = [1, 3, 10];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionRecord {
    pub case_id: String,
    pub ranked_predictions: Vec<String>,
    pub method_label: String,
}

impl PredictionRecord {
    /// Drops empty strings and later duplicates (compared normalized).
    pub fn new(case_id: impl Into<String>, predictions: impl IntoIterator<Item = String>, method_label: impl Into<String>) -> Self {
        let mut seen = HashSet::new();
        let ranked_predictions = predictions
            .into_iter()
            .filter(|p| {
                let n = normalize_diagnosis(p);
                !n.is_empty() && seen.insert(n)
            })
            .collect();
        Self {
            case_id: case_id.into(),
            ranked_predictions,
            method_label: method_label.into(),
        }
    }
}

/// Median rank; `Beyond(n)` renders as `>n` and stands for a median that
/// lands on a miss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MedianRank {
    Rank(f64),
    Beyond(usize),
}

impl fmt::Display for MedianRank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MedianRank::Rank(r) => write!(f, "{r:.1}"),
            MedianRank::Beyond(n) => write!(f, ">{n}"),
        }
    }
}

impl FromStr for MedianRank {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if let Some(n) = s.strip_prefix('>') {
            return n.parse().map(MedianRank::Beyond).map_err(|_| format!("bad median rank {s:?}"));
        }
        s.parse().map(MedianRank::Rank).map_err(|_| format!("bad median rank {s:?}"))
    }
}

/// Median over ranks with misses as +infinity. With an even count the two
/// middle ranks are averaged; if only the upper one is a miss, the lower
/// one is reported, so the marker appears exactly when more than half the
/// cases miss.
pub fn median_rank(ranks: &[Option<usize>]) -> MedianRank {
    let mut sorted: Vec<usize> = ranks.iter().map(|r| r.unwrap_or(usize::MAX)).collect();
    sorted.sort_unstable();
    let n = sorted.len();
    let beyond = MedianRank::Beyond(LIST_LENGTH);
    if n == 0 {
        return beyond;
    }
    let (lo, hi) = if n % 2 == 1 {
        (sorted[n / 2], sorted[n / 2])
    } else {
        (sorted[n / 2 - 1], sorted[n / 2])
    };
    match (lo, hi) {
        (usize::MAX, _) => beyond,
        (lo, usize::MAX) => MedianRank::Rank(lo as f64),
        (lo, hi) => MedianRank::Rank((lo + hi) as f64 / 2.0),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodReport {
    pub method: String,
    pub cases: usize,
    /// Cases with rank <= k, for each k in [`HIT_KS`].
    pub hits: [usize; 3],
    pub median_rank: MedianRank,
    /// `(case_id, rank)` sorted by case id; `None` is a miss.
    pub ranks: Vec<(String, Option<usize>)>,
    /// Cases whose prediction failed and were scored as misses.
    pub incomplete: Vec<String>,
}

impl MethodReport {
    /// hit@k as a percentage.
    pub fn hit_percent(&self, i: usize) -> f64 {
        100.0 * self.hits[i] as f64 / self.cases as f64
    }
}

fn valid_label(s: &str) -> bool {
    !s.is_empty() && !s.contains([',', '"', '\t', '\n', '\r'])
}

/// Scores one method's records. Only the first [`LIST_LENGTH`] predictions
/// of each record count.
pub fn compute_metrics(
    records: &[PredictionRecord],
    gold: &BTreeMap<String, BTreeSet<String>>,
    rule: &MatchRule,
) -> Result<MethodReport, EvalError> {
    let method = records.first().ok_or(EvalError::NoCases)?.method_label.clone();
    if !valid_label(&method) {
        return Err(EvalError::Report(format!("method label {method:?} must not contain commas, quotes or tabs")));
    }
    let mut seen = BTreeSet::new();
    let mut ranks = Vec::with_capacity(records.len());
    for r in records {
        if r.method_label != method {
            return Err(EvalError::Report(format!("mixed method labels {method} and {}", r.method_label)));
        }
        if !seen.insert(r.case_id.as_str()) {
            return Err(EvalError::DuplicateRecord(r.case_id.clone()));
        }
        let g = gold.get(&r.case_id).ok_or_else(|| EvalError::MissingGold(r.case_id.clone()))?;
        let rank = r
            .ranked_predictions
            .iter()
            .take(LIST_LENGTH)
            .enumerate()
            .find(|(i, p)| rule.matches(&r.case_id, i + 1, p, g))
            .map(|(i, _)| i + 1);
        ranks.push((r.case_id.clone(), rank));
    }
    ranks.sort_by(|a, b| a.0.cmp(&b.0));
    let mut hits = [0usize; 3];
    for (i, k) in HIT_KS.iter().enumerate() {
        hits[i] = ranks.iter().filter(|(_, r)| matches!(r, Some(r) if r <= k)).count();
    }
    let plain: Vec<Option<usize>> = ranks.iter().map(|(_, r)| *r).collect();
    Ok(MethodReport {
        method,
        cases: ranks.len(),
        hits,
        median_rank: median_rank(&plain),
        ranks,
        incomplete: Vec::new(),
    })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalReport {
    /// Run metadata such as graph version and config echo.
    pub metadata: BTreeMap<String, String>,
    /// Every manual override in force, `(case_id, rank, verdict)`.
    pub overrides: Vec<(String, usize, String)>,
    pub methods: Vec<MethodReport>,
}

impl EvalReport {
    pub fn echo_overrides(&mut self, rule: &MatchRule) {
        self.overrides = rule
            .overrides()
            .iter()
            .map(|((c, r), v)| (c.clone(), *r, v.as_str().to_string()))
            .collect();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, EvalError> {
        match s {
            "text" => Ok(Self::Text),
            "csv" => Ok(Self::Csv),
            other => Err(EvalError::UnknownFormat(other.to_string())),
        }
    }
}

const REPORT_MAGIC: &str = "#RAREKG-REPORT\t1";
pub const CSV_HEADER: &str = "method,hit@1,hit@3,hit@10,MR,cases,hits@1,hits@3,hits@10,incomplete";

fn one_line(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

pub fn render_report(report: &EvalReport, format: ReportFormat) -> String {
    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            out.push_str(CSV_HEADER);
            out.push('\n');
            for m in &report.methods {
                let _ = writeln!(
                    out,
                    "{},{:.1},{:.1},{:.1},{},{},{},{},{},{}",
                    m.method,
                    m.hit_percent(0),
                    m.hit_percent(1),
                    m.hit_percent(2),
                    m.median_rank,
                    m.cases,
                    m.hits[0],
                    m.hits[1],
                    m.hits[2],
                    m.incomplete.len()
                );
            }
        }
        ReportFormat::Text => {
            out.push_str(REPORT_MAGIC);
            out.push('\n');
            for (k, v) in &report.metadata {
                let _ = writeln!(out, "meta\t{}\t{}", one_line(k), one_line(v));
            }
            for (c, r, v) in &report.overrides {
                let _ = writeln!(out, "override\t{c}\t{r}\t{v}");
            }
            for m in &report.methods {
                let _ = writeln!(
                    out,
                    "method\t{}\tcases={}\thit@1={:.1}\thit@3={:.1}\thit@10={:.1}\tMR={}\thits={},{},{}",
                    m.method,
                    m.cases,
                    m.hit_percent(0),
                    m.hit_percent(1),
                    m.hit_percent(2),
                    m.median_rank,
                    m.hits[0],
                    m.hits[1],
                    m.hits[2]
                );
                for (case, rank) in &m.ranks {
                    let r = rank.map_or("MISS".to_string(), |r| r.to_string());
                    let _ = writeln!(out, "rank\t{}\t{case}\t{r}", m.method);
                }
                for case in &m.incomplete {
                    let _ = writeln!(out, "incomplete\t{}\t{case}", m.method);
                }
            }
        }
    }
    out
}

/// Writes atomically.
pub fn emit_report(report: &EvalReport, path: &Path, format: ReportFormat) -> Result<(), EvalError> {
    use std::io::Write;
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(render_report(report, format).as_bytes())?;
    tmp.persist(path).map_err(|e| EvalError::Io(e.error))?;
    Ok(())
}

/// One parsed CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub method: String,
    pub hit_percent: [f64; 3],
    pub median_rank: MedianRank,
    pub cases: usize,
    pub hits: [usize; 3],
    pub incomplete: usize,
}

pub fn parse_report_csv(text: &str) -> Result<Vec<CsvRow>, EvalError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == CSV_HEADER => {}
        _ => {
            return Err(EvalError::Parse {
                line: 1,
                message: "missing report CSV header".into(),
            })
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let err = |m: String| EvalError::Parse { line: i + 1, message: m };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 10 {
            return Err(err(format!("expected 10 fields, found {}", f.len())));
        }
        let num = |s: &str| s.parse::<usize>().map_err(|_| err(format!("bad count {s:?}")));
        let pct = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad percentage {s:?}")));
        rows.push(CsvRow {
            method: f[0].to_string(),
            hit_percent: [pct(f[1])?, pct(f[2])?, pct(f[3])?],
            median_rank: f[4].parse().map_err(err)?,
            cases: num(f[5])?,
            hits: [num(f[6])?, num(f[7])?, num(f[8])?],
            incomplete: num(f[9])?,
        });
    }
    Ok(rows)
}

/// Parses the structured-text report back.
pub fn parse_report_text(text: &str) -> Result<EvalReport, EvalError> {
    let mut lines = text.lines().enumerate();
    if lines.next().map(|(_, l)| l) != Some(REPORT_MAGIC) {
        return Err(EvalError::Parse {
            line: 1,
            message: "not a report file".into(),
        });
    }
    let mut report = EvalReport::default();
    for (i, line) in lines {
        let err = |m: &str| EvalError::Parse {
            line: i + 1,
            message: m.to_string(),
        };
        let f: Vec<&str> = line.split('\t').collect();
        match f.as_slice() {
            ["meta", k, v] => {
                report.metadata.insert(k.to_string(), v.to_string());
            }
            ["override", c, r, v] => {
                report.overrides.push((c.to_string(), r.parse().map_err(|_| err("bad rank"))?, v.to_string()));
            }
            ["method", label, rest @ ..] => {
                let get = |key: &str| {
                    rest.iter()
                        .find_map(|kv| kv.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
                        .ok_or_else(|| err(&format!("missing {key}")))
                };
                let hits: Vec<usize> = get("hits")?
                    .split(',')
                    .map(|h| h.parse().map_err(|_| err("bad hits")))
                    .collect::<Result<_, _>>()?;
                if hits.len() != 3 {
                    return Err(err("hits needs three counts"));
                }
                report.methods.push(MethodReport {
                    method: label.to_string(),
                    cases: get("cases")?.parse().map_err(|_| err("bad cases"))?,
                    hits: [hits[0], hits[1], hits[2]],
                    median_rank: get("MR")?.parse().map_err(|m: String| err(&m))?,
                    ranks: Vec::new(),
                    incomplete: Vec::new(),
                });
            }
            ["rank", label, case, r] => {
                let m = report.methods.iter_mut().rev().find(|m| m.method == *label).ok_or_else(|| err("rank before method"))?;
                let rank = if *r == "MISS" { None } else { Some(r.parse().map_err(|_| err("bad rank"))?) };
                m.ranks.push((case.to_string(), rank));
            }
            ["incomplete", label, case] => {
                let m = report.methods.iter_mut().rev().find(|m| m.method == *label).ok_or_else(|| err("incomplete before method"))?;
                m.incomplete.push(case.to_string());
            }
            _ => return Err(err("unrecognized line")),
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(ranks: &[Option<usize>]) -> (Vec<PredictionRecord>, BTreeMap<String, BTreeSet<String>>, MatchRule) {
        let mut rule = MatchRule::default();
        let mut gold = BTreeMap::new();
        let mut records = Vec::new();
        for (i, r) in ranks.iter().enumerate() {
            let case = format!("c{i:03}");
            let code = format!("OMIM:{i}");
            rule.add_names(&code, [format!("Disease {i}")]);
            gold.insert(case.clone(), [code].into());
            let preds: Vec<String> = (1..=10)
                .map(|k| if Some(k) == *r { format!("Disease {i}") } else { format!("Other {k}") })
                .collect();
            records.push(PredictionRecord::new(case, preds, "m"));
        }
        (records, gold, rule)
    }

    #[test]
    fn one_five_miss() {
        let (r, g, rule) = setup(&[Some(1), Some(5), None]);
        let rep = compute_metrics(&r, &g, &rule).unwrap();
        assert_eq!(rep.hits, [1, 1, 2]);
        assert_eq!(format!("{:.1}", rep.hit_percent(0)), "33.3");
        assert_eq!(format!("{:.1}", rep.hit_percent(2)), "66.7");
        assert_eq!(rep.median_rank, MedianRank::Rank(5.0));
    }

    #[test]
    fn all_first() {
        let (r, g, rule) = setup(&[Some(1); 4]);
        let rep = compute_metrics(&r, &g, &rule).unwrap();
        assert_eq!(rep.hit_percent(0), 100.0);
        assert_eq!(rep.median_rank, MedianRank::Rank(1.0));
    }

    #[test]
    fn median_conventions() {
        assert_eq!(median_rank(&[Some(1), Some(4)]), MedianRank::Rank(2.5));
        assert_eq!(median_rank(&[Some(2), None]), MedianRank::Rank(2.0));
        assert_eq!(median_rank(&[Some(2), None, None]), MedianRank::Beyond(10));
        assert_eq!(median_rank(&[None]).to_string(), ">10");
    }

    #[test]
    fn duplicate_and_missing_gold_are_errors() {
        let (mut r, g, rule) = setup(&[Some(1), Some(2)]);
        r.push(r[0].clone());
        assert!(matches!(compute_metrics(&r, &g, &rule), Err(EvalError::DuplicateRecord(_))));
        let (mut r, g, rule) = setup(&[Some(1)]);
        r[0].case_id = "zzz".into();
        assert!(matches!(compute_metrics(&r, &g, &rule), Err(EvalError::MissingGold(_))));
    }

    #[test]
    fn only_top_ten_count() {
        let (mut r, g, rule) = setup(&[None]);
        r[0].ranked_predictions.push("Disease 0".into());
        let rep = compute_metrics(&r, &g, &rule).unwrap();
        assert_eq!(rep.ranks[0].1, None);
    }

    #[test]
    fn reports_round_trip() {
        let (r, g, rule) = setup(&[Some(1), Some(3), None, Some(7), None, None]);
        let mut m = compute_metrics(&r, &g, &rule).unwrap();
        m.incomplete = vec!["c002".into()];
        let mut report = EvalReport::default();
        report.metadata.insert("graph_version".into(), "hp@abc".into());
        report.overrides.push(("c001".into(), 2, "accept".into()));
        report.methods.push(m.clone());

        let text = render_report(&report, ReportFormat::Text);
        assert_eq!(parse_report_text(&text).unwrap(), report);

        let csv = render_report(&report, ReportFormat::Csv);
        assert!(csv.contains("m,16.7,33.3,50.0,7.0,6,1,2,3,1"), "{csv}");
        let rows = parse_report_csv(&csv).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].hits, m.hits);
        assert_eq!(rows[0].cases, m.cases);
        assert_eq!(rows[0].median_rank, m.median_rank);
        for i in 0..3 {
            assert_eq!(format!("{:.1}", rows[0].hit_percent[i]), format!("{:.1}", m.hit_percent(i)));
        }
    }

    #[test]
    fn record_dedups_keeping_first() {
        let r = PredictionRecord::new("c", ["A".to_string(), "b".into(), "a".into(), "".into()], "m");
        assert_eq!(r.ranked_predictions, ["A", "b"]);
    }
}
