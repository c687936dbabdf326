use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{score_checkmarks, CcGrade, CheckMarks, EvalError};

/// Scored check marks for one (file, model, method) pass@1 run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodRecord {
    pub file_id: String,
    pub model: String,
    pub method: String,
    pub marks: CheckMarks,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileFeatures {
    pub loc: usize,
    pub cc: CcGrade,
    pub tasks: u32,
}

/// Lower bounds of the LOC bands after the first one. `[100, 200, 300]`
/// gives `<100`, `100-199`, `200-299` and `>=300`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocBands(Vec<usize>);

impl Default for LocBands {
    fn default() -> Self {
        Self(vec![100, 200, 300])
    }
}

impl LocBands {
    pub fn new(bounds: Vec<usize>) -> Option<Self> {
        let increasing = bounds.windows(2).all(|w| w[0] < w[1]);
        (!bounds.is_empty() && increasing && bounds[0] > 0).then_some(Self(bounds))
    }

    pub fn bounds(&self) -> &[usize] {
        &self.0
    }

    /// Band position and label for a line count.
    pub fn classify(&self, loc: usize) -> (usize, String) {
        let idx = self.0.iter().take_while(|b| loc >= **b).count();
        let label = match idx {
            0 => format!("<{}", self.0[0]),
            i if i == self.0.len() => format!(">={}", self.0[i - 1]),
            i => format!("{}-{}", self.0[i - 1], self.0[i] - 1),
        };
        (idx, label)
    }
}

/// Per-flag sums over a set of files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CheckMarkTotals {
    pub first: u32,
    pub second: u32,
    pub third: u32,
    pub files: u32,
}

impl CheckMarkTotals {
    pub fn add(&mut self, marks: &CheckMarks) {
        let [a, b, c] = marks.flags();
        self.first += u32::from(a);
        self.second += u32::from(b);
        self.third += u32::from(c);
        self.files += 1;
    }

    pub fn total(&self) -> u32 {
        self.first + self.second + self.third
    }

    /// Marks earned out of the three possible per file, in percent.
    pub fn pass_rate(&self) -> f64 {
        if self.files == 0 {
            return 0.0;
        }
        100.0 * f64::from(self.total()) / (3.0 * f64::from(self.files))
    }

    fn from_records<'a>(records: impl IntoIterator<Item = &'a MethodRecord>) -> Self {
        let mut t = Self::default();
        for r in records {
            t.add(&r.marks);
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketRow {
    pub bucket: String,
    pub vapu: u32,
    pub baseline: u32,
}

impl BucketRow {
    pub fn delta(&self) -> i64 {
        i64::from(self.vapu) - i64::from(self.baseline)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeltaTable {
    pub dimension: String,
    pub rows: Vec<BucketRow>,
}

impl DeltaTable {
    pub fn row(&self, bucket: &str) -> Option<&BucketRow> {
        self.rows.iter().find(|r| r.bucket == bucket)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelTotals {
    pub model: String,
    pub vapu: CheckMarkTotals,
    pub baseline: CheckMarkTotals,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub vapu_method: String,
    pub baseline_method: String,
    pub vapu: CheckMarkTotals,
    pub baseline: CheckMarkTotals,
    pub per_model: Vec<ModelTotals>,
    pub by_loc: DeltaTable,
    pub by_cc: DeltaTable,
    pub by_tasks: DeltaTable,
}

impl ComparisonReport {
    /// VAPU total minus baseline total.
    pub fn delta(&self) -> i64 {
        i64::from(self.vapu.total()) - i64::from(self.baseline.total())
    }

    pub fn model(&self, model: &str) -> Option<&ModelTotals> {
        self.per_model.iter().find(|m| m.model == model)
    }

    /// One row per figure: `section,key,vapu,baseline,delta`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut row = |section: &str, key: &str, a: String, b: String, d: String| {
            w.write_record([section, key, &a, &b, &d]).expect("writing to memory");
        };
        row("section", "key", self.vapu_method.clone(), self.baseline_method.clone(), "delta".into());
        let totals = |row: &mut dyn FnMut(&str, &str, String, String, String), section: &str, v: &CheckMarkTotals, b: &CheckMarkTotals| {
            for (key, x, y) in [
                ("first", v.first, b.first),
                ("second", v.second, b.second),
                ("third", v.third, b.third),
                ("total", v.total(), b.total()),
            ] {
                row(section, key, x.to_string(), y.to_string(), (i64::from(x) - i64::from(y)).to_string());
            }
            row(
                section,
                "pass_rate",
                format!("{:.1}", v.pass_rate()),
                format!("{:.1}", b.pass_rate()),
                format!("{:.1}", v.pass_rate() - b.pass_rate()),
            );
        };
        totals(&mut row, "overall", &self.vapu, &self.baseline);
        for m in &self.per_model {
            totals(&mut row, &format!("model:{}", m.model), &m.vapu, &m.baseline);
        }
        for table in [&self.by_loc, &self.by_cc, &self.by_tasks] {
            for r in &table.rows {
                row(&table.dimension, &r.bucket, r.vapu.to_string(), r.baseline.to_string(), r.delta().to_string());
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv output is utf-8")
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        let (v, b) = (&self.vapu_method, &self.baseline_method);
        let _ = writeln!(out, "Check marks: {v} {} vs {b} {} (delta {:+})", self.vapu.total(), self.baseline.total(), self.delta());
        for (name, t) in [(v, &self.vapu), (b, &self.baseline)] {
            let _ = writeln!(
                out,
                "  {name}: first {} second {} third {} over {} files, pass rate {:.1}%",
                t.first,
                t.second,
                t.third,
                t.files,
                t.pass_rate()
            );
        }
        let _ = writeln!(out, "Per model:");
        for m in &self.per_model {
            let _ = writeln!(
                out,
                "  {:<20} {v} {:>3} ({:.1}%)  {b} {:>3} ({:.1}%)  delta {:+}",
                m.model,
                m.vapu.total(),
                m.vapu.pass_rate(),
                m.baseline.total(),
                m.baseline.pass_rate(),
                i64::from(m.vapu.total()) - i64::from(m.baseline.total())
            );
        }
        for table in [&self.by_loc, &self.by_cc, &self.by_tasks] {
            let _ = writeln!(out, "By {}:", table.dimension);
            for r in &table.rows {
                let _ = writeln!(out, "  {:<10} {v} {:>3}  {b} {:>3}  delta {:+}", r.bucket, r.vapu, r.baseline, r.delta());
            }
        }
        out
    }
}

fn method_name(records: &[MethodRecord], fallback: &str) -> String {
    let names: BTreeSet<&str> = records.iter().map(|r| r.method.as_str()).collect();
    if names.len() == 1 {
        names.into_iter().next().unwrap_or(fallback).to_string()
    } else {
        fallback.to_string()
    }
}

fn bucket_table<K: Ord>(
    dimension: &str,
    vapu: &[MethodRecord],
    baseline: &[MethodRecord],
    key: impl Fn(&str) -> (K, String),
) -> DeltaTable {
    let mut buckets: BTreeMap<K, BucketRow> = BTreeMap::new();
    for (records, is_vapu) in [(vapu, true), (baseline, false)] {
        for r in records {
            let (k, label) = key(&r.file_id);
            let row = buckets.entry(k).or_insert_with(|| BucketRow {
                bucket: label,
                vapu: 0,
                baseline: 0,
            });
            let marks = score_checkmarks(&r.marks);
            if is_vapu {
                row.vapu += marks;
            } else {
                row.baseline += marks;
            }
        }
    }
    DeltaTable {
        dimension: dimension.to_string(),
        rows: buckets.into_values().collect(),
    }
}

/// Compares two run sets that scored the same (file, model) pairs.
pub fn build_comparison_report(
    vapu: &[MethodRecord],
    baseline: &[MethodRecord],
    features: &BTreeMap<String, FileFeatures>,
    bands: &LocBands,
) -> Result<ComparisonReport, EvalError> {
    if vapu.is_empty() || baseline.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let pairs = |rs: &[MethodRecord]| -> Result<BTreeSet<(String, String)>, EvalError> {
        let mut set = BTreeSet::new();
        for r in rs {
            if !set.insert((r.file_id.clone(), r.model.clone())) {
                return Err(EvalError::MismatchedFiles(format!("{} scored twice for {}", r.file_id, r.model)));
            }
        }
        Ok(set)
    };
    let (pv, pb) = (pairs(vapu)?, pairs(baseline)?);
    if let Some((file, model)) = pv.symmetric_difference(&pb).next() {
        return Err(EvalError::MismatchedFiles(format!("{file} ({model}) is missing from one run set")));
    }
    for (file, _) in &pv {
        if !features.contains_key(file) {
            return Err(EvalError::MissingFeatures(file.clone()));
        }
    }
    let feat = |file: &str| features[file];

    let models: BTreeSet<&str> = vapu.iter().map(|r| r.model.as_str()).collect();
    let per_model = models
        .into_iter()
        .map(|m| ModelTotals {
            model: m.to_string(),
            vapu: CheckMarkTotals::from_records(vapu.iter().filter(|r| r.model == m)),
            baseline: CheckMarkTotals::from_records(baseline.iter().filter(|r| r.model == m)),
        })
        .collect();

    Ok(ComparisonReport {
        vapu_method: method_name(vapu, "vapu"),
        baseline_method: method_name(baseline, "baseline"),
        vapu: CheckMarkTotals::from_records(vapu),
        baseline: CheckMarkTotals::from_records(baseline),
        per_model,
        by_loc: bucket_table("loc", vapu, baseline, |f| bands.classify(feat(f).loc)),
        by_cc: bucket_table("cc", vapu, baseline, |f| (feat(f).cc, feat(f).cc.to_string())),
        by_tasks: bucket_table("tasks", vapu, baseline, |f| (feat(f).tasks, feat(f).tasks.to_string())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(file: &str, model: &str, method: &str, marks: (bool, bool, bool)) -> MethodRecord {
        MethodRecord {
            file_id: file.into(),
            model: model.into(),
            method: method.into(),
            marks: CheckMarks::new(marks.0, marks.1, marks.2),
        }
    }

    fn features() -> BTreeMap<String, FileFeatures> {
        BTreeMap::from([
            ("small".to_string(), FileFeatures { loc: 80, cc: CcGrade::A, tasks: 1 }),
            ("big".to_string(), FileFeatures { loc: 420, cc: CcGrade::C, tasks: 3 }),
        ])
    }

    #[test]
    fn bands_label_and_order() {
        let b = LocBands::default();
        assert_eq!(b.classify(99), (0, "<100".to_string()));
        assert_eq!(b.classify(100), (1, "100-199".to_string()));
        assert_eq!(b.classify(299), (2, "200-299".to_string()));
        assert_eq!(b.classify(300), (3, ">=300".to_string()));
        assert!(LocBands::new(vec![200, 100]).is_none());
        assert!(LocBands::new(vec![]).is_none());
    }

    #[test]
    fn totals_deltas_and_buckets() {
        let vapu = [
            rec("small", "m1", "vapu", (true, true, false)),
            rec("big", "m1", "vapu", (true, true, true)),
        ];
        let zsl = [
            rec("small", "m1", "zsl", (true, true, true)),
            rec("big", "m1", "zsl", (true, false, false)),
        ];
        let r = build_comparison_report(&vapu, &zsl, &features(), &LocBands::default()).unwrap();
        assert_eq!((r.vapu.total(), r.baseline.total(), r.delta()), (5, 4, 1));
        assert_eq!(r.by_loc.row(">=300").unwrap().delta(), 2);
        assert_eq!(r.by_loc.row("<100").unwrap().delta(), -1);
        assert_eq!(r.by_cc.rows.iter().map(|x| x.bucket.as_str()).collect::<Vec<_>>(), ["A", "C"]);
        assert_eq!(r.by_tasks.row("3").unwrap().vapu, 3);
        assert_eq!(r.model("m1").unwrap().vapu.files, 2);
        assert_eq!((r.vapu_method.as_str(), r.baseline_method.as_str()), ("vapu", "zsl"));
        let csv = r.to_csv();
        assert!(csv.starts_with("section,key,vapu,zsl,delta\n"));
        assert!(csv.contains("overall,total,5,4,1\n"));
        assert!(csv.contains("loc,>=300,3,1,2\n"));
        assert!(r.summary().contains("delta +1"));
    }

    #[test]
    fn pass_rate_rounding() {
        let t = CheckMarkTotals { first: 20, second: 16, third: 10, files: 20 };
        assert_eq!(t.total(), 46);
        assert_eq!(format!("{:.1}", t.pass_rate()), "76.7");
    }

    #[test]
    fn mismatched_inputs() {
        let f = features();
        let a = [rec("small", "m1", "vapu", (true, true, true))];
        let b = [rec("big", "m1", "zsl", (true, true, true))];
        assert!(matches!(build_comparison_report(&a, &b, &f, &LocBands::default()), Err(EvalError::MismatchedFiles(_))));
        let c = [rec("other", "m1", "zsl", (true, true, true))];
        assert!(matches!(build_comparison_report(&c, &c, &f, &LocBands::default()), Err(EvalError::MissingFeatures(_))));
        assert_eq!(build_comparison_report(&[], &a, &f, &LocBands::default()), Err(EvalError::EmptyInput));
        let twice = [a[0].clone(), a[0].clone()];
        assert!(matches!(build_comparison_report(&twice, &twice, &f, &LocBands::default()), Err(EvalError::MismatchedFiles(_))));
    }
}
