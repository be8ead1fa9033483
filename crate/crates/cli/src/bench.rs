use std::fmt;
use std::path::Path;

use clonedetect_core::{detect, load_image, Method, RgbImage, Timings};
use serde::{Deserialize, Serialize};

use crate::{create_parent, BenchArgs, CliError, CliResult, TuningArgs};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MethodList(pub Vec<Method>);

pub fn parse_methods(s: &str) -> Result<MethodList, String> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(MethodList(Method::ALL.to_vec()));
    }
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let m: Method = part
            .parse()
            .map_err(|e: clonedetect_core::Error| e.to_string())?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err("no methods given".into());
    }
    Ok(MethodList(out))
}

/// Median timings of one method on one image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub image: String,
    pub method: Method,
    pub block_size: usize,
    pub matched_block_count: usize,
    pub total_time: f64,
    pub feature_time: f64,
    pub sort_time: f64,
    pub match_time: f64,
    pub filter_time: f64,
}

/// Median, averaging the middle pair for even lengths.
pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of nothing");
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Runs `method` `repeat` times on `img` and keeps the per-stage medians.
pub fn bench_cell(
    image: &str,
    img: &RgbImage,
    method: Method,
    tuning: &TuningArgs,
    repeat: usize,
) -> CliResult<BenchRow> {
    let cfg = tuning.config(method)?;
    let mut runs: Vec<Timings> = Vec::with_capacity(repeat);
    let mut count = 0;
    for _ in 0..repeat.max(1) {
        let report = detect(img, &cfg)?;
        count = report.matched_block_count;
        runs.push(report.timings);
    }
    let stage = |f: fn(&Timings) -> f64| median(&mut runs.iter().map(f).collect::<Vec<_>>());
    Ok(BenchRow {
        image: image.to_string(),
        method,
        block_size: cfg.block_size,
        matched_block_count: count,
        total_time: stage(|t| t.total),
        feature_time: stage(|t| t.feature),
        sort_time: stage(|t| t.sort),
        match_time: stage(|t| t.matching),
        filter_time: stage(|t| t.filter),
    })
}

pub fn write_csv(rows: &[BenchRow], path: &Path) -> CliResult<()> {
    create_parent(path)?;
    let out = |e: csv::Error| CliError::Output(format!("writing {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(out)?;
    for row in rows {
        w.serialize(row).map_err(out)?;
    }
    w.flush().map_err(|source| CliError::Io {
        context: format!("writing {}", path.display()),
        source,
    })
}

pub fn read_csv(path: &Path) -> CliResult<Vec<BenchRow>> {
    let err = |e: csv::Error| CliError::Output(format!("reading {}: {e}", path.display()));
    csv::Reader::from_path(path)
        .map_err(err)?
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(err)
}

/// Text table with one line per image and one column per method.
pub struct BenchTable<'a> {
    pub rows: &'a [BenchRow],
    pub methods: &'a [Method],
}

impl fmt::Display for BenchTable<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut images: Vec<&str> = Vec::new();
        for r in self.rows {
            if !images.contains(&r.image.as_str()) {
                images.push(&r.image);
            }
        }
        let cell = |img: &str, m: Method| {
            self.rows
                .iter()
                .find(|r| r.image == img && r.method == m)
                .map(|r| format!("{:.4}s n={}", r.total_time, r.matched_block_count))
                .unwrap_or_else(|| "-".into())
        };
        let first = images.iter().map(|i| i.len()).chain([5]).max().unwrap_or(5);
        let widths: Vec<usize> = self
            .methods
            .iter()
            .map(|&m| {
                images
                    .iter()
                    .map(|i| cell(i, m).len())
                    .chain([m.name().len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        write!(f, "{:<first$}", "image")?;
        for (m, w) in self.methods.iter().zip(&widths) {
            write!(f, "  {:>w$}", m.name())?;
        }
        writeln!(f)?;
        for img in &images {
            write!(f, "{img:<first$}")?;
            for (&m, w) in self.methods.iter().zip(&widths) {
                write!(f, "  {:>w$}", cell(img, m))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn image_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub fn cmd_bench(args: &BenchArgs) -> CliResult<()> {
    if args.repeat == 0 {
        return Err(CliError::Usage("--repeat must be at least 1".into()));
    }
    for &m in &args.methods.0 {
        args.tuning.config(m)?;
    }
    let mut rows = Vec::new();
    // Cells run one after another so their timings do not compete.
    for input in &args.inputs {
        let img = load_image(input)?;
        let id = image_id(input);
        for &m in &args.methods.0 {
            rows.push(bench_cell(&id, &img, m, &args.tuning, args.repeat)?);
        }
    }
    write_csv(&rows, &args.out_csv)?;
    print!(
        "{}",
        BenchTable {
            rows: &rows,
            methods: &args.methods.0
        }
    );
    Ok(())
}
