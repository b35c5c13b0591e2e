use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use super::OmegaInvariants;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Invariant {
    Omega1,
    Omega2,
    Omega3,
}

impl Invariant {
    pub const ALL: [Invariant; 3] = [Invariant::Omega1, Invariant::Omega2, Invariant::Omega3];
}

impl fmt::Display for Invariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Invariant::Omega1 => "omega1",
            Invariant::Omega2 => "omega2",
            Invariant::Omega3 => "omega3",
        })
    }
}

impl FromStr for Invariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "omega1" => Ok(Invariant::Omega1),
            "omega2" => Ok(Invariant::Omega2),
            "omega3" => Ok(Invariant::Omega3),
            other => Err(Error::invalid(format!("unknown invariant {other:?}"))),
        }
    }
}

/// Population statistics of one invariant after nonphysical filtering.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionSummary {
    pub invariant: Invariant,
    /// Retained (valid) entries.
    pub count: usize,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    /// `bins + 1` uniformly spaced edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// Entries dropped as nonphysical.
    pub omitted_count: usize,
}

impl DistributionSummary {
    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn population(&self) -> usize {
        self.count + self.omitted_count
    }

    pub fn omitted_fraction(&self) -> f64 {
        self.omitted_count as f64 / self.population() as f64
    }
}

/// Summarizes one invariant; the histogram spans the retained min..max.
pub fn summarize(
    population: &[OmegaInvariants],
    bins: usize,
    which: Invariant,
) -> Result<DistributionSummary> {
    summarize_in_range(population, bins, which, None)
}

/// Like [`summarize`] but with an explicit histogram range, so that two
/// populations can share bin edges. Values outside the range are left out
/// of the histogram but still enter the mean and standard deviation.
pub fn summarize_in_range(
    population: &[OmegaInvariants],
    bins: usize,
    which: Invariant,
    range: Option<(f64, f64)>,
) -> Result<DistributionSummary> {
    if population.is_empty() {
        return Err(Error::invalid("population is empty"));
    }
    if bins == 0 {
        return Err(Error::invalid("bin count must be positive"));
    }
    let values: Vec<f64> = population
        .iter()
        .filter(|p| p.is_valid())
        .map(|p| p.get(which))
        .collect();
    if values.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    let omitted_count = population.len() - values.len();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();

    let (mut lo, mut hi) = match range {
        Some((lo, hi)) => {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::invalid(format!("bad histogram range [{lo}, {hi}]")));
            }
            (lo, hi)
        }
        None => values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v))),
    };
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins)
        .map(|i| if i == bins { hi } else { lo + width * i as f64 })
        .collect();
    let mut counts = vec![0usize; bins];
    for &v in &values {
        if v < lo || v > hi {
            continue;
        }
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    Ok(DistributionSummary {
        invariant: which,
        count: values.len(),
        mean,
        std,
        edges,
        counts,
        omitted_count,
    })
}

/// Result of comparing a candidate population against a reference.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub invariant: Invariant,
    /// `candidate.mean - reference.mean`.
    pub delta_mean: f64,
    /// `candidate.std / reference.std`; 1 when both are zero.
    pub std_ratio: f64,
    /// Overlap of the two normalized histograms, in `[0, 1]`.
    pub intersection: f64,
    pub reference_mean: f64,
    pub reference_std: f64,
    pub candidate_mean: f64,
    pub candidate_std: f64,
}

impl Comparison {
    /// The generated-vs-real signature: lower mean and larger spread.
    pub fn lower_mean_wider_spread(&self) -> bool {
        self.candidate_mean <= self.reference_mean && self.candidate_std >= self.reference_std
    }
}

pub fn compare(reference: &DistributionSummary, candidate: &DistributionSummary) -> Result<Comparison> {
    if reference.invariant != candidate.invariant {
        return Err(Error::invalid(format!(
            "cannot compare {} with {}",
            reference.invariant, candidate.invariant
        )));
    }
    let std_ratio = if reference.std == 0.0 && candidate.std == 0.0 {
        1.0
    } else {
        candidate.std / reference.std
    };
    Ok(Comparison {
        invariant: reference.invariant,
        delta_mean: candidate.mean - reference.mean,
        std_ratio,
        intersection: histogram_intersection(reference, candidate),
        reference_mean: reference.mean,
        reference_std: reference.std,
        candidate_mean: candidate.mean,
        candidate_std: candidate.std,
    })
}

/// `∫ min(f_a, f_b)` of the piecewise-constant densities of two histograms.
/// With identical edges this is `Σ min(p_a, p_b)` over bins.
fn histogram_intersection(a: &DistributionSummary, b: &DistributionSummary) -> f64 {
    let ta: usize = a.counts.iter().sum();
    let tb: usize = b.counts.iter().sum();
    if ta == 0 || tb == 0 {
        return 0.0;
    }
    if a.edges == b.edges {
        let s: f64 = a
            .counts
            .iter()
            .zip(&b.counts)
            .map(|(&x, &y)| (x as f64 / ta as f64).min(y as f64 / tb as f64))
            .sum();
        return s.min(1.0);
    }
    let density = |h: &DistributionSummary, total: usize, x: f64| -> f64 {
        let (lo, hi) = (h.edges[0], h.edges[h.edges.len() - 1]);
        if x < lo || x >= hi {
            return 0.0;
        }
        let i = h.edges.partition_point(|&e| e <= x) - 1;
        let i = i.min(h.counts.len() - 1);
        h.counts[i] as f64 / (total as f64 * (h.edges[i + 1] - h.edges[i]))
    };
    let mut cuts: Vec<f64> = a.edges.iter().chain(&b.edges).copied().collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut s = 0.0;
    for w in cuts.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        if x1 <= x0 {
            continue;
        }
        let mid = 0.5 * (x0 + x1);
        s += density(a, ta, mid).min(density(b, tb, mid)) * (x1 - x0);
    }
    s.clamp(0.0, 1.0)
}

/// Writes the summary as CSV: a statistics header block followed by one row
/// per histogram bin.
pub fn write_summary_csv<W: Write>(mut out: W, s: &DistributionSummary) -> std::io::Result<()> {
    writeln!(out, "invariant,count,mean,std,omitted_count")?;
    writeln!(out, "{},{},{},{},{}", s.invariant, s.count, s.mean, s.std, s.omitted_count)?;
    writeln!(out, "lower_edge,upper_edge,count")?;
    for (i, c) in s.counts.iter().enumerate() {
        writeln!(out, "{},{},{}", s.edges[i], s.edges[i + 1], c)?;
    }
    Ok(())
}

fn parse_field<T: FromStr>(line: usize, field: &str) -> Result<T> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::invalid(format!("summary line {line}: cannot parse {field:?}")))
}

/// Reads a summary written by [`write_summary_csv`].
pub fn read_summary_csv<R: BufRead>(input: R) -> Result<DistributionSummary> {
    let lines: Vec<String> = input.lines().collect::<std::io::Result<_>>()?;
    let expect = |i: usize, header: &str| -> Result<()> {
        match lines.get(i) {
            Some(l) if l.trim() == header => Ok(()),
            _ => Err(Error::invalid(format!("summary line {}: expected {header:?}", i + 1))),
        }
    };
    expect(0, "invariant,count,mean,std,omitted_count")?;
    let stats: Vec<&str> = lines
        .get(1)
        .ok_or_else(|| Error::invalid("summary line 2 missing"))?
        .split(',')
        .collect();
    if stats.len() != 5 {
        return Err(Error::invalid("summary line 2: expected 5 fields"));
    }
    expect(2, "lower_edge,upper_edge,count")?;
    let mut edges = Vec::new();
    let mut counts = Vec::new();
    for (i, l) in lines.iter().enumerate().skip(3) {
        if l.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = l.split(',').collect();
        if f.len() != 3 {
            return Err(Error::invalid(format!("summary line {}: expected 3 fields", i + 1)));
        }
        let lo: f64 = parse_field(i + 1, f[0])?;
        if edges.is_empty() {
            edges.push(lo);
        } else if edges.last() != Some(&lo) {
            return Err(Error::invalid(format!("summary line {}: bins are not contiguous", i + 1)));
        }
        edges.push(parse_field(i + 1, f[1])?);
        counts.push(parse_field(i + 1, f[2])?);
    }
    if counts.is_empty() {
        return Err(Error::invalid("summary has no bins"));
    }
    Ok(DistributionSummary {
        invariant: stats[0].trim().parse()?,
        count: parse_field(2, stats[1])?,
        mean: parse_field(2, stats[2])?,
        std: parse_field(2, stats[3])?,
        edges,
        counts,
        omitted_count: parse_field(2, stats[4])?,
    })
}

pub fn write_comparison_csv<W: Write>(mut out: W, c: &Comparison) -> std::io::Result<()> {
    writeln!(
        out,
        "invariant,delta_mean,std_ratio,intersection,reference_mean,reference_std,candidate_mean,candidate_std"
    )?;
    writeln!(
        out,
        "{},{},{},{},{},{},{},{}",
        c.invariant,
        c.delta_mean,
        c.std_ratio,
        c.intersection,
        c.reference_mean,
        c.reference_std,
        c.candidate_mean,
        c.candidate_std
    )
}
