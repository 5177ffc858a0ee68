use rand::Rng;
use rand_distr::{Beta, Cauchy, Distribution, Exp, Gamma, LogNormal, Normal, Triangular, Uniform, Weibull};
use serde::{Deserialize, Serialize};

use super::GenError;
use crate::seed::{Seed, SeedRng};
use crate::stats::SeriesStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiFamily {
    Boxplot,
    Violin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesGenerator {
    Normal,
    LogNormal,
    Exponential,
    Mixed,
    Gamma,
    Beta,
    Weibull,
    Cauchy,
    Uniform,
    Triangular,
}

impl SeriesGenerator {
    pub const BOXPLOT: [SeriesGenerator; 4] = [
        SeriesGenerator::Normal,
        SeriesGenerator::LogNormal,
        SeriesGenerator::Exponential,
        SeriesGenerator::Mixed,
    ];

    pub const VIOLIN: [SeriesGenerator; 10] = [
        SeriesGenerator::Normal,
        SeriesGenerator::LogNormal,
        SeriesGenerator::Exponential,
        SeriesGenerator::Mixed,
        SeriesGenerator::Gamma,
        SeriesGenerator::Beta,
        SeriesGenerator::Weibull,
        SeriesGenerator::Cauchy,
        SeriesGenerator::Uniform,
        SeriesGenerator::Triangular,
    ];

    pub fn for_family(family: MultiFamily) -> &'static [SeriesGenerator] {
        match family {
            MultiFamily::Boxplot => &Self::BOXPLOT,
            MultiFamily::Violin => &Self::VIOLIN,
        }
    }

    pub fn display_name(&self) -> &'static str {
        match self {
            SeriesGenerator::Normal => "Normal",
            SeriesGenerator::LogNormal => "Log-Normal",
            SeriesGenerator::Exponential => "Exponential",
            SeriesGenerator::Mixed => "Mixed",
            SeriesGenerator::Gamma => "Gamma",
            SeriesGenerator::Beta => "Beta",
            SeriesGenerator::Weibull => "Weibull",
            SeriesGenerator::Cauchy => "Cauchy",
            SeriesGenerator::Uniform => "Uniform",
            SeriesGenerator::Triangular => "Triangular",
        }
    }

    /// `n` draws with a random location and scale.
    fn sample(&self, n: usize, rng: &mut SeedRng) -> Vec<f64> {
        let loc = rng.random_range(0.0..50.0);
        let scale = rng.random_range(1.0..10.0);
        let base: Vec<f64> = match self {
            SeriesGenerator::Normal => draw(Normal::new(0.0, 1.0).unwrap(), n, rng),
            SeriesGenerator::LogNormal => {
                let s = rng.random_range(0.2..0.8);
                draw(LogNormal::new(0.0, s).unwrap(), n, rng)
            }
            SeriesGenerator::Exponential => draw(Exp::new(1.0).unwrap(), n, rng),
            SeriesGenerator::Mixed => {
                let a = Normal::new(0.0, 1.0).unwrap();
                let b = Normal::new(rng.random_range(2.0..5.0), rng.random_range(0.5..2.0)).unwrap();
                (0..n)
                    .map(|_| if rng.random_bool(0.5) { a.sample(rng) } else { b.sample(rng) })
                    .collect()
            }
            SeriesGenerator::Gamma => {
                let k = rng.random_range(1.0..5.0);
                draw(Gamma::new(k, 1.0).unwrap(), n, rng)
            }
            SeriesGenerator::Beta => {
                let a = rng.random_range(0.5..5.0);
                let b = rng.random_range(0.5..5.0);
                draw(Beta::new(a, b).unwrap(), n, rng).into_iter().map(|v| 4.0 * v).collect()
            }
            SeriesGenerator::Weibull => {
                let k = rng.random_range(0.8..3.0);
                draw(Weibull::new(1.0, k).unwrap(), n, rng)
            }
            SeriesGenerator::Cauchy => draw(Cauchy::new(0.0, 0.5).unwrap(), n, rng),
            SeriesGenerator::Uniform => draw(Uniform::new(-1.0, 1.0).unwrap(), n, rng),
            SeriesGenerator::Triangular => {
                let mode = rng.random_range(-1.0..1.0);
                draw(Triangular::new(-1.0, 1.0, mode).unwrap(), n, rng)
            }
        };
        base.into_iter().map(|v| loc + scale * v).collect()
    }
}

fn draw<D: Distribution<f64>>(d: D, n: usize, rng: &mut SeedRng) -> Vec<f64> {
    (0..n).map(|_| d.sample(rng)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleSeries {
    /// 1-based x position of the box or violin.
    pub position: usize,
    pub generator: SeriesGenerator,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiSeriesMetadata {
    pub family: MultiFamily,
    /// Distribution family shared by every series of the plot; parameters
    /// differ per series.
    pub generator: SeriesGenerator,
    pub series: Vec<SingleSeries>,
    pub per_series_stats: Vec<SeriesStats>,
}

impl MultiSeriesMetadata {
    pub fn validate(&self) -> Result<(), GenError> {
        if !(5..=10).contains(&self.series.len()) {
            return Err(GenError::Invariant(format!("{} series, expected 5-10", self.series.len())));
        }
        if self.per_series_stats.len() != self.series.len() {
            return Err(GenError::Invariant("one stats record per series".into()));
        }
        for (i, (s, st)) in self.series.iter().zip(&self.per_series_stats).enumerate() {
            if s.position != i + 1 {
                return Err(GenError::Invariant("positions must be 1..=n".into()));
            }
            if !(50..=100).contains(&s.values.len()) {
                return Err(GenError::Invariant(format!("{} values, expected 50-100", s.values.len())));
            }
            if !SeriesGenerator::for_family(self.family).contains(&s.generator) {
                return Err(GenError::Invariant(format!("{:?} not allowed for {:?}", s.generator, self.family)));
            }
            if SeriesStats::of(&s.values) != *st {
                return Err(GenError::Invariant("stored stats differ from recomputed stats".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MultiSeriesConfig {
    pub series: (usize, usize),
    pub points: (usize, usize),
}

impl Default for MultiSeriesConfig {
    fn default() -> Self {
        MultiSeriesConfig {
            series: (5, 10),
            points: (50, 100),
        }
    }
}

pub fn gen_multiseries(seed: Seed, family: MultiFamily, cfg: &MultiSeriesConfig) -> Result<MultiSeriesMetadata, GenError> {
    if cfg.series.0 < 5 || cfg.series.1 > 10 || cfg.series.0 > cfg.series.1 {
        return Err(GenError::InvalidParam("series count must lie in [5, 10]".into()));
    }
    if cfg.points.0 < 50 || cfg.points.1 > 100 || cfg.points.0 > cfg.points.1 {
        return Err(GenError::InvalidParam("points per series must lie in [50, 100]".into()));
    }
    let mut rng = seed.child("multiseries").rng();
    let options = SeriesGenerator::for_family(family);
    let generator = options[rng.random_range(0..options.len())];
    let count = rng.random_range(cfg.series.0..=cfg.series.1);
    let series: Vec<SingleSeries> = (0..count)
        .map(|i| {
            let n = rng.random_range(cfg.points.0..=cfg.points.1);
            SingleSeries {
                position: i + 1,
                generator,
                values: generator.sample(n, &mut rng),
            }
        })
        .collect();
    let per_series_stats = series.iter().map(|s| SeriesStats::of(&s.values)).collect();
    let meta = MultiSeriesMetadata {
        family,
        generator,
        series,
        per_series_stats,
    };
    meta.validate()?;
    Ok(meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invariants_hold() {
        for s in 0..50 {
            for fam in [MultiFamily::Boxplot, MultiFamily::Violin] {
                let m = gen_multiseries(Seed(s), fam, &MultiSeriesConfig::default()).unwrap();
                m.validate().unwrap();
                assert_eq!(m, gen_multiseries(Seed(s), fam, &MultiSeriesConfig::default()).unwrap());
            }
        }
    }

    #[test]
    fn boxplots_never_cauchy() {
        for s in 0..200 {
            let m = gen_multiseries(Seed(s), MultiFamily::Boxplot, &MultiSeriesConfig::default()).unwrap();
            assert!(m.series.iter().all(|x| x.generator != SeriesGenerator::Cauchy));
        }
    }

    #[test]
    fn violins_use_the_wider_list() {
        let mut seen = std::collections::BTreeSet::new();
        for s in 0..300 {
            seen.insert(gen_multiseries(Seed(s), MultiFamily::Violin, &MultiSeriesConfig::default()).unwrap().generator);
        }
        assert_eq!(seen.len(), 10);
    }
}
