//! Plot families, styles and the per-sample record stored in a dataset.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::augment::AugmentRecord;
use crate::generators::{ClusterAlgorithm, ClusterMetadata, HistogramMetadata, MultiSeriesMetadata, SeriesMetadata};
use crate::seed::Seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Series,
    Clusters,
    Histogram,
    Boxplot,
    Violin,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Clusters,
        Family::Histogram,
        Family::Series,
        Family::Boxplot,
        Family::Violin,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Series => "series",
            Family::Clusters => "clusters",
            Family::Histogram => "histogram",
            Family::Boxplot => "boxplot",
            Family::Violin => "violin",
        }
    }

    /// Column heading used in summary tables.
    pub fn heading(&self) -> &'static str {
        match self {
            Family::Series => "Series",
            Family::Clusters => "Clustering",
            Family::Histogram => "Histograms",
            Family::Boxplot => "Boxplots",
            Family::Violin => "Violins",
        }
    }

    pub fn parse(s: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.as_str() == s)
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Regular,
    Augmented,
}

impl Split {
    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Regular => "regular",
            Split::Augmented => "augmented",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotColor {
    Blue,
    Black,
    Red,
    Green,
    Orange,
}

impl PlotColor {
    pub const ALL: [PlotColor; 5] = [PlotColor::Blue, PlotColor::Black, PlotColor::Red, PlotColor::Green, PlotColor::Orange];
    /// Line colours offered for series plots.
    pub const SERIES: [PlotColor; 4] = [PlotColor::Blue, PlotColor::Black, PlotColor::Red, PlotColor::Green];

    pub fn rgb(&self) -> [u8; 3] {
        match self {
            PlotColor::Blue => [31, 119, 180],
            PlotColor::Black => [0, 0, 0],
            PlotColor::Red => [214, 39, 40],
            PlotColor::Green => [44, 160, 44],
            PlotColor::Orange => [255, 127, 14],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PlotColor::Blue => "Blue",
            PlotColor::Black => "Black",
            PlotColor::Red => "Red",
            PlotColor::Green => "Green",
            PlotColor::Orange => "Orange",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkerKind {
    Circle,
    Square,
    Triangle,
    Diamond,
    Cross,
    Plus,
    Star,
}

impl MarkerKind {
    pub const ALL: [MarkerKind; 7] = [
        MarkerKind::Circle,
        MarkerKind::Square,
        MarkerKind::Triangle,
        MarkerKind::Diamond,
        MarkerKind::Cross,
        MarkerKind::Plus,
        MarkerKind::Star,
    ];
}

/// Visual settings. Fields a family does not use stay `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotStyle {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<PlotColor>,
    pub grid: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marker: Option<MarkerKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unique_markers: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub legend: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fill: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin_count: Option<usize>,
}

impl PlotStyle {
    pub fn plain(color: PlotColor, grid: bool) -> Self {
        PlotStyle {
            color: Some(color),
            grid,
            marker: None,
            unique_markers: None,
            legend: None,
            fill: None,
            bin_count: None,
        }
    }

    /// Whether exactly the fields used by `family` are set.
    pub fn fits(&self, family: Family) -> bool {
        let cluster_fields = [
            self.marker.is_some(),
            self.unique_markers.is_some(),
            self.legend.is_some(),
            self.fill.is_some(),
        ];
        match family {
            Family::Clusters => self.color.is_none() && cluster_fields.iter().all(|&b| b) && self.bin_count.is_none(),
            Family::Histogram => self.color.is_some() && !cluster_fields.iter().any(|&b| b) && self.bin_count.is_some(),
            _ => self.color.is_some() && !cluster_fields.iter().any(|&b| b) && self.bin_count.is_none(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "data", rename_all = "snake_case")]
pub enum SampleMetadata {
    Series(SeriesMetadata),
    Clusters(ClusterMetadata),
    Histogram(HistogramMetadata),
    Boxplot(MultiSeriesMetadata),
    Violin(MultiSeriesMetadata),
}

impl SampleMetadata {
    pub fn family(&self) -> Family {
        match self {
            SampleMetadata::Series(_) => Family::Series,
            SampleMetadata::Clusters(_) => Family::Clusters,
            SampleMetadata::Histogram(_) => Family::Histogram,
            SampleMetadata::Boxplot(_) => Family::Boxplot,
            SampleMetadata::Violin(_) => Family::Violin,
        }
    }

    pub fn as_series(&self) -> Option<&SeriesMetadata> {
        match self {
            SampleMetadata::Series(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_clusters(&self) -> Option<&ClusterMetadata> {
        match self {
            SampleMetadata::Clusters(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_histogram(&self) -> Option<&HistogramMetadata> {
        match self {
            SampleMetadata::Histogram(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_multi(&self) -> Option<&MultiSeriesMetadata> {
        match self {
            SampleMetadata::Boxplot(m) | SampleMetadata::Violin(m) => Some(m),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: Uuid,
    pub family: Family,
    pub split: Split,
    pub seed: Seed,
    pub style: PlotStyle,
    /// Image path relative to the dataset root.
    pub image_path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub augmentation: Option<AugmentRecord>,
    pub metadata: SampleMetadata,
}

impl SampleRecord {
    /// Plot features used to break scores down, as raw key/value pairs.
    pub fn feature_tags(&self) -> BTreeMap<String, String> {
        let mut tags = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            tags.insert(k.to_string(), v);
        };
        if let Some(c) = self.style.color {
            put("color", c.name().to_string());
        }
        if self.family != Family::Clusters {
            put("grid", bool_name(self.style.grid));
        }
        if let Some(a) = &self.augmentation {
            put("augment", a.kind.display_name().to_string());
        }
        match &self.metadata {
            SampleMetadata::Series(m) => put("walk", m.kind.as_str().to_string()),
            SampleMetadata::Clusters(m) => {
                put("n_centers", m.n_clusters.to_string());
                put("algorithm", m.algorithm.display_name().to_string());
                if m.algorithm == ClusterAlgorithm::Kmeans {
                    if let Some(k) = m.algorithm_params.get("n_clusters") {
                        put("algorithm_params", format!("n_clusters={}", *k as i64));
                    }
                }
                if let Some(b) = self.style.unique_markers {
                    put("unique_markers", bool_name(b));
                }
                if let Some(b) = self.style.legend {
                    put("legend", bool_name(b));
                }
                if let Some(b) = self.style.fill {
                    put("fill", bool_name(b));
                }
            }
            SampleMetadata::Histogram(m) => put("trend", m.distribution.display_name().to_string()),
            SampleMetadata::Boxplot(m) | SampleMetadata::Violin(m) => {
                put("n_series", m.series.len().to_string());
                put("generator", m.generator.display_name().to_string());
            }
        }
        tags
    }
}

fn bool_name(b: bool) -> String {
    if b { "True" } else { "False" }.to_string()
}
