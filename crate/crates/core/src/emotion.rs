//! Valence/arousal plane semantics: quadrant categories and an eight-sector
//! adjective-cluster layout.
//!
//! Points live in the closed unit box. Quadrants assign axis points to the
//! nonnegative side, so the origin is Q1. Sectors are numbered
//! counterclockwise from the positive valence axis in 45 degree steps, which
//! puts sectors `2q` and `2q + 1` inside quadrant `q`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "(f64, f64)", into = "(f64, f64)")]
pub struct VaPoint {
    valence: f64,
    arousal: f64,
}

impl VaPoint {
    pub fn new(valence: f64, arousal: f64) -> Result<Self> {
        let ok = |v: f64| v.is_finite() && (-1.0..=1.0).contains(&v);
        if !ok(valence) || !ok(arousal) {
            return Err(Error::InvalidData(format!(
                "point ({valence}, {arousal}) lies outside the unit box"
            )));
        }
        Ok(VaPoint { valence, arousal })
    }

    pub fn valence(&self) -> f64 {
        self.valence
    }

    pub fn arousal(&self) -> f64 {
        self.arousal
    }

    /// Direction in degrees, normalized to `[0, 360)`.
    pub fn angle_degrees(&self) -> Option<f64> {
        if self.valence == 0.0 && self.arousal == 0.0 {
            return None;
        }
        let deg = self.arousal.atan2(self.valence).to_degrees();
        let deg = if deg < 0.0 { deg + 360.0 } else { deg };
        // -0.0 and rounding right below 360 both land on the positive axis.
        Some(if deg >= 360.0 { 0.0 } else { deg })
    }
}

impl TryFrom<(f64, f64)> for VaPoint {
    type Error = Error;

    fn try_from((v, a): (f64, f64)) -> Result<Self> {
        VaPoint::new(v, a)
    }
}

impl From<VaPoint> for (f64, f64) {
    fn from(p: VaPoint) -> Self {
        (p.valence, p.arousal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QuadrantLabel {
    #[serde(rename = "Q1_happy_excited")]
    HappyExcited,
    #[serde(rename = "Q2_angry_afraid")]
    AngryAfraid,
    #[serde(rename = "Q3_sad_depressed")]
    SadDepressed,
    #[serde(rename = "Q4_calm_content")]
    CalmContent,
}

impl QuadrantLabel {
    pub const ALL: [QuadrantLabel; 4] = [
        QuadrantLabel::HappyExcited,
        QuadrantLabel::AngryAfraid,
        QuadrantLabel::SadDepressed,
        QuadrantLabel::CalmContent,
    ];

    /// Zero-based quadrant index, counterclockwise from Q1.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            QuadrantLabel::HappyExcited => "Q1_happy_excited",
            QuadrantLabel::AngryAfraid => "Q2_angry_afraid",
            QuadrantLabel::SadDepressed => "Q3_sad_depressed",
            QuadrantLabel::CalmContent => "Q4_calm_content",
        }
    }

    /// Plot color: red, green, blue and yellow for Q1 to Q4.
    pub fn color(self) -> &'static str {
        match self {
            QuadrantLabel::HappyExcited => "#d62728",
            QuadrantLabel::AngryAfraid => "#2ca02c",
            QuadrantLabel::SadDepressed => "#1f77b4",
            QuadrantLabel::CalmContent => "#e6c700",
        }
    }
}

impl fmt::Display for QuadrantLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn quadrant_of(p: VaPoint) -> QuadrantLabel {
    match (p.valence >= 0.0, p.arousal >= 0.0) {
        (true, true) => QuadrantLabel::HappyExcited,
        (false, true) => QuadrantLabel::AngryAfraid,
        (false, false) => QuadrantLabel::SadDepressed,
        (true, false) => QuadrantLabel::CalmContent,
    }
}

/// How a quadrant is halved into two sectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SectorRegions {
    /// Split along the diagonal: 45 degree sectors.
    Angular,
    /// Per quadrant `[b1, b2]`: a point with `|V| < b1` and `|A| > b2` falls
    /// in the sector next to the arousal axis, anything else in the sector
    /// next to the valence axis.
    Rectangular { bounds: [[f64; 2]; 4] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HevnerLayout {
    pub labels: Vec<String>,
    pub regions: SectorRegions,
}

impl Default for HevnerLayout {
    fn default() -> Self {
        let labels = [
            "happy", "exciting", "vigorous", "dignified", "sad", "dreamy", "serene", "graceful",
        ];
        HevnerLayout {
            labels: labels.iter().map(|s| s.to_string()).collect(),
            regions: SectorRegions::Angular,
        }
    }
}

impl HevnerLayout {
    pub const SECTORS: usize = 8;

    pub fn validate(&self) -> Result<()> {
        if self.labels.len() != Self::SECTORS {
            return Err(Error::InvalidArgument(format!(
                "layout needs {} labels, got {}",
                Self::SECTORS,
                self.labels.len()
            )));
        }
        if let SectorRegions::Rectangular { bounds } = &self.regions {
            if bounds.iter().flatten().any(|b| !(0.0..=1.0).contains(b)) {
                return Err(Error::InvalidArgument("rectangular bounds must lie in [0, 1]".into()));
            }
        }
        Ok(())
    }

    pub fn label(&self, sector: usize) -> &str {
        &self.labels[sector]
    }
}

/// Sector index in `0..8`. The origin has no direction in angular mode.
pub fn hevner_sector(p: VaPoint, layout: &HevnerLayout) -> Result<usize> {
    layout.validate()?;
    match &layout.regions {
        SectorRegions::Angular => {
            let angle = p
                .angle_degrees()
                .ok_or_else(|| Error::InvalidArgument("the origin has no sector in angular mode".into()))?;
            Ok(((angle / 45.0).floor() as usize).min(7))
        }
        SectorRegions::Rectangular { bounds } => {
            let q = quadrant_of(p).index();
            let [b1, b2] = bounds[q];
            let near_arousal_axis = p.valence.abs() < b1 && p.arousal.abs() > b2;
            // Quadrants 0 and 2 start at a valence axis, 1 and 3 at an arousal axis.
            let first = 2 * q;
            let second = first + 1;
            Ok(match (q % 2 == 0, near_arousal_axis) {
                (true, true) | (false, false) => second,
                (true, false) | (false, true) => first,
            })
        }
    }
}

pub fn hevner_cluster_of(p: VaPoint, layout: &HevnerLayout) -> Result<&str> {
    hevner_sector(p, layout).map(|s| layout.label(s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CategoryMode {
    Quadrant,
    Hevner,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Categorization {
    /// `(id, label)` in input order.
    pub labels: Vec<(String, String)>,
    /// Every label of the mode in layout order, including empty ones.
    pub counts: Vec<(String, usize)>,
}

impl Categorization {
    pub fn count(&self, label: &str) -> usize {
        self.counts.iter().find(|(l, _)| l == label).map_or(0, |(_, c)| *c)
    }
}

/// Label names a mode can produce, in index order.
pub fn mode_labels(mode: CategoryMode, layout: &HevnerLayout) -> Vec<String> {
    match mode {
        CategoryMode::Quadrant => QuadrantLabel::ALL.iter().map(|q| q.as_str().to_string()).collect(),
        CategoryMode::Hevner => layout.labels.clone(),
    }
}

/// Label index of one point under `mode`.
pub fn category_index(p: VaPoint, mode: CategoryMode, layout: &HevnerLayout) -> Result<usize> {
    match mode {
        CategoryMode::Quadrant => Ok(quadrant_of(p).index()),
        CategoryMode::Hevner => hevner_sector(p, layout),
    }
}

pub fn categorize_dataset(
    annotations: &[(String, VaPoint)],
    mode: CategoryMode,
    layout: &HevnerLayout,
) -> Result<Categorization> {
    if mode == CategoryMode::Hevner {
        layout.validate()?;
    }
    let names = mode_labels(mode, layout);
    let mut counts = vec![0usize; names.len()];
    let mut labels = Vec::with_capacity(annotations.len());
    for (id, p) in annotations {
        let idx = category_index(*p, mode, layout).map_err(|e| e.context(format!("song {id}")))?;
        counts[idx] += 1;
        labels.push((id.clone(), names[idx].clone()));
    }
    Ok(Categorization {
        labels,
        counts: names.into_iter().zip(counts).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    use crate::rng::rng_from_seed;
    use rand::Rng as _;

    fn pt(v: f64, a: f64) -> VaPoint {
        VaPoint::new(v, a).unwrap()
    }

    #[test]
    fn rejects_points_outside_the_box() {
        assert!(VaPoint::new(1.01, 0.0).is_err());
        assert!(VaPoint::new(0.0, f64::NAN).is_err());
        assert!(VaPoint::new(-1.0, 1.0).is_ok());
    }

    #[test]
    fn quadrant_examples() {
        assert_eq!(quadrant_of(pt(0.5, 0.5)), QuadrantLabel::HappyExcited);
        assert_eq!(quadrant_of(pt(-0.3, -0.8)), QuadrantLabel::SadDepressed);
        assert_eq!(quadrant_of(pt(0.0, 0.0)), QuadrantLabel::HappyExcited);
        assert_eq!(quadrant_of(pt(-0.2, 0.0)), QuadrantLabel::AngryAfraid);
        assert_eq!(quadrant_of(pt(0.0, -0.2)), QuadrantLabel::CalmContent);
    }

    #[test]
    fn quadrant_colors_are_distinct() {
        let mut colors: Vec<_> = QuadrantLabel::ALL.iter().map(|q| q.color()).collect();
        colors.dedup();
        assert_eq!(colors.len(), 4);
    }

    #[test]
    fn sector_examples() {
        let layout = HevnerLayout::default();
        assert_eq!(hevner_sector(pt(0.9, 0.1), &layout).unwrap(), 0);
        assert_eq!(hevner_sector(pt(0.1, 0.9), &layout).unwrap(), 1);
        assert_eq!(hevner_sector(pt(-1.0, -1.0), &layout).unwrap(), 5);
        assert_eq!(hevner_sector(pt(1.0, 0.0), &layout).unwrap(), 0);
        assert_eq!(hevner_sector(pt(0.0, -1.0), &layout).unwrap(), 6);
        assert_eq!(hevner_cluster_of(pt(0.9, 0.1), &layout).unwrap(), "happy");
        assert!(hevner_sector(pt(0.0, 0.0), &layout).is_err());
    }

    #[test]
    fn negative_zero_arousal_is_on_the_positive_axis() {
        let layout = HevnerLayout::default();
        assert_eq!(hevner_sector(pt(0.5, -0.0), &layout).unwrap(), 0);
    }

    #[test]
    fn rectangular_regions_follow_the_bounds() {
        let layout = HevnerLayout {
            regions: SectorRegions::Rectangular { bounds: [[0.5, 0.5]; 4] },
            ..HevnerLayout::default()
        };
        // Excited region: 0 < V < b1 and b2 < A < 1.
        assert_eq!(hevner_sector(pt(0.2, 0.8), &layout).unwrap(), 1);
        assert_eq!(hevner_sector(pt(0.8, 0.8), &layout).unwrap(), 0);
        assert_eq!(hevner_sector(pt(-0.2, 0.8), &layout).unwrap(), 2);
        assert_eq!(hevner_sector(pt(-0.8, 0.2), &layout).unwrap(), 3);
        assert_eq!(hevner_sector(pt(-0.8, -0.2), &layout).unwrap(), 4);
        assert_eq!(hevner_sector(pt(-0.2, -0.8), &layout).unwrap(), 5);
        assert_eq!(hevner_sector(pt(0.2, -0.8), &layout).unwrap(), 6);
        assert_eq!(hevner_sector(pt(0.8, -0.2), &layout).unwrap(), 7);
        assert_eq!(hevner_sector(pt(0.0, 0.0), &layout).unwrap(), 0);
    }

    #[test]
    fn layout_needs_eight_labels() {
        let layout = HevnerLayout { labels: vec!["a".into(); 7], ..HevnerLayout::default() };
        assert!(hevner_sector(pt(0.5, 0.5), &layout).is_err());
    }

    #[test]
    fn categorize_counts() {
        let layout = HevnerLayout::default();
        let pts: Vec<(String, VaPoint)> = [(0.5, 0.5), (-0.5, 0.5), (-0.5, -0.5), (0.5, -0.5)]
            .iter()
            .enumerate()
            .map(|(i, &(v, a))| (i.to_string(), pt(v, a)))
            .collect();
        let cat = categorize_dataset(&pts, CategoryMode::Quadrant, &layout).unwrap();
        assert!(cat.counts.iter().all(|(_, c)| *c == 1));
        assert_eq!(cat.labels[2].1, "Q3_sad_depressed");

        let same: Vec<_> = (0..5).map(|i| (i.to_string(), pt(0.5, 0.5))).collect();
        let cat = categorize_dataset(&same, CategoryMode::Quadrant, &layout).unwrap();
        assert_eq!(cat.counts.iter().filter(|(_, c)| *c > 0).count(), 1);

        let cat = categorize_dataset(&[], CategoryMode::Hevner, &layout).unwrap();
        assert_eq!(cat.counts.len(), 8);
        assert!(cat.labels.is_empty());
    }

    #[test]
    fn uniform_points_spread_over_quadrants() {
        let mut rng = rng_from_seed(7);
        let pts: Vec<(String, VaPoint)> = (0..1000)
            .map(|i| (i.to_string(), pt(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0))))
            .collect();
        let cat = categorize_dataset(&pts, CategoryMode::Quadrant, &HevnerLayout::default()).unwrap();
        // Independent count by sign tests.
        let mut oracle = [0usize; 4];
        for (_, p) in &pts {
            let i = match (p.valence() < 0.0, p.arousal() < 0.0) {
                (false, false) => 0,
                (true, false) => 1,
                (true, true) => 2,
                (false, true) => 3,
            };
            oracle[i] += 1;
        }
        for (q, (_, c)) in cat.counts.iter().enumerate() {
            assert_eq!(*c, oracle[q]);
            assert!((200..=300).contains(c), "quadrant {q} has {c}");
        }
    }

    proptest! {
        #[test]
        fn sector_agrees_with_quadrant(v in -1.0f64..=1.0, a in -1.0f64..=1.0) {
            prop_assume!(v != 0.0 && a != 0.0);
            let p = pt(v, a);
            let s = hevner_sector(p, &HevnerLayout::default()).unwrap();
            prop_assert_eq!(s / 2, quadrant_of(p).index());
        }

        #[test]
        fn sector_is_scale_invariant(v in -1.0f64..=1.0, a in -1.0f64..=1.0, c in 0.01f64..=1.0) {
            prop_assume!(v != 0.0 || a != 0.0);
            let layout = HevnerLayout::default();
            let p = pt(v, a);
            let q = pt(c * v, c * a);
            prop_assert_eq!(hevner_sector(p, &layout).unwrap(), hevner_sector(q, &layout).unwrap());
        }

        #[test]
        fn every_point_gets_one_quadrant(v in -1.0f64..=1.0, a in -1.0f64..=1.0) {
            let p = pt(v, a);
            let hits = [v >= 0.0 && a >= 0.0, v < 0.0 && a >= 0.0, v < 0.0 && a < 0.0, v >= 0.0 && a < 0.0];
            prop_assert_eq!(hits.iter().filter(|h| **h).count(), 1);
            prop_assert!(hits[quadrant_of(p).index()]);
        }
    }
}
