//! Reference phase labels and training/test layouts.
//!
//! ANNNI labels come from the approximate transition curves of the model
//! (Ising, Kosterlitz-Thouless and antiphase lines). Cluster labels on the
//! `h = 1` training line come from its known phase segments.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::Model;

/// Default parameter domain of each model as `((k_min, k_max), (h_min, h_max))`.
pub fn model_domain(model: Model) -> Region {
    match model {
        Model::Annni => Region::new((0.0, 1.0), (0.0, 2.0)),
        Model::Cluster => Region::new((-2.0, 1.0), (0.0, 1.6)),
    }
}

/// Axis-aligned rectangle in `(k, h)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub k: (f64, f64),
    pub h: (f64, f64),
}

impl Region {
    pub fn new(k: (f64, f64), h: (f64, f64)) -> Self {
        Self { k, h }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo <= hi;
        if ok(self.k) && ok(self.h) {
            Ok(())
        } else {
            Err(Error::EmptyRegion)
        }
    }

    pub fn contains(&self, k: f64, h: f64) -> bool {
        const SLACK: f64 = 1e-12;
        k >= self.k.0 - SLACK && k <= self.k.1 + SLACK && h >= self.h.0 - SLACK && h <= self.h.1 + SLACK
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseLabel {
    Ferromagnetic,
    Paramagnetic,
    Antiphase,
    Floating,
    Spt,
    Antiferromagnetic,
}

impl PhaseLabel {
    pub fn all(model: Model) -> &'static [PhaseLabel] {
        use PhaseLabel::*;
        match model {
            Model::Annni => &[Ferromagnetic, Paramagnetic, Antiphase, Floating],
            Model::Cluster => &[Spt, Paramagnetic, Antiferromagnetic],
        }
    }

    /// Position in [`PhaseLabel::all`], used as the SVM class id.
    pub fn class_id(self, model: Model) -> Result<usize> {
        Self::all(model)
            .iter()
            .position(|&l| l == self)
            .ok_or_else(|| Error::InvalidParams(format!("label {self} does not belong to the {model} model")))
    }

    pub fn from_class_id(model: Model, id: usize) -> Result<PhaseLabel> {
        Self::all(model)
            .get(id)
            .copied()
            .ok_or_else(|| Error::InvalidParams(format!("no class {id} for the {model} model")))
    }

    pub fn name(self) -> &'static str {
        match self {
            PhaseLabel::Ferromagnetic => "ferromagnetic",
            PhaseLabel::Paramagnetic => "paramagnetic",
            PhaseLabel::Antiphase => "antiphase",
            PhaseLabel::Floating => "floating",
            PhaseLabel::Spt => "spt",
            PhaseLabel::Antiferromagnetic => "antiferromagnetic",
        }
    }
}

impl fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PhaseLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        use PhaseLabel::*;
        [Ferromagnetic, Paramagnetic, Antiphase, Floating, Spt, Antiferromagnetic]
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| Error::format("phase label", format!("unknown label {s:?}")))
    }
}

/// Ising (ferro/para) transition field, defined for `0 <= k < 0.5`.
///
/// Written as `2 (1 - 2k) / (1 + sqrt(x))` with `x = (1 - 3k + 4k^2) / (1 - k)`,
/// which is the usual `(1-k)/k (1 - sqrt(x))` with the cancellation removed,
/// so `k = 0` gives 1 directly.
pub fn ising_line(k: f64) -> Option<f64> {
    if !(0.0..0.5).contains(&k) {
        return None;
    }
    let x = (1.0 - 3.0 * k + 4.0 * k * k) / (1.0 - k);
    Some(2.0 * (1.0 - 2.0 * k) / (1.0 + x.sqrt()))
}

/// Kosterlitz-Thouless (floating/para) line, used for `0.5 <= k <= 1`.
pub fn kt_line(k: f64) -> Option<f64> {
    (0.5..=1.0).contains(&k).then(|| 1.05 * ((k - 0.5) * (k - 0.1)).sqrt())
}

/// Antiphase/floating line, used for `0.5 <= k <= 1`.
pub fn antiphase_line(k: f64) -> Option<f64> {
    (0.5..=1.0).contains(&k).then(|| 1.05 * (k - 0.5))
}

/// The three ANNNI transition fields at `k` (each `None` where undefined).
pub fn annni_transition_lines(k: f64) -> Result<(Option<f64>, Option<f64>, Option<f64>)> {
    if !(0.0..=1.0).contains(&k) {
        return Err(Error::InvalidParams(format!("k = {k} outside [0, 1]")));
    }
    Ok((ising_line(k), kt_line(k), antiphase_line(k)))
}

/// Reference ANNNI phase; points exactly on a curve take the higher-`h` phase.
pub fn annni_label(k: f64, h: f64) -> Result<PhaseLabel> {
    if !(0.0..=1.0).contains(&k) || !(0.0..=2.0).contains(&h) {
        return Err(Error::InvalidParams(format!("({k}, {h}) outside the ANNNI domain [0,1]x[0,2]")));
    }
    let (hi, kt, ap) = annni_transition_lines(k)?;
    Ok(if let Some(hi) = hi {
        if h < hi {
            PhaseLabel::Ferromagnetic
        } else {
            PhaseLabel::Paramagnetic
        }
    } else {
        let (kt, ap) = (kt.unwrap_or(0.0), ap.unwrap_or(0.0));
        if h < ap {
            PhaseLabel::Antiphase
        } else if h < kt {
            PhaseLabel::Floating
        } else {
            PhaseLabel::Paramagnetic
        }
    })
}

/// Known phase segments of the cluster model along `h = 1`.
pub fn cluster_label_line(k: f64) -> PhaseLabel {
    if k > 0.0 {
        PhaseLabel::Paramagnetic
    } else if k >= -1.15 {
        PhaseLabel::Spt
    } else {
        PhaseLabel::Antiferromagnetic
    }
}

fn curve_distance(k: f64, h: f64, lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    const SAMPLES: usize = 2000;
    let dist = |t: f64| (t - k).hypot(f(t) - h);
    let step = (hi - lo) / SAMPLES as f64;
    let mut best_t = lo;
    let mut best = dist(lo);
    for i in 1..=SAMPLES {
        let t = lo + step * i as f64;
        let d = dist(t);
        if d < best {
            best = d;
            best_t = t;
        }
    }
    // golden-section refinement inside the bracketing cell
    let (mut a, mut b) = ((best_t - step).max(lo), (best_t + step).min(hi));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if dist(c) < dist(d) {
            b = d;
        } else {
            a = c;
        }
    }
    best.min(dist(0.5 * (a + b)))
}

/// Euclidean distance in `(k, h)` from the nearest ANNNI transition curve.
pub fn annni_boundary_distance(k: f64, h: f64) -> f64 {
    let ising = curve_distance(k, h, 0.0, 0.5, |t| ising_line(t.min(0.5 - 1e-15)).unwrap_or(0.0));
    let kt = curve_distance(k, h, 0.5, 1.0, |t| kt_line(t).unwrap_or(0.0));
    let ap = curve_distance(k, h, 0.5, 1.0, |t| antiphase_line(t).unwrap_or(0.0));
    ising.min(kt).min(ap)
}

/// Evenly spaced values; `centered` places them at cell midpoints instead of
/// including both endpoints.
pub fn axis(lo: f64, hi: f64, count: usize, centered: bool) -> Vec<f64> {
    match (count, centered) {
        (0, _) => Vec::new(),
        (1, _) => vec![0.5 * (lo + hi)],
        (n, true) => (0..n).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64).collect(),
        (n, false) => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LayoutSpec {
    /// `counts = (k points, h points)`; points ordered with `k` outermost.
    Grid {
        region: Region,
        counts: (usize, usize),
        #[serde(default)]
        centered: bool,
    },
    Line {
        start: (f64, f64),
        end: (f64, f64),
        points: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledPoint {
    pub k: f64,
    pub h: f64,
    pub label: PhaseLabel,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingLayout {
    pub model: Model,
    pub spec: LayoutSpec,
    pub points: Vec<LabeledPoint>,
}

/// Label for a training point. Cluster points must lie on `h = 1`.
pub fn reference_label(model: Model, k: f64, h: f64) -> Result<PhaseLabel> {
    match model {
        Model::Annni => annni_label(k, h),
        Model::Cluster if (h - 1.0).abs() < 1e-12 => Ok(cluster_label_line(k)),
        Model::Cluster => Err(Error::InvalidParams(format!(
            "no reference cluster label off the h = 1 line (h = {h})"
        ))),
    }
}

pub fn layout_points(spec: &LayoutSpec) -> Result<Vec<(f64, f64)>> {
    let pts: Vec<(f64, f64)> = match *spec {
        LayoutSpec::Grid {
            region,
            counts,
            centered,
        } => {
            region.validate()?;
            let ks = axis(region.k.0, region.k.1, counts.0, centered);
            let hs = axis(region.h.0, region.h.1, counts.1, centered);
            ks.iter().flat_map(|&k| hs.iter().map(move |&h| (k, h))).collect()
        }
        LayoutSpec::Line { start, end, points } => axis(0.0, 1.0, points, false)
            .into_iter()
            .map(|t| (start.0 + t * (end.0 - start.0), start.1 + t * (end.1 - start.1)))
            .collect(),
    };
    if pts.is_empty() {
        return Err(Error::InvalidParams("layout has no points".into()));
    }
    Ok(pts)
}

/// Points of `spec` with reference labels attached.
pub fn make_layout(model: Model, spec: &LayoutSpec) -> Result<TrainingLayout> {
    let domain = model_domain(model);
    let mut points = Vec::new();
    for (k, h) in layout_points(spec)? {
        if !domain.contains(k, h) {
            return Err(Error::InvalidParams(format!("layout point ({k}, {h}) outside the {model} domain")));
        }
        points.push(LabeledPoint {
            k,
            h,
            label: reference_label(model, k, h)?,
        });
    }
    Ok(TrainingLayout {
        model,
        spec: spec.clone(),
        points,
    })
}

/// CSV with columns `k,h,label,sector_policy`.
pub fn layout_to_csv(layout: &TrainingLayout, sector_policy: &str) -> String {
    let mut out = String::from("k,h,label,sector_policy\n");
    for p in &layout.points {
        out.push_str(&format!("{:?},{:?},{},{}\n", p.k, p.h, p.label, sector_policy));
    }
    out
}

/// Inverse of [`layout_to_csv`]: the points and the sector policy column.
pub fn layout_from_csv(text: &str) -> Result<(Vec<LabeledPoint>, Vec<String>)> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("k,h,label,sector_policy") {
        return Err(Error::format("layout CSV", "missing header k,h,label,sector_policy"));
    }
    let mut points = Vec::new();
    let mut policies = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 4 {
            return Err(Error::format("layout CSV", format!("row {}: expected 4 columns", i + 1)));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::format("layout CSV", format!("row {}: bad number {s:?}", i + 1)))
        };
        points.push(LabeledPoint {
            k: num(cols[0])?,
            h: num(cols[1])?,
            label: cols[2].parse()?,
        });
        policies.push(cols[3].to_string());
    }
    Ok((points, policies))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ising_line_values() {
        let expect = 3.0 * (1.0 - (2.0f64 / 3.0).sqrt());
        assert!((ising_line(0.25).unwrap() - 0.550510257216822).abs() < 1e-12);
        assert!((ising_line(0.25).unwrap() - expect).abs() < 1e-14);
        assert_eq!(ising_line(0.0), Some(1.0));
        assert!((ising_line(1e-6).unwrap() - 1.0).abs() < 1e-5);
        assert!((ising_line(0.2).unwrap() - 0.653).abs() < 1e-3);
        assert_eq!(ising_line(0.5), None);
    }

    #[test]
    fn kt_and_antiphase_values() {
        assert_eq!(antiphase_line(0.5), Some(0.0));
        assert!((kt_line(0.7).unwrap() - 0.363731).abs() < 1e-6);
        assert!((antiphase_line(0.7).unwrap() - 0.21).abs() < 1e-12);
        assert!(annni_transition_lines(1.2).is_err());
    }

    #[test]
    fn annni_examples() {
        assert_eq!(annni_label(0.2, 0.1).unwrap(), PhaseLabel::Ferromagnetic);
        assert_eq!(annni_label(0.7, 0.3).unwrap(), PhaseLabel::Floating);
        assert_eq!(annni_label(0.3, 1.5).unwrap(), PhaseLabel::Paramagnetic);
        assert_eq!(annni_label(0.9, 0.1).unwrap(), PhaseLabel::Antiphase);
        assert_eq!(annni_label(0.5, 0.0).unwrap(), PhaseLabel::Paramagnetic);
        assert!(annni_label(-0.1, 0.5).is_err());
        assert!(annni_label(0.5, 2.5).is_err());
    }

    #[test]
    fn cluster_segments() {
        assert_eq!(cluster_label_line(-0.5), PhaseLabel::Spt);
        assert_eq!(cluster_label_line(0.5), PhaseLabel::Paramagnetic);
        assert_eq!(cluster_label_line(-1.5), PhaseLabel::Antiferromagnetic);
        assert_eq!(cluster_label_line(0.0), PhaseLabel::Spt);
        assert_eq!(cluster_label_line(-1.15), PhaseLabel::Spt);
    }

    #[test]
    fn line_layout_crosses_all_annni_phases() {
        let spec = LayoutSpec::Line {
            start: (0.0, 0.25),
            end: (1.0, 0.25),
            points: 20,
        };
        let layout = make_layout(Model::Annni, &spec).unwrap();
        assert_eq!(layout.points.len(), 20);
        let mut seen: Vec<PhaseLabel> = layout.points.iter().map(|p| p.label).collect();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 4);
    }

    #[test]
    fn cluster_line_layout() {
        let spec = LayoutSpec::Line {
            start: (-2.0, 1.0),
            end: (1.0, 1.0),
            points: 50,
        };
        let layout = make_layout(Model::Cluster, &spec).unwrap();
        assert_eq!(layout.points.len(), 50);
        assert_eq!(layout.points[0].label, PhaseLabel::Antiferromagnetic);
        assert_eq!(layout.points[49].label, PhaseLabel::Paramagnetic);
        let off = LayoutSpec::Line {
            start: (-2.0, 0.5),
            end: (1.0, 0.5),
            points: 5,
        };
        assert!(make_layout(Model::Cluster, &off).is_err());
    }

    #[test]
    fn centered_grid_has_every_annni_phase() {
        let spec = LayoutSpec::Grid {
            region: model_domain(Model::Annni),
            counts: (6, 5),
            centered: true,
        };
        let layout = make_layout(Model::Annni, &spec).unwrap();
        assert_eq!(layout.points.len(), 30);
        for l in PhaseLabel::all(Model::Annni) {
            assert!(layout.points.iter().any(|p| p.label == *l), "missing {l}");
        }
    }

    #[test]
    fn layout_errors() {
        let empty = LayoutSpec::Line {
            start: (0.0, 0.0),
            end: (1.0, 0.0),
            points: 0,
        };
        assert!(make_layout(Model::Annni, &empty).is_err());
        let outside = LayoutSpec::Line {
            start: (0.0, 0.0),
            end: (1.5, 0.0),
            points: 3,
        };
        assert!(make_layout(Model::Annni, &outside).is_err());
    }

    #[test]
    fn boundary_distance_examples() {
        assert!(annni_boundary_distance(0.25, 0.550510257216822) < 1e-9);
        assert!(annni_boundary_distance(0.7, 0.21) < 1e-9);
        // far corner of the paramagnet
        let d = annni_boundary_distance(0.0, 2.0);
        assert!((d - 1.0).abs() < 1e-6, "{d}");
    }

    #[test]
    fn csv_round_trip() {
        let spec = LayoutSpec::Grid {
            region: model_domain(Model::Annni),
            counts: (3, 2),
            centered: true,
        };
        let layout = make_layout(Model::Annni, &spec).unwrap();
        let text = layout_to_csv(&layout, "ground_space");
        let (points, policies) = layout_from_csv(&text).unwrap();
        assert_eq!(points, layout.points);
        assert!(policies.iter().all(|p| p == "ground_space"));
    }

    proptest! {
        #[test]
        fn floating_region_is_non_empty(k in 0.5f64..=1.0) {
            prop_assert!(kt_line(k).unwrap() >= antiphase_line(k).unwrap());
        }

        #[test]
        fn labels_change_across_each_curve(k in 0.01f64..0.99) {
            let eps = 1e-9;
            let curves: Vec<f64> = if k < 0.5 {
                vec![ising_line(k).unwrap()]
            } else {
                vec![antiphase_line(k).unwrap(), kt_line(k).unwrap()]
            };
            for c in curves {
                if c - eps < 0.0 || (k - 0.5).abs() < 1e-3 {
                    continue;
                }
                prop_assert_ne!(annni_label(k, c - eps).unwrap(), annni_label(k, c + eps).unwrap());
                prop_assert_eq!(annni_label(k, c).unwrap(), annni_label(k, c + eps).unwrap());
            }
        }

        #[test]
        fn labels_are_seed_free_and_inside_the_domain(k in 0.0f64..=1.0, h in 0.0f64..=2.0) {
            let l = annni_label(k, h).unwrap();
            prop_assert!(PhaseLabel::all(Model::Annni).contains(&l));
            prop_assert_eq!(l, annni_label(k, h).unwrap());
        }
    }
}
