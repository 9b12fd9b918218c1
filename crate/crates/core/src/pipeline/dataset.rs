use std::ops::Range;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{majority_vote_label, LabeledSeries, WindowSpec};
use crate::graph::{sample_inhomogeneous_er, ErParams};
use crate::matern::MaternModel;

/// A collection of independent recordings sharing one channel layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub recordings: Vec<LabeledSeries>,
}

impl Dataset {
    pub fn new(recordings: Vec<LabeledSeries>) -> Result<Self> {
        let Some(first) = recordings.first() else {
            return Err(Error::InsufficientData("dataset has no recordings".into()));
        };
        let k = first.channels();
        if recordings.iter().any(|r| r.channels() != k) {
            return Err(Error::invalid("recordings disagree on channel count"));
        }
        Ok(Dataset { recordings })
    }

    pub fn channels(&self) -> usize {
        self.recordings[0].channels()
    }

    /// Keeps `channels` in every recording.
    pub fn select_channels(&self, channels: &[usize]) -> Result<Dataset> {
        Dataset::new(
            self.recordings
                .iter()
                .map(|r| r.select_channels(channels))
                .collect::<Result<_>>()?,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    Train,
    Val,
    Test,
}

impl Part {
    pub const ALL: [Part; 3] = [Part::Train, Part::Val, Part::Test];

    pub fn name(self) -> &'static str {
        match self {
            Part::Train => "train",
            Part::Val => "val",
            Part::Test => "test",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub seed: u64,
    #[serde(default = "yes")]
    pub stratified: bool,
    /// Recordings are cut into contiguous blocks of this many samples before
    /// assignment; `None` assigns whole recordings. Windows never cross a
    /// block, so overlapping windows cannot straddle two parts.
    #[serde(default)]
    pub block_len: Option<usize>,
}

fn yes() -> bool {
    true
}

impl SplitSpec {
    pub fn new(train_frac: f64, val_frac: f64, test_frac: f64, seed: u64) -> Result<Self> {
        let s = SplitSpec {
            train_frac,
            val_frac,
            test_frac,
            seed,
            stratified: true,
            block_len: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let f = [self.train_frac, self.val_frac, self.test_frac];
        if f.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::invalid("split fractions must be positive"));
        }
        if (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("split fractions must sum to 1"));
        }
        if self.block_len == Some(0) {
            return Err(Error::invalid("block_len must be positive"));
        }
        Ok(())
    }
}

/// A contiguous piece of one recording assigned to one part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub recording: usize,
    pub range: Range<usize>,
    pub label: u8,
    pub part: Part,
}

/// Assignment of every segment to a part, plus one opaque token per part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSplit {
    pub segments: Vec<Segment>,
    pub tokens: [String; 3],
}

impl DataSplit {
    pub fn token(&self, part: Part) -> &str {
        &self.tokens[part as usize]
    }

    pub fn segments_of(&self, part: Part) -> impl Iterator<Item = &Segment> {
        self.segments.iter().filter(move |s| s.part == part)
    }

    pub fn new(dataset: &Dataset, spec: &SplitSpec) -> Result<Self> {
        spec.validate()?;
        let mut segments = Vec::new();
        for (r, rec) in dataset.recordings.iter().enumerate() {
            let len = rec.len();
            let block = spec.block_len.unwrap_or(len);
            let mut start = 0;
            while start < len {
                let end = (start + block).min(len);
                segments.push(Segment {
                    recording: r,
                    range: start..end,
                    label: majority_vote_label(&rec.labels()[start..end])?,
                    part: Part::Train,
                });
                start = end;
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let groups: Vec<Vec<usize>> = if spec.stratified {
            [0u8, 1]
                .iter()
                .map(|&c| {
                    (0..segments.len())
                        .filter(|&i| segments[i].label == c)
                        .collect()
                })
                .collect()
        } else {
            vec![(0..segments.len()).collect()]
        };
        for mut group in groups {
            group.shuffle(&mut rng);
            let n = group.len();
            let n_train = (spec.train_frac * n as f64).round() as usize;
            let n_val = ((spec.val_frac * n as f64).round() as usize).min(n - n_train.min(n));
            for (k, &i) in group.iter().enumerate() {
                segments[i].part = if k < n_train {
                    Part::Train
                } else if k < n_train + n_val {
                    Part::Val
                } else {
                    Part::Test
                };
            }
        }
        let tokens = Part::ALL.map(|p| {
            let ids: Vec<String> = segments
                .iter()
                .filter(|s| s.part == p)
                .map(|s| format!("{}.{}", s.recording, s.range.start))
                .collect();
            format!("{}#seed{}#{}", p.name(), spec.seed, ids.join(","))
        });
        Ok(DataSplit { segments, tokens })
    }
}

/// Two classes of recordings drawn from Matérn fields on two independent
/// random graphs with shared `κ, α, σ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_nodes: usize,
    pub p_edge: f64,
    pub weight_low: f64,
    pub weight_high: f64,
    pub target_rho: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub sigma: f64,
    pub recordings_per_class: usize,
    pub windows_per_class: usize,
    pub window: WindowSpec,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_nodes: 12,
            p_edge: 0.3,
            weight_low: 0.2,
            weight_high: 1.0,
            target_rho: 0.9,
            kappa: 1.0,
            alpha: 1.0,
            sigma: 1.0,
            recordings_per_class: 20,
            windows_per_class: 400,
            window: WindowSpec {
                length: 64,
                overlap: 0.75,
            },
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub dataset: Dataset,
    pub models: [MaternModel; 2],
}

fn class_model(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Result<MaternModel> {
    let params = ErParams {
        n_obs: spec.n_nodes,
        n_lat: 0,
        p_obs: spec.p_edge,
        p_lat: 0.0,
        p_cross: 0.0,
        weight_low: spec.weight_low,
        weight_high: spec.weight_high,
        target_rho: spec.target_rho,
    };
    for _ in 0..256 {
        let er = sample_inhomogeneous_er(&params, rng.random())?;
        if er.graph.edges().is_empty() {
            continue;
        }
        match MaternModel::new(er.graph, spec.kappa, spec.alpha, spec.sigma) {
            Ok(m) if m.abar()?.valid => return Ok(m),
            _ => continue,
        }
    }
    Err(Error::InsufficientData(
        "could not draw a valid class graph in 256 attempts".into(),
    ))
}

/// Recording `r` of class `c` holds enough samples for
/// `windows_per_class / recordings_per_class` (rounded up) windows.
pub fn synthetic_two_class(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.window.validate()?;
    if spec.recordings_per_class == 0 || spec.windows_per_class == 0 {
        return Err(Error::invalid(
            "need at least one recording and window per class",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let models = [class_model(spec, &mut rng)?, class_model(spec, &mut rng)?];
    let per_rec = spec.windows_per_class.div_ceil(spec.recordings_per_class);
    let len = spec.window.length + (per_rec - 1) * spec.window.stride();
    let mut recordings = Vec::with_capacity(2 * spec.recordings_per_class);
    for _ in 0..spec.recordings_per_class {
        for (c, model) in models.iter().enumerate() {
            let samples = model.sample_field(len, rng.random())?;
            recordings.push(LabeledSeries::new(samples, vec![c as u8; len])?);
        }
    }
    Ok(SyntheticData {
        dataset: Dataset::new(recordings)?,
        models,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn toy_dataset(recs: usize) -> Dataset {
        Dataset::new(
            (0..recs)
                .map(|r| {
                    LabeledSeries::new(
                        DMatrix::from_element(40, 2, r as f64),
                        vec![(r % 2) as u8; 40],
                    )
                    .unwrap()
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn split_partitions_every_segment() {
        let ds = toy_dataset(20);
        let spec = SplitSpec::new(0.6, 0.2, 0.2, 3).unwrap();
        let split = DataSplit::new(&ds, &spec).unwrap();
        assert_eq!(split.segments.len(), 20);
        for c in 0..2u8 {
            let count = |p| split.segments_of(p).filter(|s| s.label == c).count();
            assert_eq!(
                (count(Part::Train), count(Part::Val), count(Part::Test)),
                (6, 2, 2)
            );
        }
        assert_eq!(split, DataSplit::new(&ds, &spec).unwrap());
        let toks: std::collections::HashSet<_> = split.tokens.iter().collect();
        assert_eq!(toks.len(), 3);
    }

    #[test]
    fn blocks_cut_recordings() {
        let ds = toy_dataset(4);
        let mut spec = SplitSpec::new(0.5, 0.25, 0.25, 1).unwrap();
        spec.block_len = Some(15);
        let split = DataSplit::new(&ds, &spec).unwrap();
        assert_eq!(split.segments.len(), 12);
        assert_eq!(split.segments[2].range, 30..40);
    }

    #[test]
    fn bad_fractions() {
        assert!(SplitSpec::new(0.5, 0.5, 0.0, 0).is_err());
        assert!(SplitSpec::new(0.5, 0.3, 0.3, 0).is_err());
    }

    #[test]
    fn synthetic_data_shape() {
        let spec = SyntheticSpec {
            recordings_per_class: 4,
            windows_per_class: 40,
            ..SyntheticSpec::default()
        };
        let data = synthetic_two_class(&spec).unwrap();
        assert_eq!(data.dataset.recordings.len(), 8);
        assert_eq!(data.dataset.channels(), 12);
        let len = 64 + 9 * 16;
        assert!(data.dataset.recordings.iter().all(|r| r.len() == len));
        assert_ne!(data.models[0].graph(), data.models[1].graph());
        let again = synthetic_two_class(&spec).unwrap();
        assert_eq!(again.dataset, data.dataset);
    }
}
